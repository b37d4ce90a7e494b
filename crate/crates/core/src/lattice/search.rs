//! Search for the monic integer filter minimizing `i^H K̃_n i`.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::modular::serialize_gauss;
use crate::dsp::{GaussInt, IntFilter, Poly};
use crate::error::{Error, Result};
use crate::lattice::enumerate::{closest_with_fixed, shortest_vector, DEFAULT_BUDGET};
use crate::lattice::gram::{autocorr, quad_form, GramMatrix, GramSpec};
use crate::lattice::lll::{lll_reduce, DEFAULT_DELTA};
use crate::Mode;

/// Relative tolerance under which two noise variances count as tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct SearchOptions {
    /// Lovász parameter for LLL.
    pub delta: f64,
    /// Lattices of at most this many real dimensions are also searched
    /// exhaustively for the best monic vector. Zero gives pure LLL.
    pub exhaustive_dims: usize,
    /// Add `e_1` (the trivial filter `I = 1`) to every candidate pool.
    pub include_unit_vector: bool,
    /// Search `H'` instead when `H(D) = H'(D^d)` and upsample the result.
    pub decimate: bool,
    pub budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            delta: DEFAULT_DELTA,
            exhaustive_dims: 8,
            include_unit_vector: true,
            decimate: true,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl SearchOptions {
    pub fn lll_only() -> Self {
        SearchOptions { exhaustive_dims: 0, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    Lll,
    UnitVector,
    Enumeration,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Candidate {
    /// Lattice dimension (filter length bound) the candidate came from.
    pub n: usize,
    pub filter: IntFilter,
    pub sigma2: f64,
    pub source: CandidateSource,
}

#[derive(Clone, Debug, Serialize)]
pub struct NonMonicVector {
    pub n: usize,
    #[serde(serialize_with = "serialize_gauss")]
    pub vector: Vec<GaussInt>,
    pub sigma2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FilterSearchResult {
    pub filter: IntFilter,
    pub sigma2: f64,
    /// Length of the returned filter.
    pub n_used: usize,
    pub mode: Mode,
    /// Sparsity factor `d` exploited by the search (1 when none).
    pub decimation: usize,
    /// Largest `n` whose lattice was searched exhaustively (0 for none).
    pub exhaustive_up_to: usize,
    #[serde(rename = "candidates")]
    pub all_candidates: Vec<Candidate>,
    /// Set when some non-monic vector beats every monic candidate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_non_monic: Option<NonMonicVector>,
}

/// `max(p + 1, 2p + 4)` where `p` is the channel memory.
pub fn default_n_max(channel: &Poly) -> usize {
    let p = channel.strip_delay().1.degree();
    (p + 1).max(2 * p + 4)
}

/// `σ² = i^H K̃_n i` with `n = len(i)`.
pub fn noise_enhancement(channel: &Poly, i: &IntFilter, mode: Mode, snr: f64) -> Result<f64> {
    let spec = GramSpec::new(channel.clone(), i.len(), mode, snr)?;
    let k = autocorr(&spec)?;
    Ok(quad_form(&k, i.coeffs()))
}

pub fn select_filter(channel: &Poly, n_max: usize, mode: Mode, snr: f64) -> Result<FilterSearchResult> {
    select_filter_with(channel, n_max, mode, snr, &SearchOptions::default())
}

fn lex_key(v: &[GaussInt]) -> Vec<(i64, i64)> {
    v.iter().map(|c| (c.re, c.im)).collect()
}

fn rank(a: (f64, &[GaussInt]), b: (f64, &[GaussInt])) -> Ordering {
    let tol = TIE_TOL * a.0.abs().max(b.0.abs());
    if (a.0 - b.0).abs() > tol {
        return a.0.total_cmp(&b.0);
    }
    a.1.len()
        .cmp(&b.1.len())
        .then_with(|| lex_key(a.1).cmp(&lex_key(b.1)))
}

enum Normalized {
    Monic(IntFilter),
    NonMonic(Vec<GaussInt>),
}

/// Shifts out leading zeros (multiplication by a power of `D` leaves `σ²`
/// unchanged), trims trailing zeros and scales by a unit so the lead is 1.
fn normalize(v: &[GaussInt]) -> Option<Normalized> {
    let zero = GaussInt::new(0, 0);
    let first = v.iter().position(|c| *c != zero)?;
    let last = v.iter().rposition(|c| *c != zero)?;
    let mut w: Vec<GaussInt> = v[first..=last].to_vec();
    let lead = w[0];
    let unit_inv = match (lead.re, lead.im) {
        (1, 0) => GaussInt::new(1, 0),
        (-1, 0) => GaussInt::new(-1, 0),
        (0, 1) => GaussInt::new(0, -1),
        (0, -1) => GaussInt::new(0, 1),
        _ => {
            if lead.re < 0 || (lead.re == 0 && lead.im < 0) {
                w.iter_mut().for_each(|c| *c = -*c);
            }
            return Some(Normalized::NonMonic(w));
        }
    };
    w.iter_mut().for_each(|c| *c *= unit_inv);
    Some(Normalized::Monic(IntFilter::from_gaussian(w).expect("lead is one")))
}

struct PerN {
    candidates: Vec<Candidate>,
    non_monic: Option<NonMonicVector>,
    exhaustive: bool,
}

fn search_n(k: &[num_complex::Complex64], n: usize, complex: bool, opts: &SearchOptions) -> Result<PerN> {
    let gram = GramMatrix::from_autocorr(k, n, complex)?;
    let red = lll_reduce(&gram.factor, opts.delta)?;
    let mut out = PerN { candidates: Vec::new(), non_monic: None, exhaustive: false };

    let push = |out: &mut PerN, raw: &[GaussInt], source: CandidateSource| {
        let Some(norm) = normalize(raw) else { return };
        match norm {
            Normalized::Monic(filter) => {
                if out.candidates.iter().any(|c| c.filter == filter) {
                    return;
                }
                let sigma2 = quad_form(k, filter.coeffs());
                out.candidates.push(Candidate { n, filter, sigma2, source });
            }
            Normalized::NonMonic(vector) => {
                let sigma2 = quad_form(k, &vector);
                let better = out
                    .non_monic
                    .as_ref()
                    .is_none_or(|b| rank((sigma2, &vector), (b.sigma2, &b.vector)) == Ordering::Less);
                if better {
                    out.non_monic = Some(NonMonicVector { n, vector, sigma2 });
                }
            }
        }
    };

    for j in 0..gram.dim() {
        push(&mut out, &gram.unembed(&red.coords(j)), CandidateSource::Lll);
    }
    if opts.include_unit_vector {
        let mut e1 = vec![GaussInt::new(0, 0); n];
        e1[0] = GaussInt::new(1, 0);
        push(&mut out, &e1, CandidateSource::UnitVector);
    }

    if gram.dim() <= opts.exhaustive_dims {
        let incumbent = out
            .candidates
            .iter()
            .map(|c| c.sigma2)
            .fold(k[0].re, f64::min);
        let mut fixed = vec![(0usize, 1i64)];
        if complex {
            fixed.push((n, 0));
        }
        let exact = closest_with_fixed(&gram.factor, &fixed, incumbent * (1.0 + 1e-6), opts.budget);
        let svp = shortest_vector(&gram.factor, opts.budget);
        match (exact, svp) {
            (Ok(best), Ok((v, _))) => {
                if let Some((u, _)) = best {
                    push(&mut out, &gram.unembed(&u), CandidateSource::Enumeration);
                }
                push(&mut out, &gram.unembed(&v), CandidateSource::Enumeration);
                out.exhaustive = true;
            }
            (Err(Error::BudgetExceeded { .. }), _) | (_, Err(Error::BudgetExceeded { .. })) => {}
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok(out)
}

pub fn select_filter_with(
    channel: &Poly,
    n_max: usize,
    mode: Mode,
    snr: f64,
    opts: &SearchOptions,
) -> Result<FilterSearchResult> {
    if n_max == 0 {
        return Err(Error::input("n_max must be at least 1"));
    }
    let (_, core) = channel.strip_delay();
    let d = if opts.decimate { core.decimation_factor() } else { 1 };
    if d > 1 {
        let inner = SearchOptions { decimate: false, ..opts.clone() };
        let n_inner = (n_max - 1) / d + 1;
        let mut res = select_filter_with(&core.decimate(d), n_inner, mode, snr, &inner)?;
        res.filter = res.filter.upsample(d);
        res.n_used = res.filter.len();
        res.decimation = d;
        res.exhaustive_up_to = if res.exhaustive_up_to > 0 { d * (res.exhaustive_up_to - 1) + 1 } else { 0 };
        for c in res.all_candidates.iter_mut() {
            c.filter = c.filter.upsample(d);
            c.n = d * (c.n - 1) + 1;
        }
        if let Some(nm) = res.best_non_monic.as_mut() {
            let mut up = vec![GaussInt::new(0, 0); d * (nm.vector.len() - 1) + 1];
            for (j, c) in nm.vector.iter().enumerate() {
                up[j * d] = *c;
            }
            nm.vector = up;
            nm.n = d * (nm.n - 1) + 1;
        }
        return Ok(res);
    }

    let spec = GramSpec::new(core.clone(), n_max, mode, snr)?;
    let k = autocorr(&spec)?;
    let complex = !core.is_real();
    let per_n: Vec<PerN> = (1..=n_max)
        .into_par_iter()
        .map(|n| search_n(&k, n, complex, opts))
        .collect::<Result<_>>()?;

    let exhaustive_up_to = per_n
        .iter()
        .enumerate()
        .filter(|(_, p)| p.exhaustive)
        .map(|(i, _)| i + 1)
        .max()
        .unwrap_or(0);
    let mut all_candidates = Vec::new();
    let mut non_monic: Option<NonMonicVector> = None;
    for p in per_n {
        all_candidates.extend(p.candidates);
        if let Some(nm) = p.non_monic {
            let better = non_monic
                .as_ref()
                .is_none_or(|b| rank((nm.sigma2, &nm.vector), (b.sigma2, &b.vector)) == Ordering::Less);
            if better {
                non_monic = Some(nm);
            }
        }
    }

    let best = all_candidates
        .iter()
        .min_by(|a, b| rank((a.sigma2, a.filter.coeffs()), (b.sigma2, b.filter.coeffs())));
    let Some(best) = best.cloned() else {
        let nm = non_monic.ok_or_else(|| Error::numeric("filter search produced no candidates"))?;
        return Err(Error::NonMonicOptimum {
            best: nm.vector.iter().map(|c| [c.re, c.im]).collect(),
            sigma2: nm.sigma2,
        });
    };
    let best_non_monic =
        non_monic.filter(|nm| nm.sigma2 < best.sigma2 * (1.0 - TIE_TOL));
    Ok(FilterSearchResult {
        n_used: best.filter.len(),
        filter: best.filter,
        sigma2: best.sigma2,
        mode,
        decimation: 1,
        exhaustive_up_to,
        all_candidates,
        best_non_monic,
    })
}
