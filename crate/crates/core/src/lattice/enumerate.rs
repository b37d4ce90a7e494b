//! Exhaustive lattice enumeration (Schnorr-Euchner order inside a
//! Fincke-Pohst ellipsoid) with a node budget.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::lll::{lll_reduce, DEFAULT_DELTA};

pub const DEFAULT_BUDGET: u64 = 20_000_000;

/// Upper-triangular `R` with `‖F u‖ = ‖R u‖`.
fn triangular(f: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = f.clone().qr();
    qr.r()
}

struct Search<'a> {
    r: &'a DMatrix<f64>,
    y: &'a [f64],
    exclude_zero: bool,
    budget: u64,
    nodes: u64,
    best: Option<(Vec<i64>, f64)>,
    radius2: f64,
    u: Vec<i64>,
}

impl Search<'_> {
    fn center(&self, k: usize) -> f64 {
        let m = self.r.ncols();
        let mut acc = self.y[k];
        for j in k + 1..m {
            acc -= self.r[(k, j)] * self.u[j] as f64;
        }
        acc / self.r[(k, k)]
    }

    fn descend(&mut self, k: usize, partial: f64) -> Result<()> {
        let c = self.center(k);
        let start = c.round() as i64;
        if !self.visit(k, start, c, partial)? {
            return Ok(());
        }
        // each side moves away from the center, so its distance only grows
        let (mut up, mut down) = (true, true);
        let mut offset = 1i64;
        while up || down {
            if up {
                up = self.visit(k, start + offset, c, partial)?;
            }
            if down {
                down = self.visit(k, start - offset, c, partial)?;
            }
            offset += 1;
        }
        Ok(())
    }

    fn visit(&mut self, k: usize, x: i64, c: f64, partial: f64) -> Result<bool> {
        let d = partial + (self.r[(k, k)] * (x as f64 - c)).powi(2);
        if d > self.radius2 {
            return Ok(false);
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        self.u[k] = x;
        if k > 0 {
            self.descend(k - 1, d)?;
        } else if !(self.exclude_zero && self.u.iter().all(|&v| v == 0)) {
            let better = self.best.as_ref().is_none_or(|(_, b)| d < *b);
            if better {
                self.best = Some((self.u.clone(), d));
                self.radius2 = d;
            }
        }
        Ok(true)
    }
}

/// Minimizes `‖R u - y‖²` over integer `u` inside `radius2`; `R` upper
/// triangular with nonzero diagonal.
fn enumerate(
    r: &DMatrix<f64>,
    y: &[f64],
    radius2: f64,
    exclude_zero: bool,
    budget: u64,
) -> Result<Option<(Vec<i64>, f64)>> {
    let m = r.ncols();
    if (0..m).any(|k| !(r[(k, k)].abs() > 0.0)) {
        return Err(Error::numeric("enumeration basis is singular"));
    }
    let mut s = Search {
        r,
        y,
        exclude_zero,
        budget,
        nodes: 0,
        best: None,
        radius2,
        u: vec![0; m],
    };
    if m > 0 {
        s.descend(m - 1, 0.0)?;
    }
    Ok(s.best)
}

/// Shortest nonzero vector of the lattice spanned by the columns of `f`,
/// among integer `u` with `‖F u‖ ≤ bound`. Returns the coordinates `u`.
///
/// Runs directly on `f` without any prior reduction so that it stays an
/// independent check on [`lll_reduce`].
pub fn svp_bruteforce(f: &DMatrix<f64>, bound: f64) -> Result<Vec<i64>> {
    svp_bruteforce_with_budget(f, bound, DEFAULT_BUDGET)
}

pub fn svp_bruteforce_with_budget(f: &DMatrix<f64>, bound: f64, budget: u64) -> Result<Vec<i64>> {
    if !(bound > 0.0) {
        return Err(Error::input(format!("search radius must be positive, got {bound}")));
    }
    let r = triangular(f);
    let y = vec![0.0; f.ncols()];
    let radius2 = bound * bound * (1.0 + 1e-12);
    match enumerate(&r, &y, radius2, true, budget)? {
        Some((u, _)) => Ok(u),
        None => Err(Error::input(format!("no nonzero lattice vector within radius {bound}"))),
    }
}

/// Shortest vector via LLL followed by enumeration in the reduced basis.
pub fn shortest_vector(f: &DMatrix<f64>, budget: u64) -> Result<(Vec<i64>, f64)> {
    let red = lll_reduce(f, DEFAULT_DELTA)?;
    let r = triangular(&red.basis);
    let radius2 = red.basis.column(0).norm_squared() * (1.0 + 1e-9);
    let y = vec![0.0; f.ncols()];
    let (v, d) = enumerate(&r, &y, radius2, true, budget)?
        .ok_or_else(|| Error::InvariantViolation("enumeration lost the first basis vector".into()))?;
    let u = red.unimodular.map(|t| t as i128);
    let coords: Vec<i64> = (0..u.nrows())
        .map(|row| {
            let s: i128 = (0..u.ncols()).map(|c| u[(row, c)] * v[c] as i128).sum();
            i64::try_from(s).map_err(|_| Error::numeric("coordinate overflow"))
        })
        .collect::<Result<_>>()?;
    Ok((coords, d))
}

/// Minimizes `‖F u‖²` over integer `u` with the coordinates in `fixed` pinned
/// to the given values, searching inside `radius2`. Returns `None` when
/// nothing lies within the radius.
pub fn closest_with_fixed(
    f: &DMatrix<f64>,
    fixed: &[(usize, i64)],
    radius2: f64,
    budget: u64,
) -> Result<Option<(Vec<i64>, f64)>> {
    let m = f.ncols();
    let is_fixed = |c: usize| fixed.iter().any(|&(i, _)| i == c);
    let free: Vec<usize> = (0..m).filter(|&c| !is_fixed(c)).collect();
    let mut t = DVector::<f64>::zeros(f.nrows());
    for &(i, v) in fixed {
        t += f.column(i) * v as f64;
    }
    let mut full = vec![0i64; m];
    for &(i, v) in fixed {
        full[i] = v;
    }
    if free.is_empty() {
        let d = t.norm_squared();
        return Ok((d <= radius2).then_some((full, d)));
    }
    let f_free = f.select_columns(&free);
    let red = lll_reduce(&f_free, DEFAULT_DELTA)?;
    let qr = red.basis.clone().qr();
    let q = qr.q();
    let r = qr.r();
    // ‖B v + t‖² = ‖R v + Qᵀt‖² + ‖t - QQᵀt‖²
    let qt = q.transpose() * &t;
    let outside = (&t - &q * &qt).norm_squared();
    let y: Vec<f64> = qt.iter().map(|v| -v).collect();
    let Some((v, d)) = enumerate(&r, &y, radius2 - outside, false, budget)? else {
        return Ok(None);
    };
    for (row, &c) in free.iter().enumerate() {
        let s: i128 = (0..v.len())
            .map(|j| red.unimodular[(row, j)] as i128 * v[j] as i128)
            .sum();
        full[c] = i64::try_from(s).map_err(|_| Error::numeric("coordinate overflow"))?;
    }
    Ok(Some((full, d + outside)))
}
