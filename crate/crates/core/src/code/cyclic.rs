//! Cyclic block codes over `Z_q` given by a monic generator polynomial.

use serde::{Deserialize, Serialize};

use crate::dsp::modular::{check_symbols, cyclic_convolve_mod, reduce};
use crate::dsp::{mod_interval, Constellation, IntFilter};
use crate::error::{Error, Result};

/// Largest codebook the exhaustive decoder will scan.
pub const ML_LIMIT: f64 = (1u64 << 20) as f64;

/// JSON form `{"N": .., "K": .., "q": .., "g": [low .. high]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSpec {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub q: u32,
    pub g: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicCode {
    n: usize,
    k: usize,
    q: u32,
    /// Generator coefficients, low to high, reduced into `Z_q`, monic.
    g: Vec<u32>,
}

/// Remainder of `a` modulo the monic `g` over `Z_q`, length `deg g`.
fn poly_rem(a: &[u32], g: &[u32], q: u32) -> Vec<u32> {
    let deg = g.len() - 1;
    let q64 = q as u64;
    let mut r: Vec<u64> = a.iter().map(|&v| v as u64).collect();
    if r.len() <= deg {
        r.resize(deg, 0);
        return r.into_iter().map(|v| v as u32).collect();
    }
    for top in (deg..r.len()).rev() {
        let c = r[top] % q64;
        if c == 0 {
            continue;
        }
        // subtract c·D^{top-deg}·g
        for (j, &gj) in g.iter().enumerate() {
            let idx = top - deg + j;
            r[idx] = (r[idx] + (q64 - c) * gj as u64) % q64;
        }
    }
    r.truncate(deg);
    r.into_iter().map(|v| (v % q64) as u32).collect()
}

impl CyclicCode {
    /// Validates `g` (monic, degree `N - K`, dividing `D^N - 1` over `Z_q`).
    pub fn new(n: usize, k: usize, q: u32, g: &[i64]) -> Result<Self> {
        if q < 2 {
            return Err(Error::input(format!("alphabet size q = {q} must be at least 2")));
        }
        if k == 0 || k > n {
            return Err(Error::input(format!("need 1 <= K <= N, got N = {n}, K = {k}")));
        }
        let mut g: Vec<u32> = g.iter().map(|&c| reduce(c, q)).collect();
        while g.len() > 1 && *g.last().unwrap() == 0 {
            g.pop();
        }
        if g.len() != n - k + 1 {
            return Err(Error::input(format!(
                "generator degree {} does not equal N - K = {}",
                g.len().saturating_sub(1),
                n - k
            )));
        }
        if *g.last().unwrap() != 1 {
            return Err(Error::input("generator polynomial must be monic"));
        }
        let mut xn1 = vec![0u32; n + 1];
        xn1[0] = q - 1;
        xn1[n] = 1;
        let remainder = poly_rem(&xn1, &g, q);
        if remainder.iter().any(|&v| v != 0) {
            return Err(Error::Divisibility { remainder });
        }
        Ok(CyclicCode { n, k, q, g })
    }

    pub fn from_spec(spec: &CodeSpec) -> Result<Self> {
        Self::new(spec.n, spec.k, spec.q, &spec.g)
    }

    pub fn spec(&self) -> CodeSpec {
        CodeSpec { n: self.n, k: self.k, q: self.q, g: self.g.iter().map(|&v| v as i64).collect() }
    }

    /// `[N, N-1]` single parity check over `Z_q`, `g = D - 1`.
    pub fn parity(n: usize, q: u32) -> Result<Self> {
        Self::new(n, n - 1, q, &[-1, 1])
    }

    /// Cyclic `[7, 4]` Hamming code, `g = 1 + D + D³`.
    pub fn hamming74() -> Self {
        Self::new(7, 4, 2, &[1, 1, 0, 1]).expect("1 + D + D^3 divides D^7 - 1")
    }

    /// The trivial code `K = N`, `g = 1`, used for uncoded transmission.
    pub fn uncoded(n: usize, q: u32) -> Result<Self> {
        Self::new(n, n, q, &[1])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn generator(&self) -> &[u32] {
        &self.g
    }

    /// Number of codewords, `q^K`, as a float.
    pub fn size(&self) -> f64 {
        (self.q as f64).powi(self.k as i32)
    }

    /// Data rate with `n - 1` padded symbols, `(K - n + 1)/N` symbols per use.
    pub fn effective_rate(&self, filter_len: usize) -> Result<f64> {
        self.check_pad(filter_len)?;
        Ok((self.k + 1 - filter_len) as f64 / self.n as f64)
    }

    fn check_pad(&self, filter_len: usize) -> Result<()> {
        if filter_len == 0 {
            return Err(Error::input("filter length must be at least 1"));
        }
        if filter_len > self.k {
            return Err(Error::PadTooLong { pad: filter_len - 1, k: self.k });
        }
        Ok(())
    }

    /// Codeword with `msg` in the last `K` positions and the parity
    /// `-(D^{N-K} m(D) mod g)` in the first `N - K`.
    pub fn encode(&self, msg: &[u32]) -> Result<Vec<u32>> {
        if msg.len() != self.k {
            return Err(Error::input(format!("message has {} symbols, need K = {}", msg.len(), self.k)));
        }
        check_symbols(msg, self.q)?;
        let r = self.n - self.k;
        let mut shifted = vec![0u32; self.n];
        shifted[r..].copy_from_slice(msg);
        let rem = poly_rem(&shifted, &self.g, self.q);
        for (s, v) in shifted.iter_mut().zip(rem) {
            *s = (self.q - v) % self.q;
        }
        Ok(shifted)
    }

    /// Encodes `data ‖ 0^{n-1}` so that the codeword ends in `n - 1` zeros.
    pub fn encode_zero_padded(&self, data: &[u32], filter_len: usize) -> Result<Vec<u32>> {
        self.check_pad(filter_len)?;
        let want = self.k + 1 - filter_len;
        if data.len() != want {
            return Err(Error::input(format!("padded message needs {want} data symbols, got {}", data.len())));
        }
        let mut msg = data.to_vec();
        msg.resize(self.k, 0);
        self.encode(&msg)
    }

    /// Message part of a systematic codeword.
    pub fn extract_message<'a>(&self, word: &'a [u32]) -> &'a [u32] {
        &word[self.n - self.k..]
    }

    pub fn syndrome(&self, x: &[u32]) -> Result<Vec<u32>> {
        if x.len() != self.n {
            return Err(Error::input(format!("word has {} symbols, need N = {}", x.len(), self.n)));
        }
        check_symbols(x, self.q)?;
        Ok(poly_rem(x, &self.g, self.q))
    }

    pub fn is_codeword(&self, x: &[u32]) -> bool {
        self.syndrome(x).is_ok_and(|s| s.iter().all(|&v| v == 0))
    }

    /// `(x ⊗ i) mod q`, checked to stay in the code.
    pub fn closure_convolve(&self, x: &[u32], i: &IntFilter) -> Result<Vec<u32>> {
        if !self.is_codeword(x) {
            return Err(Error::input("closure_convolve needs a codeword"));
        }
        let y = cyclic_convolve_mod(x, &i.real_taps()?, self.q)?;
        if !self.is_codeword(&y) {
            return Err(Error::InvariantViolation(format!(
                "cyclic convolution of a codeword with {i:?} left the code"
            )));
        }
        Ok(y)
    }

    /// Codewords of the unit messages, one per message position.
    fn generator_rows(&self) -> Vec<Vec<u32>> {
        (0..self.k)
            .map(|j| {
                let mut m = vec![0u32; self.k];
                m[j] = 1;
                self.encode(&m).expect("unit message is valid")
            })
            .collect()
    }

    /// Exhaustive minimum of `Σ_k costs[k][c_k]` over all codewords, ties
    /// going to the lexicographically smallest codeword.
    pub fn ml_decode_costs(&self, costs: &[Vec<f64>]) -> Result<Vec<u32>> {
        if costs.len() != self.n || costs.iter().any(|c| c.len() != self.q as usize) {
            return Err(Error::input("cost table must be N rows of q entries"));
        }
        if self.size() > ML_LIMIT {
            return Err(Error::CapacityExceeded { codewords: self.size(), limit: ML_LIMIT });
        }
        let rows = self.generator_rows();
        let q = self.q;
        let mut digits = vec![0u32; self.k];
        let mut word = vec![0u32; self.n];
        let score = |w: &[u32]| -> f64 { w.iter().zip(costs).map(|(&s, c)| c[s as usize]).sum() };
        let mut best = word.clone();
        let mut best_cost = score(&word);
        loop {
            // odometer step: adding row j advances digit j; q additions wrap to zero
            let mut j = 0;
            loop {
                if j == self.k {
                    return Ok(best);
                }
                for (w, &r) in word.iter_mut().zip(&rows[j]) {
                    *w = (*w + r) % q;
                }
                digits[j] += 1;
                if digits[j] < q {
                    break;
                }
                digits[j] = 0;
                j += 1;
            }
            let c = score(&word);
            let tol = 1e-12 * best_cost.abs().max(c.abs()).max(1e-300);
            if c < best_cost - tol || ((c - best_cost).abs() <= tol && word < best) {
                best_cost = c;
                best.clone_from(&word);
            }
        }
    }

    /// Nearest codeword under the mod-`Δ` Euclidean metric.
    pub fn ml_decode(&self, y: &[f64], cst: &Constellation) -> Result<Vec<u32>> {
        self.ml_decode_costs(&mod_costs(y, cst, self.q)?)
    }

    /// Per-symbol slicer followed by a syndrome check.
    pub fn hard_decode(&self, y: &[f64], cst: &Constellation) -> Result<HardDecision> {
        if y.len() != self.n || cst.q != self.q {
            return Err(Error::input("received block does not match the code"));
        }
        let word: Vec<u32> = y.iter().map(|&v| cst.slice(v)).collect();
        let ok = self.is_codeword(&word);
        Ok(HardDecision { word, ok })
    }
}

/// `costs[k][s] = |(y_k - point(s)) mod Δ|²`.
pub fn mod_costs(y: &[f64], cst: &Constellation, q: u32) -> Result<Vec<Vec<f64>>> {
    if cst.q != q {
        return Err(Error::input(format!("constellation has q = {}, code has q = {q}", cst.q)));
    }
    let pts = cst.points();
    Ok(y.iter()
        .map(|&v| pts.iter().map(|&p| mod_interval(v - p, cst.delta).powi(2)).collect())
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HardDecision {
    pub word: Vec<u32>,
    /// Whether `word` passed the syndrome check.
    pub ok: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parity5() -> CyclicCode {
        CyclicCode::new(4, 3, 5, &[4, 1]).unwrap()
    }

    /// Schoolbook long division over `Z_q`, quotient and remainder.
    fn long_division(a: &[i64], g: &[i64], q: i64) -> (Vec<i64>, Vec<i64>) {
        let mut r: Vec<i64> = a.iter().map(|v| v.rem_euclid(q)).collect();
        let dg = g.len() - 1;
        let mut quot = vec![0; r.len().saturating_sub(dg).max(1)];
        while r.len() > dg {
            let top = r.len() - 1;
            let c = r[top];
            quot[top - dg] = c;
            for (j, gj) in g.iter().enumerate() {
                r[top - dg + j] = (r[top - dg + j] - c * gj).rem_euclid(q);
            }
            r.pop();
        }
        (quot, r)
    }

    #[test]
    fn construction_examples() {
        assert!(CyclicCode::new(4, 3, 5, &[4, 1]).is_ok());
        assert!(CyclicCode::new(4, 3, 5, &[-1, 1]).is_ok());
        let h = CyclicCode::hamming74();
        assert_eq!(h.generator(), &[1, 1, 0, 1]);
        // K = 0 is degenerate
        assert!(CyclicCode::new(4, 0, 5, &[4, 0, 0, 0, 1]).unwrap_err().is_input_error());
        // 1 + D + D^2 does not divide D^7 - 1 over Z_2
        let err = CyclicCode::new(7, 5, 2, &[1, 1, 1]).unwrap_err();
        match err {
            Error::Divisibility { remainder } => {
                let (_, want) = long_division(&[-1, 0, 0, 0, 0, 0, 0, 1], &[1, 1, 1], 2);
                assert_eq!(remainder, want.iter().map(|&v| v as u32).collect::<Vec<_>>());
            }
            other => panic!("unexpected {other}"),
        }
        assert!(CyclicCode::new(4, 3, 5, &[4, 2]).is_err());
        // composite alphabet
        assert!(CyclicCode::parity(6, 4).is_ok());
    }

    #[test]
    fn encode_examples() {
        let c = parity5();
        assert_eq!(c.encode(&[0, 0, 0]).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(c.encode(&[1, 2, 3]).unwrap(), vec![4, 1, 2, 3]);
        assert_eq!(c.encode_zero_padded(&[1, 2], 2).unwrap(), vec![2, 1, 2, 0]);
        assert_eq!(c.encode_zero_padded(&[1, 2, 3], 1).unwrap(), c.encode(&[1, 2, 3]).unwrap());
        assert!(matches!(c.encode_zero_padded(&[], 4), Err(Error::PadTooLong { pad: 3, k: 3 })));
        let h = CyclicCode::hamming74();
        // D³ mod (1 + D + D³) = 1 + D
        let (_, rem) = long_division(&[0, 0, 0, 1], &[1, 1, 0, 1], 2);
        assert_eq!(rem, vec![1, 1, 0]);
        assert_eq!(h.encode(&[1, 0, 0, 0]).unwrap(), vec![1, 1, 0, 1, 0, 0, 0]);
    }

    #[test]
    fn membership() {
        let c = parity5();
        assert!(c.is_codeword(&[0, 0, 0, 0]));
        let mut w = c.encode(&[3, 3, 1]).unwrap();
        assert!(c.is_codeword(&w));
        w[2] = (w[2] + 1) % 5;
        assert!(!c.is_codeword(&w));
        assert!(!c.is_codeword(&[0, 0, 0]));
    }

    #[test]
    fn closure_examples() {
        let c = parity5();
        let x = vec![4, 1, 2, 3];
        assert_eq!(c.closure_convolve(&x, &IntFilter::identity()).unwrap(), x);
        let y = c.closure_convolve(&x, &IntFilter::new(vec![1, 2]).unwrap()).unwrap();
        assert_eq!(y, vec![0, 4, 4, 2]);
        let h = CyclicCode::hamming74();
        let x = h.encode(&[1, 0, 1, 1]).unwrap();
        let wrap = IntFilter::new(vec![1, 0, 0, 0, 0, 0, 1]).unwrap();
        assert!(h.is_codeword(&h.closure_convolve(&x, &wrap).unwrap()));
    }

    #[test]
    fn decoding_examples() {
        let c = parity5();
        let cst = Constellation::new(5, 10.0).unwrap();
        let x = c.encode(&[2, 0, 4]).unwrap();
        let y: Vec<f64> = x.iter().map(|&s| cst.point(s)).collect();
        assert_eq!(c.ml_decode(&y, &cst).unwrap(), x);
        let hd = c.hard_decode(&y, &cst).unwrap();
        assert!(hd.ok);
        assert_eq!(hd.word, x);
        // one large hit breaks the parity
        let mut bad = y.clone();
        bad[1] += cst.step();
        assert!(!c.hard_decode(&bad, &cst).unwrap().ok);
        let zero = vec![cst.point(0); 4];
        assert_eq!(c.hard_decode(&zero, &cst).unwrap().word, vec![0; 4]);
    }

    #[test]
    fn ties_go_to_smallest_word() {
        let c = CyclicCode::parity(2, 2).unwrap();
        // codewords 00 and 11; all-zero costs make every word tie
        let costs = vec![vec![1.0, 1.0]; 2];
        assert_eq!(c.ml_decode_costs(&costs).unwrap(), vec![0, 0]);
        let costs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(c.ml_decode_costs(&costs).unwrap(), vec![0, 0]);
    }

    #[test]
    fn large_codes_refuse_exhaustive_decoding() {
        let c = CyclicCode::uncoded(30, 2).unwrap();
        let cst = Constellation::new(2, 1.0).unwrap();
        assert!(matches!(c.ml_decode(&[0.0; 30], &cst), Err(Error::CapacityExceeded { .. })));
    }

    /// Every codeword listed from all `q^K` messages.
    fn all_codewords(c: &CyclicCode) -> Vec<Vec<u32>> {
        let total = c.size() as u64;
        (0..total)
            .map(|mut idx| {
                let msg: Vec<u32> = (0..c.k())
                    .map(|_| {
                        let d = (idx % c.q() as u64) as u32;
                        idx /= c.q() as u64;
                        d
                    })
                    .collect();
                c.encode(&msg).unwrap()
            })
            .collect()
    }

    fn scan(c: &CyclicCode, y: &[f64], cst: &Constellation) -> f64 {
        all_codewords(c)
            .iter()
            .map(|w| {
                w.iter()
                    .zip(y)
                    .map(|(&s, &v)| mod_interval(v - cst.point(s), cst.delta).powi(2))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn metric(w: &[u32], y: &[f64], cst: &Constellation) -> f64 {
        w.iter()
            .zip(y)
            .map(|(&s, &v)| mod_interval(v - cst.point(s), cst.delta).powi(2))
            .sum()
    }

    #[test]
    fn small_noise_is_corrected() {
        // mod-Δ minimum distance of the parity code is sqrt(2) steps
        let c = parity5();
        let cst = Constellation::new(5, 4.0).unwrap();
        let x = c.encode(&[1, 4, 4]).unwrap();
        let radius = 2f64.sqrt() * cst.step() / 2.0;
        let eps = [0.6, -0.4, 0.3, 0.5];
        let norm = eps.iter().map(|e: &f64| e * e).sum::<f64>().sqrt();
        let y: Vec<f64> = x
            .iter()
            .zip(eps)
            .map(|(&s, e)| mod_interval(cst.point(s) + e / norm * 0.99 * radius, cst.delta))
            .collect();
        assert_eq!(c.ml_decode(&y, &cst).unwrap(), x);
    }

    proptest! {
        #[test]
        fn systematic_round_trip(msg in prop::collection::vec(0u32..5, 3)) {
            let c = parity5();
            let w = c.encode(&msg).unwrap();
            prop_assert!(c.is_codeword(&w));
            prop_assert_eq!(c.extract_message(&w), &msg[..]);
            let mut shifted = w.clone();
            shifted.rotate_right(1);
            prop_assert!(c.is_codeword(&shifted));
        }

        #[test]
        fn hamming_cyclic_shifts(msg in prop::collection::vec(0u32..2, 4), s in 0usize..7) {
            let h = CyclicCode::hamming74();
            let mut w = h.encode(&msg).unwrap();
            w.rotate_right(s);
            prop_assert!(h.is_codeword(&w));
        }

        #[test]
        fn ml_matches_scan(
            msg in prop::collection::vec(0u32..5, 3),
            noise in prop::collection::vec(-1.5f64..1.5, 4),
            snr in 0.5f64..20.0,
        ) {
            let c = parity5();
            let cst = Constellation::new(5, snr).unwrap();
            let x = c.encode(&msg).unwrap();
            let y: Vec<f64> = x.iter().zip(&noise).map(|(&s, e)| mod_interval(cst.point(s) + e, cst.delta)).collect();
            let got = c.ml_decode(&y, &cst).unwrap();
            prop_assert!(c.is_codeword(&got));
            prop_assert!((metric(&got, &y, &cst) - scan(&c, &y, &cst)).abs() < 1e-12);
        }

        #[test]
        fn hamming_ml_matches_scan(
            msg in prop::collection::vec(0u32..2, 4),
            noise in prop::collection::vec(-1.0f64..1.0, 7),
        ) {
            let h = CyclicCode::hamming74();
            let cst = Constellation::new(2, 1.0).unwrap();
            let x = h.encode(&msg).unwrap();
            let y: Vec<f64> = x.iter().zip(&noise).map(|(&s, e)| mod_interval(cst.point(s) + e, cst.delta)).collect();
            let got = h.ml_decode(&y, &cst).unwrap();
            prop_assert!((metric(&got, &y, &cst) - scan(&h, &y, &cst)).abs() < 1e-12);
        }
    }
}
