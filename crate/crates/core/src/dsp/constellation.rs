//! PAM constellation scaled to the power budget, and the centered modulo.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform `q`-PAM with points `Δ·{-(q-1)/(2q), ..., (q-1)/(2q)}`,
/// `Δ = c·sqrt(snr)` and `c = sqrt(12 q² / (q² - 1))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    pub q: u32,
    pub snr: f64,
    pub c: f64,
    pub delta: f64,
}

impl Constellation {
    pub fn new(q: u32, snr: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::input(format!("alphabet size q = {q} must be at least 2")));
        }
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::input(format!("snr must be positive and finite, got {snr}")));
        }
        let qf = q as f64;
        let c = (12.0 * qf * qf / (qf * qf - 1.0)).sqrt();
        Ok(Constellation { q, snr, c, delta: c * snr.sqrt() })
    }

    /// Spacing between adjacent points, `Δ/q`.
    pub fn step(&self) -> f64 {
        self.delta / self.q as f64
    }

    /// Physical amplitude of symbol `s`.
    pub fn point(&self, s: u32) -> f64 {
        self.step() * (s as f64 - (self.q as f64 - 1.0) / 2.0)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.q).map(|s| self.point(s)).collect()
    }

    /// Nearest symbol to `y` under the modulo-Δ metric.
    pub fn slice(&self, y: f64) -> u32 {
        let t = y / self.step() + (self.q as f64 - 1.0) / 2.0;
        (t.round() as i64).rem_euclid(self.q as i64) as u32
    }
}

/// Maps `Z_q` symbols to the physical constellation.
pub fn map_constellation(symbols: &[u32], cst: &Constellation) -> Result<Vec<f64>> {
    crate::dsp::modular::check_symbols(symbols, cst.q)?;
    Ok(symbols.iter().map(|&s| cst.point(s)).collect())
}

/// Reduces `v` into `[-Δ/2, Δ/2)`.
pub fn mod_interval(v: f64, delta: f64) -> f64 {
    debug_assert!(delta > 0.0);
    let r = v - delta * (v / delta + 0.5).floor();
    // rounding can land exactly on the excluded endpoint
    if r >= delta / 2.0 {
        r - delta
    } else if r < -delta / 2.0 {
        r + delta
    } else {
        r
    }
}

/// Componentwise [`mod_interval`] on real and imaginary parts.
pub fn mod_interval_complex(v: Complex64, delta: f64) -> Complex64 {
    Complex64::new(mod_interval(v.re, delta), mod_interval(v.im, delta))
}

pub fn mod_interval_vec(v: &[f64], delta: f64) -> Vec<f64> {
    v.iter().map(|&x| mod_interval(x, delta)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn binary_constellation() {
        let cst = Constellation::new(2, 1.0).unwrap();
        assert_abs_diff_eq!(cst.c, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(cst.delta, 4.0, epsilon = 1e-14);
        let pts = cst.points();
        assert_abs_diff_eq!(pts[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pts[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn four_pam_constellation() {
        let cst = Constellation::new(4, 1.0).unwrap();
        assert_abs_diff_eq!(cst.c, 12.8f64.sqrt(), epsilon = 1e-14);
        let pts = cst.points();
        for (got, want) in pts.iter().zip([-1.341641, -0.447214, 0.447214, 1.341641]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-6);
        }
        let power: f64 = pts.iter().map(|p| p * p).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(power, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scaling_constant_tends_to_sqrt12() {
        let c = Constellation::new(1 << 16, 1.0).unwrap().c;
        assert!(c > 12f64.sqrt());
        assert!((c - 12f64.sqrt()) < 1e-8);
        for q in 2..50 {
            assert!(Constellation::new(q, 1.0).unwrap().c > 12f64.sqrt());
        }
    }

    #[test]
    fn modulo_examples() {
        assert_abs_diff_eq!(mod_interval(0.3, 1.0), 0.3, epsilon = 1e-15);
        assert_eq!(mod_interval(0.5, 1.0), -0.5);
        assert_abs_diff_eq!(mod_interval(-1.2, 1.0), -0.2, epsilon = 1e-12);
        assert_eq!(mod_interval(-0.5, 1.0), -0.5);
        let z = mod_interval_complex(Complex64::new(0.7, -0.7), 1.0);
        assert_abs_diff_eq!(z.re, -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(z.im, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn uniform_symbols_meet_power_budget() {
        let snr = 7.5;
        let cst = Constellation::new(8, snr).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let p = cst.point(rng.random_range(0..8));
            sum += p * p;
            sum_sq += p.powi(4);
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        let sigma = (var / n as f64).sqrt();
        assert!((mean - snr).abs() < 3.0 * sigma, "mean power {mean} vs {snr}");
    }

    #[test]
    fn slicer_inverts_map() {
        let cst = Constellation::new(5, 3.0).unwrap();
        for s in 0..5 {
            assert_eq!(cst.slice(cst.point(s)), s);
            assert_eq!(cst.slice(cst.point(s) + cst.delta), s);
            assert_eq!(cst.slice(cst.point(s) + 0.49 * cst.step()), s);
        }
    }

    proptest! {
        #[test]
        fn modulo_is_idempotent_and_shift_invariant(
            v in -1e4f64..1e4, delta in 0.01f64..100.0, m in -50i32..50
        ) {
            let r = mod_interval(v, delta);
            prop_assert!(r >= -delta / 2.0 && r < delta / 2.0);
            prop_assert_eq!(mod_interval(r, delta), r);
            let shifted = mod_interval(v + m as f64 * delta, delta);
            let diff = mod_interval(shifted - r, delta).abs();
            prop_assert!(diff < 1e-9 * (1.0 + v.abs()), "{} vs {}", shifted, r);
        }
    }
}
