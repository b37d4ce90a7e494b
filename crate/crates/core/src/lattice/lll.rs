//! LLL reduction of a real lattice basis given by the columns of `F`.
//!
//! The Gram-Schmidt data are floating point; the unimodular transform is
//! kept in checked integer arithmetic and the reduced basis is always
//! recomputed as `F·U`, so floating drift never leaks into the output.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 0.75;

#[derive(Clone, Debug)]
pub struct LllResult {
    /// Reduced basis, one vector per column.
    pub basis: DMatrix<f64>,
    /// Integer transform with `basis = F·U` and `|det U| = 1`.
    pub unimodular: DMatrix<i64>,
}

impl LllResult {
    /// Integer coordinates of the `j`-th reduced vector in the input basis.
    pub fn coords(&self, j: usize) -> Vec<i64> {
        self.unimodular.column(j).iter().copied().collect()
    }
}

struct Gso {
    mu: DMatrix<f64>,
    norms: Vec<f64>,
}

fn gso(b: &DMatrix<f64>) -> Gso {
    let m = b.ncols();
    let mut star = b.clone();
    let mut mu = DMatrix::<f64>::identity(m, m);
    let mut norms = vec![0.0; m];
    for i in 0..m {
        for j in 0..i {
            let v = b.column(i).dot(&star.column(j)) / norms[j];
            mu[(i, j)] = v;
            let sj = star.column(j).clone_owned();
            let mut si = star.column_mut(i);
            si.axpy(-v, &sj, 1.0);
        }
        norms[i] = star.column(i).norm_squared();
    }
    Gso { mu, norms }
}

fn checked_axpy(u: &mut DMatrix<i64>, dst: usize, src: usize, r: i64) -> Result<()> {
    for row in 0..u.nrows() {
        let v = u[(row, src)]
            .checked_mul(r)
            .and_then(|t| u[(row, dst)].checked_sub(t))
            .ok_or_else(|| Error::numeric("integer overflow in LLL transform"))?;
        u[(row, dst)] = v;
    }
    Ok(())
}

/// Reduces the columns of `f` with Lovász parameter `delta` in `(0.25, 1)`.
pub fn lll_reduce(f: &DMatrix<f64>, delta: f64) -> Result<LllResult> {
    if !(delta > 0.25 && delta < 1.0) {
        return Err(Error::input(format!("LLL delta must lie in (0.25, 1), got {delta}")));
    }
    let m = f.ncols();
    let mut u = DMatrix::<i64>::identity(m, m);
    if m == 0 {
        return Ok(LllResult { basis: f.clone(), unimodular: u });
    }
    let scale = f.iter().map(|v| v * v).sum::<f64>();
    let mut b = f.clone();
    let mut g = gso(&b);
    if g.norms.iter().any(|&n| !(n > 1e-24 * scale)) {
        return Err(Error::numeric("LLL input basis is rank deficient"));
    }

    let refresh = |u: &DMatrix<i64>| -> DMatrix<f64> { f * u.map(|v| v as f64) };
    let mut k = 1;
    let mut iterations = 0usize;
    while k < m {
        iterations += 1;
        if iterations > 1_000_000 {
            return Err(Error::numeric("LLL failed to converge"));
        }
        // size reduction of b_k
        let mut changed = false;
        for j in (0..k).rev() {
            let r = g.mu[(k, j)].round();
            if r != 0.0 {
                if r.abs() > 2f64.powi(52) {
                    return Err(Error::numeric("LLL size-reduction coefficient overflow"));
                }
                let ri = r as i64;
                checked_axpy(&mut u, k, j, ri)?;
                for l in 0..=j {
                    let mj = if l == j { 1.0 } else { g.mu[(j, l)] };
                    g.mu[(k, l)] -= r * mj;
                }
                changed = true;
            }
        }
        if changed {
            b = refresh(&u);
            g = gso(&b);
        }
        let mu = g.mu[(k, k - 1)];
        if g.norms[k] >= (delta - mu * mu) * g.norms[k - 1] {
            k += 1;
        } else {
            u.swap_columns(k, k - 1);
            b = refresh(&u);
            g = gso(&b);
            if g.norms.iter().any(|&n| !(n > 1e-24 * scale)) {
                return Err(Error::numeric("LLL lost rank during reduction"));
            }
            k = (k - 1).max(1);
        }
    }
    Ok(LllResult { basis: refresh(&u), unimodular: u })
}

/// Determinant of an integer matrix by fraction-free elimination.
pub fn integer_det(m: &DMatrix<i64>) -> Result<i128> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::input("determinant needs a square matrix"));
    }
    let mut a: Vec<Vec<i128>> = (0..n).map(|r| (0..n).map(|c| m[(r, c)] as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i][j]
                    .checked_mul(a[k][k])
                    .and_then(|x| a[i][k].checked_mul(a[k][j]).and_then(|y| x.checked_sub(y)))
                    .ok_or_else(|| Error::numeric("overflow in integer determinant"))?;
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check_reduced(res: &LllResult, delta: f64) {
        let g = gso(&res.basis);
        let m = res.basis.ncols();
        for i in 0..m {
            for j in 0..i {
                assert!(g.mu[(i, j)].abs() <= 0.5 + 1e-9, "size condition at ({i},{j})");
            }
            if i > 0 {
                let mu = g.mu[(i, i - 1)];
                assert!(
                    g.norms[i] >= (delta - mu * mu) * g.norms[i - 1] * (1.0 - 1e-9),
                    "Lovász condition at {i}"
                );
            }
        }
    }

    #[test]
    fn identity_is_fixed() {
        let f = DMatrix::<f64>::identity(3, 3);
        let r = lll_reduce(&f, DEFAULT_DELTA).unwrap();
        assert_eq!(r.unimodular, DMatrix::<i64>::identity(3, 3));
        assert_eq!(r.basis, f);
    }

    #[test]
    fn near_parallel_pair() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.99, 0.0, 0.01]);
        let r = lll_reduce(&f, DEFAULT_DELTA).unwrap();
        assert!(r.basis.column(0).norm() <= f.column(0).norm() + 1e-15);
        // the short vector b_2 - b_1 = (-0.01, 0.01)
        assert!((r.basis.column(0).norm() - 0.02f64.sqrt() * 0.1).abs() < 1e-12);
        check_reduced(&r, DEFAULT_DELTA);
    }

    #[test]
    fn rejects_bad_input() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]);
        assert!(lll_reduce(&f, DEFAULT_DELTA).is_err());
        assert!(lll_reduce(&DMatrix::identity(2, 2), 0.2).unwrap_err().is_input_error());
    }

    #[test]
    fn determinant_examples() {
        let m = DMatrix::from_row_slice(3, 3, &[2, 1, 0, 1, 1, 0, 3, -4, 1]);
        assert_eq!(integer_det(&m).unwrap(), 1);
        let m = DMatrix::from_row_slice(2, 2, &[0, 1, 1, 0]);
        assert_eq!(integer_det(&m).unwrap(), -1);
    }

    proptest! {
        #[test]
        fn reduction_is_unimodular_and_consistent(
            entries in prop::collection::vec(-10.0f64..10.0, 25),
            delta in 0.3f64..0.99,
        ) {
            let f = DMatrix::from_column_slice(5, 5, &entries);
            prop_assume!(f.determinant().abs() > 1e-3);
            let r = lll_reduce(&f, delta).unwrap();
            prop_assert_eq!(integer_det(&r.unimodular).unwrap().abs(), 1);
            let ku = r.unimodular.map(|v| v as f64);
            let lhs = r.basis.transpose() * &r.basis;
            let rhs = ku.transpose() * (f.transpose() * &f) * &ku;
            prop_assert!((lhs - &rhs).amax() <= 1e-9 * rhs.amax());
            check_reduced(&r, delta);
            let shortest_in = (0..5).map(|j| f.column(j).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(r.basis.column(0).norm() <= shortest_in * (1.0 + 1e-12) * 2f64.powi(2));
        }
    }
}
