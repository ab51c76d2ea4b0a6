//! Thin wrappers over the dense SVD routines used throughout the crate.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::scan::C64;

/// Thin SVD `A = U diag(s) V*` with `s` non-negative and non-increasing.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Mat<C64>,
    pub s: Vec<f64>,
    pub v: Mat<C64>,
}

impl ThinSvd {
    pub fn compute(a: MatRef<'_, C64>) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Dimension("SVD of an empty matrix".into()));
        }
        let svd = a.thin_svd().map_err(|_| Error::Svd)?;
        let s = svd.S().column_vector().iter().map(|z| z.re).collect();
        Ok(Self {
            u: svd.U().to_owned(),
            s,
            v: svd.V().to_owned(),
        })
    }

    pub fn rank_cutoff(&self) -> usize {
        self.s.len()
    }

    /// Sum of the leading `k` rank-one terms `s_i u_i v_i*`.
    pub fn leading_terms(&self, k: usize) -> Mat<C64> {
        let (m, n) = (self.u.nrows(), self.v.nrows());
        let mut out = Mat::<C64>::zeros(m, n);
        for i in 0..k.min(self.s.len()) {
            let s = self.s[i];
            for c in 0..n {
                let vc = self.v[(c, i)].conj() * s;
                for r in 0..m {
                    out[(r, c)] += self.u[(r, i)] * vc;
                }
            }
        }
        out
    }
}

/// Singular values of a real matrix, non-increasing.
pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Dimension("SVD of an empty matrix".into()));
    }
    a.singular_values().map_err(|_| Error::Svd)
}

pub fn frobenius_norm(a: MatRef<'_, C64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_matrix() {
        let a = Mat::from_fn(7, 4, |i, j| C64::new((i * 3 + j) as f64 % 5.0, (i as f64 - j as f64).sin()));
        let svd = ThinSvd::compute(a.as_ref()).unwrap();
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        let back = svd.leading_terms(4);
        let err = frobenius_norm((&back - &a).as_ref());
        assert!(err <= 1e-12 * frobenius_norm(a.as_ref()));
    }

    #[test]
    fn real_singular_values() {
        let a = Mat::from_fn(2, 2, |i, j| if i == j { [3.0, -4.0][i] } else { 0.0 });
        let s = singular_values(a.as_ref()).unwrap();
        assert!((s[0] - 4.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14);
    }
}
