//! Tiny dense linear algebra: symmetric 2×2 matrices and D×D Cholesky solves
//! for D ≤ 2.

use crate::math::sqrt;
use crate::{Error, Result};

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a11 > 0.0 && self.det() > 0.0
    }

    pub fn inverse(&self) -> Result<Sym2> {
        let det = self.det();
        let scale = self.a11.abs().max(self.a22.abs()).max(self.a12.abs());
        if !det.is_finite() || det.abs() <= 1e-14 * scale * scale {
            return Err(Error::Singular);
        }
        Ok(Sym2::new(self.a22 / det, -self.a12 / det, self.a11 / det))
    }

    /// `vᵀ M v`.
    pub fn quad_form(&self, v: [f64; 2]) -> f64 {
        self.a11 * v[0] * v[0] + 2.0 * self.a12 * v[0] * v[1] + self.a22 * v[1] * v[1]
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.a11 * v[0] + self.a12 * v[1],
            self.a12 * v[0] + self.a22 * v[1],
        ]
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let half_tr = 0.5 * self.trace();
        let d = 0.5 * (self.a11 - self.a22);
        let disc = sqrt(d * d + self.a12 * self.a12);
        [half_tr - disc, half_tr + disc]
    }

    /// Lower Cholesky factor `[[l11, 0], [l21, l22]]` with `L Lᵀ = M`.
    pub fn cholesky(&self) -> Result<[[f64; 2]; 2]> {
        if !self.is_positive_definite() {
            return Err(Error::Singular);
        }
        let l11 = sqrt(self.a11);
        let l21 = self.a12 / l11;
        let l22 = sqrt(self.a22 - l21 * l21);
        Ok([[l11, 0.0], [l21, l22]])
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a12, self.a22]]
    }
}

/// Solves `M x = b` for a symmetric positive definite `M` of size `D` by
/// Cholesky factorisation. Returns `None` if `M` is not numerically PD.
pub fn spd_solve<const D: usize>(m: &[[f64; D]; D], b: &[f64; D]) -> Option<[f64; D]> {
    let mut l = [[0.0; D]; D];
    for i in 0..D {
        for j in 0..=i {
            let mut s = m[i][j];
            for p in 0..j {
                s -= l[i][p] * l[j][p];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i][i] = sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [0.0; D];
    for i in 0..D {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i][p] * y[p];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; D];
    for i in (0..D).rev() {
        let mut s = y[i];
        for p in i + 1..D {
            s -= l[p][i] * x[p];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}
