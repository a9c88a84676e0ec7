//! The LegS matrices `A`, `B` and the eigendecomposition `A = V D V^-1`.

use nalgebra::{DMatrix, DVector};

use crate::dd::{Dd, DdMatrix};
use crate::error::{LegsError, Result};

/// Largest state dimension accepted by [`LegSSystem::new`].
///
/// The eigenvector matrix grows combinatorially with `N`; past this point
/// even the double-double eigenbasis cannot represent `V^-1` meaningfully.
/// Identities are certified to 1e-12 only up to `N = 16`.
pub const MAX_DIM: usize = 32;

/// Eigenvectors of a lower-triangular matrix with distinct diagonal.
///
/// Columns of `V` are normalized so that `V[j][j] = 1`. Both factors are
/// held in double-double; the `f64` copies are the rounded values.
#[derive(Clone, Debug)]
pub struct Eigenbasis {
    v: DMatrix<f64>,
    v_inv: DMatrix<f64>,
    v_dd: DdMatrix,
    v_inv_dd: DdMatrix,
}

impl Eigenbasis {
    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn v_inv(&self) -> &DMatrix<f64> {
        &self.v_inv
    }

    fn from_dd(v_dd: DdMatrix, v_inv_dd: DdMatrix) -> Self {
        Eigenbasis { v: v_dd.to_f64(), v_inv: v_inv_dd.to_f64(), v_dd, v_inv_dd }
    }
}

/// Eigenvectors of a lower-triangular `a` by forward substitution.
///
/// For the eigenvalue `a[j][j]`, the eigenvector vanishes above row `j`,
/// has a unit entry at row `j`, and below it solves
/// `(a[i][i] - a[j][j]) v_i = -sum_{k=j}^{i-1} a[i][k] v_k`.
/// The inverse is the forward-substitution solve of `V X = I`.
pub fn eigendecompose(a: &DMatrix<f64>) -> Result<Eigenbasis> {
    if a.nrows() != a.ncols() {
        return Err(LegsError::NotLowerTriangular);
    }
    let dim = a.nrows();
    for i in 0..dim {
        for j in i + 1..dim {
            if a[(i, j)] != 0.0 {
                return Err(LegsError::NotLowerTriangular);
            }
        }
    }
    let (v, v_inv) = eigendecompose_dd(&DdMatrix::from_f64(a))?;
    Ok(Eigenbasis::from_dd(v, v_inv))
}

fn eigendecompose_dd(a: &DdMatrix) -> Result<(DdMatrix, DdMatrix)> {
    let dim = a.dim();
    for i in 0..dim {
        for j in i + 1..dim {
            if a[(i, i)] == a[(j, j)] {
                return Err(LegsError::RepeatedEigenvalue {
                    first: i + 1,
                    second: j + 1,
                    value: a[(i, i)].to_f64(),
                });
            }
        }
    }

    let mut v = DdMatrix::zeros(dim);
    for j in 0..dim {
        v[(j, j)] = Dd::ONE;
        for i in j + 1..dim {
            let mut s = Dd::ZERO;
            for k in j..i {
                s += a[(i, k)] * v[(k, j)];
            }
            v[(i, j)] = -s / (a[(i, i)] - a[(j, j)]);
        }
    }

    Ok((v.clone(), lower_inverse(&v)))
}

fn lower_inverse(m: &DdMatrix) -> DdMatrix {
    let dim = m.dim();
    let mut inv = DdMatrix::zeros(dim);
    for c in 0..dim {
        for i in c..dim {
            let mut s = if i == c { Dd::ONE } else { Dd::ZERO };
            for k in c..i {
                s -= m[(i, k)] * inv[(k, c)];
            }
            inv[(i, c)] = s / m[(i, i)];
        }
    }
    inv
}

/// The LegS system of dimension `N`.
///
/// `A[i][j] = sqrt(2i-1) sqrt(2j-1)` below the diagonal, `A[j][j] = j`,
/// zero above; `B[j] = sqrt(2j-1)`; eigenvalues `1..=N`; `d = V^-1 B`.
/// Indices in the docs are 1-based; the storage is 0-based.
///
/// ```
/// use hippo_legs::LegSSystem;
///
/// let sys = LegSSystem::new(2).unwrap();
/// assert_eq!(sys.a()[(1, 0)], 3f64.sqrt());
/// assert_eq!(sys.a()[(1, 1)], 2.0);
/// assert!(sys.inverse_residual() < 1e-12);
/// ```
#[derive(Clone, Debug)]
pub struct LegSSystem {
    dim: usize,
    a: DMatrix<f64>,
    b: DVector<f64>,
    eigenvalues: DVector<f64>,
    d: DVector<f64>,
    a_dd: DdMatrix,
    basis: Eigenbasis,
    d_dd: Vec<Dd>,
    b_dd: Vec<Dd>,
    // row-major copy of the strictly lower part plus diagonal, for stepping
    a_rows: Vec<f64>,
}

impl LegSSystem {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(LegsError::InvalidDimension(dim));
        }
        if dim > MAX_DIM {
            return Err(LegsError::ConditioningLimit { dim, max: MAX_DIM });
        }
        let roots: Vec<Dd> = (1..=dim).map(|j| Dd::from(2 * j - 1).sqrt()).collect();
        let mut a_dd = DdMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..i {
                a_dd[(i, j)] = roots[i] * roots[j];
            }
            a_dd[(i, i)] = Dd::from(i + 1);
        }
        let (v_dd, v_inv_dd) = eigendecompose_dd(&a_dd)?;
        let basis = Eigenbasis::from_dd(v_dd, v_inv_dd);
        let d_dd = mat_vec_dd(&basis.v_inv_dd, &roots);
        Ok(Self::assemble(dim, a_dd, roots, basis, d_dd))
    }

    fn assemble(dim: usize, a_dd: DdMatrix, roots: Vec<Dd>, basis: Eigenbasis, d_dd: Vec<Dd>) -> Self {
        let a = a_dd.to_f64();
        let a_rows = (0..dim * dim).map(|idx| a[(idx / dim, idx % dim)]).collect();
        LegSSystem {
            dim,
            b: DVector::from_iterator(dim, roots.iter().map(|r| r.to_f64())),
            eigenvalues: DVector::from_iterator(dim, (1..=dim).map(|j| j as f64)),
            d: DVector::from_iterator(dim, d_dd.iter().map(|x| x.to_f64())),
            b_dd: roots,
            a,
            a_dd,
            basis,
            d_dd,
            a_rows,
        }
    }

    /// Same system with column `j` of `V` multiplied by `scales[j]` and the
    /// matching row of `V^-1` divided by it.
    ///
    /// Every observable (states, weights, `F`) is invariant under this.
    pub fn with_rescaled_eigenvectors(&self, scales: &[f64]) -> Result<Self> {
        if scales.len() != self.dim {
            return Err(LegsError::DimensionMismatch { expected: self.dim, got: scales.len() });
        }
        let mut v = self.basis.v_dd.clone();
        let mut v_inv = self.basis.v_inv_dd.clone();
        for (j, &s) in scales.iter().enumerate() {
            if !(s.is_finite() && s != 0.0) {
                return Err(LegsError::InvalidConfig(format!("eigenvector scale {s} must be finite and nonzero")));
            }
            let s = Dd::from(s);
            for i in 0..self.dim {
                v[(i, j)] *= s;
                v_inv[(j, i)] = v_inv[(j, i)] / s;
            }
        }
        let roots: Vec<Dd> = (1..=self.dim).map(|j| Dd::from(2 * j - 1).sqrt()).collect();
        let d_dd = mat_vec_dd(&v_inv, &roots);
        Ok(Self::assemble(self.dim, self.a_dd.clone(), roots, Eigenbasis::from_dd(v, v_inv), d_dd))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn v(&self) -> &DMatrix<f64> {
        self.basis.v()
    }

    pub fn v_inv(&self) -> &DMatrix<f64> {
        self.basis.v_inv()
    }

    /// Diagonal of `D`, i.e. `1, 2, ..., N`.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// `d = V^-1 B`, the input vector of the decoupled system.
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    /// `max |A V - V D|`, evaluated on the double-double factors.
    pub fn eigen_residual(&self) -> f64 {
        let n = self.dim;
        let v = &self.basis.v_dd;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = Dd::ZERO;
                for k in 0..n {
                    s += self.a_dd[(i, k)] * v[(k, j)];
                }
                s -= v[(i, j)] * Dd::from(j + 1);
                worst = worst.max(s.to_f64().abs());
            }
        }
        worst
    }

    /// `max |V V^-1 - I|`, evaluated on the double-double factors.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.dim;
        let (v, vi) = (&self.basis.v_dd, &self.basis.v_inv_dd);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = if i == j { -Dd::ONE } else { Dd::ZERO };
                for k in 0..n {
                    s += v[(i, k)] * vi[(k, j)];
                }
                worst = worst.max(s.to_f64().abs());
            }
        }
        worst
    }

    /// `max_ij sum_k |V_ik| |V^-1_kj|`: the cancellation factor that any
    /// product through the eigenbasis suffers.
    pub fn eigen_conditioning(&self) -> f64 {
        let prod = self.v().abs() * self.v_inv().abs();
        prod.max()
    }

    /// Solves `A x = rhs` by forward substitution.
    pub fn solve_a(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let row = &self.a_rows[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, xk)| a * xk).sum();
            x[i] = (x[i] - s) / self.a_rows[i * n + i];
        }
        x
    }

    /// Solves `(I + theta A) x = rhs` in place by forward substitution.
    #[inline]
    pub fn solve_shifted(&self, theta: f64, x: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.a_rows[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, xk)| a * xk).sum();
            x[i] = (x[i] - theta * s) / (1.0 + theta * self.a_rows[i * n + i]);
        }
    }

    /// `out = A x`.
    #[inline]
    pub fn apply_a(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.a_rows[i * n..i * n + i + 1];
            *o = row.iter().zip(&x[..=i]).map(|(a, xk)| a * xk).sum();
        }
    }

    pub(crate) fn b_dd(&self) -> &[Dd] {
        &self.b_dd
    }

    /// `out = A x` in double-double.
    pub(crate) fn apply_a_dd(&self, x: &[Dd], out: &mut [Dd]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = Dd::ZERO;
            for (m, xm) in x.iter().enumerate().take(i + 1) {
                s += self.a_dd[(i, m)] * *xm;
            }
            *o = s;
        }
    }

    /// Solves `(I + theta A) x = rhs` in place, in double-double.
    pub(crate) fn solve_shifted_dd(&self, theta: Dd, x: &mut [Dd]) {
        for i in 0..self.dim {
            let mut s = Dd::ZERO;
            for m in 0..i {
                s += self.a_dd[(i, m)] * x[m];
            }
            x[i] = (x[i] - theta * s) / (Dd::ONE + theta * self.a_dd[(i, i)]);
        }
    }

    /// `V diag(g(1), ..., g(N)) V^-1`, formed in double-double and rounded.
    pub fn spectral_matrix(&self, g: impl Fn(usize) -> Dd) -> DMatrix<f64> {
        let n = self.dim;
        let gs: Vec<Dd> = (1..=n).map(g).collect();
        let (v, vi) = (&self.basis.v_dd, &self.basis.v_inv_dd);
        DMatrix::from_fn(n, n, |i, m| {
            let mut s = Dd::ZERO;
            for j in 0..n {
                s += v[(i, j)] * gs[j] * vi[(j, m)];
            }
            s.to_f64()
        })
    }

    /// `V diag(g(1), ..., g(N)) V^-1 e_1`, formed in double-double.
    pub fn spectral_first_column(&self, g: impl Fn(usize) -> Dd) -> Vec<f64> {
        let n = self.dim;
        let gs: Vec<Dd> = (1..=n).map(g).collect();
        let (v, vi) = (&self.basis.v_dd, &self.basis.v_inv_dd);
        (0..n)
            .map(|i| {
                let mut s = Dd::ZERO;
                for j in 0..n {
                    s += v[(i, j)] * gs[j] * vi[(j, 0)];
                }
                s.to_f64()
            })
            .collect()
    }

    /// `V diag(g(1), ..., g(N)) d = V diag(g) V^-1 B`, formed in double-double.
    pub fn spectral_input(&self, g: impl Fn(usize) -> Dd) -> Vec<f64> {
        let n = self.dim;
        let v = &self.basis.v_dd;
        (0..n)
            .map(|i| {
                let mut s = Dd::ZERO;
                for j in 0..n {
                    s += v[(i, j)] * g(j + 1) * self.d_dd[j];
                }
                s.to_f64()
            })
            .collect()
    }

    /// `V x` with the product accumulated in double-double.
    pub fn apply_v(&self, x: &[f64]) -> Vec<f64> {
        let xs: Vec<Dd> = x.iter().map(|&v| Dd::from(v)).collect();
        mat_vec_dd(&self.basis.v_dd, &xs).into_iter().map(Dd::to_f64).collect()
    }
}

fn mat_vec_dd(m: &DdMatrix, x: &[Dd]) -> Vec<Dd> {
    let n = m.dim();
    (0..n)
        .map(|i| {
            let mut s = Dd::ZERO;
            for (k, xk) in x.iter().enumerate() {
                s += m[(i, k)] * *xk;
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_matrices() {
        let sys = LegSSystem::new(2).unwrap();
        let r3 = 3f64.sqrt();
        assert_eq!(sys.a().as_slice(), &[1.0, r3, 0.0, 2.0]);
        assert_eq!(sys.b().as_slice(), &[1.0, r3]);
        let v = sys.v();
        assert_eq!((v[(0, 0)], v[(0, 1)], v[(1, 1)]), (1.0, 0.0, 1.0));
        assert!((v[(1, 0)] + r3).abs() < 1e-15);
        let vi = sys.v_inv();
        assert!((vi[(1, 0)] - r3).abs() < 1e-15);
        assert_eq!((vi[(0, 0)], vi[(0, 1)], vi[(1, 1)]), (1.0, 0.0, 1.0));
    }

    #[test]
    fn scalar_system() {
        let sys = LegSSystem::new(1).unwrap();
        assert_eq!(sys.a()[(0, 0)], 1.0);
        assert_eq!(sys.b()[0], 1.0);
        assert_eq!(sys.v()[(0, 0)], 1.0);
        assert_eq!(sys.v_inv()[(0, 0)], 1.0);
    }

    #[test]
    fn a_inverse_b_is_first_basis_vector() {
        let sys = LegSSystem::new(8).unwrap();
        let x = sys.solve_a(sys.b().as_slice());
        assert_eq!(x[0], 1.0);
        assert!(x[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dimension_guards() {
        assert!(matches!(LegSSystem::new(0), Err(LegsError::InvalidDimension(0))));
        assert!(matches!(LegSSystem::new(33), Err(LegsError::ConditioningLimit { dim: 33, max: 32 })));
        assert!(LegSSystem::new(32).is_ok());
    }

    #[test]
    fn identities_hold_through_sixteen() {
        for n in 1..=16 {
            let sys = LegSSystem::new(n).unwrap();
            assert!(sys.eigen_residual() < 1e-12, "N={n}: {}", sys.eigen_residual());
            assert!(sys.inverse_residual() < 1e-12, "N={n}: {}", sys.inverse_residual());
            assert!(sys.eigenvalues().iter().enumerate().all(|(j, &l)| l == (j + 1) as f64));
        }
    }

    #[test]
    fn repeated_diagonal_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]);
        assert!(matches!(eigendecompose(&a), Err(LegsError::RepeatedEigenvalue { .. })));
        let upper = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 2.0]);
        assert!(matches!(eigendecompose(&upper), Err(LegsError::NotLowerTriangular)));
    }

    #[test]
    fn generic_eigendecomposition() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.5, 3.0, 4.0]);
        let basis = eigendecompose(&a).unwrap();
        let d = DMatrix::from_diagonal(&a.diagonal());
        let res = &a * basis.v() - basis.v() * d;
        assert!(res.amax() < 1e-13);
        assert!((basis.v() * basis.v_inv() - DMatrix::identity(3, 3)).amax() < 1e-13);
    }

    #[test]
    fn shifted_solve_inverts_shifted_apply() {
        let sys = LegSSystem::new(6).unwrap();
        let x: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut ax = vec![0.0; 6];
        sys.apply_a(&x, &mut ax);
        let theta = 0.15;
        let mut y: Vec<f64> = x.iter().zip(&ax).map(|(xi, ai)| xi + theta * ai).collect();
        sys.solve_shifted(theta, &mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_identity_is_identity() {
        let sys = LegSSystem::new(10).unwrap();
        let m = sys.spectral_matrix(|_| Dd::ONE);
        assert!((m - DMatrix::identity(10, 10)).amax() < 1e-15);
        let a = sys.spectral_matrix(Dd::from);
        assert!((a - sys.a()).amax() < 1e-13);
    }

    #[test]
    fn rescaling_preserves_spectral_products() {
        let sys = LegSSystem::new(8).unwrap();
        let mut scales = vec![1.0; 8];
        scales[3] = 2.0;
        let scaled = sys.with_rescaled_eigenvectors(&scales).unwrap();
        assert_eq!(scaled.v()[(5, 3)], 2.0 * sys.v()[(5, 3)]);
        let g = |j: usize| Dd::ratio(3, 4).powi(j as u32);
        let m1 = sys.spectral_matrix(g);
        let m2 = scaled.spectral_matrix(g);
        assert!((m1 - m2).amax() < 1e-12);
        assert!(scaled.inverse_residual() < 1e-12);
    }
}
