//! Density matrices on tensor-product spaces.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::layout::SiteLayout;
use crate::C64;

/// Hermitian, unit-trace, positive semidefinite operator over a
/// [`SiteLayout`]. Construction checks only the shape; the physical
/// invariants are exposed as diagnostics so that integration drift can be
/// observed instead of hidden.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SiteLayout,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(site_dims: &[usize], matrix: DMatrix<C64>) -> Result<Self> {
        let layout = SiteLayout::new(site_dims);
        if matrix.nrows() != layout.dim() || matrix.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), found: matrix.nrows() });
        }
        Ok(DensityMatrix { layout, matrix })
    }

    pub(crate) fn from_parts(layout: SiteLayout, matrix: DMatrix<C64>) -> Self {
        debug_assert_eq!(matrix.nrows(), layout.dim());
        DensityMatrix { layout, matrix }
    }

    /// `|psi><psi|` for a (not necessarily normalized) state vector; the
    /// result is normalized.
    pub fn from_pure(site_dims: &[usize], psi: &DVector<C64>) -> Result<Self> {
        let norm2 = psi.norm_squared();
        if norm2 == 0.0 {
            return Err(Error::param("psi", "zero vector"));
        }
        let m = psi * psi.adjoint() / C64::from(norm2);
        Self::new(site_dims, m)
    }

    pub fn maximally_mixed(site_dims: &[usize]) -> Self {
        let layout = SiteLayout::new(site_dims);
        let n = layout.dim();
        let m = DMatrix::<C64>::identity(n, n) / C64::from(n as f64);
        DensityMatrix { layout, matrix: m }
    }

    /// Tensor product `self ⊗ other`, with `self` occupying the low
    /// (fast) sites.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.layout.dims().to_vec();
        dims.extend_from_slice(other.layout.dims());
        // little-endian: kron(other, self) puts self on the fast index
        let m = other.matrix.kronecker(&self.matrix);
        DensityMatrix { layout: SiteLayout::new(&dims), matrix: m }
    }

    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    pub fn site_dims(&self) -> &[usize] {
        self.layout.dims()
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut DMatrix<C64> {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Tr ρ², computed as the squared Frobenius norm (valid for Hermitian ρ).
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for c in 0..n {
            for r in c..n {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// ρ ← (ρ + ρ†)/2.
    pub fn hermitize(&mut self) {
        hermitize_in_place(&mut self.matrix);
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Fails with [`Error::NotPositive`] when the smallest eigenvalue is below `-tol`.
    pub fn check_positive(&self, tol: f64) -> Result<()> {
        let min = self.min_eigenvalue();
        if min < -tol {
            Err(Error::NotPositive(min))
        } else {
            Ok(())
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        (self.trace() - C64::from(1.0)).norm() <= tol
            && self.hermiticity_defect() <= tol
            && self.min_eigenvalue() >= -tol
    }
}

pub(crate) fn hermitize_in_place(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    for c in 0..n {
        let d = m[(c, c)];
        m[(c, c)] = C64::new(d.re, 0.0);
        for r in (c + 1)..n {
            let avg = (m[(r, c)] + m[(c, r)].conj()) * 0.5;
            m[(r, c)] = avg;
            m[(c, r)] = avg.conj();
        }
    }
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut h = m.clone();
    hermitize_in_place(&mut h);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending,
/// eigenvectors as matching columns.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let mut h = m.clone();
    hermitize_in_place(&mut h);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(m);
    let n = m.nrows();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for (k, &lambda) in values.iter().enumerate() {
        let fl = f(lambda);
        if fl == 0.0 {
            continue;
        }
        let v = vectors.column(k);
        out += (v * v.adjoint()) * C64::from(fl);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximally_mixed_is_valid() {
        let rho = DensityMatrix::maximally_mixed(&[2, 2, 2]);
        assert!(rho.is_valid(1e-12));
        assert!((rho.purity() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn tensor_puts_left_factor_on_fast_site() {
        let e1 = DVector::from_vec(vec![C64::from(0.0), C64::from(1.0)]);
        let e0 = DVector::from_vec(vec![C64::from(1.0), C64::from(0.0)]);
        let a = DensityMatrix::from_pure(&[2], &e1).unwrap();
        let b = DensityMatrix::from_pure(&[2], &e0).unwrap();
        let ab = a.tensor(&b);
        // |1>_0 |0>_1 has flat index 1
        assert_eq!(ab.matrix()[(1, 1)], C64::from(1.0));
    }

    #[test]
    fn wrong_shape_rejected() {
        let m = DMatrix::<C64>::zeros(3, 3);
        assert!(matches!(DensityMatrix::new(&[2, 2], m), Err(Error::DimensionMismatch { .. })));
    }
}
