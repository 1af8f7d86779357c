//! Dense eigendecomposition for small real matrices.
//!
//! Eigenvalues come from nalgebra's real Schur form (Hessenberg reduction and
//! shifted QR). Eigenvectors are the smallest right singular vectors of
//! `M - lambda I`; a cluster of `k` (numerically) equal eigenvalues gets the
//! `k` smallest singular vectors so that semisimple repeated eigenvalues still
//! produce an independent basis.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;
const CLUSTER_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: Complex64,
    /// Unit 2-norm; the first component of largest modulus is real and >= 0.
    pub vector: DVector<Complex64>,
}

/// Eigenvalues of `m`, sorted by descending modulus, then descending real and
/// imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    check_input(m)?;
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 1000 + 100 * n)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    values.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    Ok(values)
}

fn check_input(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::domain(format!("expected a non-empty square matrix, got {:?}", m.shape())));
    }
    if m.nrows() > MAX_DIM {
        return Err(Error::domain(format!("matrix dimension {} exceeds {MAX_DIM}", m.nrows())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    Ok(())
}

/// Scales `v` to unit norm and rotates its phase so the first component of
/// largest modulus is real and nonnegative.
pub fn normalize_eigenvector(v: &DVector<Complex64>) -> DVector<Complex64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v.clone();
    }
    let mut pivot = 0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > v[pivot].norm() {
            pivot = i;
        }
    }
    let p = v[pivot];
    let phase = p.conj() / p.norm();
    let mut out = v.map(|c| c * phase / norm);
    out[pivot] = Complex64::new(out[pivot].norm(), 0.0);
    out
}

fn smallest_right_singular_vectors_real(m: &DMatrix<f64>, k: usize) -> Result<Vec<DVector<Complex64>>> {
    let svd = m.clone().try_svd(false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]).then(a.cmp(&b)));
    Ok(order[..k]
        .iter()
        .map(|&i| v_t.row(i).transpose().map(|x| Complex64::new(x, 0.0)))
        .collect())
}

fn smallest_right_singular_vectors_complex(m: &DMatrix<Complex64>, k: usize) -> Result<Vec<DVector<Complex64>>> {
    let svd = m.clone().try_svd(false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]).then(a.cmp(&b)));
    Ok(order[..k].iter().map(|&i| v_t.row(i).transpose().map(|c| c.conj())).collect())
}

/// Eigenpairs of a real matrix, ordered as in [`eigenvalues`].
pub fn eigendecompose(m: &DMatrix<f64>) -> Result<Vec<EigenPair>> {
    let values = eigenvalues(m)?;
    let n = m.nrows();
    let scale = m.norm().max(1.0);
    let mut vectors: Vec<Option<DVector<Complex64>>> = vec![None; n];

    let mut i = 0;
    while i < n {
        // every unassigned value close to the lead joins its cluster
        let lead = values[i];
        let members: Vec<usize> = (i..n)
            .filter(|&j| vectors[j].is_none() && (values[j] - lead).norm() <= CLUSTER_TOL * scale)
            .collect();
        let mean = members.iter().map(|&j| values[j]).sum::<Complex64>() / members.len() as f64;
        let basis = if members.iter().all(|&j| values[j].im == 0.0) {
            let shifted = m - DMatrix::identity(n, n) * mean.re;
            smallest_right_singular_vectors_real(&shifted, members.len())?
        } else if let Some(partner) = (0..n).find(|&j| {
            members.len() == 1 && values[j].re == lead.re && values[j].im == -lead.im && vectors[j].is_some()
        }) {
            // conjugate of an already computed pair
            vec![vectors[partner].as_ref().expect("checked").map(|c| c.conj())]
        } else {
            let shifted = m.map(|x| Complex64::new(x, 0.0)) - DMatrix::<Complex64>::identity(n, n) * mean;
            smallest_right_singular_vectors_complex(&shifted, members.len())?
        };
        for (&j, v) in members.iter().zip(basis) {
            vectors[j] = Some(normalize_eigenvector(&v));
        }
        while i < n && vectors[i].is_some() {
            i += 1;
        }
    }

    Ok(values
        .into_iter()
        .zip(vectors)
        .map(|(value, vector)| EigenPair { value, vector: vector.expect("every index assigned") })
        .collect())
}
