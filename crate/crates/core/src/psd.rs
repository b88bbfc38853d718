//! Positive semidefiniteness certificates.
//!
//! Two routes are offered. The eigen route diagonalizes the full kernel
//! matrix. The Schur route splits a kernel with unit corner into
//! `[[1, alpha], [alpha^*, A]]` and certifies the reduced matrix
//! `A - alpha^* alpha`, which is PSD exactly when the bordered matrix is.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{KernelError, Result};
use crate::kernel::IndexedKernel;

/// Default relative tolerance of the PSD criterion.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Verdict of a PSD test, with the evidence it rests on.
///
/// The matrix passes when `min_eigenvalue >= -tolerance_used * scale`, where
/// `scale = max(1, |largest eigenvalue|)`. A failing certificate carries the
/// unit eigenvector of the smallest eigenvalue as `witness`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdCertificate {
    pub verdict: bool,
    pub min_eigenvalue: f64,
    pub scale: f64,
    pub tolerance_used: f64,
    pub witness: Option<Vec<Complex64>>,
}

impl PsdCertificate {
    pub fn threshold(&self) -> f64 {
        -self.tolerance_used * self.scale
    }
}

pub(crate) fn validate_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(KernelError::InvalidTolerance { value: tol })
    }
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
pub(crate) fn hermitian_eigen(
    m: &DMatrix<Complex64>,
) -> Result<(DVector<f64>, DMatrix<Complex64>)> {
    let dim = m.nrows();
    if dim == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = m
        .clone()
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(KernelError::NumericalFailure { dim })?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(KernelError::NumericalFailure { dim });
    }
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// Certifies a Hermitian matrix. The lower triangle is what the eigensolver reads.
pub fn certify_matrix(m: &DMatrix<Complex64>, tol: f64) -> Result<PsdCertificate> {
    validate_tol(tol)?;
    let (values, vectors) = hermitian_eigen(m)?;
    if values.is_empty() {
        // the empty matrix is vacuously PSD
        return Ok(PsdCertificate {
            verdict: true,
            min_eigenvalue: 0.0,
            scale: 1.0,
            tolerance_used: tol,
            witness: None,
        });
    }
    let (imin, &min_eigenvalue) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let largest = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scale = largest.max(1.0);
    let verdict = min_eigenvalue >= -tol * scale;
    let witness = (!verdict).then(|| {
        let v = vectors.column(imin);
        let norm = v.norm();
        v.iter().map(|z| z / norm).collect()
    });
    Ok(PsdCertificate {
        verdict,
        min_eigenvalue,
        scale,
        tolerance_used: tol,
        witness,
    })
}

/// Eigen-route PSD certificate for a kernel.
pub fn psd_check_eigen(k: &IndexedKernel, tol: f64) -> Result<PsdCertificate> {
    certify_matrix(k.entries(), tol)
}

/// A kernel split at a basepoint `s0` into corner `K(s0, s0)`, row
/// `alpha(t) = K(s0, t)` and block `A = K` restricted away from `s0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurSplit {
    pub basepoint: String,
    pub corner: Complex64,
    /// Labels of the block, in kernel order with `s0` removed.
    pub labels: Vec<String>,
    pub alpha: DVector<Complex64>,
    pub block: DMatrix<Complex64>,
}

impl SchurSplit {
    /// `A - alpha^* alpha`, entry `(s, t)` equal to `A(s, t) - conj(alpha(s)) alpha(t)`.
    pub fn reduced(&self) -> DMatrix<Complex64> {
        let n = self.alpha.len();
        DMatrix::from_fn(n, n, |s, t| {
            self.block[(s, t)] - self.alpha[s].conj() * self.alpha[t]
        })
    }
}

/// Splits `k` at `s0`, requiring `|K(s0, s0) - 1| <= basepoint_tol`.
pub fn schur_reduce(k: &IndexedKernel, s0: &str, basepoint_tol: f64) -> Result<SchurSplit> {
    let p = k.check_unit_basepoint(s0, basepoint_tol)?;
    let rest: Vec<usize> = (0..k.dim()).filter(|&i| i != p).collect();
    let e = k.entries();
    Ok(SchurSplit {
        basepoint: s0.to_owned(),
        corner: e[(p, p)],
        labels: rest.iter().map(|&i| k.labels()[i].clone()).collect(),
        alpha: DVector::from_iterator(rest.len(), rest.iter().map(|&t| e[(p, t)])),
        block: DMatrix::from_fn(rest.len(), rest.len(), |i, j| e[(rest[i], rest[j])]),
    })
}

/// Schur-route certificate: the eigen-route verdict on `A - alpha^* alpha`.
/// The witness, when present, lives in the coordinates of the block.
pub fn psd_check_schur(split: &SchurSplit, tol: f64) -> Result<PsdCertificate> {
    certify_matrix(&split.reduced(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_kernel(rows: &[&[f64]]) -> IndexedKernel {
        let labels: Vec<String> = (0..rows.len()).map(|i| format!("s{i}")).collect();
        IndexedKernel::from_rows(
            labels,
            rows.iter()
                .map(|r| r.iter().map(|&x| c(x, 0.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_is_psd_with_unit_min() {
        let k = real_kernel(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let cert = psd_check_eigen(&k, DEFAULT_PSD_TOL).unwrap();
        assert!(cert.verdict);
        assert!((cert.min_eigenvalue - 1.0).abs() < 1e-14);
        assert!(cert.witness.is_none());
    }

    #[test]
    fn two_by_two_indefinite_has_antisymmetric_witness() {
        let k = real_kernel(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let cert = psd_check_eigen(&k, DEFAULT_PSD_TOL).unwrap();
        assert!(!cert.verdict);
        assert!((cert.min_eigenvalue + 1.0).abs() < 1e-14);
        assert!((cert.scale - 3.0).abs() < 1e-14);
        let w = cert.witness.unwrap();
        // up to a unit phase, w = (1, -1)/sqrt 2
        let ratio = w[1] / w[0];
        assert!((ratio - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((w[0].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn read_off_two_by_two_split() {
        let z = c(0.3, 0.4);
        let k = IndexedKernel::from_rows(
            vec!["x0", "a"],
            vec![vec![c(1.0, 0.0), z], vec![z.conj(), c(1.0, 0.0)]],
        )
        .unwrap();
        let split = schur_reduce(&k, "x0", 1e-12).unwrap();
        assert_eq!(split.alpha.as_slice(), &[z]);
        assert_eq!(split.block[(0, 0)], c(1.0, 0.0));
        assert_eq!(split.labels, vec!["a".to_string()]);
    }

    #[test]
    fn middle_basepoint_split_matches_permuted_kernel() {
        let k = IndexedKernel::from_rows(
            vec!["a", "x0", "b"],
            vec![
                vec![c(2.0, 0.0), c(0.1, 0.2), c(0.3, -0.1)],
                vec![c(0.1, -0.2), c(1.0, 0.0), c(0.4, 0.5)],
                vec![c(0.3, 0.1), c(0.4, -0.5), c(3.0, 0.0)],
            ],
        )
        .unwrap();
        let split = schur_reduce(&k, "x0", 1e-12).unwrap();
        let permuted = k.restrict(&["x0", "a", "b"]).unwrap();
        let e = permuted.entries();
        assert_eq!(split.alpha.as_slice(), &[e[(0, 1)], e[(0, 2)]]);
        assert_eq!(split.block, e.view((1, 1), (2, 2)).into_owned());
        assert_eq!(split.labels, vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn split_requires_unit_corner() {
        let k = real_kernel(&[&[2.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(
            schur_reduce(&k, "s0", 1e-12).unwrap_err().code(),
            "BasepointNotUnit"
        );
        assert_eq!(
            schur_reduce(&k, "zz", 1e-12).unwrap_err().code(),
            "LabelNotFound"
        );
    }

    fn split_of(alpha: [f64; 2]) -> SchurSplit {
        SchurSplit {
            basepoint: "x0".into(),
            corner: c(1.0, 0.0),
            labels: vec!["a".into(), "b".into()],
            alpha: DVector::from_vec(vec![c(alpha[0], 0.0), c(alpha[1], 0.0)]),
            block: DMatrix::identity(2, 2),
        }
    }

    #[test]
    fn unit_rank_one_update_sits_on_the_boundary() {
        let cert = psd_check_schur(&split_of([0.6, 0.8]), DEFAULT_PSD_TOL).unwrap();
        assert!(cert.verdict);
        assert!(cert.min_eigenvalue.abs() < 1e-15);
    }

    #[test]
    fn oversized_rank_one_update_fails() {
        let cert = psd_check_schur(&split_of([1.0, 1.0]), DEFAULT_PSD_TOL).unwrap();
        assert!(!cert.verdict);
        assert!((cert.min_eigenvalue + 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_alpha_reduces_to_the_block() {
        let split = SchurSplit {
            basepoint: "x0".into(),
            corner: c(1.0, 0.0),
            labels: vec!["a".into(), "b".into()],
            alpha: DVector::zeros(2),
            block: DMatrix::from_row_slice(
                2,
                2,
                &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)],
            ),
        };
        let block = IndexedKernel::new(split.labels.clone(), split.block.clone()).unwrap();
        assert_eq!(
            psd_check_schur(&split, 1e-9).unwrap(),
            psd_check_eigen(&block, 1e-9).unwrap()
        );
    }

    #[test]
    fn singleton_split_is_vacuously_psd() {
        let k = real_kernel(&[&[1.0]]);
        let cert = psd_check_schur(&schur_reduce(&k, "s0", 1e-12).unwrap(), 1e-9).unwrap();
        assert!(cert.verdict);
    }

    #[test]
    fn bad_tolerance_is_rejected() {
        let k = real_kernel(&[&[1.0]]);
        assert_eq!(
            psd_check_eigen(&k, 0.0).unwrap_err().code(),
            "InvalidTolerance"
        );
        assert!(psd_check_eigen(&k, f64::NAN).is_err());
    }
}
