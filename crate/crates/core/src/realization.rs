//! Gaussian realizations of kernels with a unit basepoint.
//!
//! For a PSD kernel `K` on `S` with `K(s0, s0) = 1`, a Gaussian family
//! `(X_s)` on `S \ {s0}` with mean `K(s, s0)` and covariance
//! `K(s, t) - K(s, s0) K(s0, t)`, extended by `X_{s0} = 1`, has second
//! moments `E(X_s conj X_t) = K(s, t)`. Two such families built on kernels
//! sharing only `s0` can be drawn independently and joined at `s0`; the
//! joined family has the Markov product as its second-moment kernel.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{KernelError, Result};
use crate::kernel::{disjoint_except, IndexedKernel, DEFAULT_BASEPOINT_TOL};
use crate::psd::{hermitian_eigen, psd_check_eigen, validate_tol, DEFAULT_PSD_TOL};

/// Tolerances shared by the realization pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative PSD slack, see [`crate::psd::PsdCertificate`].
    pub psd: f64,
    /// Accepted `|K(s0, s0) - 1|`.
    pub basepoint: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd: DEFAULT_PSD_TOL,
            basepoint: DEFAULT_BASEPOINT_TOL,
        }
    }
}

/// Mean and centered covariance of the Gaussian realization of a kernel.
#[derive(Debug, Clone)]
pub struct RealizationSpec {
    labels: Vec<String>,
    basepoint: String,
    basepoint_position: usize,
    mean: DVector<Complex64>,
    covariance: DMatrix<Complex64>,
    real: bool,
    psd_tol: f64,
    factor: OnceLock<Result<DMatrix<Complex64>>>,
    real_factor: OnceLock<Result<DMatrix<f64>>>,
}

impl PartialEq for RealizationSpec {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
            && self.basepoint == other.basepoint
            && self.basepoint_position == other.basepoint_position
            && self.mean == other.mean
            && self.covariance == other.covariance
    }
}

impl RealizationSpec {
    /// Labels of `S \ {s0}` in source kernel order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basepoint(&self) -> &str {
        &self.basepoint
    }

    /// Index of `s0` among the source kernel's labels.
    pub fn basepoint_position(&self) -> usize {
        self.basepoint_position
    }

    /// The source kernel's label order, `s0` included.
    pub fn source_labels(&self) -> Vec<String> {
        let mut out = self.labels.clone();
        out.insert(self.basepoint_position, self.basepoint.clone());
        out
    }

    pub fn mean(&self) -> &DVector<Complex64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<Complex64> {
        &self.covariance
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Whether the source kernel had no imaginary parts.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `L` with `L L^* = covariance`, from a clipped eigendecomposition.
    pub fn factor(&self) -> Result<&DMatrix<Complex64>> {
        self.factor
            .get_or_init(|| complex_factor(&self.covariance, self.psd_tol))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Real `L` with `L L^T = covariance` for kernels without imaginary parts.
    pub fn real_factor(&self) -> Result<&DMatrix<f64>> {
        if !self.real {
            return Err(KernelError::RealModeRequiresRealKernel);
        }
        self.real_factor
            .get_or_init(|| real_factor(&self.covariance, self.psd_tol))
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Rebuilds the source kernel as `cov(s, t) + mean(s) conj(mean(t))`,
    /// with `K(s, s0) = mean(s)` and `K(s0, s0) = 1`.
    pub fn reconstruct(&self) -> Result<IndexedKernel> {
        let n = self.dim() + 1;
        let p = self.basepoint_position;
        // source index -> spec index, None for the basepoint
        let spec_index = |i: usize| match i.cmp(&p) {
            std::cmp::Ordering::Less => Some(i),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(i - 1),
        };
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            for j in i..n {
                let z = match (spec_index(i), spec_index(j)) {
                    (None, None) => Complex64::new(1.0, 0.0),
                    (Some(s), None) => self.mean[s],
                    (None, Some(t)) => self.mean[t].conj(),
                    (Some(s), Some(t)) if s == t => {
                        Complex64::new(self.covariance[(s, s)].re + self.mean[s].norm_sqr(), 0.0)
                    }
                    (Some(s), Some(t)) => {
                        self.covariance[(s, t)] + self.mean[s] * self.mean[t].conj()
                    }
                };
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        IndexedKernel::new(self.source_labels(), m)
    }
}

fn threshold(values: &DVector<f64>, tol: f64) -> f64 {
    let largest = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    -tol * largest.max(1.0)
}

fn clipped_roots(values: &DVector<f64>, tol: f64) -> Result<Vec<f64>> {
    let limit = threshold(values, tol);
    values
        .iter()
        .map(|&v| {
            if v < limit {
                Err(KernelError::FactorizationFailure {
                    min_eigenvalue: v,
                    threshold: limit,
                })
            } else {
                Ok(v.max(0.0).sqrt())
            }
        })
        .collect()
}

fn complex_factor(cov: &DMatrix<Complex64>, tol: f64) -> Result<DMatrix<Complex64>> {
    let (values, vectors) = hermitian_eigen(cov)?;
    let roots = clipped_roots(&values, tol)?;
    let mut l = vectors;
    for (j, r) in roots.into_iter().enumerate() {
        l.column_mut(j).scale_mut(r);
    }
    Ok(l)
}

fn real_factor(cov: &DMatrix<Complex64>, tol: f64) -> Result<DMatrix<f64>> {
    let dim = cov.nrows();
    if dim == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let re = cov.map(|z| z.re);
    let eig = re
        .try_symmetric_eigen(1e-15, 10_000)
        .ok_or(KernelError::NumericalFailure { dim })?;
    let roots = clipped_roots(&eig.eigenvalues, tol)?;
    let mut l = eig.eigenvectors;
    for (j, r) in roots.into_iter().enumerate() {
        l.column_mut(j).scale_mut(r);
    }
    Ok(l)
}

/// Builds the Gaussian realization of `k` pinned at `s0`.
///
/// Fails with `NotPsd` if `k` does not pass the eigen-route certificate at
/// `tol.psd`, and with `BasepointNotUnit` if `K(s0, s0)` is not 1.
pub fn realize_process(k: &IndexedKernel, s0: &str, tol: &Tolerances) -> Result<RealizationSpec> {
    validate_tol(tol.psd)?;
    let p = k.check_unit_basepoint(s0, tol.basepoint)?;
    let cert = psd_check_eigen(k, tol.psd)?;
    if !cert.verdict {
        return Err(KernelError::NotPsd {
            min_eigenvalue: cert.min_eigenvalue,
            threshold: cert.threshold(),
        });
    }
    let rest: Vec<usize> = (0..k.dim()).filter(|&i| i != p).collect();
    let e = k.entries();
    let n = rest.len();
    let mean = DVector::from_iterator(n, rest.iter().map(|&s| e[(s, p)]));
    let mut covariance = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for a in 0..n {
        for b in a..n {
            let (s, t) = (rest[a], rest[b]);
            let z = e[(s, t)] - e[(s, p)] * e[(p, t)];
            covariance[(a, b)] = z;
            covariance[(b, a)] = z.conj();
        }
    }
    Ok(RealizationSpec {
        labels: rest.iter().map(|&i| k.labels()[i].clone()).collect(),
        basepoint: s0.to_owned(),
        basepoint_position: p,
        mean,
        covariance,
        real: k.is_real(),
        psd_tol: tol.psd,
        factor: OnceLock::new(),
        real_factor: OnceLock::new(),
    })
}

/// Two realizations pinned at a common basepoint, to be drawn independently.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedRealization {
    spec1: RealizationSpec,
    spec2: RealizationSpec,
    labels: Vec<String>,
}

impl GluedRealization {
    pub fn first(&self) -> &RealizationSpec {
        &self.spec1
    }

    pub fn second(&self) -> &RealizationSpec {
        &self.spec2
    }

    /// Product label order: first source order, then the second's non-basepoint labels.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basepoint(&self) -> &str {
        self.spec1.basepoint()
    }
}

/// Joins two realizations at their shared basepoint.
pub fn glue_realizations(
    spec1: RealizationSpec,
    spec2: RealizationSpec,
) -> Result<GluedRealization> {
    if spec1.basepoint != spec2.basepoint {
        return Err(KernelError::BasepointMismatch {
            first: spec1.basepoint.clone(),
            second: spec2.basepoint.clone(),
        });
    }
    if let Err(label) = disjoint_except(&spec1.labels, &spec2.labels, &spec1.basepoint) {
        return Err(KernelError::LabelCollision { label });
    }
    let mut labels = spec1.source_labels();
    labels.extend(spec2.labels.iter().cloned());
    Ok(GluedRealization {
        spec1,
        spec2,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair(label: &str, z: Complex64) -> IndexedKernel {
        IndexedKernel::from_rows(
            vec!["x0", label],
            vec![vec![c(1.0, 0.0), z], vec![z.conj(), c(1.0, 0.0)]],
        )
        .unwrap()
    }

    #[test]
    fn two_point_realization() {
        let spec = realize_process(&pair("a", c(0.5, 0.0)), "x0", &Tolerances::default()).unwrap();
        assert_eq!(spec.mean().as_slice(), &[c(0.5, 0.0)]);
        assert_eq!(spec.covariance()[(0, 0)], c(0.75, 0.0));
        assert_eq!(spec.labels(), ["a"]);
    }

    #[test]
    fn mean_is_kernel_column_at_basepoint() {
        let z = c(0.3, 0.4);
        let spec = realize_process(&pair("a", z), "x0", &Tolerances::default()).unwrap();
        // K(a, x0) = conj(K(x0, a))
        assert_eq!(spec.mean()[0], z.conj());
        assert_eq!(spec.covariance()[(0, 0)], c(1.0, 0.0) - z.conj() * z);
    }

    #[test]
    fn uncorrelated_basepoint_keeps_block() {
        let k = IndexedKernel::from_rows(
            vec!["x0", "a", "b"],
            vec![
                vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(2.0, 0.0), c(0.5, 0.5)],
                vec![c(0.0, 0.0), c(0.5, -0.5), c(1.0, 0.0)],
            ],
        )
        .unwrap();
        let spec = realize_process(&k, "x0", &Tolerances::default()).unwrap();
        assert!(spec.mean().iter().all(|z| *z == c(0.0, 0.0)));
        assert_eq!(
            spec.covariance(),
            &k.entries().view((1, 1), (2, 2)).into_owned()
        );
    }

    #[test]
    fn rank_one_kernel_has_zero_covariance() {
        let v = [c(1.0, 0.0), c(0.6, 0.3), c(-0.2, 0.9)];
        let rows = (0..3)
            .map(|i| (0..3).map(|j| v[i] * v[j].conj()).collect())
            .collect();
        let k = IndexedKernel::from_rows(vec!["x0", "p", "q"], rows).unwrap();
        let spec = realize_process(&k, "x0", &Tolerances::default()).unwrap();
        assert_eq!(spec.mean().as_slice(), &[v[1], v[2]]);
        assert!(spec.covariance().iter().all(|z| z.norm() < 1e-15));
        let l = spec.factor().unwrap();
        assert!(l.iter().all(|z| z.norm() < 1e-7));
    }

    #[test]
    fn factor_reproduces_covariance() {
        let k = IndexedKernel::from_rows(
            vec!["a", "x0", "b"],
            vec![
                vec![c(2.0, 0.0), c(0.4, 0.2), c(0.3, -0.6)],
                vec![c(0.4, -0.2), c(1.0, 0.0), c(0.1, 0.1)],
                vec![c(0.3, 0.6), c(0.1, -0.1), c(1.5, 0.0)],
            ],
        )
        .unwrap();
        let spec = realize_process(&k, "x0", &Tolerances::default()).unwrap();
        let l = spec.factor().unwrap();
        let diff = l * l.adjoint() - spec.covariance();
        assert!(diff.iter().all(|z| z.norm() <= 1e-10));
        assert_eq!(spec.source_labels(), k.labels());
        let back = spec.reconstruct().unwrap();
        for (x, y) in back.entries().iter().zip(k.entries().iter()) {
            assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn real_factor_only_for_real_kernels() {
        let spec = realize_process(&pair("a", c(0.5, 0.0)), "x0", &Tolerances::default()).unwrap();
        let l = spec.real_factor().unwrap();
        assert!((l[(0, 0)].abs() - 0.75f64.sqrt()).abs() < 1e-15);
        let spec = realize_process(&pair("a", c(0.5, 0.1)), "x0", &Tolerances::default()).unwrap();
        assert_eq!(
            spec.real_factor().unwrap_err(),
            KernelError::RealModeRequiresRealKernel
        );
    }

    #[test]
    fn non_psd_source_is_rejected() {
        let k = pair("a", c(2.0, 0.0));
        assert_eq!(
            realize_process(&k, "x0", &Tolerances::default())
                .unwrap_err()
                .code(),
            "NotPsd"
        );
        let k = IndexedKernel::from_rows(
            vec!["x0", "a"],
            vec![
                vec![c(2.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(1.0, 0.0)],
            ],
        )
        .unwrap();
        assert_eq!(
            realize_process(&k, "x0", &Tolerances::default())
                .unwrap_err()
                .code(),
            "BasepointNotUnit"
        );
    }

    #[test]
    fn gluing_checks_basepoint_and_labels() {
        let tol = Tolerances::default();
        let s1 = realize_process(&pair("a", c(0.5, 0.0)), "x0", &tol).unwrap();
        let s2 = realize_process(&pair("b", c(0.5, 0.5)), "x0", &tol).unwrap();
        let glued = glue_realizations(s1.clone(), s2).unwrap();
        assert_eq!(glued.labels(), ["x0", "a", "b"]);

        let clash = realize_process(&pair("a", c(0.1, 0.0)), "x0", &tol).unwrap();
        assert_eq!(
            glue_realizations(s1.clone(), clash).unwrap_err(),
            KernelError::LabelCollision { label: "a".into() }
        );

        let shifted = IndexedKernel::from_rows(
            vec!["b", "q"],
            vec![
                vec![c(1.0, 0.0), c(0.1, 0.0)],
                vec![c(0.1, 0.0), c(1.0, 0.0)],
            ],
        )
        .unwrap();
        let other = realize_process(&shifted, "b", &tol).unwrap();
        assert_eq!(
            glue_realizations(s1, other).unwrap_err().code(),
            "BasepointMismatch"
        );
    }

    #[test]
    fn single_point_specs_glue_to_the_basepoint() {
        let tol = Tolerances::default();
        let point = IndexedKernel::from_rows(vec!["x0"], vec![vec![c(1.0, 0.0)]]).unwrap();
        let s = realize_process(&point, "x0", &tol).unwrap();
        let glued = glue_realizations(s.clone(), s).unwrap();
        assert_eq!(glued.labels(), ["x0"]);
    }
}
