//! End-to-end check of a Markov product against sampled second moments.

use crate::error::{KernelError, Result};
use crate::kernel::{markov_product, GluePoint, IndexedKernel};
use crate::psd::{psd_check_eigen, PsdCertificate};
use crate::realization::{glue_realizations, realize_process, Tolerances};
use crate::sampling::{sample_glued_with, second_moment_statistics, SampleOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    /// Pass threshold on the max entrywise deviation; `5 sqrt(v_max / n)` when unset.
    pub mc_tol: Option<f64>,
    pub tolerances: Tolerances,
    pub sampling: SampleOptions,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 1_000_000,
            seed: 0,
            mc_tol: None,
            tolerances: Tolerances::default(),
            sampling: SampleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub product: IndexedKernel,
    pub certificate: PsdCertificate,
    pub empirical: IndexedKernel,
    pub max_deviation: f64,
    pub max_variance: f64,
    pub mc_tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub passed: bool,
}

/// Glues `k1` and `k2` at `x0`, certifies the product, then samples the
/// glued realization and compares its empirical kernel with the product.
pub fn verify_realization(
    k1: &IndexedKernel,
    k2: &IndexedKernel,
    x0: &GluePoint,
    config: &VerifyConfig,
) -> Result<VerifyReport> {
    if config.samples == 0 {
        return Err(KernelError::InvalidSampleCount);
    }
    if let Some(t) = config.mc_tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(KernelError::InvalidTolerance { value: t });
        }
    }
    let tol = &config.tolerances;
    let product = markov_product(k1, k2, x0, tol.basepoint)?;
    let certificate = psd_check_eigen(&product, tol.psd)?;
    let glued = glue_realizations(
        realize_process(k1, &x0.label, tol)?,
        realize_process(k2, &x0.label, tol)?,
    )?;
    debug_assert_eq!(glued.labels(), product.labels());
    let batch = sample_glued_with(&glued, config.samples, config.seed, &config.sampling)?;
    let stats = second_moment_statistics(&batch)?;
    let max_deviation = stats
        .kernel
        .entries()
        .iter()
        .zip(product.entries().iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    let mc_tol = config.mc_tol.unwrap_or_else(|| stats.five_sigma());
    Ok(VerifyReport {
        passed: certificate.verdict && max_deviation <= mc_tol,
        max_variance: stats.max_variance(),
        empirical: stats.kernel,
        product,
        certificate,
        max_deviation,
        mc_tol,
        samples: config.samples,
        seed: config.seed,
    })
}
