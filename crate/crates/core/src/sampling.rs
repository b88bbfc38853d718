//! Seeded sampling of realizations and empirical second moments.
//!
//! Rows are produced in fixed-size blocks. Block `b` of a stream draws from
//! a ChaCha generator keyed by the stream seed and positioned on stream
//! `b`, so serial and parallel evaluation produce the same bits.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{KernelError, Result};
use crate::kernel::IndexedKernel;
use crate::realization::{GluedRealization, RealizationSpec};

/// Rows per independently seeded block.
pub const BLOCK_ROWS: usize = 4096;

/// Tags mixed into the user seed to derive the two gluing streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamTags {
    pub first: u64,
    pub second: u64,
}

impl StreamTags {
    pub const DEFAULT: StreamTags = StreamTags {
        first: 0x243f_6a88_85a3_08d3,
        second: 0x1319_8a2e_0370_7344,
    };

    pub fn swapped(self) -> StreamTags {
        StreamTags {
            first: self.second,
            second: self.first,
        }
    }
}

impl Default for StreamTags {
    fn default() -> Self {
        StreamTags::DEFAULT
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ tag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    /// Draw real Gaussians; only valid for kernels with zero imaginary parts.
    pub real_mode: bool,
    /// Fill blocks on the rayon pool. Output is identical either way.
    pub parallel: bool,
    pub tags: StreamTags,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            real_mode: false,
            parallel: true,
            tags: StreamTags::DEFAULT,
        }
    }
}

/// `n` draws of a realization, one row per draw, columns in label order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    labels: Vec<String>,
    basepoint: String,
    seed: u64,
    rows: usize,
    data: Vec<Complex64>,
}

impl SampleBatch {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basepoint(&self) -> &str {
        &self.basepoint
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let d = self.cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn column(&self, label: &str) -> Option<Vec<Complex64>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some((0..self.rows).map(|i| self.row(i)[j]).collect())
    }

    /// Row-major sample storage.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn from_parts(
        labels: Vec<String>,
        basepoint: String,
        seed: u64,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        let d = labels.len();
        if d == 0 || !data.len().is_multiple_of(d) {
            return Err(KernelError::DimensionMismatch {
                context: format!("{} values for {d} columns", data.len()),
            });
        }
        if !labels.contains(&basepoint) {
            return Err(KernelError::LabelNotFound { label: basepoint });
        }
        Ok(SampleBatch {
            rows: data.len() / d,
            labels,
            basepoint,
            seed,
            data,
        })
    }
}

/// A realization prepared for drawing: its factor and target columns.
struct Source<'a> {
    spec: &'a RealizationSpec,
    stream_seed: u64,
    columns: Vec<usize>,
    factor: Factor<'a>,
}

enum Factor<'a> {
    Complex(&'a DMatrix<Complex64>),
    Real(&'a DMatrix<f64>),
}

impl<'a> Source<'a> {
    fn new(
        spec: &'a RealizationSpec,
        stream_seed: u64,
        columns: Vec<usize>,
        real: bool,
    ) -> Result<Self> {
        let factor = if real {
            Factor::Real(spec.real_factor()?)
        } else {
            Factor::Complex(spec.factor()?)
        };
        Ok(Source {
            spec,
            stream_seed,
            columns,
            factor,
        })
    }

    /// Fills this source's columns for the rows of `chunk`, which is block `block`.
    fn fill_block(&self, block: usize, chunk: &mut [Complex64], width: usize) {
        let n = self.spec.dim();
        if n == 0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.stream_seed);
        rng.set_stream(block as u64);
        let mean = self.spec.mean();
        match self.factor {
            Factor::Complex(l) => {
                let mut z = vec![Complex64::new(0.0, 0.0); n];
                for row in chunk.chunks_exact_mut(width) {
                    for zk in z.iter_mut() {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        *zk = Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2);
                    }
                    for (i, &col) in self.columns.iter().enumerate() {
                        let mut acc = mean[i];
                        for (k, zk) in z.iter().enumerate() {
                            acc += l[(i, k)] * zk;
                        }
                        row[col] = acc;
                    }
                }
            }
            Factor::Real(l) => {
                let mut z = vec![0.0f64; n];
                for row in chunk.chunks_exact_mut(width) {
                    for zk in z.iter_mut() {
                        *zk = rng.sample(StandardNormal);
                    }
                    for (i, &col) in self.columns.iter().enumerate() {
                        let mut acc = mean[i].re;
                        for (k, zk) in z.iter().enumerate() {
                            acc += l[(i, k)] * zk;
                        }
                        row[col] = Complex64::new(acc, 0.0);
                    }
                }
            }
        }
    }
}

fn draw(
    labels: Vec<String>,
    basepoint: String,
    seed: u64,
    n: usize,
    sources: &[Source<'_>],
    parallel: bool,
) -> Result<SampleBatch> {
    if n == 0 {
        return Err(KernelError::InvalidSampleCount);
    }
    let width = labels.len();
    let base_col = labels
        .iter()
        .position(|l| *l == basepoint)
        .expect("basepoint column");
    let mut data = vec![Complex64::new(0.0, 0.0); n * width];
    let fill = |(block, chunk): (usize, &mut [Complex64])| {
        for row in chunk.chunks_exact_mut(width) {
            row[base_col] = Complex64::new(1.0, 0.0);
        }
        for source in sources {
            source.fill_block(block, chunk, width);
        }
    };
    if parallel {
        data.par_chunks_mut(BLOCK_ROWS * width)
            .enumerate()
            .for_each(fill);
    } else {
        data.chunks_mut(BLOCK_ROWS * width)
            .enumerate()
            .for_each(fill);
    }
    SampleBatch::from_parts(labels, basepoint, seed, data)
}

fn check_real_mode(options: &SampleOptions, specs: &[&RealizationSpec]) -> Result<()> {
    if options.real_mode && specs.iter().any(|s| !s.is_real()) {
        return Err(KernelError::RealModeRequiresRealKernel);
    }
    Ok(())
}

/// Draws `n` rows of `spec`, columns in the source kernel's order with the
/// basepoint column fixed to 1.
pub fn sample_realization(spec: &RealizationSpec, n: usize, seed: u64) -> Result<SampleBatch> {
    sample_realization_with(spec, n, seed, &SampleOptions::default())
}

pub fn sample_realization_with(
    spec: &RealizationSpec,
    n: usize,
    seed: u64,
    options: &SampleOptions,
) -> Result<SampleBatch> {
    check_real_mode(options, &[spec])?;
    let p = spec.basepoint_position();
    let columns = (0..spec.dim())
        .map(|i| if i < p { i } else { i + 1 })
        .collect();
    let source = Source::new(
        spec,
        derive_seed(seed, options.tags.first),
        columns,
        options.real_mode,
    )?;
    draw(
        spec.source_labels(),
        spec.basepoint().to_owned(),
        seed,
        n,
        &[source],
        options.parallel,
    )
}

/// Draws `n` rows of the glued family: first-spec columns and second-spec
/// columns come from two streams derived from `seed`, the basepoint column is 1.
pub fn sample_glued(glued: &GluedRealization, n: usize, seed: u64) -> Result<SampleBatch> {
    sample_glued_with(glued, n, seed, &SampleOptions::default())
}

pub fn sample_glued_with(
    glued: &GluedRealization,
    n: usize,
    seed: u64,
    options: &SampleOptions,
) -> Result<SampleBatch> {
    let (spec1, spec2) = (glued.first(), glued.second());
    check_real_mode(options, &[spec1, spec2])?;
    let p = spec1.basepoint_position();
    let cols1 = (0..spec1.dim())
        .map(|i| if i < p { i } else { i + 1 })
        .collect();
    let offset = spec1.dim() + 1;
    let cols2 = (0..spec2.dim()).map(|i| offset + i).collect();
    let sources = [
        Source::new(
            spec1,
            derive_seed(seed, options.tags.first),
            cols1,
            options.real_mode,
        )?,
        Source::new(
            spec2,
            derive_seed(seed, options.tags.second),
            cols2,
            options.real_mode,
        )?,
    ];
    draw(
        glued.labels().to_vec(),
        glued.basepoint().to_owned(),
        seed,
        n,
        &sources,
        options.parallel,
    )
}

/// Empirical second moments with per-entry sample variances.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub kernel: IndexedKernel,
    /// Sample variance of `Y_s conj(Y_t)` per entry.
    pub variance: DMatrix<f64>,
    pub rows: usize,
}

impl MomentEstimate {
    pub fn max_variance(&self) -> f64 {
        self.variance.iter().fold(0.0f64, |a, &v| a.max(v))
    }

    /// `5 sqrt(v_max / n)`.
    pub fn five_sigma(&self) -> f64 {
        5.0 * (self.max_variance() / self.rows as f64).sqrt()
    }
}

pub fn second_moment_statistics(batch: &SampleBatch) -> Result<MomentEstimate> {
    let n = batch.rows();
    if n < 2 {
        return Err(KernelError::EmptyBatch {
            rows: n,
            required: 2,
        });
    }
    let d = batch.cols();
    let mut sum = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    let mut sq = DMatrix::from_element(d, d, 0.0f64);
    for r in 0..n {
        let y = batch.row(r);
        for s in 0..d {
            for t in s..d {
                let prod = y[s] * y[t].conj();
                sum[(s, t)] += prod;
                sq[(s, t)] += prod.norm_sqr();
            }
        }
    }
    let nf = n as f64;
    let base = batch
        .labels()
        .iter()
        .position(|l| l == batch.basepoint())
        .expect("basepoint column");
    let mut kernel = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
    let mut variance = DMatrix::from_element(d, d, 0.0f64);
    for s in 0..d {
        for t in s..d {
            let m = if s == t {
                Complex64::new(sum[(s, s)].re / nf, 0.0)
            } else {
                sum[(s, t)] / nf
            };
            kernel[(s, t)] = m;
            kernel[(t, s)] = m.conj();
            let v = (sq[(s, t)] / nf - m.norm_sqr()).max(0.0) * nf / (nf - 1.0);
            variance[(s, t)] = v;
            variance[(t, s)] = v;
        }
    }
    kernel[(base, base)] = Complex64::new(1.0, 0.0);
    Ok(MomentEstimate {
        kernel: IndexedKernel::new(batch.labels().to_vec(), kernel)?,
        variance,
        rows: n,
    })
}

/// `(1/n) sum_rows Y_s conj(Y_t)` as a kernel on the batch labels.
pub fn estimate_second_moments(batch: &SampleBatch) -> Result<IndexedKernel> {
    Ok(second_moment_statistics(batch)?.kernel)
}
