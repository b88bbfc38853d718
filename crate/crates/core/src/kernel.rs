//! Labeled Hermitian kernels and the Markov product.
//!
//! A kernel on a finite set is stored as an ordered list of distinct labels
//! together with the square matrix `entries[(i, j)] = K(labels[i], labels[j])`.
//! Hermitian symmetry is checked exactly when a kernel is built; nothing in
//! this crate repairs a matrix that fails it.

use std::collections::{HashMap, HashSet};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{KernelError, Result};

/// Default acceptance window for `|K(x0, x0) - 1|`.
pub const DEFAULT_BASEPOINT_TOL: f64 = 1e-12;

/// A Hermitian kernel on a finite ordered label set.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedKernel {
    labels: Vec<String>,
    entries: DMatrix<Complex64>,
    index: HashMap<String, usize>,
}

impl IndexedKernel {
    /// Validates and wraps a labeled matrix. Equivalent to [`make_kernel`].
    pub fn new(labels: Vec<String>, entries: DMatrix<Complex64>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(KernelError::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        if entries.nrows() != entries.ncols() {
            return Err(KernelError::DimensionMismatch {
                context: format!(
                    "kernel matrix is {}x{}, expected square",
                    entries.nrows(),
                    entries.ncols()
                ),
            });
        }
        if entries.nrows() != labels.len() {
            return Err(KernelError::DimensionMismatch {
                context: format!(
                    "{} labels for a {}x{} matrix",
                    labels.len(),
                    entries.nrows(),
                    entries.ncols()
                ),
            });
        }
        check_hermitian(&entries)?;
        Ok(IndexedKernel {
            labels,
            entries,
            index,
        })
    }

    /// Builds a kernel from row-major nested vectors.
    pub fn from_rows<S: Into<String>>(labels: Vec<S>, rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(KernelError::DimensionMismatch {
                    context: format!("row {i} has {} entries, expected {n}", row.len()),
                });
            }
        }
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        IndexedKernel::new(labels, entries)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    /// `K(a, b)`, looked up by label.
    pub fn get(&self, a: &str, b: &str) -> Option<Complex64> {
        Some(self.entries[(self.position(a)?, self.position(b)?)])
    }

    pub(crate) fn require(&self, label: &str) -> Result<usize> {
        self.position(label)
            .ok_or_else(|| KernelError::LabelNotFound {
                label: label.to_owned(),
            })
    }

    /// True when every entry has a zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// Restriction of the kernel to `labels`, in the given order.
    pub fn restrict<S: AsRef<str>>(&self, labels: &[S]) -> Result<IndexedKernel> {
        let idx = labels
            .iter()
            .map(|l| self.require(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let entries = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.entries[(idx[i], idx[j])]);
        IndexedKernel::new(
            labels.iter().map(|l| l.as_ref().to_owned()).collect(),
            entries,
        )
    }

    /// Errors unless `|K(label, label) - 1| <= tol`.
    pub fn check_unit_basepoint(&self, label: &str, tol: f64) -> Result<usize> {
        let i = self.require(label)?;
        let d = self.entries[(i, i)];
        if (d - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(KernelError::BasepointNotUnit {
                label: label.to_owned(),
                re: d.re,
                im: d.im,
            });
        }
        Ok(i)
    }
}

/// Validates `labels` and `entries` and returns the kernel.
pub fn make_kernel(labels: Vec<String>, entries: DMatrix<Complex64>) -> Result<IndexedKernel> {
    IndexedKernel::new(labels, entries)
}

fn check_hermitian(m: &DMatrix<Complex64>) -> Result<()> {
    let n = m.nrows();
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in i..n {
            let a = m[(i, j)];
            let b = m[(j, i)].conj();
            if a != b || a.re.is_nan() || a.im.is_nan() {
                let dev = (a - b).norm();
                let dev = if dev.is_nan() { f64::INFINITY } else { dev };
                if worst.is_none_or(|(_, _, w)| dev > w) {
                    worst = Some((i, j, dev));
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some((row, col, deviation)) => Err(KernelError::NotHermitian {
            row,
            col,
            deviation,
        }),
    }
}

/// The shared label `x0` at which two kernels are joined.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GluePoint {
    pub label: String,
}

impl GluePoint {
    pub fn new(label: impl Into<String>) -> Self {
        GluePoint {
            label: label.into(),
        }
    }
}

impl From<&str> for GluePoint {
    fn from(label: &str) -> Self {
        GluePoint::new(label)
    }
}

/// Labels shared by both kernels, in `k1` order.
pub fn shared_labels(k1: &IndexedKernel, k2: &IndexedKernel) -> Vec<String> {
    k1.labels()
        .iter()
        .filter(|l| k2.contains(l))
        .cloned()
        .collect()
}

/// Markov product `k1 *_{x0} k2`.
///
/// Result labels are `k1`'s labels followed by `k2`'s labels without `x0`.
/// Blocks over each operand's labels are copied verbatim; for `s1` in
/// `k1` and `s2` in `k2`, both different from `x0`, the cross entry is
/// `K1(s1, x0) * K2(x0, s2)` and its mirror is the conjugate.
pub fn markov_product(
    k1: &IndexedKernel,
    k2: &IndexedKernel,
    x0: &GluePoint,
    basepoint_tol: f64,
) -> Result<IndexedKernel> {
    let shared = shared_labels(k1, k2);
    if shared.len() != 1 {
        return Err(KernelError::IntersectionNotSingleton { shared });
    }
    if shared[0] != x0.label {
        return Err(KernelError::GlueLabelNotShared {
            label: x0.label.clone(),
        });
    }
    let p1 = k1.check_unit_basepoint(&x0.label, basepoint_tol)?;
    let p2 = k2.check_unit_basepoint(&x0.label, basepoint_tol)?;

    let n1 = k1.dim();
    // columns of k2 other than x0, in k2 order
    let rest2: Vec<usize> = (0..k2.dim()).filter(|&j| j != p2).collect();
    // position of each k2 index inside the product
    let mut place2 = vec![0usize; k2.dim()];
    place2[p2] = p1;
    for (offset, &j) in rest2.iter().enumerate() {
        place2[j] = n1 + offset;
    }

    let n = n1 + rest2.len();
    let e1 = k1.entries();
    let e2 = k2.entries();
    let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n1 {
        for j in 0..n1 {
            out[(i, j)] = e1[(i, j)];
        }
    }
    for i in 0..k2.dim() {
        for j in 0..k2.dim() {
            out[(place2[i], place2[j])] = e2[(i, j)];
        }
    }
    for i in (0..n1).filter(|&i| i != p1) {
        for &j in &rest2 {
            let cross = e1[(i, p1)] * e2[(p2, j)];
            out[(i, place2[j])] = cross;
            out[(place2[j], i)] = cross.conj();
        }
    }

    let mut labels = k1.labels().to_vec();
    labels.extend(rest2.iter().map(|&j| k2.labels()[j].clone()));
    IndexedKernel::new(labels, out)
}

/// Rescales `k` by `1 / K(x0, x0)` so the basepoint diagonal becomes 1.
///
/// Requires the diagonal entry to be real and strictly positive; scaling by
/// a positive constant keeps a PSD kernel PSD. Never applied implicitly.
pub fn normalize_at_basepoint(k: &IndexedKernel, x0: &str) -> Result<IndexedKernel> {
    let i = k.require(x0)?;
    let d = k.entries()[(i, i)];
    if d.im != 0.0 || !d.re.is_finite() || d.re <= 0.0 {
        return Err(KernelError::BasepointNotPositive {
            label: x0.to_owned(),
        });
    }
    let scale = d.re;
    let entries = k
        .entries()
        .map(|z| Complex64::new(z.re / scale, z.im / scale));
    IndexedKernel::new(k.labels().to_vec(), entries)
}

/// Distinctness check shared by the gluing code.
pub(crate) fn disjoint_except<'a>(
    a: impl IntoIterator<Item = &'a String>,
    b: impl IntoIterator<Item = &'a String>,
    except: &str,
) -> std::result::Result<(), String> {
    let set: HashSet<&String> = a.into_iter().collect();
    for l in b {
        if l != except && set.contains(l) {
            return Err(l.clone());
        }
    }
    Ok(())
}
