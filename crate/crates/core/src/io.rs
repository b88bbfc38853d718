//! Document formats for kernels, trees, certificates, reports and sample batches.
//!
//! Documents are JSON. Complex scalars are `[re, im]` pairs and every float
//! is written with 17 significant digits, so a write/read cycle is exact.
//! Sample batches use a tab-separated table with values written as `re+imi`.

use std::io::{self, BufRead, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter};

use crate::error::{KernelError, Result};
use crate::kernel::IndexedKernel;
use crate::psd::PsdCertificate;
use crate::realization::RealizationSpec;
use crate::sampling::SampleBatch;
use crate::tree::{GluingTree, TreeEdge};
use crate::verify::VerifyReport;

/// Formats `v` with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter writing floats with 17 significant digits.
struct SignificantDigits;

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            writer.write_all(format_f64(value).as_bytes())
        } else {
            CompactFormatter.write_null(writer)
        }
    }
}

/// Serializes `value` as a single-line JSON document with a trailing newline.
pub fn to_document<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits);
    value
        .serialize(&mut ser)
        .expect("documents serialize into memory");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("{0}")]
    Format(String),
}

type Pair = [f64; 2];

fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

fn unpair(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDocument {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<Pair>>,
}

impl From<&IndexedKernel> for KernelDocument {
    fn from(k: &IndexedKernel) -> Self {
        let e = k.entries();
        KernelDocument {
            labels: k.labels().to_vec(),
            entries: (0..k.dim())
                .map(|i| (0..k.dim()).map(|j| pair(e[(i, j)])).collect())
                .collect(),
        }
    }
}

impl TryFrom<KernelDocument> for IndexedKernel {
    type Error = KernelError;

    fn try_from(doc: KernelDocument) -> Result<Self> {
        let rows = doc
            .entries
            .into_iter()
            .map(|row| row.into_iter().map(unpair).collect())
            .collect();
        IndexedKernel::from_rows(doc.labels, rows)
    }
}

pub fn kernel_to_document(k: &IndexedKernel) -> String {
    to_document(&KernelDocument::from(k))
}

pub fn kernel_from_document(text: &str) -> std::result::Result<IndexedKernel, DocumentError> {
    let doc: KernelDocument = serde_json::from_str(text)?;
    Ok(IndexedKernel::try_from(doc)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub nodes: Vec<KernelDocument>,
    pub edges: Vec<(usize, usize, String)>,
}

impl From<&GluingTree> for TreeDocument {
    fn from(t: &GluingTree) -> Self {
        TreeDocument {
            nodes: t.nodes.iter().map(KernelDocument::from).collect(),
            edges: t
                .edges
                .iter()
                .map(|e| (e.a, e.b, e.label.clone()))
                .collect(),
        }
    }
}

impl TryFrom<TreeDocument> for GluingTree {
    type Error = KernelError;

    fn try_from(doc: TreeDocument) -> Result<Self> {
        let nodes = doc
            .nodes
            .into_iter()
            .map(IndexedKernel::try_from)
            .collect::<Result<Vec<_>>>()?;
        let edges = doc
            .edges
            .into_iter()
            .map(|(a, b, label)| TreeEdge::new(a, b, label))
            .collect();
        Ok(GluingTree::new(nodes, edges))
    }
}

pub fn tree_from_document(text: &str) -> std::result::Result<GluingTree, DocumentError> {
    let doc: TreeDocument = serde_json::from_str(text)?;
    Ok(GluingTree::try_from(doc)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub verdict: bool,
    pub min_eigenvalue: f64,
    pub scale: f64,
    pub tolerance_used: f64,
    pub witness: Option<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl From<&PsdCertificate> for CertificateDocument {
    fn from(c: &PsdCertificate) -> Self {
        CertificateDocument {
            verdict: c.verdict,
            min_eigenvalue: c.min_eigenvalue,
            scale: c.scale,
            tolerance_used: c.tolerance_used,
            witness: c
                .witness
                .as_ref()
                .map(|w| w.iter().copied().map(pair).collect()),
            generated_at: None,
        }
    }
}

impl From<CertificateDocument> for PsdCertificate {
    fn from(d: CertificateDocument) -> Self {
        PsdCertificate {
            verdict: d.verdict,
            min_eigenvalue: d.min_eigenvalue,
            scale: d.scale,
            tolerance_used: d.tolerance_used,
            witness: d.witness.map(|w| w.into_iter().map(unpair).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationDocument {
    pub basepoint: String,
    pub labels: Vec<String>,
    pub mean: Vec<Pair>,
    pub covariance: Vec<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

fn matrix_rows(m: &DMatrix<Complex64>) -> Vec<Vec<Pair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
        .collect()
}

impl From<&RealizationSpec> for RealizationDocument {
    fn from(s: &RealizationSpec) -> Self {
        RealizationDocument {
            basepoint: s.basepoint().to_owned(),
            labels: s.labels().to_vec(),
            mean: s.mean().iter().copied().map(pair).collect(),
            covariance: matrix_rows(s.covariance()),
            generated_at: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyDocument {
    pub passed: bool,
    pub max_deviation: f64,
    pub mc_tol: f64,
    pub max_variance: f64,
    pub samples: usize,
    pub seed: u64,
    pub product: KernelDocument,
    pub certificate: CertificateDocument,
    pub empirical: KernelDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl From<&VerifyReport> for VerifyDocument {
    fn from(r: &VerifyReport) -> Self {
        VerifyDocument {
            passed: r.passed,
            max_deviation: r.max_deviation,
            mc_tol: r.mc_tol,
            max_variance: r.max_variance,
            samples: r.samples,
            seed: r.seed,
            product: (&r.product).into(),
            certificate: (&r.certificate).into(),
            empirical: (&r.empirical).into(),
            generated_at: None,
        }
    }
}

/// `re+imi` with 17 significant digits on each part.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", format_f64(z.re), format_f64(z.im.abs()))
}

pub fn parse_complex(s: &str) -> std::result::Result<Complex64, DocumentError> {
    let bad = || DocumentError::Format(format!("malformed complex value {s:?}"));
    let body = s.strip_suffix('i').ok_or_else(bad)?;
    let bytes = body.as_bytes();
    // the imaginary sign is the last +/- that does not follow an exponent marker
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im: f64 = body[split..].parse().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

/// Writes a header `#seed=<seed>;basepoint=<label>` followed by the labels,
/// then one tab-separated row per draw.
pub fn write_sample_batch<W: Write>(batch: &SampleBatch, mut out: W) -> io::Result<()> {
    write!(
        out,
        "#seed={};basepoint={}",
        batch.seed(),
        batch.basepoint()
    )?;
    for label in batch.labels() {
        write!(out, "\t{label}")?;
    }
    writeln!(out)?;
    let mut line = String::new();
    for r in 0..batch.rows() {
        line.clear();
        for (j, z) in batch.row(r).iter().enumerate() {
            if j > 0 {
                line.push('\t');
            }
            line.push_str(&format_complex(*z));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_sample_batch<R: BufRead>(input: R) -> std::result::Result<SampleBatch, DocumentError> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| DocumentError::Format("missing header".into()))?
        .map_err(|e| DocumentError::Format(e.to_string()))?;
    let mut fields = header.split('\t');
    let meta = fields.next().unwrap_or_default();
    let meta = meta
        .strip_prefix('#')
        .ok_or_else(|| DocumentError::Format("header must start with '#'".into()))?;
    let mut seed = None;
    let mut basepoint = None;
    for kv in meta.split(';') {
        match kv.split_once('=') {
            Some(("seed", v)) => {
                seed = Some(
                    v.parse::<u64>()
                        .map_err(|e| DocumentError::Format(e.to_string()))?,
                )
            }
            Some(("basepoint", v)) => basepoint = Some(v.to_owned()),
            _ => {
                return Err(DocumentError::Format(format!(
                    "unknown header field {kv:?}"
                )))
            }
        }
    }
    let labels: Vec<String> = fields.map(str::to_owned).collect();
    let mut data = Vec::new();
    for line in lines {
        let line = line.map_err(|e| DocumentError::Format(e.to_string()))?;
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for cell in line.split('\t') {
            data.push(parse_complex(cell)?);
        }
        if data.len() - before != labels.len() {
            return Err(DocumentError::Format(format!(
                "row has {} values for {} labels",
                data.len() - before,
                labels.len()
            )));
        }
    }
    let seed = seed.ok_or_else(|| DocumentError::Format("header lacks seed".into()))?;
    let basepoint =
        basepoint.ok_or_else(|| DocumentError::Format("header lacks basepoint".into()))?;
    Ok(SampleBatch::from_parts(labels, basepoint, seed, data)?)
}
