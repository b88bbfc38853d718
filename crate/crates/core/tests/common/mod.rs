#![allow(dead_code)]

use std::collections::VecDeque;

use markov_product::{GluingTree, IndexedKernel, TreeEdge};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Copies the upper triangle onto the lower one by conjugation and makes the
/// diagonal real, so the result is exactly Hermitian.
pub fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        out[(i, i)] = c(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            out[(j, i)] = m[(i, j)].conj();
        }
    }
    out
}

/// `V^* V` for a random `rank x n` complex Gaussian `V`.
pub fn gram(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<Complex64> {
    let v = DMatrix::from_fn(rank, n, |_, _| gaussian(rng));
    hermitize(&(v.adjoint() * v))
}

/// Gram kernel on `labels` scaled so `K(x0, x0) = 1`.
pub fn unit_gram_kernel(rng: &mut ChaCha8Rng, labels: Vec<String>, x0: &str) -> IndexedKernel {
    let n = labels.len();
    let rank = rng.random_range(1..=n + 1);
    let k = IndexedKernel::new(labels, gram(rng, n, rank)).unwrap();
    markov_product::normalize_at_basepoint(&k, x0).unwrap()
}

/// Gram kernel with unit diagonal everywhere.
pub fn correlation_kernel(rng: &mut ChaCha8Rng, labels: Vec<String>) -> IndexedKernel {
    let n = labels.len();
    let rank = rng.random_range(1..=n + 1);
    let g = gram(rng, n, rank);
    let d: Vec<f64> = (0..n).map(|i| g[(i, i)].re.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(1.0, 0.0)
        } else {
            g[(i, j)] / (d[i] * d[j])
        }
    });
    IndexedKernel::new(labels, hermitize(&m)).unwrap()
}

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Random unitary from the QR factorization of a complex Gaussian matrix.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| gaussian(rng));
    g.qr().q()
}

/// Hermitian matrix with spectrum `values`, rescaled to a unit (0, 0) entry.
/// Returns `None` when the (0, 0) entry is too small to rescale by.
pub fn unit_corner_with_spectrum(
    rng: &mut ChaCha8Rng,
    values: &[f64],
) -> Option<DMatrix<Complex64>> {
    let n = values.len();
    let u = unitary(rng, n);
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(values[i], 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let t = hermitize(&(&u * d * u.adjoint()));
    let corner = t[(0, 0)].re;
    if corner < 0.1 {
        return None;
    }
    let mut t = t.map(|z| z / corner);
    t[(0, 0)] = c(1.0, 0.0);
    Some(hermitize(&t))
}

/// Smallest eigenvalue via the real embedding `[[X, -Y], [Y, X]]` of `X + iY`.
pub fn embedded_min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    big.symmetric_eigen().eigenvalues.min()
}

/// Re(v^* M v) by explicit summation.
pub fn quadratic_form(m: &DMatrix<Complex64>, v: &[Complex64]) -> f64 {
    let mut acc = c(0.0, 0.0);
    for i in 0..v.len() {
        for j in 0..v.len() {
            acc += v[i].conj() * m[(i, j)] * v[j];
        }
    }
    acc.re
}

/// Random tree of correlation kernels. Node `k > 0` hangs off a random
/// earlier node and shares one of that node's labels.
pub fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize, max_size: usize) -> GluingTree {
    let count = rng.random_range(1..=max_nodes);
    let mut nodes: Vec<IndexedKernel> = Vec::new();
    let mut edges = Vec::new();
    for k in 0..count {
        let size = rng.random_range(2..=max_size);
        let mut names = labels(&format!("n{k}_"), size);
        if k > 0 {
            let parent = rng.random_range(0..k);
            let pl = nodes[parent].labels();
            let shared = pl[rng.random_range(0..pl.len())].clone();
            let slot = rng.random_range(0..size);
            names[slot] = shared.clone();
            edges.push(TreeEdge::new(parent, k, shared));
        }
        nodes.push(correlation_kernel(rng, names));
    }
    // shuffle edge orientation so traversals meet both directions
    for e in edges.iter_mut() {
        if rng.random_bool(0.5) {
            std::mem::swap(&mut e.a, &mut e.b);
        }
    }
    GluingTree::new(nodes, edges)
}

/// Product of kernel values along the tree path from `u` (in node `from`)
/// to `v` (in node `to`), passing through each edge's shared label.
pub fn path_product(tree: &GluingTree, from: usize, u: &str, to: usize, v: &str) -> Complex64 {
    let n = tree.nodes.len();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[from] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        for (idx, e) in tree.edges.iter().enumerate() {
            let y = if e.a == x {
                e.b
            } else if e.b == x {
                e.a
            } else {
                continue;
            };
            if !seen[y] {
                seen[y] = true;
                prev[y] = Some((x, idx));
                queue.push_back(y);
            }
        }
    }
    // walk back from `to`, collecting (node, entry label) hops
    let mut hops = Vec::new();
    let mut cur = to;
    while cur != from {
        let (p, idx) = prev[cur].expect("connected");
        hops.push((cur, tree.edges[idx].label.clone()));
        cur = p;
    }
    hops.reverse();
    let mut value = c(1.0, 0.0);
    let mut node = from;
    let mut at = u.to_owned();
    for (next, glue) in hops {
        value *= tree.nodes[node].get(&at, &glue).unwrap();
        node = next;
        at = glue;
    }
    value * tree.nodes[node].get(&at, v).unwrap()
}
