//! Iterated Markov products along a tree of kernels.

use std::collections::VecDeque;

use crate::error::{KernelError, Result};
use crate::kernel::{markov_product, shared_labels, GluePoint, IndexedKernel};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub label: String,
}

impl TreeEdge {
    pub fn new(a: usize, b: usize, label: impl Into<String>) -> Self {
        TreeEdge {
            a,
            b,
            label: label.into(),
        }
    }
}

/// Kernels joined pairwise at singleton glue labels along the edges of a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct GluingTree {
    pub nodes: Vec<IndexedKernel>,
    pub edges: Vec<TreeEdge>,
}

/// Where the fold starts and how it walks the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Traversal {
    pub root: usize,
    pub depth_first: bool,
}

impl GluingTree {
    pub fn new(nodes: Vec<IndexedKernel>, edges: Vec<TreeEdge>) -> Self {
        GluingTree { nodes, edges }
    }

    /// Checks the tree shape and each edge's label against its two endpoints.
    pub fn validate(&self, basepoint_tol: f64) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(not_a_tree("no nodes"));
        }
        if self.edges.len() != n - 1 {
            return Err(not_a_tree(format!(
                "{} edges for {n} nodes",
                self.edges.len()
            )));
        }
        for e in &self.edges {
            if e.a >= n || e.b >= n {
                return Err(not_a_tree(format!("edge ({}, {}) out of range", e.a, e.b)));
            }
            if e.a == e.b {
                return Err(not_a_tree(format!("self loop at node {}", e.a)));
            }
        }
        let reached = self.walk(Traversal::default())?.len() + 1;
        if reached != n {
            return Err(not_a_tree(format!("only {reached} of {n} nodes connected")));
        }
        for e in &self.edges {
            let (ka, kb) = (&self.nodes[e.a], &self.nodes[e.b]);
            let shared = shared_labels(ka, kb);
            if shared.len() != 1 {
                return Err(KernelError::IntersectionNotSingleton { shared });
            }
            if shared[0] != e.label {
                return Err(KernelError::GlueLabelNotShared {
                    label: e.label.clone(),
                });
            }
            ka.check_unit_basepoint(&e.label, basepoint_tol)?;
            kb.check_unit_basepoint(&e.label, basepoint_tol)?;
        }
        Ok(())
    }

    /// Edge visits `(new node, edge index)` in traversal order.
    fn walk(&self, order: Traversal) -> Result<Vec<(usize, usize)>> {
        let n = self.nodes.len();
        if order.root >= n {
            return Err(not_a_tree(format!("root {} out of range", order.root)));
        }
        let mut seen = vec![false; n];
        seen[order.root] = true;
        let mut frontier = VecDeque::from([order.root]);
        let mut visits = Vec::with_capacity(n.saturating_sub(1));
        loop {
            let next = if order.depth_first {
                frontier.pop_back()
            } else {
                frontier.pop_front()
            };
            let Some(u) = next else { break };
            let mut children = Vec::new();
            for (idx, e) in self.edges.iter().enumerate() {
                let other = if e.a == u {
                    e.b
                } else if e.b == u {
                    e.a
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    visits.push((other, idx));
                    children.push(other);
                }
            }
            if order.depth_first {
                // keep edge-list order among siblings when popping from the back
                frontier.extend(children.into_iter().rev());
            } else {
                frontier.extend(children);
            }
        }
        Ok(visits)
    }
}

fn not_a_tree(reason: impl Into<String>) -> KernelError {
    KernelError::NotATree {
        reason: reason.into(),
    }
}

/// Folds the tree breadth-first from node 0.
pub fn glue_tree(tree: &GluingTree, basepoint_tol: f64) -> Result<IndexedKernel> {
    glue_tree_with(tree, Traversal::default(), basepoint_tol)
}

/// Folds the tree with an explicit traversal. Label order of the result
/// depends on the traversal; its entries, looked up by label, do not.
pub fn glue_tree_with(
    tree: &GluingTree,
    order: Traversal,
    basepoint_tol: f64,
) -> Result<IndexedKernel> {
    tree.validate(basepoint_tol)?;
    let mut acc = tree.nodes[order.root].clone();
    for (node, edge) in tree.walk(order)? {
        let glue = GluePoint::new(tree.edges[edge].label.clone());
        acc = markov_product(&acc, &tree.nodes[node], &glue, basepoint_tol)?;
    }
    Ok(acc)
}
