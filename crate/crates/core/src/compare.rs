//! Side-by-side comparison of two value trees.
//!
//! Nodes are matched on the words of their labels. A merged or split node
//! also answers to the labels of the literals it came from.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{ValueTree, ValueTreeNode};

pub const DEFAULT_THRESHOLD: f64 = 0.3;

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "by", "for", "from", "in", "into", "merged", "not", "of", "on", "or", "the",
    "to", "valuing", "with",
];

/// Stem length; crude, but enough to fold "economic" and "economy".
const STEM: usize = 6;

pub fn tokens(label: &str) -> BTreeSet<String> {
    label
        .split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty() && !STOPWORDS.contains(&w.as_str()))
        .map(|w| w.chars().take(STEM).collect())
        .collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn label_sets(node: &ValueTreeNode) -> Vec<BTreeSet<String>> {
    std::iter::once(node.label.as_str())
        .chain(node.provenance.sources().iter().map(|s| s.label.as_str()).collect::<Vec<_>>())
        .map(tokens)
        .filter(|t| !t.is_empty())
        .collect()
}

/// Best similarity between any label of `a` and any label of `b`.
pub fn similarity(a: &ValueTreeNode, b: &ValueTreeNode) -> f64 {
    let (la, lb) = (label_sets(a), label_sets(b));
    la.iter()
        .flat_map(|x| lb.iter().map(move |y| jaccard(x, y)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchedPair {
    pub left: String,
    pub left_label: String,
    pub left_depth: usize,
    pub right: String,
    pub right_label: String,
    pub right_depth: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonReport {
    pub threshold: f64,
    pub pairs: Vec<MatchedPair>,
}

fn depth(tree: &ValueTree, id: &str) -> usize {
    let mut d = 0;
    let mut at = id;
    while let Some(p) = tree.parent(at) {
        d += 1;
        at = p;
        if d > tree.len() {
            break;
        }
    }
    d
}

/// Every node pair whose similarity reaches `threshold`, most similar
/// first, then by left and right id.
pub fn compare_trees(left: &ValueTree, right: &ValueTree, threshold: f64) -> ComparisonReport {
    let mut pairs = Vec::new();
    for a in left.nodes() {
        for b in right.nodes() {
            let s = similarity(a, b);
            if s > 0.0 && s >= threshold {
                pairs.push(MatchedPair {
                    left: a.id.clone(),
                    left_label: a.label.clone(),
                    left_depth: depth(left, &a.id),
                    right: b.id.clone(),
                    right_label: b.label.clone(),
                    right_depth: depth(right, &b.id),
                    similarity: (s * 1e6).round() / 1e6,
                });
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.similarity
            .total_cmp(&x.similarity)
            .then_with(|| x.left.cmp(&y.left))
            .then_with(|| x.right.cmp(&y.right))
    });
    ComparisonReport { threshold, pairs }
}
