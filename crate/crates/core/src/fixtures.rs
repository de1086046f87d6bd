//! A hand-built MQ2008-style tree and test instance whose decision path
//! visits nodes 0, 6, 7, 9 and ends in leaf 11, with node values
//! 0.375 → 0.606 → 0.532 → 0.458 → 0.515.
//!
//! Feature indices follow the 46-feature LETOR 4.0 layout (0-based here).

use crate::tree::{Node, NodeKind, RegressionTree};

pub const FEATURE_COUNT: usize = 46;
pub const BM25_BODY: usize = 20;
pub const BM25_TITLE: usize = 22;
pub const LMIR_ABS_TITLE: usize = 27;
pub const LMIR_JM_URL: usize = 38;

pub fn feature_name(index: usize) -> Option<&'static str> {
    match index {
        BM25_BODY => Some("BM25 body"),
        BM25_TITLE => Some("BM25 title"),
        LMIR_ABS_TITLE => Some("LMIR.ABS title"),
        LMIR_JM_URL => Some("LMIR.JM URL"),
        _ => None,
    }
}

pub fn reference_instance() -> Vec<f64> {
    let mut x = vec![0.0; FEATURE_COUNT];
    x[LMIR_JM_URL] = 0.786;
    x[LMIR_ABS_TITLE] = 0.0;
    x[BM25_TITLE] = 0.722;
    x[BM25_BODY] = 0.780;
    x
}

pub fn reference_tree() -> RegressionTree {
    let split = |id, value, sample_fraction, feature, threshold, left, right| Node {
        id,
        value,
        sample_fraction,
        kind: NodeKind::Split { feature, threshold, left, right },
    };
    let leaf = |id, value, sample_fraction| Node {
        id,
        value,
        sample_fraction,
        kind: NodeKind::Leaf,
    };
    // Off-path sibling values are chosen so each internal value is the
    // sample-weighted mean of its children.
    let nodes = vec![
        split(0, 0.375, 1.0, LMIR_JM_URL, 0.5, 1, 6),
        split(1, 0.221, 0.6, BM25_TITLE, 0.3, 2, 3),
        leaf(2, 0.121, 0.3),
        split(3, 0.321, 0.3, BM25_BODY, 0.4, 4, 5),
        leaf(4, 0.25, 0.15),
        leaf(5, 0.392, 0.15),
        split(6, 0.606, 0.4, LMIR_ABS_TITLE, 0.1, 7, 12),
        split(7, 0.532, 0.3, BM25_BODY, 0.6, 8, 9),
        leaf(8, 0.68, 0.1),
        split(9, 0.458, 0.2, BM25_TITLE, 0.7, 10, 11),
        leaf(10, 0.401, 0.1),
        leaf(11, 0.515, 0.1),
        leaf(12, 0.828, 0.1),
    ];
    RegressionTree::from_nodes(FEATURE_COUNT, nodes).expect("reference tree is well formed")
}
