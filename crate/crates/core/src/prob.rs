//! Classical probabilistic view of a tree: the empirical joint distribution
//! of the training data, conditional leaf distributions, deterministic
//! traversal, and classical prediction. This module is the exact oracle every
//! quantum-path result is tested against.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::dataset::Dataset;
use crate::tree::{node_index, BitPath, DecisionConfig};
use crate::util::bits_to_string;
use crate::{Error, Result};

/// Tolerance for normalization checks of probability tables.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A normalized probability table over `k` feature bits and `m` label bits.
///
/// Basis indexing: bit 1 is most significant, so a cell for features `x` and
/// labels `y` sits at `sum_i x_i 2^(k+m-i) + sum_j y_j 2^(m-j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "JointRepr", try_from = "JointRepr")]
pub struct JointDistribution {
    k: usize,
    m: usize,
    probs: Vec<f64>,
    #[serde(skip)]
    support: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct JointRepr {
    k: usize,
    m: usize,
    probs: BTreeMap<u64, f64>,
}

impl From<JointDistribution> for JointRepr {
    fn from(j: JointDistribution) -> Self {
        JointRepr {
            k: j.k,
            m: j.m,
            probs: j.support.iter().map(|&(i, p)| (i as u64, p)).collect(),
        }
    }
}

impl TryFrom<JointRepr> for JointDistribution {
    type Error = Error;
    fn try_from(r: JointRepr) -> Result<Self> {
        let size = 1usize << (r.k + r.m);
        let mut probs = vec![0.0; size];
        for (&i, &p) in &r.probs {
            let i = i as usize;
            if i >= size {
                return Err(Error::InvalidShape(format!("basis index {i} outside table of size {size}")));
            }
            probs[i] = p;
        }
        JointDistribution::from_dense(r.k, r.m, probs)
    }
}

impl JointDistribution {
    /// Wraps a dense table, validating non-negativity and normalization.
    pub fn from_dense(k: usize, m: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << (k + m) {
            return Err(Error::InvalidShape(format!(
                "table of length {} does not match 2^(k+m) = {}",
                probs.len(),
                1usize << (k + m)
            )));
        }
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Unnormalized(sum));
        }
        let support = probs.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(i, p)| (i, *p)).collect();
        Ok(Self { k, m, probs, support })
    }

    /// The histogram of a dataset: each cell holds multiplicity / row count.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut probs = vec![0.0; 1 << (data.k + data.m)];
        let weight = 1.0 / data.len() as f64;
        for row in &data.rows {
            probs[Self::basis_index(data.k, data.m, &row.x, &row.y)] += weight;
        }
        Self::from_dense(data.k, data.m, probs)
    }

    pub fn uniform(k: usize, m: usize) -> Self {
        let size = 1usize << (k + m);
        Self::from_dense(k, m, vec![1.0 / size as f64; size]).expect("uniform table is normalized")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dense(&self) -> &[f64] {
        &self.probs
    }

    /// Cells with non-zero mass, in index order.
    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn basis_index(k: usize, m: usize, x: &[u8], y: &[u8]) -> usize {
        debug_assert_eq!(x.len(), k);
        debug_assert_eq!(y.len(), m);
        let mut idx = 0usize;
        for &b in x.iter().chain(y.iter()) {
            idx = (idx << 1) | b as usize;
        }
        idx
    }

    pub fn index_of(&self, x: &[u8], y: &[u8]) -> usize {
        Self::basis_index(self.k, self.m, x, y)
    }

    /// Feature bit `i` (1-based) of a basis index.
    pub fn feature_bit(&self, index: usize, i: usize) -> u8 {
        ((index >> (self.k + self.m - i)) & 1) as u8
    }

    /// The label bits of a basis index, packed (y_1 most significant).
    pub fn label_code(&self, index: usize) -> usize {
        index & ((1 << self.m) - 1)
    }

    /// Marginal over all features: `p(y)` as a table of length `2^m`.
    pub fn marginal_labels(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.m];
        for &(i, p) in &self.support {
            out[self.label_code(i)] += p;
        }
        out
    }

    /// Marginal over all labels: `p(x)` as a table of length `2^k`.
    pub fn marginal_features(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.k];
        for &(i, p) in &self.support {
            out[i >> self.m] += p;
        }
        out
    }

    /// Per label, the most probable value (1 on an exact tie).
    pub fn majority_labels(&self) -> Vec<u8> {
        let py = self.marginal_labels();
        (0..self.m)
            .map(|i| {
                let p1: f64 = py
                    .iter()
                    .enumerate()
                    .filter(|(code, _)| (code >> (self.m - 1 - i)) & 1 == 1)
                    .map(|(_, p)| p)
                    .sum();
                u8::from(p1 >= 0.5)
            })
            .collect()
    }
}

/// The feature assignments accumulated along a path, ordered root first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionSet {
    assignments: Vec<(usize, u8)>,
}

impl ConditionSet {
    pub fn new(assignments: Vec<(usize, u8)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for &(feature, bit) in &assignments {
            if bit > 1 {
                return Err(Error::InvalidArgument(format!("condition bit {bit} out of range")));
            }
            if !seen.insert(feature) {
                return Err(Error::InvalidArgument(format!("feature {feature} conditioned twice")));
            }
        }
        Ok(Self { assignments })
    }

    pub fn assignments(&self) -> &[(usize, u8)] {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// True iff the feature vector satisfies every condition.
    pub fn matches(&self, x: &[u8]) -> bool {
        self.assignments.iter().all(|&(feature, bit)| x[feature - 1] == bit)
    }
}

/// Reach probability and per-label conditionals of one leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafProfile {
    /// Probability that a random traversal ends in this leaf.
    pub reach_prob: f64,
    /// `p(y_i = 1 | leaf)` per label; 1/2 when the leaf is unreachable.
    pub label_p1: Vec<f64>,
    /// False exactly when `reach_prob` is zero.
    pub defined: bool,
}

/// Pairs the decision features along `path` with the path bits.
pub fn leaf_condition_set(config: &DecisionConfig, path: &BitPath) -> Result<ConditionSet> {
    if path.len() > config.d() + 1 {
        return Err(Error::InvalidArgument(format!(
            "path of length {} exceeds leaf depth {}",
            path.len(),
            config.d() + 1
        )));
    }
    let mut assignments = Vec::with_capacity(path.len());
    let mut prefix = Vec::new();
    for &bit in path.bits() {
        let feature = config.layers[prefix.len()][node_index(&prefix) - 1];
        assignments.push((feature, bit));
        prefix.push(bit);
    }
    ConditionSet::new(assignments)
}

/// Deterministic root-to-leaf walk reading the query at each decision index.
pub fn classical_traverse(config: &DecisionConfig, x: &[u8]) -> Result<(BitPath, ConditionSet)> {
    if x.len() != config.k {
        return Err(Error::WidthMismatch { expected: config.k, found: x.len() });
    }
    let mut bits = Vec::with_capacity(config.d() + 1);
    let mut assignments = Vec::with_capacity(config.d() + 1);
    for l in 0..=config.d() {
        let feature = config.layers[l][node_index(&bits) - 1];
        let bit = x[feature - 1];
        assignments.push((feature, bit));
        bits.push(bit);
    }
    Ok((BitPath::new(bits)?, ConditionSet::new(assignments)?))
}

/// Leaf index (1-based, in `1..=2^(d+1)`) a feature vector traverses to.
pub fn leaf_of(config: &DecisionConfig, x: &[u8]) -> Result<usize> {
    Ok(classical_traverse(config, x)?.0.node_index())
}

/// Reach probabilities and label conditionals for every leaf, computed by
/// conditioning the joint distribution on each path.
pub fn leaf_profiles(p: &JointDistribution, config: &DecisionConfig) -> Result<Vec<LeafProfile>> {
    let joint = leaf_joint(p, config)?;
    let m = p.m();
    Ok(joint
        .into_iter()
        .map(|cells| {
            let reach: f64 = cells.iter().sum();
            let defined = reach > 0.0;
            let label_p1 = (0..m)
                .map(|i| {
                    if !defined {
                        return 0.5;
                    }
                    let mass: f64 = cells
                        .iter()
                        .enumerate()
                        .filter(|(code, _)| (code >> (m - 1 - i)) & 1 == 1)
                        .map(|(_, v)| v)
                        .sum();
                    mass / reach
                })
                .collect();
            LeafProfile { reach_prob: reach, label_p1, defined }
        })
        .collect())
}

/// Joint distribution `p(leaf, labels)`: one table of length `2^m` per leaf,
/// indexed by the packed label code. Summing a leaf's table gives its reach
/// probability; the tables over all leaves sum to one.
pub fn leaf_joint(p: &JointDistribution, config: &DecisionConfig) -> Result<Vec<Vec<f64>>> {
    if config.k != p.k() {
        return Err(Error::WidthMismatch { expected: p.k(), found: config.k });
    }
    let d = config.d();
    let mut out = vec![vec![0.0; 1 << p.m()]; 1 << (d + 1)];
    for &(idx, mass) in p.support() {
        let mut bits = Vec::with_capacity(d + 1);
        for l in 0..=d {
            let feature = config.layers[l][node_index(&bits) - 1];
            bits.push(p.feature_bit(idx, feature));
        }
        out[node_index(&bits) - 1][p.label_code(idx)] += mass;
    }
    Ok(out)
}

/// A classical prediction: the traversed path and per-label distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalPrediction {
    pub path: BitPath,
    pub leaf: usize,
    /// `p(y_i = 1 | traversed leaf)` per label.
    pub p1: Vec<f64>,
    /// Hard labels after tie-breaking.
    pub labels: Vec<u8>,
    /// False when the traversed leaf holds no training mass.
    pub defined: bool,
}

/// Resolves a probability into a hard label; exact ties go to `tie_break`.
pub fn argmax_label(p1: f64, tie_break: u8) -> u8 {
    if p1 > 0.5 {
        1
    } else if p1 < 0.5 {
        0
    } else {
        tie_break
    }
}

/// Traverses the tree for a query and returns the leaf's label distribution
/// and hard labels. Unreachable leaves yield the agnostic 1/2 distribution,
/// so the tie-break decides.
pub fn classical_predict(
    p: &JointDistribution,
    config: &DecisionConfig,
    x: &[u8],
    tie_break: &[u8],
) -> Result<ClassicalPrediction> {
    if tie_break.len() != p.m() {
        return Err(Error::WidthMismatch { expected: p.m(), found: tie_break.len() });
    }
    let profiles = leaf_profiles(p, config)?;
    let (path, _) = classical_traverse(config, x)?;
    let leaf = path.node_index();
    let profile = &profiles[leaf - 1];
    let labels = profile.label_p1.iter().zip(tie_break).map(|(&p1, &t)| argmax_label(p1, t)).collect();
    Ok(ClassicalPrediction {
        path,
        leaf,
        p1: profile.label_p1.clone(),
        labels,
        defined: profile.defined,
    })
}

/// Renders a leaf index as its path bit string of length `d + 1`.
pub fn leaf_bitstring(leaf: usize, d: usize) -> String {
    bits_to_string(&crate::util::index_to_bits((leaf - 1) as u64, d + 1))
}
