//! Tree structure parameterizations and the swap-index arithmetic between them.
//!
//! Two interchangeable encodings of a binary tree of maximum depth `d` over
//! features `1..=k` are provided. The decision configuration stores, per layer
//! `i`, the `2^i` feature indices tested at that depth; it must satisfy the
//! no-repeat condition along every root-to-leaf path. The compressed
//! configuration stores, per layer, swap indices in `{i+1, ..., k}` that are
//! mutually unconstrained: every value combination encodes a valid tree. The
//! two are connected by tracking how each swap permutes the index vector
//! `(1, ..., k)` down every path.
//!
//! Feature indices are 1-based here and everywhere downstream; conversions to
//! 0-based positions happen only at bit-arithmetic sites.

use serde::{Deserialize, Serialize};

use crate::util::{bits_to_string, parse_bits};
use crate::{Error, Result};

/// An ordered sequence of binary decisions addressing a node.
///
/// The empty path addresses the root; a path of length `l` addresses a node
/// of depth `l`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitPath {
    bits: Vec<u8>,
}

impl BitPath {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|b| **b > 1) {
            return Err(Error::InvalidArgument(format!("path bit out of range: {b}")));
        }
        Ok(Self { bits })
    }

    pub fn empty() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(Self { bits: parse_bits(s)? })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The node index of this path within its layer, in `{1, ..., 2^l}`.
    pub fn node_index(&self) -> usize {
        node_index(&self.bits)
    }
}

impl std::fmt::Display for BitPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&bits_to_string(&self.bits))
    }
}

/// Node index of a decision path: the bits read as a binary number (first
/// decision most significant) plus one. The empty path maps to 1.
pub fn node_index(bits: &[u8]) -> usize {
    bits.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize) + 1
}

/// Bit `u` of the zero-based node index `j - 1` within a layer of depth `v`,
/// read most significant first: `floor((j-1) / 2^(v-u)) mod 2`.
///
/// Decides whether qubit `u` acts as an open (0) or closed (1) control in the
/// structure encoding of node `j`.
pub fn kappa(j: usize, v: usize, u: usize) -> Result<u8> {
    if j < 1 || j > (1 << v) {
        return Err(Error::InvalidArgument(format!(
            "node index {j} out of range 1..={}",
            1usize << v
        )));
    }
    if u < 1 || u > v {
        return Err(Error::InvalidArgument(format!("qubit position {u} out of range 1..={v}")));
    }
    Ok((((j - 1) >> (v - u)) & 1) as u8)
}

fn check_layer_shape(layers: &[Vec<usize>]) -> Result<usize> {
    if layers.is_empty() {
        return Err(Error::InvalidShape("configuration needs at least one layer".into()));
    }
    for (i, layer) in layers.iter().enumerate() {
        if layer.len() != 1 << i {
            return Err(Error::InvalidShape(format!(
                "layer {i} has {} entries, expected {}",
                layer.len(),
                1usize << i
            )));
        }
    }
    Ok(layers.len() - 1)
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    k: usize,
    d: usize,
    layers: Vec<Vec<usize>>,
}

/// Per-layer feature indices defining every split of the tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ConfigRepr", try_from = "ConfigRepr")]
pub struct DecisionConfig {
    pub k: usize,
    pub layers: Vec<Vec<usize>>,
}

/// Per-layer swap indices; entry `c^i_j` lies in `{i+1, ..., k}` and the
/// entries are mutually unconstrained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ConfigRepr", try_from = "ConfigRepr")]
pub struct CompressedConfig {
    pub k: usize,
    pub layers: Vec<Vec<usize>>,
}

impl From<DecisionConfig> for ConfigRepr {
    fn from(c: DecisionConfig) -> Self {
        ConfigRepr { k: c.k, d: c.layers.len() - 1, layers: c.layers }
    }
}

impl From<CompressedConfig> for ConfigRepr {
    fn from(c: CompressedConfig) -> Self {
        ConfigRepr { k: c.k, d: c.layers.len() - 1, layers: c.layers }
    }
}

impl TryFrom<ConfigRepr> for DecisionConfig {
    type Error = Error;
    fn try_from(r: ConfigRepr) -> Result<Self> {
        let c = DecisionConfig::new(r.k, r.layers)?;
        if c.d() != r.d {
            return Err(Error::InvalidShape(format!("declared d = {} but layers give d = {}", r.d, c.d())));
        }
        Ok(c)
    }
}

impl TryFrom<ConfigRepr> for CompressedConfig {
    type Error = Error;
    fn try_from(r: ConfigRepr) -> Result<Self> {
        let c = CompressedConfig::new(r.k, r.layers)?;
        if c.d() != r.d {
            return Err(Error::InvalidShape(format!("declared d = {} but layers give d = {}", r.d, c.d())));
        }
        Ok(c)
    }
}

impl DecisionConfig {
    /// Builds a configuration after checking the shape invariants (layer
    /// sizes and index ranges). The no-repeat condition is checked separately
    /// by [`DecisionConfig::first_repeat_violation`].
    pub fn new(k: usize, layers: Vec<Vec<usize>>) -> Result<Self> {
        let d = check_layer_shape(&layers)?;
        if d + 1 > k {
            return Err(Error::InvalidShape(format!("depth {d} needs more than {k} features")));
        }
        for layer in &layers {
            for &e in layer {
                if e < 1 || e > k {
                    return Err(Error::InvalidShape(format!("feature index {e} out of range 1..={k}")));
                }
            }
        }
        Ok(Self { k, layers })
    }

    /// Index of the last decision layer.
    pub fn d(&self) -> usize {
        self.layers.len() - 1
    }

    /// Feature tested at the node addressed by `path`.
    pub fn feature_at(&self, path: &BitPath) -> Result<usize> {
        let l = path.len();
        if l > self.d() {
            return Err(Error::InvalidArgument(format!(
                "path of length {l} exceeds decision layers 0..={}",
                self.d()
            )));
        }
        Ok(self.layers[l][path.node_index() - 1])
    }

    /// Walks every root-to-leaf path and reports the first one on which a
    /// feature index repeats, together with the repeated feature.
    pub fn first_repeat_violation(&self) -> Option<(BitPath, usize)> {
        let d = self.d();
        // Decision sequences are determined by the first d path bits.
        'paths: for code in 0..(1usize << d) {
            let mut seen = vec![false; self.k + 1];
            let mut bits = Vec::with_capacity(d);
            for l in 0..=d {
                let feature = self.layers[l][node_index(&bits) - 1];
                if seen[feature] {
                    return Some((BitPath { bits }, feature));
                }
                seen[feature] = true;
                if l < d {
                    bits.push(((code >> (d - 1 - l)) & 1) as u8);
                }
                if l == d {
                    continue 'paths;
                }
            }
        }
        None
    }

    /// True iff no feature repeats along any root-to-leaf path.
    pub fn is_valid(&self) -> bool {
        self.first_repeat_violation().is_none()
    }

    /// Converts to the compressed parameterization. Rejects configurations
    /// that violate the no-repeat condition.
    pub fn compress(&self) -> Result<CompressedConfig> {
        if let Some((path, feature)) = self.first_repeat_violation() {
            return Err(Error::RepeatedSplit { path: path.to_string(), feature });
        }
        let d = self.d();
        let mut layers: Vec<Vec<usize>> = (0..=d).map(|i| vec![0; 1 << i]).collect();
        let index_vec: Vec<usize> = (1..=self.k).collect();
        self.compress_walk(0, &mut Vec::new(), index_vec, &mut layers);
        CompressedConfig::new(self.k, layers)
    }

    fn compress_walk(&self, l: usize, bits: &mut Vec<u8>, mut vec: Vec<usize>, out: &mut [Vec<usize>]) {
        let nu = node_index(bits);
        let feature = self.layers[l][nu - 1];
        // Position of the feature in the current index vector; validity of
        // the configuration guarantees it sits at or beyond position l + 1.
        let pos = vec.iter().position(|&v| v == feature).expect("feature within 1..=k") + 1;
        out[l][nu - 1] = pos;
        vec.swap(l, pos - 1);
        if l < self.d() {
            for bit in [0u8, 1u8] {
                bits.push(bit);
                self.compress_walk(l + 1, bits, vec.clone(), out);
                bits.pop();
            }
        }
    }
}

impl CompressedConfig {
    pub fn new(k: usize, layers: Vec<Vec<usize>>) -> Result<Self> {
        let d = check_layer_shape(&layers)?;
        if d + 1 > k {
            return Err(Error::InvalidShape(format!("depth {d} needs more than {k} features")));
        }
        for (i, layer) in layers.iter().enumerate() {
            for &c in layer {
                if c < i + 1 || c > k {
                    return Err(Error::InvalidShape(format!(
                        "swap index {c} in layer {i} out of range {}..={k}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { k, layers })
    }

    pub fn d(&self) -> usize {
        self.layers.len() - 1
    }

    /// Draws a configuration uniformly from the solution domain.
    pub fn random<R: rand::Rng>(k: usize, d: usize, rng: &mut R) -> Result<Self> {
        if d + 1 > k {
            return Err(Error::InvalidShape(format!("depth {d} needs more than {k} features")));
        }
        let layers = (0..=d)
            .map(|i| (0..1usize << i).map(|_| rng.random_range(i + 1..=k)).collect())
            .collect();
        Self::new(k, layers)
    }

    /// Converts to the explicit decision configuration by applying the
    /// element swaps to the index vector `(1, ..., k)` along every path.
    /// The result always satisfies the no-repeat condition.
    pub fn expand(&self) -> DecisionConfig {
        let d = self.d();
        let mut layers: Vec<Vec<usize>> = (0..=d).map(|i| vec![0; 1 << i]).collect();
        let index_vec: Vec<usize> = (1..=self.k).collect();
        self.expand_walk(0, &mut Vec::new(), index_vec, &mut layers);
        DecisionConfig::new(self.k, layers).expect("expansion preserves shape")
    }

    fn expand_walk(&self, l: usize, bits: &mut Vec<u8>, mut vec: Vec<usize>, out: &mut [Vec<usize>]) {
        let nu = node_index(bits);
        let swap = self.layers[l][nu - 1];
        vec.swap(l, swap - 1);
        out[l][nu - 1] = vec[l];
        if l < self.d() {
            for bit in [0u8, 1u8] {
                bits.push(bit);
                self.expand_walk(l + 1, bits, vec.clone(), out);
                bits.pop();
            }
        }
    }
}

/// Flattened compressed configuration in layer order, the genome the genetic
/// induction operates on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chromosome {
    genes: Vec<usize>,
    k: usize,
    d: usize,
}

impl Chromosome {
    /// Wraps raw genes, checking the length `2^(d+1) - 1` and per-attribute
    /// bounds.
    pub fn new(genes: Vec<usize>, k: usize, d: usize) -> Result<Self> {
        let expected = (1usize << (d + 1)) - 1;
        if genes.len() != expected {
            return Err(Error::InvalidShape(format!(
                "chromosome length {} does not match 2^(d+1)-1 = {expected}",
                genes.len()
            )));
        }
        let c = Self { genes, k, d };
        for (pos, (gene, (lo, hi))) in c.genes.iter().zip(c.bounds()).enumerate() {
            if *gene < lo || *gene > hi {
                return Err(Error::InvalidShape(format!(
                    "attribute {pos} value {gene} outside bounds {lo}..={hi}"
                )));
            }
        }
        Ok(c)
    }

    pub fn from_config(config: &CompressedConfig) -> Self {
        Self {
            genes: config.layers.iter().flatten().copied().collect(),
            k: config.k,
            d: config.d(),
        }
    }

    /// Unflattens back into layers; fails if genes were put out of bounds.
    pub fn to_config(&self) -> Result<CompressedConfig> {
        let mut layers = Vec::with_capacity(self.d + 1);
        let mut offset = 0;
        for i in 0..=self.d {
            let width = 1usize << i;
            layers.push(self.genes[offset..offset + width].to_vec());
            offset += width;
        }
        CompressedConfig::new(self.k, layers)
    }

    pub fn genes(&self) -> &[usize] {
        &self.genes
    }

    pub fn genes_mut(&mut self) -> &mut [usize] {
        &mut self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Valid range `(layer + 1, k)` for each attribute in layer order.
    pub fn bounds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.d).flat_map(move |i| std::iter::repeat((i + 1, self.k)).take(1 << i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cc(k: usize, layers: &[&[usize]]) -> CompressedConfig {
        CompressedConfig::new(k, layers.iter().map(|l| l.to_vec()).collect()).unwrap()
    }

    fn dc(k: usize, layers: &[&[usize]]) -> DecisionConfig {
        DecisionConfig::new(k, layers.iter().map(|l| l.to_vec()).collect()).unwrap()
    }

    /// The exemplar configuration used throughout the experiment tests.
    pub(crate) fn c_sim() -> CompressedConfig {
        cc(15, &[&[15], &[10, 2], &[6, 14, 15, 8], &[12, 15, 15, 9, 9, 6, 9, 4]])
    }

    #[test]
    fn node_index_examples() {
        assert_eq!(node_index(&[]), 1);
        assert_eq!(node_index(&[0, 0, 0]), 1);
        assert_eq!(node_index(&[1, 1, 1]), 8);
        assert_eq!(node_index(&[1, 0]), 3);
    }

    #[test]
    fn node_index_is_a_bijection() {
        for l in 0..=4usize {
            let mut seen = vec![false; 1 << l];
            for code in 0..(1u64 << l) {
                let bits = crate::util::index_to_bits(code, l);
                let nu = node_index(&bits);
                assert!((1..=(1 << l)).contains(&nu));
                assert!(!seen[nu - 1]);
                seen[nu - 1] = true;
            }
        }
    }

    #[test]
    fn kappa_examples() {
        for v in 1..=4 {
            for u in 1..=v {
                assert_eq!(kappa(1, v, u).unwrap(), 0);
            }
        }
        assert_eq!(kappa(4, 2, 1).unwrap(), 1);
        assert_eq!(kappa(4, 2, 2).unwrap(), 1);
        assert_eq!(kappa(2, 2, 1).unwrap(), 0);
        assert_eq!(kappa(2, 2, 2).unwrap(), 1);
        assert!(kappa(5, 2, 1).is_err());
        assert!(kappa(1, 2, 3).is_err());
        assert!(kappa(1, 2, 0).is_err());
    }

    #[test]
    fn kappa_reads_the_binary_node_code() {
        for v in 1..=4usize {
            for j in 1..=(1 << v) {
                let bits: Vec<u8> = (1..=v).map(|u| kappa(j, v, u).unwrap()).collect();
                assert_eq!(node_index(&bits), j);
            }
        }
    }

    #[test]
    fn validity_examples() {
        assert!(dc(3, &[&[2]]).is_valid());
        let bad = dc(3, &[&[1], &[1, 2]]);
        let (path, feature) = bad.first_repeat_violation().unwrap();
        assert_eq!(path.to_string(), "0");
        assert_eq!(feature, 1);
        assert!(bad.compress().is_err());
    }

    #[test]
    fn expand_examples() {
        assert_eq!(cc(5, &[&[5]]).expand(), dc(5, &[&[5]]));
        assert_eq!(cc(3, &[&[2], &[2, 3]]).expand(), dc(3, &[&[2], &[1, 3]]));
        assert_eq!(cc(7, &[&[3], &[2, 2]]).expand(), dc(7, &[&[3], &[2, 2]]));
    }

    #[test]
    fn compress_examples() {
        assert_eq!(dc(5, &[&[5]]).compress().unwrap(), cc(5, &[&[5]]));
        let c = c_sim();
        assert_eq!(c.expand().compress().unwrap(), c);
    }

    #[test]
    fn round_trip_exhaustive_small() {
        for k in [3usize, 4] {
            for d in [0usize, 1] {
                let mut count = 0;
                let mut stack = vec![Vec::<usize>::new()];
                let total_len = (1usize << (d + 1)) - 1;
                while let Some(genes) = stack.pop() {
                    if genes.len() == total_len {
                        let chrom = Chromosome::new(genes.clone(), k, d).unwrap();
                        let c = chrom.to_config().unwrap();
                        let e = c.expand();
                        assert!(e.is_valid());
                        assert_eq!(e.compress().unwrap(), c);
                        count += 1;
                        continue;
                    }
                    let layer = (genes.len() + 1).ilog2() as usize;
                    for v in layer + 1..=k {
                        let mut g = genes.clone();
                        g.push(v);
                        stack.push(g);
                    }
                }
                assert!(count > 0);
            }
        }
    }

    #[test]
    fn chromosome_codec_examples() {
        let c = cc(3, &[&[2], &[2, 3]]);
        let chrom = Chromosome::from_config(&c);
        assert_eq!(chrom.genes(), &[2, 2, 3]);
        assert_eq!(chrom.to_config().unwrap(), c);

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c3 = CompressedConfig::random(15, 3, &mut rng).unwrap();
        assert_eq!(Chromosome::from_config(&c3).len(), 15);
        assert_eq!(Chromosome::from_config(&c3).to_config().unwrap(), c3);

        assert!(Chromosome::new(vec![2, 2], 3, 1).is_err());
        assert!(Chromosome::new(vec![2, 1, 3], 3, 1).is_err());
    }

    #[test]
    fn config_json_schema_is_stable() {
        let c = cc(3, &[&[2], &[2, 3]]);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"k":3,"d":1,"layers":[[2],[2,3]]}"#);
        let back: CompressedConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<CompressedConfig>(r#"{"k":3,"d":2,"layers":[[2],[2,3]]}"#).is_err());
        assert!(serde_json::from_str::<CompressedConfig>(r#"{"k":3,"d":1,"layers":[[2],[1,3]]}"#).is_err());
    }

    proptest! {
        #[test]
        fn expand_compress_round_trip(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.random_range(2usize..=8);
            let d = rng.random_range(0usize..=(k - 1).min(3));
            let c = CompressedConfig::random(k, d, &mut rng).unwrap();
            let e = c.expand();
            prop_assert!(e.is_valid());
            prop_assert_eq!(e.compress().unwrap(), c);
        }
    }
}
