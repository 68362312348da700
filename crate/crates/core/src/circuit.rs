//! Gate-list intermediate representation and the circuit builders: structure
//! encoding, full tree circuit, query circuit, forest circuit, the
//! multi-controlled-SWAP decomposition, and the measured-window reduction.
//!
//! All controls are closed; open controls are realized by NOT pairs placed
//! around a gate. State preparation is carried as data on the circuit (the
//! distribution whose square roots become the initial amplitudes), not
//! synthesized to gates.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::prob::JointDistribution;
use crate::tree::{kappa, CompressedConfig};
use crate::{Error, Result};

/// One gate of the minimal vocabulary. Qubits are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GateRepr", try_from = "GateRepr")]
pub enum Gate {
    Identity,
    Not { target: usize },
    Cnot { target: usize, control: usize },
    Mcnot { target: usize, controls: Vec<usize> },
    Swap { a: usize, b: usize },
    Mcswap { a: usize, b: usize, controls: Vec<usize> },
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    kind: String,
    targets: Vec<usize>,
    controls: Vec<usize>,
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> Self {
        let (kind, targets, controls) = match g {
            Gate::Identity => ("IDENTITY", vec![], vec![]),
            Gate::Not { target } => ("NOT", vec![target], vec![]),
            Gate::Cnot { target, control } => ("CNOT", vec![target], vec![control]),
            Gate::Mcnot { target, controls } => ("MCNOT", vec![target], controls),
            Gate::Swap { a, b } => ("SWAP", vec![a, b], vec![]),
            Gate::Mcswap { a, b, controls } => ("MCSWAP", vec![a, b], controls),
        };
        GateRepr { kind: kind.into(), targets, controls }
    }
}

impl TryFrom<GateRepr> for Gate {
    type Error = Error;
    fn try_from(r: GateRepr) -> Result<Self> {
        let g = match (r.kind.as_str(), r.targets.len(), r.controls.len()) {
            ("IDENTITY", 0, 0) => Gate::Identity,
            ("NOT", 1, 0) => Gate::Not { target: r.targets[0] },
            ("CNOT", 1, 1) => Gate::Cnot { target: r.targets[0], control: r.controls[0] },
            ("MCNOT", 1, _) => Gate::mcnot(r.targets[0], r.controls),
            ("SWAP", 2, 0) => Gate::swap(r.targets[0], r.targets[1]),
            ("MCSWAP", 2, _) => Gate::mcswap(r.targets[0], r.targets[1], r.controls),
            _ => {
                return Err(Error::InvalidShape(format!(
                    "gate kind {} with {} targets / {} controls",
                    r.kind,
                    r.targets.len(),
                    r.controls.len()
                )))
            }
        };
        g.check_disjoint()?;
        Ok(g)
    }
}

impl Gate {
    /// A swap; equal targets normalize to the identity.
    pub fn swap(a: usize, b: usize) -> Gate {
        if a == b {
            Gate::Identity
        } else {
            Gate::Swap { a, b }
        }
    }

    /// A multi-controlled swap; equal targets normalize to the identity and
    /// an empty control set to a plain swap.
    pub fn mcswap(a: usize, b: usize, controls: Vec<usize>) -> Gate {
        if a == b {
            Gate::Identity
        } else if controls.is_empty() {
            Gate::Swap { a, b }
        } else {
            Gate::Mcswap { a, b, controls }
        }
    }

    /// A multi-controlled NOT; degenerates to CNOT or NOT for small control sets.
    pub fn mcnot(target: usize, controls: Vec<usize>) -> Gate {
        match controls.len() {
            0 => Gate::Not { target },
            1 => Gate::Cnot { target, control: controls[0] },
            _ => Gate::Mcnot { target, controls },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Gate::Identity => "IDENTITY",
            Gate::Not { .. } => "NOT",
            Gate::Cnot { .. } => "CNOT",
            Gate::Mcnot { .. } => "MCNOT",
            Gate::Swap { .. } => "SWAP",
            Gate::Mcswap { .. } => "MCSWAP",
        }
    }

    pub fn targets(&self) -> Vec<usize> {
        match self {
            Gate::Identity => vec![],
            Gate::Not { target } | Gate::Cnot { target, .. } | Gate::Mcnot { target, .. } => vec![*target],
            Gate::Swap { a, b } | Gate::Mcswap { a, b, .. } => vec![*a, *b],
        }
    }

    pub fn controls(&self) -> &[usize] {
        match self {
            Gate::Cnot { control, .. } => std::slice::from_ref(control),
            Gate::Mcnot { controls, .. } | Gate::Mcswap { controls, .. } => controls,
            _ => &[],
        }
    }

    /// True iff the gate acts on qubit `q` as target or control.
    pub fn touches(&self, q: usize) -> bool {
        self.targets().contains(&q) || self.controls().contains(&q)
    }

    fn check_disjoint(&self) -> Result<()> {
        let targets = self.targets();
        for c in self.controls() {
            if targets.contains(c) {
                return Err(Error::InvalidShape(format!("qubit {c} is both target and control")));
            }
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::InvalidShape("swap targets must be normalized to identity".into()));
        }
        Ok(())
    }

    /// Range and disjointness check against a register of `n` qubits.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_disjoint()?;
        for q in self.targets().iter().chain(self.controls()) {
            if *q < 1 || *q > n {
                return Err(Error::InvalidArgument(format!("qubit {q} outside register 1..={n}")));
            }
        }
        Ok(())
    }
}

/// A circuit: register size, ordered gates, the distribution to load as
/// amplitudes (none means the ground state), and the measured qubits in
/// readout order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "CircuitRepr", try_from = "CircuitRepr")]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub state_prep: Option<Vec<f64>>,
    pub measured_qubits: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CircuitRepr {
    n: usize,
    prep: Option<BTreeMap<u64, f64>>,
    gates: Vec<Gate>,
    measure: Vec<usize>,
}

impl From<Circuit> for CircuitRepr {
    fn from(c: Circuit) -> Self {
        CircuitRepr {
            n: c.n_qubits,
            prep: c.state_prep.map(|p| {
                p.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(i, v)| (i as u64, *v)).collect()
            }),
            gates: c.gates,
            measure: c.measured_qubits,
        }
    }
}

impl TryFrom<CircuitRepr> for Circuit {
    type Error = Error;
    fn try_from(r: CircuitRepr) -> Result<Self> {
        let state_prep = match r.prep {
            None => None,
            Some(map) => {
                let mut dense = vec![0.0; 1usize << r.n];
                for (&i, &v) in &map {
                    let i = i as usize;
                    if i >= dense.len() {
                        return Err(Error::InvalidShape(format!("prep index {i} outside register")));
                    }
                    dense[i] = v;
                }
                Some(dense)
            }
        };
        let c = Circuit { n_qubits: r.n, gates: r.gates, state_prep, measured_qubits: r.measure };
        c.validate()?;
        Ok(c)
    }
}

impl Circuit {
    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            g.validate(self.n_qubits)?;
        }
        let mut seen = std::collections::HashSet::new();
        for &q in &self.measured_qubits {
            if q < 1 || q > self.n_qubits {
                return Err(Error::InvalidArgument(format!("measured qubit {q} outside register")));
            }
            if !seen.insert(q) {
                return Err(Error::InvalidArgument(format!("measured qubit {q} listed twice")));
            }
        }
        if let Some(prep) = &self.state_prep {
            if prep.len() != 1 << self.n_qubits {
                return Err(Error::InvalidShape("state preparation length mismatch".into()));
            }
            let sum: f64 = prep.iter().sum();
            if (sum - 1.0).abs() > crate::prob::NORMALIZATION_TOL {
                return Err(Error::Unnormalized(sum));
            }
        }
        Ok(())
    }
}

/// Removes identity gates and cancels NOT pairs on the same qubit that are
/// separated only by gates not acting on that qubit (NOT gates on other
/// qubits commute; anything touching the qubit blocks the cancellation).
pub fn peephole_cancel_nots(gates: Vec<Gate>) -> Vec<Gate> {
    let mut gates: Vec<Gate> = gates.into_iter().filter(|g| *g != Gate::Identity).collect();
    'outer: loop {
        for i in 0..gates.len() {
            let Gate::Not { target } = gates[i] else { continue };
            for j in i + 1..gates.len() {
                if gates[j] == (Gate::Not { target }) {
                    gates.remove(j);
                    gates.remove(i);
                    continue 'outer;
                }
                if gates[j].touches(target) {
                    break;
                }
            }
        }
        return gates;
    }
}

/// Emits the structure-encoding gates for one configuration: per layer `i`
/// and node `j`, NOT decorations on the control qubits whose path bit is 0,
/// then a swap of qubit `i + 1` with the node's swap index controlled on
/// qubits `1..=i`, then the decorations again. Nodes whose swap index equals
/// `i + 1` are identities and contribute nothing. A final peephole pass
/// removes cancelling NOT pairs.
pub fn build_structure_encoding(config: &CompressedConfig) -> Vec<Gate> {
    let mut gates = Vec::new();
    emit_structure_gates(config, &[], &mut gates);
    peephole_cancel_nots(gates)
}

/// Raw per-node emission shared by the tree and forest builders; `extra`
/// holds control qubits added to every swap (the forest's ancillas) whose
/// NOT decorations the caller manages itself.
fn emit_structure_gates(config: &CompressedConfig, extra_controls: &[usize], out: &mut Vec<Gate>) {
    for i in 0..=config.d() {
        for j in 1..=(1usize << i) {
            let swap = config.layers[i][j - 1];
            if swap == i + 1 {
                continue;
            }
            let decorations: Vec<usize> =
                (1..=i).filter(|&u| kappa(j, i, u).expect("in range") == 0).collect();
            let controls: Vec<usize> = extra_controls.iter().copied().chain(1..=i).collect();
            for &u in &decorations {
                out.push(Gate::Not { target: u });
            }
            out.push(Gate::mcswap(i + 1, swap, controls));
            for &u in &decorations {
                out.push(Gate::Not { target: u });
            }
        }
    }
}

/// Full tree circuit over `k + m` qubits: qsample preparation of the joint
/// distribution, structure encoding on the feature qubits, measurement of
/// the first `d + 1` qubits and the `m` label qubits.
pub fn build_tree_circuit(p: &JointDistribution, config: &CompressedConfig) -> Result<Circuit> {
    if config.k != p.k() {
        return Err(Error::WidthMismatch { expected: p.k(), found: config.k });
    }
    let (k, m, d) = (p.k(), p.m(), config.d());
    if d + 1 > k {
        return Err(Error::InvalidShape(format!("d + 1 = {} exceeds feature count {k}", d + 1)));
    }
    let measured = (1..=d + 1).chain(k + 1..=k + m).collect();
    Ok(Circuit {
        n_qubits: k + m,
        gates: build_structure_encoding(config),
        state_prep: Some(p.dense().to_vec()),
        measured_qubits: measured,
    })
}

/// Query circuit over `k` qubits: qsample preparation of a query
/// distribution, the same structure encoding, measurement of the first
/// `d + 1` qubits. A point-mass query is realized by an array of NOT gates
/// instead of a prepared state.
pub fn build_query_circuit(p_query: &[f64], config: &CompressedConfig) -> Result<Circuit> {
    let k = config.k;
    if p_query.len() != 1 << k {
        return Err(Error::InvalidShape(format!(
            "query distribution of length {} does not match 2^k = {}",
            p_query.len(),
            1usize << k
        )));
    }
    let sum: f64 = p_query.iter().sum();
    if (sum - 1.0).abs() > crate::prob::NORMALIZATION_TOL || p_query.iter().any(|v| *v < 0.0) {
        return Err(Error::Unnormalized(sum));
    }
    let d = config.d();
    if d + 1 > k {
        return Err(Error::InvalidShape(format!("d + 1 = {} exceeds feature count {k}", d + 1)));
    }

    let mut gates = Vec::new();
    let mut state_prep = None;
    let point = p_query.iter().enumerate().find(|(_, v)| (**v - 1.0).abs() <= 1e-15);
    if let Some((index, _)) = point {
        for q in 1..=k {
            if (index >> (k - q)) & 1 == 1 {
                gates.push(Gate::Not { target: q });
            }
        }
    } else {
        state_prep = Some(p_query.to_vec());
    }
    gates.extend(build_structure_encoding(config));
    Ok(Circuit { n_qubits: k, gates, state_prep, measured_qubits: (1..=d + 1).collect() })
}

/// Forest circuit over `k + m + f'` qubits, `f' = log2(f)` ancillas. The
/// preparation loads the product of the data distribution and the tree
/// weights; per tree, every structure swap gains the ancilla controls and is
/// wrapped in NOT decorations selecting that tree's ancilla pattern.
pub fn build_forest_circuit(
    trees: &[CompressedConfig],
    p_trees: &[f64],
    p: &JointDistribution,
) -> Result<Circuit> {
    let f = trees.len();
    if f < 2 || !f.is_power_of_two() {
        return Err(Error::InvalidShape(format!("tree count {f} must be a power of two >= 2")));
    }
    if p_trees.len() != f {
        return Err(Error::WidthMismatch { expected: f, found: p_trees.len() });
    }
    let sum: f64 = p_trees.iter().sum();
    if (sum - 1.0).abs() > crate::prob::NORMALIZATION_TOL || p_trees.iter().any(|v| *v < 0.0) {
        return Err(Error::Unnormalized(sum));
    }
    let (k, m) = (p.k(), p.m());
    let d = trees[0].d();
    for t in trees {
        if t.k != k || t.d() != d {
            return Err(Error::InvalidShape("all trees must share k and d".into()));
        }
    }
    if d + 1 > k {
        return Err(Error::InvalidShape(format!("d + 1 = {} exceeds feature count {k}", d + 1)));
    }
    let f_prime = f.ilog2() as usize;
    let n = k + m + f_prime;
    let ancillas: Vec<usize> = (k + m + 1..=k + m + f_prime).collect();

    // Product state: data on the first k + m qubits, weights on the ancillas.
    let mut prep = vec![0.0; 1 << n];
    for &(idx, mass) in p.support() {
        for (a, &w) in p_trees.iter().enumerate() {
            prep[(idx << f_prime) | a] = mass * w;
        }
    }

    let mut gates = Vec::new();
    for (t_index, tree) in trees.iter().enumerate() {
        let t = t_index + 1;
        let tree_decorations: Vec<usize> = (1..=f_prime)
            .filter(|&u| kappa(t, f_prime, u).expect("in range") == 0)
            .map(|u| ancillas[u - 1])
            .collect();
        let mut inner = Vec::new();
        emit_structure_gates(tree, &ancillas, &mut inner);
        if inner.is_empty() {
            continue;
        }
        // Wrap each node's gates in the tree-selecting decorations; emitting
        // them per node (rather than per tree) mirrors the per-node operator
        // and lets the peephole pass cancel the redundant inner pairs.
        for gate in inner {
            match gate {
                Gate::Mcswap { a, b, controls } => {
                    for &q in &tree_decorations {
                        gates.push(Gate::Not { target: q });
                    }
                    gates.push(Gate::Mcswap { a, b, controls });
                    for &q in &tree_decorations {
                        gates.push(Gate::Not { target: q });
                    }
                }
                other => gates.push(other),
            }
        }
    }
    let gates = peephole_cancel_nots(gates);
    let measured = (1..=d + 1).chain(k + 1..=k + m).chain(ancillas.iter().copied()).collect();
    Ok(Circuit { n_qubits: n, gates, state_prep: Some(prep), measured_qubits: measured })
}

/// Decomposes a (multi-controlled) swap into two CNOTs conjugating one
/// multi-controlled NOT: the outer gates target the second swap qubit
/// controlled on the first, the inner gate targets the first swap qubit with
/// the original controls plus the second swap qubit.
pub fn decompose_mcswap(gate: &Gate) -> Result<Vec<Gate>> {
    let (a, b, controls) = match gate {
        Gate::Swap { a, b } => (*a, *b, vec![]),
        Gate::Mcswap { a, b, controls } => (*a, *b, controls.clone()),
        Gate::Identity => {
            return Err(Error::InvalidArgument(
                "identity has no swap decomposition; normalize equal targets first".into(),
            ))
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "cannot decompose a {} gate as a swap",
                other.kind_name()
            )))
        }
    };
    let outer = Gate::Cnot { target: b, control: a };
    let mut inner_controls = controls;
    inner_controls.push(b);
    Ok(vec![outer.clone(), Gate::mcnot(a, inner_controls), outer])
}

/// Equivalent circuit on the measured window. The root decision feature is
/// moved to qubit 1 by reordering the data (which absorbs the root swap);
/// feature qubits that no remaining gate touches and that are not measured
/// are marginalized out of the preparation. For trees whose deeper swaps stay
/// inside the measured window this yields exactly `d + 1 + m` qubits.
pub fn reduce_tree_circuit(p: &JointDistribution, config: &CompressedConfig) -> Result<Circuit> {
    let full = build_tree_circuit(p, config)?;
    let (k, m, d) = (p.k(), p.m(), config.d());
    let root = config.layers[0][0];

    // Reorder features 1 <-> root in the data, then drop the root swap.
    let mut dense = vec![0.0; 1 << (k + m)];
    let shift = |q: usize| k + m - q;
    for &(idx, mass) in p.support() {
        let b1 = (idx >> shift(1)) & 1;
        let br = (idx >> shift(root)) & 1;
        let mut new_idx = idx & !(1 << shift(1)) & !(1 << shift(root));
        new_idx |= br << shift(1) | b1 << shift(root);
        dense[new_idx] += mass;
    }

    let mut remaining = CompressedConfig::new(k, config.layers.clone())?;
    remaining.layers[0][0] = 1; // identity after the reorder
    let gates = build_structure_encoding(&remaining);

    // Keep measured feature qubits plus anything the remaining gates touch.
    let mut keep: Vec<usize> = (1..=k)
        .filter(|&q| q <= d + 1 || gates.iter().any(|g| g.touches(q)))
        .collect();
    keep.sort_unstable();
    let new_k = keep.len();
    let rank = |q: usize| keep.iter().position(|&v| v == q).map(|r| r + 1);

    let mut reduced_prep = vec![0.0; 1 << (new_k + m)];
    for (idx, mass) in dense.iter().enumerate().filter(|(_, v)| **v > 0.0) {
        let mut out = 0usize;
        for &q in &keep {
            out = (out << 1) | ((idx >> shift(q)) & 1);
        }
        out = (out << m) | (idx & ((1 << m) - 1));
        reduced_prep[out] += mass;
    }

    let remap = |g: &Gate| -> Gate {
        match g {
            Gate::Not { target } => Gate::Not { target: rank(*target).expect("kept") },
            Gate::Mcswap { a, b, controls } => Gate::Mcswap {
                a: rank(*a).expect("kept"),
                b: rank(*b).expect("kept"),
                controls: controls.iter().map(|&c| rank(c).expect("kept")).collect(),
            },
            Gate::Swap { a, b } => Gate::Swap { a: rank(*a).expect("kept"), b: rank(*b).expect("kept") },
            other => other.clone(),
        }
    };
    let gates: Vec<Gate> = gates.iter().map(remap).collect();
    let measured = (1..=d + 1).chain(new_k + 1..=new_k + m).collect();
    let reduced = Circuit {
        n_qubits: new_k + m,
        gates,
        state_prep: Some(reduced_prep),
        measured_qubits: measured,
    };
    debug_assert_eq!(full.measured_qubits.len(), reduced.measured_qubits.len());
    Ok(reduced)
}

/// Per-kind gate tallies plus a two-qubit-equivalent estimate. NOT gates are
/// free, CNOT counts 1, SWAP 3; a multi-controlled NOT with `v > 2` controls
/// counts `8v - 20` two-qubit rotations, a Toffoli 6; a controlled swap adds
/// its two conjugating CNOTs to the inner NOT's cost.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateCountReport {
    pub counts: BTreeMap<String, usize>,
    pub two_qubit_equivalent: usize,
}

fn mcnot_two_qubit_cost(controls: usize) -> usize {
    match controls {
        0 => 0,
        1 => 1,
        2 => 6,
        v => 8 * v - 20,
    }
}

pub fn gate_count_report(circuit: &Circuit) -> GateCountReport {
    let mut counts = BTreeMap::new();
    let mut two_qubit = 0usize;
    for g in &circuit.gates {
        *counts.entry(g.kind_name().to_string()).or_insert(0) += 1;
        two_qubit += match g {
            Gate::Identity | Gate::Not { .. } => 0,
            Gate::Cnot { .. } => 1,
            Gate::Mcnot { controls, .. } => mcnot_two_qubit_cost(controls.len()),
            Gate::Swap { .. } => 3,
            Gate::Mcswap { controls, .. } => 2 + mcnot_two_qubit_cost(controls.len() + 1),
        };
    }
    GateCountReport { counts, two_qubit_equivalent: two_qubit }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_toy;

    fn cc(k: usize, layers: &[&[usize]]) -> CompressedConfig {
        CompressedConfig::new(k, layers.iter().map(|l| l.to_vec()).collect()).unwrap()
    }

    #[test]
    fn depth_zero_structure_is_one_swap() {
        assert_eq!(build_structure_encoding(&cc(2, &[&[2]])), vec![Gate::Swap { a: 1, b: 2 }]);
    }

    #[test]
    fn identity_swap_contributes_no_gates() {
        assert!(build_structure_encoding(&cc(3, &[&[1]])).is_empty());
        // Depth 1 with both nodes at the identity position: only the root swap.
        assert_eq!(build_structure_encoding(&cc(7, &[&[3], &[2, 2]])), vec![Gate::Swap { a: 1, b: 3 }]);
    }

    #[test]
    fn depth_one_decorations_appear_once_per_combination() {
        let gates = build_structure_encoding(&cc(3, &[&[1], &[3, 2]]));
        // Node 1 (path bit 0) is decorated, node 2 is an identity swap.
        assert_eq!(
            gates,
            vec![
                Gate::Not { target: 1 },
                Gate::Mcswap { a: 2, b: 3, controls: vec![1] },
                Gate::Not { target: 1 },
            ]
        );
        // Both depth-1 swaps real: the NOT pair between them must cancel.
        let gates = build_structure_encoding(&cc(3, &[&[1], &[3, 3]]));
        assert_eq!(
            gates,
            vec![
                Gate::Not { target: 1 },
                Gate::Mcswap { a: 2, b: 3, controls: vec![1] },
                Gate::Mcswap { a: 2, b: 3, controls: vec![1] },
                Gate::Not { target: 1 },
            ]
        );
    }

    #[test]
    fn peephole_cancels_only_unblocked_pairs() {
        let not1 = Gate::Not { target: 1 };
        let not2 = Gate::Not { target: 2 };
        let blocked = vec![not1.clone(), Gate::Swap { a: 1, b: 3 }, not1.clone()];
        assert_eq!(peephole_cancel_nots(blocked.clone()), blocked);
        let interleaved = vec![not1.clone(), not2.clone(), not1.clone(), not2.clone()];
        assert!(peephole_cancel_nots(interleaved).is_empty());
        assert!(peephole_cancel_nots(vec![Gate::Identity]).is_empty());
    }

    #[test]
    fn tree_circuit_layout() {
        let toy = load_toy();
        let p = JointDistribution::from_dataset(&toy).unwrap();
        let c = build_tree_circuit(&p, &cc(7, &[&[3], &[2, 2]])).unwrap();
        assert_eq!(c.n_qubits, 8);
        assert_eq!(c.measured_qubits, vec![1, 2, 8]);
        assert!(c.state_prep.is_some());
        c.validate().unwrap();

        // d = k - 1: all feature qubits measured.
        let p2 = JointDistribution::uniform(2, 1);
        let c2 = build_tree_circuit(&p2, &cc(2, &[&[1], &[2, 2]])).unwrap();
        assert_eq!(c2.measured_qubits, vec![1, 2, 3]);

        let bad = cc(2, &[&[1], &[2, 2]]);
        assert!(build_tree_circuit(&JointDistribution::uniform(1, 1), &bad).is_err());
    }

    #[test]
    fn query_circuit_point_mass_uses_not_gates() {
        let config = cc(7, &[&[3], &[2, 2]]);
        let mut p_query = vec![0.0; 128];
        let x = [1u8, 1, 1, 0, 0, 0, 0];
        let index = x.iter().fold(0usize, |acc, b| (acc << 1) | *b as usize);
        p_query[index] = 1.0;
        let c = build_query_circuit(&p_query, &config).unwrap();
        assert!(c.state_prep.is_none());
        assert_eq!(
            c.gates,
            vec![
                Gate::Not { target: 1 },
                Gate::Not { target: 2 },
                Gate::Not { target: 3 },
                Gate::Swap { a: 1, b: 3 },
            ]
        );
        assert_eq!(c.measured_qubits, vec![1, 2]);

        let uniform = vec![1.0 / 128.0; 128];
        let cu = build_query_circuit(&uniform, &config).unwrap();
        assert!(cu.state_prep.is_some());

        let unnormalized = vec![0.5; 128];
        assert!(build_query_circuit(&unnormalized, &config).is_err());
    }

    #[test]
    fn swap_decomposition_shape() {
        let gates = decompose_mcswap(&Gate::Swap { a: 1, b: 2 }).unwrap();
        assert_eq!(
            gates,
            vec![
                Gate::Cnot { target: 2, control: 1 },
                Gate::Cnot { target: 1, control: 2 },
                Gate::Cnot { target: 2, control: 1 },
            ]
        );
        let gates =
            decompose_mcswap(&Gate::Mcswap { a: 2, b: 3, controls: vec![1, 4, 5] }).unwrap();
        match &gates[1] {
            Gate::Mcnot { target, controls } => {
                assert_eq!(*target, 2);
                assert_eq!(controls, &vec![1, 4, 5, 3]);
            }
            other => panic!("expected MCNOT, got {other:?}"),
        }
        assert!(decompose_mcswap(&Gate::Identity).is_err());
        assert!(decompose_mcswap(&Gate::Not { target: 1 }).is_err());
    }

    #[test]
    fn forest_circuit_layout() {
        let p = JointDistribution::uniform(3, 1);
        let trees = vec![cc(3, &[&[2]]), cc(3, &[&[3]]), cc(3, &[&[1]]), cc(3, &[&[2]])];
        let c = build_forest_circuit(&trees, &[0.25; 4], &p).unwrap();
        assert_eq!(c.n_qubits, 3 + 1 + 2);
        assert_eq!(c.measured_qubits, vec![1, 4, 5, 6]);
        c.validate().unwrap();

        let three = vec![cc(3, &[&[2]]); 3];
        assert!(build_forest_circuit(&three, &[1.0 / 3.0; 3], &p).is_err());
    }

    #[test]
    fn reduced_circuit_window() {
        let toy = load_toy();
        let p = JointDistribution::from_dataset(&toy).unwrap();
        let reduced = reduce_tree_circuit(&p, &cc(7, &[&[3], &[2, 2]])).unwrap();
        assert_eq!(reduced.n_qubits, 3); // d + 1 + m
        assert!(reduced.gates.is_empty()); // root swap absorbed, rest identity
        assert_eq!(reduced.measured_qubits, vec![1, 2, 3]);
        reduced.validate().unwrap();

        // d = k - 1 keeps every qubit: reordering only.
        let p2 = JointDistribution::uniform(3, 1);
        let reduced2 = reduce_tree_circuit(&p2, &cc(3, &[&[3], &[2, 3]])).unwrap();
        assert_eq!(reduced2.n_qubits, 4);
    }

    #[test]
    fn gate_count_examples() {
        let c = Circuit {
            n_qubits: 2,
            gates: vec![Gate::Swap { a: 1, b: 2 }],
            state_prep: None,
            measured_qubits: vec![1, 2],
        };
        let report = gate_count_report(&c);
        assert_eq!(report.counts.get("SWAP"), Some(&1));
        assert_eq!(report.counts.len(), 1);
        assert_eq!(report.two_qubit_equivalent, 3);

        let c = Circuit {
            n_qubits: 4,
            gates: vec![Gate::Mcnot { target: 4, controls: vec![1, 2, 3] }],
            state_prep: None,
            measured_qubits: vec![4],
        };
        assert_eq!(gate_count_report(&c).two_qubit_equivalent, 4);
    }

    #[test]
    fn structure_gate_count_matches_hand_enumeration() {
        // Count decorated swaps node by node, independently of the builder.
        let config = cc(5, &[&[4], &[3, 2], &[5, 3, 4, 3]]);
        let gates = {
            let mut raw = Vec::new();
            emit_structure_gates(&config, &[], &mut raw);
            raw
        };
        let mut expected_swaps = 0;
        let mut expected_nots = 0;
        for i in 0..=config.d() {
            for j in 1..=(1usize << i) {
                if config.layers[i][j - 1] == i + 1 {
                    continue;
                }
                expected_swaps += 1;
                let zeros = (1..=i).filter(|&u| kappa(j, i, u).unwrap() == 0).count();
                expected_nots += 2 * zeros;
            }
        }
        let swaps = gates.iter().filter(|g| matches!(g, Gate::Swap { .. } | Gate::Mcswap { .. })).count();
        let nots = gates.iter().filter(|g| matches!(g, Gate::Not { .. })).count();
        assert_eq!(swaps, expected_swaps);
        assert_eq!(nots, expected_nots);
    }

    #[test]
    fn circuit_json_schema() {
        let c = Circuit {
            n_qubits: 2,
            gates: vec![Gate::Swap { a: 1, b: 2 }],
            state_prep: None,
            measured_qubits: vec![1],
        };
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(
            json,
            r#"{"n":2,"prep":null,"gates":[{"kind":"SWAP","targets":[1,2],"controls":[]}],"measure":[1]}"#
        );
        let back: Circuit = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
