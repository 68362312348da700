//! Dense statevector simulation: qsample initialization, gate application,
//! exact marginal measurement distributions, and seeded shot sampling.
//!
//! Qubit `q` (1-based) owns bit weight `2^(n-q)` of the basis index, so
//! qubit 1 is the most significant bit. Amplitudes stay complex even though
//! every circuit in this crate produces real non-negative ones; the
//! unitarity checks are only honest on the general representation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use crate::circuit::{Circuit, Gate};
use crate::util::{bits_to_index, bits_to_string, index_to_bits, parse_bits};
use crate::{Error, Result};

/// Tolerance for state normalization checks.
pub const NORM_TOL: f64 = 1e-10;

/// A dense amplitude vector over `n` qubits.
#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// All qubits in |0>.
    pub fn ground(n: usize) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[0] = Complex64::ONE;
        Self { n, amps }
    }

    /// Qsample encoding: amplitude `sqrt(p(b))` at basis index `b`, phase 0.
    pub fn from_qsample(probs: &[f64]) -> Result<Self> {
        if !probs.len().is_power_of_two() {
            return Err(Error::InvalidShape(format!("table length {} is not a power of two", probs.len())));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > crate::prob::NORMALIZATION_TOL || probs.iter().any(|p| *p < 0.0) {
            return Err(Error::Unnormalized(sum));
        }
        let n = probs.len().ilog2() as usize;
        let amps = probs.iter().map(|p| Complex64::new(p.sqrt(), 0.0)).collect();
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n - q)
    }

    fn control_mask(&self, controls: &[usize]) -> usize {
        controls.iter().fold(0usize, |m, &q| m | self.mask(q))
    }

    /// Applies one gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        match gate {
            Gate::Identity => {}
            Gate::Not { target } => {
                let t = self.mask(*target);
                for i in 0..self.amps.len() {
                    if i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            Gate::Cnot { .. } | Gate::Mcnot { .. } => {
                let t = self.mask(gate.targets()[0]);
                let c = self.control_mask(gate.controls());
                for i in 0..self.amps.len() {
                    if i & c == c && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            Gate::Swap { a, b } | Gate::Mcswap { a, b, .. } => {
                let (ma, mb) = (self.mask(*a), self.mask(*b));
                let c = self.control_mask(gate.controls());
                for i in 0..self.amps.len() {
                    if i & c == c && i & ma != 0 && i & mb == 0 {
                        self.amps.swap(i, i ^ ma ^ mb);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_gates<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    /// Prepares and runs a circuit.
    pub fn run_circuit(circuit: &Circuit) -> Result<Self> {
        circuit.validate()?;
        let mut state = match &circuit.state_prep {
            Some(p) => {
                let s = Self::from_qsample(p)?;
                if s.n != circuit.n_qubits {
                    return Err(Error::InvalidShape("state preparation size mismatch".into()));
                }
                s
            }
            None => Self::ground(circuit.n_qubits),
        };
        state.apply_gates(&circuit.gates)?;
        Ok(state)
    }

    /// Marginal distribution of a projective measurement of `measured`, in
    /// readout order (first measured qubit most significant).
    pub fn exact_measurement_distribution(&self, measured: &[usize]) -> Result<Vec<f64>> {
        if measured.is_empty() {
            return Err(Error::InvalidArgument("measurement needs at least one qubit".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &q in measured {
            if q < 1 || q > self.n {
                return Err(Error::InvalidArgument(format!("measured qubit {q} outside register")));
            }
            if !seen.insert(q) {
                return Err(Error::InvalidArgument(format!("measured qubit {q} listed twice")));
            }
        }
        let mut out = vec![0.0; 1 << measured.len()];
        for (i, amp) in self.amps.iter().enumerate() {
            let w = amp.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let mut o = 0usize;
            for &q in measured {
                o = (o << 1) | ((i >> (self.n - q)) & 1);
            }
            out[o] += w;
        }
        Ok(out)
    }

    /// Draws `shots` independent samples from the exact measurement marginal.
    /// Identical `(state, measured, shots, seed)` give identical results.
    pub fn sample_shots(&self, measured: &[usize], shots: u64, seed: u64) -> Result<ShotResult> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shot count must be at least 1".into()));
        }
        let dist = self.exact_measurement_distribution(measured)?;
        Ok(sample_from_distribution(&dist, measured.len(), shots, seed))
    }
}

/// Draws shots from an explicit distribution; terminal measurements make this
/// statistically identical to per-shot state collapse and far cheaper.
pub fn sample_from_distribution(dist: &[f64], n_bits: usize, shots: u64, seed: u64) -> ShotResult {
    let mut cumulative = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for &p in dist {
        acc += p;
        cumulative.push(acc);
    }
    let total_mass = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total_mass;
        let idx = cumulative.partition_point(|&c| c <= u).min(dist.len() - 1);
        *counts.entry(idx as u64).or_insert(0) += 1;
    }
    ShotResult { n_bits, total: shots, seed, counts }
}

/// A multiset of measured bit strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotResult {
    /// Length of each measured string.
    pub n_bits: usize,
    /// Total number of shots; equals the sum of all counts.
    pub total: u64,
    /// Seed the shots were drawn with.
    pub seed: u64,
    /// Multiplicity per measured outcome (packed, first bit most significant).
    pub counts: BTreeMap<u64, u64>,
}

impl ShotResult {
    pub fn count_of(&self, outcome: u64) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    /// Empirical frequencies as a dense table of length `2^n_bits`.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.n_bits];
        for (&o, &c) in &self.counts {
            out[o as usize] = c as f64 / self.total as f64;
        }
        out
    }

    pub fn bitstring(&self, outcome: u64) -> String {
        bits_to_string(&index_to_bits(outcome, self.n_bits))
    }

    /// `bitstring,count` lines, lexicographically sorted.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bitstring,count\n");
        for (&o, &c) in &self.counts {
            out.push_str(&format!("{},{}\n", self.bitstring(o), c));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "bitstring,count" => {}
            _ => return Err(Error::Parse { line: 1, msg: "expected header bitstring,count".into() }),
        }
        let mut counts = BTreeMap::new();
        let mut n_bits = 0;
        let mut total = 0u64;
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (bits, count) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse { line: idx + 1, msg: "expected bitstring,count".into() })?;
            let bits = parse_bits(bits.trim())
                .map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
            if n_bits == 0 {
                n_bits = bits.len();
            } else if bits.len() != n_bits {
                return Err(Error::Parse { line: idx + 1, msg: "inconsistent bitstring length".into() });
            }
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|e| Error::Parse { line: idx + 1, msg: format!("bad count: {e}") })?;
            total += count;
            *counts.entry(bits_to_index(&bits)).or_insert(0) += count;
        }
        if n_bits == 0 {
            return Err(Error::Parse { line: 1, msg: "no shot rows".into() });
        }
        Ok(Self { n_bits, total, seed: 0, counts })
    }
}
