//! Turns shot counts into probability estimates with attached uncertainty:
//! binomial intervals for reach probabilities, ratio-of-binomials intervals
//! for label conditionals, error propagation for averaged predictions, and
//! truncated-normal fitting of hardware-style noise.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;
use std::collections::BTreeMap;

use crate::prob::LeafProfile;
use crate::statevector::ShotResult;
use crate::tree::node_index;
use crate::util::index_to_bits;
use crate::{Error, Result};

/// Estimate of one conditional label probability within a leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelEstimate {
    /// Counts of label value 0 and 1, absent in exact mode.
    pub counts: Option<(u64, u64)>,
    /// `p(y_i = 1 | leaf)`; the agnostic 1/2 when undefined.
    pub p1: f64,
    /// Standard deviation of the estimate; 0 in exact mode.
    pub std: f64,
    /// False when no shot reached the leaf (or, exactly, no training mass).
    pub defined: bool,
}

/// Estimates for one leaf: reach probability and per-label conditionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafEstimate {
    /// Shots that landed in this leaf, absent in exact mode.
    pub count: Option<u64>,
    pub reach: f64,
    pub reach_std: f64,
    pub defined: bool,
    pub labels: Vec<LabelEstimate>,
}

/// Per-leaf estimates with provenance: `shots` is the total shot count, or
/// `None` for exact distributions (all standard deviations zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafEstimates {
    pub d: usize,
    pub m: usize,
    pub shots: Option<u64>,
    pub leaves: Vec<LeafEstimate>,
}

impl LeafEstimates {
    /// Wraps exact leaf profiles as zero-variance estimates.
    pub fn from_profiles(profiles: &[LeafProfile], d: usize, m: usize) -> Result<Self> {
        if profiles.len() != 1 << (d + 1) {
            return Err(Error::InvalidShape(format!(
                "{} profiles do not cover 2^(d+1) = {} leaves",
                profiles.len(),
                1usize << (d + 1)
            )));
        }
        let leaves = profiles
            .iter()
            .map(|p| LeafEstimate {
                count: None,
                reach: p.reach_prob,
                reach_std: 0.0,
                defined: p.defined,
                labels: p
                    .label_p1
                    .iter()
                    .map(|&p1| LabelEstimate { counts: None, p1, std: 0.0, defined: p.defined })
                    .collect(),
            })
            .collect();
        Ok(Self { d, m, shots: None, leaves })
    }

    pub fn leaf(&self, nu: usize) -> &LeafEstimate {
        &self.leaves[nu - 1]
    }

    /// Path bit string of leaf `nu`.
    pub fn bitstring(&self, nu: usize) -> String {
        crate::prob::leaf_bitstring(nu, self.d)
    }
}

/// Raw per-leaf counts binned from measured bit strings: the first `d + 1`
/// bits select the leaf, bit `d + 1 + j` feeds label `j`'s 0/1 bins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafTallies {
    pub d: usize,
    pub m: usize,
    pub total: u64,
    /// Shots per leaf, indexed by leaf - 1.
    pub n: Vec<u64>,
    /// Per leaf and label, counts of label value 0 and 1.
    pub label_bins: Vec<Vec<(u64, u64)>>,
}

/// Bins a shot log into per-leaf counts.
pub fn tally_counts(shots: &ShotResult, d: usize, m: usize) -> Result<LeafTallies> {
    if shots.n_bits != d + 1 + m {
        return Err(Error::WidthMismatch { expected: d + 1 + m, found: shots.n_bits });
    }
    let leaves = 1usize << (d + 1);
    let mut n = vec![0u64; leaves];
    let mut label_bins = vec![vec![(0u64, 0u64); m]; leaves];
    for (&outcome, &count) in &shots.counts {
        let bits = index_to_bits(outcome, shots.n_bits);
        let nu = node_index(&bits[..d + 1]);
        n[nu - 1] += count;
        for j in 0..m {
            if bits[d + 1 + j] == 0 {
                label_bins[nu - 1][j].0 += count;
            } else {
                label_bins[nu - 1][j].1 += count;
            }
        }
    }
    Ok(LeafTallies { d, m, total: shots.total, n, label_bins })
}

/// Converts tallies into estimates: reach `n/N` with the binomial standard
/// deviation, conditionals `n^1/n` with the ratio-of-binomials standard
/// deviation. Leaves without shots get the agnostic 1/2 conditional, flagged
/// undefined.
pub fn estimate(tallies: &LeafTallies) -> LeafEstimates {
    let total = tallies.total;
    let leaves = tallies
        .n
        .iter()
        .zip(&tallies.label_bins)
        .map(|(&n, bins)| {
            let reach = n as f64 / total as f64;
            let reach_std = (reach * (1.0 - reach) / total as f64).sqrt();
            let defined = n > 0;
            let labels = bins
                .iter()
                .map(|&(n0, n1)| {
                    if !defined {
                        return LabelEstimate { counts: Some((0, 0)), p1: 0.5, std: 0.0, defined: false };
                    }
                    let p1 = n1 as f64 / n as f64;
                    let zeta = zeta_expectation(total, n as f64 / total as f64)
                        .expect("n > 0 implies q > 0");
                    let std = (p1 * (1.0 - p1) * zeta).sqrt();
                    LabelEstimate { counts: Some((n0, n1)), p1, std, defined: true }
                })
                .collect();
            LeafEstimate { count: Some(n), reach, reach_std, defined, labels }
        })
        .collect();
    LeafEstimates { d: tallies.d, m: tallies.m, shots: Some(total), leaves }
}

/// Samples a tree circuit's shot log straight into estimates.
pub fn estimate_from_shots(shots: &ShotResult, d: usize, m: usize) -> Result<LeafEstimates> {
    Ok(estimate(&tally_counts(shots, d, m)?))
}

/// A point estimate with standard deviation and a confidence interval
/// clipped to [0, 1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub p_hat: f64,
    pub std: f64,
    pub lo: f64,
    pub hi: f64,
}

fn z_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("error rate alpha {alpha} outside (0, 1)")));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Normal-approximation interval for a binomial proportion `n / trials`.
pub fn binomial_interval(n: u64, trials: u64, alpha: f64) -> Result<Interval> {
    if trials == 0 || n > trials {
        return Err(Error::InvalidArgument(format!("counts {n}/{trials} are not a proportion")));
    }
    let z = z_quantile(alpha)?;
    let p_hat = n as f64 / trials as f64;
    let std = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
    Ok(Interval { p_hat, std, lo: (p_hat - z * std).max(0.0), hi: (p_hat + z * std).min(1.0) })
}

/// Expected reciprocal `E[1/m]` of a zero-truncated binomial with `trials`
/// draws at success probability `q`, by the log-stable finite sum
/// `sum_{m=1}^{N} (1/m) B(m; N, q) / (1 - (1-q)^N)`.
pub fn zeta_expectation(trials: u64, q: f64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidArgument(format!("success probability q = {q} outside (0, 1]")));
    }
    let n = trials as f64;
    if q == 1.0 {
        return Ok(1.0 / n);
    }
    let ln_q = q.ln();
    let ln_1q = (1.0 - q).ln();
    let ln_n_fact = ln_gamma(n + 1.0);
    let mut sum = 0.0;
    for m in 1..=trials {
        let mf = m as f64;
        let ln_binom = ln_n_fact - ln_gamma(mf + 1.0) - ln_gamma(n - mf + 1.0);
        let ln_term = ln_binom + mf * ln_q + (n - mf) * ln_1q - mf.ln();
        sum += ln_term.exp();
    }
    let b0 = -f64::exp_m1(n * ln_1q); // 1 - (1-q)^N
    Ok(sum / b0)
}

/// Interval for a conditional proportion `successes / conditioned` where the
/// conditioning count is itself a (zero-truncated) binomial draw out of
/// `trials`. Uses the plug-in `q = conditioned / trials`.
pub fn ratio_interval(successes: u64, conditioned: u64, trials: u64, alpha: f64) -> Result<Interval> {
    if conditioned == 0 {
        return Err(Error::InvalidArgument("conditioning count must be at least 1".into()));
    }
    if successes > conditioned || conditioned > trials {
        return Err(Error::InvalidArgument(format!(
            "counts {successes}/{conditioned}/{trials} are not nested proportions"
        )));
    }
    let z = z_quantile(alpha)?;
    let p_hat = successes as f64 / conditioned as f64;
    let zeta = zeta_expectation(trials, conditioned as f64 / trials as f64)?;
    let std = (p_hat * (1.0 - p_hat) * zeta).sqrt();
    Ok(Interval { p_hat, std, lo: (p_hat - z * std).max(0.0), hi: (p_hat + z * std).min(1.0) })
}

/// Standard error propagation for a prediction averaged over leaves:
/// per leaf, the pair of (estimate, std) for the reach probability and the
/// label conditional. Correlations are neglected.
pub fn propagate_prediction_std(terms: &[((f64, f64), (f64, f64))]) -> f64 {
    terms
        .iter()
        .map(|((reach, reach_std), (label, label_std))| {
            label * label * reach_std * reach_std + reach * reach * label_std * label_std
        })
        .sum::<f64>()
        .sqrt()
}

/// Fitted truncated-normal noise parameters per bit string, reach family
/// (`mu_eps`, `sigma_eps`) and label-conditional family (`mu_eps_cond`,
/// `sigma_eps_cond`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseFitRow {
    pub bitstring: String,
    pub mu_eps: Option<f64>,
    pub sigma_eps: Option<f64>,
    pub mu_eps_cond: Option<f64>,
    pub sigma_eps_cond: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseFit {
    pub rows: Vec<NoiseFitRow>,
}

/// Maximum-likelihood mean and standard deviation of a normal truncated to
/// (0, 1), fitted to repeated probability estimates. All-equal samples yield
/// that value with standard deviation 0.
pub fn fit_truncated_normal(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples to fit, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidArgument("samples must lie in [0, 1]".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Ok((mean, 0.0));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    // Negative log-likelihood with the (0, 1) truncation term; sigma is
    // optimized on a log scale to stay positive.
    let nll = |mu: f64, ln_sigma: f64| -> f64 {
        let sigma = ln_sigma.exp();
        let z = normal.cdf((1.0 - mu) / sigma) - normal.cdf(-mu / sigma);
        if z <= 0.0 {
            return f64::INFINITY;
        }
        let ss: f64 = samples.iter().map(|x| (x - mu) * (x - mu)).sum();
        n * ln_sigma + ss / (2.0 * sigma * sigma) + n * z.ln()
    };
    let (mu, ln_sigma) = nelder_mead_2d(|p| nll(p[0], p[1]), [mean, var.sqrt().ln()], 0.1, 400);
    Ok((mu, ln_sigma.exp()))
}

/// Minimal two-dimensional Nelder-Mead descent.
fn nelder_mead_2d(f: impl Fn([f64; 2]) -> f64, start: [f64; 2], scale: f64, iterations: usize) -> [f64; 2] {
    let mut simplex = [
        start,
        [start[0] + scale, start[1]],
        [start[0], start[1] + scale],
    ];
    let mut values = simplex.map(&f);
    for _ in 0..iterations {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if (values[2] - values[0]).abs() < 1e-14 {
            break;
        }
        let centroid = [
            (simplex[0][0] + simplex[1][0]) / 2.0,
            (simplex[0][1] + simplex[1][1]) / 2.0,
        ];
        let lerp = |t: f64| {
            [centroid[0] + t * (simplex[2][0] - centroid[0]), centroid[1] + t * (simplex[2][1] - centroid[1])]
        };
        let reflected = lerp(-1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(-2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = lerp(0.5);
            let fc = f(contracted);
            if fc < values[2] {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = [
                        (simplex[i][0] + simplex[0][0]) / 2.0,
                        (simplex[i][1] + simplex[0][1]) / 2.0,
                    ];
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex[best]
}

/// Fits one noise family: per bit string, the truncated-normal location
/// shift `mu - p_exact` and width over the repeated estimates.
pub fn fit_noise_family(
    samples: &BTreeMap<String, Vec<f64>>,
    exact: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, (f64, f64)>> {
    let mut out = BTreeMap::new();
    for (bitstring, values) in samples {
        let p_exact = *exact.get(bitstring).ok_or_else(|| {
            Error::InvalidArgument(format!("no exact probability for bit string {bitstring}"))
        })?;
        let (mu, sigma) = fit_truncated_normal(values)?;
        out.insert(bitstring.clone(), (mu - p_exact, sigma));
    }
    Ok(out)
}

/// Combines the reach and label-conditional families into one table keyed by
/// bit string, mirroring a per-path noise report.
pub fn fit_truncated_normal_noise(
    reach_samples: &BTreeMap<String, Vec<f64>>,
    reach_exact: &BTreeMap<String, f64>,
    cond_samples: &BTreeMap<String, Vec<f64>>,
    cond_exact: &BTreeMap<String, f64>,
) -> Result<NoiseFit> {
    let reach = fit_noise_family(reach_samples, reach_exact)?;
    let cond = fit_noise_family(cond_samples, cond_exact)?;
    let keys: std::collections::BTreeSet<&String> = reach.keys().chain(cond.keys()).collect();
    let rows = keys
        .into_iter()
        .map(|bitstring| {
            let r = reach.get(bitstring);
            let c = cond.get(bitstring);
            NoiseFitRow {
                bitstring: bitstring.clone(),
                mu_eps: r.map(|v| v.0),
                sigma_eps: r.map(|v| v.1),
                mu_eps_cond: c.map(|v| v.0),
                sigma_eps_cond: c.map(|v| v.1),
            }
        })
        .collect();
    Ok(NoiseFit { rows })
}
