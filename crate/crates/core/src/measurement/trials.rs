use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{all_bin_momenta, bin_probabilities, representative_wave_vectors, DetectorArray};
use crate::error::{Error, Result};
use crate::io;
use crate::noether::{noether_momentum, FourVector};
use crate::packet::MomentumPacket;

/// Width of the acceptance band in standard errors.
pub const STDERR_BAND: f64 = 4.0;
/// Quantile of the chi-squared acceptance threshold.
pub const CHI_SQUARED_LEVEL: f64 = 0.999;
// relative floor for comparisons whose spread vanishes, e.g. symmetric bins
const ROUNDOFF: f64 = 1e-12;

/// Inverse-CDF categorical sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        // pin the tail to 1 from the last bin with weight on, so zero-weight bins are never drawn
        let last = probs.iter().rposition(|p| *p > 0.0).expect("total is positive");
        for c in &mut cdf[last..] {
            *c = 1.0;
        }
        Ok(Sampler { cdf })
    }

    /// Bin drawn by trial `trial_index` of the stream keyed by `seed`.
    pub fn sample(&self, trial_index: u64, seed: u64) -> usize {
        let u = uniform(seed, trial_index);
        self.cdf.partition_point(|c| *c <= u)
    }

    pub fn bins(&self) -> usize {
        self.cdf.len()
    }
}

// ChaCha stream `trial_index` of key `seed`; 53 random bits in [0, 1)
fn uniform(seed: u64, trial_index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn sample_detection(probs: &[f64], trial_index: u64, seed: u64) -> Result<usize> {
    Ok(Sampler::new(probs)?.sample(trial_index, seed))
}

/// Seed for a repeat experiment, derived deterministically from `seed`.
pub fn fresh_seed(seed: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-bin quantities for one packet and array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinTable {
    pub probabilities: Vec<f64>,
    /// `P^mu(n)`.
    pub momenta: Vec<FourVector>,
    /// On-shell `hbar k^mu(n)`.
    pub representative: Vec<FourVector>,
    /// Momentum of the packet collapsed onto the bin, `P^mu(n) / p(n)`; zero for empty bins.
    pub registered: Vec<FourVector>,
    /// `P^mu - hbar k^mu(n)`.
    pub delta: Vec<FourVector>,
    pub total: FourVector,
}

impl BinTable {
    pub fn new(packet: &MomentumPacket, array: &DetectorArray) -> Result<Self> {
        let probabilities = bin_probabilities(packet, array)?;
        let momenta = all_bin_momenta(packet, array)?;
        let hbar = packet.constants().hbar;
        let representative: Vec<FourVector> = representative_wave_vectors(packet, array)?
            .iter()
            .map(|k| k.scale(hbar))
            .collect();
        let registered = momenta
            .iter()
            .zip(&probabilities)
            .map(|(m, p)| if *p > 0.0 { m.scale(1.0 / p) } else { FourVector::default() })
            .collect();
        let total = noether_momentum(packet);
        let delta = representative.iter().map(|r| total.sub(r)).collect();
        Ok(BinTable {
            probabilities,
            momenta,
            representative,
            registered,
            delta,
            total,
        })
    }

    pub fn bins(&self) -> usize {
        self.probabilities.len()
    }

    /// `sum_n p(n) values(n)`.
    pub fn weighted_mean(&self, values: &[FourVector]) -> FourVector {
        self.probabilities
            .iter()
            .zip(values)
            .fold(FourVector::default(), |acc, (p, v)| acc.add(&v.scale(*p)))
    }
}

/// Outcomes of a set of detection trials. Statistics are functions of the
/// integer counts, so merging ledgers is exact and order-independent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLedger {
    pub seed: u64,
    /// `(trial index, detected bin)`, sorted by trial index.
    pub outcomes: Vec<(u64, u32)>,
    pub counts: Vec<u64>,
}

impl TrialLedger {
    pub fn new(seed: u64, bins: usize) -> Self {
        TrialLedger {
            seed,
            outcomes: Vec::new(),
            counts: vec![0; bins],
        }
    }

    /// Runs trials `range` against `sampler`, concurrently.
    pub fn run(sampler: &Sampler, seed: u64, range: std::ops::Range<u64>) -> Self {
        let outcomes: Vec<(u64, u32)> = range
            .into_par_iter()
            .map(|i| (i, sampler.sample(i, seed) as u32))
            .collect();
        let mut counts = vec![0; sampler.bins()];
        for (_, b) in &outcomes {
            counts[*b as usize] += 1;
        }
        TrialLedger { seed, outcomes, counts }
    }

    pub fn merge(mut self, other: TrialLedger) -> Result<Self> {
        if self.seed != other.seed || self.counts.len() != other.counts.len() {
            return Err(Error::InvalidArgument("ledgers differ in seed or bin count".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.outcomes.extend(other.outcomes);
        self.outcomes.sort_unstable();
        Ok(self)
    }

    pub fn trials(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.trials() as f64;
        self.counts.iter().map(|c| *c as f64 / t).collect()
    }

    /// Sum over trials of the per-bin `values`.
    pub fn sum(&self, values: &[FourVector]) -> FourVector {
        self.counts
            .iter()
            .zip(values)
            .fold(FourVector::default(), |acc, (c, v)| acc.add(&v.scale(*c as f64)))
    }

    /// Sample mean and its standard error per component; the error is zero for a single trial.
    pub fn mean_and_stderr(&self, values: &[FourVector]) -> (FourVector, [f64; 4]) {
        let t = self.trials() as f64;
        let mean = self.sum(values).scale(1.0 / t);
        let mut err = [0.0; 4];
        if t > 1.0 {
            for (mu, e) in err.iter_mut().enumerate() {
                let ss: f64 = self
                    .counts
                    .iter()
                    .zip(values)
                    .map(|(c, v)| *c as f64 * (v.0[mu] - mean.0[mu]).powi(2))
                    .sum();
                *e = (ss / (t - 1.0) / t).sqrt();
            }
        }
        (mean, err)
    }

    /// Columns `trial, bin, P0..P3` (registered) and `dP0..dP3`.
    pub fn write_trials<W: Write>(&self, w: &mut W, table: &BinTable) -> std::io::Result<()> {
        let headers = ["trial", "bin", "P0", "P1", "P2", "P3", "dP0", "dP1", "dP2", "dP3"];
        let rows: Vec<Vec<f64>> = self
            .outcomes
            .iter()
            .map(|(i, b)| {
                let mut row = vec![*i as f64, *b as f64];
                row.extend(table.registered[*b as usize].0);
                row.extend(table.delta[*b as usize].0);
                row
            })
            .collect();
        io::write_table(w, &headers, &rows)
    }
}

fn within_band(mc: &FourVector, reference: &FourVector, stderr: &[f64; 4], scale: f64) -> bool {
    (0..4).all(|mu| (mc.0[mu] - reference.0[mu]).abs() <= STDERR_BAND * stderr[mu] + ROUNDOFF * scale)
}

fn scale_of(values: &[FourVector]) -> f64 {
    values
        .iter()
        .flat_map(|v| v.0)
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Pearson statistic over bins with positive probability, with its degrees
/// of freedom and the [`CHI_SQUARED_LEVEL`] quantile.
pub fn chi_squared(counts: &[u64], probs: &[f64]) -> (f64, usize, f64) {
    let t: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut support = 0usize;
    for (c, p) in counts.iter().zip(probs) {
        if *p > 0.0 {
            support += 1;
            let e = t as f64 * p;
            stat += (*c as f64 - e).powi(2) / e;
        }
    }
    let dof = support.saturating_sub(1);
    let quantile = if dof == 0 {
        0.0
    } else {
        ChiSquared::new(dof as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(CHI_SQUARED_LEVEL)
    };
    (stat, dof, quantile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub seed: u64,
    pub trials: u64,
    pub counts: Vec<u64>,
    pub probabilities: Vec<f64>,
    /// Monte Carlo mean of `P^mu - hbar k^mu(n)`.
    pub mean_delta: FourVector,
    pub stderr: [f64; 4],
    /// `sum_n p(n) (P^mu - hbar k^mu(n))`.
    pub exact_mean_delta: FourVector,
    pub within_band: bool,
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    pub chi_squared_quantile: f64,
}

/// `trials` sampled detections; the Monte Carlo mean detection force is
/// compared with its exact weighted mean.
pub fn detection_force_trials(
    packet: &MomentumPacket,
    array: &DetectorArray,
    trials: u64,
    seed: u64,
) -> Result<(TrialLedger, BinTable, DetectionSummary)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let table = BinTable::new(packet, array)?;
    let ledger = TrialLedger::run(&Sampler::new(&table.probabilities)?, seed, 0..trials);
    let (mean_delta, stderr) = ledger.mean_and_stderr(&table.delta);
    let exact_mean_delta = table.weighted_mean(&table.delta);
    let (chi, dof, q) = chi_squared(&ledger.counts, &table.probabilities);
    let summary = DetectionSummary {
        seed,
        trials,
        counts: ledger.counts.clone(),
        probabilities: table.probabilities.clone(),
        within_band: within_band(&mean_delta, &exact_mean_delta, &stderr, scale_of(&table.representative)),
        mean_delta,
        stderr,
        exact_mean_delta,
        chi_squared: chi,
        degrees_of_freedom: dof,
        chi_squared_quantile: q,
    };
    Ok((ledger, table, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationComparison {
    /// Monte Carlo mean of the registered momentum.
    pub mean_registered: FourVector,
    pub stderr: [f64; 4],
    pub noether: FourVector,
    pub difference: FourVector,
    pub within_band: bool,
    /// `sum_n p(n) hbar k^mu(n)` with on-shell representatives.
    pub representative_expectation: FourVector,
}

/// Compares the average registered momentum over `trials` detections with
/// the packet's Noether momentum.
pub fn expectation_vs_noether(
    packet: &MomentumPacket,
    array: &DetectorArray,
    trials: u64,
    seed: u64,
) -> Result<ExpectationComparison> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let table = BinTable::new(packet, array)?;
    let ledger = TrialLedger::run(&Sampler::new(&table.probabilities)?, seed, 0..trials);
    let (mean, stderr) = ledger.mean_and_stderr(&table.registered);
    Ok(ExpectationComparison {
        difference: mean.sub(&table.total),
        within_band: within_band(&mean, &table.total, &stderr, scale_of(&table.registered)),
        mean_registered: mean,
        stderr,
        noether: table.total,
        representative_expectation: table.weighted_mean(&table.representative),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornCheck {
    pub seed: u64,
    pub trials: u64,
    pub probabilities: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// Every `|f(n) - p(n)| <= 4 sqrt(p (1 - p) / T)`.
    pub frequencies_ok: bool,
    pub chi_squared: f64,
    pub degrees_of_freedom: usize,
    pub chi_squared_quantile: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornVerdict {
    pub first: BornCheck,
    /// Repeat on [`fresh_seed`], run only when the first check fails.
    pub retry: Option<BornCheck>,
    /// The first check failed.
    pub flagged: bool,
    pub passed: bool,
}

fn born_once(probs: &[f64], trials: u64, seed: u64) -> Result<BornCheck> {
    let ledger = TrialLedger::run(&Sampler::new(probs)?, seed, 0..trials);
    let frequencies = ledger.frequencies();
    let t = trials as f64;
    let frequencies_ok = frequencies
        .iter()
        .zip(probs)
        .all(|(f, p)| (f - p).abs() <= STDERR_BAND * (p * (1.0 - p) / t).sqrt());
    let (chi, dof, q) = chi_squared(&ledger.counts, probs);
    Ok(BornCheck {
        seed,
        trials,
        probabilities: probs.to_vec(),
        frequencies,
        frequencies_ok,
        chi_squared: chi,
        degrees_of_freedom: dof,
        chi_squared_quantile: q,
        passed: frequencies_ok && chi <= q,
    })
}

/// Empirical detection frequencies against `p(n)`. A failure is flagged and
/// repeated once with a fresh seed; the verdict fails only if both fail.
pub fn born_rule_check(packet: &MomentumPacket, array: &DetectorArray, trials: u64, seed: u64) -> Result<BornVerdict> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let probs = bin_probabilities(packet, array)?;
    let first = born_once(&probs, trials, seed)?;
    if first.passed {
        return Ok(BornVerdict {
            first,
            retry: None,
            flagged: false,
            passed: true,
        });
    }
    let retry = born_once(&probs, trials, fresh_seed(seed))?;
    Ok(BornVerdict {
        passed: retry.passed,
        first,
        retry: Some(retry),
        flagged: true,
    })
}
