//! Monte Carlo and BAT-MCS reliability estimators.
//!
//! Crude MCS samples every arc and reports the connected fraction.
//! BAT-MCS enumerates the `2^δ` supervectors over the first δ arcs in BAT
//! order, settles each one whose zero-extension is connected (adds `Pr(S)`)
//! or whose one-extension is disconnected (drops it), and spends the budget
//! on the ambiguous rest in proportion to `Pr(S)`:
//!
//! ```text
//! N_sim(S) = max(1, floor(N_sim * Pr(S) / sum_{S' in Ω} Pr(S')))
//! R = sum_{connected S} Pr(S) + sum_{S in Ω} Pr(S) * N_pass(S) / N_sim(S)
//! ```
//!
//! Each ambiguous supervector draws from its own substream keyed by
//! `(seed, BAT index of S)`, and sums are reduced in BAT order, so estimates
//! are bit-identical for any worker count. Crude MCS uses stream 0, which is
//! the stream of the single empty supervector at δ = 0.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bat::{bat_next, classify_into, state_from_index, SupervectorClass, DEFAULT_ENUMERATION_CAP};
use crate::connectivity::Plsa;
use crate::error::{Error, Result};
use crate::graph::{prefix_probability, ArcDistribution, Network, Supervector};
use crate::rng::{substream, RNG_ALGORITHM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mcs,
    BatMcs,
    Exact,
}

/// One simulated stratum of a BAT-MCS run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    /// Supervector as a 0/1 string, a_1 first.
    pub supervector: String,
    /// BAT position of the supervector (its bits read with a_1 least significant).
    pub index: u64,
    pub probability: f64,
    pub n_sim: u64,
    pub n_pass: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub method: Method,
    pub value: f64,
    pub seed: u64,
    pub delta: usize,
    /// Requested simulation budget.
    pub n_sim: u64,
    /// Simulations actually spent.
    pub total_sims: u64,
    pub pruned_connected_mass: f64,
    pub pruned_disconnected_mass: f64,
    pub contributions: Vec<Contribution>,
    pub rng: String,
}

/// Smallest `N_sim` with `Z^2 (1 - R) / (eps^2 R) <= N_sim`.
pub fn required_sample_size(reliability: f64, epsilon: f64, z_alpha: f64) -> Result<u64> {
    if reliability == 0.0 {
        return Err(Error::InvalidArgument(
            "reliability estimate is 0: the bound is undefined (rare-event regime)".into(),
        ));
    }
    if !(reliability > 0.0 && reliability <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "reliability {reliability} outside (0, 1]"
        )));
    }
    if !(epsilon > 0.0 && z_alpha > 0.0) {
        return Err(Error::InvalidArgument("epsilon and z_alpha must be positive".into()));
    }
    let bound = z_alpha * z_alpha * (1.0 - reliability) / (epsilon * epsilon * reliability);
    Ok(bound.ceil() as u64)
}

/// Floor that treats values within rounding noise of an integer as that integer.
fn stable_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

/// Proportional budget split over Ω, floored, with a minimum of one trial each.
pub fn allocate_simulations(omega_probs: &[f64], n_sim: u64) -> Result<Vec<u64>> {
    if n_sim == 0 {
        return Err(Error::InvalidArgument("N_sim must be at least 1".into()));
    }
    if let Some(p) = omega_probs.iter().find(|&&p| p.is_nan() || p <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "supervector probabilities must be positive, got {p}"
        )));
    }
    let total: f64 = omega_probs.iter().sum();
    Ok(omega_probs
        .iter()
        .map(|&p| (stable_floor(n_sim as f64 * p / total) as u64).max(1))
        .collect())
}

/// Fixes the first δ arcs to `prefix` and samples the rest; counts connected completions.
pub fn conditional_mcs<R: Rng + ?Sized>(
    net: &Network,
    dist: &ArcDistribution,
    prefix: &Supervector,
    trials: u64,
    rng: &mut R,
) -> Result<u64> {
    dist.check_network(net)?;
    if prefix.delta() > net.arc_count() {
        return Err(Error::InvalidArgument("supervector longer than the arc count".into()));
    }
    let mut plsa = Plsa::new(net);
    let mut buf = vec![false; net.arc_count()];
    Ok(conditional_into(&mut plsa, dist.probabilities(), prefix.bits(), trials, rng, &mut buf))
}

fn conditional_into<R: Rng + ?Sized>(
    plsa: &mut Plsa<'_>,
    probs: &[f64],
    prefix: &[bool],
    trials: u64,
    rng: &mut R,
    buf: &mut [bool],
) -> u64 {
    let delta = prefix.len();
    buf[..delta].copy_from_slice(prefix);
    let mut pass = 0;
    for _ in 0..trials {
        for (bit, &p) in buf[delta..].iter_mut().zip(&probs[delta..]) {
            *bit = rng.gen::<f64>() < p;
        }
        if plsa.is_connected(buf) {
            pass += 1;
        }
    }
    pass
}

/// Crude Monte Carlo: `N_pass / N_sim` over independent full samples.
pub fn mcs_estimate(net: &Network, dist: &ArcDistribution, n_sim: u64, seed: u64) -> Result<Estimate> {
    dist.check_network(net)?;
    if n_sim == 0 {
        return Err(Error::InvalidArgument("N_sim must be at least 1".into()));
    }
    let mut rng = substream(seed, 0);
    let pass = conditional_mcs(net, dist, &Supervector(Vec::new()), n_sim, &mut rng)?;
    Ok(Estimate {
        method: Method::Mcs,
        value: pass as f64 / n_sim as f64,
        seed,
        delta: 0,
        n_sim,
        total_sims: n_sim,
        pruned_connected_mass: 0.0,
        pruned_disconnected_mass: 0.0,
        contributions: Vec::new(),
        rng: RNG_ALGORITHM.to_string(),
    })
}

/// An ambiguous supervector with its probability and trial allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub index: u64,
    pub supervector: Supervector,
    pub probability: f64,
    pub n_sim: u64,
}

/// Classified supervectors and the trial allocation over Ω, before any sampling.
#[derive(Debug, Clone)]
pub struct BatMcsPlan<'a> {
    net: &'a Network,
    dist: &'a ArcDistribution,
    delta: usize,
    n_sim: u64,
    pub connected_mass: f64,
    pub disconnected_mass: f64,
    pub entries: Vec<PlanEntry>,
}

const CLASSIFY_BLOCK_BITS: usize = 14;

impl<'a> BatMcsPlan<'a> {
    pub fn build(net: &'a Network, dist: &'a ArcDistribution, delta: usize, n_sim: u64) -> Result<Self> {
        Self::build_with_cap(net, dist, delta, n_sim, DEFAULT_ENUMERATION_CAP)
    }

    pub fn build_with_cap(
        net: &'a Network,
        dist: &'a ArcDistribution,
        delta: usize,
        n_sim: u64,
        cap: usize,
    ) -> Result<Self> {
        dist.check_network(net)?;
        let m = net.arc_count();
        if delta > m {
            return Err(Error::InvalidArgument(format!(
                "delta {delta} exceeds the arc count {m}"
            )));
        }
        if delta > cap || delta > 63 {
            return Err(Error::CapExceeded { width: delta, cap });
        }
        if n_sim == 0 {
            return Err(Error::InvalidArgument("N_sim must be at least 1".into()));
        }
        let probs = dist.probabilities();

        // (index, class, Pr) for every supervector, in BAT order.
        let classify_block = |start: u64, len: u64| {
            let mut plsa = Plsa::new(net);
            let mut buf = vec![false; m];
            let mut s = state_from_index(start, delta);
            let mut out = Vec::with_capacity(len as usize);
            for k in 0..len {
                if k > 0 {
                    bat_next(&mut s);
                }
                let class = classify_into(&mut plsa, &s, &mut buf);
                let pr = prefix_probability(probs, &s);
                out.push((start + k, class, pr));
            }
            out
        };
        let classified: Vec<(u64, SupervectorClass, f64)> = if delta <= CLASSIFY_BLOCK_BITS {
            classify_block(0, 1u64 << delta)
        } else {
            let block = 1u64 << CLASSIFY_BLOCK_BITS;
            (0..1u64 << (delta - CLASSIFY_BLOCK_BITS))
                .into_par_iter()
                .map(|b| classify_block(b * block, block))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        };

        let mut connected_mass = 0.0;
        let mut disconnected_mass = 0.0;
        let mut omega = Vec::new();
        for (index, class, pr) in classified {
            match class {
                SupervectorClass::Connected => connected_mass += pr,
                SupervectorClass::Disconnected => disconnected_mass += pr,
                // Zero-probability strata contribute nothing and cannot be sampled.
                SupervectorClass::Ambiguous if pr > 0.0 => omega.push((index, pr)),
                SupervectorClass::Ambiguous => {}
            }
        }
        let omega_probs: Vec<f64> = omega.iter().map(|&(_, p)| p).collect();
        let counts = if omega.is_empty() {
            Vec::new()
        } else {
            allocate_simulations(&omega_probs, n_sim)?
        };
        let entries = omega
            .into_iter()
            .zip(counts)
            .map(|((index, probability), n)| PlanEntry {
                index,
                supervector: Supervector(state_from_index(index, delta)),
                probability,
                n_sim: n,
            })
            .collect();
        Ok(Self {
            net,
            dist,
            delta,
            n_sim,
            connected_mass,
            disconnected_mass,
            entries,
        })
    }

    /// Ambiguous supervectors, in BAT order.
    pub fn omega(&self) -> impl Iterator<Item = &Supervector> {
        self.entries.iter().map(|e| &e.supervector)
    }

    pub fn allocation(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.n_sim).collect()
    }

    /// Samples every ambiguous stratum on its own substream and combines.
    pub fn run(&self, seed: u64) -> Estimate {
        let probs = self.dist.probabilities();
        let m = self.net.arc_count();
        let passes: Vec<u64> = self
            .entries
            .par_iter()
            .map_init(
                || (Plsa::new(self.net), vec![false; m]),
                |(plsa, buf), e| {
                    let mut rng = substream(seed, e.index);
                    conditional_into(plsa, probs, e.supervector.bits(), e.n_sim, &mut rng, buf)
                },
            )
            .collect();
        self.finish(&passes, seed).expect("one pass count per stratum")
    }

    /// Combines externally supplied pass counts (one per Ω entry, BAT order).
    pub fn finish(&self, pass_counts: &[u64], seed: u64) -> Result<Estimate> {
        if pass_counts.len() != self.entries.len() {
            return Err(Error::LengthMismatch {
                expected: self.entries.len(),
                actual: pass_counts.len(),
            });
        }
        let mut ambiguous = 0.0;
        let mut total_sims = 0;
        let mut contributions = Vec::with_capacity(self.entries.len());
        for (e, &pass) in self.entries.iter().zip(pass_counts) {
            if pass > e.n_sim {
                return Err(Error::InvalidArgument(format!(
                    "pass count {pass} exceeds {} trials for supervector {}",
                    e.n_sim,
                    e.supervector.to_bit_string()
                )));
            }
            ambiguous += e.probability * pass as f64 / e.n_sim as f64;
            total_sims += e.n_sim;
            contributions.push(Contribution {
                supervector: e.supervector.to_bit_string(),
                index: e.index,
                probability: e.probability,
                n_sim: e.n_sim,
                n_pass: pass,
            });
        }
        Ok(Estimate {
            method: Method::BatMcs,
            value: (self.connected_mass + ambiguous).clamp(0.0, 1.0),
            seed,
            delta: self.delta,
            n_sim: self.n_sim,
            total_sims,
            pruned_connected_mass: self.connected_mass,
            pruned_disconnected_mass: self.disconnected_mass,
            contributions,
            rng: RNG_ALGORITHM.to_string(),
        })
    }
}

pub fn bat_mcs_estimate(
    net: &Network,
    dist: &ArcDistribution,
    delta: usize,
    n_sim: u64,
    seed: u64,
) -> Result<Estimate> {
    Ok(BatMcsPlan::build(net, dist, delta, n_sim)?.run(seed))
}

/// Summary of repeated estimates in the shape of a run-statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub count: usize,
    /// Number of values exactly equal to 1.
    pub n_1: usize,
    pub avg: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub stdev: f64,
    pub med: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
}

pub fn summarize_runs(values: &[f64]) -> Result<RunStats> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("cannot summarize an empty run".into()));
    }
    let n = values.len();
    let avg = values.iter().sum::<f64>() / n as f64;
    let stdev = if n > 1 {
        (values.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let (min, max) = (sorted[0], sorted[n - 1]);
    Ok(RunStats {
        count: n,
        n_1: values.iter().filter(|&&v| v == 1.0).count(),
        avg,
        stdev,
        med,
        min,
        max,
        range: max - min,
    })
}
