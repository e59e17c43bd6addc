//! Binary-addition-tree (BAT) enumeration and exact reliability.
//!
//! BAT visits all `2^w` binary vectors of width `w` without duplicates by
//! repeatedly applying one rule: find the first failed coordinate, set it to
//! working and reset every coordinate before it to failed. Starting from all
//! zeros, the k-th vector is the binary encoding of k with `a_1` as the least
//! significant bit.

mod factoring;

pub use factoring::factoring_reliability;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::connectivity::Plsa;
use crate::error::{Error, Result};
use crate::graph::{prefix_probability, ArcDistribution, Network, StateVector, Supervector};

/// Default hard cap on enumeration width.
pub const DEFAULT_ENUMERATION_CAP: usize = 30;

/// Advances `bits` to its BAT successor in place.
///
/// Returns `false` (leaving `bits` all ones) when no failed coordinate is left.
#[inline]
pub fn bat_next(bits: &mut [bool]) -> bool {
    match bits.iter().position(|&b| !b) {
        Some(first_failed) => {
            bits[..first_failed].iter_mut().for_each(|b| *b = false);
            bits[first_failed] = true;
            true
        }
        None => false,
    }
}

/// The vector BAT emits at position `index` (0-based) for the given width.
pub fn state_from_index(index: u64, width: usize) -> Vec<bool> {
    (0..width).map(|i| i < 64 && (index >> i) & 1 == 1).collect()
}

/// Inverse of [`state_from_index`] for widths up to 64.
pub fn index_of(bits: &[bool]) -> u64 {
    bits.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0u64, |acc, (i, _)| acc | (1u64 << i))
}

/// Streaming BAT cursor. Width 0 yields one empty vector.
#[derive(Debug, Clone)]
pub struct BatIter {
    state: Vec<bool>,
    started: bool,
    done: bool,
}

impl BatIter {
    pub fn new(width: usize) -> Self {
        Self {
            state: vec![false; width],
            started: false,
            done: false,
        }
    }

    /// Next vector without allocating; `None` once exhausted.
    pub fn advance(&mut self) -> Option<&[bool]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
        } else if !bat_next(&mut self.state) {
            self.done = true;
            return None;
        }
        Some(&self.state)
    }
}

impl Iterator for BatIter {
    type Item = Vec<bool>;

    fn next(&mut self) -> Option<Vec<bool>> {
        self.advance().map(<[bool]>::to_vec)
    }
}

/// All `2^width` vectors in BAT order, refusing widths above `cap`.
pub fn enumerate_states(width: usize, cap: usize) -> Result<BatIter> {
    if width == 0 {
        return Err(Error::InvalidArgument("enumeration width must be at least 1".into()));
    }
    if width > cap || width > 63 {
        return Err(Error::CapExceeded { width, cap });
    }
    Ok(BatIter::new(width))
}

/// `S` padded with failed coordinates up to length `m`.
pub fn zero_extension(s: &Supervector, m: usize) -> Result<StateVector> {
    extend(s, m, false)
}

/// `S` padded with working coordinates up to length `m`.
pub fn one_extension(s: &Supervector, m: usize) -> Result<StateVector> {
    extend(s, m, true)
}

fn extend(s: &Supervector, m: usize, fill: bool) -> Result<StateVector> {
    if s.delta() > m {
        return Err(Error::InvalidArgument(format!(
            "supervector has {} coordinates but the network only {m} arcs",
            s.delta()
        )));
    }
    let mut bits = s.bits().to_vec();
    bits.resize(m, fill);
    Ok(StateVector(bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupervectorClass {
    /// Zero-extension connected: every completion is connected.
    Connected,
    /// One-extension disconnected: every completion is disconnected.
    Disconnected,
    /// Needs simulation.
    Ambiguous,
}

pub fn classify_supervector(net: &Network, s: &Supervector) -> Result<SupervectorClass> {
    let m = net.arc_count();
    if s.delta() > m {
        return Err(Error::InvalidArgument(format!(
            "supervector has {} coordinates but the network only {m} arcs",
            s.delta()
        )));
    }
    let mut plsa = Plsa::new(net);
    let mut buf = vec![false; m];
    Ok(classify_into(&mut plsa, s.bits(), &mut buf))
}

/// Classification reusing caller-owned scratch; `buf.len()` must equal m.
pub(crate) fn classify_into(plsa: &mut Plsa<'_>, prefix: &[bool], buf: &mut [bool]) -> SupervectorClass {
    let delta = prefix.len();
    buf[..delta].copy_from_slice(prefix);
    buf[delta..].iter_mut().for_each(|b| *b = false);
    if plsa.is_connected(buf) {
        return SupervectorClass::Connected;
    }
    buf[delta..].iter_mut().for_each(|b| *b = true);
    if !plsa.is_connected(buf) {
        return SupervectorClass::Disconnected;
    }
    SupervectorClass::Ambiguous
}

const CHUNK_BITS: usize = 16;

/// Exact reliability by BAT enumeration of all `2^m` states, default cap.
pub fn exact_reliability(net: &Network, dist: &ArcDistribution) -> Result<f64> {
    exact_reliability_with_cap(net, dist, DEFAULT_ENUMERATION_CAP)
}

/// Exact reliability by BAT enumeration of all `2^m` states.
///
/// The index range is cut into fixed blocks of `2^16` states; block sums are
/// reduced in index order, so the result is bit-identical for any number of
/// worker threads.
pub fn exact_reliability_with_cap(net: &Network, dist: &ArcDistribution, cap: usize) -> Result<f64> {
    dist.check_network(net)?;
    let m = net.arc_count();
    if m > cap || m > 63 {
        return Err(Error::CapExceeded { width: m, cap });
    }
    let probs = dist.probabilities();
    let block_sum = |start: u64, len: u64| -> f64 {
        let mut plsa = Plsa::new(net);
        let mut bits = state_from_index(start, m);
        let mut sum = 0.0;
        for k in 0..len {
            if k > 0 {
                bat_next(&mut bits);
            }
            if plsa.is_connected(&bits) {
                sum += prefix_probability(probs, &bits);
            }
        }
        sum
    };

    if m <= CHUNK_BITS {
        return Ok(block_sum(0, 1u64 << m).min(1.0));
    }
    let block = 1u64 << CHUNK_BITS;
    let blocks = 1u64 << (m - CHUNK_BITS);
    let partial: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| block_sum(b * block, block))
        .collect();
    Ok(partial.iter().sum::<f64>().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bridge_distribution, bridge_network};

    fn sv(bits: &[u8]) -> Supervector {
        Supervector::from_bits(bits)
    }

    #[test]
    fn successor_rule() {
        let mut x = vec![false, false];
        assert!(bat_next(&mut x));
        assert_eq!(x, [true, false]);
        assert!(bat_next(&mut x));
        assert_eq!(x, [false, true]);
        assert!(bat_next(&mut x));
        assert_eq!(x, [true, true]);
        assert!(!bat_next(&mut x));
    }

    #[test]
    fn enumerates_small_widths() {
        let two: Vec<Vec<bool>> = enumerate_states(2, 30).unwrap().collect();
        assert_eq!(
            two,
            vec![
                vec![false, false],
                vec![true, false],
                vec![false, true],
                vec![true, true]
            ]
        );
        let one: Vec<Vec<bool>> = enumerate_states(1, 30).unwrap().collect();
        assert_eq!(one, vec![vec![false], vec![true]]);
        for (k, v) in enumerate_states(5, 30).unwrap().enumerate() {
            assert_eq!(index_of(&v), k as u64);
        }
        assert_eq!(enumerate_states(5, 30).unwrap().count(), 32);
        assert!(matches!(enumerate_states(31, 30), Err(Error::CapExceeded { .. })));
        assert_eq!(BatIter::new(0).count(), 1);
    }

    #[test]
    fn extensions() {
        assert_eq!(zero_extension(&sv(&[1, 0]), 5).unwrap(), StateVector::from_bits(&[1, 0, 0, 0, 0]));
        assert_eq!(one_extension(&sv(&[1, 0]), 5).unwrap(), StateVector::from_bits(&[1, 0, 1, 1, 1]));
        assert_eq!(one_extension(&sv(&[0, 0]), 5).unwrap(), StateVector::from_bits(&[0, 0, 1, 1, 1]));
        let full = sv(&[1, 0, 1, 1, 0]);
        assert_eq!(zero_extension(&full, 5).unwrap().0, full.0);
        assert_eq!(one_extension(&full, 5).unwrap().0, full.0);
        assert!(zero_extension(&full, 4).is_err());
    }

    #[test]
    fn bridge_classification() {
        let net = bridge_network();
        assert_eq!(classify_supervector(&net, &sv(&[0, 0])).unwrap(), SupervectorClass::Disconnected);
        assert_eq!(classify_supervector(&net, &sv(&[1, 0])).unwrap(), SupervectorClass::Ambiguous);
        assert_eq!(classify_supervector(&net, &sv(&[0, 1])).unwrap(), SupervectorClass::Ambiguous);
        assert_eq!(classify_supervector(&net, &sv(&[1, 1])).unwrap(), SupervectorClass::Ambiguous);
        assert_eq!(
            classify_supervector(&net, &sv(&[1, 1, 1, 1, 1])).unwrap(),
            SupervectorClass::Connected
        );
    }

    #[test]
    fn bridge_exact() {
        let r = exact_reliability(&bridge_network(), &bridge_distribution()).unwrap();
        // factoring on a_3 by hand
        let by_hand = 0.7 * (1.0 - 0.1 * 0.2) * (1.0 - 0.4 * 0.5)
            + 0.3 * (1.0 - (1.0 - 0.9 * 0.6) * (1.0 - 0.8 * 0.5));
        assert!((r - by_hand).abs() < 1e-12);
        assert!((r - 0.766).abs() < 1e-12);
    }

    #[test]
    fn exact_extremes() {
        let net = bridge_network();
        let ones = ArcDistribution::uniform(5, 1.0).unwrap();
        let zeros = ArcDistribution::uniform(5, 0.0).unwrap();
        assert_eq!(exact_reliability(&net, &ones).unwrap(), 1.0);
        assert_eq!(exact_reliability(&net, &zeros).unwrap(), 0.0);
    }

    #[test]
    fn exact_refuses_above_cap() {
        let net = crate::graph::generate_benchmark(20, 40, 3).unwrap();
        let d = ArcDistribution::uniform(40, 0.5).unwrap();
        assert!(matches!(exact_reliability(&net, &d), Err(Error::CapExceeded { width: 40, cap: 30 })));
    }

    #[test]
    fn blocked_enumeration_matches_factoring() {
        let net = crate::graph::generate_benchmark(9, 18, 11).unwrap();
        let probs: Vec<f64> = (0..18).map(|i| 0.3 + 0.035 * i as f64).collect();
        let d = ArcDistribution::new(probs).unwrap();
        let a = exact_reliability(&net, &d).unwrap();
        let b = factoring_reliability(&net, &d).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}
