//! Path-based layered search (PLSA) from the source to the target.
//!
//! Layer `L_1 = {1}`; layer `L_i` holds the nodes first reached from
//! `L_{i-1}` over working arcs. The search ends with "connected" as soon as
//! the target enters a layer and with "disconnected" when a layer is empty.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Network, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Connected,
    Disconnected,
}

/// Layers visited by one search, node ids 1-based and sorted within a layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlsaTrace {
    pub layers: Vec<Vec<usize>>,
    pub verdict: Verdict,
}

impl PlsaTrace {
    pub fn is_connected(&self) -> bool {
        self.verdict == Verdict::Connected
    }
}

/// Runs the layered search and records every layer.
pub fn plsa_is_connected(net: &Network, state: &StateVector) -> Result<PlsaTrace> {
    check_len(net, state.bits())?;
    let n = net.node_count();
    let target0 = n - 1;
    let mut visited = vec![false; n];
    visited[0] = true;
    let mut layers = vec![vec![1usize]];
    let mut current = vec![0usize];
    loop {
        let mut next = Vec::new();
        for &node in &current {
            for &(nb, arc) in net.incident(node) {
                if state.bits()[arc] && !visited[nb] {
                    visited[nb] = true;
                    next.push(nb);
                }
            }
        }
        let mut layer: Vec<usize> = next.iter().map(|&v| v + 1).collect();
        layer.sort_unstable();
        layers.push(layer);
        if next.is_empty() {
            return Ok(PlsaTrace {
                layers,
                verdict: Verdict::Disconnected,
            });
        }
        if visited[target0] {
            return Ok(PlsaTrace {
                layers,
                verdict: Verdict::Connected,
            });
        }
        current = next;
    }
}

fn check_len(net: &Network, bits: &[bool]) -> Result<()> {
    if bits.len() != net.arc_count() {
        return Err(Error::LengthMismatch {
            expected: net.arc_count(),
            actual: bits.len(),
        });
    }
    Ok(())
}

/// Reusable scratch space for repeated verdict-only searches on one network.
///
/// Not shared between threads; each worker owns its own.
pub struct Plsa<'a> {
    net: &'a Network,
    stamp: Vec<u32>,
    epoch: u32,
    current: Vec<usize>,
    next: Vec<usize>,
}

impl<'a> Plsa<'a> {
    pub fn new(net: &'a Network) -> Self {
        Self {
            net,
            stamp: vec![0; net.node_count()],
            epoch: 0,
            current: Vec::with_capacity(net.node_count()),
            next: Vec::with_capacity(net.node_count()),
        }
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    /// Verdict for a full state vector. Panics if `bits.len() != m`.
    pub fn is_connected(&mut self, bits: &[bool]) -> bool {
        assert_eq!(bits.len(), self.net.arc_count(), "state vector length");
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let target0 = self.net.node_count() - 1;
        self.stamp[0] = epoch;
        self.current.clear();
        self.current.push(0);
        while !self.current.is_empty() {
            self.next.clear();
            for &node in &self.current {
                for &(nb, arc) in self.net.incident(node) {
                    if bits[arc] && self.stamp[nb] != epoch {
                        if nb == target0 {
                            return true;
                        }
                        self.stamp[nb] = epoch;
                        self.next.push(nb);
                    }
                }
            }
            std::mem::swap(&mut self.current, &mut self.next);
        }
        false
    }
}
