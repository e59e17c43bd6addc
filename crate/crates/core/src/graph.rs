//! Network model, state vectors and the plain-text network format.
//!
//! Nodes are numbered `1..=n`; the source is always node 1 and the target
//! node `n`. Arcs are stored in file order, and arc `a_i` of the text format
//! is index `i - 1` everywhere in the API.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

/// Unordered node pair, endpoints stored 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arc {
    pub u: usize,
    pub v: usize,
}

impl Arc {
    fn key(self) -> (usize, usize) {
        (self.u.min(self.v), self.u.max(self.v))
    }
}

/// Undirected simple graph with source node 1 and target node n.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    node_count: usize,
    arcs: Vec<Arc>,
    /// `incidence[node0]` lists `(neighbor0, arc_index)` for every arc at the node.
    incidence: Vec<Vec<(usize, usize)>>,
}

impl Network {
    /// Validates the simple-graph invariants and precomputes incidence lists.
    pub fn new(node_count: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        if node_count < 2 {
            return Err(Error::InvalidNetwork(format!(
                "need at least 2 nodes, got {node_count}"
            )));
        }
        let arcs: Vec<Arc> = arcs.into_iter().map(|(u, v)| Arc { u, v }).collect();
        let mut seen = HashSet::with_capacity(arcs.len());
        for (i, arc) in arcs.iter().enumerate() {
            for end in [arc.u, arc.v] {
                if end < 1 || end > node_count {
                    return Err(Error::InvalidNetwork(format!(
                        "arc {} endpoint {end} out of range 1..={node_count}",
                        i + 1
                    )));
                }
            }
            if arc.u == arc.v {
                return Err(Error::InvalidNetwork(format!(
                    "arc {} is a self-loop on node {}",
                    i + 1,
                    arc.u
                )));
            }
            if !seen.insert(arc.key()) {
                return Err(Error::InvalidNetwork(format!(
                    "arc {} is parallel to an earlier arc joining {} and {}",
                    i + 1,
                    arc.u,
                    arc.v
                )));
            }
        }
        let mut incidence = vec![Vec::new(); node_count];
        for (i, arc) in arcs.iter().enumerate() {
            incidence[arc.u - 1].push((arc.v - 1, i));
            incidence[arc.v - 1].push((arc.u - 1, i));
        }
        Ok(Self {
            node_count,
            arcs,
            incidence,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Always node 1.
    pub fn source(&self) -> usize {
        1
    }

    /// Always node n.
    pub fn target(&self) -> usize {
        self.node_count
    }

    /// Incident `(neighbor, arc)` pairs of a 0-based node, both 0-based.
    pub fn incident(&self, node0: usize) -> &[(usize, usize)] {
        &self.incidence[node0]
    }

    /// Hex SHA-256 of the rendered network; identifies it in reports.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(render_network(self, None).as_bytes()))
    }
}

/// Per-arc working probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArcDistribution(Vec<f64>);

impl ArcDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        for (i, p) in probabilities.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidArgument(format!(
                    "probability of arc {} is {p}, outside [0, 1]",
                    i + 1
                )));
            }
        }
        Ok(Self(probabilities))
    }

    /// Distribution checked against the arc count of `net`.
    pub fn for_network(net: &Network, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != net.arc_count() {
            return Err(Error::LengthMismatch {
                expected: net.arc_count(),
                actual: probabilities.len(),
            });
        }
        Self::new(probabilities)
    }

    pub fn uniform(m: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn check_network(&self, net: &Network) -> Result<()> {
        if self.len() != net.arc_count() {
            return Err(Error::LengthMismatch {
                expected: net.arc_count(),
                actual: self.len(),
            });
        }
        Ok(())
    }
}

/// Full assignment of working (`true`) / failed (`false`) to all m arcs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVector(pub Vec<bool>);

/// Assignment of the first δ arcs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Supervector(pub Vec<bool>);

macro_rules! bit_vector_impls {
    ($t:ident) => {
        impl $t {
            /// Builds from 0/1 integers; any nonzero value counts as working.
            pub fn from_bits(bits: &[u8]) -> Self {
                Self(bits.iter().map(|&b| b != 0).collect())
            }

            pub fn zeros(len: usize) -> Self {
                Self(vec![false; len])
            }

            pub fn ones(len: usize) -> Self {
                Self(vec![true; len])
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn bits(&self) -> &[bool] {
                &self.0
            }

            /// Coordinates rendered as a `0/1` string, a_1 first.
            pub fn to_bit_string(&self) -> String {
                self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
            }
        }
    };
}

bit_vector_impls!(StateVector);
bit_vector_impls!(Supervector);

impl Supervector {
    /// Number of fixed coordinates, δ.
    pub fn delta(&self) -> usize {
        self.0.len()
    }
}

/// Probability of the assignment on the coordinates it covers:
/// the product of `p_i` over working bits and `1 - p_i` over failed ones.
pub fn state_probability(dist: &ArcDistribution, bits: &[bool]) -> Result<f64> {
    if bits.len() > dist.len() {
        return Err(Error::LengthMismatch {
            expected: dist.len(),
            actual: bits.len(),
        });
    }
    Ok(prefix_probability(dist.probabilities(), bits))
}

#[inline]
pub(crate) fn prefix_probability(probs: &[f64], bits: &[bool]) -> f64 {
    bits.iter()
        .zip(probs)
        .map(|(&b, &p)| if b { p } else { 1.0 - p })
        .product()
}

/// Indices (0-based) of the working arcs of `G(X)`.
pub fn subgraph_arcs(net: &Network, state: &StateVector) -> Result<Vec<usize>> {
    if state.len() != net.arc_count() {
        return Err(Error::LengthMismatch {
            expected: net.arc_count(),
            actual: state.len(),
        });
    }
    Ok(state
        .bits()
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect())
}

/// The 4-node, 5-arc bridge: a_1=(1,2), a_2=(1,3), a_3=(2,3), a_4=(2,4), a_5=(3,4).
pub fn bridge_network() -> Network {
    Network::new(4, vec![(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]).expect("bridge is valid")
}

/// Working probabilities 0.9, 0.8, 0.7, 0.6, 0.5 used with the bridge.
pub fn bridge_distribution() -> ArcDistribution {
    ArcDistribution(vec![0.9, 0.8, 0.7, 0.6, 0.5])
}

/// Connected simple graph with exactly `nodes` nodes and `arcs` arcs.
///
/// A uniformly random recursive spanning tree is laid down first, then the
/// remaining arcs are chosen uniformly among absent node pairs. Arcs are
/// returned sorted by `(min endpoint, max endpoint)`, so arcs at the source
/// come first. Deterministic in `seed`.
pub fn generate_benchmark(nodes: usize, arcs: usize, seed: u64) -> Result<Network> {
    if nodes < 2 {
        return Err(Error::InfeasibleSize {
            nodes,
            arcs,
            reason: "need at least 2 nodes",
        });
    }
    let max_arcs = nodes * (nodes - 1) / 2;
    if arcs < nodes - 1 {
        return Err(Error::InfeasibleSize {
            nodes,
            arcs,
            reason: "fewer than n-1 arcs cannot connect the graph",
        });
    }
    if arcs > max_arcs {
        return Err(Error::InfeasibleSize {
            nodes,
            arcs,
            reason: "more than n(n-1)/2 arcs requires parallel arcs",
        });
    }

    let mut rng = substream(seed, 0);
    let mut order: Vec<usize> = (1..=nodes).collect();
    order.shuffle(&mut rng);

    let mut present: HashSet<(usize, usize)> = HashSet::with_capacity(arcs);
    for k in 1..nodes {
        let parent = order[rng.gen_range(0..k)];
        let child = order[k];
        present.insert((parent.min(child), parent.max(child)));
    }

    let extra = arcs - (nodes - 1);
    if extra > 0 {
        if max_arcs <= 4_000_000 {
            let mut candidates: Vec<(usize, usize)> = (1..=nodes)
                .flat_map(|u| (u + 1..=nodes).map(move |v| (u, v)))
                .filter(|pair| !present.contains(pair))
                .collect();
            let (chosen, _) = candidates.partial_shuffle(&mut rng, extra);
            present.extend(chosen.iter().copied());
        } else {
            while present.len() < arcs {
                let u = rng.gen_range(1..=nodes);
                let v = rng.gen_range(1..=nodes);
                if u != v {
                    present.insert((u.min(v), u.max(v)));
                }
            }
        }
    }

    let mut list: Vec<(usize, usize)> = present.into_iter().collect();
    list.sort_unstable();
    Network::new(nodes, list)
}

/// Parsed network file: topology plus optional per-arc default probabilities.
#[derive(Debug, Clone)]
pub struct NetworkFile {
    pub network: Network,
    pub distribution: Option<ArcDistribution>,
}

/// Parses the text format:
///
/// ```text
/// # comment
/// n m source target
/// i u v [p]     (m lines, i = 1..m in order)
/// ```
///
/// Either every arc line carries `p` or none does.
pub fn parse_network_file(text: &str) -> Result<NetworkFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "missing header `n m source target`"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(Error::parse(
            hline,
            format!("header needs 4 fields `n m source target`, found {}", fields.len()),
        ));
    }
    let parse_usize = |line: usize, s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::parse(line, format!("{what} `{s}` is not a non-negative integer")))
    };
    let n = parse_usize(hline, fields[0], "node count")?;
    let m = parse_usize(hline, fields[1], "arc count")?;
    let source = parse_usize(hline, fields[2], "source")?;
    let target = parse_usize(hline, fields[3], "target")?;
    if source != 1 || target != n {
        return Err(Error::InvalidNetwork(format!(
            "source must be 1 and target must be n={n}; got {source} and {target}"
        )));
    }

    let mut arcs = Vec::with_capacity(m);
    let mut probs: Vec<f64> = Vec::with_capacity(m);
    for expected in 1..=m {
        let (line, body) = lines.next().ok_or_else(|| {
            Error::parse(hline, format!("expected {m} arc lines, found {}", expected - 1))
        })?;
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 3 && f.len() != 4 {
            return Err(Error::parse(line, "arc line needs `i u v [p]`"));
        }
        let idx = parse_usize(line, f[0], "arc index")?;
        if idx != expected {
            return Err(Error::parse(
                line,
                format!("arc index {idx} out of order, expected {expected}"),
            ));
        }
        let u = parse_usize(line, f[1], "endpoint")?;
        let v = parse_usize(line, f[2], "endpoint")?;
        arcs.push((u, v));
        if let Some(p) = f.get(3) {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::parse(line, format!("probability `{p}` is not a number")))?;
            if probs.len() != expected - 1 {
                return Err(Error::parse(line, "either all or no arc lines may carry p"));
            }
            probs.push(p);
        } else if !probs.is_empty() {
            return Err(Error::parse(line, "either all or no arc lines may carry p"));
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, format!("unexpected content after {m} arc lines")));
    }

    let network = Network::new(n, arcs)?;
    let distribution = if probs.is_empty() {
        None
    } else {
        Some(ArcDistribution::new(probs)?)
    };
    Ok(NetworkFile {
        network,
        distribution,
    })
}

pub fn load_network(text: &str) -> Result<Network> {
    parse_network_file(text).map(|f| f.network)
}

/// Inverse of [`parse_network_file`].
pub fn render_network(net: &Network, dist: Option<&ArcDistribution>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} 1 {}", net.node_count(), net.arc_count(), net.target());
    for (i, arc) in net.arcs().iter().enumerate() {
        match dist {
            Some(d) => {
                let _ = writeln!(out, "{} {} {} {}", i + 1, arc.u, arc.v, d.probabilities()[i]);
            }
            None => {
                let _ = writeln!(out, "{} {} {}", i + 1, arc.u, arc.v);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BRIDGE: &str = "# bridge\n4 5 1 4\n1 1 2\n2 1 3\n3 2 3\n4 2 4\n5 3 4\n";

    #[test]
    fn loads_bridge_file() {
        let net = load_network(BRIDGE).unwrap();
        assert_eq!(net.node_count(), 4);
        assert_eq!(net.arc_count(), 5);
        assert_eq!(net, bridge_network());
    }

    #[test]
    fn rejects_self_loop() {
        let err = load_network("2 1 1 2\n1 2 2\n").unwrap_err();
        assert!(err.to_string().contains("self-loop"), "{err}");
    }

    #[test]
    fn rejects_parallel_arc() {
        let err = load_network("2 2 1 2\n1 1 2\n2 1 2\n").unwrap_err();
        assert!(err.to_string().contains("parallel"), "{err}");
        let err = load_network("2 2 1 2\n1 1 2\n2 2 1\n").unwrap_err();
        assert!(err.to_string().contains("parallel"), "{err}");
    }

    #[test]
    fn rejects_out_of_range_and_malformed() {
        assert!(matches!(
            load_network("3 1 1 3\n1 1 5\n"),
            Err(Error::InvalidNetwork(_))
        ));
        assert!(matches!(load_network("3 1 1 3\n1 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(load_network("3 1 1 2\n1 1 2\n"), Err(Error::InvalidNetwork(_))));
        assert!(matches!(
            load_network("3 2 1 3\n1 1 2 0.5\n2 2 3\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn reads_default_probabilities() {
        let text = render_network(&bridge_network(), Some(&bridge_distribution()));
        let file = parse_network_file(&text).unwrap();
        assert_eq!(file.distribution.unwrap(), bridge_distribution());
    }

    #[test]
    fn benchmark_sizes() {
        let net = generate_benchmark(39, 170, 1).unwrap();
        assert_eq!((net.node_count(), net.arc_count()), (39, 170));
        assert!(matches!(generate_benchmark(4, 2, 0), Err(Error::InfeasibleSize { .. })));
        assert!(matches!(generate_benchmark(4, 7, 0), Err(Error::InfeasibleSize { .. })));
        assert_eq!(generate_benchmark(4, 6, 0).unwrap().arc_count(), 6);
        assert_eq!(generate_benchmark(10, 20, 5).unwrap(), generate_benchmark(10, 20, 5).unwrap());
    }

    #[test]
    fn bridge_state_probabilities() {
        let d = bridge_distribution();
        let p = |bits: &[u8]| state_probability(&d, Supervector::from_bits(bits).bits()).unwrap();
        assert!((p(&[1, 0]) - 0.18).abs() < 1e-15);
        assert!((p(&[0, 1]) - 0.08).abs() < 1e-15);
        assert!((p(&[1, 1]) - 0.72).abs() < 1e-15);
        assert!((p(&[1, 1, 1, 1, 1]) - 0.1512).abs() < 1e-15);
        assert!(state_probability(&d, &[true; 6]).is_err());
    }

    #[test]
    fn subgraph_of_state() {
        let net = bridge_network();
        let x = StateVector::from_bits(&[1, 1, 1, 0, 0]);
        assert_eq!(subgraph_arcs(&net, &x).unwrap(), vec![0, 1, 2]);
        assert!(subgraph_arcs(&net, &StateVector::zeros(5)).unwrap().is_empty());
        assert_eq!(subgraph_arcs(&net, &StateVector::ones(5)).unwrap().len(), 5);
        assert!(subgraph_arcs(&net, &StateVector::ones(4)).is_err());
    }
}
