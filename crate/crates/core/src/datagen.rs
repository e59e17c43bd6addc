//! Labeled reliability datasets.
//!
//! Each row is a vector of per-arc working probabilities drawn uniformly and
//! independently from a reliability regime, labeled with the network
//! reliability under that vector. Row `j` owns substream `(seed, j)`: the
//! features are drawn from it first, then a label seed, so a dataset of size
//! `a` is always a prefix of the dataset of size `b > a` with the same seed.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bat::{factoring_reliability, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::estimators::{bat_mcs_estimate, mcs_estimate};
use crate::graph::{ArcDistribution, Network};
use crate::rng::{substream, FOLD_STREAM, RNG_ALGORITHM, SPLIT_STREAM};

/// Interval the per-arc reliabilities are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub low: f64,
    pub high: f64,
}

impl Regime {
    pub const FULL: Regime = Regime { low: 0.0, high: 1.0 };
    pub const HIGH: Regime = Regime { low: 0.9, high: 1.0 };
    pub const ULTRA: Regime = Regime { low: 0.99, high: 1.0 };

    /// `low == high` is accepted and yields constant features.
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0 <= low && low <= high && high <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "regime [{low}, {high}] must satisfy 0 <= low <= high <= 1"
            )));
        }
        Ok(Self { low, high })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::FULL),
            "high" | "high-rel" => Ok(Self::HIGH),
            "ultra" => Ok(Self::ULTRA),
            other => {
                let (lo, hi) = other.split_once(':').ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "regime `{other}`: expected full, high, ultra or lo:hi"
                    ))
                })?;
                let parse = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("regime bound `{v}` is not a number")))
                };
                Self::new(parse(lo)?, parse(hi)?)
            }
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.low, self.high)
    }
}

/// How rows are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Labeler {
    /// Exact reliability (arc factoring); requires m under the enumeration cap.
    Exact,
    BatMcs { delta: usize, n_sim: u64 },
    Mcs { n_sim: u64 },
}

impl Labeler {
    pub fn check_feasible(&self, net: &Network) -> Result<()> {
        let m = net.arc_count();
        match *self {
            Labeler::Exact if m > DEFAULT_ENUMERATION_CAP => Err(Error::CapExceeded {
                width: m,
                cap: DEFAULT_ENUMERATION_CAP,
            }),
            Labeler::BatMcs { delta, .. } if delta > m => Err(Error::InvalidArgument(format!(
                "labeler delta {delta} exceeds the arc count {m}"
            ))),
            Labeler::BatMcs { delta, .. } if delta > DEFAULT_ENUMERATION_CAP => Err(Error::CapExceeded {
                width: delta,
                cap: DEFAULT_ENUMERATION_CAP,
            }),
            Labeler::BatMcs { n_sim: 0, .. } | Labeler::Mcs { n_sim: 0 } => {
                Err(Error::InvalidArgument("labeler N_sim must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self, net: &Network, dist: &ArcDistribution, seed: u64) -> Result<f64> {
        match *self {
            Labeler::Exact => factoring_reliability(net, dist),
            Labeler::BatMcs { delta, n_sim } => Ok(bat_mcs_estimate(net, dist, delta, n_sim, seed)?.value),
            Labeler::Mcs { n_sim } => Ok(mcs_estimate(net, dist, n_sim, seed)?.value),
        }
    }
}

impl FromStr for Labeler {
    type Err = Error;

    /// `exact`, `mcs:N` or `bat-mcs:DELTA:N`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::InvalidArgument(format!("labeler field `{v}` is not an integer")))
        };
        match parts.as_slice() {
            ["exact"] => Ok(Labeler::Exact),
            ["mcs", n] => Ok(Labeler::Mcs { n_sim: num(n)? }),
            ["bat-mcs" | "batmcs", d, n] => Ok(Labeler::BatMcs {
                delta: num(d)? as usize,
                n_sim: num(n)?,
            }),
            _ => Err(Error::InvalidArgument(format!(
                "labeler `{s}`: expected exact, mcs:N or bat-mcs:DELTA:N"
            ))),
        }
    }
}

/// Sidecar record describing how a dataset was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub network_id: String,
    pub network_sha256: String,
    pub node_count: usize,
    pub arc_count: usize,
    pub regime: Regime,
    pub labeler: Option<Labeler>,
    pub seed: u64,
    pub size: usize,
    pub generator_version: String,
    pub rng: String,
}

impl DatasetMeta {
    fn unknown(arc_count: usize, size: usize) -> Self {
        Self {
            network_id: String::new(),
            network_sha256: String::new(),
            node_count: 0,
            arc_count,
            regime: Regime::FULL,
            labeler: None,
            seed: 0,
            size,
            generator_version: String::new(),
            rng: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub features: Vec<f64>,
    pub label: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Row>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.meta.arc_count
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.label).collect()
    }
}

/// `m` independent uniform draws from `[low, high]`.
pub fn sample_arc_reliabilities<R: Rng + ?Sized>(m: usize, regime: Regime, rng: &mut R) -> Vec<f64> {
    let width = regime.high - regime.low;
    (0..m)
        .map(|_| (regime.low + width * rng.gen::<f64>()).min(regime.high))
        .collect()
}

/// Generates `size` rows; row order is row-index order for any worker count.
pub fn build_dataset(
    net: &Network,
    network_id: &str,
    regime: Regime,
    size: usize,
    labeler: Labeler,
    seed: u64,
) -> Result<Dataset> {
    labeler.check_feasible(net)?;
    let m = net.arc_count();
    let rows = (0..size as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = substream(seed, j);
            let features = sample_arc_reliabilities(m, regime, &mut rng);
            let label_seed = rng.next_u64();
            let dist = ArcDistribution::new(features)?;
            let label = labeler.label(net, &dist, label_seed)?;
            Ok(Row {
                features: dist.probabilities().to_vec(),
                label,
            })
        })
        .collect::<Result<Vec<Row>>>()?;
    Ok(Dataset {
        rows,
        meta: DatasetMeta {
            network_id: network_id.to_string(),
            network_sha256: net.fingerprint(),
            node_count: net.node_count(),
            arc_count: m,
            regime,
            labeler: Some(labeler),
            seed,
            size,
            generator_version: concat!("relnet ", env!("CARGO_PKG_VERSION")).to_string(),
            rng: RNG_ALGORITHM.to_string(),
        },
    })
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

pub fn csv_header(m: usize) -> String {
    let mut h: Vec<String> = (1..=m).map(|i| format!("p_{i}")).collect();
    h.push("reliability".into());
    h.join(",")
}

/// Values use the shortest representation that parses back to the same f64.
pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::with_capacity(ds.len() * (ds.feature_count() + 1) * 20);
    out.push_str(&csv_header(ds.feature_count()));
    out.push('\n');
    for row in &ds.rows {
        for x in &row.features {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{}", row.label);
    }
    out
}

/// Parses CSV content; `meta` is taken as-is when given.
pub fn from_csv_str(text: &str, meta: Option<DatasetMeta>) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Dataset("missing header row".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let m = cols.len().checked_sub(1).filter(|&m| m > 0).ok_or_else(|| {
        Error::Dataset("header needs at least one feature column and `reliability`".into())
    })?;
    if header.trim() != csv_header(m) {
        return Err(Error::Dataset(format!(
            "malformed header: expected `p_1,...,p_{m},reliability`"
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != m + 1 {
            return Err(Error::Dataset(format!(
                "ragged row at line {}: {} fields, expected {}",
                i + 1,
                fields.len(),
                m + 1
            )));
        }
        let mut values = Vec::with_capacity(m + 1);
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::Dataset(format!("line {}: `{f}` is not a number", i + 1))
            })?;
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Dataset(format!(
                    "line {}: value {v} outside [0, 1]",
                    i + 1
                )));
            }
            values.push(v);
        }
        let label = values.pop().expect("m + 1 values");
        rows.push(Row {
            features: values,
            label,
        });
    }
    let meta = match meta {
        Some(meta) => {
            if meta.arc_count != m || meta.size != rows.len() {
                return Err(Error::Dataset(format!(
                    "sidecar describes {} rows of {} features, file has {} rows of {m}",
                    meta.size,
                    meta.arc_count,
                    rows.len()
                )));
            }
            meta
        }
        None => DatasetMeta::unknown(m, rows.len()),
    };
    Ok(Dataset { rows, meta })
}

/// `dataset.csv` → `dataset.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(ds))?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&ds.meta)? + "\n")?;
    Ok(())
}

/// Reads a dataset and, when present, its sidecar.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(side)?)?)
    } else {
        None
    };
    from_csv_str(&text, meta)
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

pub const TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_FOLDS: usize = 5;

/// Train/test partition plus k folds over the training rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub folds: Vec<Vec<usize>>,
}

/// Test set = first `ceil(0.2 n)` entries of a seeded shuffle of `0..n`.
pub fn split_indices(n: usize, seed: u64, k: usize) -> Result<Split> {
    if n == 0 {
        return Err(Error::Dataset("cannot split an empty dataset".into()));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut substream(seed, SPLIT_STREAM));
    let n_test = ((n as f64) * TEST_FRACTION).ceil() as usize;
    let test = perm[..n_test].to_vec();
    let train = perm[n_test..].to_vec();
    let folds = kfold(&train, k, seed)?;
    Ok(Split { train, test, folds })
}

pub fn split_dataset(ds: &Dataset, seed: u64, k: usize) -> Result<Split> {
    split_indices(ds.len(), seed, k)
}

/// Seeded shuffle of `train` cut into `k` blocks; the first `len % k` blocks
/// get one extra row.
pub fn kfold(train: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > train.len() {
        return Err(Error::Dataset(format!(
            "cannot make {k} folds from {} training rows",
            train.len()
        )));
    }
    let mut shuffled = train.to_vec();
    shuffled.shuffle(&mut substream(seed, FOLD_STREAM));
    let (base, extra) = (shuffled.len() / k, shuffled.len() % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(shuffled[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::bridge_network;

    #[test]
    fn degenerate_and_ultra_regimes() {
        let mut rng = substream(0, 0);
        let one = Regime::new(1.0, 1.0).unwrap();
        assert!(sample_arc_reliabilities(7, one, &mut rng).iter().all(|&x| x == 1.0));
        for _ in 0..100 {
            let v = sample_arc_reliabilities(5, Regime::ULTRA, &mut rng);
            assert!(v.iter().all(|&x| (0.99..=1.0).contains(&x)));
        }
        assert!(Regime::new(0.5, 0.2).is_err());
        assert_eq!("ultra".parse::<Regime>().unwrap(), Regime::ULTRA);
        assert_eq!("0.2:0.4".parse::<Regime>().unwrap(), Regime { low: 0.2, high: 0.4 });
        assert!("0.2-0.4".parse::<Regime>().is_err());
    }

    #[test]
    fn labeler_syntax() {
        assert_eq!("exact".parse::<Labeler>().unwrap(), Labeler::Exact);
        assert_eq!("mcs:100".parse::<Labeler>().unwrap(), Labeler::Mcs { n_sim: 100 });
        assert_eq!(
            "bat-mcs:3:1000".parse::<Labeler>().unwrap(),
            Labeler::BatMcs { delta: 3, n_sim: 1000 }
        );
        assert!("bat-mcs:3".parse::<Labeler>().is_err());
    }

    #[test]
    fn empty_dataset_has_meta() {
        let ds = build_dataset(&bridge_network(), "bridge", Regime::FULL, 0, Labeler::Exact, 1).unwrap();
        assert!(ds.is_empty());
        assert_eq!(ds.meta.arc_count, 5);
        assert_eq!(to_csv_string(&ds), "p_1,p_2,p_3,p_4,p_5,reliability\n");
    }

    #[test]
    fn infeasible_labeler() {
        let big = crate::graph::generate_benchmark(20, 35, 0).unwrap();
        assert!(build_dataset(&big, "g", Regime::FULL, 3, Labeler::Exact, 0).is_err());
        let lab = Labeler::BatMcs { delta: 6, n_sim: 10 };
        assert!(build_dataset(&bridge_network(), "b", Regime::FULL, 3, lab, 0).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let lab = Labeler::Mcs { n_sim: 50 };
        let ds = build_dataset(&bridge_network(), "bridge", Regime::FULL, 20, lab, 4).unwrap();
        let text = to_csv_string(&ds);
        let back = from_csv_str(&text, Some(ds.meta.clone())).unwrap();
        assert_eq!(back, ds);

        let ragged = "p_1,p_2,reliability\n0.1,0.2,0.3,0.4\n";
        assert!(from_csv_str(ragged, None).unwrap_err().to_string().contains("ragged"));
        let range = "p_1,reliability\n0.5,1.5\n";
        assert!(from_csv_str(range, None).unwrap_err().to_string().contains("outside"));
        let header = "x_1,reliability\n0.5,0.5\n";
        assert!(from_csv_str(header, None).unwrap_err().to_string().contains("header"));
    }

    #[test]
    fn split_shapes() {
        let s = split_indices(10, 3, 4).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        let folds = kfold(&(0..10).collect::<Vec<_>>(), 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.len() == 2));
        assert_eq!(split_indices(10, 3, 4).unwrap(), s);
        assert!(kfold(&[1, 2, 3], 5, 0).is_err());
        assert!(split_indices(0, 0, 5).is_err());
    }
}
