use serde::{Deserialize, Serialize};

/// Mean label of the K nearest training rows (Euclidean); equal distances
/// resolve to the lower training index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl KnnModel {
    pub fn new(k: usize, rows: &[Vec<f64>], labels: &[f64]) -> Self {
        Self {
            k,
            rows: rows.to_vec(),
            labels: labels.to_vec(),
        }
    }

    /// Indices of the neighbors of `x`, nearest first.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        let k = self.k.min(d.len());
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < d.len() {
            d.select_nth_unstable_by(k, order);
            d.truncate(k);
        }
        d.sort_by(order);
        d.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let nb = self.neighbors(x);
        nb.iter().map(|&i| self.labels[i]).sum::<f64>() / nb.len() as f64
    }
}
