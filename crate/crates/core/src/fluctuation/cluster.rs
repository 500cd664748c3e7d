use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::{Atom, LevyTripleEstimate};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub triple: LevyTripleEstimate,
    pub weight: f64,
    pub members: Vec<String>,
}

/// Groups of partition subsequences whose triples agree within `tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub tol: f64,
    /// Cluster weights are equal unless overridden; the data do not
    /// determine them.
    pub weights_provisional: bool,
}

impl ClusterSet {
    pub fn with_weights(mut self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.clusters.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} clusters",
                weights.len(),
                self.clusters.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(
                "cluster weights must be non-negative and sum to 1".into(),
            ));
        }
        for (c, &w) in self.clusters.iter_mut().zip(weights) {
            c.weight = w;
        }
        self.weights_provisional = false;
        Ok(self)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.weight).collect()
    }
}

/// `max(|Δmu1|, |Δsigma1²|, KS distance between normalized atom measures)`.
pub fn triple_distance(a: &LevyTripleEstimate, b: &LevyTripleEstimate) -> f64 {
    (a.mu1 - b.mu1)
        .abs()
        .max((a.sigma1_sq - b.sigma1_sq).abs())
        .max(atom_ks(&a.atoms, &b.atoms))
}

fn atom_ks(a: &[Atom], b: &[Atom]) -> f64 {
    let ta: f64 = a.iter().map(|x| x.w).sum();
    let tb: f64 = b.iter().map(|x| x.w).sum();
    match (ta > 0.0, tb > 0.0) {
        (false, false) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    let mut ys: Vec<f64> = a.iter().chain(b).map(|x| x.y).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let cdf = |atoms: &[Atom], total: f64, y: f64| {
        atoms.iter().filter(|x| x.y <= y).map(|x| x.w).sum::<f64>() / total
    };
    ys.iter()
        .map(|&y| (cdf(a, ta, y) - cdf(b, tb, y)).abs())
        .fold(0.0, f64::max)
}

/// Single-linkage clustering of per-subsequence triples under
/// [`triple_distance`]. Clusters are ordered by their first member and carry
/// equal weights.
pub fn cluster_detect(triples: &[(String, LevyTripleEstimate)], tol: f64) -> Result<ClusterSet> {
    if triples.is_empty() {
        return Err(Error::InvalidArgument("no triples to cluster".into()));
    }
    let n = triples.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if triple_distance(&triples[i].1, &triples[j].1) <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, members)) => members.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    let weight = 1.0 / groups.len() as f64;
    let clusters = groups
        .into_iter()
        .map(|(_, members)| {
            let ts: Vec<&LevyTripleEstimate> = members.iter().map(|&i| &triples[i].1).collect();
            Cluster {
                triple: LevyTripleEstimate::average(&ts),
                weight,
                members: members.iter().map(|&i| triples[i].0.clone()).collect(),
            }
        })
        .collect();
    Ok(ClusterSet {
        clusters,
        tol,
        weights_provisional: true,
    })
}
