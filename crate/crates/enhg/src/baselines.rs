//! Comparison graph constructions: the Gaussian-kernel pairwise graph and
//! the K-nearest-neighbor hypergraph. Both come back as [`Hypergraph`]
//! values, so the learn operations run on them unchanged.

use crate::datio::SampleMatrix;
use crate::hypergraph::{Hyperedge, Hypergraph};
use crate::{Error, Result};

/// Gaussian kernel bandwidth selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Median of the pairwise Euclidean distances.
    MedianHeuristic,
    Fixed(f64),
}

fn pairwise_sq_distances(x: &SampleMatrix) -> Vec<Vec<f64>> {
    let n = x.n_samples();
    let mut d2 = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = x
                .column(i)
                .iter()
                .zip(x.column(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d2[i][j] = d;
            d2[j][i] = d;
        }
    }
    d2
}

fn resolve_sigma(bandwidth: Bandwidth, d2: &[Vec<f64>]) -> Result<f64> {
    let sigma = match bandwidth {
        Bandwidth::Fixed(s) => s,
        Bandwidth::MedianHeuristic => {
            let n = d2.len();
            let mut dists: Vec<f64> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| d2[i][j].sqrt())
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mid = dists.len() / 2;
            if dists.len() % 2 == 1 {
                dists[mid]
            } else {
                0.5 * (dists[mid - 1] + dists[mid])
            }
        }
    };
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument {
            name: "bandwidth",
            reason: format!("kernel bandwidth must be positive, got {sigma}"),
        });
    }
    Ok(sigma)
}

/// Complete pairwise graph: one 2-member hyperedge per sample pair, weighted
/// by `exp(-||x_i - x_j||^2 / (2 sigma^2))`.
pub fn gaussian_graph(x: &SampleMatrix, bandwidth: Bandwidth) -> Result<Hypergraph> {
    let n = x.n_samples();
    let d2 = pairwise_sq_distances(x);
    let sigma = resolve_sigma(bandwidth, &d2)?;
    let denom = 2.0 * sigma * sigma;
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push(Hyperedge {
                centroid: i,
                members: vec![i, j],
                weight: (-d2[i][j] / denom).exp(),
                theta: None,
            });
        }
    }
    Hypergraph::from_edges(n, edges)
}

/// K-nearest-neighbor hypergraph: `e_i` joins sample `i` with its `k`
/// Euclidean-nearest neighbors (distance ties broken by lowest index);
/// weights sum the Gaussian kernel over the members under the
/// median-heuristic bandwidth.
pub fn knn_hypergraph(x: &SampleMatrix, k: usize) -> Result<Hypergraph> {
    let n = x.n_samples();
    if k < 1 || k >= n {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: format!("need 1 <= K < n = {n}, got {k}"),
        });
    }
    let d2 = pairwise_sq_distances(x);
    let sigma = resolve_sigma(Bandwidth::MedianHeuristic, &d2)?;
    let denom = 2.0 * sigma * sigma;
    let mut edges = Vec::with_capacity(n);
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            d2[i][a]
                .partial_cmp(&d2[i][b])
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut members: Vec<usize> = order[..k].to_vec();
        let weight: f64 = members.iter().map(|&j| (-d2[i][j] / denom).exp()).sum();
        members.push(i);
        members.sort_unstable();
        edges.push(Hyperedge { centroid: i, members, weight, theta: None });
    }
    Hypergraph::from_edges(n, edges)
}
