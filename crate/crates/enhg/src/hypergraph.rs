//! Elastic net hypergraph construction: incidence from thresholded
//! coefficients, affinity weights, degrees, and the normalized operators
//! `Theta` and `L = I - Theta`.
//!
//! Hyperedge `e_j` is centered on vertex `j`: it contains `v_j` plus every
//! vertex whose reconstruction coefficient for sample `j` exceeds the column
//! threshold, so membership counts differ from column to column. Edge weights
//! sum the affinity `M = |Z^T Z|` over members, degrees follow
//! `d(v_i) = sum_j w(e_j) h(v_i, e_j)` and `delta(e_j) = sum_i h(v_i, e_j)`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::datio::SampleMatrix;
use crate::elasticnet::{self, CoefficientMatrix, Rescale};
use crate::{Error, Result};

/// How the per-column threshold of the incidence rule is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Mean of `|z_ij|` over all `n - 1` off-diagonal entries of column `j`.
    MeanAbsAll,
    /// Mean of `|z_ij|` over the nonzero off-diagonal entries (0 if none).
    MeanAbsNonzero,
    /// A fixed threshold for every column.
    Fixed(f64),
}

/// Raw thresholded incidence, one candidate hyperedge per column of `Z`.
#[derive(Debug, Clone)]
pub struct Incidence {
    n: usize,
    members: Vec<Vec<usize>>,
    thresholds: Vec<f64>,
}

impl Incidence {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Members of candidate hyperedge `j` (sorted, always contains `j`).
    pub fn members(&self, j: usize) -> &[usize] {
        &self.members[j]
    }

    /// Threshold applied to column `j`.
    pub fn threshold(&self, j: usize) -> f64 {
        self.thresholds[j]
    }

    /// True if the column produced no members besides its centroid.
    pub fn is_centroid_only(&self, j: usize) -> bool {
        self.members[j].len() == 1
    }

    /// Dense 0/1 matrix with `h[i, j] = 1` iff vertex `i` is in hyperedge `j`.
    pub fn as_matrix(&self) -> Array2<f64> {
        let mut h = Array2::<f64>::zeros((self.n, self.n));
        for (j, members) in self.members.iter().enumerate() {
            for &i in members {
                h[[i, j]] = 1.0;
            }
        }
        h
    }
}

/// Apply the thresholding rule to every column of `Z`.
///
/// Vertex `i != j` joins hyperedge `e_j` iff `|z_ij| > theta_j` (strict);
/// the centroid `v_j` always belongs.
pub fn incidence_from_coefficients(z: &CoefficientMatrix, rule: ThresholdRule) -> Incidence {
    let n = z.n();
    let za = z.as_array();
    let mut members = Vec::with_capacity(n);
    let mut thresholds = Vec::with_capacity(n);
    for j in 0..n {
        let theta = match rule {
            ThresholdRule::Fixed(t) => t,
            ThresholdRule::MeanAbsAll => {
                let sum: f64 = (0..n).filter(|&i| i != j).map(|i| za[[i, j]].abs()).sum();
                sum / (n - 1) as f64
            }
            ThresholdRule::MeanAbsNonzero => {
                let nonzero: Vec<f64> = (0..n)
                    .filter(|&i| i != j && za[[i, j]] != 0.0)
                    .map(|i| za[[i, j]].abs())
                    .collect();
                if nonzero.is_empty() {
                    0.0
                } else {
                    nonzero.iter().sum::<f64>() / nonzero.len() as f64
                }
            }
        };
        let mut m: Vec<usize> = (0..n)
            .filter(|&i| i == j || za[[i, j]].abs() > theta)
            .collect();
        m.sort_unstable();
        members.push(m);
        thresholds.push(theta);
    }
    Incidence { n, members, thresholds }
}

/// Symmetric nonnegative affinity `M = |Z^T Z|`, i.e.
/// `M(i, j) = |<z_i, z_j>|` over coefficient columns.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    data: Array2<f64>,
}

impl AffinityMatrix {
    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }
}

pub fn affinity(z: &CoefficientMatrix) -> AffinityMatrix {
    let n = z.n();
    let za = z.as_array();
    let mut m = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let dot: f64 = (0..n).map(|k| za[[k, i]] * za[[k, j]]).sum();
            let v = dot.abs();
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    AffinityMatrix { data: m }
}

/// Hyperedge weights `w(e_i) = sum_{v_j in e_i, j != i} M(i, j)`.
///
/// The self term is excluded, so a centroid-only hyperedge weighs zero.
pub fn hyperedge_weights(h: &Incidence, m: &AffinityMatrix) -> Vec<f64> {
    (0..h.n)
        .map(|i| {
            h.members[i]
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| m.get(i, j))
                .sum()
        })
        .collect()
}

/// Vertex and hyperedge degrees of a raw incidence under weights `w`.
pub fn degrees(h: &Incidence, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut dv = vec![0.0; h.n];
    let mut de = vec![0.0; h.n];
    for (j, members) in h.members.iter().enumerate() {
        de[j] = members.len() as f64;
        for &i in members {
            dv[i] += w[j];
        }
    }
    (dv, de)
}

/// A kept hyperedge of the final hypergraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperedge {
    pub centroid: usize,
    /// Sorted distinct vertex ids, always containing the centroid.
    pub members: Vec<usize>,
    pub weight: f64,
    /// Threshold that produced this edge, when it came from coefficients.
    pub theta: Option<f64>,
}

/// Why a candidate hyperedge was not kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Fewer than two members after thresholding.
    TooFewMembers,
    /// Members exist but the affinity weight vanished.
    ZeroWeight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedEdge {
    pub centroid: usize,
    pub reason: DropReason,
}

/// A weighted hypergraph with all degeneracies resolved: every kept edge has
/// at least two members and positive weight, every vertex has positive
/// degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Hyperedge>,
    dropped: Vec<DroppedEdge>,
    dv: Vec<f64>,
    de: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct HypergraphSchema {
    n: usize,
    edges: Vec<Hyperedge>,
    dropped: Vec<DroppedEdge>,
}

impl Hypergraph {
    /// Assemble and validate a hypergraph from explicit edges.
    pub fn from_edges(n: usize, edges: Vec<Hyperedge>) -> Result<Self> {
        Self::from_parts(n, edges, Vec::new())
    }

    fn from_parts(n: usize, edges: Vec<Hyperedge>, dropped: Vec<DroppedEdge>) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument {
                name: "n",
                reason: "hypergraph needs at least one vertex".into(),
            });
        }
        for (idx, e) in edges.iter().enumerate() {
            if e.members.len() < 2 {
                return Err(Error::InvalidHyperedge {
                    index: idx,
                    reason: format!("only {} member(s)", e.members.len()),
                });
            }
            if e.members.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidHyperedge {
                    index: idx,
                    reason: "members must be sorted and distinct".into(),
                });
            }
            if *e.members.last().unwrap() >= n {
                return Err(Error::InvalidHyperedge {
                    index: idx,
                    reason: format!("member out of range (n = {n})"),
                });
            }
            if !e.members.contains(&e.centroid) {
                return Err(Error::InvalidHyperedge {
                    index: idx,
                    reason: format!("centroid {} is not a member", e.centroid),
                });
            }
            if !(e.weight > 0.0) || !e.weight.is_finite() {
                return Err(Error::InvalidHyperedge {
                    index: idx,
                    reason: format!("weight must be positive and finite, got {}", e.weight),
                });
            }
        }
        let mut dv = vec![0.0; n];
        let mut de = Vec::with_capacity(edges.len());
        for e in &edges {
            de.push(e.members.len() as f64);
            for &v in &e.members {
                dv[v] += e.weight;
            }
        }
        let isolated: Vec<usize> = (0..n).filter(|&v| dv[v] == 0.0).collect();
        if !isolated.is_empty() {
            return Err(Error::ZeroVertexDegree { vertices: isolated });
        }
        Ok(Self { n, edges, dropped, dv, de })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn dropped(&self) -> &[DroppedEdge] {
        &self.dropped
    }

    /// Weighted vertex degrees `d(v_i)` over kept edges.
    pub fn vertex_degrees(&self) -> &[f64] {
        &self.dv
    }

    /// Hyperedge degrees `delta(e_j)` (member counts) of kept edges.
    pub fn edge_degrees(&self) -> &[f64] {
        &self.de
    }

    /// Dense 0/1 incidence over kept edges (columns follow `edges()` order).
    pub fn incidence_matrix(&self) -> Array2<f64> {
        let mut h = Array2::<f64>::zeros((self.n, self.edges.len()));
        for (j, e) in self.edges.iter().enumerate() {
            for &i in &e.members {
                h[[i, j]] = 1.0;
            }
        }
        h
    }

    pub fn to_json(&self) -> String {
        let schema = HypergraphSchema {
            n: self.n,
            edges: self.edges.clone(),
            dropped: self.dropped.clone(),
        };
        serde_json::to_string_pretty(&schema).expect("hypergraph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: HypergraphSchema =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument {
                name: "json",
                reason: e.to_string(),
            })?;
        Self::from_parts(schema.n, schema.edges, schema.dropped)
    }
}

/// The normalized operator `Theta = Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2}`.
pub fn theta_matrix(g: &Hypergraph) -> Result<Array2<f64>> {
    let zero: Vec<usize> = (0..g.n).filter(|&v| g.dv[v] <= 0.0).collect();
    if !zero.is_empty() {
        return Err(Error::ZeroVertexDegree { vertices: zero });
    }
    let inv_sqrt: Vec<f64> = g.dv.iter().map(|&d| 1.0 / d.sqrt()).collect();
    let mut theta = Array2::<f64>::zeros((g.n, g.n));
    for (j, e) in g.edges.iter().enumerate() {
        let scale = e.weight / g.de[j];
        for (a, &u) in e.members.iter().enumerate() {
            for &v in &e.members[a..] {
                let contrib = scale * inv_sqrt[u] * inv_sqrt[v];
                theta[[u, v]] += contrib;
                if u != v {
                    theta[[v, u]] += contrib;
                }
            }
        }
    }
    Ok(theta)
}

/// The normalized hypergraph Laplacian `L = I - Theta`.
pub fn laplacian(g: &Hypergraph) -> Result<Array2<f64>> {
    let mut l = theta_matrix(g)?;
    l *= -1.0;
    for i in 0..g.n {
        l[[i, i]] += 1.0;
    }
    Ok(l)
}

/// Assemble the elastic net hypergraph from a solved coefficient matrix:
/// threshold, weight, drop degenerate hyperedges, then repair any vertex the
/// drops isolated by re-keeping its edge with the strongest incoming
/// coefficient as the only other member.
pub fn enhg_from_coefficients(z: &CoefficientMatrix, rule: ThresholdRule) -> Result<Hypergraph> {
    let n = z.n();
    let za = z.as_array();
    let inc = incidence_from_coefficients(z, rule);
    let m = affinity(z);
    let w = hyperedge_weights(&inc, &m);

    let mut kept: Vec<Option<Hyperedge>> = Vec::with_capacity(n);
    let mut drop_reason: Vec<Option<DropReason>> = vec![None; n];
    for j in 0..n {
        if inc.members(j).len() < 2 {
            drop_reason[j] = Some(DropReason::TooFewMembers);
            kept.push(None);
        } else if !(w[j] > 0.0) {
            drop_reason[j] = Some(DropReason::ZeroWeight);
            kept.push(None);
        } else {
            kept.push(Some(Hyperedge {
                centroid: j,
                members: inc.members(j).to_vec(),
                weight: w[j],
                theta: Some(inc.threshold(j)),
            }));
        }
    }

    let mut dv = vec![0.0; n];
    for e in kept.iter().flatten() {
        for &v in &e.members {
            dv[v] += e.weight;
        }
    }
    for i in 0..n {
        if dv[i] > 0.0 {
            continue;
        }
        // strongest incoming coefficient of column i
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            let a = za[[j, i]].abs();
            if a > best_abs {
                best_abs = a;
                best = j;
            }
        }
        if best_abs == 0.0 {
            return Err(Error::IsolatedVertex { vertex: i });
        }
        let weight = m.get(i, best);
        if !(weight > 0.0) {
            return Err(Error::IsolatedVertex { vertex: i });
        }
        let mut members = vec![i, best];
        members.sort_unstable();
        kept[i] = Some(Hyperedge {
            centroid: i,
            members,
            weight,
            theta: Some(inc.threshold(i)),
        });
        drop_reason[i] = None;
        dv[i] += weight;
        dv[best] += weight;
    }

    let edges: Vec<Hyperedge> = kept.into_iter().flatten().collect();
    let dropped: Vec<DroppedEdge> = drop_reason
        .into_iter()
        .enumerate()
        .filter_map(|(centroid, r)| r.map(|reason| DroppedEdge { centroid, reason }))
        .collect();
    Hypergraph::from_parts(n, edges, dropped)
}

/// Execute the full construction on a sample matrix with the model weights
/// `(lambda, gamma)`: normalize, solve the robust matrix elastic net,
/// threshold, weight, and repair.
pub fn build_enhg(
    x: &SampleMatrix,
    lambda: f64,
    gamma: f64,
    rule: ThresholdRule,
) -> Result<Hypergraph> {
    let (l1, l2) = elasticnet::paper_param_mapping(lambda, gamma)?;
    build_enhg_with(x, l1, l2, rule)
}

/// As [`build_enhg`] with the solver weights given directly.
pub fn build_enhg_with(x: &SampleMatrix, l1: f64, l2: f64, rule: ThresholdRule) -> Result<Hypergraph> {
    let normalized = crate::datio::normalize_columns(x)?;
    let (z, _s) = elasticnet::robust_matrix_elastic_net_with(&normalized, l1, l2, Rescale::Naive)?;
    enhg_from_coefficients(&z, rule)
}
