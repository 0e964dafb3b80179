//! Learning on a built hypergraph: spectral clustering and semi-supervised
//! label propagation.
//!
//! Clustering embeds vertices with the eigenvectors of the `k` smallest
//! Laplacian eigenvalues and runs k-means on the embedding rows; sample `i`
//! takes the cluster of row `i`. Propagation solves the closed form
//! `F = (I - alpha * Theta)^{-1} Y` (the system is positive definite for
//! `alpha` in (0, 1) because `spec(Theta)` lies in `[-1, 1]`) and labels each
//! sample by the row argmax of `F`.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datio::LabelVector;
use crate::hypergraph::{self, Hypergraph};
use crate::linalg;
use crate::{Error, Result};

/// Rows of `vectors` embed the vertices; eigenvalues come back ascending.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    /// `n x k` matrix whose columns are eigenvectors of the Laplacian.
    pub vectors: Array2<f64>,
    /// The matching eigenvalues, ascending.
    pub eigenvalues: Array1<f64>,
}

/// Result of hypergraph spectral clustering.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    /// Cluster id per sample, each in `[0, k)`.
    pub assignments: Vec<usize>,
    pub embedding: SpectralEmbedding,
    /// k-means objective of the winning restart.
    pub inertia: f64,
}

/// Initial labels `Y` (one-hot rows, all-zero when unknown).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    data: Array2<f64>,
}

impl LabelMatrix {
    /// Build `Y` from the known entries of a label vector.
    pub fn from_labels(labels: &LabelVector, class_count: usize) -> Result<Self> {
        let c = class_count.max(labels.class_count());
        if c == 0 {
            return Err(Error::NoLabeledSamples);
        }
        let mut y = Array2::<f64>::zeros((labels.len(), c));
        for i in 0..labels.len() {
            if labels.mask()[i] {
                y[[i, labels.labels()[i]]] = 1.0;
            }
        }
        Ok(Self { data: y })
    }

    pub fn new(data: Array2<f64>) -> Result<Self> {
        for (i, row) in data.rows().into_iter().enumerate() {
            let mut ones = 0;
            for &v in row.iter() {
                if v == 1.0 {
                    ones += 1;
                } else if v != 0.0 {
                    return Err(Error::InvalidArgument {
                        name: "labels",
                        reason: format!("row {i} holds {v}; entries must be 0 or 1"),
                    });
                }
            }
            if ones > 1 {
                return Err(Error::InvalidArgument {
                    name: "labels",
                    reason: format!("row {i} has {ones} ones; at most one class per sample"),
                });
            }
        }
        Ok(Self { data })
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn labeled_count(&self) -> usize {
        self.data
            .rows()
            .into_iter()
            .filter(|r| r.iter().any(|&v| v != 0.0))
            .count()
    }
}

/// Eigenvectors of the `k` smallest eigenvalues of a symmetric matrix.
///
/// Deterministic sign convention: each eigenvector's largest-magnitude entry
/// is positive, ties resolved toward the lowest index.
pub fn spectral_embedding(l: &Array2<f64>, k: usize) -> Result<SpectralEmbedding> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(Error::InvalidArgument {
            name: "laplacian",
            reason: format!("must be square, got {:?}", l.dim()),
        });
    }
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((l[[i, j]] - l[[j, i]]).abs());
        }
    }
    if max_asym > 1e-10 {
        return Err(Error::NotSymmetric { max_asymmetry: max_asym });
    }
    if k < 1 || k > n {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: format!("need 1 <= k <= n = {n}, got {k}"),
        });
    }
    let (vals, vecs) = linalg::sym_eigen(l);
    let mut vectors = Array2::<f64>::zeros((n, k));
    for c in 0..k {
        let col = vecs.column(c);
        let mut lead = 0usize;
        let mut lead_abs = -1.0f64;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > lead_abs {
                lead_abs = v.abs();
                lead = i;
            }
        }
        let flip = if col[lead] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[[i, c]] = flip * col[i];
        }
    }
    Ok(SpectralEmbedding {
        vectors,
        eigenvalues: vals.slice(ndarray::s![..k]).to_owned(),
    })
}

/// Lloyd k-means with k-means++ seeding, best of `restarts` runs.
#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    pub assignments: Vec<usize>,
    pub inertia: f64,
}

fn squared_distance(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster the rows of `points` into `k` groups.
///
/// Restart `r` derives its generator from `seed + r`, so the outcome is a
/// pure function of `(points, k, seed)` regardless of scheduling. Empty
/// clusters are re-seeded from the point farthest from its center.
pub fn kmeans(
    points: &Array2<f64>,
    k: usize,
    seed: u64,
    restarts: usize,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansOutcome> {
    let n = points.nrows();
    if k < 1 || k > n {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: format!("need 1 <= k <= {n} rows, got {k}"),
        });
    }
    if restarts < 1 {
        return Err(Error::InvalidArgument {
            name: "restarts",
            reason: "need at least one restart".into(),
        });
    }
    let mut best: Option<KMeansOutcome> = None;
    for r in 0..restarts {
        let outcome = kmeans_single(points, k, seed.wrapping_add(r as u64), max_iter, tol);
        if best.as_ref().map_or(true, |b| outcome.inertia < b.inertia) {
            best = Some(outcome);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn kmeans_single(points: &Array2<f64>, k: usize, seed: u64, max_iter: usize, tol: f64) -> KMeansOutcome {
    let n = points.nrows();
    let dim = points.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // k-means++ seeding
    let mut centers = Array2::<f64>::zeros((k, dim));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.row(i), centers.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // all remaining mass at already-chosen points
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(pick));
        for i in 0..n {
            d2[i] = d2[i].min(squared_distance(points.row(i), centers.row(c)));
        }
    }

    let mut assignments = vec![0usize; n];
    for _ in 0..max_iter {
        // assign
        for i in 0..n {
            let mut best_c = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = squared_distance(points.row(i), centers.row(c));
                if d < best_d {
                    best_d = d;
                    best_c = c;
                }
            }
            assignments[i] = best_c;
        }

        // re-seed empty clusters from the farthest point
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let mut far = 0usize;
            let mut far_d = -1.0;
            for i in 0..n {
                if counts[assignments[i]] <= 1 {
                    continue;
                }
                let d = squared_distance(points.row(i), centers.row(assignments[i]));
                if d > far_d {
                    far_d = d;
                    far = i;
                }
            }
            counts[assignments[far]] -= 1;
            assignments[far] = c;
            counts[c] = 1;
            centers.row_mut(c).assign(&points.row(far));
        }

        // update
        let mut next = Array2::<f64>::zeros((k, dim));
        let mut sizes = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i];
            sizes[c] += 1;
            for j in 0..dim {
                next[[c, j]] += points[[i, j]];
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                for j in 0..dim {
                    next[[c, j]] /= sizes[c] as f64;
                }
            } else {
                next.row_mut(c).assign(&centers.row(c));
            }
        }
        let shift: f64 = (0..k)
            .map(|c| squared_distance(next.row(c), centers.row(c)))
            .sum();
        centers = next;
        if shift <= tol * tol {
            break;
        }
    }

    // final inertia against the settled centers
    let mut total = 0.0;
    for i in 0..n {
        let mut best_c = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..k {
            let d = squared_distance(points.row(i), centers.row(c));
            if d < best_d {
                best_d = d;
                best_c = c;
            }
        }
        assignments[i] = best_c;
        total += best_d;
    }
    KMeansOutcome { assignments, inertia: total }
}

/// Tunables of the clustering stage; the defaults match [`spectral_clustering`].
#[derive(Debug, Clone)]
pub struct SpectralOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Normalize embedding rows to unit length before k-means (off by default).
    pub row_normalize: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self { restarts: 20, max_iter: 300, tol: 1e-6, row_normalize: false }
    }
}

/// Hypergraph spectral clustering: Laplacian, embedding, k-means on rows.
pub fn spectral_clustering(g: &Hypergraph, k: usize, seed: u64) -> Result<ClusteringResult> {
    spectral_clustering_with(g, k, seed, &SpectralOptions::default())
}

pub fn spectral_clustering_with(
    g: &Hypergraph,
    k: usize,
    seed: u64,
    options: &SpectralOptions,
) -> Result<ClusteringResult> {
    if k < 2 || k > g.n() {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: format!("need 2 <= k <= n = {}, got {k}", g.n()),
        });
    }
    let l = hypergraph::laplacian(g)?;
    let embedding = spectral_embedding(&l, k)?;
    let mut points = embedding.vectors.clone();
    if options.row_normalize {
        for mut row in points.rows_mut() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.mapv_inplace(|v| v / norm);
            }
        }
    }
    let km = kmeans(&points, k, seed, options.restarts, options.max_iter, options.tol)?;
    Ok(ClusteringResult {
        assignments: km.assignments,
        embedding,
        inertia: km.inertia,
    })
}

fn validate_propagation(g: &Hypergraph, y: &LabelMatrix, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    if y.as_array().nrows() != g.n() {
        return Err(Error::LengthMismatch { left: y.as_array().nrows(), right: g.n() });
    }
    if y.labeled_count() == 0 {
        return Err(Error::NoLabeledSamples);
    }
    Ok(())
}

/// Closed-form label propagation `F = (I - alpha * Theta)^{-1} Y`.
pub fn propagate_labels(g: &Hypergraph, y: &LabelMatrix, alpha: f64) -> Result<Array2<f64>> {
    validate_propagation(g, y, alpha)?;
    let theta = hypergraph::theta_matrix(g)?;
    let n = g.n();
    let mut system = theta * (-alpha);
    for i in 0..n {
        system[[i, i]] += 1.0;
    }
    let chol = linalg::cholesky(&system).ok_or(Error::NotSymmetric {
        // alpha < 1 keeps I - alpha*Theta positive definite; reaching this
        // means the hypergraph operator was malformed
        max_asymmetry: f64::NAN,
    })?;
    Ok(linalg::cholesky_solve_mat(&chol, y.as_array()))
}

/// Fixed-point label propagation `F_{t+1} = alpha * Theta * F_t + Y` from
/// `F_0 = Y`, stopping when the Frobenius change drops to `tol`.
pub fn propagate_labels_iterative(
    g: &Hypergraph,
    y: &LabelMatrix,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Array2<f64>> {
    validate_propagation(g, y, alpha)?;
    let theta = hypergraph::theta_matrix(g)?;
    let mut f = y.as_array().clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = theta.dot(&f) * alpha + y.as_array();
        residual = (&next - &f).iter().map(|v| v * v).sum::<f64>().sqrt();
        f = next;
        if residual <= tol {
            return Ok(f);
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// Per-row argmax of the classification matrix; ties go to the lowest class.
pub fn predict_labels(f: &Array2<f64>) -> LabelVector {
    let labels: Vec<usize> = f
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for (j, &v) in row.iter().enumerate() {
                if v > best_v {
                    best_v = v;
                    best = j;
                }
            }
            best
        })
        .collect();
    LabelVector::new_known(labels)
}

/// The hypergraph smoothness functional written as its double sum
///
/// ```text
/// 1/2 sum_e sum_{u,v in e} w(e)/delta(e) * (f(u)/sqrt(d_u) - f(v)/sqrt(d_v))^2
/// ```
///
/// summed over the columns of `F`. Equals `Tr(F^T L F)`; kept as an
/// independent check of the Laplacian assembly.
pub fn regularizer_double_sum(g: &Hypergraph, f: &Array2<f64>) -> f64 {
    let dv = g.vertex_degrees();
    let mut total = 0.0;
    for (j, e) in g.edges().iter().enumerate() {
        let scale = e.weight / g.edge_degrees()[j];
        for &u in &e.members {
            for &v in &e.members {
                for c in 0..f.ncols() {
                    let diff = f[[u, c]] / dv[u].sqrt() - f[[v, c]] / dv[v].sqrt();
                    total += 0.5 * scale * diff * diff;
                }
            }
        }
    }
    total
}

/// `Tr(F^T L F)` evaluated directly.
pub fn laplacian_quadratic(g: &Hypergraph, f: &Array2<f64>) -> Result<f64> {
    let l = hypergraph::laplacian(g)?;
    let lf = l.dot(f);
    Ok(f.iter().zip(lf.iter()).map(|(a, b)| a * b).sum())
}
