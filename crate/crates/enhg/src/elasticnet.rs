//! LARS-EN regularization paths and the column-by-column robust matrix
//! elastic net decomposition `X = XZ + S`.
//!
//! The per-sample problem is
//!
//! ```text
//! min_z  0.5 ||x - B z||^2  +  l2 ||z||^2  +  l1 ||z||_1
//! ```
//!
//! whose solution is piecewise linear in `l1`. [`lars_en_path`] walks that
//! path exactly: it is LARS on the ridge-augmented system `[B; sqrt(2 l2) I]`
//! with the sign-drop modification, driven as a homotopy in `l1`. Within a
//! segment the active coefficients satisfy
//!
//! ```text
//! (B_A^T B_A + 2 l2 I) z_A = B_A^T x - l1 * signs_A
//! ```
//!
//! so knots land wherever an inactive correlation catches up with `l1` (join)
//! or an active coefficient crosses zero (drop). [`elastic_net_solve`]
//! interpolates the bracketing knots, which is exact on a linear segment.

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::datio::SampleMatrix;
use crate::linalg;
use crate::{Error, Result};

/// Residual-correlation level treated as zero; the path terminates there.
const CORR_EPS: f64 = 1e-12;

/// One breakpoint of the piecewise-linear solution path.
#[derive(Debug, Clone)]
pub struct PathKnot {
    /// The `l1` weight at which this knot is the exact solution.
    pub lambda1: f64,
    /// `||z||_1` at the knot.
    pub l1_norm: f64,
    /// Dense coefficient vector; exactly zero outside `active_set`.
    pub coefficients: Array1<f64>,
    /// Atoms active on the segment ending at this knot, in entry order.
    pub active_set: Vec<usize>,
}

/// Notes the solver leaves about degenerate steps.
#[derive(Debug, Clone, PartialEq)]
pub enum PathAnnotation {
    /// An atom whose admission made the active Gram system singular
    /// (duplicate column with `l2 = 0`) was skipped at this `lambda1`.
    SkippedSingularAtom { atom: usize, lambda1: f64 },
}

/// The full LARS-EN path for one response.
#[derive(Debug, Clone)]
pub struct ElasticNetPath {
    pub knots: Vec<PathKnot>,
    pub l2_weight: f64,
    pub annotations: Vec<PathAnnotation>,
}

impl ElasticNetPath {
    /// Path-fraction axis `s = ||z||_1 / max ||z||_1`, one value per knot.
    pub fn path_fractions(&self) -> Vec<f64> {
        let max = self
            .knots
            .iter()
            .map(|k| k.l1_norm)
            .fold(0.0f64, f64::max);
        self.knots
            .iter()
            .map(|k| if max > 0.0 { k.l1_norm / max } else { 0.0 })
            .collect()
    }

    /// Export rows `(knot_index, s, atom_index, coefficient)` for every atom
    /// active at each knot.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "knot_index,s,atom_index,coefficient")?;
        let fractions = self.path_fractions();
        for (idx, knot) in self.knots.iter().enumerate() {
            for &atom in &knot.active_set {
                writeln!(
                    w,
                    "{},{},{},{}",
                    idx, fractions[idx], atom, knot.coefficients[atom]
                )?;
            }
        }
        Ok(())
    }
}

/// When to stop extending the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop at the knot where one more atom than this would become active.
    MaxActive(usize),
    /// Stop once `||z||_1` reaches this budget (final knot interpolated).
    L1Budget(f64),
    /// Run until the residual correlation falls below 1e-12.
    FullPath,
}

impl StopRule {
    /// Default stop: `min(d, m)` active atoms.
    pub fn default_for(d: usize, m: usize) -> Self {
        StopRule::MaxActive(d.min(m))
    }
}

#[derive(Debug, Clone, Copy)]
enum Event {
    Join { atom: usize, sign: f64 },
    Drop { position: usize },
}

/// Exact LARS-EN path of the elastic net problem for one response.
///
/// `l1` decreases from the all-zero threshold `max_j |b_j^T x|`; the path
/// terminates per `stop` or when the residual correlation drops below 1e-12.
pub fn lars_en_path(
    dictionary: &Array2<f64>,
    response: &Array1<f64>,
    l2_weight: f64,
    stop: StopRule,
) -> Result<ElasticNetPath> {
    validate_problem(dictionary, response, l2_weight)?;
    let gram = dictionary.t().dot(dictionary);
    let corr0 = dictionary.t().dot(response);
    homotopy(&gram.view(), &corr0.view(), l2_weight, stop, 0.0)
}

fn validate_problem(dictionary: &Array2<f64>, response: &Array1<f64>, l2: f64) -> Result<()> {
    if dictionary.nrows() < 1 || dictionary.ncols() < 1 {
        return Err(Error::InvalidArgument {
            name: "dictionary",
            reason: format!("need at least a 1x1 dictionary, got {:?}", dictionary.dim()),
        });
    }
    if response.len() != dictionary.nrows() {
        return Err(Error::InvalidArgument {
            name: "response",
            reason: format!(
                "length {} does not match dictionary rows {}",
                response.len(),
                dictionary.nrows()
            ),
        });
    }
    for ((i, j), v) in dictionary.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row: i, col: j });
        }
    }
    if let Some(i) = response.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument {
            name: "response",
            reason: format!("non-finite entry at index {i}"),
        });
    }
    if !(l2 >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "l2_weight",
            reason: format!("must be >= 0, got {l2}"),
        });
    }
    for j in 0..dictionary.ncols() {
        if dictionary.column(j).iter().all(|&v| v == 0.0) {
            return Err(Error::ZeroNormAtom { index: j });
        }
    }
    Ok(())
}

/// Homotopy core working on the Gram matrix and initial correlations.
/// `lambda_floor > 0` ends the path with a knot at exactly that `l1`.
fn homotopy(
    gram: &ArrayView2<f64>,
    corr0: &ArrayView1<f64>,
    l2: f64,
    stop: StopRule,
    lambda_floor: f64,
) -> Result<ElasticNetPath> {
    let m = corr0.len();
    let mut knots: Vec<PathKnot> = Vec::new();
    let mut annotations = Vec::new();

    let mut lambda_max = 0.0f64;
    let mut first_atom = 0usize;
    for j in 0..m {
        let a = corr0[j].abs();
        if a > lambda_max {
            lambda_max = a;
            first_atom = j;
        }
    }
    knots.push(PathKnot {
        lambda1: lambda_max,
        l1_norm: 0.0,
        coefficients: Array1::zeros(m),
        active_set: Vec::new(),
    });

    let finish = |knots: Vec<PathKnot>, annotations: Vec<PathAnnotation>| ElasticNetPath {
        knots,
        l2_weight: l2,
        annotations,
    };

    if lambda_max <= CORR_EPS {
        return Ok(finish(knots, annotations));
    }
    if matches!(stop, StopRule::MaxActive(0)) {
        return Ok(finish(knots, annotations));
    }
    if let StopRule::L1Budget(t) = stop {
        if t <= 0.0 {
            return Ok(finish(knots, annotations));
        }
    }
    let floor = lambda_floor.max(0.0);
    if floor >= lambda_max {
        return Ok(finish(knots, annotations));
    }

    let mut active: Vec<usize> = vec![first_atom];
    let mut signs: Vec<f64> = vec![corr0[first_atom].signum()];
    let mut banned = vec![false; m];
    let mut is_active = vec![false; m];
    is_active[first_atom] = true;
    let mut last_dropped: Option<usize> = None;
    let mut lambda_cur = lambda_max;
    let ev_eps = 1e-12 * lambda_max.max(1.0);

    let max_events = 16 * m + 64;
    for _ in 0..max_events {
        // Direction of the current segment: z_A(l1) = u - l1 * w.
        let k = active.len();
        let mut gram_aa = Array2::<f64>::zeros((k, k));
        for (p, &i) in active.iter().enumerate() {
            for (q, &j) in active.iter().enumerate() {
                gram_aa[[p, q]] = gram[[i, j]];
            }
            gram_aa[[p, p]] += 2.0 * l2;
        }
        let chol = match linalg::cholesky(&gram_aa) {
            Some(c) => c,
            None => {
                // The most recently admitted atom made the system singular.
                let bad = active.pop().expect("non-empty active set");
                signs.pop();
                is_active[bad] = false;
                banned[bad] = true;
                annotations.push(PathAnnotation::SkippedSingularAtom {
                    atom: bad,
                    lambda1: lambda_cur,
                });
                if active.is_empty() {
                    return Ok(finish(knots, annotations));
                }
                continue;
            }
        };
        let c0_a = Array1::from_iter(active.iter().map(|&j| corr0[j]));
        let s_a = Array1::from_iter(signs.iter().copied());
        let u = linalg::cholesky_solve(&chol, &c0_a);
        let w = linalg::cholesky_solve(&chol, &s_a);

        // Largest event lambda strictly below lambda_cur (drops) or up to
        // lambda_cur itself (joins, which admits exact duplicates).
        let mut best: Option<(f64, Event)> = None;
        for (p, _) in active.iter().enumerate() {
            if w[p] != 0.0 {
                let lam = u[p] / w[p];
                if lam > CORR_EPS
                    && lam < lambda_cur - ev_eps
                    && best.map_or(true, |(bl, _)| lam > bl)
                {
                    best = Some((lam, Event::Drop { position: p }));
                }
            }
        }
        for j in 0..m {
            if is_active[j] || banned[j] {
                continue;
            }
            // A just-dropped atom starts this segment exactly on the
            // boundary; it may only rejoin strictly inside the segment
            // (through the opposite sign), never at the touch point itself.
            let dropped_now = last_dropped == Some(j);
            let mut a_j = 0.0;
            let mut proj = 0.0;
            for (p, &i) in active.iter().enumerate() {
                a_j += gram[[j, i]] * w[p];
                proj += gram[[j, i]] * u[p];
            }
            let c0_j = corr0[j] - proj;
            // c_j(l1) = c0_j + l1 * a_j meets +l1 or -l1
            for (target, denom) in [(1.0, 1.0 - a_j), (-1.0, 1.0 + a_j)] {
                if denom.abs() <= 1e-12 {
                    // Correlation rides the boundary (exact duplicate of an
                    // active atom): admit at the current lambda and let the
                    // singular-Gram check decide whether to keep it.
                    if c0_j.abs() <= ev_eps
                        && !dropped_now
                        && best.map_or(true, |(bl, _)| lambda_cur > bl)
                    {
                        best = Some((lambda_cur, Event::Join { atom: j, sign: target }));
                    }
                    continue;
                }
                let lam = target * c0_j / denom;
                if !lam.is_finite() || lam <= CORR_EPS {
                    continue;
                }
                let below_cap = if dropped_now {
                    lam < lambda_cur - ev_eps
                } else {
                    lam <= lambda_cur + ev_eps
                };
                if below_cap {
                    let lam = lam.min(lambda_cur);
                    if best.map_or(true, |(bl, _)| lam > bl) {
                        best = Some((lam, Event::Join { atom: j, sign: target }));
                    }
                }
            }
        }

        let segment_end = match best {
            Some((lam, _)) if lam > floor => lam,
            _ => floor,
        };

        // The l1 budget can be reached inside this segment.
        if let StopRule::L1Budget(budget) = stop {
            let su: f64 = signs.iter().zip(u.iter()).map(|(s, u)| s * u).sum();
            let sw: f64 = signs.iter().zip(w.iter()).map(|(s, w)| s * w).sum();
            let norm_at_end = su - segment_end * sw;
            if norm_at_end >= budget && sw > 0.0 {
                let lam_budget = ((su - budget) / sw).clamp(segment_end, lambda_cur);
                knots.push(make_knot(m, lam_budget, &active, &u, &w, None));
                return Ok(finish(knots, annotations));
            }
        }

        match best {
            Some((lam, _)) if lam <= floor => {
                knots.push(make_knot(m, floor, &active, &u, &w, None));
                return Ok(finish(knots, annotations));
            }
            None => {
                knots.push(make_knot(m, floor, &active, &u, &w, None));
                return Ok(finish(knots, annotations));
            }
            Some((lam, event)) => {
                let dropping = match event {
                    Event::Drop { position } => Some(position),
                    Event::Join { .. } => None,
                };
                knots.push(make_knot(m, lam, &active, &u, &w, dropping));
                match event {
                    Event::Join { atom, sign } => {
                        if let StopRule::MaxActive(cap) = stop {
                            if active.len() >= cap {
                                return Ok(finish(knots, annotations));
                            }
                        }
                        active.push(atom);
                        signs.push(sign);
                        is_active[atom] = true;
                        last_dropped = None;
                    }
                    Event::Drop { position } => {
                        let atom = active.remove(position);
                        signs.remove(position);
                        is_active[atom] = false;
                        last_dropped = Some(atom);
                    }
                }
                lambda_cur = lam;
                if lambda_cur <= CORR_EPS || lambda_cur <= floor || active.is_empty() {
                    return Ok(finish(knots, annotations));
                }
            }
        }
    }
    Err(Error::SolverStalled { iterations: max_events })
}

fn make_knot(
    m: usize,
    lambda1: f64,
    active: &[usize],
    u: &Array1<f64>,
    w: &Array1<f64>,
    dropping: Option<usize>,
) -> PathKnot {
    let mut z = Array1::<f64>::zeros(m);
    for (p, &j) in active.iter().enumerate() {
        z[j] = u[p] - lambda1 * w[p];
    }
    if let Some(p) = dropping {
        z[active[p]] = 0.0;
    }
    let l1_norm = z.iter().map(|v| v.abs()).sum();
    PathKnot {
        lambda1,
        l1_norm,
        coefficients: z,
        active_set: active.to_vec(),
    }
}

/// Minimize `0.5||x - Bz||^2 + l2||z||^2 + l1||z||_1` exactly by
/// interpolating the path at the knots bracketing `l1`.
pub fn elastic_net_solve(
    dictionary: &Array2<f64>,
    response: &Array1<f64>,
    l1_weight: f64,
    l2_weight: f64,
) -> Result<Array1<f64>> {
    validate_problem(dictionary, response, l2_weight)?;
    if !(l1_weight > 0.0) {
        return Err(Error::InvalidArgument {
            name: "l1_weight",
            reason: format!("must be > 0, got {l1_weight}"),
        });
    }
    let gram = dictionary.t().dot(dictionary);
    let corr0 = dictionary.t().dot(response);
    solve_from_gram(&gram.view(), &corr0.view(), l1_weight, l2_weight)
}

fn solve_from_gram(
    gram: &ArrayView2<f64>,
    corr0: &ArrayView1<f64>,
    l1: f64,
    l2: f64,
) -> Result<Array1<f64>> {
    let path = homotopy(gram, corr0, l2, StopRule::FullPath, l1)?;
    let knots = &path.knots;
    let first = &knots[0];
    if l1 >= first.lambda1 {
        return Ok(Array1::zeros(corr0.len()));
    }
    for pair in knots.windows(2) {
        let (hi, lo) = (&pair[0], &pair[1]);
        if l1 > hi.lambda1 || l1 < lo.lambda1 {
            continue;
        }
        if hi.lambda1 == lo.lambda1 {
            continue; // zero-length segment; a later knot carries this lambda
        }
        let t = (hi.lambda1 - l1) / (hi.lambda1 - lo.lambda1);
        return Ok(&lo.coefficients * t + &(&hi.coefficients * (1.0 - t)));
    }
    // The path terminated above the requested l1 only at the
    // residual-correlation threshold; the terminal knot is the solution there.
    Ok(knots.last().expect("path has knots").coefficients.clone())
}

/// Stationarity residuals of a candidate solution.
///
/// For active atoms the generalized correlation `b_j^T (x - Bz) - 2 l2 z_j`
/// must equal `l1 * sign(z_j)`; for inactive atoms its magnitude must not
/// exceed `l1`.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    pub max_active_violation: f64,
    pub max_inactive_violation: f64,
}

impl KktReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_active_violation <= tol && self.max_inactive_violation <= tol
    }
}

/// Evaluate the KKT stationarity conditions for `z` at `(l1, l2)`.
pub fn kkt_report(
    dictionary: &Array2<f64>,
    response: &Array1<f64>,
    z: &Array1<f64>,
    l1: f64,
    l2: f64,
) -> KktReport {
    let residual = response - &dictionary.dot(z);
    let corr = dictionary.t().dot(&residual);
    let mut max_active = 0.0f64;
    let mut max_inactive = 0.0f64;
    for j in 0..z.len() {
        let c = corr[j] - 2.0 * l2 * z[j];
        if z[j] != 0.0 {
            max_active = max_active.max((c - l1 * z[j].signum()).abs());
        } else {
            max_inactive = max_inactive.max((c.abs() - l1).max(0.0));
        }
    }
    KktReport {
        max_active_violation: max_active,
        max_inactive_violation: max_inactive,
    }
}

/// `n x n` self-expressive coefficient matrix with an exactly zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    data: Array2<f64>,
}

impl CoefficientMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidArgument {
                name: "coefficients",
                reason: format!("must be square, got {:?}", data.dim()),
            });
        }
        for ((i, j), v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if i == j && *v != 0.0 {
                return Err(Error::InvalidArgument {
                    name: "coefficients",
                    reason: format!("diagonal entry {i} is {v}, must be exactly zero"),
                });
            }
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    /// Coefficient column `i`: how sample `i` is reconstructed.
    pub fn column(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.column(i)
    }
}

/// `d x n` gross-error matrix `S = X - XZ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    data: Array2<f64>,
}

impl ErrorMatrix {
    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }
}

/// Whether to undo the ridge shrinkage of the naive elastic net solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rescale {
    /// Return coefficients as solved (the default; downstream thresholding
    /// and affinities are scale-compatible).
    #[default]
    Naive,
    /// Multiply by `1 + 2 l2`.
    Corrected,
}

/// Map the model weights `(lambda, gamma)` of the constrained form
/// `min ||Z||_1 + lambda ||Z||_F^2 + gamma ||S||_{2,1}` onto the solver's
/// `(l1, l2) = (1/gamma, lambda/gamma)`.
pub fn paper_param_mapping(lambda: f64, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument {
            name: "gamma",
            reason: format!("must be > 0, got {gamma}"),
        });
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "lambda",
            reason: format!("must be >= 0, got {lambda}"),
        });
    }
    Ok((1.0 / gamma, lambda / gamma))
}

/// Solve the robust matrix elastic net `X = XZ + S`, `diag(Z) = 0`,
/// parameterized by the model weights `(lambda, gamma)`.
pub fn robust_matrix_elastic_net(
    x: &SampleMatrix,
    lambda: f64,
    gamma: f64,
) -> Result<(CoefficientMatrix, ErrorMatrix)> {
    let (l1, l2) = paper_param_mapping(lambda, gamma)?;
    robust_matrix_elastic_net_with(x, l1, l2, Rescale::Naive)
}

/// As [`robust_matrix_elastic_net`] but with the solver weights given
/// directly.
pub fn robust_matrix_elastic_net_with(
    x: &SampleMatrix,
    l1: f64,
    l2: f64,
    rescale: Rescale,
) -> Result<(CoefficientMatrix, ErrorMatrix)> {
    let n = x.n_samples();
    if n < 3 {
        return Err(Error::InvalidArgument {
            name: "x",
            reason: format!("need at least 3 samples, got {n}"),
        });
    }
    if !(l1 > 0.0) {
        return Err(Error::InvalidArgument {
            name: "l1_weight",
            reason: format!("must be > 0, got {l1}"),
        });
    }
    if !(l2 >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "l2_weight",
            reason: format!("must be >= 0, got {l2}"),
        });
    }
    let xa = x.as_array();
    let gram_full = xa.t().dot(xa);
    for i in 0..n {
        if gram_full[[i, i]] == 0.0 {
            return Err(Error::ZeroNormAtom { index: i });
        }
    }

    // Each column is an independent subproblem over the remaining samples;
    // the shared Gram matrix makes slicing cheap and scheduling-independent.
    let columns: Vec<Result<Array1<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut gram = Array2::<f64>::zeros((n - 1, n - 1));
            let mut corr0 = Array1::<f64>::zeros(n - 1);
            for (p, a) in (0..n).filter(|&a| a != i).enumerate() {
                corr0[p] = gram_full[[a, i]];
                for (q, b) in (0..n).filter(|&b| b != i).enumerate() {
                    gram[[p, q]] = gram_full[[a, b]];
                }
            }
            solve_from_gram(&gram.view(), &corr0.view(), l1, l2).map_err(|e| {
                Error::ColumnSolve {
                    column: i,
                    source: Box::new(e),
                }
            })
        })
        .collect();

    let mut z = Array2::<f64>::zeros((n, n));
    for (i, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (p, a) in (0..n).filter(|&a| a != i).enumerate() {
            z[[a, i]] = col[p];
        }
    }
    if rescale == Rescale::Corrected {
        z *= 1.0 + 2.0 * l2;
    }
    let s = xa - &xa.dot(&z);
    Ok((CoefficientMatrix::new(z)?, ErrorMatrix { data: s }))
}
