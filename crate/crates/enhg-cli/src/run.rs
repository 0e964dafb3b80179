//! Pipeline execution and result-file emission for each subcommand.
//!
//! Every run writes `results.json` (schema 1) holding the resolved
//! parameters, seed, metrics, output list and wall time; repeated runs with
//! the same configuration and seed produce byte-identical files apart from
//! the wall-time field.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use serde::Serialize;

use enhg::baselines::{self, Bandwidth};
use enhg::datio::{self, LabelVector, SampleMatrix};
use enhg::elasticnet::{self, CoefficientMatrix, ErrorMatrix, Rescale, StopRule};
use enhg::hypergraph::{self, Hypergraph};
use enhg::learn::{self, LabelMatrix, SpectralOptions};
use enhg::metrics::{self, MetricReport};

use crate::config::{Baseline, ConfigError, InputSource, RunConfig, SolverParams, SynthSpec};

/// A failure after configuration was accepted; exits with status 1.
#[derive(Debug)]
pub enum RunError {
    Lib(enhg::Error),
    Io(PathBuf, std::io::Error),
    Other(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Lib(e) => write!(f, "{e}"),
            RunError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            RunError::Other(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for RunError {}

impl From<enhg::Error> for RunError {
    fn from(e: enhg::Error) -> Self {
        RunError::Lib(e)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |e| RunError::Io(path.to_path_buf(), e)
}

pub struct Dataset {
    pub x: SampleMatrix,
    pub truth: Option<LabelVector>,
}

/// Load the configured input, then apply normalization and corruption in
/// that order (both optional).
pub fn load_dataset(config: &RunConfig) -> Result<Dataset, RunError> {
    let (x, truth) = match &config.input {
        InputSource::Csv { path, has_header } => {
            (datio::load_matrix_csv(path, *has_header)?, None)
        }
        InputSource::Idx { images, labels } => {
            let (x, truth) = datio::load_idx(images, labels.as_deref())?;
            (x, truth)
        }
        InputSource::Synth(spec) => {
            let (x, truth) = match *spec {
                SynthSpec::Blobs { k, d, n_per, sep, noise } => {
                    datio::synth_blobs(k, d, n_per, sep, noise, config.seed)?
                }
                SynthSpec::Subspaces { k, d, sub_dim, n_per, noise } => {
                    datio::synth_subspaces(k, d, sub_dim, n_per, noise, config.seed)?
                }
            };
            (x, Some(truth))
        }
    };
    let x = if config.normalize { datio::normalize_columns(&x)? } else { x };
    let x = match &config.corrupt {
        Some(c) => datio::corrupt(&x, c.mode, c.fraction, c.magnitude, c.seed)?,
        None => x,
    };
    Ok(Dataset { x, truth })
}

pub struct BuiltGraph {
    pub graph: Hypergraph,
    pub coefficients: Option<(CoefficientMatrix, ErrorMatrix)>,
}

/// Construct the configured graph. The elastic net route keeps `Z` and `S`
/// around for export; the baselines have no coefficient stage.
pub fn build_graph(config: &RunConfig, x: &SampleMatrix) -> Result<BuiltGraph, RunError> {
    let normalized = datio::normalize_columns(x)?;
    match config.baseline {
        Baseline::Enhg => {
            let (l1, l2) = config
                .solver
                .to_l1_l2()
                .map_err(|e| RunError::Other(e.to_string()))?;
            let (z, s) =
                elasticnet::robust_matrix_elastic_net_with(&normalized, l1, l2, Rescale::Naive)?;
            let graph = hypergraph::enhg_from_coefficients(&z, config.threshold_rule)?;
            Ok(BuiltGraph { graph, coefficients: Some((z, s)) })
        }
        Baseline::Gauss => Ok(BuiltGraph {
            graph: baselines::gaussian_graph(&normalized, Bandwidth::MedianHeuristic)?,
            coefficients: None,
        }),
        Baseline::Knn8 => Ok(BuiltGraph {
            graph: baselines::knn_hypergraph(&normalized, 8)?,
            coefficients: None,
        }),
    }
}

#[derive(Serialize)]
struct ResultsJson<'a> {
    schema: u32,
    command: &'a str,
    params: &'a RunConfig,
    seed: u64,
    metrics: &'a BTreeMap<String, f64>,
    outputs: &'a [String],
    wall_time_ms: u128,
}

struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), RunError> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(io_err(&path))
    }

    fn write_matrix(&mut self, name: &str, m: &Array2<f64>) -> Result<(), RunError> {
        let path = self.path(name);
        datio::write_matrix_csv(&path, m).map_err(RunError::from)
    }

    fn finish(
        mut self,
        command: &str,
        config: &RunConfig,
        metrics: &BTreeMap<String, f64>,
        started: Instant,
    ) -> Result<(), RunError> {
        let mut outputs = self.written.clone();
        outputs.push("results.json".to_string());
        let results = ResultsJson {
            schema: 1,
            command,
            params: config,
            seed: config.seed,
            metrics,
            outputs: &outputs,
            wall_time_ms: started.elapsed().as_millis(),
        };
        let text = serde_json::to_string_pretty(&results).expect("results serialize");
        self.write_text("results.json", &text)
    }
}

fn write_labeled_csv(
    out: &mut OutputDir,
    name: &str,
    header: &str,
    rows: impl Iterator<Item = String>,
) -> Result<(), RunError> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    out.write_text(name, &text)
}

fn export_coefficients(
    out: &mut OutputDir,
    coefficients: &Option<(CoefficientMatrix, ErrorMatrix)>,
) -> Result<(), RunError> {
    if let Some((z, s)) = coefficients {
        out.write_matrix("Z.csv", z.as_array())?;
        out.write_matrix("S.csv", s.as_array())?;
    }
    Ok(())
}

fn partition_metrics(
    pred: &LabelVector,
    truth: &LabelVector,
) -> Result<BTreeMap<String, f64>, RunError> {
    let mut metrics_map = BTreeMap::new();
    metrics_map.insert("ac".to_string(), metrics::clustering_accuracy(pred, truth)?);
    metrics_map.insert("nmi".to_string(), metrics::nmi(pred, truth)?);
    Ok(metrics_map)
}

pub fn cluster(config: &RunConfig) -> Result<(), RunError> {
    let started = Instant::now();
    let k = config
        .k
        .ok_or_else(|| RunError::Other("cluster requires --k".into()))?;
    let data = load_dataset(config)?;
    let built = build_graph(config, &data.x)?;
    let options = SpectralOptions { restarts: config.restarts, ..Default::default() };
    let result = learn::spectral_clustering_with(&built.graph, k, config.seed, &options)?;

    let mut out = OutputDir::create(&config.out)?;
    write_labeled_csv(
        &mut out,
        "assignments.csv",
        "sample_index,cluster",
        result
            .assignments
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{i},{c}")),
    )?;
    out.write_matrix("embedding.csv", &result.embedding.vectors)?;
    out.write_text("hypergraph.json", &built.graph.to_json())?;
    export_coefficients(&mut out, &built.coefficients)?;

    let mut metrics_map = BTreeMap::new();
    metrics_map.insert("inertia".to_string(), result.inertia);
    if let Some(truth) = &data.truth {
        let pred = LabelVector::new_known(result.assignments.clone());
        metrics_map.extend(partition_metrics(&pred, truth)?);
        write_labeled_csv(
            &mut out,
            "labels.csv",
            "sample_index,label",
            truth
                .labels()
                .iter()
                .enumerate()
                .map(|(i, l)| format!("{i},{l}")),
        )?;
    }
    out.finish("cluster", config, &metrics_map, started)
}

pub fn classify(config: &RunConfig) -> Result<(), RunError> {
    let started = Instant::now();
    let data = load_dataset(config)?;
    let truth = data
        .truth
        .as_ref()
        .ok_or_else(|| RunError::Other("classification requires labels (synthetic or IDX input with a labels file)".into()))?;
    let built = build_graph(config, &data.x)?;
    let labeled = datio::stratified_label_mask(truth, config.label_fraction, config.seed)?;
    let classes = truth.class_count();
    let y = LabelMatrix::from_labels(&labeled, classes)?;
    let f = learn::propagate_labels(&built.graph, &y, config.alpha)?;
    let predicted = learn::predict_labels(&f);

    // known labels pass through; the model fills in the rest
    let final_labels: Vec<(usize, usize, &str)> = (0..truth.len())
        .map(|i| {
            if labeled.mask()[i] {
                (i, labeled.labels()[i], "given")
            } else {
                (i, predicted.labels()[i], "predicted")
            }
        })
        .collect();

    let mut out = OutputDir::create(&config.out)?;
    write_labeled_csv(
        &mut out,
        "predictions.csv",
        "sample_index,label,source",
        final_labels.iter().map(|(i, l, s)| format!("{i},{l},{s}")),
    )?;
    out.write_matrix("F.csv", &f)?;
    out.write_text("hypergraph.json", &built.graph.to_json())?;
    export_coefficients(&mut out, &built.coefficients)?;

    let eval_mask: Vec<bool> = labeled.mask().iter().map(|&m| !m).collect();
    let accuracy = metrics::classification_accuracy(&predicted, truth, &eval_mask)?;
    let mut metrics_map = BTreeMap::new();
    metrics_map.insert("classification_accuracy".to_string(), accuracy);
    metrics_map.insert(
        "labeled_count".to_string(),
        labeled.mask().iter().filter(|&&m| m).count() as f64,
    );
    out.finish("classify", config, &metrics_map, started)
}

pub fn solve(config: &RunConfig) -> Result<(), RunError> {
    let started = Instant::now();
    let data = load_dataset(config)?;
    let normalized = datio::normalize_columns(&data.x)?;
    let (l1, l2) = config
        .solver
        .to_l1_l2()
        .map_err(|e| RunError::Other(e.to_string()))?;
    let (z, s) = elasticnet::robust_matrix_elastic_net_with(&normalized, l1, l2, Rescale::Naive)?;
    let clean = normalized.as_array().dot(z.as_array());

    let mut out = OutputDir::create(&config.out)?;
    out.write_matrix("Z.csv", z.as_array())?;
    out.write_matrix("Z_abs.csv", &z.as_array().mapv(f64::abs))?;
    out.write_matrix("S.csv", s.as_array())?;
    out.write_matrix("X0.csv", &clean)?;
    let mut metrics_map = BTreeMap::new();
    metrics_map.insert(
        "error_frobenius".to_string(),
        s.as_array().iter().map(|v| v * v).sum::<f64>().sqrt(),
    );
    metrics_map.insert(
        "nonzero_coefficients".to_string(),
        z.as_array().iter().filter(|&&v| v != 0.0).count() as f64,
    );
    out.finish("solve", config, &metrics_map, started)
}

pub fn build(config: &RunConfig, export_matrices: bool) -> Result<(), RunError> {
    let started = Instant::now();
    let data = load_dataset(config)?;
    let built = build_graph(config, &data.x)?;

    let mut out = OutputDir::create(&config.out)?;
    out.write_text("hypergraph.json", &built.graph.to_json())?;
    export_coefficients(&mut out, &built.coefficients)?;
    if export_matrices {
        out.write_matrix("H.csv", &built.graph.incidence_matrix())?;
        out.write_matrix("theta.csv", &hypergraph::theta_matrix(&built.graph)?)?;
        out.write_matrix("L.csv", &hypergraph::laplacian(&built.graph)?)?;
    }
    let mut metrics_map = BTreeMap::new();
    metrics_map.insert("kept_edges".to_string(), built.graph.edges().len() as f64);
    metrics_map.insert("dropped_edges".to_string(), built.graph.dropped().len() as f64);
    out.finish("build", config, &metrics_map, started)
}

/// Read `sample_index,<value>[,source]` rows back into a label vector.
fn read_label_csv(path: &Path) -> Result<LabelVector, RunError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows: Vec<(usize, usize)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if lineno == 0 && fields[0].parse::<usize>().is_err() {
            continue; // header
        }
        if fields.len() < 2 {
            return Err(RunError::Other(format!(
                "{}:{}: expected sample_index,label",
                path.display(),
                lineno + 1
            )));
        }
        let idx: usize = fields[0].parse().map_err(|_| {
            RunError::Other(format!("{}:{}: bad sample index", path.display(), lineno + 1))
        })?;
        let label: usize = fields[1].parse().map_err(|_| {
            RunError::Other(format!("{}:{}: bad label", path.display(), lineno + 1))
        })?;
        rows.push((idx, label));
    }
    if rows.is_empty() {
        return Err(RunError::Other(format!("{}: no label rows", path.display())));
    }
    rows.sort_unstable();
    let n = rows.last().unwrap().0 + 1;
    if rows.len() != n || rows.iter().enumerate().any(|(i, &(idx, _))| i != idx) {
        return Err(RunError::Other(format!(
            "{}: sample indices must cover 0..n without gaps",
            path.display()
        )));
    }
    Ok(LabelVector::new_known(rows.into_iter().map(|(_, l)| l).collect()))
}

pub fn eval(pred_path: &Path, truth_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<(), RunError> {
    let pred = read_label_csv(pred_path)?;
    let truth = read_label_csv(truth_path)?;
    let ac = metrics::clustering_accuracy(&pred, &truth)?;
    let nmi = metrics::nmi(&pred, &truth)?;

    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let ledger = out_dir.join("results.csv");
    let reports = [
        MetricReport::new("ac", ac, pred.len(), seed),
        MetricReport::new("nmi", nmi, pred.len(), seed),
    ];
    let mut stdout = std::io::stdout().lock();
    for report in &reports {
        report.append_to_ledger(&ledger)?;
        writeln!(stdout, "{}", report.to_json()).map_err(io_err(&ledger))?;
    }
    Ok(())
}

pub fn export_path(
    config: &RunConfig,
    column: usize,
    stop_active: Option<usize>,
) -> Result<(), RunError> {
    let started = Instant::now();
    let data = load_dataset(config)?;
    let normalized = datio::normalize_columns(&data.x)?;
    let n = normalized.n_samples();
    if column >= n {
        return Err(RunError::Other(format!(
            "column {column} out of range (n = {n})"
        )));
    }
    let d = normalized.feature_dim();
    let mut dict = Array2::<f64>::zeros((d, n - 1));
    for (p, j) in (0..n).filter(|&j| j != column).enumerate() {
        dict.column_mut(p).assign(&normalized.column(j));
    }
    let response = normalized.column(column).to_owned();
    let (_, l2) = config
        .solver
        .to_l1_l2()
        .map_err(|e| RunError::Other(e.to_string()))?;
    let stop = match stop_active {
        Some(cap) => StopRule::MaxActive(cap),
        None => StopRule::default_for(d, n - 1),
    };
    let path = elasticnet::lars_en_path(&dict, &response, l2, stop)?;

    let mut out = OutputDir::create(&config.out)?;
    let mut buffer = Vec::new();
    path.write_csv(&mut buffer)
        .map_err(|e| RunError::Io(config.out.join("path.csv"), e))?;
    out.write_text("path.csv", &String::from_utf8(buffer).expect("utf-8 csv"))?;
    let mut metrics_map = BTreeMap::new();
    metrics_map.insert("knots".to_string(), path.knots.len() as f64);
    metrics_map.insert(
        "max_l1_norm".to_string(),
        path.knots.last().map(|k| k.l1_norm).unwrap_or(0.0),
    );
    out.finish("export-path", config, &metrics_map, started)
}

pub fn sweep(
    config: &RunConfig,
    param: &str,
    grid: Vec<f64>,
) -> Result<(), RunError> {
    let started = Instant::now();
    let k = config
        .k
        .ok_or_else(|| RunError::Other("sweep requires --k".into()))?;
    let data = load_dataset(config)?;
    let truth = data
        .truth
        .as_ref()
        .ok_or_else(|| RunError::Other("sweep requires labeled data to score against".into()))?;

    let mut rows = Vec::new();
    for &value in &grid {
        let solver = match (param, config.solver) {
            ("lambda", SolverParams::Paper { gamma, .. }) => {
                SolverParams::Paper { lambda: value, gamma }
            }
            ("gamma", SolverParams::Paper { lambda, .. }) => {
                SolverParams::Paper { lambda, gamma: value }
            }
            ("l1", _) | ("l2", _) => {
                let (l1, l2) = config
                    .solver
                    .to_l1_l2()
                    .map_err(|e| RunError::Other(e.to_string()))?;
                if param == "l1" {
                    SolverParams::Direct { l1: value, l2 }
                } else {
                    SolverParams::Direct { l1, l2: value }
                }
            }
            ("lambda" | "gamma", SolverParams::Direct { .. }) => {
                return Err(RunError::Other(
                    "sweeping lambda/gamma requires the paper parametrization (omit --l1/--l2)"
                        .into(),
                ))
            }
            _ => {
                return Err(RunError::Other(format!(
                    "unknown sweep parameter {param:?} (expected lambda, gamma, l1 or l2)"
                )))
            }
        };
        let mut point_config = config.clone();
        point_config.solver = solver;
        let (ac, nmi) = match build_graph(&point_config, &data.x) {
            Ok(built) => {
                let options = SpectralOptions { restarts: config.restarts, ..Default::default() };
                let result =
                    learn::spectral_clustering_with(&built.graph, k, config.seed, &options)?;
                let pred = LabelVector::new_known(result.assignments);
                (
                    metrics::clustering_accuracy(&pred, truth)?,
                    metrics::nmi(&pred, truth)?,
                )
            }
            // a grid point may push the construction into degeneracy; the
            // sweep records it and moves on
            Err(RunError::Lib(e)) => {
                eprintln!("sweep point {param}={value}: {e}");
                (f64::NAN, f64::NAN)
            }
            Err(e) => return Err(e),
        };
        rows.push((value, ac, nmi));
    }

    let mut out = OutputDir::create(&config.out)?;
    write_labeled_csv(
        &mut out,
        "sweep.csv",
        "param,value,ac,nmi,n,seed",
        rows.iter().map(|(value, ac, nmi)| {
            format!("{param},{value},{ac},{nmi},{},{}", truth.len(), config.seed)
        }),
    )?;
    let mut metrics_map = BTreeMap::new();
    let best = rows
        .iter()
        .filter(|r| r.1.is_finite())
        .cloned()
        .fold(None::<(f64, f64, f64)>, |acc, r| match acc {
            Some(best) if best.1 >= r.1 => Some(best),
            _ => Some(r),
        });
    if let Some((value, ac, nmi)) = best {
        metrics_map.insert("best_value".to_string(), value);
        metrics_map.insert("best_ac".to_string(), ac);
        metrics_map.insert("best_nmi".to_string(), nmi);
    }
    metrics_map.insert("points".to_string(), rows.len() as f64);
    out.finish("sweep", config, &metrics_map, started)
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Other(e.to_string())
    }
}
