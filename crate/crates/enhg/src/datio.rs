//! Data ingestion, column normalization, synthetic generators, and
//! corruption injection for robustness experiments.
//!
//! Samples live in the columns of a `d x n` matrix. CSV rows are feature
//! dimensions; IDX images are flattened to one column each. All generators
//! are pure functions of their arguments including the seed.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// A `d x n` real matrix whose columns are samples.
///
/// Guaranteed finite, with at least one feature dimension and two samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Array2<f64>,
}

impl SampleMatrix {
    /// Wrap a matrix after checking the type invariants.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        if data.nrows() < 1 {
            return Err(Error::InvalidArgument {
                name: "rows",
                reason: "need at least one feature dimension".into(),
            });
        }
        if data.ncols() < 2 {
            return Err(Error::InvalidArgument {
                name: "cols",
                reason: format!("need at least 2 samples, got {}", data.ncols()),
            });
        }
        for ((i, j), v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
        Ok(Self { data })
    }

    /// Feature dimension `d`.
    pub fn feature_dim(&self) -> usize {
        self.data.nrows()
    }

    /// Sample count `n`.
    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn column(&self, i: usize) -> ndarray::ArrayView1<'_, f64> {
        self.data.column(i)
    }
}

/// Per-sample class ids with a knowledge mask.
///
/// `mask[i] == false` means the label of sample `i` is unknown and must be
/// ignored by consumers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    mask: Vec<bool>,
}

impl LabelVector {
    /// All labels known.
    pub fn new_known(labels: Vec<usize>) -> Self {
        let mask = vec![true; labels.len()];
        Self { labels, mask }
    }

    pub fn new(labels: Vec<usize>, mask: Vec<bool>) -> Result<Self> {
        if labels.len() != mask.len() {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: mask.len(),
            });
        }
        Ok(Self { labels, mask })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Number of classes, i.e. one past the largest known class id.
    pub fn class_count(&self) -> usize {
        self.labels
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&l, _)| l + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Parse a CSV of numbers into a sample matrix: rows are feature dimensions,
/// columns are samples. No normalization is applied.
pub fn load_matrix_csv(path: impl AsRef<Path>, has_header: bool) -> Result<SampleMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let lineno = idx + 1;
        if has_header && idx == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if let Some(w) = width {
            if fields.len() != w {
                return Err(Error::CsvRaggedRow {
                    path: path.to_path_buf(),
                    line: lineno,
                    expected: w,
                    found: fields.len(),
                });
            }
        } else {
            width = Some(fields.len());
        }
        let mut row = Vec::with_capacity(fields.len());
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::CsvBadNumber {
                path: path.to_path_buf(),
                line: lineno,
                column: col + 1,
                text: field.trim().to_string(),
            })?;
            row.push(v);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::CsvNoData {
            path: path.to_path_buf(),
        });
    }
    let d = rows.len();
    let n = rows[0].len();
    let mut data = Array2::<f64>::zeros((d, n));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            data[[i, j]] = v;
        }
    }
    SampleMatrix::new(data)
}

/// Write a matrix as CSV in the same dialect `load_matrix_csv` reads.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &Array2<f64>) -> Result<()> {
    let path = path.as_ref();
    let wrap = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = std::io::BufWriter::new(File::create(path).map_err(wrap)?);
    for i in 0..m.nrows() {
        let mut line = String::new();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{}", m[[i, j]]));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(wrap)?;
    }
    Ok(())
}

struct IdxFile {
    dims: Vec<usize>,
    payload: Vec<u8>,
}

fn read_idx_file(path: &Path) -> Result<IdxFile> {
    let wrap = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = BufReader::new(File::open(path).map_err(wrap)?);
    let magic = reader.read_u32::<BigEndian>().map_err(wrap)?;
    let bytes = magic.to_be_bytes();
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::IdxBadMagic {
            path: path.to_path_buf(),
            found: magic,
        });
    }
    let dtype = bytes[2];
    if dtype != 0x08 {
        return Err(Error::IdxUnsupportedType {
            path: path.to_path_buf(),
            dtype,
        });
    }
    let ndims = bytes[3] as usize;
    if ndims == 0 {
        return Err(Error::IdxBadMagic {
            path: path.to_path_buf(),
            found: magic,
        });
    }
    let mut dims = Vec::with_capacity(ndims);
    for _ in 0..ndims {
        dims.push(reader.read_u32::<BigEndian>().map_err(wrap)? as usize);
    }
    let expected: usize = dims.iter().product();
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload).map_err(wrap)?;
    if payload.len() != expected {
        return Err(Error::IdxSizeMismatch {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }
    Ok(IdxFile { dims, payload })
}

/// Load an IDX image file (and optionally its label file).
///
/// Each image flattens to one column; pixel bytes map to `[0, 1]` by
/// dividing by 255. Labels, when given, come back fully known.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<(SampleMatrix, Option<LabelVector>)> {
    let images_path = images_path.as_ref();
    let images = read_idx_file(images_path)?;
    if images.dims.len() < 2 {
        return Err(Error::IdxBadMagic {
            path: images_path.to_path_buf(),
            found: 0x0000_0800 | images.dims.len() as u32,
        });
    }
    let n = images.dims[0];
    let d: usize = images.dims[1..].iter().product();
    let mut data = Array2::<f64>::zeros((d, n));
    for j in 0..n {
        for i in 0..d {
            data[[i, j]] = f64::from(images.payload[j * d + i]) / 255.0;
        }
    }
    let matrix = SampleMatrix::new(data)?;

    let labels = match labels_path {
        None => None,
        Some(lp) => {
            let idx = read_idx_file(lp)?;
            if idx.dims.len() != 1 {
                return Err(Error::IdxBadMagic {
                    path: lp.to_path_buf(),
                    found: 0x0000_0800 | idx.dims.len() as u32,
                });
            }
            if idx.dims[0] != n {
                return Err(Error::IdxCountMismatch {
                    images: n,
                    labels: idx.dims[0],
                });
            }
            Some(LabelVector::new_known(
                idx.payload.iter().map(|&b| b as usize).collect(),
            ))
        }
    };
    Ok((matrix, labels))
}

/// Shift every column to zero mean, then scale it to unit Euclidean norm.
///
/// Idempotent up to 1e-12. A constant column cannot reach unit length after
/// centering and is rejected.
pub fn normalize_columns(x: &SampleMatrix) -> Result<SampleMatrix> {
    let d = x.feature_dim();
    let n = x.n_samples();
    let mut out = x.as_array().clone();
    for j in 0..n {
        let mut mean = 0.0;
        for i in 0..d {
            mean += out[[i, j]];
        }
        mean /= d as f64;
        let mut max_abs = 0.0f64;
        for i in 0..d {
            out[[i, j]] -= mean;
            max_abs = max_abs.max(out[[i, j]].abs());
        }
        let norm = (0..d).map(|i| out[[i, j]] * out[[i, j]]).sum::<f64>().sqrt();
        if norm <= 1e-14 * max_abs.max(1e-300) || norm == 0.0 {
            return Err(Error::ConstantColumn { column: j });
        }
        for i in 0..d {
            out[[i, j]] /= norm;
        }
    }
    SampleMatrix::new(out)
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, d: usize) -> Array1<f64> {
    Array1::from_iter((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Isotropic Gaussian clusters with centers pairwise at least `sep` apart.
///
/// Centers sit on axis multiples of `sep`, so the separation holds exactly;
/// labels come back fully known and the draw is reproducible per seed.
pub fn synth_blobs(
    k: usize,
    d: usize,
    n_per: usize,
    sep: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<(SampleMatrix, LabelVector)> {
    if k < 2 {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: format!("need at least 2 clusters, got {k}"),
        });
    }
    if d < 2 {
        return Err(Error::InvalidArgument {
            name: "d",
            reason: format!("need dimension >= 2, got {d}"),
        });
    }
    if n_per < 2 {
        return Err(Error::InvalidArgument {
            name: "n_per",
            reason: format!("need at least 2 samples per cluster, got {n_per}"),
        });
    }
    if !(sep > 0.0) {
        return Err(Error::InvalidArgument {
            name: "sep",
            reason: format!("separation must be positive, got {sep}"),
        });
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "noise_sigma",
            reason: format!("noise stddev must be >= 0, got {noise_sigma}"),
        });
    }

    let mut centers = Array2::<f64>::zeros((d, k));
    for c in 0..k {
        let axis = c % d;
        let multiple = (c / d + 1) as f64;
        centers[[axis, c]] = sep * multiple;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k * n_per;
    let mut data = Array2::<f64>::zeros((d, n));
    let mut labels = Vec::with_capacity(n);
    for c in 0..k {
        for s in 0..n_per {
            let j = c * n_per + s;
            let noise = standard_normal_vec(&mut rng, d);
            for i in 0..d {
                data[[i, j]] = centers[[i, c]] + noise_sigma * noise[i];
            }
            labels.push(c);
        }
    }
    Ok((SampleMatrix::new(data)?, LabelVector::new_known(labels)))
}

/// Gram-Schmidt with one re-orthogonalization pass.
fn orthonormal_basis(rng: &mut ChaCha8Rng, d: usize, sub_dim: usize) -> Array2<f64> {
    let mut basis = Array2::<f64>::zeros((d, sub_dim));
    let mut col = 0;
    while col < sub_dim {
        let mut v = standard_normal_vec(rng, d);
        for _ in 0..2 {
            for k in 0..col {
                let proj = (0..d).map(|i| v[i] * basis[[i, k]]).sum::<f64>();
                for i in 0..d {
                    v[i] -= proj * basis[[i, k]];
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // degenerate draw, try again
        }
        for i in 0..d {
            basis[[i, col]] = v[i] / norm;
        }
        col += 1;
    }
    basis
}

/// Samples drawn from a union of random `sub_dim`-dimensional subspaces.
pub fn synth_subspaces(
    k: usize,
    d: usize,
    sub_dim: usize,
    n_per: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(SampleMatrix, LabelVector)> {
    if sub_dim < 1 || sub_dim >= d {
        return Err(Error::InvalidArgument {
            name: "sub_dim",
            reason: format!("need 1 <= sub_dim < d, got sub_dim={sub_dim}, d={d}"),
        });
    }
    if k < 1 || k * n_per < 4 {
        return Err(Error::InvalidArgument {
            name: "n_per",
            reason: format!("need k*n_per >= 4, got {}", k * n_per),
        });
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "noise_sigma",
            reason: format!("noise stddev must be >= 0, got {noise_sigma}"),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k * n_per;
    let mut data = Array2::<f64>::zeros((d, n));
    let mut labels = Vec::with_capacity(n);
    for c in 0..k {
        let basis = orthonormal_basis(&mut rng, d, sub_dim);
        for s in 0..n_per {
            let j = c * n_per + s;
            let coef = standard_normal_vec(&mut rng, sub_dim);
            let noise = standard_normal_vec(&mut rng, d);
            for i in 0..d {
                let mut v = 0.0;
                for t in 0..sub_dim {
                    v += basis[[i, t]] * coef[t];
                }
                data[[i, j]] = v + noise_sigma * noise[i];
            }
            labels.push(c);
        }
    }
    Ok((SampleMatrix::new(data)?, LabelVector::new_known(labels)))
}

/// What `corrupt` does to the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionMode {
    /// Add zero-mean Gaussian noise of variance `magnitude` to a `fraction`
    /// of the columns.
    GaussianColumns,
    /// In every column, set `ceil(fraction * d)` randomly chosen entries to
    /// `magnitude` with a random sign.
    SparseEntries,
    /// Zero a contiguous block spanning `ceil(fraction * d)` entries in each
    /// of `ceil(fraction * n)` chosen columns.
    BlockMissing,
}

/// Pick `count` distinct indices from `0..len` (partial Fisher-Yates),
/// returned sorted.
fn sample_indices(rng: &mut ChaCha8Rng, len: usize, count: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..len).collect();
    let count = count.min(len);
    for i in 0..count {
        let j = rng.random_range(i..len);
        pool.swap(i, j);
    }
    let mut chosen = pool[..count].to_vec();
    chosen.sort_unstable();
    chosen
}

/// Inject corruption for robustness experiments. Deterministic per seed;
/// `fraction = 0` returns the input unchanged.
pub fn corrupt(
    x: &SampleMatrix,
    mode: CorruptionMode,
    fraction: f64,
    magnitude: f64,
    seed: u64,
) -> Result<SampleMatrix> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument {
            name: "fraction",
            reason: format!("must lie in [0, 1], got {fraction}"),
        });
    }
    if !(magnitude >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "magnitude",
            reason: format!("must be >= 0, got {magnitude}"),
        });
    }
    let d = x.feature_dim();
    let n = x.n_samples();
    let mut out = x.as_array().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let col_count = (fraction * n as f64).ceil() as usize;
    let entry_count = (fraction * d as f64).ceil() as usize;

    match mode {
        CorruptionMode::GaussianColumns => {
            let sigma = magnitude.sqrt();
            for j in sample_indices(&mut rng, n, col_count) {
                for i in 0..d {
                    let e: f64 = rng.sample(StandardNormal);
                    out[[i, j]] += sigma * e;
                }
            }
        }
        CorruptionMode::SparseEntries => {
            if entry_count > 0 {
                for j in 0..n {
                    for i in sample_indices(&mut rng, d, entry_count) {
                        let sign = if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 };
                        out[[i, j]] = sign * magnitude;
                    }
                }
            }
        }
        CorruptionMode::BlockMissing => {
            if entry_count > 0 {
                for j in sample_indices(&mut rng, n, col_count) {
                    let start = rng.random_range(0..=(d - entry_count));
                    for i in start..start + entry_count {
                        out[[i, j]] = 0.0;
                    }
                }
            }
        }
    }
    SampleMatrix::new(out)
}

/// Stratified label-knowledge mask: for each class, round(fraction * size)
/// samples are marked known (at least one per class).
pub fn stratified_label_mask(truth: &LabelVector, fraction: f64, seed: u64) -> Result<LabelVector> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument {
            name: "fraction",
            reason: format!("must lie in [0, 1], got {fraction}"),
        });
    }
    let n = truth.len();
    let c = truth.class_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    for class in 0..c {
        let members: Vec<usize> = (0..n)
            .filter(|&i| truth.mask()[i] && truth.labels()[i] == class)
            .collect();
        if members.is_empty() {
            continue;
        }
        let want = ((fraction * members.len() as f64).round() as usize)
            .clamp(1, members.len());
        for pick in sample_indices(&mut rng, members.len(), want) {
            mask[members[pick]] = true;
        }
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::NoLabeledSamples);
    }
    LabelVector::new(truth.labels().to_vec(), mask)
}
