//! Trajectory matrices built from recorded signals.
//!
//! A Hankel matrix of depth `L` stacks every length-`L` window of a signal as
//! a column (windows overlap). A Page matrix uses consecutive non-overlapping
//! windows, so every sample appears at most once. [`partition_data`] splits
//! a depth `T_ini + T_f` matrix into past and future blocks.

use std::fmt;
use std::str::FromStr;

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{numerical_rank, stack_rows, vec_rows};
use crate::{DeepcError, Real, Result};

/// Singular values below `DEFAULT_RANK_TOL · σ_max` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Hankel,
    Page,
}

impl Structure {
    pub fn as_str(&self) -> &'static str {
        match self {
            Structure::Hankel => "hankel",
            Structure::Page => "page",
        }
    }

    /// Column count of a depth-`depth` matrix built from `len` samples.
    pub fn columns(&self, len: usize, depth: usize) -> usize {
        if depth == 0 || len < depth {
            return 0;
        }
        match self {
            Structure::Hankel => len - depth + 1,
            Structure::Page => len / depth,
        }
    }

    /// Smallest signal length giving at least `cols` columns.
    pub fn samples_for_columns(&self, cols: usize, depth: usize) -> usize {
        match self {
            Structure::Hankel => cols + depth - 1,
            Structure::Page => cols * depth,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Structure {
    type Err = DeepcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hankel" => Ok(Structure::Hankel),
            "page" => Ok(Structure::Page),
            other => Err(DeepcError::Invalid(format!("unknown structure {other:?}"))),
        }
    }
}

/// A finite vector-valued signal; column `t` of the backing matrix is sample `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T: Real> {
    data: DMatrix<T>,
}

impl<T: Real> Signal<T> {
    /// Wraps a `dim × len` matrix.
    pub fn new(data: DMatrix<T>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(DeepcError::Invalid("signal needs positive dimension and length".into()));
        }
        Ok(Signal { data })
    }

    pub fn from_samples(samples: &[Vec<T>]) -> Result<Self> {
        let dim = samples.first().map_or(0, Vec::len);
        if samples.iter().any(|s| s.len() != dim) {
            return Err(DeepcError::DimensionMismatch("samples of unequal dimension".into()));
        }
        Signal::new(DMatrix::from_fn(dim, samples.len(), |i, t| samples[t][i]))
    }

    pub fn from_scalars(values: &[T]) -> Result<Self> {
        Signal::new(DMatrix::from_row_slice(1, values.len(), values))
    }

    /// Inverse of [`Signal::to_vector`].
    pub fn from_vector(v: &DVector<T>, dim: usize) -> Result<Self> {
        if dim == 0 || v.len() % dim != 0 {
            return Err(DeepcError::DimensionMismatch(format!("length {} is not a multiple of {dim}", v.len())));
        }
        Signal::new(DMatrix::from_column_slice(dim, v.len() / dim, v.as_slice()))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn sample(&self, t: usize) -> DVector<T> {
        self.data.column(t).into_owned()
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.data
    }

    /// Samples `start .. start + len`.
    pub fn window(&self, start: usize, len: usize) -> Signal<T> {
        Signal { data: self.data.columns(start, len).into_owned() }
    }

    /// Time-stacked vector `col(s_1, …, s_T)`.
    pub fn to_vector(&self) -> DVector<T> {
        DVector::from_column_slice(self.data.as_slice())
    }

    pub fn concat(&self, other: &Signal<T>) -> Result<Signal<T>> {
        if self.dim() != other.dim() {
            return Err(DeepcError::DimensionMismatch("cannot concatenate signals of different dimension".into()));
        }
        let mut data = DMatrix::zeros(self.dim(), self.len() + other.len());
        data.columns_mut(0, self.len()).copy_from(&self.data);
        data.columns_mut(self.len(), other.len()).copy_from(&other.data);
        Ok(Signal { data })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryMatrix<T: Real> {
    pub entries: DMatrix<T>,
    pub structure: Structure,
    pub depth: usize,
    pub block_dim: usize,
}

impl<T: Real> TrajectoryMatrix<T> {
    pub fn columns(&self) -> usize {
        self.entries.ncols()
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    /// Row-major CSV with a `# rows=<r> cols=<c> structure=<s>` header line.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for i in 0..self.rows() {
            w.write_record(self.entries.row(i).iter().map(|v| v.to_string()))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| DeepcError::Invalid(e.to_string()))?)
            .map_err(|e| DeepcError::Invalid(e.to_string()))?;
        Ok(format!("# rows={} cols={} structure={}\n{body}", self.rows(), self.columns(), self.structure))
    }

    /// Parses [`TrajectoryMatrix::to_csv`] output; the header does not carry the
    /// block dimension, so the caller supplies it.
    pub fn from_csv(text: &str, block_dim: usize) -> Result<Self> {
        let header = text.lines().next().unwrap_or_default();
        let field = |key: &str| {
            header
                .split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| DeepcError::Invalid(format!("missing {key} in matrix header")))
        };
        let rows: usize = field("rows")?.parse().map_err(|_| DeepcError::Invalid("bad row count".into()))?;
        let cols: usize = field("cols")?.parse().map_err(|_| DeepcError::Invalid("bad column count".into()))?;
        let structure: Structure = field("structure")?.parse()?;
        if block_dim == 0 || rows % block_dim != 0 {
            return Err(DeepcError::DimensionMismatch(format!("{rows} rows do not split into blocks of {block_dim}")));
        }
        let entries = read_numeric_csv::<T>(text)?;
        if entries.len() != rows || entries.iter().any(|r| r.len() != cols) {
            return Err(DeepcError::DimensionMismatch("matrix body disagrees with header".into()));
        }
        Ok(TrajectoryMatrix {
            entries: DMatrix::from_fn(rows, cols, |i, j| entries[i][j]),
            structure,
            depth: rows / block_dim,
            block_dim,
        })
    }
}

/// Reads comma-separated numeric rows, skipping `#` comment lines.
pub(crate) fn read_numeric_csv<T: Real>(text: &str) -> Result<Vec<Vec<T>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map(T::lit).map_err(|_| DeepcError::Invalid(format!("bad number {s:?}"))))
            .collect::<Result<Vec<T>>>()?;
        out.push(row);
    }
    Ok(out)
}

pub fn build_hankel<T: Real>(u: &Signal<T>, depth: usize) -> Result<TrajectoryMatrix<T>> {
    check_depth(u, depth)?;
    let m = u.dim();
    let cols = Structure::Hankel.columns(u.len(), depth);
    let entries = DMatrix::from_fn(m * depth, cols, |r, j| u.data[(r % m, j + r / m)]);
    Ok(TrajectoryMatrix { entries, structure: Structure::Hankel, depth, block_dim: m })
}

pub fn build_page<T: Real>(u: &Signal<T>, depth: usize) -> Result<TrajectoryMatrix<T>> {
    check_depth(u, depth)?;
    let m = u.dim();
    let cols = Structure::Page.columns(u.len(), depth);
    let dropped = u.len() - cols * depth;
    if dropped > 0 {
        debug!("page matrix of depth {depth} drops {dropped} trailing samples");
    }
    let entries = DMatrix::from_fn(m * depth, cols, |r, j| u.data[(r % m, j * depth + r / m)]);
    Ok(TrajectoryMatrix { entries, structure: Structure::Page, depth, block_dim: m })
}

pub fn build_matrix<T: Real>(u: &Signal<T>, depth: usize, structure: Structure) -> Result<TrajectoryMatrix<T>> {
    match structure {
        Structure::Hankel => build_hankel(u, depth),
        Structure::Page => build_page(u, depth),
    }
}

fn check_depth<T: Real>(u: &Signal<T>, depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(DeepcError::Invalid("depth must be positive".into()));
    }
    if depth > u.len() {
        return Err(DeepcError::DepthTooLarge { depth, len: u.len() });
    }
    Ok(())
}

/// Full row rank test of the depth-`depth` Hankel matrix.
pub fn is_hankel_exciting<T: Real>(u: &Signal<T>, depth: usize, rank_tol: T) -> bool {
    if depth == 0 || u.len() + 1 < depth * (u.dim() + 1) {
        return false;
    }
    match build_hankel(u, depth) {
        Ok(h) => numerical_rank(&h.entries, rank_tol) == h.rows(),
        Err(_) => false,
    }
}

/// How the rank of the stacked Page matrix is decided.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankMethod {
    /// SVD of the full stack.
    Exact,
    /// SVD of the stack times a Gaussian sketch with `rows + 8` columns.
    RandomProbe { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExcitationReport {
    pub rank: usize,
    pub rows: usize,
    pub full_row_rank: bool,
    /// Whether `T ≥ L((mL+1)M − 1)`.
    pub length_bound_met: bool,
}

/// Minimum length for an `L`-Page exciting sequence of order `M`.
pub fn page_length_bound(m: usize, depth: usize, order: usize) -> usize {
    depth * ((m * depth + 1) * order - 1)
}

/// The `M` vertically stacked, shifted Page matrices of depth `L`.
pub fn page_excitation_stack<T: Real>(u: &Signal<T>, depth: usize, order: usize) -> Result<DMatrix<T>> {
    if depth == 0 || order == 0 {
        return Err(DeepcError::Invalid("depth and order must be positive".into()));
    }
    if u.len() < depth * order {
        return Err(DeepcError::InsufficientData(format!(
            "{} samples, need at least {} for depth {depth} and order {order}",
            u.len(),
            depth * order
        )));
    }
    let seg = u.len() - (order - 1) * depth;
    let blocks = (0..order)
        .map(|k| build_page(&u.window(k * depth, seg), depth).map(|p| p.entries))
        .collect::<Result<Vec<_>>>()?;
    Ok(stack_rows(&blocks.iter().collect::<Vec<_>>()))
}

pub fn page_excitation_report<T: Real>(
    u: &Signal<T>,
    depth: usize,
    order: usize,
    rank_tol: T,
    method: RankMethod,
) -> Result<ExcitationReport> {
    let stack = page_excitation_stack(u, depth, order)?;
    let rows = stack.nrows();
    let rank = match method {
        RankMethod::Exact => numerical_rank(&stack, rank_tol),
        RankMethod::RandomProbe { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sketch = DMatrix::from_fn(stack.ncols(), rows + 8, |_, _| {
                T::lit(StandardNormal.sample(&mut rng))
            });
            numerical_rank(&(&stack * sketch), rank_tol)
        }
    };
    Ok(ExcitationReport {
        rank,
        rows,
        full_row_rank: rank == rows,
        length_bound_met: u.len() >= page_length_bound(u.dim(), depth, order),
    })
}

/// Full row rank test of the `L`-Page excitation stack of order `M`.
pub fn is_page_exciting<T: Real>(u: &Signal<T>, depth: usize, order: usize, rank_tol: T) -> Result<bool> {
    Ok(page_excitation_report(u, depth, order, rank_tol, RankMethod::Exact)?.full_row_rank)
}

/// Past/future blocks of the input matrix and of every output batch.
#[derive(Clone, Debug, PartialEq)]
pub struct DataBlocks<T: Real> {
    pub up: DMatrix<T>,
    pub uf: DMatrix<T>,
    pub yp: Vec<DMatrix<T>>,
    pub yf: Vec<DMatrix<T>>,
    pub structure: Structure,
    pub t_ini: usize,
    pub t_f: usize,
    pub m: usize,
    pub p: usize,
}

impl<T: Real> DataBlocks<T> {
    /// Column count `K`.
    pub fn columns(&self) -> usize {
        self.up.ncols()
    }

    /// Batch count `N`.
    pub fn batches(&self) -> usize {
        self.yp.len()
    }

    pub fn depth(&self) -> usize {
        self.t_ini + self.t_f
    }

    /// `col(Up, Yp⁽ⁱ⁾, Uf, Yf⁽ⁱ⁾)`.
    pub fn data_matrix(&self, batch: usize) -> DMatrix<T> {
        stack_rows(&[&self.up, &self.yp[batch], &self.uf, &self.yf[batch]])
    }

    /// `col(Yp⁽ⁱ⁾, Yf⁽ⁱ⁾)`, the output matrix whose rows make up a sample.
    pub fn output_matrix(&self, batch: usize) -> DMatrix<T> {
        stack_rows(&[&self.yp[batch], &self.yf[batch]])
    }

    /// Sample `ξ̂⁽ⁱ⁾`: the rows of `col(Yp⁽ⁱ⁾, Yf⁽ⁱ⁾)` concatenated.
    pub fn sample(&self, batch: usize) -> DVector<T> {
        vec_rows(&self.output_matrix(batch))
    }

    /// Keeps the first `k` columns.
    pub fn truncate_columns(&self, k: usize) -> DataBlocks<T> {
        let k = k.min(self.columns());
        let cut = |m: &DMatrix<T>| m.columns(0, k).into_owned();
        DataBlocks {
            up: cut(&self.up),
            uf: cut(&self.uf),
            yp: self.yp.iter().map(cut).collect(),
            yf: self.yf.iter().map(cut).collect(),
            ..self.clone()
        }
    }

    /// Keeps the first `n` batches.
    pub fn truncate_batches(&self, n: usize) -> DataBlocks<T> {
        let n = n.min(self.batches()).max(1);
        DataBlocks { yp: self.yp[..n].to_vec(), yf: self.yf[..n].to_vec(), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.columns();
        let ok = self.up.nrows() == self.m * self.t_ini
            && self.uf.nrows() == self.m * self.t_f
            && self.uf.ncols() == k
            && !self.yp.is_empty()
            && self.yp.len() == self.yf.len()
            && self.yp.iter().all(|y| y.nrows() == self.p * self.t_ini && y.ncols() == k)
            && self.yf.iter().all(|y| y.nrows() == self.p * self.t_f && y.ncols() == k);
        if ok {
            Ok(())
        } else {
            Err(DeepcError::DimensionMismatch("inconsistent data blocks".into()))
        }
    }
}

/// Builds depth `T_ini + T_f` matrices of `u` and every output batch and
/// splits them into past (`T_ini` block rows) and future (`T_f` block rows).
pub fn partition_data<T: Real>(
    u: &Signal<T>,
    ys: &[Signal<T>],
    t_ini: usize,
    t_f: usize,
    structure: Structure,
) -> Result<DataBlocks<T>> {
    if t_ini == 0 || t_f == 0 {
        return Err(DeepcError::Invalid("T_ini and T_f must be positive".into()));
    }
    if ys.is_empty() {
        return Err(DeepcError::InsufficientData("no output batches".into()));
    }
    let p = ys[0].dim();
    if ys.iter().any(|y| y.len() != u.len() || y.dim() != p) {
        return Err(DeepcError::DimensionMismatch("output batches must match the input length and each other".into()));
    }
    let depth = t_ini + t_f;
    if u.len() < depth {
        return Err(DeepcError::InsufficientData(format!("{} samples for depth {depth}", u.len())));
    }
    let m = u.dim();
    let hu = build_matrix(u, depth, structure)?.entries;
    let mut yp = Vec::with_capacity(ys.len());
    let mut yf = Vec::with_capacity(ys.len());
    for y in ys {
        let hy = build_matrix(y, depth, structure)?.entries;
        yp.push(hy.rows(0, p * t_ini).into_owned());
        yf.push(hy.rows(p * t_ini, p * t_f).into_owned());
    }
    Ok(DataBlocks {
        up: hu.rows(0, m * t_ini).into_owned(),
        uf: hu.rows(m * t_ini, m * t_f).into_owned(),
        yp,
        yf,
        structure,
        t_ini,
        t_f,
        m,
        p,
    })
}

/// Numerical rank of `col(Up, Yp⁽ⁱ⁾, Uf, Yf⁽ⁱ⁾)`.
pub fn data_matrix_rank<T: Real>(blocks: &DataBlocks<T>, batch: usize, rank_tol: T) -> usize {
    numerical_rank(&blocks.data_matrix(batch), rank_tol)
}

/// `w = col(u_p, y_p, u_f, y_f)` for a trajectory of length `T_ini + T_f`.
pub fn trajectory_vector<T: Real>(u: &Signal<T>, y: &Signal<T>, t_ini: usize) -> DVector<T> {
    let t_f = u.len() - t_ini;
    let parts = [
        u.window(0, t_ini).to_vector(),
        y.window(0, t_ini).to_vector(),
        u.window(t_ini, t_f).to_vector(),
        y.window(t_ini, t_f).to_vector(),
    ];
    DVector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
}

/// Least-squares membership of `w` in the column span of the data matrix:
/// `min_g ‖H g − w‖₂ ≤ tol · max(1, ‖w‖₂)`.
pub fn check_membership<T: Real>(blocks: &DataBlocks<T>, batch: usize, w: &DVector<T>, tol: T) -> Result<bool> {
    let h = blocks.data_matrix(batch);
    if w.len() != h.nrows() {
        return Err(DeepcError::DimensionMismatch(format!("trajectory of length {} vs {} data rows", w.len(), h.nrows())));
    }
    Ok(span_residual(&h, w) <= tol * T::one().max(w.norm()))
}

/// Distance from `w` to the numerical column span of `h`.
pub fn span_residual<T: Real>(h: &DMatrix<T>, w: &DVector<T>) -> T {
    let svd = h.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
    let mut proj = w.clone();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > T::lit(DEFAULT_RANK_TOL) * smax {
            let uk = u.column(k);
            proj -= uk * uk.dot(w);
        }
    }
    proj.norm()
}

/// Best rank-`target_rank` Frobenius approximation of a Page matrix.
pub fn svd_denoise_page<T: Real>(m: &TrajectoryMatrix<T>, target_rank: usize) -> Result<TrajectoryMatrix<T>> {
    if m.structure != Structure::Page {
        return Err(DeepcError::StructureViolation("truncated SVD would destroy Hankel structure".into()));
    }
    let mut svd = m.entries.clone().svd(true, true);
    for (k, s) in svd.singular_values.iter_mut().enumerate() {
        if k >= target_rank {
            *s = T::zero();
        }
    }
    let entries = svd.recompose().map_err(|e| DeepcError::Invalid(e.to_string()))?;
    Ok(TrajectoryMatrix { entries, ..m.clone() })
}
