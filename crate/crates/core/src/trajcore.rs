//! Signals, trajectories, block-Hankel matrices and the persistence-of-excitation test.
//!
//! All indexing is zero-based. A [`Signal`] stores its samples time-major, so the
//! sample at time `k` is the contiguous slice `values[k*d..(k+1)*d]`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Default relative tolerance used when counting singular values.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;

/// A finite sequence of real vectors of common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    dim: usize,
    values: Vec<f64>,
}

impl Signal {
    /// Builds a signal from time-major samples. `values.len()` must be a nonzero
    /// multiple of `dim`.
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument(
                "signal dimension must be at least 1".into(),
            ));
        }
        if values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::Dimension(format!(
                "{} values cannot form a nonempty signal of dimension {dim}",
                values.len()
            )));
        }
        Ok(Self { dim, values })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.to_vec())
    }

    pub fn from_samples<S: AsRef<[f64]>>(samples: &[S]) -> Result<Self> {
        let dim = samples
            .first()
            .map(|s| s.as_ref().len())
            .ok_or_else(|| Error::Argument("signal must contain at least one sample".into()))?;
        let mut values = Vec::with_capacity(dim * samples.len());
        for (k, s) in samples.iter().enumerate() {
            let s = s.as_ref();
            if s.len() != dim {
                return Err(Error::Dimension(format!(
                    "sample {k} has dimension {}, expected {dim}",
                    s.len()
                )));
            }
            values.extend_from_slice(s);
        }
        Self::new(dim, values)
    }

    /// A signal of `len` zero samples.
    pub fn zeros(dim: usize, len: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; dim * len])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sample at time `k`.
    pub fn at(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    /// The full stacked vector `x_[0, N-1]`.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.values)
    }

    /// Unstacks a column vector of length `d*len` into a signal of dimension `d`.
    pub fn from_stacked(dim: usize, stacked: &DVector<f64>) -> Result<Self> {
        Self::new(dim, stacked.as_slice().to_vec())
    }

    /// Stacked window `x_[a, b]` (inclusive on both ends).
    pub fn window(&self, a: usize, b: usize) -> Result<DVector<f64>> {
        self.check_range(a, b)?;
        Ok(DVector::from_column_slice(
            &self.values[a * self.dim..(b + 1) * self.dim],
        ))
    }

    /// The sub-signal covering times `a..=b`.
    pub fn segment(&self, a: usize, b: usize) -> Result<Signal> {
        self.check_range(a, b)?;
        Ok(Signal {
            dim: self.dim,
            values: self.values[a * self.dim..(b + 1) * self.dim].to_vec(),
        })
    }

    pub fn map<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Result<Signal> {
        let samples: Vec<Vec<f64>> = self.iter().map(f).collect();
        Signal::from_samples(&samples)
    }

    fn check_range(&self, a: usize, b: usize) -> Result<()> {
        if a > b || b >= self.len() {
            return Err(Error::Argument(format!(
                "window [{a}, {b}] out of range for signal of length {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// An input-output record `{u_k, y_k}` with `u` of dimension `m` and `y` of dimension `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    u: Signal,
    y: Signal,
}

impl Trajectory {
    pub fn new(u: Signal, y: Signal) -> Result<Self> {
        if u.len() != y.len() {
            return Err(Error::Dimension(format!(
                "input length {} differs from output length {}",
                u.len(),
                y.len()
            )));
        }
        Ok(Self { u, y })
    }

    pub fn u(&self) -> &Signal {
        &self.u
    }

    pub fn y(&self) -> &Signal {
        &self.y
    }

    pub fn input_dim(&self) -> usize {
        self.u.dim()
    }

    pub fn output_dim(&self) -> usize {
        self.y.dim()
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn segment(&self, a: usize, b: usize) -> Result<Trajectory> {
        Trajectory::new(self.u.segment(a, b)?, self.y.segment(a, b)?)
    }

    /// `[u_[0,N-1]; y_[0,N-1]]`.
    pub fn stacked(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.u.as_slice().len() + self.y.as_slice().len());
        let nu = self.u.as_slice().len();
        v.rows_mut(0, nu).copy_from_slice(self.u.as_slice());
        v.rows_mut(nu, self.y.as_slice().len())
            .copy_from_slice(self.y.as_slice());
        v
    }

    pub fn into_parts(self) -> (Signal, Signal) {
        (self.u, self.y)
    }
}

/// Block-Hankel matrix `H_L(x)` of depth `L`: column `j` is `x_[j, j+L-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    entries: DMatrix<f64>,
    depth: usize,
    source_dim: usize,
}

impl HankelMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    /// Block rows `first..first+count` (each block has `source_dim` rows).
    pub fn block_rows(&self, first: usize, count: usize) -> DMatrix<f64> {
        self.entries
            .rows(first * self.source_dim, count * self.source_dim)
            .into_owned()
    }
}

pub fn hankel(x: &Signal, depth: usize) -> Result<HankelMatrix> {
    if depth == 0 {
        return Err(Error::Argument("Hankel depth must be at least 1".into()));
    }
    let n = x.len();
    if depth > n {
        return Err(Error::Dimension(format!(
            "Hankel depth {depth} exceeds signal length {n}"
        )));
    }
    let d = x.dim();
    let cols = n - depth + 1;
    let entries = DMatrix::from_fn(d * depth, cols, |r, j| x.as_slice()[j * d + r]);
    Ok(HankelMatrix {
        entries,
        depth,
        source_dim: d,
    })
}

/// Stacked window `x_[a, b]`.
pub fn window(x: &Signal, a: usize, b: usize) -> Result<DVector<f64>> {
    x.window(a, b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeReport {
    pub persistently_exciting: bool,
    pub numerical_rank: usize,
    pub required_rank: usize,
    /// Empty when the signal was rejected on length alone.
    pub singular_values: Vec<f64>,
}

/// Checks whether `H_order(x)` has full row rank `d*order`.
///
/// Signals shorter than `(d+1)*order - 1` cannot be persistently exciting of that
/// order and are rejected without building the matrix.
pub fn is_persistently_exciting(x: &Signal, order: usize, rank_tolerance: f64) -> Result<PeReport> {
    if order == 0 {
        return Err(Error::Argument(
            "excitation order must be at least 1".into(),
        ));
    }
    if rank_tolerance.is_nan() || rank_tolerance < 0.0 {
        return Err(Error::Argument(format!(
            "rank tolerance must be nonnegative, got {rank_tolerance}"
        )));
    }
    let d = x.dim();
    let required_rank = d * order;
    if x.len() + 1 < (d + 1) * order {
        return Ok(PeReport {
            persistently_exciting: false,
            numerical_rank: 0,
            required_rank,
            singular_values: Vec::new(),
        });
    }
    let h = hankel(x, order)?;
    let singular_values = linalg::singular_values(h.entries());
    let numerical_rank = linalg::rank_from_singular_values(&singular_values, rank_tolerance);
    Ok(PeReport {
        persistently_exciting: numerical_rank == required_rank,
        numerical_rank,
        required_rank,
        singular_values,
    })
}
