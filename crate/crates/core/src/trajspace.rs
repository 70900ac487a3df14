//! The trajectory space of an unknown LTI system, represented by the Hankel matrices
//! of one measured trajectory.
//!
//! If the measured input is persistently exciting of order `L + n`, every length-`L`
//! trajectory of the system is `[H_L(u); H_L(y)] * alpha` for some `alpha`, and every
//! such combination is a trajectory. Without excitation only the second half holds,
//! which is why membership verdicts carry diagnostics instead of failing.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, MinNormSolver};
use crate::oracle::{self, StateSpaceModel};
use crate::trajcore::{
    hankel, is_persistently_exciting, HankelMatrix, PeReport, Signal, Trajectory,
    DEFAULT_RANK_TOLERANCE,
};

/// Non-fatal findings that weaken what a result guarantees.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// The data input is not persistently exciting of the order the equivalence needs.
    /// Positive membership verdicts stay sound; negative ones are inconclusive.
    NotPersistentlyExciting {
        required_order: usize,
        rank: usize,
        required_rank: usize,
    },
    /// The initial window is shorter than the order bound, so the initial state (and the
    /// predicted output) may not be unique.
    ShortInitialWindow { init_len: usize, n_bound: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NotPersistentlyExciting {
                required_order,
                rank,
                required_rank,
            } => write!(
                f,
                "data input is not persistently exciting of order {required_order} (rank {rank} < {required_rank}); a negative verdict is inconclusive"
            ),
            Diagnostic::ShortInitialWindow { init_len, n_bound } => write!(
                f,
                "initial window length {init_len} is below the order bound {n_bound}; prediction may not be unique"
            ),
        }
    }
}

/// Coefficients combining the time-shifted windows of the data record.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaVector(DVector<f64>);

impl AlphaVector {
    pub fn new(coefficients: DVector<f64>) -> Self {
        Self(coefficients)
    }

    pub fn zeros(len: usize) -> Self {
        Self(DVector::zeros(len))
    }

    /// The `j`-th unit vector: selects the data window starting at `j`.
    pub fn unit(len: usize, j: usize) -> Self {
        let mut v = DVector::zeros(len);
        v[j] = 1.0;
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

impl From<DVector<f64>> for AlphaVector {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

/// Largest horizon `L` with `(m + 1)(L + n_bound) - 1 <= N`. Non-positive values mean
/// the record is too short for any horizon.
pub fn max_horizon(data_len: usize, input_dim: usize, n_bound: usize) -> i64 {
    ((data_len as i64 + 1) / (input_dim as i64 + 1)) - n_bound as i64
}

#[derive(Debug, Clone)]
pub struct TrajectoryBasis {
    data: Trajectory,
    horizon: usize,
    n_bound: usize,
    hu: HankelMatrix,
    hy: HankelMatrix,
    pe: PeReport,
    stacked: DMatrix<f64>,
    solver: MinNormSolver,
}

impl TrajectoryBasis {
    pub fn new(data: Trajectory, horizon: usize, n_bound: usize) -> Result<Self> {
        Self::with_rank_tolerance(data, horizon, n_bound, DEFAULT_RANK_TOLERANCE)
    }

    pub fn with_rank_tolerance(
        data: Trajectory,
        horizon: usize,
        n_bound: usize,
        rank_tolerance: f64,
    ) -> Result<Self> {
        if n_bound == 0 {
            return Err(Error::Argument("order bound must be at least 1".into()));
        }
        let hu = hankel(data.u(), horizon)?;
        let hy = hankel(data.y(), horizon)?;
        let pe = is_persistently_exciting(data.u(), horizon + n_bound, rank_tolerance)?;
        let stacked = linalg::vstack(&[hu.entries(), hy.entries()]);
        let solver = MinNormSolver::new(stacked.clone(), rank_tolerance);
        Ok(Self {
            data,
            horizon,
            n_bound,
            hu,
            hy,
            pe,
            stacked,
            solver,
        })
    }

    pub fn data(&self) -> &Trajectory {
        &self.data
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_bound(&self) -> usize {
        self.n_bound
    }

    pub fn hu(&self) -> &HankelMatrix {
        &self.hu
    }

    pub fn hy(&self) -> &HankelMatrix {
        &self.hy
    }

    pub fn pe_verified(&self) -> bool {
        self.pe.persistently_exciting
    }

    pub fn pe_report(&self) -> &PeReport {
        &self.pe
    }

    /// `[H_L(u); H_L(y)]`.
    pub fn stacked(&self) -> &DMatrix<f64> {
        &self.stacked
    }

    /// Number of Hankel columns, `N - L + 1`.
    pub fn num_columns(&self) -> usize {
        self.hu.ncols()
    }

    /// Numerical rank of `[H_L(u); H_L(y)]`; equals `m L + n` for exciting data.
    pub fn stacked_rank(&self) -> usize {
        self.solver.rank()
    }

    fn pe_diagnostic(&self) -> Option<Diagnostic> {
        (!self.pe.persistently_exciting).then(|| Diagnostic::NotPersistentlyExciting {
            required_order: self.horizon + self.n_bound,
            rank: self.pe.numerical_rank,
            required_rank: self.pe.required_rank,
        })
    }

    pub(crate) fn check_alpha(&self, alpha: &AlphaVector) -> Result<()> {
        if alpha.len() != self.num_columns() {
            return Err(Error::Dimension(format!(
                "alpha has {} entries, basis has {} columns",
                alpha.len(),
                self.num_columns()
            )));
        }
        Ok(())
    }
}

/// `(H_L(u) alpha, H_L(y) alpha)` unstacked into a length-`L` trajectory.
pub fn realize(basis: &TrajectoryBasis, alpha: &AlphaVector) -> Result<Trajectory> {
    basis.check_alpha(alpha)?;
    let u = basis.hu.entries() * alpha.as_vector();
    let y = basis.hy.entries() * alpha.as_vector();
    Trajectory::new(
        Signal::from_stacked(basis.data.input_dim(), &u)?,
        Signal::from_stacked(basis.data.output_dim(), &y)?,
    )
}

#[derive(Debug, Clone)]
pub struct Membership {
    pub is_member: bool,
    pub alpha: AlphaVector,
    /// `|| [H_L(u); H_L(y)] alpha - [u; y] ||_2` at the least-squares optimum.
    pub residual: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Least-squares test of whether `candidate` lies in the span of the data windows.
/// Accepts when `residual <= residual_tolerance * max(1, ||[u; y]||)`.
pub fn membership(
    basis: &TrajectoryBasis,
    candidate: &Trajectory,
    residual_tolerance: f64,
) -> Result<Membership> {
    if candidate.len() != basis.horizon {
        return Err(Error::Dimension(format!(
            "candidate length {} differs from horizon {}",
            candidate.len(),
            basis.horizon
        )));
    }
    if candidate.input_dim() != basis.data.input_dim()
        || candidate.output_dim() != basis.data.output_dim()
    {
        return Err(Error::Dimension(
            "candidate signal dimensions differ from the data".into(),
        ));
    }
    let target = candidate.stacked();
    let alpha = basis.solver.solve(&target)?;
    let residual = (&basis.stacked * &alpha - &target).norm();
    let is_member = residual <= residual_tolerance * target.norm().max(1.0);
    Ok(Membership {
        is_member,
        alpha: AlphaVector(alpha),
        residual,
        diagnostics: basis.pe_diagnostic().into_iter().collect(),
    })
}

/// Maximum deviation tolerated by [`state_consistency_check`].
pub const STATE_CONSISTENCY_TOLERANCE: f64 = 1e-6;

/// Checks, in the realization of a known linear `model`, that the state sequence of
/// `realize(basis, alpha)` equals `sum_i alpha_i x_[i, L-1+i]` where `x` is the state
/// sequence of the data record. Both initial states are reconstructed from the first
/// `n` samples. Returns the maximum absolute deviation alongside the verdict.
pub fn state_consistency_check(
    basis: &TrajectoryBasis,
    alpha: &AlphaVector,
    model: &StateSpaceModel,
) -> Result<(bool, f64)> {
    basis.check_alpha(alpha)?;
    let n = model.order();
    if basis.horizon < n {
        return Err(Error::Argument(format!(
            "horizon {} is shorter than model order {n}; realized states are not unique",
            basis.horizon
        )));
    }
    let data_x0 = oracle::reconstruct_initial_state(model, &basis.data)?.x0;
    let data_states = oracle::simulate(model, &data_x0, basis.data.u())?.states;
    let data_states = data_states.segment(0, basis.data.len() - 1)?;
    let expected = hankel(&data_states, basis.horizon)?.entries() * alpha.as_vector();

    let realized = realize(basis, alpha)?;
    let x0 = oracle::reconstruct_initial_state(model, &realized)?.x0;
    let states = oracle::simulate(model, &x0, realized.u())?.states;
    let actual = states.window(0, basis.horizon - 1)?;

    let deviation = (actual - expected).amax();
    Ok((deviation <= STATE_CONSISTENCY_TOLERANCE, deviation))
}
