//! Model-based ground truth: state-space simulation of LTI, Hammerstein, Wiener and
//! Hammerstein-Wiener systems, measurement-noise injection and initial-state
//! reconstruction. Every data-driven routine in this crate is checked against it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::MinNormSolver;
use crate::trajcore::{Signal, Trajectory, DEFAULT_RANK_TOLERANCE};

type VectorFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A static (memoryless) map applied to the input before, or the output after,
/// the linear block.
#[derive(Clone)]
pub enum StaticMap {
    Identity,
    /// Applies the same scalar function to every component.
    Elementwise {
        name: String,
        f: ScalarFn,
    },
    Vector {
        name: String,
        input_dim: usize,
        output_dim: usize,
        f: VectorFn,
    },
}

impl StaticMap {
    pub fn elementwise<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        StaticMap::Elementwise {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn vector<F>(name: impl Into<String>, input_dim: usize, output_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        StaticMap::Vector {
            name: name.into(),
            input_dim,
            output_dim,
            f: Arc::new(f),
        }
    }

    pub fn sin() -> Self {
        Self::elementwise("sin", f64::sin)
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, StaticMap::Identity)
    }

    pub fn name(&self) -> &str {
        match self {
            StaticMap::Identity => "identity",
            StaticMap::Elementwise { name, .. } | StaticMap::Vector { name, .. } => name,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            StaticMap::Identity => x.to_vec(),
            StaticMap::Elementwise { f, .. } => x.iter().map(|&v| f(v)).collect(),
            StaticMap::Vector { f, .. } => f(x),
        }
    }

    /// `(input_dim, output_dim)` given the dimension on the linear side.
    fn dims_around(&self, linear_side: usize, linear_is_output: bool) -> Result<(usize, usize)> {
        match self {
            StaticMap::Identity | StaticMap::Elementwise { .. } => Ok((linear_side, linear_side)),
            StaticMap::Vector {
                name,
                input_dim,
                output_dim,
                ..
            } => {
                let matches = if linear_is_output {
                    *output_dim == linear_side
                } else {
                    *input_dim == linear_side
                };
                if !matches {
                    return Err(Error::Dimension(format!(
                        "static map '{name}' ({input_dim} -> {output_dim}) does not fit linear block dimension {linear_side}"
                    )));
                }
                Ok((*input_dim, *output_dim))
            }
        }
    }
}

impl fmt::Debug for StaticMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StaticMap::Vector {
                name,
                input_dim,
                output_dim,
                ..
            } => write!(f, "StaticMap::Vector({name}: {input_dim} -> {output_dim})"),
            other => write!(f, "StaticMap({})", other.name()),
        }
    }
}

/// `x_{k+1} = A x_k + B psi(u_k)`, `y_k = Phi(C x_k + D psi(u_k))`.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    input_map: StaticMap,
    output_map: StaticMap,
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::Argument("state dimension must be at least 1".into()));
        }
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A is {}x{}, must be square",
                n,
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "B is {}x{}, expected {n}xm",
                b.nrows(),
                b.ncols()
            )));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "C is {}x{}, expected px{n}",
                c.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "D is {}x{}, expected {}x{}",
                d.nrows(),
                d.ncols(),
                c.nrows(),
                b.ncols()
            )));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            input_map: StaticMap::Identity,
            output_map: StaticMap::Identity,
        })
    }

    pub fn with_input_map(mut self, map: StaticMap) -> Result<Self> {
        map.dims_around(self.b.ncols(), true)?;
        self.input_map = map;
        Ok(self)
    }

    pub fn with_output_map(mut self, map: StaticMap) -> Result<Self> {
        map.dims_around(self.c.nrows(), false)?;
        self.output_map = map;
        Ok(self)
    }

    /// The same linear block with both static maps replaced by the identity.
    pub fn linear_part(&self) -> Self {
        Self {
            input_map: StaticMap::Identity,
            output_map: StaticMap::Identity,
            ..self.clone()
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn input_map(&self) -> &StaticMap {
        &self.input_map
    }
    pub fn output_map(&self) -> &StaticMap {
        &self.output_map
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Dimension `m` of the external input.
    pub fn input_dim(&self) -> usize {
        // dims validated in with_input_map
        self.input_map
            .dims_around(self.b.ncols(), true)
            .map(|d| d.0)
            .unwrap_or(0)
    }

    /// Dimension `p` of the external output.
    pub fn output_dim(&self) -> usize {
        self.output_map
            .dims_around(self.c.nrows(), false)
            .map(|d| d.1)
            .unwrap_or(0)
    }

    pub fn has_identity_maps(&self) -> bool {
        self.input_map.is_identity() && self.output_map.is_identity()
    }
}

/// Output and state sequences of a simulation run. `states` has `N + 1` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub y: Signal,
    pub states: Signal,
}

impl Simulation {
    pub fn trajectory(&self, u: &Signal) -> Result<Trajectory> {
        Trajectory::new(u.clone(), self.y.clone())
    }
}

pub fn simulate(model: &StateSpaceModel, x0: &DVector<f64>, u: &Signal) -> Result<Simulation> {
    let n = model.order();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "initial state has dimension {}, model order is {n}",
            x0.len()
        )));
    }
    if u.dim() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "input has dimension {}, model expects {}",
            u.dim(),
            model.input_dim()
        )));
    }
    let mut x = x0.clone();
    let mut states = Vec::with_capacity(n * (u.len() + 1));
    let mut ys = Vec::with_capacity(model.output_dim() * u.len());
    states.extend_from_slice(x.as_slice());
    for uk in u.iter() {
        let v = DVector::from_vec(model.input_map.apply(uk));
        if v.len() != model.b.ncols() {
            return Err(Error::Dimension(format!(
                "input map produced dimension {}, B expects {}",
                v.len(),
                model.b.ncols()
            )));
        }
        let s = &model.c * &x + &model.d * &v;
        ys.extend(model.output_map.apply(s.as_slice()));
        x = &model.a * &x + &model.b * &v;
        states.extend_from_slice(x.as_slice());
    }
    Ok(Simulation {
        y: Signal::new(model.output_dim(), ys)?,
        states: Signal::new(n, states)?,
    })
}

/// The fourth-order Hammerstein system with `psi(u) = sin(u)` used as the running
/// example for kernel-based data-driven simulation.
pub fn example1_model() -> StateSpaceModel {
    example1_linear_model()
        .with_input_map(StaticMap::sin())
        .expect("scalar map fits scalar input")
}

/// [`example1_model`] without its input nonlinearity.
pub fn example1_linear_model() -> StateSpaceModel {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.4, -0.3, 0.0, 0.1,
        -0.3, 0.0, 0.8, -0.1,
        0.1, -0.7, -0.4, 0.0,
        0.2, -0.5, 0.5, 0.4,
    ]);
    let b = DMatrix::from_column_slice(4, 1, &[0.0, -1.0, 1.4, 0.0]);
    let c = DMatrix::from_row_slice(1, 4, &[-0.7, 0.0, -2.0, 0.4]);
    let d = DMatrix::from_element(1, 1, 0.2);
    StateSpaceModel::new(a, b, c, d).expect("example matrices are consistent")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseDistribution {
    /// Uniform on `[-1, 1]`.
    #[default]
    Uniform,
    StandardNormal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    ratio: f64,
    seed: u64,
    distribution: NoiseDistribution,
}

impl NoiseSpec {
    pub fn new(ratio: f64, seed: u64, distribution: NoiseDistribution) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 0.0) {
            return Err(Error::Argument(format!(
                "noise ratio must be finite and nonnegative, got {ratio}"
            )));
        }
        Ok(Self {
            ratio,
            seed,
            distribution,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn distribution(&self) -> NoiseDistribution {
        self.distribution
    }
}

/// Returns `y_k * (1 + ratio * eta_k)` componentwise with `eta` i.i.d. from the
/// configured distribution, seeded deterministically.
pub fn add_multiplicative_noise(y: &Signal, spec: &NoiseSpec) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = y
        .as_slice()
        .iter()
        .map(|&v| {
            let eta: f64 = match spec.distribution {
                NoiseDistribution::Uniform => rng.random_range(-1.0..=1.0),
                NoiseDistribution::StandardNormal => rng.sample(StandardNormal),
            };
            v * (1.0 + spec.ratio * eta)
        })
        .collect();
    Signal::new(y.dim(), values).expect("same shape as input")
}

/// Signal of `len` samples with every component i.i.d. uniform on `[lo, hi]`.
pub fn uniform_signal<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    len: usize,
    lo: f64,
    hi: f64,
) -> Result<Signal> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::Argument(format!(
            "empty sampling interval [{lo}, {hi}]"
        )));
    }
    let values = (0..dim * len).map(|_| rng.random_range(lo..=hi)).collect();
    Signal::new(dim, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub x0: DVector<f64>,
    /// Euclidean norm of the stacked output mismatch over the reconstruction window.
    pub residual: f64,
}

/// Least-squares initial state from the first `n` samples of `traj`.
pub fn reconstruct_initial_state(
    model: &StateSpaceModel,
    traj: &Trajectory,
) -> Result<InitialState> {
    reconstruct_initial_state_over(model, traj, model.order())
}

/// Least-squares initial state from the first `window` samples of `traj`:
/// stacks `C A^k x0 = y_k - (zero-state response)_k` for `k < window`.
pub fn reconstruct_initial_state_over(
    model: &StateSpaceModel,
    traj: &Trajectory,
    window: usize,
) -> Result<InitialState> {
    if !model.has_identity_maps() {
        return Err(Error::Argument(
            "initial-state reconstruction requires a linear model (identity maps)".into(),
        ));
    }
    let n = model.order();
    if window < 1 || traj.len() < window {
        return Err(Error::Dimension(format!(
            "reconstruction window {window} invalid for trajectory of length {}",
            traj.len()
        )));
    }
    if traj.output_dim() != model.output_dim() || traj.input_dim() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "trajectory dims (m={}, p={}) do not match model (m={}, p={})",
            traj.input_dim(),
            traj.output_dim(),
            model.input_dim(),
            model.output_dim()
        )));
    }
    let p = model.output_dim();
    let head = traj.segment(0, window - 1)?;
    let forced = simulate(model, &DVector::zeros(n), head.u())?;
    let rhs = head.y().stacked() - forced.y.stacked();

    let mut obs = DMatrix::zeros(p * window, n);
    let mut ca = model.c.clone();
    for k in 0..window {
        obs.rows_mut(k * p, p).copy_from(&ca);
        ca = &ca * &model.a;
    }
    let solver = MinNormSolver::new(obs.clone(), DEFAULT_RANK_TOLERANCE);
    if solver.rank() < n {
        return Err(Error::NotObservable {
            rank: solver.rank(),
            order: n,
            window,
        });
    }
    let x0 = solver.solve(&rhs)?;
    let residual = (&obs * &x0 - rhs).norm();
    Ok(InitialState { x0, residual })
}
