//! Data-driven simulation: predicting the response to a new input from a measured
//! trajectory and a short initial input-output window, with no identified model.
//!
//! With `H = [H_L(u); H_nu(y_[0, N-L+nu-1])]` and `w = [u_bar; y_bar_[0, nu-1]]`:
//!
//! 1. find `alpha` with `H alpha = w` (exactly, in least squares, or with a ridge
//!    penalty `lambda ||alpha||^2`);
//! 2. predict `y_bar = H_L(y) alpha`.
//!
//! # Kernelized form
//!
//! For a Hammerstein-Wiener system the same problem is posed in lifted coordinates
//! `v_k = psi(u_k)`, `z_k = phi(y_k)`. Write `Phi` for the lifted mixed Hankel matrix,
//! whose column `i` is `phi_i = [v_i; ...; v_{i+L-1}; z_i; ...; z_{i+nu-1}]`, and `w`
//! for the lifted target. Setting the gradient of
//! `||Phi alpha - w||^2 + lambda ||alpha||^2` to zero gives
//!
//! ```text
//! (Phi^T Phi + lambda I) alpha = Phi^T w
//! ```
//!
//! Both sides only involve inner products of lifted samples, which are kernel values:
//!
//! ```text
//! G[i][j] = (Phi^T Phi)[i][j] = sum_{t<L}  K_in(u_{i+t}, u_{j+t}) + sum_{t<nu} K_out(y_{i+t}, y_{j+t})
//! c[i]    = (Phi^T w)[i]      = sum_{t<L}  K_in(u_bar_t, u_{i+t}) + sum_{t<nu} K_out(y_bar_t, y_{i+t})
//! ```
//!
//! so `alpha` solves `(G + lambda I) alpha = c` and the residual follows from
//! `||Phi alpha - w||^2 = alpha^T G alpha - 2 c^T alpha + w^T w` with
//! `w^T w = sum_t K_in(u_bar_t, u_bar_t) + sum_{t<nu} K_out(y_bar_t, y_bar_t)`.
//! The prediction `z_bar = H_L(z) alpha` needs `z` explicitly, so the output kernel
//! must come from an explicit basis; with the linear output kernel `z = y`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lift::{lift_output, Kernel};
use crate::linalg::{self, MinNormSolver};
use crate::trajcore::{
    hankel, is_persistently_exciting, Signal, Trajectory, DEFAULT_RANK_TOLERANCE,
};
use crate::trajspace::{AlphaVector, Diagnostic};

/// Relative tolerance for agreement between the initial window's input and `u_bar`.
const INIT_INPUT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DDSimProblem {
    data: Trajectory,
    u_bar: Signal,
    init: Trajectory,
    lambda: f64,
    n_bound: Option<usize>,
    mixed: DMatrix<f64>,
    hy: DMatrix<f64>,
    target: DVector<f64>,
}

fn validate_inputs(data: &Trajectory, u_bar: &Signal, init: &Trajectory) -> Result<()> {
    let horizon = u_bar.len();
    let init_len = init.len();
    if init_len > horizon {
        return Err(Error::Argument(format!(
            "initial window length {init_len} exceeds horizon {horizon}"
        )));
    }
    if data.len() < horizon {
        return Err(Error::Dimension(format!(
            "data length {} is shorter than horizon {horizon}",
            data.len()
        )));
    }
    if u_bar.dim() != data.input_dim()
        || init.input_dim() != data.input_dim()
        || init.output_dim() != data.output_dim()
    {
        return Err(Error::Dimension(
            "signal dimensions differ from the data".into(),
        ));
    }
    let head = &u_bar.as_slice()[..init.u().as_slice().len()];
    let agrees = head
        .iter()
        .zip(init.u().as_slice())
        .all(|(a, b)| (a - b).abs() <= INIT_INPUT_TOLERANCE * a.abs().max(b.abs()).max(1.0));
    if !agrees {
        return Err(Error::Argument(
            "initial window input disagrees with the first samples of the new input".into(),
        ));
    }
    Ok(())
}

impl DDSimProblem {
    /// Horizon `L = u_bar.len()`, initial-window length `nu = init.len()`, no
    /// regularization.
    pub fn new(data: Trajectory, u_bar: Signal, init: Trajectory) -> Result<Self> {
        validate_inputs(&data, &u_bar, &init)?;
        let horizon = u_bar.len();
        let hu = hankel(data.u(), horizon)?;
        let hy_full = hankel(data.y(), horizon)?;
        let hy_init = hy_full.block_rows(0, init.len());
        let mixed = linalg::vstack(&[hu.entries(), &hy_init]);
        let target = linalg::vstack_vec(&[&u_bar.stacked(), &init.y().stacked()]);
        Ok(Self {
            data,
            u_bar,
            init,
            lambda: 0.0,
            n_bound: None,
            mixed,
            hy: hy_full.into_entries(),
            target,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Argument(format!(
                "regularization weight must be finite and nonnegative, got {lambda}"
            )));
        }
        self.lambda = lambda;
        Ok(self)
    }

    /// Enables the excitation and initial-window soundness diagnostics.
    pub fn with_order_bound(mut self, n_bound: usize) -> Self {
        self.n_bound = Some(n_bound);
        self
    }

    pub fn data(&self) -> &Trajectory {
        &self.data
    }
    pub fn u_bar(&self) -> &Signal {
        &self.u_bar
    }
    pub fn init(&self) -> &Trajectory {
        &self.init
    }
    pub fn horizon(&self) -> usize {
        self.u_bar.len()
    }
    pub fn init_len(&self) -> usize {
        self.init.len()
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `H_{L,nu}(u, y)`, shape `(m L + p nu) x (N - L + 1)`.
    pub fn mixed_hankel(&self) -> &DMatrix<f64> {
        &self.mixed
    }

    /// `w = [u_bar; y_bar_[0, nu-1]]`.
    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    fn diagnostics(&self) -> Result<Vec<Diagnostic>> {
        soundness_diagnostics(&self.data, self.horizon(), self.init_len(), self.n_bound)
    }

    fn result(&self, alpha: DVector<f64>, diagnostics: Vec<Diagnostic>) -> Result<DDSimResult> {
        let predicted = Signal::from_stacked(self.data.output_dim(), &(&self.hy * &alpha))?;
        let residual = (&self.mixed * &alpha - &self.target).norm();
        let alpha = AlphaVector::new(alpha);
        let objective = objective_value(self, &alpha)?;
        Ok(DDSimResult {
            alpha,
            predicted_output: predicted,
            lifted_output: None,
            residual,
            objective_value: objective,
            diagnostics,
        })
    }
}

fn soundness_diagnostics(
    data: &Trajectory,
    horizon: usize,
    init_len: usize,
    n_bound: Option<usize>,
) -> Result<Vec<Diagnostic>> {
    let Some(n) = n_bound else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let pe = is_persistently_exciting(data.u(), horizon + n, DEFAULT_RANK_TOLERANCE)?;
    if !pe.persistently_exciting {
        out.push(Diagnostic::NotPersistentlyExciting {
            required_order: horizon + n,
            rank: pe.numerical_rank,
            required_rank: pe.required_rank,
        });
    }
    if init_len < n {
        out.push(Diagnostic::ShortInitialWindow {
            init_len,
            n_bound: n,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DDSimResult {
    pub alpha: AlphaVector,
    /// `y_bar` over the whole horizon; the first `nu` samples reproduce the initial window.
    pub predicted_output: Signal,
    /// `z_bar = H_L(z) alpha` when the output was lifted through a non-identity basis.
    pub lifted_output: Option<Signal>,
    /// `|| H alpha - w ||_2` (in lifted coordinates for the kernel solver).
    pub residual: f64,
    pub objective_value: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Exact data-driven simulation: minimum-norm least-squares solution of
/// `H_{L,nu} alpha = w`, then `y_bar = H_L(y) alpha`.
pub fn ddsim_exact(
    data: &Trajectory,
    u_bar: &Signal,
    init: &Trajectory,
    n_bound: usize,
) -> Result<DDSimResult> {
    let problem =
        DDSimProblem::new(data.clone(), u_bar.clone(), init.clone())?.with_order_bound(n_bound);
    solve_min_norm(&problem)
}

fn solve_min_norm(problem: &DDSimProblem) -> Result<DDSimResult> {
    let solver = MinNormSolver::new(problem.mixed.clone(), DEFAULT_RANK_TOLERANCE);
    let alpha = solver.solve(&problem.target)?;
    problem.result(alpha, problem.diagnostics()?)
}

/// Ridge-regularized simulation, `argmin ||H alpha - w||^2 + lambda ||alpha||^2`.
///
/// For `lambda > 0` the normal equations are factored with Cholesky, on whichever of
/// `H^T H + lambda I` or `H H^T + lambda I` is smaller (the two give the same `alpha`).
/// `lambda = 0` falls back to the minimum-norm least-squares solution.
pub fn ddsim_regularized(problem: &DDSimProblem) -> Result<DDSimResult> {
    if problem.lambda == 0.0 {
        return solve_min_norm(problem);
    }
    let h = &problem.mixed;
    let alpha = if h.nrows() <= h.ncols() {
        let beta =
            linalg::solve_shifted_spd(&(h * h.transpose()), problem.lambda, &problem.target)?;
        h.tr_mul(&beta)
    } else {
        linalg::solve_shifted_spd(&h.tr_mul(h), problem.lambda, &h.tr_mul(&problem.target))?
    };
    problem.result(alpha, problem.diagnostics()?)
}

/// `||H alpha - w||^2 + lambda ||alpha||^2`.
pub fn objective_value(problem: &DDSimProblem, alpha: &AlphaVector) -> Result<f64> {
    let a = alpha.as_vector();
    if a.len() != problem.mixed.ncols() {
        return Err(Error::Dimension(format!(
            "alpha has {} entries, problem has {} columns",
            a.len(),
            problem.mixed.ncols()
        )));
    }
    Ok((&problem.mixed * a - &problem.target).norm_squared() + problem.lambda * a.norm_squared())
}

/// Maps a lifted output sample `z_k` back to `y_k`.
pub type OutputDecoder = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Configuration of the kernelized solver.
#[derive(Clone)]
pub struct KernelDDSim {
    pub input_kernel: Kernel,
    pub output_kernel: Kernel,
    pub lambda: f64,
    pub n_bound: Option<usize>,
    pub decoder: Option<OutputDecoder>,
    /// Relative eigenvalue cutoff for the `lambda = 0` pseudo-inverse of the Gram matrix.
    pub pinv_tolerance: Option<f64>,
}

impl std::fmt::Debug for KernelDDSim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelDDSim")
            .field("input_kernel", &self.input_kernel)
            .field("output_kernel", &self.output_kernel)
            .field("lambda", &self.lambda)
            .field("n_bound", &self.n_bound)
            .field("decoder", &self.decoder.is_some())
            .finish()
    }
}

impl KernelDDSim {
    pub fn new(input_kernel: Kernel, output_kernel: Kernel, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Argument(format!(
                "regularization weight must be finite and nonnegative, got {lambda}"
            )));
        }
        Ok(Self {
            input_kernel,
            output_kernel,
            lambda,
            n_bound: None,
            decoder: None,
            pinv_tolerance: None,
        })
    }

    pub fn with_order_bound(mut self, n_bound: usize) -> Self {
        self.n_bound = Some(n_bound);
        self
    }

    pub fn with_decoder(mut self, decoder: OutputDecoder) -> Self {
        self.decoder = Some(decoder);
        self
    }
}

/// Gram matrix and cross vector of the lifted mixed Hankel problem.
#[derive(Debug, Clone)]
pub struct KernelSystem {
    pub gram: DMatrix<f64>,
    pub cross: DVector<f64>,
    /// `w^T w` in lifted coordinates.
    pub target_norm_sq: f64,
}

/// Assembles `G`, `c` and `w^T w` from pointwise kernel evaluations.
pub fn kernel_system(
    data: &Trajectory,
    u_bar: &Signal,
    init: &Trajectory,
    input_kernel: &Kernel,
    output_kernel: &Kernel,
) -> Result<KernelSystem> {
    validate_inputs(data, u_bar, init)?;
    if data.input_dim() != 1 || data.output_dim() != 1 {
        return Err(Error::Dimension(
            "kernelized simulation supports scalar inputs and outputs only".into(),
        ));
    }
    let (horizon, init_len) = (u_bar.len(), init.len());
    let u = data.u().as_slice();
    let y = data.y().as_slice();
    let cols = data.len() - horizon + 1;

    let span_in = cols + horizon - 1;
    let k_in = DMatrix::from_fn(span_in, span_in, |a, b| input_kernel.eval(u[a], u[b]));
    let mut gram = DMatrix::zeros(cols, cols);
    for t in 0..horizon {
        gram += k_in.view((t, t), (cols, cols));
    }
    if init_len > 0 {
        let span_out = cols + init_len - 1;
        let k_out = DMatrix::from_fn(span_out, span_out, |a, b| output_kernel.eval(y[a], y[b]));
        for t in 0..init_len {
            gram += k_out.view((t, t), (cols, cols));
        }
    }

    let ub = u_bar.as_slice();
    let yb = init.y().as_slice();
    let cross = DVector::from_fn(cols, |i, _| {
        let a: f64 = (0..horizon)
            .map(|t| input_kernel.eval(ub[t], u[i + t]))
            .sum();
        let b: f64 = (0..init_len)
            .map(|t| output_kernel.eval(yb[t], y[i + t]))
            .sum();
        a + b
    });
    let target_norm_sq = ub.iter().map(|&v| input_kernel.eval(v, v)).sum::<f64>()
        + yb.iter().map(|&v| output_kernel.eval(v, v)).sum::<f64>();
    Ok(KernelSystem {
        gram,
        cross,
        target_norm_sq,
    })
}

/// Kernelized data-driven simulation for Hammerstein(-Wiener) systems with scalar
/// input and output. See the module documentation for the derivation.
pub fn ddsim_kernel(
    data: &Trajectory,
    u_bar: &Signal,
    init: &Trajectory,
    config: &KernelDDSim,
) -> Result<DDSimResult> {
    let lifted_out = match &config.output_kernel {
        k if k.is_linear() => None,
        Kernel::Explicit(basis) => {
            if config.decoder.is_none() {
                return Err(Error::UnsupportedRecovery(
                    "a non-identity output lifting needs a decoder to map lifted predictions back to outputs".into(),
                ));
            }
            Some(lift_output(data.y(), basis)?)
        }
        other => {
            return Err(Error::UnsupportedRecovery(format!(
                "output kernel {other:?} has no explicit basis, so lifted outputs cannot be formed"
            )))
        }
    };

    let sys = kernel_system(
        data,
        u_bar,
        init,
        &config.input_kernel,
        &config.output_kernel,
    )?;
    let cols = sys.gram.ncols();
    let alpha = if config.lambda > 0.0 {
        linalg::solve_shifted_spd(&sys.gram, config.lambda, &sys.cross)?
    } else {
        let tol = config.pinv_tolerance.unwrap_or_else(|| {
            (DEFAULT_RANK_TOLERANCE * DEFAULT_RANK_TOLERANCE).max(cols as f64 * f64::EPSILON)
        });
        linalg::pinv_solve_psd(&sys.gram, &sys.cross, tol)
    };

    let horizon = u_bar.len();
    let (predicted, lifted) = match lifted_out {
        None => {
            let hy = hankel(data.y(), horizon)?;
            (Signal::from_stacked(1, &(hy.entries() * &alpha))?, None)
        }
        Some(z) => {
            let hz = hankel(&z, horizon)?;
            let zbar = Signal::from_stacked(z.dim(), &(hz.entries() * &alpha))?;
            let decode = config.decoder.as_ref().expect("checked above");
            let y: Vec<f64> = zbar.iter().map(|zk| decode(zk)).collect();
            (Signal::from_scalars(&y)?, Some(zbar))
        }
    };

    let fit = alpha.dot(&(&sys.gram * &alpha)) - 2.0 * sys.cross.dot(&alpha) + sys.target_norm_sq;
    let fit = fit.max(0.0);
    let diagnostics = soundness_diagnostics(data, horizon, init.len(), config.n_bound)?;
    Ok(DDSimResult {
        objective_value: fit + config.lambda * alpha.norm_squared(),
        residual: fit.sqrt(),
        alpha: AlphaVector::new(alpha),
        predicted_output: predicted,
        lifted_output: lifted,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::{BasisFn, BasisSet};
    use crate::oracle::{example1_linear_model, example1_model, simulate, uniform_signal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear_data(n: usize, seed: u64) -> Trajectory {
        let model = example1_linear_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = uniform_signal(&mut rng, 1, n, -1.0, 1.0).unwrap();
        simulate(&model, &DVector::zeros(4), &u)
            .unwrap()
            .trajectory(&u)
            .unwrap()
    }

    #[test]
    fn data_window_is_reproduced() {
        let data = linear_data(200, 1);
        let window = data.segment(40, 69).unwrap();
        let init = window.segment(0, 3).unwrap();
        let r = ddsim_exact(&data, window.u(), &init, 4).unwrap();
        assert!(r.diagnostics.is_empty());
        assert!((r.predicted_output.stacked() - window.y().stacked()).amax() < 1e-9);
    }

    #[test]
    fn zero_input_zero_init_predicts_zero() {
        let data = linear_data(200, 2);
        let u = Signal::zeros(1, 30).unwrap();
        let init =
            Trajectory::new(Signal::zeros(1, 4).unwrap(), Signal::zeros(1, 4).unwrap()).unwrap();
        let r = ddsim_exact(&data, &u, &init, 4).unwrap();
        assert_eq!(r.predicted_output.stacked().amax(), 0.0);
        assert_eq!(r.objective_value, 0.0);
    }

    #[test]
    fn argument_errors() {
        let data = linear_data(100, 3);
        let u = Signal::zeros(1, 5).unwrap();
        let long_init =
            Trajectory::new(Signal::zeros(1, 6).unwrap(), Signal::zeros(1, 6).unwrap()).unwrap();
        assert!(matches!(
            ddsim_exact(&data, &u, &long_init, 4),
            Err(Error::Argument(_))
        ));
        let init = Trajectory::new(
            Signal::from_scalars(&[1.0, 0.0]).unwrap(),
            Signal::zeros(1, 2).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            ddsim_exact(&data, &u, &init, 4),
            Err(Error::Argument(_))
        ));
        let u2 = Signal::zeros(2, 5).unwrap();
        let init2 =
            Trajectory::new(Signal::zeros(2, 2).unwrap(), Signal::zeros(1, 2).unwrap()).unwrap();
        assert!(matches!(
            ddsim_exact(&data, &u2, &init2, 4),
            Err(Error::Dimension(_))
        ));
        let p = DDSimProblem::new(data, u, init.segment(0, 0).unwrap());
        assert!(p.is_err());
    }

    #[test]
    fn negative_lambda_rejected() {
        let data = linear_data(100, 4);
        let init = data.segment(0, 3).unwrap();
        let p = DDSimProblem::new(data.clone(), data.u().segment(0, 9).unwrap(), init).unwrap();
        assert!(p.clone().with_lambda(-1.0).is_err());
        assert!(p.with_lambda(f64::NAN).is_err());
    }

    #[test]
    fn short_initial_window_warns() {
        let data = linear_data(200, 5);
        let window = data.segment(10, 29).unwrap();
        let r = ddsim_exact(&data, window.u(), &window.segment(0, 1).unwrap(), 4).unwrap();
        assert!(r.diagnostics.iter().any(|d| matches!(
            d,
            Diagnostic::ShortInitialWindow {
                init_len: 2,
                n_bound: 4
            }
        )));
    }

    #[test]
    fn mixed_hankel_shape() {
        let data = linear_data(100, 6);
        let p = DDSimProblem::new(
            data.clone(),
            data.u().segment(0, 19).unwrap(),
            data.segment(0, 3).unwrap(),
        )
        .unwrap();
        assert_eq!(p.mixed_hankel().shape(), (20 + 4, 100 - 20 + 1));
        assert_eq!(p.target().len(), 24);
    }

    #[test]
    fn objective_at_zero_is_target_norm() {
        let data = linear_data(100, 7);
        let p = DDSimProblem::new(
            data.clone(),
            data.u().segment(3, 22).unwrap(),
            data.segment(3, 6).unwrap(),
        )
        .unwrap()
        .with_lambda(2.5)
        .unwrap();
        let v = objective_value(&p, &AlphaVector::zeros(81)).unwrap();
        assert!((v - p.target().norm_squared()).abs() < 1e-12);
        assert!(objective_value(&p, &AlphaVector::zeros(3)).is_err());
    }

    #[test]
    fn regularized_variants_agree() {
        let data = linear_data(60, 8);
        let window = data.segment(5, 14).unwrap();
        let p = DDSimProblem::new(data, window.u().clone(), window.segment(0, 3).unwrap()).unwrap();
        let exact = ddsim_regularized(&p).unwrap();
        let exact2 = ddsim_exact(p.data(), p.u_bar(), p.init(), 4).unwrap();
        assert!((exact.alpha.as_vector() - exact2.alpha.as_vector()).amax() < 1e-12);
        let heavy = ddsim_regularized(&p.clone().with_lambda(1e12).unwrap()).unwrap();
        assert!(heavy.alpha.as_vector().norm() <= 1e-6 * p.target().norm());
        assert!(heavy.predicted_output.stacked().amax() < 1e-6);
    }

    #[test]
    fn primal_and_dual_ridge_agree() {
        // Tall mixed matrix: few columns, so the primal branch runs.
        let data = linear_data(30, 9);
        let window = data.segment(0, 19).unwrap();
        let p = DDSimProblem::new(data, window.u().clone(), window.segment(0, 3).unwrap())
            .unwrap()
            .with_lambda(0.3)
            .unwrap();
        assert!(p.mixed_hankel().nrows() > p.mixed_hankel().ncols());
        let r = ddsim_regularized(&p).unwrap();
        let h = p.mixed_hankel();
        let dual =
            h.tr_mul(&linalg::solve_shifted_spd(&(h * h.transpose()), 0.3, p.target()).unwrap());
        assert!((r.alpha.as_vector() - dual).amax() < 1e-9);
    }

    #[test]
    fn kernel_rejects_unrecoverable_outputs() {
        let data = linear_data(80, 10);
        let w = data.segment(0, 9).unwrap();
        let se = Kernel::squared_exponential(1.0).unwrap();
        let cfg = KernelDDSim::new(se.clone(), se.clone(), 1.0).unwrap();
        assert!(matches!(
            ddsim_kernel(&data, w.u(), &w.segment(0, 3).unwrap(), &cfg),
            Err(Error::UnsupportedRecovery(_))
        ));
        let cfg = KernelDDSim::new(se, Kernel::explicit(BasisSet::monomials(2)), 1.0).unwrap();
        assert!(matches!(
            ddsim_kernel(&data, w.u(), &w.segment(0, 3).unwrap(), &cfg),
            Err(Error::UnsupportedRecovery(_))
        ));
        assert!(KernelDDSim::new(Kernel::linear(), Kernel::linear(), -1.0).is_err());
    }

    #[test]
    fn kernel_heavy_penalty_predicts_zero() {
        let data = linear_data(120, 11);
        let w = data.segment(20, 39).unwrap();
        let cfg = KernelDDSim::new(
            Kernel::squared_exponential(1.0).unwrap(),
            Kernel::linear(),
            1e12,
        )
        .unwrap();
        let r = ddsim_kernel(&data, w.u(), &w.segment(0, 3).unwrap(), &cfg).unwrap();
        assert!(r.predicted_output.stacked().amax() < 1e-6);
    }

    #[test]
    fn hammerstein_data_window_via_sin_kernel() {
        let model = example1_model();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let u = uniform_signal(&mut rng, 1, 150, -1.0, 1.0).unwrap();
        let data = simulate(&model, &DVector::zeros(4), &u)
            .unwrap()
            .trajectory(&u)
            .unwrap();
        let w = data.segment(30, 49).unwrap();
        let k_in = Kernel::explicit(BasisSet::new(vec![BasisFn::Sin]).unwrap());
        let cfg = KernelDDSim::new(k_in, Kernel::linear(), 1e-10)
            .unwrap()
            .with_order_bound(4);
        let r = ddsim_kernel(&data, w.u(), &w.segment(0, 3).unwrap(), &cfg).unwrap();
        assert!((r.predicted_output.stacked() - w.y().stacked()).amax() < 1e-6);
        assert!(r.residual < 1e-4);
    }

    #[test]
    fn wiener_output_with_decoder() {
        // y = s^3 with linear s; lifting by the cube root makes the output linear again.
        let model = example1_linear_model();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let u = uniform_signal(&mut rng, 1, 150, -1.0, 1.0).unwrap();
        let lin = simulate(&model, &DVector::zeros(4), &u).unwrap();
        let y = Signal::from_scalars(
            &lin.y
                .as_slice()
                .iter()
                .map(|s| s.powi(3))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let data = Trajectory::new(u, y).unwrap();
        let w = data.segment(40, 59).unwrap();
        let out =
            Kernel::explicit(BasisSet::new(vec![BasisFn::custom("cbrt", f64::cbrt)]).unwrap());
        let cfg = KernelDDSim::new(Kernel::linear(), out, 1e-10)
            .unwrap()
            .with_decoder(Arc::new(|z: &[f64]| z[0].powi(3)));
        let r = ddsim_kernel(&data, w.u(), &w.segment(0, 3).unwrap(), &cfg).unwrap();
        assert!(r.lifted_output.is_some());
        assert!((r.predicted_output.stacked() - w.y().stacked()).amax() < 1e-5);
    }
}
