//! Weaving several length-`L` trajectory segments into one longer trajectory.
//!
//! Consecutive segments must agree on an overlap of `n` samples, which forces the
//! internal states to line up at each junction. With `xi` segments the woven
//! trajectory has length `xi * L - (xi - 1) * n`, so horizons beyond the limit imposed
//! by persistence of excitation become reachable from the same data record.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, MinNormSolver};
use crate::trajcore::{Signal, Trajectory, DEFAULT_RANK_TOLERANCE};
use crate::trajspace::{realize, AlphaVector, Diagnostic, TrajectoryBasis};

/// Default relative tolerance for junction agreement in [`assemble`].
pub const DEFAULT_JUNCTION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct WeavePlan<'a> {
    basis: &'a TrajectoryBasis,
    segments: usize,
    junction_tolerance: f64,
}

impl<'a> WeavePlan<'a> {
    pub fn new(basis: &'a TrajectoryBasis, segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::Argument("at least one segment is required".into()));
        }
        if basis.horizon() <= basis.n_bound() {
            return Err(Error::Argument(format!(
                "segment length {} must exceed the overlap {}",
                basis.horizon(),
                basis.n_bound()
            )));
        }
        Ok(Self {
            basis,
            segments,
            junction_tolerance: DEFAULT_JUNCTION_TOLERANCE,
        })
    }

    /// Plan whose segment count is inferred from the target length, if it fits exactly.
    pub fn for_length(basis: &'a TrajectoryBasis, woven_len: usize) -> Result<Self> {
        let (l, n) = (basis.horizon(), basis.n_bound());
        if l <= n || woven_len < l || !(woven_len - n).is_multiple_of(l - n) {
            return Err(Error::Dimension(format!(
                "length {woven_len} is not of the form xi*{l} - (xi-1)*{n}"
            )));
        }
        Self::new(basis, (woven_len - n) / (l - n))
    }

    pub fn with_junction_tolerance(mut self, tolerance: f64) -> Self {
        self.junction_tolerance = tolerance;
        self
    }

    pub fn basis(&self) -> &TrajectoryBasis {
        self.basis
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// `xi * L + (1 - xi) * n`.
    pub fn woven_len(&self) -> usize {
        let (l, n) = (self.basis.horizon(), self.basis.n_bound());
        self.segments * l - (self.segments - 1) * n
    }

    fn overlap(&self) -> usize {
        self.basis.n_bound()
    }

    /// Global time at which segment `s` (zero-based) starts.
    fn segment_start(&self, s: usize) -> usize {
        s * (self.basis.horizon() - self.overlap())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeaveCoefficients {
    pub alphas: Vec<AlphaVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionReport {
    pub satisfied: bool,
    /// One entry per junction, `|| tail_n(segment i) - head_n(segment i+1) ||_2`.
    pub residuals: Vec<f64>,
}

impl JunctionReport {
    pub fn worst(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn check_coefficients(plan: &WeavePlan<'_>, coeffs: &WeaveCoefficients) -> Result<()> {
    if coeffs.alphas.len() != plan.segments {
        return Err(Error::Dimension(format!(
            "{} coefficient vectors supplied for {} segments",
            coeffs.alphas.len(),
            plan.segments
        )));
    }
    coeffs
        .alphas
        .iter()
        .try_for_each(|a| plan.basis.check_alpha(a))
}

/// Rows of `[H(u); H(y)]` restricted to the block rows `first..first+count`,
/// input part stacked above output part.
fn block_rows_uy(basis: &TrajectoryBasis, first: usize, count: usize) -> DMatrix<f64> {
    linalg::vstack(&[
        &basis.hu().block_rows(first, count),
        &basis.hy().block_rows(first, count),
    ])
}

/// Checks that segment `i` ends on the same `n` samples that segment `i + 1` starts
/// with, for every junction. Each junction passes when its residual is at most
/// `tolerance * max(1, ||tail||)`.
pub fn check_weave_constraints(
    plan: &WeavePlan<'_>,
    coeffs: &WeaveCoefficients,
    tolerance: f64,
) -> Result<JunctionReport> {
    check_coefficients(plan, coeffs)?;
    let (l, n) = (plan.basis.horizon(), plan.overlap());
    let tail = block_rows_uy(plan.basis, l - n, n);
    let head = block_rows_uy(plan.basis, 0, n);
    let mut satisfied = true;
    let residuals = coeffs
        .alphas
        .windows(2)
        .map(|pair| {
            let left = &tail * pair[0].as_vector();
            let right = &head * pair[1].as_vector();
            let r = (&left - right).norm();
            satisfied &= r <= tolerance * left.norm().max(1.0);
            r
        })
        .collect();
    Ok(JunctionReport {
        satisfied,
        residuals,
    })
}

/// Stitches the realized segments: the first contributes all `L` samples, every later
/// one contributes its samples `n..L-1`.
pub fn assemble(plan: &WeavePlan<'_>, coeffs: &WeaveCoefficients) -> Result<Trajectory> {
    let report = check_weave_constraints(plan, coeffs, plan.junction_tolerance)?;
    if !report.satisfied {
        return Err(Error::Weave {
            worst_residual: report.worst(),
        });
    }
    let n = plan.overlap();
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (s, alpha) in coeffs.alphas.iter().enumerate() {
        let seg = realize(plan.basis, alpha)?;
        let skip = if s == 0 { 0 } else { n };
        u.extend_from_slice(&seg.u().as_slice()[skip * seg.input_dim()..]);
        y.extend_from_slice(&seg.y().as_slice()[skip * seg.output_dim()..]);
    }
    Trajectory::new(
        Signal::new(plan.basis.data().input_dim(), u)?,
        Signal::new(plan.basis.data().output_dim(), y)?,
    )
}

#[derive(Debug, Clone)]
pub struct WeaveSolution {
    pub coeffs: WeaveCoefficients,
    /// Norm of the residual of the full stacked system (assembly and junction rows).
    pub residual: f64,
    /// `residual <= tolerance * max(1, ||[u; y]||)`.
    pub is_trajectory: bool,
    pub diagnostics: Vec<Diagnostic>,
}

/// Finds segment coefficients reproducing `target` by solving the assembly equations
/// and all junction constraints together as one least-squares problem.
pub fn solve_weave(
    plan: &WeavePlan<'_>,
    target: &Trajectory,
    tolerance: f64,
) -> Result<WeaveSolution> {
    let basis = plan.basis;
    let total = plan.woven_len();
    if target.len() != total {
        return Err(Error::Dimension(format!(
            "target length {} differs from woven length {total}",
            target.len()
        )));
    }
    let (m, p) = (basis.data().input_dim(), basis.data().output_dim());
    if target.input_dim() != m || target.output_dim() != p {
        return Err(Error::Dimension(
            "target signal dimensions differ from the data".into(),
        ));
    }
    let (l, n) = (basis.horizon(), plan.overlap());
    let cols = basis.num_columns();
    let xi = plan.segments;
    let hu = basis.hu().entries();
    let hy = basis.hy().entries();
    let junction_rows = (xi - 1) * n * (m + p);
    let mut a = DMatrix::zeros((m + p) * total + junction_rows, xi * cols);

    for s in 0..xi {
        let c0 = s * cols;
        let first_local = if s == 0 { 0 } else { n };
        let t0 = plan.segment_start(s) + first_local;
        let k = l - first_local;
        a.view_mut((m * t0, c0), (m * k, cols))
            .copy_from(&hu.rows(m * first_local, m * k));
        a.view_mut((m * total + p * t0, c0), (p * k, cols))
            .copy_from(&hy.rows(p * first_local, p * k));
    }
    let tail = block_rows_uy(basis, l - n, n);
    let head = block_rows_uy(basis, 0, n);
    let jr = n * (m + p);
    for j in 0..xi - 1 {
        let r0 = (m + p) * total + j * jr;
        a.view_mut((r0, j * cols), (jr, cols)).copy_from(&tail);
        a.view_mut((r0, (j + 1) * cols), (jr, cols))
            .copy_from(&(-&head));
    }

    let mut b = DVector::zeros(a.nrows());
    b.rows_mut(0, m * total)
        .copy_from_slice(target.u().as_slice());
    b.rows_mut(m * total, p * total)
        .copy_from_slice(target.y().as_slice());

    let solver = MinNormSolver::new(a.clone(), DEFAULT_RANK_TOLERANCE);
    let x = solver.solve(&b)?;
    let residual = (&a * &x - &b).norm();
    let alphas = (0..xi)
        .map(|s| AlphaVector::new(x.rows(s * cols, cols).into_owned()))
        .collect();
    let mut diagnostics = Vec::new();
    if !basis.pe_verified() {
        let r = basis.pe_report();
        diagnostics.push(Diagnostic::NotPersistentlyExciting {
            required_order: l + n,
            rank: r.numerical_rank,
            required_rank: r.required_rank,
        });
    }
    Ok(WeaveSolution {
        coeffs: WeaveCoefficients { alphas },
        residual,
        is_trajectory: residual <= tolerance * b.norm().max(1.0),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{example1_linear_model, simulate, uniform_signal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const L: usize = 12;
    const N_BOUND: usize = 4;

    fn basis(seed: u64) -> TrajectoryBasis {
        let model = example1_linear_model();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = uniform_signal(&mut rng, 1, 150, -1.0, 1.0).unwrap();
        let traj = simulate(&model, &DVector::zeros(4), &u)
            .unwrap()
            .trajectory(&u)
            .unwrap();
        TrajectoryBasis::new(traj, L, N_BOUND).unwrap()
    }

    #[test]
    fn plan_lengths() {
        let b = basis(1);
        assert_eq!(WeavePlan::new(&b, 1).unwrap().woven_len(), L);
        assert_eq!(
            WeavePlan::new(&b, 3).unwrap().woven_len(),
            3 * L - 2 * N_BOUND
        );
        assert_eq!(
            WeavePlan::for_length(&b, 2 * L - N_BOUND)
                .unwrap()
                .segments(),
            2
        );
        assert!(WeavePlan::for_length(&b, 2 * L).is_err());
        assert!(WeavePlan::new(&b, 0).is_err());
    }

    #[test]
    fn overlap_must_be_shorter_than_segment() {
        let b = basis(1);
        let short = TrajectoryBasis::new(b.data().clone(), N_BOUND, N_BOUND).unwrap();
        assert!(WeavePlan::new(&short, 2).is_err());
    }

    #[test]
    fn single_segment_is_vacuous_and_equals_realize() {
        let b = basis(2);
        let plan = WeavePlan::new(&b, 1).unwrap();
        let alpha = AlphaVector::unit(b.num_columns(), 5);
        let coeffs = WeaveCoefficients {
            alphas: vec![alpha.clone()],
        };
        let rep = check_weave_constraints(&plan, &coeffs, 1e-12).unwrap();
        assert!(rep.satisfied && rep.residuals.is_empty());
        assert_eq!(
            assemble(&plan, &coeffs).unwrap(),
            realize(&b, &alpha).unwrap()
        );
    }

    #[test]
    fn consecutive_windows_reproduce_the_record() {
        let b = basis(3);
        let plan = WeavePlan::new(&b, 2).unwrap();
        let c = b.num_columns();
        let coeffs = WeaveCoefficients {
            alphas: vec![AlphaVector::unit(c, 0), AlphaVector::unit(c, L - N_BOUND)],
        };
        let rep = check_weave_constraints(&plan, &coeffs, 1e-12).unwrap();
        assert!(rep.satisfied);
        assert_eq!(rep.residuals, vec![0.0]);
        let woven = assemble(&plan, &coeffs).unwrap();
        assert_eq!(woven, b.data().segment(0, 2 * L - N_BOUND - 1).unwrap());
    }

    #[test]
    fn mismatched_windows_fail_the_junction() {
        let b = basis(4);
        let plan = WeavePlan::new(&b, 2).unwrap();
        let c = b.num_columns();
        let coeffs = WeaveCoefficients {
            alphas: vec![AlphaVector::unit(c, 0), AlphaVector::unit(c, 0)],
        };
        let u = b.data().u();
        let expected_u =
            (u.window(L - N_BOUND, L - 1).unwrap() - u.window(0, N_BOUND - 1).unwrap()).norm();
        let rep = check_weave_constraints(&plan, &coeffs, 1e-8).unwrap();
        assert!(!rep.satisfied);
        assert!(rep.residuals[0] >= expected_u && expected_u > 0.0);
        assert!(matches!(assemble(&plan, &coeffs), Err(Error::Weave { .. })));
        let wrong_count = WeaveCoefficients {
            alphas: vec![AlphaVector::unit(c, 0)],
        };
        assert!(check_weave_constraints(&plan, &wrong_count, 1e-8).is_err());
    }

    #[test]
    fn solve_recovers_data_prefix() {
        let b = basis(5);
        let plan = WeavePlan::new(&b, 3).unwrap();
        let target = b.data().segment(0, plan.woven_len() - 1).unwrap();
        let sol = solve_weave(&plan, &target, 1e-8).unwrap();
        assert!(sol.residual <= 1e-10, "residual {}", sol.residual);
        assert!(sol.is_trajectory);
        let woven = assemble(&plan, &sol.coeffs).unwrap();
        assert!((woven.stacked() - target.stacked()).amax() < 1e-8);
    }

    #[test]
    fn corrupted_target_is_rejected() {
        let b = basis(6);
        let plan = WeavePlan::new(&b, 2).unwrap();
        let target = b.data().segment(10, 10 + plan.woven_len() - 1).unwrap();
        let mut y = target.y().as_slice().to_vec();
        y[15] += 0.5;
        let bad = Trajectory::new(target.u().clone(), Signal::from_scalars(&y).unwrap()).unwrap();
        let sol = solve_weave(&plan, &bad, 1e-8).unwrap();
        assert!(!sol.is_trajectory);
        assert!(solve_weave(&plan, &target.segment(0, 5).unwrap(), 1e-8).is_err());
    }
}
