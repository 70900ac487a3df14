//! Input/output liftings that make Hammerstein and Wiener systems linear in auxiliary
//! coordinates, and the kernels that stand in for them implicitly.
//!
//! A Hammerstein input `u_k` is lifted to `v_k = (psi_1(u_k), ..., psi_r(u_k))`, a
//! Wiener output `y_k` to `z_k = (phi_1(y_k), ..., phi_q(y_k))`. A kernel is the inner
//! product of two lifted samples, computed either from an explicit basis or in closed
//! form for bases that are never materialized (squared exponential).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::trajcore::Signal;

/// A scalar basis function.
#[derive(Clone)]
pub enum BasisFn {
    Identity,
    /// `u^k`; `Monomial(0)` is the constant 1.
    Monomial(u32),
    Sin,
    Cos,
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl BasisFn {
    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        BasisFn::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    /// Parses `identity`, `sin`, `cos`, `const` or `u^k`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim() {
            "identity" | "u" => Ok(BasisFn::Identity),
            "sin" => Ok(BasisFn::Sin),
            "cos" => Ok(BasisFn::Cos),
            "const" | "1" => Ok(BasisFn::Monomial(0)),
            other => other
                .strip_prefix("u^")
                .and_then(|k| k.parse::<u32>().ok())
                .map(BasisFn::Monomial)
                .ok_or_else(|| Error::Argument(format!("unknown basis function '{other}'"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            BasisFn::Identity => "identity".into(),
            BasisFn::Monomial(0) => "const".into(),
            BasisFn::Monomial(k) => format!("u^{k}"),
            BasisFn::Sin => "sin".into(),
            BasisFn::Cos => "cos".into(),
            BasisFn::Custom { name, .. } => name.clone(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            BasisFn::Identity => x,
            BasisFn::Monomial(k) => x.powi(*k as i32),
            BasisFn::Sin => x.sin(),
            BasisFn::Cos => x.cos(),
            BasisFn::Custom { f, .. } => f(x),
        }
    }
}

impl fmt::Debug for BasisFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BasisFn({})", self.name())
    }
}

/// Ordered, nonempty list of scalar basis functions.
#[derive(Debug, Clone)]
pub struct BasisSet {
    functions: Vec<BasisFn>,
}

impl BasisSet {
    pub fn new(functions: Vec<BasisFn>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::Argument(
                "basis set must contain at least one function".into(),
            ));
        }
        Ok(Self { functions })
    }

    pub fn identity() -> Self {
        Self {
            functions: vec![BasisFn::Identity],
        }
    }

    /// `{1, u, u^2, ..., u^degree}`.
    pub fn monomials(degree: u32) -> Self {
        Self {
            functions: (0..=degree).map(BasisFn::Monomial).collect(),
        }
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .map(|n| BasisFn::from_name(n.as_ref()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[BasisFn] {
        &self.functions
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.functions.as_slice(), [BasisFn::Identity])
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        self.functions.iter().map(|f| f.eval(x)).collect()
    }
}

fn lift_scalar(x: &Signal, basis: &BasisSet, what: &str) -> Result<Signal> {
    if x.dim() != 1 {
        return Err(Error::Dimension(format!(
            "{what} lifting is defined for scalar signals, got dimension {}",
            x.dim()
        )));
    }
    let values = x.as_slice().iter().flat_map(|&v| basis.eval(v)).collect();
    Signal::new(basis.len(), values)
}

/// `v_k = (psi_1(u_k), ..., psi_r(u_k))`.
pub fn lift_input(u: &Signal, basis: &BasisSet) -> Result<Signal> {
    lift_scalar(u, basis, "input")
}

/// `z_k = (phi_1(y_k), ..., phi_q(y_k))`.
pub fn lift_output(y: &Signal, basis: &BasisSet) -> Result<Signal> {
    lift_scalar(y, basis, "output")
}

#[derive(Debug, Clone)]
pub enum Kernel {
    /// `exp(-(x - x')^2 / (2 sigma^2))`.
    SquaredExponential { sigma: f64 },
    /// `(x x' + offset)^degree`.
    Polynomial { degree: u32, offset: f64 },
    /// Dot product of explicitly lifted samples.
    Explicit(BasisSet),
}

impl Kernel {
    pub fn squared_exponential(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Argument(format!(
                "kernel width must be positive, got {sigma}"
            )));
        }
        Ok(Kernel::SquaredExponential { sigma })
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::Argument(
                "polynomial kernel degree must be at least 1".into(),
            ));
        }
        if offset.is_nan() || offset < 0.0 {
            return Err(Error::Argument(format!(
                "polynomial kernel offset must be nonnegative, got {offset}"
            )));
        }
        Ok(Kernel::Polynomial { degree, offset })
    }

    pub fn explicit(basis: BasisSet) -> Self {
        Kernel::Explicit(basis)
    }

    /// `K(x, x') = x x'`, the kernel of the untransformed signal.
    pub fn linear() -> Self {
        Kernel::Explicit(BasisSet::identity())
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Kernel::Explicit(b) if b.is_identity())
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Kernel::SquaredExponential { sigma } => {
                let d = x1 - x2;
                (-(d * d) / (2.0 * sigma * sigma)).exp()
            }
            Kernel::Polynomial { degree, offset } => (x1 * x2 + offset).powi(*degree as i32),
            Kernel::Explicit(basis) => basis
                .functions()
                .iter()
                .map(|f| f.eval(x1) * f.eval(x2))
                .sum(),
        }
    }
}

pub fn kernel_eval(k: &Kernel, x1: f64, x2: f64) -> f64 {
    k.eval(x1, x2)
}

/// `G[i][j] = K(xs[i], ys[j])`.
pub fn gram(k: &Kernel, xs: &[f64], ys: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(xs.len(), ys.len(), |i, j| k.eval(xs[i], ys[j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_lifting_is_a_copy() {
        let u = Signal::from_scalars(&[0.5, -1.0, 2.0]).unwrap();
        assert_eq!(lift_input(&u, &BasisSet::identity()).unwrap(), u);
        assert_eq!(lift_output(&u, &BasisSet::identity()).unwrap(), u);
    }

    #[test]
    fn monomial_lifting() {
        let u = Signal::from_scalars(&[2.0]).unwrap();
        let v = lift_input(&u, &BasisSet::monomials(2)).unwrap();
        assert_eq!(v.dim(), 3);
        assert_eq!(v.at(0), &[1.0, 2.0, 4.0]);
        let z = lift_output(&u, &BasisSet::monomials(2)).unwrap();
        assert_eq!(z.at(0), &[1.0, 2.0, 4.0]);
    }

    #[test]
    fn sin_lifting() {
        let u = Signal::from_scalars(&[FRAC_PI_2]).unwrap();
        let basis = BasisSet::new(vec![BasisFn::Sin]).unwrap();
        assert_eq!(lift_input(&u, &basis).unwrap().at(0), &[1.0]);
        assert_eq!(lift_output(&u, &basis).unwrap().at(0), &[1.0]);
    }

    #[test]
    fn lifting_rejects_vector_signals() {
        let u = Signal::from_samples(&[[1.0, 2.0]]).unwrap();
        assert!(lift_input(&u, &BasisSet::identity()).is_err());
        assert!(BasisSet::new(vec![]).is_err());
    }

    #[test]
    fn basis_names_round_trip() {
        let b = BasisSet::from_names(&["identity", "const", "u^3", "sin", "cos"]).unwrap();
        let names: Vec<String> = b.functions().iter().map(BasisFn::name).collect();
        assert_eq!(names, ["identity", "const", "u^3", "sin", "cos"]);
        assert!(BasisFn::from_name("tanh").is_err());
    }

    #[test]
    fn squared_exponential_values() {
        let k = Kernel::squared_exponential(1.0).unwrap();
        for u in [-3.0, 0.0, 0.7, 12.0] {
            assert_eq!(k.eval(u, u), 1.0);
        }
        assert_relative_eq!(kernel_eval(&k, 0.0, 1.0), (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(kernel_eval(&k, 0.0, 1.0), 0.606531, epsilon = 1e-6);
        assert!(Kernel::squared_exponential(0.0).is_err());
        assert!(Kernel::squared_exponential(-1.0).is_err());
    }

    #[test]
    fn explicit_sin_kernel() {
        let k = Kernel::explicit(BasisSet::new(vec![BasisFn::Sin]).unwrap());
        assert_eq!(k.eval(FRAC_PI_2, FRAC_PI_2), 1.0);
        assert_eq!(k.eval(0.3, -1.1), 0.3f64.sin() * (-1.1f64).sin());
    }

    #[test]
    fn polynomial_kernel_validation() {
        assert!(Kernel::polynomial(0, 1.0).is_err());
        assert!(Kernel::polynomial(2, -1.0).is_err());
        let k = Kernel::polynomial(2, 1.0).unwrap();
        assert_eq!(k.eval(2.0, 3.0), 49.0);
    }

    #[test]
    fn gram_shapes_and_values() {
        let k = Kernel::squared_exponential(1.0).unwrap();
        let g = gram(&k, &[0.0], &[0.0, 1.0]);
        assert_eq!(g.shape(), (1, 2));
        assert_eq!(g[(0, 0)], 1.0);
        assert_relative_eq!(g[(0, 1)], (-0.5f64).exp(), epsilon = 1e-15);

        let xs = [0.1, -0.4, 2.0, 1.3];
        let g = gram(&k, &xs, &xs);
        assert_eq!(g, g.transpose());
        assert!(g.diagonal().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn explicit_gram_is_lifted_product() {
        let basis = BasisSet::monomials(1);
        let k = Kernel::explicit(basis.clone());
        let xs = [0.5, -2.0, 3.0];
        let ys = [1.0, 4.0];
        let lifted = |s: &[f64]| {
            let sig = lift_input(&Signal::from_scalars(s).unwrap(), &basis).unwrap();
            DMatrix::from_column_slice(basis.len(), s.len(), sig.as_slice())
        };
        let expected = lifted(&xs).transpose() * lifted(&ys);
        assert_relative_eq!(gram(&k, &xs, &ys), expected, epsilon = 1e-14);
    }
}
