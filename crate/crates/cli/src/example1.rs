//! End-to-end benchmark pipeline: the bundled Hammerstein system with a sine input nonlinearity,
//! noisy measured record, kernelized prediction for a fresh small-amplitude input.

use ddtraj::ddsim::{ddsim_kernel, KernelDDSim};
use ddtraj::lift::Kernel;
use ddtraj::oracle::{
    add_multiplicative_noise, example1_model, simulate, uniform_signal, NoiseDistribution,
    NoiseSpec,
};
use ddtraj::{Error, Result, Signal, Trajectory};
use nalgebra::DVector;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct Example1Settings {
    pub seed: u64,
    pub data_len: usize,
    /// Data input is uniform on `[-data_amplitude, data_amplitude]`.
    pub data_amplitude: f64,
    /// Test input is uniform on `[-test_amplitude, test_amplitude]`.
    pub test_amplitude: f64,
    pub horizon: usize,
    pub init_len: usize,
    pub lambda: f64,
    pub kernel: Kernel,
    pub noise_ratio: f64,
    pub noise_distribution: NoiseDistribution,
}

impl Default for Example1Settings {
    fn default() -> Self {
        Self {
            seed: 0,
            data_len: 1000,
            data_amplitude: 2.0,
            test_amplitude: 0.3,
            horizon: 50,
            init_len: 4,
            lambda: 10.0,
            kernel: Kernel::SquaredExponential { sigma: 1.0 },
            noise_ratio: 0.05,
            noise_distribution: NoiseDistribution::Uniform,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Example1Run {
    pub true_output: Signal,
    pub predicted_output: Signal,
    pub relative_rms: f64,
}

pub fn run(s: &Example1Settings) -> Result<Example1Run> {
    let model = example1_model();
    let x0 = DVector::zeros(model.order());
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);

    let u = uniform_signal(&mut rng, 1, s.data_len, -s.data_amplitude, s.data_amplitude)?;
    let y = simulate(&model, &x0, &u)?.y;
    let noise = NoiseSpec::new(s.noise_ratio, s.seed.wrapping_add(1), s.noise_distribution)?;
    let data = Trajectory::new(u, add_multiplicative_noise(&y, &noise))?;

    let u_bar = uniform_signal(&mut rng, 1, s.horizon, -s.test_amplitude, s.test_amplitude)?;
    let y_true = simulate(&model, &x0, &u_bar)?.y;
    if s.init_len == 0 {
        return Err(Error::Argument(
            "the initial window needs at least one sample".into(),
        ));
    }
    let init = Trajectory::new(u_bar.clone(), y_true.clone())?.segment(0, s.init_len - 1)?;

    let cfg = KernelDDSim::new(s.kernel.clone(), Kernel::linear(), s.lambda)?;
    let r = ddsim_kernel(&data, &u_bar, &init, &cfg)?;
    let err = (r.predicted_output.stacked() - y_true.stacked()).norm() / y_true.stacked().norm();
    Ok(Example1Run {
        true_output: y_true,
        predicted_output: r.predicted_output,
        relative_rms: err,
    })
}
