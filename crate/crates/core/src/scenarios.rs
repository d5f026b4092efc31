//! Reference parameter sets for the flux-qubit relaxation and dephasing
//! studies, with the decay times reported for them.

use std::f64::consts::PI;

use crate::dynamics::SimScenario;
use crate::error::Result;
use crate::noise::NoiseParams;
use crate::operators::SystemParams;

/// `2π × 100 kHz` in rad/us.
pub const G_PERP: f64 = 2.0 * PI * 0.1;
/// `g_e mu_B B_noise` in rad/us.
pub const B_NOISE: f64 = 0.032;
/// Telegraph correlation time in us.
pub const TAU_C: f64 = 800.0;
/// Samples per decay curve.
pub const N_SAMPLES: usize = 300;
/// Default Gauss–Hermite order for the dephasing average.
pub const N_NODES: usize = 15;

/// Flux-qubit `T1` values (us) of the relaxation study.
pub const RELAXATION_T1_US: [f64; 4] = [0.2, 0.3, 0.4, 0.5];
/// Reported `1/Γ` (ms) for [`RELAXATION_T1_US`].
pub const RELAXATION_INV_GAMMA_MS: [f64; 4] = [0.62, 0.93, 1.2, 1.5];

/// `T1` (us) held fixed in the dephasing study.
pub const DEPHASING_T1_US: f64 = 0.4;
/// Flux-qubit `T2` values (us) of the dephasing study; `None` is `T2 = ∞`.
pub const DEPHASING_T2_US: [Option<f64>; 4] = [Some(0.5), Some(1.0), Some(2.0), None];
/// Reported `1/Γ` (ms) for [`DEPHASING_T2_US`].
pub const DEPHASING_INV_GAMMA_MS: [f64; 4] = [0.53, 0.80, 1.0, 1.2];

pub fn system() -> SystemParams {
    SystemParams::operating_point(G_PERP)
}

pub fn noise(t1_fq: Option<f64>, t2_fq: Option<f64>) -> NoiseParams {
    NoiseParams {
        b: B_NOISE,
        tau_c: TAU_C,
        t1_fq,
        t2_fq,
    }
}

/// Equal superposition under telegraph noise and flux-qubit relaxation, on a
/// span of three estimated decay times.
pub fn relaxation(t1_us: f64) -> Result<SimScenario> {
    custom(system(), noise(Some(t1_us), None))
}

/// [`relaxation`] at `T1 = 0.4 us` with quasi-static dephasing `T2`.
pub fn dephasing(t2_us: Option<f64>) -> Result<SimScenario> {
    custom(system(), noise(Some(DEPHASING_T1_US), t2_us))
}

/// Equal superposition with the suggested span for arbitrary parameters.
pub fn custom(system: SystemParams, noise: NoiseParams) -> Result<SimScenario> {
    noise.validate()?;
    let t_max = SimScenario::suggested_t_max(&system, &noise, 0.5)?;
    Ok(SimScenario::new(system, noise, t_max, N_SAMPLES))
}
