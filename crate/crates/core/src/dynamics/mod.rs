//! Open-system dynamics of the hybrid system under telegraph magnetic noise,
//! flux-qubit relaxation and quasi-static flux-qubit dephasing.
//!
//! The telegraph noise `f(t) = ±1` is handled exactly by a pair of
//! conditional density operators `rho_1`, `rho_2` (noise currently `+1` or
//! `-1`), whose sum is the physical state:
//!
//! ```text
//! H_j      = H0 + J f_R (I⊗σz) ± (b/2) (Sz⊗I)          (+ for j = 1)
//! d rho_j  = -i [H_j, rho_j] - (rho_j - rho_k)/tau_c
//!            - 1/(2 T1) (σ₊σ₋ rho_j + rho_j σ₊σ₋ - 2 σ₋ rho_j σ₊)
//! ```
//!
//! [`monte_carlo`] integrates the same physics along sampled noise paths and
//! serves as an independent check of the conditional formalism.

mod master;
pub mod monte_carlo;
pub mod propagator;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::noise::{self, NoiseParams};
use crate::operators::{states, Ket, Operator, SystemParams, HYBRID_DIM};
use crate::spectrum::numeric_eigensystem;

pub use master::{
    conditional_derivative, evolve, evolve_with_states, evolve_with_step, gauss_hermite_average,
    step_size,
    ConditionalRates, ConditionalState,
};
pub use monte_carlo::{monte_carlo_oracle, TelegraphPath};

/// Trace conservation bound for `rho_1 + rho_2`.
pub const TRACE_TOL: f64 = 1e-8;
/// Absolute bound on `max |rho - rho†|`.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated in `rho`.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Largest population allowed in `|+1↑>`, `|-1↑>`.
pub const LEAKAGE_TOL: f64 = 1e-6;
/// Any density-matrix entry above this is treated as integrator blow-up.
pub const INSTABILITY_BOUND: f64 = 10.0;

/// Everything needed to run one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub system: SystemParams,
    pub noise: NoiseParams,
    /// Amplitude on `|0↓>`.
    pub alpha: C64,
    /// Amplitude on `|D↓>`.
    pub beta: C64,
    pub t_max: f64,
    pub n_samples: usize,
    /// Fixed quasi-static flux-qubit variable. `None` means zero.
    pub f_r: Option<f64>,
}

impl SimScenario {
    /// Equal superposition `(|0↓> + |D↓>)/√2` on `n_samples` points up to
    /// `t_max`.
    pub fn new(system: SystemParams, noise: NoiseParams, t_max: f64, n_samples: usize) -> Self {
        let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            system,
            noise,
            alpha: r,
            beta: r,
            t_max,
            n_samples,
            f_r: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.noise.validate()?;
        let norm = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return input(format!("|alpha|² + |beta|² must be 1, got {norm}"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return input(format!("t_max must be finite and > 0, got {}", self.t_max));
        }
        if self.n_samples < 2 {
            return input(format!("n_samples must be at least 2, got {}", self.n_samples));
        }
        if let Some(f) = self.f_r {
            if !f.is_finite() {
                return input("f_r must be finite");
            }
        }
        Ok(())
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta.norm_sqr()
    }

    /// `alpha |0↓> + beta |D↓>`
    pub fn initial_ket(&self) -> Ket {
        states::superposition(self.alpha, self.beta)
    }

    pub fn times(&self) -> Vec<f64> {
        let h = self.t_max / (self.n_samples - 1) as f64;
        (0..self.n_samples).map(|k| k as f64 * h).collect()
    }

    /// A span of `3/Γ` from [`noise::estimated_decay_rate`], or 1 ms when the
    /// estimate predicts no decay.
    pub fn suggested_t_max(system: &SystemParams, noise: &NoiseParams, beta_sq: f64) -> Result<f64> {
        let rate = noise::estimated_decay_rate(noise, system.g_perp, beta_sq)?;
        Ok(if rate > 0.0 { 3.0 / rate } else { 1000.0 })
    }
}

/// Worst-case invariant violations over every sampled state of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub max_leakage: f64,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self {
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
            max_leakage: 0.0,
        }
    }
}

impl Diagnostics {
    pub fn observe(&mut self, rho: &Operator) {
        let m = rho.matrix();
        self.max_trace_error = self.max_trace_error.max((m.trace() - C64::new(1.0, 0.0)).norm());
        let herm = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.max_hermiticity_error = self.max_hermiticity_error.max(herm);
        let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = sym.symmetric_eigen().eigenvalues.min();
        self.min_eigenvalue = self.min_eigenvalue.min(min_eig);
        let leak: f64 = states::two_excitation()
            .iter()
            .map(|k| rho.matrix_element(k, k).re)
            .sum();
        self.max_leakage = self.max_leakage.max(leak);
    }

    pub fn merge(&mut self, other: &Diagnostics) {
        self.max_trace_error = self.max_trace_error.max(other.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(other.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.max_leakage = self.max_leakage.max(other.max_leakage);
    }

    /// Names of the violated invariants, empty when all hold.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_trace_error > TRACE_TOL {
            out.push(format!("trace error {:.3e} > {TRACE_TOL:e}", self.max_trace_error));
        }
        if self.max_hermiticity_error > HERMITICITY_TOL {
            out.push(format!(
                "hermiticity error {:.3e} > {HERMITICITY_TOL:e}",
                self.max_hermiticity_error
            ));
        }
        if self.min_eigenvalue < -POSITIVITY_TOL {
            out.push(format!("min eigenvalue {:.3e} < -{POSITIVITY_TOL:e}", self.min_eigenvalue));
        }
        if self.max_leakage > LEAKAGE_TOL {
            out.push(format!("two-excitation leakage {:.3e} > {LEAKAGE_TOL:e}", self.max_leakage));
        }
        out
    }

    pub fn all_hold(&self) -> bool {
        self.violations().is_empty()
    }
}

/// How a curve was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    MasterEquation { dt_us: f64 },
    GaussHermite { n_nodes: usize, dt_us: f64 },
    MonteCarlo { n_traj: usize, seed: u64, dt_us: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub scenario: SimScenario,
    pub method: Method,
}

/// Fidelity samples `F(t_k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub fidelities: Vec<f64>,
    /// Standard error of the mean, only for sampled (Monte-Carlo) curves.
    pub stderr: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
    pub metadata: CurveMetadata,
}

impl DecayCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `Re <psi0|rho|psi0>`, clamped into `[0, 1]` when it lies within `1e-8` of
/// that range.
pub fn fidelity(rho: &Operator, psi0: &Ket) -> Result<f64> {
    if rho.dim() != psi0.dim() {
        return input(format!(
            "state dimension {} does not match operator dimension {}",
            psi0.dim(),
            rho.dim()
        ));
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return input(format!("reference state must be normalized, |psi0| = {norm}"));
    }
    Ok(clamp_fidelity(rho.matrix_element(psi0, psi0).re))
}

pub(crate) fn clamp_fidelity(f: f64) -> f64 {
    const SLACK: f64 = 1e-8;
    if (-SLACK..0.0).contains(&f) {
        0.0
    } else if f > 1.0 && f <= 1.0 + SLACK {
        1.0
    } else {
        f
    }
}

/// `e^{-i H0 t} psi0`, so that `<psi(t)| rho(t) |psi(t)>` is the fidelity in
/// the interaction picture of `H0`.
#[derive(Clone, Debug)]
pub(crate) struct ReferenceFrame {
    eigenvalues: Vec<f64>,
    /// `V† psi0`
    coefficients: Vec<C64>,
    eigenvectors: DMatrix<C64>,
    stationary: Option<Ket>,
}

impl ReferenceFrame {
    pub(crate) fn new(h0: &Operator, psi0: &Ket) -> Result<Self> {
        let es = numeric_eigensystem(h0)?;
        let coefficients: Vec<C64> = (0..es.len()).map(|k| es.vector(k).inner(psi0)).collect();
        // psi0 inside a single eigenspace: the frame only adds a global phase
        let occupied: Vec<f64> = coefficients
            .iter()
            .zip(&es.eigenvalues)
            .filter(|(c, _)| c.norm() > 1e-14)
            .map(|(_, &e)| e)
            .collect();
        let spread = occupied.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - occupied.iter().cloned().fold(f64::INFINITY, f64::min);
        let stationary = (spread.abs() < 1e-14).then(|| psi0.clone());
        Ok(Self {
            eigenvalues: es.eigenvalues,
            coefficients,
            eigenvectors: es.eigenvectors,
            stationary,
        })
    }

    pub(crate) fn at(&self, t: f64) -> Ket {
        if let Some(k) = &self.stationary {
            return k.clone();
        }
        let rotated: Vec<C64> = self
            .coefficients
            .iter()
            .zip(&self.eigenvalues)
            .map(|(c, &e)| c * C64::from_polar(1.0, -e * t))
            .collect();
        Ket::new(&self.eigenvectors * nalgebra::DVector::from_vec(rotated))
    }
}

pub(crate) fn hybrid_zero() -> DMatrix<C64> {
    DMatrix::zeros(HYBRID_DIM, HYBRID_DIM)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equal_superposition() -> Ket {
        let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        states::superposition(r, r)
    }

    #[test]
    fn fidelity_of_pure_state() {
        let psi = equal_superposition();
        assert!((fidelity(&psi.projector(), &psi).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_of_maximally_mixed_state() {
        let rho = Operator::identity(6) * (1.0 / 6.0);
        let f = fidelity(&rho, &equal_superposition()).unwrap();
        assert!((f - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_floor_of_dephased_superposition() {
        let rho = states::zero_down().projector() * 0.5 + states::dark_down().projector() * 0.5;
        let f = fidelity(&rho, &equal_superposition()).unwrap();
        assert!((f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fidelity_rejects_unnormalized_reference() {
        let psi = states::zero_down().scale(C64::new(2.0, 0.0));
        assert!(fidelity(&psi.projector(), &psi).is_err());
    }

    #[test]
    fn scenario_validation() {
        let mut sc = SimScenario::new(SystemParams::operating_point(0.6), NoiseParams::nv_reference(), 10.0, 5);
        assert!(sc.validate().is_ok());
        sc.beta = C64::new(0.9, 0.0);
        assert!(sc.validate().is_err());
        sc.beta = sc.alpha;
        sc.n_samples = 1;
        assert!(sc.validate().is_err());
    }

    #[test]
    fn diagnostics_flag_leakage() {
        let mut d = Diagnostics::default();
        let rho = states::zero_down().projector() * 0.9 + states::plus_up().projector() * 0.1;
        d.observe(&rho);
        assert!(d.max_leakage > 0.09);
        assert!(!d.all_hold());
    }
}
