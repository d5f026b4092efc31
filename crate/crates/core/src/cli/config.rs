//! JSON run configuration.
//!
//! Every section and every key is optional. Missing keys take the reference
//! parameter set; unknown keys are rejected.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::SimScenario;
use crate::error::{input, Error, Result};
use crate::noise::NoiseParams;
use crate::operators::SystemParams;
use crate::scenarios;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub system: SystemSection,
    pub noise: NoiseSection,
    pub initial: InitialSection,
    pub grid: GridSection,
    pub quadrature: QuadratureSection,
    pub oracle: OracleSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub g_perp_rad_per_us: f64,
    pub g_par_rad_per_us: f64,
    pub delta_fq_rad_per_us: f64,
    pub delta_nv_rad_per_us: f64,
    pub b_z_rad_per_us: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            g_perp_rad_per_us: scenarios::G_PERP,
            g_par_rad_per_us: 0.0,
            delta_fq_rad_per_us: 0.0,
            delta_nv_rad_per_us: 0.0,
            b_z_rad_per_us: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub b_rad_per_us: f64,
    pub tau_c_us: f64,
    /// Absent means no flux-qubit relaxation.
    pub t1_fq_us: Option<f64>,
    /// Absent means `T2 = ∞`.
    pub t2_fq_us: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            b_rad_per_us: scenarios::B_NOISE,
            tau_c_us: scenarios::TAU_C,
            t1_fq_us: None,
            t2_fq_us: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            alpha_re: FRAC_1_SQRT_2,
            alpha_im: 0.0,
            beta_re: FRAC_1_SQRT_2,
            beta_im: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Absent means three estimated decay times.
    pub t_max_us: Option<f64>,
    pub n_samples: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            t_max_us: None,
            n_samples: scenarios::N_SAMPLES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub n_nodes: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            n_nodes: scenarios::N_NODES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub n_traj: usize,
    pub seed: u64,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            n_traj: 2000,
            seed: 42,
        }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))
    }

    /// Reads a config file, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Input(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_json(&text)
            }
        }
    }

    pub fn system(&self) -> SystemParams {
        let s = &self.system;
        SystemParams {
            g_perp: s.g_perp_rad_per_us,
            g_par: s.g_par_rad_per_us,
            delta_fq: s.delta_fq_rad_per_us,
            delta_nv: s.delta_nv_rad_per_us,
            b_z: s.b_z_rad_per_us,
        }
    }

    pub fn noise(&self) -> NoiseParams {
        let n = &self.noise;
        NoiseParams {
            b: n.b_rad_per_us,
            tau_c: n.tau_c_us,
            t1_fq: n.t1_fq_us,
            t2_fq: n.t2_fq_us,
        }
    }

    pub fn alpha(&self) -> C64 {
        C64::new(self.initial.alpha_re, self.initial.alpha_im)
    }

    pub fn beta(&self) -> C64 {
        C64::new(self.initial.beta_re, self.initial.beta_im)
    }

    /// Builds the scenario, filling in `t_max` from the decay estimate when
    /// it is absent. The returned config has that value written back.
    pub fn resolve(&self) -> Result<(Self, SimScenario)> {
        let system = self.system();
        let noise = self.noise();
        system.validate()?;
        noise.validate()?;
        let beta_sq = self.beta().norm_sqr();
        let t_max = match self.grid.t_max_us {
            Some(t) => t,
            None if beta_sq > 0.0 => SimScenario::suggested_t_max(&system, &noise, beta_sq.min(1.0))?,
            None => 1000.0,
        };
        let sc = SimScenario {
            system,
            noise,
            alpha: self.alpha(),
            beta: self.beta(),
            t_max,
            n_samples: self.grid.n_samples,
            f_r: None,
        };
        sc.validate()?;
        if self.quadrature.n_nodes < 3 || self.quadrature.n_nodes % 2 == 0 {
            return input(format!(
                "quadrature.n_nodes must be odd and at least 3, got {}",
                self.quadrature.n_nodes
            ));
        }
        let mut resolved = self.clone();
        resolved.grid.t_max_us = Some(t_max);
        Ok((resolved, sc))
    }
}
