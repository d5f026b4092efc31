//! Closed-form noise spectra, coherence times and perturbative infidelity.
//!
//! The magnetic noise `f(t)` is normalized with autocorrelation
//! `E[f(t) f(t+tau)] = exp(-2|tau|/tau_c)`; under the transform
//! `S(nu) = ∫ corr(tau) exp(-i 2 pi nu tau) dtau` this gives the
//! Lorentzian [`oun_power_spectrum`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Environment parameters. Times in us, rates in rad/us.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// `g_e mu_B B_noise`
    pub b: f64,
    pub tau_c: f64,
    /// Flux-qubit energy relaxation time; `None` disables the channel.
    pub t1_fq: Option<f64>,
    /// Flux-qubit quasi-static dephasing time; `None` disables the channel.
    pub t2_fq: Option<f64>,
}

impl NoiseParams {
    /// `b = 0.032 /us`, `tau_c = 800 us`, both flux-qubit channels off.
    pub fn nv_reference() -> Self {
        Self {
            b: 0.032,
            tau_c: 800.0,
            t1_fq: None,
            t2_fq: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b.is_finite() && self.b >= 0.0) {
            return input(format!("noise amplitude b must be finite and >= 0, got {}", self.b));
        }
        if !(self.tau_c.is_finite() && self.tau_c > 0.0) {
            return input(format!("tau_c must be finite and > 0, got {}", self.tau_c));
        }
        for (name, v) in [("t1_fq", self.t1_fq), ("t2_fq", self.t2_fq)] {
            if let Some(t) = v {
                if !(t > 0.0) || t.is_nan() {
                    return input(format!("{name} must be > 0 when present, got {t}"));
                }
            }
        }
        Ok(())
    }

    /// Quasi-static coupling `J = 1/(√2 T2)`; zero when the channel is off.
    pub fn dephasing_coupling(&self) -> f64 {
        match self.t2_fq {
            Some(t2) if t2.is_finite() => 1.0 / (std::f64::consts::SQRT_2 * t2),
            _ => 0.0,
        }
    }

    /// Relaxation rate `1/T1`; zero when the channel is off.
    pub fn relaxation_rate(&self) -> f64 {
        match self.t1_fq {
            Some(t1) if t1.is_finite() => 1.0 / t1,
            _ => 0.0,
        }
    }
}

/// `tau_c / (1 + (pi f tau_c)^2)` in us, for `f` in 1/us.
pub fn oun_power_spectrum(f: f64, tau_c: f64) -> Result<f64> {
    if !(tau_c > 0.0) || !tau_c.is_finite() {
        return input(format!("tau_c must be finite and > 0, got {tau_c}"));
    }
    let x = PI * f * tau_c;
    Ok(tau_c / (1.0 + x * x))
}

/// Free-induction decay time `2/b`. `None` when `b = 0` (no decay).
pub fn t_fid(n: &NoiseParams) -> Result<Option<f64>> {
    n.validate()?;
    Ok((n.b > 0.0).then(|| 2.0 / n.b))
}

/// Spin-echo time `(24 tau_c / b^2)^(1/3)`. `None` when `b = 0`.
pub fn t_echo(n: &NoiseParams) -> Result<Option<f64>> {
    n.validate()?;
    Ok((n.b > 0.0).then(|| (24.0 * n.tau_c / (n.b * n.b)).cbrt()))
}

fn check_dark_args(g_perp: f64, beta_sq: f64) -> Result<()> {
    if !(g_perp >= 0.0) || !g_perp.is_finite() {
        return input(format!("g_perp must be finite and >= 0, got {g_perp}"));
    }
    if !(beta_sq > 0.0 && beta_sq <= 1.0) {
        return input(format!("beta_sq must lie in (0, 1], got {beta_sq}"));
    }
    Ok(())
}

/// Infidelity accumulated per microsecond, `b² |β|² S(g_perp/2π) / 4`.
pub fn infidelity_rate(n: &NoiseParams, g_perp: f64, beta_sq: f64) -> Result<f64> {
    n.validate()?;
    check_dark_args(g_perp, beta_sq)?;
    let s = oun_power_spectrum(g_perp / (2.0 * PI), n.tau_c)?;
    Ok(0.25 * n.b * n.b * beta_sq * s)
}

/// Dark-state coherence time `4 / (b² |β|² S(g_perp/2π))`. `None` when the
/// noise amplitude is zero.
pub fn t_dark(n: &NoiseParams, g_perp: f64, beta_sq: f64) -> Result<Option<f64>> {
    let rate = infidelity_rate(n, g_perp, beta_sq)?;
    Ok((rate > 0.0).then(|| 1.0 / rate))
}

/// Gapped-regime asymptote `tau_c g_perp² / (b² |β|²)`.
pub fn t_dark_asymptotic(n: &NoiseParams, g_perp: f64, beta_sq: f64) -> Result<Option<f64>> {
    n.validate()?;
    check_dark_args(g_perp, beta_sq)?;
    Ok((n.b > 0.0).then(|| n.tau_c * g_perp * g_perp / (n.b * n.b * beta_sq)))
}

/// Linear-in-time perturbative infidelity `¼ b² |β|² t S(g_perp/2π)`,
/// unclamped.
pub fn perturbative_infidelity_raw(t: f64, n: &NoiseParams, g_perp: f64, beta_sq: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return input(format!("time must be >= 0, got {t}"));
    }
    Ok(infidelity_rate(n, g_perp, beta_sq)? * t)
}

/// [`perturbative_infidelity_raw`] clamped to `[0, 1/2]`, the range a
/// fidelity curve with a floor of one half can report.
pub fn perturbative_infidelity(t: f64, n: &NoiseParams, g_perp: f64, beta_sq: f64) -> Result<f64> {
    Ok(perturbative_infidelity_raw(t, n, g_perp, beta_sq)?.clamp(0.0, 0.5))
}

/// Second-order infidelity at finite time, without the long-time
/// approximation:
///
/// ```text
/// 1 - F(t) = ½ b² |β|² ∫₀ᵗ (t - s) exp(-2s/tau_c) cos(g_perp s) ds
/// ```
///
/// For `t >> tau_c` it approaches [`perturbative_infidelity_raw`] plus the
/// constant `-½ b² |β|² Re(1/z²)`, `z = 2/tau_c - i g_perp`, left over from
/// the initial transient.
pub fn second_order_infidelity(t: f64, n: &NoiseParams, g_perp: f64, beta_sq: f64) -> Result<f64> {
    n.validate()?;
    check_dark_args(g_perp, beta_sq)?;
    if !(t >= 0.0) {
        return input(format!("time must be >= 0, got {t}"));
    }
    // ∫₀ᵗ (t - s) e^{-z s} ds = t/z - (1 - e^{-z t})/z²,  z = 2/tau_c - i g
    let z = num_complex::Complex64::new(2.0 / n.tau_c, -g_perp);
    let integral = if z.norm() * t < 1e-6 {
        // series: t²/2 - z t³/6
        num_complex::Complex64::new(t * t / 2.0, 0.0) - z * (t * t * t / 6.0)
    } else {
        t / z - (1.0 - (-z * t).exp()) / (z * z)
    };
    Ok(0.5 * n.b * n.b * beta_sq * integral.re)
}

/// Rough fitted decay rate `Γ` (1/us) of the `½ + ½ e^{-Γt}` model, used to
/// choose simulation spans.
///
/// Combines the gap-filtered telegraph rate `2/T_dark` with the relaxation
/// leak through the bright polaritons, `b² / (8 T1 g_perp²)`. The latter comes
/// from second-order mixing of `|D↓>` into the damped `|B↓>/|0↑>` pair. The
/// same mixing shifts the dark level by `κ f_R` with `κ = b² J / (2 g_perp²)`
/// under quasi-static flux-qubit noise, so averaging over `f_R` gives a
/// Gaussian envelope `exp(-κ²t²/2)`, counted here through the rate `κ/√2`
/// with the same 1/e time. The total is capped by the free-induction rate
/// `1/T_FID`, which is what the ungapped system shows.
pub fn estimated_decay_rate(n: &NoiseParams, g_perp: f64, beta_sq: f64) -> Result<f64> {
    let white = 2.0 * infidelity_rate(n, g_perp, beta_sq)?;
    let b2 = n.b * n.b;
    let relax = match n.t1_fq {
        Some(t1) if g_perp > 0.0 && t1.is_finite() => b2 / (8.0 * t1 * g_perp * g_perp),
        Some(_) if n.b > 0.0 && g_perp == 0.0 => f64::INFINITY,
        _ => 0.0,
    };
    let j = n.dephasing_coupling();
    let dephase = if j == 0.0 || n.b == 0.0 {
        0.0
    } else if g_perp > 0.0 {
        b2 * j / (2.0 * g_perp * g_perp) / std::f64::consts::SQRT_2
    } else {
        f64::INFINITY
    };
    Ok((white + relax + dephase).min(n.b / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 2.0 * PI * 0.1;

    fn reference() -> NoiseParams {
        NoiseParams::nv_reference()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn spectrum_values() {
        assert_eq!(oun_power_spectrum(0.0, 800.0).unwrap(), 800.0);
        let s = oun_power_spectrum(0.1, 800.0).unwrap();
        assert!(rel(s, 0.012665) < 1e-4, "{s}");
        assert!(rel(s, 4.0 / (G * G * 800.0)) < 1e-4);
        assert!(oun_power_spectrum(0.1, 0.0).is_err());
        assert_eq!(oun_power_spectrum(-0.3, 5.0).unwrap(), oun_power_spectrum(0.3, 5.0).unwrap());
    }

    #[test]
    fn free_induction_and_echo() {
        assert!(rel(t_fid(&reference()).unwrap().unwrap(), 62.5) < 1e-12);
        let n = NoiseParams { b: 0.064, ..reference() };
        assert!(rel(t_fid(&n).unwrap().unwrap(), 31.25) < 1e-12);
        let n = NoiseParams { b: 2.0, ..reference() };
        assert_eq!(t_fid(&n).unwrap(), Some(1.0));
        let n = NoiseParams { b: 0.0, ..reference() };
        assert_eq!(t_fid(&n).unwrap(), None);
        assert_eq!(t_echo(&n).unwrap(), None);

        let echo = t_echo(&reference()).unwrap().unwrap();
        assert!((echo - 265.6).abs() < 0.1 && (echo - 266.0).abs() / 266.0 < 0.01, "{echo}");
        let n8 = NoiseParams { tau_c: 6400.0, ..reference() };
        assert!(rel(t_echo(&n8).unwrap().unwrap(), 2.0 * echo) < 1e-12);
        let unit = NoiseParams { b: 1.0, tau_c: 1.0 / 24.0, ..reference() };
        assert!(rel(t_echo(&unit).unwrap().unwrap(), 1.0) < 1e-12);
    }

    #[test]
    fn dark_time_values() {
        let full = t_dark(&reference(), G, 1.0).unwrap().unwrap();
        assert!((full / 1e6 - 0.3086).abs() < 5e-4, "{full}");
        let half = t_dark(&reference(), G, 0.5).unwrap().unwrap();
        assert!((half / 1e6 - 0.617).abs() < 1e-3, "{half}");
        let ungapped = t_dark(&reference(), 0.0, 1.0).unwrap().unwrap();
        assert!(rel(ungapped, 4.0 / (0.032f64.powi(2) * 800.0)) < 1e-12);
        assert!(t_dark(&reference(), G, 0.0).is_err());
        assert!(t_dark(&reference(), -1.0, 0.5).is_err());
    }

    #[test]
    fn perturbative_values() {
        let n = reference();
        assert_eq!(perturbative_infidelity(0.0, &n, G, 0.5).unwrap(), 0.0);
        let td = t_dark(&n, G, 0.3).unwrap().unwrap();
        assert!(rel(perturbative_infidelity_raw(td, &n, G, 0.3).unwrap(), 1.0) < 1e-12);
        assert_eq!(perturbative_infidelity(td, &n, G, 0.3).unwrap(), 0.5);
        let v = perturbative_infidelity(1000.0, &n, G, 0.5).unwrap();
        assert!(rel(v, 1.62e-3) < 2e-3, "{v}");
    }

    #[test]
    fn second_order_matches_quadrature() {
        // independent check: trapezoid on the double-integral form
        let n = NoiseParams { tau_c: 3.0, ..reference() };
        let (g, beta_sq, t) = (1.7, 0.5, 4.0);
        let m = 20_000;
        let h = t / m as f64;
        let f = |s: f64| (t - s) * (-2.0 * s / n.tau_c).exp() * (g * s).cos();
        let mut acc = 0.5 * (f(0.0) + f(t));
        for k in 1..m {
            acc += f(k as f64 * h);
        }
        let quad = 0.5 * n.b * n.b * beta_sq * acc * h;
        let closed = second_order_infidelity(t, &n, g, beta_sq).unwrap();
        assert!(rel(closed, quad) < 1e-7, "{closed} vs {quad}");
        assert_eq!(second_order_infidelity(0.0, &n, g, beta_sq).unwrap(), 0.0);
    }

    #[test]
    fn second_order_long_time_slope() {
        let n = reference();
        let t1 = 40_000.0;
        let t2 = 50_000.0;
        let slope = (second_order_infidelity(t2, &n, G, 0.5).unwrap()
            - second_order_infidelity(t1, &n, G, 0.5).unwrap())
            / (t2 - t1);
        assert!(rel(slope, infidelity_rate(&n, G, 0.5).unwrap()) < 1e-9);
    }

    #[test]
    fn estimated_rate_tracks_relaxation_leak() {
        let n = NoiseParams { t1_fq: Some(0.4), ..reference() };
        let r = estimated_decay_rate(&n, G, 0.5).unwrap();
        assert!((1.0 / r - 1230.0).abs() < 20.0, "{}", 1.0 / r);
        let ungapped = estimated_decay_rate(&n, 0.0, 0.5).unwrap();
        assert_eq!(ungapped, 0.016);
        let quiet = NoiseParams { b: 0.0, ..n };
        assert_eq!(estimated_decay_rate(&quiet, G, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn estimated_rate_includes_quasi_static_dephasing() {
        let relaxed = NoiseParams { t1_fq: Some(0.4), ..reference() };
        let base = estimated_decay_rate(&relaxed, G, 0.5).unwrap();
        let mut last = base;
        for t2 in [2.0, 1.0, 0.5] {
            let n = NoiseParams { t2_fq: Some(t2), ..relaxed };
            let r = estimated_decay_rate(&n, G, 0.5).unwrap();
            let kappa = n.b * n.b * n.dephasing_coupling() / (2.0 * G * G);
            assert!(rel(r - base, kappa / 2f64.sqrt()) < 1e-12);
            assert!(r > last);
            last = r;
        }
    }

    #[test]
    fn invalid_params() {
        assert!(NoiseParams { tau_c: 0.0, ..reference() }.validate().is_err());
        assert!(NoiseParams { b: -1.0, ..reference() }.validate().is_err());
        assert!(NoiseParams { t1_fq: Some(0.0), ..reference() }.validate().is_err());
        assert_eq!(NoiseParams { t2_fq: Some(0.5), ..reference() }.dephasing_coupling(), 1.0 / (0.5 * 2f64.sqrt()));
    }
}
