//! Decay-rate extraction with the fixed-offset model `F(t) = ½ + ½ e^{-Γt}`.

use serde::{Deserialize, Serialize};

use crate::dynamics::DecayCurve;
use crate::error::{input, Error, Result};

/// Points needed for a fit.
pub const MIN_POINTS: usize = 10;
/// Only points with `2F - 1` above this enter the log-linear seed.
pub const SEED_THRESHOLD: f64 = 0.05;
/// Golden-section stopping width, relative to the bracket midpoint.
pub const REL_WIDTH: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Decay rate in 1/us.
    pub gamma: f64,
    /// `1/Γ` in us; infinite when no decay was found.
    pub inv_gamma: f64,
    pub rms_residual: f64,
    pub n_points_used: usize,
}

impl FitResult {
    pub fn no_decay(&self) -> bool {
        self.gamma == 0.0
    }

    pub fn inv_gamma_ms(&self) -> f64 {
        self.inv_gamma / 1000.0
    }
}

pub fn model(gamma: f64, t: f64) -> f64 {
    0.5 + 0.5 * (-gamma * t).exp()
}

/// Fits [`model`] to a decay curve.
pub fn fit_exponential(curve: &DecayCurve) -> Result<FitResult> {
    fit_samples(&curve.times, &curve.fidelities)
}

/// Least-squares fit of [`model`] over `Γ >= 0`.
///
/// Times are rescaled by the last sample so the search runs on a
/// dimensionless rate; the result is therefore equivariant under a change of
/// time unit.
pub fn fit_samples(times: &[f64], fidelities: &[f64]) -> Result<FitResult> {
    if times.len() != fidelities.len() {
        return input(format!(
            "times and fidelities differ in length ({} vs {})",
            times.len(),
            fidelities.len()
        ));
    }
    let n = times.len();
    if n < MIN_POINTS {
        return input(format!("need at least {MIN_POINTS} points, got {n}"));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return input("time grid must be finite and strictly increasing");
    }
    if fidelities
        .iter()
        .any(|f| !(-1e-8..=1.0 + 1e-8).contains(f))
    {
        return input("fidelities must lie in [0, 1]");
    }
    let scale = times[n - 1];
    if !(scale > 0.0) {
        return input("last sample time must be positive");
    }
    let tau: Vec<f64> = times.iter().map(|t| t / scale).collect();
    let sse = |u: f64| -> f64 {
        tau.iter()
            .zip(fidelities)
            .map(|(&x, &f)| {
                let r = f - model(u, x);
                r * r
            })
            .sum()
    };

    let seed = log_linear_seed(&tau, fidelities)?;

    // bracket [0, hi] containing the minimum
    let mut hi = (4.0 * seed).max(1.0);
    while sse(2.0 * hi) < sse(hi) && hi < 1e12 {
        hi *= 2.0;
    }
    hi *= 2.0;

    // slope of the SSE; its root pins the minimum far below the resolution
    // of the SSE itself, which is flat there
    let slope = |u: f64| -> f64 {
        tau.iter()
            .zip(fidelities)
            .map(|(&x, &f)| (f - model(u, x)) * x * (-u * x).exp())
            .sum()
    };
    let (a, b) = golden_section(&sse, 0.0, hi);
    let u = polish_root(&slope, a, b).unwrap_or(0.5 * (a + b));
    let (u, best) = if sse(0.0) <= sse(u) { (0.0, sse(0.0)) } else { (u, sse(u)) };

    let gamma = u / scale;
    Ok(FitResult {
        gamma,
        inv_gamma: if gamma > 0.0 { 1.0 / gamma } else { f64::INFINITY },
        rms_residual: (best / n as f64).sqrt(),
        n_points_used: n,
    })
}

/// Slope of `ln(2F - 1)` against time through the origin, over points with
/// `2F - 1 > SEED_THRESHOLD`.
fn log_linear_seed(tau: &[f64], fidelities: &[f64]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = tau
        .iter()
        .zip(fidelities)
        .map(|(&x, &f)| (x, 2.0 * f - 1.0))
        .filter(|&(_, y)| y > SEED_THRESHOLD)
        .collect();
    if usable.is_empty() {
        return Err(Error::Fit(
            "rate unresolvable: curve is fully decayed at every sample".into(),
        ));
    }
    let sxx: f64 = usable.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        // only t = 0 survives: decayed within the first interval
        let first = tau.iter().copied().find(|&x| x > 0.0).unwrap_or(1.0);
        return Ok((1.0 / SEED_THRESHOLD).ln() / first);
    }
    let sxy: f64 = usable.iter().map(|(x, y)| x * y.ln()).sum();
    Ok((-sxy / sxx).max(0.0))
}

/// Final bracket of a golden-section search for the minimum of `f`.
fn golden_section(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if b - a <= REL_WIDTH * mid {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a, b)
}

/// Bisection for a sign change of `g` in a slightly widened `[a, b]`.
fn polish_root(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> Option<f64> {
    let pad = (b - a).max(f64::EPSILON * b.abs());
    let (mut lo, mut hi) = ((a - pad).max(0.0), b + pad);
    let (mut g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo * g_hi < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Some(mid);
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn recovers_exact_model() {
        let t = grid(3000.0, 300);
        let f: Vec<f64> = t.iter().map(|&x| model(1e-3, x)).collect();
        let r = fit_samples(&t, &f).unwrap();
        assert!((r.inv_gamma - 1000.0).abs() / 1000.0 < 1e-6, "{r:?}");
        assert!(r.rms_residual < 1e-9);
        assert_eq!(r.n_points_used, 300);
        assert_eq!(r.inv_gamma * r.gamma, 1.0);
    }

    #[test]
    fn constant_curve_has_no_decay() {
        let t = grid(100.0, 20);
        let r = fit_samples(&t, &vec![1.0; 20]).unwrap();
        assert_eq!(r.gamma, 0.0);
        assert!(r.no_decay());
        assert!(r.inv_gamma.is_infinite());
    }

    #[test]
    fn fully_decayed_curve_is_rejected() {
        let t = grid(100.0, 20);
        assert!(matches!(fit_samples(&t, &vec![0.5; 20]), Err(Error::Fit(_))));
    }

    #[test]
    fn bad_inputs_rejected() {
        let t = grid(100.0, 20);
        assert!(fit_samples(&t[..5], &[1.0; 5]).is_err());
        let mut back = t.clone();
        back.swap(3, 4);
        assert!(matches!(fit_samples(&back, &vec![1.0; 20]), Err(Error::Input(_))));
        let mut f = vec![1.0; 20];
        f[2] = 1.5;
        assert!(fit_samples(&t, &f).is_err());
    }

    #[test]
    fn fast_decay_within_first_interval() {
        let t = grid(100.0, 20);
        let f: Vec<f64> = t.iter().map(|&x| model(1.0, x)).collect();
        let r = fit_samples(&t, &f).unwrap();
        assert!(r.gamma > 0.1, "{r:?}");
    }

    #[test]
    fn noisy_replicates_stay_within_five_percent() {
        let gamma = 1.0 / 800.0;
        let t = grid(3.0 / gamma, 300);
        let eps = 1e-3;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<f64> = t
                .iter()
                .map(|&x| (model(gamma, x) + eps * rng.gen_range(-1.0..1.0)).clamp(0.0, 1.0))
                .collect();
            let r = fit_samples(&t, &f).unwrap();
            assert!((r.gamma - gamma).abs() / gamma <= 0.05, "seed {seed}: {r:?}");
        }
    }
}
