use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::propagator::StepMap;
use super::{
    clamp_fidelity, hybrid_zero, CurveMetadata, DecayCurve, Diagnostics, Method, ReferenceFrame,
    SimScenario, INSTABILITY_BOUND,
};
use crate::error::{input, Error, Result};
use crate::operators::{
    build_hamiltonian, fq_dephasing_operator, fq_lowering_operator, noise_operator, Operator,
    HYBRID_DIM,
};
use crate::parallel;
use crate::quadrature::standard_normal_rule;

const N2: usize = HYBRID_DIM * HYBRID_DIM;
const MINUS_I: C64 = C64::new(0.0, -1.0);

/// Conditional density operators at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalState {
    pub rho1: Operator,
    pub rho2: Operator,
    pub time: f64,
}

impl ConditionalState {
    /// Splits `rho` evenly between the two noise branches at `t = 0`.
    pub fn split(rho: &Operator) -> Self {
        Self {
            rho1: rho * 0.5,
            rho2: rho * 0.5,
            time: 0.0,
        }
    }

    /// `rho_1 + rho_2`
    pub fn total(&self) -> Operator {
        &self.rho1 + &self.rho2
    }

    pub(crate) fn to_vector(&self) -> DVector<C64> {
        let mut v = DVector::zeros(2 * N2);
        v.rows_mut(0, N2).copy_from_slice(self.rho1.matrix().as_slice());
        v.rows_mut(N2, N2).copy_from_slice(self.rho2.matrix().as_slice());
        v
    }

    pub(crate) fn from_vector(v: &DVector<C64>, time: f64) -> Self {
        let m1 = DMatrix::from_column_slice(HYBRID_DIM, HYBRID_DIM, v.rows(0, N2).as_slice());
        let m2 = DMatrix::from_column_slice(HYBRID_DIM, HYBRID_DIM, v.rows(N2, N2).as_slice());
        Self {
            rho1: Operator::new(m1).expect("square"),
            rho2: Operator::new(m2).expect("square"),
            time,
        }
    }
}

/// `(d rho_1/dt, d rho_2/dt)`
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalRates {
    pub drho1: Operator,
    pub drho2: Operator,
}

/// Generator of the conditional equations for one scenario.
#[derive(Clone, Debug)]
pub(crate) struct Generator {
    /// `H_1`, `H_2`
    h: [DMatrix<C64>; 2],
    switch_rate: f64,
    relax_rate: f64,
    lower: DMatrix<C64>,
    raise: DMatrix<C64>,
    excited: DMatrix<C64>,
}

impl Generator {
    pub(crate) fn new(sc: &SimScenario) -> Self {
        let mut h0 = build_hamiltonian(&sc.system);
        let j = sc.noise.dephasing_coupling();
        if let Some(f) = sc.f_r {
            if j != 0.0 {
                h0 = h0 + fq_dephasing_operator() * (j * f);
            }
        }
        let kick = noise_operator() * (0.5 * sc.noise.b);
        let lower = fq_lowering_operator().into_matrix();
        let raise = lower.adjoint();
        let excited = &raise * &lower;
        Self {
            h: [(&h0 + &kick).into_matrix(), (&h0 - &kick).into_matrix()],
            switch_rate: 1.0 / sc.noise.tau_c,
            relax_rate: sc.noise.relaxation_rate(),
            lower,
            raise,
            excited,
        }
    }

    /// Largest absolute row sum over both branch Hamiltonians.
    pub(crate) fn hamiltonian_scale(&self) -> f64 {
        self.h
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|r| m.row(r).iter().map(|z| z.norm()).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn branch_hamiltonian(&self, branch: usize) -> &DMatrix<C64> {
        &self.h[branch]
    }

    /// Unitary plus relaxation part for one branch, without switching.
    pub(crate) fn lindblad(&self, branch: usize, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let h = &self.h[branch];
        let mut out = (h * rho - rho * h) * MINUS_I;
        if self.relax_rate > 0.0 {
            let anti = &self.excited * rho + rho * &self.excited;
            let jump = &self.lower * rho * &self.raise;
            out += (anti - jump * C64::new(2.0, 0.0)) * C64::new(-0.5 * self.relax_rate, 0.0);
        }
        out
    }

    pub(crate) fn rates(&self, rho1: &DMatrix<C64>, rho2: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
        let flow = (rho1 - rho2) * C64::new(self.switch_rate, 0.0);
        (self.lindblad(0, rho1) - &flow, self.lindblad(1, rho2) + flow)
    }

    /// Same as [`Self::rates`] on the stacked column-major vector.
    pub(crate) fn vector_rates(&self, v: &DVector<C64>) -> DVector<C64> {
        let r1 = DMatrix::from_column_slice(HYBRID_DIM, HYBRID_DIM, v.rows(0, N2).as_slice());
        let r2 = DMatrix::from_column_slice(HYBRID_DIM, HYBRID_DIM, v.rows(N2, N2).as_slice());
        let (d1, d2) = self.rates(&r1, &r2);
        let mut out = DVector::zeros(2 * N2);
        out.rows_mut(0, N2).copy_from_slice(d1.as_slice());
        out.rows_mut(N2, N2).copy_from_slice(d2.as_slice());
        out
    }
}

/// Right-hand side of the coupled conditional master equations.
pub fn conditional_derivative(s: &ConditionalState, sc: &SimScenario) -> Result<ConditionalRates> {
    sc.validate()?;
    if s.rho1.dim() != HYBRID_DIM || s.rho2.dim() != HYBRID_DIM {
        return input(format!("conditional states must be {HYBRID_DIM}x{HYBRID_DIM}"));
    }
    let (d1, d2) = Generator::new(sc).rates(s.rho1.matrix(), s.rho2.matrix());
    Ok(ConditionalRates {
        drho1: Operator::new(d1)?,
        drho2: Operator::new(d2)?,
    })
}

/// Upper bound on the RK4 step: the shortest of `T1`, `1/g_perp`, `tau_c`
/// and the inverse Hamiltonian scale, divided by 50 and capped at 0.02 us.
pub fn step_size(sc: &SimScenario) -> f64 {
    let gen = Generator::new(sc);
    let mut shortest = sc.noise.tau_c;
    if let Some(t1) = sc.noise.t1_fq.filter(|t| t.is_finite()) {
        shortest = shortest.min(t1);
    }
    if sc.system.g_perp > 0.0 {
        shortest = shortest.min(1.0 / sc.system.g_perp);
    }
    let scale = gen.hamiltonian_scale();
    if scale > 0.0 {
        shortest = shortest.min(1.0 / scale);
    }
    (shortest / 50.0).min(0.02)
}

/// Number of RK4 steps between consecutive samples and the resulting step.
pub(crate) fn sample_stepping(sc: &SimScenario, dt_max: f64) -> (u64, f64) {
    let h = sc.t_max / (sc.n_samples - 1) as f64;
    let n = (h / dt_max).ceil().max(1.0) as u64;
    (n, h / n as f64)
}

/// Integrates the conditional equations and returns the fidelity curve
/// together with `rho_1 + rho_2` at every sample time.
pub fn evolve_with_states(sc: &SimScenario) -> Result<(DecayCurve, Vec<Operator>)> {
    sc.validate()?;
    evolve_with_step(sc, step_size(sc))
}

/// [`evolve_with_states`] with an explicit upper bound on the RK4 step.
pub fn evolve_with_step(sc: &SimScenario, dt_max: f64) -> Result<(DecayCurve, Vec<Operator>)> {
    sc.validate()?;
    if !(dt_max > 0.0 && dt_max.is_finite()) {
        return input(format!("step bound must be finite and > 0, got {dt_max}"));
    }
    let gen = Generator::new(sc);
    let (n_steps, dt) = sample_stepping(sc, dt_max);
    let mut map = StepMap::new(2 * N2, dt, |v| gen.vector_rates(v));
    let sample_map = map.power(n_steps);

    let psi0 = sc.initial_ket();
    let frame = ReferenceFrame::new(&build_hamiltonian(&sc.system), &psi0)?;
    let times = sc.times();

    let mut v = ConditionalState::split(&psi0.projector()).to_vector();
    let mut fidelities = Vec::with_capacity(times.len());
    let mut rhos = Vec::with_capacity(times.len());
    let mut diagnostics = Diagnostics::default();

    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            v = &sample_map * v;
        }
        let magnitude = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(magnitude <= INSTABILITY_BOUND) {
            return Err(Error::Integration { time_us: t, magnitude });
        }
        let state = ConditionalState::from_vector(&v, t);
        let rho = state.total();
        diagnostics.observe(&rho);
        let psi = frame.at(t);
        fidelities.push(clamp_fidelity(rho.matrix_element(&psi, &psi).re));
        rhos.push(rho);
    }

    let curve = DecayCurve {
        times,
        fidelities,
        stderr: None,
        diagnostics,
        metadata: CurveMetadata {
            scenario: sc.clone(),
            method: Method::MasterEquation { dt_us: dt },
        },
    };
    Ok((curve, rhos))
}

/// Fidelity curve of the conditional master equations.
pub fn evolve(sc: &SimScenario) -> Result<DecayCurve> {
    evolve_with_states(sc).map(|(curve, _)| curve)
}

/// Averages [`evolve`] over the quasi-static flux-qubit variable
/// `f_R ~ N(0, 1)` with an `n_nodes`-point Gauss–Hermite rule.
pub fn gauss_hermite_average(sc: &SimScenario, n_nodes: usize) -> Result<DecayCurve> {
    if n_nodes < 3 || n_nodes % 2 == 0 {
        return input(format!("n_nodes must be odd and >= 3, got {n_nodes}"));
    }
    sc.validate()?;

    if sc.noise.dephasing_coupling() == 0.0 {
        // integrand independent of f_R
        let mut curve = evolve(&SimScenario { f_r: None, ..sc.clone() })?;
        let dt_us = match curve.metadata.method {
            Method::MasterEquation { dt_us } => dt_us,
            _ => unreachable!(),
        };
        curve.metadata = CurveMetadata {
            scenario: sc.clone(),
            method: Method::GaussHermite { n_nodes, dt_us },
        };
        return Ok(curve);
    }

    let rule = standard_normal_rule(n_nodes)?;
    let runs = parallel::map_ordered(&rule.nodes, |&f| {
        evolve_with_states(&SimScenario {
            f_r: Some(f),
            ..sc.clone()
        })
    });

    let times = sc.times();
    let mut fidelities = vec![0.0; times.len()];
    let mut rhos = vec![hybrid_zero(); times.len()];
    let mut dt_us = 0.0;
    // fixed node order keeps the summation deterministic
    for (run, &w) in runs.into_iter().zip(&rule.weights) {
        let (curve, states) = run?;
        if let Method::MasterEquation { dt_us: dt } = curve.metadata.method {
            dt_us = f64::max(dt_us, dt);
        }
        for (k, (f, rho)) in curve.fidelities.iter().zip(&states).enumerate() {
            fidelities[k] += w * f;
            rhos[k] += rho.matrix() * C64::new(w, 0.0);
        }
    }

    let mut diagnostics = Diagnostics::default();
    for rho in rhos {
        diagnostics.observe(&Operator::new(rho)?);
    }

    Ok(DecayCurve {
        times,
        fidelities: fidelities.into_iter().map(clamp_fidelity).collect(),
        stderr: None,
        diagnostics,
        metadata: CurveMetadata {
            scenario: sc.clone(),
            method: Method::GaussHermite { n_nodes, dt_us },
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseParams;
    use crate::operators::{states, SystemParams};

    const G: f64 = 2.0 * std::f64::consts::PI * 0.1;

    fn scenario(noise: NoiseParams, t_max: f64, n: usize) -> SimScenario {
        SimScenario::new(SystemParams::operating_point(G), noise, t_max, n)
    }

    fn quiet() -> NoiseParams {
        NoiseParams {
            b: 0.0,
            ..NoiseParams::nv_reference()
        }
    }

    #[test]
    fn eigenprojector_is_stationary_without_noise() {
        let sc = scenario(quiet(), 1.0, 2);
        let lv = crate::spectrum::analytic_levels_unchecked(&sc.system);
        let s = ConditionalState::split(&lv.states[3].projector());
        let r = conditional_derivative(&s, &sc).unwrap();
        assert!((&r.drho1 + &r.drho2).max_abs() < 1e-15);
    }

    #[test]
    fn rates_are_traceless() {
        let noise = NoiseParams {
            t1_fq: Some(0.3),
            t2_fq: Some(0.7),
            ..NoiseParams::nv_reference()
        };
        let mut sc = scenario(noise, 1.0, 2);
        sc.f_r = Some(0.8);
        // arbitrary non-physical input still gives traceless rates
        let rho1 = Operator::from_rows(6, &(0..36).map(|k| C64::new(k as f64 * 0.1, (k % 5) as f64)).collect::<Vec<_>>()).unwrap();
        let rho2 = &rho1 * &rho1;
        let s = ConditionalState { rho1, rho2, time: 0.0 };
        let r = conditional_derivative(&s, &sc).unwrap();
        assert!((r.drho1.trace() + r.drho2.trace()).norm() < 1e-12);
    }

    #[test]
    fn switching_relaxes_branch_difference() {
        let noise = NoiseParams { b: 0.0, tau_c: 2.0, ..NoiseParams::nv_reference() };
        let sc = scenario(noise, 1.0, 2);
        let p = states::zero_down().projector();
        let s = ConditionalState { rho1: p.clone(), rho2: Operator::zeros(6), time: 0.0 };
        let r = conditional_derivative(&s, &sc).unwrap();
        assert!((r.drho1.get(3, 3).re + 0.5).abs() < 1e-15);
        assert!((r.drho2.get(3, 3).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn amplitude_damping_of_excited_qubit() {
        let t1 = 0.5;
        let noise = NoiseParams { t1_fq: Some(t1), ..quiet() };
        // g_perp = 0 so |0↑> only decays
        let mut sc = SimScenario::new(SystemParams::operating_point(0.0), noise, 2.0, 21);
        sc.alpha = C64::new(1.0, 0.0);
        sc.beta = C64::new(0.0, 0.0);
        let gen = Generator::new(&sc);
        let (n, dt) = sample_stepping(&sc, step_size(&sc));
        let mut map = StepMap::new(2 * N2, dt, |v| gen.vector_rates(v));
        let up = states::zero_up();
        let mut v = ConditionalState::split(&up.projector()).to_vector();
        for (k, t) in sc.times().into_iter().enumerate() {
            if k > 0 {
                v = map.advance(&v, n);
            }
            let rho = ConditionalState::from_vector(&v, t).total();
            let pop = rho.matrix_element(&up, &up).re;
            assert!((pop - (-t / t1).exp()).abs() < 1e-9, "t={t}: {pop}");
        }
    }

    #[test]
    fn noiseless_curve_is_flat() {
        let c = evolve(&scenario(quiet(), 500.0, 50)).unwrap();
        assert!(c.fidelities.iter().all(|f| (f - 1.0).abs() < 1e-8));
        assert!(c.diagnostics.all_hold());
    }

    #[test]
    fn m0_state_carries_no_magnetic_coherence() {
        let noise = NoiseParams { t1_fq: Some(0.4), ..NoiseParams::nv_reference() };
        let mut sc = scenario(noise, 3000.0, 60);
        sc.alpha = C64::new(1.0, 0.0);
        sc.beta = C64::new(0.0, 0.0);
        let c = evolve(&sc).unwrap();
        assert!(c.fidelities.iter().all(|&f| f >= 1.0 - 1e-6));
    }

    #[test]
    fn detuned_frame_removes_deterministic_phase() {
        let p = SystemParams {
            g_perp: G,
            g_par: 0.0,
            delta_fq: 0.9,
            delta_nv: 0.9,
            b_z: 0.0,
        };
        let sc = SimScenario::new(p, quiet(), 50.0, 40);
        let c = evolve(&sc).unwrap();
        assert!(c.fidelities.iter().all(|f| (f - 1.0).abs() < 1e-8));
    }

    #[test]
    fn quadrature_without_dephasing_equals_single_run() {
        let noise = NoiseParams { t1_fq: Some(0.4), ..NoiseParams::nv_reference() };
        let sc = scenario(noise, 200.0, 20);
        let single = evolve(&sc).unwrap();
        let avg = gauss_hermite_average(&sc, 15).unwrap();
        assert_eq!(single.fidelities, avg.fidelities);
        assert!(gauss_hermite_average(&sc, 1).is_err());
        assert!(gauss_hermite_average(&sc, 4).is_err());
    }

    #[test]
    fn instability_is_reported() {
        let noise = NoiseParams { t1_fq: Some(0.4), ..NoiseParams::nv_reference() };
        let sc = scenario(noise, 100.0, 5);
        // 25 us steps are far outside the RK4 stability region for 1/T1 = 2.5
        match evolve_with_step(&sc, 25.0) {
            Err(Error::Integration { time_us, magnitude }) => {
                assert_eq!(time_us, 25.0);
                assert!(magnitude > INSTABILITY_BOUND);
            }
            other => panic!("expected integration error, got {other:?}"),
        }
    }
}
