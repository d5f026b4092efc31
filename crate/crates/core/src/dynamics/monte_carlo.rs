//! Trajectory sampling of the telegraph noise.
//!
//! Each trajectory draws an explicit path `f(t) ∈ {+1, -1}` that flips at the
//! events of an exponential clock of rate `1/tau_c`, plus a fixed `f_R` from
//! the standard normal when the quasi-static channel is on. Along the path
//! the state follows the ordinary Lindblad equation with `H0 + f(t) b/2 Sz`.
//! The ensemble mean must reproduce the conditional-state result.
//!
//! Every trajectory owns a ChaCha stream selected by its index, so a run is
//! reproducible for a given seed regardless of how trajectories are
//! scheduled.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use super::master::{sample_stepping, step_size, Generator};
use super::propagator::{rk4_step, StepMap};
use super::{
    clamp_fidelity, hybrid_zero, CurveMetadata, DecayCurve, Diagnostics, Method, ReferenceFrame,
    SimScenario, INSTABILITY_BOUND,
};
use crate::error::{input, Error, Result};
use crate::operators::{build_hamiltonian, Operator, HYBRID_DIM};
use crate::parallel;

const N2: usize = HYBRID_DIM * HYBRID_DIM;
const CHUNK: usize = 50;

/// One sampled telegraph path on `[0, t_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TelegraphPath {
    /// `f(0)`, either `+1` or `-1`.
    pub initial: i8,
    /// Flip times in ascending order.
    pub flips: Vec<f64>,
}

impl TelegraphPath {
    /// Stationary path: `f(0)` is `±1` with equal probability and flips occur
    /// at rate `1/tau_c`, giving `E[f(t) f(t+s)] = exp(-2|s|/tau_c)`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, tau_c: f64, t_max: f64) -> Result<Self> {
        if !(tau_c > 0.0 && tau_c.is_finite()) {
            return input(format!("tau_c must be finite and > 0, got {tau_c}"));
        }
        let clock = Exp::new(1.0 / tau_c).map_err(|e| crate::Error::Input(e.to_string()))?;
        let initial = if rng.gen_bool(0.5) { 1 } else { -1 };
        let mut flips = Vec::new();
        let mut t = clock.sample(rng);
        while t < t_max {
            flips.push(t);
            t += clock.sample(rng);
        }
        Ok(Self { initial, flips })
    }

    pub fn value_at(&self, t: f64) -> i8 {
        let n = self.flips.partition_point(|&s| s <= t);
        if n % 2 == 0 {
            self.initial
        } else {
            -self.initial
        }
    }
}

/// Propagators for one value of `f_R`.
#[derive(Clone)]
struct BranchMaps {
    gen: Generator,
    dt: f64,
    steps_per_sample: u64,
    step: [StepMap; 2],
    sample: [DMatrix<C64>; 2],
    /// The two branch Hamiltonians coincide (`b = 0`), flips are irrelevant.
    symmetric: bool,
}

impl BranchMaps {
    fn new(sc: &SimScenario) -> Self {
        let gen = Generator::new(sc);
        let (steps_per_sample, dt) = sample_stepping(sc, step_size(sc));
        let mut step = [0, 1].map(|b| {
            let g = gen.clone();
            StepMap::new(N2, dt, move |v| branch_rate(&g, b, v))
        });
        let sample = [step[0].power(steps_per_sample), step[1].power(steps_per_sample)];
        let symmetric = gen.branch_hamiltonian(0) == gen.branch_hamiltonian(1);
        Self {
            gen,
            dt,
            steps_per_sample,
            step,
            sample,
            symmetric,
        }
    }

    /// Advances `v` by `duration` on one branch: whole RK4 steps through the
    /// cached powers, then one short RK4 step for the remainder.
    fn advance(&mut self, v: DVector<C64>, branch: usize, duration: f64) -> DVector<C64> {
        if duration <= 0.0 {
            return v;
        }
        let whole = ((duration / self.dt).floor() as u64).min(self.steps_per_sample);
        let mut out = self.step[branch].advance(&v, whole);
        let rest = duration - whole as f64 * self.dt;
        if rest > 1e-12 * self.dt {
            let gen = &self.gen;
            out = rk4_step(&out, rest, &|y: &DVector<C64>| branch_rate(gen, branch, y));
        }
        out
    }
}

fn branch_rate(gen: &Generator, branch: usize, v: &DVector<C64>) -> DVector<C64> {
    let rho = DMatrix::from_column_slice(HYBRID_DIM, HYBRID_DIM, v.as_slice());
    let d = gen.lindblad(branch, &rho);
    DVector::from_column_slice(d.as_slice())
}

fn branch_of(sign: i8) -> usize {
    if sign > 0 {
        0
    } else {
        1
    }
}

/// Running mean/variance per sample plus the summed density matrices.
struct Accumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    rho_sum: Vec<DMatrix<C64>>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; n],
            m2: vec![0.0; n],
            rho_sum: vec![hybrid_zero(); n],
        }
    }

    fn push(&mut self, fidelities: &[f64], rhos: Vec<DMatrix<C64>>) {
        self.count += 1;
        let n = self.count as f64;
        for (k, &f) in fidelities.iter().enumerate() {
            let delta = f - self.mean[k];
            self.mean[k] += delta / n;
            self.m2[k] += delta * (f - self.mean[k]);
        }
        for (acc, rho) in self.rho_sum.iter_mut().zip(rhos) {
            *acc += rho;
        }
    }

    /// Chan et al. pairwise combination.
    fn merge(&mut self, other: Accumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for k in 0..self.mean.len() {
            let delta = other.mean[k] - self.mean[k];
            self.mean[k] += delta * nb / n;
            self.m2[k] += other.m2[k] + delta * delta * na * nb / n;
        }
        for (acc, rho) in self.rho_sum.iter_mut().zip(other.rho_sum) {
            *acc += rho;
        }
        self.count += other.count;
    }
}

struct TrajectoryContext<'a> {
    sc: &'a SimScenario,
    times: &'a [f64],
    frame: &'a ReferenceFrame,
    shared: Option<&'a BranchMaps>,
    seed: u64,
    sample_fr: bool,
}

fn run_trajectory(
    ctx: &TrajectoryContext<'_>,
    maps: &mut Option<BranchMaps>,
    index: u64,
) -> Result<(Vec<f64>, Vec<DMatrix<C64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    rng.set_stream(index);
    let t_max = *ctx.times.last().expect("at least two samples");
    let path = TelegraphPath::sample(&mut rng, ctx.sc.noise.tau_c, t_max)?;

    if ctx.sample_fr {
        let f: f64 = StandardNormal.sample(&mut rng);
        *maps = Some(BranchMaps::new(&SimScenario {
            f_r: Some(f),
            ..ctx.sc.clone()
        }));
    } else if maps.is_none() {
        *maps = ctx.shared.cloned();
    }
    let maps = maps.as_mut().expect("propagators prepared");

    let psi0 = ctx.sc.initial_ket();
    let rho0 = psi0.projector();
    let mut v = DVector::from_column_slice(rho0.matrix().as_slice());
    let mut sign = path.initial;
    let mut next_flip = 0;

    let mut fidelities = Vec::with_capacity(ctx.times.len());
    let mut rhos = Vec::with_capacity(ctx.times.len());

    for (k, &t) in ctx.times.iter().enumerate() {
        if k > 0 {
            let start = ctx.times[k - 1];
            let mut flips_here = Vec::new();
            while next_flip < path.flips.len() && path.flips[next_flip] <= t {
                flips_here.push(path.flips[next_flip]);
                next_flip += 1;
            }
            if maps.symmetric || flips_here.is_empty() {
                let branch = if maps.symmetric { 0 } else { branch_of(sign) };
                v = &maps.sample[branch] * v;
                if flips_here.len() % 2 == 1 {
                    sign = -sign;
                }
            } else {
                let mut now = start;
                for s in flips_here {
                    v = maps.advance(v, branch_of(sign), s - now);
                    sign = -sign;
                    now = s;
                }
                v = maps.advance(v, branch_of(sign), t - now);
            }
        }
        let magnitude = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(magnitude <= INSTABILITY_BOUND) {
            return Err(Error::Integration { time_us: t, magnitude });
        }
        let rho = DMatrix::from_column_slice(HYBRID_DIM, HYBRID_DIM, v.as_slice());
        let psi = ctx.frame.at(t);
        let f = psi.vector().dotc(&(&rho * psi.vector())).re;
        fidelities.push(f);
        rhos.push(rho);
    }
    Ok((fidelities, rhos))
}

/// Ensemble average over `n_traj` sampled noise paths.
///
/// The returned curve carries the standard error of the mean per sample
/// (infinite for a single trajectory).
pub fn monte_carlo_oracle(sc: &SimScenario, n_traj: usize, seed: u64) -> Result<DecayCurve> {
    if n_traj == 0 {
        return input("n_traj must be at least 1");
    }
    sc.validate()?;
    let times = sc.times();
    let frame = ReferenceFrame::new(&build_hamiltonian(&sc.system), &sc.initial_ket())?;
    let sample_fr = sc.noise.dephasing_coupling() != 0.0;
    let shared = (!sample_fr).then(|| BranchMaps::new(&SimScenario { f_r: None, ..sc.clone() }));
    let dt_us = shared
        .as_ref()
        .map(|m| m.dt)
        .unwrap_or_else(|| step_size(sc));

    let ctx = TrajectoryContext {
        sc,
        times: &times,
        frame: &frame,
        shared: shared.as_ref(),
        seed,
        sample_fr,
    };

    let chunks: Vec<(usize, usize)> = (0..n_traj)
        .step_by(CHUNK)
        .map(|start| (start, (start + CHUNK).min(n_traj)))
        .collect();
    let partials = parallel::map_ordered(&chunks, |&(start, end)| -> Result<Accumulator> {
        let mut acc = Accumulator::new(times.len());
        let mut maps = None;
        for index in start..end {
            let (f, rhos) = run_trajectory(&ctx, &mut maps, index as u64)?;
            acc.push(&f, rhos);
        }
        Ok(acc)
    });

    let mut total = Accumulator::new(times.len());
    for part in partials {
        total.merge(part?);
    }

    let n = total.count as f64;
    let stderr: Vec<f64> = total
        .m2
        .iter()
        .map(|&m2| {
            if total.count < 2 {
                f64::INFINITY
            } else {
                (m2.max(0.0) / (n - 1.0) / n).sqrt()
            }
        })
        .collect();

    let mut diagnostics = Diagnostics::default();
    for rho in &total.rho_sum {
        diagnostics.observe(&Operator::new(rho * C64::new(1.0 / n, 0.0))?);
    }

    Ok(DecayCurve {
        times,
        fidelities: total.mean.into_iter().map(clamp_fidelity).collect(),
        stderr: Some(stderr),
        diagnostics,
        metadata: CurveMetadata {
            scenario: sc.clone(),
            method: Method::MonteCarlo { n_traj, seed, dt_us },
        },
    })
}
