use darksim::fitting::{fit_samples, model};
use darksim::noise::{self, NoiseParams};
use darksim::operators::{build_hamiltonian, noise_operator, states, SystemParams};
use darksim::spectrum::analytic_subspace;
use proptest::prelude::*;

fn any_params() -> impl Strategy<Value = SystemParams> {
    (0.0..5.0, -3.0..3.0, -10.0..10.0, -10.0..10.0, -3.0..3.0).prop_map(|(g_perp, g_par, delta_fq, delta_nv, b_z)| {
        SystemParams {
            g_perp,
            g_par,
            delta_fq,
            delta_nv,
            b_z,
        }
    })
}

fn operating_points() -> impl Strategy<Value = SystemParams> {
    (0.01..5.0, -3.0..3.0, -10.0..10.0).prop_map(|(g, l, d)| SystemParams {
        g_perp: g,
        g_par: l,
        delta_fq: d,
        delta_nv: d,
        b_z: l,
    })
}

fn noise_params() -> impl Strategy<Value = NoiseParams> {
    (1e-3..1.0, 1.0..5000.0).prop_map(|(b, tau_c)| NoiseParams {
        b,
        tau_c,
        t1_fq: None,
        t2_fq: None,
    })
}

proptest! {
    #[test]
    fn hamiltonian_is_hermitian(p in any_params()) {
        prop_assert!(build_hamiltonian(&p).is_hermitian(1e-12));
    }

    #[test]
    fn hamiltonian_is_linear(p in any_params(), q in any_params()) {
        let sum = build_hamiltonian(&(p + q));
        let parts = build_hamiltonian(&p) + build_hamiltonian(&q);
        prop_assert!((sum - parts).max_abs() <= 1e-12);
    }

    #[test]
    fn dark_state_is_stationary(p in operating_points()) {
        let h = build_hamiltonian(&p);
        let c = h.commutator(&states::dark_down().projector());
        prop_assert!(c.max_abs() <= 1e-12);
    }

    #[test]
    fn block_is_invariant_without_longitudinal_terms(g in 0.0..5.0f64, dfq in -10.0..10.0f64, dnv in -10.0..10.0f64) {
        let p = SystemParams { g_perp: g, g_par: 0.0, delta_fq: dfq, delta_nv: dnv, b_z: 0.0 };
        let h = build_hamiltonian(&p);
        for outside in states::two_excitation() {
            for inside in states::single_excitation_block() {
                prop_assert_eq!(h.matrix_element(&outside, &inside).norm(), 0.0);
            }
        }
    }

    #[test]
    fn analytic_levels_keep_the_gap(p in operating_points()) {
        let levels = analytic_subspace(&p).unwrap();
        let by_energy = |e: f64| levels.eigenvalues.iter().any(|x| (x - e).abs() <= 1e-12);
        let d = p.delta_nv / 2.0;
        prop_assert!(by_energy(d - p.g_perp) && by_energy(d) && by_energy(d + p.g_perp));
    }

    #[test]
    fn lowest_and_dark_levels_are_zeeman_insensitive(p in operating_points()) {
        let sz = noise_operator();
        for k in [states::zero_down(), states::dark_down()] {
            prop_assert!(sz.matrix_element(&k, &k).norm() <= 1e-12);
        }
        let es = analytic_subspace(&p).unwrap();
        let dark = states::dark_down();
        let best = (0..es.len()).map(|k| es.vector(k).inner(&dark).norm()).fold(0.0, f64::max);
        prop_assert!((best - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn dark_time_monotonicity(n in noise_params(), g in 0.0..5.0f64, beta_sq in 0.05..0.95f64, k in 1.01..2.0f64) {
        let t = |n: &NoiseParams, g: f64, b2: f64| noise::t_dark(n, g, b2).unwrap().unwrap();
        let base = t(&n, g, beta_sq);
        prop_assert!(t(&n, g * k + 1e-3, beta_sq) > base);
        let louder = NoiseParams { b: n.b * k, ..n };
        prop_assert!(t(&louder, g, beta_sq) < base);
        prop_assert!(t(&n, g, (beta_sq * k).min(1.0)) < base);
        if g * n.tau_c >= 2.0 {
            let slower = NoiseParams { tau_c: n.tau_c * k, ..n };
            prop_assert!(t(&slower, g, beta_sq) > base);
        }
    }

    #[test]
    fn dark_time_asymptote(n in noise_params(), g in 0.01..5.0f64, beta_sq in 0.05..1.0f64) {
        prop_assume!(g * n.tau_c >= 10.0);
        let exact = noise::t_dark(&n, g, beta_sq).unwrap().unwrap();
        let asym = noise::t_dark_asymptotic(&n, g, beta_sq).unwrap().unwrap();
        prop_assert!((exact - asym).abs() / exact <= (2.0 / (g * n.tau_c)).powi(2) + 1e-14);
    }

    #[test]
    fn infidelity_and_dark_time_share_a_rate(n in noise_params(), g in 0.0..5.0f64, beta_sq in 0.05..1.0f64, t in 0.0..1e6f64) {
        let raw = noise::perturbative_infidelity_raw(t, &n, g, beta_sq).unwrap();
        let td = noise::t_dark(&n, g, beta_sq).unwrap().unwrap();
        prop_assert!((raw * td - t).abs() <= 1e-12 * t.max(1.0));
        let clamped = noise::perturbative_infidelity(t, &n, g, beta_sq).unwrap();
        prop_assert!((0.0..=0.5).contains(&clamped));
    }

    #[test]
    fn noise_spectrum_is_even_and_positive(f in -10.0..10.0f64, tau_c in 0.1..5000.0f64) {
        let a = noise::oun_power_spectrum(f, tau_c).unwrap();
        prop_assert!(a > 0.0);
        prop_assert_eq!(a, noise::oun_power_spectrum(-f, tau_c).unwrap());
    }

    #[test]
    fn fit_is_scale_equivariant(gamma in 1e-4..1e-1f64, c in 1e-3..1e3f64, wiggle in 0.0..1e-3f64) {
        let t_max = 3.0 / gamma;
        let times: Vec<f64> = (0..120).map(|k| t_max * k as f64 / 119.0).collect();
        let f: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(k, &t)| (model(gamma, t) + wiggle * ((k * 7919) % 13) as f64 / 13.0 - wiggle / 2.0).clamp(0.0, 1.0))
            .collect();
        let scaled: Vec<f64> = times.iter().map(|t| t * c).collect();
        let a = fit_samples(&times, &f).unwrap();
        let b = fit_samples(&scaled, &f).unwrap();
        prop_assert!((a.gamma - b.gamma * c).abs() <= 1e-9 * a.gamma);
    }
}
