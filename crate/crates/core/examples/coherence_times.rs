//! Closed-form coherence times of the bare NV superposition and of the
//! gap-protected dark state.

use std::f64::consts::PI;

use darksim::noise::{self, NoiseParams};

fn main() -> darksim::Result<()> {
    let n = NoiseParams::nv_reference();
    println!("b = {} rad/us, tau_c = {} us", n.b, n.tau_c);
    println!("T_FID  = {:8.3} us", noise::t_fid(&n)?.unwrap());
    println!("T_echo = {:8.3} us", noise::t_echo(&n)?.unwrap());

    println!("\n{:>10} {:>14} {:>14} {:>14}", "G/2π (kHz)", "T_dark |β|²=1", "|β|²=½", "asymptote");
    for khz in [1.0, 10.0, 30.0, 100.0, 300.0] {
        let g = 2.0 * PI * khz * 1e-3;
        let full = noise::t_dark(&n, g, 1.0)?.unwrap() * 1e-6;
        let half = noise::t_dark(&n, g, 0.5)?.unwrap() * 1e-6;
        let asym = noise::t_dark_asymptotic(&n, g, 1.0)?.unwrap() * 1e-6;
        println!("{khz:>10} {full:>12.4e} s {half:>12.4e} s {asym:>12.4e} s");
    }

    let g = darksim::scenarios::G_PERP;
    println!("\nperturbative infidelity at G/2π = 100 kHz, |β|² = ½:");
    for t in [1e3, 1e4, 1e5] {
        println!(
            "  t = {t:>8} us: linear {:.4e}, second order {:.4e}",
            noise::perturbative_infidelity(t, &n, g, 0.5)?,
            noise::second_order_infidelity(t, &n, g, 0.5)?
        );
    }
    Ok(())
}
