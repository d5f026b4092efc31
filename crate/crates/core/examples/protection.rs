//! Fidelity of the same superposition with and without the transverse
//! coupling that opens the protective gap.

use darksim::dynamics::evolve;
use darksim::fitting::fit_exponential;
use darksim::noise::{t_echo, NoiseParams};
use darksim::operators::SystemParams;
use darksim::scenarios;

fn main() -> darksim::Result<()> {
    let noise = NoiseParams { t1_fq: Some(0.4), ..NoiseParams::nv_reference() };
    let echo = t_echo(&noise)?.unwrap();

    for g in [0.0, scenarios::G_PERP] {
        let sc = scenarios::custom(SystemParams::operating_point(g), noise)?;
        let curve = evolve(&sc)?;
        let fit = fit_exponential(&curve)?;
        println!(
            "G = {g:.4} rad/us: 1/Γ = {:9.1} us over {:7.0} us ({:.1} x T_echo)",
            fit.inv_gamma,
            sc.t_max,
            fit.inv_gamma / echo
        );
        let step = curve.len() / 6;
        let row: Vec<String> = (0..curve.len())
            .step_by(step)
            .map(|k| format!("{:.3}", curve.fidelities[k]))
            .collect();
        println!("  F: {}", row.join(" "));
    }
    Ok(())
}
