//! Weak-noise dynamics without flux-qubit channels compared with the
//! perturbative infidelity.

use darksim::dynamics::{evolve, SimScenario};
use darksim::noise::{perturbative_infidelity_raw, second_order_infidelity, NoiseParams};
use darksim::operators::SystemParams;
use darksim::scenarios::G_PERP;

fn main() -> darksim::Result<()> {
    let n = NoiseParams::nv_reference();
    let sc = SimScenario::new(SystemParams::operating_point(G_PERP), n, 30_000.0, 31);
    let curve = evolve(&sc)?;
    let b2 = sc.beta_sq();

    println!("{:>8} {:>12} {:>12} {:>12}", "t (us)", "simulated", "linear", "2nd order");
    for (t, f) in curve.times.iter().zip(&curve.fidelities).step_by(3) {
        println!(
            "{t:>8} {:>12.4e} {:>12.4e} {:>12.4e}",
            1.0 - f,
            perturbative_infidelity_raw(*t, &n, G_PERP, b2)?,
            second_order_infidelity(*t, &n, G_PERP, b2)?
        );
    }
    Ok(())
}
