//! The conditional master equations against an explicit average over sampled
//! telegraph paths.
//!
//! ```text
//! cargo run --release --example oracle_crosscheck -- 2000 42
//! ```

use darksim::cli::compare_with_oracle;
use darksim::dynamics::{evolve, monte_carlo_oracle};
use darksim::scenarios;

fn main() -> darksim::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_traj: usize = args.next().map(|s| s.parse().expect("trajectory count")).unwrap_or(500);
    let seed: u64 = args.next().map(|s| s.parse().expect("seed")).unwrap_or(42);

    let sc = scenarios::relaxation(0.4)?;
    let me = evolve(&sc)?;
    let mc = monte_carlo_oracle(&sc, n_traj, seed)?;
    let se = mc.stderr.as_ref().expect("sampled curve");

    println!("{:>10} {:>12} {:>12} {:>10}", "t (us)", "master eq.", "trajectories", "stderr");
    for k in (0..me.len()).step_by(30) {
        println!("{:>10.1} {:>12.6} {:>12.6} {:>10.2e}", me.times[k], me.fidelities[k], mc.fidelities[k], se[k]);
    }

    let cmp = compare_with_oracle(&me, &mc)?;
    println!(
        "\n{n_traj} trajectories: max |ΔF| = {:.2e}, worst point {:.2} standard errors",
        cmp.max_abs_deviation, cmp.max_sigma_deviation
    );
    Ok(())
}
