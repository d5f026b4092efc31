//! Dark-state decay under telegraph noise with flux-qubit relaxation, for
//! several qubit `T1` values. Pass a directory to also write the curves.
//!
//! ```text
//! cargo run --release --example relaxation_decay -- out/
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use darksim::dynamics::evolve;
use darksim::fitting::fit_exponential;
use darksim::scenarios;

fn main() -> darksim::Result<()> {
    let out_dir = std::env::args().nth(1).map(PathBuf::from);

    println!("{:>8} {:>10} {:>10} {:>12}", "T1 (us)", "1/Γ (ms)", "reported", "rms");
    for (t1, reported) in scenarios::RELAXATION_T1_US.iter().zip(scenarios::RELAXATION_INV_GAMMA_MS) {
        let curve = evolve(&scenarios::relaxation(*t1)?)?;
        let fit = fit_exponential(&curve)?;
        println!("{t1:>8} {:>10.3} {reported:>10} {:>12.2e}", fit.inv_gamma_ms(), fit.rms_residual);

        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir)?;
            let mut csv = String::from("t_us,fidelity\n");
            for (t, f) in curve.times.iter().zip(&curve.fidelities) {
                let _ = writeln!(csv, "{t},{f}");
            }
            std::fs::write(dir.join(format!("relaxation_t1_{t1}.csv")), csv)?;
        }
    }
    Ok(())
}
