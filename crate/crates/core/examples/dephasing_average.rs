//! Quasi-static flux-qubit dephasing averaged with Gauss–Hermite quadrature,
//! at fixed `T1 = 0.4 us`.

use darksim::dynamics::gauss_hermite_average;
use darksim::fitting::fit_exponential;
use darksim::scenarios;

fn main() -> darksim::Result<()> {
    let nodes = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("odd node count"))
        .unwrap_or(scenarios::N_NODES);

    println!("{nodes} quadrature nodes");
    println!("{:>8} {:>10} {:>10}", "T2 (us)", "1/Γ (ms)", "reported");
    for (t2, reported) in scenarios::DEPHASING_T2_US.iter().zip(scenarios::DEPHASING_INV_GAMMA_MS) {
        let curve = gauss_hermite_average(&scenarios::dephasing(*t2)?, nodes)?;
        let fit = fit_exponential(&curve)?;
        let label = t2.map_or("inf".into(), |t| t.to_string());
        println!("{label:>8} {:>10.3} {reported:>10}", fit.inv_gamma_ms());
    }
    Ok(())
}
