//! Energy levels of the hybrid system at the operating point, closed form
//! against numeric diagonalization.
//!
//! ```text
//! cargo run --example spectrum -- 0.6283
//! ```

use darksim::operators::{build_hamiltonian, states, SystemParams};
use darksim::spectrum::{analytic_subspace, compare_spectra, numeric_block, numeric_eigensystem};

fn main() -> darksim::Result<()> {
    let g_perp: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("g_perp in rad/us"))
        .unwrap_or(darksim::scenarios::G_PERP);
    let p = SystemParams { delta_fq: 0.3, delta_nv: 0.3, ..SystemParams::operating_point(g_perp) };
    let h = build_hamiltonian(&p);

    let analytic = analytic_subspace(&p)?;
    let block = numeric_block(&h)?;
    let full = numeric_eigensystem(&h)?;

    println!("closed form   numeric block");
    for (a, n) in analytic.eigenvalues.iter().zip(&block.eigenvalues) {
        println!("{a:+12.8}  {n:+12.8}");
    }
    println!("\nfull spectrum: {:.8?}", full.eigenvalues);

    let cmp = compare_spectra(&analytic, &block, 1e-8);
    println!(
        "\nmax level error {:.2e}, max projector error {:.2e}",
        cmp.max_eigenvalue_error, cmp.max_projector_error
    );

    let dark = states::dark_down().projector();
    println!("|[H0, |D↓><D↓|]| = {:.2e}", h.commutator(&dark).max_abs());
    Ok(())
}
