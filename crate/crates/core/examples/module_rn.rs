//! Module Radon-Nikodym: build `Ψ = Φ_{T⊕S}` from a commutant pair, then
//! recover `(T, S)` from `(Φ, Ψ)` alone.
//!
//! Run with `cargo run --example module_rn -- <seed>`.

use locp::fixtures::{commutant_pair, random_module_fixture};
use locp::hilbert_module::{map_from_commutant_pair, module_dilate, module_rn};
use locp::linalg::frob;
use locp::Tolerances;

fn main() -> locp::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let tol = Tolerances::default();
    let fx = random_module_fixture(seed, &tol)?;
    let d = module_dilate(&fx.inducing, &tol)?;

    let (t, s) = commutant_pair(&d, seed, &tol)?;
    let psi = map_from_commutant_pair(&d, &t, &s, &tol)?;

    let rn = module_rn(&fx.inducing, &psi, &tol)?;
    println!("{}", rn.report);
    println!("|(|T|) - T|_F = {:.2e}", frob(&(&rn.abs_t - &t)));
    println!("|(|S|) - S|_F = {:.2e}", frob(&(&rn.abs_s - &s)));
    println!("|Psi - Phi_R| = {:.2e}", psi.distance(&rn.phi_r));
    Ok(())
}
