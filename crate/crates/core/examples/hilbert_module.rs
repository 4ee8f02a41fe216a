//! A Hilbert module over a local algebra, a CP-inducing map on it, and the
//! dilation `Φ(x) = W* ρ(x) V` built on top of the minimal dilation of `φ`.
//!
//! Run with `cargo run --example hilbert_module -- <seed>`.

use locp::fixtures::random_module_fixture;
use locp::hilbert_module::{module_dilate, verify_module_dilation, verify_phi_map};
use locp::Tolerances;

fn main() -> locp::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let tol = Tolerances::default();
    let fx = random_module_fixture(seed, &tol)?;
    let module = &fx.module;
    println!(
        "module of dimension {} over an algebra of dimension {}, carrier C^{}",
        module.dim(),
        fx.algebra.dim(),
        module.carrier().ambient()
    );

    // Φ(x)* Φ(y) = φ(<x, y>) is what makes Φ a φ-map.
    println!("{}", verify_phi_map(&fx.inducing, &tol));

    let d = module_dilate(&fx.inducing, &tol)?;
    println!("dilation: C^{} for pi, C^{} with levels {:?} for rho", d.stinespring().dim(), d.k_dim(), d.k_flag().dims());
    println!("{}", verify_module_dilation(&d, &tol));
    Ok(())
}
