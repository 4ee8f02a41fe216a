//! Radon-Nikodym derivatives: every `ψ <= φ` is `a ↦ V* T π(a) V` for a
//! unique positive contraction `T` in the commutant of `π`.
//!
//! Run with `cargo run --example radon_nikodym -- <seed>`.

use locp::fixtures::{random_cp_fixture, Limits};
use locp::linalg::frob;
use locp::radon_nikodym::{commutant_basis, derivative, map_from_derivative, sample_contraction_in_commutant};
use locp::{dilate_minimal, dominates, Tolerances};

fn main() -> locp::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let tol = Tolerances::default();
    let phi = random_cp_fixture(seed, Limits::default(), &tol)?.map;
    let rep = dilate_minimal(&phi, &tol)?;

    let basis = commutant_basis(&rep, &tol);
    println!("dilation dimension {}, Hermitian commutant of dimension {}", rep.dim(), basis.len());

    let t0 = sample_contraction_in_commutant(&basis, seed)?;
    let psi = map_from_derivative(&rep, &t0, &tol)?;
    println!("phi dominates psi: {}", dominates(&phi, &psi, &tol)?.pass);

    let cert = derivative(&rep, &psi, &tol)?;
    println!("|T - T0|_F = {:.2e}", frob(&(&cert.t_matrix - &t0)));
    println!("reconstruction residual {:.2e}, commutant residual {:.2e}", cert.residual_reconstruction, cert.residual_commutant);
    println!("spectrum of T in [{:.4}, {:.4}]", cert.spectrum_bounds.0, cert.spectrum_bounds.1);

    // The reverse direction fails: psi does not dominate phi unless T = 1.
    let back = dominates(&psi, &phi, &tol)?;
    println!("psi dominates phi: {}", back.pass);
    Ok(())
}
