//! Two CP-inducing maps over the same `φ` differ by a partial isometry `W`
//! with `Φ2 = W Φ1`.
//!
//! Run with `cargo run --example partial_isometry -- <seed>`.

use locp::fixtures::{random_flag_unitary, random_module_fixture, rng};
use locp::hilbert_module::equivalence_partial_isometry;
use locp::linalg::frob;
use locp::Tolerances;

fn main() -> locp::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let tol = Tolerances::default();
    let fx = random_module_fixture(seed, &tol)?;
    let c1 = &fx.inducing;
    let u = random_flag_unitary(&mut rng(seed + 1), c1.target());
    let c2 = c1.left_multiplied(&u, &tol)?;

    let (w, report) = equivalence_partial_isometry(c1, &c2, &tol)?;
    println!("{report}");
    println!("|W W* W - W|_F = {:.2e}", frob(&(&w * w.adjoint() * &w - &w)));

    let (w_back, _) = equivalence_partial_isometry(&c2, c1, &tol)?;
    println!("|W(2->1) - W(1->2)*|_F = {:.2e}", frob(&(w_back - w.adjoint())));

    // Inducing maps over different φ are never equivalent.
    let half = c1.phi().scaled(0.25);
    let images = c1.images().iter().map(|b| b.matrix() * locp::linalg::real(0.5)).collect();
    let c3 = locp::CPInducingMap::new(c1.module().clone(), half, c1.target(), images, &tol)?;
    match equivalence_partial_isometry(c1, &c3, &tol) {
        Err(e) => println!("different phi: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
