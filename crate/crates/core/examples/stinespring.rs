//! Minimal dilation `φ(a) = V* π(a) V` of a random local CP map, with the
//! flag on the dilation space and the certificate that checks it.
//!
//! Run with `cargo run --example stinespring -- <seed>`.

use locp::fixtures::{random_cp_fixture, Limits};
use locp::stinespring::{dilate_minimal, pad_with_defining, unitary_equivalence, verify_dilation};
use locp::Tolerances;

fn main() -> locp::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let tol = Tolerances::default();
    let fx = random_cp_fixture(seed, Limits::default(), &tol)?;
    let map = &fx.map;
    println!(
        "algebra of dimension {} on C^{}, target C^{} with levels {:?}, {} Kraus operators",
        fx.algebra.dim(),
        fx.algebra.domain().ambient(),
        map.target().ambient(),
        map.target().dims(),
        fx.kraus.len()
    );

    let rep = dilate_minimal(map, &tol)?;
    println!("dilation space C^{} with levels {:?}", rep.dim(), rep.dil_flag().dims());
    println!("{}", verify_dilation(&rep, &tol));

    // Minimal dilations are unique up to a unitary that respects the flags.
    let (u, report) = unitary_equivalence(&rep, &rep, &tol)?;
    println!("self-equivalence is the identity: {}", report.pass && (u - locp::linalg::identity(rep.dim())).norm() < 1e-9);

    // Padding with the defining representation gives a dilation that is not minimal.
    if let Ok(padded) = pad_with_defining(&rep) {
        let r = verify_dilation(&padded, &tol);
        println!("padded dilation on C^{}: minimal = {}", padded.dim(), r.pass);
    }
    Ok(())
}
