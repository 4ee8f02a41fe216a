//! Schur multipliers `T ↦ A ∘ T` with a positive semidefinite symbol are
//! locally completely positive, and contractive when `A` has unit diagonal.
//!
//! Run with `cargo run --example schur -- 4`.

use std::sync::Arc;

use locp::fixtures::{rng, schur_symbol};
use locp::local_algebra::block_diagonal_algebra;
use locp::{schur_map, verify_local_cc, verify_local_cp, Flag, Tolerances};

fn main() -> locp::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let tol = Tolerances::default();
    let flag = Flag::standard(n, if n <= 2 { vec![n] } else { vec![2, n] })?;
    let alg = Arc::new(block_diagonal_algebra(&flag, &tol)?);
    let symbol = schur_symbol(&mut rng(42), n);
    println!("symbol A ({n}x{n}, unit diagonal):{:.3}", symbol);

    let map = schur_map(&symbol, &flag, alg, &tol)?;
    let cp = verify_local_cp(&map, &tol);
    println!("{cp}");
    let cc = verify_local_cc(&map, &tol)?;
    println!("{cc}");
    Ok(())
}
