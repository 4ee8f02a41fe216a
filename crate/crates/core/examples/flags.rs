//! Flags, flag-compatible operators and the level seminorms.
//!
//! Run with `cargo run --example flags`.

use locp::linalg::{c, real, CMat};
use locp::{local_order, BlockOp, Flag, LocalOrder};

fn main() -> locp::Result<()> {
    // C^4 filtered as C^1 ⊂ C^2 ⊂ C^4 in the standard basis.
    let flag = Flag::standard(4, vec![1, 2, 4])?;

    // Block diagonal with respect to the levels, so it respects the flag.
    #[rustfmt::skip]
    let t = CMat::from_row_slice(4, 4, &[
        real(3.0), real(0.0), real(0.0),  real(0.0),
        real(0.0), real(-1.0), real(0.0), real(0.0),
        real(0.0), real(0.0), real(2.0),  c(0.0, 1.0),
        real(0.0), real(0.0), c(0.0, -1.0), real(5.0),
    ]);
    let op = BlockOp::square(t, &flag, 1e-9)?;

    for l in 1..=flag.levels() {
        let order = local_order(&op, l, 1e-9)?;
        println!("level {l}: dim {}, seminorm {:.4}, order {order:?}", flag.dim(l)?, op.seminorm(l)?);
    }

    // An operator that mixes level 1 into its complement is rejected.
    let mut bad = CMat::identity(4, 4);
    bad[(1, 0)] = real(1.0);
    match BlockOp::square(bad, &flag, 1e-9) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("off-diagonal block must be caught"),
    }

    let zero_at_1 = BlockOp::square(CMat::from_diagonal_element(4, 4, real(1.0)) - flag.projection(1)?, &flag, 1e-9)?;
    assert_eq!(local_order(&zero_at_1, 1, 1e-9)?, LocalOrder::Zero);
    println!("1 - P_1 vanishes at level 1 and is positive above it");
    Ok(())
}
