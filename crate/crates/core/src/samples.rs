//! The example data shipped with the crate, all at `p = 3`.
//!
//! `Pi = [[0, 1], [p, 0]]` is the standard uniformizer of the period-2
//! order in `M_2`. The same data are also shipped as text files under `data/`.

use crate::error::Result;
use crate::orders::{ceil_div, HereditaryOrder, InductionDatum};
use crate::padic::{MatrixApprox, PrecisionCtx};

pub const P: u64 = 3;
pub const DEFAULT_MARGIN: u32 = 2;

/// Working precision for a datum: the group level `ceil(j/e) + 1`, the same
/// again to absorb products with beta, plus a safety margin.
pub fn working_precision(e: usize, j: i64, margin: u32) -> u32 {
    let level = ceil_div(j, e as i64) as u32 + 1;
    2 * level + margin
}

fn ctx_for(e: usize, j: i64) -> PrecisionCtx {
    PrecisionCtx::new(P, working_precision(e, j, DEFAULT_MARGIN)).expect("p = 3 is prime")
}

fn datum(n: usize, e: usize, j: i64, scale: i64, beta: &[i64]) -> Result<InductionDatum> {
    let ctx = ctx_for(e, j);
    let order = HereditaryOrder::new(n, e)?;
    InductionDatum::new(order, MatrixApprox::from_integers(ctx, n, scale, beta)?, j)
}

/// `beta = Pi^-1 = p^-1 Pi`: totally ramified, depth 1.
pub fn ramified_depth_one() -> InductionDatum {
    datum(2, 2, 1, -1, &[0, 1, 3, 0]).expect("shipped datum is valid")
}

/// `beta = Pi^-3 = p^-2 Pi`: totally ramified, depth 3.
pub fn ramified_depth_three() -> InductionDatum {
    datum(2, 2, 3, -2, &[0, 1, 3, 0]).expect("shipped datum is valid")
}

/// `beta = p^-2 [[0, -1], [1, 0]]`: unramified quadratic (`x^2 + 1` is
/// irreducible mod 3), depth 2.
pub fn unramified_depth_two() -> InductionDatum {
    datum(2, 1, 2, -2, &[0, -1, 1, 0]).expect("shipped datum is valid")
}

/// `beta = Pi^-2 = p^-1 I`: generates no field, and `gcd(j, e) = 2`.
pub fn ramified_square() -> InductionDatum {
    let ctx = ctx_for(2, 2);
    let order = HereditaryOrder::new(2, 2).expect("2 divides 2");
    let beta = MatrixApprox::from_integers(ctx, 2, -1, &[1, 0, 0, 1]).expect("unit entries");
    InductionDatum::new_uncertified(order, beta, 2).expect("v_A(p^-1 I) = -2")
}

/// `p^-1 diag(1, 2)` over the maximal order: a split element, rejected.
pub fn split_element() -> Result<InductionDatum> {
    datum(2, 1, 1, -1, &[1, 0, 0, 2])
}

/// Second ramified block for the parabolic example: `p^-1 [[0, 1], [2p, 0]]`,
/// generating `Q_3(sqrt 6)` rather than `Q_3(sqrt 3)`.
pub fn ramified_depth_one_twisted() -> InductionDatum {
    datum(2, 2, 1, -1, &[0, 1, 6, 0]).expect("shipped datum is valid")
}

/// The two blocks of the `4 = 2 + 2` parabolic example.
pub fn parabolic_blocks() -> Vec<InductionDatum> {
    vec![ramified_depth_one(), ramified_depth_one_twisted()]
}

/// Unramified depth-1 data with normalised depth 1, used for depth bookkeeping.
pub fn unramified_depth_one_pair() -> Vec<InductionDatum> {
    vec![
        datum(2, 1, 1, -1, &[0, -1, 1, 0]).expect("x^2 + 1 is irreducible mod 3"),
        // companion matrix of x^2 + x + 2
        datum(2, 1, 1, -1, &[0, -2, 1, -1]).expect("x^2 + x + 2 is irreducible mod 3"),
    ]
}
