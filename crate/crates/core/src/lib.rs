//! Exact finite-level computations with minimal vectors for `GL_n(Q_p)`.
//!
//! The crate is layered bottom-up:
//!
//! * [`padic`]: truncated p-adic scalars and matrices, and matrices mod `p^k`.
//! * [`cyclo`]: roots of unity of p-power order and exact sums of them.
//! * [`orders`]: principal hereditary orders, their filtrations, `k0` and the
//!   minimality test for an element `beta`.
//! * [`groups`]: finite subgroups, simple characters, Heisenberg extensions,
//!   intertwining, and the parabolic support group with its character.
//! * [`testfunc`]: the test function, volumes, convolution identity and
//!   concentration near the torus.
//! * [`counting`]: determinant-constrained integer matrix enumeration and the
//!   amplifier exponent bookkeeping.
//! * [`files`]: the datum and query text formats.

pub mod counting;
pub mod cyclo;
pub mod error;
pub mod files;
pub mod groups;
pub mod orders;
pub mod padic;
pub mod samples;
pub mod testfunc;

pub use error::{Error, Result};
