//! Whether `g` intertwines a character of `H1`: `theta(g x g^-1) = theta(x)`
//! for every `x` in `H1` with `g x g^-1` in `H1`.

use crate::error::{Error, Result};
use crate::padic::{Elem, MatrixApprox};

use super::family::SubgroupFamily;
use super::GroupCharacter;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntertwiningOutcome {
    pub intertwines: bool,
    /// Size of `H1 ∩ g^-1 H1 g` modulo `p^N`.
    pub intersection: u64,
    /// An `x` with `theta(g x g^-1) != theta(x)`.
    pub witness: Option<Elem>,
}

/// Fast path for `g` in `GL_n(Z_p)`, given by its residues modulo `p^N`.
pub fn intertwines_residue(
    fam: &SubgroupFamily,
    theta: &GroupCharacter,
    g: &[u32],
    budget: u128,
) -> Result<IntertwiningOutcome> {
    let arena = *fam.arena();
    let g_inv = arena.inv(g).ok_or(Error::Singular)?;
    let h1 = theta.group();
    let mut buf = vec![0u32; arena.n() * arena.n()];
    let mut intersection = 0;
    for x in h1.elements(budget)? {
        arena.mul_into(&arena.mul(g, &x), &g_inv, &mut buf);
        if let Some(ty) = theta.value(&buf) {
            intersection += 1;
            if Some(ty) != theta.value(&x) {
                return Ok(IntertwiningOutcome {
                    intertwines: false,
                    intersection,
                    witness: Some(x),
                });
            }
        }
    }
    Ok(IntertwiningOutcome {
        intertwines: true,
        intersection,
        witness: None,
    })
}

/// General `g` in `GL_n(Q_p)`. The computation modulo `p^N` is only
/// meaningful when `g (1 + p^N M_n) g^-1` lies in `U_A(j+1)`, where theta is
/// trivial; otherwise a `PrecisionLoss` is raised.
pub fn intertwines(
    fam: &SubgroupFamily,
    theta: &GroupCharacter,
    g: &MatrixApprox,
    budget: u128,
) -> Result<IntertwiningOutcome> {
    let arena = *fam.arena();
    let level = fam.level();
    if g.is_zero() {
        return Err(Error::Singular);
    }
    if g.scale() == 0 {
        let res = g.to_residues(level)?;
        if arena.is_invertible(&res) {
            return intertwines_residue(fam, theta, &res, budget);
        }
    }
    // scalars commute, so conjugate by the primitive part only
    let unit_part = g.shift(-g.scale());
    let inv = unit_part.mat_inv()?;
    let conj = |x: &MatrixApprox| -> Result<MatrixApprox> { unit_part.mul(x)?.mul(&inv) };
    let (n, ctx) = (arena.n(), g.ctx());
    let order = fam.datum().order();
    let depth = fam.datum().depth();
    for k in 0..n * n {
        let e = MatrixApprox::elementary(ctx, n, k / n, k % n, level as i64);
        if !order.contains(&conj(&e)?, depth + 1)? {
            return Err(Error::PrecisionLoss(format!(
                "conjugation by g moves 1 + p^{level} M_n outside U_A(j+1); raise the level"
            )));
        }
    }
    let mut intersection = 0;
    for x in theta.group().elements(budget)? {
        let y = conj(&MatrixApprox::from_residues(ctx, n, &x)?)?;
        if y.scale() < 0 {
            continue;
        }
        let y = y.to_residues(level)?;
        if let Some(ty) = theta.value(&y) {
            intersection += 1;
            if Some(ty) != theta.value(&x) {
                return Ok(IntertwiningOutcome {
                    intertwines: false,
                    intersection,
                    witness: Some(x),
                });
            }
        }
    }
    Ok(IntertwiningOutcome {
        intertwines: true,
        intersection,
        witness: None,
    })
}
