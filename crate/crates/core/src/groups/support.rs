//! The support group `K_pi` and its character `Theta`.
//!
//! For one datum `K_pi = B1` and `Theta` is the extension of theta to it.
//! For a list of data with block sizes `n_1, ..., n_k` and `c = ceil(max c_i)`,
//! `K_pi` consists of the matrices modulo `p^(c+1)` whose diagonal blocks lie
//! in the `B1` of their datum, whose blocks above the diagonal are divisible
//! by `p^floor((c+1)/2)` and whose blocks below are divisible by
//! `p^ceil((c+1)/2)`; `Theta` is the sum of the block characters.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::orders::InductionDatum;
use crate::padic::ResidueMatrices;

use super::family::{
    build_subgroups_at, group_level, simple_character, SimpleCharacter, SubgroupFamily,
};
use super::heisenberg::{extend_and_induce, heisenberg};
use super::{FiniteSubgroup, GroupCharacter, PairCheck};

/// Limits and seeds for building `K_pi`.
#[derive(Clone, Copy, Debug)]
pub struct SupportOptions {
    pub budget: u128,
    /// Pairs tested when an exhaustive check would exceed this many.
    pub sample_pairs: u128,
    pub seed: u64,
    /// Largest allowed gap `c - c_i`.
    pub band: i64,
}

impl Default for SupportOptions {
    fn default() -> Self {
        SupportOptions {
            budget: 1 << 26,
            sample_pairs: 1 << 16,
            seed: 0x6b70,
            band: 1,
        }
    }
}

/// One diagonal block: its datum's subgroups, `B1` and the extended character.
#[derive(Clone, Debug)]
pub struct Block {
    pub family: SubgroupFamily,
    pub simple: SimpleCharacter,
    pub b1: FiniteSubgroup,
    pub character: GroupCharacter,
    /// First row of the block.
    pub offset: usize,
}

impl Block {
    pub fn size(&self) -> usize {
        self.family.datum().n()
    }
}

#[derive(Clone, Debug)]
pub struct SupportGroup {
    pub group: FiniteSubgroup,
    pub character: GroupCharacter,
    pub blocks: Vec<Block>,
    /// `j/e` for one datum, `ceil(max j_i/e_i)` for several.
    pub depth: Ratio<i64>,
    pub closure: PairCheck,
    pub multiplicative: PairCheck,
    /// Sampled pairs on which the diagonal blocks of `xy` were `x_ii y_ii` mod `p^(c+1)`.
    pub congruence_pairs: u128,
}

impl SupportGroup {
    pub fn level(&self) -> u32 {
        self.group.arena().level()
    }

    pub fn arena(&self) -> &ResidueMatrices {
        self.group.arena()
    }
}

fn block_for(d: &InductionDatum, level: u32, offset: usize, budget: u128) -> Result<Block> {
    let family = build_subgroups_at(d, level, budget)?;
    let simple = simple_character(&family, 0, budget)?;
    let (b1, character) = if family.j1().size() == family.h1().size() {
        (simple.theta.group().clone(), simple.theta.clone())
    } else {
        let pol = heisenberg(&family, &simple, budget)?;
        let eta = extend_and_induce(&family, &simple, &pol, budget)?;
        (pol.b1, eta.theta_ext)
    };
    Ok(Block {
        family,
        simple,
        b1,
        character,
        offset,
    })
}

/// Builds `K_pi` and `Theta` from one datum or from the blocks of a parabolic.
pub fn build_support(data: &[InductionDatum], opts: SupportOptions) -> Result<SupportGroup> {
    let Some(first) = data.first() else {
        return Err(Error::DatumInvalid("at least one datum is needed".into()));
    };
    for d in data {
        if d.n() < 2 {
            return Err(Error::DatumInvalid(
                "GL_1 blocks carry no minimal datum".into(),
            ));
        }
        if !d.is_minimal()? {
            return Err(Error::DatumInvalid(
                "every block must have minimal beta".into(),
            ));
        }
    }
    if data.len() == 1 {
        let block = block_for(first, group_level(first), 0, opts.budget)?;
        let group = block.b1.clone();
        let character = block.character.clone();
        let closure = group.check_closure(opts.sample_pairs, opts.seed);
        let multiplicative = character.check_multiplicative(opts.sample_pairs, opts.seed);
        return finish(SupportGroup {
            group,
            character,
            blocks: vec![block],
            depth: first.normalised_depth(),
            closure,
            multiplicative,
            congruence_pairs: 0,
        });
    }

    let p = first.ctx().p();
    if data.iter().any(|d| d.ctx().p() != p) {
        return Err(Error::ContextMismatch);
    }
    let c_max = data
        .iter()
        .map(|d| d.normalised_depth())
        .max()
        .expect("nonempty");
    let c = c_max.ceil().to_integer();
    for d in data {
        let gap = Ratio::from_integer(c) - d.normalised_depth();
        if gap > Ratio::from_integer(opts.band) {
            return Err(Error::DatumInvalid(format!(
                "block depth {} is more than {} below c = {c}",
                d.normalised_depth(),
                opts.band
            )));
        }
    }
    let level = (c + 1) as u32;
    let n: usize = data.iter().map(|d| d.n()).sum();
    let arena = ResidueMatrices::new(n, p, level)?;
    let mut blocks = Vec::new();
    let mut offset = 0;
    for d in data {
        blocks.push(block_for(d, level, offset, opts.budget)?);
        offset += d.n();
    }
    let block_of: Vec<usize> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| vec![b; blk.size()])
        .collect();

    let q = arena.modulus();
    let above = p.pow(((c + 1) / 2) as u32) as u32;
    let below = p.pow(((c + 2) / 2) as u32) as u32;
    let mut cells = Vec::new();
    let mut tables = Vec::new();
    for blk in &blocks {
        let m = blk.size();
        let positions = (0..m * m)
            .map(|k| (blk.offset + k / m) * n + blk.offset + k % m)
            .collect();
        cells.push((positions, blk.b1.cell_tuples(0).to_vec()));
        tables.push(blk.character.table(0).to_vec());
    }
    for r in 0..n {
        for s in 0..n {
            let (br, bs) = (block_of[r], block_of[s]);
            if br == bs {
                continue;
            }
            let step = if br < bs { above } else { below };
            let vals: Vec<Vec<u32>> = (0..q.div_ceil(step))
                .map(|k| vec![(k * step) % q])
                .collect();
            tables.push(vec![crate::cyclo::Phase::ZERO; vals.len()]);
            cells.push((vec![r * n + s], vals));
        }
    }
    let group = FiniteSubgroup::from_cells("K_pi", arena, cells)?;
    let character = GroupCharacter::new(group.clone(), tables)?;

    for blk in &blocks {
        if !blk
            .character
            .check_multiplicative(u128::MAX, opts.seed)
            .passed()
        {
            return Err(Error::ConstructionFailure(
                "a block character is not multiplicative".into(),
            ));
        }
    }
    let closure = group.check_closure(opts.sample_pairs, opts.seed);
    let multiplicative = character.check_multiplicative(opts.sample_pairs, opts.seed ^ 1);

    // diagonal blocks of a product are the products of the blocks mod p^(c+1)
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 2);
    let size = group.size() as u64;
    for _ in 0..opts.sample_pairs {
        let x = group.element(rng.gen_range(0..size));
        let y = group.element(rng.gen_range(0..size));
        let xy = arena.mul(&x, &y);
        for blk in &blocks {
            let m = blk.size();
            let sub = |z: &[u32]| -> Vec<u32> {
                (0..m * m)
                    .map(|k| z[(blk.offset + k / m) * n + blk.offset + k % m])
                    .collect()
            };
            let inner = ResidueMatrices::new(m, p, level)?;
            if inner.mul(&sub(&x), &sub(&y)) != sub(&xy) {
                return Err(Error::ConstructionFailure(
                    "diagonal blocks of K_pi do not multiply blockwise mod p^(c+1)".into(),
                ));
            }
        }
    }
    finish(SupportGroup {
        group,
        character,
        blocks,
        depth: Ratio::from_integer(c),
        closure,
        multiplicative,
        congruence_pairs: opts.sample_pairs,
    })
}

fn finish(s: SupportGroup) -> Result<SupportGroup> {
    if let Some((x, y)) = &s.closure.failure {
        return Err(Error::ConstructionFailure(format!(
            "K_pi is not closed: {x:?} * {y:?}"
        )));
    }
    if let Some((x, y)) = &s.multiplicative.failure {
        return Err(Error::ConstructionFailure(format!(
            "Theta is not multiplicative at {x:?}, {y:?}"
        )));
    }
    Ok(s)
}
