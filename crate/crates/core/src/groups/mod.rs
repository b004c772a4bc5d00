//! Finite subgroups of `GL_n(Z/p^N)` and their characters.
//!
//! A [`FiniteSubgroup`] is stored as a product of *cells*: the `n^2` matrix
//! positions are partitioned, and each cell lists the value tuples allowed on
//! its positions. A subgroup that is not a product set is simply one cell
//! covering every position. Characters carry one phase table per cell and
//! evaluate to the sum of the cell phases, which is how the character of the
//! parabolic support group, depending only on its diagonal blocks, is stored.

mod family;
mod heisenberg;
mod intertwine;
mod support;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cyclo::Phase;
use crate::error::{Error, Result};
use crate::padic::{Elem, ResidueMatrices};

pub use family::{
    build_subgroups, extend_character, psi_trace_phase, simple_character, Extension,
    SimpleCharacter, SubgroupFamily,
};
pub use family::{build_subgroups_at, group_level};
pub use heisenberg::{
    extend_and_induce, heisenberg, rank_mod_p, InducedCharacter, PolarizationData,
};
pub use intertwine::{intertwines, intertwines_residue, IntertwiningOutcome};
pub use support::{build_support, Block, SupportGroup, SupportOptions};

const DENSE_LIMIT: u64 = 1 << 24;

#[derive(Debug)]
struct Cell {
    positions: Vec<usize>,
    tuples: Vec<Vec<u32>>,
    dense: Option<Vec<u32>>,
    hashed: HashMap<Vec<u32>, u32>,
    modulus: u64,
}

impl Cell {
    fn new(positions: Vec<usize>, mut tuples: Vec<Vec<u32>>, modulus: u64) -> Cell {
        tuples.sort();
        tuples.dedup();
        let width = positions.len() as u32;
        let mut cell = Cell {
            positions,
            tuples,
            dense: None,
            hashed: HashMap::new(),
            modulus,
        };
        match modulus.checked_pow(width) {
            Some(space) if space <= DENSE_LIMIT => {
                let mut table = vec![u32::MAX; space as usize];
                for (i, t) in cell.tuples.iter().enumerate() {
                    table[cell.tuple_key(t) as usize] = i as u32;
                }
                cell.dense = Some(table);
            }
            _ => {
                cell.hashed = cell
                    .tuples
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (t.clone(), i as u32))
                    .collect();
            }
        }
        cell
    }

    fn tuple_key(&self, t: &[u32]) -> u64 {
        t.iter().fold(0u64, |acc, &v| acc * self.modulus + v as u64)
    }

    fn index_in(&self, x: &[u32]) -> Option<u32> {
        match &self.dense {
            Some(table) => {
                let key = self
                    .positions
                    .iter()
                    .fold(0u64, |acc, &pos| acc * self.modulus + x[pos] as u64);
                let i = table[key as usize];
                (i != u32::MAX).then_some(i)
            }
            None => {
                let t: Vec<u32> = self.positions.iter().map(|&pos| x[pos]).collect();
                self.hashed.get(&t).copied()
            }
        }
    }

    fn len(&self) -> u64 {
        self.tuples.len() as u64
    }
}

#[derive(Debug)]
struct GroupInner {
    name: String,
    arena: ResidueMatrices,
    cells: Vec<Cell>,
}

/// A subgroup of `GL_n(Z/p^N)` given as a product of cells.
#[derive(Clone, Debug)]
pub struct FiniteSubgroup {
    inner: Arc<GroupInner>,
}

/// Outcome of a closure or multiplicativity check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCheck {
    pub pairs: u128,
    pub exhaustive: bool,
    pub failure: Option<(Elem, Elem)>,
}

impl PairCheck {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl FiniteSubgroup {
    /// One cell holding an explicit element list.
    pub fn from_elements(
        name: impl Into<String>,
        arena: ResidueMatrices,
        elements: Vec<Elem>,
    ) -> Self {
        let n2 = arena.n() * arena.n();
        let cell = Cell::new((0..n2).collect(), elements, arena.modulus() as u64);
        FiniteSubgroup {
            inner: Arc::new(GroupInner {
                name: name.into(),
                arena,
                cells: vec![cell],
            }),
        }
    }

    /// A product set over a partition of the matrix positions.
    pub fn from_cells(
        name: impl Into<String>,
        arena: ResidueMatrices,
        cells: Vec<(Vec<usize>, Vec<Vec<u32>>)>,
    ) -> Result<Self> {
        let n2 = arena.n() * arena.n();
        let mut seen = vec![false; n2];
        for (positions, tuples) in &cells {
            for &pos in positions {
                if pos >= n2 || seen[pos] {
                    return Err(Error::InvalidInput(
                        "cells must partition the matrix positions".into(),
                    ));
                }
                seen[pos] = true;
            }
            if tuples.iter().any(|t| t.len() != positions.len()) {
                return Err(Error::InvalidInput(
                    "tuple width differs from its cell".into(),
                ));
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidInput(
                "cells must cover every matrix position".into(),
            ));
        }
        let modulus = arena.modulus() as u64;
        Ok(FiniteSubgroup {
            inner: Arc::new(GroupInner {
                name: name.into(),
                arena,
                cells: cells
                    .into_iter()
                    .map(|(pos, t)| Cell::new(pos, t, modulus))
                    .collect(),
            }),
        })
    }

    /// Every position is its own cell with the listed allowed values.
    pub fn entrywise(
        name: impl Into<String>,
        arena: ResidueMatrices,
        allowed: Vec<Vec<u32>>,
    ) -> Result<Self> {
        let cells = allowed
            .into_iter()
            .enumerate()
            .map(|(pos, vals)| (vec![pos], vals.into_iter().map(|v| vec![v]).collect()))
            .collect();
        Self::from_cells(name, arena, cells)
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn arena(&self) -> &ResidueMatrices {
        &self.inner.arena
    }

    pub fn size(&self) -> u128 {
        self.inner.cells.iter().map(|c| c.len() as u128).product()
    }

    pub fn cell_count(&self) -> usize {
        self.inner.cells.len()
    }

    pub fn cell_positions(&self, cell: usize) -> &[usize] {
        &self.inner.cells[cell].positions
    }

    pub fn cell_tuples(&self, cell: usize) -> &[Vec<u32>] {
        &self.inner.cells[cell].tuples
    }

    /// Index of `x` restricted to one cell.
    pub fn cell_index(&self, cell: usize, x: &[u32]) -> Option<u32> {
        self.inner.cells[cell].index_in(x)
    }

    pub fn contains(&self, x: &[u32]) -> bool {
        self.inner.cells.iter().all(|c| c.index_in(x).is_some())
    }

    /// Mixed-radix index, first cell most significant.
    pub fn index_of(&self, x: &[u32]) -> Option<u64> {
        let mut idx = 0u64;
        for c in &self.inner.cells {
            idx = idx * c.len() + c.index_in(x)? as u64;
        }
        Some(idx)
    }

    pub fn element(&self, mut idx: u64) -> Elem {
        let n2 = self.arena().n() * self.arena().n();
        let mut x = vec![0u32; n2];
        for c in self.inner.cells.iter().rev() {
            let t = &c.tuples[(idx % c.len()) as usize];
            idx /= c.len();
            for (&pos, &v) in c.positions.iter().zip(t) {
                x[pos] = v;
            }
        }
        x
    }

    fn enumerable(&self, budget: u128) -> Result<u64> {
        let size = self.size();
        if size > budget {
            return Err(Error::budget(
                format!("enumerating {}", self.name()),
                size,
                budget,
            ));
        }
        Ok(size as u64)
    }

    /// All elements, in index order (sorted when the group is a single cell).
    pub fn elements(&self, budget: u128) -> Result<Vec<Elem>> {
        let size = self.enumerable(budget)?;
        Ok((0..size).map(|i| self.element(i)).collect())
    }

    /// Closure under products and inverses: exhaustive when `size^2` is
    /// within `max_pairs`, otherwise `max_pairs` seeded random pairs.
    pub fn check_closure(&self, max_pairs: u128, seed: u64) -> PairCheck {
        let arena = *self.arena();
        let mut out = vec![0u32; arena.n() * arena.n()];
        let mut check = |x: &Elem, y: &Elem| -> bool {
            arena.mul_into(x, y, &mut out);
            self.contains(&out) && arena.inv(x).is_some_and(|xi| self.contains(&xi))
        };
        let size = self.size();
        if size.saturating_mul(size) <= max_pairs {
            let elems: Vec<Elem> = (0..size as u64).map(|i| self.element(i)).collect();
            for x in &elems {
                for y in &elems {
                    if !check(x, y) {
                        return PairCheck {
                            pairs: size * size,
                            exhaustive: true,
                            failure: Some((x.clone(), y.clone())),
                        };
                    }
                }
            }
            return PairCheck {
                pairs: size * size,
                exhaustive: true,
                failure: None,
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..max_pairs {
            let x = self.element(rng.gen_range(0..size as u64));
            let y = self.element(rng.gen_range(0..size as u64));
            if !check(&x, &y) {
                return PairCheck {
                    pairs: k + 1,
                    exhaustive: false,
                    failure: Some((x, y)),
                };
            }
        }
        PairCheck {
            pairs: max_pairs,
            exhaustive: false,
            failure: None,
        }
    }

    /// The same group as one cell (a no-op if it already is).
    pub fn as_single_cell(&self, budget: u128) -> Result<FiniteSubgroup> {
        if self.cell_count() == 1 {
            return Ok(self.clone());
        }
        Ok(Self::from_elements(
            self.name(),
            *self.arena(),
            self.elements(budget)?,
        ))
    }

    /// Line-oriented canonical dump: a header, then one sorted element per line.
    pub fn dump(&self, budget: u128) -> Result<String> {
        let mut elems = self.elements(budget)?;
        elems.sort();
        let a = self.arena();
        let mut s = format!(
            "group {} n={} p={} level={} size={}\n",
            self.name(),
            a.n(),
            a.p(),
            a.level(),
            elems.len()
        );
        for e in elems {
            let _ = writeln!(s, "{}", encode(&e));
        }
        Ok(s)
    }
}

/// Row-major entries separated by spaces.
pub fn encode(x: &[u32]) -> String {
    x.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// A character with values in p-power roots of unity, one table per cell.
#[derive(Clone, Debug)]
pub struct GroupCharacter {
    group: FiniteSubgroup,
    tables: Arc<Vec<Vec<Phase>>>,
}

impl GroupCharacter {
    pub fn new(group: FiniteSubgroup, tables: Vec<Vec<Phase>>) -> Result<Self> {
        if tables.len() != group.cell_count()
            || tables
                .iter()
                .enumerate()
                .any(|(c, t)| t.len() as u64 != group.inner.cells[c].len())
        {
            return Err(Error::InvalidInput(
                "phase tables do not match the group's cells".into(),
            ));
        }
        Ok(GroupCharacter {
            group,
            tables: Arc::new(tables),
        })
    }

    /// Tabulate a function on a single-cell group.
    pub fn from_fn(group: FiniteSubgroup, f: impl Fn(&[u32]) -> Phase) -> Result<Self> {
        if group.cell_count() != 1 {
            return Err(Error::InvalidInput(
                "from_fn needs a single-cell group".into(),
            ));
        }
        let table = group.cell_tuples(0).iter().map(|t| f(t)).collect();
        Self::new(group, vec![table])
    }

    pub fn group(&self) -> &FiniteSubgroup {
        &self.group
    }

    pub fn p(&self) -> u64 {
        self.group.arena().p()
    }

    pub fn table(&self, cell: usize) -> &[Phase] {
        &self.tables[cell]
    }

    /// `None` off the group.
    pub fn value(&self, x: &[u32]) -> Option<Phase> {
        let p = self.p();
        let mut acc = Phase::ZERO;
        for (c, cell) in self.group.inner.cells.iter().enumerate() {
            acc = acc.add(self.tables[c][cell.index_in(x)? as usize], p);
        }
        Some(acc)
    }

    /// Largest denominator among the values.
    pub fn max_denominator(&self) -> u64 {
        let per_cell: u64 = self
            .tables
            .iter()
            .map(|t| t.iter().map(|ph| ph.den()).max().unwrap_or(1))
            .max()
            .unwrap_or(1);
        per_cell
    }

    /// `chi(xy) = chi(x) + chi(y)`: exhaustive when feasible, else sampled.
    pub fn check_multiplicative(&self, max_pairs: u128, seed: u64) -> PairCheck {
        let g = &self.group;
        let arena = *g.arena();
        let p = self.p();
        let mut out = vec![0u32; arena.n() * arena.n()];
        let mut check = |x: &Elem, y: &Elem, vx: Phase, vy: Phase| -> bool {
            arena.mul_into(x, y, &mut out);
            self.value(&out) == Some(vx.add(vy, p))
        };
        let size = g.size();
        if size.saturating_mul(size) <= max_pairs {
            let elems: Vec<Elem> = (0..size as u64).map(|i| g.element(i)).collect();
            let vals: Vec<Phase> = elems
                .iter()
                .map(|x| self.value(x).expect("member"))
                .collect();
            for (x, &vx) in elems.iter().zip(&vals) {
                for (y, &vy) in elems.iter().zip(&vals) {
                    if !check(x, y, vx, vy) {
                        return PairCheck {
                            pairs: size * size,
                            exhaustive: true,
                            failure: Some((x.clone(), y.clone())),
                        };
                    }
                }
            }
            return PairCheck {
                pairs: size * size,
                exhaustive: true,
                failure: None,
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..max_pairs {
            let x = g.element(rng.gen_range(0..size as u64));
            let y = g.element(rng.gen_range(0..size as u64));
            let (vx, vy) = (
                self.value(&x).expect("member"),
                self.value(&y).expect("member"),
            );
            if !check(&x, &y, vx, vy) {
                return PairCheck {
                    pairs: k + 1,
                    exhaustive: false,
                    failure: Some((x, y)),
                };
            }
        }
        PairCheck {
            pairs: max_pairs,
            exhaustive: false,
            failure: None,
        }
    }

    /// Canonical dump: `entries : phase`, sorted by element.
    pub fn dump(&self, name: &str, budget: u128) -> Result<String> {
        let mut elems = self.group.elements(budget)?;
        elems.sort();
        let mut s = format!(
            "character {name} on {} size={}\n",
            self.group.name(),
            elems.len()
        );
        for e in elems {
            let v = self.value(&e).expect("member");
            let _ = writeln!(s, "{} : {v}", encode(&e));
        }
        Ok(s)
    }
}

/// Greedy generating set: repeatedly adjoin the smallest element outside the
/// subgroup generated so far.
pub fn generating_set(group: &FiniteSubgroup, budget: u128) -> Result<Vec<Elem>> {
    let elems = group.elements(budget)?;
    let arena = *group.arena();
    let size = elems.len();
    let mut inside = vec![false; size];
    let mut members: Vec<usize> = Vec::new();
    let id = arena.identity();
    let id_idx = group
        .index_of(&id)
        .ok_or_else(|| Error::ConstructionFailure(format!("{} lacks the identity", group.name())))?
        as usize;
    inside[id_idx] = true;
    members.push(id_idx);
    let mut gens = Vec::new();
    while members.len() < size {
        let next = (0..size).find(|&i| !inside[i]).expect("a missing element");
        gens.push(elems[next].clone());
        // breadth-first closure under right multiplication by all generators
        let mut frontier = members.clone();
        while let Some(i) = frontier.pop() {
            for g in &gens {
                let prod = arena.mul(&elems[i], g);
                let k = group.index_of(&prod).ok_or_else(|| {
                    Error::ConstructionFailure(format!(
                        "{} is not closed under products",
                        group.name()
                    ))
                })? as usize;
                if !inside[k] {
                    inside[k] = true;
                    members.push(k);
                    frontier.push(k);
                }
            }
        }
    }
    Ok(gens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arena() -> ResidueMatrices {
        ResidueMatrices::new(2, 3, 2).unwrap()
    }

    fn upper_unipotent() -> FiniteSubgroup {
        let elems = (0..9).map(|b| vec![1, b, 0, 1]).collect();
        FiniteSubgroup::from_elements("N", arena(), elems)
    }

    #[test]
    fn cell_groups_index_round_trip() {
        let a = arena();
        let allowed = vec![
            vec![1, 4, 7],
            (0..9).collect(),
            vec![0, 3, 6],
            vec![1, 4, 7],
        ];
        let g = FiniteSubgroup::entrywise("U1", a, allowed).unwrap();
        assert_eq!(g.size(), 243);
        for i in (0..243).step_by(7) {
            let x = g.element(i);
            assert_eq!(g.index_of(&x), Some(i));
        }
        assert!(g.contains(&a.identity()));
        assert!(!g.contains(&[2, 0, 0, 1]));
        assert!(g.check_closure(u128::MAX, 1).passed());
    }

    #[test]
    fn cells_must_partition() {
        let r = FiniteSubgroup::from_cells(
            "bad",
            arena(),
            vec![(vec![0, 1], vec![]), (vec![1, 2, 3], vec![])],
        );
        assert!(r.is_err());
    }

    #[test]
    fn non_group_is_detected() {
        let g =
            FiniteSubgroup::from_elements("S", arena(), vec![vec![1, 0, 0, 1], vec![1, 1, 0, 1]]);
        assert!(!g.check_closure(u128::MAX, 1).passed());
    }

    #[test]
    fn characters_and_generators() {
        let g = upper_unipotent();
        let chi = GroupCharacter::from_fn(g.clone(), |x| Phase::new(x[1] as i128, 9, 3)).unwrap();
        assert!(chi.check_multiplicative(u128::MAX, 0).passed());
        assert_eq!(chi.value(&[1, 0, 0, 1]), Some(Phase::ZERO));
        let bad = GroupCharacter::from_fn(g.clone(), |x| Phase::new((x[1] * x[1]) as i128, 9, 3))
            .unwrap();
        assert!(!bad.check_multiplicative(u128::MAX, 0).passed());
        assert_eq!(
            generating_set(&g, u128::MAX).unwrap(),
            vec![vec![1, 1, 0, 1]]
        );
    }

    #[test]
    fn dumps_are_sorted_lines() {
        let g = upper_unipotent();
        let d = g.dump(100).unwrap();
        let lines: Vec<&str> = d.lines().collect();
        assert_eq!(lines[0], "group N n=2 p=3 level=2 size=9");
        assert_eq!(lines[1], "1 0 0 1");
        assert_eq!(lines[9], "1 8 0 1");
    }
}
