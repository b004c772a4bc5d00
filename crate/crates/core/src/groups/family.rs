//! The subgroups `U_A(i)`, `U_L(1)`, `H1`, `J1`, `J ∩ K` of a datum and its
//! simple character.

use std::collections::HashSet;

use num_integer::Integer;

use crate::cyclo::Phase;
use crate::error::{Error, Result};
use crate::orders::{HereditaryOrder, InductionDatum};
use crate::padic::{Elem, MatrixApprox, ResidueMatrices};

use super::{FiniteSubgroup, GroupCharacter};

/// Exponents `t` (capped at the level) with `B^i = (p^t)` entrywise.
pub(crate) fn radical_exponents(order: &HereditaryOrder, i: i64, level: u32) -> Vec<u32> {
    order
        .thresholds(i)
        .into_iter()
        .map(|t| t.clamp(0, level as i64) as u32)
        .collect()
}

/// Whether the residue matrix `u` lies in `B^i` modulo `p^level`.
pub(crate) fn in_radical(u: &[u32], exponents: &[u32], p: u64) -> bool {
    u.iter()
        .zip(exponents)
        .all(|(&v, &t)| v as u64 % p.pow(t) == 0)
}

/// `U_A(i) = 1 + B^i` modulo `p^level`, as an entrywise product set.
pub(crate) fn unit_filtration_group(
    order: &HereditaryOrder,
    i: i64,
    arena: ResidueMatrices,
) -> Result<FiniteSubgroup> {
    let n = arena.n();
    let q = arena.modulus();
    let p = arena.p() as u32;
    let exps = radical_exponents(order, i, arena.level());
    let allowed = exps
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let step = p.pow(t);
            let delta = u32::from(k / n == k % n);
            (0..q / step)
                .map(|c| (delta + c * step) % q)
                .collect::<Vec<u32>>()
        })
        .collect();
    FiniteSubgroup::entrywise(format!("U_A({i})"), arena, allowed)
}

/// `{ab : a in A, b in B}` with duplicates removed.
pub(crate) fn product_set(
    name: &str,
    a: &FiniteSubgroup,
    b: &FiniteSubgroup,
    budget: u128,
) -> Result<FiniteSubgroup> {
    let pairs = a.size().saturating_mul(b.size());
    if pairs > budget {
        return Err(Error::budget(format!("forming {name}"), pairs, budget));
    }
    let arena = *a.arena();
    let bs = b.elements(budget)?;
    let mut out = HashSet::new();
    let mut buf = vec![0u32; arena.n() * arena.n()];
    for x in a.elements(budget)? {
        for y in &bs {
            arena.mul_into(&x, y, &mut buf);
            if !out.contains(&buf) {
                out.insert(buf.clone());
            }
        }
    }
    Ok(FiniteSubgroup::from_elements(
        name,
        arena,
        out.into_iter().collect(),
    ))
}

/// All subgroups attached to a datum, modulo `p^level`.
#[derive(Clone, Debug)]
pub struct SubgroupFamily {
    datum: InductionDatum,
    arena: ResidueMatrices,
    filtration: Vec<FiniteSubgroup>,
    units_l1: FiniteSubgroup,
    units_l: FiniteSubgroup,
    h1: FiniteSubgroup,
    j1: FiniteSubgroup,
    j_cap_k: FiniteSubgroup,
    prime_element: MatrixApprox,
}

impl SubgroupFamily {
    pub fn datum(&self) -> &InductionDatum {
        &self.datum
    }

    pub fn arena(&self) -> &ResidueMatrices {
        &self.arena
    }

    pub fn level(&self) -> u32 {
        self.arena.level()
    }

    /// `U_A(i)` for `1 <= i <= j + 1`.
    pub fn unit_filtration(&self, i: i64) -> Option<&FiniteSubgroup> {
        usize::try_from(i - 1)
            .ok()
            .and_then(|k| self.filtration.get(k))
    }

    pub fn units_l1(&self) -> &FiniteSubgroup {
        &self.units_l1
    }

    pub fn units_l(&self) -> &FiniteSubgroup {
        &self.units_l
    }

    pub fn h1(&self) -> &FiniteSubgroup {
        &self.h1
    }

    pub fn j1(&self) -> &FiniteSubgroup {
        &self.j1
    }

    pub fn j_cap_k(&self) -> &FiniteSubgroup {
        &self.j_cap_k
    }

    /// A prime element of `L = Q_p[beta]`, `beta^a p^b` with `-ja + eb = 1`.
    /// `J` is `J ∩ K` times the powers of this element.
    pub fn prime_element(&self) -> &MatrixApprox {
        &self.prime_element
    }

    /// `floor(j/2) + 1`.
    pub fn h1_index(&self) -> i64 {
        self.datum.depth() / 2 + 1
    }

    /// `floor((j+1)/2)`.
    pub fn j1_index(&self) -> i64 {
        (self.datum.depth() + 1) / 2
    }
}

/// `ceil(j/e) + 1`: the level at which the simple character is defined.
pub fn group_level(d: &InductionDatum) -> u32 {
    d.integrality_shift() as u32 + 1
}

fn prime_element(d: &InductionDatum) -> Result<MatrixApprox> {
    let (j, e) = (d.depth(), d.period() as i64);
    let eg = Integer::extended_gcd(&(-j), &e);
    if eg.gcd.abs() != 1 {
        return Err(Error::DatumInvalid(format!(
            "gcd(j, e) = {} so Q_p[beta] has no prime element of the form beta^a p^b",
            eg.gcd.abs()
        )));
    }
    let (a, b) = if eg.gcd == 1 {
        (eg.x, eg.y)
    } else {
        (-eg.x, -eg.y)
    };
    let base = if a < 0 {
        d.beta().mat_inv()?
    } else {
        d.beta().clone()
    };
    Ok(base.pow(a.unsigned_abs() as u32)?.shift(b))
}

/// Builds every subgroup at the group level `ceil(j/e) + 1`.
pub fn build_subgroups(d: &InductionDatum, budget: u128) -> Result<SubgroupFamily> {
    build_subgroups_at(d, group_level(d), budget)
}

/// As [`build_subgroups`], modulo `p^level` for `level >= ceil(j/e) + 1`.
pub fn build_subgroups_at(d: &InductionDatum, level: u32, budget: u128) -> Result<SubgroupFamily> {
    if !d.is_minimal()? {
        return Err(Error::DatumInvalid(
            "the subgroups are only built for minimal beta".into(),
        ));
    }
    if level < group_level(d) {
        return Err(Error::InvalidInput(format!(
            "level {level} is below the group level {}",
            group_level(d)
        )));
    }
    let arena = ResidueMatrices::new(d.n(), d.ctx().p(), level)?;
    let order = d.order();
    let j = d.depth();
    let filtration = (1..=j + 1)
        .map(|i| unit_filtration_group(order, i, arena))
        .collect::<Result<Vec<_>>>()?;

    let ring = d.integer_ring_residues(level)?;
    let exps = radical_exponents(order, 1, level);
    let p = arena.p();
    let units_l: Vec<Elem> = ring
        .iter()
        .filter(|x| arena.is_invertible(x))
        .cloned()
        .collect();
    let units_l1: Vec<Elem> = ring
        .iter()
        .filter(|x| in_radical(&arena.minus_identity(x), &exps, p))
        .cloned()
        .collect();
    let units_l = FiniteSubgroup::from_elements("O_L^*", arena, units_l);
    let units_l1 = FiniteSubgroup::from_elements("U_L(1)", arena, units_l1);

    let h1_idx = j / 2 + 1;
    let j1_idx = (j + 1) / 2;
    let h1 = product_set("H1", &units_l1, &filtration[(h1_idx - 1) as usize], budget)?;
    let j1 = if j1_idx == h1_idx {
        FiniteSubgroup::from_elements("J1", arena, h1.elements(budget)?)
    } else {
        product_set("J1", &units_l1, &filtration[(j1_idx - 1) as usize], budget)?
    };
    let j_cap_k = product_set("J∩K", &units_l, &filtration[(j1_idx - 1) as usize], budget)?;
    Ok(SubgroupFamily {
        datum: d.clone(),
        arena,
        filtration,
        units_l1,
        units_l,
        h1,
        j1,
        j_cap_k,
        prime_element: prime_element(d)?,
    })
}

/// `psi(Tr(beta u))` with `psi` trivial on `p Z_p` and `psi(1) = exp(2 pi i / p)`,
/// for a residue matrix `u` modulo `p^level`.
pub fn psi_trace_phase(d: &InductionDatum, u: &[u32], level: u32) -> Result<Phase> {
    let beta = d.beta();
    let (n, p) = (d.n(), d.ctx().p());
    // beta = p^s B with B integral; psi(Tr(p^s B u)) depends on Tr(B u) mod p^(1-s)
    let s = beta.scale();
    if s >= 1 {
        return Ok(Phase::ZERO);
    }
    let need = (1 - s) as u32;
    if need > level || need > beta.precision() {
        return Err(Error::PrecisionLoss(format!(
            "psi(Tr(beta x)) needs x modulo p^{need}, have p^{level}"
        )));
    }
    let m = p.pow(need) as u128;
    let digits = beta.entries();
    let mut tr: u128 = 0;
    for r in 0..n {
        for k in 0..n {
            tr += (digits[r * n + k] as u128 % m) * (u[k * n + r] as u128 % m);
        }
    }
    Ok(Phase::new((tr % m) as i128, m as u64, p))
}

/// A character extended from a subgroup, with the number of extensions
/// along the chosen chain of generators.
#[derive(Clone, Debug)]
pub struct Extension {
    pub character: GroupCharacter,
    pub count: u128,
    /// The adjoined generators and their orders modulo the previous subgroup.
    pub steps: Vec<(Elem, u64)>,
}

/// Extends `base` to `target` by adjoining, one at a time, the smallest
/// element of `target` that normalises the current subgroup and fixes the
/// current character. A generator of order `m` modulo the current subgroup
/// leaves `m` choices of value; the `choice`-th (in increasing order) is
/// taken at the first step with `m > 1`, the smallest one elsewhere.
pub fn extend_character(
    base: &GroupCharacter,
    target: &FiniteSubgroup,
    choice: usize,
    budget: u128,
) -> Result<Extension> {
    let p = base.p();
    let target = target.as_single_cell(budget)?;
    let arena = *target.arena();
    let elems = target.elements(budget)?;
    let mut values: Vec<Option<Phase>> = vec![None; elems.len()];
    let mut members = Vec::new();
    for x in base.group().elements(budget)? {
        let i = target.index_of(&x).ok_or_else(|| {
            Error::ConstructionFailure(format!(
                "{} is not inside {}",
                base.group().name(),
                target.name()
            ))
        })? as usize;
        values[i] = base.value(&x);
        members.push(i);
    }
    let mut count: u128 = 1;
    let mut choice_used = false;
    let mut steps = Vec::new();
    let mut buf = vec![0u32; arena.n() * arena.n()];
    while members.len() < elems.len() {
        let mut found = None;
        for g_idx in (0..elems.len()).filter(|&i| values[i].is_none()) {
            let g = &elems[g_idx];
            let g_inv = arena.inv(g).ok_or(Error::Singular)?;
            let stable = members.iter().all(|&c| {
                arena.mul_into(&arena.mul(g, &elems[c]), &g_inv, &mut buf);
                target.index_of(&buf).and_then(|k| values[k as usize]) == values[c]
            });
            if stable {
                found = Some(g_idx);
                break;
            }
        }
        let g_idx = found.ok_or_else(|| {
            Error::ConstructionFailure(format!(
                "no element of {} normalises the current subgroup and fixes the character",
                target.name()
            ))
        })?;
        let g = elems[g_idx].clone();
        let not_closed = || Error::ConstructionFailure(format!("{} is not closed", target.name()));
        let mut power = g.clone();
        let mut m = 1u64;
        let phi = loop {
            let k = target.index_of(&power).ok_or_else(not_closed)? as usize;
            if let Some(v) = values[k] {
                break v;
            }
            power = arena.mul(&power, &g);
            m += 1;
        };
        if p.pow(m.ilog(p)) != m {
            return Err(Error::ConstructionFailure(format!(
                "generator of order {m} modulo the current subgroup is not of p-power order"
            )));
        }
        let mut candidates: Vec<Phase> = (0..m)
            .map(|r| {
                Phase::new(
                    phi.num() as i128 + (r * phi.den()) as i128,
                    phi.den() * m,
                    p,
                )
            })
            .collect();
        candidates.sort_by(|a, b| a.value_cmp(b));
        let pick = if m > 1 && !choice_used {
            choice_used = true;
            choice
        } else {
            0
        };
        let t = *candidates.get(pick).ok_or_else(|| {
            Error::InvalidInput(format!(
                "extension choice {pick} out of range, only {m} available"
            ))
        })?;
        let old = members.clone();
        let mut gk = arena.identity();
        for k in 1..m {
            gk = arena.mul(&gk, &g);
            let shift = t.scale(k as i128, p);
            for &c in &old {
                arena.mul_into(&gk, &elems[c], &mut buf);
                let x = target.index_of(&buf).ok_or_else(not_closed)? as usize;
                if values[x].is_some() {
                    return Err(Error::ConstructionFailure(
                        "coset overlap while extending".into(),
                    ));
                }
                values[x] = Some(shift.add(values[c].expect("assigned"), p));
                members.push(x);
            }
        }
        count *= m as u128;
        steps.push((g, m));
    }
    let table = values
        .into_iter()
        .map(|v| v.expect("every element assigned"))
        .collect();
    Ok(Extension {
        character: GroupCharacter::new(target, vec![table])?,
        count,
        steps,
    })
}

/// The simple character on `H1` with its defining restriction.
#[derive(Clone, Debug)]
pub struct SimpleCharacter {
    /// `x -> psi(Tr(beta (x - 1)))` on `U_A(floor(j/2) + 1)`.
    pub base: GroupCharacter,
    pub theta: GroupCharacter,
    /// Number of extensions of `base` to `H1` along the generator chain.
    pub extensions: u128,
}

/// Builds the simple character: the trace formula on the congruence part,
/// extended to `H1` by [`extend_character`] with the given choice.
pub fn simple_character(
    fam: &SubgroupFamily,
    choice: usize,
    budget: u128,
) -> Result<SimpleCharacter> {
    let d = fam.datum();
    let level = fam.level();
    let arena = *fam.arena();
    let congruence = fam
        .unit_filtration(fam.h1_index())
        .expect("h1 index lies in the filtration")
        .as_single_cell(budget)?;
    let mut table = Vec::with_capacity(congruence.size() as usize);
    for x in congruence.cell_tuples(0) {
        table.push(psi_trace_phase(d, &arena.minus_identity(x), level)?);
    }
    let base = GroupCharacter::new(congruence, vec![table])?;
    let ext = extend_character(&base, fam.h1(), choice, budget)?;
    Ok(SimpleCharacter {
        base,
        theta: ext.character,
        extensions: ext.count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrecisionCtx;
    use crate::samples;

    const BUDGET: u128 = 1 << 26;

    #[test]
    fn odd_depth_has_equal_h1_and_j1() {
        let fam = build_subgroups(&samples::ramified_depth_one(), BUDGET).unwrap();
        assert_eq!(fam.level(), 2);
        assert_eq!(fam.h1().size(), 243);
        assert_eq!(fam.j1().size(), 243);
        assert_eq!(fam.j_cap_k().size(), 486);
        for g in [
            fam.h1(),
            fam.j1(),
            fam.j_cap_k(),
            fam.units_l1(),
            fam.units_l(),
        ] {
            assert!(g.contains(&fam.arena().identity()), "{}", g.name());
        }
    }

    #[test]
    fn even_depth_index_is_p_to_n2_minus_n() {
        let fam = build_subgroups(&samples::unramified_depth_two(), BUDGET).unwrap();
        assert_eq!(fam.level(), 3);
        assert_eq!(fam.j1().size() / fam.h1().size(), 9);
        assert_eq!(fam.j1().size() % fam.h1().size(), 0);
        assert!(fam
            .h1()
            .elements(BUDGET)
            .unwrap()
            .iter()
            .all(|x| fam.j1().contains(x)));
    }

    #[test]
    fn subgroups_are_closed() {
        let fam = build_subgroups(&samples::ramified_depth_one(), BUDGET).unwrap();
        for g in [fam.h1(), fam.j_cap_k(), fam.units_l1(), fam.units_l()] {
            assert!(g.check_closure(1 << 18, 7).passed(), "{}", g.name());
        }
    }

    #[test]
    fn prime_element_has_valuation_one() {
        for d in [
            samples::ramified_depth_one(),
            samples::ramified_depth_three(),
            samples::unramified_depth_two(),
        ] {
            let fam = build_subgroups(&d, BUDGET).unwrap();
            assert_eq!(d.order().valuation(fam.prime_element()).unwrap(), 1);
        }
    }

    #[test]
    fn non_minimal_data_are_refused() {
        let r = build_subgroups(&samples::ramified_square(), BUDGET);
        assert!(matches!(r, Err(Error::DatumInvalid(_))));
    }

    #[test]
    fn small_budget_is_reported() {
        let r = build_subgroups(&samples::unramified_depth_two(), 1000);
        assert!(matches!(r, Err(Error::Budget { .. })));
    }

    fn trace_oracle(d: &InductionDatum, x: &[u32]) -> Phase {
        // psi(Tr(beta (x - 1))) through truncated p-adic matrices
        let ctx = PrecisionCtx::new(3, 8).unwrap();
        let u: Vec<i64> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| v as i64 - i64::from(k % 3 == 0))
            .collect();
        let beta =
            MatrixApprox::normalize(ctx, 2, d.beta().scale(), &d.beta().integer_digits()).unwrap();
        if u.iter().all(|&v| v == 0) {
            return Phase::ZERO;
        }
        let prod = beta
            .mul(&MatrixApprox::from_integers(ctx, 2, 0, &u).unwrap())
            .unwrap();
        let (tr, _) = prod.trace_det();
        match tr.valuation() {
            None => Phase::ZERO,
            Some(v) if v >= 1 => Phase::ZERO,
            Some(v) => {
                let den = 3u64.pow((1 - v) as u32);
                Phase::new(tr.unit().unwrap() as i128, den, 3)
            }
        }
    }

    #[test]
    fn trace_formula_matches_padic_oracle() {
        for d in [
            samples::ramified_depth_one(),
            samples::unramified_depth_two(),
        ] {
            let fam = build_subgroups(&d, BUDGET).unwrap();
            let u = fam.unit_filtration(fam.h1_index()).unwrap();
            for x in u.elements(BUDGET).unwrap().iter().step_by(5) {
                let ours =
                    psi_trace_phase(&d, &fam.arena().minus_identity(x), fam.level()).unwrap();
                assert_eq!(ours, trace_oracle(&d, x), "{x:?}");
            }
        }
        // x = 1 + p E_11 in the ramified depth-one case
        let d = samples::ramified_depth_one();
        let x = vec![4, 0, 0, 1];
        assert_eq!(
            psi_trace_phase(&d, &[3, 0, 0, 0], 2).unwrap(),
            trace_oracle(&d, &x)
        );
        // x = 1 + E_12 picks up the (2,1) entry 3 of p beta: Tr = 3/3 = 1
        assert_eq!(
            psi_trace_phase(&d, &[0, 1, 0, 0], 2).unwrap(),
            Phase::new(1, 3, 3)
        );
    }

    #[test]
    fn simple_character_is_multiplicative_and_trivial_deep_down() {
        for d in [
            samples::ramified_depth_one(),
            samples::unramified_depth_two(),
        ] {
            let fam = build_subgroups(&d, BUDGET).unwrap();
            let sc = simple_character(&fam, 0, BUDGET).unwrap();
            let theta = &sc.theta;
            assert_eq!(theta.value(&fam.arena().identity()), Some(Phase::ZERO));
            assert!(theta.check_multiplicative(1 << 20, 3).passed());
            let deep = fam.unit_filtration(d.depth() + 1).unwrap();
            for x in deep.elements(BUDGET).unwrap() {
                assert_eq!(theta.value(&x), Some(Phase::ZERO));
            }
            for x in sc.base.group().elements(BUDGET).unwrap() {
                assert_eq!(theta.value(&x), sc.base.value(&x));
            }
        }
    }

    #[test]
    fn extension_choices_differ_but_agree_on_the_base() {
        let d = samples::unramified_depth_two();
        let fam = build_subgroups(&d, BUDGET).unwrap();
        let a = simple_character(&fam, 0, BUDGET).unwrap();
        let b = simple_character(&fam, 1, BUDGET).unwrap();
        assert!(a.extensions > 1);
        let h1 = fam.h1().elements(BUDGET).unwrap();
        assert!(h1.iter().any(|x| a.theta.value(x) != b.theta.value(x)));
        for x in a.base.group().elements(BUDGET).unwrap() {
            assert_eq!(a.theta.value(&x), b.theta.value(&x));
        }
    }
}
