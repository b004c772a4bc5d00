//! The symplectic space `J1/H1`, a polarising subgroup `B1`, and the
//! Heisenberg character `Ind_{B1}^{J1}` of an extension of theta.

use std::collections::HashSet;

use crate::cyclo::{CycloSum, Phase};
use crate::error::{Error, Result};
use crate::padic::{Elem, ResidueMatrices};

use super::family::{extend_character, psi_trace_phase, SimpleCharacter, SubgroupFamily};
use super::{generating_set, FiniteSubgroup, GroupCharacter};

/// Left cosets `xS` of `small` inside the single-cell group `big`:
/// the smallest element of each coset, and the coset number of every element.
pub(crate) fn left_cosets(
    big: &FiniteSubgroup,
    small: &FiniteSubgroup,
    budget: u128,
) -> Result<(Vec<usize>, Vec<u32>)> {
    let arena = *big.arena();
    let elems = big.elements(budget)?;
    let sub = small.elements(budget)?;
    let mut coset = vec![u32::MAX; elems.len()];
    let mut reps = Vec::new();
    let mut buf = vec![0u32; arena.n() * arena.n()];
    for i in 0..elems.len() {
        if coset[i] != u32::MAX {
            continue;
        }
        let id = reps.len() as u32;
        reps.push(i);
        for h in &sub {
            arena.mul_into(&elems[i], h, &mut buf);
            let k = big.index_of(&buf).ok_or_else(|| {
                Error::ConstructionFailure(format!("{} is not inside {}", small.name(), big.name()))
            })?;
            coset[k as usize] = id;
        }
    }
    Ok((reps, coset))
}

fn fp_value(t: Phase, p: u64, what: &str) -> Result<u64> {
    match t.den() {
        1 => Ok(0),
        d if d == p => Ok(t.num()),
        _ => Err(Error::ConstructionFailure(format!(
            "{what} takes the value {t}, not in (1/p)Z/Z"
        ))),
    }
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Rank of a matrix over `F_p`.
pub fn rank_mod_p(rows: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] % p != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = pow_mod(m[rank][c], p - 2, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] % p != 0 {
                let f = m[r][c] * inv % p;
                for k in 0..cols {
                    m[r][k] = (m[r][k] + p * p - f * m[rank][k] % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `J1/H1` with its alternating form and a polarisation.
#[derive(Clone, Debug)]
pub struct PolarizationData {
    pub p: u64,
    /// Coset representatives of an `F_p` basis of `J1/H1`.
    pub basis: Vec<Elem>,
    /// `psi(Tr(beta (uv - vu)))` on `1 + u, 1 + v`, as elements of `F_p`.
    pub pairing: Vec<Vec<u64>>,
    /// `psi(Tr(beta uv))` on the same representatives, for comparison.
    pub raw_pairing: Vec<Vec<Phase>>,
    /// `theta(x y x^-1 y^-1)` on the representatives.
    pub theta_commutators: Vec<Vec<Phase>>,
    /// Coordinates of a basis of a maximal isotropic subspace.
    pub isotropic: Vec<Vec<u64>>,
    /// Coordinates of the complementary vectors, paired dually with `isotropic`.
    pub coisotropic: Vec<Vec<u64>>,
    /// The preimage of the isotropic subspace in `J1`.
    pub b1: FiniteSubgroup,
}

impl PolarizationData {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The form on coordinate vectors.
    pub fn form(&self, a: &[u64], b: &[u64]) -> u64 {
        let p = self.p;
        let mut acc = 0;
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                acc = (acc + ai * bj % p * self.pairing[i][j]) % p;
            }
        }
        acc
    }
}

fn commutator_form(fam: &SubgroupFamily, x: &[u32], y: &[u32]) -> Result<Phase> {
    let a = fam.arena();
    let (u, v) = (a.minus_identity(x), a.minus_identity(y));
    let (uv, vu) = (a.mul(&u, &v), a.mul(&v, &u));
    let m = a.modulus();
    let diff: Vec<u32> = uv.iter().zip(&vu).map(|(&s, &t)| (s + m - t) % m).collect();
    psi_trace_phase(fam.datum(), &diff, fam.level())
}

fn commutator(a: &ResidueMatrices, x: &[u32], y: &[u32]) -> Result<Elem> {
    let xi = a.inv(x).ok_or(Error::Singular)?;
    let yi = a.inv(y).ok_or(Error::Singular)?;
    Ok(a.mul(&a.mul(x, y), &a.mul(&xi, &yi)))
}

/// Builds the form on `J1/H1` and a polarising `B1`. Odd depth is refused:
/// then `J1 = H1` and `B1 = H1` by convention.
pub fn heisenberg(
    fam: &SubgroupFamily,
    sc: &SimpleCharacter,
    budget: u128,
) -> Result<PolarizationData> {
    let (j1, h1) = (fam.j1(), fam.h1());
    if fam.datum().depth() % 2 == 1 || j1.size() == h1.size() {
        return Err(Error::InvalidInput(
            "J1 = H1 for odd j, take B1 = H1".into(),
        ));
    }
    let arena = *fam.arena();
    let p = arena.p();
    let elems = j1.elements(budget)?;
    let (reps, coset) = left_cosets(j1, h1, budget)?;
    let coset_of = |x: &[u32]| -> Result<usize> {
        j1.index_of(x)
            .map(|i| coset[i as usize] as usize)
            .ok_or_else(|| Error::ConstructionFailure("J1 is not closed".into()))
    };

    // elementary abelian: p-th powers and commutators of representatives land in H1
    for &a in &reps {
        let mut pw = arena.identity();
        for _ in 0..p {
            pw = arena.mul(&pw, &elems[a]);
        }
        if !h1.contains(&pw) {
            return Err(Error::ConstructionFailure(
                "J1/H1 has an element of order above p".into(),
            ));
        }
        for &b in &reps {
            if !h1.contains(&commutator(&arena, &elems[a], &elems[b])?) {
                return Err(Error::ConstructionFailure("J1/H1 is not abelian".into()));
            }
        }
    }

    // greedy basis; span[c] holds the coordinates of coset c once reached
    let mut span: Vec<Option<Vec<u64>>> = vec![None; reps.len()];
    let id_coset = coset_of(&arena.identity())?;
    span[id_coset] = Some(Vec::new());
    let mut reached = vec![id_coset];
    let mut basis: Vec<Elem> = Vec::new();
    for &r in &reps {
        let c = coset[r] as usize;
        if span[c].is_some() {
            continue;
        }
        let g = elems[r].clone();
        for coords in span.iter_mut().flatten() {
            coords.push(0);
        }
        let old = reached.clone();
        let mut gk = arena.identity();
        for k in 1..p {
            gk = arena.mul(&gk, &g);
            for &s in &old {
                let target = coset_of(&arena.mul(&elems[reps[s]], &gk))?;
                let mut coords = span[s].clone().expect("reached");
                *coords.last_mut().expect("new slot") = k;
                if span[target].is_some() {
                    return Err(Error::ConstructionFailure(
                        "J1/H1 is not a vector space".into(),
                    ));
                }
                span[target] = Some(coords);
                reached.push(target);
            }
        }
        basis.push(g);
    }
    let dim = basis.len();
    let coords: Vec<Vec<u64>> = span.into_iter().map(|c| c.expect("basis spans")).collect();
    let (n, e) = (fam.datum().n(), fam.datum().period());
    if dim != (n * n - n) / e {
        return Err(Error::ConstructionFailure(format!(
            "J1/H1 has dimension {dim}, expected (n^2 - n)/e = {}",
            (n * n - n) / e
        )));
    }

    let mut pairing = vec![vec![0u64; dim]; dim];
    let mut raw_pairing = vec![vec![Phase::ZERO; dim]; dim];
    let mut theta_commutators = vec![vec![Phase::ZERO; dim]; dim];
    for a in 0..dim {
        for b in 0..dim {
            pairing[a][b] = fp_value(
                commutator_form(fam, &basis[a], &basis[b])?,
                p,
                "the commutator form",
            )?;
            let (u, v) = (
                arena.minus_identity(&basis[a]),
                arena.minus_identity(&basis[b]),
            );
            raw_pairing[a][b] = psi_trace_phase(fam.datum(), &arena.mul(&u, &v), fam.level())?;
            theta_commutators[a][b] = sc
                .theta
                .value(&commutator(&arena, &basis[a], &basis[b])?)
                .ok_or_else(|| Error::ConstructionFailure("commutator outside H1".into()))?;
        }
    }
    // well defined on cosets and linear in the first slot, tested on all of J1
    for x in &elems {
        let cx = &coords[coset_of(x)?];
        for b in 0..dim {
            let direct = fp_value(
                commutator_form(fam, x, &basis[b])?,
                p,
                "the commutator form",
            )?;
            let linear = (0..dim).fold(0, |acc, a| (acc + cx[a] * pairing[a][b]) % p);
            if direct != linear {
                return Err(Error::ConstructionFailure(
                    "the commutator form is not bilinear on J1/H1".into(),
                ));
            }
        }
    }
    for a in 0..dim {
        if pairing[a][a] != 0 || (0..dim).any(|b| (pairing[a][b] + pairing[b][a]) % p != 0) {
            return Err(Error::ConstructionFailure(
                "the form is not alternating".into(),
            ));
        }
    }
    if rank_mod_p(&pairing, p) != dim {
        return Err(Error::ConstructionFailure(
            "the form on J1/H1 is degenerate".into(),
        ));
    }

    let form = |a: &[u64], b: &[u64]| -> u64 {
        let mut acc = 0;
        for i in 0..dim {
            for k in 0..dim {
                acc = (acc + a[i] * b[k] % p * pairing[i][k]) % p;
            }
        }
        acc
    };
    // symplectic Gram-Schmidt
    let mut pool: Vec<Vec<u64>> = (0..dim)
        .map(|i| (0..dim).map(|k| u64::from(i == k)).collect())
        .collect();
    let (mut isotropic, mut coisotropic) = (Vec::new(), Vec::new());
    while !pool.is_empty() {
        let a = pool.remove(0);
        let pos = pool
            .iter()
            .position(|b| form(&a, b) != 0)
            .ok_or_else(|| Error::ConstructionFailure("the form is degenerate".into()))?;
        let b = pool.remove(pos);
        let s = pow_mod(form(&a, &b), p - 2, p);
        let b: Vec<u64> = b.iter().map(|&x| x * s % p).collect();
        for v in pool.iter_mut() {
            let (vb, va) = (form(v, &b), form(v, &a));
            for k in 0..dim {
                v[k] = (v[k] + p * p - vb * a[k] % p + va * b[k]) % p;
            }
        }
        isotropic.push(a);
        coisotropic.push(b);
    }

    // enumerate the isotropic subspace and take its preimage
    let half = isotropic.len();
    let mut lagrangian = HashSet::new();
    for mut idx in 0..p.pow(half as u32) {
        let mut v = vec![0u64; dim];
        for w in &isotropic {
            let c = idx % p;
            idx /= p;
            for k in 0..dim {
                v[k] = (v[k] + c * w[k]) % p;
            }
        }
        lagrangian.insert(v);
    }
    let b1_elems: Vec<Elem> = elems
        .iter()
        .filter(|x| coset_of(x).is_ok_and(|c| lagrangian.contains(&coords[c])))
        .cloned()
        .collect();
    let b1 = FiniteSubgroup::from_elements("B1", arena, b1_elems);
    if j1.size() != b1.size() * p.pow(half as u32) as u128 {
        return Err(Error::ConstructionFailure(
            "B1 does not have index p^(dim/2) in J1".into(),
        ));
    }
    if !b1.check_closure(1 << 22, 0x5eed).passed() {
        return Err(Error::ConstructionFailure(
            "the preimage B1 is not a group".into(),
        ));
    }
    Ok(PolarizationData {
        p,
        basis,
        pairing,
        raw_pairing,
        theta_commutators,
        isotropic,
        coisotropic,
        b1,
    })
}

/// `eta = Ind_{B1}^{J1} theta~` and the checks made on it.
#[derive(Clone, Debug)]
pub struct InducedCharacter {
    pub theta_ext: GroupCharacter,
    /// Number of extensions of theta to `B1` along the generator chain.
    pub extensions: u128,
    /// `J1` as a single cell; `values` is indexed like its elements.
    pub group: FiniteSubgroup,
    pub values: Vec<CycloSum>,
    pub dim: u64,
    /// `<eta, eta>` over `J1`.
    pub self_product: i128,
    /// `<eta, Ind theta~'>` for a second extension `theta~'` of theta.
    pub alternative_product: i128,
    /// `<eta|H1, theta>` over `H1`.
    pub restriction_multiplicity: i128,
}

impl InducedCharacter {
    pub fn value(&self, x: &[u32]) -> Option<&CycloSum> {
        self.group.index_of(x).map(|i| &self.values[i as usize])
    }
}

fn induce(
    j1: &FiniteSubgroup,
    elems: &[Elem],
    reps: &[Elem],
    chi: &GroupCharacter,
    order: u64,
) -> Result<Vec<CycloSum>> {
    let arena = *j1.arena();
    let p = arena.p();
    let inv_reps: Vec<Elem> = reps
        .iter()
        .map(|r| arena.inv(r).ok_or(Error::Singular))
        .collect::<Result<_>>()?;
    let mut buf = vec![0u32; arena.n() * arena.n()];
    let mut out = Vec::with_capacity(elems.len());
    for g in elems {
        let mut s = CycloSum::zero(p, order);
        for (r, ri) in reps.iter().zip(&inv_reps) {
            arena.mul_into(&arena.mul(ri, g), r, &mut buf);
            if let Some(t) = chi.value(&buf) {
                s.add_phase(t, 1)?;
            }
        }
        out.push(s);
    }
    Ok(out)
}

fn inner_product(a: &[CycloSum], b: &[CycloSum], order: u128) -> Result<i128> {
    let Some(first) = a.first() else {
        return Err(Error::InvalidInput("empty group".into()));
    };
    let mut total = CycloSum::zero(first.p(), first.order());
    for (x, y) in a.iter().zip(b) {
        total.add_assign(&x.mul(&y.conj())?)?;
    }
    let sum = total.as_integer().ok_or_else(|| {
        Error::ConstructionFailure("an inner product of characters is irrational".into())
    })?;
    if sum % order as i128 != 0 {
        return Err(Error::ConstructionFailure(format!(
            "an inner product of characters is {sum}/{order}, not an integer"
        )));
    }
    Ok(sum / order as i128)
}

/// Extends theta to `B1`, induces to `J1`, and verifies the dimension law,
/// irreducibility, the restriction to `H1`, class-function invariance, and
/// that a second extension induces the same character.
pub fn extend_and_induce(
    fam: &SubgroupFamily,
    sc: &SimpleCharacter,
    pol: &PolarizationData,
    budget: u128,
) -> Result<InducedCharacter> {
    let arena = *fam.arena();
    let p = arena.p();
    let j1 = fam.j1().as_single_cell(budget)?;
    let elems = j1.elements(budget)?;
    let ext = extend_character(&sc.theta, &pol.b1, 0, budget)?;
    let alt = extend_character(&sc.theta, &pol.b1, 1, budget)?;
    let order = ext
        .character
        .max_denominator()
        .max(alt.character.max_denominator());
    let (rep_idx, _) = left_cosets(&j1, &pol.b1, budget)?;
    let reps: Vec<Elem> = rep_idx.iter().map(|&i| elems[i].clone()).collect();
    let values = induce(&j1, &elems, &reps, &ext.character, order)?;
    let alt_values = induce(&j1, &elems, &reps, &alt.character, order)?;

    let id = j1.index_of(&arena.identity()).expect("identity in J1") as usize;
    let dim = values[id]
        .as_integer()
        .ok_or_else(|| Error::ConstructionFailure("eta(1) is not an integer".into()))?;
    let index = j1.size() / fam.h1().size();
    if dim <= 0 || (dim * dim) as u128 != index {
        return Err(Error::ConstructionFailure(format!(
            "dim eta = {dim} but [J1 : H1] = {index}"
        )));
    }
    let self_product = inner_product(&values, &values, j1.size())?;
    if self_product != 1 {
        return Err(Error::ConstructionFailure(format!(
            "<eta, eta> = {self_product}: eta is reducible"
        )));
    }
    let alternative_product = inner_product(&values, &alt_values, j1.size())?;

    // eta on H1 is dim * theta
    let h1 = fam.h1().elements(budget)?;
    let mut on_h1 = Vec::with_capacity(h1.len());
    let mut theta_h1 = Vec::with_capacity(h1.len());
    for h in &h1 {
        let v = &values[j1.index_of(h).expect("H1 inside J1") as usize];
        let t = sc.theta.value(h).expect("member");
        let mut expect = CycloSum::zero(p, order);
        expect.add_phase(t, dim)?;
        if !v.equals(&expect) {
            return Err(Error::ConstructionFailure(
                "eta restricted to H1 is not a multiple of theta".into(),
            ));
        }
        let mut th = CycloSum::zero(p, order);
        th.add_phase(t, 1)?;
        on_h1.push(v.clone());
        theta_h1.push(th);
    }
    let restriction_multiplicity = inner_product(&on_h1, &theta_h1, h1.len() as u128)?;

    // class function under conjugation by generators of J1
    for s in generating_set(&j1, budget)? {
        let si = arena.inv(&s).ok_or(Error::Singular)?;
        for (g, v) in elems.iter().zip(&values) {
            let c = arena.mul(&arena.mul(&s, g), &si);
            let k = j1
                .index_of(&c)
                .ok_or_else(|| Error::ConstructionFailure("J1 is not normal in itself".into()))?;
            if !values[k as usize].equals(v) {
                return Err(Error::ConstructionFailure(
                    "eta is not a class function".into(),
                ));
            }
        }
    }
    Ok(InducedCharacter {
        theta_ext: ext.character,
        extensions: ext.count,
        group: j1,
        values,
        dim: dim as u64,
        self_product,
        alternative_product,
        restriction_multiplicity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{build_subgroups, simple_character};
    use crate::samples;

    const BUDGET: u128 = 1 << 26;

    #[test]
    fn odd_depth_is_refused() {
        let fam = build_subgroups(&samples::ramified_depth_one(), BUDGET).unwrap();
        let sc = simple_character(&fam, 0, BUDGET).unwrap();
        match heisenberg(&fam, &sc, BUDGET) {
            Err(Error::InvalidInput(m)) => assert!(m.contains("take B1 = H1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rank_over_fp() {
        assert_eq!(rank_mod_p(&[vec![0, 1], vec![2, 0]], 3), 2);
        assert_eq!(rank_mod_p(&[vec![1, 2], vec![2, 1]], 3), 1);
    }

    #[test]
    fn unramified_depth_two_polarisation() {
        let fam = build_subgroups(&samples::unramified_depth_two(), BUDGET).unwrap();
        let sc = simple_character(&fam, 0, BUDGET).unwrap();
        let pol = heisenberg(&fam, &sc, BUDGET).unwrap();
        assert_eq!(pol.dim(), 2);
        assert_eq!(pol.isotropic.len(), 1);
        assert_eq!(fam.j1().size() / pol.b1.size(), 3);
        assert_eq!(pol.b1.size() / fam.h1().size(), 3);
        for a in &pol.isotropic {
            for b in &pol.isotropic {
                assert_eq!(pol.form(a, b), 0);
            }
        }
        // theta on commutators reproduces the commutator form
        for a in 0..2 {
            for b in 0..2 {
                let t = pol.theta_commutators[a][b];
                assert_eq!(fp_value(t, 3, "theta").unwrap(), pol.pairing[a][b]);
            }
        }
        for (a, b) in pol.isotropic.iter().zip(&pol.coisotropic) {
            assert_eq!(pol.form(a, b), 1);
        }

        let eta = extend_and_induce(&fam, &sc, &pol, BUDGET).unwrap();
        assert_eq!(eta.dim, 3);
        assert_eq!(eta.self_product, 1);
        assert_eq!(eta.alternative_product, 1);
        assert_eq!(eta.restriction_multiplicity, 3);
        assert!(eta.theta_ext.check_multiplicative(1 << 22, 11).passed());
    }
}
