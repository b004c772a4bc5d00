//! Principal hereditary orders in `M_n(Q_p)` and elements `beta` attached to them.
//!
//! The order of period `e` (block size `m = n / e`) is taken in standard
//! block form. Its radical filtration is described by one closed form: with
//! 1-indexed block coordinates `(a, b)` of an entry, the `i`-th power of the
//! radical consists of the matrices whose `(a, b)` entries all have
//! valuation at least `ceil((i + a - b) / e)`. For `i = 0` this gives the
//! order itself (integral on and above the block diagonal, divisible by `p`
//! below) and for `i = 1` its radical (divisible by `p` on and below).

mod fp_poly;

use std::collections::HashSet;

use num_integer::Integer;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::padic::{det_mod, valuation_capped, MatrixApprox, PrecisionCtx};

pub use fp_poly::FpPoly;

pub fn ceil_div(a: i64, b: i64) -> i64 {
    Integer::div_ceil(&a, &b)
}

pub fn floor_div(a: i64, b: i64) -> i64 {
    Integer::div_floor(&a, &b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HereditaryOrder {
    n: usize,
    e: usize,
}

impl HereditaryOrder {
    pub fn new(n: usize, e: usize) -> Result<Self> {
        if n == 0 || e == 0 {
            return Err(Error::DatumInvalid("n and e must be positive".into()));
        }
        if n % e != 0 {
            return Err(Error::DatumInvalid(format!(
                "e must divide n (n = {n}, e = {e})"
            )));
        }
        Ok(HereditaryOrder { n, e })
    }

    /// The maximal order `M_n(Z_p)`.
    pub fn maximal(n: usize) -> Self {
        HereditaryOrder { n, e: 1 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> usize {
        self.e
    }

    pub fn block_size(&self) -> usize {
        self.n / self.e
    }

    /// 1-indexed block containing row (or column) `r`.
    pub fn block(&self, r: usize) -> i64 {
        (r / self.block_size()) as i64 + 1
    }

    /// Minimal valuation of entry `(r, s)` in the `i`-th radical power.
    pub fn threshold(&self, i: i64, r: usize, s: usize) -> i64 {
        ceil_div(i + self.block(r) - self.block(s), self.e as i64)
    }

    pub fn thresholds(&self, i: i64) -> Vec<i64> {
        let n = self.n;
        (0..n * n)
            .map(|k| self.threshold(i, k / n, k % n))
            .collect()
    }

    /// Membership of `x` in the `i`-th power of the radical.
    pub fn contains(&self, x: &MatrixApprox, i: i64) -> Result<bool> {
        self.check_dim(x)?;
        if x.is_zero() {
            return Ok(true);
        }
        let (p, n) = (x.ctx().p(), self.n);
        let prec = x.precision();
        for (k, &d) in x.entries().iter().enumerate() {
            let need = self.threshold(i, k / n, k % n);
            let v = valuation_capped(d, p, prec);
            if v < prec {
                if x.scale() + (v as i64) < need {
                    return Ok(false);
                }
            } else if x.scale() + (prec as i64) < need {
                return Err(Error::PrecisionLoss(format!(
                    "entry ({}, {}) is only known modulo p^{}, membership needs p^{need}",
                    k / n,
                    k % n,
                    x.scale() + prec as i64
                )));
            }
        }
        Ok(true)
    }

    /// The largest `i` with `x` in the `i`-th radical power.
    pub fn valuation(&self, x: &MatrixApprox) -> Result<i64> {
        self.check_dim(x)?;
        if x.is_zero() {
            return Err(Error::InvalidInput(
                "valuation of the zero matrix is undefined".into(),
            ));
        }
        let (p, n, e) = (x.ctx().p(), self.n, self.e as i64);
        let prec = x.precision();
        let mut known = i64::MAX;
        let mut unknown = i64::MAX;
        for (k, &d) in x.entries().iter().enumerate() {
            let shift = self.block(k % n) - self.block(k / n);
            let v = valuation_capped(d, p, prec);
            let bound = e * (x.scale() + v as i64) + shift;
            if v < prec {
                known = known.min(bound);
            } else {
                unknown = unknown.min(bound);
            }
        }
        if known > unknown {
            return Err(Error::PrecisionLoss(
                "a vanishing entry could still decide the valuation".into(),
            ));
        }
        Ok(known)
    }

    /// `p^t E_rs` for every position: these span the `i`-th radical power.
    pub fn spanning_set(&self, i: i64, ctx: PrecisionCtx) -> Vec<MatrixApprox> {
        let n = self.n;
        (0..n * n)
            .map(|k| {
                MatrixApprox::elementary(ctx, n, k / n, k % n, self.threshold(i, k / n, k % n))
            })
            .collect()
    }

    fn check_dim(&self, x: &MatrixApprox) -> Result<()> {
        if x.n() != self.n {
            return Err(Error::InvalidInput(format!(
                "matrix of size {} against an order in M_{}",
                x.n(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Outcome of comparing a radical power with powers of `p M_n(Z_p)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproximationCheck {
    pub index: i64,
    /// Exponent `k` with `p^k M_n(Z_p)` claimed inside the radical power.
    pub inner: i64,
    /// Exponent `k` with the radical power claimed inside `p^k M_n(Z_p)`.
    pub outer: i64,
    pub inner_holds: bool,
    pub outer_holds: bool,
    pub inner_strict: bool,
    pub outer_strict: bool,
}

impl ApproximationCheck {
    pub fn holds(&self) -> bool {
        self.inner_holds && self.outer_holds
    }
}

/// `p^(ceil((i-1)/e)+1) M_n ⊂ B^i ⊂ p^(floor(i/e)) M_n`, tested on `p^t E_rs`.
pub fn check_approximation(
    order: &HereditaryOrder,
    i: i64,
    ctx: PrecisionCtx,
) -> Result<ApproximationCheck> {
    let e = order.period() as i64;
    let n = order.n();
    let inner = ceil_div(i - 1, e) + 1;
    let outer = floor_div(i, e);
    let maximal = HereditaryOrder::maximal(n);
    let mut check = ApproximationCheck {
        index: i,
        inner,
        outer,
        inner_holds: true,
        outer_holds: true,
        inner_strict: false,
        outer_strict: false,
    };
    for k in 0..n * n {
        let (r, s) = (k / n, k % n);
        let probe = MatrixApprox::elementary(ctx, n, r, s, inner);
        check.inner_holds &= order.contains(&probe, i)?;
        let t = order.threshold(i, r, s);
        let gen = MatrixApprox::elementary(ctx, n, r, s, t);
        check.outer_holds &= maximal.contains(&gen, outer)?;
        // a generator outside the smaller lattice, or beyond the larger one
        check.inner_strict |= !maximal.contains(&gen, inner)?;
        check.outer_strict |= !order.contains(&MatrixApprox::elementary(ctx, n, r, s, outer), i)?;
    }
    Ok(check)
}

/// Result of the `k0` search; `AtLeast` when the search cap was reached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum K0 {
    Exact(i64),
    AtLeast(i64),
}

impl std::fmt::Display for K0 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            K0::Exact(k) => write!(f, "{k}"),
            K0::AtLeast(k) => write!(f, ">= {k}"),
        }
    }
}

/// A pair (order, beta) with `v_A(beta) = -j < 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InductionDatum {
    order: HereditaryOrder,
    beta: MatrixApprox,
    j: i64,
    field_certified: bool,
}

/// Diagnostics behind the minimality verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimalityReport {
    pub coprime: bool,
    pub single_slope: bool,
    /// Residue polynomial of `p^j beta^e` is `h^e` with `h` irreducible of degree `n/e`.
    pub residue_generates: bool,
    pub residue_factor: Option<Vec<u64>>,
}

impl MinimalityReport {
    pub fn is_minimal(&self) -> bool {
        self.coprime && self.single_slope && self.residue_generates
    }
}

impl InductionDatum {
    /// Validates the datum, including a certificate that `Q_p[beta]` is a
    /// field of degree `n` with ramification index `e` normalising the order.
    pub fn new(order: HereditaryOrder, beta: MatrixApprox, j: i64) -> Result<Self> {
        let mut d = Self::new_uncertified(order, beta, j)?;
        if d.residue_splits_coprimely()? {
            return Err(Error::DatumInvalid(
                "F[beta] is not a field: the characteristic polynomial factors by Hensel's lemma"
                    .into(),
            ));
        }
        // single slope -j/e with gcd(j, e) = 1 forces e | deg of every factor,
        // and the residue condition forces f | deg as well
        let report = d.minimality_report()?;
        if !report.is_minimal() {
            return Err(Error::DatumInvalid(
                "cannot certify that F[beta] is a field of degree n with the order's ramification"
                    .into(),
            ));
        }
        d.field_certified = true;
        if !d.normalises_order()? {
            return Err(Error::DatumInvalid(
                "beta does not normalise the hereditary order".into(),
            ));
        }
        Ok(d)
    }

    /// Only checks dimensions and `v_A(beta) = -j`; used for deliberately
    /// degenerate elements.
    pub fn new_uncertified(order: HereditaryOrder, beta: MatrixApprox, j: i64) -> Result<Self> {
        if beta.n() != order.n() {
            return Err(Error::DatumInvalid(format!(
                "beta is {}x{} but the order lives in M_{}",
                beta.n(),
                beta.n(),
                order.n()
            )));
        }
        if j <= 0 {
            return Err(Error::DatumInvalid(format!("j must be positive, got {j}")));
        }
        let v = order.valuation(&beta)?;
        if v != -j {
            return Err(Error::DatumInvalid(format!(
                "v_A(beta) = {v}, but j = {j} requires {}",
                -j
            )));
        }
        Ok(InductionDatum {
            order,
            beta,
            j,
            field_certified: false,
        })
    }

    pub fn order(&self) -> &HereditaryOrder {
        &self.order
    }

    pub fn beta(&self) -> &MatrixApprox {
        &self.beta
    }

    pub fn ctx(&self) -> PrecisionCtx {
        self.beta.ctx()
    }

    pub fn n(&self) -> usize {
        self.order.n()
    }

    pub fn period(&self) -> usize {
        self.order.period()
    }

    /// `j = -v_A(beta)`, the depth.
    pub fn depth(&self) -> i64 {
        self.j
    }

    /// `j / e`.
    pub fn normalised_depth(&self) -> Ratio<i64> {
        Ratio::new(self.j, self.order.period() as i64)
    }

    pub fn field_certified(&self) -> bool {
        self.field_certified
    }

    /// `ceil(j / e)`: the smallest power of `p` making beta integral.
    pub fn integrality_shift(&self) -> i64 {
        ceil_div(self.j, self.order.period() as i64)
    }

    /// `p^ceil(j/e) beta`, an integral generator of the ring of integers.
    pub fn integral_generator(&self) -> MatrixApprox {
        self.beta.shift(self.integrality_shift())
    }

    /// Sums of principal minors of the normalized digit matrix, `e_0..e_n`.
    fn principal_minor_sums(m: &MatrixApprox) -> Vec<u64> {
        let n = m.n();
        let (p, prec) = (m.ctx().p(), m.precision());
        let modulus = p.pow(prec);
        let mut sums = vec![0u64; n + 1];
        sums[0] = 1 % modulus;
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let k = idx.len();
            let sub: Vec<u64> = idx
                .iter()
                .flat_map(|&r| idx.iter().map(move |&c| (r, c)))
                .map(|(r, c)| m.entries()[r * n + c])
                .collect();
            sums[k] = (sums[k] + det_mod(&sub, k, p, prec)) % modulus;
        }
        sums
    }

    /// Valuations of the coefficients `c_k` of `det(x - beta)`: exact, or a
    /// lower bound when the coefficient vanishes at working precision.
    pub fn char_poly_valuations(&self) -> Vec<(i64, bool)> {
        let b = &self.beta;
        let (p, prec) = (b.ctx().p(), b.precision());
        Self::principal_minor_sums(b)
            .into_iter()
            .enumerate()
            .map(|(k, s)| {
                let v = valuation_capped(s, p, prec);
                (k as i64 * b.scale() + v as i64, v < prec)
            })
            .collect()
    }

    /// Every root of the characteristic polynomial has valuation `-j/e`.
    pub fn single_slope(&self) -> bool {
        let (j, e) = (self.j, self.order.period() as i64);
        let vals = self.char_poly_valuations();
        let n = self.n() as i64;
        let (vn, exact) = vals[self.n()];
        if !exact || e * vn != -n * j {
            return false;
        }
        vals.iter()
            .enumerate()
            .skip(1)
            .all(|(k, &(v, _))| e * v >= -(k as i64) * j)
    }

    /// `p^j beta^e`, a unit of the ring of integers when the datum is sound.
    pub fn residue_element(&self) -> Result<MatrixApprox> {
        Ok(self.beta.pow(self.order.period() as u32)?.shift(self.j))
    }

    /// Characteristic polynomial of `p^j beta^e` modulo `p`, monic, lowest degree first.
    fn residue_char_poly(&self) -> Result<FpPoly> {
        let y = self.residue_element()?;
        let p = y.ctx().p();
        let n = self.n();
        if y.scale() < 0 {
            return Err(Error::DatumInvalid("p^j beta^e is not integral".into()));
        }
        let mut coeffs = vec![0u64; n + 1];
        if y.scale() == 0 {
            let sums = Self::principal_minor_sums(&y);
            for k in 0..=n {
                let c = sums[k] % p;
                coeffs[n - k] = if k % 2 == 0 { c } else { (p - c) % p };
            }
        } else {
            coeffs[n] = 1;
        }
        Ok(FpPoly::new(p, coeffs))
    }

    /// The residue polynomial has two coprime nonconstant factors, so the
    /// characteristic polynomial of the integral element splits over `Q_p`.
    fn residue_splits_coprimely(&self) -> Result<bool> {
        let chi = self.residue_char_poly()?;
        // take out the full power of the smallest-degree irreducible factor
        for d in 1..=self.n() {
            for f in monic_polys(self.ctx().p(), d) {
                if f.is_irreducible() && chi.rem(&f).is_zero() {
                    let mut rest = chi.clone();
                    while rest.degree().unwrap_or(0) > 0 && rest.rem(&f).is_zero() {
                        rest = rest.div_rem(&f).0;
                    }
                    return Ok(rest.degree().unwrap_or(0) > 0);
                }
            }
        }
        Ok(false)
    }

    pub fn minimality_report(&self) -> Result<MinimalityReport> {
        let e = self.order.period();
        let f = self.n() / e;
        let coprime = self.j.gcd(&(e as i64)) == 1;
        let single_slope = self.single_slope();
        let chi = self.residue_char_poly()?;
        let x = FpPoly::x(self.ctx().p());
        let h = chi.gcd(&chi.frobenius_power(f as u32).sub(&x));
        let residue_generates = h.degree() == Some(f)
            && h.is_irreducible()
            && h.coeffs()[0] != 0
            && h.pow(e as u32) == chi;
        Ok(MinimalityReport {
            coprime,
            single_slope,
            residue_generates,
            residue_factor: residue_generates.then(|| h.coeffs().to_vec()),
        })
    }

    /// Minimality of beta. The coprimality condition is decided first, so a
    /// degenerate element with `gcd(j, e) > 1` is reported as non-minimal.
    pub fn is_minimal(&self) -> Result<bool> {
        if self.j.gcd(&(self.order.period() as i64)) != 1 {
            return Ok(false);
        }
        let report = self.minimality_report()?;
        if report.is_minimal() {
            return Ok(true);
        }
        if !self.field_certified {
            return Err(Error::DatumInvalid(
                "F[beta] is not certified to be a field of degree n".into(),
            ));
        }
        Ok(false)
    }

    /// `beta A beta^-1 = A`, tested on spanning sets in both directions.
    pub fn normalises_order(&self) -> Result<bool> {
        let inv = self.beta.mat_inv()?;
        for g in self.order.spanning_set(0, self.ctx()) {
            let a = self.beta.mul(&g)?.mul(&inv)?;
            let b = inv.mul(&g)?.mul(&self.beta)?;
            if !self.order.contains(&a, 0)? || !self.order.contains(&b, 0)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Residues modulo `p^level` of `sum_i a_i beta'^i`, `beta' = p^ceil(j/e) beta`,
    /// for all coefficient vectors; duplicates removed, canonical order.
    pub fn integer_ring_residues(&self, level: u32) -> Result<Vec<Vec<u32>>> {
        let n = self.n();
        let p = self.ctx().p();
        let q = p.pow(level);
        let g = self.integral_generator();
        let mut powers = Vec::with_capacity(n);
        let mut acc = MatrixApprox::identity(self.ctx(), n);
        for _ in 0..n {
            powers.push(acc.to_residues(level)?);
            acc = acc.mul(&g)?;
        }
        let total = q.pow(n as u32);
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for mut idx in 0..total {
            let mut m = vec![0u64; n * n];
            for pw in &powers {
                let a = idx % q;
                idx /= q;
                for (slot, &v) in m.iter_mut().zip(pw) {
                    *slot = (*slot + a * v as u64) % q;
                }
            }
            let m: Vec<u32> = m.into_iter().map(|x| x as u32).collect();
            if seen.insert(m.clone()) {
                out.push(m);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Maximal `k` such that some `x` in the order, outside `B + O_L`, has
    /// `beta x - x beta` in the `k`-th radical power.
    ///
    /// Representatives run over the order modulo `B^(j+2)`, which determines
    /// the commutator modulo `B^2`; values of 2 or more are capped.
    pub fn k0(&self, budget: u128) -> Result<K0> {
        let (n, e) = (self.n(), self.order.period() as i64);
        let ctx = self.ctx();
        let p = ctx.p();
        let cap = 2i64;
        if (ctx.precision() as i64) < self.j + 2 {
            return Err(Error::PrecisionLoss(format!(
                "k0 needs precision at least j + 2 = {}, have {}",
                self.j + 2,
                ctx.precision()
            )));
        }
        let t0 = self.order.thresholds(0);
        let t1 = self.order.thresholds(1);
        let tk = self.order.thresholds(self.j + 2);
        let t_cap = self.order.thresholds(cap);
        let s = self.beta.scale();
        let width = t_cap.iter().map(|&t| t - s).max().unwrap_or(1).max(1);
        if width > self.beta.precision() as i64 {
            return Err(Error::PrecisionLoss(format!(
                "beta is known to p^{}, the search needs p^{width}",
                self.beta.precision()
            )));
        }
        let modulus = p.pow(width as u32) as i64;
        let b: Vec<i64> = self
            .beta
            .entries()
            .iter()
            .map(|&x| (x as i64) % modulus)
            .collect();

        let radix: Vec<u64> = (0..n * n).map(|k| p.pow((tk[k] - t0[k]) as u32)).collect();
        let base: Vec<i64> = (0..n * n).map(|k| p.pow(t0[k] as u32) as i64).collect();
        let total: u128 = radix.iter().map(|&r| r as u128).product();

        // classes modulo B of the span of 1, beta', ..., beta'^(n-1)
        let forbidden = self.ring_classes_mod_radical(&t1)?;

        let shifts: Vec<i64> = (0..n * n)
            .map(|k| self.order.block(k % n) - self.order.block(k / n))
            .collect();
        let mut digits = vec![0u64; n * n];
        let mut x = vec![0i64; n * n];
        let mut comm = vec![0i64; n * n];
        let mut best: Option<i64> = None;
        let mut steps: u128 = 0;
        loop {
            for k in 0..n * n {
                x[k] = (digits[k] as i64 * base[k]) % modulus;
            }
            let key = class_key(&x, &t1, p);
            if !forbidden.contains(&key) {
                for r in 0..n {
                    for c in 0..n {
                        let mut acc = 0i64;
                        for k in 0..n {
                            acc += b[r * n + k] * x[k * n + c] - x[r * n + k] * b[k * n + c];
                        }
                        comm[r * n + c] = acc.rem_euclid(modulus);
                    }
                }
                let mut v = cap;
                for k in 0..n * n {
                    let val = valuation_capped(comm[k] as u64, p, width as u32) as i64;
                    v = v.min(e * (s + val) + shifts[k]);
                }
                best = Some(best.map_or(v, |b: i64| b.max(v)));
            }
            steps += 1;
            if steps > budget {
                return Err(Error::Budget {
                    what: "k0 search".into(),
                    needed: total,
                    budget,
                    lower_bound: best,
                });
            }
            // mixed-radix increment
            let mut k = n * n;
            loop {
                if k == 0 {
                    let best = best.ok_or_else(|| {
                        Error::ConstructionFailure("every representative lies in B + O_L".into())
                    })?;
                    return Ok(if best >= cap {
                        K0::AtLeast(cap)
                    } else {
                        K0::Exact(best)
                    });
                }
                k -= 1;
                digits[k] += 1;
                if digits[k] < radix[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
    }

    fn ring_classes_mod_radical(&self, t1: &[i64]) -> Result<HashSet<Vec<u64>>> {
        let n = self.n();
        let p = self.ctx().p();
        let g = self.integral_generator();
        let mut powers = Vec::with_capacity(n);
        let mut acc = MatrixApprox::identity(self.ctx(), n);
        let level = t1.iter().copied().max().unwrap_or(1).max(1) as u32;
        for _ in 0..n {
            powers.push(acc.to_residues(level)?);
            acc = acc.mul(&g)?;
        }
        let mut out = HashSet::new();
        for mut idx in 0..p.pow(n as u32) {
            let mut m = vec![0i64; n * n];
            for pw in &powers {
                let a = (idx % p) as i64;
                idx /= p;
                for (slot, &v) in m.iter_mut().zip(pw) {
                    *slot += a * v as i64;
                }
            }
            out.insert(class_key(&m, t1, p));
        }
        Ok(out)
    }
}

fn class_key(x: &[i64], t1: &[i64], p: u64) -> Vec<u64> {
    x.iter()
        .zip(t1)
        .map(|(&v, &t)| v.rem_euclid(p.pow(t.max(0) as u32) as i64) as u64)
        .collect()
}

fn monic_polys(p: u64, d: usize) -> impl Iterator<Item = FpPoly> {
    (0..p.pow(d as u32)).map(move |mut idx| {
        let mut c = Vec::with_capacity(d + 1);
        for _ in 0..d {
            c.push(idx % p);
            idx /= p;
        }
        c.push(1);
        FpPoly::new(p, c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use proptest::prelude::*;

    fn ctx() -> PrecisionCtx {
        PrecisionCtx::new(3, 12).unwrap()
    }

    fn pi(c: PrecisionCtx) -> MatrixApprox {
        MatrixApprox::from_integers(c, 2, 0, &[0, 1, 3, 0]).unwrap()
    }

    /// Entry-valuation pattern of the order (`i = 0`) or of its radical
    /// (`i = 1`), read off block by block from the two displayed shapes.
    fn displayed_pattern(n: usize, e: usize, radical: bool) -> Vec<i64> {
        let m = n / e;
        let mut t = vec![0i64; n * n];
        for r in 0..n {
            for s in 0..n {
                let (a, b) = (r / m, s / m);
                t[r * n + s] = match (radical, a.cmp(&b)) {
                    (false, std::cmp::Ordering::Greater) => 1,
                    (false, _) => 0,
                    (true, std::cmp::Ordering::Less) => 0,
                    (true, _) => 1,
                };
            }
        }
        t
    }

    /// Pattern of the additive span of products of two pattern lattices.
    fn min_plus(x: &[i64], y: &[i64], n: usize) -> Vec<i64> {
        (0..n * n)
            .map(|k| {
                (0..n)
                    .map(|l| x[(k / n) * n + l] + y[l * n + k % n])
                    .min()
                    .unwrap()
            })
            .collect()
    }

    /// Oracle for the `i`-th radical power: products of `i` radicals, and
    /// negative powers through multiplication by powers of `p^-1`.
    fn oracle_pattern(n: usize, e: usize, i: i64) -> Vec<i64> {
        if i < 0 {
            let k = (-i + e as i64 - 1) / e as i64;
            return oracle_pattern(n, e, i + k * e as i64)
                .iter()
                .map(|t| t - k)
                .collect();
        }
        let mut acc = displayed_pattern(n, e, false);
        let rad = displayed_pattern(n, e, true);
        for _ in 0..i {
            acc = min_plus(&acc, &rad, n);
        }
        acc
    }

    fn divisors(n: usize) -> Vec<usize> {
        (1..=n).filter(|e| n % e == 0).collect()
    }

    #[test]
    fn closed_form_matches_products_of_displayed_radical() {
        for n in 1..=4 {
            for e in divisors(n) {
                let o = HereditaryOrder::new(n, e).unwrap();
                for i in -2 * e as i64..=2 * e as i64 + 2 {
                    assert_eq!(
                        o.thresholds(i),
                        oracle_pattern(n, e, i),
                        "n={n} e={e} i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn filtration_is_strictly_decreasing_and_periodic() {
        for n in 1..=4 {
            for e in divisors(n) {
                let o = HereditaryOrder::new(n, e).unwrap();
                for i in -2 * e as i64..=2 * e as i64 {
                    let (a, b) = (o.thresholds(i), o.thresholds(i + 1));
                    assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
                    assert!(a != b);
                    let shifted: Vec<i64> = a.iter().map(|t| t + 1).collect();
                    assert_eq!(o.thresholds(i + e as i64), shifted);
                }
            }
        }
    }

    #[test]
    fn membership_examples() {
        let c = ctx();
        for (n, e) in [(2, 1), (2, 2), (4, 2), (3, 3)] {
            let o = HereditaryOrder::new(n, e).unwrap();
            assert!(o.contains(&MatrixApprox::identity(c, n), 0).unwrap());
            let pi_i = MatrixApprox::identity(c, n).shift(1);
            assert!(o.contains(&pi_i, e as i64).unwrap());
            assert!(!o.contains(&pi_i, e as i64 + 1).unwrap());
        }
        let o = HereditaryOrder::new(2, 2).unwrap();
        assert!(o.contains(&pi(c), 1).unwrap());
        assert!(!o.contains(&pi(c), 2).unwrap());
    }

    #[test]
    fn membership_reports_missing_digits() {
        let shallow = PrecisionCtx::new(3, 1).unwrap();
        let o = HereditaryOrder::new(4, 4).unwrap();
        let x = MatrixApprox::elementary(shallow, 4, 0, 3, 0);
        assert!(o.contains(&x, 1).unwrap());
        // entry (3, 0) must be divisible by p^2 but is only known modulo p
        assert!(matches!(o.contains(&x, 2), Err(Error::PrecisionLoss(_))));
    }

    #[test]
    fn valuation_examples() {
        let c = ctx();
        let o = HereditaryOrder::new(2, 2).unwrap();
        assert_eq!(o.valuation(&MatrixApprox::identity(c, 2)).unwrap(), 0);
        assert_eq!(o.valuation(&pi(c)).unwrap(), 1);
        let inv = pi(c).mat_inv().unwrap();
        for j in [1u32, 3, 5] {
            assert_eq!(o.valuation(&inv.pow(j).unwrap()).unwrap(), -(j as i64));
        }
        assert!(o.valuation(&MatrixApprox::zero(c, 2)).is_err());
    }

    #[test]
    fn valuation_is_the_largest_member_index() {
        let c = ctx();
        let o = HereditaryOrder::new(4, 2).unwrap();
        let x = MatrixApprox::from_integers(
            c,
            4,
            -1,
            &[3, 1, 0, 2, 9, 3, 1, 0, 0, 3, 9, 0, 27, 3, 3, 9],
        )
        .unwrap();
        let v = o.valuation(&x).unwrap();
        assert!(o.contains(&x, v).unwrap());
        assert!(!o.contains(&x, v + 1).unwrap());
    }

    #[test]
    fn approximation_examples() {
        let c = ctx();
        for n in 1..=4 {
            for e in divisors(n) {
                let o = HereditaryOrder::new(n, e).unwrap();
                assert!(check_approximation(&o, 0, c).unwrap().holds());
            }
        }
        let r = check_approximation(&HereditaryOrder::new(2, 2).unwrap(), 1, c).unwrap();
        assert!(r.holds() && r.inner_strict && r.outer_strict);
        assert!(
            check_approximation(&HereditaryOrder::new(4, 2).unwrap(), -3, c)
                .unwrap()
                .holds()
        );
    }

    #[test]
    fn approximation_holds_across_the_test_range() {
        let c = ctx();
        for n in 1..=4 {
            for e in divisors(n) {
                let o = HereditaryOrder::new(n, e).unwrap();
                for i in -2 * e as i64..=2 * e as i64 {
                    assert!(
                        check_approximation(&o, i, c).unwrap().holds(),
                        "n={n} e={e} i={i}"
                    );
                }
            }
        }
    }

    #[test]
    fn period_must_divide_dimension() {
        let err = HereditaryOrder::new(3, 2).unwrap_err();
        assert!(err.to_string().contains("e must divide n"));
    }

    #[test]
    fn shipped_data_are_minimal() {
        for d in [
            samples::ramified_depth_one(),
            samples::ramified_depth_three(),
            samples::unramified_depth_two(),
            samples::ramified_depth_one_twisted(),
        ] {
            assert!(d.field_certified());
            assert!(d.is_minimal().unwrap());
            assert!(d.normalises_order().unwrap());
        }
        let r = samples::unramified_depth_two().minimality_report().unwrap();
        assert_eq!(r.residue_factor, Some(vec![1, 0, 1]));
    }

    #[test]
    fn square_of_uniformizer_is_not_minimal() {
        let d = samples::ramified_square();
        assert_eq!(d.depth(), 2);
        assert!(!d.is_minimal().unwrap());
    }

    #[test]
    fn split_element_is_rejected() {
        let err = samples::split_element().unwrap_err();
        assert!(
            matches!(err, Error::DatumInvalid(ref m) if m.contains("not a field")),
            "{err}"
        );
    }

    #[test]
    fn normalised_depth() {
        assert_eq!(
            samples::ramified_depth_one().normalised_depth(),
            Ratio::new(1, 2)
        );
        assert_eq!(
            samples::ramified_depth_three().normalised_depth(),
            Ratio::new(3, 2)
        );
        assert_eq!(
            samples::unramified_depth_two().normalised_depth(),
            Ratio::from_integer(2)
        );
    }

    /// Independent k0: arithmetic through `MatrixApprox` and membership scans.
    fn k0_oracle(d: &InductionDatum) -> i64 {
        let c = d.ctx();
        let o = d.order();
        let n = o.n();
        let j = d.depth();
        let p = c.p() as i64;
        let t0 = o.thresholds(0);
        let tk = o.thresholds(j + 2);
        let gens: Vec<MatrixApprox> = (0..n)
            .scan(MatrixApprox::identity(c, n), |acc, _| {
                let cur = acc.clone();
                *acc = acc.mul(&d.integral_generator()).unwrap();
                Some(cur)
            })
            .collect();
        let in_ring_plus_radical = |x: &MatrixApprox| -> bool {
            (0..p.pow(n as u32)).any(|mut idx| {
                let mut y = x.clone();
                for g in &gens {
                    let a = idx % p;
                    idx /= p;
                    if a != 0 {
                        let mut s = g.clone();
                        for _ in 1..a {
                            s = s.add(g).unwrap();
                        }
                        y = match y.sub(&s) {
                            Ok(z) => z,
                            Err(_) => return true,
                        };
                    }
                }
                y.is_zero() || o.contains(&y, 1).unwrap()
            })
        };
        let counts: Vec<i64> = (0..n * n).map(|k| p.pow((tk[k] - t0[k]) as u32)).collect();
        let total: i64 = counts.iter().product();
        let mut best = i64::MIN;
        for mut idx in 0..total {
            let mut raw = vec![0i64; n * n];
            for k in 0..n * n {
                raw[k] = (idx % counts[k]) * p.pow(t0[k] as u32);
                idx /= counts[k];
            }
            let Ok(x) = MatrixApprox::from_integers(c, n, 0, &raw) else {
                continue;
            };
            if in_ring_plus_radical(&x) {
                continue;
            }
            let alpha = d.beta().mul(&x).unwrap().sub(&x.mul(d.beta()).unwrap());
            let v = match alpha {
                Ok(a) => (-(2 * j)..=2)
                    .rev()
                    .find(|&i| o.contains(&a, i).unwrap_or(false))
                    .unwrap(),
                Err(_) => 2,
            };
            best = best.max(v.min(2));
        }
        best
    }

    #[test]
    fn k0_equals_valuation_for_depth_one() {
        let d = samples::ramified_depth_one();
        assert_eq!(d.k0(u128::MAX).unwrap(), K0::Exact(-1));
        assert_eq!(k0_oracle(&d), -1);
    }

    #[test]
    fn k0_equals_valuation_for_depth_three() {
        let d = samples::ramified_depth_three();
        assert_eq!(d.k0(u128::MAX).unwrap(), K0::Exact(-3));
    }

    #[test]
    fn k0_of_square_exceeds_valuation() {
        let d = samples::ramified_square();
        assert_eq!(d.k0(u128::MAX).unwrap(), K0::AtLeast(2));
        assert_eq!(k0_oracle(&d), 2);
    }

    #[test]
    fn k0_budget_reports_partial_bound() {
        let d = samples::ramified_depth_three();
        match d.k0(1000) {
            Err(Error::Budget {
                needed,
                lower_bound,
                ..
            }) => {
                assert_eq!(needed, 3u128.pow(10));
                assert!(lower_bound.is_some());
            }
            other => panic!("expected a budget error, got {other:?}"),
        }
    }

    fn random_integral(n: usize) -> impl Strategy<Value = Vec<i64>> {
        prop::collection::vec(-30i64..30, n * n)
            .prop_filter("nonzero", |v| v.iter().any(|&x| x % 3 != 0))
    }

    proptest! {
        #[test]
        fn valuation_is_supermultiplicative(
            x in random_integral(4),
            y in random_integral(4),
            sx in -2i64..2,
            sy in -2i64..2,
        ) {
            let c = ctx();
            let o = HereditaryOrder::new(4, 2).unwrap();
            let a = MatrixApprox::from_integers(c, 4, sx, &x).unwrap();
            let b = MatrixApprox::from_integers(c, 4, sy, &y).unwrap();
            if let Ok(prod) = a.mul(&b) {
                if let Ok(v) = o.valuation(&prod) {
                    prop_assert!(v >= o.valuation(&a).unwrap() + o.valuation(&b).unwrap());
                }
            }
        }

        #[test]
        fn valuation_is_additive_along_the_field(
            x in random_integral(2),
            k in -3i64..4,
            u in 0i64..9,
        ) {
            let d = samples::ramified_depth_one();
            let c = d.ctx();
            let o = d.order();
            let x = MatrixApprox::from_integers(c, 2, 0, &x).unwrap();
            // l = Pi^k (1 + u Pi), a general element of L* up to units of Z_3
            let pi = d.integral_generator();
            let base = if k >= 0 { pi.pow(k as u32).unwrap() } else { pi.mat_inv().unwrap().pow((-k) as u32).unwrap() };
            let unit = MatrixApprox::identity(c, 2).add(&pi.mul(&MatrixApprox::from_integers(c, 2, 0, &[u, 0, 0, u]).unwrap_or(MatrixApprox::zero(c, 2))).unwrap()).unwrap();
            let l = base.mul(&unit).unwrap();
            let lx = l.mul(&x).unwrap();
            prop_assert_eq!(o.valuation(&lx).unwrap(), k + o.valuation(&x).unwrap());
        }
    }
}
