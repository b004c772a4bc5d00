//! Integer matrices of fixed determinant near a torus, and the exponent
//! bookkeeping of the amplified bound.
//!
//! The archimedean condition is replaced by an entry bound `|g_ij| <= B`.
//! Candidates are built row by row; a partial matrix is abandoned once its
//! Gram determinant shows that no completion within the bound reaches the
//! determinant, or once its rows match no torus residue.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::One;

use crate::error::{Error, Result};
use crate::padic::{Elem, ResidueMatrices};

/// Residues modulo `p^c` a matched matrix must reduce to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TorusSpec {
    /// The subgroup generated by these residue matrices.
    Generated(Vec<Elem>),
    /// Invertible diagonal matrices.
    Diagonal,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeQuery {
    pub n: usize,
    pub det: i64,
    pub bound: i64,
    pub p: u64,
    /// The congruence exponent `c`; 0 imposes nothing.
    pub congruence: u32,
    pub torus: TorusSpec,
}

impl LatticeQuery {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be positive".into()));
        }
        if self.det <= 0 {
            return Err(Error::InvalidInput(
                "the determinant m must be positive".into(),
            ));
        }
        if self.bound < 0 {
            return Err(Error::InvalidInput(
                "the entry bound must be nonnegative".into(),
            ));
        }
        if !crate::padic::is_prime(self.p) {
            return Err(Error::InvalidInput(format!(
                "p = {} is not a prime",
                self.p
            )));
        }
        if self.det as u64 % self.p == 0 {
            return Err(Error::InvalidInput(format!(
                "m = {} is not prime to p = {}",
                self.det, self.p
            )));
        }
        if let TorusSpec::Generated(gens) = &self.torus {
            if self.congruence > 0 {
                let arena = ResidueMatrices::new(self.n, self.p, self.congruence)?;
                for g in gens {
                    if g.len() != self.n * self.n || g.iter().any(|&v| v >= arena.modulus()) {
                        return Err(Error::InvalidInput(
                            "torus generator is not a residue matrix mod p^c".into(),
                        ));
                    }
                    if !arena.is_invertible(g) {
                        return Err(Error::InvalidInput(
                            "torus generators must be invertible mod p^c".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Closure of the generators under products modulo `p^c`.
pub fn torus_elements(arena: &ResidueMatrices, gens: &[Elem], budget: u128) -> Result<Vec<Elem>> {
    let mut seen: HashSet<Elem> = HashSet::new();
    let id = arena.identity();
    seen.insert(id.clone());
    let mut frontier = vec![id];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y = arena.mul(&x, g);
            if !seen.contains(&y) {
                if seen.len() as u128 >= budget {
                    return Err(Error::budget(
                        "closing the torus",
                        seen.len() as u128 + 1,
                        budget,
                    ));
                }
                seen.insert(y.clone());
                frontier.push(y);
            }
        }
    }
    let mut out: Vec<Elem> = seen.into_iter().collect();
    out.sort();
    Ok(out)
}

/// The matched matrices and what was measured about them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountReport {
    pub query: LatticeQuery,
    /// Row-major, in lexicographic order.
    pub matrices: Vec<Vec<i64>>,
    /// Partial matrices visited by the search.
    pub nodes: u64,
    /// Number of distinct lattices `g Z^n` (each `tau` value is a union of these).
    pub lattice_classes: usize,
    /// Largest number of matches sharing one lattice.
    pub max_fiber: usize,
    /// `prod_j P(a_j, n)` over `m = prod_j l_j^a_j`.
    pub partition_bound: u128,
}

impl CountReport {
    pub fn count(&self) -> usize {
        self.matrices.len()
    }

    /// `|S| <= max_fiber * prod P(a_j, n)`.
    pub fn within_partition_bound(&self) -> bool {
        (self.count() as u128) <= self.max_fiber as u128 * self.partition_bound
    }
}

fn gram_det(rows: &[Vec<i64>]) -> i128 {
    let r = rows.len();
    let g: Vec<i128> = (0..r * r)
        .map(|k| {
            rows[k / r]
                .iter()
                .zip(&rows[k % r])
                .map(|(&a, &b)| a as i128 * b as i128)
                .sum()
        })
        .collect();
    bareiss(g, r)
}

/// Exact determinant by fraction-free elimination.
pub fn bareiss(mut a: Vec<i128>, n: usize) -> i128 {
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k * n + k] == 0 {
            let Some(sw) = (k + 1..n).find(|&r| a[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                a.swap(k * n + c, sw * n + c);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = a[k * n + k];
    }
    sign * a[n * n - 1]
}

/// Cofactors along the last row, given the first `n - 1` rows.
fn last_row_cofactors(rows: &[Vec<i64>], n: usize) -> Vec<i128> {
    (0..n)
        .map(|col| {
            let minor: Vec<i128> = rows
                .iter()
                .flat_map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(c, _)| c != col)
                        .map(|(_, &v)| v as i128)
                })
                .collect();
            let sign = if (n - 1 + col) % 2 == 0 { 1 } else { -1 };
            sign * bareiss(minor, n - 1)
        })
        .collect()
}

enum TorusFilter {
    Free,
    /// Off-diagonal entries vanish mod `p^c`, diagonal entries are units.
    Diagonal {
        p: i64,
        modulus: i64,
    },
    /// Allowed residues of the first `r` rows (in fill order), per `r`.
    Prefixes {
        modulus: i64,
        sets: Vec<HashSet<Vec<i64>>>,
    },
}

impl TorusFilter {
    fn admits(&self, order: &[usize], rows: &[Vec<i64>]) -> bool {
        match self {
            TorusFilter::Free => true,
            TorusFilter::Diagonal { p, modulus } => {
                let r = rows.len() - 1;
                rows[r].iter().enumerate().all(|(c, &v)| {
                    if c == order[r] {
                        v.rem_euclid(*p) != 0
                    } else {
                        v.rem_euclid(*modulus) == 0
                    }
                })
            }
            TorusFilter::Prefixes { modulus, sets } => {
                let key: Vec<i64> = rows
                    .iter()
                    .flatten()
                    .map(|v| v.rem_euclid(*modulus))
                    .collect();
                sets[rows.len()].contains(&key)
            }
        }
    }
}

fn torus_filter(q: &LatticeQuery, order: &[usize], budget: u128) -> Result<TorusFilter> {
    if q.congruence == 0 {
        return Ok(TorusFilter::Free);
    }
    let modulus = q.p.pow(q.congruence) as i64;
    match &q.torus {
        TorusSpec::Diagonal => Ok(TorusFilter::Diagonal {
            p: q.p as i64,
            modulus,
        }),
        TorusSpec::Generated(gens) => {
            let arena = ResidueMatrices::new(q.n, q.p, q.congruence)?;
            let elems = torus_elements(&arena, gens, budget)?;
            let n = q.n;
            let mut sets = vec![HashSet::new(); n + 1];
            for t in &elems {
                let mut key = Vec::new();
                sets[0].insert(key.clone());
                for (r, &row) in order.iter().enumerate() {
                    key.extend(t[row * n..(row + 1) * n].iter().map(|&v| v as i64));
                    sets[r + 1].insert(key.clone());
                }
            }
            Ok(TorusFilter::Prefixes { modulus, sets })
        }
    }
}

/// Enumerates `S(m, T, c)` filling rows in the natural order.
pub fn enumerate_s(q: &LatticeQuery, budget: u128) -> Result<CountReport> {
    let order: Vec<usize> = (0..q.n).collect();
    enumerate_s_in_order(q, &order, budget)
}

/// As [`enumerate_s`], filling the rows in the given order.
pub fn enumerate_s_in_order(
    q: &LatticeQuery,
    order: &[usize],
    budget: u128,
) -> Result<CountReport> {
    q.validate()?;
    let n = q.n;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidInput(
            "row order must be a permutation".into(),
        ));
    }
    let filter = torus_filter(q, order, budget)?;
    let b = q.bound;
    let width = (2 * b + 1) as u128;
    let per_row = width.checked_pow(n as u32).unwrap_or(u128::MAX);
    if per_row > budget {
        return Err(Error::budget("candidate rows", per_row, budget));
    }
    let rows: Vec<Vec<i64>> = (0..per_row as u64)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let v = (idx % width as u64) as i64 - b;
                    idx /= width as u64;
                    v
                })
                .collect()
        })
        .collect();
    let m = q.det as i128;
    let row_cap = n as i128 * (b as i128) * (b as i128);

    let mut state = Search {
        q,
        order,
        filter: &filter,
        rows: &rows,
        m,
        row_cap,
        budget,
        nodes: 0,
        found: Vec::new(),
    };
    let mut partial = Vec::new();
    state.descend(&mut partial)?;
    let nodes = state.nodes;
    let mut found = state.found;
    found.sort();

    let mut classes: HashMap<Vec<i128>, usize> = HashMap::new();
    for g in &found {
        *classes.entry(column_lattice_key(g, n)).or_default() += 1;
    }
    Ok(CountReport {
        query: q.clone(),
        nodes,
        lattice_classes: classes.len(),
        max_fiber: classes.values().copied().max().unwrap_or(0),
        partition_bound: tau_bound(&factorize(q.det as u64), n),
        matrices: found,
    })
}

struct Search<'a> {
    q: &'a LatticeQuery,
    order: &'a [usize],
    filter: &'a TorusFilter,
    rows: &'a [Vec<i64>],
    m: i128,
    row_cap: i128,
    budget: u128,
    nodes: u64,
    found: Vec<Vec<i64>>,
}

impl Search<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes as u128 > self.budget {
            return Err(Error::budget(
                "lattice search nodes",
                self.nodes as u128,
                self.budget,
            ));
        }
        Ok(())
    }

    fn descend(&mut self, partial: &mut Vec<Vec<i64>>) -> Result<()> {
        let n = self.q.n;
        let r = partial.len();
        if r + 1 == n {
            return self.finish(partial);
        }
        for row in self.rows {
            self.tick()?;
            partial.push(row.clone());
            let ok = self.filter.admits(self.order, partial) && {
                // Hadamard: |det| <= sqrt(Gram) * sqrt(n B^2)^(n - r - 1)
                let g = gram_det(partial);
                g > 0 && g * self.row_cap.pow((n - r - 1) as u32) >= self.m * self.m
            };
            if ok {
                self.descend(partial)?;
            }
            partial.pop();
        }
        Ok(())
    }

    fn finish(&mut self, partial: &mut Vec<Vec<i64>>) -> Result<()> {
        let n = self.q.n;
        // det is linear in the last row; order the partial rows back into place
        let last = self.order[n - 1];
        let mut placed: Vec<Vec<i64>> = vec![Vec::new(); n];
        for (k, row) in partial.iter().enumerate() {
            placed[self.order[k]] = row.clone();
        }
        let fixed: Vec<Vec<i64>> = (0..n)
            .filter(|&i| i != last)
            .map(|i| placed[i].clone())
            .collect();
        let mut cof = last_row_cofactors(&fixed, n);
        // moving the last row from position n-1 to `last` permutes rows cyclically
        if (n - 1 - last) % 2 == 1 {
            for c in cof.iter_mut() {
                *c = -*c;
            }
        }
        for row in self.rows {
            self.tick()?;
            let det: i128 = row.iter().zip(&cof).map(|(&x, &c)| x as i128 * c).sum();
            if det != self.m {
                continue;
            }
            partial.push(row.clone());
            if self.filter.admits(self.order, partial) {
                placed[last] = row.clone();
                self.found.push(placed.concat());
            }
            partial.pop();
        }
        Ok(())
    }
}

/// Hermite normal form of the column span, as a canonical key.
pub fn column_lattice_key(g: &[i64], n: usize) -> Vec<i128> {
    // rows of the transpose span the same lattice as the columns of g
    let mut a: Vec<Vec<i128>> = (0..n)
        .map(|c| (0..n).map(|r| g[r * n + c] as i128).collect())
        .collect();
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == a.len() {
            break;
        }
        loop {
            let nz: Vec<usize> = (pivot_row..a.len()).filter(|&r| a[r][col] != 0).collect();
            if nz.is_empty() {
                break;
            }
            let best = *nz
                .iter()
                .min_by_key(|&&r| a[r][col].abs())
                .expect("nonempty");
            a.swap(pivot_row, best);
            let mut done = true;
            for r in pivot_row + 1..a.len() {
                if a[r][col] != 0 {
                    let f = Integer::div_floor(&a[r][col], &a[pivot_row][col]);
                    for k in 0..n {
                        a[r][k] -= f * a[pivot_row][k];
                    }
                    if a[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a[pivot_row][col] == 0 {
            continue;
        }
        if a[pivot_row][col] < 0 {
            for k in 0..n {
                a[pivot_row][k] = -a[pivot_row][k];
            }
        }
        for r in 0..pivot_row {
            let f = Integer::div_floor(&a[r][col], &a[pivot_row][col]);
            for k in 0..n {
                a[r][k] -= f * a[pivot_row][k];
            }
        }
        pivot_row += 1;
    }
    a.concat()
}

/// Outcome of the pairwise commutator test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianVerdict {
    pub abelian: bool,
    pub witness: Option<(Vec<i64>, Vec<i64>)>,
    pub pairs: u64,
    /// Whether `p^c > n^3 ((n-1)!)^2 B^(2n) + m^2`, which forces commutativity:
    /// `m^2 (g1^-1 g2^-1 g1 g2 - 1)` is an integer matrix divisible by `p^c`
    /// with entries below that bound.
    pub regime: bool,
    pub regime_threshold: BigInt,
}

/// `n^3 ((n-1)!)^2 B^(2n) + m^2`.
pub fn regime_threshold(n: usize, m: i64, bound: i64) -> BigInt {
    let fact: BigInt = (1..n as u64).map(BigInt::from).product();
    BigInt::from(n).pow(3) * &fact * &fact * BigInt::from(bound).pow(2 * n as u32)
        + BigInt::from(m) * m
}

fn int_mul(a: &[i64], b: &[i64], n: usize) -> Vec<i128> {
    (0..n * n)
        .map(|k| {
            (0..n)
                .map(|t| a[k / n * n + t] as i128 * b[t * n + k % n] as i128)
                .sum()
        })
        .collect()
}

pub fn abelian_check(report: &CountReport) -> AbelianVerdict {
    let q = &report.query;
    let n = q.n;
    let threshold = regime_threshold(n, q.det, q.bound);
    let regime = BigInt::from(q.p).pow(q.congruence) > threshold;
    let mut pairs = 0;
    for (i, a) in report.matrices.iter().enumerate() {
        for b in &report.matrices[i + 1..] {
            pairs += 1;
            if int_mul(a, b, n) != int_mul(b, a, n) {
                return AbelianVerdict {
                    abelian: false,
                    witness: Some((a.clone(), b.clone())),
                    pairs,
                    regime,
                    regime_threshold: threshold,
                };
            }
        }
    }
    AbelianVerdict {
        abelian: true,
        witness: None,
        pairs,
        regime,
        regime_threshold: threshold,
    }
}

/// Ordered ways to write `a` as a sum of `n` nonnegative integers:
/// `binomial(n + a - 1, n - 1)`.
pub fn partition_count(a: u64, n: u64) -> u128 {
    if n == 0 {
        return u128::from(a == 0);
    }
    let (top, k) = ((n + a - 1) as u128, (n - 1) as u128);
    let k = k.min(top - k);
    (0..k).fold(1u128, |acc, i| acc * (top - i) / (i + 1))
}

/// `prod_j P(a_j, n)` for `m = prod_j l_j^a_j`.
pub fn tau_bound(factorization: &[(u64, u32)], n: usize) -> u128 {
    factorization
        .iter()
        .map(|&(_, a)| partition_count(a as u64, n as u64))
        .product()
}

/// Prime factorisation by trial division.
pub fn factorize(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= m {
        let mut a = 0;
        while m % d == 0 {
            m /= d;
            a += 1;
        }
        if a > 0 {
            out.push((d, a));
        }
        d += 1;
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

/// The exponent chain of the amplified bound, all in units of `log C(pi)`
/// with `C(pi) = p^(n c)` and the concentration exponent taken as `c/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentReport {
    pub n: i64,
    /// `L_0 = p^(k frak_c)` with `k = 1 / (2 n^2)`.
    pub amplifier_length_coefficient: Ratio<i64>,
    /// `log d_pi / log C = -(n-1)/2`.
    pub volume_exponent: Ratio<i64>,
    /// `log L_0 / log C = 1 / (4 n^3)`.
    pub amplifier_exponent: Ratio<i64>,
    /// `-(volume + amplifier) / 2`, from `d_pi |P|^2 |F|^2 << L_0` with `|P| ~ L_0`.
    pub assembled: Ratio<i64>,
    /// `(n-1)/4 - 1/(8 n^3)` as printed.
    pub closed_form: Ratio<i64>,
    /// `c (n^2 - n)/4 - frak_c/(4 n^2)` as printed, in units of `log C`.
    pub penultimate: Ratio<i64>,
    /// The value with the opposite sign on the amplifier term.
    pub flipped: Ratio<i64>,
}

impl ExponentReport {
    pub fn consistent(&self) -> bool {
        self.assembled == self.closed_form && self.penultimate == self.closed_form
    }
}

pub fn amplifier_exponent(n: i64) -> Result<ExponentReport> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("n >= 2 required, got {n}")));
    }
    let r = |a: i64, b: i64| Ratio::new(a, b);
    let n3 = n * n * n;
    let volume_exponent = r(-(n - 1), 2);
    // L_0 = p^(frak_c/(2n^2)) with frak_c = c/2, over log C = n c log p
    let amplifier_exponent = r(1, 2 * n * n) * r(1, 2) / n;
    let assembled = -(volume_exponent + amplifier_exponent) / 2;
    let closed_form = r(n - 1, 4) - r(1, 8 * n3);
    // c (n^2 - n)/4 - (c/2)/(4 n^2), divided by n c
    let penultimate = (r(n * n - n, 4) - r(1, 2) * r(1, 4 * n * n)) / n;
    Ok(ExponentReport {
        n,
        amplifier_length_coefficient: r(1, 2 * n * n),
        volume_exponent,
        amplifier_exponent,
        assembled,
        closed_form,
        penultimate,
        flipped: -(volume_exponent - amplifier_exponent) / 2,
    })
}

/// `binomial(top, k)` as a big integer, for cross-checks.
pub fn binomial(top: u64, k: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(top - i) / BigInt::from(i + 1);
    }
    acc
}
