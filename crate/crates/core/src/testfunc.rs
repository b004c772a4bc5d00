//! The test function `omega` (`Theta` on `K_pi`, zero elsewhere), its volume,
//! the convolution identity `omega * omega^* = d_pi omega`, concentration
//! near `U_L(1)`, and depth/conductor bookkeeping.
//!
//! Haar measure gives the standard maximal compact `K = GL_n(Z_p)` volume 1,
//! so every volume is an exact index computed modulo `p^N`.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cyclo::{CycloSum, Phase};
use crate::error::{Error, Result};
use crate::groups::SupportGroup;
use crate::orders::{floor_div, InductionDatum};
use crate::padic::{gl_order, Elem, ResidueMatrices};

/// `omega = Theta` on `K_pi`, zero elsewhere.
#[derive(Clone, Debug)]
pub struct TestFunction {
    support: SupportGroup,
}

impl TestFunction {
    pub fn new(support: SupportGroup) -> Self {
        TestFunction { support }
    }

    pub fn support(&self) -> &SupportGroup {
        &self.support
    }

    pub fn arena(&self) -> &ResidueMatrices {
        self.support.arena()
    }

    /// `None` means `omega(g) = 0`.
    pub fn value(&self, g: &[u32]) -> Option<Phase> {
        self.support.character.value(g)
    }

    /// `omega^*(g) = conj(omega(g^-1))`.
    pub fn adjoint_value(&self, g: &[u32]) -> Option<Phase> {
        let p = self.arena().p();
        let g_inv = self.arena().inv(g)?;
        self.value(&g_inv).map(|t| t.neg(p))
    }
}

/// `omega` from a support group.
pub fn make_omega(support: SupportGroup) -> TestFunction {
    TestFunction::new(support)
}

/// The exact volume of `K_pi` against the predicted exponent `c (n^2 - n) / 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VolumeReport {
    pub d_pi: BigRational,
    /// `[K : K_pi] = 1 / d_pi`.
    pub index: BigInt,
    pub predicted_exponent: Ratio<i64>,
    /// `floor(log_p [K : K_pi])`.
    pub log_floor: i64,
    /// Smallest integer `D >= 0` with `|log_p [K : K_pi] - predicted| <= D`.
    pub deviation_bound: i64,
    /// `deviation_bound <= n^2`.
    pub within_band: bool,
}

fn log_floor(x: &BigInt, p: u64) -> i64 {
    let p = BigInt::from(p);
    let mut k = 0;
    let mut acc = p.clone();
    while &acc <= x {
        acc *= &p;
        k += 1;
    }
    k
}

/// `p^a` for possibly negative `a`, as a rational.
fn p_pow(p: u64, a: i64) -> BigRational {
    let base = BigInt::from(p).pow(a.unsigned_abs() as u32);
    if a >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

pub fn volume(support: &SupportGroup) -> Result<VolumeReport> {
    let a = support.arena();
    let (n, p) = (a.n(), a.p());
    let total = BigInt::from(gl_order(n, p, a.level()));
    let size = BigInt::from(support.group.size());
    if size.is_zero() || !(&total % &size).is_zero() {
        return Err(Error::ConstructionFailure(
            "|K_pi| does not divide |GL_n(Z/p^N)|".into(),
        ));
    }
    let index = &total / &size;
    let predicted = support.depth * Ratio::new((n * n - n) as i64, 2);
    let (r, s) = (*predicted.numer(), *predicted.denom());
    // |log_p I - r/s| <= D  iff  p^(r - sD) <= I^s <= p^(r + sD)
    let lhs = BigRational::from_integer(index.pow(s as u32));
    let mut dev = 0i64;
    while !(p_pow(p, r - s * dev) <= lhs && lhs <= p_pow(p, r + s * dev)) {
        dev += 1;
    }
    Ok(VolumeReport {
        d_pi: BigRational::new(size, total),
        log_floor: log_floor(&index, p),
        index,
        predicted_exponent: predicted,
        deviation_bound: dev,
        within_band: dev <= (n * n) as i64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvolutionMode {
    /// Every point of `GL_n(Z/p^N)`.
    Full,
    /// Seeded random points, sampled support points and their neighbours.
    Sampled,
}

#[derive(Clone, Copy, Debug)]
pub struct ConvolutionOptions {
    /// Use full mode when `|GL_n(Z/p^N)|` is at most this.
    pub full_limit: u128,
    pub random_points: u64,
    pub support_points: u64,
    pub seed: u64,
    pub budget: u128,
}

impl Default for ConvolutionOptions {
    fn default() -> Self {
        ConvolutionOptions {
            full_limit: 1_000_000,
            random_points: 10_000,
            support_points: 200,
            seed: 0x0c0,
            budget: 1 << 26,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvolutionReport {
    pub mode: ConvolutionMode,
    pub points: u64,
    pub support_points: u64,
    pub outside_points: u64,
    /// `sum_x |omega(x)|^2 / |K| = d_pi`, evaluated exactly.
    pub identity_value: BigRational,
    /// A point where `omega * omega^*` and `d_pi omega` differ.
    pub mismatch: Option<Elem>,
}

impl ConvolutionReport {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

fn expected_sum(omega: &TestFunction, g: &[u32], order: u64) -> Result<CycloSum> {
    let p = omega.arena().p();
    let mut s = CycloSum::zero(p, order);
    if let Some(t) = omega.value(g) {
        s.add_phase(t, omega.support.group.size() as i128)?;
    }
    Ok(s)
}

fn root_order(omega: &TestFunction) -> u64 {
    omega.support.character.max_denominator()
}

/// `sum_{x in K_pi} omega(x) conj(omega(g^-1 x))`, which is
/// `|K| (omega * omega^*)(g)`, through a factorisation over groups of columns:
/// every cell of `K_pi` lies in one group, so both the membership of `g^-1 x`
/// and its phase split into independent factors.
pub struct ColumnGather {
    arena: ResidueMatrices,
    order: u64,
    /// Per column group: partial matrices (zero outside the group) and phases.
    factors: Vec<(Vec<usize>, Vec<usize>, Vec<(Elem, u64)>)>,
}

impl ColumnGather {
    pub fn new(omega: &TestFunction, budget: u128) -> Result<Self> {
        let group = &omega.support.group;
        let arena = *group.arena();
        let n = arena.n();
        let order = root_order(omega);
        // union columns that share a cell
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            parent[x] = r;
            r
        }
        for c in 0..group.cell_count() {
            let cols: Vec<usize> = group.cell_positions(c).iter().map(|&pos| pos % n).collect();
            for w in cols.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_of = HashMap::new();
        for col in 0..n {
            let r = find(&mut parent, col);
            let k = *root_of.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[k].push(col);
        }
        let mut factors = Vec::new();
        for cols in groups {
            let cells: Vec<usize> = (0..group.cell_count())
                .filter(|&c| cols.contains(&(group.cell_positions(c)[0] % n)))
                .collect();
            let size: u128 = cells
                .iter()
                .map(|&c| group.cell_tuples(c).len() as u128)
                .product();
            if size > budget {
                return Err(Error::budget("a column factor of K_pi", size, budget));
            }
            let mut elems = Vec::with_capacity(size as usize);
            for mut idx in 0..size as u64 {
                let mut x = vec![0u32; n * n];
                let mut phase = Phase::ZERO;
                for &c in cells.iter().rev() {
                    let tuples = group.cell_tuples(c);
                    let k = (idx % tuples.len() as u64) as usize;
                    idx /= tuples.len() as u64;
                    for (&pos, &v) in group.cell_positions(c).iter().zip(&tuples[k]) {
                        x[pos] = v;
                    }
                    phase = phase.add(omega.support.character.table(c)[k], arena.p());
                }
                elems.push((x, phase.exponent_at(order)?));
            }
            factors.push((cols, cells, elems));
        }
        Ok(ColumnGather {
            arena,
            order,
            factors,
        })
    }

    pub fn sum(&self, omega: &TestFunction, g: &[u32]) -> Result<CycloSum> {
        let a = &self.arena;
        let (n, q, p) = (a.n(), a.modulus() as u64, a.p());
        let g_inv = a.inv(g).ok_or(Error::Singular)?;
        let group = &omega.support.group;
        let mut total = CycloSum::from_int(p, self.order, 1);
        let mut y = vec![0u32; n * n];
        for (cols, cells, elems) in &self.factors {
            let mut coeffs = vec![0i128; self.order as usize];
            for (x, ex) in elems {
                for r in 0..n {
                    for &c in cols {
                        let mut acc = 0u64;
                        for k in 0..n {
                            acc += g_inv[r * n + k] as u64 * x[k * n + c] as u64;
                        }
                        y[r * n + c] = (acc % q) as u32;
                    }
                }
                let mut ey = 0u64;
                let mut inside = true;
                for &c in cells {
                    match group.cell_index(c, &y) {
                        Some(k) => {
                            let t = omega.support.character.table(c)[k as usize];
                            ey += t.exponent_at(self.order)?;
                        }
                        None => {
                            inside = false;
                            break;
                        }
                    }
                }
                if inside {
                    let k = (ex + self.order * 4 - ey % self.order) % self.order;
                    coeffs[k as usize] += 1;
                }
            }
            total = total.mul(&CycloSum::from_coeffs(p, coeffs))?;
        }
        Ok(total)
    }
}

fn scatter_sums(
    omega: &TestFunction,
    budget: u128,
) -> Result<(Vec<i64>, HashMap<Elem, Vec<i64>>, u64)> {
    let group = omega.support.group.as_single_cell(budget)?;
    let arena = *group.arena();
    let order = root_order(omega);
    let elems = group.elements(budget)?;
    let exps: Vec<u64> = elems
        .iter()
        .map(|x| omega.value(x).expect("member").exponent_at(order))
        .collect::<Result<_>>()?;
    let invs: Vec<Elem> = elems
        .iter()
        .map(|x| arena.inv(x).ok_or(Error::Singular))
        .collect::<Result<_>>()?;
    let o = order as usize;
    let mut inside = vec![0i64; elems.len() * o];
    let mut outside: HashMap<Elem, Vec<i64>> = HashMap::new();
    let mut buf = vec![0u32; arena.n() * arena.n()];
    // g = x y^-1 receives omega(x) conj(omega(y)); here y = g^-1 x
    for (x, &ex) in elems.iter().zip(&exps) {
        for (yi, &ey) in invs.iter().zip(&exps) {
            arena.mul_into(x, yi, &mut buf);
            let k = ((ex + order - ey) % order) as usize;
            match group.index_of(&buf) {
                Some(g) => inside[g as usize * o + k] += 1,
                None => outside.entry(buf.clone()).or_insert_with(|| vec![0; o])[k] += 1,
            }
        }
    }
    Ok((inside, outside, order))
}

/// Checks `omega * omega^* = d_pi omega` exactly.
pub fn convolve_check(omega: &TestFunction, opts: ConvolutionOptions) -> Result<ConvolutionReport> {
    let arena = *omega.arena();
    let p = arena.p();
    let k_order = arena.gl_order();
    let size = omega.support.group.size();
    let identity_value = BigRational::new(BigInt::from(size), BigInt::from(k_order));
    let (mut support_points, mut outside_points, mut points) = (0u64, 0u64, 0u64);

    if k_order <= opts.full_limit {
        let (inside, outside, order) = scatter_sums(omega, opts.budget)?;
        let group = omega.support.group.as_single_cell(opts.budget)?;
        let o = order as usize;
        let mut id_sum = 0i128;
        for g in arena.enumerate_gl() {
            points += 1;
            let coeffs: Vec<i128> = match group.index_of(&g) {
                Some(i) => {
                    support_points += 1;
                    inside[i as usize * o..(i as usize + 1) * o]
                        .iter()
                        .map(|&c| c as i128)
                        .collect()
                }
                None => {
                    outside_points += 1;
                    outside
                        .get(&g)
                        .map_or(vec![0; o], |v| v.iter().map(|&c| c as i128).collect())
                }
            };
            let got = CycloSum::from_coeffs(p, coeffs);
            if g == arena.identity() {
                id_sum = got.as_integer().unwrap_or(-1);
            }
            if !got.equals(&expected_sum(omega, &g, order)?) {
                return Ok(ConvolutionReport {
                    mode: ConvolutionMode::Full,
                    points,
                    support_points,
                    outside_points,
                    identity_value,
                    mismatch: Some(g),
                });
            }
        }
        let identity_value = BigRational::new(BigInt::from(id_sum), BigInt::from(k_order));
        return Ok(ConvolutionReport {
            mode: ConvolutionMode::Full,
            points,
            support_points,
            outside_points,
            identity_value,
            mismatch: None,
        });
    }

    let gather = ColumnGather::new(omega, opts.budget)?;
    let order = gather.order;
    let n = arena.n();
    let q = arena.modulus();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let group = &omega.support.group;
    let mut probes: Vec<Elem> = vec![arena.identity()];
    while (probes.len() as u64) < 1 + opts.random_points {
        let g: Elem = (0..n * n).map(|_| rng.gen_range(0..q)).collect();
        if arena.is_invertible(&g) {
            probes.push(g);
        }
    }
    // support points and their neighbours k (1 + p^(t-1) E_rs) just outside a cell
    let mut steps = vec![0u32; n * n];
    for c in 0..group.cell_count() {
        if let [pos] = group.cell_positions(c) {
            let vals = group.cell_tuples(c);
            steps[*pos] = vals.get(1).map_or(0, |v| v[0]);
        }
    }
    for _ in 0..opts.support_points {
        let k = group.element(rng.gen_range(0..size as u64));
        for (pos, &step) in steps.iter().enumerate() {
            if step > 1 {
                let mut e = arena.identity();
                e[pos] = (e[pos] + step / p as u32) % q;
                probes.push(arena.mul(&k, &e));
            }
        }
        probes.push(k);
    }
    let mut identity_value = None;
    for g in probes {
        points += 1;
        if group.contains(&g) {
            support_points += 1;
        } else {
            outside_points += 1;
        }
        let got = gather.sum(omega, &g)?;
        if g == arena.identity() {
            identity_value = got.as_integer();
        }
        if !got.equals(&expected_sum(omega, &g, order)?) {
            return Ok(ConvolutionReport {
                mode: ConvolutionMode::Sampled,
                points,
                support_points,
                outside_points,
                identity_value: BigRational::new(
                    BigInt::from(identity_value.unwrap_or(-1)),
                    BigInt::from(k_order),
                ),
                mismatch: Some(g),
            });
        }
    }
    Ok(ConvolutionReport {
        mode: ConvolutionMode::Sampled,
        points,
        support_points,
        outside_points,
        identity_value: BigRational::new(
            BigInt::from(identity_value.unwrap_or(-1)),
            BigInt::from(k_order),
        ),
        mismatch: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcentrationReport {
    pub exponent: i64,
    /// Support elements covered, counted through the cell factorisation.
    pub checked: u128,
    /// A cell tuple with no matching `U_L(1)` residue.
    pub failure: Option<Vec<u32>>,
}

impl ConcentrationReport {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

/// For every `x` in `K_pi` finds `l` in `U_L(1)` with `x l^-1 = 1 mod p^exponent`.
/// Each diagonal block of `x` is matched against its own `U_L(1)` and every
/// other entry must vanish, which covers all of `K_pi` cell by cell.
pub fn concentration_check(
    omega: &TestFunction,
    exponent: i64,
    budget: u128,
) -> Result<ConcentrationReport> {
    let s = &omega.support;
    let group = &s.group;
    let checked = group.size();
    if exponent <= 0 {
        return Ok(ConcentrationReport {
            exponent,
            checked,
            failure: None,
        });
    }
    let arena = *group.arena();
    let level = exponent.min(arena.level() as i64) as u32;
    let n = arena.n();
    let m = arena.p().pow(level) as u32;
    for c in 0..group.cell_count() {
        let positions = group.cell_positions(c);
        let block = s.blocks.iter().find(|b| {
            let k = b.size();
            positions.len() == k * k && positions[0] == b.offset * n + b.offset
        });
        match block {
            Some(b) => {
                let inner = b.family.arena();
                let targets: HashSet<Elem> = b
                    .family
                    .units_l1()
                    .elements(budget)?
                    .iter()
                    .map(|l| inner.reduce(l, level))
                    .collect();
                for t in group.cell_tuples(c) {
                    let r: Elem = t.iter().map(|&v| v % m).collect();
                    if !targets.contains(&r) {
                        return Ok(ConcentrationReport {
                            exponent,
                            checked,
                            failure: Some(t.clone()),
                        });
                    }
                }
            }
            None => {
                for t in group.cell_tuples(c) {
                    if t.iter().any(|&v| v % m != 0) {
                        return Ok(ConcentrationReport {
                            exponent,
                            checked,
                            failure: Some(t.clone()),
                        });
                    }
                }
            }
        }
    }
    Ok(ConcentrationReport {
        exponent,
        checked,
        failure: None,
    })
}

/// Depth and conductor data of one datum or a list of blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthReport {
    /// The largest block depth `j_i`.
    pub depth: i64,
    pub block_depths: Vec<i64>,
    pub block_normalised: Vec<Ratio<i64>>,
    /// `j/e` for one datum, `ceil(max j_i/e_i)` for several.
    pub normalised_depth: Ratio<i64>,
    /// `min_i floor(floor((j_i + 1)/2) / e_i)`.
    pub concentration_exponent: i64,
    /// `n c`.
    pub conductor_exponent: Ratio<i64>,
    /// `sum_i n_i c_i`.
    pub block_conductor_sum: Ratio<i64>,
    pub d_pi: Option<BigRational>,
}

pub fn depth_report(data: &[InductionDatum], d_pi: Option<BigRational>) -> Result<DepthReport> {
    if data.is_empty() {
        return Err(Error::DatumInvalid("at least one datum is needed".into()));
    }
    let block_depths: Vec<i64> = data.iter().map(|d| d.depth()).collect();
    let block_normalised: Vec<Ratio<i64>> = data.iter().map(|d| d.normalised_depth()).collect();
    let max_c = *block_normalised.iter().max().expect("nonempty");
    let c = if data.len() == 1 { max_c } else { max_c.ceil() };
    let n: i64 = data.iter().map(|d| d.n() as i64).sum();
    let frak_c = data
        .iter()
        .map(|d| floor_div((d.depth() + 1) / 2, d.period() as i64))
        .min()
        .expect("nonempty");
    Ok(DepthReport {
        depth: *block_depths.iter().max().expect("nonempty"),
        block_conductor_sum: data
            .iter()
            .map(|d| d.normalised_depth() * d.n() as i64)
            .sum(),
        block_depths,
        block_normalised,
        normalised_depth: c,
        concentration_exponent: frak_c,
        conductor_exponent: c * n,
        d_pi,
    })
}

/// `|frak_c - c/2| <= 1`.
pub fn concentration_near_half_depth(r: &DepthReport) -> bool {
    let gap = Ratio::from_integer(r.concentration_exponent) - r.normalised_depth / 2;
    gap <= Ratio::one() && -gap <= Ratio::one()
}

/// `d_pi` as a float, for display only.
pub fn approx(x: &BigRational) -> f64 {
    x.numer().to_f64().unwrap_or(f64::NAN) / x.denom().to_f64().unwrap_or(f64::NAN)
}
