//! Truncated p-adic arithmetic over `Q_p`.
//!
//! Scalars and matrices are stored as `p^scale * (digits mod p^prec)`, where
//! `prec` is the *relative* precision: the number of p-adic digits that are
//! known after the leading power of `p` has been pulled out. Every operation
//! that divides by a power of `p` (normalization, inversion) consumes relative
//! precision, and an operation that would leave nothing known fails with
//! [`Error::PrecisionLoss`] instead of silently producing zero.
//!
//! Exact zero is a separate state and is only ever produced on request.

use crate::error::{Error, Result};

/// The prime `p` and the working precision `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionCtx {
    p: u64,
    precision: u32,
}

impl PrecisionCtx {
    pub fn new(p: u64, precision: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("p = {p} is not a prime")));
        }
        if precision == 0 {
            return Err(Error::InvalidInput("precision must be at least 1".into()));
        }
        match p.checked_pow(precision) {
            Some(m) if m < (1u64 << 62) => Ok(PrecisionCtx { p, precision }),
            _ => Err(Error::InvalidInput(format!(
                "p^N = {p}^{precision} does not fit the 62-bit residue width"
            ))),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// `p^N`.
    pub fn modulus(&self) -> u64 {
        self.p.pow(self.precision)
    }

    pub fn pow(&self, k: u32) -> u64 {
        self.p.pow(k)
    }

    fn check(&self, other: &PrecisionCtx) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(mut x: i128, p: u64) -> u32 {
    debug_assert!(x != 0);
    let p = p as i128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Valuation of `x` as an element of `Z/p^k`, capped at `k` (so `0 -> k`).
pub fn valuation_capped(mut x: u64, p: u64, k: u32) -> u32 {
    if x == 0 {
        return k;
    }
    let mut v = 0;
    while v < k && x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

/// Inverse of a unit modulo `m` (extended Euclid). `None` when not a unit.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(m as i128) as u64)
}

fn reduce_i128(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Determinant of an `n x n` matrix over `Z/m`, `m = p^k`, by elimination in
/// the local ring: the pivot is always an entry of minimal valuation, so every
/// elimination factor is integral.
pub fn det_mod(entries: &[u64], n: usize, p: u64, k: u32) -> u64 {
    let m = p.pow(k);
    if m == 1 {
        return 0;
    }
    let mut a: Vec<u64> = entries.iter().map(|&x| x % m).collect();
    let mut det: u64 = 1;
    for col in 0..n {
        let mut best: Option<(usize, u32)> = None;
        for r in col..n {
            let x = a[r * n + col];
            if x != 0 {
                let v = valuation_capped(x, p, k);
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((r, v));
                }
            }
        }
        let Some((r, v)) = best else { return 0 };
        if r != col {
            for c in 0..n {
                a.swap(r * n + c, col * n + c);
            }
            det = (m - det) % m;
        }
        let piv = a[col * n + col];
        det = mulmod(det, piv, m);
        let pv = p.pow(v);
        let uinv = inv_mod(piv / pv, m).expect("pivot unit part is invertible");
        for r in col + 1..n {
            let x = a[r * n + col];
            if x == 0 {
                continue;
            }
            let factor = mulmod(x / pv, uinv, m);
            for c in col..n {
                let sub = mulmod(factor, a[col * n + c], m);
                a[r * n + c] = (a[r * n + c] + m - sub) % m;
            }
        }
    }
    det
}

/// Adjugate over `Z/p^k` from cofactor determinants.
pub fn adjugate_mod(entries: &[u64], n: usize, p: u64, k: u32) -> Vec<u64> {
    let m = p.pow(k);
    if n == 1 {
        return vec![1 % m];
    }
    let mut adj = vec![0u64; n * n];
    let mut minor = vec![0u64; (n - 1) * (n - 1)];
    for i in 0..n {
        for j in 0..n {
            // adj[i][j] = (-1)^(i+j) det(minor with row j and column i removed)
            let mut idx = 0;
            for r in (0..n).filter(|&r| r != j) {
                for c in (0..n).filter(|&c| c != i) {
                    minor[idx] = entries[r * n + c];
                    idx += 1;
                }
            }
            let d = det_mod(&minor, n - 1, p, k);
            adj[i * n + j] = if (i + j) % 2 == 0 { d } else { (m - d) % m };
        }
    }
    adj
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Zero,
    /// `p^val * unit`, unit a p-adic unit known modulo `p^prec` (`prec >= 1`).
    Known {
        val: i64,
        unit: u64,
        prec: u32,
    },
    /// Divisible by `p^val`; no further digits known.
    Vanishing {
        val: i64,
    },
}

/// A truncated element of `Q_p`: unit part mod `p^prec` and a valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScaledResidue {
    ctx: PrecisionCtx,
    repr: Repr,
}

impl ScaledResidue {
    pub fn zero(ctx: PrecisionCtx) -> Self {
        ScaledResidue {
            ctx,
            repr: Repr::Zero,
        }
    }

    /// An exact integer; `0` maps to the exact zero.
    pub fn from_int(ctx: PrecisionCtx, x: i128) -> Self {
        if x == 0 {
            return Self::zero(ctx);
        }
        Self::from_digits(ctx, 0, reduce_i128(x, ctx.modulus()), ctx.precision())
    }

    /// `p^scale * digits`, where `digits` is known modulo `p^prec`.
    pub(crate) fn from_digits(ctx: PrecisionCtx, scale: i64, digits: u64, prec: u32) -> Self {
        let p = ctx.p();
        if prec == 0 {
            return ScaledResidue {
                ctx,
                repr: Repr::Vanishing { val: scale },
            };
        }
        let d = digits % p.pow(prec);
        if d == 0 {
            return ScaledResidue {
                ctx,
                repr: Repr::Vanishing {
                    val: scale + prec as i64,
                },
            };
        }
        let v = valuation_capped(d, p, prec);
        ScaledResidue {
            ctx,
            repr: Repr::Known {
                val: scale + v as i64,
                unit: d / p.pow(v),
                prec: prec - v,
            },
        }
    }

    pub fn ctx(&self) -> PrecisionCtx {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    /// Exact valuation, when enough digits are known to decide it.
    pub fn valuation(&self) -> Option<i64> {
        match self.repr {
            Repr::Known { val, .. } => Some(val),
            _ => None,
        }
    }

    /// Lower bound on the valuation (`i64::MAX` for exact zero).
    pub fn valuation_lower_bound(&self) -> i64 {
        match self.repr {
            Repr::Zero => i64::MAX,
            Repr::Known { val, .. } => val,
            Repr::Vanishing { val } => val,
        }
    }

    pub fn unit(&self) -> Option<u64> {
        match self.repr {
            Repr::Known { unit, .. } => Some(unit),
            _ => None,
        }
    }

    /// Relative precision of the unit part (0 unless the value is `Known`).
    pub fn precision(&self) -> u32 {
        match self.repr {
            Repr::Known { prec, .. } => prec,
            _ => 0,
        }
    }

    /// True when the value is certainly in `p^k Z_p`.
    pub fn vanishes_mod(&self, k: i64) -> bool {
        self.valuation_lower_bound() >= k
    }

    /// Absolute precision: the value is known modulo `p^abs`.
    fn absolute(&self) -> (i64, u64, i64) {
        match self.repr {
            Repr::Zero => (i64::MAX / 4, 0, i64::MAX / 4),
            Repr::Known { val, unit, prec } => (val, unit, val + prec as i64),
            Repr::Vanishing { val } => (val, 0, val),
        }
    }

    pub fn mul(&self, other: &ScaledResidue) -> Result<ScaledResidue> {
        self.ctx.check(&other.ctx)?;
        let p = self.ctx.p();
        let repr = match (self.repr, other.repr) {
            (Repr::Zero, _) | (_, Repr::Zero) => Repr::Zero,
            (
                Repr::Known {
                    val: a,
                    unit: u,
                    prec: pa,
                },
                Repr::Known {
                    val: b,
                    unit: w,
                    prec: pb,
                },
            ) => {
                let prec = pa.min(pb);
                Repr::Known {
                    val: a + b,
                    unit: mulmod(u, w, p.pow(prec)),
                    prec,
                }
            }
            _ => Repr::Vanishing {
                val: self.valuation_lower_bound() + other.valuation_lower_bound(),
            },
        };
        Ok(ScaledResidue {
            ctx: self.ctx,
            repr,
        })
    }

    pub fn add(&self, other: &ScaledResidue) -> Result<ScaledResidue> {
        self.ctx.check(&other.ctx)?;
        if self.is_zero() {
            return Ok(*other);
        }
        if other.is_zero() {
            return Ok(*self);
        }
        let (v1, u1, a1) = self.absolute();
        let (v2, u2, a2) = other.absolute();
        let low = v1.min(v2);
        let abs = a1.min(a2);
        if abs <= low {
            return Ok(ScaledResidue {
                ctx: self.ctx,
                repr: Repr::Vanishing { val: abs },
            });
        }
        let prec = (abs - low) as u32;
        let p = self.ctx.p();
        let m = p.pow(prec);
        let shift = |v: i64, u: u64| mulmod(u % m, p.pow((v - low).min(prec as i64) as u32) % m, m);
        let digits = (shift(v1, u1) + shift(v2, u2)) % m;
        Ok(Self::from_digits(self.ctx, low, digits, prec))
    }

    pub fn neg(&self) -> ScaledResidue {
        match self.repr {
            Repr::Known { val, unit, prec } => {
                let m = self.ctx.p().pow(prec);
                ScaledResidue {
                    ctx: self.ctx,
                    repr: Repr::Known {
                        val,
                        unit: (m - unit) % m,
                        prec,
                    },
                }
            }
            _ => *self,
        }
    }
}

/// An element of `M_n(Q_p)` as `p^scale * E`, `E` an integral matrix known
/// modulo `p^prec`, normalized so that some entry of `E` is a unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MatrixApprox {
    ctx: PrecisionCtx,
    n: usize,
    scale: i64,
    prec: u32,
    entries: Vec<u64>,
    zero: bool,
}

impl MatrixApprox {
    /// Normalize a raw integer matrix `p^scale * raw` at the context precision.
    pub fn normalize(ctx: PrecisionCtx, n: usize, scale: i64, raw: &[i128]) -> Result<Self> {
        if raw.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                raw.len()
            )));
        }
        let m = ctx.modulus();
        let entries: Vec<u64> = raw.iter().map(|&x| reduce_i128(x, m)).collect();
        Self::renormalize(ctx, n, scale, ctx.precision(), entries)
    }

    pub fn from_integers(ctx: PrecisionCtx, n: usize, scale: i64, raw: &[i64]) -> Result<Self> {
        let raw: Vec<i128> = raw.iter().map(|&x| x as i128).collect();
        Self::normalize(ctx, n, scale, &raw)
    }

    fn renormalize(
        ctx: PrecisionCtx,
        n: usize,
        scale: i64,
        prec: u32,
        mut entries: Vec<u64>,
    ) -> Result<Self> {
        let p = ctx.p();
        let k = entries
            .iter()
            .map(|&x| valuation_capped(x, p, prec))
            .min()
            .unwrap_or(prec);
        if k >= prec {
            return Err(Error::PrecisionLoss(format!(
                "all entries vanish modulo p^{prec} (scale {scale}); value indistinguishable from zero"
            )));
        }
        if k > 0 {
            let d = p.pow(k);
            for x in entries.iter_mut() {
                *x /= d;
            }
        }
        let prec = prec - k;
        let m = p.pow(prec);
        for x in entries.iter_mut() {
            *x %= m;
        }
        Ok(MatrixApprox {
            ctx,
            n,
            scale: scale + k as i64,
            prec,
            entries,
            zero: false,
        })
    }

    pub fn zero(ctx: PrecisionCtx, n: usize) -> Self {
        MatrixApprox {
            ctx,
            n,
            scale: 0,
            prec: ctx.precision(),
            entries: vec![0; n * n],
            zero: true,
        }
    }

    pub fn identity(ctx: PrecisionCtx, n: usize) -> Self {
        let mut e = vec![0u64; n * n];
        for i in 0..n {
            e[i * n + i] = 1;
        }
        MatrixApprox {
            ctx,
            n,
            scale: 0,
            prec: ctx.precision(),
            entries: e,
            zero: false,
        }
    }

    /// `p^power * E_{row,col}`.
    pub fn elementary(ctx: PrecisionCtx, n: usize, row: usize, col: usize, power: i64) -> Self {
        let mut e = vec![0u64; n * n];
        e[row * n + col] = 1;
        MatrixApprox {
            ctx,
            n,
            scale: power,
            prec: ctx.precision(),
            entries: e,
            zero: false,
        }
    }

    /// Integral matrix from residues modulo `p^level` (`level <= N`).
    pub fn from_residues(ctx: PrecisionCtx, n: usize, residues: &[u32]) -> Result<Self> {
        let raw: Vec<i128> = residues.iter().map(|&x| x as i128).collect();
        Self::normalize(ctx, n, 0, &raw)
    }

    pub fn ctx(&self) -> PrecisionCtx {
        self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    /// Relative precision of the stored digits.
    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Normalized digit matrix, row-major, modulo `p^precision()`.
    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn entry(&self, row: usize, col: usize) -> ScaledResidue {
        if self.zero {
            return ScaledResidue::zero(self.ctx);
        }
        ScaledResidue::from_digits(
            self.ctx,
            self.scale,
            self.entries[row * self.n + col],
            self.prec,
        )
    }

    /// Digits as signed integers in `[0, p^prec)`; the value is `p^scale` times this.
    pub fn integer_digits(&self) -> Vec<i128> {
        self.entries.iter().map(|&x| x as i128).collect()
    }

    fn same_shape(&self, other: &MatrixApprox) -> Result<()> {
        self.ctx.check(&other.ctx)?;
        if self.n != other.n {
            return Err(Error::InvalidInput(format!(
                "dimension mismatch: {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }

    pub fn mul(&self, other: &MatrixApprox) -> Result<MatrixApprox> {
        self.same_shape(other)?;
        if self.zero || other.zero {
            return Ok(Self::zero(self.ctx, self.n));
        }
        let n = self.n;
        let prec = self.prec.min(other.prec);
        let m = self.ctx.pow(prec) as u128;
        let mut out = vec![0u64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: u128 = 0;
                for k in 0..n {
                    acc = (acc
                        + self.entries[i * n + k] as u128 * other.entries[k * n + j] as u128)
                        % m;
                }
                out[i * n + j] = acc as u64;
            }
        }
        Self::renormalize(self.ctx, n, self.scale + other.scale, prec, out)
    }

    pub fn add(&self, other: &MatrixApprox) -> Result<MatrixApprox> {
        self.same_shape(other)?;
        if self.zero {
            return Ok(other.clone());
        }
        if other.zero {
            return Ok(self.clone());
        }
        let low = self.scale.min(other.scale);
        let abs = (self.scale + self.prec as i64).min(other.scale + other.prec as i64);
        if abs <= low {
            return Err(Error::PrecisionLoss(
                "sum has no known digits above its leading power".into(),
            ));
        }
        let prec = (abs - low) as u32;
        let p = self.ctx.p();
        let m = p.pow(prec);
        let shifted = |x: &MatrixApprox, i: usize| {
            let sh = (x.scale - low).min(prec as i64) as u32;
            mulmod(x.entries[i] % m, p.pow(sh) % m, m)
        };
        let out: Vec<u64> = (0..self.n * self.n)
            .map(|i| (shifted(self, i) + shifted(other, i)) % m)
            .collect();
        Self::renormalize(self.ctx, self.n, low, prec, out)
    }

    pub fn neg(&self) -> MatrixApprox {
        let m = self.ctx.pow(self.prec);
        let mut out = self.clone();
        for x in out.entries.iter_mut() {
            *x = (m - *x) % m;
        }
        out
    }

    pub fn sub(&self, other: &MatrixApprox) -> Result<MatrixApprox> {
        self.add(&other.neg())
    }

    /// Multiply by `p^k`.
    pub fn shift(&self, k: i64) -> MatrixApprox {
        let mut out = self.clone();
        if !out.zero {
            out.scale += k;
        }
        out
    }

    pub fn pow(&self, e: u32) -> Result<MatrixApprox> {
        let mut acc = Self::identity(self.ctx, self.n);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn mat_inv(&self) -> Result<MatrixApprox> {
        if self.zero {
            return Err(Error::Singular);
        }
        let (n, p, prec) = (self.n, self.ctx.p(), self.prec);
        let det = det_mod(&self.entries, n, p, prec);
        if det == 0 {
            return Err(Error::PrecisionLoss(format!(
                "determinant vanishes modulo p^{prec}; cannot invert"
            )));
        }
        let v = valuation_capped(det, p, prec);
        let out_prec = prec - v;
        let m = p.pow(out_prec);
        let unit = det / p.pow(v);
        let uinv = inv_mod(unit % m, m).expect("unit part of determinant");
        let adj = adjugate_mod(&self.entries, n, p, prec);
        let out: Vec<u64> = adj.iter().map(|&a| mulmod(a % m, uinv, m)).collect();
        Self::renormalize(self.ctx, n, -self.scale - v as i64, out_prec, out)
    }

    pub fn trace_det(&self) -> (ScaledResidue, ScaledResidue) {
        if self.zero {
            return (ScaledResidue::zero(self.ctx), ScaledResidue::zero(self.ctx));
        }
        let (n, p, prec) = (self.n, self.ctx.p(), self.prec);
        let m = p.pow(prec);
        let tr = (0..n).fold(0u64, |acc, i| (acc + self.entries[i * n + i]) % m);
        let det = det_mod(&self.entries, n, p, prec);
        (
            ScaledResidue::from_digits(self.ctx, self.scale, tr, prec),
            ScaledResidue::from_digits(self.ctx, self.scale * n as i64, det, prec),
        )
    }

    /// Residues modulo `p^level` of an integral matrix.
    pub fn to_residues(&self, level: u32) -> Result<Vec<u32>> {
        let p = self.ctx.p();
        let m = p.pow(level);
        if self.zero {
            return Ok(vec![0; self.n * self.n]);
        }
        if self.scale < 0 {
            return Err(Error::InvalidInput("matrix is not integral".into()));
        }
        if self.scale >= level as i64 {
            return Ok(vec![0; self.n * self.n]);
        }
        let sh = self.scale as u32;
        if sh + self.prec < level {
            return Err(Error::PrecisionLoss(format!(
                "need digits to p^{level}, have p^{}",
                sh + self.prec
            )));
        }
        Ok(self
            .entries
            .iter()
            .map(|&x| (mulmod(x % m, p.pow(sh), m)) as u32)
            .collect())
    }

    /// Equality of values modulo the coarser of the two absolute precisions.
    pub fn approx_eq(&self, other: &MatrixApprox) -> bool {
        if self.same_shape(other).is_err() {
            return false;
        }
        match (self.zero, other.zero) {
            (true, true) => true,
            (true, false) | (false, true) => false,
            _ => match self.sub(other) {
                Ok(d) => {
                    d.scale >= (self.scale + self.prec as i64).min(other.scale + other.prec as i64)
                }
                Err(Error::PrecisionLoss(_)) => true,
                Err(_) => false,
            },
        }
    }
}

/// Matrices modulo `p^level`, the arena for every finite-group computation.
///
/// Elements are row-major `Vec<u32>` of lowest nonnegative residues; this is
/// also the canonical encoding used in dumps and for ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ResidueMatrices {
    n: usize,
    p: u64,
    level: u32,
    modulus: u32,
}

pub type Elem = Vec<u32>;

impl ResidueMatrices {
    pub fn new(n: usize, p: u64, level: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("p = {p} is not a prime")));
        }
        let modulus = p
            .checked_pow(level)
            .filter(|&m| m < (1 << 20))
            .ok_or_else(|| {
                Error::InvalidInput(format!("p^{level} too large for residue matrices"))
            })?;
        Ok(ResidueMatrices {
            n,
            p,
            level,
            modulus: modulus as u32,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn identity(&self) -> Elem {
        let n = self.n;
        let mut e = vec![0u32; n * n];
        for i in 0..n {
            e[i * n + i] = 1 % self.modulus;
        }
        e
    }

    pub fn mul_into(&self, a: &[u32], b: &[u32], out: &mut [u32]) {
        let n = self.n;
        let m = self.modulus as u64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0u64;
                for k in 0..n {
                    acc += a[i * n + k] as u64 * b[k * n + j] as u64;
                }
                out[i * n + j] = (acc % m) as u32;
            }
        }
    }

    pub fn mul(&self, a: &[u32], b: &[u32]) -> Elem {
        let mut out = vec![0u32; self.n * self.n];
        self.mul_into(a, b, &mut out);
        out
    }

    pub fn det(&self, a: &[u32]) -> u32 {
        let wide: Vec<u64> = a.iter().map(|&x| x as u64).collect();
        det_mod(&wide, self.n, self.p, self.level) as u32
    }

    pub fn is_invertible(&self, a: &[u32]) -> bool {
        self.level == 0 || self.det(a) as u64 % self.p != 0
    }

    pub fn inv(&self, a: &[u32]) -> Option<Elem> {
        let m = self.modulus as u64;
        let wide: Vec<u64> = a.iter().map(|&x| x as u64).collect();
        let d = det_mod(&wide, self.n, self.p, self.level);
        let dinv = inv_mod(d, m)?;
        let adj = adjugate_mod(&wide, self.n, self.p, self.level);
        Some(adj.iter().map(|&x| mulmod(x, dinv, m) as u32).collect())
    }

    /// `x - 1` as residues.
    pub fn minus_identity(&self, a: &[u32]) -> Elem {
        let n = self.n;
        let m = self.modulus;
        let mut out = a.to_vec();
        for i in 0..n {
            out[i * n + i] = (out[i * n + i] + m - 1 % m) % m;
        }
        out
    }

    /// Reduce to a coarser level.
    pub fn reduce(&self, a: &[u32], level: u32) -> Elem {
        let m = self.p.pow(level.min(self.level)) as u32;
        a.iter().map(|&x| x % m).collect()
    }

    /// `|GL_n(Z/p^level)|`.
    pub fn gl_order(&self) -> u128 {
        gl_order(self.n, self.p, self.level)
    }

    /// Mixed-radix dense key (useful when `modulus^(n^2)` is small).
    pub fn key(&self, a: &[u32]) -> u64 {
        a.iter()
            .fold(0u64, |acc, &x| acc * self.modulus as u64 + x as u64)
    }

    /// All invertible matrices, in canonical (lexicographic) order.
    pub fn enumerate_gl(&self) -> impl Iterator<Item = Elem> + '_ {
        let q = self.modulus as u64;
        let total = q.pow((self.n * self.n) as u32);
        let n2 = self.n * self.n;
        (0..total).filter_map(move |mut idx| {
            let mut e = vec![0u32; n2];
            for slot in (0..n2).rev() {
                e[slot] = (idx % q) as u32;
                idx /= q;
            }
            self.is_invertible(&e).then_some(e)
        })
    }
}

/// `|GL_n(Z/p^level)| = |GL_n(F_p)| * p^(n^2 (level - 1))`.
pub fn gl_order(n: usize, p: u64, level: u32) -> u128 {
    if level == 0 {
        return 1;
    }
    let p = p as u128;
    let pn = p.pow(n as u32);
    let mut order: u128 = 1;
    for i in 0..n {
        order *= pn - p.pow(i as u32);
    }
    order * p.pow((n * n) as u32 * (level - 1))
}
