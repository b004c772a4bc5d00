//! Roots of unity of p-power order and exact sums of them.
//!
//! A [`Phase`] is an element `t` of `Q/Z` whose denominator is a power of `p`;
//! it stands for `exp(2 pi i t)`. A [`CycloSum`] is an element of `Z[zeta]`,
//! `zeta` a primitive `p^L`-th root of unity, kept in a canonical basis so
//! that equality is structural.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Phase {
    num: u64,
    den: u64,
}

impl Phase {
    pub const ZERO: Phase = Phase { num: 0, den: 1 };

    /// `num / den mod 1`, reduced. `den` must be a power of `p`.
    pub fn new(num: i128, den: u64, p: u64) -> Phase {
        debug_assert!(den >= 1);
        let mut num = num.rem_euclid(den as i128) as u64;
        let mut den = den;
        while den > 1 && num % p == 0 {
            num /= p;
            den /= p;
        }
        if num == 0 {
            return Phase::ZERO;
        }
        Phase { num, den }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// Compare as rationals in `[0, 1)`.
    pub fn value_cmp(&self, other: &Phase) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }

    pub fn add(self, other: Phase, p: u64) -> Phase {
        let den = self.den.max(other.den);
        let a = self.num as i128 * (den / self.den) as i128;
        let b = other.num as i128 * (den / other.den) as i128;
        Phase::new(a + b, den, p)
    }

    pub fn neg(self, p: u64) -> Phase {
        Phase::new(-(self.num as i128), self.den, p)
    }

    pub fn sub(self, other: Phase, p: u64) -> Phase {
        self.add(other.neg(p), p)
    }

    pub fn scale(self, k: i128, p: u64) -> Phase {
        Phase::new(self.num as i128 * k, self.den, p)
    }

    /// Exponent of `zeta_{p^level}`, i.e. `t * p^level mod p^level`.
    pub fn exponent_at(&self, modulus: u64) -> Result<u64> {
        if modulus % self.den != 0 {
            return Err(Error::InvalidInput(format!(
                "phase {self} does not live in the {modulus}-th roots of unity"
            )));
        }
        Ok(self.num * (modulus / self.den))
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// An element of `Z[zeta_{p^L}]` in the basis `zeta^k`, `0 <= k < (p-1) p^(L-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycloSum {
    p: u64,
    order: u64,
    coeffs: Vec<i128>,
}

impl CycloSum {
    /// Zero in `Z[zeta_order]`; `order` must be a power of `p` (1 is allowed).
    pub fn zero(p: u64, order: u64) -> CycloSum {
        CycloSum {
            p,
            order,
            coeffs: vec![0; order as usize],
        }
    }

    /// From raw coefficients of `zeta^0, ..., zeta^(order-1)`.
    pub fn from_coeffs(p: u64, coeffs: Vec<i128>) -> CycloSum {
        CycloSum {
            p,
            order: coeffs.len() as u64,
            coeffs,
        }
    }

    pub fn from_int(p: u64, order: u64, k: i128) -> CycloSum {
        let mut s = Self::zero(p, order);
        s.coeffs[0] = k;
        s
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Add `coeff * exp(2 pi i t)`.
    pub fn add_phase(&mut self, t: Phase, coeff: i128) -> Result<()> {
        let k = t.exponent_at(self.order)?;
        self.coeffs[k as usize] += coeff;
        Ok(())
    }

    pub fn add_assign(&mut self, other: &CycloSum) -> Result<()> {
        self.compatible(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&mut self, k: i128) {
        for a in self.coeffs.iter_mut() {
            *a *= k;
        }
    }

    fn compatible(&self, other: &CycloSum) -> Result<()> {
        if self.p != other.p || self.order != other.order {
            return Err(Error::InvalidInput(
                "cyclotomic sums over different roots of unity".into(),
            ));
        }
        Ok(())
    }

    pub fn mul(&self, other: &CycloSum) -> Result<CycloSum> {
        self.compatible(other)?;
        let o = self.order as usize;
        let mut out = Self::zero(self.p, self.order);
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b != 0 {
                    out.coeffs[(i + j) % o] += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Complex conjugate: `zeta^k -> zeta^-k`.
    pub fn conj(&self) -> CycloSum {
        let o = self.order as usize;
        let mut out = Self::zero(self.p, self.order);
        for (i, &a) in self.coeffs.iter().enumerate() {
            out.coeffs[(o - i) % o] += a;
        }
        out
    }

    /// Rewrite in the canonical basis using
    /// `zeta^(r + (p-1)q) = -sum_{i<p-1} zeta^(r + i q)`, `q = order / p`.
    pub fn canonical(&self) -> CycloSum {
        let mut out = self.clone();
        if self.order == 1 {
            return out;
        }
        let q = (self.order / self.p) as usize;
        let top = (self.p as usize - 1) * q;
        for r in 0..q {
            let c = out.coeffs[top + r];
            if c != 0 {
                out.coeffs[top + r] = 0;
                for i in 0..self.p as usize - 1 {
                    out.coeffs[r + i * q] -= c;
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.canonical().coeffs.iter().all(|&c| c == 0)
    }

    /// `Some(k)` when the value is the rational integer `k`.
    pub fn as_integer(&self) -> Option<i128> {
        let c = self.canonical();
        c.coeffs[1..].iter().all(|&x| x == 0).then_some(c.coeffs[0])
    }

    pub fn equals(&self, other: &CycloSum) -> bool {
        self.compatible(other).is_ok() && self.canonical() == other.canonical()
    }

    /// `Some((k, t))` when the value is `k * exp(2 pi i t)` with `k != 0`.
    pub fn as_scaled_root(&self) -> Option<(i128, Phase)> {
        // canonical form is unique, so compare against each candidate root
        let c = self.canonical();
        for e in 0..self.order {
            let t = Phase::new(e as i128, self.order, self.p);
            let mut probe = Self::zero(self.p, self.order);
            probe.add_phase(t, 1).ok()?;
            let probe = probe.canonical();
            let lead = probe.coeffs.iter().position(|&x| x != 0)?;
            let k = c.coeffs[lead] / probe.coeffs[lead];
            if k == 0 {
                continue;
            }
            let mut scaled = probe.clone();
            scaled.scale(k);
            if scaled == c {
                return Some((k, t));
            }
        }
        None
    }

    /// Lift into `Z[zeta_{order * p^k}]`.
    pub fn lift(&self, order: u64) -> Result<CycloSum> {
        if order % self.order != 0 {
            return Err(Error::InvalidInput(
                "cannot lift to a smaller root of unity".into(),
            ));
        }
        let step = (order / self.order) as usize;
        let mut out = Self::zero(self.p, order);
        for (i, &a) in self.coeffs.iter().enumerate() {
            out.coeffs[i * step] += a;
        }
        Ok(out)
    }
}

impl fmt::Display for CycloSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.canonical();
        let mut first = true;
        for (k, &a) in c.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if k == 0 {
                write!(f, "{a}")?;
            } else {
                write!(f, "{a}*z^{k}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " (z^{} = 1)", self.order)
    }
}
