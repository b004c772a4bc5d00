//! Dense polynomials over `F_p`, coefficients lowest degree first.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpPoly {
    p: u64,
    coeffs: Vec<u64>,
}

impl FpPoly {
    pub fn new(p: u64, coeffs: Vec<u64>) -> FpPoly {
        let mut out = FpPoly {
            p,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        };
        out.trim();
        out
    }

    pub fn x(p: u64) -> FpPoly {
        FpPoly::new(p, vec![0, 1])
    }

    pub fn one(p: u64) -> FpPoly {
        FpPoly::new(p, vec![1])
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    fn inv(&self, a: u64) -> u64 {
        crate::padic::inv_mod(a, self.p).expect("nonzero element of F_p")
    }

    pub fn monic(&self) -> FpPoly {
        match self.coeffs.last() {
            None => self.clone(),
            Some(&lead) => {
                let li = self.inv(lead);
                FpPoly::new(
                    self.p,
                    self.coeffs.iter().map(|&c| c * li % self.p).collect(),
                )
            }
        }
    }

    pub fn sub(&self, other: &FpPoly) -> FpPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let c = (0..len)
            .map(|i| {
                let a = self.coeffs.get(i).copied().unwrap_or(0);
                let b = other.coeffs.get(i).copied().unwrap_or(0);
                (a + self.p - b) % self.p
            })
            .collect();
        FpPoly::new(self.p, c)
    }

    pub fn mul(&self, other: &FpPoly) -> FpPoly {
        if self.is_zero() || other.is_zero() {
            return FpPoly::new(self.p, vec![]);
        }
        let mut c = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] = (c[i + j] + a * b) % self.p;
            }
        }
        FpPoly::new(self.p, c)
    }

    pub fn div_rem(&self, divisor: &FpPoly) -> (FpPoly, FpPoly) {
        let dm = divisor.degree().expect("division by zero polynomial");
        let li = self.inv(divisor.coeffs[dm]);
        let mut r = self.coeffs.clone();
        let mut q = vec![0u64; r.len().saturating_sub(dm)];
        while r.len() > dm {
            let top = r.len() - 1;
            let c = r[top] * li % self.p;
            q[top - dm] = c;
            if c != 0 {
                for (k, &mc) in divisor.coeffs.iter().enumerate() {
                    let idx = top - dm + k;
                    r[idx] = (r[idx] + self.p - c * mc % self.p) % self.p;
                }
            }
            r.pop();
        }
        (FpPoly::new(self.p, q), FpPoly::new(self.p, r))
    }

    pub fn rem(&self, modulus: &FpPoly) -> FpPoly {
        self.div_rem(modulus).1
    }

    pub fn gcd(&self, other: &FpPoly) -> FpPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn pow(&self, e: u32) -> FpPoly {
        let mut acc = FpPoly::one(self.p);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `x^(p^k) mod self`.
    pub fn frobenius_power(&self, k: u32) -> FpPoly {
        let mut acc = FpPoly::x(self.p).rem(self);
        for _ in 0..k {
            // raise to the p-th power by repeated multiplication
            let mut next = FpPoly::one(self.p);
            for _ in 0..self.p {
                next = next.mul(&acc).rem(self);
            }
            acc = next;
        }
        acc
    }

    /// Rabin's test.
    pub fn is_irreducible(&self) -> bool {
        let Some(d) = self.degree() else { return false };
        if d == 0 {
            return false;
        }
        if d == 1 {
            return true;
        }
        let f = self.monic();
        let x = FpPoly::x(self.p);
        if !f.frobenius_power(d as u32).sub(&x).rem(&f).is_zero() {
            return false;
        }
        prime_divisors(d).into_iter().all(|q| {
            let h = f.frobenius_power((d / q) as u32).sub(&x);
            f.gcd(&h).degree() == Some(0)
        })
    }
}

fn prime_divisors(mut d: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= d {
        if d % q == 0 {
            out.push(q);
            while d % q == 0 {
                d /= q;
            }
        }
        q += 1;
    }
    if d > 1 {
        out.push(d);
    }
    out
}
