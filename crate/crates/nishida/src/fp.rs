//! Arithmetic over the prime field F_p for odd p.
//!
//! Binomial coefficients are reduced through base-p digits (Lucas), so every
//! intermediate product stays below p² and native integers suffice.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An odd prime, validated at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Prime(u32);

impl Prime {
    /// Largest accepted prime. Keeps every product of two residues inside `u64`
    /// with a wide margin.
    pub const MAX: u32 = 1 << 16;

    pub fn new(p: u64) -> Result<Prime> {
        if p < 3 || p > Prime::MAX as u64 || p.is_multiple_of(2) {
            return Err(Error::BadPrime(p));
        }
        let mut d = 3;
        while d * d <= p {
            if p.is_multiple_of(d) {
                return Err(Error::BadPrime(p));
            }
            d += 2;
        }
        Ok(Prime(p as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// (p-1)/2.
    #[inline]
    pub fn half(self) -> u32 {
        (self.0 - 1) / 2
    }

    #[inline]
    pub fn reduce(self, v: i64) -> u32 {
        v.rem_euclid(self.0 as i64) as u32
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.0 as u64) as u32
    }

    pub fn pow(self, a: u32, mut e: u64) -> u32 {
        let mut base = a % self.0;
        let mut acc = 1 % self.0;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Inverse by Fermat's little theorem.
    pub fn inv(self, a: u32) -> Result<u32> {
        if a.is_multiple_of(self.0) {
            return Err(Error::DivisionByZero(self.0));
        }
        Ok(self.pow(a, (self.0 - 2) as u64))
    }

    /// (-1)^e as a residue.
    #[inline]
    pub fn sign(self, e: u64) -> u32 {
        if e.is_multiple_of(2) {
            1
        } else {
            self.0 - 1
        }
    }

    /// Base-p digits, least significant first.
    pub fn digits(self, mut n: u64) -> Vec<u32> {
        let p = self.0 as u64;
        let mut out = Vec::new();
        while n > 0 {
            out.push((n % p) as u32);
            n /= p;
        }
        out
    }
}

impl TryFrom<u64> for Prime {
    type Error = Error;
    fn try_from(v: u64) -> Result<Prime> {
        Prime::new(v)
    }
}

impl From<Prime> for u64 {
    fn from(p: Prime) -> u64 {
        p.0 as u64
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A canonical residue `0 <= value < p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FpScalar {
    value: u32,
    p: Prime,
}

impl FpScalar {
    pub fn new(value: i64, p: Prime) -> FpScalar {
        FpScalar { value: p.reduce(value), p }
    }

    pub fn zero(p: Prime) -> FpScalar {
        FpScalar { value: 0, p }
    }

    pub fn one(p: Prime) -> FpScalar {
        FpScalar { value: 1, p }
    }

    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn prime(self) -> Prime {
        self.p
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn inv(self) -> Result<FpScalar> {
        Ok(FpScalar { value: self.p.inv(self.value)?, p: self.p })
    }

    pub fn pow(self, e: u64) -> FpScalar {
        FpScalar { value: self.p.pow(self.value, e), p: self.p }
    }

    /// Quotient, failing on a zero divisor.
    pub fn checked_div(self, other: FpScalar) -> Result<FpScalar> {
        Ok(self * other.inv()?)
    }
}

impl fmt::Display for FpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for FpScalar {
    type Output = FpScalar;
    fn add(self, o: FpScalar) -> FpScalar {
        debug_assert_eq!(self.p, o.p);
        FpScalar { value: self.p.add(self.value, o.value), p: self.p }
    }
}

impl Sub for FpScalar {
    type Output = FpScalar;
    fn sub(self, o: FpScalar) -> FpScalar {
        debug_assert_eq!(self.p, o.p);
        FpScalar { value: self.p.sub(self.value, o.value), p: self.p }
    }
}

impl Mul for FpScalar {
    type Output = FpScalar;
    fn mul(self, o: FpScalar) -> FpScalar {
        debug_assert_eq!(self.p, o.p);
        FpScalar { value: self.p.mul(self.value, o.value), p: self.p }
    }
}

impl Neg for FpScalar {
    type Output = FpScalar;
    fn neg(self) -> FpScalar {
        FpScalar { value: self.p.neg(self.value), p: self.p }
    }
}

fn small_binom(a: u32, b: u32, p: Prime) -> u32 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut num = 1;
    let mut den = 1;
    for j in 0..b {
        num = p.mul(num, a - j);
        den = p.mul(den, j + 1);
    }
    // a < p, so den is a product of units.
    p.mul(num, p.inv(den).expect("digit factorials are units"))
}

fn lucas(mut n: u64, mut k: u64, p: Prime, digit: impl Fn(u32, u32) -> u32) -> u32 {
    if k > n {
        return 0;
    }
    let q = p.get() as u64;
    let mut acc = 1;
    while k > 0 {
        let (a, b) = ((n % q) as u32, (k % q) as u32);
        if b > a {
            return 0;
        }
        acc = p.mul(acc, digit(a, b));
        n /= q;
        k /= q;
    }
    acc
}

/// C(n, k) mod p as the product of digit binomials. Zero when `k > n`.
pub fn binom_mod_p(n: u64, k: u64, p: Prime) -> FpScalar {
    FpScalar { value: lucas(n, k, p, |a, b| small_binom(a, b, p)), p }
}

/// Per-prime tables of factorials and the coefficient functions γ, ν, λ.
///
/// γ, ν and λ have closed forms in terms of a sign parity and a power of
/// ((p-1)/2)!, so only the factorials are tabulated.
#[derive(Clone, Debug)]
pub struct CoeffTables {
    p: Prime,
    fact: Vec<u32>,
    inv_fact: Vec<u32>,
    half_fact: u32,
}

impl CoeffTables {
    pub fn new(p: Prime) -> CoeffTables {
        let q = p.get() as usize;
        let mut fact = vec![1u32; q];
        for j in 1..q {
            fact[j] = p.mul(fact[j - 1], j as u32);
        }
        let inv_fact = fact.iter().map(|&f| p.inv(f).expect("j! is a unit for j < p")).collect();
        let half_fact = fact[p.half() as usize];
        CoeffTables { p, fact, inv_fact, half_fact }
    }

    pub fn for_prime(p: u64) -> Result<CoeffTables> {
        Ok(CoeffTables::new(Prime::new(p)?))
    }

    #[inline]
    pub fn prime(&self) -> Prime {
        self.p
    }

    /// j! mod p for j < p.
    pub fn factorial(&self, j: u32) -> u32 {
        self.fact[j as usize]
    }

    /// ((p-1)/2)! mod p.
    pub fn half_factorial(&self) -> u32 {
        self.half_fact
    }

    /// C(n, k) mod p through the tables.
    pub fn binom(&self, n: u64, k: u64) -> u32 {
        let p = self.p;
        lucas(n, k, p, |a, b| {
            p.mul(self.fact[a as usize], p.mul(self.inv_fact[b as usize], self.inv_fact[(a - b) as usize]))
        })
    }

    /// Binomial with an integer upper argument, extended polynomially:
    /// C(-m, k) = (-1)^k C(m+k-1, k). Zero for negative `k`.
    pub fn binom_signed(&self, n: i64, k: i64) -> u32 {
        if k < 0 {
            return 0;
        }
        if n >= 0 {
            return self.binom(n as u64, k as u64);
        }
        let top = (-(n as i128)) + k as i128 - 1;
        let v = self.binom(top as u64, k as u64);
        if k % 2 == 0 {
            v
        } else {
            self.p.neg(v)
        }
    }

    /// ν(q) = (-1)^{(p-1)q/2} ((p-1)/2)!.
    pub fn nu(&self, q: u64) -> FpScalar {
        let e = (self.p.half() as u64 % 2) * (q % 2);
        FpScalar { value: self.p.mul(self.p.sign(e), self.half_fact), p: self.p }
    }

    /// γ(q, r) with r = t(p-1) + k, 0 <= k < p-1: the product of the signs
    /// (-1)^{(p-1)(q+i)/2} over i < t, times ((p-1)/2)!^t.
    pub fn gamma(&self, q: u64, r: u64) -> FpScalar {
        let t = r / (self.p.get() as u64 - 1);
        let e = self.sign_sum(q, t);
        let v = self.p.mul(self.p.sign(e), self.p.pow(self.half_fact, t));
        FpScalar { value: v, p: self.p }
    }

    /// λ(q) = ∏_{i=0}^{n-2} ν(q+i), with the cube dimension `n` explicit.
    pub fn lambda(&self, q: u64, n: u64) -> Result<FpScalar> {
        if n == 0 {
            return Err(Error::OutOfRange("lambda needs n >= 1".into()));
        }
        let t = n - 1;
        let e = self.sign_sum(q, t);
        let v = self.p.mul(self.p.sign(e), self.p.pow(self.half_fact, t));
        Ok(FpScalar { value: v, p: self.p })
    }

    // Parity of Σ_{i<t} (p-1)(q+i)/2.
    fn sign_sum(&self, q: u64, t: u64) -> u64 {
        let h = self.p.half() as u64 % 2;
        let tri = (t % 4) / 2; // parity of t(t-1)/2
        (h * ((t % 2) * (q % 2) + tri)) % 2
    }

    /// Residue of the isotropy order of `n` under coordinate permutation:
    /// the product of the factorials of the multiplicities.
    pub fn isotropy_order(&self, n: &[u64]) -> FpScalar {
        let mut sorted = n.to_vec();
        sorted.sort_unstable();
        let mut acc = 1u32;
        let mut run = 0u64;
        for (j, v) in sorted.iter().enumerate() {
            run += 1;
            if j + 1 == sorted.len() || sorted[j + 1] != *v {
                acc = self.p.mul(acc, self.factorial_any(run));
                run = 0;
            }
        }
        FpScalar { value: acc, p: self.p }
    }

    /// m! mod p for any m (zero once m >= p).
    pub fn factorial_any(&self, m: u64) -> u32 {
        if m >= self.p.get() as u64 {
            0
        } else {
            self.fact[m as usize]
        }
    }

    pub fn scalar(&self, v: i64) -> FpScalar {
        FpScalar::new(v, self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(p: u64) -> CoeffTables {
        CoeffTables::for_prime(p).unwrap()
    }

    #[test]
    fn rejects_bad_primes() {
        for bad in [0, 1, 2, 4, 9, 15, 21, 1 << 20] {
            assert!(Prime::new(bad).is_err(), "{bad}");
        }
        for good in [3, 5, 7, 11, 65521] {
            assert!(Prime::new(good).is_ok(), "{good}");
        }
    }

    #[test]
    fn binomial_examples() {
        let p3 = Prime::new(3).unwrap();
        assert_eq!(binom_mod_p(11, 3, p3).value(), 0);
        assert_eq!(binom_mod_p(9, 3, p3).value(), 0);
        assert_eq!(binom_mod_p(7, 0, p3).value(), 1);
        assert_eq!(binom_mod_p(3, 7, p3).value(), 0);
        assert_eq!(t(3).binom(11, 3), 0);
    }

    #[test]
    fn signed_binomial_extends_polynomially() {
        let tb = t(5);
        // C(-1, k) = (-1)^k
        assert_eq!(tb.binom_signed(-1, 3), 4);
        assert_eq!(tb.binom_signed(-1, 4), 1);
        assert_eq!(tb.binom_signed(-7, 0), 1);
        assert_eq!(tb.binom_signed(4, -1), 0);
        // C(-2, 2) = 3
        assert_eq!(tb.binom_signed(-2, 2), 3);
    }

    #[test]
    fn nu_gamma_lambda_examples() {
        assert_eq!(t(3).nu(0).value(), 1);
        assert_eq!(t(3).nu(1).value(), 2);
        assert_eq!(t(5).nu(2).value(), 2);
        assert_eq!(t(3).gamma(0, 2).value(), 1);
        assert_eq!(t(7).gamma(4, 5).value(), 1);
        assert_eq!(t(3).lambda(9, 1).unwrap().value(), 1);
        assert_eq!(t(3).lambda(0, 2).unwrap().value(), 1);
        assert_eq!(t(3).lambda(0, 3).unwrap().value(), 2);
    }

    #[test]
    fn fermat_inverse() {
        let p = Prime::new(7).unwrap();
        for a in 1..7 {
            assert_eq!(p.mul(a, p.inv(a).unwrap()), 1);
        }
        assert_eq!(p.inv(14), Err(Error::DivisionByZero(7)));
    }

    #[test]
    fn isotropy_orders() {
        let tb = t(3);
        assert_eq!(tb.isotropy_order(&[0, 1, 2]).value(), 1);
        assert_eq!(tb.isotropy_order(&[0, 3, 3]).value(), 2);
        assert_eq!(tb.isotropy_order(&[1, 1, 1]).value(), 0);
    }
}
