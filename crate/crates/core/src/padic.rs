//! Fixed-precision p-adic arithmetic.
//!
//! [`PadicRing`] describes `Z_p / p^N` or the unramified quadratic extension
//! `Z_{p^2} / p^N`, the latter on the basis `{1, w}` where `w` is the
//! Teichmuller lift of a primitive element of `F_{p^2}`. [`PadicNum`] is an
//! element of such a ring, [`PadicScalar`] a floating element `p^s * unit`
//! with tracked relative precision, and [`PrecisionBudget`] the loss ledger.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::PadicError;

/// Largest modulus we allow; keeps `a + b` inside `u64` for reduced residues.
const MAX_MODULUS: u64 = 1 << 62;

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
fn addmod(a: u64, b: u64, m: u64) -> u64 {
    let s = a + b;
    if s >= m {
        s - m
    } else {
        s
    }
}

#[inline]
fn submod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + m - b
    }
}

pub(crate) fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `p`-adic valuation of a nonzero integer.
pub fn vp_int(mut n: i128, p: u64) -> u32 {
    assert!(n != 0, "valuation of zero");
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// `v_p(n!)` by Legendre's formula.
pub fn vp_factorial(n: u64, p: u64) -> u32 {
    let mut v = 0u64;
    let mut q = n;
    while q > 0 {
        q /= p;
        v += q;
    }
    v as u32
}

/// `p^e` if it fits below the modulus cap.
pub fn checked_pow(p: u64, e: u32) -> Option<u64> {
    let mut r: u64 = 1;
    for _ in 0..e {
        r = r.checked_mul(p)?;
        if r >= MAX_MODULUS {
            return None;
        }
    }
    Some(r)
}

/// Coefficient ring `O / p^N` with `O` unramified of degree 1 or 2 over `Z_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PadicRing {
    p: u64,
    prec: u32,
    degree: u8,
    modulus: u64,
    // w^2 = tr * w - nm (degree 2 only)
    tr: u64,
    nm: u64,
}

impl PadicRing {
    pub fn new(p: u64, prec: u32, degree: u8) -> Result<Self, PadicError> {
        if !is_prime(p) {
            return Err(PadicError::NotPrime(p));
        }
        if prec == 0 {
            return Err(PadicError::PrecisionOverflow { p, prec });
        }
        let modulus = checked_pow(p, prec).ok_or(PadicError::PrecisionOverflow { p, prec })?;
        match degree {
            1 => Ok(PadicRing { p, prec, degree, modulus, tr: 0, nm: 0 }),
            2 => {
                if p == 2 {
                    return Err(PadicError::ConvergenceDomain(
                        "quadratic extension requires odd p".into(),
                    ));
                }
                let (tr, nm) = teichmuller_minpoly(p, prec, modulus);
                Ok(PadicRing { p, prec, degree, modulus, tr, nm })
            }
            _ => Err(PadicError::UnsupportedDegree(degree)),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn prec(&self) -> u32 {
        self.prec
    }
    pub fn degree(&self) -> u8 {
        self.degree
    }
    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    /// Size of the residue field minus one, the order of the Teichmuller group.
    pub fn unit_root_order(&self) -> u64 {
        self.p.pow(self.degree as u32) - 1
    }

    /// Same `p` and degree at another precision.
    pub fn with_prec(&self, prec: u32) -> Result<Self, PadicError> {
        PadicRing::new(self.p, prec, self.degree)
    }

    /// Degree-1 ring with the same `p` and `N`.
    pub fn base(&self) -> Self {
        PadicRing { p: self.p, prec: self.prec, degree: 1, modulus: self.modulus, tr: 0, nm: 0 }
    }

    pub fn zero(&self) -> PadicNum {
        PadicNum { ring: *self, c: [0, 0] }
    }
    pub fn one(&self) -> PadicNum {
        PadicNum { ring: *self, c: [1 % self.modulus, 0] }
    }
    pub fn int(&self, n: i128) -> PadicNum {
        let m = self.modulus as i128;
        PadicNum { ring: *self, c: [n.rem_euclid(m) as u64, 0] }
    }
    /// The generator `w` of a degree-2 ring.
    pub fn gen(&self) -> PadicNum {
        assert_eq!(self.degree, 2, "gen() only exists in the quadratic extension");
        PadicNum { ring: *self, c: [0, 1 % self.modulus] }
    }
    pub fn from_coords(&self, c: [u64; 2]) -> PadicNum {
        let c1 = if self.degree == 2 { c[1] % self.modulus } else { 0 };
        PadicNum { ring: *self, c: [c[0] % self.modulus, c1] }
    }
    /// `num / den`, with `den` a `p`-adic unit.
    pub fn rational(&self, num: i128, den: i128) -> Result<PadicNum, PadicError> {
        Ok(self.int(num) * self.int(den).inv()?)
    }
}

/// Picks the first primitive `a + b X` of `F_p[X]/(X^2 - c)` in lexicographic
/// order and returns the trace and norm of its Teichmuller lift mod `p^N`.
fn teichmuller_minpoly(p: u64, prec: u32, modulus: u64) -> (u64, u64) {
    let c = (2..p).find(|&c| legendre(c as i128, p) == -1).expect("non-residue exists");
    let order = p * p - 1;
    let mut factors = Vec::new();
    let mut n = order;
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            factors.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    // arithmetic in Z/m[X]/(X^2 - c)
    let mul = |x: (u64, u64), y: (u64, u64), m: u64| -> (u64, u64) {
        let a = addmod(mulmod(x.0, y.0, m), mulmod(c % m, mulmod(x.1, y.1, m), m), m);
        let b = addmod(mulmod(x.0, y.1, m), mulmod(x.1, y.0, m), m);
        (a, b)
    };
    let pow = |mut x: (u64, u64), mut e: u64, m: u64| -> (u64, u64) {
        let mut r = (1 % m, 0);
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, x, m);
            }
            x = mul(x, x, m);
            e >>= 1;
        }
        r
    };
    let mut z = None;
    'search: for b in 1..p {
        for a in 0..p {
            let cand = (a, b);
            if factors.iter().all(|&q| pow(cand, order / q, p) != (1, 0)) {
                z = Some(cand);
                break 'search;
            }
        }
    }
    let mut w = z.expect("F_{p^2} has a primitive element");
    for _ in 0..prec {
        w = pow(w, p * p, modulus);
    }
    let tr = addmod(w.0, w.0, modulus);
    let nm = submod(mulmod(w.0, w.0, modulus), mulmod(c % modulus, mulmod(w.1, w.1, modulus), modulus), modulus);
    (tr, nm)
}

/// Legendre symbol `(a/p)` for odd prime `p`.
pub fn legendre(a: i128, p: u64) -> i32 {
    let a = a.rem_euclid(p as i128) as u64;
    if a == 0 {
        return 0;
    }
    let mut r = 1u64;
    let mut b = a;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

/// Element of a [`PadicRing`].
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicNum {
    ring: PadicRing,
    c: [u64; 2],
}

impl fmt::Debug for PadicNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for PadicNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ring.degree == 1 {
            write!(f, "{} (mod {}^{})", self.c[0], self.ring.p, self.ring.prec)
        } else {
            write!(f, "{}+{}w (mod {}^{})", self.c[0], self.c[1], self.ring.p, self.ring.prec)
        }
    }
}

impl PadicNum {
    pub fn ring(&self) -> PadicRing {
        self.ring
    }
    pub fn coords(&self) -> [u64; 2] {
        self.c
    }
    pub fn is_zero(&self) -> bool {
        self.c == [0, 0]
    }

    /// Valuation, with `N` standing for "at least `N`".
    pub fn valuation(&self) -> u32 {
        let p = self.ring.p;
        let n = self.ring.prec;
        let v1 = |mut x: u64| -> u32 {
            if x == 0 {
                return n;
            }
            let mut v = 0;
            while x.is_multiple_of(p) {
                x /= p;
                v += 1;
            }
            v
        };
        v1(self.c[0]).min(v1(self.c[1]))
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == 0
    }

    /// Symmetric integer representative of a degree-1 element.
    pub fn to_i128(&self) -> i128 {
        let m = self.ring.modulus as i128;
        let x = self.c[0] as i128;
        if x > m / 2 {
            x - m
        } else {
            x
        }
    }

    /// Residue of a degree-1 element in `[0, p^N)`.
    pub fn residue(&self) -> u64 {
        self.c[0]
    }

    fn check(&self, other: &PadicNum) {
        assert!(
            self.ring == other.ring,
            "p-adic ring mismatch: {:?} vs {:?}",
            self.ring,
            other.ring
        );
    }

    pub fn pow(&self, mut e: u64) -> PadicNum {
        let mut base = *self;
        let mut r = self.ring.one();
        while e > 0 {
            if e & 1 == 1 {
                r *= base;
            }
            base = base * base;
            e >>= 1;
        }
        r
    }

    /// Integer power; negative exponents need a unit.
    pub fn powi(&self, e: i64) -> Result<PadicNum, PadicError> {
        if e >= 0 {
            Ok(self.pow(e as u64))
        } else {
            Ok(self.inv()?.pow(e.unsigned_abs()))
        }
    }

    /// Frobenius, the nontrivial automorphism in degree 2 (identity in degree 1).
    pub fn frobenius(&self) -> PadicNum {
        if self.ring.degree == 1 {
            return *self;
        }
        let m = self.ring.modulus;
        let x0 = addmod(self.c[0], mulmod(self.c[1], self.ring.tr, m), m);
        let x1 = submod(0, self.c[1], m);
        PadicNum { ring: self.ring, c: [x0, x1] }
    }

    /// Norm down to `Z_p`, as an element of the base ring.
    pub fn norm(&self) -> PadicNum {
        let n = *self * self.frobenius();
        debug_assert_eq!(n.c[1], 0);
        PadicNum { ring: self.ring.base(), c: [n.c[0], 0] }
    }

    /// Trace down to `Z_p`, as an element of the base ring.
    pub fn trace(&self) -> PadicNum {
        let t = *self + self.frobenius();
        PadicNum { ring: self.ring.base(), c: [t.c[0], 0] }
    }

    /// Image of a base-ring element in an extension of the same `p` and `N`.
    pub fn embed(&self, ring: PadicRing) -> PadicNum {
        assert!(self.ring.degree == 1 && ring.p == self.ring.p && ring.prec == self.ring.prec);
        PadicNum { ring, c: [self.c[0], 0] }
    }

    pub fn inv(&self) -> Result<PadicNum, PadicError> {
        if !self.is_unit() {
            return Err(PadicError::NonUnitInverse);
        }
        let m = self.ring.modulus;
        if self.ring.degree == 1 {
            return Ok(PadicNum { ring: self.ring, c: [inv_mod(self.c[0], m), 0] });
        }
        let conj = self.frobenius();
        let n = (*self * conj).c[0];
        let ni = inv_mod(n, m);
        Ok(PadicNum { ring: self.ring, c: [mulmod(conj.c[0], ni, m), mulmod(conj.c[1], ni, m)] })
    }

    /// Multiplies by `p^k` (zero once `k >= N`).
    pub fn mul_p_pow(&self, k: u32) -> PadicNum {
        if k >= self.ring.prec {
            return self.ring.zero();
        }
        let pk = self.ring.p.pow(k);
        let m = self.ring.modulus;
        PadicNum { ring: self.ring, c: [mulmod(self.c[0], pk, m), mulmod(self.c[1], pk, m)] }
    }

    /// Exact division by `p^k` of the representative; the top `k` digits of
    /// the result are unknown and come back as zero.
    pub fn div_p_pow(&self, k: u32) -> Result<PadicNum, PadicError> {
        if k == 0 {
            return Ok(*self);
        }
        if self.valuation() < k {
            return Err(PadicError::InsufficientValuation { needed: k, found: self.valuation() });
        }
        let pk = self.ring.p.pow(k.min(self.ring.prec));
        if k >= self.ring.prec {
            return Ok(self.ring.zero());
        }
        Ok(PadicNum { ring: self.ring, c: [self.c[0] / pk, self.c[1] / pk] })
    }

    /// Same residues read in a ring of another precision (zero-padded when
    /// lifting, reduced when lowering).
    pub fn to_prec(&self, ring: PadicRing) -> PadicNum {
        assert!(ring.p == self.ring.p && ring.degree == self.ring.degree);
        ring.from_coords(self.c)
    }

    pub fn teichmuller(&self) -> Result<PadicNum, PadicError> {
        if !self.is_unit() {
            return Err(PadicError::NonUnitInverse);
        }
        let q = self.ring.p.pow(self.ring.degree as u32);
        let mut x = *self;
        for _ in 0..self.ring.prec {
            let y = x.pow(q);
            if y == x {
                break;
            }
            x = y;
        }
        Ok(x)
    }

    pub fn log(&self) -> Result<PadicNum, PadicError> {
        let ring = self.ring;
        let p = ring.p;
        if p == 2 {
            return Err(PadicError::ConvergenceDomain("log at p = 2 is not supported".into()));
        }
        let y = *self - ring.one();
        if y.valuation() == 0 {
            return Err(PadicError::ConvergenceDomain("log needs x = 1 mod p".into()));
        }
        if y.is_zero() {
            return Ok(ring.zero());
        }
        let n = ring.prec;
        // terms y^k / k have valuation >= k - v_p(k); stop once that reaches N
        let mut kmax = 1u64;
        loop {
            let k = kmax + 1;
            if k as i64 - vp_int(k as i128, p) as i64 >= n as i64 && k > n as u64 {
                break;
            }
            kmax = k;
        }
        let extra = (1..=kmax).map(|k| vp_int(k as i128, p)).max().unwrap_or(0);
        let hi = ring.with_prec(n + extra)?;
        let yh = y.to_prec(hi);
        let mut acc = hi.zero();
        let mut pw = hi.one();
        for k in 1..=kmax {
            pw *= yh;
            let vk = vp_int(k as i128, p);
            let unit = (k / p.pow(vk)) as i128;
            let term = pw.div_p_pow(vk)? * hi.int(unit).inv()?;
            if k % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        Ok(acc.to_prec(ring))
    }

    pub fn exp(&self) -> Result<PadicNum, PadicError> {
        let ring = self.ring;
        let p = ring.p;
        if p == 2 {
            return Err(PadicError::ConvergenceDomain("exp at p = 2 is not supported".into()));
        }
        if self.valuation() == 0 {
            return Err(PadicError::ConvergenceDomain("exp needs valuation >= 1".into()));
        }
        let n = ring.prec as i64;
        // y^k / k! has valuation >= k - v_p(k!)
        let mut kmax = 0u64;
        let mut k = 1u64;
        let mut below = 0;
        while below < 3 * p {
            if (k as i64) - (vp_factorial(k, p) as i64) < n {
                kmax = k;
                below = 0;
            } else {
                below += 1;
            }
            k += 1;
        }
        let extra = vp_factorial(kmax, p);
        let hi = ring.with_prec(ring.prec + extra)?;
        let yh = self.to_prec(hi);
        let mut acc = hi.one();
        let mut pw = hi.one();
        for k in 1..=kmax {
            pw *= yh;
            let vf = vp_factorial(k, p);
            let mut unit = hi.one();
            for i in 1..=k {
                let vi = vp_int(i as i128, p);
                unit *= hi.int((i / p.pow(vi)) as i128);
            }
            acc += pw.div_p_pow(vf)? * unit.inv()?;
        }
        Ok(acc.to_prec(ring))
    }

    /// `t^k` for the weight `k = chi * exp(u log)`: `w(t)^chi * exp(u log <t>)`.
    pub fn ppow(&self, u: &PadicNum, chi: i64) -> Result<PadicNum, PadicError> {
        let ring = self.ring;
        if ring.p == 2 {
            return Err(PadicError::ConvergenceDomain("p-adic powers at p = 2 are not supported".into()));
        }
        if !self.is_unit() {
            return Err(PadicError::NonUnitInverse);
        }
        if u.ring.degree != 1 || u.ring.p != ring.p || u.ring.prec != ring.prec {
            return Err(PadicError::RingMismatch);
        }
        let w = self.teichmuller()?;
        let ord = ring.unit_root_order() as i64;
        let finite = w.pow(chi.rem_euclid(ord) as u64);
        if u.is_zero() {
            return Ok(finite);
        }
        let bracket = *self * w.inv()?;
        let l = bracket.log()?;
        Ok(finite * (u.embed(ring) * l).exp()?)
    }

    /// Square root of an integer in this ring: Hensel lifting of the canonical
    /// residue root (smallest positive residue in degree 1; lexicographically
    /// smallest `(b, a)` for `a + b w` in degree 2).
    pub fn sqrt_int(ring: PadicRing, a: i128) -> Result<PadicNum, PadicError> {
        let p = ring.p;
        if p == 2 {
            return Err(PadicError::ConvergenceDomain("square roots need odd p".into()));
        }
        if a.rem_euclid(p as i128) == 0 {
            return Err(PadicError::NonResidue);
        }
        let res = ring.with_prec(1)?;
        let target = res.int(a);
        let mut root = None;
        if ring.degree == 1 {
            root = (1..p).map(|x| res.int(x as i128)).find(|x| *x * *x == target);
        } else {
            'outer: for b in 0..p {
                for a0 in 0..p {
                    let x = res.from_coords([a0, b]);
                    if x * x == target {
                        root = Some(x);
                        break 'outer;
                    }
                }
            }
        }
        let mut x = root.ok_or(PadicError::NonResidue)?.to_prec(ring);
        let a = ring.int(a);
        let half = ring.int(2).inv()?;
        for _ in 0..=ring.prec.ilog2() + 1 {
            x = (x + a * x.inv()?) * half;
        }
        debug_assert_eq!(x * x, a);
        Ok(x)
    }
}

/// Square root of `a` in `Z / p^N` lifting the smallest positive residue root.
pub fn hensel_sqrt(a: i128, p: u64, prec: u32) -> Result<PadicNum, PadicError> {
    PadicNum::sqrt_int(PadicRing::new(p, prec, 1)?, a)
}

/// Binomial `C(n, j)` of an integer `n` (possibly negative), exact mod `p^N`.
pub fn binom_int(ring: PadicRing, n: i128, j: u64) -> PadicNum {
    let p = ring.p;
    let m = ring.modulus as i128;
    let mut vnum: u32 = 0;
    let mut unit: u64 = 1;
    for i in 0..j as i128 {
        let f = n - i;
        if f == 0 {
            return ring.zero();
        }
        let v = vp_int(f, p);
        vnum += v;
        let u = (f / (p as i128).pow(v)).rem_euclid(m) as u64;
        unit = mulmod(unit, u, ring.modulus);
    }
    let vden = vp_factorial(j, p);
    let mut dunit: u64 = 1;
    for i in 1..=j {
        let v = vp_int(i as i128, p);
        dunit = mulmod(dunit, ((i / p.pow(v)) as u128 % ring.modulus as u128) as u64, ring.modulus);
    }
    let r = PadicNum { ring, c: [mulmod(unit, inv_mod(dunit, ring.modulus), ring.modulus), 0] };
    r.mul_p_pow(vnum - vden)
}

/// Interpolated binomial `C(u, j)` of a `p`-adic integer, evaluated at the
/// symmetric representative. Exact when `u` is the image of an integer of
/// absolute value below `p^N / 2`; otherwise correct modulo `p^(N - v_p(j!))`.
pub fn pbinom(u: &PadicNum, j: u64) -> PadicNum {
    assert_eq!(u.ring.degree, 1, "pbinom takes a Z_p element");
    binom_int(u.ring, u.to_i128(), j)
}

fn inv_mod(a: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    debug_assert_eq!(r0, 1, "inverse of a non-unit");
    t0.rem_euclid(m as i128) as u64
}

impl Add for PadicNum {
    type Output = PadicNum;
    #[inline]
    fn add(self, o: PadicNum) -> PadicNum {
        self.check(&o);
        let m = self.ring.modulus;
        PadicNum { ring: self.ring, c: [addmod(self.c[0], o.c[0], m), addmod(self.c[1], o.c[1], m)] }
    }
}

impl Sub for PadicNum {
    type Output = PadicNum;
    #[inline]
    fn sub(self, o: PadicNum) -> PadicNum {
        self.check(&o);
        let m = self.ring.modulus;
        PadicNum { ring: self.ring, c: [submod(self.c[0], o.c[0], m), submod(self.c[1], o.c[1], m)] }
    }
}

impl Neg for PadicNum {
    type Output = PadicNum;
    fn neg(self) -> PadicNum {
        let m = self.ring.modulus;
        PadicNum { ring: self.ring, c: [submod(0, self.c[0], m), submod(0, self.c[1], m)] }
    }
}

impl Mul for PadicNum {
    type Output = PadicNum;
    #[inline]
    fn mul(self, o: PadicNum) -> PadicNum {
        self.check(&o);
        let m = self.ring.modulus;
        if self.ring.degree == 1 {
            return PadicNum { ring: self.ring, c: [mulmod(self.c[0], o.c[0], m), 0] };
        }
        let (a0, a1, b0, b1) = (self.c[0], self.c[1], o.c[0], o.c[1]);
        let hh = mulmod(a1, b1, m);
        let x0 = submod(mulmod(a0, b0, m), mulmod(self.ring.nm, hh, m), m);
        let x1 = addmod(addmod(mulmod(a0, b1, m), mulmod(a1, b0, m), m), mulmod(self.ring.tr, hh, m), m);
        PadicNum { ring: self.ring, c: [x0, x1] }
    }
}

impl AddAssign for PadicNum {
    fn add_assign(&mut self, o: PadicNum) {
        *self = *self + o;
    }
}
impl SubAssign for PadicNum {
    fn sub_assign(&mut self, o: PadicNum) {
        *self = *self - o;
    }
}
impl MulAssign for PadicNum {
    fn mul_assign(&mut self, o: PadicNum) {
        *self = *self * o;
    }
}

/// `p^shift * unit + O(p^(shift + rel))`, a floating `p`-adic quantity.
///
/// Used wherever negative powers of `p` appear (Hecke roots, balanced-weight
/// Euler factors, slope projectors). `rel == 0` means the value is zero to
/// absolute precision `shift`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PadicScalar {
    shift: i64,
    unit: PadicNum,
    rel: u32,
}

impl PadicScalar {
    /// Wraps a ring element known modulo `p^N`.
    pub fn from_num(x: PadicNum) -> Self {
        Self::normalized(0, x, x.ring.prec)
    }

    /// Exact integer, with full relative precision.
    pub fn from_int(ring: PadicRing, n: i128) -> Self {
        if n == 0 {
            return PadicScalar { shift: ring.prec as i64, unit: ring.zero(), rel: 0 };
        }
        let v = vp_int(n, ring.p);
        let u = n / (ring.p as i128).pow(v);
        PadicScalar { shift: v as i64, unit: ring.int(u), rel: ring.prec }
    }

    /// `p^k`, exactly.
    pub fn p_pow(ring: PadicRing, k: i64) -> Self {
        PadicScalar { shift: k, unit: ring.one(), rel: ring.prec }
    }

    pub fn zero(ring: PadicRing, abs_prec: i64) -> Self {
        PadicScalar { shift: abs_prec, unit: ring.zero(), rel: 0 }
    }

    fn normalized(shift: i64, value: PadicNum, rel: u32) -> Self {
        let rel = rel.min(value.ring.prec);
        let v = value.valuation();
        if v >= rel {
            return PadicScalar { shift: shift + rel as i64, unit: value.ring.zero(), rel: 0 };
        }
        let unit = value.div_p_pow(v).expect("valuation checked");
        PadicScalar { shift: shift + v as i64, unit, rel: rel - v }
    }

    pub fn ring(&self) -> PadicRing {
        self.unit.ring
    }
    pub fn is_zero(&self) -> bool {
        self.rel == 0
    }
    /// Valuation; for a zero this is the absolute precision.
    pub fn valuation(&self) -> i64 {
        self.shift
    }
    pub fn unit(&self) -> PadicNum {
        self.unit
    }
    pub fn rel_prec(&self) -> u32 {
        self.rel
    }
    pub fn abs_prec(&self) -> i64 {
        self.shift + self.rel as i64
    }

    pub fn neg(&self) -> Self {
        PadicScalar { shift: self.shift, unit: -self.unit, rel: self.rel }
    }

    pub fn add(&self, o: &Self) -> Self {
        let (a, b) = if self.shift <= o.shift { (self, o) } else { (o, self) };
        let d = (b.shift - a.shift) as u64;
        let abs = a.abs_prec().min(b.abs_prec());
        let rel = (abs - a.shift).max(0) as u32;
        let bv = if d >= a.unit.ring.prec as u64 { a.unit.ring.zero() } else { b.unit.mul_p_pow(d as u32) };
        let bv = if b.rel == 0 { a.unit.ring.zero() } else { bv };
        let av = if a.rel == 0 { a.unit.ring.zero() } else { a.unit };
        Self::normalized(a.shift, av + bv, rel)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero(self.ring(), self.shift + o.shift);
        }
        PadicScalar { shift: self.shift + o.shift, unit: self.unit * o.unit, rel: self.rel.min(o.rel) }
    }

    pub fn mul_num(&self, x: &PadicNum) -> Self {
        self.mul(&Self::from_num(*x))
    }

    pub fn inv(&self) -> Result<Self, PadicError> {
        if self.is_zero() {
            return Err(PadicError::NonUnitInverse);
        }
        Ok(PadicScalar { shift: -self.shift, unit: self.unit.inv()?, rel: self.rel })
    }

    pub fn div(&self, o: &Self) -> Result<Self, PadicError> {
        Ok(self.mul(&o.inv()?))
    }

    pub fn powi(&self, e: i64) -> Result<Self, PadicError> {
        let base = if e < 0 { self.inv()? } else { *self };
        let mut r = PadicScalar { shift: 0, unit: self.ring().one(), rel: self.rel.max(1) };
        if self.is_zero() {
            return if e == 0 { Ok(r) } else { Ok(Self::zero(self.ring(), self.shift * e)) };
        }
        let k = e.unsigned_abs();
        r.shift = base.shift * k as i64;
        r.unit = base.unit.pow(k);
        r.rel = base.rel;
        Ok(r)
    }

    /// Converts to a ring element; returns it together with the number of
    /// digits lost (the gap between `N` and the known absolute precision).
    pub fn to_num(&self) -> Result<(PadicNum, u32), PadicError> {
        let ring = self.ring();
        let n = ring.prec as i64;
        if self.is_zero() {
            let lost = (n - self.shift).max(0) as u32;
            return Ok((ring.zero(), lost));
        }
        if self.shift < 0 {
            return Err(PadicError::NegativeValuation(self.shift));
        }
        let x = if self.shift >= n { ring.zero() } else { self.unit.mul_p_pow(self.shift as u32) };
        let lost = (n - self.abs_prec()).max(0) as u32;
        Ok((x, lost))
    }

    /// Valuation of `self - other`, capped at the common absolute precision.
    pub fn agreement(&self, other: &Self) -> i64 {
        let d = self.sub(other);
        d.shift
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "O({}^{})", self.ring().p, self.shift)
        } else {
            write!(f, "{}^{} * {} [rel {}]", self.ring().p, self.shift, self.unit, self.rel)
        }
    }
}

/// One precision-loss entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossEntry {
    pub stage: String,
    pub digits: u32,
}

/// Ledger of digits lost relative to a starting precision.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionBudget {
    pub start: u32,
    pub losses: Vec<LossEntry>,
}

impl PrecisionBudget {
    pub fn new(start: u32) -> Self {
        PrecisionBudget { start, losses: Vec::new() }
    }

    /// Records a loss; zero losses are not recorded.
    pub fn record(&mut self, stage: impl Into<String>, digits: u32) {
        if digits > 0 {
            self.losses.push(LossEntry { stage: stage.into(), digits });
        }
    }

    pub fn total_loss(&self) -> u32 {
        self.losses.iter().map(|l| l.digits).sum()
    }

    pub fn effective(&self) -> u32 {
        self.start.saturating_sub(self.total_loss())
    }

    pub fn merge(&mut self, other: &PrecisionBudget) {
        self.losses.extend(other.losses.iter().cloned());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: u64, n: u32) -> PadicRing {
        PadicRing::new(p, n, 1).unwrap()
    }

    #[test]
    fn inverse_of_two_mod_49() {
        let x = r(7, 2).int(2).inv().unwrap();
        assert_eq!(x.residue(), 25);
        assert_eq!(r(7, 2).int(7).inv(), Err(PadicError::NonUnitInverse));
    }

    #[test]
    fn teichmuller_examples() {
        let ring = r(7, 2);
        assert_eq!(ring.int(3).teichmuller().unwrap().residue(), 31);
        assert_eq!(ring.int(1).teichmuller().unwrap(), ring.one());
        assert_eq!(ring.int(6).teichmuller().unwrap().residue(), 48);
    }

    #[test]
    fn log_exp_round_trip() {
        let ring = r(7, 4);
        let l = ring.int(8).log().unwrap();
        assert_eq!(l.exp().unwrap(), ring.int(8));
        assert!(ring.one().log().unwrap().is_zero());
        let e7 = ring.int(7).exp().unwrap();
        assert_eq!(e7 * e7, ring.int(14).exp().unwrap());
        assert!(matches!(ring.int(3).log(), Err(PadicError::ConvergenceDomain(_))));
    }

    #[test]
    fn ppow_integer_consistency() {
        let ring = r(7, 2);
        assert_eq!(ring.int(3).ppow(&ring.int(2), 2).unwrap().residue(), 9);
        assert_eq!(ring.int(5).ppow(&ring.zero(), 0).unwrap(), ring.one());
    }

    #[test]
    fn hensel_examples() {
        assert_eq!(hensel_sqrt(5, 11, 2).unwrap().residue(), 48);
        assert_eq!(hensel_sqrt(4, 7, 3).unwrap().residue(), 2);
        assert_eq!(hensel_sqrt(5, 7, 3), Err(PadicError::NonResidue));
    }

    #[test]
    fn binomials() {
        let ring = r(7, 6);
        for j in 0..8 {
            let sign = if j % 2 == 0 { 1 } else { -1 };
            assert_eq!(pbinom(&ring.int(-1), j), ring.int(sign));
        }
        assert_eq!(pbinom(&ring.int(5), 2), ring.int(10));
        assert_eq!(pbinom(&ring.int(123), 0), ring.one());
        assert_eq!(binom_int(ring, 49, 7), ring.int(85900584));
    }

    #[test]
    fn quadratic_extension_basics() {
        let ring = PadicRing::new(7, 5, 2).unwrap();
        let w = ring.gen();
        assert!(w.is_unit());
        assert_eq!(w.pow(48), ring.one());
        assert_eq!(w.frobenius().frobenius(), w);
        let x = ring.from_coords([3, 5]);
        assert_eq!(x * x.inv().unwrap(), ring.one());
        assert_eq!((x * x.frobenius()).coords()[1], 0);
        let s = PadicNum::sqrt_int(ring, 5).unwrap();
        assert_eq!(s * s, ring.int(5));
    }

    #[test]
    fn scalar_arithmetic() {
        let ring = r(7, 6);
        let a = PadicScalar::from_int(ring, 49 * 3);
        assert_eq!(a.valuation(), 2);
        let b = a.inv().unwrap();
        assert_eq!(b.valuation(), -2);
        let one = a.mul(&b);
        assert_eq!(one.to_num().unwrap().0, ring.one());
        let s = PadicScalar::p_pow(ring, -1).add(&PadicScalar::from_int(ring, 1));
        assert_eq!(s.valuation(), -1);
        assert_eq!(s.abs_prec(), 5);
    }
}
