//! Real quadratic fields `Q(sqrt D)` with `D = 1 mod 4` and narrow class
//! number one, their totally positive elements, the splitting of `p`, and
//! ideal factorization for divisor sums.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{legendre, PadicNum, PadicRing};

/// Fields shipped with a certified narrow class number one.
pub const SUPPORTED_D: [i64; 11] = [5, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97];

/// Element `(x + y sqrt D) / (2D)` of `Q(sqrt D)`.
///
/// The fixed denominator `2D` makes every element of `O_L` and of the inverse
/// different integral in `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elem {
    pub d: i64,
    pub x: i64,
    pub y: i64,
}

impl Elem {
    pub fn zero(d: i64) -> Elem {
        Elem { d, x: 0, y: 0 }
    }
    pub fn one(d: i64) -> Elem {
        Elem { d, x: 2 * d, y: 0 }
    }
    pub fn int(d: i64, n: i64) -> Elem {
        Elem { d, x: 2 * d * n, y: 0 }
    }
    /// `sqrt D`.
    pub fn sqrt_d(d: i64) -> Elem {
        Elem { d, x: 0, y: 2 * d }
    }
    /// `a + b phi` with `phi = (1 + sqrt D) / 2`.
    pub fn from_ol(d: i64, a: i64, b: i64) -> Elem {
        Elem { d, x: d * (2 * a + b), y: d * b }
    }
    /// `(a + b phi) / sqrt D`.
    pub fn from_dinv(d: i64, a: i64, b: i64) -> Elem {
        Elem { d, x: b * d, y: 2 * a + b }
    }
    /// `(u + v sqrt D) / 2`.
    pub fn from_half(d: i64, u: i64, v: i64) -> Elem {
        Elem { d, x: d * u, y: d * v }
    }

    /// Coordinates on `{1, phi}` if the element is integral.
    pub fn ol_coords(&self) -> Option<(i64, i64)> {
        let d = self.d;
        if self.x % d != 0 || self.y % d != 0 {
            return None;
        }
        let (u, v) = (self.x / d, self.y / d);
        if (u - v) % 2 != 0 {
            return None;
        }
        Some(((u - v) / 2, v))
    }

    /// Coordinates `(a, b)` with `self = (a + b phi) / sqrt D`, if the element
    /// lies in the inverse different.
    pub fn dinv_coords(&self) -> Option<(i64, i64)> {
        self.times_sqrt_d().ol_coords()
    }

    pub fn is_integral(&self) -> bool {
        self.ol_coords().is_some()
    }

    pub fn times_sqrt_d(&self) -> Elem {
        Elem { d: self.d, x: self.y * self.d, y: self.x }
    }

    pub fn conj(&self) -> Elem {
        Elem { d: self.d, x: self.x, y: -self.y }
    }

    /// Trace, for elements of the inverse different or of `O_L`.
    pub fn trace(&self) -> i64 {
        debug_assert_eq!(self.x % self.d, 0);
        self.x / self.d
    }

    /// Norm as a reduced fraction `(num, den)`.
    pub fn norm(&self) -> (i128, i128) {
        let num = (self.x as i128).pow(2) - self.d as i128 * (self.y as i128).pow(2);
        let den = 4 * (self.d as i128).pow(2);
        let g = gcd_i128(num.abs(), den);
        (num / g, den / g)
    }

    /// Norm of an integral element.
    pub fn norm_int(&self) -> i128 {
        let (n, d) = self.norm();
        assert_eq!(d, 1, "norm of a non-integral element");
        n
    }

    pub fn is_totally_positive(&self) -> bool {
        self.x > 0 && (self.x as i128).pow(2) > self.d as i128 * (self.y as i128).pow(2)
    }

    /// Real embeddings, `sqrt D -> +sqrt D` first.
    pub fn real_embeddings(&self) -> [f64; 2] {
        let s = (self.d as f64).sqrt();
        let den = 2.0 * self.d as f64;
        [(self.x as f64 + self.y as f64 * s) / den, (self.x as f64 - self.y as f64 * s) / den]
    }

    pub fn add(&self, o: &Elem) -> Elem {
        Elem { d: self.d, x: self.x + o.x, y: self.y + o.y }
    }
    pub fn sub(&self, o: &Elem) -> Elem {
        Elem { d: self.d, x: self.x - o.x, y: self.y - o.y }
    }
    pub fn scale(&self, n: i64) -> Elem {
        Elem { d: self.d, x: self.x * n, y: self.y * n }
    }

    /// Product, when it is representable with denominator `2D`.
    pub fn mul(&self, o: &Elem) -> Option<Elem> {
        let d = self.d as i128;
        let (x1, y1, x2, y2) = (self.x as i128, self.y as i128, o.x as i128, o.y as i128);
        let xn = x1 * x2 + d * y1 * y2;
        let yn = x1 * y2 + x2 * y1;
        if xn % (2 * d) != 0 || yn % (2 * d) != 0 {
            return None;
        }
        Some(Elem { d: self.d, x: i64::try_from(xn / (2 * d)).ok()?, y: i64::try_from(yn / (2 * d)).ok()? })
    }

    /// Quotient, when representable.
    pub fn div(&self, o: &Elem) -> Option<Elem> {
        let (n, den) = o.norm();
        if n == 0 {
            return None;
        }
        // self / o = self * conj(o) / N(o)
        let c = o.conj();
        let d = self.d as i128;
        let (x1, y1, x2, y2) = (self.x as i128, self.y as i128, c.x as i128, c.y as i128);
        let xn = (x1 * x2 + d * y1 * y2) * den;
        let yn = (x1 * y2 + x2 * y1) * den;
        let q = 2 * d * n;
        if xn % q != 0 || yn % q != 0 {
            return None;
        }
        Some(Elem { d: self.d, x: i64::try_from(xn / q).ok()?, y: i64::try_from(yn / q).ok()? })
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}*sqrt{})/{}", self.x, self.y, self.d, 2 * self.d)
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

fn isqrt(n: i128) -> i128 {
    if n < 0 {
        return -1;
    }
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// A real quadratic field from the supported table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealQuadraticField {
    pub d: i64,
    pub disc: i64,
    /// Fundamental unit `> 1`.
    pub unit: Elem,
    pub unit_norm: i64,
    pub narrow_class_number_one: bool,
}

fn squarefree(n: i64) -> bool {
    let mut k = 2;
    while k * k <= n {
        if n % (k * k) == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// Builds and certifies a field from the supported table.
pub fn make_field(d: i64) -> Result<RealQuadraticField> {
    if d <= 1 || !squarefree(d) {
        return Err(Error::UnsupportedField(format!("D = {d} is not a squarefree integer > 1")));
    }
    if !SUPPORTED_D.contains(&d) {
        return Err(Error::UnsupportedField(format!(
            "D = {d} is outside the narrow class number one table {SUPPORTED_D:?}"
        )));
    }
    let (u, v, n) = fundamental_unit(d)
        .ok_or_else(|| Error::UnsupportedField(format!("no fundamental unit found for D = {d}")))?;
    let unit = Elem::from_half(d, u, v);
    let mut field = RealQuadraticField { d, disc: d, unit, unit_norm: n, narrow_class_number_one: false };
    field.narrow_class_number_one = n == -1 && field.minkowski_primes_principal();
    if !field.narrow_class_number_one {
        return Err(Error::UnsupportedField(format!("narrow class number one not certified for D = {d}")));
    }
    Ok(field)
}

/// Smallest `(u + v sqrt D)/2 > 1` with `u^2 - D v^2 = +-4`.
fn fundamental_unit(d: i64) -> Option<(i64, i64, i64)> {
    for v in 1..10_000_000i64 {
        let dv2 = d as i128 * (v as i128).pow(2);
        for (sign, t) in [(-1, dv2 - 4), (1, dv2 + 4)] {
            let u = isqrt(t);
            if u > 0 && u * u == t && (u - v as i128) % 2 == 0 {
                return Some((u as i64, v, sign));
            }
        }
    }
    None
}

impl RealQuadraticField {
    /// Every prime below the Minkowski bound that is not inert has a
    /// generator of norm `+-l`, so the class group is trivial.
    fn minkowski_primes_principal(&self) -> bool {
        let bound = (self.disc as f64).sqrt() / 2.0;
        let mut l = 2i64;
        while (l as f64) <= bound {
            if crate::padic::is_prime(l as u64) && self.splitting_symbol(l) != -1 && self.element_of_norm(l).is_none() {
                return false;
            }
            l += 1;
        }
        true
    }

    /// Kronecker symbol `(disc / l)`.
    pub fn splitting_symbol(&self, l: i64) -> i32 {
        if self.disc % l == 0 {
            return 0;
        }
        if l == 2 {
            return if self.d.rem_euclid(8) == 1 { 1 } else { -1 };
        }
        legendre(self.d as i128, l as u64)
    }

    /// An integral element of norm `+-n`, searched in a fundamental domain
    /// for the unit group.
    pub fn element_of_norm(&self, n: i64) -> Option<Elem> {
        let eps = self.unit.real_embeddings()[0];
        let vmax = (2.0 * (n as f64).sqrt() * (eps + 1.0) / (self.d as f64).sqrt()) as i64 + 2;
        for v in 0..=vmax {
            let dv2 = self.d as i128 * (v as i128).pow(2);
            for t in [dv2 + 4 * n as i128, dv2 - 4 * n as i128] {
                let u = isqrt(t);
                if u >= 0 && u * u == t && (u - v as i128) % 2 == 0 {
                    return Some(Elem::from_half(self.d, u as i64, v));
                }
            }
        }
        None
    }

    /// Totally positive generator of norm `n` with the smallest trace, first
    /// in order of increasing `y`.
    pub fn totally_positive_of_norm(&self, n: i64) -> Option<Elem> {
        let mut u = 1i64;
        loop {
            let t = (u as i128).pow(2) - 4 * n as i128;
            if t >= 0 && t % self.d as i128 == 0 {
                let v2 = t / self.d as i128;
                let v = isqrt(v2);
                if v * v == v2 && (u as i128 - v) % 2 == 0 {
                    return Some(Elem::from_half(self.d, u, -(v as i64)));
                }
            }
            u += 1;
            if u > 1_000_000 {
                return None;
            }
        }
    }
}

/// Which primes above `p` an operator refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrimeSel {
    /// `p_1`; equals `p` when `p` is inert.
    P1,
    /// `p_2`; equals `p` when `p` is inert.
    P2,
    /// `p O_L`.
    P,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SplitKind {
    Split { pi1: Elem, pi2: Elem },
    Inert,
}

/// Splitting of an odd unramified prime with its two `p`-adic embeddings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeSplitting {
    pub p: u64,
    pub kind: SplitKind,
    pub ring: PadicRing,
    /// `sigma_i(sqrt D)`.
    pub sqrt_d: [PadicNum; 2],
    inv_2d: PadicNum,
    d: i64,
}

/// Splitting type of `p` in `L` with embeddings at precision `N`.
pub fn splitting_type(field: &RealQuadraticField, p: u64, prec: u32) -> Result<PrimeSplitting> {
    if p == 2 {
        return Err(Error::UnsupportedPrime("p = 2 is not supported".into()));
    }
    if !crate::padic::is_prime(p) {
        return Err(Error::UnsupportedPrime(format!("{p} is not prime")));
    }
    if field.disc % p as i64 == 0 {
        return Err(Error::RamifiedPrime(p));
    }
    let d = field.d;
    if legendre(d as i128, p) == 1 {
        let ring = PadicRing::new(p, prec, 1)?;
        let s = PadicNum::sqrt_int(ring, d as i128)?;
        let inv_2d = ring.int(2 * d as i128).inv()?;
        let pi = field
            .totally_positive_of_norm(p as i64)
            .ok_or_else(|| Error::UnsupportedField(format!("no totally positive element of norm {p}")))?;
        let mut sp = PrimeSplitting {
            p,
            kind: SplitKind::Inert,
            ring,
            sqrt_d: [s, -s],
            inv_2d,
            d,
        };
        let (pi1, pi2) = if sp.embed(0, &pi).valuation() >= 1 { (pi, pi.conj()) } else { (pi.conj(), pi) };
        sp.kind = SplitKind::Split { pi1, pi2 };
        Ok(sp)
    } else {
        let ring = PadicRing::new(p, prec, 2)?;
        let s = PadicNum::sqrt_int(ring, d as i128)?;
        let inv_2d = ring.int(2 * d as i128).inv()?;
        Ok(PrimeSplitting { p, kind: SplitKind::Inert, ring, sqrt_d: [s, s.frobenius()], inv_2d, d })
    }
}

impl PrimeSplitting {
    pub fn is_split(&self) -> bool {
        matches!(self.kind, SplitKind::Split { .. })
    }

    /// `sigma_i(beta)` for `i` in `{0, 1}`.
    pub fn embed(&self, i: usize, b: &Elem) -> PadicNum {
        let r = self.ring;
        (r.int(b.x as i128) + r.int(b.y as i128) * self.sqrt_d[i]) * self.inv_2d
    }

    /// Totally positive generator of the selected prime.
    pub fn generator(&self, which: PrimeSel) -> Elem {
        match (&self.kind, which) {
            (SplitKind::Split { pi1, .. }, PrimeSel::P1) => *pi1,
            (SplitKind::Split { pi2, .. }, PrimeSel::P2) => *pi2,
            _ => Elem::int(self.d, self.p as i64),
        }
    }

    /// Norm of the selected prime ideal.
    pub fn norm(&self, which: PrimeSel) -> u64 {
        match (&self.kind, which) {
            (SplitKind::Split { .. }, PrimeSel::P) => self.p * self.p,
            (SplitKind::Split { .. }, _) => self.p,
            (SplitKind::Inert, _) => self.p * self.p,
        }
    }

    /// Whether `beta` lies in the selected prime (for `P`, in some prime above `p`).
    pub fn in_prime(&self, which: PrimeSel, b: &Elem) -> bool {
        match (&self.kind, which) {
            (SplitKind::Split { .. }, PrimeSel::P1) => self.embed(0, b).valuation() >= 1,
            (SplitKind::Split { .. }, PrimeSel::P2) => self.embed(1, b).valuation() >= 1,
            (SplitKind::Split { .. }, PrimeSel::P) => {
                self.embed(0, b).valuation() >= 1 || self.embed(1, b).valuation() >= 1
            }
            (SplitKind::Inert, _) => self.embed(0, b).valuation() >= 1,
        }
    }
}

/// Lattice used as a q-expansion index module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdealTag {
    /// `O_L`.
    Ring,
    /// The inverse different.
    InverseDifferent,
    /// `gamma O_L`.
    Principal(Elem),
}

impl IdealTag {
    fn basis(&self, d: i64) -> Result<[Elem; 2]> {
        let one = Elem::one(d);
        let phi = Elem::from_ol(d, 0, 1);
        match self {
            IdealTag::Ring => Ok([one, phi]),
            IdealTag::InverseDifferent => Ok([Elem::from_dinv(d, 1, 0), Elem::from_dinv(d, 0, 1)]),
            IdealTag::Principal(g) => {
                let a = g.mul(&one);
                let b = g.mul(&phi);
                match (a, b) {
                    (Some(a), Some(b)) => Ok([a, b]),
                    _ => Err(Error::Config(format!("principal ideal generated by {g} is not representable"))),
                }
            }
        }
    }
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, s, t) = ext_gcd(b, a % b);
        (g, t, s - (a / b) * t)
    }
}

/// Hermite form `{(m a, m b + n c)}` of a rank-2 lattice in `(x, y)` space.
fn hermite(v1: Elem, v2: Elem) -> (i64, i64, i64) {
    let (g, s, t) = ext_gcd(v1.x, v2.x);
    let w1y = s * v1.y + t * v2.y;
    let c = ((v2.x / g) * v1.y - (v1.x / g) * v2.y).abs();
    (g, w1y.rem_euclid(c), c)
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct TraceLevel {
    y0: i64,
    count: usize,
    offset: usize,
}

/// Zero and the totally positive elements of an ideal with trace at most `B`,
/// sorted by trace and then by the real embedding `sqrt D -> +sqrt D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    pub d: i64,
    pub tag: IdealTag,
    pub bound: u32,
    a: i64,
    b: i64,
    c: i64,
    levels: Vec<TraceLevel>,
    elems: Vec<Elem>,
}

impl IndexSet {
    pub fn new(field: &RealQuadraticField, tag: IdealTag, bound: u32) -> Result<IndexSet> {
        let d = field.d;
        let [v1, v2] = tag.basis(d)?;
        let (a, b, c) = hermite(v1, v2);
        let mut levels = Vec::with_capacity(bound as usize + 1);
        let mut elems = Vec::new();
        for t in 0..=bound as i64 {
            let offset = elems.len();
            if t == 0 {
                elems.push(Elem::zero(d));
                levels.push(TraceLevel { y0: 0, count: 1, offset });
                continue;
            }
            let x = t * d;
            if x % a != 0 {
                levels.push(TraceLevel { y0: 0, count: 0, offset });
                continue;
            }
            let m = x / a;
            let ymax = isqrt(d as i128 * (t as i128).pow(2) - 1) as i64;
            let r = (m * b).rem_euclid(c);
            let y0 = -ymax + (r - (-ymax)).rem_euclid(c);
            let mut count = 0;
            let mut y = y0;
            while y <= ymax {
                elems.push(Elem { d, x, y });
                count += 1;
                y += c;
            }
            levels.push(TraceLevel { y0, count, offset });
        }
        Ok(IndexSet { d, tag, bound, a, b, c, levels, elems })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }
    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }
    pub fn elems(&self) -> &[Elem] {
        &self.elems
    }
    pub fn get(&self, i: usize) -> Elem {
        self.elems[i]
    }

    /// Positions of the elements with trace exactly `t`.
    pub fn trace_range(&self, t: u32) -> std::ops::Range<usize> {
        match self.levels.get(t as usize) {
            Some(l) => l.offset..l.offset + l.count,
            None => 0..0,
        }
    }

    pub fn position(&self, e: &Elem) -> Option<usize> {
        if e.d != self.d || e.x % self.d != 0 {
            return None;
        }
        let t = e.x / self.d;
        if t < 0 || t > self.bound as i64 {
            return None;
        }
        let l = &self.levels[t as usize];
        if l.count == 0 {
            return None;
        }
        let k = e.y - l.y0;
        if k < 0 || k % if t == 0 { 1 } else { self.c } != 0 {
            return None;
        }
        let k = if t == 0 { k } else { k / self.c } as usize;
        if k < l.count {
            Some(l.offset + k)
        } else {
            None
        }
    }

    /// Whether `e` lies in the underlying lattice (any trace or sign).
    pub fn in_lattice(&self, e: &Elem) -> bool {
        if e.x % self.a != 0 {
            return false;
        }
        let m = e.x / self.a;
        (e.y - m * self.b).rem_euclid(self.c) == 0
    }
}

/// Prime ideal of `O_L`: `root` is `None` for inert and ramified primes and
/// otherwise the residue of `phi` modulo the prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeIdeal {
    pub ell: u64,
    pub root: Option<u64>,
    pub norm: u64,
}

/// Integral ideal as a product of prime powers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Ideal {
    pub factors: BTreeMap<PrimeIdeal, u32>,
}

impl Ideal {
    pub fn unit() -> Ideal {
        Ideal::default()
    }
    pub fn norm(&self) -> u128 {
        self.factors.iter().map(|(p, e)| (p.norm as u128).pow(*e)).product()
    }
}

impl fmt::Display for Ideal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "(1)");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(p, e)| match p.root {
                Some(r) => format!("P({},{})^{}", p.ell, r, e),
                None => format!("P({})^{}", p.ell, e),
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod_u64(r, b, m);
        }
        b = mulmod_u64(b, b, m);
        e >>= 1;
    }
    r
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'w: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u64(x, x, n);
            if x == n - 1 {
                continue 'w;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        return 2;
    }
    for c in 1u64.. {
        let f = |x: u64| (mulmod_u64(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u64, 2u64, 1u64);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u64(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!()
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Prime factorization of a positive integer.
pub fn factor_u64(n: u64) -> BTreeMap<u64, u32> {
    let mut out = BTreeMap::new();
    let mut stack = vec![n];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if m < 1_000_000 {
            let mut m = m;
            let mut d = 2;
            while d * d <= m {
                while m % d == 0 {
                    *out.entry(d).or_insert(0) += 1;
                    m /= d;
                }
                d += 1;
            }
            if m > 1 {
                *out.entry(m).or_insert(0) += 1;
            }
            continue;
        }
        if is_prime_u64(m) {
            *out.entry(m).or_insert(0) += 1;
            continue;
        }
        let f = pollard_rho(m);
        stack.push(f);
        stack.push(m / f);
    }
    out
}

impl RealQuadraticField {
    /// Prime factorization of the principal ideal `(gamma)`, `gamma` integral.
    pub fn factor_principal(&self, gamma: &Elem) -> Result<Vec<(PrimeIdeal, u32)>> {
        let (a, b) = gamma
            .ol_coords()
            .ok_or_else(|| Error::Config(format!("{gamma} is not integral")))?;
        if a == 0 && b == 0 {
            return Err(Error::Config("cannot factor the zero ideal".into()));
        }
        let n = gamma.norm_int().unsigned_abs();
        let n = u64::try_from(n).map_err(|_| Error::FactorizationOverflow(n.to_string()))?;
        let m = (self.d - 1) / 4;
        let mut out = Vec::new();
        for (ell, e) in factor_u64(n) {
            let l = ell as i64;
            match self.splitting_symbol(l) {
                0 => out.push((PrimeIdeal { ell, root: None, norm: ell }, e)),
                -1 => out.push((PrimeIdeal { ell, root: None, norm: ell * ell }, e / 2)),
                _ => {
                    // roots of X^2 - X - m mod ell label the two primes
                    let roots: Vec<u64> = (0..ell)
                        .filter(|&r| {
                            let r = r as i128;
                            (r * r - r - m as i128).rem_euclid(l as i128) == 0
                        })
                        .collect();
                    let content = {
                        let (mut ca, mut cb, mut c) = (a as i128, b as i128, 0u32);
                        while ca % l as i128 == 0 && cb % l as i128 == 0 {
                            ca /= l as i128;
                            cb /= l as i128;
                            c += 1;
                        }
                        (ca, cb, c)
                    };
                    let (pa, pb, c) = content;
                    let rest = e - 2 * c;
                    for &r in &roots {
                        let inside = (pa + pb * r as i128).rem_euclid(l as i128) == 0;
                        let exp = c + if inside { rest } else { 0 };
                        if exp > 0 {
                            out.push((PrimeIdeal { ell, root: Some(r), norm: ell }, exp));
                        }
                    }
                }
            }
        }
        out.retain(|(_, e)| *e > 0);
        Ok(out)
    }

    /// Integral ideal divisors of `(beta) d`, skipping primes above `aux`.
    pub fn ideal_divisors(&self, beta: &Elem, aux: &[u64]) -> Result<Vec<(Ideal, u128)>> {
        let gamma = beta.times_sqrt_d();
        let fac = self.factor_principal(&gamma)?;
        let mut divs = vec![Ideal::unit()];
        for (pr, e) in fac {
            if aux.contains(&pr.ell) {
                continue;
            }
            let mut next = Vec::with_capacity(divs.len() * (e as usize + 1));
            for dvs in &divs {
                for k in 0..=e {
                    let mut i = dvs.clone();
                    if k > 0 {
                        i.factors.insert(pr, k);
                    }
                    next.push(i);
                }
            }
            divs = next;
        }
        let mut out: Vec<(Ideal, u128)> = divs.into_iter().map(|i| {
            let n = i.norm();
            (i, n)
        }).collect();
        out.sort_by(|x, y| x.1.cmp(&y.1).then(x.0.cmp(&y.0)));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_examples() {
        let f = make_field(5).unwrap();
        assert_eq!(f.disc, 5);
        assert_eq!(f.unit, Elem::from_ol(5, 0, 1));
        assert_eq!(f.unit_norm, -1);
        assert!(make_field(4).is_err());
        assert_eq!(make_field(13).unwrap().disc, 13);
        for d in SUPPORTED_D {
            assert!(make_field(d).unwrap().narrow_class_number_one);
        }
    }

    #[test]
    fn splitting_examples() {
        let f = make_field(5).unwrap();
        let s = splitting_type(&f, 11, 4).unwrap();
        let SplitKind::Split { pi1, pi2 } = s.kind else { panic!("11 splits") };
        assert_eq!(pi1.norm_int(), 11);
        assert_eq!(pi2.norm_int(), 11);
        assert!(pi1.is_totally_positive() && pi2.is_totally_positive());
        assert_eq!(s.embed(0, &pi1).valuation(), 1);
        assert_eq!(s.embed(1, &pi1).valuation(), 0);
        // 4 - sqrt5 generates the same prime as pi1
        let alt = Elem::from_half(5, 8, -2);
        assert!(s.in_prime(PrimeSel::P1, &alt));
        assert!(alt.div(&pi1).unwrap().is_integral());
        assert_eq!(alt.div(&pi1).unwrap().norm_int().abs(), 1);
        assert!(matches!(splitting_type(&f, 7, 3).unwrap().kind, SplitKind::Inert));
        assert_eq!(splitting_type(&f, 5, 3), Err(Error::RamifiedPrime(5)));
    }

    #[test]
    fn phi_embedding_mod_11() {
        let f = make_field(5).unwrap();
        let s = splitting_type(&f, 11, 1).unwrap();
        assert_eq!(s.embed(0, &Elem::from_ol(5, 0, 1)).residue(), 8);
    }

    #[test]
    fn enumeration_examples() {
        let f = make_field(5).unwrap();
        let ix = IndexSet::new(&f, IdealTag::InverseDifferent, 1).unwrap();
        let mut want = [Elem::zero(5), Elem::from_dinv(5, -1, 1), Elem::from_dinv(5, 0, 1)];
        want.sort_by_key(|e| (e.x, e.y));
        assert_eq!(ix.elems(), &want[..]);
        let ol = IndexSet::new(&f, IdealTag::Ring, 2).unwrap();
        assert_eq!(ol.elems(), &[Elem::zero(5), Elem::one(5)]);
        for e in ix.elems() {
            assert_eq!(ix.position(e), ix.elems().iter().position(|x| x == e));
        }
    }

    #[test]
    fn divisor_examples() {
        let f = make_field(5).unwrap();
        let d = f.ideal_divisors(&Elem::from_dinv(5, 0, 1), &[]).unwrap();
        assert_eq!(d, vec![(Ideal::unit(), 1)]);
        let d = f.ideal_divisors(&Elem::one(5), &[]).unwrap();
        assert_eq!(d.iter().map(|x| x.1).collect::<Vec<_>>(), vec![1, 5]);
        let g = Elem::from_dinv(5, 3, 4);
        let u = g.mul(&f.unit).unwrap();
        assert_eq!(f.ideal_divisors(&g, &[]).unwrap(), f.ideal_divisors(&u, &[]).unwrap());
    }

    #[test]
    fn factorization_helper() {
        let f = factor_u64(600851475143);
        assert_eq!(f.keys().copied().collect::<Vec<_>>(), vec![71, 839, 1471, 6857]);
        let big = 4294967291u64 * 4294967279u64;
        assert_eq!(factor_u64(big).len(), 2);
    }
}
