//! Built-in test forms: elliptic Eisenstein series, `Delta`, the weight-2
//! newform of an elliptic curve from point counts, Hilbert Eisenstein series
//! over the supported fields, and seeded random expansions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::PrimeSel;
use crate::padic::{PadicNum, PadicRing};
use crate::qexp::{hecke_constant, EllipticQExp, HilbertQExp, HilbertSpace};
use crate::weights::WeightCharacter;

/// Named generator of a test form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FormRecipe {
    EllipticEisenstein { k: u32 },
    Delta,
    PointCountNewform { curve: [i64; 5] },
    HilbertEisenstein { k: u32 },
    RandomDepleted { seed: u64 },
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Reduced fraction `(num, den)` with `den > 0`.
fn frac(num: i128, den: i128) -> Option<(i128, i128)> {
    if den == 0 {
        return None;
    }
    let g = gcd(num, den).max(1);
    let s = if den < 0 { -1 } else { 1 };
    Some((s * num / g, s * den / g))
}

fn frac_sub(a: (i128, i128), b: (i128, i128)) -> Option<(i128, i128)> {
    let g = gcd(a.1, b.1);
    let l = a.1.checked_mul(b.1 / g)?;
    let n = a.0.checked_mul(l / a.1)?.checked_sub(b.0.checked_mul(l / b.1)?)?;
    frac(n, l)
}

/// Bernoulli number `B_n` (with `B_1 = +1/2`) by the Akiyama-Tanigawa
/// algorithm; `None` on `i128` overflow.
pub fn bernoulli(n: usize) -> Option<(i128, i128)> {
    let mut a: Vec<(i128, i128)> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        a.push((1, m as i128 + 1));
        for j in (1..=m).rev() {
            let d = frac_sub(a[j - 1], a[j])?;
            a[j - 1] = frac(d.0.checked_mul(j as i128)?, d.1)?;
        }
    }
    Some(a[0])
}

fn sigma(n: u64, e: u32, ring: PadicRing) -> PadicNum {
    let mut s = ring.zero();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            s += ring.int(d as i128).pow(e as u64);
            if d * d != n {
                s += ring.int((n / d) as i128).pow(e as u64);
            }
        }
        d += 1;
    }
    s
}

/// `E_k = 1 - (2k / B_k) sum sigma_{k-1}(n) q^n`.
pub fn elliptic_eisenstein(k: u32, bound: u32, ring: PadicRing) -> Result<EllipticQExp> {
    if k < 4 || k % 2 == 1 {
        return Err(Error::Config(format!("Eisenstein series need even k >= 4, got {k}")));
    }
    let (bn, bd) = bernoulli(k as usize).ok_or_else(|| Error::Config(format!("B_{k} overflows")))?;
    // -2k / B_k = -2k bd / bn
    let (num, den) = frac(-2 * k as i128 * bd, bn).expect("B_k is nonzero for even k");
    let pp = ring.p() as i128;
    if den % pp == 0 {
        return Err(Error::BadPrime(ring.p()));
    }
    let c = ring.rational(num, den)?;
    let coeffs = (0..=bound as u64).map(|n| if n == 0 { ring.one() } else { c * sigma(n, k - 1, ring) }).collect();
    Ok(EllipticQExp::from_coeffs(ring, coeffs).with_weight(Some(WeightCharacter::classical(ring, &[k as i64]))))
}

/// `Delta = q prod (1 - q^n)^24`.
pub fn delta_form(bound: u32, ring: PadicRing) -> Result<EllipticQExp> {
    let b = bound as usize;
    let mut c = vec![ring.zero(); b + 1];
    if b >= 1 {
        c[1] = ring.one();
    }
    for n in 1..=b {
        for _ in 0..24 {
            for i in (n..=b).rev() {
                let t = c[i - n];
                c[i] -= t;
            }
        }
    }
    if b >= 7 {
        assert_eq!(c[7], ring.int(-16744), "Delta self-check failed");
    }
    Ok(EllipticQExp::from_coeffs(ring, c).with_weight(Some(WeightCharacter::classical(ring, &[12]))))
}

/// Discriminant of `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
pub fn discriminant(a: [i64; 5]) -> i128 {
    let [a1, a2, a3, a4, a6] = a.map(|x| x as i128);
    let b2 = a1 * a1 + 4 * a2;
    let b4 = 2 * a4 + a1 * a3;
    let b6 = a3 * a3 + 4 * a6;
    let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
    -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
}

/// `a_l = l + 1 - #E(F_l)`, counting the singular point at bad primes.
pub fn trace_of_frobenius(a: [i64; 5], l: u64) -> i64 {
    let l = l as i128;
    let [a1, a2, a3, a4, a6] = a.map(|x| (x as i128).rem_euclid(l));
    let mut count: i128 = 1;
    for x in 0..l {
        let rhs = (x * x % l * x + a2 * x % l * x + a4 * x + a6) % l;
        for y in 0..l {
            let lhs = (y * y + a1 * x % l * y + a3 * y) % l;
            if lhs == rhs {
                count += 1;
            }
        }
    }
    (l + 1 - count) as i64
}

fn small_primes(n: u64) -> Vec<u64> {
    (2..=n).filter(|&q| crate::padic::is_prime(q)).collect()
}

/// Weight-2 newform attached to an elliptic curve, from point counts.
pub fn pointcount_newform(curve: [i64; 5], bound: u32, ring: PadicRing) -> Result<EllipticQExp> {
    let disc = discriminant(curve);
    if disc == 0 {
        return Err(Error::SingularCurve);
    }
    let b = bound as u64;
    let mut a = vec![0i128; b as usize + 1];
    if b >= 1 {
        a[1] = 1;
    }
    let mut done = vec![false; b as usize + 1];
    if b >= 1 {
        done[1] = true;
    }
    for l in small_primes(b) {
        let al = trace_of_frobenius(curve, l) as i128;
        let bad = disc % l as i128 == 0;
        let (mut prev, mut cur) = (1i128, al);
        let mut q = l;
        while q <= b {
            a[q as usize] = cur;
            done[q as usize] = true;
            let next = if bad { al * cur } else { al * cur - l as i128 * prev };
            prev = cur;
            cur = next;
            q = match q.checked_mul(l) {
                Some(x) => x,
                None => break,
            };
        }
    }
    // multiplicativity over coprime prime powers
    for n in 2..=b {
        if done[n as usize] {
            continue;
        }
        let l = (2..=n).find(|d| n % d == 0).unwrap();
        let mut pe = 1;
        while n % (pe * l) == 0 {
            pe *= l;
        }
        a[n as usize] = a[pe as usize] * a[(n / pe) as usize];
        done[n as usize] = true;
    }
    Ok(EllipticQExp::from_coeffs(ring, a.iter().map(|&x| ring.int(x)).collect())
        .with_weight(Some(WeightCharacter::classical(ring, &[2]))))
}

/// Divisor series `a_beta = sum_{c | (beta) d} N(c)^(k-1)` on the inverse
/// different, constant term 0. For even `k` this is the parallel weight `k`
/// Eisenstein series; for odd `k` it is only a formal series with the same
/// Hecke recursion.
pub fn hilbert_divisor_series(space: &Arc<HilbertSpace>, k: u32) -> Result<HilbertQExp> {
    if k < 1 {
        return Err(Error::Config("weight must be positive".into()));
    }
    let ring = space.ring();
    let field = &space.field;
    let mut coeffs = Vec::with_capacity(space.len());
    for beta in space.index.elems() {
        if beta.x == 0 && beta.y == 0 {
            coeffs.push(ring.zero());
            continue;
        }
        let divs = field.ideal_divisors(beta, &[])?;
        let mut s = ring.zero();
        for (_, n) in divs {
            s += ring.int(n as i128).pow(k as u64 - 1);
        }
        coeffs.push(s);
    }
    let w = WeightCharacter::classical(ring, &[k as i64, k as i64]);
    Ok(HilbertQExp::from_coeffs(space, coeffs, space.bound())?.with_weight(Some(w)))
}

/// Parallel weight `k` Eisenstein series (even `k`), checked to be a
/// `T_0(p_1)`-eigenform with eigenvalue `1 + N(p_1)^(k-1)`.
pub fn hilbert_eisenstein(space: &Arc<HilbertSpace>, k: u32) -> Result<HilbertQExp> {
    if k % 2 == 1 {
        return Err(Error::Config(format!("Hilbert Eisenstein series need even weight, got {k}")));
    }
    let e = hilbert_divisor_series(space, k)?;
    let ring = space.ring();
    let c = hecke_constant(space, PrimeSel::P1, k, ring.one());
    let lambda = ring.one() + c;
    let t = e.t_op(PrimeSel::P1, c)?;
    let lhs = t.sub(&e.scale(lambda).truncate(t.bound()))?;
    // the constant term is a free parameter and does not satisfy the recursion
    let bad = lhs.coeffs().iter().skip(1).any(|x| !x.is_zero());
    if bad {
        return Err(Error::NotEigenform("Hilbert Eisenstein self-check failed".into()));
    }
    Ok(e)
}

fn random_unit(rng: &mut ChaCha8Rng, ring: PadicRing) -> PadicNum {
    let m = ring.modulus();
    loop {
        let x = ring.from_coords([rng.gen_range(0..m), if ring.degree() == 2 { rng.gen_range(0..m) } else { 0 }]);
        if x.is_unit() {
            return x;
        }
    }
}

/// Random unit coefficients on indices outside the selected prime(s).
pub fn random_depleted(seed: u64, space: &Arc<HilbertSpace>, which: PrimeSel) -> HilbertQExp {
    let ring = space.ring();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = HilbertQExp::from_fn(space, |_| random_unit(&mut rng, ring));
    f.deplete(which)
}

/// Random coefficients on the whole index set.
pub fn random_hilbert(seed: u64, space: &Arc<HilbertSpace>) -> HilbertQExp {
    let ring = space.ring();
    let m = ring.modulus();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HilbertQExp::from_fn(space, |_| {
        ring.from_coords([rng.gen_range(0..m), if ring.degree() == 2 { rng.gen_range(0..m) } else { 0 }])
    })
}

pub fn random_elliptic(seed: u64, ring: PadicRing, bound: u32) -> EllipticQExp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = ring.modulus();
    EllipticQExp::from_coeffs(ring, (0..=bound).map(|_| ring.from_coords([rng.gen_range(0..m), 0])).collect())
}

/// The conductor 11 curve `y^2 + y = x^3 - x^2 - 10x - 20`.
pub const CURVE_11A: [i64; 5] = [0, -1, 1, -10, -20];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, splitting_type, Elem, IdealTag};

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(2), Some((1, 6)));
        assert_eq!(bernoulli(4), Some((-1, 30)));
        assert_eq!(bernoulli(12), Some((-691, 2730)));
    }

    #[test]
    fn eisenstein_e4() {
        let ring = PadicRing::new(7, 6, 1).unwrap();
        let e4 = elliptic_eisenstein(4, 10, ring).unwrap();
        assert_eq!(e4.coeff(1).unwrap(), ring.int(240));
        assert_eq!(e4.coeff(2).unwrap(), ring.int(2160));
        assert_eq!(e4.deplete().coeff(7).unwrap(), ring.zero());
        let r691 = PadicRing::new(691, 2, 1).unwrap();
        assert!(matches!(elliptic_eisenstein(12, 5, r691), Err(Error::BadPrime(691))));
    }

    #[test]
    fn delta_coefficients() {
        let ring = PadicRing::new(7, 8, 1).unwrap();
        let d = delta_form(20, ring).unwrap();
        let tau = [0, 1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920];
        for (n, t) in tau.iter().enumerate() {
            assert_eq!(d.coeff(n as u32).unwrap(), ring.int(*t), "tau({n})");
        }
        assert_eq!(d.coeff(7).unwrap().valuation(), 1);
    }

    #[test]
    fn curve_11a() {
        let ring = PadicRing::new(7, 6, 1).unwrap();
        let f = pointcount_newform(CURVE_11A, 12, ring).unwrap();
        let expect = [0, 1, -2, -1, 2, 1, 2, -2, 0, -2, -2, 1, -2];
        for (n, a) in expect.iter().enumerate() {
            assert_eq!(f.coeff(n as u32).unwrap(), ring.int(*a), "a_{n}");
        }
        assert!(matches!(pointcount_newform([0, 0, 0, 0, 0], 5, ring), Err(Error::SingularCurve)));
    }

    #[test]
    fn hilbert_eisenstein_weight_2() {
        let f = make_field(5).unwrap();
        let s = splitting_type(&f, 11, 4).unwrap();
        let sp = HilbertSpace::new(f, s, IdealTag::InverseDifferent, 30).unwrap();
        let e = hilbert_eisenstein(&sp, 2).unwrap();
        assert_eq!(e.coeff(&Elem::from_dinv(5, 0, 1)).unwrap(), sp.ring().one());
        assert_eq!(e.zeta_star().coeff(1).unwrap(), sp.ring().int(2));
        hilbert_eisenstein(&sp, 8).unwrap();
    }

    #[test]
    fn random_forms_are_deterministic() {
        let f = make_field(5).unwrap();
        let s = splitting_type(&f, 7, 4).unwrap();
        let sp = HilbertSpace::new(f, s, IdealTag::InverseDifferent, 10).unwrap();
        let a = random_depleted(1, &sp, PrimeSel::P);
        assert_eq!(a, random_depleted(1, &sp, PrimeSel::P));
        assert_ne!(a, random_depleted(2, &sp, PrimeSel::P));
        assert_eq!(a.deplete(PrimeSel::P), a);
    }
}
