//! Weight characters and classical weight pairs.
//!
//! A weight is stored per embedding as an analytic exponent `u` (an element
//! of `Z_p`) and a finite part `chi` (an exponent of the Teichmuller
//! character); `t -> w(t)^chi exp(u log <t>)`. Classical integer weights keep
//! their integer vector alongside.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{PadicNum, PadicRing};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightCharacter {
    u: Vec<PadicNum>,
    chi: Vec<i64>,
    classical: Option<Vec<i64>>,
}

impl WeightCharacter {
    /// Integer weight `(k_1, ..., k_d)`; `ring` is any ring over the right
    /// `p` and `N` (the exponents live in its degree-1 base).
    pub fn classical(ring: PadicRing, k: &[i64]) -> Self {
        let base = ring.base();
        WeightCharacter {
            u: k.iter().map(|&x| base.int(x as i128)).collect(),
            chi: k.to_vec(),
            classical: Some(k.to_vec()),
        }
    }

    /// Arbitrary analytic weight. If every `u` is the image of a small
    /// integer congruent to its `chi`, the classical shortcut is filled in.
    pub fn analytic(u: Vec<PadicNum>, chi: Vec<i64>) -> Result<Self> {
        if u.len() != chi.len() || u.is_empty() {
            return Err(Error::WeightMismatch("u and chi need the same positive length".into()));
        }
        if u.iter().any(|x| x.ring().degree() != 1 || x.ring() != u[0].ring()) {
            return Err(Error::WeightMismatch("analytic exponents must share one Z_p ring".into()));
        }
        let ring = u[0].ring();
        let ord = (ring.p() - 1) as i64;
        let ints: Vec<i64> = u.iter().map(|x| x.to_i128() as i64).collect();
        let classical = if ints.iter().zip(&chi).all(|(k, c)| (k - c).rem_euclid(ord) == 0 && k.abs() < 1 << 20) {
            Some(ints)
        } else {
            None
        };
        Ok(WeightCharacter { u, chi, classical })
    }

    /// Number of embeddings (2 for Hilbert, 1 for elliptic weights).
    pub fn dim(&self) -> usize {
        self.u.len()
    }
    pub fn u(&self, i: usize) -> PadicNum {
        self.u[i]
    }
    pub fn chi(&self, i: usize) -> i64 {
        self.chi[i]
    }
    pub fn classical_value(&self) -> Option<&[i64]> {
        self.classical.as_deref()
    }
    pub fn ring(&self) -> PadicRing {
        self.u[0].ring()
    }

    fn combine(&self, o: &Self, a: i64, b: i64) -> Result<Self> {
        if self.dim() != o.dim() || self.ring() != o.ring() {
            return Err(Error::WeightMismatch("characters over different data".into()));
        }
        let ring = self.ring();
        let u = self.u.iter().zip(&o.u).map(|(x, y)| *x * ring.int(a as i128) + *y * ring.int(b as i128)).collect();
        let chi = self.chi.iter().zip(&o.chi).map(|(x, y)| a * x + b * y).collect();
        let classical = match (&self.classical, &o.classical) {
            (Some(x), Some(y)) => Some(x.iter().zip(y).map(|(x, y)| a * x + b * y).collect()),
            _ => None,
        };
        Ok(WeightCharacter { u, chi, classical })
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.combine(o, 1, 1)
    }

    /// `k + 2r`.
    pub fn add2r(&self, r: &Self) -> Result<Self> {
        self.combine(r, 1, 2)
    }

    /// `k + n * sigma_i`.
    pub fn shift(&self, i: usize, n: i64) -> Self {
        let mut w = self.clone();
        w.u[i] += self.ring().int(n as i128);
        w.chi[i] += n;
        if let Some(c) = &mut w.classical {
            c[i] += n;
        }
        w
    }

    /// Restriction to the diagonal: sums over embeddings.
    pub fn restrict(&self) -> Self {
        let ring = self.ring();
        WeightCharacter {
            u: vec![self.u.iter().fold(ring.zero(), |a, b| a + *b)],
            chi: vec![self.chi.iter().sum()],
            classical: self.classical.as_ref().map(|c| vec![c.iter().sum()]),
        }
    }
}

impl fmt::Display for WeightCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.classical {
            Some(c) => write!(f, "{c:?}"),
            None => {
                let parts: Vec<String> =
                    self.u.iter().zip(&self.chi).map(|(u, c)| format!("({c}, {})", u.residue())).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

/// `chi(k) + 2 chi(r)` or the diagonal restriction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftOp {
    Add2r,
    Restrict,
}

pub fn char_shift(k: &WeightCharacter, r: &WeightCharacter, op: ShiftOp) -> Result<WeightCharacter> {
    match op {
        ShiftOp::Add2r => k.add2r(r),
        ShiftOp::Restrict => Ok(k.restrict()),
    }
}

/// Hilbert weight `(v, n)` with `l = 2v + n(1,1)` and elliptic weight `(w, m)`
/// with `k = 2w + m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightPair {
    pub v: [i64; 2],
    pub n: i64,
    pub w: i64,
    pub m: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairClass {
    /// `k = l_1 + l_2 + 2t`.
    FDominated { t: i64 },
    /// `k = l_1 + l_2 - 2(s+1)`; `special` marks `l = (2,2), k = 2`.
    Balanced { s: i64, special: bool },
    Neither,
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairClass::FDominated { t } => write!(f, "F-dominated, t={t}"),
            PairClass::Balanced { s, special: false } => write!(f, "balanced, s={s}"),
            PairClass::Balanced { s, special: true } => write!(f, "balanced, s={s} (parallel weight 2, k = 2)"),
            PairClass::Neither => write!(f, "neither balanced nor F-dominated"),
        }
    }
}

impl WeightPair {
    /// Recovers `(v, n), (w, m)` from `l` and `k`, taking `n = l_1 mod 2`
    /// and `m = 2n`.
    pub fn from_lk(l: [i64; 2], k: i64) -> Result<Self> {
        if (l[0] - l[1]) % 2 != 0 {
            return Err(Error::WeightMismatch(format!("l = {l:?} has components of different parity")));
        }
        let n = l[0].rem_euclid(2);
        let m = 2 * n;
        if (k - m) % 2 != 0 {
            return Err(Error::CentralCharMismatch { m: k.rem_euclid(2), n });
        }
        Ok(WeightPair { v: [(l[0] - n) / 2, (l[1] - n) / 2], n, w: (k - m) / 2, m })
    }

    pub fn l(&self) -> [i64; 2] {
        [2 * self.v[0] + self.n, 2 * self.v[1] + self.n]
    }

    pub fn k(&self) -> i64 {
        2 * self.w + self.m
    }

    pub fn classify(&self) -> Result<PairClass> {
        classify_pair(self)
    }
}

pub fn classify_pair(pair: &WeightPair) -> Result<PairClass> {
    if pair.m != 2 * pair.n {
        return Err(Error::CentralCharMismatch { m: pair.m, n: pair.n });
    }
    let l = pair.l();
    let k = pair.k();
    let d = k - l[0] - l[1];
    if d % 2 != 0 {
        return Ok(PairClass::Neither);
    }
    if d >= 0 {
        return Ok(PairClass::FDominated { t: d / 2 });
    }
    let s = -d / 2 - 1;
    if s <= l[0].min(l[1]) - 2 {
        return Ok(PairClass::Balanced { s, special: l == [2, 2] && k == 2 });
    }
    Ok(PairClass::Neither)
}

/// Output of [`rho_lambda`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RhoLambda {
    pub rho: PadicNum,
    pub lambda: PadicNum,
    /// `rho` and `lambda` as integers when both weights are classical.
    pub rho_int: Option<i64>,
    pub lambda_int: Option<i128>,
    /// `lambda` is not a unit.
    pub degenerate: bool,
}

/// `rho = u_k1 + u_r1 + u_k2 + u_r2` and `lambda = prod_{i=0}^{n} (rho - i)`.
pub fn rho_lambda(k: &WeightCharacter, r: &WeightCharacter, n: u32) -> Result<RhoLambda> {
    let s = k.add(r)?.restrict();
    let ring = s.ring();
    let rho = s.u(0);
    let lambda = (0..=n as i128).fold(ring.one(), |acc, i| acc * (rho - ring.int(i)));
    let rho_int = s.classical_value().map(|c| c[0]);
    let lambda_int = rho_int.map(|r| (0..=n as i128).map(|i| r as i128 - i).product());
    Ok(RhoLambda { rho, lambda, rho_int, lambda_int, degenerate: !lambda.is_unit() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> PadicRing {
        PadicRing::new(7, 6, 1).unwrap()
    }

    #[test]
    fn classification() {
        let c = |l, k| WeightPair::from_lk(l, k).unwrap().classify().unwrap();
        assert_eq!(c([8, 8], 12), PairClass::Balanced { s: 1, special: false });
        assert_eq!(c([2, 2], 2), PairClass::Balanced { s: 0, special: true });
        assert_eq!(c([3, 5], 10), PairClass::FDominated { t: 1 });
        assert_eq!(c([8, 8], 2), PairClass::Balanced { s: 6, special: false });
        assert_eq!(c([8, 8], 0), PairClass::Neither);
        let bad = WeightPair { v: [4, 4], n: 0, w: 5, m: 2 };
        assert!(matches!(classify_pair(&bad), Err(Error::CentralCharMismatch { .. })));
    }

    #[test]
    fn pair_roundtrip() {
        let p = WeightPair::from_lk([3, 5], 10).unwrap();
        assert_eq!(p.l(), [3, 5]);
        assert_eq!(p.k(), 10);
        assert_eq!(p.m, 2 * p.n);
    }

    #[test]
    fn shifts() {
        let r = ring();
        let l = WeightCharacter::classical(r, &[8, 8]);
        let s = WeightCharacter::classical(r, &[-2, 0]);
        assert_eq!(l.add2r(&s).unwrap().classical_value(), Some(&[4, 8][..]));
        assert_eq!(l.restrict().classical_value(), Some(&[16][..]));
        let zero = WeightCharacter::classical(r, &[0, 0]);
        assert_eq!(l.add2r(&zero).unwrap(), l);
    }

    #[test]
    fn rho_lambda_classical() {
        let r = ring();
        let l = WeightCharacter::classical(r, &[8, 8]);
        let s = WeightCharacter::classical(r, &[-2, 0]);
        let rl = rho_lambda(&l, &s, 5).unwrap();
        assert_eq!(rl.rho_int, Some(14));
        assert_eq!(rl.lambda_int, Some(14 * 13 * 12 * 11 * 10 * 9));
        assert_eq!(rl.lambda.valuation(), 1);
        assert!(rl.degenerate);
        let z = WeightCharacter::classical(r, &[1, 2]);
        let zero = WeightCharacter::classical(r, &[0, 0]);
        assert_eq!(rho_lambda(&z, &zero, 4).unwrap().lambda_int, Some(0));
        assert_eq!(rho_lambda(&z, &zero, 0).unwrap().lambda_int, Some(3));
    }
}
