//! Truncated q-expansions: Hilbert expansions indexed by totally positive
//! elements of bounded trace, and elliptic expansions indexed by `0..=B`.
//!
//! Every expansion carries an effective bound. Operators that need deeper
//! input (U, and the Hilbert V when a generator has a small embedding) lower
//! it, and binary operations keep the minimum.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Elem, IdealTag, IndexSet, PrimeSel, PrimeSplitting, RealQuadraticField};
use crate::padic::{PadicNum, PadicRing};
use crate::weights::WeightCharacter;

/// Field, splitting of `p` and index set shared by a family of expansions.
#[derive(Debug)]
pub struct HilbertSpace {
    pub field: RealQuadraticField,
    pub splitting: PrimeSplitting,
    pub index: IndexSet,
    emb: [Vec<PadicNum>; 2],
}

impl HilbertSpace {
    pub fn new(
        field: RealQuadraticField,
        splitting: PrimeSplitting,
        tag: IdealTag,
        bound: u32,
    ) -> Result<Arc<HilbertSpace>> {
        let index = IndexSet::new(&field, tag, bound)?;
        let emb = [0, 1].map(|i| index.elems().iter().map(|b| splitting.embed(i, b)).collect());
        Ok(Arc::new(HilbertSpace { field, splitting, index, emb }))
    }

    pub fn ring(&self) -> PadicRing {
        self.splitting.ring
    }
    pub fn bound(&self) -> u32 {
        self.index.bound
    }
    pub fn len(&self) -> usize {
        self.index.len()
    }
    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }
    /// `sigma_i` of the `k`-th index element.
    pub fn embedding(&self, i: usize, k: usize) -> PadicNum {
        self.emb[i][k]
    }
    pub fn trace_of(&self, k: usize) -> u32 {
        self.index.get(k).trace() as u32
    }
    fn in_prime(&self, which: PrimeSel, k: usize) -> bool {
        let v = |i: usize| self.emb[i][k].valuation() >= 1;
        match (self.splitting.is_split(), which) {
            (true, PrimeSel::P1) => v(0),
            (true, PrimeSel::P2) => v(1),
            (true, PrimeSel::P) => v(0) || v(1),
            (false, _) => v(0),
        }
    }
}

/// Truncated Hilbert q-expansion `sum a_beta q^beta`.
#[derive(Clone, Debug)]
pub struct HilbertQExp {
    space: Arc<HilbertSpace>,
    coeffs: Vec<PadicNum>,
    bound: u32,
    pub weight: Option<WeightCharacter>,
}

impl PartialEq for HilbertQExp {
    fn eq(&self, o: &Self) -> bool {
        self.same_space(o) && self.bound == o.bound && self.coeffs == o.coeffs
    }
}

impl HilbertQExp {
    pub fn zero(space: &Arc<HilbertSpace>) -> Self {
        let z = space.ring().zero();
        HilbertQExp { space: space.clone(), coeffs: vec![z; space.len()], bound: space.bound(), weight: None }
    }

    /// Expansion with `a_beta = f(beta)` on the whole index set.
    pub fn from_fn(space: &Arc<HilbertSpace>, mut f: impl FnMut(&Elem) -> PadicNum) -> Self {
        let coeffs = space.index.elems().iter().map(&mut f).collect();
        HilbertQExp { space: space.clone(), coeffs, bound: space.bound(), weight: None }
    }

    pub fn from_coeffs(space: &Arc<HilbertSpace>, coeffs: Vec<PadicNum>, bound: u32) -> Result<Self> {
        if coeffs.len() != space.len() {
            return Err(Error::IndexMismatch(format!("{} coefficients for {} indices", coeffs.len(), space.len())));
        }
        let mut f = HilbertQExp { space: space.clone(), coeffs, bound: bound.min(space.bound()), weight: None };
        f.clear_beyond_bound();
        Ok(f)
    }

    pub fn monomial(space: &Arc<HilbertSpace>, beta: &Elem, c: PadicNum) -> Result<Self> {
        let k = space
            .index
            .position(beta)
            .ok_or_else(|| Error::IndexMismatch(format!("{beta} is not in the index set")))?;
        let mut f = Self::zero(space);
        f.coeffs[k] = c;
        Ok(f)
    }

    pub fn with_weight(mut self, w: Option<WeightCharacter>) -> Self {
        self.weight = w;
        self
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }
    pub fn ring(&self) -> PadicRing {
        self.space.ring()
    }
    pub fn bound(&self) -> u32 {
        self.bound
    }
    pub fn coeffs(&self) -> &[PadicNum] {
        &self.coeffs
    }

    /// Coefficient at `beta`; `None` when `beta` is beyond the effective bound
    /// or outside the index module.
    pub fn coeff(&self, beta: &Elem) -> Option<PadicNum> {
        let k = self.space.index.position(beta)?;
        if self.space.trace_of(k) > self.bound {
            return None;
        }
        Some(self.coeffs[k])
    }

    fn same_space(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.space, &o.space)
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.same_space(o) {
            Ok(())
        } else {
            Err(Error::IndexMismatch("expansions built on different index sets".into()))
        }
    }

    fn clear_beyond_bound(&mut self) {
        let z = self.ring().zero();
        let start = self.space.index.trace_range(self.bound + 1).start;
        if self.bound < self.space.bound() {
            for c in &mut self.coeffs[start..] {
                *c = z;
            }
        }
    }

    /// Lowers the effective bound.
    pub fn truncate(&self, bound: u32) -> Self {
        let mut f = self.clone();
        f.bound = bound.min(self.bound);
        f.clear_beyond_bound();
        f
    }

    fn map(&self, f: impl Fn(usize, PadicNum) -> PadicNum + Sync) -> Self {
        let coeffs = self.coeffs.par_iter().enumerate().map(|(k, c)| f(k, *c)).collect();
        HilbertQExp { space: self.space.clone(), coeffs, bound: self.bound, weight: self.weight.clone() }
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| *a + *b).collect();
        let mut r = HilbertQExp { space: self.space.clone(), coeffs, bound: self.bound.min(o.bound), weight: self.weight.clone() };
        r.clear_beyond_bound();
        Ok(r)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.map(|_, c| -c)
    }

    pub fn scale(&self, s: PadicNum) -> Self {
        self.map(|_, c| c * s)
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let bound = self.bound.min(o.bound);
        let ix = &self.space.index;
        let z = self.ring().zero();
        let n_out = ix.trace_range(bound).end;
        let coeffs: Vec<PadicNum> = (0..ix.len())
            .into_par_iter()
            .map(|k| {
                if k >= n_out {
                    return z;
                }
                let bk = ix.get(k);
                let tk = bk.trace() as u32;
                let mut acc = z;
                for i in 0..ix.trace_range(tk).end {
                    let a = self.coeffs[i];
                    if a.is_zero() {
                        continue;
                    }
                    let rest = bk.sub(&ix.get(i));
                    if let Some(j) = ix.position(&rest) {
                        acc += a * o.coeffs[j];
                    }
                }
                acc
            })
            .collect();
        Ok(HilbertQExp { space: self.space.clone(), coeffs, bound, weight: None })
    }

    /// `d_i`: multiplies `a_beta` by `sigma_i(beta)`; `i` is 1 or 2.
    pub fn d_op(&self, i: usize) -> Self {
        let s = self.space.clone();
        self.map(move |k, c| c * s.emb[i - 1][k])
    }

    /// `d_i^n` for an integer `n`; negative `n` needs `sigma_i` to be a unit
    /// on the support.
    pub fn d_pow_int(&self, i: usize, n: i64) -> Result<Self> {
        if n >= 0 {
            let s = self.space.clone();
            return Ok(self.map(move |k, c| if c.is_zero() { c } else { c * s.emb[i - 1][k].pow(n as u64) }));
        }
        self.d_pow_with(i, |t| t.powi(n))
    }

    /// `d_i^u` for a weight exponent: `a_beta * sigma_i(beta)^u` computed with
    /// the p-adic power `w(t)^chi exp(u log <t>)`.
    pub fn d_pow(&self, i: usize, u: &PadicNum, chi: i64) -> Result<Self> {
        self.d_pow_with(i, |t| t.ppow(u, chi))
    }

    fn d_pow_with(
        &self,
        i: usize,
        f: impl Fn(&PadicNum) -> std::result::Result<PadicNum, crate::PadicError> + Sync,
    ) -> Result<Self> {
        let s = &self.space;
        let coeffs: Result<Vec<PadicNum>> = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(k, c)| {
                if c.is_zero() {
                    return Ok(*c);
                }
                let t = s.emb[i - 1][k];
                if !t.is_unit() {
                    return Err(Error::NonUnitIndex(format!(
                        "sigma_{i}({}) is not a unit; deplete first",
                        s.index.get(k)
                    )));
                }
                Ok(*c * f(&t)?)
            })
            .collect();
        Ok(HilbertQExp { space: s.clone(), coeffs: coeffs?, bound: self.bound, weight: self.weight.clone() })
    }

    /// Kills every coefficient indexed by an element of the selected prime
    /// (and the constant term).
    pub fn deplete(&self, which: PrimeSel) -> Self {
        let s = self.space.clone();
        let z = self.ring().zero();
        self.map(move |k, c| if k == 0 || s.in_prime(which, k) { z } else { c })
    }

    /// `(V f)_{pi beta} = f_beta` with `pi` the totally positive generator.
    pub fn v_op(&self, which: PrimeSel) -> Self {
        let s = &self.space;
        let pi = s.splitting.generator(which);
        let ix = &s.index;
        let z = self.ring().zero();
        let mut bound = self.bound;
        let mut coeffs = vec![z; ix.len()];
        for (k, beta) in ix.elems().iter().enumerate() {
            let t = beta.trace() as u32;
            if t > bound {
                break;
            }
            let Some(g) = beta.div(&pi) else { continue };
            if !ix.in_lattice(&g) {
                continue;
            }
            if g.trace() as u32 > self.bound {
                bound = t - 1;
                break;
            }
            if let Some(j) = ix.position(&g) {
                coeffs[k] = self.coeffs[j];
            }
        }
        let mut r = HilbertQExp { space: s.clone(), coeffs, bound, weight: self.weight.clone() };
        r.clear_beyond_bound();
        r
    }

    /// `(U f)_beta = f_{pi beta}`.
    pub fn u_op(&self, which: PrimeSel) -> Self {
        let s = &self.space;
        let pi = s.splitting.generator(which);
        let ix = &s.index;
        let z = self.ring().zero();
        let mut bound = self.bound;
        let mut coeffs = vec![z; ix.len()];
        for (k, beta) in ix.elems().iter().enumerate() {
            let t = beta.trace() as u32;
            if t > bound {
                break;
            }
            let g = pi.mul(beta).expect("ideal is an O_L-module");
            if g.trace() as u32 > self.bound {
                bound = t.saturating_sub(1);
                if t == 0 {
                    bound = 0;
                }
                break;
            }
            if let Some(j) = ix.position(&g) {
                coeffs[k] = self.coeffs[j];
            }
        }
        let mut r = HilbertQExp { space: s.clone(), coeffs, bound, weight: self.weight.clone() };
        r.clear_beyond_bound();
        r
    }

    /// `T_0 = U + c V`, with `c` from [`hecke_constant`].
    pub fn t_op(&self, which: PrimeSel, c: PadicNum) -> Result<Self> {
        self.u_op(which).add(&self.v_op(which).scale(c))
    }

    /// Diagonal restriction: `b_n = sum_{Tr beta = n} a_beta`.
    pub fn zeta_star(&self) -> EllipticQExp {
        let ix = &self.space.index;
        let z = self.ring().zero();
        let coeffs = (0..=self.bound)
            .map(|t| ix.trace_range(t).fold(z, |acc, k| acc + self.coeffs[k]))
            .collect();
        EllipticQExp {
            ring: self.ring(),
            coeffs,
            weight: self.weight.as_ref().map(|w| w.restrict()),
        }
    }

    /// Minimal valuation of `self - o` on the common bound (`N` when equal).
    pub fn diff_valuation(&self, o: &Self) -> Result<u32> {
        let d = self.sub(o)?;
        Ok(d.coeffs.iter().map(|c| c.valuation()).min().unwrap_or(self.ring().prec()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// Hecke normalization `N(p)^(k-1) * nebentype` for parallel weight `k`.
pub fn hecke_constant(space: &HilbertSpace, which: PrimeSel, k: u32, nebentype: PadicNum) -> PadicNum {
    let n = space.splitting.norm(which);
    space.ring().int(n as i128).pow(k as u64 - 1) * nebentype
}

/// Truncated elliptic q-expansion `sum_{n <= B} a_n q^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticQExp {
    ring: PadicRing,
    coeffs: Vec<PadicNum>,
    pub weight: Option<WeightCharacter>,
}

impl EllipticQExp {
    pub fn zero(ring: PadicRing, bound: u32) -> Self {
        EllipticQExp { ring, coeffs: vec![ring.zero(); bound as usize + 1], weight: None }
    }

    pub fn from_coeffs(ring: PadicRing, coeffs: Vec<PadicNum>) -> Self {
        assert!(!coeffs.is_empty(), "an expansion has at least a constant term");
        EllipticQExp { ring, coeffs, weight: None }
    }

    pub fn from_ints(ring: PadicRing, coeffs: &[i128]) -> Self {
        Self::from_coeffs(ring, coeffs.iter().map(|&c| ring.int(c)).collect())
    }

    pub fn with_weight(mut self, w: Option<WeightCharacter>) -> Self {
        self.weight = w;
        self
    }

    pub fn ring(&self) -> PadicRing {
        self.ring
    }
    pub fn bound(&self) -> u32 {
        self.coeffs.len() as u32 - 1
    }
    pub fn coeffs(&self) -> &[PadicNum] {
        &self.coeffs
    }
    pub fn coeff(&self, n: u32) -> Option<PadicNum> {
        self.coeffs.get(n as usize).copied()
    }

    pub fn truncate(&self, bound: u32) -> Self {
        let mut f = self.clone();
        f.coeffs.truncate(bound.min(self.bound()) as usize + 1);
        f
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.ring != o.ring {
            return Err(Error::IndexMismatch("elliptic expansions over different rings".into()));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let b = self.bound().min(o.bound()) as usize;
        let coeffs = (0..=b).map(|n| self.coeffs[n] + o.coeffs[n]).collect();
        Ok(EllipticQExp { ring: self.ring, coeffs, weight: self.weight.clone() })
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        EllipticQExp { ring: self.ring, coeffs: self.coeffs.iter().map(|c| -*c).collect(), weight: self.weight.clone() }
    }

    pub fn scale(&self, s: PadicNum) -> Self {
        EllipticQExp { ring: self.ring, coeffs: self.coeffs.iter().map(|c| *c * s).collect(), weight: self.weight.clone() }
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        let b = self.bound().min(o.bound()) as usize;
        let mut coeffs = vec![self.ring.zero(); b + 1];
        for i in 0..=b {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=b - i {
                coeffs[i + j] += self.coeffs[i] * o.coeffs[j];
            }
        }
        Ok(EllipticQExp { ring: self.ring, coeffs, weight: None })
    }

    /// `d = q d/dq`.
    pub fn d_op(&self) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(n, c)| *c * self.ring.int(n as i128)).collect();
        EllipticQExp { ring: self.ring, coeffs, weight: self.weight.clone() }
    }

    /// `d^n` for an integer `n`; negative powers need `p`-depletion.
    pub fn d_pow_int(&self, n: i64) -> Result<Self> {
        self.d_pow_with(|t| t.powi(n), n >= 0)
    }

    /// `d^u` for a weight exponent `(u, chi)`.
    pub fn d_pow(&self, u: &PadicNum, chi: i64) -> Result<Self> {
        self.d_pow_with(|t| t.ppow(u, chi), false)
    }

    fn d_pow_with(
        &self,
        f: impl Fn(&PadicNum) -> std::result::Result<PadicNum, crate::PadicError>,
        allow_nonunit: bool,
    ) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (n, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                coeffs.push(*c);
                continue;
            }
            let t = self.ring.int(n as i128);
            if !t.is_unit() && !allow_nonunit {
                return Err(Error::NonUnitIndex(format!("coefficient at n = {n} survives; deplete first")));
            }
            coeffs.push(*c * f(&t)?);
        }
        Ok(EllipticQExp { ring: self.ring, coeffs, weight: self.weight.clone() })
    }

    /// Zeroes `a_n` for `p | n` (including `n = 0`).
    pub fn deplete(&self) -> Self {
        let p = self.ring.p() as usize;
        let z = self.ring.zero();
        let coeffs = self.coeffs.iter().enumerate().map(|(n, c)| if n % p == 0 { z } else { *c }).collect();
        EllipticQExp { ring: self.ring, coeffs, weight: self.weight.clone() }
    }

    /// `V f = f(q^p)`.
    pub fn v_op(&self) -> Self {
        let p = self.ring.p() as usize;
        let z = self.ring.zero();
        let coeffs = (0..self.coeffs.len()).map(|n| if n % p == 0 { self.coeffs[n / p] } else { z }).collect();
        EllipticQExp { ring: self.ring, coeffs, weight: self.weight.clone() }
    }

    /// `(U f)_n = a_{pn}`, bound `floor(B/p)`.
    pub fn u_op(&self) -> Self {
        let p = self.ring.p() as usize;
        let b = self.bound() as usize / p;
        let coeffs = (0..=b).map(|n| self.coeffs[n * p]).collect();
        EllipticQExp { ring: self.ring, coeffs, weight: self.weight.clone() }
    }

    /// `T_p = U + c V` with `c = p^(k-1) * nebentype`.
    pub fn t_op(&self, c: PadicNum) -> Self {
        self.u_op().add(&self.v_op().scale(c)).expect("same ring")
    }

    pub fn diff_valuation(&self, o: &Self) -> Result<u32> {
        let d = self.sub(o)?;
        Ok(d.coeffs.iter().map(|c| c.valuation()).min().unwrap_or(self.ring.prec()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Same coefficients read in a ring of another precision.
    pub fn to_ring(&self, ring: PadicRing) -> Self {
        EllipticQExp { ring, coeffs: self.coeffs.iter().map(|c| c.to_prec(ring)).collect(), weight: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, splitting_type};

    fn split_space(bound: u32) -> Arc<HilbertSpace> {
        let f = make_field(5).unwrap();
        let s = splitting_type(&f, 11, 6).unwrap();
        HilbertSpace::new(f, s, IdealTag::InverseDifferent, bound).unwrap()
    }

    #[test]
    fn d1_on_phi_mod_11() {
        let f = make_field(5).unwrap();
        let s = splitting_type(&f, 11, 1).unwrap();
        let sp = HilbertSpace::new(f, s, IdealTag::Ring, 4).unwrap();
        let phi2 = Elem::from_ol(5, 1, 1);
        let g = HilbertQExp::monomial(&sp, &phi2, sp.ring().one()).unwrap();
        // sigma_1(1 + phi) = 1 + 8
        assert_eq!(g.d_op(1).coeff(&phi2).unwrap().residue(), 9);
        let c = HilbertQExp::monomial(&sp, &Elem::zero(5), sp.ring().int(3)).unwrap();
        assert!(c.d_op(1).is_zero());
    }

    #[test]
    fn monomial_product() {
        let sp = split_space(4);
        let ring = sp.ring();
        let b1 = Elem::from_dinv(5, 0, 1);
        let b2 = Elem::from_dinv(5, -1, 1);
        let f = HilbertQExp::monomial(&sp, &b1, ring.one()).unwrap();
        let g = HilbertQExp::monomial(&sp, &b2, ring.one()).unwrap();
        let fg = f.mul(&g).unwrap();
        assert_eq!(fg.coeff(&b1.add(&b2)).unwrap(), ring.one());
        assert_eq!(fg.coeffs().iter().filter(|c| !c.is_zero()).count(), 1);
    }

    #[test]
    fn elliptic_operators() {
        let ring = PadicRing::new(7, 4, 1).unwrap();
        let mut c = vec![0i128; 30];
        c[2] = 1;
        let f = EllipticQExp::from_ints(ring, &c);
        let v = f.v_op();
        assert_eq!(v.coeff(14).unwrap(), ring.one());
        assert_eq!(v.coeffs().iter().filter(|c| !c.is_zero()).count(), 1);
        let g = EllipticQExp::from_ints(ring, &(0..30).collect::<Vec<i128>>());
        assert_eq!(g.u_op().coeff(2).unwrap(), ring.int(14));
        assert_eq!(g.u_op().bound(), 4);
    }

    #[test]
    fn v_then_u_is_identity() {
        let sp = split_space(30);
        let ring = sp.ring();
        let f = HilbertQExp::from_fn(&sp, |b| ring.int((b.x * 7 + b.y * 3) as i128));
        for w in [PrimeSel::P1, PrimeSel::P2, PrimeSel::P] {
            let uv = f.v_op(w).u_op(w);
            assert!(uv.bound() > 0);
            assert_eq!(uv.diff_valuation(&f.truncate(uv.bound())).unwrap(), ring.prec());
            let vf = f.v_op(w);
            assert!(vf.deplete(w).is_zero());
        }
    }
}
