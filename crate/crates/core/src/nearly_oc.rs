//! Nearly overconvergent q-expansions: polynomials in the fiber coordinates
//! `V_sigma` with q-expansion coefficients and a weight tag.
//!
//! A term is stored as `gamma_j` with the full coefficient of `V^j` equal to
//! `p^|j| gamma_j`. Every operator here preserves that divisibility, so the
//! factor is implicit and no division by `p` ever happens on storage.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::padic::{binom_int, pbinom, vp_int, PadicNum, PadicRing, PrecisionBudget};
use crate::qexp::{EllipticQExp, HilbertQExp, HilbertSpace};
use crate::weights::WeightCharacter;

/// `Z_p` element read in a (possibly quadratic) coefficient ring.
pub(crate) fn lift(ring: PadicRing, x: PadicNum) -> PadicNum {
    if ring.degree() == x.ring().degree() {
        x
    } else {
        x.embed(ring)
    }
}

/// Hilbert flavor, multidegrees `(j_1, j_2)`.
#[derive(Clone, Debug)]
pub struct HilbertNoc {
    space: Arc<HilbertSpace>,
    terms: BTreeMap<(u32, u32), HilbertQExp>,
    pub weight: WeightCharacter,
}

impl HilbertNoc {
    /// Filtration-zero wrap `g (1 + beta Z)^k`.
    pub fn fil0(g: HilbertQExp, weight: WeightCharacter) -> Self {
        let space = g.space().clone();
        let mut terms = BTreeMap::new();
        terms.insert((0, 0), g);
        HilbertNoc { space, terms, weight }
    }

    pub fn from_gammas(
        space: &Arc<HilbertSpace>,
        terms: BTreeMap<(u32, u32), HilbertQExp>,
        weight: WeightCharacter,
    ) -> Self {
        HilbertNoc { space: space.clone(), terms, weight }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }
    pub fn terms(&self) -> &BTreeMap<(u32, u32), HilbertQExp> {
        &self.terms
    }
    pub fn gamma(&self, j: (u32, u32)) -> Option<&HilbertQExp> {
        self.terms.get(&j)
    }

    /// Full coefficient `p^|j| gamma_j` of `V_1^j1 V_2^j2`.
    pub fn full_coeff(&self, j: (u32, u32)) -> HilbertQExp {
        match self.terms.get(&j) {
            Some(g) => g.scale(self.space.ring().one().mul_p_pow(j.0 + j.1)),
            None => HilbertQExp::zero(&self.space),
        }
    }

    /// Largest total degree with a nonzero coefficient.
    pub fn filtration(&self) -> u32 {
        self.terms.iter().filter(|(_, g)| !g.is_zero()).map(|(j, _)| j.0 + j.1).max().unwrap_or(0)
    }

    pub fn bound(&self) -> u32 {
        self.terms.values().map(|g| g.bound()).min().unwrap_or(self.space.bound())
    }

    fn accumulate(terms: &mut BTreeMap<(u32, u32), HilbertQExp>, j: (u32, u32), g: HilbertQExp) -> Result<()> {
        match terms.get_mut(&j) {
            Some(t) => *t = t.add(&g)?,
            None => {
                terms.insert(j, g);
            }
        }
        Ok(())
    }

    /// Gauss-Manin `nabla_i`, `i` in {1, 2}:
    /// `a V^h -> d_i(a) V^h + p (u_{k,i} - h_i) a V^(h + e_i)`, weight `k + 2 sigma_i`.
    pub fn nabla(&self, i: usize) -> Result<Self> {
        let ring = self.space.ring();
        let u = lift(ring, self.weight.u(i - 1));
        let mut terms = BTreeMap::new();
        for (&h, g) in &self.terms {
            Self::accumulate(&mut terms, h, g.d_op(i))?;
            let hi = if i == 1 { h.0 } else { h.1 };
            let up = if i == 1 { (h.0 + 1, h.1) } else { (h.0, h.1 + 1) };
            Self::accumulate(&mut terms, up, g.scale(u - ring.int(hi as i128)))?;
        }
        Ok(HilbertNoc { space: self.space.clone(), terms, weight: self.weight.shift(i - 1, 2) })
    }

    /// Diagonal restriction: `(j_1, j_2) -> j_1 + j_2`, coefficients `zeta^*`.
    pub fn zeta_star(&self) -> EllipticNoc {
        let ring = self.space.ring();
        let mut out = EllipticNoc::new(ring, self.bound(), self.weight.restrict());
        for (&(a, b), g) in &self.terms {
            out.accumulate(a + b, g.zeta_star().with_weight(None));
        }
        out
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let mut terms = self.terms.clone();
        for (&j, g) in &o.terms {
            Self::accumulate(&mut terms, j, g.clone())?;
        }
        Ok(HilbertNoc { space: self.space.clone(), terms, weight: self.weight.clone() })
    }

    pub fn scale(&self, c: PadicNum) -> Self {
        let terms = self.terms.iter().map(|(j, g)| (*j, g.scale(c))).collect();
        HilbertNoc { space: self.space.clone(), terms, weight: self.weight.clone() }
    }

    /// Minimal valuation of the difference of full coefficients.
    pub fn diff_valuation(&self, o: &Self) -> Result<u32> {
        let n = self.space.ring().prec();
        let keys: std::collections::BTreeSet<_> = self.terms.keys().chain(o.terms.keys()).copied().collect();
        let bound = self.bound().min(o.bound());
        let mut v = n;
        for j in keys {
            let a = self.full_coeff(j).truncate(bound);
            let b = o.full_coeff(j).truncate(bound);
            v = v.min(a.diff_valuation(&b)?);
        }
        Ok(v)
    }
}

/// `nabla_1^r g` by the closed formula
/// `sum_j p^j C(u_r, j) prod_{i<j} (u_k + u_r - 1 - i) d_1^(r-j) g V_1^j`,
/// `g` depleted and `r` supported on the first embedding.
pub fn nabla_pow(g: &HilbertQExp, k: &WeightCharacter, r: &WeightCharacter) -> Result<HilbertNoc> {
    if r.dim() != 2 || k.dim() != 2 {
        return Err(Error::WeightMismatch("Hilbert weights have two components".into()));
    }
    if !r.u(1).is_zero() || r.chi(1) != 0 {
        return Err(Error::WeightMismatch("r must be supported on the first embedding".into()));
    }
    let ring = g.ring();
    let base = ring.base();
    let n = ring.prec();
    let (uk, ur, chi_r) = (k.u(0), r.u(0), r.chi(0));

    let mut j_max = n as i64;
    if let Some(ri) = r.classical_value().map(|c| c[0]) {
        if ri >= 0 {
            j_max = j_max.min(ri);
        }
        if let Some(ki) = k.classical_value().map(|c| c[0]) {
            if ki + ri > 0 {
                j_max = j_max.min(ki + ri - 1);
            }
        }
    }
    let r_int = r.classical_value().map(|c| c[0]);
    let terms: Result<Vec<((u32, u32), HilbertQExp)>> = (0..=j_max.max(0) as u32)
        .into_par_iter()
        .map(|j| {
            let binom = match r_int {
                Some(ri) => binom_int(base, ri as i128, j as u64),
                None => pbinom(&ur, j as u64),
            };
            let prod = (0..j).fold(base.one(), |acc, i| acc * (uk + ur - base.int(1 + i as i128)));
            let coef = lift(ring, binom * prod);
            let dg = g.d_pow(1, &(ur - base.int(j as i128)), chi_r - j as i64)?;
            Ok(((j, 0), dg.scale(coef)))
        })
        .collect();
    let terms = terms?.into_iter().collect();
    Ok(HilbertNoc { space: g.space().clone(), terms, weight: k.add2r(r)? })
}

/// Elliptic flavor, degrees `j`.
#[derive(Clone, Debug)]
pub struct EllipticNoc {
    ring: PadicRing,
    bound: u32,
    terms: BTreeMap<u32, EllipticQExp>,
    pub weight: WeightCharacter,
}

/// One `c * omega^a * eta^b (* dq/q)` term of a de Rham presentation.
#[derive(Clone, Debug)]
pub struct OmegaEtaTerm {
    pub coeff: EllipticQExp,
    pub omega: i64,
    pub eta: u32,
    pub dlog: bool,
}

impl EllipticNoc {
    pub fn new(ring: PadicRing, bound: u32, weight: WeightCharacter) -> Self {
        EllipticNoc { ring, bound, terms: BTreeMap::new(), weight }
    }

    pub fn fil0(f: EllipticQExp, weight: WeightCharacter) -> Self {
        let mut e = Self::new(f.ring(), f.bound(), weight);
        e.accumulate(0, f);
        e
    }

    pub fn from_gammas(ring: PadicRing, bound: u32, terms: BTreeMap<u32, EllipticQExp>, weight: WeightCharacter) -> Self {
        let mut e = Self::new(ring, bound, weight);
        for (j, g) in terms {
            e.accumulate(j, g);
        }
        e
    }

    /// `omega^(k-b) eta^b -> p^b V^b`; a `dq/q` factor counts for weight 2.
    pub fn from_omega_eta(terms: &[OmegaEtaTerm], k: WeightCharacter) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Config("empty omega/eta presentation".into()))?;
        let mut e = Self::new(first.coeff.ring(), first.coeff.bound(), k.clone());
        let target = k.classical_value().map(|c| c[0]);
        for t in terms {
            let w = t.omega + t.eta as i64 + if t.dlog { 2 } else { 0 };
            if let Some(kk) = target {
                if w != kk {
                    return Err(Error::WeightMismatch(format!("term of weight {w} in a weight {kk} presentation")));
                }
            }
            e.accumulate(t.eta, t.coeff.clone());
        }
        Ok(e)
    }

    /// Inverse of [`EllipticNoc::from_omega_eta`] for a classical weight,
    /// with the `dq/q` factor split off when `dlog` is set.
    pub fn to_omega_eta(&self, dlog: bool) -> Result<Vec<OmegaEtaTerm>> {
        let k = self
            .weight
            .classical_value()
            .ok_or_else(|| Error::WeightMismatch("omega/eta presentation needs a classical weight".into()))?[0];
        let off = if dlog { 2 } else { 0 };
        Ok(self
            .terms
            .iter()
            .map(|(&b, c)| OmegaEtaTerm { coeff: c.clone(), omega: k - off - b as i64, eta: b, dlog })
            .collect())
    }

    pub(crate) fn accumulate(&mut self, j: u32, f: EllipticQExp) {
        let f = f.truncate(self.bound);
        self.bound = self.bound.min(f.bound());
        match self.terms.get_mut(&j) {
            Some(t) => *t = t.add(&f).expect("same ring"),
            None => {
                self.terms.insert(j, f);
            }
        }
        for t in self.terms.values_mut() {
            *t = t.truncate(self.bound);
        }
    }

    pub fn ring(&self) -> PadicRing {
        self.ring
    }
    pub fn bound(&self) -> u32 {
        self.bound
    }
    pub fn terms(&self) -> &BTreeMap<u32, EllipticQExp> {
        &self.terms
    }
    pub fn gamma(&self, j: u32) -> Option<&EllipticQExp> {
        self.terms.get(&j)
    }

    pub fn full_coeff(&self, j: u32) -> EllipticQExp {
        match self.terms.get(&j) {
            Some(g) => g.scale(self.ring.one().mul_p_pow(j)),
            None => EllipticQExp::zero(self.ring, self.bound),
        }
    }

    /// Stores a full coefficient `c`, dividing out `p^j`.
    pub fn set_full_coeff(&mut self, j: u32, c: &EllipticQExp) -> Result<()> {
        let mut out = Vec::with_capacity(c.coeffs().len());
        for x in c.coeffs() {
            let v = x.valuation();
            if v < j {
                return Err(Error::InsufficientValuation { degree: j as usize, found: v });
            }
            out.push(x.div_p_pow(j)?);
        }
        self.terms.remove(&j);
        self.accumulate(j, EllipticQExp::from_coeffs(self.ring, out));
        Ok(())
    }

    pub fn filtration(&self) -> u32 {
        self.terms.iter().filter(|(_, g)| !g.is_zero()).map(|(j, _)| *j).max().unwrap_or(0)
    }

    /// `a V^h -> d(a) V^h + p (u_k - h) a V^(h+1)`, weight `k + 2`.
    pub fn nabla(&self) -> Self {
        let u = self.weight.u(0);
        let mut out = Self::new(self.ring, self.bound, self.weight.shift(0, 2));
        for (&h, g) in &self.terms {
            out.accumulate(h, g.d_op());
            out.accumulate(h + 1, g.scale(lift(self.ring, u) - self.ring.int(h as i128)));
        }
        out
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        if self.ring != o.ring {
            return Err(Error::IndexMismatch("nearly overconvergent expansions over different rings".into()));
        }
        let mut out = self.clone();
        for (&j, g) in &o.terms {
            out.accumulate(j, g.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.scale(-self.ring.one()))
    }

    pub fn scale(&self, c: PadicNum) -> Self {
        let mut out = self.clone();
        for g in out.terms.values_mut() {
            *g = g.scale(c);
        }
        out
    }

    pub fn diff_valuation(&self, o: &Self) -> Result<u32> {
        let d = self.sub(o)?;
        let n = self.ring.prec();
        Ok(d.terms.keys().map(|&j| d.full_coeff(j).coeffs().iter().map(|c| c.valuation()).min().unwrap_or(n)).min().unwrap_or(n))
    }

    /// Same as [`EllipticNoc::diff_valuation`] but on the stored `gamma_j`.
    pub fn gamma_diff_valuation(&self, o: &Self) -> Result<u32> {
        let d = self.sub(o)?;
        let n = self.ring.prec();
        Ok(d.terms.values().map(|g| g.coeffs().iter().map(|c| c.valuation()).min().unwrap_or(n)).min().unwrap_or(n))
    }

    /// Overconvergent projection
    /// `H(gamma) = sum_i (-1)^i d^i gamma_i / ((k-2)(k-3)...(k-1-i))`.
    pub fn oc_project(&self) -> Result<OcProjection> {
        let ring = self.ring;
        let p = ring.p();
        let classical = self.weight.classical_value().map(|c| c[0]);
        let uk = self.weight.u(0);
        // denominators as (unit, valuation) per degree
        let mut dens: BTreeMap<u32, (PadicNum, u32)> = BTreeMap::new();
        for &i in self.terms.keys() {
            let mut unit = ring.one();
            let mut v = 0u32;
            for m in 1..=i as i64 {
                let (fu, fv) = match classical {
                    Some(k) => {
                        let f = (k - 1 - m) as i128;
                        if f == 0 {
                            return Err(Error::ZeroDenominator(k - 1 - m));
                        }
                        let fv = vp_int(f, p);
                        (ring.int(f / (p as i128).pow(fv)), fv)
                    }
                    None => {
                        let f = uk - uk.ring().int(1 + m as i128);
                        let fv = f.valuation();
                        if fv >= ring.prec() {
                            return Err(Error::ZeroDenominator(f.to_i128() as i64));
                        }
                        (lift(ring, f.div_p_pow(fv)?), fv)
                    }
                };
                unit *= fu;
                v += fv;
            }
            dens.insert(i, (unit, v));
        }
        let shift = dens.values().map(|d| d.1).max().unwrap_or(0);
        let mut scaled = EllipticQExp::zero(ring, self.bound);
        for (&i, g) in &self.terms {
            let (unit, v) = dens[&i];
            let sign = if i % 2 == 0 { ring.one() } else { -ring.one() };
            let c = sign * unit.inv()?.mul_p_pow(shift - v);
            scaled = scaled.add(&g.d_pow_int(i as i64)?.scale(c))?;
        }
        let mut budget = PrecisionBudget::new(ring.prec());
        budget.record("overconvergent projection denominators", shift);
        Ok(OcProjection { scaled: scaled.with_weight(Some(self.weight.clone())), shift, budget })
    }
}

/// `p^shift * H(gamma)` together with its loss ledger.
#[derive(Clone, Debug)]
pub struct OcProjection {
    pub scaled: EllipticQExp,
    pub shift: u32,
    pub budget: PrecisionBudget,
}

impl OcProjection {
    /// The projection itself; fails when it is not integral at the working
    /// precision. The top `shift` digits of the result are unknown.
    pub fn value(&self) -> Result<EllipticQExp> {
        let ring = self.scaled.ring();
        let coeffs: std::result::Result<Vec<_>, _> = self.scaled.coeffs().iter().map(|c| c.div_p_pow(self.shift)).collect();
        Ok(EllipticQExp::from_coeffs(ring, coeffs?).with_weight(self.scaled.weight.clone()))
    }

    /// Valuation of the difference of the two projections, capped at the
    /// attainable precision `N - max shift`.
    pub fn agreement(&self, o: &OcProjection) -> Result<u32> {
        let s = self.shift.max(o.shift);
        let a = self.scaled.scale(self.scaled.ring().one().mul_p_pow(s - self.shift));
        let b = o.scaled.scale(o.scaled.ring().one().mul_p_pow(s - o.shift));
        let n = self.scaled.ring().prec();
        let d = a.diff_valuation(&b)?;
        Ok(if d >= n { n - s } else { d.saturating_sub(s) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_field, splitting_type, IdealTag, PrimeSel};

    fn split() -> Arc<HilbertSpace> {
        let f = make_field(5).unwrap();
        let s = splitting_type(&f, 11, 8).unwrap();
        HilbertSpace::new(f, s, IdealTag::InverseDifferent, 12).unwrap()
    }

    fn depleted(sp: &Arc<HilbertSpace>) -> HilbertQExp {
        let ring = sp.ring();
        HilbertQExp::from_fn(sp, |b| ring.int((3 * b.x - b.y + 11) as i128)).deplete(PrimeSel::P)
    }

    #[test]
    fn closed_form_matches_iteration() {
        let sp = split();
        let g = depleted(&sp);
        let k = WeightCharacter::classical(sp.ring(), &[8, 8]);
        let mut it = HilbertNoc::fil0(g.clone(), k.clone());
        for r in 0..4 {
            let rr = WeightCharacter::classical(sp.ring(), &[r, 0]);
            let closed = nabla_pow(&g, &k, &rr).unwrap();
            assert_eq!(closed.diff_valuation(&it).unwrap(), sp.ring().prec(), "r = {r}");
            assert_eq!(closed.weight, it.weight);
            it = it.nabla(1).unwrap();
        }
    }

    #[test]
    fn inverse_then_forward() {
        let sp = split();
        let g = depleted(&sp);
        let k = WeightCharacter::classical(sp.ring(), &[8, 8]);
        let r = WeightCharacter::classical(sp.ring(), &[-2, 0]);
        let mut x = nabla_pow(&g, &k, &r).unwrap();
        assert_eq!(x.filtration(), 5);
        for _ in 0..2 {
            x = x.nabla(1).unwrap();
        }
        let back = HilbertNoc::fil0(g, k);
        assert_eq!(x.diff_valuation(&back).unwrap(), sp.ring().prec());
        assert_eq!(x.filtration(), 0);
    }

    #[test]
    fn projection_kills_nabla() {
        let ring = PadicRing::new(7, 8, 1).unwrap();
        let f = EllipticQExp::from_ints(ring, &(0..20).map(|n| (n * n + 3) as i128).collect::<Vec<_>>());
        let w = WeightCharacter::classical(ring, &[10]);
        let nf = EllipticNoc::fil0(f, w).nabla();
        let h = nf.oc_project().unwrap();
        assert!(h.scaled.is_zero());
    }

    #[test]
    fn projection_budget() {
        let ring = PadicRing::new(7, 8, 1).unwrap();
        let f = EllipticQExp::from_ints(ring, &[0, 1, 2, 3]);
        let mut e = EllipticNoc::new(ring, 3, WeightCharacter::classical(ring, &[12]));
        e.accumulate(4, f.scale(ring.int(7)));
        let h = e.oc_project().unwrap();
        // 10 * 9 * 8 * 7
        assert_eq!(h.shift, 1);
        assert_eq!(h.budget.total_loss(), 1);
        let v = h.value().unwrap();
        let expect = f.d_pow_int(4).unwrap().scale(ring.rational(1, 720).unwrap());
        assert!(v.diff_valuation(&expect).unwrap() >= 7);
    }

    #[test]
    fn omega_eta_roundtrip() {
        let ring = PadicRing::new(7, 8, 1).unwrap();
        let c = EllipticQExp::from_ints(ring, &[0, 1, 5, 2]);
        let k = WeightCharacter::classical(ring, &[12]);
        let t = vec![
            OmegaEtaTerm { coeff: c.clone(), omega: 10, eta: 0, dlog: true },
            OmegaEtaTerm { coeff: c.scale(ring.int(3)), omega: 9, eta: 1, dlog: true },
        ];
        let e = EllipticNoc::from_omega_eta(&t, k.clone()).unwrap();
        assert_eq!(e.full_coeff(1), c.scale(ring.int(21)));
        let back = e.to_omega_eta(true).unwrap();
        assert_eq!(back[1].omega, 9);
        assert_eq!(back[1].coeff, c.scale(ring.int(3)));
        let bad = vec![OmegaEtaTerm { coeff: c, omega: 9, eta: 0, dlog: true }];
        assert!(EllipticNoc::from_omega_eta(&bad, k).is_err());
    }
}
