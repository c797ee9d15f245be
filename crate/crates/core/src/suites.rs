//! Named verification suites over the demo configurations. Each suite
//! returns one line per check; the CLI and the acceptance tests run them.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{make_field, splitting_type, IdealTag, PrimeSel};
use crate::forms::{hilbert_divisor_series, hilbert_eisenstein, random_depleted, random_hilbert};
use crate::hecke::{
    demo_basis, hecke_roots, mat_agreement, mat_mul, pstabilize, u_matrix, Mat, SlopeDecomposition,
};
use crate::lvalue::{build_split_primitives, split_poly_decomp, u_zeta_v2, vanishing_pieces, verify_gz, GzOutcome};
use crate::nearly_oc::{nabla_pow, HilbertNoc};
use crate::padic::{PadicRing, PadicScalar};
use crate::qexp::HilbertSpace;
use crate::weights::WeightCharacter;

/// Field, prime, precision and trace bound of a suite run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub d: i64,
    pub p: u64,
    pub prec: u32,
    pub bound: u32,
}

impl SuiteConfig {
    pub const INERT: SuiteConfig = SuiteConfig { d: 5, p: 7, prec: 12, bound: 40 };
    pub const SPLIT: SuiteConfig = SuiteConfig { d: 5, p: 11, prec: 12, bound: 40 };

    pub fn space(&self) -> Result<Arc<HilbertSpace>> {
        let field = make_field(self.d)?;
        let sp = splitting_type(&field, self.p, self.prec)?;
        HilbertSpace::new(field, sp, IdealTag::InverseDifferent, self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub lines: Vec<SuiteLine>,
}

impl SuiteResult {
    fn new(suite: &str) -> Self {
        SuiteResult { suite: suite.into(), lines: Vec::new() }
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.lines.push(SuiteLine { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(|l| l.passed)
    }

    pub fn render(&self) -> String {
        let mut s = format!("suite {}\n", self.suite);
        for l in &self.lines {
            s += &format!("  [{}] {}: {}\n", if l.passed { "ok" } else { "FAIL" }, l.name, l.detail);
        }
        s
    }
}

fn tally(res: &mut SuiteResult, name: &str, fails: usize, total: usize) {
    res.push(name, fails == 0 && total > 0, format!("{} of {total} exact", total - fails));
}

/// Operator identities on `count` seeded random forms.
pub fn operators(cfg: SuiteConfig, count: usize, seed: u64) -> Result<SuiteResult> {
    let space = cfg.space()?;
    let n = cfg.prec;
    let mut res = SuiteResult::new(&format!("operators (p = {})", cfg.p));
    let primes = if space.splitting.is_split() { vec![PrimeSel::P1, PrimeSel::P2, PrimeSel::P] } else { vec![PrimeSel::P] };
    let mut fails = [0usize; 7];
    for t in 0..count as u64 {
        let f = random_hilbert(seed.wrapping_add(2 * t), &space);
        let g = random_hilbert(seed.wrapping_add(2 * t + 1), &space);
        let fg = f.mul(&g)?;
        let mut leibniz = true;
        let mut commute = true;
        for i in [1, 2] {
            let lhs = fg.d_op(i);
            let rhs = f.d_op(i).mul(&g)?.add(&f.mul(&g.d_op(i))?)?;
            leibniz &= lhs.diff_valuation(&rhs)? >= n;
        }
        commute &= f.d_op(1).d_op(2).diff_valuation(&f.d_op(2).d_op(1))? >= n;
        let mut uv = true;
        let mut dep = true;
        let mut idem = true;
        for &w in &primes {
            let back = f.v_op(w).u_op(w);
            uv &= back.diff_valuation(&f.truncate(back.bound()))? >= n;
            // p O_L = p_1 p_2 when p splits: depletion at both primes
            let lhs = if w == PrimeSel::P && space.splitting.is_split() {
                let h = f.sub(&f.u_op(PrimeSel::P1).v_op(PrimeSel::P1))?;
                h.sub(&h.u_op(PrimeSel::P2).v_op(PrimeSel::P2))?
            } else {
                f.sub(&f.u_op(w).v_op(w))?
            };
            dep &= lhs.diff_valuation(&f.deplete(w).truncate(lhs.bound()))? >= n;
            idem &= f.deplete(w).deplete(w).diff_valuation(&f.deplete(w))? >= n;
        }
        let zf = f.zeta_star();
        let zg = g.zeta_star();
        let hom = fg.zeta_star().diff_valuation(&zf.mul(&zg)?)? >= n
            && f.add(&g)?.zeta_star().diff_valuation(&zf.add(&zg)?)? >= n;
        let dz = zf.d_op().diff_valuation(&f.d_op(1).add(&f.d_op(2))?.zeta_star())? >= n;
        for (k, ok) in [leibniz, commute, uv, dep, idem, hom, dz].into_iter().enumerate() {
            fails[k] += !ok as usize;
        }
    }
    let names = [
        "Leibniz rule for d_1, d_2",
        "d_1 d_2 = d_2 d_1",
        "U V = id",
        "1 - V U = depletion",
        "depletion is idempotent",
        "zeta* is a ring homomorphism",
        "d zeta* = zeta* (d_1 + d_2)",
    ];
    for (name, f) in names.iter().zip(fails) {
        tally(&mut res, name, f, count);
    }
    Ok(res)
}

fn depleted_eisenstein(space: &Arc<HilbertSpace>, l: u32) -> Result<crate::qexp::HilbertQExp> {
    Ok(hilbert_eisenstein(space, l)?.deplete(PrimeSel::P))
}

/// Closed-form `nabla_1^r` against `r` single steps, `r = 0..=r_max`.
pub fn nabla_iteration(cfg: SuiteConfig, r_max: i64) -> Result<SuiteResult> {
    let space = cfg.space()?;
    let ring = space.ring();
    let g = depleted_eisenstein(&space, 8)?;
    let k = WeightCharacter::classical(ring, &[8, 8]);
    let mut res = SuiteResult::new(&format!("nabla iteration (p = {})", cfg.p));
    let mut step = HilbertNoc::fil0(g.clone(), k.clone());
    for r in 0..=r_max {
        if r > 0 {
            step = step.nabla(1)?;
        }
        let closed = nabla_pow(&g, &k, &WeightCharacter::classical(ring, &[r, 0]))?;
        let v = closed.diff_valuation(&step)?;
        let same_weight = closed.weight == step.weight;
        res.push(format!("r = {r}"), v >= cfg.prec && same_weight, format!("agreement {v} of {}", cfg.prec));
    }
    Ok(res)
}

/// `nabla^r` against `nabla^(r + (p^f - 1) p^m)` modulo `p^(m+1)`, `f` the
/// residue degree. With `literal_exponent` the period `(p - 1) p^m` is used
/// regardless of `f`.
pub fn continuity(cfg: SuiteConfig, r: i64, ms: &[u32], literal_exponent: bool) -> Result<SuiteResult> {
    let space = cfg.space()?;
    let ring = space.ring();
    let g = depleted_eisenstein(&space, 8)?;
    let k = WeightCharacter::classical(ring, &[8, 8]);
    let q = if literal_exponent { cfg.p } else { cfg.p.pow(ring.degree() as u32) } as i64;
    let mut res = SuiteResult::new(&format!("continuity (p = {}, period {} p^m)", cfg.p, q - 1));
    let base = nabla_pow(&g, &k, &WeightCharacter::classical(ring, &[r, 0]))?;
    for &m in ms {
        let r2 = r + (q - 1) * (cfg.p as i64).pow(m);
        let other = nabla_pow(&g, &k, &WeightCharacter::classical(ring, &[r2, 0]))?;
        let v = base.diff_valuation(&other)?;
        res.push(format!("m = {m}, r' = {r2}"), v > m, format!("agreement {v}, required {}", m + 1));
    }
    Ok(res)
}

fn gz_line(res: &mut SuiteResult, label: &str, out: &GzOutcome, projected: bool, max_loss: Option<u32>) {
    let c = if projected { &out.projected } else { &out.noc };
    let loss_ok = max_loss.is_none_or(|m| out.loss <= m);
    let rows: Vec<String> = c.rows.iter().map(|r| format!("{}:{}", r.term, r.valuation)).collect();
    res.push(
        label,
        c.passed && loss_ok,
        format!("agreement {} of {} (loss {}) [{}]", c.agreement, c.attainable, out.loss, rows.join(" ")),
    );
}

/// Inert identity `tau G = (-1)^s s! zeta*(nabla^(-s-1,0) g^[p])` with
/// `l = (s+2+delta, s+2+delta)` and `g` the divisor series of that weight.
pub fn gz_inert(cfg: SuiteConfig, ss: &[i64], deltas: &[i64]) -> Result<SuiteResult> {
    let cases: Vec<_> = ss
        .iter()
        .flat_map(|&s| {
            deltas.iter().map(move |&delta| {
                let l = s + 2 + delta;
                ([l, l], s)
            })
        })
        .collect();
    gz_inert_cases(cfg, &cases)
}

/// Inert identity on explicit `(l, s)` cases, parallel weight only.
pub fn gz_inert_cases(cfg: SuiteConfig, cases: &[([i64; 2], i64)]) -> Result<SuiteResult> {
    let space = cfg.space()?;
    if space.splitting.is_split() {
        return Err(Error::Config(format!("p = {} splits; the inert suite needs an inert prime", cfg.p)));
    }
    let mut res = SuiteResult::new(&format!("inert Gross-Zagier identity (p = {})", cfg.p));
    for &(l, s) in cases {
        if l[0] != l[1] || l[0] < 2 {
            return Err(Error::Config(format!("the inert suite needs parallel weight l >= 2, got {l:?}")));
        }
        let g = hilbert_divisor_series(&space, l[0] as u32)?;
        let out = verify_gz(&g, l, s)?;
        gz_line(&mut res, &format!("s = {s}, l = ({},{}), k = {}", l[0], l[1], l[0] + l[1] - 2 * s - 2), &out, false, None);
    }
    Ok(res)
}

pub fn gz_split(cfg: SuiteConfig, cases: &[([i64; 2], i64)], max_loss: u32) -> Result<SuiteResult> {
    let space = cfg.space()?;
    if !space.splitting.is_split() {
        return Err(Error::Config(format!("p = {} is inert; the split suite needs a split prime", cfg.p)));
    }
    let mut res = SuiteResult::new(&format!("split Gross-Zagier identity (p = {})", cfg.p));
    for &(l, s) in cases {
        let g = hilbert_eisenstein(&space, l[0] as u32)?;
        let out = verify_gz(&g, l, s)?;
        let k = l[0] + l[1] - 2 * (s + 1);
        gz_line(&mut res, &format!("s = {s}, l = ({},{}), k = {k}", l[0], l[1]), &out, true, Some(max_loss));
    }
    Ok(res)
}

/// Split Hecke roots of the parallel weight `l` Eisenstein series.
fn eisenstein_roots(ring: PadicRing, l: i64) -> Result<[crate::hecke::HeckeRoots; 2]> {
    let c = PadicScalar::p_pow(ring, l - 1);
    let a = PadicScalar::from_int(ring, 1).add(&c);
    let r = hecke_roots(a, c)?;
    Ok([r, r])
}

/// Polynomial splitting on random root tuples and the decomposition
/// identity on the Eisenstein series.
pub fn decomposition(cfg: SuiteConfig, samples: usize, seed: u64) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(&format!("split decomposition (p = {})", cfg.p));
    let ring = PadicRing::new(cfg.p, 10, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fails = 0;
    for _ in 0..samples {
        let r: Vec<PadicScalar> = (0..4).map(|_| PadicScalar::from_int(ring, rng.gen_range(1..=20))).collect();
        if split_poly_decomp(r[0], r[1], r[2], r[3]).is_err() {
            fails += 1;
        }
    }
    tally(&mut res, "P = a_2 P_1 + b_1 P_2 with monomial split", fails, samples);

    let space = cfg.space()?;
    let g = hilbert_eisenstein(&space, 8)?;
    let prims = build_split_primitives(&g, eisenstein_roots(space.ring(), 8)?, [8, 8], 1)?;
    let rhs = prims.rhs([8, 8])?;
    let v = prims.lhs.diff_valuation(&rhs)?;
    let bound = prims.lhs.bound().min(rhs.bound());
    res.push(
        "P(V(p)) g = d_1^(l_1-1) (h + h_1) + d_2^(l_2-1) h_2",
        v >= cfg.prec,
        format!("agreement {v} of {} on trace bound {bound}", cfg.prec),
    );
    Ok(res)
}

/// `U zeta*(V(p_2) x) = 0` on random `p_1`-depleted forms and the
/// componentwise `U`-nilpotence of `tau H_1 + tau H_2`.
pub fn vanishing(cfg: SuiteConfig, samples: usize, seed: u64) -> Result<SuiteResult> {
    let space = cfg.space()?;
    let mut res = SuiteResult::new(&format!("vanishing (p = {})", cfg.p));
    let mut fails = 0;
    for t in 0..samples as u64 {
        let x = random_depleted(seed.wrapping_add(t), &space, PrimeSel::P1);
        if !u_zeta_v2(&x).is_zero() {
            fails += 1;
        }
    }
    tally(&mut res, "U zeta*(V(p_2) x) = 0", fails, samples);

    let g = hilbert_eisenstein(&space, 8)?;
    let prims = build_split_primitives(&g, eisenstein_roots(space.ring(), 8)?, [8, 8], 1)?;
    let pieces = vanishing_pieces(&prims, [8, 8], 1)?;
    let ok = pieces.iter().all(|p| p.2);
    let detail: Vec<String> = pieces.iter().map(|(n, b, ok)| format!("{n} (bound {b}): {}", if *ok { "0" } else { "nonzero" })).collect();
    res.push("e(tau H_1 + tau H_2) = 0 via U-nilpotence", ok, detail.join("; "));
    Ok(res)
}

/// Whether `a - b` vanishes to known precision, with the smallest such
/// precision.
fn mat_zero(a: &Mat, b: &Mat) -> (bool, i64) {
    let mut all = true;
    for (r, s) in a.iter().zip(b) {
        for (x, y) in r.iter().zip(s) {
            all &= x.sub(y).is_zero();
        }
    }
    (all, mat_agreement(a, b))
}

/// Hecke and slope machinery on the weight 12 level 1 basis.
pub fn slopes(p: u64, prec: u32) -> Result<SuiteResult> {
    let ring = PadicRing::new(p, prec, 1)?;
    let mut res = SuiteResult::new(&format!("slopes (p = {p})"));
    let mut basis = demo_basis(ring, 12)?;
    let u = u_matrix(&mut basis)?;
    let d = basis.dim();
    let zero = PadicScalar::zero(ring, prec as i64);
    let mut closed: Mat = vec![vec![zero; d]; d];
    for (b, bl) in basis.blocks.iter().enumerate() {
        let m = bl.closed_u_block();
        for i in 0..2 {
            for j in 0..2 {
                closed[2 * b + i][2 * b + j] = m[i][j];
            }
        }
    }
    let (z, a) = mat_zero(&u, &closed);
    res.push("U-matrix equals the closed block form", z, format!("difference zero to precision {a}"));

    let dec = SlopeDecomposition::new(&basis, u.clone(), 1.0)?;
    let pp = mat_mul(&dec.projector, &dec.projector);
    let (z, a) = mat_zero(&pp, &dec.projector);
    res.push("projector is idempotent", z, format!("difference zero to precision {a}"));

    let ord = SlopeDecomposition::new(&basis, u, 0.0)?;
    let lim = ord.ordinary_by_power(6);
    let a = mat_agreement(&lim, &ord.projector);
    res.push("ordinary projector equals lim U^(n!) (n = 6)", a >= 10, format!("agreement {a}, required 10"));

    let mut stab_ok = true;
    let mut detail = Vec::new();
    for bl in &basis.blocks {
        let roots = bl.roots()?;
        for (side, lam) in [(true, roots.alpha), (false, roots.beta)] {
            let f = pstabilize(&bl.form, &roots, side)?;
            let uf = f.u_op();
            let (l, _) = lam.to_num()?;
            let v = uf.diff_valuation(&f.scale(l).truncate(uf.bound()))?;
            stab_ok &= v >= prec;
            detail.push(format!("{}_{}: {v}", bl.name, if side { "alpha" } else { "beta" }));
        }
    }
    res.push("U f_alpha = alpha f_alpha", stab_ok, detail.join(", "));
    let delta = basis.blocks.iter().find(|b| b.name == "Delta").ok_or_else(|| Error::Config("no Delta block".into()))?;
    let sl = delta.roots()?.slopes;
    res.push("Newton slopes of Delta sum to 11", sl.0 + sl.1 == 11, format!("{{{}, {}}}", sl.0, sl.1));
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_operator_run() {
        let cfg = SuiteConfig { d: 5, p: 7, prec: 6, bound: 12 };
        let r = operators(cfg, 3, 1).unwrap();
        assert!(r.passed(), "{}", r.render());
        let cfg = SuiteConfig { d: 5, p: 11, prec: 6, bound: 12 };
        assert!(operators(cfg, 3, 1).unwrap().passed());
    }

    #[test]
    fn wrong_splitting_is_a_config_error() {
        assert!(matches!(gz_inert(SuiteConfig::SPLIT, &[0], &[0]), Err(Error::Config(_))));
        assert!(matches!(gz_split(SuiteConfig::INERT, &[([8, 8], 1)], 2), Err(Error::Config(_))));
    }
}
