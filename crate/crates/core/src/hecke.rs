//! Finite-slope linear algebra on small spaces of classical elliptic
//! q-expansions: the matrix of `U`, Hecke roots, p-stabilization, slope
//! projectors and the coordinate of an eigenvector.
//!
//! Matrices are dense over [`PadicScalar`], so non-unit pivots and the
//! resulting precision loss are tracked entry by entry.

use crate::error::{Error, Result};
use crate::padic::{PadicNum, PadicRing, PadicScalar};
use crate::qexp::EllipticQExp;

pub type Mat = Vec<Vec<PadicScalar>>;

fn sc(x: PadicNum) -> PadicScalar {
    PadicScalar::from_num(x)
}

pub fn identity(ring: PadicRing, n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { PadicScalar::from_int(ring, 1) } else { PadicScalar::zero(ring, ring.prec() as i64) }).collect())
        .collect()
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let ring = a[0][0].ring();
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..inner).fold(PadicScalar::zero(ring, i64::MAX / 4), |acc, t| acc.add(&a[i][t].mul(&b[t][j])))
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &Mat, v: &[PadicScalar]) -> Vec<PadicScalar> {
    let ring = a[0][0].ring();
    a.iter()
        .map(|row| row.iter().zip(v).fold(PadicScalar::zero(ring, i64::MAX / 4), |acc, (x, y)| acc.add(&x.mul(y))))
        .collect()
}

pub fn mat_pow(a: &Mat, mut e: u64) -> Mat {
    let ring = a[0][0].ring();
    let mut base = a.clone();
    let mut r = identity(ring, a.len());
    while e > 0 {
        if e & 1 == 1 {
            r = mat_mul(&r, &base);
        }
        base = mat_mul(&base, &base);
        e >>= 1;
    }
    r
}

/// Minimal valuation of `a - b` over all entries.
pub fn mat_agreement(a: &Mat, b: &Mat) -> i64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| x.agreement(y)))
        .min()
        .unwrap_or(i64::MAX)
}

/// Solves `A X = B` by elimination with minimal-valuation pivots.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat> {
    let n = a.len();
    let m = b[0].len();
    let mut aug: Vec<Vec<PadicScalar>> = a.iter().zip(b).map(|(r, s)| r.iter().chain(s).copied().collect()).collect();
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| !aug[r][col].is_zero())
            .min_by_key(|&r| aug[r][col].valuation())
            .ok_or_else(|| Error::NotInSpan("singular matrix".into()))?;
        aug.swap(col, piv);
        let inv = aug[col][col].inv()?;
        for x in aug[col].iter_mut() {
            *x = x.mul(&inv);
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col];
                for c in 0..n + m {
                    aug[r][c] = aug[r][c].sub(&f.mul(&aug[col][c]));
                }
            }
        }
    }
    Ok(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Newton-polygon data and roots of `X^2 - a X + c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeckeRoots {
    /// Smaller-slope root.
    pub alpha: PadicScalar,
    pub beta: PadicScalar,
    pub slopes: (i64, i64),
}

pub fn hecke_roots(a: PadicScalar, c: PadicScalar) -> Result<HeckeRoots> {
    if c.is_zero() {
        return Err(Error::Config("Hecke polynomial with vanishing constant term".into()));
    }
    let va = a.valuation();
    let vc = c.valuation();
    if a.is_zero() || 2 * va >= vc {
        return Err(Error::EqualSlopes);
    }
    let mut alpha = a;
    for _ in 0..(a.ring().prec() as i64 + vc + 4) {
        let next = a.sub(&c.div(&alpha)?);
        if next == alpha {
            break;
        }
        alpha = next;
    }
    let beta = c.div(&alpha)?;
    Ok(HeckeRoots { alpha, beta, slopes: (alpha.valuation(), beta.valuation()) })
}

/// Roots of `T_p` on `f` with `T_p f = a_p f`, `c = p^(k-1) * nebentype(p)`.
pub fn roots_for(a_p: PadicNum, c: PadicScalar) -> Result<HeckeRoots> {
    hecke_roots(sc(a_p), c)
}

/// `f - other * V f`: the stabilization on which `U` acts by the chosen root.
pub fn pstabilize(f: &EllipticQExp, roots: &HeckeRoots, alpha_side: bool) -> Result<EllipticQExp> {
    let other = if alpha_side { roots.beta } else { roots.alpha };
    let (o, _) = other.to_num()?;
    Ok(f.sub(&f.v_op().scale(o))?.with_weight(f.weight.clone()))
}

/// A `T_p`-eigenform of level prime to `p`: it contributes `{f, V f}`.
#[derive(Clone, Debug)]
pub struct EigenBlock {
    pub name: String,
    pub form: EllipticQExp,
    pub a_p: PadicNum,
    /// `p^(k-1)` times the nebentype at `p`.
    pub c: PadicScalar,
}

impl EigenBlock {
    pub fn roots(&self) -> Result<HeckeRoots> {
        roots_for(self.a_p, self.c)
    }

    /// `[[a_p, 1], [-c, 0]]`: `U f = a_p f - c V f`, `U V f = f`.
    pub fn closed_u_block(&self) -> Mat {
        let ring = self.a_p.ring();
        let z = PadicScalar::zero(ring, ring.prec() as i64);
        vec![vec![sc(self.a_p), PadicScalar::from_int(ring, 1)], vec![self.c.neg(), z]]
    }
}

/// Finite family of elliptic q-expansions standing in for a space of
/// classical forms.
#[derive(Clone, Debug)]
pub struct ClassicalBasis {
    pub k: u32,
    pub level: u64,
    pub forms: Vec<EllipticQExp>,
    pub labels: Vec<String>,
    pub blocks: Vec<EigenBlock>,
    pub pivots: Vec<usize>,
    pub u_stable: bool,
}

impl ClassicalBasis {
    pub fn new(k: u32, level: u64, forms: Vec<EllipticQExp>, labels: Vec<String>) -> Result<Self> {
        if forms.is_empty() {
            return Err(Error::Config("empty basis".into()));
        }
        let mut b = ClassicalBasis { k, level, forms, labels, blocks: Vec::new(), pivots: Vec::new(), u_stable: false };
        b.pivots = b.choose_pivots(b.bound())?;
        Ok(b)
    }

    /// Basis `{f, V f}` for each eigenform.
    pub fn from_blocks(k: u32, level: u64, blocks: Vec<EigenBlock>) -> Result<Self> {
        let mut forms = Vec::new();
        let mut labels = Vec::new();
        for bl in &blocks {
            forms.push(bl.form.clone());
            forms.push(bl.form.v_op());
            labels.push(bl.name.clone());
            labels.push(format!("V{}", bl.name));
        }
        let mut b = Self::new(k, level, forms, labels)?;
        b.blocks = blocks;
        Ok(b)
    }

    pub fn ring(&self) -> PadicRing {
        self.forms[0].ring()
    }
    pub fn dim(&self) -> usize {
        self.forms.len()
    }
    pub fn bound(&self) -> u32 {
        self.forms.iter().map(|f| f.bound()).min().unwrap()
    }

    fn entry(&self, j: usize, n: usize) -> PadicScalar {
        sc(self.forms[j].coeffs()[n])
    }

    fn rank_of(&self, rows: &[usize]) -> usize {
        let tol = self.ring().prec() as i64 / 2;
        let mut m: Vec<Vec<PadicScalar>> = rows.iter().map(|&n| (0..self.dim()).map(|j| self.entry(j, n)).collect()).collect();
        let mut rank = 0;
        for col in 0..self.dim() {
            let piv = (rank..m.len()).filter(|&r| !m[r][col].is_zero() && m[r][col].valuation() < tol).min_by_key(|&r| m[r][col].valuation());
            let Some(piv) = piv else { continue };
            m.swap(rank, piv);
            let inv = m[rank][col].inv().expect("nonzero pivot");
            for r in 0..m.len() {
                if r != rank {
                    let f = m[r][col].mul(&inv);
                    for c in 0..self.dim() {
                        m[r][c] = m[r][c].sub(&f.mul(&m[rank][c]));
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Greedy choice of coefficient indices on which the basis is independent.
    fn choose_pivots(&self, depth: u32) -> Result<Vec<usize>> {
        let mut rows: Vec<usize> = Vec::new();
        for n in 0..=depth.min(self.bound()) as usize {
            rows.push(n);
            if self.rank_of(&rows) < rows.len() {
                rows.pop();
            }
            if rows.len() == self.dim() {
                return Ok(rows);
            }
        }
        Err(Error::UnderDetermined { depth: depth as usize + 1, dim: self.dim() })
    }

    fn pivot_matrix(&self) -> Mat {
        self.pivots.iter().map(|&n| (0..self.dim()).map(|j| self.entry(j, n)).collect()).collect()
    }

    /// Coordinates read off the pivot coefficients, with the residual on
    /// the common bound.
    pub fn coordinates_unchecked(&self, g: &EllipticQExp) -> Result<(Vec<PadicScalar>, i64)> {
        if g.ring() != self.ring() {
            return Err(Error::IndexMismatch("basis and expansion over different rings".into()));
        }
        if self.pivots.iter().any(|&n| n as u32 > g.bound()) {
            return Err(Error::UnderDetermined { depth: g.bound() as usize + 1, dim: self.dim() });
        }
        let rhs: Mat = self.pivots.iter().map(|&n| vec![sc(g.coeffs()[n])]).collect();
        let x: Vec<PadicScalar> = solve(&self.pivot_matrix(), &rhs)?.into_iter().map(|r| r[0]).collect();
        let bound = g.bound().min(self.bound()) as usize;
        let mut residual = i64::MAX;
        for n in 0..=bound {
            let mut acc = sc(g.coeffs()[n]).neg();
            for (j, xj) in x.iter().enumerate() {
                acc = acc.add(&xj.mul(&self.entry(j, n)));
            }
            if !acc.is_zero() {
                residual = residual.min(acc.valuation());
            }
        }
        Ok((x, residual))
    }

    /// Coordinates of `g`, which must lie in the span on the common bound.
    pub fn coordinates(&self, g: &EllipticQExp) -> Result<Vec<PadicScalar>> {
        let (x, residual) = self.coordinates_unchecked(g)?;
        if residual != i64::MAX {
            return Err(Error::NotInSpan(format!("residual of valuation {residual}")));
        }
        Ok(x)
    }

    /// `sum x_j b_j` as an integral expansion, or `None` if some coordinate
    /// is not integral.
    pub fn combine(&self, x: &[PadicScalar]) -> Result<EllipticQExp> {
        let ring = self.ring();
        let mut out = EllipticQExp::zero(ring, self.bound());
        for (xj, f) in x.iter().zip(&self.forms) {
            let (c, _) = xj.to_num()?;
            out = out.add(&f.scale(c))?;
        }
        Ok(out)
    }
}

/// Matrix `M` with `U b_i = sum_j M_ji b_j`; certifies `U`-stability.
pub fn u_matrix(basis: &mut ClassicalBasis) -> Result<Mat> {
    let depth = basis.bound() / basis.ring().p() as u32;
    if (depth as usize + 1) < basis.dim() {
        return Err(Error::UnderDetermined { depth: depth as usize + 1, dim: basis.dim() });
    }
    if basis.pivots.iter().any(|&n| n as u32 > depth) {
        basis.pivots = basis.choose_pivots(depth)?;
    }
    let d = basis.dim();
    let mut m: Mat = vec![Vec::with_capacity(d); d];
    for i in 0..d {
        let ub = basis.forms[i].u_op();
        let (x, residual) = basis.coordinates_unchecked(&ub)?;
        if residual != i64::MAX {
            basis.u_stable = false;
            return Err(Error::NotUStable(format!("U({}) leaves the span (residual valuation {residual})", basis.labels[i])));
        }
        for (j, xj) in x.into_iter().enumerate() {
            m[j].push(xj);
        }
    }
    basis.u_stable = true;
    Ok(m)
}

/// One eigenvector of `U` in basis coordinates.
#[derive(Clone, Debug)]
pub struct EigenVector {
    pub label: String,
    pub block: usize,
    pub alpha_side: bool,
    pub eigenvalue: PadicScalar,
    pub coords: Vec<PadicScalar>,
}

/// Eigen-decomposition of `U` on a block basis and the projector onto slope
/// at most `a`.
#[derive(Clone, Debug)]
pub struct SlopeDecomposition {
    pub u: Mat,
    pub slope_bound: f64,
    pub vectors: Vec<EigenVector>,
    /// Inverse of the eigenvector matrix: row `i` is the coordinate functional
    /// of `vectors[i]`.
    pub dual: Mat,
    pub projector: Mat,
}

impl SlopeDecomposition {
    pub fn new(basis: &ClassicalBasis, u: Mat, slope_bound: f64) -> Result<Self> {
        if basis.blocks.is_empty() {
            return Err(Error::Config("slope decomposition needs eigenform blocks".into()));
        }
        let ring = basis.ring();
        let d = basis.dim();
        let zero = PadicScalar::zero(ring, ring.prec() as i64);
        let one = PadicScalar::from_int(ring, 1);
        let mut vectors = Vec::new();
        for (bi, bl) in basis.blocks.iter().enumerate() {
            let r = bl.roots()?;
            for (alpha_side, lam, other) in [(true, r.alpha, r.beta), (false, r.beta, r.alpha)] {
                let mut coords = vec![zero; d];
                coords[2 * bi] = one;
                coords[2 * bi + 1] = other.neg();
                vectors.push(EigenVector {
                    label: format!("{}_{}", bl.name, if alpha_side { "alpha" } else { "beta" }),
                    block: bi,
                    alpha_side,
                    eigenvalue: lam,
                    coords,
                });
            }
        }
        for v in &vectors {
            let mv = mat_vec(&u, &v.coords);
            for (x, y) in mv.iter().zip(&v.coords) {
                let ok = x.sub(&y.mul(&v.eigenvalue));
                if !ok.is_zero() {
                    return Err(Error::NotEigenform(format!("{} is not a U-eigenvector", v.label)));
                }
            }
        }
        let s: Mat = (0..d).map(|i| vectors.iter().map(|v| v.coords[i]).collect()).collect();
        let dual = solve(&s, &identity(ring, d))?;
        let keep: Mat = (0..d)
            .map(|i| (0..d).map(|j| if i == j && vectors[i].eigenvalue.valuation() as f64 <= slope_bound { one } else { zero }).collect())
            .collect();
        let projector = mat_mul(&mat_mul(&s, &keep), &dual);
        Ok(SlopeDecomposition { u, slope_bound, vectors, dual, projector })
    }

    /// `U^(n!)`, whose limit is the ordinary projector.
    pub fn ordinary_by_power(&self, n: u64) -> Mat {
        let e: u64 = (1..=n).product();
        mat_pow(&self.u, e)
    }

    pub fn project_coords(&self, x: &[PadicScalar]) -> Vec<PadicScalar> {
        mat_vec(&self.projector, x)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.vectors.iter().position(|v| v.label == label)
    }
}

/// `e^{<= a}` applied to an in-span expansion: coordinates and the result.
pub fn slope_project(g: &EllipticQExp, basis: &ClassicalBasis, dec: &SlopeDecomposition) -> Result<(Vec<PadicScalar>, EllipticQExp)> {
    let x = basis.coordinates(g)?;
    let y = dec.project_coords(&x);
    let f = basis.combine(&y)?;
    Ok((y, f))
}

/// Coefficient of the eigenvector `target` in basis coordinates `x`.
pub fn eigen_coordinate(x: &[PadicScalar], dec: &SlopeDecomposition, target: usize) -> Result<PadicScalar> {
    let lam = dec.vectors[target].eigenvalue;
    for (i, v) in dec.vectors.iter().enumerate() {
        if i != target && v.eigenvalue.sub(&lam).is_zero() {
            return Err(Error::NotSeparated(format!("{} and {} share the eigenvalue", dec.vectors[target].label, v.label)));
        }
    }
    Ok(mat_vec(&dec.dual, x)[target])
}

/// `c` with `g = c f* + (other eigenvectors)` for an in-span `g`.
pub fn eigen_pair(g: &EllipticQExp, basis: &ClassicalBasis, dec: &SlopeDecomposition, target: usize) -> Result<PadicScalar> {
    let x = basis.coordinates(g)?;
    eigen_coordinate(&x, dec, target)
}

/// Level one basis `{E_k, V E_k, Delta, V Delta}` (weight 12) or
/// `{E_k, V E_k}` otherwise, at bound `p (p + 3)`.
pub fn demo_basis(ring: PadicRing, k: u32) -> Result<ClassicalBasis> {
    let p = ring.p();
    let bound = (p * (p + 3)) as u32;
    let pk = PadicScalar::p_pow(ring, k as i64 - 1);
    let e = crate::forms::elliptic_eisenstein(k, bound, ring)?;
    let one = ring.one();
    let ap_e = one + if (k as u64 - 1) < ring.prec() as u64 { ring.int(p as i128).pow(k as u64 - 1) } else { ring.zero() };
    let mut blocks = vec![EigenBlock { name: format!("E{k}"), form: e, a_p: ap_e, c: pk }];
    if k == 12 {
        let d = crate::forms::delta_form(bound, ring)?;
        let ap = d.coeffs()[p as usize];
        blocks.push(EigenBlock { name: "Delta".into(), form: d, a_p: ap, c: pk });
    }
    ClassicalBasis::from_blocks(k, 1, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> PadicRing {
        PadicRing::new(7, 12, 1).unwrap()
    }

    #[test]
    fn delta_slopes_at_7() {
        let r = ring();
        let roots = roots_for(r.int(-16744), PadicScalar::p_pow(r, 11)).unwrap();
        assert_eq!(roots.slopes, (1, 10));
        assert!(roots.alpha.add(&roots.beta).agreement(&PadicScalar::from_int(r, -16744)) >= 11);
        let z = roots_for(r.zero(), PadicScalar::p_pow(r, 1));
        assert!(matches!(z, Err(Error::EqualSlopes)));
    }

    #[test]
    fn demo_u_matrix_and_projectors() {
        let r = ring();
        let mut b = demo_basis(r, 12).unwrap();
        assert_eq!(b.pivots, vec![0, 1, 2, 7]);
        let m = u_matrix(&mut b).unwrap();
        assert!(b.u_stable);
        for (bi, bl) in b.blocks.iter().enumerate() {
            let cl = bl.closed_u_block();
            for i in 0..2 {
                for j in 0..2 {
                    assert!(m[2 * bi + i][2 * bi + j].agreement(&cl[i][j]) >= 11);
                }
            }
        }
        let dec = SlopeDecomposition::new(&b, m, 1.0).unwrap();
        let p2 = mat_mul(&dec.projector, &dec.projector);
        assert!(mat_agreement(&p2, &dec.projector) >= 10);
    }

    #[test]
    fn stabilization() {
        let r = ring();
        let d = crate::forms::delta_form(100, r).unwrap();
        let roots = roots_for(r.int(-16744), PadicScalar::p_pow(r, 11)).unwrap();
        let fa = pstabilize(&d, &roots, true).unwrap();
        let (a, _) = roots.alpha.to_num().unwrap();
        let lhs = fa.u_op();
        assert_eq!(lhs.diff_valuation(&fa.truncate(lhs.bound()).scale(a)).unwrap(), 12);
        // (1 - V U) f_alpha is the depletion of f
        let dep = fa.sub(&fa.u_op().v_op()).unwrap();
        assert_eq!(dep.diff_valuation(&d.deplete().truncate(dep.bound())).unwrap(), 12);
    }

    #[test]
    fn inconsistent_basis() {
        let r = ring();
        let d = crate::forms::delta_form(70, r).unwrap();
        let junk = crate::forms::random_elliptic(3, r, 70);
        let mut b = ClassicalBasis::new(12, 1, vec![d, junk], vec!["Delta".into(), "junk".into()]).unwrap();
        assert!(matches!(u_matrix(&mut b), Err(Error::NotUStable(_))));
    }
}
