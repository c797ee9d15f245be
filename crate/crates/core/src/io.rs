//! JSON form and basis files.
//!
//! Coefficients are written as residues in the ring basis `{1, w}`. Hilbert
//! files list only nonzero coefficients, keyed by the numerators `(x, y)` of
//! `(x + y sqrt D) / (2D)`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{make_field, splitting_type, Elem, IdealTag};
use crate::hecke::{ClassicalBasis, EigenBlock};
use crate::nearly_oc::{EllipticNoc, HilbertNoc};
use crate::padic::{PadicNum, PadicRing, PadicScalar};
use crate::qexp::{EllipticQExp, HilbertQExp, HilbertSpace};
use crate::weights::WeightCharacter;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRepr {
    #[serde(rename = "D")]
    pub d: i64,
}

/// Weight as an integer vector, or as `(finite part, analytic exponent)`
/// pairs with the exponent a decimal residue mod `p^N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightRepr {
    Classical(Vec<i64>),
    Analytic(Vec<(i64, String)>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    pub value: String,
}

/// On-disk form. Hilbert forms carry `field`, `support` and `bound`; elliptic
/// forms omit them and index coefficients by `n`.
///
/// `beta` holds coordinates on `{1, phi}`, of `beta` itself for support
/// `"OL"`, of `beta sqrt D` for `"dinv"` and of `beta / gamma` for
/// `"principal"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormFile {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldRepr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<[i64; 2]>,
    pub prime: u64,
    pub precision: u32,
    #[serde(default = "one")]
    pub degree: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightRepr>,
    pub coeffs: Vec<CoeffRepr>,
}

fn one() -> u8 {
    1
}

/// A form read from or written to disk.
#[derive(Clone, Debug)]
pub enum FormData {
    Hilbert(HilbertQExp),
    Elliptic(EllipticQExp),
}

impl FormData {
    pub fn ring(&self) -> PadicRing {
        match self {
            FormData::Hilbert(h) => h.ring(),
            FormData::Elliptic(e) => e.ring(),
        }
    }
}

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Error {
    Error::SchemaError { pointer: pointer.into(), message: message.into() }
}

/// `"a"` or `"a + b*w"` in decimal residues.
pub fn format_value(x: &PadicNum) -> String {
    let [a, b] = x.coords();
    if b == 0 {
        a.to_string()
    } else {
        format!("{a} + {b}*w")
    }
}

pub fn parse_value(ring: PadicRing, s: &str, pointer: &str) -> Result<PadicNum> {
    let bad = || schema(pointer, format!("cannot read {s:?} as a residue"));
    let mut c = [0u64; 2];
    for part in s.split('+') {
        let part = part.trim();
        if let Some(w) = part.strip_suffix("*w") {
            c[1] = w.trim().parse().map_err(|_| bad())?;
        } else {
            c[0] = part.parse().map_err(|_| bad())?;
        }
    }
    num(ring, c, pointer)
}

fn weight_repr(w: &Option<WeightCharacter>) -> Option<WeightRepr> {
    w.as_ref().map(|w| match w.classical_value() {
        Some(c) => WeightRepr::Classical(c.to_vec()),
        None => WeightRepr::Analytic((0..w.dim()).map(|i| (w.chi(i), format_value(&w.u(i)))).collect()),
    })
}

fn weight_from(ring: PadicRing, w: &Option<WeightRepr>) -> Result<Option<WeightCharacter>> {
    match w {
        None => Ok(None),
        Some(WeightRepr::Classical(c)) => Ok(Some(WeightCharacter::classical(ring, c))),
        Some(WeightRepr::Analytic(pairs)) => {
            let u: Result<Vec<_>> =
                pairs.iter().enumerate().map(|(i, (_, u))| parse_value(ring, u, &format!("/weight/{i}/1"))).collect();
            let chi = pairs.iter().map(|(c, _)| *c).collect();
            WeightCharacter::analytic(u?, chi).map(Some).map_err(|e| schema("/weight", e.to_string()))
        }
    }
}

fn num(ring: PadicRing, c: [u64; 2], pointer: &str) -> Result<PadicNum> {
    let m = ring.modulus();
    if c[0] >= m || c[1] >= m || (ring.degree() == 1 && c[1] != 0) {
        return Err(schema(pointer, format!("coefficient {c:?} is not a residue of the ring")));
    }
    Ok(ring.from_coords(c))
}

fn support_of(tag: &IdealTag) -> (&'static str, Option<[i64; 2]>) {
    match tag {
        IdealTag::Ring => ("OL", None),
        IdealTag::InverseDifferent => ("dinv", None),
        IdealTag::Principal(g) => {
            let (a, b) = g.ol_coords().expect("principal generators are integral");
            ("principal", Some([a, b]))
        }
    }
}

fn beta_coords(tag: &IdealTag, e: &Elem) -> [i64; 2] {
    let c = match tag {
        IdealTag::Ring => e.ol_coords(),
        IdealTag::InverseDifferent => e.dinv_coords(),
        IdealTag::Principal(g) => e.div(g).and_then(|q| q.ol_coords()),
    };
    let (a, b) = c.expect("index lies in its lattice");
    [a, b]
}

fn beta_elem(tag: &IdealTag, d: i64, [a, b]: [i64; 2]) -> Option<Elem> {
    match tag {
        IdealTag::Ring => Some(Elem::from_ol(d, a, b)),
        IdealTag::InverseDifferent => Some(Elem::from_dinv(d, a, b)),
        IdealTag::Principal(g) => Elem::from_ol(d, a, b).mul(g),
    }
}

pub fn to_file(form: &FormData) -> FormFile {
    let ring = form.ring();
    let base = FormFile {
        version: FORMAT_VERSION,
        field: None,
        support: None,
        gamma: None,
        prime: ring.p(),
        precision: ring.prec(),
        degree: ring.degree(),
        bound: None,
        weight: None,
        coeffs: Vec::new(),
    };
    match form {
        FormData::Hilbert(h) => {
            let ix = &h.space().index;
            let (support, gamma) = support_of(&ix.tag);
            let coeffs = h
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(k, c)| CoeffRepr { beta: Some(beta_coords(&ix.tag, &ix.get(k))), n: None, value: format_value(c) })
                .collect();
            FormFile {
                field: Some(FieldRepr { d: ix.d }),
                support: Some(support.to_string()),
                gamma,
                bound: Some(h.bound()),
                weight: weight_repr(&h.weight),
                coeffs,
                ..base
            }
        }
        FormData::Elliptic(e) => FormFile {
            weight: weight_repr(&e.weight),
            coeffs: e
                .coeffs()
                .iter()
                .enumerate()
                .map(|(n, c)| CoeffRepr { beta: None, n: Some(n as u64), value: format_value(c) })
                .collect(),
            ..base
        },
    }
}

pub fn write_form(form: &FormData) -> String {
    serde_json::to_string_pretty(&to_file(form)).expect("form serializes")
}

/// Parses JSON into `T`, reporting failures with a JSON pointer.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let pointer = if path == "." { "/".to_string() } else { format!("/{}", path.replace('.', "/")) };
        schema(pointer, e.inner().to_string())
    })
}

fn check_version(text: &str) -> Result<()> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| schema("/", e.to_string()))?;
    match v.get("version").and_then(|x| x.as_u64()) {
        Some(x) if x == FORMAT_VERSION as u64 => Ok(()),
        Some(x) => Err(schema(
            "/version",
            format!("file version {x}, expected {FORMAT_VERSION}; regenerate the file with `hpl gen` or rewrite it with this version's layout"),
        )),
        None => Err(schema("/version", "missing format version")),
    }
}

fn tag_from(f: &FormFile, d: i64) -> Result<IdealTag> {
    match f.support.as_deref() {
        Some("OL") => Ok(IdealTag::Ring),
        Some("dinv") => Ok(IdealTag::InverseDifferent),
        Some("principal") => {
            let [a, b] = f.gamma.ok_or_else(|| schema("/gamma", "principal support needs a generator"))?;
            Ok(IdealTag::Principal(Elem::from_ol(d, a, b)))
        }
        Some(other) => Err(schema("/support", format!("unknown support {other:?}"))),
        None => Err(schema("/support", "missing support")),
    }
}

/// Reads a form; Hilbert forms get a fresh index space (or `space` when it
/// matches).
pub fn read_form(text: &str, space: Option<&Arc<HilbertSpace>>) -> Result<FormData> {
    check_version(text)?;
    let f: FormFile = parse_json(text)?;
    let ring = PadicRing::new(f.prime, f.precision, f.degree).map_err(|e| schema("/prime", e.to_string()))?;
    let weight = weight_from(ring.base(), &f.weight)?;
    let Some(field) = &f.field else {
        let mut coeffs = Vec::new();
        for (i, c) in f.coeffs.iter().enumerate() {
            let at = format!("/coeffs/{i}");
            match c.n {
                Some(n) if n as usize == coeffs.len() => {}
                Some(_) => return Err(schema(format!("{at}/n"), "elliptic coefficients must be listed as n = 0, 1, 2, ...")),
                None => return Err(schema(at, "elliptic coefficients need an index n")),
            }
            coeffs.push(parse_value(ring, &c.value, &format!("{at}/value"))?);
        }
        if coeffs.is_empty() {
            return Err(schema("/coeffs", "no coefficients"));
        }
        return Ok(FormData::Elliptic(EllipticQExp::from_coeffs(ring, coeffs).with_weight(weight)));
    };
    let d = field.d;
    let tag = tag_from(&f, d)?;
    let bound = f.bound.ok_or_else(|| schema("/bound", "missing trace bound"))?;
    let space = match space {
        Some(s) if s.field.d == d && s.index.tag == tag && s.bound() >= bound && s.ring() == ring => s.clone(),
        _ => {
            let fld = make_field(d).map_err(|e| schema("/field/D", e.to_string()))?;
            let sp = splitting_type(&fld, f.prime, f.precision).map_err(|e| schema("/prime", e.to_string()))?;
            if sp.ring.degree() != f.degree {
                return Err(schema("/degree", format!("p = {} needs degree {}", f.prime, sp.ring.degree())));
            }
            HilbertSpace::new(fld, sp, tag, bound)?
        }
    };
    let mut coeffs = vec![ring.zero(); space.len()];
    for (i, c) in f.coeffs.iter().enumerate() {
        let at = format!("/coeffs/{i}");
        let beta = c.beta.ok_or_else(|| schema(&at, "Hilbert coefficients need beta"))?;
        let k = beta_elem(&tag, d, beta)
            .and_then(|e| space.index.position(&e))
            .filter(|&k| space.trace_of(k) <= bound)
            .ok_or_else(|| schema(format!("{at}/beta"), format!("{beta:?} is not an index below the bound")))?;
        coeffs[k] = parse_value(ring, &c.value, &format!("{at}/value"))?;
    }
    Ok(FormData::Hilbert(HilbertQExp::from_coeffs(&space, coeffs, bound)?.with_weight(weight)))
}

pub fn load_form(path: &Path, space: Option<&Arc<HilbertSpace>>) -> Result<FormData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    read_form(&text, space)
}

pub fn save_form(path: &Path, form: &FormData) -> Result<()> {
    std::fs::write(path, write_form(form)).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// One component of a nearly overconvergent expansion: `gamma_j`, whose
/// `Y^j` coefficient is `p^|j| gamma_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NocComponent {
    pub degree: Vec<u32>,
    pub form: FormFile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NocFile {
    pub version: u32,
    pub weight: WeightRepr,
    pub components: Vec<NocComponent>,
}

#[derive(Clone, Debug)]
pub enum NocData {
    Hilbert(HilbertNoc),
    Elliptic(EllipticNoc),
}

pub fn write_noc(x: &NocData) -> String {
    let (weight, components) = match x {
        NocData::Hilbert(h) => (
            &h.weight,
            h.terms()
                .iter()
                .map(|(&(a, b), g)| NocComponent { degree: vec![a, b], form: to_file(&FormData::Hilbert(g.clone())) })
                .collect(),
        ),
        NocData::Elliptic(e) => (
            &e.weight,
            e.terms()
                .iter()
                .map(|(&j, g)| NocComponent { degree: vec![j], form: to_file(&FormData::Elliptic(g.clone())) })
                .collect(),
        ),
    };
    let f = NocFile { version: FORMAT_VERSION, weight: weight_repr(&Some(weight.clone())).expect("weight present"), components };
    serde_json::to_string_pretty(&f).expect("expansion serializes")
}

/// True when the JSON document is a nearly overconvergent expansion.
pub fn is_noc(text: &str) -> bool {
    serde_json::from_str::<serde_json::Value>(text).map(|v| v.get("components").is_some()).unwrap_or(false)
}

pub fn read_noc(text: &str, space: Option<&Arc<HilbertSpace>>) -> Result<NocData> {
    check_version(text)?;
    let f: NocFile = parse_json(text)?;
    let first = f.components.first().ok_or_else(|| schema("/components", "no components"))?;
    let mut space: Option<Arc<HilbertSpace>> = space.cloned();
    let mut hil = BTreeMap::new();
    let mut ell = BTreeMap::new();
    let mut ring = None;
    let mut bound = u32::MAX;
    for (i, c) in f.components.iter().enumerate() {
        let text = serde_json::to_string(&c.form).expect("form serializes");
        let form = read_form(&text, space.as_ref()).map_err(|err| match err {
            Error::SchemaError { pointer, message } => schema(format!("/components/{i}/form{pointer}"), message),
            other => other,
        })?;
        match (form, c.degree.as_slice()) {
            (FormData::Hilbert(h), &[a, b]) => {
                space.get_or_insert_with(|| h.space().clone());
                ring = Some(h.ring());
                hil.insert((a, b), h);
            }
            (FormData::Elliptic(e), &[j]) => {
                ring = Some(e.ring());
                bound = bound.min(e.bound());
                ell.insert(j, e);
            }
            _ => return Err(schema(format!("/components/{i}/degree"), "degree does not match the form kind")),
        }
    }
    let ring = ring.expect("at least one component");
    let weight = weight_from(ring.base(), &Some(f.weight.clone()))?.expect("weight present");
    if first.degree.len() == 2 {
        if !ell.is_empty() {
            return Err(schema("/components", "mixed Hilbert and elliptic components"));
        }
        Ok(NocData::Hilbert(HilbertNoc::from_gammas(space.as_ref().expect("Hilbert component"), hil, weight)))
    } else {
        if !hil.is_empty() {
            return Err(schema("/components", "mixed Hilbert and elliptic components"));
        }
        Ok(NocData::Elliptic(EllipticNoc::from_gammas(ring, bound, ell, weight)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenEntry {
    pub index: usize,
    pub name: String,
    pub a_p: [u64; 2],
    pub nebentype_at_p: [u64; 2],
}

/// Classical basis file: eigenforms listed by index into `forms`; the basis
/// is `{f, V f}` per eigenform.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    pub version: u32,
    pub weight: u32,
    pub tame_level: u64,
    pub p: u64,
    pub precision: u32,
    pub forms: Vec<FormFile>,
    pub eigen: Vec<EigenEntry>,
}

pub fn basis_to_file(b: &ClassicalBasis) -> BasisFile {
    let ring = b.ring();
    BasisFile {
        version: FORMAT_VERSION,
        weight: b.k,
        tame_level: b.level,
        p: ring.p(),
        precision: ring.prec(),
        forms: b.blocks.iter().map(|bl| to_file(&FormData::Elliptic(bl.form.clone()))).collect(),
        eigen: b
            .blocks
            .iter()
            .enumerate()
            .map(|(i, bl)| EigenEntry { index: i, name: bl.name.clone(), a_p: bl.a_p.coords(), nebentype_at_p: [1, 0] })
            .collect(),
    }
}

pub fn read_basis(text: &str) -> Result<ClassicalBasis> {
    check_version(text)?;
    let f: BasisFile = parse_json(text)?;
    let mut blocks = Vec::new();
    for (i, e) in f.eigen.iter().enumerate() {
        let body = f.forms.get(e.index).ok_or_else(|| schema(format!("/eigen/{i}/index"), "no such form"))?;
        let text = serde_json::to_string(body).expect("form serializes");
        let FormData::Elliptic(form) = read_form(&text, None).map_err(|err| match err {
            Error::SchemaError { pointer, message } => schema(format!("/forms/{}{pointer}", e.index), message),
            other => other,
        })?
        else {
            return Err(schema(format!("/forms/{}", e.index), "basis forms must be elliptic"));
        };
        let ring = form.ring();
        let neb = num(ring, e.nebentype_at_p, &format!("/eigen/{i}/nebentype_at_p"))?;
        let c = PadicScalar::p_pow(ring, f.weight as i64 - 1).mul_num(&neb);
        let a_p = num(ring, e.a_p, &format!("/eigen/{i}/a_p"))?;
        blocks.push(EigenBlock { name: e.name.clone(), form, a_p, c });
    }
    ClassicalBasis::from_blocks(f.weight, f.tame_level, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeSel;
    use crate::forms::{random_depleted, random_elliptic};

    fn space() -> Arc<HilbertSpace> {
        let f = make_field(5).unwrap();
        let s = splitting_type(&f, 7, 6).unwrap();
        HilbertSpace::new(f, s, IdealTag::InverseDifferent, 12).unwrap()
    }

    #[test]
    fn hilbert_roundtrip() {
        let sp = space();
        let g = random_depleted(3, &sp, PrimeSel::P).with_weight(Some(WeightCharacter::classical(sp.ring(), &[4, 6])));
        let text = write_form(&FormData::Hilbert(g.clone()));
        let FormData::Hilbert(h) = read_form(&text, None).unwrap() else { panic!() };
        assert_eq!(h.coeffs(), g.coeffs());
        assert_eq!(h.weight, g.weight);
        let FormData::Hilbert(h2) = read_form(&text, Some(&sp)).unwrap() else { panic!() };
        assert!(Arc::ptr_eq(h2.space(), &sp));
    }

    #[test]
    fn noc_roundtrip() {
        let sp = space();
        let g = random_depleted(5, &sp, PrimeSel::P);
        let k = WeightCharacter::classical(sp.ring(), &[2, 2]);
        let r = WeightCharacter::classical(sp.ring(), &[2, 0]);
        let n = crate::nearly_oc::nabla_pow(&g, &k, &r).unwrap();
        let text = write_noc(&NocData::Hilbert(n.clone()));
        assert!(is_noc(&text));
        let NocData::Hilbert(back) = read_noc(&text, Some(&sp)).unwrap() else { panic!() };
        assert_eq!(back.diff_valuation(&n).unwrap(), sp.ring().prec());
        let z = n.zeta_star();
        let NocData::Elliptic(zb) = read_noc(&write_noc(&NocData::Elliptic(z.clone())), None).unwrap() else { panic!() };
        assert_eq!(zb.diff_valuation(&z).unwrap(), sp.ring().prec());
    }

    #[test]
    fn schema_errors() {
        let r = PadicRing::new(7, 6, 1).unwrap();
        let e = random_elliptic(1, r, 10);
        let text = write_form(&FormData::Elliptic(e));
        let bumped = text.replacen("\"version\": 1", "\"version\": 0", 1);
        match read_form(&bumped, None) {
            Err(Error::SchemaError { pointer, message }) => {
                assert_eq!(pointer, "/version");
                assert!(message.contains("regenerate"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_form(&text[..text.len() / 2], None), Err(Error::SchemaError { .. })));
        let bad = text.replacen("\"precision\": 6", "\"precision\": \"six\"", 1);
        match read_form(&bad, None) {
            Err(Error::SchemaError { pointer, .. }) => assert_eq!(pointer, "/precision"),
            other => panic!("{other:?}"),
        }
    }
}
