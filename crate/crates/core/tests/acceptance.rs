//! Acceptance run over the demo configurations: one PASS/FAIL line per
//! criterion.

use std::time::{Duration, Instant};

use hpl_core::lvalue::{euler_factors, EulerInputs, EvalConfig, Evaluation, SplittingKind};
use hpl_core::padic::{PadicRing, PadicScalar};
use hpl_core::report::{EvaluationReport, ValueRepr};
use hpl_core::suites::{self, SuiteConfig, SuiteResult};
use num_rational::Ratio;

type Q = Ratio<i128>;

struct Verdict {
    passed: bool,
    detail: String,
}

fn from_suites(results: &[SuiteResult]) -> Verdict {
    let failed: Vec<String> = results
        .iter()
        .flat_map(|r| r.lines.iter().filter(|l| !l.passed).map(move |l| format!("{}: {}", r.suite, l.name)))
        .collect();
    let total: usize = results.iter().map(|r| r.lines.len()).sum();
    Verdict {
        passed: failed.is_empty() && total > 0,
        detail: if failed.is_empty() { format!("{total} checks") } else { format!("failed: {}", failed.join("; ")) },
    }
}

fn run(name: &str, limit: Duration, f: impl FnOnce() -> Result<Verdict, String>) -> bool {
    let t = Instant::now();
    let v = f().unwrap_or_else(|e| Verdict { passed: false, detail: format!("error: {e}") });
    let dt = t.elapsed();
    let ok = v.passed && dt <= limit;
    let time_note = if dt > limit { format!(", over the {}s target", limit.as_secs()) } else { String::new() };
    println!("{} {name}: {} ({:.1}s{time_note})", if ok { "PASS" } else { "FAIL" }, v.detail, dt.as_secs_f64());
    ok
}

fn suites_verdict(rs: Vec<hpl_core::Result<SuiteResult>>, log: &mut String) -> Result<Verdict, String> {
    let rs: Vec<SuiteResult> = rs.into_iter().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    for r in &rs {
        log.push_str(&r.render());
    }
    Ok(from_suites(&rs))
}

fn criterion_1(log: &mut String) -> Result<Verdict, String> {
    suites_verdict(
        vec![suites::operators(SuiteConfig::INERT, 100, 7), suites::operators(SuiteConfig::SPLIT, 100, 7)],
        log,
    )
}

fn criterion_2(log: &mut String) -> Result<Verdict, String> {
    suites_verdict(
        vec![suites::nabla_iteration(SuiteConfig::INERT, 5), suites::nabla_iteration(SuiteConfig::SPLIT, 5)],
        log,
    )
}

fn criterion_3(log: &mut String) -> Result<Verdict, String> {
    let ms = [1, 2, 3, 4];
    // At the split prime the period is literally (p - 1) p^m. At the inert
    // prime the finite part of the weight lives mod p^2 - 1, so the
    // comparable pair is r + (p^2 - 1) p^m; the literal one is shown below.
    let mut v = suites_verdict(
        vec![
            suites::continuity(SuiteConfig::SPLIT, -2, &ms, true),
            suites::continuity(SuiteConfig::INERT, -2, &ms, false),
        ],
        log,
    )?;
    let lit = suites::continuity(SuiteConfig::INERT, -2, &ms, true).map_err(|e| e.to_string())?;
    log.push_str(&lit.render());
    let worst = lit.lines.iter().filter(|l| !l.passed).count();
    v.detail += &format!("; inert with period (p-1)p^m: {worst} of {} pairs not congruent", lit.lines.len());
    Ok(v)
}

fn criterion_4(log: &mut String) -> Result<Verdict, String> {
    suites_verdict(vec![suites::gz_inert(SuiteConfig::INERT, &[0, 1, 2], &[0, 2, 4])], log)
}

fn criterion_5(log: &mut String) -> Result<Verdict, String> {
    let r = suites::gz_split(SuiteConfig::SPLIT, &[([8, 8], 0), ([8, 8], 1)], 2);
    let mut v = suites_verdict(vec![r.clone()], log)?;
    if let Ok(r) = r {
        let d: Vec<String> = r.lines.iter().map(|l| format!("{}: {}", l.name, l.detail.split(" [").next().unwrap_or(""))).collect();
        v.detail = d.join("; ");
    }
    Ok(v)
}

fn criterion_6(log: &mut String) -> Result<Verdict, String> {
    suites_verdict(
        vec![suites::decomposition(SuiteConfig::SPLIT, 50, 3), suites::vanishing(SuiteConfig::SPLIT, 20, 5)],
        log,
    )
}

fn criterion_7(log: &mut String) -> Result<Verdict, String> {
    suites_verdict(vec![suites::slopes(7, 12)], log)
}

/// Absolute agreement of two reported values, capped at the smaller
/// absolute precision.
fn value_agreement(a: &ValueRepr, b: &ValueRepr) -> i64 {
    let cap = a.abs_prec.min(b.abs_prec);
    if a.zero || b.zero {
        let v = if a.zero { b.valuation } else { a.valuation };
        return if a.zero && b.zero { cap } else { v.min(cap) };
    }
    if a.valuation != b.valuation {
        return a.valuation.min(b.valuation).min(cap);
    }
    let p = a.p as i128;
    let rel = (a.rel_prec.min(b.rel_prec)) as i64;
    let mut w = rel;
    for i in 0..2 {
        let mut d = a.unit[i] as i128 - b.unit[i] as i128;
        if d == 0 {
            continue;
        }
        let mut v = 0;
        while d % p == 0 {
            d /= p;
            v += 1;
        }
        w = w.min(v);
    }
    (a.valuation + w).min(cap)
}

fn evaluate(cfg: &EvalConfig) -> Result<(EvaluationReport, EvaluationReport), String> {
    let ev = Evaluation::new(cfg.clone()).map_err(|e| e.to_string())?;
    let lp = ev.lp_balanced().map_err(|e| e.to_string())?;
    let aj = ev.aj_value().map_err(|e| e.to_string())?;
    Ok((lp, aj))
}

fn criterion_8(log: &mut String) -> Result<Verdict, String> {
    let mut ok = true;
    let mut notes = Vec::new();
    for cfg in [EvalConfig::demo_inert(), EvalConfig::demo_split()] {
        let (lp, aj) = evaluate(&cfg)?;
        let (lp2, aj2) = evaluate(&cfg)?;
        let same = lp.to_json() == lp2.to_json() && aj.to_json() == aj2.to_json();
        ok &= same;
        let mut wide = cfg.clone();
        wide.prec += 2;
        let (lpw, ajw) = evaluate(&wide)?;
        let n = cfg.prec as i64;
        for (name, a, b) in [("lvalue", &lp, &lpw), ("aj", &aj, &ajw)] {
            let loss = a.budget.total_loss() as i64;
            let (va, vb) = (a.value.as_ref().ok_or("missing value")?, b.value.as_ref().ok_or("missing value")?);
            let agree = value_agreement(va, vb);
            let stable = agree >= n - loss;
            ok &= stable;
            notes.push(format!("p={} {name}: N+2 agreement {agree} (need {})", cfg.p, n - loss));
            log.push_str(&format!("p={} {name}: {} / {}\n", cfg.p, va.render(), vb.render()));
        }
        let rel = aj.checks.iter().find(|c| c.name == "main theorem relation").ok_or("no relation check")?;
        let documented = aj.notes.iter().any(|s| s.contains("by construction"));
        ok &= rel.passed && rel.exact() && documented;
        notes.push(format!("p={} bytes {}; relation exact to {}", cfg.p, if same { "identical" } else { "DIFFER" }, rel.attainable));
        log.push_str(&aj.render_text());
    }
    Ok(Verdict { passed: ok, detail: notes.join("; ") })
}

struct EulerCase {
    label: &'static str,
    p: u64,
    kind: SplittingKind,
    g_roots: Vec<(i128, i128)>,
    alpha_f: i128,
    beta_f: i128,
    t: i64,
    exceptional: &'static [&'static str],
}

fn qpow(p: i128, t: i64) -> Q {
    let m = Q::from_integer(p.pow(t.unsigned_abs() as u32));
    if t >= 0 {
        m
    } else {
        m.recip()
    }
}

/// Hand substitution: `(E(f*), E_p, E_0p)` over `Q`.
fn euler_oracle(c: &EulerCase) -> (Q, Q, Option<Q>) {
    let one = Q::from_integer(1);
    let q = |n: i128| Q::from_integer(n);
    let x = qpow(c.p as i128, c.t) / q(c.alpha_f);
    let ef = one - q(c.beta_f) / q(c.alpha_f);
    match c.kind {
        SplittingKind::Inert => {
            let (a, b) = c.g_roots[0];
            (ef, (one - x * q(a)) * (one - x * q(b)), None)
        }
        SplittingKind::Split => {
            let (a1, b1) = c.g_roots[0];
            let (a2, b2) = c.g_roots[1];
            let e = (one - x * q(a1 * a2)) * (one - x * q(a1 * b2)) * (one - x * q(b1 * a2)) * (one - x * q(b1 * b2));
            let cc = q(a1 * b1 * a2 * b2);
            (ef, e, Some(one - x * x * cc))
        }
    }
}

fn to_scalar(ring: PadicRing, v: Q) -> PadicScalar {
    let n = PadicScalar::from_int(ring, *v.numer());
    n.div(&PadicScalar::from_int(ring, *v.denom())).expect("nonzero denominator")
}

fn criterion_9(log: &mut String) -> Result<Verdict, String> {
    use SplittingKind::{Inert, Split};
    let cases = [
        EulerCase { label: "inert t=0", p: 7, kind: Inert, g_roots: vec![(2, 3)], alpha_f: 5, beta_f: 1, t: 0, exceptional: &[] },
        EulerCase { label: "inert t=-1", p: 7, kind: Inert, g_roots: vec![(3, 5)], alpha_f: 2, beta_f: 9, t: -1, exceptional: &[] },
        EulerCase { label: "inert t=-2", p: 7, kind: Inert, g_roots: vec![(1, 49)], alpha_f: 10, beta_f: -4, t: -2, exceptional: &[] },
        EulerCase { label: "inert t=1", p: 7, kind: Inert, g_roots: vec![(-2, 8)], alpha_f: 3, beta_f: 1, t: 1, exceptional: &[] },
        EulerCase { label: "split t=0", p: 11, kind: Split, g_roots: vec![(2, 3), (5, 7)], alpha_f: 13, beta_f: 1, t: 0, exceptional: &[] },
        EulerCase { label: "split t=-1", p: 11, kind: Split, g_roots: vec![(1, 11), (4, 6)], alpha_f: 3, beta_f: 5, t: -1, exceptional: &[] },
        EulerCase { label: "split t=-2", p: 11, kind: Split, g_roots: vec![(2, 121), (3, 1)], alpha_f: 7, beta_f: 2, t: -2, exceptional: &[] },
        EulerCase {
            label: "empty product",
            p: 11,
            kind: Split,
            g_roots: vec![(0, 0), (0, 0)],
            alpha_f: 3,
            beta_f: 0,
            t: 0,
            exceptional: &[],
        },
        EulerCase {
            label: "exceptional E_p",
            p: 7,
            kind: Inert,
            g_roots: vec![(2, 3)],
            alpha_f: 2,
            beta_f: 5,
            t: 0,
            exceptional: &["E_p"],
        },
        EulerCase {
            label: "exceptional E(f*)",
            p: 11,
            kind: Split,
            g_roots: vec![(2, 3), (5, 7)],
            alpha_f: 4,
            beta_f: 4,
            t: -1,
            exceptional: &["E(f*)"],
        },
    ];
    let prec = 12;
    let mut ok = true;
    let mut bad = Vec::new();
    for c in &cases {
        let ring = PadicRing::new(c.p, prec, 1).map_err(|e| e.to_string())?;
        let sc = |n: i128| PadicScalar::from_int(ring, n);
        let inp = EulerInputs {
            kind: c.kind,
            g_roots: c.g_roots.iter().map(|&(a, b)| (sc(a), sc(b))).collect(),
            alpha_f: sc(c.alpha_f),
            beta_f: sc(c.beta_f),
            t: c.t,
        };
        let got = euler_factors(&inp).map_err(|e| e.to_string())?;
        let (ef, ep, e0) = euler_oracle(c);
        let mut case_ok = got.exceptional.iter().map(String::as_str).eq(c.exceptional.iter().copied());
        let pairs = [("E(f*)", Some(got.e_fstar), Some(ef)), ("E_p", Some(got.e_p), Some(ep)), ("E_0p", got.e_0p, e0)];
        for (name, lib, want) in pairs {
            match (lib, want) {
                (Some(l), Some(w)) => {
                    let ws = to_scalar(ring, w);
                    let cap = l.abs_prec().min(ws.abs_prec());
                    // exact: equal to the full declared precision, which may
                    // only lose what the negative powers of p account for
                    let exact = l.agreement(&ws) >= cap && cap >= prec as i64 + 4 * c.t.min(0) - 1;
                    log.push_str(&format!("{} {name}: lib {} oracle {w} agreement {}\n", c.label, l, l.agreement(&ws)));
                    case_ok &= exact;
                }
                (None, None) => {}
                _ => case_ok = false,
            }
        }
        if !case_ok {
            bad.push(c.label);
        }
        ok &= case_ok;
    }
    Ok(Verdict {
        passed: ok,
        detail: if bad.is_empty() { format!("{} tuples exact", cases.len()) } else { format!("mismatch: {}", bad.join(", ")) },
    })
}

fn main() {
    let verbose = std::env::args().any(|a| a == "--verbose");
    let mut log = String::new();
    let mut all = true;
    let s = Duration::from_secs;
    all &= run("criterion 1 (operator algebra)", s(60), || criterion_1(&mut log));
    all &= run("criterion 2 (nabla iteration)", s(60), || criterion_2(&mut log));
    all &= run("criterion 3 (p-adic continuity)", s(120), || criterion_3(&mut log));
    all &= run("criterion 4 (inert Gross-Zagier)", s(120), || criterion_4(&mut log));
    all &= run("criterion 5 (split Gross-Zagier)", s(300), || criterion_5(&mut log));
    all &= run("criterion 6 (split decomposition and vanishing)", s(300), || criterion_6(&mut log));
    all &= run("criterion 7 (slope machinery)", s(60), || criterion_7(&mut log));
    all &= run("criterion 8 (determinism and main relation)", s(300), || criterion_8(&mut log));
    all &= run("criterion 9 (Euler factors)", s(5), || criterion_9(&mut log));
    if verbose {
        println!("\n{log}");
    }
    if !all {
        std::process::exit(1);
    }
}
