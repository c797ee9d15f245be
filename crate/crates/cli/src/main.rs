//! `hpl`: form generation, operators, L-value evaluation and identity suites.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hpl_core::field::{make_field, splitting_type, IdealTag, PrimeSel};
use hpl_core::forms::{
    delta_form, elliptic_eisenstein, hilbert_divisor_series, hilbert_eisenstein, pointcount_newform, random_depleted,
    random_hilbert,
};
use hpl_core::hecke::demo_basis;
use hpl_core::io::{self, FormData, NocData};
use hpl_core::lvalue::{EvalConfig, Evaluation};
use hpl_core::nearly_oc::nabla_pow;
use hpl_core::padic::PadicRing;
use hpl_core::qexp::HilbertSpace;
use hpl_core::report::EvaluationReport;
use hpl_core::suites::{self, SuiteConfig, SuiteResult};
use hpl_core::weights::{WeightCharacter, WeightPair};
use hpl_core::{Error, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "hpl", version, about = "Exact p-adic q-expansions for twisted triple product L-values")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug, Serialize)]
struct Setup {
    /// Real quadratic field Q(sqrt D)
    #[arg(long = "D", default_value_t = 5)]
    d: i64,
    /// Prime; the default depends on the command
    #[arg(long)]
    p: Option<u64>,
    /// p-adic precision
    #[arg(long = "N", default_value_t = 12)]
    prec: u32,
    /// Trace bound
    #[arg(long = "B", default_value_t = 40)]
    bound: u32,
}

impl Setup {
    fn suite(&self, default_p: u64) -> SuiteConfig {
        SuiteConfig { d: self.d, p: self.p.unwrap_or(default_p), prec: self.prec, bound: self.bound }
    }
}

#[derive(Args, Clone, Debug, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    setup: Setup,
    /// Hilbert weight l = (l1, l2)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [8, 8])]
    l: Vec<i64>,
    #[arg(long, default_value_t = 1)]
    s: i64,
    /// Slope bound a of the ordinary-type projector
    #[arg(long)]
    slope_bound: Option<f64>,
    /// Eigenvector paired against
    #[arg(long, default_value = "Delta_alpha")]
    target: String,
}

#[derive(Args, Clone, Debug)]
struct Output {
    /// Write the JSON report here
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print JSON instead of text
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Recipe {
    Eisenstein,
    Delta,
    Pointcount,
    HilbertEisenstein,
    RandomDepleted,
    Random,
    Basis,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Support {
    #[value(name = "OL", alias = "ol")]
    Ol,
    Dinv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ApplyOp {
    Deplete,
    Dpow,
    Nabla,
    Diag,
    Ocproj,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    GzSplit,
    GzInert,
    Operators,
    Decomposition,
    Vanishing,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a test form (or a classical basis file)
    Gen {
        recipe: Recipe,
        #[command(flatten)]
        setup: Setup,
        /// Weight
        #[arg(long, default_value_t = 12)]
        k: u32,
        /// Weierstrass coefficients a1,a2,a3,a4,a6
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        curve: Option<Vec<i64>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Prime to deplete at (p, p1, p2)
        #[arg(long, default_value = "p")]
        primes: String,
        #[arg(long, value_enum, default_value_t = Support::Dinv)]
        support: Support,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply an operator to a form file
    Apply {
        op: ApplyOp,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Primes for `deplete`, applied in order (p, p1, p2)
        #[arg(long, value_delimiter = ',', default_value = "p")]
        primes: Vec<String>,
        /// Embedding for `dpow`
        #[arg(long, default_value_t = 1)]
        i: usize,
        /// Exponent for `dpow`
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        n: i64,
        /// Shift r for `nabla`, on the first embedding
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        r: i64,
        /// Weight for `nabla` when the file carries none
        #[arg(long, value_delimiter = ',')]
        weight: Option<Vec<i64>>,
        /// For `ocproj`, write p^shift times the projection
        #[arg(long)]
        scaled: bool,
    },
    /// Euler factors of an evaluation
    Euler {
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Classify a weight pair (l, k)
    Classify {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        l: Vec<i64>,
        #[arg(long)]
        k: i64,
    },
    /// p-adic L-value in the balanced region
    Lvalue {
        #[arg(long, required = true)]
        balanced: bool,
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Abel-Jacobi value
    Aj {
        #[arg(long, conflicts_with = "inert", required_unless_present = "inert")]
        split: bool,
        #[arg(long)]
        inert: bool,
        #[command(flatten)]
        eval: EvalArgs,
        #[command(flatten)]
        out: Output,
    },
    /// Run a verification suite
    Verify {
        suite: Suite,
        #[command(flatten)]
        setup: Setup,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        l: Option<Vec<i64>>,
        #[arg(long)]
        s: Option<i64>,
        /// Number of random samples
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Render a stored evaluation report
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Command outcome: text for stdout and whether every check passed.
struct Outcome {
    text: String,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    if let Err(e) = init_threads().map_err(|e| e.at("startup")) {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    match run(cli.cmd) {
        Ok(o) => {
            print!("{}", o.text);
            ExitCode::from(if o.passed { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("HPL_THREADS") else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("HPL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run(cmd: Cmd) -> Result<Outcome> {
    match cmd {
        Cmd::Gen { recipe, setup, k, curve, seed, primes, support, out } => {
            gen(recipe, &setup, k, curve, seed, &primes, support, out.as_deref()).map_err(|e| e.at("gen"))
        }
        Cmd::Apply { op, input, out, primes, i, n, r, weight, scaled } => {
            apply(op, &input, out.as_deref(), &primes, i, n, r, weight, scaled).map_err(|e| e.at("apply"))
        }
        Cmd::Euler { eval, out } => {
            let ev = evaluation(&eval, None)?;
            emit(ev.euler_report()?, &out)
        }
        Cmd::Classify { l, k } => {
            let c = pair("l", &l).and_then(|l| WeightPair::from_lk(l, k)).and_then(|w| w.classify()).map_err(|e| e.at("classify"))?;
            Ok(Outcome { text: format!("{c}\n"), passed: true })
        }
        Cmd::Lvalue { eval, out, .. } => {
            let ev = evaluation(&eval, None)?;
            emit(ev.lp_balanced().map_err(|e| e.at("lvalue"))?, &out)
        }
        Cmd::Aj { split, eval, out, .. } => {
            let ev = evaluation(&eval, Some(split))?;
            emit(ev.aj_value().map_err(|e| e.at("aj"))?, &out)
        }
        Cmd::Verify { suite, setup, l, s, count, seed, out } => verify(suite, &setup, l, s, count, seed, &out),
        Cmd::Report { input, json } => {
            let text = read(&input)?;
            let rep: EvaluationReport = io::parse_json(&text).map_err(|e| e.at("report"))?;
            Ok(Outcome { text: if json { rep.to_json() + "\n" } else { rep.render_text() }, passed: true })
        }
    }
}

fn pair(name: &str, v: &[i64]) -> Result<[i64; 2]> {
    match v {
        &[a, b] => Ok([a, b]),
        _ => Err(Error::Config(format!("--{name} takes two comma-separated integers"))),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<Outcome> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            Ok(Outcome { text: String::new(), passed: true })
        }
        None => Ok(Outcome { text: format!("{text}\n"), passed: true }),
    }
}

fn prime_sel(s: &str, split: bool) -> Result<PrimeSel> {
    match (s, split) {
        ("p" | "P", _) => Ok(PrimeSel::P),
        ("p1", true) => Ok(PrimeSel::P1),
        ("p2", true) => Ok(PrimeSel::P2),
        ("p1" | "p2", false) => Err(Error::Config(format!("{s} needs a split prime"))),
        _ => Err(Error::Config(format!("unknown prime {s:?}; expected p, p1 or p2"))),
    }
}

fn hilbert_space(setup: &Setup, tag: IdealTag) -> Result<Arc<HilbertSpace>> {
    let field = make_field(setup.d)?;
    let sp = splitting_type(&field, setup.p.unwrap_or(7), setup.prec)?;
    HilbertSpace::new(field, sp, tag, setup.bound)
}

#[allow(clippy::too_many_arguments)]
fn gen(
    recipe: Recipe,
    setup: &Setup,
    k: u32,
    curve: Option<Vec<i64>>,
    seed: u64,
    primes: &str,
    support: Support,
    out: Option<&Path>,
) -> Result<Outcome> {
    let p = setup.p.unwrap_or(7);
    let ring = || PadicRing::new(p, setup.prec, 1).map_err(Error::from);
    let tag = match support {
        Support::Ol => IdealTag::Ring,
        Support::Dinv => IdealTag::InverseDifferent,
    };
    let form = match recipe {
        Recipe::Eisenstein => FormData::Elliptic(elliptic_eisenstein(k, setup.bound, ring()?)?),
        Recipe::Delta => FormData::Elliptic(delta_form(setup.bound, ring()?)?),
        Recipe::Pointcount => {
            let c = curve
                .filter(|c| c.len() == 5)
                .ok_or_else(|| Error::Config("pointcount needs --curve a1,a2,a3,a4,a6".into()))?;
            FormData::Elliptic(pointcount_newform([c[0], c[1], c[2], c[3], c[4]], setup.bound, ring()?)?)
        }
        Recipe::HilbertEisenstein => {
            let space = hilbert_space(setup, tag)?;
            let g = if k.is_multiple_of(2) { hilbert_eisenstein(&space, k)? } else { hilbert_divisor_series(&space, k)? };
            FormData::Hilbert(g)
        }
        Recipe::RandomDepleted => {
            let space = hilbert_space(setup, tag)?;
            let which = prime_sel(primes, space.splitting.is_split())?;
            FormData::Hilbert(random_depleted(seed, &space, which))
        }
        Recipe::Random => FormData::Hilbert(random_hilbert(seed, &hilbert_space(setup, tag)?)),
        Recipe::Basis => {
            let space = hilbert_space(setup, tag)?;
            let basis = demo_basis(space.ring(), k)?;
            let text = serde_json::to_string_pretty(&io::basis_to_file(&basis)).expect("basis serializes");
            return write_out(out, &text);
        }
    };
    write_out(out, &io::write_form(&form))
}

#[allow(clippy::too_many_arguments)]
fn apply(
    op: ApplyOp,
    input: &Path,
    out: Option<&Path>,
    primes: &[String],
    i: usize,
    n: i64,
    r: i64,
    weight: Option<Vec<i64>>,
    scaled: bool,
) -> Result<Outcome> {
    let text = read(input)?;
    if io::is_noc(&text) {
        let x = io::read_noc(&text, None)?;
        let res = match (op, x) {
            (ApplyOp::Diag, NocData::Hilbert(h)) => NocData::Elliptic(h.zeta_star()),
            (ApplyOp::Ocproj, x) => {
                let e = match x {
                    NocData::Hilbert(h) => h.zeta_star(),
                    NocData::Elliptic(e) => e,
                };
                let proj = e.oc_project().map_err(|e| e.at("overconvergent projection"))?;
                eprintln!("projection shift {}, precision lost {}", proj.shift, proj.budget.total_loss());
                let h = if scaled {
                    proj.scaled
                } else {
                    proj.value().inspect_err(|_e| {
                        eprintln!("the projection is not integral; --scaled writes p^{} times it", proj.shift);
                    })?
                };
                return write_out(out, &io::write_form(&FormData::Elliptic(h)));
            }
            (op, _) => return Err(Error::Config(format!("{op:?} does not apply to this nearly overconvergent file"))),
        };
        return write_out(out, &io::write_noc(&res));
    }
    let form = io::read_form(&text, None)?;
    let res = match (op, form) {
        (ApplyOp::Deplete, FormData::Hilbert(h)) => {
            let split = h.space().splitting.is_split();
            let mut g = h;
            for w in primes {
                g = g.deplete(prime_sel(w, split)?);
            }
            FormData::Hilbert(g)
        }
        (ApplyOp::Deplete, FormData::Elliptic(e)) => FormData::Elliptic(e.deplete()),
        (ApplyOp::Dpow, FormData::Hilbert(h)) => {
            if !(1..=2).contains(&i) {
                return Err(Error::Config(format!("embedding index {i} is not 1 or 2")));
            }
            FormData::Hilbert(h.d_pow_int(i, n)?)
        }
        (ApplyOp::Dpow, FormData::Elliptic(e)) => FormData::Elliptic(e.d_pow_int(n)?),
        (ApplyOp::Nabla, FormData::Hilbert(h)) => {
            let base = h.ring().base();
            let k = match (weight, &h.weight) {
                (Some(w), _) => WeightCharacter::classical(base, &w),
                (None, Some(w)) => w.clone(),
                (None, None) => return Err(Error::Config("nabla needs a weight (--weight l1,l2)".into())),
            };
            let rr = WeightCharacter::classical(base, &[r, 0]);
            return write_out(out, &io::write_noc(&NocData::Hilbert(nabla_pow(&h, &k, &rr)?)));
        }
        (ApplyOp::Diag, FormData::Hilbert(h)) => FormData::Elliptic(h.zeta_star()),
        (op, _) => return Err(Error::Config(format!("{op:?} does not apply to this form"))),
    };
    write_out(out, &io::write_form(&res))
}

fn evaluation(a: &EvalArgs, split: Option<bool>) -> Result<Evaluation> {
    let default_p = if split == Some(true) { 11 } else { 7 };
    let cfg = EvalConfig {
        d: a.setup.d,
        p: a.setup.p.unwrap_or(default_p),
        prec: a.setup.prec,
        bound: a.setup.bound,
        l: pair("l", &a.l)?,
        s: a.s,
        slope_bound: a.slope_bound,
        target: a.target.clone(),
    };
    let ev = Evaluation::new(cfg).map_err(|e| e.at("configuration"))?;
    if let Some(want) = split {
        if want != ev.is_split() {
            let (asked, is) = if want { ("--split", "inert") } else { ("--inert", "split") };
            return Err(Error::Config(format!("{asked} given but p = {} is {is}", ev.config.p)).at("configuration"));
        }
    }
    Ok(ev)
}

fn emit(rep: EvaluationReport, out: &Output) -> Result<Outcome> {
    if let Some(path) = &out.report {
        std::fs::write(path, rep.to_json() + "\n").map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    let text = if out.json { rep.to_json() + "\n" } else { rep.render_text() };
    Ok(Outcome { text, passed: rep.passed() })
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    software: String,
    command: &'a str,
    config: serde_json::Value,
    passed: bool,
    result: &'a SuiteResult,
}

fn verify(
    suite: Suite,
    setup: &Setup,
    l: Option<Vec<i64>>,
    s: Option<i64>,
    count: Option<usize>,
    seed: u64,
    out: &Output,
) -> Result<Outcome> {
    let case = match (l, s) {
        (Some(l), Some(s)) => Some((pair("l", &l)?, s)),
        (None, None) => None,
        _ => return Err(Error::Config("--l and --s go together".into()).at("verify")),
    };
    let stage = format!("verify {}", suite.to_possible_value().expect("named").get_name());
    let res = match suite {
        Suite::GzInert => {
            let cfg = setup.suite(7);
            match case {
                Some(c) => suites::gz_inert_cases(cfg, &[c]),
                None => suites::gz_inert(cfg, &[0, 1, 2], &[0, 2, 4]),
            }
        }
        Suite::GzSplit => {
            let cases = case.map(|c| vec![c]).unwrap_or_else(|| vec![([8, 8], 0), ([8, 8], 1)]);
            suites::gz_split(setup.suite(11), &cases, 2)
        }
        Suite::Operators => suites::operators(setup.suite(7), count.unwrap_or(100), seed),
        Suite::Decomposition => suites::decomposition(setup.suite(11), count.unwrap_or(50), seed),
        Suite::Vanishing => suites::vanishing(setup.suite(11), count.unwrap_or(20), seed),
    }
    .map_err(|e| e.at(&stage))?;
    let rep = SuiteReport {
        software: format!("hpl {}", env!("CARGO_PKG_VERSION")),
        command: &stage,
        config: serde_json::json!({ "setup": setup, "case": case, "count": count, "seed": seed }),
        passed: res.passed(),
        result: &res,
    };
    let json = serde_json::to_string_pretty(&rep).expect("report serializes") + "\n";
    if let Some(path) = &out.report {
        std::fs::write(path, &json).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(Outcome { text: if out.json { json } else { res.render() }, passed: res.passed() })
}
