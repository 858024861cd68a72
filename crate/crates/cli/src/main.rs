use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use spd_core::alba::{correspond, Options, TraceItem};
use spd_core::foterm::{check_inductive, infer_roles, Fo, RawFo};
use spd_core::kracht::{inverse_fo, round_trip_check, valid_all, InversePart, KrachtError};
use spd_core::modterm::{analyze, check_term, Ineq, Term, Verdict};
use spd_core::oracle::{check_correspondence, enumerate_models, Agreement, FiniteSpdAlgebra, ModelSpec, Valuation};
use spd_core::signature::Signature;
// a closed pipe ends the program quietly instead of panicking
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write;
        if writeln!(std::io::stdout(), $($t)*).is_err() {
            std::process::exit(0);
        }
    }};
}

use spd_core::syntax::{
    parse_fo, parse_mod, parse_model, print_fo, print_kracht, print_mod, print_term, Style, SyntaxError,
};

#[derive(Parser)]
#[command(name = "spd", version, about = "Correspondence theory for spd-algebras")]
struct Cli {
    /// Built-in signature name or path to a signature TOML file.
    #[arg(long, short = 's', global = true, env = "SPD_SIGNATURE")]
    signature: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = OutStyle::Ascii)]
    style: OutStyle,
    /// `structured` prints one JSON record per line.
    #[arg(long, global = true, value_enum, default_value_t = Report::Text)]
    report: Report,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutStyle {
    Ascii,
    Unicode,
    Latex,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Report {
    Text,
    Structured,
}

#[derive(Args)]
struct Input {
    /// Formula text, or `-` for stdin.
    #[arg(conflicts_with = "file", required_unless_present = "file")]
    text: Option<String>,
    /// Read the formula from a file.
    #[arg(long, short = 'f')]
    file: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct Suite {
    /// Directory of model files; defaults to a generated suite.
    #[arg(long)]
    model_dir: Option<PathBuf>,
    /// Largest poset whose downset lattice enters the generated suite.
    #[arg(long, default_value_t = 4)]
    max_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Classify an inequality as analytic, clopen-analytic or neither.
    Check(Input),
    /// First-order correspondent of a clopen-analytic inequality.
    Correspond {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        general_path: bool,
    },
    /// Inequalities corresponding to a Kracht formula.
    Inverse {
        #[command(flatten)]
        input: Input,
        /// Emit the output of every role assignment that inverts.
        #[arg(long)]
        all_roles: bool,
        /// Drop conjuncts valid on every model of the suite (heuristic).
        #[arg(long)]
        simplify: bool,
        #[arg(long, default_value_t = spd_core::foterm::DEFAULT_ROLE_CAP)]
        role_cap: usize,
        #[command(flatten)]
        suite: Suite,
    },
    /// Role assignments making a first-order formula Kracht.
    Roles {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = spd_core::foterm::DEFAULT_ROLE_CAP)]
        role_cap: usize,
    },
    /// Dual spd-space of a finite distributive model file.
    Dual { model: PathBuf },
    /// Check a correspondence on every model of a suite.
    Verify {
        #[command(flatten)]
        input: Input,
        /// First-order formula to pair with the inequality instead of its computed correspondent.
        #[arg(long)]
        fo: Option<String>,
        #[arg(long)]
        general_path: bool,
        #[command(flatten)]
        suite: Suite,
    },
    /// Time the forward and round-trip pipelines.
    Bench {
        /// Inequalities to time; defaults to a small built-in list.
        inputs: Vec<String>,
        #[command(flatten)]
        suite: Suite,
    },
}

const BENCH_DEFAULT: [&str; 5] = [
    "box box v <= box v",
    "box v <= brhd v",
    "dia v <= v",
    "dia (dia v1 /\\ dia v2) <= dia (v1 /\\ v2)",
    "lhd box rhd lhd lhd rhd v1 <= box rhd (box brhd blhd rhd v2 /\\ box brhd dia v2)",
];

enum Failure {
    /// Exit 1: the input is well-formed but fails the command's test.
    Negative(String),
    /// Exit 2: unreadable or malformed input.
    Usage(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

struct Ctx {
    sig_arg: Option<String>,
    style: Style,
    report: Report,
}

impl Ctx {
    fn mod_text(&self, i: &Ineq) -> String {
        print_mod(i, self.style)
    }

    fn record<T: Serialize>(&self, rec: &T) {
        outln!("{}", serde_json::to_string(rec).expect("records serialize"));
    }
}

fn read_input(input: &Input) -> Result<String, Failure> {
    match (&input.text, &input.file) {
        (_, Some(path)) => std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display()))),
        (Some(t), None) if t == "-" => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(usage)?;
            Ok(s)
        }
        (Some(t), None) => Ok(t.clone()),
        (None, None) => Err(usage("no input")),
    }
}

/// Signature named by `# signature: NAME` in the input, if any.
fn header_signature(text: &str) -> Option<&str> {
    text.lines().find_map(|l| l.trim().strip_prefix('#')?.trim().strip_prefix("signature:").map(str::trim))
}

fn load_signature(ctx: &Ctx, text: &str) -> Result<Signature, Failure> {
    let name = ctx.sig_arg.as_deref().or_else(|| header_signature(text)).unwrap_or("distributive");
    if Path::new(name).is_file() {
        let src = std::fs::read_to_string(name).map_err(|e| usage(format!("{name}: {e}")))?;
        return Signature::from_toml(&src).map_err(usage);
    }
    Signature::builtin(name).ok_or_else(|| usage(format!("unknown signature {name}")))
}

fn syntax(text: &str, e: SyntaxError) -> Failure {
    let line = text.lines().nth(e.span.line.saturating_sub(1)).unwrap_or("");
    let pad = " ".repeat(e.span.column.saturating_sub(1));
    let width = (e.span.end.saturating_sub(e.span.start)).max(1);
    Failure::Usage(format!("parse error at {e}\n  {line}\n  {pad}{}", "^".repeat(width)))
}

fn check_ineq(i: &Ineq, sig: &Signature) -> Result<(), Failure> {
    check_term(&i.lhs, sig).and_then(|_| check_term(&i.rhs, sig)).map_err(usage)
}

fn check_fo(f: &Fo, sig: &Signature) -> Result<(), Failure> {
    match f {
        Fo::Atom(a) => check_term(&a.lhs, sig).and_then(|_| check_term(&a.rhs, sig)).map_err(usage),
        Fo::And(parts) => parts.iter().try_for_each(|p| check_fo(p, sig)),
        Fo::Implies(a, b) => check_fo(a, sig).and_then(|_| check_fo(b, sig)),
        Fo::Forall(_, b) | Fo::Exists(_, b) => check_fo(b, sig),
    }
}

fn load_models(suite: &Suite, sig: &Signature) -> Result<Vec<(String, FiniteSpdAlgebra)>, Failure> {
    let Some(dir) = &suite.model_dir else {
        let spec = ModelSpec { max_poset_size: suite.max_size, seed: suite.seed, ..ModelSpec::for_signature(sig) };
        return Ok(enumerate_models(&spec).into_iter().enumerate().map(|(i, h)| (format!("gen{i:03}"), h)).collect());
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| usage(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(usage(format!("no models in {}", dir.display())));
    }
    let mut out = Vec::new();
    for p in paths {
        let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let text = std::fs::read_to_string(&p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        let h = parse_model(&text, sig).map_err(|e| usage(format!("invalid model {id}: {e}")))?;
        h.validate_axioms().map_err(|e| usage(format!("invalid model {id}: {e}")))?;
        out.push((id, h));
    }
    Ok(out)
}

#[derive(Serialize)]
struct CheckRecord<'a> {
    verdict: &'a str,
    skeleton: Option<String>,
    parts: Vec<(String, String)>,
    failure: Option<String>,
}

fn cmd_check(ctx: &Ctx, input: &Input) -> Outcome {
    let text = read_input(input)?;
    let sig = load_signature(ctx, &text)?;
    let ineq = parse_mod(&text).map_err(|e| syntax(&text, e))?;
    check_ineq(&ineq, &sig)?;
    match analyze(&ineq, &sig) {
        Ok(d) => {
            let verdict = match d.verdict() {
                Verdict::Analytic => "analytic",
                Verdict::ClopenAnalytic => "clopen-analytic",
            };
            let term = |t| print_term(t, ctx.style);
            let mut parts: Vec<(String, String)> = Vec::new();
            parts.extend(d.gamma.iter().map(|(i, t)| (format!("x{i}"), term(t))));
            parts.extend(d.delta.iter().map(|(i, t)| (format!("y{i}"), term(t))));
            parts.extend(d.clopen_subst.iter().map(|(i, t)| (format!("t{i}"), term(t))));
            if ctx.report == Report::Structured {
                ctx.record(&CheckRecord { verdict, skeleton: Some(ctx.mod_text(&d.skeleton)), parts, failure: None });
            } else {
                outln!("{verdict}");
                outln!("skeleton: {}", ctx.mod_text(&d.skeleton));
                for (k, v) in parts {
                    outln!("{k} := {v}");
                }
            }
            Ok(())
        }
        Err(f) => {
            if ctx.report == Report::Structured {
                ctx.record(&CheckRecord {
                    verdict: "neither",
                    skeleton: None,
                    parts: vec![],
                    failure: Some(f.to_string()),
                });
            } else {
                outln!("neither");
                outln!("{f}");
            }
            Err(Failure::Negative(String::new()))
        }
    }
}

fn cmd_correspond(ctx: &Ctx, input: &Input, trace: bool, general_path: bool) -> Outcome {
    let text = read_input(input)?;
    let sig = load_signature(ctx, &text)?;
    let ineq = parse_mod(&text).map_err(|e| syntax(&text, e))?;
    check_ineq(&ineq, &sig)?;
    let c = correspond(&ineq, &sig, Options { general_path }).map_err(|e| Failure::Negative(e.to_string()))?;
    if trace {
        for st in &c.trace {
            match st.part {
                Some(p) => outln!("Step {} (part {}):", st.step, p + 1),
                None => outln!("Step {}:", st.step),
            }
            for it in &st.items {
                match it {
                    TraceItem::Ineq(i) => outln!("  {}", ctx.mod_text(i)),
                    TraceItem::Fo(f) => outln!("  {}", print_fo(f, ctx.style)),
                }
            }
        }
        outln!("Result:");
    }
    if ctx.report == Report::Structured {
        for p in &c.parts {
            ctx.record(&serde_json::json!({
                "definite": ctx.mod_text(&p.definite),
                "fo": print_fo(&p.to_fo(), ctx.style),
            }));
        }
    } else {
        outln!("{}", print_fo(&c.to_fo(), ctx.style));
    }
    Ok(())
}

fn kracht_failure(e: KrachtError) -> Failure {
    Failure::Negative(format!("not invertible: {e}"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_inverse(ctx: &Ctx, input: &Input, all_roles: bool, simplify: bool, cap: usize, suite: &Suite) -> Outcome {
    let text = read_input(input)?;
    let sig = load_signature(ctx, &text)?;
    let fo = parse_fo(&text).map_err(|e| syntax(&text, e))?;
    check_fo(&fo, &sig)?;
    let mut parts: Vec<InversePart> = inverse_fo(&fo, &sig, cap, all_roles).map_err(kracht_failure)?;
    if simplify {
        let models: Vec<FiniteSpdAlgebra> = load_models(suite, &sig)?.into_iter().map(|(_, h)| h).collect();
        let mut dropped = 0;
        for p in &mut parts {
            let before = p.output.len();
            p.output.retain(|i| !models.iter().all(|h| valid_all(std::slice::from_ref(i), h).unwrap_or(false)));
            dropped += before - p.output.len();
        }
        eprintln!("simplify (heuristic): dropped {dropped} conjunct(s) valid on all {} models", models.len());
    }
    for p in &parts {
        if ctx.report == Report::Structured {
            ctx.record(&serde_json::json!({
                "kracht": print_kracht(&p.kracht, ctx.style),
                "output": p.output.iter().map(|i| ctx.mod_text(i)).collect::<Vec<_>>(),
            }));
            continue;
        }
        if all_roles {
            outln!("# {}", print_kracht(&p.kracht, ctx.style));
        }
        if p.output.is_empty() {
            outln!("{}", ctx.mod_text(&Ineq::new(Term::Top, Term::Top)));
        }
        for i in &p.output {
            outln!("{}", ctx.mod_text(i));
        }
    }
    Ok(())
}

fn cmd_roles(ctx: &Ctx, input: &Input, cap: usize) -> Outcome {
    let text = read_input(input)?;
    let sig = load_signature(ctx, &text)?;
    let fo = parse_fo(&text).map_err(|e| syntax(&text, e))?;
    check_fo(&fo, &sig)?;
    let raw = RawFo::from_fo(&fo).map_err(usage)?;
    let ks = infer_roles(&raw, &sig, cap).map_err(usage)?;
    if ks.is_empty() {
        return Err(kracht_failure(inverse_fo(&fo, &sig, cap, false).err().unwrap_or(KrachtError::NoRoles)));
    }
    for k in &ks {
        let inductive = check_inductive(k, &sig).is_some();
        if ctx.report == Report::Structured {
            ctx.record(&serde_json::json!({ "kracht": print_kracht(k, ctx.style), "inductive": inductive }));
        } else {
            outln!("{}{}", print_kracht(k, ctx.style), if inductive { "  [inductive]" } else { "" });
        }
    }
    Ok(())
}

fn cmd_dual(ctx: &Ctx, model: &Path) -> Outcome {
    let text = std::fs::read_to_string(model).map_err(|e| usage(format!("{}: {e}", model.display())))?;
    let sig = load_signature(ctx, "")?;
    let h = parse_model(&text, &sig).map_err(usage)?;
    h.validate_axioms().map_err(usage)?;
    let space = h.dual_space().ok_or_else(|| Failure::Negative("model is not distributive".into()))?;
    let name = |x: usize| h.names[space.points[x]].clone();
    let pairs = |m: &Vec<Vec<bool>>| -> Vec<(String, String)> {
        let k = space.points.len();
        (0..k)
            .flat_map(|x| (0..k).map(move |y| (x, y)))
            .filter(|&(x, y)| m[x][y])
            .map(|(x, y)| (name(x), name(y)))
            .collect()
    };
    let show = |ps: Vec<(String, String)>| ps.iter().map(|(a, b)| format!("({a},{b})")).collect::<Vec<_>>().join(" ");
    let points: Vec<String> = (0..space.points.len()).map(name).collect();
    let kappa: Vec<(String, String)> =
        (0..space.points.len()).map(|x| (name(x), h.names[space.kappa[x]].clone())).collect();
    if ctx.report == Report::Structured {
        ctx.record(&serde_json::json!({
            "points": points,
            "kappa": kappa,
            "sqsubseteq": pairs(&space.sqsubseteq),
            "R_prec": space.r_prec.iter().map(pairs).collect::<Vec<_>>(),
            "R_nC": space.r_nc.iter().map(pairs).collect::<Vec<_>>(),
            "R_nD": space.r_nd.iter().map(pairs).collect::<Vec<_>>(),
        }));
    } else {
        outln!("points: {}", points.join(" "));
        outln!("kappa: {}", kappa.iter().map(|(j, k)| format!("{j}->{k}")).collect::<Vec<_>>().join(" "));
        outln!("sqsubseteq: {}", show(pairs(&space.sqsubseteq)));
        for (i, m) in space.r_prec.iter().enumerate() {
            outln!("R_prec{i}: {}", show(pairs(m)));
        }
        for (i, m) in space.r_nc.iter().enumerate() {
            outln!("R_nC{i}: {}", show(pairs(m)));
        }
        for (i, m) in space.r_nd.iter().enumerate() {
            outln!("R_nD{i}: {}", show(pairs(m)));
        }
    }
    space.check_laws(&h).map_err(Failure::Negative)
}

fn witness_text(h: &FiniteSpdAlgebra, v: &Valuation) -> String {
    v.iter().map(|(k, &x)| format!("{k}={}", h.names[x])).collect::<Vec<_>>().join(",")
}

#[derive(Serialize)]
struct VerifyRecord {
    model: String,
    verdict: String,
    witness: Option<String>,
}

fn cmd_verify(ctx: &Ctx, input: &Input, fo: Option<&str>, general_path: bool, suite: &Suite) -> Outcome {
    let text = read_input(input)?;
    let sig = load_signature(ctx, &text)?;
    let ineq = parse_mod(&text).map_err(|e| syntax(&text, e))?;
    check_ineq(&ineq, &sig)?;
    let phi = match fo {
        Some(f) => parse_fo(f).map_err(|e| syntax(f, e))?,
        None => {
            correspond(&ineq, &sig, Options { general_path }).map_err(|e| Failure::Negative(e.to_string()))?.to_fo()
        }
    };
    let models = load_models(suite, &sig)?;
    let records: Vec<Result<VerifyRecord, String>> = models
        .par_iter()
        .map(|(id, h)| {
            let verdict = check_correspondence(&ineq, &phi, h).map_err(|e| format!("{id}: {e}"))?;
            let rec = match verdict {
                Agreement::Agree if h.valid_mod(&ineq).map_err(|e| e.to_string())? => {
                    VerifyRecord { model: id.clone(), verdict: "agree-valid".into(), witness: None }
                }
                Agreement::Agree => VerifyRecord { model: id.clone(), verdict: "agree-invalid".into(), witness: None },
                Agreement::Disagree { modal, .. } => {
                    let w = if modal { h.counter_fo(&phi) } else { h.counter_mod(&ineq) };
                    let witness = w.map_err(|e| e.to_string())?.map(|v| witness_text(h, &v));
                    VerifyRecord { model: id.clone(), verdict: "disagree".into(), witness }
                }
            };
            Ok(rec)
        })
        .collect();
    let mut disagreements = 0;
    for r in records {
        let r = r.map_err(usage)?;
        if r.verdict == "disagree" {
            disagreements += 1;
        }
        if ctx.report == Report::Structured {
            ctx.record(&r);
        } else {
            match &r.witness {
                Some(w) => outln!("{} {} {w}", r.model, r.verdict),
                None => outln!("{} {}", r.model, r.verdict),
            }
        }
    }
    if ctx.report == Report::Text {
        outln!("{} models, {disagreements} disagreement(s)", models.len());
    }
    if disagreements > 0 {
        return Err(Failure::Negative(String::new()));
    }
    Ok(())
}

fn cmd_bench(ctx: &Ctx, inputs: &[String], suite: &Suite) -> Outcome {
    let list: Vec<String> =
        if inputs.is_empty() { BENCH_DEFAULT.iter().map(|s| s.to_string()).collect() } else { inputs.to_vec() };
    let sig = load_signature(ctx, "")?;
    let start = Instant::now();
    let models: Vec<FiniteSpdAlgebra> = load_models(suite, &sig)?.into_iter().map(|(_, h)| h).collect();
    outln!("suite: {} models in {:.1} ms", models.len(), start.elapsed().as_secs_f64() * 1e3);
    for text in &list {
        let ineq = parse_mod(text).map_err(|e| syntax(text, e))?;
        check_ineq(&ineq, &sig)?;
        let t = Instant::now();
        correspond(&ineq, &sig, Options::default()).map_err(|e| Failure::Negative(e.to_string()))?;
        let forward = t.elapsed();
        let t = Instant::now();
        let rt = round_trip_check(&ineq, &sig, &models);
        let round = t.elapsed();
        let status = if rt.equivalent() { "equivalent" } else { "NOT equivalent" };
        outln!(
            "{text}: correspond {:.2} ms, round trip {:.1} ms ({status})",
            forward.as_secs_f64() * 1e3,
            round.as_secs_f64() * 1e3
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = match cli.style {
        OutStyle::Ascii => Style::Ascii,
        OutStyle::Unicode => Style::Unicode,
        OutStyle::Latex => Style::Latex,
    };
    let ctx = Ctx { sig_arg: cli.signature.clone(), style, report: cli.report };
    let out = match &cli.command {
        Command::Check(input) => cmd_check(&ctx, input),
        Command::Correspond { input, trace, general_path } => cmd_correspond(&ctx, input, *trace, *general_path),
        Command::Inverse { input, all_roles, simplify, role_cap, suite } => {
            cmd_inverse(&ctx, input, *all_roles, *simplify, *role_cap, suite)
        }
        Command::Roles { input, role_cap } => cmd_roles(&ctx, input, *role_cap),
        Command::Dual { model } => cmd_dual(&ctx, model),
        Command::Verify { input, fo, general_path, suite } => {
            cmd_verify(&ctx, input, fo.as_deref(), *general_path, suite)
        }
        Command::Bench { inputs, suite } => cmd_bench(&ctx, inputs, suite),
    };
    match out {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative(msg)) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
