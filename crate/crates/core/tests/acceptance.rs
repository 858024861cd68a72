//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use spd_core::alba::{correspond, Options, TraceItem};
use spd_core::foterm::{check_inductive, FoAtom, RawFo, Rel, DEFAULT_ROLE_CAP};
use spd_core::kracht::{inverse_fo, round_trip_check};
use spd_core::modterm::{alpha_ac_eq, is_analytic_inductive, Ineq, Term};
use spd_core::oracle::{
    chain, check_correspondence, enumerate_models, powerset, Agreement, Axiom, FiniteSpdAlgebra, Lattice, ModelSpec,
    Rels,
};
use spd_core::signature::{Signature, Variety};
use spd_core::syntax::{parse_fo, parse_mod, parse_model, print_atom, print_fo, print_mod, Style};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn dist() -> Signature {
    Signature::builtin("distributive").unwrap()
}

fn suite() -> Vec<FiniteSpdAlgebra> {
    enumerate_models(&ModelSpec::default())
}

fn corpus(sig: &Signature) -> Vec<Ineq> {
    let mut out = common::inequality_list("inequalities.txt");
    out.extend(common::random_analytic(2024, 12, 3, sig));
    out
}

/// Runs `f` on every model across worker threads; returns the first error.
fn par_models<F>(models: &[FiniteSpdAlgebra], f: F) -> Result<(), String>
where
    F: Fn(usize, &FiniteSpdAlgebra) -> Result<(), String> + Sync,
{
    let workers = thread::available_parallelism().map_or(4, |n| n.get()).min(16);
    let chunk = models.len().div_ceil(workers).max(1);
    thread::scope(|s| {
        let handles: Vec<_> = models
            .chunks(chunk)
            .enumerate()
            .map(|(k, part)| {
                let f = &f;
                s.spawn(move || part.iter().enumerate().try_for_each(|(j, h)| f(k * chunk + j, h)))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect::<Result<Vec<()>, String>>().map(|_| ())
    })
}

fn golden_inverse() -> Outcome {
    let cases = common::inverse_cases();
    for case in &cases {
        let start = Instant::now();
        let f = parse_fo(&case.input).map_err(|e| format!("{}: {e}", case.name))?;
        let got: Vec<Ineq> = inverse_fo(&f, &case.sig, DEFAULT_ROLE_CAP, false)
            .map_err(|e| format!("{}: {e}", case.name))?
            .into_iter()
            .flat_map(|p| p.output)
            .collect();
        if !alpha_ac_eq(&got, &case.expected) {
            let shown: Vec<String> = got.iter().map(|i| print_mod(i, Style::Ascii)).collect();
            return Err(format!("{}: got {shown:?}", case.name));
        }
        if start.elapsed() >= Duration::from_secs(1) {
            return Err(format!("{}: {:?}", case.name, start.elapsed()));
        }
    }
    Ok(format!("{} examples", cases.len()))
}

fn atom_set(item: &TraceItem) -> BTreeSet<String> {
    match item {
        TraceItem::Ineq(i) => BTreeSet::from([print_mod(i, Style::Ascii)]),
        TraceItem::Fo(f) => f.all_atoms().into_iter().map(|a| print_atom(a, Style::Ascii)).collect(),
    }
}

fn expected_set(text: &str) -> BTreeSet<String> {
    match parse_mod(text) {
        Ok(i) => atom_set(&TraceItem::Ineq(i)),
        Err(_) => atom_set(&TraceItem::Fo(parse_fo(text).unwrap_or_else(|e| panic!("{text}: {e}")))),
    }
}

const LOWER_LEFT: &str = "lhd box rhd lhd lhd rhd v1 <= box rhd (box brhd blhd rhd v2 /\\ box brhd dia v2)";

/// The six stage displays of the worked lower-left example.
const STAGES: [&[&str]; 6] = [
    &[LOWER_LEFT],
    &["A k o. (lhd rhd v1 <= o & k <= (box brhd blhd rhd v2 /\\ box brhd dia v2) => lhd box rhd lhd o <= box rhd k)"],
    &["A k o a b. (lhd rhd v1 <= b & b <= o & k <= a & a <= (box brhd blhd rhd v2 /\\ box brhd dia v2) \
       => lhd box rhd lhd o <= box rhd k)"],
    &["A a b. (lhd rhd v1 <= b & a <= (box brhd blhd rhd v2 /\\ box brhd dia v2) => lhd box rhd lhd b <= box rhd a)"],
    &[
        "A a b. (lhd rhd v1 <= b & a <= box brhd blhd rhd v2 & a <= box brhd dia v2 \
         => E d0. (lhd box rhd lhd b <= d0 & d0 <= box rhd a))",
        "A v1 v2 a b c1 c2 c3 c4 c5 c6. (lhd c1 <= b & c1 <= rhd v1 & a <= box c2 & c2 <= brhd c3 & blhd c4 <= c3 \
         & c4 <= rhd v2 & a <= box c5 & c5 <= brhd c6 & dia v2 <= c6 => E d0 d1 d2 d3 d4. (lhd d1 <= d0 \
         & d1 <= box d2 & d2 <= rhd d3 & lhd b <= d3 & d0 <= box d4 & d4 <= rhd a))",
    ],
    &["A v1 v2 a b c1 c2 c3 c4 c5 c6. (b nD c1 & v1 nC c1 & a prec c2 & c2 nC c3 & c4 nD c3 & v2 nC c4 & a prec c5 \
       & c5 nC c6 & v2 prec c6 => E d0 d1 d2 d3 d4. (d0 nD d1 & d1 prec d2 & d3 nC d2 & d3 nD b & d0 prec d4 \
       & a nC d4))"],
];

fn forward_golden() -> Outcome {
    let start = Instant::now();
    let corr = correspond(&parse_mod(LOWER_LEFT).unwrap(), &dist(), Options::default()).map_err(|e| e.to_string())?;
    for (k, expected) in STAGES.iter().enumerate() {
        let step = k as u8 + 1;
        let items: Vec<&TraceItem> = corr.trace.iter().filter(|s| s.step == step).flat_map(|s| &s.items).collect();
        if items.len() != expected.len() {
            return Err(format!("step {step}: {} display(s), expected {}", items.len(), expected.len()));
        }
        for (got, want) in items.iter().zip(expected.iter()) {
            let (g, w) = (atom_set(got), expected_set(want));
            if g != w {
                let missing: Vec<&String> = w.difference(&g).collect();
                let extra: Vec<&String> = g.difference(&w).collect();
                return Err(format!("step {step}: missing {missing:?}, extra {extra:?}"));
            }
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(1) {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("6 stages, {t:?}"))
}

fn soundness_sweep(models: &[FiniteSpdAlgebra], ineqs: &[Ineq]) -> Outcome {
    let sig = dist();
    let start = Instant::now();
    if models.len() < 200 || ineqs.len() < 25 {
        return Err(format!("only {} models and {} inequalities", models.len(), ineqs.len()));
    }
    if models.iter().any(|h| h.size() > 16 || h.spd_type() != (1, 1, 1)) {
        return Err("suite has a model outside carrier 16 / type (1,1,1)".into());
    }
    let fos = ineqs
        .iter()
        .map(|i| correspond(i, &sig, Options::default()).map(|c| c.to_fo()).map_err(|e| format!("{i}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    par_models(models, |n, h| {
        for (i, f) in ineqs.iter().zip(&fos) {
            match check_correspondence(i, f, h).map_err(|e| e.to_string())? {
                Agreement::Agree => {}
                Agreement::Disagree { modal, fo } => {
                    return Err(format!("model {n}: {i} modal={modal} fo={fo}"));
                }
            }
        }
        Ok(())
    })?;
    let t = start.elapsed();
    if t >= Duration::from_secs(600) {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("{} models x {} inequalities agree, {t:?}", models.len(), ineqs.len()))
}

fn round_trip(models: &[FiniteSpdAlgebra], ineqs: &[Ineq]) -> Outcome {
    let heyting = Signature::builtin("heyting").unwrap();
    let h_models = enumerate_models(&ModelSpec { max_poset_size: 4, ..ModelSpec::for_signature(&heyting) });
    let h_ineqs = common::inequality_list("inequalities-heyting.txt");
    let mut total = 0;
    for (sig, models, ineqs) in [(dist(), models, ineqs), (heyting, &h_models[..], &h_ineqs[..])] {
        for i in ineqs {
            let rt = round_trip_check(i, &sig, models);
            if let Some(e) = rt.error {
                return Err(format!("{i}: {e}"));
            }
            if let Some(n) = rt.disagreement {
                return Err(format!("{i}: recovered conjunction differs on model {n}"));
            }
            total += 1;
        }
    }
    Ok(format!("{total} inequalities recovered up to equivalence"))
}

/// Single-point mutants of a correspondent: the converse of one atom, or one
/// atom with a variable replaced by another universally bound variable.
fn mutants(raw: &RawFo) -> Vec<RawFo> {
    let universals: Vec<String> = raw.universal.iter().flat_map(|q| q.names()).collect();
    let n_ante = raw.antecedent.len();
    let mut out = Vec::new();
    for k in 0..n_ante + raw.consequent.len() {
        let atom = if k < n_ante { &raw.antecedent[k] } else { &raw.consequent[k - n_ante] };
        let mut variants = Vec::new();
        if atom.lhs != atom.rhs {
            variants.push(FoAtom::new(atom.rhs.clone(), atom.rel, atom.lhs.clone()));
        }
        if let Some(x) = atom.lhs.as_var().or(atom.rhs.as_var()) {
            if let Some(y) = universals.iter().find(|y| *y != x && !atom.occurs(y)) {
                let map = [(x.to_string(), y.clone())].into_iter().collect();
                variants.push(atom.rename(&map));
            }
        }
        for v in variants {
            let mut m = raw.clone();
            if k < n_ante {
                m.antecedent[k] = v;
            } else {
                m.consequent[k - n_ante] = v;
            }
            out.push(m);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ext {
    Bot,
    Top,
}

/// Whether S1, C1, D1 and monotonicity make the atom true once its extreme
/// sides are fixed by `sigma`.
fn forced(atom: &FoAtom, sigma: &BTreeMap<String, Ext>) -> bool {
    let side = |t: &Term| t.as_var().and_then(|v| sigma.get(v)).copied();
    let (l, r) = (side(&atom.lhs), side(&atom.rhs));
    match atom.rel {
        Rel::Prec(_) | Rel::Leq => l == Some(Ext::Bot) || r == Some(Ext::Top),
        Rel::NC(_) => l == Some(Ext::Bot) || r == Some(Ext::Bot),
        Rel::ND(_) => l == Some(Ext::Top) || r == Some(Ext::Top),
        _ => false,
    }
}

/// Extreme at which a variable side of the atom is hardest to satisfy.
fn hardest(rel: Rel, left: bool) -> Option<Ext> {
    match rel {
        Rel::Prec(_) | Rel::Leq => Some(if left { Ext::Top } else { Ext::Bot }),
        Rel::NC(_) => Some(Ext::Top),
        Rel::ND(_) => Some(Ext::Bot),
        _ => None,
    }
}

/// Some assignment of `free` to extremes, extending `fixed`, forcing every atom.
fn discharge(atoms: &[FoAtom], free: &[String], fixed: &BTreeMap<String, Ext>) -> bool {
    (0u64..1 << free.len()).any(|bits| {
        let mut sigma = fixed.clone();
        for (k, x) in free.iter().enumerate() {
            sigma.insert(x.clone(), if bits >> k & 1 == 1 { Ext::Top } else { Ext::Bot });
        }
        atoms.iter().all(|a| forced(a, &sigma))
    })
}

/// A form every spd-algebra agrees on, when the antecedent can be discharged
/// at extremes: either a closed condition at the hardest instance of the
/// consequent, or the consequent alone quantified over its own variables.
fn extreme_form(raw: &RawFo) -> Option<String> {
    let universals: Vec<String> = raw.universal.iter().flat_map(|q| q.names()).collect();
    let eta: Vec<FoAtom> =
        raw.antecedent.iter().cloned().chain(raw.universal.iter().filter_map(|q| q.restricting_atom())).collect();
    let zeta: Vec<FoAtom> =
        raw.consequent.iter().cloned().chain(raw.existential.iter().filter_map(|q| q.restricting_atom())).collect();
    let in_zeta: BTreeSet<String> = zeta.iter().flat_map(|a| a.vars()).filter(|v| universals.contains(v)).collect();
    let rest: Vec<String> = universals.iter().filter(|v| !in_zeta.contains(*v)).cloned().collect();
    if raw.existential.is_empty() {
        let mut sigma = BTreeMap::new();
        let consistent = zeta.iter().all(|a| {
            [(&a.lhs, true), (&a.rhs, false)].into_iter().all(|(t, left)| match (t.as_var(), hardest(a.rel, left)) {
                (Some(x), Some(e)) => *sigma.entry(x.to_string()).or_insert(e) == e,
                _ => false,
            })
        });
        if consistent && discharge(&eta, &rest, &sigma) {
            let inst: BTreeSet<String> = zeta
                .iter()
                .map(|a| {
                    format!("{:?} {:?} {:?}", sigma[a.lhs.as_var().unwrap()], a.rel, sigma[a.rhs.as_var().unwrap()])
                })
                .collect();
            return Some(format!("closed {inst:?}"));
        }
    }
    if !discharge(&eta, &rest, &BTreeMap::new()) {
        return None;
    }
    let atoms: BTreeSet<String> = zeta.iter().map(|a| print_atom(a, Style::Ascii)).collect();
    let ds: Vec<String> = raw.existential.iter().flat_map(|q| q.names()).collect();
    Some(format!("forall {in_zeta:?} exists {ds:?} {atoms:?}"))
}

fn mutation(models: &[FiniteSpdAlgebra], ineqs: &[Ineq]) -> Outcome {
    let sig = dist();
    let mut cases = Vec::new();
    for i in ineqs.iter().take(8) {
        let corr = correspond(i, &sig, Options::default()).map_err(|e| e.to_string())?;
        for part in &corr.parts {
            let raw = RawFo::from_fo(&part.to_fo()).map_err(|e| e.to_string())?;
            let form = extreme_form(&raw);
            for m in mutants(&raw) {
                let equivalent = form.is_some() && extreme_form(&m) == form;
                cases.push((i.clone(), m.to_fo(), equivalent));
            }
        }
    }
    let (mut survivors, mut equivalent) = (Vec::new(), 0);
    for (i, f, eq) in &cases {
        let killed = models.iter().any(|h| matches!(check_correspondence(i, f, h), Ok(Agreement::Disagree { .. })));
        if killed {
            assert!(!eq, "a mutant proved equivalent was refuted: {i} vs {}", print_fo(f, Style::Ascii));
        } else if *eq {
            equivalent += 1;
        } else {
            survivors.push(format!("{i} vs {}", print_fo(f, Style::Ascii)));
        }
    }
    let detected = cases.len() - survivors.len() - equivalent;
    for s in &survivors {
        println!("    survivor: {s}");
    }
    let scored = cases.len() - equivalent;
    let summary = format!(
        "{detected}/{scored} mutants detected ({} generated, {equivalent} proven equivalent at extremes)",
        cases.len()
    );
    if scored < 20 || detected * 10 < scored * 9 {
        return Err(summary);
    }
    Ok(summary)
}

fn rels_model(l: Lattice, rels: Rels) -> FiniteSpdAlgebra {
    let names = (0..l.size()).map(|i| i.to_string()).collect();
    FiniteSpdAlgebra::new(names, l, Variety::DistributiveLattice, Default::default(), rels)
}

fn pairs(n: usize, ps: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in ps {
        m[a][b] = true;
    }
    m
}

/// Hand-built violations on the four-element Boolean lattice (0 ⊥, 1 and 2 atoms, 3 ⊤).
fn negative_fixtures() -> Vec<(Axiom, FiniteSpdAlgebra)> {
    let b = powerset(2);
    let prec = |ps: &[(usize, usize)]| Rels { prec: vec![pairs(4, ps)], c: vec![], d: vec![] };
    let c = |ps: &[(usize, usize)]| Rels { prec: vec![], c: vec![pairs(4, ps)], d: vec![] };
    let d = |ps: &[(usize, usize)]| Rels { prec: vec![], c: vec![], d: vec![pairs(4, ps)] };
    let mut s1 = chain(2).leq.clone();
    s1[0][0] = false;
    vec![
        (Axiom::S1, rels_model(chain(2), Rels { prec: vec![s1], c: vec![], d: vec![] })),
        (Axiom::S2, rels_model(b.clone(), prec(&[(0, 0), (3, 3), (1, 1), (1, 2)]))),
        (Axiom::S3, rels_model(b.clone(), prec(&[(0, 0), (3, 3), (1, 1), (2, 1)]))),
        (Axiom::S4, rels_model(b.clone(), prec(&[(0, 0), (3, 3), (1, 1)]))),
        (Axiom::C1, rels_model(b.clone(), c(&[(0, 1)]))),
        (Axiom::C2, rels_model(b.clone(), c(&[(1, 1)]))),
        (Axiom::C3, rels_model(b.clone(), c(&[(1, 1), (1, 3)]))),
        (Axiom::D1, rels_model(b.clone(), d(&[(3, 1)]))),
        (Axiom::D2, rels_model(b.clone(), d(&[(2, 2)]))),
        (Axiom::D3, rels_model(b, d(&[(2, 2), (2, 0)]))),
    ]
}

fn bundled_models() -> Vec<(String, FiniteSpdAlgebra)> {
    let dir = common::corpus_dir().join("models");
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let h = parse_model(&text, &dist()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (p.file_stem().unwrap().to_string_lossy().into_owned(), h)
        })
        .collect()
}

fn axioms(models: &[FiniteSpdAlgebra]) -> Outcome {
    for (want, h) in negative_fixtures() {
        match h.validate_axioms() {
            Err(v) if v.axiom == want => {}
            Err(v) => return Err(format!("{want} fixture reported as {}", v.axiom)),
            Ok(()) => return Err(format!("{want} fixture accepted")),
        }
    }
    let bundled = bundled_models();
    for (name, h) in &bundled {
        h.validate_axioms().map_err(|v| format!("{name}: {v}"))?;
    }
    par_models(models, |n, h| h.validate_axioms().map_err(|v| format!("suite model {n}: {v}")))?;
    Ok(format!("10 fixtures rejected by name, {} bundled + {} generated models valid", bundled.len(), models.len()))
}

fn dual_laws(models: &[FiniteSpdAlgebra]) -> Outcome {
    let distributive: Vec<FiniteSpdAlgebra> = models
        .iter()
        .cloned()
        .chain(bundled_models().into_iter().map(|(_, h)| h))
        .filter(|h| h.lattice.is_distributive())
        .collect();
    par_models(&distributive, |n, h| {
        let s = h.dual_space().ok_or(format!("model {n}: no dual space"))?;
        s.check_laws(h).map_err(|e| format!("model {n}: {e}"))
    })?;
    Ok(format!("{} distributive models", distributive.len()))
}

fn inductive_gate(ineqs: &[Ineq]) -> Outcome {
    let mut formulas: Vec<(String, spd_core::foterm::Fo, Signature)> =
        common::inverse_cases().into_iter().map(|c| (c.name.clone(), parse_fo(&c.input).unwrap(), c.sig)).collect();
    let bi = Signature::builtin("biheyting").unwrap();
    formulas.push(("big-arity.fo".into(), parse_fo(&common::read("big-arity.fo")).unwrap(), bi));
    let sig = dist();
    for i in ineqs {
        let corr = correspond(i, &sig, Options::default()).map_err(|e| e.to_string())?;
        for part in &corr.parts {
            formulas.push((i.to_string(), part.to_fo(), sig.clone()));
        }
    }
    let (mut gated, mut outputs) = (0, 0);
    for (name, f, sig) in &formulas {
        let parts = inverse_fo(f, sig, DEFAULT_ROLE_CAP, false).map_err(|e| format!("{name}: {e}"))?;
        for p in parts {
            if check_inductive(&p.kracht, sig).is_none() {
                continue;
            }
            gated += 1;
            for o in &p.output {
                outputs += 1;
                if is_analytic_inductive(o, sig).is_none() {
                    return Err(format!("{name}: output {o} is not analytic inductive"));
                }
            }
        }
    }
    Ok(format!("{gated} inductive Kracht formulas, {outputs} outputs classified"))
}

fn main() -> ExitCode {
    let sig = dist();
    let models = suite();
    let ineqs = corpus(&sig);
    let criteria: Vec<Criterion<'_>> = vec![
        ("golden inverse corpus", Box::new(golden_inverse)),
        ("forward trace golden", Box::new(forward_golden)),
        ("oracle soundness sweep", Box::new(|| soundness_sweep(&models, &ineqs))),
        ("round trip", Box::new(|| round_trip(&models, &ineqs))),
        ("mutation sensitivity", Box::new(|| mutation(&models, &ineqs))),
        ("axiom validators", Box::new(|| axioms(&models))),
        ("dual-space laws", Box::new(|| dual_laws(&models))),
        ("inductive Kracht gate", Box::new(|| inductive_gate(&ineqs))),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".to_string()));
        match res {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail} [{:.1?}]", k + 1, start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail} [{:.1?}]", k + 1, start.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
