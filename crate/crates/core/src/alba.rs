//! Forward correspondence: preprocessing, first approximation, flattening and
//! translation of (clopen-)analytic inequalities into first-order conditions.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::foterm::{Binder, Fo, FoAtom, Quant, Rel, Role};
use crate::modterm::{analyze, is_delta, AnalysisFailure, Ineq, PhKind, Sign, Term};
use crate::signature::{Conn, Modal, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlbaError {
    #[error("not clopen-analytic: {0}")]
    NotAnalytic(AnalysisFailure),
    #[error("cannot flatten {0}: both sides are compound")]
    Flat(String),
}

type PhMap = BTreeMap<(PhKind, u32), Term>;

/// A definite skeleton inequality whose X/Y/T leaves stand for PIA and clopen
/// subterms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definite {
    pub skeleton: Ineq,
    pub pia: PhMap,
    pub clopen: PhMap,
}

impl Definite {
    pub fn ineq(&self) -> Ineq {
        self.skeleton.subst_ph(&self.pia).subst_ph(&self.clopen)
    }

    /// Placeholders in left-to-right order.
    fn placeholders(&self) -> Vec<(PhKind, u32)> {
        fn walk(t: &Term, out: &mut Vec<(PhKind, u32)>) {
            match t {
                Term::Ph(k, i) if *k != PhKind::T => out.push((*k, *i)),
                Term::App(_, args) => args.iter().for_each(|a| walk(a, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(&self.skeleton.lhs, &mut out);
        walk(&self.skeleton.rhs, &mut out);
        out
    }
}

/// Distributes every other node over the lattice nodes selected by `split`,
/// returning the list of the resulting split components.
fn distribute(t: &Term, sign: Sign, sig: &Signature, split: fn(&Conn, Sign) -> bool) -> Vec<Term> {
    match t {
        Term::App(c, args) if split(c, sign) => args.iter().flat_map(|a| distribute(a, sign, sig, split)).collect(),
        Term::App(c, args) => {
            let eps = sig.order_type(c).expect("connective in signature");
            let mut acc: Vec<Vec<Term>> = vec![Vec::new()];
            for (a, e) in args.iter().zip(eps) {
                let opts = distribute(a, sign.under(e), sig, split);
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        opts.iter().map(move |o| {
                            let mut p = prefix.clone();
                            p.push(o.clone());
                            p
                        })
                    })
                    .collect();
            }
            acc.into_iter().map(|args| Term::App(c.clone(), args)).collect()
        }
        _ => vec![t.clone()],
    }
}

fn collect_ph(t: &Term, out: &mut BTreeSet<(PhKind, u32)>) {
    match t {
        Term::Ph(k, i) => {
            out.insert((*k, *i));
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_ph(a, out)),
        _ => {}
    }
}

/// Step 1: analysis, distribution and splitting into definite inequalities.
pub fn preprocess(ineq: &Ineq, sig: &Signature) -> Result<Vec<Definite>, AlbaError> {
    let dec = analyze(ineq, sig).map_err(AlbaError::NotAnalytic)?;
    // PIA parts are regrouped as meets (positive) or joins (negative) of definite PIA terms.
    let pia_split = |c: &Conn, s: Sign| is_delta(c, s.flip());
    let mut pia = dec.ph_binding();
    for ((kind, _), body) in pia.iter_mut() {
        *body = match kind {
            PhKind::X => Term::meet_all(distribute(body, Sign::Pos, sig, pia_split)),
            _ => Term::join_all(distribute(body, Sign::Neg, sig, pia_split)),
        };
    }
    let clopen = dec.t_binding();
    let lhs = distribute(&dec.skeleton.lhs, Sign::Pos, sig, is_delta);
    let rhs = distribute(&dec.skeleton.rhs, Sign::Neg, sig, is_delta);
    let mut out = Vec::new();
    for r in &rhs {
        for l in &lhs {
            let skeleton = Ineq::new(l.clone(), r.clone());
            let mut used = BTreeSet::new();
            collect_ph(&skeleton.lhs, &mut used);
            collect_ph(&skeleton.rhs, &mut used);
            for t in pia.values() {
                collect_ph(t, &mut used);
            }
            let keep = |m: &PhMap| m.iter().filter(|(k, _)| used.contains(k)).map(|(k, v)| (*k, v.clone())).collect();
            out.push(Definite { skeleton, pia: keep(&pia), clopen: keep(&clopen) });
        }
    }
    Ok(out)
}

/// Fresh-name supply avoiding every input variable.
#[derive(Debug, Clone, Default)]
pub struct Fresh {
    taken: BTreeSet<String>,
}

impl Fresh {
    pub fn avoiding(names: impl IntoIterator<Item = String>) -> Fresh {
        Fresh { taken: names.into_iter().collect() }
    }

    /// `prefix{n}` for the least `n >= *counter` not yet taken.
    pub fn indexed(&mut self, prefix: &str, counter: &mut usize) -> String {
        loop {
            let name = format!("{prefix}{counter}");
            *counter += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    /// Plain `base` when free and `alone`, otherwise indexed from 1.
    pub fn named(&mut self, base: &str, alone: bool) -> String {
        if alone && self.taken.insert(base.to_string()) {
            return base.to_string();
        }
        self.indexed(base, &mut 1)
    }
}

/// Output of first approximation: ∀v̄∀ā∀b̄(antecedent ⇒ consequent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiInequality {
    pub v_vars: Vec<String>,
    pub a_vars: Vec<String>,
    pub b_vars: Vec<String>,
    pub antecedent: Vec<Ineq>,
    pub consequent: Ineq,
    /// Clopen placeholders still present as leaves.
    pub clopen: PhMap,
    /// Whether the simplified first approximation applies.
    pub simplified: bool,
}

impl QuasiInequality {
    pub fn substituted(&self) -> (Vec<Ineq>, Ineq) {
        (self.antecedent.iter().map(|i| i.subst_ph(&self.clopen)).collect(), self.consequent.subst_ph(&self.clopen))
    }
}

fn is_ph(t: &Term, kind: PhKind) -> bool {
    matches!(t, Term::Ph(k, _) if *k == kind)
}

fn pia_free(t: &Term) -> bool {
    match t {
        Term::Ph(k, _) => *k == PhKind::T,
        Term::App(_, args) => args.iter().all(pia_free),
        _ => true,
    }
}

/// Algorithm 1: each maximal PIA subterm becomes a fresh a- or b-variable.
pub fn alba(def: &Definite, fresh: &mut Fresh) -> QuasiInequality {
    let phs = def.placeholders();
    let n_x = phs.iter().filter(|(k, _)| *k == PhKind::X).count();
    let n_y = phs.len() - n_x;
    let (mut a_vars, mut b_vars, mut antecedent) = (Vec::new(), Vec::new(), Vec::new());
    let mut binding = PhMap::new();
    for key in phs {
        let body = def.pia[&key].clone();
        match key.0 {
            PhKind::X => {
                let a = fresh.named("a", n_x == 1);
                antecedent.push(Ineq::new(Term::var(&a), body));
                binding.insert(key, Term::var(&a));
                a_vars.push(a);
            }
            _ => {
                let b = fresh.named("b", n_y == 1);
                antecedent.push(Ineq::new(body, Term::var(&b)));
                binding.insert(key, Term::var(&b));
                b_vars.push(b);
            }
        }
    }
    let sk = &def.skeleton;
    let simplified =
        (is_ph(&sk.lhs, PhKind::X) && pia_free(&sk.rhs)) || (is_ph(&sk.rhs, PhKind::Y) && pia_free(&sk.lhs));
    let mut v_vars = Vec::new();
    def.ineq().lhs.vars_ordered(&mut v_vars);
    def.ineq().rhs.vars_ordered(&mut v_vars);
    QuasiInequality {
        v_vars,
        a_vars,
        b_vars,
        antecedent,
        consequent: sk.subst_ph(&binding),
        clopen: def.clopen.clone(),
        simplified,
    }
}

fn connectives(t: &Term) -> usize {
    match t {
        Term::App(_, args) => 1 + args.iter().map(connectives).sum::<usize>(),
        _ => 0,
    }
}

/// Algorithm 2: flattens an inequality with a leaf on one side into a chain
/// of flat inequalities, pushing the fresh names used onto `vars`.
pub fn flat(
    ineq: &Ineq,
    sig: &Signature,
    fresh: &mut Fresh,
    prefix: &str,
    counter: &mut usize,
    vars: &mut Vec<String>,
) -> Result<Vec<Ineq>, AlbaError> {
    let mut out = Vec::new();
    flat_into(ineq, sig, fresh, prefix, counter, vars, &mut out)?;
    Ok(out)
}

fn flat_into(
    ineq: &Ineq,
    sig: &Signature,
    fresh: &mut Fresh,
    prefix: &str,
    counter: &mut usize,
    vars: &mut Vec<String>,
    out: &mut Vec<Ineq>,
) -> Result<(), AlbaError> {
    let (l, r) = (&ineq.lhs, &ineq.rhs);
    if l.is_leaf() {
        if let Term::App(Conn::Meet, args) = r {
            for a in args {
                flat_into(&Ineq::new(l.clone(), a.clone()), sig, fresh, prefix, counter, vars, out)?;
            }
            return Ok(());
        }
    }
    if r.is_leaf() {
        if let Term::App(Conn::Join, args) = l {
            for a in args {
                flat_into(&Ineq::new(a.clone(), r.clone()), sig, fresh, prefix, counter, vars, out)?;
            }
            return Ok(());
        }
    }
    if connectives(l) + connectives(r) <= 1 {
        out.push(ineq.clone());
        return Ok(());
    }
    let (compound, on_rhs) = match (l.is_leaf(), r.is_leaf()) {
        (true, false) => (r, true),
        (false, true) => (l, false),
        _ => return Err(AlbaError::Flat(ineq.to_string())),
    };
    let Term::App(h, args) = compound else { unreachable!() };
    let eps = sig.order_type(h).map_err(|e| AlbaError::Flat(e.to_string()))?;
    let mut new_args = Vec::new();
    let mut pending = Vec::new();
    for (a, e) in args.iter().zip(eps) {
        if a.is_leaf() {
            new_args.push(a.clone());
            continue;
        }
        let c = fresh.indexed(prefix, counter);
        vars.push(c.clone());
        let cv = Term::var(&c);
        // a ≤ h(c̄) needs c_i ≤^ε ψ_i; h(c̄) ≤ b needs φ_i ≤^ε c_i.
        let lower = matches!((on_rhs, e), (true, crate::signature::Eps::One) | (false, crate::signature::Eps::Dual));
        pending.push(if lower { Ineq::new(cv.clone(), a.clone()) } else { Ineq::new(a.clone(), cv.clone()) });
        new_args.push(cv);
    }
    let head = Term::App(h.clone(), new_args);
    out.push(if on_rhs { Ineq::new(l.clone(), head) } else { Ineq::new(head, r.clone()) });
    for p in pending {
        flat_into(&p, sig, fresh, prefix, counter, vars, out)?;
    }
    Ok(())
}

/// Step 6 translation of a flat inequality.
pub fn tau(flat: &Ineq) -> FoAtom {
    let (l, r) = (&flat.lhs, &flat.rhs);
    let modal = |t: &Term| match t {
        Term::App(Conn::Modal(m, i), args) => Some((*m, *i, args[0].clone())),
        _ => None,
    };
    if let Some((m, i, s)) = modal(l) {
        match m {
            Modal::Dia => return FoAtom::new(s, Rel::Prec(i), r.clone()),
            Modal::Lhd => return FoAtom::new(r.clone(), Rel::ND(i), s),
            Modal::Blhd => return FoAtom::new(s, Rel::ND(i), r.clone()),
            _ => {}
        }
    }
    if let Some((m, i, s)) = modal(r) {
        match m {
            Modal::Box => return FoAtom::new(l.clone(), Rel::Prec(i), s),
            Modal::Rhd => return FoAtom::new(s, Rel::NC(i), l.clone()),
            Modal::Brhd => return FoAtom::new(l.clone(), Rel::NC(i), s),
            _ => {}
        }
    }
    FoAtom::new(l.clone(), Rel::Leq, r.clone())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Options {
    /// Always split the consequent through a compactness variable d0.
    pub general_path: bool,
}

/// One traced stage of the forward pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stage {
    pub step: u8,
    /// Index of the definite inequality (Step 1 has none).
    pub part: Option<usize>,
    pub items: Vec<TraceItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceItem {
    Ineq(Ineq),
    Fo(Fo),
}

/// Correspondent of one definite inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correspondent {
    pub definite: Ineq,
    pub quasi: QuasiInequality,
    pub c_vars: Vec<String>,
    pub d_vars: Vec<String>,
    pub eta: Vec<FoAtom>,
    pub zeta: Vec<FoAtom>,
}

fn binders(names: &[String], role: Role) -> Vec<Binder> {
    names.iter().map(|n| Binder::new(n, Some(role))).collect()
}

fn prenex(universal: Vec<Binder>, eta: Vec<Fo>, existential: Vec<Binder>, zeta: Vec<Fo>) -> Fo {
    let mut body = Fo::and(zeta);
    if !existential.is_empty() {
        body = Fo::Exists(Quant { binders: existential, restrictor: None }, Box::new(body));
    }
    if !eta.is_empty() {
        body = Fo::Implies(Box::new(Fo::and(eta)), Box::new(body));
    }
    if !universal.is_empty() {
        body = Fo::Forall(Quant { binders: universal, restrictor: None }, Box::new(body));
    }
    body
}

fn leq(i: &Ineq) -> Fo {
    Fo::Atom(FoAtom::new(i.lhs.clone(), Rel::Leq, i.rhs.clone()))
}

fn trivial(a: &FoAtom) -> bool {
    a.rel == Rel::Leq && (a.lhs == a.rhs || a.lhs == Term::Bot || a.rhs == Term::Top)
}

impl Correspondent {
    /// ∀v̄∀ā∀b̄∀c̄(η ⇒ ∃d̄ ζ), binders annotated with their roles.
    pub fn to_fo(&self) -> Fo {
        let q = &self.quasi;
        let mut universal = binders(&q.v_vars, Role::V);
        universal.extend(binders(&q.a_vars, Role::A));
        universal.extend(binders(&q.b_vars, Role::B));
        universal.extend(binders(&self.c_vars, Role::C));
        prenex(
            universal,
            self.eta.iter().cloned().map(Fo::Atom).collect(),
            binders(&self.d_vars, Role::D),
            self.zeta.iter().cloned().map(Fo::Atom).collect(),
        )
    }
}

/// Full forward result: one correspondent per definite inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correspondence {
    pub parts: Vec<Correspondent>,
    pub trace: Vec<Stage>,
}

impl Correspondence {
    pub fn to_fo(&self) -> Fo {
        Fo::and(self.parts.iter().map(Correspondent::to_fo).collect())
    }
}

fn subst_atom(a: &FoAtom, m: &PhMap) -> FoAtom {
    FoAtom::new(a.lhs.subst_ph(m), a.rel, a.rhs.subst_ph(m))
}

/// Steps 2–6 for one definite inequality.
pub fn correspond_definite(
    def: &Definite,
    input_vars: &BTreeSet<String>,
    sig: &Signature,
    opts: Options,
    part: usize,
    trace: &mut Vec<Stage>,
) -> Result<Correspondent, AlbaError> {
    let mut fresh = Fresh::avoiding(input_vars.iter().cloned());
    let stage = |step: u8, items: Vec<TraceItem>| Stage { step, part: Some(part), items };
    let t_sub = |i: &Ineq| i.subst_ph(&def.clopen);

    // Steps 2-4 are displayed with the closed/open variables k/o for the trace only.
    let quasi = alba(def, &mut fresh);
    {
        let mut shadow = fresh.clone();
        let phs = def.placeholders();
        let nx = phs.iter().filter(|(k, _)| *k == PhKind::X).count();
        let ny = phs.len() - nx;
        let mut ko = PhMap::new();
        let (mut ks, mut os) = (Vec::new(), Vec::new());
        for key in &phs {
            let name = if key.0 == PhKind::X { shadow.named("k", nx == 1) } else { shadow.named("o", ny == 1) };
            ko.insert(*key, Term::var(&name));
            if key.0 == PhKind::X {
                ks.push(name)
            } else {
                os.push(name)
            }
        }
        let cons_ko = t_sub(&def.skeleton.subst_ph(&ko));
        let mut ante2 = Vec::new();
        let mut ante3 = Vec::new();
        let (mut ai, mut bi) = (0, 0);
        for key in &phs {
            let body = def.pia[key].subst_ph(&def.clopen);
            let kv = ko[key].clone();
            if key.0 == PhKind::X {
                let a = Term::var(&quasi.a_vars[ai]);
                ai += 1;
                ante2.push(leq(&Ineq::new(kv.clone(), body.clone())));
                ante3.push(leq(&Ineq::new(kv, a.clone())));
                ante3.push(leq(&Ineq::new(a, body)));
            } else {
                let b = Term::var(&quasi.b_vars[bi]);
                bi += 1;
                ante2.push(leq(&Ineq::new(body.clone(), kv.clone())));
                ante3.push(leq(&Ineq::new(body, b.clone())));
                ante3.push(leq(&Ineq::new(b, kv)));
            }
        }
        let mut q2 = binders(&ks, Role::A);
        q2.extend(binders(&os, Role::B));
        let mut q3 = q2.clone();
        q3.extend(binders(&quasi.a_vars, Role::A));
        q3.extend(binders(&quasi.b_vars, Role::B));
        trace.push(stage(2, vec![TraceItem::Fo(prenex(q2, ante2, vec![], vec![leq(&cons_ko)]))]));
        trace.push(stage(3, vec![TraceItem::Fo(prenex(q3, ante3, vec![], vec![leq(&cons_ko)]))]));
    }
    let (ante_sub, cons_sub) = quasi.substituted();
    let mut q4 = binders(&quasi.a_vars, Role::A);
    q4.extend(binders(&quasi.b_vars, Role::B));
    trace.push(stage(
        4,
        vec![TraceItem::Fo(prenex(q4.clone(), ante_sub.iter().map(leq).collect(), vec![], vec![leq(&cons_sub)]))],
    ));

    // Step 5: splitting, compactness and flattening.
    let mut split = Vec::new();
    for i in &quasi.antecedent {
        split_ineq(i, &mut split);
    }
    let cons = &quasi.consequent;
    let use_d0 = if opts.general_path {
        !(cons.lhs.is_leaf() && cons.rhs.is_leaf())
    } else {
        !quasi.simplified && !cons.lhs.is_leaf() && !cons.rhs.is_leaf()
    };
    let mut d_vars = Vec::new();
    let mut d_counter = 1;
    let consequents = if use_d0 {
        let d0 = fresh.indexed("d", &mut 0);
        d_vars.push(d0.clone());
        vec![Ineq::new(cons.lhs.clone(), Term::var(&d0)), Ineq::new(Term::var(&d0), cons.rhs.clone())]
    } else {
        vec![cons.clone()]
    };
    let compact = TraceItem::Fo(prenex(
        q4,
        split.iter().map(|i| leq(&t_sub(i))).collect(),
        binders(&d_vars, Role::D),
        consequents.iter().map(|i| leq(&t_sub(i))).collect(),
    ));
    let mut c_vars = Vec::new();
    let mut c_counter = 1;
    let mut eta_flat = Vec::new();
    for i in &split {
        eta_flat.extend(flat(i, sig, &mut fresh, "c", &mut c_counter, &mut c_vars)?);
    }
    let mut zeta_flat = Vec::new();
    for i in &consequents {
        zeta_flat.extend(flat(i, sig, &mut fresh, "d", &mut d_counter, &mut d_vars)?);
    }
    let mut universal = binders(&quasi.v_vars, Role::V);
    universal.extend(binders(&quasi.a_vars, Role::A));
    universal.extend(binders(&quasi.b_vars, Role::B));
    universal.extend(binders(&c_vars, Role::C));
    trace.push(stage(
        5,
        vec![
            compact,
            TraceItem::Fo(prenex(
                universal,
                eta_flat.iter().map(|i| leq(&t_sub(i))).collect(),
                binders(&d_vars, Role::D),
                zeta_flat.iter().map(|i| leq(&t_sub(i))).collect(),
            )),
        ],
    ));

    // Step 6: translation, then clopen re-substitution.
    let eta: Vec<FoAtom> = eta_flat.iter().map(|i| subst_atom(&tau(i), &def.clopen)).filter(|a| !trivial(a)).collect();
    let zeta: Vec<FoAtom> =
        zeta_flat.iter().map(|i| subst_atom(&tau(i), &def.clopen)).filter(|a| !trivial(a)).collect();
    let used: BTreeSet<String> = eta.iter().chain(zeta.iter()).flat_map(FoAtom::vars).collect();
    let keep = |vs: Vec<String>| vs.into_iter().filter(|v| used.contains(v)).collect::<Vec<_>>();
    let mut quasi = quasi;
    quasi.v_vars = keep(quasi.v_vars);
    quasi.a_vars = keep(quasi.a_vars);
    quasi.b_vars = keep(quasi.b_vars);
    let out = Correspondent { definite: def.ineq(), quasi, c_vars: keep(c_vars), d_vars: keep(d_vars), eta, zeta };
    trace.push(stage(6, vec![TraceItem::Fo(out.to_fo())]));
    Ok(out)
}

fn split_ineq(i: &Ineq, out: &mut Vec<Ineq>) {
    match (&i.lhs, &i.rhs) {
        (l, Term::App(Conn::Meet, args)) if l.is_leaf() => {
            args.iter().for_each(|a| split_ineq(&Ineq::new(l.clone(), a.clone()), out))
        }
        (Term::App(Conn::Join, args), r) if r.is_leaf() => {
            args.iter().for_each(|a| split_ineq(&Ineq::new(a.clone(), r.clone()), out))
        }
        _ => out.push(i.clone()),
    }
}

/// Forward correspondence of a clopen-analytic inequality.
pub fn correspond(ineq: &Ineq, sig: &Signature, opts: Options) -> Result<Correspondence, AlbaError> {
    let defs = preprocess(ineq, sig)?;
    let mut trace =
        vec![Stage { step: 1, part: None, items: defs.iter().map(|d| TraceItem::Ineq(d.ineq())).collect() }];
    let input_vars = ineq.vars();
    let mut parts = Vec::new();
    for (k, d) in defs.iter().enumerate() {
        parts.push(correspond_definite(d, &input_vars, sig, opts, k, &mut trace)?);
    }
    Ok(Correspondence { parts, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_mod;

    fn sig() -> Signature {
        Signature::builtin("distributive").unwrap()
    }

    fn ineq(s: &str) -> Ineq {
        parse_mod(s).unwrap()
    }

    #[test]
    fn preprocess_distributes_and_splits() {
        let s = Signature::builtin("lattice").unwrap();
        let out = preprocess(&ineq("lhd (p /\\ q) <= r"), &s).unwrap();
        let got: Vec<Ineq> = out.iter().map(Definite::ineq).collect();
        assert_eq!(got, vec![ineq("lhd p <= r"), ineq("lhd q <= r")]);
        let one = preprocess(&ineq("box box v <= box v"), &s).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].ineq(), ineq("box box v <= box v"));
    }

    #[test]
    fn running_example_gives_four_definite_inequalities() {
        let i = ineq(
            "lhd (box rhd lhd lhd rhd v1 /\\ rhd dia rhd v1) <= box rhd (brhd v1 \\/ box brhd (blhd rhd v2 \\/ dia v2))",
        );
        let defs = preprocess(&i, &sig()).unwrap();
        assert_eq!(defs.len(), 4);
        assert_eq!(
            defs[2].ineq(),
            ineq("lhd box rhd lhd lhd rhd v1 <= box rhd (box brhd blhd rhd v2 /\\ box brhd dia v2)")
        );
    }

    #[test]
    fn alba_on_lower_left() {
        let d = &preprocess(
            &ineq("lhd box rhd lhd lhd rhd v1 <= box rhd (box brhd blhd rhd v2 /\\ box brhd dia v2)"),
            &sig(),
        )
        .unwrap()[0];
        let q = alba(d, &mut Fresh::avoiding(["v1".into(), "v2".into()]));
        assert_eq!(q.antecedent, vec![ineq("lhd rhd v1 <= b"), ineq("a <= box brhd blhd rhd v2 /\\ box brhd dia v2")]);
        assert_eq!(q.consequent, ineq("lhd box rhd lhd b <= box rhd a"));
    }

    #[test]
    fn flat_examples() {
        let s = sig();
        let mut fresh = Fresh::avoiding(["v1".into(), "v2".into(), "a".into(), "b".into()]);
        let mut vars = Vec::new();
        let mut n = 1;
        let got = flat(&ineq("lhd rhd v1 <= b"), &s, &mut fresh, "c", &mut n, &mut vars).unwrap();
        assert_eq!(got, vec![ineq("lhd c1 <= b"), ineq("c1 <= rhd v1")]);
        let got = flat(&ineq("a <= box brhd blhd rhd v2"), &s, &mut fresh, "c", &mut n, &mut vars).unwrap();
        assert_eq!(got, vec![ineq("a <= box c2"), ineq("c2 <= brhd c3"), ineq("blhd c4 <= c3"), ineq("c4 <= rhd v2")]);
        let got = flat(&ineq("a <= b"), &s, &mut fresh, "c", &mut n, &mut vars).unwrap();
        assert_eq!(got, vec![ineq("a <= b")]);
        assert_eq!(vars, vec!["c1", "c2", "c3", "c4"]);
    }

    #[test]
    fn tau_table() {
        let t = |s: &str| tau(&ineq(s)).to_string();
        assert_eq!(t("lhd c1 <= b"), "b D̸ c1");
        assert_eq!(t("a <= box c2"), "a ≺ c2");
        assert_eq!(t("dia a <= b"), "a ≺ b");
        assert_eq!(t("b <= rhd a"), "a C̸ b");
        assert_eq!(t("a <= brhd b"), "a C̸ b");
        assert_eq!(t("blhd a <= b"), "a D̸ b");
        assert_eq!(t("a <= b"), "a ≤ b");
    }

    #[test]
    fn simplification_examples() {
        let s = sig();
        let c = correspond(&ineq("box box v <= box v"), &s, Options::default()).unwrap();
        assert_eq!(c.parts[0].quasi.antecedent, vec![ineq("a <= box box v")]);
        assert_eq!(c.parts[0].quasi.consequent, ineq("a <= box v"));
        assert!(c.parts[0].quasi.simplified);
        let c = correspond(&ineq("box v <= brhd v"), &s, Options::default()).unwrap();
        assert_eq!(c.to_fo().to_string(), "∀v∀a(a ≺ v ⇒ a C̸ v)");
    }

    #[test]
    fn trivial_inputs() {
        let s = sig();
        let c = correspond(&ineq("v <= v"), &s, Options::default()).unwrap();
        assert_eq!(c.parts[0].quasi.antecedent, vec![]);
        assert_eq!(c.parts[0].quasi.consequent, ineq("v <= v"));
        assert!(c.parts[0].zeta.is_empty());
        let c = correspond(&ineq("bot <= v"), &s, Options::default()).unwrap();
        assert!(c.parts[0].zeta.is_empty() && c.parts[0].eta.is_empty());
    }
}
