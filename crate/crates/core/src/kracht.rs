//! Inverse correspondence: from Kracht formulas to clopen-analytic inequalities.
//!
//! Atoms are translated to inequalities, restricted variables are eliminated
//! innermost first, the antecedent is merged per a/b-variable and its bounds
//! are substituted into each split conjunct of the consequent.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::alba::{correspond, Options};
use crate::foterm::{
    ackermann_bound, assemble, check_kracht, infer_roles, rho, role_candidates, Fo, FoAtom, KrachtFormula,
    KrachtViolation, Quant, RawFo, Rel, RhoError, ShapeError, DEFAULT_ROLE_CAP,
};
use crate::modterm::{is_delta, sign_tree, Ineq, IneqSide, Sign, Term};
use crate::oracle::{EvalError, FiniteSpdAlgebra};
use crate::signature::{Conn, Eps, Modal, Side, Signature, Variety};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DisplayError {
    #[error("no residual of {conn} in coordinate {coord}")]
    MissingResidual { conn: String, coord: usize },
    #[error("variable {0} does not occur")]
    Absent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KrachtError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    NotKracht(#[from] KrachtViolation),
    #[error(transparent)]
    Rho(#[from] RhoError),
    #[error("cannot display: {0}")]
    Display(#[from] DisplayError),
    #[error("{0}")]
    Structure(String),
    #[error("no role assignment makes the formula Kracht")]
    NoRoles,
}

/// Result of displaying one occurrence: the displayed inequality and the
/// conjuncts split off on the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Displayed {
    pub main: Ineq,
    pub side: Vec<Ineq>,
}

impl Displayed {
    pub fn into_vec(self) -> Vec<Ineq> {
        let mut v = vec![self.main];
        v.extend(self.side);
        v
    }
}

fn others(args: &[Term], i: usize) -> Vec<Term> {
    args.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, a)| a.clone()).collect()
}

/// Brings the node at `path` on `side` to the root of one side by residuation,
/// splitting off conjuncts at ∨ on the left and ∧ on the right.
pub fn display(ineq: &Ineq, side: IneqSide, path: &[usize], sig: &Signature) -> Result<Displayed, DisplayError> {
    let mut cur = ineq.clone();
    let mut side = side;
    let mut extra = Vec::new();
    for &i in path {
        let (node, other) = match side {
            IneqSide::Lhs => (cur.lhs.clone(), cur.rhs.clone()),
            IneqSide::Rhs => (cur.rhs.clone(), cur.lhs.clone()),
        };
        let Term::App(conn, args) = node else { unreachable!("path runs through a leaf") };
        let target = args[i].clone();
        let missing = || DisplayError::MissingResidual { conn: conn.to_string(), coord: i };
        match (side, &conn) {
            (IneqSide::Lhs, Conn::Join) => {
                extra.extend(others(&args, i).into_iter().map(|t| Ineq::new(t, other.clone())));
                cur = Ineq::new(target, other);
            }
            (IneqSide::Rhs, Conn::Meet) => {
                extra.extend(others(&args, i).into_iter().map(|t| Ineq::new(other.clone(), t)));
                cur = Ineq::new(other, target);
            }
            (IneqSide::Lhs, Conn::Meet) => {
                let Ok(Some(r)) = sig.residual(&conn, i) else { return Err(missing()) };
                cur = Ineq::new(target, Term::App(r, vec![Term::meet_all(others(&args, i)), other]));
            }
            (IneqSide::Rhs, Conn::Join) => {
                let Ok(Some(r)) = sig.residual(&conn, i) else { return Err(missing()) };
                cur = Ineq::new(Term::App(r, vec![other, Term::join_all(others(&args, i))]), target);
            }
            _ => {
                let fits = matches!(
                    (side, sig.side(&conn)),
                    (IneqSide::Lhs, Some(Side::F | Side::Both)) | (IneqSide::Rhs, Some(Side::G | Side::Both))
                );
                let res = if fits { sig.residual(&conn, i).ok().flatten() } else { None };
                let Some(res) = res else { return Err(missing()) };
                let eps = sig.order_type(&conn).map_err(|_| missing())?[i];
                let mut new_args = args.clone();
                new_args[i] = other;
                let r = Term::App(res, new_args);
                cur = match (side, eps) {
                    (IneqSide::Lhs, Eps::One) => Ineq::new(target, r),
                    (IneqSide::Lhs, Eps::Dual) => {
                        side = IneqSide::Rhs;
                        Ineq::new(r, target)
                    }
                    (IneqSide::Rhs, Eps::One) => Ineq::new(r, target),
                    (IneqSide::Rhs, Eps::Dual) => {
                        side = IneqSide::Lhs;
                        Ineq::new(target, r)
                    }
                };
            }
        }
    }
    Ok(Displayed { main: cur, side: extra })
}

/// Displays the first occurrence of variable `x`.
pub fn display_var(ineq: &Ineq, x: &str, sig: &Signature) -> Result<Displayed, DisplayError> {
    let occ = ineq.var_signs(x, sig);
    let (side, path, _) = occ.first().ok_or_else(|| DisplayError::Absent(x.to_string()))?;
    display(ineq, *side, path, sig)
}

/// Splits ∨ on the left and ∧ on the right exhaustively.
pub fn split(ineq: &Ineq) -> Vec<Ineq> {
    match (&ineq.lhs, &ineq.rhs) {
        (Term::App(Conn::Join, args), r) => args.iter().flat_map(|a| split(&Ineq::new(a.clone(), r.clone()))).collect(),
        (l, Term::App(Conn::Meet, args)) => args.iter().flat_map(|a| split(&Ineq::new(l.clone(), a.clone()))).collect(),
        _ => vec![ineq.clone()],
    }
}

/// Translates an atom, keeping its left term unwrapped when the focus
/// variables occur only there (`s ≤ ■t`, `s ≤ ▶t`, `◁t ≤ s`).
pub fn translate(atom: &FoAtom, focus: &BTreeSet<String>) -> Result<Ineq, RhoError> {
    let hits = |t: &Term| t.vars().iter().any(|v| focus.contains(v));
    if !hits(&atom.lhs) || hits(&atom.rhs) {
        return rho(atom);
    }
    let (s, t) = (atom.lhs.clone(), atom.rhs.clone());
    let wrap = |m: Modal, i: usize, t: Term| Term::App(Conn::Modal(m, i), vec![t]);
    Ok(match atom.rel {
        Rel::Prec(i) => Ineq::new(s, wrap(Modal::Box, i, t)),
        Rel::NC(i) => Ineq::new(s, wrap(Modal::Brhd, i, t)),
        Rel::ND(i) => Ineq::new(wrap(Modal::Lhd, i, t), s),
        _ => rho(atom)?,
    })
}

/// Picks the first focus set that meets the atom.
fn translate_with(atom: &FoAtom, foci: &[&BTreeSet<String>]) -> Result<Ineq, RhoError> {
    let vars = atom.vars();
    let empty = BTreeSet::new();
    let focus = foci.iter().find(|f| f.iter().any(|v| vars.contains(v))).copied().unwrap_or(&empty);
    translate(atom, focus)
}

fn signs_in(set: &[Ineq], x: &str, sig: &Signature) -> BTreeSet<Sign> {
    set.iter().flat_map(|i| i.var_signs(x, sig)).map(|o| o.2).collect()
}

fn uniform(set: &[Ineq], x: &str, sig: &Signature) -> Result<Option<Sign>, KrachtError> {
    let s = signs_in(set, x, sig);
    match s.len() {
        0 => Ok(None),
        1 => Ok(s.into_iter().next()),
        _ => Err(KrachtError::Structure(format!("{x} does not occur uniformly"))),
    }
}

fn drop_var(set: &mut Vec<Ineq>, x: &str, sig: &Signature) -> Result<(), KrachtError> {
    if uniform(set, x, sig).is_err() {
        if let Some(k) = ackermann_bound(set, x, sig) {
            let restr = set.remove(k);
            return eliminate_displayed(set, x, &restr, sig);
        }
    }
    uniform(set, x, sig)?;
    set.retain(|i| !i.occurs(x));
    Ok(())
}

fn push_split(set: &mut Vec<Ineq>, i: Ineq) {
    for j in split(&i) {
        if !set.contains(&j) {
            set.push(j);
        }
    }
}

/// Eliminates a variable restricted by a displayed inequality `x ≤ θ` or
/// `θ ≤ x`: substitution when the other occurrences have opposite polarity,
/// vacuous otherwise.
fn eliminate_displayed(set: &mut Vec<Ineq>, x: &str, restr: &Ineq, sig: &Signature) -> Result<(), KrachtError> {
    let (theta, restr_sign) =
        if restr.lhs.as_var() == Some(x) { (restr.rhs.clone(), Sign::Pos) } else { (restr.lhs.clone(), Sign::Neg) };
    match uniform(set, x, sig)? {
        None => {}
        Some(s) if s == restr_sign => set.retain(|i| !i.occurs(x)),
        Some(_) => {
            let b = BTreeMap::from([(x.to_string(), theta)]);
            let old = std::mem::take(set);
            for i in old {
                push_split(set, if i.occurs(x) { i.subst_vars(&b) } else { i });
            }
        }
    }
    Ok(())
}

/// Table-driven elimination of a block restricted by `f(d̄) ≤ y` or `y ≤ g(d̄)`.
fn eliminate_block(set: &mut Vec<Ineq>, names: &[String], restr: &Ineq, sig: &Signature) -> Result<(), KrachtError> {
    let restr_sign = |x: &str| restr.polarity(x, sig);
    let mut same = false;
    for x in names {
        if let (Some(s), Some(r)) = (uniform(set, x, sig)?, restr_sign(x)) {
            same |= s == r;
        }
    }
    if same {
        for x in names {
            set.retain(|i| !i.occurs(x));
        }
        return Ok(());
    }
    let (on_left, conn, args) = match (&restr.lhs, &restr.rhs) {
        (Term::App(c, a), _) if a.iter().all(|t| t.as_var().is_some_and(|v| names.iter().any(|n| n == v))) => {
            (true, c.clone(), a.clone())
        }
        (_, Term::App(c, a)) if a.iter().all(|t| t.as_var().is_some_and(|v| names.iter().any(|n| n == v))) => {
            (false, c.clone(), a.clone())
        }
        _ => return Err(KrachtError::Structure(format!("restrictor {restr} is not of block shape"))),
    };
    let mut thetas = Vec::new();
    for a in &args {
        let x = a.as_var().expect("checked above").to_string();
        let (hit, rest): (Vec<Ineq>, Vec<Ineq>) = std::mem::take(set).into_iter().partition(|i| i.occurs(&x));
        *set = rest;
        let mut bounds = Vec::new();
        let mut below = restr_sign(&x) == Some(Sign::Neg);
        for i in hit {
            let d = display_var(&i, &x, sig)?;
            for s in d.side {
                push_split(set, s);
            }
            if d.main.lhs.as_var() == Some(x.as_str()) {
                below = true;
                bounds.push(d.main.rhs);
            } else {
                below = false;
                bounds.push(d.main.lhs);
            }
        }
        thetas.push(if below { Term::meet_all(bounds) } else { Term::join_all(bounds) });
    }
    let head = Term::App(conn, thetas);
    let new = if on_left { Ineq::new(head, restr.rhs.clone()) } else { Ineq::new(restr.lhs.clone(), head) };
    push_split(set, new);
    Ok(())
}

/// Eliminates the variables of `vars` bound by `quants` (innermost first) from
/// the inequality set; variables of `vars` without a quantifier count as
/// unrestricted.
pub fn compactify(
    vars: &[String],
    quants: &[Quant],
    ineqs: Vec<Ineq>,
    sig: &Signature,
) -> Result<Vec<Ineq>, KrachtError> {
    let mut set = Vec::new();
    for i in ineqs {
        push_split(&mut set, i);
    }
    for q in quants.iter().rev() {
        let names = q.names();
        let Some(atom) = q.restricting_atom() else {
            for x in &names {
                drop_var(&mut set, x, sig)?;
            }
            continue;
        };
        let focus: BTreeSet<String> = names.iter().cloned().collect();
        let restr = translate(&atom, &focus)?;
        if names.len() == 1 {
            if let Ok(d) = display_var(&restr, &names[0], sig) {
                if d.side.is_empty() && d.main.count(&names[0]) == 1 {
                    eliminate_displayed(&mut set, &names[0], &d.main, sig)?;
                    continue;
                }
            }
        }
        eliminate_block(&mut set, &names, &restr, sig)?;
    }
    let bound: BTreeSet<String> = quants.iter().flat_map(Quant::names).collect();
    for x in vars.iter().filter(|x| !bound.contains(*x)) {
        drop_var(&mut set, x, sig)?;
    }
    if let Some(x) = vars.iter().find(|x| set.iter().any(|i| i.occurs(x))) {
        return Err(KrachtError::Structure(format!("{x} survives elimination")));
    }
    Ok(set)
}

/// One distribution step lifting a Δ-node that is the common ancestor of two
/// occurrences of a variable in `vars`.
fn lift_once(ineq: &Ineq, vars: &BTreeSet<String>, sig: &Signature) -> Option<Ineq> {
    for x in vars.iter().filter(|x| ineq.count(x) > 1) {
        let occ = ineq.var_signs(x, sig);
        for (k, o1) in occ.iter().enumerate() {
            for o2 in &occ[k + 1..] {
                if o1.0 != o2.0 {
                    continue;
                }
                let (root, root_sign) = match o1.0 {
                    IneqSide::Lhs => (&ineq.lhs, Sign::Pos),
                    IneqSide::Rhs => (&ineq.rhs, Sign::Neg),
                };
                let signs = sign_tree(root, root_sign, sig);
                let mut cp: Vec<usize> = o1.1.iter().zip(&o2.1).take_while(|(a, b)| a == b).map(|(a, _)| *a).collect();
                let Term::App(op, _) = root.at(&cp) else { continue };
                let op = op.clone();
                if !is_delta(&op, signs[&cp]) {
                    continue;
                }
                while let Some((_, parent)) = cp.split_last() {
                    match root.at(parent) {
                        Term::App(c, _) if *c == op && is_delta(c, signs[parent]) => cp.pop(),
                        _ => break,
                    };
                }
                let Some((&slot, parent)) = cp.split_last() else { continue };
                let Term::App(h, hargs) = root.at(parent) else { continue };
                let Term::App(_, parts) = root.at(&cp) else { continue };
                let spread: Vec<Term> = parts
                    .iter()
                    .map(|u| {
                        let mut a = hargs.clone();
                        a[slot] = u.clone();
                        Term::App(h.clone(), a)
                    })
                    .collect();
                let combined = if signs[parent] == Sign::Pos { Term::join_all(spread) } else { Term::meet_all(spread) };
                let new_root = root.replace_at(parent, combined);
                return Some(match o1.0 {
                    IneqSide::Lhs => Ineq::new(new_root, ineq.rhs.clone()),
                    IneqSide::Rhs => Ineq::new(ineq.lhs.clone(), new_root),
                });
            }
        }
    }
    None
}

/// Splits an inequality into conjuncts in which every variable of `vars`
/// occurs at most once, distributing Δ-nodes upwards as needed.
pub fn separate(ineq: &Ineq, vars: &BTreeSet<String>, sig: &Signature) -> Vec<Ineq> {
    let mut work: Vec<Ineq> = split(ineq);
    work.reverse();
    let mut out = Vec::new();
    let mut budget = 256;
    while let Some(i) = work.pop() {
        match lift_once(&i, vars, sig) {
            Some(j) if budget > 0 => {
                budget -= 1;
                let mut s = split(&j);
                s.reverse();
                work.extend(s);
            }
            _ => out.push(i),
        }
    }
    out
}

fn involutive(sig: &Signature) -> bool {
    matches!(sig.variety, Variety::Boolean | Variety::DeMorgan)
}

fn negated(t: &Term) -> Option<&Term> {
    match t {
        Term::App(Conn::Clopen(n), a) if &**n == "~" && a.len() == 1 => Some(&a[0]),
        _ => None,
    }
}

fn strip_double(t: &Term) -> Term {
    if let Some(inner) = negated(t).and_then(negated) {
        return strip_double(inner);
    }
    match t {
        Term::App(c, args) => Term::App(c.clone(), args.iter().map(strip_double).collect()),
        _ => t.clone(),
    }
}

/// Removes double negations and contraposes `¬s ≤ ¬t` when negation is involutive.
pub fn tidy(ineq: &Ineq, sig: &Signature) -> Ineq {
    if !involutive(sig) {
        return ineq.clone();
    }
    let mut i = Ineq::new(strip_double(&ineq.lhs), strip_double(&ineq.rhs));
    while let (Some(s), Some(t)) = (negated(&i.lhs), negated(&i.rhs)) {
        i = Ineq::new(t.clone(), s.clone());
    }
    i
}

/// Inverse correspondence of a Kracht formula.
pub fn inverse(k: &KrachtFormula, sig: &Signature) -> Result<Vec<Ineq>, KrachtError> {
    check_kracht(k, sig)?;
    let set = |v: Vec<String>| -> BTreeSet<String> { v.into_iter().collect() };
    let c_set = set(k.c_vars());
    let d_set = set(k.d_vars());
    let a_set = set(k.a_vars.clone());
    let ab: BTreeSet<String> = k.a_vars.iter().chain(&k.b_vars).cloned().collect();

    let zeta: Vec<Ineq> = k.zeta.iter().map(|a| translate_with(a, &[&d_set, &ab])).collect::<Result<_, _>>()?;
    let eta: Vec<Ineq> = k.eta.iter().map(|a| translate_with(a, &[&c_set, &ab])).collect::<Result<_, _>>()?;
    let zeta = compactify(&k.d_vars(), &k.d_prefix, zeta, sig)?;
    let eta = compactify(&k.c_vars(), &k.c_prefix, eta, sig)?;

    // merge the antecedent per a/b-variable, in order of first occurrence
    let mut bounds: Vec<(String, Vec<Term>)> = Vec::new();
    let mut work = eta;
    work.reverse();
    while let Some(i) = work.pop() {
        let hits: Vec<&String> = ab.iter().filter(|x| i.occurs(x)).collect();
        let total: usize = hits.iter().map(|x| i.count(x)).sum();
        if total != 1 {
            return Err(KrachtError::Structure(format!(
                "antecedent inequality {i} has {total} a/b occurrences after elimination"
            )));
        }
        let x = hits[0].clone();
        let d = display_var(&i, &x, sig)?;
        for s in d.side.into_iter().rev() {
            work.push(s);
        }
        let theta = if d.main.lhs.as_var() == Some(x.as_str()) { d.main.rhs } else { d.main.lhs };
        match bounds.iter_mut().find(|(y, _)| *y == x) {
            Some((_, ts)) => ts.push(theta),
            None => bounds.push((x, vec![theta])),
        }
    }
    let binding: BTreeMap<String, Term> = bounds
        .into_iter()
        .map(|(x, ts)| {
            let t = if a_set.contains(&x) { Term::meet_all(ts) } else { Term::join_all(ts) };
            (x, t)
        })
        .collect();

    let mut out: Vec<Ineq> = Vec::new();
    for z in zeta.iter().flat_map(|z| separate(z, &ab, sig)) {
        let bound: Vec<&String> = binding.keys().filter(|x| z.occurs(x)).collect();
        let total: usize = ab.iter().map(|x| z.count(x)).sum();
        let pieces = match bound.as_slice() {
            // displaying only reshapes; without a residual substitute in place
            [x] if total == 1 => display_var(&z, x, sig).map(Displayed::into_vec).unwrap_or_else(|_| vec![z]),
            _ => vec![z],
        };
        for p in pieces {
            let r = tidy(&p.subst_vars(&binding), sig);
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// One inverted conjunct of the input: the Kracht reading used and its output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InversePart {
    pub kracht: KrachtFormula,
    pub output: Vec<Ineq>,
}

fn push_negations(t: &Term) -> Term {
    if let Some(inner) = negated(t) {
        let neg = |x: &Term| push_negations(&Term::clopen("~", vec![x.clone()]));
        return match inner {
            Term::App(Conn::Meet, a) => Term::join_all(a.iter().map(neg).collect()),
            Term::App(Conn::Join, a) => Term::meet_all(a.iter().map(neg).collect()),
            other => match negated(other) {
                Some(x) => push_negations(x),
                None => Term::clopen("~", vec![push_negations(other)]),
            },
        };
    }
    match t {
        Term::App(c, args) => Term::App(c.clone(), args.iter().map(push_negations).collect()),
        _ => t.clone(),
    }
}

/// Splits an atom along the lattice operations it turns into conjunctions.
fn split_atom(a: &FoAtom) -> Vec<FoAtom> {
    let (lhs_op, rhs_op) = match a.rel {
        Rel::NC(_) => (Conn::Join, Conn::Join),
        Rel::ND(_) => (Conn::Meet, Conn::Meet),
        Rel::Prec(_) | Rel::Leq => (Conn::Join, Conn::Meet),
        Rel::C(_) | Rel::D(_) => return vec![a.clone()],
    };
    match (&a.lhs, &a.rhs) {
        (Term::App(c, args), _) if *c == lhs_op => {
            args.iter().flat_map(|s| split_atom(&FoAtom::new(s.clone(), a.rel, a.rhs.clone()))).collect()
        }
        (_, Term::App(c, args)) if *c == rhs_op => {
            args.iter().flat_map(|t| split_atom(&FoAtom::new(a.lhs.clone(), a.rel, t.clone()))).collect()
        }
        _ => vec![a.clone()],
    }
}

/// Rewrites a quantifier-free consequent into separate quasi-inequalities,
/// one per atom after pushing involutive negations and splitting atoms.
pub fn split_consequent(raw: &RawFo, sig: &Signature) -> Option<Vec<RawFo>> {
    let raw = raw.clone().contrapose().ok()?;
    if !raw.existential.is_empty() {
        return None;
    }
    let atoms: Vec<FoAtom> = raw
        .consequent
        .iter()
        .map(|a| {
            if involutive(sig) {
                FoAtom::new(push_negations(&a.lhs), a.rel, push_negations(&a.rhs))
            } else {
                a.clone()
            }
        })
        .flat_map(|a| split_atom(&a))
        .collect();
    (atoms.len() > 1).then(|| atoms.into_iter().map(|a| RawFo { consequent: vec![a], ..raw.clone() }).collect())
}

/// First violation among the role candidates, for diagnostics.
fn first_violation(raw: &RawFo, sig: &Signature, cap: usize) -> KrachtError {
    let Ok(raw) = raw.clone().contrapose() else { return KrachtError::NoRoles };
    let Ok(cands) = role_candidates(&raw, cap) else { return KrachtError::NoRoles };
    for roles in cands {
        if let Some(k) = assemble(&raw, &roles, true) {
            if let Err(v) = check_kracht(&k, sig) {
                return KrachtError::NotKracht(v);
            }
        }
    }
    KrachtError::NoRoles
}

fn invert_raw(raw: &RawFo, sig: &Signature, cap: usize, all: bool) -> Result<Vec<InversePart>, KrachtError> {
    let cands = infer_roles(raw, sig, cap)?;
    if cands.is_empty() {
        return Err(first_violation(raw, sig, cap));
    }
    let mut out = Vec::new();
    let mut last = None;
    for k in cands {
        match inverse(&k, sig) {
            Ok(output) => {
                out.push(InversePart { kracht: k, output });
                if !all {
                    break;
                }
            }
            Err(e) => last = Some(e),
        }
    }
    if out.is_empty() {
        return Err(last.unwrap_or(KrachtError::NoRoles));
    }
    Ok(out)
}

/// Inverse correspondence of a first-order sentence: the first role
/// assignment that inverts (every one with `all`), falling back to splitting
/// a quantifier-free consequent into separate quasi-inequalities.
pub fn inverse_fo(f: &Fo, sig: &Signature, cap: usize, all: bool) -> Result<Vec<InversePart>, KrachtError> {
    if let Fo::And(parts) = f {
        if parts.len() > 1 && parts.iter().all(|p| p.free_vars().is_empty()) {
            let mut out = Vec::new();
            for p in parts {
                out.extend(inverse_fo(p, sig, cap, all)?);
            }
            return Ok(out);
        }
    }
    let raw = RawFo::from_fo(f)?;
    match invert_raw(&raw, sig, cap, all) {
        Ok(p) => Ok(p),
        Err(e) => match split_consequent(&raw, sig) {
            Some(pieces) => {
                let mut out = Vec::new();
                for p in &pieces {
                    out.extend(invert_raw(p, sig, cap, all)?);
                }
                Ok(out)
            }
            None => Err(e),
        },
    }
}

/// Outcome of correspond-then-inverse on one inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTrip {
    pub outputs: Vec<Ineq>,
    pub models: usize,
    /// Index of the first model where the input and the recovered conjunction differ.
    pub disagreement: Option<usize>,
    pub error: Option<String>,
}

impl RoundTrip {
    pub fn equivalent(&self) -> bool {
        self.error.is_none() && self.disagreement.is_none()
    }
}

/// Whether the conjunction `ineqs` is valid on `h`.
pub fn valid_all(ineqs: &[Ineq], h: &FiniteSpdAlgebra) -> Result<bool, EvalError> {
    for i in ineqs {
        if !h.valid_mod(i)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn round_trip_check(ineq: &Ineq, sig: &Signature, models: &[FiniteSpdAlgebra]) -> RoundTrip {
    let mut rt = RoundTrip { outputs: Vec::new(), models: models.len(), disagreement: None, error: None };
    let corr = match correspond(ineq, sig, Options::default()) {
        Ok(c) => c,
        Err(e) => {
            rt.error = Some(e.to_string());
            return rt;
        }
    };
    for part in &corr.parts {
        match inverse_fo(&part.to_fo(), sig, DEFAULT_ROLE_CAP, false) {
            Ok(ps) => {
                for p in ps {
                    for o in p.output {
                        if !rt.outputs.contains(&o) {
                            rt.outputs.push(o);
                        }
                    }
                }
            }
            Err(e) => {
                rt.error = Some(e.to_string());
                return rt;
            }
        }
    }
    for (n, h) in models.iter().enumerate() {
        match (h.valid_mod(ineq), valid_all(&rt.outputs, h)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => {
                rt.disagreement = Some(n);
                return rt;
            }
            (Err(e), _) | (_, Err(e)) => {
                rt.error = Some(e.to_string());
                return rt;
            }
        }
    }
    rt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{enumerate_models, ModelSpec};
    use crate::syntax::{parse_fo, parse_mod, parse_term};

    fn dist() -> Signature {
        Signature::builtin("distributive").unwrap()
    }

    fn heyting() -> Signature {
        Signature::builtin("heyting").unwrap()
    }

    fn inv(text: &str, sig: &Signature) -> Vec<Ineq> {
        inverse_fo(&parse_fo(text).unwrap(), sig, DEFAULT_ROLE_CAP, false)
            .unwrap()
            .into_iter()
            .flat_map(|p| p.output)
            .collect()
    }

    #[test]
    fn display_examples() {
        let d = display_var(&parse_mod("dia a <= x").unwrap(), "a", &dist()).unwrap();
        assert_eq!(d.main, parse_mod("a <= box x").unwrap());
        let d = display_var(&parse_mod("a /\\ x <= box y").unwrap(), "a", &heyting()).unwrap();
        assert_eq!(d.main, parse_mod("a <= x -> box y").unwrap());
        let d = display_var(&parse_mod("x <= y").unwrap(), "x", &dist()).unwrap();
        assert_eq!(d.main, parse_mod("x <= y").unwrap());
        let d = display_var(&parse_mod("a \\/ v <= rhd x").unwrap(), "a", &dist()).unwrap();
        assert_eq!(d.main, parse_mod("a <= rhd x").unwrap());
        assert_eq!(d.side, vec![parse_mod("v <= rhd x").unwrap()]);
        let d = display_var(&parse_mod("y <= rhd (x /\\ c)").unwrap(), "c", &heyting()).unwrap();
        assert_eq!(d.main, parse_mod("c <= x -> brhd y").unwrap());
    }

    #[test]
    fn missing_residual_names_connective() {
        let err = display_var(&parse_mod("a /\\ x <= y").unwrap(), "a", &dist()).unwrap_err();
        assert_eq!(err, DisplayError::MissingResidual { conn: "∧".into(), coord: 0 });
        let err = display_var(&parse_mod("y <= dia a").unwrap(), "a", &dist()).unwrap_err();
        assert!(matches!(err, DisplayError::MissingResidual { coord: 0, .. }));
    }

    #[test]
    fn compactify_examples() {
        // consequent of the two-restrictor example: d2 then d1 by substitution
        let f = parse_fo("A v1 v2 b:b. (v1 /\\ v2 prec b => (E d1:d succ v1) (E d2:d succ v2) (d1 /\\ d2) prec b)")
            .unwrap();
        let raw = RawFo::from_fo(&f).unwrap();
        let k = &infer_roles(&raw, &dist(), 8).unwrap()[0];
        let d_set: BTreeSet<String> = k.d_vars().into_iter().collect();
        let zeta: Vec<Ineq> = k.zeta.iter().map(|a| translate(a, &d_set).unwrap()).collect();
        let out = compactify(&k.d_vars(), &k.d_prefix, zeta, &dist()).unwrap();
        assert_eq!(out, vec![parse_mod("dia v1 /\\ dia v2 <= box b").unwrap()]);
        // same polarity in restrictor and body: vacuous
        let b = Signature::builtin("biheyting").unwrap();
        let f = parse_fo("A v. (E d2 d1 <=[-<] v) (d1 <= v & d2 <= v & v prec v)").unwrap();
        let raw = RawFo::from_fo(&f).unwrap();
        let k = &infer_roles(&raw, &b, 8).unwrap()[0];
        let zeta: Vec<Ineq> = k.zeta.iter().map(|a| rho(a).unwrap()).collect();
        let out = compactify(&k.d_vars(), &k.d_prefix, zeta, &b).unwrap();
        assert_eq!(out, vec![parse_mod("dia v <= v").unwrap()]);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            inv("A v:v a:a. (A c:c >= a) (c prec v => a nC v)", &dist()),
            vec![parse_mod("box v <= brhd v").unwrap()]
        );
        let cta = "A z:v y:v x:a. (z \\/ y prec ~x & (z /\\ x) C y => z C (x /\\ y))";
        assert_eq!(inv(cta, &heyting()), vec![parse_mod("~dia (z \\/ y) /\\ (y -> rhd z) <= z -> brhd y").unwrap()]);
        let ex = "A a:a b:b v:v. (a prec v & v prec b => E d:d. (b nD d & d nC a))";
        assert_eq!(inv(ex, &dist()), vec![parse_mod("blhd dia v <= brhd box v").unwrap()]);
    }

    #[test]
    fn separation_distributes_delta_nodes() {
        let vars: BTreeSet<String> = ["a".to_string()].into();
        let out = separate(&parse_mod("dia (a \\/ dia a) <= v").unwrap(), &vars, &dist());
        assert_eq!(out, vec![parse_mod("dia a <= v").unwrap(), parse_mod("dia dia a <= v").unwrap()]);
        let out = separate(&parse_mod("v <= rhd (a \\/ box a)").unwrap(), &vars, &dist());
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn tidy_contraposes_involutive_negation() {
        let dm = Signature::builtin("demorgan").unwrap();
        let i = parse_mod("~rhd a <= ~rhd (a /\\ dia a)").unwrap();
        assert_eq!(tidy(&i, &dm), parse_mod("rhd (a /\\ dia a) <= rhd a").unwrap());
        assert_eq!(parse_term("~~x").map(|t| strip_double(&t)).unwrap(), parse_term("x").unwrap());
        assert_eq!(tidy(&i, &heyting()), i);
    }

    #[test]
    fn round_trips() {
        let models = enumerate_models(&ModelSpec { max_poset_size: 4, ..ModelSpec::default() });
        for text in ["box box v <= box v", "dia v <= v", "box v <= brhd v"] {
            let rt = round_trip_check(&parse_mod(text).unwrap(), &dist(), &models);
            assert!(rt.equivalent(), "{text}: {rt:?}");
            assert!(!rt.outputs.is_empty());
        }
    }
}
