//! Terms of the modal language, signed generation trees, node classification
//! and (clopen-)analytic decomposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::signature::{Conn, Eps, Modal, Side, SigError, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhKind {
    /// Positive PIA placeholder.
    X,
    /// Negative PIA placeholder.
    Y,
    /// Abstracted clopen subterm.
    T,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Ph(PhKind, u32),
    Top,
    Bot,
    App(Conn, Vec<Term>),
}

pub type Path = Vec<usize>;

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn meet(a: Term, b: Term) -> Term {
        Term::App(Conn::Meet, vec![a, b])
    }

    pub fn join(a: Term, b: Term) -> Term {
        Term::App(Conn::Join, vec![a, b])
    }

    pub fn modal(m: Modal, t: Term) -> Term {
        Term::App(Conn::Modal(m, 0), vec![t])
    }

    pub fn clopen(name: &str, args: Vec<Term>) -> Term {
        Term::App(Conn::clopen(name), args)
    }

    /// Right-nested meet of a nonempty list; ⊤ when empty.
    pub fn meet_all(mut ts: Vec<Term>) -> Term {
        match ts.len() {
            0 => Term::Top,
            _ => {
                let mut acc = ts.pop().unwrap();
                while let Some(t) = ts.pop() {
                    acc = Term::meet(t, acc);
                }
                acc
            }
        }
    }

    pub fn join_all(mut ts: Vec<Term>) -> Term {
        match ts.len() {
            0 => Term::Bot,
            _ => {
                let mut acc = ts.pop().unwrap();
                while let Some(t) = ts.pop() {
                    acc = Term::join(t, acc);
                }
                acc
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        !matches!(self, Term::App(..))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn children(&self) -> &[Term] {
        match self {
            Term::App(_, args) => args,
            _ => &[],
        }
    }

    pub fn at(&self, path: &[usize]) -> &Term {
        path.iter().fold(self, |t, &i| &t.children()[i])
    }

    pub fn replace_at(&self, path: &[usize], new: Term) -> Term {
        match path.split_first() {
            None => new,
            Some((&i, rest)) => match self {
                Term::App(c, args) => {
                    let mut args = args.clone();
                    args[i] = args[i].replace_at(rest, new);
                    Term::App(c.clone(), args)
                }
                _ => panic!("path leaves the term"),
            },
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Term::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Term::depth).max().unwrap_or(0)
    }

    pub fn has_modal(&self) -> bool {
        match self {
            Term::App(c, args) => c.is_modal() || args.iter().any(Term::has_modal),
            _ => false,
        }
    }

    pub fn has_placeholder(&self) -> bool {
        match self {
            Term::Ph(..) => true,
            Term::App(_, args) => args.iter().any(Term::has_placeholder),
            _ => false,
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            _ => {}
        }
    }

    /// Variables in left-to-right order of first occurrence.
    pub fn vars_ordered(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.vars_ordered(out)),
            _ => {}
        }
    }

    pub fn occurs(&self, name: &str) -> bool {
        match self {
            Term::Var(v) => v == name,
            Term::App(_, args) => args.iter().any(|a| a.occurs(name)),
            _ => false,
        }
    }

    pub fn count(&self, name: &str) -> usize {
        match self {
            Term::Var(v) => usize::from(v == name),
            Term::App(_, args) => args.iter().map(|a| a.count(name)).sum(),
            _ => 0,
        }
    }

    /// Signed paths to every leaf satisfying `pred`.
    pub fn leaves_where(&self, sign: Sign, sig: &Signature, pred: &dyn Fn(&Term) -> bool) -> Vec<(Path, Sign)> {
        let mut out = Vec::new();
        walk_signed(self, sign, sig, &mut Vec::new(), &mut |t, p, s| {
            if t.is_leaf() && pred(t) {
                out.push((p.to_vec(), s));
            }
        });
        out
    }

    pub fn var_signs(&self, name: &str, sign: Sign, sig: &Signature) -> Vec<(Path, Sign)> {
        self.leaves_where(sign, sig, &|t| t.as_var() == Some(name))
    }

    pub fn subst_vars(&self, binding: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => binding.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(c, args) => Term::App(c.clone(), args.iter().map(|a| a.subst_vars(binding)).collect()),
            _ => self.clone(),
        }
    }

    pub fn subst_ph(&self, binding: &BTreeMap<(PhKind, u32), Term>) -> Term {
        match self {
            Term::Ph(k, i) => binding.get(&(*k, *i)).cloned().unwrap_or_else(|| self.clone()),
            Term::App(c, args) => Term::App(c.clone(), args.iter().map(|a| a.subst_ph(binding)).collect()),
            _ => self.clone(),
        }
    }

    pub fn rename(&self, map: &BTreeMap<String, String>) -> Term {
        match self {
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::App(c, args) => Term::App(c.clone(), args.iter().map(|a| a.rename(map)).collect()),
            _ => self.clone(),
        }
    }
}

/// Capture-free simultaneous substitution of variables.
pub fn substitute(term: &Term, binding: &BTreeMap<String, Term>) -> Term {
    term.subst_vars(binding)
}

/// Checks that every connective belongs to the signature with its declared arity.
pub fn check_term(t: &Term, sig: &Signature) -> Result<(), SigError> {
    if let Term::App(c, args) = t {
        let n = sig.arity(c)?;
        if n != args.len() {
            return Err(SigError::Config(format!("{c} expects {n} arguments, got {}", args.len())));
        }
        args.iter().try_for_each(|a| check_term(a, sig))?;
    }
    Ok(())
}

/// Flattens nested ∧/∨ and sorts their arguments.
pub fn ac_normal(t: &Term) -> Term {
    match t {
        Term::App(c @ (Conn::Meet | Conn::Join), args) => {
            let mut flat = Vec::new();
            for a in args.iter().map(ac_normal) {
                match a {
                    Term::App(d, inner) if d == *c => flat.extend(inner),
                    other => flat.push(other),
                }
            }
            flat.sort();
            flat.dedup();
            Term::App(c.clone(), flat)
        }
        Term::App(c, args) => Term::App(c.clone(), args.iter().map(ac_normal).collect()),
        _ => t.clone(),
    }
}

fn ac_set(ineqs: &[Ineq]) -> BTreeSet<Ineq> {
    ineqs.iter().map(|i| Ineq::new(ac_normal(&i.lhs), ac_normal(&i.rhs))).collect()
}

/// Equality of two conjunctions of inequalities up to renaming of variables,
/// conjunct order and ∧/∨ argument order.
pub fn alpha_ac_eq(a: &[Ineq], b: &[Ineq]) -> bool {
    let vars = |s: &[Ineq]| -> Vec<String> {
        let mut v = Vec::new();
        for i in s {
            for x in i.vars_ordered() {
                if !v.contains(&x) {
                    v.push(x);
                }
            }
        }
        v
    };
    let (va, vb) = (vars(a), vars(b));
    if va.len() != vb.len() {
        return false;
    }
    let target = ac_set(b);
    let mut perm: Vec<usize> = (0..vb.len()).collect();
    loop {
        let map: BTreeMap<String, String> = va.iter().cloned().zip(perm.iter().map(|&k| vb[k].clone())).collect();
        let renamed: Vec<Ineq> = a.iter().map(|i| i.rename(&map)).collect();
        if ac_set(&renamed) == target {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("a larger element exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ineq {
    pub lhs: Term,
    pub rhs: Term,
}

impl Ineq {
    pub fn new(lhs: Term, rhs: Term) -> Ineq {
        Ineq { lhs, rhs }
    }

    pub fn side(&self, s: IneqSide) -> &Term {
        match s {
            IneqSide::Lhs => &self.lhs,
            IneqSide::Rhs => &self.rhs,
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.vars();
        v.extend(self.rhs.vars());
        v
    }

    pub fn vars_ordered(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.lhs.vars_ordered(&mut out);
        self.rhs.vars_ordered(&mut out);
        out
    }

    pub fn occurs(&self, name: &str) -> bool {
        self.lhs.occurs(name) || self.rhs.occurs(name)
    }

    pub fn count(&self, name: &str) -> usize {
        self.lhs.count(name) + self.rhs.count(name)
    }

    pub fn has_modal(&self) -> bool {
        self.lhs.has_modal() || self.rhs.has_modal()
    }

    /// Signed occurrences of a variable, lhs signed + and rhs signed −.
    pub fn var_signs(&self, name: &str, sig: &Signature) -> Vec<(IneqSide, Path, Sign)> {
        let mut out: Vec<_> =
            self.lhs.var_signs(name, Sign::Pos, sig).into_iter().map(|(p, s)| (IneqSide::Lhs, p, s)).collect();
        out.extend(self.rhs.var_signs(name, Sign::Neg, sig).into_iter().map(|(p, s)| (IneqSide::Rhs, p, s)));
        out
    }

    /// Uniform polarity of a variable, if it occurs and all occurrences agree.
    pub fn polarity(&self, name: &str, sig: &Signature) -> Option<Sign> {
        let occ = self.var_signs(name, sig);
        let first = occ.first()?.2;
        occ.iter().all(|o| o.2 == first).then_some(first)
    }

    pub fn subst_vars(&self, binding: &BTreeMap<String, Term>) -> Ineq {
        Ineq::new(self.lhs.subst_vars(binding), self.rhs.subst_vars(binding))
    }

    pub fn subst_ph(&self, binding: &BTreeMap<(PhKind, u32), Term>) -> Ineq {
        Ineq::new(self.lhs.subst_ph(binding), self.rhs.subst_ph(binding))
    }

    pub fn rename(&self, map: &BTreeMap<String, String>) -> Ineq {
        Ineq::new(self.lhs.rename(map), self.rhs.rename(map))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IneqSide {
    Lhs,
    Rhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }

    pub fn under(self, eps: Eps) -> Sign {
        match eps {
            Eps::One => self,
            Eps::Dual => self.flip(),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Pos => "+",
            Sign::Neg => "−",
        })
    }
}

fn walk_signed(t: &Term, sign: Sign, sig: &Signature, path: &mut Path, f: &mut dyn FnMut(&Term, &[usize], Sign)) {
    f(t, path, sign);
    if let Term::App(c, args) = t {
        let eps = sig.order_type(c).unwrap_or_else(|_| vec![Eps::One; args.len()]);
        for (i, a) in args.iter().enumerate() {
            path.push(i);
            walk_signed(a, sign.under(eps[i]), sig, path, f);
            path.pop();
        }
    }
}

/// Sign of every node, keyed by path from the root.
pub fn sign_tree(term: &Term, root: Sign, sig: &Signature) -> BTreeMap<Path, Sign> {
    let mut out = BTreeMap::new();
    walk_signed(term, root, sig, &mut Vec::new(), &mut |_, p, s| {
        out.insert(p.to_vec(), s);
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeClass {
    DeltaAdjoint,
    Slr,
    Sra,
    Srr,
}

impl NodeClass {
    pub fn is_skeleton(self) -> bool {
        matches!(self, NodeClass::DeltaAdjoint | NodeClass::Slr)
    }

    pub fn is_pia(self) -> bool {
        !self.is_skeleton()
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeClass::DeltaAdjoint => "Δ-adjoint",
            NodeClass::Slr => "SLR",
            NodeClass::Sra => "SRA",
            NodeClass::Srr => "SRR",
        })
    }
}

/// Primary class plus the alternative class available in distributive settings.
fn classes(conn: &Conn, sign: Sign, sig: &Signature) -> (NodeClass, Option<NodeClass>) {
    use NodeClass::*;
    let dist = sig.is_distributive();
    let alt = |c: NodeClass| dist.then_some(c);
    let arity = sig.arity(conn).unwrap_or(1);
    match (conn, sign) {
        (Conn::Meet, Sign::Pos) | (Conn::Join, Sign::Neg) => (Sra, alt(Slr)),
        (Conn::Meet, Sign::Neg) | (Conn::Join, Sign::Pos) => (DeltaAdjoint, alt(Srr)),
        _ => match (sig.side(conn).unwrap_or(Side::F), sign) {
            (Side::Both, _) => (Slr, Some(Sra)),
            (Side::F, Sign::Pos) | (Side::G, Sign::Neg) => (Slr, None),
            (Side::F, Sign::Neg) | (Side::G, Sign::Pos) => {
                if arity >= 2 {
                    (Srr, None)
                } else {
                    (Sra, None)
                }
            }
        },
    }
}

/// Table 1 classification of a signed node (primary reading).
pub fn classify(conn: &Conn, sign: Sign, sig: &Signature) -> NodeClass {
    classes(conn, sign, sig).0
}

pub fn skeleton_capable(conn: &Conn, sign: Sign, sig: &Signature) -> bool {
    let (p, a) = classes(conn, sign, sig);
    p.is_skeleton() || a.is_some_and(NodeClass::is_skeleton)
}

pub fn pia_capable(conn: &Conn, sign: Sign, sig: &Signature) -> bool {
    pia_class(conn, sign, sig).is_some()
}

/// Class of the node when read on the PIA side of a branch.
pub fn pia_class(conn: &Conn, sign: Sign, sig: &Signature) -> Option<NodeClass> {
    let (p, a) = classes(conn, sign, sig);
    if p.is_pia() {
        Some(p)
    } else {
        a.filter(|c| c.is_pia())
    }
}

/// Definite (SLR-only) skeleton node.
pub fn slr_capable(conn: &Conn, sign: Sign, sig: &Signature) -> bool {
    let (p, a) = classes(conn, sign, sig);
    p == NodeClass::Slr || a == Some(NodeClass::Slr)
}

/// Δ-adjoint node (+∨ or −∧).
pub fn is_delta(conn: &Conn, sign: Sign) -> bool {
    matches!((conn, sign), (Conn::Join, Sign::Pos) | (Conn::Meet, Sign::Neg))
}

pub fn all_pia(t: &Term, sign: Sign, sig: &Signature) -> bool {
    match t {
        Term::App(c, args) => {
            pia_capable(c, sign, sig) && {
                let eps = sig.order_type(c).unwrap_or_default();
                args.iter().zip(eps).all(|(a, e)| all_pia(a, sign.under(e), sig))
            }
        }
        _ => true,
    }
}

pub fn all_skeleton(t: &Term, sign: Sign, sig: &Signature) -> bool {
    match t {
        Term::App(c, args) => {
            skeleton_capable(c, sign, sig) && {
                let eps = sig.order_type(c).unwrap_or_default();
                args.iter().zip(eps).all(|(a, e)| all_skeleton(a, sign.under(e), sig))
            }
        }
        _ => true,
    }
}

pub fn all_slr(t: &Term, sign: Sign, sig: &Signature) -> bool {
    match t {
        Term::App(c, args) => {
            slr_capable(c, sign, sig) && {
                let eps = sig.order_type(c).unwrap_or_default();
                args.iter().zip(eps).all(|(a, e)| all_slr(a, sign.under(e), sig))
            }
        }
        _ => true,
    }
}

/// Signed connective nodes from the root down to (excluding) the node at `path`.
pub fn branch_nodes(root: &Term, root_sign: Sign, path: &[usize], sig: &Signature) -> Vec<(Conn, Sign)> {
    let mut out = Vec::new();
    let mut t = root;
    let mut s = root_sign;
    for &i in path {
        if let Term::App(c, args) = t {
            out.push((c.clone(), s));
            let eps = sig.order_type(c).unwrap_or_else(|_| vec![Eps::One; args.len()]);
            s = s.under(eps[i]);
            t = &args[i];
        }
    }
    out
}

/// Lowest split point of a branch (root first): nodes above it Skeleton, nodes
/// below PIA. Returns the index of the first PIA node, or `None` when not good.
pub fn good_split(nodes: &[(Conn, Sign)], sig: &Signature) -> Option<usize> {
    let n = nodes.len();
    // k = number of skeleton nodes at the top; prefer the largest k.
    (0..=n).rev().find(|&k| {
        nodes[..k].iter().all(|(c, s)| skeleton_capable(c, *s, sig))
            && nodes[k..].iter().all(|(c, s)| pia_capable(c, *s, sig))
    })
}

pub fn is_good_branch(ineq: &Ineq, side: IneqSide, path: &[usize], sig: &Signature) -> bool {
    let (root, sign) = match side {
        IneqSide::Lhs => (&ineq.lhs, Sign::Pos),
        IneqSide::Rhs => (&ineq.rhs, Sign::Neg),
    };
    good_split(&branch_nodes(root, sign, path, sig), sig).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    /// Skeleton inequality with X/Y/T placeholder leaves.
    pub skeleton: Ineq,
    pub gamma: BTreeMap<u32, Term>,
    pub delta: BTreeMap<u32, Term>,
    /// Abstracted clopen subterms; T placeholders may appear in the skeleton or inside γ/δ.
    pub clopen_subst: BTreeMap<u32, Term>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Analytic,
    ClopenAnalytic,
}

impl Decomposition {
    pub fn verdict(&self) -> Verdict {
        if self.clopen_subst.is_empty() {
            Verdict::Analytic
        } else {
            Verdict::ClopenAnalytic
        }
    }

    pub fn ph_binding(&self) -> BTreeMap<(PhKind, u32), Term> {
        let mut b = BTreeMap::new();
        for (i, g) in &self.gamma {
            b.insert((PhKind::X, *i), g.clone());
        }
        for (i, d) in &self.delta {
            b.insert((PhKind::Y, *i), d.clone());
        }
        b
    }

    pub fn t_binding(&self) -> BTreeMap<(PhKind, u32), Term> {
        self.clopen_subst.iter().map(|(i, t)| ((PhKind::T, *i), t.clone())).collect()
    }

    /// Re-substitutes every placeholder.
    pub fn substitute(&self) -> Ineq {
        self.skeleton.subst_ph(&self.ph_binding()).subst_ph(&self.t_binding())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisFailure {
    pub side: IneqSide,
    pub path: Path,
    pub node: String,
    pub sign: Sign,
}

impl fmt::Display for AnalysisFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            IneqSide::Lhs => "lhs",
            IneqSide::Rhs => "rhs",
        };
        let path: Vec<String> = self.path.iter().map(usize::to_string).collect();
        write!(f, "bad branch in {side} at node {}{} (path [{}])", self.sign, self.node, path.join(","))
    }
}

struct Analyzer<'a> {
    sig: &'a Signature,
    gamma: BTreeMap<u32, Term>,
    delta: BTreeMap<u32, Term>,
    clopen: BTreeMap<u32, Term>,
    side: IneqSide,
}

impl Analyzer<'_> {
    fn ph(&mut self, t: &Term, sign: Sign) -> Term {
        match sign {
            Sign::Pos => {
                let i = self.gamma.len() as u32 + 1;
                self.gamma.insert(i, t.clone());
                Term::Ph(PhKind::X, i)
            }
            Sign::Neg => {
                let i = self.delta.len() as u32 + 1;
                self.delta.insert(i, t.clone());
                Term::Ph(PhKind::Y, i)
            }
        }
    }

    fn abstract_clopen(&mut self, t: &Term) -> Term {
        let i = self.clopen.len() as u32 + 1;
        self.clopen.insert(i, t.clone());
        Term::Ph(PhKind::T, i)
    }

    /// Abstracts maximal clopen subterms that spoil the PIA reading; fails if a
    /// non-clopen node spoils it.
    fn pia_with_abstraction(&mut self, t: &Term, sign: Sign) -> Option<Term> {
        match t {
            Term::App(c, args) => {
                if all_pia(t, sign, self.sig) {
                    return Some(t.clone());
                }
                if !t.has_modal() && !pia_capable(c, sign, self.sig) {
                    return Some(self.abstract_clopen(t));
                }
                if !pia_capable(c, sign, self.sig) {
                    return None;
                }
                let eps = self.sig.order_type(c).ok()?;
                let mut out = Vec::new();
                for (a, e) in args.iter().zip(eps) {
                    out.push(self.pia_with_abstraction(a, sign.under(e))?);
                }
                Some(Term::App(c.clone(), out))
            }
            _ => Some(t.clone()),
        }
    }

    fn node(&mut self, t: &Term, sign: Sign, path: &mut Path) -> Result<Term, AnalysisFailure> {
        let Term::App(c, args) = t else {
            return Ok(t.clone());
        };
        let primary = classify(c, sign, self.sig);
        if primary.is_pia() && all_pia(t, sign, self.sig) {
            return Ok(self.ph(t, sign));
        }
        if skeleton_capable(c, sign, self.sig) {
            let eps = self.sig.order_type(c).expect("connective in signature");
            let mut out = Vec::new();
            for (i, (a, e)) in args.iter().zip(eps).enumerate() {
                path.push(i);
                out.push(self.node(a, sign.under(e), path)?);
                path.pop();
            }
            return Ok(Term::App(c.clone(), out));
        }
        let saved = (self.clopen.clone(), self.gamma.len(), self.delta.len());
        if let Some(abstracted) = self.pia_with_abstraction(t, sign) {
            return Ok(self.ph(&abstracted, sign));
        }
        self.clopen = saved.0;
        if !t.has_modal() {
            return Ok(self.abstract_clopen(t));
        }
        Err(AnalysisFailure { side: self.side, path: path.clone(), node: c.to_string(), sign })
    }
}

/// Splits an inequality into skeleton and PIA parts, abstracting offending
/// clopen subterms when needed.
pub fn analyze(ineq: &Ineq, sig: &Signature) -> Result<Decomposition, AnalysisFailure> {
    let mut an =
        Analyzer { sig, gamma: BTreeMap::new(), delta: BTreeMap::new(), clopen: BTreeMap::new(), side: IneqSide::Lhs };
    let skeleton = if !ineq.has_modal() {
        let mut side = |t: &Term| if t.is_leaf() { t.clone() } else { an.abstract_clopen(t) };
        let lhs = side(&ineq.lhs);
        let rhs = side(&ineq.rhs);
        Ineq::new(lhs, rhs)
    } else {
        let lhs = an.node(&ineq.lhs, Sign::Pos, &mut Vec::new())?;
        an.side = IneqSide::Rhs;
        let rhs = an.node(&ineq.rhs, Sign::Neg, &mut Vec::new())?;
        Ineq::new(lhs, rhs)
    };
    Ok(Decomposition { skeleton, gamma: an.gamma, delta: an.delta, clopen_subst: an.clopen })
}

/// Order-type and dependency order witnessing inductiveness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InductiveWitness {
    pub epsilon: BTreeMap<String, Eps>,
    /// Strict order as a set of pairs (u, v) meaning u <Ω v, transitively closed.
    pub omega: BTreeSet<(String, String)>,
}

/// A signed tree together with the root sign, for inductiveness checks.
pub struct SignedRoot<'a> {
    pub term: &'a Term,
    pub sign: Sign,
}

/// Searches (ε, Ω) such that every ε-critical branch among `roots` restricted to
/// `vars` is good and every SRR node on it confines the other arguments to
/// non-critical, Ω-smaller variables.
pub fn inductive_witness(roots: &[SignedRoot<'_>], vars: &[String], sig: &Signature) -> Option<InductiveWitness> {
    let n = vars.len();
    if n > 16 {
        return None;
    }
    'eps: for mask in 0..(1u32 << n) {
        // bit set = ∂; enumeration starts from all-1
        let eps: BTreeMap<String, Eps> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), if mask >> (n - 1 - i) & 1 == 1 { Eps::Dual } else { Eps::One }))
            .collect();
        let critical = |t: &Term, s: Sign| -> bool {
            match t {
                Term::Var(v) => match eps.get(v) {
                    Some(Eps::One) => s == Sign::Pos,
                    Some(Eps::Dual) => s == Sign::Neg,
                    None => false,
                },
                _ => false,
            }
        };
        let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
        for r in roots {
            let leaves = r.term.leaves_where(r.sign, sig, &|t| t.as_var().is_some_and(|v| eps.contains_key(v)));
            for (path, s) in leaves {
                let leaf = r.term.at(&path);
                if !critical(leaf, s) {
                    continue;
                }
                let v = leaf.as_var().unwrap().to_string();
                let nodes = branch_nodes(r.term, r.sign, &path, sig);
                let Some(k) = good_split(&nodes, sig) else { continue 'eps };
                for depth in k..nodes.len() {
                    let (c, s_node) = &nodes[depth];
                    if pia_class(c, *s_node, sig) != Some(NodeClass::Srr) {
                        continue;
                    }
                    let node = r.term.at(&path[..depth]);
                    let node_eps = sig.order_type(c).unwrap_or_default();
                    for (j, child) in node.children().iter().enumerate() {
                        if j == path[depth] {
                            continue;
                        }
                        let cs = s_node.under(node_eps[j]);
                        let other = child.leaves_where(cs, sig, &|t| t.as_var().is_some());
                        for (p2, s2) in other {
                            let l2 = child.at(&p2);
                            if critical(l2, s2) {
                                continue 'eps;
                            }
                            let u = l2.as_var().unwrap().to_string();
                            if eps.contains_key(&u) {
                                edges.insert((u, v.clone()));
                            }
                        }
                    }
                }
            }
        }
        if let Some(omega) = strict_closure(&edges) {
            return Some(InductiveWitness { epsilon: eps, omega });
        }
    }
    None
}

fn strict_closure(edges: &BTreeSet<(String, String)>) -> Option<BTreeSet<(String, String)>> {
    let mut closure = edges.clone();
    loop {
        let mut added = Vec::new();
        for (a, b) in &closure {
            for (c, d) in &closure {
                if b == c && !closure.contains(&(a.clone(), d.clone())) {
                    added.push((a.clone(), d.clone()));
                }
            }
        }
        if added.is_empty() {
            break;
        }
        closure.extend(added);
    }
    closure.iter().all(|(a, b)| a != b).then_some(closure)
}

/// Analytic inductive check: the inequality is (clopen-)analytic and admits an
/// inductive witness over its variables.
pub fn is_analytic_inductive(ineq: &Ineq, sig: &Signature) -> Option<InductiveWitness> {
    analyze(ineq, sig).ok()?;
    let vars: Vec<String> = ineq.vars().into_iter().collect();
    let roots = [SignedRoot { term: &ineq.lhs, sign: Sign::Pos }, SignedRoot { term: &ineq.rhs, sign: Sign::Neg }];
    inductive_witness(&roots, &vars, sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::Variety;
    use crate::syntax::parse_mod;

    fn dle() -> Signature {
        Signature::new((1, 1, 1), Variety::DistributiveLattice)
    }

    #[test]
    fn sign_propagation() {
        let sig = dle();
        let t = Term::modal(Modal::Rhd, Term::var("v"));
        let st = sign_tree(&t, Sign::Pos, &sig);
        assert_eq!(st[&vec![]], Sign::Pos);
        assert_eq!(st[&vec![0]], Sign::Neg);
        let t = Term::modal(
            Modal::Lhd,
            Term::meet(Term::modal(Modal::Box, Term::var("x")), Term::modal(Modal::Rhd, Term::var("y"))),
        );
        let st = sign_tree(&t, Sign::Pos, &sig);
        assert_eq!(st[&vec![0]], Sign::Neg);
        assert_eq!(st[&vec![0, 0]], Sign::Neg);
        assert_eq!(st[&vec![0, 0, 0]], Sign::Neg);
        assert_eq!(st[&vec![0, 1]], Sign::Neg);
        assert_eq!(st[&vec![0, 1, 0]], Sign::Pos);
    }

    #[test]
    fn table_one_rows() {
        let sig = Signature::new((1, 1, 1), Variety::Heyting);
        assert_eq!(classify(&Conn::Modal(Modal::Dia, 0), Sign::Pos, &sig), NodeClass::Slr);
        assert_eq!(classify(&Conn::Modal(Modal::Box, 0), Sign::Pos, &sig), NodeClass::Sra);
        assert_eq!(classify(&Conn::clopen("->"), Sign::Pos, &sig), NodeClass::Srr);
        assert_eq!(classify(&Conn::clopen("->"), Sign::Neg, &sig), NodeClass::Slr);
        assert_eq!(classify(&Conn::Join, Sign::Pos, &sig), NodeClass::DeltaAdjoint);
        assert_eq!(classify(&Conn::Meet, Sign::Pos, &sig), NodeClass::Sra);
        assert!(skeleton_capable(&Conn::Meet, Sign::Pos, &sig));
        let lat = Signature::new((1, 1, 1), Variety::Lattice);
        assert!(!skeleton_capable(&Conn::Meet, Sign::Pos, &lat));
        assert!(!pia_capable(&Conn::Join, Sign::Pos, &lat));
    }

    #[test]
    fn dualization_symmetry() {
        for v in Variety::ALL {
            let sig = Signature::new((1, 1, 1), v);
            for c in sig.connectives() {
                let pos = classify(&c, Sign::Pos, &sig);
                let neg = classify(&c, Sign::Neg, &sig);
                match pos {
                    NodeClass::Slr => {
                        let side = sig.side(&c).unwrap();
                        if side != Side::Both {
                            assert!(neg.is_pia(), "{c}");
                        }
                    }
                    NodeClass::DeltaAdjoint => assert_eq!(neg, NodeClass::Sra, "{c}"),
                    NodeClass::Sra | NodeClass::Srr => assert!(neg.is_skeleton(), "{c}"),
                }
            }
        }
    }

    #[test]
    fn running_example_decomposes() {
        let sig = dle();
        let ineq = parse_mod(
            "lhd (box rhd lhd lhd rhd v1 /\\ rhd dia rhd v1) <= box rhd (brhd v1 \\/ box brhd (blhd rhd v2 \\/ dia v2))",
        )
        .unwrap();
        let d = analyze(&ineq, &sig).unwrap();
        assert_eq!(d.verdict(), Verdict::Analytic);
        assert_eq!(d.skeleton, parse_mod("lhd (box rhd lhd ?y1 /\\ rhd dia ?x1) <= box rhd (?x2 \\/ ?x3)").unwrap());
        assert_eq!(d.delta[&1], parse_mod("lhd rhd v1 <= top").unwrap().lhs);
        assert_eq!(d.gamma[&1], parse_mod("rhd v1 <= top").unwrap().lhs);
        assert_eq!(d.gamma[&2], parse_mod("brhd v1 <= top").unwrap().lhs);
        assert_eq!(d.gamma[&3], parse_mod("box brhd (blhd rhd v2 \\/ dia v2) <= top").unwrap().lhs);
        assert_eq!(d.substitute(), ineq);
    }

    #[test]
    fn biheyting_example_is_clopen_analytic() {
        let sig = Signature::new((1, 1, 1), Variety::BiHeyting);
        let ineq = parse_mod("lhd lhd ((v1 -< v2) \\/ rhd (v1 -> v2)) <= box ((v1 -> v2) /\\ box (v1 -< v2))").unwrap();
        let d = analyze(&ineq, &sig).unwrap();
        assert_eq!(d.verdict(), Verdict::ClopenAnalytic);
        assert_eq!(d.clopen_subst[&1], parse_mod("v1 -< v2 <= top").unwrap().lhs);
        assert_eq!(d.clopen_subst[&2], parse_mod("v1 -> v2 <= top").unwrap().lhs);
        assert_eq!(d.delta[&1], parse_mod("lhd (?t1 \\/ rhd ?t2) <= top").unwrap().lhs);
        assert_eq!(d.delta[&2], parse_mod("v1 -< v2 <= top").unwrap().lhs);
        assert_eq!(d.substitute(), ineq);
        let bad = d.substitute();
        assert!(!is_good_branch(&bad, IneqSide::Lhs, &[0, 0, 1, 0, 0], &sig));
    }

    #[test]
    fn diamond_chain_is_analytic() {
        let sig = dle();
        let ineq = parse_mod("dia v <= dia dia v").unwrap();
        let d = analyze(&ineq, &sig).unwrap();
        assert_eq!(d.verdict(), Verdict::Analytic);
        assert_eq!(d.delta[&1], parse_mod("dia dia v <= top").unwrap().lhs);
        assert!(is_good_branch(&ineq, IneqSide::Rhs, &[0, 0], &sig));
    }

    #[test]
    fn clopen_only_inequality() {
        let sig = Signature::new((1, 1, 1), Variety::Heyting);
        let ineq = parse_mod("x /\\ (x -> y) <= y").unwrap();
        let d = analyze(&ineq, &sig).unwrap();
        assert_eq!(d.verdict(), Verdict::ClopenAnalytic);
        assert_eq!(d.skeleton.lhs, Term::Ph(PhKind::T, 1));
        assert_eq!(d.skeleton.rhs, Term::var("y"));
    }

    #[test]
    fn not_analytic_reports_branch() {
        let sig = Signature::new((1, 1, 1), Variety::Lattice);
        let ineq = parse_mod("box dia v <= v").unwrap();
        let err = analyze(&ineq, &sig).unwrap_err();
        assert_eq!(err.side, IneqSide::Lhs);
    }

    #[test]
    fn substitution_examples() {
        let t = parse_mod("box x <= top").unwrap().lhs;
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), Term::meet(Term::var("v"), Term::var("w")));
        assert_eq!(substitute(&t, &b), parse_mod("box (v /\\ w) <= top").unwrap().lhs);
        let t = parse_mod("x \\/ y <= top").unwrap().lhs;
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), Term::Bot);
        assert_eq!(substitute(&t, &b), Term::join(Term::Bot, Term::var("y")));
    }

    #[test]
    fn inductive_heyting_output() {
        let sig = Signature::new((1, 1, 1), Variety::Heyting);
        let ineq = parse_mod("box x /\\ (x -> box y) <= box (x /\\ y)").unwrap();
        assert!(is_analytic_inductive(&ineq, &sig).is_some());
    }
}
