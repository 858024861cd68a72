//! First-order language of spd-algebras: atoms, restricted quantifiers, Kracht
//! formulas with role partitions, and the Kracht / inductive recognizers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use crate::modterm::InductiveWitness;
use crate::modterm::{
    all_skeleton, branch_nodes, inductive_witness, skeleton_capable, Ineq, IneqSide, Path, Sign, SignedRoot, Term,
};
use crate::signature::{Conn, Modal, Side, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Leq,
    Prec(usize),
    NC(usize),
    ND(usize),
    C(usize),
    D(usize),
}

impl Rel {
    pub fn is_negated_normal(self) -> bool {
        !matches!(self, Rel::C(_) | Rel::D(_))
    }

    /// Flips between C and C̸ (resp. D and D̸).
    pub fn negate(self) -> Option<Rel> {
        Some(match self {
            Rel::C(i) => Rel::NC(i),
            Rel::NC(i) => Rel::C(i),
            Rel::D(i) => Rel::ND(i),
            Rel::ND(i) => Rel::D(i),
            _ => return None,
        })
    }

    fn family(self) -> Option<(usize, usize)> {
        match self {
            Rel::Leq => None,
            Rel::Prec(i) => Some((0, i)),
            Rel::NC(i) | Rel::C(i) => Some((1, i)),
            Rel::ND(i) | Rel::D(i) => Some((2, i)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FoAtom {
    pub lhs: Term,
    pub rel: Rel,
    pub rhs: Term,
}

impl FoAtom {
    pub fn new(lhs: Term, rel: Rel, rhs: Term) -> FoAtom {
        FoAtom { lhs, rel, rhs }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.vars();
        v.extend(self.rhs.vars());
        v
    }

    pub fn occurs(&self, x: &str) -> bool {
        self.lhs.occurs(x) || self.rhs.occurs(x)
    }

    pub fn count(&self, x: &str) -> usize {
        self.lhs.count(x) + self.rhs.count(x)
    }

    pub fn rename(&self, map: &BTreeMap<String, String>) -> FoAtom {
        FoAtom::new(self.lhs.rename(map), self.rel, self.rhs.rename(map))
    }

    pub fn subst(&self, b: &BTreeMap<String, Term>) -> FoAtom {
        FoAtom::new(self.lhs.subst_vars(b), self.rel, self.rhs.subst_vars(b))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RhoError {
    #[error("un-negated relation in {0}; contrapose it first")]
    Unnegated(String),
}

/// Canonical inequality representative of a negated-normal atom.
pub fn rho(atom: &FoAtom) -> Result<Ineq, RhoError> {
    let (s, t) = (atom.lhs.clone(), atom.rhs.clone());
    Ok(match atom.rel {
        Rel::Leq => Ineq::new(s, t),
        Rel::Prec(i) => Ineq::new(Term::App(Conn::Modal(Modal::Dia, i), vec![s]), t),
        Rel::NC(i) => Ineq::new(t, Term::App(Conn::Modal(Modal::Rhd, i), vec![s])),
        Rel::ND(i) => Ineq::new(Term::App(Conn::Modal(Modal::Blhd, i), vec![s]), t),
        Rel::C(_) | Rel::D(_) => return Err(RhoError::Unnegated(atom.to_string())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    V,
    A,
    B,
    C,
    D,
}

impl Role {
    pub fn parse(s: &str) -> Option<Role> {
        Some(match s {
            "v" => Role::V,
            "a" => Role::A,
            "b" => Role::B,
            "c" => Role::C,
            "d" => Role::D,
            _ => return None,
        })
    }

    pub fn letter(self) -> char {
        match self {
            Role::V => 'v',
            Role::A => 'a',
            Role::B => 'b',
            Role::C => 'c',
            Role::D => 'd',
        }
    }
}

/// Restrictor shape; `y R x` for the base shapes, `x R y` for the converses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Prec(usize),
    Succ(usize),
    NC(usize),
    NCInv(usize),
    ND(usize),
    NDInv(usize),
    Leq,
    Geq,
    LeqF(Conn),
    GeqG(Conn),
}

impl Shape {
    /// The restricting atom binding `ys` to `x`.
    pub fn atom(&self, ys: &[String], x: &str) -> FoAtom {
        let y = || Term::Var(ys[0].clone());
        let x = Term::Var(x.to_string());
        match self {
            Shape::Prec(i) => FoAtom::new(y(), Rel::Prec(*i), x),
            Shape::Succ(i) => FoAtom::new(x, Rel::Prec(*i), y()),
            Shape::NC(i) => FoAtom::new(y(), Rel::NC(*i), x),
            Shape::NCInv(i) => FoAtom::new(x, Rel::NC(*i), y()),
            Shape::ND(i) => FoAtom::new(y(), Rel::ND(*i), x),
            Shape::NDInv(i) => FoAtom::new(x, Rel::ND(*i), y()),
            Shape::Leq => FoAtom::new(y(), Rel::Leq, x),
            Shape::Geq => FoAtom::new(x, Rel::Leq, y()),
            Shape::LeqF(c) => {
                FoAtom::new(Term::App(c.clone(), ys.iter().map(|v| Term::Var(v.clone())).collect()), Rel::Leq, x)
            }
            Shape::GeqG(c) => {
                FoAtom::new(x, Rel::Leq, Term::App(c.clone(), ys.iter().map(|v| Term::Var(v.clone())).collect()))
            }
        }
    }

    /// Recognizes an atom of exact restricting shape for the single variable `y`.
    pub fn recognize(atom: &FoAtom, y: &str) -> Option<(Shape, String)> {
        let (l, r) = (atom.lhs.as_var()?, atom.rhs.as_var()?);
        if l == r {
            return None;
        }
        let (shape, x) = if l == y {
            (
                match atom.rel {
                    Rel::Prec(i) => Shape::Prec(i),
                    Rel::NC(i) => Shape::NC(i),
                    Rel::ND(i) => Shape::ND(i),
                    Rel::Leq => Shape::Leq,
                    _ => return None,
                },
                r,
            )
        } else if r == y {
            (
                match atom.rel {
                    Rel::Prec(i) => Shape::Succ(i),
                    Rel::NC(i) => Shape::NCInv(i),
                    Rel::ND(i) => Shape::NDInv(i),
                    Rel::Leq => Shape::Geq,
                    _ => return None,
                },
                l,
            )
        } else {
            return None;
        };
        Some((shape, x.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Binder {
    pub name: String,
    pub role: Option<Role>,
}

impl Binder {
    pub fn new(name: &str, role: Option<Role>) -> Binder {
        Binder { name: name.to_string(), role }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Restrictor {
    pub shape: Shape,
    pub var: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Quant {
    pub binders: Vec<Binder>,
    pub restrictor: Option<Restrictor>,
}

impl Quant {
    pub fn names(&self) -> Vec<String> {
        self.binders.iter().map(|b| b.name.clone()).collect()
    }

    pub fn restricting_atom(&self) -> Option<FoAtom> {
        self.restrictor.as_ref().map(|r| r.shape.atom(&self.names(), &r.var))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Fo {
    Atom(FoAtom),
    /// Conjunction; empty means true.
    And(Vec<Fo>),
    Implies(Box<Fo>, Box<Fo>),
    Forall(Quant, Box<Fo>),
    Exists(Quant, Box<Fo>),
}

impl Fo {
    pub fn and(parts: Vec<Fo>) -> Fo {
        if parts.len() == 1 {
            parts.into_iter().next().unwrap()
        } else {
            Fo::And(parts)
        }
    }

    pub fn atoms(atoms: &[FoAtom]) -> Fo {
        Fo::and(atoms.iter().cloned().map(Fo::Atom).collect())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Fo::Atom(a) => a.vars(),
            Fo::And(ps) => ps.iter().flat_map(Fo::free_vars).collect(),
            Fo::Implies(a, b) => a.free_vars().union(&b.free_vars()).cloned().collect(),
            Fo::Forall(q, body) | Fo::Exists(q, body) => {
                let mut fv = body.free_vars();
                for n in q.names() {
                    fv.remove(&n);
                }
                if let Some(r) = &q.restrictor {
                    fv.insert(r.var.clone());
                }
                fv
            }
        }
    }

    /// Universal closure over free variables, sorted.
    pub fn closure(self) -> Fo {
        let fv = self.free_vars();
        if fv.is_empty() {
            self
        } else {
            let q = Quant { binders: fv.iter().map(|v| Binder::new(v, None)).collect(), restrictor: None };
            Fo::Forall(q, Box::new(self))
        }
    }

    pub fn all_atoms(&self) -> Vec<&FoAtom> {
        match self {
            Fo::Atom(a) => vec![a],
            Fo::And(ps) => ps.iter().flat_map(Fo::all_atoms).collect(),
            Fo::Implies(a, b) => {
                let mut v = a.all_atoms();
                v.extend(b.all_atoms());
                v
            }
            Fo::Forall(_, b) | Fo::Exists(_, b) => b.all_atoms(),
        }
    }

    pub fn map_atoms(&self, f: &mut dyn FnMut(&FoAtom) -> FoAtom) -> Fo {
        match self {
            Fo::Atom(a) => Fo::Atom(f(a)),
            Fo::And(ps) => Fo::And(ps.iter().map(|p| p.map_atoms(f)).collect()),
            Fo::Implies(a, b) => Fo::Implies(Box::new(a.map_atoms(f)), Box::new(b.map_atoms(f))),
            Fo::Forall(q, b) => Fo::Forall(q.clone(), Box::new(b.map_atoms(f))),
            Fo::Exists(q, b) => Fo::Exists(q.clone(), Box::new(b.map_atoms(f))),
        }
    }
}

/// Prenex ∀*(η ⇒ ∃*ζ) formula before role assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFo {
    pub universal: Vec<Quant>,
    pub antecedent: Vec<FoAtom>,
    pub existential: Vec<Quant>,
    pub consequent: Vec<FoAtom>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShapeError {
    #[error("not of the form ∀…(η ⇒ ∃…ζ): {0}")]
    Shape(String),
    #[error("un-negated C/D atoms cannot be contraposed: {0}")]
    Contraposition(String),
    #[error("variable {0} bound twice")]
    Rebound(String),
    #[error("free variable {0}")]
    Free(String),
    #[error("modal connective in first-order term {0}")]
    Modal(String),
    #[error("role search over {0} variables exceeds the cap of {1}")]
    TooMany(usize, usize),
}

fn conj_atoms(f: &Fo, out: &mut Vec<FoAtom>) -> Result<(), ShapeError> {
    match f {
        Fo::Atom(a) => out.push(a.clone()),
        Fo::And(ps) => {
            for p in ps {
                conj_atoms(p, out)?;
            }
        }
        other => return Err(ShapeError::Shape(other.to_string())),
    }
    Ok(())
}

impl RawFo {
    pub fn from_fo(f: &Fo) -> Result<RawFo, ShapeError> {
        let mut universal = Vec::new();
        let mut cur = f;
        while let Fo::Forall(q, body) = cur {
            universal.push(q.clone());
            cur = body;
        }
        let (mut antecedent, mut rest) = (Vec::new(), cur);
        if let Fo::Implies(a, b) = cur {
            conj_atoms(a, &mut antecedent)?;
            rest = b;
        }
        let mut existential = Vec::new();
        while let Fo::Exists(q, body) = rest {
            existential.push(q.clone());
            rest = body;
        }
        let mut consequent = Vec::new();
        conj_atoms(rest, &mut consequent)?;
        let raw = RawFo { universal, antecedent, existential, consequent };
        raw.check_binding()?;
        Ok(raw)
    }

    fn all_atoms(&self) -> impl Iterator<Item = &FoAtom> {
        self.antecedent.iter().chain(self.consequent.iter())
    }

    fn check_binding(&self) -> Result<(), ShapeError> {
        let mut bound = BTreeSet::new();
        for q in self.universal.iter().chain(self.existential.iter()) {
            if let Some(r) = &q.restrictor {
                if !bound.contains(&r.var) {
                    return Err(ShapeError::Free(r.var.clone()));
                }
            }
            for n in q.names() {
                if !bound.insert(n.clone()) {
                    return Err(ShapeError::Rebound(n));
                }
            }
        }
        for a in self.all_atoms() {
            if a.lhs.has_modal() || a.rhs.has_modal() {
                return Err(ShapeError::Modal(a.to_string()));
            }
            for v in a.vars() {
                if !bound.contains(&v) {
                    return Err(ShapeError::Free(v));
                }
            }
        }
        Ok(())
    }

    /// Moves un-negated C/D atoms across the implication: applies when the
    /// consequent is a single such atom and exactly one such atom sits in the
    /// antecedent.
    pub fn contrapose(mut self) -> Result<RawFo, ShapeError> {
        let pos_ant: Vec<usize> =
            (0..self.antecedent.len()).filter(|&i| !self.antecedent[i].rel.is_negated_normal()).collect();
        let pos_con = self.consequent.iter().filter(|a| !a.rel.is_negated_normal()).count();
        if pos_ant.is_empty() && pos_con == 0 {
            return Ok(self);
        }
        if pos_con == 1 && self.consequent.len() == 1 && self.existential.is_empty() && pos_ant.len() == 1 {
            let i = pos_ant[0];
            let moved = self.antecedent[i].clone();
            let con = self.consequent[0].clone();
            self.antecedent[i] = FoAtom::new(con.lhs, con.rel.negate().unwrap(), con.rhs);
            self.consequent = vec![FoAtom::new(moved.lhs, moved.rel.negate().unwrap(), moved.rhs)];
            return Ok(self);
        }
        Err(ShapeError::Contraposition(format!(
            "{} un-negated atom(s) in the antecedent, {} in the consequent",
            pos_ant.len(),
            pos_con
        )))
    }

    pub fn binders(&self) -> Vec<(Binder, bool)> {
        let mut out = Vec::new();
        for q in &self.universal {
            out.extend(q.binders.iter().map(|b| (b.clone(), true)));
        }
        for q in &self.existential {
            out.extend(q.binders.iter().map(|b| (b.clone(), false)));
        }
        out
    }

    pub fn fully_annotated(&self) -> bool {
        self.binders().iter().all(|(b, _)| b.role.is_some())
    }

    pub fn to_fo(&self) -> Fo {
        let mut body = Fo::atoms(&self.consequent);
        for q in self.existential.iter().rev() {
            body = Fo::Exists(q.clone(), Box::new(body));
        }
        if !self.antecedent.is_empty() {
            body = Fo::Implies(Box::new(Fo::atoms(&self.antecedent)), Box::new(body));
        }
        for q in self.universal.iter().rev() {
            body = Fo::Forall(q.clone(), Box::new(body));
        }
        body
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KrachtFormula {
    pub v_vars: Vec<String>,
    pub a_vars: Vec<String>,
    pub b_vars: Vec<String>,
    /// Universal restricted quantifiers, outermost first.
    pub c_prefix: Vec<Quant>,
    pub eta: Vec<FoAtom>,
    /// Existential restricted quantifiers, outermost first.
    pub d_prefix: Vec<Quant>,
    pub zeta: Vec<FoAtom>,
}

impl KrachtFormula {
    pub fn c_vars(&self) -> Vec<String> {
        self.c_prefix.iter().flat_map(Quant::names).collect()
    }

    pub fn d_vars(&self) -> Vec<String> {
        self.d_prefix.iter().flat_map(Quant::names).collect()
    }

    pub fn role_of(&self, x: &str) -> Option<Role> {
        let has = |v: &[String]| v.iter().any(|y| y == x);
        if has(&self.v_vars) {
            Some(Role::V)
        } else if has(&self.a_vars) {
            Some(Role::A)
        } else if has(&self.b_vars) {
            Some(Role::B)
        } else if has(&self.c_vars()) {
            Some(Role::C)
        } else if has(&self.d_vars()) {
            Some(Role::D)
        } else {
            None
        }
    }

    pub fn roles(&self) -> BTreeMap<String, Role> {
        let mut m = BTreeMap::new();
        for (vs, r) in [(&self.v_vars, Role::V), (&self.a_vars, Role::A), (&self.b_vars, Role::B)] {
            for v in vs {
                m.insert(v.clone(), r);
            }
        }
        for v in self.c_vars() {
            m.insert(v, Role::C);
        }
        for v in self.d_vars() {
            m.insert(v, Role::D);
        }
        m
    }

    pub fn to_fo(&self) -> Fo {
        let mut body = Fo::atoms(&self.zeta);
        for q in self.d_prefix.iter().rev() {
            body = Fo::Exists(q.clone(), Box::new(body));
        }
        if !self.eta.is_empty() {
            body = Fo::Implies(Box::new(Fo::atoms(&self.eta)), Box::new(body));
        }
        for q in self.c_prefix.iter().rev() {
            body = Fo::Forall(q.clone(), Box::new(body));
        }
        let outer: Vec<Binder> = self
            .v_vars
            .iter()
            .map(|v| Binder::new(v, Some(Role::V)))
            .chain(self.a_vars.iter().map(|v| Binder::new(v, Some(Role::A))))
            .chain(self.b_vars.iter().map(|v| Binder::new(v, Some(Role::B))))
            .collect();
        if !outer.is_empty() {
            body = Fo::Forall(Quant { binders: outer, restrictor: None }, Box::new(body));
        }
        body
    }

    pub fn rename(&self, map: &BTreeMap<String, String>) -> KrachtFormula {
        let rn = |v: &String| map.get(v).cloned().unwrap_or_else(|| v.clone());
        let rq = |q: &Quant| Quant {
            binders: q.binders.iter().map(|b| Binder { name: rn(&b.name), role: b.role }).collect(),
            restrictor: q.restrictor.as_ref().map(|r| Restrictor { shape: r.shape.clone(), var: rn(&r.var) }),
        };
        KrachtFormula {
            v_vars: self.v_vars.iter().map(rn).collect(),
            a_vars: self.a_vars.iter().map(rn).collect(),
            b_vars: self.b_vars.iter().map(rn).collect(),
            c_prefix: self.c_prefix.iter().map(rq).collect(),
            eta: self.eta.iter().map(|a| a.rename(map)).collect(),
            d_prefix: self.d_prefix.iter().map(rq).collect(),
            zeta: self.zeta.iter().map(|a| a.rename(map)).collect(),
        }
    }
}

impl fmt::Display for KrachtFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_fo().fmt(f)
    }
}

/// First violated clause of the Kracht shape, numbered as the definition's items.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("Kracht item {item}: {detail}")]
pub struct KrachtViolation {
    pub item: u8,
    pub detail: String,
}

fn violation<T>(item: u8, detail: String) -> Result<T, KrachtViolation> {
    Err(KrachtViolation { item, detail })
}

/// Signed occurrences of `x` in ρ(atom), lhs signed + and rhs −.
fn atom_occurrences(atom: &FoAtom, x: &str, sig: &Signature) -> Vec<(IneqSide, Path, Sign)> {
    match rho(atom) {
        Ok(i) => i.var_signs(x, sig),
        Err(_) => Vec::new(),
    }
}

fn displayable(ineq: &Ineq, side: IneqSide, path: &[usize], sig: &Signature) -> bool {
    let (root, s) = match side {
        IneqSide::Lhs => (&ineq.lhs, Sign::Pos),
        IneqSide::Rhs => (&ineq.rhs, Sign::Neg),
    };
    branch_nodes(root, s, path, sig).iter().all(|(c, s)| skeleton_capable(c, *s, sig))
}

/// Index of an inequality `x ≤ t` or `t ≤ x` (x absent from t) such that every
/// other occurrence of `x` has the opposite polarity, so that an unrestricted
/// quantifier over `x` can be eliminated by substituting t.
pub fn ackermann_bound(ineqs: &[Ineq], x: &str, sig: &Signature) -> Option<usize> {
    ineqs.iter().enumerate().find_map(|(k, i)| {
        let sign = match (i.lhs.as_var(), i.rhs.as_var()) {
            (Some(l), _) if l == x && !i.rhs.occurs(x) => Sign::Pos,
            (_, Some(r)) if r == x && !i.lhs.occurs(x) => Sign::Neg,
            _ => return None,
        };
        let rest_ok = ineqs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .flat_map(|(_, o)| o.var_signs(x, sig))
            .all(|o| o.2 != sign);
        rest_ok.then_some(k)
    })
}

/// Checks the Kracht shape clause by clause, reporting the first failure.
pub fn check_kracht(k: &KrachtFormula, sig: &Signature) -> Result<(), KrachtViolation> {
    let roles = k.roles();
    let declared: usize = k.v_vars.len() + k.a_vars.len() + k.b_vars.len() + k.c_vars().len() + k.d_vars().len();
    if declared != roles.len() {
        return violation(2, "a variable is declared in more than one role".into());
    }
    // item 1: restrictor shapes
    for q in k.c_prefix.iter().chain(k.d_prefix.iter()) {
        let Some(r) = &q.restrictor else { continue };
        let n = q.binders.len();
        let ok = match &r.shape {
            Shape::LeqF(c) => sig.side(c).is_some_and(|s| s != Side::G) && sig.arity(c).ok() == Some(n),
            Shape::GeqG(c) => sig.side(c).is_some_and(|s| s != Side::F) && sig.arity(c).ok() == Some(n),
            _ => n == 1,
        };
        if !ok {
            return violation(1, format!("restrictor {:?} does not fit {} variable(s)", r.shape, n));
        }
    }
    // item 2: restricting variables are bound before their use
    let mut bound: BTreeSet<String> = k.v_vars.iter().chain(&k.a_vars).chain(&k.b_vars).cloned().collect();
    for (prefix, role) in [(&k.c_prefix, Role::C), (&k.d_prefix, Role::D)] {
        for q in prefix.iter() {
            if let Some(r) = &q.restrictor {
                if !bound.contains(&r.var) {
                    return violation(2, format!("restricting variable {} is not bound before", r.var));
                }
                if roles.get(&r.var).is_some_and(|x| matches!(x, Role::C | Role::D) && *x != role) {
                    return violation(2, format!("restricting variable {} has the wrong role", r.var));
                }
            }
            bound.extend(q.names());
        }
    }
    // item 3: atoms
    for a in k.eta.iter().chain(&k.zeta) {
        if !a.rel.is_negated_normal() {
            return violation(3, format!("un-negated atom {a}"));
        }
        if let Some((fam, i)) = a.rel.family() {
            if sig.check_index(fam, i).is_err() {
                return violation(3, format!("relation index out of range in {a}"));
            }
        }
        if a.lhs.has_modal() || a.rhs.has_modal() {
            return violation(3, format!("modal connective in {a}"));
        }
        for v in a.vars() {
            if !roles.contains_key(&v) {
                return violation(3, format!("undeclared variable {v} in {a}"));
            }
        }
    }
    let restrictors_c: Vec<FoAtom> = k.c_prefix.iter().filter_map(Quant::restricting_atom).collect();
    let restrictors_d: Vec<FoAtom> = k.d_prefix.iter().filter_map(Quant::restricting_atom).collect();
    let everything: Vec<&FoAtom> = k.eta.iter().chain(&k.zeta).chain(&restrictors_c).chain(&restrictors_d).collect();
    // item 4: a positive, b negative everywhere
    for (vars, want, name) in [(&k.a_vars, Sign::Pos, "a"), (&k.b_vars, Sign::Neg, "b")] {
        for x in vars {
            for a in &everything {
                if let Some(o) = atom_occurrences(a, x, sig).iter().find(|o| o.2 != want) {
                    return violation(4, format!("{name}-variable {x} occurs with sign {} in {a}", o.2));
                }
            }
        }
    }
    // item 5: c uniform in η and absent from ζ; d uniform in ζ and absent from η
    let uniform = |x: &str, atoms: &[FoAtom]| -> Result<Option<Sign>, ()> {
        let signs: BTreeSet<Sign> = atoms.iter().flat_map(|a| atom_occurrences(a, x, sig)).map(|o| o.2).collect();
        match signs.len() {
            0 => Ok(None),
            1 => Ok(signs.into_iter().next()),
            _ => Err(()),
        }
    };
    let unrestricted: BTreeSet<String> =
        k.c_prefix.iter().chain(&k.d_prefix).filter(|q| q.restrictor.is_none()).flat_map(Quant::names).collect();
    // restricting occurrences count as other occurrences of an Ackermann-bounded variable
    let bounded = |x: &str, atoms: &[FoAtom]| {
        unrestricted.contains(x) && {
            let rhos: Vec<Ineq> =
                atoms.iter().chain(&restrictors_c).chain(&restrictors_d).filter_map(|a| rho(a).ok()).collect();
            ackermann_bound(&rhos, x, sig).is_some()
        }
    };
    let mut c_sign = BTreeMap::new();
    for x in k.c_vars() {
        match uniform(&x, &k.eta) {
            _ if bounded(&x, &k.eta) => {
                c_sign.insert(x.clone(), None);
            }
            Ok(s) => {
                c_sign.insert(x.clone(), s);
            }
            Err(()) => return violation(5, format!("c-variable {x} is not uniform in η")),
        }
        if k.zeta.iter().any(|a| a.occurs(&x)) {
            return violation(5, format!("c-variable {x} occurs in ζ"));
        }
    }
    let mut d_sign = BTreeMap::new();
    for x in k.d_vars() {
        match uniform(&x, &k.zeta) {
            _ if bounded(&x, &k.zeta) => {
                d_sign.insert(x.clone(), None);
            }
            Ok(s) => {
                d_sign.insert(x.clone(), s);
            }
            Err(()) => return violation(5, format!("d-variable {x} is not uniform in ζ")),
        }
        if k.eta.iter().any(|a| a.occurs(&x)) {
            return violation(5, format!("d-variable {x} occurs in η"));
        }
    }
    // item 6: restricting occurrences of c/d agree with each other and with their η/ζ polarity
    for (prefix, signs) in [(&k.c_prefix, &mut c_sign), (&k.d_prefix, &mut d_sign)] {
        for q in prefix.iter() {
            let (Some(r), Some(atom)) = (&q.restrictor, q.restricting_atom()) else { continue };
            let Some(want) = signs.get_mut(&r.var) else { continue };
            for o in atom_occurrences(&atom, &r.var, sig) {
                match want {
                    Some(w) if *w != o.2 => {
                        return violation(
                            6,
                            format!("restricting occurrence of {} in {atom} disagrees with its polarity", r.var),
                        );
                    }
                    Some(_) => {}
                    None => *want = Some(o.2),
                }
            }
        }
    }
    // item 7: displayability
    for a in k.eta.iter().chain(&k.zeta) {
        let i = rho(a).expect("negated normal");
        for x in a.vars() {
            if roles.get(&x) == Some(&Role::V) {
                continue;
            }
            for (side, path, _) in i.var_signs(&x, sig) {
                if !displayable(&i, side, &path, sig) {
                    return violation(7, format!("occurrence of {x} in {a} is not displayable"));
                }
            }
        }
    }
    // item 8: η atoms carry at least one a/b/c occurrence and at most one a/b occurrence
    for a in &k.eta {
        let count = |rs: &[Role]| -> usize {
            a.vars().iter().filter(|x| roles.get(*x).is_some_and(|r| rs.contains(r))).map(|x| a.count(x)).sum()
        };
        if count(&[Role::A, Role::B, Role::C]) == 0 {
            return violation(8, format!("η atom {a} has no a/b/c variable"));
        }
        if count(&[Role::A, Role::B]) > 1 {
            return violation(8, format!("η atom {a} has more than one a/b occurrence"));
        }
    }
    // item 9: each d at most once per ζ atom; repeated a/b meet at a Δ-adjoint
    for a in &k.zeta {
        let i = rho(a).expect("negated normal");
        for x in a.vars() {
            match roles.get(&x) {
                Some(Role::D) if a.count(&x) > 1 => {
                    return violation(9, format!("d-variable {x} occurs twice in {a}"));
                }
                Some(Role::A | Role::B) if a.count(&x) > 1 => {
                    let occ = i.var_signs(&x, sig);
                    for w in occ.windows(2) {
                        if w[0].0 != w[1].0 {
                            return violation(9, format!("{x} occurs on both sides of {a}"));
                        }
                        let common: Path =
                            w[0].1.iter().zip(&w[1].1).take_while(|(p, q)| p == q).map(|(p, _)| *p).collect();
                        let root = i.side(w[0].0);
                        let sign = if w[0].0 == IneqSide::Lhs { Sign::Pos } else { Sign::Neg };
                        let mut path = common.clone();
                        path.push(0);
                        let nodes = branch_nodes(root, sign, &path, sig);
                        let (c, s) = nodes.last().expect("common ancestor exists");
                        if !crate::modterm::is_delta(c, *s) {
                            return violation(9, format!("repeated {x} in {a} meets at {s}{c}"));
                        }
                    }
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Inductive-Kracht check: ζ is all Skeleton under ρ and the η atoms admit an
/// (ε, Ω) witness over the v-variables in their dual signed trees.
pub fn check_inductive(k: &KrachtFormula, sig: &Signature) -> Option<InductiveWitness> {
    for a in &k.zeta {
        let i = rho(a).ok()?;
        if !(all_skeleton(&i.lhs, Sign::Pos, sig) && all_skeleton(&i.rhs, Sign::Neg, sig)) {
            return None;
        }
    }
    // v-variables reach η through the restrictors of c-variables; substitute
    // each singly restricted c-variable by its bound so they are checked too
    let mut rhos: Vec<Ineq> = k.eta.iter().map(rho).collect::<Result<_, _>>().ok()?;
    for q in k.c_prefix.iter().rev() {
        let Some(r) = q.restricting_atom() else { continue };
        let r = crate::kracht::translate(&r, &q.names().into_iter().collect()).ok()?;
        let bound = match (&q.binders[..], r.lhs.as_var(), r.rhs.as_var()) {
            ([x], Some(l), _) if l == x.name && !r.rhs.occurs(l) => Some((l.to_string(), r.rhs.clone())),
            ([x], _, Some(v)) if v == x.name && !r.lhs.occurs(v) => Some((v.to_string(), r.lhs.clone())),
            _ => None,
        };
        match bound {
            Some((x, t)) => {
                let b = BTreeMap::from([(x, t)]);
                rhos = rhos.iter().map(|i| i.subst_vars(&b)).collect();
            }
            None => rhos.push(r),
        }
    }
    let roots: Vec<SignedRoot<'_>> = rhos
        .iter()
        .flat_map(|i| [SignedRoot { term: &i.lhs, sign: Sign::Neg }, SignedRoot { term: &i.rhs, sign: Sign::Pos }])
        .collect();
    inductive_witness(&roots, &k.v_vars, sig)
}

/// Builds a Kracht formula from a raw formula under a role assignment,
/// optionally absorbing exact restricting atoms into restricted quantifiers.
pub fn assemble(raw: &RawFo, roles: &BTreeMap<String, Role>, absorb: bool) -> Option<KrachtFormula> {
    let mut k = KrachtFormula {
        v_vars: vec![],
        a_vars: vec![],
        b_vars: vec![],
        c_prefix: vec![],
        eta: raw.antecedent.clone(),
        d_prefix: vec![],
        zeta: raw.consequent.clone(),
    };
    let mut bound: BTreeSet<String> = BTreeSet::new();
    for q in &raw.universal {
        for b in &q.binders {
            match roles.get(&b.name)? {
                Role::V => k.v_vars.push(b.name.clone()),
                Role::A => k.a_vars.push(b.name.clone()),
                Role::B => k.b_vars.push(b.name.clone()),
                _ => {}
            }
        }
    }
    bound.extend(k.v_vars.iter().chain(&k.a_vars).chain(&k.b_vars).cloned());
    let tag = |q: &Quant, role: Role| Quant {
        binders: q.binders.iter().map(|b| Binder::new(&b.name, Some(role))).collect(),
        restrictor: q.restrictor.clone(),
    };
    for (quants, role, atoms) in [(&raw.universal, Role::C, 0), (&raw.existential, Role::D, 1)] {
        for q in quants.iter() {
            let own: Vec<&Binder> = q.binders.iter().filter(|b| roles.get(&b.name) == Some(&role)).collect();
            if q.restrictor.is_some() {
                if own.len() != q.binders.len() {
                    return None;
                }
                let out = tag(q, role);
                bound.extend(out.names());
                if role == Role::C {
                    k.c_prefix.push(out);
                } else {
                    k.d_prefix.push(out);
                }
                continue;
            }
            // binders of one block commute: restrict those linked to bound variables first
            let mut own: Vec<&Binder> = own;
            while !own.is_empty() {
                let pool = if atoms == 0 { &mut k.eta } else { &mut k.zeta };
                let find = |name: &str, pool: &[FoAtom]| {
                    pool.iter()
                        .enumerate()
                        .find_map(|(i, a)| Shape::recognize(a, name).filter(|(_, x)| bound.contains(x)).map(|s| (i, s)))
                };
                // then those bounded by a term over bound variables (`x ≤ t`, `t ≤ x`)
                let term_bounded = |name: &str, pool: &[FoAtom]| {
                    pool.iter().any(|a| {
                        let other = match (a.rel, a.lhs.as_var(), a.rhs.as_var()) {
                            (Rel::Leq, Some(l), _) if l == name => &a.rhs,
                            (Rel::Leq, _, Some(r)) if r == name => &a.lhs,
                            _ => return false,
                        };
                        other.vars().iter().all(|v| bound.contains(v))
                    })
                };
                let pick = if absorb {
                    own.iter()
                        .position(|b| find(&b.name, pool).is_some())
                        .or_else(|| own.iter().position(|b| term_bounded(&b.name, pool)))
                        .unwrap_or(0)
                } else {
                    0
                };
                let b = own.remove(pick);
                let found = if absorb { find(&b.name, pool) } else { None };
                let restrictor = found.map(|(i, (shape, var))| {
                    pool.remove(i);
                    Restrictor { shape, var }
                });
                let out = Quant { binders: vec![Binder::new(&b.name, Some(role))], restrictor };
                bound.insert(b.name.clone());
                if role == Role::C {
                    k.c_prefix.push(out);
                } else {
                    k.d_prefix.push(out);
                }
            }
        }
    }
    Some(k)
}

pub const DEFAULT_ROLE_CAP: usize = 8;

/// Role partitions to try, in deterministic order: annotated roles are fixed,
/// universal variables range over v, a, b, c and existential ones are d.
pub fn role_candidates(raw: &RawFo, cap: usize) -> Result<Vec<BTreeMap<String, Role>>, ShapeError> {
    let binders = raw.binders();
    let free: Vec<&(Binder, bool)> = binders.iter().filter(|(b, univ)| b.role.is_none() && *univ).collect();
    if free.len() > cap {
        return Err(ShapeError::TooMany(free.len(), cap));
    }
    let base: BTreeMap<String, Role> = binders
        .iter()
        .filter_map(|(b, univ)| match (b.role, univ) {
            (Some(r), _) => Some((b.name.clone(), r)),
            (None, false) => Some((b.name.clone(), Role::D)),
            _ => None,
        })
        .collect();
    let options = [Role::V, Role::A, Role::B, Role::C];
    let total = 4usize.pow(free.len() as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut m = base.clone();
        let mut c = code;
        for (b, _) in free.iter().rev() {
            m.insert(b.name.clone(), options[c % 4]);
            c /= 4;
        }
        out.push(m);
    }
    Ok(out)
}

/// Every role partition (with or without restrictor absorption) passing the
/// Kracht check, deduplicated, in search order.
pub fn infer_roles(raw: &RawFo, sig: &Signature, cap: usize) -> Result<Vec<KrachtFormula>, ShapeError> {
    let raw = raw.clone().contrapose()?;
    let mut out: Vec<KrachtFormula> = Vec::new();
    for roles in role_candidates(&raw, cap)? {
        for absorb in [true, false] {
            if let Some(k) = assemble(&raw, &roles, absorb) {
                if check_kracht(&k, sig).is_ok() && !out.contains(&k) {
                    out.push(k);
                }
            }
        }
    }
    Ok(out)
}
