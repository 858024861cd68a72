//! Finite spd-algebras: construction, axiom validation, slanted operators,
//! validity of inequalities and first-order formulas, and the
//! dual spd-space.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::foterm::{Fo, FoAtom, Rel};
use crate::modterm::{Ineq, Term};
use crate::signature::{Conn, Modal, Signature, Variety};
use crate::syntax::ModelFile;

mod factor;

pub type Mat = Vec<Vec<bool>>;

fn mat(n: usize) -> Mat {
    vec![vec![false; n]; n]
}

/// Bounded lattice given by its order, with ⊥ and ⊤ located.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    pub leq: Mat,
    pub meet: Vec<Vec<usize>>,
    pub join: Vec<Vec<usize>>,
    pub bot: usize,
    pub top: usize,
}

impl Lattice {
    /// Builds the lattice operations of a finite order; `None` when some pair lacks a glb or lub.
    pub fn from_order(leq: Mat) -> Option<Lattice> {
        let n = leq.len();
        let bound = |a: usize, b: usize, up: bool| -> Option<usize> {
            let cands: Vec<usize> =
                (0..n).filter(|&c| if up { leq[a][c] && leq[b][c] } else { leq[c][a] && leq[c][b] }).collect();
            cands.iter().copied().find(|&c| cands.iter().all(|&d| if up { leq[c][d] } else { leq[d][c] }))
        };
        if n == 0 {
            return None;
        }
        let mut meet = vec![vec![0; n]; n];
        let mut join = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                meet[a][b] = bound(a, b, false)?;
                join[a][b] = bound(a, b, true)?;
            }
        }
        let bot = (0..n).find(|&a| (0..n).all(|b| leq[a][b]))?;
        let top = (0..n).find(|&a| (0..n).all(|b| leq[b][a]))?;
        Some(Lattice { leq, meet, join, bot, top })
    }

    pub fn size(&self) -> usize {
        self.leq.len()
    }

    pub fn meet_all(&self, xs: impl IntoIterator<Item = usize>) -> usize {
        xs.into_iter().fold(self.top, |a, b| self.meet[a][b])
    }

    pub fn join_all(&self, xs: impl IntoIterator<Item = usize>) -> usize {
        xs.into_iter().fold(self.bot, |a, b| self.join[a][b])
    }

    pub fn is_distributive(&self) -> bool {
        let n = self.size();
        (0..n).all(|a| {
            (0..n).all(|b| (0..n).all(|c| self.meet[a][self.join[b][c]] == self.join[self.meet[a][b]][self.meet[a][c]]))
        })
    }

    pub fn implication(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        (0..n)
            .map(|a| (0..n).map(|b| self.join_all((0..n).filter(|&c| self.leq[self.meet[c][a]][b]))).collect())
            .collect()
    }

    pub fn coimplication(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        (0..n)
            .map(|a| (0..n).map(|b| self.meet_all((0..n).filter(|&c| self.leq[a][self.join[b][c]]))).collect())
            .collect()
    }

    pub fn join_irreducibles(&self) -> Vec<usize> {
        let n = self.size();
        (0..n)
            .filter(|&j| j != self.bot && !(0..n).any(|a| (0..n).any(|b| a != j && b != j && self.join[a][b] == j)))
            .collect()
    }

    pub fn join_primes(&self) -> Vec<usize> {
        let n = self.size();
        (0..n)
            .filter(|&p| {
                p != self.bot
                    && (0..n).all(|a| (0..n).all(|b| !self.leq[p][self.join[a][b]] || self.leq[p][a] || self.leq[p][b]))
            })
            .collect()
    }

    pub fn meet_primes(&self) -> Vec<usize> {
        let n = self.size();
        (0..n)
            .filter(|&m| {
                m != self.top
                    && (0..n).all(|a| (0..n).all(|b| !self.leq[self.meet[a][b]][m] || self.leq[a][m] || self.leq[b][m]))
            })
            .collect()
    }

    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.size();
        let lt = |a: usize, b: usize| a != b && self.leq[a][b];
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if lt(a, b) && !(0..n).any(|c| lt(a, c) && lt(c, b)) {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// Table of a clopen operation, indexed in mixed radix by its arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Op {
    pub arity: usize,
    pub table: Vec<usize>,
}

impl Op {
    pub fn unary(&self) -> &[usize] {
        &self.table
    }

    pub fn binary(t: &[Vec<usize>]) -> Op {
        Op { arity: 2, table: t.iter().flatten().copied().collect() }
    }

    pub fn apply(&self, n: usize, args: &[usize]) -> usize {
        self.table[args.iter().fold(0, |acc, &a| acc * n + a)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Rels {
    pub prec: Vec<Mat>,
    pub c: Vec<Mat>,
    pub d: Vec<Mat>,
}

impl Rels {
    fn family(&self, fam: usize) -> &Vec<Mat> {
        match fam {
            0 => &self.prec,
            1 => &self.c,
            _ => &self.d,
        }
    }
}

/// Operator tables ◇, ■, ▷, ▶, ◁, ◀ per relation index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Slanted {
    pub tables: BTreeMap<(Modal, usize), Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSpdAlgebra {
    pub names: Vec<String>,
    pub lattice: Lattice,
    pub variety: Variety,
    pub ops: BTreeMap<String, Op>,
    pub rels: Rels,
    pub slanted: Slanted,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("order is not a bounded lattice")]
    NotLattice,
    #[error("hasse diagram has a cycle")]
    Cycle,
    #[error("bad relation key {0}")]
    BadRelation(String),
    #[error("operation {0} is required by the variety and missing")]
    MissingOp(String),
    #[error("operation {0} is not total")]
    PartialOp(String),
}

pub fn slanted_ops(l: &Lattice, rels: &Rels) -> Slanted {
    let n = l.size();
    let mut tables = BTreeMap::new();
    for (i, p) in rels.prec.iter().enumerate() {
        tables.insert((Modal::Dia, i), (0..n).map(|a| l.meet_all((0..n).filter(|&b| p[a][b]))).collect());
        tables.insert((Modal::Box, i), (0..n).map(|a| l.join_all((0..n).filter(|&b| p[b][a]))).collect());
    }
    for (i, c) in rels.c.iter().enumerate() {
        tables.insert((Modal::Rhd, i), (0..n).map(|a| l.join_all((0..n).filter(|&b| !c[a][b]))).collect());
        tables.insert((Modal::Brhd, i), (0..n).map(|b| l.join_all((0..n).filter(|&a| !c[a][b]))).collect());
    }
    for (i, d) in rels.d.iter().enumerate() {
        tables.insert((Modal::Lhd, i), (0..n).map(|b| l.meet_all((0..n).filter(|&a| !d[a][b]))).collect());
        tables.insert((Modal::Blhd, i), (0..n).map(|a| l.meet_all((0..n).filter(|&b| !d[a][b]))).collect());
    }
    Slanted { tables }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("no table for connective {0}")]
    NoTable(String),
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("placeholder in evaluated term")]
    Placeholder,
}

pub type Valuation = BTreeMap<String, usize>;

/// Which axiom failed, and where.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    Lattice,
    Distributive,
    Heyting,
    CoHeyting,
    Negation,
    S1,
    S2,
    S3,
    S4,
    C1,
    C2,
    C3,
    D1,
    D2,
    D3,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::Lattice => "lattice",
            Axiom::Distributive => "distributivity",
            Axiom::Heyting => "Heyting residuation",
            Axiom::CoHeyting => "co-Heyting residuation",
            Axiom::Negation => "negation",
            Axiom::S1 => "S1",
            Axiom::S2 => "S2",
            Axiom::S3 => "S3",
            Axiom::S4 => "S4",
            Axiom::C1 => "C1",
            Axiom::C2 => "C2",
            Axiom::C3 => "C3",
            Axiom::D1 => "D1",
            Axiom::D2 => "D2",
            Axiom::D3 => "D3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("({axiom}) fails for relation {index} at {witness:?}")]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub index: usize,
    pub witness: Vec<String>,
}

impl FiniteSpdAlgebra {
    /// Assembles a model; derived operations (→, -<, Heyting ¬) are filled in
    /// from the lattice when the variety calls for them and `ops` lacks them.
    pub fn new(
        names: Vec<String>,
        lattice: Lattice,
        variety: Variety,
        mut ops: BTreeMap<String, Op>,
        rels: Rels,
    ) -> Self {
        let n = lattice.size();
        if variety.has_implication() {
            let imp = lattice.implication();
            ops.entry("~".into())
                .or_insert_with(|| Op { arity: 1, table: (0..n).map(|a| imp[a][lattice.bot]).collect() });
            ops.entry("->".into()).or_insert_with(|| Op::binary(&imp));
        }
        if variety.has_coimplication() {
            ops.entry("-<".into()).or_insert_with(|| Op::binary(&lattice.coimplication()));
        }
        if variety == Variety::Boolean && !ops.contains_key("~") {
            let comp = (0..n)
                .map(|a| {
                    (0..n)
                        .find(|&b| lattice.meet[a][b] == lattice.bot && lattice.join[a][b] == lattice.top)
                        .unwrap_or(a)
                })
                .collect();
            ops.insert("~".into(), Op { arity: 1, table: comp });
        }
        let slanted = slanted_ops(&lattice, &rels);
        FiniteSpdAlgebra { names, lattice, variety, ops, rels, slanted }
    }

    pub fn from_file(file: &ModelFile, sig: &Signature) -> Result<FiniteSpdAlgebra, ModelError> {
        let names = file.elements.clone();
        let n = names.len();
        let idx = |s: &str| names.iter().position(|x| x == s).ok_or_else(|| ModelError::UnknownElement(s.into()));
        let mut leq = mat(n);
        for (a, row) in leq.iter_mut().enumerate() {
            row[a] = true;
        }
        for [a, b] in &file.hasse {
            leq[idx(a)?][idx(b)?] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if leq[i][k] && leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
        if (0..n).any(|a| (0..n).any(|b| a != b && leq[a][b] && leq[b][a])) {
            return Err(ModelError::Cycle);
        }
        let lattice = Lattice::from_order(leq).ok_or(ModelError::NotLattice)?;
        let mut ops = BTreeMap::new();
        for (name, map) in &file.ops {
            let mut table = vec![usize::MAX; n];
            for (a, b) in map {
                table[idx(a)?] = idx(b)?;
            }
            if table.contains(&usize::MAX) {
                return Err(ModelError::PartialOp(name.clone()));
            }
            ops.insert(name.clone(), Op { arity: 1, table });
        }
        if sig.variety == Variety::DeMorgan && !ops.contains_key("~") {
            return Err(ModelError::MissingOp("~".into()));
        }
        let (ns, nc, nd) = sig.spd_type;
        let mut rels = Rels { prec: vec![lattice.leq.clone(); ns], c: vec![mat(n); nc], d: vec![mat(n); nd] };
        for (key, pairs) in &file.rels {
            let (fam, rest) = if let Some(r) = key.strip_prefix("prec") {
                (0, r)
            } else if let Some(r) = key.strip_prefix('C') {
                (1, r)
            } else if let Some(r) = key.strip_prefix('D') {
                (2, r)
            } else {
                return Err(ModelError::BadRelation(key.clone()));
            };
            let i: usize =
                if rest.is_empty() { 0 } else { rest.parse().map_err(|_| ModelError::BadRelation(key.clone()))? };
            let family = match fam {
                0 => &mut rels.prec,
                1 => &mut rels.c,
                _ => &mut rels.d,
            };
            let m = family.get_mut(i).ok_or_else(|| ModelError::BadRelation(key.clone()))?;
            *m = mat(n);
            for [a, b] in pairs {
                m[idx(a)?][idx(b)?] = true;
            }
        }
        Ok(FiniteSpdAlgebra::new(names, lattice, sig.variety, ops, rels))
    }

    pub fn size(&self) -> usize {
        self.lattice.size()
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.lattice.leq[a][b]
    }

    pub fn covers(&self) -> Vec<(usize, usize)> {
        self.lattice.covers()
    }

    pub fn named_rels(&self) -> Vec<(String, &Mat)> {
        let mut out = Vec::new();
        for (prefix, fam) in [("prec", &self.rels.prec), ("C", &self.rels.c), ("D", &self.rels.d)] {
            for (i, m) in fam.iter().enumerate() {
                out.push((format!("{prefix}{i}"), m));
            }
        }
        out
    }

    pub fn spd_type(&self) -> (usize, usize, usize) {
        (self.rels.prec.len(), self.rels.c.len(), self.rels.d.len())
    }

    pub fn modal(&self, m: Modal, i: usize, a: usize) -> Option<usize> {
        self.slanted.tables.get(&(m, i)).map(|t| t[a])
    }

    pub fn eval(&self, t: &Term, val: &Valuation) -> Result<usize, EvalError> {
        let l = &self.lattice;
        Ok(match t {
            Term::Var(x) => *val.get(x).ok_or_else(|| EvalError::Unbound(x.clone()))?,
            Term::Top => l.top,
            Term::Bot => l.bot,
            Term::Ph(..) => return Err(EvalError::Placeholder),
            Term::App(c, args) => {
                let vs: Vec<usize> = args.iter().map(|a| self.eval(a, val)).collect::<Result<_, _>>()?;
                match c {
                    Conn::Meet => l.meet[vs[0]][vs[1]],
                    Conn::Join => l.join[vs[0]][vs[1]],
                    Conn::Modal(m, i) => self.modal(*m, *i, vs[0]).ok_or_else(|| EvalError::NoTable(c.to_string()))?,
                    Conn::Clopen(name) => {
                        let op = self.ops.get(&**name).ok_or_else(|| EvalError::NoTable(name.to_string()))?;
                        op.apply(self.size(), &vs)
                    }
                }
            }
        })
    }

    /// A valuation refuting the inequality, if any.
    pub fn counter_mod(&self, ineq: &Ineq) -> Result<Option<Valuation>, EvalError> {
        let vars: Vec<String> = ineq.vars().into_iter().collect();
        let n = self.size();
        let mut val: Valuation = vars.iter().map(|v| (v.clone(), 0)).collect();
        let total = n.checked_pow(vars.len() as u32).unwrap_or(usize::MAX);
        for code in 0..total {
            let mut c = code;
            for v in &vars {
                val.insert(v.clone(), c % n);
                c /= n;
            }
            if !self.leq(self.eval(&ineq.lhs, &val)?, self.eval(&ineq.rhs, &val)?) {
                return Ok(Some(val));
            }
        }
        Ok(None)
    }

    pub fn valid_mod(&self, ineq: &Ineq) -> Result<bool, EvalError> {
        Ok(self.counter_mod(ineq)?.is_none())
    }

    pub fn atom(&self, a: &FoAtom, val: &Valuation) -> Result<bool, EvalError> {
        let (s, t) = (self.eval(&a.lhs, val)?, self.eval(&a.rhs, val)?);
        let get = |fam: usize, i: usize| {
            self.rels.family(fam).get(i).map(|m| m[s][t]).ok_or_else(|| EvalError::NoTable(format!("{:?}", a.rel)))
        };
        Ok(match a.rel {
            Rel::Leq => self.leq(s, t),
            Rel::Prec(i) => get(0, i)?,
            Rel::C(i) => get(1, i)?,
            Rel::NC(i) => !get(1, i)?,
            Rel::D(i) => get(2, i)?,
            Rel::ND(i) => !get(2, i)?,
        })
    }

    pub fn holds(&self, f: &Fo, val: &mut Valuation) -> Result<bool, EvalError> {
        match f {
            Fo::Atom(a) => self.atom(a, val),
            Fo::And(ps) => {
                for p in ps {
                    if !self.holds(p, val)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Fo::Implies(a, b) => Ok(!self.holds(a, val)? || self.holds(b, val)?),
            Fo::Forall(..) => {
                let (vars, mut guards, body) = quant_block(f, true);
                let body = match body {
                    Fo::Implies(a, b) => match conj_atoms(a) {
                        Some(atoms) => {
                            guards.extend(atoms);
                            &**b
                        }
                        None => body,
                    },
                    _ => body,
                };
                // Variables absent from the body only need a witness for the guards.
                let (outer, inner, g_outer, g_inner) = split_block(&vars, guards, body);
                let mut found = false;
                self.search(&outer, &g_outer, val, &mut |h, v| {
                    if h.holds(body, v)? || !h.satisfiable(&inner, &g_inner, v)? {
                        return Ok(false);
                    }
                    found = true;
                    Ok(true)
                })?;
                Ok(!found)
            }
            Fo::Exists(..) => {
                let (vars, mut guards, body) = quant_block(f, false);
                let rest = match conj_atoms(body) {
                    Some(atoms) => {
                        guards.extend(atoms);
                        Fo::And(vec![])
                    }
                    None => body.clone(),
                };
                let (outer, inner, g_outer, g_inner) = split_block(&vars, guards, &rest);
                let mut found = false;
                self.search(&outer, &g_outer, val, &mut |h, v| {
                    if !h.holds(&rest, v)? || !h.satisfiable(&inner, &g_inner, v)? {
                        return Ok(false);
                    }
                    found = true;
                    Ok(true)
                })?;
                Ok(found)
            }
        }
    }

    /// Whether the guards have a common solution for `vars`, solving each
    /// connected component separately.
    fn satisfiable(&self, vars: &[String], guards: &[FoAtom], val: &mut Valuation) -> Result<bool, EvalError> {
        let mut comp: Vec<usize> = (0..vars.len()).collect();
        fn root(comp: &mut [usize], i: usize) -> usize {
            let mut r = i;
            while comp[r] != r {
                r = comp[r];
            }
            comp[i] = r;
            r
        }
        let idx = |x: &String| vars.iter().position(|v| v == x);
        for g in guards {
            let ids: Vec<usize> = g.vars().iter().filter_map(idx).collect();
            for w in ids.windows(2) {
                let (a, b) = (root(&mut comp, w[0]), root(&mut comp, w[1]));
                comp[a] = b;
            }
        }
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for i in 0..vars.len() {
            let r = root(&mut comp, i);
            groups.entry(r).or_default().push(vars[i].clone());
        }
        for g in guards.iter().filter(|g| g.vars().iter().all(|x| idx(x).is_none())) {
            if !self.atom(g, val)? {
                return Ok(false);
            }
        }
        for group in groups.values() {
            let gs: Vec<FoAtom> =
                guards.iter().filter(|g| g.vars().iter().any(|x| group.contains(x))).cloned().collect();
            if !self.search(group, &gs, val, &mut |_, _| Ok(true))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Backtracking over assignments of `vars` satisfying `guards`, checking each
    /// guard as soon as its variables are bound; `leaf` returns true to stop.
    fn search(
        &self,
        vars: &[String],
        guards: &[FoAtom],
        val: &mut Valuation,
        leaf: &mut dyn FnMut(&Self, &mut Valuation) -> Result<bool, EvalError>,
    ) -> Result<bool, EvalError> {
        let vars = &order_vars(vars, guards, val);
        let mut at: Vec<Vec<&FoAtom>> = vec![Vec::new(); vars.len() + 1];
        for g in guards {
            let depth =
                g.vars().iter().filter_map(|x| vars.iter().position(|v| v == x)).map(|p| p + 1).max().unwrap_or(0);
            at[depth].push(g);
        }
        for g in &at[0] {
            if !self.atom(g, val)? {
                return Ok(false);
            }
        }
        let saved: Vec<Option<usize>> = vars.iter().map(|v| val.get(v).copied()).collect();
        let stop = self.search_rec(vars, &at, 0, val, leaf)?;
        for (v, s) in vars.iter().zip(saved) {
            match s {
                Some(x) => val.insert(v.clone(), x),
                None => val.remove(v),
            };
        }
        Ok(stop)
    }

    fn search_rec(
        &self,
        vars: &[String],
        at: &[Vec<&FoAtom>],
        depth: usize,
        val: &mut Valuation,
        leaf: &mut dyn FnMut(&Self, &mut Valuation) -> Result<bool, EvalError>,
    ) -> Result<bool, EvalError> {
        if depth == vars.len() {
            return leaf(self, val);
        }
        'elems: for e in 0..self.size() {
            val.insert(vars[depth].clone(), e);
            for g in &at[depth + 1] {
                if !self.atom(g, val)? {
                    continue 'elems;
                }
            }
            if self.search_rec(vars, at, depth + 1, val, leaf)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// An assignment of the free variables refuting the formula, if any.
    pub fn counter_fo(&self, f: &Fo) -> Result<Option<Valuation>, EvalError> {
        let fv: Vec<String> = f.free_vars().into_iter().collect();
        let mut witness = None;
        let mut val = Valuation::new();
        self.search(&fv, &[], &mut val, &mut |h, v| {
            if h.holds(f, v)? {
                Ok(false)
            } else {
                witness = Some(v.clone());
                Ok(true)
            }
        })?;
        Ok(witness)
    }

    pub fn valid_fo(&self, f: &Fo) -> Result<bool, EvalError> {
        self.valid_fo_factored(f)
    }

    fn element_names(&self, xs: &[usize]) -> Vec<String> {
        xs.iter().map(|&x| self.names[x].clone()).collect()
    }

    /// Exhaustive check of the lattice, variety and relation axioms; reports the first failure.
    pub fn validate_axioms(&self) -> Result<(), AxiomViolation> {
        let l = &self.lattice;
        let n = self.size();
        let fail = |axiom, index, w: &[usize]| Err(AxiomViolation { axiom, index, witness: self.element_names(w) });
        for a in 0..n {
            for b in 0..n {
                let (m, j) = (l.meet[a][b], l.join[a][b]);
                let glb = l.leq[m][a] && l.leq[m][b] && (0..n).all(|c| !(l.leq[c][a] && l.leq[c][b]) || l.leq[c][m]);
                let lub = l.leq[a][j] && l.leq[b][j] && (0..n).all(|c| !(l.leq[a][c] && l.leq[b][c]) || l.leq[j][c]);
                if !glb || !lub || (a != b && l.leq[a][b] && l.leq[b][a]) {
                    return fail(Axiom::Lattice, 0, &[a, b]);
                }
            }
        }
        if self.variety.is_distributive() {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if l.meet[a][l.join[b][c]] != l.join[l.meet[a][b]][l.meet[a][c]] {
                            return fail(Axiom::Distributive, 0, &[a, b, c]);
                        }
                    }
                }
            }
        }
        let op = |name: &str| self.ops.get(name);
        if self.variety.has_implication() {
            let imp = op("->").ok_or(AxiomViolation { axiom: Axiom::Heyting, index: 0, witness: vec![] })?;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if l.leq[c][imp.apply(n, &[a, b])] != l.leq[l.meet[c][a]][b] {
                            return fail(Axiom::Heyting, 0, &[a, b, c]);
                        }
                    }
                }
            }
        }
        if self.variety.has_coimplication() {
            let co = op("-<").ok_or(AxiomViolation { axiom: Axiom::CoHeyting, index: 0, witness: vec![] })?;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if l.leq[co.apply(n, &[a, b])][c] != l.leq[a][l.join[b][c]] {
                            return fail(Axiom::CoHeyting, 0, &[a, b, c]);
                        }
                    }
                }
            }
        }
        if matches!(self.variety, Variety::Boolean | Variety::DeMorgan) {
            let neg = op("~").ok_or(AxiomViolation { axiom: Axiom::Negation, index: 0, witness: vec![] })?;
            let ng = neg.unary();
            for a in 0..n {
                if ng[ng[a]] != a {
                    return fail(Axiom::Negation, 0, &[a]);
                }
                if self.variety == Variety::Boolean && (l.meet[a][ng[a]] != l.bot || l.join[a][ng[a]] != l.top) {
                    return fail(Axiom::Negation, 0, &[a]);
                }
                for b in 0..n {
                    if l.leq[a][b] && !l.leq[ng[b]][ng[a]] {
                        return fail(Axiom::Negation, 0, &[a, b]);
                    }
                }
            }
        }
        for (i, p) in self.rels.prec.iter().enumerate() {
            if !p[l.bot][l.bot] {
                return fail(Axiom::S1, i, &[l.bot, l.bot]);
            }
            if !p[l.top][l.top] {
                return fail(Axiom::S1, i, &[l.top, l.top]);
            }
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if p[a][b] && p[a][c] && !p[a][l.meet[b][c]] {
                            return fail(Axiom::S2, i, &[a, b, c]);
                        }
                    }
                }
            }
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if p[a][c] && p[b][c] && !p[l.join[a][b]][c] {
                            return fail(Axiom::S3, i, &[a, b, c]);
                        }
                    }
                }
            }
            for b in 0..n {
                for c in 0..n {
                    if !p[b][c] {
                        continue;
                    }
                    for a in (0..n).filter(|&a| l.leq[a][b]) {
                        for d in (0..n).filter(|&d| l.leq[c][d]) {
                            if !p[a][d] {
                                return fail(Axiom::S4, i, &[a, b, c, d]);
                            }
                        }
                    }
                }
            }
        }
        for (i, c) in self.rels.c.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    if c[a][b] && (a == l.bot || b == l.bot) {
                        return fail(Axiom::C1, i, &[a, b]);
                    }
                }
            }
            for a in 0..n {
                for b in 0..n {
                    for d in 0..n {
                        if c[a][l.join[b][d]] != (c[a][b] || c[a][d]) {
                            return fail(Axiom::C2, i, &[a, b, d]);
                        }
                    }
                }
            }
            for a in 0..n {
                for b in 0..n {
                    for d in 0..n {
                        if c[l.join[a][b]][d] != (c[a][d] || c[b][d]) {
                            return fail(Axiom::C3, i, &[a, b, d]);
                        }
                    }
                }
            }
        }
        for (i, dm) in self.rels.d.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    if dm[a][b] && (a == l.top || b == l.top) {
                        return fail(Axiom::D1, i, &[a, b]);
                    }
                }
            }
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if dm[a][l.meet[b][c]] != (dm[a][b] || dm[a][c]) {
                            return fail(Axiom::D2, i, &[a, b, c]);
                        }
                    }
                }
            }
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if dm[l.meet[a][b]][c] != (dm[a][c] || dm[b][c]) {
                            return fail(Axiom::D3, i, &[a, b, c]);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Post-hoc check of the adjunctions between relations and slanted operators.
    pub fn check_adjunctions(&self) -> Result<(), String> {
        let n = self.size();
        let t = |m: Modal, i: usize| &self.slanted.tables[&(m, i)];
        for (i, p) in self.rels.prec.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    let (x, y, z) = (self.leq(t(Modal::Dia, i)[a], b), p[a][b], self.leq(a, t(Modal::Box, i)[b]));
                    if x != y || y != z {
                        return Err(format!("◇/≺/■ adjunction fails at ({}, {})", self.names[a], self.names[b]));
                    }
                }
            }
        }
        for (i, c) in self.rels.c.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    let (x, y, z) = (self.leq(b, t(Modal::Rhd, i)[a]), !c[a][b], self.leq(a, t(Modal::Brhd, i)[b]));
                    if x != y || y != z {
                        return Err(format!("▷/C̸/▶ adjunction fails at ({}, {})", self.names[a], self.names[b]));
                    }
                }
            }
        }
        for (i, d) in self.rels.d.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    let (x, y, z) = (self.leq(t(Modal::Lhd, i)[b], a), !d[a][b], self.leq(t(Modal::Blhd, i)[a], b));
                    if x != y || y != z {
                        return Err(format!("◁/D̸/◀ adjunction fails at ({}, {})", self.names[a], self.names[b]));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dual_space(&self) -> Option<SpdSpace> {
        if !self.lattice.is_distributive() {
            return None;
        }
        let l = &self.lattice;
        let points = l.join_irreducibles();
        let k = points.len();
        let kappa: Vec<usize> =
            points.iter().map(|&j| l.join_all(points.iter().copied().filter(|&i| !l.leq[j][i]))).collect();
        let sq = (0..k).map(|x| (0..k).map(|y| l.leq[points[y]][points[x]]).collect()).collect();
        let rel =
            |f: &dyn Fn(usize, usize) -> bool| -> Mat { (0..k).map(|x| (0..k).map(|y| f(x, y)).collect()).collect() };
        let t = |m: Modal, i: usize| &self.slanted.tables[&(m, i)];
        let r_prec =
            (0..self.rels.prec.len()).map(|i| rel(&|x, y| l.leq[points[x]][t(Modal::Dia, i)[points[y]]])).collect();
        let r_nc = (0..self.rels.c.len()).map(|i| rel(&|x, y| l.leq[t(Modal::Rhd, i)[points[y]]][kappa[x]])).collect();
        let r_nd = (0..self.rels.d.len()).map(|i| rel(&|x, y| l.leq[points[x]][t(Modal::Lhd, i)[kappa[y]]])).collect();
        Some(SpdSpace { points, sqsubseteq: sq, r_prec, r_nc, r_nd, kappa })
    }
}

fn conj_atoms(f: &Fo) -> Option<Vec<FoAtom>> {
    match f {
        Fo::Atom(a) => Some(vec![a.clone()]),
        Fo::And(ps) => {
            let mut out = Vec::new();
            for p in ps {
                out.extend(conj_atoms(p)?);
            }
            Some(out)
        }
        _ => None,
    }
}

/// Splits a block into the variables the body reads and the rest, with the
/// guards that mention only the former.
fn split_block(
    vars: &[String],
    guards: Vec<FoAtom>,
    body: &Fo,
) -> (Vec<String>, Vec<String>, Vec<FoAtom>, Vec<FoAtom>) {
    let fv = body.free_vars();
    let (outer, inner): (Vec<String>, Vec<String>) = vars.iter().cloned().partition(|v| fv.contains(v));
    let (g_inner, g_outer): (Vec<FoAtom>, Vec<FoAtom>) =
        guards.into_iter().partition(|g| g.vars().iter().any(|x| inner.contains(x)));
    (outer, inner, g_outer, g_inner)
}

/// Greedy binding order: next the variable completing the most guards,
/// then the one sharing the most guards with bound variables.
fn order_vars(vars: &[String], guards: &[FoAtom], val: &Valuation) -> Vec<String> {
    let gv: Vec<BTreeSet<String>> = guards.iter().map(FoAtom::vars).collect();
    let mut bound: BTreeSet<String> = val.keys().cloned().collect();
    let mut rest: Vec<String> = vars.to_vec();
    let mut out = Vec::new();
    while !rest.is_empty() {
        let score = |x: &String| {
            let (mut done, mut touch) = (0, 0);
            for g in &gv {
                if g.contains(x) {
                    if g.iter().all(|y| y == x || bound.contains(y)) {
                        done += 1;
                    } else if g.iter().any(|y| bound.contains(y)) {
                        touch += 1;
                    }
                }
            }
            (done, touch)
        };
        let mut best = 0;
        for i in 1..rest.len() {
            if score(&rest[i]) > score(&rest[best]) {
                best = i;
            }
        }
        let x = rest.remove(best);
        bound.insert(x.clone());
        out.push(x);
    }
    out
}

/// Collects a run of same-kind quantifiers with their restrictors.
fn quant_block(f: &Fo, universal: bool) -> (Vec<String>, Vec<FoAtom>, &Fo) {
    let mut vars = Vec::new();
    let mut guards = Vec::new();
    let mut cur = f;
    while let (Fo::Forall(q, b), true) | (Fo::Exists(q, b), false) = (cur, universal) {
        vars.extend(q.names());
        guards.extend(q.restricting_atom());
        cur = b;
    }
    (vars, guards, cur)
}

/// Dual relational structure on the join-irreducibles of a finite distributive spd-algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpdSpace {
    pub points: Vec<usize>,
    pub sqsubseteq: Mat,
    pub r_prec: Vec<Mat>,
    pub r_nc: Vec<Mat>,
    pub r_nd: Vec<Mat>,
    pub kappa: Vec<usize>,
}

impl SpdSpace {
    /// Checks the κ law and the alternative characterization of each relation.
    pub fn check_laws(&self, h: &FiniteSpdAlgebra) -> Result<(), String> {
        let l = &h.lattice;
        let k = self.points.len();
        let t = |m: Modal, i: usize| &h.slanted.tables[&(m, i)];
        for (x, &j) in self.points.iter().enumerate() {
            for u in 0..h.size() {
                if !l.leq[j][u] != l.leq[u][self.kappa[x]] {
                    return Err(format!("κ law fails at j={}, u={}", h.names[j], h.names[u]));
                }
            }
        }
        for x in 0..k {
            for y in 0..k {
                let (kx, ky) = (self.kappa[x], self.kappa[y]);
                for (i, r) in self.r_prec.iter().enumerate() {
                    if r[x][y] != l.leq[t(Modal::Box, i)[kx]][ky] {
                        return Err(format!("R_prec{i} characterization fails at ({x}, {y})"));
                    }
                }
                for (i, r) in self.r_nc.iter().enumerate() {
                    if r[x][y] != l.leq[t(Modal::Brhd, i)[self.points[x]]][ky] {
                        return Err(format!("R_nC{i} characterization fails at ({x}, {y})"));
                    }
                }
                for (i, r) in self.r_nd.iter().enumerate() {
                    if r[x][y] != l.leq[self.points[y]][t(Modal::Blhd, i)[kx]] {
                        return Err(format!("R_nD{i} characterization fails at ({x}, {y})"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Agree,
    Disagree { modal: bool, fo: bool },
}

/// Compares the modal and first-order verdicts on one model.
pub fn check_correspondence(ineq: &Ineq, fo: &Fo, h: &FiniteSpdAlgebra) -> Result<Agreement, EvalError> {
    let modal = h.valid_mod(ineq)?;
    let fo = h.valid_fo(fo)?;
    Ok(if modal == fo { Agreement::Agree } else { Agreement::Disagree { modal, fo } })
}

/// Enumeration parameters for the model suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub max_poset_size: usize,
    pub max_carrier: usize,
    pub variety: Variety,
    pub spd_type: (usize, usize, usize),
    pub seed: u64,
    /// Relation families drawn per lattice.
    pub per_lattice: usize,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            max_poset_size: 6,
            max_carrier: 16,
            variety: Variety::DistributiveLattice,
            spd_type: (1, 1, 1),
            seed: 0,
            per_lattice: 2,
        }
    }
}

impl ModelSpec {
    pub fn for_signature(sig: &Signature) -> ModelSpec {
        ModelSpec { variety: sig.variety, spd_type: sig.spd_type, ..ModelSpec::default() }
    }
}

/// Strict orders on `n` points, naturally labelled, one per isomorphism class.
pub fn posets(n: usize) -> Vec<Mat> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut seen: HashMap<Vec<(usize, usize)>, Vec<Mat>> = HashMap::new();
    let mut out = Vec::new();
    for bits in 0u64..(1 << pairs.len()) {
        let mut lt = mat(n);
        for (k, &(i, j)) in pairs.iter().enumerate() {
            lt[i][j] = bits >> k & 1 == 1;
        }
        let transitive = (0..n).all(|i| (0..n).all(|j| !lt[i][j] || (0..n).all(|k| !lt[j][k] || lt[i][k])));
        if !transitive {
            continue;
        }
        let mut inv: Vec<(usize, usize)> =
            (0..n).map(|i| ((0..n).filter(|&j| lt[i][j]).count(), (0..n).filter(|&j| lt[j][i]).count())).collect();
        inv.sort();
        let bucket = seen.entry(inv).or_default();
        if bucket.iter().any(|m| isomorphic(m, &lt)) {
            continue;
        }
        bucket.push(lt.clone());
        out.push(lt);
    }
    out
}

fn isomorphic(a: &Mat, b: &Mat) -> bool {
    let n = a.len();
    fn go(a: &Mat, b: &Mat, map: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
        let k = map.len();
        if k == a.len() {
            return true;
        }
        for c in 0..a.len() {
            if used[c] {
                continue;
            }
            if (0..k).all(|p| a[p][k] == b[map[p]][c] && a[k][p] == b[c][map[p]]) {
                map.push(c);
                used[c] = true;
                if go(a, b, map, used) {
                    return true;
                }
                map.pop();
                used[c] = false;
            }
        }
        false
    }
    go(a, b, &mut Vec::with_capacity(n), &mut vec![false; n])
}

/// Downset lattice of a strict order, elements sorted so index 0 is ⊥.
pub fn downset_lattice(lt: &Mat) -> Lattice {
    let n = lt.len();
    let mut sets: Vec<u64> = (0u64..(1 << n))
        .filter(|&s| (0..n).all(|j| s >> j & 1 == 0 || (0..n).all(|i| !lt[i][j] || s >> i & 1 == 1)))
        .collect();
    sets.sort_by_key(|s| (s.count_ones(), *s));
    let leq = sets.iter().map(|a| sets.iter().map(|b| a & !b == 0).collect()).collect();
    Lattice::from_order(leq).expect("downsets form a lattice")
}

pub fn chain(n: usize) -> Lattice {
    Lattice::from_order((0..n).map(|a| (0..n).map(|b| a <= b).collect()).collect()).unwrap()
}

pub fn powerset(k: usize) -> Lattice {
    let sets: Vec<usize> = (0..1usize << k).collect();
    let mut sorted = sets.clone();
    sorted.sort_by_key(|s| (s.count_ones(), *s));
    Lattice::from_order(sorted.iter().map(|a| sorted.iter().map(|b| a & !b == 0).collect()).collect()).unwrap()
}

/// The two five-element non-distributive lattices.
pub fn m3_n5() -> Vec<Lattice> {
    let from_covers = |n: usize, covers: &[(usize, usize)]| {
        let mut leq = mat(n);
        for (a, row) in leq.iter_mut().enumerate() {
            row[a] = true;
        }
        for &(a, b) in covers {
            leq[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if leq[i][k] && leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
        Lattice::from_order(leq).unwrap()
    };
    vec![
        from_covers(5, &[(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)]),
        from_covers(5, &[(0, 1), (1, 2), (2, 4), (0, 3), (3, 4)]),
    ]
}

/// Order-reversing involutions of a lattice (De Morgan negations).
pub fn involutions(l: &Lattice, limit: usize) -> Vec<Vec<usize>> {
    let n = l.size();
    let mut out = Vec::new();
    fn go(l: &Lattice, k: usize, neg: &mut Vec<Option<usize>>, out: &mut Vec<Vec<usize>>, limit: usize) {
        let n = l.size();
        if out.len() >= limit {
            return;
        }
        if k == n {
            out.push(neg.iter().map(|x| x.unwrap()).collect());
            return;
        }
        if neg[k].is_some() {
            return go(l, k + 1, neg, out, limit);
        }
        for c in 0..n {
            if neg[c].is_some() && neg[c] != Some(k) {
                continue;
            }
            if neg[c].is_none() && c != k && neg.contains(&Some(c)) {
                continue;
            }
            let prev = (neg[k], neg[c]);
            neg[k] = Some(c);
            neg[c] = Some(k);
            let ok = (0..n).all(|a| {
                (0..n).all(|b| match (neg[a], neg[b]) {
                    (Some(x), Some(y)) => !l.leq[a][b] || l.leq[y][x],
                    _ => true,
                })
            });
            if ok {
                go(l, k + 1, neg, out, limit);
            }
            neg[k] = prev.0;
            neg[c] = prev.1;
        }
    }
    go(l, 0, &mut vec![None; n], &mut out, limit);
    out
}

/// Closes a seed relation under (S1)–(S4).
pub fn close_subordination(l: &Lattice, seed: &[(usize, usize)]) -> Mat {
    let n = l.size();
    let mut p = mat(n);
    p[l.bot][l.bot] = true;
    p[l.top][l.top] = true;
    for &(a, b) in seed {
        p[a][b] = true;
    }
    loop {
        let mut changed = false;
        let mut set = |p: &mut Mat, a: usize, b: usize| {
            if !p[a][b] {
                p[a][b] = true;
                changed = true;
            }
        };
        for b in 0..n {
            for c in 0..n {
                if p[b][c] {
                    for a in (0..n).filter(|&a| l.leq[a][b]) {
                        for d in (0..n).filter(|&d| l.leq[c][d]) {
                            set(&mut p, a, d);
                        }
                    }
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if p[a][b] && p[a][c] {
                        set(&mut p, a, l.meet[b][c]);
                    }
                    if p[a][c] && p[b][c] {
                        set(&mut p, l.join[a][b], c);
                    }
                }
            }
        }
        if !changed {
            return p;
        }
    }
}

/// Precontact generated by pairs of join-primes: a C b iff some seed (p, q) has p ≤ a, q ≤ b.
pub fn precontact_from(l: &Lattice, seed: &[(usize, usize)]) -> Mat {
    let n = l.size();
    (0..n).map(|a| (0..n).map(|b| seed.iter().any(|&(p, q)| l.leq[p][a] && l.leq[q][b])).collect()).collect()
}

/// Dual precontact generated by pairs of meet-primes: a D b iff some seed (m, k) has a ≤ m, b ≤ k.
pub fn dual_precontact_from(l: &Lattice, seed: &[(usize, usize)]) -> Mat {
    let n = l.size();
    (0..n).map(|a| (0..n).map(|b| seed.iter().any(|&(m, k)| l.leq[a][m] && l.leq[b][k])).collect()).collect()
}

fn random_rels(l: &Lattice, spd_type: (usize, usize, usize), rng: &mut ChaCha8Rng, draw: usize) -> Rels {
    let n = l.size();
    let jp = l.join_primes();
    let mp = l.meet_primes();
    let pick_pairs = |pool: &[usize], rng: &mut ChaCha8Rng| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &a in pool {
            for &b in pool {
                if rng.gen_bool(0.35) {
                    out.push((a, b));
                }
            }
        }
        out
    };
    let prec = (0..spd_type.0)
        .map(|_| {
            if draw == 0 {
                return l.leq.clone();
            }
            let k = rng.gen_range(0..=3);
            let seed: Vec<(usize, usize)> = (0..k).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
            close_subordination(l, &seed)
        })
        .collect();
    let c = (0..spd_type.1).map(|_| precontact_from(l, &pick_pairs(&jp, rng))).collect();
    let d = (0..spd_type.2).map(|_| dual_precontact_from(l, &pick_pairs(&mp, rng))).collect();
    Rels { prec, c, d }
}

fn base_lattices(spec: &ModelSpec) -> Vec<(Lattice, Option<Vec<usize>>)> {
    let mut out: Vec<(Lattice, Option<Vec<usize>>)> = Vec::new();
    match spec.variety {
        Variety::Boolean => {
            for k in 0..=4 {
                let l = powerset(k);
                if l.size() <= spec.max_carrier {
                    out.push((l, None));
                }
            }
        }
        v => {
            let mut lats = Vec::new();
            for n in 0..=spec.max_poset_size {
                for p in posets(n) {
                    let l = downset_lattice(&p);
                    if l.size() <= spec.max_carrier {
                        lats.push(l);
                    }
                }
            }
            if v == Variety::Lattice {
                lats.extend(m3_n5());
            }
            for l in lats {
                if v == Variety::DeMorgan {
                    if l.size() <= 10 {
                        for neg in involutions(&l, 3) {
                            out.push((l.clone(), Some(neg)));
                        }
                    }
                } else {
                    out.push((l, None));
                }
            }
        }
    }
    out
}

/// Deterministic model suite: every base lattice paired with `per_lattice`
/// relation families; each emitted model passes `validate_axioms`.
pub fn enumerate_models(spec: &ModelSpec) -> Vec<FiniteSpdAlgebra> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::new();
    for (l, neg) in base_lattices(spec) {
        let names: Vec<String> = (0..l.size()).map(|i| i.to_string()).collect();
        let mut ops = BTreeMap::new();
        if let Some(neg) = neg {
            ops.insert("~".to_string(), Op { arity: 1, table: neg });
        }
        for draw in 0..spec.per_lattice {
            let rels = random_rels(&l, spec.spd_type, &mut rng, draw);
            let h = FiniteSpdAlgebra::new(names.clone(), l.clone(), spec.variety, ops.clone(), rels);
            if h.validate_axioms().is_ok() {
                out.push(h);
            }
        }
    }
    out
}
