//! First-order validity by variable elimination over boolean tables, so that
//! quantifier blocks are never enumerated as a whole.

use std::collections::BTreeSet;

use super::{quant_block, EvalError, FiniteSpdAlgebra, Valuation};
use crate::foterm::{Fo, FoAtom};

/// Boolean table over `vars`, first variable most significant.
#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<String>,
    table: Vec<bool>,
}

impl Factor {
    fn negate(mut self) -> Factor {
        for t in &mut self.table {
            *t = !*t;
        }
        self
    }
}

fn index(digits: &[usize], pos: &[usize], n: usize) -> usize {
    pos.iter().fold(0, |acc, &i| acc * n + digits[i])
}

fn decode(mut code: usize, out: &mut [usize], n: usize) {
    for d in out.iter_mut().rev() {
        *d = code % n;
        code /= n;
    }
}

/// Conjunction of `fs` over `keep`, existentially projecting away `drop`.
fn combine(fs: &[Factor], keep: &[String], drop: &[String], n: usize) -> Factor {
    let all: Vec<String> = keep.iter().chain(drop).cloned().collect();
    let pos = |f: &Factor| -> Vec<usize> {
        f.vars.iter().map(|v| all.iter().position(|u| u == v).expect("variable in scope")).collect()
    };
    let (inner, outer): (Vec<&Factor>, Vec<&Factor>) = fs.iter().partition(|f| f.vars.iter().any(|v| drop.contains(v)));
    let outer: Vec<(&Factor, Vec<usize>)> = outer.into_iter().map(|f| (f, pos(f))).collect();
    let inner: Vec<(&Factor, Vec<usize>)> = inner.into_iter().map(|f| (f, pos(f))).collect();
    let k = keep.len();
    let mut digits = vec![0usize; all.len()];
    let mut table = vec![false; n.pow(k as u32)];
    let inner_total = n.pow(drop.len() as u32);
    for (code, cell) in table.iter_mut().enumerate() {
        decode(code, &mut digits[..k], n);
        if !outer.iter().all(|(f, p)| f.table[index(&digits, p, n)]) {
            continue;
        }
        for j in 0..inner_total {
            decode(j, &mut digits[k..], n);
            if inner.iter().all(|(f, p)| f.table[index(&digits, p, n)]) {
                *cell = true;
                break;
            }
        }
    }
    Factor { vars: keep.to_vec(), table }
}

fn scope(fs: &[Factor]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    fs.iter().flat_map(|f| f.vars.iter()).filter(|v| seen.insert(*v)).cloned().collect()
}

/// The conjunction as one factor.
fn single(fs: &[Factor], n: usize) -> Factor {
    combine(fs, &scope(fs), &[], n)
}

/// Eliminates `xs` one at a time, narrowest scope first.
fn eliminate(mut fs: Vec<Factor>, xs: &[String], n: usize) -> Vec<Factor> {
    let mut xs = xs.to_vec();
    while !xs.is_empty() {
        let width = |x: &String| scope(&fs.iter().filter(|f| f.vars.contains(x)).cloned().collect::<Vec<_>>()).len();
        let best = (0..xs.len()).min_by_key(|&i| width(&xs[i])).expect("non-empty");
        let x = xs.remove(best);
        let (hit, rest): (Vec<Factor>, Vec<Factor>) = fs.into_iter().partition(|f| f.vars.contains(&x));
        fs = rest;
        if hit.is_empty() {
            continue;
        }
        let keep: Vec<String> = scope(&hit).into_iter().filter(|v| *v != x).collect();
        fs.push(combine(&hit, &keep, &[x], n));
    }
    fs
}

impl FiniteSpdAlgebra {
    fn atom_factor(&self, a: &FoAtom) -> Result<Factor, EvalError> {
        let vars: Vec<String> = a.vars().into_iter().collect();
        let n = self.size();
        let mut digits = vec![0usize; vars.len()];
        let mut val = Valuation::new();
        let total = n.pow(vars.len() as u32);
        let mut table = Vec::with_capacity(total);
        for code in 0..total {
            decode(code, &mut digits, n);
            for (v, &d) in vars.iter().zip(&digits) {
                val.insert(v.clone(), d);
            }
            table.push(self.atom(a, &val)?);
        }
        Ok(Factor { vars, table })
    }

    /// Factors whose conjunction is equivalent to `f`.
    fn factors(&self, f: &Fo) -> Result<Vec<Factor>, EvalError> {
        let n = self.size();
        match f {
            Fo::Atom(a) => Ok(vec![self.atom_factor(a)?]),
            Fo::And(ps) => {
                let mut out = Vec::new();
                for p in ps {
                    out.extend(self.factors(p)?);
                }
                Ok(out)
            }
            Fo::Implies(a, b) => {
                let na = single(&self.factors(a)?, n).negate();
                let b = single(&self.factors(b)?, n);
                let vars = scope(&[na.clone(), b.clone()]);
                let mut table = vec![false; n.pow(vars.len() as u32)];
                let mut digits = vec![0usize; vars.len()];
                let pos = |f: &Factor| -> Vec<usize> {
                    f.vars.iter().map(|v| vars.iter().position(|u| u == v).expect("in scope")).collect()
                };
                let (pa, pb) = (pos(&na), pos(&b));
                for (code, cell) in table.iter_mut().enumerate() {
                    decode(code, &mut digits, n);
                    *cell = na.table[index(&digits, &pa, n)] || b.table[index(&digits, &pb, n)];
                }
                Ok(vec![Factor { vars, table }])
            }
            Fo::Exists(..) => {
                let (vars, guards, body) = quant_block(f, false);
                let mut fs = self.factors(body)?;
                for g in &guards {
                    fs.push(self.atom_factor(g)?);
                }
                Ok(eliminate(fs, &vars, n))
            }
            Fo::Forall(..) => {
                // ∀x̄(G ⇒ F1 ∧ … ∧ Fk) is the conjunction of ¬∃x̄(G ∧ ¬Fi)
                let (vars, guards, body) = quant_block(f, true);
                let mut gs = Vec::new();
                for g in &guards {
                    gs.push(self.atom_factor(g)?);
                }
                let conclusion = match body {
                    Fo::Implies(a, b) => {
                        gs.extend(self.factors(a)?);
                        &**b
                    }
                    other => other,
                };
                let mut out = Vec::new();
                for fi in self.factors(conclusion)? {
                    let mut fs = gs.clone();
                    fs.push(fi.negate());
                    out.push(single(&eliminate(fs, &vars, n), n).negate());
                }
                Ok(out)
            }
        }
    }

    /// Validity of the universal closure of `f`.
    pub(super) fn valid_fo_factored(&self, f: &Fo) -> Result<bool, EvalError> {
        let closed = f.clone().closure();
        let fs = self.factors(&closed)?;
        Ok(single(&fs, self.size()).table.iter().all(|&b| b))
    }
}

#[cfg(test)]
mod tests {
    use crate::alba::{correspond, Options};
    use crate::oracle::{enumerate_models, ModelSpec};
    use crate::signature::{Signature, Variety};
    use crate::syntax::{parse_fo, parse_mod};

    const FORMULAS: &[&str] = &[
        "A a b. (a prec b => a <= b)",
        "A x. E y. (x nD y & y nC x)",
        "A a. (E d <= a) (d <= a)",
        "A x y. (x prec y => E z. (x prec z & z prec y))",
        "A x y z. (x C y & y <= z => x C z)",
        "A x. (E y. (y prec x) => x D x)",
        "E x. A y. (x <= y)",
        "A x y. (x \\/ y nC x /\\ y => (x nD y => y prec x))",
    ];

    #[test]
    fn agrees_with_search() {
        let models = enumerate_models(&ModelSpec { max_poset_size: 3, ..ModelSpec::default() });
        let sig = Signature::new((1, 1, 1), Variety::DistributiveLattice);
        let mut fos: Vec<_> = FORMULAS.iter().map(|s| parse_fo(s).unwrap()).collect();
        for s in [
            "box box v <= box v",
            "dia (dia v1 /\\ dia v2) <= dia (v1 /\\ v2)",
            "blhd dia v <= brhd box v",
            "v <= box dia v",
        ] {
            fos.push(correspond(&parse_mod(s).unwrap(), &sig, Options::default()).unwrap().to_fo());
        }
        for h in &models {
            for f in &fos {
                assert_eq!(h.valid_fo(f).unwrap(), h.counter_fo(f).unwrap().is_none(), "{f}");
            }
        }
    }
}
