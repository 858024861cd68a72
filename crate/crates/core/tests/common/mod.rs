#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use spd_core::modterm::{analyze, Ineq, Term};
use spd_core::signature::{Modal, Signature};
use spd_core::syntax::parse_mod;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[derive(Deserialize)]
struct Manifest {
    case: Vec<RawCase>,
}

#[derive(Deserialize)]
struct RawCase {
    file: String,
    signature: String,
    expected: Vec<String>,
}

pub struct InverseCase {
    pub name: String,
    pub input: String,
    pub sig: Signature,
    pub expected: Vec<Ineq>,
}

pub fn inverse_cases() -> Vec<InverseCase> {
    let m: Manifest = toml::from_str(&read("inverse.toml")).unwrap();
    m.case
        .into_iter()
        .map(|c| InverseCase {
            name: c.file.clone(),
            input: read(&c.file),
            sig: Signature::builtin(&c.signature).unwrap(),
            expected: c.expected.iter().map(|e| parse_mod(e).unwrap()).collect(),
        })
        .collect()
}

/// Inequalities of a corpus list file, `#` lines skipped.
pub fn inequality_list(rel: &str) -> Vec<Ineq> {
    read(rel)
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_mod(l).unwrap_or_else(|e| panic!("{l}: {e}")))
        .collect()
}

fn random_term(rng: &mut ChaCha8Rng, depth: usize, vars: &[&str]) -> Term {
    if depth == 0 || rng.gen_bool(0.25) {
        return Term::var(vars[rng.gen_range(0..vars.len())]);
    }
    match rng.gen_range(0..8) {
        0 => Term::meet(random_term(rng, depth - 1, vars), random_term(rng, depth - 1, vars)),
        1 => Term::join(random_term(rng, depth - 1, vars), random_term(rng, depth - 1, vars)),
        k => Term::modal(Modal::ALL[k - 2], random_term(rng, depth - 1, vars)),
    }
}

/// `n` distinct analytic inequalities over v1..v3, each side of depth at most
/// `depth`, drawn from a seeded generator; trivially true ones are skipped.
pub fn random_analytic(seed: u64, n: usize, depth: usize, sig: &Signature) -> Vec<Ineq> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Ineq> = Vec::new();
    while out.len() < n {
        let i = Ineq::new(
            random_term(&mut rng, depth, &["v1", "v2", "v3"]),
            random_term(&mut rng, depth, &["v1", "v2", "v3"]),
        );
        if i.lhs != i.rhs && i.has_modal() && !out.contains(&i) && analyze(&i, sig).is_ok() {
            out.push(i);
        }
    }
    out
}
