mod common;

use std::sync::OnceLock;

use proptest::prelude::*;
use spd_core::alba::{correspond, Options};
use spd_core::foterm::{check_inductive, DEFAULT_ROLE_CAP};
use spd_core::kracht::inverse_fo;
use spd_core::modterm::{analyze, is_analytic_inductive, Ineq};
use spd_core::oracle::{enumerate_models, FiniteSpdAlgebra, ModelSpec};
use spd_core::signature::Signature;
use spd_core::syntax::{parse_fo, parse_mod};

fn dist() -> Signature {
    Signature::builtin("distributive").unwrap()
}

fn models() -> &'static [FiniteSpdAlgebra] {
    static M: OnceLock<Vec<FiniteSpdAlgebra>> = OnceLock::new();
    M.get_or_init(|| enumerate_models(&ModelSpec { max_poset_size: 3, ..ModelSpec::default() }))
}

fn valid_all(h: &FiniteSpdAlgebra, ineqs: &[Ineq]) -> bool {
    ineqs.iter().all(|i| h.valid_mod(i).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inverse_of_correspondents_is_typed_and_sound(seed in any::<u64>()) {
        let sig = dist();
        let ineq = common::random_analytic(seed, 1, 3, &sig).remove(0);
        let corr = correspond(&ineq, &sig, Options::default()).unwrap();
        let fo = corr.to_fo();
        let parts = inverse_fo(&fo, &sig, DEFAULT_ROLE_CAP, false).unwrap();
        let outputs: Vec<Ineq> = parts.iter().flat_map(|p| p.output.clone()).collect();
        for o in &outputs {
            prop_assert!(analyze(o, &sig).is_ok(), "{ineq}: output {o} is not clopen-analytic");
        }
        for p in &parts {
            if check_inductive(&p.kracht, &sig).is_some() {
                for o in &p.output {
                    prop_assert!(is_analytic_inductive(o, &sig).is_some(), "{ineq}: {o} not inductive");
                }
            }
        }
        for h in models() {
            prop_assert_eq!(h.valid_fo(&fo).unwrap(), valid_all(h, &outputs), "{}", ineq);
        }
    }
}

#[test]
fn or_down_output_is_a_tautology() {
    let sig = dist();
    let fo = parse_fo(&common::read("inverse/03-or-down.fo")).unwrap();
    let outputs: Vec<Ineq> =
        inverse_fo(&fo, &sig, DEFAULT_ROLE_CAP, false).unwrap().into_iter().flat_map(|p| p.output).collect();
    assert_eq!(outputs, vec![parse_mod("brhd x <= brhd x").unwrap()]);
    assert!(models().iter().all(|h| valid_all(h, &outputs)));
}
