use groupprob::envelope::{Envelope, FiniteDistribution};
use groupprob::rademacher::{check_kk, enumerate_rademacher, moment, RademacherScenario, Regime};
use groupprob::word_norm::{free_reduce, parse_word};
use groupprob::{audit_axioms, format_rational, parse_rational, Element, GroupInstance, MetricSemigroup, Scalar};
use num::{BigInt, BigRational, One};
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn z_scenario(xs: &[i64], p: BigRational, qq: BigRational) -> RademacherScenario {
    RademacherScenario::new(GroupInstance::free_abelian(1), xs.iter().map(|x| Element::Ints(vec![*x])).collect(), p, qq)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rationals_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = q(n, d);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn laws_sum_to_one(xs in prop::collection::vec(-6i64..=6, 1..10), m in 1u64..4) {
        let law = enumerate_rademacher(&z_scenario(&xs, q(1, 1), q(1, 1)), m).unwrap();
        prop_assert!(law.total_probability().is_one());
        let atoms = law.atoms();
        prop_assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn laws_ignore_fixed_sign_flips(xs in prop::collection::vec(-6i64..=6, 1..9), flips in any::<u16>()) {
        let flipped: Vec<i64> = xs.iter().enumerate().map(|(k, x)| if flips >> k & 1 == 1 { -x } else { *x }).collect();
        let a = enumerate_rademacher(&z_scenario(&xs, q(1, 1), q(1, 1)), 1).unwrap();
        let b = enumerate_rademacher(&z_scenario(&flipped, q(1, 1), q(1, 1)), 1).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn moments_increase_with_exponent(xs in prop::collection::vec(-5i64..=5, 1..8), i in 0usize..5, j in 0usize..5) {
        let exps = [q(1, 1), q(5, 4), q(3, 2), q(2, 1), q(3, 1)];
        let (lo, hi) = if exps[i] <= exps[j] { (&exps[i], &exps[j]) } else { (&exps[j], &exps[i]) };
        let law = enumerate_rademacher(&z_scenario(&xs, q(1, 1), q(1, 1)), 1).unwrap();
        let a = moment(&law, lo).unwrap();
        let b = moment(&law, hi).unwrap();
        prop_assert!(a.root_bounds.lo <= b.root_bounds.hi);
    }

    #[test]
    fn kk_with_q_at_most_p_uses_constant_one(xs in prop::collection::vec(-5i64..=5, 1..9), i in 0usize..4, j in 0usize..4) {
        let exps = [q(1, 1), q(3, 2), q(2, 1), q(3, 1)];
        let (qq, p) = if exps[i] <= exps[j] { (exps[i].clone(), exps[j].clone()) } else { (exps[j].clone(), exps[i].clone()) };
        let r = check_kk(&z_scenario(&xs, p, qq), Regime::NormedGeneral).unwrap();
        prop_assert!(r.satisfied);
        prop_assert_eq!(r.constant.value, Scalar::from_int(1));
    }

    #[test]
    fn audits_pass_on_exact_instances(seed in any::<u64>()) {
        for g in [GroupInstance::free_abelian(2), GroupInstance::cyclic(6, 2).unwrap(), GroupInstance::graph_space(4).unwrap()] {
            let report = audit_axioms(&g, 20, seed);
            prop_assert!(report.passed, "{:?}", report.counterexample);
        }
    }

    #[test]
    fn reduction_is_idempotent(text in "[aAbB]{0,24}") {
        let spelled: String = text.chars().map(|c| match c {
            'A' => "a^-1".to_string(),
            'B' => "b^-1".to_string(),
            c => c.to_string(),
        }).collect();
        let w = parse_word(&spelled).unwrap();
        prop_assert_eq!(free_reduce(w.letters(), 2).unwrap(), w.clone());
        prop_assert!(w.concat(&w.inverse()).is_empty());
    }

    #[test]
    fn expectation_is_affine(a in prop::collection::vec((-9i64..=9, -9i64..=9), 1..4), b in prop::collection::vec((-9i64..=9, -9i64..=9), 1..4), k in 0i64..=5) {
        let inst = GroupInstance::free_abelian(2);
        let env = Envelope::new(inst.clone()).unwrap();
        let law = |pts: &[(i64, i64)]| {
            let mut uniq: Vec<Element> = Vec::new();
            for (x, y) in pts {
                let e = Element::Ints(vec![*x, *y]);
                if !uniq.contains(&e) {
                    uniq.push(e);
                }
            }
            FiniteDistribution::uniform(&inst, uniq).unwrap()
        };
        let (la, lb) = (law(&a), law(&b));
        let lambda = q(k, 5);
        let mixed = env.expectation(&la.mixture(&lb, &lambda).unwrap()).unwrap().coords;
        let (ea, eb) = (env.expectation(&la).unwrap().coords, env.expectation(&lb).unwrap().coords);
        for c in 0..2 {
            prop_assert_eq!(&mixed[c], &(&lambda * &ea[c] + (BigRational::one() - &lambda) * &eb[c]));
        }
    }

    #[test]
    fn distances_are_translation_invariant(a in prop::collection::vec(-20i64..20, 3), b in prop::collection::vec(-20i64..20, 3), c in prop::collection::vec(-20i64..20, 3)) {
        let g = GroupInstance::weighted_free_abelian(vec![q(1, 2), q(3, 1), q(2, 3)]).unwrap();
        let (a, b, c) = (Element::Ints(a), Element::Ints(b), Element::Ints(c));
        let d = g.distance(&a, &b).unwrap();
        prop_assert_eq!(g.distance(&g.compose(&a, &c).unwrap(), &g.compose(&b, &c).unwrap()).unwrap(), d);
    }
}
