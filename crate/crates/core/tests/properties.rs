use proptest::prelude::*;

use steering_core::assemblage::{behaviour_from, random_ns, random_povm, reduced_state, Assemblage, Povm, Scenario};
use steering_core::freeword::{count, enumerate};
use steering_core::functionals::seesaw_runs;
use steering_core::gns::{behaviour_via_gns, check_assemblage};
use steering_core::hierarchy::{build_moment_problem, certificate_from_realization, dykstra_feasibility, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use steering_core::numkernel::random::{seeded, Rng};
use steering_core::numkernel::{hermitian_eig, ComplexMatrix, DEFAULT_RANK_TOL};
use steering_core::realization::{gisin_realize, verify_realization};

fn scenario(max_m: usize, max_k: usize, max_n: usize) -> impl Strategy<Value = Scenario> {
    (1..=max_m, 1..=max_k, 1..=max_n).prop_map(|(m, k, n)| Scenario::new(m, k, n).unwrap())
}

fn assemblage(max_m: usize, max_k: usize, max_n: usize) -> impl Strategy<Value = Assemblage> {
    (scenario(max_m, max_k, max_n), any::<u64>()).prop_map(|(s, seed)| random_ns(s, seed))
}

fn rank(m: &ComplexMatrix) -> usize {
    hermitian_eig(m).unwrap().support(DEFAULT_RANK_TOL).len()
}

fn trusted(n: usize, settings: usize, outcomes: usize, rng: &mut Rng) -> Vec<Povm> {
    (0..settings).map(|_| random_povm(n, outcomes, rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realization_round_trip(a in assemblage(4, 4, 4)) {
        let r = gisin_realize(&a).unwrap();
        prop_assert!(verify_realization(&r, &a).unwrap() <= 1e-8);
        prop_assert_eq!(r.dim_a, rank(&reduced_state(&a).unwrap()));
        let id = ComplexMatrix::identity(r.dim_a);
        for p in &r.povms {
            let total = p.effects().iter().fold(ComplexMatrix::zeros(r.dim_a, r.dim_a), |acc, e| &acc + e);
            prop_assert!(total.distance(&id) <= 1e-9);
        }
    }

    #[test]
    fn gns_postconditions(a in assemblage(4, 4, 4), seed in any::<u64>()) {
        let (rep, ops, res) = check_assemblage(&a).unwrap();
        prop_assert!(res.worst() <= 1e-9, "{:?}", res);
        let n = a.scenario().dim;
        let povms = trusted(n, 2, 3, &mut seeded(seed));
        let via = behaviour_via_gns(&rep, &ops, &povms).unwrap();
        let direct = behaviour_from(&a, &povms).unwrap();
        prop_assert!(via.max_difference(&direct) <= 1e-9);
        prop_assert!(via.signaling_violation() <= 1e-9);
    }

    #[test]
    fn behaviours_are_no_signaling(a in assemblage(3, 3, 3), seed in any::<u64>()) {
        let povms = trusted(a.scenario().dim, 3, 2, &mut seeded(seed));
        let p = behaviour_from(&a, &povms).unwrap();
        prop_assert!(p.signaling_violation() <= 1e-10);
        prop_assert!(p.normalization_defect() <= 1e-10);
    }

    #[test]
    fn word_count_matches_enumeration(m in 1usize..=4, k in 1usize..=4, l in 0usize..=6) {
        prop_assert_eq!(count(m, k, l), enumerate(m, k, l).len() as u128);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn realization_certificates_satisfy_the_hierarchy(a in assemblage(3, 3, 2), level in 1usize..=2) {
        let r = gisin_realize(&a).unwrap();
        let p = build_moment_problem(&a, level).unwrap();
        let g = certificate_from_realization(&p, &r).unwrap();
        prop_assert!(p.certificate_violation(&g).unwrap() <= 1e-9);
    }

    #[test]
    fn valid_assemblages_are_feasible(a in assemblage(3, 3, 3)) {
        let p = build_moment_problem(&a, 1).unwrap();
        let r = dykstra_feasibility(&p, DEFAULT_MAX_ITERS, DEFAULT_TOL);
        prop_assert!(r.is_feasible(), "residual {:e}", r.residual);
    }

    #[test]
    fn seesaw_sweeps_never_decrease(m in 1usize..=6, d_a in 2usize..=4, d_b in 2usize..=4, seed in any::<u64>()) {
        for run in seesaw_runs(m, d_a, d_b, 2, seed).unwrap() {
            for w in run.sweeps.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
            }
            prop_assert!(run.invariant_defect() <= 1e-9);
        }
    }
}
