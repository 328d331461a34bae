mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use steercert::linalg::{self, ComplexMatrix};
use steercert::povm::{self, check_extremality, validate, Povm, ValidateOptions, ViolationKind};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_povms_validate(seed in any::<u64>(), d in 1usize..5, n in 1usize..7) {
        let mut r = rng(seed);
        let els = random_povm(&mut r, d, n);
        prop_assert!(validate(&els, ValidateOptions::default()).is_empty());
        let p = Povm::new(els).unwrap();
        let rho = random_density(&mut r, d, d);
        let probs = p.probabilities(&rho);
        prop_assert!(probs.iter().all(|&q| q >= -1e-12));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scaled_povms_are_incomplete(seed in any::<u64>(), s in 1.01f64..2.0) {
        let mut r = rng(seed);
        let els: Vec<ComplexMatrix> = random_povm(&mut r, 2, 3).iter().map(|m| m.scale_real(s)).collect();
        let v = validate(&els, ValidateOptions::default());
        prop_assert!(v.iter().any(|x| x.kind == ViolationKind::Incomplete && (x.magnitude - (s - 1.0)).abs() < 1e-9));
        prop_assert!(Povm::new(els).is_err());
    }

    #[test]
    fn extremality_is_unitarily_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = haar_unitary(&mut r, 2);
        for set in [povm::alice_ideal(), povm::bob_ideal()] {
            for p in set.conjugated(&u).povms() {
                let rep = check_extremality(p);
                prop_assert_eq!(rep.extremal, Some(true));
                prop_assert_eq!(rep.matrix_rank_found, 3);
            }
        }
        let t = povm::trine_vectors();
        let six: Vec<ComplexMatrix> = t[0].iter().chain(&t[1]).map(|v| v.projector().scale_real(1.0 / 3.0)).collect();
        let six = Povm::new(six).unwrap().conjugated(&u);
        let rep = check_extremality(&six);
        prop_assert_eq!(rep.extremal, Some(false));
        prop_assert_eq!(rep.matrix_rank_found, 4);
    }

    #[test]
    fn conjugation_preserves_validity(seed in any::<u64>(), d in 2usize..5) {
        let mut r = rng(seed);
        let u = haar_unitary(&mut r, d);
        let set = random_measurement_set(&mut r, d);
        let c = set.conjugated(&u);
        for p in c.povms() {
            prop_assert!(validate(p.elements(), ValidateOptions::default()).is_empty());
        }
    }

    #[test]
    fn projection_recovers_rotated_embedding(seed in any::<u64>(), d in 3usize..6) {
        let mut r = rng(seed);
        let u = haar_unitary(&mut r, d);
        let mut pi = ComplexMatrix::zeros(d, d);
        pi[(0, 0)] = linalg::ONE;
        pi[(1, 1)] = linalg::ONE;
        let proj = &(&u * &pi) * &u.adjoint();
        let mut complement = ComplexMatrix::identity(d);
        complement[(0, 0)] = linalg::ZERO;
        complement[(1, 1)] = linalg::ZERO;
        let trine = povm::alice_ideal();
        let els: Vec<ComplexMatrix> = (0..3)
            .map(|a| {
                let e = &trine.element(0, a).embed(d) + &complement.scale_real(1.0 / 3.0);
                &(&u * &e) * &u.adjoint()
            })
            .collect();
        let p = Povm::new(els).unwrap();
        let compressed = povm::project_povm(&p, &proj).unwrap();
        let sum = linalg::sum(compressed.iter()).unwrap();
        prop_assert!(sum.is_identity(1e-10));
        let rep = check_extremality(&Povm::new(compressed).unwrap());
        prop_assert_eq!(rep.extremal, Some(true));
    }
}

#[test]
fn ideal_sets_are_complete_and_rank_one() {
    for set in [povm::alice_ideal(), povm::bob_ideal()] {
        for p in set.povms() {
            assert!(validate(p.elements(), ValidateOptions::default()).is_empty());
            let rep = check_extremality(p);
            assert!(rep.applicable);
            assert_eq!(rep.element_ranks, vec![1, 1, 1]);
        }
    }
}
