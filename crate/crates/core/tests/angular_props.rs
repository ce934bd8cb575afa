use bvkit::angular::{check_angular, SphereAlgebra};
use bvkit::koszul::scalar::Scalar;
use bvkit::koszul::{apply_derivation, DerivationRule, GradedElement};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Random polynomial in `x`, `Dx`, `F` and optionally `rho` with small integer coefficients.
fn random_element(rng: &mut ChaCha8Rng, alg: &SphereAlgebra, terms: usize, with_rho: bool) -> GradedElement {
    let n = alg.n;
    let mut out = alg.zero();
    for _ in 0..terms {
        let mut word = Vec::new();
        for _ in 0..rng.gen_range(0..=3) {
            word.push(alg.x_index(rng.gen_range(0..n)));
        }
        for _ in 0..rng.gen_range(0..=n.min(3)) {
            word.push(alg.dx_index(rng.gen_range(0..n)));
        }
        if n > 1 && rng.gen_bool(0.3) {
            let a = rng.gen_range(0..n - 1);
            word.push(alg.f_index(a, rng.gen_range(a + 1..n)));
        }
        if with_rho {
            for _ in 0..rng.gen_range(0..=n) {
                word.push(alg.rho_index(rng.gen_range(0..n)));
            }
        }
        let c = Scalar::int(rng.gen_range(-3..=3));
        out = out.add(&GradedElement::from_word(alg.universe(), &word, c)).unwrap();
    }
    out
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn normal_form_is_canonical(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = SphereAlgebra::new(n).unwrap();
        let w = random_element(&mut rng, &alg, 4, false);
        let nf = alg.normal_form(&w).unwrap();
        prop_assert_eq!(alg.normal_form(&nf).unwrap(), nf.clone());
        // the leading-term rewrite stays in the same class
        prop_assert_eq!(alg.normal_form(&alg.leading_rewrite(&w).unwrap()).unwrap(), nf);
        // ideal elements reduce to zero and d preserves the ideal
        let g = random_element(&mut rng, &alg, 3, false);
        for c in [alg.sphere_constraint().unwrap(), alg.tangency_constraint().unwrap()] {
            let inside = g.mul(&c).unwrap();
            prop_assert!(alg.normal_form(&inside).unwrap().is_zero());
            prop_assert!(alg.normal_form(&alg.d(&inside).unwrap()).unwrap().is_zero());
        }
    }

    #[test]
    fn d_squared_is_curvature_action(seed in any::<u64>(), n in 2usize..=4) {
        // d^2 x = F x and d^2 Dx = F Dx, the Bianchi-consistent rule set
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = SphereAlgebra::new(n).unwrap();
        let a = rng.gen_range(0..n);
        let dd = alg.d(&alg.d(&alg.x(a)).unwrap()).unwrap();
        let mut fx = alg.zero();
        let mut fdx = alg.zero();
        for b in 0..n {
            fx = fx.add(&alg.f(a, b).mul(&alg.x(b)).unwrap()).unwrap();
            fdx = fdx.add(&alg.f(a, b).mul(&alg.dx(b)).unwrap()).unwrap();
        }
        prop_assert_eq!(dd, fx);
        prop_assert_eq!(alg.d(&alg.d(&alg.dx(a)).unwrap()).unwrap(), fdx);
    }

    #[test]
    fn trace_identity(seed in any::<u64>()) {
        // int <X rho, d/drho> f = tr X int f
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = SphereAlgebra::new(4).unwrap();
        let top = GradedElement::from_word(alg.universe(), &[3, 1, 0, 2], Scalar::one());
        let f = random_element(&mut rng, &alg, 6, true)
            .add(&random_element(&mut rng, &alg, 2, false).mul(&top).unwrap())
            .unwrap();
        let x: Vec<Vec<i64>> = (0..4).map(|_| (0..4).map(|_| rng.gen_range(-4..=4)).collect()).collect();
        let mut lhs = alg.zero();
        for a in 0..4 {
            let da = apply_derivation(&DerivationRule::partial(alg.universe(), alg.rho_index(a)), &f).unwrap();
            for b in 0..4 {
                let term = alg.rho(b).mul(&da).unwrap().scale(&Scalar::int(x[a][b]));
                lhs = lhs.add(&term).unwrap();
            }
        }
        let trace: i64 = (0..4).map(|a| x[a][a]).sum();
        let left = alg.berezin(&lhs).unwrap();
        let right = alg.berezin(&f).unwrap().scale(&Scalar::int(trace));
        prop_assert_eq!(left, right);
    }
}

#[test]
fn angular_identities_up_to_six() {
    for n in 2..=6 {
        let r = check_angular(n).unwrap();
        assert!(r.pass(), "{r:?}");
        assert!(r.dpsi.nontrivial && r.dpsi.per_order.iter().all(|&b| b));
    }
}
