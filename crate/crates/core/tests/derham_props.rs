use std::sync::Arc;

use bvkit::derham::{
    boundary_pushforward, laws, pushforward, random_form, AlgebraOps, Bilinear, CoordKind, Domain, FaceConvention,
    Fiber, Form, Key, RandomSpec, ValueKind,
};
use bvkit::koszul::scalar::Scalar;
use bvkit::liealg::LieAlgebraData;
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

fn spec(max_freq: i8) -> RandomSpec {
    RandomSpec {
        max_freq,
        terms: 3,
        grassmann: 6,
        max_theta: 2,
        zero_bias: 0.3,
        ..RandomSpec::default()
    }
}

fn assert_zero(f: &Form, what: &str) {
    assert!(f.is_zero(), "{what}: {:?}", f.witness());
}

fn check_law(law: laws::Law, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for fb in laws::fibrations() {
        let inst = law(&mut rng, &fb).unwrap();
        assert_zero(&inst.residual, fb.name);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn projection_left(seed in any::<u64>()) {
        check_law(laws::projection_left, seed);
    }

    #[test]
    fn projection_right(seed in any::<u64>()) {
        check_law(laws::projection_right, seed);
    }

    #[test]
    fn generalized_stokes(seed in any::<u64>()) {
        check_law(laws::generalized_stokes, seed);
    }

    #[test]
    fn pullback_commutes_with_pushforward(seed in any::<u64>()) {
        check_law(laws::pullback_commutes, seed);
    }

    #[test]
    fn iterated_pushforward(seed in any::<u64>()) {
        check_law(laws::iterated_pushforward, seed);
    }

    #[test]
    fn odd_derivation_sign(seed in any::<u64>()) {
        check_law(laws::delta_push, seed);
    }
}

#[test]
fn box_fubini() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let total = Domain::with_unit_fiber(1, &Domain::torus(2));
    for _ in 0..20 {
        let a = laws::random_on(&mut rng, &total);
        let two = pushforward(&a, &Fiber::Box(vec![0, 1])).unwrap();
        let one = pushforward(&pushforward(&a, &Fiber::Box(vec![0])).unwrap(), &Fiber::Box(vec![0])).unwrap();
        assert_zero(&laws::diff(&two, &one).unwrap(), "box");
    }
}

fn lie_form(rng: &mut ChaCha8Rng, d: &Domain, alg: &LieAlgebraData, degree: usize) -> Form {
    random_form(rng, d, ValueKind::Adjoint, alg.dim, degree, 0, &spec(2))
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn exterior_calculus(seed in any::<u64>(), m in 2usize..=4, use_gl in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alg = if use_gl { LieAlgebraData::gl(2).unwrap() } else { LieAlgebraData::so3() };
        let br = Bilinear::bracket(&alg);
        let d = Domain::torus(m);
        let deg = rng.gen_range(0..=m);
        let w = lie_form(&mut rng, &d, &alg, deg);
        assert_zero(&w.d().d(), "d^2");
        let top = lie_form(&mut rng, &d, &alg, m - 1);
        for c in 0..alg.dim {
            assert!(top.d().component(c).integrate().unwrap().is_zero());
        }
        let a = lie_form(&mut rng, &d, &alg, 1);
        let f = a.d().add(&a.product(&a, &br, false).unwrap().scale(&Scalar::rat(1, 2))).unwrap();
        let bianchi = f.d().add(&a.product(&f, &br, false).unwrap()).unwrap();
        assert_zero(&bianchi, "Bianchi");
        let cov = |x: &Form| x.d().add(&a.product(x, &br, false).unwrap()).unwrap();
        let lhs = cov(&cov(&w));
        let rhs = f.product(&w, &br, false).unwrap();
        assert_zero(&laws::diff(&lhs, &rhs).unwrap(), "d_A^2 = [F, .]");
    }
}

#[test]
fn stokes_bianchi_integrand() {
    let alg = LieAlgebraData::so3();
    let ops = AlgebraOps::new(Arc::new(alg.clone()));
    let d = Domain::torus(3);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = lie_form(&mut rng, &d, &alg, 1);
        let b = lie_form(&mut rng, &d, &alg, 1);
        let f = a.d().add(&a.product(&a, &ops.bracket, false).unwrap().scale(&Scalar::rat(1, 2))).unwrap();
        let dab = b.d().add(&a.product(&b, &ops.bracket, false).unwrap()).unwrap();
        assert!(f.product(&dab, &ops.pair, false).unwrap().integrate().unwrap().is_zero());
    }
}

#[test]
fn simplex_face_stokes_example() {
    // t_1 dt_2 over the two-simplex: Stokes against the direct integral of d(t_1 dt_2) = dt_1 dt_2
    let d = Domain::new(vec![CoordKind::Unit, CoordKind::Unit]);
    let mut w = Form::scalar_zero(&d);
    let mut k = Key::new(0, 0b10, 0, 0);
    k.pow[0] = 1;
    w.add_term(k, Scalar::one());
    let fiber = Fiber::Simplex(vec![0, 1]);
    let inner = pushforward(&w.d(), &fiber).unwrap();
    // orientation dt_2 ^ dt_1 makes dt_1 dt_2 integrate to -1/2
    assert_eq!(inner.terms.values().next(), Some(&Scalar::rat(-1, 2)));
    let bd = boundary_pushforward(&w, &fiber, FaceConvention::NormalFirst).unwrap();
    assert_eq!(bd, inner);
}
