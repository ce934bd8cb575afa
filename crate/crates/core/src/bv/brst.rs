//! BRST reduction of the BV differential, classical limit and flatness of twisted superconnections.

use serde::Serialize;

use super::expr::{DerivMode, Expr, ExprDerivation};
use super::fields::{Superfield, SuperfieldConfig};
use super::functional::{curvature, delta_images, LocalFunctional, Twist};
use crate::derham::{Form, GrassPoly};
use crate::error::{Error, Result};
use crate::koszul::scalar::{parity_sign, Scalar};
use crate::liealg::Mode;

/// `x - y`, tolerating zero operands of another value kind.
pub fn form_residual(x: &Form, y: &Form) -> Result<Form> {
    if x.is_zero() {
        return Ok(y.neg());
    }
    if y.is_zero() {
        return Ok(x.clone());
    }
    x.sub(y)
}

/// Action of an adjoint expression on a `B`-side expression with plain signs.
fn act(mode: Mode, l: Expr, r: Expr) -> Expr {
    match mode {
        Mode::Ordinary => Expr::plain_br(l, r),
        Mode::Canonical => Expr::plain_coad(l, r),
    }
}

/// BRST differential on the non-antifield components, as a bigraded `(0, 1)` derivation.
pub fn brst_derivation(cfg: &SuperfieldConfig) -> Result<ExprDerivation> {
    let m = cfg.m;
    let mode = cfg.mode();
    let cat = &cfg.catalog;
    let comp = |n: &str| Expr::comp(cat, n);
    let idx = |n: &str| cat.iter().position(|f| f.name == n).expect("catalog field");
    let (c, a) = (comp("c")?, comp("a")?);
    let cov = |x: Expr| Expr::sum(vec![Expr::d(x.clone()), act(mode, a.clone(), x)]);
    let mut comps = vec![
        (idx("a"), Expr::sum(vec![Expr::d(c.clone()), Expr::plain_br(a.clone(), c.clone())])),
        (idx("c"), Expr::scale(Scalar::rat(-1, 2), Expr::plain_br(c.clone(), c.clone()))),
    ];
    // [X, c] = -[c, X] for the ghost-number-k, degree m-2-k fields: (-1)^k [tau_k, c] = -[c, tau_k]
    let tau = |k: usize| -> Result<Expr> {
        if k == 0 {
            comp("B")
        } else if k <= m - 2 {
            comp(&format!("tau{k}"))
        } else {
            Ok(Expr::zero())
        }
    };
    for k in 0..=m - 2 {
        let x = tau(k)?;
        let mut img = vec![Expr::sign(-1, act(mode, c.clone(), x))];
        let next = tau(k + 1)?;
        if !next.is_zero() {
            img.push(cov(next));
        }
        let name = if k == 0 { "B".to_string() } else { format!("tau{k}") };
        comps.push((idx(&name), Expr::sum(img)));
    }
    for (i, f) in cat.iter().enumerate() {
        if f.is_antifield {
            comps.push((i, Expr::zero()));
        }
    }
    Ok(ExprDerivation {
        mode: DerivMode::Bigraded(0, 1),
        a: None,
        b: None,
        comps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentResidual {
    pub field: String,
    /// The compared quantity itself is nonzero.
    pub nontrivial: bool,
    pub zero: bool,
    pub witness: Option<String>,
}

/// `sigma_phi (-1)^j (delta S)_j` against the BRST image for every field with antifields set to zero.
pub fn brst_reduction(cfg: &SuperfieldConfig) -> Result<Vec<ComponentResidual>> {
    let cfg = cfg.without_antifields()?;
    let m = cfg.m;
    let (ia, ib) = delta_images(cfg.mode(), m, &Twist::None)?;
    let (da, db) = (ia.eval(&cfg)?, ib.eval(&cfg)?);
    let brst = brst_derivation(&cfg)?;
    let mut out = Vec::new();
    for (i, f) in cfg.catalog.iter().enumerate() {
        if f.is_antifield {
            continue;
        }
        let sup = match f.superfield {
            Superfield::A => &da,
            Superfield::B => &db,
        };
        let j = f.form_degree;
        let lhs = sup.degree_part(j).scale(&Scalar::int((f.sigma * parity_sign(j as i64)) as i64));
        let img = brst.apply(&Expr::Comp { index: i, deg: j, gh: f.ghost }, m)?.eval(&cfg)?;
        let r = form_residual(&lhs, &img)?;
        out.push(ComponentResidual {
            field: f.name.clone(),
            nontrivial: !img.is_zero(),
            zero: r.is_zero(),
            witness: r.witness(),
        });
    }
    Ok(out)
}

/// `delta_BRST^2` on every field, minus the expected curvature terms `[F_A, tau_{k+2}]`.
pub fn brst_square(cfg: &SuperfieldConfig) -> Result<Vec<ComponentResidual>> {
    let cfg = cfg.without_antifields()?;
    let m = cfg.m;
    let brst = brst_derivation(&cfg)?;
    let cat = &cfg.catalog;
    let a = Expr::comp(cat, "a")?;
    let fa = Expr::sum(vec![
        Expr::d(a.clone()),
        Expr::scale(Scalar::rat(1, 2), Expr::plain_br(a.clone(), a)),
    ]);
    let mut out = Vec::new();
    for (i, f) in cat.iter().enumerate() {
        if f.is_antifield {
            continue;
        }
        let e = Expr::Comp {
            index: i,
            deg: f.form_degree,
            gh: f.ghost,
        };
        let twice = brst.apply(&brst.apply(&e, m)?, m)?.eval(&cfg)?;
        let k = if f.name == "B" {
            Some(0)
        } else {
            f.name.strip_prefix("tau").and_then(|s| s.parse::<usize>().ok())
        };
        let expected = match k {
            Some(k) if k + 2 <= m - 2 => {
                act(cfg.mode(), fa.clone(), Expr::comp(cat, &format!("tau{}", k + 2))?).eval(&cfg)?
            }
            _ => Form::scalar_zero(&cfg.domain),
        };
        let r = form_residual(&twice, &expected)?;
        out.push(ComponentResidual {
            field: f.name.clone(),
            nontrivial: !twice.is_zero(),
            zero: r.is_zero(),
            witness: r.witness(),
        });
    }
    Ok(out)
}

/// `S` with antifields set to zero minus `int <B, F_A>`.
pub fn classical_reduction(cfg: &SuperfieldConfig) -> Result<GrassPoly> {
    let cfg = cfg.without_antifields()?;
    let s = LocalFunctional::bf_action().eval(&cfg)?;
    let cat = &cfg.catalog;
    let a = Expr::comp(cat, "a")?;
    let fa = Expr::sum(vec![
        Expr::d(a.clone()),
        Expr::scale(Scalar::rat(1, 2), Expr::plain_br(a.clone(), a)),
    ]);
    let classical = super::expr::integrate_pair(&cfg, &Expr::comp(cat, "B")?, &fa)?;
    Ok(s.sub(&classical))
}

/// `C = a + sum lambda_k B^k`; for odd `m` checks `delta_mu C = -dC - 1/2 [[C, C]]`,
/// for even `m` checks `d_mu a = B_lambda B_lambda`.
pub fn check_flat_connection(cfg: &SuperfieldConfig, lambda: &[(usize, Scalar)]) -> Result<Form> {
    let m = cfg.m;
    if cfg.mode() == Mode::Canonical {
        return Err(Error::Unsupported("twisted superconnections need the ordinary variant".into()));
    }
    let b = Expr::b();
    let series = Expr::sum(lambda.iter().map(|(k, l)| Expr::scale(l.clone(), Expr::pow(&b, *k))).collect());
    let mu = super::functional::mu_from_lambda(lambda);
    if m % 2 == 1 {
        if lambda.iter().any(|(k, _)| k % 2 == 0) {
            return Err(Error::Parity("odd m needs odd powers in C".into()));
        }
        let c = Expr::sum(vec![Expr::a(), series]);
        // a single linear term is the cosmological twist, which needs no associative product
        let twist = match lambda {
            [(1, k)] => Twist::Kappa2(k * k),
            _ => Twist::Mu(mu),
        };
        let (ia, ib) = delta_images(cfg.mode(), m, &twist)?;
        let der = ExprDerivation::on_superfields(DerivMode::Total(1), ia, ib);
        let lhs = der.apply(&c, m)?;
        let rhs = Expr::sum(vec![
            Expr::sign(-1, Expr::d(c.clone())),
            Expr::scale(Scalar::rat(-1, 2), Expr::br(c.clone(), c)),
        ]);
        form_residual(&lhs.eval(cfg)?, &rhs.eval(cfg)?)
    } else {
        let (ia, _) = delta_images(cfg.mode(), m, &Twist::Mu(mu))?;
        // the mu-part of the twisted differential on a
        let part = Expr::sum(vec![ia, Expr::sign(-1, curvature())]);
        let square = Expr::prod(series.clone(), series);
        form_residual(&part.eval(cfg)?, &square.eval(cfg)?)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bv::fields::random_config;
    use crate::derham::{AlgebraOps, Key, RandomSpec, ValueKind};
    use crate::liealg::LieAlgebraData;

    fn spec() -> RandomSpec {
        RandomSpec {
            terms: 3,
            grassmann: 16,
            max_theta: 1,
            zero_bias: 0.6,
            ..RandomSpec::default()
        }
    }

    fn cfg(alg: LieAlgebraData, m: usize, seed: u64) -> SuperfieldConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_config(&mut rng, m, Arc::new(AlgebraOps::new(Arc::new(alg))), &spec()).unwrap()
    }

    #[test]
    fn reduction_matches_brst() {
        for (alg, m) in [
            (LieAlgebraData::so3(), 3),
            (LieAlgebraData::so3(), 4),
            (LieAlgebraData::so3(), 5),
            (LieAlgebraData::aff1(), 4),
        ] {
            let c = cfg(alg, m, 5 + m as u64);
            let rs = brst_reduction(&c).unwrap();
            for r in &rs {
                assert!(r.zero, "m = {m} {}: {:?}", r.field, r.witness);
            }
            assert!(rs.iter().filter(|r| r.nontrivial).count() >= 3, "m = {m}");
        }
    }

    #[test]
    fn brst_squares_to_curvature() {
        for (alg, m) in [(LieAlgebraData::so3(), 3), (LieAlgebraData::so3(), 4), (LieAlgebraData::so3(), 6)] {
            let c = cfg(alg, m, 11 + m as u64);
            let rs = brst_square(&c).unwrap();
            for r in &rs {
                assert!(r.zero, "m = {m} {}: {:?}", r.field, r.witness);
            }
            let b = rs.iter().find(|r| r.field == "B").unwrap();
            assert_eq!(b.nontrivial, m >= 4, "m = {m}");
        }
    }

    #[test]
    fn brst_on_shell() {
        let m = 4;
        let c = cfg(LieAlgebraData::so3(), m, 17);
        let mut flat = Form::zero(&c.domain, ValueKind::Adjoint, 3);
        flat.add_term(Key::new(0, 0b0001, 2, 0), Scalar::int(2));
        flat.add_term(Key::new(0, 0b0100, 2, 0), Scalar::rat(-1, 3));
        let c = c.with_components(&[("a", flat)]).unwrap();
        let brst = brst_derivation(&c).unwrap();
        for (i, f) in c.catalog.iter().enumerate().filter(|(_, f)| !f.is_antifield) {
            let e = Expr::Comp {
                index: i,
                deg: f.form_degree,
                gh: f.ghost,
            };
            assert!(brst.apply(&brst.apply(&e, m).unwrap(), m).unwrap().eval(&c).unwrap().is_zero());
        }
    }

    #[test]
    fn classical_limit() {
        for m in 2..=4 {
            let mut hits = 0;
            for seed in 0..6 {
                let mut rng = ChaCha8Rng::seed_from_u64(23 + 10 * m as u64 + seed);
                let rich = RandomSpec { terms: 8, ..spec() };
                let ops = Arc::new(AlgebraOps::new(Arc::new(LieAlgebraData::so3())));
                let c = random_config(&mut rng, m, ops, &rich).unwrap();
                let s = LocalFunctional::bf_action().eval(&c.without_antifields().unwrap()).unwrap();
                hits += usize::from(!s.is_zero());
                assert!(classical_reduction(&c).unwrap().is_zero());
            }
            assert!(hits > 0, "m = {m}");
        }
    }

    #[test]
    fn twisted_connection_is_flat() {
        let c = cfg(LieAlgebraData::gl(2).unwrap(), 3, 29);
        let r = check_flat_connection(&c, &[(1, Scalar::int(2)), (3, Scalar::rat(1, 2))]).unwrap();
        assert!(r.is_zero(), "{:?}", r.witness());
        let c = cfg(LieAlgebraData::gl(2).unwrap(), 4, 31);
        let r = check_flat_connection(&c, &[(1, Scalar::int(1)), (2, Scalar::int(-3))]).unwrap();
        assert!(r.is_zero(), "{:?}", r.witness());
    }
}
