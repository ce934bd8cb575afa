//! Local functionals, super functional derivatives and the super antibracket.

use rand::Rng;
use serde::Serialize;

use super::expr::{integrate_pair, pair_forms, pull, Expr, Shape};
use super::fields::{Superfield, SuperfieldConfig};
use crate::derham::{random_form, Form, GrassPoly, RandomSpec};
use crate::error::{Error, Result};
use crate::koszul::scalar::{parity_sign, Scalar, Q};
use crate::liealg::Mode;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    /// BF action (ordinary or canonical by algebra mode).
    S,
    /// Cosmological term.
    S3,
    /// `(1/k) int tr B^k`.
    O(usize),
    /// `int <a, B>`.
    Small,
    Custom(String),
}

/// `int <x, y>_dot` times a coefficient.
#[derive(Clone, Debug)]
pub struct Density {
    pub coeff: Scalar,
    pub x: Expr,
    pub y: Expr,
}

#[derive(Clone, Debug)]
pub struct LocalFunctional {
    pub tag: Tag,
    pub terms: Vec<Density>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `F_a = d a + 1/2 [[a, a]]`.
pub fn curvature() -> Expr {
    Expr::sum(vec![Expr::d(Expr::a()), Expr::scale(Scalar::rat(1, 2), Expr::br(Expr::a(), Expr::a()))])
}

/// `d_a B`, with the coadjoint action in canonical mode.
pub fn cov_deriv_b(mode: Mode) -> Expr {
    let action = match mode {
        Mode::Ordinary => Expr::br(Expr::a(), Expr::b()),
        Mode::Canonical => Expr::coad(Expr::a(), Expr::b()),
    };
    Expr::sum(vec![Expr::d(Expr::b()), action])
}

/// Unit of the associative algebra as a constant 0-form.
pub fn unit_expr(cfg: &SuperfieldConfig) -> Result<Expr> {
    let unit = cfg
        .ops
        .alg
        .unit()
        .ok_or_else(|| Error::Algebra(format!("{} has no unit; traces need gl(N)", cfg.ops.alg.name)))?;
    let mut f = Form::zero(&cfg.domain, crate::derham::ValueKind::Adjoint, cfg.ops.dim());
    for (a, q) in unit.iter().enumerate() {
        if !q.is_zero() {
            f.add_term(crate::derham::Key::new(0, 0, a as u16, 0), Scalar::from_q(q.clone()));
        }
    }
    Ok(Expr::constant(f, 0, 0))
}

impl LocalFunctional {
    pub fn bf_action() -> LocalFunctional {
        LocalFunctional {
            tag: Tag::S,
            terms: vec![Density {
                coeff: Scalar::one(),
                x: Expr::b(),
                y: curvature(),
            }],
        }
    }

    pub fn cosmological() -> LocalFunctional {
        LocalFunctional {
            tag: Tag::S3,
            terms: vec![Density {
                coeff: Scalar::rat(1, 6),
                x: Expr::b(),
                y: Expr::br(Expr::b(), Expr::b()),
            }],
        }
    }

    /// `(1/k) int tr B^k`, the trace taken as pairing with the unit.
    pub fn trace_power(cfg: &SuperfieldConfig, k: usize) -> Result<LocalFunctional> {
        if k == 0 {
            return Err(Error::Range("trace power needs k >= 1".into()));
        }
        Ok(LocalFunctional {
            tag: Tag::O(k),
            terms: vec![Density {
                coeff: Scalar::rat(1, k as i64),
                x: unit_expr(cfg)?,
                y: Expr::pow(&Expr::b(), k),
            }],
        })
    }

    pub fn small_s() -> LocalFunctional {
        LocalFunctional {
            tag: Tag::Small,
            terms: vec![Density {
                coeff: Scalar::one(),
                x: Expr::a(),
                y: Expr::b(),
            }],
        }
    }

    /// `int tr(E B^2)` with `E` a fixed matrix unit: not trace-cyclic.
    pub fn non_cyclic(cfg: &SuperfieldConfig, e_index: usize) -> Result<LocalFunctional> {
        let mut f = Form::zero(&cfg.domain, crate::derham::ValueKind::Adjoint, cfg.ops.dim());
        f.add_term(crate::derham::Key::new(0, 0, e_index as u16, 0), Scalar::one());
        Ok(LocalFunctional {
            tag: Tag::Custom(format!("tr(E{e_index} B^2)")),
            terms: vec![Density {
                coeff: Scalar::one(),
                x: Expr::constant(f, 0, 0),
                y: Expr::prod(Expr::b(), Expr::b()),
            }],
        })
    }

    pub fn linear_combination(parts: &[(Scalar, LocalFunctional)], name: &str) -> LocalFunctional {
        let mut terms = Vec::new();
        for (c, f) in parts {
            for t in &f.terms {
                terms.push(Density {
                    coeff: &t.coeff * c,
                    x: t.x.clone(),
                    y: t.y.clone(),
                });
            }
        }
        LocalFunctional {
            tag: Tag::Custom(name.into()),
            terms,
        }
    }

    /// Total degree `|x| + |y| - m`.
    pub fn total_degree(&self, m: usize) -> Option<i32> {
        let t = self.terms.first()?;
        Some(t.x.tdeg(m)? + t.y.tdeg(m)? - m as i32)
    }

    pub fn depends_on(&self, s: Superfield) -> bool {
        self.terms.iter().any(|t| t.x.count(s) + t.y.count(s) > 0)
    }

    pub fn eval(&self, cfg: &SuperfieldConfig) -> Result<GrassPoly> {
        self.eval_with(cfg, &cfg.a, &cfg.b)
    }

    pub fn eval_with(&self, cfg: &SuperfieldConfig, a: &Form, b: &Form) -> Result<GrassPoly> {
        let mut acc = GrassPoly::default();
        for t in &self.terms {
            let x = t.x.eval_with(cfg, a, b)?;
            let y = t.y.eval_with(cfg, a, b)?;
            acc = acc.add(&pair_forms(cfg, &x, &y)?.integrate()?.scale(&t.coeff));
        }
        Ok(acc)
    }

    /// Super functional derivative as an expression.
    pub fn derivative(&self, wrt: Superfield, side: Side, sh: &Shape) -> Result<Expr> {
        let m = sh.m;
        let mut out = Vec::new();
        for t in &self.terms {
            let (dx, dy) = (
                t.x.tdeg(m).ok_or_else(|| Error::Parity("zero density".into()))?,
                t.y.tdeg(m).ok_or_else(|| Error::Parity("zero density".into()))?,
            );
            pull(Expr::scale(t.coeff.clone(), t.x.clone()), &t.y, wrt, sh, &mut out)?;
            let swapped = Expr::scale(&t.coeff * &Scalar::int(parity_sign((dx * dy) as i64) as i64), t.y.clone());
            pull(swapped, &t.x, wrt, sh, &mut out)?;
        }
        let right = Expr::sum(out);
        Ok(match side {
            Side::Right => right,
            Side::Left => {
                let Some(f) = self.total_degree(m) else { return Ok(Expr::zero()) };
                let rho = field_degree(wrt, m);
                let r = f + m as i32 - rho;
                Expr::sign(parity_sign((r * rho) as i64), right)
            }
        })
    }
}

pub fn field_degree(s: Superfield, m: usize) -> i32 {
    match s {
        Superfield::A => 1,
        Superfield::B => m as i32 - 2,
    }
}

/// `(F, G) = int <d_r F/dB, d_l G/da> - (-1)^m int <d_r F/da, d_l G/dB>`.
pub fn sbracket(f: &LocalFunctional, g: &LocalFunctional, cfg: &SuperfieldConfig) -> Result<GrassPoly> {
    let sh = Shape::of(cfg);
    let rb = f.derivative(Superfield::B, Side::Right, &sh)?;
    let la = g.derivative(Superfield::A, Side::Left, &sh)?;
    let ra = f.derivative(Superfield::A, Side::Right, &sh)?;
    let lb = g.derivative(Superfield::B, Side::Left, &sh)?;
    let first = if rb.is_zero() || la.is_zero() {
        GrassPoly::default()
    } else {
        integrate_pair(cfg, &rb, &la)?
    };
    let second = if ra.is_zero() || lb.is_zero() {
        GrassPoly::default()
    } else {
        integrate_pair(cfg, &ra, &lb)?
    };
    Ok(first.sub(&second.scale(&Scalar::int(parity_sign(cfg.m as i64) as i64))))
}

/// Random test superform of the same total degree and kind as a superfield.
pub fn random_test_form<R: Rng>(rng: &mut R, cfg: &SuperfieldConfig, wrt: Superfield, spec: &RandomSpec) -> Form {
    let sh = Shape::of(cfg);
    let (kind, tdeg) = match wrt {
        Superfield::A => (crate::derham::ValueKind::Adjoint, 1),
        Superfield::B => (sh.b_kind(), cfg.m as i32 - 2),
    };
    let mut f = Form::zero(&cfg.domain, kind, cfg.ops.dim());
    for deg in 0..=cfg.m as i32 {
        let part = random_form(rng, &cfg.domain, kind, cfg.ops.dim(), deg as usize, tdeg - deg, spec);
        f.add_assign(&part).expect("same kind");
    }
    f
}

/// Linear coefficient of `t -> F(s + t rho)` by exact Lagrange interpolation.
pub fn directional_derivative(f: &LocalFunctional, cfg: &SuperfieldConfig, wrt: Superfield, rho: &Form) -> Result<GrassPoly> {
    let n = f
        .terms
        .iter()
        .map(|t| t.x.count(wrt) + t.y.count(wrt))
        .max()
        .unwrap_or(0);
    if n == 0 {
        return Ok(GrassPoly::default());
    }
    let nodes: Vec<i64> = (0..=n as i64).collect();
    let mut acc = GrassPoly::default();
    for (k, &tk) in nodes.iter().enumerate() {
        let shifted = |base: &Form| -> Result<Form> { base.add(&rho.scale(&Scalar::int(tk))) };
        let val = match wrt {
            Superfield::A => f.eval_with(cfg, &shifted(&cfg.a)?, &cfg.b)?,
            Superfield::B => f.eval_with(cfg, &cfg.a, &shifted(&cfg.b)?)?,
        };
        acc = acc.add(&val.scale(&Scalar::from_q(lagrange_derivative_at_zero(&nodes, k))));
    }
    Ok(acc)
}

/// `L_k'(0)` for the Lagrange basis on integer nodes.
fn lagrange_derivative_at_zero(nodes: &[i64], k: usize) -> Q {
    let xk = nodes[k];
    let mut denom = Q::one();
    for (j, &xj) in nodes.iter().enumerate() {
        if j != k {
            denom = &denom * &Q::int(xk - xj);
        }
    }
    // derivative at 0 of prod_{j != k} (x - x_j)
    let mut total = Q::zero();
    for (i, _) in nodes.iter().enumerate() {
        if i == k {
            continue;
        }
        let mut p = Q::one();
        for (j, &xj) in nodes.iter().enumerate() {
            if j != k && j != i {
                p = &p * &Q::int(-xj);
            }
        }
        total = &total + &p;
    }
    &total / &denom
}

/// Compares a computed derivative against the interpolation oracle along `rho`.
pub fn derivative_residual(
    f: &LocalFunctional,
    cfg: &SuperfieldConfig,
    wrt: Superfield,
    side: Side,
    rho: &Form,
) -> Result<GrassPoly> {
    let sh = Shape::of(cfg);
    let d = f.derivative(wrt, side, &sh)?;
    let oracle = directional_derivative(f, cfg, wrt, rho)?;
    let computed = if d.is_zero() {
        GrassPoly::default()
    } else {
        let df = d.eval(cfg)?;
        match side {
            Side::Right => pair_forms(cfg, &df, rho)?.integrate()?,
            Side::Left => pair_forms(cfg, rho, &df)?.integrate()?,
        }
    };
    Ok(computed.sub(&oracle))
}

/// Twisting data for the BV differential.
#[derive(Clone, Debug, PartialEq)]
pub enum Twist {
    None,
    /// Cosmological twist with parameter `kappa^2`.
    Kappa2(Scalar),
    /// `mu_i` coefficients, index `i` the power of `B`.
    Mu(Vec<(usize, Scalar)>),
}

/// `mu = (sum lambda_k x^k)^2` coefficients.
pub fn mu_from_lambda(lambda: &[(usize, Scalar)]) -> Vec<(usize, Scalar)> {
    let mut acc: std::collections::BTreeMap<usize, Scalar> = std::collections::BTreeMap::new();
    for (i, a) in lambda {
        for (j, b) in lambda {
            *acc.entry(i + j).or_default() += &(a * b);
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

/// Images of the superfields under the (possibly twisted) BV differential.
pub fn delta_images(cfg_mode: Mode, m: usize, twist: &Twist) -> Result<(Expr, Expr)> {
    let s = parity_sign(m as i64);
    let mut da = vec![curvature()];
    match twist {
        Twist::None => {}
        Twist::Kappa2(k2) => {
            if m % 2 == 0 {
                return Err(Error::Parity("cosmological twist needs odd m".into()));
            }
            if cfg_mode == Mode::Canonical {
                return Err(Error::Unsupported("cosmological twist needs an invariant metric".into()));
            }
            da.push(Expr::scale(k2 * &Scalar::rat(1, 2), Expr::br(Expr::b(), Expr::b())));
        }
        Twist::Mu(mu) => {
            if cfg_mode == Mode::Canonical {
                return Err(Error::Unsupported("mu twists need the ordinary variant".into()));
            }
            for (i, c) in mu {
                if *i < 2 || (m % 2 == 1 && i % 2 == 1) {
                    return Err(Error::Parity(format!("mu_{i} is not allowed for m = {m}")));
                }
                da.push(Expr::scale(c.clone(), Expr::pow(&Expr::b(), *i)));
            }
        }
    }
    Ok((Expr::sign(s, Expr::sum(da)), Expr::sign(s, cov_deriv_b(cfg_mode))))
}

/// `int delta(density)` for the derivation with the given superfield images.
pub fn delta_functional(f: &LocalFunctional, cfg: &SuperfieldConfig, twist: &Twist) -> Result<GrassPoly> {
    let m = cfg.m;
    let (ia, ib) = delta_images(cfg.mode(), m, twist)?;
    let der = super::expr::ExprDerivation::on_superfields(super::expr::DerivMode::Total(1), ia, ib);
    let mut acc = GrassPoly::default();
    for t in &f.terms {
        let dx = t.x.tdeg(m).ok_or_else(|| Error::Parity("zero density".into()))?;
        let first = der.apply(&t.x, m)?;
        let second = der.apply(&t.y, m)?;
        if !first.is_zero() {
            acc = acc.add(&integrate_pair(cfg, &first, &t.y)?.scale(&t.coeff));
        }
        if !second.is_zero() {
            let s = Scalar::int(parity_sign(dx as i64) as i64);
            acc = acc.add(&integrate_pair(cfg, &t.x, &second)?.scale(&(&t.coeff * &s)));
        }
    }
    Ok(acc)
}

/// Outcome of the three flatness equations for an observable.
#[derive(Clone, Debug, Serialize)]
pub struct FlatReport {
    pub functional: String,
    pub delta_closed: bool,
    pub delta_witness: Option<String>,
    pub laplacian_zero: bool,
    pub self_bracket_zero: bool,
    pub bracket_witness: Option<String>,
    pub flat_invariant: bool,
}

/// `delta O = (S, O) = 0`, formal `Delta O = 0` and `(O, O) = 0` at a configuration.
pub fn check_flat(o: &LocalFunctional, cfg: &SuperfieldConfig) -> Result<FlatReport> {
    let m = cfg.m;
    let deg = o
        .total_degree(m)
        .ok_or_else(|| Error::Parity("zero functional".into()))?;
    if deg % 2 != 0 {
        return Err(Error::Parity(format!("flat observables are even, got total degree {deg}")));
    }
    let s = LocalFunctional::bf_action();
    let delta = sbracket(&s, o, cfg)?;
    let lap = match bv_laplacian_formal(o, cfg) {
        Ok(r) => r.vanishes,
        Err(Error::Unsupported(_)) => false,
        Err(e) => return Err(e),
    };
    let oo = sbracket(o, o, cfg)?;
    let report = FlatReport {
        functional: format!("{:?}", o.tag),
        delta_closed: delta.is_zero(),
        delta_witness: delta.witness(),
        laplacian_zero: lap,
        self_bracket_zero: oo.is_zero(),
        bracket_witness: oo.witness(),
        flat_invariant: false,
    };
    Ok(FlatReport {
        flat_invariant: report.delta_closed && report.laplacian_zero && report.self_bracket_zero,
        ..report
    })
}

/// Ghost numbers carried by a Grassmann-valued result.
pub fn result_degrees(p: &GrassPoly) -> Vec<i32> {
    let mut v: Vec<i32> = p.terms.keys().map(|&(h, _)| h as i32).collect();
    v.dedup();
    v
}

/// Formal BV Laplacian: exact coefficient of the regularized constant.
#[derive(Clone, Debug, Serialize)]
pub struct LaplacianReport {
    pub functional: String,
    /// `(-1)^{gh} binom(m, deg)` per field-antifield pair.
    pub pair_weights: Vec<(String, String)>,
    pub weight_sum: String,
    /// Algebra factor per remaining Lie index.
    pub structure: Vec<String>,
    pub coefficient: Vec<String>,
    pub vanishes: bool,
    pub reason: String,
}

pub fn bv_laplacian_formal(f: &LocalFunctional, cfg: &SuperfieldConfig) -> Result<LaplacianReport> {
    let m = cfg.m;
    let alg = &cfg.ops.alg;
    let d = alg.dim;
    let name = format!("{:?}", f.tag);
    if !f.depends_on(Superfield::A) || !f.depends_on(Superfield::B) {
        return Ok(LaplacianReport {
            functional: name,
            pair_weights: vec![],
            weight_sum: "0".into(),
            structure: vec![],
            coefficient: vec!["0".into(); d],
            vanishes: true,
            reason: "depends on one element of each field-antifield pair only".into(),
        });
    }
    // weights over the a-side fields: component of degree l has ghost 1 - l
    let mut weights = Vec::new();
    let mut wsum = Q::zero();
    for l in 0..=m as i64 {
        let w = &Q::int(parity_sign(1 - l) as i64) * &crate::koszul::scalar::binomial(m as i64, l);
        weights.push((format!("deg {l}"), w.to_string()));
        wsum = &wsum + &w;
    }
    let (structure, reason): (Vec<Q>, String) = match (&f.tag, alg.mode) {
        (Tag::S, Mode::Ordinary) => {
            // diagonal of the totally antisymmetric constants in a pseudo-orthonormal basis
            let t = alg.tilde_f()?;
            let po = alg.pseudo_orthonormalize()?;
            let s = (0..d)
                .map(|b| {
                    (0..d).fold(Q::zero(), |acc, a| {
                        &acc + &(&Q::int(po.diag[a].signum() as i64) * t.get(a, b, a))
                    })
                })
                .collect();
            (s, "tilde-f antisymmetry: no field component pairs with its own antifield".into())
        }
        (Tag::S, Mode::Canonical) => {
            let s = (0..d)
                .map(|j| (0..d).fold(Q::zero(), |acc, i| &acc + alg.structure_constant(j, i, i)))
                .collect();
            (s, "(1-1)^m binomial cancellation times tr ad".into())
        }
        (Tag::Small, _) => (vec![Q::int(d as i64)], "(1-1)^m binomial cancellation times dim g".into()),
        _ => {
            return Err(Error::Unsupported(format!(
                "formal Laplacian is defined on the catalog only, not {name}"
            )))
        }
    };
    let coefficient: Vec<Q> = match (&f.tag, alg.mode) {
        (Tag::S, Mode::Ordinary) => structure.clone(),
        _ => structure.iter().map(|s| s * &wsum).collect(),
    };
    let vanishes = coefficient.iter().all(|c| c.is_zero());
    Ok(LaplacianReport {
        functional: name,
        pair_weights: weights,
        weight_sum: wsum.to_string(),
        structure: structure.iter().map(|q| q.to_string()).collect(),
        coefficient: coefficient.iter().map(|q| q.to_string()).collect(),
        vanishes,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bv::expr::{DerivMode, ExprDerivation};
    use crate::bv::fields::random_config;
    use crate::derham::AlgebraOps;
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

    /// Checks both sides against the oracle; returns how many oracle values were nonzero.
    fn assert_oracle(f: &LocalFunctional, c: &SuperfieldConfig, seed: u64) -> usize {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nontrivial = 0;
        for wrt in [Superfield::A, Superfield::B] {
            let rho = random_test_form(&mut rng, c, wrt, &spec());
            if !directional_derivative(f, c, wrt, &rho).unwrap().is_zero() {
                nontrivial += 1;
            }
            for side in [Side::Left, Side::Right] {
                let r = derivative_residual(f, c, wrt, side, &rho).unwrap();
                assert!(r.is_zero(), "{:?} d/d{wrt:?} {side:?} m={}: {}", f.tag, c.m, r);
            }
        }
        nontrivial
    }

    #[test]
    fn oracle_bf_and_cosmological() {
        for m in 2..=4 {
            let mut hits = [0; 3];
            for seed in 0..4 {
                let c = cfg(LieAlgebraData::so3(), m, 10 * m as u64 + seed);
                hits[0] += assert_oracle(&LocalFunctional::bf_action(), &c, seed);
                hits[1] += assert_oracle(&LocalFunctional::cosmological(), &c, seed);
                hits[2] += assert_oracle(&LocalFunctional::small_s(), &c, seed);
            }
            // the cubic term vanishes identically for even m
            assert!(hits[0] > 0 && hits[2] > 0 && (m % 2 == 0) == (hits[1] == 0), "m = {m}: {hits:?}");
        }
    }

    #[test]
    fn oracle_canonical() {
        for m in 2..=3 {
            let mut hits = [0; 2];
            for seed in 0..4 {
                let c = cfg(LieAlgebraData::aff1(), m, 20 * m as u64 + seed);
                hits[0] += assert_oracle(&LocalFunctional::bf_action(), &c, seed);
                hits[1] += assert_oracle(&LocalFunctional::small_s(), &c, seed);
            }
            assert!(hits.iter().all(|&h| h > 0), "m = {m}: {hits:?}");
        }
    }

    #[test]
    fn oracle_traces() {
        // graded cyclicity kills even traces of an odd B
        for (m, ks) in [(3, [1, 3]), (4, [2, 3])] {
            let mut hits = [0; 3];
            for seed in 0..4 {
                let c = cfg(LieAlgebraData::gl(2).unwrap(), m, 31 + seed);
                for (h, &k) in hits.iter_mut().zip(&ks) {
                    *h += assert_oracle(&LocalFunctional::trace_power(&c, k).unwrap(), &c, seed);
                }
                hits[2] += assert_oracle(&LocalFunctional::non_cyclic(&c, 1).unwrap(), &c, seed);
            }
            assert!(hits.iter().all(|&h| h > 0), "m = {m}: {hits:?}");
        }
    }

    #[test]
    fn master_equation() {
        for m in 2..=4 {
            let c = cfg(LieAlgebraData::so3(), m, 40 + m as u64);
            let s = LocalFunctional::bf_action();
            assert!(!s.eval(&c).unwrap().is_zero() || m != 3);
            assert!(sbracket(&s, &s, &c).unwrap().is_zero(), "m = {m}");
        }
        let c = cfg(LieAlgebraData::aff1(), 3, 47);
        let s = LocalFunctional::bf_action();
        assert!(sbracket(&s, &s, &c).unwrap().is_zero());
    }

    #[test]
    fn delta_squares_to_zero() {
        for (alg, m) in [(LieAlgebraData::so3(), 3), (LieAlgebraData::so3(), 4), (LieAlgebraData::aff1(), 3)] {
            let c = cfg(alg, m, 50 + m as u64);
            let (ia, ib) = delta_images(c.mode(), m, &Twist::None).unwrap();
            let der = ExprDerivation::on_superfields(DerivMode::Total(1), ia.clone(), ib.clone());
            for img in [ia, ib] {
                let dd = der.apply(&img, m).unwrap().eval(&c).unwrap();
                assert!(dd.is_zero(), "m = {m}: {:?}", dd.witness());
            }
        }
    }

    #[test]
    fn delta_two_routes() {
        for m in 2..=4 {
            let mut hits = 0;
            for seed in 0..6 {
                let c = cfg(LieAlgebraData::gl(2).unwrap(), m, 70 + 10 * m as u64 + seed);
                let s = LocalFunctional::bf_action();
                let free = LocalFunctional {
                    tag: Tag::Custom("free".into()),
                    terms: vec![Density {
                        coeff: Scalar::one(),
                        x: Expr::b(),
                        y: Expr::d(Expr::a()),
                    }],
                };
                let mut fs = vec![
                    LocalFunctional::cosmological(),
                    LocalFunctional::small_s(),
                    free,
                    LocalFunctional::non_cyclic(&c, 1).unwrap(),
                ];
                for k in 1..=3 {
                    fs.push(LocalFunctional::trace_power(&c, k).unwrap());
                }
                for f in &fs {
                    let a = delta_functional(f, &c, &Twist::None).unwrap();
                    let b = sbracket(&s, f, &c).unwrap();
                    // int delta(density) = (-1)^m (S, F)
                    let r = a.sub(&b.scale(&Scalar::int(parity_sign(m as i64) as i64)));
                    assert!(r.is_zero(), "m = {m} {:?}: {r}", f.tag);
                    if !a.is_zero() {
                        hits += 1;
                    }
                }
            }
            assert!(hits > 0, "m = {m}");
        }
    }

    #[test]
    fn twisted_routes() {
        let k2 = Scalar::rat(3, 2);
        let mut hits = 0;
        for seed in 0..4 {
            let c = cfg(LieAlgebraData::so3(), 3, 90 + seed);
            let st = LocalFunctional::linear_combination(
                &[(Scalar::one(), LocalFunctional::bf_action()), (k2.clone(), LocalFunctional::cosmological())],
                "S+k2 S3",
            );
            assert!(sbracket(&st, &st, &c).unwrap().is_zero());
            for f in [LocalFunctional::small_s(), LocalFunctional::bf_action()] {
                let a = delta_functional(&f, &c, &Twist::Kappa2(k2.clone())).unwrap();
                let b = sbracket(&st, &f, &c).unwrap();
                assert!(a.add(&b).is_zero());
                hits += usize::from(!a.is_zero());
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn twisted_delta_squares_to_zero() {
        let lam = [(1, Scalar::int(2)), (2, Scalar::rat(1, 3))];
        for m in [3usize, 4] {
            let lam: Vec<_> = lam.iter().filter(|(i, _)| m % 2 == 0 || i % 2 == 1).cloned().collect();
            let twist = Twist::Mu(mu_from_lambda(&lam));
            let c = cfg(LieAlgebraData::gl(2).unwrap(), m, 100 + m as u64);
            let (ia, ib) = delta_images(c.mode(), m, &twist).unwrap();
            let der = ExprDerivation::on_superfields(DerivMode::Total(1), ia.clone(), ib.clone());
            for img in [ia, ib] {
                assert!(!img.eval(&c).unwrap().is_zero());
                let dd = der.apply(&img, m).unwrap().eval(&c).unwrap();
                assert!(dd.is_zero(), "m = {m}: {:?}", dd.witness());
            }
        }
    }

    fn same(x: &Form, y: &Form) -> bool {
        crate::bv::brst::form_residual(x, y).unwrap().is_zero()
    }

    #[test]
    fn catalog_derivatives() {
        for m in 3..=4 {
            let c = cfg(LieAlgebraData::gl(2).unwrap(), m, 130 + m as u64);
            let sh = Shape::of(&c);
            let s = LocalFunctional::bf_action();
            let rb = s.derivative(Superfield::B, Side::Right, &sh).unwrap().eval(&c).unwrap();
            assert!(!rb.is_zero());
            assert!(same(&rb, &curvature().eval(&c).unwrap()));
            let ra = s.derivative(Superfield::A, Side::Right, &sh).unwrap().eval(&c).unwrap();
            let expect = Expr::sign(parity_sign(m as i64 - 1), cov_deriv_b(c.mode())).eval(&c).unwrap();
            assert!(same(&ra, &expect));
            let s3 = LocalFunctional::cosmological();
            assert!(s3.derivative(Superfield::A, Side::Right, &sh).unwrap().is_zero());
            let lb = s3.derivative(Superfield::B, Side::Left, &sh).unwrap().eval(&c).unwrap();
            let half = Expr::scale(Scalar::rat(1, 2), Expr::br(Expr::b(), Expr::b())).eval(&c).unwrap();
            assert!(same(&lb, &half));
            // even traces of an odd B vanish identically
            for k in (2..=5).filter(|k| m % 2 == 0 || k % 2 == 1) {
                let o = LocalFunctional::trace_power(&c, k).unwrap();
                let rb = o.derivative(Superfield::B, Side::Right, &sh).unwrap().eval(&c).unwrap();
                assert!(same(&rb, &Expr::pow(&Expr::b(), k - 1).eval(&c).unwrap()), "m = {m} k = {k}");
            }
        }
    }

    #[test]
    fn bianchi() {
        for (alg, m) in [(LieAlgebraData::so3(), 3), (LieAlgebraData::aff1(), 4)] {
            let c = cfg(alg, m, 140 + m as u64);
            let f = curvature();
            let e = Expr::sum(vec![Expr::d(f.clone()), Expr::br(Expr::a(), f)]);
            assert!(e.eval(&c).unwrap().is_zero());
        }
    }

    #[test]
    fn trace_powers_scale_under_s() {
        for m in 3..=4 {
            let mut hits = 0;
            for seed in 0..3 {
                let c = cfg(LieAlgebraData::gl(2).unwrap(), m, 150 + 10 * m as u64 + seed);
                for n in 1..=5 {
                    let o = LocalFunctional::trace_power(&c, n).unwrap();
                    let lhs = sbracket(&o, &LocalFunctional::small_s(), &c).unwrap();
                    let rhs = o.eval(&c).unwrap().scale(&Scalar::int(n as i64));
                    assert_eq!(lhs, rhs, "m = {m} n = {n}");
                    hits += usize::from(!rhs.is_zero());
                }
            }
            assert!(hits > 0, "m = {m}");
        }
    }

    #[test]
    fn flat_observables() {
        let c = cfg(LieAlgebraData::so3(), 3, 170);
        assert!(check_flat(&LocalFunctional::cosmological(), &c).unwrap().flat_invariant);
        for m in 3..=4 {
            let c = cfg(LieAlgebraData::gl(2).unwrap(), m, 171 + m as u64);
            for k in 1..=5 {
                let o = LocalFunctional::trace_power(&c, k).unwrap();
                if o.total_degree(m).unwrap() % 2 != 0 {
                    assert!(check_flat(&o, &c).is_err());
                    continue;
                }
                let r = check_flat(&o, &c).unwrap();
                assert!(r.flat_invariant, "m = {m} k = {k}: {r:?}");
            }
        }
        let mut failures = 0;
        for seed in 0..4 {
            let c = cfg(LieAlgebraData::gl(2).unwrap(), 4, 180 + seed);
            let r = check_flat(&LocalFunctional::non_cyclic(&c, 1).unwrap(), &c).unwrap();
            failures += usize::from(!r.delta_closed);
        }
        assert!(failures > 0);
    }

    #[test]
    fn bracket_grading_and_symmetry() {
        let c = cfg(LieAlgebraData::gl(2).unwrap(), 3, 190);
        let m = 3;
        let fs = [
            LocalFunctional::bf_action(),
            LocalFunctional::small_s(),
            LocalFunctional::trace_power(&c, 3).unwrap(),
            LocalFunctional::non_cyclic(&c, 1).unwrap(),
        ];
        let mut hits = 0;
        for f in &fs {
            for g in &fs {
                let fg = sbracket(f, g, &c).unwrap();
                let gf = sbracket(g, f, &c).unwrap();
                let (df, dg) = (f.total_degree(m).unwrap(), g.total_degree(m).unwrap());
                for d in result_degrees(&fg) {
                    assert_eq!(d, df + dg + 1);
                }
                let s = -parity_sign(((df + 1) * (dg + 1)) as i64);
                assert_eq!(fg, gf.scale(&Scalar::int(s as i64)), "{:?} {:?}", f.tag, g.tag);
                hits += usize::from(!fg.is_zero());
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn mu_from_lambda_squares() {
        let mu = mu_from_lambda(&[(1, Scalar::int(2)), (3, Scalar::int(5))]);
        assert_eq!(mu, vec![(2, Scalar::int(4)), (4, Scalar::int(20)), (6, Scalar::int(25))]);
    }

    #[test]
    fn even_cosmological_twist_rejected() {
        assert!(delta_images(Mode::Ordinary, 4, &Twist::Kappa2(Scalar::one())).is_err());
        assert!(delta_images(Mode::Ordinary, 3, &Twist::Mu(vec![(3, Scalar::one())])).is_err());
    }

    #[test]
    fn laplacian_catalog() {
        let c = cfg(LieAlgebraData::aff1(), 3, 60);
        let r = bv_laplacian_formal(&LocalFunctional::bf_action(), &c).unwrap();
        assert!(r.vanishes);
        assert_eq!(r.weight_sum, "0");
        assert_eq!(r.structure, vec!["1", "0"]);
        let c = cfg(LieAlgebraData::so3(), 3, 61);
        assert!(bv_laplacian_formal(&LocalFunctional::bf_action(), &c).unwrap().vanishes);
        assert!(bv_laplacian_formal(&LocalFunctional::cosmological(), &c).unwrap().vanishes);
        assert!(bv_laplacian_formal(&LocalFunctional::small_s(), &c).unwrap().vanishes);
    }
}
