//! Exact transport and Chen iterated integrals along winding loops on `T^m`.

use serde::Serialize;

use crate::bv::expr::Expr;
use crate::bv::fields::SuperfieldConfig;
use crate::derham::{
    pushforward, simplex_face_map, simplex_face_sign, Bilinear, CoordImage, CoordKind, CoordMap, Domain,
    FaceConvention, Fiber, Form, Key, ValueKind,
};
use crate::error::{Error, Result};
use crate::koszul::scalar::{parity_sign, Scalar};
use crate::liealg::{LieAlgebraData, Mode};
use crate::linalg::QMat;

/// Closed loop `t -> 2 pi n t + (pi / 2) offset` on `T^m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindingLoop {
    pub winding: Vec<i8>,
    /// Offset in quarter periods.
    pub offset: Vec<i8>,
    /// Extra quarter-period offset of the companion loop carrying `B`-type letters.
    pub framing: Option<Vec<i8>>,
}

impl WindingLoop {
    pub fn new(winding: Vec<i8>, offset: Vec<i8>) -> Result<WindingLoop> {
        if winding.len() != offset.len() {
            return Err(Error::Dimension("winding and offset lengths differ".into()));
        }
        Ok(WindingLoop {
            winding,
            offset,
            framing: None,
        })
    }

    pub fn with_framing(mut self, framing: Vec<i8>) -> Result<WindingLoop> {
        if framing.len() != self.winding.len() {
            return Err(Error::Dimension("framing length differs from the loop dimension".into()));
        }
        self.framing = Some(framing);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.winding.len()
    }

    /// Evaluation at unit coordinate `t` of `source`, translated by the periodic coordinates
    /// starting at `shift` when given.
    fn ev(&self, source: &Domain, t: usize, shift: Option<usize>, framed: bool) -> Result<CoordMap> {
        let target = Domain::torus(self.m());
        let images = (0..self.m())
            .map(|j| {
                let mut terms = Vec::new();
                if self.winding[j] != 0 {
                    terms.push((t, self.winding[j]));
                }
                if let Some(s) = shift {
                    terms.push((s + j, 1));
                }
                let extra = if framed {
                    self.framing.as_ref().map_or(0, |f| f[j])
                } else {
                    0
                };
                CoordImage::Affine {
                    terms,
                    quarter: self.offset[j] + extra,
                }
            })
            .collect();
        CoordMap::new(source, &target, images)
    }
}

/// Matrix-valued form `rho(f)` of an adjoint-valued form.
pub fn to_matrix(f: &Form, alg: &LieAlgebraData) -> Result<Form> {
    if f.kind != ValueKind::Adjoint {
        return Err(Error::Unsupported("only adjoint-valued forms have a matrix image".into()));
    }
    let rep = alg
        .rep
        .as_ref()
        .ok_or_else(|| Error::Algebra(format!("{} has no representation", alg.name)))?;
    let n = rep[0].len();
    let mut out = Form::zero(&f.domain, ValueKind::Matrix(n as u8), n * n);
    for (k, c) in &f.terms {
        let m = &rep[k.val as usize];
        for (r, row) in m.iter().enumerate() {
            for (s, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    let mut nk = *k;
                    nk.val = (r * n + s) as u16;
                    out.add_term(nk, c.scale_q(e));
                }
            }
        }
    }
    Ok(out)
}

pub fn rep_size(alg: &LieAlgebraData) -> Result<usize> {
    alg.rep_dim()
        .ok_or_else(|| Error::Algebra(format!("{} has no representation", alg.name)))
}

/// Identity matrix as a constant form.
pub fn identity_form(domain: &Domain, n: usize) -> Form {
    let mut out = Form::zero(domain, ValueKind::Matrix(n as u8), n * n);
    for r in 0..n {
        out.add_term(Key::new(0, 0, (r * n + r) as u16, 0), Scalar::one());
    }
    out
}

fn matrix_size(f: &Form) -> Result<usize> {
    match f.kind {
        ValueKind::Matrix(n) => Ok(n as usize),
        _ => Err(Error::Unsupported("expected a matrix-valued form".into())),
    }
}

/// `g f g^{-1}` for a constant rational matrix `g`.
pub fn conjugate(f: &Form, g: &QMat, ginv: &QMat) -> Result<Form> {
    let n = matrix_size(f)?;
    let mut out = Form::zero(&f.domain, f.kind, f.dim);
    for (k, c) in &f.terms {
        let (r, s) = (k.val as usize / n, k.val as usize % n);
        for (i, grow) in g.iter().enumerate() {
            if grow[r].is_zero() {
                continue;
            }
            for (j, ginv_s) in ginv[s].iter().enumerate() {
                let e = &grow[r] * ginv_s;
                if !e.is_zero() {
                    let mut nk = *k;
                    nk.val = (i * n + j) as u16;
                    out.add_term(nk, c.scale_q(&e));
                }
            }
        }
    }
    Ok(out)
}

/// Constant `N x N` matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMatrix {
    pub n: usize,
    pub entries: Vec<Scalar>,
}

impl ExactMatrix {
    pub fn zero(n: usize) -> ExactMatrix {
        ExactMatrix {
            n,
            entries: vec![Scalar::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> ExactMatrix {
        let mut m = ExactMatrix::zero(n);
        for r in 0..n {
            m.entries[r * n + r] = Scalar::one();
        }
        m
    }

    /// Constant part of a matrix-valued form; errors if it depends on any coordinate.
    pub fn from_form(f: &Form) -> Result<ExactMatrix> {
        let n = matrix_size(f)?;
        let mut m = ExactMatrix::zero(n);
        for (k, c) in &f.terms {
            if !k.is_zero_mode() || k.mask != 0 || k.gmask != 0 {
                return Err(Error::Unsupported("matrix form is not constant".into()));
            }
            m.entries[k.val as usize] += c;
        }
        Ok(m)
    }

    pub fn mul(&self, o: &ExactMatrix) -> ExactMatrix {
        let n = self.n;
        let mut out = ExactMatrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Scalar::zero();
                for k in 0..n {
                    s += &(&self.entries[i * n + k] * &o.entries[k * n + j]);
                }
                out.entries[i * n + j] = s;
            }
        }
        out
    }

    pub fn add(&self, o: &ExactMatrix) -> ExactMatrix {
        ExactMatrix {
            n: self.n,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn trace(&self) -> Scalar {
        let mut s = Scalar::zero();
        for r in 0..self.n {
            s += &self.entries[r * self.n + r];
        }
        s
    }

    pub fn rows(&self) -> Vec<Vec<String>> {
        self.entries.chunks(self.n).map(|r| r.iter().map(|c| c.to_string()).collect()).collect()
    }
}

/// Transport truncated at `order`; `terms[k]` is the order-`k` term.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportResult {
    pub order: usize,
    pub terms: Vec<ExactMatrix>,
}

impl TransportResult {
    pub fn total(&self) -> ExactMatrix {
        let n = self.terms[0].n;
        self.terms.iter().fold(ExactMatrix::zero(n), |acc, t| acc.add(t))
    }
}

/// Pullback `iota_{d/dt} gamma^* a` of a matrix-valued form to the unit interval.
fn loop_pullback(a: &Form, lp: &WindingLoop) -> Result<Form> {
    let line = Domain::new(vec![CoordKind::Unit]);
    let pulled = lp.ev(&line, 0, None, false)?.pullback(a)?;
    Ok(pulled.contract(0))
}

/// Order-`k` transport terms `H_k(t0, t)` as functions of `t`, for `H' = H a(gamma')`.
pub fn transport_series(a: &Form, lp: &WindingLoop, t0: i64, order: usize) -> Result<Vec<Form>> {
    let n = matrix_size(a)?;
    if a.domain != Domain::torus(lp.m()) {
        return Err(Error::Dimension("connection does not live on the loop's torus".into()));
    }
    let ahat = loop_pullback(a, lp)?;
    let mm = Bilinear::matrix(n);
    let mut out = vec![identity_form(&ahat.domain, n)];
    for _ in 0..order {
        let prev = out.last().expect("order-0 term");
        out.push(prev.product(&ahat, &mm, false)?.antiderivative_from(0, t0)?);
    }
    Ok(out)
}

/// `hol(t0, t1)` at quarter points `t0 / 4`, `t1 / 4`, truncated at `order`.
pub fn transport(a: &Form, alg: &LieAlgebraData, lp: &WindingLoop, t0: i64, t1: i64, order: usize) -> Result<TransportResult> {
    if !(0..=4).contains(&t0) || !(0..=4).contains(&t1) {
        return Err(Error::Range("transport endpoints are quarter points in [0, 1]".into()));
    }
    let am = if a.kind == ValueKind::Adjoint { to_matrix(a, alg)? } else { a.clone() };
    let series = transport_series(&am, lp, t0, order)?;
    let terms = series
        .iter()
        .map(|h| ExactMatrix::from_form(&h.at_quarter(0, t1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TransportResult { order, terms })
}

/// Letter of a Chen word: matrix-valued forms on `T^m`, each evaluated on the loop or its framed companion.
#[derive(Clone, Debug)]
pub struct Letter {
    pub parts: Vec<(Form, bool)>,
}

impl Letter {
    pub fn plain(f: Form) -> Letter {
        Letter { parts: vec![(f, false)] }
    }
}

/// Base of a Chen integral: the single loop, or its translates parametrized by `T^m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Base {
    Point,
    Translates,
}

fn base_domain_of(lp: &WindingLoop, base: Base) -> Domain {
    match base {
        Base::Point => Domain::new(vec![]),
        Base::Translates => Domain::torus(lp.m()),
    }
}

/// `X_1^ ... X_L^` on `Delta_L x base`, each letter pulled back along `ev_i`.
pub fn word_form(letters: &[&Letter], n: usize, lp: &WindingLoop, base: Base) -> Result<Form> {
    let l = letters.len();
    let b = base_domain_of(lp, base);
    let total = Domain::with_unit_fiber(l, &b);
    let shift = (base == Base::Translates).then_some(l);
    let mm = Bilinear::matrix(n);
    let mut acc = identity_form(&total, n);
    for (i, x) in letters.iter().enumerate() {
        let mut hat = Form::zero(&total, ValueKind::Matrix(n as u8), n * n);
        for (f, framed) in &x.parts {
            hat.add_assign(&lp.ev(&total, i, shift, *framed)?.pullback(f)?)?;
        }
        acc = acc.product(&hat, &mm, true)?;
    }
    Ok(acc)
}

/// Chen integral of a word with orientation `dt_1 ^ ... ^ dt_L`.
pub fn chen(letters: &[&Letter], n: usize, lp: &WindingLoop, base: Base) -> Result<Form> {
    let l = letters.len();
    let w = word_form(letters, n, lp, base)?;
    if l == 0 {
        return Ok(w);
    }
    let pushed = pushforward(&w, &Fiber::Simplex((0..l).collect()))?;
    Ok(pushed.scale(&Scalar::int(parity_sign((l * (l - 1) / 2) as i64) as i64)))
}

fn ordinary(cfg: &SuperfieldConfig) -> Result<()> {
    if cfg.mode() == Mode::Canonical {
        return Err(Error::Unsupported("Wilson loops need B in the adjoint (ordinary variant)".into()));
    }
    Ok(())
}

/// `sum_k lambda_k B^k`.
pub fn b_series(lambda: &[(usize, Scalar)]) -> Expr {
    let b = Expr::b();
    Expr::sum(lambda.iter().map(|(k, l)| Expr::scale(l.clone(), Expr::pow(&b, *k))).collect())
}

/// `C = a + sum lambda_k B^k` for odd `m` and odd `k`; `lambda = [(1, kappa)]` gives `C_kappa`.
pub fn build_c(cfg: &SuperfieldConfig, lambda: &[(usize, Scalar)]) -> Result<Form> {
    ordinary(cfg)?;
    if cfg.m % 2 == 0 {
        return Err(Error::Parity("superconnections C need odd m; use B_lambda for even m".into()));
    }
    if lambda.iter().any(|(k, _)| k % 2 == 0) {
        return Err(Error::Parity("C needs odd powers of B".into()));
    }
    Expr::sum(vec![Expr::a(), b_series(lambda)]).eval(cfg)
}

/// `B_lambda = sum lambda_k B^k` for even `m`.
pub fn build_b_lambda(cfg: &SuperfieldConfig, lambda: &[(usize, Scalar)]) -> Result<Form> {
    ordinary(cfg)?;
    if cfg.m % 2 == 1 {
        return Err(Error::Parity("B_lambda insertions are defined for even m".into()));
    }
    b_series(lambda).eval(cfg)
}

/// Per-order terms `tr chen(C, ..., C)` of the generalized Wilson loop.
pub fn gen_wilson(
    cfg: &SuperfieldConfig,
    lambda: &[(usize, Scalar)],
    lp: &WindingLoop,
    order: usize,
    base: Base,
) -> Result<Vec<Form>> {
    let alg = &cfg.ops.alg;
    let n = rep_size(alg)?;
    let c = build_c(cfg, lambda)?;
    let letter = if lp.framing.is_some() {
        let a = to_matrix(&Expr::a().eval(cfg)?, alg)?;
        let b = to_matrix(&b_series(lambda).eval(cfg)?, alg)?;
        Letter {
            parts: vec![(a, false), (b, true)],
        }
    } else {
        Letter::plain(to_matrix(&c, alg)?)
    };
    (0..=order)
        .map(|l| chen(&vec![&letter; l], n, lp, base)?.trace())
        .collect()
}

/// All words of length `len` with `k` letters `b` and the rest `a`.
fn words<'a>(a: &'a Letter, b: &'a Letter, len: usize, k: usize) -> Vec<Vec<&'a Letter>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << len) {
        if mask.count_ones() as usize == k {
            out.push((0..len).map(|i| if mask & (1 << i) != 0 { b } else { a }).collect());
        }
    }
    out
}

/// `h_k` for odd insertion counts `k`, summing Chen words of length at most `order`.
pub fn gen_wilson_even(
    cfg: &SuperfieldConfig,
    lambda: &[(usize, Scalar)],
    lp: &WindingLoop,
    order: usize,
    counts: &[usize],
    base: Base,
) -> Result<Vec<(usize, Form)>> {
    if let Some(k) = counts.iter().find(|k| *k % 2 == 0) {
        return Err(Error::Parity(format!(
            "{k} insertions of B_lambda requested; even insertion counts are not closed and are excluded"
        )));
    }
    let alg = &cfg.ops.alg;
    let n = rep_size(alg)?;
    let a = Letter::plain(to_matrix(&Expr::a().eval(cfg)?, alg)?);
    let b = Letter {
        parts: vec![(to_matrix(&build_b_lambda(cfg, lambda)?, alg)?, lp.framing.is_some())],
    };
    let mut out = Vec::new();
    for &k in counts {
        let mut h = Form::scalar_zero(&base_domain_of(lp, base));
        for len in k..=order.max(k) {
            for w in words(&a, &b, len, k) {
                h.add_assign(&chen(&w, n, lp, base)?.trace()?)?;
            }
        }
        out.push((k, h));
    }
    Ok(out)
}

/// Traced contribution of boundary face `alpha` of `Delta_L`, unsigned.
pub fn face_term(letters: &[&Letter], n: usize, lp: &WindingLoop, base: Base, alpha: usize) -> Result<Form> {
    let l = letters.len();
    let w = word_form(letters, n, lp, base)?;
    let (map, face) = simplex_face_map(&w.domain, &(0..l).collect::<Vec<_>>(), alpha)?;
    let pulled = map.pullback(&w)?;
    let pushed = if l == 1 {
        pulled
    } else {
        pushforward(&pulled, &Fiber::Simplex(face))?
    };
    pushed.trace()
}

#[derive(Clone, Debug, Serialize)]
pub struct FaceSign {
    pub n: usize,
    pub alpha: usize,
    pub normal_first: i32,
    pub normal_last: i32,
    pub expected: i32,
}

/// Orientation signs of the faces of `Delta_n` against `(-1)^{alpha + 1}`.
pub fn face_sign_ledger(max_n: usize) -> Vec<FaceSign> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for alpha in 0..=n {
            out.push(FaceSign {
                n,
                alpha,
                normal_first: simplex_face_sign(n, alpha, FaceConvention::NormalFirst),
                normal_last: simplex_face_sign(n, alpha, FaceConvention::NormalLast),
                expected: parity_sign(alpha as i64 + 1),
            });
        }
    }
    out
}

/// Sum of the two end faces `alpha = 0, L` of one word sector, with orientation signs.
#[derive(Clone, Debug, Serialize)]
pub struct FacePair {
    pub label: String,
    pub insertions: usize,
    pub nontrivial: bool,
    pub cancels: bool,
    pub witness: Option<String>,
}

pub fn end_face_pair(label: &str, letters: &[&Letter], n: usize, lp: &WindingLoop, base: Base) -> Result<FacePair> {
    let l = letters.len();
    let f0 = face_term(letters, n, lp, base, 0)?;
    let fl = face_term(letters, n, lp, base, l)?;
    let s = |a| Scalar::int(simplex_face_sign(l, a, FaceConvention::NormalLast) as i64);
    let sum = f0.scale(&s(0)).add(&fl.scale(&s(l)))?;
    Ok(FacePair {
        label: label.into(),
        insertions: l,
        nontrivial: !f0.is_zero() || !fl.is_zero(),
        cancels: sum.is_zero(),
        witness: sum.witness(),
    })
}

/// `d h_N + delta_d h_N + delta_br h_{N-1}` on the translate family, with `delta C = -dC - [[C, C]] / 2`,
/// together with `d h_N`.
pub fn closedness_residual(c: &Form, cc_half: &Form, lp: &WindingLoop, n: usize) -> Result<(Form, Form)> {
    let size = matrix_size(c)?;
    let x = Letter::plain(c.clone());
    let dx = Letter::plain(c.d().neg());
    let br = Letter::plain(cc_half.neg());
    let h = chen(&vec![&x; n], size, lp, Base::Translates)?.trace()?;
    let dh = h.d();
    let mut res = dh.clone();
    let insert = |len: usize, y: &Letter, out: &mut Form| -> Result<()> {
        for i in 0..len {
            let mut w = vec![&x; len];
            w[i] = y;
            let s = parity_sign((len + i) as i64);
            out.add_assign(&chen(&w, size, lp, Base::Translates)?.trace()?.scale(&Scalar::int(s as i64)))?;
        }
        Ok(())
    };
    insert(n, &dx, &mut res)?;
    if n >= 1 {
        insert(n - 1, &br, &mut res)?;
    }
    Ok((res, dh))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::Complex;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bv::fields::random_config;
    use crate::derham::{random_form, AlgebraOps, RandomSpec};
    use crate::koszul::scalar::{factorial, C, Q};
    use crate::wilson::numeric::{chen_quadrature, CMat};

    fn ghostless_spec() -> RandomSpec {
        RandomSpec {
            terms: 2,
            max_freq: 1,
            max_theta: 0,
            zero_bias: 0.3,
            ..RandomSpec::default()
        }
    }

    fn gl2_connection(seed: u64, m: usize) -> (LieAlgebraData, Form) {
        let alg = LieAlgebraData::gl(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_form(&mut rng, &Domain::torus(m), ValueKind::Adjoint, 4, 1, 0, &ghostless_spec());
        (alg, a)
    }

    #[test]
    fn zero_connection_is_identity() {
        let alg = LieAlgebraData::gl(2).unwrap();
        let a = Form::zero(&Domain::torus(2), ValueKind::Adjoint, 4);
        let lp = WindingLoop::new(vec![1, 2], vec![0, 3]).unwrap();
        let r = transport(&a, &alg, &lp, 0, 4, 5).unwrap();
        assert_eq!(r.terms[0], ExactMatrix::identity(2));
        for t in &r.terms[1..] {
            assert_eq!(*t, ExactMatrix::zero(2));
        }
    }

    fn abelian(c: Scalar) -> (LieAlgebraData, Form) {
        let alg = LieAlgebraData::gl(1).unwrap();
        let a = Form::monomial(&Domain::torus(1), ValueKind::Adjoint, 1, &[0], &[0], 0, c);
        (alg, a)
    }

    #[test]
    fn abelian_simplex_volumes() {
        // a = (3/5) dx on a loop of winding 1 pulls back to c dt with c = 6 pi / 5
        let (alg, a) = abelian(Scalar::rat(3, 5));
        let lp = WindingLoop::new(vec![1], vec![1]).unwrap();
        let r = transport(&a, &alg, &lp, 0, 4, 8).unwrap();
        let c = Scalar::rat(6, 5).shift_pi(1);
        for (k, t) in r.terms.iter().enumerate() {
            let expect = c.pow(k as u32).scale_q(&factorial(k as u32).recip());
            assert_eq!(t.entries[0], expect, "order {k}");
        }
    }

    #[test]
    fn abelian_full_loop_exponential() {
        for k in [1i64, -1, 2] {
            let (alg, a) = abelian(Scalar::from_c(C::new(Q::zero(), Q::int(k))));
            let lp = WindingLoop::new(vec![1], vec![0]).unwrap();
            let order = 12;
            let r = transport(&a, &alg, &lp, 0, 4, order).unwrap();
            let (re, im) = r.total().entries[0].to_complex();
            let x = std::f64::consts::TAU * k.abs() as f64;
            // remainder of the exponential series after `order` terms
            let tail = x.powi(order as i32 + 1) / (1..=order as i32 + 1).map(f64::from).product::<f64>() * x.exp();
            assert!(((re - 1.0).powi(2) + im * im).sqrt() <= tail, "k = {k}");
        }
        // at high order the series converges to 1
        let (alg, a) = abelian(Scalar::i());
        let lp = WindingLoop::new(vec![1], vec![0]).unwrap();
        let (re, im) = transport(&a, &alg, &lp, 0, 4, 40).unwrap().total().entries[0].to_complex();
        assert!((re - 1.0).abs() < 1e-9 && im.abs() < 1e-9);
    }

    #[test]
    fn composition_at_quarter_splits() {
        for seed in 0..3 {
            let (alg, a) = gl2_connection(seed, 2);
            let lp = WindingLoop::new(vec![1, -1], vec![0, 1]).unwrap();
            let order = 6;
            let full = transport(&a, &alg, &lp, 0, 4, order).unwrap();
            for s in 1..4 {
                let left = transport(&a, &alg, &lp, 0, s, order).unwrap();
                let right = transport(&a, &alg, &lp, s, 4, order).unwrap();
                assert!(left.terms[1..].iter().any(|t| *t != ExactMatrix::zero(2)));
                for k in 0..=order {
                    let mut acc = ExactMatrix::zero(2);
                    for i in 0..=k {
                        acc = acc.add(&left.terms[i].mul(&right.terms[k - i]));
                    }
                    assert_eq!(acc, full.terms[k], "seed {seed} split {s} order {k}");
                }
            }
        }
    }

    #[test]
    fn gauge_covariance() {
        let g: QMat = vec![vec![Q::one(), Q::int(2)], vec![Q::zero(), Q::one()]];
        let ginv: QMat = vec![vec![Q::one(), Q::int(-2)], vec![Q::zero(), Q::one()]];
        let gm = ExactMatrix {
            n: 2,
            entries: g.iter().flatten().map(|q| Scalar::from_q(q.clone())).collect(),
        };
        let gim = ExactMatrix {
            n: 2,
            entries: ginv.iter().flatten().map(|q| Scalar::from_q(q.clone())).collect(),
        };
        let (alg, a) = gl2_connection(11, 3);
        let am = to_matrix(&a, &alg).unwrap();
        let conj = conjugate(&am, &g, &ginv).unwrap();
        let lp = WindingLoop::new(vec![1, 0, 2], vec![0, 2, 1]).unwrap();
        let h = transport(&am, &alg, &lp, 0, 4, 4).unwrap();
        let hc = transport(&conj, &alg, &lp, 0, 4, 4).unwrap();
        for k in 0..=4 {
            assert_eq!(hc.terms[k], gm.mul(&h.terms[k]).mul(&gim));
            assert_eq!(hc.terms[k].trace(), h.terms[k].trace());
        }
    }

    #[test]
    fn chen_matches_transport() {
        let (alg, a) = gl2_connection(5, 2);
        let am = to_matrix(&a, &alg).unwrap();
        let lp = WindingLoop::new(vec![2, 1], vec![1, 0]).unwrap();
        let h = transport(&am, &alg, &lp, 0, 4, 3).unwrap();
        let x = Letter::plain(am);
        for l in 0..=3 {
            let c = ExactMatrix::from_form(&chen(&vec![&x; l], 2, &lp, Base::Point).unwrap()).unwrap();
            assert_eq!(c, h.terms[l], "length {l}");
        }
    }

    #[test]
    fn chen_matches_quadrature() {
        let (alg, a) = gl2_connection(8, 2);
        let am = to_matrix(&a, &alg).unwrap();
        let lp = WindingLoop::new(vec![1, 1], vec![0, 1]).unwrap();
        let letter = |t: f64| {
            let tau = std::f64::consts::TAU;
            let x = [tau * t, tau * t + std::f64::consts::FRAC_PI_2];
            let mut out = CMat::zeros(2, 2);
            for ((_, mask, val, _), (re, im)) in am.eval_f64(&x) {
                out[(val as usize / 2, val as usize % 2)] += Complex::new(re, im) * (tau * lp.winding[mask.trailing_zeros() as usize] as f64);
            }
            out
        };
        let x = Letter::plain(am.clone());
        for l in 1..=3 {
            let exact = ExactMatrix::from_form(&chen(&vec![&x; l], 2, &lp, Base::Point).unwrap()).unwrap();
            let num = chen_quadrature(&letter, 2, l, 24).unwrap();
            for (e, z) in exact.entries.iter().zip(num.transpose().iter()) {
                let (re, im) = e.to_complex();
                assert!((re - z.re).abs() < 1e-9 && (im - z.im).abs() < 1e-9, "length {l}: {e} vs {z}");
            }
        }
    }

    fn spec() -> RandomSpec {
        RandomSpec {
            terms: 3,
            max_freq: 1,
            grassmann: 16,
            max_theta: 2,
            zero_bias: 0.3,
            ..RandomSpec::default()
        }
    }

    fn gl2_config(m: usize, seed: u64) -> SuperfieldConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ops = Arc::new(AlgebraOps::new(Arc::new(LieAlgebraData::gl(2).unwrap())));
        random_config(&mut rng, m, ops, &spec()).unwrap()
    }

    #[test]
    fn gen_wilson_basics() {
        let cfg = gl2_config(3, 4);
        let lp = WindingLoop::new(vec![1, 0, 1], vec![0, 1, 0]).unwrap();
        let zero = cfg
            .with_components(&cfg.catalog.iter().map(|f| (f.name.as_str(), Form::zero(&cfg.domain, ValueKind::Adjoint, 4))).collect::<Vec<_>>())
            .unwrap();
        let h0 = gen_wilson(&zero, &[(1, Scalar::one())], &lp, 3, Base::Point).unwrap();
        assert_eq!(h0[0], Form::constant(&Domain::new(vec![]), Scalar::int(2)));
        assert!(h0[1..].iter().all(Form::is_zero));
        // order one is linear in C
        let h = gen_wilson(&cfg, &[(1, Scalar::one())], &lp, 1, Base::Point).unwrap();
        let ha = gen_wilson(&cfg, &[], &lp, 1, Base::Point).unwrap();
        let hb = {
            let b = to_matrix(&cfg.b, &cfg.ops.alg).unwrap();
            chen(&[&Letter::plain(b)], 2, &lp, Base::Point).unwrap().trace().unwrap()
        };
        assert!(!hb.is_zero());
        assert_eq!(h[1], ha[1].add(&hb).unwrap());
        // ghostless a-only C reduces to transport
        let a_only = cfg
            .with_components(&cfg.catalog.iter().filter(|f| f.name != "a").map(|f| (f.name.as_str(), Form::zero(&cfg.domain, ValueKind::Adjoint, 4))).collect::<Vec<_>>())
            .unwrap();
        let hw = gen_wilson(&a_only, &[(1, Scalar::rat(7, 3))], &lp, 3, Base::Point).unwrap();
        let tr = transport(&a_only.a, &cfg.ops.alg, &lp, 0, 4, 3).unwrap();
        for k in 0..=3 {
            assert_eq!(hw[k], Form::constant(&Domain::new(vec![]), tr.terms[k].trace()), "order {k}");
        }
        assert!(matches!(build_c(&gl2_config(4, 0), &[(1, Scalar::one())]), Err(Error::Parity(_))));
        assert!(matches!(build_c(&cfg, &[(2, Scalar::one())]), Err(Error::Parity(_))));
    }

    #[test]
    fn gauge_invariance_of_gen_wilson() {
        let cfg = gl2_config(3, 9);
        let g: QMat = vec![vec![Q::int(2), Q::one()], vec![Q::one(), Q::one()]];
        let ginv = crate::linalg::inverse(&g).unwrap();
        let c = to_matrix(&build_c(&cfg, &[(1, Scalar::rat(1, 3))]).unwrap(), &cfg.ops.alg).unwrap();
        let cc = conjugate(&c, &g, &ginv).unwrap();
        let lp = WindingLoop::new(vec![1, 1, 0], vec![0, 0, 2]).unwrap();
        for l in 1..=3 {
            let x = Letter::plain(c.clone());
            let y = Letter::plain(cc.clone());
            let h = chen(&vec![&x; l], 2, &lp, Base::Translates).unwrap().trace().unwrap();
            let hc = chen(&vec![&y; l], 2, &lp, Base::Translates).unwrap().trace().unwrap();
            assert!(!h.is_zero());
            assert_eq!(h, hc, "length {l}");
        }
    }

    #[test]
    fn even_wilson_insertions() {
        let mut nontrivial = 0;
        for seed in 0..6 {
            nontrivial += usize::from(one_insertion_matches_quadrature(seed));
        }
        assert!(nontrivial > 0);
    }

    fn one_insertion_matches_quadrature(seed: u64) -> bool {
        let cfg = gl2_config(4, seed);
        let lp = WindingLoop::new(vec![1, 0, 1, 0], vec![0, 1, 0, 3]).unwrap();
        let lambda = [(1, Scalar::one())];
        assert!(matches!(
            gen_wilson_even(&cfg, &lambda, &lp, 3, &[2], Base::Point),
            Err(Error::Parity(_))
        ));
        // one insertion with a = 0: the loop integral of the pulled-back B_lambda, by quadrature
        let no_a = cfg
            .with_components(&cfg.catalog.iter().filter(|f| f.superfield == crate::bv::fields::Superfield::A).map(|f| (f.name.as_str(), Form::zero(&cfg.domain, ValueKind::Adjoint, 4))).collect::<Vec<_>>())
            .unwrap();
        let h = gen_wilson_even(&no_a, &lambda, &lp, 1, &[1], Base::Point).unwrap();
        let b = build_b_lambda(&no_a, &lambda).unwrap();
        let rep = cfg.ops.alg.rep.as_ref().unwrap();
        let rep_trace: Vec<f64> = rep.iter().map(|m| (0..2).map(|r| m[r][r].to_f64()).sum()).collect();
        let tau = std::f64::consts::TAU;
        let rule = gauss_quad::legendre::GaussLegendre::new(32.try_into().unwrap());
        let mut oracle: std::collections::BTreeMap<(i8, u16), (f64, f64)> = Default::default();
        for &(x, w) in rule.as_node_weight_pairs() {
            let t = (x + 1.0) / 2.0;
            let pt: Vec<f64> = (0..4).map(|j| tau * lp.winding[j] as f64 * t + std::f64::consts::FRAC_PI_2 * lp.offset[j] as f64).collect();
            for ((gh, mask, val, gmask), (re, im)) in b.eval_f64(&pt) {
                if mask.count_ones() != 1 {
                    continue;
                }
                let s = tau * lp.winding[mask.trailing_zeros() as usize] as f64 * rep_trace[val as usize] * w / 2.0;
                let e = oracle.entry((gh, gmask)).or_default();
                e.0 += re * s;
                e.1 += im * s;
            }
        }
        let got = h[0].1.eval_f64(&[]);
        for ((gh, _, _, gmask), (re, im)) in &got {
            let (ore, oim) = oracle.get(&(*gh, *gmask)).copied().unwrap_or_default();
            assert!((re - ore).abs() < 1e-9 && (im - oim).abs() < 1e-9);
        }
        for ((gh, gmask), (re, im)) in oracle {
            if re.abs() + im.abs() > 1e-9 {
                assert!(got.contains_key(&(gh, 0, 0, gmask)));
            }
        }
        !got.is_empty()
    }
}
