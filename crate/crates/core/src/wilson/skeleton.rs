//! Algebraic ingredients of the closedness of generalized Wilson loops.

use nalgebra::Complex;
use serde::Serialize;

use super::exact::{
    b_series, build_b_lambda, build_c, chen, closedness_residual, end_face_pair, face_sign_ledger, rep_size,
    to_matrix, Base, FacePair, FaceSign, Letter, WindingLoop,
};
use super::numeric::{chen_quadrature, CMat};
use crate::bv::brst::check_flat_connection;
use crate::bv::expr::Expr;
use crate::bv::fields::SuperfieldConfig;
use crate::derham::Form;
use crate::error::{Error, Result};
use crate::koszul::scalar::Scalar;

#[derive(Clone, Debug, Serialize)]
pub struct StokesCase {
    pub count: usize,
    pub nontrivial: bool,
    pub zero: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkeletonReport {
    pub m: usize,
    pub flat: bool,
    pub flat_witness: Option<String>,
    pub face_signs: Vec<FaceSign>,
    pub face_signs_match: bool,
    pub face_pairs: Vec<FacePair>,
    pub stokes: Vec<StokesCase>,
    pub finite_differences: Vec<FdProbe>,
}

impl SkeletonReport {
    /// Flatness, orientation signs, exact cancellation in the odd sectors, the Stokes identities and the
    /// finite-difference probes.
    pub fn pass(&self) -> bool {
        let odd_ok = self
            .face_pairs
            .iter()
            .filter(|p| self.m % 2 == 1 || p.insertions % 2 == 1)
            .all(|p| p.cancels);
        self.flat
            && self.face_signs_match
            && odd_ok
            && self.stokes.iter().all(|s| s.zero)
            && self.finite_differences.iter().all(|p| p.relative_error < FD_TOLERANCE)
    }

    /// Some even insertion count leaves nonzero end faces.
    pub fn even_counterexample(&self) -> bool {
        self.m % 2 == 0 && self.face_pairs.iter().any(|p| p.insertions % 2 == 0 && !p.cancels)
    }
}

/// Flatness of `C` (odd `m`) or of the `B_lambda` relations (even `m`), the end-face ledger for words of
/// length up to `order`, and for odd `m` the exact Stokes identity on the translate family.
pub fn check_closedness_skeleton(
    cfg: &SuperfieldConfig,
    lambda: &[(usize, Scalar)],
    lp: &WindingLoop,
    order: usize,
) -> Result<SkeletonReport> {
    if !(1..=3).contains(&order) {
        return Err(Error::Unsupported(format!("skeleton checks support orders 1..=3, got {order}")));
    }
    let alg = &cfg.ops.alg;
    let n = rep_size(alg)?;
    let flat = check_flat_connection(cfg, lambda)?;
    let face_signs = face_sign_ledger(order);
    let face_signs_match = face_signs.iter().all(|f| f.normal_last == f.expected);
    let mut face_pairs = Vec::new();
    let mut stokes = Vec::new();
    let mut finite_differences = Vec::new();
    if cfg.m % 2 == 1 {
        let c = to_matrix(&build_c(cfg, lambda)?, alg)?;
        let x = Letter::plain(c.clone());
        for l in 1..=order {
            face_pairs.push(end_face_pair("C", &vec![&x; l], n, lp, Base::Point)?);
        }
        let cexpr = Expr::sum(vec![Expr::a(), b_series(lambda)]);
        let cc_half = to_matrix(
            &Expr::scale(Scalar::rat(1, 2), Expr::br(cexpr.clone(), cexpr)).eval(cfg)?,
            alg,
        )?;
        for k in 1..=order {
            let (r, dh) = closedness_residual(&c, &cc_half, lp, k)?;
            stokes.push(StokesCase {
                count: k,
                nontrivial: !dh.is_zero(),
                zero: r.is_zero(),
                witness: r.witness(),
            });
            for j in 0..lp.m() {
                finite_differences.push(fd_probe(&c, lp, k, j)?);
            }
        }
    } else {
        let b = Letter::plain(to_matrix(&build_b_lambda(cfg, lambda)?, alg)?);
        for k in 1..=order {
            face_pairs.push(end_face_pair("B_lambda, a = 0", &vec![&b; k], n, lp, Base::Point)?);
        }
    }
    Ok(SkeletonReport {
        m: cfg.m,
        flat: flat.is_zero(),
        flat_witness: flat.witness(),
        face_signs,
        face_signs_match,
        face_pairs,
        stokes,
        finite_differences,
    })
}

pub const FD_TOLERANCE: f64 = 1e-6;

/// Ghostless, `dy`-free part of `d h_N` along `dy_j` at a fixed translate, against central differences
/// of the same part of `h_N` computed by simplex quadrature. The error is relative to `max(|exact|, 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct FdProbe {
    pub count: usize,
    pub direction: usize,
    pub exact: (f64, f64),
    pub numeric: (f64, f64),
    pub relative_error: f64,
    pub nontrivial: bool,
}

/// `iota_v C(x)` restricted to ghost number zero, from the numerical values of a matrix form.
fn ghostless_contraction(c: &Form, n: usize, x: &[f64], v: &[f64]) -> CMat {
    let mut out = CMat::zeros(n, n);
    for ((gh, mask, val, gmask), (re, im)) in c.eval_f64(x) {
        if gh != 0 || gmask != 0 || mask.count_ones() != 1 {
            continue;
        }
        let j = mask.trailing_zeros() as usize;
        let (r, s) = (val as usize / n, val as usize % n);
        out[(r, s)] += Complex::new(re, im) * v[j];
    }
    out
}

fn translate_point(lp: &WindingLoop, y: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let tau = std::f64::consts::TAU;
    let x = (0..lp.m())
        .map(|j| tau * lp.winding[j] as f64 * t + std::f64::consts::FRAC_PI_2 * lp.offset[j] as f64 + y[j])
        .collect();
    let v = lp.winding.iter().map(|&w| tau * w as f64).collect();
    (x, v)
}

pub fn fd_probe(c: &Form, lp: &WindingLoop, count: usize, direction: usize) -> Result<FdProbe> {
    let n = match c.kind {
        crate::derham::ValueKind::Matrix(n) => n as usize,
        _ => return Err(Error::Unsupported("finite differences need a matrix-valued C".into())),
    };
    let x = Letter::plain(c.clone());
    let h = chen(&vec![&x; count], n, lp, Base::Translates)?.trace()?;
    let y: Vec<f64> = (0..lp.m()).map(|j| 0.3 + 0.17 * j as f64).collect();
    let exact = h
        .d()
        .eval_f64(&y)
        .get(&(0, 1 << direction, 0, 0))
        .copied()
        .unwrap_or((0.0, 0.0));
    let value = |y: &[f64]| -> Result<Complex<f64>> {
        let letter = |t: f64| {
            let (x, v) = translate_point(lp, y, t);
            ghostless_contraction(c, n, &x, &v)
        };
        Ok(chen_quadrature(&letter, n, count, 24)?.trace())
    };
    let eps = 1e-4;
    let mut yp = y.clone();
    yp[direction] += eps;
    let mut ym = y.clone();
    ym[direction] -= eps;
    let fd = (value(&yp)? - value(&ym)?) / (2.0 * eps);
    let ex = Complex::new(exact.0, exact.1);
    let relative_error = (fd - ex).norm() / ex.norm().max(1.0);
    Ok(FdProbe {
        count,
        direction,
        exact,
        numeric: (fd.re, fd.im),
        relative_error,
        nontrivial: ex.norm() > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bv::fields::random_config;
    use crate::derham::{AlgebraOps, RandomSpec};
    use crate::liealg::LieAlgebraData;

    fn config(alg: LieAlgebraData, m: usize, seed: u64) -> SuperfieldConfig {
        let spec = RandomSpec {
            terms: 3,
            max_freq: 1,
            grassmann: 16,
            max_theta: 2,
            zero_bias: 0.3,
            ..RandomSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_config(&mut rng, m, Arc::new(AlgebraOps::new(Arc::new(alg))), &spec).unwrap()
    }

    #[test]
    fn odd_dimension_skeleton() {
        let lp = WindingLoop::new(vec![1, 0, 0], vec![0, 1, 0]).unwrap();
        let (mut stokes, mut fd, mut pairs) = (0, 0, 0);
        for seed in 0..6 {
            for (alg, lambda) in [
                (LieAlgebraData::gl(2).unwrap(), vec![(1, Scalar::rat(1, 2))]),
                (LieAlgebraData::so3(), vec![(1, Scalar::int(2))]),
                (LieAlgebraData::gl(2).unwrap(), vec![]),
            ] {
                let r = check_closedness_skeleton(&config(alg, 3, seed), &lambda, &lp, 3).unwrap();
                assert!(r.pass(), "seed {seed}: {r:?}");
                stokes += r.stokes.iter().filter(|s| s.nontrivial).count();
                fd += r.finite_differences.iter().filter(|p| p.nontrivial).count();
                pairs += r.face_pairs.iter().filter(|p| p.nontrivial && p.insertions > 1).count();
            }
        }
        assert!(stokes > 10 && fd > 0 && pairs > 5, "{stokes} {fd} {pairs}");
    }

    #[test]
    fn odd_dimension_skeleton_with_cubic_power() {
        let lp = WindingLoop::new(vec![1, 0, 0, 0, 1], vec![0, 1, 0, 2, 0]).unwrap();
        let r = check_closedness_skeleton(
            &config(LieAlgebraData::gl(2).unwrap(), 5, 3),
            &[(1, Scalar::one()), (3, Scalar::rat(1, 3))],
            &lp,
            2,
        )
        .unwrap();
        assert!(r.pass(), "{r:?}");
    }

    #[test]
    fn even_dimension_skeleton() {
        let lp = WindingLoop::new(vec![1, 0, 1, 0], vec![0, 1, 0, 3]).unwrap();
        let (mut witnesses, mut odd_cancel) = (0, 0);
        for seed in 0..6 {
            let r = check_closedness_skeleton(
                &config(LieAlgebraData::gl(2).unwrap(), 4, seed),
                &[(1, Scalar::one()), (2, Scalar::rat(1, 2))],
                &lp,
                3,
            )
            .unwrap();
            assert!(r.pass(), "seed {seed}: {r:?}");
            witnesses += usize::from(r.even_counterexample());
            odd_cancel += r.face_pairs.iter().filter(|p| p.insertions % 2 == 1 && p.nontrivial).count();
        }
        assert!(witnesses > 0 && odd_cancel > 0);
    }

    #[test]
    fn orientation_ledger() {
        for f in face_sign_ledger(3) {
            assert_eq!(f.normal_last, f.expected, "{f:?}");
            // the two conventions differ by (-1)^{n + 1}
            assert_eq!(f.normal_first, f.normal_last * crate::koszul::scalar::parity_sign(f.n as i64 + 1));
        }
    }

    #[test]
    fn order_range() {
        let lp = WindingLoop::new(vec![1, 0, 0], vec![0, 0, 0]).unwrap();
        let cfg = config(LieAlgebraData::gl(2).unwrap(), 3, 0);
        assert!(check_closedness_skeleton(&cfg, &[], &lp, 4).is_err());
    }
}
