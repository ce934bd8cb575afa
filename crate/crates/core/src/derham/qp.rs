//! Univariate quasi-polynomials `sum c t^p e^{2 pi i q t}` on `[0, 1]`.

use std::collections::BTreeMap;
use std::fmt;

use crate::koszul::scalar::{factorial, Scalar, C, Q};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QP {
    pub terms: BTreeMap<(u16, i32), Scalar>,
}

/// `1 / (2 pi i q)`.
pub fn inv_two_pi_i(q: i32) -> Scalar {
    Scalar::monomial(-1, C::new(Q::zero(), Q::new(-1, 2 * q as i64)))
}

impl QP {
    pub fn zero() -> QP {
        QP::default()
    }

    pub fn constant(c: Scalar) -> QP {
        QP::term(0, 0, c)
    }

    pub fn term(p: u16, q: i32, c: Scalar) -> QP {
        let mut out = QP::zero();
        out.add_term(p, q, c);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, p: u16, q: i32, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((p, q)).or_default();
        *e += &c;
        if e.is_zero() {
            self.terms.remove(&(p, q));
        }
    }

    pub fn add(&self, o: &QP) -> QP {
        let mut out = self.clone();
        for (&(p, q), c) in &o.terms {
            out.add_term(p, q, c.clone());
        }
        out
    }

    pub fn sub(&self, o: &QP) -> QP {
        self.add(&o.scale(&Scalar::int(-1)))
    }

    pub fn scale(&self, s: &Scalar) -> QP {
        let mut out = QP::zero();
        for (&(p, q), c) in &self.terms {
            out.add_term(p, q, c * s);
        }
        out
    }

    pub fn mul(&self, o: &QP) -> QP {
        let mut out = QP::zero();
        for (&(p1, q1), c1) in &self.terms {
            for (&(p2, q2), c2) in &o.terms {
                out.add_term(p1 + p2, q1 + q2, c1 * c2);
            }
        }
        out
    }

    /// Antiderivative vanishing at `t = 0`.
    pub fn integral_from_zero(&self) -> QP {
        let mut out = QP::zero();
        for (&(p, q), c) in &self.terms {
            if q == 0 {
                out.add_term(p + 1, 0, c.scale_q(&Q::new(1, p as i64 + 1)));
                continue;
            }
            let w_inv = inv_two_pi_i(q);
            let pf = factorial(p as u32);
            let mut winv_pow = w_inv.clone();
            for j in 0..=p {
                let coeff = &pf / &factorial((p - j) as u32);
                let sign = if j % 2 == 0 { Q::one() } else { Q::int(-1) };
                let s = winv_pow.scale_q(&(&coeff * &sign));
                out.add_term(p - j, q, c * &s);
                if j < p {
                    winv_pow = &winv_pow * &w_inv;
                }
            }
            let sign = if p % 2 == 0 { Q::one() } else { Q::int(-1) };
            let g0 = winv_pow.scale_q(&(&pf * &sign));
            out.add_term(0, 0, -(c * &g0));
        }
        out
    }

    /// Derivative in `t`.
    pub fn derivative(&self) -> QP {
        let mut out = QP::zero();
        for (&(p, q), c) in &self.terms {
            if p > 0 {
                out.add_term(p - 1, q, c.scale_q(&Q::int(p as i64)));
            }
            if q != 0 {
                let w = Scalar::monomial(1, C::new(Q::zero(), Q::int(2 * q as i64)));
                out.add_term(p, q, c * &w);
            }
        }
        out
    }

    pub fn eval_zero(&self) -> Scalar {
        let mut s = Scalar::zero();
        for (&(p, _), c) in &self.terms {
            if p == 0 {
                s += c;
            }
        }
        s
    }

    pub fn eval_one(&self) -> Scalar {
        let mut s = Scalar::zero();
        for c in self.terms.values() {
            s += c;
        }
        s
    }

    /// Value at `t = k / 4`.
    pub fn eval_quarter(&self, k: i64) -> Scalar {
        let mut s = Scalar::zero();
        for (&(p, q), c) in &self.terms {
            let tp = Q::new(k, 4).pow(p as u32);
            let ph = C::i_pow(q as i64 * k).scale(&tp);
            s += &c.scale_c(&ph);
        }
        s
    }

    pub fn integral_unit(&self) -> Scalar {
        self.integral_from_zero().eval_one()
    }

    /// Numerical value at real `t`.
    pub fn eval_f64(&self, t: f64) -> (f64, f64) {
        let (mut re, mut im) = (0.0, 0.0);
        for (&(p, q), c) in &self.terms {
            let (cr, ci) = c.to_complex();
            let mag = t.powi(p as i32);
            let ph = 2.0 * std::f64::consts::PI * q as f64 * t;
            let (er, ei) = (ph.cos() * mag, ph.sin() * mag);
            re += cr * er - ci * ei;
            im += cr * ei + ci * er;
        }
        (re, im)
    }
}

impl fmt::Display for QP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (&(p, q), c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{c}] t^{p} e(2 pi i {q} t)")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn antiderivative_inverts_derivative() {
        let mut f = QP::zero();
        f.add_term(2, 1, Scalar::int(3));
        f.add_term(1, -2, Scalar::rat(1, 2));
        f.add_term(3, 0, Scalar::int(1));
        let g = f.integral_from_zero();
        assert_eq!(g.derivative(), f);
        assert!(g.eval_zero().is_zero());
    }

    #[test]
    fn fourier_orthogonality() {
        assert!(QP::term(0, 3, Scalar::one()).integral_unit().is_zero());
        assert_eq!(QP::term(2, 0, Scalar::one()).integral_unit(), Scalar::rat(1, 3));
        // int_0^1 t e^{2 pi i t} dt = 1/(2 pi i)
        assert_eq!(QP::term(1, 1, Scalar::one()).integral_unit(), inv_two_pi_i(1));
    }
}
