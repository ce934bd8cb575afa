//! Generators `x`, `Dx`, `F`, `rho`, `lambda` of the sphere-bundle algebra, the constraint ideal and
//! the basic differential.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::koszul::scalar::{factorial, parity_sign, Scalar, Q};
use crate::koszul::{apply_derivation, berezin, DerivationRule, GradedElement, Generator, Monomial, Universe};

pub const MAX_N: usize = 8;

/// Polynomials in `x^a` (even), `Dx^a` (odd 1-forms), `F^{ab}` (even 2-forms, `a < b`), odd `rho_a` and
/// an even parameter `lambda`, modulo `<x, x> = 1` and `<x, Dx> = 0`.
#[derive(Clone, Debug)]
pub struct SphereAlgebra {
    pub n: usize,
    uni: Arc<Universe>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generating {
    Phi,
    Psi,
}

impl SphereAlgebra {
    pub fn new(n: usize) -> Result<SphereAlgebra> {
        if !(1..=MAX_N).contains(&n) {
            return Err(Error::Range(format!("fiber dimension {n} not in 1..={MAX_N}")));
        }
        let mut gens = Vec::new();
        for a in 1..=n {
            gens.push(Generator::new(&format!("rho{a}"), 1, 0));
        }
        for a in 1..=n {
            gens.push(Generator::new(&format!("x{a}"), 0, 0));
        }
        for a in 1..=n {
            gens.push(Generator::new(&format!("Dx{a}"), 1, 0));
        }
        for a in 1..=n {
            for b in a + 1..=n {
                gens.push(Generator::new(&format!("F{a}{b}"), 2, 0));
            }
        }
        gens.push(Generator::new("lambda", 0, 0));
        Ok(SphereAlgebra {
            n,
            uni: Universe::new(gens),
        })
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.uni
    }

    pub fn rho_index(&self, a: usize) -> usize {
        a
    }

    pub fn x_index(&self, a: usize) -> usize {
        self.n + a
    }

    pub fn dx_index(&self, a: usize) -> usize {
        2 * self.n + a
    }

    /// Index of `F^{ab}` for `a < b`.
    pub fn f_index(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b && b < self.n);
        let before: usize = (0..a).map(|r| self.n - 1 - r).sum();
        3 * self.n + before + (b - a - 1)
    }

    pub fn lambda_index(&self) -> usize {
        self.uni.len() - 1
    }

    fn is_x(&self, g: u16) -> bool {
        (self.n..2 * self.n).contains(&(g as usize))
    }

    fn is_dx(&self, g: u16) -> bool {
        (2 * self.n..3 * self.n).contains(&(g as usize))
    }

    fn is_f(&self, g: u16) -> bool {
        (3 * self.n..self.lambda_index()).contains(&(g as usize))
    }

    pub fn zero(&self) -> GradedElement {
        GradedElement::zero(&self.uni)
    }

    pub fn constant(&self, s: Scalar) -> GradedElement {
        GradedElement::constant(&self.uni, s)
    }

    pub fn rho(&self, a: usize) -> GradedElement {
        GradedElement::gen(&self.uni, self.rho_index(a))
    }

    pub fn x(&self, a: usize) -> GradedElement {
        GradedElement::gen(&self.uni, self.x_index(a))
    }

    pub fn dx(&self, a: usize) -> GradedElement {
        GradedElement::gen(&self.uni, self.dx_index(a))
    }

    /// Antisymmetric `F^{ab}`.
    pub fn f(&self, a: usize, b: usize) -> GradedElement {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => GradedElement::gen(&self.uni, self.f_index(a, b)),
            std::cmp::Ordering::Greater => GradedElement::gen(&self.uni, self.f_index(b, a)).neg(),
            std::cmp::Ordering::Equal => self.zero(),
        }
    }

    pub fn lambda(&self) -> GradedElement {
        GradedElement::gen(&self.uni, self.lambda_index())
    }

    fn sum(&self, parts: impl IntoIterator<Item = GradedElement>) -> Result<GradedElement> {
        parts.into_iter().try_fold(self.zero(), |acc, p| acc.add(&p))
    }

    /// `<x, x> - 1`.
    pub fn sphere_constraint(&self) -> Result<GradedElement> {
        self.sum((0..self.n).map(|a| self.x(a).pow(2)))?
            .sub(&self.constant(Scalar::one()))
    }

    /// `<x, Dx>`.
    pub fn tangency_constraint(&self) -> Result<GradedElement> {
        self.sum((0..self.n).map(|a| self.x(a).mul(&self.dx(a)).expect("same universe")))
    }

    /// Basic differential: `d x = Dx`, `d Dx = F x`, `d F = 0`, `d lambda = 0`, `rho` covariantly closed.
    pub fn d(&self, e: &GradedElement) -> Result<GradedElement> {
        let mut rule = DerivationRule::new(&self.uni, (1, 0));
        for a in 0..self.n {
            rule.set(self.x_index(a), self.dx(a));
            let fx = self.sum((0..self.n).map(|b| self.f(a, b).mul(&self.x(b)).expect("same universe")))?;
            rule.set(self.dx_index(a), fx);
        }
        apply_derivation(&rule.zero_rest(), e)
    }

    /// Contraction with the radial field: odd derivation `Dx^a -> x^a`.
    pub fn radial_contraction(&self, e: &GradedElement) -> Result<GradedElement> {
        let mut rule = DerivationRule::new(&self.uni, (-1, 0));
        for a in 0..self.n {
            rule.set(self.dx_index(a), self.x(a));
        }
        apply_derivation(&rule.zero_rest(), e)
    }

    /// Rewrites `x_n^2 -> 1 - sum_{a<n} x_a^2` until every `x_n` exponent is at most one.
    pub fn reduce_sphere(&self, e: &GradedElement) -> Result<GradedElement> {
        let xn = self.x_index(self.n - 1) as u16;
        let mut rest = self.constant(Scalar::one());
        for a in 0..self.n - 1 {
            rest = rest.sub(&self.x(a).pow(2))?;
        }
        let mut out = self.zero();
        let mut work = e.clone();
        while !work.is_zero() {
            let mut next = self.zero();
            for (m, c) in work.terms() {
                match m.iter().position(|&(g, p)| g == xn && p >= 2) {
                    None => out.add_term(m.clone(), c.clone()),
                    Some(i) => {
                        let mut lowered: Monomial = m.clone();
                        if lowered[i].1 == 2 {
                            lowered.remove(i);
                        } else {
                            lowered[i].1 -= 2;
                        }
                        let mut piece = self.zero();
                        piece.add_term(lowered, c.clone());
                        next = next.add(&piece.mul(&rest)?)?;
                    }
                }
            }
            work = next;
        }
        Ok(out)
    }

    /// Canonical representative modulo the constraint ideal: `w - <x, Dx> iota(w)` reduced on the sphere.
    pub fn normal_form(&self, e: &GradedElement) -> Result<GradedElement> {
        let e = self.reduce_sphere(e)?;
        let v = self.tangency_constraint()?;
        let projected = e.sub(&v.mul(&self.radial_contraction(&e)?)?)?;
        self.reduce_sphere(&projected)
    }

    /// Leading-term rewrite `x_n^2 -> 1 - sum x_a^2`, `x_n Dx_n -> -sum_{a<n} x_a Dx_a`.
    /// Stays in the same class; not a canonical form.
    pub fn leading_rewrite(&self, e: &GradedElement) -> Result<GradedElement> {
        let (xn, dxn) = (self.x_index(self.n - 1) as u16, self.dx_index(self.n - 1) as u16);
        let mut tail = self.zero();
        for a in 0..self.n - 1 {
            tail = tail.sub(&self.x(a).mul(&self.dx(a))?)?;
        }
        let mut out = self.zero();
        let mut work = self.reduce_sphere(e)?;
        while !work.is_zero() {
            let mut next = self.zero();
            for (m, c) in work.terms() {
                let ix = m.iter().position(|&(g, _)| g == xn);
                let id = m.iter().position(|&(g, _)| g == dxn);
                let (Some(ix), Some(id)) = (ix, id) else {
                    out.add_term(m.clone(), c.clone());
                    continue;
                };
                // x_n is even, so it can be pulled next to Dx_n freely; Dx_n is moved to the front
                let mut word: Vec<usize> = Vec::new();
                for (k, &(g, p)) in m.iter().enumerate() {
                    let p = p - u16::from(k == ix) - u16::from(k == id);
                    word.extend(std::iter::repeat(g as usize).take(p as usize));
                }
                let before_dx = m[..id]
                    .iter()
                    .filter(|&&(g, _)| self.uni.bidegree(g as usize).0 % 2 != 0)
                    .map(|&(_, p)| p as i64)
                    .sum::<i64>();
                let coeff = c * &Scalar::sign(parity_sign(before_dx));
                let rest = GradedElement::from_word(&self.uni, &word, coeff);
                next = next.add(&tail.mul(&rest)?)?;
            }
            work = self.reduce_sphere(&next)?;
        }
        Ok(out)
    }

    /// Antipodal map `x -> -x`, `Dx -> -Dx`.
    pub fn antipodal(&self, e: &GradedElement) -> GradedElement {
        e.map_coeffs(|m, c| {
            let flips: i64 = m
                .iter()
                .filter(|&&(g, _)| self.is_x(g) || self.is_dx(g))
                .map(|&(_, p)| p as i64)
                .sum();
            c * &Scalar::sign(parity_sign(flips))
        })
    }

    /// Number of `F` factors in a monomial.
    pub fn f_degree(&self, m: &Monomial) -> usize {
        m.iter().filter(|&&(g, _)| self.is_f(g)).map(|&(_, p)| p as usize).sum()
    }

    /// True when the monomial involves `x` or `Dx`.
    pub fn on_sphere(&self, m: &Monomial) -> bool {
        m.iter().any(|&(g, _)| self.is_x(g) || self.is_dx(g))
    }

    /// `eps_{a_1 ... a_n} [x^{a_1}] F^{..} ... F^{..} Dx^{..} ... Dx^{..}` with `k` curvatures and `l` one-forms.
    pub fn eps(&self, with_x: bool, k: usize, l: usize) -> Result<GradedElement> {
        if usize::from(with_x) + 2 * k + l != self.n {
            return Err(Error::Dimension(format!(
                "eps monomial with x = {with_x}, k = {k}, l = {l} needs {} indices, n = {}",
                usize::from(with_x) + 2 * k + l,
                self.n
            )));
        }
        let mut out = self.zero();
        let mut perm: Vec<usize> = (0..self.n).collect();
        permutations(&mut perm, 0, 1, &mut |p, sign| {
            let mut word = Vec::new();
            let mut s = sign;
            let mut i = 0;
            if with_x {
                word.push(self.x_index(p[0]));
                i = 1;
            }
            for _ in 0..k {
                let (a, b) = (p[i], p[i + 1]);
                if a > b {
                    s = -s;
                }
                word.push(self.f_index(a.min(b), a.max(b)));
                i += 2;
            }
            for &a in &p[i..] {
                word.push(self.dx_index(a));
            }
            let piece = GradedElement::from_word(&self.uni, &word, Scalar::sign(s));
            for (m, c) in piece.terms() {
                out.add_term(m.clone(), c.clone());
            }
        });
        Ok(out)
    }

    /// `int [D rho] rho_1 ... rho_n w = w`.
    pub fn berezin(&self, e: &GradedElement) -> Result<GradedElement> {
        let rho: Vec<usize> = (0..self.n).map(|a| self.rho_index(a)).collect();
        berezin(e, &rho)
    }

    /// `S = <rho, Dx> + (lambda / 2) <rho, F rho>`.
    pub fn action(&self) -> Result<GradedElement> {
        let mut s = self.zero();
        for a in 0..self.n {
            s = s.add(&self.rho(a).mul(&self.dx(a))?)?;
            for b in 0..self.n {
                let t = self.rho(a).mul(&self.f(a, b))?.mul(&self.rho(b))?;
                s = s.add(&self.lambda().mul(&t)?.scale(&Scalar::rat(1, 2)))?;
            }
        }
        Ok(s)
    }

    /// Berezin integral of `exp S` or `<rho, x> exp S`, as a polynomial in `lambda`.
    pub fn generating_function(&self, which: Generating) -> Result<GradedElement> {
        let e = self.action()?.exp_truncated(self.n as u32);
        let integrand = match which {
            Generating::Phi => e,
            Generating::Psi => self.sum((0..self.n).map(|a| self.rho(a).mul(&self.x(a)).expect("same universe")))?.mul(&e)?,
        };
        self.berezin(&integrand)
    }

    /// Coefficient of `lambda^k`, with `lambda` removed.
    pub fn lambda_coefficient(&self, e: &GradedElement, k: usize) -> GradedElement {
        let l = self.lambda_index() as u16;
        let mut out = self.zero();
        for (m, c) in e.terms() {
            let p = m.iter().find(|&&(g, _)| g == l).map_or(0, |&(_, p)| p as usize);
            if p == k {
                let stripped: Monomial = m.iter().filter(|&&(g, _)| g != l).cloned().collect();
                out.add_term(stripped, c.clone());
            }
        }
        out
    }

    /// `sum_k lambda^k parts[k]`.
    pub fn lambda_series(&self, parts: &[GradedElement]) -> Result<GradedElement> {
        let mut out = self.zero();
        for (k, p) in parts.iter().enumerate() {
            out = out.add(&self.lambda().pow(k as u32).mul(p)?)?;
        }
        Ok(out)
    }

    /// Closed form of the `lambda^k` coefficient of `Phi`.
    pub fn phi_closed(&self, k: usize) -> Result<GradedElement> {
        if 2 * k > self.n {
            return Ok(self.zero());
        }
        let c = Scalar::sign(parity_sign((k + self.n / 2) as i64))
            * Scalar::from_q(inverse_weight(k, self.n - 2 * k));
        Ok(self.eps(false, k, self.n - 2 * k)?.scale(&c))
    }

    /// Closed form of the `lambda^k` coefficient of `Psi`.
    pub fn psi_closed(&self, k: usize) -> Result<GradedElement> {
        if 2 * k + 1 > self.n {
            return Ok(self.zero());
        }
        let s = (self.n - 1) / 2;
        let c = Scalar::sign(parity_sign((k + s) as i64))
            * Scalar::from_q(inverse_weight(k, self.n - 2 * k - 1));
        Ok(self.eps(true, k, self.n - 2 * k - 1)?.scale(&c))
    }

    /// Pfaffian of the symbolic `F` by the perfect-matching expansion along the first row.
    pub fn pfaffian(&self) -> Result<GradedElement> {
        let idx: Vec<usize> = (0..self.n).collect();
        self.pfaffian_of(&idx)
    }

    fn pfaffian_of(&self, idx: &[usize]) -> Result<GradedElement> {
        if idx.is_empty() {
            return Ok(self.constant(Scalar::one()));
        }
        if idx.len() % 2 == 1 {
            return Ok(self.zero());
        }
        let mut out = self.zero();
        for j in 1..idx.len() {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|&(k, _)| k != 0 && k != j).map(|(_, &a)| a).collect();
            let term = self.f(idx[0], idx[j]).mul(&self.pfaffian_of(&rest)?)?;
            out = out.add(&term.scale(&Scalar::sign(parity_sign(j as i64 + 1))))?;
        }
        Ok(out)
    }

    /// `sum_a (-1)^a x^a Dx^0 ... (omit a) ... Dx^{n-1}`: the induced volume form on the sphere.
    pub fn sphere_volume_form(&self) -> Result<GradedElement> {
        let mut out = self.zero();
        for a in 0..self.n {
            let mut word = vec![self.x_index(a)];
            word.extend((0..self.n).filter(|&b| b != a).map(|b| self.dx_index(b)));
            out = out.add(&GradedElement::from_word(&self.uni, &word, Scalar::sign(parity_sign(a as i64))))?;
        }
        Ok(out)
    }
}

/// `1 / (2^k k! j!)`.
fn inverse_weight(k: usize, j: usize) -> Q {
    (Q::int(1 << k) * factorial(k as u32) * factorial(j as u32)).recip()
}

/// Recursive enumeration of permutations with their signs.
fn permutations(p: &mut Vec<usize>, start: usize, sign: i32, f: &mut impl FnMut(&[usize], i32)) {
    if start == p.len() {
        f(p, sign);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permutations(p, start + 1, if i == start { sign } else { -sign }, f);
        p.swap(start, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_small_cases() {
        let a = SphereAlgebra::new(1).unwrap();
        assert_eq!(a.eps(true, 0, 0).unwrap(), a.x(0));
        let a = SphereAlgebra::new(3).unwrap();
        // six signed terms collapse pairwise onto three monomials x^a Dx^b Dx^c, b < c
        let e = a.eps(true, 0, 2).unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(e, a.sphere_volume_form().unwrap().scale(&Scalar::int(2)));
        assert!(a.eps(true, 1, 1).is_err());
        assert_eq!(a.antipodal(&e), e.neg());
    }

    #[test]
    fn constraints_reduce_to_zero() {
        for n in 2..=5 {
            let a = SphereAlgebra::new(n).unwrap();
            for g in [a.sphere_constraint().unwrap(), a.tangency_constraint().unwrap()] {
                assert!(a.normal_form(&g).unwrap().is_zero());
                assert!(a.normal_form(&a.d(&g).unwrap()).unwrap().is_zero());
            }
            // top wedge of Dx lies in the ideal without any x factor
            let top = a.eps(false, 0, n).unwrap();
            assert!(!top.is_zero());
            assert!(a.normal_form(&top).unwrap().is_zero());
        }
    }

    #[test]
    fn two_by_two_pfaffian() {
        let a = SphereAlgebra::new(2).unwrap();
        assert_eq!(a.pfaffian().unwrap(), a.f(0, 1));
        let phi = a.generating_function(Generating::Phi).unwrap();
        assert_eq!(a.lambda_coefficient(&phi, 1), a.f(0, 1));
    }

    #[test]
    fn out_of_range() {
        assert!(SphereAlgebra::new(0).is_err());
        assert!(SphereAlgebra::new(MAX_N + 1).is_err());
    }
}
