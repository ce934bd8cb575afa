//! Bigraded supercommutative algebras over `Scalar`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use smallvec::SmallVec;

use super::scalar::{factorial, parity_sign, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommClass {
    Supercommutative,
    MatrixValued,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub form_degree: i32,
    pub ghost: i32,
    pub class: CommClass,
}

impl Generator {
    pub fn new(name: &str, form_degree: i32, ghost: i32) -> Generator {
        Generator {
            name: name.to_string(),
            form_degree,
            ghost,
            class: CommClass::Supercommutative,
        }
    }

    pub fn total_degree(&self) -> i32 {
        self.form_degree + self.ghost
    }

    pub fn parity(&self) -> i32 {
        self.total_degree().rem_euclid(2)
    }
}

/// Sign for exchanging homogeneous elements of bidegrees `a` and `b`.
pub fn swap_sign(a: (i32, i32), b: (i32, i32)) -> i32 {
    parity_sign((a.0 * b.0 + a.1 * b.1) as i64)
}

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

/// Ordered generator set; registration order is the canonical monomial order.
#[derive(Debug)]
pub struct Universe {
    id: u64,
    gens: Vec<Generator>,
}

impl Universe {
    pub fn new(gens: Vec<Generator>) -> Arc<Universe> {
        Arc::new(Universe {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            gens,
        })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }

    pub fn bidegree(&self, g: usize) -> (i32, i32) {
        let gen = &self.gens[g];
        (gen.form_degree, gen.ghost)
    }

    fn swap(&self, g: u16, h: u16) -> i32 {
        swap_sign(self.bidegree(g as usize), self.bidegree(h as usize))
    }

    fn self_odd(&self, g: u16) -> bool {
        self.swap(g, g) < 0
    }
}

/// Sorted `(generator, exponent)` list.
pub type Monomial = SmallVec<[(u16, u16); 4]>;

#[derive(Clone, Debug)]
pub struct GradedElement {
    uni: Arc<Universe>,
    terms: BTreeMap<Monomial, Scalar>,
}

impl PartialEq for GradedElement {
    fn eq(&self, o: &GradedElement) -> bool {
        self.uni.id == o.uni.id && self.terms == o.terms
    }
}

impl GradedElement {
    pub fn zero(uni: &Arc<Universe>) -> GradedElement {
        GradedElement {
            uni: uni.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(uni: &Arc<Universe>, s: Scalar) -> GradedElement {
        let mut e = GradedElement::zero(uni);
        e.add_term(Monomial::new(), s);
        e
    }

    pub fn one(uni: &Arc<Universe>) -> GradedElement {
        GradedElement::constant(uni, Scalar::one())
    }

    pub fn gen(uni: &Arc<Universe>, g: usize) -> GradedElement {
        let mut e = GradedElement::zero(uni);
        let mut m = Monomial::new();
        m.push((g as u16, 1));
        e.add_term(m, Scalar::one());
        e
    }

    pub fn named(uni: &Arc<Universe>, name: &str) -> Result<GradedElement> {
        let g = uni
            .index_of(name)
            .ok_or_else(|| Error::UndefinedImage(name.to_string()))?;
        Ok(GradedElement::gen(uni, g))
    }

    /// Builds an element from an unordered word of generators, absorbing the Koszul sign.
    pub fn from_word(uni: &Arc<Universe>, word: &[usize], coeff: Scalar) -> GradedElement {
        let mut acc = GradedElement::constant(uni, coeff);
        for &g in word {
            acc = acc.mul_unchecked(&GradedElement::gen(uni, g));
        }
        acc
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.uni
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the generator-free monomial.
    pub fn constant_part(&self) -> Scalar {
        self.terms.get(&Monomial::new()).cloned().unwrap_or_default()
    }

    pub fn coefficient(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn monomial_bidegree(&self, m: &Monomial) -> (i32, i32) {
        m.iter().fold((0, 0), |(d, g), &(x, e)| {
            let (dx, gx) = self.uni.bidegree(x as usize);
            (d + dx * e as i32, g + gx * e as i32)
        })
    }

    /// Bidegree if homogeneous; `None` for zero or mixed elements.
    pub fn bidegree(&self) -> Option<(i32, i32)> {
        let mut it = self.terms.keys().map(|m| self.monomial_bidegree(m));
        let first = it.next()?;
        it.all(|b| b == first).then_some(first)
    }

    /// Splits into bihomogeneous components.
    pub fn homogeneous_parts(&self) -> BTreeMap<(i32, i32), GradedElement> {
        let mut out: BTreeMap<(i32, i32), GradedElement> = BTreeMap::new();
        for (m, c) in &self.terms {
            let b = self.monomial_bidegree(m);
            out.entry(b)
                .or_insert_with(|| GradedElement::zero(&self.uni))
                .add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    fn check(&self, o: &GradedElement) -> Result<()> {
        if self.uni.id == o.uni.id {
            Ok(())
        } else {
            Err(Error::UniverseMismatch)
        }
    }

    pub fn add(&self, o: &GradedElement) -> Result<GradedElement> {
        self.check(o)?;
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, o: &GradedElement) -> Result<GradedElement> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> GradedElement {
        self.scale(&Scalar::int(-1))
    }

    pub fn scale(&self, s: &Scalar) -> GradedElement {
        let mut out = GradedElement::zero(&self.uni);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Product of two monomials with the Koszul sign; `None` if it vanishes.
    fn mul_monomials(&self, a: &Monomial, b: &Monomial) -> Option<(Monomial, i32)> {
        let mut sign = 1;
        for &(h, eh) in b.iter() {
            for &(g, eg) in a.iter().rev() {
                if g <= h {
                    break;
                }
                if (eg as u32 * eh as u32) % 2 == 1 && self.uni.swap(g, h) < 0 {
                    sign = -sign;
                }
            }
        }
        let mut out = Monomial::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
            let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
            if take_a {
                out.push(a[i]);
                i += 1;
            } else if take_b {
                out.push(b[j]);
                j += 1;
            } else {
                let g = a[i].0;
                if self.uni.self_odd(g) {
                    return None;
                }
                out.push((g, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
        Some((out, sign))
    }

    fn mul_signed<F>(&self, o: &GradedElement, extra: F) -> GradedElement
    where
        F: Fn((i32, i32), (i32, i32)) -> i32,
    {
        let mut out = GradedElement::zero(&self.uni);
        for (ma, ca) in &self.terms {
            let ba = self.monomial_bidegree(ma);
            for (mb, cb) in &o.terms {
                if let Some((m, s)) = self.mul_monomials(ma, mb) {
                    let s = s * extra(ba, o.monomial_bidegree(mb));
                    let c = ca * cb;
                    out.add_term(m, if s < 0 { -c } else { c });
                }
            }
        }
        out
    }

    fn mul_unchecked(&self, o: &GradedElement) -> GradedElement {
        self.mul_signed(o, |_, _| 1)
    }

    /// Associative bigraded product.
    pub fn mul(&self, o: &GradedElement) -> Result<GradedElement> {
        self.check(o)?;
        Ok(self.mul_unchecked(o))
    }

    /// `a . b = (-1)^{gh a deg b} a b`, distributed over bihomogeneous parts.
    pub fn dot_mul(&self, o: &GradedElement) -> Result<GradedElement> {
        self.check(o)?;
        Ok(self.mul_signed(o, |a, b| parity_sign((a.1 * b.0) as i64)))
    }

    pub fn pow(&self, k: u32) -> GradedElement {
        let mut out = GradedElement::one(&self.uni);
        for _ in 0..k {
            out = out.mul_unchecked(self);
        }
        out
    }

    /// `sum_{k <= order} x^k / k!`.
    pub fn exp_truncated(&self, order: u32) -> GradedElement {
        let mut out = GradedElement::one(&self.uni);
        let mut p = GradedElement::one(&self.uni);
        for k in 1..=order {
            p = p.mul_unchecked(self);
            if p.is_zero() {
                break;
            }
            out = out
                .add(&p.scale(&Scalar::from_q(factorial(k).recip())))
                .expect("same universe");
        }
        out
    }

    /// Maps every coefficient through `f`.
    pub fn map_coeffs<F: Fn(&Monomial, &Scalar) -> Scalar>(&self, f: F) -> GradedElement {
        let mut out = GradedElement::zero(&self.uni);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(m, c));
        }
        out
    }

    /// Keeps only the terms accepted by `keep`.
    pub fn filter<F: Fn(&Monomial) -> bool>(&self, keep: F) -> GradedElement {
        let mut out = GradedElement::zero(&self.uni);
        for (m, c) in &self.terms {
            if keep(m) {
                out.add_term(m.clone(), c.clone());
            }
        }
        out
    }

    /// Re-embeds into another universe via a generator index map.
    pub fn transfer(&self, target: &Arc<Universe>, map: &[usize]) -> GradedElement {
        let mut out = GradedElement::zero(target);
        for (m, c) in &self.terms {
            let mut word = Vec::new();
            for &(g, e) in m.iter() {
                for _ in 0..e {
                    word.push(map[g as usize]);
                }
            }
            let piece = GradedElement::from_word(target, &word, c.clone());
            for (mm, cc) in piece.terms {
                out.add_term(mm, cc);
            }
        }
        out
    }

    fn expand(m: &Monomial) -> Vec<u16> {
        let mut v = Vec::new();
        for &(g, e) in m.iter() {
            for _ in 0..e {
                v.push(g);
            }
        }
        v
    }

    fn word_element(&self, word: &[u16]) -> GradedElement {
        let w: Vec<usize> = word.iter().map(|&g| g as usize).collect();
        GradedElement::from_word(&self.uni, &w, Scalar::one())
    }
}

impl fmt::Display for GradedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (m, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            if !m.is_empty() {
                write!(f, " *")?;
                for &(g, e) in m.iter() {
                    write!(f, " {}", self.uni.gens[g as usize].name)?;
                    if e > 1 {
                        write!(f, "^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Graded derivation given by its values on generators.
#[derive(Clone, Debug)]
pub struct DerivationRule {
    pub uni: Arc<Universe>,
    pub images: Vec<Option<GradedElement>>,
    pub degree: (i32, i32),
}

impl DerivationRule {
    pub fn new(uni: &Arc<Universe>, degree: (i32, i32)) -> DerivationRule {
        DerivationRule {
            uni: uni.clone(),
            images: vec![None; uni.len()],
            degree,
        }
    }

    pub fn set(&mut self, g: usize, image: GradedElement) {
        self.images[g] = Some(image);
    }

    /// Sets every unset generator image to zero.
    pub fn zero_rest(mut self) -> DerivationRule {
        for img in &mut self.images {
            if img.is_none() {
                *img = Some(GradedElement::zero(&self.uni));
            }
        }
        self
    }

    /// Left partial derivative with respect to generator `g`.
    pub fn partial(uni: &Arc<Universe>, g: usize) -> DerivationRule {
        let (d, h) = uni.bidegree(g);
        let mut r = DerivationRule::new(uni, (-d, -h));
        r.set(g, GradedElement::one(uni));
        r.zero_rest()
    }
}

/// Extends `rule` to `expr` by the graded Leibnitz rule.
pub fn apply_derivation(rule: &DerivationRule, expr: &GradedElement) -> Result<GradedElement> {
    if rule.uni.id != expr.uni.id {
        return Err(Error::UniverseMismatch);
    }
    let mut out = GradedElement::zero(&expr.uni);
    for (m, c) in &expr.terms {
        let word = GradedElement::expand(m);
        let mut sign = 1;
        for i in 0..word.len() {
            let g = word[i] as usize;
            let img = rule.images[g]
                .as_ref()
                .ok_or_else(|| Error::UndefinedImage(expr.uni.gens[g].name.clone()))?;
            if !img.is_zero() {
                let pre = expr.word_element(&word[..i]);
                let suf = expr.word_element(&word[i + 1..]);
                let piece = pre.mul_unchecked(img).mul_unchecked(&suf);
                let coeff = if sign < 0 { -c } else { c.clone() };
                for (mm, cc) in piece.terms {
                    out.add_term(mm, &cc * &coeff);
                }
            }
            let b = expr.uni.bidegree(g);
            sign *= parity_sign((rule.degree.0 * b.0 + rule.degree.1 * b.1) as i64);
        }
    }
    Ok(out)
}

/// Berezin integral over the ordered odd generators `rho`: coefficient of `rho_1 ... rho_n`
/// after moving them to the left.
pub fn berezin(expr: &GradedElement, rho: &[usize]) -> Result<GradedElement> {
    for &r in rho {
        if r >= expr.uni.len() || !expr.uni.self_odd(r as u16) {
            return Err(Error::Parity(format!("berezin variable {r} is not odd")));
        }
    }
    let mut out = GradedElement::zero(&expr.uni);
    'terms: for (m, c) in &expr.terms {
        for &r in rho {
            if !m.iter().any(|&(g, _)| g as usize == r) {
                continue 'terms;
            }
        }
        let rest: Monomial = m
            .iter()
            .filter(|(g, _)| !rho.contains(&(*g as usize)))
            .cloned()
            .collect();
        let mut target: Vec<u16> = rho.iter().map(|&r| r as u16).collect();
        target.extend(GradedElement::expand(&rest));
        let sign = reorder_sign(&expr.uni, &GradedElement::expand(m), &target);
        out.add_term(rest, if sign < 0 { -c } else { c.clone() });
    }
    Ok(out)
}

/// Sign `s` with `from = s * target` as products, for words that are permutations of each other.
fn reorder_sign(uni: &Universe, from: &[u16], target: &[u16]) -> i32 {
    let mut pos: Vec<usize> = Vec::with_capacity(from.len());
    let mut used = vec![false; target.len()];
    for &g in from {
        let p = (0..target.len())
            .find(|&k| !used[k] && target[k] == g)
            .expect("words are permutations");
        used[p] = true;
        pos.push(p);
    }
    let mut sign = 1;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if pos[i] > pos[j] && uni.swap(from[i], from[j]) < 0 {
                sign = -sign;
            }
        }
    }
    sign
}

/// Lie-algebra-valued element: components along a basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LieValued {
    pub comps: Vec<GradedElement>,
}

impl LieValued {
    pub fn zero(uni: &Arc<Universe>, dim: usize) -> LieValued {
        LieValued {
            comps: vec![GradedElement::zero(uni); dim],
        }
    }

    pub fn basis(x: GradedElement, dim: usize, i: usize) -> LieValued {
        let mut comps = vec![GradedElement::zero(x.universe()); dim];
        comps[i] = x;
        LieValued { comps }
    }

    pub fn add(&self, o: &LieValued) -> Result<LieValued> {
        let comps = self
            .comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(LieValued { comps })
    }

    pub fn scale(&self, s: &Scalar) -> LieValued {
        LieValued {
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    fn bracket_with<F>(&self, o: &LieValued, table: &[(usize, usize, usize, Scalar)], mul: F) -> Result<LieValued>
    where
        F: Fn(&GradedElement, &GradedElement) -> Result<GradedElement>,
    {
        if self.comps.len() != o.comps.len() {
            return Err(Error::Algebra("Lie-valued operands of different dimension".into()));
        }
        let uni = self
            .comps
            .first()
            .map(|c| c.universe().clone())
            .ok_or_else(|| Error::Algebra("zero-dimensional algebra".into()))?;
        let mut out = LieValued::zero(&uni, self.comps.len());
        for (i, j, k, f) in table {
            let p = mul(&self.comps[*i], &o.comps[*j])?;
            if !p.is_zero() {
                out.comps[*k] = out.comps[*k].add(&p.scale(f))?;
            }
        }
        Ok(out)
    }

    /// `[a, b]` with structure constants given as sparse `(i, j, k, f_ij^k)`.
    pub fn bracket(&self, o: &LieValued, table: &[(usize, usize, usize, Scalar)]) -> Result<LieValued> {
        self.bracket_with(o, table, |a, b| a.mul(b))
    }

    /// Dot bracket `(-1)^{gh a deg b} [a, b]`.
    pub fn dot_bracket(&self, o: &LieValued, table: &[(usize, usize, usize, Scalar)]) -> Result<LieValued> {
        self.bracket_with(o, table, |a, b| a.dot_mul(b))
    }
}

/// Square matrix of supercommuting entries (matrix-valued generators).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixElement {
    pub n: usize,
    pub entries: Vec<GradedElement>,
}

impl MatrixElement {
    pub fn zero(uni: &Arc<Universe>, n: usize) -> MatrixElement {
        MatrixElement {
            n,
            entries: vec![GradedElement::zero(uni); n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &GradedElement {
        &self.entries[i * self.n + j]
    }

    fn mul_with<F>(&self, o: &MatrixElement, mul: F) -> Result<MatrixElement>
    where
        F: Fn(&GradedElement, &GradedElement) -> Result<GradedElement>,
    {
        if self.n != o.n {
            return Err(Error::Dimension("matrix sizes differ".into()));
        }
        let n = self.n;
        let uni = self.entries[0].universe().clone();
        let mut out = MatrixElement::zero(&uni, n);
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let p = mul(self.get(i, j), o.get(j, k))?;
                    out.entries[i * n + k] = out.entries[i * n + k].add(&p)?;
                }
            }
        }
        Ok(out)
    }

    pub fn mul(&self, o: &MatrixElement) -> Result<MatrixElement> {
        self.mul_with(o, |a, b| a.mul(b))
    }

    pub fn dot_mul(&self, o: &MatrixElement) -> Result<MatrixElement> {
        self.mul_with(o, |a, b| a.dot_mul(b))
    }

    pub fn sub(&self, o: &MatrixElement) -> Result<MatrixElement> {
        let entries = self
            .entries
            .iter()
            .zip(&o.entries)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(MatrixElement { n: self.n, entries })
    }

    /// Graded commutator of dot products, for homogeneous operands of total degrees `da`, `db`.
    pub fn dot_bracket(&self, o: &MatrixElement, da: i32, db: i32) -> Result<MatrixElement> {
        let ab = self.dot_mul(o)?;
        let ba = o.dot_mul(self)?;
        let s = Scalar::int(parity_sign((da * db) as i64) as i64);
        let entries = ab
            .entries
            .iter()
            .zip(&ba.entries)
            .map(|(x, y)| x.sub(&y.scale(&s)))
            .collect::<Result<_>>()?;
        Ok(MatrixElement { n: self.n, entries })
    }

    pub fn trace(&self) -> Result<GradedElement> {
        let uni = self.entries[0].universe().clone();
        let mut t = GradedElement::zero(&uni);
        for i in 0..self.n {
            t = t.add(self.get(i, i))?;
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni() -> Arc<Universe> {
        Universe::new(vec![
            Generator::new("x", 0, 0),
            Generator::new("y", 1, 0),
            Generator::new("c", 0, 1),
            Generator::new("dx", 1, 0),
            Generator::new("u", 1, 1),
        ])
    }

    #[test]
    fn odd_square_vanishes() {
        let u = uni();
        let dx = GradedElement::named(&u, "dx").unwrap();
        assert!(dx.mul(&dx).unwrap().is_zero());
        let w = GradedElement::named(&u, "u").unwrap();
        assert!(!w.mul(&w).unwrap().is_zero());
    }

    #[test]
    fn bigraded_versus_dot_sign() {
        let u = uni();
        let c = GradedElement::named(&u, "c").unwrap();
        let dx = GradedElement::named(&u, "dx").unwrap();
        assert_eq!(c.mul(&dx).unwrap(), dx.mul(&c).unwrap());
        assert_eq!(c.dot_mul(&dx).unwrap(), dx.dot_mul(&c).unwrap().neg());
        assert_eq!(c.dot_mul(&dx).unwrap(), c.mul(&dx).unwrap().neg());
    }

    #[test]
    fn polynomial_derivation() {
        let u = uni();
        let x = GradedElement::named(&u, "x").unwrap();
        let y = GradedElement::named(&u, "y").unwrap();
        let mut d = DerivationRule::new(&u, (1, 0));
        d.set(0, y.clone());
        let d = d.zero_rest();
        let r = apply_derivation(&d, &x.mul(&x).unwrap()).unwrap();
        assert_eq!(r, y.mul(&x).unwrap().scale(&Scalar::int(2)));
    }

    #[test]
    fn undefined_image_names_generator() {
        let u = uni();
        let d = DerivationRule::new(&u, (1, 0));
        let x = GradedElement::named(&u, "x").unwrap();
        match apply_derivation(&d, &x) {
            Err(Error::UndefinedImage(n)) => assert_eq!(n, "x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_universe() {
        let a = GradedElement::one(&uni());
        let b = GradedElement::one(&uni());
        assert!(matches!(a.mul(&b), Err(Error::UniverseMismatch)));
    }
}
