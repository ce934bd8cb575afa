//! Forms with trigonometric and quasi-polynomial coefficients, Lie values and Grassmann coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use smallvec::SmallVec;

use super::qp::QP;
use crate::error::{Error, Result};
use crate::koszul::scalar::{parity_sign, Scalar, C, Q};
use crate::liealg::{LieAlgebraData, Mode};

pub const MAX_COORDS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoordKind {
    /// `x in [0, 2 pi)`, modes `e^{i k x}`.
    Periodic,
    /// `t in [0, 1]`, modes `t^p e^{2 pi i q t}`.
    Unit,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Domain(Arc<[CoordKind]>);

impl Domain {
    pub fn new(kinds: Vec<CoordKind>) -> Domain {
        assert!(kinds.len() <= MAX_COORDS, "at most {MAX_COORDS} coordinates");
        Domain(kinds.into())
    }

    pub fn torus(m: usize) -> Domain {
        Domain::new(vec![CoordKind::Periodic; m])
    }

    /// `n` unit coordinates followed by the coordinates of `base`.
    pub fn with_unit_fiber(n: usize, base: &Domain) -> Domain {
        let mut k = vec![CoordKind::Unit; n];
        k.extend(base.0.iter().copied());
        Domain::new(k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn kind(&self, j: usize) -> CoordKind {
        self.0[j]
    }

    pub fn kinds(&self) -> &[CoordKind] {
        &self.0
    }

    pub fn top_mask(&self) -> u16 {
        ((1u32 << self.len()) - 1) as u16
    }

    pub fn is_torus(&self) -> bool {
        self.0.iter().all(|k| *k == CoordKind::Periodic)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValueKind {
    Scalar,
    Adjoint,
    Coadjoint,
    /// `n x n` matrices, index `i * n + j`.
    Matrix(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub gh: i8,
    pub freq: [i8; MAX_COORDS],
    pub pow: [u8; MAX_COORDS],
    pub mask: u16,
    pub val: u16,
    pub gmask: u16,
}

impl Key {
    pub fn new(gh: i8, mask: u16, val: u16, gmask: u16) -> Key {
        Key {
            gh,
            freq: [0; MAX_COORDS],
            pow: [0; MAX_COORDS],
            mask,
            val,
            gmask,
        }
    }

    pub fn form_degree(&self) -> i32 {
        self.mask.count_ones() as i32
    }

    pub fn total_degree(&self) -> i32 {
        self.form_degree() + self.gh as i32
    }

    pub fn is_zero_mode(&self) -> bool {
        self.freq.iter().all(|&k| k == 0) && self.pow.iter().all(|&p| p == 0)
    }
}

/// Sign of `dx^a ^ dx^b` relative to `dx^{a|b}`; zero on overlap.
pub fn merge_sign(a: u16, b: u16) -> i32 {
    if a & b != 0 {
        return 0;
    }
    let mut swaps = 0;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        swaps += (a.checked_shr(j + 1).unwrap_or(0)).count_ones();
        bb &= bb - 1;
    }
    parity_sign(swaps as i64)
}

/// Sparse bilinear map on value indices.
#[derive(Clone, Debug)]
pub struct Bilinear {
    pub nb: usize,
    pub out: ValueKind,
    pub entries: Vec<SmallVec<[(u16, Scalar); 2]>>,
}

impl Bilinear {
    fn from_table(na: usize, nb: usize, out: ValueKind, table: &[(usize, usize, usize, Scalar)]) -> Bilinear {
        let mut entries = vec![SmallVec::new(); na * nb];
        for (i, j, k, c) in table {
            entries[i * nb + j].push((*k as u16, c.clone()));
        }
        Bilinear { nb, out, entries }
    }

    pub fn get(&self, i: u16, j: u16) -> &[(u16, Scalar)] {
        &self.entries[i as usize * self.nb + j as usize]
    }

    /// Scalar times value of kind `out` with dimension `n`.
    pub fn scalar_left(n: usize, out: ValueKind) -> Bilinear {
        let t: Vec<_> = (0..n).map(|j| (0, j, j, Scalar::one())).collect();
        Bilinear::from_table(1, n, out, &t)
    }

    pub fn scalar_right(n: usize, out: ValueKind) -> Bilinear {
        let t: Vec<_> = (0..n).map(|j| (j, 0, j, Scalar::one())).collect();
        Bilinear::from_table(n, 1, out, &t)
    }

    pub fn bracket(alg: &LieAlgebraData) -> Bilinear {
        Bilinear::from_table(alg.dim, alg.dim, ValueKind::Adjoint, alg.bracket_table())
    }

    pub fn pair(alg: &LieAlgebraData) -> Bilinear {
        let t: Vec<_> = alg.pair_table().iter().map(|(i, j, c)| (*i, *j, 0, c.clone())).collect();
        Bilinear::from_table(alg.dim, alg.dim, ValueKind::Scalar, &t)
    }

    pub fn coadjoint(alg: &LieAlgebraData) -> Bilinear {
        Bilinear::from_table(alg.dim, alg.dim, ValueKind::Coadjoint, alg.coad_table())
    }

    pub fn assoc(alg: &LieAlgebraData) -> Result<Bilinear> {
        let t = alg
            .assoc_table()
            .ok_or_else(|| Error::Algebra(format!("{} has no associative product", alg.name)))?;
        Ok(Bilinear::from_table(alg.dim, alg.dim, ValueKind::Adjoint, t))
    }

    pub fn matrix(n: usize) -> Bilinear {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t.push((i * n + j, j * n + k, i * n + k, Scalar::one()));
                }
            }
        }
        Bilinear::from_table(n * n, n * n, ValueKind::Matrix(n as u8), &t)
    }
}

/// Precomputed bilinear maps for one algebra.
#[derive(Clone, Debug)]
pub struct AlgebraOps {
    pub alg: Arc<LieAlgebraData>,
    pub bracket: Bilinear,
    pub pair: Bilinear,
    pub coad: Option<Bilinear>,
    pub assoc: Option<Bilinear>,
}

impl AlgebraOps {
    pub fn new(alg: Arc<LieAlgebraData>) -> AlgebraOps {
        AlgebraOps {
            bracket: Bilinear::bracket(&alg),
            pair: Bilinear::pair(&alg),
            coad: (alg.mode == Mode::Canonical).then(|| Bilinear::coadjoint(&alg)),
            assoc: Bilinear::assoc(&alg).ok(),
            alg,
        }
    }

    pub fn dim(&self) -> usize {
        self.alg.dim
    }
}

/// Grassmann-valued scalar keyed by `(ghost, Grassmann mask)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GrassPoly {
    pub terms: BTreeMap<(i8, u16), Scalar>,
}

impl GrassPoly {
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, gh: i8, g: u16, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry((gh, g)).or_default();
        *e += &c;
        if e.is_zero() {
            self.terms.remove(&(gh, g));
        }
    }

    pub fn add(&self, o: &GrassPoly) -> GrassPoly {
        let mut out = self.clone();
        for (&(h, g), c) in &o.terms {
            out.add_term(h, g, c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Scalar) -> GrassPoly {
        let mut out = GrassPoly::default();
        for (&(h, g), c) in &self.terms {
            out.add_term(h, g, c * s);
        }
        out
    }

    pub fn sub(&self, o: &GrassPoly) -> GrassPoly {
        self.add(&o.scale(&Scalar::int(-1)))
    }

    /// Largest coefficient term, for witnesses.
    pub fn witness(&self) -> Option<String> {
        self.terms
            .iter()
            .next()
            .map(|(&(h, g), c)| format!("gh {h} theta-mask {g:#b}: {c} ({} terms)", self.terms.len()))
    }
}

impl fmt::Display for GrassPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (&(h, g), c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{c}] theta{g:#b}@gh{h}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    pub domain: Domain,
    pub kind: ValueKind,
    pub dim: usize,
    pub terms: BTreeMap<Key, Scalar>,
}

pub type TorusForm = Form;
pub type FiberedForm = Form;

impl Form {
    pub fn zero(domain: &Domain, kind: ValueKind, dim: usize) -> Form {
        Form {
            domain: domain.clone(),
            kind,
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar_zero(domain: &Domain) -> Form {
        Form::zero(domain, ValueKind::Scalar, 1)
    }

    /// Constant scalar function `c`.
    pub fn constant(domain: &Domain, c: Scalar) -> Form {
        let mut f = Form::scalar_zero(domain);
        f.add_term(Key::new(0, 0, 0, 0), c);
        f
    }

    /// Single term `c e^{i k.x} dx^I (x) X_a`.
    pub fn monomial(domain: &Domain, kind: ValueKind, dim: usize, freq: &[i8], coords: &[usize], a: usize, c: Scalar) -> Form {
        let mut f = Form::zero(domain, kind, dim);
        let mut key = Key::new(0, 0, a as u16, 0);
        key.freq[..freq.len()].copy_from_slice(freq);
        let mut mask = 0u16;
        let mut sign = 1;
        for &j in coords {
            let s = merge_sign(mask, 1 << j);
            sign *= s;
            mask |= 1 << j;
        }
        key.mask = mask;
        if sign != 0 {
            f.add_term(key, c.scale_q(&Q::int(sign as i64)));
        }
        f
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, k: Key, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(k) {
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

    fn compatible(&self, o: &Form) -> Result<()> {
        if self.domain != o.domain {
            return Err(Error::Dimension("forms live on different domains".into()));
        }
        if self.kind != o.kind || self.dim != o.dim {
            return Err(Error::Algebra(format!("value kinds differ: {:?} vs {:?}", self.kind, o.kind)));
        }
        Ok(())
    }

    pub fn add(&self, o: &Form) -> Result<Form> {
        if self.is_zero() && self.domain == o.domain {
            return Ok(o.clone());
        }
        if o.is_zero() && self.domain == o.domain {
            return Ok(self.clone());
        }
        self.compatible(o)?;
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(*k, c.clone());
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, o: &Form) -> Result<()> {
        if self.is_zero() && self.domain == o.domain {
            *self = o.clone();
            return Ok(());
        }
        if o.is_zero() {
            return Ok(());
        }
        self.compatible(o)?;
        for (k, c) in &o.terms {
            self.add_term(*k, c.clone());
        }
        Ok(())
    }

    pub fn sub(&self, o: &Form) -> Result<Form> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale(&Scalar::int(-1))
    }

    pub fn scale(&self, s: &Scalar) -> Form {
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        if s.is_zero() {
            return out;
        }
        for (k, c) in &self.terms {
            out.add_term(*k, c * s);
        }
        out
    }

    /// Keeps terms accepted by `keep`.
    pub fn filter<F: Fn(&Key) -> bool>(&self, keep: F) -> Form {
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        for (k, c) in &self.terms {
            if keep(k) {
                out.add_term(*k, c.clone());
            }
        }
        out
    }

    /// Component of form degree `p`.
    pub fn degree_part(&self, p: i32) -> Form {
        self.filter(|k| k.form_degree() == p)
    }

    /// Component of total degree `d`.
    pub fn total_part(&self, d: i32) -> Form {
        self.filter(|k| k.total_degree() == d)
    }

    /// Sets of `(form degree, ghost)` present.
    pub fn bidegrees(&self) -> Vec<(i32, i32)> {
        let mut v: Vec<_> = self.terms.keys().map(|k| (k.form_degree(), k.gh as i32)).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn with_kind(mut self, kind: ValueKind) -> Form {
        self.kind = kind;
        self
    }

    /// Generic bilinear product. `dot` adds `(-1)^{gh a deg b}`.
    pub fn product(&self, o: &Form, table: &Bilinear, dot: bool) -> Result<Form> {
        if self.domain != o.domain {
            return Err(Error::Dimension("forms live on different domains".into()));
        }
        let out_dim = match table.out {
            ValueKind::Scalar => 1,
            ValueKind::Matrix(n) => n as usize * n as usize,
            _ => {
                if self.kind == ValueKind::Scalar {
                    o.dim
                } else {
                    self.dim
                }
            }
        };
        let mut acc: BTreeMap<Key, Scalar> = BTreeMap::new();
        let n = self.domain.len();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                if ka.mask & kb.mask != 0 || ka.gmask & kb.gmask != 0 {
                    continue;
                }
                let entries = table.get(ka.val, kb.val);
                if entries.is_empty() {
                    continue;
                }
                let mut sign = merge_sign(ka.mask, kb.mask) * merge_sign(ka.gmask, kb.gmask);
                if dot {
                    sign *= parity_sign(ka.gh as i64 * kb.form_degree() as i64);
                }
                let mut key = Key::new(ka.gh + kb.gh, ka.mask | kb.mask, 0, ka.gmask | kb.gmask);
                for j in 0..n {
                    key.freq[j] = ka.freq[j] + kb.freq[j];
                    key.pow[j] = ka.pow[j] + kb.pow[j];
                }
                let mut c = ca * cb;
                if sign < 0 {
                    c = -c;
                }
                for (v, t) in entries {
                    key.val = *v;
                    let val = if t.is_one() { c.clone() } else { &c * t };
                    let e = acc.entry(key).or_default();
                    *e += &val;
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(Form {
            domain: self.domain.clone(),
            kind: table.out,
            dim: out_dim,
            terms: acc,
        })
    }

    /// Wedge of a scalar form with any form.
    pub fn wedge(&self, o: &Form) -> Result<Form> {
        match (self.kind, o.kind) {
            (ValueKind::Scalar, k) => self.product(o, &Bilinear::scalar_left(o.dim, k), false),
            (k, ValueKind::Scalar) => self.product(o, &Bilinear::scalar_right(self.dim, k), false),
            _ => Err(Error::Algebra("wedge needs a scalar factor; use bracket or pair".into())),
        }
    }

    pub fn dot_wedge(&self, o: &Form) -> Result<Form> {
        match (self.kind, o.kind) {
            (ValueKind::Scalar, k) => self.product(o, &Bilinear::scalar_left(o.dim, k), true),
            (k, ValueKind::Scalar) => self.product(o, &Bilinear::scalar_right(self.dim, k), true),
            _ => Err(Error::Algebra("wedge needs a scalar factor; use bracket or pair".into())),
        }
    }

    /// Exterior derivative.
    pub fn d(&self) -> Form {
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        for (k, c) in &self.terms {
            for j in 0..self.domain.len() {
                let bit = 1u16 << j;
                if k.mask & bit != 0 {
                    continue;
                }
                let sign = parity_sign((k.mask & (bit - 1)).count_ones() as i64);
                let mut nk = *k;
                nk.mask |= bit;
                match self.domain.kind(j) {
                    CoordKind::Periodic => {
                        if k.freq[j] != 0 {
                            let f = C::new(Q::zero(), Q::int(k.freq[j] as i64 * sign as i64));
                            out.add_term(nk, c.scale_c(&f));
                        }
                    }
                    CoordKind::Unit => {
                        if k.pow[j] > 0 {
                            let mut k2 = nk;
                            k2.pow[j] -= 1;
                            out.add_term(k2, c.scale_q(&Q::int(k.pow[j] as i64 * sign as i64)));
                        }
                        if k.freq[j] != 0 {
                            let w = Scalar::monomial(1, C::new(Q::zero(), Q::int(2 * k.freq[j] as i64 * sign as i64)));
                            out.add_term(nk, c * &w);
                        }
                    }
                }
            }
        }
        out
    }

    /// `sum_j c_j` of the top-degree part integrated over the whole domain (standard orientation).
    pub fn integrate(&self) -> Result<GrassPoly> {
        if self.kind != ValueKind::Scalar {
            return Err(Error::Algebra("only scalar forms integrate to numbers".into()));
        }
        let top = self.domain.top_mask();
        let mut out = GrassPoly::default();
        for (k, c) in &self.terms {
            if k.mask != top {
                continue;
            }
            if let Some(v) = integrate_coefficient(&self.domain, k, c, &(0..self.domain.len()).collect::<Vec<_>>()) {
                out.add_term(k.gh, k.gmask, v);
            }
        }
        Ok(out)
    }

    /// Flat Hodge star on a torus: `*dx^I = sign(I, I^c) dx^{I^c}`.
    pub fn hodge_star(&self) -> Result<Form> {
        if !self.domain.is_torus() {
            return Err(Error::Unsupported("Hodge star is defined on tori only".into()));
        }
        let top = self.domain.top_mask();
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        for (k, c) in &self.terms {
            let comp = top & !k.mask;
            let s = merge_sign(k.mask, comp);
            let mut nk = *k;
            nk.mask = comp;
            out.add_term(nk, c.scale_q(&Q::int(s as i64)));
        }
        Ok(out)
    }

    /// Scalar component along value index `a`.
    pub fn component(&self, a: usize) -> Form {
        let mut out = Form::scalar_zero(&self.domain);
        for (k, c) in &self.terms {
            if k.val as usize == a {
                let mut nk = *k;
                nk.val = 0;
                out.add_term(nk, c.clone());
            }
        }
        out
    }

    /// Scalar form tensored with basis element `a`.
    pub fn tensor(&self, kind: ValueKind, dim: usize, a: usize) -> Form {
        let mut out = Form::zero(&self.domain, kind, dim);
        for (k, c) in &self.terms {
            let mut nk = *k;
            nk.val = a as u16;
            out.add_term(nk, c.clone());
        }
        out
    }

    /// Multiplies by the Grassmann monomial `theta_g` on the right, with ghost shift `dgh`.
    pub fn times_theta(&self, g: u16, dgh: i8) -> Form {
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        for (k, c) in &self.terms {
            if k.gmask & g != 0 {
                continue;
            }
            let s = merge_sign(k.gmask, g);
            let mut nk = *k;
            nk.gmask |= g;
            nk.gh += dgh;
            out.add_term(nk, c.scale_q(&Q::int(s as i64)));
        }
        out
    }

    /// Sign of each term replaced by `f(key)`.
    pub fn map_sign<F: Fn(&Key) -> i32>(&self, f: F) -> Form {
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        for (k, c) in &self.terms {
            let s = f(k);
            if s != 0 {
                out.add_term(*k, c.scale_q(&Q::int(s as i64)));
            }
        }
        out
    }

    /// Restriction to `t_j = k / 4` on a unit coordinate, kept on the same domain.
    pub fn at_quarter(&self, j: usize, k: i64) -> Form {
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        for (key, c) in &self.terms {
            if key.mask & (1 << j) != 0 {
                continue;
            }
            let v = QP::term(key.pow[j] as u16, key.freq[j] as i32, Scalar::one()).eval_quarter(k);
            let mut nk = *key;
            nk.pow[j] = 0;
            nk.freq[j] = 0;
            out.add_term(nk, c * &v);
        }
        out
    }

    /// Antiderivative in the unit coordinate `t_j` vanishing at `t_j = k / 4`.
    pub fn antiderivative_from(&self, j: usize, k: i64) -> Result<Form> {
        if self.domain.kind(j) != CoordKind::Unit {
            return Err(Error::Unsupported(format!("coordinate {j} is not a unit coordinate")));
        }
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        for (key, c) in &self.terms {
            if key.mask & (1 << j) != 0 {
                return Err(Error::Unsupported(format!("antiderivative in t_{j} of a form containing dt_{j}")));
            }
            let prim = QP::term(key.pow[j] as u16, key.freq[j] as i32, Scalar::one()).integral_from_zero();
            let shift = prim.eval_quarter(k);
            let prim = prim.sub(&QP::constant(shift));
            for (&(p, q), v) in &prim.terms {
                let mut nk = *key;
                nk.pow[j] = u8::try_from(p).map_err(|_| Error::Range("power overflow".into()))?;
                nk.freq[j] = i8::try_from(q).map_err(|_| Error::Range("frequency overflow".into()))?;
                out.add_term(nk, c * v);
            }
        }
        Ok(out)
    }

    /// Interior product with `d/dx_j`.
    pub fn contract(&self, j: usize) -> Form {
        let bit = 1u16 << j;
        let mut out = Form::zero(&self.domain, self.kind, self.dim);
        for (key, c) in &self.terms {
            if key.mask & bit == 0 {
                continue;
            }
            let s = parity_sign((key.mask & (bit - 1)).count_ones() as i64);
            let mut nk = *key;
            nk.mask &= !bit;
            out.add_term(nk, c.scale_q(&Q::int(s as i64)));
        }
        out
    }

    /// Trace of a matrix-valued form.
    pub fn trace(&self) -> Result<Form> {
        let ValueKind::Matrix(n) = self.kind else {
            return Err(Error::Unsupported("trace of a non-matrix form".into()));
        };
        let n = n as u16;
        let mut out = Form::scalar_zero(&self.domain);
        for (key, c) in &self.terms {
            if key.val / n == key.val % n {
                let mut nk = *key;
                nk.val = 0;
                out.add_term(nk, c.clone());
            }
        }
        Ok(out)
    }

    /// Numerical coefficients at a point, keyed by `(ghost, dx mask, value, Grassmann mask)`.
    pub fn eval_f64(&self, x: &[f64]) -> BTreeMap<(i8, u16, u16, u16), (f64, f64)> {
        let mut out: BTreeMap<(i8, u16, u16, u16), (f64, f64)> = BTreeMap::new();
        for (key, c) in &self.terms {
            let (mut re, mut im) = c.to_complex();
            for (j, &xj) in x.iter().enumerate().take(self.domain.len()) {
                let (mag, ph) = match self.domain.kind(j) {
                    CoordKind::Periodic => (1.0, key.freq[j] as f64 * xj),
                    CoordKind::Unit => (
                        xj.powi(key.pow[j] as i32),
                        2.0 * std::f64::consts::PI * key.freq[j] as f64 * xj,
                    ),
                };
                let (er, ei) = (ph.cos() * mag, ph.sin() * mag);
                (re, im) = (re * er - im * ei, re * ei + im * er);
            }
            let e = out.entry((key.gh, key.mask, key.val, key.gmask)).or_default();
            e.0 += re;
            e.1 += im;
        }
        out
    }

    /// Largest-key term for witnesses.
    pub fn witness(&self) -> Option<String> {
        self.terms.iter().next().map(|(k, c)| {
            format!(
                "{} terms; e.g. coeff {c} at gh {} dx-mask {:#b} freq {:?} value {} theta {:#b}",
                self.terms.len(),
                k.gh,
                k.mask,
                &k.freq[..self.domain.len()],
                k.val,
                k.gmask
            )
        })
    }
}

/// Integral of one term's coefficient over the listed coordinates (each over its full range);
/// `None` if it vanishes.
pub(crate) fn integrate_coefficient(domain: &Domain, k: &Key, c: &Scalar, coords: &[usize]) -> Option<Scalar> {
    let mut v = c.clone();
    for &j in coords {
        match domain.kind(j) {
            CoordKind::Periodic => {
                if k.freq[j] != 0 || k.pow[j] != 0 {
                    return None;
                }
                v = v.shift_pi(1).scale_q(&Q::int(2));
            }
            CoordKind::Unit => {
                let s = QP::term(k.pow[j] as u16, k.freq[j] as i32, Scalar::one()).integral_unit();
                if s.is_zero() {
                    return None;
                }
                v = &v * &s;
            }
        }
    }
    Some(v)
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{c}]")?;
            for j in 0..self.domain.len() {
                if k.freq[j] != 0 || k.pow[j] != 0 {
                    write!(f, " m{j}({},{})", k.freq[j], k.pow[j])?;
                }
            }
            for j in 0..self.domain.len() {
                if k.mask & (1 << j) != 0 {
                    write!(f, " d{j}")?;
                }
            }
            if self.kind != ValueKind::Scalar {
                write!(f, " X{}", k.val)?;
            }
            if k.gmask != 0 {
                write!(f, " th{:#b}", k.gmask)?;
            }
        }
        Ok(())
    }
}

/// Parameters for seeded random forms.
#[derive(Clone, Debug)]
pub struct RandomSpec {
    pub max_freq: i8,
    pub max_pow: u8,
    pub terms: usize,
    pub grassmann: u8,
    pub max_theta: u32,
    /// Probability that a frequency is forced to zero.
    pub zero_bias: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            max_freq: 1,
            max_pow: 2,
            terms: 2,
            grassmann: 4,
            max_theta: 3,
            zero_bias: 0.0,
        }
    }
}

pub fn random_scalar<R: Rng>(rng: &mut R) -> Scalar {
    let re = rng.gen_range(-3..=3);
    let im = if rng.gen_bool(0.3) { rng.gen_range(-2..=2) } else { 0 };
    let den = if rng.gen_bool(0.2) { 2 } else { 1 };
    let c = C::new(Q::new(re, den), Q::int(im));
    if c.is_zero() {
        Scalar::one()
    } else {
        Scalar::from_c(c)
    }
}

/// Random Grassmann mask with `|mask| = gh (mod 2)`.
pub fn random_theta<R: Rng>(rng: &mut R, spec: &RandomSpec, gh: i32) -> Option<u16> {
    let want = gh.rem_euclid(2) as u32;
    let counts: Vec<u32> = (0..=spec.max_theta.min(spec.grassmann as u32))
        .filter(|k| k % 2 == want)
        .collect();
    if counts.is_empty() {
        return None;
    }
    let k = counts[rng.gen_range(0..counts.len())];
    let mut pool: Vec<u16> = (0..spec.grassmann as u16).collect();
    let mut g = 0u16;
    for _ in 0..k {
        let j = rng.gen_range(0..pool.len());
        g |= 1 << pool.swap_remove(j);
    }
    Some(g)
}

/// Random form of fixed form degree and ghost.
pub fn random_form<R: Rng>(
    rng: &mut R,
    domain: &Domain,
    kind: ValueKind,
    dim: usize,
    degree: usize,
    gh: i32,
    spec: &RandomSpec,
) -> Form {
    let n = domain.len();
    let mut f = Form::zero(domain, kind, dim);
    if degree > n {
        return f;
    }
    for _ in 0..spec.terms {
        let mut coords: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            coords.swap(i, j);
        }
        let mask = coords[..degree].iter().fold(0u16, |m, &j| m | (1 << j));
        let Some(g) = random_theta(rng, spec, gh) else { continue };
        let mut key = Key::new(gh as i8, mask, rng.gen_range(0..dim) as u16, g);
        for j in 0..n {
            if !rng.gen_bool(spec.zero_bias) {
                key.freq[j] = rng.gen_range(-spec.max_freq..=spec.max_freq);
            }
            if domain.kind(j) == CoordKind::Unit {
                key.pow[j] = rng.gen_range(0..=spec.max_pow);
            }
        }
        f.add_term(key, random_scalar(rng));
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_derivative() {
        let t2 = Domain::torus(2);
        let f = Form::monomial(&t2, ValueKind::Adjoint, 3, &[1, 0], &[], 0, Scalar::one());
        let df = f.d();
        let expect = Form::monomial(&t2, ValueKind::Adjoint, 3, &[1, 0], &[0], 0, Scalar::i());
        assert_eq!(df, expect);
    }

    #[test]
    fn volume_and_modes() {
        for m in 1..=4 {
            let d = Domain::torus(m);
            let coords: Vec<usize> = (0..m).collect();
            let vol = Form::monomial(&d, ValueKind::Scalar, 1, &[], &coords, 0, Scalar::one());
            let got = vol.integrate().unwrap();
            let expect = Scalar::int(1 << m).shift_pi(m as i32);
            assert_eq!(got.terms.get(&(0, 0)), Some(&expect));
            let mut freq = vec![0i8; m];
            freq[0] = 1;
            let osc = Form::monomial(&d, ValueKind::Scalar, 1, &freq, &coords, 0, Scalar::one());
            assert!(osc.integrate().unwrap().is_zero());
        }
    }

    #[test]
    fn wedge_frequency_addition() {
        let t2 = Domain::torus(2);
        let a = Form::monomial(&t2, ValueKind::Scalar, 1, &[1, 0], &[0], 0, Scalar::one());
        let b = Form::monomial(&t2, ValueKind::Scalar, 1, &[-1, 0], &[1], 0, Scalar::one());
        let w = a.wedge(&b).unwrap();
        assert_eq!(w, Form::monomial(&t2, ValueKind::Scalar, 1, &[0, 0], &[0, 1], 0, Scalar::one()));
        assert!(a.wedge(&a).unwrap().is_zero());
    }

    #[test]
    fn hodge_examples() {
        let t2 = Domain::torus(2);
        let one = Form::constant(&t2, Scalar::one());
        let vol = Form::monomial(&t2, ValueKind::Scalar, 1, &[], &[0, 1], 0, Scalar::one());
        assert_eq!(one.hodge_star().unwrap(), vol);
        let dx = Form::monomial(&t2, ValueKind::Scalar, 1, &[], &[0], 0, Scalar::one());
        let dy = Form::monomial(&t2, ValueKind::Scalar, 1, &[], &[1], 0, Scalar::one());
        assert_eq!(dx.hodge_star().unwrap(), dy);
        let ip = dx.wedge(&dx.hodge_star().unwrap()).unwrap().integrate().unwrap();
        assert_eq!(ip.terms.get(&(0, 0)), Some(&Scalar::int(4).shift_pi(2)));
    }
}
