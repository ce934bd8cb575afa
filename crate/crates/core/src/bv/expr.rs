//! Expression trees over superfields and components, with evaluation and derivations.

use std::sync::Arc;

use super::fields::{Superfield, SuperfieldConfig, ValuedIn};
use crate::derham::{Form, GrassPoly, ValueKind};
use crate::error::{Error, Result};
use crate::koszul::scalar::{parity_sign, Scalar};
use crate::liealg::Mode;

#[derive(Clone, Debug)]
pub enum Expr {
    Field(Superfield),
    /// Component field by catalog index, with its bidegree.
    Comp { index: usize, deg: i32, gh: i32 },
    Const { form: Arc<Form>, deg: i32, gh: i32 },
    D(Box<Expr>),
    /// Lie bracket; `dot` selects the total-degree sign twist.
    Bracket { dot: bool, l: Box<Expr>, r: Box<Expr> },
    /// Coadjoint action of an adjoint `l` on a coadjoint `r`.
    Coad { dot: bool, l: Box<Expr>, r: Box<Expr> },
    /// Associative product through the algebra's matrix representation.
    Prod { dot: bool, l: Box<Expr>, r: Box<Expr> },
    Scale(Scalar, Box<Expr>),
    Sum(Vec<Expr>),
}

/// Shape data needed for degrees and kinds.
#[derive(Clone, Debug)]
pub struct Shape {
    pub m: usize,
    pub mode: Mode,
    pub comp_kinds: Vec<ValueKind>,
}

impl Shape {
    pub fn of(cfg: &SuperfieldConfig) -> Shape {
        Shape {
            m: cfg.m,
            mode: cfg.mode(),
            comp_kinds: cfg.catalog.iter().map(|f| cfg.value_kind(f.valued_in)).collect(),
        }
    }

    pub fn b_kind(&self) -> ValueKind {
        match self.mode {
            Mode::Ordinary => ValueKind::Adjoint,
            Mode::Canonical => ValueKind::Coadjoint,
        }
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Sum(Vec::new())
    }

    pub fn a() -> Expr {
        Expr::Field(Superfield::A)
    }

    pub fn b() -> Expr {
        Expr::Field(Superfield::B)
    }

    pub fn comp(cfg_catalog: &[super::fields::FieldSpec], name: &str) -> Result<Expr> {
        let (index, f) = cfg_catalog
            .iter()
            .enumerate()
            .find(|(_, f)| f.name == name)
            .ok_or_else(|| Error::Config(format!("unknown field {name}")))?;
        Ok(Expr::Comp {
            index,
            deg: f.form_degree,
            gh: f.ghost,
        })
    }

    pub fn constant(form: Form, deg: i32, gh: i32) -> Expr {
        Expr::Const {
            form: Arc::new(form),
            deg,
            gh,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Sum(v) if v.is_empty())
    }

    pub fn d(e: Expr) -> Expr {
        if e.is_zero() {
            return e;
        }
        Expr::D(Box::new(e))
    }

    fn binary(kind: u8, dot: bool, l: Expr, r: Expr) -> Expr {
        if l.is_zero() || r.is_zero() {
            return Expr::zero();
        }
        let (l, r) = (Box::new(l), Box::new(r));
        match kind {
            0 => Expr::Bracket { dot, l, r },
            1 => Expr::Coad { dot, l, r },
            _ => Expr::Prod { dot, l, r },
        }
    }

    pub fn br(l: Expr, r: Expr) -> Expr {
        Expr::binary(0, true, l, r)
    }

    pub fn coad(l: Expr, r: Expr) -> Expr {
        Expr::binary(1, true, l, r)
    }

    pub fn prod(l: Expr, r: Expr) -> Expr {
        Expr::binary(2, true, l, r)
    }

    pub fn plain_br(l: Expr, r: Expr) -> Expr {
        Expr::binary(0, false, l, r)
    }

    pub fn plain_coad(l: Expr, r: Expr) -> Expr {
        Expr::binary(1, false, l, r)
    }

    pub fn scale(c: Scalar, e: Expr) -> Expr {
        if c.is_zero() || e.is_zero() {
            return Expr::zero();
        }
        if c.is_one() {
            return e;
        }
        Expr::Scale(c, Box::new(e))
    }

    pub fn sign(s: i32, e: Expr) -> Expr {
        Expr::scale(Scalar::int(s as i64), e)
    }

    pub fn sum(v: Vec<Expr>) -> Expr {
        let mut out = Vec::new();
        for e in v {
            match e {
                Expr::Sum(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            return out.pop().expect("one element");
        }
        Expr::Sum(out)
    }

    pub fn pow(e: &Expr, k: usize) -> Expr {
        let mut out = e.clone();
        for _ in 1..k {
            out = Expr::prod(out, e.clone());
        }
        out
    }

    /// Total degree, `None` for zero.
    pub fn tdeg(&self, m: usize) -> Option<i32> {
        match self {
            Expr::Field(Superfield::A) => Some(1),
            Expr::Field(Superfield::B) => Some(m as i32 - 2),
            Expr::Comp { deg, gh, .. } | Expr::Const { deg, gh, .. } => Some(deg + gh),
            Expr::D(e) => e.tdeg(m).map(|d| d + 1),
            Expr::Bracket { l, r, .. } | Expr::Coad { l, r, .. } | Expr::Prod { l, r, .. } => Some(l.tdeg(m)? + r.tdeg(m)?),
            Expr::Scale(_, e) => e.tdeg(m),
            Expr::Sum(v) => v.first().and_then(|e| e.tdeg(m)),
        }
    }

    /// `(form degree, ghost)` when homogeneous in both.
    pub fn bideg(&self) -> Option<(i32, i32)> {
        match self {
            Expr::Field(_) => None,
            Expr::Comp { deg, gh, .. } | Expr::Const { deg, gh, .. } => Some((*deg, *gh)),
            Expr::D(e) => e.bideg().map(|(d, g)| (d + 1, g)),
            Expr::Bracket { l, r, .. } | Expr::Coad { l, r, .. } | Expr::Prod { l, r, .. } => {
                let (a, b) = (l.bideg()?, r.bideg()?);
                Some((a.0 + b.0, a.1 + b.1))
            }
            Expr::Scale(_, e) => e.bideg(),
            Expr::Sum(v) => v.first().and_then(|e| e.bideg()),
        }
    }

    pub fn kind(&self, sh: &Shape) -> Option<ValueKind> {
        match self {
            Expr::Field(Superfield::A) => Some(ValueKind::Adjoint),
            Expr::Field(Superfield::B) => Some(sh.b_kind()),
            Expr::Comp { index, .. } => sh.comp_kinds.get(*index).copied(),
            Expr::Const { form, .. } => Some(form.kind),
            Expr::D(e) | Expr::Scale(_, e) => e.kind(sh),
            Expr::Bracket { .. } | Expr::Prod { .. } => Some(ValueKind::Adjoint),
            Expr::Coad { .. } => Some(ValueKind::Coadjoint),
            Expr::Sum(v) => v.first().and_then(|e| e.kind(sh)),
        }
    }

    /// Number of occurrences of a superfield.
    pub fn count(&self, s: Superfield) -> usize {
        match self {
            Expr::Field(f) => usize::from(*f == s),
            Expr::Comp { .. } | Expr::Const { .. } => 0,
            Expr::D(e) | Expr::Scale(_, e) => e.count(s),
            Expr::Bracket { l, r, .. } | Expr::Coad { l, r, .. } | Expr::Prod { l, r, .. } => l.count(s) + r.count(s),
            Expr::Sum(v) => v.iter().map(|e| e.count(s)).max().unwrap_or(0),
        }
    }

    /// Replaces superfields by expressions.
    pub fn substitute(&self, a: &Expr, b: &Expr) -> Expr {
        match self {
            Expr::Field(Superfield::A) => a.clone(),
            Expr::Field(Superfield::B) => b.clone(),
            Expr::Comp { .. } | Expr::Const { .. } => self.clone(),
            Expr::D(e) => Expr::d(e.substitute(a, b)),
            Expr::Bracket { dot, l, r } => Expr::binary(0, *dot, l.substitute(a, b), r.substitute(a, b)),
            Expr::Coad { dot, l, r } => Expr::binary(1, *dot, l.substitute(a, b), r.substitute(a, b)),
            Expr::Prod { dot, l, r } => Expr::binary(2, *dot, l.substitute(a, b), r.substitute(a, b)),
            Expr::Scale(c, e) => Expr::scale(c.clone(), e.substitute(a, b)),
            Expr::Sum(v) => Expr::sum(v.iter().map(|e| e.substitute(a, b)).collect()),
        }
    }

    pub fn eval(&self, cfg: &SuperfieldConfig) -> Result<Form> {
        self.eval_with(cfg, &cfg.a, &cfg.b)
    }

    /// Evaluation with explicit superfield values.
    pub fn eval_with(&self, cfg: &SuperfieldConfig, a: &Form, b: &Form) -> Result<Form> {
        let ops = &cfg.ops;
        Ok(match self {
            Expr::Field(Superfield::A) => a.clone(),
            Expr::Field(Superfield::B) => b.clone(),
            Expr::Comp { index, .. } => cfg.components[*index].clone(),
            Expr::Const { form, .. } => (**form).clone(),
            Expr::D(e) => e.eval_with(cfg, a, b)?.d(),
            Expr::Bracket { dot, l, r } => {
                let (x, y) = (l.eval_with(cfg, a, b)?, r.eval_with(cfg, a, b)?);
                expect_kind(&x, ValueKind::Adjoint, "bracket")?;
                expect_kind(&y, ValueKind::Adjoint, "bracket")?;
                x.product(&y, &ops.bracket, *dot)?
            }
            Expr::Coad { dot, l, r } => {
                let table = ops
                    .coad
                    .as_ref()
                    .ok_or_else(|| Error::Algebra("coadjoint action needs canonical mode".into()))?;
                let (x, y) = (l.eval_with(cfg, a, b)?, r.eval_with(cfg, a, b)?);
                expect_kind(&x, ValueKind::Adjoint, "coadjoint action")?;
                expect_kind(&y, ValueKind::Coadjoint, "coadjoint action")?;
                x.product(&y, table, *dot)?
            }
            Expr::Prod { dot, l, r } => {
                let table = ops
                    .assoc
                    .as_ref()
                    .ok_or_else(|| Error::Algebra(format!("{} has no associative product", ops.alg.name)))?;
                let (x, y) = (l.eval_with(cfg, a, b)?, r.eval_with(cfg, a, b)?);
                expect_kind(&x, ValueKind::Adjoint, "product")?;
                expect_kind(&y, ValueKind::Adjoint, "product")?;
                x.product(&y, table, *dot)?
            }
            Expr::Scale(c, e) => e.eval_with(cfg, a, b)?.scale(c),
            Expr::Sum(v) => {
                let mut acc: Option<Form> = None;
                for e in v {
                    let f = e.eval_with(cfg, a, b)?;
                    match &mut acc {
                        None => acc = Some(f),
                        Some(x) => x.add_assign(&f)?,
                    }
                }
                acc.unwrap_or_else(|| Form::scalar_zero(&cfg.domain))
            }
        })
    }
}

fn expect_kind(f: &Form, k: ValueKind, what: &str) -> Result<()> {
    if f.is_zero() || f.kind == k {
        Ok(())
    } else {
        Err(Error::Algebra(format!("{what}: expected {k:?}-valued operand, got {:?}", f.kind)))
    }
}

/// Dot pairing of two evaluated forms, respecting the algebra mode.
pub fn pair_forms(cfg: &SuperfieldConfig, x: &Form, y: &Form) -> Result<Form> {
    if x.is_zero() || y.is_zero() {
        return Ok(Form::scalar_zero(&cfg.domain));
    }
    match cfg.mode() {
        Mode::Ordinary => {
            if x.kind != ValueKind::Adjoint || y.kind != ValueKind::Adjoint {
                return Err(Error::Algebra("ordinary pairing needs adjoint-valued forms".into()));
            }
        }
        Mode::Canonical => {
            let ok = matches!(
                (x.kind, y.kind),
                (ValueKind::Adjoint, ValueKind::Coadjoint) | (ValueKind::Coadjoint, ValueKind::Adjoint)
            );
            if !ok {
                return Err(Error::Algebra(format!(
                    "canonical pairing needs one adjoint and one coadjoint argument, got {:?} and {:?}",
                    x.kind, y.kind
                )));
            }
        }
    }
    x.product(y, &cfg.ops.pair, true)
}

/// `int <x, y>_dot` at the configuration.
pub fn integrate_pair(cfg: &SuperfieldConfig, x: &Expr, y: &Expr) -> Result<GrassPoly> {
    let (fx, fy) = (x.eval(cfg)?, y.eval(cfg)?);
    pair_forms(cfg, &fx, &fy)?.integrate()
}

/// Sign conventions of a derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivMode {
    /// Super derivation of the given total degree; acts on dot structures.
    Total(i32),
    /// Bigraded derivation of bidegree `(p, q)`; acts on plain structures.
    Bigraded(i32, i32),
}

/// Derivation of expressions given images of superfields and components.
#[derive(Clone, Debug)]
pub struct ExprDerivation {
    pub mode: DerivMode,
    pub a: Option<Expr>,
    pub b: Option<Expr>,
    pub comps: Vec<(usize, Expr)>,
}

impl ExprDerivation {
    pub fn on_superfields(mode: DerivMode, a: Expr, b: Expr) -> ExprDerivation {
        ExprDerivation {
            mode,
            a: Some(a),
            b: Some(b),
            comps: Vec::new(),
        }
    }

    fn pass_sign(&self, e: &Expr, m: usize) -> Result<i32> {
        match self.mode {
            DerivMode::Total(k) => {
                let d = e.tdeg(m).ok_or_else(|| Error::Parity("degree of a zero expression".into()))?;
                Ok(parity_sign((k * d) as i64))
            }
            DerivMode::Bigraded(p, q) => {
                let (d, g) = e
                    .bideg()
                    .ok_or_else(|| Error::Parity("bigraded derivation needs bihomogeneous operands".into()))?;
                Ok(parity_sign((p * d + q * g) as i64))
            }
        }
    }

    fn d_sign(&self) -> i32 {
        match self.mode {
            DerivMode::Total(k) => parity_sign(k as i64),
            DerivMode::Bigraded(p, _) => parity_sign(p as i64),
        }
    }

    pub fn apply(&self, e: &Expr, m: usize) -> Result<Expr> {
        Ok(match e {
            Expr::Field(Superfield::A) => self
                .a
                .clone()
                .ok_or_else(|| Error::UndefinedImage("superfield a".into()))?,
            Expr::Field(Superfield::B) => self
                .b
                .clone()
                .ok_or_else(|| Error::UndefinedImage("superfield B".into()))?,
            Expr::Comp { index, .. } => self
                .comps
                .iter()
                .find(|(i, _)| i == index)
                .map(|(_, x)| x.clone())
                .ok_or_else(|| Error::UndefinedImage(format!("component #{index}")))?,
            Expr::Const { .. } => Expr::zero(),
            Expr::D(x) => Expr::sign(self.d_sign(), Expr::d(self.apply(x, m)?)),
            Expr::Bracket { dot, l, r } | Expr::Coad { dot, l, r } | Expr::Prod { dot, l, r } => {
                let want_dot = matches!(self.mode, DerivMode::Total(_));
                if *dot != want_dot {
                    return Err(Error::Unsupported("derivation mode does not match the product's sign convention".into()));
                }
                let kind = match e {
                    Expr::Bracket { .. } => 0,
                    Expr::Coad { .. } => 1,
                    _ => 2,
                };
                let first = Expr::binary(kind, *dot, self.apply(l, m)?, (**r).clone());
                let s = self.pass_sign(l, m)?;
                let second = Expr::sign(s, Expr::binary(kind, *dot, (**l).clone(), self.apply(r, m)?));
                Expr::sum(vec![first, second])
            }
            Expr::Scale(c, x) => Expr::scale(c.clone(), self.apply(x, m)?),
            Expr::Sum(v) => Expr::sum(v.iter().map(|x| self.apply(x, m)).collect::<Result<Vec<_>>>()?),
        })
    }
}

/// Right derivative of `int <r, e>_dot` with respect to one superfield: returns `R'` with
/// `d/dt int <r, e(s + t rho)> = int <R', rho>_dot`, one term per occurrence.
pub fn pull(r: Expr, e: &Expr, target: Superfield, sh: &Shape, out: &mut Vec<Expr>) -> Result<()> {
    let m = sh.m;
    let deg = |x: &Expr| x.tdeg(m).ok_or_else(|| Error::Parity("degree of a zero expression".into()));
    if r.is_zero() {
        return Ok(());
    }
    match e {
        Expr::Field(f) => {
            if *f == target {
                out.push(r);
            }
        }
        Expr::Comp { .. } | Expr::Const { .. } => {}
        Expr::D(x) => {
            let s = -parity_sign(deg(&r)? as i64);
            pull(Expr::sign(s, Expr::d(r)), x, target, sh, out)?;
        }
        Expr::Scale(c, x) => pull(Expr::scale(c.clone(), r), x, target, sh, out)?,
        Expr::Sum(v) => {
            for x in v {
                pull(r.clone(), x, target, sh, out)?;
            }
        }
        Expr::Bracket { dot, l, r: v } => {
            require_dot(*dot)?;
            let (du, dv, dr) = (deg(l)?, deg(v)?, deg(&r)?);
            match r.kind(sh) {
                Some(ValueKind::Coadjoint) => {
                    // <g, [[u, v]]> = -(-1)^{|u||g|} <sad*(u) g, v>
                    if l.count(target) + v.count(target) > 0 {
                        let rv = Expr::sign(-parity_sign((du * dr) as i64), Expr::coad((**l).clone(), r.clone()));
                        pull(rv, v, target, sh, out)?;
                        let ru = Expr::sign(
                            parity_sign((du * dv) as i64 + 1) * -parity_sign((dv * dr) as i64),
                            Expr::coad((**v).clone(), r),
                        );
                        pull(ru, l, target, sh, out)?;
                    }
                }
                _ => {
                    // <r, [[u, v]]> = <[[r, u]], v>
                    pull(Expr::br(r.clone(), (**l).clone()), v, target, sh, out)?;
                    let ru = Expr::sign(-parity_sign((du * dv) as i64), Expr::br(r, (**v).clone()));
                    pull(ru, l, target, sh, out)?;
                }
            }
        }
        Expr::Coad { dot, l, r: g } => {
            require_dot(*dot)?;
            let (du, dg, dr) = (deg(l)?, deg(g)?, deg(&r)?);
            // <r, sad*(u) g> = -(-1)^{|r||u|} <[[u, r]], g>
            let rg = Expr::sign(-parity_sign((dr * du) as i64), Expr::br((**l).clone(), r.clone()));
            pull(rg, g, target, sh, out)?;
            // <r, sad*(u) g> = -(-1)^{|u||g|} <sad*(r) g, u>
            let ru = Expr::sign(-parity_sign((du * dg) as i64), Expr::coad(r, (**g).clone()));
            pull(ru, l, target, sh, out)?;
        }
        Expr::Prod { dot, l, r: v } => {
            require_dot(*dot)?;
            let (du, dv, dr) = (deg(l)?, deg(v)?, deg(&r)?);
            // <r, u v> = <r u, v> = (-1)^{|v|(|r|+|u|)} <v r, u>
            pull(Expr::prod(r.clone(), (**l).clone()), v, target, sh, out)?;
            let ru = Expr::sign(parity_sign((dv * (dr + du)) as i64), Expr::prod((**v).clone(), r));
            pull(ru, l, target, sh, out)?;
        }
    }
    Ok(())
}

fn require_dot(dot: bool) -> Result<()> {
    if dot {
        Ok(())
    } else {
        Err(Error::Unsupported("functional derivatives are defined for dot structures only".into()))
    }
}

/// Coadjoint-valued `Expr` helper for `ValuedIn`.
pub fn kind_of(v: ValuedIn) -> ValueKind {
    match v {
        ValuedIn::Adjoint => ValueKind::Adjoint,
        ValuedIn::Coadjoint => ValueKind::Coadjoint,
    }
}
