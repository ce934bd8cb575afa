//! Field catalog, superfield assembly and sign tables.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::derham::{random_form, AlgebraOps, Domain, Form, RandomSpec, ValueKind};
use crate::error::{Error, Result};
use crate::koszul::scalar::{parity_sign, Scalar};
use crate::liealg::Mode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Superfield {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValuedIn {
    Adjoint,
    Coadjoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSpec {
    pub name: String,
    pub form_degree: i32,
    pub ghost: i32,
    pub valued_in: ValuedIn,
    pub partner: String,
    pub sigma: i32,
    pub superfield: Superfield,
    pub is_antifield: bool,
}

impl FieldSpec {
    pub fn total_degree(&self) -> i32 {
        self.form_degree + self.ghost
    }
}

/// Fields and antifields of BF theory in dimension `m`, with superfield signs.
pub fn field_catalog(m: usize, mode: Mode) -> Result<Vec<FieldSpec>> {
    if m < 2 {
        return Err(Error::Range(format!("dimension m = {m} must be at least 2")));
    }
    let mi = m as i32;
    let bkind = match mode {
        Mode::Ordinary => ValuedIn::Adjoint,
        Mode::Canonical => ValuedIn::Coadjoint,
    };
    let akind = ValuedIn::Adjoint;
    // antifields live in the dual of their field's bundle
    let dual = |v: ValuedIn| match (mode, v) {
        (Mode::Ordinary, _) => ValuedIn::Adjoint,
        (Mode::Canonical, ValuedIn::Adjoint) => ValuedIn::Coadjoint,
        (Mode::Canonical, ValuedIn::Coadjoint) => ValuedIn::Adjoint,
    };
    let mut out = Vec::new();
    let mut push = |name: String, deg: i32, gh: i32, valued: ValuedIn, partner: String, sigma: i32, sf, anti| {
        out.push(FieldSpec {
            name,
            form_degree: deg,
            ghost: gh,
            valued_in: valued,
            partner,
            sigma,
            superfield: sf,
            is_antifield: anti,
        })
    };
    push("c".into(), 0, 1, akind, "c+".into(), parity_sign(mi as i64 + 1), Superfield::A, false);
    push("a".into(), 1, 0, akind, "a+".into(), 1, Superfield::A, false);
    push("B+".into(), 2, -1, dual(bkind), "B".into(), parity_sign(mi as i64), Superfield::A, true);
    for k in 1..=mi - 2 {
        let s = parity_sign((k * (k - 1) / 2 + mi * (k + 1)) as i64);
        push(format!("tau{k}+"), k + 2, -1 - k, dual(bkind), format!("tau{k}"), s, Superfield::A, true);
    }
    for k in 1..=mi - 2 {
        let s = parity_sign((k * (k - 1) / 2) as i64);
        push(format!("tau{k}"), mi - 2 - k, k, bkind, format!("tau{k}+"), s, Superfield::B, false);
    }
    push("B".into(), mi - 2, 0, bkind, "B+".into(), 1, Superfield::B, false);
    push("a+".into(), mi - 1, -1, dual(akind), "a".into(), parity_sign(mi as i64), Superfield::B, true);
    push("c+".into(), mi, -2, dual(akind), "c".into(), 1, Superfield::B, true);
    Ok(out)
}

/// Component of a superfield with the given form degree.
pub fn component_of<'a>(cat: &'a [FieldSpec], sf: Superfield, degree: i32) -> Option<&'a FieldSpec> {
    cat.iter().find(|f| f.superfield == sf && f.form_degree == degree)
}

#[derive(Clone, Debug, Serialize)]
pub struct SignRow {
    pub i: i32,
    pub computed: i32,
    pub expected: i32,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignTable {
    pub m: usize,
    pub rows: Vec<SignRow>,
}

impl SignTable {
    pub fn matches(&self) -> bool {
        self.rows.iter().all(|r| r.computed == r.expected)
    }
}

/// Expected product `sigma_{B_{m-i}} sigma_{a_i}` for the superbracket to reduce to the component bracket.
pub fn expected_sign_product(m: usize, i: i32) -> i32 {
    if m % 2 == 0 {
        if i == 0 {
            -1
        } else {
            1
        }
    } else if i <= 1 {
        parity_sign(i as i64)
    } else {
        parity_sign(i as i64 + 1)
    }
}

pub fn check_sign_tables(m: usize) -> Result<SignTable> {
    let cat = field_catalog(m, Mode::Ordinary)?;
    let mut rows = Vec::new();
    for i in 0..=m as i32 {
        let a = component_of(&cat, Superfield::A, i).ok_or_else(|| Error::Config(format!("no a-component {i}")))?;
        let b = component_of(&cat, Superfield::B, m as i32 - i)
            .ok_or_else(|| Error::Config(format!("no B-component {}", m as i32 - i)))?;
        rows.push(SignRow {
            i,
            computed: a.sigma * b.sigma,
            expected: expected_sign_product(m, i),
        });
    }
    Ok(SignTable { m, rows })
}

/// Antighost and Lagrange-multiplier tower, ghost-number bookkeeping only.
#[derive(Clone, Debug, Serialize)]
pub struct TowerEntry {
    pub name: String,
    pub form_degree: i32,
    pub ghost: i32,
    pub antifield_degree: i32,
    pub antifield_ghost: i32,
}

pub fn gauge_fixing_tower(m: usize) -> Vec<TowerEntry> {
    let mi = m as i32;
    let mut out = Vec::new();
    let mut push = |name: String, deg: i32, gh: i32| {
        out.push(TowerEntry {
            name,
            form_degree: deg,
            ghost: gh,
            antifield_degree: mi - deg,
            antifield_ghost: -1 - gh,
        })
    };
    push("cbar".into(), 0, -1);
    push("lambda".into(), 0, 0);
    if mi >= 3 {
        push("taubar1".into(), mi - 3, -1);
        push("lambda1".into(), mi - 3, 0);
    }
    for k in 2..=mi - 3 {
        for i in 1..=k {
            push(format!("taubar{k},{i}"), mi - 2 - k, 2 * i - k - 2);
            push(format!("lambda{k},{i}"), mi - 2 - k, 2 * i - k - 1);
        }
    }
    out
}

/// Each extension term `antighost^+ multiplier` must be a top form of ghost number zero.
pub fn check_tower(m: usize) -> std::result::Result<(), String> {
    let t = gauge_fixing_tower(m);
    for pair in t.chunks(2) {
        let (bar, lam) = (&pair[0], &pair[1]);
        if lam.ghost != bar.ghost + 1 {
            return Err(format!("{}: multiplier ghost {} != antighost ghost + 1", lam.name, lam.ghost));
        }
        if bar.antifield_ghost + lam.ghost != 0 || bar.antifield_degree + lam.form_degree != m as i32 {
            return Err(format!("{}^+ {} is not a ghost-0 top form", bar.name, lam.name));
        }
    }
    Ok(())
}

/// Complete configuration: component values and assembled superfields.
#[derive(Clone, Debug)]
pub struct SuperfieldConfig {
    pub m: usize,
    pub ops: Arc<AlgebraOps>,
    pub domain: Domain,
    pub catalog: Vec<FieldSpec>,
    pub components: Vec<Form>,
    pub a: Form,
    pub b: Form,
}

impl SuperfieldConfig {
    pub fn mode(&self) -> Mode {
        self.ops.alg.mode
    }

    pub fn value_kind(&self, v: ValuedIn) -> ValueKind {
        match v {
            ValuedIn::Adjoint => ValueKind::Adjoint,
            ValuedIn::Coadjoint => ValueKind::Coadjoint,
        }
    }

    pub fn component(&self, name: &str) -> Result<&Form> {
        self.catalog
            .iter()
            .position(|f| f.name == name)
            .map(|i| &self.components[i])
            .ok_or_else(|| Error::Config(format!("unknown field {name}")))
    }

    pub fn superfield(&self, s: Superfield) -> &Form {
        match s {
            Superfield::A => &self.a,
            Superfield::B => &self.b,
        }
    }

    /// Same configuration with the listed components replaced (re-assembled).
    pub fn with_components(&self, updates: &[(&str, Form)]) -> Result<SuperfieldConfig> {
        let mut comps = self.components.clone();
        for (name, f) in updates {
            let i = self
                .catalog
                .iter()
                .position(|s| s.name == *name)
                .ok_or_else(|| Error::Config(format!("unknown field {name}")))?;
            comps[i] = f.clone();
        }
        assemble_superfields(self.m, self.ops.clone(), &self.domain, comps)
    }

    /// Antifields set to zero.
    pub fn without_antifields(&self) -> Result<SuperfieldConfig> {
        let comps = self
            .catalog
            .iter()
            .zip(&self.components)
            .map(|(s, f)| if s.is_antifield { Form::zero(&f.domain, f.kind, f.dim) } else { f.clone() })
            .collect();
        assemble_superfields(self.m, self.ops.clone(), &self.domain, comps)
    }
}

/// Applies the superfield signs; checks every component's bidegree.
pub fn assemble_superfields(m: usize, ops: Arc<AlgebraOps>, domain: &Domain, components: Vec<Form>) -> Result<SuperfieldConfig> {
    let catalog = field_catalog(m, ops.alg.mode)?;
    if components.len() != catalog.len() {
        return Err(Error::Config(format!("expected {} components, got {}", catalog.len(), components.len())));
    }
    let dim = ops.dim();
    let kind = |v: ValuedIn| match v {
        ValuedIn::Adjoint => ValueKind::Adjoint,
        ValuedIn::Coadjoint => ValueKind::Coadjoint,
    };
    let b_kind = match ops.alg.mode {
        Mode::Ordinary => ValueKind::Adjoint,
        Mode::Canonical => ValueKind::Coadjoint,
    };
    let mut a = Form::zero(domain, ValueKind::Adjoint, dim);
    let mut b = Form::zero(domain, b_kind, dim);
    for (spec, f) in catalog.iter().zip(&components) {
        if f.is_zero() {
            continue;
        }
        if f.kind != kind(spec.valued_in) {
            return Err(Error::Algebra(format!("{} must be {:?}-valued", spec.name, spec.valued_in)));
        }
        for (deg, gh) in f.bidegrees() {
            if deg != spec.form_degree || gh != spec.ghost {
                return Err(Error::Bidegree {
                    field: spec.name.clone(),
                    expected: (spec.form_degree, spec.ghost),
                    got: (deg, gh),
                });
            }
        }
        let signed = f.scale(&Scalar::int(spec.sigma as i64));
        match spec.superfield {
            Superfield::A => a.add_assign(&signed)?,
            Superfield::B => b.add_assign(&signed)?,
        }
    }
    Ok(SuperfieldConfig {
        m,
        ops,
        domain: domain.clone(),
        catalog,
        components,
        a,
        b,
    })
}

/// Seeded random configuration with Grassmann-valued ghost components.
pub fn random_config<R: Rng>(rng: &mut R, m: usize, ops: Arc<AlgebraOps>, spec: &RandomSpec) -> Result<SuperfieldConfig> {
    let domain = Domain::torus(m);
    let catalog = field_catalog(m, ops.alg.mode)?;
    let comps = catalog
        .iter()
        .map(|f| {
            let k = match f.valued_in {
                ValuedIn::Adjoint => ValueKind::Adjoint,
                ValuedIn::Coadjoint => ValueKind::Coadjoint,
            };
            random_form(rng, &domain, k, ops.dim(), f.form_degree as usize, f.ghost, spec)
        })
        .collect();
    assemble_superfields(m, ops, &domain, comps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_examples() {
        let cat = field_catalog(3, Mode::Ordinary).unwrap();
        let get = |n: &str| cat.iter().find(|f| f.name == n).unwrap().sigma;
        assert_eq!(get("c"), 1);
        assert_eq!(get("B+"), -1);
        let cat5 = field_catalog(5, Mode::Ordinary).unwrap();
        let get5 = |n: &str| cat5.iter().find(|f| f.name == n).unwrap().sigma;
        assert_eq!(get5("tau2"), -1);
        let cat6 = field_catalog(6, Mode::Ordinary).unwrap();
        assert_eq!(cat6.iter().find(|f| f.name == "tau4").unwrap().sigma, 1);
    }

    #[test]
    fn antifield_degrees() {
        for m in 2..=8 {
            let cat = field_catalog(m, Mode::Ordinary).unwrap();
            for f in &cat {
                let p = cat.iter().find(|g| g.name == f.partner).unwrap();
                assert_eq!(f.form_degree + p.form_degree, m as i32);
                assert_eq!(f.ghost + p.ghost, -1);
                let expect = if f.superfield == Superfield::A { 1 } else { m as i32 - 2 };
                assert_eq!(f.total_degree(), expect);
            }
        }
    }

    #[test]
    fn sign_tables_small() {
        for m in 2..=8 {
            assert!(check_sign_tables(m).unwrap().matches(), "m = {m}");
        }
        let t = check_sign_tables(4).unwrap();
        assert_eq!(t.rows[0].computed, -1);
        assert_eq!(t.rows[2].computed, 1);
        assert_eq!(check_sign_tables(3).unwrap().rows[2].computed, -1);
    }

    #[test]
    fn tower_ghosts() {
        for m in 2..=8 {
            check_tower(m).unwrap();
        }
        let t = gauge_fixing_tower(6);
        let e = t.iter().find(|e| e.name == "taubar3,1").unwrap();
        assert_eq!(e.ghost, 2 - 3 - 2);
    }
}
