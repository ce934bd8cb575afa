//! Seeded checks of the pushforward laws on test fibrations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::form::{random_form, CoordKind, Domain, Form, RandomSpec, ValueKind};
use super::maps::{
    base_domain, boundary_pushforward, pull_to_total, pushforward, CoordImage, CoordMap, FaceConvention, Fiber,
};
use crate::error::Result;
use crate::koszul::scalar::{parity_sign, Scalar};

/// Named total domain with a fiber.
#[derive(Clone, Debug)]
pub struct Fibration {
    pub name: &'static str,
    pub total: Domain,
    pub fiber: Fiber,
}

/// Interval, two- and three-simplex over `T^2`, circle and sub-torus fibers of `T^3`.
pub fn fibrations() -> Vec<Fibration> {
    let t2 = Domain::torus(2);
    vec![
        Fibration {
            name: "interval",
            total: Domain::with_unit_fiber(1, &t2),
            fiber: Fiber::Box(vec![0]),
        },
        Fibration {
            name: "simplex2",
            total: Domain::with_unit_fiber(2, &t2),
            fiber: Fiber::Simplex(vec![0, 1]),
        },
        Fibration {
            name: "simplex3",
            total: Domain::with_unit_fiber(3, &t2),
            fiber: Fiber::Simplex(vec![0, 1, 2]),
        },
        Fibration {
            name: "circle",
            total: Domain::torus(3),
            fiber: Fiber::Box(vec![1]),
        },
        Fibration {
            name: "subtorus",
            total: Domain::torus(3),
            fiber: Fiber::Box(vec![2, 0]),
        },
    ]
}

pub fn law_spec() -> RandomSpec {
    RandomSpec {
        max_freq: 1,
        terms: 3,
        grassmann: 6,
        max_theta: 2,
        zero_bias: 0.3,
        ..RandomSpec::default()
    }
}

/// Random scalar form of random degree and ghost.
pub fn random_on(rng: &mut ChaCha8Rng, d: &Domain) -> Form {
    let deg = rng.gen_range(0..=d.len());
    let gh = rng.gen_range(-1..=2);
    random_form(rng, d, ValueKind::Scalar, 1, deg, gh, &law_spec())
}

fn sign(s: i32) -> Scalar {
    Scalar::int(s as i64)
}

/// `a - b`, tolerating zero operands.
pub fn diff(a: &Form, b: &Form) -> Result<Form> {
    if a.is_zero() {
        return Ok(b.neg());
    }
    if b.is_zero() {
        return Ok(a.clone());
    }
    a.sub(b)
}

/// One evaluated instance of a law: residual and whether the sides were nonzero.
pub struct Instance {
    pub residual: Form,
    pub nontrivial: bool,
}

fn instance(lhs: &Form, rhs: &Form) -> Result<Instance> {
    Ok(Instance {
        residual: diff(lhs, rhs)?,
        nontrivial: !lhs.is_zero() || !rhs.is_zero(),
    })
}

/// `pi_*(pi^* a ^ b) = (-1)^{f deg a} a ^ pi_* b`.
pub fn projection_left(rng: &mut ChaCha8Rng, fb: &Fibration) -> Result<Instance> {
    let f = fb.fiber.dim() as i32;
    let (base, _) = base_domain(&fb.total, &fb.fiber)?;
    let alpha = random_on(rng, &base);
    let beta = random_on(rng, &fb.total);
    let pa = pull_to_total(&alpha, &fb.total, &fb.fiber)?;
    let deg_a = alpha.terms.keys().next().map(|k| k.form_degree()).unwrap_or(0);
    let lhs = pushforward(&pa.wedge(&beta)?, &fb.fiber)?;
    let rhs = alpha
        .wedge(&pushforward(&beta, &fb.fiber)?)?
        .scale(&sign(parity_sign((f * deg_a) as i64)));
    instance(&lhs, &rhs)
}

/// `pi_*(b ^ pi^* a) = pi_* b ^ a`.
pub fn projection_right(rng: &mut ChaCha8Rng, fb: &Fibration) -> Result<Instance> {
    let (base, _) = base_domain(&fb.total, &fb.fiber)?;
    let alpha = random_on(rng, &base);
    let beta = random_on(rng, &fb.total);
    let pa = pull_to_total(&alpha, &fb.total, &fb.fiber)?;
    let lhs = pushforward(&beta.wedge(&pa)?, &fb.fiber)?;
    let rhs = pushforward(&beta, &fb.fiber)?.wedge(&alpha)?;
    instance(&lhs, &rhs)
}

/// `d pi_* a = (-1)^f pi_* d a - (-1)^f pi_{d*} iota^* a`.
pub fn generalized_stokes(rng: &mut ChaCha8Rng, fb: &Fibration) -> Result<Instance> {
    let f = fb.fiber.dim() as i64;
    let a = random_on(rng, &fb.total);
    let pushed = pushforward(&a, &fb.fiber)?;
    let lhs = pushed.d();
    let inner = pushforward(&a.d(), &fb.fiber)?;
    let bdry = boundary_pushforward(&a, &fb.fiber, FaceConvention::NormalFirst)?;
    let rhs = diff(&inner, &bdry)?.scale(&sign(parity_sign(f)));
    let mut inst = instance(&lhs, &rhs)?;
    inst.nontrivial |= !pushed.is_zero() || !bdry.is_zero();
    Ok(inst)
}

/// `pi_* phi^* = psi^* pi_*` for `phi = id x psi` with `psi` a random affine self-map of `T^2`.
/// Periodic-fiber fibrations use `psi` on the remaining base coordinates of `T^3`.
pub fn pullback_commutes(rng: &mut ChaCha8Rng, fb: &Fibration) -> Result<Instance> {
    let (base, index) = base_domain(&fb.total, &fb.fiber)?;
    let nb = base.len();
    let psi_images: Vec<CoordImage> = (0..nb)
        .map(|_| CoordImage::Affine {
            terms: (0..nb).map(|l| (l, rng.gen_range(-2..=2))).collect(),
            quarter: rng.gen_range(0..4),
        })
        .collect();
    let psi = CoordMap::new(&base, &base, psi_images.clone())?;
    // total coordinate of each base index
    let mut total_of = vec![0; nb];
    for (j, b) in index.iter().enumerate() {
        if let Some(b) = b {
            total_of[*b] = j;
        }
    }
    let images: Vec<CoordImage> = (0..fb.total.len())
        .map(|j| match index[j] {
            None => CoordImage::Copy(j),
            Some(b) => match &psi_images[b] {
                CoordImage::Affine { terms, quarter } => CoordImage::Affine {
                    terms: terms.iter().map(|&(l, c)| (total_of[l], c)).collect(),
                    quarter: *quarter,
                },
                other => other.clone(),
            },
        })
        .collect();
    let phi = CoordMap::new(&fb.total, &fb.total, images)?;
    let a = random_on(rng, &fb.total);
    let lhs = pushforward(&phi.pullback(&a)?, &fb.fiber)?;
    let rhs = psi.pullback(&pushforward(&a, &fb.fiber)?)?;
    instance(&lhs, &rhs)
}

/// Fubini: pushing along a periodic coordinate then the fiber equals the reverse order times `(-1)^f`.
pub fn iterated_pushforward(rng: &mut ChaCha8Rng, fb: &Fibration) -> Result<Instance> {
    let f = fb.fiber.dim() as i64;
    let a = random_on(rng, &fb.total);
    let (base, index) = base_domain(&fb.total, &fb.fiber)?;
    // last base coordinate is periodic in every test fibration
    let circle_total = index.iter().rposition(|b| b.is_some()).expect("base coordinate");
    let circle_base = index[circle_total].expect("base coordinate");
    debug_assert_eq!(base.kind(circle_base), CoordKind::Periodic);
    let fiber_first = pushforward(&pushforward(&a, &fb.fiber)?, &Fiber::Box(vec![circle_base]))?;
    let (_, after_circle) = base_domain(&fb.total, &Fiber::Box(vec![circle_total]))?;
    let shifted: Vec<usize> = fb
        .fiber
        .coords()
        .iter()
        .map(|&j| after_circle[j].expect("fiber coordinate"))
        .collect();
    let shifted = match &fb.fiber {
        Fiber::Box(_) => Fiber::Box(shifted),
        Fiber::Simplex(_) => Fiber::Simplex(shifted),
    };
    let circle_first = pushforward(&pushforward(&a, &Fiber::Box(vec![circle_total]))?, &shifted)?;
    instance(&fiber_first, &circle_first.scale(&sign(parity_sign(f))))
}

/// Odd derivation `d/dtheta_g` on the Grassmann factor, twisted by `(-1)^{form degree}`.
pub fn odd_derivation(f: &Form, g: u16) -> Form {
    let mut out = Form::zero(&f.domain, f.kind, f.dim);
    for (k, c) in &f.terms {
        if k.gmask & (1 << g) == 0 {
            continue;
        }
        let before = (k.gmask & ((1u16 << g) - 1)).count_ones() as i32;
        let mut nk = *k;
        nk.gmask &= !(1 << g);
        nk.gh -= 1;
        out.add_term(nk, c * &sign(parity_sign((before + k.form_degree()) as i64)));
    }
    out
}

/// `delta pi_* = (-1)^f pi_* delta` for the odd derivation.
pub fn delta_push(rng: &mut ChaCha8Rng, fb: &Fibration) -> Result<Instance> {
    let f = fb.fiber.dim() as i64;
    let a = random_on(rng, &fb.total);
    let pushed = pushforward(&a, &fb.fiber)?;
    // differentiate along a generator that occurs in the pushed form when possible
    let g = pushed
        .terms
        .keys()
        .find(|k| k.gmask != 0)
        .map(|k| k.gmask.trailing_zeros() as u16)
        .unwrap_or_else(|| rng.gen_range(0..law_spec().grassmann as u16));
    let lhs = odd_derivation(&pushed, g);
    let rhs = pushforward(&odd_derivation(&a, g), &fb.fiber)?.scale(&sign(parity_sign(f)));
    instance(&lhs, &rhs)
}

pub type Law = fn(&mut ChaCha8Rng, &Fibration) -> Result<Instance>;

pub fn laws() -> Vec<(&'static str, Law)> {
    vec![
        ("projection-left", projection_left as Law),
        ("projection-right", projection_right as Law),
        ("generalized-stokes", generalized_stokes as Law),
        ("pullback-commutes", pullback_commutes as Law),
        ("iterated-pushforward", iterated_pushforward as Law),
        ("delta-pushforward", delta_push as Law),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct LawReport {
    pub law: String,
    pub fibration: String,
    pub cases: usize,
    pub nontrivial: usize,
    pub failures: usize,
    pub witness: Option<String>,
}

/// Runs every law on every fibration with `cases` seeded instances each.
pub fn run_laws(cases: usize, seed: u64) -> Result<Vec<LawReport>> {
    let mut out = Vec::new();
    for (li, (law, f)) in laws().into_iter().enumerate() {
        for (fi, fb) in fibrations().iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((li as u64) << 32) ^ ((fi as u64) << 16));
            let mut rep = LawReport {
                law: law.into(),
                fibration: fb.name.into(),
                cases,
                nontrivial: 0,
                failures: 0,
                witness: None,
            };
            for _ in 0..cases {
                let inst = f(&mut rng, fb)?;
                rep.nontrivial += usize::from(inst.nontrivial);
                if !inst.residual.is_zero() {
                    rep.failures += 1;
                    rep.witness = rep.witness.or_else(|| inst.residual.witness());
                }
            }
            out.push(rep);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_laws_hold() {
        for r in run_laws(20, 7).unwrap() {
            assert_eq!(r.failures, 0, "{} on {}: {:?}", r.law, r.fibration, r.witness);
            assert!(r.nontrivial > 0, "{} on {} never nontrivial", r.law, r.fibration);
        }
    }
}
