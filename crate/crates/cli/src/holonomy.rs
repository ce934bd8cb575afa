//! Loop files, the connection registry and the checks behind `bvkit holonomy`.

use std::f64::consts::TAU;
use std::sync::Arc;

use bvkit::derham::{random_form, AlgebraOps, Domain, Form, RandomSpec, ValueKind};
use bvkit::error::{Error, Result};
use bvkit::koszul::scalar::{factorial, Scalar};
use bvkit::liealg::LieAlgebraData;
use bvkit::bv::random_config;
use bvkit::wilson::{
    check_closedness_skeleton, check_holonomy_variation, rep_size, smooth_variation, transport, trefoil, ExactMatrix, FnLoop, NumLoop,
    transport_rk4, CMat, Connection, SampledLoop, TrigConnection, WindingLoop, FD_TOLERANCE,
};
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::{Identity, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LoopMode {
    Exact,
    Numeric,
}

/// On-disk loop description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum LoopFile {
    Exact {
        winding: Vec<i8>,
        /// Quarter-period offsets.
        #[serde(default)]
        offset: Option<Vec<i8>>,
        /// Quarter-period offsets of the framed companion.
        #[serde(default)]
        framing_offset: Option<Vec<i8>>,
    },
    Numeric {
        /// Points `gamma(j / J)` for `j = 0..=J`, closing up at `j = J`.
        samples: Vec<Vec<f64>>,
        #[serde(default)]
        tangents: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        framing_offset: Option<f64>,
    },
}

pub enum LoopSpec {
    Exact(WindingLoop),
    Trefoil,
    Sampled(SampledLoop),
}

impl LoopSpec {
    pub fn mode(&self) -> LoopMode {
        match self {
            LoopSpec::Exact(_) => LoopMode::Exact,
            _ => LoopMode::Numeric,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            LoopSpec::Exact(l) => l.m(),
            LoopSpec::Trefoil => 3,
            LoopSpec::Sampled(s) => s.m(),
        }
    }
}

/// Builtin name or path to a JSON loop file.
pub fn load_loop(spec: &str) -> Result<LoopSpec> {
    match spec {
        "circle" => return Ok(LoopSpec::Exact(WindingLoop::new(vec![1], vec![0])?)),
        "diagonal" => return Ok(LoopSpec::Exact(WindingLoop::new(vec![1, 0, -1], vec![0, 1, 0])?)),
        "trefoil" => return Ok(LoopSpec::Trefoil),
        _ => {}
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Error::Config(format!("cannot read loop '{spec}': {e}")))?;
    let file: LoopFile = serde_json::from_str(&text).map_err(|e| Error::Config(format!("loop file: {e}")))?;
    loop_from_file(file)
}

pub fn loop_from_file(file: LoopFile) -> Result<LoopSpec> {
    match file {
        LoopFile::Exact {
            winding,
            offset,
            framing_offset,
        } => {
            if winding.is_empty() || winding.iter().all(|&w| w == 0) {
                return Err(Error::Config("a winding loop needs a nonzero winding vector".into()));
            }
            let offset = offset.unwrap_or_else(|| vec![0; winding.len()]);
            let lp = WindingLoop::new(winding, offset).map_err(|e| Error::Config(e.to_string()))?;
            Ok(LoopSpec::Exact(match framing_offset {
                Some(f) => lp.with_framing(f).map_err(|e| Error::Config(e.to_string()))?,
                None => lp,
            }))
        }
        LoopFile::Numeric { samples, tangents, .. } => {
            let tangents = match tangents {
                Some(t) => t,
                None => periodic_tangents(&samples)?,
            };
            Ok(LoopSpec::Sampled(
                SampledLoop::new(samples, tangents).map_err(|e| Error::Config(e.to_string()))?,
            ))
        }
    }
}

/// Central differences on the closed sample sequence.
fn periodic_tangents(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let j = samples.len().saturating_sub(1);
    if j < 16 {
        return Err(Error::Config("a sampled loop needs J >= 16 points".into()));
    }
    let m = samples[0].len();
    if samples.iter().any(|p| p.len() != m) {
        return Err(Error::Config("sample dimensions differ".into()));
    }
    let h = 1.0 / j as f64;
    Ok((0..=j)
        .map(|i| {
            let (next, prev) = (&samples[(i % j) + 1], &samples[(i + j - 1) % j]);
            (0..m).map(|c| (next[c] - prev[c]) / (2.0 * h)).collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConnName {
    Zero,
    Abelian,
    Random,
}

/// Parameter block of a registered connection.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnParams {
    /// Abelian coefficient of `dx_0`, a scalar string.
    #[serde(default = "default_c")]
    pub c: String,
    /// Matrix size of numeric connections.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_c() -> String {
    "1/2".into()
}
fn default_n() -> usize {
    2
}
fn default_modes() -> usize {
    2
}
fn default_scale() -> f64 {
    0.5
}

impl Default for ConnParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Clone, Debug)]
pub struct HolonomySettings {
    pub conn: ConnName,
    pub params: ConnParams,
    pub lie: Arc<LieAlgebraData>,
    pub seed: u64,
    pub max_freq: i8,
    pub q: u8,
    pub lambda: Vec<(usize, Scalar)>,
    pub order: usize,
    pub tol: f64,
    pub samples: usize,
}

const EPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

pub fn tasks(lp: LoopSpec, st: &HolonomySettings) -> Result<Vec<Task>> {
    match lp {
        LoopSpec::Exact(w) => exact_tasks(w, st),
        LoopSpec::Trefoil => numeric_tasks(Box::new(FnLoop { m: 3, f: trefoil }), st),
        LoopSpec::Sampled(s) => numeric_tasks(Box::new(s), st),
    }
}

/// Connection on `T^m` with its algebra.
fn exact_connection(lp: &WindingLoop, st: &HolonomySettings) -> Result<(LieAlgebraData, Form)> {
    let m = lp.m();
    let domain = Domain::torus(m);
    Ok(match st.conn {
        ConnName::Zero => {
            let alg = (*st.lie).clone();
            let dim = alg.dim;
            (alg, Form::zero(&domain, ValueKind::Adjoint, dim))
        }
        ConnName::Abelian => {
            let c = Scalar::parse(&st.params.c).map_err(|e| Error::Config(format!("abelian c: {e}")))?;
            let freq = vec![0; m];
            (LieAlgebraData::gl(1)?, Form::monomial(&domain, ValueKind::Adjoint, 1, &freq, &[0], 0, c))
        }
        ConnName::Random => {
            let alg = (*st.lie).clone();
            let spec = RandomSpec {
                terms: 2,
                max_freq: st.max_freq,
                max_theta: 0,
                zero_bias: 0.3,
                ..RandomSpec::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
            let a = random_form(&mut rng, &domain, ValueKind::Adjoint, alg.dim, 1, 0, &spec);
            (alg, a)
        }
    })
}

fn exact_tasks(lp: WindingLoop, st: &HolonomySettings) -> Result<Vec<Task>> {
    if st.order == 0 {
        return Err(Error::Range("--order must be at least 1".into()));
    }
    let (alg, a) = exact_connection(&lp, st)?;
    let n = rep_size(&alg).map_err(|e| Error::Config(e.to_string()))?;
    let order = st.order;
    let mut out = Vec::new();
    {
        let (lp, alg) = (lp.clone(), alg.clone());
        out.push(Task::new("holonomy/zero-connection", move || {
            let zero = Form::zero(&Domain::torus(lp.m()), ValueKind::Adjoint, alg.dim);
            let r = transport(&zero, &alg, &lp, 0, 4, order)?;
            let ok = r.terms[0] == ExactMatrix::identity(n) && r.terms[1..].iter().all(|t| *t == ExactMatrix::zero(n));
            Ok(vec![Identity::new(
                "holonomy/zero-connection",
                "hol = 1 for a = 0",
                ok,
                (!ok).then(|| format!("{:?}", r.total().rows())),
            )])
        }));
    }
    for split in 1..4 {
        let (lp, alg, a) = (lp.clone(), alg.clone(), a.clone());
        out.push(Task::new(format!("holonomy/composition/{split}"), move || {
            let full = transport(&a, &alg, &lp, 0, 4, order)?;
            let left = transport(&a, &alg, &lp, 0, split, order)?;
            let right = transport(&a, &alg, &lp, split, 4, order)?;
            let mut ids = Vec::new();
            for k in 0..=order {
                let mut acc = ExactMatrix::zero(n);
                for i in 0..=k {
                    acc = acc.add(&left.terms[i].mul(&right.terms[k - i]));
                }
                let ok = acc == full.terms[k];
                ids.push(Identity::new(
                    format!("holonomy/composition/split={split}q/order={k}"),
                    "hol(0, s) hol(s, 1) = hol(0, 1) at each truncation order",
                    ok,
                    (!ok).then(|| format!("{:?} vs {:?}", acc.rows(), full.terms[k].rows())),
                ));
            }
            Ok(ids)
        }));
    }
    if st.conn == ConnName::Abelian {
        let c = Scalar::parse(&st.params.c).map_err(|e| Error::Config(format!("abelian c: {e}")))?;
        let (lp, alg, a) = (lp.clone(), alg.clone(), a.clone());
        out.push(Task::new("holonomy/abelian", move || {
            let r = transport(&a, &alg, &lp, 0, 4, order)?;
            // a(gamma') = 2 pi w_0 c
            let rate = c.scale_q(&bvkit::koszul::scalar::Q::int(2 * lp.winding[0] as i64)).shift_pi(1);
            let mut ids = Vec::new();
            for (k, t) in r.terms.iter().enumerate() {
                let expect = rate.pow(k as u32).scale_q(&factorial(k as u32).recip());
                let ok = t.entries[0] == expect;
                ids.push(Identity::new(
                    format!("holonomy/abelian/order={k}"),
                    "order-k term of a constant abelian connection is c^k / k!",
                    ok,
                    (!ok).then(|| format!("{} vs {}", t.entries[0], expect)),
                ));
            }
            Ok(ids)
        }));
    }
    if lp.m() >= 3 && st.lie.rep_dim().is_some() {
        let st = st.clone();
        out.push(Task::new("holonomy/skeleton", move || skeleton(&lp, &st)));
    }
    Ok(out)
}

fn skeleton(lp: &WindingLoop, st: &HolonomySettings) -> Result<Vec<Identity>> {
    let m = lp.m();
    let spec = RandomSpec {
        terms: 3,
        max_freq: st.max_freq,
        grassmann: st.q,
        max_theta: 2,
        zero_bias: 0.3,
        ..RandomSpec::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
    let cfg = random_config(&mut rng, m, Arc::new(AlgebraOps::new(st.lie.clone())), &spec)?;
    let r = check_closedness_skeleton(&cfg, &st.lambda, lp, st.order.min(3))?;
    let mut ids = vec![
        Identity::new("holonomy/skeleton/flatness", "the Wilson connection is flat", r.flat, r.flat_witness.clone()),
        Identity::new(
            "holonomy/skeleton/face-signs",
            "boundary face orientation signs (-1)^(alpha+1)",
            r.face_signs_match,
            None,
        ),
    ];
    for p in &r.face_pairs {
        if m % 2 == 1 || p.insertions % 2 == 1 {
            ids.push(Identity::new(
                format!("holonomy/skeleton/end-faces/insertions={}", p.insertions),
                "end faces cancel by trace cyclicity",
                p.cancels,
                None,
            ));
        }
    }
    if m % 2 == 0 {
        ids.push(Identity::new(
            "holonomy/skeleton/end-faces/even-witness",
            "an even insertion count leaves nonzero end faces",
            r.even_counterexample(),
            None,
        ));
    }
    for s in &r.stokes {
        ids.push(Identity::new(
            format!("holonomy/skeleton/stokes/count={}", s.count),
            "d of the Chen form equals the contracted curvature terms",
            s.zero,
            s.witness.clone(),
        ));
    }
    for p in &r.finite_differences {
        let ok = p.relative_error < FD_TOLERANCE;
        ids.push(Identity::new(
            format!("holonomy/skeleton/finite-difference/count={}/dir={}", p.count, p.direction),
            "exact d against central differences",
            ok,
            (!ok).then(|| format!("relative error {:e}", p.relative_error)),
        ));
    }
    Ok(ids)
}

/// Smooth periodic variation field in `R^m`.
fn variation(m: usize) -> Box<dyn Fn(f64) -> (Vec<f64>, Vec<f64>) + Send> {
    if m == 3 {
        return Box::new(smooth_variation);
    }
    Box::new(move |t: f64| {
        let s = TAU * t;
        (0..m)
            .map(|j| {
                let p = 0.7 * j as f64;
                ((s + p).cos(), -TAU * (s + p).sin())
            })
            .unzip()
    })
}

fn numeric_tasks(lp: Box<dyn NumLoop + Send>, st: &HolonomySettings) -> Result<Vec<Task>> {
    if st.samples < 16 {
        return Err(Error::Range("--samples must be at least 16".into()));
    }
    let m = lp.m();
    let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
    let p = &st.params;
    if p.n == 0 || p.modes == 0 || !(p.scale > 0.0) {
        return Err(Error::Config("connection parameters need n, modes >= 1 and scale > 0".into()));
    }
    let samples = st.samples;
    if st.conn == ConnName::Zero {
        let conn = TrigConnection::random(&mut rng, p.n, m, 0, p.scale);
        return Ok(vec![Task::new("holonomy/zero-connection", move || {
            let h = transport_rk4(&conn, lp.as_ref(), samples);
            let dev = (&h[samples] - CMat::identity(conn.n(), conn.n())).norm();
            Ok(vec![Identity::new(
                "holonomy/zero-connection",
                "hol = 1 for a = 0",
                dev == 0.0,
                (dev != 0.0).then(|| format!("deviation {dev:e}")),
            )])
        })]);
    }
    let n = if st.conn == ConnName::Abelian { 1 } else { p.n };
    let conn = TrigConnection::random(&mut rng, n, m, p.modes, p.scale);
    let tol = st.tol;
    Ok(vec![Task::new("holonomy/variation", move || {
        let v = variation(m);
        let r = check_holonomy_variation(&conn, lp.as_ref(), v.as_ref(), &EPS, samples)?;
        let ok = r.richardson_residual < tol;
        Ok(vec![Identity::new(
            "holonomy/variation",
            "variation of the holonomy equals endpoint terms minus the curvature integral",
            ok,
            Some(format!("richardson relative residual {:e}", r.richardson_residual)).filter(|_| !ok),
        )])
    })])
}
