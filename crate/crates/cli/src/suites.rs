//! Verification suites behind `bvkit check`.

use std::sync::Arc;

use bvkit::bv::{
    brst_derivation, brst_reduction, brst_square, bv_laplacian_formal, check_flat, check_sign_tables, delta_images,
    mu_from_lambda, random_config, sbracket, ComponentResidual, DerivMode, Expr, ExprDerivation, LocalFunctional,
    SuperfieldConfig, Twist,
};
use bvkit::derham::laws::run_laws;
use bvkit::derham::{AlgebraOps, Form, Key, RandomSpec, ValueKind};
use bvkit::error::{Error, Result};
use bvkit::koszul::scalar::Scalar;
use bvkit::liealg::{LieAlgebraData, Mode};
use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::report::{Identity, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    SignRules,
    MasterEquation,
    Laplacian,
    Observables,
    Brst,
    Pushforward,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::SignRules => "sign-rules",
            Suite::MasterEquation => "master-equation",
            Suite::Laplacian => "laplacian",
            Suite::Observables => "observables",
            Suite::Brst => "brst",
            Suite::Pushforward => "pushforward",
        }
    }
}

/// Resolved settings shared by the suites.
#[derive(Clone, Debug)]
pub struct Settings {
    pub m: usize,
    pub lie: Arc<LieAlgebraData>,
    pub seed: u64,
    pub max_freq: i8,
    pub q: u8,
    pub kappa: Option<Scalar>,
    pub lambda: Vec<(usize, Scalar)>,
    pub cases: usize,
}

impl Settings {
    pub fn spec(&self) -> RandomSpec {
        RandomSpec {
            terms: 3,
            max_freq: self.max_freq,
            grassmann: self.q,
            max_theta: 1,
            zero_bias: 0.6,
            ..RandomSpec::default()
        }
    }

    /// Seeded configuration number `case` over `alg`.
    pub fn config_for(&self, alg: &Arc<LieAlgebraData>, case: usize) -> Result<SuperfieldConfig> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(case as u64));
        random_config(&mut rng, self.m, Arc::new(AlgebraOps::new(alg.clone())), &self.spec())
    }

    pub fn config(&self, case: usize) -> Result<SuperfieldConfig> {
        self.config_for(&self.lie, case)
    }

    fn has_product(&self) -> bool {
        self.lie.assoc_table().is_some()
    }
}

pub fn tasks(suite: Suite, st: &Settings) -> Result<Vec<Task>> {
    if st.m < 2 {
        return Err(Error::Range(format!("m must be at least 2, got {}", st.m)));
    }
    match suite {
        Suite::SignRules => Ok(sign_rules(st)),
        Suite::MasterEquation => master_equation(st),
        Suite::Laplacian => Ok(laplacian(st)),
        Suite::Observables => Ok(observables(st)),
        Suite::Brst => brst(st),
        Suite::Pushforward => Ok(pushforward(st)),
    }
}

fn case_name(prefix: &str, case: usize, item: &str) -> String {
    format!("{prefix}/case={case:03}/{item}")
}

fn sign_rules(st: &Settings) -> Vec<Task> {
    let m = st.m;
    vec![Task::new("sign-rules", move || {
        let t = check_sign_tables(m)?;
        Ok(t.rows
            .iter()
            .map(|r| {
                Identity::new(
                    format!("sign-rules/m={m}/i={}", r.i),
                    "superbracket reduces to the component bracket: sigma_B(m-i) sigma_a(i) table",
                    r.computed == r.expected,
                    (r.computed != r.expected).then(|| format!("computed {} expected {}", r.computed, r.expected)),
                )
            })
            .collect())
    })]
}

fn nilpotency(cfg: &SuperfieldConfig, twist: &Twist) -> Result<(bool, Option<String>)> {
    let (ia, ib) = delta_images(cfg.mode(), cfg.m, twist)?;
    let der = ExprDerivation::on_superfields(DerivMode::Total(1), ia.clone(), ib.clone());
    for img in [ia, ib] {
        let dd = der.apply(&img, cfg.m)?.eval(cfg)?;
        if !dd.is_zero() {
            return Ok((false, dd.witness()));
        }
    }
    Ok((true, None))
}

fn master_equation(st: &Settings) -> Result<Vec<Task>> {
    let mut out = Vec::new();
    if let Some(k) = &st.kappa {
        if st.m % 2 == 0 || st.lie.mode == Mode::Canonical {
            return Err(Error::Config("--kappa needs odd m and an algebra with an invariant metric".into()));
        }
        let k2 = k * k;
        let st = st.clone();
        out.push(Task::new("master-equation/kappa", move || {
            let mut ids = Vec::new();
            for case in 0..st.cases {
                let cfg = st.config(case)?;
                let total = LocalFunctional::linear_combination(
                    &[(Scalar::one(), LocalFunctional::bf_action()), (k2.clone(), LocalFunctional::cosmological())],
                    "S + kappa^2 S3",
                );
                let r = sbracket(&total, &total, &cfg)?;
                ids.push(Identity::new(
                    case_name("master-equation", case, "twisted-kappa/(S,S)"),
                    "(S + kappa^2 S3, S + kappa^2 S3) = 0",
                    r.is_zero(),
                    r.witness(),
                ));
                let (ok, w) = nilpotency(&cfg, &Twist::Kappa2(k2.clone()))?;
                ids.push(Identity::new(
                    case_name("master-equation", case, "twisted-kappa/delta^2"),
                    "delta_{kappa^2}^2 = 0 on a and B",
                    ok,
                    w,
                ));
            }
            Ok(ids)
        }));
    }
    if !st.lambda.is_empty() {
        if st.lie.mode == Mode::Canonical {
            return Err(Error::Config("--lambda needs the ordinary variant".into()));
        }
        let mu = mu_from_lambda(&st.lambda);
        let st = st.clone();
        out.push(Task::new("master-equation/mu", move || {
            let mut ids = Vec::new();
            for case in 0..st.cases {
                let cfg = st.config(case)?;
                let (ok, w) = nilpotency(&cfg, &Twist::Mu(mu.clone()))?;
                ids.push(Identity::new(
                    case_name("master-equation", case, "twisted-mu/delta^2"),
                    "delta_mu^2 = 0 for mu = lambda^2",
                    ok,
                    w,
                ));
            }
            Ok(ids)
        }));
    }
    for case in 0..st.cases {
        let st = st.clone();
        out.push(Task::new(format!("master-equation/{case}"), move || {
            let cfg = st.config(case)?;
            let s = LocalFunctional::bf_action();
            let r = sbracket(&s, &s, &cfg)?;
            let (ok, w) = nilpotency(&cfg, &Twist::None)?;
            Ok(vec![
                Identity::new(case_name("master-equation", case, "(S,S)"), "(S, S) = 0", r.is_zero(), r.witness()),
                Identity::new(case_name("master-equation", case, "delta^2"), "delta^2 a = delta^2 B = 0", ok, w),
            ])
        }));
    }
    Ok(out)
}

fn laplacian(st: &Settings) -> Vec<Task> {
    let mut out = Vec::new();
    let st0 = st.clone();
    out.push(Task::new("laplacian/catalog", move || {
        let cfg = st0.config(0)?;
        let can = Arc::new(if st0.lie.mode == Mode::Canonical {
            (*st0.lie).clone()
        } else {
            st0.lie.canonical()
        });
        let cfg_can = st0.config_for(&can, 0)?;
        let mut ids = Vec::new();
        for (label, f, c, reference) in [
            ("S", LocalFunctional::bf_action(), &cfg, "Delta S = 0 by antisymmetry of the structure constants"),
            ("S-canonical", LocalFunctional::bf_action(), &cfg_can, "Delta S = 0 for the canonical variant"),
            ("s", LocalFunctional::small_s(), &cfg, "Delta s = 0 by the alternating binomial sum"),
        ] {
            let r = bv_laplacian_formal(&f, c)?;
            let w = (!r.vanishes).then(|| format!("coefficient {:?}: {}", r.coefficient, r.reason));
            ids.push(Identity::new(format!("laplacian/{label}"), reference, r.vanishes, w));
        }
        Ok(ids)
    }));
    if st.has_product() {
        for case in 0..st.cases {
            let st = st.clone();
            out.push(Task::new(format!("laplacian/scaling/{case}"), move || {
                let cfg = st.config(case)?;
                let s = LocalFunctional::small_s();
                let mut ids = Vec::new();
                for n in 1..=5 {
                    let o = LocalFunctional::trace_power(&cfg, n)?;
                    let lhs = sbracket(&o, &s, &cfg)?;
                    let r = lhs.sub(&o.eval(&cfg)?.scale(&Scalar::int(n as i64)));
                    ids.push(Identity::new(
                        case_name("laplacian", case, &format!("(O_{n},s)")),
                        "(O_n, s) = n O_n",
                        r.is_zero(),
                        r.witness(),
                    ));
                }
                Ok(ids)
            }));
        }
    }
    out
}

fn flat_identity(case: usize, label: &str, o: &LocalFunctional, cfg: &SuperfieldConfig) -> Result<Vec<Identity>> {
    let r = check_flat(o, cfg)?;
    Ok(vec![
        Identity::new(
            case_name("observables", case, &format!("{label}/delta")),
            "delta O = (S, O) = 0",
            r.delta_closed,
            r.delta_witness.clone(),
        ),
        Identity::new(case_name("observables", case, &format!("{label}/Delta")), "Delta O = 0", r.laplacian_zero, None),
        Identity::new(
            case_name("observables", case, &format!("{label}/(O,O)")),
            "(O, O) = 0",
            r.self_bracket_zero,
            r.bracket_witness.clone(),
        ),
    ])
}

fn observables(st: &Settings) -> Vec<Task> {
    let mut out = Vec::new();
    for case in 0..st.cases {
        let st = st.clone();
        out.push(Task::new(format!("observables/{case}"), move || {
            let cfg = st.config(case)?;
            let m = st.m;
            let mut ids = Vec::new();
            if m % 2 == 1 && st.lie.mode == Mode::Ordinary {
                ids.extend(flat_identity(case, "S3", &LocalFunctional::cosmological(), &cfg)?);
            }
            if st.has_product() {
                for k in 1..=5 {
                    let o = LocalFunctional::trace_power(&cfg, k)?;
                    if o.total_degree(m).is_some_and(|d| d % 2 == 0) {
                        ids.extend(flat_identity(case, &format!("O_{k}"), &o, &cfg)?);
                    }
                }
            }
            Ok(ids)
        }));
    }
    if st.has_product() {
        let st = st.clone();
        out.push(Task::new("observables/non-cyclic", move || {
            let mut witness = None;
            let mut evaluated = false;
            for case in 0..st.cases.max(8) {
                let cfg = st.config(case)?;
                let o = LocalFunctional::non_cyclic(&cfg, 1.min(st.lie.dim - 1))?;
                match check_flat(&o, &cfg) {
                    Ok(r) => {
                        evaluated = true;
                        if !r.delta_closed {
                            witness = r.delta_witness.or(Some(format!("case {case}")));
                            break;
                        }
                    }
                    Err(Error::Parity(_)) => break,
                    Err(e) => return Err(e),
                }
            }
            if !evaluated {
                return Ok(vec![]);
            }
            Ok(vec![Identity::new(
                "observables/non-cyclic/detected",
                "a functional without trace cyclicity is not delta-closed",
                witness.is_some(),
                witness,
            )])
        }));
    }
    out
}

fn residual_ids(prefix: String, reference: &str, rs: Vec<ComponentResidual>) -> Vec<Identity> {
    rs.into_iter()
        .map(|r| Identity::new(format!("{prefix}/{}", r.field), reference, r.zero, r.witness))
        .collect()
}

/// Constant connection along one Lie direction, hence flat.
fn constant_flat(cfg: &SuperfieldConfig) -> Form {
    let mut flat = Form::zero(&cfg.domain, ValueKind::Adjoint, cfg.ops.alg.dim);
    flat.add_term(Key::new(0, 0b0001, 0, 0), Scalar::int(2));
    flat.add_term(Key::new(0, 1 << (cfg.m - 1), 0, 0), Scalar::rat(-1, 3));
    flat
}

fn brst(st: &Settings) -> Result<Vec<Task>> {
    if st.m < 3 {
        return Err(Error::Range(format!("the BRST suite needs m >= 3, got {}", st.m)));
    }
    let mut out = Vec::new();
    for case in 0..st.cases {
        let st = st.clone();
        out.push(Task::new(format!("brst/{case}"), move || {
            let cfg = st.config(case)?;
            let mut ids = residual_ids(
                case_name("brst", case, "reduction"),
                "delta S with antifields set to zero equals the BRST differential",
                brst_reduction(&cfg)?,
            );
            ids.extend(residual_ids(
                case_name("brst", case, "square"),
                "delta_BRST^2 = [F_A, tau] off shell",
                brst_square(&cfg)?,
            ));
            Ok(ids)
        }));
    }
    let st = st.clone();
    out.push(Task::new("brst/on-shell", move || {
        let base = st.config(0)?;
        let cfg = base.with_components(&[("a", constant_flat(&base))])?;
        let brst = brst_derivation(&cfg)?;
        let m = cfg.m;
        let mut ids = Vec::new();
        for (i, f) in cfg.catalog.iter().enumerate().filter(|(_, f)| !f.is_antifield) {
            let e = Expr::Comp {
                index: i,
                deg: f.form_degree,
                gh: f.ghost,
            };
            let r = brst.apply(&brst.apply(&e, m)?, m)?.eval(&cfg)?;
            ids.push(Identity::new(
                format!("brst/on-shell/{}", f.name),
                "delta_BRST^2 = 0 on flat connections",
                r.is_zero(),
                r.witness(),
            ));
        }
        Ok(ids)
    }));
    Ok(out)
}

fn pushforward(st: &Settings) -> Vec<Task> {
    let (cases, seed) = (st.cases, st.seed);
    vec![Task::new("pushforward", move || {
        Ok(run_laws(cases, seed)?
            .into_iter()
            .map(|r| {
                Identity::new(
                    format!("pushforward/{}/{}", r.law, r.fibration),
                    "fiber integration law on seeded fibered forms",
                    r.failures == 0,
                    r.witness,
                )
            })
            .collect())
    })]
}
