mod holonomy;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use bvkit::angular::check_angular;
use bvkit::error::{Error, Result};
use bvkit::koszul::scalar::Scalar;
use bvkit::liealg::LieAlgebraData;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use holonomy::{ConnName, ConnParams, HolonomySettings, LoopMode};
use report::{print_summary, run_tasks, Identity, Report, Task};
use suites::{Settings, Suite};

#[derive(Parser, Debug)]
#[command(name = "bvkit", version, about = "Exact verification suites for BV superfield identities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one identity suite.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
        /// Number of seeded configurations (laws: instances per fibration).
        #[arg(long)]
        cases: Option<usize>,
    },
    /// Angular-form coefficients and identities for fiber dimension n.
    Angular {
        #[arg(long)]
        n: usize,
        /// Coefficient file.
        #[arg(long)]
        emit: Option<PathBuf>,
        /// JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transport, composition, variation and skeleton checks along a loop.
    Holonomy {
        /// Builtin loop (circle, diagonal, trefoil) or JSON loop file.
        #[arg(long = "loop")]
        loop_spec: String,
        #[arg(long, value_enum, default_value = "random")]
        conn: ConnName,
        /// Connection parameter block as JSON, e.g. '{"c": "1/2"}'.
        #[arg(long)]
        conn_params: Option<String>,
        /// Expected loop mode; checked against the loop.
        #[arg(long, value_enum)]
        mode: Option<LoopMode>,
        /// Samples J of the numeric transport.
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Builtin algebra (so3, glN, u1^d, aff1, optionally with -can) or JSON file.
    #[arg(long, default_value = "so3")]
    lie: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    max_freq: i8,
    /// Grassmann generators of the ghost sampling.
    #[arg(long, default_value_t = 16)]
    q: u8,
    #[arg(long)]
    kappa: Option<String>,
    /// Coefficients lambda_1, lambda_2, ... of the B-series.
    #[arg(long, value_delimiter = ',')]
    lambda: Vec<String>,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn echo(&self) -> serde_json::Value {
        json!({
            "m": self.m,
            "lie": self.lie,
            "seed": self.seed,
            "max_freq": self.max_freq,
            "q": self.q,
            "kappa": self.kappa,
            "lambda": self.lambda,
            "order": self.order,
            "tol": self.tol,
        })
    }

    fn lambda(&self) -> Result<Vec<(usize, Scalar)>> {
        self.lambda
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((i + 1, parse_scalar("lambda", s)?)))
            .filter(|r| !matches!(r, Ok((_, c)) if c.is_zero()))
            .collect()
    }

    fn lie(&self) -> Result<Arc<LieAlgebraData>> {
        let alg = LieAlgebraData::builtin_or_path(&self.lie).map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        let v = alg.validate();
        if !v.all_pass() {
            let bad: Vec<_> = v.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
            return Err(Error::Config(format!("algebra '{}' fails validation: {}", self.lie, bad.join(", "))));
        }
        Ok(Arc::new(alg))
    }
}

fn parse_scalar(what: &str, s: &str) -> Result<Scalar> {
    Scalar::parse(s).map_err(|e| Error::Config(format!("--{what} '{s}': {e}")))
}

fn threads() -> Result<Option<usize>> {
    match std::env::var("BVKIT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("BVKIT_THREADS must be a positive integer, got '{v}'"))),
        },
    }
}

fn write_json(path: &PathBuf, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn run_report(command: String, config: serde_json::Value, tasks: Vec<Task>, out: Option<&PathBuf>) -> Result<Report> {
    let report = run_tasks(&command, config, tasks)?;
    if let Some(p) = out {
        write_json(p, &report)?;
    }
    Ok(report)
}

fn angular(n: usize, emit: Option<&PathBuf>, out: Option<&PathBuf>) -> Result<Report> {
    let r = check_angular(n)?;
    if let Some(p) = emit {
        let mut v = serde_json::to_value(&r)?;
        if let Some(o) = v.as_object_mut() {
            o.remove("wall_time");
        }
        write_json(p, &v)?;
    }
    let expected_dtheta = if n % 2 == 0 { "euler" } else { "closed" };
    let zero = |v: &[String]| v.iter().all(|x| x == "0");
    let ids = vec![
        Identity::new("angular/Phi_0", "Phi_0 = 0", r.phi0_zero, None),
        Identity::new("angular/closed-forms", "Phi_k and Psi_k match their closed forms", r.closed_forms_match, None),
        Identity::new("angular/dPsi", "dPsi = (-1)^(n+1) (n - 2 lambda d/dlambda + 1/lambda) Phi", r.dpsi.holds, r.dpsi.witness.clone()),
        Identity::new("angular/C/recursion", "(n - 2k) C_k + C_(k-1) = 0", zero(&r.recursion_residuals), Some(r.recursion_residuals.join(", ")).filter(|_| !zero(&r.recursion_residuals))),
        Identity::new("angular/C/normalization", "C_0 = (-1)^s / Omega_(n-1)", r.normalization_residual == "0", Some(r.normalization_residual.clone()).filter(|x| x != "0")),
        Identity::new("angular/C/closed=recursion", "closed-form C_k equal the recursion from C_0", r.closed_equals_recursion, None),
        Identity::new("angular/C/closed=derived", "closed-form C_k equal the Berezin-derived values", r.closed_equals_derived, None),
        Identity::new("angular/dtheta", "dtheta = 0 for odd n, -Pf F / (2 pi)^(n/2) for even n", r.dtheta_status == expected_dtheta, r.dtheta_witness.clone()),
        Identity::new("angular/pfaffian", "Berezin Pfaffian equals the matching sum", r.pfaffian_match, None),
        Identity::new("angular/antipodal", "antipodal parity (-1)^n", r.antipodal_parity, None),
        Identity::new("angular/theta-rewritten", "theta as a single sum over k", r.rewritten_theta_match, None),
    ];
    let task = Task::new("angular", move || Ok(ids));
    run_report(format!("angular --n {n}"), json!({ "n": n }), vec![task], out)
}

fn dispatch(cli: Cli) -> Result<Report> {
    match cli.command {
        Command::Check { suite, common, cases } => {
            let default_cases = if suite == Suite::Pushforward { 50 } else { 4 };
            let settings = Settings {
                m: common.m,
                lie: common.lie()?,
                seed: common.seed,
                max_freq: common.max_freq,
                q: common.q,
                kappa: common.kappa.as_deref().map(|k| parse_scalar("kappa", k)).transpose()?,
                lambda: common.lambda()?,
                cases: cases.unwrap_or(default_cases),
            };
            if settings.cases == 0 {
                return Err(Error::Range("--cases must be positive".into()));
            }
            let mut config = common.echo();
            config["cases"] = json!(settings.cases);
            let tasks = suites::tasks(suite, &settings)?;
            run_report(format!("check {}", suite.name()), config, tasks, common.out.as_ref())
        }
        Command::Angular { n, emit, out } => angular(n, emit.as_ref(), out.as_ref()),
        Command::Holonomy {
            loop_spec,
            conn,
            conn_params,
            mode,
            samples,
            common,
        } => {
            let lp = holonomy::load_loop(&loop_spec)?;
            if let Some(want) = mode {
                if want != lp.mode() {
                    return Err(Error::Config(format!("loop '{loop_spec}' is a {} loop", json!(lp.mode()))));
                }
            }
            let params: ConnParams = match &conn_params {
                Some(s) => serde_json::from_str(s).map_err(|e| Error::Config(format!("--conn-params: {e}")))?,
                None => ConnParams::default(),
            };
            let settings = HolonomySettings {
                conn,
                params: params.clone(),
                lie: common.lie()?,
                seed: common.seed,
                max_freq: common.max_freq,
                q: common.q,
                lambda: common.lambda()?,
                order: common.order,
                tol: common.tol,
                samples,
            };
            let mut config = common.echo();
            config["loop"] = json!(loop_spec);
            config["mode"] = json!(lp.mode());
            config["loop_dimension"] = json!(lp.m());
            config["conn"] = json!(format!("{conn:?}").to_lowercase());
            config["conn_params"] = serde_json::to_value(&params)?;
            config["samples"] = json!(samples);
            let tasks = holonomy::tasks(lp, &settings)?;
            run_report("holonomy".into(), config, tasks, common.out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let pool = threads().and_then(|t| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = t {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Config(e.to_string()))
    });
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(report) => {
            print_summary(&report);
            ExitCode::from(if report.pass() { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
