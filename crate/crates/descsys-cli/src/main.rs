//! Command-line front end: load descriptor systems from JSON, run the
//! classification battery, drive transforms and simulations, export
//! reports and trajectories.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Value, json};

use descsys::cayley::{self, CayleyDirection};
use descsys::classify;
use descsys::kyp::{self, PassivityKind};
use descsys::linalg::{C64, Mat};
use descsys::ph;
use descsys::sim::{self, SimOptions, SupplyRate};
use descsys::sysmodel::{self, DescriptorSystem};
use descsys::transfer::{self, RealnessKind};
use descsys::{Error, Tolerances};

const EXIT_ASSERT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "descsys", version, about = "Passivity analysis for linear discrete-time descriptor systems")]
struct Cli {
    #[command(flatten)]
    tols: TolArgs,
    /// Worker threads for grid evaluations.
    #[arg(long, default_value_t = 1, global = true)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct TolArgs {
    /// Relative singular-value cutoff for rank decisions.
    #[arg(long, default_value_t = 1e-10, global = true)]
    tol_rank: f64,
    /// Slack allowed on semidefinite LMI certificates.
    #[arg(long, default_value_t = 1e-8, global = true)]
    tol_lmi: f64,
    /// Margin demanded of strict (positive definite) certificates.
    #[arg(long, default_value_t = 1e-6, global = true)]
    tol_strict: f64,
    /// Condition ceiling for the algebraic-part solve.
    #[arg(long, default_value_t = 1e8, global = true)]
    cond_max: f64,
    /// Trace bound keeping LMI feasibility sets compact.
    #[arg(long, default_value_t = 1e4, global = true)]
    rho: f64,
}

impl TolArgs {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol_rank: self.tol_rank,
            tol_lmi: self.tol_lmi,
            tol_strict: self.tol_strict,
            cond_max: self.cond_max,
            rho: self.rho,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Full property classification with the implication audit.
    Classify {
        file: PathBuf,
        /// Write the JSON report here as well as printing the table.
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Print JSON to stdout instead of the table.
        #[arg(long)]
        json: bool,
        /// Exit 1 unless the named property holds (repeatable).
        #[arg(long = "assert", value_name = "PROPERTY")]
        assertions: Vec<String>,
    },
    /// Construct a port-Hamiltonian representation.
    ToPh {
        file: PathBuf,
        /// Output path for the transformed system.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// External Cayley transform between impedance and scattering forms.
    Cayley {
        file: PathBuf,
        #[arg(long, value_enum)]
        direction: DirectionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Internal Cayley (Tustin) discretization of a continuous system.
    Discretize {
        file: PathBuf,
        /// Discretization parameter, "re" or "re:im" (alpha = 2/h).
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a trajectory and optionally audit a dissipation ledger.
    Simulate {
        file: PathBuf,
        /// Input signal: "zero", "step:AMP", "sin:OMEGA,AMP", or a JSON
        /// file with an array of input vectors.
        #[arg(long, default_value = "zero")]
        input: String,
        /// Initial state, comma-separated entries ("re" or "re:im").
        #[arg(long)]
        x0: Option<String>,
        /// Number of steps when the input is generated.
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Storage weight for the audit: "zero", "identity", "kyp-imp",
        /// "kyp-scat", or a JSON file with a matrix.
        #[arg(long)]
        storage: Option<String>,
        /// Supply rate for the audit.
        #[arg(long, value_enum, default_value_t = SupplyArg::Scattering)]
        supply: SupplyArg,
        /// Project an inconsistent x0 onto the consistent set.
        #[arg(long)]
        project_x0: bool,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Evaluate the transfer function or run realness grid checks.
    Transfer {
        file: PathBuf,
        /// Evaluation points "re" or "re:im" (repeatable).
        #[arg(long = "point")]
        points: Vec<String>,
        /// Grid spec "r1,r2,...xANGLES" for realness checks.
        #[arg(long)]
        grid: Option<String>,
        /// Check positive/bounded realness on the grid.
        #[arg(long, value_enum)]
        realness: Option<RealnessArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    ImpToScat,
    ScatToImp,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum SupplyArg {
    Impedance,
    Scattering,
}

#[derive(Clone, Copy, ValueEnum)]
enum RealnessArg {
    Positive,
    Bounded,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = cli.tols.tolerances();
    match run(cli, &tol) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify_error(&e))
        }
    }
}

fn classify_error(e: &Error) -> u8 {
    match e {
        Error::Format(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::DimensionMismatch(_)
        | Error::InvalidMatrix(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn load_system(path: &Path) -> Result<DescriptorSystem, Error> {
    let (sys, warnings) = sysmodel::read_file(path)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(sys)
}

fn parse_complex(text: &str) -> Result<C64, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::Format(format!("cannot parse complex number {text:?}, expected re[:im]"));
    match parts.as_slice() {
        [re] => Ok(C64::new(re.trim().parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(C64::new(
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

fn parse_vector(text: &str, dim: usize) -> Result<Mat, Error> {
    let entries: Vec<C64> = text.split(',').map(parse_complex).collect::<Result<_, _>>()?;
    if entries.len() != dim {
        return Err(Error::Format(format!(
            "expected {dim} entries, got {} in {text:?}",
            entries.len()
        )));
    }
    Ok(Mat::col_from(&entries))
}

fn with_meta(sys: &DescriptorSystem, source_hash: &str) -> Value {
    let mut v = sysmodel::to_json_value(sys);
    if let Value::Object(map) = &mut v {
        map.insert(
            "meta".into(),
            json!({ "source_hash": source_hash, "tool_version": env!("CARGO_PKG_VERSION") }),
        );
    }
    v
}

fn write_system(path: &Path, sys: &DescriptorSystem, source_hash: &str) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(&with_meta(sys, source_hash))?;
    std::fs::write(path, text)?;
    Ok(())
}

fn matrix_json_value(m: &Mat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| {
                            let z = m.get(i, j);
                            if z.im == 0.0 { json!(z.re) } else { json!([z.re, z.im]) }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

fn run(cli: Cli, tol: &Tolerances) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Classify { file, json_out, json, assertions } => {
            let sys = load_system(&file)?;
            let report = classify::classify(&sys, tol, cli.jobs.max(1))?;
            let value = classify::report_json(&sys, &report);
            if json {
                println!("{}", serde_json::to_string_pretty(&value)?);
            } else {
                print!("{}", classify::report_table(&report));
            }
            if let Some(path) = json_out {
                std::fs::write(path, serde_json::to_string_pretty(&value)?)?;
            }
            let mut failed = Vec::new();
            for prop in &assertions {
                match value["verdicts"].get(prop) {
                    None => {
                        return Err(Error::Format(format!(
                            "unknown property {prop:?} in --assert"
                        )));
                    }
                    Some(Value::Bool(true)) => {}
                    Some(Value::String(s)) if s == "true" => {}
                    Some(_) => failed.push(prop.clone()),
                }
            }
            if !failed.is_empty() {
                eprintln!("assertion failed for: {}", failed.join(", "));
                return Ok(ExitCode::from(EXIT_ASSERT));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ToPh { file, out } => {
            let sys = load_system(&file)?;
            let hash = sysmodel::system_hash(&sys);
            let verdict = ph::is_ph(&sys, tol)?;
            match verdict.representation {
                Some(rep) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "is_ph": true,
                            "weighted_norm": rep.norm_value,
                            "X": matrix_json_value(&rep.x),
                            "source_hash": hash,
                            "tool_version": env!("CARGO_PKG_VERSION"),
                        }))?
                    );
                    if let Some(path) = out {
                        write_system(&path, &rep.transformed, &hash)?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "is_ph": false,
                            "note": verdict.certificate.infeasibility_note,
                            "source_hash": hash,
                        }))?
                    );
                    Ok(ExitCode::from(EXIT_ASSERT))
                }
            }
        }
        Command::Cayley { file, direction, out } => {
            let sys = load_system(&file)?;
            let hash = sysmodel::system_hash(&sys);
            let dir = match direction {
                DirectionArg::ImpToScat => CayleyDirection::ImpedanceToScattering,
                DirectionArg::ScatToImp => CayleyDirection::ScatteringToImpedance,
            };
            let result = match cayley::external_cayley(&sys, dir) {
                Ok(r) => r,
                Err(Error::SingularFeedthrough { sigma_min })
                    if matches!(dir, CayleyDirection::ScatteringToImpedance) =>
                {
                    // the restricted path needs a strict scattering KYP witness
                    let verdict = ph::is_ph(&sys, tol)?;
                    let rep = verdict
                        .representation
                        .as_ref()
                        .ok_or(Error::SingularFeedthrough { sigma_min })?;
                    let rss = descsys::pencil::reduce_system(&sys, tol.tol_rank, tol.cond_max)?;
                    let x = kyp::lift_storage(&rss, &rep.x);
                    let restricted = cayley::restrict_scattering(&sys, &x, tol.tol_rank)?;
                    eprintln!(
                        "note: I + D singular; restricted {} input channel(s) before transforming",
                        restricted.kernel_basis.as_ref().map_or(0, |k| k.ncols())
                    );
                    cayley::external_cayley(&restricted.transformed, dir)?
                }
                Err(e) => return Err(e),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "direction": match dir {
                        CayleyDirection::ImpedanceToScattering => "imp-to-scat",
                        CayleyDirection::ScatteringToImpedance => "scat-to-imp",
                    },
                    "restricted": result.restricted,
                    "feedthrough_condition": result.feedthrough_condition,
                    "source_hash": hash,
                }))?
            );
            if let Some(path) = out {
                write_system(&path, &result.transformed, &hash)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Discretize { file, alpha, out } => {
            let sys = load_system(&file)?;
            let hash = sysmodel::system_hash(&sys);
            let alpha = parse_complex(&alpha)?;
            let result = cayley::internal_cayley(&sys, alpha)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "alpha": [alpha.re, alpha.im],
                    "reduced_first": result.reduced_first,
                    "feedthrough": matrix_json_value(&result.source_transfer_at_alpha),
                    "source_hash": hash,
                }))?
            );
            if let Some(path) = out {
                write_system(&path, &result.discrete, &hash)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate { file, input, x0, steps, storage, supply, project_x0, out_csv } => {
            let sys = load_system(&file)?;
            let m = sys.input_dim();
            let n = sys.state_dim();
            let inputs = build_inputs(&input, m, steps)?;
            let x0 = match x0 {
                Some(text) => parse_vector(&text, n)?,
                None => Mat::zeros(n, 1),
            };
            let traj = sim::simulate(
                &sys,
                &inputs,
                &x0,
                SimOptions { project_inconsistent_x0: project_x0 },
            )?;
            let audit = match storage {
                Some(spec) => {
                    let x = build_storage(&spec, &sys, tol)?;
                    let sr = match supply {
                        SupplyArg::Impedance => SupplyRate::impedance(m),
                        SupplyArg::Scattering => SupplyRate::scattering(m),
                    };
                    Some(sim::audit_dissipation(&traj, &sr, &x, &sys.e)?)
                }
                None => None,
            };
            if let Some(a) = &audit {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&json!({
                        "verdict": match &a.verdict {
                            sim::AuditVerdict::DissipativeOnTrajectory =>
                                "dissipative-on-trajectory".to_string(),
                            sim::AuditVerdict::Violated { first_step } =>
                                format!("violated at step {first_step}"),
                        },
                        "max_violation": a.max_violation,
                        "conservative": a.conservative,
                        "strict": a.strict,
                    }))?
                );
            } else {
                println!(
                    "simulated {} steps, max residual {:.3e}",
                    traj.horizon(),
                    traj.max_residual
                );
            }
            if let Some(path) = out_csv {
                let mut csv = format!(
                    "# source_hash={} tool_version={}\n",
                    sysmodel::system_hash(&sys),
                    env!("CARGO_PKG_VERSION")
                );
                csv.push_str(&sim::trajectory_csv(&traj, audit.as_ref()));
                std::fs::write(path, csv)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Transfer { file, points, grid, realness } => {
            let sys = load_system(&file)?;
            for p in &points {
                let z = parse_complex(p)?;
                let t = transfer::evaluate(&sys, z)?;
                println!("T({z}) = {t}");
            }
            if let Some(kind) = realness {
                let grid_points = match &grid {
                    Some(spec) => parse_grid(spec)?,
                    None => transfer::default_grid(),
                };
                let kinds: Vec<RealnessKind> = match kind {
                    RealnessArg::Positive => vec![RealnessKind::Positive],
                    RealnessArg::Bounded => vec![RealnessKind::Bounded],
                    RealnessArg::Both => vec![RealnessKind::Positive, RealnessKind::Bounded],
                };
                for k in kinds {
                    let rep =
                        transfer::check_realness(&sys, k, &grid_points, tol, cli.jobs.max(1))?;
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&json!({
                            "kind": match k {
                                RealnessKind::Positive => "positive-real",
                                RealnessKind::Bounded => "bounded-real",
                            },
                            "holds_on_grid": rep.holds_on_grid,
                            "margin": rep.margin,
                            "worst_point": [rep.worst_point.re, rep.worst_point.im],
                            "pole_violation": rep.pole_violation.map(|z| vec![z.re, z.im]),
                            "caveat": rep.caveat,
                        }))?
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn build_inputs(spec: &str, m: usize, steps: usize) -> Result<Vec<Mat>, Error> {
    let length = steps + 1;
    if spec == "zero" {
        return Ok(vec![Mat::zeros(m, 1); length]);
    }
    if let Some(amp) = spec.strip_prefix("step:") {
        let a: f64 =
            amp.parse().map_err(|_| Error::Format(format!("bad step amplitude {amp:?}")))?;
        return Ok(vec![Mat::col_from_real(&vec![a; m]); length]);
    }
    if let Some(rest) = spec.strip_prefix("sin:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Format("sin input expects sin:OMEGA,AMP".into()));
        }
        let omega: f64 =
            parts[0].parse().map_err(|_| Error::Format("bad sin frequency".into()))?;
        let amp: f64 =
            parts[1].parse().map_err(|_| Error::Format("bad sin amplitude".into()))?;
        return Ok((0..length)
            .map(|k| Mat::col_from_real(&vec![amp * (omega * k as f64).sin(); m]))
            .collect());
    }
    // otherwise a JSON file with an array of input vectors
    let text = std::fs::read_to_string(spec)?;
    let value: Value = serde_json::from_str(&text)?;
    let rows = value
        .as_array()
        .ok_or_else(|| Error::Format("input file must hold an array of vectors".into()))?;
    let mut out = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .ok_or_else(|| Error::Format(format!("input[{k}] must be an array")))?;
        if cells.len() != m {
            return Err(Error::Format(format!(
                "input[{k}] must have {m} entries, got {}",
                cells.len()
            )));
        }
        let mut entries = Vec::with_capacity(m);
        for cell in cells {
            let z = match cell {
                Value::Number(x) => C64::new(x.as_f64().unwrap_or(f64::NAN), 0.0),
                Value::Array(pair) if pair.len() == 2 => C64::new(
                    pair[0].as_f64().unwrap_or(f64::NAN),
                    pair[1].as_f64().unwrap_or(f64::NAN),
                ),
                _ => return Err(Error::Format(format!("bad entry in input[{k}]"))),
            };
            entries.push(z);
        }
        out.push(Mat::col_from(&entries));
    }
    if out.is_empty() {
        return Err(Error::Format("input file holds no vectors".into()));
    }
    Ok(out)
}

fn parse_matrix_value(value: &Value) -> Result<Mat, Error> {
    let rows = value
        .as_array()
        .ok_or_else(|| Error::Format("storage file must hold a matrix".into()))?;
    let mut data = Vec::with_capacity(rows.len());
    for row in rows {
        let cells = row.as_array().ok_or_else(|| Error::Format("bad storage row".into()))?;
        let mut r = Vec::with_capacity(cells.len());
        for cell in cells {
            let z = match cell {
                Value::Number(x) => C64::new(x.as_f64().unwrap_or(f64::NAN), 0.0),
                Value::Array(p) if p.len() == 2 => C64::new(
                    p[0].as_f64().unwrap_or(f64::NAN),
                    p[1].as_f64().unwrap_or(f64::NAN),
                ),
                _ => return Err(Error::Format("bad storage entry".into())),
            };
            r.push(z);
        }
        data.push(r);
    }
    Mat::from_rows(&data)
}

fn build_storage(spec: &str, sys: &DescriptorSystem, tol: &Tolerances) -> Result<Mat, Error> {
    let n = sys.state_dim();
    match spec {
        "zero" => Ok(Mat::zeros(n, n)),
        "identity" => Ok(Mat::identity(n)),
        "kyp-imp" | "kyp-scat" => {
            let kind = if spec == "kyp-imp" {
                PassivityKind::Impedance
            } else {
                PassivityKind::Scattering
            };
            let rep = kyp::check_passivity(sys, kind, tol)?;
            rep.storage_full.ok_or_else(|| {
                Error::InvalidWeight(format!(
                    "no KYP storage available: {}",
                    rep.certificate
                        .infeasibility_note
                        .unwrap_or_else(|| "LMI infeasible".into())
                ))
            })
        }
        path => {
            let text = std::fs::read_to_string(path)?;
            let value: Value = serde_json::from_str(&text)?;
            parse_matrix_value(value.get("X").unwrap_or(&value))
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<C64>, Error> {
    let (radii_part, angles_part) = spec
        .split_once('x')
        .ok_or_else(|| Error::Format("grid spec must look like \"1.01,1.1,2,10x32\"".into()))?;
    let radii: Vec<f64> = radii_part
        .split(',')
        .map(|r| r.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|_| Error::Format("bad grid radius".into()))?;
    let angles: usize =
        angles_part.trim().parse().map_err(|_| Error::Format("bad grid angle count".into()))?;
    if radii.iter().any(|&r| r <= 1.0) {
        return Err(Error::Format("grid radii must be > 1".into()));
    }
    Ok(transfer::grid(&radii, angles))
}
