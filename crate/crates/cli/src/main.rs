//! `capflow`: set generation, energies, permutation harness, capacity
//! estimates and the comparability table.

use capflow_core::capacity::{
    comparability_experiment_with, gamma_plus_energy_with, gamma_plus_lp_with,
    riesz_capacity_wolff_with, write_csv, CapacityEstimate, ExperimentConfig, LPConfig,
    OptimizerConfig,
};
use capflow_core::io::{read_measure_file, write_json};
use capflow_core::kernels::KernelParams;
use capflow_core::measures::{sym_energy_partitioned, triple_perm_energy_partitioned, wolff_energy_partitioned};
use capflow_core::sets::{Limits, PointCloud, SetKind, SetSpec, Similarity};
use capflow_core::symmetrization::{run_harness, HarnessConfig, PermEnvelope};
use capflow_core::{DiscreteMeasure, Error, WolffParams};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_INPUT: u8 = 4;
const EXIT_SOLVER: u8 = 5;
const EXIT_PARTIAL: u8 = 6;

#[derive(Parser, Debug)]
#[command(name = "capflow", version, about = "Capacity and curvature-energy experiments on discrete sets")]
struct Cli {
    /// Root seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Fixed partition count for parallel sums
    #[arg(long, global = true, default_value_t = 16)]
    partitions: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a point cloud
    Gen(GenArgs),
    /// Monte-Carlo check of the permutation quantities
    PermCheck(PermArgs),
    /// Energies of a measure file
    Energy(EnergyArgs),
    /// One capacity estimate for a point-cloud file
    Capacity(CapacityArgs),
    /// LP, energy and Wolff estimates over sets, alphas and n
    Compare(CompareArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Cantor4,
    Segment,
    Circle,
    LipschitzGraph,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Cantor generation
    #[arg(long)]
    generation: Option<u64>,
    /// Cantor contraction ratio
    #[arg(long, default_value_t = 0.25)]
    ratio: f64,
    /// Sample count for curves
    #[arg(long)]
    n_samples: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Slope of the tent graph
    #[arg(long, default_value_t = 0.5)]
    slope: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Rotation in radians
    #[arg(long, default_value_t = 0.0)]
    rotate: f64,
    /// Translation as `x,y`
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    translate: Option<Vec<f64>>,
    #[arg(long, short, default_value = "cloud.json")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct PermArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Angle threshold for the curvature floor
    #[arg(long, default_value_t = 0.3)]
    theta0: f64,
    #[arg(long, short, default_value = "perm_check.json")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EnergyArgs {
    #[arg(long)]
    measure: PathBuf,
    /// Homogeneity of the symmetrized energy; omitted means no sym_energy
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, requires = "wolff_p")]
    wolff_s: Option<f64>,
    #[arg(long, requires = "wolff_s")]
    wolff_p: Option<f64>,
    /// Also report the triple permutation energy
    #[arg(long)]
    triple: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum MethodArg {
    Lp,
    Wolff,
    Energy,
}

#[derive(Args, Debug, Serialize)]
struct SolverArgs {
    /// LP grid spacing (default: smallest atom spacing)
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    delta_factor: f64,
    /// Optimizer step budget per start
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Args, Debug, Serialize)]
struct CapacityArgs {
    #[arg(long)]
    set: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Wolff `s`; defaults to 2(2 - alpha)/3
    #[arg(long)]
    wolff_s: Option<f64>,
    /// Wolff `p`; defaults to 3/2
    #[arg(long)]
    wolff_p: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, short, default_value = "capacity.json")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct CompareArgs {
    #[arg(long, num_args = 1.., required = true)]
    sets: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    ns: Vec<u32>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "compare.csv")]
    out_csv: PathBuf,
    #[arg(long, default_value = "compare.json")]
    out_json: PathBuf,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ResourceLimit { .. } => EXIT_RESOURCE,
            Error::Validation(_) | Error::Io(_) | Error::Json(_) => EXIT_INPUT,
            Error::NumericInconsistency(_) => EXIT_SOLVER,
            Error::DegenerateTriple
            | Error::DimensionMismatch { .. }
            | Error::AxisOutOfRange { .. }
            | Error::SingularPoint
            | Error::InvalidParameter(_) => EXIT_USAGE,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

fn input_error(path: &Path, e: Error) -> Failure {
    let mut f = Failure::from(e);
    if f.code == EXIT_USAGE {
        f.code = EXIT_INPUT;
    }
    f.msg = format!("{}: {}", path.display(), f.msg);
    f
}

type Outcome = std::result::Result<u8, Failure>;

struct Ctx {
    seed: u64,
    partitions: usize,
}

impl Ctx {
    fn run_meta<A: Serialize>(&self, command: &str, args: &A) -> Value {
        json!({
            "tool": "capflow",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "flags": args,
            "seed": self.seed,
            "partitions": self.partitions,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        seed: cli.seed,
        partitions: cli.partitions,
    };
    let result = if ctx.partitions == 0 {
        Err(usage("--partitions must be at least 1"))
    } else {
        match &cli.command {
            Command::Gen(a) => cmd_gen(&ctx, a),
            Command::PermCheck(a) => cmd_perm_check(&ctx, a),
            Command::Energy(a) => cmd_energy(&ctx, a),
            Command::Capacity(a) => cmd_capacity(&ctx, a),
            Command::Compare(a) => cmd_compare(&ctx, a),
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_gen(ctx: &Ctx, a: &GenArgs) -> Outcome {
    let transform = Similarity {
        scale: a.scale,
        rotation: a.rotate,
        translation: match a.translate.as_deref() {
            None => [0.0, 0.0],
            Some([x, y]) => [*x, *y],
            Some(_) => return Err(usage("--translate takes two values x,y")),
        },
    };
    let need_samples = || a.n_samples.ok_or_else(|| usage("--n-samples is required for curves"));
    let (kind, resolution) = match a.kind {
        Kind::Cantor4 => (
            SetKind::Cantor4 { ratio: a.ratio },
            a.generation.ok_or_else(|| usage("--generation is required for cantor4"))?,
        ),
        Kind::Segment => (SetKind::Segment { length: a.length }, need_samples()?),
        Kind::Circle => (SetKind::Circle { radius: a.radius }, need_samples()?),
        Kind::LipschitzGraph => (SetKind::LipschitzGraph { slope: a.slope }, need_samples()?),
    };
    let spec = SetSpec {
        kind,
        resolution,
        transform,
    };
    let cloud = spec.generate_with(&Limits::from_env())?;
    let mut file = cloud.to_file();
    file.run = Some(ctx.run_meta("gen", a));
    write_json(&a.out, &file)?;
    println!("{} {}", a.out.display(), cloud.len());
    Ok(0)
}

#[derive(Serialize)]
struct PermReportFile<'a> {
    run: Value,
    params: &'a KernelParams,
    theta0: f64,
    envelope: &'a PermEnvelope,
}

fn cmd_perm_check(ctx: &Ctx, a: &PermArgs) -> Outcome {
    if a.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let params = KernelParams::new(a.alpha, a.n, a.d)?;
    let env = run_harness(&HarnessConfig {
        params: params.clone(),
        samples: a.samples,
        seed: ctx.seed,
        offset: 0,
        theta0: a.theta0,
        partitions: ctx.partitions,
    })?;
    let report = PermReportFile {
        run: ctx.run_meta("perm-check", a),
        params: &params,
        theta0: a.theta0,
        envelope: &env,
    };
    write_json(&a.out, &report)?;
    println!("samples {}", env.samples);
    println!("sign_violations {}", env.sign_violations);
    println!("min_lower_ratio {}", capflow_core::io::fmt17(env.min_lower_ratio));
    println!("max_upper_ratio {}", capflow_core::io::fmt17(env.max_upper_ratio));
    Ok(0)
}

fn load_measure(path: &Path) -> std::result::Result<DiscreteMeasure, Failure> {
    let mu = read_measure_file(path)
        .and_then(|f| f.into_measure())
        .map_err(|e| input_error(path, e))?;
    if mu.is_empty() {
        return Err(input_error(path, Error::Validation("measure has no atoms".into())));
    }
    Ok(mu)
}

fn cmd_energy(ctx: &Ctx, a: &EnergyArgs) -> Outcome {
    let mu = load_measure(&a.measure)?;
    let wolff = match (a.wolff_s, a.wolff_p) {
        (Some(s), Some(p)) => Some(WolffParams::new(s, p)?),
        _ => None,
    };
    if a.alpha.is_none() && wolff.is_none() && !a.triple {
        return Err(usage("nothing to compute: give --alpha, --wolff-s/--wolff-p or --triple"));
    }
    let mut energies = serde_json::Map::new();
    if let Some(alpha) = a.alpha {
        let params = KernelParams::new(alpha, a.n, mu.dim())?;
        let e = sym_energy_partitioned(&mu, &params, ctx.partitions)?;
        energies.insert("sym_energy".into(), json!(e));
    }
    if let Some(wp) = wolff {
        let e = wolff_energy_partitioned(&mu, &wp, ctx.partitions)?;
        energies.insert("wolff_energy".into(), json!(e));
    }
    if a.triple {
        let e = triple_perm_energy_partitioned(&mu, a.n, ctx.partitions)?;
        energies.insert("triple_perm_energy".into(), json!(e));
    }
    for (k, v) in &energies {
        println!("{k} {}", capflow_core::io::fmt17(v.as_f64().unwrap_or(f64::NAN)));
    }
    if let Some(out) = &a.out {
        let report = json!({
            "run": ctx.run_meta("energy", a),
            "atoms": mu.len(),
            "energies": energies,
        });
        write_json(out, &report)?;
    }
    Ok(0)
}

fn load_cloud(path: &Path) -> std::result::Result<PointCloud, Failure> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "custom".into());
    let cloud = read_measure_file(path)
        .and_then(|f| PointCloud::from_file(f, &name))
        .map_err(|e| input_error(path, e))?;
    if cloud.is_empty() {
        return Err(input_error(path, Error::Validation("point cloud is empty".into())));
    }
    Ok(cloud)
}

impl SolverArgs {
    fn lp(&self) -> LPConfig {
        LPConfig {
            h: self.h,
            delta_factor: self.delta_factor,
            ..LPConfig::default()
        }
    }

    fn opt(&self, seed: u64) -> std::result::Result<OptimizerConfig, Failure> {
        if self.steps == 0 {
            return Err(usage("--steps must be at least 1"));
        }
        Ok(OptimizerConfig {
            steps: self.steps,
            seed,
            ..OptimizerConfig::default()
        })
    }
}

#[derive(Serialize)]
struct CapacityFile<'a> {
    run: Value,
    set: String,
    #[serde(flatten)]
    estimate: &'a CapacityEstimate,
}

fn cmd_capacity(ctx: &Ctx, a: &CapacityArgs) -> Outcome {
    let cloud = load_cloud(&a.set)?;
    let est = match a.method {
        MethodArg::Lp => {
            let params = KernelParams::new(a.alpha, a.n, cloud.d)?;
            gamma_plus_lp_with(&cloud, &params, &a.solver.lp(), &Limits::from_env())?
        }
        MethodArg::Wolff => {
            let base = WolffParams::for_alpha(a.alpha)?;
            let wp = WolffParams::new(a.wolff_s.unwrap_or(base.s), a.wolff_p.unwrap_or(base.p))?;
            if wp.gamma() <= 0.0 {
                return Err(usage(format!("Wolff capacity needs s*p < 2, got {}", wp.s * wp.p)));
            }
            riesz_capacity_wolff_with(&cloud, &wp, &a.solver.opt(ctx.seed)?)?
        }
        MethodArg::Energy => {
            let params = KernelParams::new(a.alpha, a.n, cloud.d)?;
            gamma_plus_energy_with(&cloud, &params, &a.solver.opt(ctx.seed)?)?
        }
    };
    let file = CapacityFile {
        run: ctx.run_meta("capacity", a),
        set: cloud.provenance.label(),
        estimate: &est,
    };
    write_json(&a.out, &file)?;
    println!(
        "{} {} {}",
        a.out.display(),
        capflow_core::io::fmt17(est.value),
        est.status().as_str()
    );
    Ok(if est.status().is_success() { 0 } else { EXIT_SOLVER })
}

fn cmd_compare(ctx: &Ctx, a: &CompareArgs) -> Outcome {
    let clouds = a
        .sets
        .iter()
        .map(|p| load_cloud(p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let cfg = ExperimentConfig {
        lp: a.solver.lp(),
        opt: a.solver.opt(ctx.seed)?,
    };
    let rows = comparability_experiment_with(&clouds, &a.alphas, &a.ns, &cfg)?;
    let mut csv = Vec::new();
    write_csv(&mut csv, &rows).map_err(Error::from)?;
    std::fs::write(&a.out_csv, csv).map_err(Error::from)?;
    write_json(
        &a.out_json,
        &json!({ "run": ctx.run_meta("compare", a), "rows": rows }),
    )?;
    let failed = rows.iter().filter(|r| !r.ok()).count();
    println!("{} rows, {} failed", rows.len(), failed);
    Ok(if failed == 0 { 0 } else { EXIT_PARTIAL })
}
