//! `pcc` command-line tool.
//!
//! Exit codes: 0 on success, 2 on invalid input, 1 on numerical failure.

mod model;
mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pcc_core::bicop::{BivariateCopula, Family};
use pcc_core::elliptical::{relative_spread, simplified_ratio_profile, MixingDistribution, RatioProfile};
use pcc_core::mo::{mo_conditional_copula, mo_sample, MoSpec};
use pcc_core::pcc::{
    extract_conditional_copula, pcc_density, pcc_sample, simplified_assumption_check, ExtractOptions,
};
use serde_json::{json, Value};

pub use model::Model;
use output::{fmt_f64, Sink};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pcc_core::Error),
    #[error("output failed: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 1,
            CliError::Output(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "pcc", version, about = "Pair copula constructions and conditional copula diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a seeded sample from a pcc, marshall_olkin or bicop model.
    Sample(SampleArgs),
    /// Evaluate the copula density at points.
    Density(DensityArgs),
    /// Extract the conditional copula of a trivariate model on a lattice.
    CondCopula(CondCopulaArgs),
    /// Compare conditional copulas across conditioning values.
    CheckSimplified(CheckArgs),
    /// Kendall's tau of a bivariate family.
    Tau(TauArgs),
    /// Moment-ratio profile of a normal scale mixture.
    MixtureCheck(MixtureArgs),
    /// Conditional copula grid of the trivariate Marshall-Olkin copula.
    MoGrid(MoGridArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Scale {
    U,
    X,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Profile {
    E4,
    F3,
}

#[derive(Args, Debug)]
struct Common {
    /// Write output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Marshall-Olkin only: copula scale `u` or exponential scale `x`.
    #[arg(long, value_enum, default_value = "u")]
    scale: Scale,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct DensityArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Comma-separated point; may be repeated.
    #[arg(long = "u", value_name = "U1,U2,...")]
    points: Vec<String>,
    /// CSV file of points, one per row, optional header.
    #[arg(long)]
    points_file: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct LatticeArgs {
    /// 1-based index of the conditioning coordinate.
    #[arg(long, default_value_t = 3)]
    cond_index: usize,
    /// Lattice size n; levels k/(n+1).
    #[arg(long, default_value_t = 21)]
    grid: usize,
}

#[derive(Args, Debug)]
struct CondCopulaArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    cond_value: f64,
    #[command(flatten)]
    lattice: LatticeArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Either a count k (values i/(k+1)) or a comma-separated list.
    #[arg(long, default_value = "9")]
    cond_grid: String,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Include every extracted grid in the JSON report.
    #[arg(long)]
    include_grids: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct TauArgs {
    #[arg(long)]
    family: String,
    /// Family parameters in order (e.g. rho,nu for the t copula).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    params: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long)]
    nu: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MixtureArgs {
    /// JSON mixing law, e.g. {"kind": "gamma", "shape": 1.5, "rate": 1.5}.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, value_enum, default_value = "e4")]
    profile: Profile,
    /// F3 weight (>= 1).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
    #[arg(long, default_value_t = 11)]
    t_points: usize,
    /// Relative spread below which the profile counts as constant.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MoGridArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    lambda: Option<f64>,
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    u3: f64,
    #[arg(long, default_value_t = 21)]
    grid: usize,
    #[command(flatten)]
    common: Common,
}

/// Runs the tool on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Sample(a) => sample(a),
        Command::Density(a) => density(a),
        Command::CondCopula(a) => cond_copula(a),
        Command::CheckSimplified(a) => check_simplified(a),
        Command::Tau(a) => tau(a),
        Command::MixtureCheck(a) => mixture_check(a),
        Command::MoGrid(a) => mo_grid(a),
    }
}

fn header(n: usize, prefix: &str) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

fn row(values: &[f64]) -> Vec<String> {
    values.iter().map(|&x| fmt_f64(x)).collect()
}

fn spec_value<T: serde::Serialize>(spec: &T) -> Value {
    serde_json::to_value(spec).unwrap_or(Value::Null)
}

fn sample(a: SampleArgs) -> Result<(), CliError> {
    let model = model::read_model(&a.spec)?;
    if a.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if a.scale == Scale::X && !matches!(model, Model::MarshallOlkin(_)) {
        return Err(CliError::Usage("--scale x applies only to marshall_olkin models".into()));
    }
    let rows: Vec<Vec<f64>> = match &model {
        Model::Pcc(spec) => pcc_sample(spec, a.n, a.seed)?,
        Model::MarshallOlkin(spec) => {
            let s = mo_sample(spec, a.n, a.seed)?;
            let m = if a.scale == Scale::X { s.x } else { s.u };
            m.into_iter().map(|r| r.to_vec()).collect()
        }
        Model::Bicop(c) => c.sample(a.n, a.seed).into_iter().map(|(u, v)| vec![u, v]).collect(),
        other => {
            return Err(CliError::Usage(format!(
                "sampling is available for pcc, marshall_olkin and bicop models, not '{}'",
                other.name()
            )))
        }
    };
    let dim = rows[0].len();
    let prefix = if a.scale == Scale::X { "x" } else { "u" };
    let sink = Sink::open(a.common.out.as_deref())?;
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let h = header(dim, prefix);
            let h: Vec<&str> = h.iter().map(String::as_str).collect();
            sink.csv(&h, rows.iter().map(|r| row(r)))
        }
        Format::Json => sink.json(&json!({
            "tool_version": TOOL_VERSION,
            "spec": spec_value(&model),
            "n": a.n,
            "seed": a.seed,
            "scale": prefix,
            "samples": rows,
        })),
    }
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{what}: cannot parse '{}' as a number", s.trim())))
        })
        .collect()
}

fn read_points(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(p) => points.push(p),
            Err(_) if i == 0 => continue,
            Err(_) => return Err(CliError::Usage(format!("{}: row {} is not numeric", path.display(), i + 1))),
        }
    }
    Ok(points)
}

fn density(a: DensityArgs) -> Result<(), CliError> {
    let model = model::read_model(&a.spec)?;
    let mut points = Vec::new();
    for p in &a.points {
        points.push(parse_list(p, "--u")?);
    }
    if let Some(path) = &a.points_file {
        points.extend(read_points(path)?);
    }
    if points.is_empty() {
        return Err(CliError::Usage("no points given; use --u or --points-file".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(CliError::Usage("all points must have the same dimension".into()));
    }
    let values = points
        .iter()
        .map(|u| -> Result<f64, CliError> {
            Ok(match &model {
                Model::Archimedean(g) => pcc_core::archimedean::archimedean_density(g, u)?,
                Model::Elliptical(e) => e.copula_density(u)?,
                Model::Pcc(p) => pcc_density(p, u)?,
                Model::Bicop(c) => {
                    if u.len() != 2 {
                        return Err(CliError::Usage("bicop points need two coordinates".into()));
                    }
                    c.pdf(u[0], u[1])?
                }
                Model::MarshallOlkin(_) => return Err(pcc_core::Error::NoDensity("marshall_olkin").into()),
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let sink = Sink::open(a.common.out.as_deref())?;
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut h = header(dim, "u");
            h.push("density".into());
            let h: Vec<&str> = h.iter().map(String::as_str).collect();
            sink.csv(
                &h,
                points.iter().zip(&values).map(|(p, &d)| {
                    let mut r = row(p);
                    r.push(fmt_f64(d));
                    r
                }),
            )
        }
        Format::Json => sink.json(&json!({
            "tool_version": TOOL_VERSION,
            "spec": spec_value(&model),
            "points": points,
            "density": values,
        })),
    }
}

fn cond_index(k: usize) -> Result<usize, CliError> {
    if !(1..=3).contains(&k) {
        return Err(CliError::Usage(format!("--cond-index must be 1, 2 or 3, got {k}")));
    }
    Ok(k - 1)
}

fn grid_rows<'a>(levels: &'a [f64], values: &'a [Vec<f64>]) -> impl Iterator<Item = Vec<String>> + 'a {
    levels.iter().enumerate().flat_map(move |(k, &v1)| {
        levels
            .iter()
            .enumerate()
            .map(move |(l, &v2)| vec![fmt_f64(v1), fmt_f64(v2), fmt_f64(values[k][l])])
    })
}

fn cond_copula(a: CondCopulaArgs) -> Result<(), CliError> {
    let model = model::read_model(&a.spec)?;
    let idx = cond_index(a.lattice.cond_index)?;
    if let Model::MarshallOlkin(spec) = &model {
        if idx != 2 {
            return Err(CliError::Usage("marshall_olkin conditions on coordinate 3".into()));
        }
        return write_mo_grid(spec, a.cond_value, a.lattice.grid, &a.common);
    }
    let tri = model.trivariate()?;
    let grid = extract_conditional_copula(&*tri, idx, a.cond_value, &ExtractOptions::with_n(a.lattice.grid))?;
    let sink = Sink::open(a.common.out.as_deref())?;
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => sink.csv(&["v1", "v2", "value"], grid_rows(&grid.levels, &grid.values)),
        Format::Json => sink.json(&json!({
            "tool_version": TOOL_VERSION,
            "spec": spec_value(&model),
            "cond_index": a.lattice.cond_index,
            "cond_value": a.cond_value,
            "n": grid.n,
            "levels": grid.levels,
            "values": grid.values,
            "kendall_tau": grid.kendall_tau,
        })),
    }
}

fn parse_cond_grid(text: &str) -> Result<Vec<f64>, CliError> {
    if let Ok(k) = text.trim().parse::<usize>() {
        if k < 2 {
            return Err(CliError::Usage("--cond-grid count must be at least 2".into()));
        }
        return Ok((1..=k).map(|i| i as f64 / (k + 1) as f64).collect());
    }
    parse_list(text, "--cond-grid")
}

fn check_simplified(a: CheckArgs) -> Result<(), CliError> {
    let model = model::read_model(&a.spec)?;
    let idx = cond_index(a.lattice.cond_index)?;
    let cond_grid = parse_cond_grid(&a.cond_grid)?;
    let tri = model.trivariate()?;
    let report = simplified_assumption_check(&*tri, idx, &cond_grid, &ExtractOptions::with_n(a.lattice.grid))?;
    let sink = Sink::open(a.common.out.as_deref())?;
    match a.common.format.unwrap_or(Format::Json) {
        Format::Csv => sink.csv(
            &["cond_value", "v1", "v2", "value"],
            report.grids.iter().flat_map(|g| {
                let c = fmt_f64(g.cond_value);
                grid_rows(&g.levels, &g.values).map(move |mut r| {
                    r.insert(0, c.clone());
                    r
                })
            }),
        ),
        Format::Json => {
            let mut out = json!({
                "tool_version": TOOL_VERSION,
                "spec": spec_value(&model),
                "cond_index": a.lattice.cond_index,
                "cond_grid": cond_grid,
                "grid": a.lattice.grid,
                "max_deviation": report.max_pairwise_sup_deviation,
                "kendall_tau": report.grids.iter().map(|g| g.kendall_tau).collect::<Vec<_>>(),
            });
            if a.include_grids {
                out["grids"] = spec_value(&report.grids);
            }
            sink.json(&out)
        }
    }
}

fn tau(a: TauArgs) -> Result<(), CliError> {
    let family: Family = serde_json::from_value(Value::String(a.family.clone()))
        .map_err(|_| CliError::Usage(format!("unknown family '{}'", a.family)))?;
    let named: Vec<f64> = match family {
        Family::Independence => vec![],
        Family::Clayton | Family::Gumbel | Family::Amh => a.theta.into_iter().collect(),
        Family::Frank | Family::CuadrasAuge => a.alpha.into_iter().collect(),
        Family::Gaussian => a.rho.into_iter().collect(),
        Family::StudentT => match (a.rho, a.nu) {
            (Some(r), Some(n)) => vec![r, n],
            (None, None) => vec![],
            _ => return Err(CliError::Usage("the t copula needs both --rho and --nu".into())),
        },
    };
    let params = match (named.is_empty(), a.params.is_empty()) {
        (false, true) => named,
        (true, _) => a.params.clone(),
        (false, false) => return Err(CliError::Usage("give either --params or named parameters, not both".into())),
    };
    let copula = BivariateCopula::new(family, &params)?;
    let t = copula.kendall_tau();
    let sink = Sink::open(a.common.out.as_deref())?;
    match a.common.format {
        None => sink.line(&fmt_f64(t)),
        Some(Format::Csv) => sink.csv(&["family", "kendall_tau"], [vec![family.name().to_string(), fmt_f64(t)]]),
        Some(Format::Json) => sink.json(&json!({
            "tool_version": TOOL_VERSION,
            "spec": spec_value(&copula),
            "kendall_tau": t,
        })),
    }
}

fn mixture_check(a: MixtureArgs) -> Result<(), CliError> {
    let mix: MixingDistribution = model::read_json(&a.spec)?;
    if a.t_points < 2 || !(a.t_max > 0.0 && a.t_max.is_finite()) {
        return Err(CliError::Usage("need --t-points >= 2 and a positive --t-max".into()));
    }
    let t: Vec<f64> = (0..a.t_points).map(|i| a.t_max * i as f64 / (a.t_points - 1) as f64).collect();
    let profile = match a.profile {
        Profile::E4 => RatioProfile::E4,
        Profile::F3 => RatioProfile::F3 { alpha: a.alpha },
    };
    let values = simplified_ratio_profile(&mix, a.dim, &t, profile)?;
    let spread = relative_spread(&values);
    let sink = Sink::open(a.common.out.as_deref())?;
    match a.common.format.unwrap_or(Format::Json) {
        Format::Csv => sink.csv(&["t", "value"], t.iter().zip(&values).map(|(&t, &v)| row(&[t, v]))),
        Format::Json => sink.json(&json!({
            "tool_version": TOOL_VERSION,
            "spec": spec_value(&mix),
            "dim": a.dim,
            "profile": spec_value(&profile),
            "t": t,
            "values": values,
            "relative_spread": spread,
            "constant": spread < a.tol,
        })),
    }
}

fn mo_grid(a: MoGridArgs) -> Result<(), CliError> {
    let spec = match (&a.spec, a.lambda) {
        (Some(path), _) => match model::read_model(path)? {
            Model::MarshallOlkin(s) => s,
            other => return Err(CliError::Usage(format!("mo-grid needs a marshall_olkin model, not '{}'", other.name()))),
        },
        (None, Some(l)) => MoSpec::new(l)?,
        (None, None) => return Err(CliError::Usage("give --lambda or --spec".into())),
    };
    write_mo_grid(&spec, a.u3, a.grid, &a.common)
}

fn write_mo_grid(spec: &MoSpec, u3: f64, n: usize, common: &Common) -> Result<(), CliError> {
    if n < 1 {
        return Err(CliError::Usage("--grid must be at least 1".into()));
    }
    let levels: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
    let mut cells = Vec::with_capacity(n * n);
    for &v1 in &levels {
        for &v2 in &levels {
            cells.push((v1, v2, mo_conditional_copula(spec, v1, v2, u3)?));
        }
    }
    let sink = Sink::open(common.out.as_deref())?;
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => sink.csv(
            &["v1", "v2", "value", "unique"],
            cells
                .iter()
                .map(|(v1, v2, c)| vec![fmt_f64(*v1), fmt_f64(*v2), fmt_f64(c.value), c.unique.to_string()]),
        ),
        Format::Json => sink.json(&json!({
            "tool_version": TOOL_VERSION,
            "spec": spec_value(&Model::MarshallOlkin(*spec)),
            "u3": u3,
            "levels": levels,
            "values": cells.chunks(n).map(|r| r.iter().map(|c| c.2.value).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "unique": cells.chunks(n).map(|r| r.iter().map(|c| c.2.unique).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })),
    }
}
