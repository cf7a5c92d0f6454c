//! `fenergy` command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod config;
mod run;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "fenergy", version, about = "F-energy monotonicity, Born-Infeld and flux experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Degrees of an energy profile F.
    Profile(ProfileArgs),
    /// Vanishing exponent for a curvature regime.
    Exponents(ExponentArgs),
    /// Ball-energy monotonicity on a warped product.
    Monotone(MonotoneArgs),
    /// Divergence theorem for the stress tensor on a box.
    StokesCheck(StokesArgs),
    /// First-variation identity on a random field.
    Varcheck(VarArgs),
    /// Born-Infeld solves, duality and bounds.
    #[command(subcommand)]
    Bi(BiCmd),
    /// Flux estimates for the mean-curvature constant.
    #[command(subcommand)]
    Chern(ChernCmd),
    /// Growth classification against a weight psi.
    Growth(GrowthArgs),
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[arg(long)]
    pub name: String,
    /// Exponent for the p-power profile.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 1024)]
    pub samples: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum RegimeTag {
    Flat,
    PinchedNeg,
    EpsDecay,
    PolyNeg,
}

#[derive(Args, Debug, Clone)]
pub struct RegimeArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long = "A", default_value_t = 1.0)]
    pub a: f64,
    #[arg(long = "B", default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
}

#[derive(Args, Debug)]
pub struct ExponentArgs {
    #[arg(long = "case", value_enum)]
    pub case: RegimeTag,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long = "dF")]
    pub d_f: f64,
    #[command(flatten)]
    pub regime: RegimeArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum ManifoldTag {
    Euclidean,
    Hyperbolic,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum FieldPreset {
    /// Unit tangential 1-form (the frame picture of du, u = x^1).
    TangentialUnit,
    /// Identity map seen as an R^m-valued 1-form.
    ParallelIdentity,
    /// Tangential 1-form with amplitude sech(r).
    Sech,
    /// Unit radial 1-form dr.
    RadialUnit,
    Zero,
}

#[derive(Args, Debug)]
pub struct MonotoneArgs {
    #[arg(long, value_enum, default_value = "flat")]
    pub regime: RegimeTag,
    /// Defaults to euclidean for flat/eps-decay and hyperbolic otherwise.
    #[arg(long, value_enum)]
    pub manifold: Option<ManifoldTag>,
    /// Curvature scale of the hyperbolic manifold (defaults to beta).
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value = "identity")]
    pub profile: String,
    #[arg(long = "profile-p")]
    pub profile_p: Option<f64>,
    #[arg(long, value_enum, default_value = "tangential-unit")]
    pub field: FieldPreset,
    #[arg(long = "rho-min", default_value_t = 0.1)]
    pub rho_min: f64,
    #[arg(long = "rho-max", default_value_t = 10.0)]
    pub rho_max: f64,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[command(flatten)]
    pub params: RegimeArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum StokesField {
    /// Gradient of a smooth scalar.
    Gradient,
    /// Non-closed 1-form (two dimensions only).
    Oneform,
}

#[derive(Args, Debug)]
pub struct StokesArgs {
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value = "identity")]
    pub profile: String,
    #[arg(long = "profile-p")]
    pub profile_p: Option<f64>,
    #[arg(long, value_enum, default_value = "gradient")]
    pub field: StokesField,
    /// Grid spacing; the unit box is resolved with 1/h cells.
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub h: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum Which {
    Efg,
    Ym,
}

#[derive(Args, Debug)]
pub struct VarArgs {
    #[arg(long, value_enum, default_value = "efg")]
    pub which: Which,
    #[arg(long, default_value = "identity")]
    pub profile: String,
    #[arg(long = "profile-p")]
    pub profile_p: Option<f64>,
    /// Nodes per axis.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    #[arg(long, default_value_t = 1.0 / 32.0)]
    pub h: f64,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Form degree of sigma (efg only; ym uses connection 1-forms).
    #[arg(long, default_value_t = 0)]
    pub degree: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum SignArg {
    Plus,
    Minus,
}

#[derive(Subcommand, Debug)]
pub enum BiCmd {
    /// Radial graph solution of the Born-Infeld equation.
    Solve(SolveArgs),
    /// Dual pair of a planar solution on a rectangle.
    Dualize(DualizeArgs),
    /// Energy of a graph solution against its ball bound.
    Bound(BoundArgs),
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value = "plus")]
    pub sign: SignArg,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// Radial range as `a:b`.
    #[arg(long, allow_hyphen_values = true, default_value = "1.5:4")]
    pub r: String,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    /// Also write u sampled on a planar grid (m = 2) to this path.
    #[arg(long = "grid-out")]
    pub grid_out: Option<String>,
    /// Sampling box as `x0:x1,y0:y1`.
    #[arg(long = "box", allow_hyphen_values = true, default_value = "-3.5:3.5,-3.5:3.5")]
    pub bbox: String,
    #[arg(long = "grid-h", default_value_t = 1.0 / 64.0)]
    pub grid_h: f64,
}

#[derive(Args, Debug)]
pub struct DualizeArgs {
    /// Grid CSV of a scalar potential.
    #[arg(long = "in")]
    pub input: String,
    #[arg(long, value_enum, default_value = "plus")]
    pub sign: SignArg,
    /// Where to write the dual potential sigma as grid CSV.
    #[arg(long = "sigma-out")]
    pub sigma_out: Option<String>,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    #[arg(long = "in")]
    pub input: String,
    #[arg(long)]
    pub rho: f64,
    /// Tolerance on the Euler-Lagrange residual of the input.
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum FluxPreset {
    /// Plane catenoid-type graph u(r) with flux constant C.
    Catenoid,
    /// Upper spherical cap of radius R.
    Cap,
    /// Spacelike radial solution of the minus equation.
    Spacelike,
}

#[derive(Args, Debug, Clone)]
pub struct FluxSource {
    /// Grid CSV of the potential; overrides the preset.
    #[arg(long = "in")]
    pub input: Option<String>,
    #[arg(long, value_enum, default_value = "catenoid")]
    pub preset: FluxPreset,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long = "R", default_value_t = 4.0)]
    pub big_r: f64,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    pub h: f64,
    /// Half-width of the square preset grid.
    #[arg(long, default_value_t = 3.5)]
    pub extent: f64,
    /// Comma-separated radii or `a:b:n` for n log-spaced radii.
    #[arg(long, default_value = "1.5,2,2.5,3")]
    pub radii: String,
    /// Comma-separated center; defaults to the origin.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum ChernCmd {
    Flux(FluxArgs),
    Punctured(PuncturedArgs),
    Spacelike(FluxArgs),
    Doubling(DoublingArgs),
}

#[derive(Args, Debug)]
pub struct FluxArgs {
    #[command(flatten)]
    pub src: FluxSource,
}

#[derive(Args, Debug)]
pub struct PuncturedArgs {
    #[command(flatten)]
    pub src: FluxSource,
    #[arg(long, default_value_t = 1.25)]
    pub r0: f64,
    /// Cutoff-gradient constant in the bound.
    #[arg(long = "C1", default_value_t = 1.0)]
    pub c1: f64,
}

#[derive(Args, Debug)]
pub struct DoublingArgs {
    #[arg(long, value_enum, default_value = "euclidean")]
    pub manifold: ManifoldTag,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value = "0.1:20:40")]
    pub radii: String,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum PsiPreset {
    /// psi = (ln r)^q.
    LogPow,
    /// psi = r^q.
    Power,
}

#[derive(Args, Debug)]
pub struct GrowthArgs {
    #[arg(long, value_enum, default_value = "log-pow")]
    pub psi: PsiPreset,
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// CSV with columns r,E; otherwise E = (ln r)^energy-q is sampled.
    #[arg(long = "in")]
    pub input: Option<String>,
    #[arg(long = "energy-q", default_value_t = 1.0)]
    pub energy_q: f64,
    #[arg(long = "r-min", default_value_t = 10.0)]
    pub r_min: f64,
    #[arg(long = "r-max", default_value_t = 1e7)]
    pub r_max: f64,
    #[arg(long, default_value_t = 61)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().collect();
    let args = match config::expand(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("fenergy: config error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(t) = std::env::var("FENERGY_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("fenergy: FENERGY_THREADS must be a positive integer, got '{t}'");
                return ExitCode::from(2);
            }
        }
    }
    let params = run::describe(&args);
    match run::run(&cli, &params) {
        Ok(run::Status::Ok) => ExitCode::SUCCESS,
        Ok(run::Status::CheckFailed(msg)) => {
            eprintln!("fenergy: check failed: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("fenergy: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
