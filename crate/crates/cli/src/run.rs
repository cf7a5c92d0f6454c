//! Subcommand runners. Each builds one table (or grid CSV) and writes it
//! through a single writer.

use std::fs;
use std::io::Write;

use fenergy::born_infeld::{dualize, graph_energy_bound_check, solve_radial};
use fenergy::chern::{cmc_flux, doubling_diagnostic, punctured_flux, spacelike_flux};
use fenergy::energy::{growth_classify, monotonicity_experiment, stokes_identity_check, ConservationCertificate};
use fenergy::fields::Axis;
use fenergy::report::{Cell, Table};
use fenergy::variation::{first_variation_check, random_field, random_variation, ym_first_variation_check};
use fenergy::{CurvatureRegime, Error, FProfile, FluxReport, GridField, GridSpec, RadialField, RadialManifold, Sign};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error as ThisError;

use crate::*;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_numerical_domain() => 3,
            CliError::Core(
                Error::InvalidParameter(_)
                | Error::Parse(_)
                | Error::ShapeMismatch(_)
                | Error::DegreeZero
                | Error::DegreeOutOfRange(_)
                | Error::SpanTooShort
                | Error::RegimeMismatch { .. }
                | Error::NotSimplyConnectedSupport
                | Error::SupportViolation,
            ) => 2,
            CliError::Core(_) => 1,
        }
    }
}

pub enum Status {
    Ok,
    CheckFailed(String),
}

type Res = Result<Status, CliError>;

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// The command line minus the program name and any `--out` target, used
/// in the leading comment of every CSV.
pub fn describe(args: &[String]) -> String {
    let mut out = Vec::new();
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a.as_str());
        }
    }
    out.join(" ")
}

struct Sink<'a> {
    cli: &'a Cli,
    params: &'a str,
}

impl Sink<'_> {
    fn comment(&self) -> String {
        format!("fenergy {} seed={} {}", env!("CARGO_PKG_VERSION"), self.cli.seed, self.params)
    }

    fn table(&self, header: &[&str]) -> Table {
        Table::new(self.comment(), header)
    }

    fn write_to(path: Option<&str>, text: &str) -> Result<(), CliError> {
        match path {
            Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{p}: {e}"))),
            None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
        }
    }

    fn emit(&self, t: &Table) -> Result<(), CliError> {
        Self::write_to(self.cli.out.as_deref(), &t.to_csv())
    }

    fn emit_grid(&self, path: &str, g: &GridField) -> Result<(), CliError> {
        Self::write_to(Some(path), &format!("# {}\n{}", self.comment(), g.to_csv()))
    }
}

fn profile(name: &str, p: Option<f64>) -> Result<FProfile, CliError> {
    FProfile::by_name(name, p).map_err(|e| cfg(e.to_string()))
}

fn regime(tag: RegimeTag, a: &RegimeArgs) -> Result<CurvatureRegime, CliError> {
    let r = match tag {
        RegimeTag::Flat => Ok(CurvatureRegime::flat()),
        RegimeTag::PinchedNeg => CurvatureRegime::pinched_neg(a.alpha, a.beta),
        RegimeTag::EpsDecay => CurvatureRegime::eps_decay(a.a, a.b, a.eps),
        RegimeTag::PolyNeg => CurvatureRegime::poly_neg(a.a, a.b, a.q),
    };
    r.map_err(|e| cfg(e.to_string()))
}

fn sign(s: SignArg) -> Sign {
    match s {
        SignArg::Plus => Sign::Plus,
        SignArg::Minus => Sign::Minus,
    }
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

fn read_grid(path: &str) -> Result<GridField, CliError> {
    GridField::from_csv(&read(path)?).map_err(|e| cfg(format!("{path}: {e}")))
}

fn parse_f64(s: &str) -> Result<f64, CliError> {
    s.trim().parse::<f64>().map_err(|_| cfg(format!("not a number: '{s}'")))
}

fn parse_range(s: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = s.split_once(':').ok_or_else(|| cfg(format!("expected a:b, got '{s}'")))?;
    Ok((parse_f64(a)?, parse_f64(b)?))
}

/// `r1,r2,...` or `a:b:n` (n log-spaced radii).
pub fn parse_radii(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, b) = (parse_f64(parts[0])?, parse_f64(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|_| cfg(format!("bad count in '{s}'")))?;
        if !(a > 0.0 && b > a && n >= 2) {
            return Err(cfg(format!("need 0 < a < b and n >= 2 in '{s}'")));
        }
        return Ok(log_space(a, b, n));
    }
    s.split(',').map(parse_f64).collect()
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

pub fn run(cli: &Cli, params: &str) -> Res {
    let sink = Sink { cli, params };
    match &cli.cmd {
        Cmd::Profile(a) => run_profile(&sink, a),
        Cmd::Exponents(a) => run_exponents(&sink, a),
        Cmd::Monotone(a) => run_monotone(&sink, a),
        Cmd::StokesCheck(a) => run_stokes(&sink, a),
        Cmd::Varcheck(a) => run_varcheck(&sink, a),
        Cmd::Bi(BiCmd::Solve(a)) => run_solve(&sink, a),
        Cmd::Bi(BiCmd::Dualize(a)) => run_dualize(&sink, a),
        Cmd::Bi(BiCmd::Bound(a)) => run_bound(&sink, a),
        Cmd::Chern(ChernCmd::Flux(a)) => {
            let (g, radii, center) = flux_input(&a.src)?;
            flux_table(&sink, cmc_flux(&g, &[0, 1], &center, &radii)?)
        }
        Cmd::Chern(ChernCmd::Punctured(a)) => {
            let (g, radii, center) = flux_input(&a.src)?;
            flux_table(&sink, punctured_flux(&g, &[0, 1], &center, a.r0, &radii, a.c1)?)
        }
        Cmd::Chern(ChernCmd::Spacelike(a)) => {
            let (g, radii, center) = flux_input(&a.src)?;
            flux_table(&sink, spacelike_flux(&g, &[0, 1], &center, &radii)?)
        }
        Cmd::Chern(ChernCmd::Doubling(a)) => run_doubling(&sink, a),
        Cmd::Growth(a) => run_growth(&sink, a),
    }
}

fn run_profile(sink: &Sink, a: &ProfileArgs) -> Res {
    let f = profile(&a.name, a.p)?;
    if a.samples < 2 {
        return Err(cfg("--samples must be at least 2"));
    }
    let (sup, inf) = f.numeric_degree_bounds(a.samples);
    let mut t = sink.table(&["name", "d_F", "l_F", "sup_est", "inf_est"]);
    t.push(vec![f.name().into(), f.f_degree().value.into(), f.f_lower_degree().value.into(), sup.into(), inf.into()]);
    sink.emit(&t)?;
    Ok(Status::Ok)
}

fn run_exponents(sink: &Sink, a: &ExponentArgs) -> Res {
    let reg = regime(a.case, &a.regime)?;
    let e = reg.exponent_data(a.m, a.p, a.d_f)?;
    let kind = match e.kind {
        fenergy::ExponentKind::Lambda => "lambda",
        fenergy::ExponentKind::Delta => "delta",
    };
    let mut t = sink.table(&["case", "kind", "value", "admissible"]);
    t.push(vec![reg.tag().into(), kind.into(), e.value.into(), e.admissible.into()]);
    sink.emit(&t)?;
    Ok(Status::Ok)
}

fn manifold(tag: ManifoldTag, m: usize, kappa: f64) -> Result<RadialManifold, CliError> {
    Ok(match tag {
        ManifoldTag::Euclidean => RadialManifold::euclidean(m)?,
        ManifoldTag::Hyperbolic => RadialManifold::hyperbolic(m, kappa)?,
    })
}

fn run_monotone(sink: &Sink, a: &MonotoneArgs) -> Res {
    let reg = regime(a.regime, &a.params)?;
    let tag = a.manifold.unwrap_or(match a.regime {
        RegimeTag::Flat | RegimeTag::EpsDecay => ManifoldTag::Euclidean,
        _ => ManifoldTag::Hyperbolic,
    });
    let man = manifold(tag, a.m, a.kappa.unwrap_or(a.params.beta))?;
    let fld = match a.field {
        FieldPreset::TangentialUnit => RadialField::tangential_unit(man)?,
        FieldPreset::ParallelIdentity => RadialField::parallel_identity(man)?,
        FieldPreset::Sech => RadialField::tangential(man, "sech", |r: f64| 1.0 / r.cosh())?,
        FieldPreset::RadialUnit => RadialField::radial(man, "unit", |_| 1.0)?,
        FieldPreset::Zero => RadialField::zero(man, a.p, 1)?,
    };
    if !(a.rho_min > 0.0 && a.rho_max > a.rho_min && a.n >= 2) {
        return Err(cfg("need 0 < rho-min < rho-max and n >= 2"));
    }
    let radii = log_space(a.rho_min, a.rho_max, a.n);
    let prof = profile(&a.profile, a.profile_p)?;
    let rep = monotonicity_experiment(&fld, &prof, &reg, &radii, a.p, &ConservationCertificate::Asserted)?;
    let mut t = sink.table(&["rho", "E", "ratio", "dE_drho", "lower_bound_lambda_over_rho"]);
    for i in 0..rep.radii.len() {
        let r = rep.radii[i];
        t.push(vec![
            r.into(),
            rep.energies[i].into(),
            rep.ratios[i].into(),
            rep.de_drho[i].into(),
            (rep.exponent * rep.energies[i] / r).into(),
        ]);
    }
    sink.emit(&t)?;
    if !rep.monotone {
        return Ok(Status::CheckFailed(format!("ratio decreased by {:e}", rep.worst_violation)));
    }
    if !rep.differential_ok {
        return Ok(Status::CheckFailed("rho E' < exponent E at some radius".into()));
    }
    Ok(Status::Ok)
}

fn run_stokes(sink: &Sink, a: &StokesArgs) -> Res {
    if !(a.h > 0.0 && a.h <= 0.25) {
        return Err(cfg("--h must lie in (0, 0.25]"));
    }
    if !(2..=3).contains(&a.m) {
        return Err(cfg("--m must be 2 or 3"));
    }
    let pad = 8usize;
    let cells = (1.0 / a.h).round() as usize;
    let margin = pad as f64 * a.h;
    let spec = GridSpec::cube_with_spacing(a.m, -margin, 1.0 + margin, a.h)?;
    let w = match (a.field, a.m) {
        (StokesField::Gradient, 2) => {
            GridField::scalar(spec, |x| (1.3 * x[0]).sin() * x[1].exp() + x[0] * x[1] * x[1]).exterior_d()?
        }
        (StokesField::Gradient, _) => {
            GridField::scalar(spec, |x| 0.7 * x[0] * x[1] + (x[2] - 0.5 * x[0]).sin() + 0.3 * x[1] * x[1])
                .exterior_d()?
        }
        (StokesField::Oneform, 2) => GridField::from_fn(spec, 1, 1, |x| {
            vec![0.6 * (2.0 * x[1]).cos() + 0.2 * x[0], 0.5 * (x[0] - x[1]).sin() + 0.3]
        })?,
        (StokesField::Oneform, _) => return Err(cfg("the oneform preset is two-dimensional")),
    };
    let prof = profile(&a.profile, a.profile_p)?;
    let rep = stokes_identity_check(&w, &prof, &vec![pad; a.m], &vec![pad + cells; a.m])?;
    let mut t = sink.table(&["lhs", "rhs", "rel_err"]);
    t.push(vec![rep.lhs.into(), rep.rhs.into(), rep.rel_err.into()]);
    sink.emit(&t)?;
    if rep.rel_err > a.tol {
        return Ok(Status::CheckFailed(format!("relative error {:e} above {:e}", rep.rel_err, a.tol)));
    }
    Ok(Status::Ok)
}

fn run_varcheck(sink: &Sink, a: &VarArgs) -> Res {
    if a.grid < 16 || !(a.h > 0.0) {
        return Err(cfg("need --grid >= 16 and --h > 0"));
    }
    let spec = GridSpec::cube(a.m, 0.0, (a.grid - 1) as f64 * a.h, a.grid)?;
    let prof = profile(&a.profile, a.profile_p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(sink.cli.seed);
    let rep = match a.which {
        Which::Efg => {
            let sigma = random_field(&spec, a.degree, a.k, &mut rng)?;
            let eta = random_variation(&spec, a.degree, a.k, &mut rng)?;
            first_variation_check(&sigma, &eta, &prof)?
        }
        Which::Ym => {
            let conn = random_field(&spec, 1, a.k, &mut rng)?;
            let var = random_variation(&spec, 1, a.k, &mut rng)?;
            ym_first_variation_check(&conn, &var, &prof)?
        }
    };
    let mut t = sink.table(&["lhs", "rhs", "abs_err", "rel_err"]);
    t.push(vec![rep.lhs.into(), rep.rhs.into(), rep.abs_err.into(), rep.rel_err.into()]);
    sink.emit(&t)?;
    if rep.rel_err > a.tol {
        return Ok(Status::CheckFailed(format!("relative error {:e} above {:e}", rep.rel_err, a.tol)));
    }
    Ok(Status::Ok)
}

fn run_solve(sink: &Sink, a: &SolveArgs) -> Res {
    let range = parse_range(&a.r)?;
    let sol = solve_radial(a.m, sign(a.sign), a.c, range, a.n)?;
    let res = sol.first_integral_residuals();
    let mut t = sink.table(&["r", "slope", "u", "first_integral_residual"]);
    for i in 0..sol.r_grid.len() {
        t.push(vec![sol.r_grid[i].into(), sol.slope[i].into(), sol.u[i].into(), res[i].into()]);
    }
    if let Some(path) = &a.grid_out {
        let axes = a
            .bbox
            .split(',')
            .map(|ax| {
                let (lo, hi) = parse_range(ax)?;
                if !(hi > lo) || !(a.grid_h > 0.0) {
                    return Err(cfg(format!("bad box axis '{ax}'")));
                }
                let n = ((hi - lo) / a.grid_h).round() as usize + 1;
                Ok(Axis { min: lo, max: hi, n })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let center = vec![0.0; axes.len()];
        sink.emit_grid(path, &sol.sample_on_grid(GridSpec::new(axes)?, &center)?)?;
    }
    sink.emit(&t)?;
    Ok(Status::Ok)
}

fn run_dualize(sink: &Sink, a: &DualizeArgs) -> Res {
    let omega = read_grid(&a.input)?;
    let pair = dualize(&omega, sign(a.sign))?;
    let r = pair.residuals()?;
    if let Some(p) = &a.sigma_out {
        sink.emit_grid(p, &pair.sigma)?;
    }
    let mut t = sink.table(&["norm_relation", "energy_inequality", "energy_identity", "roundtrip", "closedness"]);
    t.push(vec![
        r.norm_relation.into(),
        r.energy_inequality.into(),
        r.energy_identity.into(),
        r.roundtrip.into(),
        r.closedness.into(),
    ]);
    sink.emit(&t)?;
    Ok(Status::Ok)
}

fn run_bound(sink: &Sink, a: &BoundArgs) -> Res {
    let omega = read_grid(&a.input)?;
    let b = graph_energy_bound_check(&omega, a.rho, a.tol)?;
    let mut t = sink.table(&["rho", "energy", "bound", "el_residual", "ok"]);
    t.push(vec![a.rho.into(), b.energy.into(), b.bound.into(), b.el_residual.into(), b.ok.into()]);
    sink.emit(&t)?;
    if !b.ok {
        return Ok(Status::CheckFailed(format!("energy {} exceeds bound {}", b.energy, b.bound)));
    }
    Ok(Status::Ok)
}

fn flux_input(src: &FluxSource) -> Result<(GridField, Vec<f64>, Vec<f64>), CliError> {
    let radii = parse_radii(&src.radii)?;
    let center = match &src.center {
        Some(c) => c.split(',').map(parse_f64).collect::<Result<Vec<_>, _>>()?,
        None => vec![0.0, 0.0],
    };
    if let Some(p) = &src.input {
        return Ok((read_grid(p)?, radii, center));
    }
    if !(src.h > 0.0 && src.extent > 0.0) {
        return Err(cfg("need --h > 0 and --extent > 0"));
    }
    let spec = GridSpec::cube_with_spacing(2, -src.extent, src.extent, src.h)?;
    let reach = src.extent * std::f64::consts::SQRT_2 + 1.0;
    let n = ((reach / src.h) as usize * 4).max(2048);
    let g = match src.preset {
        FluxPreset::Catenoid => {
            let a = 1.05 * src.c.abs();
            solve_radial(2, Sign::Plus, src.c, (a, reach.max(2.0 * a)), n)?.sample_on_grid(spec, &[0.0, 0.0])?
        }
        FluxPreset::Spacelike => {
            solve_radial(2, Sign::Minus, src.c, (0.05, reach), n)?.sample_on_grid(spec, &[0.0, 0.0])?
        }
        FluxPreset::Cap => {
            let big = src.big_r;
            GridField::scalar(spec, move |x| {
                let q = big * big - x[0] * x[0] - x[1] * x[1];
                if q > 0.0 {
                    q.sqrt()
                } else {
                    f64::NAN
                }
            })
        }
    };
    Ok((g, radii, center))
}

fn flux_table(sink: &Sink, rep: FluxReport) -> Res {
    let mut t = sink.table(&["r", "c_est", "bound", "satisfied"]);
    for i in 0..rep.radii.len() {
        t.push(vec![rep.radii[i].into(), rep.c_est[i].into(), rep.bound[i].into(), rep.satisfied[i].into()]);
    }
    sink.emit(&t)?;
    eprintln!("extrapolated c = {:e}", rep.extrapolated_c);
    if let Some(false) = rep.growth_ok {
        eprintln!("gamma / r did not decay over the radii");
    }
    match rep.radii.iter().zip(&rep.satisfied).find(|(_, s)| !**s) {
        Some((r, _)) => Ok(Status::CheckFailed(format!("decay bound violated at r = {r}"))),
        None => Ok(Status::Ok),
    }
}

fn run_doubling(sink: &Sink, a: &DoublingArgs) -> Res {
    let man = manifold(a.manifold, a.m, a.kappa)?;
    let radii = parse_radii(&a.radii)?;
    let rep = doubling_diagnostic(&man, &radii)?;
    let mut t = sink.table(&["r", "ratio", "bounded"]);
    for (r, q) in rep.radii.iter().zip(&rep.ratios) {
        t.push(vec![(*r).into(), (*q).into(), rep.bounded.into()]);
    }
    sink.emit(&t)?;
    Ok(Status::Ok)
}

fn read_samples(path: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let text = read(path)?;
    let mut rows = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = rows.next().ok_or_else(|| cfg(format!("{path}: empty")))?;
    if header.split(',').map(str::trim).collect::<Vec<_>>() != ["r", "E"] {
        return Err(cfg(format!("{path}: expected header r,E")));
    }
    rows.map(|l| {
        let (r, e) = l.split_once(',').ok_or_else(|| cfg(format!("{path}: bad row '{l}'")))?;
        Ok((parse_f64(r)?, parse_f64(e)?))
    })
    .collect()
}

fn run_growth(sink: &Sink, a: &GrowthArgs) -> Res {
    let samples = match &a.input {
        Some(p) => read_samples(p)?,
        None => {
            if !(a.r_min > 1.0 && a.r_max > a.r_min && a.n >= 2) {
                return Err(cfg("need 1 < r-min < r-max and n >= 2"));
            }
            let q = a.energy_q;
            log_space(a.r_min, a.r_max, a.n).into_iter().map(|r| (r, r.ln().powf(q))).collect()
        }
    };
    let q = a.q;
    let v = match a.psi {
        PsiPreset::LogPow => growth_classify(&samples, |r: f64| r.ln().powf(q), a.lambda)?,
        PsiPreset::Power => growth_classify(&samples, |r: f64| r.powf(q), a.lambda)?,
    };
    let div = match v.psi_divergence {
        fenergy::energy::Divergence::Diverging => "diverging",
        fenergy::energy::Divergence::Converging => "converging",
    };
    let mut t = sink.table(&["psi_divergence", "psi_increment_ratio", "energy_over_psi_bounded", "little_o_lambda"]);
    t.push(vec![
        Cell::from(div),
        v.psi_increment_ratio.into(),
        v.energy_over_psi_bounded.into(),
        v.little_o_lambda.into(),
    ]);
    sink.emit(&t)?;
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_forms() {
        assert_eq!(parse_radii("1,2.5").unwrap(), vec![1.0, 2.5]);
        let r = parse_radii("1:100:3").unwrap();
        assert!((r[1] - 10.0).abs() < 1e-12 && r.len() == 3);
        assert!(parse_radii("1:x").is_err());
        assert!(parse_radii("2:1:3").is_err());
    }

    #[test]
    fn describe_drops_output_path() {
        let a: Vec<String> =
            ["fenergy", "profile", "--out", "x.csv", "--name", "id"].iter().map(|s| s.to_string()).collect();
        assert_eq!(describe(&a), "profile --name id");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(Error::SingularRadius { a: 1.0, r_sing: 1.0 }).exit_code(), 3);
        assert_eq!(CliError::Core(Error::Inadmissible { value: -1.0 }).exit_code(), 1);
    }
}
