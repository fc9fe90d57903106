//! Command-line front end. [`run`] parses arguments, resolves configuration
//! (flags override the key-value file), and writes either CSV or an aligned
//! table. Every output starts with `#` lines echoing the resolved inputs.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    convert_fem, dynes_conductance, dynes_fit, generate_sweep, merge_records, read_dynes_csv, read_pairs,
    run_pipeline, AngularShift, ErrorRule, PipelineConfig, SweepTruth,
};
use crate::comparison::{mean_force, Geometry, Row, PLATE_PLATE, PLATE_PLATE_AVERAGE, SPHERE_PLATE};
use crate::error::{Error, Result};
use crate::lifshitz::{
    casimir_pressure, casimir_pressure_gradient, ideal_casimir_force, ideal_casimir_pressure, local_exponent, tc_jump,
    IdealGeometry, LifshitzSpec, QuadratureConfig, ZeroFreqApproach,
};
use crate::membrane::{
    dw2_from_gradient, frequency_noise, fundamental_frequency, gradient_from_dw2, lcpd_fit, load_sweep_csv,
    noise_to_signal_for, predicted_frequency_jump,
};
use crate::permittivity::DielectricModel;
use crate::physcore::{ConversionFactors, KvConfig, MembraneSpec, SuperconductorParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "CASIMIR_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "casimir", version, about = "Casimir pressures between superconducting plates and membrane data reduction")]
struct Cli {
    /// Key-value config file (`key = value`, `#` comments). Defaults to $CASIMIR_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lifshitz pressure, gradient and local exponent; or ideal-conductor values.
    Pressure(PressureArgs),
    /// Analytic pressure gradient dP/dd (Pa/m).
    Gradient(LifshitzArgs),
    /// Local power-law exponent of |P(d)|.
    Exponent(LifshitzArgs),
    /// Pressure-gradient change across Tc and the predicted frequency shift.
    Jump(JumpArgs),
    /// Differential small/big-gap pipeline on sweep CSV files.
    Sweep(SweepArgs),
    /// Synthetic sweep with a known step at Tc.
    GenerateSweep(GenerateArgs),
    /// Contact-potential parabola fit of `V_volt,f_Hz` data.
    LcpdFit(LcpdArgs),
    /// Dynes fit of `V_volt,G_arb` tunnelling data.
    DynesFit(DynesArgs),
    /// Ideal-conductor forces of earlier experiments.
    Tables,
    /// Frequency-noise floor, or the noise-to-signal ratio for a given floor.
    Noise(NoiseArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Drude,
    Plasma,
    Bcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ApproachArg {
    PlasmaBcs,
    PlasmaPlasma,
    DrudeBcs,
}

impl From<ApproachArg> for ZeroFreqApproach {
    fn from(a: ApproachArg) -> Self {
        match a {
            ApproachArg::PlasmaBcs => ZeroFreqApproach::PlasmaBcs,
            ApproachArg::PlasmaPlasma => ZeroFreqApproach::PlasmaPlasma,
            ApproachArg::DrudeBcs => ZeroFreqApproach::DrudeBcs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MembraneArg {
    Small,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Additive,
    Quadrature,
}

#[derive(Debug, Args)]
struct MaterialArgs {
    /// Plasma frequency, eV.
    #[arg(long = "omega")]
    omega_ev: Option<f64>,
    /// Relaxation frequency gamma0, eV.
    #[arg(long = "gamma0")]
    gamma0_ev: Option<f64>,
    #[arg(long)]
    rrr: Option<f64>,
    /// Critical temperature, K.
    #[arg(long = "tc")]
    tc_k: Option<f64>,
}

#[derive(Debug, Args)]
struct QuadArgs {
    /// Relative tolerance of each Matsubara term.
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_matsubara: Option<usize>,
}

#[derive(Debug, Args)]
struct LifshitzArgs {
    /// Separation, m.
    #[arg(long = "d", allow_hyphen_values = true)]
    d_m: Option<f64>,
    /// Temperature, K (default 0.99 Tc).
    #[arg(long = "T", allow_hyphen_values = true)]
    t_k: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModelArg::Bcs)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = ApproachArg::PlasmaBcs)]
    approach: ApproachArg,
    #[command(flatten)]
    material: MaterialArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Debug, Args)]
struct PressureArgs {
    #[command(flatten)]
    lifshitz: LifshitzArgs,
    /// Ideal-conductor force: plate-plate with --area or sphere-plate with --radius.
    #[arg(long, conflicts_with = "ideal_zero_t")]
    ideal: bool,
    /// Ideal-conductor zero-temperature pressure at --d.
    #[arg(long = "ideal-zero-T")]
    ideal_zero_t: bool,
    /// Plate area, m^2.
    #[arg(long, requires = "ideal", conflicts_with = "radius")]
    area: Option<f64>,
    /// Sphere radius, m.
    #[arg(long, requires = "ideal")]
    radius: Option<f64>,
}

#[derive(Debug, Args)]
struct MembraneArgs {
    /// Membrane preset that config keys and flags modify.
    #[arg(long, value_enum, default_value_t = MembraneArg::Small)]
    membrane: MembraneArg,
}

#[derive(Debug, Args)]
struct JumpArgs {
    /// Separation, m.
    #[arg(long = "d", allow_hyphen_values = true)]
    d_m: Option<f64>,
    /// Half-width of the step across Tc, K.
    #[arg(long = "dT", default_value_t = 0.1)]
    dt_k: f64,
    #[arg(long, value_enum, default_value_t = ApproachArg::PlasmaBcs, conflicts_with = "all")]
    approach: ApproachArg,
    /// All three approaches in Table order.
    #[arg(long)]
    all: bool,
    /// Resonance frequency for the shift, Hz (default: membrane fundamental with holes).
    #[arg(long)]
    f0: Option<f64>,
    #[command(flatten)]
    membrane: MembraneArgs,
    #[command(flatten)]
    material: MaterialArgs,
    #[command(flatten)]
    quad: QuadArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Small-gap sweep CSV; repeat to merge datasets.
    #[arg(long, required = true)]
    small: Vec<PathBuf>,
    /// Big-gap sweep CSV; repeat to merge datasets.
    #[arg(long, required = true)]
    big: Vec<PathBuf>,
    /// Lower edge of the baseline fit window, K.
    #[arg(long)]
    fit_lo: f64,
    /// Upper edge of the baseline fit window, K (must be below Tc).
    #[arg(long)]
    fit_hi: f64,
    /// Critical temperature, K.
    #[arg(long = "tc")]
    tc_k: Option<f64>,
    /// Averaging half-width on each side of Tc, K.
    #[arg(long, default_value_t = 0.2)]
    half_width: f64,
    #[arg(long, value_enum, default_value_t = RuleArg::Additive)]
    rule: RuleArg,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Critical temperature, K.
    #[arg(long = "tc")]
    tc_k: Option<f64>,
    /// Frequency at the Tc baseline, Hz (default: membrane fundamental with holes).
    #[arg(long)]
    f0: Option<f64>,
    /// Baseline slope d(omega^2)/dT, (rad/s)^2/K.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    slope: f64,
    /// Step in omega^2 above Tc, (rad/s)^2.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "jump_gradient")]
    jump_dw2: Option<f64>,
    /// Step expressed as a pressure-gradient jump, Pa/m.
    #[arg(long, allow_hyphen_values = true)]
    jump_gradient: Option<f64>,
    /// Gaussian frequency noise per point, Hz.
    #[arg(long, default_value_t = 0.0)]
    sigma_f: f64,
    #[arg(long)]
    t_start: f64,
    #[arg(long)]
    t_stop: f64,
    #[arg(long)]
    t_step: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    membrane: MembraneArgs,
}

#[derive(Debug, Args)]
struct LcpdArgs {
    /// CSV with header `V_volt,f_Hz`.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    membrane: MembraneArgs,
}

#[derive(Debug, Args)]
struct DynesArgs {
    /// CSV with header `V_volt,G_arb`.
    #[arg(long)]
    input: PathBuf,
    /// Measurement temperature, K.
    #[arg(long = "T")]
    t_k: f64,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    /// Resonance frequency, Hz.
    #[arg(long)]
    f0: f64,
    /// Quality factor.
    #[arg(long = "Q")]
    q: f64,
    /// Lock-in time constant, s.
    #[arg(long)]
    tau: f64,
    /// Noise-to-signal ratio; prints the frequency noise.
    #[arg(long, conflicts_with = "df", required_unless_present = "df")]
    ns: Option<f64>,
    /// Frequency noise, Hz; prints the noise-to-signal ratio.
    #[arg(long)]
    df: Option<f64>,
}

enum Cell {
    Num(f64),
    /// Shortest round-trip form; used where 9 digits would quantize the data.
    Exact(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Resolved inputs, a column header and rows, plus trailing summary lines.
struct Report {
    echo: Vec<(String, String)>,
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    summary: Vec<(String, f64)>,
}

impl Report {
    fn new(command: &str, header: Vec<&'static str>) -> Self {
        Self { echo: vec![("command".into(), command.into())], header, rows: vec![], summary: vec![] }
    }

    fn echo(&mut self, key: &str, value: impl ToString) {
        self.echo.push((key.into(), value.to_string()));
    }

    fn num(&mut self, key: &str, x: f64) {
        self.echo(key, format!("{x:?}"));
    }

    fn render(&self, format: Format) -> String {
        let num = |x: f64| match format {
            Format::Csv => format!("{x:.8e}"),
            Format::Table => format!("{x:.3e}"),
        };
        let mut out = String::new();
        for (k, v) in &self.echo {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| match c { Cell::Num(x) => num(*x), Cell::Exact(x) => format!("{x:e}"), Cell::Text(s) => s.clone() }).collect())
            .collect();
        match format {
            Format::Csv => {
                out.push_str(&self.header.join(","));
                out.push('\n');
                for r in &cells {
                    out.push_str(&r.join(","));
                    out.push('\n');
                }
            }
            Format::Table => {
                let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for r in &cells {
                    for (w, c) in widths.iter_mut().zip(r) {
                        *w = (*w).max(c.len());
                    }
                }
                let line = |r: &[String]| {
                    let s: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                    s.join("  ").trim_end().to_string() + "\n"
                };
                let h: Vec<String> = self.header.iter().map(|s| s.to_string()).collect();
                out.push_str(&line(&h));
                for r in &cells {
                    out.push_str(&line(r));
                }
            }
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("# {k} = {}\n", num(*v)));
        }
        out
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Convergence { .. } | Error::Quadrature { .. } | Error::FitFailure { .. } => EXIT_CONVERGENCE,
        Error::Domain(_) | Error::Config { .. } | Error::Input { .. } | Error::Io(_) => EXIT_INPUT,
    }
}

/// Runs the CLI with `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(&cli) {
        Ok(report) => match out.write_all(report.render(cli.format).as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_INPUT
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<(KvConfig, Option<PathBuf>)> {
    let path = cli.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    match &path {
        Some(p) => Ok((KvConfig::load(p)?, path)),
        None => Ok((KvConfig::default(), None)),
    }
}

fn material(cfg: &KvConfig, a: &MaterialArgs) -> Result<SuperconductorParams> {
    let mut p = SuperconductorParams::from_config(cfg, SuperconductorParams::default())?;
    if let Some(v) = a.omega_ev {
        p.omega_p = v;
    }
    if let Some(v) = a.gamma0_ev {
        p.gamma0 = v;
    }
    if let Some(v) = a.rrr {
        p.rrr = v;
    }
    if let Some(v) = a.tc_k {
        p.tc = v;
    }
    p.validate()?;
    Ok(p)
}

fn quad(a: &QuadArgs) -> QuadratureConfig {
    let mut q = QuadratureConfig::default();
    if let Some(v) = a.rel_tol {
        q.rel_tol = v;
    }
    if let Some(v) = a.max_matsubara {
        q.max_matsubara = v;
    }
    q
}

fn membrane(cfg: &KvConfig, a: &MembraneArgs) -> Result<MembraneSpec> {
    let base = match a.membrane {
        MembraneArg::Small => MembraneSpec::small_gap(),
        MembraneArg::Big => MembraneSpec::big_gap(),
    };
    MembraneSpec::from_config(cfg, base)
}

fn lifshitz_spec(cfg: &KvConfig, a: &LifshitzArgs, report: &mut Report) -> Result<LifshitzSpec> {
    let p = material(cfg, &a.material)?;
    let d = match a.d_m {
        Some(d) => d,
        None => cfg.get_or("d_m", 190e-9)?,
    };
    let t = a.t_k.unwrap_or(0.99 * p.tc);
    let model = match a.model {
        ModelArg::Drude => DielectricModel::Drude(p),
        ModelArg::Plasma => DielectricModel::Plasma(p),
        ModelArg::Bcs => DielectricModel::Bcs(p),
    };
    let spec = LifshitzSpec::new(d, t, model, a.approach.into()).with_quad(quad(&a.quad));
    echo_material(report, &p);
    report.num("d_m", d);
    report.num("T_K", t);
    report.echo("model", model.name());
    report.echo("approach", spec.approach.name());
    report.num("rel_tol", spec.quad.rel_tol);
    report.echo("max_matsubara", spec.quad.max_matsubara);
    Ok(spec)
}

fn echo_material(report: &mut Report, p: &SuperconductorParams) {
    report.num("Omega_eV", p.omega_p);
    report.num("gamma0_eV", p.gamma0);
    report.num("RRR", p.rrr);
    report.num("Tc_K", p.tc);
}

fn echo_membrane(report: &mut Report, m: &MembraneSpec) {
    for line in m.to_config().lines() {
        if let Some((k, v)) = line.split_once('=') {
            report.echo(k.trim(), v.trim());
        }
    }
}

fn execute(cli: &Cli) -> Result<Report> {
    let (cfg, cfg_path) = load_config(cli)?;
    let mut report = match &cli.command {
        Command::Pressure(a) => cmd_pressure(&cfg, a)?,
        Command::Gradient(a) => {
            let mut r = Report::new("gradient", vec!["d_m", "T_K", "dPdd_Pa_per_m"]);
            let s = lifshitz_spec(&cfg, a, &mut r)?;
            r.rows.push(vec![s.separation.into(), s.temperature.into(), casimir_pressure_gradient(&s)?.into()]);
            r
        }
        Command::Exponent(a) => {
            let mut r = Report::new("exponent", vec!["d_m", "T_K", "n"]);
            let s = lifshitz_spec(&cfg, a, &mut r)?;
            r.rows.push(vec![s.separation.into(), s.temperature.into(), local_exponent(&s)?.into()]);
            r
        }
        Command::Jump(a) => cmd_jump(&cfg, a)?,
        Command::Sweep(a) => cmd_sweep(&cfg, a)?,
        Command::GenerateSweep(a) => cmd_generate(&cfg, a)?,
        Command::LcpdFit(a) => cmd_lcpd(&cfg, a)?,
        Command::DynesFit(a) => cmd_dynes(a)?,
        Command::Tables => cmd_tables()?,
        Command::Noise(a) => cmd_noise(a)?,
    };
    if let Some(p) = cfg_path {
        report.echo.insert(1, ("config".into(), p.display().to_string()));
    }
    Ok(report)
}

fn cmd_pressure(cfg: &KvConfig, a: &PressureArgs) -> Result<Report> {
    if a.ideal {
        let d = match a.lifshitz.d_m {
            Some(d) => d,
            None => cfg.get_or("d_m", 190e-9)?,
        };
        let mut r;
        let (geometry, size) = match (a.area, a.radius) {
            (Some(area), None) => {
                r = Report::new("pressure --ideal", vec!["d_m", "area_m2", "F_N"]);
                (IdealGeometry::PlatePlate { area, separation: d }, area)
            }
            (None, Some(radius)) => {
                r = Report::new("pressure --ideal", vec!["d_m", "radius_m", "F_N"]);
                (IdealGeometry::SpherePlate { radius, separation: d }, radius)
            }
            _ => return Err(Error::Domain("--ideal needs exactly one of --area or --radius".into())),
        };
        r.num("d_m", d);
        r.rows.push(vec![d.into(), size.into(), ideal_casimir_force(geometry)?.into()]);
        return Ok(r);
    }
    if a.ideal_zero_t {
        let d = match a.lifshitz.d_m {
            Some(d) => d,
            None => cfg.get_or("d_m", 190e-9)?,
        };
        if !(d > 0.0) {
            return Err(Error::Domain(format!("separation must be positive, got {d}")));
        }
        let mut r = Report::new("pressure --ideal-zero-T", vec!["d_m", "P_Pa"]);
        r.num("d_m", d);
        r.rows.push(vec![d.into(), (-ideal_casimir_pressure(d)).into()]);
        return Ok(r);
    }
    let mut r = Report::new("pressure", vec!["d_m", "T_K", "P_Pa", "dPdd_Pa_per_m", "n"]);
    let s = lifshitz_spec(cfg, &a.lifshitz, &mut r)?;
    let p = casimir_pressure(&s)?;
    let g = casimir_pressure_gradient(&s)?;
    let n = local_exponent(&s)?;
    r.rows.push(vec![s.separation.into(), s.temperature.into(), p.into(), g.into(), n.into()]);
    Ok(r)
}

fn cmd_jump(cfg: &KvConfig, a: &JumpArgs) -> Result<Report> {
    let p = material(cfg, &a.material)?;
    let m = membrane(cfg, &a.membrane)?;
    let d = match a.d_m {
        Some(d) => d,
        None => m.gap,
    };
    let f0 = a.f0.unwrap_or_else(|| fundamental_frequency(&m, true));
    let q = quad(&a.quad);
    let mut r = Report::new("jump", vec!["approach", "dPdd_jump_Pa_per_m", "dw2_rad2_per_s2", "df_Hz"]);
    echo_material(&mut r, &p);
    r.num("separation_m", d);
    r.num("dT_K", a.dt_k);
    r.num("f0_Hz", f0);
    echo_membrane(&mut r, &m);
    let approaches: Vec<ZeroFreqApproach> = if a.all { ZeroFreqApproach::ALL.to_vec() } else { vec![a.approach.into()] };
    for ap in approaches {
        let jump = tc_jump(d, p.tc, a.dt_k, ap, &p, q)?;
        let df = predicted_frequency_jump(jump, &m, f0)?;
        r.rows.push(vec![ap.name().into(), jump.into(), dw2_from_gradient(jump, &m).into(), df.into()]);
    }
    Ok(r)
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<crate::membrane::SweepRecord>> {
    let sets = paths.iter().map(|p| load_sweep_csv(p)).collect::<Result<Vec<_>>>()?;
    let merged = merge_records(&sets);
    if merged.is_empty() {
        let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
        return Err(Error::Input { line: 1, message: format!("no sweep records in {}", names.join(", ")) });
    }
    Ok(merged)
}

fn conversion_factors(cfg: &KvConfig) -> Result<ConversionFactors> {
    const KEYS: [&str; 4] = ["force_per_unit_N", "pressure_per_unit_Pa", "deflection_per_unit_m", "basis"];
    if KEYS.iter().any(|k| cfg.contains(k)) {
        ConversionFactors::from_config(cfg)
    } else {
        Ok(ConversionFactors::small_gap_fem())
    }
}

fn cmd_sweep(cfg: &KvConfig, a: &SweepArgs) -> Result<Report> {
    let m = MembraneSpec::from_config(cfg, MembraneSpec::small_gap())?;
    let factors = conversion_factors(cfg)?;
    let tc = match a.tc_k {
        Some(t) => t,
        None => cfg.get_or("Tc_K", SuperconductorParams::default().tc)?,
    };
    let small = load_all(&a.small)?;
    let big = load_all(&a.big)?;
    let rule = match a.rule {
        RuleArg::Additive => ErrorRule::Additive,
        RuleArg::Quadrature => ErrorRule::Quadrature,
    };
    let pc = PipelineConfig { tc, fit_window: (a.fit_lo, a.fit_hi), jump_half_width: a.half_width, rule };
    let res = run_pipeline(&small, &big, &pc, &m)?;
    let mut r = Report::new(
        "sweep",
        vec!["T_K", "dw2_casimir_rad2_per_s2", "sigma_dw2_rad2_per_s2", "dPdd_Pa_per_m", "dF_N", "dP_Pa", "dz_m"],
    );
    for p in &a.small {
        r.echo("small", p.display());
    }
    for p in &a.big {
        r.echo("big", p.display());
    }
    r.echo("fit_window_K", format!("{} {}", a.fit_lo, a.fit_hi));
    r.num("Tc_K", tc);
    r.num("half_width_K", a.half_width);
    r.echo("rule", format!("{rule:?}").to_lowercase());
    r.echo("basis", format!("{:?}", factors.basis));
    r.num("force_per_unit_N", factors.force);
    r.num("pressure_per_unit_Pa", factors.pressure);
    r.num("deflection_per_unit_m", factors.deflection);
    echo_membrane(&mut r, &m);
    for p in &res.points {
        let c = convert_fem(AngularShift(p.dw2), &factors);
        r.rows.push(vec![
            p.temperature.into(),
            p.dw2.into(),
            p.sigma.into(),
            gradient_from_dw2(p.dw2, &m).into(),
            c.force.into(),
            c.pressure.into(),
            c.deflection.into(),
        ]);
    }
    let c = convert_fem(AngularShift(res.jump.dw2), &factors);
    r.summary = vec![
        ("jump_dw2_rad2_per_s2".into(), res.jump.dw2),
        ("jump_sigma_dw2_rad2_per_s2".into(), res.jump.sigma),
        ("jump_dPdd_Pa_per_m".into(), res.gradient_jump),
        ("jump_sigma_dPdd_Pa_per_m".into(), res.gradient_sigma),
        ("jump_dF_N".into(), c.force),
        ("jump_dP_Pa".into(), c.pressure),
        ("jump_dz_m".into(), c.deflection),
    ];
    Ok(r)
}

fn cmd_generate(cfg: &KvConfig, a: &GenerateArgs) -> Result<Report> {
    let m = membrane(cfg, &a.membrane)?;
    let tc = match a.tc_k {
        Some(t) => t,
        None => cfg.get_or("Tc_K", SuperconductorParams::default().tc)?,
    };
    if !(a.t_step > 0.0 && a.t_stop >= a.t_start) {
        return Err(Error::Domain("need t_step > 0 and t_stop >= t_start".into()));
    }
    let f0 = a.f0.unwrap_or_else(|| fundamental_frequency(&m, true));
    let jump = match (a.jump_dw2, a.jump_gradient) {
        (Some(j), _) => j,
        (None, Some(g)) => dw2_from_gradient(g, &m),
        (None, None) => 0.0,
    };
    let n = ((a.t_stop - a.t_start) / a.t_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|i| a.t_start + a.t_step * i as f64).collect();
    let w0 = (2.0 * std::f64::consts::PI * f0).powi(2);
    let truth = SweepTruth { slope: a.slope, intercept: w0 - a.slope * tc, jump, tc, sigma_f: a.sigma_f, grid };
    let recs = generate_sweep(&truth, a.seed)?;
    let mut r = Report::new("generate-sweep", vec!["T_K", "f_Hz", "sigma_f_Hz"]);
    r.num("Tc_K", tc);
    r.num("f0_Hz", f0);
    r.num("slope_rad2_per_s2_per_K", a.slope);
    r.num("jump_dw2_rad2_per_s2", jump);
    r.num("sigma_f_Hz", a.sigma_f);
    r.echo("seed", a.seed);
    for rec in recs {
        r.rows.push(vec![rec.temperature.into(), Cell::Exact(rec.frequency), rec.sigma_f.unwrap_or(0.0).into()]);
    }
    Ok(r)
}

fn read_file_pairs(path: &Path, header: [&str; 2]) -> Result<Vec<(f64, f64)>> {
    read_pairs(std::fs::File::open(path)?, header)
}

fn cmd_lcpd(cfg: &KvConfig, a: &LcpdArgs) -> Result<Report> {
    let m = membrane(cfg, &a.membrane)?;
    let pts = read_file_pairs(&a.input, ["V_volt", "f_Hz"])?;
    let fit = lcpd_fit(&pts, &m)?;
    let mut r = Report::new("lcpd-fit", vec!["V0_V", "sigma_V0_V", "f_apex_Hz", "sigma_Pa", "rho_kg_per_m3"]);
    r.echo("input", a.input.display());
    echo_membrane(&mut r, &m);
    r.rows.push(vec![fit.v0.into(), fit.v0_sigma.into(), fit.f_apex.into(), fit.stress.into(), fit.density.into()]);
    Ok(r)
}

fn cmd_dynes(a: &DynesArgs) -> Result<Report> {
    let pts = read_dynes_csv(std::fs::File::open(&a.input)?)?;
    let p = dynes_fit(&pts, a.t_k)?;
    let rms = (pts.iter().map(|(v, g)| dynes_conductance(*v, &p).map(|m| (m - g).powi(2))).sum::<Result<f64>>()?
        / pts.len() as f64)
        .sqrt();
    let mut r = Report::new("dynes-fit", vec!["Delta_eV", "gamma_eV", "A", "rms_residual"]);
    r.echo("input", a.input.display());
    r.num("T_K", a.t_k);
    r.rows.push(vec![p.delta.into(), p.gamma.into(), p.amplitude.into(), rms.into()]);
    Ok(r)
}

fn cmd_tables() -> Result<Report> {
    let mut r = Report::new(
        "tables",
        vec!["geometry", "reference", "year", "size_m", "d_min_m", "F_table_N", "F_ideal_N", "rel_dev", "flag"],
    );
    let push = |r: &mut Report, row: &Row| -> Result<()> {
        let f = row.ideal_force()?;
        let dev = (f - row.force_n) / row.force_n;
        let (kind, size) = match row.geometry {
            Geometry::Plate { area_m2 } => ("plate-plate", area_m2),
            Geometry::Sphere { radius_m } => ("sphere-plate", radius_m),
        };
        r.rows.push(vec![
            kind.into(),
            row.reference.into(),
            (row.year as f64).into(),
            size.into(),
            (row.separation_nm * 1e-9).into(),
            row.force_n.into(),
            f.into(),
            dev.into(),
            if dev.abs() > 5e-3 { "DEVIATES" } else { "ok" }.into(),
        ]);
        Ok(())
    };
    for row in PLATE_PLATE.iter().chain(SPHERE_PLATE.iter()) {
        push(&mut r, row)?;
    }
    let others = PLATE_PLATE.iter().filter(|row| row.reference != "this work");
    r.summary = vec![
        ("plate_plate_average_except_this_work_N".into(), mean_force(others)?),
        ("plate_plate_average_table_N".into(), PLATE_PLATE_AVERAGE),
        ("sphere_plate_average_N".into(), mean_force(SPHERE_PLATE.iter())?),
    ];
    Ok(r)
}

fn cmd_noise(a: &NoiseArgs) -> Result<Report> {
    let mut r;
    match (a.ns, a.df) {
        (Some(ns), _) => {
            r = Report::new("noise", vec!["f0_Hz", "Q", "tau_s", "noise_to_signal", "df_rms_Hz"]);
            r.rows.push(vec![a.f0.into(), a.q.into(), a.tau.into(), ns.into(), frequency_noise(a.f0, a.q, ns, a.tau)?.into()]);
        }
        (None, Some(df)) => {
            r = Report::new("noise", vec!["f0_Hz", "Q", "tau_s", "df_rms_Hz", "noise_to_signal"]);
            r.rows.push(vec![a.f0.into(), a.q.into(), a.tau.into(), df.into(), noise_to_signal_for(df, a.f0, a.q, a.tau)?.into()]);
        }
        (None, None) => return Err(Error::Domain("give --ns or --df".into())),
    }
    Ok(r)
}
