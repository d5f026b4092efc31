//! The `darksim` command line.
//!
//! ```text
//! darksim spectrum [--config PATH] [--json PATH]
//! darksim analytic <t-fid|t-echo|t-dark|infidelity> [--beta-sq X] [--t-us T]
//! darksim decay --scenario <fig3|fig4|custom> [--t1-us T1] [--t2-us T2|inf] [--out CSV] [--summary JSON]
//! darksim oracle [--trajectories N] [--seed S] [--out CSV]
//! darksim sweep --param <t1_fq_us|t2_fq_us|g_perp_rad_per_us> --values v1,v2,.. [--out CSV]
//! ```
//!
//! Exit codes: 0 success, 2 input error, 3 comparison failure, 4 I/O error,
//! 5 integration error (including violated state invariants).

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

pub use config::ConfigFile;

use crate::dynamics::{self, DecayCurve, Diagnostics, Method, SimScenario};
use crate::error::{input, Error, Result};
use crate::fitting::{self, FitResult};
use crate::noise;
use crate::operators::build_hamiltonian;
use crate::parallel;
use crate::scenarios;
use crate::spectrum::{self, SpectrumComparison};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_INTEGRATION: i32 = 5;

/// Agreement required between closed-form and numeric spectra.
pub const SPECTRUM_TOL: f64 = 1e-10;
/// Standard errors allowed between the master-equation and trajectory curves.
pub const ORACLE_SIGMAS: f64 = 3.0;
/// Absolute slack added to the oracle bound, covering integrator differences
/// where the sampled spread vanishes (e.g. at `t = 0`).
pub const ORACLE_FLOOR: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "darksim", version, about = "Dark-state decay of an NV center coupled to a flux qubit")]
struct Cli {
    /// JSON configuration; missing keys take the reference parameter set.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form and numeric energy levels.
    Spectrum {
        /// Also write the levels as JSON.
        #[arg(long, value_name = "PATH")]
        json: Option<PathBuf>,
    },
    /// Closed-form coherence times and infidelity.
    Analytic {
        quantity: Quantity,
        /// Dark-state weight |β|²; defaults to the configured initial state.
        #[arg(long)]
        beta_sq: Option<f64>,
        /// Evaluation time for `infidelity`, in us.
        #[arg(long)]
        t_us: Option<f64>,
    },
    /// Fidelity curve and fitted decay rate.
    Decay {
        /// `fig3`/`fig4` use the reference parameters; `custom` reads --config.
        #[arg(long, value_enum)]
        scenario: ScenarioName,
        #[arg(long, value_name = "US")]
        t1_us: Option<f64>,
        /// `inf` disables the channel.
        #[arg(long, value_name = "US|inf")]
        t2_us: Option<String>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Summary JSON path; printed to standard output when absent.
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
    },
    /// Master equation against the trajectory average.
    Oracle {
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Fitted decay time over a list of parameter values.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values; `inf` is accepted for t2_fq_us.
        #[arg(long)]
        values: String,
        #[arg(long, value_name = "US")]
        t1_us: Option<f64>,
        #[arg(long, value_name = "US|inf")]
        t2_us: Option<String>,
        /// CSV path; printed to standard output when absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Quantity {
    TFid,
    TEcho,
    TDark,
    Infidelity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ScenarioName {
    Fig3,
    Fig4,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum SweepParam {
    T1FqUs,
    T2FqUs,
    GPerpRadPerUs,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::T1FqUs => "t1_fq_us",
            SweepParam::T2FqUs => "t2_fq_us",
            SweepParam::GPerpRadPerUs => "g_perp_rad_per_us",
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("darksim: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Json(_) | Error::Fit(_) => EXIT_INPUT,
        Error::Integration { .. } => EXIT_INTEGRATION,
        Error::Io(_) => EXIT_IO,
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let config = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Spectrum { json } => cmd_spectrum(&config, json.as_deref()),
        Command::Analytic { quantity, beta_sq, t_us } => cmd_analytic(&config, quantity, beta_sq, t_us),
        Command::Decay {
            scenario,
            t1_us,
            t2_us,
            out,
            summary,
        } => {
            let t2 = t2_us.as_deref().map(parse_time).transpose()?;
            cmd_decay(&config, scenario, t1_us, t2, out.as_deref(), summary.as_deref())
        }
        Command::Oracle { trajectories, seed, out } => cmd_oracle(&config, trajectories, seed, out.as_deref()),
        Command::Sweep {
            param,
            values,
            t1_us,
            t2_us,
            out,
        } => {
            let t2 = t2_us.as_deref().map(parse_time).transpose()?;
            cmd_sweep(&config, param, &values, t1_us, t2, out.as_deref())
        }
    }
}

/// A time in us, or `None` for `inf`.
fn parse_time(s: &str) -> Result<Option<f64>> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") || s == "∞" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Some(v)),
        Ok(f) if f == f64::INFINITY => Ok(None),
        _ => input(format!("expected a positive time in us or `inf`, got `{s}`")),
    }
}

/// Shortest decimal that reads back to the same value.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display())))
    })
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn report_diagnostics(d: &Diagnostics) -> bool {
    let v = d.violations();
    for msg in &v {
        eprintln!("darksim: invariant violated: {msg}");
    }
    v.is_empty()
}

// ---------------------------------------------------------------- spectrum

const LEVEL_LABELS: [&str; 4] = ["|0↓>", "(|B↓> - |0↑>)/√2", "|D↓>", "(|B↓> + |0↑>)/√2"];

fn cmd_spectrum(config: &ConfigFile, json_path: Option<&Path>) -> Result<i32> {
    let system = config.system();
    system.validate()?;
    let h = build_hamiltonian(&system);
    let analytic = spectrum::analytic_levels_unchecked(&system);
    let full = spectrum::numeric_eigensystem(&h)?;
    let block = spectrum::numeric_block(&h)?;
    let cmp: SpectrumComparison = spectrum::compare_spectra(&analytic.to_eigensystem(), &block, 1e-8);
    let agree = cmp.within(SPECTRUM_TOL);

    let mut out = String::new();
    let _ = writeln!(out, "analytic levels (rad/us)");
    for (k, (e, label)) in analytic.energies.iter().zip(LEVEL_LABELS).enumerate() {
        let _ = writeln!(out, "  E{}  {:>+.10}  {label}", k + 1, e + 0.0);
    }
    for group in degenerate_groups(&analytic.energies) {
        let names: Vec<String> = group.iter().map(|k| format!("E{}", k + 1)).collect();
        let kind = match group.len() {
            2 => "pair",
            3 => "triple",
            _ => "quadruple",
        };
        let _ = writeln!(out, "  degenerate {kind}: {}", names.join(" = "));
    }
    let _ = writeln!(out, "numeric spectrum (rad/us)");
    for (k, e) in full.eigenvalues.iter().enumerate() {
        let _ = writeln!(out, "  {}  {:>+.10}", k + 1, e + 0.0);
    }
    let _ = writeln!(out, "max eigenvalue error   {:.3e}", cmp.max_eigenvalue_error);
    let _ = writeln!(out, "max projector error    {:.3e}", cmp.max_projector_error);
    let _ = writeln!(
        out,
        "{} within {SPECTRUM_TOL:e}",
        if agree { "agreement" } else { "MISMATCH: not" }
    );
    print!("{out}");

    if let Some(path) = json_path {
        let doc = json!({
            "system": config.system,
            "analytic_levels": analytic.energies,
            "numeric_block": block.eigenvalues,
            "numeric_spectrum": full.eigenvalues,
            "max_eigenvalue_error": cmp.max_eigenvalue_error,
            "max_projector_error": cmp.max_projector_error,
            "tolerance": SPECTRUM_TOL,
            "agree": agree,
        });
        write_file(path, &to_json(&doc)?)?;
    }
    Ok(if agree { EXIT_OK } else { EXIT_MISMATCH })
}

fn degenerate_groups(energies: &[f64; 4]) -> Vec<Vec<usize>> {
    let mut seen = [false; 4];
    let mut groups = Vec::new();
    for i in 0..4 {
        if seen[i] {
            continue;
        }
        let group: Vec<usize> = (i..4)
            .filter(|&j| (energies[j] - energies[i]).abs() <= SPECTRUM_TOL)
            .collect();
        for &j in &group {
            seen[j] = true;
        }
        if group.len() > 1 {
            groups.push(group);
        }
    }
    groups
}

// ---------------------------------------------------------------- analytic

fn cmd_analytic(config: &ConfigFile, quantity: Quantity, beta_sq: Option<f64>, t_us: Option<f64>) -> Result<i32> {
    let n = config.noise();
    let g = config.system.g_perp_rad_per_us;
    let beta_sq = beta_sq.unwrap_or_else(|| config.beta().norm_sqr());
    let mut inputs = json!({
        "b_rad_per_us": n.b,
        "tau_c_us": n.tau_c,
    });

    let doc = match quantity {
        Quantity::TFid => json!({
            "quantity": "t-fid",
            "value": noise::t_fid(&n)?,
            "units": "us",
            "inputs": inputs,
        }),
        Quantity::TEcho => json!({
            "quantity": "t-echo",
            "value": noise::t_echo(&n)?,
            "units": "us",
            "inputs": inputs,
        }),
        Quantity::TDark => {
            let seconds = |b2: f64| -> Result<Option<f64>> { Ok(noise::t_dark(&n, g, b2)?.map(|t| t * 1e-6)) };
            inputs["g_perp_rad_per_us"] = json!(g);
            inputs["beta_sq"] = json!(beta_sq);
            // |β|² = 1 and |β|² = ½ are both in use for the quoted value
            let by_weight: Vec<_> = [1.0, 0.5]
                .into_iter()
                .map(|b2| Ok(json!({ "beta_sq": b2, "value": seconds(b2)? })))
                .collect::<Result<_>>()?;
            json!({
                "quantity": "t-dark",
                "value": seconds(beta_sq)?,
                "units": "s",
                "inputs": inputs,
                "by_beta_sq": by_weight,
            })
        }
        Quantity::Infidelity => {
            let Some(t) = t_us else {
                return input("infidelity needs --t-us");
            };
            inputs["g_perp_rad_per_us"] = json!(g);
            inputs["beta_sq"] = json!(beta_sq);
            inputs["t_us"] = json!(t);
            json!({
                "quantity": "infidelity",
                "value": noise::perturbative_infidelity(t, &n, g, beta_sq)?,
                "units": "1",
                "inputs": inputs,
            })
        }
    };
    print!("{}", to_json(&doc)?);
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------- decay

#[derive(Serialize)]
struct DecaySummary<'a> {
    scenario: ScenarioName,
    params: &'a ConfigFile,
    method: &'a Method,
    gamma_per_us: f64,
    inv_gamma_ms: Option<f64>,
    rms_residual: f64,
    n_points_used: usize,
    diagnostics: &'a Diagnostics,
}

/// One resolved run: the scenario plus the config it was built from.
struct Run {
    params: ConfigFile,
    scenario: SimScenario,
}

impl Run {
    fn new(config: &ConfigFile) -> Result<Self> {
        let (params, scenario) = config.resolve()?;
        Ok(Self { params, scenario })
    }

    /// Quadrature over the quasi-static variable when its channel is on.
    fn curve(&self) -> Result<DecayCurve> {
        if self.scenario.noise.t2_fq.is_some() {
            dynamics::gauss_hermite_average(&self.scenario, self.params.quadrature.n_nodes)
        } else {
            dynamics::evolve(&self.scenario)
        }
    }
}

fn named_config(
    config: &ConfigFile,
    scenario: ScenarioName,
    t1: Option<f64>,
    t2: Option<Option<f64>>,
) -> Result<ConfigFile> {
    let mut c = match scenario {
        ScenarioName::Custom => config.clone(),
        _ => ConfigFile::default(),
    };
    match scenario {
        ScenarioName::Fig3 => {
            let Some(t1) = t1 else {
                return input("fig3 needs --t1-us");
            };
            if t2.is_some() {
                return input("fig3 has no T2 channel; drop --t2-us");
            }
            c.noise.t1_fq_us = Some(t1);
        }
        ScenarioName::Fig4 => {
            let Some(t2) = t2 else {
                return input("fig4 needs --t2-us (a time in us or `inf`)");
            };
            c.noise.t1_fq_us = Some(t1.unwrap_or(scenarios::DEPHASING_T1_US));
            c.noise.t2_fq_us = t2;
        }
        ScenarioName::Custom => {
            if let Some(t1) = t1 {
                c.noise.t1_fq_us = Some(t1);
            }
            if let Some(t2) = t2 {
                c.noise.t2_fq_us = t2;
            }
        }
    }
    Ok(c)
}

fn decay_csv(curve: &DecayCurve) -> String {
    let mut s = String::from("t_us,fidelity\n");
    for (t, f) in curve.times.iter().zip(&curve.fidelities) {
        let _ = writeln!(s, "{},{}", num(*t), num(*f));
    }
    s
}

fn cmd_decay(
    config: &ConfigFile,
    scenario: ScenarioName,
    t1: Option<f64>,
    t2: Option<Option<f64>>,
    out: Option<&Path>,
    summary_path: Option<&Path>,
) -> Result<i32> {
    let run = Run::new(&named_config(config, scenario, t1, t2)?)?;
    let curve = match scenario {
        ScenarioName::Fig3 => dynamics::evolve(&run.scenario)?,
        ScenarioName::Fig4 => dynamics::gauss_hermite_average(&run.scenario, run.params.quadrature.n_nodes)?,
        ScenarioName::Custom => run.curve()?,
    };
    let fit = fitting::fit_exponential(&curve)?;
    let summary = DecaySummary {
        scenario,
        params: &run.params,
        method: &curve.metadata.method,
        gamma_per_us: fit.gamma,
        inv_gamma_ms: finite(fit.inv_gamma_ms()),
        rms_residual: fit.rms_residual,
        n_points_used: fit.n_points_used,
        diagnostics: &curve.diagnostics,
    };
    if let Some(path) = out {
        write_file(path, &decay_csv(&curve))?;
    }
    let text = to_json(&summary)?;
    match summary_path {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(if report_diagnostics(&curve.diagnostics) { EXIT_OK } else { EXIT_INTEGRATION })
}

// ---------------------------------------------------------------- oracle

/// Pointwise comparison of a deterministic curve with a sampled one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub max_abs_deviation: f64,
    /// Largest `|ΔF| / stderr` over samples with nonzero stderr.
    pub max_sigma_deviation: f64,
    /// Every sample satisfies `|ΔF| <= ORACLE_SIGMAS * stderr + ORACLE_FLOOR`.
    pub within_bound: bool,
}

pub fn compare_with_oracle(reference: &DecayCurve, sampled: &DecayCurve) -> Result<OracleComparison> {
    let Some(se) = sampled.stderr.as_ref() else {
        return input("sampled curve carries no standard errors");
    };
    if reference.times != sampled.times {
        return input("curves are sampled on different grids");
    }
    let mut max_abs: f64 = 0.0;
    let mut max_sigma: f64 = 0.0;
    let mut within = true;
    for ((a, b), &s) in reference.fidelities.iter().zip(&sampled.fidelities).zip(se) {
        let d = (a - b).abs();
        max_abs = max_abs.max(d);
        if s > 0.0 {
            max_sigma = max_sigma.max(d / s);
        }
        within &= d <= ORACLE_SIGMAS * s + ORACLE_FLOOR;
    }
    Ok(OracleComparison {
        max_abs_deviation: max_abs,
        max_sigma_deviation: max_sigma,
        within_bound: within,
    })
}

fn cmd_oracle(config: &ConfigFile, trajectories: Option<usize>, seed: Option<u64>, out: Option<&Path>) -> Result<i32> {
    let mut config = config.clone();
    if let Some(n) = trajectories {
        config.oracle.n_traj = n;
    }
    if let Some(s) = seed {
        config.oracle.seed = s;
    }
    if config.oracle.n_traj == 0 {
        return input("--trajectories must be at least 1");
    }
    let run = Run::new(&config)?;
    let me = run.curve()?;
    let mc = dynamics::monte_carlo_oracle(&run.scenario, run.params.oracle.n_traj, run.params.oracle.seed)?;
    let cmp = compare_with_oracle(&me, &mc)?;

    if let Some(path) = out {
        let se = mc.stderr.as_deref().unwrap_or_default();
        let mut s = String::from("t_us,fidelity_me,fidelity_mc,stderr_mc\n");
        for k in 0..me.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                num(me.times[k]),
                num(me.fidelities[k]),
                num(mc.fidelities[k]),
                num(se[k])
            );
        }
        write_file(path, &s)?;
    }
    let report = json!({
        "params": run.params,
        "n_traj": run.params.oracle.n_traj,
        "seed": run.params.oracle.seed,
        "max_abs_deviation": cmp.max_abs_deviation,
        "max_sigma_deviation": cmp.max_sigma_deviation,
        "sigma_bound": ORACLE_SIGMAS,
        "pass": cmp.within_bound,
    });
    print!("{}", to_json(&report)?);

    let healthy = report_diagnostics(&me.diagnostics) & report_diagnostics(&mc.diagnostics);
    Ok(if !healthy {
        EXIT_INTEGRATION
    } else if cmp.within_bound {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    })
}

// ---------------------------------------------------------------- sweep

fn parse_values(param: SweepParam, values: &str) -> Result<Vec<Option<f64>>> {
    let parsed: Vec<Option<f64>> = values
        .split(',')
        .map(|v| match param {
            SweepParam::T2FqUs => parse_time(v),
            SweepParam::T1FqUs => parse_time(v)?
                .map(Some)
                .ok_or_else(|| Error::Input("t1_fq_us must be finite".into())),
            SweepParam::GPerpRadPerUs => match v.trim().parse::<f64>() {
                Ok(g) if g >= 0.0 && g.is_finite() => Ok(Some(g)),
                _ => input(format!("expected a finite g_perp >= 0, got `{}`", v.trim())),
            },
        })
        .collect::<Result<_>>()?;
    if parsed.is_empty() {
        return input("--values needs at least one value");
    }
    Ok(parsed)
}

fn cmd_sweep(
    config: &ConfigFile,
    param: SweepParam,
    values: &str,
    t1: Option<f64>,
    t2: Option<Option<f64>>,
    out: Option<&Path>,
) -> Result<i32> {
    let base = named_config(config, ScenarioName::Custom, t1, t2)?;
    let points = parse_values(param, values)?;
    let runs: Vec<Run> = points
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            match param {
                SweepParam::T1FqUs => c.noise.t1_fq_us = v,
                SweepParam::T2FqUs => c.noise.t2_fq_us = v,
                SweepParam::GPerpRadPerUs => c.system.g_perp_rad_per_us = v.unwrap_or_default(),
            }
            Run::new(&c)
        })
        .collect::<Result<_>>()?;

    let results = parallel::map_ordered(&runs, |run| -> Result<(FitResult, Diagnostics)> {
        let curve = run.curve()?;
        Ok((fitting::fit_exponential(&curve)?, curve.diagnostics))
    });

    let mut csv = String::from("param,value,inv_gamma_ms,rms_residual\n");
    let mut healthy = true;
    for (v, result) in points.iter().zip(results) {
        let (fit, diagnostics) = result?;
        healthy &= report_diagnostics(&diagnostics);
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            param.name(),
            num(v.unwrap_or(f64::INFINITY)),
            num(fit.inv_gamma_ms()),
            num(fit.rms_residual)
        );
    }
    match out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(if healthy { EXIT_OK } else { EXIT_INTEGRATION })
}
