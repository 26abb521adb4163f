//! Command-line harness: config file plus flag overrides, CSV/JSON reports.
//!
//! Exit codes: 0 success, 1 computation error, 2 configuration error. The
//! output directory defaults to the working directory and can be overridden
//! with `--output-dir` or `UVRG_OUTPUT_DIR`.
//!
//! Report columns, in order:
//!
//! * `analyze`: model, coupling, rg_energy, rg_alternate, oracle_energy,
//!   oracle_gap, relative_error, sign_branch, flow_law, flow_variation, notes
//! * `flow`: cutoff, coupling, beta, energy, energy_alternate, coupling_log_cutoff
//! * `kh-scan`: cutoff, c0, c2, c0_per_log, c2_per_log, eps_exp, small_field,
//!   strong_field_plus, strong_field_minus
//! * `oracle`: model, coupling, index, parity, eigenvalue, refinement_estimate,
//!   convergence_ratio, half_width, points, center
//! * `paper-suite`: id, name, passed, detail

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::khmodel::{self, FieldRegime};
use crate::oracle::{self, Grid, Parity};
use crate::potential::PotentialSpec;
use crate::rgflow::{
    self, BetaSource, ClosedFormBeta, CouplingFlow, FixedPointTarget, FlowLaw, FlowOptions, SignPolicy,
};
use crate::suite;
use crate::uvreduce::{Scheme, SignBranch};

pub const OUTPUT_DIR_ENV: &str = "UVRG_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Compute = 1,
    Config = 2,
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub kind: ExitKind,
    pub module: &'static str,
    pub operation: &'static str,
    pub message: String,
}

impl CliError {
    fn config(module: &'static str, operation: &'static str, message: impl fmt::Display) -> Self {
        Self {
            kind: ExitKind::Config,
            module,
            operation,
            message: message.to_string(),
        }
    }

    fn compute(module: &'static str, operation: &'static str, message: impl fmt::Display) -> Self {
        Self {
            kind: ExitKind::Compute,
            module,
            operation,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}: {}", self.module, self.operation, self.message)
    }
}

impl std::error::Error for CliError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Quartic,
    Coulomb,
    SoftCoulomb,
    Morse,
    Kh,
}

impl ModelKind {
    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Quartic => "quartic",
            ModelKind::Coulomb => "coulomb",
            ModelKind::SoftCoulomb => "soft-coulomb",
            ModelKind::Morse => "morse",
            ModelKind::Kh => "kh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaKind {
    Numeric,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    PreferNegative,
    PreferPositive,
    ReportBoth,
}

impl From<PolicyArg> for SignPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::PreferNegative => SignPolicy::PreferNegative,
            PolicyArg::PreferPositive => SignPolicy::PreferPositive,
            PolicyArg::ReportBoth => SignPolicy::ReportBoth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Taylor,
    Printed,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Taylor => Scheme::Taylor,
            SchemeArg::Printed => Scheme::Printed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityArg {
    Even,
    Odd,
    None,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
            ParityArg::None => Parity::None,
        }
    }
}

/// Potential parameters shared by every subcommand.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ModelParams {
    /// Coupling values (g, α or A); a comma-separated list is swept.
    #[arg(long = "coupling", visible_aliases = ["g", "alpha", "A"], value_delimiter = ',', allow_hyphen_values = true)]
    pub coupling: Vec<f64>,
    /// Morse range parameter.
    #[arg(long = "a")]
    pub a: Option<f64>,
    /// Morse mass.
    #[arg(long = "m", visible_alias = "mass")]
    pub mass: Option<f64>,
    /// Soft-Coulomb softening length (the shape cutoff is its inverse).
    #[arg(long)]
    pub softening: Option<f64>,
    /// KH experimental parameter ε_exp.
    #[arg(long = "eps-exp")]
    pub eps_exp: Option<f64>,
    /// KH integration constant of the CS solution.
    #[arg(long = "K", allow_hyphen_values = true)]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct GridParams {
    /// Oracle grid half-width L.
    #[arg(long = "half-width", visible_alias = "L")]
    pub half_width: Option<f64>,
    /// Oracle grid points n (odd).
    #[arg(long = "points", visible_alias = "n")]
    pub points: Option<usize>,
    /// Oracle grid centre.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CutoffArgs {
    /// Explicit cutoff list.
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Vec<f64>,
    /// Log-spaced cutoffs as `min,max,count`.
    #[arg(long = "cutoff-range", value_delimiter = ',', num_args = 1..=3)]
    pub cutoff_range: Vec<f64>,
}

#[derive(Debug, Parser)]
#[command(name = "uvrg", version, about = "Cutoff RG analysis of 1D potentials with a grid eigensolver check")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long = "output-dir", global = true, env = OUTPUT_DIR_ENV)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Report file name (inside the output directory).
    #[arg(long, global = true)]
    pub output: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand, reduce, flow to the UV limit and compare with the oracle.
    Analyze(AnalyzeArgs),
    /// Integrate the coupling flow and tabulate (Λ, g, β, E₀).
    Flow(FlowArgs),
    /// Fit the logarithmic divergence of the KH integral over a cutoff scan.
    KhScan(KhScanArgs),
    /// Run the grid eigensolver alone.
    Oracle(OracleArgs),
    /// Run every acceptance check and print PASS/FAIL lines.
    PaperSuite,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub model: Option<ModelKind>,
    #[command(flatten)]
    pub params: ModelParams,
    #[command(flatten)]
    pub grid: GridParams,
    #[command(flatten)]
    pub cutoffs: CutoffArgs,
    #[arg(long = "sign-policy", value_enum)]
    pub sign_policy: Option<PolicyArg>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    pub model: Option<ModelKind>,
    #[command(flatten)]
    pub params: ModelParams,
    /// Initial coupling at the starting cutoff.
    #[arg(long, allow_hyphen_values = true)]
    pub g0: Option<f64>,
    /// Starting cutoff Λ0.
    #[arg(long = "from")]
    pub from: Option<f64>,
    /// Final cutoff Λ1.
    #[arg(long = "to")]
    pub to: Option<f64>,
    #[arg(long, value_enum)]
    pub beta: Option<BetaKind>,
    /// Start from the fixed-point coupling at Λ0.
    #[arg(long = "start-on-fixed-point")]
    pub start_on_fixed_point: bool,
    #[arg(long = "samples-per-decade")]
    pub samples_per_decade: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Args)]
pub struct KhScanArgs {
    #[command(flatten)]
    pub cutoffs: CutoffArgs,
    /// Fit window half-width w.
    #[arg(long = "w")]
    pub window: Option<f64>,
    /// Number of fit points in [−w, w].
    #[arg(long = "n-fit")]
    pub n_fit: Option<usize>,
    #[arg(long = "eps-exp")]
    pub eps_exp: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub model: Option<ModelKind>,
    #[command(flatten)]
    pub params: ModelParams,
    #[command(flatten)]
    pub grid: GridParams,
    /// First eigenvalue index (within the parity sector).
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// Number of consecutive states.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, value_enum)]
    pub parity: Option<ParityArg>,
}

/// Declarative config file. Every field is optional; flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub model: Option<ModelKind>,
    pub params: ModelParams,
    pub grid: GridParams,
    pub cutoffs: Option<Vec<f64>>,
    pub cutoff_range: Option<(f64, f64, usize)>,
    pub sign_policy: Option<PolicyArg>,
    pub scheme: Option<SchemeArg>,
    pub parity: Option<ParityArg>,
    pub format: Option<Format>,
    pub output: Option<String>,
    pub flow: FlowFileConfig,
    pub kh: KhFileConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct FlowFileConfig {
    pub g0: Option<f64>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub beta: Option<BetaKind>,
    pub start_on_fixed_point: Option<bool>,
    pub samples_per_decade: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct KhFileConfig {
    pub window: Option<f64>,
    pub n_fit: Option<usize>,
    pub eps_exp: Option<f64>,
}

pub fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config("cli", "load_config", format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::config("cli", "load_config", format!("{}: {e}", path.display())))
}

impl ModelParams {
    fn merged(&self, file: &ModelParams) -> ModelParams {
        ModelParams {
            coupling: if self.coupling.is_empty() {
                file.coupling.clone()
            } else {
                self.coupling.clone()
            },
            a: self.a.or(file.a),
            mass: self.mass.or(file.mass),
            softening: self.softening.or(file.softening),
            eps_exp: self.eps_exp.or(file.eps_exp),
            k: self.k.or(file.k),
        }
    }
}

impl GridParams {
    fn merged(&self, file: &GridParams) -> GridParams {
        GridParams {
            half_width: self.half_width.or(file.half_width),
            points: self.points.or(file.points),
            center: self.center.or(file.center),
        }
    }
}

/// Rounds to 12 significant digits so reports are byte-stable.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_opt(x: Option<f64>) -> Option<f64> {
    x.map(round12)
}

fn log_space(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![min];
    }
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            round12((min.ln() + t * (max.ln() - min.ln())).exp())
        })
        .collect()
}

fn resolve_cutoffs(args: &CutoffArgs, file: &FileConfig, default: (f64, f64, usize)) -> Result<Vec<f64>, CliError> {
    let list = if !args.cutoffs.is_empty() {
        args.cutoffs.clone()
    } else if !args.cutoff_range.is_empty() {
        let r = &args.cutoff_range;
        if r.len() != 3 {
            return Err(CliError::config("cli", "cutoff_grid", "cutoff-range takes min,max,count"));
        }
        if r[2] < 1.0 || r[2].fract() != 0.0 {
            return Err(CliError::config("cli", "cutoff_grid", "cutoff-range count must be a positive integer"));
        }
        log_space(r[0], r[1], r[2] as usize)
    } else if let Some(list) = &file.cutoffs {
        list.clone()
    } else if let Some((a, b, n)) = file.cutoff_range {
        log_space(a, b, n)
    } else {
        log_space(default.0, default.1, default.2)
    };
    if let Some(bad) = list.iter().find(|&&l| !(l >= rgflow::CUTOFF_FLOOR) || !l.is_finite()) {
        return Err(CliError::config(
            "cli",
            "cutoff_grid",
            format!("cutoff {bad} is below the floor {}", rgflow::CUTOFF_FLOOR),
        ));
    }
    Ok(list)
}

/// A fully resolved model: kind plus one coupling value.
#[derive(Debug, Clone)]
pub struct ModelSetup {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub coupling: f64,
}

fn default_coupling(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Morse => 4.0,
        _ => 1.0,
    }
}

impl ModelSetup {
    pub fn new(kind: ModelKind, params: &ModelParams, coupling: f64) -> Self {
        Self {
            kind,
            params: params.clone(),
            coupling,
        }
    }

    fn couplings(kind: ModelKind, params: &ModelParams) -> Vec<f64> {
        if params.coupling.is_empty() {
            vec![default_coupling(kind)]
        } else {
            params.coupling.clone()
        }
    }

    pub fn spec(&self) -> Result<PotentialSpec, CliError> {
        let p = &self.params;
        let bad = |e: crate::potential::PotentialError| CliError::config("potential", "construct", e);
        match self.kind {
            ModelKind::Quartic => Ok(PotentialSpec::quartic(self.coupling)),
            ModelKind::Coulomb => Ok(PotentialSpec::coulomb(self.coupling)),
            ModelKind::SoftCoulomb => {
                let a = p.softening.unwrap_or(1e-2);
                if !(a > 0.0) {
                    return Err(CliError::config("potential", "construct", format!("softening must be positive, got {a}")));
                }
                PotentialSpec::soft_coulomb(self.coupling, 1.0 / a).map_err(bad)
            }
            ModelKind::Morse => {
                PotentialSpec::morse(self.coupling, p.a.unwrap_or(1.0), p.mass.unwrap_or(1.0)).map_err(bad)
            }
            ModelKind::Kh => PotentialSpec::kramers_henneberger(self.coupling, p.eps_exp.unwrap_or(1.0), 1e3).map_err(bad),
        }
    }

    /// Grid that holds the lowest relevant state with room to spare.
    pub fn default_grid(&self) -> (f64, usize, f64) {
        let p = &self.params;
        match self.kind {
            ModelKind::Quartic => (6.0 * self.coupling.abs().powf(-1.0 / 6.0), 4001, 0.0),
            ModelKind::Coulomb => (40.0 / self.coupling.abs(), 8001, 0.0),
            ModelKind::SoftCoulomb => (40.0 / self.coupling.abs(), 40001, 0.0),
            ModelKind::Morse => {
                let a = p.a.unwrap_or(1.0);
                (18.0 / a, 8001, 12.0 / a)
            }
            ModelKind::Kh => (4.0, 2001, 0.0),
        }
    }

    pub fn grid(&self, overrides: &GridParams) -> Result<Grid, CliError> {
        let (l, n, c) = self.default_grid();
        Grid::centered(
            overrides.center.unwrap_or(c),
            overrides.half_width.unwrap_or(l),
            overrides.points.unwrap_or(n),
        )
        .map_err(|e| CliError::config("oracle", "grid", e))
    }

    /// The state the RG prediction is compared with.
    pub fn default_parity(&self) -> Option<Parity> {
        match self.kind {
            ModelKind::Coulomb | ModelKind::SoftCoulomb => Some(Parity::Odd),
            ModelKind::Quartic => Some(Parity::Even),
            _ => None,
        }
    }

    pub fn default_scheme(&self) -> Scheme {
        match self.kind {
            ModelKind::Morse | ModelKind::Kh => Scheme::Printed,
            _ => Scheme::Taylor,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub coupling: f64,
    pub rg_energy: Option<f64>,
    pub rg_alternate: Option<f64>,
    pub oracle_energy: Option<f64>,
    pub oracle_gap: Option<f64>,
    pub relative_error: Option<f64>,
    pub sign_branch: String,
    pub flow_law: String,
    pub flow_variation: Option<f64>,
    pub notes: String,
}

pub fn describe_law(flow: &CouplingFlow) -> String {
    let mut s = match &flow.law {
        FlowLaw::PowerLaw { prefactor, exponent } => format!("c={};k={}", round12(*prefactor), round12(*exponent)),
        FlowLaw::LogLaw { k } => format!("K={}", round12(*k)),
        FlowLaw::Tabulated { points } => format!("tabulated({})", points.len()),
    };
    if flow.diagnostic_only {
        s.push_str(";diagnostic-only");
    }
    s
}

fn branch_name(b: SignBranch) -> &'static str {
    match b {
        SignBranch::Positive => "positive",
        SignBranch::Negative => "negative",
        SignBranch::Ambiguous => "ambiguous",
    }
}

/// Settings for one `analyze` run.
#[derive(Debug, Clone, Default)]
pub struct AnalyzeSettings {
    pub grid: GridParams,
    pub cutoffs: Vec<f64>,
    pub policy: Option<SignPolicy>,
    pub scheme: Option<Scheme>,
    pub parity: Option<Parity>,
}

/// The RG flow used for the UV limit of a model.
pub fn uv_flow(setup: &ModelSetup, spec: &PotentialSpec, scheme: Scheme) -> Result<CouplingFlow, CliError> {
    match setup.kind {
        // Constant physical coupling; the drift of A is O(Λ⁻²).
        ModelKind::Morse => Ok(CouplingFlow::constant(setup.coupling)),
        ModelKind::Kh => Ok(khmodel::cs_solution(setup.params.k.unwrap_or(1.0))),
        _ => rgflow::solve_fixed_point(spec, FixedPointTarget::matching(spec), rgflow::DEFAULT_RANGE, scheme)
            .map_err(|e| CliError::compute("rgflow", "solve_fixed_point", e)),
    }
}

/// Largest relative deviation of `E₀(Λ)` along `flow` over `cutoffs`.
pub fn flow_variation(spec: &PotentialSpec, flow: &CouplingFlow, cutoffs: &[f64], scheme: Scheme) -> Result<f64, CliError> {
    let mut energies = Vec::with_capacity(cutoffs.len());
    for &l in cutoffs {
        let g = flow.coupling_at(l).map_err(|e| CliError::compute("rgflow", "coupling_at", e))?;
        let e = rgflow::cutoff_energy(spec, g, l, scheme).map_err(|e| CliError::compute("rgflow", "cutoff_energy", e))?;
        energies.push(e.energy);
    }
    let reference = energies[0];
    Ok(energies
        .iter()
        .map(|e| (e - reference).abs() / reference.abs())
        .fold(0.0, f64::max))
}

/// `C/(c/Λ²)` of the regularized Coulomb reduction under both schemes, at `Λ = 10³`.
pub fn soft_coulomb_brackets(spec: &PotentialSpec) -> Result<(f64, f64), CliError> {
    let l = 1e3;
    let bracket = |scheme| {
        crate::uvreduce::reduce(&spec.with_coupling(-1.0), l, scheme)
            .map(|r| round12(r.offset / r.stiffness * l * l))
            .map_err(|e| CliError::compute("uvreduce", "expand_at_cutoff", e))
    };
    Ok((bracket(Scheme::Taylor)?, bracket(Scheme::Printed)?))
}

/// One comparison row; module failures end up in `notes` and the error is returned alongside.
pub fn analyze_model(setup: &ModelSetup, settings: &AnalyzeSettings) -> (ComparisonRow, Option<CliError>) {
    let mut row = ComparisonRow {
        model: setup.kind.id().to_string(),
        coupling: round12(setup.coupling),
        rg_energy: None,
        rg_alternate: None,
        oracle_energy: None,
        oracle_gap: None,
        relative_error: None,
        sign_branch: String::new(),
        flow_law: String::new(),
        flow_variation: None,
        notes: String::new(),
    };
    let mut notes = Vec::new();
    let mut first_error = None;
    let mut fail = |e: CliError, notes: &mut Vec<String>| {
        notes.push(format!("error: {e}"));
        if first_error.is_none() {
            first_error = Some(e);
        }
    };

    let spec = match setup.spec() {
        Ok(s) => s,
        Err(e) => {
            fail(e, &mut notes);
            row.notes = notes.join("; ");
            return (row, first_error);
        }
    };
    let scheme = settings.scheme.unwrap_or_else(|| setup.default_scheme());
    let policy = settings.policy.unwrap_or_else(|| SignPolicy::default_for(&spec));

    let rg = uv_flow(setup, &spec, scheme).and_then(|flow| {
        row.flow_law = describe_law(&flow);
        if !settings.cutoffs.is_empty() {
            row.flow_variation = Some(round12(flow_variation(&spec, &flow, &settings.cutoffs, scheme)?));
        }
        rgflow::uv_limit_energy(&spec, &flow, policy, scheme).map_err(|e| CliError::compute("rgflow", "uv_limit_energy", e))
    });
    match rg {
        Ok(est) => {
            row.rg_energy = Some(round12(est.energy));
            row.rg_alternate = round_opt(est.alternate);
            row.sign_branch = branch_name(est.sign_branch).to_string();
            if let Some(alt) = est.alternate {
                notes.push(format!("sign ambiguity: other branch {}", round12(alt)));
            }
        }
        Err(e) => fail(e, &mut notes),
    }

    if setup.kind == ModelKind::SoftCoulomb {
        match soft_coulomb_brackets(&spec) {
            Ok((taylor, printed)) => notes.push(format!("offset bracket x Λ²: taylor {taylor}, printed {printed}")),
            Err(e) => fail(e, &mut notes),
        }
    }

    let oracle = setup
        .grid(&settings.grid)
        .and_then(|grid| {
            let parity = settings.parity.or_else(|| setup.default_parity());
            oracle::ground_state(&spec, &grid, parity).map_err(|e| CliError::compute("oracle", "ground_state", e))
        });
    match oracle {
        Ok(res) => {
            let e = res.refinement_estimate;
            row.oracle_energy = Some(round12(e));
            if let Some(rg) = row.rg_energy {
                row.oracle_gap = Some(round12(e - rg));
                if e != 0.0 {
                    row.relative_error = Some(round12((rg - e).abs() / e.abs()));
                }
            }
            if matches!(setup.kind, ModelKind::Coulomb | ModelKind::SoftCoulomb) {
                notes.push("oracle state: lowest odd".into());
            }
        }
        Err(e) => fail(e, &mut notes),
    }
    row.notes = notes.join("; ");
    (row, first_error)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FlowRow {
    pub cutoff: f64,
    pub coupling: f64,
    pub beta: Option<f64>,
    pub energy: Option<f64>,
    pub energy_alternate: Option<f64>,
    pub coupling_log_cutoff: f64,
}

#[derive(Debug, Clone)]
pub struct FlowSettings {
    pub g0: Option<f64>,
    pub from: f64,
    pub to: f64,
    pub beta: BetaKind,
    pub start_on_fixed_point: bool,
    pub samples_per_decade: usize,
    pub scheme: Option<Scheme>,
}

impl Default for FlowSettings {
    fn default() -> Self {
        Self {
            g0: None,
            from: 10.0,
            to: 1e6,
            beta: BetaKind::Numeric,
            start_on_fixed_point: false,
            samples_per_decade: 4,
            scheme: None,
        }
    }
}

fn flow_row(
    spec: &PotentialSpec,
    beta: &BetaSource<'_>,
    g: f64,
    cutoff: f64,
    scheme: Scheme,
    kh_eps: Option<f64>,
) -> FlowRow {
    let b = beta.eval(g, cutoff).ok();
    let (energy, alternate) = match kh_eps {
        Some(eps) => (Some(khmodel::hat_ground_energy(g, eps, cutoff)), None),
        None => match rgflow::cutoff_energy(spec, g, cutoff, scheme) {
            Ok(e) => (Some(e.energy), e.alternate),
            Err(_) => (None, None),
        },
    };
    FlowRow {
        cutoff: round12(cutoff),
        coupling: round12(g),
        beta: round_opt(b),
        energy: round_opt(energy.filter(|e| e.is_finite())),
        energy_alternate: round_opt(alternate),
        coupling_log_cutoff: round12(g * cutoff.ln()),
    }
}

/// Trajectory rows. On an integration abort the rows computed so far are
/// returned together with the error.
pub fn run_flow(setup: &ModelSetup, settings: &FlowSettings) -> (Vec<FlowRow>, Option<CliError>) {
    let spec = match setup.spec() {
        Ok(s) => s,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let scheme = settings.scheme.unwrap_or_else(|| setup.default_scheme());
    let (from, to) = (settings.from, settings.to);
    if from < rgflow::CUTOFF_FLOOR || to < rgflow::CUTOFF_FLOOR {
        return (
            Vec::new(),
            Some(CliError::config("rgflow", "integrate_flow", format!("cutoffs must be >= {}", rgflow::CUTOFF_FLOOR))),
        );
    }
    let decades = (to / from).log10().abs();
    let count = ((decades * settings.samples_per_decade as f64).ceil() as usize).max(1) + 1;
    let marks = log_space(from, to, count);
    let kh_eps = (setup.kind == ModelKind::Kh).then(|| setup.params.eps_exp.unwrap_or(1.0));

    let closed = ClosedFormBeta::for_family(spec.family());
    let beta = match (settings.beta, closed) {
        (BetaKind::Closed, Ok(kind)) => BetaSource::ClosedForm(kind),
        (BetaKind::Closed, Err(e)) => return (Vec::new(), Some(CliError::config("rgflow", "beta_closed_form", e))),
        (BetaKind::Numeric, _) => BetaSource::Numeric { spec: &spec, scheme },
    };

    // KH with K given: the exact CS solution.
    if setup.kind == ModelKind::Kh && settings.g0.is_none() {
        let flow = khmodel::cs_solution(setup.params.k.unwrap_or(1.0));
        let rows = marks
            .iter()
            .map(|&l| {
                let g = flow.coupling_at(l).expect("log law covers every cutoff above the floor");
                flow_row(&spec, &beta, g, l, scheme, kh_eps)
            })
            .collect();
        return (rows, None);
    }

    let g0 = if settings.start_on_fixed_point {
        match rgflow::solve_fixed_point(&spec, FixedPointTarget::matching(&spec), (from.min(to), from.max(to)), scheme)
            .and_then(|f| f.coupling_at(from))
        {
            Ok(g) => g,
            Err(e) => return (Vec::new(), Some(CliError::compute("rgflow", "solve_fixed_point", e))),
        }
    } else {
        settings.g0.unwrap_or(setup.coupling)
    };

    let opts = FlowOptions::default();
    let mut rows = vec![flow_row(&spec, &beta, g0, from, scheme, kh_eps)];
    let mut g = g0;
    for w in marks.windows(2) {
        match rgflow::integrate_flow(&beta, g, w[0], w[1], &opts).and_then(|f| f.coupling_at(w[1])) {
            Ok(next) => {
                g = next;
                rows.push(flow_row(&spec, &beta, g, w[1], scheme, kh_eps));
            }
            Err(e) => return (rows, Some(CliError::compute("rgflow", "integrate_flow", e))),
        }
    }
    (rows, None)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct KhScanRow {
    pub cutoff: f64,
    pub c0: f64,
    pub c2: f64,
    pub c0_per_log: f64,
    pub c2_per_log: f64,
    pub eps_exp: f64,
    pub small_field: f64,
    pub strong_field_plus: f64,
    pub strong_field_minus: f64,
}

pub fn run_kh_scan(cutoffs: &[f64], window: f64, n_fit: usize, eps_exp: f64) -> Result<Vec<KhScanRow>, CliError> {
    let fits = khmodel::log_divergence_fit(cutoffs, window, n_fit).map_err(|e| match e {
        khmodel::KhError::InvalidParameter(_) | khmodel::KhError::FitDegenerate { .. } => {
            CliError::config("khmodel", "log_divergence_fit", e)
        }
        _ => CliError::compute("khmodel", "log_divergence_fit", e),
    })?;
    let small = khmodel::ground_energy_limits(eps_exp, FieldRegime::SmallField)
        .map_err(|e| CliError::config("khmodel", "ground_energy_limits", e))?;
    let strong = khmodel::ground_energy_limits(eps_exp, FieldRegime::StrongField)
        .map_err(|e| CliError::config("khmodel", "ground_energy_limits", e))?;
    Ok(fits
        .iter()
        .map(|f| KhScanRow {
            cutoff: round12(f.cutoff),
            c0: round12(f.c0),
            c2: round12(f.c2),
            c0_per_log: round12(f.c0_per_log()),
            c2_per_log: round12(f.c2_per_log()),
            eps_exp: round12(eps_exp),
            small_field: round12(small.energy),
            strong_field_plus: round12(strong.energy),
            strong_field_minus: round12(strong.alternate.unwrap_or(f64::NAN)),
        })
        .collect())
}

/// Least-squares slope of `c0` against `ln Λ`.
pub fn c0_log_slope(rows: &[KhScanRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.cutoff.ln(), r.c0)).collect();
    least_squares_slope(&pts)
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OracleRow {
    pub model: String,
    pub coupling: f64,
    pub index: usize,
    pub parity: String,
    pub eigenvalue: f64,
    pub refinement_estimate: f64,
    pub convergence_ratio: f64,
    pub half_width: f64,
    pub points: usize,
    pub center: f64,
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
        Parity::None => "none",
    }
}

pub fn run_oracle(
    setup: &ModelSetup,
    grid: &GridParams,
    parity: Option<Parity>,
    first: usize,
    count: usize,
) -> Result<Vec<OracleRow>, CliError> {
    let spec = setup.spec()?;
    let grid = setup.grid(grid)?;
    (first..first + count)
        .into_par_iter()
        .map(|k| {
            let r = oracle::solve(&spec, &grid, parity, k).map_err(|e| CliError::compute("oracle", "eigenvalue_by_index", e))?;
            Ok(OracleRow {
                model: setup.kind.id().to_string(),
                coupling: round12(setup.coupling),
                index: k,
                parity: parity_name(r.parity).to_string(),
                eigenvalue: round12(r.eigenvalue),
                refinement_estimate: round12(r.refinement_estimate),
                convergence_ratio: round12(r.convergence_ratio),
                half_width: round12(grid.half_width),
                points: grid.points,
                center: round12(grid.center),
            })
        })
        .collect()
}

/// Serializes `rows` as CSV (header plus one line per row) or pretty JSON.
pub fn render<T: Serialize>(rows: &[T], format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => serde_json::to_string_pretty(rows)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| CliError::compute("cli", "write_report", e)),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::compute("cli", "write_report", e))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::compute("cli", "write_report", e))?;
            String::from_utf8(bytes).map_err(|e| CliError::compute("cli", "write_report", e))
        }
    }
}

struct Output {
    dir: PathBuf,
    name: Option<String>,
    format: Format,
}

impl Output {
    fn write<T: Serialize>(&self, stem: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let ext = match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = self.dir.join(self.name.clone().unwrap_or_else(|| format!("{stem}.{ext}")));
        let text = render(rows, self.format)?;
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::config("cli", "write_report", format!("{}: {e}", parent.display())))?;
        }
        fs::write(&path, text).map_err(|e| CliError::config("cli", "write_report", format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

fn require_model(flag: Option<ModelKind>, file: &FileConfig) -> Result<ModelKind, CliError> {
    flag.or(file.model)
        .ok_or_else(|| CliError::config("cli", "parse_args", "no model given (argument or `model` in the config file)"))
}

fn exec(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => FileConfig::default(),
    };
    let out = Output {
        dir: cli.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        name: cli.output.clone().or(file.output.clone()),
        format: cli.format.or(file.format).unwrap_or_default(),
    };
    match cli.command {
        Command::Analyze(args) => {
            let kind = require_model(args.model, &file)?;
            let params = args.params.merged(&file.params);
            let settings = AnalyzeSettings {
                grid: args.grid.merged(&file.grid),
                cutoffs: resolve_cutoffs(&args.cutoffs, &file, (1e3, 1e6, 7))?,
                policy: args.sign_policy.or(file.sign_policy).map(Into::into),
                scheme: args.scheme.or(file.scheme).map(Into::into),
                parity: file.parity.map(Into::into),
            };
            if kind == ModelKind::Kh {
                return Err(CliError::config("cli", "analyze", "the KH model is analysed with `kh-scan` and `flow kh`"));
            }
            let results: Vec<_> = ModelSetup::couplings(kind, &params)
                .par_iter()
                .map(|&g| analyze_model(&ModelSetup::new(kind, &params, g), &settings))
                .collect();
            let rows: Vec<ComparisonRow> = results.iter().map(|r| r.0.clone()).collect();
            let path = out.write(&format!("analyze-{}", kind.id()), &rows)?;
            for r in &rows {
                println!(
                    "{} g={} rg={} oracle={} rel_err={} {}",
                    r.model,
                    r.coupling,
                    fmt_opt(r.rg_energy),
                    fmt_opt(r.oracle_energy),
                    fmt_opt(r.relative_error),
                    r.notes
                );
            }
            println!("wrote {}", path.display());
            match results.into_iter().find_map(|r| r.1) {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Command::Flow(args) => {
            let kind = require_model(args.model, &file)?;
            let params = args.params.merged(&file.params);
            let f = &file.flow;
            let defaults = FlowSettings::default();
            let settings = FlowSettings {
                g0: args.g0.or(f.g0),
                from: args.from.or(f.from).unwrap_or(defaults.from),
                to: args.to.or(f.to).unwrap_or(defaults.to),
                beta: args.beta.or(f.beta).unwrap_or(defaults.beta),
                start_on_fixed_point: args.start_on_fixed_point || f.start_on_fixed_point.unwrap_or(false),
                samples_per_decade: args.samples_per_decade.or(f.samples_per_decade).unwrap_or(defaults.samples_per_decade),
                scheme: args.scheme.or(file.scheme).map(Into::into),
            };
            let coupling = ModelSetup::couplings(kind, &params)[0];
            let (rows, err) = run_flow(&ModelSetup::new(kind, &params, coupling), &settings);
            if !rows.is_empty() || err.is_none() {
                let path = out.write(&format!("flow-{}", kind.id()), &rows)?;
                println!("{} rows, wrote {}", rows.len(), path.display());
            }
            err.map_or(Ok(()), Err)
        }
        Command::KhScan(args) => {
            let cutoffs = resolve_cutoffs(&args.cutoffs, &file, (1e2, 1e6, 5))?;
            let k = &file.kh;
            let window = args.window.or(k.window).unwrap_or(0.2);
            let n_fit = args.n_fit.or(k.n_fit).unwrap_or(21);
            let eps = args.eps_exp.or(k.eps_exp).or(file.params.eps_exp).unwrap_or(10.0);
            let rows = run_kh_scan(&cutoffs, window, n_fit, eps)?;
            let path = out.write("kh-scan", &rows)?;
            for r in &rows {
                println!("Λ={} c0/lnΛ={} c2/lnΛ={}", r.cutoff, r.c0_per_log, r.c2_per_log);
            }
            if let Some(s) = c0_log_slope(&rows) {
                println!("dc0/dlnΛ = {}", round12(s));
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Oracle(args) => {
            let kind = require_model(args.model, &file)?;
            let params = args.params.merged(&file.params);
            let grid = args.grid.merged(&file.grid);
            let parity = args.parity.or(file.parity).map(Into::into);
            let rows: Vec<OracleRow> = ModelSetup::couplings(kind, &params)
                .iter()
                .map(|&g| run_oracle(&ModelSetup::new(kind, &params, g), &grid, parity, args.index, args.count.max(1)))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .flatten()
                .collect();
            let path = out.write(&format!("oracle-{}", kind.id()), &rows)?;
            for r in &rows {
                println!("k={} parity={} E={} (extrapolated {})", r.index, r.parity, r.eigenvalue, r.refinement_estimate);
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::PaperSuite => {
            let results = suite::run_all();
            for r in &results {
                println!("{r}");
            }
            let path = out.write("paper-suite", &results)?;
            println!("wrote {}", path.display());
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                Err(CliError::compute("suite", "run_all", format!("{failed} criteria failed")))
            } else {
                Ok(())
            }
        }
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitKind::Config as i32 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match exec(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error [{}::{}]: {}", e.module, e.operation, e.message);
            e.kind as i32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(-2.0), -2.0);
        assert!(round12(f64::NAN).is_nan());
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str(
            r#"
            model = "morse"
            sign-policy = "prefer-negative"
            [params]
            coupling = [1.0, 4.0]
            a = 2.0
            [grid]
            points = 101
            "#,
        )
        .unwrap();
        let flags = ModelParams {
            a: Some(1.0),
            ..Default::default()
        };
        let merged = flags.merged(&file.params);
        assert_eq!(merged.a, Some(1.0));
        assert_eq!(merged.coupling, vec![1.0, 4.0]);
        assert_eq!(file.grid.points, Some(101));
        assert_eq!(file.model, Some(ModelKind::Morse));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("modle = \"quartic\"").is_err());
    }

    #[test]
    fn cutoffs_below_floor_are_config_errors() {
        let args = CutoffArgs {
            cutoffs: vec![1.0, 10.0],
            cutoff_range: vec![],
        };
        let err = resolve_cutoffs(&args, &FileConfig::default(), (1e3, 1e6, 4)).unwrap_err();
        assert_eq!(err.kind, ExitKind::Config);
    }

    #[test]
    fn csv_has_fixed_header() {
        let rows = vec![FlowRow {
            cutoff: 10.0,
            coupling: 0.5,
            beta: None,
            energy: Some(1.0),
            energy_alternate: None,
            coupling_log_cutoff: 1.0,
        }];
        let text = render(&rows, Format::Csv).unwrap();
        assert!(text.starts_with("cutoff,coupling,beta,energy,energy_alternate,coupling_log_cutoff\n"));
        assert!(text.contains("10.0,0.5,,1.0,,1.0"));
    }
}
