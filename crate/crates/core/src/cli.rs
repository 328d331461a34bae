//! Command-line front end: argument parsing, JSON and CSV serialization, exit codes.
//!
//! Exit codes: 0 success or pass, 1 I/O failure, 2 parse error, 3 validation error,
//! 4 certification or extremality failure.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::certifier::{self, CertificationInput};
use crate::error::Error;
use crate::lhs::{self, OptimizerConfig, ProbabilityRule, SearchDomain};
use crate::linalg::{c, Complex, ComplexMatrix, Ket};
use crate::povm::{self, ExtremalityReport, MeasurementSet, Povm};
use crate::robustness::{self, ClosedForm};
use crate::scenario::{self, JointDistribution, SettingPolicy, ShotRecord};

/// Published value of the local-hidden-state bound, reported next to the computed one.
pub const REFERENCE_BETA_L: f64 = 2.673;

/// Header of the robustness sweep CSV.
pub const ROBUSTNESS_HEADER: &str = "delta,epsilon,w_closed,w_sim,discrepancy";

/// Header of the sampled-records CSV.
pub const SAMPLE_HEADER: &str = "seed,x,y,a,b";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Io,
    Parse,
    Validation,
    Failed,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Io => 1,
            ExitStatus::Parse => 2,
            ExitStatus::Validation => 3,
            ExitStatus::Failed => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    fn new(status: ExitStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self::new(ExitStatus::Validation, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotEntangled(_) => ExitStatus::Failed,
            _ => ExitStatus::Validation,
        };
        Self::new(status, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    #[default]
    FullSphere,
    Quadrant,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    #[default]
    Born,
    Overlap,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ClosedFormArg {
    #[default]
    Published,
    Exact,
}

#[derive(Debug, Parser)]
#[command(
    name = "steercert",
    version,
    about = "Trusted-trine steering: bounds, certification, robustness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Output format; csv is available for ideal, robustness and sample.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Statistics of the ideal configuration.
    Ideal,
    /// Local-hidden-state bound by grid search plus simplex refinement.
    LhsBound(LhsBoundArgs),
    /// Closed-form vs simulated W under white noise.
    Robustness(RobustnessArgs),
    /// Certify a state and untrusted measurements read from JSON.
    Certify(CertifyArgs),
    /// Rank-one extremality of a POVM or measurement set read from JSON.
    Extremal(ExtremalArgs),
    /// Draw measurement records from a configuration or distribution.
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct LhsBoundArgs {
    /// Grid points per angle.
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u32).range(2..))]
    pub grid: u32,
    /// Simplex diameter at which refinement stops.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Best grid cells used as refinement starts.
    #[arg(long, default_value_t = 10)]
    pub starts: usize,
    #[arg(long, default_value_t = 4)]
    pub random_starts: usize,
    #[arg(long, value_enum, default_value_t)]
    pub domain: DomainArg,
    #[arg(long, value_enum, default_value_t)]
    pub rule: RuleArg,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 51)]
    pub eps_steps: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta_min: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta_max: f64,
    #[arg(long, default_value_t = 1)]
    pub delta_steps: usize,
    /// Closed form used for the w_closed column.
    #[arg(long, value_enum, default_value_t)]
    pub closed_form: ClosedFormArg,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = crate::tolerance::CERTIFICATION)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct ExtremalArgs {
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Configuration or distribution; the ideal configuration when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub shots: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

// ---------------------------------------------------------------------------------------------
// Wire formats

/// `[re, im]`
pub type SerializedComplex = [f64; 2];

/// Row-major nested `[[re, im]]` rows.
pub type MatrixJson = Vec<Vec<SerializedComplex>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dim_a: usize,
    pub dim_b: usize,
    /// Amplitudes of `|i⟩_A|j⟩_B` at index `i·dim_b + j`.
    pub amplitudes: Vec<SerializedComplex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmJson {
    pub elements: Vec<MatrixJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSetJson {
    pub settings: Vec<PovmJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyJson {
    pub state: StateJson,
    pub bob: MeasurementSetJson,
}

/// Either a single POVM (`elements`) or a measurement set (`settings`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremalJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<Vec<PovmJson>>,
}

/// Either `state` + `bob` (+ optional `alice`, trines by default) or an explicit `distribution`
/// indexed `[x][y][a][b]`; `policy` gives the setting-pair probabilities `[x][y]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice: Option<MeasurementSetJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob: Option<MeasurementSetJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<[[[[f64; 3]; 3]; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<[[f64; 3]; 3]>,
}

fn complex_from_json(z: SerializedComplex, at: &str) -> CliResult<Complex> {
    if !(z[0].is_finite() && z[1].is_finite()) {
        return Err(CliError::validation(format!(
            "{at}: non-finite complex number"
        )));
    }
    Ok(c(z[0], z[1]))
}

pub fn complex_to_json(z: Complex) -> SerializedComplex {
    [z.re, z.im]
}

pub fn matrix_from_json(m: &MatrixJson, at: &str) -> CliResult<ComplexMatrix> {
    let rows = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, z)| complex_from_json(*z, &format!("{at}[{i}][{j}]")))
                .collect::<CliResult<Vec<_>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    ComplexMatrix::from_rows(rows).map_err(|e| CliError::validation(format!("{at}: {e}")))
}

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    m.to_rows()
        .into_iter()
        .map(|r| r.into_iter().map(complex_to_json).collect())
        .collect()
}

impl StateJson {
    pub fn from_ket(k: &Ket, dim_b: usize) -> Self {
        Self {
            dim_a: k.dim() / dim_b,
            dim_b,
            amplitudes: k
                .amplitudes()
                .iter()
                .copied()
                .map(complex_to_json)
                .collect(),
        }
    }

    pub fn to_ket(&self, at: &str) -> CliResult<Ket> {
        if self.dim_a != 2 {
            return Err(CliError::validation(format!(
                "{at}.dim_a: must be 2, got {}",
                self.dim_a
            )));
        }
        if self.dim_b == 0 {
            return Err(CliError::validation(format!(
                "{at}.dim_b: must be positive"
            )));
        }
        if self.amplitudes.len() != self.dim_a * self.dim_b {
            return Err(CliError::validation(format!(
                "{at}.amplitudes: expected {} entries, got {}",
                self.dim_a * self.dim_b,
                self.amplitudes.len()
            )));
        }
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| complex_from_json(*z, &format!("{at}.amplitudes[{i}]")))
            .collect::<CliResult<Vec<_>>>()?;
        Ket::new(amps).map_err(|e| CliError::validation(format!("{at}.amplitudes: {e}")))
    }
}

impl PovmJson {
    pub fn from_povm(p: &Povm) -> Self {
        Self {
            elements: p.elements().iter().map(matrix_to_json).collect(),
        }
    }

    pub fn to_povm(&self, at: &str) -> CliResult<Povm> {
        let els = elements_from_json(&self.elements, &format!("{at}.elements"))?;
        Povm::new(els).map_err(|e| CliError::validation(format!("{at}: {e}")))
    }
}

fn elements_from_json(els: &[MatrixJson], at: &str) -> CliResult<Vec<ComplexMatrix>> {
    els.iter()
        .enumerate()
        .map(|(i, m)| matrix_from_json(m, &format!("{at}[{i}]")))
        .collect()
}

impl MeasurementSetJson {
    pub fn from_set(s: &MeasurementSet) -> Self {
        Self {
            settings: s.povms().iter().map(PovmJson::from_povm).collect(),
        }
    }

    pub fn to_set(&self, at: &str) -> CliResult<MeasurementSet> {
        let povms = self
            .settings
            .iter()
            .enumerate()
            .map(|(x, p)| p.to_povm(&format!("{at}.settings[{x}]")))
            .collect::<CliResult<Vec<_>>>()?;
        MeasurementSet::new(povms).map_err(|e| CliError::validation(format!("{at}: {e}")))
    }
}

impl CertifyJson {
    pub fn to_input(&self) -> CliResult<CertificationInput> {
        let state = self.state.to_ket("state")?;
        let bob = self.bob.to_set("bob")?;
        if self.state.dim_b != bob.dim() {
            return Err(CliError::validation(format!(
                "state.dim_b = {} but bob acts on dimension {}",
                self.state.dim_b,
                bob.dim()
            )));
        }
        Ok(CertificationInput::new(state, bob)?)
    }
}

/// Reads and deserializes a JSON file; errors name the file, the field path and the line.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(ExitStatus::Io, format!("{}: {e}", path.display())))?;
    parse_json(&text)
        .map_err(|m| CliError::new(ExitStatus::Parse, format!("{}: {m}", path.display())))
}

/// Deserializes JSON text, reporting the failing field path on error.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            inner.to_string()
        } else {
            format!("at `{path}`: {inner}")
        }
    })
}

/// Shortest round-trip decimal after rounding to 12 significant digits.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let r: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    let a = r.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

// ---------------------------------------------------------------------------------------------
// Reports

#[derive(Debug, Serialize)]
pub struct IdealReport {
    #[serde(rename = "W")]
    pub w: f64,
    pub diagonal_sum: f64,
    /// `p(a,b|x,y)` indexed `[x][y][a][b]`.
    pub distribution: [[[[f64; 3]; 3]; 3]; 3],
    /// `Tr σ_b^y` indexed `[y][b]`.
    pub assemblage_traces: [[f64; 3]; 3],
    pub extremality: PartyExtremality,
}

#[derive(Debug, Serialize)]
pub struct PartyExtremality {
    pub alice: Vec<ExtremalityReport>,
    pub bob: Vec<ExtremalityReport>,
}

#[derive(Debug, Serialize)]
pub struct LhsBoundReport {
    pub beta_l: f64,
    pub reference_beta_l: f64,
    pub difference_from_reference: f64,
    pub argmin: lhs::BlochPoint,
    pub argmin_state: Vec<SerializedComplex>,
    pub objective_at_argmin: f64,
    pub minimizing_outcomes: [usize; 3],
    pub grid: GridInfo,
    pub rule: ProbabilityRule,
    pub refinement_iterations: usize,
    pub seed: u64,
    pub cross_check: CrossCheckInfo,
}

#[derive(Debug, Serialize)]
pub struct GridInfo {
    pub resolution: usize,
    pub domain: SearchDomain,
    pub simplex_tolerance: f64,
    pub starts: usize,
    pub random_starts: usize,
}

#[derive(Debug, Serialize)]
pub struct CrossCheckInfo {
    /// Largest `W` over the 27 deterministic responses with optimal hidden states.
    pub value: f64,
    pub strategy: [usize; 3],
    pub state: Vec<SerializedComplex>,
    pub difference: f64,
}

#[derive(Debug, Serialize)]
pub struct RobustnessReport {
    pub closed_form: ClosedForm,
    pub max_discrepancy: f64,
    pub clipped_rows: usize,
    pub crossing: Crossing,
    pub rows: Vec<robustness::SweepRow>,
}

/// Noise at which `W(ε) = 3 − 3ε + 2ε²` falls to a given bound.
#[derive(Debug, Serialize)]
pub struct Crossing {
    pub reference_beta_l: f64,
    pub epsilon_at_reference: Option<f64>,
    pub computed_beta_l: f64,
    pub epsilon_at_computed: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CertifyReport {
    pub passed: bool,
    pub tolerance: f64,
    pub max_diagonal_probability: f64,
    pub state_fidelity: f64,
    pub measurement_deviation: f64,
    pub schmidt_coefficients: Vec<f64>,
    pub extracted_unitary: MatrixJson,
    pub p_b: MatrixJson,
    pub p_b_deviation_from_scaled_identity: f64,
    pub identity_chain_max_residual: f64,
    pub identity_chain: certifier::IdentityChain,
}

#[derive(Debug, Serialize)]
pub struct ExtremalReport {
    /// `Some(false)` if any POVM is a non-extremal rank-one POVM; `None` if none could be decided.
    pub extremal: Option<bool>,
    pub povms: Vec<ExtremalityReport>,
}

#[derive(Debug, Serialize)]
pub struct SampleReport {
    pub seed: u64,
    pub shots: usize,
    pub estimate: Option<scenario::WEstimate>,
    pub records: Vec<ShotRecord>,
}

// ---------------------------------------------------------------------------------------------
// Commands

/// Text produced by a command and the status it should exit with.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub status: ExitStatus,
}

impl Outcome {
    fn pass(text: String) -> Self {
        Self {
            text,
            status: ExitStatus::Success,
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn check_tolerance(tol: f64) -> CliResult<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::validation(format!(
            "--tolerance must be positive, got {tol}"
        )))
    }
}

fn json_only(format: Option<Format>, command: &str) -> CliResult<()> {
    match format {
        Some(Format::Csv) => Err(CliError::validation(format!("{command} has no csv output"))),
        _ => Ok(()),
    }
}

pub fn cmd_ideal(format: Format) -> CliResult<String> {
    let alice = povm::alice_ideal();
    let bob = povm::bob_ideal();
    let psi = Ket::phi_plus(2);
    let d = scenario::distribution_from_ket(&psi, &alice, &bob)?;
    if format == Format::Csv {
        let mut out = String::from("x,y,a,b,p\n");
        for x in 0..3 {
            for y in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        out.push_str(&format!(
                            "{x},{y},{a},{b},{}\n",
                            format_number(d.p[x][y][a][b])
                        ));
                    }
                }
            }
        }
        return Ok(out);
    }
    let assemblage = scenario::assemblage_from(&psi.projector(), &bob)?;
    let report = IdealReport {
        w: scenario::steering_functional(&d)?,
        diagonal_sum: d.diagonal_sum(),
        distribution: d.p,
        assemblage_traces: assemblage.traces(),
        extremality: PartyExtremality {
            alice: alice.povms().iter().map(povm::check_extremality).collect(),
            bob: bob.povms().iter().map(povm::check_extremality).collect(),
        },
    };
    Ok(to_json(&report))
}

fn ket_json(k: &Ket) -> Vec<SerializedComplex> {
    k.canonical_phase()
        .amplitudes()
        .iter()
        .copied()
        .map(complex_to_json)
        .collect()
}

pub fn cmd_lhs_bound(args: &LhsBoundArgs) -> CliResult<String> {
    check_tolerance(args.tolerance)?;
    let cfg = OptimizerConfig {
        grid: args.grid as usize,
        starts: args.starts,
        random_starts: args.random_starts,
        simplex_tolerance: args.tolerance,
        seed: args.seed,
        domain: match args.domain {
            DomainArg::FullSphere => SearchDomain::FullSphere,
            DomainArg::Quadrant => SearchDomain::Quadrant,
        },
        rule: match args.rule {
            RuleArg::Born => ProbabilityRule::Born,
            RuleArg::Overlap => ProbabilityRule::Overlap,
        },
        ..OptimizerConfig::default()
    };
    let alice = povm::alice_ideal();
    let bound = lhs::optimize_bound(&alice, &cfg);
    let cross = lhs::deterministic_lhs_cross_check(&alice, cfg.rule)?;
    let report = LhsBoundReport {
        beta_l: bound.beta_l,
        reference_beta_l: REFERENCE_BETA_L,
        difference_from_reference: bound.beta_l - REFERENCE_BETA_L,
        argmin: bound.argmin,
        argmin_state: ket_json(&bound.argmin.ket()),
        objective_at_argmin: bound.objective_at_argmin,
        minimizing_outcomes: bound.minimizing_outcomes,
        grid: GridInfo {
            resolution: bound.grid_resolution,
            domain: bound.domain,
            simplex_tolerance: cfg.simplex_tolerance,
            starts: cfg.starts,
            random_starts: cfg.random_starts,
        },
        rule: bound.rule,
        refinement_iterations: bound.refinement_iterations,
        seed: cfg.seed,
        cross_check: CrossCheckInfo {
            value: cross.value,
            strategy: cross.best.strategy.0,
            state: ket_json(&cross.best.state),
            difference: (cross.value - bound.beta_l).abs(),
        },
    };
    Ok(to_json(&report))
}

fn grid(lo: f64, hi: f64, n: usize, name: &str) -> CliResult<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(CliError::validation(format!(
            "--{name}-min/--{name}-max: need finite min ≤ max"
        )));
    }
    if n == 0 {
        return Err(CliError::validation(format!(
            "--{name}-steps must be at least 1"
        )));
    }
    Ok(robustness::linspace(lo, hi, n))
}

pub fn cmd_robustness(args: &RobustnessArgs, format: Format) -> CliResult<String> {
    let eps = grid(args.eps_min, args.eps_max, args.eps_steps, "eps")?;
    let deltas = grid(args.delta_min, args.delta_max, args.delta_steps, "delta")?;
    let form = match args.closed_form {
        ClosedFormArg::Published => ClosedForm::Published,
        ClosedFormArg::Exact => ClosedForm::Exact,
    };
    let rows = robustness::sweep(&eps, &deltas, form)?;
    if format == Format::Csv {
        let mut out = String::with_capacity(64 * (rows.len() + 1));
        out.push_str(ROBUSTNESS_HEADER);
        out.push('\n');
        for r in &rows {
            let cells = [r.delta, r.epsilon, r.w_closed, r.w_sim, r.discrepancy].map(format_number);
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        return Ok(out);
    }
    let computed =
        lhs::deterministic_lhs_cross_check(&povm::alice_ideal(), ProbabilityRule::Born)?.value;
    let report = RobustnessReport {
        closed_form: form,
        max_discrepancy: rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max),
        clipped_rows: rows.iter().filter(|r| r.clipped).count(),
        crossing: Crossing {
            reference_beta_l: REFERENCE_BETA_L,
            epsilon_at_reference: robustness::critical_epsilon(REFERENCE_BETA_L),
            computed_beta_l: computed,
            epsilon_at_computed: robustness::critical_epsilon(computed),
        },
        rows,
    };
    Ok(to_json(&report))
}

pub fn cmd_certify(args: &CertifyArgs) -> CliResult<Outcome> {
    check_tolerance(args.tolerance)?;
    let file: CertifyJson = read_json(&args.input)?;
    let input = file.to_input()?;
    let r = certifier::certify(&input, args.tolerance)?;
    let report = CertifyReport {
        passed: r.passed,
        tolerance: r.tolerance,
        max_diagonal_probability: r.max_diagonal_probability,
        state_fidelity: r.state_fidelity,
        measurement_deviation: r.measurement_deviation,
        schmidt_coefficients: r.schmidt_coefficients,
        extracted_unitary: matrix_to_json(&r.extracted_unitary),
        p_b: matrix_to_json(&r.p_b),
        p_b_deviation_from_scaled_identity: r.p_b_deviation_from_scaled_identity,
        identity_chain_max_residual: r.identity_chain.max_residual(),
        identity_chain: r.identity_chain,
    };
    Ok(Outcome {
        text: to_json(&report),
        status: if report.passed {
            ExitStatus::Success
        } else {
            ExitStatus::Failed
        },
    })
}

/// Extremality of every POVM in a parsed file.
pub fn extremal_povms(file: &ExtremalJson) -> CliResult<Vec<Povm>> {
    match (&file.elements, &file.settings) {
        (Some(els), None) => {
            let els = elements_from_json(els, "elements")?;
            Ok(vec![Povm::new(els).map_err(|e| {
                CliError::validation(format!("elements: {e}"))
            })?])
        }
        (None, Some(settings)) => settings
            .iter()
            .enumerate()
            .map(|(x, p)| p.to_povm(&format!("settings[{x}]")))
            .collect(),
        _ => Err(CliError::validation(
            "expected exactly one of `elements` or `settings`",
        )),
    }
}

pub fn cmd_extremal(args: &ExtremalArgs) -> CliResult<Outcome> {
    let file: ExtremalJson = read_json(&args.input)?;
    let povms = extremal_povms(&file)?;
    let reports: Vec<ExtremalityReport> = povms.iter().map(povm::check_extremality).collect();
    let extremal = if reports.iter().any(|r| r.extremal == Some(false)) {
        Some(false)
    } else if reports.iter().all(|r| r.extremal == Some(true)) {
        Some(true)
    } else {
        None
    };
    let report = ExtremalReport {
        extremal,
        povms: reports,
    };
    Ok(Outcome {
        text: to_json(&report),
        status: if extremal == Some(false) {
            ExitStatus::Failed
        } else {
            ExitStatus::Success
        },
    })
}

/// Distribution and setting policy described by a sample file.
pub fn sample_source(file: &SampleJson) -> CliResult<(JointDistribution, SettingPolicy)> {
    let policy = file
        .policy
        .map(|probs| SettingPolicy { probs })
        .unwrap_or_else(SettingPolicy::uniform);
    let d = match (&file.distribution, &file.state, &file.bob) {
        (Some(p), None, None) if file.alice.is_none() => {
            let d = JointDistribution { p: *p };
            d.validate()
                .map_err(|e| CliError::validation(format!("distribution: {e}")))?;
            d
        }
        (None, Some(state), Some(bob)) => {
            let ket = state.to_ket("state")?;
            let bob = bob.to_set("bob")?;
            let alice = match &file.alice {
                Some(a) => a.to_set("alice")?,
                None => povm::alice_ideal(),
            };
            if ket.dim() != alice.dim() * bob.dim() {
                return Err(CliError::validation(
                    "state dimension does not match the measurement sets",
                ));
            }
            scenario::distribution_from_ket(&ket, &alice, &bob)?
        }
        _ => {
            return Err(CliError::validation(
                "expected either `distribution` or `state` with `bob`",
            ))
        }
    };
    Ok((d, policy))
}

pub fn cmd_sample(args: &SampleArgs, format: Format) -> CliResult<String> {
    let file = match &args.input {
        Some(p) => read_json::<SampleJson>(p)?,
        None => SampleJson {
            state: Some(StateJson::from_ket(&Ket::phi_plus(2), 2)),
            bob: Some(MeasurementSetJson::from_set(&povm::bob_ideal())),
            ..SampleJson::default()
        },
    };
    let (d, policy) = sample_source(&file)?;
    let records = scenario::sample_shots(&d, &policy, args.shots, args.seed)?;
    let estimate = scenario::estimate_w(&records).ok();
    if let Some(e) = &estimate {
        log::info!("W_hat = {} ± {}", e.w_hat, e.stderr);
    }
    if format == Format::Csv {
        return Ok(records_csv(&records));
    }
    Ok(to_json(&SampleReport {
        seed: args.seed,
        shots: args.shots,
        estimate,
        records,
    }))
}

pub fn records_csv(records: &[ShotRecord]) -> String {
    let mut out = String::with_capacity(16 * (records.len() + 1));
    out.push_str(SAMPLE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{},{},{}\n", r.seed, r.x, r.y, r.a, r.b));
    }
    out
}

/// Runs a parsed command and returns its output text without writing it.
pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Ideal => cmd_ideal(cli.format.unwrap_or(Format::Json)).map(Outcome::pass),
        Command::LhsBound(a) => {
            json_only(cli.format, "lhs-bound")?;
            cmd_lhs_bound(a).map(Outcome::pass)
        }
        Command::Robustness(a) => {
            cmd_robustness(a, cli.format.unwrap_or(Format::Csv)).map(Outcome::pass)
        }
        Command::Certify(a) => {
            json_only(cli.format, "certify")?;
            cmd_certify(a)
        }
        Command::Extremal(a) => {
            json_only(cli.format, "extremal")?;
            cmd_extremal(a)
        }
        Command::Sample(a) => cmd_sample(a, cli.format.unwrap_or(Format::Csv)).map(Outcome::pass),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::new(ExitStatus::Io, e.to_string());
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::new(ExitStatus::Io, format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io)?;
            out.flush().map_err(io)
        }
    }
}

/// Executes, writes the output and returns the exit status; errors go to stderr.
pub fn run(cli: &Cli) -> ExitStatus {
    let result =
        execute(cli).and_then(|o| write_output(cli.output.as_deref(), &o.text).map(|_| o.status));
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.status
        }
    }
}
