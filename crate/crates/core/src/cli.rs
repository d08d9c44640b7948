//! Config ingestion, experiment runners and table serialization.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3};
use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use crate::eraser::{self, CircuitMode, Detector, EraserConfig};
use crate::everett::{self, BranchLedger, PremeasureStep};
use crate::measure::joint_distribution;
use crate::orderprop::{self, CampaignSettings, GENERATOR_NAME};
use crate::pattern::uniform_grid;
use crate::qcore::{c, family_from_basis, make_real_state, ProjectiveFamily, StateVector};
use crate::wheeler::{self, Point, WheelerConfig};
use crate::TOL;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Epr,
    Eraser,
    Wheeler,
    Orderprop,
    Everett,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Epr => "epr",
            Experiment::Eraser => "eraser",
            Experiment::Wheeler => "wheeler",
            Experiment::Orderprop => "orderprop",
            Experiment::Everett => "everett",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Failure of a CLI run, carrying its exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Invariant(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

fn config_err(e: impl fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn default_bins() -> usize {
    181
}

fn default_theta_max() -> f64 {
    FRAC_PI_3
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EprParams {
    /// Measurement axis of Alice, as an angle from z in the x-z plane.
    #[serde(default)]
    pub angle_a: f64,
    #[serde(default)]
    pub angle_b: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EraserParams {
    pub k: f64,
    pub d: f64,
    #[serde(default)]
    pub mode: CircuitMode,
    #[serde(default = "default_bins")]
    pub theta_bins: usize,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WheelerParams {
    pub k: f64,
    #[serde(default = "WheelerParams::default_r1")]
    pub r1: [f64; 2],
    #[serde(default = "WheelerParams::default_r2")]
    pub r2: [f64; 2],
    #[serde(default = "WheelerParams::default_distance")]
    pub screen_distance: f64,
    #[serde(default = "default_bins")]
    pub theta_bins: usize,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
    #[serde(default = "WheelerParams::default_aim")]
    pub telescope_aim: [f64; 2],
    #[serde(default = "WheelerParams::default_halfwidth")]
    pub acceptance_halfwidth: f64,
    #[serde(default = "WheelerParams::default_screen_in")]
    pub screen_in: bool,
}

impl WheelerParams {
    fn default_r1() -> [f64; 2] {
        [0.0, 0.5]
    }
    fn default_r2() -> [f64; 2] {
        [0.0, -0.5]
    }
    fn default_distance() -> f64 {
        1e3
    }
    fn default_aim() -> [f64; 2] {
        [1e3, 0.0]
    }
    fn default_halfwidth() -> f64 {
        1e-4
    }
    fn default_screen_in() -> bool {
        true
    }

    fn config(&self) -> crate::Result<WheelerConfig> {
        let cfg = WheelerConfig {
            k: self.k,
            r1: Point::new(self.r1[0], self.r1[1]),
            r2: Point::new(self.r2[0], self.r2[1]),
            screen_distance: self.screen_distance,
            theta_grid: uniform_grid(self.theta_bins, self.theta_max)?,
            telescope_aim: Point::new(self.telescope_aim[0], self.telescope_aim[1]),
            acceptance_halfwidth: self.acceptance_halfwidth,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderpropParams {
    #[serde(default = "OrderpropParams::default_trials")]
    pub trials: usize,
    #[serde(default = "OrderpropParams::default_dims")]
    pub max_dims: [usize; 2],
    #[serde(default = "OrderpropParams::default_len")]
    pub max_len: usize,
}

impl OrderpropParams {
    fn default_trials() -> usize {
        CampaignSettings::default().trials
    }
    fn default_dims() -> [usize; 2] {
        CampaignSettings::default().max_dims
    }
    fn default_len() -> usize {
        CampaignSettings::default().max_len
    }

    fn settings(&self, seed: u64) -> CampaignSettings {
        CampaignSettings {
            trials: self.trials,
            max_dims: self.max_dims,
            max_len: self.max_len,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Two observers on `(|↑↓⟩ + |↓↑⟩)/√2`.
    #[default]
    Epr,
    /// Three observers on `(|↑↑↑⟩ + |↓↓↓⟩)/√2`.
    Ghz,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EverettParams {
    #[serde(default)]
    pub scenario: Scenario,
    /// Premeasurement order by observer id; default is slot order.
    #[serde(default)]
    pub order: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Epr(EprParams),
    Eraser(EraserParams),
    Wheeler(WheelerParams),
    Orderprop(OrderpropParams),
    Everett(EverettParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub params: Params,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Common {
    experiment: Experiment,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    format: Format,
}

const COMMON_KEYS: [&str; 4] = ["experiment", "seed", "output", "format"];

fn strict<T: serde::de::DeserializeOwned>(table: toml::Table) -> Result<T, CliError> {
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            config_err(e.into_inner())
        } else {
            CliError::Config(format!("{path}: {}", e.into_inner()))
        }
    })
}

/// Parses and validates a TOML config. Unknown keys are errors.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let table: toml::Table = text.parse().map_err(config_err)?;
    parse_table(table)
}

fn parse_table(mut table: toml::Table) -> Result<RunConfig, CliError> {
    let mut common_table = toml::Table::new();
    for key in COMMON_KEYS {
        if let Some(v) = table.remove(key) {
            common_table.insert(key.to_string(), v);
        }
    }
    let common: Common = strict(common_table)?;
    let params = match common.experiment {
        Experiment::Epr => Params::Epr(strict(table)?),
        Experiment::Eraser => Params::Eraser(strict(table)?),
        Experiment::Wheeler => Params::Wheeler(strict(table)?),
        Experiment::Orderprop => Params::Orderprop(strict(table)?),
        Experiment::Everett => Params::Everett(strict(table)?),
    };
    let config = RunConfig {
        experiment: common.experiment,
        seed: common.seed,
        output: common.output,
        format: common.format,
        params,
    };
    config.validate()?;
    Ok(config)
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub mode: Option<CircuitMode>,
}

/// Builds the config for a subcommand from optional file text plus flags.
/// A file naming a different experiment is rejected.
pub fn load_config(
    experiment: Experiment,
    text: Option<&str>,
    overrides: &Overrides,
) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = match text {
        Some(t) => t.parse().map_err(config_err)?,
        None => toml::Table::new(),
    };
    match table.get("experiment") {
        None => {
            table.insert("experiment".into(), experiment.name().into());
        }
        Some(toml::Value::String(s)) if s == experiment.name() => {}
        Some(other) => {
            return Err(CliError::Config(format!(
                "experiment: config file names {other}, subcommand is {experiment}"
            )))
        }
    }
    if let Some(mode) = overrides.mode {
        if experiment != Experiment::Eraser {
            return Err(CliError::Config("--mode applies to the eraser only".into()));
        }
        table.insert("mode".into(), mode.name().into());
    }
    let mut config = parse_table(table)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.output {
        config.output = Some(out.clone());
    }
    if let Some(format) = overrides.format {
        config.format = format;
    }
    Ok(config)
}

impl RunConfig {
    /// Runs every module-level config check without computing anything.
    pub fn validate(&self) -> Result<(), CliError> {
        match &self.params {
            Params::Epr(p) => {
                if !(p.angle_a.is_finite() && p.angle_b.is_finite()) {
                    return Err(CliError::Config("angle_a/angle_b must be finite".into()));
                }
            }
            Params::Eraser(p) => {
                eraser_config(p).map_err(config_err)?;
            }
            Params::Wheeler(p) => {
                p.config().map_err(config_err)?;
            }
            Params::Orderprop(p) => p.settings(self.seed).validate().map_err(config_err)?,
            Params::Everett(p) => {
                everett_steps(p)?;
            }
        }
        Ok(())
    }
}

fn eraser_config(p: &EraserParams) -> crate::Result<EraserConfig> {
    EraserConfig::new(p.k, p.d, uniform_grid(p.theta_bins, p.theta_max)?, p.mode)
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(i) => (*i).into(),
            Cell::Num(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Bool(b) => (*b).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Sum of a numeric column.
    pub fn column_sum(&self, name: &str) -> Option<f64> {
        let i = self.columns.iter().position(|c| c == name)?;
        self.rows
            .iter()
            .map(|r| match r[i] {
                Cell::Num(v) => Some(v),
                _ => None,
            })
            .sum()
    }
}

pub type Meta = Vec<(String, Cell)>;

/// Serializes a table with its metadata.
///
/// CSV: `# key: value` lines, a header row, then rows; floats carry 17
/// significant digits and every line ends in `\n`. JSON: `{"meta", "rows"}`
/// with one object per row in column order.
pub fn emit_table(table: &Table, format: Format, meta: &Meta) -> Result<String, CliError> {
    let non_finite = table
        .rows
        .iter()
        .flatten()
        .chain(meta.iter().map(|(_, v)| v))
        .any(|c| matches!(c, Cell::Num(v) if !v.is_finite()));
    if non_finite {
        return Err(CliError::Invariant("non-finite value in output table".into()));
    }
    match format {
        Format::Csv => {
            let mut out = String::new();
            for (k, v) in meta {
                out.push_str(&format!("# {k}: {}\n", v.csv_text()));
            }
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(&table.columns).map_err(io)?;
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::csv_text)).map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
            Ok(out)
        }
        Format::Json => {
            let meta: serde_json::Map<String, serde_json::Value> =
                meta.iter().map(|(k, v)| (k.clone(), v.json())).collect();
            let rows: Vec<serde_json::Value> = table
                .rows
                .iter()
                .map(|row| {
                    let obj: serde_json::Map<String, serde_json::Value> = table
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, v)| (k.clone(), v.json()))
                        .collect();
                    obj.into()
                })
                .collect();
            let doc = serde_json::json!({ "meta": meta, "rows": rows });
            let mut text = serde_json::to_string_pretty(&doc).expect("json values are finite");
            text.push('\n');
            Ok(text)
        }
    }
}

/// Serialized output plus any invariant violation found along the way.
/// The table is still written when `violation` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub text: String,
    pub violation: Option<String>,
}

fn base_meta(config: &RunConfig) -> Meta {
    vec![
        ("experiment".into(), config.experiment.name().into()),
        ("version".into(), VERSION.into()),
        ("generator".into(), GENERATOR_NAME.into()),
        ("seed".into(), config.seed.into()),
    ]
}

fn lib_err(e: crate::Error) -> CliError {
    CliError::Invariant(e.to_string())
}

fn spin_family(angle: f64) -> crate::Result<ProjectiveFamily> {
    let (cs, sn) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    family_from_basis(&[vec![c(cs, 0.0), c(sn, 0.0)], vec![c(-sn, 0.0), c(cs, 0.0)]])
}

fn run_epr(p: &EprParams, meta: &mut Meta) -> crate::Result<(Table, Option<String>)> {
    let singlet = make_real_state(&[2, 2], &[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0])?;
    let fa = Arc::new(spin_family(p.angle_a)?);
    let fb = Arc::new(spin_family(p.angle_b)?);
    let a_first = joint_distribution(&singlet, &[(0, fa.clone()), (1, fb.clone())])?;
    let b_first = joint_distribution(&singlet, &[(1, fb), (0, fa)])?;
    let symbols = ["up", "down"];
    let mut table = Table::new(&["outcome_a", "outcome_b", "probability", "probability_b_first"]);
    let mut diff: f64 = 0.0;
    for (a, sa) in symbols.iter().enumerate() {
        for (b, sb) in symbols.iter().enumerate() {
            let pa = a_first.get(&[a, b]).expect("in range");
            let pb = b_first.get(&[b, a]).expect("in range");
            diff = diff.max((pa - pb).abs());
            table.push(vec![(*sa).into(), (*sb).into(), pa.into(), pb.into()]);
        }
    }
    meta.push(("angle_a".into(), p.angle_a.into()));
    meta.push(("angle_b".into(), p.angle_b.into()));
    meta.push(("order_max_difference".into(), diff.into()));
    let violation = (diff >= TOL).then(|| format!("measurement order changes the joint distribution by {diff:e}"));
    Ok((table, violation))
}

/// Screen table as `theta, p_D1..p_D4, cond_D1..cond_D4`.
pub fn eraser_table(data: &eraser::ScreenTable) -> Table {
    let mut table = Table::new(&[
        "theta", "p_D1", "p_D2", "p_D3", "p_D4", "cond_D1", "cond_D2", "cond_D3", "cond_D4",
    ]);
    for i in 0..data.len() {
        let mut row: Vec<Cell> = vec![data.theta[i].into()];
        row.extend(data.joint[i].iter().map(|&v| Cell::from(v)));
        row.extend(data.conditional[i].iter().map(|&v| Cell::from(v)));
        table.push(row);
    }
    table
}

fn run_eraser(p: &EraserParams, meta: &mut Meta) -> crate::Result<(Table, Option<String>)> {
    let cfg = eraser_config(p)?;
    let state = eraser::build_state(p.mode)?;
    let report = eraser::schedule_equivalence(&state, &cfg)?;
    let table_data = &report.signal_first;
    let table = eraser_table(table_data);
    meta.push(("mode".into(), p.mode.name().into()));
    meta.push(("k".into(), p.k.into()));
    meta.push(("d".into(), p.d.into()));
    for det in Detector::ALL {
        let v = eraser::conditional_pattern(&state, det, &cfg)?.visibility;
        meta.push((format!("visibility_{det}"), v.into()));
    }
    meta.push((
        "signal_marginal_visibility".into(),
        table_data.signal_marginal()?.visibility.into(),
    ));
    meta.push(("order_max_difference".into(), report.max_difference.into()));
    let total = table_data.total();
    let violation = if report.max_difference >= TOL {
        Some(format!("detection order changes the joint table by {:e}", report.max_difference))
    } else if (total - 1.0).abs() >= TOL {
        Some(format!("joint table sums to {total}"))
    } else {
        None
    };
    Ok((table, violation))
}

fn run_wheeler(p: &WheelerParams, meta: &mut Meta) -> crate::Result<(Table, Option<String>)> {
    let cfg = p.config()?;
    meta.push(("screen_in".into(), p.screen_in.into()));
    meta.push(("k".into(), p.k.into()));
    meta.push(("screen_distance".into(), p.screen_distance.into()));
    match wheeler::delayed_choice(&cfg, p.screen_in)? {
        wheeler::DelayedChoice::Screen(far) => {
            let exact = wheeler::exact_pattern(&cfg)?;
            let mut table = Table::new(&["theta", "far_field", "exact"]);
            for i in 0..far.len() {
                table.push(vec![far.theta[i].into(), far.intensity[i].into(), exact.intensity[i].into()]);
            }
            meta.push(("visibility_far_field".into(), far.visibility.into()));
            meta.push(("visibility_exact".into(), exact.visibility.into()));
            Ok((table, None))
        }
        wheeler::DelayedChoice::Telescopes { p1, p2 } => {
            let mut table = Table::new(&["telescope", "slit", "probability"]);
            table.push(vec!["T1".into(), 1usize.into(), p1.into()]);
            table.push(vec!["T2".into(), 2usize.into(), p2.into()]);
            let total = p1 + p2;
            let violation =
                ((total - 1.0).abs() >= TOL).then(|| format!("telescope probabilities sum to {total}"));
            Ok((table, violation))
        }
    }
}

fn run_orderprop(
    p: &OrderpropParams,
    seed: u64,
    meta: &mut Meta,
) -> crate::Result<(Table, Option<String>)> {
    let summary = orderprop::fuzz_campaign(&p.settings(seed))?;
    let control = orderprop::same_slot_control()?;
    let mut table = Table::new(&[
        "trial", "dim_a", "dim_b", "len_a", "len_b", "interleavings", "max_spread",
    ]);
    for r in &summary.records {
        table.push(vec![
            r.trial.into(),
            r.dims[0].into(),
            r.dims[1].into(),
            r.len_a.into(),
            r.len_b.into(),
            r.report.num_interleavings.into(),
            r.report.max_spread.into(),
        ]);
    }
    meta.push(("trials".into(), p.trials.into()));
    meta.push(("worst_spread".into(), summary.worst_spread.into()));
    meta.push(("worst_trial".into(), summary.worst_trial.into()));
    meta.push(("total_interleavings".into(), summary.total_interleavings.into()));
    meta.push(("control_spread".into(), control.max_spread.into()));
    let violation = if summary.worst_spread >= TOL {
        Some(format!(
            "worst interleaving spread {:e} in trial {}",
            summary.worst_spread, summary.worst_trial
        ))
    } else if control.max_spread <= 0.1 {
        Some(format!("same-slot control spread {:e} too small", control.max_spread))
    } else {
        None
    };
    Ok((table, violation))
}

fn scenario_setup(scenario: Scenario) -> crate::Result<(StateVector, Vec<PremeasureStep>)> {
    let z = Arc::new(ProjectiveFamily::computational(2)?);
    let step = |slot: usize, observer: &str| PremeasureStep {
        slot,
        family: z.clone(),
        observer: observer.into(),
        symbols: vec!["up".into(), "down".into()],
    };
    match scenario {
        Scenario::Epr => Ok((
            make_real_state(&[2, 2], &[0.0, 1.0, 1.0, 0.0])?,
            vec![step(0, "Alice"), step(1, "Bob")],
        )),
        Scenario::Ghz => {
            let mut amps = [0.0; 8];
            amps[0] = 1.0;
            amps[7] = 1.0;
            Ok((
                make_real_state(&[2, 2, 2], &amps)?,
                vec![step(0, "Alice"), step(1, "Bob"), step(2, "Carol")],
            ))
        }
    }
}

fn everett_steps(p: &EverettParams) -> Result<(StateVector, Vec<PremeasureStep>), CliError> {
    let (state, steps) = scenario_setup(p.scenario).map_err(lib_err)?;
    let Some(order) = &p.order else {
        return Ok((state, steps));
    };
    if order.len() != steps.len() {
        return Err(CliError::Config(format!(
            "order: expected {} observers, got {}",
            steps.len(),
            order.len()
        )));
    }
    let mut ordered = Vec::with_capacity(order.len());
    for name in order {
        let step = steps
            .iter()
            .find(|s| &s.observer == name)
            .ok_or_else(|| CliError::Config(format!("order: unknown observer {name}")))?;
        if ordered.iter().any(|s: &PremeasureStep| &s.observer == name) {
            return Err(CliError::Config(format!("order: observer {name} listed twice")));
        }
        ordered.push(step.clone());
    }
    Ok((state, ordered))
}

fn run_everett(p: &EverettParams, meta: &mut Meta) -> Result<(Table, Option<String>), CliError> {
    let (state, steps) = everett_steps(p)?;
    let reversed: Vec<PremeasureStep> = steps.iter().rev().cloned().collect();
    let branches = BranchLedger::run(state.clone(), &steps)
        .and_then(|l| l.branches())
        .map_err(lib_err)?;
    let report = everett::order_independence(&state, &steps, &reversed).map_err(lib_err)?;
    let mut table = Table::new(&["label", "amplitude_re", "amplitude_im", "weight"]);
    for b in &branches {
        table.push(vec![
            b.label.to_string().into(),
            b.amplitude.re.into(),
            b.amplitude.im.into(),
            b.weight.into(),
        ]);
    }
    let order: Vec<&str> = steps.iter().map(|s| s.observer.as_str()).collect();
    meta.push(("order".into(), order.join(",").into()));
    meta.push(("reversed_order_consistent".into(), report.consistent.into()));
    meta.push(("max_amplitude_difference".into(), report.max_amplitude_difference.into()));
    let total: f64 = branches.iter().map(|b| b.weight).sum();
    let violation = if !report.consistent {
        Some("branch set depends on premeasurement order".to_string())
    } else if (total - 1.0).abs() >= TOL {
        Some(format!("branch weights sum to {total}"))
    } else {
        None
    };
    Ok((table, violation))
}

/// Runs the configured experiment and serializes its table.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let mut meta = base_meta(config);
    let (table, violation) = match &config.params {
        Params::Epr(p) => run_epr(p, &mut meta).map_err(lib_err)?,
        Params::Eraser(p) => run_eraser(p, &mut meta).map_err(lib_err)?,
        Params::Wheeler(p) => run_wheeler(p, &mut meta).map_err(lib_err)?,
        Params::Orderprop(p) => run_orderprop(p, config.seed, &mut meta).map_err(lib_err)?,
        Params::Everett(p) => run_everett(p, &mut meta)?,
    };
    Ok(RunOutput {
        text: emit_table(&table, config.format, &meta)?,
        violation,
    })
}

/// Runs, writes the output (file or stdout) and returns the exit status.
pub fn execute(config: &RunConfig) -> u8 {
    let result = run(config).and_then(|out| {
        match &config.output {
            Some(path) => fs::write(path, &out.text)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
            None => print!("{}", out.text),
        }
        match out.violation {
            Some(v) => Err(CliError::Invariant(v)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qorder: {e}");
            e.exit_code()
        }
    }
}
