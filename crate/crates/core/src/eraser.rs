//! Delayed-choice quantum eraser.
//!
//! The pump photon passes a double slit (paths U and L), each path produces
//! an entangled signal/idler pair, and the idler is routed through three
//! beamsplitters to four detectors. D3 and D4 sit behind the which-path
//! beamsplitters; D1 and D2 sit behind the eraser beamsplitter that mixes
//! the two arms. The signal photon lands on a movable screen detector.
//!
//! The joint state lives on dims `[2, 4]`: signal path (U, L) then idler
//! detector channel (D1..D4). Outcome tuples are ordered (signal, idler).

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::measure::{
    collapse, joint_distribution, joint_probability, JointDistribution, MeasurementEvent,
    Schedule,
};
use crate::pattern::{validate_grid, FringePattern};
use crate::qcore::{
    c, family_from_basis, lift, LinearOperator, ProjectiveFamily, StateVector, C64,
};
use crate::{Error, Result, TOL};

pub const SIGNAL_SLOT: usize = 0;
pub const IDLER_SLOT: usize = 1;
pub const DIMS: [usize; 2] = [2, 4];

/// Signal path index of the upper slit.
pub const UPPER: usize = 0;
/// Signal path index of the lower slit.
pub const LOWER: usize = 1;

/// How beamsplitter and mirror reflections are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitMode {
    /// Reflection phases dropped: every amplitude is real and positive, and
    /// the two idler arms are not orthogonal.
    Paper,
    /// Symmetric 50/50 beamsplitters with a quarter-wave phase `i` on every
    /// reflection; the idler network is unitary.
    #[default]
    Unitary,
}

impl CircuitMode {
    pub fn reflection_phase(self) -> C64 {
        match self {
            CircuitMode::Paper => c(1.0, 0.0),
            CircuitMode::Unitary => c(0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CircuitMode::Paper => "paper",
            CircuitMode::Unitary => "unitary",
        }
    }
}

impl fmt::Display for CircuitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Detector {
    D1,
    D2,
    D3,
    D4,
}

impl Detector {
    pub const ALL: [Detector; 4] = [Detector::D1, Detector::D2, Detector::D3, Detector::D4];

    /// Channel index on the idler slot.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EraserConfig {
    /// Wavenumber, radians per length unit.
    pub k: f64,
    /// Slit separation, length units.
    pub d: f64,
    pub theta_grid: Vec<f64>,
    pub mode: CircuitMode,
}

impl EraserConfig {
    pub fn new(k: f64, d: f64, theta_grid: Vec<f64>, mode: CircuitMode) -> Result<Self> {
        let cfg = Self {
            k,
            d,
            theta_grid,
            mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!("k must be positive, got {}", self.k)));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidConfig(format!("d must be positive, got {}", self.d)));
        }
        validate_grid(&self.theta_grid)
    }

    /// Relative phase `k d sin θ` between the two slit contributions.
    pub fn phase(&self, theta: f64) -> f64 {
        self.k * self.d * theta.sin()
    }
}

// Optical modes of the idler network. Modes 0 and 1 feed the eraser
// beamsplitter and end at D1/D2; modes 2 and 3 are the which-path ports of
// the L and U arms and end at D3/D4.
const MODE_ERASE_A: usize = 0;
const MODE_ERASE_B: usize = 1;
const MODE_L: usize = 2;
const MODE_U: usize = 3;

fn beamsplitter(p: usize, q: usize, reflection: C64) -> DMatrix<C64> {
    let t = c(FRAC_1_SQRT_2, 0.0);
    let r = reflection * FRAC_1_SQRT_2;
    let mut m = DMatrix::<C64>::identity(4, 4);
    m[(p, p)] = t;
    m[(q, q)] = t;
    m[(p, q)] = r;
    m[(q, p)] = r;
    m
}

fn mirror(mode: usize, phase: C64) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::identity(4, 4);
    m[(mode, mode)] = phase;
    m
}

/// Mode-space transfer matrix of the idler optics; column `j` is where
/// light entering mode `j` ends up, row `i` is detector `D(i+1)`.
///
/// The U arm reflects off BS_A and one mirror toward the eraser
/// beamsplitter BS_C; the L arm reflects off BS_B straight onto BS_C. With
/// quarter-wave reflections this leaves the two arms in phase at D1 and in
/// antiphase at D2.
pub fn idler_network(mode: CircuitMode) -> LinearOperator {
    let r = mode.reflection_phase();
    let bs_a = beamsplitter(MODE_U, MODE_ERASE_A, r);
    let bs_b = beamsplitter(MODE_L, MODE_ERASE_B, r);
    let m = mirror(MODE_ERASE_A, r);
    let bs_c = beamsplitter(MODE_ERASE_A, MODE_ERASE_B, r);
    let total = bs_c * m * bs_b * bs_a;
    LinearOperator::new(&[4], total).expect("4x4 finite network")
}

/// Idler amplitudes per detector for the idler photon born on `path`.
pub fn idler_branch(mode: CircuitMode, path: usize) -> [C64; 4] {
    let net = idler_network(mode);
    let input = if path == UPPER { MODE_U } else { MODE_L };
    std::array::from_fn(|det| net.entry(det, input))
}

/// Entangled signal/idler state after the idler optics.
#[derive(Debug, Clone, PartialEq)]
pub struct EraserState {
    pub mode: CircuitMode,
    pub state: StateVector,
}

pub fn build_state(mode: CircuitMode) -> Result<EraserState> {
    // (|U⟩|U_idler⟩ + |L⟩|L_idler⟩)/√2, then route each idler arm.
    let mut amps = Vec::with_capacity(8);
    for path in [UPPER, LOWER] {
        amps.extend(idler_branch(mode, path).iter().map(|a| a * FRAC_1_SQRT_2));
    }
    let state = crate::qcore::make_state(&DIMS, &amps)?;
    Ok(EraserState { mode, state })
}

fn idler_family() -> Arc<ProjectiveFamily> {
    Arc::new(ProjectiveFamily::computational(4).expect("computational basis"))
}

/// Detector click probabilities D1..D4.
pub fn idler_marginals(state: &EraserState) -> Result<JointDistribution> {
    joint_distribution(&state.state, &[(IDLER_SLOT, idler_family())])
}

/// Signal-screen intensity from path amplitudes `(c_U, c_L)`.
fn screen_intensity(c_upper: C64, c_lower: C64, phase: f64) -> f64 {
    let half = 0.5 * phase;
    (c_upper * C64::from_polar(1.0, half) + c_lower * C64::from_polar(1.0, -half)).norm_sqr()
}

/// Signal pattern given that the idler clicked at `detector`.
pub fn conditional_pattern(
    state: &EraserState,
    detector: Detector,
    config: &EraserConfig,
) -> Result<FringePattern> {
    config.validate()?;
    let family = idler_family();
    let p = lift(&family.projectors()[detector.index()], &DIMS, IDLER_SLOT)?;
    let collapsed = collapse(&state.state, &p)?;
    let c_upper = collapsed.amplitude(&[UPPER, detector.index()])?;
    let c_lower = collapsed.amplitude(&[LOWER, detector.index()])?;
    let raw = config
        .theta_grid
        .iter()
        .map(|&t| screen_intensity(c_upper, c_lower, config.phase(t)))
        .collect();
    FringePattern::from_raw(config.theta_grid.clone(), raw)
}

/// Click/no-click family of a point detector at screen angle `theta`.
///
/// Outcome 0 projects onto the normalized screen kernel `κ_θ`, chosen so
/// that `⟨κ_θ|ψ⟩ ∝ c_U e^{iφ/2} + c_L e^{−iφ/2}` with `φ = k d sin θ`.
pub fn screen_family(theta: f64, config: &EraserConfig) -> Result<ProjectiveFamily> {
    let half = 0.5 * config.phase(theta);
    let a = C64::from_polar(FRAC_1_SQRT_2, -half);
    let b = C64::from_polar(FRAC_1_SQRT_2, half);
    family_from_basis(&[vec![a, b], vec![a, -b]])
}

/// Which subsystem is detected first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionOrder {
    SignalFirst,
    IdlerFirst,
}

/// Joint table over (screen angle, idler detector).
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenTable {
    pub theta: Vec<f64>,
    /// `joint[i][k]`: probability of a screen click at `theta[i]` together
    /// with detector `k`, normalized so the whole table sums to 1.
    pub joint: Vec<[f64; 4]>,
    /// `conditional[i][k]`: conditional pattern of detector `k` (grid-mean 1),
    /// zero for detectors that never click.
    pub conditional: Vec<[f64; 4]>,
}

impl ScreenTable {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.joint.iter().flatten().sum()
    }

    /// Screen distribution with the idler ignored, scaled to grid-mean 1.
    pub fn signal_marginal(&self) -> Result<FringePattern> {
        let raw = self.joint.iter().map(|row| row.iter().sum()).collect();
        FringePattern::from_raw(self.theta.clone(), raw)
    }

    /// Sum of the listed detector columns, scaled to grid-mean 1.
    pub fn column_sum(&self, detectors: &[Detector]) -> Result<FringePattern> {
        let raw = self
            .joint
            .iter()
            .map(|row| detectors.iter().map(|d| row[d.index()]).sum())
            .collect();
        FringePattern::from_raw(self.theta.clone(), raw)
    }

    pub fn max_abs_diff(&self, other: &ScreenTable) -> f64 {
        let cells = |t: &ScreenTable| {
            t.joint
                .iter()
                .chain(&t.conditional)
                .flatten()
                .copied()
                .collect::<Vec<f64>>()
        };
        let (a, b) = (cells(self), cells(other));
        if a.len() != b.len() || self.theta != other.theta {
            return f64::INFINITY;
        }
        a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }
}

/// Joint screen × detector table evaluated with the given detection order.
pub fn screen_table(
    state: &EraserState,
    config: &EraserConfig,
    order: DetectionOrder,
) -> Result<ScreenTable> {
    config.validate()?;
    let idler = idler_family();
    let mut raw = Vec::with_capacity(config.theta_grid.len());
    for &theta in &config.theta_grid {
        let screen = Arc::new(screen_family(theta, config)?);
        let click = MeasurementEvent::new(SIGNAL_SLOT, screen, 0)?;
        let mut row = [0.0; 4];
        for det in Detector::ALL {
            let idler_click = MeasurementEvent::new(IDLER_SLOT, idler.clone(), det.index())?;
            let schedule = match order {
                DetectionOrder::SignalFirst => Schedule::new(vec![click.clone(), idler_click]),
                DetectionOrder::IdlerFirst => Schedule::new(vec![idler_click, click.clone()]),
            };
            row[det.index()] = joint_probability(&state.state, &schedule)?;
        }
        raw.push(row);
    }
    let total: f64 = raw.iter().flatten().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidConfig("screen grid collects no probability".into()));
    }
    let joint = raw
        .iter()
        .map(|row| row.map(|p| p / total))
        .collect();

    let marginals = idler_marginals(state)?;
    let mut conditional = vec![[0.0; 4]; config.theta_grid.len()];
    for det in Detector::ALL {
        if marginals.probs()[det.index()] <= TOL {
            continue;
        }
        let pattern = conditional_pattern(state, det, config)?;
        for (row, v) in conditional.iter_mut().zip(pattern.intensity) {
            row[det.index()] = v;
        }
    }
    Ok(ScreenTable {
        theta: config.theta_grid.clone(),
        joint,
        conditional,
    })
}

/// Joint screen × detector table, signal detected first as in the
/// experiment.
pub fn joint_screen_distribution(state: &EraserState, config: &EraserConfig) -> Result<ScreenTable> {
    screen_table(state, config, DetectionOrder::SignalFirst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub signal_first: ScreenTable,
    pub idler_first: ScreenTable,
    pub max_difference: f64,
}

/// Computes the joint table with both detection orders and compares them.
pub fn schedule_equivalence(state: &EraserState, config: &EraserConfig) -> Result<EquivalenceReport> {
    let signal_first = screen_table(state, config, DetectionOrder::SignalFirst)?;
    let idler_first = screen_table(state, config, DetectionOrder::IdlerFirst)?;
    let max_difference = signal_first.max_abs_diff(&idler_first);
    Ok(EquivalenceReport {
        signal_first,
        idler_first,
        max_difference,
    })
}
