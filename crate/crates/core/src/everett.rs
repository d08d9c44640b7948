//! Premeasurement and a branch ledger.
//!
//! A premeasurement entangles a system slot with a freshly appended pointer
//! subsystem: `|ψ⟩|ready⟩ ↦ Σ_i (P_i|ψ⟩)|i⟩`. Pointer states are perfectly
//! orthogonal and never acted on again, so each pointer-basis component of
//! the global state is a branch whose Born weight is fixed from then on.
//! There is no dynamics between events; each premeasurement is an
//! instantaneous isometry.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::measure::ZERO_CUTOFF;
use crate::qcore::{lift, multi_index, Ket, LinearOperator, ProjectiveFamily, StateVector, C64};
use crate::{Error, Result, TOL};

/// Which (observer, symbol) readings a branch carries, sorted by observer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointerLabel(Vec<(String, String)>);

impl PointerLabel {
    pub fn new(mut readings: Vec<(String, String)>) -> Result<Self> {
        readings.sort();
        if readings.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidLedger("observer ids must be unique within a label".into()));
        }
        Ok(Self(readings))
    }

    pub fn readings(&self) -> &[(String, String)] {
        &self.0
    }

    pub fn reading(&self, observer: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(o, _)| o == observer)
            .map(|(_, s)| s.as_str())
    }
}

impl fmt::Display for PointerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(o, s)| format!("{o}:{s}")).collect();
        f.write_str(&parts.join("|"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub label: PointerLabel,
    pub amplitude: C64,
    /// `|amplitude|²`
    pub weight: f64,
}

/// A pointer subsystem and what its basis states read.
#[derive(Debug, Clone, PartialEq)]
pub struct Pointer {
    pub slot: usize,
    pub observer: String,
    pub symbols: Vec<String>,
}

/// `|ψ⟩ ↦ Σ_i (P_i|ψ⟩) ⊗ |i⟩` with the pointer appended as the last slot.
///
/// Linear in `ket`; an isometry because the family is complete.
pub fn premeasure_ket(ket: &Ket, slot: usize, family: &ProjectiveFamily) -> Result<Ket> {
    let outcomes = family.len();
    let projected: Vec<Ket> = family
        .projectors()
        .iter()
        .map(|p| lift(p, ket.dims(), slot)?.apply(ket))
        .collect::<Result<_>>()?;
    let mut amps = vec![C64::new(0.0, 0.0); ket.len() * outcomes];
    for (i, component) in projected.iter().enumerate() {
        for (flat, z) in component.amps().iter().enumerate() {
            amps[flat * outcomes + i] = *z;
        }
    }
    let dims = [ket.dims(), &[outcomes]].concat();
    Ket::new(&dims, amps)
}

/// Premeasures `slot` of `s` with `family`, appending one pointer slot.
pub fn premeasure(s: &StateVector, slot: usize, family: &ProjectiveFamily) -> Result<StateVector> {
    Ok(StateVector::from_isometry_image(premeasure_ket(s.as_ket(), slot, family)?))
}

fn canonical_order(dims_len: usize, pointers: &[Pointer]) -> Vec<usize> {
    // System slots in place, then pointers sorted by observer.
    let pointer_slots: BTreeSet<usize> = pointers.iter().map(|p| p.slot).collect();
    let mut sorted: Vec<&Pointer> = pointers.iter().collect();
    sorted.sort_by(|a, b| a.observer.cmp(&b.observer));
    (0..dims_len)
        .filter(|s| !pointer_slots.contains(s))
        .chain(sorted.iter().map(|p| p.slot))
        .collect()
}

fn check_pointers(s: &StateVector, pointers: &[Pointer]) -> Result<()> {
    let mut seen_slots = BTreeSet::new();
    let mut seen_observers = BTreeSet::new();
    for p in pointers {
        let dim = *s.dims().get(p.slot).ok_or(Error::SlotOutOfRange {
            slot: p.slot,
            num_slots: s.dims().len(),
        })?;
        if dim != p.symbols.len() {
            return Err(Error::InvalidLedger(format!(
                "pointer of {} has {} symbols for a {dim}-level slot",
                p.observer,
                p.symbols.len()
            )));
        }
        if !seen_slots.insert(p.slot) || !seen_observers.insert(p.observer.as_str()) {
            return Err(Error::InvalidLedger(
                "pointer slots and observer ids must be unique".into(),
            ));
        }
    }
    Ok(())
}

/// Every pointer reading tuple with its component of `s`, in canonical
/// layout (system slots, then pointers by observer id).
fn pointer_components(s: &StateVector, pointers: &[Pointer]) -> Result<Vec<(PointerLabel, Ket)>> {
    check_pointers(s, pointers)?;
    let order = canonical_order(s.dims().len(), pointers);
    let readings_space: Vec<usize> = pointers.iter().map(|p| p.symbols.len()).collect();
    let total: usize = readings_space.iter().product();
    // Pointer projectors are diagonal 0/1, so each component is a masked copy.
    let mut buckets = vec![vec![C64::new(0.0, 0.0); s.len()]; total];
    for (flat, z) in s.amps().iter().enumerate() {
        let index = multi_index(s.dims(), flat);
        let reading = pointers
            .iter()
            .fold(0, |acc, p| acc * p.symbols.len() + index[p.slot]);
        buckets[reading][flat] = *z;
    }
    let mut out: Vec<(PointerLabel, Ket)> = Vec::with_capacity(total);
    for (flat, amps) in buckets.into_iter().enumerate() {
        let readings = multi_index(&readings_space, flat);
        let label = PointerLabel::new(
            pointers
                .iter()
                .zip(&readings)
                .map(|(p, &r)| (p.observer.clone(), p.symbols[r].clone()))
                .collect(),
        )?;
        out.push((label, Ket::new(s.dims(), amps)?.permute_slots(&order)?));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Branch amplitude: the component's norm, phased like its first entry
/// that is not negligible.
fn branch_amplitude(component: &Ket) -> C64 {
    let norm = component.norm_sqr().sqrt();
    let largest = component.amps().iter().map(|z| z.norm()).fold(0.0, f64::max);
    match component.amps().iter().find(|z| z.norm() >= 1e-8 * largest) {
        Some(z) if largest > 0.0 => z / z.norm() * norm,
        _ => C64::new(0.0, 0.0),
    }
}

/// Branches of `s` with respect to the given pointers, sorted by label.
/// Components with weight below the zero cutoff are omitted.
pub fn branch_decompose(s: &StateVector, pointers: &[Pointer]) -> Result<Vec<Branch>> {
    Ok(pointer_components(s, pointers)?
        .into_iter()
        .filter_map(|(label, component)| {
            let weight = component.norm_sqr();
            (weight > ZERO_CUTOFF).then(|| Branch {
                label,
                amplitude: branch_amplitude(&component),
                weight,
            })
        })
        .collect())
}

/// Weight of every pointer reading tuple, including empty ones.
pub fn pointer_weights(s: &StateVector, pointers: &[Pointer]) -> Result<Vec<(PointerLabel, f64)>> {
    Ok(pointer_components(s, pointers)?
        .into_iter()
        .map(|(label, component)| (label, component.norm_sqr()))
        .collect())
}

/// One observer's premeasurement of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PremeasureStep {
    pub slot: usize,
    pub family: Arc<ProjectiveFamily>,
    pub observer: String,
    pub symbols: Vec<String>,
}

impl PremeasureStep {
    /// Step whose pointer symbols are the outcome indices.
    pub fn indexed(slot: usize, family: Arc<ProjectiveFamily>, observer: &str) -> Self {
        let symbols = (0..family.len()).map(|i| i.to_string()).collect();
        Self {
            slot,
            family,
            observer: observer.to_string(),
            symbols,
        }
    }
}

/// A global state together with the pointers appended so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchLedger {
    pub state: StateVector,
    pub pointers: Vec<Pointer>,
}

impl BranchLedger {
    pub fn new(state: StateVector) -> Self {
        Self {
            state,
            pointers: Vec::new(),
        }
    }

    fn is_pointer_slot(&self, slot: usize) -> bool {
        self.pointers.iter().any(|p| p.slot == slot)
    }

    pub fn premeasure(&self, step: &PremeasureStep) -> Result<Self> {
        if self.is_pointer_slot(step.slot) {
            return Err(Error::PointerSlot(step.slot));
        }
        if self.pointers.iter().any(|p| p.observer == step.observer) {
            return Err(Error::InvalidLedger(format!(
                "observer {} already holds a pointer",
                step.observer
            )));
        }
        if step.symbols.len() != step.family.len() {
            return Err(Error::InvalidLedger(format!(
                "{} symbols for a family of {} outcomes",
                step.symbols.len(),
                step.family.len()
            )));
        }
        let state = premeasure(&self.state, step.slot, &step.family)?;
        let mut pointers = self.pointers.clone();
        pointers.push(Pointer {
            slot: state.dims().len() - 1,
            observer: step.observer.clone(),
            symbols: step.symbols.clone(),
        });
        Ok(Self { state, pointers })
    }

    pub fn run(state: StateVector, steps: &[PremeasureStep]) -> Result<Self> {
        steps
            .iter()
            .try_fold(Self::new(state), |ledger, step| ledger.premeasure(step))
    }

    pub fn branches(&self) -> Result<Vec<Branch>> {
        branch_decompose(&self.state, &self.pointers)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub first: Vec<Branch>,
    pub second: Vec<Branch>,
    pub labels_match: bool,
    /// Largest `|a − g·b|` over branches after removing the best global phase `g`.
    pub max_amplitude_difference: f64,
    pub consistent: bool,
}

fn same_events(first: &[PremeasureStep], second: &[PremeasureStep]) -> Result<()> {
    if first.len() != second.len() {
        return Err(Error::InvalidSchedule("orders contain different numbers of events".into()));
    }
    let mut observers = BTreeSet::new();
    for step in first {
        if !observers.insert(step.observer.as_str()) {
            return Err(Error::InvalidSchedule(format!(
                "observer {} appears twice",
                step.observer
            )));
        }
        if !second.contains(step) {
            return Err(Error::InvalidSchedule(format!(
                "event of {} missing from the second order",
                step.observer
            )));
        }
    }
    Ok(())
}

/// Runs the same premeasurements in two orders and compares the branches.
pub fn order_independence(
    s: &StateVector,
    first: &[PremeasureStep],
    second: &[PremeasureStep],
) -> Result<OrderReport> {
    same_events(first, second)?;
    let a = BranchLedger::run(s.clone(), first)?.branches()?;
    let b = BranchLedger::run(s.clone(), second)?.branches()?;
    let labels_match =
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.label == y.label);
    let max_amplitude_difference = if labels_match {
        let phase = a
            .iter()
            .zip(&b)
            .max_by(|x, y| x.0.weight.total_cmp(&y.0.weight))
            .map(|(x, y)| {
                let ratio = x.amplitude / y.amplitude;
                ratio / ratio.norm()
            })
            .unwrap_or(C64::new(1.0, 0.0));
        a.iter()
            .zip(&b)
            .map(|(x, y)| (x.amplitude - phase * y.amplitude).norm())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    Ok(OrderReport {
        consistent: labels_match && max_amplitude_difference < TOL,
        first: a,
        second: b,
        labels_match,
        max_amplitude_difference,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub before: Vec<(PointerLabel, f64)>,
    pub after: Vec<(PointerLabel, f64)>,
    pub max_drift: f64,
}

/// Applies `unitary` to a non-pointer slot and checks that no branch weight moves.
pub fn branch_stability(
    ledger: &BranchLedger,
    unitary: &LinearOperator,
    slot: usize,
) -> Result<StabilityReport> {
    if ledger.is_pointer_slot(slot) {
        return Err(Error::PointerSlot(slot));
    }
    let defect = unitary.unitarity_defect();
    if defect > TOL {
        return Err(Error::NotUnitary(defect));
    }
    let lifted = unitary.lift(ledger.state.dims(), slot)?;
    let evolved = StateVector::from_isometry_image(lifted.apply(ledger.state.as_ket())?);
    let before = pointer_weights(&ledger.state, &ledger.pointers)?;
    let after = pointer_weights(&evolved, &ledger.pointers)?;
    let max_drift = before
        .iter()
        .zip(&after)
        .map(|((_, w0), (_, w1))| (w0 - w1).abs())
        .fold(0.0, f64::max);
    Ok(StabilityReport {
        before,
        after,
        max_drift,
    })
}
