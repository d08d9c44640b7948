//! Born rule, collapse, conditional probabilities and sequential joint
//! probabilities for arbitrary measurement schedules.

use std::sync::Arc;

use crate::qcore::{lift, Ket, Projector, ProjectiveFamily, StateVector, C64};
use crate::{Error, Result, TOL};

/// Entries below this are stored as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-15;

/// Outcome `outcome` of `family`, measured on subsystem `slot`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementEvent {
    slot: usize,
    family: Arc<ProjectiveFamily>,
    outcome: usize,
}

impl MeasurementEvent {
    pub fn new(slot: usize, family: Arc<ProjectiveFamily>, outcome: usize) -> Result<Self> {
        if outcome >= family.len() {
            return Err(Error::OutcomeOutOfRange {
                outcome,
                size: family.len(),
            });
        }
        Ok(Self {
            slot,
            family,
            outcome,
        })
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn family(&self) -> &Arc<ProjectiveFamily> {
        &self.family
    }

    pub fn outcome(&self) -> usize {
        self.outcome
    }

    pub fn local_projector(&self) -> &Projector {
        &self.family.projectors()[self.outcome]
    }

    /// The event's projector on the full space `dims`.
    pub fn lifted(&self, dims: &[usize]) -> Result<Projector> {
        lift(self.local_projector(), dims, self.slot)
    }
}

/// Events in global time order, earliest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    events: Vec<MeasurementEvent>,
}

impl Schedule {
    pub fn new(events: Vec<MeasurementEvent>) -> Self {
        Self { events }
    }

    pub fn events(&self) -> &[MeasurementEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

impl FromIterator<MeasurementEvent> for Schedule {
    fn from_iter<I: IntoIterator<Item = MeasurementEvent>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// `⟨s|P|s⟩` for a projector already lifted onto the state's space.
pub fn born_probability(s: &StateVector, p: &Projector) -> Result<f64> {
    let projected = p.apply(s.as_ket())?;
    let expectation = s.as_ket().inner(&projected)?;
    if expectation.im.abs() > TOL {
        return Err(Error::NonRealProbability(expectation.im));
    }
    Ok(expectation.re.max(0.0))
}

/// `P|s⟩` renormalized.
pub fn collapse(s: &StateVector, p: &Projector) -> Result<StateVector> {
    let prob = born_probability(s, p)?;
    if prob <= TOL {
        return Err(Error::ImpossibleOutcome(prob));
    }
    p.apply(s.as_ket())?.normalize()
}

/// Probability of `target` in the state left behind after `given` occurred.
pub fn conditional_probability(
    s: &StateVector,
    target: &MeasurementEvent,
    given: &MeasurementEvent,
) -> Result<f64> {
    let collapsed = collapse(s, &given.lifted(s.dims())?)?;
    born_probability(&collapsed, &target.lifted(s.dims())?)
}

/// `P_n ⋯ P_2 P_1 |s⟩`, earliest event applied first.
pub fn project_chain(s: &StateVector, schedule: &Schedule) -> Result<Ket> {
    let mut ket = s.as_ket().clone();
    for event in schedule.events() {
        ket = event.lifted(s.dims())?.apply(&ket)?;
    }
    Ok(ket)
}

/// Probability that the schedule's events all occur, in order.
///
/// Defined as `‖P_n ⋯ P_1 |s⟩‖²`, which is nonnegative even when events on
/// the same subsystem do not commute.
pub fn joint_probability(s: &StateVector, schedule: &Schedule) -> Result<f64> {
    Ok(project_chain(s, schedule)?.norm_sqr())
}

/// The literal expectation `⟨s|P_1 P_2 ⋯ P_n|s⟩` with the earliest event's
/// projector leftmost.
///
/// Agrees with [`joint_probability`] when all projectors commute; otherwise
/// it can be complex. Exposed for comparison only.
pub fn product_expectation(s: &StateVector, schedule: &Schedule) -> Result<C64> {
    let mut ket = s.as_ket().clone();
    for event in schedule.events().iter().rev() {
        ket = event.lifted(s.dims())?.apply(&ket)?;
    }
    s.as_ket().inner(&ket)
}

/// Probabilities over every outcome tuple of a sequence of measurements.
///
/// Stored densely in row-major order over `shape` (last measurement fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    shape: Vec<usize>,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn from_dense(shape: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if probs.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: probs.len(),
            });
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0 + TOL).contains(*p)) {
            return Err(Error::InvalidConfig(format!("probability {p} outside [0, 1]")));
        }
        let probs = probs
            .into_iter()
            .map(|p| if p < ZERO_CUTOFF { 0.0 } else { p })
            .collect();
        Ok(Self { shape, probs })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, outcomes: &[usize]) -> Option<f64> {
        crate::qcore::flat_index(&self.shape, outcomes)
            .ok()
            .map(|i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, &p)| (crate::qcore::multi_index(&self.shape, i), p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Sums out the given tuple positions, keeping the rest in order.
    pub fn marginal(&self, keep: &[usize]) -> Result<JointDistribution> {
        if let Some(&k) = keep.iter().find(|&&k| k >= self.shape.len()) {
            return Err(Error::SlotOutOfRange {
                slot: k,
                num_slots: self.shape.len(),
            });
        }
        let shape: Vec<usize> = keep.iter().map(|&k| self.shape[k]).collect();
        let mut probs = vec![0.0; shape.iter().product()];
        for (outcomes, p) in self.iter() {
            let kept: Vec<usize> = keep.iter().map(|&k| outcomes[k]).collect();
            probs[crate::qcore::flat_index(&shape, &kept)?] += p;
        }
        JointDistribution::from_dense(shape, probs)
    }

    /// Drops the last measurement by summing over its outcomes.
    pub fn marginalize_last(&self) -> Result<JointDistribution> {
        let keep: Vec<usize> = (0..self.shape.len().saturating_sub(1)).collect();
        self.marginal(&keep)
    }

    pub fn max_abs_diff(&self, other: &JointDistribution) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Joint distribution of measuring each `(slot, family)` in the listed order.
pub fn joint_distribution(
    s: &StateVector,
    measurements: &[(usize, Arc<ProjectiveFamily>)],
) -> Result<JointDistribution> {
    let lifted: Vec<Vec<Projector>> = measurements
        .iter()
        .map(|(slot, family)| {
            family
                .projectors()
                .iter()
                .map(|p| lift(p, s.dims(), *slot))
                .collect()
        })
        .collect::<Result<_>>()?;
    let shape: Vec<usize> = measurements.iter().map(|(_, f)| f.len()).collect();
    let mut probs = Vec::with_capacity(shape.iter().product());
    descend(s.as_ket(), &lifted, &mut probs)?;
    JointDistribution::from_dense(shape, probs)
}

fn descend(ket: &Ket, remaining: &[Vec<Projector>], out: &mut Vec<f64>) -> Result<()> {
    match remaining.split_first() {
        None => out.push(ket.norm_sqr()),
        Some((family, rest)) => {
            for p in family {
                descend(&p.apply(ket)?, rest, out)?;
            }
        }
    }
    Ok(())
}

/// Both orders of a two-event history compared against the simultaneous
/// expectation `⟨s|P_A P_B|s⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesReport {
    /// `P(A|B) P(B)`
    pub a_given_b_times_b: f64,
    /// `P(B|A) P(A)`
    pub b_given_a_times_a: f64,
    /// `|α_IJ|²` generalized to `⟨s|P_A P_B|s⟩`.
    pub direct: f64,
    pub max_difference: f64,
    /// Set when either conditioning event has zero probability; the products
    /// are then taken as zero and the difference reported as zero.
    pub degenerate: bool,
}

pub fn bayes_symmetry_check(
    s: &StateVector,
    a: &MeasurementEvent,
    b: &MeasurementEvent,
) -> Result<BayesReport> {
    if a.slot() == b.slot() {
        return Err(Error::InvalidSchedule(
            "Bayes symmetry needs events on different slots".into(),
        ));
    }
    let pa_lift = a.lifted(s.dims())?;
    let pb_lift = b.lifted(s.dims())?;
    let prob_a = born_probability(s, &pa_lift)?;
    let prob_b = born_probability(s, &pb_lift)?;

    let both = pa_lift.operator().compose(pb_lift.operator())?;
    let direct = s.as_ket().inner(&both.apply(s.as_ket())?)?.re.max(0.0);

    if prob_a <= TOL || prob_b <= TOL {
        return Ok(BayesReport {
            a_given_b_times_b: 0.0,
            b_given_a_times_a: 0.0,
            direct,
            max_difference: 0.0,
            degenerate: true,
        });
    }
    let forward = conditional_probability(s, a, b)? * prob_b;
    let backward = conditional_probability(s, b, a)? * prob_a;
    let max_difference = [
        (forward - backward).abs(),
        (forward - direct).abs(),
        (backward - direct).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(BayesReport {
        a_given_b_times_b: forward,
        b_given_a_times_a: backward,
        direct,
        max_difference,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{family_from_basis, make_real_state, tensor_state, StateVector};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn z() -> Arc<ProjectiveFamily> {
        Arc::new(ProjectiveFamily::computational(2).unwrap())
    }

    fn x() -> Arc<ProjectiveFamily> {
        let h = FRAC_1_SQRT_2;
        let r = |v: f64| C64::new(v, 0.0);
        Arc::new(family_from_basis(&[vec![r(h), r(h)], vec![r(h), r(-h)]]).unwrap())
    }

    fn ev(slot: usize, fam: &Arc<ProjectiveFamily>, outcome: usize) -> MeasurementEvent {
        MeasurementEvent::new(slot, fam.clone(), outcome).unwrap()
    }

    fn singlet() -> StateVector {
        make_real_state(&[2, 2], &[0.0, 1.0, -1.0, 0.0]).unwrap()
    }

    // √0.5|00⟩ + √0.3|01⟩ + √0.2|10⟩
    fn skewed() -> StateVector {
        make_real_state(&[2, 2], &[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt(), 0.0]).unwrap()
    }

    #[test]
    fn born_on_singlet_and_product() {
        let up_a = ev(0, &z(), 0).lifted(&[2, 2]).unwrap();
        assert!((born_probability(&singlet(), &up_a).unwrap() - 0.5).abs() < 1e-15);
        let updown = StateVector::basis(&[2, 2], &[0, 1]).unwrap();
        assert_eq!(born_probability(&updown, &up_a).unwrap(), 1.0);
    }

    #[test]
    fn born_marginal_on_skewed_state() {
        let p = ev(0, &z(), 0).lifted(&[2, 2]).unwrap();
        // Σ_j |α_0j|² = 0.5 + 0.3
        assert!((born_probability(&skewed(), &p).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn born_rejects_mismatched_dims() {
        let p = ev(0, &z(), 0).lifted(&[2, 2]).unwrap();
        let s = StateVector::basis(&[2], &[0]).unwrap();
        assert!(born_probability(&s, &p).is_err());
    }

    #[test]
    fn collapse_singlet_on_b_down() {
        let p = ev(1, &z(), 1).lifted(&[2, 2]).unwrap();
        let post = collapse(&singlet(), &p).unwrap();
        let expected = StateVector::basis(&[2, 2], &[0, 1]).unwrap();
        assert!(post.as_ket().max_abs_diff(expected.as_ket()).unwrap() < 1e-15);
    }

    #[test]
    fn collapse_on_impossible_outcome() {
        let updown = StateVector::basis(&[2, 2], &[0, 1]).unwrap();
        let p = ev(1, &z(), 0).lifted(&[2, 2]).unwrap();
        assert!(matches!(collapse(&updown, &p), Err(Error::ImpossibleOutcome(_))));
    }

    #[test]
    fn conditional_examples() {
        let s = singlet();
        let p = conditional_probability(&s, &ev(0, &z(), 0), &ev(1, &z(), 1)).unwrap();
        assert!((p - 1.0).abs() < 1e-15);

        // |α_01|² / (|α_01|² + |α_11|²) = 0.3 / 0.3
        let p = conditional_probability(&skewed(), &ev(0, &z(), 0), &ev(1, &z(), 1)).unwrap();
        assert!((p - 1.0).abs() < 1e-12);

        let updown = StateVector::basis(&[2, 2], &[0, 1]).unwrap();
        assert!(matches!(
            conditional_probability(&updown, &ev(0, &z(), 0), &ev(1, &z(), 0)),
            Err(Error::ImpossibleOutcome(_))
        ));
    }

    #[test]
    fn conditional_on_product_state_is_unconditional() {
        let a = make_real_state(&[2], &[0.6, 0.8]).unwrap();
        let b = make_real_state(&[2], &[1.0, 2.0]).unwrap();
        let s = tensor_state(&a, &b);
        for i in 0..2 {
            let marginal = born_probability(&s, &ev(0, &z(), i).lifted(&[2, 2]).unwrap()).unwrap();
            for j in 0..2 {
                let cond = conditional_probability(&s, &ev(0, &z(), i), &ev(1, &z(), j)).unwrap();
                assert!((cond - marginal).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_probability_examples() {
        let s = singlet();
        let sched: Schedule = [ev(0, &z(), 0), ev(1, &z(), 0)].into_iter().collect();
        assert!(joint_probability(&s, &sched).unwrap() < 1e-30);
        let sched: Schedule = [ev(0, &z(), 0), ev(1, &z(), 1)].into_iter().collect();
        assert!((joint_probability(&s, &sched).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn same_slot_order_matters() {
        let up = StateVector::basis(&[2], &[0]).unwrap();
        let z_then_x: Schedule = [ev(0, &z(), 0), ev(0, &x(), 0)].into_iter().collect();
        let x_then_z: Schedule = [ev(0, &x(), 0), ev(0, &z(), 0)].into_iter().collect();
        assert!((joint_probability(&up, &z_then_x).unwrap() - 0.5).abs() < 1e-15);
        assert!((joint_probability(&up, &x_then_z).unwrap() - 0.25).abs() < 1e-15);
        // The literal product form is the same for both and is not 0.25.
        let lit = product_expectation(&up, &x_then_z).unwrap();
        assert!((lit.re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singlet_distribution() {
        let d = joint_distribution(&singlet(), &[(0, z()), (1, z())]).unwrap();
        assert_eq!(d.shape(), &[2, 2]);
        assert_eq!(d.get(&[0, 0]), Some(0.0));
        assert_eq!(d.get(&[1, 1]), Some(0.0));
        assert!((d.get(&[0, 1]).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.get(&[1, 0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((d.total() - 1.0).abs() < TOL);
    }

    #[test]
    fn product_state_distribution_factorizes() {
        let a = make_real_state(&[2], &[0.6, 0.8]).unwrap();
        let b = make_real_state(&[2], &[1.0, 2.0]).unwrap();
        let s = tensor_state(&a, &b);
        let d = joint_distribution(&s, &[(0, z()), (1, x())]).unwrap();
        let ma = d.marginal(&[0]).unwrap();
        let mb = d.marginal(&[1]).unwrap();
        for (outcomes, p) in d.iter() {
            let q = ma.probs()[outcomes[0]] * mb.probs()[outcomes[1]];
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn distribution_entries_below_cutoff_are_zero() {
        let d = JointDistribution::from_dense(vec![2], vec![1e-17, 1.0]).unwrap();
        assert_eq!(d.probs(), &[0.0, 1.0]);
        assert!(JointDistribution::from_dense(vec![2], vec![1.5, 0.0]).is_err());
    }

    #[test]
    fn bayes_on_singlet() {
        let r = bayes_symmetry_check(&singlet(), &ev(0, &z(), 0), &ev(1, &z(), 1)).unwrap();
        assert!((r.a_given_b_times_b - 0.5).abs() < 1e-15);
        assert!((r.b_given_a_times_a - 0.5).abs() < 1e-15);
        assert!((r.direct - 0.5).abs() < 1e-15);
        assert!(!r.degenerate);
    }

    #[test]
    fn bayes_on_skewed_state() {
        let r = bayes_symmetry_check(&skewed(), &ev(0, &z(), 0), &ev(1, &z(), 1)).unwrap();
        for v in [r.a_given_b_times_b, r.b_given_a_times_a, r.direct] {
            assert!((v - 0.3).abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn bayes_degenerate_and_same_slot() {
        let updown = StateVector::basis(&[2, 2], &[0, 1]).unwrap();
        let r = bayes_symmetry_check(&updown, &ev(0, &z(), 0), &ev(1, &z(), 0)).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.max_difference, 0.0);
        assert!(bayes_symmetry_check(&updown, &ev(0, &z(), 0), &ev(0, &z(), 1)).is_err());
    }

    #[test]
    fn event_outcome_range_checked() {
        assert!(matches!(
            MeasurementEvent::new(0, z(), 2),
            Err(Error::OutcomeOutOfRange { outcome: 2, size: 2 })
        ));
    }
}
