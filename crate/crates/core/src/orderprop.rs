//! Exhaustive checks that reordering measurements across two subsystems
//! never changes a joint probability, plus the seeded random instances used
//! to drive them.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded through
//! `SeedableRng::seed_from_u64`; campaign trials draw from independent
//! streams of the campaign seed, so results do not depend on scheduling.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::measure::{joint_probability, MeasurementEvent, Schedule};
use crate::qcore::{
    family_from_basis, make_state, LinearOperator, ProjectiveFamily, StateVector, C64,
};
use crate::{Error, Result};

/// Name recorded in output metadata for reproducibility.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";

/// Largest total number of events accepted by [`check_interleavings`].
pub const MAX_EVENTS: usize = 12;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// State with i.i.d. standard-normal real and imaginary parts, normalized.
pub fn random_state(dims: &[usize], seed: u64) -> Result<StateVector> {
    let mut rng = rng_from_seed(seed);
    let len: usize = dims.iter().product();
    let raw: Vec<C64> = (0..len).map(|_| gaussian_complex(&mut rng)).collect();
    make_state(dims, &raw)
}

/// Haar-distributed unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary(dim: usize, seed: u64) -> Result<LinearOperator> {
    if dim == 0 {
        return Err(Error::InvalidDims);
    }
    let mut rng = rng_from_seed(seed);
    let m = DMatrix::from_fn(dim, dim, |_, _| gaussian_complex(&mut rng));
    let (mut q, r) = m.qr().unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    LinearOperator::new(&[dim], q)
}

/// Rank-1 projective family onto the columns of a random unitary.
pub fn random_family(dim: usize, seed: u64) -> Result<ProjectiveFamily> {
    let u = random_unitary(dim, seed)?;
    let basis: Vec<Vec<C64>> = u
        .matrix()
        .column_iter()
        .map(|col| col.iter().copied().collect())
        .collect();
    family_from_basis(&basis)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Every merge of `n` A-events and `m` B-events that keeps each side's
/// internal order, in lexicographic order with `A < B`.
pub fn interleavings(n: usize, m: usize) -> Vec<Vec<Side>> {
    fn go(n: usize, m: usize, prefix: &mut Vec<Side>, out: &mut Vec<Vec<Side>>) {
        if n == 0 && m == 0 {
            out.push(prefix.clone());
            return;
        }
        if n > 0 {
            prefix.push(Side::A);
            go(n - 1, m, prefix, out);
            prefix.pop();
        }
        if m > 0 {
            prefix.push(Side::B);
            go(n, m - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, m, &mut Vec::with_capacity(n + m), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterleavingReport {
    pub num_interleavings: usize,
    /// One joint probability per interleaving, in [`interleavings`] order.
    pub probabilities: Vec<f64>,
    /// `max − min` over `probabilities`.
    pub max_spread: f64,
    /// Seed the instance was generated from, when it came from one.
    pub seed: Option<u64>,
}

fn single_slot(seq: &[MeasurementEvent], name: &str) -> Result<()> {
    if let Some(first) = seq.first() {
        if seq.iter().any(|e| e.slot() != first.slot()) {
            return Err(Error::InvalidSchedule(format!(
                "sequence {name} spans more than one slot"
            )));
        }
    }
    Ok(())
}

/// Evaluates the joint probability of every order-preserving merge of
/// `seq_a` and `seq_b`.
///
/// Each sequence must stay on one slot. Putting both on the same slot is
/// allowed and serves as a control: the spread is then generally nonzero.
pub fn check_interleavings(
    s: &StateVector,
    seq_a: &[MeasurementEvent],
    seq_b: &[MeasurementEvent],
) -> Result<InterleavingReport> {
    single_slot(seq_a, "A")?;
    single_slot(seq_b, "B")?;
    let total = seq_a.len() + seq_b.len();
    if total > MAX_EVENTS {
        return Err(Error::TooLarge(format!(
            "{total} events exceeds the limit of {MAX_EVENTS}"
        )));
    }
    let probabilities = interleavings(seq_a.len(), seq_b.len())
        .into_iter()
        .map(|order| {
            let (mut ia, mut ib) = (seq_a.iter(), seq_b.iter());
            let schedule: Schedule = order
                .iter()
                .map(|side| match side {
                    Side::A => ia.next(),
                    Side::B => ib.next(),
                })
                .map(|e| e.expect("interleaving length matches sequences").clone())
                .collect();
            joint_probability(s, &schedule)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max = probabilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = probabilities.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(InterleavingReport {
        num_interleavings: probabilities.len(),
        probabilities,
        max_spread: max - min,
        seed: None,
    })
}

/// `|↑_z⟩` with a z-measurement and an x-measurement on the same slot.
///
/// The two orders give 0.5 and 0.25, so the spread is 0.25.
pub fn same_slot_control() -> Result<InterleavingReport> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |v: f64| C64::new(v, 0.0);
    let z = Arc::new(ProjectiveFamily::computational(2)?);
    let x = Arc::new(family_from_basis(&[vec![r(h), r(h)], vec![r(h), r(-h)]])?);
    let up = StateVector::basis(&[2], &[0])?;
    check_interleavings(
        &up,
        &[MeasurementEvent::new(0, z, 0)?],
        &[MeasurementEvent::new(0, x, 0)?],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CampaignSettings {
    pub trials: usize,
    /// Upper bounds on the two subsystem dimensions.
    pub max_dims: [usize; 2],
    /// Upper bound on each per-slot sequence length.
    pub max_len: usize,
    pub seed: u64,
}

impl Default for CampaignSettings {
    fn default() -> Self {
        Self {
            trials: 1000,
            max_dims: [4, 4],
            max_len: 3,
            seed: 0,
        }
    }
}

impl CampaignSettings {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.max_dims.contains(&0) {
            return Err(Error::InvalidConfig("max_dims must be positive".into()));
        }
        if 2 * self.max_len > MAX_EVENTS {
            return Err(Error::TooLarge(format!(
                "max_len {} allows more than {MAX_EVENTS} events",
                self.max_len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub dims: [usize; 2],
    pub len_a: usize,
    pub len_b: usize,
    pub report: InterleavingReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub settings: CampaignSettings,
    pub generator: &'static str,
    pub worst_spread: f64,
    pub worst_trial: usize,
    pub total_interleavings: usize,
    pub records: Vec<TrialRecord>,
}

fn draw_dim(rng: &mut ChaCha8Rng, max: usize) -> usize {
    if max >= 2 {
        rng.random_range(2..=max)
    } else {
        1
    }
}

fn draw_sequence(
    rng: &mut ChaCha8Rng,
    slot: usize,
    dim: usize,
    len: usize,
) -> Result<Vec<MeasurementEvent>> {
    (0..len)
        .map(|_| {
            let family = Arc::new(random_family(dim, rng.random())?);
            let outcome = rng.random_range(0..dim);
            MeasurementEvent::new(slot, family, outcome)
        })
        .collect()
}

/// Builds and checks the random instance for one trial of a campaign.
pub fn run_trial(settings: &CampaignSettings, trial: usize) -> Result<TrialRecord> {
    let mut rng = rng_from_seed(settings.seed);
    rng.set_stream(trial as u64);
    let dims = [
        draw_dim(&mut rng, settings.max_dims[0]),
        draw_dim(&mut rng, settings.max_dims[1]),
    ];
    let len_a = rng.random_range(0..=settings.max_len);
    let len_b = rng.random_range(0..=settings.max_len);
    let state_seed: u64 = rng.random();
    let state = random_state(&dims, state_seed)?;
    let seq_a = draw_sequence(&mut rng, 0, dims[0], len_a)?;
    let seq_b = draw_sequence(&mut rng, 1, dims[1], len_b)?;
    let mut report = check_interleavings(&state, &seq_a, &seq_b)?;
    report.seed = Some(state_seed);
    Ok(TrialRecord {
        trial,
        dims,
        len_a,
        len_b,
        report,
    })
}

/// Runs `settings.trials` seeded instances and reports the worst spread.
pub fn fuzz_campaign(settings: &CampaignSettings) -> Result<CampaignSummary> {
    settings.validate()?;
    let records = (0..settings.trials)
        .into_par_iter()
        .map(|trial| run_trial(settings, trial))
        .collect::<Result<Vec<_>>>()?;
    let (worst_trial, worst_spread) = records
        .iter()
        .map(|r| (r.trial, r.report.max_spread))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let total_interleavings = records.iter().map(|r| r.report.num_interleavings).sum();
    Ok(CampaignSummary {
        settings: *settings,
        generator: GENERATOR_NAME,
        worst_spread,
        worst_trial,
        total_interleavings,
        records,
    })
}
