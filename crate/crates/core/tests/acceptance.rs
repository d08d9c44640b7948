//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_3, PI};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use qorder::cli::{self, Format};
use qorder::eraser::{self, CircuitMode, Detector, EraserConfig};
use qorder::everett::{self, BranchLedger, PremeasureStep};
use qorder::measure::{bayes_symmetry_check, joint_distribution, MeasurementEvent};
use qorder::orderprop::{self, rng_from_seed, CampaignSettings};
use qorder::pattern::{uniform_grid, visibility};
use qorder::qcore::{make_real_state, tensor_state, ProjectiveFamily};
use qorder::wheeler::{self, Point, WheelerConfig};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("runtime {:.3}s exceeds {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64())
    })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn ac1_epr() -> Check {
    let start = Instant::now();
    let singlet = make_real_state(&[2, 2], &[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).map_err(err)?;
    let z = Arc::new(ProjectiveFamily::computational(2).map_err(err)?);
    let ab = joint_distribution(&singlet, &[(0, z.clone()), (1, z.clone())]).map_err(err)?;
    let ba = joint_distribution(&singlet, &[(1, z.clone()), (0, z)]).map_err(err)?;
    let expected = [[0.0, 0.5], [0.5, 0.0]];
    let mut worst: f64 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            worst = worst
                .max((ab.get(&[a, b]).unwrap() - expected[a][b]).abs())
                .max((ba.get(&[b, a]).unwrap() - expected[a][b]).abs());
        }
    }
    ensure(worst < 1e-12, || format!("max deviation {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("max deviation {worst:.1e}, both orders"))
}

fn ac2_orderprop() -> Check {
    let start = Instant::now();
    let settings = CampaignSettings::default();
    ensure(settings.trials >= 1000 && settings.max_dims == [4, 4] && settings.max_len == 3, || {
        "default campaign settings changed".into()
    })?;
    let summary = orderprop::fuzz_campaign(&settings).map_err(err)?;
    let control = orderprop::same_slot_control().map_err(err)?;
    ensure(summary.worst_spread < 1e-12, || {
        format!("worst spread {:e} in trial {}", summary.worst_spread, summary.worst_trial)
    })?;
    ensure(control.max_spread > 0.1, || {
        format!("control spread {}", control.max_spread)
    })?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "{} trials, {} interleavings, worst spread {:.1e}, control spread {}",
        settings.trials, summary.total_interleavings, summary.worst_spread, control.max_spread
    ))
}

fn ac3_bayes() -> Check {
    let start = Instant::now();
    let mut rng = rng_from_seed(3);
    let mut worst: f64 = 0.0;
    for trial in 0..1000u64 {
        let dims = [rng.random_range(2..=4), rng.random_range(2..=4)];
        let s = orderprop::random_state(&dims, trial).map_err(err)?;
        let (i, j) = (rng.random_range(0..dims[0]), rng.random_range(0..dims[1]));
        let a = MeasurementEvent::new(0, Arc::new(ProjectiveFamily::computational(dims[0]).map_err(err)?), i)
            .map_err(err)?;
        let b = MeasurementEvent::new(1, Arc::new(ProjectiveFamily::computational(dims[1]).map_err(err)?), j)
            .map_err(err)?;
        let alpha = s.amplitude(&[i, j]).map_err(err)?.norm_sqr();
        let r = bayes_symmetry_check(&s, &a, &b).map_err(err)?;
        ensure(!r.degenerate, || format!("trial {trial} degenerate"))?;
        worst = worst
            .max((r.a_given_b_times_b - r.b_given_a_times_a).abs())
            .max((r.a_given_b_times_b - alpha).abs())
            .max((r.b_given_a_times_a - alpha).abs());
    }
    ensure(worst < 1e-12, || format!("max deviation {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("1000 states, max deviation {worst:.1e}"))
}

fn ac4_marginals() -> Check {
    let start = Instant::now();
    let state = eraser::build_state(CircuitMode::Paper).map_err(err)?;
    let m = eraser::idler_marginals(&state).map_err(err)?;
    let worst = m.probs().iter().map(|p| (p - 0.25).abs()).fold(0.0, f64::max);
    ensure(m.len() == 4 && worst < 1e-12, || format!("marginals {:?}", m.probs()))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("paper mode D1..D4 = 1/4 within {worst:.1e}"))
}

fn eraser_config(mode: CircuitMode) -> Result<EraserConfig, String> {
    EraserConfig::new(1.0, 2.0 * PI, uniform_grid(181, FRAC_PI_3).map_err(err)?, mode).map_err(err)
}

fn ac5_patterns() -> Check {
    let start = Instant::now();
    let mut notes = Vec::new();
    for mode in [CircuitMode::Unitary, CircuitMode::Paper] {
        let cfg = eraser_config(mode)?;
        let state = eraser::build_state(mode).map_err(err)?;
        for det in [Detector::D3, Detector::D4] {
            let v = eraser::conditional_pattern(&state, det, &cfg).map_err(err)?.visibility;
            ensure(v < 1e-12, || format!("{mode} {det} visibility {v:e}"))?;
        }
        let v1 = eraser::conditional_pattern(&state, Detector::D1, &cfg).map_err(err)?.visibility;
        ensure((v1 - 1.0).abs() < 1e-12, || format!("{mode} D1 visibility {v1}"))?;
        let table = eraser::joint_screen_distribution(&state, &cfg).map_err(err)?;
        let signal = table.signal_marginal().map_err(err)?;
        match mode {
            CircuitMode::Unitary => {
                let d12 = table.column_sum(&[Detector::D1, Detector::D2]).map_err(err)?;
                let spread = |xs: &[f64]| {
                    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                        - xs.iter().copied().fold(f64::INFINITY, f64::min)
                };
                let raw12: Vec<f64> = table.joint.iter().map(|r| r[0] + r[1]).collect();
                let raw_signal: Vec<f64> = table.joint.iter().map(|r| r.iter().sum()).collect();
                ensure(d12.visibility < 1e-12 && spread(&raw12) < 1e-12, || {
                    format!("D1+D2 not flat: visibility {:e}", d12.visibility)
                })?;
                ensure(signal.visibility < 1e-12 && spread(&raw_signal) < 1e-12, || {
                    format!("signal marginal not flat: visibility {:e}", signal.visibility)
                })?;
                notes.push(format!("unitary D1 V={v1}, D1+D2 V={:.1e}", d12.visibility));
            }
            CircuitMode::Paper => {
                ensure((signal.visibility - 0.5).abs() < 1e-12, || {
                    format!("paper signal visibility {}", signal.visibility)
                })?;
                notes.push(format!("paper signal V={}", signal.visibility));
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(notes.join("; "))
}

fn ac6_delayed_choice() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for mode in [CircuitMode::Unitary, CircuitMode::Paper] {
        let cfg = eraser_config(mode)?;
        let state = eraser::build_state(mode).map_err(err)?;
        let r = eraser::schedule_equivalence(&state, &cfg).map_err(err)?;
        worst = worst.max(r.max_difference);
        for format in [Format::Csv, Format::Json] {
            let a = cli::emit_table(&cli::eraser_table(&r.signal_first), format, &vec![]).map_err(err)?;
            let b = cli::emit_table(&cli::eraser_table(&r.idler_first), format, &vec![]).map_err(err)?;
            ensure(a == b, || format!("{mode} serialized tables differ"))?;
        }
    }
    ensure(worst < 1e-12, || format!("max difference {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("byte-identical CSV and JSON, max difference {worst:.1e}"))
}

fn wheeler_config(distance: f64, grid: Vec<f64>) -> WheelerConfig {
    // d = 1, wavelength 0.1; telescope off-axis at 0.3 rad.
    let mut cfg = WheelerConfig {
        k: 20.0 * PI,
        r1: Point::new(0.0, 0.5),
        r2: Point::new(0.0, -0.5),
        screen_distance: distance,
        theta_grid: grid,
        telescope_aim: Point::zeros(),
        acceptance_halfwidth: 0.1 / distance,
    };
    cfg.telescope_aim = cfg.screen_point(0.3);
    cfg
}

fn ac7_wheeler() -> Check {
    let start = Instant::now();
    let step = 1e-3;
    let grid = uniform_grid(2001, 1.0).map_err(err)?;
    let cfg = wheeler_config(1e4, grid.clone());
    let d = cfg.slit_separation();
    let kd = cfg.k * d;
    let exact = wheeler::exact_pattern(&cfg).map_err(err)?;
    let maxima: Vec<f64> = (1..grid.len() - 1)
        .filter(|&i| exact.intensity[i] >= exact.intensity[i - 1] && exact.intensity[i] >= exact.intensity[i + 1])
        .map(|i| grid[i])
        .collect();
    let n_max = (kd * 1.0f64.sin() / (2.0 * PI)).floor() as i64;
    let predicted: Vec<f64> = (-n_max..=n_max)
        .map(|n| (2.0 * PI * n as f64 / kd).asin())
        .filter(|t| t.abs() < 1.0 - step)
        .collect();
    ensure(maxima.len() == predicted.len(), || {
        format!("{} maxima found, {} predicted", maxima.len(), predicted.len())
    })?;
    let offset = maxima
        .iter()
        .zip(&predicted)
        .map(|(m, p)| (m - p).abs())
        .fold(0.0, f64::max);
    ensure(offset <= step, || format!("maxima offset {offset:e} exceeds grid step"))?;
    ensure(visibility(&exact.intensity) > 0.99, || "exact pattern washed out".into())?;

    let mut diffs = Vec::new();
    for scale in [1e2, 1e3, 1e4] {
        let (p1, p2) = wheeler::telescope_probabilities(&wheeler_config(scale * d, grid.clone()))
            .map_err(err)?;
        diffs.push((p1 - p2).abs());
    }
    ensure(diffs[1] <= 10.0 / 1e3, || format!("|p1-p2| = {} at L = 1e3 d", diffs[1]))?;
    ensure(diffs[0] > diffs[1] && diffs[1] > diffs[2], || {
        format!("telescope asymmetry not shrinking: {diffs:?}")
    })?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!(
        "{} maxima within {offset:.1e} rad; |p1-p2| = {:.2e}, {:.2e}, {:.2e}",
        maxima.len(),
        diffs[0],
        diffs[1],
        diffs[2]
    ))
}

fn ac8_everett() -> Check {
    let start = Instant::now();
    let mut rng = rng_from_seed(8);
    let mut oracle: f64 = 0.0;
    for trial in 0..100u64 {
        let dims = [rng.random_range(2..=4), rng.random_range(2..=4)];
        let s = orderprop::random_state(&dims, trial).map_err(err)?;
        let fa = Arc::new(orderprop::random_family(dims[0], 1000 + trial).map_err(err)?);
        let fb = Arc::new(orderprop::random_family(dims[1], 2000 + trial).map_err(err)?);
        let ledger = BranchLedger::run(
            s.clone(),
            &[
                PremeasureStep::indexed(0, fa.clone(), "A"),
                PremeasureStep::indexed(1, fb.clone(), "B"),
            ],
        )
        .map_err(err)?;
        let joint = joint_distribution(&s, &[(0, fa), (1, fb)]).map_err(err)?;
        let mut seen = 0.0;
        for b in ledger.branches().map_err(err)? {
            let i: usize = b.label.reading("A").unwrap().parse().unwrap();
            let j: usize = b.label.reading("B").unwrap().parse().unwrap();
            oracle = oracle.max((b.weight - joint.get(&[i, j]).unwrap()).abs());
            seen += joint.get(&[i, j]).unwrap();
        }
        // Omitted branches carry no weight.
        oracle = oracle.max((seen - joint.total()).abs());
    }
    ensure(oracle < 1e-12, || format!("oracle deviation {oracle:e}"))?;

    let z = Arc::new(ProjectiveFamily::computational(2).map_err(err)?);
    let step = |slot: usize, name: &str| PremeasureStep {
        slot,
        family: z.clone(),
        observer: name.into(),
        symbols: vec!["up".into(), "down".into()],
    };
    let epr = make_real_state(&[2, 2], &[0.0, 1.0, 1.0, 0.0]).map_err(err)?;
    let order = everett::order_independence(
        &epr,
        &[step(0, "Alice"), step(1, "Bob")],
        &[step(1, "Bob"), step(0, "Alice")],
    )
    .map_err(err)?;
    ensure(order.consistent, || format!("EPR orders differ: {order:?}"))?;

    let spectator = orderprop::random_state(&[3], 99).map_err(err)?;
    let ledger = BranchLedger::run(tensor_state(&epr, &spectator), &[step(0, "Alice"), step(1, "Bob")])
        .map_err(err)?;
    let mut drift: f64 = 0.0;
    for seed in 0..100 {
        let u = orderprop::random_unitary(3, seed).map_err(err)?;
        drift = drift.max(everett::branch_stability(&ledger, &u, 2).map_err(err)?.max_drift);
    }
    ensure(drift < 1e-12, || format!("spectator drift {drift:e}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "oracle {oracle:.1e}, EPR order difference {:.1e}, spectator drift {drift:.1e}",
        order.max_amplitude_difference
    ))
}

fn run_cli(args: &[&str], threads: Option<&str>) -> Result<Vec<u8>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qorder"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t);
    }
    let out = cmd.output().map_err(err)?;
    ensure(out.status.success(), || {
        format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn ac9_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    let eraser_cfg = dir.path().join("eraser.toml");
    std::fs::write(
        &eraser_cfg,
        "experiment = \"eraser\"\nmode = \"unitary\"\nk = 1.0\nd = 6.283185\ntheta_bins = 181\n",
    )
    .map_err(err)?;
    let wheeler_cfg = dir.path().join("wheeler.toml");
    std::fs::write(&wheeler_cfg, "k = 6.283185307179586\nscreen_distance = 500.0\n").map_err(err)?;
    let eraser_path = eraser_cfg.to_str().unwrap();
    let wheeler_path = wheeler_cfg.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["epr", "--seed", "4"],
        vec!["eraser", "--config", eraser_path],
        vec!["eraser", "--config", eraser_path, "--mode", "paper", "--format", "json"],
        vec!["wheeler", "--config", wheeler_path],
        vec!["orderprop", "--seed", "17"],
        vec!["orderprop", "--seed", "17", "--format", "json"],
        vec!["everett"],
    ];
    for args in &runs {
        let first = run_cli(args, None)?;
        let second = run_cli(args, None)?;
        let serial = run_cli(args, Some("1"))?;
        ensure(first == second && first == serial, || format!("{args:?} output differs between runs"))?;
    }
    Ok(format!("{} configurations byte-identical across 3 runs", runs.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("AC1 EPR anti-correlation", ac1_epr),
        ("AC2 order invariance campaign", ac2_orderprop),
        ("AC3 Bayes symmetry", ac3_bayes),
        ("AC4 eraser detector marginals", ac4_marginals),
        ("AC5 eraser conditional patterns", ac5_patterns),
        ("AC6 delayed-choice equivalence", ac6_delayed_choice),
        ("AC7 Wheeler far field", ac7_wheeler),
        ("AC8 Everett oracle equivalence", ac8_everett),
        ("AC9 CLI determinism", ac9_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {name} ({secs:.3}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.3}s): {detail}");
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
