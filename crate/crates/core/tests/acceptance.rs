//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion ids (e.g. `ac4 ac6`) to run a subset.

use std::process::ExitCode;
use std::time::Instant;

use tsca_core::engine::{Engine, RuleChoice};
use tsca_core::experiments::{run_experiment, ExperimentSpec, InitialSpec, OutcomeTally};
use tsca_core::oracle::{flip_probability_map, monte_carlo_flip_check, naive_apply, naive_step};
use tsca_core::{
    block_minority, eval_phi, eval_psi, f_transition, random_density, trajectory_hash, BlockKind, BlockShape,
    CellState, EngineConfig, Grid, Outcome, ProbabilityFamily, ProbabilityFunction, RuleParams, ThresholdMode,
};

type Verdict = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn params(k: u8, phi: ProbabilityFamily, psi: ProbabilityFamily, p: f64, mode: ThresholdMode) -> RuleParams {
    RuleParams::from_families(k, phi, psi, p, mode).expect("valid params")
}

fn log_exp(k: u8) -> RuleParams {
    params(
        k,
        ProbabilityFamily::Logarithmic,
        ProbabilityFamily::Exponential,
        0.2,
        ThresholdMode::AtLeast,
    )
}

fn builtin_configs(k: u8) -> Vec<(&'static str, RuleParams)> {
    use ProbabilityFamily::*;
    vec![
        ("log/exp p=0.2", log_exp(k)),
        (
            "linear/linear p=0.1",
            params(k, Linear, Linear, 0.1, ThresholdMode::AtLeast),
        ),
        (
            "exp/exp p=0.1",
            params(k, Exponential, Exponential, 0.1, ThresholdMode::AtLeast),
        ),
    ]
}

struct XorShift(u64);

impl XorShift {
    fn next(&mut self) -> u64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        self.0
    }

    fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next() % (hi - lo + 1)
    }
}

fn ac1_probability_tables() -> Verdict {
    let phi = ProbabilityFunction::new(ProbabilityFamily::Logarithmic, 4).unwrap();
    let psi = ProbabilityFunction::new(ProbabilityFamily::Exponential, 4).unwrap();
    let want_phi = [0.0, 0.5, 0.79248, 1.0];
    let want_psi = [0.0497, 0.1353, 0.3679, 1.0];
    let mut worst = 0.0f64;
    for x in 1..=4u8 {
        let got_phi = eval_phi(&phi, x).unwrap();
        let got_psi = eval_psi(&psi, x).unwrap();
        for (got, want, name) in [
            (got_phi, want_phi[x as usize - 1], "phi"),
            (got_psi, want_psi[x as usize - 1], "psi"),
        ] {
            let err = (got - want).abs();
            worst = worst.max(err);
            if err > 1e-4 {
                return Err(format!("{name}({x}) = {got}, expected {want}"));
            }
        }
    }
    Ok(format!("max abs error {worst:.2e}"))
}

fn ac2_truth_table() -> Verdict {
    let mut cases = 0;
    for k in 0..=8u8 {
        // Neighbor counts that flip each state, written out per rule definition.
        let ones_flip: Vec<u8> = (k + 1..=8).collect();
        let zeros_flip_at_least: Vec<u8> = (8 - k..=8).collect();
        let zeros_flip_exact = [8 - k];
        for mode in [ThresholdMode::AtLeast, ThresholdMode::Exact] {
            let zeros_flip: &[u8] = match mode {
                ThresholdMode::AtLeast => &zeros_flip_at_least,
                ThresholdMode::Exact => &zeros_flip_exact,
            };
            for x in 0..=8u8 {
                for (state, flip_set) in [(CellState::One, &ones_flip[..]), (CellState::Zero, zeros_flip)] {
                    let want = if flip_set.contains(&x) { state.flipped() } else { state };
                    let got = f_transition(state, x, k, mode);
                    if got != want {
                        return Err(format!("state {state} x={x} K={k} {mode}: got {got}, expected {want}"));
                    }
                    cases += 1;
                }
            }
        }
    }
    if cases != 324 {
        return Err(format!("enumerated {cases} cases, expected 324"));
    }
    Ok(format!("{cases}/324 combinations"))
}

fn ac3_fixed_points() -> Verdict {
    let mut runs = 0;
    for k in 1..=7u8 {
        for (name, params) in builtin_configs(k) {
            for state in [CellState::Zero, CellState::One] {
                let start = Grid::filled(32, 32, state).unwrap();
                let engine = Engine::new(params.clone(), 100 + k as u64);
                let mut a = start.clone();
                let mut b = start.clone();
                for t in 0..1000 {
                    engine.step_into(&a, &mut b, t);
                    if b != start {
                        return Err(format!("K={k} {name} from all-{state} changed at step {t}"));
                    }
                    std::mem::swap(&mut a, &mut b);
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs x 1000 steps unchanged"))
}

fn ac4_oracle_equivalence() -> Verdict {
    let mut rng = XorShift(0x0DDB_1A5E_5BAD_5EED);
    let mut checked = 0;
    for i in 0..500u64 {
        let w = rng.range(3, 16) as usize;
        let h = rng.range(3, 16) as usize;
        let rho = rng.range(0, 100) as f64 / 100.0;
        let grid = random_density(w, h, rho, rng.next()).unwrap();
        let k = (i % 7) as u8 + 1;
        let seed = rng.next();
        let t = rng.range(0, 1000);
        for mode in [ThresholdMode::AtLeast, ThresholdMode::Exact] {
            for (name, base) in builtin_configs(k) {
                let params = base.with_mode(mode);
                let engine = Engine::new(params.clone(), seed);
                let mut out = grid.clone();
                for rule in [RuleChoice::F, RuleChoice::G] {
                    engine.apply_into(&grid, &mut out, t, rule);
                    if out != naive_apply(&grid, &params, engine.rng(), t, rule) {
                        return Err(format!(
                            "grid {i} ({w}x{h}) K={k} {mode} {name} forced {rule:?} differs"
                        ));
                    }
                    checked += 1;
                }
                if engine.step(&grid, t) != naive_step(&grid, &params, engine.rng(), t) {
                    return Err(format!("grid {i} ({w}x{h}) K={k} {mode} {name} coin step differs"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} step comparisons on 500 grids"))
}

fn ac5_determinism() -> Verdict {
    // The linear regime near rho = 0.5 keeps mixed grids alive for many steps.
    let params = params(
        4,
        ProbabilityFamily::Linear,
        ProbabilityFamily::Linear,
        0.1,
        ThresholdMode::AtLeast,
    );
    let mut report = Vec::new();
    for (side, steps) in [(64usize, 3000u64), (300, 200)] {
        let grid = random_density(side, side, 0.5, 11).unwrap();
        let mut runs = Vec::new();
        for workers in [1usize, 1, 4, 0] {
            let cfg = EngineConfig {
                max_steps: steps,
                record_trajectory: true,
                workers,
                ..EngineConfig::default()
            };
            let result = Engine::with_workers(params.clone(), 5, workers).run(&grid, &cfg);
            runs.push((workers, result.trajectory_hash.unwrap(), result.iterations));
        }
        if runs.iter().any(|&(_, h, _)| h != runs[0].1) {
            return Err(format!("{side}x{side}: hashes differ {runs:x?}"));
        }
        let cfg = EngineConfig {
            max_steps: steps,
            ..EngineConfig::default()
        };
        if trajectory_hash(&grid, &params, &cfg, 5) != runs[0].1 {
            return Err(format!(
                "{side}x{side}: trajectory_hash disagrees with the recorded run"
            ));
        }
        if trajectory_hash(&grid, &params, &cfg, 6) == runs[0].1 {
            return Err(format!("{side}x{side}: different seeds gave the same hash"));
        }
        report.push(format!("{side}x{side} over {} steps", runs[0].2));
    }
    Ok(format!("workers 1, 1, 4, auto agree: {}", report.join(", ")))
}

fn ac6_g_step_statistics() -> Verdict {
    const TRIALS: u64 = 100_000;
    let grid = random_density(8, 8, 0.5, 2024).unwrap();
    let params = log_exp(4);
    let expected = flip_probability_map(&grid, &params);
    let observed = monte_carlo_flip_check(&grid, &params, TRIALS, 2024);
    let mut worst = 0.0f64;
    let mut nondegenerate = 0;
    for (i, (&p, &f)) in expected.iter().zip(&observed).enumerate() {
        let sd = (p * (1.0 - p) / TRIALS as f64).sqrt();
        if sd == 0.0 {
            if f != p {
                return Err(format!("cell {i}: probability {p} but frequency {f}"));
            }
            continue;
        }
        nondegenerate += 1;
        let z = (f - p).abs() / sd;
        worst = worst.max(z);
        if z > 3.0 {
            return Err(format!("cell {i}: p={p:.5} freq={f:.5} ({z:.2} sd)"));
        }
    }
    Ok(format!(
        "64 cells ({nondegenerate} non-degenerate), worst deviation {worst:.2} sd"
    ))
}

fn random_spec(side: usize, params: RuleParams, rho: f64, trials: usize) -> ExperimentSpec {
    ExperimentSpec {
        name: format!("rho={rho}"),
        width: side,
        height: side,
        params,
        initial: InitialSpec::Random { rho },
        trials,
        seed_base: 1,
        engine: EngineConfig::default(),
    }
}

fn ac7_outcome_spot_checks() -> Verdict {
    let cases = [
        (4u8, 0.10, Outcome::AllZero),
        (4, 0.90, Outcome::AllOne),
        (1, 0.55, Outcome::AllZero),
        (7, 0.55, Outcome::AllOne),
    ];
    let mut report = Vec::new();
    let mut failed = false;
    for (k, rho, want) in cases {
        let records = run_experiment(&random_spec(100, log_exp(k), rho, 20)).map_err(|e| e.to_string())?;
        let hits = records.iter().filter(|r| r.outcome == want).count();
        failed |= hits < 19;
        report.push(format!("K={k} rho={rho}: {hits}/20 {want}"));
    }
    let line = report.join("; ");
    if failed {
        Err(line)
    } else {
        Ok(line)
    }
}

fn ac8_density_classification() -> Verdict {
    let linear = params(
        4,
        ProbabilityFamily::Linear,
        ProbabilityFamily::Linear,
        0.1,
        ThresholdMode::AtLeast,
    );
    let mut report = Vec::new();
    let mut failed = false;
    for (rho, want) in [
        (0.40, Some(Outcome::AllZero)),
        (0.60, Some(Outcome::AllOne)),
        (0.5036035, None),
    ] {
        let records = run_experiment(&random_spec(200, linear.clone(), rho, 40)).map_err(|e| e.to_string())?;
        let tally = OutcomeTally::of(&records);
        match want {
            Some(w) => {
                let hits = records.iter().filter(|r| r.outcome == w).count();
                failed |= hits < 38;
                report.push(format!("rho={rho}: {hits}/40 {w}"));
            }
            None => report.push(format!("rho={rho} (reported): {tally}")),
        }
    }
    let line = report.join("; ");
    if failed {
        Err(line)
    } else {
        Ok(line)
    }
}

fn ac9_throughput() -> Verdict {
    const STEPS: u64 = 5_000;
    let grid = random_density(100, 100, 0.5, 9).unwrap();
    let engine = Engine::with_workers(log_exp(4), 9, 1);
    let mut a = grid.clone();
    let mut b = grid;
    let start = Instant::now();
    for t in 0..STEPS {
        engine.step_into(&a, &mut b, t);
        std::mem::swap(&mut a, &mut b);
    }
    let rate = STEPS as f64 / start.elapsed().as_secs_f64();
    let line = format!("{rate:.0} steps/s at 100x100, 1 worker");
    if rate >= 1000.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

/// Converged outcome, or the sign of the density change on timeout.
fn trend(outcome: Outcome, initial: f64, last: f64) -> Outcome {
    match outcome {
        Outcome::Timeout if last < initial => Outcome::AllZero,
        Outcome::Timeout if last > initial => Outcome::AllOne,
        o => o,
    }
}

fn ac10_block_ordering() -> Verdict {
    let params = log_exp(4);
    let mut report = Vec::new();
    let mut failed = false;
    for (side, want) in [(12usize, Outcome::AllZero), (7, Outcome::AllOne)] {
        let anchor = (100 - side / 2, 100 - side / 2);
        let shape = BlockShape {
            kind: BlockKind::Square,
            anchor,
        };
        let grid = block_minority(200, 200, CellState::Zero, side * side, shape).unwrap();
        let mut hits = 0;
        let mut timeouts = 0;
        for seed in 1..=10u64 {
            let result = Engine::new(params.clone(), seed).run(&grid, &EngineConfig::default());
            timeouts += (result.outcome == Outcome::Timeout) as usize;
            if trend(result.outcome, grid.density(), result.final_grid.density()) == want {
                hits += 1;
            }
        }
        failed |= hits < 6;
        report.push(format!(
            "{side}x{side} zero block: {hits}/10 toward {want} ({timeouts} timeouts)"
        ));
    }
    let line = report.join("; ");
    if failed {
        Err(line)
    } else {
        Ok(line)
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("ac1", "probability tables", ac1_probability_tables),
        ("ac2", "f truth table", ac2_truth_table),
        ("ac3", "fixed-point stability", ac3_fixed_points),
        ("ac4", "engine/oracle equivalence", ac4_oracle_equivalence),
        ("ac5", "trajectory determinism", ac5_determinism),
        ("ac6", "g-step flip statistics", ac6_g_step_statistics),
        ("ac7", "outcome spot checks", ac7_outcome_spot_checks),
        ("ac8", "density classification", ac8_density_classification),
        ("ac9", "throughput floor", ac9_throughput),
        ("ac10", "block size ordering", ac10_block_ordering),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS {id} {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {id} {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
