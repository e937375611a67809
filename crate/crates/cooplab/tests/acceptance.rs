//! Acceptance suite: one test and one printed verdict line per criterion.
//!
//! Run `cargo test --test acceptance -- --nocapture` to see every line.
//!
//! Criteria 2 and 3 assert closed-form agreement of the unit-step
//! replicator iteration over the full extended grid. That agreement does
//! not hold: the unit-step map is locally unstable around the interior
//! fixed point wherever x*(1-x*)*|R-T-S+P| >= 2 and can overshoot onto a
//! clamped boundary in one step, so those two tests document the exact
//! disagreement set and fail. The closed-form route is the reference; the
//! iteration is kept exactly as defined rather than patched to agree.

use std::time::Instant;

use cooplab::analysis::ingest::{ingest_human_data, HumanSchema};
use cooplab::analysis::{
    compare_matrices_region, extractor_accuracy, region_average, region_average_by, Region,
};
use cooplab::equilibrium::{
    interior_fixed_point, nash_cooperation, nash_matrix, simulate_replicator, ReplicatorParams,
};
use cooplab::game::{Choice, Game, GridSpec};
use cooplab::llm::mock::{MockExtractor, MockPolicy, MockVerdictMode};
use cooplab::llm::{build_prompt, parse_outcome_lines, LabelMapping, Stage};
use cooplab::phenotype::MixtureWeights;
use cooplab::runner::config::{AgentSpec, RunConfig};
use cooplab::runner::log::read_play_log;
use cooplab::runner::{self, RunOptions, RunStatus};

fn verdict(criterion: &str, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {detail}");
}

fn default_st(s: i32, t: i32) -> Game {
    Game::from_st(s, t)
}

/// 1. Analytic Nash matrix over the original grid averages to 0.500
///    (tolerance 0.005) in under a second.
#[test]
fn criterion_1_nash_original_region_average() {
    let started = Instant::now();
    let matrix = nash_matrix(&GridSpec::original(), 0.5);
    let mean = region_average(&matrix, Region::Original).unwrap();
    let elapsed = started.elapsed();
    let pass = (mean - 0.500).abs() <= 0.005 && elapsed.as_secs_f64() < 1.0;
    verdict(
        "1 (nash original average)",
        pass,
        format!("mean {mean:.6}, computed in {elapsed:?}"),
    );
}

/// 2. Closed form vs iterated dynamics agree within 0.05 on every extended
///    grid cell off the tie and basin-boundary sets; ties follow their
///    documented rules.
#[test]
fn criterion_2_closed_form_vs_dynamics() {
    let started = Instant::now();
    let params = ReplicatorParams::default();
    let mut violations: Vec<(i32, i32, f64, f64)> = Vec::new();
    let mut compared = 0usize;

    for game in GridSpec::extended().games().unwrap() {
        let (s, t) = (game.s, game.t);
        let d = 10 - t - s + 5;

        // tie and basin-boundary cells have their own pinned values
        if s == 5 || t == 10 || d == 0 || t == 5 + s {
            let analytic = nash_cooperation(&game, 0.5);
            let expected = match (s, t) {
                _ if s == 5 && t == 10 => 0.5,
                _ if s == 5 => f64::from(u8::from(t < 10)),
                _ if t == 10 => f64::from(u8::from(s > 5)),
                _ if d == 0 => f64::from(u8::from(s > 5)),
                // basin boundary: started exactly on the unstable point
                _ if s < 5 => 0.5,
                // T = 5 + S in the anti-coordination quadrant pins x* = 1/2
                _ => 0.5,
            };
            assert_eq!(
                analytic, expected,
                "tie rule at (S={s},T={t}): got {analytic}, expected {expected}"
            );
            continue;
        }

        compared += 1;
        let analytic = nash_cooperation(&game, 0.5);
        let dynamic = simulate_replicator(&game, &params).terminal_x;
        if (analytic - dynamic).abs() > 0.05 {
            violations.push((s, t, analytic, dynamic));
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    let sample: Vec<String> = violations
        .iter()
        .take(5)
        .map(|(s, t, a, d)| format!("(S={s},T={t}) closed-form {a:.4} vs dynamics {d:.4}"))
        .collect();
    verdict(
        "2 (closed-form vs dynamics oracle)",
        violations.is_empty(),
        format!(
            "{} of {compared} comparable cells disagree beyond 0.05 in {elapsed:?}; \
             the unit-step update overshoots or cycles wherever x*(1-x*)*|R-T-S+P| >= 2, \
             e.g. {}",
            violations.len(),
            sample.join(", "),
        ),
    );
}

/// 3. On anti-coordination cells with T>10>S>5 the iteration lands on
///    x* = (P-S)/(R-T-S+P): within 0.1 at default tolerance and within
///    1e-3 when run with tol=1e-6 and t_max=1e5.
#[test]
fn criterion_3_mixed_equilibrium_accuracy() {
    let mut loose_violations = Vec::new();
    let mut tight_violations = Vec::new();
    let tight = ReplicatorParams {
        x0: 0.5,
        tol: 1e-6,
        t_max: 100_000,
    };
    let mut cells = 0usize;
    for s in 6..=9 {
        for t in 11..=20 {
            cells += 1;
            let game = default_st(s, t);
            let xstar = interior_fixed_point(&game).expect("anti-coordination cell");
            let loose = simulate_replicator(&game, &ReplicatorParams::default()).terminal_x;
            if (loose - xstar).abs() > 0.1 {
                loose_violations.push((s, t, loose, xstar));
            }
            let precise = simulate_replicator(&game, &tight).terminal_x;
            if (precise - xstar).abs() > 1e-3 {
                tight_violations.push((s, t, precise, xstar));
            }
        }
    }
    let pass = loose_violations.is_empty() && tight_violations.is_empty();
    verdict(
        "3 (mixed-equilibrium accuracy)",
        pass,
        format!(
            "of {cells} anti-coordination cells, {} miss x* beyond 0.1 at default settings \
             and {} beyond 1e-3 at tol=1e-6/t_max=1e5; cells whose two-cycle or boundary \
             overshoot never converges include {:?}",
            loose_violations.len(),
            tight_violations.len(),
            loose_violations
                .iter()
                .take(4)
                .map(|(s, t, _, _)| (*s, *t))
                .collect::<Vec<_>>(),
        ),
    );
}

/// 4. The interior fixed point exists exactly on (S<5 and T<10) or
///    (S>5 and T>10): zero mismatches over the 441 cells.
#[test]
fn criterion_4_interior_fixed_point_existence() {
    let mut mismatches = Vec::new();
    for game in GridSpec::extended().games().unwrap() {
        let expected = (game.s < 5 && game.t < 10) || (game.s > 5 && game.t > 10);
        if interior_fixed_point(&game).is_some() != expected {
            mismatches.push((game.s, game.t));
        }
    }
    verdict(
        "4 (interior fixed-point existence)",
        mismatches.is_empty(),
        format!("{} mismatches over 441 cells", mismatches.len()),
    );
}

/// 5. Mixture with the observed population shares: exact cells plus the
///    qualitative region ordering.
#[test]
fn criterion_5_phenotype_mixture() {
    let weights = MixtureWeights::paper();
    let matrix =
        cooplab::phenotype::mixture_matrix(&weights, &GridSpec::original()).unwrap();
    let high = matrix.get(8, 7).unwrap();
    let low = matrix.get(2, 12).unwrap();
    let ge_region = region_average(&matrix, Region::HarmonyScore).unwrap();
    let temptation = region_average_by(&matrix, |_, t| t > 10).unwrap();
    let pass = high == 0.94 && low == 0.23 && ge_region > temptation;
    verdict(
        "5 (phenotype mixture)",
        pass,
        format!(
            "cell(8,7)={high}, cell(2,12)={low}, mean(S>=T)={ge_region:.4} vs mean(T>R)={temptation:.4}"
        ),
    );
}

/// 6. Observed-play dataset: original-region average 0.480 +- 0.01 and
///    closed-form-vs-observed metrics MSD 0.096 +- 0.02, r 0.78 +- 0.05.
///    Needs the dataset on disk; set COOPLAB_HUMAN_DATA (and optionally
///    COOPLAB_HUMAN_SCHEMA) to run it.
#[test]
fn criterion_6_human_dataset() {
    let path = match std::env::var("COOPLAB_HUMAN_DATA") {
        Ok(path) => path,
        Err(_) => {
            println!(
                "criterion 6 (human dataset): SKIPPED — set COOPLAB_HUMAN_DATA to an \
                 aggregate or row-level CSV of the observed plays to enable this check"
            );
            return;
        }
    };
    let schema: HumanSchema = std::env::var("COOPLAB_HUMAN_SCHEMA")
        .unwrap_or_else(|_| "auto".into())
        .parse()
        .expect("valid COOPLAB_HUMAN_SCHEMA");
    let outcome = ingest_human_data(path.as_ref(), schema, &GridSpec::original())
        .expect("dataset ingests onto the original grid");
    let human = &outcome.matrix;
    let average = region_average(human, Region::Original).unwrap();
    let nash = nash_matrix(&GridSpec::original(), 0.5);
    let metrics = compare_matrices_region(&nash, human, Region::Original).unwrap();
    let r = metrics.pearson_r.unwrap_or(f64::NAN);
    let pass = (average - 0.480).abs() <= 0.01
        && (metrics.msd - 0.096).abs() <= 0.02
        && (r - 0.78).abs() <= 0.05;
    if !pass {
        println!(
            "criterion 6 preprocessing report: {}",
            serde_json::to_string_pretty(&outcome.report).unwrap()
        );
    }
    verdict(
        "6 (human dataset)",
        pass,
        format!(
            "original-region average {average:.4}, msd {:.4}, r {r:.4}",
            metrics.msd
        ),
    );
}

/// 7a. A cooperating scripted model over a 3x3 grid, 5 plays per game,
///     completes offline with the all-ones matrix under randomized labels.
#[test]
fn criterion_7a_mock_run_all_ones() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        schema_version: 1,
        seed: 2024,
        plays_per_game: 5,
        concurrency: 2,
        out_dir: dir.path().to_path_buf(),
        grid: GridSpec::new(0, 2, 0, 2),
        agent: AgentSpec::Mock {
            generator: MockPolicy::Cooperate,
            verifier: MockVerdictMode::AlwaysGood,
            stage: Stage::Verified,
        },
    };
    let outcome = match runner::start(&config, RunOptions::default()).unwrap() {
        RunStatus::Complete(outcome) => outcome,
        other => panic!("expected completion, got {other:?}"),
    };
    let records = read_play_log(&dir.path().join(runner::LOG_FILE)).unwrap();
    let mappings: std::collections::HashSet<_> =
        records.iter().map(|r| format!("{:?}", r.mapping)).collect();
    let elapsed = started.elapsed();
    let pass = outcome.matrix.cells().iter().all(|&v| v == 1.0)
        && records.len() == 45
        && mappings.len() == 2
        && outcome.diagnostics.games.iter().all(|g| g.bypass_fraction == 0.0)
        && elapsed.as_secs_f64() < 10.0;
    verdict(
        "7a (offline all-ones mock run)",
        pass,
        format!(
            "matrix min {:?}, {} records, {} mapping kinds, {elapsed:?}",
            outcome
                .matrix
                .cells()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min),
            records.len(),
            mappings.len(),
        ),
    );
}

/// 7b. A model whose answers always fail verification: relaxation fires
///     after exactly two stuck rounds, the run completes, bypasses flagged.
#[test]
fn criterion_7b_relaxation_trace() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        schema_version: 1,
        seed: 7,
        plays_per_game: 4,
        concurrency: 2,
        out_dir: dir.path().to_path_buf(),
        grid: GridSpec::new(0, 0, 0, 0),
        agent: AgentSpec::Mock {
            generator: MockPolicy::Cooperate,
            verifier: MockVerdictMode::AlwaysBad,
            stage: Stage::Verified,
        },
    };
    let outcome = match runner::start(&config, RunOptions::default()).unwrap() {
        RunStatus::Complete(outcome) => outcome,
        other => panic!("expected completion, got {other:?}"),
    };
    let records = read_play_log(&dir.path().join(runner::LOG_FILE)).unwrap();
    let relax_round = records
        .iter()
        .filter(|r| r.verifier_bypassed)
        .map(|r| r.round)
        .min();
    let elapsed = started.elapsed();
    let game = &outcome.diagnostics.games[0];
    let pass = relax_round == Some(3)
        && game.relaxed
        && game.valid == 4
        && game.bypass_fraction == 1.0
        && records.iter().filter(|r| r.round <= 2).all(|r| !r.valid)
        && elapsed.as_secs_f64() < 10.0;
    verdict(
        "7b (adaptive relaxation)",
        pass,
        format!(
            "first bypassed round {relax_round:?} (two stuck rounds before it), \
             bypass fraction {}, {elapsed:?}",
            game.bypass_fraction,
        ),
    );
}

/// 7c. Interrupting after round one and resuming reproduces the
///     uninterrupted matrix bit for bit.
#[test]
fn criterion_7c_interrupt_resume_bit_exact() {
    let started = Instant::now();
    let grid = GridSpec::new(0, 2, 0, 2);
    let agent = AgentSpec::Mock {
        generator: MockPolicy::FlakyCooperate { invalid_every: 2 },
        verifier: MockVerdictMode::AlwaysGood,
        stage: Stage::Verified,
    };
    let config = |dir: &std::path::Path| RunConfig {
        schema_version: 1,
        seed: 33,
        plays_per_game: 5,
        concurrency: 3,
        out_dir: dir.to_path_buf(),
        grid,
        agent: agent.clone(),
    };

    let full_dir = tempfile::tempdir().unwrap();
    let full = match runner::start(&config(full_dir.path()), RunOptions::default()).unwrap() {
        RunStatus::Complete(outcome) => outcome,
        other => panic!("expected completion, got {other:?}"),
    };
    assert!(full.diagnostics.rounds >= 2, "run must span several rounds");

    let split_dir = tempfile::tempdir().unwrap();
    let interrupted = runner::start(
        &config(split_dir.path()),
        RunOptions {
            stop_after_rounds: Some(1),
        },
    )
    .unwrap();
    assert!(matches!(interrupted, RunStatus::Interrupted { rounds: 1, .. }));
    let resumed = match runner::resume(split_dir.path(), RunOptions::default()).unwrap() {
        RunStatus::Complete(outcome) => outcome,
        other => panic!("expected completion, got {other:?}"),
    };

    let full_bytes = std::fs::read(full_dir.path().join(runner::MATRIX_FILE)).unwrap();
    let split_bytes = std::fs::read(split_dir.path().join(runner::MATRIX_FILE)).unwrap();
    let elapsed = started.elapsed();
    let pass = full_bytes == split_bytes
        && full.matrix.cells() == resumed.matrix.cells()
        && elapsed.as_secs_f64() < 10.0;
    verdict(
        "7c (interrupt/resume bit-exact)",
        pass,
        format!(
            "{} rounds straight vs {} resumed, csv byte-equal: {}, {elapsed:?}",
            full.diagnostics.rounds,
            resumed.diagnostics.rounds,
            full_bytes == split_bytes,
        ),
    );
}

/// 7d. Extraction accuracy 1.0 on a synthetic annotated set with
///     unambiguous replies.
#[test]
fn criterion_7d_extractor_accuracy() {
    let started = Instant::now();
    let mut answers = Vec::new();
    for (game, mapping) in [
        (default_st(8, 7), LabelMapping::ACooperates),
        (default_st(2, 12), LabelMapping::BCooperates),
        (default_st(0, 20), LabelMapping::ACooperates),
    ] {
        for choice in [Choice::Cooperate, Choice::Defect] {
            let label = mapping.label_for(choice);
            answers.push(cooplab::analysis::AnnotatedAnswer {
                long_answer: format!(
                    "Given the payoffs of this game ({} vs {}), I choose {}.",
                    game.payoff(choice, Choice::Cooperate),
                    game.payoff(choice, Choice::Defect),
                    label.as_str()
                ),
                gold: match label {
                    cooplab::llm::Label::A => cooplab::analysis::Gold::A,
                    cooplab::llm::Label::B => cooplab::analysis::Gold::B,
                },
            });
        }
    }
    answers.push(cooplab::analysis::AnnotatedAnswer {
        long_answer: "Honestly either option could work; no decision.".into(),
        gold: cooplab::analysis::Gold::Neither,
    });
    let accuracy = extractor_accuracy(&answers, &MockExtractor, "mock-extractor").unwrap();
    let elapsed = started.elapsed();
    verdict(
        "7d (extractor accuracy)",
        accuracy == 1.0 && elapsed.as_secs_f64() < 10.0,
        format!("accuracy {accuracy} over {} answers, {elapsed:?}", answers.len()),
    );
}

/// 8. Prompt fidelity: pinned instruction lines appear byte for byte and
///    the substituted outcome lines parse back to the payoff function.
#[test]
fn criterion_8_prompt_fidelity() {
    let game = default_st(6, 11);
    let mut pass = true;
    let mut notes = Vec::new();
    for mapping in [LabelMapping::ACooperates, LabelMapping::BCooperates] {
        let bundle = build_prompt(&game, mapping, Stage::MultiStep);
        for needle in [
            "This one-shot game, is made of only one round",
            "9*10 = 90 euros",
        ] {
            if !bundle.user.contains(needle) {
                pass = false;
                notes.push(format!("missing {needle:?}"));
            }
        }
        match parse_outcome_lines(&bundle.user) {
            Some(parsed) => {
                let label = parsed.cooperate_label().expect("R > P");
                if parsed.to_game(label) != game || label != mapping.label_for(Choice::Cooperate) {
                    pass = false;
                    notes.push(format!("round-trip mismatch under {mapping:?}"));
                }
            }
            None => {
                pass = false;
                notes.push(format!("outcome lines unparseable under {mapping:?}"));
            }
        }
    }
    verdict(
        "8 (prompt fidelity)",
        pass,
        if notes.is_empty() {
            "pinned lines present, outcome lines round-trip on both mappings".into()
        } else {
            notes.join("; ")
        },
    );
}
