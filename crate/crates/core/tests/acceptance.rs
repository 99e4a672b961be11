//! Acceptance gate. Each test prints one `[n] ... PASS|FAIL` line.
//!
//! Run with `cargo test --test acceptance -- --nocapture --test-threads=1`
//! to see the lines in order.

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, RngAlgorithm, TestRng, TestRunner};

use oran_energy::association::{associate_all, check_constraints};
use oran_energy::config::ScenarioConfig;
use oran_energy::harness::{csv_string, run_experiment, run_trial_traced, Experiment};
use oran_energy::netmodel::{build_grid_topology, build_scenario, RcState};
use oran_energy::power::total_power;
use oran_energy::ric::protocol::{
    Ack, Control, KpmRequest, Rejected, WireAction, WireCell, WireReport, WireUe,
};
use oran_energy::ric::{
    apply_action, collect_kpms, decode_message, encode_message, run_to_fixed_point, Message,
    RejectReason,
};
use oran_energy::xapps::{oracle_solve, PolicyKind};

const UE_COUNTS: [usize; 3] = [10, 50, 100];
const TRIALS: usize = 10;
const BASE_SEED: u64 = 1;
const SWEEP_BUDGET: Duration = Duration::from_secs(60);

const MIN_SAVING_10: f64 = 35.0;
const MAX_GAP_10: f64 = 10.0;
const MIN_XAPP2_SAVING_100: f64 = 8.0;
const MAX_XAPP1_SAVING_100: f64 = 10.0;
const MIN_LEAD_100: f64 = 5.0;
const SLEEPING_BAND: (f64, f64) = (6.0, 14.0);
const MAX_SLEEPING_SPREAD: f64 = 4.0;
const MONOTONE_SLACK: f64 = 2.0;

const SMALL_INSTANCES: usize = 240;
const ORACLE_BUDGET: Duration = Duration::from_secs(1);
const AGREEMENT_SCENARIOS: usize = 240;
const FUZZ_CASES: u32 = 2000;

struct Sweep {
    exp: Experiment,
    elapsed: Duration,
}

fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let t0 = Instant::now();
        let exp = run_experiment(
            &ScenarioConfig::default(),
            &PolicyKind::ALL,
            &UE_COUNTS,
            TRIALS,
            BASE_SEED,
        )
        .expect("default sweep runs");
        Sweep {
            exp,
            elapsed: t0.elapsed(),
        }
    })
}

fn saving(p: PolicyKind, n: usize) -> f64 {
    sweep().exp.aggregate(p, n).unwrap().saving_pct.mean
}

fn sleeping(p: PolicyKind, n: usize) -> f64 {
    sweep().exp.aggregate(p, n).unwrap().sleeping_rcs.mean
}

fn report(n: u32, name: &str, ok: bool, details: String) {
    println!(
        "[{n}] {name}: {} ({details})",
        if ok { "PASS" } else { "FAIL" }
    );
}

#[test]
fn c1_light_load_savings() {
    let s = sweep();
    let x1 = saving(PolicyKind::XApp1, 10);
    let x2 = saving(PolicyKind::XApp2, 10);
    let ok = x1 >= MIN_SAVING_10
        && x2 >= MIN_SAVING_10
        && (x1 - x2).abs() <= MAX_GAP_10
        && s.elapsed < SWEEP_BUDGET;
    report(
        1,
        "10-UE savings",
        ok,
        format!(
            "xapp1 {x1:.2}%, xapp2 {x2:.2}% (need >= {MIN_SAVING_10}%), gap {:.2} pp (need <= {MAX_GAP_10}), sweep {:.2?} (need < {SWEEP_BUDGET:?})",
            (x1 - x2).abs(),
            s.elapsed
        ),
    );
    assert!(ok);
}

#[test]
fn c2_heavy_load_savings() {
    let x1 = saving(PolicyKind::XApp1, 100);
    let x2 = saving(PolicyKind::XApp2, 100);
    let ok = x2 >= MIN_XAPP2_SAVING_100 && x1 <= MAX_XAPP1_SAVING_100 && x2 - x1 >= MIN_LEAD_100;
    report(
        2,
        "100-UE savings",
        ok,
        format!(
            "xapp2 {x2:.2}% (need >= {MIN_XAPP2_SAVING_100}%), xapp1 {x1:.2}% (need <= {MAX_XAPP1_SAVING_100}%), lead {:.2} pp (need >= {MIN_LEAD_100})",
            x2 - x1
        ),
    );
    assert!(ok);
}

#[test]
fn c3_sleeping_rc_counts() {
    let s50 = sleeping(PolicyKind::XApp2, 50);
    let s100 = sleeping(PolicyKind::XApp2, 100);
    let in_band = |v: f64| (SLEEPING_BAND.0..=SLEEPING_BAND.1).contains(&v);
    let ok = in_band(s50) && in_band(s100) && (s50 - s100).abs() <= MAX_SLEEPING_SPREAD;
    report(
        3,
        "xapp2 sleeping RCs",
        ok,
        format!(
            "50 UEs {s50:.2}, 100 UEs {s100:.2} (need within [{}, {}]), spread {:.2} (need <= {MAX_SLEEPING_SPREAD})",
            SLEEPING_BAND.0,
            SLEEPING_BAND.1,
            (s50 - s100).abs()
        ),
    );
    assert!(ok);
}

#[test]
fn c4_savings_fall_with_load() {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [PolicyKind::XApp1, PolicyKind::XApp2] {
        let v: Vec<f64> = UE_COUNTS.iter().map(|&n| saving(p, n)).collect();
        ok &= v.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
        parts.push(format!("{p} {:.2} / {:.2} / {:.2}", v[0], v[1], v[2]));
    }
    report(
        4,
        "savings non-increasing over 10/50/100 UEs",
        ok,
        format!("{}; slack {MONOTONE_SLACK} pp", parts.join(", ")),
    );
    assert!(ok);
}

#[test]
fn c5_power_algebra() {
    let rows = &sweep().exp.trials;
    let sum_ok = rows
        .iter()
        .all(|r| r.total_w == r.fixed_w + r.data_w + r.tc_w);
    let cfg = ScenarioConfig::default();
    let empty = build_grid_topology(&cfg).unwrap();
    let no_ues = associate_all(&empty);
    let all_on = total_power(&empty, &no_ues).total_w;
    let asleep = empty.with_active_set(|_| false);
    let all_sleep = total_power(&asleep, &associate_all(&asleep)).total_w;
    let ok = sum_ok && all_on == 504.0 && all_sleep == 120.0;
    report(
        5,
        "power algebra",
        ok,
        format!(
            "{} trial rows sum exactly: {sum_ok}; all-active {all_on} W, all-sleep {all_sleep} W",
            rows.len()
        ),
    );
    assert!(ok);
}

#[test]
fn c6_constraints_hold_every_step() {
    let cfg = ScenarioConfig::default();
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for p in PolicyKind::ALL {
        for &n in &UE_COUNTS {
            for t in 0..TRIALS as u64 {
                let (_, trace) = match run_trial_traced(&cfg, p, n, BASE_SEED + t) {
                    Ok(x) => x,
                    Err(e) => {
                        failures.push(format!("{p}/{n}/{t}: {e}"));
                        continue;
                    }
                };
                for step in &trace.steps {
                    checked += 1;
                    if !step.feasible || step.outages > trace.initial_outages {
                        failures.push(format!("{p}/{n}/{t} step {}", step.step));
                    }
                }
                if !check_constraints(&trace.final_state, &trace.final_assoc).feasible {
                    failures.push(format!("{p}/{n}/{t} final state"));
                }
            }
        }
    }
    let ok = failures.is_empty();
    report(
        6,
        "constraints and outages",
        ok,
        format!("{checked} steps checked, failures: {failures:?}"),
    );
    assert!(ok);
}

/// Small grids with up to three O-RUs (six RCs) and up to eight UEs,
/// varied in spacing and per-UE demand so coverage and load both bind.
fn small_instance(i: usize) -> (ScenarioConfig, usize, u64) {
    let n_orus = 1 + i % 3;
    let isd = [100.0, 200.0, 300.0][(i / 3) % 3];
    let min_rate = [10e6, 40e6, 80e6][(i / 9) % 3];
    let cfg = ScenarioConfig {
        n_orus,
        isd_m: isd,
        area_m: (isd * (n_orus as f64 + 1.0), 2.0 * isd),
        min_rate_bps: min_rate,
        ..Default::default()
    };
    (cfg, i % 9, 1000 + i as u64)
}

#[test]
fn c7_oracle_dominance() {
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut strict = 0usize;
    for i in 0..SMALL_INSTANCES {
        let (cfg, n_ues, seed) = small_instance(i);
        let state = build_scenario(&cfg, n_ues, seed).unwrap();
        let t0 = Instant::now();
        let best = oracle_solve(&state, 12).unwrap();
        slowest = slowest.max(t0.elapsed());
        let mut power = Vec::new();
        for p in PolicyKind::ALL {
            let mut policy = p.build(&cfg);
            let trace = run_to_fixed_point(state.clone(), &mut policy, cfg.max_steps).unwrap();
            if !check_constraints(&trace.final_state, &trace.final_assoc).feasible {
                failures.push(format!("#{i} {p} infeasible"));
            }
            power.push(trace.final_power().total_w);
        }
        let (all_on, x1, x2) = (power[0], power[1], power[2]);
        if !(best.power.total_w <= x2 && x2 <= x1 && x1 <= all_on) {
            failures.push(format!(
                "#{i}: oracle {} xapp2 {x2} xapp1 {x1} all-on {all_on}",
                best.power.total_w
            ));
        }
        if best.power.total_w < x2 {
            strict += 1;
        }
    }
    let ok = failures.is_empty() && slowest < ORACLE_BUDGET;
    report(
        7,
        "oracle <= xapp2 <= xapp1 <= all-on",
        ok,
        format!(
            "{SMALL_INSTANCES} instances, oracle strictly better on {strict}, slowest oracle {slowest:.2?}, failures: {failures:?}"
        ),
    );
    assert!(ok);
}

#[test]
fn c8_planner_validator_agreement() {
    let cfg = ScenarioConfig::default();
    let mut batches = 0usize;
    let mut actions = 0usize;
    let mut failures = Vec::new();
    for i in 0..AGREEMENT_SCENARIOS {
        let n_ues = (i * 37) % 151;
        let seed = 5000 + i as u64;
        let state = build_scenario(&cfg, n_ues, seed).unwrap();
        let assoc = associate_all(&state);
        let report = collect_kpms(&state, &assoc, 0);
        for p in [PolicyKind::XApp1, PolicyKind::XApp2] {
            let batch = p.build(&cfg).decide(&report).unwrap();
            batches += 1;
            let (mut s, mut a) = (state.clone(), assoc.clone());
            for (j, action) in batch.iter().enumerate() {
                actions += 1;
                match apply_action(&s, &a, *action) {
                    Ok((s2, a2)) => (s, a) = (s2, a2),
                    Err(reason) => failures.push(format!("{p} seed {seed} action {j}: {reason:?}")),
                }
            }
        }
    }
    let ok = failures.is_empty();
    report(
        8,
        "planner/validator agreement",
        ok,
        format!("{AGREEMENT_SCENARIOS} scenarios, {batches} batches, {actions} actions, rejections: {failures:?}"),
    );
    assert!(ok);
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/sweep_seed42.csv")
}

fn golden_csv() -> String {
    let exp = run_experiment(
        &ScenarioConfig::default(),
        &PolicyKind::ALL,
        &[10, 50],
        3,
        42,
    )
    .unwrap();
    csv_string(&exp.trials)
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        Just(0.0),
        Just(-0.0),
        any::<f64>().prop_filter("finite", |x| x.is_finite())
    ]
}

fn arb_message() -> impl Strategy<Value = Message> {
    let state = prop_oneof![Just(RcState::Active), Just(RcState::Sleep)];
    let band = prop_oneof![
        Just(oran_energy::config::BandName::N77),
        Just(oran_energy::config::BandName::N78)
    ];
    let cell = (
        any::<u32>(),
        any::<u32>(),
        band,
        state,
        any::<u32>(),
        0.0..=1.0f64,
        finite(),
    )
        .prop_map(
            |(rc_id, oru_id, band, state, rrc_conn_mean, prb_usage, dl_throughput_mbps)| WireCell {
                rc_id,
                oru_id,
                band,
                state,
                rrc_conn_mean,
                prb_usage,
                dl_throughput_mbps,
            },
        );
    let ue = (
        any::<u32>(),
        proptest::option::of(any::<u32>()),
        proptest::collection::btree_map(any::<u32>(), finite(), 0..6),
        finite(),
        any::<bool>(),
    )
        .prop_map(|(ue_id, serving_rc, rsrp_dbm, rate_mbps, outage)| WireUe {
            ue_id,
            serving_rc,
            rsrp_dbm,
            rate_mbps,
            outage,
        });
    let action = prop_oneof![
        any::<u32>().prop_map(|rc_id| WireAction::Sleep { rc_id }),
        any::<u32>().prop_map(|rc_id| WireAction::Wake { rc_id }),
        (any::<u32>(), any::<u32>())
            .prop_map(|(ue_id, target_rc)| WireAction::Handover { ue_id, target_rc }),
    ];
    let reason = prop_oneof![
        Just(RejectReason::RcNotIdle),
        Just(RejectReason::RcUnknown),
        Just(RejectReason::UeUnknown),
        Just(RejectReason::TargetAsleep),
        Just(RejectReason::RsrpBelowMin),
        Just(RejectReason::Overload),
        Just(RejectReason::InfeasibleAfter),
    ];
    prop_oneof![
        any::<u64>().prop_map(|step| Message::KpmRequest(KpmRequest { step })),
        (
            any::<u64>(),
            proptest::collection::vec(cell, 0..5),
            proptest::collection::vec(ue, 0..5)
        )
            .prop_map(|(step, cells, ues)| Message::KpmReport(WireReport {
                step,
                cells,
                ues
            })),
        (any::<u64>(), proptest::collection::vec(action, 0..8))
            .prop_map(|(step, actions)| Message::Control(Control { step, actions })),
        (
            any::<u64>(),
            any::<u64>(),
            proptest::collection::vec((any::<u64>(), reason), 0..5)
        )
            .prop_map(|(step, applied, rej)| Message::Ack(Ack {
                step,
                applied,
                rejected: rej
                    .into_iter()
                    .map(|(index, reason)| Rejected { index, reason })
                    .collect(),
            })),
    ]
}

#[test]
fn c9_determinism_and_wire_round_trip() {
    let first = golden_csv();
    let second = golden_csv();
    let path = golden_path();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &first).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap_or_default();
    let csv_ok = first == second && first == golden;

    // Fuzzed corpus plus every message from a real closed-loop run.
    let mut runner = TestRunner::new_with_rng(
        PtConfig {
            cases: FUZZ_CASES,
            failure_persistence: None,
            ..PtConfig::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let fuzz = runner.run(&arb_message(), |msg| {
        let line = encode_message(&msg);
        let back = decode_message(&line).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&back, &msg);
        prop_assert_eq!(encode_message(&back), line);
        Ok(())
    });
    let cfg = ScenarioConfig::default();
    let (_, trace) = run_trial_traced(&cfg, PolicyKind::XApp2, 100, 3).unwrap();
    let mut real = 0usize;
    let mut real_ok = true;
    for step in &trace.steps {
        let msgs = [
            Message::KpmRequest(KpmRequest { step: step.step }),
            Message::KpmReport(WireReport::from(&step.report)),
            Message::Control(Control {
                step: step.step,
                actions: step.actions.iter().copied().map(WireAction::from).collect(),
            }),
            Message::Ack(Ack::from_verdicts(step.step, &step.verdicts)),
        ];
        for m in msgs {
            real += 1;
            let line = encode_message(&m);
            real_ok &= decode_message(&line).as_ref() == Ok(&m);
        }
    }

    let ok = csv_ok && fuzz.is_ok() && real_ok;
    report(
        9,
        "determinism and wire round trip",
        ok,
        format!(
            "golden CSV {} ({} bytes), {FUZZ_CASES} fuzzed messages {}, {real} loop messages {}",
            if csv_ok { "identical" } else { "differs" },
            first.len(),
            if fuzz.is_ok() { "ok" } else { "failed" },
            if real_ok { "ok" } else { "failed" },
        ),
    );
    if let Err(e) = fuzz {
        println!("    fuzz failure: {e}");
    }
    assert!(ok);
}
