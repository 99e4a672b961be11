//! Seeded trial runner, aggregation and CSV output.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::association::load;
use crate::config::{ConfigError, ScenarioConfig};
use crate::netmodel::{build_scenario, RcState};
use crate::ric::{run_to_fixed_point, LoopTrace, RicError};
use crate::xapps::PolicyKind;

pub const CSV_HEADER: [&str; 13] = [
    "policy",
    "n_ues",
    "trial",
    "seed",
    "total_w",
    "fixed_w",
    "data_w",
    "tc_w",
    "saving_pct",
    "sleeping_rcs",
    "outages",
    "mean_load",
    "steps",
];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ric(#[from] RicError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl HarnessError {
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub policy: PolicyKind,
    pub n_ues: usize,
    pub trial: usize,
    pub seed: u64,
    pub total_w: f64,
    pub fixed_w: f64,
    pub data_w: f64,
    pub tc_w: f64,
    /// Relative to the all-on power of the same layout.
    pub saving_pct: f64,
    pub sleeping_rcs: usize,
    pub outages: usize,
    /// Mean PRB load over active RCs; zero when none is active.
    pub mean_load: f64,
    pub steps: usize,
    pub layout_hash: String,
}

/// Runs one policy on one seeded layout to its fixed point.
pub fn run_trial(
    config: &ScenarioConfig,
    policy: PolicyKind,
    n_ues: usize,
    seed: u64,
) -> Result<TrialResult, HarnessError> {
    let (result, _) = run_trial_traced(config, policy, n_ues, seed)?;
    Ok(result)
}

/// [`run_trial`] that also hands back the full control-loop trace.
pub fn run_trial_traced(
    config: &ScenarioConfig,
    policy: PolicyKind,
    n_ues: usize,
    seed: u64,
) -> Result<(TrialResult, LoopTrace), HarnessError> {
    config.validate()?;
    let state = build_scenario(config, n_ues, seed)?;
    let mut p = policy.build(config);
    let trace = run_to_fixed_point(state, &mut p, config.max_steps)?;

    let power = trace.final_power();
    let all_on = trace.initial_power.total_w;
    let s = &trace.final_state;
    let active: Vec<_> = s
        .rcs
        .iter()
        .filter(|rc| rc.state == RcState::Active)
        .collect();
    let mean_load = if active.is_empty() {
        0.0
    } else {
        active
            .iter()
            .map(|rc| load(s, rc.rc_id, &trace.final_assoc))
            .sum::<f64>()
            / active.len() as f64
    };
    let result = TrialResult {
        policy,
        n_ues,
        trial: 0,
        seed,
        total_w: power.total_w,
        fixed_w: power.fixed_w,
        data_w: power.data_w,
        tc_w: power.tc_w,
        saving_pct: 100.0 * (1.0 - power.total_w / all_on),
        sleeping_rcs: s.sleeping_count(),
        outages: trace.final_assoc.outage_count(),
        mean_load,
        steps: trace.fixed_point_at.unwrap_or(trace.steps.len()),
        layout_hash: trace.layout_hash.clone(),
    };
    Ok((result, trace))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single trial.
    pub stddev: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Stat {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Stat {
                mean: f64::NAN,
                stddev: f64::NAN,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let stddev = if v.len() < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Stat { mean, stddev }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub policy: PolicyKind,
    pub n_ues: usize,
    pub trials: usize,
    pub total_w: Stat,
    pub saving_pct: Stat,
    pub sleeping_rcs: Stat,
    pub outages: Stat,
    pub mean_load: Stat,
    pub steps: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
}

impl Experiment {
    pub fn aggregate(&self, policy: PolicyKind, n_ues: usize) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.policy == policy && a.n_ues == n_ues)
    }
}

/// Runs every (policy, UE count, trial) combination. Trial `i` uses seed
/// `base_seed + i` for every policy, so layouts are paired across policies.
pub fn run_experiment(
    config: &ScenarioConfig,
    policies: &[PolicyKind],
    ue_counts: &[usize],
    n_trials: usize,
    base_seed: u64,
) -> Result<Experiment, HarnessError> {
    config.validate()?;
    if n_trials == 0 {
        return Err(ConfigError::Invalid("at least one trial is required".into()).into());
    }
    let jobs: Vec<(PolicyKind, usize, usize)> = policies
        .iter()
        .flat_map(|&p| {
            ue_counts
                .iter()
                .flat_map(move |&n| (0..n_trials).map(move |t| (p, n, t)))
        })
        .collect();
    let mut trials = jobs
        .par_iter()
        .map(|&(p, n, t)| {
            run_trial(config, p, n, base_seed.wrapping_add(t as u64))
                .map(|r| TrialResult { trial: t, ..r })
        })
        .collect::<Result<Vec<_>, _>>()?;
    sort_rows(&mut trials);
    let aggregates = aggregate(&trials);
    Ok(Experiment { trials, aggregates })
}

fn sort_rows(rows: &mut [TrialResult]) {
    rows.sort_by(|a, b| {
        a.policy
            .name()
            .cmp(b.policy.name())
            .then(a.n_ues.cmp(&b.n_ues))
            .then(a.trial.cmp(&b.trial))
    });
}

/// Mean and standard deviation per (policy, UE count), in row order.
pub fn aggregate(rows: &[TrialResult]) -> Vec<Aggregate> {
    let mut keys: Vec<(PolicyKind, usize)> = rows.iter().map(|r| (r.policy, r.n_ues)).collect();
    keys.sort_by(|a, b| a.0.name().cmp(b.0.name()).then(a.1.cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(policy, n_ues)| {
            let group: Vec<&TrialResult> = rows
                .iter()
                .filter(|r| r.policy == policy && r.n_ues == n_ues)
                .collect();
            let stat = |f: fn(&TrialResult) -> f64| Stat::of(group.iter().map(|r| f(r)));
            Aggregate {
                policy,
                n_ues,
                trials: group.len(),
                total_w: stat(|r| r.total_w),
                saving_pct: stat(|r| r.saving_pct),
                sleeping_rcs: stat(|r| r.sleeping_rcs as f64),
                outages: stat(|r| r.outages as f64),
                mean_load: stat(|r| r.mean_load),
                steps: stat(|r| r.steps as f64),
            }
        })
        .collect()
}

/// `%g`-style rendering with six significant digits.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_record(r: &TrialResult) -> [String; 13] {
    [
        r.policy.name().to_string(),
        r.n_ues.to_string(),
        r.trial.to_string(),
        r.seed.to_string(),
        fmt_sig6(r.total_w),
        fmt_sig6(r.fixed_w),
        fmt_sig6(r.data_w),
        fmt_sig6(r.tc_w),
        fmt_sig6(r.saving_pct),
        r.sleeping_rcs.to_string(),
        r.outages.to_string(),
        fmt_sig6(r.mean_load),
        r.steps.to_string(),
    ]
}

/// Renders trial rows, sorted by (policy, UE count, trial), as CSV text.
pub fn csv_string(results: &[TrialResult]) -> String {
    let mut rows = results.to_vec();
    sort_rows(&mut rows);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &rows {
        w.write_record(csv_record(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ASCII output")
}

pub fn write_csv(results: &[TrialResult], path: &Path) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::create(path).map_err(io)?;
    f.write_all(csv_string(results).as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)
}

/// One row per (policy, UE count) with mean and stddev columns.
pub fn write_summary_csv(aggregates: &[Aggregate], path: &Path) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record([
        "policy",
        "n_ues",
        "trials",
        "total_w_mean",
        "total_w_std",
        "saving_pct_mean",
        "saving_pct_std",
        "sleeping_rcs_mean",
        "sleeping_rcs_std",
        "outages_mean",
        "mean_load_mean",
        "steps_mean",
    ])
    .map_err(csv_err)?;
    for a in aggregates {
        w.write_record([
            a.policy.name().to_string(),
            a.n_ues.to_string(),
            a.trials.to_string(),
            fmt_sig6(a.total_w.mean),
            fmt_sig6(a.total_w.stddev),
            fmt_sig6(a.saving_pct.mean),
            fmt_sig6(a.saving_pct.stddev),
            fmt_sig6(a.sleeping_rcs.mean),
            fmt_sig6(a.sleeping_rcs.stddev),
            fmt_sig6(a.outages.mean),
            fmt_sig6(a.mean_load.mean),
            fmt_sig6(a.steps.mean),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(fmt_sig6(504.0), "504");
        assert_eq!(fmt_sig6(120.0), "120");
        assert_eq!(fmt_sig6(59.880239520958), "59.8802");
        assert_eq!(fmt_sig6(0.0439560439), "0.043956");
        assert_eq!(fmt_sig6(99.999995), "100");
        assert_eq!(fmt_sig6(1234567.0), "1.23457e+06");
        assert_eq!(fmt_sig6(0.0000123456789), "1.23457e-05");
        assert_eq!(fmt_sig6(-3.5), "-3.5");
        assert_eq!(fmt_sig6(0.0), "0");
    }

    #[test]
    fn all_on_saves_nothing() {
        let cfg = ScenarioConfig::default();
        for seed in [1, 7] {
            let r = run_trial(&cfg, PolicyKind::AllOn, 20, seed).unwrap();
            assert_eq!(r.saving_pct, 0.0);
            assert_eq!(r.sleeping_rcs, 0);
            assert_eq!(r.steps, 1);
        }
    }

    #[test]
    fn xapp1_without_ues_sleeps_all() {
        let r = run_trial(&ScenarioConfig::default(), PolicyKind::XApp1, 0, 4).unwrap();
        assert_eq!(r.sleeping_rcs, 24);
        assert_eq!(r.total_w, 120.0);
        assert_eq!(r.steps, 2);
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = run_trial(&cfg, PolicyKind::XApp2, 50, 9).unwrap();
        let b = run_trial(&cfg, PolicyKind::XApp2, 50, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn experiment_cardinality_and_pairing() {
        let cfg = ScenarioConfig::default();
        let exp = run_experiment(&cfg, &PolicyKind::ALL, &[10, 50], 3, 1).unwrap();
        assert_eq!(exp.trials.len(), 3 * 2 * 3);
        assert_eq!(exp.aggregates.len(), 6);
        for t in 0..3 {
            let hashes: Vec<&str> = exp
                .trials
                .iter()
                .filter(|r| r.trial == t && r.n_ues == 50)
                .map(|r| r.layout_hash.as_str())
                .collect();
            assert_eq!(hashes.len(), 3);
            assert!(hashes.iter().all(|h| *h == hashes[0]));
        }
        for a in &exp.aggregates {
            let rows: Vec<_> = exp
                .trials
                .iter()
                .filter(|r| r.policy == a.policy && r.n_ues == a.n_ues)
                .collect();
            let mean = rows.iter().map(|r| r.total_w).sum::<f64>() / rows.len() as f64;
            assert!((a.total_w.mean - mean).abs() < 1e-9);
        }
    }

    #[test]
    fn full_sweep_shape_and_paired_ordering() {
        let exp = run_experiment(
            &ScenarioConfig::default(),
            &PolicyKind::ALL,
            &[10, 50, 100],
            10,
            1,
        )
        .unwrap();
        assert_eq!(exp.trials.len(), 90);
        assert_eq!(exp.aggregates.len(), 9);
        let find = |p, n, t| {
            exp.trials
                .iter()
                .find(|r| r.policy == p && r.n_ues == n && r.trial == t)
                .unwrap()
        };
        for n in [10, 50, 100] {
            for t in 0..10 {
                let x1 = find(PolicyKind::XApp1, n, t);
                let x2 = find(PolicyKind::XApp2, n, t);
                assert!(x2.saving_pct >= x1.saving_pct - 0.5, "n={n} t={t}");
                assert!(x2.sleeping_rcs <= 24);
            }
        }
        for n in [10, 50, 100] {
            let power = |p| exp.aggregate(p, n).unwrap().total_w.mean;
            assert!(power(PolicyKind::AllOn) > power(PolicyKind::XApp1));
            assert!(power(PolicyKind::XApp1) > power(PolicyKind::XApp2));
        }
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let err =
            run_experiment(&ScenarioConfig::default(), &PolicyKind::ALL, &[10], 0, 1).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn empty_results_give_header_only() {
        assert_eq!(csv_string(&[]), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn unwritable_path_reports_path() {
        let err = write_csv(&[], Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }

    #[test]
    fn stddev_is_sample_stddev() {
        let s = Stat::of([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(s.mean, 5.0);
        assert!((s.stddev - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(Stat::of([3.0]).stddev, 0.0);
    }
}
