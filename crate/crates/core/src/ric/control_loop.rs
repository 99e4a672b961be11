use serde::Serialize;

use crate::association::{admit, associate_all, check_constraints, AssociationMap};
use crate::netmodel::NetworkState;
use crate::power::{total_power, PowerBreakdown};
use crate::ric::action::{apply_batch, ControlAction, RejectReason};
use crate::ric::kpm::{collect_kpms, KpmReport};
use crate::ric::protocol::Ack;
use crate::ric::RicError;

/// A decision policy hosted on the RIC. In-process xApps implement this
/// directly; remote ones are reached through
/// [`RemotePolicy`](crate::ric::transport::RemotePolicy).
pub trait Policy {
    fn name(&self) -> &str;

    fn decide(&mut self, report: &KpmReport) -> Result<Vec<ControlAction>, RicError>;

    fn acknowledge(&mut self, _ack: &Ack) -> Result<(), RicError> {
        Ok(())
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&mut self, report: &KpmReport) -> Result<Vec<ControlAction>, RicError> {
        (**self).decide(report)
    }

    fn acknowledge(&mut self, ack: &Ack) -> Result<(), RicError> {
        (**self).acknowledge(ack)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: u64,
    pub report: KpmReport,
    pub actions: Vec<ControlAction>,
    pub verdicts: Vec<Result<(), RejectReason>>,
    pub power: PowerBreakdown,
    pub feasible: bool,
    pub outages: usize,
}

impl StepRecord {
    pub fn accepted(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_ok()).count()
    }
}

#[derive(Debug, Clone)]
pub struct LoopTrace {
    pub policy: String,
    pub layout_hash: String,
    pub initial_power: PowerBreakdown,
    pub initial_outages: usize,
    pub steps: Vec<StepRecord>,
    /// Step count up to and including the first step with no accepted
    /// action, if one occurred.
    pub fixed_point_at: Option<usize>,
    pub final_state: NetworkState,
    pub final_assoc: AssociationMap,
}

impl LoopTrace {
    pub fn final_power(&self) -> PowerBreakdown {
        self.steps.last().map_or(self.initial_power, |s| s.power)
    }
}

/// Runs exactly `steps` request/report/decide/apply cycles.
pub fn run_control_loop(
    state: NetworkState,
    policy: &mut dyn Policy,
    steps: usize,
) -> Result<LoopTrace, RicError> {
    drive(state, policy, steps, false)
}

/// Runs until a step applies no action, or `max_steps` steps.
pub fn run_to_fixed_point(
    state: NetworkState,
    policy: &mut dyn Policy,
    max_steps: usize,
) -> Result<LoopTrace, RicError> {
    drive(state, policy, max_steps, true)
}

fn drive(
    mut state: NetworkState,
    policy: &mut dyn Policy,
    steps: usize,
    stop_at_fixed_point: bool,
) -> Result<LoopTrace, RicError> {
    if steps == 0 {
        return Err(RicError::Config(
            "control loop needs at least one step".into(),
        ));
    }
    let mut assoc = associate_all(&state);
    let initial_power = total_power(&state, &assoc);
    let initial_outages = assoc.outage_count();
    let mut records = Vec::with_capacity(steps);
    let mut fixed_point_at = None;

    for step in 0..steps as u64 {
        let report = collect_kpms(&state, &assoc, step);
        let actions = policy.decide(&report)?;
        let verdicts = apply_batch(&mut state, &mut assoc, &actions);
        policy.acknowledge(&Ack::from_verdicts(step, &verdicts))?;

        // UEs left without service (e.g. after a wake) get another chance.
        let waiting: Vec<_> = assoc.outages().collect();
        for ue in waiting {
            admit(&state, &mut assoc, ue);
        }

        let constraints = check_constraints(&state, &assoc);
        if !constraints.feasible {
            return Err(RicError::ConstraintViolation {
                step,
                details: constraints.violations().join("; "),
            });
        }
        let record = StepRecord {
            step,
            report,
            actions,
            verdicts,
            power: total_power(&state, &assoc),
            feasible: constraints.feasible,
            outages: assoc.outage_count(),
        };
        let quiet = record.accepted() == 0;
        records.push(record);
        if quiet && fixed_point_at.is_none() {
            fixed_point_at = Some(records.len());
            if stop_at_fixed_point {
                break;
            }
        }
    }

    Ok(LoopTrace {
        policy: policy.name().to_string(),
        layout_hash: state.layout_hash(),
        initial_power,
        initial_outages,
        steps: records,
        fixed_point_at,
        final_state: state,
        final_assoc: assoc,
    })
}
