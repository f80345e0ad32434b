//! The per-step behavior-policy controller.
//!
//! Each environment step the controller either defers to the current task's
//! own policy, or (when a heavy-tailed duration draw exceeds one step) picks
//! a donor task from the candidate set, takes that task's action once, and
//! repeats it until the duration counter runs out. Per-task success ratios
//! raise the shape parameter as a task improves and shut exploration off
//! entirely once the ratio passes the threshold.

mod tracker;

use std::collections::BTreeSet;
use std::io::Write;

use serde::Serialize;

pub use tracker::{
    compute_alpha, exploration_enabled, SuccessTracker, DEFAULT_ALPHA_BAR, DEFAULT_RHO_BAR, DEFAULT_TAU,
};

use crate::embeddings::CandidateIndexSet;
use crate::heavy_tail::ParetoII;
use crate::variates::Variates;
use crate::{Error, Result, TaskId};

/// Upper bound placed on duration draws when temporal extension is ablated.
/// Any value in `(1, 2]` keeps exploration to a single step.
pub const PER_STEP_DURATION_CAP: f64 = 1.5;

/// A task-conditioned policy `π(a | s, i)`.
///
/// Implementations must be deterministic given `(task, state, variates)`.
pub trait PolicyTable {
    fn n_actions(&self) -> usize;

    fn act(&self, task: TaskId, state: usize, variates: &mut dyn Variates) -> usize;
}

impl<P: PolicyTable + ?Sized> PolicyTable for &P {
    fn n_actions(&self) -> usize {
        (**self).n_actions()
    }

    fn act(&self, task: TaskId, state: usize, variates: &mut dyn Variates) -> usize {
        (**self).act(task, state, variates)
    }
}

/// Component switches for ablation studies. All off is the full method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablations {
    /// Candidate set is `{i}` and the held action is uniform over the
    /// task's own action space.
    pub no_behavior_sharing: bool,
    /// Duration draws are capped at [`PER_STEP_DURATION_CAP`], so donor
    /// actions last a single step.
    pub no_temporal_extension: bool,
    /// Success ratios are ignored: the shape stays at `alpha_bar + 1`,
    /// exploration never switches off, and donors are not filtered by ratio.
    pub no_success_tracking: bool,
    /// Drop the task itself from its candidate set when other candidates exist.
    pub exclude_self_from_candidates: bool,
}

impl Ablations {
    pub fn any(&self) -> bool {
        self.no_behavior_sharing || self.no_temporal_extension || self.no_success_tracking
    }

    /// Short label, e.g. `full` or `no_behavior_sharing`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.no_behavior_sharing {
            parts.push("no_behavior_sharing");
        }
        if self.no_temporal_extension {
            parts.push("no_temporal_extension");
        }
        if self.no_success_tracking {
            parts.push("no_success_tracking");
        }
        if self.exclude_self_from_candidates {
            parts.push("exclude_self");
        }
        if parts.is_empty() {
            "full".to_string()
        } else {
            parts.join("+")
        }
    }
}

/// Per-episode controller state.
///
/// `held_action` is present exactly while a repetition is in progress
/// (`counter > 1`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExplorationState {
    pub counter: f64,
    pub held_action: Option<usize>,
    pub source_task: Option<TaskId>,
}

impl ExplorationState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Must be called at every episode start.
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    pub fn in_exploration(&self) -> bool {
        self.held_action.is_some()
    }
}

/// What the controller emitted on one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub action: usize,
    /// Task whose policy produced the action.
    pub source_task: TaskId,
    /// The action belongs to an exploration-mode repetition.
    pub explored: bool,
    /// Counter after the decrement.
    pub counter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MtLevyController {
    lambda: f64,
    ablations: Ablations,
}

impl Default for MtLevyController {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            ablations: Ablations::default(),
        }
    }
}

impl MtLevyController {
    pub fn new(lambda: f64, ablations: Ablations) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { lambda, ablations })
    }

    pub fn ablations(&self) -> Ablations {
        self.ablations
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Shape parameter the controller would use for `task` right now.
    pub fn alpha(&self, task: TaskId, tracker: &SuccessTracker) -> f64 {
        let rho = if self.ablations.no_success_tracking {
            0.0
        } else {
            tracker.rho(task)
        };
        compute_alpha(rho, tracker.rho_bar(), tracker.alpha_bar()).expect("tracker validates rho_bar")
    }

    pub fn exploration_enabled(&self, task: TaskId, tracker: &SuccessTracker) -> bool {
        self.ablations.no_success_tracking || tracker.exploration_enabled(task)
    }

    /// Donor tasks for `task`, honoring the ablation switches.
    pub fn candidates(&self, task: TaskId, tracker: &SuccessTracker, nearest: &CandidateIndexSet) -> BTreeSet<TaskId> {
        if self.ablations.no_behavior_sharing {
            return BTreeSet::from([task]);
        }
        let mut set = if self.ablations.no_success_tracking {
            let mut all = nearest.neighbors.clone();
            all.insert(task);
            all
        } else {
            build_candidates(task, tracker, nearest)
        };
        if self.ablations.exclude_self_from_candidates && set.len() > 1 {
            set.remove(&task);
        }
        set
    }

    /// Decides the action for one environment step and advances `state`.
    #[allow(clippy::too_many_arguments)]
    pub fn step<P, V>(
        &self,
        state: &mut ExplorationState,
        task: TaskId,
        s: usize,
        tracker: &SuccessTracker,
        nearest: &CandidateIndexSet,
        policies: &P,
        variates: &mut V,
    ) -> Result<Decision>
    where
        P: PolicyTable + ?Sized,
        V: Variates,
    {
        task.check(tracker.n_tasks())?;
        if nearest.task != task {
            return Err(Error::Usage(format!(
                "candidate set belongs to task {}, stepping task {task}",
                nearest.task
            )));
        }

        if !self.exploration_enabled(task, tracker) {
            // Any repetition in flight is abandoned.
            state.reset();
            let action = policies.act(task, s, variates);
            return Ok(Decision {
                action,
                source_task: task,
                explored: false,
                counter: 0.0,
            });
        }

        let (action, source_task, explored) = if state.counter <= 1.0 {
            let shape = ParetoII::new(self.alpha(task, tracker), self.lambda)?;
            let mut c = shape.sample(variates.uniform())?;
            if self.ablations.no_temporal_extension {
                c = c.min(PER_STEP_DURATION_CAP);
            }
            state.counter = c;
            if c > 1.0 {
                let candidates = self.candidates(task, tracker, nearest);
                let k = select_action_source(&candidates, variates.uniform())?;
                let action = if self.ablations.no_behavior_sharing {
                    variates.index(policies.n_actions())
                } else {
                    policies.act(k, s, variates)
                };
                state.held_action = Some(action);
                state.source_task = Some(k);
                (action, k, true)
            } else {
                state.held_action = None;
                state.source_task = None;
                (policies.act(task, s, variates), task, false)
            }
        } else {
            match (state.held_action, state.source_task) {
                (Some(a), Some(k)) => (a, k, true),
                _ => {
                    return Err(Error::Invariant(format!(
                        "counter {} > 1 with no held action",
                        state.counter
                    )))
                }
            }
        };

        state.counter = (state.counter - 1.0).max(0.0);
        if state.counter <= 1.0 {
            state.held_action = None;
            state.source_task = None;
        }
        Ok(Decision {
            action,
            source_task,
            explored,
            counter: state.counter,
        })
    }
}

/// `{i} ∪ { j ∈ nearest : rho_j > rho_bar }`.
pub fn build_candidates(task: TaskId, tracker: &SuccessTracker, nearest: &CandidateIndexSet) -> BTreeSet<TaskId> {
    let mut set = BTreeSet::from([task]);
    set.extend(
        nearest
            .neighbors
            .iter()
            .copied()
            .filter(|&j| j.0 >= 1 && j.0 <= tracker.n_tasks() && tracker.rho(j) > tracker.rho_bar()),
    );
    set
}

/// `sorted(candidates)[floor(u * |candidates|)]`.
pub fn select_action_source(candidates: &BTreeSet<TaskId>, u: f64) -> Result<TaskId> {
    if candidates.is_empty() {
        return Err(Error::domain("candidate set is empty"));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::domain(format!("uniform variate {u} outside [0, 1)")));
    }
    let pos = ((u * candidates.len() as f64) as usize).min(candidates.len() - 1);
    Ok(*candidates.iter().nth(pos).expect("pos < len"))
}

/// One row of a controller trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub task: TaskId,
    pub counter: f64,
    pub source_task: TaskId,
    pub explored: bool,
}

impl TraceRow {
    pub fn new(t: usize, task: TaskId, d: &Decision) -> Self {
        Self {
            t,
            task,
            counter: d.counter,
            source_task: d.source_task,
            explored: d.explored,
        }
    }
}

/// Writes `t,task,counter,source_task,explored` rows.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(["t", "task", "counter", "source_task", "explored"])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variates::{RngVariates, ScriptedVariates};
    use std::cell::Cell;

    /// Task `k` always answers `10 * k + state`, and counts its calls.
    struct Tagged {
        calls: Cell<usize>,
    }

    impl Tagged {
        fn new() -> Self {
            Self { calls: Cell::new(0) }
        }
    }

    impl PolicyTable for Tagged {
        fn n_actions(&self) -> usize {
            4
        }

        fn act(&self, task: TaskId, state: usize, _: &mut dyn Variates) -> usize {
            self.calls.set(self.calls.get() + 1);
            10 * task.0 + state
        }
    }

    /// Uniform variate whose inverse-CDF draw under Pareto(alpha, 1) is `c`.
    fn u_for(c: f64, alpha: f64) -> f64 {
        1.0 - (1.0 + c).powf(-alpha)
    }

    fn ids(set: &BTreeSet<TaskId>) -> Vec<usize> {
        set.iter().map(|t| t.0).collect()
    }

    fn tracker(rhos: &[f64]) -> SuccessTracker {
        let mut t = SuccessTracker::with_defaults(rhos.len()).unwrap();
        for (i, &r) in rhos.iter().enumerate() {
            t.set_rho(TaskId::from_index(i), r).unwrap();
        }
        t
    }

    fn set(task: usize, members: &[usize]) -> CandidateIndexSet {
        CandidateIndexSet {
            task: TaskId(task),
            neighbors: members.iter().map(|&m| TaskId(m)).collect(),
        }
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(ids(&build_candidates(TaskId(1), &tracker(&[0.0]), &set(1, &[1]))), vec![1]);
        let t = tracker(&[0.0, 0.5, 0.05]);
        assert_eq!(ids(&build_candidates(TaskId(1), &t, &set(1, &[1, 2, 3]))), vec![1, 2]);
        let t = tracker(&[0.0, 0.5, 0.5]);
        assert_eq!(ids(&build_candidates(TaskId(1), &t, &set(1, &[1, 3]))), vec![1, 3]);
    }

    #[test]
    fn source_selection_examples() {
        let one = BTreeSet::from([TaskId(1)]);
        assert_eq!(select_action_source(&one, 0.99).unwrap(), TaskId(1));
        let two = BTreeSet::from([TaskId(1), TaskId(2)]);
        assert_eq!(select_action_source(&two, 0.6).unwrap(), TaskId(2));
        let three = BTreeSet::from([TaskId(3), TaskId(7), TaskId(9)]);
        assert_eq!(select_action_source(&three, 0.0).unwrap(), TaskId(3));
        assert!(select_action_source(&BTreeSet::new(), 0.5).is_err());
    }

    #[test]
    fn held_action_repeats_without_policy_calls() {
        let ctl = MtLevyController::default();
        let p = Tagged::new();
        let mut st = ExplorationState {
            counter: 5.0,
            held_action: Some(7),
            source_task: Some(TaskId(2)),
        };
        let mut v = ScriptedVariates::default();
        let d = ctl
            .step(&mut st, TaskId(1), 0, &tracker(&[0.0, 0.5]), &set(1, &[1, 2]), &p, &mut v)
            .unwrap();
        assert_eq!(d.action, 7);
        assert_eq!(d.counter, 4.0);
        assert_eq!(p.calls.get(), 0);
        assert_eq!(v.consumed(), 0);
    }

    #[test]
    fn short_draw_uses_own_policy() {
        let ctl = MtLevyController::default();
        let p = Tagged::new();
        let mut st = ExplorationState::new();
        // alpha = 2 at rho = 0.
        let mut v = ScriptedVariates::new([u_for(0.5, 2.0)]);
        let d = ctl
            .step(&mut st, TaskId(1), 3, &tracker(&[0.0, 0.5]), &set(1, &[1, 2]), &p, &mut v)
            .unwrap();
        assert_eq!(d.action, 13);
        assert_eq!(d.counter, 0.0);
        assert!(!d.explored);
        assert!(!st.in_exploration());
    }

    #[test]
    fn long_draw_repeats_donor_action() {
        let ctl = MtLevyController::default();
        let p = Tagged::new();
        let mut st = ExplorationState::new();
        let tr = tracker(&[0.0, 0.5]);
        let c = set(1, &[1, 2]);
        // c = 3.7, then pick the second candidate (task 2).
        let mut v = ScriptedVariates::new([u_for(3.7, 2.0), 0.75]);
        let mut emitted = Vec::new();
        for s in 0..3 {
            let d = ctl.step(&mut st, TaskId(1), s, &tr, &c, &p, &mut v).unwrap();
            emitted.push((d.action, d.source_task.0, d.explored));
        }
        assert_eq!(emitted, vec![(20, 2, true), (20, 2, true), (20, 2, true)]);
        assert_eq!(p.calls.get(), 1);
        assert!(!st.in_exploration());
        assert!((st.counter - 0.7).abs() < 1e-9);
        // The fourth step redraws.
        v.push(u_for(0.2, 2.0));
        let d = ctl.step(&mut st, TaskId(1), 9, &tr, &c, &p, &mut v).unwrap();
        assert_eq!((d.action, d.explored), (19, false));
    }

    #[test]
    fn emission_count_matches_ceil_of_duration_minus_one() {
        let ctl = MtLevyController::default();
        let p = Tagged::new();
        let tr = tracker(&[0.0]);
        let c = set(1, &[1]);
        for &draw in &[1.01, 1.5, 2.0, 2.000_001, 3.7, 4.0, 10.3, 57.0] {
            let mut st = ExplorationState::new();
            let mut v = ScriptedVariates::new([u_for(draw, 2.0), 0.0]);
            let mut n = 0;
            loop {
                let d = ctl.step(&mut st, TaskId(1), 0, &tr, &c, &p, &mut v).unwrap();
                assert!(d.explored);
                n += 1;
                if !st.in_exploration() {
                    break;
                }
            }
            let expected = (draw - 1.0_f64).ceil() as usize;
            // Recovering `draw` from `u` loses a few ulps; integer draws are fragile.
            if (draw - draw.round()).abs() > 1e-9 {
                assert_eq!(n, expected, "draw {draw}");
            } else {
                assert!(n == expected || n == expected + 1, "draw {draw}: {n}");
            }
        }
    }

    #[test]
    fn disabled_exploration_defers_to_own_policy() {
        let ctl = MtLevyController::default();
        let p = Tagged::new();
        let mut st = ExplorationState {
            counter: 6.0,
            held_action: Some(99),
            source_task: Some(TaskId(2)),
        };
        let mut v = ScriptedVariates::default();
        let d = ctl
            .step(&mut st, TaskId(1), 4, &tracker(&[0.2, 0.5]), &set(1, &[1, 2]), &p, &mut v)
            .unwrap();
        assert_eq!((d.action, d.counter, d.explored), (14, 0.0, false));
        assert_eq!(st, ExplorationState::default());
        assert_eq!(v.consumed(), 0);
    }

    #[test]
    fn missing_held_action_is_an_invariant_violation() {
        let ctl = MtLevyController::default();
        let mut st = ExplorationState {
            counter: 3.0,
            held_action: None,
            source_task: None,
        };
        let err = ctl
            .step(
                &mut st,
                TaskId(1),
                0,
                &tracker(&[0.0]),
                &set(1, &[1]),
                &Tagged::new(),
                &mut ScriptedVariates::default(),
            )
            .unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn ablated_temporal_extension_lasts_one_step() {
        let ctl = MtLevyController::new(
            1.0,
            Ablations {
                no_temporal_extension: true,
                ..Default::default()
            },
        )
        .unwrap();
        let mut st = ExplorationState::new();
        let mut v = ScriptedVariates::new([u_for(40.0, 2.0), 0.9]);
        let d = ctl
            .step(&mut st, TaskId(1), 0, &tracker(&[0.0, 0.5]), &set(1, &[1, 2]), &Tagged::new(), &mut v)
            .unwrap();
        assert_eq!((d.action, d.explored), (20, true));
        assert!(!st.in_exploration());
    }

    #[test]
    fn ablated_sharing_holds_a_random_own_action() {
        let ctl = MtLevyController::new(
            1.0,
            Ablations {
                no_behavior_sharing: true,
                ..Default::default()
            },
        )
        .unwrap();
        let p = Tagged::new();
        let mut st = ExplorationState::new();
        let mut v = ScriptedVariates::new([u_for(3.5, 2.0), 0.99, 0.6]);
        let d = ctl
            .step(&mut st, TaskId(1), 0, &tracker(&[0.0, 0.5]), &set(1, &[1, 2]), &p, &mut v)
            .unwrap();
        // floor(0.6 * 4) = 2.
        assert_eq!((d.action, d.source_task, d.explored), (2, TaskId(1), true));
        assert_eq!(p.calls.get(), 0);
    }

    #[test]
    fn ablated_tracking_keeps_exploring_and_fixes_alpha() {
        let ctl = MtLevyController::new(
            1.0,
            Ablations {
                no_success_tracking: true,
                ..Default::default()
            },
        )
        .unwrap();
        let tr = tracker(&[0.9, 0.0]);
        assert!(ctl.exploration_enabled(TaskId(1), &tr));
        assert_eq!(ctl.alpha(TaskId(1), &tr), 2.0);
        assert_eq!(ids(&ctl.candidates(TaskId(1), &tr, &set(1, &[1, 2]))), vec![1, 2]);
    }

    #[test]
    fn exclude_self_keeps_a_nonempty_set() {
        let ctl = MtLevyController::new(
            1.0,
            Ablations {
                exclude_self_from_candidates: true,
                ..Default::default()
            },
        )
        .unwrap();
        let tr = tracker(&[0.0, 0.5, 0.0]);
        assert_eq!(ids(&ctl.candidates(TaskId(1), &tr, &set(1, &[1, 2, 3]))), vec![2]);
        assert_eq!(ids(&ctl.candidates(TaskId(3), &tr, &set(3, &[3]))), vec![3]);
    }

    #[test]
    fn higher_ratio_means_rarer_exploration() {
        // P(c > 1) = 2^-alpha with lambda = 1.
        let mut prev = f64::INFINITY;
        for k in 0..=10 {
            let rho = k as f64 * 0.01;
            let alpha = compute_alpha(rho, 0.1, 1.0).unwrap();
            let p_enter = ParetoII::new(alpha, 1.0).unwrap().survival(1.0).unwrap();
            assert!((p_enter - 2f64.powf(-alpha)).abs() < 1e-15);
            assert!(p_enter < prev);
            prev = p_enter;
        }
    }

    #[test]
    fn candidates_never_empty_or_out_of_range() {
        let mut v = RngVariates::seed_from_u64(3);
        for _ in 0..500 {
            let n = 1 + v.index(8);
            let rhos: Vec<f64> = (0..n).map(|_| v.uniform() * 0.3).collect();
            let tr = tracker(&rhos);
            let task = TaskId(1 + v.index(n));
            let mut members: BTreeSet<usize> = (1..=n).filter(|_| v.uniform() < 0.5).collect();
            members.insert(task.0);
            let c = CandidateIndexSet {
                task,
                neighbors: members.into_iter().map(TaskId).collect(),
            };
            let out = build_candidates(task, &tr, &c);
            assert!(out.contains(&task));
            assert!(out.iter().all(|t| t.0 >= 1 && t.0 <= n));
        }
    }

    #[test]
    fn trace_csv_format() {
        let d = Decision {
            action: 1,
            source_task: TaskId(2),
            explored: true,
            counter: 2.5,
        };
        let mut buf = Vec::new();
        write_trace_csv(&[TraceRow::new(0, TaskId(1), &d)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,task,counter,source_task,explored\n0,1,2.5,2,true\n"
        );
    }
}
