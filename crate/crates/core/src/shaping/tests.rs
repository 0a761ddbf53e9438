use std::collections::HashSet;

use super::*;
use crate::error::Error;
use crate::neural::NetworkShape;
use crate::tasks::TaskKind;

fn shapes() -> (NetworkShape, NetworkShape) {
    (NetworkShape::actor(32, 32, 32), NetworkShape::critic(32, 32, 32, 32))
}

fn smooth(t: &TrialSpec) -> crate::Result<f64> {
    let w = t.weights.as_slice();
    Ok(1.0 - w.iter().enumerate().map(|(i, x)| (x - 0.1 * i as f64).powi(2)).sum::<f64>())
}

#[test]
fn argmax_is_exact_over_completed() {
    let (a, c) = shapes();
    let mut db = TrialDb::in_memory();
    let runner = SurrogateRunner(smooth);
    let (w, best) = shape_rewards(TaskKind::P2p, &a, &c, &PhaseConfig::new(16, 4), &runner, &mut db, 3).unwrap();
    let trials = db.trials(Phase::RewardShaping);
    assert_eq!(trials.len(), 16);
    let max = trials.iter().map(|r| r.objective).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(best.objective, max);
    assert_eq!(w.as_slice(), best.params.as_slice());
}

#[test]
fn warm_start_is_uniform_random() {
    let (a, c) = shapes();
    let mut db = TrialDb::in_memory();
    let runner = SurrogateRunner(smooth);
    shape_rewards(TaskKind::Pf, &a, &c, &PhaseConfig::new(4, 4), &runner, &mut db, 9).unwrap();
    let trials = db.trials(Phase::RewardShaping);
    assert_eq!(trials.len(), 4);
    let distinct: HashSet<String> = trials.iter().map(|r| format!("{:?}", r.params)).collect();
    assert_eq!(distinct.len(), 4);
    assert!(trials.iter().all(|r| r.params.len() == 4 && r.params.iter().all(|p| (0.0..=1.0).contains(p))));
}

#[test]
fn failures_are_recorded_and_all_failed_is_an_error() {
    let (a, c) = shapes();
    let mut db = TrialDb::in_memory();
    let runner = SurrogateRunner(|_: &TrialSpec| Err(Error::NonFiniteLoss { update: 0 }));
    let r = shape_rewards(TaskKind::P2p, &a, &c, &PhaseConfig::new(8, 4), &runner, &mut db, 1);
    assert!(matches!(r, Err(Error::NoCompletedTrials(_))));
    assert!(db.trials(Phase::RewardShaping).iter().all(|t| t.status == TrialStatus::Failed));
}

#[test]
fn network_surrogate_finds_64() {
    let w = crate::tasks::RewardWeights::hand_tuned(TaskKind::P2p);
    let runner = SurrogateRunner(|t: &TrialSpec| {
        let all = t.actor.widths.iter().chain(&t.critic.widths);
        Ok(-all.map(|&x| (x as f64 - 64.0).powi(2)).sum::<f64>())
    });
    let mut db = TrialDb::in_memory();
    let cfg = PhaseConfig { random_warm_start: false, ..PhaseConfig::new(1200, 10) };
    let (a, c, _) = shape_networks(&w, (16, 512), &cfg, &runner, &mut db, 4).unwrap();
    for x in a.widths.iter().chain(&c.widths) {
        assert!((63..=65).contains(x), "{a:?} {c:?}");
    }
}

#[test]
fn degenerate_width_box() {
    let w = crate::tasks::RewardWeights::hand_tuned(TaskKind::P2p);
    let runner = SurrogateRunner(|t: &TrialSpec| Ok(t.trial_id as f64));
    let mut db = TrialDb::in_memory();
    let (a, c, _) = shape_networks(&w, (48, 48), &PhaseConfig::new(8, 4), &runner, &mut db, 4).unwrap();
    assert_eq!(a.widths, vec![48; 3]);
    assert_eq!(c.widths, vec![48; 4]);
}

#[test]
fn resume_skips_finished_trials() {
    use std::sync::atomic::{AtomicUsize, Ordering};
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trials.db");
    let (a, c) = shapes();
    let cfg = PhaseConfig::new(12, 4);

    let full = {
        let mut db = TrialDb::in_memory();
        shape_rewards(TaskKind::P2p, &a, &c, &cfg, &SurrogateRunner(smooth), &mut db, 5).unwrap().1
    };

    // Interrupt after the first generation completes and the second starts.
    {
        let calls = AtomicUsize::new(0);
        let crashing = SurrogateRunner(|t: &TrialSpec| {
            if calls.fetch_add(1, Ordering::SeqCst) >= 4 {
                return Err(Error::Config("simulated crash".into()));
            }
            smooth(t)
        });
        let mut db = TrialDb::open(&path).unwrap();
        let _ = shape_rewards(TaskKind::P2p, &a, &c, &PhaseConfig::new(4, 4), &crashing, &mut db, 5);
        db.append(TrialRecord {
            trial_id: 4,
            phase: Phase::RewardShaping,
            status: TrialStatus::Running,
            seed: 0,
            objective: f64::NAN,
            params: vec![],
        })
        .unwrap();
    }

    let calls = AtomicUsize::new(0);
    let counting = SurrogateRunner(|t: &TrialSpec| {
        calls.fetch_add(1, Ordering::SeqCst);
        assert!(t.trial_id >= 4, "trial {} ran twice", t.trial_id);
        smooth(t)
    });
    let mut db = TrialDb::open(&path).unwrap();
    let (_, best) = shape_rewards(TaskKind::P2p, &a, &c, &cfg, &counting, &mut db, 5).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 8);
    assert_eq!(best, full);
}

#[test]
fn running_never_exceeds_n_mc() {
    let (a, c) = shapes();
    let mut db = TrialDb::in_memory();
    let cfg = PhaseConfig { workers: 4, ..PhaseConfig::new(20, 4) };
    shape_rewards(TaskKind::P2p, &a, &c, &cfg, &SurrogateRunner(smooth), &mut db, 2).unwrap();
    let mut running = HashSet::new();
    for r in db.log() {
        match r.status {
            TrialStatus::Running => {
                running.insert(r.trial_id);
            }
            _ => {
                running.remove(&r.trial_id);
            }
        }
        assert!(running.len() <= 4);
    }
    // Each trial has exactly one running and one final record.
    assert_eq!(db.log().len(), 40);
}

#[test]
fn full_shaping_is_deterministic_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let (a, c) = shapes();
    let cfg = ShapingConfig {
        task: TaskKind::P2p,
        reward_phase: PhaseConfig::new(8, 4),
        network_phase: PhaseConfig::new(8, 4),
        default_actor: a,
        default_critic: c,
        width_bounds: (16, 128),
        master_seed: 17,
    };
    let runner = SurrogateRunner(|t: &TrialSpec| match t.phase {
        Phase::RewardShaping => smooth(t),
        Phase::NetworkShaping => Ok(-(t.actor.widths[0] as f64 - 50.0).abs()),
    });
    let mut texts = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("db{k}"));
        let mut db = TrialDb::open(&path).unwrap();
        let report = run_full_shaping(&cfg, &runner, &mut db).unwrap();
        assert_eq!(Some(&report.reward_best), db.best(Phase::RewardShaping).as_ref());
        assert_eq!(report.network_best, db.best(Phase::NetworkShaping));
        texts.push((std::fs::read_to_string(&path).unwrap(), report.to_text()));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn zero_network_budget_uses_defaults() {
    let (a, c) = shapes();
    let cfg = ShapingConfig {
        task: TaskKind::Pf,
        reward_phase: PhaseConfig::new(4, 4),
        network_phase: PhaseConfig::new(0, 4),
        default_actor: a.clone(),
        default_critic: c.clone(),
        width_bounds: (16, 128),
        master_seed: 1,
    };
    let mut db = TrialDb::in_memory();
    let report = run_full_shaping(&cfg, &SurrogateRunner(smooth), &mut db).unwrap();
    assert!(report.network_best.is_none());
    assert_eq!(report.actor_shape, a);
    assert_eq!(report.critic_shape, c);
    assert!(db.trials(Phase::NetworkShaping).is_empty());
}

#[test]
fn argmax_invariant_under_monotone_rescaling() {
    let (a, c) = shapes();
    let mut base_db = TrialDb::in_memory();
    let (_, base) = shape_rewards(TaskKind::P2p, &a, &c, &PhaseConfig::new(12, 4), &SurrogateRunner(smooth), &mut base_db, 8).unwrap();
    let scaled = SurrogateRunner(|t: &TrialSpec| smooth(t).map(|v| 3.0 * v.exp() + 7.0));
    let mut db = TrialDb::in_memory();
    let (_, best) = shape_rewards(TaskKind::P2p, &a, &c, &PhaseConfig::new(12, 4), &scaled, &mut db, 8).unwrap();
    assert_eq!(best.trial_id, base.trial_id);
    assert_eq!(best.params, base.params);
}
