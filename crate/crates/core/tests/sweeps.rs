use std::f64::consts::{FRAC_PI_2, PI};

use esst_core::areas::{design_sequence, DesignSpec, Target};
use esst_core::experiments::{
    delayed_sequence, sweep_delays, sweep_phase_duration, target_populations, trace_populations, Axis, Engine,
};
use esst_core::model::{Handedness, Level, Levels, MoleculeSpec};

fn molecule() -> MoleculeSpec {
    MoleculeSpec::cyclohexylmethanol()
}

fn spec(target: Target) -> DesignSpec {
    DesignSpec::new(&molecule(), target, Handedness::Left, 35.0)
}

#[test]
fn right_hand_equals_left_hand_shifted_by_pi() {
    let m = molecule();
    let phases = Axis::new("phase", 0.0, 1.5 * PI, 4);
    let taus = Axis::new("tau", 35.0, 35.0, 1);
    let grid = sweep_phase_duration(&m, &spec(Target::C), &phases, &taus, Levels::Three, Engine::Exact).unwrap();
    for i in 0..4 {
        let right = grid.get(Handedness::Right, i, 0);
        let left = grid.get(Handedness::Left, (i + 2) % 4, 0);
        assert!((right - left).abs() < 1e-6, "phase index {i}: {right} vs {left}");
    }
}

#[test]
fn analytic_engine_tracks_propagation_on_resonance() {
    let m = molecule();
    let phases = Axis::new("phase", 0.0, 1.75 * PI, 8);
    let taus = Axis::new("tau", 30.0, 40.0, 2);
    for target in [Target::C, Target::B] {
        let s = spec(target);
        let analytic = sweep_phase_duration(&m, &s, &phases, &taus, Levels::Three, Engine::Analytic).unwrap();
        let exact = sweep_phase_duration(&m, &s, &phases, &taus, Levels::Three, Engine::Exact).unwrap();
        for hand in Handedness::BOTH {
            for (a, e) in analytic.payload(hand).iter().zip(exact.payload(hand)) {
                assert!((a - e).abs() < 1e-2, "{target:?} {hand}: {a} vs {e}");
            }
        }
    }
}

#[test]
fn target_c_trace_has_a_half_half_plateau() {
    let m = molecule();
    let s = spec(Target::C);
    let [left, right] = trace_populations(&m, &s, Levels::Four, 400).unwrap();
    let basis = Levels::Four;
    let a = basis.index(Level::A).unwrap();
    let b = basis.index(Level::B).unwrap();
    let c = basis.index(Level::C).unwrap();
    let bp = basis.index(Level::BPrime).unwrap();

    let midpoint = 0.5 * (s.t_stage1_center + s.t_stage2_center);
    let (i, _) = left
        .times
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - midpoint).abs().total_cmp(&(y.1 - midpoint).abs()))
        .unwrap();
    for traj in [&left, &right] {
        let p = traj.states[i].populations();
        assert!((p[a] - 0.5).abs() < 5e-3 && (p[b] - 0.5).abs() < 5e-3, "{p:?}");
    }

    assert!(left.final_populations()[c] > 0.999);
    assert!(right.final_populations()[c] < 1e-3);
    for traj in [&left, &right] {
        let worst = traj.states.iter().map(|s| s.populations()[bp]).fold(0.0, f64::max);
        assert!(worst < 1e-3, "B' reached {worst}");
    }
}

#[test]
fn target_b_trace_selects_the_left_hand() {
    let m = molecule();
    let [left, right] = trace_populations(&m, &spec(Target::B), Levels::Three, 50).unwrap();
    let b = Levels::Three.index(Level::B).unwrap();
    assert!(left.final_populations()[b] > 0.99);
    assert!(right.final_populations()[b] < 1e-2);
}

#[test]
fn spectator_level_barely_matters() {
    let m = molecule();
    for target in [Target::C, Target::B] {
        let s = spec(target);
        let seq = design_sequence(&m, &s).unwrap();
        let three = target_populations(&m, &seq, &s, Levels::Three, Engine::Exact).unwrap();
        let four = target_populations(&m, &seq, &s, Levels::Four, Engine::Exact).unwrap();
        for (x, y) in three.iter().zip(four) {
            assert!((x - y).abs() < 1e-3, "{target:?}: {x} vs {y}");
        }
    }
}

#[test]
fn stage_two_may_come_first() {
    let m = molecule();
    let s = spec(Target::C);
    let seq = delayed_sequence(&m, &s, -4.0 * s.tau0, -4.0 * s.tau0).unwrap();
    let pops = target_populations(&m, &seq, &s, Levels::Three, Engine::Exact).unwrap();
    assert!(pops.iter().all(|p| (0.0..=1.0 + 1e-6).contains(p)));

    let d = Axis::new("d", -3.0 * s.tau0, 3.0 * s.tau0, 2);
    let grid = sweep_delays(&m, &s, &d, &d, Levels::Three).unwrap();
    assert_eq!(grid.payload(Handedness::Left).len(), 4);
}

#[test]
fn landscape_payloads_are_populations() {
    let m = molecule();
    let phases = Axis::new("phase", 0.0, 2.0 * PI, 9);
    let taus = Axis::new("tau", 10.0, 100.0, 7);
    for target in [Target::C, Target::B] {
        let grid = sweep_phase_duration(&m, &spec(target), &phases, &taus, Levels::Three, Engine::Analytic).unwrap();
        for hand in Handedness::BOTH {
            assert!(grid.payload(hand).iter().all(|p| (-1e-6..=1.0 + 1e-6).contains(p)));
        }
        // best left-handed point is the designed phase
        let (best, _) = grid
            .payload(Handedness::Left)
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap();
        assert!((phases.values()[best / taus.count] - FRAC_PI_2).abs() < 1e-12);
    }
}
