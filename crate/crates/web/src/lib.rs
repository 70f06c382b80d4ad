//! wasm-bindgen wrappers for the browser demo.
//!
//! Three operations: the designed pulse table, a propagated trace for both
//! hands, and an analytic (phase × τ₀) landscape.

use esst_core::areas::{design_sequence, DesignSpec, Target};
use esst_core::experiments::{sweep_phase_duration, trace_pulses, Axis, Engine};
use esst_core::model::{Handedness, Levels, MoleculeSpec};
use esst_core::propagator::GridConfig;
use esst_core::pulses::PhaseConvention;
use wasm_bindgen::prelude::*;

/// Values per pulse in [`design`]: area, phase, carrier, center, duration.
pub const PULSE_FIELDS: usize = 5;

fn parse_target(s: &str) -> Result<Target, String> {
    match s.trim().to_ascii_uppercase().as_str() {
        "B" => Ok(Target::B),
        "C" => Ok(Target::C),
        _ => Err(format!("target must be B or C, got {s:?}")),
    }
}

fn parse_hand(s: &str) -> Result<Handedness, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "left" | "l" => Ok(Handedness::Left),
        "right" | "r" => Ok(Handedness::Right),
        _ => Err(format!("hand must be left or right, got {s:?}")),
    }
}

fn spec(target: &str, hand: &str, tau0: f64) -> Result<(MoleculeSpec, DesignSpec), String> {
    let m = MoleculeSpec::cyclohexylmethanol();
    let s = DesignSpec {
        convention: PhaseConvention::EnvelopeReferenced,
        ..DesignSpec::new(&m, parse_target(target)?, parse_hand(hand)?, tau0)
    };
    s.validate().map_err(|e| e.to_string())?;
    Ok((m, s))
}

pub fn design_table(target: &str, hand: &str, tau0: f64) -> Result<Vec<f64>, String> {
    let (m, s) = spec(target, hand, tau0)?;
    let seq = design_sequence(&m, &s).map_err(|e| e.to_string())?;
    Ok(seq
        .iter()
        .flat_map(|p| [p.area_param, p.phase, p.carrier_mhz, p.center_time, p.duration])
        .collect())
}

/// Populations of both hands on a common time grid, three-level basis (A, B, C).
#[wasm_bindgen]
pub struct Trace {
    times: Vec<f64>,
    left: Vec<[f64; 3]>,
    right: Vec<[f64; 3]>,
}

#[wasm_bindgen]
impl Trace {
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    /// Population of `level` (0 = A, 1 = B, 2 = C) for the left hand.
    pub fn left(&self, level: usize) -> Vec<f64> {
        self.left.iter().map(|p| p[level.min(2)]).collect()
    }

    pub fn right(&self, level: usize) -> Vec<f64> {
        self.right.iter().map(|p| p[level.min(2)]).collect()
    }
}

pub fn trace_sequence(target: &str, tau0: f64, phase: f64, samples: usize) -> Result<Trace, String> {
    let (m, s) = spec(target, "left", tau0)?;
    let mut seq = design_sequence(&m, &s).map_err(|e| e.to_string())?;
    seq.get_mut(s.target.swept_channel()).phase = phase;
    let pulses = seq.to_vec();
    let grid = GridConfig::for_pulses(&m, &pulses, Levels::Three, samples.max(2)).map_err(|e| e.to_string())?;
    let trajs = trace_pulses(&m, &pulses, &Handedness::BOTH, Levels::Three, &grid).map_err(|e| e.to_string())?;
    let pops = |i: usize| -> Vec<[f64; 3]> {
        trajs[i]
            .states
            .iter()
            .map(|st| {
                let p = st.populations();
                [p[0], p[1], p[2]]
            })
            .collect()
    };
    Ok(Trace { times: trajs[0].times.clone(), left: pops(0), right: pops(1) })
}

/// Row-major over (phase, τ₀); left-hand values then right-hand values.
pub fn landscape(
    target: &str,
    tau_min: f64,
    tau_max: f64,
    phase_count: usize,
    tau_count: usize,
) -> Result<Vec<f64>, String> {
    let (m, s) = spec(target, "left", tau_min)?;
    let phases = Axis::new("phase", 0.0, std::f64::consts::TAU, phase_count);
    let taus = Axis::new("tau0", tau_min, tau_max, tau_count);
    let grid =
        sweep_phase_duration(&m, &s, &phases, &taus, Levels::Three, Engine::Analytic).map_err(|e| e.to_string())?;
    let mut out = grid.left;
    out.extend(grid.right);
    Ok(out)
}

/// Designed pulses for the built-in molecule, flattened as
/// `[area (rad/D), phase (rad), carrier (MHz), center (ns), duration (ns)]`
/// for channels a, b, c.
#[wasm_bindgen]
pub fn design(target: &str, hand: &str, tau0: f64) -> Result<Vec<f64>, JsError> {
    design_table(target, hand, tau0).map_err(|e| JsError::new(&e))
}

/// Propagates the left-handed design for both enantiomers, with the swept
/// channel's phase replaced by `phase`.
#[wasm_bindgen]
pub fn trace(target: &str, tau0: f64, phase: f64, samples: usize) -> Result<Trace, JsError> {
    trace_sequence(target, tau0, phase, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn phase_scan(
    target: &str,
    tau_min: f64,
    tau_max: f64,
    phase_count: usize,
    tau_count: usize,
) -> Result<Vec<f64>, JsError> {
    landscape(target, tau_min, tau_max, phase_count, tau_count).map_err(|e| JsError::new(&e))
}
