//! Parameter sweeps over the analytic and exact engines, and their CSV
//! layouts.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use crate::analytic::analytic_final_populations;
use crate::areas::{design_sequence, transition_mhz, DesignSpec, PulseSequence, Target};
use crate::error::{Error, Result};
use crate::model::{angular_to_mhz, Handedness, Level, Levels, MoleculeSpec};
use crate::propagator::{propagate, propagate_final, GridConfig, Trajectory, NORM_DRIFT_GUARD};
use crate::pulses::Channel;

/// Stored samples per trace.
pub const TRACE_SAMPLES: usize = 2000;
/// Payloads may overshoot 1 by integration error up to this much.
pub const PAYLOAD_SLACK: f64 = 1e-6;

/// Evenly spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: &str, min: f64, max: f64, count: usize) -> Self {
        Axis { name: name.to_string(), min, max, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.min],
            n => {
                let step = (self.max - self.min) / (n - 1) as f64;
                (0..n)
                    .map(|i| if i + 1 == n { self.max } else { self.min + step * i as f64 })
                    .collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidGrid(format!("axis {} has no points", self.name)));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::NonFinite("axis bound"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Engine {
    Analytic,
    #[default]
    Exact,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Exact => "exact",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "exact" => Ok(Engine::Exact),
            _ => Err(format!("unknown engine {s:?} (expected analytic or exact)")),
        }
    }
}

/// Which couplings a detuning sweep detunes and rescales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetuningMode {
    /// Detune and scale channel b (factor α).
    ScaleB,
    /// Detune and scale channels a and c together (factor β).
    ScaleAC,
}

impl DetuningMode {
    pub fn name(self) -> &'static str {
        match self {
            DetuningMode::ScaleB => "scale_b",
            DetuningMode::ScaleAC => "scale_ac",
        }
    }

    pub fn channels(self) -> &'static [Channel] {
        match self {
            DetuningMode::ScaleB => &[Channel::B],
            DetuningMode::ScaleAC => &[Channel::A, Channel::C],
        }
    }
}

impl FromStr for DetuningMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "scale_b" | "b" | "alpha" => Ok(DetuningMode::ScaleB),
            "scale_ac" | "ac" | "beta" => Ok(DetuningMode::ScaleAC),
            _ => Err(format!("unknown detuning mode {s:?} (expected scale_b or scale_ac)")),
        }
    }
}

/// Final target population per hand over a two-axis grid. Payloads are
/// row-major with `axis2` varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis1: Axis,
    pub axis2: Axis,
    pub target: Target,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// `key = value` lines describing the run.
    pub metadata: Vec<String>,
}

impl SweepGrid {
    pub fn get(&self, hand: Handedness, i1: usize, i2: usize) -> f64 {
        let idx = i1 * self.axis2.count + i2;
        match hand {
            Handedness::Left => self.left[idx],
            Handedness::Right => self.right[idx],
        }
    }

    pub fn payload(&self, hand: Handedness) -> &[f64] {
        match hand {
            Handedness::Left => &self.left,
            Handedness::Right => &self.right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// rad/ns.
    pub delta: f64,
    pub scale: f64,
    pub engine: Engine,
    pub hand: Handedness,
    pub p_target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetuningCurves {
    pub mode: DetuningMode,
    pub target: Target,
    pub points: Vec<CurvePoint>,
    pub metadata: Vec<String>,
}

impl DetuningCurves {
    /// Points of one curve, in scale order.
    pub fn curve(&self, delta: f64, engine: Engine, hand: Handedness) -> Vec<CurvePoint> {
        self.points
            .iter()
            .filter(|p| p.delta == delta && p.engine == engine && p.hand == hand)
            .copied()
            .collect()
    }
}

fn target_level(target: Target) -> Level {
    match target {
        Target::B => Level::B,
        Target::C => Level::C,
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    F: Fn(T) -> R,
{
    items.into_iter().map(f).collect()
}

/// Final target population for both hands (`[left, right]`).
pub fn target_populations(
    molecule: &MoleculeSpec,
    seq: &PulseSequence,
    spec: &DesignSpec,
    levels: Levels,
    engine: Engine,
) -> Result<[f64; 2]> {
    let level = target_level(spec.target);
    match engine {
        Engine::Analytic => {
            let pops = analytic_final_populations(molecule, seq, spec)?;
            let idx = Levels::Three.index(level).expect("target is in the three-level basis");
            Ok([pops.left[idx], pops.right[idx]])
        }
        Engine::Exact => {
            let pulses = seq.to_vec();
            let grid = GridConfig::for_pulses(molecule, &pulses, levels, 1)?;
            let idx = levels.index(level).expect("target is in every basis");
            let mut out = [0.0; 2];
            for (slot, hand) in out.iter_mut().zip(Handedness::BOTH) {
                let (state, drift) = propagate_final(molecule, &pulses, hand, levels, &grid)?;
                if drift > NORM_DRIFT_GUARD {
                    return Err(Error::NormDrift { drift, limit: NORM_DRIFT_GUARD });
                }
                *slot = state.amplitudes[idx].norm_sqr();
            }
            Ok(out)
        }
    }
}

fn base_metadata(molecule: &MoleculeSpec, spec: &DesignSpec, levels: Levels, engine: Engine) -> Vec<String> {
    vec![
        format!("molecule = {}", molecule.name),
        format!("target = {}", spec.target.label()),
        format!("hand = {}", spec.hand),
        format!("k = {}", spec.k),
        format!("k_prime = {}", spec.k_prime),
        format!("l = {}", spec.l),
        format!("duration_ns = {}", spec.tau0),
        format!("convention = {}", spec.convention.name()),
        format!("levels = {}", levels.dim()),
        format!("engine = {engine}"),
    ]
}

fn collect_grid(
    axis1: Axis,
    axis2: Axis,
    target: Target,
    results: Vec<Result<[f64; 2]>>,
    metadata: Vec<String>,
) -> Result<SweepGrid> {
    let mut left = Vec::with_capacity(results.len());
    let mut right = Vec::with_capacity(results.len());
    for r in results {
        let [l, rr] = r?;
        left.push(l);
        right.push(rr);
    }
    Ok(SweepGrid { axis1, axis2, target, left, right, metadata })
}

/// P_target over (swept phase × τ₀). Amplitudes and timing are re-designed
/// at every τ₀; the swept channel's phase replaces its designed value.
pub fn sweep_phase_duration(
    molecule: &MoleculeSpec,
    spec: &DesignSpec,
    phase_axis: &Axis,
    tau_axis: &Axis,
    levels: Levels,
    engine: Engine,
) -> Result<SweepGrid> {
    phase_axis.validate()?;
    tau_axis.validate()?;
    let swept = spec.target.swept_channel();
    let jobs: Vec<(f64, f64)> = phase_axis
        .values()
        .into_iter()
        .flat_map(|phi| tau_axis.values().into_iter().map(move |tau| (phi, tau)))
        .collect();
    let results = par_map(jobs, |(phi, tau)| {
        let point = DesignSpec { tau0: tau, ..spec.clone() }.with_default_timing(molecule);
        let mut seq = design_sequence(molecule, &point)?;
        seq.get_mut(swept).phase = phi;
        target_populations(molecule, &seq, &point, levels, engine)
    });
    let mut metadata = base_metadata(molecule, spec, levels, engine);
    metadata.push(format!("sweep = phase_duration ({} phase)", swept));
    collect_grid(phase_axis.clone(), tau_axis.clone(), spec.target, results, metadata)
}

/// Left and right trajectories of the designed sequence.
pub fn trace_populations(
    molecule: &MoleculeSpec,
    spec: &DesignSpec,
    levels: Levels,
    samples: usize,
) -> Result<[Trajectory; 2]> {
    let pulses = design_sequence(molecule, spec)?.to_vec();
    let grid = GridConfig::for_pulses(molecule, &pulses, levels, samples)?;
    let [left, right]: [Trajectory; 2] = trace_pulses(molecule, &pulses, &Handedness::BOTH, levels, &grid)?
        .try_into()
        .expect("two hands in, two trajectories out");
    Ok([left, right])
}

/// One norm-checked trajectory per requested hand.
pub fn trace_pulses(
    molecule: &MoleculeSpec,
    pulses: &[crate::pulses::Pulse],
    hands: &[Handedness],
    levels: Levels,
    grid: &GridConfig,
) -> Result<Vec<Trajectory>> {
    hands
        .iter()
        .map(|&hand| {
            let traj = propagate(molecule, pulses, hand, levels, grid)?;
            if traj.norm_drift > NORM_DRIFT_GUARD {
                return Err(Error::NormDrift { drift: traj.norm_drift, limit: NORM_DRIFT_GUARD });
            }
            Ok(traj)
        })
        .collect()
}

/// Designed sequence with the two stage-2 pulses moved to
/// `t_stage1 + delay1` and `t_stage1 + delay2`.
pub fn delayed_sequence(
    molecule: &MoleculeSpec,
    spec: &DesignSpec,
    delay1: f64,
    delay2: f64,
) -> Result<PulseSequence> {
    let mut seq = design_sequence(molecule, spec)?;
    let [ch1, ch2] = spec.target.stage2_channels();
    seq.get_mut(ch1).center_time = spec.t_stage1_center + delay1;
    seq.get_mut(ch2).center_time = spec.t_stage1_center + delay2;
    Ok(seq)
}

/// P_target over the two stage-2 delays relative to the stage-1 pulse
/// (t_ba, t_ca for target C; t_ab, t_cb for target B). Always propagated,
/// since arbitrary delays break the two-stage picture.
pub fn sweep_delays(
    molecule: &MoleculeSpec,
    spec: &DesignSpec,
    delay1_axis: &Axis,
    delay2_axis: &Axis,
    levels: Levels,
) -> Result<SweepGrid> {
    delay1_axis.validate()?;
    delay2_axis.validate()?;
    let jobs: Vec<(f64, f64)> = delay1_axis
        .values()
        .into_iter()
        .flat_map(|d1| delay2_axis.values().into_iter().map(move |d2| (d1, d2)))
        .collect();
    let results = par_map(jobs, |(d1, d2)| {
        let seq = delayed_sequence(molecule, spec, d1, d2)?;
        target_populations(molecule, &seq, spec, levels, Engine::Exact)
    });
    let mut metadata = base_metadata(molecule, spec, levels, Engine::Exact);
    let [ch1, ch2] = spec.target.stage2_channels();
    let s1 = spec.target.stage1_channel();
    metadata.push(format!("sweep = delays (t_{ch1}{s1}, t_{ch2}{s1})"));
    collect_grid(delay1_axis.clone(), delay2_axis.clone(), spec.target, results, metadata)
}

/// Designed sequence with the `mode` channels detuned by `delta` (rad/ns)
/// and their area parameters multiplied by `scale`.
pub fn detuned_sequence(
    molecule: &MoleculeSpec,
    spec: &DesignSpec,
    delta: f64,
    scale: f64,
    mode: DetuningMode,
) -> Result<PulseSequence> {
    if !(delta.is_finite() && scale.is_finite()) {
        return Err(Error::NonFinite("detuning or scale"));
    }
    if scale < 0.0 {
        return Err(Error::InvalidPulse(format!("scale must be >= 0, got {scale}")));
    }
    let mut seq = design_sequence(molecule, spec)?;
    for &ch in mode.channels() {
        let p = seq.get_mut(ch);
        p.carrier_mhz = transition_mhz(molecule, ch) + angular_to_mhz(delta);
        p.area_param *= scale;
    }
    Ok(seq)
}

/// Target population versus scale factor, one curve per detuning and hand.
pub fn sweep_detuning(
    molecule: &MoleculeSpec,
    spec: &DesignSpec,
    deltas: &[f64],
    scale_axis: &Axis,
    mode: DetuningMode,
    engine: Engine,
    levels: Levels,
) -> Result<DetuningCurves> {
    scale_axis.validate()?;
    let jobs: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| scale_axis.values().into_iter().map(move |s| (d, s)))
        .collect();
    let results = par_map(jobs.clone(), |(delta, scale)| {
        let seq = detuned_sequence(molecule, spec, delta, scale, mode)?;
        target_populations(molecule, &seq, spec, levels, engine)
    });
    let mut points = Vec::with_capacity(2 * jobs.len());
    for ((delta, scale), r) in jobs.into_iter().zip(results) {
        let pops = r?;
        for (hand, p_target) in Handedness::BOTH.into_iter().zip(pops) {
            points.push(CurvePoint { delta, scale, engine, hand, p_target });
        }
    }
    let mut metadata = base_metadata(molecule, spec, levels, engine);
    metadata.push(format!("sweep = detuning ({})", mode.name()));
    Ok(DetuningCurves { mode, target: spec.target, points, metadata })
}

pub const LANDSCAPE_HEADER: &str = "axis1,axis2,hand,P_target";
pub const CURVE_HEADER: &str = "delta,scale,engine,hand,P_target";
const CONFIG_PREFIX: &str = "# config: ";

fn write_config<W: Write>(w: &mut W, metadata: &[String]) -> io::Result<()> {
    for line in metadata {
        writeln!(w, "{CONFIG_PREFIX}{line}")?;
    }
    Ok(())
}

/// Config lines embedded in a CSV written by this module.
pub fn extract_config(csv: &str) -> Vec<String> {
    csv.lines()
        .filter_map(|l| l.strip_prefix(CONFIG_PREFIX))
        .map(str::to_string)
        .collect()
}

/// Long format, one row per (axis1, axis2, hand).
pub fn write_landscape_csv<W: Write>(mut w: W, grid: &SweepGrid) -> io::Result<()> {
    write_config(&mut w, &grid.metadata)?;
    writeln!(w, "# axis1: {}", grid.axis1.name)?;
    writeln!(w, "# axis2: {}", grid.axis2.name)?;
    writeln!(w, "{LANDSCAPE_HEADER}")?;
    let v2 = grid.axis2.values();
    for (i1, x1) in grid.axis1.values().iter().enumerate() {
        for (i2, x2) in v2.iter().enumerate() {
            for hand in Handedness::BOTH {
                writeln!(w, "{x1},{x2},{hand},{}", grid.get(hand, i1, i2))?;
            }
        }
    }
    Ok(())
}

pub fn write_curves_csv<W: Write>(mut w: W, curves: &DetuningCurves) -> io::Result<()> {
    write_config(&mut w, &curves.metadata)?;
    writeln!(w, "{CURVE_HEADER}")?;
    for p in &curves.points {
        writeln!(w, "{},{},{},{},{}", p.delta, p.scale, p.engine, p.hand, p.p_target)?;
    }
    Ok(())
}

/// Trajectory CSV (see [`crate::propagator::TRAJECTORY_HEADER`]) with the
/// config header in front.
pub fn write_trace_csv<W: Write>(mut w: W, traj: &Trajectory, metadata: &[String]) -> io::Result<()> {
    write_config(&mut w, metadata)?;
    crate::propagator::write_trajectory_csv(w, traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::PhaseConvention;
    use std::f64::consts::PI;

    fn molecule() -> MoleculeSpec {
        MoleculeSpec::cyclohexylmethanol()
    }

    #[test]
    fn axis_values() {
        assert_eq!(Axis::new("x", 1.0, 3.0, 3).values(), vec![1.0, 2.0, 3.0]);
        assert_eq!(Axis::new("x", 5.0, 9.0, 1).values(), vec![5.0]);
        let phi = Axis::new("phi", 0.0, 2.0 * PI * 63.0 / 64.0, 64).values();
        assert!((phi[16] - PI / 2.0).abs() < 1e-14);
        assert!((phi[48] - 1.5 * PI).abs() < 1e-14);
        assert!(Axis::new("x", 0.0, 1.0, 0).validate().is_err());
    }

    #[test]
    fn analytic_phase_landscape() {
        let m = molecule();
        let spec = DesignSpec::new(&m, Target::C, Handedness::Left, 35.0);
        let phases = Axis::new("phase_a_rad", 0.0, 1.5 * PI, 4);
        let taus = Axis::new("tau0_ns", 35.0, 45.0, 2);
        let grid = sweep_phase_duration(&m, &spec, &phases, &taus, Levels::Three, Engine::Analytic).unwrap();
        assert_eq!(grid.left.len(), 8);
        // φ = 0, π/2, π, 3π/2 at τ₀ = 35
        assert!(grid.get(Handedness::Left, 1, 0) > 1.0 - 1e-6);
        assert!(grid.get(Handedness::Right, 1, 0) < 1e-6);
        assert!(grid.get(Handedness::Right, 3, 0) > 1.0 - 1e-6);
        for i in [0, 2] {
            let d = grid.get(Handedness::Left, i, 0) - grid.get(Handedness::Right, i, 0);
            assert!(d.abs() < 1e-9);
        }
        for p in grid.left.iter().chain(&grid.right) {
            assert!((0.0..=1.0 + PAYLOAD_SLACK).contains(p));
        }
    }

    #[test]
    fn zero_area_pulses_give_zero_payload() {
        let m = molecule();
        let spec = DesignSpec::new(&m, Target::C, Handedness::Left, 20.0);
        let mut seq = design_sequence(&m, &spec).unwrap();
        for ch in Channel::ALL {
            seq.get_mut(ch).area_param = 0.0;
        }
        for engine in [Engine::Analytic, Engine::Exact] {
            let p = target_populations(&m, &seq, &spec, Levels::Three, engine).unwrap();
            assert_eq!(p, [0.0, 0.0]);
        }
    }

    #[test]
    fn detuning_resonant_point_and_compensation() {
        let m = molecule();
        let tau = 35.0;
        let spec = DesignSpec {
            convention: PhaseConvention::EnvelopeReferenced,
            ..DesignSpec::new(&m, Target::C, Handedness::Left, tau)
        };
        let comp = crate::areas::detuning_compensation(1.0 / tau, tau).unwrap();
        let scales = Axis::new("scale", 1.0, comp, 2);
        for mode in [DetuningMode::ScaleB, DetuningMode::ScaleAC] {
            let curves =
                sweep_detuning(&m, &spec, &[0.0, 1.0 / tau], &scales, mode, Engine::Analytic, Levels::Three)
                    .unwrap();
            let resonant = curves.curve(0.0, Engine::Analytic, Handedness::Left);
            assert!((resonant[0].p_target - 1.0).abs() < 1e-6);
            let detuned = curves.curve(1.0 / tau, Engine::Analytic, Handedness::Left);
            assert!(detuned[0].p_target < 0.99);
            assert!(detuned[1].p_target > 1.0 - 1e-6, "{mode:?} {:?}", detuned[1]);
        }
    }

    #[test]
    fn delayed_sequence_moves_stage_two() {
        let m = molecule();
        let spec = DesignSpec::new(&m, Target::B, Handedness::Left, 20.0);
        let seq = delayed_sequence(&m, &spec, 10.0, -5.0).unwrap();
        assert_eq!(seq.b.center_time, spec.t_stage1_center);
        assert_eq!(seq.a.center_time, spec.t_stage1_center + 10.0);
        assert_eq!(seq.c.center_time, spec.t_stage1_center - 5.0);
    }

    #[test]
    fn csv_round_trip_of_config() {
        let grid = SweepGrid {
            axis1: Axis::new("phase_a_rad", 0.0, 1.0, 2),
            axis2: Axis::new("tau0_ns", 35.0, 35.0, 1),
            target: Target::C,
            left: vec![0.25, 0.5],
            right: vec![0.75, 1.0],
            metadata: vec!["[molecule]".into(), "preset = cyclohexylmethanol".into()],
        };
        let mut buf = Vec::new();
        write_landscape_csv(&mut buf, &grid).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(extract_config(&text), grid.metadata);
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], LANDSCAPE_HEADER);
        assert_eq!(rows[1], "0,35,left,0.25");
        assert_eq!(rows[4], "1,35,right,1");
        assert_eq!(rows.len(), 5);
    }

    #[test]
    fn parse_enums() {
        assert_eq!("exact".parse::<Engine>(), Ok(Engine::Exact));
        assert!("magnus".parse::<Engine>().is_err());
        assert_eq!("scale_ac".parse::<DetuningMode>(), Ok(DetuningMode::ScaleAC));
    }
}
