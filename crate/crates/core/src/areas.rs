//! Complex pulse areas and the design rules that make a three-pulse sequence
//! enantioselective.
//!
//! The complex area of a channel is `θ = ∫ Ω(t) e^{iω_t t} dt` with
//! `Ω = −μ·E`, integrated without the rotating-wave approximation. Writing
//! `θ = −|θ|·e^{−iφ}` defines the effective phase `φ` that enters the loop
//! condition `φ_a + φ_c − φ_b`.
//!
//! Two-stage protocol: the stage-1 pulse (a for target |C⟩, b for target |B⟩)
//! prepares an equal superposition, then the remaining two pulses close the
//! loop. Stage-1 areas sit on the lattice `(k′ + ¼)π`, stage-2 areas on
//! `(k + ½)π/√2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use num_complex::Complex64;

use crate::analytic::{sinc, unit_phase};
use crate::error::{Error, Result};
use crate::model::{Handedness, MoleculeSpec};
use crate::pulses::{circular_distance, wrap_phase, Channel, PhaseConvention, Pulse, QUADRATURE_N_SIGMA};
use crate::quadrature::integrate_complex;

/// Relative tolerance of the area quadrature.
pub const AREA_REL_TOL: f64 = 1e-10;

/// Final state the left- or right-handed enantiomer is steered into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    B,
    C,
}

impl Target {
    /// The channel fired first.
    pub fn stage1_channel(self) -> Channel {
        match self {
            Target::C => Channel::A,
            Target::B => Channel::B,
        }
    }

    /// The two channels fired together in the second stage.
    pub fn stage2_channels(self) -> [Channel; 2] {
        match self {
            Target::C => [Channel::B, Channel::C],
            Target::B => [Channel::A, Channel::C],
        }
    }

    /// Channel whose phase is scanned in the phase landscapes.
    pub fn swept_channel(self) -> Channel {
        self.stage1_channel()
    }

    pub fn label(self) -> &'static str {
        match self {
            Target::B => "B",
            Target::C => "C",
        }
    }

    /// Value of `φ_a + φ_c − φ_b` (mod 2π) that sends `hand` fully to the target.
    pub fn loop_phase(self, hand: Handedness) -> f64 {
        match (self, hand) {
            (Target::C, Handedness::Left) | (Target::B, Handedness::Right) => 0.5 * PI,
            (Target::C, Handedness::Right) | (Target::B, Handedness::Left) => -0.5 * PI,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.label())
    }
}

/// Transition driven by a channel, rad/ns.
pub fn transition_freq(molecule: &MoleculeSpec, channel: Channel) -> f64 {
    match channel {
        Channel::A => molecule.omega_ab(),
        Channel::B => molecule.omega_ac(),
        Channel::C => molecule.omega_bc(),
    }
}

/// Transition driven by a channel, cyclic MHz.
pub fn transition_mhz(molecule: &MoleculeSpec, channel: Channel) -> f64 {
    match channel {
        Channel::A => molecule.omega_ab_mhz,
        Channel::B => molecule.omega_ac_mhz,
        Channel::C => molecule.omega_bc_mhz,
    }
}

pub fn dipole(molecule: &MoleculeSpec, channel: Channel) -> f64 {
    match channel {
        Channel::A => molecule.mu_a,
        Channel::B => molecule.mu_b,
        Channel::C => molecule.mu_c,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexArea {
    pub value: Complex64,
    pub window: (f64, f64),
    /// rad/ns.
    pub transition_freq: f64,
    pub channel: Channel,
}

impl ComplexArea {
    /// An area given directly by its value, with no time window attached.
    pub fn from_value(value: Complex64, channel: Channel) -> Self {
        ComplexArea { value, window: (0.0, 0.0), transition_freq: 0.0, channel }
    }

    /// Area `−|θ|·e^{−iφ}` with the given modulus and effective phase.
    pub fn from_modulus_phase(modulus: f64, phase: f64, channel: Channel) -> Self {
        Self::from_value(-Complex64::from_polar(modulus, -phase), channel)
    }

    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }

    /// arg θ in (−π, π].
    pub fn phase(&self) -> f64 {
        wrap_phase(self.value.arg())
    }

    /// φ in `θ = −|θ|·e^{−iφ}`, in (−π, π].
    pub fn effective_phase(&self) -> f64 {
        wrap_phase((-self.value).conj().arg())
    }
}

/// `∫_window −μ·E(t)·e^{iω_t t} dt` by adaptive Gauss–Kronrod quadrature.
pub fn complex_area(
    pulse: &Pulse,
    dipole: f64,
    transition_freq: f64,
    window: (f64, f64),
) -> Result<ComplexArea> {
    let (start, end) = window;
    if !(start.is_finite() && end.is_finite() && dipole.is_finite() && transition_freq.is_finite()) {
        return Err(Error::NonFinite("complex_area input"));
    }
    if end < start {
        return Err(Error::InvertedWindow { start, end });
    }
    pulse.validate()?;
    let fastest = pulse.carrier() + transition_freq.abs();
    let segments = ((end - start) * fastest / (2.0 * PI)).ceil() as usize + 8;
    let value = integrate_complex(
        |t| Complex64::from_polar(-dipole * pulse.field(t), transition_freq * t),
        start,
        end,
        AREA_REL_TOL,
        segments,
    );
    Ok(ComplexArea { value, window, transition_freq, channel: pulse.channel })
}

/// Area of a pulse on its own channel's transition, over `t_c ± 8τ₀`.
pub fn pulse_area(molecule: &MoleculeSpec, pulse: &Pulse) -> Result<ComplexArea> {
    complex_area(
        pulse,
        dipole(molecule, pulse.channel),
        transition_freq(molecule, pulse.channel),
        pulse.support_window(QUADRATURE_N_SIGMA),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub target: Target,
    /// Enantiomer that should end in the target state.
    pub hand: Handedness,
    /// Stage-2 lattice index.
    pub k: u32,
    /// Stage-1 lattice index.
    pub k_prime: u32,
    /// Phase lattice index.
    pub l: i32,
    /// τ₀, ns.
    pub tau0: f64,
    pub t_stage1_center: f64,
    pub t_stage2_center: f64,
    pub convention: PhaseConvention,
}

impl DesignSpec {
    /// k = k′ = l = 0 with the default stage timing for `molecule`.
    pub fn new(molecule: &MoleculeSpec, target: Target, hand: Handedness, tau0: f64) -> Self {
        let (t1, t2) = default_stage_centers(molecule, target, tau0);
        DesignSpec {
            target,
            hand,
            k: 0,
            k_prime: 0,
            l: 0,
            tau0,
            t_stage1_center: t1,
            t_stage2_center: t2,
            convention: PhaseConvention::Absolute,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau0.is_finite() && self.tau0 > 0.0) {
            return Err(Error::InvalidPulse(format!("duration must be > 0, got {}", self.tau0)));
        }
        if !(self.t_stage1_center.is_finite() && self.t_stage2_center.is_finite()) {
            return Err(Error::NonFinite("stage center"));
        }
        Ok(())
    }

    /// Reset the stage centers to the defaults for the current τ₀.
    pub fn with_default_timing(mut self, molecule: &MoleculeSpec) -> Self {
        let (t1, t2) = default_stage_centers(molecule, self.target, self.tau0);
        self.t_stage1_center = t1;
        self.t_stage2_center = t2;
        self
    }
}

/// Stage-1 pulse at t = 0; stage-2 pulses at the first whole period of the
/// stage-1 transition at or after 8τ₀. The whole-period snap makes the loop
/// phase identical under both phase conventions.
pub fn default_stage_centers(molecule: &MoleculeSpec, target: Target, tau0: f64) -> (f64, f64) {
    let freq_ghz = transition_mhz(molecule, target.stage1_channel()) * 1e-3;
    let nominal = 8.0 * tau0;
    let periods = (nominal * freq_ghz - 1e-9).ceil();
    (0.0, periods / freq_ghz)
}

/// Per-channel triple indexed by [`Channel`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerChannel<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Copy> PerChannel<T> {
    pub fn get(&self, ch: Channel) -> T {
        match ch {
            Channel::A => self.a,
            Channel::B => self.b,
            Channel::C => self.c,
        }
    }

    pub fn set(&mut self, ch: Channel, v: T) {
        match ch {
            Channel::A => self.a = v,
            Channel::B => self.b = v,
            Channel::C => self.c = v,
        }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.a, self.b, self.c]
    }
}

/// Required `|θ_x|` for each channel at the design's lattice point.
pub fn designed_moduli(spec: &DesignSpec) -> PerChannel<f64> {
    let stage1 = (spec.k_prime as f64 + 0.25) * PI;
    let stage2 = (spec.k as f64 + 0.5) * PI * FRAC_1_SQRT_2;
    let mut out = PerChannel { a: stage2, b: stage2, c: stage2 };
    out.set(spec.target.stage1_channel(), stage1);
    out
}

/// Area parameters `A_x` (rad/Debye) with `μ_x·A_x` on the lattice.
pub fn design_amplitudes(molecule: &MoleculeSpec, spec: &DesignSpec) -> Result<PerChannel<f64>> {
    let moduli = designed_moduli(spec);
    let mut out = PerChannel::default();
    for ch in Channel::ALL {
        let mu = dipole(molecule, ch);
        if mu.is_nan() || mu <= 0.0 {
            return Err(Error::ZeroDipole(ch));
        }
        out.set(ch, moduli.get(ch) / mu);
    }
    Ok(out)
}

/// Canonical phases: everything at zero except the stage-1 channel, which
/// carries the whole loop condition.
pub fn design_phases(spec: &DesignSpec) -> PerChannel<f64> {
    let l = spec.l as f64;
    let mut out = PerChannel::default();
    match (spec.target, spec.hand) {
        // φ_a = (2l ± ½)π
        (Target::C, Handedness::Left) => out.a = (2.0 * l + 0.5) * PI,
        (Target::C, Handedness::Right) => out.a = (2.0 * l - 0.5) * PI,
        // −φ_b = (2l ∓ ½)π
        (Target::B, Handedness::Left) => out.b = -(2.0 * l - 0.5) * PI,
        (Target::B, Handedness::Right) => out.b = -(2.0 * l + 0.5) * PI,
    }
    out
}

/// Three pulses, one per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub a: Pulse,
    pub b: Pulse,
    pub c: Pulse,
}

impl PulseSequence {
    pub fn get(&self, ch: Channel) -> &Pulse {
        match ch {
            Channel::A => &self.a,
            Channel::B => &self.b,
            Channel::C => &self.c,
        }
    }

    pub fn get_mut(&mut self, ch: Channel) -> &mut Pulse {
        match ch {
            Channel::A => &mut self.a,
            Channel::B => &mut self.b,
            Channel::C => &mut self.c,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pulse> {
        [&self.a, &self.b, &self.c].into_iter()
    }

    pub fn to_vec(&self) -> Vec<Pulse> {
        self.iter().cloned().collect()
    }
}

/// Resonant pulses meeting the amplitude and phase conditions of `spec`.
pub fn design_sequence(molecule: &MoleculeSpec, spec: &DesignSpec) -> Result<PulseSequence> {
    spec.validate()?;
    let amps = design_amplitudes(molecule, spec)?;
    let phases = design_phases(spec);
    let stage1 = spec.target.stage1_channel();
    let make = |ch: Channel| Pulse {
        area_param: amps.get(ch),
        center_time: if ch == stage1 { spec.t_stage1_center } else { spec.t_stage2_center },
        duration: spec.tau0,
        carrier_mhz: transition_mhz(molecule, ch),
        phase: phases.get(ch),
        convention: spec.convention,
        channel: ch,
    };
    Ok(PulseSequence { a: make(Channel::A), b: make(Channel::B), c: make(Channel::C) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// Distance of each `|θ_x|` from its nearest lattice value, rad.
    pub amplitude_residuals: PerChannel<f64>,
    /// Distance of `φ_a + φ_c − φ_b` from the lattice for `spec.hand`, rad.
    pub phase_residual: f64,
    /// `|LHS₁ − 1|` of the transfer condition for `spec.hand`.
    pub target_residual: f64,
    /// `|LHS₂|` of the suppression condition for the opposite hand.
    pub suppression_residual: f64,
    /// `|LHS₁|²`, clamped to [0, 1].
    pub predicted_target_population: f64,
}

/// Target-state amplitude moduli `(LHS₊, LHS₋)`; the `+` branch is the
/// left-handed enantiomer's amplitude in the target state.
fn target_moduli(target: Target, a: Complex64, b: Complex64, c: Complex64) -> (f64, f64) {
    let i = Complex64::i();
    match target {
        Target::C => {
            let theta = (b.norm_sqr() + c.norm_sqr()).sqrt();
            let s1 = a.norm();
            let u = unit_phase(a);
            let direct = i * b * s1.cos();
            let loop_term = u * c * s1.sin();
            let f = sinc(theta);
            ((f * (direct + loop_term)).norm(), (f * (direct - loop_term)).norm())
        }
        Target::B => {
            let theta = (a.norm_sqr() + c.norm_sqr()).sqrt();
            let s1 = b.norm();
            let u = unit_phase(b);
            let loop_term = s1.sin() * c.conj() * u;
            let direct = i * s1.cos() * a;
            let f = sinc(theta);
            ((f * (loop_term + direct)).norm(), (f * (loop_term - direct)).norm())
        }
    }
}

/// Score three complex areas against the transfer conditions for `spec`.
pub fn condition_residuals(
    theta_a: &ComplexArea,
    theta_b: &ComplexArea,
    theta_c: &ComplexArea,
    spec: &DesignSpec,
) -> Result<ConditionReport> {
    for (area, expected) in [(theta_a, Channel::A), (theta_b, Channel::B), (theta_c, Channel::C)] {
        if area.channel != expected {
            return Err(Error::ChannelMismatch(format!(
                "area for channel {} passed in the {} slot",
                area.channel, expected
            )));
        }
    }
    let (plus, minus) = target_moduli(spec.target, theta_a.value, theta_b.value, theta_c.value);
    let (lhs1, lhs2) = match spec.hand {
        Handedness::Left => (plus, minus),
        Handedness::Right => (minus, plus),
    };

    let stage1 = spec.target.stage1_channel();
    let mut amplitude_residuals = PerChannel::default();
    for area in [theta_a, theta_b, theta_c] {
        let m = area.modulus();
        let (offset, step) = if area.channel == stage1 {
            (0.25 * PI, PI)
        } else {
            (0.5 * PI * FRAC_1_SQRT_2, PI * FRAC_1_SQRT_2)
        };
        let idx = ((m - offset) / step).round().max(0.0);
        amplitude_residuals.set(area.channel, (m - (offset + idx * step)).abs());
    }

    let loop_phase =
        theta_a.effective_phase() + theta_c.effective_phase() - theta_b.effective_phase();
    let phase_residual = circular_distance(loop_phase, spec.target.loop_phase(spec.hand));

    Ok(ConditionReport {
        amplitude_residuals,
        phase_residual,
        target_residual: (lhs1 - 1.0).abs(),
        suppression_residual: lhs2,
        predicted_target_population: (lhs1 * lhs1).clamp(0.0, 1.0),
    })
}

/// Amplitude scale `exp(Δ²τ₀²/2)` that restores a Gaussian pulse's area
/// modulus at the transition when its carrier is detuned by `delta` (rad/ns).
pub fn detuning_compensation(delta: f64, tau0: f64) -> Result<f64> {
    let exponent = 0.5 * delta * delta * tau0 * tau0;
    if !exponent.is_finite() {
        return Err(Error::NonFinite("detuning"));
    }
    if exponent > 700.0 {
        return Err(Error::CompensationOutOfRange(exponent));
    }
    Ok(exponent.exp())
}
