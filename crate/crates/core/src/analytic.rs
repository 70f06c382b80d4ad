//! First-order Magnus wavefunctions of the two-stage protocol.
//!
//! Stage 1 is a two-level rotation by the complex area of the first pulse.
//! Stage 2 is a V (target |C⟩) or Λ (target |B⟩) three-level rotation by the
//! two remaining areas. Everything here consumes complex areas only; time and
//! frequency enter through [`crate::areas`].

use num_complex::Complex64;

use crate::areas::{pulse_area, DesignSpec, PulseSequence, Target};
use crate::error::{Error, Result};
use crate::model::{Handedness, Levels, MoleculeSpec};
use crate::pulses::Channel;

/// Below this |θ| the trigonometric ratios switch to their Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub levels: Levels,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The initial state |A⟩.
    pub fn ground(levels: Levels) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); levels.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector { levels, amplitudes }
    }

    pub fn three(a: Complex64, b: Complex64, c: Complex64) -> Self {
        StateVector { levels: Levels::Three, amplitudes: vec![a, b, c] }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// sin θ / θ.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// (cos θ − 1) / θ².
pub(crate) fn cosm1_over_sq(x: f64) -> f64 {
    if x.abs() < SERIES_THRESHOLD {
        let x2 = x * x;
        -0.5 + x2 / 24.0 - x2 * x2 / 720.0
    } else {
        (x.cos() - 1.0) / (x * x)
    }
}

/// |θ|/θ* = θ/|θ|, taken as 1 at θ = 0 where it multiplies sin 0.
pub(crate) fn unit_phase(z: Complex64) -> Complex64 {
    let n = z.norm();
    if n == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / n
    }
}

/// Stage-1 state from |A⟩. For target |C⟩ the a pulse rotates A↔B and the
/// sign of the |B⟩ term follows the handedness; for target |B⟩ the b pulse
/// rotates A↔C and both enantiomers behave alike.
pub fn stage1_state(theta: Complex64, hand: Handedness, target: Target) -> StateVector {
    let m = theta.norm();
    let partner = -Complex64::i() * unit_phase(theta) * m.sin();
    let zero = Complex64::new(0.0, 0.0);
    let a = Complex64::new(m.cos(), 0.0);
    match target {
        Target::C => StateVector::three(a, partner * hand.sign(), zero),
        Target::B => StateVector::three(a, zero, partner),
    }
}

/// V-type second stage toward |C⟩ applied to the stage-1 state.
pub fn stage2_state_target_c(
    theta_a_t1: Complex64,
    theta_b: Complex64,
    theta_c: Complex64,
    hand: Handedness,
) -> StateVector {
    let i = Complex64::i();
    let s = hand.sign();
    let ma = theta_a_t1.norm();
    let (cos_a, sin_a) = (ma.cos(), ma.sin());
    let ua = unit_phase(theta_a_t1);
    let theta = (theta_b.norm_sqr() + theta_c.norm_sqr()).sqrt();
    let g = cosm1_over_sq(theta);
    let zeta = theta_c * theta_b.conj() * g;
    // (|θ_c|² + |θ_b|² cos θ)/θ² and (|θ_b|² + |θ_c|² cos θ)/θ²
    let keep_a = 1.0 + theta_b.norm_sqr() * g;
    let keep_b = 1.0 + theta_c.norm_sqr() * g;

    let amp_a = cos_a * keep_a - s * i * sin_a * zeta * ua;
    let amp_b = cos_a * zeta.conj() - s * i * sin_a * ua * keep_b;
    let amp_c = -sinc(theta) * (i * cos_a * theta_b + s * sin_a * theta_c * ua);
    StateVector::three(amp_a, amp_b, amp_c)
}

/// Λ-type second stage toward |B⟩ applied to the stage-1 state.
pub fn stage2_state_target_b(
    theta_b_t1: Complex64,
    theta_a: Complex64,
    theta_c: Complex64,
    hand: Handedness,
) -> StateVector {
    let i = Complex64::i();
    let s = hand.sign();
    let mb = theta_b_t1.norm();
    let (cos_b, sin_b) = (mb.cos(), mb.sin());
    let ub = unit_phase(theta_b_t1);
    let theta = (theta_a.norm_sqr() + theta_c.norm_sqr()).sqrt();
    let g = cosm1_over_sq(theta);
    let xi = theta_c * theta_a * g;
    let keep_a = 1.0 + theta_a.norm_sqr() * g;
    let keep_c = 1.0 + theta_c.norm_sqr() * g;

    let amp_a = cos_b * keep_a - s * i * sin_b * xi.conj() * ub;
    let amp_b = -sinc(theta) * (sin_b * theta_c.conj() * ub + s * i * cos_b * theta_a);
    let amp_c = -(i * sin_b * ub * keep_c - s * cos_b * xi);
    StateVector::three(amp_a, amp_b, amp_c)
}

/// Final (P_A, P_B, P_C) for one enantiomer.
pub type Populations3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandPopulations {
    pub left: Populations3,
    pub right: Populations3,
}

impl HandPopulations {
    pub fn get(&self, hand: Handedness) -> Populations3 {
        match hand {
            Handedness::Left => self.left,
            Handedness::Right => self.right,
        }
    }
}

fn to_array(state: &StateVector) -> Populations3 {
    let p = state.populations();
    [p[0], p[1], p[2]]
}

/// Final populations of both enantiomers after the two-stage sequence, from
/// complex areas integrated over each pulse's full support.
pub fn analytic_final_populations(
    molecule: &MoleculeSpec,
    pulses: &PulseSequence,
    spec: &DesignSpec,
) -> Result<HandPopulations> {
    let stage1 = pulses.get(spec.target.stage1_channel());
    for ch in spec.target.stage2_channels() {
        let p = pulses.get(ch);
        if p.center_time < stage1.center_time {
            return Err(Error::StageOrder(format!(
                "stage-2 pulse {ch} centered at {} ns precedes stage-1 pulse at {} ns",
                p.center_time, stage1.center_time
            )));
        }
    }
    let area = |ch: Channel| pulse_area(molecule, pulses.get(ch)).map(|a| a.value);
    let (ta, tb, tc) = (area(Channel::A)?, area(Channel::B)?, area(Channel::C)?);
    let eval = |hand| match spec.target {
        Target::C => to_array(&stage2_state_target_c(ta, tb, tc, hand)),
        Target::B => to_array(&stage2_state_target_b(tb, ta, tc, hand)),
    };
    Ok(HandPopulations { left: eval(Handedness::Left), right: eval(Handedness::Right) })
}
