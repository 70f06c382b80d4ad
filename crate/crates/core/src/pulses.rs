//! Gaussian-envelope carrier pulses.
//!
//! A pulse of area parameter `A` and duration `τ₀` has the envelope
//! `√(2/π)·(A/τ₀)·exp(−(t−t_c)²/(2τ₀²))`, whose time integral is `2A`. With a
//! resonant carrier the cosine halves that, so `μ·A` is the modulus of the
//! complex pulse area in radians.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::mhz_to_angular;

/// Window half-width (in units of τ₀) used when propagating.
pub const PROPAGATION_N_SIGMA: f64 = 4.0;
/// Window half-width (in units of τ₀) used for area quadrature.
pub const QUADRATURE_N_SIGMA: f64 = 8.0;

/// Which dipole component (and polarization) a pulse drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    A,
    B,
    C,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::A, Channel::B, Channel::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::A => "a",
            Channel::B => "b",
            Channel::C => "c",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

/// Reference point of the carrier phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PhaseConvention {
    /// `cos(ωt + φ)`.
    #[default]
    Absolute,
    /// `cos(ω(t − t_c) + φ)`: the carrier is locked to the envelope center.
    EnvelopeReferenced,
}

impl PhaseConvention {
    pub fn name(self) -> &'static str {
        match self {
            PhaseConvention::Absolute => "absolute",
            PhaseConvention::EnvelopeReferenced => "envelope",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    /// rad/Debye.
    pub area_param: f64,
    /// ns.
    pub center_time: f64,
    /// τ₀, ns.
    pub duration: f64,
    /// Cyclic MHz.
    pub carrier_mhz: f64,
    /// rad.
    pub phase: f64,
    pub convention: PhaseConvention,
    pub channel: Channel,
}

impl Pulse {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.area_param, self.center_time, self.duration, self.carrier_mhz, self.phase]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("pulse parameter"));
        }
        if self.duration <= 0.0 {
            return Err(Error::InvalidPulse(format!("duration must be > 0, got {}", self.duration)));
        }
        if self.area_param < 0.0 {
            return Err(Error::InvalidPulse(format!(
                "area parameter must be >= 0, got {}",
                self.area_param
            )));
        }
        if self.carrier_mhz <= 0.0 {
            return Err(Error::InvalidPulse(format!(
                "carrier frequency must be > 0, got {}",
                self.carrier_mhz
            )));
        }
        Ok(())
    }

    /// Carrier angular frequency, rad/ns.
    pub fn carrier(&self) -> f64 {
        mhz_to_angular(self.carrier_mhz)
    }

    /// Phase of the equivalent `cos(ωt + φ)` carrier.
    pub fn absolute_phase(&self) -> f64 {
        match self.convention {
            PhaseConvention::Absolute => self.phase,
            PhaseConvention::EnvelopeReferenced => self.phase - self.carrier() * self.center_time,
        }
    }

    /// Peak value of the envelope.
    pub fn peak(&self) -> f64 {
        FRAC_2_PI.sqrt() * self.area_param / self.duration
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let x = (t - self.center_time) / self.duration;
        self.peak() * (-0.5 * x * x).exp()
    }

    pub fn field(&self, t: f64) -> f64 {
        let arg = match self.convention {
            PhaseConvention::Absolute => self.carrier() * t + self.phase,
            PhaseConvention::EnvelopeReferenced => {
                self.carrier() * (t - self.center_time) + self.phase
            }
        };
        self.envelope(t) * arg.cos()
    }

    /// `∫ E(t) e^{iω t} dt` over the whole real line, in closed form: two
    /// Gaussian lobes centered at ±ω_carrier. At resonance the modulus is
    /// `A` up to the exponentially small counter-rotating lobe.
    pub fn spectral_amplitude(&self, omega: f64) -> Complex64 {
        let w = self.carrier();
        let phi = self.absolute_phase();
        let tc = self.center_time;
        let tau2 = self.duration * self.duration;
        let lobe = |nu: f64, sign: f64| {
            Complex64::from_polar(
                self.area_param * (-0.5 * nu * nu * tau2).exp(),
                nu * tc + sign * phi,
            )
        };
        lobe(omega - w, -1.0) + lobe(omega + w, 1.0)
    }

    /// `t_c ± n_sigma·τ₀`.
    pub fn support_window(&self, n_sigma: f64) -> (f64, f64) {
        (
            self.center_time - n_sigma * self.duration,
            self.center_time + n_sigma * self.duration,
        )
    }
}

/// Map a phase into (−π, π].
pub fn wrap_phase(phi: f64) -> f64 {
    let mut x = phi.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Distance between two angles on the circle.
pub fn circular_distance(x: f64, y: f64) -> f64 {
    wrap_phase(x - y).abs()
}
