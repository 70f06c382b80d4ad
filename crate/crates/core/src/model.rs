//! Level structure of the Δ-type loop, the handedness sign rule, and the
//! coupling Hamiltonians of the three-level loop and the four-level model
//! with the spectator level |B′⟩.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance on loop closure, in MHz (1 kHz).
pub const DEFAULT_CLOSURE_TOL_MHZ: f64 = 1e-3;

/// Cyclic MHz to angular rad/ns.
pub fn mhz_to_angular(mhz: f64) -> f64 {
    TAU * mhz * 1e-3
}

/// Angular rad/ns to cyclic MHz.
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Handedness {
    Left,
    Right,
}

impl Handedness {
    pub const BOTH: [Handedness; 2] = [Handedness::Left, Handedness::Right];

    /// Sign carried by the a-type coupling.
    pub fn sign(self) -> f64 {
        match self {
            Handedness::Left => 1.0,
            Handedness::Right => -1.0,
        }
    }

    pub fn mirror(self) -> Self {
        match self {
            Handedness::Left => Handedness::Right,
            Handedness::Right => Handedness::Left,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Handedness::Left => "L",
            Handedness::Right => "R",
        }
    }
}

impl fmt::Display for Handedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Handedness::Left => "left",
            Handedness::Right => "right",
        })
    }
}

/// Level |B′⟩ sitting just below |B⟩, reachable from |A⟩ by a c-type
/// transition and from |C⟩ by an a-type transition.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectatorSpec {
    /// A ↔ B′ (c-type), cyclic MHz.
    pub omega_abp_mhz: f64,
    /// B′ ↔ C (a-type), cyclic MHz.
    pub omega_bpc_mhz: f64,
    pub mu_a_prime: f64,
    pub mu_c_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSpec {
    pub name: String,
    /// Transition frequencies in cyclic MHz.
    pub omega_ab_mhz: f64,
    pub omega_bc_mhz: f64,
    pub omega_ac_mhz: f64,
    /// Dipole components in Debye, all positive. The enantiomer sign lives in
    /// [`Handedness`].
    pub mu_a: f64,
    pub mu_b: f64,
    pub mu_c: f64,
    pub spectator: Option<SpectatorSpec>,
}

impl MoleculeSpec {
    /// Cyclohexylmethanol: |1₀₁⟩, |2₀₂⟩, |2₁₂⟩ as A, B, C and |1₁₁⟩ as B′.
    pub fn cyclohexylmethanol() -> Self {
        MoleculeSpec {
            name: "cyclohexylmethanol".to_string(),
            omega_ab_mhz: 4720.0,
            omega_bc_mhz: 2339.0,
            omega_ac_mhz: 7059.0,
            mu_a: 0.4,
            mu_b: 1.2,
            mu_c: 0.8,
            spectator: Some(SpectatorSpec {
                omega_abp_mhz: 2575.0,
                omega_bpc_mhz: 4484.0,
                mu_a_prime: 0.4,
                mu_c_prime: 0.8,
            }),
        }
    }

    /// Built-in molecules by name.
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cyclohexylmethanol" | "c7h14o" => Some(Self::cyclohexylmethanol()),
            _ => None,
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["cyclohexylmethanol"]
    }

    pub fn validate(&self, closure_tol_mhz: f64) -> Result<()> {
        let freqs = [
            ("omega_ab", self.omega_ab_mhz),
            ("omega_bc", self.omega_bc_mhz),
            ("omega_ac", self.omega_ac_mhz),
        ];
        for (name, v) in freqs {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidMolecule(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("mu_a", self.mu_a), ("mu_b", self.mu_b), ("mu_c", self.mu_c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidMolecule(format!("{name} must be positive, got {v}")));
            }
        }
        let residual = loop_closure_residual(self);
        if residual.abs() > closure_tol_mhz {
            return Err(Error::InvalidMolecule(format!(
                "loop does not close: omega_ac - omega_ab - omega_bc = {residual} MHz"
            )));
        }
        if let Some(sp) = &self.spectator {
            for (name, v) in [
                ("omega_abp", sp.omega_abp_mhz),
                ("omega_bpc", sp.omega_bpc_mhz),
                ("mu_a_prime", sp.mu_a_prime),
                ("mu_c_prime", sp.mu_c_prime),
            ] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidMolecule(format!("{name} must be positive, got {v}")));
                }
            }
            let r = sp.omega_abp_mhz + sp.omega_bpc_mhz - self.omega_ac_mhz;
            if r.abs() > closure_tol_mhz {
                return Err(Error::InvalidMolecule(format!(
                    "spectator energies inconsistent: omega_abp + omega_bpc - omega_ac = {r} MHz"
                )));
            }
        }
        Ok(())
    }

    pub fn omega_ab(&self) -> f64 {
        mhz_to_angular(self.omega_ab_mhz)
    }

    pub fn omega_bc(&self) -> f64 {
        mhz_to_angular(self.omega_bc_mhz)
    }

    pub fn omega_ac(&self) -> f64 {
        mhz_to_angular(self.omega_ac_mhz)
    }

    pub fn spectator(&self) -> Result<&SpectatorSpec> {
        self.spectator.as_ref().ok_or(Error::MissingSpectator)
    }

    /// Level labels and field-free energies for the chosen model, with E_A = 0.
    pub fn basis(&self, levels: Levels) -> Result<LevelBasis> {
        match levels {
            Levels::Three => Ok(LevelBasis {
                labels: vec!["A", "B", "C"],
                energies: vec![0.0, self.omega_ab(), self.omega_ac()],
            }),
            Levels::Four => {
                let sp = self.spectator()?;
                Ok(LevelBasis {
                    labels: vec!["A", "Bprime", "B", "C"],
                    energies: vec![
                        0.0,
                        mhz_to_angular(sp.omega_abp_mhz),
                        self.omega_ab(),
                        self.omega_ac(),
                    ],
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Levels {
    Three,
    Four,
}

impl Levels {
    pub fn dim(self) -> usize {
        match self {
            Levels::Three => 3,
            Levels::Four => 4,
        }
    }

    /// Index of a named level in this model's basis order.
    pub fn index(self, level: Level) -> Option<usize> {
        match (self, level) {
            (Levels::Three, Level::A) => Some(0),
            (Levels::Three, Level::B) => Some(1),
            (Levels::Three, Level::C) => Some(2),
            (Levels::Three, Level::BPrime) => None,
            (Levels::Four, Level::A) => Some(0),
            (Levels::Four, Level::BPrime) => Some(1),
            (Levels::Four, Level::B) => Some(2),
            (Levels::Four, Level::C) => Some(3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    A,
    BPrime,
    B,
    C,
}

/// Ordered levels: (A, B, C) or (A, B′, B, C).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelBasis {
    pub labels: Vec<&'static str>,
    /// rad/ns relative to E_A = 0.
    pub energies: Vec<f64>,
}

impl LevelBasis {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// ω_AC − ω_AB − ω_BC in MHz.
pub fn loop_closure_residual(molecule: &MoleculeSpec) -> f64 {
    molecule.omega_ac_mhz - molecule.omega_ab_mhz - molecule.omega_bc_mhz
}

/// Instantaneous couplings Ω_x(t) = −μ_x·E_x(t) of the three channels, rad/ns.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChannelCouplings {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Off-diagonal coupling matrix of the loop in (A, B, C) order.
pub fn coupling_matrix_3(couplings: ChannelCouplings, hand: Handedness) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(3, 3);
    set_sym(&mut m, 0, 1, hand.sign() * couplings.a);
    set_sym(&mut m, 0, 2, couplings.b);
    set_sym(&mut m, 1, 2, couplings.c);
    m
}

/// Coupling matrix of the four-level model in (A, B′, B, C) order. The primed
/// couplings are derived from the same physical a and c fields through the
/// ratio of primed to unprimed dipoles.
pub fn coupling_matrix_4(
    molecule: &MoleculeSpec,
    couplings: ChannelCouplings,
    hand: Handedness,
) -> Result<DMatrix<f64>> {
    let sp = molecule.spectator()?;
    let a_prime = couplings.a * sp.mu_a_prime / molecule.mu_a;
    let c_prime = couplings.c * sp.mu_c_prime / molecule.mu_c;
    let s = hand.sign();
    let mut m = DMatrix::zeros(4, 4);
    set_sym(&mut m, 0, 1, c_prime);
    set_sym(&mut m, 0, 2, s * couplings.a);
    set_sym(&mut m, 0, 3, couplings.b);
    set_sym(&mut m, 1, 3, s * a_prime);
    set_sym(&mut m, 2, 3, couplings.c);
    Ok(m)
}

fn set_sym(m: &mut DMatrix<f64>, j: usize, k: usize, v: f64) {
    m[(j, k)] = v;
    m[(k, j)] = v;
}

/// e^{iH₀t} H_c e^{−iH₀t} for diagonal H₀: entry (j,k) picks up e^{i(E_j−E_k)t}.
pub fn interaction_picture_matrix(
    coupling: &DMatrix<f64>,
    energies: &[f64],
    t: f64,
) -> Result<DMatrix<Complex64>> {
    let n = coupling.nrows();
    if coupling.ncols() != n || energies.len() != n {
        return Err(Error::DimensionMismatch { matrix: n, energies: energies.len() });
    }
    Ok(DMatrix::from_fn(n, n, |j, k| {
        Complex64::from_polar(coupling[(j, k)], (energies[j] - energies[k]) * t)
    }))
}
