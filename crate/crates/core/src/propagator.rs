//! Exact propagation of `i dψ/dt = H_I(t) ψ` in the interaction picture with
//! classical fixed-step RK4. No rotating-wave approximation, no Magnus
//! truncation, and no renormalization: the norm drift is reported as the
//! error diagnostic.

use std::f64::consts::TAU;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::analytic::StateVector;
use crate::error::{Error, Result};
use crate::model::{Handedness, LevelBasis, Levels, MoleculeSpec};
use crate::pulses::{Channel, PhaseConvention, Pulse, PROPAGATION_N_SIGMA};

/// Steps per period of the fastest phase in the run, coarsest allowed.
pub const MIN_STEPS_PER_PERIOD: f64 = 40.0;
/// Steps per period used by [`GridConfig::for_pulses`].
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 64.0;
/// Norm drift above which a run is not accepted.
pub const NORM_DRIFT_GUARD: f64 = 1e-8;
/// Pulses further than this many τ₀ from their center are treated as off.
const FIELD_CUTOFF_SIGMA: f64 = 10.0;
const MAX_LEVELS: usize = 4;

type State = [Complex64; MAX_LEVELS];
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    /// Store every k-th step (the last step is always stored).
    pub sample_stride: usize,
}

/// Largest angular frequency appearing in `H_I(t)`: the fastest carrier plus
/// the widest level gap.
pub fn fastest_frequency(molecule: &MoleculeSpec, pulses: &[Pulse], levels: Levels) -> Result<f64> {
    let basis = molecule.basis(levels)?;
    let gap = basis.energies.iter().fold(0.0f64, |m, e| m.max(*e))
        - basis.energies.iter().fold(f64::INFINITY, |m, e| m.min(*e));
    let carrier = pulses.iter().map(|p| p.carrier()).fold(0.0f64, f64::max);
    Ok(carrier + gap)
}

impl GridConfig {
    /// Span from the earliest pulse start to the latest pulse end (±4τ₀),
    /// 64 steps per fastest period, about `samples` stored states.
    pub fn for_pulses(
        molecule: &MoleculeSpec,
        pulses: &[Pulse],
        levels: Levels,
        samples: usize,
    ) -> Result<Self> {
        if pulses.is_empty() {
            return Err(Error::InvalidGrid("no pulses to size the grid from".into()));
        }
        let t_start = pulses
            .iter()
            .map(|p| p.support_window(PROPAGATION_N_SIGMA).0)
            .fold(f64::INFINITY, f64::min);
        let t_end = pulses
            .iter()
            .map(|p| p.support_window(PROPAGATION_N_SIGMA).1)
            .fold(f64::NEG_INFINITY, f64::max);
        let dt = TAU / fastest_frequency(molecule, pulses, levels)? / DEFAULT_STEPS_PER_PERIOD;
        let steps = ((t_end - t_start) / dt).ceil() as usize;
        let sample_stride = (steps / samples.max(1)).max(1);
        Ok(GridConfig { t_start, t_end, dt, sample_stride })
    }

    pub fn with_dt(self, dt: f64) -> Self {
        GridConfig { dt, ..self }
    }

    pub fn steps(&self) -> usize {
        (((self.t_end - self.t_start) / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    fn validate(&self, omega_max: f64) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.dt.is_finite()) {
            return Err(Error::InvalidGrid("non-finite grid parameter".into()));
        }
        if self.dt <= 0.0 {
            return Err(Error::InvalidGrid(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.t_end <= self.t_start {
            return Err(Error::InvalidGrid(format!(
                "t_end {} must exceed t_start {}",
                self.t_end, self.t_start
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidGrid("sample_stride must be >= 1".into()));
        }
        if omega_max > 0.0 {
            let limit = TAU / omega_max / MIN_STEPS_PER_PERIOD;
            if self.dt > limit {
                return Err(Error::GridTooCoarse { dt: self.dt, limit });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub basis: LevelBasis,
    pub hand: Handedness,
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// max |‖ψ‖ − 1| over every integration step.
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn final_populations(&self) -> Vec<f64> {
        self.final_state().populations()
    }

    pub fn levels(&self) -> Levels {
        if self.basis.dim() == 4 {
            Levels::Four
        } else {
            Levels::Three
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    row: usize,
    col: usize,
    channel: usize,
    /// −μ (times the handedness sign on a-type edges).
    weight: f64,
}

fn edges(molecule: &MoleculeSpec, hand: Handedness, levels: Levels) -> Result<Vec<Edge>> {
    let s = hand.sign();
    let (a, b, c) = (Channel::A.index(), Channel::B.index(), Channel::C.index());
    let e = |row, col, channel, weight| Edge { row, col, channel, weight };
    Ok(match levels {
        Levels::Three => vec![
            e(0, 1, a, -s * molecule.mu_a),
            e(0, 2, b, -molecule.mu_b),
            e(1, 2, c, -molecule.mu_c),
        ],
        Levels::Four => {
            let sp = molecule.spectator()?;
            vec![
                e(0, 1, c, -sp.mu_c_prime),
                e(0, 2, a, -s * molecule.mu_a),
                e(0, 3, b, -molecule.mu_b),
                e(1, 3, a, -s * sp.mu_a_prime),
                e(2, 3, c, -molecule.mu_c),
            ]
        }
    })
}

#[derive(Debug, Clone, Copy)]
struct PulseTerm {
    channel: usize,
    center: f64,
    reach: f64,
    inv_two_tau2: f64,
    peak: f64,
    carrier: f64,
    phase_origin: f64,
    phase: f64,
}

impl PulseTerm {
    fn new(p: &Pulse) -> Self {
        PulseTerm {
            channel: p.channel.index(),
            center: p.center_time,
            reach: FIELD_CUTOFF_SIGMA * p.duration,
            inv_two_tau2: 0.5 / (p.duration * p.duration),
            peak: p.peak(),
            carrier: p.carrier(),
            phase_origin: match p.convention {
                PhaseConvention::Absolute => 0.0,
                PhaseConvention::EnvelopeReferenced => p.center_time,
            },
            phase: p.phase,
        }
    }

    fn field(&self, t: f64) -> f64 {
        let x = t - self.center;
        if x.abs() > self.reach {
            return 0.0;
        }
        self.peak * (-x * x * self.inv_two_tau2).exp()
            * (self.carrier * (t - self.phase_origin) + self.phase).cos()
    }
}

/// Right-hand side `−i H_I(t) ψ` assembled from the coupling edges.
struct Rhs {
    dim: usize,
    energies: [f64; MAX_LEVELS],
    edges: Vec<Edge>,
    pulses: Vec<PulseTerm>,
}

impl Rhs {
    fn new(molecule: &MoleculeSpec, pulses: &[Pulse], hand: Handedness, levels: Levels) -> Result<Self> {
        let basis = molecule.basis(levels)?;
        let mut energies = [0.0; MAX_LEVELS];
        energies[..basis.dim()].copy_from_slice(&basis.energies);
        Ok(Rhs {
            dim: basis.dim(),
            energies,
            edges: edges(molecule, hand, levels)?,
            pulses: pulses.iter().map(PulseTerm::new).collect(),
        })
    }

    fn fields(&self, t: f64) -> [f64; 3] {
        let mut f = [0.0; 3];
        for p in &self.pulses {
            f[p.channel] += p.field(t);
        }
        f
    }

    fn eval(&self, t: f64, psi: &State, out: &mut State) {
        let fields = self.fields(t);
        let mut rot = [ZERO; MAX_LEVELS];
        for (r, e) in rot.iter_mut().zip(&self.energies[..self.dim]) {
            *r = Complex64::from_polar(1.0, e * t);
        }
        *out = [ZERO; MAX_LEVELS];
        let minus_i = Complex64::new(0.0, -1.0);
        for e in &self.edges {
            let f = fields[e.channel];
            if f == 0.0 {
                continue;
            }
            // H_I(row, col) = Ω e^{i(E_row − E_col)t}
            let h = rot[e.row] * rot[e.col].conj() * (e.weight * f);
            out[e.row] += minus_i * h * psi[e.col];
            out[e.col] += minus_i * h.conj() * psi[e.row];
        }
    }

    /// H_I(t) as a dense matrix, for cross-checks.
    #[cfg(test)]
    fn matrix(&self, t: f64) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::from_element(self.dim, self.dim, ZERO);
        let fields = self.fields(t);
        for e in &self.edges {
            let phase = (self.energies[e.row] - self.energies[e.col]) * t;
            let h = Complex64::from_polar(e.weight * fields[e.channel], phase);
            m[(e.row, e.col)] += h;
            m[(e.col, e.row)] += h.conj();
        }
        m
    }
}

fn axpy(y: &State, h: f64, k: &State, dim: usize) -> State {
    let mut out = [ZERO; MAX_LEVELS];
    for i in 0..dim {
        out[i] = y[i] + k[i] * h;
    }
    out
}

fn norm(psi: &State) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Run RK4 from |A⟩ and hand every stored step to `visit(t, ψ)`.
/// Returns the maximum norm drift over all steps.
fn integrate<F>(
    molecule: &MoleculeSpec,
    pulses: &[Pulse],
    hand: Handedness,
    levels: Levels,
    grid: &GridConfig,
    mut visit: F,
) -> Result<f64>
where
    F: FnMut(f64, &[Complex64]),
{
    for p in pulses {
        p.validate()?;
    }
    let omega_max = fastest_frequency(molecule, pulses, levels)?;
    grid.validate(omega_max)?;
    let rhs = Rhs::new(molecule, pulses, hand, levels)?;
    let dim = rhs.dim;

    let n = grid.steps();
    let h = (grid.t_end - grid.t_start) / n as f64;
    let mut psi: State = [ZERO; MAX_LEVELS];
    psi[0] = Complex64::new(1.0, 0.0);
    let (mut k1, mut k2, mut k3, mut k4) = ([ZERO; MAX_LEVELS], [ZERO; MAX_LEVELS], [ZERO; MAX_LEVELS], [ZERO; MAX_LEVELS]);
    let mut drift = 0.0f64;
    visit(grid.t_start, &psi[..dim]);

    for step in 0..n {
        let t = grid.t_start + step as f64 * h;
        rhs.eval(t, &psi, &mut k1);
        rhs.eval(t + 0.5 * h, &axpy(&psi, 0.5 * h, &k1, dim), &mut k2);
        rhs.eval(t + 0.5 * h, &axpy(&psi, 0.5 * h, &k2, dim), &mut k3);
        rhs.eval(t + h, &axpy(&psi, h, &k3, dim), &mut k4);
        for i in 0..dim {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        let t_next = grid.t_start + (step + 1) as f64 * h;
        let nrm = norm(&psi);
        if !nrm.is_finite() {
            return Err(Error::NonFiniteState { t: t_next });
        }
        drift = drift.max((nrm - 1.0).abs());
        if (step + 1) % grid.sample_stride == 0 || step + 1 == n {
            visit(t_next, &psi[..dim]);
        }
    }
    Ok(drift)
}

/// Propagate |A⟩ through `pulses` for one enantiomer.
pub fn propagate(
    molecule: &MoleculeSpec,
    pulses: &[Pulse],
    hand: Handedness,
    levels: Levels,
    grid: &GridConfig,
) -> Result<Trajectory> {
    let basis = molecule.basis(levels)?;
    let mut times = Vec::new();
    let mut states = Vec::new();
    let norm_drift = integrate(molecule, pulses, hand, levels, grid, |t, psi| {
        times.push(t);
        states.push(StateVector { levels, amplitudes: psi.to_vec() });
    })?;
    Ok(Trajectory { basis, hand, times, states, norm_drift })
}

/// Final state and norm drift only; nothing is stored along the way.
pub fn propagate_final(
    molecule: &MoleculeSpec,
    pulses: &[Pulse],
    hand: Handedness,
    levels: Levels,
    grid: &GridConfig,
) -> Result<(StateVector, f64)> {
    let mut last = Vec::new();
    let coarse = GridConfig { sample_stride: usize::MAX, ..*grid };
    let drift = integrate(molecule, pulses, hand, levels, &coarse, |_, psi| {
        last.clear();
        last.extend_from_slice(psi);
    })?;
    Ok((StateVector { levels, amplitudes: last }, drift))
}

/// P_X(t) per level: `result[level][sample]`.
pub fn populations(traj: &Trajectory) -> Vec<Vec<f64>> {
    (0..traj.basis.dim())
        .map(|j| traj.states.iter().map(|s| s.amplitudes[j].norm_sqr()).collect())
        .collect()
}

pub fn norm_drift(traj: &Trajectory) -> f64 {
    traj.norm_drift
}

pub const TRAJECTORY_HEADER: &str = "t_ns,hand,P_A,P_Bprime,P_B,P_C,norm_err";

/// One row per sample; three-level runs write `P_Bprime = 0`.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    write_trajectory_rows(&mut w, traj)
}

pub fn write_trajectory_rows<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let p = s.populations();
        let (pa, pbp, pb, pc) = match traj.levels() {
            Levels::Three => (p[0], 0.0, p[1], p[2]),
            Levels::Four => (p[0], p[1], p[2], p[3]),
        };
        let norm_err = (s.norm() - 1.0).abs();
        writeln!(w, "{t},{},{pa},{pbp},{pb},{pc},{norm_err:e}", traj.hand)?;
    }
    Ok(())
}

/// Population of a named level at the end of a trajectory.
pub fn final_population(traj: &Trajectory, level: crate::model::Level) -> Option<f64> {
    traj.levels().index(level).map(|i| traj.final_state().amplitudes[i].norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::areas::{design_sequence, DesignSpec, Target};
    use crate::model::{coupling_matrix_3, coupling_matrix_4, interaction_picture_matrix, ChannelCouplings};
    use std::f64::consts::PI;

    fn molecule() -> MoleculeSpec {
        MoleculeSpec::cyclohexylmethanol()
    }

    fn a_pulse() -> Pulse {
        Pulse {
            area_param: PI / (4.0 * 0.4),
            center_time: 0.0,
            duration: 35.0,
            carrier_mhz: 4720.0,
            phase: 0.3,
            convention: PhaseConvention::Absolute,
            channel: Channel::A,
        }
    }

    #[test]
    fn rhs_matches_model_matrices() {
        let m = molecule();
        let seq = design_sequence(&m, &DesignSpec::new(&m, Target::C, Handedness::Left, 35.0)).unwrap();
        let pulses = seq.to_vec();
        for hand in Handedness::BOTH {
            for levels in [Levels::Three, Levels::Four] {
                let rhs = Rhs::new(&m, &pulses, hand, levels).unwrap();
                let basis = m.basis(levels).unwrap();
                for t in [-20.0, 3.7, 150.0, 281.3] {
                    let f = rhs.fields(t);
                    let couplings = ChannelCouplings { a: -m.mu_a * f[0], b: -m.mu_b * f[1], c: -m.mu_c * f[2] };
                    let hc = match levels {
                        Levels::Three => coupling_matrix_3(couplings, hand),
                        Levels::Four => coupling_matrix_4(&m, couplings, hand).unwrap(),
                    };
                    let expect = interaction_picture_matrix(&hc, &basis.energies, t).unwrap();
                    assert!((rhs.matrix(t) - expect).norm() < 1e-14);
                    for (p, term) in pulses.iter().zip(&rhs.pulses) {
                        assert!((p.field(t) - term.field(t)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn no_pulses_leaves_ground_state() {
        let m = molecule();
        let grid = GridConfig { t_start: 0.0, t_end: 10.0, dt: 1e-3, sample_stride: 100 };
        let traj = propagate(&m, &[], Handedness::Left, Levels::Four, &grid).unwrap();
        assert!(traj.norm_drift < 1e-12);
        for s in &traj.states {
            assert_eq!(s.populations(), vec![1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn single_quarter_pulse_splits_population() {
        let m = molecule();
        let p = a_pulse();
        let grid = GridConfig::for_pulses(&m, std::slice::from_ref(&p), Levels::Three, 100).unwrap();
        for hand in Handedness::BOTH {
            let traj = propagate(&m, std::slice::from_ref(&p), hand, Levels::Three, &grid).unwrap();
            let fin = traj.final_populations();
            assert!((fin[0] - 0.5).abs() < 5e-3 && (fin[1] - 0.5).abs() < 5e-3, "{fin:?}");
            assert!(traj.norm_drift < 1e-8);
            let pops = populations(&traj);
            assert_eq!(pops[0][0], 1.0);
            for i in 0..traj.times.len() {
                let total: f64 = pops.iter().map(|p| p[i]).sum();
                assert!((total - 1.0).abs() <= 2.0 * traj.norm_drift + 1e-14);
            }
        }
    }

    #[test]
    fn grid_validation() {
        let m = molecule();
        let p = a_pulse();
        let good = GridConfig::for_pulses(&m, std::slice::from_ref(&p), Levels::Three, 10).unwrap();
        let coarse = good.with_dt(good.dt * 2.0);
        assert!(matches!(
            propagate(&m, std::slice::from_ref(&p), Handedness::Left, Levels::Three, &coarse),
            Err(Error::GridTooCoarse { .. })
        ));
        let inverted = GridConfig { t_start: 5.0, t_end: 1.0, ..good };
        assert!(matches!(
            propagate(&m, std::slice::from_ref(&p), Handedness::Left, Levels::Three, &inverted),
            Err(Error::InvalidGrid(_))
        ));
        let mut bare = m.clone();
        bare.spectator = None;
        assert_eq!(
            propagate(&bare, &[p], Handedness::Left, Levels::Four, &good),
            Err(Error::MissingSpectator)
        );
    }

    #[test]
    fn non_finite_state_is_reported() {
        let m = molecule();
        let p = Pulse { area_param: 1e300, ..a_pulse() };
        let grid = GridConfig::for_pulses(&m, std::slice::from_ref(&p), Levels::Three, 10).unwrap();
        assert!(matches!(
            propagate(&m, &[p], Handedness::Left, Levels::Three, &grid),
            Err(Error::NonFiniteState { .. })
        ));
    }

    #[test]
    fn final_only_matches_full_run() {
        let m = molecule();
        let p = a_pulse();
        let grid = GridConfig::for_pulses(&m, std::slice::from_ref(&p), Levels::Four, 50).unwrap();
        let traj = propagate(&m, std::slice::from_ref(&p), Handedness::Right, Levels::Four, &grid).unwrap();
        let (fin, drift) = propagate_final(&m, &[p], Handedness::Right, Levels::Four, &grid).unwrap();
        assert_eq!(&fin, traj.final_state());
        assert_eq!(drift, traj.norm_drift);
        assert_eq!(*traj.times.last().unwrap(), grid.t_end);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn csv_layout() {
        let m = molecule();
        let p = a_pulse();
        let grid = GridConfig::for_pulses(&m, std::slice::from_ref(&p), Levels::Three, 4).unwrap();
        let traj = propagate(&m, &[p], Handedness::Left, Levels::Three, &grid).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRAJECTORY_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 7);
        assert_eq!(first[1], "left");
        assert_eq!(first[2], "1");
        assert_eq!(first[3], "0");
        assert_eq!(text.lines().count(), traj.times.len() + 1);
    }
}
