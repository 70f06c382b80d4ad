//! INI-style run configuration.
//!
//! ```ini
//! [molecule]
//! preset = cyclohexylmethanol
//!
//! [design]
//! target = C
//! hand = left
//! duration_ns = 35
//!
//! [pulse.a]
//! phase_rad = pi/2      # anything left out (or `auto`) comes from the designer
//! ```
//!
//! Every physical key carries its unit in the name. Numbers may be written as
//! multiples of pi (`pi/2`, `3pi/2`, `-0.5*pi`).

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use esst_core::areas::{
    default_stage_centers, design_amplitudes, design_phases, transition_mhz, DesignSpec, PulseSequence, Target,
};
use esst_core::experiments::{Axis, DetuningMode, Engine};
use esst_core::model::{Handedness, Levels, MoleculeSpec, SpectatorSpec, DEFAULT_CLOSURE_TOL_MHZ};
use esst_core::pulses::{Channel, PhaseConvention, Pulse};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub section: Option<String>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(section: &str, key: Option<&str>, message: impl Into<String>) -> Self {
        ConfigError {
            section: Some(section.to_string()),
            key: key.map(str::to_string),
            message: message.into(),
        }
    }

    fn bare(message: impl Into<String>) -> Self {
        ConfigError { section: None, key: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.section, &self.key) {
            (Some(s), Some(k)) => write!(f, "[{s}] {k}: {}", self.message),
            (Some(s), None) => write!(f, "[{s}]: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "molecule",
        &[
            "preset",
            "name",
            "omega_ab_mhz",
            "omega_bc_mhz",
            "omega_ac_mhz",
            "mu_a_debye",
            "mu_b_debye",
            "mu_c_debye",
            "omega_abprime_mhz",
            "omega_bprimec_mhz",
            "mu_a_prime_debye",
            "mu_c_prime_debye",
            "closure_tol_mhz",
        ],
    ),
    (
        "design",
        &["target", "hand", "k", "k_prime", "l", "duration_ns", "stage1_center_ns", "stage2_center_ns", "convention"],
    ),
    ("pulse.a", PULSE_KEYS),
    ("pulse.b", PULSE_KEYS),
    ("pulse.c", PULSE_KEYS),
    ("grid", &["levels", "dt_ns", "t_start_ns", "t_end_ns", "samples"]),
    (
        "sweep",
        &[
            "phase_min_rad",
            "phase_max_rad",
            "phase_count",
            "duration_min_ns",
            "duration_max_ns",
            "duration_count",
            "delay1_min_ns",
            "delay1_max_ns",
            "delay1_count",
            "delay2_min_ns",
            "delay2_max_ns",
            "delay2_count",
            "detunings_per_tau0",
            "scale_min",
            "scale_max",
            "scale_count",
            "mode",
            "engine",
        ],
    ),
    ("output", &["dir", "hands"]),
];

const PULSE_KEYS: &[&str] = &["area_param", "center_ns", "duration_ns", "carrier_mhz", "phase_rad"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Raw `section -> key -> value` map, before any interpretation.
#[derive(Debug, Clone, Default)]
pub struct Ini {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

fn strip_comment(line: &str) -> &str {
    let cut = line
        .char_indices()
        .find(|&(i, c)| (c == '#' || c == ';') && (i == 0 || line[..i].ends_with(char::is_whitespace)))
        .map_or(line.len(), |(i, _)| i);
    line[..cut].trim()
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self> {
        let mut ini = Ini::default();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::bare(format!("line {line_no}: unterminated section header")))?
                    .trim()
                    .to_ascii_lowercase();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::at(&name, None, format!("unknown section (line {line_no})")));
                }
                if ini.sections.contains_key(&name) {
                    return Err(ConfigError::at(&name, None, format!("section repeated (line {line_no})")));
                }
                ini.sections.insert(name.clone(), BTreeMap::new());
                current = Some(name);
                continue;
            }
            let section = current
                .as_ref()
                .ok_or_else(|| ConfigError::bare(format!("line {line_no}: key outside of any section")))?;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::at(section, None, format!("line {line_no}: expected `key = value`")))?;
            let key = key.trim().to_ascii_lowercase();
            let allowed = SECTIONS.iter().find(|(s, _)| s == section).map(|(_, k)| *k).unwrap_or(&[]);
            if !allowed.contains(&key.as_str()) {
                return Err(ConfigError::at(section, Some(&key), format!("unknown key (line {line_no})")));
            }
            let entries = ini.sections.get_mut(section).expect("section inserted above");
            if entries.contains_key(&key) {
                return Err(ConfigError::at(section, Some(&key), format!("key repeated (line {line_no})")));
            }
            entries.insert(key, Entry { value: value.trim().to_string(), line: line_no });
        }
        Ok(ini)
    }

    /// Set (or replace) a value, as command-line flags do.
    pub fn set(&mut self, section: &str, key: &str, value: &str) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), Entry { value: value.to_string(), line: 0 });
    }

    fn section(&self, name: &'static str) -> Section<'_> {
        Section { name, entries: self.sections.get(name) }
    }
}

struct Section<'a> {
    name: &'static str,
    entries: Option<&'a BTreeMap<String, Entry>>,
}

/// Parse a real number, allowing multiples of pi.
pub fn parse_number(text: &str) -> Option<f64> {
    let s = text.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let s = s.to_ascii_lowercase().replace('π', "pi").replace(' ', "");
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().ok()?),
        None => (s.clone(), 1.0),
    };
    let coef = num.strip_suffix("pi")?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        _ => coef.parse::<f64>().ok()?,
    };
    let v = c * PI / den;
    v.is_finite().then_some(v)
}

impl<'a> Section<'a> {
    fn raw(&self, key: &str) -> Option<&'a Entry> {
        self.entries.and_then(|e| e.get(key))
    }

    fn err(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let mut e = ConfigError::at(self.name, Some(key), message);
        if let Some(line) = self.raw(key).map(|e| e.line).filter(|l| *l > 0) {
            e.message = format!("{} (line {line})", e.message);
        }
        e
    }

    /// `None` when absent or `auto`.
    fn text(&self, key: &str) -> Option<&'a str> {
        self.raw(key).map(|e| e.value.as_str()).filter(|v| !v.eq_ignore_ascii_case("auto"))
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => parse_number(v).map(Some).ok_or_else(|| self.err(key, format!("not a number: {v:?}"))),
        }
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.number(key)?.ok_or_else(|| ConfigError::at(self.name, Some(key), "missing value"))
    }

    fn integer<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.text(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| self.err(key, format!("not a valid integer: {v:?}"))),
        }
    }

    fn choice<T>(&self, key: &str, default: T, parse: impl Fn(&str) -> Option<T>, expected: &str) -> Result<T> {
        match self.text(key) {
            None => Ok(default),
            Some(v) => parse(&v.to_ascii_lowercase())
                .ok_or_else(|| self.err(key, format!("expected {expected}, got {v:?}"))),
        }
    }
}

fn parse_target(s: &str) -> Option<Target> {
    match s {
        "b" => Some(Target::B),
        "c" => Some(Target::C),
        _ => None,
    }
}

pub fn parse_hand(s: &str) -> Option<Handedness> {
    match s {
        "left" | "l" => Some(Handedness::Left),
        "right" | "r" => Some(Handedness::Right),
        _ => None,
    }
}

pub fn parse_convention(s: &str) -> Option<PhaseConvention> {
    match s {
        "absolute" => Some(PhaseConvention::Absolute),
        "envelope" | "envelope_referenced" => Some(PhaseConvention::EnvelopeReferenced),
        _ => None,
    }
}

pub fn parse_levels(s: &str) -> Option<Levels> {
    match s {
        "3" => Some(Levels::Three),
        "4" => Some(Levels::Four),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandSelection {
    Left,
    Right,
    Both,
}

impl HandSelection {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "both" => Some(HandSelection::Both),
            _ => parse_hand(s).map(|h| match h {
                Handedness::Left => HandSelection::Left,
                Handedness::Right => HandSelection::Right,
            }),
        }
    }

    pub fn hands(self) -> Vec<Handedness> {
        match self {
            HandSelection::Left => vec![Handedness::Left],
            HandSelection::Right => vec![Handedness::Right],
            HandSelection::Both => Handedness::BOTH.to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HandSelection::Left => "left",
            HandSelection::Right => "right",
            HandSelection::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSettings {
    pub levels: Levels,
    /// `None` means the defaults derived from the pulses.
    pub dt_ns: Option<f64>,
    pub t_start_ns: Option<f64>,
    pub t_end_ns: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub phase: Axis,
    pub duration: Axis,
    pub delay1: Axis,
    pub delay2: Axis,
    /// Δ·τ₀ values; the detunings are these divided by τ₀, in rad/ns.
    pub detunings_per_tau0: Vec<f64>,
    pub scale: Axis,
    pub mode: DetuningMode,
    /// `None` lets each sweep pick its default.
    pub engine: Option<Engine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub hands: HandSelection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub molecule: MoleculeSpec,
    pub closure_tol_mhz: f64,
    pub design: DesignSpec,
    /// The three pulses with every `auto` resolved.
    pub pulses: PulseSequence,
    pub grid: GridSettings,
    pub sweep: SweepSettings,
    pub output: OutputSettings,
}

fn parse_molecule(ini: &Ini) -> Result<(MoleculeSpec, f64)> {
    if !ini.sections.contains_key("molecule") {
        return Err(ConfigError::bare("missing [molecule]"));
    }
    let s = ini.section("molecule");
    let mut m = match s.text("preset") {
        Some(name) => MoleculeSpec::preset(name).ok_or_else(|| {
            s.err("preset", format!("unknown preset {name:?} (known: {})", MoleculeSpec::preset_names().join(", ")))
        })?,
        None => MoleculeSpec {
            name: "custom".to_string(),
            omega_ab_mhz: s.required("omega_ab_mhz")?,
            omega_bc_mhz: s.required("omega_bc_mhz")?,
            omega_ac_mhz: s.required("omega_ac_mhz")?,
            mu_a: s.required("mu_a_debye")?,
            mu_b: s.required("mu_b_debye")?,
            mu_c: s.required("mu_c_debye")?,
            spectator: None,
        },
    };
    if let Some(name) = s.text("name") {
        m.name = name.to_string();
    }
    for (key, field) in [
        ("omega_ab_mhz", &mut m.omega_ab_mhz),
        ("omega_bc_mhz", &mut m.omega_bc_mhz),
        ("omega_ac_mhz", &mut m.omega_ac_mhz),
        ("mu_a_debye", &mut m.mu_a),
        ("mu_b_debye", &mut m.mu_b),
        ("mu_c_debye", &mut m.mu_c),
    ] {
        if let Some(v) = s.number(key)? {
            *field = v;
        }
    }
    let spectator_keys = ["omega_abprime_mhz", "omega_bprimec_mhz", "mu_a_prime_debye", "mu_c_prime_debye"];
    let given: Vec<Option<f64>> = spectator_keys.iter().map(|k| s.number(k)).collect::<Result<_>>()?;
    if given.iter().any(Option::is_some) {
        let base = m.spectator.clone().unwrap_or(SpectatorSpec {
            omega_abp_mhz: f64::NAN,
            omega_bpc_mhz: f64::NAN,
            mu_a_prime: f64::NAN,
            mu_c_prime: f64::NAN,
        });
        let pick = |i: usize, fallback: f64| -> Result<f64> {
            match given[i] {
                Some(v) => Ok(v),
                None if fallback.is_nan() => {
                    Err(ConfigError::at("molecule", Some(spectator_keys[i]), "missing value (spectator keys come as a set)"))
                }
                None => Ok(fallback),
            }
        };
        m.spectator = Some(SpectatorSpec {
            omega_abp_mhz: pick(0, base.omega_abp_mhz)?,
            omega_bpc_mhz: pick(1, base.omega_bpc_mhz)?,
            mu_a_prime: pick(2, base.mu_a_prime)?,
            mu_c_prime: pick(3, base.mu_c_prime)?,
        });
    }
    let tol = s.number_or("closure_tol_mhz", DEFAULT_CLOSURE_TOL_MHZ)?;
    m.validate(tol).map_err(|e| ConfigError::at("molecule", None, e.to_string()))?;
    Ok((m, tol))
}

fn parse_design(ini: &Ini, m: &MoleculeSpec) -> Result<DesignSpec> {
    let s = ini.section("design");
    let target = s.choice("target", Target::C, parse_target, "B or C")?;
    let hand = s.choice("hand", Handedness::Left, parse_hand, "left or right")?;
    let tau0 = s.number_or("duration_ns", 35.0)?;
    let mut spec = DesignSpec {
        k: s.integer("k", 0)?,
        k_prime: s.integer("k_prime", 0)?,
        l: s.integer("l", 0)?,
        convention: s.choice("convention", PhaseConvention::EnvelopeReferenced, parse_convention, "absolute or envelope")?,
        tau0,
        ..DesignSpec::new(m, target, hand, 1.0)
    };
    spec.validate().map_err(|e| s.err("duration_ns", e.to_string()))?;
    let (t1, t2) = default_stage_centers(m, target, tau0);
    spec.t_stage1_center = s.number_or("stage1_center_ns", t1)?;
    spec.t_stage2_center = s.number_or("stage2_center_ns", t2)?;
    Ok(spec)
}

fn parse_pulses(ini: &Ini, m: &MoleculeSpec, design: &DesignSpec) -> Result<PulseSequence> {
    let amps = design_amplitudes(m, design).map_err(|e| ConfigError::at("design", None, e.to_string()))?;
    let phases = design_phases(design);
    let stage1 = design.target.stage1_channel();
    let build = |ch: Channel, name: &'static str| -> Result<Pulse> {
        let s = ini.section(name);
        let pulse = Pulse {
            area_param: s.number_or("area_param", amps.get(ch))?,
            center_time: s.number_or(
                "center_ns",
                if ch == stage1 { design.t_stage1_center } else { design.t_stage2_center },
            )?,
            duration: s.number_or("duration_ns", design.tau0)?,
            carrier_mhz: s.number_or("carrier_mhz", transition_mhz(m, ch))?,
            phase: s.number_or("phase_rad", phases.get(ch))?,
            convention: design.convention,
            channel: ch,
        };
        pulse.validate().map_err(|e| ConfigError::at(name, None, e.to_string()))?;
        Ok(pulse)
    };
    Ok(PulseSequence {
        a: build(Channel::A, "pulse.a")?,
        b: build(Channel::B, "pulse.b")?,
        c: build(Channel::C, "pulse.c")?,
    })
}

fn parse_grid(ini: &Ini) -> Result<GridSettings> {
    let s = ini.section("grid");
    let g = GridSettings {
        levels: s.choice("levels", Levels::Four, parse_levels, "3 or 4")?,
        dt_ns: s.number("dt_ns")?,
        t_start_ns: s.number("t_start_ns")?,
        t_end_ns: s.number("t_end_ns")?,
        samples: s.integer("samples", esst_core::experiments::TRACE_SAMPLES)?,
    };
    if let Some(dt) = g.dt_ns.filter(|dt| *dt <= 0.0) {
        return Err(s.err("dt_ns", format!("must be > 0, got {dt}")));
    }
    if g.samples == 0 {
        return Err(s.err("samples", "must be >= 1"));
    }
    Ok(g)
}

fn parse_sweep(ini: &Ini, design: &DesignSpec) -> Result<SweepSettings> {
    let s = ini.section("sweep");
    let count = |key: &str, default: usize| -> Result<usize> {
        let n: usize = s.integer(key, default)?;
        if n == 0 {
            return Err(s.err(key, "must be >= 1"));
        }
        Ok(n)
    };
    let swept = design.target.swept_channel();
    let phase_count = count("phase_count", 64)?;
    let phase = Axis::new(
        &format!("phase_{swept}_rad"),
        s.number_or("phase_min_rad", 0.0)?,
        s.number_or("phase_max_rad", TAU * (phase_count as f64 - 1.0) / phase_count as f64)?,
        phase_count,
    );
    let duration = Axis::new(
        "duration_ns",
        s.number_or("duration_min_ns", 10.0)?,
        s.number_or("duration_max_ns", 73.0)?,
        count("duration_count", 64)?,
    );
    let s1 = design.target.stage1_channel();
    let [c1, c2] = design.target.stage2_channels();
    let delay_axis = |which: u8, ch: Channel| -> Result<Axis> {
        let n = count(&format!("delay{which}_count"), 64)?;
        Ok(Axis::new(
            &format!("t_{ch}{s1}_ns"),
            s.number_or(&format!("delay{which}_min_ns"), 0.0)?,
            s.number_or(&format!("delay{which}_max_ns"), 0.1 * design.tau0 * (n as f64 - 1.0))?,
            n,
        ))
    };
    let detunings_per_tau0 = match s.text("detunings_per_tau0") {
        None => vec![0.25, 0.5, 1.0],
        Some(v) => v
            .split(',')
            .map(|x| parse_number(x).ok_or_else(|| s.err("detunings_per_tau0", format!("not a number: {:?}", x.trim()))))
            .collect::<Result<_>>()?,
    };
    let scale = Axis::new(
        "scale",
        s.number_or("scale_min", 1.0)?,
        s.number_or("scale_max", 3.0)?,
        count("scale_count", 33)?,
    );
    if scale.min < 0.0 {
        return Err(s.err("scale_min", "must be >= 0"));
    }
    Ok(SweepSettings {
        phase,
        duration,
        delay1: delay_axis(1, c1)?,
        delay2: delay_axis(2, c2)?,
        detunings_per_tau0,
        scale,
        mode: s.choice("mode", DetuningMode::ScaleB, |v| v.parse().ok(), "scale_b or scale_ac")?,
        engine: match s.text("engine") {
            None => None,
            Some(v) => Some(v.to_ascii_lowercase().parse().map_err(|e: String| s.err("engine", e))?),
        },
    })
}

fn parse_output(ini: &Ini) -> Result<OutputSettings> {
    let s = ini.section("output");
    Ok(OutputSettings {
        dir: PathBuf::from(s.text("dir").unwrap_or("out")),
        hands: s.choice("hands", HandSelection::Both, HandSelection::parse, "left, right or both")?,
    })
}

impl RunSpec {
    pub fn from_ini(ini: &Ini) -> Result<Self> {
        let (molecule, closure_tol_mhz) = parse_molecule(ini)?;
        let design = parse_design(ini, &molecule)?;
        let pulses = parse_pulses(ini, &molecule, &design)?;
        Ok(RunSpec {
            grid: parse_grid(ini)?,
            sweep: parse_sweep(ini, &design)?,
            output: parse_output(ini)?,
            molecule,
            closure_tol_mhz,
            design,
            pulses,
        })
    }

    /// The configuration as fully explicit INI text. Parsing it again gives
    /// back an identical `RunSpec`.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let m = &self.molecule;
        let mut put = |line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        put("[molecule]".into());
        put(format!("name = {}", m.name));
        put(format!("omega_ab_mhz = {}", m.omega_ab_mhz));
        put(format!("omega_bc_mhz = {}", m.omega_bc_mhz));
        put(format!("omega_ac_mhz = {}", m.omega_ac_mhz));
        put(format!("mu_a_debye = {}", m.mu_a));
        put(format!("mu_b_debye = {}", m.mu_b));
        put(format!("mu_c_debye = {}", m.mu_c));
        if let Some(sp) = &m.spectator {
            put(format!("omega_abprime_mhz = {}", sp.omega_abp_mhz));
            put(format!("omega_bprimec_mhz = {}", sp.omega_bpc_mhz));
            put(format!("mu_a_prime_debye = {}", sp.mu_a_prime));
            put(format!("mu_c_prime_debye = {}", sp.mu_c_prime));
        }
        put(format!("closure_tol_mhz = {}", self.closure_tol_mhz));

        let d = &self.design;
        put("[design]".into());
        put(format!("target = {}", d.target.label()));
        put(format!("hand = {}", d.hand));
        put(format!("k = {}", d.k));
        put(format!("k_prime = {}", d.k_prime));
        put(format!("l = {}", d.l));
        put(format!("duration_ns = {}", d.tau0));
        put(format!("stage1_center_ns = {}", d.t_stage1_center));
        put(format!("stage2_center_ns = {}", d.t_stage2_center));
        put(format!("convention = {}", d.convention.name()));

        for p in self.pulses.iter() {
            put(format!("[pulse.{}]", p.channel));
            put(format!("area_param = {}", p.area_param));
            put(format!("center_ns = {}", p.center_time));
            put(format!("duration_ns = {}", p.duration));
            put(format!("carrier_mhz = {}", p.carrier_mhz));
            put(format!("phase_rad = {}", p.phase));
        }

        let g = &self.grid;
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        put("[grid]".into());
        put(format!("levels = {}", g.levels.dim()));
        put(format!("dt_ns = {}", opt(g.dt_ns)));
        put(format!("t_start_ns = {}", opt(g.t_start_ns)));
        put(format!("t_end_ns = {}", opt(g.t_end_ns)));
        put(format!("samples = {}", g.samples));

        let s = &self.sweep;
        put("[sweep]".into());
        for (prefix, unit, axis) in [
            ("phase", "_rad", &s.phase),
            ("duration", "_ns", &s.duration),
            ("delay1", "_ns", &s.delay1),
            ("delay2", "_ns", &s.delay2),
            ("scale", "", &s.scale),
        ] {
            put(format!("{prefix}_min{unit} = {}", axis.min));
            put(format!("{prefix}_max{unit} = {}", axis.max));
            put(format!("{prefix}_count = {}", axis.count));
        }
        let detunings: Vec<String> = s.detunings_per_tau0.iter().map(|x| x.to_string()).collect();
        put(format!("detunings_per_tau0 = {}", detunings.join(", ")));
        put(format!("mode = {}", s.mode.name()));
        put(format!("engine = {}", s.engine.map_or("auto", Engine::name)));

        put("[output]".into());
        put(format!("dir = {}", self.output.dir.display()));
        put(format!("hands = {}", self.output.hands.name()));
        out
    }

    pub fn snapshot_lines(&self) -> Vec<String> {
        self.snapshot().lines().map(str::to_string).collect()
    }
}

pub fn parse_config(text: &str) -> Result<RunSpec> {
    RunSpec::from_ini(&Ini::parse(text)?)
}

/// Human-readable table of the designed amplitudes and phases.
pub fn design_table(spec: &RunSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "channel  A (rad/D)       phase (rad)     carrier (MHz)  center (ns)  duration (ns)");
    for p in spec.pulses.iter() {
        let _ = writeln!(
            out,
            "{:<8} {:<15.9} {:<15.9} {:<14} {:<12.4} {}",
            p.channel, p.area_param, p.phase, p.carrier_mhz, p.center_time, p.duration
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    const PRESET: &str = "[molecule]\npreset = cyclohexylmethanol\n";

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("1.5"), Some(1.5));
        assert_eq!(parse_number("pi"), Some(PI));
        assert_eq!(parse_number("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_number("3pi/2"), Some(3.0 * PI / 2.0));
        assert_eq!(parse_number("-0.5*pi"), Some(-0.5 * PI));
        assert_eq!(parse_number("-π/4"), Some(-PI / 4.0));
        assert_eq!(parse_number("pie"), None);
        assert_eq!(parse_number("inf"), None);
    }

    #[test]
    fn preset_all_auto_matches_design() {
        let spec = parse_config(PRESET).unwrap();
        assert_eq!(spec.molecule, MoleculeSpec::cyclohexylmethanol());
        assert_eq!(spec.design.target, Target::C);
        assert_eq!(spec.design.tau0, 35.0);
        let p = &spec.pulses;
        assert!((p.a.area_param * 0.4 - PI / 4.0).abs() < 1e-15);
        assert!((p.b.area_param * 1.2 - PI * FRAC_1_SQRT_2 / 2.0).abs() < 1e-15);
        assert!((p.c.area_param * 0.8 - PI * FRAC_1_SQRT_2 / 2.0).abs() < 1e-15);
        assert_eq!((p.a.carrier_mhz, p.b.carrier_mhz, p.c.carrier_mhz), (4720.0, 7059.0, 2339.0));
        assert!((p.a.phase - PI / 2.0).abs() < 1e-15);
        assert_eq!((p.b.phase, p.c.phase), (0.0, 0.0));
        assert_eq!(p.a.center_time, 0.0);
        assert!(p.b.center_time >= 280.0 && p.b.center_time < 280.3);
        assert_eq!(spec.grid.levels, Levels::Four);
        assert_eq!(spec.output.hands, HandSelection::Both);
    }

    #[test]
    fn empty_text_is_missing_molecule() {
        let e = parse_config("").unwrap_err();
        assert_eq!(e.to_string(), "missing [molecule]");
    }

    #[test]
    fn negative_duration_cites_pulse_invariant() {
        let e = parse_config(&format!("{PRESET}[design]\nduration_ns = -1\n")).unwrap_err();
        assert_eq!(e.section.as_deref(), Some("design"));
        assert_eq!(e.key.as_deref(), Some("duration_ns"));
        assert!(e.message.contains("invalid pulse: duration must be > 0"), "{e}");

        let e = parse_config(&format!("{PRESET}[pulse.b]\nduration_ns = -1\n")).unwrap_err();
        assert_eq!(e.section.as_deref(), Some("pulse.b"));
        assert!(e.message.contains("duration must be > 0"));
    }

    #[test]
    fn unknown_keys_and_sections() {
        let e = parse_config(&format!("{PRESET}[design]\ntau = 3\n")).unwrap_err();
        assert_eq!(e.to_string(), "[design] tau: unknown key (line 4)");
        let e = parse_config(&format!("{PRESET}[pulses]\n")).unwrap_err();
        assert_eq!(e.section.as_deref(), Some("pulses"));
        let e = parse_config("mu_a_debye = 1\n").unwrap_err();
        assert!(e.message.contains("outside of any section"));
        let e = parse_config(&format!("{PRESET}[design]\nk = 1\nk = 2\n")).unwrap_err();
        assert!(e.message.contains("repeated"));
    }

    #[test]
    fn bad_values_cite_location() {
        let e = parse_config(&format!("{PRESET}[design]\ntarget = A\n")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("target"));
        let e = parse_config(&format!("{PRESET}[pulse.a]\nphase_rad = half\n")).unwrap_err();
        assert_eq!(e.to_string(), "[pulse.a] phase_rad: not a number: \"half\" (line 4)");
        let e = parse_config("[molecule]\nomega_ab_mhz = 1\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("omega_bc_mhz"));
        let e = parse_config("[molecule]\npreset = water\n").unwrap_err();
        assert!(e.message.contains("unknown preset"));
    }

    #[test]
    fn explicit_molecule_needs_closed_loop() {
        let text = "[molecule]\nomega_ab_mhz = 100\nomega_bc_mhz = 200\nomega_ac_mhz = 350\n\
                    mu_a_debye = 1\nmu_b_debye = 1\nmu_c_debye = 1\n";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.section.as_deref(), Some("molecule"));
        let ok = text.replace("350", "300");
        let spec = parse_config(&ok).unwrap();
        assert_eq!(spec.molecule.spectator, None);
        let e = parse_config(&format!("{ok}omega_abprime_mhz = 50\n")).unwrap_err();
        assert!(e.message.contains("spectator"));
    }

    #[test]
    fn overrides_and_comments() {
        let text = format!(
            "# run\n{PRESET}\n[design]\ntarget = b ; lower case is fine\nhand = right  # inline\n\
             [pulse.c]\nphase_rad = pi/3\ncarrier_mhz = auto\n[grid]\nlevels = 3\n"
        );
        let spec = parse_config(&text).unwrap();
        assert_eq!(spec.design.target, Target::B);
        assert_eq!(spec.design.hand, Handedness::Right);
        assert!((spec.pulses.c.phase - PI / 3.0).abs() < 1e-15);
        assert_eq!(spec.pulses.c.carrier_mhz, 2339.0);
        assert!((spec.pulses.b.phase + 0.5 * PI).abs() < 1e-15);
        assert_eq!(spec.grid.levels, Levels::Three);
        assert_eq!(spec.sweep.phase.name, "phase_b_rad");
        assert_eq!(spec.sweep.delay1.name, "t_ab_ns");

        let mut ini = Ini::parse(&text).unwrap();
        ini.set("grid", "levels", "4");
        ini.set("output", "hands", "left");
        let spec = RunSpec::from_ini(&ini).unwrap();
        assert_eq!(spec.grid.levels, Levels::Four);
        assert_eq!(spec.output.hands.hands(), vec![Handedness::Left]);
    }

    #[test]
    fn default_axes_hit_the_figure_points() {
        let spec = parse_config(PRESET).unwrap();
        let phi = spec.sweep.phase.values();
        assert!((phi[16] - PI / 2.0).abs() < 1e-14);
        let tau = spec.sweep.duration.values();
        assert!(tau.iter().any(|t| (t - 35.0).abs() < 1e-12));
        let delays = spec.sweep.delay1.values();
        assert!((delays[30] - 105.0).abs() < 1e-9);
        assert_eq!(spec.sweep.scale.values().len(), 33);
        assert_eq!(spec.sweep.detunings_per_tau0, vec![0.25, 0.5, 1.0]);
    }

    #[test]
    fn snapshot_round_trips() {
        let text = format!(
            "{PRESET}[design]\ntarget = B\nl = -1\nduration_ns = 27.3\n[pulse.a]\nphase_rad = 0.1\n\
             [grid]\ndt_ns = 0.001\n[sweep]\ndetunings_per_tau0 = 0, 0.3\nengine = analytic\n[output]\ndir = /tmp/x\n"
        );
        let spec = parse_config(&text).unwrap();
        let again = parse_config(&spec.snapshot()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(again.snapshot(), spec.snapshot());
    }
}
