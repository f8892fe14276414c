//! Flat `key = value` run configuration with paper-scale defaults.
//!
//! Values are entered in ordinary (cycles) frequency where a unit applies;
//! frequency keys accept an optional `hz`, `khz`, or `mhz` suffix on the
//! value. All conversions to the angular quantities used by the simulation
//! crate happen here and nowhere else.

use std::f64::consts::{PI, TAU};
use sweptcav::experiment::ScanContext;
use sweptcav::motion::{lamb_dicke, MotionalMode};
use sweptcav::params::{
    contrast_factor, derive_cavity_figures, wavepacket_extension, CavityConfig, CavityFigures,
    TrapMotionConfig,
};
use sweptcav::{Error, Result};

/// Every tunable of a run, in file units (ordinary frequencies, meters,
/// atomic mass units).
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub finesse: f64,
    pub length: f64,
    pub waist: f64,
    pub mirror_curvature: f64,
    pub wavelength: f64,
    pub coupling_hz: f64,
    pub natural_linewidth_hz: f64,
    pub laser_linewidth_hz: f64,
    pub trap_freq_hz: [f64; 3],
    pub trap_nbar: [f64; 3],
    pub mass_amu: f64,
    pub trap_cos: [f64; 3],
    pub window: f64,
    pub samples_per_tau: f64,
    pub tail_epsilon: f64,
    pub scan_half_span_hz: f64,
    pub scan_points: usize,
    /// Index of the probed motional mode (0 = x, 1 = y, 2 = z).
    pub scan_mode: usize,
    pub n_repeats: u32,
    pub fidelity: f64,
    pub seed: u64,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            finesse: 35_000.0,
            length: 0.021,
            waist: 54e-6,
            mirror_curvature: 0.025,
            wavelength: 729e-9,
            coupling_hz: 134.0,
            natural_linewidth_hz: 0.17,
            laser_linewidth_hz: 6.0e3,
            trap_freq_hz: [2.9e6, 3.9e6, 7.4e6],
            trap_nbar: [22.9, 4.3, 4.9],
            mass_amu: 40.0,
            trap_cos: [0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2],
            window: 20.0,
            samples_per_tau: 200.0,
            tail_epsilon: 1e-6,
            scan_half_span_hz: 45.0e3,
            scan_points: 15,
            scan_mode: 2,
            n_repeats: 100,
            fidelity: 0.99,
            seed: 1,
            output_dir: "out".into(),
        }
    }
}

/// Keys whose value may carry an `hz`/`khz`/`mhz` suffix.
const FREQUENCY_KEYS: &[&str] = &[
    "atom.coupling",
    "atom.natural_linewidth",
    "laser.linewidth",
    "trap.freq_x",
    "trap.freq_y",
    "trap.freq_z",
    "scan.half_span",
];

fn parse_number(key: &str, raw: &str, line: usize) -> Result<f64> {
    let lower = raw.to_ascii_lowercase();
    let (body, factor) = if let Some(b) = lower.strip_suffix("mhz") {
        (b.trim_end(), 1e6)
    } else if let Some(b) = lower.strip_suffix("khz") {
        (b.trim_end(), 1e3)
    } else if let Some(b) = lower.strip_suffix("hz") {
        (b.trim_end(), 1.0)
    } else {
        (lower.as_str(), 1.0)
    };
    if factor != 1.0 || body.len() != lower.len() {
        if !FREQUENCY_KEYS.contains(&key) {
            return Err(Error::invalid(
                key,
                format!("frequency suffix is not allowed on this key (line {line})"),
            ));
        }
    }
    body.parse::<f64>()
        .map(|v| v * factor)
        .map_err(|_| Error::invalid(key, format!("cannot parse '{raw}' as a number (line {line})")))
}

fn parse_integer(key: &str, raw: &str, line: usize) -> Result<u64> {
    raw.parse::<u64>().map_err(|_| {
        Error::invalid(key, format!("cannot parse '{raw}' as an integer (line {line})"))
    })
}

/// Parse a configuration file body. Unknown keys, duplicate keys, and
/// malformed values are errors naming the key and the line. An empty body
/// yields the defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw_line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((key_part, value_part)) = body.split_once('=') else {
            return Err(Error::invalid(
                "config",
                format!("line {line} is not a 'key = value' pair: '{body}'"),
            ));
        };
        let key = key_part.trim();
        let value = value_part.trim();
        if value.is_empty() {
            return Err(Error::invalid(key, format!("empty value (line {line})")));
        }
        if seen.iter().any(|k| k == key) {
            return Err(Error::invalid(
                key,
                format!("duplicate key (line {line})"),
            ));
        }
        seen.push(key.to_string());

        match key {
            "cavity.finesse" => cfg.finesse = parse_number(key, value, line)?,
            "cavity.length" => cfg.length = parse_number(key, value, line)?,
            "cavity.waist" => cfg.waist = parse_number(key, value, line)?,
            "cavity.mirror_curvature" => cfg.mirror_curvature = parse_number(key, value, line)?,
            "cavity.wavelength" => cfg.wavelength = parse_number(key, value, line)?,
            "atom.coupling" => cfg.coupling_hz = parse_number(key, value, line)?,
            "atom.natural_linewidth" => cfg.natural_linewidth_hz = parse_number(key, value, line)?,
            "laser.linewidth" => cfg.laser_linewidth_hz = parse_number(key, value, line)?,
            "trap.freq_x" => cfg.trap_freq_hz[0] = parse_number(key, value, line)?,
            "trap.freq_y" => cfg.trap_freq_hz[1] = parse_number(key, value, line)?,
            "trap.freq_z" => cfg.trap_freq_hz[2] = parse_number(key, value, line)?,
            "trap.nbar_x" => cfg.trap_nbar[0] = parse_number(key, value, line)?,
            "trap.nbar_y" => cfg.trap_nbar[1] = parse_number(key, value, line)?,
            "trap.nbar_z" => cfg.trap_nbar[2] = parse_number(key, value, line)?,
            "trap.mass_amu" => cfg.mass_amu = parse_number(key, value, line)?,
            "trap.cos_x" => cfg.trap_cos[0] = parse_number(key, value, line)?,
            "trap.cos_y" => cfg.trap_cos[1] = parse_number(key, value, line)?,
            "trap.cos_z" => cfg.trap_cos[2] = parse_number(key, value, line)?,
            "sweep.window" => cfg.window = parse_number(key, value, line)?,
            "sweep.samples_per_tau" => cfg.samples_per_tau = parse_number(key, value, line)?,
            "motion.tail_epsilon" => cfg.tail_epsilon = parse_number(key, value, line)?,
            "scan.half_span" => cfg.scan_half_span_hz = parse_number(key, value, line)?,
            "scan.points" => cfg.scan_points = parse_integer(key, value, line)? as usize,
            "scan.mode" => {
                cfg.scan_mode = match value {
                    "x" => 0,
                    "y" => 1,
                    "z" => 2,
                    other => {
                        return Err(Error::invalid(
                            key,
                            format!("expected x, y, or z, got '{other}' (line {line})"),
                        ))
                    }
                }
            }
            "detect.n_repeats" => cfg.n_repeats = parse_integer(key, value, line)? as u32,
            "detect.fidelity" => cfg.fidelity = parse_number(key, value, line)?,
            "detect.seed" => cfg.seed = parse_integer(key, value, line)?,
            "output.dir" => cfg.output_dir = value.to_string(),
            other => {
                return Err(Error::invalid(
                    other,
                    format!("unknown key (line {line})"),
                ))
            }
        }
    }
    Ok(cfg)
}

impl RunConfig {
    /// The effective configuration as `(key, value)` pairs in stable table
    /// order, for file headers.
    pub fn snapshot(&self) -> Vec<(String, String)> {
        let mode = ["x", "y", "z"][self.scan_mode.min(2)];
        let pairs: Vec<(&str, String)> = vec![
            ("cavity.finesse", self.finesse.to_string()),
            ("cavity.length", self.length.to_string()),
            ("cavity.waist", self.waist.to_string()),
            ("cavity.mirror_curvature", self.mirror_curvature.to_string()),
            ("cavity.wavelength", self.wavelength.to_string()),
            ("atom.coupling", self.coupling_hz.to_string()),
            ("atom.natural_linewidth", self.natural_linewidth_hz.to_string()),
            ("laser.linewidth", self.laser_linewidth_hz.to_string()),
            ("trap.freq_x", self.trap_freq_hz[0].to_string()),
            ("trap.freq_y", self.trap_freq_hz[1].to_string()),
            ("trap.freq_z", self.trap_freq_hz[2].to_string()),
            ("trap.nbar_x", self.trap_nbar[0].to_string()),
            ("trap.nbar_y", self.trap_nbar[1].to_string()),
            ("trap.nbar_z", self.trap_nbar[2].to_string()),
            ("trap.mass_amu", self.mass_amu.to_string()),
            ("trap.cos_x", self.trap_cos[0].to_string()),
            ("trap.cos_y", self.trap_cos[1].to_string()),
            ("trap.cos_z", self.trap_cos[2].to_string()),
            ("sweep.window", self.window.to_string()),
            ("sweep.samples_per_tau", self.samples_per_tau.to_string()),
            ("motion.tail_epsilon", self.tail_epsilon.to_string()),
            ("scan.half_span", self.scan_half_span_hz.to_string()),
            ("scan.points", self.scan_points.to_string()),
            ("scan.mode", mode.to_string()),
            ("detect.n_repeats", self.n_repeats.to_string()),
            ("detect.fidelity", self.fidelity.to_string()),
            ("detect.seed", self.seed.to_string()),
            ("output.dir", self.output_dir.clone()),
        ];
        pairs
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    /// Cavity geometry in simulation units.
    pub fn cavity(&self) -> CavityConfig {
        CavityConfig {
            finesse: self.finesse,
            length: self.length,
            waist: self.waist,
            mirror_curvature: self.mirror_curvature,
            wavelength: self.wavelength,
        }
    }

    /// Derived spectral figures of the resonator.
    pub fn figures(&self) -> Result<CavityFigures> {
        derive_cavity_figures(&self.cavity())
    }

    /// Trap and motional state in simulation units (angular frequencies).
    pub fn trap(&self) -> TrapMotionConfig {
        TrapMotionConfig {
            omega: self.trap_freq_hz.map(|f| TAU * f),
            nbar: self.trap_nbar,
            mass: self.mass_amu * sweptcav::constants::ATOMIC_MASS,
            cosine: self.trap_cos,
        }
    }

    /// Population decay rate of the upper state, rad/s.
    pub fn gamma_pop(&self) -> f64 {
        TAU * self.natural_linewidth_hz
    }

    /// Laser-linewidth coherence decay, rad/s (half the angular FWHM).
    pub fn gamma_laser(&self) -> f64 {
        PI * self.laser_linewidth_hz
    }

    /// Vacuum coupling rate, rad/s.
    pub fn coupling(&self) -> f64 {
        TAU * self.coupling_hz
    }

    /// Assemble the scan context: probed-mode Lamb-Dicke factor, thermal
    /// occupation, and the full-wavepacket standing-wave contrast.
    pub fn scan_context(&self) -> Result<ScanContext> {
        if self.scan_mode > 2 {
            return Err(Error::invalid("scan.mode", "mode index out of range"));
        }
        let trap = self.trap();
        trap.validate()?;
        let m = self.scan_mode;
        let eta = lamb_dicke(
            &MotionalMode {
                omega: trap.omega[m],
                mass: trap.mass,
            },
            self.wavelength,
            trap.cosine[m],
        )?;
        let a_c = wavepacket_extension(&trap)?;
        Ok(ScanContext {
            figures: self.figures()?,
            gamma_pop: self.gamma_pop(),
            gamma_laser: self.gamma_laser(),
            mode_omega: trap.omega[m],
            eta,
            nbar: trap.nbar[m],
            tail_epsilon: self.tail_epsilon,
            contrast: contrast_factor(a_c, self.wavelength)?,
            window: self.window,
            samples_per_tau: self.samples_per_tau,
            scan_half_span: TAU * self.scan_half_span_hz,
            scan_points: self.scan_points,
        })
    }
}
