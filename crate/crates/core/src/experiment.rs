//! Scan-level experiments: detuning spectra at several sweep rates,
//! standing-wave position scans with sin^2 fits, carrier/sideband
//! integral-excitation scans, detection sampling, and positioning precision.
//!
//! The ion sits in the coupling profile cos(k x + phi) of the intracavity
//! standing wave; `phi` parameterizes its position (the intensity pattern
//! repeats every pi). Motional channels couple through the standing-wave
//! matrix elements; on top of the per-channel quantum treatment of the
//! probed mode, the scans smear the standing-wave phase with a Gaussian of
//! variance matching the incoherent half of the thermal wavepacket spread,
//! which multiplies the cos(2 phi) modulation of every channel weight by the
//! wavepacket contrast factor. A point ion has contrast 1 and recovers the
//! bare matrix elements.

use crate::bloch::{thermal_excitation, DriveSpec};
use crate::error::ensure;
use crate::field::{integrate_swept_field, FieldTrajectory, SweepSpec};
use crate::fit::{fit_lorentzian, Sin2Fit};
use crate::motion::{thermal_distribution, ThermalDistribution, Transition};
use crate::params::CavityFigures;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Everything a scan needs besides its own grid: resonator figures, decay
/// rates, the probed motional mode, the thermal state, the standing-wave
/// contrast factor, and sweep sampling defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanContext {
    /// Spectral figures of the resonator.
    pub figures: CavityFigures,
    /// Population decay rate of the upper state, rad/s.
    pub gamma_pop: f64,
    /// Coherence decay added by the probe laser linewidth, rad/s.
    pub gamma_laser: f64,
    /// Angular secular frequency of the probed mode, rad/s.
    pub mode_omega: f64,
    /// Lamb-Dicke parameter of the probed mode along the cavity axis.
    pub eta: f64,
    /// Mean thermal occupation of the probed mode.
    pub nbar: f64,
    /// Thermal distribution truncation tolerance.
    pub tail_epsilon: f64,
    /// Standing-wave contrast factor of the full thermal wavepacket, in
    /// (0, 1]; 1 for a point ion.
    pub contrast: f64,
    /// Sweep window in half-linewidth units.
    pub window: f64,
    /// Field samples per storage time.
    pub samples_per_tau: f64,
    /// Half-span of the per-line detuning grid used inside position scans,
    /// rad/s.
    pub scan_half_span: f64,
    /// Number of detuning points used inside position scans.
    pub scan_points: usize,
}

impl ScanContext {
    fn validate(&self) -> Result<()> {
        ensure!(
            self.gamma_pop.is_finite() && self.gamma_pop >= 0.0,
            "gamma_pop",
            "must be finite and non-negative"
        );
        ensure!(
            self.gamma_laser.is_finite() && self.gamma_laser >= 0.0,
            "gamma_laser",
            "must be finite and non-negative"
        );
        ensure!(
            self.mode_omega.is_finite() && self.mode_omega > 0.0,
            "mode_omega",
            "must be a positive angular frequency"
        );
        ensure!(
            self.eta.is_finite() && self.eta >= 0.0,
            "eta",
            "must be finite and non-negative"
        );
        ensure!(
            self.nbar.is_finite() && self.nbar >= 0.0,
            "nbar",
            "must be finite and non-negative"
        );
        ensure!(
            self.contrast > 0.0 && self.contrast <= 1.0,
            "contrast",
            "must lie in (0, 1]"
        );
        ensure!(
            self.scan_half_span.is_finite() && self.scan_half_span > 0.0,
            "scan_half_span",
            "must be finite and positive"
        );
        ensure!(
            self.scan_points >= 8,
            "scan_points",
            "need at least 8 detuning points for the line fits"
        );
        Ok(())
    }

    fn sweep(&self, nu_l: f64) -> SweepSpec {
        SweepSpec {
            nu_l,
            window: self.window,
            samples_per_tau: self.samples_per_tau,
        }
    }

    fn drive(&self, omega_peak: f64, detuning: f64) -> DriveSpec {
        DriveSpec {
            omega_peak,
            motional_weight: 1.0,
            detuning,
            gamma_pop: self.gamma_pop,
            gamma_laser: self.gamma_laser,
        }
    }
}

/// Uniform detuning grid, rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningGrid {
    /// Center of the grid, rad/s.
    pub center: f64,
    /// Half-extent of the grid, rad/s.
    pub half_span: f64,
    /// Number of points (at least 2).
    pub points: usize,
}

impl DetuningGrid {
    fn validate(&self) -> Result<()> {
        ensure!(self.center.is_finite(), "center", "must be finite");
        ensure!(
            self.half_span.is_finite() && self.half_span > 0.0,
            "half_span",
            "must be finite and positive"
        );
        ensure!(self.points >= 2, "points", "need at least 2 grid points");
        Ok(())
    }

    /// The strictly increasing grid values.
    pub fn values(&self) -> Vec<f64> {
        (0..self.points)
            .map(|i| {
                self.center
                    + self.half_span * (2.0 * i as f64 / (self.points - 1) as f64 - 1.0)
            })
            .collect()
    }
}

/// Detection sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingSpec {
    /// Measurement repetitions per grid point.
    pub n_repeats: u32,
    /// Probability of classifying an outcome correctly.
    pub fidelity: f64,
    /// Base RNG seed; each grid point derives its own stream from it.
    pub seed: u64,
}

/// A detuning-resolved excitation spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Laser-minus-transition detuning grid, rad/s, strictly increasing.
    pub detunings: Vec<f64>,
    /// Model excitation probability at each detuning.
    pub probabilities: Vec<f64>,
    /// Sampled (shelved, total) counts when detection sampling ran.
    pub counts: Option<Vec<(u32, u32)>>,
    /// Run configuration snapshot for the CSV header.
    pub meta: Vec<(String, String)>,
}

impl Spectrum {
    /// Write as CSV with columns `detuning_hz,probability` plus
    /// `shelved,total` when counts exist. The detuning column converts to
    /// ordinary frequency (Hz) at this file boundary; everything in memory
    /// stays angular.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut rows = Vec::with_capacity(self.detunings.len());
        for i in 0..self.detunings.len() {
            let mut row = vec![
                self.detunings[i] / std::f64::consts::TAU,
                self.probabilities[i],
            ];
            if let Some(counts) = &self.counts {
                row.push(counts[i].0 as f64);
                row.push(counts[i].1 as f64);
            }
            rows.push(row);
        }
        let columns: &[&str] = if self.counts.is_some() {
            &["detuning_hz", "probability", "shelved", "total"]
        } else {
            &["detuning_hz", "probability"]
        };
        crate::csvio::write_table(w, &self.meta, columns, &rows)
    }
}

/// Excitation versus standing-wave phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionScan {
    /// Standing-wave phase grid, rad.
    pub phases: Vec<f64>,
    /// Peak or integral excitation at each phase.
    pub values: Vec<f64>,
    /// One-sigma uncertainty of each value (zero where exact).
    pub value_errors: Vec<f64>,
    /// Run configuration snapshot for the CSV header.
    pub meta: Vec<(String, String)>,
}

impl PositionScan {
    /// Write as CSV with columns `phi_rad,value,value_error`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let rows: Vec<Vec<f64>> = (0..self.phases.len())
            .map(|i| vec![self.phases[i], self.values[i], self.value_errors[i]])
            .collect();
        crate::csvio::write_table(w, &self.meta, &["phi_rad", "value", "value_error"], &rows)
    }
}

/// Result of [`standing_wave_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct StandingWaveScan {
    /// Fitted peak excitation versus phase.
    pub scan: PositionScan,
    /// Largest excitation probability seen anywhere in the scan.
    pub max_excitation: f64,
    /// True when `max_excitation` exceeds the weak-drive bound of 0.2 and
    /// the peak-value readout is no longer proportional to intensity.
    pub saturation_warning: bool,
}

/// Result of [`carrier_sideband_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierSidebandScan {
    /// Integral excitation on the carrier, versus phase.
    pub carrier: PositionScan,
    /// Integral excitation on the red sideband, versus phase.
    pub sideband: PositionScan,
}

/// splitmix64, used to derive one independent RNG seed per grid index.
fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-channel drive-intensity weights at phase `phi`, including the
/// contrast smear: w_n = |tw(n, n+dn)|^2 (1 + s D cos 2 phi) / 2 with
/// s = +1 for even and -1 for odd phonon-number change.
fn smeared_weights(
    dist: &ThermalDistribution,
    transition: Transition,
    eta: f64,
    phi: f64,
    contrast: f64,
) -> Result<Vec<f64>> {
    let dn = transition.phonon_change();
    let parity = if dn % 2 == 0 { 1.0 } else { -1.0 };
    let fringe = 0.5 * (1.0 + parity * contrast * (2.0 * phi).cos());
    let mut weights = Vec::with_capacity(dist.probabilities.len());
    for n in 0..dist.probabilities.len() {
        let target = n as i64 + dn as i64;
        if target < 0 {
            weights.push(0.0);
            continue;
        }
        let m = crate::motion::tw_matrix_element(n as u32, target as u32, eta)?;
        weights.push(m.norm_sqr() * fringe);
    }
    Ok(weights)
}

/// Excitation probabilities over a detuning grid for one line, reusing an
/// already integrated field and thermal state.
fn line_values(
    ctx: &ScanContext,
    field: &FieldTrajectory,
    dist: &ThermalDistribution,
    weights: &[f64],
    transition: Transition,
    omega_peak: f64,
    detunings: &[f64],
) -> Result<Vec<f64>> {
    let dn = transition.phonon_change() as f64;
    crate::exec::try_map_indexed(detunings.len(), |i| {
        let drive = ctx.drive(omega_peak, detunings[i] - dn * ctx.mode_omega);
        thermal_excitation(&drive, field, dist, weights).map_err(|e| match e {
            Error::Convergence(msg) => Error::Convergence(format!(
                "at detuning {} rad/s: {msg}",
                detunings[i]
            )),
            other => other,
        })
    })
}

fn base_meta(ctx: &ScanContext, nu_l: f64, omega_peak: f64) -> Vec<(String, String)> {
    vec![
        ("nu_l".into(), nu_l.to_string()),
        ("omega_peak_rad_s".into(), omega_peak.to_string()),
        ("mode_omega_rad_s".into(), ctx.mode_omega.to_string()),
        ("eta".into(), ctx.eta.to_string()),
        ("nbar".into(), ctx.nbar.to_string()),
        ("contrast".into(), ctx.contrast.to_string()),
        ("window".into(), ctx.window.to_string()),
        ("samples_per_tau".into(), ctx.samples_per_tau.to_string()),
    ]
}

/// Simulate one excitation spectrum: the field is integrated once (it does
/// not depend on the detuning), then each grid point runs the thermal Bloch
/// average; optional detection sampling draws seeded per-point counts.
pub fn simulate_spectrum(
    ctx: &ScanContext,
    transition: Transition,
    nu_l: f64,
    omega_peak: f64,
    phi: f64,
    grid: &DetuningGrid,
    sampling: Option<&SamplingSpec>,
) -> Result<Spectrum> {
    ctx.validate()?;
    grid.validate()?;
    ensure!(
        omega_peak.is_finite() && omega_peak >= 0.0,
        "omega_peak",
        "must be finite and non-negative"
    );
    ensure!(phi.is_finite(), "phi", "must be finite");
    let field = integrate_swept_field(&ctx.figures, &ctx.sweep(nu_l))?;
    let dist = thermal_distribution(ctx.nbar, ctx.tail_epsilon)?;
    let weights = smeared_weights(&dist, transition, ctx.eta, phi, ctx.contrast)?;
    let detunings = grid.values();
    let probabilities = line_values(ctx, &field, &dist, &weights, transition, omega_peak, &detunings)?;

    let counts = match sampling {
        None => None,
        Some(s) => {
            let drawn = crate::exec::try_map_indexed(probabilities.len(), |i| {
                let d = sample_detection(
                    probabilities[i],
                    s.n_repeats,
                    s.fidelity,
                    mix_seed(s.seed, i as u64),
                )?;
                Ok((d.shelved, d.total))
            })?;
            Some(drawn)
        }
    };

    let mut meta = base_meta(ctx, nu_l, omega_peak);
    meta.push(("transition".into(), transition.to_string()));
    meta.push(("phi_rad".into(), phi.to_string()));
    if let Some(s) = sampling {
        meta.push(("n_repeats".into(), s.n_repeats.to_string()));
        meta.push(("fidelity".into(), s.fidelity.to_string()));
        meta.push(("seed".into(), s.seed.to_string()));
    }

    Ok(Spectrum {
        detunings,
        probabilities,
        counts,
        meta,
    })
}

/// Scan the standing-wave phase on the carrier: at each phase, simulate a
/// spectrum over the context's scan grid, fit a Lorentzian, and record the
/// fitted peak height. Excitation above 0.2 anywhere raises the saturation
/// flag (the peak readout is then no longer proportional to intensity).
pub fn standing_wave_scan(
    ctx: &ScanContext,
    nu_l: f64,
    omega_peak: f64,
    phi_grid: &[f64],
) -> Result<StandingWaveScan> {
    ctx.validate()?;
    ensure!(
        omega_peak.is_finite() && omega_peak >= 0.0,
        "omega_peak",
        "must be finite and non-negative"
    );
    ensure!(!phi_grid.is_empty(), "phi_grid", "must not be empty");
    ensure!(
        phi_grid.iter().all(|p| p.is_finite()),
        "phi_grid",
        "all phases must be finite"
    );
    let field = integrate_swept_field(&ctx.figures, &ctx.sweep(nu_l))?;
    let dist = thermal_distribution(ctx.nbar, ctx.tail_epsilon)?;
    let grid = DetuningGrid {
        center: 0.0,
        half_span: ctx.scan_half_span,
        points: ctx.scan_points,
    };
    grid.validate()?;
    let detunings = grid.values();

    let per_phi = crate::exec::try_map_indexed(phi_grid.len(), |j| {
        let weights = smeared_weights(&dist, Transition::Carrier, ctx.eta, phi_grid[j], ctx.contrast)?;
        line_values(
            ctx,
            &field,
            &dist,
            &weights,
            Transition::Carrier,
            omega_peak,
            &detunings,
        )
    })?;

    let mut values = Vec::with_capacity(phi_grid.len());
    let mut value_errors = Vec::with_capacity(phi_grid.len());
    let mut max_excitation = 0.0f64;
    for (j, probs) in per_phi.iter().enumerate() {
        max_excitation = probs.iter().cloned().fold(max_excitation, f64::max);
        let fit = fit_lorentzian(&detunings, probs).map_err(|e| {
            Error::Fit(format!("at phi = {} rad: {e}", phi_grid[j]))
        })?;
        if !fit.converged {
            return Err(Error::Fit(format!(
                "Lorentzian fit did not converge at phi = {} rad",
                phi_grid[j]
            )));
        }
        values.push(fit.params.peak);
        value_errors.push(fit.param_errors.peak);
    }

    let mut meta = base_meta(ctx, nu_l, omega_peak);
    meta.push(("transition".into(), Transition::Carrier.to_string()));
    meta.push(("scan".into(), "standing_wave_peak".into()));

    Ok(StandingWaveScan {
        scan: PositionScan {
            phases: phi_grid.to_vec(),
            values,
            value_errors,
            meta,
        },
        max_excitation,
        saturation_warning: max_excitation > 0.2,
    })
}

/// Scan the standing-wave phase on the carrier and the red sideband and
/// record the integral excitation (trapezoidal area of each spectrum). The
/// carrier grid sits at detuning 0, the sideband grid at -mode_omega.
pub fn carrier_sideband_scan(
    ctx: &ScanContext,
    nu_l: f64,
    omega_carrier: f64,
    omega_sideband: f64,
    phi_grid: &[f64],
) -> Result<CarrierSidebandScan> {
    ctx.validate()?;
    ensure!(
        omega_carrier.is_finite() && omega_carrier >= 0.0,
        "omega_carrier",
        "must be finite and non-negative"
    );
    ensure!(
        omega_sideband.is_finite() && omega_sideband >= 0.0,
        "omega_sideband",
        "must be finite and non-negative"
    );
    ensure!(!phi_grid.is_empty(), "phi_grid", "must not be empty");
    ensure!(
        phi_grid.iter().all(|p| p.is_finite()),
        "phi_grid",
        "all phases must be finite"
    );
    let field = integrate_swept_field(&ctx.figures, &ctx.sweep(nu_l))?;
    let dist = thermal_distribution(ctx.nbar, ctx.tail_epsilon)?;

    let mut curves = Vec::with_capacity(2);
    for &(transition, omega_peak, center) in &[
        (Transition::Carrier, omega_carrier, 0.0),
        (Transition::RedSideband, omega_sideband, -ctx.mode_omega),
    ] {
        let grid = DetuningGrid {
            center,
            half_span: ctx.scan_half_span,
            points: ctx.scan_points,
        };
        grid.validate()?;
        let detunings = grid.values();
        let per_phi = crate::exec::try_map_indexed(phi_grid.len(), |j| {
            let weights = smeared_weights(&dist, transition, ctx.eta, phi_grid[j], ctx.contrast)?;
            let probs = line_values(ctx, &field, &dist, &weights, transition, omega_peak, &detunings)?;
            Ok(trapezoid(&detunings, &probs))
        })?;
        let mut meta = base_meta(ctx, nu_l, omega_peak);
        meta.push(("transition".into(), transition.to_string()));
        meta.push(("scan".into(), "integral_excitation".into()));
        curves.push(PositionScan {
            phases: phi_grid.to_vec(),
            values: per_phi,
            value_errors: vec![0.0; phi_grid.len()],
            meta,
        });
    }
    let sideband = curves.pop().expect("two curves were pushed");
    let carrier = curves.pop().expect("two curves were pushed");
    Ok(CarrierSidebandScan { carrier, sideband })
}

/// Trapezoidal integral of `y` over `x`.
fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(x.len().saturating_sub(1));
    for i in 1..x.len() {
        terms.push(0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]));
    }
    crate::exec::compensated_sum(&terms)
}

/// One sampled detection run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSample {
    /// Number of repetitions classified as shelved.
    pub shelved: u32,
    /// Total repetitions.
    pub total: u32,
    /// Raw estimate shelved / total.
    pub estimated_p: f64,
    /// Binomial standard error sqrt(p_hat (1 - p_hat) / n).
    pub std_error: f64,
}

/// Draw `n_repeats` Bernoulli detection outcomes at true excitation `p`
/// with symmetric misclassification probability `1 - fidelity`, fully
/// determined by `seed`.
pub fn sample_detection(p: f64, n_repeats: u32, fidelity: f64, seed: u64) -> Result<DetectionSample> {
    ensure!(
        p.is_finite() && (0.0..=1.0).contains(&p),
        "p",
        "must lie in [0, 1]"
    );
    ensure!(
        fidelity.is_finite() && fidelity > 0.5 && fidelity <= 1.0,
        "fidelity",
        "must lie in (0.5, 1]"
    );
    ensure!(n_repeats >= 1, "n_repeats", "must be at least 1");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let flip_p = 1.0 - fidelity;
    let mut shelved = 0u32;
    for _ in 0..n_repeats {
        let excited = rng.random_bool(p);
        let flipped = rng.random_bool(flip_p);
        if excited != flipped {
            shelved += 1;
        }
    }
    let p_hat = shelved as f64 / n_repeats as f64;
    Ok(DetectionSample {
        shelved,
        total: n_repeats,
        estimated_p: p_hat,
        std_error: (p_hat * (1.0 - p_hat) / n_repeats as f64).sqrt(),
    })
}

/// Invert the symmetric misclassification map p_hat = p f + (1-p)(1-f):
/// p = (p_hat - (1 - f)) / (2 f - 1), clamped to [0, 1].
pub fn fidelity_corrected(p_hat: f64, fidelity: f64) -> Result<f64> {
    ensure!(
        p_hat.is_finite() && (0.0..=1.0).contains(&p_hat),
        "p_hat",
        "must lie in [0, 1]"
    );
    ensure!(
        fidelity.is_finite() && fidelity > 0.5 && fidelity <= 1.0,
        "fidelity",
        "must lie in (0.5, 1]"
    );
    Ok(((p_hat - (1.0 - fidelity)) / (2.0 * fidelity - 1.0)).clamp(0.0, 1.0))
}

/// One-sigma position uncertainty from a sin^2 fringe fit at phase `phi`:
/// Delta x = sigma_p / |dP/dx| with P(x) = offset + amplitude sin^2(k x +
/// phase) and k = 2 pi / lambda (one intensity period per lambda / 2). At
/// extrema, where the slope vanishes, the second-order form
/// sqrt(2 sigma_p / |d2P/dx2|) is used instead.
pub fn positioning_precision(
    fit: &Sin2Fit,
    sigma_p: f64,
    phi: f64,
    wavelength: f64,
) -> Result<f64> {
    ensure!(
        sigma_p.is_finite() && sigma_p >= 0.0,
        "sigma_p",
        "must be finite and non-negative"
    );
    ensure!(phi.is_finite(), "phi", "must be finite");
    ensure!(
        wavelength.is_finite() && wavelength > 0.0,
        "wavelength",
        "must be a positive wavelength in meters"
    );
    ensure!(fit.converged, "fit", "fit did not converge");
    let amp = fit.params.amplitude;
    if !(amp > 0.0) {
        return Err(Error::invalid(
            "fit",
            "zero-amplitude fringe carries no positional information",
        ));
    }
    if sigma_p == 0.0 {
        return Ok(0.0);
    }
    let k = std::f64::consts::TAU / wavelength;
    let arg = 2.0 * (phi + fit.params.phase);
    let slope = amp * k * arg.sin().abs();
    let curvature = 2.0 * amp * k * k * arg.cos().abs();
    // slope term wins except in a vanishing neighborhood of the extrema
    if slope * slope > 1e-18 * curvature * sigma_p {
        Ok(sigma_p / slope)
    } else if curvature > 0.0 {
        Ok((2.0 * sigma_p / curvature).sqrt())
    } else {
        Err(Error::invalid(
            "phi",
            "both the slope and the curvature vanish at this phase",
        ))
    }
}

/// Map a positioning piezo voltage to standing-wave phase:
/// `phase_offset + pi * volts / volts_per_period` (one intensity period per
/// `volts_per_period`).
pub fn phase_from_volts(volts: f64, volts_per_period: f64, phase_offset: f64) -> Result<f64> {
    ensure!(
        volts_per_period.is_finite() && volts_per_period != 0.0,
        "volts_per_period",
        "must be finite and non-zero"
    );
    ensure!(volts.is_finite(), "volts", "must be finite");
    ensure!(phase_offset.is_finite(), "phase_offset", "must be finite");
    Ok(phase_offset + std::f64::consts::PI * volts / volts_per_period)
}

/// Inverse of [`phase_from_volts`].
pub fn volts_from_phase(phi: f64, volts_per_period: f64, phase_offset: f64) -> Result<f64> {
    ensure!(
        volts_per_period.is_finite() && volts_per_period != 0.0,
        "volts_per_period",
        "must be finite and non-zero"
    );
    ensure!(phi.is_finite(), "phi", "must be finite");
    ensure!(phase_offset.is_finite(), "phase_offset", "must be finite");
    Ok((phi - phase_offset) * volts_per_period / std::f64::consts::PI)
}
