//! Two-level optical Bloch equations driven by the transient intracavity
//! field, and thermal averages over motional channels.
//!
//! With Omega(t) = omega_peak * sqrt(motional_weight) * E(t):
//!
//! d rho_ee / dt = -gamma_pop rho_ee + Im(conj(Omega) rho_eg)
//! d rho_eg / dt = (i detuning - gamma_perp) rho_eg + i/2 Omega (1 - 2 rho_ee)
//!
//! where gamma_perp = gamma_pop / 2 + gamma_laser. The integrator steps
//! pairs of trajectory samples with classical RK4, so the half-step field
//! values are exact trajectory samples and no field interpolation happens.

use crate::error::ensure;
use crate::field::FieldTrajectory;
use crate::motion::{ThermalDistribution, Transition};
use crate::{C64, Error, Result};

/// Upper-state population and optical coherence of the two-level system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    /// Upper-state population rho_ee.
    pub rho_ee: f64,
    /// Optical coherence rho_eg.
    pub coherence: C64,
}

impl BlochState {
    /// Both levels empty of excitation: the ground state.
    pub fn ground() -> Self {
        BlochState {
            rho_ee: 0.0,
            coherence: C64::new(0.0, 0.0),
        }
    }
}

/// Drive and decay parameters for one Bloch integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    /// Peak Rabi frequency at unit field and unit motional weight, rad/s.
    pub omega_peak: f64,
    /// Squared motional matrix element scaling the drive intensity.
    pub motional_weight: f64,
    /// Laser-minus-transition detuning of this channel, rad/s.
    pub detuning: f64,
    /// Population decay rate of the upper state, rad/s.
    pub gamma_pop: f64,
    /// Extra coherence decay from the laser linewidth, rad/s.
    pub gamma_laser: f64,
}

impl DriveSpec {
    fn validate(&self) -> Result<()> {
        ensure!(
            self.omega_peak.is_finite() && self.omega_peak >= 0.0,
            "omega_peak",
            "must be finite and non-negative"
        );
        ensure!(
            self.motional_weight.is_finite() && self.motional_weight >= 0.0,
            "motional_weight",
            "must be finite and non-negative"
        );
        ensure!(self.detuning.is_finite(), "detuning", "must be finite");
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
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Rhs {
    gamma: f64,
    gamma_perp: f64,
    i_detuning: C64,
}

impl Rhs {
    #[inline]
    fn eval(&self, omega: C64, ee: f64, eg: C64) -> (f64, C64) {
        let dee = -self.gamma * ee + (omega.conj() * eg).im;
        let deg = (self.i_detuning - self.gamma_perp) * eg
            + C64::new(0.0, 0.5) * omega * (1.0 - 2.0 * ee);
        (dee, deg)
    }
}

/// Tolerance for the physical-region runtime guard.
const POSITIVITY_TOL: f64 = 1e-9;

#[inline]
fn check_physical(ee: f64, eg: C64, t: f64) -> Result<()> {
    let excess = (-ee)
        .max(ee - 1.0)
        .max(eg.norm_sqr() - ee * (1.0 - ee).max(0.0));
    if excess > POSITIVITY_TOL || !ee.is_finite() || !eg.re.is_finite() || !eg.im.is_finite() {
        return Err(Error::Positivity {
            t,
            excess: if excess.is_finite() { excess } else { f64::INFINITY },
        });
    }
    Ok(())
}

/// Advance the state over one pair of trajectory intervals (RK4 with the
/// midpoint field taken from the middle sample).
#[inline]
fn pair_step(rhs: &Rhs, scale: C64, h2: f64, e: [C64; 3], ee: f64, eg: C64) -> (f64, C64) {
    let o0 = scale * e[0];
    let om = scale * e[1];
    let o1 = scale * e[2];
    let (k1e, k1g) = rhs.eval(o0, ee, eg);
    let (k2e, k2g) = rhs.eval(om, ee + h2 / 2.0 * k1e, eg + k1g * (h2 / 2.0));
    let (k3e, k3g) = rhs.eval(om, ee + h2 / 2.0 * k2e, eg + k2g * (h2 / 2.0));
    let (k4e, k4g) = rhs.eval(o1, ee + h2 * k3e, eg + k3g * h2);
    (
        ee + h2 / 6.0 * (k1e + 2.0 * (k2e + k3e) + k4e),
        eg + (k1g + (k2g + k3g) * 2.0 + k4g) * (h2 / 6.0),
    )
}

fn integrate_impl(
    drive: &DriveSpec,
    field: &FieldTrajectory,
    mut record: impl FnMut(f64, BlochState),
) -> Result<BlochState> {
    drive.validate()?;
    let rhs = Rhs {
        gamma: drive.gamma_pop,
        gamma_perp: drive.gamma_pop / 2.0 + drive.gamma_laser,
        i_detuning: C64::new(0.0, drive.detuning),
    };
    let scale = C64::new(drive.omega_peak * drive.motional_weight.sqrt(), 0.0);
    let h2 = 2.0 * field.dt();
    let samples = field.amplitudes();
    let mut ee = 0.0;
    let mut eg = C64::new(0.0, 0.0);
    record(field.t_start(), BlochState::ground());
    let mut i = 0;
    while i + 2 < samples.len() {
        let window = [samples[i], samples[i + 1], samples[i + 2]];
        let (nee, neg) = pair_step(&rhs, scale, h2, window, ee, eg);
        ee = nee;
        eg = neg;
        let t = field.time(i + 2);
        check_physical(ee, eg, t)?;
        record(t, BlochState { rho_ee: ee, coherence: eg });
        i += 2;
    }
    Ok(BlochState { rho_ee: ee, coherence: eg })
}

/// Integrate the Bloch equations across the whole field trajectory from the
/// ground state and return the final state.
pub fn integrate_bloch(drive: &DriveSpec, field: &FieldTrajectory) -> Result<BlochState> {
    integrate_impl(drive, field, |_, _| {})
}

/// As [`integrate_bloch`], additionally recording the state at every pair
/// boundary (every second field sample), starting with the initial state.
pub fn integrate_bloch_trajectory(
    drive: &DriveSpec,
    field: &FieldTrajectory,
) -> Result<Vec<(f64, BlochState)>> {
    let mut out = Vec::with_capacity(field.len() / 2 + 1);
    integrate_impl(drive, field, |t, s| out.push((t, s)))?;
    Ok(out)
}

/// Fraction of channels' peak weight below which a channel is skipped.
const CHANNEL_SKIP: f64 = 1e-12;

/// Thermal average of the final upper-state population over motional
/// channels with externally supplied drive-intensity weights: channel `n`
/// runs with `motional_weight = weights[n]` and contributes
/// `p_n * rho_ee^(n)`. Channels lighter than 1e-12 of the heaviest weight
/// are skipped (an undriven channel stays in the ground state).
pub fn thermal_excitation(
    drive: &DriveSpec,
    field: &FieldTrajectory,
    dist: &ThermalDistribution,
    weights: &[f64],
) -> Result<f64> {
    drive.validate()?;
    ensure!(
        weights.len() == dist.probabilities.len(),
        "weights",
        format!(
            "need one weight per thermal channel ({} != {})",
            weights.len(),
            dist.probabilities.len()
        )
    );
    for (n, &w) in weights.iter().enumerate() {
        ensure!(
            w.is_finite() && w >= 0.0,
            "weights",
            format!("channel {n}: must be finite and non-negative")
        );
    }
    let w_max = weights.iter().cloned().fold(0.0, f64::max);
    if w_max == 0.0 {
        return Ok(0.0);
    }
    let threshold = CHANNEL_SKIP * w_max;
    let per_channel = crate::exec::try_map_indexed(weights.len(), |n| {
        if weights[n] < threshold {
            return Ok(0.0);
        }
        let channel = DriveSpec {
            motional_weight: drive.motional_weight * weights[n],
            ..*drive
        };
        Ok(integrate_bloch(&channel, field)?.rho_ee)
    })?;
    Ok(crate::exec::compensated_dot(&dist.probabilities, &per_channel))
}

/// Thermally averaged excitation probability on one spectral line at
/// standing-wave phase `phi`: channel `n` couples `|g,n> -> |e,n+dn>` with
/// drive intensity weight |sw(n, n+dn, eta, phi)|^2. `drive.detuning` is
/// the detuning from the *channel* resonance; for sideband lines the caller
/// has already absorbed the -dn*omega_mode offset.
pub fn excitation_probability(
    drive: &DriveSpec,
    field: &FieldTrajectory,
    dist: &ThermalDistribution,
    transition: Transition,
    eta: f64,
    phi: f64,
) -> Result<f64> {
    let dn = transition.phonon_change();
    let mut weights = Vec::with_capacity(dist.probabilities.len());
    for n in 0..dist.probabilities.len() {
        let target = n as i64 + dn as i64;
        let w = if target < 0 {
            0.0
        } else {
            let el = crate::motion::sw_matrix_element(n as u32, target as u32, eta, phi)?;
            el * el
        };
        weights.push(w);
    }
    thermal_excitation(drive, field, dist, &weights)
}
