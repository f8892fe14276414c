//! Transient intracavity field while the resonator is swept across the
//! (fixed) probe laser: dE/dt = (i Delta_c(t) - kappa) E + kappa with
//! Delta_c(t) = R t, in units of the stationary resonant amplitude.

use crate::error::ensure;
use crate::params::CavityFigures;
use crate::{C64, Error, Result};

/// Stationary intracavity amplitude at constant laser-minus-cavity detuning
/// `delta_c`: kappa / (kappa - i delta_c), normalized to 1 on resonance.
pub fn steady_state_field(kappa: f64, delta_c: f64) -> Result<C64> {
    ensure!(
        kappa.is_finite() && kappa > 0.0,
        "kappa",
        "must be finite and positive"
    );
    ensure!(delta_c.is_finite(), "delta_c", "must be finite");
    Ok(C64::new(kappa, 0.0) / C64::new(kappa, -delta_c))
}

/// How to sweep the cavity across the laser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    /// Normalized sweep rate; sign selects the sweep direction.
    pub nu_l: f64,
    /// Half-extent of the integration window in units of kappa / |R|,
    /// i.e. the detuning runs from -window*kappa to +window*kappa.
    pub window: f64,
    /// Trajectory samples recorded per storage time tau_s.
    pub samples_per_tau: f64,
}

impl SweepSpec {
    /// Sweep at rate `nu_l` with the default window (20) and sampling
    /// density (200 samples per storage time).
    pub fn new(nu_l: f64) -> Self {
        SweepSpec {
            nu_l,
            window: 20.0,
            samples_per_tau: 200.0,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure!(
            self.nu_l.is_finite() && self.nu_l != 0.0,
            "nu_l",
            "must be finite and non-zero for a swept field"
        );
        ensure!(
            self.window.is_finite() && self.window >= 1.0,
            "window",
            "must be at least 1 half-linewidth unit"
        );
        ensure!(
            self.samples_per_tau.is_finite() && self.samples_per_tau >= 20.0,
            "samples_per_tau",
            "must be at least 20"
        );
        Ok(())
    }
}

/// Complex field amplitude on a uniform time grid with an even number of
/// intervals (so downstream integrators can pair them).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrajectory {
    t0: f64,
    dt: f64,
    samples: Vec<C64>,
}

impl FieldTrajectory {
    /// Wrap an externally produced sample set. The grid must be uniform
    /// with spacing `dt`, starting at `t0`, and must contain an even number
    /// of intervals (an odd number of at least 3 samples).
    pub fn from_samples(t0: f64, dt: f64, samples: Vec<C64>) -> Result<Self> {
        ensure!(dt.is_finite() && dt > 0.0, "dt", "must be finite and positive");
        ensure!(t0.is_finite(), "t0", "must be finite");
        ensure!(
            samples.len() >= 3 && samples.len() % 2 == 1,
            "samples",
            "need an odd number of at least 3 samples (even interval count)"
        );
        Ok(FieldTrajectory { t0, dt, samples })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the trajectory holds no samples (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Grid spacing, s.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of sample `i`, s.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    /// First sampled time, s.
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    /// Last sampled time, s.
    pub fn t_end(&self) -> f64 {
        self.time(self.samples.len() - 1)
    }

    /// Sampled amplitudes in time order.
    pub fn amplitudes(&self) -> &[C64] {
        &self.samples
    }

    /// Largest |E| over the trajectory.
    pub fn peak_magnitude(&self) -> f64 {
        self.samples.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Field at an arbitrary time inside the sampled window, by linear
    /// interpolation between the two neighboring samples.
    pub fn instantaneous_drive(&self, t: f64) -> Result<C64> {
        ensure!(t.is_finite(), "t", "must be finite");
        let end = self.t_end();
        if t < self.t0 || t > end {
            return Err(Error::invalid(
                "t",
                format!(
                    "time {t:.6e} s outside the sampled window [{:.6e}, {:.6e}] s",
                    self.t0, end
                ),
            ));
        }
        let x = (t - self.t0) / self.dt;
        let i = (x.floor() as usize).min(self.samples.len() - 2);
        let frac = x - i as f64;
        Ok(self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac)
    }

    /// Write the trajectory as CSV with columns
    /// `time_s,field_re,field_im,intensity`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time_s,field_re,field_im,intensity")?;
        for (i, e) in self.samples.iter().enumerate() {
            writeln!(w, "{},{},{},{}", self.time(i), e.re, e.im, e.norm_sqr())?;
        }
        Ok(())
    }
}

/// Fixed-step RK4 for dE/dt = (i R t - kappa) E + kappa, recording every
/// `sub`-th step.
fn rk4_sweep(r: f64, kappa: f64, t0: f64, e0: C64, n_out: usize, sub: usize, h: f64) -> Vec<C64> {
    let f = |t: f64, e: C64| (C64::new(-kappa, r * t)) * e + kappa;
    let mut out = Vec::with_capacity(n_out + 1);
    out.push(e0);
    let mut e = e0;
    for i in 0..n_out {
        // recompute the base time from the index to avoid drift
        let t_base = t0 + (i * sub) as f64 * h;
        for j in 0..sub {
            let t = t_base + j as f64 * h;
            let k1 = f(t, e);
            let k2 = f(t + h / 2.0, e + k1 * (h / 2.0));
            let k3 = f(t + h / 2.0, e + k2 * (h / 2.0));
            let k4 = f(t + h, e + k3 * h);
            e += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        }
        out.push(e);
    }
    out
}

/// Integrate the swept-field equation across the resonance.
///
/// The window covers laser-minus-cavity detunings in
/// [-window*kappa, +window*kappa]; the initial condition is the stationary
/// amplitude at the window edge. The integrator runs at a fixed internal
/// step no coarser than min(tau_s, |R|^{-1/2}) / 200 and validates itself by
/// step halving: the result is accepted only if the recorded samples move
/// by less than 1e-6 of the peak when the step is halved (the halved-step
/// samples are what is returned). |E| <= 1 is enforced as a runtime guard.
pub fn integrate_swept_field(
    figures: &CavityFigures,
    sweep: &SweepSpec,
) -> Result<FieldTrajectory> {
    sweep.validate()?;
    ensure!(
        figures.kappa.is_finite() && figures.kappa > 0.0,
        "kappa",
        "must be finite and positive"
    );
    ensure!(
        figures.tau_s.is_finite() && figures.tau_s > 0.0,
        "tau_s",
        "must be finite and positive"
    );
    let kappa = figures.kappa;
    let tau_s = figures.tau_s;
    let r = crate::params::detuning_slope(figures, sweep.nu_l);

    // half-duration such that |Delta_c(T)| = window * kappa
    let t_half = sweep.window * kappa / r.abs();
    let dt_target = tau_s / sweep.samples_per_tau;
    let mut n_out = (2.0 * t_half / dt_target).ceil() as usize;
    if n_out % 2 == 1 {
        n_out += 1;
    }
    let n_out = n_out.max(2);
    let dt = 2.0 * t_half / n_out as f64;

    // internal step resolves both the ring-down and the sweep chirp
    let h_resolve = tau_s.min(r.abs().sqrt().recip()) / 200.0;
    let sub = (dt / h_resolve).ceil().max(1.0) as usize;

    let t0 = -t_half;
    let e0 = steady_state_field(kappa, r * t0)?;
    let coarse = rk4_sweep(r, kappa, t0, e0, n_out, sub, dt / sub as f64);
    let fine = rk4_sweep(r, kappa, t0, e0, n_out, 2 * sub, dt / (2 * sub) as f64);

    let peak = fine.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let max_dev = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if !(max_dev <= 1e-6 * peak) {
        return Err(Error::Convergence(format!(
            "swept-field step halving moved samples by {max_dev:.3e} (> 1e-6 of peak {peak:.3e})"
        )));
    }
    if peak > 1.0 + 1e-9 {
        return Err(Error::Convergence(format!(
            "swept-field amplitude left the passive region: peak |E| = {peak:.9}"
        )));
    }

    FieldTrajectory::from_samples(t0, dt, fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_cavity_figures, CavityConfig};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn figures() -> CavityFigures {
        derive_cavity_figures(&CavityConfig {
            finesse: 35_000.0,
            length: 0.021,
            waist: 54e-6,
            mirror_curvature: 0.025,
            wavelength: 729e-9,
        })
        .unwrap()
    }

    #[test]
    fn steady_state_reference_points() {
        let kappa = 640_697.812_009_814;
        let on = steady_state_field(kappa, 0.0).unwrap();
        assert_abs_diff_eq!(on.re, 1.0);
        assert_abs_diff_eq!(on.im, 0.0);
        // half-width point: |E|^2 = 1/2
        let half = steady_state_field(kappa, kappa).unwrap();
        assert_relative_eq!(half.norm_sqr(), 0.5, max_relative = 1e-12);
        // far detuned: amplitude rolls off as kappa/|delta|
        let far = steady_state_field(kappa, 1e3 * kappa).unwrap();
        assert_relative_eq!(far.norm(), 1e-3, max_relative = 1e-5);
    }

    #[test]
    fn sweep_produces_expected_grid() {
        let fig = figures();
        let sweep = SweepSpec {
            nu_l: 0.16,
            window: 20.0,
            samples_per_tau: 200.0,
        };
        let traj = integrate_swept_field(&fig, &sweep).unwrap();
        // duration 2 * window * tau_s / nu_l = 250 tau_s
        let expect_duration = 2.0 * 20.0 * fig.tau_s / 0.16;
        assert_relative_eq!(
            traj.t_end() - traj.t_start(),
            expect_duration,
            max_relative = 1e-12
        );
        assert_eq!(traj.len() % 2, 1, "even interval count");
        // starts at the stationary edge value
        let edge = steady_state_field(fig.kappa, -20.0 * fig.kappa).unwrap();
        assert_relative_eq!(traj.amplitudes()[0].re, edge.re, max_relative = 1e-9);
        assert_relative_eq!(traj.amplitudes()[0].im, edge.im, max_relative = 1e-9);
    }

    #[test]
    fn fast_sweep_peaks_below_unity_with_ringing() {
        let fig = figures();
        let traj =
            integrate_swept_field(&fig, &SweepSpec::new(0.46)).unwrap();
        let mags: Vec<f64> = traj.amplitudes().iter().map(|e| e.norm()).collect();
        let peak = traj.peak_magnitude();
        assert_relative_eq!(peak, 0.909, max_relative = 5e-3);
        // ringing: local maxima after the principal peak
        let ip = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let wiggles = mags[ip..]
            .windows(3)
            .filter(|w| w[1] > w[0] && w[1] > w[2] && w[1] > 0.02)
            .count();
        assert!(wiggles >= 2, "expected ring-down oscillations, got {wiggles}");
    }

    #[test]
    fn slow_sweep_approaches_stationary_profile() {
        let fig = figures();
        let sweep = SweepSpec {
            nu_l: 1e-3,
            window: 8.0,
            samples_per_tau: 20.0,
        };
        let traj = integrate_swept_field(&fig, &sweep).unwrap();
        let r = crate::params::detuning_slope(&fig, 1e-3);
        let mut worst = 0.0f64;
        for i in 0..traj.len() {
            let e_stat = steady_state_field(fig.kappa, r * traj.time(i)).unwrap();
            worst = worst.max((traj.amplitudes()[i] - e_stat).norm());
        }
        assert!(
            worst < 5e-3,
            "slow sweep should track the stationary profile, worst dev {worst:.2e}"
        );
    }

    #[test]
    fn opposite_sweep_is_pointwise_conjugate() {
        let fig = figures();
        let fwd = integrate_swept_field(&fig, &SweepSpec::new(0.23)).unwrap();
        let bwd = integrate_swept_field(&fig, &SweepSpec::new(-0.23)).unwrap();
        assert_eq!(fwd.len(), bwd.len());
        let mut worst = 0.0f64;
        for (a, b) in fwd.amplitudes().iter().zip(bwd.amplitudes()) {
            worst = worst.max((a - b.conj()).norm());
        }
        assert!(worst < 1e-8, "conjugation identity violated by {worst:.2e}");
    }

    #[test]
    fn passivity_holds_across_rates() {
        let fig = figures();
        for nu in [0.05, 0.16, 0.23, 0.46, 1.5] {
            let traj = integrate_swept_field(&fig, &SweepSpec::new(nu)).unwrap();
            assert!(traj.peak_magnitude() <= 1.0 + 1e-9, "nu = {nu}");
        }
    }

    #[test]
    fn interpolation_error_small_at_fifty_samples_per_tau() {
        let fig = figures();
        let coarse = integrate_swept_field(
            &fig,
            &SweepSpec {
                nu_l: 0.16,
                window: 20.0,
                samples_per_tau: 50.0,
            },
        )
        .unwrap();
        let dense = integrate_swept_field(
            &fig,
            &SweepSpec {
                nu_l: 0.16,
                window: 20.0,
                samples_per_tau: 100.0,
            },
        )
        .unwrap();
        let peak = dense.peak_magnitude();
        let mut worst = 0.0f64;
        for i in 0..dense.len() {
            let t = dense.time(i).clamp(coarse.t_start(), coarse.t_end());
            let interp = coarse.instantaneous_drive(t).unwrap();
            worst = worst.max((interp - dense.amplitudes()[i]).norm());
        }
        assert!(
            worst < 1e-4 * peak,
            "interpolation error {worst:.3e} vs peak {peak:.3}"
        );
    }

    #[test]
    fn drive_outside_window_is_rejected() {
        let fig = figures();
        let traj = integrate_swept_field(&fig, &SweepSpec::new(0.3)).unwrap();
        assert!(traj.instantaneous_drive(traj.t_start() - 1e-9).is_err());
        assert!(traj.instantaneous_drive(traj.t_end() + 1e-9).is_err());
        assert!(traj.instantaneous_drive(0.0).is_ok());
    }

    #[test]
    fn rejects_degenerate_requests() {
        let fig = figures();
        assert!(integrate_swept_field(&fig, &SweepSpec::new(0.0)).is_err());
        let bad = SweepSpec {
            nu_l: 0.2,
            window: 0.1,
            samples_per_tau: 200.0,
        };
        assert!(integrate_swept_field(&fig, &bad).is_err());
        let bad = SweepSpec {
            nu_l: 0.2,
            window: 20.0,
            samples_per_tau: 5.0,
        };
        assert!(integrate_swept_field(&fig, &bad).is_err());
    }

    #[test]
    fn csv_export_round_trips() {
        let fig = figures();
        let traj = integrate_swept_field(
            &fig,
            &SweepSpec {
                nu_l: 0.4,
                window: 5.0,
                samples_per_tau: 20.0,
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (cols, rows, _) = crate::csvio::read_table(text.as_bytes()).unwrap();
        assert_eq!(cols, ["time_s", "field_re", "field_im", "intensity"]);
        assert_eq!(rows.len(), traj.len());
        // shortest round-trip float formatting reproduces the exact bits
        assert_eq!(rows[7][1], traj.amplitudes()[7].re);
        assert_eq!(rows[7][2], traj.amplitudes()[7].im);
    }
}
