//! End-to-end acceptance gate. Seven numbered criteria run in order inside
//! one test so expensive artifacts are shared; each prints a single
//! PASS/FAIL line (visible with `--nocapture`, or automatically on failure).

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use sweptcav::bloch::{integrate_bloch_trajectory, DriveSpec};
use sweptcav::experiment::{
    carrier_sideband_scan, positioning_precision, sample_detection, simulate_spectrum,
    standing_wave_scan, DetuningGrid, SamplingSpec, ScanContext,
};
use sweptcav::field::{integrate_swept_field, steady_state_field, FieldTrajectory, SweepSpec};
use sweptcav::fit::{fit_lorentzian, fit_sin2};
use sweptcav::motion::{lamb_dicke, tw_matrix_element, MotionalMode, Transition};
use sweptcav::params::{
    contrast_factor, cooperativity_block, derive_cavity_figures, wavepacket_extension,
    zero_point_extension, CavityConfig, CavityFigures, TrapMotionConfig,
};
use sweptcav::C64;

const WAVELENGTH: f64 = 729e-9;

fn figures() -> CavityFigures {
    derive_cavity_figures(&CavityConfig {
        finesse: 35_000.0,
        length: 0.021,
        waist: 54e-6,
        mirror_curvature: 0.025,
        wavelength: WAVELENGTH,
    })
    .unwrap()
}

fn trap() -> TrapMotionConfig {
    TrapMotionConfig {
        omega: [TAU * 2.9e6, TAU * 3.9e6, TAU * 7.4e6],
        nbar: [22.9, 4.3, 4.9],
        mass: 40.0 * sweptcav::constants::ATOMIC_MASS,
        cosine: [0.5, 0.5, FRAC_1_SQRT_2],
    }
}

const GAMMA_POP: f64 = TAU * 0.17;
const GAMMA_LASER: f64 = PI * 6.0e3;

/// Bare two-level ion pinned at a coupling antinode: full-quality sweeps.
fn bare_ion_ctx() -> ScanContext {
    ScanContext {
        figures: figures(),
        gamma_pop: GAMMA_POP,
        gamma_laser: GAMMA_LASER,
        mode_omega: TAU * 7.4e6,
        eta: 0.0,
        nbar: 0.0,
        tail_epsilon: 1e-6,
        contrast: 1.0,
        window: 20.0,
        samples_per_tau: 200.0,
        scan_half_span: TAU * 45.0e3,
        scan_points: 15,
    }
}

/// Thermal axial mode with the full-wavepacket contrast; sweep resolution
/// reduced to keep the multi-channel scans fast (the tested invariants are
/// exact ratios, independent of the sweep resolution).
fn thermal_ctx() -> ScanContext {
    let trap = trap();
    let a_c = wavepacket_extension(&trap).unwrap();
    let eta_z = lamb_dicke(
        &MotionalMode {
            omega: trap.omega[2],
            mass: trap.mass,
        },
        WAVELENGTH,
        trap.cosine[2],
    )
    .unwrap();
    ScanContext {
        figures: figures(),
        gamma_pop: GAMMA_POP,
        gamma_laser: GAMMA_LASER,
        mode_omega: trap.omega[2],
        eta: eta_z,
        nbar: trap.nbar[2],
        tail_epsilon: 1e-4,
        contrast: contrast_factor(a_c, WAVELENGTH).unwrap(),
        window: 12.0,
        samples_per_tau: 80.0,
        scan_half_span: TAU * 45.0e3,
        scan_points: 15,
    }
}

/// Ground-state-cooled control: zero-point wavepacket contrast only.
fn cold_ion_ctx() -> ScanContext {
    let trap = trap();
    let a0 = zero_point_extension(&trap).unwrap();
    ScanContext {
        nbar: 0.0,
        tail_epsilon: 1e-6,
        contrast: contrast_factor(a0, WAVELENGTH).unwrap(),
        ..thermal_ctx()
    }
}

fn phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64 * PI / n as f64).collect()
}

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn check(&mut self, index: usize, name: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {index} ({name}): {verdict} [{detail}]");
        if !pass {
            self.failures.push(format!("criterion {index} ({name}): {detail}"));
        }
    }
}

/// Column n of exp(i eta (a + a dagger)) in a truncated Fock basis, by RK4
/// integration of d v / d s = i eta (a + a dagger) v from s = 0 to 1.
fn fock_displacement_column(n: usize, eta: f64, dim: usize, steps: usize) -> Vec<C64> {
    let apply = |v: &[C64]| -> Vec<C64> {
        let mut d = vec![C64::ZERO; dim];
        for k in 0..dim {
            let mut s = C64::ZERO;
            if k > 0 {
                s += v[k - 1] * (k as f64).sqrt();
            }
            if k + 1 < dim {
                s += v[k + 1] * ((k + 1) as f64).sqrt();
            }
            d[k] = C64::new(0.0, eta) * s;
        }
        d
    };
    let mut v = vec![C64::ZERO; dim];
    v[n] = C64::new(1.0, 0.0);
    let h = 1.0 / steps as f64;
    for _ in 0..steps {
        let k1 = apply(&v);
        let mut tmp: Vec<C64> = v.iter().zip(&k1).map(|(a, b)| a + b * (h / 2.0)).collect();
        let k2 = apply(&tmp);
        tmp = v.iter().zip(&k2).map(|(a, b)| a + b * (h / 2.0)).collect();
        let k3 = apply(&tmp);
        tmp = v.iter().zip(&k3).map(|(a, b)| a + b * h).collect();
        let k4 = apply(&tmp);
        for k in 0..dim {
            v[k] += (k1[k] + (k2[k] + k3[k]) * 2.0 + k4[k]) * (h / 6.0);
        }
    }
    v
}

fn criterion_1(gate: &mut Gate) {
    let fig = figures();
    let trap = trap();
    let g = TAU * 134.0;
    let coop = cooperativity_block(g, fig.kappa, GAMMA_POP).unwrap();
    let a_c = wavepacket_extension(&trap).unwrap();
    let contrast = contrast_factor(a_c, WAVELENGTH).unwrap();

    let kappa_khz = fig.kappa / TAU / 1e3;
    let mut pass = (kappa_khz - 102.0).abs() <= 0.01 * 102.0;
    pass &= (coop.cooperativity - 0.52).abs() <= 0.005;
    pass &= (coop.purcell_factor - 2.04).abs() <= 0.01;
    pass &= (coop.emission_fraction - 0.51).abs() <= 0.005;
    pass &= (a_c * 1e9 - 26.0).abs() <= 1.0;
    pass &= (contrast - 0.951).abs() <= 0.002;
    gate.check(
        1,
        "derived cavity and coupling figures",
        pass,
        format!(
            "kappa/2pi = {kappa_khz:.2} kHz, C = {:.4}, F = {:.4}, beta = {:.4}, a_c = {:.2} nm, contrast = {:.4}",
            coop.cooperativity,
            coop.purcell_factor,
            coop.emission_fraction,
            a_c * 1e9,
            contrast
        ),
    );
}

fn criterion_2(gate: &mut Gate) {
    let ctx = bare_ion_ctx();
    let grid = DetuningGrid {
        center: 0.0,
        half_span: TAU * 60.0e3,
        points: 121,
    };
    let run = |nu_l: f64, omega_khz: f64| {
        simulate_spectrum(
            &ctx,
            Transition::Carrier,
            nu_l,
            TAU * omega_khz * 1e3,
            0.0,
            &grid,
            None,
        )
        .unwrap()
    };

    // (a) strong excitation at the reference drive of the fastest table row
    let s = run(0.16, 15.5);
    let peak = s.probabilities.iter().cloned().fold(0.0, f64::max);
    let pass_a = peak > 0.5;

    // (b) sweep-direction symmetry: mirrored center shifts for each rate
    let mut pass_b = true;
    let mut center_detail = String::new();
    for &(nu, om) in &[(0.16, 15.5), (0.23, 11.0), (0.46, 25.0)] {
        let fwd = run(nu, om);
        let bwd = run(-nu, om);
        let cf = fit_lorentzian(&fwd.detunings, &fwd.probabilities).unwrap();
        let cb = fit_lorentzian(&bwd.detunings, &bwd.probabilities).unwrap();
        let (cp, cm) = (cf.params.center, cb.params.center);
        let scale = cp.abs().max(cm.abs());
        pass_b &= cf.converged && cb.converged && (cp + cm).abs() <= 0.05 * scale;
        center_detail.push_str(&format!(
            " c(+{nu}) = {:+.2} kHz, c(-{nu}) = {:+.2} kHz;",
            cp / TAU / 1e3,
            cm / TAU / 1e3
        ));
    }

    // (c) line width grows monotonically with the scan rate at fixed drive
    let mut widths = Vec::new();
    for &nu in &[0.16, 0.23, 0.46] {
        let s = run(nu, 15.5);
        let fit = fit_lorentzian(&s.detunings, &s.probabilities).unwrap();
        assert!(fit.converged);
        widths.push(2.0 * fit.params.hwhm / TAU / 1e3);
    }
    let pass_c = widths.windows(2).all(|w| w[1] > w[0]);

    gate.check(
        2,
        "swept-spectrum shape versus scan rate",
        pass_a && pass_b && pass_c,
        format!(
            "peak(0.16, 15.5 kHz) = {peak:.3};{center_detail} FWHM at 15.5 kHz = {:.1}/{:.1}/{:.1} kHz",
            widths[0], widths[1], widths[2]
        ),
    );
}

fn criterion_3(gate: &mut Gate) {
    let omega = TAU * 3.0e3;
    let phis = phi_grid(16);

    let warm = standing_wave_scan(&thermal_ctx(), 0.23, omega, &phis).unwrap();
    let warm_fit = fit_sin2(&warm.scan.phases, &warm.scan.values).unwrap();

    let cold = standing_wave_scan(&cold_ion_ctx(), 0.23, omega, &phis).unwrap();
    let cold_fit = fit_sin2(&cold.scan.phases, &cold.scan.values).unwrap();

    let pass = !warm.saturation_warning
        && warm_fit.converged
        && (0.93..=0.98).contains(&warm_fit.visibility)
        && cold_fit.converged
        && cold_fit.visibility > 0.99
        && cold_fit.residual_rms < 0.01 * cold_fit.params.amplitude;
    gate.check(
        3,
        "standing-wave fringe visibility",
        pass,
        format!(
            "thermal V = {:.4}, cold V = {:.5}, cold residual/amplitude = {:.2e}",
            warm_fit.visibility,
            cold_fit.visibility,
            cold_fit.residual_rms / cold_fit.params.amplitude
        ),
    );
}

fn criterion_4(gate: &mut Gate) {
    let ctx = thermal_ctx();
    let phis = phi_grid(16);
    let scan = carrier_sideband_scan(&ctx, -0.23, TAU * 4.0e3, TAU * 70.0e3, &phis).unwrap();

    let fit_c = fit_sin2(&scan.carrier.phases, &scan.carrier.values).unwrap();
    let fit_s = fit_sin2(&scan.sideband.phases, &scan.sideband.values).unwrap();
    // Fig. 4 coordinate: one intensity period = 2 phi; the fitted sin^2
    // phases live in [0, pi), so the doubled difference lives in [0, 2 pi)
    let diff = (2.0 * (fit_c.params.phase - fit_s.params.phase)).rem_euclid(2.0 * PI);
    let pass_phase = fit_c.converged && fit_s.converged && (diff - PI).abs() <= 0.05;

    let argmax_c = scan
        .carrier
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let argmin_s = scan
        .sideband
        .values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let n = phis.len();
    let sep = argmax_c.abs_diff(argmin_s);
    let pass_align = sep.min(n - sep) <= 1;

    // ground-state axial mode: no lower state for the red sideband to reach
    let cold = cold_ion_ctx();
    let cold_scan = carrier_sideband_scan(&cold, -0.23, TAU * 4.0e3, TAU * 70.0e3, &phis).unwrap();
    let pass_zero = cold_scan.sideband.values.iter().all(|&v| v == 0.0);

    gate.check(
        4,
        "carrier/sideband standing-wave antiphase",
        pass_phase && pass_align && pass_zero,
        format!(
            "intensity-coordinate phase difference = {diff:.4} rad, argmax(carrier) = {argmax_c}, argmin(sideband) = {argmin_s}, cold red sideband max = {:.1e}",
            cold_scan.sideband.values.iter().cloned().fold(0.0, f64::max)
        ),
    );
}

fn criterion_5(gate: &mut Gate) {
    let fig = figures();

    // (i) static intracavity intensity is the Lorentzian resonance curve
    let mut worst_static = 0.0f64;
    for i in 0..=200 {
        let delta = fig.kappa * (20.0 * i as f64 / 200.0 - 10.0);
        let e = steady_state_field(fig.kappa, delta).unwrap();
        let expect = fig.kappa.powi(2) / (fig.kappa.powi(2) + delta.powi(2));
        worst_static = worst_static.max((e.norm_sqr() - expect).abs());
    }

    // (ii) undamped resonant drive follows sin^2(Omega t / 2) for 10 periods
    let omega = TAU * 1.0e4;
    let t_end = 10.0 * TAU / omega;
    let n_samples = 8001;
    let dt = t_end / (n_samples - 1) as f64;
    let field =
        FieldTrajectory::from_samples(0.0, dt, vec![C64::new(1.0, 0.0); n_samples]).unwrap();
    let drive = DriveSpec {
        omega_peak: omega,
        motional_weight: 1.0,
        detuning: 0.0,
        gamma_pop: 0.0,
        gamma_laser: 0.0,
    };
    let traj = integrate_bloch_trajectory(&drive, &field).unwrap();
    let mut worst_rabi = 0.0f64;
    for &(t, state) in &traj {
        let expect = (omega * t / 2.0).sin().powi(2);
        worst_rabi = worst_rabi.max((state.rho_ee - expect).abs());
    }

    // (iii) closed-form matrix elements against a truncated-Fock ODE oracle
    let mut worst_matrix = 0.0f64;
    for &eta in &[0.01, 0.1, 0.5] {
        for n in 0..=20usize {
            let column = fock_displacement_column(n, eta, 200, 4000);
            for n_target in 0..=20usize {
                let closed = tw_matrix_element(n as u32, n_target as u32, eta).unwrap();
                worst_matrix = worst_matrix.max((closed - column[n_target]).norm());
            }
        }
    }

    let pass = worst_static < 1e-6 && worst_rabi < 1e-6 && worst_matrix < 1e-8;
    gate.check(
        5,
        "closed-form cross-checks",
        pass,
        format!(
            "static Lorentzian deviation = {worst_static:.1e}, Rabi deviation = {worst_rabi:.1e}, matrix-element deviation = {worst_matrix:.1e}"
        ),
    );
}

fn criterion_6(gate: &mut Gate) {
    let fig = figures();

    // (a) step-halving stability of both integrators
    let coarse = integrate_swept_field(
        &fig,
        &SweepSpec {
            nu_l: 0.23,
            window: 12.0,
            samples_per_tau: 100.0,
        },
    )
    .unwrap();
    let fine = integrate_swept_field(
        &fig,
        &SweepSpec {
            nu_l: 0.23,
            window: 12.0,
            samples_per_tau: 200.0,
        },
    )
    .unwrap();
    let field_shift =
        (coarse.peak_magnitude() - fine.peak_magnitude()).abs() / fine.peak_magnitude();

    let ctx = bare_ion_ctx();
    let fine_ctx = ScanContext {
        samples_per_tau: 400.0,
        ..ctx.clone()
    };
    let grid = DetuningGrid {
        center: 0.0,
        half_span: TAU * 20.0e3,
        points: 3,
    };
    let p_coarse = simulate_spectrum(&ctx, Transition::Carrier, 0.23, TAU * 11.0e3, 0.0, &grid, None)
        .unwrap()
        .probabilities;
    let p_fine =
        simulate_spectrum(&fine_ctx, Transition::Carrier, 0.23, TAU * 11.0e3, 0.0, &grid, None)
            .unwrap()
            .probabilities;
    let bloch_shift = p_coarse
        .iter()
        .zip(&p_fine)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    // (b) seeded CSV outputs are byte-identical across repeated runs
    let sampling = SamplingSpec {
        n_repeats: 200,
        fidelity: 0.99,
        seed: 2026,
    };
    let csv_of = || {
        let s = simulate_spectrum(
            &ctx,
            Transition::Carrier,
            0.23,
            TAU * 11.0e3,
            0.0,
            &grid,
            Some(&sampling),
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        buf
    };
    let identical_spectrum = csv_of() == csv_of();
    let scan_csv_of = || {
        let scan = standing_wave_scan(&ctx, 0.23, TAU * 3.0e3, &phi_grid(6)).unwrap();
        let mut buf = Vec::new();
        scan.scan.write_csv(&mut buf).unwrap();
        buf
    };
    let identical_scan = scan_csv_of() == scan_csv_of();

    // (c) density-matrix physicality at every recorded sample of a strong sweep
    let field = integrate_swept_field(
        &fig,
        &SweepSpec {
            nu_l: 0.16,
            window: 20.0,
            samples_per_tau: 200.0,
        },
    )
    .unwrap();
    let drive = DriveSpec {
        omega_peak: TAU * 25.0e3,
        motional_weight: 1.0,
        detuning: 0.0,
        gamma_pop: GAMMA_POP,
        gamma_laser: GAMMA_LASER,
    };
    let traj = integrate_bloch_trajectory(&drive, &field).unwrap();
    let physical = traj.iter().all(|&(_, s)| {
        s.rho_ee >= -1e-9
            && s.rho_ee <= 1.0 + 1e-9
            && s.coherence.norm_sqr() <= s.rho_ee * (1.0 - s.rho_ee) + 1e-9
    });

    let pass = field_shift < 1e-6
        && bloch_shift < 1e-6
        && identical_spectrum
        && identical_scan
        && physical;
    gate.check(
        6,
        "numerical hygiene",
        pass,
        format!(
            "field halving shift = {field_shift:.1e}, excitation halving shift = {bloch_shift:.1e}, bit-identical CSV = {}, physical samples = {physical}",
            identical_spectrum && identical_scan
        ),
    );
}

fn criterion_7(gate: &mut Gate) {
    // fringe from the bare-ion standing-wave scan at the strongest table row
    let ctx = bare_ion_ctx();
    let scan = standing_wave_scan(&ctx, 0.16, TAU * 15.5e3, &phi_grid(16)).unwrap();
    let fit = fit_sin2(&scan.scan.phases, &scan.scan.values).unwrap();
    assert!(fit.converged, "positioning fringe fit must converge");

    let sigma_p = 0.03;
    // steepest point and extremum of the fitted fringe
    let phi_slope = (PI / 4.0 - fit.params.phase).rem_euclid(PI);
    let phi_ext = (-fit.params.phase).rem_euclid(PI);
    let dx_slope = positioning_precision(&fit, sigma_p, phi_slope, WAVELENGTH).unwrap();
    let dx_ext = positioning_precision(&fit, sigma_p, phi_ext, WAVELENGTH).unwrap();

    let pass = (3.0e-9..=15.0e-9).contains(&dx_slope) && dx_ext > dx_slope;
    gate.check(
        7,
        "nanometer positioning precision",
        pass,
        format!(
            "fringe amplitude = {:.3}, slope-point dx = {:.2} nm, extremum dx = {:.2} nm",
            fit.params.amplitude,
            dx_slope * 1e9,
            dx_ext * 1e9
        ),
    );
}

#[test]
fn acceptance() {
    let mut gate = Gate {
        failures: Vec::new(),
    };
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    criterion_3(&mut gate);
    criterion_4(&mut gate);
    criterion_5(&mut gate);
    criterion_6(&mut gate);
    criterion_7(&mut gate);
    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );

    // keep the detection path exercised end to end: a seeded draw at the
    // misclassification level used throughout recovers its own counts
    let d = sample_detection(0.3, 100, 0.99, 7).unwrap();
    assert_eq!(d.total, 100);
    assert!(d.shelved <= 100);
}
