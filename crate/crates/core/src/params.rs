//! Derived cavity, atom, and trap figures: resonator linewidth and photon
//! lifetime, normalized sweep rate, cooperativity block, thermal wavepacket
//! extension and the standing-wave contrast factor it implies.

use crate::constants::{HBAR, SPEED_OF_LIGHT};
use crate::error::ensure;
use crate::Result;

/// Fixed geometry and coating of the resonator.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityConfig {
    /// Finesse of the resonator.
    pub finesse: f64,
    /// Mirror separation, m.
    pub length: f64,
    /// TEM00 waist radius, m.
    pub waist: f64,
    /// Mirror radius of curvature, m.
    pub mirror_curvature: f64,
    /// Wavelength of the resonant light, m.
    pub wavelength: f64,
}

impl CavityConfig {
    /// Reject non-physical geometry before deriving anything from it.
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.finesse.is_finite() && self.finesse > 0.0,
            "finesse",
            "must be a positive finite number"
        );
        ensure!(
            self.length.is_finite() && self.length > 0.0,
            "length",
            "must be a positive finite length in meters"
        );
        ensure!(
            self.waist.is_finite() && self.waist > 0.0,
            "waist",
            "must be a positive finite length in meters"
        );
        ensure!(
            self.mirror_curvature.is_finite() && self.mirror_curvature > 0.0,
            "mirror_curvature",
            "must be a positive finite length in meters"
        );
        ensure!(
            self.wavelength.is_finite() && self.wavelength > 0.0,
            "wavelength",
            "must be a positive finite length in meters"
        );
        Ok(())
    }
}

/// Spectral figures of the resonator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityFigures {
    /// Free spectral range c / 2L, Hz.
    pub fsr_hz: f64,
    /// Full width at half maximum of the resonance, FSR / finesse, Hz.
    pub linewidth_fwhm_hz: f64,
    /// Field decay rate (angular half width), pi * FSR / finesse, rad/s.
    pub kappa: f64,
    /// Photon storage time, finesse * L / (pi c), s.
    pub tau_s: f64,
}

/// Compute the spectral figures of a resonator. `kappa * tau_s = 1/2` holds
/// identically for any valid geometry.
pub fn derive_cavity_figures(cavity: &CavityConfig) -> Result<CavityFigures> {
    cavity.validate()?;
    let fsr_hz = SPEED_OF_LIGHT / (2.0 * cavity.length);
    let linewidth_fwhm_hz = fsr_hz / cavity.finesse;
    let kappa = std::f64::consts::PI * linewidth_fwhm_hz;
    let tau_s = cavity.finesse * cavity.length / (std::f64::consts::PI * SPEED_OF_LIGHT);
    Ok(CavityFigures {
        fsr_hz,
        linewidth_fwhm_hz,
        kappa,
        tau_s,
    })
}

/// Normalized sweep rate nu_L = 2 F omega Ldot tau_s / (pi c) for a mirror
/// moving at `ldot` m/s. Positive `ldot` shortens the cavity sweep period
/// convention such that the resonance crosses the (fixed) laser from below,
/// i.e. the laser-minus-cavity detuning grows at rate `detuning_slope`.
pub fn normalized_scan_rate(cavity: &CavityConfig, ldot: f64) -> Result<f64> {
    ensure!(ldot.is_finite(), "ldot", "must be finite");
    let fig = derive_cavity_figures(cavity)?;
    let omega = std::f64::consts::TAU * SPEED_OF_LIGHT / cavity.wavelength;
    Ok(2.0 * cavity.finesse * omega * ldot * fig.tau_s / (std::f64::consts::PI * SPEED_OF_LIGHT))
}

/// Mirror velocity that produces a given normalized sweep rate; exact
/// inverse of [`normalized_scan_rate`].
pub fn scan_velocity(cavity: &CavityConfig, nu_l: f64) -> Result<f64> {
    ensure!(nu_l.is_finite(), "nu_l", "must be finite");
    let fig = derive_cavity_figures(cavity)?;
    let omega = std::f64::consts::TAU * SPEED_OF_LIGHT / cavity.wavelength;
    Ok(nu_l * std::f64::consts::PI * SPEED_OF_LIGHT / (2.0 * cavity.finesse * omega * fig.tau_s))
}

/// Slope of the laser-minus-cavity detuning during the sweep,
/// R = nu_L * kappa / tau_s, rad/s^2.
pub fn detuning_slope(figures: &CavityFigures, nu_l: f64) -> f64 {
    nu_l * figures.kappa / figures.tau_s
}

/// Single-atom cooperativity and the emission figures that follow from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CooperativityFigures {
    /// Single-atom cooperativity C = g^2 / (2 kappa gamma).
    pub cooperativity: f64,
    /// Spontaneous-emission enhancement factor 2C + 1.
    pub purcell_factor: f64,
    /// Fraction of emission into the cavity mode, 2C / (2C + 1).
    pub emission_fraction: f64,
}

/// Derive the cooperativity block from the coupling rate `g`, the cavity
/// field decay rate `kappa`, and the atomic population decay rate `gamma`
/// (all angular, rad/s).
pub fn cooperativity_block(g: f64, kappa: f64, gamma: f64) -> Result<CooperativityFigures> {
    ensure!(g.is_finite() && g >= 0.0, "g", "must be finite and non-negative");
    ensure!(kappa.is_finite() && kappa > 0.0, "kappa", "must be finite and positive");
    ensure!(gamma.is_finite() && gamma > 0.0, "gamma", "must be finite and positive");
    let cooperativity = g * g / (2.0 * kappa * gamma);
    let purcell_factor = 2.0 * cooperativity + 1.0;
    Ok(CooperativityFigures {
        cooperativity,
        purcell_factor,
        emission_fraction: 2.0 * cooperativity / purcell_factor,
    })
}

/// Secular motion of the ion in the trap, projected onto the cavity axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapMotionConfig {
    /// Angular secular frequencies of the three normal modes, rad/s.
    pub omega: [f64; 3],
    /// Mean thermal occupation of each mode.
    pub nbar: [f64; 3],
    /// Ion mass, kg.
    pub mass: f64,
    /// Direction cosines of the mode axes onto the cavity axis.
    pub cosine: [f64; 3],
}

impl TrapMotionConfig {
    /// Reject non-physical trap parameters.
    pub fn validate(&self) -> Result<()> {
        for (i, &w) in self.omega.iter().enumerate() {
            ensure!(
                w.is_finite() && w > 0.0,
                "omega",
                format!("mode {i}: must be a positive angular frequency")
            );
        }
        for (i, &n) in self.nbar.iter().enumerate() {
            ensure!(
                n.is_finite() && n >= 0.0,
                "nbar",
                format!("mode {i}: must be finite and non-negative")
            );
        }
        ensure!(
            self.mass.is_finite() && self.mass > 0.0,
            "mass",
            "must be a positive mass in kg"
        );
        for (i, &c) in self.cosine.iter().enumerate() {
            ensure!(
                c.is_finite() && c.abs() <= 1.0,
                "cosine",
                format!("mode {i}: must lie in [-1, 1]")
            );
        }
        Ok(())
    }
}

/// RMS extension of the thermal wavepacket along the cavity axis,
/// a_c = sqrt(sum_i cos_i^2 (2 nbar_i + 1) hbar / (2 m omega_i)), m.
pub fn wavepacket_extension(trap: &TrapMotionConfig) -> Result<f64> {
    trap.validate()?;
    let mut sum = 0.0;
    for i in 0..3 {
        let x0_sq = HBAR / (2.0 * trap.mass * trap.omega[i]);
        sum += trap.cosine[i] * trap.cosine[i] * (2.0 * trap.nbar[i] + 1.0) * x0_sq;
    }
    Ok(sum.sqrt())
}

/// Zero-temperature limit of [`wavepacket_extension`]: the projected
/// zero-point extension of the same trap, m.
pub fn zero_point_extension(trap: &TrapMotionConfig) -> Result<f64> {
    let cold = TrapMotionConfig {
        nbar: [0.0; 3],
        ..trap.clone()
    };
    wavepacket_extension(&cold)
}

/// Standing-wave contrast factor exp(-(2 pi a_c / lambda)^2) for a wavepacket
/// of RMS extension `a_c` probed at wavelength `lambda`; 1 for a point ion.
pub fn contrast_factor(a_c: f64, wavelength: f64) -> Result<f64> {
    ensure!(
        a_c.is_finite() && a_c >= 0.0,
        "a_c",
        "must be finite and non-negative"
    );
    ensure!(
        wavelength.is_finite() && wavelength > 0.0,
        "wavelength",
        "must be a positive wavelength in meters"
    );
    let k = std::f64::consts::TAU / wavelength;
    Ok((-(k * a_c) * (k * a_c)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn reference_cavity() -> CavityConfig {
        CavityConfig {
            finesse: 35_000.0,
            length: 0.021,
            waist: 54e-6,
            mirror_curvature: 0.025,
            wavelength: 729e-9,
        }
    }

    fn reference_trap() -> TrapMotionConfig {
        TrapMotionConfig {
            omega: [
                std::f64::consts::TAU * 2.9e6,
                std::f64::consts::TAU * 3.9e6,
                std::f64::consts::TAU * 7.4e6,
            ],
            nbar: [22.9, 4.3, 4.9],
            mass: 40.0 * crate::constants::ATOMIC_MASS,
            cosine: [0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2],
        }
    }

    #[test]
    fn cavity_figures_reference_values() {
        let fig = derive_cavity_figures(&reference_cavity()).unwrap();
        assert_relative_eq!(fig.fsr_hz, 7_137_915_666.666_666, max_relative = 1e-12);
        assert_relative_eq!(fig.linewidth_fwhm_hz, 203_940.447_619_047_6, max_relative = 1e-12);
        assert_relative_eq!(fig.kappa, 640_697.812_009_814, max_relative = 1e-12);
        assert_relative_eq!(fig.tau_s, 7.803_991_064_547_933e-7, max_relative = 1e-12);
    }

    #[test]
    fn storage_time_linewidth_product_is_half() {
        let fig = derive_cavity_figures(&reference_cavity()).unwrap();
        assert_relative_eq!(fig.kappa * fig.tau_s, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn scan_rate_reference_value() {
        let cav = reference_cavity();
        let ldot = scan_velocity(&cav, 0.16).unwrap();
        assert_relative_eq!(ldot, 1.067_585_611_326_067_2e-6, max_relative = 1e-12);
        let fig = derive_cavity_figures(&cav).unwrap();
        assert_relative_eq!(
            detuning_slope(&fig, 0.16),
            131_357_979_620.532_15,
            max_relative = 1e-12
        );
    }

    #[test]
    fn cooperativity_reference_values() {
        let g = std::f64::consts::TAU * 134.0;
        let gamma = std::f64::consts::TAU * 0.17;
        let fig = derive_cavity_figures(&reference_cavity()).unwrap();
        let coop = cooperativity_block(g, fig.kappa, gamma).unwrap();
        assert_relative_eq!(coop.cooperativity, 0.517_913_590_192_099_1, max_relative = 1e-12);
        assert_relative_eq!(coop.purcell_factor, 2.035_827_180_384_198_5, max_relative = 1e-12);
        assert_relative_eq!(coop.emission_fraction, 0.508_799_170_364_116_3, max_relative = 1e-12);
    }

    #[test]
    fn wavepacket_reference_values() {
        let trap = reference_trap();
        let a_c = wavepacket_extension(&trap).unwrap();
        assert_relative_eq!(a_c, 2.607_074_726_681_194_5e-8, max_relative = 1e-12);
        let a_zpt = zero_point_extension(&trap).unwrap();
        assert_relative_eq!(a_zpt, 5.246_676_961_896_344e-9, max_relative = 1e-12);
        let d = contrast_factor(a_c, 729e-9).unwrap();
        assert_relative_eq!(d, 0.950_762_743_378_382, max_relative = 1e-12);
        assert_relative_eq!(
            contrast_factor(52e-9, 729e-9).unwrap(),
            0.818_020_171_595_837_7,
            max_relative = 1e-12
        );
    }

    #[test]
    fn point_ion_contrast_is_one() {
        assert_abs_diff_eq!(contrast_factor(0.0, 729e-9).unwrap(), 1.0);
    }

    #[test]
    fn validation_rejects_bad_geometry() {
        let mut cav = reference_cavity();
        cav.finesse = -1.0;
        let err = derive_cavity_figures(&cav).unwrap_err().to_string();
        assert!(err.contains("finesse"), "got: {err}");

        let mut trap = reference_trap();
        trap.nbar[1] = -0.5;
        let err = wavepacket_extension(&trap).unwrap_err().to_string();
        assert!(err.contains("nbar"), "got: {err}");

        let mut trap = reference_trap();
        trap.cosine[0] = 1.5;
        assert!(wavepacket_extension(&trap).is_err());
    }

    proptest! {
        #[test]
        fn kappa_tau_product_is_half_for_any_geometry(
            finesse in 1.0e2..1.0e6f64,
            length in 1.0e-3..1.0f64,
        ) {
            let cav = CavityConfig { finesse, length, ..reference_cavity() };
            let fig = derive_cavity_figures(&cav).unwrap();
            prop_assert!((fig.kappa * fig.tau_s - 0.5).abs() < 1e-12);
        }

        #[test]
        fn scan_rate_round_trips(
            nu_l in -10.0..10.0f64,
            finesse in 1.0e3..1.0e5f64,
        ) {
            let cav = CavityConfig { finesse, ..reference_cavity() };
            let ldot = scan_velocity(&cav, nu_l).unwrap();
            let back = normalized_scan_rate(&cav, ldot).unwrap();
            prop_assert!((back - nu_l).abs() <= 1e-12 * nu_l.abs().max(1.0));
        }

        #[test]
        fn contrast_factor_in_unit_interval(a_c in 0.0..1.0e-6f64) {
            let d = contrast_factor(a_c, 729e-9).unwrap();
            prop_assert!(d > 0.0 && d <= 1.0);
        }

        #[test]
        fn wavepacket_grows_with_occupation(
            scale in 0.0..50.0f64,
        ) {
            let mut trap = reference_trap();
            trap.nbar = [scale, scale, scale];
            let hot = wavepacket_extension(&trap).unwrap();
            trap.nbar = [0.0, 0.0, 0.0];
            let cold = wavepacket_extension(&trap).unwrap();
            prop_assert!(hot >= cold);
        }
    }
}
