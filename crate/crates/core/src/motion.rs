//! Motional coupling of the ion to the intracavity standing wave:
//! Lamb-Dicke parameters, travelling- and standing-wave matrix elements
//! between Fock states, and thermal occupation distributions.

use crate::error::ensure;
use crate::{C64, Result};

/// One secular mode of the trapped ion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionalMode {
    /// Angular secular frequency, rad/s.
    pub omega: f64,
    /// Ion mass, kg.
    pub mass: f64,
}

/// Change of the motional quantum number addressed by a spectral line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// No phonon change.
    Carrier,
    /// One phonon removed (line at laser detuning -omega_mode).
    RedSideband,
    /// One phonon added (line at laser detuning +omega_mode).
    BlueSideband,
}

impl Transition {
    /// Phonon number change for this line.
    pub fn phonon_change(self) -> i32 {
        match self {
            Transition::Carrier => 0,
            Transition::RedSideband => -1,
            Transition::BlueSideband => 1,
        }
    }
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Transition::Carrier => "carrier",
            Transition::RedSideband => "red_sideband",
            Transition::BlueSideband => "blue_sideband",
        })
    }
}

/// Lamb-Dicke parameter of a mode probed along the cavity axis:
/// eta = (2 pi / lambda) |cosine| sqrt(hbar / (2 m omega)).
pub fn lamb_dicke(mode: &MotionalMode, wavelength: f64, cosine: f64) -> Result<f64> {
    ensure!(
        mode.omega.is_finite() && mode.omega > 0.0,
        "omega",
        "must be a positive angular frequency"
    );
    ensure!(
        mode.mass.is_finite() && mode.mass > 0.0,
        "mass",
        "must be a positive mass in kg"
    );
    ensure!(
        wavelength.is_finite() && wavelength > 0.0,
        "wavelength",
        "must be a positive wavelength in meters"
    );
    ensure!(
        cosine.is_finite() && cosine.abs() <= 1.0,
        "cosine",
        "must lie in [-1, 1]"
    );
    let k = std::f64::consts::TAU / wavelength;
    Ok(k * cosine.abs() * (crate::constants::HBAR / (2.0 * mode.mass * mode.omega)).sqrt())
}

/// Generalized Laguerre polynomial L_n^alpha(x) by upward recurrence.
fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    let mut l1 = 1.0 + alpha - x;
    if n == 0 {
        return l0;
    }
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * l1 - (k + alpha) * l0) / (k + 1.0);
        l0 = l1;
        l1 = next;
    }
    l1
}

/// Signed real magnitude of the travelling-wave element: the element with
/// the i^d phase stripped. Computed in log space so that large quantum
/// numbers neither overflow the factorials nor underflow the prefactor.
fn tw_signed_magnitude(n: u32, n_prime: u32, eta: f64) -> f64 {
    if eta == 0.0 {
        return if n == n_prime { 1.0 } else { 0.0 };
    }
    let lo = n.min(n_prime);
    let hi = n.max(n_prime);
    let d = hi - lo;
    // sqrt(lo!/hi!) = exp(-1/2 sum_{j=lo+1}^{hi} ln j)
    let mut ln_ratio = 0.0;
    for j in (lo + 1)..=hi {
        ln_ratio += (j as f64).ln();
    }
    let ln_pre = d as f64 * eta.ln() - eta * eta / 2.0 - 0.5 * ln_ratio;
    let lag = laguerre(lo, d as f64, eta * eta);
    if lag == 0.0 {
        0.0
    } else {
        lag.signum() * (ln_pre + lag.abs().ln()).exp()
    }
}

/// Travelling-wave matrix element `<n'| exp(i eta (a + a^dag)) |n>`
/// = i^d e^{-eta^2/2} eta^d sqrt(n_<! / n_>!) L_{n_<}^d(eta^2), d = |n' - n|.
pub fn tw_matrix_element(n: u32, n_prime: u32, eta: f64) -> Result<C64> {
    ensure!(
        eta.is_finite() && eta >= 0.0,
        "eta",
        "must be finite and non-negative"
    );
    let d = n.abs_diff(n_prime);
    let m = tw_signed_magnitude(n, n_prime, eta);
    // i^d without complex powers
    let unit = match d % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    };
    Ok(unit * m)
}

/// Standing-wave matrix element `<n'| cos(k x + phi) |n>`
/// = m cos(phi + d pi/2) with m the signed travelling-wave magnitude.
/// Real by construction; exactly zero at the parity nodes (phi = pi/2 for
/// even d, phi = 0 for odd d).
pub fn sw_matrix_element(n: u32, n_prime: u32, eta: f64, phi: f64) -> Result<f64> {
    ensure!(phi.is_finite(), "phi", "must be finite");
    let m = tw_signed_magnitude(n, n_prime, eta);
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(crate::Error::invalid("eta", "must be finite and non-negative"));
    }
    let d = n.abs_diff(n_prime);
    // cos(phi) via the shifted sine so that phi = pi/2 gives exactly 0
    let cos_phi = (std::f64::consts::FRAC_PI_2 - phi).sin();
    Ok(match d % 4 {
        0 => m * cos_phi,
        1 => -m * phi.sin(),
        2 => -m * cos_phi,
        _ => m * phi.sin(),
    })
}

/// Thermal occupation probabilities of one mode, truncated so that at most
/// `tail_epsilon` of the weight would be dropped, with the truncated tail
/// folded into the last entry so the distribution sums to one exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalDistribution {
    /// Mean occupation the distribution was built for.
    pub nbar: f64,
    /// `probabilities[n]` is the weight of Fock state `n`.
    pub probabilities: Vec<f64>,
}

/// Build the truncated thermal distribution p_n = nbar^n / (nbar+1)^(n+1).
pub fn thermal_distribution(nbar: f64, tail_epsilon: f64) -> Result<ThermalDistribution> {
    ensure!(
        nbar.is_finite() && nbar >= 0.0,
        "nbar",
        "must be finite and non-negative"
    );
    ensure!(
        (1e-12..1.0).contains(&tail_epsilon),
        "tail_epsilon",
        "must lie in [1e-12, 1); smaller tails sink below the fold accuracy"
    );
    if nbar == 0.0 {
        return Ok(ThermalDistribution {
            nbar,
            probabilities: vec![1.0],
        });
    }
    let r = nbar / (nbar + 1.0);
    // keep states 0..=n_max where n_max is the smallest n with cumulative
    // weight >= 1 - eps, i.e. r^(n+1) <= eps; the last kept state takes the
    // folded tail, so n_max entries are geometric and one is the remainder
    let n_full = ((tail_epsilon.ln() / r.ln()).ceil() as usize).saturating_sub(1);
    ensure!(
        n_full < 10_000_000,
        "nbar",
        "truncation at this tail_epsilon would need over 1e7 states"
    );
    let mut p = Vec::with_capacity(n_full + 1);
    let mut partial = 0.0;
    let mut term = 1.0 / (nbar + 1.0);
    for _ in 0..n_full {
        p.push(term);
        partial += term;
        term *= r;
    }
    // fold the exact tail into one last entry, then polish that entry so the
    // compensated total is exactly 1.0 (a naive fold only makes the naive
    // re-sum exact; the compensated sum still sees the rounding residual)
    p.push(1.0 - partial);
    let last = p.len() - 1;
    for _ in 0..2 {
        let resid = crate::exec::compensated_sum(&p) - 1.0;
        if resid == 0.0 {
            break;
        }
        p[last] -= resid;
    }
    Ok(ThermalDistribution {
        nbar,
        probabilities: p,
    })
}

/// Per-channel coupling weights of a thermal state on one spectral line.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    /// `weights[n]` = p_n |sw(n, n + dn)|^2; zero where the target state
    /// does not exist.
    pub weights: Vec<f64>,
    /// Thermally averaged coupling weight, sum of `weights`.
    pub average: f64,
}

/// Thermal coupling profile of `transition` at standing-wave phase `phi`.
pub fn coupling_profile(
    dist: &ThermalDistribution,
    transition: Transition,
    eta: f64,
    phi: f64,
) -> Result<CouplingProfile> {
    let dn = transition.phonon_change();
    let mut weights = Vec::with_capacity(dist.probabilities.len());
    for (n, &p) in dist.probabilities.iter().enumerate() {
        let target = n as i64 + dn as i64;
        let w = if target < 0 {
            0.0
        } else {
            let el = sw_matrix_element(n as u32, target as u32, eta, phi)?;
            p * el * el
        };
        weights.push(w);
    }
    let average = crate::exec::compensated_sum(&weights);
    Ok(CouplingProfile { weights, average })
}
