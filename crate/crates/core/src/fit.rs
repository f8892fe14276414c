//! Least-squares line-shape fits: a damped Gauss-Newton Lorentzian fit and
//! an exactly linearizable sin^2 fringe fit, both with parameter errors
//! from the Jacobian at the solution.

use crate::error::ensure;
use crate::{Error, Result};

/// Solve `a x = b` in place for a small dense system by Gaussian
/// elimination with partial pivoting. Returns `None` when singular.
fn solve_small(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in (col + 1)..n {
            s -= a[col][k] * x[k];
        }
        x[col] = s / a[col][col];
    }
    Some(x)
}

/// Invert a small symmetric positive matrix by solving against identity
/// columns. Returns `None` when singular.
fn invert_small(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for col in 0..n {
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = solve_small(&mut m, &mut e)?;
        for row in 0..n {
            inv[row][col] = x[row];
        }
    }
    Some(inv)
}

fn validate_xy(x: &[f64], y: &[f64], min_points: usize) -> Result<()> {
    ensure!(
        x.len() == y.len(),
        "y",
        format!("length {} does not match x length {}", y.len(), x.len())
    );
    ensure!(
        x.len() >= min_points,
        "x",
        format!("need at least {min_points} points, got {}", x.len())
    );
    ensure!(
        x.iter().chain(y).all(|v| v.is_finite()),
        "x",
        "all samples must be finite"
    );
    Ok(())
}

/// Parameters of the Lorentzian model
/// `y = offset + peak * hwhm^2 / ((x - center)^2 + hwhm^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianParams {
    /// Line center, in the units of `x`.
    pub center: f64,
    /// Half width at half maximum, in the units of `x`.
    pub hwhm: f64,
    /// Height of the line above the offset.
    pub peak: f64,
    /// Constant background.
    pub offset: f64,
}

/// Result of [`fit_lorentzian`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    /// Best-fit parameters.
    pub params: LorentzianParams,
    /// One-sigma parameter errors from the Jacobian at the solution
    /// (infinite where the data do not constrain a parameter).
    pub param_errors: LorentzianParams,
    /// Root-mean-square residual of the fit.
    pub residual_rms: f64,
    /// True when the gradient criterion was met.
    pub converged: bool,
}

fn lorentzian_model(p: &LorentzianParams, x: f64) -> f64 {
    let dx = x - p.center;
    p.offset + p.peak * p.hwhm * p.hwhm / (dx * dx + p.hwhm * p.hwhm)
}

/// Rows of the Jacobian d model / d (center, hwhm, peak, offset).
fn lorentzian_jacobian_row(p: &LorentzianParams, x: f64) -> [f64; 4] {
    let dx = x - p.center;
    let h2 = p.hwhm * p.hwhm;
    let den = dx * dx + h2;
    [
        p.peak * h2 * 2.0 * dx / (den * den),
        p.peak * (2.0 * p.hwhm / den - 2.0 * p.hwhm * h2 / (den * den)),
        h2 / den,
        1.0,
    ]
}

fn rss(p: &LorentzianParams, x: &[f64], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - lorentzian_model(p, xi);
        s += r * r;
    }
    s
}

/// Fit a Lorentzian line to `(x, y)` by damped Gauss-Newton, seeded from
/// the sample extremum and half-maximum width. Flat data converge to
/// `peak = 0` with the mean as offset; they do not error.
pub fn fit_lorentzian(x: &[f64], y: &[f64]) -> Result<LorentzianFit> {
    validate_xy(x, y, 5)?;
    let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - x.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure!(span > 0.0, "x", "all abscissae are identical");

    let (y_min, y_max) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    if y_max - y_min == 0.0 {
        // exactly flat: peak 0, offset at the level, gradient already zero
        let mid = x.iter().sum::<f64>() / x.len() as f64;
        let p = LorentzianParams {
            center: mid,
            hwhm: span / 4.0,
            peak: 0.0,
            offset: y[0],
        };
        return Ok(LorentzianFit {
            params: p,
            param_errors: LorentzianParams {
                center: f64::INFINITY,
                hwhm: f64::INFINITY,
                peak: 0.0,
                offset: 0.0,
            },
            residual_rms: 0.0,
            converged: true,
        });
    }

    // seed: extremum position, half-max width, range amplitude
    let i_max = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let offset0 = y_min;
    let peak0 = y_max - y_min;
    let half = offset0 + peak0 / 2.0;
    let above: Vec<f64> = x
        .iter()
        .zip(y)
        .filter(|(_, &yi)| yi >= half)
        .map(|(&xi, _)| xi)
        .collect();
    let hw0 = {
        let lo = above.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = above.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w = (hi - lo) / 2.0;
        if w > 0.0 {
            w
        } else {
            span / x.len() as f64
        }
    };
    let mut p = LorentzianParams {
        center: x[i_max],
        hwhm: hw0,
        peak: peak0,
        offset: offset0,
    };

    let n = x.len();
    let mut cost = rss(&p, x, y);
    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..200 {
        // normal equations J^T J step = J^T r
        let mut jtj = vec![vec![0.0; 4]; 4];
        let mut jtr = vec![0.0; 4];
        for (&xi, &yi) in x.iter().zip(y) {
            let row = lorentzian_jacobian_row(&p, xi);
            let r = yi - lorentzian_model(&p, xi);
            for a in 0..4 {
                jtr[a] += row[a] * r;
                for b in 0..4 {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let g_max = jtr.iter().fold(0.0f64, |m, &g| m.max(g.abs()));
        if g_max < 1e-12 * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for a in 0..4 {
                damped[a][a] += lambda * jtj[a][a].max(1e-30);
            }
            let mut rhs = jtr.clone();
            let step = match solve_small(&mut damped, &mut rhs) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial = LorentzianParams {
                center: p.center + step[0],
                hwhm: p.hwhm + step[1],
                peak: p.peak + step[2],
                offset: p.offset + step[3],
            };
            let trial_cost = rss(&trial, x, y);
            if trial_cost.is_finite() && trial_cost <= cost {
                // progress criteria: a step that no longer moves the cost or
                // the parameters by a meaningful relative amount is converged
                let scales = [p.center, p.hwhm, p.peak, p.offset];
                let tiny_step = step
                    .iter()
                    .zip(&scales)
                    .all(|(&s, &v)| s.abs() <= 1e-11 * (1.0 + v.abs()));
                let tiny_gain = cost - trial_cost <= 1e-14 * cost;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if tiny_step || tiny_gain {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved || converged {
            break;
        }
    }
    // the model depends on hwhm only through its square
    p.hwhm = p.hwhm.abs();

    // parameter errors from the curvature at the solution
    let mut jtj = vec![vec![0.0; 4]; 4];
    for &xi in x {
        let row = lorentzian_jacobian_row(&p, xi);
        for a in 0..4 {
            for b in 0..4 {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    let dof = (n - 4).max(1) as f64;
    let sigma2 = cost / dof;
    let errs = match invert_small(&jtj) {
        Some(cov) => [
            (cov[0][0] * sigma2).max(0.0).sqrt(),
            (cov[1][1] * sigma2).max(0.0).sqrt(),
            (cov[2][2] * sigma2).max(0.0).sqrt(),
            (cov[3][3] * sigma2).max(0.0).sqrt(),
        ],
        None => [f64::INFINITY; 4],
    };

    Ok(LorentzianFit {
        params: p,
        param_errors: LorentzianParams {
            center: errs[0],
            hwhm: errs[1],
            peak: errs[2],
            offset: errs[3],
        },
        residual_rms: (cost / n as f64).sqrt(),
        converged,
    })
}

/// Parameters of the fringe model `y = offset + amplitude * sin^2(phi + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sin2Params {
    /// Peak-to-valley modulation depth.
    pub amplitude: f64,
    /// Fringe phase, reduced to [0, pi).
    pub phase: f64,
    /// Level of the fringe minima.
    pub offset: f64,
}

/// Result of [`fit_sin2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sin2Fit {
    /// Best-fit parameters.
    pub params: Sin2Params,
    /// One-sigma parameter errors.
    pub param_errors: Sin2Params,
    /// Fringe visibility amplitude / (amplitude + 2 offset).
    pub visibility: f64,
    /// One-sigma error of the visibility.
    pub visibility_error: f64,
    /// Root-mean-square residual of the fit.
    pub residual_rms: f64,
    /// Always true: the model is solved exactly in linearized form.
    pub converged: bool,
}

/// Fit `y = offset + amplitude * sin^2(phi + phase)` exactly via the
/// equivalent linear model `c0 + c1 cos(2 phi) + c2 sin(2 phi)`.
pub fn fit_sin2(phi: &[f64], y: &[f64]) -> Result<Sin2Fit> {
    validate_xy(phi, y, 4)?;
    // need at least 3 distinct abscissae modulo pi for the linear basis
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for &p in phi {
        let c = (2.0 * p).cos();
        let s = (2.0 * p).sin();
        if !distinct
            .iter()
            .any(|&(c0, s0)| (c - c0).abs() < 1e-12 && (s - s0).abs() < 1e-12)
        {
            distinct.push((c, s));
        }
    }
    ensure!(
        distinct.len() >= 3,
        "phi",
        "need at least 3 distinct phases modulo pi"
    );

    // normal equations for the linear basis [1, cos 2phi, sin 2phi]
    let mut btb = vec![vec![0.0; 3]; 3];
    let mut bty = vec![0.0; 3];
    for (&p, &yi) in phi.iter().zip(y) {
        let row = [1.0, (2.0 * p).cos(), (2.0 * p).sin()];
        for a in 0..3 {
            bty[a] += row[a] * yi;
            for b in 0..3 {
                btb[a][b] += row[a] * row[b];
            }
        }
    }
    let cov_base = invert_small(&btb)
        .ok_or_else(|| Error::Fit("sin^2 normal equations are singular".into()))?;
    let c = {
        let mut m = btb.clone();
        let mut rhs = bty.clone();
        solve_small(&mut m, &mut rhs)
            .ok_or_else(|| Error::Fit("sin^2 normal equations are singular".into()))?
    };

    let s = c[1].hypot(c[2]); // = amplitude / 2
    let amplitude = 2.0 * s;
    let phase = if s == 0.0 {
        0.0
    } else {
        let two_phase = c[2].atan2(-c[1]);
        (two_phase / 2.0).rem_euclid(std::f64::consts::PI)
    };
    let offset = c[0] - s;
    let visibility = if s == 0.0 { 0.0 } else { s / c[0] };

    let n = phi.len();
    let mut cost = 0.0;
    for (&p, &yi) in phi.iter().zip(y) {
        let r = yi - (c[0] + c[1] * (2.0 * p).cos() + c[2] * (2.0 * p).sin());
        cost += r * r;
    }
    let dof = (n - 3).max(1) as f64;
    let sigma2 = cost / dof;

    // delta method through amp = 2s, phase = atan2(c2, -c1)/2, off = c0 - s,
    // V = s / c0
    let grad_for = |which: usize| -> [f64; 3] {
        match which {
            0 if s > 0.0 => [0.0, 2.0 * c[1] / s, 2.0 * c[2] / s],
            1 if s > 0.0 => [0.0, c[2] / (2.0 * s * s), -c[1] / (2.0 * s * s)],
            2 if s > 0.0 => [1.0, -c[1] / s, -c[2] / s],
            3 if s > 0.0 && c[0] != 0.0 => [
                -s / (c[0] * c[0]),
                c[1] / (s * c[0]),
                c[2] / (s * c[0]),
            ],
            2 => [1.0, 0.0, 0.0],
            _ => [0.0, 0.0, 0.0],
        }
    };
    let var_of = |g: [f64; 3]| -> f64 {
        let mut v = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                v += g[a] * cov_base[a][b] * g[b];
            }
        }
        (v * sigma2).max(0.0)
    };

    Ok(Sin2Fit {
        params: Sin2Params {
            amplitude,
            phase,
            offset,
        },
        param_errors: Sin2Params {
            amplitude: var_of(grad_for(0)).sqrt(),
            phase: var_of(grad_for(1)).sqrt(),
            offset: var_of(grad_for(2)).sqrt(),
        },
        visibility,
        visibility_error: var_of(grad_for(3)).sqrt(),
        residual_rms: (cost / n as f64).sqrt(),
        converged: true,
    })
}
