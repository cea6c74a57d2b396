//! Green functions, pole orders in the spectral parameter, and
//! transmission/reflection coefficients.

use crate::diffop::{apply_h_fn, GridSpec, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::model::{extrapolate_to_zero, ModelKind, ModelParams};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

type C = Complex64;
const I: C = C::new(0.0, 1.0);

pub const DEFAULT_RADII: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
pub const DEFAULT_THETA: f64 = 0.75 * PI;
/// Base of the asymptotic sampling ladder `±x₀·2^j`.
pub const ASYMPTOTIC_BASE: f64 = 200.0;
const ASYMPTOTIC_LEVELS: usize = 5;
const CUT_TOL: f64 = 1e-14;
const POLE_TOL: f64 = 1e-13;
const ASYMPTOTE_TOL: f64 = 1e-7;
const DERIVATIVE_STEP: f64 = 1e-2;

/// `√λ` on the sheet `Im√λ ≥ 0`; the positive real axis is the cut.
pub fn branch_sqrt(lambda: C) -> Result<C> {
    if !(lambda.re.is_finite() && lambda.im.is_finite()) {
        return Err(Error::Parameter("spectral parameter must be finite".into()));
    }
    if lambda.im.abs() <= CUT_TOL * lambda.norm().max(1.0) && lambda.re >= 0.0 {
        return Err(Error::OnCut);
    }
    let k = lambda.sqrt();
    Ok(if k.im < 0.0 { -k } else { k })
}

/// `G(x,x';λ) = (πi/√λ) ψ(x_>;√λ) ψ(x_<;−√λ)`.
pub fn green(params: &ModelParams, lambda: C, x: f64, xp: f64) -> Result<C> {
    let k = branch_sqrt(lambda)?;
    check_pole(params, k)?;
    let (hi, lo) = if x >= xp { (x, xp) } else { (xp, x) };
    Ok(branch(params, k, hi, lo))
}

fn check_pole(params: &ModelParams, k: C) -> Result<()> {
    let d = params.momentum_denominator(k) * params.momentum_denominator(-k);
    let scale = (1.0 + k.norm()).powi(4);
    if k.norm() <= POLE_TOL || d.norm() <= POLE_TOL * scale {
        return Err(Error::AtPole);
    }
    Ok(())
}

/// The closed form for `x ≥ x'`, evaluated at any `x`.
fn branch(params: &ModelParams, k: C, x: f64, xp: f64) -> C {
    PI * I / k * params.continuum_value(x, k) * params.continuum_value(xp, -k)
}

/// Central fourth-order derivative.
fn derivative<F: Fn(f64) -> C>(f: F, x: f64, h: f64) -> C {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// `∂ₓG(x'−0) − ∂ₓG(x'+0)`, equal to 1 when `(h−λ)G = δ(x−x')`.
pub fn derivative_jump(params: &ModelParams, lambda: C, xp: f64) -> Result<C> {
    let k = branch_sqrt(lambda)?;
    check_pole(params, k)?;
    let right = derivative(|x| branch(params, k, x, xp), xp, 1e-3);
    let left = derivative(|x| branch(params, k, xp, x), xp, 1e-3);
    Ok(left - right)
}

/// Sup of `|(h−λ)G(·,x')|` on `[x'+gap, x'+gap+width]` and its mirror.
pub fn green_residual(params: &ModelParams, lambda: C, xp: f64, gap: f64, width: f64) -> Result<f64> {
    let k = branch_sqrt(lambda)?;
    check_pole(params, k)?;
    let mut worst = 0.0f64;
    for (lo, hi) in [(xp + gap, xp + gap + width), (xp - gap - width, xp - gap)] {
        let grid = GridSpec::new(lo, hi, width / 200.0)?;
        let g = |x: f64| if x >= xp { branch(params, k, x, xp) } else { branch(params, k, xp, x) };
        let hg = apply_h_fn(params, g, &grid, DEFAULT_ORDER)?;
        for (i, v) in hg.iter().enumerate() {
            worst = worst.max((v - lambda * g(grid.point(i))).norm());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize)]
pub struct PoleFit {
    pub lambda0: C,
    pub theta: f64,
    pub radii: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Slope of `ln|G|` against `ln r`.
    pub slope: f64,
    /// `−slope`.
    pub order: f64,
    /// Largest deviation of a local two-point slope from the fitted slope.
    pub spread: f64,
}

pub fn pole_order(params: &ModelParams, lambda0: C, radii: &[f64], theta: f64, x: f64, xp: f64) -> Result<PoleFit> {
    if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Parameter("need at least two positive probe radii".into()));
    }
    let probe = C::from_polar(1.0, theta);
    let mut mags = Vec::with_capacity(radii.len());
    for &r in radii {
        let lambda = lambda0 + r * probe;
        mags.push(green(params, lambda, x, xp)?.norm());
    }
    let lr: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let lg: Vec<f64> = mags.iter().map(|m| m.ln()).collect();
    let (slope, _) = linear_fit(&lr, &lg).ok_or_else(|| Error::FitUnstable("degenerate radii".into()))?;
    if !slope.is_finite() {
        return Err(Error::FitUnstable("non-finite slope".into()));
    }
    let spread = lr
        .windows(2)
        .zip(lg.windows(2))
        .map(|(a, b)| ((b[1] - b[0]) / (a[1] - a[0]) - slope).abs())
        .fold(0.0, f64::max);
    if spread > 0.25 {
        return Err(Error::FitUnstable(format!("local slopes spread by {spread:.3}")));
    }
    Ok(PoleFit { lambda0, theta, radii: radii.to_vec(), magnitudes: mags, slope, order: -slope, spread })
}

/// The spectral points the models' Green functions are singular at.
pub fn singular_points(params: &ModelParams) -> Vec<C> {
    let a = params.alpha();
    match params.kind() {
        ModelKind::JordanBound => vec![-a * a],
        ModelKind::TwoLevel => {
            let b = params.beta();
            vec![-(a + b) * (a + b), -(a - b) * (a - b)]
        }
        ModelKind::Threshold => vec![C::new(0.0, 0.0)],
        ModelKind::ContinuumBs => vec![a * a],
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Transmission {
    pub k: f64,
    pub t: C,
    pub r: C,
    pub printed: C,
    /// Spread between the last two extrapolation levels, relative to `|T|`.
    pub extrapolation_error: f64,
}

/// `S(x) = √(2π) e^{−ikx} ψ(x;k)`, slowly varying.
fn envelope(params: &ModelParams, c: &[C], x: f64) -> C {
    params.continuum_basis(x).iter().zip(c).map(|(g, c)| g * c).sum()
}

/// Sample points `x₀·2^j`, snapped to whole periods of the oscillating part.
fn ladder(params: &ModelParams) -> Vec<f64> {
    (0..ASYMPTOTIC_LEVELS)
        .map(|j| {
            let x = ASYMPTOTIC_BASE * 2f64.powi(j as i32);
            match params.spatial_period() {
                Some(p) => (x / p).round() * p,
                None => x,
            }
        })
        .collect()
}

fn extrapolate(xs: &[f64], f: &[C]) -> (C, C) {
    let h: Vec<f64> = xs.iter().map(|x| 1.0 / x.abs()).collect();
    let n = h.len();
    (extrapolate_to_zero(&h, f), extrapolate_to_zero(&h[..n - 1], &f[..n - 1]))
}

/// Writing `ψ = e^{ikx}S` with `ψ ≈ a e^{ikx} + b e^{−ikx}` gives
/// `a = S + S'/(2ik)` and `b e^{−2ikx} = −S'/(2ik)`, so the incoming and reflected
/// amplitudes follow from limits of the slowly varying `S` and `S'`.
pub fn transmission(params: &ModelParams, k: f64) -> Result<Transmission> {
    let kc = C::new(k, 0.0);
    if !(k.is_finite() && k != 0.0) || params.momentum_denominator(kc).norm() <= 1e-300 {
        return Err(Error::ExcludedMomentum(k));
    }
    let c = params.continuum_coefficients(kc, false);
    let s = |x: f64| envelope(params, &c, x);
    let xs = ladder(params);
    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut left_slope = Vec::new();
    let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
    for (&xp, &xm) in xs.iter().zip(&neg) {
        let dp = derivative(s, xp, DERIVATIVE_STEP);
        let dm = derivative(s, xm, DERIVATIVE_STEP);
        right.push(s(xp) + dp / (2.0 * I * kc));
        left.push(s(xm) + dm / (2.0 * I * kc));
        left_slope.push(dm);
    }
    let (a_plus, a_plus2) = extrapolate(&xs, &right);
    let (a_minus, a_minus2) = extrapolate(&neg, &left);
    let (slope, slope2) = extrapolate(&neg, &left_slope);
    if a_minus.norm() == 0.0 {
        return Err(Error::AsymptoteNotReached("vanishing incoming amplitude".into()));
    }
    let t = a_plus / a_minus;
    let r = -slope / (2.0 * I * kc) / a_minus;
    let err = ((a_plus - a_plus2).norm() + (a_minus - a_minus2).norm()) / a_minus.norm()
        + (slope - slope2).norm() / (2.0 * k.abs() * a_minus.norm());
    if err > ASYMPTOTE_TOL * t.norm().max(1.0) {
        return Err(Error::AsymptoteNotReached(format!("extrapolation spread {err:e} at k = {k}")));
    }
    Ok(Transmission { k, t, r, printed: params.transmission_formula(k), extrapolation_error: err })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models() -> Vec<ModelParams> {
        vec![
            ModelParams::jordan_bound(1.0, I).unwrap(),
            ModelParams::two_level(C::new(1.0, 0.0), 0.3, I).unwrap(),
            ModelParams::threshold(1, I).unwrap(),
            ModelParams::threshold(2, C::new(0.3, 1.0)).unwrap(),
            ModelParams::continuum_bs(0.7, I).unwrap(),
        ]
    }

    #[test]
    fn branch_rule() {
        for l in [C::new(-1.0, 0.0), C::new(1.0, 1e-3), C::new(1.0, -1e-3), C::new(-2.0, -3.0)] {
            assert!(branch_sqrt(l).unwrap().im >= 0.0);
        }
        assert_eq!(branch_sqrt(C::new(2.0, 0.0)), Err(Error::OnCut));
        let p = ModelParams::jordan_bound(1.0, I).unwrap();
        assert_eq!(green(&p, C::new(-1.0, 0.0), 0.1, 0.2), Err(Error::AtPole));
    }

    #[test]
    fn green_function_properties() {
        let lambda = C::new(-0.3, 0.7);
        for p in models() {
            let g1 = green(&p, lambda, 0.4, -1.1).unwrap();
            let g2 = green(&p, lambda, -1.1, 0.4).unwrap();
            assert!((g1 - g2).norm() < 1e-14);
            let jump = derivative_jump(&p, lambda, 0.3).unwrap();
            assert!((jump - 1.0).norm() < 1e-6, "{:?} {jump}", p.kind());
            let res = green_residual(&p, lambda, 0.3, 0.5, 2.0).unwrap();
            assert!(res < 1e-6, "{:?} {res}", p.kind());
        }
    }

    #[test]
    fn pole_orders() {
        let jb = ModelParams::jordan_bound(1.0, I).unwrap();
        let f = pole_order(&jb, C::new(-1.0, 0.0), &DEFAULT_RADII, DEFAULT_THETA, 0.3, -0.7).unwrap();
        assert!((f.order - 2.0).abs() < 0.05, "{}", f.order);
        let tl = ModelParams::two_level(C::new(1.0, 0.0), 0.3, I).unwrap();
        for l in singular_points(&tl) {
            let f = pole_order(&tl, l, &DEFAULT_RADII, DEFAULT_THETA, 0.3, -0.7).unwrap();
            assert!((f.order - 1.0).abs() < 0.05, "{l} {}", f.order);
        }
        let th = ModelParams::threshold(1, I).unwrap();
        let f = pole_order(&th, C::new(0.0, 0.0), &DEFAULT_RADII, DEFAULT_THETA, 0.3, -0.7).unwrap();
        assert!((f.slope + 1.5).abs() < 0.05, "{}", f.slope);
    }

    #[test]
    fn transmission_matches_printed_forms() {
        for p in models() {
            for k in [0.5, 1.0, 2.0] {
                let t = transmission(&p, k).unwrap();
                assert!((t.t - t.printed).norm() < 1e-6, "{:?} k={k} {} {}", p.kind(), t.t, t.printed);
                assert!(t.r.norm() < 1e-8, "{:?} k={k} R={}", p.kind(), t.r);
                assert!((t.t.norm() - 1.0).abs() < 1e-6);
            }
        }
        let bic = ModelParams::continuum_bs(1.0, I).unwrap();
        for k in [0.5, 2.0] {
            assert!((transmission(&bic, k).unwrap().t - 1.0).norm() < 1e-6);
        }
        let jb = ModelParams::jordan_bound(1.0, I).unwrap();
        assert!((transmission(&jb, 1.0).unwrap().t + 1.0).norm() < 1e-6);
        let far = transmission(&jb, 50.0).unwrap();
        assert!((far.t - 1.0).norm() < (transmission(&jb, 5.0).unwrap().t - 1.0).norm());
    }

    #[test]
    fn excluded_momentum() {
        let p = ModelParams::continuum_bs(1.0, I).unwrap();
        assert_eq!(transmission(&p, 1.0).unwrap_err(), Error::ExcludedMomentum(1.0));
    }
}
