//! Finite-difference application of `h = -∂² + V` and residuals of the
//! eigen- and chain relations of each model.

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams, SpectralFunction};
use num_complex::Complex64;
use serde::Serialize;

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    lo: f64,
    hi: f64,
    step: f64,
    intervals: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi <= lo {
            return Err(Error::Parameter(format!("bad grid [{lo}, {hi}] step {step}")));
        }
        let q = (hi - lo) / step;
        let n = q.round();
        if (q - n).abs() > 1e-9 * q.max(1.0) || n < 16.0 {
            return Err(Error::Parameter(format!(
                "grid length / step = {q} must be an integer of at least 16"
            )));
        }
        Ok(GridSpec { lo, hi, step, intervals: n as usize })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
    pub fn step(&self) -> f64 {
        self.step
    }
    pub fn len(&self) -> usize {
        self.intervals + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Same interval with half the step.
    pub fn refined(&self) -> GridSpec {
        GridSpec { step: self.step / 2.0, intervals: self.intervals * 2, ..*self }
    }
}

/// One-sided central weights `c₀, c₁, …, c_m` of the second-derivative stencil.
fn second_derivative_weights(order: u32) -> Result<&'static [f64]> {
    match order {
        2 => Ok(&[-2.0, 1.0]),
        4 => Ok(&[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0]),
        6 => Ok(&[-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0]),
        8 => Ok(&[-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0]),
        _ => Err(Error::Parameter(format!("stencil order {order} not in {{2, 4, 6, 8}}"))),
    }
}

pub const DEFAULT_ORDER: u32 = 8;

/// `-∂² f` on the grid nodes.  `f` is sampled on a grid enlarged by the
/// stencil half-width.
pub fn apply_kinetic_fn<F: Fn(f64) -> C>(f: F, grid: &GridSpec, order: u32) -> Result<Vec<C>> {
    let w = second_derivative_weights(order)?;
    let m = w.len() - 1;
    let h = grid.step;
    let samples: Vec<C> = (0..grid.len() + 2 * m)
        .map(|i| f(grid.lo + h * (i as f64 - m as f64)))
        .collect();
    let inv = 1.0 / (h * h);
    Ok((0..grid.len())
        .map(|i| {
            let c = i + m;
            let mut d2 = w[0] * samples[c];
            for (j, wj) in w.iter().enumerate().skip(1) {
                d2 += *wj * (samples[c + j] + samples[c - j]);
            }
            -d2 * inv
        })
        .collect())
}

/// `(-∂² + V) f` on the grid nodes.
pub fn apply_h_fn<F: Fn(f64) -> C>(params: &ModelParams, f: F, grid: &GridSpec, order: u32) -> Result<Vec<C>> {
    let samples: Vec<C> = (0..grid.len()).map(|i| f(grid.point(i))).collect();
    let kin = apply_kinetic_fn(f, grid, order)?;
    kin.iter()
        .zip(&samples)
        .enumerate()
        .map(|(i, (k, s))| Ok(k + params.potential(grid.point(i))? * s))
        .collect()
}

/// `-f''(x)` from the central stencil of the given order and step.
pub fn kinetic_at<F: Fn(f64) -> C>(f: F, x: f64, step: f64, order: u32) -> Result<C> {
    let w = second_derivative_weights(order)?;
    let mut d2 = w[0] * f(x);
    for (j, wj) in w.iter().enumerate().skip(1) {
        let d = step * j as f64;
        d2 += *wj * (f(x + d) + f(x - d));
    }
    Ok(-d2 / (step * step))
}

pub fn apply_h(params: &ModelParams, f: &SpectralFunction, grid: &GridSpec, order: u32) -> Result<Vec<C>> {
    apply_h_fn(params, |x| f.eval(x), grid, order)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub relation: String,
    pub sup_norm: f64,
    pub grid: GridSpec,
    pub order: u32,
}

/// Sup norm of `(h − λ) f − g` over the grid.
pub fn residual(
    params: &ModelParams,
    f: &SpectralFunction,
    lambda: C,
    rhs: Option<&SpectralFunction>,
    grid: &GridSpec,
    order: u32,
) -> Result<f64> {
    let hf = apply_h(params, f, grid, order)?;
    let mut sup = 0.0f64;
    for (i, v) in hf.iter().enumerate() {
        let x = grid.point(i);
        let g = rhs.map_or(C::new(0.0, 0.0), |r| r.eval(x));
        sup = sup.max((v - lambda * f.eval(x) - g).norm());
    }
    if !sup.is_finite() {
        return Err(Error::Convergence("residual is not finite".into()));
    }
    Ok(sup)
}

pub const CONTINUUM_SAMPLES: [f64; 3] = [0.7, 1.5, -2.3];

pub fn default_grid() -> GridSpec {
    GridSpec::new(-20.0, 20.0, 5e-3).expect("static grid")
}

/// One report per printed differential identity of the model.
pub fn chain_residuals(params: &ModelParams) -> Vec<ResidualReport> {
    chain_residuals_on(params, &default_grid(), DEFAULT_ORDER)
}

pub fn chain_residuals_on(params: &ModelParams, grid: &GridSpec, order: u32) -> Vec<ResidualReport> {
    let states = params.bound_states();
    let mut out = Vec::new();
    let mut push = |relation: String, r: Result<f64>| {
        out.push(ResidualReport { relation, sup_norm: r.unwrap_or(f64::INFINITY), grid: *grid, order });
    };
    match params.kind() {
        ModelKind::TwoLevel => {
            for s in &states {
                push(format!("(h - lambda){} = 0", s.label()), residual(params, s, s.lambda(), None, grid, order));
            }
        }
        _ => {
            for (j, s) in states.iter().enumerate() {
                let rhs = if j == 0 { None } else { Some(&states[j - 1]) };
                let text = match rhs {
                    None => format!("(h - lambda){} = 0", s.label()),
                    Some(r) => format!("(h - lambda){} = {}", s.label(), r.label()),
                };
                push(text, residual(params, s, s.lambda(), rhs, grid, order));
            }
        }
    }
    for k in CONTINUUM_SAMPLES {
        let text = format!("(h - k^2)psi(k) = 0 at k = {k}");
        match params.continuum_state(k) {
            Ok(s) => push(text, residual(params, &s, C::new(k * k, 0.0), None, grid, order)),
            Err(e) => push(text, Err(e)),
        }
    }
    out
}
