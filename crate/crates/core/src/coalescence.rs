//! The `β → 0` coalescence of the two-level model's bound states into the
//! Jordan cell of the bound-state model.

use crate::biorthogonality::binorm;
use crate::diffop::GridSpec;
use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::model::{ModelParams, SpectralFunction};
use num_complex::Complex64;
use serde::Serialize;

type C = Complex64;
const I: C = C::new(0.0, 1.0);

pub const DEFAULT_BETAS: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 0.00625];
pub const GRID_HALF_WIDTH: f64 = 15.0;
const GRID_STEP: f64 = 0.01;
const TRACE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct CoalescenceSeries {
    pub quantity: String,
    pub betas: Vec<f64>,
    pub errors: Vec<f64>,
    /// Fitted `p` in `error ∝ β^p`.
    pub order: Option<f64>,
    pub monotone: bool,
}

impl CoalescenceSeries {
    fn new(quantity: &str, betas: &[f64], errors: Vec<f64>) -> Self {
        CoalescenceSeries {
            quantity: quantity.into(),
            betas: betas.to_vec(),
            order: log_log_slope(betas, &errors),
            monotone: errors.windows(2).all(|w| w[1] <= w[0]),
            errors,
        }
    }
}

fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() || betas.windows(2).any(|w| w[1] >= w[0]) || betas.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::Parameter("beta sequence must be positive and strictly decreasing".into()));
    }
    Ok(())
}

fn grid() -> Vec<f64> {
    GridSpec::new(-GRID_HALF_WIDTH, GRID_HALF_WIDTH, GRID_STEP).expect("fixed grid").points()
}

fn sup<F: Fn(f64) -> C>(xs: &[f64], f: F) -> f64 {
    xs.iter().map(|&x| f(x).norm()).fold(0.0, f64::max)
}

/// `(ψ₊, ψ₋)` of the two-level model at `β`.
fn pair_at(alpha: f64, z: C, beta: f64) -> Result<(SpectralFunction, SpectralFunction)> {
    let b = ModelParams::two_level(C::new(alpha, 0.0), beta, z)?.bound_states();
    Ok((b[0], b[1]))
}

fn jordan(alpha: f64, z: C) -> Result<(SpectralFunction, SpectralFunction)> {
    let b = ModelParams::jordan_bound(alpha, z)?.bound_states();
    Ok((b[0], b[1]))
}

/// Sup-norm errors of `2√α√β ψ₋ − ψ₀` and `−2i√α√β ψ₊ − ψ₀`.
pub fn coalesce_psi0(alpha: f64, z: C, betas: &[f64]) -> Result<[CoalescenceSeries; 2]> {
    check_betas(betas)?;
    let (psi0, _) = jordan(alpha, z)?;
    let xs = grid();
    let s = 2.0 * alpha.sqrt();
    let mut minus = Vec::with_capacity(betas.len());
    let mut plus = Vec::with_capacity(betas.len());
    for &b in betas {
        let (pp, pm) = pair_at(alpha, z, b)?;
        let rb = b.sqrt();
        minus.push(sup(&xs, |x| s * rb * pm.eval(x) - psi0.eval(x)));
        plus.push(sup(&xs, |x| -I * s * rb * pp.eval(x) - psi0.eval(x)));
    }
    Ok([CoalescenceSeries::new("psi0 from psi-", betas, minus), CoalescenceSeries::new("psi0 from psi+", betas, plus)])
}

/// `λ₋ − λ₊` of the two-level model, `4αβ`.
pub fn level_splitting(alpha: f64, beta: f64) -> Result<f64> {
    let b = ModelParams::two_level(C::new(alpha, 0.0), beta, C::new(0.0, 1.0))?.bound_states();
    Ok((b[1].lambda() - b[0].lambda()).re)
}

/// Approximation of `ψ₁` at `β` by a central difference of `√β(ψ₋ + iψ₊)`
/// with step `β/2`, divided by `∂_β(λ₋−λ₊) = 4α`.
pub fn psi1_estimate(alpha: f64, z: C, beta: f64, xs: &[f64]) -> Result<Vec<C>> {
    let h = 0.5 * beta;
    let (pa, ma) = pair_at(alpha, z, beta + h)?;
    let (pb, mb) = pair_at(alpha, z, beta - h)?;
    let f = |p: &SpectralFunction, m: &SpectralFunction, b: f64, x: f64| b.sqrt() * (m.eval(x) + I * p.eval(x));
    let scale = 2.0 * alpha.sqrt() / (4.0 * alpha);
    let mut out = Vec::with_capacity(xs.len());
    let mut diff_max = 0.0f64;
    let mut size_max = 0.0f64;
    for &x in xs {
        let up = f(&pa, &ma, beta + h, x);
        let down = f(&pb, &mb, beta - h, x);
        diff_max = diff_max.max((up - down).norm());
        size_max = size_max.max(up.norm().max(down.norm()));
        out.push(scale * (up - down) / (2.0 * h));
    }
    if diff_max <= 1e3 * f64::EPSILON * size_max {
        return Err(Error::Convergence(format!("beta difference at beta={beta} is at the round-off level")));
    }
    Ok(out)
}

pub fn coalesce_psi1(alpha: f64, z: C, betas: &[f64]) -> Result<CoalescenceSeries> {
    check_betas(betas)?;
    let (_, psi1) = jordan(alpha, z)?;
    let xs = grid();
    let mut errors = Vec::with_capacity(betas.len());
    for &b in betas {
        let est = psi1_estimate(alpha, z, b, &xs)?;
        errors.push(xs.iter().zip(&est).map(|(&x, e)| (e - psi1.eval(x)).norm()).fold(0.0, f64::max));
    }
    Ok(CoalescenceSeries::new("psi1", betas, errors))
}

/// `|ψ₊ψ₊' + ψ₋ψ₋' − (ψ₀ψ₁' + ψ₁ψ₀')|` at `(x, x')`.
pub fn coalesce_kernel(alpha: f64, z: C, betas: &[f64], x: f64, xp: f64) -> Result<CoalescenceSeries> {
    check_betas(betas)?;
    let (p0, p1) = jordan(alpha, z)?;
    let limit = p0.eval(x) * p1.eval(xp) + p1.eval(x) * p0.eval(xp);
    let mut errors = Vec::with_capacity(betas.len());
    for &b in betas {
        let (pp, pm) = pair_at(alpha, z, b)?;
        let v = pp.eval(x) * pp.eval(xp) + pm.eval(x) * pm.eval(xp);
        errors.push((v - limit).norm());
    }
    Ok(CoalescenceSeries::new(&format!("kernel({x},{xp})"), betas, errors))
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceCheck {
    pub betas: Vec<f64>,
    /// `∫(ψ₊² + ψ₋²)dx` per `β`.
    pub traces: Vec<C>,
    /// `∫(ψ₀ψ₁ + ψ₁ψ₀)dx`.
    pub limit: C,
}

pub fn discrete_trace(alpha: f64, z: C, betas: &[f64]) -> Result<TraceCheck> {
    check_betas(betas)?;
    let mut traces = Vec::with_capacity(betas.len());
    for &b in betas {
        let (pp, pm) = pair_at(alpha, z, b)?;
        traces.push(binorm(&pp, &pp, TRACE_TOL)? + binorm(&pm, &pm, TRACE_TOL)?);
    }
    let (p0, p1) = jordan(alpha, z)?;
    let limit = 2.0 * binorm(&p0, &p1, TRACE_TOL)?;
    Ok(TraceCheck { betas: betas.to_vec(), traces, limit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi0_limit_from_both_levels() {
        let [m, p] = coalesce_psi0(1.0, I, &[1e-2, 1e-3]).unwrap();
        assert!(m.errors[1] < 1e-2 && p.errors[1] < 1e-2, "{:?} {:?}", m.errors, p.errors);
        assert!(m.monotone && p.monotone);
    }

    #[test]
    fn psi1_limit() {
        let s = coalesce_psi1(1.0, I, &DEFAULT_BETAS).unwrap();
        assert!(s.monotone, "{:?}", s.errors);
        assert!(s.order.unwrap() >= 1.0 - 0.05, "{:?}", s.order);
        let s = coalesce_psi1(1.0, I, &[1e-2]).unwrap();
        assert!(s.errors[0] < 1e-2);
    }

    #[test]
    fn splitting_is_linear_in_beta() {
        for b in [0.1, 0.01, 0.3] {
            assert!((level_splitting(1.0, b).unwrap() - 4.0 * b).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_limit() {
        let s = coalesce_kernel(1.0, I, &[1e-2, 1e-3], 0.3, -0.7).unwrap();
        assert!(s.errors[1] < 1e-2);
        let d = coalesce_kernel(1.0, I, &[1e-3], 0.4, 0.4).unwrap();
        assert!(d.errors[0] < 1e-2);
    }

    #[test]
    fn trace_is_two() {
        let t = discrete_trace(1.0, I, &[0.1, 0.01]).unwrap();
        for v in &t.traces {
            assert!((v - 2.0).norm() < 1e-8, "{v}");
        }
        assert!((t.limit - 2.0).norm() < 1e-8);
    }

    #[test]
    fn invalid_sequences() {
        assert!(coalesce_psi0(1.0, I, &[0.01, 0.1]).is_err());
        assert!(coalesce_psi0(1.0, I, &[0.1, 0.0]).is_err());
        assert!(ModelParams::two_level(C::new(1.0, 0.0), 0.0, I).is_err());
    }
}
