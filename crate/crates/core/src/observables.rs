//! Gaussian-packet regularization of expectation values in the threshold
//! model, and the averaging prescriptions for general states.

use crate::diffop::{apply_h_fn, apply_kinetic_fn, kinetic_at, GridSpec, DEFAULT_ORDER};
use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::model::{extrapolate_to_zero, ModelParams, SpectralFunction};
use crate::quadrature::{integrate_real_line, Adaptive, QuadResult, RealLineOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;
const I: C = C::new(0.0, 1.0);

/// Smallest packet width parameter accepted by the public entry points.
pub const EPS_MIN: f64 = 1e-4;
const ABS_TOL: f64 = 1e-12;
const REL_TOL: f64 = 1e-10;
const GRID_STEP: f64 = 0.02;
const CANCELLATION_FLOOR: f64 = 1024.0 * f64::EPSILON;
const CONTOUR_SHIFT: f64 = 1.0;
/// Packet widths used to extrapolate `⟨V⟩/ε^{3/2}` in `√ε`.
const ORACLE_EPS: [f64; 3] = [4e-4, 1e-4, 2.5e-5];
const TYPO_REL_TOL: f64 = 1e-3;

pub fn printed_binorm_prefactor() -> f64 {
    (PI / 8.0).sqrt()
}
pub fn printed_total_prefactor() -> f64 {
    (9.0 * PI / 128.0).sqrt()
}
pub fn printed_potential_prefactor() -> f64 {
    -(25.0 * PI / 36.0).sqrt()
}

/// `ψ_ε(x) = (εx/2 + 1/(x−z))·exp(−εx²/4)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PacketParams {
    epsilon: f64,
    z: C,
}

impl PacketParams {
    pub fn new(epsilon: f64, z: C) -> Result<Self> {
        if !(epsilon >= EPS_MIN && epsilon <= 1.0) {
            return Err(Error::Parameter(format!("packet epsilon {epsilon} outside [{EPS_MIN}, 1]")));
        }
        Self::unchecked(epsilon, z)
    }

    fn unchecked(epsilon: f64, z: C) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter("epsilon must be positive".into()));
        }
        if z.im == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::Parameter("Im z must be nonzero".into()));
        }
        Ok(PacketParams { epsilon, z })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn z(&self) -> C {
        self.z
    }

    pub fn eval(&self, x: f64) -> C {
        self.eval_c(C::new(x, 0.0))
    }

    fn eval_c(&self, x: C) -> C {
        let e = self.epsilon;
        (0.5 * e * x + 1.0 / (x - self.z)) * (-0.25 * e * x * x).exp()
    }

    /// `hψ_ε` from `h = (−∂ + w)(∂ + w)`, `w = 1/(x−z)`: since
    /// `(∂ + w)(−∂ + w) = −∂²`, `hψ_ε = (−∂ + w)(−g'')` with `g = e^{−εx²/4}`.
    pub fn h_eval(&self, x: f64) -> C {
        self.h_eval_c(C::new(x, 0.0))
    }

    fn h_eval_c(&self, x: C) -> C {
        let e = self.epsilon;
        let q = 0.5 * e - 0.25 * e * e * x * x;
        (0.5 * e * e * x + q * (0.5 * e * x + 1.0 / (x - self.z))) * (-0.25 * e * x * x).exp()
    }

    /// `2ψ_ε/(x−z)²`.
    pub fn v_eval(&self, x: f64) -> C {
        self.v_eval_c(C::new(x, 0.0))
    }

    fn v_eval_c(&self, x: C) -> C {
        let w = x - self.z;
        2.0 * self.eval_c(x) / (w * w)
    }

    /// Radius beyond which `ψ_ε²` is below `e^{−40}` of its Gaussian scale.
    fn reach(&self) -> f64 {
        (80.0 / self.epsilon).sqrt()
    }

    fn threshold_model(&self) -> Result<ModelParams> {
        ModelParams::threshold(1, self.z)
    }

    /// `∫f(x)dx` for `f` analytic off `x = z`, taken along `Im x = −sign(Im z)`
    /// where the integrand stays away from the pole. The absolute target is
    /// raised to the cancellation floor `∝ ε_mach·∫|f|`.
    fn integrate<F: Fn(C) -> C>(&self, f: F) -> Result<QuadResult> {
        let x = self.reach();
        let shift = C::new(0.0, -CONTOUR_SHIFT * self.z.im.signum());
        let g = |t: f64| f(C::new(t, 0.0) + shift);
        let init = (x / 256.0).max(0.5);
        let mass = Adaptive::new(1e-6).with_rel_tol(1e-3).with_initial_width(init).integrate(|t| C::new(g(t).norm(), 0.0), -x, x)?.value.re;
        Adaptive::new(ABS_TOL.max(CANCELLATION_FLOOR * mass)).with_rel_tol(REL_TOL).with_initial_width(init).integrate(g, -x, x)
    }

    /// Step resolves the `1/(x−z)` peak of width `|Im z|`.
    fn grid(&self) -> Result<GridSpec> {
        let h = GRID_STEP.min(self.z.im.abs() / 20.0);
        let n = (self.reach() / h).ceil();
        GridSpec::new(-n * h, n * h, h)
    }
}

pub fn packet_eval(epsilon: f64, z: C, x: f64) -> Result<C> {
    Ok(PacketParams::unchecked(epsilon, z)?.eval(x))
}

/// `∫ dk/√(πε) (−ik + 1/(x−z)) e^{ikx − k²/ε}`, the momentum representation.
pub fn packet_momentum_integral(epsilon: f64, z: C, x: f64, tol: f64) -> Result<QuadResult> {
    let p = PacketParams::unchecked(epsilon, z)?;
    let kmax = (40.0 * epsilon).sqrt();
    let w = 1.0 / (x - p.z);
    let norm = 1.0 / (PI * epsilon).sqrt();
    Adaptive::new(tol).integrate(|k| norm * (-I * k + w) * (I * k * x - k * k / epsilon).exp(), -kmax, kmax)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Observable {
    Total,
    Potential,
    Kinetic,
}

impl Observable {
    pub const ALL: [Observable; 3] = [Observable::Total, Observable::Potential, Observable::Kinetic];

    pub fn name(self) -> &'static str {
        match self {
            Observable::Total => "total",
            Observable::Potential => "potential",
            Observable::Kinetic => "kinetic",
        }
    }

    pub fn printed_prefactor(self) -> f64 {
        match self {
            Observable::Total => printed_total_prefactor(),
            Observable::Potential => printed_potential_prefactor(),
            Observable::Kinetic => printed_total_prefactor() - printed_potential_prefactor(),
        }
    }
}

/// A packet quantity with its `ε`-scaled prefactor and the printed prefactor.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PacketValue {
    pub epsilon: f64,
    pub value: C,
    pub abs_error: f64,
    /// `value / ε^p` with `p = 1/2` for the binorm and `3/2` otherwise.
    pub prefactor: C,
    pub printed: f64,
}

impl PacketValue {
    fn new(p: &PacketParams, r: QuadResult, power: f64, printed: f64) -> Self {
        PacketValue {
            epsilon: p.epsilon,
            value: r.value,
            abs_error: r.abs_error,
            prefactor: r.value / p.epsilon.powf(power),
            printed,
        }
    }

    pub fn rel_deviation_from_printed(&self) -> f64 {
        (self.prefactor - self.printed).norm() / self.printed.abs()
    }
}

/// `∫ψ_ε² dx`.
pub fn packet_binorm(p: &PacketParams) -> Result<PacketValue> {
    let r = p.integrate(|x| p.eval_c(x) * p.eval_c(x))?;
    Ok(PacketValue::new(p, r, 0.5, printed_binorm_prefactor()))
}

/// `∫ψ_ε·(Oψ_ε) dx`; kinetic is total minus potential.
pub fn packet_ev(p: &PacketParams, which: Observable) -> Result<PacketValue> {
    let r = match which {
        Observable::Total => p.integrate(|x| p.eval_c(x) * p.h_eval_c(x))?,
        Observable::Potential => p.integrate(|x| p.eval_c(x) * p.v_eval_c(x))?,
        Observable::Kinetic => {
            let t = p.integrate(|x| p.eval_c(x) * p.h_eval_c(x))?;
            let v = p.integrate(|x| p.eval_c(x) * p.v_eval_c(x))?;
            QuadResult { value: t.value - v.value, abs_error: t.abs_error + v.abs_error, evaluations: t.evaluations + v.evaluations }
        }
    };
    Ok(PacketValue::new(p, r, 1.5, which.printed_prefactor()))
}

/// The same expectation value with `h` (or `−∂²`) applied by the
/// finite-difference stencil and the product summed on the grid.
pub fn packet_ev_stencil(p: &PacketParams, which: Observable) -> Result<C> {
    let grid = p.grid()?;
    let f = |x: f64| p.eval(x);
    let applied = match which {
        Observable::Total => apply_h_fn(&p.threshold_model()?, f, &grid, DEFAULT_ORDER)?,
        Observable::Kinetic => apply_kinetic_fn(f, &grid, DEFAULT_ORDER)?,
        Observable::Potential => (0..grid.len()).map(|i| p.v_eval(grid.point(i))).collect(),
    };
    Ok(applied.iter().enumerate().map(|(i, a)| f(grid.point(i)) * a).sum::<C>() * grid.step())
}

#[derive(Clone, Debug, Serialize)]
pub struct PacketStudy {
    pub z: C,
    pub eps: Vec<f64>,
    pub binorm: Vec<C>,
    pub total: Vec<C>,
    pub potential: Vec<C>,
    pub kinetic: Vec<C>,
    pub binorm_slope: Option<f64>,
    pub total_slope: Option<f64>,
    pub potential_slope: Option<f64>,
    pub kinetic_slope: Option<f64>,
    /// `⟨H⟩/binorm` per `ε`.
    pub total_ratio: Vec<C>,
    /// `⟨V⟩/binorm` per `ε`.
    pub potential_ratio: Vec<C>,
}

pub fn packet_study(eps: &[f64], z: C) -> Result<PacketStudy> {
    let mut s = PacketStudy {
        z,
        eps: eps.to_vec(),
        binorm: vec![],
        total: vec![],
        potential: vec![],
        kinetic: vec![],
        binorm_slope: None,
        total_slope: None,
        potential_slope: None,
        kinetic_slope: None,
        total_ratio: vec![],
        potential_ratio: vec![],
    };
    for &e in eps {
        let p = PacketParams::new(e, z)?;
        let b = packet_binorm(&p)?.value;
        let t = packet_ev(&p, Observable::Total)?.value;
        let v = packet_ev(&p, Observable::Potential)?.value;
        s.binorm.push(b);
        s.total.push(t);
        s.potential.push(v);
        s.kinetic.push(t - v);
        s.total_ratio.push(t / b);
        s.potential_ratio.push(v / b);
    }
    let slope = |v: &[C]| log_log_slope(eps, &v.iter().map(|c| c.norm()).collect::<Vec<_>>());
    s.binorm_slope = slope(&s.binorm);
    s.total_slope = slope(&s.total);
    s.potential_slope = slope(&s.potential);
    s.kinetic_slope = slope(&s.kinetic);
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct PrefactorReport {
    pub quantity: String,
    pub printed: f64,
    /// Independent quadrature value of the `ε → 0` prefactor.
    pub oracle: f64,
    pub rel_deviation: f64,
    pub suspected_typo: bool,
}

impl PrefactorReport {
    fn new(quantity: &str, printed: f64, oracle: f64) -> Self {
        let rel = (printed - oracle).abs() / oracle.abs();
        PrefactorReport { quantity: quantity.into(), printed, oracle, rel_deviation: rel, suspected_typo: rel > TYPO_REL_TOL }
    }
}

/// Oracle prefactors: the binorm and `⟨H⟩` are exact power laws and are read
/// at `ε = 10⁻²`; `⟨V⟩/ε^{3/2}` carries `√ε` corrections and is extrapolated
/// in `√ε` from small `ε`.
pub fn prefactor_reports(z: C) -> Result<Vec<PrefactorReport>> {
    let p = PacketParams::new(1e-2, z)?;
    let b = packet_binorm(&p)?.prefactor.re;
    let t = packet_ev(&p, Observable::Total)?.prefactor.re;
    let mut h = Vec::new();
    let mut f = Vec::new();
    for &e in &ORACLE_EPS {
        let q = PacketParams::unchecked(e, z)?;
        h.push(e.sqrt());
        f.push(packet_ev(&q, Observable::Potential)?.prefactor);
    }
    let v = extrapolate_to_zero(&h, &f).re;
    Ok(vec![
        PrefactorReport::new("binorm", printed_binorm_prefactor(), b),
        PrefactorReport::new("total", printed_total_prefactor(), t),
        PrefactorReport::new("potential", printed_potential_prefactor(), v),
        PrefactorReport::new("kinetic", Observable::Kinetic.printed_prefactor(), t - v),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Identity,
    Potential,
    Kinetic,
    Hamiltonian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prescription {
    /// Conjugated scalar product.
    Hermitian,
    /// Biorthogonal partner with conjugated coefficients.
    Binorm,
    /// Bare bilinear form, reported without dividing when it is `0/0`.
    Raw,
}

/// `Σ C_r ψ_r` over closed-form states of one model.
#[derive(Clone, Debug)]
pub struct Expansion {
    basis: Vec<SpectralFunction>,
    coeffs: Vec<C>,
}

impl Expansion {
    pub fn new(basis: Vec<SpectralFunction>, coeffs: Vec<C>) -> Result<Self> {
        if basis.is_empty() || basis.len() != coeffs.len() {
            return Err(Error::Parameter("basis and coefficients must be non-empty and of equal length".into()));
        }
        if basis.iter().any(|b| b.params() != basis[0].params()) {
            return Err(Error::Parameter("basis states must share one model".into()));
        }
        Ok(Expansion { basis, coeffs })
    }

    pub fn single(f: SpectralFunction) -> Self {
        Expansion { basis: vec![f], coeffs: vec![C::new(1.0, 0.0)] }
    }

    fn params(&self) -> &ModelParams {
        self.basis[0].params()
    }

    pub fn eval(&self, x: f64) -> C {
        self.basis.iter().zip(&self.coeffs).map(|(b, c)| c * b.eval(x)).sum()
    }

    fn oscillatory(&self) -> bool {
        self.basis.iter().any(|b| !b.frequencies().is_empty())
    }
}

const STENCIL_STEP: f64 = 1e-2;

fn apply_operator<F: Fn(f64) -> C>(params: &ModelParams, op: Operator, f: &F, x: f64) -> Result<C> {
    Ok(match op {
        Operator::Identity => f(x),
        Operator::Potential => params.potential(x)? * f(x),
        Operator::Kinetic => kinetic_at(f, x, STENCIL_STEP, DEFAULT_ORDER)?,
        Operator::Hamiltonian => kinetic_at(f, x, STENCIL_STEP, DEFAULT_ORDER)? + params.potential(x)? * f(x),
    })
}

fn line_integral<F: Fn(f64) -> Result<C>>(params: &ModelParams, oscillatory: bool, f: F) -> Result<C> {
    let failure = std::cell::Cell::new(None);
    let g = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            C::new(0.0, 0.0)
        }
    };
    let opts = RealLineOptions { oscillatory, ..RealLineOptions::default() }.with_extent(params.default_grid().0);
    let r = integrate_real_line(g, 1e-10, opts);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(r?.value)
}

#[derive(Clone, Debug, Serialize)]
pub struct Average {
    pub prescription: Prescription,
    pub operator: Operator,
    pub numerator: C,
    pub denominator: C,
    pub value: Option<C>,
    pub note: Option<String>,
}

/// Relative size below which a raw bilinear numerator or denominator counts as zero.
const RAW_ZERO: f64 = 1e-8;

pub fn average(state: &Expansion, op: Operator, prescription: Prescription) -> Result<Average> {
    let params = *state.params();
    let osc = state.oscillatory();
    let phi = |x: f64| state.eval(x);
    let done = |num: C, den: C| Average {
        prescription,
        operator: op,
        numerator: num,
        denominator: den,
        value: Some(num / den),
        note: None,
    };
    match prescription {
        Prescription::Hermitian => {
            let num = line_integral(&params, osc, |x| Ok(phi(x).conj() * apply_operator(&params, op, &phi, x)?))?;
            let den = line_integral(&params, osc, |x| Ok(C::new(phi(x).norm_sqr(), 0.0)))?;
            if !(den.re > 0.0) {
                return Err(Error::ZeroDenominator("hermitian norm vanished".into()));
            }
            Ok(done(num, den))
        }
        Prescription::Binorm => {
            let n = state.basis.len();
            let mut g = DMatrix::<C>::zeros(n, n);
            let mut m = DMatrix::<C>::zeros(n, n);
            for t in 0..n {
                for s in 0..n {
                    let (bt, bs) = (state.basis[t], state.basis[s]);
                    let fs = |x: f64| bs.eval(x);
                    g[(t, s)] = line_integral(&params, osc, |x| Ok(bt.eval(x) * bs.eval(x)))?;
                    m[(t, s)] = line_integral(&params, osc, |x| Ok(bt.eval(x) * apply_operator(&params, op, &fs, x)?))?;
                }
            }
            let mut scale = 0.0f64;
            for t in 0..n {
                let bt = state.basis[t];
                scale = scale.max(line_integral(&params, osc, |x| Ok(C::new(bt.eval(x).norm_sqr(), 0.0)))?.re);
            }
            let smallest = g.clone().singular_values().min();
            let ginv = if smallest > RAW_ZERO * scale { g.try_inverse() } else { None }
                .ok_or_else(|| Error::ZeroDenominator("binorm Gram matrix is singular (self-orthogonal state)".into()))?;
            let a = ginv * m;
            let c = &state.coeffs;
            let mut num = C::new(0.0, 0.0);
            for r in 0..n {
                for s in 0..n {
                    num += c[r].conj() * c[s] * a[(r, s)];
                }
            }
            let den = C::new(c.iter().map(|v| v.norm_sqr()).sum(), 0.0);
            Ok(done(num, den))
        }
        Prescription::Raw => {
            let num = line_integral(&params, osc, |x| Ok(phi(x) * apply_operator(&params, op, &phi, x)?))?;
            let den = line_integral(&params, osc, |x| Ok(phi(x) * phi(x)))?;
            let scale = line_integral(&params, osc, |x| Ok(C::new(phi(x).norm_sqr(), 0.0)))?.re;
            let num_scale =
                line_integral(&params, osc, |x| Ok(C::new(phi(x).norm() * apply_operator(&params, op, &phi, x)?.norm(), 0.0)))?.re;
            if den.norm() > RAW_ZERO * scale {
                return Ok(done(num, den));
            }
            if num.norm() > RAW_ZERO * num_scale {
                return Err(Error::ZeroDenominator("bilinear norm vanishes but the numerator does not".into()));
            }
            Ok(Average {
                prescription,
                operator: op,
                numerator: num,
                denominator: den,
                value: None,
                note: Some("0/0, use packet regularization".into()),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_and_momentum_representation() {
        let z = I;
        assert!((packet_eval(0.3, z, 0.0).unwrap() + 1.0 / z).norm() < 1e-15);
        let far = packet_eval(1e-9, z, 2.0).unwrap();
        assert!((far - 1.0 / (2.0 - z)).norm() < 1e-8);
        let m = packet_momentum_integral(0.1, z, 0.7, 1e-13).unwrap().value;
        assert!((m - packet_eval(0.1, z, 0.7).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn binorm_law() {
        let p = PacketParams::new(0.01, I).unwrap();
        let b = packet_binorm(&p).unwrap();
        assert!((b.value.re - 0.1 * printed_binorm_prefactor()).abs() < 1e-6);
        let q = PacketParams::new(0.04, I).unwrap();
        let r = packet_binorm(&q).unwrap().value / b.value;
        assert!((r - 2.0).norm() < 1e-6);
    }

    #[test]
    fn total_energy_and_stencil_agree() {
        let p = PacketParams::new(0.05, I).unwrap();
        let t = packet_ev(&p, Observable::Total).unwrap();
        assert!(t.rel_deviation_from_printed() < 1e-8);
        let s = packet_ev_stencil(&p, Observable::Total).unwrap();
        assert!((s - t.value).norm() < 1e-6 * t.value.norm());
        let k = packet_ev(&p, Observable::Kinetic).unwrap().value;
        let ks = packet_ev_stencil(&p, Observable::Kinetic).unwrap();
        assert!((k - ks).norm() < 1e-6);
    }

    #[test]
    fn potential_prefactor_oracle_differs_from_print() {
        let reps = prefactor_reports(I).unwrap();
        let v = reps.iter().find(|r| r.quantity == "potential").unwrap();
        assert!((v.oracle + (25.0 * PI / 18.0).sqrt()).abs() < 1e-3, "{}", v.oracle);
        assert!(v.suspected_typo);
        for q in ["binorm", "total"] {
            assert!(!reps.iter().find(|r| r.quantity == q).unwrap().suspected_typo);
        }
    }

    #[test]
    fn averages() {
        let p = ModelParams::threshold(1, I).unwrap();
        let psi0 = Expansion::single(p.bound_states()[0]);
        let h = average(&psi0, Operator::Potential, Prescription::Hermitian).unwrap();
        assert!((h.denominator.re - PI).abs() < 1e-8);
        assert!((h.value.unwrap() + 0.5).norm() < 1e-6);
        let raw = average(&psi0, Operator::Potential, Prescription::Raw).unwrap();
        assert!(raw.value.is_none() && raw.note.is_some());
        let t = ModelParams::two_level(C::new(1.0, 0.0), 0.3, I).unwrap();
        let b = t.bound_states();
        let e = Expansion::new(b.clone(), vec![C::new(1.0, 0.0), C::new(0.0, 0.0)]).unwrap();
        let a = average(&e, Operator::Identity, Prescription::Binorm).unwrap();
        assert!((a.denominator - 1.0).norm() < 1e-15);
        assert!((a.value.unwrap() - 1.0).norm() < 1e-8);
        let en = average(&e, Operator::Hamiltonian, Prescription::Binorm).unwrap();
        assert!((en.value.unwrap() - b[0].lambda()).norm() < 1e-6);
        assert!(matches!(average(&psi0, Operator::Identity, Prescription::Binorm), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn shifted_contour_matches_real_axis() {
        for z in [C::new(0.7, 1.0), C::new(-0.4, -0.6)] {
            let p = PacketParams::new(0.05, z).unwrap();
            let x = p.reach();
            let direct = Adaptive::new(1e-12).with_initial_width(0.5).integrate(|t| p.eval(t) * p.v_eval(t), -x, x).unwrap().value;
            let shifted = packet_ev(&p, Observable::Potential).unwrap().value;
            assert!((direct - shifted).norm() < 1e-10, "{direct} {shifted}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PacketParams::new(1e-5, I).is_err());
        assert!(PacketParams::new(0.1, C::new(1.0, 0.0)).is_err());
        assert!(PacketParams::new(2.0, I).is_err());
    }
}
