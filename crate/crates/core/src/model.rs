//! The four exactly solvable Hamiltonians `h = -∂² + V(x)`: closed-form
//! potentials, bound and associated states, continuum states and the
//! analytic-continuation limits that connect them.

use crate::error::{Error, Result};
use crate::scaled::Scaled;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

type C = Complex64;

const I: C = C::new(0.0, 1.0);
/// Smallest admissible `|W(x)|` on the real line.
pub const DENOMINATOR_GUARD: f64 = 1e-10;

fn re(v: f64) -> C {
    C::new(v, 0.0)
}

fn inv_sqrt_2pi() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    JordanBound,
    TwoLevel,
    Threshold,
    ContinuumBs,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::JordanBound,
        ModelKind::TwoLevel,
        ModelKind::Threshold,
        ModelKind::ContinuumBs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::JordanBound => "jordan-bound",
            ModelKind::TwoLevel => "two-level",
            ModelKind::Threshold => "threshold",
            ModelKind::ContinuumBs => "continuum-bs",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown model '{s}'")))
    }
}

/// Validated parameter set.  Construction is the only place constraints are
/// checked; every evaluator assumes a valid instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    kind: ModelKind,
    alpha: C,
    beta: f64,
    z: C,
    n: u32,
}

impl ModelParams {
    pub fn new(kind: ModelKind, alpha: C, beta: f64, z: C, n: u32) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.im == 0.0 {
            return Err(Error::Parameter(format!("Im z must be nonzero and finite (z = {z})")));
        }
        let finite_alpha = alpha.re.is_finite() && alpha.im.is_finite();
        let p = match kind {
            ModelKind::JordanBound | ModelKind::ContinuumBs => {
                if !finite_alpha || alpha.im != 0.0 || alpha.re <= 0.0 {
                    return Err(Error::Parameter(format!("alpha must be real and positive (alpha = {alpha})")));
                }
                ModelParams { kind, alpha, beta: 0.0, z, n: 1 }
            }
            ModelKind::TwoLevel => {
                let real = alpha.im == 0.0 && alpha.re > 0.0;
                let imaginary = alpha.re == 0.0 && alpha.im > 0.0;
                if !finite_alpha || !(real || imaginary) {
                    return Err(Error::Parameter(format!(
                        "alpha must be positive or positive imaginary (alpha = {alpha})"
                    )));
                }
                let limit = PI / (2.0 * z.im.abs());
                if !beta.is_finite() || beta <= 0.0 || beta >= limit {
                    return Err(Error::Parameter(format!(
                        "beta must satisfy 0 < beta < pi/(2|Im z|) = {limit} (beta = {beta})"
                    )));
                }
                if (beta - alpha.norm()).abs() <= 1e-12 * alpha.norm() {
                    return Err(Error::Parameter("beta must differ from |alpha|".into()));
                }
                ModelParams { kind, alpha, beta, z, n: 1 }
            }
            ModelKind::Threshold => {
                if n == 0 {
                    return Err(Error::Parameter("threshold order n must be at least 1".into()));
                }
                ModelParams { kind, alpha: re(0.0), beta: 0.0, z, n }
            }
        };
        let (l, count) = p.default_grid();
        let (x, modulus) = p.denominator().min_modulus(-l, l, count);
        if modulus < DENOMINATOR_GUARD {
            return Err(Error::Domain { x, modulus });
        }
        Ok(p)
    }

    pub fn jordan_bound(alpha: f64, z: C) -> Result<Self> {
        Self::new(ModelKind::JordanBound, re(alpha), 0.0, z, 1)
    }

    pub fn two_level(alpha: C, beta: f64, z: C) -> Result<Self> {
        Self::new(ModelKind::TwoLevel, alpha, beta, z, 1)
    }

    pub fn threshold(n: u32, z: C) -> Result<Self> {
        Self::new(ModelKind::Threshold, re(0.0), 0.0, z, n)
    }

    pub fn continuum_bs(alpha: f64, z: C) -> Result<Self> {
        Self::new(ModelKind::ContinuumBs, re(alpha), 0.0, z, 1)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }
    pub fn alpha(&self) -> C {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn z(&self) -> C {
        self.z
    }
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Half-width and point count of the default uniform evaluation grid.
    pub fn default_grid(&self) -> (f64, usize) {
        let l = match self.kind {
            ModelKind::Threshold => 40.0,
            _ => 40f64.max(25.0 / self.alpha.norm()),
        };
        (l, 8001)
    }

    /// Spatial period of the oscillating part of the closed forms, if any.
    pub fn spatial_period(&self) -> Option<f64> {
        match self.kind {
            ModelKind::ContinuumBs => Some(PI / self.alpha.re),
            ModelKind::TwoLevel if self.alpha.re == 0.0 => Some(PI / self.alpha.im),
            _ => None,
        }
    }

    pub fn denominator(&self) -> Denominator {
        Denominator { params: *self }
    }

    /// `W`, `W'`, `W''` at a real point.
    fn parts(&self, x: f64) -> Parts {
        let a = self.alpha;
        let z = self.z;
        match self.kind {
            ModelKind::JordanBound => {
                let s = Scaled::sinh(2.0 * a * x);
                let c = Scaled::cosh(2.0 * a * x);
                let w = s + Scaled::new(2.0 * a * (x - z));
                let wp = (c + Scaled::real(1.0)).scale(2.0 * a);
                let wpp = s.scale(4.0 * a * a);
                Parts { w, wp, wpp }
            }
            ModelKind::TwoLevel => {
                let b = self.beta;
                let s1 = Scaled::sinh(2.0 * a * x);
                let c1 = Scaled::cosh(2.0 * a * x);
                let s2 = Scaled::sinh(2.0 * b * (x - z));
                let c2 = Scaled::cosh(2.0 * b * (x - z));
                let w = s1 + s2.scale(a / b);
                let wp = (c1 + c2).scale(2.0 * a);
                let wpp = s1.scale(4.0 * a * a) + s2.scale(4.0 * a * b);
                Parts { w, wp, wpp }
            }
            ModelKind::ContinuumBs => {
                let t = 2.0 * a.re * x;
                let w = re(t.sin()) + 2.0 * a * (x - z);
                let wp = 2.0 * a * t.cos() + 2.0 * a;
                let wpp = -4.0 * a * a * t.sin();
                Parts { w: w.into(), wp: wp.into(), wpp: wpp.into() }
            }
            ModelKind::Threshold => Parts {
                w: Scaled::new(x - z),
                wp: Scaled::real(1.0),
                wpp: Scaled::real(0.0),
            },
        }
    }

    /// `(W'/W, W''/W)` at a real point.
    pub fn log_derivatives(&self, x: f64) -> (C, C) {
        let p = self.parts(x);
        ((p.wp / p.w).to_complex(), (p.wpp / p.w).to_complex())
    }

    fn guard(&self, x: f64, w: &Scaled) -> Result<()> {
        let l = w.ln_norm();
        if l < DENOMINATOR_GUARD.ln() {
            return Err(Error::Domain { x, modulus: l.exp() });
        }
        Ok(())
    }

    /// The potential `V(x)` as printed for each model.
    pub fn potential(&self, x: f64) -> Result<C> {
        let a = self.alpha;
        let z = self.z;
        match self.kind {
            ModelKind::JordanBound => {
                let p = self.parts(x);
                self.guard(x, &p.w)?;
                let ch = Scaled::cosh(a * x);
                let s = Scaled::sinh(2.0 * a * x);
                let num = s.scale(a * (x - z)) - ch.square().scale(re(2.0));
                Ok((num / p.w.square()).to_complex() * (-16.0 * a * a))
            }
            ModelKind::TwoLevel => {
                let b = self.beta;
                let p = self.parts(x);
                self.guard(x, &p.w)?;
                let s1 = Scaled::sinh(2.0 * a * x);
                let s2 = Scaled::sinh(2.0 * b * (x - z));
                let c2 = Scaled::cosh(2.0 * b * (x - z));
                let ch = Scaled::cosh(a * x);
                let sh = Scaled::sinh(b * (x - z));
                let num = (s1 * s2).scale((a * a + b * b) / (2.0 * a * b))
                    - (ch.square() * c2).scale(re(2.0))
                    + sh.square().scale(re(2.0));
                Ok((num / p.w.square()).to_complex() * (-16.0 * a * a))
            }
            ModelKind::ContinuumBs => {
                let p = self.parts(x);
                self.guard(x, &p.w)?;
                let ar = a.re;
                let num = a * (x - z) * (2.0 * ar * x).sin() + 2.0 * (ar * x).cos().powi(2);
                Ok(16.0 * a * a * num / p.w.to_complex().powi(2))
            }
            ModelKind::Threshold => {
                let w = x - z;
                self.guard(x, &Scaled::new(w))?;
                let n = self.n as f64;
                Ok(n * (n + 1.0) / (w * w))
            }
        }
    }

    /// Normalizable eigenfunctions and associated functions with their roles.
    pub fn bound_states(&self) -> Vec<SpectralFunction> {
        let a = self.alpha;
        match self.kind {
            ModelKind::JordanBound => vec![
                self.state(StateId::Psi0, Role::Eigen, -a * a),
                self.state(StateId::Psi1, Role::Associated(1), -a * a),
            ],
            ModelKind::TwoLevel => {
                let b = self.beta;
                vec![
                    self.state(StateId::PsiPlus, Role::Eigen, -(a + b) * (a + b)),
                    self.state(StateId::PsiMinus, Role::Eigen, -(a - b) * (a - b)),
                ]
            }
            ModelKind::Threshold => (0..=(self.n - 1) / 2)
                .map(|j| {
                    let role = if j == 0 { Role::Eigen } else { Role::Associated(j) };
                    self.state(StateId::Chain(j), role, re(0.0))
                })
                .collect(),
            ModelKind::ContinuumBs => vec![
                self.state(StateId::Psi0, Role::Eigen, a * a),
                self.state(StateId::Psi1, Role::Associated(1), a * a),
            ],
        }
    }

    /// The diagonal-rotation pair built from the Jordan cell of the bound-state model.
    pub fn rotated_states(&self, kappa: f64) -> Result<[SpectralFunction; 2]> {
        if self.kind != ModelKind::JordanBound {
            return Err(Error::Unsupported("rotated pair exists only for the jordan-bound model".into()));
        }
        if !(kappa.is_finite() && kappa != 0.0) {
            return Err(Error::Parameter("kappa must be finite and nonzero".into()));
        }
        let l = -self.alpha * self.alpha;
        Ok([
            self.state(StateId::Rotated { index: 1, kappa }, Role::Combination, l),
            self.state(StateId::Rotated { index: 2, kappa }, Role::Combination, l),
        ])
    }

    fn state(&self, id: StateId, role: Role, lambda: C) -> SpectralFunction {
        SpectralFunction { params: *self, id, role, lambda }
    }

    /// Continuum eigenfunction `ψ(·;k)` for real `k`.
    pub fn continuum_state(&self, k: f64) -> Result<SpectralFunction> {
        if !k.is_finite() {
            return Err(Error::Parameter("momentum must be finite".into()));
        }
        if self.momentum_denominator(re(k)).norm() <= 1e-300 {
            return Err(Error::ExcludedMomentum(k));
        }
        Ok(self.state(StateId::Continuum(k), Role::Continuum(k), re(k * k)))
    }

    /// `D(k)` such that `ψ(x;k) = F(x;k)/D(k)` with `F` entire in `k`.
    pub fn momentum_denominator(&self, k: C) -> C {
        let a = self.alpha;
        match self.kind {
            ModelKind::JordanBound => a * a + k * k,
            ModelKind::TwoLevel => two_level_root(k, a, self.beta),
            ModelKind::Threshold => (I * k).powu(self.n),
            ModelKind::ContinuumBs => k * k - a * a,
        }
    }

    /// Weight `w(k)` whose product with `ψ(x;k)` is regular at the excluded momenta.
    pub fn continuum_weight(&self, k: C) -> C {
        match self.kind {
            ModelKind::JordanBound | ModelKind::TwoLevel => re(1.0),
            _ => self.momentum_denominator(k),
        }
    }

    /// The entire numerator `F(x;k)` of the continuum state.
    pub fn continuum_numerator(&self, x: f64, k: C) -> C {
        let a = self.alpha;
        let phase = (I * k * x).exp();
        match self.kind {
            ModelKind::Threshold => {
                let n = self.n as i32;
                let u = 2.0 * (x - self.z);
                let mut sum = C::new(0.0, 0.0);
                let mut coef = 1.0;
                for m in 0..=n {
                    if m > 0 {
                        coef *= ((n + m) * (n - m + 1)) as f64 / m as f64;
                    }
                    sum += coef * I.powi(n + m) * k.powi(n - m) / u.powi(m);
                }
                sum * phase * inv_sqrt_2pi()
            }
            _ => {
                let (ad, bd) = self.log_derivatives(x);
                let p = match self.kind {
                    ModelKind::JordanBound => a * a + k * k,
                    ModelKind::TwoLevel => a * a + self.beta * self.beta + k * k,
                    _ => k * k - a * a,
                };
                (p + I * k * ad - 0.5 * bd) * phase * inv_sqrt_2pi()
            }
        }
    }

    /// Functions `g_j(x)` of the separated form
    /// `√(2π) e^{−ikx} ψ(x;k) = Σ_j c_j(k) g_j(x)`.
    pub fn continuum_basis(&self, x: f64) -> Vec<C> {
        match self.kind {
            ModelKind::Threshold => {
                let u = 1.0 / (x - self.z);
                let mut g = Vec::with_capacity(self.n as usize + 1);
                let mut p = re(1.0);
                for _ in 0..=self.n {
                    g.push(p);
                    p *= u;
                }
                g
            }
            _ => {
                let (a, b) = self.log_derivatives(x);
                vec![re(1.0), a, b]
            }
        }
    }

    /// Coefficients `c_j(k)` matching [`Self::continuum_basis`]; `weighted`
    /// selects `w(k)ψ` instead of `ψ`.
    pub fn continuum_coefficients(&self, k: C, weighted: bool) -> Vec<C> {
        let a = self.alpha;
        let mut c = match self.kind {
            ModelKind::Threshold => {
                let n = self.n as i32;
                let mut coef = 1.0;
                (0..=n)
                    .map(|m| {
                        if m > 0 {
                            coef *= ((n + m) * (n - m + 1)) as f64 / m as f64;
                        }
                        coef * I.powi(n + m) * k.powi(n - m) / 2f64.powi(m)
                    })
                    .collect::<Vec<C>>()
            }
            _ => {
                let p = match self.kind {
                    ModelKind::JordanBound => a * a + k * k,
                    ModelKind::TwoLevel => a * a + self.beta * self.beta + k * k,
                    _ => k * k - a * a,
                };
                vec![p, I * k, re(-0.5)]
            }
        };
        let divide = !weighted || matches!(self.kind, ModelKind::JordanBound | ModelKind::TwoLevel);
        if divide {
            let d = self.momentum_denominator(k);
            for v in &mut c {
                *v /= d;
            }
        }
        c
    }

    /// `∂F/∂k`, used by the derivative continuation limits.
    pub fn continuum_numerator_dk(&self, x: f64, k: C) -> Result<C> {
        if matches!(self.kind, ModelKind::Threshold | ModelKind::TwoLevel) {
            return Err(Error::Unsupported("derivative limit not defined for this model".into()));
        }
        let a = self.alpha;
        let (ad, bd) = self.log_derivatives(x);
        let (p, dp) = match self.kind {
            ModelKind::JordanBound => (a * a + k * k, 2.0 * k),
            _ => (k * k - a * a, 2.0 * k),
        };
        let bracket = p + I * k * ad - 0.5 * bd;
        Ok((dp + I * ad + I * x * bracket) * (I * k * x).exp() * inv_sqrt_2pi())
    }

    /// `ψ(x;k)` continued to complex `k` through the closed form.
    pub fn continuum_value(&self, x: f64, k: C) -> C {
        self.continuum_numerator(x, k) / self.momentum_denominator(k)
    }

    /// `w(k) ψ(x;k)`, regular on the whole real `k` axis.
    pub fn weighted_continuum(&self, x: f64, k: C) -> C {
        match self.kind {
            ModelKind::JordanBound | ModelKind::TwoLevel => self.continuum_value(x, k),
            _ => self.continuum_numerator(x, k),
        }
    }

    /// Printed transmission coefficient.
    pub fn transmission_formula(&self, k: f64) -> C {
        let a = self.alpha;
        let k = re(k);
        match self.kind {
            ModelKind::JordanBound => ((k + I * a) / (k - I * a)).powi(2),
            ModelKind::TwoLevel => {
                let b = self.beta;
                if a.im == 0.0 {
                    (b * b + (k + I * a).powi(2)) / (b * b + (k - I * a).powi(2))
                } else {
                    (a * a + (k + I * b).powi(2)) / (a * a + (k - I * b).powi(2))
                }
            }
            _ => re(1.0),
        }
    }

    /// Evaluate one printed continuation identity on a grid.
    pub fn continuation_limit(&self, which: Limit, xs: &[f64]) -> Result<ContinuationLimit> {
        let a = self.alpha;
        let z = self.z;
        let check = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Unsupported(format!("{which:?} does not apply to {}", self.kind)))
            }
        };
        let s = |sg: Sign| sg.value();
        // (k0, scale, expected combination on the grid, left side)
        let (k0, scale, expected): (C, C, Box<dyn Fn(f64) -> C>) = match which {
            Limit::JordanPole(sg) | Limit::JordanDerivative(sg) => {
                check(self.kind == ModelKind::JordanBound)?;
                let scale = re(-s(sg) * (a.re / PI).sqrt());
                let p0 = self.state(StateId::Psi0, Role::Eigen, -a * a);
                let p1 = self.state(StateId::Psi1, Role::Associated(1), -a * a);
                let f: Box<dyn Fn(f64) -> C> = if matches!(which, Limit::JordanPole(_)) {
                    Box::new(move |x| p0.eval(x))
                } else {
                    let c = (1.0 - s(sg) * 2.0 * a * z) / (4.0 * a * a);
                    Box::new(move |x| p1.eval(x) - c * p0.eval(x))
                };
                (s(sg) * I * a, scale, f)
            }
            Limit::TwoLevelPlus(sg) => {
                check(self.kind == ModelKind::TwoLevel)?;
                let b = self.beta;
                let scale = s(sg) * 2.0 * I * a * b / PI.sqrt() * (1.0 / b + 1.0 / a).sqrt() * (-s(sg) * b * z).exp();
                let st = self.state(StateId::PsiPlus, Role::Eigen, -(a + b) * (a + b));
                (s(sg) * I * (a + b), scale, Box::new(move |x| st.eval(x)))
            }
            Limit::TwoLevelMinus(sg) => {
                check(self.kind == ModelKind::TwoLevel)?;
                let b = self.beta;
                let scale = -s(sg) * 2.0 * a * b / PI.sqrt() * (1.0 / b - 1.0 / a).sqrt() * (s(sg) * b * z).exp();
                let st = self.state(StateId::PsiMinus, Role::Eigen, -(a - b) * (a - b));
                (s(sg) * I * (a - b), scale, Box::new(move |x| st.eval(x)))
            }
            Limit::ThresholdZero => {
                check(self.kind == ModelKind::Threshold)?;
                let n = self.n;
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                let scale = re(sign * double_factorial(2 * n as i64 - 1));
                let st = self.state(StateId::Chain(0), Role::Eigen, re(0.0));
                (re(0.0), scale, Box::new(move |x| st.eval(x)))
            }
            Limit::BicPole(sg) | Limit::BicDerivative(sg) => {
                check(self.kind == ModelKind::ContinuumBs)?;
                let scale = -s(sg) * 4.0 * I * a * a * inv_sqrt_2pi();
                let p0 = self.state(StateId::Psi0, Role::Eigen, a * a);
                let p1 = self.state(StateId::Psi1, Role::Associated(1), a * a);
                let f: Box<dyn Fn(f64) -> C> = if matches!(which, Limit::BicPole(_)) {
                    Box::new(move |x| p0.eval(x))
                } else {
                    let c = (1.0 - s(sg) * 2.0 * I * a * z) / (4.0 * a * a);
                    Box::new(move |x| p1.eval(x) + c * p0.eval(x))
                };
                (-s(sg) * a, scale, f)
            }
        };
        let derivative = matches!(which, Limit::JordanDerivative(_) | Limit::BicDerivative(_));
        let left = |x: f64, k: C| -> Result<C> {
            Ok(match which {
                Limit::ThresholdZero => -(2.0 * PI).sqrt() * self.continuum_numerator(x, k),
                _ if derivative => self.continuum_numerator_dk(x, k)? / (2.0 * k),
                _ => self.continuum_numerator(x, k),
            })
        };
        let dir = if k0.norm() > 0.0 { -k0 / k0.norm() } else { re(1.0) };
        let offsets = [1e-4, 1e-5, 1e-6];
        let mut samples = Vec::with_capacity(3);
        for &d in &offsets {
            let k = k0 + d * dir;
            samples.push(xs.iter().map(|&x| left(x, k)).collect::<Result<Vec<C>>>()?);
        }
        let (quad, lin): (Vec<C>, Vec<C>) = (0..xs.len())
            .map(|i| {
                let f = [samples[0][i], samples[1][i], samples[2][i]];
                (extrapolate_to_zero(&offsets, &f), extrapolate_to_zero(&offsets[1..], &f[1..]))
            })
            .unzip();
        let size = quad.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
        let drift = lin.iter().zip(&quad).map(|(u, v)| (u - v).norm()).fold(0.0f64, f64::max);
        if !drift.is_finite() || drift > 1e-2 * size {
            return Err(Error::Convergence(format!("{which:?}: offset sequence drifted by {drift:e}")));
        }
        let r2 = quad;
        let exp_vals: Vec<C> = xs.iter().map(|&x| scale * expected(x)).collect();
        let sup_error = r2.iter().zip(&exp_vals).map(|(u, v)| (u - v).norm()).fold(0.0f64, f64::max);
        Ok(ContinuationLimit {
            which,
            k0,
            scale,
            xs: xs.to_vec(),
            limit: r2,
            expected: exp_vals,
            raw_at_smallest_offset: samples.pop().unwrap_or_default(),
            sup_error,
        })
    }
}

struct Parts {
    w: Scaled,
    wp: Scaled,
    wpp: Scaled,
}

/// `√((k²+α²+β²)² − 4α²β²)` on the sheet that behaves as `k²` at infinity,
/// with cuts joining the branch points lying in the same half-plane.
pub fn two_level_root(k: C, alpha: C, beta: f64) -> C {
    let roots = [
        I * (alpha + beta),
        -I * (alpha + beta),
        I * (alpha - beta),
        -I * (alpha - beta),
    ];
    let up: Vec<C> = roots.iter().copied().filter(|r| r.im > 0.0).collect();
    let down: Vec<C> = roots.iter().copied().filter(|r| r.im < 0.0).collect();
    pair_root(k, up[0], up[1]) * pair_root(k, down[0], down[1])
}

fn pair_root(k: C, r1: C, r2: C) -> C {
    let m = 0.5 * (r1 + r2);
    let d = 0.5 * (r1 - r2);
    let u = k - m;
    if u.norm() == 0.0 {
        return (-d * d).sqrt();
    }
    u * (1.0 - (d / u).powi(2)).sqrt()
}

/// Polynomial extrapolation of samples `f(hᵢ)` to `h = 0` (Neville).
pub fn extrapolate_to_zero(h: &[f64], f: &[C]) -> C {
    let mut p = f.to_vec();
    let n = p.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (h[i + m] * p[i] - h[i] * p[i + 1]) / (h[i + m] - h[i]);
        }
    }
    p[0]
}

pub fn double_factorial(m: i64) -> f64 {
    let mut r = 1.0;
    let mut k = m;
    while k > 1 {
        r *= k as f64;
        k -= 2;
    }
    r
}

/// The function `W(x)` whose zeros would be the singularities of each model.
#[derive(Clone, Copy, Debug)]
pub struct Denominator {
    params: ModelParams,
}

impl Denominator {
    pub fn eval(&self, x: f64) -> C {
        self.params.parts(x).w.to_complex()
    }

    /// Location and value of the smallest `|W|` on a uniform grid.
    pub fn min_modulus(&self, lo: f64, hi: f64, count: usize) -> (f64, f64) {
        let mut best = (lo, f64::INFINITY);
        for i in 0..count {
            let x = lo + (hi - lo) * i as f64 / (count - 1).max(1) as f64;
            let l = self.params.parts(x).w.ln_norm();
            if l < best.1 {
                best = (x, l);
            }
        }
        (best.0, best.1.exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Role {
    Eigen,
    Associated(u32),
    Continuum(f64),
    /// Linear combination of cell members (the rotated pair).
    Combination,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum StateId {
    Psi0,
    Psi1,
    PsiPlus,
    PsiMinus,
    Chain(u32),
    Continuum(f64),
    Rotated { index: u8, kappa: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// The printed continuation identities.  `Plus` selects the upper sign of
/// each `±`/`∓` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    /// `(k²+α²)ψ → ∓√(α/π) ψ₀` as `k → ±iα`.
    JordanPole(Sign),
    /// `(1/2k) ∂ₖ[(k²+α²)ψ] → ∓√(α/π)[ψ₁ − (1∓2αz)/(4α²) ψ₀]`.
    JordanDerivative(Sign),
    /// `S(k)ψ → ±(2iαβ/√π)√(1/β+1/α) e^{∓βz} ψ₊` as `k → ±i(α+β)`.
    TwoLevelPlus(Sign),
    /// `S(k)ψ → ∓(2αβ/√π)√(1/β−1/α) e^{±βz} ψ₋` as `k → ±i(α−β)`.
    TwoLevelMinus(Sign),
    /// `−√(2π) (ik)ⁿψ → ψ₀` as `k → 0` (sign and double factorial for `n > 1`).
    ThresholdZero,
    /// `(k²−α²)ψ → ∓(4iα²/√(2π)) ψ₀` as `k → ∓α`.
    BicPole(Sign),
    /// `(1/2k) ∂ₖ[(k²−α²)ψ] → ∓(4iα²/√(2π))[ψ₁ + (1∓2iαz)/(4α²) ψ₀]` as `k → ∓α`.
    BicDerivative(Sign),
}

impl Limit {
    pub fn for_model(kind: ModelKind) -> Vec<Limit> {
        use Sign::*;
        match kind {
            ModelKind::JordanBound => vec![
                Limit::JordanPole(Plus),
                Limit::JordanPole(Minus),
                Limit::JordanDerivative(Plus),
                Limit::JordanDerivative(Minus),
            ],
            ModelKind::TwoLevel => vec![
                Limit::TwoLevelPlus(Plus),
                Limit::TwoLevelPlus(Minus),
                Limit::TwoLevelMinus(Plus),
                Limit::TwoLevelMinus(Minus),
            ],
            ModelKind::Threshold => vec![Limit::ThresholdZero],
            ModelKind::ContinuumBs => vec![
                Limit::BicPole(Plus),
                Limit::BicPole(Minus),
                Limit::BicDerivative(Plus),
                Limit::BicDerivative(Minus),
            ],
        }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuationLimit {
    pub which: Limit,
    pub k0: C,
    /// Prefactor multiplying the bound-state combination.
    pub scale: C,
    pub xs: Vec<f64>,
    /// Richardson-extrapolated left side.
    pub limit: Vec<C>,
    /// `scale` times the bound-state combination.
    pub expected: Vec<C>,
    pub raw_at_smallest_offset: Vec<C>,
    pub sup_error: f64,
}

/// A closed-form state tagged with its spectral role.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralFunction {
    params: ModelParams,
    id: StateId,
    role: Role,
    lambda: C,
}

impl SpectralFunction {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn id(&self) -> StateId {
        self.id
    }
    pub fn role(&self) -> Role {
        self.role
    }
    pub fn lambda(&self) -> C {
        self.lambda
    }

    pub fn label(&self) -> String {
        match self.id {
            StateId::Psi0 => "psi0".into(),
            StateId::Psi1 => "psi1".into(),
            StateId::PsiPlus => "psi+".into(),
            StateId::PsiMinus => "psi-".into(),
            StateId::Chain(j) => format!("psi_{j}"),
            StateId::Continuum(k) => format!("psi(k={k})"),
            StateId::Rotated { index, .. } => format!("Psi{index}"),
        }
    }

    /// Frequencies of persistent oscillation at large `|x|`.
    pub fn frequencies(&self) -> Vec<f64> {
        match (self.id, self.params.kind) {
            (StateId::Continuum(k), _) => vec![k.abs()],
            (_, ModelKind::ContinuumBs) => vec![self.params.alpha.re],
            _ => vec![],
        }
    }

    pub fn eval(&self, x: f64) -> C {
        let p = &self.params;
        let a = p.alpha;
        let z = p.z;
        match (self.id, p.kind) {
            (StateId::Continuum(k), _) => p.continuum_value(x, re(k)),
            (StateId::Chain(j), _) => {
                let n = p.n as i64;
                let j = j as i64;
                let c = double_factorial(2 * (n - j) - 1) / (double_factorial(2 * j) * double_factorial(2 * n - 1));
                c / (x - z).powi((n - 2 * j) as i32)
            }
            (StateId::Rotated { index, kappa }, _) => {
                let p0 = self.with_id(StateId::Psi0).eval(x);
                let p1 = self.with_id(StateId::Psi1).eval(x);
                let r = std::f64::consts::FRAC_1_SQRT_2;
                if index == 1 {
                    r * (kappa * p0 + p1 / kappa)
                } else {
                    I * r * (kappa * p0 - p1 / kappa)
                }
            }
            (StateId::Psi0, ModelKind::JordanBound) => {
                let w = p.parts(x).w;
                (Scaled::cosh(a * x) / w).to_complex() * (2.0 * a).powf(1.5)
            }
            (StateId::Psi1, ModelKind::JordanBound) => {
                let w = p.parts(x).w;
                let num = Scaled::sinh(a * x).scale(2.0 * a * (x - z)) - Scaled::cosh(a * x);
                (num / w).to_complex() / (2.0 * a).sqrt()
            }
            (StateId::PsiPlus, ModelKind::TwoLevel) => {
                let b = p.beta;
                let w = p.parts(x).w;
                let f = 2f64.sqrt() * I * a * (1.0 / b + 1.0 / a).sqrt();
                (Scaled::cosh((a - b) * x + b * z) / w).to_complex() * f
            }
            (StateId::PsiMinus, ModelKind::TwoLevel) => {
                let b = p.beta;
                let w = p.parts(x).w;
                let f = 2f64.sqrt() * a * (1.0 / b - 1.0 / a).sqrt();
                (Scaled::cosh((a + b) * x - b * z) / w).to_complex() * f
            }
            (StateId::Psi0, ModelKind::ContinuumBs) => {
                let w = p.parts(x).w.to_complex();
                (a.re * x).cos() / w
            }
            (StateId::Psi1, ModelKind::ContinuumBs) => {
                let w = p.parts(x).w.to_complex();
                let t = a.re * x;
                (2.0 * a * (x - z) * t.sin() + t.cos()) / (4.0 * a * a * w)
            }
            _ => C::new(f64::NAN, f64::NAN),
        }
    }

    fn with_id(&self, id: StateId) -> SpectralFunction {
        SpectralFunction { id, ..*self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zi() -> C {
        C::new(0.0, 1.0)
    }

    #[test]
    fn threshold_potential_at_origin() {
        let p = ModelParams::threshold(1, zi()).unwrap();
        assert!((p.potential(0.0).unwrap() - re(-2.0)).norm() < 1e-15);
    }

    #[test]
    fn potentials_equal_log_derivative_form() {
        let models = [
            ModelParams::jordan_bound(1.0, zi()).unwrap(),
            ModelParams::jordan_bound(0.7, C::new(0.4, -0.6)).unwrap(),
            ModelParams::two_level(re(1.0), 0.3, zi()).unwrap(),
            ModelParams::two_level(C::new(0.0, 0.8), 0.4, C::new(0.2, 1.1)).unwrap(),
            ModelParams::continuum_bs(1.0, zi()).unwrap(),
            ModelParams::threshold(1, C::new(0.3, -0.5)).unwrap(),
        ];
        for p in models {
            for &x in &[-3.1, -0.4, 0.0, 0.25, 1.7, 6.0] {
                let (a, b) = p.log_derivatives(x);
                let v = 2.0 * a * a - 2.0 * b;
                let got = p.potential(x).unwrap();
                assert!((got - v).norm() < 1e-11 * (1.0 + v.norm()), "{:?} x={x}: {got} vs {v}", p.kind());
            }
        }
    }

    #[test]
    fn jordan_bound_potential_decays() {
        let p = ModelParams::jordan_bound(1.0, zi()).unwrap();
        assert!(p.potential(30.0).unwrap().norm() < 1e-10);
        assert!(p.potential(-30.0).unwrap().norm() < 1e-10);
        assert!(p.potential(900.0).unwrap().norm() < 1e-300);
    }

    #[test]
    fn pt_symmetry_for_imaginary_shift() {
        let p = ModelParams::jordan_bound(1.3, C::new(0.0, 0.7)).unwrap();
        for i in 0..200 {
            let x = -10.0 + 0.1 * i as f64;
            let d = p.potential(-x).unwrap() - p.potential(x).unwrap().conj();
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn bound_state_roles_and_levels() {
        let p = ModelParams::jordan_bound(1.0, zi()).unwrap();
        let b = p.bound_states();
        assert_eq!(b[0].role(), Role::Eigen);
        assert_eq!(b[1].role(), Role::Associated(1));
        assert_eq!(b[1].lambda(), re(-1.0));
        let t = ModelParams::two_level(re(1.0), 0.3, zi()).unwrap().bound_states();
        assert!((t[0].lambda() - re(-1.69)).norm() < 1e-14);
        assert!((t[1].lambda() - re(-0.49)).norm() < 1e-14);
    }

    #[test]
    fn threshold_chain_member() {
        let p = ModelParams::threshold(3, zi()).unwrap();
        let b = p.bound_states();
        assert_eq!(b.len(), 2);
        let x = 0.8;
        let want = 1.0 / (10.0 * (x - zi()));
        assert!((b[1].eval(x) - want).norm() < 1e-15);
        assert!((b[0].eval(x) - 1.0 / (x - zi()).powi(3)).norm() < 1e-15);
    }

    #[test]
    fn threshold_continuum_vanishes_at_origin_for_unit_momentum() {
        let p = ModelParams::threshold(1, zi()).unwrap();
        assert!(p.continuum_state(1.0).unwrap().eval(0.0).norm() < 1e-15);
        assert!(matches!(p.continuum_state(0.0), Err(Error::ExcludedMomentum(_))));
        let b = ModelParams::continuum_bs(1.0, zi()).unwrap();
        assert!(matches!(b.continuum_state(1.0), Err(Error::ExcludedMomentum(_))));
        assert!(matches!(b.continuum_state(-1.0), Err(Error::ExcludedMomentum(_))));
    }

    #[test]
    fn threshold_general_order_reduces_to_first_order_form() {
        let p = ModelParams::threshold(1, zi()).unwrap();
        for &(x, k) in &[(0.3, 0.7), (-2.0, 1.9), (5.0, -0.4)] {
            let direct = (1.0 - 1.0 / (I * k * (x - zi()))) * (I * k * x).exp() * inv_sqrt_2pi();
            assert!((p.continuum_value(x, re(k)) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn separated_form_reproduces_continuum() {
        for p in [
            ModelParams::jordan_bound(1.0, zi()).unwrap(),
            ModelParams::two_level(re(1.0), 0.3, zi()).unwrap(),
            ModelParams::threshold(1, zi()).unwrap(),
            ModelParams::threshold(4, C::new(0.5, -1.0)).unwrap(),
            ModelParams::continuum_bs(1.0, zi()).unwrap(),
        ] {
            for &(x, k) in &[(0.3, 0.7), (-4.0, -1.3), (2.5, 2.0)] {
                let k = re(k);
                let g = p.continuum_basis(x);
                let phase = (I * k * x).exp() * inv_sqrt_2pi();
                let sum = |w: bool| -> C { p.continuum_coefficients(k, w).iter().zip(&g).map(|(c, g)| c * g).sum::<C>() * phase };
                assert!((sum(false) - p.continuum_value(x, k)).norm() < 1e-13);
                assert!((sum(true) - p.weighted_continuum(x, k)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn continuum_tends_to_plane_wave_amplitude() {
        let models = [
            ModelParams::jordan_bound(1.0, zi()).unwrap(),
            ModelParams::two_level(re(1.0), 0.3, zi()).unwrap(),
            ModelParams::threshold(1, zi()).unwrap(),
            ModelParams::continuum_bs(1.0, zi()).unwrap(),
        ];
        for p in models {
            let s = p.continuum_state(0.9).unwrap();
            let v = s.eval(1e5).norm();
            assert!((v - inv_sqrt_2pi()).abs() < 1e-3, "{:?}", p.kind());
        }
    }

    #[test]
    fn two_level_root_is_positive_on_real_axis_and_behaves_as_k_squared() {
        for alpha in [re(1.0), C::new(0.0, 0.9)] {
            for &k in &[-3.0, -0.5, 0.0, 0.2, 1.0, 7.0] {
                let s = two_level_root(re(k), alpha, 0.3);
                let a2 = alpha * alpha;
                let sq = (re(k * k) + a2 + 0.09).powi(2) - 4.0 * a2 * 0.09;
                assert!(s.im.abs() < 1e-12 && s.re > 0.0);
                assert!((s * s - sq).norm() < 1e-10 * sq.norm());
            }
            let big = C::new(300.0, 200.0);
            let s = two_level_root(big, alpha, 0.3);
            assert!((s / (big * big) - 1.0).norm() < 1e-4);
        }
    }

    #[test]
    fn validation_boundaries() {
        assert!(ModelParams::jordan_bound(1.0, re(1.0)).is_err());
        assert!(ModelParams::jordan_bound(-1.0, zi()).is_err());
        assert!(ModelParams::two_level(re(1.0), 0.0, zi()).is_err());
        assert!(ModelParams::two_level(re(1.0), 1.0, zi()).is_err());
        assert!(ModelParams::two_level(re(1.0), 1.6, zi()).is_err());
        assert!(ModelParams::two_level(C::new(0.0, -1.0), 0.3, zi()).is_err());
        assert!(ModelParams::two_level(re(1.0), 0.3, C::new(0.0, -1.0)).is_ok());
        assert!(ModelParams::threshold(0, zi()).is_err());
        assert!("jordan-bound".parse::<ModelKind>().is_ok());
        assert!("nope".parse::<ModelKind>().is_err());
    }

    #[test]
    fn denominator_stays_away_from_zero() {
        for p in [
            ModelParams::jordan_bound(1.0, zi()).unwrap(),
            ModelParams::two_level(re(1.0), 0.3, zi()).unwrap(),
            ModelParams::continuum_bs(1.0, zi()).unwrap(),
        ] {
            let (l, n) = p.default_grid();
            let (_, m) = p.denominator().min_modulus(-l, l, n);
            assert!(m > 0.1);
        }
    }

    fn grid() -> Vec<f64> {
        (0..=200).map(|i| -10.0 + 0.1 * i as f64).collect()
    }

    #[test]
    fn printed_continuation_limits_hold() {
        let models = [
            ModelParams::jordan_bound(1.0, zi()).unwrap(),
            ModelParams::jordan_bound(0.8, C::new(0.3, 0.7)).unwrap(),
            ModelParams::two_level(re(1.0), 0.3, zi()).unwrap(),
            ModelParams::threshold(1, zi()).unwrap(),
            ModelParams::continuum_bs(1.0, zi()).unwrap(),
            ModelParams::continuum_bs(0.6, C::new(-0.2, 0.9)).unwrap(),
        ];
        let xs = grid();
        for p in models {
            for l in Limit::for_model(p.kind()) {
                let r = p.continuation_limit(l, &xs).unwrap();
                assert!(r.sup_error < 1e-6, "{:?} {:?}: {}", p.kind(), l, r.sup_error);
            }
        }
    }

    #[test]
    fn threshold_limit_at_small_momentum() {
        let p = ModelParams::threshold(1, zi()).unwrap();
        let k = 1e-4;
        let err = grid()
            .iter()
            .map(|&x| (-(2.0 * PI).sqrt() * I * k * p.continuum_value(x, re(k)) - 1.0 / (x - zi())).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-3);
    }

    #[test]
    fn higher_threshold_limit_uses_double_factorial() {
        let p = ModelParams::threshold(3, zi()).unwrap();
        let r = p.continuation_limit(Limit::ThresholdZero, &grid()).unwrap();
        assert!((r.scale - re(15.0)).norm() < 1e-14);
        assert!(r.sup_error < 1e-6);
    }

    #[test]
    fn wrong_limit_for_model_is_rejected() {
        let p = ModelParams::threshold(1, zi()).unwrap();
        assert!(p.continuation_limit(Limit::JordanPole(Sign::Plus), &[0.0]).is_err());
    }
}
