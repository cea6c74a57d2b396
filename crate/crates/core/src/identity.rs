//! Regularized resolution-of-identity kernels applied to test functions, and
//! the functionals that control their `ε → 0` limits.
//!
//! A kernel acts as `φ ↦ ∫K(x,x')φ(x)dx`.  The continuum part is evaluated as
//! `∫ ψ(x';−k) Φ(k) dk` with `Φ(k) = ∫ φ(x) ψ(x;k) dx`, so one spectral
//! transform of `φ` serves every probe point `x'`.

use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::model::{ModelKind, ModelParams, Role, SpectralFunction};
use crate::quadrature::{
    decay_exponent, gk15_nodes, graded_cuts, integrate_real_line, Adaptive, ContourPath, Indent, Orientation, PathRule, QuadResult,
    RealLineOptions,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;
const I: C = C::new(0.0, 1.0);

pub const K_MAX: f64 = 40.0;
pub const INDENT_RADIUS: f64 = 0.1;
const X_PANEL: f64 = 0.0625;
const K_PANEL: f64 = 0.5;
/// Gaussians are cut at this many standard deviations.
const GAUSS_REACH: f64 = 9.0;
/// Half-width of the window on which eigenstate test functions are sampled.
const STATE_EXTENT: f64 = 40.0;
const POWER_EXTENT_CAP: f64 = 200.0;
const POWER_TAIL_TOL: f64 = 1e-10;
const PAIR_TOL: f64 = 1e-11;
const LINE_TOL: f64 = 1e-10;
/// Absolute accuracy asked of `c·∫cos(ε(x−x'))ψ₀φ` on non-compact `φ`.
const COUNTERTERM_TOL: f64 = 1e-4;
/// Decay exponents within this distance of 1 are treated as divergent.
const MEMBERSHIP_MARGIN: f64 = 0.05;

fn inv_sqrt_2pi() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Gaussian { center: f64, sigma: f64 },
    /// `(1 + x²)^{−s}`.
    Power { s: f64 },
    State(SpectralFunction),
}

/// A test function together with its declared weight class `γ`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    shape: Shape,
    gamma: f64,
    label: String,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Membership {
    pub gamma: f64,
    /// `∫|φ|²(1+|x|^γ)dx` when it converges.
    pub weighted_norm: Option<f64>,
    pub member: bool,
}

impl TestFunction {
    pub fn gaussian(sigma: f64, center: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && center.is_finite()) {
            return Err(Error::Parameter("gaussian needs finite center and sigma > 0".into()));
        }
        Ok(TestFunction {
            shape: Shape::Gaussian { center, sigma },
            gamma: 2.0,
            label: format!("gauss(sigma={sigma},center={center})"),
        })
    }

    pub fn power(s: f64, gamma: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Parameter("power exponent must be positive".into()));
        }
        Self::check_gamma(gamma)?;
        Ok(TestFunction { shape: Shape::Power { s }, gamma, label: format!("(1+x^2)^-{s}") })
    }

    pub fn state(f: SpectralFunction, gamma: f64) -> Result<Self> {
        Self::check_gamma(gamma)?;
        if matches!(f.role(), Role::Continuum(_)) {
            return Err(Error::Parameter("continuum states are not test functions".into()));
        }
        Ok(TestFunction { shape: Shape::State(f), gamma, label: f.label() })
    }

    fn check_gamma(gamma: f64) -> Result<()> {
        if gamma >= 0.0 && gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter("gamma must be finite and non-negative".into()))
        }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: f64) -> C {
        match self.shape {
            Shape::Gaussian { center, sigma } => {
                let u = (x - center) / sigma;
                if u.abs() > GAUSS_REACH {
                    C::new(0.0, 0.0)
                } else {
                    C::new((-0.5 * u * u).exp(), 0.0)
                }
            }
            Shape::Power { s } => C::new((1.0 + x * x).powf(-s), 0.0),
            Shape::State(f) => f.eval(x),
        }
    }

    /// Closed interval outside which the function vanishes identically.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self.shape {
            Shape::Gaussian { center, sigma } => Some((center - GAUSS_REACH * sigma, center + GAUSS_REACH * sigma)),
            _ => None,
        }
    }

    fn extent(&self) -> f64 {
        match self.shape {
            Shape::State(f) => f.params().default_grid().0,
            _ => 0.0,
        }
    }

    /// Numerical check of `∫|φ|²(1+|x|^γ)dx < ∞`.
    pub fn membership(&self) -> Result<Membership> {
        let g = self.gamma;
        let f = |x: f64| C::new(self.eval(x).norm_sqr() * (1.0 + x.abs().powf(g)), 0.0);
        let r = match self.support() {
            Some((a, b)) => Adaptive::new(PAIR_TOL).with_initial_width(0.5).integrate(f, a, b).map(|r| r.value.re),
            None => {
                let p = decay_exponent(&f, 64f64.max(self.extent()));
                if p <= 1.0 + MEMBERSHIP_MARGIN {
                    Err(Error::SlowDecay(p))
                } else {
                    integrate_real_line(f, LINE_TOL, RealLineOptions::default().with_extent(self.extent()).with_decay(p))
                        .map(|r| r.value.re)
                }
            }
        };
        match r {
            Ok(v) => Ok(Membership { gamma: g, weighted_norm: Some(v), member: true }),
            Err(Error::SlowDecay(_)) => Ok(Membership { gamma: g, weighted_norm: None, member: false }),
            Err(e) => Err(e),
        }
    }
}

/// `∫ g φ dx`; compact test functions use an interval rule.
fn pair<G: Fn(f64) -> C>(g: G, phi: &TestFunction, extent: f64) -> Result<QuadResult> {
    pair_within(g, phi, extent, 0.0)
}

/// As [`pair`], accepting an absolute error up to `loose` on non-compact test functions.
fn pair_within<G: Fn(f64) -> C>(g: G, phi: &TestFunction, extent: f64, loose: f64) -> Result<QuadResult> {
    let f = |x: f64| g(x) * phi.eval(x);
    match phi.support() {
        Some((a, b)) => Adaptive::new(PAIR_TOL).with_initial_width(0.5).integrate(f, a, b),
        None => {
            let extent = extent.max(phi.extent());
            let mut opts = RealLineOptions::oscillatory().with_extent(extent);
            opts.panel_width = (extent / 1024.0).max(1.0);
            // roundoff accumulates over the window
            integrate_real_line(f, (LINE_TOL * (extent / 256.0).max(1.0)).max(loose), opts)
        }
    }
}

/// `φ(x)g_j(x)` sampled on a composite Kronrod rule with uniform panels, so
/// that `∫ φ g_j e^{ikx} dx` costs one complex product per node and `k`.
struct Transform {
    a: f64,
    h: f64,
    panels: usize,
    xi: [f64; 15],
    amp: Vec<Vec<C>>,
}

impl Transform {
    fn new(params: &ModelParams, phi: &TestFunction, lo: f64, hi: f64) -> Transform {
        let panels = ((hi - lo) / X_PANEL).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        let rule = gk15_nodes();
        let nb = params.continuum_basis(0.0).len();
        let mut amp = vec![Vec::with_capacity(panels * 15); nb];
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * h;
            for &(t, w) in &rule {
                let x = c + 0.5 * h * t;
                let fw = phi.eval(x) * (0.5 * h * w);
                for (j, g) in params.continuum_basis(x).into_iter().enumerate() {
                    amp[j].push(fw * g);
                }
            }
        }
        Transform { a: lo, h, panels, xi: rule.map(|(t, _)| t), amp }
    }

    fn eval(&self, k: C) -> Vec<C> {
        let e: Vec<C> = self.xi.iter().map(|t| (I * k * (0.5 * self.h * t)).exp()).collect();
        let step = (I * k * self.h).exp();
        let mut phase = (I * k * (self.a + 0.5 * self.h)).exp();
        let mut out = vec![C::new(0.0, 0.0); self.amp.len()];
        for p in 0..self.panels {
            let r = p * 15..p * 15 + 15;
            for (j, amp) in self.amp.iter().enumerate() {
                let s: C = amp[r.clone()].iter().zip(&e).map(|(a, e)| a * e).sum();
                out[j] += phase * s;
            }
            phase *= step;
        }
        out
    }
}

/// Sixth-order central first derivative.
fn derivative<F: Fn(f64) -> C>(f: F, x: f64) -> C {
    let h = 1e-2;
    let d = |m: f64| f(x + m * h) - f(x - m * h);
    (45.0 * d(1.0) - 9.0 * d(2.0) + d(3.0)) / (60.0 * h)
}

/// `∂ₓψ(x;k)`: the phase is differentiated exactly, the slowly varying
/// factor numerically.
fn continuum_dx(params: &ModelParams, x: f64, k: C) -> C {
    let c = params.continuum_coefficients(k, false);
    let slow = |t: f64| params.continuum_basis(t).iter().zip(&c).map(|(g, c)| g * c).sum::<C>();
    (I * k * slow(x) + derivative(slow, x)) * (I * k * x).exp() * inv_sqrt_2pi()
}

/// `∫_{|x|>l} f ψ(·;k) dx` for an eigenfunction `f`, from Green's identity:
/// `(k² − λ)∫_a^b fψ = −[fψ' − f'ψ]_a^b`.
fn eigen_tail(params: &ModelParams, f: &SpectralFunction, k: C, l: f64) -> C {
    let w = |x: f64| {
        let psi = params.continuum_value(x, k);
        f.eval(x) * continuum_dx(params, x, k) - derivative(|t| f.eval(t), x) * psi
    };
    (w(l) - w(-l)) / (k * k - f.lambda())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum Variant {
    /// Continuum along the real axis (indented at excluded momenta) plus the
    /// printed discrete terms.
    Full,
    /// Bound-state model with the diagonal pair `Ψ₁, Ψ₂` in place of `ψ₀, ψ₁`.
    FullDiagonal { kappa: f64 },
    /// Punctured continuum minus the bare `ψ₀ψ₀/ε` counterterm.
    Reduced,
    /// Punctured continuum minus the `cos ε(x−x')`-modulated counterterm.
    Extended,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::FullDiagonal { .. } => "full-diagonal",
            Variant::Reduced => "reduced",
            Variant::Extended => "extended",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelFamily {
    model: ModelParams,
    variant: Variant,
    epsilon: f64,
    k_max: f64,
    orientation: Orientation,
}

struct MomentumRule {
    nodes: Vec<C>,
    weights: Vec<C>,
}

impl MomentumRule {
    fn from_path(rule: &PathRule) -> Self {
        MomentumRule { nodes: rule.nodes.clone(), weights: rule.weights.clone() }
    }

    fn from_panels(panels: &[(f64, f64)]) -> Self {
        let rule = gk15_nodes();
        let mut nodes = Vec::with_capacity(panels.len() * 15);
        let mut weights = Vec::with_capacity(panels.len() * 15);
        for &(a, b) in panels {
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for &(t, w) in &rule {
                nodes.push(C::new(c + h * t, 0.0));
                weights.push(C::new(h * w, 0.0));
            }
        }
        MomentumRule { nodes, weights }
    }
}

impl KernelFamily {
    pub fn new(model: ModelParams, variant: Variant, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter("epsilon must be positive".into()));
        }
        match variant {
            Variant::Full => {}
            Variant::FullDiagonal { kappa } => {
                if model.kind() != ModelKind::JordanBound {
                    return Err(Error::Parameter("the diagonal form exists only for the jordan-bound model".into()));
                }
                if !(kappa.is_finite() && kappa != 0.0) {
                    return Err(Error::Parameter("kappa must be finite and nonzero".into()));
                }
            }
            Variant::Reduced | Variant::Extended => match model.kind() {
                ModelKind::Threshold if model.n() == 1 => {}
                ModelKind::Threshold => {
                    return Err(Error::Unsupported("punctured kernels are given for the first-order threshold model".into()))
                }
                ModelKind::ContinuumBs => {
                    if epsilon >= model.alpha().re {
                        return Err(Error::Parameter("epsilon must be below alpha".into()));
                    }
                }
                _ => return Err(Error::Parameter("punctured kernels need a threshold or embedded eigenvalue".into())),
            },
        }
        let k = KernelFamily { model, variant, epsilon, k_max: K_MAX, orientation: Orientation::Down };
        k.check_cutoff()?;
        Ok(k)
    }

    fn check_cutoff(&self) -> Result<()> {
        let top = self.excluded().iter().fold(0.0f64, |m, p| m.max(p.abs())) + INDENT_RADIUS.max(self.epsilon);
        if self.k_max <= top + 1.0 {
            return Err(Error::Parameter("momentum cutoff too small".into()));
        }
        Ok(())
    }

    pub fn with_orientation(mut self, o: Orientation) -> Self {
        self.orientation = o;
        self
    }

    pub fn with_k_max(mut self, k_max: f64) -> Result<Self> {
        self.k_max = k_max;
        self.check_cutoff()?;
        Ok(self)
    }

    pub fn model(&self) -> &ModelParams {
        &self.model
    }
    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn k_max(&self) -> f64 {
        self.k_max
    }
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Real momenta at which the continuum states are singular.
    fn excluded(&self) -> Vec<f64> {
        match self.model.kind() {
            ModelKind::Threshold => vec![0.0],
            ModelKind::ContinuumBs => {
                let a = self.model.alpha().re;
                vec![-a, a]
            }
            _ => vec![],
        }
    }

    fn punctured(&self) -> bool {
        matches!(self.variant, Variant::Reduced | Variant::Extended)
    }

    /// Prefactor of the `ψ₀(x)ψ₀(x')` counterterm: the coefficient of the
    /// `1/ε` divergence of the punctured integral.
    pub fn counterterm_coefficient(&self) -> f64 {
        match self.model.kind() {
            ModelKind::ContinuumBs => {
                let a = self.model.alpha().re;
                8.0 * a * a / (PI * self.epsilon)
            }
            _ => 1.0 / (PI * self.epsilon),
        }
    }

    /// Pairs `(a, b)` contributing `a(x')·(b, φ)`.
    fn discrete_pairs(&self) -> Result<Vec<(SpectralFunction, SpectralFunction)>> {
        let b = self.model.bound_states();
        Ok(match (self.variant, self.model.kind()) {
            (Variant::FullDiagonal { kappa }, _) => {
                let [p, q] = self.model.rotated_states(kappa)?;
                vec![(p, p), (q, q)]
            }
            (Variant::Full, ModelKind::JordanBound) => vec![(b[0], b[1]), (b[1], b[0])],
            (Variant::Full, ModelKind::TwoLevel) => vec![(b[0], b[0]), (b[1], b[1])],
            _ => vec![],
        })
    }

    /// Coarse rule and its bisection.
    fn momentum_rules(&self) -> Result<[MomentumRule; 2]> {
        let km = self.k_max;
        if self.punctured() {
            let e = self.epsilon;
            let pieces: Vec<(f64, f64, f64, f64)> = match self.model.kind() {
                ModelKind::ContinuumBs => {
                    let a = self.model.alpha().re;
                    vec![(-km, -a - e, 0.0, e), (-a + e, a - e, e, e), (a + e, km, e, 0.0)]
                }
                _ => vec![(-km, -e, 0.0, e), (e, km, e, 0.0)],
            };
            let mut panels = Vec::new();
            for (a, b, ra, rb) in pieces {
                panels.extend(graded_cuts(b - a, K_PANEL, ra, rb).into_iter().map(|(u, v)| (a + u, a + v)));
            }
            let fine: Vec<(f64, f64)> = panels
                .iter()
                .flat_map(|&(a, b)| {
                    let m = 0.5 * (a + b);
                    [(a, m), (m, b)]
                })
                .collect();
            Ok([MomentumRule::from_panels(&panels), MomentumRule::from_panels(&fine)])
        } else {
            let indents: Vec<Indent> = self
                .excluded()
                .into_iter()
                .map(|c| Indent { center: c, radius: INDENT_RADIUS, orientation: self.orientation })
                .collect();
            let path = ContourPath::real_axis(-km, km, &indents)?;
            let rule = PathRule::new(&path, K_PANEL);
            Ok([MomentumRule::from_path(&rule), MomentumRule::from_path(&rule.refined())])
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelValue {
    pub x: f64,
    pub value: C,
    pub continuum: C,
    pub discrete: C,
    pub abs_error: f64,
    /// `φ(x')`.
    pub target: C,
    /// Whether `φ` satisfies the variant's declared decay class.
    pub within_class: bool,
}

impl KernelValue {
    pub fn deviation(&self) -> f64 {
        (self.value - self.target).norm()
    }
}

/// `Φ(k)` tabulated on both momentum rules, with the discrete pairings that do
/// not depend on `x'`.
struct Spectrum<'a> {
    kernel: &'a KernelFamily,
    phi: &'a TestFunction,
    rules: [MomentumRule; 2],
    values: [Vec<C>; 2],
    tail_error: f64,
    pairs: Vec<(SpectralFunction, QuadResult)>,
    counter: Option<(SpectralFunction, QuadResult)>,
}

impl<'a> Spectrum<'a> {
    fn new(kernel: &'a KernelFamily, phi: &'a TestFunction) -> Result<Self> {
        let params = &kernel.model;
        let (lo, hi, tail, eigen) = match phi.shape {
            Shape::Gaussian { .. } => {
                let (a, b) = phi.support().expect("compact");
                (a, b, 0.0, None)
            }
            Shape::Power { s } => {
                if s <= 0.5 {
                    return Err(Error::SlowDecay(2.0 * s));
                }
                // ∫_{|x|>L} |φ| ≤ 2L^{1−2s}/(2s−1)
                let l = (POWER_TAIL_TOL * (2.0 * s - 1.0) / 2.0).powf(1.0 / (1.0 - 2.0 * s)).max(STATE_EXTENT);
                if l > POWER_EXTENT_CAP {
                    return Err(Error::SlowDecay(2.0 * s));
                }
                (-l, l, 2.0 * l.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0), None)
            }
            Shape::State(f) => {
                if f.role() != Role::Eigen {
                    return Err(Error::Unsupported("only eigenfunctions are admitted as non-compact test states".into()));
                }
                if !kernel.punctured() && !kernel.excluded().is_empty() {
                    return Err(Error::Unsupported("non-compact test function on a deformed contour".into()));
                }
                (-STATE_EXTENT, STATE_EXTENT, 0.0, Some(f))
            }
        };
        let transform = Transform::new(params, phi, lo, hi);
        let rules = kernel.momentum_rules()?;
        let spectral = |k: C| -> C {
            let g = transform.eval(k);
            let c = params.continuum_coefficients(k, false);
            let mut v = g.iter().zip(&c).map(|(g, c)| g * c).sum::<C>() * inv_sqrt_2pi();
            if let Some(f) = eigen {
                v += eigen_tail(params, &f, k, STATE_EXTENT);
            }
            v
        };
        let values = [
            rules[0].nodes.iter().map(|&k| spectral(k)).collect(),
            rules[1].nodes.iter().map(|&k| spectral(k)).collect(),
        ];
        // |ψ(x';−k)| ≲ 1/√(2π) away from the excluded points
        let tail_error = tail * inv_sqrt_2pi() * inv_sqrt_2pi() * 2.0 * kernel.k_max;
        let extent = kernel.model.default_grid().0;
        let pairs = kernel
            .discrete_pairs()?
            .into_iter()
            .map(|(a, b)| Ok((a, pair(|x| b.eval(x), phi, extent)?)))
            .collect::<Result<Vec<_>>>()?;
        let counter = if kernel.variant == Variant::Reduced {
            let psi0 = params.bound_states()[0];
            Some((psi0, pair(|x| psi0.eval(x), phi, extent)?))
        } else {
            None
        };
        Ok(Spectrum { kernel, phi, rules, values, tail_error, pairs, counter })
    }

    fn continuum(&self, level: usize, xp: f64) -> C {
        let r = &self.rules[level];
        let p = &self.kernel.model;
        r.nodes.iter().zip(&r.weights).zip(&self.values[level]).map(|((k, w), v)| p.continuum_value(xp, -k) * v * w).sum()
    }

    fn apply(&self, xp: f64) -> Result<KernelValue> {
        let coarse = self.continuum(0, xp);
        let fine = self.continuum(1, xp);
        let mut err = (fine - coarse).norm() + self.tail_error;
        let mut discrete = C::new(0.0, 0.0);
        for (a, r) in &self.pairs {
            let av = a.eval(xp);
            discrete += av * r.value;
            err += av.norm() * r.abs_error;
        }
        if let Some((psi0, r)) = &self.counter {
            let c = self.kernel.counterterm_coefficient() * psi0.eval(xp);
            discrete -= c * r.value;
            err += c.norm() * r.abs_error;
        }
        if self.kernel.variant == Variant::Extended {
            let psi0 = self.kernel.model.bound_states()[0];
            let e = self.kernel.epsilon;
            let extent = 32.0 / e;
            let c = self.kernel.counterterm_coefficient() * psi0.eval(xp);
            let loose = COUNTERTERM_TOL / self.kernel.counterterm_coefficient();
            let r = pair_within(|x| (e * (x - xp)).cos() * psi0.eval(x), self.phi, extent, loose)?;
            discrete -= c * r.value;
            err += c.norm() * r.abs_error;
        }
        let within_class = self.kernel.variant != Variant::Reduced || self.phi.gamma > 1.0;
        Ok(KernelValue {
            x: xp,
            value: fine + discrete,
            continuum: fine,
            discrete,
            abs_error: err,
            target: self.phi.eval(xp),
            within_class,
        })
    }
}

/// `∫K(x,x')φ(x)dx` for one probe point.
pub fn apply_kernel(kernel: &KernelFamily, phi: &TestFunction, xp: f64) -> Result<KernelValue> {
    Ok(apply_kernel_multi(kernel, phi, &[xp])?.remove(0))
}

/// As [`apply_kernel`] for several probe points sharing one spectral transform.
pub fn apply_kernel_multi(kernel: &KernelFamily, phi: &TestFunction, xs: &[f64]) -> Result<Vec<KernelValue>> {
    if xs.is_empty() {
        return Ok(Vec::new());
    }
    let s = Spectrum::new(kernel, phi)?;
    xs.iter().map(|&x| s.apply(x)).collect()
}

/// `Extended − Reduced` computed directly:
/// `c·ψ₀(x')∫2sin²(ε(x−x')/2)ψ₀(x)φ(x)dx`.
pub fn extension_correction(kernel: &KernelFamily, phi: &TestFunction, xp: f64) -> Result<QuadResult> {
    if !kernel.punctured() {
        return Err(Error::Parameter("correction exists only for punctured kernels".into()));
    }
    let psi0 = kernel.model.bound_states()[0];
    let e = kernel.epsilon;
    let r = pair_within(
        |x| {
            let s = (0.5 * e * (x - xp)).sin();
            2.0 * s * s * psi0.eval(x)
        },
        phi,
        32.0 / e,
        COUNTERTERM_TOL / kernel.counterterm_coefficient(),
    )?;
    let c = kernel.counterterm_coefficient() * psi0.eval(xp);
    Ok(QuadResult { value: c * r.value, abs_error: c.norm() * r.abs_error, evaluations: r.evaluations })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub variant: Variant,
    pub x: f64,
    pub target: C,
    pub eps: Vec<f64>,
    pub values: Vec<C>,
    pub errors: Vec<f64>,
    /// Fitted exponent `p` in `error ∝ ε^p`.
    pub rate: Option<f64>,
    pub monotone: bool,
}

/// `|apply_kernel − φ(x')|` along a decreasing `ε` sequence.
pub fn convergence_study(
    model: &ModelParams,
    variant: Variant,
    eps: &[f64],
    phi: &TestFunction,
    xp: f64,
) -> Result<ConvergenceStudy> {
    if eps.is_empty() || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter("epsilon sequence must be non-empty and strictly decreasing".into()));
    }
    let mut values = Vec::with_capacity(eps.len());
    let mut errors = Vec::with_capacity(eps.len());
    for &e in eps {
        let v = apply_kernel(&KernelFamily::new(*model, variant, e)?, phi, xp)?;
        values.push(v.value);
        errors.push(v.deviation());
    }
    let rate = log_log_slope(eps, &errors);
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(ConvergenceStudy { variant, x: xp, target: phi.eval(xp), eps: eps.to_vec(), values, errors, rate, monotone })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `(sin ε(x−x')/(x−x'), φ)`.
    Sine,
    /// `(sin²[ε(x−x')/2]/(ε(x−z)(x'−z)), φ)`.
    SineSquared,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FunctionalValue {
    pub kind: Functional,
    pub epsilon: f64,
    pub value: C,
    pub abs_error: f64,
    /// `√(επ∫|φ|²)` for the sine functional.
    pub bound: Option<f64>,
    pub within_class: bool,
}

fn sin_over(e: f64, d: f64) -> f64 {
    let t = e * d;
    if t.abs() < 1e-4 {
        e * (1.0 - t * t / 6.0)
    } else {
        t.sin() / d
    }
}

/// `sin²(εd/2)/ε`, zero at `ε = 0`.
fn half_sin_sq_over(e: f64, d: f64) -> f64 {
    if e == 0.0 {
        return 0.0;
    }
    let t = 0.5 * e * d;
    if t.abs() < 1e-4 {
        0.25 * e * d * d * (1.0 - t * t / 3.0)
    } else {
        t.sin().powi(2) / e
    }
}

pub fn smeared_functional(which: Functional, z: C, phi: &TestFunction, xp: f64, eps: f64) -> Result<FunctionalValue> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::Parameter("epsilon must be finite and non-negative".into()));
    }
    let extent = if eps > 0.0 { 32.0 / eps } else { 0.0 };
    let (r, bound, within_class) = match which {
        Functional::Sine => {
            let r = pair(|x| C::new(sin_over(eps, x - xp), 0.0), phi, extent)?;
            let norm = pair(|x| phi.eval(x).conj(), phi, 0.0)?.value.re;
            (r, Some((eps * PI * norm).sqrt()), true)
        }
        Functional::SineSquared => {
            let r = pair(|x| half_sin_sq_over(eps, x - xp) / ((x - z) * (xp - z)), phi, extent)?;
            (r, None, phi.gamma > 1.0)
        }
    };
    Ok(FunctionalValue { kind: which, epsilon: eps, value: r.value, abs_error: r.abs_error, bound, within_class })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub sigma: f64,
    pub center: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSpec {
    pub s: f64,
    pub gamma: f64,
}

/// The shipped test battery: Gaussians for positive checks, slowly decaying
/// functions for negative ones, and the probe points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub gaussians: Vec<GaussianSpec>,
    pub slow: Vec<PowerSpec>,
    pub probes: Vec<f64>,
}

impl Battery {
    pub fn builtin() -> Battery {
        Self::from_json(include_str!("../config/battery.json")).expect("shipped battery parses")
    }

    pub fn from_json(s: &str) -> Result<Battery> {
        serde_json::from_str(s).map_err(|e| Error::Parameter(format!("battery: {e}")))
    }

    pub fn gaussian_functions(&self) -> Result<Vec<TestFunction>> {
        self.gaussians.iter().map(|g| TestFunction::gaussian(g.sigma, g.center)).collect()
    }

    pub fn slow_functions(&self) -> Result<Vec<TestFunction>> {
        self.slow.iter().map(|p| TestFunction::power(p.s, p.gamma)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold() -> ModelParams {
        ModelParams::threshold(1, I).unwrap()
    }

    fn gauss() -> TestFunction {
        TestFunction::gaussian(1.0, 0.0).unwrap()
    }

    #[test]
    fn bound_model_full_kernel_reproduces_gaussian() {
        let k = KernelFamily::new(ModelParams::jordan_bound(1.0, I).unwrap(), Variant::Full, 1.0).unwrap();
        for v in apply_kernel_multi(&k, &gauss(), &[0.0, 1.0]).unwrap() {
            assert!(v.deviation() < 1e-4, "x'={}: {}", v.x, v.deviation());
            assert!(v.abs_error < 1e-4);
        }
    }

    #[test]
    fn extended_threshold_kernel_on_gaussian() {
        let k = KernelFamily::new(threshold(), Variant::Extended, 1e-3).unwrap();
        let v = apply_kernel(&k, &gauss(), 0.5).unwrap();
        assert!(v.deviation() < 1e-3, "{}", v.deviation());
    }

    #[test]
    fn extended_reproduces_and_reduced_annihilates_threshold_state() {
        let p = threshold();
        let psi0 = TestFunction::state(p.bound_states()[0], 0.0).unwrap();
        let ext = apply_kernel(&KernelFamily::new(p, Variant::Extended, 1e-3).unwrap(), &psi0, 0.5).unwrap();
        assert!(ext.deviation() < 1e-3, "{}", ext.deviation());
        let red = apply_kernel(&KernelFamily::new(p, Variant::Reduced, 1e-3).unwrap(), &psi0, 0.5).unwrap();
        assert!(red.value.norm() < 1e-3, "{}", red.value);
        assert!(!red.within_class);
    }

    #[test]
    fn extended_minus_reduced_is_the_correction() {
        let p = threshold();
        let phi = TestFunction::gaussian(0.5, 1.0).unwrap();
        let e = 0.05;
        let red = apply_kernel(&KernelFamily::new(p, Variant::Reduced, e).unwrap(), &phi, 0.3).unwrap();
        let kx = KernelFamily::new(p, Variant::Extended, e).unwrap();
        let ext = apply_kernel(&kx, &phi, 0.3).unwrap();
        let corr = extension_correction(&kx, &phi, 0.3).unwrap();
        let tol = red.abs_error + ext.abs_error + corr.abs_error + 1e-9;
        assert!((ext.value - red.value - corr.value).norm() < tol);
    }

    #[test]
    fn reduced_converges_monotonically_on_gaussian() {
        let s = convergence_study(&threshold(), Variant::Reduced, &[0.1, 0.05, 0.025, 0.0125], &gauss(), 0.5).unwrap();
        assert!(s.monotone, "{:?}", s.errors);
        assert!(s.rate.unwrap() > 0.5);
    }

    #[test]
    fn embedded_model_kernels() {
        let p = ModelParams::continuum_bs(1.0, I).unwrap();
        let psi0 = TestFunction::state(p.bound_states()[0], 0.0).unwrap();
        let red = apply_kernel(&KernelFamily::new(p, Variant::Reduced, 1e-3).unwrap(), &psi0, 0.3).unwrap();
        assert!(red.value.norm() < 1e-3, "{}", red.value);
        let ext = apply_kernel(&KernelFamily::new(p, Variant::Extended, 1e-2).unwrap(), &psi0, 0.3).unwrap();
        assert!(ext.deviation() < 5e-2 * ext.target.norm(), "{} vs {}", ext.value, ext.target);
        let s = convergence_study(&p, Variant::Extended, &[0.1, 0.05, 0.025], &gauss(), 0.3).unwrap();
        assert!(s.monotone, "{:?}", s.errors);
        assert!(s.rate.unwrap() > 0.8, "{:?}", s.rate);
    }

    #[test]
    fn sine_bound_and_trivial_case() {
        let phi = gauss();
        let v = smeared_functional(Functional::Sine, I, &phi, 0.5, 1e-3).unwrap();
        assert!(v.value.norm() < v.bound.unwrap());
        let zero = smeared_functional(Functional::Sine, I, &phi, 0.5, 0.0).unwrap();
        assert_eq!(zero.value, C::new(0.0, 0.0));
    }

    #[test]
    fn sine_squared_records_class() {
        let slow = TestFunction::power(0.6, 1.0).unwrap();
        let v = smeared_functional(Functional::SineSquared, I, &slow, 0.0, 1e-2).unwrap();
        assert!(!v.within_class && v.value.re.is_finite());
        let v = smeared_functional(Functional::SineSquared, I, &gauss(), 0.0, 1e-2).unwrap();
        assert!(v.within_class && v.value.norm() < 1e-1);
    }

    #[test]
    fn membership_of_battery() {
        let b = Battery::builtin();
        assert_eq!(b.gaussians.len(), 5);
        for f in b.gaussian_functions().unwrap() {
            assert!(f.membership().unwrap().member);
        }
        let m = TestFunction::power(0.5, 1.0).unwrap().membership().unwrap();
        assert!(!m.member);
        let m = TestFunction::power(0.6, 1.0).unwrap().membership().unwrap();
        assert!(m.member);
    }

    #[test]
    fn slow_functions_are_refused_by_kernels() {
        let k = KernelFamily::new(threshold(), Variant::Extended, 0.1).unwrap();
        let r = apply_kernel(&k, &TestFunction::power(0.6, 1.0).unwrap(), 0.0);
        assert!(matches!(r, Err(Error::SlowDecay(_))));
    }

    #[test]
    fn invalid_families() {
        let jb = ModelParams::jordan_bound(1.0, I).unwrap();
        assert!(KernelFamily::new(jb, Variant::Reduced, 0.1).is_err());
        assert!(KernelFamily::new(threshold(), Variant::Full, 0.0).is_err());
        assert!(KernelFamily::new(threshold(), Variant::FullDiagonal { kappa: 1.0 }, 0.1).is_err());
        let cbs = ModelParams::continuum_bs(1.0, I).unwrap();
        assert!(KernelFamily::new(cbs, Variant::Extended, 1.5).is_err());
        assert!(convergence_study(&threshold(), Variant::Reduced, &[0.01, 0.1], &gauss(), 0.0).is_err());
    }
}
