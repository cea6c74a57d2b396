//! The transposition bilinear form `(f, g) = ∫ f g dx`, Gram tables of the
//! printed relations and smeared continuum relations.

use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams, SpectralFunction};
use crate::quadrature::{integrate_real_line, Adaptive, RealLineOptions};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

type C = Complex64;

pub const DEFAULT_TOL: f64 = 1e-10;

fn real_line_options(f: &SpectralFunction, g: &SpectralFunction) -> RealLineOptions {
    let osc = !(f.frequencies().is_empty() && g.frequencies().is_empty());
    let extent = f.params().default_grid().0.max(g.params().default_grid().0);
    RealLineOptions { oscillatory: osc, ..RealLineOptions::default() }.with_extent(extent)
}

/// `∫ f(x) g(x) dx` without conjugation.
pub fn binorm(f: &SpectralFunction, g: &SpectralFunction, tol: f64) -> Result<C> {
    Ok(binorm_detailed(f, g, tol)?.0)
}

fn binorm_detailed(f: &SpectralFunction, g: &SpectralFunction, tol: f64) -> Result<(C, f64)> {
    let r = integrate_real_line(|x| f.eval(x) * g.eval(x), tol, real_line_options(f, g))?;
    Ok((r.value, r.abs_error))
}

#[derive(Clone, Debug, Serialize)]
pub struct BinormEntry {
    pub row: String,
    pub col: String,
    pub value: Option<C>,
    pub abs_error: f64,
    /// Set when the pairing could not be integrated pointwise.
    pub note: Option<String>,
    pub target: Option<C>,
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BinormTable {
    pub labels: Vec<String>,
    pub entries: Vec<Vec<BinormEntry>>,
    pub tolerance: f64,
    /// Largest `|(f,g) − (g,f)|` over computed pairs.
    pub asymmetry: f64,
}

impl BinormTable {
    pub fn get(&self, i: usize, j: usize) -> Option<C> {
        self.entries[i][j].value
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.pass != Some(false))
    }

    pub fn max_deviation(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .filter_map(|e| Some((e.value? - e.target?).norm()))
            .fold(0.0, f64::max)
    }
}

/// Full table over `states`, both orders computed independently.
pub fn gram(states: &[SpectralFunction], tol: f64) -> BinormTable {
    gram_with_targets(states, &[], tol)
}

/// `targets[i][j]`, when present, is compared against entry `(i, j)` with
/// tolerance `100·tol`.
pub fn gram_with_targets(states: &[SpectralFunction], targets: &[Vec<Option<C>>], tol: f64) -> BinormTable {
    let n = states.len();
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let target = targets.get(i).and_then(|r| r.get(j)).copied().flatten();
            let (value, abs_error, note) = match binorm_detailed(&states[i], &states[j], tol) {
                Ok((v, e)) => (Some(v), e, None),
                Err(Error::SlowDecay(p)) => {
                    (None, f64::INFINITY, Some(format!("needs smearing (decay exponent {p:.2})")))
                }
                Err(e) => (None, f64::INFINITY, Some(e.to_string())),
            };
            let pass = target.map(|t| value.is_some_and(|v| (v - t).norm() <= 100.0 * tol));
            row.push(BinormEntry {
                row: states[i].label(),
                col: states[j].label(),
                value,
                abs_error,
                note,
                target,
                pass,
            });
        }
        entries.push(row);
    }
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if let (Some(a), Some(b)) = (entries[i][j].value, entries[j][i].value) {
                asymmetry = asymmetry.max((a - b).norm());
            }
        }
    }
    BinormTable { labels: states.iter().map(|s| s.label()).collect(), entries, tolerance: tol, asymmetry }
}

/// The bound-state block of each model with its printed binorm targets.
/// `None` marks pairings without a printed value.
pub fn printed_gram(params: &ModelParams) -> (Vec<SpectralFunction>, Vec<Vec<Option<C>>>) {
    let states = params.bound_states();
    let z = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let targets = match params.kind() {
        ModelKind::JordanBound => vec![vec![Some(z), Some(one)], vec![Some(one), Some(z)]],
        ModelKind::TwoLevel => vec![vec![Some(one), Some(z)], vec![Some(z), Some(one)]],
        ModelKind::Threshold => vec![vec![Some(z); states.len()]; states.len()],
        // ψ₁ is a standing wave; its square has no integral.
        ModelKind::ContinuumBs => vec![vec![Some(z), Some(z)], vec![Some(z), None]],
    };
    (states, targets)
}

/// The rotated pair `Ψ₁, Ψ₂` and its identity Gram matrix.
pub fn rotated_gram(params: &ModelParams, kappa: f64) -> Result<(Vec<SpectralFunction>, Vec<Vec<Option<C>>>)> {
    let r = params.rotated_states(kappa)?;
    let z = Some(C::new(0.0, 0.0));
    let one = Some(C::new(1.0, 0.0));
    Ok((r.to_vec(), vec![vec![one, z], vec![z, one]]))
}

/// Gaussian bump in momentum, shifted down by its value at `6σ` so it
/// vanishes continuously there, then normalized to unit `L²` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Amplitude {
    center: f64,
    sigma: f64,
    scale: f64,
}

impl Amplitude {
    pub fn gaussian(center: f64, sigma: f64) -> Result<Self> {
        if !(center.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Parameter("amplitude needs finite center and positive width".into()));
        }
        let raw = Amplitude { center, sigma, scale: 1.0 };
        let (lo, hi) = raw.support();
        let norm2 = Adaptive::new(1e-14)
            .with_initial_width(sigma)
            .integrate(|k| C::new(raw.eval(k).powi(2), 0.0), lo, hi)?
            .value
            .re;
        Ok(Amplitude { scale: 1.0 / norm2.sqrt(), ..raw })
    }

    pub fn center(&self) -> f64 {
        self.center
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - 6.0 * self.sigma, self.center + 6.0 * self.sigma)
    }

    pub fn eval(&self, k: f64) -> f64 {
        let u = (k - self.center) / self.sigma;
        if u.abs() >= 6.0 {
            return 0.0;
        }
        self.scale * ((-0.5 * u * u).exp() - (-18.0f64).exp())
    }
}

/// `x ↦ ∫ a(k) w(±k) ψ(x; ±k) dk` evaluated through the separated form.
pub struct Packet {
    params: ModelParams,
    nodes: Vec<f64>,
    coef: Vec<Vec<C>>,
    reach: f64,
}

impl Packet {
    /// `sign = −1` builds the partner packet at reflected momenta.
    pub fn new(params: &ModelParams, a: &Amplitude, sign: f64, weighted: bool) -> Result<Self> {
        let (lo, hi) = a.support();
        let reach = 14.0 / a.sigma + 10.0;
        let panels = ((hi - lo) * reach / PI).ceil() as usize + 16;
        let mut nodes = Vec::with_capacity(panels * 15);
        let mut coef = Vec::with_capacity(panels * 15);
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let c = lo + h * (p as f64 + 0.5);
            for (t, w) in kronrod_nodes() {
                let k = c + 0.5 * h * t;
                let kk = C::new(sign * k, 0.0);
                if !weighted && params.momentum_denominator(kk).norm() <= 1e-300 {
                    return Err(Error::ExcludedMomentum(sign * k));
                }
                let amp = a.eval(k) * w * 0.5 * h;
                nodes.push(sign * k);
                coef.push(params.continuum_coefficients(kk, weighted).into_iter().map(|c| c * amp).collect());
            }
        }
        Ok(Packet { params: *params, nodes, coef, reach })
    }

    pub fn eval(&self, x: f64) -> C {
        let g = self.params.continuum_basis(x);
        let mut acc = vec![C::new(0.0, 0.0); g.len()];
        for (k, c) in self.nodes.iter().zip(&self.coef) {
            let e = C::from_polar(1.0, k * x);
            for (a, cj) in acc.iter_mut().zip(c) {
                *a += cj * e;
            }
        }
        acc.iter().zip(&g).map(|(a, g)| a * g).sum::<C>() / (2.0 * PI).sqrt()
    }

    /// Radius beyond which the packet is negligible.
    pub fn reach(&self) -> f64 {
        self.reach
    }
}

fn kronrod_nodes() -> impl Iterator<Item = (f64, f64)> {
    use crate::quadrature::gk15_nodes;
    gk15_nodes().into_iter()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmearedOverlap {
    pub value: C,
    pub target: C,
    pub abs_error: f64,
}

impl SmearedOverlap {
    pub fn deviation(&self) -> f64 {
        (self.value - self.target).norm()
    }
}

/// `∫ [∫ a(k) w(k)ψ(x;k) dk] [∫ b(k') w(−k')ψ(x;−k') dk'] dx` against
/// `∫ a b w(k) w(−k) dk`; `w ≡ 1` for the models without excluded momenta.
pub fn smeared_continuum_orthonormality(
    params: &ModelParams,
    a: &Amplitude,
    b: &Amplitude,
    tol: f64,
) -> Result<SmearedOverlap> {
    let pa = Packet::new(params, a, 1.0, true)?;
    let pb = Packet::new(params, b, -1.0, true)?;
    let x_max = pa.reach().max(pb.reach());
    let r = Adaptive::new(tol).with_initial_width(1.0).integrate(|x| pa.eval(x) * pb.eval(x), -x_max, x_max)?;
    let (la, ha) = a.support();
    let (lb, hb) = b.support();
    let (lo, hi) = (la.max(lb), ha.min(hb));
    let target = if hi > lo {
        Adaptive::new(1e-13)
            .with_initial_width(a.sigma.min(b.sigma))
            .integrate(
                |k| {
                    let kk = C::new(k, 0.0);
                    a.eval(k) * b.eval(k) * params.continuum_weight(kk) * params.continuum_weight(-kk)
                },
                lo,
                hi,
            )?
            .value
    } else {
        C::new(0.0, 0.0)
    };
    Ok(SmearedOverlap { value: r.value, target, abs_error: r.abs_error })
}

/// `∫ bound(x) [∫ a(k) w(k)ψ(x;k) dk] dx`, printed to vanish.
pub fn bound_continuum_orthogonality(
    params: &ModelParams,
    bound: &SpectralFunction,
    a: &Amplitude,
    tol: f64,
) -> Result<C> {
    let pa = Packet::new(params, a, 1.0, true)?;
    let x_max = pa.reach().max(params.default_grid().0);
    Ok(Adaptive::new(tol)
        .with_initial_width(1.0)
        .integrate(|x| bound.eval(x) * pa.eval(x), -x_max, x_max)?
        .value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zi() -> C {
        C::new(0.0, 1.0)
    }

    #[test]
    fn jordan_bound_relations() {
        let p = ModelParams::jordan_bound(1.0, zi()).unwrap();
        let (s, t) = printed_gram(&p);
        let g = gram_with_targets(&s, &t, DEFAULT_TOL);
        assert!(g.max_deviation() < 1e-8, "{}", g.max_deviation());
        assert!(g.asymmetry <= 1e-12);
    }

    #[test]
    fn two_level_relations() {
        let p = ModelParams::two_level(C::new(1.0, 0.0), 0.3, zi()).unwrap();
        let (s, t) = printed_gram(&p);
        let g = gram_with_targets(&s, &t, DEFAULT_TOL);
        assert!(g.max_deviation() < 1e-8);
        assert!(binorm(&s[0], &s[1], DEFAULT_TOL).unwrap().norm() < 1e-8);
    }

    #[test]
    fn continuum_bs_relations() {
        let p = ModelParams::continuum_bs(1.0, zi()).unwrap();
        let (s, t) = printed_gram(&p);
        let g = gram_with_targets(&s, &t, DEFAULT_TOL);
        assert!(g.max_deviation() < 1e-8, "{}", g.max_deviation());
        assert!(g.entries[1][1].value.is_none());
        assert!(g.entries[1][1].note.as_deref().unwrap().contains("smearing"));
    }

    #[test]
    fn threshold_chain_is_self_orthogonal() {
        for n in 1..=5 {
            let p = ModelParams::threshold(n, zi()).unwrap();
            let (s, t) = printed_gram(&p);
            let g = gram_with_targets(&s, &t, DEFAULT_TOL);
            assert!(g.max_deviation() < 1e-8, "n={n}: {}", g.max_deviation());
        }
    }

    #[test]
    fn rotated_pair_is_orthonormal() {
        let p = ModelParams::jordan_bound(1.0, zi()).unwrap();
        for kappa in [1.0, 0.5, 2.0] {
            let (s, t) = rotated_gram(&p, kappa).unwrap();
            let g = gram_with_targets(&s, &t, DEFAULT_TOL);
            assert!(g.max_deviation() < 1e-8);
        }
    }

    #[test]
    fn amplitude_is_normalized_and_vanishes_at_edges() {
        let a = Amplitude::gaussian(1.0, 0.2).unwrap();
        let n = Adaptive::new(1e-13).integrate(|k| C::new(a.eval(k).powi(2), 0.0), -1.0, 3.0).unwrap();
        assert!((n.value.re - 1.0).abs() < 1e-12);
        assert_eq!(a.eval(1.0 + 1.2), 0.0);
        assert!(a.eval(1.0 + 1.19999) < 1e-9);
    }

    #[test]
    fn smeared_overlaps() {
        let p = ModelParams::jordan_bound(1.0, zi()).unwrap();
        let a = Amplitude::gaussian(1.0, 0.2).unwrap();
        let same = smeared_continuum_orthonormality(&p, &a, &a, 1e-10).unwrap();
        assert!(same.deviation() < 1e-4, "{}", same.deviation());
        let near = Amplitude::gaussian(1.0, 0.08).unwrap();
        let far = Amplitude::gaussian(2.0, 0.08).unwrap();
        let disjoint = smeared_continuum_orthonormality(&p, &near, &far, 1e-10).unwrap();
        assert_eq!(disjoint.target, C::new(0.0, 0.0));
        assert!(disjoint.value.norm() < 1e-6, "{:?}", disjoint);
        let t = ModelParams::threshold(1, zi()).unwrap();
        let w = smeared_continuum_orthonormality(&t, &a, &a, 1e-10).unwrap();
        assert!(w.deviation() < 1e-4);
        let expected: f64 = {
            let f = |k: f64| C::new(k * k * a.eval(k).powi(2), 0.0);
            Adaptive::new(1e-13).integrate(f, -0.2, 2.2).unwrap().value.re
        };
        assert!((w.target.re - expected).abs() < 1e-10);
    }

    #[test]
    fn bound_states_are_orthogonal_to_continuum_packets() {
        let p = ModelParams::jordan_bound(1.0, zi()).unwrap();
        let a = Amplitude::gaussian(1.0, 0.2).unwrap();
        for s in p.bound_states() {
            let v = bound_continuum_orthogonality(&p, &s, &a, 1e-10).unwrap();
            assert!(v.norm() < 1e-6, "{}", v);
        }
        let c = ModelParams::continuum_bs(1.0, zi()).unwrap();
        let s = c.bound_states();
        let v = bound_continuum_orthogonality(&c, &s[1], &a, 1e-10).unwrap();
        assert!(v.norm() < 1e-4, "{}", v);
    }
}
