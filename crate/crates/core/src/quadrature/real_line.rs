use super::{Adaptive, QuadResult};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

type C = Complex64;

#[derive(Clone, Copy, Debug)]
pub struct RealLineOptions {
    /// Known algebraic decay exponent `p` in `|f| ≲ |x|^{-p}`.
    pub decay_hint: Option<f64>,
    /// The integrand keeps oscillating at large `|x|`.
    pub oscillatory: bool,
    /// The integrand has structure out to at least this radius.
    pub min_extent: f64,
    pub max_doublings: usize,
    /// Width of the initial uniform partition handed to the adaptive rule.
    pub panel_width: f64,
}

impl Default for RealLineOptions {
    fn default() -> Self {
        RealLineOptions { decay_hint: None, oscillatory: false, min_extent: 0.0, max_doublings: 7, panel_width: 1.0 }
    }
}

impl RealLineOptions {
    pub fn oscillatory() -> Self {
        RealLineOptions { oscillatory: true, ..Default::default() }
    }
    pub fn with_extent(mut self, l: f64) -> Self {
        self.min_extent = l;
        self
    }
    pub fn with_decay(mut self, p: f64) -> Self {
        self.decay_hint = Some(p);
        self
    }
}

fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

/// `C^∞` cutoff: 1 on `[0, 1/2]`, 0 beyond 1.
pub fn smooth_window(u: f64) -> f64 {
    1.0 - smooth_step(2.0 * u.abs() - 1.0)
}

fn envelope<F: Fn(f64) -> C>(f: &F, r: f64) -> f64 {
    let n = 257;
    (0..n)
        .map(|i| {
            let x = r * (1.0 + i as f64 / (n - 1) as f64);
            f(x).norm().max(f(-x).norm())
        })
        .fold(0.0, f64::max)
}

/// Empirical decay exponent of `|f|` from its envelope over the octaves
/// `[r, 2r]`, `[2r, 4r]`, `[4r, 8r]`.
pub fn decay_exponent<F: Fn(f64) -> C>(f: &F, r: f64) -> f64 {
    let e: Vec<f64> = [r, 2.0 * r, 4.0 * r].iter().map(|&s| envelope(f, s)).collect();
    if e[2] <= 1e-300 || e[1] <= 1e-300 {
        return f64::INFINITY;
    }
    if e[0] <= 0.0 {
        return f64::INFINITY;
    }
    (e[0] / e[2]).log2() / 2.0
}

/// Round to a multiple of 1/20 when within 1/100 of one; estimates from the
/// envelope carry `O(r⁻²)` corrections that spoil the first elimination.
fn snap_exponent(p: f64) -> f64 {
    let q = (p * 20.0).round() / 20.0;
    if (p - q).abs() < 0.01 {
        q
    } else {
        p
    }
}

/// Integral over the whole real line.  A smooth window of radius `L` is
/// applied and `L` doubled; the window makes the truncation error a power
/// series in `1/L`, which Richardson extrapolation removes.
pub fn integrate_real_line<F: Fn(f64) -> C>(f: F, tol: f64, opts: RealLineOptions) -> Result<QuadResult> {
    if !(tol > 0.0) {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let r0 = 32f64.max(opts.min_extent / 4.0);
    let p = match opts.decay_hint {
        Some(p) => p,
        None => decay_exponent(&f, r0),
    };
    if p.is_nan() || p <= 0.25 || (!opts.oscillatory && p <= 1.0) {
        return Err(Error::SlowDecay(p));
    }
    let exponents: Vec<f64> = if p > 40.0 {
        Vec::new()
    } else if opts.oscillatory && opts.decay_hint.is_none() {
        (1..=opts.max_doublings + 1).map(|j| j as f64).collect()
    } else {
        let q = snap_exponent(p);
        (0..=opts.max_doublings).map(|j| q - 1.0 + j as f64).collect()
    };
    let l0 = 256f64.max(opts.min_extent);
    let quad_tol = tol / 20.0;
    let rule = Adaptive::new(quad_tol).with_initial_width(opts.panel_width);
    let mut evals = 0usize;
    let mut qerr = 0.0;
    let mut inner = rule.integrate(&f, -l0 / 2.0, l0 / 2.0)?;
    evals += inner.evaluations;
    qerr += inner.abs_error;
    let mut table: Vec<Vec<C>> = Vec::new();
    let mut l = l0;
    for m in 0..=opts.max_doublings {
        if m > 0 {
            let left = rule.integrate(&f, -l / 2.0, -l / 4.0)?;
            let right = rule.integrate(&f, l / 4.0, l / 2.0)?;
            inner = inner + left + right;
            evals += left.evaluations + right.evaluations;
            qerr += left.abs_error + right.abs_error;
        }
        let ll = l;
        let g = |x: f64| f(x) * smooth_window(x / ll);
        let left = rule.integrate(g, -l, -l / 2.0)?;
        let right = rule.integrate(g, l / 2.0, l)?;
        evals += left.evaluations + right.evaluations;
        qerr += left.abs_error + right.abs_error;
        let t = inner.value + left.value + right.value;
        let mut row = vec![t];
        for j in 0..m.min(exponents.len()) {
            let fct = 2f64.powf(exponents[j]);
            let prev = table[m - 1][j];
            row.push((fct * row[j] - prev) / (fct - 1.0));
        }
        table.push(row);
        let min_levels = if exponents.is_empty() { 1 } else { 2 };
        if m >= min_levels {
            let cur = *table[m].last().expect("row");
            let prev = *table[m - 1].last().expect("row");
            let diff = (cur - prev).norm();
            if diff + qerr <= tol {
                return Ok(QuadResult { value: cur, abs_error: diff + qerr, evaluations: evals });
            }
        }
        l *= 2.0;
    }
    let m = table.len() - 1;
    let diff = (table[m].last().expect("row") - table[m - 1].last().expect("row")).norm();
    Err(Error::ToleranceNotMet { requested: tol, estimate: diff + qerr })
}

/// Trapezoid rule after the substitution `x = s·sinh((π/2)·sinh t)`.
/// Converges geometrically for analytic integrands with algebraic tails and
/// is independent of the adaptive machinery; used as a cross-check.
pub fn sinh_sinh<F: Fn(f64) -> C>(f: F, scale: f64, h: f64, t_max: f64) -> C {
    let n = (t_max / h).ceil() as i64;
    let mut sum = C::new(0.0, 0.0);
    for j in -n..=n {
        let t = j as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let x = scale * u.sinh();
        let dx = scale * FRAC_PI_2 * t.cosh() * u.cosh();
        let v = f(x);
        if v.re.is_finite() && v.im.is_finite() && dx.is_finite() {
            sum += v * dx;
        }
    }
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian() {
        let r = integrate_real_line(|x| C::new((-x * x).exp(), 0.0), 1e-10, RealLineOptions::default()).unwrap();
        assert!((r.value.re - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn double_pole_integrates_to_zero() {
        let z = C::new(0.0, 1.0);
        let r = integrate_real_line(|x| 1.0 / (x - z).powi(2), 1e-10, RealLineOptions::default()).unwrap();
        assert!(r.value.norm() < 1e-10, "{}", r.value);
        let r = integrate_real_line(|x| 2.0 / (x - z).powi(4), 1e-10, RealLineOptions::default()).unwrap();
        assert!(r.value.norm() < 1e-10);
    }

    #[test]
    fn lorentzian_tail_is_extrapolated() {
        let r = integrate_real_line(|x| C::new(1.0 / (1.0 + x * x), 0.0), 1e-10, RealLineOptions::default()).unwrap();
        assert!((r.value.re - PI).abs() < 1e-10);
    }

    #[test]
    fn fractional_decay() {
        // ∫ (1+x²)^{-3/4} dx = √π Γ(1/4)/Γ(3/4)
        let exact = PI.sqrt() * 3.625609908221908 / 1.225416702465178;
        let r = integrate_real_line(|x| C::new((1.0 + x * x).powf(-0.75), 0.0), 1e-8, RealLineOptions::default()).unwrap();
        assert!((r.value.re - exact).abs() < 1e-8, "{} vs {exact}", r.value.re);
    }

    #[test]
    fn oscillatory_tail() {
        // ∫ cos²x/(1+x²) dx = (π/2)(1 + e^{-2})
        let exact = PI / 2.0 * (1.0 + (-2.0f64).exp());
        let r = integrate_real_line(
            |x| C::new(x.cos().powi(2) / (1.0 + x * x), 0.0),
            1e-9,
            RealLineOptions::oscillatory(),
        )
        .unwrap();
        assert!((r.value.re - exact).abs() < 1e-9, "{}", r.value.re - exact);
    }

    #[test]
    fn slow_decay_is_rejected() {
        let r = integrate_real_line(|x| C::new(1.0 / (1.0 + x.abs()), 0.0), 1e-8, RealLineOptions::default());
        assert!(matches!(r, Err(Error::SlowDecay(_))));
        let r = integrate_real_line(|x| C::new(0.0, x).exp(), 1e-8, RealLineOptions::oscillatory());
        assert!(matches!(r, Err(Error::SlowDecay(_))));
    }

    #[test]
    fn decay_exponent_estimates() {
        let p = decay_exponent(&|x: f64| C::new(1.0 / (1.0 + x * x), 0.0), 32.0);
        assert!((p - 2.0).abs() < 0.01);
        assert!(decay_exponent(&|x: f64| C::new((-x * x).exp(), 0.0), 32.0).is_infinite());
    }

    #[test]
    fn sinh_sinh_oracle() {
        let v = sinh_sinh(|x| C::new(1.0 / (1.0 + x * x), 0.0), 1.0, 0.02, 4.5);
        assert!((v.re - PI).abs() < 1e-12);
    }

    #[test]
    fn window_shape() {
        assert_eq!(smooth_window(0.3), 1.0);
        assert_eq!(smooth_window(1.2), 0.0);
        assert!((smooth_window(0.75) - 0.5).abs() < 1e-15);
    }
}
