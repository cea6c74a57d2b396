use crate::error::{Error, Result};
use crate::model::{ModelKind, ModelParams};
use num_complex::Complex64;
use std::f64::consts::PI;

type C = Complex64;

/// Which antiderivative-evaluated kernel of the first-order threshold model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelForm {
    /// `∫_{L(A)} ψ(x;k)ψ(x';−k) dk` over the indented segment `[−A, A]`.
    Full(f64),
    /// `∫_{L(ε)} ψ(x;k)ψ(x';−k) dk` over the small detour alone.
    Inner(f64),
}

/// `sin(a d)/d`, continuous through `d = 0`.
fn sinc_scaled(a: f64, d: f64) -> f64 {
    let t = a * d;
    if t.abs() < 1e-4 {
        a * (1.0 - t * t / 6.0)
    } else {
        t.sin() / d
    }
}

pub fn closed_form_kernel(params: &ModelParams, which: KernelForm, x: f64, xp: f64) -> Result<C> {
    if params.kind() != ModelKind::Threshold || params.n() != 1 {
        return Err(Error::Unsupported("closed-form kernels exist for the first-order threshold model".into()));
    }
    let z = params.z();
    let d = x - xp;
    let q = (x - z) * (xp - z);
    Ok(match which {
        KernelForm::Full(a) => (sinc_scaled(a, d) - (a * d).cos() / (a * q)) / PI,
        KernelForm::Inner(e) => {
            let s = (0.5 * e * d).sin();
            -1.0 / (PI * e * q) + sinc_scaled(e, d) / PI + 2.0 * s * s / (PI * e * q)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_contour, ContourPath, Indent, Orientation};

    fn model() -> ModelParams {
        ModelParams::threshold(1, C::new(0.0, 1.0)).unwrap()
    }

    fn integrand(p: &ModelParams, x: f64, xp: f64) -> impl Fn(C) -> C + '_ {
        move |k| p.continuum_value(x, k) * p.continuum_value(xp, -k)
    }

    #[test]
    fn full_kernel_matches_contour() {
        let p = model();
        let (x, xp, a) = (0.3, -0.2, 5.0);
        for o in [Orientation::Down, Orientation::Up] {
            let path = ContourPath::real_axis(-a, a, &[Indent { center: 0.0, radius: 0.1, orientation: o }]).unwrap();
            let num = integrate_contour(integrand(&p, x, xp), &path, 1e-12).unwrap().value;
            let cf = closed_form_kernel(&p, KernelForm::Full(a), x, xp).unwrap();
            assert!((num - cf).norm() < 1e-8, "{o:?}: {}", (num - cf).norm());
        }
    }

    #[test]
    fn inner_kernel_matches_contour() {
        let p = model();
        let (x, xp, e) = (0.5, -0.4, 0.3);
        let path = ContourPath::semicircle(0.0, e, Orientation::Down).unwrap();
        let num = integrate_contour(integrand(&p, x, xp), &path, 1e-12).unwrap().value;
        let cf = closed_form_kernel(&p, KernelForm::Inner(e), x, xp).unwrap();
        assert!((num - cf).norm() < 1e-8);
    }

    #[test]
    fn removable_singularity() {
        let p = model();
        let x = 0.7;
        let at = closed_form_kernel(&p, KernelForm::Full(5.0), x, x).unwrap();
        let near = closed_form_kernel(&p, KernelForm::Full(5.0), x + 1e-7, x).unwrap();
        assert!(at.re.is_finite() && (at - near).norm() < 1e-6);
        let z = C::new(0.0, 1.0);
        let expect = (5.0 - 1.0 / (5.0 * (x - z) * (x - z))) / PI;
        assert!((at - expect).norm() < 1e-14);
    }

    #[test]
    fn rejects_other_models() {
        let p = ModelParams::jordan_bound(1.0, C::new(0.0, 1.0)).unwrap();
        assert!(closed_form_kernel(&p, KernelForm::Full(1.0), 0.0, 0.0).is_err());
    }
}
