//! Adaptive Gauss–Kronrod integration on intervals, on the whole real line and
//! along piecewise contours in the complex momentum plane.

mod adaptive;
mod closed_form;
mod contour;
mod real_line;

pub use adaptive::{gk15_nodes, integrate_interval, Adaptive};
pub use closed_form::{closed_form_kernel, KernelForm};
pub use contour::{integrate_contour, ContourPath, Indent, Orientation, PathRule, Segment};
pub(crate) use contour::graded_cuts;
pub use real_line::{decay_exponent, integrate_real_line, sinh_sinh, smooth_window, RealLineOptions};

use num_complex::Complex64;
use serde::Serialize;
use std::ops::Add;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: Complex64,
    pub abs_error: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult { value: Complex64::new(0.0, 0.0), abs_error: 0.0, evaluations: 0 }
    }
}

impl Add for QuadResult {
    type Output = QuadResult;
    fn add(self, o: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + o.value,
            abs_error: self.abs_error + o.abs_error,
            evaluations: self.evaluations + o.evaluations,
        }
    }
}
