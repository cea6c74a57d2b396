use super::QuadResult;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

type C = Complex64;

pub(crate) const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

pub(crate) const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: C,
    error: f64,
    floor: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error).then(o.a.total_cmp(&self.a))
    }
}

/// The 15 Kronrod abscissae on `[-1, 1]` with their weights.
pub fn gk15_nodes() -> [(f64, f64); 15] {
    let mut out = [(0.0, 0.0); 15];
    for j in 0..7 {
        out[j] = (-XGK[j], WGK[j]);
        out[14 - j] = (XGK[j], WGK[j]);
    }
    out[7] = (0.0, WGK[7]);
    out
}

/// One 15-point Kronrod panel with the 7-point Gauss estimate embedded.
fn gk15<F: Fn(f64) -> C>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut vals = [C::new(0.0, 0.0); 15];
    vals[7] = fc;
    for j in 0..7 {
        let d = h * XGK[j];
        let f1 = f(c - d);
        let f2 = f(c + d);
        vals[j] = f1;
        vals[14 - j] = f2;
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = resk * 0.5;
    let mut resabs = WGK[7] * fc.norm();
    let mut resasc = WGK[7] * (fc - reskh).norm();
    for j in 0..7 {
        resabs += WGK[j] * (vals[j].norm() + vals[14 - j].norm());
        resasc += WGK[j] * ((vals[j] - reskh).norm() + (vals[14 - j] - reskh).norm());
    }
    let h = h.abs();
    resabs *= h;
    resasc *= h;
    let mut err = ((resk - resg) * h).norm();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    if !(resk.re.is_finite() && resk.im.is_finite()) {
        err = f64::INFINITY;
    }
    Panel { a, b, value: resk * (0.5 * (b - a)), error: err, floor }
}

/// Global adaptive bisection driven by the panel with the largest error.
#[derive(Clone, Copy, Debug)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Width of the initial uniform partition (the whole interval if `None`).
    pub initial_width: Option<f64>,
}

impl Adaptive {
    pub fn new(abs_tol: f64) -> Self {
        Adaptive { abs_tol, rel_tol: 0.0, max_panels: 50_000, initial_width: None }
    }

    pub fn with_initial_width(mut self, w: f64) -> Self {
        self.initial_width = Some(w);
        self
    }

    pub fn with_rel_tol(mut self, r: f64) -> Self {
        self.rel_tol = r;
        self
    }

    pub fn integrate<F: Fn(f64) -> C>(&self, f: F, a: f64, b: f64) -> Result<QuadResult> {
        let n0 = match self.initial_width {
            Some(w) if w > 0.0 => ((b - a).abs() / w).ceil().max(1.0) as usize,
            _ => 1,
        };
        let cuts: Vec<f64> = (0..=n0).map(|i| a + (b - a) * i as f64 / n0 as f64).collect();
        self.integrate_breakpoints(f, &cuts)
    }

    /// Integrate over consecutive panels `[cuts[i], cuts[i+1]]`.
    pub fn integrate_breakpoints<F: Fn(f64) -> C>(&self, f: F, cuts: &[f64]) -> Result<QuadResult> {
        if !(self.abs_tol > 0.0 || self.rel_tol > 0.0) {
            return Err(Error::Parameter("tolerance must be positive".into()));
        }
        if cuts.len() < 2 {
            return Ok(QuadResult::zero());
        }
        let mut heap = BinaryHeap::with_capacity(cuts.len() * 2);
        let mut evals = 0usize;
        let mut total = C::new(0.0, 0.0);
        let mut err = 0.0;
        for w in cuts.windows(2) {
            let p = gk15(&f, w[0], w[1]);
            evals += 15;
            total += p.value;
            err += p.error;
            heap.push(p);
        }
        loop {
            let target = self.abs_tol.max(self.rel_tol * total.norm());
            if err <= target {
                break;
            }
            if heap.len() >= self.max_panels {
                return Err(Error::ToleranceNotMet { requested: target, estimate: err });
            }
            let worst = heap.pop().expect("non-empty");
            let m = 0.5 * (worst.a + worst.b);
            if m == worst.a || m == worst.b || !worst.error.is_finite() || worst.error <= 2.0 * worst.floor {
                return Err(Error::ToleranceNotMet { requested: target, estimate: err });
            }
            let l = gk15(&f, worst.a, m);
            let r = gk15(&f, m, worst.b);
            evals += 30;
            total += l.value + r.value - worst.value;
            err += l.error + r.error - worst.error;
            heap.push(l);
            heap.push(r);
            if heap.len() % 64 == 0 {
                // resum to shed accumulated cancellation in the running totals
                let mut panels: Vec<Panel> = heap.iter().copied().collect();
                panels.sort_by(|p, q| p.a.total_cmp(&q.a));
                total = panels.iter().map(|p| p.value).sum();
                err = panels.iter().map(|p| p.error).sum();
            }
        }
        let mut panels: Vec<Panel> = heap.into_vec();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        Ok(QuadResult {
            value: panels.iter().map(|p| p.value).sum(),
            abs_error: panels.iter().map(|p| p.error).sum(),
            evaluations: evals,
        })
    }
}

pub fn integrate_interval<F: Fn(f64) -> C>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    Adaptive::new(tol).integrate(f, a, b)
}
