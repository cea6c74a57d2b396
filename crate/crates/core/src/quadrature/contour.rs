use super::adaptive::{WGK, XGK};
use super::{Adaptive, QuadResult};
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

type C = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Up,
    Down,
}

/// `k = a + (b − a)t` or `k = center + radius·e^{iθ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Segment {
    Straight { from: C, to: C },
    Arc { center: C, radius: f64, theta0: f64, theta1: f64 },
}

impl Segment {
    /// Semicircle over `[c − r, c + r]` passing below or above `c`.
    pub fn semicircle(center: f64, radius: f64, o: Orientation) -> Segment {
        let theta1 = match o {
            Orientation::Down => 2.0 * PI,
            Orientation::Up => 0.0,
        };
        Segment::Arc { center: C::new(center, 0.0), radius, theta0: PI, theta1 }
    }

    pub fn start(&self) -> C {
        self.at(0.0)
    }

    pub fn end(&self) -> C {
        self.at(1.0)
    }

    /// Point and `dk/dt` at the normalized parameter `t ∈ [0, 1]`.
    pub fn point(&self, t: f64) -> (C, C) {
        match *self {
            Segment::Straight { from, to } => (from + (to - from) * t, to - from),
            Segment::Arc { center, radius, theta0, theta1 } => {
                let th = theta0 + (theta1 - theta0) * t;
                let e = C::from_polar(radius, th);
                (center + e, C::new(0.0, theta1 - theta0) * e)
            }
        }
    }

    fn at(&self, t: f64) -> C {
        self.point(t).0
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Straight { from, to } => (to - from).norm(),
            Segment::Arc { radius, theta0, theta1, .. } => radius * (theta1 - theta0).abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Indent {
    pub center: f64,
    pub radius: f64,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourPath {
    segments: Vec<Segment>,
}

impl ContourPath {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Parameter("empty contour".into()));
        }
        for s in &segments {
            if let Segment::Arc { radius, .. } = s {
                if !(*radius > 0.0) {
                    return Err(Error::Parameter("arc radius must be positive".into()));
                }
            }
        }
        for w in segments.windows(2) {
            let gap = (w[0].end() - w[1].start()).norm();
            if gap > 1e-12 * (1.0 + w[0].end().norm()) {
                return Err(Error::Parameter(format!("contour is disconnected (gap {gap:e})")));
            }
        }
        let a = segments[0].start();
        let b = segments[segments.len() - 1].end();
        if a.im.abs() > 1e-12 || b.im.abs() > 1e-12 {
            return Err(Error::Parameter("contour endpoints must be real".into()));
        }
        Ok(ContourPath { segments })
    }

    /// `[a, b]` with semicircular detours around each indent.
    pub fn real_axis(a: f64, b: f64, indents: &[Indent]) -> Result<Self> {
        let mut ind = indents.to_vec();
        ind.sort_by(|p, q| p.center.total_cmp(&q.center));
        let mut segs = Vec::new();
        let mut pos = a;
        for i in &ind {
            let lo = i.center - i.radius;
            let hi = i.center + i.radius;
            if !(i.radius > 0.0) || lo < pos - 1e-15 || hi > b + 1e-15 {
                return Err(Error::Parameter("indents overlap or leave the interval".into()));
            }
            if lo > pos {
                segs.push(Segment::Straight { from: C::new(pos, 0.0), to: C::new(lo, 0.0) });
            }
            segs.push(Segment::semicircle(i.center, i.radius, i.orientation));
            pos = hi;
        }
        if b > pos {
            segs.push(Segment::Straight { from: C::new(pos, 0.0), to: C::new(b, 0.0) });
        }
        ContourPath::new(segs)
    }

    /// The small deformed piece alone: a semicircle of radius `r` about `c`.
    pub fn semicircle(center: f64, radius: f64, o: Orientation) -> Result<Self> {
        ContourPath::new(vec![Segment::semicircle(center, radius, o)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> C {
        self.segments[0].start()
    }

    pub fn end(&self) -> C {
        self.segments[self.segments.len() - 1].end()
    }
}

/// Sum of adaptive segment integrals of `f(k) dk`.
pub fn integrate_contour<F: Fn(C) -> C>(f: F, path: &ContourPath, tol: f64) -> Result<QuadResult> {
    let n = path.segments.len() as f64;
    let mut total = QuadResult::zero();
    for s in &path.segments {
        let panels = (s.length() / 0.5).ceil().max(1.0);
        let rule = Adaptive::new(tol / n).with_initial_width(1.0 / panels);
        let r = rule.integrate(
            |t| {
                let (k, dk) = s.point(t);
                f(k) * dk
            },
            0.0,
            1.0,
        )?;
        total = total + r;
    }
    Ok(total)
}

/// Fixed composite Kronrod rule on a contour, reusable across many integrands
/// that share the path.
#[derive(Clone, Debug)]
pub struct PathRule {
    pub nodes: Vec<C>,
    pub weights: Vec<C>,
    panels: Vec<(usize, f64, f64)>,
    path: ContourPath,
}

impl PathRule {
    /// Panels of length at most `width` on straight pieces, graded
    /// geometrically toward endpoints that touch an arc; arcs split into
    /// angular panels of at most `π/8`.
    pub fn new(path: &ContourPath, width: f64) -> PathRule {
        let segs = &path.segments;
        let mut panels = Vec::new();
        for (i, s) in segs.iter().enumerate() {
            match s {
                Segment::Arc { theta0, theta1, .. } => {
                    let n = ((theta1 - theta0).abs() / (PI / 8.0)).ceil().max(1.0) as usize;
                    for j in 0..n {
                        panels.push((i, j as f64 / n as f64, (j + 1) as f64 / n as f64));
                    }
                }
                Segment::Straight { .. } => {
                    let len = s.length();
                    let grade_start = i > 0 && matches!(segs[i - 1], Segment::Arc { .. });
                    let grade_end = i + 1 < segs.len() && matches!(segs[i + 1], Segment::Arc { .. });
                    let scale_start = if grade_start { arc_radius(&segs[i - 1]) } else { 0.0 };
                    let scale_end = if grade_end { arc_radius(&segs[i + 1]) } else { 0.0 };
                    for (a, b) in graded_cuts(len, width, scale_start, scale_end) {
                        panels.push((i, a / len, b / len));
                    }
                }
            }
        }
        Self::from_panels(path, panels)
    }

    fn from_panels(path: &ContourPath, panels: Vec<(usize, f64, f64)>) -> PathRule {
        let mut nodes = Vec::with_capacity(panels.len() * 15);
        let mut weights = Vec::with_capacity(panels.len() * 15);
        for &(i, a, b) in &panels {
            let s = &path.segments[i];
            let c = 0.5 * (a + b);
            let h = 0.5 * (b - a);
            for j in 0..15 {
                let (x, w) = if j < 7 {
                    (-XGK[j], WGK[j])
                } else if j == 7 {
                    (0.0, WGK[7])
                } else {
                    (XGK[14 - j], WGK[14 - j])
                };
                let (k, dk) = s.point(c + h * x);
                nodes.push(k);
                weights.push(dk * (w * h));
            }
        }
        PathRule { nodes, weights, panels, path: path.clone() }
    }

    /// Every panel bisected.
    pub fn refined(&self) -> PathRule {
        let panels = self
            .panels
            .iter()
            .flat_map(|&(i, a, b)| {
                let m = 0.5 * (a + b);
                [(i, a, m), (i, m, b)]
            })
            .collect();
        Self::from_panels(&self.path, panels)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply<F: Fn(C) -> C>(&self, f: F) -> C {
        self.nodes.iter().zip(&self.weights).map(|(k, w)| f(*k) * w).sum()
    }

    /// Weighted sum of precomputed integrand samples at `nodes`.
    pub fn apply_values(&self, values: &[C]) -> C {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

fn arc_radius(s: &Segment) -> f64 {
    match s {
        Segment::Arc { radius, .. } => *radius,
        _ => 0.0,
    }
}

/// Cuts of `[0, len]`: geometric growth `r, 2r, 4r, …` away from graded ends
/// until the step reaches `width`, uniform in between.
pub(crate) fn graded_cuts(len: f64, width: f64, r0: f64, r1: f64) -> Vec<(f64, f64)> {
    let grow = |r: f64| -> Vec<f64> {
        let mut v = vec![0.0];
        if r > 0.0 {
            let mut step = r.min(width);
            let mut pos = 0.0;
            while step < width && pos + step < len / 2.0 {
                pos += step;
                v.push(pos);
                step *= 2.0;
            }
        }
        v
    };
    let left = grow(r0);
    let right: Vec<f64> = grow(r1).into_iter().map(|d| len - d).collect();
    let a = *left.last().expect("non-empty");
    let b = *right.last().expect("non-empty");
    let mut cuts = left.clone();
    let n = (((b - a) / width).ceil().max(1.0)) as usize;
    for j in 1..n {
        cuts.push(a + (b - a) * j as f64 / n as f64);
    }
    cuts.extend(right.iter().rev());
    cuts.windows(2).filter(|w| w[1] > w[0]).map(|w| (w[0], w[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_residue_below() {
        let p = ContourPath::real_axis(-1.0, 1.0, &[Indent { center: 0.0, radius: 0.1, orientation: Orientation::Down }])
            .unwrap();
        let r = integrate_contour(|k| 1.0 / k, &p, 1e-12).unwrap();
        assert!((r.value - C::new(0.0, PI)).norm() < 1e-10);
        let up = ContourPath::real_axis(-1.0, 1.0, &[Indent { center: 0.0, radius: 0.1, orientation: Orientation::Up }])
            .unwrap();
        let r = integrate_contour(|k| 1.0 / k, &up, 1e-12).unwrap();
        assert!((r.value + C::new(0.0, PI)).norm() < 1e-10);
    }

    #[test]
    fn validation() {
        let bad = ContourPath::new(vec![
            Segment::Straight { from: C::new(-1.0, 0.0), to: C::new(0.0, 0.0) },
            Segment::Straight { from: C::new(0.5, 0.0), to: C::new(1.0, 0.0) },
        ]);
        assert!(bad.is_err());
        let off_axis = ContourPath::new(vec![Segment::Straight { from: C::new(-1.0, 1.0), to: C::new(1.0, 0.0) }]);
        assert!(off_axis.is_err());
        assert!(ContourPath::semicircle(0.0, 0.0, Orientation::Down).is_err());
        let overlap = [
            Indent { center: -0.1, radius: 0.2, orientation: Orientation::Down },
            Indent { center: 0.1, radius: 0.2, orientation: Orientation::Down },
        ];
        assert!(ContourPath::real_axis(-1.0, 1.0, &overlap).is_err());
    }

    #[test]
    fn path_rule_matches_adaptive() {
        let p = ContourPath::real_axis(
            -5.0,
            5.0,
            &[
                Indent { center: -1.0, radius: 0.05, orientation: Orientation::Down },
                Indent { center: 1.0, radius: 0.05, orientation: Orientation::Up },
            ],
        )
        .unwrap();
        let f = |k: C| (C::new(0.0, 3.0) * k).exp() / ((k - 1.0) * (k + 1.0));
        let a = integrate_contour(f, &p, 1e-12).unwrap().value;
        let rule = PathRule::new(&p, 0.25);
        let b = rule.apply(f);
        let c = rule.refined().apply(f);
        assert!((a - b).norm() < 1e-10, "{}", (a - b).norm());
        assert!((a - c).norm() < 1e-11);
    }

    #[test]
    fn graded_cuts_cover_interval() {
        let cuts = graded_cuts(4.9, 0.25, 0.1, 0.0);
        assert_eq!(cuts[0].0, 0.0);
        assert!((cuts.last().unwrap().1 - 4.9).abs() < 1e-15);
        assert!((cuts[0].1 - 0.1).abs() < 1e-15);
        for w in cuts.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
    }
}
