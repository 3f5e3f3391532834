//! Pinched hysteresis loops of the I–V curve and their form factor
//! F = 4πA/P².
//!
//! Loops are delimited by origin passages of the curve. Geometry of a loop
//! is evaluated after rescaling V and I to unit max-absolute-value so that F
//! is dimensionless and insensitive to the decay of the signal amplitude.
//! Lobes (the halves of a figure-eight) are split at origin passages and
//! their shoelace areas are summed by absolute value.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Point = (f64, f64);

/// How origin passages are grouped into loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopRule {
    /// A loop starts at an origin passage and closes on the second passage
    /// after it: one full figure-eight (two lobes) per drive period.
    FullPeriod,
    /// Every pair of consecutive passages is a loop (one lobe each).
    SingleLobe,
}

impl LoopRule {
    pub fn as_str(self) -> &'static str {
        match self {
            LoopRule::FullPeriod => "full_period",
            LoopRule::SingleLobe => "single_lobe",
        }
    }

    fn passages_per_loop(self) -> usize {
        match self {
            LoopRule::FullPeriod => 2,
            LoopRule::SingleLobe => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HysteresisLoop {
    /// (V, I) polyline in physical units; starts and ends at the origin and
    /// contains an exact origin vertex at every interior passage.
    pub points: Vec<Point>,
    pub t_start: f64,
    pub t_end: f64,
    /// Max |V| and max |I| used to normalize the geometry.
    pub v_scale: f64,
    pub i_scale: f64,
    /// Area and perimeter in normalized axes.
    pub area: f64,
    pub perimeter: f64,
    pub form_factor: f64,
    /// A lobe crosses itself somewhere other than at the origin.
    pub self_intersecting: bool,
}

impl HysteresisLoop {
    /// Builds a loop from a physical-unit polyline. Fails when the
    /// normalized perimeter vanishes.
    pub fn from_points(points: Vec<Point>, t_start: f64, t_end: f64) -> Result<Self> {
        let v_scale = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
        let i_scale = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
        let sv = if v_scale > 0.0 { 1.0 / v_scale } else { 0.0 };
        let si = if i_scale > 0.0 { 1.0 / i_scale } else { 0.0 };
        let normalized: Vec<Point> = points.iter().map(|&(v, i)| (v * sv, i * si)).collect();
        let area = loop_area(&normalized);
        let perimeter = loop_perimeter(&normalized);
        let form_factor = form_factor(area, perimeter)?;
        let self_intersecting = lobes(&normalized).iter().any(|l| has_self_intersection(l));
        Ok(HysteresisLoop { points, t_start, t_end, v_scale, i_scale, area, perimeter, form_factor, self_intersecting })
    }

    pub fn normalized_points(&self) -> Vec<Point> {
        let sv = if self.v_scale > 0.0 { 1.0 / self.v_scale } else { 0.0 };
        let si = if self.i_scale > 0.0 { 1.0 / self.i_scale } else { 0.0 };
        self.points.iter().map(|&(v, i)| (v * sv, i * si)).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoopSeries {
    pub site: usize,
    pub loops: Vec<HysteresisLoop>,
}

impl LoopSeries {
    pub fn for_site(mut self, site: usize) -> Self {
        self.site = site;
        self
    }

    pub fn form_factors(&self) -> Vec<f64> {
        self.loops.iter().map(|l| l.form_factor).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }
}

#[derive(Clone, Copy, Debug)]
struct Passage {
    t: f64,
    /// Last sample strictly before the passage.
    before: Option<usize>,
    /// First sample strictly after the passage.
    after: usize,
}

/// Accept a sign change of V as an origin passage only if I is pinched
/// there too: it changes sign (or vanishes) in the same bracket, or the
/// interpolated current is below this fraction of max |I|.
const PINCH_TOL: f64 = 1e-6;
/// |V| below this fraction of max |V| counts as zero.
const ZERO_TOL: f64 = 1e-12;

fn find_passages(v: &[f64], i: &[f64], t: &[f64]) -> Vec<Passage> {
    let n = v.len();
    let vmax = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let imax = i.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let is_zero = |k: usize| v[k].abs() <= ZERO_TOL * vmax;
    let pinched_at = |current: f64| current.abs() <= PINCH_TOL * imax;

    let mut out = Vec::new();
    let mut k = 0;
    while k < n {
        if is_zero(k) {
            let start = k;
            while k + 1 < n && is_zero(k + 1) {
                k += 1;
            }
            if pinched_at(i[start]) {
                out.push(Passage { t: t[start], before: start.checked_sub(1), after: k + 1 });
            }
            k += 1;
            continue;
        }
        if k + 1 < n && !is_zero(k + 1) && (v[k] > 0.0) != (v[k + 1] > 0.0) {
            let s = v[k] / (v[k] - v[k + 1]);
            let tc = t[k] + s * (t[k + 1] - t[k]);
            let ic = i[k] + s * (i[k + 1] - i[k]);
            if i[k] * i[k + 1] <= 0.0 || pinched_at(ic) {
                out.push(Passage { t: tc, before: Some(k), after: k + 1 });
            }
        }
        k += 1;
    }
    out
}

/// Splits an I–V series into pinched hysteresis loops.
pub fn segment_loops(voltage: &[f64], current: &[f64], times: &[f64], rule: LoopRule) -> Result<LoopSeries> {
    let n = times.len();
    if voltage.len() != n || current.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: voltage.len().min(current.len()) });
    }
    if n < 3 {
        return Err(Error::param("series", "need at least 3 samples"));
    }
    if voltage.iter().all(|&x| x == 0.0) {
        return Ok(LoopSeries::default());
    }
    let passages = find_passages(voltage, current, times);
    let per = rule.passages_per_loop();
    let mut loops = Vec::new();
    let mut start = 0;
    while start + per < passages.len() {
        let group = &passages[start..=start + per];
        let mut points = vec![(0.0, 0.0)];
        for w in group.windows(2) {
            let (a, b) = (w[0], w[1]);
            if let Some(last) = b.before {
                for k in a.after..=last {
                    points.push((voltage[k], current[k]));
                }
            }
            points.push((0.0, 0.0));
        }
        match HysteresisLoop::from_points(points, group[0].t, group[per].t) {
            Ok(l) => loops.push(l),
            Err(Error::ZeroPerimeter) => {
                log::debug!("skipping degenerate loop at t = {:e}", group[0].t);
            }
            Err(e) => return Err(e),
        }
        start += per;
    }
    Ok(LoopSeries { site: 0, loops })
}

fn near_origin(p: Point, scale: f64) -> bool {
    p.0.hypot(p.1) <= 1e-9 * scale
}

/// Splits a closed polyline into lobes at vertices lying on the origin.
pub fn lobes(points: &[Point]) -> Vec<&[Point]> {
    let scale = points.iter().map(|p| p.0.abs().max(p.1.abs())).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let cuts: Vec<usize> = (0..points.len()).filter(|&k| near_origin(points[k], scale)).collect();
    if cuts.len() < 2 {
        return vec![points];
    }
    let mut out: Vec<&[Point]> = cuts.windows(2).filter(|w| w[1] > w[0] + 1).map(|w| &points[w[0]..=w[1]]).collect();
    // curve not anchored at the origin on both ends: wrap the tail into the head
    let (first, last) = (cuts[0], *cuts.last().unwrap());
    if first > 0 || last + 1 < points.len() {
        out.push(&points[last..]);
        if first > 0 {
            out.push(&points[..=first]);
        }
    }
    out
}

fn shoelace(poly: &[Point]) -> f64 {
    let m = poly.len();
    if m < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..m {
        let (x0, y0) = poly[k];
        let (x1, y1) = poly[(k + 1) % m];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s
}

/// Sum of absolute lobe areas (shoelace per lobe).
pub fn loop_area(points: &[Point]) -> f64 {
    lobes(points).iter().map(|l| shoelace(l).abs()).sum()
}

/// Euclidean length of the closed polyline.
pub fn loop_perimeter(points: &[Point]) -> f64 {
    let m = points.len();
    if m < 2 {
        return 0.0;
    }
    (0..m)
        .map(|k| {
            let (a, b) = (points[k], points[(k + 1) % m]);
            (b.0 - a.0).hypot(b.1 - a.1)
        })
        .sum()
}

/// 4πA/P².
pub fn form_factor(area: f64, perimeter: f64) -> Result<f64> {
    if perimeter.is_nan() || perimeter <= 0.0 {
        return Err(Error::ZeroPerimeter);
    }
    Ok(4.0 * PI * area / (perimeter * perimeter))
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let orient = |a: Point, b: Point, c: Point| (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

const MAX_INTERSECTION_SEGMENTS: usize = 4000;

fn has_self_intersection(poly: &[Point]) -> bool {
    let m = poly.len();
    if !(4..=MAX_INTERSECTION_SEGMENTS).contains(&m) {
        return false;
    }
    let seg = |k: usize| (poly[k], poly[(k + 1) % m]);
    for a in 0..m {
        for b in (a + 2)..m {
            if a == 0 && b == m - 1 {
                continue;
            }
            let (p1, p2) = seg(a);
            let (q1, q2) = seg(b);
            if segments_cross(p1, p2, q1, q2) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(cx: f64, cy: f64, r: f64, n: usize, start: f64, dir: f64) -> Vec<Point> {
        (0..n)
            .map(|k| {
                let a = start + dir * 2.0 * PI * k as f64 / n as f64;
                (cx + r * a.cos(), cy + r * a.sin())
            })
            .collect()
    }

    fn figure_eight(n: usize) -> Vec<Point> {
        // left circle centred at (−1, 0) from the origin counter-clockwise,
        // then the right circle clockwise, both anchored at the origin
        let mut pts = circle(-1.0, 0.0, 1.0, n, 0.0, 1.0);
        pts.push((0.0, 0.0));
        pts.extend(circle(1.0, 0.0, 1.0, n, PI, -1.0).into_iter().skip(1));
        pts.push((0.0, 0.0));
        pts
    }

    #[test]
    fn unit_circle_geometry() {
        let pts = circle(0.0, 0.0, 1.0, 1000, 0.0, 1.0);
        assert!((loop_area(&pts) - PI).abs() < 1e-4 * PI);
        assert!((loop_perimeter(&pts) - 2.0 * PI).abs() < 1e-4 * 2.0 * PI);
        let f = form_factor(loop_area(&pts), loop_perimeter(&pts)).unwrap();
        assert!((f - 1.0).abs() < 1e-4);
    }

    #[test]
    fn figure_eight_is_absolute() {
        let pts = figure_eight(1000);
        assert_eq!(lobes(&pts).len(), 2);
        assert!((loop_area(&pts) - 2.0 * PI).abs() < 1e-4 * 2.0 * PI);
        assert!((loop_perimeter(&pts) - 4.0 * PI).abs() < 1e-4 * 4.0 * PI);
        let f = form_factor(loop_area(&pts), loop_perimeter(&pts)).unwrap();
        assert!((f - 0.5).abs() < 1e-4);
    }

    #[test]
    fn out_and_back_segment() {
        let pts = vec![(0.0, 0.0), (0.75, 0.0), (1.5, 0.0), (0.75, 0.0), (0.0, 0.0)];
        assert_eq!(loop_area(&pts), 0.0);
        assert!((loop_perimeter(&pts) - 3.0).abs() < 1e-15);
        assert_eq!(form_factor(0.0, 3.0).unwrap(), 0.0);
        assert!(matches!(form_factor(0.0, 0.0), Err(Error::ZeroPerimeter)));
    }

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn circle_through_origin_is_one_lobe() {
        // V = sin t, I = 1 − cos t: passes the origin only at t = 0, 2π
        let t = grid(2000, 2.0 * PI);
        let v: Vec<f64> = t.iter().map(|t| t.sin()).collect();
        let i: Vec<f64> = t.iter().map(|t| 1.0 - t.cos()).collect();
        let single = segment_loops(&v, &i, &t, LoopRule::SingleLobe).unwrap();
        assert_eq!(single.loops.len(), 1);
        let l = &single.loops[0];
        assert!((l.t_start).abs() < 1e-12 && (l.t_end - 2.0 * PI).abs() < 1e-9);
        // normalized axes squash the circle into an ellipse of axes 1 and 1/2
        assert!((l.area - PI * 0.5).abs() < 1e-4);
        let full = segment_loops(&v, &i, &t, LoopRule::FullPeriod).unwrap();
        assert!(full.is_empty());
    }

    #[test]
    fn pinched_sine_crossings() {
        let t = grid(4000, 2.0 * PI);
        let v: Vec<f64> = t.iter().map(|t| t.sin()).collect();
        let i: Vec<f64> = t.iter().map(|t| t.sin() * (1.0 + t.cos()) / 2.0).collect();
        let lobes = segment_loops(&v, &i, &t, LoopRule::SingleLobe).unwrap();
        assert_eq!(lobes.loops.len(), 2);
        assert!((lobes.loops[0].t_end - PI).abs() < 1e-9);
        let full = segment_loops(&v, &i, &t, LoopRule::FullPeriod).unwrap();
        assert_eq!(full.loops.len(), 1);
        let l = &full.loops[0];
        assert!(l.t_start.abs() < 1e-12 && (l.t_end - 2.0 * PI).abs() < 1e-9);
        assert_eq!(l.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(l.points.last(), Some(&(0.0, 0.0)));
        assert!(l.form_factor > 0.0 && l.form_factor <= 1.0 + 1e-9);
    }

    #[test]
    fn zero_series_is_empty() {
        let t = grid(10, 1.0);
        let z = vec![0.0; 11];
        assert!(segment_loops(&z, &z, &t, LoopRule::FullPeriod).unwrap().is_empty());
        assert!(segment_loops(&z[..2], &z[..2], &t[..2], LoopRule::FullPeriod).is_err());
    }

    #[test]
    fn self_intersection_flag() {
        // bow-tie without an origin vertex
        let bow = vec![(1.0, 1.0), (2.0, 2.0), (2.0, 1.0), (1.0, 2.0)];
        assert!(has_self_intersection(&bow));
        assert!(!has_self_intersection(&circle(0.0, 0.0, 1.0, 50, 0.0, 1.0)));
    }
}
