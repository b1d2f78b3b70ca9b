//! Static noise margin extraction from butterfly curves.
//!
//! Two independent routes compute the inscribed-square side per lobe:
//!
//! * the production path rotates both curves by 45 degrees
//!   (`u = (x+y)/sqrt2`, `v = (y-x)/sqrt2`) and takes the largest vertical
//!   separation between the rotated boundaries, divided by sqrt 2;
//! * [`snm_bruteforce_oracle`] exhaustively scans opposite-corner pairs on
//!   the two sampled arcs.
//!
//! For hold and read the SNM is the smaller of the two lobe squares. A
//! successful write leaves a single intersection; the write SNM is then the
//! largest square bridging the remaining gap between the curves, and a
//! persisting bistability is reported as a write failure with zero margin.

use std::f64::consts::SQRT_2;

use crate::circuit::CellMode;
use crate::solver::Curve;

use super::butterfly::ButterflyResult;
use super::AnalysisError;

/// Axis-aligned square, located by its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub x: f64,
    pub y: f64,
    pub side: f64,
}

/// Per-lobe inscribed-square sides and the resulting noise margin.
#[derive(Debug, Clone, PartialEq)]
pub struct SnmResult {
    pub lobe_high: f64,
    pub lobe_low: f64,
    pub snm: f64,
    /// Set when a write-mode butterfly still has three intersections.
    pub write_failure: bool,
    pub square_high: Option<Square>,
    pub square_low: Option<Square>,
}

/// Envelope bin width along the rotated u axis, volts.
const U_BIN: f64 = 2.5e-4;

/// Clip a curve to `[x_lo, x_hi]`, interpolating the endpoints.
fn clip(curve: &Curve, x_lo: f64, x_hi: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if x_hi <= x_lo {
        return out;
    }
    out.push((x_lo, curve.interpolate(x_lo)));
    for &(x, y) in curve.points() {
        if x > x_lo && x < x_hi {
            out.push((x, y));
        }
    }
    out.push((x_hi, curve.interpolate(x_hi)));
    out
}

fn mirror(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().map(|&(x, y)| (y, x)).collect()
}

fn rotate(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points.iter().map(|&(x, y)| ((x + y) / SQRT_2, (y - x) / SQRT_2)).collect()
}

/// Largest square whose south-west corner lies on `left` and north-east
/// corner on `right` (both in the butterfly frame), found via rotated
/// envelopes: both corners share the rotated ordinate `v = (y-x)/sqrt2`, so
/// the side is the largest gap between the curves' rotated abscissae
/// `u = (x+y)/sqrt2` at any v, divided by sqrt 2.
fn rotated_square(left: &[(f64, f64)], right: &[(f64, f64)]) -> Option<Square> {
    if left.len() < 2 || right.len() < 2 {
        return None;
    }
    let l = rotate(left);
    let r = rotate(right);
    let v_range = |pts: &[(f64, f64)]| {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in pts {
            min = min.min(p.1);
            max = max.max(p.1);
        }
        (min, max)
    };
    let (l_min, l_max) = v_range(&l);
    let (r_min, r_max) = v_range(&r);
    let v_lo = l_min.max(r_min);
    let v_hi = l_max.min(r_max);
    if v_hi < v_lo {
        return None;
    }
    let n_bins = (((v_hi - v_lo) / U_BIN).ceil() as usize).clamp(1, 40_000);
    let dv = (v_hi - v_lo) / n_bins as f64;
    // Right boundary: largest u per v bin; left boundary: smallest.
    let mut env_right = vec![f64::NEG_INFINITY; n_bins + 1];
    let mut env_left = vec![f64::INFINITY; n_bins + 1];

    let march = |pts: &[(f64, f64)], env: &mut [f64], take_max: bool| {
        for seg in pts.windows(2) {
            let (ua, va) = seg[0];
            let (ub, vb) = seg[1];
            let (v0, v1) = if va <= vb { (va, vb) } else { (vb, va) };
            if v1 < v_lo || v0 > v_hi {
                continue;
            }
            let k0 = (((v0 - v_lo) / dv).ceil().max(0.0)) as usize;
            let k1 = (((v1 - v_lo) / dv).floor()).min(n_bins as f64) as usize;
            for k in k0..=k1.min(n_bins) {
                let v = v_lo + k as f64 * dv;
                let u = if (vb - va).abs() < 1e-15 {
                    if take_max { ua.max(ub) } else { ua.min(ub) }
                } else {
                    ua + (ub - ua) * (v - va) / (vb - va)
                };
                if take_max {
                    env[k] = env[k].max(u);
                } else {
                    env[k] = env[k].min(u);
                }
            }
        }
    };
    march(&r, &mut env_right, true);
    march(&l, &mut env_left, false);

    let mut best: Option<(usize, f64)> = None;
    for k in 0..=n_bins {
        if env_right[k].is_finite() && env_left[k].is_finite() {
            let sep = env_right[k] - env_left[k];
            if best.map_or(true, |(_, s)| sep > s) {
                best = Some((k, sep));
            }
        }
    }
    let (k, sep) = best?;
    if sep <= 0.0 {
        return None;
    }
    let v = v_lo + k as f64 * dv;
    let u_ne = env_right[k];
    let side = sep / SQRT_2;
    // North-east corner back in the original frame; the square extends one
    // side down and left from it.
    let x_ne = (u_ne - v) / SQRT_2;
    let y_ne = (u_ne + v) / SQRT_2;
    Some(Square { x: x_ne - side, y: y_ne - side, side })
}

/// Densify a polyline so consecutive points differ by at most `grid` in
/// either coordinate. Works for arcs of any orientation.
fn subdivide(points: &[(f64, f64)], grid: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for seg in points.windows(2) {
        let (xa, ya) = seg[0];
        let (xb, yb) = seg[1];
        let n = ((xb - xa).abs().max((yb - ya).abs()) / grid).ceil().max(1.0) as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            out.push((xa + t * (xb - xa), ya + t * (yb - ya)));
        }
    }
    if let Some(&last) = points.last() {
        out.push(last);
    }
    out
}

/// Largest square with its SW corner on `left` and NE corner on `right`,
/// by exhaustive pair scan over the resampled arcs.
fn pairwise_square(left: &[(f64, f64)], right: &[(f64, f64)], grid: f64) -> Option<Square> {
    let sw = subdivide(left, grid);
    let ne = subdivide(right, grid);
    let mut best: Option<Square> = None;
    for &(x1, y1) in &sw {
        for &(x2, y2) in &ne {
            let dx = x2 - x1;
            let dy = y2 - y1;
            if dx <= 0.0 || dy <= 0.0 {
                continue;
            }
            let side = dx.min(dy);
            if best.map_or(true, |b| side > b.side) {
                best = Some(Square { x: x1, y: y1, side });
            }
        }
    }
    best
}

/// The two lobe arc pairs of a bistable butterfly, as `(left, right)`
/// polylines per lobe in the frame of `vtc1`. The high lobe (between the
/// first two intersections) is walled on the left by the mirrored curve 2
/// and on the right by curve 1; the roles swap in the low lobe.
fn lobe_arcs(
    b: &ButterflyResult,
    ints: &[(f64, f64)],
) -> ((Vec<(f64, f64)>, Vec<(f64, f64)>), (Vec<(f64, f64)>, Vec<(f64, f64)>)) {
    let (i0, i1, i2) = (ints[0], ints[1], ints[2]);
    let arc1_high = clip(&b.vtc1, i0.0, i1.0);
    let arc2_high = mirror(&clip(&b.vtc2, i1.1, i0.1));
    let arc1_low = clip(&b.vtc1, i1.0, i2.0);
    let arc2_low = mirror(&clip(&b.vtc2, i2.1, i1.1));
    ((arc2_high, arc1_high), (arc1_low, arc2_low))
}

fn bistable_result(
    b: &ButterflyResult,
    square_of: impl Fn(&[(f64, f64)], &[(f64, f64)]) -> Option<Square>,
) -> Result<SnmResult, AnalysisError> {
    let ints = b.intersections();
    if ints.len() != 3 {
        return Err(AnalysisError::IntersectionCount { expected: 3, found: ints.len() });
    }
    let ((left_h, right_h), (left_l, right_l)) = lobe_arcs(b, &ints);
    let sq_high = square_of(&left_h, &right_h);
    let sq_low = square_of(&left_l, &right_l);
    let lobe_high = sq_high.map_or(0.0, |s| s.side);
    let lobe_low = sq_low.map_or(0.0, |s| s.side);
    Ok(SnmResult {
        lobe_high,
        lobe_low,
        snm: lobe_high.min(lobe_low),
        write_failure: false,
        square_high: sq_high,
        square_low: sq_low,
    })
}

fn write_result(
    b: &ButterflyResult,
    square_of: impl Fn(&[(f64, f64)], &[(f64, f64)]) -> Option<Square>,
) -> Result<SnmResult, AnalysisError> {
    let ints = b.intersections();
    if ints.len() >= 3 {
        // Bistability survived the write bias: the write failed.
        return Ok(SnmResult {
            lobe_high: 0.0,
            lobe_low: 0.0,
            snm: 0.0,
            write_failure: true,
            square_high: None,
            square_low: None,
        });
    }
    let c1: Vec<(f64, f64)> = b.vtc1.points().to_vec();
    let m2 = b.mirrored_vtc2_points();
    // The surviving gap sits on one side of the single crossing; probe both
    // orientations and keep the larger square.
    let a = square_of(&c1, &m2);
    let bsq = square_of(&m2, &c1);
    let sq = match (a, bsq) {
        (Some(p), Some(q)) => Some(if p.side >= q.side { p } else { q }),
        (Some(p), None) => Some(p),
        (None, Some(q)) => Some(q),
        (None, None) => None,
    };
    let side = sq.map_or(0.0, |s| s.side);
    Ok(SnmResult {
        lobe_high: side,
        lobe_low: side,
        snm: side,
        write_failure: false,
        square_high: sq,
        square_low: None,
    })
}

/// Rotation-method SNM.
pub fn snm_from_butterfly(b: &ButterflyResult) -> Result<SnmResult, AnalysisError> {
    match b.mode {
        CellMode::Hold | CellMode::Read => bistable_result(b, rotated_square),
        CellMode::Write0 | CellMode::Write1 => write_result(b, rotated_square),
    }
}

/// Independent brute-force oracle: exhaustive corner-pair search over arcs
/// resampled at `grid` volts (must be at most 2 mV).
pub fn snm_bruteforce_oracle(b: &ButterflyResult, grid: f64) -> Result<SnmResult, AnalysisError> {
    if !(grid > 0.0) || grid > 2e-3 {
        return Err(AnalysisError::InvalidGrid(grid));
    }
    let square_of = |left: &[(f64, f64)], right: &[(f64, f64)]| pairwise_square(left, right, grid);
    match b.mode {
        CellMode::Hold | CellMode::Read => bistable_result(b, square_of),
        CellMode::Write0 | CellMode::Write1 => write_result(b, square_of),
    }
}
