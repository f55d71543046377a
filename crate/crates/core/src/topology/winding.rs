//! Trajectory of (s_z, s_x) over the retained support and its winding.

use serde::{Deserialize, Serialize};

use super::zeros::{is_degenerate, resolved_mask, support, Axis, AxisZero};
use super::TopoConfig;
use crate::realspace::{SpinTexture, SpinorSeries};
use crate::scalar::{lit, sign_of, wrap_angle, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint<T> {
    pub x: T,
    pub s_z: T,
    pub s_x: T,
    /// Set on points that sit exactly at a refined axis zero.
    pub zero: bool,
    /// The segment arriving here is a straight chord across an unresolved
    /// valley rather than a sampled piece of the texture.
    pub chord: bool,
}

impl<T: Real> TrajectoryPoint<T> {
    pub fn angle(&self) -> T {
        self.s_x.atan2(self.s_z)
    }

    pub fn radius(&self) -> T {
        self.s_z.hypot(self.s_x)
    }
}

/// Ordered polyline in the (s_z, s_x) plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub points: Vec<TrajectoryPoint<T>>,
    /// Axis crossings of the chords.
    pub bridge_zeros: Vec<AxisZero<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn max_radius(&self) -> T {
        self.points.iter().fold(T::zero(), |a, p| a.max(p.radius()))
    }
}

/// Resolved grid samples, the refined zeros merged in, and extra series
/// samples wherever consecutive points turn by more than `cfg.max_turn`.
/// Runs of unresolved points inside the support are bridged by chords.
pub fn build_trajectory<T: Real>(
    series: &SpinorSeries<T>,
    texture: &SpinTexture<T>,
    zeros: &[AxisZero<T>],
    cfg: &TopoConfig<T>,
) -> Trajectory<T> {
    let (lo, hi) = support(texture, cfg);
    let resolved = resolved_mask(texture, cfg);
    let mut base: Vec<TrajectoryPoint<T>> = Vec::with_capacity(hi - lo + 1 + zeros.len());
    let mut bridge_zeros = Vec::new();
    let mut zi = zeros.iter().filter(|z| !z.boundary).map(|z| z.x).peekable();
    let (x_lo, x_hi) = (texture.x[lo], texture.x[hi]);
    while zi.peek().is_some_and(|&z| z <= x_lo) {
        zi.next();
    }
    let mut prev: Option<usize> = None;
    for i in lo..=hi {
        if !resolved[i] {
            continue;
        }
        let xi = texture.x[i];
        let mut on_grid = false;
        while let Some(&z) = zi.peek() {
            if z > xi || z >= x_hi {
                break;
            }
            if z == xi {
                on_grid = true;
            } else {
                let (s_z, s_x) = series.texture_at(z);
                base.push(TrajectoryPoint {
                    x: z,
                    s_z,
                    s_x,
                    zero: true,
                    chord: false,
                });
            }
            zi.next();
        }
        let chord = prev.is_some_and(|p| i > p + 1);
        let here = TrajectoryPoint {
            x: xi,
            s_z: texture.s_z[i],
            s_x: texture.s_x[i],
            zero: on_grid,
            chord,
        };
        if let (true, Some(&from)) = (chord, base.last()) {
            for (point, zero) in chord_crossings(from, here) {
                base.push(point);
                bridge_zeros.push(zero);
            }
        }
        base.push(here);
        prev = Some(i);
    }

    let mut points = Vec::with_capacity(base.len() * 11 / 10);
    if let Some(&first) = base.first() {
        points.push(first);
    }
    for w in base.windows(2) {
        if !w[1].chord {
            subdivide(series, w[0], w[1], cfg.max_depth, cfg.max_turn, &mut points);
        }
        points.push(w[1]);
    }
    Trajectory { points, bridge_zeros }
}

/// Points where the straight chord from `a` to `b` crosses either axis.
fn chord_crossings<T: Real>(a: TrajectoryPoint<T>, b: TrajectoryPoint<T>) -> Vec<(TrajectoryPoint<T>, AxisZero<T>)> {
    let mut hits: Vec<(T, Axis)> = Vec::with_capacity(2);
    if sign_of(a.s_z) * sign_of(b.s_z) < 0 {
        hits.push((a.s_z / (a.s_z - b.s_z), Axis::SigmaZ));
    }
    if sign_of(a.s_x) * sign_of(b.s_x) < 0 {
        hits.push((a.s_x / (a.s_x - b.s_x), Axis::SigmaX));
    }
    hits.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap_or(std::cmp::Ordering::Equal));
    hits.into_iter()
        .map(|(t, axis)| {
            let x = a.x + t * (b.x - a.x);
            let (s_z, s_x, companion) = match axis {
                Axis::SigmaZ => {
                    let s_x = a.s_x + t * (b.s_x - a.s_x);
                    (T::zero(), s_x, sign_of(s_x))
                }
                Axis::SigmaX => {
                    let s_z = a.s_z + t * (b.s_z - a.s_z);
                    (s_z, T::zero(), sign_of(s_z))
                }
            };
            let point = TrajectoryPoint {
                x,
                s_z,
                s_x,
                zero: true,
                chord: true,
            };
            (point, AxisZero::bridge(x, axis, companion))
        })
        .collect()
}

fn subdivide<T: Real>(
    series: &SpinorSeries<T>,
    a: TrajectoryPoint<T>,
    b: TrajectoryPoint<T>,
    depth: usize,
    max_turn: T,
    out: &mut Vec<TrajectoryPoint<T>>,
) {
    if depth == 0 || a.radius() == T::zero() || b.radius() == T::zero() {
        return;
    }
    if wrap_angle(b.angle() - a.angle()).abs() <= max_turn {
        return;
    }
    let x = a.x + (b.x - a.x) / lit(2.0);
    if x <= a.x || x >= b.x {
        return;
    }
    let (s_z, s_x) = series.texture_at(x);
    let m = TrajectoryPoint {
        x,
        s_z,
        s_x,
        zero: false,
        chord: false,
    };
    subdivide(series, a, m, depth - 1, max_turn, out);
    out.push(m);
    subdivide(series, m, b, depth - 1, max_turn, out);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Winding<T> {
    /// Open-curve angle sum over 2π.
    pub n_zx: T,
    /// Nearest integer to the angle sum with the ends joined.
    pub n_w: i64,
    /// Distance of the closed sum from `n_w`, in turns.
    pub closure_residual: T,
    pub degenerate: bool,
}

/// Counterclockwise-positive winding of the trajectory around the origin.
pub fn winding_integral<T: Real>(traj: &Trajectory<T>) -> Winding<T> {
    let two_pi = T::TAU();
    let mut open = T::zero();
    let mut first: Option<T> = None;
    let mut prev: Option<T> = None;
    for p in &traj.points {
        if p.radius() == T::zero() {
            continue;
        }
        let a = p.angle();
        if let Some(q) = prev {
            open = open + wrap_angle(a - q);
        } else {
            first = Some(a);
        }
        prev = Some(a);
    }
    let (Some(start), Some(end)) = (first, prev) else {
        return Winding {
            n_zx: T::zero(),
            n_w: 0,
            closure_residual: T::zero(),
            degenerate: true,
        };
    };
    let closed = (open + wrap_angle(start - end)) / two_pi;
    let n_w = closed.round();
    Winding {
        n_zx: open / two_pi,
        n_w: n_w.to_i64().unwrap_or(0),
        closure_residual: (closed - n_w).abs(),
        degenerate: false,
    }
}

/// Winding of a texture, with s_z ≡ 0 reported as degenerate.
pub fn texture_winding<T: Real>(
    series: &SpinorSeries<T>,
    texture: &SpinTexture<T>,
    zeros: &[AxisZero<T>],
    cfg: &TopoConfig<T>,
) -> (Winding<T>, Trajectory<T>) {
    let traj = build_trajectory(series, texture, zeros, cfg);
    if is_degenerate(texture) {
        let w = Winding {
            n_zx: T::zero(),
            n_w: 0,
            closure_residual: T::zero(),
            degenerate: true,
        };
        return (w, traj);
    }
    (winding_integral(&traj), traj)
}
