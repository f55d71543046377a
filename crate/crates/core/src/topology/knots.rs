//! Off-axis self-intersections of the trajectory.

use serde::{Deserialize, Serialize};

use super::winding::{Trajectory, TrajectoryPoint};
use super::TopoConfig;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalKnot<T> {
    /// Smaller position at which the trajectory passes the crossing point.
    pub x1: T,
    pub x2: T,
    pub s_z: T,
    pub s_x: T,
    /// Angle between the two crossing segments, in degrees (0..=90).
    pub angle_deg: T,
    pub uncertain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotReport<T> {
    pub knots: Vec<DiagonalKnot<T>>,
    /// Set if any crossing is closer to tangential than the angle tolerance.
    pub uncertain: bool,
}

impl<T> KnotReport<T> {
    pub fn count(&self) -> usize {
        self.knots.len()
    }
}

struct Seg<T> {
    k: usize,
    a: TrajectoryPoint<T>,
    b: TrajectoryPoint<T>,
    z_lo: T,
    z_hi: T,
    x_lo: T,
    x_hi: T,
}

/// Crossing of segments p and q with half-open parameters in [0, 1).
fn intersect<T: Real>(p: &Seg<T>, q: &Seg<T>) -> Option<(T, T)> {
    let (d1z, d1x) = (p.b.s_z - p.a.s_z, p.b.s_x - p.a.s_x);
    let (d2z, d2x) = (q.b.s_z - q.a.s_z, q.b.s_x - q.a.s_x);
    let den = d1z * d2x - d1x * d2z;
    if den == T::zero() {
        return None;
    }
    let (rz, rx) = (q.a.s_z - p.a.s_z, q.a.s_x - p.a.s_x);
    let t = (rz * d2x - rx * d2z) / den;
    let u = (rz * d1x - rx * d1z) / den;
    let unit = |v: T| v >= T::zero() && v < T::one();
    (unit(t) && unit(u)).then_some((t, u))
}

fn crossing_angle<T: Real>(p: &Seg<T>, q: &Seg<T>) -> T {
    let (d1z, d1x) = (p.b.s_z - p.a.s_z, p.b.s_x - p.a.s_x);
    let (d2z, d2x) = (q.b.s_z - q.a.s_z, q.b.s_x - q.a.s_x);
    let cross = (d1z * d2x - d1x * d2z).abs();
    let dot = (d1z * d2z + d1x * d2x).abs();
    cross.atan2(dot).to_degrees()
}

/// Self-intersections inside each arc between consecutive zeros (and the
/// two tail arcs), away from both axes.
pub fn diagonal_knots<T: Real>(traj: &Trajectory<T>, cfg: &TopoConfig<T>) -> KnotReport<T> {
    let pts = &traj.points;
    let tol = cfg.tol_axis * traj.max_radius();
    let mut cuts: Vec<usize> = vec![0];
    cuts.extend(
        pts.iter()
            .enumerate()
            .skip(1)
            .filter(|(i, p)| p.zero && *i + 1 < pts.len())
            .map(|(i, _)| i),
    );
    cuts.push(pts.len().saturating_sub(1));

    let mut knots = Vec::new();
    for w in cuts.windows(2) {
        arc_crossings(&pts[w[0]..=w[1]], tol, cfg, &mut knots);
    }
    knots.sort_by(|a, b| a.x1.partial_cmp(&b.x1).unwrap_or(std::cmp::Ordering::Equal));
    let uncertain = knots.iter().any(|k| k.uncertain);
    KnotReport { knots, uncertain }
}

fn arc_crossings<T: Real>(arc: &[TrajectoryPoint<T>], tol: T, cfg: &TopoConfig<T>, out: &mut Vec<DiagonalKnot<T>>) {
    if arc.len() < 4 {
        return;
    }
    // Chords are not part of the texture, and segments lying wholly inside
    // one of the axis strips cannot host a counted crossing.
    let mut segs: Vec<Seg<T>> = arc
        .windows(2)
        .enumerate()
        .filter(|(_, w)| !w[1].chord)
        .filter_map(|(k, w)| {
            let (a, b) = (w[0], w[1]);
            let in_z_strip = a.s_z.abs() < tol && b.s_z.abs() < tol;
            let in_x_strip = a.s_x.abs() < tol && b.s_x.abs() < tol;
            (!in_z_strip && !in_x_strip).then(|| Seg {
                k,
                a,
                b,
                z_lo: a.s_z.min(b.s_z),
                z_hi: a.s_z.max(b.s_z),
                x_lo: a.s_x.min(b.s_x),
                x_hi: a.s_x.max(b.s_x),
            })
        })
        .collect();
    segs.sort_by(|p, q| p.z_lo.partial_cmp(&q.z_lo).unwrap_or(std::cmp::Ordering::Equal));

    for i in 0..segs.len() {
        let p = &segs[i];
        for q in &segs[i + 1..] {
            if q.z_lo > p.z_hi {
                break;
            }
            if q.x_lo > p.x_hi || q.x_hi < p.x_lo || p.k.abs_diff(q.k) < 2 {
                continue;
            }
            let (first, second) = if p.k < q.k { (p, q) } else { (q, p) };
            let Some((t, u)) = intersect(first, second) else {
                continue;
            };
            let s_z = first.a.s_z + t * (first.b.s_z - first.a.s_z);
            let s_x = first.a.s_x + t * (first.b.s_x - first.a.s_x);
            if s_z.abs() < tol || s_x.abs() < tol {
                continue;
            }
            let angle_deg = crossing_angle(first, second);
            out.push(DiagonalKnot {
                x1: first.a.x + t * (first.b.x - first.a.x),
                x2: second.a.x + u * (second.b.x - second.a.x),
                s_z,
                s_x,
                angle_deg,
                uncertain: angle_deg < cfg.angle_tol_deg,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(points: &[(f64, f64)]) -> Trajectory<f64> {
        Trajectory {
            points: points
                .iter()
                .enumerate()
                .map(|(i, &(s_z, s_x))| TrajectoryPoint {
                    x: i as f64,
                    s_z,
                    s_x,
                    zero: false,
                    chord: false,
                })
                .collect(),
            bridge_zeros: vec![],
        }
    }

    #[test]
    fn figure_eight_loop_has_one_crossing() {
        // A small loop in the first quadrant.
        let t = traj(&[(1.0, 1.0), (3.0, 3.0), (3.0, 2.0), (2.0, 3.0), (1.0, 4.0)]);
        let r = diagonal_knots(&t, &TopoConfig::default());
        assert_eq!(r.count(), 1);
        let k = r.knots[0];
        assert!((k.s_z - 2.5).abs() < 1e-12 && (k.s_x - 2.5).abs() < 1e-12);
        assert!(k.x1 < k.x2);
        assert!(!r.uncertain);
    }

    #[test]
    fn crossings_on_axes_are_ignored() {
        let t = traj(&[(-1.0, 1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (-2.0, -3.0)]);
        let r = diagonal_knots(&t, &TopoConfig::default());
        assert_eq!(r.count(), 0);
    }

    #[test]
    fn zeros_split_arcs() {
        let mut t = traj(&[(1.0, 1.0), (3.0, 3.0), (3.0, 2.0), (2.0, 3.0), (1.0, 4.0)]);
        t.points[2].zero = true;
        assert_eq!(diagonal_knots(&t, &TopoConfig::default()).count(), 0);
    }

    #[test]
    fn simple_arc_has_no_crossing() {
        let pts: Vec<(f64, f64)> = (0..100)
            .map(|i| {
                let a = i as f64 * 0.03;
                (a.cos() * (1.0 + a), a.sin() * (1.0 + a))
            })
            .collect();
        assert_eq!(diagonal_knots(&traj(&pts), &TopoConfig::default()).count(), 0);
    }
}
