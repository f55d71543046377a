//! Axis zeros of the spin texture.
//!
//! A zero of s_x is a node of one σz component, a zero of s_z is a node of
//! one σx component, so every zero is a root of a single Hermite series and
//! its companion sign follows from which series vanishes.

use serde::{Deserialize, Serialize};

use super::{TopoConfig, TopoError};
use crate::realspace::{Component, HermiteSeries, RealSpaceState, SpinTexture};
use crate::scalar::{lit, sign_of, Real};

/// Which spin expectation vanishes at a zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    SigmaX,
    SigmaZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisZero<T> {
    pub x: T,
    pub axis: Axis,
    /// Sign of the other in-plane component at `x`.
    pub companion_sign: i8,
    /// Vanishing spinor component; `None` for virtual zeros (the joined
    /// ends, or a chord across an unresolved valley).
    pub source: Option<Component>,
    /// Virtual zero standing for the joined ends at ±∞.
    pub boundary: bool,
}

impl<T: Real> AxisZero<T> {
    fn root(x: T, source: Component) -> Self {
        // s_x = 2ψ↑ψ↓ and s_z = ψ⇑² - ψ⇓² at each kind of node.
        let (axis, companion_sign) = match source {
            Component::ZUp => (Axis::SigmaX, -1),
            Component::ZDown => (Axis::SigmaX, 1),
            Component::XUp => (Axis::SigmaZ, -1),
            Component::XDown => (Axis::SigmaZ, 1),
        };
        Self {
            x,
            axis,
            companion_sign,
            source: Some(source),
            boundary: false,
        }
    }

    /// Axis crossing of a chord bridging an unresolved valley.
    pub fn bridge(x: T, axis: Axis, companion_sign: i8) -> Self {
        Self {
            x,
            axis,
            companion_sign,
            source: None,
            boundary: false,
        }
    }

    pub fn boundary(sign: i8) -> Self {
        Self {
            x: T::infinity(),
            axis: Axis::SigmaZ,
            companion_sign: sign,
            source: None,
            boundary: true,
        }
    }

    /// Code digit: 1/3 for s_x zeros with s_z above/below 0, 2/4 for s_z
    /// zeros with s_x above/below 0.
    pub fn digit(&self) -> u8 {
        match (self.axis, self.companion_sign > 0) {
            (Axis::SigmaX, true) => 1,
            (Axis::SigmaX, false) => 3,
            (Axis::SigmaZ, true) => 2,
            (Axis::SigmaZ, false) => 4,
        }
    }
}

/// Bisection on a series between points of opposite sign.
pub(crate) fn bisect<T: Real>(f: &HermiteSeries<T>, mut a: T, mut b: T, tol: T) -> Option<T> {
    let mut fa = f.eval(a);
    let fb = f.eval(b);
    if fa == T::zero() {
        return Some(a);
    }
    if fb == T::zero() {
        return Some(b);
    }
    if sign_of(fa) == sign_of(fb) {
        return None;
    }
    let tol = tol.max(lit::<T>(4.0) * T::epsilon() * a.abs().max(b.abs()));
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = a + (b - a) / lit(2.0);
        if m <= a || m >= b {
            break;
        }
        let fm = f.eval(m);
        if fm == T::zero() {
            return Some(m);
        }
        if sign_of(fm) == sign_of(fa) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(a + (b - a) / lit(2.0))
}

/// Roots of one component, with the tail rule applied.
///
/// Sign changes are taken over the whole grid. A local minimum of
/// |f| without a sign change triggers a series search for a pair of roots
/// hidden inside the neighbouring cells. Roots outside the outermost lobes
/// peaking above `threshold` are tail noise and dropped; inside, both
/// neighbouring lobes must clear `floor`.
pub fn component_roots<T: Real>(
    x: &[T],
    values: &[T],
    series: &HermiteSeries<T>,
    threshold: T,
    floor: T,
    tol: T,
) -> Vec<T> {
    let n = values.len();
    let mut roots: Vec<T> = Vec::new();
    let mut peaks: Vec<T> = Vec::new();
    let mut cur = T::zero();
    let mut last: Option<(usize, i8)> = None;
    let mut deriv: Option<HermiteSeries<T>> = None;

    for i in 0..n {
        let v = values[i];
        let s = sign_of(v);
        if s != 0 {
            if let Some((j, sj)) = last {
                if sj != s {
                    let root = if i == j + 2 && values[j + 1] == T::zero() {
                        x[j + 1]
                    } else {
                        bisect(series, x[j], x[i], tol).unwrap_or_else(|| {
                            x[j] - values[j] * (x[i] - x[j]) / (values[i] - values[j])
                        })
                    };
                    peaks.push(cur);
                    roots.push(root);
                    cur = T::zero();
                }
            }
            let hidden = if i > 0 && i + 1 < n && values[i - 1].abs() > v.abs() && values[i + 1].abs() >= v.abs()
                && sign_of(values[i - 1]) == s
                && sign_of(values[i + 1]) == s
            {
                let d = deriv.get_or_insert_with(|| series.derivative());
                hidden_pair(series, d, x[i - 1], x[i + 1], s, tol)
            } else {
                None
            };
            match hidden {
                Some((r1, r2, dip)) if x[i] < r1 => {
                    cur = cur.max(v.abs());
                    peaks.push(cur);
                    roots.push(r1);
                    peaks.push(dip);
                    roots.push(r2);
                    cur = T::zero();
                }
                Some((r1, r2, dip)) => {
                    peaks.push(cur);
                    roots.push(r1);
                    peaks.push(dip);
                    roots.push(r2);
                    cur = v.abs();
                }
                None => cur = cur.max(v.abs()),
            }
            last = Some((i, s));
        }
    }
    peaks.push(cur);
    let Some(first) = peaks.iter().position(|&p| p > threshold) else {
        return Vec::new();
    };
    let last = peaks.iter().rposition(|&p| p > threshold).unwrap_or(first);
    roots
        .into_iter()
        .enumerate()
        .filter(|&(k, _)| k >= first && k < last && peaks[k] > floor && peaks[k + 1] > floor)
        .map(|(_, r)| r)
        .collect()
}


/// Two roots between grid points that share the sign `s`, found through the
/// extremum of the series in [a, b].
fn hidden_pair<T: Real>(
    f: &HermiteSeries<T>,
    df: &HermiteSeries<T>,
    a: T,
    b: T,
    s: i8,
    tol: T,
) -> Option<(T, T, T)> {
    let sv = if s > 0 { T::one() } else { -T::one() };
    if !(df.eval(a) * sv < T::zero() && df.eval(b) * sv > T::zero()) {
        return None;
    }
    let m = bisect(df, a, b, tol)?;
    let fm = f.eval(m);
    if sign_of(fm) != -s {
        return None;
    }
    let r1 = bisect(f, a, m, tol)?;
    let r2 = bisect(f, m, b, tol)?;
    Some((r1, r2, fm.abs()))
}

/// Lobes below this are rounding noise of the series evaluation.
fn noise_floor<T: Real>(state: &RealSpaceState<T>) -> T {
    lit::<T>(64.0) * T::epsilon() * state.max_amplitude()
}

/// Grid points whose density exceeds eps_tail² of its peak.
pub fn resolved_mask<T: Real>(texture: &SpinTexture<T>, cfg: &TopoConfig<T>) -> Vec<bool> {
    let peak = texture.density.iter().fold(T::zero(), |a, &v| a.max(v));
    let cut = cfg.eps_tail * cfg.eps_tail * peak;
    texture.density.iter().map(|&d| d > cut).collect()
}

/// True if `x` lies in a grid cell whose two ends are both resolved.
fn in_resolved_cell<T: Real>(grid: &[T], resolved: &[bool], x: T) -> bool {
    let i = grid.partition_point(|&g| g <= x);
    if i == 0 || i > grid.len() - 1 {
        return false;
    }
    resolved[i - 1] && resolved[i]
}

/// Roots of one component inside resolved parts of the texture.
fn roots_of<T: Real>(
    state: &RealSpaceState<T>,
    resolved: &[bool],
    c: Component,
    cfg: &TopoConfig<T>,
) -> Vec<AxisZero<T>> {
    let floor = noise_floor(state);
    component_roots(
        &state.grid.points,
        state.values(c),
        state.series.component(c),
        floor,
        floor,
        cfg.refine_tol,
    )
    .into_iter()
    .filter(|&x| in_resolved_cell(&state.grid.points, resolved, x))
    .map(|x| AxisZero::root(x, c))
    .collect()
}

fn sort_by_x<T: Real>(v: &mut [AxisZero<T>]) {
    v.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap_or(std::cmp::Ordering::Equal));
}

/// Zeros of s_x: the nodes of both σz components, sorted. The nodes of one
/// component must mirror those of the other.
pub fn find_sigma_x_zeros<T: Real>(
    state: &RealSpaceState<T>,
    texture: &SpinTexture<T>,
    cfg: &TopoConfig<T>,
) -> Result<Vec<AxisZero<T>>, TopoError> {
    let resolved = resolved_mask(texture, cfg);
    let up = roots_of(state, &resolved, Component::ZUp, cfg);
    let down = roots_of(state, &resolved, Component::ZDown, cfg);
    if up.len() != down.len() {
        return Err(TopoError::Unpaired {
            detail: format!("{} nodes in the up component, {} in the down component", up.len(), down.len()),
        });
    }
    for (u, d) in up.iter().zip(down.iter().rev()) {
        if (u.x + d.x).abs() > cfg.pairing_tol {
            return Err(TopoError::Unpaired {
                detail: format!("node at {} has no mirror partner (closest {})", u.x, -d.x),
            });
        }
    }
    let mut all = up;
    all.extend(down);
    sort_by_x(&mut all);
    Ok(all)
}

/// True when s_z vanishes identically relative to the trajectory size.
pub fn is_degenerate<T: Real>(texture: &SpinTexture<T>) -> bool {
    let r = texture.max_radius();
    let z = texture.s_z.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    r == T::zero() || z <= lit::<T>(1e-10) * r
}

/// Zeros of s_z: the nodes of both σx components, sorted.
pub fn find_sigma_z_zeros<T: Real>(
    state: &RealSpaceState<T>,
    texture: &SpinTexture<T>,
    cfg: &TopoConfig<T>,
) -> Result<Vec<AxisZero<T>>, TopoError> {
    if is_degenerate(texture) {
        return Err(TopoError::DegenerateTexture);
    }
    let resolved = resolved_mask(texture, cfg);
    let mut all = roots_of(state, &resolved, Component::XUp, cfg);
    all.extend(roots_of(state, &resolved, Component::XDown, cfg));
    sort_by_x(&mut all);
    Ok(all)
}

/// Index range of the retained support: density above eps_tail² of its peak.
pub fn support<T: Real>(texture: &SpinTexture<T>, cfg: &TopoConfig<T>) -> (usize, usize) {
    let peak = texture.density.iter().fold(T::zero(), |a, &v| a.max(v));
    let cut = cfg.eps_tail * cfg.eps_tail * peak;
    let lo = texture.density.iter().position(|&d| d > cut).unwrap_or(0);
    let hi = texture
        .density
        .iter()
        .rposition(|&d| d > cut)
        .unwrap_or(texture.density.len() - 1);
    (lo, hi)
}

/// Sign of s_x at the outermost retained point.
pub fn boundary_sign<T: Real>(texture: &SpinTexture<T>, cfg: &TopoConfig<T>) -> i8 {
    let (_, hi) = support(texture, cfg);
    if texture.s_x[hi] >= T::zero() {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(c: &[f64]) -> HermiteSeries<f64> {
        HermiteSeries::new(c.to_vec())
    }

    #[test]
    fn bisect_finds_odd_root() {
        let f = series(&[0.0, 1.0]);
        let r = bisect(&f, -0.3, 0.7, 1e-13).unwrap();
        assert!(r.abs() < 1e-12);
        assert!(bisect(&f, 0.2, 0.7, 1e-13).is_none());
    }

    #[test]
    fn roots_of_second_hermite_function() {
        // φ_2 ∝ (2x² - 1): roots at ±1/√2.
        let f = series(&[0.0, 0.0, 1.0]);
        let x: Vec<f64> = (0..201).map(|i| -10.0 + 0.1 * i as f64).collect();
        let v: Vec<f64> = x.iter().map(|&t| f.eval(t)).collect();
        let r = component_roots(&x, &v, &f, 1e-6, 1e-12, 1e-13);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 0.5f64.sqrt()).abs() < 1e-12);
        assert!((r[1] - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exact_grid_zero_is_kept_exactly() {
        let f = series(&[0.0, 1.0]);
        let x: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let mut v: Vec<f64> = x.iter().map(|&t| f.eval(t)).collect();
        v[10] = 0.0;
        let r = component_roots(&x, &v, &f, 1e-6, 1e-12, 1e-13);
        assert_eq!(r, vec![x[10]]);
    }

    #[test]
    fn hidden_pair_between_grid_points() {
        // φ_0 (1 + (1+δ)(2x² - 1)) dips below zero on |x| < sqrt(δ/2).
        let d = 1e-3;
        let f = series(&[1.0, 0.0, 2f64.sqrt() * (1.0 + d)]);
        let dense: Vec<f64> = (0..200001).map(|i| -2.0 + 2e-5 * i as f64).collect();
        let dv: Vec<f64> = dense.iter().map(|&t| f.eval(t)).collect();
        let expected = component_roots(&dense, &dv, &f, 0.0, 0.0, 1e-13);
        assert_eq!(expected.len(), 2);
        let coarse: Vec<f64> = (0..40).map(|i| -1.95 + 0.1 * i as f64).collect();
        let cv: Vec<f64> = coarse.iter().map(|&t| f.eval(t)).collect();
        assert!(cv.iter().all(|&v| v > 0.0));
        let found = component_roots(&coarse, &cv, &f, 0.0, 0.0, 1e-13);
        assert_eq!(found.len(), 2);
        for (p, q) in found.iter().zip(&expected) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn tail_flips_are_dropped() {
        let x: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let v = vec![-1e-9, 2e-9, 1.0, -0.5, -1e-3, 1e-8, -1e-9];
        let f = series(&[1.0]);
        let r = component_roots(&x, &v, &f, 1e-6, 1e-12, 1e-13);
        assert_eq!(r.len(), 1);
        assert!(r[0] > 2.0 && r[0] < 3.0);
    }

    #[test]
    fn interior_valley_roots_need_the_noise_floor() {
        let x: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let f = series(&[1.0]);
        let valley = vec![1.0, 0.5, -1e-9, 2e-9, -1e-10, 0.4, 0.9];
        assert_eq!(component_roots(&x, &valley, &f, 1e-6, 1e-12, 1e-13).len(), 4);
        let noise = vec![1.0, 0.5, -1e-15, 2e-15, -1e-16, 0.4, 0.9];
        assert!(component_roots(&x, &noise, &f, 1e-6, 1e-12, 1e-13).is_empty());
    }
}
