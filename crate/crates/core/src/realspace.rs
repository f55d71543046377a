//! Position-space wavefunctions and spin textures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{EigenLevel, ModelParams, Parity};
use crate::scalar::{from_usize, lit, Real};

/// Largest Hermite index accepted by the recurrence.
pub const MAX_HERMITE_ORDER: usize = 400;
pub const DEFAULT_GRID_POINTS: usize = 4001;
/// Extra half-width beyond the displaced classical turning point.
pub const GRID_MARGIN: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealSpaceError {
    #[error("grid needs an odd number of points >= 3 (got {0})")]
    BadPointCount(usize),
    #[error("grid half-width must be positive and finite (got {0})")]
    BadHalfWidth(f64),
    #[error("Hermite order {0} exceeds the supported maximum of 400")]
    OrderTooHigh(usize),
    #[error("grid too narrow: relative amplitude {edge:e} at |x| = {x_max} exceeds {bound:e}")]
    GridTooNarrow { x_max: f64, edge: f64, bound: f64 },
    #[error("state norm on the grid is {0}, expected 1")]
    BadNorm(f64),
    #[error("coefficient vector has {got} entries, block dimension is {want}")]
    BadCoefficients { got: usize, want: usize },
}

/// Uniform grid symmetric about the origin: x_i = (i - c) h with c the
/// center index, so x_{c+k} = -x_{c-k} holds exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub half_width: T,
    pub step: T,
    pub points: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn symmetric(half_width: T, n_points: usize) -> Result<Self, RealSpaceError> {
        if n_points < 3 || n_points % 2 == 0 {
            return Err(RealSpaceError::BadPointCount(n_points));
        }
        if !(half_width > T::zero() && half_width.is_finite()) {
            return Err(RealSpaceError::BadHalfWidth(half_width.to_f64().unwrap_or(f64::NAN)));
        }
        let c = (n_points - 1) / 2;
        let step = half_width / from_usize(c);
        let points = (0..n_points)
            .map(|i| {
                let k = from_usize::<T>(i.abs_diff(c)) * step;
                if i < c {
                    -k
                } else {
                    k
                }
            })
            .collect();
        Ok(Self {
            half_width,
            step,
            points,
        })
    }

    /// Default grid for a parameter set: the coherent displacement g(1+λ)/ω
    /// plus the turning point of the highest Fock state plus a margin.
    pub fn for_params(params: &ModelParams<T>, n_points: usize) -> Result<Self, RealSpaceError> {
        Self::symmetric(default_half_width(params), n_points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn center(&self) -> usize {
        self.points.len() / 2
    }
}

pub fn default_half_width<T: Real>(params: &ModelParams<T>) -> T {
    let displacement = params.g * (T::one() + params.lambda.abs()) / params.omega;
    displacement + (lit::<T>(2.0) * from_usize::<T>(params.n_cut + 1)).sqrt() + lit(GRID_MARGIN)
}

/// Values of φ_0..φ_{n_max} at a single point, computed with a rescaled
/// three-term recurrence so neither the Gaussian nor the polynomial part
/// overflows or underflows prematurely.
pub fn hermite_functions<T: Real>(x: T, n_max: usize) -> Vec<T> {
    let mut out = vec![T::zero(); n_max + 1];
    hermite_fold(x, n_max, |n, v| out[n] = v);
    out
}

/// Coefficients of φ_{n+1} = a_n x φ_n - b_n φ_{n-1}.
struct Recurrence<T> {
    a: Vec<T>,
    b: Vec<T>,
}

impl<T: Real> Recurrence<T> {
    fn new(n_max: usize) -> Self {
        let two = lit::<T>(2.0);
        let (a, b) = (0..n_max)
            .map(|n| {
                let nf = from_usize::<T>(n);
                ((two / (nf + T::one())).sqrt(), (nf / (nf + T::one())).sqrt())
            })
            .unzip();
        Self { a, b }
    }
}

/// Runs the rescaled recurrence and hands each φ_n(x) to `sink`.
fn hermite_fold<T: Real>(x: T, n_max: usize, sink: impl FnMut(usize, T)) {
    hermite_fold_with(&Recurrence::new(n_max), x, sink)
}

fn hermite_fold_with<T: Real>(rec: &Recurrence<T>, x: T, mut sink: impl FnMut(usize, T)) {
    let big = T::max_value().sqrt();
    let log_big = big.ln();
    // Below this exponent the factor exp(log_scale) itself is subnormal.
    let floor = T::min_positive_value().ln() + lit(40.0);
    // Each φ_n = scaled_n * exp(log_scale).
    let mut log_scale = -x * x / lit(2.0);
    let mut factor = if log_scale > floor { Some(log_scale.exp()) } else { None };
    let emit = |v: T, ls: T, factor: Option<T>| match factor {
        Some(f) => v * f,
        None => unscale(v, ls),
    };
    let mut prev = T::zero();
    let mut cur = T::PI().powf(lit(-0.25));
    sink(0, emit(cur, log_scale, factor));
    for n in 0..rec.a.len() {
        let next = rec.a[n] * x * cur - rec.b[n] * prev;
        prev = cur;
        cur = next;
        if cur.abs() > big {
            prev = prev / big;
            cur = cur / big;
            log_scale = log_scale + log_big;
            factor = if log_scale > floor { Some(log_scale.exp()) } else { None };
        }
        sink(n + 1, emit(cur, log_scale, factor));
    }
}

/// v * exp(log_scale) without intermediate underflow.
#[inline]
fn unscale<T: Real>(v: T, log_scale: T) -> T {
    if v == T::zero() {
        v
    } else {
        v.signum() * (v.abs().ln() + log_scale).exp()
    }
}

/// φ_n(x_i) on every grid point, stored order-major.
#[derive(Debug, Clone)]
pub struct HermiteTable<T> {
    pub n_max: usize,
    pub n_points: usize,
    values: Vec<T>,
}

impl<T: Real> HermiteTable<T> {
    pub fn row(&self, n: usize) -> &[T] {
        &self.values[n * self.n_points..(n + 1) * self.n_points]
    }
}

pub fn hermite_basis<T: Real>(grid: &Grid<T>, n_max: usize) -> Result<HermiteTable<T>, RealSpaceError> {
    if n_max > MAX_HERMITE_ORDER {
        return Err(RealSpaceError::OrderTooHigh(n_max));
    }
    let np = grid.len();
    let mut values = vec![T::zero(); (n_max + 1) * np];
    let rec = Recurrence::new(n_max);
    for (i, &x) in grid.points.iter().enumerate() {
        hermite_fold_with(&rec, x, |n, v| values[n * np + i] = v);
    }
    Ok(HermiteTable {
        n_max,
        n_points: np,
        values,
    })
}

/// A finite Hermite-function expansion f(x) = Σ d_n φ_n(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HermiteSeries<T> {
    pub coeffs: Vec<T>,
}

impl<T: Real> HermiteSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        Self { coeffs }
    }

    pub fn eval(&self, x: T) -> T {
        let mut acc = T::zero();
        let n_max = self.coeffs.len().saturating_sub(1);
        // Sum in the scaled frame to survive the far tails.
        let big = T::max_value().sqrt();
        let two = lit::<T>(2.0);
        let mut log_scale = -x * x / two;
        let mut prev = T::zero();
        let mut cur = T::PI().powf(lit(-0.25));
        acc = acc + self.coeffs[0] * cur;
        for n in 0..n_max {
            let nf = from_usize::<T>(n);
            let next = (two / (nf + T::one())).sqrt() * x * cur - (nf / (nf + T::one())).sqrt() * prev;
            prev = cur;
            cur = next;
            if cur.abs() > big {
                prev = prev / big;
                cur = cur / big;
                acc = acc / big;
                log_scale = log_scale + big.ln();
            }
            acc = acc + self.coeffs[n + 1] * cur;
        }
        unscale(acc, log_scale)
    }

    /// Expansion of f'(x), one order longer, from
    /// φ_n' = sqrt(n/2) φ_{n-1} - sqrt((n+1)/2) φ_{n+1}.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        let half = lit::<T>(0.5);
        let mut out = vec![T::zero(); n + 1];
        for (m, o) in out.iter_mut().enumerate() {
            let mut v = T::zero();
            if m + 1 < n {
                v = v + self.coeffs[m + 1] * (from_usize::<T>(m + 1) * half).sqrt();
            }
            if m >= 1 && m - 1 < n {
                v = v - self.coeffs[m - 1] * (from_usize::<T>(m) * half).sqrt();
            }
            *o = v;
        }
        Self { coeffs: out }
    }

    pub fn eval_table(&self, table: &HermiteTable<T>) -> Vec<T> {
        let mut out = vec![T::zero(); table.n_points];
        for (n, &c) in self.coeffs.iter().enumerate().take(table.n_max + 1) {
            if c == T::zero() {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(table.row(n)) {
                *o = *o + c * v;
            }
        }
        out
    }
}

/// The four position-space spinor components of a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    /// ⟨x, ↑|ψ⟩ (σz up).
    ZUp,
    /// ⟨x, ↓|ψ⟩ (σz down).
    ZDown,
    /// ⟨x, ⇑|ψ⟩ (σx up).
    XUp,
    /// ⟨x, ⇓|ψ⟩ (σx down).
    XDown,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::ZUp, Component::ZDown, Component::XUp, Component::XDown];
}

/// Series for each spinor component of a block eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorSeries<T> {
    pub parity: Parity,
    pub z_up: HermiteSeries<T>,
    pub z_down: HermiteSeries<T>,
    pub x_up: HermiteSeries<T>,
    pub x_down: HermiteSeries<T>,
}

impl<T: Real> SpinorSeries<T> {
    pub fn from_block(coeffs: &[T], parity: Parity) -> Self {
        let r = T::FRAC_1_SQRT_2();
        let mut z_up = Vec::with_capacity(coeffs.len());
        let mut z_down = Vec::with_capacity(coeffs.len());
        let mut x_up = vec![T::zero(); coeffs.len()];
        let mut x_down = vec![T::zero(); coeffs.len()];
        for (n, &c) in coeffs.iter().enumerate() {
            let up = parity.spin_of(n) > 0;
            z_up.push(c * r);
            z_down.push(if up { c * r } else { -c * r });
            if up {
                x_up[n] = c;
            } else {
                x_down[n] = c;
            }
        }
        Self {
            parity,
            z_up: HermiteSeries::new(z_up),
            z_down: HermiteSeries::new(z_down),
            x_up: HermiteSeries::new(x_up),
            x_down: HermiteSeries::new(x_down),
        }
    }

    pub fn component(&self, c: Component) -> &HermiteSeries<T> {
        match c {
            Component::ZUp => &self.z_up,
            Component::ZDown => &self.z_down,
            Component::XUp => &self.x_up,
            Component::XDown => &self.x_down,
        }
    }

    /// (s_z, s_x) at a single point.
    pub fn texture_at(&self, x: T) -> (T, T) {
        let u = self.z_up.eval(x);
        let d = self.z_down.eval(x);
        (u * u - d * d, lit::<T>(2.0) * u * d)
    }
}

/// Sampled spinor of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSpaceState<T> {
    pub grid: Grid<T>,
    pub series: SpinorSeries<T>,
    pub z_up: Vec<T>,
    pub z_down: Vec<T>,
    pub x_up: Vec<T>,
    pub x_down: Vec<T>,
    pub parity: Parity,
    /// Trapezoid norm of the sampled state minus one.
    pub norm_residual: T,
}

impl<T: Real> RealSpaceState<T> {
    pub fn values(&self, c: Component) -> &[T] {
        match c {
            Component::ZUp => &self.z_up,
            Component::ZDown => &self.z_down,
            Component::XUp => &self.x_up,
            Component::XDown => &self.x_down,
        }
    }

    pub fn max_amplitude(&self) -> T {
        self.z_up
            .iter()
            .chain(&self.z_down)
            .fold(T::zero(), |a, &v| a.max(v.abs()))
    }
}

/// Relative edge amplitude above which a grid is rejected.
pub const EDGE_AMPLITUDE_BOUND: f64 = 1e-8;

/// Samples a level on a grid. Rejects grids whose edges still carry weight.
pub fn to_position<T: Real>(level: &EigenLevel<T>, grid: &Grid<T>) -> Result<RealSpaceState<T>, RealSpaceError> {
    if level.coeffs.len() != level.block_dim {
        return Err(RealSpaceError::BadCoefficients {
            got: level.coeffs.len(),
            want: level.block_dim,
        });
    }
    let table = hermite_basis(grid, level.coeffs.len() - 1)?;
    to_position_with(level, grid, &table)
}

/// Same as [`to_position`] with a precomputed basis covering the block.
pub fn to_position_with<T: Real>(
    level: &EigenLevel<T>,
    grid: &Grid<T>,
    table: &HermiteTable<T>,
) -> Result<RealSpaceState<T>, RealSpaceError> {
    if level.coeffs.len() != level.block_dim || table.n_max + 1 < level.coeffs.len() || table.n_points != grid.len() {
        return Err(RealSpaceError::BadCoefficients {
            got: level.coeffs.len(),
            want: table.n_max + 1,
        });
    }
    let series = SpinorSeries::from_block(&level.coeffs, level.parity);
    let z_up = series.z_up.eval_table(table);
    let z_down = series.z_down.eval_table(table);
    let x_up = series.x_up.eval_table(table);
    let x_down = series.x_down.eval_table(table);

    let density: Vec<T> = z_up.iter().zip(&z_down).map(|(&u, &d)| u * u + d * d).collect();
    let peak = density.iter().fold(T::zero(), |a, &v| a.max(v));
    let edge = density[0].max(density[density.len() - 1]);
    let rel = if peak > T::zero() { (edge / peak).sqrt() } else { T::zero() };
    let bound = lit::<T>(EDGE_AMPLITUDE_BOUND).max(T::epsilon());
    if rel > bound {
        return Err(RealSpaceError::GridTooNarrow {
            x_max: grid.half_width.to_f64().unwrap_or(f64::NAN),
            edge: rel.to_f64().unwrap_or(f64::NAN),
            bound: bound.to_f64().unwrap_or(f64::NAN),
        });
    }
    let half = lit::<T>(0.5);
    let sum = density.iter().fold(T::zero(), |a, &v| a + v);
    let norm = (sum - half * (density[0] + density[density.len() - 1])) * grid.step;
    let tol = lit::<T>(1e-6).max(T::epsilon().sqrt() * lit(10.0));
    let norm_residual = norm - T::one();
    if norm_residual.abs() > tol {
        return Err(RealSpaceError::BadNorm(norm.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(RealSpaceState {
        grid: grid.clone(),
        series,
        z_up,
        z_down,
        x_up,
        x_down,
        parity: level.parity,
        norm_residual,
    })
}

/// Local spin expectation field. The σy component vanishes identically for
/// real eigenvectors and is kept for completeness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinTexture<T> {
    pub x: Vec<T>,
    pub s_z: Vec<T>,
    pub s_x: Vec<T>,
    pub s_y: Vec<T>,
    pub density: Vec<T>,
}

impl<T: Real> SpinTexture<T> {
    pub fn radius(&self, i: usize) -> T {
        self.s_z[i].hypot(self.s_x[i])
    }

    pub fn max_radius(&self) -> T {
        (0..self.x.len()).fold(T::zero(), |a, i| a.max(self.radius(i)))
    }

    /// Signed-power rescaling sign(v)|v|^p of both in-plane components, for
    /// display of trajectories only.
    pub fn amplified(&self, power: T) -> (Vec<T>, Vec<T>) {
        let f = |v: &T| amplify(*v, power);
        (self.s_z.iter().map(f).collect(), self.s_x.iter().map(f).collect())
    }
}

pub fn amplify<T: Real>(v: T, power: T) -> T {
    if v == T::zero() {
        v
    } else {
        v.signum() * v.abs().powf(power)
    }
}

pub fn spin_texture<T: Real>(state: &RealSpaceState<T>) -> SpinTexture<T> {
    let two = lit::<T>(2.0);
    let n = state.grid.len();
    let mut s_z = Vec::with_capacity(n);
    let mut s_x = Vec::with_capacity(n);
    let mut density = Vec::with_capacity(n);
    for i in 0..n {
        let (u, d) = (state.z_up[i], state.z_down[i]);
        s_z.push(u * u - d * d);
        s_x.push(two * u * d);
        density.push(u * u + d * d);
    }
    SpinTexture {
        x: state.grid.points.clone(),
        s_z,
        s_x,
        s_y: vec![T::zero(); n],
        density,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::solve_spectrum;

    #[test]
    fn grid_is_exactly_symmetric() {
        let g = Grid::<f64>::symmetric(17.3, 4001).unwrap();
        let c = g.center();
        assert_eq!(g.points[c], 0.0);
        for k in 0..=c {
            assert_eq!(g.points[c + k], -g.points[c - k]);
        }
        assert_eq!(g.points[0], -17.3);
        assert!(Grid::<f64>::symmetric(1.0, 4000).is_err());
    }

    #[test]
    fn hermite_low_orders() {
        let x = 0.7f64;
        let h = hermite_functions(x, 3);
        let g = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
        assert!((h[0] - g).abs() < 1e-15);
        assert!((h[1] - 2f64.sqrt() * x * g).abs() < 1e-15);
        assert!((h[2] - (2.0 * x * x - 1.0) / 2f64.sqrt() * g).abs() < 1e-15);
    }

    #[test]
    fn hermite_far_tail_is_finite() {
        for &x in &[-40.0f64, -25.0, 25.0, 40.0] {
            for v in hermite_functions(x, 400) {
                assert!(v.is_finite());
            }
        }
        // The largest orders are far from negligible at |x| = 25.
        assert!(hermite_functions(25.0f64, 400)[400].abs() > 1e-3);
    }

    #[test]
    fn series_derivative_matches_difference() {
        let s = HermiteSeries::new(vec![0.3f64, -0.2, 0.5, 0.1, -0.4]);
        let d = s.derivative();
        for &x in &[-2.0, -0.3, 0.0, 1.1, 3.0] {
            let h = 1e-5;
            let fd = (s.eval(x + h) - s.eval(x - h)) / (2.0 * h);
            assert!((fd - d.eval(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn series_eval_matches_table() {
        let grid = Grid::<f64>::symmetric(10.0, 101).unwrap();
        let table = hermite_basis(&grid, 20).unwrap();
        let s = HermiteSeries::new((0..21).map(|n| ((n * 7 % 5) as f64 - 2.0) / 5.0).collect());
        let v = s.eval_table(&table);
        for (i, &x) in grid.points.iter().enumerate() {
            assert!((v[i] - s.eval(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn state_is_normalized_and_parity_symmetric() {
        let p = ModelParams::<f64>::with_g_in_gs(0.5, 1.5, 0.2);
        let s = solve_spectrum(&p).unwrap();
        let grid = Grid::for_params(&p, DEFAULT_GRID_POINTS).unwrap();
        for l in s.levels.iter().take(4) {
            let st = to_position(l, &grid).unwrap();
            assert!(st.norm_residual.abs() < 1e-9);
            let sign = l.parity.value::<f64>();
            let n = grid.len();
            for i in 0..n {
                // σx (-1)^{a†a} maps ψ↑(x) to ψ↓(-x).
                assert!((st.z_up[i] - sign * st.z_down[n - 1 - i]).abs() < 1e-12);
            }
            let tex = spin_texture(&st);
            for i in 0..n {
                assert!((tex.s_z[i] + tex.s_z[n - 1 - i]).abs() < 1e-12);
                assert!((tex.s_x[i] - tex.s_x[n - 1 - i]).abs() < 1e-12);
                let r = tex.radius(i);
                assert!((r - tex.density[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let p = ModelParams::<f64>::with_g_in_gs(0.5, 4.0, 0.5);
        let s = solve_spectrum(&p).unwrap();
        let grid = Grid::symmetric(2.0, 401).unwrap();
        assert!(matches!(
            to_position(&s.levels[0], &grid),
            Err(RealSpaceError::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn hermite_orthonormal_on_default_grid() {
        let p = ModelParams::<f64>::with_g_in_gs(0.5, 1.0, 0.5);
        let grid = Grid::for_params(&p, DEFAULT_GRID_POINTS).unwrap();
        let t = hermite_basis(&grid, 50).unwrap();
        assert!((t.row(0)[grid.center()] - 0.751_125_5).abs() < 1e-7);
        assert_eq!(t.row(1)[grid.center()], 0.0);
        for n in 0..=50 {
            for m in n..=50 {
                let s: f64 = t.row(n).iter().zip(t.row(m)).map(|(a, b)| a * b).sum::<f64>() * grid.step;
                let want = if n == m { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-8, "{n} {m} {s}");
            }
        }
    }

    #[test]
    fn uncoupled_ground_state() {
        let p = ModelParams::<f64>::with_g_in_gs(0.5, 0.0, 0.4);
        let s = solve_spectrum(&p).unwrap();
        let grid = Grid::for_params(&p, 401).unwrap();
        let st = to_position(&s.levels[0], &grid).unwrap();
        let tex = spin_texture(&st);
        for (i, &x) in grid.points.iter().enumerate() {
            let phi0 = hermite_functions(x, 0)[0];
            assert!((st.z_up[i].abs() - phi0 / 2f64.sqrt()).abs() < 1e-14);
            assert!((st.z_up[i] + st.z_down[i]).abs() < 1e-14);
            assert!((tex.s_x[i] + phi0 * phi0).abs() < 1e-14);
            assert_eq!(tex.s_z[i], 0.0);
        }
    }

    #[test]
    fn amplify_preserves_sign() {
        assert_eq!(amplify(-4.0f64, 0.5), -2.0);
        assert_eq!(amplify(0.0f64, 0.3), 0.0);
        assert_eq!(amplify(9.0f64, 0.5), 3.0);
    }
}
