//! Parameter sweeps, gap events and phase diagrams.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::{merged_energies, solve_spectrum, ModelParams, Parity};
use crate::pipeline::{analyze_levels, PipelineConfig};
use crate::scalar::{from_usize, lit, Real};
use crate::topology::TopoSummary;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    G,
    Lambda,
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "g" => Ok(SweepAxis::G),
            "lambda" | "l" => Ok(SweepAxis::Lambda),
            other => Err(Error::Sweep(format!("unknown sweep axis {other:?}, expected g or lambda"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::G => "g",
            SweepAxis::Lambda => "lambda",
        })
    }
}

/// `n` evenly spaced values from `lo` to `hi`, both included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange<T> {
    pub lo: T,
    pub hi: T,
    pub n: usize,
}

impl<T: Real> AxisRange<T> {
    pub fn new(lo: T, hi: T, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::Sweep(format!("empty range: need lo < hi (got {} .. {})", self.lo, self.hi)));
        }
        if self.n < 2 {
            return Err(Error::Sweep(format!("a range needs at least 2 points (got {})", self.n)));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> T {
        if i + 1 == self.n {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * from_usize(i) / from_usize(self.n - 1)
    }

    pub fn values(&self) -> Vec<T> {
        (0..self.n).map(|i| self.value(i)).collect()
    }

    pub fn step(&self) -> T {
        (self.hi - self.lo) / from_usize(self.n - 1)
    }
}

/// A line through parameter space along `axis`; the other coupling is taken
/// from `base`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec<T> {
    pub axis: SweepAxis,
    pub range: AxisRange<T>,
    pub level: usize,
    pub base: ModelParams<T>,
}

impl<T: Real> SweepSpec<T> {
    pub fn validate(&self) -> Result<(), Error> {
        self.range.validate()?;
        if self.level == 0 || self.level > self.base.n_levels {
            return Err(Error::LevelOutOfRange {
                j_e: self.level,
                n_levels: self.base.n_levels,
            });
        }
        let mut probe = self.base;
        probe.g = probe.g.max(T::zero());
        probe.lambda = probe.lambda.max(T::zero());
        probe.validate()?;
        let at_lo = self.params_at(self.range.lo);
        at_lo.validate()?;
        Ok(())
    }

    pub fn params_at(&self, t: T) -> ModelParams<T> {
        match self.axis {
            SweepAxis::G => self.base.with_g(t),
            SweepAxis::Lambda => self.base.with_lambda(t),
        }
    }
}

/// Gap-zero threshold used to call a gap minimum a crossing.
pub const GAP_ZERO_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig<T> {
    pub pipeline: PipelineConfig<T>,
    pub gap_zero_tol: T,
    /// Thread count; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Run the topology pipeline for each record.
    pub topology: bool,
    /// Recompute cells next to a boundary on a refined grid and truncation.
    pub near_boundary_check: bool,
    /// Search each boundary edge for a closing gap.
    pub boundary_gaps: bool,
}

impl<T: Real> Default for ScanConfig<T> {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            gap_zero_tol: lit(GAP_ZERO_TOL),
            workers: None,
            topology: true,
            near_boundary_check: true,
            boundary_gaps: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub message: String,
    /// Bad input rather than a numerical failure.
    pub validation: bool,
}

impl From<&Error> for Failure {
    fn from(e: &Error) -> Self {
        Self {
            message: e.to_string(),
            validation: e.is_validation(),
        }
    }
}

/// One level at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord<T> {
    pub g: T,
    pub lambda: T,
    pub j_e: usize,
    pub energy: Option<T>,
    pub parity: Option<Parity>,
    pub delta_plus: Option<T>,
    pub delta_minus: Option<T>,
    pub topo: Option<TopoSummary<T>>,
    pub error: Option<Failure>,
    /// Counters changed under grid and truncation refinement.
    #[serde(default)]
    pub near_boundary: bool,
}

impl<T: Real> ScanRecord<T> {
    fn empty(g: T, lambda: T, j_e: usize) -> Self {
        Self {
            g,
            lambda,
            j_e,
            energy: None,
            parity: None,
            delta_plus: None,
            delta_minus: None,
            topo: None,
            error: None,
            near_boundary: false,
        }
    }
}

/// Runs `f` on a pool with `workers` threads, or on the global pool.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Records for several levels at one parameter point, sharing the solve.
pub fn evaluate_cell<T: Real>(params: &ModelParams<T>, levels: &[usize], cfg: &ScanConfig<T>) -> Vec<ScanRecord<T>> {
    let mut out: Vec<ScanRecord<T>> = levels
        .iter()
        .map(|&j| ScanRecord::empty(params.g, params.lambda, j))
        .collect();
    let spectrum = match solve_spectrum(params) {
        Ok(s) => s,
        Err(e) => {
            let f = Failure::from(&Error::from(e));
            for r in &mut out {
                r.error = Some(f.clone());
            }
            return out;
        }
    };
    for r in &mut out {
        match (spectrum.level(r.j_e), spectrum.gaps_of(r.j_e)) {
            (Some(l), Some(gaps)) => {
                r.energy = Some(l.energy);
                r.parity = Some(l.parity);
                r.delta_plus = Some(gaps.delta_plus);
                r.delta_minus = gaps.delta_minus;
            }
            _ => {
                r.error = Some(Failure::from(&Error::LevelOutOfRange {
                    j_e: r.j_e,
                    n_levels: spectrum.levels.len(),
                }))
            }
        }
    }
    if cfg.topology {
        let valid: Vec<usize> = levels.iter().copied().filter(|&j| spectrum.level(j).is_some()).collect();
        match analyze_levels(&spectrum, &valid, &cfg.pipeline) {
            Ok(results) => {
                for (j, res) in valid.iter().zip(results) {
                    let Some(r) = out.iter_mut().find(|r| r.j_e == *j) else {
                        continue;
                    };
                    match res {
                        Ok(a) => r.topo = Some(a.summary),
                        Err(e) => r.error = Some(Failure::from(&e)),
                    }
                }
            }
            Err(e) => {
                let f = Failure::from(&e);
                for r in &mut out {
                    r.error.get_or_insert_with(|| f.clone());
                }
            }
        }
    }
    out
}

/// Full pipeline at every point of the line, in axis order.
pub fn sweep_line<T: Real>(spec: &SweepSpec<T>, cfg: &ScanConfig<T>) -> Result<Vec<ScanRecord<T>>, Error> {
    spec.validate()?;
    let points = spec.range.values();
    Ok(with_workers(cfg.workers, || {
        points
            .par_iter()
            .map(|&t| {
                evaluate_cell(&spec.params_at(t), &[spec.level], cfg)
                    .pop()
                    .unwrap_or_else(|| ScanRecord::empty(t, t, spec.level))
            })
            .collect()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GapSide {
    /// E(j+1) - E(j).
    Upper,
    /// E(j) - E(j-1).
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Crossing,
    Anticrossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEvent<T> {
    pub side: GapSide,
    /// Refined position of the gap minimum along the sweep axis.
    pub location: T,
    pub kind: EventKind,
    pub gap_at_min: T,
    /// Parity of the tracked level differs on the two sides of the minimum.
    pub parity_flip: bool,
    /// Change in node pairs between the records bracketing the minimum.
    pub node_jump: Option<i64>,
    /// Minimum sits at an end of the sweep.
    pub partial: bool,
}

/// Minimizes `f` on [a, b] by golden-section search. Failed evaluations
/// count as +∞.
pub fn golden_min<T: Real>(mut a: T, mut b: T, tol: T, f: impl Fn(T) -> Option<T>) -> (T, T) {
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let eval = |t: T| f(t).unwrap_or(T::infinity());
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..300 {
        if (b - a).abs() <= tol * T::one().max(a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Gap of level `j_e` on one side, from energies only.
pub fn gap_at<T: Real>(params: &ModelParams<T>, j_e: usize, side: GapSide) -> Option<T> {
    let e = merged_energies(params, j_e + 1).ok()?;
    match side {
        GapSide::Upper => Some(e.get(j_e)?.0 - e.get(j_e - 1)?.0),
        GapSide::Lower if j_e >= 2 => Some(e.get(j_e - 1)?.0 - e.get(j_e - 2)?.0),
        GapSide::Lower => None,
    }
}

fn parity_at<T: Real>(params: &ModelParams<T>, j_e: usize) -> Option<Parity> {
    merged_energies(params, j_e).ok()?.get(j_e - 1).map(|e| e.1)
}

/// Local minima of Δ+ and Δ- along a sweep, refined and labeled.
pub fn classify_gap_events<T: Real>(
    spec: &SweepSpec<T>,
    records: &[ScanRecord<T>],
    cfg: &ScanConfig<T>,
) -> Result<Vec<GapEvent<T>>, Error> {
    spec.validate()?;
    if records.len() < 3 || records.len() != spec.range.n {
        return Err(Error::Sweep(format!(
            "gap classification needs the full sweep of at least 3 records (got {})",
            records.len()
        )));
    }
    let t: Vec<T> = spec.range.values();
    let j = spec.level;
    let mut candidates = Vec::new();
    for side in [GapSide::Upper, GapSide::Lower] {
        let d: Vec<Option<T>> = records
            .iter()
            .map(|r| match side {
                GapSide::Upper => r.delta_plus,
                GapSide::Lower => r.delta_minus,
            })
            .collect();
        let n = d.len();
        for k in 0..n {
            let Some(dk) = d[k] else { continue };
            let left = if k > 0 { d[k - 1] } else { None };
            let right = if k + 1 < n { d[k + 1] } else { None };
            let is_min = match (left, right) {
                (Some(l), Some(r)) => l > dk && dk <= r,
                (None, Some(r)) if k == 0 => dk < r,
                (Some(l), None) if k + 1 == n => dk < l,
                _ => false,
            };
            if is_min {
                candidates.push((side, k, k == 0 || k + 1 == n));
            }
        }
    }

    let step = spec.range.step();
    let tol = lit::<T>(1e-13);
    let events = with_workers(cfg.workers, || {
        candidates
            .par_iter()
            .map(|&(side, k, partial)| {
                let a = t[k.saturating_sub(1)];
                let b = t[(k + 1).min(t.len() - 1)];
                let (loc, gap) = golden_min(a, b, tol, |x| gap_at(&spec.params_at(x), j, side));
                let delta = step * lit(1e-3);
                let before = parity_at(&spec.params_at((loc - delta).max(spec.range.lo)), j);
                let after = parity_at(&spec.params_at((loc + delta).min(spec.range.hi)), j);
                let parity_flip = matches!((before, after), (Some(p), Some(q)) if p != q);
                let lo = &records[k.saturating_sub(1)];
                let hi = &records[(k + 1).min(records.len() - 1)];
                let node_jump = match (&lo.topo, &hi.topo) {
                    (Some(p), Some(q)) => Some(q.n_z as i64 - p.n_z as i64),
                    _ => None,
                };
                GapEvent {
                    side,
                    location: loc,
                    kind: if gap < cfg.gap_zero_tol {
                        EventKind::Crossing
                    } else {
                        EventKind::Anticrossing
                    },
                    gap_at_min: gap,
                    parity_flip,
                    node_jump,
                    partial,
                }
            })
            .collect::<Vec<_>>()
    });
    let mut events = events;
    events.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap_or(std::cmp::Ordering::Equal));
    Ok(events)
}

/// Quantities compared across neighbouring phase-diagram cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Parity,
    NodePairs,
    WindingSign,
    WindingMagnitude,
    ExtraZeros,
    DiagonalKnots,
    /// Topology analysis succeeded on one side only.
    Analysis,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Parity => "parity",
            Quantity::NodePairs => "n_z",
            Quantity::WindingSign => "sign_n_w",
            Quantity::WindingMagnitude => "abs_n_w",
            Quantity::ExtraZeros => "n_ex",
            Quantity::DiagonalKnots => "n_dk",
            Quantity::Analysis => "analysis",
        }
    }
}

/// An edge between adjacent cells `(ig, il)` across which something jumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary<T> {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub changes: Vec<Quantity>,
    /// Smallest gap of the tracked level along the edge, when searched.
    pub min_gap: Option<T>,
    /// Gap closes on the edge (conventional transition).
    pub gap_closes: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram<T> {
    pub level: usize,
    pub g_axis: AxisRange<T>,
    pub lambda_axis: AxisRange<T>,
    /// Cell `(ig, il)` is at index `il * g_axis.n + ig`.
    pub records: Vec<ScanRecord<T>>,
    pub boundaries: Vec<Boundary<T>>,
}

impl<T: Real> PhaseDiagram<T> {
    pub fn record(&self, ig: usize, il: usize) -> &ScanRecord<T> {
        &self.records[il * self.g_axis.n + ig]
    }
}

fn changes<T: Real>(p: &ScanRecord<T>, q: &ScanRecord<T>) -> Vec<Quantity> {
    let mut out = Vec::new();
    if let (Some(a), Some(b)) = (p.parity, q.parity) {
        if a != b {
            out.push(Quantity::Parity);
        }
    }
    if p.topo.is_some() != q.topo.is_some() {
        out.push(Quantity::Analysis);
    }
    if let (Some(a), Some(b)) = (&p.topo, &q.topo) {
        if a.n_z != b.n_z {
            out.push(Quantity::NodePairs);
        }
        if a.n_w.signum() != b.n_w.signum() {
            out.push(Quantity::WindingSign);
        }
        if a.n_w.abs() != b.n_w.abs() {
            out.push(Quantity::WindingMagnitude);
        }
        if a.n_ex != b.n_ex {
            out.push(Quantity::ExtraZeros);
        }
        if a.n_dk != b.n_dk {
            out.push(Quantity::DiagonalKnots);
        }
    }
    out
}

/// The parameter points of every cell, `(g, lambda)`, in record order.
pub fn cell_points<T: Real>(g_axis: &AxisRange<T>, lambda_axis: &AxisRange<T>) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(g_axis.n * lambda_axis.n);
    for il in 0..lambda_axis.n {
        for ig in 0..g_axis.n {
            out.push((g_axis.value(ig), lambda_axis.value(il)));
        }
    }
    out
}

/// Evaluates every listed point for every level, in parallel, in order.
pub fn compute_cells<T: Real>(
    base: &ModelParams<T>,
    points: &[(T, T)],
    levels: &[usize],
    cfg: &ScanConfig<T>,
) -> Vec<Vec<ScanRecord<T>>> {
    with_workers(cfg.workers, || {
        points
            .par_iter()
            .map(|&(g, l)| evaluate_cell(&base.with_g(g).with_lambda(l), levels, cfg))
            .collect()
    })
}

/// Checks grid sizes, ranges and levels before any work is done.
pub fn validate_diagram<T: Real>(
    g_axis: &AxisRange<T>,
    lambda_axis: &AxisRange<T>,
    levels: &[usize],
    base: &ModelParams<T>,
) -> Result<(), Error> {
    g_axis.validate()?;
    lambda_axis.validate()?;
    if g_axis.n < 8 || lambda_axis.n < 8 {
        return Err(Error::Sweep(format!(
            "phase diagrams need at least 8x8 cells (got {}x{})",
            g_axis.n, lambda_axis.n
        )));
    }
    if g_axis.lo < T::zero() || lambda_axis.lo < T::zero() {
        return Err(Error::Sweep("g and lambda ranges must be non-negative".into()));
    }
    for &j in levels {
        if j == 0 || j > base.n_levels {
            return Err(Error::LevelOutOfRange {
                j_e: j,
                n_levels: base.n_levels,
            });
        }
    }
    base.with_g(g_axis.lo).with_lambda(lambda_axis.lo).validate()?;
    Ok(())
}

/// Phase diagrams of several levels over a g-λ grid.
pub fn phase_diagrams<T: Real>(
    g_axis: &AxisRange<T>,
    lambda_axis: &AxisRange<T>,
    levels: &[usize],
    base: &ModelParams<T>,
    cfg: &ScanConfig<T>,
) -> Result<Vec<PhaseDiagram<T>>, Error> {
    validate_diagram(g_axis, lambda_axis, levels, base)?;
    let points = cell_points(g_axis, lambda_axis);
    let cells = compute_cells(base, &points, levels, cfg);
    assemble_phase_diagrams(g_axis, lambda_axis, levels, base, cells, cfg)
}

/// Phase diagram of one level.
pub fn phase_diagram<T: Real>(
    g_axis: &AxisRange<T>,
    lambda_axis: &AxisRange<T>,
    level: usize,
    base: &ModelParams<T>,
    cfg: &ScanConfig<T>,
) -> Result<PhaseDiagram<T>, Error> {
    Ok(phase_diagrams(g_axis, lambda_axis, &[level], base, cfg)?.remove(0))
}

/// Boundaries, near-boundary flags and edge gap searches for cells that
/// were already computed (`cells[k][m]` is level `levels[m]` at cell `k`).
pub fn assemble_phase_diagrams<T: Real>(
    g_axis: &AxisRange<T>,
    lambda_axis: &AxisRange<T>,
    levels: &[usize],
    base: &ModelParams<T>,
    cells: Vec<Vec<ScanRecord<T>>>,
    cfg: &ScanConfig<T>,
) -> Result<Vec<PhaseDiagram<T>>, Error> {
    validate_diagram(g_axis, lambda_axis, levels, base)?;
    let (ng, nl) = (g_axis.n, lambda_axis.n);
    if cells.len() != ng * nl || cells.iter().any(|c| c.len() != levels.len()) {
        return Err(Error::Sweep("cell records do not match the grid".into()));
    }
    let mut per_level: Vec<Vec<ScanRecord<T>>> = vec![Vec::with_capacity(ng * nl); levels.len()];
    for cell in cells {
        for (m, r) in cell.into_iter().enumerate() {
            per_level[m].push(r);
        }
    }

    let mut diagrams: Vec<PhaseDiagram<T>> = Vec::with_capacity(levels.len());
    for (m, records) in per_level.into_iter().enumerate() {
        let mut boundaries = Vec::new();
        for il in 0..nl {
            for ig in 0..ng {
                let here = &records[il * ng + ig];
                let mut neighbours = Vec::with_capacity(2);
                if ig + 1 < ng {
                    neighbours.push((ig + 1, il));
                }
                if il + 1 < nl {
                    neighbours.push((ig, il + 1));
                }
                for (jg, jl) in neighbours {
                    let c = changes(here, &records[jl * ng + jg]);
                    if !c.is_empty() {
                        boundaries.push(Boundary {
                            a: (ig, il),
                            b: (jg, jl),
                            changes: c,
                            min_gap: None,
                            gap_closes: None,
                        });
                    }
                }
            }
        }
        diagrams.push(PhaseDiagram {
            level: levels[m],
            g_axis: *g_axis,
            lambda_axis: *lambda_axis,
            records,
            boundaries,
        });
    }

    if cfg.topology && cfg.near_boundary_check {
        flag_near_boundary(&mut diagrams, levels, base, cfg);
    }
    if cfg.boundary_gaps {
        for d in &mut diagrams {
            search_edge_gaps(d, base, cfg);
        }
    }
    Ok(diagrams)
}

fn counters<T: Real>(t: &TopoSummary<T>) -> (usize, i64, f64, usize, usize) {
    (t.n_z, t.n_w, t.n_w_alg, t.n_ex, t.n_dk)
}

/// Cells touching a boundary are recomputed with a grid of 2n-1 points and
/// with 40 more Fock states; any counter change marks them near-boundary.
fn flag_near_boundary<T: Real>(diagrams: &mut [PhaseDiagram<T>], levels: &[usize], base: &ModelParams<T>, cfg: &ScanConfig<T>) {
    let Some(first) = diagrams.first() else { return };
    let ng = first.g_axis.n;
    let mut touched: BTreeSet<usize> = BTreeSet::new();
    for d in diagrams.iter() {
        for b in &d.boundaries {
            touched.insert(b.a.1 * ng + b.a.0);
            touched.insert(b.b.1 * ng + b.b.0);
        }
    }
    let cells: Vec<usize> = touched.into_iter().collect();
    let mut fine = *cfg;
    fine.pipeline.grid_points = 2 * cfg.pipeline.grid_points - 1;
    fine.near_boundary_check = false;
    let deeper = base.with_truncation(base.n_cut + 40, base.n_levels);
    let flags: Vec<Vec<bool>> = with_workers(cfg.workers, || {
        cells
            .par_iter()
            .map(|&k| {
                let r0 = &diagrams[0].records[k];
                let (g, l) = (r0.g, r0.lambda);
                let a = evaluate_cell(&base.with_g(g).with_lambda(l), levels, &fine);
                let b = evaluate_cell(&deeper.with_g(g).with_lambda(l), levels, cfg);
                (0..levels.len())
                    .map(|m| {
                        let own = diagrams[m].records[k].topo.as_ref().map(counters);
                        let fa = a[m].topo.as_ref().map(counters);
                        let fb = b[m].topo.as_ref().map(counters);
                        own.is_none() || own != fa || own != fb
                    })
                    .collect()
            })
            .collect()
    });
    for (&k, f) in cells.iter().zip(flags) {
        for (m, flag) in f.into_iter().enumerate() {
            let own_edge = diagrams[m]
                .boundaries
                .iter()
                .any(|b| b.a.1 * ng + b.a.0 == k || b.b.1 * ng + b.b.0 == k);
            diagrams[m].records[k].near_boundary = flag && own_edge;
        }
    }
}

/// Smaller of Δ+ and Δ- of level `j_e` from energies only.
pub fn min_gap_at<T: Real>(params: &ModelParams<T>, j_e: usize) -> Option<T> {
    let e = merged_energies(params, j_e + 1).ok()?;
    let up = e.get(j_e)?.0 - e.get(j_e - 1)?.0;
    Some(match j_e.checked_sub(2).and_then(|k| e.get(k)) {
        Some(below) => up.min(e[j_e - 1].0 - below.0),
        None => up,
    })
}

/// Smallest Δ± of the tracked level along each boundary edge.
fn search_edge_gaps<T: Real>(d: &mut PhaseDiagram<T>, base: &ModelParams<T>, cfg: &ScanConfig<T>) {
    let j = d.level;
    let g_axis = d.g_axis;
    let l_axis = d.lambda_axis;
    let edges: Vec<((usize, usize), (usize, usize))> = d.boundaries.iter().map(|b| (b.a, b.b)).collect();
    let results: Vec<Option<T>> = with_workers(cfg.workers, || {
        edges
            .par_iter()
            .map(|&(a, b)| {
                let pa = (g_axis.value(a.0), l_axis.value(a.1));
                let pb = (g_axis.value(b.0), l_axis.value(b.1));
                let at = |s: T| base.with_g(pa.0 + s * (pb.0 - pa.0)).with_lambda(pa.1 + s * (pb.1 - pa.1));
                // Coarse samples pick the basin, golden section refines it.
                let samples = 9;
                let vals: Vec<T> = (0..samples)
                    .map(|i| min_gap_at(&at(from_usize::<T>(i) / from_usize(samples - 1)), j).unwrap_or(T::infinity()))
                    .collect();
                let k = (0..samples)
                    .min_by(|&x, &y| vals[x].partial_cmp(&vals[y]).unwrap_or(std::cmp::Ordering::Equal))
                    .unwrap_or(0);
                if !vals[k].is_finite() {
                    return None;
                }
                let lo = from_usize::<T>(k.saturating_sub(1)) / from_usize(samples - 1);
                let hi = from_usize::<T>((k + 1).min(samples - 1)) / from_usize(samples - 1);
                let (_, v) = golden_min(lo, hi, lit(1e-10), |s| min_gap_at(&at(s), j));
                Some(v.min(vals[k]))
            })
            .collect()
    });
    for (b, gap) in d.boundaries.iter_mut().zip(results) {
        b.min_gap = gap;
        b.gap_closes = gap.map(|v| v < cfg.gap_zero_tol);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_range_endpoints_are_exact() {
        let r = AxisRange::new(0.0f64, 4.0, 400);
        let v = r.values();
        assert_eq!(v.len(), 400);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[399], 4.0);
        assert!(AxisRange::new(1.0f64, 1.0, 4).validate().is_err());
        assert!(AxisRange::new(0.0f64, 1.0, 1).validate().is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (t, v) = golden_min(-1.0f64, 2.0, 1e-12, |x| Some((x - 0.3) * (x - 0.3) + 1.0));
        assert!((t - 0.3).abs() < 1e-6);
        assert!((v - 1.0).abs() < 1e-12);
        let (t, _) = golden_min(0.0f64, 1.0, 1e-13, |x| Some((x - 0.7).abs()));
        assert!((t - 0.7).abs() < 1e-11);
    }

    #[test]
    fn sweep_axis_parsing() {
        assert_eq!("g".parse::<SweepAxis>().unwrap(), SweepAxis::G);
        assert_eq!("lambda".parse::<SweepAxis>().unwrap(), SweepAxis::Lambda);
        assert!("omega".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn sweep_is_deterministic() {
        let base = ModelParams::<f64>::new(0.5, 0.0, 0.3).with_truncation(40, 6);
        let spec = SweepSpec {
            axis: SweepAxis::G,
            range: AxisRange::new(0.0, 0.8, 6),
            level: 2,
            base,
        };
        let mut cfg = ScanConfig::default();
        cfg.pipeline.grid_points = 801;
        let a = sweep_line(&spec, &cfg).unwrap();
        let b = sweep_line(&spec, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
        assert!(a.iter().skip(1).all(|r| r.topo.is_some()));
    }

    #[test]
    fn rejects_small_diagrams() {
        let base = ModelParams::<f64>::new(0.5, 0.0, 0.0);
        let g = AxisRange::new(0.0, 1.0, 4);
        let l = AxisRange::new(0.0, 1.0, 8);
        assert!(phase_diagram(&g, &l, 1, &base, &ScanConfig::default()).is_err());
    }
}
