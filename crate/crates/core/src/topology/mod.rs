//! Zeros, windings, knots and code strings of a single state.

pub mod code;
pub mod knots;
pub mod sections;
pub mod winding;
pub mod zeros;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{EigenLevel, Parity};
use crate::realspace::{spin_texture, RealSpaceState, SpinTexture};
use crate::scalar::{lit, Real};

pub use code::{encode_topology, normalize_code, winding_from_code, CodeCounters, CodeError, TopoCode};
pub use knots::{diagonal_knots, DiagonalKnot, KnotReport};
pub use sections::{knot_counters, merge_zeros, sort_nodes, winding_algebraic, NodeSections, Section};
pub use winding::{build_trajectory, winding_integral, Trajectory, TrajectoryPoint, Winding};
pub use zeros::{boundary_sign, find_sigma_x_zeros, find_sigma_z_zeros, resolved_mask, support, Axis, AxisZero};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopoError {
    #[error("unpaired s_x zero: {detail}")]
    Unpaired { detail: String },
    #[error("degenerate spin texture: s_z vanishes identically")]
    DegenerateTexture,
    #[error("negative anti-winding count: n_Z = {n_z}, n_w = {n_w}")]
    NegativeAntiWinding { n_z: usize, n_w: i64 },
}

/// Tolerances of the zero, winding and knot analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopoConfig<T> {
    /// Relative lobe height below which zeros count as tail noise.
    pub eps_tail: T,
    /// Axis exclusion band for diagonal knots, relative to the largest radius.
    pub tol_axis: T,
    /// Crossings flatter than this (degrees) are flagged uncertain.
    pub angle_tol_deg: T,
    /// Bracket width at which zero bisection stops.
    pub refine_tol: T,
    /// Allowed mismatch between a node and its mirror partner.
    pub pairing_tol: T,
    /// Largest turning angle between consecutive trajectory samples.
    pub max_turn: T,
    /// Recursion limit for trajectory subdivision.
    pub max_depth: usize,
}

impl<T: Real> Default for TopoConfig<T> {
    fn default() -> Self {
        Self {
            eps_tail: lit(1e-6),
            tol_axis: lit(1e-3),
            angle_tol_deg: T::one(),
            refine_tol: lit::<T>(1e-12).max(T::epsilon() * lit(16.0)),
            pairing_tol: lit::<T>(1e-8).max(T::epsilon().sqrt()),
            max_turn: T::FRAC_PI_4(),
            max_depth: 40,
        }
    }
}

/// All counters of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoSummary<T> {
    pub j_e: usize,
    pub energy: T,
    pub parity: Parity,
    /// Node pairs.
    pub n_z: usize,
    /// Open-curve winding, in turns.
    pub n_zx: T,
    /// Integer winding with the ends joined.
    pub n_w: i64,
    /// Winding from the zero sequence; half-integers mark inconsistency.
    pub n_w_alg: f64,
    pub n_aw: usize,
    pub n_ex: usize,
    pub n_dk: usize,
    pub code: String,
    pub degenerate: bool,
    pub knot_uncertain: bool,
}

impl<T: Real> TopoSummary<T> {
    pub fn windings_agree(&self) -> bool {
        self.n_w as f64 == self.n_w_alg
    }

    /// The integer counters (n_Z, n_w, n_ex, n_DK).
    pub fn tuple(&self) -> (usize, i64, usize, usize) {
        (self.n_z, self.n_w, self.n_ex, self.n_dk)
    }
}

/// Full analysis, keeping the intermediate objects for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoAnalysis<T> {
    pub summary: TopoSummary<T>,
    pub texture: SpinTexture<T>,
    pub trajectory: Trajectory<T>,
    pub x_zeros: Vec<AxisZero<T>>,
    pub z_zeros: Vec<AxisZero<T>>,
    pub boundary_sign: i8,
    pub sections: NodeSections,
    pub knots: Vec<DiagonalKnot<T>>,
    pub winding: Winding<T>,
}

/// Runs the whole pipeline on a sampled level.
pub fn analyze<T: Real>(
    level: &EigenLevel<T>,
    state: &RealSpaceState<T>,
    cfg: &TopoConfig<T>,
) -> Result<TopoAnalysis<T>, TopoError> {
    let texture = spin_texture(state);
    let x_zeros = find_sigma_x_zeros(state, &texture, cfg)?;
    let n_z = x_zeros.len() / 2;
    let edge = boundary_sign(&texture, cfg);

    let (z_zeros, degenerate) = match find_sigma_z_zeros(state, &texture, cfg) {
        Ok(z) => (z, false),
        Err(TopoError::DegenerateTexture) => (Vec::new(), true),
        Err(e) => return Err(e),
    };
    let merged = merge_zeros(&x_zeros, &z_zeros);
    let (winding, trajectory) = winding::texture_winding(&state.series, &texture, &merged, cfg);
    let merged = merge_zeros(&merged, &trajectory.bridge_zeros);
    let marks: Vec<sections::Mark> = merged.iter().map(sections::Mark::from).collect();
    let sections = sections::sections_from_marks(&marks, edge);

    let (knots, knot_uncertain, n_w_alg, n_ex) = if degenerate {
        (Vec::new(), false, 0.0, 0)
    } else {
        let report = diagonal_knots(&trajectory, cfg);
        let n_ex = sections::extra_zeros(&sections);
        (report.knots, report.uncertain, winding_algebraic(&sections), n_ex)
    };
    let n_aw = if degenerate {
        n_z
    } else {
        knot_counters(&sections, n_z, winding.n_w)?.0
    };
    let code = encode_topology(&merged, &knots, edge).to_string();

    let summary = TopoSummary {
        j_e: level.j_e,
        energy: level.energy,
        parity: level.parity,
        n_z,
        n_zx: winding.n_zx,
        n_w: winding.n_w,
        n_w_alg,
        n_aw,
        n_ex,
        n_dk: knots.len(),
        code,
        degenerate,
        knot_uncertain,
    };
    Ok(TopoAnalysis {
        summary,
        texture,
        trajectory,
        x_zeros,
        z_zeros,
        boundary_sign: edge,
        sections,
        knots,
        winding,
    })
}
