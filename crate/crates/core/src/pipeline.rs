//! Spectrum → real space → topology for one parameter point.

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{solve_spectrum, ModelParams, Spectrum};
use crate::realspace::{hermite_basis, to_position_with, Grid, DEFAULT_GRID_POINTS};
use crate::topology::{analyze, TopoAnalysis, TopoConfig};
use crate::{Error, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig<T> {
    /// Odd number of grid points; the half-width follows from the parameters.
    pub grid_points: usize,
    pub topo: TopoConfig<T>,
}

impl<T: Real> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            topo: TopoConfig::default(),
        }
    }
}

/// Analyzes several levels of one spectrum on a shared grid and basis.
pub fn analyze_levels<T: Real>(
    spectrum: &Spectrum<T>,
    levels: &[usize],
    cfg: &PipelineConfig<T>,
) -> Result<Vec<Result<TopoAnalysis<T>, Error>>, Error> {
    let grid = Grid::for_params(&spectrum.params, cfg.grid_points)?;
    let table = hermite_basis(&grid, spectrum.params.n_cut)?;
    Ok(levels
        .iter()
        .map(|&j| {
            let level = spectrum.level(j).ok_or(Error::LevelOutOfRange {
                j_e: j,
                n_levels: spectrum.levels.len(),
            })?;
            let state = to_position_with(level, &grid, &table)?;
            Ok(analyze(level, &state, &cfg.topo)?)
        })
        .collect())
}

/// Solves the model and analyzes level `j_e`.
pub fn analyze_point<T: Real>(params: &ModelParams<T>, j_e: usize, cfg: &PipelineConfig<T>) -> Result<TopoAnalysis<T>, Error> {
    let spectrum = solve_spectrum(params)?;
    analyze_levels(&spectrum, &[j_e], cfg)?
        .pop()
        .unwrap_or(Err(Error::LevelOutOfRange { j_e, n_levels: 0 }))
}
