//! Anisotropic Rabi Hamiltonian in a parity-adapted truncated Fock basis.
//!
//! The model is
//!
//! ```text
//! H = ω a†a + (Ω/2) σx + g [ (σ̃₋ a† + σ̃₊ a) + λ (σ̃₊ a† + σ̃₋ a) ],   σ̃± = (σz ∓ iσy)/2
//! ```
//!
//! In the σx eigenbasis {|⇑⟩, |⇓⟩} the operators σ̃₊ = |⇑⟩⟨⇓| and
//! σ̃₋ = |⇓⟩⟨⇑| become true ladder operators, and the parity
//! P = σx (-1)^{a†a} pins the spin of every Fock state inside a block:
//! block P contains exactly one state |n, s_n⟩ per photon number with
//! s_n = P (-1)^n. Each block is therefore a real symmetric tridiagonal
//! matrix of dimension `n_cut + 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{diagonalize_tridiagonal, tridiagonal_eigenvalues, Matrix, SolverError};
use crate::scalar::{from_usize, lit, Real};

/// Smallest accepted Fock truncation.
pub const MIN_N_CUT: usize = 8;
pub const DEFAULT_N_CUT: usize = 120;
pub const DEFAULT_N_LEVELS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("omega must be positive and finite (got {0})")]
    BadOmega(f64),
    #[error("level splitting Omega must be positive and finite (got {0})")]
    BadSplitting(f64),
    #[error("coupling g must be non-negative and finite (got {0})")]
    BadCoupling(f64),
    #[error("anisotropy lambda must be finite and >= 0 for a direct solve (got {0}); map negative values through dual_params")]
    BadLambda(f64),
    #[error("n_cut = {0} is too small: the Fock truncation requires n_cut >= 8")]
    NCutTooSmall(usize),
    #[error("n_levels = {n_levels} must satisfy 1 <= n_levels <= n_cut/2 = {max}")]
    BadLevelCount { n_levels: usize, max: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Conserved Z2 quantum number of σx (-1)^{a†a}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Parity {
    Negative,
    Positive,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Positive, Parity::Negative];

    #[inline]
    pub fn sign(self) -> i8 {
        match self {
            Parity::Positive => 1,
            Parity::Negative => -1,
        }
    }

    #[inline]
    pub fn value<T: Real>(self) -> T {
        match self {
            Parity::Positive => T::one(),
            Parity::Negative => -T::one(),
        }
    }

    /// σx eigenvalue (+1 for ⇑, -1 for ⇓) carried by Fock state `n` inside this block.
    #[inline]
    pub fn spin_of(self, n: usize) -> i8 {
        if n % 2 == 0 {
            self.sign()
        } else {
            -self.sign()
        }
    }
}

impl From<Parity> for i8 {
    fn from(p: Parity) -> i8 {
        p.sign()
    }
}

impl TryFrom<i8> for Parity {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Parity::Positive),
            -1 => Ok(Parity::Negative),
            _ => Err(format!("parity must be +1 or -1, got {v}")),
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Parity::Positive => f.write_str("+1"),
            Parity::Negative => f.write_str("-1"),
        }
    }
}

/// Physical and truncation parameters. Energies are in units of `big_omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Bosonic frequency ω.
    pub omega: T,
    /// Level splitting Ω.
    pub big_omega: T,
    /// Total coupling strength g.
    pub g: T,
    /// Ratio λ of counter-rotating to rotating coupling.
    pub lambda: T,
    /// Highest retained photon number; each parity block has `n_cut + 1` states.
    pub n_cut: usize,
    /// Number of merged levels kept in a [`Spectrum`].
    pub n_levels: usize,
    /// Set when the parameters came through [`dual_params`]: spin-texture
    /// axes then read as the ⟨σy⟩-⟨σx⟩ plane in momentum space.
    #[serde(default)]
    pub dual: bool,
}

impl<T: Real> ModelParams<T> {
    /// Parameters at ω, Ω = 1, g, λ with default truncation.
    pub fn new(omega: T, g: T, lambda: T) -> Self {
        Self {
            omega,
            big_omega: T::one(),
            g,
            lambda,
            n_cut: DEFAULT_N_CUT,
            n_levels: DEFAULT_N_LEVELS,
            dual: false,
        }
    }

    /// Same as [`ModelParams::new`] but with `g` given in units of
    /// [`critical_coupling`].
    pub fn with_g_in_gs(omega: T, g_over_gs: T, lambda: T) -> Self {
        let mut p = Self::new(omega, T::zero(), lambda);
        p.g = g_over_gs * critical_coupling(&p);
        p
    }

    pub fn with_truncation(mut self, n_cut: usize, n_levels: usize) -> Self {
        self.n_cut = n_cut;
        self.n_levels = n_levels;
        self
    }

    pub fn with_g(mut self, g: T) -> Self {
        self.g = g;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    /// Coupling in units of [`critical_coupling`].
    pub fn g_over_gs(&self) -> T {
        self.g / critical_coupling(self)
    }

    /// Checks every invariant needed for a direct solve.
    pub fn validate(&self) -> Result<(), ModelError> {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        if !(self.omega > T::zero() && self.omega.is_finite()) {
            return Err(ModelError::BadOmega(f(self.omega)));
        }
        if !(self.big_omega > T::zero() && self.big_omega.is_finite()) {
            return Err(ModelError::BadSplitting(f(self.big_omega)));
        }
        if !(self.g >= T::zero() && self.g.is_finite()) {
            return Err(ModelError::BadCoupling(f(self.g)));
        }
        if !(self.lambda >= T::zero() && self.lambda.is_finite()) {
            return Err(ModelError::BadLambda(f(self.lambda)));
        }
        if self.n_cut < MIN_N_CUT {
            return Err(ModelError::NCutTooSmall(self.n_cut));
        }
        if self.n_levels == 0 || self.n_levels > self.n_cut / 2 {
            return Err(ModelError::BadLevelCount {
                n_levels: self.n_levels,
                max: self.n_cut / 2,
            });
        }
        Ok(())
    }
}

/// Coupling unit g_s = sqrt(ωΩ)/2 used for the g axes of phase diagrams.
pub fn critical_coupling<T: Real>(params: &ModelParams<T>) -> T {
    (params.omega * params.big_omega).sqrt() / lit(2.0)
}

/// Maps λ < 0 onto the equivalent λ > 0 problem under the x-p duality.
///
/// The numerical pipeline is unchanged; the `dual` marker records that the
/// spin-texture axes must be relabeled. The map is an involution and leaves
/// λ = 0 untouched.
pub fn dual_params<T: Real>(params: &ModelParams<T>) -> ModelParams<T> {
    let mut out = *params;
    if params.lambda != T::zero() {
        out.lambda = -params.lambda;
        out.dual = !params.dual;
    }
    out
}

/// Diagonal and off-diagonal of the tridiagonal parity block.
///
/// `off[n]` couples |n, s_n⟩ and |n+1, -s_n⟩.
pub fn block_tridiagonal<T: Real>(params: &ModelParams<T>, parity: Parity) -> (Vec<T>, Vec<T>) {
    let dim = params.n_cut + 1;
    let half_split = params.big_omega / lit(2.0);
    let diag = (0..dim)
        .map(|n| {
            let s: T = if parity.spin_of(n) > 0 { T::one() } else { -T::one() };
            params.omega * from_usize(n) + half_split * s
        })
        .collect();
    let off = (0..dim - 1)
        .map(|n| {
            // |⇑,n⟩ → |⇓,n+1⟩ through the rotating term σ̃₋a†,
            // |⇓,n⟩ → |⇑,n+1⟩ through the counter-rotating term λσ̃₊a†.
            let weight = if parity.spin_of(n) > 0 { T::one() } else { params.lambda };
            params.g * weight * from_usize::<T>(n + 1).sqrt()
        })
        .collect();
    (diag, off)
}

/// Dense `(n_cut+1) x (n_cut+1)` matrix of H restricted to one parity block.
pub fn build_block<T: Real>(params: &ModelParams<T>, parity: Parity) -> Result<Matrix<T>, ModelError> {
    if params.n_cut < MIN_N_CUT {
        return Err(ModelError::NCutTooSmall(params.n_cut));
    }
    let (diag, off) = block_tridiagonal(params, parity);
    let mut m = Matrix::from_diagonal(&diag);
    for (n, &v) in off.iter().enumerate() {
        m.set_symmetric(n, n + 1, v);
    }
    Ok(m)
}

/// One eigenpair of the full Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenLevel<T> {
    /// 1-based index in the energy-ordered merged spectrum.
    pub j_e: usize,
    pub energy: T,
    pub parity: Parity,
    /// Amplitudes on the block basis |n, s_n⟩, n = 0..=n_cut.
    pub coeffs: Vec<T>,
    pub block_dim: usize,
}

/// Upper and lower gaps of a level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaps<T> {
    /// E(j+1) - E(j).
    pub delta_plus: T,
    /// E(j) - E(j-1); absent for the ground state.
    pub delta_minus: Option<T>,
}

/// Energy-ordered levels of both parity blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum<T> {
    pub params: ModelParams<T>,
    pub levels: Vec<EigenLevel<T>>,
    pub gaps: Vec<Gaps<T>>,
}

impl<T: Real> Spectrum<T> {
    /// Level by 1-based index.
    pub fn level(&self, j_e: usize) -> Option<&EigenLevel<T>> {
        j_e.checked_sub(1).and_then(|i| self.levels.get(i))
    }

    pub fn gaps_of(&self, j_e: usize) -> Option<&Gaps<T>> {
        j_e.checked_sub(1).and_then(|i| self.gaps.get(i))
    }

    pub fn energies(&self) -> Vec<T> {
        self.levels.iter().map(|l| l.energy).collect()
    }
}

/// Largest-magnitude coefficient made positive; ties go to the lowest index.
pub(crate) fn fix_sign<T: Real>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < T::zero()) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Diagonalizes both parity blocks and merges them into one spectrum.
pub fn solve_spectrum<T: Real>(params: &ModelParams<T>) -> Result<Spectrum<T>, ModelError> {
    params.validate()?;
    let dim = params.n_cut + 1;
    // One extra level so the last retained level still has an upper gap.
    let k = (params.n_levels + 1).min(dim);

    let mut merged: Vec<(T, Parity, Vec<T>)> = Vec::with_capacity(2 * k);
    for parity in Parity::BOTH {
        let (diag, off) = block_tridiagonal(params, parity);
        for pair in diagonalize_tridiagonal(&diag, &off, k)? {
            merged.push((pair.value, parity, pair.vector));
        }
    }
    // Exact ties (level crossings) resolve positive parity first.
    merged.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(b.1.cmp(&a.1))
    });

    let energies: Vec<T> = merged.iter().map(|m| m.0).collect();
    let levels: Vec<EigenLevel<T>> = merged
        .into_iter()
        .take(params.n_levels)
        .enumerate()
        .map(|(i, (energy, parity, mut coeffs))| {
            fix_sign(&mut coeffs);
            EigenLevel {
                j_e: i + 1,
                energy,
                parity,
                coeffs,
                block_dim: dim,
            }
        })
        .collect();
    let gaps = (0..levels.len())
        .map(|i| Gaps {
            delta_plus: energies[i + 1] - energies[i],
            delta_minus: (i > 0).then(|| energies[i] - energies[i - 1]),
        })
        .collect();
    Ok(Spectrum {
        params: *params,
        levels,
        gaps,
    })
}

/// Lowest `count` merged energies with their parities, without eigenvectors.
pub fn merged_energies<T: Real>(params: &ModelParams<T>, count: usize) -> Result<Vec<(T, Parity)>, ModelError> {
    params.validate()?;
    let mut merged = Vec::with_capacity(2 * (params.n_cut + 1));
    for parity in Parity::BOTH {
        let (diag, off) = block_tridiagonal(params, parity);
        merged.extend(tridiagonal_eigenvalues(&diag, &off)?.into_iter().map(|e| (e, parity)));
    }
    merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(b.1.cmp(&a.1)));
    merged.truncate(count);
    Ok(merged)
}

/// Branch of a Jaynes-Cummings doublet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// Closed-form λ = 0 energies: -Ω/2 for n = 0, otherwise
/// (n - 1/2)ω ± sqrt((Ω - ω)²/4 + g²n). `lambda` is ignored.
pub fn jcm_energy<T: Real>(params: &ModelParams<T>, n: usize, branch: Branch) -> T {
    let half = lit::<T>(0.5);
    if n == 0 {
        return -params.big_omega * half;
    }
    let nn = from_usize::<T>(n);
    let detuning = params.big_omega - params.omega;
    let root = (detuning * detuning / lit(4.0) + params.g * params.g * nn).sqrt();
    let center = (nn - half) * params.omega;
    match branch {
        Branch::Plus => center + root,
        Branch::Minus => center - root,
    }
}

/// The lowest `count` closed-form λ = 0 energies, ascending.
pub fn jcm_levels<T: Real>(params: &ModelParams<T>, count: usize) -> Vec<T> {
    // Enough manifolds to cover `count` levels: manifold n sits near (n - 1/2)ω.
    let mut out = vec![jcm_energy(params, 0, Branch::Minus)];
    let mut n = 1;
    loop {
        out.push(jcm_energy(params, n, Branch::Minus));
        out.push(jcm_energy(params, n, Branch::Plus));
        let lowest_next = jcm_energy(params, n + 1, Branch::Minus);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if out.len() >= count && lowest_next >= out[count - 1] {
            // Every later manifold lies above the current count-th level only
            // once its lower branch does; lower branches decrease with g, so
            // keep adding until that holds for a safety margin of manifolds.
            let margin_ok = (n + 1..n + 40).all(|m| jcm_energy(params, m, Branch::Minus) >= out[count - 1]);
            if margin_ok {
                break;
            }
        }
        n += 1;
    }
    out.truncate(count);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g_gs: f64, lambda: f64) -> ModelParams<f64> {
        ModelParams::with_g_in_gs(0.5, g_gs, lambda)
    }

    #[test]
    fn critical_coupling_examples() {
        let p = ModelParams::<f64>::new(0.5, 0.0, 0.0);
        assert!((critical_coupling(&p) - 0.353_553_390_593_273_8).abs() < 1e-12);
        let p = ModelParams::new(1.0, 0.0, 0.0);
        assert_eq!(critical_coupling(&p), 0.5);
        let mut p = ModelParams::new(2.0, 0.0, 0.0);
        p.big_omega = 0.5;
        assert_eq!(critical_coupling(&p), 0.5);
    }

    #[test]
    fn uncoupled_block_is_diagonal() {
        let p = params(0.0, 0.7).with_truncation(10, 4);
        for parity in Parity::BOTH {
            let m = build_block(&p, parity).unwrap();
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    if i != j {
                        assert_eq!(m[(i, j)], 0.0);
                    }
                }
                let s = parity.spin_of(i) as f64;
                assert_eq!(m[(i, i)], 0.5 * i as f64 + 0.5 * s);
            }
        }
    }

    #[test]
    fn block_is_exactly_symmetric() {
        let p = params(1.3, 0.4);
        for parity in Parity::BOTH {
            let m = build_block(&p, parity).unwrap();
            assert!(m.is_symmetric());
            assert_eq!(m.dim(), p.n_cut + 1);
        }
    }

    #[test]
    fn rejects_small_truncation() {
        let p = params(1.0, 0.2).with_truncation(4, 2);
        assert_eq!(build_block(&p, Parity::Positive), Err(ModelError::NCutTooSmall(4)));
        let msg = solve_spectrum(&p).unwrap_err().to_string();
        assert!(msg.contains("n_cut >= 8"), "{msg}");
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(params(1.0, -0.1).validate(), Err(ModelError::BadLambda(_))));
        let mut p = params(1.0, 0.1);
        p.omega = 0.0;
        assert!(matches!(p.validate(), Err(ModelError::BadOmega(_))));
        let p = params(1.0, 0.1).with_truncation(20, 11);
        assert!(matches!(p.validate(), Err(ModelError::BadLevelCount { .. })));
        let p = params(1.0, 0.1).with_truncation(20, 0);
        assert!(matches!(p.validate(), Err(ModelError::BadLevelCount { .. })));
    }

    #[test]
    fn jcm_examples() {
        let p = ModelParams::<f64>::new(0.5, 0.176_776_7, 0.0);
        assert!((jcm_energy(&p, 1, Branch::Minus) + 0.056_186_2).abs() < 1e-6);
        let p0 = ModelParams::new(0.5, 0.0, 0.3);
        assert_eq!(jcm_energy(&p0, 1, Branch::Plus), 0.5);
        assert_eq!(jcm_energy(&p0, 1, Branch::Minus), 0.0);
        assert_eq!(jcm_energy(&p, 0, Branch::Plus), -0.5);
    }

    #[test]
    fn jcm_ground_state_from_solver() {
        let s = solve_spectrum(&params(0.5, 0.0)).unwrap();
        assert!((s.levels[0].energy + 0.5).abs() < 1e-12);
        assert_eq!(s.levels[0].parity, Parity::Negative);
        let g = 0.5 * critical_coupling(&params(0.0, 0.0));
        let e2 = 0.25 - (0.0625f64 + g * g).sqrt();
        assert!((s.levels[1].energy - e2).abs() < 1e-12);
        assert!((e2 + 0.056_186_2).abs() < 1e-6);
    }

    #[test]
    fn dual_params_is_involution() {
        let p = params(1.0, -0.5);
        let d = dual_params(&p);
        assert_eq!(d.lambda, 0.5);
        assert!(d.dual);
        assert_eq!(dual_params(&d), p);
        let z = params(1.0, 0.0);
        assert_eq!(dual_params(&z), z);
        assert!(!dual_params(&z).dual);
    }

    #[test]
    fn gaps_are_consistent() {
        let s = solve_spectrum(&params(2.0, 0.6)).unwrap();
        assert!(s.gaps[0].delta_minus.is_none());
        for j in 0..s.levels.len() - 1 {
            assert_eq!(s.gaps[j].delta_plus, s.gaps[j + 1].delta_minus.unwrap());
            assert!(s.gaps[j].delta_plus >= 0.0);
        }
    }

    #[test]
    fn levels_within_block_strictly_increase() {
        let s = solve_spectrum(&params(2.5, 0.8)).unwrap();
        for parity in Parity::BOTH {
            let e: Vec<f64> = s.levels.iter().filter(|l| l.parity == parity).map(|l| l.energy).collect();
            assert!(e.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn coefficients_normalized_and_sign_fixed() {
        let s = solve_spectrum(&params(3.0, 0.3)).unwrap();
        for l in &s.levels {
            let norm: f64 = l.coeffs.iter().map(|c| c * c).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let big = l.coeffs.iter().cloned().fold(0.0f64, |a, c| if c.abs() > a.abs() { c } else { a });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn energies_only_path_matches() {
        let p = params(2.0, 0.7);
        let s = solve_spectrum(&p).unwrap();
        let e = merged_energies(&p, p.n_levels).unwrap();
        for (l, (en, par)) in s.levels.iter().zip(&e) {
            assert!((l.energy - en).abs() < 1e-12);
            assert_eq!(l.parity, *par);
        }
    }

    #[test]
    fn single_precision_jcm() {
        let p = ModelParams::<f32>::with_g_in_gs(0.5, 1.0, 0.0).with_truncation(40, 6);
        let s = solve_spectrum(&p).unwrap();
        let exact = jcm_levels(&p, 6);
        for (l, e) in s.levels.iter().zip(&exact) {
            assert!((l.energy - e).abs() < 1e-4, "{} vs {}", l.energy, e);
        }
    }
}
