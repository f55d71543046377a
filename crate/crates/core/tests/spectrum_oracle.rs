//! Parity-block spectra against a dense full-space Hamiltonian.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rabi_topo::hamiltonian::merged_energies;
use rabi_topo::{build_block, solve_spectrum, ModelParamsF32, ModelParamsF64, Parity};

/// H on |n> (x) |s_z = +,->, truncated at `n_max` photons.
fn full_hamiltonian(p: &ModelParamsF64, n_max: usize) -> DMatrix<f64> {
    let dim = 2 * (n_max + 1);
    let idx = |n: usize, s: usize| 2 * n + s;
    let sp = [[0.5, -0.5], [0.5, -0.5]];
    let sm = [[0.5, 0.5], [-0.5, -0.5]];
    let mut h = DMatrix::zeros(dim, dim);
    for n in 0..=n_max {
        for s in 0..2 {
            h[(idx(n, s), idx(n, s))] += p.omega * n as f64;
            h[(idx(n, s), idx(n, 1 - s))] += 0.5 * p.big_omega;
        }
    }
    for n in 0..n_max {
        let amp = p.g * ((n + 1) as f64).sqrt();
        for s in 0..2 {
            for t in 0..2 {
                h[(idx(n + 1, s), idx(n, t))] += amp * (sm[s][t] + p.lambda * sp[s][t]);
                h[(idx(n, s), idx(n + 1, t))] += amp * (sp[s][t] + p.lambda * sm[s][t]);
            }
        }
    }
    h
}

fn sorted_eigenvalues(h: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

#[test]
fn blocks_reproduce_the_full_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..12 {
        let p = ModelParamsF64::with_g_in_gs(0.5, rng.gen_range(0.0..5.0), rng.gen_range(0.0..3.0)).with_truncation(120, 16);
        let full = sorted_eigenvalues(full_hamiltonian(&p, 160));
        let s = solve_spectrum(&p).unwrap();
        for (l, e) in s.levels.iter().zip(&full) {
            assert!((l.energy - e).abs() <= 1e-9 * e.abs().max(1.0), "{p:?} j={} {} vs {e}", l.j_e, l.energy);
        }
    }
}

#[test]
fn symmetric_hamiltonian_is_hermitian_and_real() {
    let p = ModelParamsF64::new(0.5, 0.8, 1.7);
    let h = full_hamiltonian(&p, 30);
    assert_eq!(h.clone(), h.transpose());
}

#[test]
fn block_matrix_is_the_parity_projection() {
    let p = ModelParamsF64::new(0.5, 0.6, 0.4).with_truncation(40, 8);
    let mut both: Vec<f64> = Vec::new();
    for parity in Parity::BOTH {
        let m = build_block(&p, parity).unwrap();
        let dim = p.n_cut + 1;
        let dense = DMatrix::from_fn(dim, dim, |i, j| m[(i, j)]);
        for i in 0..dim {
            for j in 0..dim {
                if i.abs_diff(j) > 1 {
                    assert_eq!(dense[(i, j)], 0.0);
                }
            }
        }
        both.extend(dense.symmetric_eigen().eigenvalues.iter());
    }
    both.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let full = sorted_eigenvalues(full_hamiltonian(&p, 40));
    for (a, b) in both.iter().zip(&full).take(30) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn low_levels_converge_in_truncation() {
    for (g, l) in [(1.0, 0.2), (3.4, 0.8), (0.4, 2.0), (5.0, 3.0)] {
        let p = ModelParamsF64::with_g_in_gs(0.5, g, l);
        let a = solve_spectrum(&p.with_truncation(120, 12)).unwrap();
        let b = solve_spectrum(&p.with_truncation(160, 12)).unwrap();
        for (i, (x, y)) in a.levels.iter().zip(&b.levels).enumerate() {
            assert!((x.energy - y.energy).abs() < 1e-9, "g={g} lambda={l} j={} diff {:e}", x.j_e, x.energy - y.energy);
            // Order inside a degenerate doublet is arbitrary.
            let isolated = a.gaps[i].delta_plus > 1e-8 && a.gaps[i].delta_minus.map_or(true, |d| d > 1e-8);
            if isolated {
                assert_eq!(x.parity, y.parity);
            }
        }
    }
}

#[test]
fn energies_only_path_agrees() {
    let p = ModelParamsF64::with_g_in_gs(0.5, 2.2, 1.1);
    let s = solve_spectrum(&p).unwrap();
    let e = merged_energies(&p, 10).unwrap();
    for (l, (en, par)) in s.levels.iter().zip(&e) {
        assert!((l.energy - en).abs() < 1e-12);
        assert_eq!(l.parity, *par);
    }
}

#[test]
fn single_precision_tracks_double() {
    let p64 = ModelParamsF64::with_g_in_gs(0.5, 1.5, 0.5).with_truncation(60, 8);
    let p32 = ModelParamsF32::with_g_in_gs(0.5, 1.5, 0.5).with_truncation(60, 8);
    let a = solve_spectrum(&p64).unwrap();
    let b = solve_spectrum(&p32).unwrap();
    for (x, y) in a.levels.iter().zip(&b.levels) {
        assert!((x.energy - y.energy as f64).abs() < 1e-4, "j={}", x.j_e);
        assert_eq!(x.parity, y.parity);
    }
}
