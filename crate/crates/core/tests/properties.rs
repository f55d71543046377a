use proptest::prelude::*;

use rabi_topo::hamiltonian::block_tridiagonal;
use rabi_topo::realspace::amplify;
use rabi_topo::topology::{winding_from_code, CodeError, TopoCode};
use rabi_topo::*;

fn code_digits() -> impl Strategy<Value = (Vec<u8>, u8)> {
    (prop::collection::vec(1u8..=5, 0..40), prop_oneof![Just(2u8), Just(4u8)])
}

fn small_pipeline() -> PipelineConfigF64 {
    PipelineConfigF64 {
        grid_points: 1201,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn code_strings_round_trip((digits, boundary) in code_digits(), gaps in prop::collection::vec(0usize..3, 41)) {
        let code = TopoCode { digits: digits.clone(), boundary };
        let text = code.to_string();
        prop_assert_eq!(text.parse::<TopoCode>().unwrap(), code.clone());
        let mut spaced = String::new();
        for (c, k) in text.chars().zip(&gaps) {
            spaced.extend(std::iter::repeat(' ').take(*k));
            spaced.push(c);
        }
        prop_assert_eq!(spaced.parse::<TopoCode>().unwrap(), code);
    }

    #[test]
    fn code_counters_count_digits((digits, boundary) in code_digits()) {
        let text = TopoCode { digits: digits.clone(), boundary }.to_string();
        let nodes = digits.iter().filter(|&&d| d == 1 || d == 3).count();
        match winding_from_code(&text) {
            Ok(c) => {
                prop_assert_eq!(nodes % 2, 0);
                prop_assert_eq!(c.n_z, nodes / 2);
                prop_assert_eq!(c.n_dk, digits.iter().filter(|&&d| d == 5).count());
                prop_assert!((2.0 * c.n_w).fract() == 0.0);
            }
            Err(e) => prop_assert_eq!(e, CodeError::OddNodeCount(nodes)),
        }
    }

    #[test]
    fn duality_is_an_involution(omega in 0.05f64..3.0, g in 0.0f64..3.0, lambda in -4.0f64..4.0) {
        let p = ModelParamsF64::new(omega, g, lambda);
        let d = dual_params(&p);
        prop_assert_eq!(dual_params(&d), p);
        prop_assert_eq!(d.lambda, -p.lambda);
        prop_assert_eq!(d.dual, lambda != 0.0);
        prop_assert_eq!((d.omega, d.g, d.n_cut), (p.omega, p.g, p.n_cut));
    }

    #[test]
    fn block_matrix_matches_its_bands(g in 0.0f64..2.0, lambda in 0.0f64..3.0, n_cut in 8usize..40) {
        let p = ModelParamsF64::new(0.5, g, lambda).with_truncation(n_cut, 4);
        for parity in Parity::BOTH {
            let m = build_block(&p, parity).unwrap();
            let (diag, off) = block_tridiagonal(&p, parity);
            for i in 0..=n_cut {
                prop_assert_eq!(m[(i, i)], diag[i]);
                for j in 0..=n_cut {
                    prop_assert_eq!(m[(i, j)], m[(j, i)]);
                    let want = if j == i + 1 { off[i] } else if i == j + 1 { off[j] } else if i == j { diag[i] } else { 0.0 };
                    prop_assert_eq!(m[(i, j)], want);
                }
            }
        }
    }

    #[test]
    fn axis_ranges_hit_both_ends(lo in -5.0f64..5.0, width in 1e-6f64..10.0, n in 2usize..500) {
        let r = AxisRange::new(lo, lo + width, n);
        let v = r.values();
        prop_assert_eq!(v.len(), n);
        prop_assert_eq!(v[0], lo);
        prop_assert_eq!(v[n - 1], lo + width);
        prop_assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn amplification_keeps_sign(v in -10.0f64..10.0, p in 0.1f64..3.0) {
        let a = amplify(v, p);
        prop_assert_eq!(a.signum() == v.signum(), true);
        prop_assert!((a.abs() - v.abs().powf(p)).abs() <= 1e-12 * a.abs().max(1.0));
        prop_assert!((amplify(a, 1.0 / p) - v).abs() <= 1e-9 * v.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gaps_follow_sorted_energies(g in 0.0f64..5.0, lambda in 0.0f64..3.0) {
        let s = solve_spectrum(&ModelParamsF64::with_g_in_gs(0.5, g, lambda)).unwrap();
        for (i, l) in s.levels.iter().enumerate() {
            prop_assert_eq!(l.j_e, i + 1);
            let gaps = &s.gaps[i];
            prop_assert!(gaps.delta_plus >= 0.0);
            if i > 0 {
                prop_assert_eq!(gaps.delta_minus, Some(l.energy - s.levels[i - 1].energy));
                prop_assert_eq!(s.gaps[i - 1].delta_plus, l.energy - s.levels[i - 1].energy);
            } else {
                prop_assert_eq!(gaps.delta_minus, None);
            }
        }
    }

    #[test]
    fn texture_has_parity_symmetry(g in 0.0f64..5.0, lambda in 0.0f64..3.0, j in 1usize..=6) {
        let p = ModelParamsF64::with_g_in_gs(0.5, g, lambda);
        let s = solve_spectrum(&p).unwrap();
        let grid = Grid::for_params(&p, 1201).unwrap();
        let st = to_position(s.level(j).unwrap(), &grid).unwrap();
        let t = spin_texture(&st);
        let n = t.x.len();
        let scale = t.max_radius();
        for i in 0..n {
            let k = n - 1 - i;
            prop_assert_eq!(t.x[i], -t.x[k]);
            prop_assert!((t.s_x[i] - t.s_x[k]).abs() <= 1e-9 * scale);
            prop_assert!((t.s_z[i] + t.s_z[k]).abs() <= 1e-9 * scale);
            prop_assert_eq!(t.s_y[i], 0.0);
        }
    }

    #[test]
    fn summary_agrees_with_its_code(g in 0.0f64..5.0, lambda in 0.0f64..3.0, j in 1usize..=6) {
        let p = ModelParamsF64::with_g_in_gs(0.5, g, lambda);
        let Ok(a) = analyze_point(&p, j, &small_pipeline()) else { return Ok(()) };
        let s = a.summary;
        let c = winding_from_code(&s.code).unwrap();
        prop_assert_eq!(c.n_z, s.n_z);
        prop_assert_eq!(c.n_ex, s.n_ex);
        prop_assert_eq!(c.n_dk, s.n_dk);
        prop_assert_eq!(c.n_w, s.n_w_alg);
        prop_assert_eq!(s.n_aw as i64, s.n_z as i64 - s.n_w.abs());
        prop_assert_eq!(a.x_zeros.len(), 2 * s.n_z);
    }
}
