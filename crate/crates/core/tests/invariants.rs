//! Property checks over randomized parameters.

use bifluxon_core::bloch;
use bifluxon_core::coherence::{self, NoiseParams};
use bifluxon_core::fit::{self, FitTruncation, ModelParams, TransitionPoint};
use bifluxon_core::formats::{self, Document, ParamsFile, PointsFile};
use bifluxon_core::spectra::{self, CircuitParams, FluxoniumEigensystem};
use bifluxon_core::wkb;
use proptest::prelude::*;

fn circuit() -> impl Strategy<Value = CircuitParams> {
    (3.0..9.0f64, 0.8..2.5f64, 0.08..0.4f64, -0.5..0.5f64)
        .prop_map(|(e_j, e_c, e_l, phi)| CircuitParams::new(e_j, e_c, e_l, phi).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_hermitian(cp in circuit()) {
        let h = spectra::build_fluxonium_hamiltonian(&cp, 50).unwrap();
        prop_assert!(spectra::hermitian_deviation(h.entries()) < 1e-12);
    }

    #[test]
    fn levels_decrease_with_basis_size(cp in circuit()) {
        let small = FluxoniumEigensystem::compute(&cp, 40).unwrap().energies;
        let large = FluxoniumEigensystem::compute(&cp, 80).unwrap().energies;
        for k in 0..3 {
            prop_assert!(large[k] <= small[k] + 1e-9, "level {k}: {} > {}", large[k], small[k]);
        }
    }

    #[test]
    fn spectrum_symmetric_under_flux_inversion(cp in circuit()) {
        let phi = cp.phi_ext;
        let t = spectra::flux_sweep(&cp, &[phi, -phi, 1.0 - phi], 4, 60).unwrap();
        for k in 0..4 {
            prop_assert!((t.levels[0][k] - t.levels[1][k]).abs() < 1e-8);
            prop_assert!((t.levels[0][k] - t.levels[2][k]).abs() < 1e-8);
        }
    }

    #[test]
    fn charge_parity_at_sweet_spots(cp in circuit(), half in proptest::bool::ANY) {
        let cp = cp.with_flux(if half { 0.5 } else { 0.0 });
        let sys = FluxoniumEigensystem::compute(&cp, 80).unwrap();
        let n = sys.charge_matrix(5);
        for i in 0..5 {
            for j in 0..5 {
                if (i + j) % 2 == 0 {
                    prop_assert!(n[(i, j)].abs() < 1e-8, "n[{i},{j}] = {}", n[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn bands_even_in_quasicharge(e_j in 2.0..9.0f64, e_c in 0.8..2.5f64) {
        let b = bloch::bloch_bands(e_j, e_c, 41, 2, 20).unwrap();
        let m = b.quasicharge_grid.len();
        for s in 0..3 {
            for i in 0..m {
                prop_assert!((b.bands[s][i] - b.bands[s][m - 1 - i]).abs() < 1e-9);
            }
        }
        for i in 0..m {
            prop_assert!(b.bands[0][i] < b.bands[1][i] && b.bands[1][i] < b.bands[2][i]);
        }
    }

    #[test]
    fn wkb_gaps_grow_as_josephson_drops(e_c in 0.8..2.0f64, ratio in 5.0..12.0f64, e_l in 0.08..0.4f64, scale in 0.6..0.95f64) {
        let cp = CircuitParams::new(ratio * e_c, e_c, e_l, 0.0).unwrap();
        let lower = CircuitParams::new(cp.e_j * scale, cp.e_c, cp.e_l, 0.0).unwrap();
        prop_assert!(wkb::wkb_delta_2pi(&lower).unwrap() > wkb::wkb_delta_2pi(&cp).unwrap());
        prop_assert!(wkb::wkb_delta_4pi(&cp).unwrap() < wkb::wkb_delta_2pi(&cp).unwrap());
    }

    #[test]
    fn renormalized_inductance_below_bare(e_l in 0.05..0.5f64, e_j in 2.0..10.0f64) {
        let r = bloch::renormalized_el(e_l, e_j).unwrap();
        prop_assert!(r < e_l && r > 0.0);
    }

    #[test]
    fn lindblad_keeps_state_physical(up in 10.0..1e4f64, ratio in 0.0..20.0f64) {
        let t: Vec<f64> = (0..50).map(|k| k as f64 * 0.1 / up).collect();
        let d = coherence::qutrit_dephasing(up, up * ratio, &t).unwrap();
        prop_assert!(d.max_trace_drift < 1e-9);
        prop_assert!(d.min_eigenvalue > -1e-9);
        for (x, y) in d.numeric.iter().zip(&d.analytic) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn thermal_population_inverts(n in 1e-6..0.2f64, f in 1.0..10.0f64) {
        let t = coherence::teff_from_nth(n, f).unwrap();
        prop_assert!((coherence::nth_from_teff(t, f).unwrap() / n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn budget_respects_t2_bound(q in 1e4..1e6f64, a in 1e-13..1e-10f64, n_th in 0.0..0.01f64, flux in 0.0..0.5f64) {
        let cp = CircuitParams::new(6.01, 1.59, 0.165, 0.0).unwrap();
        let rp = bifluxon_core::dressed::ResonatorParams::new(6.908, 0.07, 0.0065, 4).unwrap();
        let noise = NoiseParams { q_cap_ref: q, f_ref: 6.0, epsilon: 0.2, t_eff: 0.02, a_phi: a, n_th };
        let b = coherence::coherence_budget(&cp, &rp, &noise, &[flux]).unwrap();
        for r in &b.rows {
            prop_assert!(r.t2 <= 2.0 * r.t1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn params_round_trip(e_j in 0.1..20.0f64, e_c in 0.1..5.0f64, e_l in 0.01..2.0f64) {
        let p = ParamsFile::fluxonium(e_j, e_c, e_l);
        let text = p.to_canonical();
        let back = ParamsFile::parse(&text, "memory").unwrap();
        prop_assert_eq!(back.to_canonical(), text);
    }

    #[test]
    fn points_round_trip(raw in proptest::collection::vec((-1.0..1.0f64, 0usize..3, 1usize..5, 0.01..10.0f64, 0.1..5.0f64), 1..20)) {
        let points: Vec<TransitionPoint> = raw
            .into_iter()
            .map(|(phi, i, dj, f, w)| TransitionPoint { phi_ext: phi, i, j: i + dj, f_ij: f, weight: w })
            .collect();
        let doc = PointsFile::new(points);
        let text = doc.to_canonical();
        prop_assert_eq!(PointsFile::parse(&text, "memory").unwrap().to_canonical(), text);
    }

    #[test]
    fn sig9_parses_back(x in -1e6..1e6f64) {
        let y: f64 = formats::sig9(x).parse().unwrap();
        prop_assert!((y - x).abs() <= 1e-8 * x.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn fit_cost_zero_at_generating_parameters(e_s1 in 0.1..0.2f64, e_s2 in 0.005..0.03f64, e_l in 0.12..0.2f64) {
        let truth = ModelParams::Dual2Amp { e_s1, e_s2, e_l_star: e_l };
        let pts = fit::synthesize_points(&truth, &[0.0, 0.05, 0.5], &[(0, 1), (0, 2)], 0.0, 3, FitTruncation::default()).unwrap();
        let problem = fit::FitProblem::new(pts, truth);
        prop_assert!(fit::cost(&problem, &truth).unwrap() < 1e-12);
    }
}
