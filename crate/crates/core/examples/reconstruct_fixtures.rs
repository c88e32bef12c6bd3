//! Regenerates the reconstruction fixtures in `fixtures/`.
//!
//! No raw spectroscopy or coherence traces are available, so the fixture
//! points are forward-model values at the published parameters plus small
//! seeded noise standing in for digitization and measurement scatter.
//!
//!     cargo run --release -p bifluxon-core --example reconstruct_fixtures [OUT_DIR]

use std::path::PathBuf;

use bifluxon_core::coherence::{self, NoiseParams, T1Point, T2Point};
use bifluxon_core::dressed::{self, ResonatorParams, DEFAULT_PHOTONS};
use bifluxon_core::fit::{self, FitTruncation, ModelParams, TransitionPoint};
use bifluxon_core::formats::{
    CoherenceDataFile, Document, HeatmapFile, ParamsFile, PointsFile, ResonatorBlock, SCHEMA_VERSION,
};
use bifluxon_core::spectra::{CircuitParams, FluxoniumEigensystem, OperatorKind, DEFAULT_DIM};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SOURCE: &str = "reconstruction: forward model at published parameters with seeded noise";

struct Sample {
    name: &'static str,
    e_j: f64,
    e_c: f64,
    e_l: f64,
    f_r: f64,
    kappa: f64,
    chi01: f64,
    dual: (f64, f64, f64),
    noise: NoiseParams,
    sqrt_a_phi: f64,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn sweet_spot_points(m: &ModelParams, seed: u64) -> Vec<TransitionPoint> {
    let t = FitTruncation::default();
    let mut pts = fit::synthesize_points(m, &linspace(-0.1, 0.1, 9), &[(0, 1), (0, 2)], 0.0005, seed, t).unwrap();
    pts.extend(fit::synthesize_points(m, &linspace(0.4, 0.6, 9), &[(0, 1)], 0.0005, seed + 1, t).unwrap());
    pts
}

fn resonator_points(m: &ModelParams, seed: u64) -> Vec<TransitionPoint> {
    let t = FitTruncation::default();
    let mut pts = fit::synthesize_points(m, &[0.0, 0.1, 0.2, 0.3, 0.4], &[(0, 4)], 0.0005, seed, t).unwrap();
    pts.extend(fit::synthesize_points(m, &[0.44, 0.445, 0.45], &[(0, 4), (0, 5)], 0.0005, seed + 1, t).unwrap());
    pts
}

fn points_file(points: Vec<TransitionPoint>) -> PointsFile {
    PointsFile {
        schema_version: SCHEMA_VERSION.into(),
        source: Some(SOURCE.into()),
        points,
    }
}

fn coherence_data(s: &Sample, cp: &CircuitParams, seed: u64) -> CoherenceDataFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scatter = Normal::new(0.0, 0.05).unwrap();
    let fluxes = [-0.1, -0.06, -0.03, -0.015, 0.0, 0.015, 0.03, 0.06, 0.1];
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    for &f in &fluxes {
        let sys = FluxoniumEigensystem::compute(&cp.with_flux(f), DEFAULT_DIM).unwrap();
        let f01 = sys.energies[1] - sys.energies[0];
        let phi01 = sys.element(OperatorKind::Phase, 0, 1).unwrap();
        let time1 = coherence::t1_dielectric(cp, &s.noise, f01, phi01).unwrap();
        let (slope, _) = coherence::flux_derivatives(cp, f, DEFAULT_DIM).unwrap();
        let gamma = 0.5 / time1
            + coherence::gamma_phi_flux_first(s.sqrt_a_phi * s.sqrt_a_phi, slope)
            + coherence::gamma_phi_thermal(s.noise.n_th, s.kappa, s.chi01).unwrap();
        let time2 = (1.0 / gamma) * (1.0 + scatter.sample(&mut rng));
        t1.push(T1Point { flux: f, t1: time1 });
        t2.push(T2Point {
            flux: f,
            t2: time2,
            sigma: 0.05 * time2,
        });
    }
    CoherenceDataFile {
        schema_version: SCHEMA_VERSION.into(),
        source: Some(SOURCE.into()),
        t1,
        t2,
    }
}

fn heatmap(m: &ModelParams, seed: u64) -> HeatmapFile {
    let flux = linspace(-0.1, 0.6, 57);
    let frequency = linspace(0.05, 8.0, 160);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background = Normal::new(0.0, 0.02).unwrap();
    let lines = [
        ((0, 1), 1.0),
        ((0, 2), 0.8),
        ((0, 3), 0.6),
        ((0, 4), 1.0),
        ((0, 5), 0.5),
        ((1, 2), 0.3),
    ];
    let width = 0.03;
    let magnitude = flux
        .iter()
        .map(|&f| {
            let l = fit::model_levels(m, f, 6, FitTruncation::default()).unwrap();
            frequency
                .iter()
                .map(|&nu| {
                    let signal: f64 = lines
                        .iter()
                        .map(|&((i, j), a)| {
                            let x = (nu - (l[j] - l[i])) / width;
                            a / (1.0 + x * x)
                        })
                        .sum();
                    (signal + background.sample(&mut rng) * 1e3).round() / 1e3
                })
                .collect()
        })
        .collect();
    HeatmapFile {
        schema_version: SCHEMA_VERSION.into(),
        flux,
        frequency,
        magnitude,
    }
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&out).unwrap();

    let samples = [
        Sample {
            name: "sample_a",
            e_j: 6.01,
            e_c: 1.59,
            e_l: 0.165,
            f_r: 6.908,
            kappa: 0.0065,
            chi01: 0.0068,
            dual: (0.153, 0.013, 0.157),
            noise: NoiseParams {
                q_cap_ref: 6e4,
                f_ref: 6.0,
                epsilon: 0.2,
                t_eff: 0.02,
                a_phi: 4e-12,
                n_th: 4e-4,
            },
            sqrt_a_phi: 2e-6,
        },
        Sample {
            name: "sample_b",
            e_j: 5.76,
            e_c: 1.62,
            e_l: 0.162,
            f_r: 6.89,
            kappa: 0.0054,
            chi01: 0.0069,
            dual: (0.176, 0.017, 0.154),
            noise: NoiseParams {
                q_cap_ref: 4e4,
                f_ref: 6.0,
                epsilon: 0.2,
                t_eff: 0.02,
                a_phi: 9e-12,
                n_th: 9e-4,
            },
            sqrt_a_phi: 3e-6,
        },
    ];

    for (k, s) in samples.iter().enumerate() {
        let seed = 100 * (k as u64 + 1);
        let cp = CircuitParams::new(s.e_j, s.e_c, s.e_l, 0.0).unwrap();
        let rp = ResonatorParams::new(s.f_r, 0.05, s.kappa, DEFAULT_PHOTONS).unwrap();
        let g = dressed::coupling_for_shift(&cp, &rp, s.chi01, 0.0).unwrap();
        let joint = ModelParams::Joint {
            e_j: s.e_j,
            e_c: s.e_c,
            e_l: s.e_l,
            f_r: s.f_r,
            g,
        };

        let params = ParamsFile::fluxonium(s.e_j, s.e_c, s.e_l)
            .with_resonator(ResonatorBlock {
                f_r: s.f_r,
                g,
                kappa: s.kappa,
            })
            .with_noise(s.noise);
        params.write(&out.join(format!("{}_params.json", s.name))).unwrap();
        ParamsFile::dual(s.dual.0, s.dual.1, s.dual.2)
            .write(&out.join(format!("{}_dual_params.json", s.name)))
            .unwrap();

        let dual_points = sweet_spot_points(&joint, seed);
        let mut joint_points = dual_points.clone();
        joint_points.extend(resonator_points(&joint, seed + 10));
        points_file(joint_points)
            .write(&out.join(format!("{}_points.json", s.name)))
            .unwrap();
        points_file(dual_points)
            .write(&out.join(format!("{}_dual_points.json", s.name)))
            .unwrap();
        coherence_data(s, &cp, seed + 20)
            .write(&out.join(format!("{}_coherence.json", s.name)))
            .unwrap();
        println!("{}: g = {g:.6} GHz", s.name);
        if k == 0 {
            heatmap(&joint, seed + 30)
                .write(&out.join("sample_a_heatmap.json"))
                .unwrap();
            let synthetic = fit::synthesize_points(
                &joint,
                &linspace(0.0, 0.45, 10),
                &[(0, 3), (0, 4), (0, 5)],
                0.001,
                1,
                FitTruncation::default(),
            )
            .unwrap();
            PointsFile {
                schema_version: SCHEMA_VERSION.into(),
                source: Some("synthetic: joint model, 1 MHz Gaussian noise, seed 1".into()),
                points: synthetic,
            }
            .write(&out.join("synthetic_points.json"))
            .unwrap();
        }
    }
}
