//! Fits and extractions run against the bundled reconstruction fixtures.

use std::path::PathBuf;

use bifluxon_core::coherence;
use bifluxon_core::fit::{self, FitProblem, ModelKind, ModelParams};
use bifluxon_core::formats::{CoherenceDataFile, Document, FormatError, HeatmapFile, ParamsFile, PointsFile};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn dual_fit(sample: &str, kind: ModelKind) -> fit::FitResult {
    let pts = PointsFile::read(&fixture(&format!("{sample}_dual_points.json"))).unwrap();
    let init = match kind {
        ModelKind::Dual2Amp => ModelParams::Dual2Amp {
            e_s1: 0.12,
            e_s2: 0.02,
            e_l_star: 0.14,
        },
        _ => ModelParams::Dual1Amp {
            e_s1: 0.12,
            e_l_star: 0.14,
        },
    };
    fit::fit(&FitProblem::new(pts.points, init)).unwrap()
}

#[test]
fn dual_fit_sample_a_near_published() {
    let r = dual_fit("sample_a", ModelKind::Dual2Amp);
    let v = r.params.values();
    assert!(r.converged);
    assert!(
        rel(v[0], 0.153) < 0.1 && rel(v[1], 0.01298) < 0.1 && rel(v[2], 0.157) < 0.1,
        "{v:?}"
    );
}

#[test]
fn dual_fit_sample_b_near_published() {
    let r = dual_fit("sample_b", ModelKind::Dual2Amp);
    let v = r.params.values();
    assert!(
        rel(v[0], 0.176) < 0.1 && rel(v[1], 0.017) < 0.15 && rel(v[2], 0.154) < 0.1,
        "{v:?}"
    );
}

#[test]
fn second_amplitude_improves_fit() {
    let two = dual_fit("sample_b", ModelKind::Dual2Amp);
    let one = dual_fit("sample_b", ModelKind::Dual1Amp);
    assert!(one.cost > 3.0 * two.cost, "{} vs {}", one.cost, two.cost);
}

#[test]
fn joint_fit_sample_b_recovers_circuit() {
    let params = ParamsFile::read(&fixture("sample_b_params.json")).unwrap();
    let truth = params.model_params(ModelKind::Joint).unwrap().values();
    let init: Vec<f64> = truth
        .iter()
        .zip([0.95, 1.05, 0.95, 1.0, 0.9])
        .map(|(v, s)| v * s)
        .collect();
    let pts = PointsFile::read(&fixture("sample_b_points.json")).unwrap();
    let problem = FitProblem::new(pts.points, ModelParams::from_values(ModelKind::Joint, &init).unwrap());
    let r = fit::fit(&problem).unwrap();
    let v = r.params.values();
    for k in 0..3 {
        assert!(rel(v[k], truth[k]) < 0.02, "{v:?}");
    }
    let report = fit::residual_report(&r, &problem).unwrap();
    assert!(report.rms < 2.0, "rms {} MHz", report.rms);
}

fn flux_noise(sample: &str) -> f64 {
    let data = CoherenceDataFile::read(&fixture(&format!("{sample}_coherence.json"))).unwrap();
    let params = ParamsFile::read(&fixture(&format!("{sample}_params.json"))).unwrap();
    let cp = params.circuit(0.0).unwrap();
    coherence::flux_noise_fit(&data.t2, &data.t1, &cp).unwrap().sqrt_a_phi
}

#[test]
fn flux_noise_amplitude_sample_a() {
    let a = flux_noise("sample_a") * 1e6;
    assert!((1.0..=4.0).contains(&a), "{a} µΦ0");
}

#[test]
fn flux_noise_amplitude_sample_b() {
    let a = flux_noise("sample_b") * 1e6;
    assert!((1.5..=6.0).contains(&a), "{a} µΦ0");
}

#[test]
fn heatmap_fixture_is_well_formed() {
    let h = HeatmapFile::read(&fixture("sample_a_heatmap.json")).unwrap();
    assert_eq!(h.magnitude.len(), h.flux.len());
    assert!(h.magnitude.iter().all(|row| row.len() == h.frequency.len()));
}

#[test]
fn wrong_schema_version_rejected() {
    let text = std::fs::read_to_string(fixture("sample_a_params.json"))
        .unwrap()
        .replace("\"schema_version\": \"1\"", "\"schema_version\": \"2\"");
    assert!(matches!(
        ParamsFile::parse(&text, "params"),
        Err(FormatError::Schema { .. })
    ));
}

#[test]
fn invalid_point_names_its_field() {
    let text = std::fs::read_to_string(fixture("sample_a_points.json"))
        .unwrap()
        .replacen("\"weight\": 1.0", "\"weight\": -1.0", 1);
    let err = PointsFile::parse(&text, "points.json").unwrap_err().to_string();
    assert!(err.contains("points.json") && err.contains("weight"), "{err}");
}
