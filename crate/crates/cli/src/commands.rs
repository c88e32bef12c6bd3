use std::path::{Path, PathBuf};

use bifluxon_client::Client;
use bifluxon_core::bloch;
use bifluxon_core::coherence;
use bifluxon_core::fit::{self, FitProblem, ModelKind};
use bifluxon_core::formats::{
    self, BandsFile, CoherenceFile, Document, FitResultFile, NoiseFile, ParamsFile, PointsFile, SpectrumModel,
};
use bifluxon_core::spectra::SpectrumTable;
use bifluxon_core::wkb;
use bifluxon_service::ServiceConfig;

use crate::error::CliError;

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    formats::write_text(path, text).map_err(|e| CliError::Failed(e.to_string()))
}

fn write_doc<D: Document>(path: &Path, doc: &D) -> Result<(), CliError> {
    write_text(path, &doc.to_canonical())
}

/// Rebuilds a ground-referenced table from the `(0, j)` overlay lines.
fn table_from_remote(
    client: &Client,
    params: &ParamsFile,
    flux: &str,
    levels: usize,
    model: SpectrumModel,
) -> Result<SpectrumTable, CliError> {
    let overlay = client.spectrum(Some(params), Some(flux), Some(levels), Some(model))?;
    let rows = (0..overlay.flux.len())
        .map(|p| {
            std::iter::once(0.0)
                .chain((1..levels).map(|j| {
                    overlay
                        .lines
                        .iter()
                        .find(|l| l.i == 0 && l.j == j)
                        .map_or(f64::NAN, |l| l.frequency[p])
                }))
                .collect()
        })
        .collect();
    Ok(SpectrumTable::from_levels(overlay.flux, rows))
}

pub fn spectrum(
    params: &Path,
    flux: &str,
    levels: usize,
    model: SpectrumModel,
    out: &Path,
    remote: Option<&str>,
) -> Result<(), CliError> {
    let p = ParamsFile::read(params)?;
    let grid = formats::parse_range(flux)?;
    let table = match remote {
        Some(url) => table_from_remote(&Client::new(url), &p, flux, levels, model)?,
        None => formats::params_spectrum(&p, model, &grid, levels)?,
    };
    write_text(out, &formats::spectrum_table_text(&table))?;
    println!(
        "{} model: {} flux points, {} transitions -> {}",
        model.name(),
        table.flux_grid.len(),
        levels - 1,
        out.display()
    );
    for (f, l) in table.flux_grid.iter().zip(&table.levels) {
        let cols: Vec<String> = l.iter().skip(1).map(|e| format!("{e:.6}")).collect();
        println!("  φ = {f:<8.4} f0j = {} GHz", cols.join(", "));
    }
    Ok(())
}

pub fn fit(points: &Path, init: &Path, model: ModelKind, out: &Path, remote: Option<&str>) -> Result<(), CliError> {
    let pts = PointsFile::read(points)?;
    let guess = ParamsFile::read(init)?.model_params(model)?;
    let problem = FitProblem::new(pts.points, guess);
    problem.validate()?;
    let result = match remote {
        Some(url) => Client::new(url).fit(&problem)?,
        None => FitResultFile::new(fit::fit(&problem)?),
    };
    write_doc(out, &result)?;

    let r = &result.result;
    println!("model {} ({} points)", model.name(), problem.points.len());
    for (name, v) in r.params.named() {
        println!("  {name:<9} = {v:.6} GHz");
    }
    let report = fit::residual_report(r, &problem)?;
    println!(
        "  cost {:.4e} MHz², rms {:.3} MHz, max |residual| {:.3} MHz, {} iterations",
        r.cost, report.rms, report.max_abs, r.iterations
    );
    for &k in &report.outliers {
        let row = &report.rows[k];
        println!(
            "  outlier: φ = {:.4}, ({}, {}) residual {:.2} MHz",
            row.point.phi_ext, row.point.i, row.point.j, row.residual
        );
    }
    if !r.converged {
        return Err(CliError::NotConverged(out.display().to_string()));
    }
    Ok(())
}

pub fn wkb(params: &Path) -> Result<(), CliError> {
    let cp = ParamsFile::read(params)?.circuit(0.0)?;
    let g = wkb::wkb_gaps(&cp)?;
    println!("Δ2π = {:.0} MHz", g.delta_2pi * 1e3);
    println!("Δ4π = {:.0} MHz", g.delta_4pi * 1e3);
    let v = &g.validity;
    for (name, c) in [
        ("E_C/E_J", v.charging_over_josephson),
        ("Δ/E_L", v.gap_over_inductive),
        ("E_L/ω_p", v.inductive_over_plasma),
    ] {
        println!(
            "  {name:<8} = {:.3} {}",
            c.ratio,
            if c.pass { "ok" } else { "outside validity range" }
        );
    }
    Ok(())
}

pub fn bands(params: &Path, out: &Path, grid: usize, s_max: usize, k_max: usize) -> Result<(), CliError> {
    let cp = ParamsFile::read(params)?.circuit(0.0)?;
    let set = bloch::bloch_bands(cp.e_j, cp.e_c, grid, s_max, bloch::DEFAULT_CHARGE_CUTOFF)?;
    let set = bloch::band_fourier(set, k_max);
    for (s, coeffs) in set.fourier.iter().enumerate() {
        let c: Vec<String> = coeffs.iter().map(|e| format!("{:.3}", e * 1e3)).collect();
        println!(
            "band {s}: width {:.3} MHz, E_s,k = [{}] MHz",
            set.width(s) * 1e3,
            c.join(", ")
        );
    }
    write_doc(out, &BandsFile::new(set))
}

pub fn coherence(
    params: &Path,
    noise: Option<&Path>,
    flux: &str,
    out: &Path,
    remote: Option<&str>,
) -> Result<(), CliError> {
    let mut p = ParamsFile::read(params)?;
    if let Some(path) = noise {
        p.noise = Some(NoiseFile::read(path)?.noise);
    }
    let grid = formats::parse_range(flux)?;
    let file = match remote {
        Some(url) => Client::new(url).coherence(Some(&p), Some(flux))?,
        None => {
            let budget =
                coherence::coherence_budget(&p.circuit(0.0)?, &p.resonator_params()?, &p.noise_params()?, &grid)?;
            CoherenceFile::new(budget.rows)
        }
    };
    file.validate()?;
    write_doc(out, &file)?;
    println!(
        "{:>8} {:>10} {:>10} {:>10}  dominant dephasing",
        "flux", "f01 GHz", "T1 µs", "T2 µs"
    );
    for r in &file.rows {
        println!(
            "{:>8.4} {:>10.5} {:>10.1} {:>10.1}  {}",
            r.flux,
            r.f01,
            r.t1 * 1e6,
            r.t2 * 1e6,
            r.gamma_phi.dominant()
        );
    }
    Ok(())
}

pub fn serve(data: PathBuf, points: PathBuf, params: PathBuf, port: u16) -> Result<(), CliError> {
    let config = ServiceConfig {
        port,
        ..ServiceConfig::new(data, points, params)
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Failed(e.to_string()))?;
    rt.block_on(bifluxon_service::serve(config))?;
    Ok(())
}
