//! On-disk and over-the-wire formats.
//!
//! Structured files are pretty-printed JSON carrying `"schema_version": "1"`.
//! Serializing a parsed canonical file reproduces it byte for byte. Spectra
//! are also written as comma-separated tables with unit-suffixed headers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch::{self, BandSet, DualParams};
use crate::coherence::{BudgetRow, NoiseParams, T1Point, T2Point};
use crate::dressed::{ResonatorParams, DEFAULT_PHOTONS};
use crate::error::CoreError;
use crate::fit::{self, FitProblem, FitResult, FitTruncation, ModelKind, ModelParams, TransitionPoint};
use crate::spectra::{self, CircuitParams, SpectrumTable, DEFAULT_DIM};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {message}")]
    Parse { context: String, message: String },
    #[error("{context}: unsupported schema_version `{found}` (expected `{SCHEMA_VERSION}`)")]
    Schema { context: String, found: String },
    #[error("{context}: {source}")]
    Invalid {
        context: String,
        #[source]
        source: CoreError,
    },
}

impl FormatError {
    fn invalid(context: &str, source: CoreError) -> Self {
        FormatError::Invalid {
            context: context.to_string(),
            source,
        }
    }
}

pub type FormatResult<T> = std::result::Result<T, FormatError>;

/// A structured file with a schema version and its own consistency checks.
pub trait Document: Serialize + DeserializeOwned {
    fn schema_version(&self) -> &str;

    fn validate(&self) -> Result<(), CoreError> {
        Ok(())
    }

    /// Canonical text: pretty JSON with a trailing newline.
    fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    /// Parses and validates; `context` names the source in diagnostics.
    fn parse(text: &str, context: &str) -> FormatResult<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| FormatError::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        if doc.schema_version() != SCHEMA_VERSION {
            return Err(FormatError::Schema {
                context: context.to_string(),
                found: doc.schema_version().to_string(),
            });
        }
        doc.validate().map_err(|e| FormatError::invalid(context, e))?;
        Ok(doc)
    }

    fn read(path: &Path) -> FormatResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn write(&self, path: &Path) -> FormatResult<()> {
        write_text(path, &self.to_canonical())
    }
}

pub fn write_text(path: &Path, text: &str) -> FormatResult<()> {
    fs::write(path, text).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn schema() -> String {
    SCHEMA_VERSION.to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamsModel {
    /// Fluxonium energies `e_j`, `e_c`, `e_l`.
    Fluxonium,
    /// Phase-slip energies `e_s1`, `e_s2`, `e_l_star`.
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorBlock {
    pub f_r: f64,
    pub g: f64,
    pub kappa: f64,
}

/// Circuit parameters, GHz. Blocks that do not apply are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub schema_version: String,
    pub model: ParamsModel,
    pub e_j: Option<f64>,
    pub e_c: Option<f64>,
    pub e_l: Option<f64>,
    pub e_s1: Option<f64>,
    pub e_s2: Option<f64>,
    pub e_l_star: Option<f64>,
    pub resonator: Option<ResonatorBlock>,
    pub noise: Option<NoiseParams>,
}

impl ParamsFile {
    pub fn fluxonium(e_j: f64, e_c: f64, e_l: f64) -> Self {
        ParamsFile {
            schema_version: schema(),
            model: ParamsModel::Fluxonium,
            e_j: Some(e_j),
            e_c: Some(e_c),
            e_l: Some(e_l),
            e_s1: None,
            e_s2: None,
            e_l_star: None,
            resonator: None,
            noise: None,
        }
    }

    pub fn dual(e_s1: f64, e_s2: f64, e_l_star: f64) -> Self {
        ParamsFile {
            schema_version: schema(),
            model: ParamsModel::Dual,
            e_j: None,
            e_c: None,
            e_l: None,
            e_s1: Some(e_s1),
            e_s2: Some(e_s2),
            e_l_star: Some(e_l_star),
            resonator: None,
            noise: None,
        }
    }

    pub fn with_resonator(mut self, r: ResonatorBlock) -> Self {
        self.resonator = Some(r);
        self
    }

    pub fn with_noise(mut self, n: NoiseParams) -> Self {
        self.noise = Some(n);
        self
    }

    fn require(value: Option<f64>, name: &'static str) -> Result<f64, CoreError> {
        value.ok_or_else(|| CoreError::invalid(name, "missing for this model"))
    }

    /// Fluxonium parameters at `flux`.
    pub fn circuit(&self, flux: f64) -> Result<CircuitParams, CoreError> {
        CircuitParams::new(
            Self::require(self.e_j, "e_j")?,
            Self::require(self.e_c, "e_c")?,
            Self::require(self.e_l, "e_l")?,
            flux,
        )
    }

    pub fn dual_energies(&self) -> Result<(f64, f64, f64), CoreError> {
        Ok((
            Self::require(self.e_s1, "e_s1")?,
            Self::require(self.e_s2, "e_s2")?,
            Self::require(self.e_l_star, "e_l_star")?,
        ))
    }

    pub fn resonator_params(&self) -> Result<ResonatorParams, CoreError> {
        let r = self
            .resonator
            .ok_or_else(|| CoreError::invalid("resonator", "missing resonator block"))?;
        ResonatorParams::new(r.f_r, r.g, r.kappa, DEFAULT_PHOTONS)
    }

    pub fn noise_params(&self) -> Result<NoiseParams, CoreError> {
        let n = self
            .noise
            .ok_or_else(|| CoreError::invalid("noise", "missing noise block"))?;
        n.validate()?;
        Ok(n)
    }

    /// Initial guess for a fit of `kind`.
    pub fn model_params(&self, kind: crate::fit::ModelKind) -> Result<ModelParams, CoreError> {
        use crate::fit::ModelKind;
        let p = match kind {
            ModelKind::Joint => {
                let c = self.circuit(0.0)?;
                let r = self
                    .resonator
                    .ok_or_else(|| CoreError::invalid("resonator", "joint model needs a resonator block"))?;
                ModelParams::Joint {
                    e_j: c.e_j,
                    e_c: c.e_c,
                    e_l: c.e_l,
                    f_r: r.f_r,
                    g: r.g,
                }
            }
            ModelKind::Dual2Amp => {
                let (e_s1, e_s2, e_l_star) = self.dual_energies()?;
                ModelParams::Dual2Amp { e_s1, e_s2, e_l_star }
            }
            ModelKind::Dual1Amp => ModelParams::Dual1Amp {
                e_s1: Self::require(self.e_s1, "e_s1")?,
                e_l_star: Self::require(self.e_l_star, "e_l_star")?,
            },
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters file holding fitted values, keeping `self`'s other blocks.
    pub fn updated_with(&self, fitted: &ModelParams) -> ParamsFile {
        let mut out = self.clone();
        match *fitted {
            ModelParams::Joint { e_j, e_c, e_l, f_r, g } => {
                out.model = ParamsModel::Fluxonium;
                out.e_j = Some(e_j);
                out.e_c = Some(e_c);
                out.e_l = Some(e_l);
                let kappa = self.resonator.map(|r| r.kappa).unwrap_or(0.005);
                out.resonator = Some(ResonatorBlock { f_r, g, kappa });
            }
            ModelParams::Dual2Amp { e_s1, e_s2, e_l_star } => {
                out.model = ParamsModel::Dual;
                out.e_s1 = Some(e_s1);
                out.e_s2 = Some(e_s2);
                out.e_l_star = Some(e_l_star);
            }
            ModelParams::Dual1Amp { e_s1, e_l_star } => {
                out.model = ParamsModel::Dual;
                out.e_s1 = Some(e_s1);
                out.e_s2 = Some(0.0);
                out.e_l_star = Some(e_l_star);
            }
        }
        out
    }
}

impl Document for ParamsFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }

    fn validate(&self) -> Result<(), CoreError> {
        let fields = [
            ("e_j", self.e_j),
            ("e_c", self.e_c),
            ("e_l", self.e_l),
            ("e_s1", self.e_s1),
            ("e_s2", self.e_s2),
            ("e_l_star", self.e_l_star),
        ];
        for (name, v) in fields {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(CoreError::invalid(name, format!("must be >= 0, got {v}")));
                }
            }
        }
        match self.model {
            ParamsModel::Fluxonium => {
                self.circuit(0.0)?;
            }
            ParamsModel::Dual => {
                self.dual_energies()?;
            }
        }
        if self.resonator.is_some() {
            self.resonator_params()?;
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }
}

/// Working set of labeled transition frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsFile {
    pub schema_version: String,
    /// Free-text provenance, e.g. `reconstruction`.
    pub source: Option<String>,
    pub points: Vec<TransitionPoint>,
}

impl PointsFile {
    pub fn new(points: Vec<TransitionPoint>) -> Self {
        PointsFile {
            schema_version: schema(),
            source: None,
            points,
        }
    }
}

impl Document for PointsFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }

    fn validate(&self) -> Result<(), CoreError> {
        for (k, p) in self.points.iter().enumerate() {
            p.validate()
                .map_err(|e| CoreError::invalid("points", format!("point {k}: {e}")))?;
        }
        Ok(())
    }
}

/// Two-tone spectroscopy map; `magnitude[r][c]` is at `flux[r]`, `frequency[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapFile {
    pub schema_version: String,
    /// Φ0.
    pub flux: Vec<f64>,
    /// GHz.
    pub frequency: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[1] > w[0])
}

impl Document for HeatmapFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }

    fn validate(&self) -> Result<(), CoreError> {
        if self.flux.is_empty() || self.frequency.is_empty() {
            return Err(CoreError::invalid("flux", "axes must not be empty"));
        }
        if !strictly_increasing(&self.flux) {
            return Err(CoreError::invalid("flux", "axis must be strictly increasing"));
        }
        if !strictly_increasing(&self.frequency) {
            return Err(CoreError::invalid("frequency", "axis must be strictly increasing"));
        }
        if self.magnitude.len() != self.flux.len() {
            return Err(CoreError::invalid(
                "magnitude",
                format!("{} rows for {} flux values", self.magnitude.len(), self.flux.len()),
            ));
        }
        if let Some((r, row)) = self
            .magnitude
            .iter()
            .enumerate()
            .find(|(_, row)| row.len() != self.frequency.len())
        {
            return Err(CoreError::invalid(
                "magnitude",
                format!(
                    "row {r} has {} columns for {} frequencies",
                    row.len(),
                    self.frequency.len()
                ),
            ));
        }
        if self.magnitude.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CoreError::invalid("magnitude", "values must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResultFile {
    pub schema_version: String,
    #[serde(flatten)]
    pub result: FitResult,
}

impl FitResultFile {
    pub fn new(result: FitResult) -> Self {
        FitResultFile {
            schema_version: schema(),
            result,
        }
    }
}

impl Document for FitResultFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceFile {
    pub schema_version: String,
    pub rows: Vec<BudgetRow>,
}

impl CoherenceFile {
    pub fn new(rows: Vec<BudgetRow>) -> Self {
        CoherenceFile {
            schema_version: schema(),
            rows,
        }
    }
}

impl Document for CoherenceFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }

    fn validate(&self) -> Result<(), CoreError> {
        crate::coherence::CoherenceBudget {
            rows: self.rows.clone(),
        }
        .validate()
    }
}

/// Measured coherence times versus flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceDataFile {
    pub schema_version: String,
    pub source: Option<String>,
    pub t1: Vec<T1Point>,
    pub t2: Vec<T2Point>,
}

impl Document for CoherenceDataFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }

    fn validate(&self) -> Result<(), CoreError> {
        if self.t1.is_empty() {
            return Err(CoreError::invalid("t1", "must not be empty"));
        }
        if self.t1.iter().any(|p| !(p.t1 > 0.0 && p.flux.is_finite())) {
            return Err(CoreError::invalid("t1", "times must be > 0"));
        }
        if self
            .t2
            .iter()
            .any(|p| !(p.t2 > 0.0 && p.sigma > 0.0 && p.flux.is_finite()))
        {
            return Err(CoreError::invalid("t2", "times and sigmas must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandsFile {
    pub schema_version: String,
    #[serde(flatten)]
    pub bands: BandSet,
}

impl BandsFile {
    pub fn new(bands: BandSet) -> Self {
        BandsFile {
            schema_version: schema(),
            bands,
        }
    }
}

impl Document for BandsFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }
}

/// Noise model on its own, for combining with any circuit parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFile {
    pub schema_version: String,
    #[serde(flatten)]
    pub noise: NoiseParams,
}

impl NoiseFile {
    pub fn new(noise: NoiseParams) -> Self {
        NoiseFile {
            schema_version: schema(),
            noise,
        }
    }
}

impl Document for NoiseFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }

    fn validate(&self) -> Result<(), CoreError> {
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitProblemFile {
    pub schema_version: String,
    #[serde(flatten)]
    pub problem: FitProblem,
}

impl FitProblemFile {
    pub fn new(problem: FitProblem) -> Self {
        FitProblemFile {
            schema_version: schema(),
            problem,
        }
    }
}

impl Document for FitProblemFile {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }

    fn validate(&self) -> Result<(), CoreError> {
        self.problem.validate()
    }
}

/// Which Hamiltonian a spectrum is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumModel {
    /// Bare fluxonium in the phase basis.
    Exact,
    /// Two-amplitude effective model in the bi-fluxon basis.
    Dual,
    /// Fluxonium plus readout resonator.
    Joint,
}

impl SpectrumModel {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumModel::Exact => "exact",
            SpectrumModel::Dual => "dual",
            SpectrumModel::Joint => "joint",
        }
    }
}

impl std::str::FromStr for SpectrumModel {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, CoreError> {
        match s {
            "exact" => Ok(SpectrumModel::Exact),
            "dual" => Ok(SpectrumModel::Dual),
            "joint" => Ok(SpectrumModel::Joint),
            other => Err(CoreError::invalid(
                "model",
                format!("unknown model `{other}` (expected exact, dual or joint)"),
            )),
        }
    }
}

/// Lowest `levels` energies over `grid` for the model described by `params`.
pub fn params_spectrum(
    params: &ParamsFile,
    model: SpectrumModel,
    grid: &[f64],
    levels: usize,
) -> Result<SpectrumTable, CoreError> {
    if levels < 2 {
        return Err(CoreError::invalid("levels", "need at least 2 levels"));
    }
    match model {
        SpectrumModel::Exact => spectra::flux_sweep(&params.circuit(0.0)?, grid, levels, DEFAULT_DIM),
        SpectrumModel::Dual => {
            let (e_s1, e_s2, e_l_star) = params.dual_energies()?;
            bloch::two_amplitude_spectrum(&DualParams::new(e_s1, e_s2, e_l_star)?, grid, levels)
        }
        SpectrumModel::Joint => {
            let m = params.model_params(ModelKind::Joint)?;
            let raw = spectra::sweep(grid, |flux| {
                fit::model_levels(&m, flux, levels, FitTruncation::default())
            })?;
            Ok(SpectrumTable::from_levels(grid.to_vec(), raw))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlayLine {
    pub i: usize,
    pub j: usize,
    /// `f_ij` in GHz at each flux point.
    pub frequency: Vec<f64>,
}

/// Theory polylines for every transition `i < j` among the computed levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOverlay {
    pub schema_version: String,
    pub model: SpectrumModel,
    pub flux: Vec<f64>,
    pub lines: Vec<OverlayLine>,
}

impl SpectrumOverlay {
    pub fn from_table(model: SpectrumModel, table: &SpectrumTable) -> Self {
        let k = table.levels.first().map_or(0, |l| l.len());
        let lines = (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| OverlayLine {
                i,
                j,
                frequency: table.levels.iter().map(|l| l[j] - l[i]).collect(),
            })
            .collect();
        SpectrumOverlay {
            schema_version: schema(),
            model,
            flux: table.flux_grid.clone(),
            lines,
        }
    }
}

impl Document for SpectrumOverlay {
    fn schema_version(&self) -> &str {
        &self.schema_version
    }
}

/// Shortest plain rendering of `x` with 9 significant digits.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..=9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // re-rounding can carry into a new digit, which is harmless here
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

/// Comma-separated `flux_phi0,f01_ghz,...` table of transition frequencies
/// from the ground state.
pub fn spectrum_table_text(table: &SpectrumTable) -> String {
    let k = table.levels.first().map_or(0, |l| l.len());
    let mut out = String::from("flux_phi0");
    for j in 1..k {
        out.push_str(&format!(",f0{j}_ghz"));
    }
    out.push('\n');
    for (flux, levels) in table.flux_grid.iter().zip(&table.levels) {
        out.push_str(&sig9(*flux));
        for l in levels.iter().skip(1) {
            out.push(',');
            out.push_str(&sig9(*l));
        }
        out.push('\n');
    }
    out
}

/// Parses a table written by [`spectrum_table_text`] into `(flux, f0j)` rows.
pub fn parse_spectrum_table(text: &str) -> FormatResult<Vec<(f64, Vec<f64>)>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| FormatError::Parse {
        context: "spectrum table".into(),
        message: "empty".into(),
    })?;
    let columns = header.split(',').count();
    if !header.starts_with("flux_phi0") {
        return Err(FormatError::Parse {
            context: "spectrum table".into(),
            message: format!("unexpected header `{header}`"),
        });
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let values: Vec<f64> = line
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| FormatError::Parse {
                    context: format!("spectrum table row {}", n + 1),
                    message: e.to_string(),
                })?;
            if values.len() != columns {
                return Err(FormatError::Parse {
                    context: format!("spectrum table row {}", n + 1),
                    message: format!("{} values for {columns} columns", values.len()),
                });
            }
            Ok((values[0], values[1..].to_vec()))
        })
        .collect()
}

/// `START:STOP:COUNT` flux range, endpoints included.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, CoreError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CoreError::invalid(
            "flux",
            format!("expected START:STOP:COUNT, got `{spec}`"),
        ));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CoreError::invalid("flux", format!("bad start `{}`", parts[0])))?;
    let stop: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CoreError::invalid("flux", format!("bad stop `{}`", parts[1])))?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CoreError::invalid("flux", format!("bad count `{}`", parts[2])))?;
    if !start.is_finite() || !stop.is_finite() {
        return Err(CoreError::invalid("flux", "endpoints must be finite"));
    }
    Ok(match count {
        0 => return Err(CoreError::invalid("flux", "count must be >= 1")),
        1 => vec![start],
        n => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    })
}
