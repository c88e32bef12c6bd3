//! Bloch bands of the bare junction and the dual phase-slip description.
//!
//! The junction part `4E_C n̂² − E_J cos φ̂` is diagonalized at fixed
//! quasicharge `n ∈ [−1/2, 1/2]` in the charge basis `k + n`. The band
//! dispersions `ε_s(n)` are even and periodic, so their cosine coefficients
//! `E_{s,k}` are the amplitudes of `k`-fold phase slips in the fluxon basis
//! `|m, s⟩`. Adding the inductive energy gives the multi-band dual Hamiltonian
//!
//! ```text
//! H = 2π² E_L (m + φ_ext + Ω/2π)² + Σ_{s,k} (E_{s,k}/2)(|m+k,s⟩⟨m,s| + h.c.)
//! ```
//!
//! and keeping a single band with two amplitudes gives the two-amplitude model
//! `2π² E_L* (m + φ_ext)² + E_S1 cos 2πn + E_S2 cos 4πn`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::spectra::{self, HermitianOperator, SpectrumTable};

pub const DEFAULT_GRID_SIZE: usize = 201;
pub const DEFAULT_CHARGE_CUTOFF: usize = 30;
pub const DEFAULT_M_MAX: usize = 12;
pub const DEFAULT_S_MAX: usize = 2;
pub const DEFAULT_K_MAX: usize = 3;

const MIN_GRID_SIZE: usize = 32;
const MIN_CHARGE_CUTOFF: usize = 10;
const MIN_M_MAX: usize = 5;
const GAUGE_OVERLAP_MIN: f64 = 0.9;
const EDGE_POPULATION_TOL: f64 = 1e-6;

/// Band dispersions on a uniform quasicharge grid, with optional Fourier
/// amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSet {
    pub e_j: f64,
    pub e_c: f64,
    /// Uniform grid on `[−1/2, 1/2]`, endpoints included.
    pub quasicharge_grid: Vec<f64>,
    /// `bands[s][i] = ε_s(n_i)` in GHz.
    pub bands: Vec<Vec<f64>>,
    /// `fourier[s][k] = E_{s,k}` in GHz; empty until [`band_fourier`] runs.
    pub fourier: Vec<Vec<f64>>,
    /// Bloch vectors in the charge basis, one matrix per grid point with
    /// band `s` in column `s`.
    #[serde(skip)]
    vectors: Vec<DMatrix<f64>>,
}

impl BandSet {
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn s_max(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn k_max(&self) -> Option<usize> {
        self.fourier.first().map(|f| f.len() - 1)
    }

    /// `max − min` of band `s`.
    pub fn width(&self, s: usize) -> f64 {
        let b = &self.bands[s];
        let max = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = b.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// `ε_s(n)` rebuilt from its Fourier amplitudes.
    pub fn reconstruct(&self, s: usize, n: f64) -> f64 {
        self.fourier[s]
            .iter()
            .enumerate()
            .map(|(k, e)| {
                if k == 0 {
                    *e
                } else {
                    e * (2.0 * PI * k as f64 * n).cos()
                }
            })
            .sum()
    }

    pub fn has_vectors(&self) -> bool {
        !self.vectors.is_empty()
    }
}

fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let step = (stop - start) / (count - 1) as f64;
    (0..count).map(|i| start + step * i as f64).collect()
}

/// Band structure of `4E_C (k + n)² − (E_J/2)(|k⟩⟨k+1| + h.c.)`,
/// `k ∈ [−k_charge, k_charge]`, on `grid_size` quasicharge points.
pub fn bloch_bands(e_j: f64, e_c: f64, grid_size: usize, s_max: usize, k_charge: usize) -> Result<BandSet> {
    if !(e_j >= 0.0 && e_j.is_finite()) {
        return Err(CoreError::invalid("e_j", "must be >= 0"));
    }
    if !(e_c > 0.0 && e_c.is_finite()) {
        return Err(CoreError::invalid("e_c", "must be > 0"));
    }
    if grid_size < MIN_GRID_SIZE {
        return Err(CoreError::invalid(
            "grid_size",
            format!("at least {MIN_GRID_SIZE} points required, got {grid_size}"),
        ));
    }
    if k_charge < MIN_CHARGE_CUTOFF {
        return Err(CoreError::invalid(
            "k_charge",
            format!("at least {MIN_CHARGE_CUTOFF} required, got {k_charge}"),
        ));
    }
    let size = 2 * k_charge + 1;
    if s_max + 1 > size {
        return Err(CoreError::TooManyLevels {
            requested: s_max + 1,
            available: size,
        });
    }
    let grid = linspace(-0.5, 0.5, grid_size);
    let per_point: Vec<(Vec<f64>, DMatrix<f64>)> = grid
        .par_iter()
        .map(|&n| {
            let mut h = DMatrix::zeros(size, size);
            for idx in 0..size {
                let charge = idx as f64 - k_charge as f64 + n;
                h[(idx, idx)] = 4.0 * e_c * charge * charge;
                if idx + 1 < size {
                    h[(idx, idx + 1)] = -0.5 * e_j;
                    h[(idx + 1, idx)] = -0.5 * e_j;
                }
            }
            let (vals, vecs) = linalg::eigh_real(&h);
            (vals[..=s_max].to_vec(), vecs.columns(0, s_max + 1).into_owned())
        })
        .collect();
    let mut bands = vec![Vec::with_capacity(grid_size); s_max + 1];
    let mut vectors = Vec::with_capacity(grid_size);
    for (vals, vecs) in per_point {
        for (s, v) in vals.into_iter().enumerate() {
            bands[s].push(v);
        }
        vectors.push(vecs);
    }
    Ok(BandSet {
        e_j,
        e_c,
        quasicharge_grid: grid,
        bands,
        fourier: Vec::new(),
        vectors,
    })
}

/// Cosine amplitudes `E_{s,k}`, `k = 0..=k_max`, by trapezoidal quadrature:
/// `E_{s,0} = ∫ε_s dn`, `E_{s,k} = 2∫ε_s cos(2πkn) dn`.
pub fn band_fourier(mut bands: BandSet, k_max: usize) -> BandSet {
    let grid = &bands.quasicharge_grid;
    let h = grid[1] - grid[0];
    let last = grid.len() - 1;
    let trapezoid = |f: &dyn Fn(usize) -> f64| -> f64 {
        let inner: f64 = (1..last).map(f).sum();
        h * (inner + 0.5 * (f(0) + f(last)))
    };
    bands.fourier = bands
        .bands
        .iter()
        .map(|eps| {
            (0..=k_max)
                .map(|k| {
                    let factor = if k == 0 { 1.0 } else { 2.0 };
                    factor * trapezoid(&|i| eps[i] * (2.0 * PI * k as f64 * grid[i]).cos())
                })
                .collect()
        })
        .collect();
    bands
}

/// How the interband coupling is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaMode {
    /// Finite differences of gauge-fixed Bloch vectors.
    Numeric,
    /// Deep-well closed form.
    Harmonic,
}

/// `Ω^{r,s}(n)` sampled on the quasicharge grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterbandCoupling {
    pub r: usize,
    pub s: usize,
    pub values: Vec<Complex64>,
}

/// Harmonic interband coupling `(2E_C/E_J)^{1/4}(√s δ_{s,r+1} + √r δ_{s+1,r})`.
pub fn harmonic_omega(e_j: f64, e_c: f64, r: usize, s: usize) -> f64 {
    let scale = (2.0 * e_c / e_j).powf(0.25);
    if s == r + 1 {
        scale * (s as f64).sqrt()
    } else if r == s + 1 {
        scale * (r as f64).sqrt()
    } else {
        0.0
    }
}

/// Interband couplings for every pair `r ≠ s` of computed bands.
pub fn interband_omega(bands: &BandSet, mode: OmegaMode) -> Result<Vec<InterbandCoupling>> {
    let nb = bands.band_count();
    let np = bands.quasicharge_grid.len();
    let pairs: Vec<(usize, usize)> = (0..nb)
        .flat_map(|r| (0..nb).filter(move |&s| s != r).map(move |s| (r, s)))
        .collect();
    match mode {
        OmegaMode::Harmonic => {
            if bands.e_j.is_nan() || bands.e_j <= 0.0 {
                return Err(CoreError::invalid("e_j", "harmonic coupling needs E_J > 0"));
            }
            Ok(pairs
                .into_iter()
                .map(|(r, s)| InterbandCoupling {
                    r,
                    s,
                    values: vec![Complex64::new(harmonic_omega(bands.e_j, bands.e_c, r, s), 0.0); np],
                })
                .collect())
        }
        OmegaMode::Numeric => {
            if !bands.has_vectors() {
                return Err(CoreError::invalid(
                    "bands",
                    "Bloch vectors were not retained (deserialized band set?)",
                ));
            }
            let gauged = smooth_gauge(bands)?;
            let h = bands.quasicharge_grid[1] - bands.quasicharge_grid[0];
            Ok(pairs
                .into_iter()
                .map(|(r, s)| {
                    let values = (0..np)
                        .map(|i| {
                            let (lo, hi, span) = if i == 0 {
                                (0, 1, h)
                            } else if i == np - 1 {
                                (np - 2, np - 1, h)
                            } else {
                                (i - 1, i + 1, 2.0 * h)
                            };
                            let ur = gauged[i].column(r);
                            let du = (gauged[hi].column(s) - gauged[lo].column(s)) / span;
                            Complex64::new(0.0, ur.dot(&du))
                        })
                        .collect();
                    InterbandCoupling { r, s, values }
                })
                .collect())
        }
    }
}

// Flips signs so that consecutive Bloch vectors of each band overlap positively.
fn smooth_gauge(bands: &BandSet) -> Result<Vec<DMatrix<f64>>> {
    let mut out = bands.vectors.clone();
    for i in 1..out.len() {
        for s in 0..bands.band_count() {
            let overlap = out[i - 1].column(s).dot(&out[i].column(s));
            if overlap.abs() < GAUGE_OVERLAP_MIN {
                return Err(CoreError::GaugeDiscontinuity {
                    band: s,
                    quasicharge: bands.quasicharge_grid[i],
                    overlap: overlap.abs(),
                });
            }
            if overlap < 0.0 {
                out[i].column_mut(s).neg_mut();
            }
        }
    }
    Ok(out)
}

/// Interband coupling used in the multi-band dual Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterbandModel {
    Off,
    /// Deep-well closed form, diagonal in the fluxon number.
    Harmonic,
    /// Fourier transform of the finite-difference `Ω^{r,s}(n)`.
    Numeric,
}

/// Parameters of the dual description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualParams {
    /// Single phase-slip amplitude (GHz), the half-flux splitting.
    pub e_s1: f64,
    /// Double phase-slip amplitude (GHz).
    pub e_s2: f64,
    /// Renormalized inductive energy (GHz).
    pub e_l_star: f64,
    pub m_max: usize,
    pub s_max: usize,
}

impl DualParams {
    pub fn new(e_s1: f64, e_s2: f64, e_l_star: f64) -> Result<Self> {
        let p = DualParams {
            e_s1,
            e_s2,
            e_l_star,
            m_max: DEFAULT_M_MAX,
            s_max: DEFAULT_S_MAX,
        };
        p.validate()?;
        Ok(p)
    }

    /// `e_s2 = 0` is allowed: it is the single-amplitude model.
    pub fn validate(&self) -> Result<()> {
        if !(self.e_s1 > 0.0 && self.e_s1.is_finite()) {
            return Err(CoreError::invalid("e_s1", format!("must be > 0, got {}", self.e_s1)));
        }
        if !(self.e_s2 >= 0.0 && self.e_s2.is_finite()) {
            return Err(CoreError::invalid("e_s2", format!("must be >= 0, got {}", self.e_s2)));
        }
        if !(self.e_l_star > 0.0 && self.e_l_star.is_finite()) {
            return Err(CoreError::invalid(
                "e_l_star",
                format!("must be > 0, got {}", self.e_l_star),
            ));
        }
        if self.m_max < MIN_M_MAX {
            return Err(CoreError::invalid("m_max", format!("must be >= {MIN_M_MAX}")));
        }
        Ok(())
    }
}

fn fluxon_count(m_max: usize) -> usize {
    2 * m_max + 1
}

/// Multi-band dual Hamiltonian on `|m, s⟩`, `m ∈ [−m_max, m_max]`,
/// `s ≤ dp.s_max`, using the Fourier amplitudes of `bands`; the interband
/// coupling is the harmonic one when `include_interband` is set.
pub fn build_dual_hamiltonian(
    bands: &BandSet,
    dp: &DualParams,
    e_l: f64,
    flux: f64,
    include_interband: bool,
) -> Result<HermitianOperator> {
    let model = if include_interband {
        InterbandModel::Harmonic
    } else {
        InterbandModel::Off
    };
    build_dual_hamiltonian_with(bands, dp, e_l, flux, model)
}

/// [`build_dual_hamiltonian`] with an explicit interband model.
pub fn build_dual_hamiltonian_with(
    bands: &BandSet,
    dp: &DualParams,
    e_l: f64,
    flux: f64,
    model: InterbandModel,
) -> Result<HermitianOperator> {
    HermitianOperator::new(DualOperator::new(bands, dp, e_l, model)?.matrix(flux)?)
}

/// Flux-independent pieces of the multi-band dual Hamiltonian.
#[derive(Debug, Clone)]
pub struct DualOperator {
    m_max: usize,
    s_max: usize,
    e_l: f64,
    /// `Ω / 2π` in the `|m, s⟩` basis.
    omega: DMatrix<Complex64>,
    /// Phase-slip and band-offset terms.
    slips: DMatrix<Complex64>,
}

impl DualOperator {
    pub fn new(bands: &BandSet, dp: &DualParams, e_l: f64, model: InterbandModel) -> Result<Self> {
        if dp.m_max < MIN_M_MAX {
            return Err(CoreError::invalid("m_max", format!("must be >= {MIN_M_MAX}")));
        }
        if !(e_l > 0.0 && e_l.is_finite()) {
            return Err(CoreError::invalid("e_l", "must be > 0"));
        }
        if bands.fourier.is_empty() {
            return Err(CoreError::invalid("bands", "Fourier amplitudes not computed"));
        }
        if dp.s_max > bands.s_max() {
            return Err(CoreError::TooManyLevels {
                requested: dp.s_max + 1,
                available: bands.band_count(),
            });
        }
        let nm = fluxon_count(dp.m_max);
        let ns = dp.s_max + 1;
        let idx = |m: usize, s: usize| s * nm + m;
        let size = nm * ns;

        let mut omega = DMatrix::<Complex64>::zeros(size, size);
        match model {
            InterbandModel::Off => {}
            InterbandModel::Harmonic => {
                if bands.e_j.is_nan() || bands.e_j <= 0.0 {
                    return Err(CoreError::invalid("e_j", "interband coupling needs E_J > 0"));
                }
                for r in 0..ns {
                    for s in 0..ns {
                        let w = harmonic_omega(bands.e_j, bands.e_c, r, s) / (2.0 * PI);
                        if w != 0.0 {
                            for m in 0..nm {
                                omega[(idx(m, r), idx(m, s))] = Complex64::new(w, 0.0);
                            }
                        }
                    }
                }
            }
            InterbandModel::Numeric => {
                let couplings = interband_omega(bands, OmegaMode::Numeric)?;
                let grid = &bands.quasicharge_grid;
                let h = grid[1] - grid[0];
                let last = grid.len() - 1;
                for c in couplings.iter().filter(|c| c.r < ns && c.s < ns) {
                    // ⟨p,r|Ω|m,s⟩ = ∫ Ω^{r,s}(n) exp(−2πi(m−p)n) dn
                    let transform = |shift: i64| -> Complex64 {
                        let term = |i: usize| {
                            let phase = -2.0 * PI * shift as f64 * grid[i];
                            c.values[i] * Complex64::new(phase.cos(), phase.sin())
                        };
                        let inner: Complex64 = (1..last).map(term).sum();
                        (inner + 0.5 * (term(0) + term(last))) * h
                    };
                    let table: Vec<Complex64> =
                        (0..2 * nm - 1).map(|d| transform(d as i64 - (nm as i64 - 1))).collect();
                    for p in 0..nm {
                        for m in 0..nm {
                            let shift = m as i64 - p as i64 + (nm as i64 - 1);
                            omega[(idx(p, c.r), idx(m, c.s))] = table[shift as usize] / (2.0 * PI);
                        }
                    }
                }
            }
        }

        let mut slips = DMatrix::<Complex64>::zeros(size, size);
        for s in 0..ns {
            for (k, &e) in bands.fourier[s].iter().enumerate() {
                if k == 0 {
                    for m in 0..nm {
                        slips[(idx(m, s), idx(m, s))] += e;
                    }
                } else {
                    for m in 0..nm.saturating_sub(k) {
                        slips[(idx(m + k, s), idx(m, s))] += 0.5 * e;
                        slips[(idx(m, s), idx(m + k, s))] += 0.5 * e;
                    }
                }
            }
        }
        Ok(DualOperator {
            m_max: dp.m_max,
            s_max: dp.s_max,
            e_l,
            omega,
            slips,
        })
    }

    pub fn dim(&self) -> usize {
        self.omega.nrows()
    }

    pub fn matrix(&self, flux: f64) -> Result<DMatrix<Complex64>> {
        if !flux.is_finite() {
            return Err(CoreError::invalid("flux", "must be finite"));
        }
        let nm = fluxon_count(self.m_max);
        let mut x = self.omega.clone();
        for s in 0..=self.s_max {
            for m in 0..nm {
                x[(s * nm + m, s * nm + m)] += m as f64 - self.m_max as f64 + flux;
            }
        }
        let mut h = (&x * &x) * Complex64::new(2.0 * PI * PI * self.e_l, 0.0) + &self.slips;
        // symmetrize away rounding
        let n = h.nrows();
        for i in 0..n {
            h[(i, i)].im = 0.0;
            for j in 0..i {
                let avg = 0.5 * (h[(i, j)] + h[(j, i)].conj());
                h[(i, j)] = avg;
                h[(j, i)] = avg.conj();
            }
        }
        Ok(h)
    }

    /// Ascending levels at `flux` and the largest edge-fluxon population
    /// among the lowest `k` eigenvectors.
    pub fn levels(&self, flux: f64, k: usize) -> Result<(Vec<f64>, f64)> {
        let h = self.matrix(flux)?;
        if k > h.nrows() {
            return Err(CoreError::TooManyLevels {
                requested: k,
                available: h.nrows(),
            });
        }
        let nm = fluxon_count(self.m_max);
        let (vals, vecs) = linalg::eigh_complex(&h);
        let mut edge = 0.0f64;
        for level in 0..k {
            let pop: f64 = (0..=self.s_max)
                .flat_map(|s| [s * nm, s * nm + nm - 1])
                .map(|row| vecs[(row, level)].norm_sqr())
                .sum();
            edge = edge.max(pop);
        }
        Ok((vals[..k].to_vec(), edge))
    }
}

/// Two-amplitude dual Hamiltonian on `m ∈ [−m_max, m_max]`:
/// `2π²E_L*(m + φ)² + (E_S1/2)(|m+1⟩⟨m| + h.c.) + (E_S2/2)(|m+2⟩⟨m| + h.c.)`.
///
/// The sign of `E_S1` can be gauged away by `|m⟩ → (−1)^m |m⟩`; `E_S2` enters
/// with the sign for which its bi-fluxon coupling adds to the second-order
/// single-slip path.
pub fn build_two_amplitude_hamiltonian(dp: &DualParams, flux: f64) -> Result<HermitianOperator> {
    HermitianOperator::from_real(two_amplitude_matrix(dp, flux)?)
}

pub(crate) fn two_amplitude_matrix(dp: &DualParams, flux: f64) -> Result<DMatrix<f64>> {
    dp.validate()?;
    if !flux.is_finite() {
        return Err(CoreError::invalid("flux", "must be finite"));
    }
    let nm = fluxon_count(dp.m_max);
    let mut h = DMatrix::zeros(nm, nm);
    for m in 0..nm {
        let w = m as f64 - dp.m_max as f64 + flux;
        h[(m, m)] = 2.0 * PI * PI * dp.e_l_star * w * w;
        if m + 1 < nm {
            h[(m, m + 1)] = 0.5 * dp.e_s1;
            h[(m + 1, m)] = 0.5 * dp.e_s1;
        }
        if m + 2 < nm {
            h[(m, m + 2)] = 0.5 * dp.e_s2;
            h[(m + 2, m)] = 0.5 * dp.e_s2;
        }
    }
    Ok(h)
}

/// Ascending levels of the two-amplitude model at `flux`.
pub fn two_amplitude_levels(dp: &DualParams, flux: f64, k: usize) -> Result<Vec<f64>> {
    let h = two_amplitude_matrix(dp, flux)?;
    if k > h.nrows() {
        return Err(CoreError::TooManyLevels {
            requested: k,
            available: h.nrows(),
        });
    }
    let mut v = linalg::eigvals_real(&h);
    v.truncate(k);
    Ok(v)
}

/// Spectrum of the two-amplitude model over `flux_grid`.
pub fn two_amplitude_spectrum(dp: &DualParams, flux_grid: &[f64], k: usize) -> Result<SpectrumTable> {
    let raw = spectra::sweep(flux_grid, |flux| two_amplitude_levels(dp, flux, k))?;
    Ok(SpectrumTable::from_levels(flux_grid.to_vec(), raw))
}

/// Multi-band dual spectrum together with truncation diagnostics.
#[derive(Debug, Clone)]
pub struct DualSpectrum {
    pub table: SpectrumTable,
    /// Largest population of the outermost fluxon states in the kept levels.
    pub max_edge_population: f64,
    pub warnings: Vec<String>,
}

/// Sweep of the multi-band dual Hamiltonian over `flux_grid`.
pub fn dual_spectrum(
    bands: &BandSet,
    dp: &DualParams,
    e_l: f64,
    flux_grid: &[f64],
    k: usize,
    model: InterbandModel,
) -> Result<DualSpectrum> {
    let op = DualOperator::new(bands, dp, e_l, model)?;
    let rows = spectra::sweep(flux_grid, |flux| op.levels(flux, k))?;
    let mut warnings = Vec::new();
    let mut max_edge = 0.0f64;
    let mut raw = Vec::with_capacity(rows.len());
    for (flux, (levels, edge)) in flux_grid.iter().zip(rows) {
        if edge > EDGE_POPULATION_TOL {
            warnings.push(format!(
                "flux {flux}: edge fluxon population {edge:.2e} exceeds {EDGE_POPULATION_TOL:e}; increase m_max"
            ));
        }
        max_edge = max_edge.max(edge);
        raw.push(levels);
    }
    Ok(DualSpectrum {
        table: SpectrumTable::from_levels(flux_grid.to_vec(), raw),
        max_edge_population: max_edge,
        warnings,
    })
}

/// `E_L (1 − E_L / E_J)`.
pub fn renormalized_el(e_l: f64, e_j: f64) -> Result<f64> {
    if !(e_j > e_l && e_l > 0.0) {
        return Err(CoreError::invalid("e_l", "requires e_j > e_l > 0"));
    }
    Ok(e_l * (1.0 - e_l / e_j))
}

/// Effective inductive energy from the curvature of the ground level at zero
/// flux, `(d²E_0/dφ²) / 4π²`, by a central second difference.
pub fn ground_curvature_el(op: &DualOperator, step: f64) -> Result<f64> {
    let e0 = |flux: f64| -> Result<f64> { Ok(op.levels(flux, 1)?.0[0]) };
    let curvature = (e0(step)? - 2.0 * e0(0.0)? + e0(-step)?) / (step * step);
    Ok(curvature / (4.0 * PI * PI))
}
