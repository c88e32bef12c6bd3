//! Exact fluxonium Hamiltonian in the oscillator eigenbasis of its LC part.
//!
//! Energies are in GHz (h = 1) and external flux in units of the flux quantum.
//! The external flux is absorbed into the Josephson term by a phase-basis
//! displacement, so the operator that is diagonalized is
//!
//! ```text
//! H = ω_LC (a†a + 1/2) − E_J cos(φ̂ − 2π φ_ext),   φ̂ = φ_zpf (a + a†)
//! ```
//!
//! with `ω_LC = √(8 E_C E_L)` and `φ_zpf = (2 E_C / E_L)^{1/4}`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg;

pub const DEFAULT_DIM: usize = 120;
pub const DEFAULT_LEVELS: usize = 6;
pub const MIN_DIM: usize = 10;

/// Eigenvalue movement below which a level counts as converged: 1 kHz.
pub const CONVERGENCE_TOL_GHZ: f64 = 1e-6;

// Oscillator states beyond `dim` used when evaluating cos φ̂ spectrally.
const AUX_FACTOR: usize = 2;
// Tail weight above which an eigenvector is considered truncated.
const TAIL_WEIGHT_TOL: f64 = 1e-8;

/// Circuit energies (GHz) and external flux (Φ0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub e_j: f64,
    pub e_c: f64,
    pub e_l: f64,
    pub phi_ext: f64,
}

impl CircuitParams {
    pub fn new(e_j: f64, e_c: f64, e_l: f64, phi_ext: f64) -> Result<Self> {
        let p = CircuitParams { e_j, e_c, e_l, phi_ext };
        p.validate()?;
        Ok(p)
    }

    /// `E_J = 0` is accepted: it is the harmonic limit of the circuit.
    pub fn validate(&self) -> Result<()> {
        if !(self.e_j >= 0.0 && self.e_j.is_finite()) {
            return Err(CoreError::invalid("e_j", format!("must be >= 0, got {}", self.e_j)));
        }
        if !(self.e_c > 0.0 && self.e_c.is_finite()) {
            return Err(CoreError::invalid("e_c", format!("must be > 0, got {}", self.e_c)));
        }
        if !(self.e_l > 0.0 && self.e_l.is_finite()) {
            return Err(CoreError::invalid("e_l", format!("must be > 0, got {}", self.e_l)));
        }
        if !self.phi_ext.is_finite() {
            return Err(CoreError::invalid("phi_ext", "must be finite"));
        }
        Ok(())
    }

    pub fn with_flux(self, phi_ext: f64) -> Self {
        CircuitParams { phi_ext, ..self }
    }

    /// Josephson plasma frequency `√(8 E_J E_C)` in GHz.
    pub fn plasma_frequency(&self) -> f64 {
        (8.0 * self.e_j * self.e_c).sqrt()
    }

    /// Frequency of the LC oscillator `√(8 E_L E_C)` in GHz.
    pub fn lc_frequency(&self) -> f64 {
        (8.0 * self.e_l * self.e_c).sqrt()
    }

    /// Zero-point phase amplitude `(2 E_C / E_L)^{1/4}`.
    pub fn phi_zpf(&self) -> f64 {
        (2.0 * self.e_c / self.e_l).powf(0.25)
    }
}

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: DMatrix<Complex64>,
}

impl HermitianOperator {
    /// Wraps `entries`, rejecting matrices that are not square or deviate
    /// from their adjoint by more than `1e-12 · max|H|`.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(CoreError::invalid("entries", "matrix must be square"));
        }
        let deviation = hermitian_deviation(&entries);
        let scale = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(CoreError::NotHermitian { deviation });
        }
        Ok(HermitianOperator { entries })
    }

    pub fn from_real(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// The real part when every imaginary component vanishes.
    pub fn as_real(&self) -> Option<DMatrix<f64>> {
        if self.entries.iter().all(|z| z.im == 0.0) {
            Some(self.entries.map(|z| z.re))
        } else {
            None
        }
    }
}

/// `max |H − H†|`.
pub fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Operators whose matrix elements can be requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Charge,
    Phase,
}

/// One transition `i → j` at a flux point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub i: usize,
    pub j: usize,
    pub frequency: f64,
}

/// `|⟨i|op|j⟩|` at a flux point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixElement {
    pub op: OperatorKind,
    pub i: usize,
    pub j: usize,
    pub magnitude: f64,
}

/// Levels, transitions and optional matrix elements on a flux grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub flux_grid: Vec<f64>,
    /// Ascending, ground level subtracted.
    pub levels: Vec<Vec<f64>>,
    pub transitions: Vec<Vec<Transition>>,
    pub elements: Option<Vec<Vec<MatrixElement>>>,
}

impl SpectrumTable {
    /// Builds the table from raw (unshifted) ascending eigenvalues.
    pub fn from_levels(flux_grid: Vec<f64>, raw: Vec<Vec<f64>>) -> Self {
        let levels: Vec<Vec<f64>> = raw
            .into_iter()
            .map(|l| {
                let e0 = l.first().copied().unwrap_or(0.0);
                l.iter().map(|e| e - e0).collect()
            })
            .collect();
        let transitions = levels
            .iter()
            .map(|l| {
                let mut t = Vec::new();
                for i in 0..l.len() {
                    for j in i + 1..l.len() {
                        t.push(Transition {
                            i,
                            j,
                            frequency: l[j] - l[i],
                        });
                    }
                }
                t
            })
            .collect();
        SpectrumTable {
            flux_grid,
            levels,
            transitions,
            elements: None,
        }
    }

    /// `f_ij` at grid index `point`.
    pub fn frequency(&self, point: usize, i: usize, j: usize) -> Option<f64> {
        let l = self.levels.get(point)?;
        Some(l.get(j)? - l.get(i)?)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < MIN_DIM {
        return Err(CoreError::BasisTooSmall { dim, min: MIN_DIM });
    }
    Ok(())
}

/// Real symmetric matrix of the fluxonium Hamiltonian.
pub(crate) fn fluxonium_matrix(params: &CircuitParams, dim: usize) -> Result<DMatrix<f64>> {
    params.validate()?;
    check_dim(dim)?;
    let omega = params.lc_frequency();
    let shift = 2.0 * PI * params.phi_ext;
    let mut h = if params.e_j > 0.0 {
        let e_j = params.e_j;
        linalg::oscillator_function(dim, AUX_FACTOR * dim, params.phi_zpf(), |phi| {
            -e_j * (phi - shift).cos()
        })
    } else {
        DMatrix::zeros(dim, dim)
    };
    for k in 0..dim {
        h[(k, k)] += omega * (k as f64 + 0.5);
    }
    Ok(h)
}

/// Fluxonium Hamiltonian `4E_C n̂² − E_J cos φ̂ + (E_L/2)(φ̂ + 2πφ_ext)²` in the
/// oscillator basis.
pub fn build_fluxonium_hamiltonian(params: &CircuitParams, dim: usize) -> Result<HermitianOperator> {
    HermitianOperator::from_real(fluxonium_matrix(params, dim)?)
}

/// The `k` lowest eigenvalues of `h`, ascending.
pub fn eigen_spectrum(h: &HermitianOperator, k: usize) -> Result<Vec<f64>> {
    let deviation = hermitian_deviation(h.entries());
    let scale = h.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if deviation > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(CoreError::NotHermitian { deviation });
    }
    if k > h.dim() {
        return Err(CoreError::TooManyLevels {
            requested: k,
            available: h.dim(),
        });
    }
    let mut values = match h.as_real() {
        Some(m) => linalg::eigvals_real(&m),
        None => linalg::eigh_complex(h.entries()).0,
    };
    values.truncate(k);
    Ok(values)
}

/// Eigen-decomposition of the fluxonium at `params`, kept for operator
/// projections.
#[derive(Debug, Clone)]
pub struct FluxoniumEigensystem {
    pub params: CircuitParams,
    pub dim: usize,
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl FluxoniumEigensystem {
    pub fn compute(params: &CircuitParams, dim: usize) -> Result<Self> {
        let h = fluxonium_matrix(params, dim)?;
        let (energies, vectors) = linalg::eigh_real(&h);
        Ok(FluxoniumEigensystem {
            params: *params,
            dim,
            energies,
            vectors,
        })
    }

    /// Weight of eigenvector `level` in the top tenth of the basis.
    pub fn tail_weight(&self, level: usize) -> f64 {
        let start = self.dim - (self.dim / 10).max(1);
        self.vectors.column(level).iter().skip(start).map(|c| c * c).sum()
    }

    pub fn check_converged(&self, level: usize) -> Result<()> {
        if level >= self.dim || self.tail_weight(level) > TAIL_WEIGHT_TOL {
            return Err(CoreError::UnconvergedLevel { level, dim: self.dim });
        }
        Ok(())
    }

    /// Real antisymmetric `A` with `n̂ = i A` in the eigenbasis, lowest `k` states.
    pub fn charge_matrix(&self, k: usize) -> DMatrix<f64> {
        let n = linalg::ladder_diff(self.dim) / (2.0 * self.params.phi_zpf());
        let v = self.vectors.columns(0, k);
        v.transpose() * n * v
    }

    /// Physical phase operator `φ̂` in the eigenbasis, lowest `k` states.
    pub fn phase_matrix(&self, k: usize) -> DMatrix<f64> {
        let mut phi = linalg::ladder_sum(self.dim) * self.params.phi_zpf();
        let shift = 2.0 * PI * self.params.phi_ext;
        for d in 0..self.dim {
            phi[(d, d)] -= shift;
        }
        let v = self.vectors.columns(0, k);
        v.transpose() * phi * v
    }

    pub fn element(&self, op: OperatorKind, i: usize, j: usize) -> Result<f64> {
        let top = i.max(j);
        self.check_converged(top)?;
        let vi = self.vectors.column(i);
        let vj = self.vectors.column(j);
        let value = match op {
            OperatorKind::Charge => {
                let n = linalg::ladder_diff(self.dim) / (2.0 * self.params.phi_zpf());
                vi.dot(&(n * vj))
            }
            OperatorKind::Phase => {
                let mut phi = linalg::ladder_sum(self.dim) * self.params.phi_zpf();
                let shift = 2.0 * PI * self.params.phi_ext;
                for d in 0..self.dim {
                    phi[(d, d)] -= shift;
                }
                vi.dot(&(phi * vj))
            }
        };
        Ok(value.abs())
    }
}

/// `|⟨i| op |j⟩|` in the eigenbasis of the fluxonium.
pub fn matrix_element(params: &CircuitParams, op: OperatorKind, i: usize, j: usize, dim: usize) -> Result<f64> {
    FluxoniumEigensystem::compute(params, dim)?.element(op, i, j)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CoreError::invalid("flux_grid", "must not be empty"));
    }
    if let Some(bad) = grid.iter().find(|f| !f.is_finite()) {
        return Err(CoreError::invalid("flux_grid", format!("non-finite value {bad}")));
    }
    Ok(())
}

/// Applies `f` to every flux value, tagging failures with the offending flux.
pub(crate) fn sweep<T, F>(grid: &[f64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(f64) -> Result<T> + Sync,
{
    check_grid(grid)?;
    grid.par_iter()
        .map(|&flux| f(flux).map_err(|e| CoreError::at_flux(flux, e)))
        .collect()
}

/// Lowest `k` levels of the exact model over `flux_grid`.
pub fn flux_sweep(params: &CircuitParams, flux_grid: &[f64], k: usize, dim: usize) -> Result<SpectrumTable> {
    params.validate()?;
    check_dim(dim)?;
    if k > dim {
        return Err(CoreError::TooManyLevels {
            requested: k,
            available: dim,
        });
    }
    let raw = sweep(flux_grid, |flux| {
        let h = fluxonium_matrix(&params.with_flux(flux), dim)?;
        let mut v = linalg::eigvals_real(&h);
        v.truncate(k);
        Ok(v)
    })?;
    Ok(SpectrumTable::from_levels(flux_grid.to_vec(), raw))
}

/// Like [`flux_sweep`] but also records `|⟨i|op|j⟩|` for every `i < j < k`.
pub fn flux_sweep_with_elements(
    params: &CircuitParams,
    flux_grid: &[f64],
    k: usize,
    dim: usize,
) -> Result<SpectrumTable> {
    params.validate()?;
    check_dim(dim)?;
    let rows = sweep(flux_grid, |flux| {
        let sys = FluxoniumEigensystem::compute(&params.with_flux(flux), dim)?;
        let levels = sys.energies[..k.min(dim)].to_vec();
        let charge = sys.charge_matrix(k);
        let phase = sys.phase_matrix(k);
        let mut elements = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                elements.push(MatrixElement {
                    op: OperatorKind::Charge,
                    i,
                    j,
                    magnitude: charge[(i, j)].abs(),
                });
                elements.push(MatrixElement {
                    op: OperatorKind::Phase,
                    i,
                    j,
                    magnitude: phase[(i, j)].abs(),
                });
            }
        }
        Ok((levels, elements))
    })?;
    let (raw, elements): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let mut table = SpectrumTable::from_levels(flux_grid.to_vec(), raw);
    table.elements = Some(elements);
    Ok(table)
}

fn lowest_levels(params: &CircuitParams, k: usize, dim: usize) -> Result<Vec<f64>> {
    let mut v = linalg::eigvals_real(&fluxonium_matrix(params, dim)?);
    v.truncate(k);
    Ok(v)
}

fn max_shift(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Smallest basis size `D ≤ 4·dim` such that doubling `D` moves none of the
/// `k` lowest levels by more than 1 kHz.
///
/// Sizes `dim, 2·dim, 4·dim` are tried first; once one passes, the gap to the
/// previous failing size is bisected.
pub fn convergence_check(params: &CircuitParams, k: usize, dim: usize) -> Result<usize> {
    params.validate()?;
    check_dim(dim)?;
    if k > dim {
        return Err(CoreError::TooManyLevels {
            requested: k,
            available: dim,
        });
    }
    let budget = 4 * dim;
    let passes = |d: usize| -> Result<(bool, f64)> {
        let a = lowest_levels(params, k, d)?;
        let b = lowest_levels(params, k, 2 * d)?;
        let r = max_shift(&a, &b);
        Ok((r <= CONVERGENCE_TOL_GHZ, r))
    };

    let mut worst = 0.0f64;
    let mut last_fail: Option<usize> = None;
    let mut d = dim;
    let mut found = None;
    while d <= budget {
        let (ok, r) = passes(d)?;
        if ok {
            found = Some(d);
            break;
        }
        worst = r;
        last_fail = Some(d);
        d *= 2;
    }
    let Some(mut hi) = found else {
        return Err(CoreError::NotConverged {
            budget,
            residual_ghz: worst,
        });
    };
    if let Some(mut lo) = last_fail {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if passes(mid)?.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(hi)
}
