//! Fluxonium capacitively coupled to a readout resonator.
//!
//! The fluxonium is projected onto its `dim_q` lowest eigenstates and tensored
//! with an `n_photons`-level oscillator:
//!
//! ```text
//! H = H_q ⊗ 1 + 1 ⊗ f_r (a†a + 1/2) + g n̂ ⊗ (a† + a)
//! ```
//!
//! In the fluxonium eigenbasis `n̂ = i A` with `A` real antisymmetric. Rotating
//! the resonator by `exp(iπ a†a / 2)` maps `a + a† → i(a† − a)`, which turns the
//! coupling into the real symmetric `−g A ⊗ (a† − a)`. The rotation is diagonal
//! in the product basis, so spectra and overlap magnitudes are unchanged; all
//! internal diagonalizations use this real form.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::spectra::{self, CircuitParams, FluxoniumEigensystem, HermitianOperator, SpectrumTable};

pub const DEFAULT_QUBIT_LEVELS: usize = 8;
pub const DEFAULT_PHOTONS: usize = 6;
pub const MIN_QUBIT_LEVELS: usize = 3;

/// Readout resonator: frequency, charge coupling and linewidth κ/2π, all GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    pub f_r: f64,
    pub g: f64,
    pub kappa: f64,
    pub n_photons: usize,
}

impl ResonatorParams {
    pub fn new(f_r: f64, g: f64, kappa: f64, n_photons: usize) -> Result<Self> {
        let r = ResonatorParams {
            f_r,
            g,
            kappa,
            n_photons,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_r > 0.0 && self.f_r.is_finite()) {
            return Err(CoreError::invalid("f_r", format!("must be > 0, got {}", self.f_r)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(CoreError::invalid("g", format!("must be >= 0, got {}", self.g)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(CoreError::invalid("kappa", format!("must be > 0, got {}", self.kappa)));
        }
        if self.n_photons < 2 {
            return Err(CoreError::invalid("n_photons", "must be >= 2"));
        }
        Ok(())
    }

    pub fn with_g(self, g: f64) -> Self {
        ResonatorParams { g, ..self }
    }
}

/// Truncations used for the joint system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointTruncation {
    /// Oscillator basis of the bare fluxonium.
    pub dim: usize,
    /// Fluxonium eigenstates kept.
    pub qubit_levels: usize,
}

impl Default for JointTruncation {
    fn default() -> Self {
        JointTruncation {
            dim: spectra::DEFAULT_DIM,
            qubit_levels: DEFAULT_QUBIT_LEVELS,
        }
    }
}

fn check_levels(dim_q: usize) -> Result<()> {
    if dim_q < MIN_QUBIT_LEVELS {
        return Err(CoreError::invalid(
            "dim_q",
            format!("at least {MIN_QUBIT_LEVELS} qubit levels required, got {dim_q}"),
        ));
    }
    Ok(())
}

fn joint_real(sys: &FluxoniumEigensystem, rp: &ResonatorParams, dim_q: usize) -> DMatrix<f64> {
    let nph = rp.n_photons;
    let mut h = DMatrix::zeros(dim_q * nph, dim_q * nph);
    for q in 0..dim_q {
        for n in 0..nph {
            h[(q * nph + n, q * nph + n)] = sys.energies[q] + rp.f_r * (n as f64 + 0.5);
        }
    }
    if rp.g > 0.0 {
        let a = sys.charge_matrix(dim_q);
        let coupling = linalg::kron(&a, &linalg::ladder_diff(nph)) * (-rp.g);
        h += coupling;
    }
    h
}

fn projected_system(cp: &CircuitParams, trunc: JointTruncation) -> Result<FluxoniumEigensystem> {
    check_levels(trunc.qubit_levels)?;
    if trunc.qubit_levels > trunc.dim {
        return Err(CoreError::TooManyLevels {
            requested: trunc.qubit_levels,
            available: trunc.dim,
        });
    }
    FluxoniumEigensystem::compute(cp, trunc.dim)
}

/// Joint qubit–resonator Hamiltonian, in the literal `g n̂ (a† + a)` form.
pub fn build_joint_hamiltonian(cp: &CircuitParams, rp: &ResonatorParams, dim_q: usize) -> Result<HermitianOperator> {
    rp.validate()?;
    let trunc = JointTruncation {
        qubit_levels: dim_q,
        ..JointTruncation::default()
    };
    let sys = projected_system(cp, trunc)?;
    let nph = rp.n_photons;
    let mut h = DMatrix::<Complex64>::zeros(dim_q * nph, dim_q * nph);
    for q in 0..dim_q {
        for n in 0..nph {
            h[(q * nph + n, q * nph + n)] = Complex64::new(sys.energies[q] + rp.f_r * (n as f64 + 0.5), 0.0);
        }
    }
    let a = sys.charge_matrix(dim_q);
    let x = linalg::ladder_sum(nph);
    for q1 in 0..dim_q {
        for q2 in 0..dim_q {
            let nq = Complex64::new(0.0, a[(q1, q2)]);
            for n1 in 0..nph {
                for n2 in 0..nph {
                    h[(q1 * nph + n1, q2 * nph + n2)] += nq * x[(n1, n2)] * rp.g;
                }
            }
        }
    }
    HermitianOperator::new(h)
}

/// Ascending eigenvalues of the joint system (absolute, not ground-shifted).
pub fn joint_levels(cp: &CircuitParams, rp: &ResonatorParams, trunc: JointTruncation, k: usize) -> Result<Vec<f64>> {
    rp.validate()?;
    let sys = projected_system(cp, trunc)?;
    let h = joint_real(&sys, rp, trunc.qubit_levels);
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

/// Dressed eigensystem with each bare product state `|q, n⟩` mapped to the
/// dressed state of maximal overlap.
#[derive(Debug, Clone)]
pub struct DressedSystem {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub n_photons: usize,
    pub qubit_levels: usize,
}

impl DressedSystem {
    pub fn compute(cp: &CircuitParams, rp: &ResonatorParams, trunc: JointTruncation) -> Result<Self> {
        rp.validate()?;
        let sys = projected_system(cp, trunc)?;
        let h = joint_real(&sys, rp, trunc.qubit_levels);
        let (energies, vectors) = linalg::eigh_real(&h);
        Ok(DressedSystem {
            energies,
            vectors,
            n_photons: rp.n_photons,
            qubit_levels: trunc.qubit_levels,
        })
    }

    /// Index of the dressed state assigned to `|q, n⟩`.
    pub fn assign(&self, q: usize, n: usize) -> Result<usize> {
        let bare = q * self.n_photons + n;
        let (best, overlap) = (0..self.energies.len())
            .map(|d| (d, self.vectors[(bare, d)].powi(2)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty spectrum");
        if overlap < 0.5 {
            return Err(CoreError::AmbiguousAssignment { state: (q, n), overlap });
        }
        Ok(best)
    }

    pub fn energy(&self, q: usize, n: usize) -> Result<f64> {
        Ok(self.energies[self.assign(q, n)?])
    }

    /// `[E(b,1) − E(b,0)] − [E(a,1) − E(a,0)]`.
    pub fn shift(&self, a: usize, b: usize) -> Result<f64> {
        let pull = |q| -> Result<f64> { Ok(self.energy(q, 1)? - self.energy(q, 0)?) };
        Ok(pull(b)? - pull(a)?)
    }
}

/// Dispersive shift `χ_ab` in GHz at `flux` for the level pair `(a, b)`.
pub fn dispersive_shift(cp: &CircuitParams, rp: &ResonatorParams, levels: (usize, usize), flux: f64) -> Result<f64> {
    dispersive_shift_with(cp, rp, levels, flux, JointTruncation::default())
}

pub fn dispersive_shift_with(
    cp: &CircuitParams,
    rp: &ResonatorParams,
    levels: (usize, usize),
    flux: f64,
    trunc: JointTruncation,
) -> Result<f64> {
    let top = levels.0.max(levels.1);
    if top >= trunc.qubit_levels {
        return Err(CoreError::TooManyLevels {
            requested: top + 1,
            available: trunc.qubit_levels,
        });
    }
    let d = DressedSystem::compute(&cp.with_flux(flux), rp, trunc)?;
    d.shift(levels.0, levels.1)
}

/// Coupling `g` (GHz) for which `|χ01| = target` at `flux`.
///
/// `|χ01|` grows as `g²` at small coupling; the root is bracketed by doubling
/// and refined by bisection.
pub fn coupling_for_shift(cp: &CircuitParams, rp: &ResonatorParams, target: f64, flux: f64) -> Result<f64> {
    if target.is_nan() || target <= 0.0 {
        return Err(CoreError::invalid("target", "must be > 0"));
    }
    let chi = |g: f64| -> Result<f64> { Ok(dispersive_shift(cp, &rp.with_g(g), (0, 1), flux)?.abs() - target) };
    let mut lo = 0.0;
    let mut hi = 0.01;
    while chi(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 10.0 {
            return Err(CoreError::NoRoot(format!(
                "|chi01| stays below {target} GHz for g up to 10 GHz"
            )));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if chi(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lowest `k` joint levels over `flux_grid`, sorted ascending (ground shifted).
pub fn labeled_transitions(
    cp: &CircuitParams,
    rp: &ResonatorParams,
    flux_grid: &[f64],
    k: usize,
) -> Result<SpectrumTable> {
    labeled_transitions_with(cp, rp, flux_grid, k, JointTruncation::default())
}

pub fn labeled_transitions_with(
    cp: &CircuitParams,
    rp: &ResonatorParams,
    flux_grid: &[f64],
    k: usize,
    trunc: JointTruncation,
) -> Result<SpectrumTable> {
    cp.validate()?;
    rp.validate()?;
    let raw = spectra::sweep(flux_grid, |flux| joint_levels(&cp.with_flux(flux), rp, trunc, k))?;
    Ok(SpectrumTable::from_levels(flux_grid.to_vec(), raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_a() -> CircuitParams {
        CircuitParams::new(6.01, 1.59, 0.165, 0.0).unwrap()
    }

    fn resonator(g: f64) -> ResonatorParams {
        ResonatorParams::new(6.908, g, 0.0065, DEFAULT_PHOTONS).unwrap()
    }

    #[test]
    fn validation() {
        assert!(ResonatorParams::new(0.0, 0.1, 0.01, 4).is_err());
        assert!(ResonatorParams::new(6.0, -0.1, 0.01, 4).is_err());
        assert!(ResonatorParams::new(6.0, 0.1, 0.0, 4).is_err());
        assert!(ResonatorParams::new(6.0, 0.1, 0.01, 1).is_err());
        assert!(build_joint_hamiltonian(&sample_a(), &resonator(0.1), 2).is_err());
    }

    #[test]
    fn decoupled_levels_are_sums() {
        let rp = resonator(0.0);
        let h = build_joint_hamiltonian(&sample_a(), &rp, 4).unwrap();
        assert_eq!(h.dim(), 4 * DEFAULT_PHOTONS);
        let joint = spectra::eigen_spectrum(&h, h.dim()).unwrap();
        let q = FluxoniumEigensystem::compute(&sample_a(), spectra::DEFAULT_DIM).unwrap();
        let mut sums: Vec<f64> = (0..4)
            .flat_map(|i| (0..DEFAULT_PHOTONS).map(move |n| (i, n)))
            .map(|(i, n)| q.energies[i] + 6.908 * (n as f64 + 0.5))
            .collect();
        sums.sort_by(f64::total_cmp);
        for (a, b) in joint.iter().zip(&sums) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn literal_and_rotated_forms_agree() {
        let rp = resonator(0.3);
        let cp = sample_a().with_flux(0.2);
        let h = build_joint_hamiltonian(&cp, &rp, 5).unwrap();
        assert!(h.as_real().is_none());
        let literal = spectra::eigen_spectrum(&h, 10).unwrap();
        let trunc = JointTruncation {
            qubit_levels: 5,
            ..Default::default()
        };
        let rotated = joint_levels(&cp, &rp, trunc, 10).unwrap();
        for (a, b) in literal.iter().zip(&rotated) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn no_shift_without_coupling() {
        let chi = dispersive_shift(&sample_a(), &resonator(0.0), (0, 1), 0.0).unwrap();
        assert!(chi.abs() < 1e-9);
    }

    #[test]
    fn shift_is_antisymmetric() {
        let rp = resonator(0.5);
        let a = dispersive_shift(&sample_a(), &rp, (0, 1), 0.0).unwrap();
        let b = dispersive_shift(&sample_a(), &rp, (1, 0), 0.0).unwrap();
        assert_relative_eq!(a, -b, epsilon = 1e-15);
    }

    #[test]
    fn shift_scales_quadratically() {
        let g = 0.01;
        let a = dispersive_shift(&sample_a(), &resonator(g), (0, 1), 0.0).unwrap();
        let b = dispersive_shift(&sample_a(), &resonator(2.0 * g), (0, 1), 0.0).unwrap();
        let ratio = b / a;
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }
}
