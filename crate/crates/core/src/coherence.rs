//! Decoherence rates: dielectric loss, 1/f flux noise, thermal photons in the
//! readout resonator and the thermally activated 1→2 channel.
//!
//! Inputs are in GHz (h = 1) like the rest of the crate; rates come out in
//! s⁻¹. Conversions to angular frequency and Joules happen only here.

use std::f64::consts::{LN_2, PI};

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dressed::{self, ResonatorParams};
use crate::error::{CoreError, Result};
use crate::spectra::{CircuitParams, FluxoniumEigensystem, OperatorKind, DEFAULT_DIM};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Flux steps (Φ0) for the first and second derivative of ω01.
pub const SLOPE_STEP: f64 = 1e-4;
pub const CURVATURE_STEP: f64 = 1e-3;

/// A point counts as a sweet spot when its slope is below this fraction of
/// the fluxon slope `4π²E_L`.
pub const SWEET_SPOT_FRACTION: f64 = 1e-3;

pub const TRACE_DRIFT_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

fn angular(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz * 1e9
}

fn joules(f_ghz: f64) -> f64 {
    PLANCK * f_ghz * 1e9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Dielectric quality factor at `f_ref`.
    pub q_cap_ref: f64,
    /// GHz.
    pub f_ref: f64,
    /// Exponent of `Q_cap(ω) = q_cap_ref (f_ref / f)^ε`.
    pub epsilon: f64,
    /// Bath temperature, K.
    pub t_eff: f64,
    /// 1/f flux noise amplitude, Φ0².
    pub a_phi: f64,
    /// Mean thermal photon number in the resonator.
    pub n_th: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_cap_ref > 0.0 && self.q_cap_ref.is_finite()) {
            return Err(CoreError::invalid("q_cap_ref", "must be > 0"));
        }
        if !(self.f_ref > 0.0 && self.f_ref.is_finite()) {
            return Err(CoreError::invalid("f_ref", "must be > 0"));
        }
        if !self.epsilon.is_finite() {
            return Err(CoreError::invalid("epsilon", "must be finite"));
        }
        if !(self.t_eff > 0.0 && self.t_eff.is_finite()) {
            return Err(CoreError::invalid(
                "t_eff",
                "must be > 0; use the zero-temperature bath for the T → 0 limit",
            ));
        }
        if !(self.a_phi >= 0.0 && self.a_phi.is_finite()) {
            return Err(CoreError::invalid("a_phi", "must be >= 0"));
        }
        check_nth(self.n_th)
    }

    pub fn q_cap_at(&self, f: f64) -> f64 {
        self.q_cap_ref * (self.f_ref / f).powf(self.epsilon)
    }
}

fn check_nth(n_th: f64) -> Result<()> {
    if !(0.0..1.0).contains(&n_th) {
        return Err(CoreError::invalid(
            "n_th",
            format!("must satisfy 0 <= n_th < 1, got {n_th}"),
        ));
    }
    Ok(())
}

/// Thermal occupation of the dielectric bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bath {
    /// Bose–Einstein at `NoiseParams::t_eff`.
    Thermal,
    /// `coth → 1`, no upward transitions.
    ZeroTemperature,
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(CoreError::invalid(name, format!("must be > 0, got {v}")));
    }
    Ok(())
}

/// `ħω²/(4 E_C)·|φ|²` in s⁻¹, the dielectric rate times `Q_cap`.
fn dielectric_prefactor(e_c: f64, f: f64, phi: f64) -> f64 {
    let w = angular(f);
    HBAR * w * w / (4.0 * joules(e_c)) * phi * phi
}

fn coth_factor(f: f64, t_eff: f64, bath: Bath) -> f64 {
    match bath {
        Bath::ZeroTemperature => 1.0,
        Bath::Thermal => 1.0 / (joules(f) / (2.0 * BOLTZMANN * t_eff)).tanh(),
    }
}

/// Symmetrized dielectric transition rate (s⁻¹) at frequency `f` (GHz).
pub fn dielectric_rate(cp: &CircuitParams, noise: &NoiseParams, f: f64, phi: f64, bath: Bath) -> Result<f64> {
    cp.validate()?;
    noise.validate()?;
    check_positive("f", f)?;
    if !(phi >= 0.0 && phi.is_finite()) {
        return Err(CoreError::invalid("phi", "must be >= 0"));
    }
    Ok(dielectric_prefactor(cp.e_c, f, phi) / noise.q_cap_at(f) * coth_factor(f, noise.t_eff, bath))
}

/// Dielectric-loss `T1` in seconds.
pub fn t1_dielectric(cp: &CircuitParams, noise: &NoiseParams, f01: f64, phi01: f64) -> Result<f64> {
    t1_dielectric_with(cp, noise, f01, phi01, Bath::Thermal)
}

pub fn t1_dielectric_with(cp: &CircuitParams, noise: &NoiseParams, f01: f64, phi01: f64, bath: Bath) -> Result<f64> {
    check_positive("phi01", phi01)?;
    Ok(1.0 / dielectric_rate(cp, noise, f01, phi01, bath)?)
}

/// `q_cap_ref` that reproduces a measured `T1`. The `q_cap_ref` field of
/// `noise` is ignored.
pub fn qcap_from_t1(cp: &CircuitParams, noise: &NoiseParams, f01: f64, phi01: f64, t1: f64) -> Result<f64> {
    let probe = NoiseParams {
        q_cap_ref: 1.0,
        ..*noise
    };
    probe.validate()?;
    cp.validate()?;
    check_positive("f01", f01)?;
    check_positive("t1", t1)?;
    if !(phi01 > 0.0 && phi01.is_finite()) {
        return Err(CoreError::invalid(
            "phi01",
            "zero matrix element: the transition is protected and T1 does not constrain Q_cap",
        ));
    }
    let q_at_f = dielectric_prefactor(cp.e_c, f01, phi01) * coth_factor(f01, noise.t_eff, Bath::Thermal) * t1;
    Ok(q_at_f / (noise.f_ref / f01).powf(noise.epsilon))
}

/// First-order 1/f dephasing, `√(A ln 2)·|∂ω/∂Φ|`. `slope` in rad/s per Φ0.
pub fn gamma_phi_flux_first(a_phi: f64, slope: f64) -> f64 {
    (a_phi * LN_2).sqrt() * slope.abs()
}

/// Second-order 1/f dephasing, `(π/2)·A·|∂²ω/∂Φ²|`. `curvature` in rad/s per Φ0².
pub fn gamma_phi_flux_second(a_phi: f64, curvature: f64) -> f64 {
    0.5 * PI * a_phi * curvature.abs()
}

/// Dephasing from thermal photons in the readout resonator. `kappa` and
/// `chi01` are ordinary frequencies in GHz.
pub fn gamma_phi_thermal(n_th: f64, kappa: f64, chi01: f64) -> Result<f64> {
    check_nth(n_th)?;
    check_positive("kappa", kappa)?;
    let k = angular(kappa);
    let c = angular(chi01);
    Ok(n_th * k * c * c / (k * k + c * c))
}

pub fn nth_from_gamma(gamma_phi: f64, kappa: f64, chi01: f64) -> Result<f64> {
    check_positive("kappa", kappa)?;
    if !(gamma_phi >= 0.0 && gamma_phi.is_finite()) {
        return Err(CoreError::invalid("gamma_phi", "must be >= 0"));
    }
    if !(chi01 != 0.0 && chi01.is_finite()) {
        return Err(CoreError::invalid("chi01", "must be non-zero"));
    }
    let k = angular(kappa);
    let c = angular(chi01);
    let n = gamma_phi * (k * k + c * c) / (k * c * c);
    check_nth(n)?;
    Ok(n)
}

/// Thermal photon number implied by measured `T1` and echo `T2`, assuming the
/// pure dephasing is entirely photon shot noise.
pub fn nth_from_coherence(t1: f64, t2: f64, kappa: f64, chi01: f64) -> Result<f64> {
    check_positive("t1", t1)?;
    check_positive("t2", t2)?;
    let gamma_phi = 1.0 / t2 - 0.5 / t1;
    if gamma_phi < 0.0 {
        return Err(CoreError::invalid("t2", "T2 exceeds 2 T1"));
    }
    nth_from_gamma(gamma_phi, kappa, chi01)
}

/// Bose–Einstein temperature (K) for occupation `n_th` at `f` GHz.
pub fn teff_from_nth(n_th: f64, f: f64) -> Result<f64> {
    check_positive("n_th", n_th)?;
    check_positive("f", f)?;
    Ok(joules(f) / (BOLTZMANN * (1.0 / n_th).ln_1p()))
}

pub fn nth_from_teff(t_eff: f64, f: f64) -> Result<f64> {
    check_positive("t_eff", t_eff)?;
    check_positive("f", f)?;
    Ok(1.0 / (joules(f) / (BOLTZMANN * t_eff)).exp_m1())
}

/// `ω01·T1`.
pub fn quality_factor(f01: f64, t1: f64) -> f64 {
    angular(f01) * t1
}

/// Upward and downward dielectric rates of the 1↔2 transition, s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates12 {
    pub gamma_up: f64,
    pub gamma_down: f64,
}

/// Splits the symmetrized rate by detailed balance at `t_eff`.
pub fn gamma12_dielectric(cp: &CircuitParams, noise: &NoiseParams, f12: f64, phi12: f64) -> Result<Rates12> {
    let total = dielectric_rate(cp, noise, f12, phi12, Bath::Thermal)?;
    let n = nth_from_teff(noise.t_eff, f12)?;
    Ok(Rates12 {
        gamma_up: total * n / (2.0 * n + 1.0),
        gamma_down: total * (n + 1.0) / (2.0 * n + 1.0),
    })
}

/// Coherence of the 0–1 superposition in the three-level model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QutritDecay {
    pub t: Vec<f64>,
    /// `x(0)·exp(−Γ↑ t / 2)`.
    pub analytic: Vec<f64>,
    /// `2 Re ρ10` from the master equation.
    pub numeric: Vec<f64>,
    /// Diagonal of ρ at each time.
    pub populations: Vec<[f64; 3]>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

type Rho = Matrix3<Complex64>;

fn lindblad_rhs(rho: &Rho, jumps: &[Rho]) -> Rho {
    let mut out = Rho::zeros();
    for l in jumps {
        let ld = l.adjoint();
        let ldl = ld * l;
        out += l * rho * ld - (ldl * rho + rho * ldl) * Complex64::new(0.5, 0.0);
    }
    out
}

fn rk4_step(rho: &Rho, jumps: &[Rho], dt: f64) -> Rho {
    let h = Complex64::new(dt, 0.0);
    let half = Complex64::new(0.5 * dt, 0.0);
    let k1 = lindblad_rhs(rho, jumps);
    let k2 = lindblad_rhs(&(rho + k1 * half), jumps);
    let k3 = lindblad_rhs(&(rho + k2 * half), jumps);
    let k4 = lindblad_rhs(&(rho + k3 * h), jumps);
    rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * (h / 6.0)
}

fn min_eigenvalue(rho: &Rho) -> f64 {
    let herm = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    herm.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Integrates the three-level master equation in the rotating frame from
/// `(|0⟩ + |1⟩)/√2`, sampling at `t_grid` (s, non-decreasing, ≥ 0).
pub fn qutrit_dephasing(gamma_up: f64, gamma_down: f64, t_grid: &[f64]) -> Result<QutritDecay> {
    for (name, g) in [("gamma_up_12", gamma_up), ("gamma_down_12", gamma_down)] {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(CoreError::invalid(name, format!("must be >= 0, got {g}")));
        }
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(CoreError::invalid("t_grid", "times must be finite and >= 0"));
    }
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(CoreError::invalid("t_grid", "times must be non-decreasing"));
    }

    let mut up = Rho::zeros();
    up[(2, 1)] = Complex64::new(gamma_up.sqrt(), 0.0);
    let mut down = Rho::zeros();
    down[(1, 2)] = Complex64::new(gamma_down.sqrt(), 0.0);
    let jumps = [up, down];
    let rate_max = gamma_up.max(gamma_down);
    let dt_max = if rate_max > 0.0 { 0.01 / rate_max } else { f64::INFINITY };

    let mut rho = Rho::zeros();
    for i in 0..2 {
        for j in 0..2 {
            rho[(i, j)] = Complex64::new(0.5, 0.0);
        }
    }
    let x0 = 2.0 * rho[(1, 0)].re;

    let mut out = QutritDecay {
        t: t_grid.to_vec(),
        analytic: Vec::with_capacity(t_grid.len()),
        numeric: Vec::with_capacity(t_grid.len()),
        populations: Vec::with_capacity(t_grid.len()),
        max_trace_drift: 0.0,
        min_eigenvalue: min_eigenvalue(&rho),
    };
    let mut now = 0.0;
    for &t in t_grid {
        let span = t - now;
        if span > 0.0 && rate_max > 0.0 {
            let steps = (span / dt_max).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for _ in 0..steps {
                rho = rk4_step(&rho, &jumps, dt);
                let drift = (rho.trace().re - 1.0).abs();
                if drift > TRACE_DRIFT_TOL {
                    return Err(CoreError::TraceDrift { drift });
                }
                out.max_trace_drift = out.max_trace_drift.max(drift);
                let lam = min_eigenvalue(&rho);
                if lam < -POSITIVITY_TOL {
                    return Err(CoreError::NotPositive { min_eigenvalue: lam });
                }
                out.min_eigenvalue = out.min_eigenvalue.min(lam);
            }
        }
        now = t;
        out.analytic.push(x0 * (-0.5 * gamma_up * t).exp());
        out.numeric.push(2.0 * rho[(1, 0)].re);
        out.populations.push([rho[(0, 0)].re, rho[(1, 1)].re, rho[(2, 2)].re]);
    }
    Ok(out)
}

fn f01_at(cp: &CircuitParams, flux: f64, dim: usize) -> Result<f64> {
    let sys = FluxoniumEigensystem::compute(&cp.with_flux(flux), dim)?;
    Ok(sys.energies[1] - sys.energies[0])
}

/// `(∂ω01/∂Φ, ∂²ω01/∂Φ²)` in rad/s per Φ0 and per Φ0², by central differences.
pub fn flux_derivatives(cp: &CircuitParams, flux: f64, dim: usize) -> Result<(f64, f64)> {
    let f = |x: f64| f01_at(cp, x, dim);
    let slope = (f(flux + SLOPE_STEP)? - f(flux - SLOPE_STEP)?) / (2.0 * SLOPE_STEP);
    let h = CURVATURE_STEP;
    let curvature = (f(flux + h)? - 2.0 * f(flux)? + f(flux - h)?) / (h * h);
    Ok((angular(slope), angular(curvature)))
}

/// A measured echo coherence time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Point {
    pub flux: f64,
    /// s.
    pub t2: f64,
    /// Standard deviation of `t2`, s.
    pub sigma: f64,
}

/// A measured energy relaxation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Point {
    pub flux: f64,
    /// s.
    pub t1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxNoiseFit {
    /// √A_φ in Φ0.
    pub sqrt_a_phi: f64,
    /// Standard error of `sqrt_a_phi`.
    pub sigma: f64,
    /// Measured minus model `Γ2` (s⁻¹) for each point used.
    pub residuals: Vec<f64>,
    /// Points dropped as sweet spots.
    pub excluded: Vec<f64>,
}

fn t1_at(t1_data: &[T1Point], flux: f64) -> Result<f64> {
    let mut pts = t1_data.to_vec();
    pts.sort_by(|a, b| a.flux.total_cmp(&b.flux));
    let (first, last) = match (pts.first(), pts.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(CoreError::invalid("t1_data", "must not be empty")),
    };
    if flux <= first.flux {
        return Ok(first.t1);
    }
    if flux >= last.flux {
        return Ok(last.t1);
    }
    let k = pts.partition_point(|p| p.flux <= flux);
    let (a, b) = (pts[k - 1], pts[k]);
    let w = (flux - a.flux) / (b.flux - a.flux);
    Ok(a.t1 + w * (b.t1 - a.t1))
}

/// Fits √A_φ to `Γ2 = Γ1/2 + √(A ln 2)|∂ω01/∂Φ|` by weighted least squares.
/// `Γ1` is interpolated linearly from `t1_data`.
pub fn flux_noise_fit(t2_data: &[T2Point], t1_data: &[T1Point], cp: &CircuitParams) -> Result<FluxNoiseFit> {
    cp.validate()?;
    if t1_data.iter().any(|p| !(p.t1 > 0.0 && p.flux.is_finite())) {
        return Err(CoreError::invalid("t1_data", "T1 values must be > 0"));
    }
    if t2_data
        .iter()
        .any(|p| !(p.t2 > 0.0 && p.sigma > 0.0 && p.flux.is_finite()))
    {
        return Err(CoreError::invalid("t2_data", "T2 and sigma must be > 0"));
    }
    let threshold = SWEET_SPOT_FRACTION * angular(4.0 * PI * PI * cp.e_l);
    let slopes: Vec<f64> = t2_data
        .par_iter()
        .map(|p| {
            let f = |x: f64| f01_at(cp, x, DEFAULT_DIM);
            Ok(angular((f(p.flux + SLOPE_STEP)? - f(p.flux - SLOPE_STEP)?) / (2.0 * SLOPE_STEP)).abs())
        })
        .collect::<Result<_>>()?;

    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for (p, &s) in t2_data.iter().zip(&slopes) {
        if s < threshold {
            excluded.push(p.flux);
        } else {
            let y = 1.0 / p.t2 - 0.5 / t1_at(t1_data, p.flux)?;
            let sigma_y = p.sigma / (p.t2 * p.t2);
            used.push((LN_2.sqrt() * s, y, sigma_y));
        }
    }
    if used.len() < 3 {
        return Err(CoreError::Unidentifiable(format!(
            "{} of {} points lie away from sweet spots; at least 3 are needed",
            used.len(),
            t2_data.len()
        )));
    }
    let sxx: f64 = used.iter().map(|(x, _, s)| x * x / (s * s)).sum();
    let sxy: f64 = used.iter().map(|(x, y, s)| x * y / (s * s)).sum();
    let a = sxy / sxx;
    Ok(FluxNoiseFit {
        sqrt_a_phi: a,
        sigma: 1.0 / sxx.sqrt(),
        residuals: used.iter().map(|(x, y, _)| y - a * x).collect(),
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma1Breakdown {
    pub dielectric: f64,
}

impl Gamma1Breakdown {
    pub fn total(&self) -> f64 {
        self.dielectric
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPhiBreakdown {
    pub flux_first: f64,
    pub flux_second: f64,
    pub thermal_photon: f64,
    /// `Γ↑12 / 2`.
    pub qutrit: f64,
}

impl GammaPhiBreakdown {
    pub fn total(&self) -> f64 {
        self.flux_first + self.flux_second + self.thermal_photon + self.qutrit
    }

    pub fn dominant(&self) -> &'static str {
        [
            ("flux_first", self.flux_first),
            ("flux_second", self.flux_second),
            ("thermal_photon", self.thermal_photon),
            ("qutrit", self.qutrit),
        ]
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(n, _)| n)
        .unwrap_or("flux_first")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub flux: f64,
    /// GHz.
    pub f01: f64,
    pub gamma_1: Gamma1Breakdown,
    pub gamma_phi: GammaPhiBreakdown,
    /// s.
    pub t1: f64,
    /// s.
    pub t2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceBudget {
    pub rows: Vec<BudgetRow>,
}

impl CoherenceBudget {
    /// Checks `T2 ≤ 2·T1` and non-negative rates on every row.
    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            let g = &r.gamma_phi;
            let rates = [
                r.gamma_1.dielectric,
                g.flux_first,
                g.flux_second,
                g.thermal_photon,
                g.qutrit,
            ];
            if rates.iter().any(|v| v.is_nan() || *v < 0.0) {
                return Err(CoreError::at_flux(
                    r.flux,
                    CoreError::invalid("rates", "negative or NaN rate"),
                ));
            }
            if r.t2 > 2.0 * r.t1 * (1.0 + 1e-12) {
                return Err(CoreError::at_flux(r.flux, CoreError::invalid("t2", "T2 exceeds 2 T1")));
            }
        }
        Ok(())
    }
}

fn budget_row(cp: &CircuitParams, rp: &ResonatorParams, noise: &NoiseParams, flux: f64) -> Result<BudgetRow> {
    let at = cp.with_flux(flux);
    let sys = FluxoniumEigensystem::compute(&at, DEFAULT_DIM)?;
    let f01 = sys.energies[1] - sys.energies[0];
    let f12 = sys.energies[2] - sys.energies[1];
    let phi01 = sys.element(OperatorKind::Phase, 0, 1)?;
    let phi12 = sys.element(OperatorKind::Phase, 1, 2)?;

    let dielectric =
        dielectric_rate(cp, noise, f01, phi01, Bath::Thermal).map_err(|e| CoreError::mechanism("dielectric", e))?;
    let (slope, curvature) =
        flux_derivatives(cp, flux, DEFAULT_DIM).map_err(|e| CoreError::mechanism("flux noise", e))?;
    let chi01 =
        dressed::dispersive_shift(cp, rp, (0, 1), flux).map_err(|e| CoreError::mechanism("thermal photon", e))?;
    let thermal_photon =
        gamma_phi_thermal(noise.n_th, rp.kappa, chi01).map_err(|e| CoreError::mechanism("thermal photon", e))?;
    let qutrit = gamma12_dielectric(cp, noise, f12, phi12)
        .map_err(|e| CoreError::mechanism("qutrit", e))?
        .gamma_up
        / 2.0;

    let gamma_1 = Gamma1Breakdown { dielectric };
    let gamma_phi = GammaPhiBreakdown {
        flux_first: gamma_phi_flux_first(noise.a_phi, slope),
        flux_second: gamma_phi_flux_second(noise.a_phi, curvature),
        thermal_photon,
        qutrit,
    };
    let g1 = gamma_1.total();
    Ok(BudgetRow {
        flux,
        f01,
        gamma_1,
        gamma_phi,
        t1: 1.0 / g1,
        t2: 1.0 / (0.5 * g1 + gamma_phi.total()),
    })
}

/// Predicted rates at every flux point.
pub fn coherence_budget(
    cp: &CircuitParams,
    rp: &ResonatorParams,
    noise: &NoiseParams,
    flux_grid: &[f64],
) -> Result<CoherenceBudget> {
    cp.validate()?;
    rp.validate()?;
    noise.validate()?;
    if flux_grid.is_empty() {
        return Err(CoreError::invalid("flux_grid", "must not be empty"));
    }
    let rows = flux_grid
        .par_iter()
        .map(|&f| {
            if !f.is_finite() {
                return Err(CoreError::invalid("flux_grid", "non-finite value"));
            }
            budget_row(cp, rp, noise, f).map_err(|e| CoreError::at_flux(f, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let budget = CoherenceBudget { rows };
    budget.validate()?;
    Ok(budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample_a() -> CircuitParams {
        CircuitParams::new(6.01, 1.59, 0.165, 0.0).unwrap()
    }

    fn noise() -> NoiseParams {
        NoiseParams {
            q_cap_ref: 6e4,
            f_ref: 6.0,
            epsilon: 0.2,
            t_eff: 0.02,
            a_phi: 4e-12,
            n_th: 4e-4,
        }
    }

    #[test]
    fn zero_temperature_coth() {
        assert_eq!(coth_factor(3.0, 0.02, Bath::ZeroTemperature), 1.0);
        assert!(coth_factor(3.0, 1e-4, Bath::Thermal) == 1.0);
        let mut n = noise();
        n.t_eff = 0.0;
        assert!(t1_dielectric(&sample_a(), &n, 3.1, 0.26).is_err());
    }

    #[test]
    fn t1_linear_in_quality() {
        let a = t1_dielectric(&sample_a(), &noise(), 3.1, 0.26).unwrap();
        let mut n = noise();
        n.q_cap_ref *= 2.0;
        let b = t1_dielectric(&sample_a(), &n, 3.1, 0.26).unwrap();
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-14);
    }

    #[test]
    fn qcap_round_trip() {
        let t1 = t1_dielectric(&sample_a(), &noise(), 3.1, 0.26).unwrap();
        let q = qcap_from_t1(&sample_a(), &noise(), 3.1, 0.26, t1).unwrap();
        assert_relative_eq!(q, 6e4, max_relative = 1e-9);
        assert!(qcap_from_t1(&sample_a(), &noise(), 3.1, 0.0, t1).is_err());
    }

    #[test]
    fn flux_first_order() {
        assert_eq!(gamma_phi_flux_first(4e-12, 0.0), 0.0);
        let g = gamma_phi_flux_first(4e-12, angular(6.5));
        assert!((g / 6.8e4 - 1.0).abs() < 0.01, "{g}");
        assert_relative_eq!(
            gamma_phi_flux_first(16e-12, 1e9),
            2.0 * gamma_phi_flux_first(4e-12, 1e9),
            max_relative = 1e-14
        );
    }

    #[test]
    fn flux_second_order_linear() {
        assert_eq!(gamma_phi_flux_second(0.0, 1e12), 0.0);
        assert_relative_eq!(
            gamma_phi_flux_second(8e-12, 1e12),
            2.0 * gamma_phi_flux_second(4e-12, 1e12),
            max_relative = 1e-14
        );
    }

    #[test]
    fn thermal_photon_rate() {
        assert_eq!(gamma_phi_thermal(4e-4, 0.0065, 0.0).unwrap(), 0.0);
        let g = gamma_phi_thermal(4e-4, 0.0065, 0.0068).unwrap();
        assert!((g / 8.5e3 - 1.0).abs() < 0.02, "{g}");
        let t2 = 1.0 / (0.5 / 177e-6 + g);
        assert!((t2 * 1e6 - 88.0).abs() < 1.0, "{t2}");
        assert!(gamma_phi_thermal(1.0, 0.0065, 0.0068).is_err());
        assert_relative_eq!(nth_from_gamma(g, 0.0065, 0.0068).unwrap(), 4e-4, max_relative = 1e-12);
        let n = nth_from_coherence(177.3e-6, 74.6e-6, 0.0065, 0.0068).unwrap();
        assert!((3e-4..6e-4).contains(&n), "{n}");
    }

    #[test]
    fn effective_temperature() {
        let t = teff_from_nth(4e-4, 6.908).unwrap();
        assert!((t * 1e3 - 42.4).abs() < 0.5, "{t}");
        let t = teff_from_nth(9e-4, 6.89).unwrap();
        assert!((t * 1e3 - 47.0).abs() < 1.0, "{t}");
        assert_relative_eq!(nth_from_teff(t, 6.89).unwrap(), 9e-4, max_relative = 1e-9);
        assert!(teff_from_nth(0.0, 6.9).is_err());
    }

    #[test]
    fn quality_factors() {
        assert!((quality_factor(3.0, 171e-6) / 3.2e6 - 1.0).abs() < 0.03);
        assert!((quality_factor(0.150, 182e-6) / 1.7e5 - 1.0).abs() < 0.03);
        assert_eq!(quality_factor(3.0, 0.0), 0.0);
    }

    #[test]
    fn detailed_balance() {
        let r = gamma12_dielectric(&sample_a(), &noise(), 0.017, 6.0).unwrap();
        let x = joules(0.017) / (BOLTZMANN * 0.02);
        assert_relative_eq!(r.gamma_up / r.gamma_down, (-x).exp(), max_relative = 1e-9);
        let mut cold = noise();
        cold.t_eff = 1e-4;
        let r = gamma12_dielectric(&sample_a(), &cold, 3.0, 0.3).unwrap();
        assert!(r.gamma_up < 1e-300 * r.gamma_down.max(1.0) || r.gamma_up == 0.0);
    }

    #[test]
    fn qutrit_without_jumps_is_frozen() {
        let d = qutrit_dephasing(0.0, 500.0, &[0.0, 1e-3, 1.0]).unwrap();
        for (x, p) in d.numeric.iter().zip(&d.populations) {
            assert_relative_eq!(*x, 1.0, epsilon = 1e-15);
            assert_relative_eq!(p[0], 0.5, epsilon = 1e-15);
            assert_relative_eq!(p[1], 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn qutrit_matches_closed_form() {
        let up = 1300.0;
        let tau = 2.0 / up;
        let grid: Vec<f64> = (0..=100).map(|i| 5.0 * tau * i as f64 / 100.0).collect();
        let d = qutrit_dephasing(up, 2600.0, &grid).unwrap();
        for (a, n) in d.analytic.iter().zip(&d.numeric) {
            assert!((a - n).abs() < 1e-6);
        }
        assert!(d.max_trace_drift < 1e-9);
        assert!(d.min_eigenvalue > -1e-9);
    }

    #[test]
    fn qutrit_rejects_bad_input() {
        assert!(qutrit_dephasing(-1.0, 0.0, &[0.0]).is_err());
        assert!(qutrit_dephasing(1.0, 0.0, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn t1_interpolation() {
        let d = [T1Point { flux: 0.0, t1: 1.0 }, T1Point { flux: 0.2, t1: 3.0 }];
        assert_relative_eq!(t1_at(&d, 0.1).unwrap(), 2.0);
        assert_relative_eq!(t1_at(&d, -1.0).unwrap(), 1.0);
        assert_relative_eq!(t1_at(&d, 1.0).unwrap(), 3.0);
    }
}
