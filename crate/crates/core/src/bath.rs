//! Bath spectral densities and the decoherence factor.
//!
//! The decoherence factor accumulates the bath rate seen at the
//! instantaneous dressed splitting, weighted by the pulse phase:
//! `Γ(τ) = ∫_{τ₀}^{τ} γ(Ω(s)) sin²φ(s) ds`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::C64;
use crate::numerics::{cumtrapz, Grid};
use crate::units::{GHZ_TO_RAD_PER_NS, MHZ_RATE_TO_PER_NS};

/// Bath spectral density `γ(Ω)` in 1/ns, `Ω` in rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralDensity {
    /// Frequency-independent rate.
    Constant { gamma0: f64 },
    /// `η Ω e^{−Ω/ω_c}`; an infinite cutoff is allowed.
    Ohmic { eta: f64, cutoff: f64 },
    /// Linear interpolation over strictly increasing `omega`.
    Tabulated { omega: Vec<f64>, gamma: Vec<f64> },
}

impl SpectralDensity {
    pub fn constant(gamma0: f64) -> Result<Self> {
        if !(gamma0 >= 0.0 && gamma0.is_finite()) {
            return Err(Error::domain(format!(
                "constant rate must be finite and >= 0, got {gamma0}"
            )));
        }
        Ok(SpectralDensity::Constant { gamma0 })
    }

    pub fn ohmic(eta: f64, cutoff: f64) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::domain("ohmic prefactor must be finite and >= 0"));
        }
        if !(cutoff > 0.0) {
            return Err(Error::domain("ohmic cutoff must be positive"));
        }
        Ok(SpectralDensity::Ohmic { eta, cutoff })
    }

    pub fn tabulated(omega: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if omega.len() != gamma.len() || omega.len() < 2 {
            return Err(Error::domain(
                "tabulated density needs >= 2 (omega, gamma) pairs",
            ));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "tabulated omega grid must be strictly increasing",
            ));
        }
        if gamma.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::domain("tabulated rates must be finite and >= 0"));
        }
        Ok(SpectralDensity::Tabulated { omega, gamma })
    }

    /// Bins a discrete mode list into a tabulated density realizing
    /// `γ(Ω) = 2π Σⱼ gⱼ² δ(ωⱼ − Ω)` with bins of width `bin`.
    pub fn binned_from_modes(modes: &BathModes, lo: f64, hi: f64, bin: f64) -> Result<Self> {
        if !(bin > 0.0 && hi > lo) {
            return Err(Error::domain(
                "binning needs hi > lo and a positive bin width",
            ));
        }
        let nbins = ((hi - lo) / bin).ceil() as usize;
        let mut power = vec![0.0; nbins];
        for m in modes.modes() {
            if m.omega >= lo && m.omega < hi {
                let k = (((m.omega - lo) / bin) as usize).min(nbins - 1);
                power[k] += m.g * m.g;
            }
        }
        let omega: Vec<f64> = (0..nbins).map(|k| lo + (k as f64 + 0.5) * bin).collect();
        let gamma = power.iter().map(|p| 2.0 * PI * p / bin).collect();
        if nbins < 2 {
            return Err(Error::domain("binning produced fewer than two bins"));
        }
        SpectralDensity::tabulated(omega, gamma)
    }

    /// Loads a two-column CSV (Ω in GHz, γ in MHz) with a header row.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let (mut omega, mut gamma) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::domain(format!(
                    "spectral table row {} has {} columns, expected 2",
                    line + 2,
                    rec.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| {
                    Error::domain(format!(
                        "spectral table row {}: cannot parse `{s}`",
                        line + 2
                    ))
                })
            };
            omega.push(parse(&rec[0])? * GHZ_TO_RAD_PER_NS);
            gamma.push(parse(&rec[1])? * MHZ_RATE_TO_PER_NS);
        }
        SpectralDensity::tabulated(omega, gamma)
    }

    /// `γ(Ω)` in 1/ns.
    pub fn eval(&self, omega_eff: f64) -> Result<f64> {
        if !(omega_eff >= 0.0) {
            return Err(Error::domain(format!(
                "spectral density needs omega >= 0, got {omega_eff}"
            )));
        }
        match self {
            SpectralDensity::Constant { gamma0 } => Ok(*gamma0),
            SpectralDensity::Ohmic { eta, cutoff } => {
                Ok(eta * omega_eff * (-omega_eff / cutoff).exp())
            }
            SpectralDensity::Tabulated { omega, gamma } => {
                let (lo, hi) = (omega[0], omega[omega.len() - 1]);
                if omega_eff < lo || omega_eff > hi {
                    return Err(Error::Extrapolation {
                        query: omega_eff,
                        lo,
                        hi,
                    });
                }
                let k = omega
                    .partition_point(|w| *w <= omega_eff)
                    .clamp(1, omega.len() - 1);
                let w = (omega_eff - omega[k - 1]) / (omega[k] - omega[k - 1]);
                Ok(gamma[k - 1] * (1.0 - w) + gamma[k] * w)
            }
        }
    }

    /// Pointwise `scale · γ`.
    pub fn scaled(&self, scale: f64) -> Self {
        match self {
            SpectralDensity::Constant { gamma0 } => SpectralDensity::Constant {
                gamma0: gamma0 * scale,
            },
            SpectralDensity::Ohmic { eta, cutoff } => SpectralDensity::Ohmic {
                eta: eta * scale,
                cutoff: *cutoff,
            },
            SpectralDensity::Tabulated { omega, gamma } => SpectralDensity::Tabulated {
                omega: omega.clone(),
                gamma: gamma.iter().map(|g| g * scale).collect(),
            },
        }
    }
}

/// Something that yields `Γ(τ)` at arbitrary local times.
pub trait DecayProfile {
    fn gamma_at(&self, tau: f64) -> f64;
}

/// `Γ ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoDecay;

impl DecayProfile for NoDecay {
    fn gamma_at(&self, _tau: f64) -> f64 {
        0.0
    }
}

/// Constant-rate form `Γ(τ) = 4 C₀ (τ − τ₀)`, zero before `τ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearDecay {
    pub c0: f64,
    pub tau0: f64,
}

impl DecayProfile for LinearDecay {
    fn gamma_at(&self, tau: f64) -> f64 {
        4.0 * self.c0 * (tau - self.tau0).max(0.0)
    }
}

impl<F: Fn(f64) -> f64> DecayProfile for F {
    fn gamma_at(&self, tau: f64) -> f64 {
        self(tau)
    }
}

/// `Γ(τᵢ)` sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceProfile {
    pub grid: Grid,
    pub gamma_cumulative: Vec<f64>,
    /// Set when the profile was built from, or fitted to, the constant-rate form.
    pub c0: Option<f64>,
}

impl DecoherenceProfile {
    /// Samples the constant-rate form on `grid`, taking `τ₀ = grid.tau0()`.
    pub fn constant_rate(c0: f64, grid: &Grid) -> Result<Self> {
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(Error::domain(format!(
                "C0 must be finite and >= 0, got {c0}"
            )));
        }
        let decay = LinearDecay {
            c0,
            tau0: grid.tau0(),
        };
        Ok(DecoherenceProfile {
            grid: *grid,
            gamma_cumulative: grid.map(|t| decay.gamma_at(t)),
            c0: Some(c0),
        })
    }

    pub fn zero(grid: &Grid) -> Self {
        DecoherenceProfile {
            grid: *grid,
            gamma_cumulative: vec![0.0; grid.len()],
            c0: Some(0.0),
        }
    }

    pub fn at(&self, tau: f64) -> Result<f64> {
        self.grid.interpolate(&self.gamma_cumulative, tau)
    }

    pub fn last(&self) -> f64 {
        *self.gamma_cumulative.last().expect("grid is non-empty")
    }
}

impl DecayProfile for DecoherenceProfile {
    /// Linear interpolation; queries just past either end (RK4 stage
    /// round-off) clamp to the boundary node.
    fn gamma_at(&self, tau: f64) -> f64 {
        let t = tau.clamp(self.grid.tau0(), self.grid.tau1());
        self.grid
            .interpolate(&self.gamma_cumulative, t)
            .expect("clamped query is inside the grid")
    }
}

/// `Γ(τᵢ)` by cumulative trapezoid of `γ(Ω(τ)) sin²φ(τ)`.
pub fn decoherence_factor(
    model: &SpectralDensity,
    omega_of_tau: &[f64],
    phi_of_tau: &[f64],
    grid: &Grid,
) -> Result<DecoherenceProfile> {
    if omega_of_tau.len() != grid.len() || phi_of_tau.len() != grid.len() {
        return Err(Error::domain(format!(
            "decoherence factor inputs have lengths {} and {}, grid has {}",
            omega_of_tau.len(),
            phi_of_tau.len(),
            grid.len()
        )));
    }
    let integrand = omega_of_tau
        .iter()
        .zip(phi_of_tau)
        .map(|(w, p)| Ok(model.eval(w.abs())? * p.sin().powi(2)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(DecoherenceProfile {
        grid: *grid,
        gamma_cumulative: cumtrapz(&integrand, grid)?,
        c0: None,
    })
}

/// `C₀` from the least-squares slope of `Γ` against `τ − τ₀` (through the
/// origin, since `Γ(τ₀) = 0`), divided by 4.
pub fn fit_constant_rate(profile: &DecoherenceProfile) -> Result<f64> {
    let n = profile.gamma_cumulative.len();
    if n < 2 || profile.grid.len() != n {
        return Err(Error::domain(
            "constant-rate fit needs at least two samples",
        ));
    }
    let tau0 = profile.grid.tau0();
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, g) in profile.gamma_cumulative.iter().enumerate() {
        let x = profile.grid.at(i) - tau0;
        sxy += x * g;
        sxx += x * x;
    }
    Ok(sxy / sxx / 4.0)
}

/// One bath oscillator: coupling `g` and angular frequency `omega` (rad/ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathMode {
    pub g: f64,
    pub omega: f64,
}

/// Finite list of bath modes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BathModes(Vec<BathMode>);

impl BathModes {
    pub fn new(modes: Vec<BathMode>) -> Result<Self> {
        if modes
            .iter()
            .any(|m| !(m.g.is_finite() && m.omega.is_finite()))
        {
            return Err(Error::domain("bath modes must be finite"));
        }
        Ok(BathModes(modes))
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.0
    }
}

/// Zero-temperature correlation `Σⱼ gⱼ² e^{−iωⱼ·lag}`.
pub fn bath_correlation(modes: &BathModes, lag: f64) -> C64 {
    modes
        .modes()
        .iter()
        .map(|m| C64::from_polar(m.g * m.g, -m.omega * lag))
        .sum()
}
