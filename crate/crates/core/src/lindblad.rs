//! Dressed-basis Lindblad evolution of the qubit and the complex response
//! factor that feeds the field equations.
//!
//! The generator is
//!
//! ```text
//! dρ/dτ = −i[H, ρ] + γ_eff (σ̂₋ ρ σ̂₊ − ½{σ̂₊σ̂₋, ρ}),   γ_eff = γ(Ω) sin²φ
//! ```
//!
//! with `H` and `σ̂₋ = |ν₋⟩⟨ν₊|` rebuilt at every local time from the
//! instantaneous dressed frame. States are carried in the bare basis.

use serde::{Deserialize, Serialize};

use crate::bath::{DecoherenceProfile, SpectralDensity};
use crate::dressed::{DressedFrame, QubitParams};
use crate::error::{Error, Result};
use crate::matrix::{Mat2, C64, ONE, ZERO};
use crate::numerics::{cumtrapz, rk4_integrate_checked, Grid, IntegratorReport};

/// Tolerance on the Hamiltonian's Hermiticity in [`lindblad_rhs`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Invariant violations above this abort [`evolve`] with
/// [`Error::IntegrationUnstable`].
pub const INVARIANT_ABORT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Basis {
    Bare,
    /// Instantaneous dressed basis at the given local time.
    Dressed(f64),
}

/// 2×2 density matrix tagged with its basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    pub entries: Mat2,
    pub basis: Basis,
}

impl DensityMatrix2 {
    /// Validates Hermiticity and unit trace to 1e−12 and positivity to −1e−10.
    pub fn new(entries: Mat2, basis: Basis) -> Result<Self> {
        let rho = DensityMatrix2 { entries, basis };
        let d = rho.defects();
        if d.hermiticity > 1e-12 || d.trace > 1e-12 || d.min_eigenvalue < -1e-10 {
            return Err(Error::domain(format!("not a valid density matrix: {d:?}")));
        }
        Ok(rho)
    }

    /// `|e⟩⟨e|` in the bare basis.
    pub fn excited() -> Self {
        DensityMatrix2 {
            entries: Mat2::diag(ONE, ZERO),
            basis: Basis::Bare,
        }
    }

    /// `|g⟩⟨g|` in the bare basis.
    pub fn ground() -> Self {
        DensityMatrix2 {
            entries: Mat2::diag(ZERO, ONE),
            basis: Basis::Bare,
        }
    }

    /// `|+⟩⟨+|` with `|+⟩ = (|e⟩ + |g⟩)/√2`.
    pub fn plus() -> Self {
        DensityMatrix2::pure([ONE, ONE], Basis::Bare)
    }

    pub fn maximally_mixed(basis: Basis) -> Self {
        DensityMatrix2 {
            entries: Mat2::diag(C64::new(0.5, 0.0), C64::new(0.5, 0.0)),
            basis,
        }
    }

    /// Projector onto the normalized `v`.
    pub fn pure(v: [C64; 2], basis: Basis) -> Self {
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        let u = [v[0] / n, v[1] / n];
        DensityMatrix2 {
            entries: Mat2::outer(u, u),
            basis,
        }
    }

    pub fn purity(&self) -> f64 {
        (self.entries * self.entries).trace().re
    }

    pub fn defects(&self) -> Defects {
        Defects {
            trace: (self.entries.trace() - ONE).norm(),
            hermiticity: self.entries.hermiticity_defect(),
            min_eigenvalue: self.entries.hermitian_eigenvalues().0,
        }
    }

    /// Expresses a bare-basis state in the dressed basis of `frame`.
    pub fn to_dressed(&self, frame: &DressedFrame, tau: f64) -> Result<Self> {
        if self.basis != Basis::Bare {
            return Err(Error::domain("state is not in the bare basis"));
        }
        Ok(DensityMatrix2 {
            entries: frame.to_dressed(&self.entries),
            basis: Basis::Dressed(tau),
        })
    }
}

/// Distance of a state from the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Defects {
    pub trace: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

/// `−i[H, ρ] + γ (L ρ L† − ½{L†L, ρ})`.
pub fn lindblad_rhs(
    rho: &Mat2,
    hamiltonian: &Mat2,
    gamma_eff: f64,
    jump_minus: &Mat2,
) -> Result<Mat2> {
    if !hamiltonian.is_hermitian(HERMITIAN_TOL * hamiltonian.max_abs().max(1.0)) {
        return Err(Error::domain("Hamiltonian is not Hermitian"));
    }
    if !(gamma_eff >= 0.0 && gamma_eff.is_finite()) {
        return Err(Error::domain(format!(
            "effective rate must be >= 0, got {gamma_eff}"
        )));
    }
    Ok(generator(rho, hamiltonian, gamma_eff, jump_minus))
}

fn generator(rho: &Mat2, h: &Mat2, gamma: f64, l: &Mat2) -> Mat2 {
    let unitary = h.commutator(rho).scale(C64::new(0.0, -1.0));
    if gamma == 0.0 {
        return unitary;
    }
    let ld = l.dagger();
    let dissipator = *l * *rho * ld - (ld * *l).anticommutator(rho).scale_re(0.5);
    unitary + dissipator.scale_re(gamma)
}

/// Hamiltonian, jump operator and rate in force at one local time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Generator {
    pub hamiltonian: Mat2,
    pub jump_minus: Mat2,
    pub gamma_eff: f64,
}

/// Envelope and phase of a drive at arbitrary local time.
pub trait Drive {
    /// `(𝓔(τ), φ(τ))`.
    fn sample(&self, tau: f64) -> (f64, f64);
}

/// `𝓔(τ) = a sech((τ − τc)/w)` with phase `φ₀ + chirp·(τ − τc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SechDrive {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub phase: f64,
    pub chirp: f64,
}

impl SechDrive {
    /// Pulse whose full-line area `μ∫𝓔` equals `area`.
    pub fn with_area(area: f64, mu: f64, width: f64, center: f64, phase: f64) -> Result<Self> {
        if !(width > 0.0) || !(mu > 0.0) {
            return Err(Error::domain(
                "sech drive needs positive width and coupling",
            ));
        }
        Ok(SechDrive {
            amplitude: area / (std::f64::consts::PI * mu * width),
            width,
            center,
            phase,
            chirp: 0.0,
        })
    }
}

impl Drive for SechDrive {
    fn sample(&self, tau: f64) -> (f64, f64) {
        let x = (tau - self.center) / self.width;
        (
            self.amplitude / x.cosh(),
            self.phase + self.chirp * (tau - self.center),
        )
    }
}

/// Density-matrix trajectory on a grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub states: Vec<DensityMatrix2>,
    pub report: IntegratorReport,
    /// Worst invariant defects seen along the run.
    pub worst: Defects,
}

impl Trajectory {
    /// Rows `τ, ρ₁₁, Re ρ₁₂, Im ρ₁₂, ρ₂₂, purity`.
    pub fn rows(&self) -> Vec<[f64; 6]> {
        self.states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let m = &s.entries;
                [
                    self.grid.at(i),
                    m.get(0, 0).re,
                    m.get(0, 1).re,
                    m.get(0, 1).im,
                    m.get(1, 1).re,
                    s.purity(),
                ]
            })
            .collect()
    }
}

pub const TRAJECTORY_COLUMNS: [&str; 6] =
    ["tau", "rho11", "re_rho12", "im_rho12", "rho22", "purity"];

/// RK4 evolution under a time-dependent generator.
///
/// The generator is sampled once on the half-step lattice of `grid`, so
/// every RK4 stage sees exactly the value computed for its time. Each
/// accepted state is checked, never repaired.
pub fn evolve_with<G>(rho0: &DensityMatrix2, grid: &Grid, mut gen: G) -> Result<Trajectory>
where
    G: FnMut(f64) -> Result<Generator>,
{
    if rho0.basis != Basis::Bare {
        return Err(Error::domain("evolution starts from a bare-basis state"));
    }
    DensityMatrix2::new(rho0.entries, rho0.basis)?;

    let half = 0.5 * grid.step();
    let lattice: Vec<Generator> = (0..2 * grid.len() - 1)
        .map(|k| gen(grid.tau0() + k as f64 * half))
        .collect::<Result<_>>()?;
    for (k, g) in lattice.iter().enumerate() {
        let tau = grid.tau0() + k as f64 * half;
        if !g
            .hamiltonian
            .is_hermitian(HERMITIAN_TOL * g.hamiltonian.max_abs().max(1.0))
        {
            return Err(Error::domain(format!(
                "Hamiltonian not Hermitian at tau = {tau}"
            )));
        }
        if !(g.gamma_eff >= 0.0 && g.gamma_eff.is_finite()) {
            return Err(Error::domain(format!(
                "invalid effective rate at tau = {tau}"
            )));
        }
    }

    let tau0 = grid.tau0();
    let mut rhs = |tau: f64, rho: &Mat2| {
        let k = (((tau - tau0) / half).round() as usize).min(lattice.len() - 1);
        let g = &lattice[k];
        generator(rho, &g.hamiltonian, g.gamma_eff, &g.jump_minus)
    };
    let mut worst = Defects {
        trace: 0.0,
        hermiticity: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    let check = |tau: f64, rho: &Mat2| {
        let d = DensityMatrix2 {
            entries: *rho,
            basis: Basis::Bare,
        }
        .defects();
        worst.trace = worst.trace.max(d.trace);
        worst.hermiticity = worst.hermiticity.max(d.hermiticity);
        worst.min_eigenvalue = worst.min_eigenvalue.min(d.min_eigenvalue);
        if d.trace > INVARIANT_ABORT_TOL
            || d.hermiticity > INVARIANT_ABORT_TOL
            || d.min_eigenvalue < -INVARIANT_ABORT_TOL
        {
            return Err(Error::IntegrationUnstable {
                tau,
                detail: format!(
                    "trace defect {:.3e}, hermiticity defect {:.3e}, min eigenvalue {:.3e}",
                    d.trace, d.hermiticity, d.min_eigenvalue
                ),
            });
        }
        Ok(())
    };
    let (states, report) = rk4_integrate_checked(&mut rhs, rho0.entries, grid, check)?;
    Ok(Trajectory {
        grid: *grid,
        states: states
            .into_iter()
            .map(|entries| DensityMatrix2 {
                entries,
                basis: Basis::Bare,
            })
            .collect(),
        report,
        worst,
    })
}

/// Generator for a drive sample: dressed Hamiltonian, dressed lowering
/// operator and `γ_eff = γ(|Ω₊|) sin²φ`.
pub fn dressed_generator(
    params: &QubitParams,
    bath: &SpectralDensity,
    envelope: f64,
    phase: f64,
) -> Result<Generator> {
    let frame = DressedFrame::new(params, envelope, phase)?;
    Ok(Generator {
        hamiltonian: frame.hamiltonian(),
        jump_minus: frame.lowering(),
        gamma_eff: bath.eval(frame.omega_plus.abs())? * phase.sin().powi(2),
    })
}

/// Evolves `rho0` through `drive` under the dressed-basis master equation.
pub fn evolve<D: Drive>(
    rho0: &DensityMatrix2,
    drive: &D,
    params: &QubitParams,
    bath: &SpectralDensity,
    grid: &Grid,
) -> Result<Trajectory> {
    evolve_with(rho0, grid, |tau| {
        let (e, p) = drive.sample(tau);
        dressed_generator(params, bath, e, p)
    })
}

/// Complex response factor `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseFactor {
    pub re: f64,
    pub im: f64,
    pub gamma_at_tau: f64,
    pub omega_integral: f64,
}

impl ResponseFactor {
    /// `Re F = 1 − e^{−Γ}`, `Im F = −e^{−Γ/2} sin ∫Ω`.
    pub fn from_parts(gamma_at_tau: f64, omega_integral: f64) -> Self {
        ResponseFactor {
            re: 1.0 - (-gamma_at_tau).exp(),
            im: -(-gamma_at_tau / 2.0).exp() * omega_integral.sin(),
            gamma_at_tau,
            omega_integral,
        }
    }

    pub fn as_complex(&self) -> C64 {
        C64::new(self.re, self.im)
    }
}

/// `F` at `tau`, interpolating `Γ` and the trapezoid integral of `Ω`.
pub fn response_factor(
    gamma_profile: &DecoherenceProfile,
    omega_of_tau: &[f64],
    grid: &Grid,
    tau: f64,
) -> Result<ResponseFactor> {
    if !grid.contains(tau) {
        return Err(Error::domain(format!(
            "tau = {tau} outside grid [{}, {}]",
            grid.tau0(),
            grid.tau1()
        )));
    }
    if gamma_profile.grid != *grid {
        return Err(Error::domain("decoherence profile is on a different grid"));
    }
    let integral = cumtrapz(omega_of_tau, grid)?;
    Ok(ResponseFactor::from_parts(
        gamma_profile.at(tau)?,
        grid.interpolate(&integral, tau)?,
    ))
}

/// `F` at every node.
pub fn response_factors(
    gamma_profile: &DecoherenceProfile,
    omega_of_tau: &[f64],
) -> Result<Vec<ResponseFactor>> {
    let integral = cumtrapz(omega_of_tau, &gamma_profile.grid)?;
    Ok(gamma_profile
        .gamma_cumulative
        .iter()
        .zip(&integral)
        .map(|(g, w)| ResponseFactor::from_parts(*g, *w))
        .collect())
}

/// Real polarization `Re{μ F e^{i(φ+ωτ)}}`.
pub fn polarization(mu: f64, factor: &ResponseFactor, phi: f64, omega_tau: f64) -> f64 {
    let (s, c) = (phi + omega_tau).sin_cos();
    mu * (factor.re * c - factor.im * s)
}
