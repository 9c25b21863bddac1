//! Dressed-state algebra of the driven qubit.
//!
//! In the frame rotating with the carrier the driven qubit is diagonal in
//!
//! ```text
//! |ν₊⟩ = e^{-iφ} cos θ |e⟩ − sin θ |g⟩
//! |ν₋⟩ = e^{-iφ} sin θ |e⟩ + cos θ |g⟩
//! ```
//!
//! with `θ = ½ atan2(μ𝓔, δ)` and eigenvalues `Ω± = ±√(δ² + (μ𝓔)²)`.
//! Vectors are written in the bare `(|e⟩, |g⟩)` basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{inner, Mat2, C64, I, ONE, ZERO};
use crate::numerics::Grid;

/// Qubit and carrier parameters in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    omega0: f64,
    omega: f64,
    mu: f64,
    delta: f64,
}

impl QubitParams {
    pub fn new(omega0: f64, omega: f64, mu: f64) -> Result<Self> {
        if !(omega0.is_finite() && omega.is_finite() && mu.is_finite()) {
            return Err(Error::domain("qubit parameters must be finite"));
        }
        if omega0 <= 0.0 || omega <= 0.0 {
            return Err(Error::domain(
                "transition and carrier frequencies must be positive",
            ));
        }
        if mu < 0.0 {
            return Err(Error::domain("dipole coupling must be non-negative"));
        }
        Ok(QubitParams {
            omega0,
            omega,
            mu,
            delta: omega0 - omega,
        })
    }

    /// Carrier and qubit both at `omega`.
    pub fn resonant(omega: f64, mu: f64) -> Result<Self> {
        QubitParams::new(omega, omega, mu)
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Instantaneous dressed frame for one `(𝓔, φ)` sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressedFrame {
    pub theta: f64,
    pub phi: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

impl DressedFrame {
    pub fn new(params: &QubitParams, envelope: f64, phi: f64) -> Result<Self> {
        let mu_e = params.mu() * envelope;
        let theta = mixing_angle(mu_e, params.delta())?;
        let (omega_plus, omega_minus) = dressed_eigenvalues(mu_e, params.delta())?;
        if !phi.is_finite() {
            return Err(Error::domain("pulse phase must be finite"));
        }
        Ok(DressedFrame {
            theta,
            phi,
            omega_plus,
            omega_minus,
        })
    }

    pub fn states(&self) -> ([C64; 2], [C64; 2]) {
        dressed_states(self.theta, self.phi)
    }

    /// Unitary whose columns are `|ν₊⟩, |ν₋⟩`.
    pub fn basis_change(&self) -> Mat2 {
        let (p, m) = self.states();
        Mat2::from_columns(p, m)
    }

    /// Rotating-frame Hamiltonian `Ω₊|ν₊⟩⟨ν₊| + Ω₋|ν₋⟩⟨ν₋|` in the bare basis.
    pub fn hamiltonian(&self) -> Mat2 {
        let (p, m) = self.states();
        Mat2::outer(p, p).scale_re(self.omega_plus) + Mat2::outer(m, m).scale_re(self.omega_minus)
    }

    /// Dressed lowering operator `σ̂₋ = |ν₋⟩⟨ν₊|` in the bare basis.
    pub fn lowering(&self) -> Mat2 {
        let (p, m) = self.states();
        Mat2::outer(m, p)
    }

    /// Re-expresses a bare-basis operator in `(ν₊, ν₋)` ordering.
    pub fn to_dressed(&self, bare: &Mat2) -> Mat2 {
        let u = self.basis_change();
        u.dagger() * *bare * u
    }
}

/// Rotating-frame Hamiltonian written out for `μ𝓔`, `δ` and `φ`:
/// `[[δ, −μ𝓔 e^{−iφ}], [−μ𝓔 e^{iφ}, −δ]]`.
pub fn rotating_frame_hamiltonian(mu_e: f64, delta: f64, phi: f64) -> Mat2 {
    let off = C64::from_polar(mu_e, -phi);
    Mat2::new(delta.into(), -off, -off.conj(), (-delta).into())
}

/// `θ = ½ atan2(μ𝓔, δ)`, regular at resonance.
pub fn mixing_angle(mu_e: f64, delta: f64) -> Result<f64> {
    if !(mu_e.is_finite() && delta.is_finite()) {
        return Err(Error::domain("mixing angle needs finite arguments"));
    }
    Ok(0.5 * mu_e.atan2(delta))
}

/// `(Ω₊, Ω₋) = (+r, −r)` with `r = √(δ² + (μ𝓔)²)`.
pub fn dressed_eigenvalues(mu_e: f64, delta: f64) -> Result<(f64, f64)> {
    if !(mu_e.is_finite() && delta.is_finite()) {
        return Err(Error::domain("dressed eigenvalues need finite arguments"));
    }
    let r = mu_e.hypot(delta);
    Ok((r, -r))
}

/// `(|ν₊⟩, |ν₋⟩)` in the bare `(|e⟩, |g⟩)` basis.
pub fn dressed_states(theta: f64, phi: f64) -> ([C64; 2], [C64; 2]) {
    let ph = C64::from_polar(1.0, -phi);
    let (s, c) = theta.sin_cos();
    ([ph * c, (-s).into()], [ph * s, c.into()])
}

/// The bare `σx` written in the dressed basis at resonance, ordering
/// `(ν₊, ν₋)`: `[[−cos φ, i sin φ], [−i sin φ, cos φ]]`.
pub fn sigma_x_dressed(phi: f64) -> Mat2 {
    let (s, c) = phi.sin_cos();
    Mat2::new((-c).into(), I * s, -I * s, c.into())
}

/// Which dressed branch a phase is accumulated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

/// Dynamic, geometric and total phase of one dressed branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticPhase {
    pub dynamic: f64,
    pub geometric: f64,
    pub total: f64,
}

/// Geometric-phase convention: `−i⟨ν±|ν̇±⟩` with the ordinary conjugate
/// transpose, which evaluates to `−φ̇ cos²θ` on `ν₊` and `−φ̇ sin²θ` on `ν₋`.
pub const GEOMETRIC_SIGN_CONVENTION: &str =
    "-i<nu|d nu/dtau> (conjugate-transpose bra): plus branch -phidot*cos^2(theta), minus branch -phidot*sin^2(theta)";

/// Cumulative phases at every node of `grid`.
///
/// The dynamic part integrates the sampled branch eigenvalue by trapezoid.
/// The geometric part integrates `−cos²θ dφ` (or `−sin²θ dφ`) with the same
/// rule in Stieltjes form, so no derivative of `φ` is needed.
pub fn adiabatic_phase_cumulative(
    branch: Branch,
    omega_branch: &[f64],
    theta: &[f64],
    phi: &[f64],
    grid: &Grid,
) -> Result<Vec<AdiabaticPhase>> {
    let n = grid.len();
    if omega_branch.len() != n || theta.len() != n || phi.len() != n {
        return Err(Error::domain(
            "adiabatic phase samples must match the grid length",
        ));
    }
    let weight = |t: f64| match branch {
        Branch::Plus => t.cos().powi(2),
        Branch::Minus => t.sin().powi(2),
    };
    let h = grid.step();
    let mut out = Vec::with_capacity(n);
    let (mut dynamic, mut geometric) = (0.0, 0.0);
    out.push(AdiabaticPhase {
        dynamic,
        geometric,
        total: 0.0,
    });
    for i in 1..n {
        dynamic += 0.5 * h * (omega_branch[i - 1] + omega_branch[i]);
        geometric -= 0.5 * (weight(theta[i - 1]) + weight(theta[i])) * (phi[i] - phi[i - 1]);
        out.push(AdiabaticPhase {
            dynamic,
            geometric,
            total: dynamic + geometric,
        });
    }
    Ok(out)
}

/// Phases accumulated over the whole grid.
pub fn adiabatic_phase(
    branch: Branch,
    omega_branch: &[f64],
    theta: &[f64],
    phi: &[f64],
    grid: &Grid,
) -> Result<AdiabaticPhase> {
    let all = adiabatic_phase_cumulative(branch, omega_branch, theta, phi, grid)?;
    Ok(*all.last().expect("grid has at least two nodes"))
}

/// Gram matrix `[[⟨ν₊|ν₊⟩, ⟨ν₊|ν₋⟩], [⟨ν₋|ν₊⟩, ⟨ν₋|ν₋⟩]]`.
pub fn gram(theta: f64, phi: f64) -> Mat2 {
    let (p, m) = dressed_states(theta, phi);
    Mat2::new(inner(p, p), inner(p, m), inner(m, p), inner(m, m))
}

/// Bare `σx` rebuilt from the dressed projectors; used to cross-check
/// [`sigma_x_dressed`].
pub fn sigma_x_bare() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn mixing_angle_examples() {
        assert!((mixing_angle(1.0, 1e-300).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((mixing_angle(1.0, 0.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(mixing_angle(0.0, 1.0).unwrap(), 0.0);
        assert!((mixing_angle(1.0, 1.0).unwrap() - FRAC_PI_8).abs() < 1e-15);
        assert!(mixing_angle(f64::NAN, 1.0).is_err());
        assert!(mixing_angle(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(dressed_eigenvalues(4.0, 3.0).unwrap(), (5.0, -5.0));
        assert_eq!(dressed_eigenvalues(0.0, 0.0).unwrap(), (0.0, -0.0));
        let (p, m) = dressed_eigenvalues(0.7, 0.0).unwrap();
        assert_eq!((p, m), (0.7, -0.7));
    }

    #[test]
    fn dressed_state_examples() {
        let (p, m) = dressed_states(0.0, 0.0);
        assert_eq!(p, [ONE, C64::new(-0.0, 0.0)]);
        assert_eq!(m, [ZERO, ONE]);
        let (p, m) = dressed_states(FRAC_PI_4, 0.0);
        let r = FRAC_1_SQRT_2;
        assert!(close(p[0], r.into(), 1e-15) && close(p[1], (-r).into(), 1e-15));
        assert!(close(m[0], r.into(), 1e-15) && close(m[1], r.into(), 1e-15));
    }

    #[test]
    fn sigma_x_examples() {
        let s = sigma_x_dressed(0.0);
        assert_eq!(s, Mat2::real(-1.0, 0.0, 0.0, 1.0));
        let s = sigma_x_dressed(FRAC_PI_2);
        assert!(s.get(0, 0).norm() < 1e-15 && s.get(1, 1).norm() < 1e-15);
        assert!(close(s.get(0, 1), I, 1e-15) && close(s.get(1, 0), -I, 1e-15));
    }

    #[test]
    fn sigma_x_dressed_matches_bare_projection_at_resonance() {
        for k in 0..16 {
            let phi = -PI + k as f64 * 0.4;
            let frame = DressedFrame {
                theta: FRAC_PI_4,
                phi,
                omega_plus: 1.0,
                omega_minus: -1.0,
            };
            let projected = frame.to_dressed(&sigma_x_bare());
            assert!(
                (projected - sigma_x_dressed(phi)).max_abs() < 1e-14,
                "phi={phi}"
            );
        }
    }

    #[test]
    fn constant_drive_dynamic_phase() {
        let g = Grid::new(0.0, 3.0, 31).unwrap();
        let ph = adiabatic_phase(
            Branch::Plus,
            &vec![1.0; 31],
            &vec![0.3; 31],
            &vec![0.2; 31],
            &g,
        )
        .unwrap();
        assert!((ph.dynamic - 3.0).abs() < 1e-14);
        assert_eq!(ph.geometric, 0.0);
        assert_eq!(ph.total, ph.dynamic);
    }

    #[test]
    fn undriven_closed_phase_loop_has_zero_total() {
        let g = Grid::new(0.0, 2.0, 401).unwrap();
        let phi = g.map(|t| (PI * t).sin() * 1.3);
        let ph = adiabatic_phase(Branch::Plus, &vec![0.0; 401], &vec![0.0; 401], &phi, &g).unwrap();
        assert!(ph.total.abs() < 1e-12, "{ph:?}");
    }

    #[test]
    fn undriven_state_is_continuous_under_gauge_phase() {
        // θ = 0, Ω = 0: |ν₊(τ)⟩ e^{-i φ_total(τ)} must stay at its initial value.
        let g = Grid::new(0.0, 1.0, 201).unwrap();
        let phi = g.map(|t| 0.4 + 2.0 * t * t);
        let cum =
            adiabatic_phase_cumulative(Branch::Plus, &vec![0.0; 201], &vec![0.0; 201], &phi, &g)
                .unwrap();
        let (start, _) = dressed_states(0.0, phi[0]);
        for (i, p) in cum.iter().enumerate() {
            let (nu, _) = dressed_states(0.0, phi[i]);
            let carried = nu[0] * C64::from_polar(1.0, -p.total);
            assert!(close(carried, start[0], 1e-12), "i={i}");
        }
    }

    #[test]
    fn sech_pulse_dynamic_phase_equals_area() {
        // resonance: Ω₊ = μ𝓔 and μ∫𝓔 over the full line = 2π
        let m = 1.5;
        let g = Grid::new(-30.0, 30.0, 20_001).unwrap();
        let omega = g.map(|t| 2.0 * m / (m * t).cosh());
        let theta = vec![FRAC_PI_4; g.len()];
        let phi = vec![0.0; g.len()];
        let ph = adiabatic_phase(Branch::Plus, &omega, &theta, &phi, &g).unwrap();
        assert!((ph.dynamic - 2.0 * PI).abs() < 1e-9, "{}", ph.dynamic);
    }

    #[test]
    fn adiabatic_phase_rejects_short_or_mismatched() {
        let g = Grid::new(0.0, 1.0, 3).unwrap();
        assert!(adiabatic_phase(Branch::Minus, &[0.0; 2], &[0.0; 3], &[0.0; 3], &g).is_err());
    }

    #[test]
    fn asymptotic_bare_limit() {
        let q = QubitParams::new(5.1, 5.0, 1.0).unwrap();
        let f = DressedFrame::new(&q, 1e-12, 0.0).unwrap();
        assert!(f.theta.abs() < 1e-10);
        let (p, m) = f.states();
        assert!(close(p[0], ONE, 1e-10) && close(m[1], ONE, 1e-10));
    }

    #[test]
    fn qubit_params_validation() {
        let q = QubitParams::new(5.0, 4.5, 0.2).unwrap();
        assert_eq!(q.delta(), 5.0 - 4.5);
        assert!(QubitParams::new(-1.0, 1.0, 0.1).is_err());
        assert!(QubitParams::new(1.0, 1.0, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn dressed_pair_is_orthonormal(theta in -3.2f64..3.2, phi in -7.0f64..7.0) {
            let g = gram(theta, phi);
            prop_assert!((g - Mat2::identity()).max_abs() < 1e-12);
        }

        #[test]
        fn dressed_basis_diagonalizes_hamiltonian(
            mu_e in 0.0f64..10.0, delta in 0.0f64..10.0, phi in -7.0f64..7.0
        ) {
            let q = QubitParams::new(1.0 + delta, 1.0, 1.0).unwrap();
            let frame = DressedFrame::new(&q, mu_e, phi).unwrap();
            let h = rotating_frame_hamiltonian(mu_e, q.delta(), phi);
            let d = frame.to_dressed(&h);
            let expect = Mat2::diag(frame.omega_plus.into(), frame.omega_minus.into());
            prop_assert!((d - expect).max_abs() < 1e-10);
            prop_assert!((frame.hamiltonian() - h).max_abs() < 1e-10);
        }

        #[test]
        fn sigma_x_dressed_is_involutive_hermitian(phi in -7.0f64..7.0) {
            let s = sigma_x_dressed(phi);
            prop_assert!(s.is_hermitian(1e-15));
            prop_assert!(s.trace().norm() < 1e-15);
            prop_assert!((s * s - Mat2::identity()).max_abs() < 1e-14);
        }

        #[test]
        fn mixing_angle_in_first_octant(mu_e in 0.0f64..100.0, delta in 0.0f64..100.0) {
            let t = mixing_angle(mu_e, delta).unwrap();
            prop_assert!((0.0..=FRAC_PI_4 + 1e-15).contains(&t));
        }
    }

    /// Direct eigensolve of the 2×2 characteristic polynomial.
    fn eig_oracle(m: &Mat2) -> (f64, f64) {
        let tr = m.trace().re;
        let det = m.det().re;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }

    #[test]
    fn sigma_x_dressed_eigenvalues_are_unit() {
        for k in 0..50 {
            let phi = -3.0 + 0.13 * k as f64;
            let (lo, hi) = eig_oracle(&sigma_x_dressed(phi));
            assert!((lo + 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
    }
}
