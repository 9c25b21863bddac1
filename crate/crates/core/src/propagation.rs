//! Pulse propagation in local time `τ = t − x/v`.
//!
//! The envelope area `𝒜 = μ∫𝓔` obeys the damped pendulum
//! `𝒜̈ = M² e^{−Γ/2} sin 𝒜`, reduced to first order as
//! `𝒜̇ = 2M e^{−Γ/4} sin(𝒜/2)`. Under the constant-rate form `Γ = 4C₀(τ−τ₀)`
//! the first-order equation separates exactly:
//!
//! ```text
//! tan(𝒜/4) = exp u,   u(τ) = M (S(τ) + τ_D),   S(τ) = (1 − e^{−C₀(τ−τ₀)}) / C₀
//! 𝓔(τ) = (P M / μ) e^{−C₀(τ−τ₀)} sech u
//! ```
//!
//! with `τ_D = ln tan(𝒜₀/4) / M`. `P = 2` is what the separation yields;
//! `P = 4` is kept selectable for comparison with the printed figures.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::bath::{DecayProfile, LinearDecay};
use crate::error::{Error, Result};
use crate::lindblad::{Drive, ResponseFactor};
use crate::numerics::{
    fd_derivative, fd_second_derivative, rk4_integrate, Grid, IntegratorReport, OdeState,
};

/// Areas closer than this to a multiple of 2π are treated as fixed points.
pub const FIXED_POINT_TOL: f64 = 1e-6;

/// Relative floor below which the phase rate is held, in units of `M/μ`.
pub const ENVELOPE_FLOOR: f64 = 1e-9;

/// Amplitude prefactor `P` of the closed-form envelope.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    /// `P = 2`, matched to the first-order area equation.
    #[default]
    Calibrated,
    /// `P = 4`, the printed constant.
    Printed,
    Custom(f64),
}

impl Prefactor {
    pub fn value(&self) -> f64 {
        match self {
            Prefactor::Calibrated => 2.0,
            Prefactor::Printed => 4.0,
            Prefactor::Custom(p) => *p,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Prefactor::Calibrated => "calibrated (P = 2, matches the pendulum ODE)".into(),
            Prefactor::Printed => "printed (P = 4)".into(),
            Prefactor::Custom(p) => format!("custom (P = {p})"),
        }
    }
}

/// `M = √(μ² k c v / (2 ε₀ (c − v)))` from raw electromagnetic constants.
pub fn m_from_constants(mu: f64, k: f64, c: f64, v: f64, eps0: f64) -> Result<f64> {
    if !(v > 0.0 && v < c) {
        return Err(Error::domain("wavefront velocity must satisfy 0 < v < c"));
    }
    if !(k > 0.0 && eps0 > 0.0) {
        return Err(Error::domain("k and eps0 must be positive"));
    }
    Ok((mu * mu * k * c * v / (2.0 * eps0 * (c - v))).sqrt())
}

/// Parameters of one propagation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationParams {
    /// Pendulum frequency scale (rad/ns).
    pub m: f64,
    /// Dipole coupling.
    pub mu: f64,
    pub v_over_c: f64,
    /// Constant decoherence rate (1/ns).
    pub c0: f64,
    /// Area accumulated before `tau0` (rad).
    pub area0: f64,
    pub tau0: f64,
    pub prefactor: Prefactor,
}

impl PropagationParams {
    pub fn new(m: f64, mu: f64, c0: f64, area0: f64) -> Result<Self> {
        let p = PropagationParams {
            m,
            mu,
            v_over_c: 0.5,
            c0,
            area0,
            tau0: 0.0,
            prefactor: Prefactor::Calibrated,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::domain("M must be positive"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::domain("mu must be positive"));
        }
        if !(self.v_over_c > 0.0 && self.v_over_c < 1.0) {
            return Err(Error::domain("v/c must lie in (0, 1)"));
        }
        if !(self.c0 >= 0.0 && self.c0.is_finite()) {
            return Err(Error::domain(format!("C0 must be >= 0, got {}", self.c0)));
        }
        if !(self.area0.is_finite() && self.tau0.is_finite()) {
            return Err(Error::domain("initial area and tau0 must be finite"));
        }
        if !(self.prefactor.value() > 0.0) {
            return Err(Error::domain("prefactor must be positive"));
        }
        Ok(())
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    pub fn with_area0(mut self, area0: f64) -> Self {
        self.area0 = area0;
        self
    }

    pub fn with_prefactor(mut self, prefactor: Prefactor) -> Self {
        self.prefactor = prefactor;
        self
    }

    pub fn decay(&self) -> LinearDecay {
        LinearDecay {
            c0: self.c0,
            tau0: self.tau0,
        }
    }

    /// Area branch bookkeeping for the closed forms.
    pub fn branch(&self) -> AreaBranch {
        AreaBranch::of(self.area0)
    }

    /// `τ_D = ln tan(𝒜₀/4) / M` on the principal branch; `None` at a fixed point.
    pub fn tau_d(&self) -> Option<f64> {
        match self.branch() {
            AreaBranch::Fixed(_) => None,
            AreaBranch::Moving { principal, .. } => Some((principal / 4.0).tan().ln() / self.m),
        }
    }

    /// `+1` when the area grows, `−1` on the descending branch.
    pub fn branch_sign(&self) -> f64 {
        match self.branch() {
            AreaBranch::Moving { sign, .. } => sign,
            AreaBranch::Fixed(_) => 1.0,
        }
    }

    /// Scale `M/μ` of the envelope.
    pub fn field_scale(&self) -> f64 {
        self.m / self.mu
    }
}

/// Where an initial area sits relative to the 4π-periodic flow of
/// `𝒜̇ ∝ sin(𝒜/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AreaBranch {
    /// Within [`FIXED_POINT_TOL`] of `2nπ`; holds that multiple.
    Fixed(f64),
    /// `𝒜 = offset + sign·B` where `B` follows the principal flow from
    /// `principal ∈ (0, 2π)`.
    Moving {
        offset: f64,
        sign: f64,
        principal: f64,
    },
}

impl AreaBranch {
    pub fn of(area0: f64) -> Self {
        let k = (area0 / TAU).round();
        if (area0 - k * TAU).abs() <= FIXED_POINT_TOL {
            return AreaBranch::Fixed(k * TAU);
        }
        let base = (area0 / (2.0 * TAU)).floor() * 2.0 * TAU;
        let r = area0 - base;
        if r < TAU {
            AreaBranch::Moving {
                offset: base,
                sign: 1.0,
                principal: r,
            }
        } else {
            // 𝒜 → 4π − 𝒜 maps the descending branch onto the principal one
            AreaBranch::Moving {
                offset: base + 2.0 * TAU,
                sign: -1.0,
                principal: 2.0 * TAU - r,
            }
        }
    }
}

/// `S(τ) = ∫_{τ₀}^{τ} e^{−C₀(s−τ₀)} ds`, continuous at `C₀ = 0`.
pub fn retarded_clock(c0: f64, elapsed: f64) -> f64 {
    if c0 == 0.0 {
        elapsed
    } else {
        -(-c0 * elapsed).exp_m1() / c0
    }
}

/// Argument `u(τ) = M (S(τ) + τ_D)` of the hypersecant; `None` at fixed points.
pub fn sech_argument(params: &PropagationParams, tau: f64) -> Option<f64> {
    params
        .tau_d()
        .map(|td| params.m * (retarded_clock(params.c0, tau - params.tau0) + td))
}

/// Peak amplitude `(P M/μ) e^{−C₀(τ−τ₀)}` of the hypersecant hump.
pub fn peak_amplitude(params: &PropagationParams, tau: f64) -> f64 {
    params.prefactor.value() * params.field_scale() * (-params.c0 * (tau - params.tau0)).exp()
}

fn check_constant_rate(params: &PropagationParams) -> Result<()> {
    if params.c0 < 0.0 {
        return Err(Error::domain(format!("C0 must be >= 0, got {}", params.c0)));
    }
    params.validate()
}

/// Closed-form envelope `𝓔(τ)`; zero at fixed-point areas.
pub fn envelope_closed_form(params: &PropagationParams, tau: f64) -> Result<f64> {
    check_constant_rate(params)?;
    match params.branch() {
        AreaBranch::Fixed(_) => Ok(0.0),
        AreaBranch::Moving { sign, .. } => {
            let u = sech_argument(params, tau).expect("moving branch has a delay time");
            Ok(sign * peak_amplitude(params, tau) / u.cosh())
        }
    }
}

/// Closed-form area `𝒜(τ)`, using the exact antiderivative
/// `d/dτ [4 atan e^u] = 2 M e^{−C₀(τ−τ₀)} sech u`.
pub fn area_closed_form(params: &PropagationParams, tau: f64) -> Result<f64> {
    check_constant_rate(params)?;
    match params.branch() {
        AreaBranch::Fixed(a) => Ok(a),
        AreaBranch::Moving {
            offset,
            sign,
            principal,
        } => {
            let u = sech_argument(params, tau).expect("moving branch has a delay time");
            let gained = 4.0 * u.exp().atan() - principal;
            Ok(offset + sign * (principal + 0.5 * params.prefactor.value() * gained))
        }
    }
}

/// Closed-form phase rate `(M/P)(e^{C₀x} − e^{−3C₀x}) cosh u`, `x = τ − τ₀`.
pub fn phase_rate_closed_form(params: &PropagationParams, tau: f64) -> Result<f64> {
    check_constant_rate(params)?;
    let (sign, u) = match params.branch() {
        AreaBranch::Fixed(_) => return Ok(0.0),
        AreaBranch::Moving { sign, .. } => (sign, sech_argument(params, tau).expect("moving")),
    };
    let x = tau - params.tau0;
    let c0 = params.c0;
    let rate = sign * params.m / params.prefactor.value()
        * ((c0 * x).exp() - (-3.0 * c0 * x).exp())
        * u.cosh();
    if !rate.is_finite() {
        return Err(Error::NonFinite { tau });
    }
    Ok(rate)
}

/// `φ(τᵢ) = φ₀ + ∫ phase rate` by cumulative trapezoid; `φ ≡ φ₀` at `C₀ = 0`.
pub fn phase_closed_form(params: &PropagationParams, grid: &Grid, phi0: f64) -> Result<Vec<f64>> {
    check_constant_rate(params)?;
    if params.c0 == 0.0 {
        return Ok(vec![phi0; grid.len()]);
    }
    let rates = (0..grid.len())
        .map(|i| phase_rate_closed_form(params, grid.at(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut phi = crate::numerics::cumtrapz(&rates, grid)?;
    for p in &mut phi {
        *p += phi0;
    }
    Ok(phi)
}

/// `v e^{−C₀ (t − t₀)}`.
pub fn retarded_velocity(v: f64, c0: f64, elapsed: f64) -> Result<f64> {
    if !(c0 >= 0.0) {
        return Err(Error::domain(format!("C0 must be >= 0, got {c0}")));
    }
    Ok(v * (-c0 * elapsed).exp())
}

/// Area trajectory of the first-order pendulum equation.
#[derive(Debug, Clone)]
pub struct AreaTrajectory {
    pub grid: Grid,
    pub area: Vec<f64>,
    pub report: IntegratorReport,
}

/// RK4 solution of `𝒜̇ = 2M e^{−Γ/4} sin(𝒜/2)` from `params.area0`.
/// Areas at a fixed point return the constant trajectory.
pub fn pendulum_area_integrate<D: DecayProfile + ?Sized>(
    params: &PropagationParams,
    decay: &D,
    grid: &Grid,
) -> Result<AreaTrajectory> {
    params.validate()?;
    if let AreaBranch::Fixed(a) = params.branch() {
        return Ok(AreaTrajectory {
            grid: *grid,
            area: vec![a; grid.len()],
            report: IntegratorReport::default(),
        });
    }
    let m = params.m;
    let (area, report) = rk4_integrate(
        |tau, a: &f64| 2.0 * m * (-decay.gamma_at(tau) / 4.0).exp() * (a / 2.0).sin(),
        params.area0,
        grid,
    )?;
    Ok(AreaTrajectory {
        grid: *grid,
        area,
        report,
    })
}

/// Interior residual `𝒜̈ − M² e^{−Γ/2} sin 𝒜` using three-point second
/// differences; the end entries are zero.
pub fn second_order_residual<D: DecayProfile + ?Sized>(
    area: &[f64],
    decay: &D,
    grid: &Grid,
    m: f64,
) -> Result<Vec<f64>> {
    let acc = fd_second_derivative(area, grid)?;
    let n = area.len();
    Ok((0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                0.0
            } else {
                acc[i] - m * m * (-decay.gamma_at(grid.at(i)) / 2.0).exp() * area[i].sin()
            }
        })
        .collect())
}

/// Derivatives of the envelope and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDerivative {
    pub d_envelope: f64,
    /// `None` when the envelope is below the floor and the rate must be held.
    pub d_phase: Option<f64>,
}

/// `d𝓔/dτ = −(M²/μ) Im F`, `dφ/dτ = (M²/(μ𝓔)) Re F`.
pub fn envelope_phase_rhs(
    envelope: f64,
    factor: &ResponseFactor,
    params: &PropagationParams,
) -> FieldDerivative {
    let k = params.m * params.m / params.mu;
    let floor = ENVELOPE_FLOOR * params.field_scale();
    FieldDerivative {
        d_envelope: -k * factor.im,
        d_phase: (envelope.abs() > floor).then(|| k * factor.re / envelope),
    }
}

/// Envelope, phase and area sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseState {
    pub grid: Grid,
    pub envelope: Vec<f64>,
    pub phase: Vec<f64>,
    pub area: Vec<f64>,
}

pub const PULSE_COLUMNS: [&str; 4] = ["tau", "envelope", "phi", "area"];

impl PulseState {
    pub fn rows(&self) -> Vec<[f64; 4]> {
        (0..self.grid.len())
            .map(|i| {
                [
                    self.grid.at(i),
                    self.envelope[i],
                    self.phase[i],
                    self.area[i],
                ]
            })
            .collect()
    }

    /// Closed-form envelope, phase and area on `grid`.
    pub fn closed_form(params: &PropagationParams, grid: &Grid, phi0: f64) -> Result<Self> {
        let envelope = (0..grid.len())
            .map(|i| envelope_closed_form(params, grid.at(i)))
            .collect::<Result<Vec<_>>>()?;
        let area = (0..grid.len())
            .map(|i| area_closed_form(params, grid.at(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PulseState {
            grid: *grid,
            envelope,
            phase: phase_closed_form(params, grid, phi0)?,
            area,
        })
    }
}

impl Drive for PulseState {
    /// Linear interpolation, clamped to the grid.
    fn sample(&self, tau: f64) -> (f64, f64) {
        let t = tau.clamp(self.grid.tau0(), self.grid.tau1());
        (
            self.grid.interpolate(&self.envelope, t).expect("clamped"),
            self.grid.interpolate(&self.phase, t).expect("clamped"),
        )
    }
}

/// Integrates the envelope and phase equations along a prescribed area
/// history (`∫Ω = 𝒜` at resonance) and decay profile.
///
/// The phase rate is held at its last finite value while `|𝓔|` sits below
/// `ENVELOPE_FLOOR · M/μ`.
pub fn propagate_envelope<D: DecayProfile + ?Sized>(
    params: &PropagationParams,
    area: &[f64],
    decay: &D,
    grid: &Grid,
    envelope0: f64,
    phi0: f64,
) -> Result<PulseState> {
    params.validate()?;
    if area.len() != grid.len() {
        return Err(Error::domain("area history must match the grid length"));
    }
    let mut held_rate = 0.0;
    let (states, _) = rk4_integrate(
        |tau, y: &[f64; 2]| {
            let t = tau.clamp(grid.tau0(), grid.tau1());
            let a = grid.interpolate(area, t).expect("clamped");
            let f = ResponseFactor::from_parts(decay.gamma_at(tau), a);
            let d = envelope_phase_rhs(y[0], &f, params);
            if let Some(r) = d.d_phase {
                held_rate = r;
            }
            [d.d_envelope, held_rate]
        },
        [envelope0, phi0],
        grid,
    )?;
    Ok(PulseState {
        grid: *grid,
        envelope: states.iter().map(|s| s[0]).collect(),
        phase: states.iter().map(|s| s[1]).collect(),
        area: area.to_vec(),
    })
}

/// Closed form against the differentiated pendulum oracle.
#[derive(Debug, Clone)]
pub struct OracleComparison {
    pub grid: Grid,
    pub closed: Vec<f64>,
    pub oracle: Vec<f64>,
    pub area: Vec<f64>,
    /// `max |oracle − closed| / max |closed|`.
    pub max_rel_dev: f64,
}

impl OracleComparison {
    /// Pointwise deviation normalized by the closed-form sup-norm.
    pub fn rel_dev(&self) -> Vec<f64> {
        let scale = sup_norm(&self.closed).max(f64::MIN_POSITIVE);
        self.closed
            .iter()
            .zip(&self.oracle)
            .map(|(c, o)| (o - c).abs() / scale)
            .collect()
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Integrates the first-order area equation with `Γ = 4C₀(τ−τ₀)`,
/// differentiates the area to get `𝓔`, and compares with the closed form.
pub fn envelope_vs_oracle(params: &PropagationParams, grid: &Grid) -> Result<OracleComparison> {
    check_constant_rate(params)?;
    let traj = pendulum_area_integrate(params, &params.decay(), grid)?;
    let oracle: Vec<f64> = fd_derivative(&traj.area, grid)?
        .into_iter()
        .map(|d| d / params.mu)
        .collect();
    let closed = (0..grid.len())
        .map(|i| envelope_closed_form(params, grid.at(i)))
        .collect::<Result<Vec<_>>>()?;
    let scale = sup_norm(&closed);
    let diff = closed
        .iter()
        .zip(&oracle)
        .fold(0.0f64, |m, (c, o)| m.max((o - c).abs()));
    let max_rel_dev = if scale > 0.0 { diff / scale } else { diff };
    Ok(OracleComparison {
        grid: *grid,
        closed,
        oracle,
        area: traj.area,
        max_rel_dev,
    })
}

/// Lab-frame raster `x/v ∈ [x_min, x_max]`, `t ∈ [t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
}

impl RasterSpec {
    /// Raster covering both ridges over `[τ₀, τ₀ + duration]` with twelve
    /// pulse widths of margin, `dx = 0.05/M` and at most 200 time steps.
    pub fn covering(params: &PropagationParams, duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::domain("raster duration must be positive"));
        }
        let width = 1.0 / params.m;
        let rem = RamificationSplit::of(params.area0)?;
        let td = (rem.remainder_area / 4.0).tan().ln() / params.m;
        let x_min = td.min(0.0) - 12.0 * width;
        let x_max = duration + td.max(0.0) + 12.0 * width;
        let dx = 0.05 * width;
        let dt = (duration / 200.0).min(0.25 * width);
        Ok(RasterSpec {
            x_min,
            x_max,
            nx: ((x_max - x_min) / dx).ceil() as usize + 1,
            t_min: params.tau0,
            t_max: params.tau0 + duration,
            nt: (duration / dt).ceil() as usize + 1,
        })
    }

    pub fn x_grid(&self) -> Result<Grid> {
        Grid::new(self.x_min, self.x_max, self.nx)
    }

    pub fn t_grid(&self) -> Result<Grid> {
        Grid::new(self.t_min, self.t_max, self.nt)
    }
}

/// Split of an initial area into `2nπ` transparent plus a remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamificationSplit {
    pub n_transparent: u32,
    pub remainder_area: f64,
}

impl RamificationSplit {
    pub fn of(area0: f64) -> Result<Self> {
        if !(area0 > 0.0 && area0.is_finite()) {
            return Err(Error::domain("ramification needs a positive initial area"));
        }
        if let AreaBranch::Fixed(_) = AreaBranch::of(area0) {
            return Err(Error::domain(format!(
                "initial area {area0} is a multiple of 2π; nothing ramifies (use the envelope command)"
            )));
        }
        let n = (area0 / TAU).floor();
        Ok(RamificationSplit {
            n_transparent: n as u32,
            remainder_area: area0 - n * TAU,
        })
    }
}

/// Envelope over lab coordinates, row-major in `t`.
#[derive(Debug, Clone)]
pub struct RamificationSurface {
    pub x_over_v: Grid,
    pub t: Grid,
    pub transparent: Vec<f64>,
    pub remainder: Vec<f64>,
    pub split: RamificationSplit,
}

pub const SURFACE_COLUMNS: [&str; 3] = ["x_over_v", "t", "envelope"];
pub const RIDGE_COLUMNS: [&str; 4] = ["t", "x_peak_transparent", "x_peak_remainder", "separation"];

impl RamificationSurface {
    pub fn total(&self, it: usize, ix: usize) -> f64 {
        let k = it * self.x_over_v.len() + ix;
        self.transparent[k] + self.remainder[k]
    }

    fn row<'a>(&self, data: &'a [f64], it: usize) -> &'a [f64] {
        let nx = self.x_over_v.len();
        &data[it * nx..(it + 1) * nx]
    }

    /// Long-format rows `(x/v, t, envelope)`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.t.len()).flat_map(move |it| {
            (0..self.x_over_v.len())
                .map(move |ix| [self.x_over_v.at(ix), self.t.at(it), self.total(it, ix)])
        })
    }

    /// Ridge positions of both components at every `t`.
    pub fn ridge_trace(&self) -> Vec<RidgePoint> {
        (0..self.t.len())
            .map(|it| {
                let xt = ridge_centroid(&self.x_over_v, self.row(&self.transparent, it));
                let xr = ridge_centroid(&self.x_over_v, self.row(&self.remainder, it));
                RidgePoint {
                    t: self.t.at(it),
                    x_transparent: xt,
                    x_remainder: xr,
                    separation: xt - xr,
                    height_transparent: peak_value(self.row(&self.transparent, it)),
                    height_remainder: peak_value(self.row(&self.remainder, it)),
                }
            })
            .collect()
    }
}

/// One time slice of the ridge trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePoint {
    pub t: f64,
    pub x_transparent: f64,
    pub x_remainder: f64,
    pub separation: f64,
    pub height_transparent: f64,
    pub height_remainder: f64,
}

/// Centroid over a window of ten half-widths around the maximum; the hump
/// is symmetric so this locates its centre well below the raster step.
fn ridge_centroid(x: &Grid, row: &[f64]) -> f64 {
    let (imax, vmax) = row
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
            if *v > bv {
                (i, *v)
            } else {
                (bi, bv)
            }
        });
    if !(vmax > 0.0) {
        return f64::NAN;
    }
    // half-width from the half-maximum crossing
    let half = 0.5 * vmax;
    let mut k = 1;
    while imax + k < row.len() && row[imax + k] > half {
        k += 1;
    }
    let reach = (10 * k).min(imax).min(row.len() - 1 - imax);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in row
        .iter()
        .enumerate()
        .take(imax + reach + 1)
        .skip(imax - reach)
    {
        num += x.at(i) * v;
        den += v;
    }
    num / den
}

fn peak_value(row: &[f64]) -> f64 {
    row.iter().fold(0.0, |m: f64, v| m.max(*v))
}

/// Rasterizes the transparent and remainder components.
///
/// The transparent `2nπ` part is `n·(P M/μ) sech(M(t − t₀ − x/v))`. The
/// remainder of area `𝒜_r` is `(P M/μ) e^{−C₀(t−t₀)} sech(M(S(t) + τ_D − x/v))`
/// with `τ_D` from `𝒜_r`; its ridge moves at `v e^{−C₀(t−t₀)}`.
pub fn ramification_surface(
    params: &PropagationParams,
    raster: &RasterSpec,
) -> Result<RamificationSurface> {
    check_constant_rate(params)?;
    let split = RamificationSplit::of(params.area0)?;
    let xg = raster.x_grid()?;
    let tg = raster.t_grid()?;
    let width = 1.0 / params.m;
    if xg.step() > 0.25 * width || tg.step() > 0.25 * width {
        return Err(Error::Resolution(format!(
            "raster steps dx = {:.3e}, dt = {:.3e} exceed 0.25/M = {:.3e}",
            xg.step(),
            tg.step(),
            0.25 * width
        )));
    }
    let remainder = params.with_area0(split.remainder_area);
    let td = remainder.tau_d().expect("remainder is not a fixed point");
    let amp = params.prefactor.value() * params.field_scale();
    let (nx, nt) = (xg.len(), tg.len());
    let mut transparent = Vec::with_capacity(nx * nt);
    let mut rem = Vec::with_capacity(nx * nt);
    for it in 0..nt {
        let elapsed = tg.at(it) - params.tau0;
        let centre_r = retarded_clock(params.c0, elapsed) + td;
        let height_r = amp * (-params.c0 * elapsed).exp();
        for ix in 0..nx {
            let x = xg.at(ix);
            transparent.push(split.n_transparent as f64 * amp / (params.m * (elapsed - x)).cosh());
            rem.push(height_r / (params.m * (centre_r - x)).cosh());
        }
    }
    Ok(RamificationSurface {
        x_over_v: xg,
        t: tg,
        transparent,
        remainder: rem,
        split,
    })
}

/// Instantaneous ridge velocity `d(x/v)/dt` by finite differences of a
/// ridge trace, in units of `v`.
pub fn ridge_velocity(trace: &[RidgePoint], remainder: bool) -> Result<Vec<f64>> {
    if trace.len() < 3 {
        return Err(Error::domain("ridge trace needs at least three slices"));
    }
    let t0 = trace[0].t;
    let t1 = trace[trace.len() - 1].t;
    let g = Grid::new(t0, t1, trace.len())?;
    let x: Vec<f64> = trace
        .iter()
        .map(|p| {
            if remainder {
                p.x_remainder
            } else {
                p.x_transparent
            }
        })
        .collect();
    fd_derivative(&x, &g)
}

// Lets `[f64; 2]` states used above share the generic integrators.
const _: fn() = || {
    fn assert_state<S: OdeState>() {}
    assert_state::<[f64; 2]>();
};
