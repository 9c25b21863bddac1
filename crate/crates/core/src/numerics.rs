//! Shared numerical kernels: a uniform local-time grid, fixed-step RK4,
//! an adaptive Dormand–Prince 5(4) integrator for diagnostics, cumulative
//! trapezoid quadrature and finite-difference derivatives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `tau0, tau0 + h, ..., tau1` with `n` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    tau0: f64,
    tau1: f64,
    n: usize,
}

impl Grid {
    pub fn new(tau0: f64, tau1: f64, n: usize) -> Result<Self> {
        if !(tau0.is_finite() && tau1.is_finite()) {
            return Err(Error::domain("grid bounds must be finite"));
        }
        if n < 2 {
            return Err(Error::domain(format!(
                "grid needs at least 2 samples, got {n}"
            )));
        }
        if tau1 <= tau0 {
            return Err(Error::domain(format!(
                "grid must be increasing, got [{tau0}, {tau1}]"
            )));
        }
        Ok(Grid { tau0, tau1, n })
    }

    /// Smallest grid on `[tau0, tau1]` whose step does not exceed `h_max`.
    pub fn with_max_step(tau0: f64, tau1: f64, h_max: f64) -> Result<Self> {
        if !(h_max > 0.0) {
            return Err(Error::domain("maximum step must be positive"));
        }
        let intervals = ((tau1 - tau0) / h_max).ceil().max(1.0) as usize;
        Grid::new(tau0, tau1, intervals + 1)
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.tau1 - self.tau0) / (self.n - 1) as f64
    }

    /// Sample `i`; the last sample is exactly `tau1`.
    pub fn at(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.tau1
        } else {
            self.tau0 + i as f64 * self.step()
        }
    }

    pub fn samples(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i)).collect()
    }

    pub fn contains(&self, tau: f64) -> bool {
        tau >= self.tau0 && tau <= self.tau1
    }

    /// Evaluates `f` at every node.
    pub fn map<F: FnMut(f64) -> f64>(&self, mut f: F) -> Vec<f64> {
        (0..self.n).map(|i| f(self.at(i))).collect()
    }

    /// Linear interpolation of node values at `tau`.
    pub fn interpolate(&self, values: &[f64], tau: f64) -> Result<f64> {
        if values.len() != self.n {
            return Err(length_mismatch(self.n, values.len()));
        }
        if !self.contains(tau) {
            return Err(Error::domain(format!(
                "tau = {tau} outside grid [{}, {}]",
                self.tau0, self.tau1
            )));
        }
        let s = (tau - self.tau0) / self.step();
        let i = (s.floor() as usize).min(self.n - 2);
        let w = s - i as f64;
        Ok(values[i] * (1.0 - w) + values[i + 1] * w)
    }
}

fn length_mismatch(expected: usize, got: usize) -> Error {
    Error::domain(format!(
        "sample length {got} does not match grid length {expected}"
    ))
}

/// A state vector the integrators can advance.
pub trait OdeState: Clone {
    /// Returns `self + a * k`.
    fn add_scaled(&self, a: f64, k: &Self) -> Self;
    fn is_finite(&self) -> bool;
    /// Max-norm, used for reports and adaptive error control.
    fn max_norm(&self) -> f64;
}

impl OdeState for f64 {
    fn add_scaled(&self, a: f64, k: &Self) -> Self {
        self + a * k
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn max_norm(&self) -> f64 {
        self.abs()
    }
}

impl<const N: usize> OdeState for [f64; N] {
    fn add_scaled(&self, a: f64, k: &Self) -> Self {
        let mut out = *self;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += a * ki;
        }
        out
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
    fn max_norm(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Counters collected while integrating.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorReport {
    pub steps: usize,
    pub max_rhs_norm: f64,
    /// Only the adaptive integrator rejects steps.
    pub rejected_steps: usize,
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<S, F>(rhs: &mut F, state: &S, tau: f64, h: f64) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    rk4_step_reporting(rhs, state, tau, h, &mut IntegratorReport::default())
}

fn checked<S: OdeState>(k: S, tau: f64, report: &mut IntegratorReport) -> Result<S> {
    if !k.is_finite() {
        return Err(Error::NonFinite { tau });
    }
    report.max_rhs_norm = report.max_rhs_norm.max(k.max_norm());
    Ok(k)
}

fn rk4_step_reporting<S, F>(
    rhs: &mut F,
    y: &S,
    tau: f64,
    h: f64,
    report: &mut IntegratorReport,
) -> Result<S>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let half = 0.5 * h;
    let k1 = checked(rhs(tau, y), tau, report)?;
    let k2 = checked(
        rhs(tau + half, &y.add_scaled(half, &k1)),
        tau + half,
        report,
    )?;
    let k3 = checked(
        rhs(tau + half, &y.add_scaled(half, &k2)),
        tau + half,
        report,
    )?;
    let k4 = checked(rhs(tau + h, &y.add_scaled(h, &k3)), tau + h, report)?;
    let next = y
        .add_scaled(h / 6.0, &k1)
        .add_scaled(h / 3.0, &k2)
        .add_scaled(h / 3.0, &k3)
        .add_scaled(h / 6.0, &k4);
    if !next.is_finite() {
        return Err(Error::NonFinite { tau: tau + h });
    }
    report.steps += 1;
    Ok(next)
}

/// Fixed-step RK4 over every node of `grid`; returns one state per node.
pub fn rk4_integrate<S, F>(mut rhs: F, y0: S, grid: &Grid) -> Result<(Vec<S>, IntegratorReport)>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    rk4_integrate_checked(&mut rhs, y0, grid, |_, _| Ok(()))
}

/// As [`rk4_integrate`], calling `check` on every accepted state.
pub fn rk4_integrate_checked<S, F, C>(
    rhs: &mut F,
    y0: S,
    grid: &Grid,
    mut check: C,
) -> Result<(Vec<S>, IntegratorReport)>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
    C: FnMut(f64, &S) -> Result<()>,
{
    let mut report = IntegratorReport::default();
    let mut out = Vec::with_capacity(grid.len());
    check(grid.tau0(), &y0)?;
    out.push(y0);
    for i in 1..grid.len() {
        let tau = grid.at(i - 1);
        let h = grid.at(i) - tau;
        let next = rk4_step_reporting(rhs, &out[i - 1], tau, h, &mut report)?;
        check(grid.at(i), &next)?;
        out.push(next);
    }
    Ok((out, report))
}

/// Tolerances for [`rk45_integrate`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_initial: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h_initial: 1e-3,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand–Prince 5(4) from `tau0` to `tau1`; returns the final
/// state. Used only to diagnose stiffness, never for CSV output.
pub fn rk45_integrate<S, F>(
    mut rhs: F,
    y0: S,
    tau0: f64,
    tau1: f64,
    opts: AdaptiveOptions,
) -> Result<(S, IntegratorReport)>
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    if tau1 <= tau0 {
        return Err(Error::domain("adaptive integration needs tau1 > tau0"));
    }
    let mut report = IntegratorReport::default();
    let mut tau = tau0;
    let mut y = y0;
    let mut h = opts.h_initial.min(tau1 - tau0);
    while tau < tau1 {
        if report.steps + report.rejected_steps >= opts.max_steps {
            return Err(Error::IntegrationUnstable {
                tau,
                detail: "adaptive step budget exhausted".into(),
            });
        }
        h = h.min(tau1 - tau);
        let mut k: Vec<S> = Vec::with_capacity(7);
        for stage in 0..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if DP_A[stage][j] != 0.0 {
                    ys = ys.add_scaled(h * DP_A[stage][j], kj);
                }
            }
            let ks = checked(rhs(tau + DP_C[stage] * h, &ys), tau, &mut report)?;
            k.push(ks);
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for (s, ks) in k.iter().enumerate() {
            y5 = y5.add_scaled(h * DP_B5[s], ks);
            y4 = y4.add_scaled(h * DP_B4[s], ks);
        }
        let err = y5.add_scaled(-1.0, &y4).max_norm();
        let scale = opts.atol + opts.rtol * y.max_norm().max(y5.max_norm());
        let ratio = err / scale;
        if ratio <= 1.0 {
            tau += h;
            y = y5;
            report.steps += 1;
        } else {
            report.rejected_steps += 1;
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < opts.h_min {
            return Err(Error::IntegrationUnstable {
                tau,
                detail: format!("adaptive step fell below {}", opts.h_min),
            });
        }
    }
    Ok((y, report))
}

/// Cumulative trapezoid integral of node values; `out[0] == 0`.
pub fn cumtrapz(samples: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    if samples.len() != grid.len() {
        return Err(length_mismatch(grid.len(), samples.len()));
    }
    let h = grid.step();
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(acc);
    for w in samples.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    Ok(out)
}

/// Central differences in the interior, second-order one-sided at the ends.
pub fn fd_derivative(samples: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    let n = samples.len();
    if n != grid.len() {
        return Err(length_mismatch(grid.len(), n));
    }
    if n < 3 {
        return Err(Error::domain(format!(
            "finite differences need n >= 3, got {n}"
        )));
    }
    let h = grid.step();
    let f = samples;
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    Ok(out)
}

/// Three-point second difference at interior nodes; the two end entries
/// repeat their neighbours.
pub fn fd_second_derivative(samples: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    let n = samples.len();
    if n != grid.len() {
        return Err(length_mismatch(grid.len(), n));
    }
    if n < 3 {
        return Err(Error::domain(format!(
            "finite differences need n >= 3, got {n}"
        )));
    }
    let h2 = grid.step() * grid.step();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (samples[i + 1] - 2.0 * samples[i] + samples[i - 1]) / h2;
    }
    out[0] = out[1];
    out[n - 1] = out[n - 2];
    Ok(out)
}

/// Least-squares slope of `y` against `x` with free intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain(
            "linear fit needs two equal-length series of >= 2 points",
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    if sxx == 0.0 {
        return Err(Error::domain("linear fit over a degenerate abscissa"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
