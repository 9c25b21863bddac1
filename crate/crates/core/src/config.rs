//! Run configuration: a flat key/value TOML file, `key=value` overrides and
//! built-in defaults, resolved in that order of increasing precedence.
//!
//! Frequencies are entered in GHz and rates in MHz; [`RunConfig::resolve`]
//! converts them to rad/ns and 1/ns.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bath::SpectralDensity;
use crate::error::{Error, Result};
use crate::numerics::Grid;
use crate::propagation::{Prefactor, PropagationParams};
use crate::units::{ghz_to_rad_per_ns, mhz_rate_to_per_ns, period_ns};

/// Largest allowed step in units of the fastest time scale.
pub const STEP_FRACTION: f64 = 0.01;

/// Subcommand a configuration is resolved for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Dressed,
    Evolve,
    Envelope,
    Phase,
    Ramify,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dressed => "dressed",
            Command::Evolve => "evolve",
            Command::Envelope => "envelope",
            Command::Phase => "phase",
            Command::Ramify => "ramify",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Excited,
    Ground,
    Plus,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKind {
    Constant,
    Ohmic,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefactorChoice {
    Calibrated,
    Printed,
}

/// All user-facing parameters, in user units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Carrier frequency (GHz).
    pub omega_ghz: f64,
    /// Qubit transition frequency (GHz); equal to the carrier by default.
    pub omega0_ghz: Option<f64>,
    pub q_factor: f64,
    /// Bath rate (MHz); `omega/Q` when absent.
    pub gamma_mhz: Option<f64>,
    /// Constant decoherence rate (1/ns); `γ/4` when absent.
    pub c0_per_ns: Option<f64>,
    /// Pendulum scale M (rad/ns).
    pub m: f64,
    pub mu: f64,
    pub v_over_c: f64,
    /// Initial area (rad); command default when absent.
    pub area0: Option<f64>,
    pub tau0: f64,
    pub phi0: f64,
    /// Integration horizon (ns); command default when absent.
    pub horizon_ns: Option<f64>,
    pub grid_n: Option<usize>,
    pub prefactor: PrefactorChoice,
    /// Use the adaptive integrator as a diagnostic alongside fixed-step RK4.
    pub adaptive: bool,
    pub sweep_gamma_mhz: Vec<f64>,
    pub workers: Option<usize>,
    /// Reserved; the simulation core is deterministic.
    pub seed: u64,

    pub bath: BathKind,
    pub ohmic_eta: f64,
    pub ohmic_cutoff_ghz: f64,
    /// Two-column CSV (Ω in GHz, γ in MHz).
    pub bath_csv: Option<String>,

    /// Full-line area of the sech drive used by `dressed` and `evolve` (rad).
    pub pulse_area: f64,
    pub pulse_width_ns: f64,
    pub pulse_center_ns: f64,
    pub pulse_phase: f64,
    /// Linear phase sweep of the drive (rad/ns).
    pub pulse_chirp: f64,
    pub rho0: InitialState,

    pub raster_nx: Option<usize>,
    pub raster_nt: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega_ghz: 5.0,
            omega0_ghz: None,
            q_factor: 1000.0,
            gamma_mhz: None,
            c0_per_ns: None,
            m: 2.0,
            mu: 1.0,
            v_over_c: 0.5,
            area0: None,
            tau0: 0.0,
            phi0: 0.0,
            horizon_ns: None,
            grid_n: None,
            prefactor: PrefactorChoice::Calibrated,
            adaptive: false,
            sweep_gamma_mhz: vec![5.0, 50.0, 100.0, 150.0],
            workers: None,
            seed: 0,
            bath: BathKind::Constant,
            ohmic_eta: 0.01,
            ohmic_cutoff_ghz: 10.0,
            bath_csv: None,
            pulse_area: TAU,
            pulse_width_ns: 1.0,
            pulse_center_ns: 12.0,
            pulse_phase: PI / 2.0,
            pulse_chirp: 0.0,
            rho0: InitialState::Ground,
            raster_nx: None,
            raster_nt: None,
        }
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    // reuse the TOML value grammar, falling back to a bare string
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("config file", e.to_string()))?;
        Self::from_table(table)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        toml::Value::Table(table)
            .try_into::<RunConfig>()
            .map_err(|e| Error::config(field_of(&e.to_string()), e.to_string()))
    }

    /// Merges an optional file with `key=value` overrides; overrides win.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::config("--config", format!("{}: {e}", p.display())))?
                .parse::<toml::Table>()
                .map_err(|e| Error::config("config file", e.to_string()))?,
            None => toml::Table::new(),
        };
        for (k, v) in overrides {
            table.insert(k.clone(), parse_scalar(v));
        }
        let cfg = Self::from_table(table)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be positive, got {v}")))
            }
        };
        positive("omega_ghz", self.omega_ghz)?;
        if let Some(w) = self.omega0_ghz {
            positive("omega0_ghz", w)?;
        }
        positive("q_factor", self.q_factor)?;
        positive("m", self.m)?;
        positive("mu", self.mu)?;
        positive("pulse_width_ns", self.pulse_width_ns)?;
        if !(self.v_over_c > 0.0 && self.v_over_c < 1.0) {
            return Err(Error::config("v_over_c", "must lie in (0, 1)"));
        }
        if let Some(g) = self.gamma_mhz {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::config("gamma_mhz", "must be non-negative"));
            }
        }
        if let Some(c) = self.c0_per_ns {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::config("c0_per_ns", "must be non-negative"));
            }
        }
        if self.sweep_gamma_mhz.is_empty() {
            return Err(Error::config("sweep_gamma_mhz", "list must not be empty"));
        }
        if let Some(g) = self
            .sweep_gamma_mhz
            .iter()
            .find(|g| !(**g >= 0.0 && g.is_finite()))
        {
            return Err(Error::config(
                "sweep_gamma_mhz",
                format!("negative or invalid rate {g}"),
            ));
        }
        if let Some(h) = self.horizon_ns {
            positive("horizon_ns", h)?;
        }
        if matches!(self.grid_n, Some(n) if n < 3) {
            return Err(Error::config("grid_n", "needs at least 3 samples"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if self.bath == BathKind::Tabulated && self.bath_csv.is_none() {
            return Err(Error::config(
                "bath_csv",
                "required when bath = \"tabulated\"",
            ));
        }
        for (name, v) in [
            ("tau0", self.tau0),
            ("phi0", self.phi0),
            ("pulse_area", self.pulse_area),
            ("pulse_center_ns", self.pulse_center_ns),
            ("pulse_phase", self.pulse_phase),
            ("pulse_chirp", self.pulse_chirp),
        ] {
            if !v.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Bath rate in MHz (explicit or `ω/Q`).
    pub fn gamma_mhz(&self) -> f64 {
        self.gamma_mhz
            .unwrap_or(self.omega_ghz * 1e3 / self.q_factor)
    }

    /// Resolves to internal units for `command`.
    pub fn resolve(&self, command: Command) -> Result<Resolved> {
        self.validate()?;
        let gamma = mhz_rate_to_per_ns(self.gamma_mhz());
        let c0 = self.c0_per_ns.unwrap_or(gamma / 4.0);
        let omega = ghz_to_rad_per_ns(self.omega_ghz);
        let omega0 = ghz_to_rad_per_ns(self.omega0_ghz.unwrap_or(self.omega_ghz));
        let area0 = self.area0.unwrap_or(match command {
            Command::Ramify => 3.0 * PI,
            _ => PI,
        });
        let periods = 20.0 * period_ns(self.omega_ghz);
        let horizon = self.horizon_ns.unwrap_or(match command {
            Command::Envelope => 20.0 / self.m,
            Command::Phase | Command::Sweep | Command::Ramify => periods,
            Command::Dressed | Command::Evolve => 2.0 * self.pulse_center_ns,
        });
        let max_gamma = match command {
            Command::Sweep => self
                .sweep_gamma_mhz
                .iter()
                .fold(0.0f64, |m, g| m.max(mhz_rate_to_per_ns(*g))),
            _ => gamma,
        };
        let drive_amp = self.pulse_area / (PI * self.pulse_width_ns);
        let mut fastest = self.m.max(max_gamma);
        if matches!(command, Command::Dressed | Command::Evolve) {
            fastest = fastest
                .max(drive_amp.abs())
                .max((omega0 - omega).abs())
                .max(self.pulse_chirp.abs())
                .max(1.0 / self.pulse_width_ns);
        }
        let h_max = STEP_FRACTION / fastest;
        let grid = match self.grid_n {
            Some(n) => {
                let g = Grid::new(self.tau0, self.tau0 + horizon, n)?;
                if g.step() > h_max * (1.0 + 1e-12) {
                    return Err(Error::config(
                        "grid_n",
                        format!(
                            "step {:.4e} ns exceeds the limit {:.4e} ns; use at least {} samples",
                            g.step(),
                            h_max,
                            (horizon / h_max).ceil() as usize + 1
                        ),
                    ));
                }
                g
            }
            None => Grid::with_max_step(self.tau0, self.tau0 + horizon, h_max)?,
        };
        let prefactor = match self.prefactor {
            PrefactorChoice::Calibrated => Prefactor::Calibrated,
            PrefactorChoice::Printed => Prefactor::Printed,
        };
        let propagation = PropagationParams {
            m: self.m,
            mu: self.mu,
            v_over_c: self.v_over_c,
            c0,
            area0,
            tau0: self.tau0,
            prefactor,
        };
        propagation
            .validate()
            .map_err(|e| Error::config("propagation", e.to_string()))?;
        let mut warnings = Vec::new();
        if c0 >= self.m {
            warnings.push(format!(
                "C0 = {c0:.4e}/ns >= M = {:.4e} rad/ns: outside the slowly varying decay regime",
                self.m
            ));
        }
        Ok(Resolved {
            command,
            omega,
            omega0,
            gamma,
            c0,
            propagation,
            grid,
            horizon,
            warnings,
        })
    }

    /// Spectral density for the Lindblad engine.
    pub fn spectral_density(&self) -> Result<SpectralDensity> {
        match self.bath {
            BathKind::Constant => SpectralDensity::constant(mhz_rate_to_per_ns(self.gamma_mhz())),
            BathKind::Ohmic => {
                SpectralDensity::ohmic(self.ohmic_eta, ghz_to_rad_per_ns(self.ohmic_cutoff_ghz))
            }
            BathKind::Tabulated => {
                let path = self.bath_csv.as_ref().expect("validated");
                SpectralDensity::load_csv(path)
            }
        }
        .map_err(|e| match e {
            Error::Domain(msg) => Error::config("bath", msg),
            other => other,
        })
    }
}

fn field_of(message: &str) -> String {
    // serde reports "unknown field `x`" or "... for key `x`"
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".into())
}

/// Parameters in internal units, plus the grid in force.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    /// Carrier (rad/ns).
    pub omega: f64,
    /// Qubit transition (rad/ns).
    pub omega0: f64,
    /// Bath rate (1/ns).
    pub gamma: f64,
    /// Constant decoherence rate (1/ns).
    pub c0: f64,
    pub propagation: PropagationParams,
    #[serde(skip)]
    pub grid: Grid,
    pub horizon: f64,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_reproduce_figure_scale() {
        let cfg = RunConfig::default();
        let r = cfg.resolve(Command::Sweep).unwrap();
        assert!((r.gamma - 0.005).abs() < 1e-15);
        assert!((r.c0 - 0.00125).abs() < 1e-15);
        assert!((r.omega - 10.0 * PI).abs() < 1e-12);
        assert!((r.horizon - 4.0).abs() < 1e-12);
        assert!(r.grid.step() <= 0.01 / 2.0);
        assert_eq!(r.propagation.area0, PI);
        assert_eq!(
            cfg.resolve(Command::Ramify).unwrap().propagation.area0,
            3.0 * PI
        );
    }

    #[test]
    fn overrides_beat_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "m = 3.0\nmu = 2.0\nprefactor = \"printed\"\n").unwrap();
        let cfg = RunConfig::load(Some(&path), &[("m".into(), "4.5".into())]).unwrap();
        assert_eq!(cfg.m, 4.5);
        assert_eq!(cfg.mu, 2.0);
        assert_eq!(cfg.prefactor, PrefactorChoice::Printed);
        let cfg = RunConfig::load(None, &[("prefactor".into(), "printed".into())]).unwrap();
        assert_eq!(cfg.prefactor, PrefactorChoice::Printed);
    }

    #[test]
    fn unknown_or_bad_fields_name_the_field() {
        match RunConfig::from_toml_str("bogus = 1") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "bogus"),
            other => panic!("{other:?}"),
        }
        let bad = RunConfig {
            v_over_c: 1.5,
            ..RunConfig::default()
        };
        match bad.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "v_over_c"),
            other => panic!("{other:?}"),
        }
        let neg = RunConfig {
            sweep_gamma_mhz: vec![5.0, -1.0],
            ..RunConfig::default()
        };
        assert!(matches!(neg.validate(), Err(Error::Config { .. })));
    }

    #[test]
    fn coarse_explicit_grid_is_rejected() {
        let cfg = RunConfig {
            grid_n: Some(10),
            ..RunConfig::default()
        };
        assert!(matches!(
            cfg.resolve(Command::Envelope),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn regime_warning_is_recorded() {
        let cfg = RunConfig {
            c0_per_ns: Some(3.0),
            ..RunConfig::default()
        };
        let r = cfg.resolve(Command::Envelope).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    proptest! {
        #[test]
        fn toml_round_trip_is_lossless(
            omega in 0.1f64..20.0,
            m in 0.1f64..10.0,
            v in 0.01f64..0.99,
            area in proptest::option::of(0.0f64..20.0),
            n in proptest::option::of(3usize..100_000),
            gammas in proptest::collection::vec(0.0f64..500.0, 1..6),
        ) {
            let cfg = RunConfig {
                omega_ghz: omega,
                m,
                v_over_c: v,
                area0: area,
                grid_n: n,
                sweep_gamma_mhz: gammas,
                ..RunConfig::default()
            };
            let text = cfg.to_toml_string().unwrap();
            prop_assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
        }
    }
}
