//! The six simulation commands. Each writes its CSV files into an output
//! directory and returns what the run manifest needs to know.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::bath::DecayProfile;
use crate::config::{Command, InitialState, Resolved, RunConfig};
use crate::dressed::{
    adiabatic_phase_cumulative, dressed_eigenvalues, mixing_angle, Branch, QubitParams,
    GEOMETRIC_SIGN_CONVENTION,
};
use crate::error::{Error, Result};
use crate::lindblad::{evolve, Basis, DensityMatrix2, Drive, SechDrive, TRAJECTORY_COLUMNS};
use crate::numerics::{rk45_integrate, AdaptiveOptions, Grid};
use crate::propagation::{
    envelope_vs_oracle, pendulum_area_integrate, phase_closed_form, phase_rate_closed_form,
    ramification_surface, PulseState, RasterSpec, PULSE_COLUMNS, RIDGE_COLUMNS, SURFACE_COLUMNS,
};
use crate::report::{write_csv, GridSummary, RunManifest, UnitConversions};
use crate::units::mhz_rate_to_per_ns;

pub const DRESSED_COLUMNS: [&str; 5] = ["tau", "theta", "omega_plus", "phi_dyn", "phi_geo"];
pub const ENVELOPE_COLUMNS: [&str; 6] = [
    "tau",
    "envelope_closed",
    "envelope_oracle",
    "phi",
    "area",
    "rel_dev",
];
pub const PHASE_COLUMNS: [&str; 3] = ["tau", "phi", "phase_rate"];
pub const SWEEP_COLUMNS: [&str; 3] = ["tau", "area", "phi"];
pub const SWEEP_SUMMARY_COLUMNS: [&str; 5] = [
    "gamma_mhz",
    "c0_per_ns",
    "area_final",
    "phi_final",
    "phase_rate_final",
];

/// Files written and diagnostics gathered by one command.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub diagnostics: serde_json::Map<String, serde_json::Value>,
}

impl CommandOutput {
    fn file(&mut self, dir: &Path, name: &str) -> PathBuf {
        let p = dir.join(name);
        self.files.push(p.clone());
        p
    }
}

/// Resolves `cfg`, runs `command`, and writes the manifest (also on failure
/// once the output directory exists).
pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<(RunManifest, CommandOutput)> {
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    let mut manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.name().into(),
        status: "ok".into(),
        parameters_user: serde_json::to_value(cfg).map_err(|e| Error::Serde(e.to_string()))?,
        parameters_internal: serde_json::Value::Null,
        units: UnitConversions::default(),
        grid: None,
        prefactor: String::new(),
        geometric_sign_convention: GEOMETRIC_SIGN_CONVENTION,
        warnings: Vec::new(),
        outputs: Vec::new(),
        wall_clock_seconds: 0.0,
    };
    let result = cfg.resolve(command).and_then(|resolved| {
        manifest.grid = Some(GridSummary::from(&resolved.grid));
        manifest.prefactor = resolved.propagation.prefactor.describe();
        manifest.parameters_internal =
            serde_json::to_value(&resolved).map_err(|e| Error::Serde(e.to_string()))?;
        manifest.warnings.extend(resolved.warnings.iter().cloned());
        dispatch(command, cfg, &resolved, out)
    });
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    match result {
        Ok(output) => {
            manifest.warnings.extend(output.warnings.iter().cloned());
            manifest.outputs = output.files.iter().map(|p| file_name(p)).collect();
            if let serde_json::Value::Object(m) = &mut manifest.parameters_internal {
                m.insert("diagnostics".into(), output.diagnostics.clone().into());
            }
            manifest.write(out)?;
            Ok((manifest, output))
        }
        Err(e) => {
            manifest.status = format!("error (exit {}): {e}", e.exit_code());
            manifest.write(out)?;
            Err(e)
        }
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn dispatch(command: Command, cfg: &RunConfig, r: &Resolved, out: &Path) -> Result<CommandOutput> {
    match command {
        Command::Dressed => cmd_dressed(cfg, r, out),
        Command::Evolve => cmd_evolve(cfg, r, out),
        Command::Envelope => cmd_envelope(cfg, r, out),
        Command::Phase => cmd_phase(cfg, r, out),
        Command::Ramify => cmd_ramify(cfg, r, out),
        Command::Sweep => cmd_sweep(cfg, r, out),
    }
}

fn drive_of(cfg: &RunConfig) -> Result<SechDrive> {
    let mut d = SechDrive::with_area(
        cfg.pulse_area,
        cfg.mu,
        cfg.pulse_width_ns,
        cfg.pulse_center_ns,
        cfg.pulse_phase,
    )?;
    d.chirp = cfg.pulse_chirp;
    Ok(d)
}

/// Mixing angle, upper dressed eigenvalue and adiabatic phases of the
/// configured drive.
pub fn cmd_dressed(cfg: &RunConfig, r: &Resolved, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::default();
    let qubit = QubitParams::new(r.omega0, r.omega, cfg.mu)?;
    let drive = drive_of(cfg)?;
    let g = &r.grid;
    let (mut theta, mut omega_plus, mut phi) = (vec![], vec![], vec![]);
    for i in 0..g.len() {
        let (e, p) = drive.sample(g.at(i));
        let mu_e = cfg.mu * e;
        theta.push(mixing_angle(mu_e, qubit.delta())?);
        omega_plus.push(dressed_eigenvalues(mu_e, qubit.delta())?.0);
        phi.push(p);
    }
    let phases = adiabatic_phase_cumulative(Branch::Plus, &omega_plus, &theta, &phi, g)?;
    let path = o.file(out, "dressed.csv");
    write_csv(
        &path,
        &DRESSED_COLUMNS,
        (0..g.len()).map(|i| {
            [
                g.at(i),
                theta[i],
                omega_plus[i],
                phases[i].dynamic,
                phases[i].geometric,
            ]
        }),
    )?;
    let last = phases[phases.len() - 1];
    o.diagnostics
        .insert("phi_dyn_final".into(), json!(last.dynamic));
    o.diagnostics
        .insert("phi_geo_final".into(), json!(last.geometric));
    Ok(o)
}

fn initial_state(kind: InitialState) -> DensityMatrix2 {
    match kind {
        InitialState::Excited => DensityMatrix2::excited(),
        InitialState::Ground => DensityMatrix2::ground(),
        InitialState::Plus => DensityMatrix2::plus(),
        InitialState::Mixed => DensityMatrix2::maximally_mixed(Basis::Bare),
    }
}

/// Density-matrix trajectory under the dressed-basis master equation.
pub fn cmd_evolve(cfg: &RunConfig, r: &Resolved, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::default();
    let qubit = QubitParams::new(r.omega0, r.omega, cfg.mu)?;
    let bath = cfg.spectral_density()?;
    let traj = evolve(
        &initial_state(cfg.rho0),
        &drive_of(cfg)?,
        &qubit,
        &bath,
        &r.grid,
    )?;
    let path = o.file(out, "trajectory.csv");
    write_csv(&path, &TRAJECTORY_COLUMNS, traj.rows())?;
    o.diagnostics.insert(
        "worst_defects".into(),
        json!({
            "trace": traj.worst.trace,
            "hermiticity": traj.worst.hermiticity,
            "min_eigenvalue": traj.worst.min_eigenvalue,
        }),
    );
    o.diagnostics
        .insert("steps".into(), json!(traj.report.steps));
    Ok(o)
}

/// Closed-form envelope next to the differentiated pendulum oracle.
pub fn cmd_envelope(cfg: &RunConfig, r: &Resolved, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::default();
    let p = &r.propagation;
    let g = &r.grid;
    let cmp = envelope_vs_oracle(p, g)?;
    let state = PulseState::closed_form(p, g, cfg.phi0)?;
    check_phase_monotone(&state.phase, p.branch_sign(), "envelope")?;
    let dev = cmp.rel_dev();
    write_csv(
        o.file(out, "envelope.csv"),
        &ENVELOPE_COLUMNS,
        (0..g.len()).map(|i| {
            [
                g.at(i),
                cmp.closed[i],
                cmp.oracle[i],
                state.phase[i],
                state.area[i],
                dev[i],
            ]
        }),
    )?;
    write_csv(o.file(out, "pulse_state.csv"), &PULSE_COLUMNS, state.rows())?;
    o.diagnostics
        .insert("max_rel_dev".into(), json!(cmp.max_rel_dev));
    o.diagnostics
        .insert("area_final".into(), json!(state.area[g.len() - 1]));

    if cfg.adaptive {
        let decay = p.decay();
        let m = p.m;
        let (a, report) = rk45_integrate(
            |tau, a: &f64| 2.0 * m * (-decay.gamma_at(tau) / 4.0).exp() * (a / 2.0).sin(),
            p.area0,
            g.tau0(),
            g.tau1(),
            AdaptiveOptions::default(),
        )?;
        let fixed = cmp.area[g.len() - 1];
        o.diagnostics.insert(
            "adaptive".into(),
            json!({
                "area_final": a,
                "fixed_step_area_final": fixed,
                "difference": a - fixed,
                "steps": report.steps,
                "rejected_steps": report.rejected_steps,
            }),
        );
    }
    Ok(o)
}

fn check_phase_monotone(phi: &[f64], sign: f64, what: &str) -> Result<()> {
    let scale = phi.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if let Some(i) = phi
        .windows(2)
        .position(|w| sign * (w[1] - w[0]) < -1e-12 * scale)
    {
        return Err(Error::Invariant(format!(
            "{what}: phase decreases between samples {i} and {}",
            i + 1
        )));
    }
    Ok(())
}

/// Phase accumulation `φ(τ)` and its rate.
pub fn cmd_phase(cfg: &RunConfig, r: &Resolved, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::default();
    let p = &r.propagation;
    let g = &r.grid;
    let phi = phase_closed_form(p, g, cfg.phi0)?;
    check_phase_monotone(&phi, p.branch_sign(), "phase")?;
    let rate = (0..g.len())
        .map(|i| phase_rate_closed_form(p, g.at(i)))
        .collect::<Result<Vec<_>>>()?;
    write_csv(
        o.file(out, "phase.csv"),
        &PHASE_COLUMNS,
        (0..g.len()).map(|i| [g.at(i), phi[i], rate[i]]),
    )?;
    o.diagnostics
        .insert("phi_final".into(), json!(phi[g.len() - 1]));
    Ok(o)
}

/// Lab-frame surface of a ramifying pulse plus its ridge trace.
pub fn cmd_ramify(cfg: &RunConfig, r: &Resolved, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::default();
    let p = &r.propagation;
    let mut raster = RasterSpec::covering(p, r.horizon).map_err(|e| match e {
        Error::Domain(msg) if msg.contains("multiple of 2π") => Error::config("area0", msg),
        other => other,
    })?;
    if let Some(nx) = cfg.raster_nx {
        raster.nx = nx;
    }
    if let Some(nt) = cfg.raster_nt {
        raster.nt = nt;
    }
    let surface = ramification_surface(p, &raster)?;
    let trace = surface.ridge_trace();
    if !trace.windows(2).all(|w| w[1].separation > w[0].separation) {
        o.warnings
            .push("ridge separation is not strictly increasing over the raster".into());
    }
    write_csv(
        o.file(out, "ramification_surface.csv"),
        &SURFACE_COLUMNS,
        surface.rows(),
    )?;
    write_csv(
        o.file(out, "ridge_trace.csv"),
        &RIDGE_COLUMNS,
        trace
            .iter()
            .map(|q| [q.t, q.x_transparent, q.x_remainder, q.separation]),
    )?;
    o.diagnostics.insert(
        "raster".into(),
        serde_json::to_value(raster).map_err(|e| Error::Serde(e.to_string()))?,
    );
    o.diagnostics
        .insert("n_transparent".into(), json!(surface.split.n_transparent));
    o.diagnostics
        .insert("remainder_area".into(), json!(surface.split.remainder_area));
    Ok(o)
}

/// Area and phase of one sweep member.
#[derive(Debug, Clone)]
pub struct SweepMember {
    pub gamma_mhz: f64,
    pub c0: f64,
    pub area: Vec<f64>,
    pub phi: Vec<f64>,
    pub rate_final: f64,
}

/// Computes one sweep member on a shared grid.
pub fn sweep_member(r: &Resolved, gamma_mhz: f64, phi0: f64) -> Result<SweepMember> {
    let c0 = mhz_rate_to_per_ns(gamma_mhz) / 4.0;
    let p = r.propagation.with_c0(c0);
    let area = pendulum_area_integrate(&p, &p.decay(), &r.grid)?.area;
    let phi = phase_closed_form(&p, &r.grid, phi0)?;
    check_phase_monotone(
        &phi,
        p.branch_sign(),
        &format!("sweep gamma = {gamma_mhz} MHz"),
    )?;
    Ok(SweepMember {
        gamma_mhz,
        c0,
        area,
        phi,
        rate_final: phase_rate_closed_form(&p, r.grid.tau1())?,
    })
}

/// Members evaluated on a pool of `workers` threads; order follows `gammas`.
pub fn sweep_members(
    r: &Resolved,
    gammas: &[f64],
    phi0: f64,
    workers: Option<usize>,
) -> Result<Vec<SweepMember>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| {
        gammas
            .par_iter()
            .map(|g| sweep_member(r, *g, phi0))
            .collect()
    })
}

/// File name for a sweep member, e.g. `sweep_gamma_50MHz.csv`.
pub fn sweep_file_name(gamma_mhz: f64) -> String {
    format!("sweep_gamma_{gamma_mhz}MHz.csv")
}

/// Pointwise ordering of phases by `γ`; returns the first violating pair.
pub fn phase_ordering_violation(members: &[SweepMember]) -> Option<(f64, f64, usize)> {
    let mut idx: Vec<usize> = (0..members.len()).collect();
    idx.sort_by(|a, b| members[*a].gamma_mhz.total_cmp(&members[*b].gamma_mhz));
    for w in idx.windows(2) {
        let (lo, hi) = (&members[w[0]], &members[w[1]]);
        if let Some(i) = lo.phi.iter().zip(&hi.phi).position(|(a, b)| b < a) {
            return Some((lo.gamma_mhz, hi.gamma_mhz, i));
        }
    }
    None
}

/// Per-`γ` area and phase curves on a shared grid plus a summary table.
pub fn cmd_sweep(cfg: &RunConfig, r: &Resolved, out: &Path) -> Result<CommandOutput> {
    let mut o = CommandOutput::default();
    let members = sweep_members(r, &cfg.sweep_gamma_mhz, cfg.phi0, cfg.workers)?;
    let g: &Grid = &r.grid;
    for m in &members {
        write_csv(
            o.file(out, &sweep_file_name(m.gamma_mhz)),
            &SWEEP_COLUMNS,
            (0..g.len()).map(|i| [g.at(i), m.area[i], m.phi[i]]),
        )?;
    }
    write_csv(
        o.file(out, "sweep_summary.csv"),
        &SWEEP_SUMMARY_COLUMNS,
        members.iter().map(|m| {
            [
                m.gamma_mhz,
                m.c0,
                m.area[g.len() - 1],
                m.phi[g.len() - 1],
                m.rate_final,
            ]
        }),
    )?;
    if let Some((lo, hi, i)) = phase_ordering_violation(&members) {
        o.warnings.push(format!(
            "phase at gamma = {hi} MHz falls below gamma = {lo} MHz at tau = {}",
            g.at(i)
        ));
    }
    Ok(o)
}
