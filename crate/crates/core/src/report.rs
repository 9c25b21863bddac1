//! CSV emission and run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::Grid;
use crate::units::{GHZ_TO_RAD_PER_NS, MHZ_RATE_TO_PER_NS, MHZ_TO_RAD_PER_NS};

/// Fourteen digits after the point: fifteen significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.14e}")
}

/// Writes a header row followed by numeric rows in scientific notation.
pub fn write_csv<P, R, I>(path: P, header: &[&str], rows: I) -> Result<()>
where
    P: AsRef<Path>,
    R: AsRef<[f64]>,
    I: IntoIterator<Item = R>,
{
    let file = BufWriter::new(File::create(path.as_ref())?);
    write_csv_to(file, header, rows)
}

pub fn write_csv_to<W, R, I>(writer: W, header: &[&str], rows: I) -> Result<()>
where
    W: Write,
    R: AsRef<[f64]>,
    I: IntoIterator<Item = R>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        let row = row.as_ref();
        if row.len() != header.len() {
            return Err(Error::domain(format!(
                "row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|x| format_value(*x)))?;
    }
    w.flush()?;
    Ok(())
}

/// Hex SHA-256 over the grid endpoints and sample count.
pub fn grid_hash(grid: &Grid) -> String {
    let mut h = Sha256::new();
    h.update(grid.tau0().to_le_bytes());
    h.update(grid.tau1().to_le_bytes());
    h.update((grid.len() as u64).to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub tau0_ns: f64,
    pub tau1_ns: f64,
    pub n: usize,
    pub step_ns: f64,
    pub sha256: String,
}

impl From<&Grid> for GridSummary {
    fn from(g: &Grid) -> Self {
        GridSummary {
            tau0_ns: g.tau0(),
            tau1_ns: g.tau1(),
            n: g.len(),
            step_ns: g.step(),
            sha256: grid_hash(g),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitConversions {
    pub ghz_to_rad_per_ns: f64,
    pub mhz_to_rad_per_ns: f64,
    pub mhz_rate_to_per_ns: f64,
    pub note: &'static str,
}

impl Default for UnitConversions {
    fn default() -> Self {
        UnitConversions {
            ghz_to_rad_per_ns: GHZ_TO_RAD_PER_NS,
            mhz_to_rad_per_ns: MHZ_TO_RAD_PER_NS,
            mhz_rate_to_per_ns: MHZ_RATE_TO_PER_NS,
            note: "angular frequencies: GHz x 2pi -> rad/ns, MHz x 2pi x 1e-3 -> rad/ns; \
                   rates quoted in MHz: x 1e-3 -> 1/ns",
        }
    }
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: String,
    /// Configuration as entered, in user units.
    pub parameters_user: serde_json::Value,
    /// Parameters after conversion to rad/ns and 1/ns.
    pub parameters_internal: serde_json::Value,
    pub units: UnitConversions,
    pub grid: Option<GridSummary>,
    pub prefactor: String,
    pub geometric_sign_convention: &'static str,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
