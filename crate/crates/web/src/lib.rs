//! Browser bindings for three interactive views: the closed-form envelope
//! against its pendulum oracle, the ramification surface, and a Lindblad
//! trajectory of a driven, damped qubit.
//!
//! The computations live in [`demo`] and return plain vectors so they can be
//! tested natively; the `#[wasm_bindgen]` functions only adapt types.

use wasm_bindgen::prelude::*;

pub mod demo {
    use std::f64::consts::PI;

    use sit_core::bath::SpectralDensity;
    use sit_core::dressed::QubitParams;
    use sit_core::lindblad::{evolve, DensityMatrix2, SechDrive};
    use sit_core::numerics::Grid;
    use sit_core::propagation::{
        envelope_vs_oracle, ramification_surface, Prefactor, PropagationParams, RasterSpec,
    };

    fn params(m: f64, c0: f64, area0: f64, printed: bool) -> Result<PropagationParams, String> {
        let p = PropagationParams::new(m, 1.0, c0, area0).map_err(|e| e.to_string())?;
        Ok(if printed {
            p.with_prefactor(Prefactor::Printed)
        } else {
            p
        })
    }

    /// Rows `(τ, 𝓔_closed, 𝓔_oracle, 𝒜)` flattened, followed by nothing else;
    /// the caller divides the length by four.
    #[derive(Debug, Clone)]
    pub struct EnvelopeView {
        pub rows: Vec<f64>,
        pub max_rel_dev: f64,
    }

    pub fn envelope(
        m: f64,
        c0: f64,
        area0: f64,
        printed: bool,
        horizon: f64,
    ) -> Result<EnvelopeView, String> {
        let p = params(m, c0, area0, printed)?;
        let grid = Grid::with_max_step(0.0, horizon, 0.005 / m).map_err(|e| e.to_string())?;
        let cmp = envelope_vs_oracle(&p, &grid).map_err(|e| e.to_string())?;
        let mut rows = Vec::with_capacity(4 * grid.len());
        for i in 0..grid.len() {
            rows.extend([grid.at(i), cmp.closed[i], cmp.oracle[i], cmp.area[i]]);
        }
        Ok(EnvelopeView {
            rows,
            max_rel_dev: cmp.max_rel_dev,
        })
    }

    /// Total envelope on an `nt × nx` raster (row-major in `t`) and the
    /// ridge trace `(t, x_transparent, x_remainder, separation)` flattened.
    #[derive(Debug, Clone)]
    pub struct SurfaceView {
        pub nx: usize,
        pub nt: usize,
        pub x_min: f64,
        pub x_max: f64,
        pub t_min: f64,
        pub t_max: f64,
        pub values: Vec<f64>,
        pub ridge: Vec<f64>,
    }

    pub fn ramification(m: f64, c0: f64, area0: f64, duration: f64) -> Result<SurfaceView, String> {
        let p = params(m, c0, area0, false)?;
        let mut raster = RasterSpec::covering(&p, duration).map_err(|e| e.to_string())?;
        // a coarser picture keeps the canvas responsive
        raster.nx = raster.nx.min(400);
        raster.nt = raster.nt.min(200);
        let width = 0.25 / m;
        let need_x = ((raster.x_max - raster.x_min) / width).ceil() as usize + 1;
        let need_t = ((raster.t_max - raster.t_min) / width).ceil() as usize + 1;
        raster.nx = raster.nx.max(need_x);
        raster.nt = raster.nt.max(need_t);
        let s = ramification_surface(&p, &raster).map_err(|e| e.to_string())?;
        let mut values = Vec::with_capacity(raster.nx * raster.nt);
        for it in 0..raster.nt {
            for ix in 0..raster.nx {
                values.push(s.total(it, ix));
            }
        }
        let ridge = s
            .ridge_trace()
            .iter()
            .flat_map(|q| [q.t, q.x_transparent, q.x_remainder, q.separation])
            .collect();
        Ok(SurfaceView {
            nx: raster.nx,
            nt: raster.nt,
            x_min: raster.x_min,
            x_max: raster.x_max,
            t_min: raster.t_min,
            t_max: raster.t_max,
            values,
            ridge,
        })
    }

    /// Rows `(τ, ρ₁₁, Re ρ₁₂, Im ρ₁₂, ρ₂₂, purity)` flattened.
    pub fn trajectory(
        area: f64,
        gamma_per_ns: f64,
        detuning: f64,
        phase: f64,
        excited: bool,
    ) -> Result<Vec<f64>, String> {
        let omega = 2.0 * PI * 5.0;
        let qubit = QubitParams::new(omega + detuning, omega, 1.0).map_err(|e| e.to_string())?;
        let drive = SechDrive::with_area(area, 1.0, 1.0, 6.0, phase).map_err(|e| e.to_string())?;
        let bath = SpectralDensity::constant(gamma_per_ns).map_err(|e| e.to_string())?;
        let fastest = (drive.amplitude + detuning.abs())
            .max(gamma_per_ns)
            .max(1.0);
        let grid = Grid::with_max_step(0.0, 12.0, 0.01 / fastest).map_err(|e| e.to_string())?;
        let rho0 = if excited {
            DensityMatrix2::excited()
        } else {
            DensityMatrix2::ground()
        };
        let traj = evolve(&rho0, &drive, &qubit, &bath, &grid).map_err(|e| e.to_string())?;
        Ok(traj.rows().into_iter().flatten().collect())
    }
}

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub struct Envelope {
    inner: demo::EnvelopeView,
}

#[wasm_bindgen]
impl Envelope {
    /// Flattened `(τ, closed, oracle, area)` rows.
    pub fn rows(&self) -> Vec<f64> {
        self.inner.rows.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn max_rel_dev(&self) -> f64 {
        self.inner.max_rel_dev
    }
}

#[wasm_bindgen]
pub fn envelope(
    m: f64,
    c0: f64,
    area0: f64,
    printed: bool,
    horizon: f64,
) -> Result<Envelope, JsError> {
    demo::envelope(m, c0, area0, printed, horizon)
        .map(|inner| Envelope { inner })
        .map_err(js_err)
}

#[wasm_bindgen]
pub struct Surface {
    inner: demo::SurfaceView,
}

#[wasm_bindgen]
impl Surface {
    #[wasm_bindgen(getter)]
    pub fn nx(&self) -> usize {
        self.inner.nx
    }
    #[wasm_bindgen(getter)]
    pub fn nt(&self) -> usize {
        self.inner.nt
    }
    #[wasm_bindgen(getter)]
    pub fn x_min(&self) -> f64 {
        self.inner.x_min
    }
    #[wasm_bindgen(getter)]
    pub fn x_max(&self) -> f64 {
        self.inner.x_max
    }
    #[wasm_bindgen(getter)]
    pub fn t_min(&self) -> f64 {
        self.inner.t_min
    }
    #[wasm_bindgen(getter)]
    pub fn t_max(&self) -> f64 {
        self.inner.t_max
    }
    pub fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }
    /// Flattened `(t, x_transparent, x_remainder, separation)` rows.
    pub fn ridge(&self) -> Vec<f64> {
        self.inner.ridge.clone()
    }
}

#[wasm_bindgen]
pub fn ramification(m: f64, c0: f64, area0: f64, duration: f64) -> Result<Surface, JsError> {
    demo::ramification(m, c0, area0, duration)
        .map(|inner| Surface { inner })
        .map_err(js_err)
}

/// Flattened `(τ, ρ₁₁, Re ρ₁₂, Im ρ₁₂, ρ₂₂, purity)` rows.
#[wasm_bindgen]
pub fn trajectory(
    area: f64,
    gamma_per_ns: f64,
    detuning: f64,
    phase: f64,
    excited: bool,
) -> Result<Vec<f64>, JsError> {
    demo::trajectory(area, gamma_per_ns, detuning, phase, excited).map_err(js_err)
}
