//! Receive array manifolds under the four wavefront models.
//!
//! Every model is phase-only: entry `i` of the steering vector is
//! `exp(-j (2π/λ) ρ_i)` where `ρ_i` is a model-specific path length in metres.
//! Entries are ordered subarray-major (`k` outer, `m` inner). Within a
//! subarray the planar phase is `r_k - m d sinθ_k`, so entry `(k, m)` tracks
//! the element at `x_k + m d` in every model.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CrbError, Result};
use crate::geometry::{
    point_partials, range_excess, range_to, ModularLayout, PointPartials, TargetPolar,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WavefrontModel {
    /// Exact spherical wave at every element.
    #[serde(rename = "SWM")]
    Swm,
    /// Spherical between subarrays, planar within each with its own AoA.
    #[serde(rename = "HSPM_DIST")]
    HspmDist,
    /// Spherical between subarrays, planar within each with the global AoA.
    #[serde(rename = "HSPM_SHARED")]
    HspmShared,
    /// One plane wave across the whole array.
    #[serde(rename = "PWM")]
    Pwm,
}

impl WavefrontModel {
    pub const ALL: [WavefrontModel; 4] = [
        WavefrontModel::HspmDist,
        WavefrontModel::HspmShared,
        WavefrontModel::Pwm,
        WavefrontModel::Swm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WavefrontModel::Swm => "SWM",
            WavefrontModel::HspmDist => "HSPM_DIST",
            WavefrontModel::HspmShared => "HSPM_SHARED",
            WavefrontModel::Pwm => "PWM",
        }
    }
}

impl fmt::Display for WavefrontModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WavefrontModel {
    type Err = CrbError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "SWM" => Ok(WavefrontModel::Swm),
            "HSPM_DIST" => Ok(WavefrontModel::HspmDist),
            "HSPM_SHARED" => Ok(WavefrontModel::HspmShared),
            "PWM" => Ok(WavefrontModel::Pwm),
            other => Err(CrbError::InvalidConfiguration(format!(
                "unknown wavefront model '{other}'"
            ))),
        }
    }
}

/// Array response of length `K·M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub values: Vec<Complex64>,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `∂g/∂r` (per metre) and `∂g/∂θ` (per radian).
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringDerivatives {
    pub d_r: Vec<Complex64>,
    pub d_theta: Vec<Complex64>,
}

/// Derivatives of the path lengths `ρ_i` with respect to `r` and `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRates {
    pub d_r: Vec<f64>,
    pub d_theta: Vec<f64>,
}

pub fn wavenumber(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

fn subarray_partials(layout: &ModularLayout, target: &TargetPolar) -> Result<Vec<PointPartials>> {
    layout
        .subarray_positions()
        .into_iter()
        .map(|x| point_partials(target, x))
        .collect()
}

fn check_elements(layout: &ModularLayout, target: &TargetPolar) -> Result<()> {
    if let Some(x) = layout
        .element_x()
        .iter()
        .find(|&&x| !(range_to(target, x) > 0.0))
    {
        return Err(CrbError::SingularGeometry(format!(
            "target coincides with the element at x = {x}"
        )));
    }
    Ok(())
}

/// Where the phase of each entry is measured from.
///
/// `Absolute` uses the full path `ρ_i`. `Origin` subtracts the common range
/// `r`, which only rotates the whole vector by a scalar phase; the bound is
/// unchanged because the unknown complex gain absorbs it, but the small
/// element-to-element differences that carry range information keep their
/// precision. The plane-wave model is origin-referenced in both cases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseReference {
    #[default]
    Absolute,
    Origin,
}

/// Model path lengths `ρ_i` in metres.
pub fn path_lengths(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
) -> Result<Vec<f64>> {
    path_lengths_with(model, layout, target, PhaseReference::Absolute)
}

pub fn path_lengths_with(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    reference: PhaseReference,
) -> Result<Vec<f64>> {
    let offsets = layout.intra_offsets();
    let sin_t = target.theta.sin();
    let origin = reference == PhaseReference::Origin;
    let bulk = |x: f64| {
        if origin {
            range_excess(target, x)
        } else {
            range_to(target, x)
        }
    };
    match model {
        WavefrontModel::Swm => {
            check_elements(layout, target)?;
            Ok(layout.element_x().iter().map(|&x| bulk(x)).collect())
        }
        // Plane wave referenced to the origin; no common range term.
        WavefrontModel::Pwm => Ok(layout.element_x().iter().map(|&x| -x * sin_t).collect()),
        WavefrontModel::HspmDist | WavefrontModel::HspmShared => {
            let parts = subarray_partials(layout, target)?;
            let shared = model == WavefrontModel::HspmShared;
            Ok(layout
                .subarray_positions()
                .into_iter()
                .zip(&parts)
                .flat_map(|(x, p)| {
                    let sine = if shared { sin_t } else { p.sine };
                    let b = bulk(x);
                    offsets.iter().map(move |&md| b - md * sine)
                })
                .collect())
        }
    }
}

/// Analytic `∂ρ_i/∂r` and `∂ρ_i/∂θ`.
pub fn path_rates(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
) -> Result<PathRates> {
    path_rates_with(model, layout, target, PhaseReference::Absolute)
}

pub fn path_rates_with(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    reference: PhaseReference,
) -> Result<PathRates> {
    let n = layout.num_elements();
    let cos_t = target.theta.cos();
    let origin = reference == PhaseReference::Origin;
    let bulk_dr = |p: &PointPartials| {
        if origin {
            -p.range_dr_deficit
        } else {
            p.range_dr
        }
    };
    let mut d_r = Vec::with_capacity(n);
    let mut d_theta = Vec::with_capacity(n);
    match model {
        WavefrontModel::Swm => {
            for &x in layout.element_x() {
                let p = point_partials(target, x)?;
                d_r.push(bulk_dr(&p));
                d_theta.push(p.range_dtheta);
            }
        }
        WavefrontModel::Pwm => {
            for &x in layout.element_x() {
                d_r.push(0.0);
                d_theta.push(-x * cos_t);
            }
        }
        WavefrontModel::HspmDist | WavefrontModel::HspmShared => {
            let offsets = layout.intra_offsets();
            let shared = model == WavefrontModel::HspmShared;
            for p in subarray_partials(layout, target)? {
                let (s_r, s_t) = if shared {
                    (0.0, cos_t)
                } else {
                    (p.sine_dr, p.sine_dtheta)
                };
                let a = bulk_dr(&p);
                for &md in &offsets {
                    d_r.push(a - md * s_r);
                    d_theta.push(p.range_dtheta - md * s_t);
                }
            }
        }
    }
    Ok(PathRates { d_r, d_theta })
}

pub fn steering_from_paths(paths: &[f64], wavelength: f64) -> SteeringVector {
    let k = wavenumber(wavelength);
    SteeringVector {
        values: paths
            .iter()
            .map(|&rho| Complex64::from_polar(1.0, -k * rho))
            .collect(),
    }
}

pub fn steering(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
) -> Result<SteeringVector> {
    steering_with(model, layout, target, wavelength, PhaseReference::Absolute)
}

pub fn steering_with(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    reference: PhaseReference,
) -> Result<SteeringVector> {
    Ok(steering_from_paths(
        &path_lengths_with(model, layout, target, reference)?,
        wavelength,
    ))
}

/// `ġ_i = -j (2π/λ) (∂ρ_i/∂u) g_i`.
pub fn derivatives_from_rates(
    g: &SteeringVector,
    rates: &PathRates,
    wavelength: f64,
) -> SteeringDerivatives {
    let k = wavenumber(wavelength);
    let scale = |g: &Complex64, w: f64| Complex64::new(0.0, -k * w) * g;
    SteeringDerivatives {
        d_r: g.values.iter().zip(&rates.d_r).map(|(g, &w)| scale(g, w)).collect(),
        d_theta: g
            .values
            .iter()
            .zip(&rates.d_theta)
            .map(|(g, &w)| scale(g, w))
            .collect(),
    }
}

pub fn steering_derivatives(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
) -> Result<SteeringDerivatives> {
    steering_derivatives_with(model, layout, target, wavelength, PhaseReference::Absolute)
}

pub fn steering_derivatives_with(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    reference: PhaseReference,
) -> Result<SteeringDerivatives> {
    let g = steering_with(model, layout, target, wavelength, reference)?;
    let rates = path_rates_with(model, layout, target, reference)?;
    Ok(derivatives_from_rates(&g, &rates, wavelength))
}
