//! Array layout, target position and the bistatic transmit-side geometry.
//!
//! The receive array lies on the x-axis. It is built from `K` identical
//! subarrays of `M` elements with pitch `d`. Subarray `k` is separated from its
//! neighbour nearer the origin by `Γ_k · d`. Subarray and element indices are
//! centred: `k ∈ {-(K-1)/2, …, (K-1)/2}` and `m ∈ {-(M-1)/2, …, (M-1)/2}`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CrbError, Result};

/// Tolerance used when clamping an `asin` argument that rounding pushed just
/// outside `[-1, 1]`.
const ASIN_CLAMP_TOL: f64 = 1e-12;

/// A generic modular linear receive array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModularLayout {
    k: usize,
    m: usize,
    d: f64,
    spacings: Vec<u32>,
    /// Element positions in units of `d`, subarray-major.
    grid: Vec<i64>,
    element_x: Vec<f64>,
}

impl ModularLayout {
    /// Builds a layout from the subarray count `k`, elements per subarray `m`,
    /// the length-`k` gap vector (centre entry 0) and the pitch `d` in metres.
    pub fn new(k: usize, m: usize, spacings: &[u32], d: f64) -> Result<Self> {
        if k == 0 || k.is_multiple_of(2) {
            return Err(CrbError::InvalidConfiguration(format!(
                "subarray count K must be a positive odd integer, got {k}"
            )));
        }
        if m == 0 || m.is_multiple_of(2) {
            return Err(CrbError::InvalidConfiguration(format!(
                "elements per subarray M must be a positive odd integer, got {m}"
            )));
        }
        if spacings.len() != k {
            return Err(CrbError::InvalidConfiguration(format!(
                "spacing vector has {} entries, expected K = {k}",
                spacings.len()
            )));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(CrbError::InvalidConfiguration(format!(
                "inter-antenna spacing must be positive and finite, got {d}"
            )));
        }
        let half = k / 2;
        if spacings[half] != 0 {
            return Err(CrbError::InvalidConfiguration(format!(
                "centre gap entry must be 0, got {}",
                spacings[half]
            )));
        }
        if let Some((pos, g)) = spacings
            .iter()
            .enumerate()
            .find(|&(i, &g)| i != half && g < 1)
        {
            return Err(CrbError::InvalidConfiguration(format!(
                "gap at subarray {} is {g}, must be >= 1",
                pos as i64 - half as i64
            )));
        }

        let half_m = (m / 2) as i64;
        let mut grid = Vec::with_capacity(k * m);
        for kk in -(half as i64)..=(half as i64) {
            let base = cumulative_gap(spacings, kk) + kk * (m as i64 - 1);
            grid.extend((-half_m..=half_m).map(|mm| base + mm));
        }
        let element_x = grid.iter().map(|&n| n as f64 * d).collect();

        Ok(Self {
            k,
            m,
            d,
            spacings: spacings.to_vec(),
            grid,
            element_x,
        })
    }

    /// A uniform linear array of `n` elements (one subarray).
    pub fn uniform(n: usize, d: f64) -> Result<Self> {
        Self::new(1, n, &[0], d)
    }

    pub fn num_subarrays(&self) -> usize {
        self.k
    }

    pub fn elements_per_subarray(&self) -> usize {
        self.m
    }

    pub fn num_elements(&self) -> usize {
        self.k * self.m
    }

    pub fn pitch(&self) -> f64 {
        self.d
    }

    pub fn spacings(&self) -> &[u32] {
        &self.spacings
    }

    /// All element abscissas in metres, subarray-major.
    pub fn element_x(&self) -> &[f64] {
        &self.element_x
    }

    /// Iterator over the centred subarray indices.
    pub fn subarray_indices(&self) -> impl Iterator<Item = i64> {
        let h = (self.k / 2) as i64;
        -h..=h
    }

    /// Iterator over the centred element indices within a subarray.
    pub fn element_indices(&self) -> impl Iterator<Item = i64> {
        let h = (self.m / 2) as i64;
        -h..=h
    }

    fn flat_index(&self, k: i64, m: i64) -> usize {
        let hk = (self.k / 2) as i64;
        let hm = (self.m / 2) as i64;
        assert!(k.abs() <= hk, "subarray index {k} out of range");
        assert!(m.abs() <= hm, "element index {m} out of range");
        ((k + hk) as usize) * self.m + (m + hm) as usize
    }

    /// `x_{k,m}` in metres.
    pub fn element_position(&self, k: i64, m: i64) -> f64 {
        self.element_x[self.flat_index(k, m)]
    }

    /// Abscissa of the reference (centre) element of subarray `k`.
    pub fn subarray_position(&self, k: i64) -> f64 {
        self.element_position(k, 0)
    }

    /// Reference-element abscissas for every subarray, ordered by `k`.
    pub fn subarray_positions(&self) -> Vec<f64> {
        self.subarray_indices()
            .map(|k| self.subarray_position(k))
            .collect()
    }

    /// Intra-subarray offsets `m·d` in metres, ordered by `m`.
    pub fn intra_offsets(&self) -> Vec<f64> {
        self.element_indices().map(|m| m as f64 * self.d).collect()
    }

    /// Aperture from the closed formula `(ΣΓ_k + K(M-1))·d`.
    pub fn aperture(&self) -> f64 {
        let gaps: u64 = self.spacings.iter().map(|&g| g as u64).sum();
        (gaps + (self.k * (self.m - 1)) as u64) as f64 * self.d
    }

    /// Distance between the outermost elements.
    pub fn span(&self) -> f64 {
        self.element_x[self.element_x.len() - 1] - self.element_x[0]
    }

    /// Palindromic gap vector, i.e. element positions symmetric about 0.
    pub fn is_centro_symmetric(&self) -> bool {
        self.spacings.iter().eq(self.spacings.iter().rev())
    }

    /// Element positions in units of `d`.
    pub fn grid(&self) -> &[i64] {
        &self.grid
    }

    /// Compact human-readable identifier, used in reports.
    pub fn digest(&self) -> String {
        let gaps: Vec<String> = self.spacings.iter().map(|g| g.to_string()).collect();
        format!(
            "K={};M={};d={};G={}",
            self.k,
            self.m,
            self.d,
            gaps.join(",")
        )
    }
}

/// Signed sum of the `|k|` gaps between the centre subarray and subarray `k`.
fn cumulative_gap(spacings: &[u32], k: i64) -> i64 {
    let half = (spacings.len() / 2) as i64;
    let sign = k.signum();
    (1..=k.abs())
        .map(|j| spacings[(half + sign * j) as usize] as i64)
        .sum::<i64>()
        * sign
}

/// Target position in the receiver-centric polar frame. `theta` is measured
/// from the positive y-axis towards positive x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPolar {
    pub r: f64,
    pub theta: f64,
}

impl TargetPolar {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(CrbError::InvalidConfiguration(format!(
                "target range must be positive and finite, got {r}"
            )));
        }
        if !(theta.is_finite() && theta.abs() <= FRAC_PI_2) {
            return Err(CrbError::InvalidConfiguration(format!(
                "target angle must lie in [-pi/2, pi/2], got {theta}"
            )));
        }
        Ok(Self { r, theta })
    }

    pub fn from_degrees(r: f64, theta_deg: f64) -> Result<Self> {
        Self::new(r, theta_deg.to_radians())
    }

    /// Cartesian position `(r sinθ, r cosθ)`.
    pub fn cartesian(&self) -> (f64, f64) {
        (self.r * self.theta.sin(), self.r * self.theta.cos())
    }

    pub fn with_range(&self, r: f64) -> Self {
        Self { r, ..*self }
    }

    pub fn with_angle(&self, theta: f64) -> Self {
        Self { theta, ..*self }
    }
}

/// Distance from the target to an array point at abscissa `x`.
pub fn range_to(target: &TargetPolar, x: f64) -> f64 {
    let (r, s) = (target.r, target.theta.sin());
    (r * r - 2.0 * r * x * s + x * x).sqrt()
}

/// `range_to(target, x) - r`, accurate when the difference is tiny.
pub fn range_excess(target: &TargetPolar, x: f64) -> f64 {
    let (r, s) = (target.r, target.theta.sin());
    x * (x - 2.0 * r * s) / (range_to(target, x) + r)
}

/// Range, observed sine and their partial derivatives with respect to the
/// target parameters, for an array point at abscissa `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPartials {
    pub range: f64,
    /// `∂r_x/∂r`.
    pub range_dr: f64,
    /// `1 - ∂r_x/∂r`, evaluated without cancellation.
    pub range_dr_deficit: f64,
    /// `∂r_x/∂θ`.
    pub range_dtheta: f64,
    /// `sin θ_x = (r sinθ - x) / r_x`.
    pub sine: f64,
    /// `∂ sinθ_x / ∂r`.
    pub sine_dr: f64,
    /// `∂ sinθ_x / ∂θ`.
    pub sine_dtheta: f64,
}

pub fn point_partials(target: &TargetPolar, x: f64) -> Result<PointPartials> {
    let r = target.r;
    let (s, c) = target.theta.sin_cos();
    let rk = range_to(target, x);
    if !(rk > 0.0) {
        return Err(CrbError::SingularGeometry(format!(
            "target coincides with the array point at x = {x}"
        )));
    }
    let along = r - x * s;
    // r_x^2 - along^2 = x^2 cos^2θ exactly.
    let deficit = if along > 0.0 {
        x * x * c * c / (rk * (rk + along))
    } else {
        1.0 - along / rk
    };
    let rk3 = rk * rk * rk;
    Ok(PointPartials {
        range: rk,
        range_dr: along / rk,
        range_dr_deficit: deficit,
        range_dtheta: -r * x * c / rk,
        // s - (x + s (r_x - r)) / r_x: exact at x = 0.
        sine: (s - (x + s * range_excess(target, x)) / rk).clamp(-1.0, 1.0),
        sine_dr: r * x * c * c / rk3,
        sine_dtheta: r * r * c * along / rk3,
    })
}

/// Distance from the target to the reference element of subarray `k`.
pub fn subarray_range(layout: &ModularLayout, target: &TargetPolar, k: i64) -> f64 {
    range_to(target, layout.subarray_position(k))
}

/// Sine of the angle under which subarray `k` sees the target.
pub fn subarray_sine(layout: &ModularLayout, target: &TargetPolar, k: i64) -> Result<f64> {
    Ok(point_partials(target, layout.subarray_position(k))?.sine)
}

/// Distance from the target to element `(k, m)`.
pub fn element_range(layout: &ModularLayout, target: &TargetPolar, k: i64, m: i64) -> f64 {
    range_to(target, layout.element_position(k, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionClass {
    /// Closer than the far-field distance of a single subarray.
    SubarrayNearField,
    /// Far field of each subarray, near field of the whole array.
    HspmValid,
    /// Beyond the Rayleigh distance of the whole array.
    FarField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRegions {
    /// `2[(M-1)d]^2 / λ`.
    pub subarray_farfield_bound: f64,
    /// `2 S^2 / λ`.
    pub array_rayleigh: f64,
}

impl FieldRegions {
    pub fn classify(&self, r: f64) -> RegionClass {
        if r < self.subarray_farfield_bound {
            RegionClass::SubarrayNearField
        } else if r <= self.array_rayleigh {
            RegionClass::HspmValid
        } else {
            RegionClass::FarField
        }
    }
}

pub fn field_regions(layout: &ModularLayout, wavelength: f64) -> Result<FieldRegions> {
    if !(wavelength.is_finite() && wavelength > 0.0) {
        return Err(CrbError::InvalidConfiguration(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let sub = (layout.elements_per_subarray() - 1) as f64 * layout.pitch();
    let s = layout.aperture();
    Ok(FieldRegions {
        subarray_farfield_bound: 2.0 * sub * sub / wavelength,
        array_rayleigh: 2.0 * s * s / wavelength,
    })
}

/// Transmitter placement relative to the receive array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BistaticGeometry {
    /// Distance between Tx and Rx array centres, metres.
    pub baseline: f64,
    /// Bearing of the Tx centre, radians.
    pub bearing: f64,
    /// Tilt of the Tx array, radians.
    pub tilt: f64,
    /// Number of Tx elements (odd).
    pub tx_elements: usize,
    pub wavelength: f64,
    /// Tx element pitch, metres.
    pub tx_pitch: f64,
}

impl BistaticGeometry {
    /// Tx array with half-wavelength pitch.
    pub fn new(
        baseline: f64,
        bearing: f64,
        tilt: f64,
        tx_elements: usize,
        wavelength: f64,
    ) -> Result<Self> {
        if !(baseline.is_finite() && baseline > 0.0) {
            return Err(CrbError::InvalidConfiguration(format!(
                "Tx-Rx distance must be positive, got {baseline}"
            )));
        }
        if tx_elements == 0 || tx_elements.is_multiple_of(2) {
            return Err(CrbError::InvalidConfiguration(format!(
                "Tx element count must be a positive odd integer, got {tx_elements}"
            )));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(CrbError::InvalidConfiguration(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        Ok(Self {
            baseline,
            bearing,
            tilt,
            tx_elements,
            wavelength,
            tx_pitch: wavelength / 2.0,
        })
    }

    /// Position of the Tx array centre in the receiver frame.
    pub fn tx_center(&self) -> (f64, f64) {
        (
            -self.baseline * self.bearing.sin(),
            self.baseline * self.bearing.cos(),
        )
    }
}

/// Target distance and angle of arrival as seen from the Tx array centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxView {
    pub range: f64,
    pub angle: f64,
}

/// Maps the receiver-frame target `(r, θ)` to the Tx-frame `(r̄, φ)`.
///
/// A target at the receiver origin (`r = 0`) is accepted here even though
/// [`TargetPolar`] forbids it, so the raw values are taken directly.
pub fn tx_transform_raw(bistatic: &BistaticGeometry, r: f64, theta: f64) -> Result<TxView> {
    let big_r = bistatic.baseline;
    let phi = bistatic.bearing;
    let sq = big_r * big_r + r * r - 2.0 * big_r * r * (theta + phi).cos();
    if !(sq > 0.0) {
        return Err(CrbError::SingularGeometry(
            "target coincides with the Tx array centre".into(),
        ));
    }
    let range = sq.sqrt();
    let arg = (r * theta.sin() + big_r * phi.sin()) / range;
    let arg = if arg.abs() <= 1.0 {
        arg
    } else if arg.abs() <= 1.0 + ASIN_CLAMP_TOL {
        arg.signum()
    } else {
        return Err(CrbError::NumericDomain(format!(
            "Tx angle-of-arrival sine {arg} outside [-1, 1]"
        )));
    };
    Ok(TxView {
        range,
        angle: arg.asin(),
    })
}

pub fn tx_transform(bistatic: &BistaticGeometry, target: &TargetPolar) -> Result<TxView> {
    tx_transform_raw(bistatic, target.r, target.theta)
}

/// Spherical-wave transmit response `e^{-j2π r̄_n/λ}` over the Tx elements.
pub fn tx_steering(bistatic: &BistaticGeometry, target: &TargetPolar) -> Result<Vec<Complex64>> {
    let view = tx_transform(bistatic, target)?;
    let half = (bistatic.tx_elements / 2) as i64;
    let k = 2.0 * std::f64::consts::PI / bistatic.wavelength;
    let s = (view.angle - bistatic.tilt).sin();
    Ok((-half..=half)
        .map(|n| {
            let nd = n as f64 * bistatic.tx_pitch;
            let rn = (view.range * view.range - 2.0 * view.range * nd * s + nd * nd).sqrt();
            Complex64::from_polar(1.0, -k * rn)
        })
        .collect())
}
