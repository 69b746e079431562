//! Closed-form Cramér–Rao bounds for joint range/angle estimation.
//!
//! All bounds are deterministic single-snapshot bounds for a phase-only
//! manifold observed in white noise with known reflection gain magnitude
//! ratio `γ = |α|²/σ²`. Range bounds are in m², angle bounds in rad².
//!
//! Differences such as `Kq - p²` are evaluated through centred sums so the
//! range information of a far target does not drown in cancellation.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CrbError, Result};
use crate::fim::FimTerms;
use crate::geometry::{point_partials, ModularLayout, TargetPolar};
use crate::wavefront::WavefrontModel;

/// Information below this fraction of its uncentred scale counts as zero.
pub const ZERO_INFORMATION: f64 = 1e-24;
/// Determinants below this fraction of the diagonal product count as singular.
pub const SINGULAR_DET: f64 = 1e-12;
/// `|cos θ|` at or below this is treated as endfire.
pub const ENDFIRE_COS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingSnr {
    gamma: f64,
}

impl SensingSnr {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(CrbError::InvalidConfiguration(format!(
                "SNR must be positive and finite, got {gamma}"
            )));
        }
        Ok(SensingSnr { gamma })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn linear(&self) -> f64 {
        self.gamma
    }

    pub fn db(&self) -> f64 {
        10.0 * self.gamma.log10()
    }
}

/// Subarray-level sums over the partials of `r_k` and `sin θ_k`.
///
/// `a_k = ∂r_k/∂r`, `b_k = ∂r_k/∂θ`, `s_k = ∂sinθ_k/∂r`, `t_k = ∂sinθ_k/∂θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HspmIntermediates {
    /// `Σ a_k`
    pub p: f64,
    /// `Σ b_k`
    pub p_tilde: f64,
    /// `Σ a_k²`
    pub q: f64,
    /// `Σ b_k²`
    pub q_tilde: f64,
    /// `Σ a_k b_k`
    pub q_hat: f64,
    /// `Σ s_k²`
    pub z: f64,
    /// `Σ t_k²`
    pub z_tilde: f64,
    /// `Σ s_k t_k`
    pub z_hat: f64,
    /// `K q - p²`, from centred sums.
    pub spread_r: f64,
    /// `K q̃ - p̃²`, from centred sums.
    pub spread_theta: f64,
    /// `K q̂ - p p̃`, from centred sums.
    pub spread_cross: f64,
}

/// Element-level sums over `w_i = ∂r_{k,m}/∂r` and `v_i = ∂r_{k,m}/∂θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwmIntermediates {
    pub w_r: f64,
    pub w_theta: f64,
    pub w_rr: f64,
    pub w_rtheta: f64,
    pub w_thetatheta: f64,
    /// `N w_rr - w_r²`, from centred sums.
    pub spread_r: f64,
    /// `N w_θθ - w_θ²`, from centred sums.
    pub spread_theta: f64,
    /// `N w_rθ - w_r w_θ`, from centred sums.
    pub spread_cross: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrbFlags {
    /// Some bound is infinite because the Fisher information is singular.
    pub degenerate: bool,
    /// `|θ| = π/2`; the angle bound is infinite.
    pub endfire: bool,
}

impl CrbFlags {
    pub fn any(&self) -> bool {
        self.degenerate || self.endfire
    }
}

impl fmt::Display for CrbFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.degenerate, self.endfire) {
            (false, false) => f.write_str("none"),
            (true, false) => f.write_str("degenerate"),
            (false, true) => f.write_str("endfire"),
            (true, true) => f.write_str("degenerate|endfire"),
        }
    }
}

impl std::str::FromStr for CrbFlags {
    type Err = CrbError;

    fn from_str(s: &str) -> Result<Self> {
        let mut flags = CrbFlags::default();
        for part in s.split('|').map(str::trim) {
            match part {
                "none" | "" => {}
                "degenerate" => flags.degenerate = true,
                "endfire" => flags.endfire = true,
                other => {
                    return Err(CrbError::ConfigParse(format!("unknown flag '{other}'")));
                }
            }
        }
        Ok(flags)
    }
}

/// Denominators of a 2×2 bound: range and angle information and their coupling,
/// all in the units of the model's common numerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Denominators {
    pub range: f64,
    pub angle: f64,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    None,
    Hspm {
        intermediates: HspmIntermediates,
        denominators: Denominators,
    },
    Swm {
        intermediates: SwmIntermediates,
        denominators: Denominators,
    },
    Pwm {
        angle_denominator: f64,
    },
    Broadside {
        denominators: Denominators,
    },
    Asymptotic {
        sx: f64,
        sum_x4: f64,
        /// `S / r`; the expansion assumes this is small.
        regime_ratio: f64,
        denominators: Denominators,
    },
    Generic(FimTerms),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbPair {
    #[serde(with = "crate::extended")]
    pub crb_r: f64,
    #[serde(with = "crate::extended")]
    pub crb_theta: f64,
    pub model: Option<WavefrontModel>,
    pub flags: CrbFlags,
    pub diagnostics: Diagnostics,
}

fn lambda_factor(wavelength: f64) -> f64 {
    let l = wavelength / (2.0 * PI);
    l * l
}

fn is_endfire(theta: f64) -> bool {
    theta.cos().abs() <= ENDFIRE_COS
}

fn has_information(value: f64, scale: f64) -> bool {
    value > ZERO_INFORMATION * scale
}

/// Inverts a 2×2 information matrix `num⁻¹·[[Dr, C], [C, Dθ]]`.
///
/// A parameter with no information gets an infinite bound and the other falls
/// back to its single-parameter bound.
pub(crate) fn invert_pair(
    num: f64,
    den: Denominators,
    scale_r: f64,
    scale_theta: f64,
    endfire: bool,
) -> (f64, f64, CrbFlags) {
    let mut flags = CrbFlags {
        degenerate: false,
        endfire,
    };
    let info_r = has_information(den.range, scale_r);
    let info_t = !endfire && has_information(den.angle, scale_theta);
    let inf = f64::INFINITY;
    let (cr, ct) = match (info_r, info_t) {
        (false, false) => (inf, inf),
        (false, true) => (inf, num / den.angle),
        (true, false) => (num / den.range, inf),
        (true, true) => {
            let diag = den.range * den.angle;
            let det = diag - den.coupling * den.coupling;
            if det <= SINGULAR_DET * diag {
                (inf, inf)
            } else {
                (num * den.angle / det, num * den.range / det)
            }
        }
    };
    if cr.is_infinite() || (ct.is_infinite() && !endfire) {
        flags.degenerate = true;
    }
    (cr, ct, flags)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `(n Σ u², n Σ v², n Σ uv)` after removing the means, i.e. `nΣu² - (Σu)²` etc.
fn centred_spreads(u: &[f64], v: &[f64]) -> (f64, f64, f64) {
    let n = u.len() as f64;
    let (mu, mv) = (mean(u), mean(v));
    let mut suu = 0.0;
    let mut svv = 0.0;
    let mut suv = 0.0;
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        suu += da * da;
        svv += db * db;
        suv += da * db;
    }
    (n * suu, n * svv, n * suv)
}

pub fn intermediates_hspm(layout: &ModularLayout, target: &TargetPolar) -> Result<HspmIntermediates> {
    let parts = layout
        .subarray_positions()
        .into_iter()
        .map(|x| point_partials(target, x))
        .collect::<Result<Vec<_>>>()?;
    let mut out = HspmIntermediates {
        p: 0.0,
        p_tilde: 0.0,
        q: 0.0,
        q_tilde: 0.0,
        q_hat: 0.0,
        z: 0.0,
        z_tilde: 0.0,
        z_hat: 0.0,
        spread_r: 0.0,
        spread_theta: 0.0,
        spread_cross: 0.0,
    };
    for p in &parts {
        out.p += p.range_dr;
        out.p_tilde += p.range_dtheta;
        out.q += p.range_dr * p.range_dr;
        out.q_tilde += p.range_dtheta * p.range_dtheta;
        out.q_hat += p.range_dr * p.range_dtheta;
        out.z += p.sine_dr * p.sine_dr;
        out.z_tilde += p.sine_dtheta * p.sine_dtheta;
        out.z_hat += p.sine_dr * p.sine_dtheta;
    }
    // a_k = 1 - deficit_k, so centring the deficits flips the cross sign.
    let deficits: Vec<f64> = parts.iter().map(|p| p.range_dr_deficit).collect();
    let b: Vec<f64> = parts.iter().map(|p| p.range_dtheta).collect();
    let (sr, st, sc) = centred_spreads(&deficits, &b);
    out.spread_r = sr;
    out.spread_theta = st;
    out.spread_cross = -sc;
    Ok(out)
}

fn hspm_from_intermediates(
    ints: &HspmIntermediates,
    layout: &ModularLayout,
    wavelength: f64,
    snr: SensingSnr,
    endfire: bool,
    model: WavefrontModel,
) -> CrbPair {
    let k = layout.num_subarrays() as f64;
    let m = layout.elements_per_subarray() as f64;
    let d = layout.pitch();
    let a = k * (m * m - 1.0) * d * d;
    let den = Denominators {
        range: a * ints.z + 12.0 * ints.spread_r,
        angle: a * ints.z_tilde + 12.0 * ints.spread_theta,
        coupling: a * ints.z_hat + 12.0 * ints.spread_cross,
    };
    let num = 6.0 * k / (snr.linear() * m) * lambda_factor(wavelength);
    let (cr, ct, flags) = invert_pair(
        num,
        den,
        a * ints.z + 12.0 * k * ints.q,
        a * ints.z_tilde + 12.0 * k * ints.q_tilde,
        endfire,
    );
    CrbPair {
        crb_r: cr,
        crb_theta: ct,
        model: Some(model),
        flags,
        diagnostics: Diagnostics::Hspm {
            intermediates: *ints,
            denominators: den,
        },
    }
}

/// Per-subarray AoA model (distinct `θ_k`).
pub fn crb_hspm_dist(
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> Result<CrbPair> {
    let ints = intermediates_hspm(layout, target)?;
    Ok(hspm_from_intermediates(
        &ints,
        layout,
        wavelength,
        snr,
        is_endfire(target.theta),
        WavefrontModel::HspmDist,
    ))
}

/// Shared-AoA model: every subarray sees `θ`, only the bulk ranges differ.
pub fn crb_hspm_shared(
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> Result<CrbPair> {
    let ints = intermediates_hspm(layout, target)?;
    let k = layout.num_subarrays() as f64;
    let m = layout.elements_per_subarray() as f64;
    let d = layout.pitch();
    let cos2 = target.theta.cos().powi(2);
    let endfire = is_endfire(target.theta);
    let den = Denominators {
        range: 12.0 * ints.spread_r,
        angle: k * k * (m * m - 1.0) * d * d * cos2 + 12.0 * ints.spread_theta,
        coupling: 12.0 * ints.spread_cross,
    };
    let num = 6.0 * k / (snr.linear() * m) * lambda_factor(wavelength);
    let (cr, ct, flags) = invert_pair(
        num,
        den,
        12.0 * k * ints.q,
        k * k * (m * m - 1.0) * d * d * cos2 + 12.0 * k * ints.q_tilde,
        endfire,
    );
    let shared = HspmIntermediates {
        z: 0.0,
        z_tilde: k * cos2,
        z_hat: 0.0,
        ..ints
    };
    debug_assert!({
        let sub = hspm_from_intermediates(&shared, layout, wavelength, snr, endfire, WavefrontModel::HspmShared);
        crate::fim::rel_err(sub.crb_r, cr) <= 1e-12 && crate::fim::rel_err(sub.crb_theta, ct) <= 1e-12
    });
    Ok(CrbPair {
        crb_r: cr,
        crb_theta: ct,
        model: Some(WavefrontModel::HspmShared),
        flags,
        diagnostics: Diagnostics::Hspm {
            intermediates: shared,
            denominators: den,
        },
    })
}

/// Evaluates the distinct-AoA formula on caller-supplied intermediates.
pub fn crb_from_hspm_intermediates(
    ints: &HspmIntermediates,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> CrbPair {
    hspm_from_intermediates(
        ints,
        layout,
        wavelength,
        snr,
        is_endfire(target.theta),
        WavefrontModel::HspmDist,
    )
}

/// Plane-wave model: no range information, angle bound independent of `r`.
pub fn crb_pwm(
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> Result<CrbPair> {
    let xk = layout.subarray_positions();
    let k = xk.len() as f64;
    let m = layout.elements_per_subarray() as f64;
    let d = layout.pitch();
    let xbar = mean(&xk);
    let spread: f64 = xk.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let ula = k * k * m * (m * m - 1.0) * d * d;
    let den = 12.0 * k * m * spread + ula;
    let scale = 12.0 * k * m * xk.iter().map(|x| x * x).sum::<f64>() + ula;
    let endfire = is_endfire(target.theta);
    let cos2 = target.theta.cos().powi(2);
    let crb_theta = if endfire || !has_information(den, scale) {
        f64::INFINITY
    } else {
        6.0 * k / (snr.linear() * cos2) * lambda_factor(wavelength) / den
    };
    Ok(CrbPair {
        crb_r: f64::INFINITY,
        crb_theta,
        model: Some(WavefrontModel::Pwm),
        flags: CrbFlags {
            degenerate: crb_theta.is_infinite() && !endfire,
            endfire,
        },
        diagnostics: Diagnostics::Pwm {
            angle_denominator: den,
        },
    })
}

pub fn intermediates_swm(layout: &ModularLayout, target: &TargetPolar) -> Result<SwmIntermediates> {
    let parts = layout
        .element_x()
        .iter()
        .map(|&x| point_partials(target, x))
        .collect::<Result<Vec<_>>>()?;
    let mut out = SwmIntermediates {
        w_r: 0.0,
        w_theta: 0.0,
        w_rr: 0.0,
        w_rtheta: 0.0,
        w_thetatheta: 0.0,
        spread_r: 0.0,
        spread_theta: 0.0,
        spread_cross: 0.0,
    };
    for p in &parts {
        out.w_r += p.range_dr;
        out.w_theta += p.range_dtheta;
        out.w_rr += p.range_dr * p.range_dr;
        out.w_rtheta += p.range_dr * p.range_dtheta;
        out.w_thetatheta += p.range_dtheta * p.range_dtheta;
    }
    let deficits: Vec<f64> = parts.iter().map(|p| p.range_dr_deficit).collect();
    let b: Vec<f64> = parts.iter().map(|p| p.range_dtheta).collect();
    let (sr, st, sc) = centred_spreads(&deficits, &b);
    out.spread_r = sr;
    out.spread_theta = st;
    out.spread_cross = -sc;
    Ok(out)
}

/// Exact spherical model over all `K·M` elements.
pub fn crb_swm(
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> Result<CrbPair> {
    let ints = intermediates_swm(layout, target)?;
    let n = layout.num_elements() as f64;
    let den = Denominators {
        range: ints.spread_r,
        angle: ints.spread_theta,
        coupling: ints.spread_cross,
    };
    let num = n / (2.0 * snr.linear()) * lambda_factor(wavelength);
    let (cr, ct, flags) = invert_pair(
        num,
        den,
        n * ints.w_rr,
        n * ints.w_thetatheta,
        is_endfire(target.theta),
    );
    Ok(CrbPair {
        crb_r: cr,
        crb_theta: ct,
        model: Some(WavefrontModel::Swm),
        flags,
        diagnostics: Diagnostics::Swm {
            intermediates: ints,
            denominators: den,
        },
    })
}

fn require_broadside_symmetric(layout: &ModularLayout, target: &TargetPolar) -> Result<()> {
    if target.theta != 0.0 {
        return Err(CrbError::Precondition(format!(
            "broadside form needs θ = 0, got {}",
            target.theta
        )));
    }
    if !layout.is_centro_symmetric() {
        return Err(CrbError::Precondition(
            "broadside form needs a centro-symmetric layout".into(),
        ));
    }
    Ok(())
}

/// Distinct-AoA bound specialised to a broadside target on a centro-symmetric
/// layout, where range and angle decouple.
pub fn crb_cor1(
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> Result<CrbPair> {
    require_broadside_symmetric(layout, target)?;
    let r = target.r;
    let xk = layout.subarray_positions();
    let k = xk.len() as f64;
    let m = layout.elements_per_subarray() as f64;
    let d = layout.pitch();
    let mut z = 0.0;
    let mut z_tilde = 0.0;
    let mut q_tilde = 0.0;
    let mut q = 0.0;
    // 1 - r/r_k without cancellation.
    let mut deficits = Vec::with_capacity(xk.len());
    for &x in &xk {
        let rk = r.hypot(x);
        let rho = r / rk;
        let rho2 = rho * rho;
        z += rho2 * x * x / rk.powi(4);
        z_tilde += rho2 * rho2 * rho2;
        q_tilde += rho2 * x * x;
        q += rho2;
        deficits.push(x * x / (rk * (rk + r)));
    }
    let (spread_r, _, _) = centred_spreads(&deficits, &deficits);
    let a = (m * m - 1.0) * d * d;
    let den = Denominators {
        range: k * a * z + 12.0 * spread_r,
        angle: a * z_tilde + 12.0 * q_tilde,
        coupling: 0.0,
    };
    let lf = lambda_factor(wavelength);
    let g = snr.linear();
    let crb_r = if has_information(den.range, k * a * z + 12.0 * k * q) {
        6.0 * k / (g * m) * lf / den.range
    } else {
        f64::INFINITY
    };
    let crb_theta = if has_information(den.angle, a * z_tilde + 12.0 * q_tilde) {
        6.0 / (g * m) * lf / den.angle
    } else {
        f64::INFINITY
    };
    Ok(CrbPair {
        crb_r,
        crb_theta,
        model: Some(WavefrontModel::HspmDist),
        flags: CrbFlags {
            degenerate: crb_r.is_infinite() || crb_theta.is_infinite(),
            endfire: false,
        },
        diagnostics: Diagnostics::Broadside { denominators: den },
    })
}

/// Range-information denominator of the large-range expansion, scaled by `r⁴`:
/// `K(M²-1)d²Sx + 3(KΣx⁴ - Sx²)`.
pub fn asymptotic_range_denominator(k: usize, m: usize, d: f64, sx: f64, sum_x4: f64) -> f64 {
    let (k, m) = (k as f64, m as f64);
    k * (m * m - 1.0) * d * d * sx + 3.0 * (k * sum_x4 - sx * sx)
}

/// Large-range range bound as a function of the subarray moments
/// `Sx = Σx_k²` and `Σx_k⁴`.
#[allow(clippy::too_many_arguments)]
pub fn asymptotic_range_crb(
    k: usize,
    m: usize,
    d: f64,
    sx: f64,
    sum_x4: f64,
    r: f64,
    wavelength: f64,
    snr: SensingSnr,
) -> f64 {
    let den = asymptotic_range_denominator(k, m, d, sx, sum_x4);
    let scale = (k * (m * m - 1)) as f64 * d * d * sx + 3.0 * k as f64 * sum_x4;
    if !has_information(den, scale) {
        return f64::INFINITY;
    }
    6.0 * k as f64 / (snr.linear() * m as f64) * lambda_factor(wavelength) * r.powi(4) / den
}

/// Second-order expansion of the broadside bound in `x_k/r`.
pub fn crb_cor2(
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> Result<CrbPair> {
    require_broadside_symmetric(layout, target)?;
    let r = target.r;
    let xk = layout.subarray_positions();
    let k = layout.num_subarrays();
    let m = layout.elements_per_subarray();
    let d = layout.pitch();
    let sx: f64 = xk.iter().map(|x| x * x).sum();
    let sum_x4: f64 = xk.iter().map(|x| x.powi(4)).sum();
    let (kf, mf) = (k as f64, m as f64);
    let a = (mf * mf - 1.0) * d * d;
    let omega = 3.0 * a * sx + 12.0 * sum_x4;
    let angle_scale = kf * a + 12.0 * sx;
    let den = Denominators {
        range: asymptotic_range_denominator(k, m, d, sx, sum_x4),
        angle: angle_scale - omega / (r * r),
        coupling: 0.0,
    };
    let crb_r = asymptotic_range_crb(k, m, d, sx, sum_x4, r, wavelength, snr);
    let crb_theta = if has_information(den.angle, angle_scale) {
        6.0 / (snr.linear() * mf) * lambda_factor(wavelength) / den.angle
    } else {
        f64::INFINITY
    };
    Ok(CrbPair {
        crb_r,
        crb_theta,
        model: Some(WavefrontModel::HspmDist),
        flags: CrbFlags {
            degenerate: crb_r.is_infinite() || crb_theta.is_infinite(),
            endfire: false,
        },
        diagnostics: Diagnostics::Asymptotic {
            sx,
            sum_x4,
            regime_ratio: layout.aperture() / r,
            denominators: den,
        },
    })
}

/// `Sx` minimising the large-range range bound at fixed `Σx⁴`.
pub fn sx_optimal(k: usize, m: usize, d: f64) -> f64 {
    (k * (m * m).saturating_sub(1)) as f64 * d * d / 6.0
}

/// Closed-form bound for any model.
pub fn crb_closed(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> Result<CrbPair> {
    match model {
        WavefrontModel::HspmDist => crb_hspm_dist(layout, target, wavelength, snr),
        WavefrontModel::HspmShared => crb_hspm_shared(layout, target, wavelength, snr),
        WavefrontModel::Pwm => crb_pwm(layout, target, wavelength, snr),
        WavefrontModel::Swm => crb_swm(layout, target, wavelength, snr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fim::rel_err;

    const LAMBDA: f64 = 0.005;
    const D: f64 = 0.0025;

    fn fig3() -> ModularLayout {
        ModularLayout::new(3, 125, &[90, 0, 90], D).unwrap()
    }

    fn c1(gamma: u32) -> ModularLayout {
        ModularLayout::new(5, 75, &[100 - gamma, gamma, 0, gamma, 100 - gamma], D).unwrap()
    }

    fn snr() -> SensingSnr {
        SensingSnr::new(1.0).unwrap()
    }

    #[test]
    fn snr_conversions() {
        assert_eq!(SensingSnr::from_db(0.0).unwrap().linear(), 1.0);
        assert!((SensingSnr::from_db(20.0).unwrap().linear() - 100.0).abs() < 1e-12);
        assert!((SensingSnr::new(0.1).unwrap().db() + 10.0).abs() < 1e-12);
        assert!(SensingSnr::new(0.0).is_err());
        assert!(SensingSnr::new(f64::NAN).is_err());
    }

    #[test]
    fn flags_round_trip() {
        for f in [
            CrbFlags::default(),
            CrbFlags { degenerate: true, endfire: false },
            CrbFlags { degenerate: false, endfire: true },
            CrbFlags { degenerate: true, endfire: true },
        ] {
            assert_eq!(f.to_string().parse::<CrbFlags>().unwrap(), f);
        }
        assert!("bogus".parse::<CrbFlags>().is_err());
    }

    #[test]
    fn broadside_symmetric_intermediates_vanish() {
        let l = c1(37);
        let t = TargetPolar::new(9.0, 0.0).unwrap();
        let i = intermediates_hspm(&l, &t).unwrap();
        assert!(i.p_tilde.abs() <= 1e-12 * i.q_tilde.sqrt());
        assert!(i.q_hat.abs() <= 1e-12 * (i.q * i.q_tilde).sqrt());
        assert!(i.z_hat.abs() <= 1e-12 * (i.z * i.z_tilde).sqrt());
        assert!(i.spread_cross.abs() <= 1e-12 * (i.spread_r * i.spread_theta).sqrt());
    }

    #[test]
    fn single_subarray_intermediates() {
        let l = ModularLayout::new(1, 9, &[0], D).unwrap();
        let t = TargetPolar::new(3.0, 0.0).unwrap();
        let i = intermediates_hspm(&l, &t).unwrap();
        assert_eq!((i.p, i.q, i.z), (1.0, 1.0, 0.0));
    }

    #[test]
    fn intermediates_match_finite_differences() {
        let l = fig3();
        let t = TargetPolar::new(30.0, PI / 3.0).unwrap();
        let i = intermediates_hspm(&l, &t).unwrap();
        let (hr, ht) = (1e-3, 1e-6);
        let rk = |r: f64, th: f64, x: f64| (r * r - 2.0 * r * x * th.sin() + x * x).sqrt();
        let sk = |r: f64, th: f64, x: f64| (r * th.sin() - x) / rk(r, th, x);
        let mut fd = [0.0f64; 8];
        for x in l.subarray_positions() {
            let (r, th) = (t.r, t.theta);
            let a = (rk(r + hr, th, x) - rk(r - hr, th, x)) / (2.0 * hr);
            let b = (rk(r, th + ht, x) - rk(r, th - ht, x)) / (2.0 * ht);
            let s = (sk(r + hr, th, x) - sk(r - hr, th, x)) / (2.0 * hr);
            let u = (sk(r, th + ht, x) - sk(r, th - ht, x)) / (2.0 * ht);
            for (acc, v) in fd.iter_mut().zip([a, b, a * a, b * b, a * b, s * s, u * u, s * u]) {
                *acc += v;
            }
        }
        let got = [i.p, i.p_tilde, i.q, i.q_tilde, i.q_hat, i.z, i.z_tilde, i.z_hat];
        for (g, f) in got.iter().zip(&fd) {
            assert!(rel_err(*g, *f) < 1e-6, "{g} vs {f}");
        }
    }

    #[test]
    fn shared_exceeds_dist_on_fig3() {
        let l = fig3();
        let t = TargetPolar::new(30.0, PI / 3.0).unwrap();
        let a = crb_hspm_dist(&l, &t, LAMBDA, snr()).unwrap();
        let b = crb_hspm_shared(&l, &t, LAMBDA, snr()).unwrap();
        assert!(b.crb_r > a.crb_r);
    }

    #[test]
    fn shared_is_dist_with_substituted_curvature() {
        let l = ModularLayout::new(5, 31, &[12, 4, 0, 7, 2], D).unwrap();
        let t = TargetPolar::new(6.0, -0.7).unwrap();
        let ints = intermediates_hspm(&l, &t).unwrap();
        let k = 5.0;
        let sub = HspmIntermediates {
            z: 0.0,
            z_tilde: k * t.theta.cos().powi(2),
            z_hat: 0.0,
            ..ints
        };
        let a = crb_from_hspm_intermediates(&sub, &l, &t, LAMBDA, snr());
        let b = crb_hspm_shared(&l, &t, LAMBDA, snr()).unwrap();
        assert!(rel_err(a.crb_r, b.crb_r) <= 1e-12);
        assert!(rel_err(a.crb_theta, b.crb_theta) <= 1e-12);
    }

    #[test]
    fn single_subarray_models_coincide() {
        let l = ModularLayout::new(1, 41, &[0], D).unwrap();
        let t = TargetPolar::new(2.0, 0.5).unwrap();
        let a = crb_hspm_dist(&l, &t, LAMBDA, snr()).unwrap();
        let b = crb_hspm_shared(&l, &t, LAMBDA, snr()).unwrap();
        assert_eq!(a.crb_r, f64::INFINITY);
        assert_eq!(b.crb_r, f64::INFINITY);
        assert!(rel_err(a.crb_theta, b.crb_theta) < 1e-12);
        assert!(a.flags.degenerate);
    }

    #[test]
    fn snr_scaling_is_exact() {
        let l = fig3();
        let t = TargetPolar::new(12.0, 0.3).unwrap();
        for model in WavefrontModel::ALL {
            let a = crb_closed(model, &l, &t, LAMBDA, snr()).unwrap();
            let b = crb_closed(model, &l, &t, LAMBDA, SensingSnr::new(2.0).unwrap()).unwrap();
            if a.crb_r.is_finite() {
                assert!(rel_err(a.crb_r, 2.0 * b.crb_r) < 1e-15, "{model}");
            }
            assert!(rel_err(a.crb_theta, 2.0 * b.crb_theta) < 1e-15, "{model}");
        }
    }

    #[test]
    fn pwm_range_is_infinite_and_angle_range_free() {
        let l = fig3();
        let a = crb_pwm(&l, &TargetPolar::new(5.0, 0.4).unwrap(), LAMBDA, snr()).unwrap();
        let b = crb_pwm(&l, &TargetPolar::new(50.0, 0.4).unwrap(), LAMBDA, snr()).unwrap();
        assert_eq!(a.crb_r, f64::INFINITY);
        assert_eq!(a.crb_theta, b.crb_theta);
        assert!(!a.flags.any());
    }

    #[test]
    fn pwm_matches_ula_formula_without_gaps() {
        // N-element half-wavelength ULA: CRB_θ = 6/(γ N (N²-1) (π cosθ)²).
        let l = ModularLayout::uniform(15, LAMBDA / 2.0).unwrap();
        let t = TargetPolar::new(4.0, 0.2).unwrap();
        let got = crb_pwm(&l, &t, LAMBDA, snr()).unwrap().crb_theta;
        let n = 15.0f64;
        let want = 6.0 / (n * (n * n - 1.0) * (PI * 0.2f64.cos()).powi(2));
        assert!(rel_err(got, want) < 1e-12);
    }

    #[test]
    fn endfire_angle_bound_is_infinite() {
        let l = fig3();
        let t = TargetPolar::new(20.0, PI / 2.0).unwrap();
        for model in WavefrontModel::ALL {
            let c = crb_closed(model, &l, &t, LAMBDA, snr()).unwrap();
            assert_eq!(c.crb_theta, f64::INFINITY, "{model}");
            assert!(c.flags.endfire);
        }
    }

    #[test]
    fn swm_single_element_is_degenerate() {
        let l = ModularLayout::new(1, 1, &[0], D).unwrap();
        let c = crb_swm(&l, &TargetPolar::new(3.0, 0.1).unwrap(), LAMBDA, snr()).unwrap();
        assert_eq!((c.crb_r, c.crb_theta), (f64::INFINITY, f64::INFINITY));
        assert!(c.flags.degenerate);
    }

    #[test]
    fn swm_close_to_dist_on_fig3_grid() {
        let l = fig3();
        for r in [10.0, 20.0, 30.0, 40.0, 50.0] {
            let t = TargetPolar::new(r, PI / 3.0).unwrap();
            let a = crb_swm(&l, &t, LAMBDA, snr()).unwrap();
            let b = crb_hspm_dist(&l, &t, LAMBDA, snr()).unwrap();
            assert!(rel_err(a.crb_r, b.crb_r) < 0.03, "r={r}");
        }
    }

    #[test]
    fn broadside_form_equals_general_form() {
        for (l, r) in [(c1(50), 30.0), (fig3(), 7.0), (c1(3), 2.5)] {
            let t = TargetPolar::new(r, 0.0).unwrap();
            let a = crb_cor1(&l, &t, LAMBDA, snr()).unwrap();
            let b = crb_hspm_dist(&l, &t, LAMBDA, snr()).unwrap();
            assert!(rel_err(a.crb_r, b.crb_r) <= 1e-10);
            assert!(rel_err(a.crb_theta, b.crb_theta) <= 1e-10);
        }
    }

    #[test]
    fn broadside_form_preconditions() {
        let t = TargetPolar::new(10.0, 0.1).unwrap();
        assert!(matches!(crb_cor1(&fig3(), &t, LAMBDA, snr()), Err(CrbError::Precondition(_))));
        let skew = ModularLayout::new(3, 5, &[1, 0, 4], D).unwrap();
        let t0 = TargetPolar::new(10.0, 0.0).unwrap();
        assert!(matches!(crb_cor1(&skew, &t0, LAMBDA, snr()), Err(CrbError::Precondition(_))));
        assert!(matches!(crb_cor2(&skew, &t0, LAMBDA, snr()), Err(CrbError::Precondition(_))));
    }

    #[test]
    fn single_subarray_has_no_broadside_range_information() {
        let l = ModularLayout::new(1, 75, &[0], D).unwrap();
        let t = TargetPolar::new(10.0, 0.0).unwrap();
        assert_eq!(crb_cor1(&l, &t, LAMBDA, snr()).unwrap().crb_r, f64::INFINITY);
        assert_eq!(crb_cor2(&l, &t, LAMBDA, snr()).unwrap().crb_r, f64::INFINITY);
    }

    #[test]
    fn sx_optimum_values() {
        assert_eq!(sx_optimal(1, 1, 0.3), 0.0);
        let want = 5.0 * 5624.0 * 6.25e-6 / 6.0;
        assert!(rel_err(sx_optimal(5, 75, D), want) < 1e-15);
    }

    #[test]
    fn asymptotic_form_converges() {
        let l = c1(50);
        let s = l.aperture();
        let mut last = f64::INFINITY;
        for f in [10.0, 20.0, 50.0, 100.0] {
            let t = TargetPolar::new(f * s, 0.0).unwrap();
            let a = crb_cor1(&l, &t, LAMBDA, snr()).unwrap();
            let b = crb_cor2(&l, &t, LAMBDA, snr()).unwrap();
            let dev = rel_err(a.crb_r, b.crb_r).max(rel_err(a.crb_theta, b.crb_theta));
            assert!(dev < last, "{dev} at {f}S");
            last = dev;
        }
        assert!(last < 1e-2);
    }

    #[test]
    fn mirror_symmetry() {
        let l = c1(20);
        for model in WavefrontModel::ALL {
            let a = crb_closed(model, &l, &TargetPolar::new(8.0, 0.9).unwrap(), LAMBDA, snr()).unwrap();
            let b = crb_closed(model, &l, &TargetPolar::new(8.0, -0.9).unwrap(), LAMBDA, snr()).unwrap();
            assert!(rel_err(a.crb_r, b.crb_r) <= 1e-12, "{model}");
            assert!(rel_err(a.crb_theta, b.crb_theta) <= 1e-12, "{model}");
        }
    }

    #[test]
    fn more_elements_per_subarray_help_at_broadside() {
        let t = TargetPolar::new(20.0, 0.0).unwrap();
        let mut last = (f64::INFINITY, f64::INFINITY);
        for m in [25, 75, 125] {
            let l = ModularLayout::new(5, m, &[30, 30, 0, 30, 30], D).unwrap();
            let c = crb_cor1(&l, &t, LAMBDA, snr()).unwrap();
            assert!(c.crb_r < last.0 && c.crb_theta < last.1);
            last = (c.crb_r, c.crb_theta);
        }
    }

    #[test]
    fn pair_serializes_infinity_as_literal() {
        let l = fig3();
        let c = crb_pwm(&l, &TargetPolar::new(5.0, 0.4).unwrap(), LAMBDA, snr()).unwrap();
        let js = serde_json::to_string(&c).unwrap();
        assert!(js.contains("\"crb_r\":\"inf\""));
        let back: CrbPair = serde_json::from_str(&js).unwrap();
        assert_eq!(back, c);
    }
}
