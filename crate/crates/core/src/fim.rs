//! Generic bound from an arbitrary steering vector and its derivatives, plus
//! finite-difference derivatives. This path knows nothing about the closed
//! forms and serves as their independent check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::crb::{crb_closed, CrbFlags, CrbPair, Diagnostics, SensingSnr};
use crate::error::{CrbError, Result};
use crate::geometry::{ModularLayout, TargetPolar};
use crate::wavefront::{
    derivatives_from_rates, path_lengths_with, path_rates_with, steering_with, PathRates,
    PhaseReference, SteeringDerivatives, SteeringVector, WavefrontModel,
};

pub const REL_ERR_FLOOR: f64 = 1e-300;

/// `|a - b| / max(|a|, |b|, floor)`; zero when both are `+inf`, infinite when
/// only one is (or either is NaN).
pub fn rel_err(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        return f64::INFINITY;
    }
    match (a.is_infinite(), b.is_infinite()) {
        (true, true) if a == b => 0.0,
        (false, false) => (a - b).abs() / a.abs().max(b.abs()).max(REL_ERR_FLOOR),
        _ => f64::INFINITY,
    }
}

/// Raw inner products of the steering vector and its derivatives, and the
/// projected (nuisance-free) information terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FimTerms {
    pub n2_g: f64,
    pub n2_gr: f64,
    pub n2_gtheta: f64,
    /// `ġ_rᴴ g`
    pub ip_gr_g: Complex64,
    /// `ġ_θᴴ g`
    pub ip_gtheta_g: Complex64,
    /// `ġ_rᴴ ġ_θ`
    pub ip_gr_gtheta: Complex64,
    /// Determinant of the reduced information matrix from the raw products.
    pub det_q: f64,
    /// `‖P⊥ ġ_r‖²`
    pub info_rr: f64,
    /// `‖P⊥ ġ_θ‖²`
    pub info_thetatheta: f64,
    /// `Re (P⊥ ġ_r)ᴴ (P⊥ ġ_θ)`
    pub info_rtheta: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn fim_terms(g: &SteeringVector, dg: &SteeringDerivatives) -> Result<FimTerms> {
    let n = g.len();
    if n == 0 || dg.d_r.len() != n || dg.d_theta.len() != n {
        return Err(CrbError::InvalidConfiguration(format!(
            "steering length {n} with derivative lengths {} and {}",
            dg.d_r.len(),
            dg.d_theta.len()
        )));
    }
    let g = &g.values;
    let n2_g = norm2(g);
    let n2_gr = norm2(&dg.d_r);
    let n2_gtheta = norm2(&dg.d_theta);
    let ip_gr_g = dot(&dg.d_r, g);
    let ip_gtheta_g = dot(&dg.d_theta, g);
    let ip_gr_gtheta = dot(&dg.d_r, &dg.d_theta);

    let a = n2_g * n2_gr - ip_gr_g.norm_sqr();
    let b = n2_g * n2_gtheta - ip_gtheta_g.norm_sqr();
    let c = (n2_g * ip_gr_gtheta - ip_gtheta_g * ip_gr_g.conj()).re;
    let det_q = (a * b - c * c) / (n2_g * n2_g);

    // Project out the gain direction explicitly; subtracting inner products
    // loses the small curvature terms that carry range information.
    let project = |d: &[Complex64], ip: Complex64| -> Vec<Complex64> {
        let coef = ip.conj() / n2_g;
        d.iter().zip(g).map(|(di, gi)| di - gi * coef).collect()
    };
    let hr = project(&dg.d_r, ip_gr_g);
    let ht = project(&dg.d_theta, ip_gtheta_g);
    Ok(FimTerms {
        n2_g,
        n2_gr,
        n2_gtheta,
        ip_gr_g,
        ip_gtheta_g,
        ip_gr_gtheta,
        det_q,
        info_rr: norm2(&hr),
        info_thetatheta: norm2(&ht),
        info_rtheta: dot(&hr, &ht).re,
    })
}

/// Bound from the projected Fisher information of a single snapshot.
pub fn crb_from_steering(
    g: &SteeringVector,
    dg: &SteeringDerivatives,
    snr: SensingSnr,
) -> Result<CrbPair> {
    let t = fim_terms(g, dg)?;
    let s = 1.0 / (2.0 * snr.linear());
    let no_r = !(t.info_rr > 1e-24 * t.n2_gr);
    let no_t = !(t.info_thetatheta > 1e-24 * t.n2_gtheta);
    let inf = f64::INFINITY;
    let (crb_r, crb_theta) = if no_r && no_t {
        (inf, inf)
    } else if no_r {
        (inf, s / t.info_thetatheta)
    } else if no_t {
        (s / t.info_rr, inf)
    } else {
        let diag = t.info_rr * t.info_thetatheta;
        let det = diag - t.info_rtheta * t.info_rtheta;
        if det <= 1e-12 * diag {
            (inf, inf)
        } else {
            (s * t.info_thetatheta / det, s * t.info_rr / det)
        }
    };
    Ok(CrbPair {
        crb_r,
        crb_theta,
        model: None,
        flags: CrbFlags {
            degenerate: crb_r.is_infinite() || crb_theta.is_infinite(),
            endfire: false,
        },
        diagnostics: Diagnostics::Generic(t),
    })
}

/// Central-difference steps: metres for range, radians for angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdSteps {
    pub h_r: f64,
    pub h_theta: f64,
}

impl FdSteps {
    pub fn new(h_r: f64, h_theta: f64) -> Result<Self> {
        if !(h_r > 0.0 && h_theta > 0.0 && h_r.is_finite() && h_theta.is_finite()) {
            return Err(CrbError::InvalidConfiguration(format!(
                "finite-difference steps must be positive, got ({h_r}, {h_theta})"
            )));
        }
        Ok(FdSteps { h_r, h_theta })
    }

    /// Relative range step `1e-4·r`, angle step `1e-5` rad.
    pub fn default_for(target: &TargetPolar) -> Self {
        FdSteps {
            h_r: 1e-4 * target.r,
            h_theta: 1e-5,
        }
    }
}

fn shifted(target: &TargetPolar, dr: f64, dt: f64) -> Result<TargetPolar> {
    TargetPolar::new(target.r + dr, target.theta + dt).map_err(|_| {
        CrbError::StepTooLarge(format!(
            "({}, {}) shifted by ({dr}, {dt}) leaves the valid domain",
            target.r, target.theta
        ))
    })
}

/// Central differences of the path lengths.
pub fn fd_path_rates(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    steps: FdSteps,
    reference: PhaseReference,
) -> Result<PathRates> {
    let FdSteps { h_r, h_theta } = steps;
    let diff = |lo: Vec<f64>, hi: Vec<f64>, h: f64| -> Vec<f64> {
        hi.iter().zip(&lo).map(|(a, b)| (a - b) / (2.0 * h)).collect()
    };
    let r_lo = path_lengths_with(model, layout, &shifted(target, -h_r, 0.0)?, reference)?;
    let r_hi = path_lengths_with(model, layout, &shifted(target, h_r, 0.0)?, reference)?;
    let t_lo = path_lengths_with(model, layout, &shifted(target, 0.0, -h_theta)?, reference)?;
    let t_hi = path_lengths_with(model, layout, &shifted(target, 0.0, h_theta)?, reference)?;
    Ok(PathRates {
        d_r: diff(r_lo, r_hi, h_r),
        d_theta: diff(t_lo, t_hi, h_theta),
    })
}

/// Numerical steering derivatives.
///
/// Differences are taken on the unwrapped phase `(2π/λ)ρ` rather than on the
/// complex entries, so steps much longer than a wavelength stay accurate.
pub fn fd_derivatives(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    steps: FdSteps,
) -> Result<SteeringDerivatives> {
    fd_derivatives_with(model, layout, target, wavelength, steps, PhaseReference::Absolute)
}

pub fn fd_derivatives_with(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    steps: FdSteps,
    reference: PhaseReference,
) -> Result<SteeringDerivatives> {
    let g = steering_with(model, layout, target, wavelength, reference)?;
    let rates = fd_path_rates(model, layout, target, steps, reference)?;
    Ok(derivatives_from_rates(&g, &rates, wavelength))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    pub layout: String,
    pub r: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: WavefrontModel,
    pub point: ValidationPoint,
    pub closed_form: CrbPair,
    pub generic_analytic: CrbPair,
    pub generic_fd: CrbPair,
    #[serde(with = "crate::extended")]
    pub rel_err_analytic: f64,
    #[serde(with = "crate::extended")]
    pub rel_err_fd: f64,
    pub fd_step_used: FdSteps,
}

impl ValidationReport {
    pub fn passes(&self, analytic_tol: f64, fd_tol: f64) -> bool {
        self.rel_err_analytic <= analytic_tol && self.rel_err_fd <= fd_tol
    }
}

/// Worst relative error over the compared components. The plane-wave range
/// bound is structurally infinite and only the angle is compared.
pub fn pair_rel_err(model: WavefrontModel, a: &CrbPair, b: &CrbPair) -> f64 {
    let theta = rel_err(a.crb_theta, b.crb_theta);
    if model == WavefrontModel::Pwm {
        theta
    } else {
        theta.max(rel_err(a.crb_r, b.crb_r))
    }
}

/// Closed form against the generic bound on origin-referenced manifolds, with
/// analytic and with finite-difference derivatives.
pub fn cross_validate(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
) -> Result<ValidationReport> {
    cross_validate_with(model, layout, target, wavelength, snr, FdSteps::default_for(target))
}

pub fn cross_validate_with(
    model: WavefrontModel,
    layout: &ModularLayout,
    target: &TargetPolar,
    wavelength: f64,
    snr: SensingSnr,
    steps: FdSteps,
) -> Result<ValidationReport> {
    let closed = crb_closed(model, layout, target, wavelength, snr)?;
    let origin = PhaseReference::Origin;
    let g = steering_with(model, layout, target, wavelength, origin)?;
    let rates = path_rates_with(model, layout, target, origin)?;
    let analytic_dg = derivatives_from_rates(&g, &rates, wavelength);
    let mut analytic = crb_from_steering(&g, &analytic_dg, snr)?;
    analytic.model = Some(model);
    let fd_dg = fd_derivatives_with(model, layout, target, wavelength, steps, origin)?;
    let mut fd = crb_from_steering(&g, &fd_dg, snr)?;
    fd.model = Some(model);
    Ok(ValidationReport {
        model,
        point: ValidationPoint {
            layout: layout.digest(),
            r: target.r,
            theta: target.theta,
        },
        rel_err_analytic: pair_rel_err(model, &closed, &analytic),
        rel_err_fd: pair_rel_err(model, &closed, &fd),
        closed_form: closed,
        generic_analytic: analytic,
        generic_fd: fd,
        fd_step_used: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefront::{path_rates, steering, steering_derivatives, wavenumber};
    use std::f64::consts::PI;

    const LAMBDA: f64 = 0.005;
    const D: f64 = 0.0025;

    fn fig3() -> ModularLayout {
        ModularLayout::new(3, 125, &[90, 0, 90], D).unwrap()
    }

    fn unit() -> SensingSnr {
        SensingSnr::new(1.0).unwrap()
    }

    #[test]
    fn rel_err_conventions() {
        assert_eq!(rel_err(f64::INFINITY, f64::INFINITY), 0.0);
        assert_eq!(rel_err(1.0, f64::INFINITY), f64::INFINITY);
        assert_eq!(rel_err(0.0, 0.0), 0.0);
        assert_eq!(rel_err(f64::NAN, 1.0), f64::INFINITY);
        assert!((rel_err(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn terms_of_phase_only_manifold() {
        let l = fig3();
        let t = TargetPolar::new(30.0, PI / 3.0).unwrap();
        for m in WavefrontModel::ALL {
            let g = steering(m, &l, &t, LAMBDA).unwrap();
            let dg = steering_derivatives(m, &l, &t, LAMBDA).unwrap();
            let ft = fim_terms(&g, &dg).unwrap();
            assert!((ft.n2_g - 375.0).abs() < 1e-9);
            let scale = ft.n2_gr * ft.n2_gtheta;
            assert!(ft.det_q >= -1e-9 * scale);
            // ġᴴg is purely imaginary for unit-modulus entries.
            assert!(ft.ip_gr_g.re.abs() <= 1e-12 * (ft.n2_g * ft.n2_gr).sqrt());
            assert!(ft.ip_gtheta_g.re.abs() <= 1e-12 * (ft.n2_g * ft.n2_gtheta).sqrt());
        }
    }

    #[test]
    fn hspm_inner_products_have_kronecker_form() {
        // ‖ġ_u‖² = (2π/λ)² [(M³-M) d² Ξ + 12 M Υ] / 12 with Ξ = Σ(∂sinθ_k/∂u)²,
        // Υ = Σ(∂r_k/∂u)².
        let l = fig3();
        let t = TargetPolar::new(25.0, 0.8).unwrap();
        let g = steering(WavefrontModel::HspmDist, &l, &t, LAMBDA).unwrap();
        let dg = steering_derivatives(WavefrontModel::HspmDist, &l, &t, LAMBDA).unwrap();
        let ft = fim_terms(&g, &dg).unwrap();
        let ints = crate::crb::intermediates_hspm(&l, &t).unwrap();
        let c2 = wavenumber(LAMBDA).powi(2);
        let m = 125.0f64;
        let want_r = c2 * ((m * m * m - m) * D * D * ints.z + 12.0 * m * ints.q) / 12.0;
        let want_t = c2 * ((m * m * m - m) * D * D * ints.z_tilde + 12.0 * m * ints.q_tilde) / 12.0;
        assert!(rel_err(ft.n2_gr, want_r) < 1e-9);
        assert!(rel_err(ft.n2_gtheta, want_t) < 1e-9);
    }

    #[test]
    fn intra_subarray_cross_terms_cancel() {
        // Within a subarray, aᴴ ∂a/∂sinθ_k = j(2π/λ) Σ m d = 0.
        let l = fig3();
        let t = TargetPolar::new(25.0, 0.8).unwrap();
        let g = steering(WavefrontModel::HspmDist, &l, &t, LAMBDA).unwrap();
        let c = wavenumber(LAMBDA);
        let offsets = l.intra_offsets();
        for block in g.values.chunks(offsets.len()) {
            let da: Vec<Complex64> = block
                .iter()
                .zip(&offsets)
                .map(|(a, md)| Complex64::new(0.0, c * md) * a)
                .collect();
            let cross = dot(block, &da);
            assert!(cross.norm() <= 1e-10 * norm2(&da).sqrt(), "{cross}");
        }
    }

    #[test]
    fn pwm_has_no_range_information() {
        let l = fig3();
        let t = TargetPolar::new(30.0, 0.5).unwrap();
        let g = steering(WavefrontModel::Pwm, &l, &t, LAMBDA).unwrap();
        let dg = steering_derivatives(WavefrontModel::Pwm, &l, &t, LAMBDA).unwrap();
        let c = crb_from_steering(&g, &dg, unit()).unwrap();
        assert_eq!(c.crb_r, f64::INFINITY);
        assert!(c.crb_theta.is_finite());
        let ft = fim_terms(&g, &dg).unwrap();
        assert_eq!(ft.det_q, 0.0);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let g = SteeringVector { values: vec![Complex64::new(1.0, 0.0); 3] };
        let dg = SteeringDerivatives {
            d_r: vec![Complex64::new(0.0, 1.0); 2],
            d_theta: vec![Complex64::new(0.0, 1.0); 3],
        };
        assert!(crb_from_steering(&g, &dg, unit()).is_err());
    }

    #[test]
    fn fd_rates_close_to_analytic() {
        let l = fig3();
        let t = TargetPolar::new(30.0, PI / 3.0).unwrap();
        let steps = FdSteps::new(1e-4, 1e-4).unwrap();
        let a = path_rates(WavefrontModel::HspmDist, &l, &t).unwrap();
        let f = fd_path_rates(WavefrontModel::HspmDist, &l, &t, steps, PhaseReference::Absolute).unwrap();
        let dev = |x: &[f64], y: &[f64]| {
            let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
        };
        assert!(dev(&a.d_r, &f.d_r) <= 1e-5);
        assert!(dev(&a.d_theta, &f.d_theta) <= 1e-5);
    }

    #[test]
    fn fd_pwm_range_is_zero() {
        let l = fig3();
        let t = TargetPolar::new(30.0, 0.2).unwrap();
        let dg = fd_derivatives(WavefrontModel::Pwm, &l, &t, LAMBDA, FdSteps::default_for(&t)).unwrap();
        assert!(dg.d_r.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn fd_step_leaving_domain() {
        let l = fig3();
        let t = TargetPolar::new(0.5, 0.2).unwrap();
        let err = fd_derivatives(WavefrontModel::Swm, &l, &t, LAMBDA, FdSteps::new(1.0, 1e-5).unwrap());
        assert!(matches!(err, Err(CrbError::StepTooLarge(_))));
        let edge = TargetPolar::new(5.0, PI / 2.0).unwrap();
        let err = fd_path_rates(
            WavefrontModel::Pwm,
            &l,
            &edge,
            FdSteps::new(1e-3, 1e-5).unwrap(),
            PhaseReference::Absolute,
        );
        assert!(matches!(err, Err(CrbError::StepTooLarge(_))));
        assert!(FdSteps::new(0.0, 1.0).is_err());
    }

    #[test]
    fn fd_converges_at_second_order() {
        let l = fig3();
        let t = TargetPolar::new(30.0, PI / 3.0).unwrap();
        let a = path_rates(WavefrontModel::Swm, &l, &t).unwrap();
        let err = |h: f64| {
            let f = fd_path_rates(WavefrontModel::Swm, &l, &t, FdSteps::new(h, h).unwrap(), PhaseReference::Absolute)
                .unwrap();
            a.d_theta
                .iter()
                .zip(&f.d_theta)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(1e-2), err(5e-3), err(2.5e-3));
        for ratio in [e1 / e2, e2 / e3] {
            assert!((3.6..=4.4).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn hspm_shared_validates_on_fig3() {
        let l = fig3();
        let t = TargetPolar::new(30.0, PI / 3.0).unwrap();
        let rep = cross_validate(WavefrontModel::HspmShared, &l, &t, LAMBDA, unit()).unwrap();
        assert!(rep.rel_err_analytic <= 1e-9, "{}", rep.rel_err_analytic);
        assert!(rep.rel_err_fd <= 1e-4, "{}", rep.rel_err_fd);
    }

    #[test]
    fn single_element_validates_as_infinite() {
        let l = ModularLayout::new(1, 1, &[0], D).unwrap();
        let t = TargetPolar::new(3.0, 0.3).unwrap();
        let rep = cross_validate(WavefrontModel::Swm, &l, &t, LAMBDA, unit()).unwrap();
        assert_eq!(rep.closed_form.crb_r, f64::INFINITY);
        assert_eq!(rep.generic_analytic.crb_r, f64::INFINITY);
        assert_eq!(rep.rel_err_analytic, 0.0);
    }

    #[test]
    fn pwm_validates_on_angle() {
        let l = fig3();
        let t = TargetPolar::new(30.0, PI / 3.0).unwrap();
        let rep = cross_validate(WavefrontModel::Pwm, &l, &t, LAMBDA, unit()).unwrap();
        assert!(rep.rel_err_analytic <= 1e-9);
        assert_eq!(rep.generic_analytic.crb_r, f64::INFINITY);
        let js = serde_json::to_value(&rep).unwrap();
        assert_eq!(js["closed_form"]["crb_r"], "inf");
        assert!(js.get("rel_err_fd").is_some());
    }
}
