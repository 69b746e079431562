//! Randomised agreement suite: closed forms against the generic bound, with
//! analytic and finite-difference derivatives.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crb::SensingSnr;
use crate::error::Result;
use crate::fim::{cross_validate, ValidationReport};
use crate::geometry::{ModularLayout, TargetPolar};
use crate::par::{self, Execution};
use crate::wavefront::WavefrontModel;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const ANALYTIC_TOLERANCE: f64 = 1e-9;
pub const FD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct VerifyCase {
    pub layout: ModularLayout,
    pub target: TargetPolar,
    pub wavelength: f64,
    pub snr: SensingSnr,
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..=hi.ln())).exp()
}

/// Random case in the band where the hybrid models apply: `K ∈ {1,3,5,7}`,
/// odd `M ≤ 125`, gaps in `[1, 200]`, `r` log-uniform between the subarray
/// far-field bound and the full-array Rayleigh distance, `|θ| < 80°`,
/// `γ` log-uniform in `[0.1, 100]`, 60 GHz carrier with half-wavelength pitch.
pub fn random_case(rng: &mut impl Rng) -> VerifyCase {
    let wavelength = SPEED_OF_LIGHT / 60e9;
    let d = wavelength / 2.0;
    let k = [1usize, 3, 5, 7][rng.gen_range(0..4)];
    let m = 2 * rng.gen_range(1..=62) + 1;
    let half = (k - 1) / 2;
    let spacings: Vec<u32> = (0..k)
        .map(|i| if i == half { 0 } else { rng.gen_range(1..=200) })
        .collect();
    let layout = ModularLayout::new(k, m, &spacings, d).expect("sampled layout is valid");
    let sub = (m - 1) as f64 * d;
    let lo = 2.0 * sub * sub / wavelength;
    let s = layout.aperture();
    let hi = (2.0 * s * s / wavelength).max(1.01 * lo);
    let r = log_uniform(rng, lo, hi);
    let theta = rng.gen_range(-80.0..80.0) * PI / 180.0;
    let gamma = log_uniform(rng, 0.1, 100.0);
    VerifyCase {
        layout,
        target: TargetPolar::new(r, theta).expect("sampled target is valid"),
        wavelength,
        snr: SensingSnr::new(gamma).expect("sampled SNR is valid"),
    }
}

pub fn random_cases(n: usize, seed: u64) -> Vec<VerifyCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_case(&mut rng)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelWorst {
    pub analytic: f64,
    pub fd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub cases: usize,
    pub evaluations: usize,
    pub seed: u64,
    #[serde(with = "crate::extended")]
    pub max_rel_err_analytic: f64,
    #[serde(with = "crate::extended")]
    pub max_rel_err_fd: f64,
    pub analytic_tolerance: f64,
    pub fd_tolerance: f64,
    pub analytic_failures: usize,
    pub fd_failures: usize,
    pub per_model: BTreeMap<WavefrontModel, ModelWorst>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.analytic_failures == 0 && self.fd_failures == 0
    }

    pub fn line(&self) -> String {
        format!(
            "verify: {} cases, {} evaluations, max rel err analytic {:.3e} (tol {:.0e}, {} over), fd {:.3e} (tol {:.0e}, {} over): {}",
            self.cases,
            self.evaluations,
            self.max_rel_err_analytic,
            self.analytic_tolerance,
            self.analytic_failures,
            self.max_rel_err_fd,
            self.fd_tolerance,
            self.fd_failures,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

pub fn validate_cases(cases: &[VerifyCase], exec: Execution) -> Result<Vec<ValidationReport>> {
    let per_case = par::map(exec, cases, |c| {
        WavefrontModel::ALL
            .iter()
            .map(|&m| cross_validate(m, &c.layout, &c.target, c.wavelength, c.snr))
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(cases.len() * 4);
    for reports in per_case {
        out.extend(reports?);
    }
    Ok(out)
}

pub fn summarize(reports: &[ValidationReport], cases: usize, seed: u64) -> VerifySummary {
    let mut per_model: BTreeMap<WavefrontModel, ModelWorst> = BTreeMap::new();
    let mut s = VerifySummary {
        cases,
        evaluations: reports.len(),
        seed,
        max_rel_err_analytic: 0.0,
        max_rel_err_fd: 0.0,
        analytic_tolerance: ANALYTIC_TOLERANCE,
        fd_tolerance: FD_TOLERANCE,
        analytic_failures: 0,
        fd_failures: 0,
        per_model: BTreeMap::new(),
    };
    for r in reports {
        let w = per_model.entry(r.model).or_default();
        w.analytic = w.analytic.max(r.rel_err_analytic);
        w.fd = w.fd.max(r.rel_err_fd);
        s.max_rel_err_analytic = s.max_rel_err_analytic.max(r.rel_err_analytic);
        s.max_rel_err_fd = s.max_rel_err_fd.max(r.rel_err_fd);
        // NaN-safe: anything not provably within tolerance counts as a failure.
        if !(r.rel_err_analytic <= ANALYTIC_TOLERANCE) {
            s.analytic_failures += 1;
        }
        if !(r.rel_err_fd <= FD_TOLERANCE) {
            s.fd_failures += 1;
        }
    }
    s.per_model = per_model;
    s
}

pub fn run_verify(n: usize, seed: u64, exec: Execution) -> Result<(Vec<ValidationReport>, VerifySummary)> {
    let cases = random_cases(n, seed);
    let reports = validate_cases(&cases, exec)?;
    let summary = summarize(&reports, n, seed);
    Ok((reports, summary))
}
