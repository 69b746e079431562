//! Sweep engines over range and over the subarray gap pattern.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::crb::{crb_closed, CrbFlags};
use crate::error::Result;
use crate::geometry::TargetPolar;
use crate::par::{self, Execution};
use crate::wavefront::WavefrontModel;

pub const RANGE_VAR: &str = "r_m";
pub const GAMMA_VAR: &str = "gamma";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep_var: String,
    pub sweep_value: f64,
    pub model: WavefrontModel,
    #[serde(rename = "crb_r_m2", with = "crate::extended")]
    pub crb_r: f64,
    #[serde(rename = "crb_theta_rad2", with = "crate::extended")]
    pub crb_theta: f64,
    pub flags: CrbFlags,
}

fn evaluate(
    cfg: &ExperimentConfig,
    layout: &crate::geometry::ModularLayout,
    target: &TargetPolar,
    var: &str,
    value: f64,
) -> Result<Vec<SweepRecord>> {
    let snr = cfg.snr()?;
    let lambda = cfg.wavelength();
    cfg.models
        .models()
        .iter()
        .map(|&model| {
            let c = crb_closed(model, layout, target, lambda, snr)?;
            Ok(SweepRecord {
                sweep_var: var.to_string(),
                sweep_value: value,
                model,
                crb_r: c.crb_r,
                crb_theta: c.crb_theta,
                flags: c.flags,
            })
        })
        .collect()
}

/// One record per requested model at the configured target.
pub fn run_point(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let layout = cfg.layout()?;
    let target = cfg.target()?;
    evaluate(cfg, &layout, &target, RANGE_VAR, target.r)
}

fn flatten(chunks: Vec<Result<Vec<SweepRecord>>>) -> Result<Vec<SweepRecord>> {
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// Records for every (range, model) at the configured angle, in grid order.
pub fn run_range_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<SweepRecord>> {
    let layout = cfg.layout()?;
    let grid = cfg.range_grid()?;
    cfg.snr()?;
    let chunks = par::map(exec, &grid, |&r| {
        let target = TargetPolar::from_degrees(r, cfg.theta_deg)?;
        evaluate(cfg, &layout, &target, RANGE_VAR, r)
    });
    flatten(chunks)
}

/// Records for every (Γ, model) at the configured target, in Γ order.
pub fn run_layout_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<SweepRecord>> {
    let gammas = cfg.gamma_grid()?;
    let layouts = gammas
        .iter()
        .map(|&g| cfg.layout_for_gamma(g))
        .collect::<Result<Vec<_>>>()?;
    let target = cfg.target()?;
    let items: Vec<_> = gammas.iter().zip(&layouts).collect();
    let chunks = par::map(exec, &items, |(g, layout)| {
        evaluate(cfg, layout, &target, GAMMA_VAR, **g as f64)
    });
    flatten(chunks)
}

/// Records of one model, in sweep order.
pub fn select(records: &[SweepRecord], model: WavefrontModel) -> Vec<&SweepRecord> {
    records.iter().filter(|r| r.model == model).collect()
}
