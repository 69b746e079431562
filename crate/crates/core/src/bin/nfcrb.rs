use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nearfield_crb::config::{preset_names, ExperimentConfig, ModelList};
use nearfield_crb::extended;
use nearfield_crb::geometry::field_regions;
use nearfield_crb::output::{emit_outputs, to_csv_string, OutputPaths};
use nearfield_crb::sweep::{run_layout_sweep, run_point, run_range_sweep, SweepRecord};
use nearfield_crb::verify::run_verify;
use nearfield_crb::{CrbError, Execution, Result};

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser)]
#[command(name = "nfcrb", version, about = "Near-field CRB toolkit for modular linear arrays")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bounds for every requested model at one target.
    Crb {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Exit with status 3 if any bound is degenerate.
        #[arg(long)]
        strict: bool,
    },
    /// Sweep the target range at fixed angle.
    SweepRange {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        r_min: Option<f64>,
        #[arg(long)]
        r_max: Option<f64>,
        #[arg(long)]
        r_points: Option<usize>,
        /// Evaluate points one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Sweep the inner gap Γ of a five-subarray layout with fixed ends.
    SweepLayout {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        gamma_total: Option<u32>,
        #[arg(long)]
        gamma_min: Option<u32>,
        #[arg(long)]
        gamma_max: Option<u32>,
        #[arg(long)]
        sequential: bool,
    },
    /// Check closed forms against the generic bound on random cases.
    Verify {
        #[arg(long, default_value_t = 500)]
        cases: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Write every validation report to this JSON file.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Field-region boundaries of a layout.
    Regions {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment: fig3, fig4-c1, fig4-c2.
    #[arg(long)]
    preset: Option<String>,
    /// Number of subarrays (odd).
    #[arg(long = "K")]
    k: Option<usize>,
    /// Elements per subarray (odd).
    #[arg(long = "M")]
    m: Option<usize>,
    /// Gap multiples, comma separated, centre entry 0.
    #[arg(long, value_delimiter = ',')]
    spacings: Option<Vec<u32>>,
    #[arg(long)]
    freq_ghz: Option<f64>,
    /// Element pitch in metres (default half a wavelength).
    #[arg(long)]
    pitch_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Target range in metres.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_deg: Option<f64>,
    /// `all` or a comma-separated list of SWM, HSPM_DIST, HSPM_SHARED, PWM.
    #[arg(long)]
    models: Option<String>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON output path.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Plot script output path (needs --out).
    #[arg(long)]
    plot: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut cfg = if let Some(path) = &self.config {
            ExperimentConfig::load(path)?
        } else if let Some(name) = &self.preset {
            ExperimentConfig::preset(name)?
        } else {
            let (k, m) = self.k.zip(self.m).ok_or_else(|| {
                CrbError::InvalidConfiguration(format!(
                    "give --config, --preset ({}) or at least --K and --M",
                    preset_names().join(", ")
                ))
            })?;
            ExperimentConfig::new(k, m, Vec::new())
        };
        if self.config.is_none() && self.preset.is_none() {
            cfg.spacings = None;
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
        if self.spacings.is_some() {
            cfg.spacings = self.spacings;
        }
        if let Some(f) = self.freq_ghz {
            cfg.freq_ghz = f;
        }
        if self.pitch_m.is_some() {
            cfg.pitch_m = self.pitch_m;
        }
        if let Some(s) = self.snr_db {
            cfg.snr_db = s;
        }
        if self.r.is_some() {
            cfg.r = self.r;
        }
        if let Some(t) = self.theta_deg {
            cfg.theta_deg = t;
        }
        if let Some(m) = &self.models {
            cfg.models = m.parse::<ModelList>()?;
        }
        cfg.out = self.out.or(cfg.out);
        cfg.json = self.json.or(cfg.json);
        cfg.plot = self.plot.or(cfg.plot);
        cfg.check()?;
        Ok(cfg)
    }
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Auto
    }
}

fn paths(cfg: &ExperimentConfig) -> OutputPaths {
    OutputPaths {
        csv: cfg.out.clone(),
        json: cfg.json.clone(),
        plot: cfg.plot.clone(),
    }
}

fn print_table(records: &[SweepRecord]) {
    println!("{:<12} {:>24} {:>24}  flags", "model", "crb_r_m2", "crb_theta_rad2");
    for r in records {
        println!(
            "{:<12} {:>24} {:>24}  {}",
            r.model.name(),
            extended::format(r.crb_r),
            extended::format(r.crb_theta),
            r.flags
        );
    }
}

/// Writes the requested files, or the CSV to stdout when no CSV path is set.
fn deliver(records: &[SweepRecord], cfg: &ExperimentConfig) -> Result<()> {
    let p = paths(cfg);
    if p.csv.is_none() {
        print!("{}", to_csv_string(records)?);
    }
    emit_outputs(records, &p)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Crb { cfg, strict } => {
            let cfg = cfg.resolve()?;
            let records = run_point(&cfg)?;
            print_table(&records);
            let p = paths(&cfg);
            if p != OutputPaths::default() {
                emit_outputs(&records, &p)?;
            }
            if strict && records.iter().any(|r| r.flags.degenerate) {
                eprintln!("degenerate Fisher information for at least one model");
                return Ok(EXIT_DEGENERATE);
            }
        }
        Cmd::SweepRange {
            cfg,
            r_min,
            r_max,
            r_points,
            sequential,
        } => {
            let mut cfg = cfg.resolve()?;
            cfg.r_min = r_min.or(cfg.r_min);
            cfg.r_max = r_max.or(cfg.r_max);
            cfg.r_points = r_points.or(cfg.r_points);
            cfg.check()?;
            deliver(&run_range_sweep(&cfg, exec(sequential))?, &cfg)?;
        }
        Cmd::SweepLayout {
            cfg,
            gamma_total,
            gamma_min,
            gamma_max,
            sequential,
        } => {
            let mut cfg = cfg.resolve()?;
            cfg.gamma_total = gamma_total.or(cfg.gamma_total);
            cfg.gamma_min = gamma_min.or(cfg.gamma_min);
            cfg.gamma_max = gamma_max.or(cfg.gamma_max);
            deliver(&run_layout_sweep(&cfg, exec(sequential))?, &cfg)?;
        }
        Cmd::Verify {
            cases,
            seed,
            json,
            sequential,
        } => {
            if cases == 0 {
                return Err(CrbError::InvalidConfiguration("--cases must be positive".into()));
            }
            let (reports, summary) = run_verify(cases, seed, exec(sequential))?;
            for (model, w) in &summary.per_model {
                println!("  {:<12} analytic {:.3e}  fd {:.3e}", model.name(), w.analytic, w.fd);
            }
            println!("{}", summary.line());
            if let Some(path) = json {
                let doc = serde_json::json!({ "summary": summary, "reports": reports });
                std::fs::write(&path, serde_json::to_string_pretty(&doc).expect("reports serialize"))
                    .map_err(|source| CrbError::Io { path, source })?;
            }
            if !summary.passed() {
                return Ok(EXIT_FAILED);
            }
        }
        Cmd::Regions { cfg } => {
            let cfg = cfg.resolve()?;
            let layout = cfg.layout()?;
            let fr = field_regions(&layout, cfg.wavelength())?;
            println!("aperture_m                {}", layout.aperture());
            println!("wavelength_m              {}", cfg.wavelength());
            println!("subarray_farfield_bound_m {:.4}", fr.subarray_farfield_bound);
            println!("array_rayleigh_m          {:.4}", fr.array_rayleigh);
            if let Some(r) = cfg.r {
                println!("region_at_r               {:?}", fr.classify(r));
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_FAILED })
        }
    }
}
