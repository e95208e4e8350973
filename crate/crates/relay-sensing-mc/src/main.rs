//! Command-line front end for the Monte Carlo studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relay_sensing::signal_model::noise_for_snr_db;
use relay_sensing::SystemConfig;
use relay_sensing_mc::{
    output, run_pd_vs_frame_length, run_qq_sweep, run_roc, Detector, McError, Scenario,
    ThresholdSweep,
};

#[derive(Parser)]
#[command(
    name = "relay-sensing-mc",
    about = "Monte Carlo ROC, detection-vs-frame-length, and normality studies \
             for relay spectrum-sensing detectors",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML system configuration (keys mirror the config fields).
    #[arg(long)]
    config: PathBuf,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    /// Master seed; identical seeds reproduce results byte for byte.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Recalibrate the noise variances to this receive SNR in dB, keeping
    /// the config's relay/receiver split. Omit to use the config as-is
    /// (the bundled configs are calibrated to 0 dB).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Output table path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Detection vs false-alarm curve for one detector.
    Roc {
        #[command(flatten)]
        common: CommonArgs,
        /// Detector: csi_theory, csi_empirical, pcsi_laguerre,
        /// pcsi_empirical, ppcsi_gaussian, or ppcsi_laplace.
        #[arg(long)]
        detector: String,
        /// Series expansion order for pcsi_laguerre.
        #[arg(long, default_value_t = 100)]
        laguerre_order: usize,
        /// Points in the automatic threshold sweep.
        #[arg(long, default_value_t = 41)]
        sweep_points: usize,
        /// Explicit threshold sweep (comma separated, ascending); overrides
        /// the automatic sweep.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        /// Target false-alarm rates to calibrate thresholds for (comma
        /// separated, ascending); overrides the automatic sweep.
        #[arg(long, value_delimiter = ',')]
        target_pf: Option<Vec<f64>>,
    },
    /// Detection probability vs frame length at a fixed false-alarm rate.
    PdVsL {
        #[command(flatten)]
        common: CommonArgs,
        /// Antenna counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        n_list: Vec<usize>,
        /// Frame lengths to sweep.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,8,10")]
        l_list: Vec<usize>,
        /// False-alarm rate the thresholds are calibrated to.
        #[arg(long, default_value_t = 0.1)]
        target_pf: f64,
    },
    /// Quantile-quantile normality sweep over relay counts.
    Qq {
        #[command(flatten)]
        common: CommonArgs,
        /// Relay counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        m_list: Vec<usize>,
        /// Active frames sampled per relay count (the trial budget).
        #[arg(long, default_value_t = 2000)]
        frames: usize,
    },
}

fn load_config(common: &CommonArgs) -> Result<SystemConfig, McError> {
    let mut cfg = SystemConfig::from_toml_path(&common.config)?;
    if let Some(snr) = common.snr_db {
        let fraction = cfg.sigma2_v / (cfg.sigma2_v + cfg.sigma2_w / cfg.n_relays as f64);
        let (s2v, s2w) = noise_for_snr_db(snr, cfg.n_relays, fraction)?;
        cfg.sigma2_v = s2v;
        cfg.sigma2_w = s2w;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), McError> {
    match cli.command {
        Command::Roc {
            common,
            detector,
            laguerre_order,
            sweep_points,
            gammas,
            target_pf,
        } => {
            let cfg = load_config(&common)?;
            let mut scenario =
                Scenario::new(Detector::parse(&detector)?, cfg, common.trials, common.seed);
            scenario.laguerre_order = laguerre_order;
            scenario.threshold_sweep = match (gammas, target_pf) {
                (Some(_), Some(_)) => {
                    return Err(McError::Scenario(
                        "--gammas and --target-pf are mutually exclusive".into(),
                    ))
                }
                (Some(g), None) => ThresholdSweep::Gammas(g),
                (None, Some(p)) => ThresholdSweep::TargetPf(p),
                (None, None) => ThresholdSweep::Auto {
                    points: sweep_points,
                },
            };
            let result = run_roc(&scenario)?;
            output::write_results(&result, &common.out)?;
            eprintln!(
                "wrote {} rows ({}) to {}",
                result.rows.len(),
                result.detector,
                common.out.display()
            );
        }
        Command::PdVsL {
            common,
            n_list,
            l_list,
            target_pf,
        } => {
            let cfg = load_config(&common)?;
            let result = run_pd_vs_frame_length(
                &cfg,
                &n_list,
                &l_list,
                target_pf,
                common.trials,
                common.seed,
            )?;
            output::write_pd_vs_l(&result, &common.out)?;
            eprintln!(
                "wrote {} rows to {}",
                result.rows.len(),
                common.out.display()
            );
        }
        Command::Qq {
            common,
            m_list,
            frames,
        } => {
            let cfg = load_config(&common)?;
            let result = run_qq_sweep(&cfg, &m_list, frames, common.seed)?;
            let written = output::write_qq(&result, &common.out)?;
            for report in &result.reports {
                eprintln!(
                    "M={}: KS distance {:.4} (5% critical {:.4}, n={})",
                    report.n_relays,
                    report.report.ks_distance,
                    report.report.ks_critical_5pct(),
                    report.report.n_samples
                );
            }
            eprintln!(
                "wrote {}",
                written
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
