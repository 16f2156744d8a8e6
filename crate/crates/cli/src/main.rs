//! `ramimo`: uplink RA-MIMO Monte Carlo campaigns and repeater hardware
//! budget calculators.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage/config error.

mod chart;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ramimo_core::hwbudget::{
    butterworth_group_delay_s, cascade_nf_db, delay_budget_check, iq_evm_fraction,
    max_stable_gain_db, pa_output_power_dbm, ris_equivalent_cells, EvmCombining, RepeaterBudget,
    DEFAULT_CYCLIC_PREFIX_S,
};
use ramimo_core::montecarlo::{run_campaign, sweep, CampaignResult, SweepParam};
use ramimo_core::scenario::{Mode, ScenarioConfig};
use ramimo_core::Error as CoreError;

use chart::render_cdf_svg;
use output::{cdf_series, emit_campaign, sweep_dir, value_label, write_comparison_csv, EmitOptions};

#[derive(Parser)]
#[command(
    name = "ramimo",
    version,
    about = "Uplink multi-user MIMO simulator with amplify-and-forward repeaters",
    after_help = "Worker count is capped by the RAMIMO_THREADS environment variable."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one campaign per requested mode and write CSV/SVG artifacts.
    Simulate(SimulateArgs),
    /// Run paired campaigns over a repeater parameter (cap, tau, nf-rep).
    Sweep(SweepArgs),
    /// Repeater hardware budget calculators.
    Hwcalc(HwcalcArgs),
}

/// Config file plus flag overrides (flags win).
#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML config file, or a manifest.toml from a previous run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Monte Carlo drops.
    #[arg(long)]
    drops: Option<usize>,
    /// Base RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of user terminals.
    #[arg(long)]
    users: Option<usize>,
    /// Number of repeater/AP sites (perfect square).
    #[arg(long)]
    sites: Option<usize>,
    /// BS array elements.
    #[arg(long)]
    antennas: Option<usize>,
    /// Simulation square side, meters.
    #[arg(long)]
    area: Option<f64>,
    /// Target BS-noise to repeated-noise ratio, dB (inf allowed).
    #[arg(long)]
    tau: Option<f64>,
    /// Repeater amplification cap, dB.
    #[arg(long)]
    cap: Option<f64>,
    /// Repeater noise figure, dB.
    #[arg(long = "nf-rep")]
    nf_rep: Option<f64>,
    /// Base station noise figure, dB.
    #[arg(long = "nf-bs")]
    nf_bs: Option<f64>,
    /// Activation margin above the repeater noise floor, dB (inf allowed).
    #[arg(long = "activation-margin")]
    activation_margin: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CoreError::Validation {
                        field: "config",
                        reason: format!("cannot read config file {}: {e}", path.display()),
                    }
                })?;
                ScenarioConfig::from_toml_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(v) = self.drops {
            cfg.num_drops = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.users {
            cfg.num_users = v;
        }
        if let Some(v) = self.sites {
            cfg.num_sites = v;
        }
        if let Some(v) = self.antennas {
            cfg.num_bs_antennas = v;
        }
        if let Some(v) = self.area {
            cfg.area_side_m = v;
        }
        if let Some(v) = self.tau {
            cfg.tau_db = v;
        }
        if let Some(v) = self.cap {
            cfg.gain_cap_db = v;
        }
        if let Some(v) = self.nf_rep {
            cfg.rep_nf_db = v;
        }
        if let Some(v) = self.nf_bs {
            cfg.bs_nf_db = v;
        }
        if let Some(v) = self.activation_margin {
            cfg.activation_snr_margin_db = v;
        }
        Ok(cfg.validated()?)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Mode or comma-separated modes: cmimo, dmimo, ramimo.
    /// Multiple modes write per-mode subdirectories and one overlay SVG.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write a CDF chart (cdf.svg).
    #[arg(long)]
    svg: bool,
    /// Dump drop 0's channel coefficients (channels.csv).
    #[arg(long)]
    dump_channels: bool,
    /// Dump per-drop repeater diagnostics (repeaters.csv, RA-MIMO only).
    #[arg(long)]
    dump_repeaters: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Swept parameter: cap, tau or nf-rep.
    #[arg(long)]
    param: String,
    /// Comma-separated values in dB.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct HwcalcArgs {
    #[command(subcommand)]
    calc: HwCalc,
}

#[derive(Subcommand)]
enum HwCalc {
    /// PA output power for a target ACLR: CP - ACLR/2 + 12.
    PaOut {
        /// Output-referred 1-dB compression point, dBm.
        #[arg(long)]
        cp: f64,
        /// Target adjacent-channel leakage ratio, dB.
        #[arg(long)]
        aclr: f64,
        #[arg(long)]
        csv: bool,
    },
    /// Cascaded noise figure: passive losses ahead of the LNA add in dB.
    Nf {
        /// Passive losses in dB, comma separated (filter, switch, ...).
        #[arg(long, value_delimiter = ',')]
        losses: Vec<f64>,
        /// LNA noise figure, dB.
        #[arg(long)]
        lna: f64,
        #[arg(long)]
        csv: bool,
    },
    /// EVM from I/Q gain and phase mismatch.
    Evm {
        /// Gain error as a fraction (e.g. 0.01 for 1%).
        #[arg(long)]
        gain_err: f64,
        /// Phase error, degrees.
        #[arg(long)]
        phase_err: f64,
        /// Conversion stages sharing the same errors.
        #[arg(long, default_value_t = 2)]
        stages: u32,
        /// Combine stages root-sum-square instead of coherently.
        #[arg(long)]
        rss: bool,
        #[arg(long)]
        csv: bool,
    },
    /// Lowpass Butterworth group delay.
    Delay {
        #[arg(long)]
        order: usize,
        /// 3-dB bandwidth, Hz.
        #[arg(long)]
        bandwidth: f64,
        /// Evaluation frequency, Hz (default DC).
        #[arg(long, default_value_t = 0.0)]
        freq: f64,
        #[arg(long)]
        csv: bool,
    },
    /// Stability-limited repeater gain: isolation minus margin.
    MaxGain {
        /// PA-to-LNA isolation, dB.
        #[arg(long)]
        isolation: f64,
        /// Self-oscillation margin, dB.
        #[arg(long)]
        margin: f64,
        #[arg(long)]
        csv: bool,
    },
    /// RIS unit cells equivalent to a repeater of the given gain.
    RisCells {
        /// Repeater power gain, dB.
        #[arg(long)]
        gain: f64,
        #[arg(long)]
        csv: bool,
    },
    /// Check summed component delays against the cyclic prefix.
    DelayBudget {
        /// Component delays in seconds, comma separated.
        #[arg(long, value_delimiter = ',')]
        delays: Vec<f64>,
        /// Cyclic prefix duration, seconds.
        #[arg(long, default_value_t = DEFAULT_CYCLIC_PREFIX_S)]
        cp_duration: f64,
        #[arg(long)]
        csv: bool,
    },
    /// Full budget report for a default repeater, with overrides.
    Report {
        #[arg(long, default_value_t = 2.0)]
        filter_loss: f64,
        #[arg(long, default_value_t = 0.3)]
        switch_loss: f64,
        #[arg(long, default_value_t = 3.0)]
        lna_nf: f64,
        #[arg(long, default_value_t = 28.0)]
        cp: f64,
        #[arg(long, default_value_t = 40.0)]
        aclr: f64,
        #[arg(long, default_value_t = 50.0)]
        isolation: f64,
        #[arg(long, default_value_t = 10.0)]
        margin: f64,
        #[arg(long)]
        csv: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// 1 for numerical failures, 2 for usage/config/IO problems.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::Numerical(_) | CoreError::Drop { .. } => 1,
                _ => 2,
            };
        }
    }
    2
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Hwcalc(args) => cmd_hwcalc(args.calc),
    }
}

fn parse_modes(arg: &Option<String>, fallback: Mode) -> Result<Vec<Mode>> {
    let Some(text) = arg else {
        return Ok(vec![fallback]);
    };
    let mut modes = Vec::new();
    for part in text.split(',') {
        let mode = Mode::from_str(part.trim())?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        bail!(CoreError::validation("mode", "empty mode list"));
    }
    Ok(modes)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let base = args.config.resolve()?;
    let modes = parse_modes(&args.mode, base.mode)?;
    let multi = modes.len() > 1;
    let opts = EmitOptions {
        dump_channels: args.dump_channels,
        dump_repeaters: args.dump_repeaters,
    };

    let mut series = Vec::new();
    for mode in &modes {
        let cfg = ScenarioConfig { mode: *mode, ..base.clone() }.validated()?;
        let started = Instant::now();
        let result = run_campaign(&cfg)?;
        let duration = started.elapsed();
        let dir = if multi {
            args.out.join(mode.label())
        } else {
            args.out.clone()
        };
        let files = emit_campaign(&dir, &result, duration, &opts)?;
        println!(
            "{mode}: {} drops x {} users in {:.2}s -> {} ({})",
            cfg.num_drops,
            cfg.num_users,
            duration.as_secs_f64(),
            dir.display(),
            files.join(", ")
        );
        print_percentiles(&result);
        series.push(cdf_series(mode.label(), &result));
    }

    if args.svg {
        let path = args.out.join("cdf.svg");
        std::fs::write(&path, render_cdf_svg(&series, "Post-MMSE SINR CDF"))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("chart: {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let base = args.config.resolve()?;
    let param = SweepParam::from_str(&args.param)?;
    if args.values.is_empty() {
        bail!(CoreError::validation("values", "needs at least one value"));
    }

    let started = Instant::now();
    let results = sweep(&base, param, &args.values)?;
    let per_value = started.elapsed() / results.len() as u32;

    let mut labeled: Vec<(String, &CampaignResult)> = Vec::new();
    let mut series = Vec::new();
    for (value, result) in args.values.iter().zip(&results) {
        let dir = sweep_dir(&args.out, param.label(), *value);
        let opts = EmitOptions { dump_channels: false, dump_repeaters: false };
        emit_campaign(&dir, result, per_value, &opts)?;
        let label = value_label(param.label(), *value);
        println!("{label}: p10 = {:+.2} dB -> {}", result.percentile(10.0), dir.display());
        series.push(cdf_series(&label, result));
        labeled.push((label, result));
    }

    write_comparison_csv(&args.out.join("comparison.csv"), &labeled)?;
    let overlay = args.out.join("overlay.svg");
    std::fs::write(
        &overlay,
        render_cdf_svg(&series, &format!("SINR CDF over {} sweep", param.label())),
    )
    .with_context(|| format!("writing {}", overlay.display()))?;
    println!(
        "sweep artifacts: {} and {}",
        args.out.join("comparison.csv").display(),
        overlay.display()
    );
    Ok(())
}

fn print_percentiles(result: &CampaignResult) {
    let cells: Vec<String> = result
        .percentiles
        .iter()
        .map(|(level, v)| format!("p{level:.0}={v:+.2}"))
        .collect();
    println!("  SINR dB: {}", cells.join("  "));
}

/// Print one labeled value, or a machine-readable `name,value,unit` row.
fn emit_value(csv: bool, name: &str, value: f64, unit: &str) {
    if csv {
        println!("{name},{value:.6},{unit}");
    } else {
        println!("{name}: {value:.3} {unit}");
    }
}

fn cmd_hwcalc(calc: HwCalc) -> Result<()> {
    match calc {
        HwCalc::PaOut { cp, aclr, csv } => {
            if aclr < 0.0 {
                bail!(CoreError::validation("aclr", "must be >= 0 dB"));
            }
            emit_value(csv, "pa_output_power", pa_output_power_dbm(cp, aclr), "dBm");
        }
        HwCalc::Nf { losses, lna, csv } => {
            if losses.iter().chain([&lna]).any(|v| *v < 0.0) {
                bail!(CoreError::validation("losses", "losses and LNA NF must be >= 0 dB"));
            }
            emit_value(csv, "cascade_nf", cascade_nf_db(&losses, lna), "dB");
        }
        HwCalc::Evm { gain_err, phase_err, stages, rss, csv } => {
            if !(0.0..0.2).contains(&gain_err) || !(0.0..12.0).contains(&phase_err) {
                bail!(CoreError::validation(
                    "gain_err/phase_err",
                    "small-error regime only (gain < 0.2, phase < 12 deg)"
                ));
            }
            let combining = if rss { EvmCombining::Rss } else { EvmCombining::Coherent };
            let evm = iq_evm_fraction(gain_err, phase_err, stages, combining);
            emit_value(csv, "iq_evm", evm * 100.0, "%");
        }
        HwCalc::Delay { order, bandwidth, freq, csv } => {
            if order == 0 {
                bail!(CoreError::validation("order", "must be >= 1"));
            }
            if bandwidth.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || freq < 0.0 || freq >= bandwidth {
                bail!(CoreError::validation(
                    "freq",
                    "needs bandwidth > 0 and 0 <= freq < bandwidth"
                ));
            }
            let delay = butterworth_group_delay_s(order, bandwidth, freq);
            emit_value(csv, "group_delay", delay * 1e9, "ns");
        }
        HwCalc::MaxGain { isolation, margin, csv } => {
            // precondition violation is a usage error, not a numerical one
            let gain = max_stable_gain_db(isolation, margin)
                .map_err(|e| CoreError::validation("margin", e.to_string()))?;
            emit_value(csv, "max_stable_gain", gain, "dB");
        }
        HwCalc::RisCells { gain, csv } => {
            if gain < 0.0 {
                bail!(CoreError::validation("gain", "must be >= 0 dB"));
            }
            let cells = ris_equivalent_cells(gain);
            if csv {
                println!("ris_cells,{cells},cells");
            } else {
                println!("ris_cells: {cells} cells");
            }
        }
        HwCalc::DelayBudget { delays, cp_duration, csv } => {
            if delays.iter().any(|d| *d < 0.0)
                || cp_duration.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            {
                bail!(CoreError::validation("delays", "delays >= 0 and cp_duration > 0"));
            }
            let verdict = delay_budget_check(&delays, cp_duration);
            if csv {
                println!("total_delay,{:.6},ns", verdict.total_delay_s * 1e9);
                println!("cp_ratio,{:.6},", verdict.ratio);
                println!("pass,{},", verdict.pass as u8);
            } else {
                println!(
                    "total delay {:.1} ns over CP {:.1} ns: ratio {:.4} -> {}",
                    verdict.total_delay_s * 1e9,
                    cp_duration * 1e9,
                    verdict.ratio,
                    if verdict.pass { "PASS" } else { "FAIL" }
                );
            }
        }
        HwCalc::Report { filter_loss, switch_loss, lna_nf, cp, aclr, isolation, margin, csv } => {
            let budget = RepeaterBudget {
                filter_loss_db: filter_loss,
                switch_loss_db: switch_loss,
                lna_nf_db: lna_nf,
                cp_dbm: cp,
                target_aclr_db: aclr,
                isolation_db: isolation,
                stability_margin_db: margin,
                ..Default::default()
            };
            let report = budget.report()?;
            if !csv {
                println!("repeater budget report");
            }
            emit_value(csv, "total_nf", report.total_nf_db, "dB");
            emit_value(csv, "pa_output_power", report.pa_output_dbm, "dBm");
            emit_value(csv, "iq_evm", report.evm_fraction * 100.0, "%");
            emit_value(csv, "filter_group_delay", report.filter_group_delay_s * 1e9, "ns");
            emit_value(csv, "max_stable_gain", report.max_stable_gain_db, "dB");
            if csv {
                println!("ris_cells_equivalent,{},cells", report.ris_cells_for_max_gain);
                println!("delay_budget_ratio,{:.6},", report.delay.ratio);
                println!("delay_budget_pass,{},", report.delay.pass as u8);
            } else {
                println!("ris_cells_equivalent: {} cells", report.ris_cells_for_max_gain);
                println!(
                    "delay budget: ratio {:.4} of the cyclic prefix -> {}",
                    report.delay.ratio,
                    if report.delay.pass { "PASS" } else { "FAIL" }
                );
            }
        }
    }
    Ok(())
}
