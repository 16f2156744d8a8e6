//! Campaign file emission: the CSV set, the run manifest, and sweep
//! comparison tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};

use ramimo_core::channel::synthesize_channels;
use ramimo_core::montecarlo::{
    drop_rng, write_cdf_csv, write_percentiles_csv, write_repeater_csv, write_samples_csv,
    CampaignResult, PERCENTILE_LEVELS,
};
use ramimo_core::scenario::{build_deployment, Mode, ScenarioConfig};

use crate::chart::Series;

pub struct EmitOptions {
    pub dump_channels: bool,
    pub dump_repeaters: bool,
}

/// Write the standard file set for one campaign into `dir`:
/// `samples.csv`, `cdf.csv`, `percentiles.csv`, `manifest.toml`, plus the
/// optional debug dumps. Returns the emitted file names.
pub fn emit_campaign(
    dir: &Path,
    result: &CampaignResult,
    duration: Duration,
    opts: &EmitOptions,
) -> Result<Vec<String>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();

    let write = |name: &str, body: Vec<u8>, files: &mut Vec<String>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        files.push(name.to_string());
        Ok(())
    };

    let mut buf = Vec::new();
    write_samples_csv(&mut buf, result)?;
    write("samples.csv", buf, &mut files)?;

    let mut buf = Vec::new();
    write_cdf_csv(&mut buf, result)?;
    write("cdf.csv", buf, &mut files)?;

    let mut buf = Vec::new();
    write_percentiles_csv(&mut buf, result)?;
    write("percentiles.csv", buf, &mut files)?;

    if opts.dump_channels {
        let cfg = &result.config;
        let mut rng = drop_rng(cfg.seed, 0);
        let dep = build_deployment(cfg, &mut rng);
        let real = synthesize_channels(&dep, cfg, &mut rng);
        let mut buf = Vec::new();
        real.write_csv(&mut buf)?;
        write("channels.csv", buf, &mut files)?;
    }

    if opts.dump_repeaters {
        if result.config.mode == Mode::Ramimo {
            let mut buf = Vec::new();
            write_repeater_csv(&mut buf, result)?;
            write("repeaters.csv", buf, &mut files)?;
        } else {
            eprintln!(
                "note: --dump-repeaters ignored for mode {} (no repeater pipeline)",
                result.config.mode
            );
        }
    }

    write_manifest(&dir.join("manifest.toml"), &result.config, &files, duration)?;
    files.push("manifest.toml".to_string());
    Ok(files)
}

/// Manifest: `[run]` metadata plus the full `[config]` table. Feeding the
/// manifest back through `--config` reproduces the run byte-for-byte.
fn write_manifest(
    path: &Path,
    cfg: &ScenarioConfig,
    files: &[String],
    duration: Duration,
) -> Result<()> {
    let mut run = toml::Table::new();
    run.insert(
        "version".into(),
        toml::Value::String(env!("CARGO_PKG_VERSION").into()),
    );
    run.insert("seed".into(), toml::Value::Integer(cfg.seed as i64));
    run.insert("mode".into(), toml::Value::String(cfg.mode.label().into()));
    run.insert(
        "duration_s".into(),
        toml::Value::Float(duration.as_secs_f64()),
    );
    run.insert(
        "files".into(),
        toml::Value::Array(
            files
                .iter()
                .map(|f| toml::Value::String(f.clone()))
                .collect(),
        ),
    );

    let mut root = toml::Table::new();
    root.insert("run".into(), toml::Value::Table(run));
    root.insert(
        "config".into(),
        toml::Value::try_from(cfg).context("serializing config")?,
    );

    fs::write(path, toml::to_string(&root)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// CDF curve of a campaign as a chart series.
pub fn cdf_series(label: &str, result: &CampaignResult) -> Series {
    let n = result.pooled_sinr_db.len() as f64;
    Series {
        label: label.to_string(),
        points: result
            .pooled_sinr_db
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, (i + 1) as f64 / n))
            .collect(),
    }
}

/// Wide percentile comparison across sweep points:
/// `percentile,<label0>,<label1>,...`.
pub fn write_comparison_csv(
    path: &Path,
    labeled: &[(String, &CampaignResult)],
) -> Result<()> {
    let mut out = String::from("percentile");
    for (label, _) in labeled {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for &level in &PERCENTILE_LEVELS {
        out.push_str(&format!("{level}"));
        for (_, r) in labeled {
            out.push_str(&format!(",{:.6}", r.percentile(level)));
        }
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `<out>/<param>-<value>` with a compact value rendering (25 not 25.0).
pub fn sweep_dir(out: &Path, param: &str, value: f64) -> PathBuf {
    out.join(format!("{param}-{value}"))
}

/// Compact value label used in directory names and chart legends.
pub fn value_label(param: &str, value: f64) -> String {
    format!("{param}={value} dB")
}
