use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{ExperimentConfig, SweepRow};
use crate::{Error, Result};

pub const CSV_COLUMNS: [&str; 9] = [
    "figure",
    "series",
    "parameter",
    "batch",
    "analytic",
    "empirical_mean",
    "empirical_se",
    "replications",
    "notes",
];

/// Writes the provenance comment, the header and one record per row.
pub fn write_csv<W: Write>(rows: &[SweepRow], config: &ExperimentConfig, name: &str, mut out: W) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: PathBuf::from(name),
        source,
    };
    writeln!(
        out,
        "# {} {} | {} | seed={} | {}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        name,
        config.seed,
        config.describe()
    )
    .map_err(|e| csv_err(e.into()))?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for row in rows {
        writer
            .write_record([
                row.figure.to_string(),
                row.series.to_string(),
                row.parameter.to_string(),
                row.batch.to_string(),
                row.analytic.to_string(),
                row.empirical_mean.to_string(),
                row.empirical_se.to_string(),
                row.replications.to_string(),
                row.notes.clone(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| csv_err(e.into()))?;
    Ok(())
}

fn axis_labels(name: &str) -> (&'static str, &'static str) {
    match name {
        "sweep_loss" => ("packet loss probability p", "retransmission gain G_r"),
        "sweep_states" => ("packet loss probability p", "probability"),
        "sweep_overlap" => ("AP separation d_AP", "network retransmission gain G_N"),
        _ => ("parameter", "value"),
    }
}

/// Writes a matplotlib script that draws the analytic curve and the
/// empirical points (with two-standard-error bars) of every series.
pub fn write_plot_script<W: Write>(csv_file: &str, name: &str, mut out: W) -> std::io::Result<()> {
    let (xlabel, ylabel) = axis_labels(name);
    write!(
        out,
        r##"#!/usr/bin/env python3
"""Plot {name}. Usage: python3 {name}.py [output.png]"""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{csv_file}"), newline="") as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))

groups = {{}}
for row in rows:
    groups.setdefault((row["series"], row["batch"]), []).append(row)

fig, ax = plt.subplots(figsize=(6, 4))
for (series, batch), pts in sorted(groups.items()):
    pts.sort(key=lambda r: float(r["parameter"]))
    x = [float(r["parameter"]) for r in pts]
    label = "{{}} B={{}}".format(series, batch)
    ax.plot(x, [float(r["analytic"]) for r in pts], "-", label=label + " analytic")
    ax.errorbar(
        x,
        [float(r["empirical_mean"]) for r in pts],
        yerr=[2 * float(r["empirical_se"]) for r in pts],
        fmt="o",
        capsize=3,
        label=label + " simulation",
    )
ax.set_xlabel("{xlabel}")
ax.set_ylabel("{ylabel}")
ax.grid(True, alpha=0.3)
if groups:
    ax.legend(fontsize="small")
target = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "{name}.png")
fig.tight_layout()
fig.savefig(target, dpi=150)
"##
    )
}

/// CSV bytes exactly as [`emit_outputs`] would write them.
pub fn emit_outputs_bytes(rows: &[SweepRow], config: &ExperimentConfig, name: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(rows, config, name, &mut buf)?;
    Ok(buf)
}

/// Writes `<out>/<name>.csv` and `<out>/<name>.py`, returning both paths.
pub fn emit_outputs(rows: &[SweepRow], config: &ExperimentConfig, name: &str) -> Result<(PathBuf, PathBuf)> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
    let csv_path = config.out.join(format!("{name}.csv"));
    let script_path = config.out.join(format!("{name}.py"));

    let buf = emit_outputs_bytes(rows, config, name)?;
    fs::write(&csv_path, buf).map_err(io_err(&csv_path))?;

    let mut script = Vec::new();
    write_plot_script(&format!("{name}.csv"), name, &mut script).map_err(io_err(&script_path))?;
    fs::write(&script_path, script).map_err(io_err(&script_path))?;
    Ok((csv_path, script_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Mode;

    fn row() -> SweepRow {
        SweepRow {
            figure: "gain_vs_loss",
            series: "G_r",
            parameter: 0.2,
            batch: 1000,
            analytic: 1.4545454545454546,
            empirical_mean: 1.43,
            empirical_se: 0.01,
            replications: 100,
            notes: "a, b".into(),
        }
    }

    #[test]
    fn empty_table_has_header_only() {
        let cfg = ExperimentConfig::new(Mode::SweepLoss);
        let mut buf = Vec::new();
        write_csv(&[], &cfg, "sweep_loss", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("# coopretx "));
        assert!(lines[0].contains("seed=1"));
        assert_eq!(lines[1], CSV_COLUMNS.join(","));
    }

    #[test]
    fn rows_are_quoted_when_needed() {
        let cfg = ExperimentConfig::new(Mode::SweepLoss);
        let mut buf = Vec::new();
        write_csv(&[row()], &cfg, "sweep_loss", &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(2).unwrap(),
            "gain_vs_loss,G_r,0.2,1000,1.4545454545454546,1.43,0.01,100,\"a, b\""
        );
    }

    #[test]
    fn files_land_in_output_dir() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(Mode::SweepLoss);
        cfg.out = dir.path().join("nested");
        let (csv_path, script_path) = emit_outputs(&[row()], &cfg, "sweep_loss").unwrap();
        assert!(fs::read_to_string(csv_path).unwrap().contains("gain_vs_loss"));
        let script = fs::read_to_string(script_path).unwrap();
        assert!(script.contains("\"sweep_loss.csv\""));
        assert!(script.contains("retransmission gain G_r"));
    }

    #[test]
    fn unwritable_path_reports_location() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let mut cfg = ExperimentConfig::new(Mode::SweepLoss);
        cfg.out = blocker.join("sub");
        let err = emit_outputs(&[], &cfg, "sweep_loss").unwrap_err();
        assert!(err.to_string().contains("sub"));
    }
}
