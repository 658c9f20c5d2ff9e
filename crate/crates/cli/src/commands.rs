//! Subcommands. Each writes its CSV artifacts, then a manifest beside the
//! first one, and returns a short human-readable summary.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use memcell::analysis::{
    closest_pairs, count_distinct, enumerate_levels, histogram, level_gaps, sensitivity,
    topology_search, write_gaps_csv, write_histogram_csv, write_levels_csv, write_sensitivity_csv,
    LevelMode, Sampling, SearchOptions,
};
use memcell::cell::{
    build_netlist, install_schedule, make_schedule, run_cycle, CellConfig, WritePattern,
};
use memcell::circuit::{transient, TransientOptions};
use memcell::device;
use memcell::fmt::sig12;
use memcell::Exec;

use crate::config::parse_config_str;
use crate::manifest::{manifest_path, RunManifest};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "memcell",
    version,
    about = "Memristive multilevel memory cell simulator"
)]
pub struct Cli {
    /// Configuration file (`key = value` lines) or a run manifest (`.json`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run sweeps on the calling thread only.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingKind {
    Corners,
    MonteCarlo,
}

fn parse_mode(s: &str) -> Result<LevelMode, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Output voltage of every write pattern.
    Levels {
        /// `closed-form` (reference memristances) or `transient` (full cycles).
        #[arg(long, default_value = "closed-form", value_parser = parse_mode)]
        mode: LevelMode,
        #[arg(long, default_value = "levels.csv")]
        out: PathBuf,
        /// Also write gaps between adjacent distinct levels.
        #[arg(long)]
        gaps: Option<PathBuf>,
        /// Relative distinctness threshold; defaults per mode.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Histogram of relative gaps between adjacent distinct levels.
    Histogram {
        #[arg(long, default_value = "closed-form", value_parser = parse_mode)]
        mode: LevelMode,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Bin width in percent.
        #[arg(long, default_value_t = 20.0)]
        bin_width: f64,
        #[arg(long, default_value = "histogram.csv")]
        out: PathBuf,
    },
    /// Output error under perturbed write amplitudes.
    Sensitivity {
        /// Relative amplitude perturbation.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = SamplingKind::Corners)]
        sampling: SamplingKind,
        /// Monte-Carlo seed.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Monte-Carlo draws per pattern.
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value = "sensitivity.csv")]
        out: PathBuf,
    },
    /// Per-step trace of one reset/write/read cycle.
    Transient {
        /// Write pattern, one digit per sub-cell.
        #[arg(long)]
        pattern: String,
        #[arg(long, default_value = "trace.csv")]
        trace: PathBuf,
    },
    /// Search sub-cell wirings whose read response matches the closed form.
    TopologySearch {
        #[arg(long, default_value_t = 4)]
        resistors: usize,
        #[arg(long, default_value_t = 6)]
        max_internal: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long, default_value = "topology.csv")]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Levels { .. } => "levels",
            Command::Histogram { .. } => "histogram",
            Command::Sensitivity { .. } => "sensitivity",
            Command::Transient { .. } => "transient",
            Command::TopologySearch { .. } => "topology-search",
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<CellConfig, CliError> {
    let Some(path) = path else {
        return Ok(CellConfig::default());
    };
    let config_err = |source| CliError::Config {
        path: path.to_path_buf(),
        source,
    };
    if path.extension().is_some_and(|e| e == "json") {
        return RunManifest::read(path)?.config().map_err(config_err);
    }
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text).map_err(config_err)
}

fn write_artifact<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
{
    let mut buf = Vec::new();
    body(&mut buf).expect("writing to memory");
    fs::write(path, buf).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn epsilon_for(mode: LevelMode, epsilon: Option<f64>) -> Result<f64, CliError> {
    match epsilon {
        Some(e) if !(e >= 0.0 && e.is_finite()) => Err(CliError::Usage(format!(
            "--epsilon must be non-negative, got {e}"
        ))),
        Some(e) => Ok(e),
        None => Ok(mode.default_epsilon()),
    }
}

fn pct(v: f64) -> String {
    format!("{v:.3}%")
}

/// Completed command: the manifest path and a summary for stdout.
#[derive(Debug)]
pub struct Report {
    pub manifest: PathBuf,
    pub summary: String,
}

/// Runs a parsed command line. `args` is recorded in the manifest.
pub fn run(cli: Cli, args: Vec<String>) -> Result<Report, CliError> {
    let started = Instant::now();
    let config = load_config(cli.config.as_deref())?;
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let mut manifest = RunManifest::new(cli.command.name(), args, &config);
    let mut summary = Vec::new();

    match &cli.command {
        Command::Levels {
            mode,
            out,
            gaps,
            epsilon,
        } => {
            let eps = epsilon_for(*mode, *epsilon)?;
            let table = enumerate_levels(&config, *mode, exec)?;
            write_artifact(out, |w| write_levels_csv(w, &table))?;
            manifest.outputs.push(out.clone());
            if let Some(path) = gaps {
                let g = level_gaps(&table, eps);
                write_artifact(path, |w| write_gaps_csv(w, &g))?;
                manifest.outputs.push(path.clone());
            }
            summary.push(format!(
                "{} patterns, {} distinct levels (epsilon {eps:e}, {mode})",
                table.rows.len(),
                count_distinct(&table, eps)
            ));
            let closest: Vec<String> = closest_pairs(&table, 3, eps)
                .iter()
                .map(|g| format!("{}/{} {}", g.hi, g.lo, pct(g.rel_diff_percent)))
                .collect();
            if !closest.is_empty() {
                summary.push(format!("closest levels: {}", closest.join(", ")));
            }
        }
        Command::Histogram {
            mode,
            epsilon,
            bin_width,
            out,
        } => {
            if !(*bin_width > 0.0 && bin_width.is_finite()) {
                return Err(CliError::Usage(format!(
                    "--bin-width must be positive, got {bin_width}"
                )));
            }
            let eps = epsilon_for(*mode, *epsilon)?;
            let table = enumerate_levels(&config, *mode, exec)?;
            let gaps: Vec<f64> = level_gaps(&table, eps)
                .iter()
                .map(|g| g.rel_diff_percent)
                .collect();
            let bins = histogram(&gaps, *bin_width);
            write_artifact(out, |w| write_histogram_csv(w, &bins))?;
            manifest.outputs.push(out.clone());
            let below = gaps.iter().filter(|&&g| g < *bin_width).count();
            summary.push(format!(
                "{} gaps between distinct levels, {below} below {bin_width}%",
                gaps.len()
            ));
        }
        Command::Sensitivity {
            delta,
            sampling,
            seed,
            count,
            out,
        } => {
            let sampling = match sampling {
                SamplingKind::Corners => Sampling::Corners,
                SamplingKind::MonteCarlo => {
                    manifest.seed = Some(*seed);
                    Sampling::MonteCarlo {
                        count: *count,
                        seed: *seed,
                    }
                }
            };
            let report = sensitivity(&config, *delta, sampling, exec)?;
            write_artifact(out, |w| write_sensitivity_csv(w, &report))?;
            manifest.outputs.push(out.clone());
            summary.push(format!(
                "average relative error {} ± {} over {} patterns ({sampling}, delta {delta})",
                pct(report.average_mean),
                pct(report.average_std),
                report.rows.iter().filter(|r| !r.flagged).count()
            ));
            let flagged: Vec<String> = report
                .rows
                .iter()
                .filter(|r| r.flagged)
                .map(|r| r.pattern.to_string())
                .collect();
            if !flagged.is_empty() {
                summary.push(format!(
                    "zero nominal output, excluded: {}",
                    flagged.join(" ")
                ));
            }
        }
        Command::Transient { pattern, trace } => {
            let pattern = WritePattern::parse_for(pattern, &config)?;
            let mut net = build_netlist(&config)?;
            install_schedule(&mut net, &make_schedule(&pattern, &config)?);
            let init = device::state_for_resistance(config.initial_ohms, &config.device)?;
            let devices = vec![(init, config.device); config.n];
            let opts = TransientOptions {
                dt: config.dt,
                coupling: config.coupling,
            };
            let tr = transient(&net, &devices, config.t_total(), opts)?;
            write_artifact(trace, |w| tr.write_csv(w))?;
            manifest.outputs.push(trace.clone());
            let cycle = run_cycle(&config, &pattern)?;
            let ohms: Vec<String> = cycle
                .final_memristance(&config.device)
                .iter()
                .map(|&m| sig12(m))
                .collect();
            summary.push(format!(
                "pattern {pattern}: v_out = {} V, {} steps, final memristance [{}] ohm",
                sig12(cycle.v_out),
                tr.rows.len(),
                ohms.join(", ")
            ));
            summary.push(format!(
                "max KCL ratio {:e}, {} gate events",
                tr.summary.max_kcl_ratio, tr.summary.gate_events
            ));
        }
        Command::TopologySearch {
            resistors,
            max_internal,
            samples,
            seed,
            tolerance,
            out,
        } => {
            if *resistors == 0 || *samples == 0 {
                return Err(CliError::Usage(
                    "--resistors and --samples must be positive".into(),
                ));
            }
            manifest.seed = Some(*seed);
            let opts = SearchOptions {
                resistor_count: *resistors,
                max_internal: *max_internal,
                samples: *samples,
                seed: *seed,
                tolerance: *tolerance,
            };
            let report = topology_search(opts, exec);
            write_artifact(out, |w| {
                writeln!(w, "rank,max_rel_dev,limits_ok,wiring")?;
                for (i, c) in report.candidates.iter().enumerate() {
                    let limits = c.limits_ok.map(|b| b.to_string()).unwrap_or_default();
                    writeln!(
                        w,
                        "{},{},{limits},\"{}\"",
                        i + 1,
                        sig12(c.max_rel_dev),
                        c.wiring
                    )?;
                }
                Ok(())
            })?;
            manifest.outputs.push(out.clone());
            summary.push(format!(
                "{} candidate wirings, {} exact",
                report.candidates.len(),
                report.exact.len()
            ));
            if let Some(best) = report.best() {
                summary.push(format!(
                    "best: {} (max rel dev {})",
                    best.wiring,
                    sig12(best.max_rel_dev)
                ));
            }
            let dist: Vec<String> = report
                .distribution
                .iter()
                .map(|(label, n)| format!("{label}: {n}"))
                .collect();
            summary.push(dist.join(", "));
        }
    }

    manifest.duration_s = started.elapsed().as_secs_f64();
    let path = manifest_path(&manifest.outputs[0]);
    manifest.write(&path)?;
    Ok(Report {
        manifest: path,
        summary: summary.join("\n"),
    })
}
