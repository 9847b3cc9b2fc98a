//! Configuration files, presets and result files for the command line.
//!
//! An output directory holds `run.cfg` (the resolved configuration),
//! `energy.csv`, `trace.json` (the full evolution), `snapshots/step_*.vtk`
//! and, when auditing, `audit.json`.

pub mod config;
pub mod csv;
pub mod presets;
pub mod vtk;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::audit::{audit_trace, AuditReport};
use crate::error::{Error, Result};
use crate::evolution::{EvolutionTrace, Problem};

pub use config::{parse_config, RunConfig};
pub use csv::{read_energy_csv, write_energy_csv, EnergyRow};
pub use presets::{preset_config, PRESETS};
pub use vtk::{read_vtk, write_vtk, Snapshot};

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub no_backtracking: bool,
    pub audit: bool,
}

pub fn load_config(path: &Path, opts: &RunOptions) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text, opts.preset.as_deref())?;
    if let Some(out) = &opts.out {
        cfg.output.dir = Some(out.clone());
    }
    if opts.no_backtracking {
        cfg.time.backtracking = false;
    }
    cfg.output.audit |= opts.audit;
    Ok(cfg)
}

pub fn output_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}-out", cfg.name)))
}

pub fn snapshot_path(dir: &Path, n: usize) -> PathBuf {
    dir.join("snapshots").join(format!("step_{n:05}.vtk"))
}

/// Writes every result file for a finished run into `dir`.
pub fn write_outputs(cfg: &RunConfig, trace: &EvolutionTrace<f64>, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    fs::write(dir.join("run.cfg"), cfg.render())?;
    write_energy_csv(trace, BufWriter::new(File::create(dir.join("energy.csv"))?))?;
    serde_json::to_writer(BufWriter::new(File::create(dir.join("trace.json"))?), trace)
        .map_err(|e| Error::Format(e.to_string()))?;
    let mesh = trace.scenario.mesh.build()?;
    let last = trace.steps.len().saturating_sub(1);
    for s in &trace.steps {
        if s.n % cfg.output.snapshot_stride == 0 || s.n == last {
            write_vtk(
                &mesh,
                &s.state,
                BufWriter::new(File::create(snapshot_path(dir, s.n))?),
            )?;
        }
    }
    Ok(())
}

pub fn read_trace(dir: &Path) -> Result<EvolutionTrace<f64>> {
    let file = File::open(dir.join("trace.json"))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_audit(report: &AuditReport<f64>, dir: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join("audit.json"), text)?;
    Ok(())
}

/// Result of `run_config`.
#[derive(Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub trace: EvolutionTrace<f64>,
    pub audit: Option<AuditReport<f64>>,
}

/// Runs a resolved configuration and writes its outputs.
pub fn run_config(cfg: &RunConfig) -> Result<RunSummary> {
    let problem = Problem::new(cfg.to_scenario()?)?;
    let trace = problem.run()?;
    let dir = output_dir(cfg);
    write_outputs(cfg, &trace, &dir)?;
    let audit = if cfg.output.audit {
        let report = audit_trace(&trace)?;
        write_audit(&report, &dir)?;
        Some(report)
    } else {
        None
    };
    Ok(RunSummary { dir, trace, audit })
}

/// Audits a previously written output directory and stores `audit.json`.
pub fn audit_dir(dir: &Path) -> Result<AuditReport<f64>> {
    let trace = read_trace(dir)?;
    let report = audit_trace(&trace)?;
    write_audit(&report, dir)?;
    Ok(report)
}

/// Human-readable audit digest.
pub fn audit_summary(report: &AuditReport<f64>) -> String {
    let onset = |t: Option<f64>| t.map_or_else(|| "none".to_string(), |t| format!("{t:.4}"));
    let mut s = format!(
        "plastic onset: {}\ncrack onset: {}\nmax |balance residual|: {:.3e}\n",
        onset(report.plastic_onset),
        onset(report.crack_onset),
        report.balance.max_abs()
    );
    if let Some(d) = report.profile_deviation {
        s += &format!("phase profile deviation: {d:.3e}\n");
    }
    if report.dissipation_ok {
        s += "dissipation check: ok\n";
    } else {
        s += &format!(
            "dissipation check: FAILED at steps {:?}\n",
            report.dissipation_violations
        );
    }
    s
}
