//! Per-step energy table.
//!
//! Dissipation columns are cumulative, and `total` is the sum of the
//! columns the model uses, i.e. stored energy plus everything dissipated so
//! far.

use std::io::Write;

use crate::error::{Error, Result};
use crate::evolution::EvolutionTrace;
use crate::material::Model;

pub const HEADER: &str =
    "t,elastic,plastic_cum,hardening,viscoelastic_cum,viscoplastic_cum,surface,total,outer_iters,inner_iters,backtracked";

/// One parsed row of the energy table.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    pub elastic: f64,
    pub plastic_cum: f64,
    pub hardening: f64,
    pub viscoelastic_cum: f64,
    pub viscoplastic_cum: f64,
    pub surface: f64,
    pub total: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub backtracked: bool,
}

impl EnergyRow {
    /// Sum of the columns that enter the given model's energy.
    pub fn model_sum(&self, model: Model) -> f64 {
        let mut s = self.elastic + self.plastic_cum + self.surface;
        if model.has_hardening() {
            s += self.hardening;
        }
        if model.has_viscoelasticity() {
            s += self.viscoelastic_cum;
        }
        if model.has_viscoplasticity() {
            s += self.viscoplastic_cum;
        }
        s
    }
}

pub fn energy_rows(trace: &EvolutionTrace<f64>) -> Vec<EnergyRow> {
    let model = trace.scenario.params.model;
    trace
        .steps
        .iter()
        .zip(trace.cumulative())
        .map(|(s, c)| {
            let mut row = EnergyRow {
                t: s.state.t,
                elastic: s.energy.elastic,
                plastic_cum: c.plastic,
                hardening: s.energy.hardening,
                viscoelastic_cum: c.viscoelastic,
                viscoplastic_cum: c.viscoplastic,
                surface: s.energy.surface,
                total: 0.0,
                outer_iters: s.outer_iterations,
                inner_iters: s.inner_iterations,
                backtracked: s.backtracked_from.is_some(),
            };
            row.total = row.model_sum(model);
            row
        })
        .collect()
}

pub fn write_energy_csv<W: Write>(trace: &EvolutionTrace<f64>, mut out: W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    for r in energy_rows(trace) {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}",
            r.t,
            r.elastic,
            r.plastic_cum,
            r.hardening,
            r.viscoelastic_cum,
            r.viscoplastic_cum,
            r.surface,
            r.total,
            r.outer_iters,
            r.inner_iters,
            u8::from(r.backtracked)
        )?;
    }
    Ok(())
}

pub fn read_energy_csv(text: &str) -> Result<Vec<EnergyRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(HEADER) {
        return Err(Error::Format("energy table header mismatch".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || Error::Format(format!("energy table row {}: `{line}`", i + 1));
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 11 {
                return Err(bad());
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| bad());
            let int = |k: usize| f[k].parse::<usize>().map_err(|_| bad());
            Ok(EnergyRow {
                t: num(0)?,
                elastic: num(1)?,
                plastic_cum: num(2)?,
                hardening: num(3)?,
                viscoelastic_cum: num(4)?,
                viscoplastic_cum: num(5)?,
                surface: num(6)?,
                total: num(7)?,
                outer_iters: int(8)?,
                inner_iters: int(9)?,
                backtracked: int(10)? != 0,
            })
        })
        .collect()
}
