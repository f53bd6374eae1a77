//! End-to-end composition: target text → approximation → plan → hydro checks,
//! plus the batch comparison table.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approx::{parse_target, ApproxError, LatticeComparison, Lattices, TargetCf};
use crate::fsd::AccuracyLevel;
use crate::hydro::{
    flux_profile, validate_laminar_for, ChannelSpec, FluidProps, FluxProfile, HydroError,
    LaminarVerdict,
};
use crate::mixplan::{inlet_states, make_plan_in, DilutionPlan, InletStates, PlanError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Target(#[from] ApproxError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Hydro(#[from] HydroError),
}

/// Everything the plan command reports for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub comparison: LatticeComparison,
    pub plan: DilutionPlan,
    pub inlet_states: InletStates,
    pub flux: FluxProfile,
    pub laminar: LaminarVerdict,
}

impl PlanReport {
    pub fn build(
        target: &TargetCf,
        lattices: &Lattices,
        spec: &ChannelSpec,
        fluid: &FluidProps,
    ) -> Result<Self, ReportError> {
        let comparison = lattices.compare(target);
        let plan = make_plan_in(&comparison.fsd.chosen, &lattices.fsd)?;
        let states = inlet_states(&plan);
        let flux = flux_profile(&states, spec)?;
        let laminar = validate_laminar_for(&states, spec, fluid)?;
        Ok(PlanReport {
            comparison,
            plan,
            inlet_states: states,
            flux,
            laminar,
        })
    }
}

/// One row of the batch comparison CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRow {
    pub target: String,
    pub n: u32,
    pub bs_choice: String,
    pub bs_error: String,
    pub fsd_choice: String,
    pub fsd_error: String,
    pub sample_units: String,
    pub buffer_units: String,
    pub fsd_dominates: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchIssue {
    /// 1-based input line.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchOutcome {
    pub rows: Vec<BatchRow>,
    pub issues: Vec<BatchIssue>,
}

impl BatchOutcome {
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record([
                "target",
                "n",
                "bs_choice",
                "bs_error",
                "fsd_choice",
                "fsd_error",
                "sample_units",
                "buffer_units",
                "fsd_dominates",
            ])?;
        }
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn row_for(text: &str, n: AccuracyLevel, lattices: &Lattices) -> Result<BatchRow, String> {
    let target = parse_target(text).map_err(|e| e.to_string())?;
    let cmp = lattices.compare(&target);
    let plan = make_plan_in(&cmp.fsd.chosen, &lattices.fsd).map_err(|e| e.to_string())?;
    let err = |e: &num_rational::BigRational| format!("{}/{}", e.numer(), e.denom());
    Ok(BatchRow {
        target: target.original_text.clone(),
        n: n.get(),
        bs_choice: cmp.bs.chosen.to_string(),
        bs_error: err(&cmp.bs.error),
        fsd_choice: cmp.fsd.chosen.to_string(),
        fsd_error: err(&cmp.fsd.error),
        sample_units: plan.sample_units.to_string(),
        buffer_units: plan.buffer_units.to_string(),
        fsd_dominates: cmp.fsd_dominates(),
    })
}

/// Compares every target in `input` (one per line, first CSV field; an
/// optional `target` header is skipped). Bad rows become issues and do not
/// stop the run; output order follows input order.
pub fn run_batch(input: &str, n: AccuracyLevel) -> BatchOutcome {
    let lattices = Lattices::new(n);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input.as_bytes());

    let mut jobs = Vec::new();
    let mut issues = Vec::new();
    for (i, record) in reader.records().enumerate() {
        match record {
            Ok(rec) => {
                let line = rec.position().map_or(i as u64 + 1, |p| p.line());
                let field = rec.get(0).unwrap_or("").to_string();
                if field.is_empty() && rec.len() <= 1 {
                    continue;
                }
                if i == 0 && field.eq_ignore_ascii_case("target") {
                    continue;
                }
                jobs.push((line, field));
            }
            Err(e) => issues.push(BatchIssue {
                line: e.position().map_or(i as u64 + 1, |p| p.line()),
                message: e.to_string(),
            }),
        }
    }

    let results: Vec<_> = jobs
        .par_iter()
        .map(|(line, text)| (*line, row_for(text, n, &lattices)))
        .collect();

    let mut outcome = BatchOutcome {
        rows: Vec::new(),
        issues,
    };
    for (line, result) in results {
        match result {
            Ok(row) => outcome.rows.push(row),
            Err(message) => outcome.issues.push(BatchIssue { line, message }),
        }
    }
    outcome.issues.sort_by_key(|i| i.line);
    outcome
}
