use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use fsd_core::approx::{
    find_closest_fast, parse_target, Approximation, LatticeComparison, Lattices, TargetCf,
};
use fsd_core::fsd::sequence;
use fsd_core::hydro::LaminarVerdict;
use fsd_core::interchange::{self, SequenceDocument};
use fsd_core::layout::{build_network_with, emit_description, emit_schematic};
use fsd_core::mixplan::{throughput_options, ThroughputOption};
use fsd_core::report::{run_batch, PlanReport};
use fsd_core::{Fraction, SequenceKind};
use num_rational::BigRational;
use serde::Serialize;

use crate::config::Config;
use crate::{Format, Kind};

impl From<Kind> for SequenceKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Bs => SequenceKind::Bs,
            Kind::Rf => SequenceKind::Rf,
            Kind::Fsd => SequenceKind::Fsd,
        }
    }
}

fn ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn gen(
    cfg: &Config,
    kind: Kind,
    dir: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> Result<()> {
    let n = cfg.level()?;
    let kind = SequenceKind::from(kind);
    let doc = SequenceDocument::new(sequence(kind, n));
    eprintln!(
        "{kind}_{}: cardinality {}, max gap {}",
        n.base(),
        doc.cardinality,
        doc.max_gap
    );
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let stem = dir.join(format!("{kind}_{}", n.base()));
            let csv_path = stem.with_extension("csv");
            let mut csv = Vec::new();
            doc.sequence.write_csv(&mut csv)?;
            fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
            let json_path = stem.with_extension("json");
            write_file(
                &json_path,
                &interchange::to_json(interchange::KIND_SEQUENCE, &doc),
            )?;
            writeln!(out, "{}", csv_path.display())?;
            writeln!(out, "{}", json_path.display())?;
        }
        None => match format {
            Format::Csv => doc.sequence.write_csv(out)?,
            Format::Json => {
                out.write_all(interchange::to_json(interchange::KIND_SEQUENCE, &doc).as_bytes())?
            }
            Format::Text => {
                for x in doc.sequence.elems() {
                    writeln!(out, "{x}")?;
                }
            }
        },
    }
    Ok(())
}

#[derive(Serialize)]
struct ApproxDocument<'a> {
    approximation: &'a Approximation,
    comparison: &'a LatticeComparison,
}

fn target_text(t: &TargetCf) -> String {
    let exact = t.value.to_string();
    if t.original_text == exact {
        format!("{exact} = {:.9}", t.value.to_f64())
    } else {
        format!("{} = {exact} = {:.9}", t.original_text, t.value.to_f64())
    }
}

fn error_text(a: &Approximation) -> String {
    format!("{} = {:.9}", ratio(&a.error), a.error_f64())
}

pub fn approx(
    cfg: &Config,
    target: &str,
    lattice: Kind,
    format: Format,
    out: &mut dyn Write,
) -> Result<()> {
    let n = cfg.level()?;
    let t = parse_target(target)?;
    let lattices = Lattices::new(n);
    let cmp = lattices.compare(&t);
    let kind = SequenceKind::from(lattice);
    let primary = match kind {
        SequenceKind::Fsd => cmp.fsd.clone(),
        SequenceKind::Bs => cmp.bs.clone(),
        SequenceKind::Rf => find_closest_fast(&t, &sequence(kind, n)),
    };
    match format {
        Format::Text => {
            writeln!(out, "target       {}", target_text(&t))?;
            writeln!(out, "lattice      {kind}_{}", n.base())?;
            writeln!(
                out,
                "chosen       {} = {:.9}",
                primary.chosen,
                primary.chosen.to_f64()
            )?;
            writeln!(out, "error        {}", error_text(&primary))?;
            writeln!(out, "abs error    {}", ratio(&primary.abs_error()))?;
            writeln!(
                out,
                "bs choice    {}  error {}",
                cmp.bs.chosen,
                error_text(&cmp.bs)
            )?;
            writeln!(
                out,
                "fsd choice   {}  error {}",
                cmp.fsd.chosen,
                error_text(&cmp.fsd)
            )?;
            writeln!(
                out,
                "fsd better   {}",
                if cmp.fsd_dominates() { "yes" } else { "no" }
            )?;
        }
        Format::Json => {
            let doc = ApproxDocument {
                approximation: &primary,
                comparison: &cmp,
            };
            out.write_all(interchange::to_json(interchange::KIND_APPROXIMATION, &doc).as_bytes())?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "target",
                "n",
                "lattice",
                "chosen",
                "error",
                "bs_choice",
                "bs_error",
                "fsd_choice",
                "fsd_error",
                "fsd_dominates",
            ])?;
            w.write_record([
                t.value.to_string(),
                n.to_string(),
                kind.to_string(),
                primary.chosen.to_string(),
                ratio(&primary.error),
                cmp.bs.chosen.to_string(),
                ratio(&cmp.bs.error),
                cmp.fsd.chosen.to_string(),
                ratio(&cmp.fsd.error),
                cmp.fsd_dominates().to_string(),
            ])?;
            w.flush()?;
        }
    }
    Ok(())
}

pub struct PlanFiles<'a> {
    pub svg: Option<&'a Path>,
    pub description: Option<&'a Path>,
}

fn verdict_text(v: &LaminarVerdict) -> String {
    match v {
        LaminarVerdict::Ok {
            max_reynolds,
            location: Some(at),
        } => format!("laminar, max R {max_reynolds:.4e} at {at}"),
        LaminarVerdict::Ok { location: None, .. } => "laminar, no open inlet".to_string(),
        LaminarVerdict::Violation {
            max_reynolds,
            location,
        } => {
            format!("NOT laminar, R {max_reynolds:.4e} at {location}")
        }
    }
}

pub fn plan(
    cfg: &Config,
    target: &str,
    files: PlanFiles<'_>,
    format: Format,
    out: &mut dyn Write,
) -> Result<()> {
    let n = cfg.level()?;
    let t = parse_target(target)?;
    let lattices = Lattices::new(n);
    let report = PlanReport::build(&t, &lattices, &cfg.channel()?, &cfg.fluid()?)?;
    if !report.laminar.is_ok() {
        eprintln!("warning: {}", verdict_text(&report.laminar));
    }

    if files.svg.is_some() || files.description.is_some() {
        let model = build_network_with(&report.plan, cfg.arm_order);
        if let Some(path) = files.svg {
            write_file(path, &emit_schematic(&model))?;
            eprintln!("schematic written to {}", path.display());
        }
        if let Some(path) = files.description {
            write_file(path, &emit_description(&model))?;
            eprintln!("network description written to {}", path.display());
        }
    }

    let plan = &report.plan;
    let states = &report.inlet_states;
    match format {
        Format::Json => {
            out.write_all(interchange::to_json(interchange::KIND_PLAN, &report).as_bytes())?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "inlet",
                "width",
                "sample_mix",
                "sample_reuse",
                "buffer_mix",
                "buffer_reuse",
            ])?;
            for i in 0..states.width() {
                w.write_record([
                    i.to_string(),
                    (1u64 << i).to_string(),
                    states.sample_mix[i].to_string(),
                    states.sample_reuse[i].to_string(),
                    states.buffer_mix[i].to_string(),
                    states.buffer_reuse[i].to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Text => {
            let fsd = &report.comparison.fsd;
            let bs = &report.comparison.bs;
            writeln!(out, "target     {}", target_text(&t))?;
            writeln!(out, "chosen     {} (error {})", fsd.chosen, error_text(fsd))?;
            writeln!(out, "bs choice  {} (error {})", bs.chosen, error_text(bs))?;
            writeln!(
                out,
                "units      sample {}, buffer {}, total {}",
                plan.sample_units,
                plan.buffer_units,
                plan.total_units()
            )?;
            let steps: Vec<String> = plan
                .tree
                .steps
                .iter()
                .map(|s| format!("{} x{}", s.fluid, s.volume))
                .collect();
            writeln!(out, "mix steps  {}", steps.join(", "))?;
            writeln!(out)?;
            writeln!(
                out,
                "inlet  width  sample_mix  sample_reuse  buffer_mix  buffer_reuse"
            )?;
            for i in 0..states.width() {
                writeln!(
                    out,
                    "{:<5}  {:<5}  {:<10}  {:<12}  {:<10}  {}",
                    i,
                    format!("{}x", 1u64 << i),
                    states.sample_mix[i].to_string(),
                    states.sample_reuse[i].to_string(),
                    states.buffer_mix[i].to_string(),
                    states.buffer_reuse[i]
                )?;
            }
            writeln!(out)?;
            let output_cf = report
                .flux
                .output_cf()
                .map_or("none".to_string(), |c| c.to_string());
            writeln!(
                out,
                "flux       {} units ({:.4e} m^3/s), output cf {output_cf}",
                report.flux.final_units(),
                report.flux.final_flux()
            )?;
            writeln!(out, "hydro      {}", verdict_text(&report.laminar))?;
        }
    }
    Ok(())
}

/// Returns `Ok(false)` if any row was rejected; the remaining rows are still written.
pub fn batch(
    cfg: &Config,
    input: &Path,
    output: Option<&Path>,
    out: &mut dyn Write,
) -> Result<bool> {
    let n = cfg.level()?;
    let text = if input == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        s
    } else {
        fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?
    };
    let outcome = run_batch(&text, n);
    for issue in &outcome.issues {
        eprintln!("{}:{}: {}", input.display(), issue.line, issue.message);
    }
    match output {
        Some(path) => {
            let mut buf = Vec::new();
            outcome.write_csv(&mut buf)?;
            write_file(path, std::str::from_utf8(&buf)?)?;
        }
        None => outcome.write_csv(out)?,
    }
    eprintln!(
        "{} rows written, {} rejected",
        outcome.rows.len(),
        outcome.issues.len()
    );
    Ok(outcome.issues.is_empty())
}

#[derive(Serialize)]
struct ThroughputDocument<'a> {
    cf: &'a Fraction,
    n: u32,
    options: &'a [ThroughputOption],
}

pub fn throughput(cfg: &Config, target: &str, format: Format, out: &mut dyn Write) -> Result<()> {
    let n = cfg.level()?;
    let t = parse_target(target)?;
    let options = throughput_options(&t.value, n)?;
    match format {
        Format::Text => {
            writeln!(out, "sample  buffer  rate")?;
            for o in &options {
                writeln!(out, "{:<6}  {:<6}  {}", o.a, o.b, o.rate)?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["sample", "buffer", "rate"])?;
            for o in &options {
                w.write_record([o.a.to_string(), o.b.to_string(), o.rate.to_string()])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc = ThroughputDocument {
                cf: &t.value,
                n: n.get(),
                options: &options,
            };
            out.write_all(interchange::to_json(interchange::KIND_THROUGHPUT, &doc).as_bytes())?;
        }
    }
    Ok(())
}
