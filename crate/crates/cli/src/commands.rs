//! Subcommands other than `verify`. Each returns its outputs as named byte
//! buffers; nothing touches the filesystem until every buffer is ready.

use crate::config::{load_field, Resolved};
use crate::error::CliError;
use crate::verify::build_family;
use maxlab::corpus::Generator;
use maxlab::field::RegionMask;
use maxlab::field_io::write_field;
use maxlab::lipschitz::{characterization_report, CharacterizationReport, ReportOptions};
use maxlab::maximal::{CompiledFamily, Operator};
use maxlab::orlicz::{luxemburg_norm, weak_norm};
use maxlab::{GroupSpec, SampledField, YoungFunction};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

/// A named output file.
pub type Output = (String, Vec<u8>);

pub fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable report");
    bytes.push(b'\n');
    bytes
}

/// Writes all outputs into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, outputs: &[Output]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| crate::error::io_error(dir, e))?;
    for (name, bytes) in outputs {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| crate::error::io_error(&path, e))?;
    }
    Ok(())
}

fn covering_family(resolved: &Resolved) -> Result<CompiledFamily, CliError> {
    let fam = build_family(resolved, &resolved.grid, &[])?;
    if let Some(i) = fam.first_uncovered() {
        return Err(CliError::Config(format!(
            "node {i} {:?} is covered by no ball; enable family.cover or widen the radii",
            resolved.grid.node(i)
        )));
    }
    Ok(fam)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormOutput {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn run_norm(
    resolved: &Resolved,
    field: &str,
    young: &str,
    weak: bool,
) -> Result<NormOutput, CliError> {
    let f = load_field(field, &resolved.grid, &resolved.base_dir)?;
    let phi = YoungFunction::from_str(young)?;
    let whole = RegionMask::whole(&resolved.grid);
    let r = if weak {
        weak_norm(&f, &phi, &whole)?
    } else {
        luxemburg_norm(&f, &phi, &whole)?
    };
    Ok(NormOutput {
        value: r.value,
        iterations: r.iterations,
        converged: r.converged,
    })
}

pub fn run_op(
    resolved: &Resolved,
    op: Operator,
    alpha: f64,
    f: &str,
    b: Option<&str>,
) -> Result<SampledField, CliError> {
    if op.needs_symbol() && b.is_none() {
        return Err(CliError::Config(format!(
            "operator {op} needs a symbol (--b)"
        )));
    }
    let f = load_field(f, &resolved.grid, &resolved.base_dir)?;
    let b = b
        .map(|b| load_field(b, &resolved.grid, &resolved.base_dir))
        .transpose()?;
    let fam = covering_family(resolved)?;
    Ok(op.apply(b.as_ref(), &f, &fam, alpha)?)
}

pub fn field_csv(field: &SampledField) -> Result<Vec<u8>, CliError> {
    let mut bytes = Vec::new();
    write_field(field, &mut bytes)?;
    Ok(bytes)
}

pub fn run_charac(
    resolved: &Resolved,
    b: &str,
    beta: f64,
    young: &str,
) -> Result<CharacterizationReport, CliError> {
    let field = load_field(b, &resolved.grid, &resolved.base_dir)?;
    let phi = YoungFunction::from_str(young)?;
    let options = ReportOptions {
        family: resolved.config.family.clone(),
        corpus: resolved.corpus.clone(),
        seed: resolved.config.seed,
        ..ReportOptions::default()
    };
    Ok(characterization_report(&field, beta, &phi, &options)?)
}

/// Report fields other than the per-ball and per-radius tables.
#[derive(Serialize)]
struct CharacSummary<'a> {
    b: &'a str,
    beta: f64,
    phi: &'a str,
    psi: &'a str,
    sup_f1: f64,
    sup_f2: f64,
    sup_f3: f64,
    sup_f4: f64,
    sup_lip_ball: f64,
    lipschitz: &'a maxlab::lipschitz::LipEstimate,
    ratio_table: &'a [maxlab::lipschitz::RatioRow],
    sup_ratio: f64,
    sign: &'a maxlab::lipschitz::SignDiagnostic,
    scale_spread: [f64; 4],
    scale_stable: bool,
    verdict_notes: &'a [String],
}

/// `charac_balls.csv`, `charac_summary.json` and `charac_plot.csv`.
pub fn charac_outputs(
    report: &CharacterizationReport,
    b: &str,
    dim: usize,
) -> Result<Vec<Output>, CliError> {
    let csv_err = |e: csv::Error| CliError::Failed(format!("csv: {e}"));
    let mut balls = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["id".to_string()];
    header.extend((0..dim).map(|k| format!("center_{k}")));
    header.extend(["radius", "f1", "f2", "f3", "f4", "lip_ball"].map(String::from));
    balls.write_record(&header).map_err(csv_err)?;
    for row in &report.per_ball {
        let mut rec = vec![row.id.to_string()];
        rec.extend(row.center.iter().map(|c| format!("{c:e}")));
        rec.extend(
            [row.radius, row.f1, row.f2, row.f3, row.f4, row.lip_ball].map(|v| format!("{v:e}")),
        );
        balls.write_record(&rec).map_err(csv_err)?;
    }
    let mut plot = csv::Writer::from_writer(Vec::new());
    plot.write_record(["radius", "f1", "f2", "f3", "f4", "lip_ball", "neg_part"])
        .map_err(csv_err)?;
    for row in &report.per_radius {
        let rec = [
            row.radius,
            row.f1,
            row.f2,
            row.f3,
            row.f4,
            row.lip_ball,
            row.neg_part,
        ];
        plot.write_record(rec.map(|v| format!("{v:e}")))
            .map_err(csv_err)?;
    }
    let summary = CharacSummary {
        b,
        beta: report.beta,
        phi: &report.phi,
        psi: &report.psi,
        sup_f1: report.sup_f1,
        sup_f2: report.sup_f2,
        sup_f3: report.sup_f3,
        sup_f4: report.sup_f4,
        sup_lip_ball: report.sup_lip_ball,
        lipschitz: &report.lipschitz,
        ratio_table: &report.ratio_table,
        sup_ratio: report.sup_ratio,
        sign: &report.sign,
        scale_spread: report.scale_spread,
        scale_stable: report.scale_stable,
        verdict_notes: &report.verdict_notes,
    };
    let into = |w: csv::Writer<Vec<u8>>| {
        w.into_inner()
            .map_err(|e| CliError::Failed(format!("csv: {e}")))
    };
    Ok(vec![
        ("charac_balls.csv".into(), into(balls)?),
        ("charac_summary.json".into(), json(&summary)),
        ("charac_plot.csv".into(), into(plot)?),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub kernel: String,
    pub operator: String,
    pub nodes: usize,
    pub family_size: usize,
    pub wall_time: f64,
    pub node_throughput: f64,
    /// Sum of the output values in node order.
    pub checksum: f64,
}

/// Oracle work estimate: membership tests plus one full scan per
/// (node, containing ball) pair.
pub fn oracle_work(fam: &CompiledFamily) -> f64 {
    let n = fam.grid().node_count() as f64;
    n * fam.len() as f64 + n * fam.total_members() as f64
}

/// Largest oracle work estimate that `bench` will run.
pub const ORACLE_WORK_LIMIT: f64 = 2e9;

pub struct BenchRun {
    pub rows: Vec<BenchResult>,
    /// Operators whose fast and oracle checksums differ.
    pub mismatches: Vec<String>,
    pub oracle_skipped: bool,
}

pub fn run_bench(resolved: &Resolved, alpha: f64) -> Result<BenchRun, CliError> {
    let grid = &resolved.grid;
    let fam = covering_family(resolved)?;
    let seed = resolved.config.seed;
    let b = Generator::RandomSmooth { seed }.sample(grid)?;
    let f = Generator::Noise { seed }.sample(grid)?;
    let oracle_skipped = oracle_work(&fam) > ORACLE_WORK_LIMIT;
    let mut rows = Vec::new();
    let mut mismatches = Vec::new();
    let n = grid.node_count();
    let mut timed = |kernel: &str, op: Operator, run: &dyn Fn() -> maxlab::Result<SampledField>| {
        let start = Instant::now();
        let out = run()?;
        let wall_time = start.elapsed().as_secs_f64();
        let row = BenchResult {
            kernel: kernel.into(),
            operator: op.name().into(),
            nodes: n,
            family_size: fam.len(),
            wall_time,
            node_throughput: n as f64 / wall_time.max(1e-12),
            checksum: out.values().iter().sum(),
        };
        rows.push(row.clone());
        Ok::<_, CliError>(row.checksum)
    };
    for op in Operator::ALL {
        let fast = timed("fast", op, &|| op.apply(Some(&b), &f, &fam, alpha))?;
        if !oracle_skipped {
            let slow = timed("oracle", op, &|| op.apply_oracle(Some(&b), &f, &fam, alpha))?;
            if fast.to_bits() != slow.to_bits() {
                mismatches.push(op.name().to_string());
            }
        }
    }
    Ok(BenchRun {
        rows,
        mismatches,
        oracle_skipped,
    })
}

pub fn bench_csv(rows: &[BenchResult]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Failed(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Failed(format!("csv: {e}")))
}

pub fn run_calibrate(group: &GroupSpec, resolution: usize) -> Result<GroupSpec, CliError> {
    Ok(group.calibrate_constants(resolution)?)
}
