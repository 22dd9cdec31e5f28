//! CSV writers. Reals use 17 significant digits.

use std::io::Write;

use blockfw_core::diagnostics::RunDiagnostics;
use blockfw_core::globalopt::AggregateTrajectory;
use blockfw_core::RunResult;

use crate::instance::fmt_real;

pub const TRAJECTORY_HEADER: [&str; 8] =
    ["run_id", "k", "grad_evals", "block_updates", "f", "max_gap", "l0_norm", "elapsed_ms"];
pub const AGGREGATE_HEADER: [&str; 6] = ["axis_tick", "mean_gap", "std_gap", "mean_l0", "std_l0", "algorithm_id"];
pub const DIAGNOSTICS_HEADER: [&str; 6] =
    ["run_id", "k_id", "final_l0", "strict_complementarity", "q_hat", "r_squared"];
pub const SSC_TRACE_HEADER: [&str; 9] =
    ["run_id", "k", "block", "j", "kind", "alpha", "beta", "alpha_max", "unit_slope"];

/// Placeholder for an undefined value.
pub const NONE: &str = "NA";

pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(out: W) -> csv::Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(TRAJECTORY_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write_run(&mut self, run_id: &str, result: &RunResult) -> csv::Result<()> {
        for row in &result.trajectory {
            self.inner.write_record([
                run_id.to_string(),
                row.k.to_string(),
                row.grad_evals.to_string(),
                row.block_updates.to_string(),
                fmt_real(row.f),
                fmt_real(row.max_gap),
                row.l0.to_string(),
                fmt_real(row.elapsed_ms),
            ])?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> csv::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_trajectory<W: Write>(out: W, run_id: &str, result: &RunResult) -> csv::Result<()> {
    let mut w = TrajectoryWriter::new(out)?;
    w.write_run(run_id, result)?;
    w.finish()
}

pub fn write_aggregates<W: Write>(out: W, aggregates: &[AggregateTrajectory]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for agg in aggregates {
        for p in &agg.points {
            w.write_record([
                p.tick.to_string(),
                fmt_real(p.mean_gap),
                fmt_real(p.std_gap),
                fmt_real(p.mean_l0),
                fmt_real(p.std_l0),
                agg.algorithm_id.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One `0`/`1` character per block.
pub fn complementarity_flags(flags: &[bool]) -> String {
    flags.iter().map(|&f| if f { '1' } else { '0' }).collect()
}

pub fn write_diagnostics<W: Write>(out: W, rows: &[(String, RunDiagnostics)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for (run_id, d) in rows {
        w.write_record([
            run_id.clone(),
            d.k_id.map_or_else(|| NONE.to_string(), |k| k.to_string()),
            d.final_l0.to_string(),
            complementarity_flags(&d.strict_complementarity),
            d.rate.map_or_else(|| NONE.to_string(), |r| fmt_real(r.q_hat)),
            d.rate.map_or_else(|| NONE.to_string(), |r| fmt_real(r.r_squared)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ssc_trace<W: Write>(out: W, run_id: &str, result: &RunResult) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SSC_TRACE_HEADER)?;
    for rec in &result.ssc_log {
        w.write_record([
            run_id.to_string(),
            rec.k.to_string(),
            rec.block.to_string(),
            rec.j.to_string(),
            rec.step.kind.as_str().to_string(),
            fmt_real(rec.step.alpha),
            fmt_real(rec.step.beta),
            fmt_real(rec.step.alpha_max),
            fmt_real(rec.step.unit_slope),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format rendering of an aggregate CSV:
/// `algorithm_id,axis_tick,metric,mean,std` with `metric` in `gap`, `l0`.
pub fn aggregate_to_long<R: std::io::Read, W: Write>(input: R, out: W) -> anyhow::Result<()> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(AGGREGATE_HEADER) {
        anyhow::bail!("input is not an aggregate CSV (header {:?})", headers.iter().collect::<Vec<_>>());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm_id", "axis_tick", "metric", "mean", "std"])?;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != AGGREGATE_HEADER.len() {
            anyhow::bail!("row {}: expected {} fields", i + 2, AGGREGATE_HEADER.len());
        }
        w.write_record([&rec[5], &rec[0], "gap", &rec[1], &rec[2]])?;
        w.write_record([&rec[5], &rec[0], "l0", &rec[3], &rec[4]])?;
    }
    w.flush()?;
    Ok(())
}
