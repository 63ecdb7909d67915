use std::io::Write;

use serde::Serialize;

use crate::codegen::GeneratedSource;
use crate::runtime::RunStats;

/// One row of roofline data: no hardware peaks, only what was measured.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RooflineReport {
    pub kernel: String,
    pub flops_per_point: usize,
    pub bytes_per_point: usize,
    pub operational_intensity: f64,
    pub wall_seconds: f64,
    pub gflops: f64,
    pub plan: String,
    pub blocks: Vec<usize>,
}

pub fn roofline_report(
    stats: &RunStats,
    source: &GeneratedSource,
    plan: &str,
    blocks: &[usize],
) -> RooflineReport {
    RooflineReport {
        kernel: source.entry.clone(),
        flops_per_point: source.flops_per_point,
        bytes_per_point: source.bytes_per_point,
        operational_intensity: source.flops_per_point as f64 / source.bytes_per_point.max(1) as f64,
        wall_seconds: stats.wall_seconds,
        gflops: stats.gflops,
        plan: plan.to_string(),
        blocks: blocks.to_vec(),
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(mut out: impl Write, rows: &[T]) -> std::io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_roofline_csv(mut out: impl Write, rows: &[RooflineReport]) -> std::io::Result<()> {
    writeln!(out, "kernel,flops_per_point,bytes_per_point,operational_intensity,wall_seconds,gflops,plan,blocks")?;
    for r in rows {
        let blocks: Vec<String> = r.blocks.iter().map(|b| b.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.kernel,
            r.flops_per_point,
            r.bytes_per_point,
            r.operational_intensity,
            r.wall_seconds,
            r.gflops,
            r.plan,
            blocks.join("x")
        )?;
    }
    Ok(())
}
