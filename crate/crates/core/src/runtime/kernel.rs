use serde::Serialize;

use super::{RuntimeError, Workspace};
use crate::lowering::KernelIR;

/// Wall time and achieved rate of one kernel invocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunStats {
    pub wall_seconds: f64,
    pub gflops: f64,
    pub points: usize,
    pub timesteps: usize,
}

/// Anything that can execute a kernel IR over a workspace.
pub trait Kernel {
    fn ir(&self) -> &KernelIR;

    /// Floating-point operations per interior point and timestep.
    fn flops_per_point(&self) -> usize;

    /// Number of block sizes `execute` expects.
    fn block_count(&self) -> usize {
        0
    }

    fn execute(&self, ws: &mut Workspace, blocks: &[usize]) -> Result<(), RuntimeError>;

    /// Executes and reports wall time and GFLOP/s.
    fn run(&self, ws: &mut Workspace, blocks: &[usize]) -> Result<RunStats, RuntimeError> {
        let wall = timed(|| self.execute(ws, blocks))?;
        let points = self.ir().interior_points();
        let timesteps = self.ir().timesteps();
        let flops = self.flops_per_point() as f64 * points as f64 * timesteps as f64;
        Ok(RunStats {
            wall_seconds: wall,
            gflops: if wall > 0.0 { flops / wall / 1e9 } else { 0.0 },
            points,
            timesteps,
        })
    }
}

/// Seconds spent in `f`. The bare wasm target has no clock, so there the
/// time is reported as zero.
fn timed(f: impl FnOnce() -> Result<(), RuntimeError>) -> Result<f64, RuntimeError> {
    #[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
    {
        let start = std::time::Instant::now();
        f()?;
        Ok(start.elapsed().as_secs_f64())
    }
    #[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
    {
        f()?;
        Ok(0.0)
    }
}
