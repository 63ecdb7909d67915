use serde::{Deserialize, Serialize};

use super::CodegenError;

/// How the outer spatial loops are tiled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Blocking {
    #[default]
    Off,
    /// Block sizes compiled in as constants.
    Fixed(Vec<usize>),
    /// Block sizes passed as trailing `long` arguments.
    Runtime,
}

/// Optimization switches applied when emitting a kernel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodegenPlan {
    pub parallel: bool,
    pub simd: bool,
    pub blocking: Blocking,
    /// Alignment in bytes promised to the SIMD pragma.
    pub alignment: usize,
    /// Zero the start-from-rest grids in parallel so pages land near the
    /// threads that later update them.
    pub first_touch: bool,
}

impl Default for CodegenPlan {
    fn default() -> Self {
        CodegenPlan::all_off()
    }
}

impl CodegenPlan {
    pub fn all_off() -> Self {
        CodegenPlan {
            parallel: false,
            simd: false,
            blocking: Blocking::Off,
            alignment: 64,
            first_touch: false,
        }
    }

    pub fn full() -> Self {
        CodegenPlan {
            parallel: true,
            simd: true,
            blocking: Blocking::Runtime,
            alignment: 64,
            first_touch: true,
        }
    }

    /// The eight combinations of parallel, SIMD and runtime blocking.
    pub fn variants() -> Vec<CodegenPlan> {
        let mut out = Vec::with_capacity(8);
        for parallel in [false, true] {
            for simd in [false, true] {
                for blocked in [false, true] {
                    out.push(CodegenPlan {
                        parallel,
                        simd,
                        blocking: if blocked {
                            Blocking::Runtime
                        } else {
                            Blocking::Off
                        },
                        alignment: 64,
                        first_touch: parallel,
                    });
                }
            }
        }
        out
    }

    /// Short tag such as `par+simd+block`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.parallel {
            parts.push("par");
        }
        if self.simd {
            parts.push("simd");
        }
        match self.blocking {
            Blocking::Off => {}
            Blocking::Fixed(_) => parts.push("block-fixed"),
            Blocking::Runtime => parts.push("block"),
        }
        if parts.is_empty() {
            "plain".to_string()
        } else {
            parts.join("+")
        }
    }

    pub fn validate(&self, blocked_dims: usize) -> Result<(), CodegenError> {
        if self.alignment == 0 || !self.alignment.is_power_of_two() {
            return Err(CodegenError::Alignment(self.alignment));
        }
        if let Blocking::Fixed(b) = &self.blocking {
            if b.len() != blocked_dims || b.contains(&0) {
                return Err(CodegenError::BlockSizes(b.clone()));
            }
        }
        Ok(())
    }
}
