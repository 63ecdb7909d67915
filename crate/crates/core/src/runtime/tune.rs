use std::collections::BTreeSet;

use serde::Serialize;

use super::{Kernel, RuntimeError, Workspace};
use crate::codegen::blocked_dims;
use crate::lowering::KernelIR;

const FALLBACK_CACHE: usize = 256 * 1024;
const CANDIDATE_SIZES: [usize; 5] = [8, 16, 24, 32, 64];
const REPEATS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockChoice {
    Autotuned,
    BestGuess,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub blocks: Vec<usize>,
    /// Minimum wall time over the repeats, or `None` if the run failed.
    pub seconds: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuningResult {
    pub tried: Vec<Trial>,
    pub chosen: Vec<usize>,
    pub source: BlockChoice,
}

impl TuningResult {
    pub fn fixed(blocks: Vec<usize>, source: BlockChoice) -> Self {
        TuningResult {
            tried: Vec::new(),
            chosen: blocks,
            source,
        }
    }
}

/// Bytes touched by one block slab.
pub fn working_set_bytes(blocks: &[usize], halo: usize, inner: usize, ngrids: usize) -> usize {
    blocks.iter().map(|b| b + 2 * halo).product::<usize>() * inner * 8 * ngrids
}

/// Largest square-ish blocking whose slab working set fits in
/// `cache_bytes`, clamped to `[1, extent]` per dimension.
///
/// `extents` are the interior extents of the blocked dimensions and
/// `inner` the product of the unblocked (innermost) extents.
pub fn best_guess_block(
    halo: usize,
    extents: &[usize],
    inner: usize,
    ngrids: usize,
    cache_bytes: usize,
) -> Vec<usize> {
    let top = extents.iter().copied().max().unwrap_or(1);
    for b in (1..=top).rev() {
        let blocks: Vec<usize> = extents.iter().map(|&e| b.min(e).max(1)).collect();
        if working_set_bytes(&blocks, halo, inner, ngrids) <= cache_bytes {
            return blocks;
        }
    }
    vec![1; extents.len()]
}

/// Block extents, unblocked inner extent and number of distinct grids read.
pub fn block_geometry(ir: &KernelIR) -> (Vec<usize>, usize, usize) {
    let nb = blocked_dims(ir.ndim);
    let ext: Vec<usize> = ir.bounds().iter().map(|(lo, hi)| hi - lo).collect();
    let inner = ext[nb..].iter().product();
    let mut read = BTreeSet::new();
    for u in ir.update_stages() {
        for a in &u.assignments {
            read.extend(a.rhs.accesses().into_iter().map(|x| x.name.to_string()));
        }
        for (_, e) in &u.temps {
            read.extend(e.accesses().into_iter().map(|x| x.name.to_string()));
        }
    }
    (ext[..nb].to_vec(), inner, read.len().max(1))
}

/// L2 size from sysfs, or 256 KiB.
pub fn detect_cache_size() -> usize {
    let parse = |s: &str| -> Option<usize> {
        let s = s.trim();
        let (num, mult) = match s.chars().last()? {
            'K' => (&s[..s.len() - 1], 1024),
            'M' => (&s[..s.len() - 1], 1024 * 1024),
            _ => (s, 1),
        };
        num.parse::<usize>().ok().map(|n| n * mult)
    };
    std::fs::read_to_string("/sys/devices/system/cpu/cpu0/cache/index2/size")
        .ok()
        .and_then(|s| parse(&s))
        .filter(|&n| n > 0)
        .unwrap_or(FALLBACK_CACHE)
}

/// `{8,16,24,32,64}` per blocked dimension, crossed and filtered to the
/// extents; a single full-extent candidate if nothing survives.
pub fn default_candidates(extents: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &e in extents {
        let sizes: Vec<usize> = CANDIDATE_SIZES
            .iter()
            .copied()
            .filter(|&b| b <= e)
            .collect();
        let sizes = if sizes.is_empty() {
            vec![e.max(1)]
        } else {
            sizes
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                sizes.iter().map(move |&b| {
                    let mut v = prefix.clone();
                    v.push(b);
                    v
                })
            })
            .collect();
    }
    out
}

/// Number of timesteps for tuning runs: `min(nt, 2 * time_order + 5)`.
pub fn tuning_nt(ir: &KernelIR) -> usize {
    let Some(tl) = ir.time else { return 1 };
    let mut order = 1;
    for u in ir.update_stages() {
        for a in &u.assignments {
            let lhs = a.lhs.time.map_or(0, |t| t.offset);
            for x in a.rhs.accesses() {
                if let Some(t) = x.time {
                    order = order.max((lhs - t.offset).unsigned_abs() as usize);
                }
            }
        }
    }
    tl.nt.min(tl.lo + 2 * order + 5)
}

/// Times each candidate (minimum of three runs) on a scratch copy of `ws`
/// and picks the fastest; ties go to the lexicographically smaller pair.
///
/// `kernel` should be built from a truncated IR (see [`tuning_nt`]).
pub fn autotune(
    kernel: &dyn Kernel,
    ws: &Workspace,
    candidates: &[Vec<usize>],
) -> Result<TuningResult, RuntimeError> {
    if candidates.is_empty() {
        return Err(RuntimeError::NoCandidates);
    }
    let mut scratch = ws.duplicate()?;
    let mut tried = Vec::with_capacity(candidates.len());
    for c in candidates {
        let mut best: Option<f64> = None;
        let mut error = None;
        for _ in 0..REPEATS {
            match kernel.run(&mut scratch, c) {
                Ok(stats) => {
                    best = Some(best.map_or(stats.wall_seconds, |b| b.min(stats.wall_seconds)))
                }
                Err(e) => {
                    error = Some(e.to_string());
                    best = None;
                    break;
                }
            }
        }
        tried.push(Trial {
            blocks: c.clone(),
            seconds: best,
            error,
        });
    }
    let chosen = tried
        .iter()
        .filter_map(|t| t.seconds.map(|s| (s, &t.blocks)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .map(|(_, b)| b.clone())
        .ok_or(RuntimeError::AllCandidatesFailed)?;
    Ok(TuningResult {
        tried,
        chosen,
        source: BlockChoice::Autotuned,
    })
}
