use std::ffi::c_void;
use std::io::ErrorKind;
use std::os::raw::{c_int, c_long};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Kernel, RuntimeError, Workspace};
use crate::codegen::{ArgKind, GeneratedSource, Signature};
use crate::lowering::KernelIR;

/// Compiler flag sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// `-O3`, native SIMD ISA, OpenMP.
    Generic,
    /// `-O2`, no OpenMP; pragmas are ignored.
    Portable,
}

impl Preset {
    pub fn flags(self) -> &'static [&'static str] {
        match self {
            Preset::Generic => &["-O3", "-march=native", "-fopenmp", "-ffp-contract=off"],
            Preset::Portable => &["-O2", "-ffp-contract=off", "-Wno-unknown-pragmas"],
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "generic" => Ok(Preset::Generic),
            "portable" => Ok(Preset::Portable),
            _ => Err(format!(
                "unknown preset {s:?} (expected generic or portable)"
            )),
        }
    }
}

const COMMON_FLAGS: &[&str] = &["-std=gnu99", "-shared", "-fPIC"];

type PackedFn = unsafe extern "C" fn(*const *mut c_void, *const c_long, c_long) -> c_int;

static COMPILE_LOCK: Mutex<()> = Mutex::new(());

fn compiler() -> String {
    std::env::var("FDJIT_CC").unwrap_or_else(|_| "cc".into())
}

/// `FDJIT_CACHE_DIR`, or `fdjit-cache` under the system temp directory.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("FDJIT_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("fdjit-cache"))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    entry: &'a str,
    packed_entry: &'a str,
    preset: Preset,
    compiler: &'a str,
    signature: &'a Signature,
    flops_per_point: usize,
    bytes_per_point: usize,
}

/// A generated kernel compiled into a shared object and loaded.
pub struct CompiledKernel {
    source: GeneratedSource,
    path: PathBuf,
    cache_hit: bool,
    threads: usize,
    entry: PackedFn,
    // Keeps `entry` valid. Never closed: unloading the object can unload the
    // OpenMP runtime it pulled in while its worker threads are still parked.
    _lib: std::mem::ManuallyDrop<libloading::Library>,
}

impl std::fmt::Debug for CompiledKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompiledKernel")
            .field("entry", &self.source.entry)
            .field("path", &self.path)
            .field("cache_hit", &self.cache_hit)
            .finish()
    }
}

/// Compiles `source` with `preset` (or reuses the cached object with the
/// same hash), loads it and resolves the packed entry point.
pub fn compile_and_load(
    source: &GeneratedSource,
    preset: Preset,
) -> Result<CompiledKernel, RuntimeError> {
    let cc = compiler();
    let dir = cache_dir();
    let io = |e: std::io::Error| RuntimeError::Io(e.to_string());
    std::fs::create_dir_all(&dir).map_err(io)?;

    let mut hasher = Sha256::new();
    hasher.update(source.source.as_bytes());
    hasher.update(cc.as_bytes());
    for f in COMMON_FLAGS.iter().chain(preset.flags()) {
        hasher.update(f.as_bytes());
    }
    let hash = hex::encode(hasher.finalize());
    let so = dir.join(format!("{hash}.so"));

    let cache_hit = {
        let _guard = COMPILE_LOCK.lock().unwrap_or_else(|p| p.into_inner());
        if so.exists() {
            true
        } else {
            build(&cc, preset, source, &dir, &hash, &so)?;
            false
        }
    };

    // SAFETY: the object was produced from our own generated source.
    let lib =
        unsafe { libloading::Library::new(&so) }.map_err(|e| RuntimeError::Load(e.to_string()))?;
    let entry: PackedFn = unsafe {
        *lib.get::<PackedFn>(source.packed_entry.as_bytes())
            .map_err(|_| RuntimeError::SymbolNotFound(source.packed_entry.clone()))?
    };
    let threads = std::env::var("FDJIT_NUM_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0);
    Ok(CompiledKernel {
        source: source.clone(),
        path: so,
        cache_hit,
        threads,
        entry,
        _lib: std::mem::ManuallyDrop::new(lib),
    })
}

fn build(
    cc: &str,
    preset: Preset,
    source: &GeneratedSource,
    dir: &Path,
    hash: &str,
    so: &Path,
) -> Result<(), RuntimeError> {
    let io = |e: std::io::Error| RuntimeError::Io(e.to_string());
    let c_path = dir.join(format!("{hash}.c"));
    std::fs::write(&c_path, &source.source).map_err(io)?;
    let tmp = dir.join(format!("{hash}.{}.tmp.so", std::process::id()));
    let output = Command::new(cc)
        .args(COMMON_FLAGS)
        .args(preset.flags())
        .arg("-o")
        .arg(&tmp)
        .arg(&c_path)
        .arg("-lm")
        .output()
        .map_err(|e| match e.kind() {
            ErrorKind::NotFound => RuntimeError::CompilerMissing(cc.to_string()),
            _ => RuntimeError::Io(e.to_string()),
        })?;
    if !output.status.success() {
        let _ = std::fs::remove_file(&tmp);
        return Err(RuntimeError::CompileFailed(
            String::from_utf8_lossy(&output.stderr).into_owned(),
        ));
    }
    let sidecar = Sidecar {
        entry: &source.entry,
        packed_entry: &source.packed_entry,
        preset,
        compiler: cc,
        signature: &source.signature,
        flops_per_point: source.flops_per_point,
        bytes_per_point: source.bytes_per_point,
    };
    let json =
        serde_json::to_string_pretty(&sidecar).map_err(|e| RuntimeError::Io(e.to_string()))?;
    std::fs::write(dir.join(format!("{hash}.json")), json).map_err(io)?;
    std::fs::rename(&tmp, so).map_err(io)
}

impl CompiledKernel {
    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Whether the shared object came from the cache without compiling.
    pub fn cache_hit(&self) -> bool {
        self.cache_hit
    }

    pub fn source(&self) -> &GeneratedSource {
        &self.source
    }

    pub fn signature(&self) -> &Signature {
        &self.source.signature
    }

    /// OpenMP thread count; 0 leaves the runtime default.
    pub fn set_threads(&mut self, n: usize) {
        self.threads = n;
    }

    pub fn threads(&self) -> usize {
        self.threads
    }
}

impl Kernel for CompiledKernel {
    fn ir(&self) -> &KernelIR {
        &self.source.ir
    }

    fn flops_per_point(&self) -> usize {
        self.source.flops_per_point
    }

    fn block_count(&self) -> usize {
        self.source.signature.block_count()
    }

    fn execute(&self, ws: &mut Workspace, blocks: &[usize]) -> Result<(), RuntimeError> {
        ws.check(&self.source.ir)?;
        let sig = &self.source.signature;
        if blocks.len() != sig.block_count() {
            return Err(RuntimeError::BlockCount {
                expected: sig.block_count(),
                found: blocks.len(),
            });
        }
        if blocks.iter().any(|&b| b < 1) {
            return Err(RuntimeError::InvalidBlock(blocks.to_vec()));
        }
        let mut args: Vec<*mut c_void> = Vec::new();
        for a in &sig.args {
            match a {
                ArgKind::Grid { name, .. } => {
                    args.push(ws.grid_mut(name)?.as_mut_ptr() as *mut c_void)
                }
                ArgKind::SparseData { name, .. } => {
                    args.push(ws.sparse_mut(name)?.data.as_mut_ptr() as *mut c_void)
                }
                ArgKind::SparseIndices { name, .. } => {
                    args.push(ws.sparse_mut(name)?.indices.as_mut_ptr() as *mut c_void)
                }
                ArgKind::SparseWeights { name, .. } => {
                    args.push(ws.sparse_mut(name)?.weights.as_mut_ptr() as *mut c_void)
                }
                ArgKind::Block { .. } => {}
            }
        }
        let blocks: Vec<c_long> = blocks.iter().map(|&b| b as c_long).collect();
        // SAFETY: buffer shapes were checked against the signature the
        // source was generated with; pointers stay valid for the call.
        let rc = unsafe { (self.entry)(args.as_ptr(), blocks.as_ptr(), self.threads as c_long) };
        if rc != 0 {
            return Err(RuntimeError::KernelFailed(rc));
        }
        Ok(())
    }
}
