use std::alloc::{self, Layout};
use std::ptr::NonNull;

use super::RuntimeError;

/// Where a buffer's bytes live.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Backing {
    #[default]
    Heap,
    /// Memory-mapped temporary file in the given directory (system temp
    /// directory when `None`).
    #[cfg(feature = "jit")]
    File(Option<std::path::PathBuf>),
    /// File-backed when the buffer would take more than 75% of the memory
    /// currently available, heap otherwise.
    Auto,
}

enum Storage {
    Heap {
        ptr: NonNull<f64>,
        layout: Layout,
    },
    #[cfg(feature = "jit")]
    Mapped {
        map: memmap2::MmapMut,
        file: tempfile::NamedTempFile,
    },
}

/// Zero-initialized, aligned, contiguous row-major array of `f64`.
pub struct GridBuffer {
    shape: Vec<usize>,
    len: usize,
    alignment: usize,
    storage: Storage,
}

// The buffer owns its memory exclusively; access goes through &self/&mut self.
unsafe impl Send for GridBuffer {}
unsafe impl Sync for GridBuffer {}

pub const DEFAULT_ALIGNMENT: usize = 64;

impl GridBuffer {
    /// Heap buffer aligned to 64 bytes.
    pub fn new(shape: &[usize]) -> Result<Self, RuntimeError> {
        Self::allocate(shape, DEFAULT_ALIGNMENT, Backing::Heap)
    }

    pub fn allocate(
        shape: &[usize],
        alignment: usize,
        backing: Backing,
    ) -> Result<Self, RuntimeError> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(RuntimeError::EmptyShape);
        }
        if !alignment.is_power_of_two() || alignment < std::mem::align_of::<f64>() {
            return Err(RuntimeError::Alignment(alignment));
        }
        let len = shape
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or(RuntimeError::TooLarge)?;
        let bytes = len.checked_mul(8).ok_or(RuntimeError::TooLarge)?;
        let backing = match backing {
            Backing::Auto if should_spill(bytes) => file_backing_default(),
            Backing::Auto => Backing::Heap,
            b => b,
        };
        let storage = match backing {
            #[cfg(feature = "jit")]
            Backing::File(dir) => map_file(bytes, alignment, dir)?,
            _ => {
                let layout = Layout::from_size_align(bytes, alignment)
                    .map_err(|_| RuntimeError::TooLarge)?;
                // SAFETY: layout has non-zero size (len >= 1).
                let raw = unsafe { alloc::alloc_zeroed(layout) } as *mut f64;
                let ptr = NonNull::new(raw).ok_or(RuntimeError::OutOfMemory(bytes))?;
                Storage::Heap { ptr, layout }
            }
        };
        Ok(GridBuffer {
            shape: shape.to_vec(),
            len,
            alignment,
            storage,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn alignment(&self) -> usize {
        self.alignment
    }

    pub fn is_file_backed(&self) -> bool {
        !matches!(self.storage, Storage::Heap { .. })
    }

    /// Path of the backing file, if any.
    pub fn file_path(&self) -> Option<&std::path::Path> {
        match &self.storage {
            #[cfg(feature = "jit")]
            Storage::Mapped { file, .. } => Some(file.path()),
            _ => None,
        }
    }

    pub fn as_ptr(&self) -> *const f64 {
        match &self.storage {
            Storage::Heap { ptr, .. } => ptr.as_ptr(),
            #[cfg(feature = "jit")]
            Storage::Mapped { map, .. } => map.as_ptr() as *const f64,
        }
    }

    pub fn as_mut_ptr(&mut self) -> *mut f64 {
        match &mut self.storage {
            Storage::Heap { ptr, .. } => ptr.as_ptr(),
            #[cfg(feature = "jit")]
            Storage::Mapped { map, .. } => map.as_mut_ptr() as *mut f64,
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        // SAFETY: `len` initialized (zeroed) f64 values live at an aligned pointer.
        unsafe { std::slice::from_raw_parts(self.as_ptr(), self.len) }
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        let len = self.len;
        // SAFETY: as above, with exclusive access through &mut self.
        unsafe { std::slice::from_raw_parts_mut(self.as_mut_ptr(), len) }
    }

    pub fn fill(&mut self, v: f64) {
        self.as_mut_slice().fill(v);
    }

    pub fn copy_from(&mut self, src: &[f64]) -> Result<(), RuntimeError> {
        if src.len() != self.len {
            return Err(RuntimeError::ShapeMismatch {
                name: "buffer".into(),
                expected: self.shape.clone(),
                found: vec![src.len()],
            });
        }
        self.as_mut_slice().copy_from_slice(src);
        Ok(())
    }

    /// Contiguous sub-array at `index` along the leading dimension.
    pub fn slab(&self, index: usize) -> &[f64] {
        let n = self.len / self.shape[0];
        &self.as_slice()[index * n..(index + 1) * n]
    }

    pub fn slab_mut(&mut self, index: usize) -> &mut [f64] {
        let n = self.len / self.shape[0];
        &mut self.as_mut_slice()[index * n..(index + 1) * n]
    }

    /// Deep copy on the heap (or spilled, under the automatic policy).
    pub fn duplicate(&self) -> Result<Self, RuntimeError> {
        let mut b = Self::allocate(&self.shape, self.alignment, Backing::Auto)?;
        b.as_mut_slice().copy_from_slice(self.as_slice());
        Ok(b)
    }

    /// Flushes a file-backed buffer to disk; no-op on the heap.
    pub fn flush(&self) -> Result<(), RuntimeError> {
        match &self.storage {
            #[cfg(feature = "jit")]
            Storage::Mapped { map, .. } => map.flush().map_err(|e| RuntimeError::Io(e.to_string())),
            _ => Ok(()),
        }
    }
}

impl Drop for GridBuffer {
    fn drop(&mut self) {
        match &self.storage {
            Storage::Heap { ptr, layout } => {
                // SAFETY: allocated with this layout in `allocate`.
                unsafe { alloc::dealloc(ptr.as_ptr() as *mut u8, *layout) }
            }
            #[cfg(feature = "jit")]
            Storage::Mapped { map, .. } => {
                let _ = map.flush();
            }
        }
    }
}

impl std::fmt::Debug for GridBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridBuffer")
            .field("shape", &self.shape)
            .field("alignment", &self.alignment)
            .field("file_backed", &self.is_file_backed())
            .finish()
    }
}

#[cfg(feature = "jit")]
fn file_backing_default() -> Backing {
    Backing::File(None)
}

#[cfg(not(feature = "jit"))]
fn file_backing_default() -> Backing {
    Backing::Heap
}

#[cfg(feature = "jit")]
fn map_file(
    bytes: usize,
    alignment: usize,
    dir: Option<std::path::PathBuf>,
) -> Result<Storage, RuntimeError> {
    let io = |e: std::io::Error| RuntimeError::Io(e.to_string());
    let file = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new(),
    }
    .map_err(io)?;
    file.as_file().set_len(bytes as u64).map_err(io)?;
    // SAFETY: the file is private to this buffer and outlives the mapping.
    let map = unsafe { memmap2::MmapMut::map_mut(file.as_file()) }.map_err(io)?;
    if !(map.as_ptr() as usize).is_multiple_of(alignment) {
        return Err(RuntimeError::Alignment(alignment));
    }
    Ok(Storage::Mapped { map, file })
}

/// Bytes of memory currently available, from `/proc/meminfo`.
pub fn available_memory() -> Option<usize> {
    let text = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = text.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: usize = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn should_spill(bytes: usize) -> bool {
    match available_memory() {
        Some(avail) => bytes as f64 > 0.75 * avail as f64,
        None => false,
    }
}
