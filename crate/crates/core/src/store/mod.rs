//! Persistence: the binary dataset store holding per-reference 121-design
//! grids, the tensor checkpoint format, and the reference-set manifest.

mod checkpoint;
mod dataset;
mod refset;

pub use checkpoint::{load_checkpoint, save_checkpoint, TensorEntry};
pub use dataset::{RefGrid, StoreReader, StoreWriter, SENTINEL_IDX};
pub use refset::{load_manifest, save_manifest, RefEntry, RefManifest, Split};
