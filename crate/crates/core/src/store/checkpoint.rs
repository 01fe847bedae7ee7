use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DGCK";
const VERSION: u32 = 1;

/// One named tensor in a checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorEntry {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

/// Writes a checkpoint: header {magic "DGCK", version, entry count}, then
/// per entry {name length, name bytes, rank, dims, float32 payload},
/// little-endian throughout.
pub fn save_checkpoint(path: &Path, entries: &[TensorEntry]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for e in entries {
        let expect: usize = e.dims.iter().product();
        if expect != e.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor {}: {} values for dims {:?}",
                e.name,
                e.values.len(),
                e.dims
            )));
        }
        let name = e.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(e.dims.len() as u32).to_le_bytes())?;
        for &d in &e.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in &e.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Vec<TensorEntry>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 12];
    r.read_exact(&mut head)
        .map_err(|_| Error::Format("checkpoint shorter than header".into()))?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format("bad magic, not a DGCK checkpoint".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = u32::from_le_bytes(head[8..12].try_into().unwrap());
    let mut out = Vec::with_capacity(count as usize);
    let mut u32buf = [0u8; 4];
    for _ in 0..count {
        r.read_exact(&mut u32buf)?;
        let name_len = u32::from_le_bytes(u32buf) as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Format("tensor name".into()))?;
        r.read_exact(&mut u32buf)?;
        let rank = u32::from_le_bytes(u32buf) as usize;
        if rank > 8 {
            return Err(Error::Format(format!("tensor {name} rank {rank}")));
        }
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            r.read_exact(&mut u32buf)?;
            dims.push(u32::from_le_bytes(u32buf) as usize);
        }
        let n: usize = dims.iter().product();
        let mut payload = vec![0u8; 4 * n];
        r.read_exact(&mut payload)?;
        let values = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        out.push(TensorEntry { name, dims, values });
    }
    Ok(out)
}
