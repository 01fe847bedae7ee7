use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Arc;

use crate::design::{AnnulusMask, DesignImage};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DGDS";
const VERSION: u32 = 1;
const HEADER_LEN: u64 = 16;

/// c1/c2 index value marking the reference-image record of a grid.
pub const SENTINEL_IDX: u8 = 255;

fn record_len(g: usize) -> u64 {
    4 + 1 + 1 + 4 + 4 * (g as u64) * (g as u64)
}

#[derive(Debug, Clone, Copy)]
struct IndexEntry {
    offset: u64,
    count: u32,
}

/// Append-only writer for the design-grid dataset.
///
/// Layout (little-endian): header {magic "DGDS", version, G, reference
/// count}, then fixed-size records {reference id: u32, c1 index: u8, c2
/// index: u8, compliance: f32, G^2 f32 densities}, then an index block
/// mapping reference id -> record offsets, then the index block offset as
/// the trailing u64. A complete reference owns 121 grid records plus one
/// sentinel record (c1 = c2 = 255) holding the reference image itself.
pub struct StoreWriter {
    file: File,
    g: usize,
    next_offset: u64,
    index: BTreeMap<u32, IndexEntry>,
}

impl StoreWriter {
    /// Creates a new store, truncating any existing file.
    pub fn create(path: &Path, g: usize) -> Result<Self> {
        let mut file = File::create(path)?;
        file.write_all(MAGIC)?;
        file.write_all(&VERSION.to_le_bytes())?;
        file.write_all(&(g as u32).to_le_bytes())?;
        file.write_all(&0u32.to_le_bytes())?;
        Ok(Self {
            file,
            g,
            next_offset: HEADER_LEN,
            index: BTreeMap::new(),
        })
    }

    /// Opens an existing store for appending (creating it when absent).
    /// Incomplete trailing data from an interrupted run — a partial record
    /// or a trailing reference with fewer than 122 records — is discarded so
    /// each reference keeps one contiguous record span.
    pub fn open_or_create(path: &Path, g: usize) -> Result<Self> {
        if !path.exists() {
            return Self::create(path, g);
        }
        let (mut index, mut data_end, file_g) = scan(path)?;
        if file_g != g {
            return Err(Error::Format(format!(
                "store resolution {file_g} does not match requested {g}"
            )));
        }
        let rl = record_len(g);
        while let Some((&id, &e)) = index.iter().max_by_key(|(_, e)| e.offset) {
            if e.count == 122 {
                break;
            }
            if e.offset + u64::from(e.count) * rl != data_end {
                return Err(Error::Format(format!(
                    "reference {id} is incomplete but not at the end of the store"
                )));
            }
            data_end = e.offset;
            index.remove(&id);
        }
        let file = OpenOptions::new().read(true).write(true).open(path)?;
        file.set_len(data_end)?;
        let mut w = Self {
            file,
            g,
            next_offset: data_end,
            index,
        };
        w.file.seek(SeekFrom::End(0))?;
        Ok(w)
    }

    pub fn resolution(&self) -> usize {
        self.g
    }

    /// Record count currently attributed to a reference.
    pub fn record_count(&self, ref_id: u32) -> u32 {
        self.index.get(&ref_id).map_or(0, |e| e.count)
    }

    /// True when the reference owns its full 121 + sentinel records.
    pub fn is_complete(&self, ref_id: u32) -> bool {
        self.record_count(ref_id) == 122
    }

    /// Appends one record. Records of one reference must be appended
    /// contiguously (the index keeps a single span per reference).
    pub fn append(
        &mut self,
        ref_id: u32,
        c1_idx: u8,
        c2_idx: u8,
        compliance: f32,
        design: &DesignImage,
    ) -> Result<()> {
        if design.resolution() != self.g {
            return Err(Error::ShapeMismatch(format!(
                "design resolution {} vs store {}",
                design.resolution(),
                self.g
            )));
        }
        let mut buf = Vec::with_capacity(record_len(self.g) as usize);
        buf.extend_from_slice(&ref_id.to_le_bytes());
        buf.push(c1_idx);
        buf.push(c2_idx);
        buf.extend_from_slice(&compliance.to_le_bytes());
        for &v in design.pixels() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let entry = self.index.entry(ref_id).or_insert(IndexEntry {
            offset: self.next_offset,
            count: 0,
        });
        if entry.offset + u64::from(entry.count) * record_len(self.g) != self.next_offset {
            return Err(Error::Format(format!(
                "records of reference {ref_id} must be appended contiguously"
            )));
        }
        self.file.write_all(&buf)?;
        entry.count += 1;
        self.next_offset += record_len(self.g);
        Ok(())
    }

    /// Writes the index block and header counts; the store is readable
    /// afterwards.
    pub fn finalize(mut self) -> Result<()> {
        self.file.flush()?;
        let index_offset = self.next_offset;
        let mut w = BufWriter::new(&mut self.file);
        w.seek(SeekFrom::Start(index_offset))?;
        w.write_all(&(self.index.len() as u32).to_le_bytes())?;
        for (id, e) in &self.index {
            w.write_all(&id.to_le_bytes())?;
            w.write_all(&e.offset.to_le_bytes())?;
            w.write_all(&e.count.to_le_bytes())?;
        }
        w.write_all(&index_offset.to_le_bytes())?;
        w.flush()?;
        drop(w);
        self.file.seek(SeekFrom::Start(12))?;
        self.file
            .write_all(&(self.index.len() as u32).to_le_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

/// Reads the header, index (via the trailing offset, falling back to a
/// record scan when the index is missing), and returns (index, end of
/// record data, G).
fn scan(path: &Path) -> Result<(BTreeMap<u32, IndexEntry>, u64, usize)> {
    let mut f = BufReader::new(File::open(path)?);
    let mut head = [0u8; 16];
    f.read_exact(&mut head)
        .map_err(|_| Error::Format("store shorter than header".into()))?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format("bad magic, not a DGDS store".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported store version {version}")));
    }
    let g = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let file_len = std::fs::metadata(path)?.len();
    let rl = record_len(g);

    // Try the trailing index pointer first.
    if file_len >= HEADER_LEN + 8 {
        let mut fr = File::open(path)?;
        fr.seek(SeekFrom::End(-8))?;
        let mut off = [0u8; 8];
        fr.read_exact(&mut off)?;
        let index_offset = u64::from_le_bytes(off);
        if index_offset >= HEADER_LEN
            && index_offset < file_len
            && (index_offset - HEADER_LEN) % rl == 0
        {
            fr.seek(SeekFrom::Start(index_offset))?;
            let mut cnt = [0u8; 4];
            if fr.read_exact(&mut cnt).is_ok() {
                let n = u32::from_le_bytes(cnt) as u64;
                if index_offset + 4 + n * 16 + 8 == file_len {
                    let mut index = BTreeMap::new();
                    let mut ok = true;
                    let mut buf = [0u8; 16];
                    for _ in 0..n {
                        fr.read_exact(&mut buf)?;
                        let id = u32::from_le_bytes(buf[0..4].try_into().unwrap());
                        let offset = u64::from_le_bytes(buf[4..12].try_into().unwrap());
                        let count = u32::from_le_bytes(buf[12..16].try_into().unwrap());
                        if offset < HEADER_LEN || (offset - HEADER_LEN) % rl != 0 {
                            ok = false;
                            break;
                        }
                        index.insert(id, IndexEntry { offset, count });
                    }
                    if ok {
                        return Ok((index, index_offset, g));
                    }
                }
            }
        }
    }

    // No valid index (interrupted run): scan fixed-size records.
    let mut index: BTreeMap<u32, IndexEntry> = BTreeMap::new();
    let mut fr = BufReader::new(File::open(path)?);
    fr.seek(SeekFrom::Start(HEADER_LEN))?;
    let mut offset = HEADER_LEN;
    let mut idbuf = [0u8; 4];
    while offset + rl <= file_len {
        fr.read_exact(&mut idbuf)?;
        let id = u32::from_le_bytes(idbuf);
        fr.seek(SeekFrom::Current(rl as i64 - 4))?;
        let e = index.entry(id).or_insert(IndexEntry { offset, count: 0 });
        e.count += 1;
        let _ = e;
        offset += rl;
    }
    Ok((index, offset, g))
}

/// One reference's complete grid, densities in memory.
#[derive(Debug, Clone)]
pub struct RefGrid {
    pub ref_id: u32,
    pub reference: DesignImage,
    /// 121 designs, index = c1_idx * 11 + c2_idx.
    pub designs: Vec<DesignImage>,
    /// Compliance per design, same indexing.
    pub compliances: Vec<f64>,
    /// Compliance stored on the sentinel record (reference under c2 = 0).
    pub reference_compliance: f64,
}

/// Random-access reader over a finalized (or recovered) store.
pub struct StoreReader {
    file: File,
    g: usize,
    index: BTreeMap<u32, IndexEntry>,
}

impl StoreReader {
    pub fn open(path: &Path) -> Result<Self> {
        let (index, _, g) = scan(path)?;
        Ok(Self {
            file: File::open(path)?,
            g,
            index,
        })
    }

    pub fn resolution(&self) -> usize {
        self.g
    }

    pub fn reference_ids(&self) -> Vec<u32> {
        self.index.keys().copied().collect()
    }

    pub fn is_complete(&self, ref_id: u32) -> bool {
        self.index.get(&ref_id).map_or(0, |e| e.count) == 122
    }

    /// Loads a complete reference grid.
    pub fn load_grid(&mut self, ref_id: u32, mask: &Arc<AnnulusMask>) -> Result<RefGrid> {
        if mask.resolution() != self.g {
            return Err(Error::ShapeMismatch("mask/store resolution".into()));
        }
        let e = *self
            .index
            .get(&ref_id)
            .ok_or_else(|| Error::MissingCache(format!("reference {ref_id} not in store")))?;
        if e.count != 122 {
            return Err(Error::MissingCache(format!(
                "reference {ref_id} incomplete: {} records",
                e.count
            )));
        }
        let rl = record_len(self.g);
        self.file.seek(SeekFrom::Start(e.offset))?;
        let mut buf = vec![0u8; (rl * 122) as usize];
        self.file.read_exact(&mut buf)?;

        let mut reference = None;
        let mut ref_compliance = 0.0f64;
        let mut designs: Vec<Option<DesignImage>> = vec![None; 121];
        let mut compliances = vec![0.0f64; 121];
        for r in 0..122 {
            let rec = &buf[(r as usize) * rl as usize..];
            let id = u32::from_le_bytes(rec[0..4].try_into().unwrap());
            if id != ref_id {
                return Err(Error::Format(format!(
                    "record {r} of reference {ref_id} belongs to {id}"
                )));
            }
            let c1 = rec[4];
            let c2 = rec[5];
            let compliance = f32::from_le_bytes(rec[6..10].try_into().unwrap()) as f64;
            let mut grid = Vec::with_capacity(self.g * self.g);
            for k in 0..self.g * self.g {
                grid.push(f32::from_le_bytes(
                    rec[10 + 4 * k..14 + 4 * k].try_into().unwrap(),
                ));
            }
            let img = DesignImage::from_grid(mask.clone(), grid)?;
            if c1 == SENTINEL_IDX && c2 == SENTINEL_IDX {
                reference = Some(img);
                ref_compliance = compliance;
            } else if c1 < 11 && c2 < 11 {
                compliances[c1 as usize * 11 + c2 as usize] = compliance;
                designs[c1 as usize * 11 + c2 as usize] = Some(img);
            } else {
                return Err(Error::Format(format!("record with indices ({c1},{c2})")));
            }
        }
        let reference =
            reference.ok_or_else(|| Error::Format("grid missing sentinel record".into()))?;
        let designs: Option<Vec<DesignImage>> = designs.into_iter().collect();
        let designs =
            designs.ok_or_else(|| Error::Format("grid missing a (c1,c2) record".into()))?;
        Ok(RefGrid {
            ref_id,
            reference,
            designs,
            compliances,
            reference_compliance: ref_compliance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{generate_reference, ReferenceSpec};

    fn tiny_design(mask: &Arc<AnnulusMask>, salt: u32) -> DesignImage {
        DesignImage::from_fn(mask.clone(), |r, c| {
            (((r as u32 * 31 + c as u32 * 7 + salt) % 11) as f32) / 10.0
        })
    }

    #[test]
    fn roundtrip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grids.dgds");
        let mask = AnnulusMask::standard(32);
        let xref = generate_reference(
            &ReferenceSpec {
                spoke_count: 4,
                spoke_width: 3.0,
                twist: 0.0,
                hole_pattern: None,
                seed: 2,
            },
            &mask,
        )
        .unwrap();

        let mut w = StoreWriter::create(&path, 32).unwrap();
        w.append(7, SENTINEL_IDX, SENTINEL_IDX, 3.25, &xref).unwrap();
        for i in 0..11u8 {
            for j in 0..11u8 {
                w.append(7, i, j, (i as f32) + (j as f32) / 16.0, &tiny_design(&mask, (i * 11 + j) as u32))
                    .unwrap();
            }
        }
        assert!(w.is_complete(7));
        w.finalize().unwrap();

        let mut r = StoreReader::open(&path).unwrap();
        assert_eq!(r.reference_ids(), vec![7]);
        let grid = r.load_grid(7, &mask).unwrap();
        assert_eq!(grid.reference.pixels(), xref.pixels());
        assert_eq!(grid.reference_compliance, 3.25);
        assert_eq!(
            grid.designs[3 * 11 + 4].pixels(),
            tiny_design(&mask, 37).pixels()
        );
        assert_eq!(grid.compliances[2 * 11 + 9], 2.0 + 9.0 / 16.0);

        // Append another reference after reopening.
        let mut w = StoreWriter::open_or_create(&path, 32).unwrap();
        assert!(w.is_complete(7));
        assert!(!w.is_complete(8));
        w.append(8, SENTINEL_IDX, SENTINEL_IDX, 1.0, &xref).unwrap();
        for i in 0..11u8 {
            for j in 0..11u8 {
                w.append(8, i, j, 0.0, &tiny_design(&mask, 1000 + (i * 11 + j) as u32))
                    .unwrap();
            }
        }
        w.finalize().unwrap();
        let mut r = StoreReader::open(&path).unwrap();
        assert_eq!(r.reference_ids(), vec![7, 8]);
        let g7 = r.load_grid(7, &mask).unwrap();
        assert_eq!(g7.designs[0].pixels(), tiny_design(&mask, 0).pixels());
    }

    #[test]
    fn recovers_from_missing_index_and_partial_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grids.dgds");
        let mask = AnnulusMask::standard(32);
        let mut w = StoreWriter::create(&path, 32).unwrap();
        for k in 0..5u8 {
            w.append(1, k, 0, 0.5, &tiny_design(&mask, k as u32)).unwrap();
        }
        // Drop without finalize, then truncate mid-record.
        drop(w);
        let len = std::fs::metadata(&path).unwrap().len();
        let f = OpenOptions::new().write(true).open(&path).unwrap();
        f.set_len(len - 100).unwrap();
        drop(f);

        // The partial trailing group is discarded entirely so the reference
        // can be regenerated with a contiguous span.
        let w = StoreWriter::open_or_create(&path, 32).unwrap();
        assert_eq!(w.record_count(1), 0);
    }

    #[test]
    fn rejects_corrupt_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.dgds");
        std::fs::write(&path, b"NOPE0000000000000000").unwrap();
        assert!(matches!(StoreReader::open(&path), Err(Error::Format(_))));
    }
}
