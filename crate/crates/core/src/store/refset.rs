use std::io::Write;
use std::path::Path;

use crate::design::{HolePattern, ReferenceSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct RefEntry {
    pub id: u32,
    pub spec: ReferenceSpec,
    pub split: Split,
}

/// The reference-set manifest: resolution, generation seed, and one line
/// per reference with its full spec and train/test split.
#[derive(Debug, Clone)]
pub struct RefManifest {
    pub g: usize,
    pub seed: u64,
    pub entries: Vec<RefEntry>,
}

impl RefManifest {
    pub fn train_ids(&self) -> Vec<u32> {
        self.entries
            .iter()
            .filter(|e| e.split == Split::Train)
            .map(|e| e.id)
            .collect()
    }

    pub fn test_ids(&self) -> Vec<u32> {
        self.entries
            .iter()
            .filter(|e| e.split == Split::Test)
            .map(|e| e.id)
            .collect()
    }

    pub fn entry(&self, id: u32) -> Option<&RefEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// Plain-text manifest: `key = value` header lines, then one
/// whitespace-separated record per reference.
pub fn save_manifest(path: &Path, m: &RefManifest) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "g = {}", m.g)?;
    writeln!(f, "seed = {}", m.seed)?;
    writeln!(
        f,
        "# id spokes width twist holes_per_sector hole_radius spec_seed split"
    )?;
    for e in &m.entries {
        let (hps, hr) = match e.spec.hole_pattern {
            Some(h) => (h.per_sector, h.radius),
            None => (0, 0.0),
        };
        writeln!(
            f,
            "{} {} {} {} {} {} {} {}",
            e.id,
            e.spec.spoke_count,
            e.spec.spoke_width,
            e.spec.twist,
            hps,
            hr,
            e.spec.seed,
            match e.split {
                Split::Train => "train",
                Split::Test => "test",
            }
        )?;
    }
    Ok(())
}

pub fn load_manifest(path: &Path) -> Result<RefManifest> {
    let text = std::fs::read_to_string(path)?;
    let mut g = None;
    let mut seed = None;
    let mut entries = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            match k.trim() {
                "g" => g = Some(v.trim().parse().map_err(|_| bad(ln, "g"))?),
                "seed" => seed = Some(v.trim().parse().map_err(|_| bad(ln, "seed"))?),
                other => return Err(Error::Format(format!("manifest key {other:?}"))),
            }
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 8 {
            return Err(bad(ln, "record arity"));
        }
        let hps: u32 = t[4].parse().map_err(|_| bad(ln, "holes"))?;
        let hr: f64 = t[5].parse().map_err(|_| bad(ln, "hole radius"))?;
        entries.push(RefEntry {
            id: t[0].parse().map_err(|_| bad(ln, "id"))?,
            spec: ReferenceSpec {
                spoke_count: t[1].parse().map_err(|_| bad(ln, "spokes"))?,
                spoke_width: t[2].parse().map_err(|_| bad(ln, "width"))?,
                twist: t[3].parse().map_err(|_| bad(ln, "twist"))?,
                hole_pattern: (hps > 0).then_some(HolePattern {
                    per_sector: hps,
                    radius: hr,
                }),
                seed: t[6].parse().map_err(|_| bad(ln, "spec seed"))?,
            },
            split: match t[7] {
                "train" => Split::Train,
                "test" => Split::Test,
                _ => return Err(bad(ln, "split")),
            },
        });
    }
    Ok(RefManifest {
        g: g.ok_or_else(|| Error::Format("manifest missing g".into()))?,
        seed: seed.ok_or_else(|| Error::Format("manifest missing seed".into()))?,
        entries,
    })
}

fn bad(line: usize, what: &str) -> Error {
    Error::Format(format!("manifest line {}: bad {what}", line + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip() {
        let m = RefManifest {
            g: 64,
            seed: 42,
            entries: vec![
                RefEntry {
                    id: 0,
                    spec: ReferenceSpec {
                        spoke_count: 5,
                        spoke_width: 4.25,
                        twist: -30.0,
                        hole_pattern: Some(HolePattern {
                            per_sector: 1,
                            radius: 2.0,
                        }),
                        seed: 99,
                    },
                    split: Split::Train,
                },
                RefEntry {
                    id: 1,
                    spec: ReferenceSpec {
                        spoke_count: 3,
                        spoke_width: 5.0,
                        twist: 0.0,
                        hole_pattern: None,
                        seed: 7,
                    },
                    split: Split::Test,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("refs.manifest");
        save_manifest(&path, &m).unwrap();
        let back = load_manifest(&path).unwrap();
        assert_eq!(back.g, 64);
        assert_eq!(back.seed, 42);
        assert_eq!(back.entries.len(), 2);
        assert_eq!(back.entries[0].spec, m.entries[0].spec);
        assert_eq!(back.entries[1].split, Split::Test);
        assert_eq!(back.train_ids(), vec![0]);
        assert_eq!(back.test_ids(), vec![1]);
    }
}
