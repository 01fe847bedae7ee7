use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::design::image::DesignImage;
use crate::design::mask::AnnulusMask;
use crate::error::{Error, Result};

/// Writes the image as binary PGM (P5), gray = round(density * 255).
pub fn write_pgm(img: &DesignImage, path: &Path) -> Result<()> {
    let g = img.resolution();
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{g} {g}\n255\n")?;
    let bytes: Vec<u8> = img
        .pixels()
        .iter()
        .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    f.write_all(&bytes)?;
    Ok(())
}

/// Reads a binary PGM (P5) written by [`write_pgm`]; density = gray / 255.
/// The mask invariants are re-imposed on load.
pub fn read_pgm(path: &Path, mask: Arc<AnnulusMask>) -> Result<DesignImage> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut header = Vec::new();
    // magic, dimensions, maxval: three whitespace-separated tokens after P5.
    let mut tokens = Vec::new();
    while tokens.len() < 4 {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Format("truncated PGM header".into()));
        }
        let body = line.split('#').next().unwrap_or("");
        tokens.extend(body.split_whitespace().map(String::from));
        header.push(line);
    }
    if tokens[0] != "P5" {
        return Err(Error::Format(format!("not a P5 PGM: magic {}", tokens[0])));
    }
    let w: usize = tokens[1].parse().map_err(|_| Error::Format("bad width".into()))?;
    let h: usize = tokens[2].parse().map_err(|_| Error::Format("bad height".into()))?;
    let maxval: usize = tokens[3].parse().map_err(|_| Error::Format("bad maxval".into()))?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}")));
    }
    let g = mask.resolution();
    if w != g || h != g {
        return Err(Error::ShapeMismatch(format!(
            "PGM is {w}x{h}, mask expects {g}x{g}"
        )));
    }
    let mut bytes = vec![0u8; w * h];
    reader.read_exact(&mut bytes)?;
    DesignImage::from_grid(mask, bytes.iter().map(|&b| b as f32 / 255.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::reference::{generate_reference, ReferenceSpec};

    #[test]
    fn roundtrip_binary_design() {
        let mask = AnnulusMask::standard(64);
        let img = generate_reference(
            &ReferenceSpec {
                spoke_count: 6,
                spoke_width: 3.5,
                twist: 30.0,
                hole_pattern: None,
                seed: 3,
            },
            &mask,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.pgm");
        write_pgm(&img, &path).unwrap();
        let back = read_pgm(&path, mask).unwrap();
        assert_eq!(back.pixels(), img.pixels());
    }
}
