//! Portable float map (PFM) reader and writer.
//!
//! Header is "PF" (color) or "Pf" (grayscale), then "{W} {H}", then the
//! scale line whose sign encodes endianness (negative = little-endian).
//! Rows are stored bottom-up; the in-memory representation here is top-down,
//! so both directions flip rows.

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    /// Top-down, channel-interleaved row-major samples.
    pub data: Vec<f32>,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
}

/// Write little-endian PFM (scale -1.0).
pub fn write_pfm(path: &Path, image: &PfmImage) -> Result<()> {
    if image.channels != 1 && image.channels != 3 {
        return Err(Error::InvalidArgument(format!(
            "PFM supports 1 or 3 channels, got {}",
            image.channels
        )));
    }
    if image.data.len() != image.width * image.height * image.channels {
        return Err(Error::ShapeMismatch {
            op: "write_pfm",
            detail: format!(
                "{}x{}x{} needs {} samples, got {}",
                image.height,
                image.width,
                image.channels,
                image.width * image.height * image.channels,
                image.data.len()
            ),
        });
    }
    let mut bytes = Vec::with_capacity(32 + image.data.len() * 4);
    bytes.extend_from_slice(if image.channels == 3 { b"PF\n" } else { b"Pf\n" });
    bytes.extend_from_slice(format!("{} {}\n", image.width, image.height).as_bytes());
    bytes.extend_from_slice(b"-1.0\n");
    let row_samples = image.width * image.channels;
    for row in (0..image.height).rev() {
        for v in &image.data[row * row_samples..(row + 1) * row_samples] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: &Path) -> Result<PfmImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|e| Error::io(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    parse_pfm(&bytes, path)
}

fn parse_pfm(bytes: &[u8], path: &Path) -> Result<PfmImage> {
    let bad = |detail: String| Error::FileFormat {
        format: "PFM",
        path: path.to_path_buf(),
        detail,
    };
    fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a str> {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return None;
        }
        let s = std::str::from_utf8(&bytes[start..*pos]).ok();
        // consume exactly one whitespace byte after the token
        if *pos < bytes.len() {
            *pos += 1;
        }
        s
    }

    let mut pos = 0usize;
    let magic = token(bytes, &mut pos).ok_or_else(|| bad("missing magic".into()))?;
    let channels = match magic {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(bad(format!("bad magic '{other}'"))),
    };
    let width: usize = token(bytes, &mut pos)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("bad width".into()))?;
    let height: usize = token(bytes, &mut pos)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("bad height".into()))?;
    let scale: f32 = token(bytes, &mut pos)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("bad scale".into()))?;
    if scale == 0.0 {
        return Err(bad("scale must be non-zero".into()));
    }
    let little_endian = scale < 0.0;

    let n = width * height * channels;
    let payload = &bytes[pos..];
    if payload.len() < n * 4 {
        return Err(bad(format!(
            "truncated payload: need {} bytes, have {}",
            n * 4,
            payload.len()
        )));
    }
    let mut flat = Vec::with_capacity(n);
    for chunk in payload[..n * 4].chunks_exact(4) {
        let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
        flat.push(if little_endian { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) });
    }
    // file rows are bottom-up; flip to top-down
    let row_samples = width * channels;
    let mut data = Vec::with_capacity(n);
    for row in (0..height).rev() {
        data.extend_from_slice(&flat[row * row_samples..(row + 1) * row_samples]);
    }
    Ok(PfmImage { data, width, height, channels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn roundtrip_is_bit_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let img = PfmImage {
            data: (0..5 * 4 * 3).map(|_| rng.random::<f32>() * 100.0).collect(),
            width: 5,
            height: 4,
            channels: 3,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pfm");
        write_pfm(&path, &img).unwrap();
        let back = read_pfm(&path).unwrap();
        assert_eq!(back, img);
        for (a, b) in back.data.iter().zip(&img.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn big_endian_fixture_parses() {
        // hand-built 2x2 grayscale big-endian file (positive scale),
        // bottom row first in the payload
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"Pf\n2 2\n1.0\n");
        let bottom = [3.0f32, 4.0];
        let top = [1.0f32, 2.0];
        for v in bottom.iter().chain(&top) {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let img = parse_pfm(&bytes, Path::new("fixture.pfm")).unwrap();
        assert_eq!(img.width, 2);
        assert_eq!(img.height, 2);
        assert_eq!(img.channels, 1);
        assert_eq!(img.data, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"Pf\n2 2\n-1.0\n");
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        assert!(parse_pfm(&bytes, Path::new("short.pfm")).is_err());
    }

    #[test]
    fn bad_magic_is_an_error() {
        assert!(parse_pfm(b"P6\n2 2\n-1.0\n", Path::new("bad.pfm")).is_err());
    }
}
