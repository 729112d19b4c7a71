//! TRCB cube streams, dead-pixel sidecars and map exports.
//!
//! TRCB layout (little-endian): `"TRCB"`, u16 version = 1, u16 dtype = 1
//! (binary32), u32 height, u32 width, u32 bins, u32 reserved = 0,
//! f64 bin width in picoseconds, then `height·width·bins` binary32 values in
//! bin-major order.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read, Write};

use super::{IntensityImage, Pixel, ScalarMap, SpadMeasurement, TransientCube};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

const MAGIC: &[u8; 4] = b"TRCB";
const VERSION: u16 = 1;
const DTYPE_F32: u16 = 1;

/// Fixed part of a TRCB stream preceding the bin width.
pub const TRCB_HEADER_LEN: usize = 24;

pub fn write_cube<T: Real, W: Write>(cube: &TransientCube<T>, mut sink: W) -> Result<()> {
    let mut header = Vec::with_capacity(TRCB_HEADER_LEN + 8);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&DTYPE_F32.to_le_bytes());
    for dim in [cube.height(), cube.width(), cube.bins()] {
        let dim = u32::try_from(dim).map_err(|_| invalid("dimension exceeds u32"))?;
        header.extend_from_slice(&dim.to_le_bytes());
    }
    header.extend_from_slice(&0u32.to_le_bytes());
    header.extend_from_slice(&cube.bin_width_ps().to_le_bytes());
    sink.write_all(&header)?;

    let mut payload = Vec::with_capacity(4 * cube.as_slice().len());
    for v in cube.as_slice() {
        payload.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    sink.write_all(&payload)?;
    sink.flush()?;
    Ok(())
}

pub fn read_cube<T: Real, R: Read>(mut source: R) -> Result<TransientCube<T>> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 4 {
        return Err(Error::PayloadMismatch { expected: TRCB_HEADER_LEN + 8, found: bytes.len() });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if &magic != MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes.len() < TRCB_HEADER_LEN + 8 {
        return Err(Error::PayloadMismatch { expected: TRCB_HEADER_LEN + 8, found: bytes.len() });
    }
    let u16_at = |i: usize| u16::from_le_bytes(bytes[i..i + 2].try_into().unwrap());
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());

    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::Unsupported { what: "version", value: version.into() });
    }
    let dtype = u16_at(6);
    if dtype != DTYPE_F32 {
        return Err(Error::Unsupported { what: "dtype", value: dtype.into() });
    }
    let height = u32_at(8) as usize;
    let width = u32_at(12) as usize;
    let bins = u32_at(16) as usize;
    let bin_width_ps = f64::from_le_bytes(bytes[24..32].try_into().unwrap());

    let count =
        height.checked_mul(width).and_then(|v| v.checked_mul(bins)).ok_or_else(|| invalid("dimensions overflow"))?;
    let expected = TRCB_HEADER_LEN + 8 + 4 * count;
    if bytes.len() != expected {
        return Err(Error::PayloadMismatch { expected, found: bytes.len() });
    }

    let mut data = Vec::with_capacity(count);
    for (i, chunk) in bytes[TRCB_HEADER_LEN + 8..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if v < 0.0 {
            return Err(invalid(format!("negative value {v} at payload index {i}")));
        }
        data.push(T::of(v as f64));
    }
    TransientCube::new(height, width, bins, bin_width_ps, data)
}

/// Writes the measurement counts; dead pixels travel separately, see [`write_dead_pixels`].
pub fn write_measurement<T: Real, W: Write>(meas: &SpadMeasurement<T>, sink: W) -> Result<()> {
    write_cube(meas.cube(), sink)
}

pub fn read_measurement<T: Real, R: Read>(source: R, dead_pixels: BTreeSet<Pixel>) -> Result<SpadMeasurement<T>> {
    SpadMeasurement::from_cube(read_cube(source)?, dead_pixels)
}

/// `row,col` lines, sorted.
pub fn write_dead_pixels<W: Write>(dead: &BTreeSet<Pixel>, mut sink: W) -> Result<()> {
    let mut out = String::new();
    for (r, c) in dead {
        out.push_str(&format!("{r},{c}\n"));
    }
    sink.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_dead_pixels<R: Read>(source: R) -> Result<BTreeSet<Pixel>> {
    let mut dead = BTreeSet::new();
    for (idx, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse = |s: Option<&str>| s.and_then(|s| s.trim().parse::<usize>().ok());
        let mut parts = line.split(',');
        match (parse(parts.next()), parse(parts.next()), parts.next()) {
            (Some(r), Some(c), None) => {
                dead.insert((r, c));
            }
            _ => return Err(Error::Config { line: idx + 1, message: format!("expected `row,col`, got `{line}`") }),
        }
    }
    Ok(dead)
}

/// Images are stored as single-bin TRCB streams; the bin width field is unused (written as 1 ps).
pub fn write_image<T: Real, W: Write>(image: &IntensityImage<T>, sink: W) -> Result<()> {
    let cube = TransientCube::new(image.height(), image.width(), 1, 1.0, image.as_slice().to_vec())?;
    write_cube(&cube, sink)
}

pub fn read_image<T: Real, R: Read>(source: R) -> Result<IntensityImage<T>> {
    let cube: TransientCube<T> = read_cube(source)?;
    if cube.bins() != 1 {
        return Err(Error::DimensionMismatch(format!("intensity image stream must have 1 bin, found {}", cube.bins())));
    }
    IntensityImage::new(cube.height(), cube.width(), cube.into_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFormat {
    Csv,
    Pgm16,
}

/// CSV: one line per row, sentinel as an empty cell.
/// PGM16: binary `P5` with maxval 65535, min–max scaled, sentinel as 0.
pub fn export_map<W: Write>(map: &ScalarMap, mut sink: W, format: MapFormat) -> Result<()> {
    match format {
        MapFormat::Csv => {
            let mut out = String::new();
            for row in map.values().chunks(map.width()) {
                let cells: Vec<String> = row.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            sink.write_all(out.as_bytes())?;
        }
        MapFormat::Pgm16 => {
            let (lo, hi) = map
                .valid()
                .fold(None, |acc: Option<(f64, f64)>, v| match acc {
                    None => Some((v, v)),
                    Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
                })
                .ok_or(Error::EmptyMap)?;
            let mut out = format!("P5\n{} {}\n65535\n", map.width(), map.height()).into_bytes();
            for v in map.values() {
                let level = match v {
                    Some(x) if hi > lo => ((x - lo) / (hi - lo) * 65535.0).round() as u16,
                    _ => 0,
                };
                out.extend_from_slice(&level.to_be_bytes());
            }
            sink.write_all(&out)?;
        }
    }
    sink.flush()?;
    Ok(())
}

impl MapFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(MapFormat::Csv),
            "pgm16" | "pgm" => Some(MapFormat::Pgm16),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datacube::MapUnit;
    use proptest::prelude::*;

    fn roundtrip(cube: &TransientCube<f32>) -> TransientCube<f32> {
        let mut buf = Vec::new();
        write_cube(cube, &mut buf).unwrap();
        read_cube(buf.as_slice()).unwrap()
    }

    #[test]
    fn single_voxel_file_length() {
        let cube = TransientCube::<f32>::zeros(1, 1, 1, 55.0).unwrap();
        let mut buf = Vec::new();
        write_cube(&cube, &mut buf).unwrap();
        assert_eq!(buf.len(), TRCB_HEADER_LEN + 8 + 4);
        assert_eq!(&buf[0..4], b"TRCB");
        assert_eq!(roundtrip(&cube), cube);
    }

    #[test]
    fn header_records_dims_and_payload_size() {
        let cube = TransientCube::<f32>::zeros(96, 96, 64, 55.0).unwrap();
        let mut buf = Vec::new();
        write_cube(&cube, &mut buf).unwrap();
        assert_eq!(buf.len(), 24 + 8 + 4 * 96 * 96 * 64);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 96);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 96);
        assert_eq!(u32::from_le_bytes(buf[16..20].try_into().unwrap()), 64);
        assert_eq!(u32::from_le_bytes(buf[20..24].try_into().unwrap()), 0);
    }

    #[test]
    fn read_errors() {
        let cube = TransientCube::<f32>::new(2, 2, 2, 160.0, vec![1.0; 8]).unwrap();
        let mut buf = Vec::new();
        write_cube(&cube, &mut buf).unwrap();

        let truncated = &buf[..buf.len() - 3];
        let err = read_cube::<f32, _>(truncated).unwrap_err();
        assert!(err.to_string().contains("payload mismatch"), "{err}");

        let mut bad = buf.clone();
        bad[0..4].copy_from_slice(b"XXXX");
        let err = read_cube::<f32, _>(bad.as_slice()).unwrap_err();
        assert!(err.to_string().contains("bad magic"), "{err}");

        let mut v2 = buf.clone();
        v2[4] = 2;
        assert!(matches!(read_cube::<f32, _>(v2.as_slice()), Err(Error::Unsupported { .. })));

        let mut neg = buf.clone();
        let at = TRCB_HEADER_LEN + 8;
        neg[at..at + 4].copy_from_slice(&(-1.0f32).to_le_bytes());
        assert!(matches!(read_cube::<f32, _>(neg.as_slice()), Err(Error::InvalidValue(_))));
    }

    #[test]
    fn csv_export() {
        let map = ScalarMap::new(2, 2, MapUnit::TimeBin, vec![Some(1.0), Some(2.0), Some(3.0), Some(4.0)]).unwrap();
        let mut out = Vec::new();
        export_map(&map, &mut out, MapFormat::Csv).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1,2\n3,4\n");

        let map = ScalarMap::new(2, 2, MapUnit::TimeBin, vec![Some(1.0), None, Some(3.5), Some(4.0)]).unwrap();
        let mut out = Vec::new();
        export_map(&map, &mut out, MapFormat::Csv).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1,\n3.5,4\n");
    }

    #[test]
    fn pgm_export() {
        let constant = ScalarMap::new(2, 3, MapUnit::Nanoseconds, vec![Some(2.18); 6]).unwrap();
        let mut out = Vec::new();
        export_map(&constant, &mut out, MapFormat::Pgm16).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&out[..header.len()], header);
        assert!(out[header.len()..].iter().all(|&b| b == 0));
        assert_eq!(out.len(), header.len() + 12);

        let ramp = ScalarMap::new(1, 3, MapUnit::Nanoseconds, vec![Some(1.0), None, Some(3.0)]).unwrap();
        let mut out = Vec::new();
        export_map(&ramp, &mut out, MapFormat::Pgm16).unwrap();
        let px = &out[b"P5\n3 1\n65535\n".len()..];
        assert_eq!(px, &[0, 0, 0, 0, 0xff, 0xff]);

        let empty = ScalarMap::new(1, 2, MapUnit::Nanoseconds, vec![None, None]).unwrap();
        let err = export_map(&empty, Vec::new(), MapFormat::Pgm16).unwrap_err();
        assert_eq!(err.to_string(), "empty map");
    }

    #[test]
    fn dead_pixel_sidecar() {
        let dead: BTreeSet<Pixel> = [(3, 1), (0, 2)].into();
        let mut out = Vec::new();
        write_dead_pixels(&dead, &mut out).unwrap();
        assert_eq!(String::from_utf8(out.clone()).unwrap(), "0,2\n3,1\n");
        assert_eq!(read_dead_pixels(out.as_slice()).unwrap(), dead);
        assert!(matches!(read_dead_pixels("1;2\n".as_bytes()), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn image_stream_requires_one_bin() {
        let img = IntensityImage::<f32>::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        write_image(&img, &mut buf).unwrap();
        assert_eq!(read_image::<f32, _>(buf.as_slice()).unwrap(), img);
        let cube = TransientCube::<f32>::zeros(2, 2, 2, 1.0).unwrap();
        let mut buf = Vec::new();
        write_cube(&cube, &mut buf).unwrap();
        assert!(read_image::<f32, _>(buf.as_slice()).is_err());
    }

    proptest! {
        #[test]
        fn cube_roundtrip_is_bit_exact(
            (h, w, b) in (1usize..6, 1usize..6, 1usize..5),
            seed in any::<u64>(),
            bw in 1e-3f64..1e4,
        ) {
            let mut state = seed | 1;
            let data: Vec<f32> = (0..h * w * b).map(|_| {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                f32::from_bits((state as u32) & 0x7f7f_ffff)
            }).collect();
            let cube = TransientCube::new(h, w, b, bw, data).unwrap();
            let back = roundtrip(&cube);
            prop_assert_eq!(back.bin_width_ps().to_bits(), bw.to_bits());
            let same = back.as_slice().iter().zip(cube.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
            prop_assert!(same);
        }
    }
}
