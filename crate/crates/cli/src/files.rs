//! File helpers that attach paths to errors.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use spadfusion_core::config::KeyValues;
use spadfusion_core::datacube::{self, Pixel};
use spadfusion_core::{Cube, Image, Measurement};

use crate::error::{file_err, io_err, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

pub fn read_config(path: &Path) -> CliResult<KeyValues> {
    KeyValues::parse(&read_text(path)?).map_err(file_err(path))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(io_err(path))?))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn flush(mut w: BufWriter<File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(io_err(path))
}

pub fn read_cube(path: &Path) -> CliResult<Cube> {
    datacube::read_cube(open(path)?).map_err(file_err(path))
}

pub fn write_cube(cube: &Cube, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    datacube::write_cube(cube, &mut w).map_err(file_err(path))?;
    flush(w, path)
}

pub fn read_image(path: &Path) -> CliResult<Image> {
    datacube::read_image(open(path)?).map_err(file_err(path))
}

pub fn write_image(image: &Image, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    datacube::write_image(image, &mut w).map_err(file_err(path))?;
    flush(w, path)
}

/// Sidecar listing dead pixels next to a measurement cube.
pub fn dead_sidecar(measurement: &Path) -> PathBuf {
    measurement.with_extension("dead.csv")
}

pub fn read_dead(path: &Path) -> CliResult<BTreeSet<Pixel>> {
    datacube::read_dead_pixels(open(path)?).map_err(file_err(path))
}

pub fn write_dead(dead: &BTreeSet<Pixel>, path: &Path) -> CliResult<()> {
    let mut w = create(path)?;
    datacube::write_dead_pixels(dead, &mut w).map_err(file_err(path))?;
    flush(w, path)
}

/// Reads a measurement and, if present, its dead-pixel sidecar.
pub fn read_measurement(path: &Path, dead: Option<&Path>) -> CliResult<(Measurement, Option<PathBuf>)> {
    let sidecar = match dead {
        Some(p) => Some(p.to_path_buf()),
        None => Some(dead_sidecar(path)).filter(|p| p.exists()),
    };
    let dead = match &sidecar {
        Some(p) => read_dead(p)?,
        None => BTreeSet::new(),
    };
    let meas = datacube::read_measurement(open(path)?, dead).map_err(file_err(path))?;
    Ok((meas, sidecar))
}

pub fn write_measurement(meas: &Measurement, path: &Path) -> CliResult<PathBuf> {
    let mut w = create(path)?;
    datacube::write_measurement(meas, &mut w).map_err(file_err(path))?;
    flush(w, path)?;
    let sidecar = dead_sidecar(path);
    write_dead(meas.dead_pixels(), &sidecar)?;
    Ok(sidecar)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// `metric,value` lines.
pub fn metrics_csv(rows: &[(&str, String)]) -> String {
    let mut out = String::from("metric,value\n");
    for (k, v) in rows {
        out.push_str(k);
        out.push(',');
        out.push_str(v);
        out.push('\n');
    }
    out
}
