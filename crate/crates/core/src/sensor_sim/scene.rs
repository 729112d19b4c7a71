//! Scene descriptions and the renderer.
//!
//! Scene files use the [`crate::config`] grammar:
//!
//! ```text
//! kind = lidar            # or flim
//! height = 48
//! width = 48
//! bins = 32
//! bin_width_ps = 55
//! # lidar: rect.N  = [row0, col0, row1, col1, depth_bin, reflectivity]
//! #        plane.N = [row0, col0, row1, col1, depth_bin, depth_per_row, depth_per_col, reflectivity]
//! # flim:  region.N = [row0, col0, row1, col1, lifetime_ns, amplitude, arrival_bin]
//! ```
//!
//! Bounds are half-open pixel ranges. A plane's depth at `(r, c)` is
//! `depth_bin + (r - row0)·depth_per_row + (c - col0)·depth_per_col`.

use crate::config::{render, render_list, KeyValues};
use crate::datacube::TransientCube;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lifetime bounds in nanoseconds accepted for FLIM regions.
pub const LIFETIME_RANGE_NS: (f64, f64) = (1.0, 7.0);

/// Planar reflecting surface over a rectangle; depth in (fractional) time bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub depth: f64,
    pub depth_per_row: f64,
    pub depth_per_col: f64,
    pub reflectivity: f64,
}

impl Surface {
    pub fn rect(rows: (usize, usize), cols: (usize, usize), depth: f64, reflectivity: f64) -> Self {
        Self { rows, cols, depth, depth_per_row: 0.0, depth_per_col: 0.0, reflectivity }
    }

    pub fn depth_at(&self, row: usize, col: usize) -> f64 {
        self.depth
            + (row as f64 - self.rows.0 as f64) * self.depth_per_row
            + (col as f64 - self.cols.0 as f64) * self.depth_per_col
    }

    fn covers(&self, row: usize, col: usize) -> bool {
        (self.rows.0..self.rows.1).contains(&row) && (self.cols.0..self.cols.1).contains(&col)
    }
}

/// Rectangle of single-exponential decays starting at `arrival_bin`.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeRegion {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub lifetime_ns: f64,
    pub amplitude: f64,
    pub arrival_bin: usize,
}

impl LifetimeRegion {
    fn covers(&self, row: usize, col: usize) -> bool {
        (self.rows.0..self.rows.1).contains(&row) && (self.cols.0..self.cols.1).contains(&col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneContent {
    /// Overlaps resolve to the nearest surface.
    Lidar(Vec<Surface>),
    /// Overlaps resolve to the region listed last.
    Flim(Vec<LifetimeRegion>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub bins: usize,
    pub bin_width_ps: f64,
    pub content: SceneContent,
}

fn line_err(line: Option<usize>, message: impl Into<String>) -> Error {
    match line {
        Some(line) => Error::Config { line, message: message.into() },
        None => Error::InvalidValue(message.into()),
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        self.validate_with_lines(&|_| None)
    }

    fn validate_with_lines(&self, line_of: &dyn Fn(&str) -> Option<usize>) -> Result<()> {
        if self.height == 0 {
            return Err(line_err(line_of("height"), "height must be ≥ 1"));
        }
        if self.width == 0 {
            return Err(line_err(line_of("width"), "width must be ≥ 1"));
        }
        if self.bins == 0 {
            return Err(line_err(line_of("bins"), "bins must be ≥ 1"));
        }
        if !(self.bin_width_ps.is_finite() && self.bin_width_ps > 0.0) {
            return Err(line_err(line_of("bin_width_ps"), "bin_width_ps must be > 0"));
        }
        let check_rect = |key: &str, rows: (usize, usize), cols: (usize, usize)| -> Result<()> {
            if rows.0 >= rows.1 || cols.0 >= cols.1 || rows.1 > self.height || cols.1 > self.width {
                return Err(line_err(
                    line_of(key),
                    format!("{key}: rectangle {rows:?}×{cols:?} is empty or outside {}×{}", self.height, self.width),
                ));
            }
            Ok(())
        };
        match &self.content {
            SceneContent::Lidar(surfaces) => {
                for (i, s) in surfaces.iter().enumerate() {
                    let key = format!("surface {i}");
                    check_rect(&key, s.rows, s.cols)?;
                    if !(s.reflectivity.is_finite() && s.reflectivity >= 0.0) {
                        return Err(line_err(line_of(&key), format!("{key}: reflectivity must be ≥ 0")));
                    }
                    let corners = [
                        (s.rows.0, s.cols.0),
                        (s.rows.1 - 1, s.cols.0),
                        (s.rows.0, s.cols.1 - 1),
                        (s.rows.1 - 1, s.cols.1 - 1),
                    ];
                    for (r, c) in corners {
                        let depth = s.depth_at(r, c);
                        if !(depth.is_finite() && depth >= 0.0 && depth < self.bins as f64) {
                            return Err(line_err(
                                line_of(&key),
                                format!("{key}: depth {depth} at ({r}, {c}) outside [0, {})", self.bins),
                            ));
                        }
                    }
                }
            }
            SceneContent::Flim(regions) => {
                for (i, region) in regions.iter().enumerate() {
                    let key = format!("region {i}");
                    check_rect(&key, region.rows, region.cols)?;
                    let (lo, hi) = LIFETIME_RANGE_NS;
                    if !(region.lifetime_ns >= lo && region.lifetime_ns <= hi) {
                        return Err(line_err(
                            line_of(&key),
                            format!("{key}: lifetime {} ns outside [{lo}, {hi}]", region.lifetime_ns),
                        ));
                    }
                    if !(region.amplitude.is_finite() && region.amplitude >= 0.0) {
                        return Err(line_err(line_of(&key), format!("{key}: amplitude must be ≥ 0")));
                    }
                    if region.arrival_bin >= self.bins {
                        return Err(line_err(line_of(&key), format!("{key}: arrival bin must be < bins")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Parses and validates a scene file; errors carry line numbers.
    pub fn parse(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        Self::from_key_values(kv)
    }

    pub fn from_key_values(mut kv: KeyValues) -> Result<Self> {
        let original = kv.clone();
        let kind_line = kv.line_of("kind");
        let kind: String = kv.required("kind")?;
        let height = kv.required("height")?;
        let width = kv.required("width")?;
        let bins = kv.required("bins")?;
        let bin_width_ps = kv.required("bin_width_ps")?;

        // surface/region index → the key that defined it, for line lookups
        let mut owner_keys: Vec<String> = Vec::new();
        let content = match kind.as_str() {
            "lidar" => {
                let mut tagged = Vec::new();
                for prefix in ["rect", "plane"] {
                    for key in kv.indexed_keys(prefix)? {
                        let line = kv.line_of(&key).unwrap_or(0);
                        let v: Vec<f64> = kv.optional_list(&key)?.unwrap_or_default();
                        let surface = match (prefix, v.as_slice()) {
                            ("rect", &[r0, c0, r1, c1, depth, refl]) => Surface {
                                rows: (to_index(r0, &key, line)?, to_index(r1, &key, line)?),
                                cols: (to_index(c0, &key, line)?, to_index(c1, &key, line)?),
                                depth,
                                depth_per_row: 0.0,
                                depth_per_col: 0.0,
                                reflectivity: refl,
                            },
                            ("plane", &[r0, c0, r1, c1, depth, dr, dc, refl]) => Surface {
                                rows: (to_index(r0, &key, line)?, to_index(r1, &key, line)?),
                                cols: (to_index(c0, &key, line)?, to_index(c1, &key, line)?),
                                depth,
                                depth_per_row: dr,
                                depth_per_col: dc,
                                reflectivity: refl,
                            },
                            _ => {
                                let n = if prefix == "rect" { 6 } else { 8 };
                                return Err(Error::Config {
                                    line,
                                    message: format!("`{key}` needs {n} values, got {}", v.len()),
                                });
                            }
                        };
                        tagged.push((line, key, surface));
                    }
                }
                tagged.sort_by_key(|(line, _, _)| *line);
                owner_keys = tagged.iter().map(|(_, k, _)| k.clone()).collect();
                SceneContent::Lidar(tagged.into_iter().map(|(_, _, s)| s).collect())
            }
            "flim" => {
                let mut regions = Vec::new();
                for key in kv.indexed_keys("region")? {
                    let line = kv.line_of(&key).unwrap_or(0);
                    let v: Vec<f64> = kv.optional_list(&key)?.unwrap_or_default();
                    let &[r0, c0, r1, c1, lifetime_ns, amplitude, arrival] = v.as_slice() else {
                        return Err(Error::Config {
                            line,
                            message: format!("`{key}` needs 7 values, got {}", v.len()),
                        });
                    };
                    regions.push(LifetimeRegion {
                        rows: (to_index(r0, &key, line)?, to_index(r1, &key, line)?),
                        cols: (to_index(c0, &key, line)?, to_index(c1, &key, line)?),
                        lifetime_ns,
                        amplitude,
                        arrival_bin: to_index(arrival, &key, line)?,
                    });
                    owner_keys.push(key);
                }
                SceneContent::Flim(regions)
            }
            other => {
                return Err(Error::Config {
                    line: kind_line.unwrap_or(0),
                    message: format!("kind must be `lidar` or `flim`, got `{other}`"),
                })
            }
        };
        kv.finish()?;

        let spec = SceneSpec { height, width, bins, bin_width_ps, content };
        spec.validate_with_lines(&|name: &str| {
            let key = match name.strip_prefix("surface ").or_else(|| name.strip_prefix("region ")) {
                Some(idx) => idx.parse::<usize>().ok().and_then(|i| owner_keys.get(i).cloned()),
                None => Some(name.to_string()),
            };
            key.and_then(|k| original.line_of(&k))
        })?;
        Ok(spec)
    }

    /// Scene file text with every value materialized.
    pub fn to_config(&self) -> String {
        render(&self.to_entries())
    }

    /// Fully materialized `key = value` entries; [`SceneSpec::parse`] reads them back.
    pub fn to_entries(&self) -> Vec<(String, String)> {
        let mut entries: Vec<(String, String)> = vec![
            (
                "kind".into(),
                match self.content {
                    SceneContent::Lidar(_) => "lidar".into(),
                    SceneContent::Flim(_) => "flim".into(),
                },
            ),
            ("height".into(), self.height.to_string()),
            ("width".into(), self.width.to_string()),
            ("bins".into(), self.bins.to_string()),
            ("bin_width_ps".into(), self.bin_width_ps.to_string()),
        ];
        match &self.content {
            SceneContent::Lidar(surfaces) => {
                for (i, s) in surfaces.iter().enumerate() {
                    let values = [
                        s.rows.0 as f64,
                        s.cols.0 as f64,
                        s.rows.1 as f64,
                        s.cols.1 as f64,
                        s.depth,
                        s.depth_per_row,
                        s.depth_per_col,
                        s.reflectivity,
                    ];
                    entries.push((format!("plane.{i}"), render_list(&values)));
                }
            }
            SceneContent::Flim(regions) => {
                for (i, g) in regions.iter().enumerate() {
                    let values = [
                        g.rows.0 as f64,
                        g.cols.0 as f64,
                        g.rows.1 as f64,
                        g.cols.1 as f64,
                        g.lifetime_ns,
                        g.amplitude,
                        g.arrival_bin as f64,
                    ];
                    entries.push((format!("region.{i}"), render_list(&values)));
                }
            }
        }
        entries
    }
}

fn to_index(v: f64, key: &str, line: usize) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Config { line, message: format!("`{key}`: `{v}` is not a nonnegative integer") })
    }
}

/// Renders the ground-truth cube for a scene.
///
/// LIDAR pixels receive one impulse scaled by reflectivity, split linearly
/// between the two bins around a fractional depth (mass that would land past
/// the last bin stays in it). FLIM pixels receive `amplitude·exp(-t/λ)`
/// sampled at bin centers from the arrival bin onward.
pub fn render_scene<T: Real>(spec: &SceneSpec) -> Result<TransientCube<T>> {
    spec.validate()?;
    let (h, w, bins) = (spec.height, spec.width, spec.bins);
    let n = h * w;
    let mut data = vec![0.0f64; n * bins];
    match &spec.content {
        SceneContent::Lidar(surfaces) => {
            for row in 0..h {
                for col in 0..w {
                    let front = surfaces
                        .iter()
                        .filter(|s| s.covers(row, col))
                        .map(|s| (s.depth_at(row, col), s.reflectivity))
                        .fold(None, |best: Option<(f64, f64)>, cand| match best {
                            Some(b) if b.0 <= cand.0 => Some(b),
                            _ => Some(cand),
                        });
                    let Some((depth, refl)) = front else { continue };
                    let lower = (depth.floor() as usize).min(bins - 1);
                    let frac = depth - lower as f64;
                    let p = row * w + col;
                    if lower + 1 < bins {
                        data[lower * n + p] += refl * (1.0 - frac);
                        data[(lower + 1) * n + p] += refl * frac;
                    } else {
                        data[lower * n + p] += refl;
                    }
                }
            }
        }
        SceneContent::Flim(regions) => {
            let bin_ns = spec.bin_width_ps * 1e-3;
            for row in 0..h {
                for col in 0..w {
                    let Some(region) = regions.iter().rev().find(|g| g.covers(row, col)) else {
                        continue;
                    };
                    let p = row * w + col;
                    for k in region.arrival_bin..bins {
                        let t = (k - region.arrival_bin) as f64 * bin_ns + 0.5 * bin_ns;
                        data[k * n + p] = region.amplitude * (-t / region.lifetime_ns).exp();
                    }
                }
            }
        }
    }
    TransientCube::new(h, w, bins, spec.bin_width_ps, data.into_iter().map(T::of).collect())
}
