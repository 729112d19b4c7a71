use rayon::prelude::*;

use crate::datacube::{MapUnit, ScalarMap, SpadMeasurement, TransientCube};
use crate::scalar::Real;

/// Peak count below which a pixel carries no usable depth.
pub const DEFAULT_SNR_THRESHOLD: f64 = 5.0;

/// Anything that stores a time-resolved cube.
pub trait TimeResolved<T: Real> {
    fn cube(&self) -> &TransientCube<T>;

    fn is_dead(&self, _row: usize, _col: usize) -> bool {
        false
    }
}

impl<T: Real> TimeResolved<T> for TransientCube<T> {
    fn cube(&self) -> &TransientCube<T> {
        self
    }
}

impl<T: Real> TimeResolved<T> for SpadMeasurement<T> {
    fn cube(&self) -> &TransientCube<T> {
        SpadMeasurement::cube(self)
    }

    fn is_dead(&self, row: usize, col: usize) -> bool {
        self.dead_pixels().contains(&(row, col))
    }
}

/// Per-pixel argmax over bins, earliest bin on ties.
///
/// Pixels whose peak falls below `snr_threshold` (and dead pixels) get the sentinel.
pub fn depth_map<T: Real, C: TimeResolved<T> + Sync>(source: &C, snr_threshold: f64) -> ScalarMap {
    let cube = source.cube();
    let (h, w, n) = (cube.height(), cube.width(), cube.frame_len());
    let data = cube.as_slice();
    let values: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|p| {
            if source.is_dead(p / w, p % w) {
                return None;
            }
            let mut best = (0, data[p]);
            for b in 1..cube.bins() {
                let v = data[b * n + p];
                if v > best.1 {
                    best = (b, v);
                }
            }
            (best.1.as_f64() >= snr_threshold).then_some(best.0 as f64)
        })
        .collect();
    ScalarMap::new(h, w, MapUnit::TimeBin, values).expect("shape and values valid by construction")
}
