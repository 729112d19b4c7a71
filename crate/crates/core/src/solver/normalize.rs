use crate::datacube::{IntensityImage, SpadMeasurement};
use crate::error::{invalid, Result};
use crate::forward_model::{FusionGeometry, SamplingOperator};
use crate::scalar::Real;

/// How the CCD image is brought into the measurement's units before solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CcdNormalization {
    /// Use `c` as given; correct when both arms come from the same scaled scene.
    #[default]
    None,
    /// `sum(c) = sum(d)`, see [`normalize_ccd`].
    MatchSum,
    /// `sum(c) = sum(d) / η`, see [`normalize_ccd_to_geometry`].
    Efficiency,
}

impl CcdNormalization {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Self::None),
            "match_sum" => Some(Self::MatchSum),
            "efficiency" => Some(Self::Efficiency),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::MatchSum => "match_sum",
            Self::Efficiency => "efficiency",
        }
    }
}

fn sums<T: Real>(c: &IntensityImage<T>, d: &SpadMeasurement<T>) -> Result<(f64, f64)> {
    let (sc, sd) = (c.sum(), d.sum());
    if !(sc > 0.0) {
        return Err(invalid("CCD image sums to zero"));
    }
    if !(sd > 0.0) {
        return Err(invalid("SPAD measurement sums to zero"));
    }
    Ok((sc, sd))
}

/// Scales `c` so that its total equals the total of `d`.
pub fn normalize_ccd<T: Real>(c: &IntensityImage<T>, d: &SpadMeasurement<T>) -> Result<IntensityImage<T>> {
    let (sc, sd) = sums(c, d)?;
    if sc == sd {
        return Ok(c.clone());
    }
    c.scaled(sd / sc)
}

/// Fraction of a spatially uniform scene's counts that reach the SPAD: `sum(A·1) / (M·N)`.
pub fn collection_efficiency(geometry: &FusionGeometry) -> f64 {
    let op = SamplingOperator::<f64>::new(geometry);
    let mut out = vec![0.0; geometry.low_len()];
    op.apply_frame(&vec![1.0; geometry.high_len()], &mut out);
    out.iter().sum::<f64>() / geometry.high_len() as f64
}

/// Scales `c` so that `sum(c) = sum(d) / η`, undoing the count loss of the mask.
pub fn normalize_ccd_to_geometry<T: Real>(
    c: &IntensityImage<T>,
    d: &SpadMeasurement<T>,
    geometry: &FusionGeometry,
) -> Result<IntensityImage<T>> {
    let (sc, sd) = sums(c, d)?;
    let eta = collection_efficiency(geometry);
    if !(eta > 0.0) {
        return Err(invalid("geometry collects no light"));
    }
    c.scaled(sd / eta / sc)
}
