use spadfusion_core::config::KeyValues;
use spadfusion_core::forward_model::default_active_width;
use spadfusion_core::{Boundary, Error, FusionGeometry};

use crate::error::CliResult;

/// Geometry keys shared by `simulate` and `reconstruct`:
/// `factor`, `blur_sigma`, `active_width` (optional), `boundary` (optional).
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySpec {
    pub factor: usize,
    pub blur_sigma: f64,
    pub active_width: Option<usize>,
    pub boundary: Boundary,
}

impl GeometrySpec {
    pub fn from_key_values(kv: &mut KeyValues) -> CliResult<Self> {
        let factor = kv.required("factor")?;
        let blur_sigma = kv.required("blur_sigma")?;
        let active_width = kv.optional("active_width")?;
        let boundary = match kv.take_raw("boundary") {
            None => Boundary::default(),
            Some((value, line)) => Boundary::parse(&value).ok_or_else(|| Error::Config {
                line,
                message: format!("boundary must be `zero_pad` or `replicate`, got `{value}`"),
            })?,
        };
        Ok(Self { factor, blur_sigma, active_width, boundary })
    }

    /// Geometry for a high-resolution frame of the given size.
    pub fn build(&self, high_rows: usize, high_cols: usize) -> CliResult<FusionGeometry> {
        let mut g = FusionGeometry::for_high_res(high_rows, high_cols, self.factor, self.blur_sigma)?;
        if let Some(a) = self.active_width {
            g = g.with_active_width(a)?;
        }
        Ok(g.with_boundary(self.boundary))
    }

    pub fn to_entries(&self) -> Vec<(String, String)> {
        vec![
            ("factor".into(), self.factor.to_string()),
            ("blur_sigma".into(), self.blur_sigma.to_string()),
            ("active_width".into(), self.active_width.unwrap_or_else(|| default_active_width(self.factor)).to_string()),
            ("boundary".into(), self.boundary.name().into()),
        ]
    }
}
