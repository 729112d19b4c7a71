use super::{Boundary, FusionGeometry};
use crate::error::Result;
use crate::scalar::Real;

/// Unit-sum Gaussian taps for offsets `-R..=R`, `R = ⌈4σ⌉`. `σ = 0` gives the single tap `[1]`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|w| w / total).collect()
}

fn source_index(i: isize, len: usize, boundary: Boundary) -> Option<usize> {
    if (0..len as isize).contains(&i) {
        return Some(i as usize);
    }
    match boundary {
        Boundary::ZeroPad => None,
        Boundary::Replicate => Some(i.clamp(0, len as isize - 1) as usize),
    }
}

/// One separable pass. `stride` walks along the blurred axis, `lines` enumerates
/// the orthogonal axis with `line_stride`.
#[allow(clippy::too_many_arguments)]
fn pass<T: Real>(
    src: &[T],
    dst: &mut [T],
    len: usize,
    stride: usize,
    lines: usize,
    line_stride: usize,
    kernel: &[T],
    boundary: Boundary,
    adjoint: bool,
) {
    let radius = (kernel.len() / 2) as isize;
    dst.iter_mut().for_each(|v| *v = T::zero());
    for line in 0..lines {
        let base = line * line_stride;
        for i in 0..len {
            for (t, &w) in kernel.iter().enumerate() {
                let Some(j) = source_index(i as isize + t as isize - radius, len, boundary) else {
                    continue;
                };
                if adjoint {
                    dst[base + j * stride] += w * src[base + i * stride];
                } else {
                    dst[base + i * stride] += w * src[base + j * stride];
                }
            }
        }
    }
}

pub(crate) fn blur_frame<T: Real>(
    frame: &[T],
    rows: usize,
    cols: usize,
    sigma: f64,
    boundary: Boundary,
    adjoint: bool,
) -> Vec<T> {
    if sigma <= 0.0 {
        return frame.to_vec();
    }
    let kernel: Vec<T> = gaussian_kernel(sigma).into_iter().map(T::of).collect();
    let mut tmp = vec![T::zero(); frame.len()];
    let mut out = vec![T::zero(); frame.len()];
    // along columns within each row, then along rows within each column
    pass(frame, &mut tmp, cols, 1, rows, cols, &kernel, boundary, adjoint);
    pass(&tmp, &mut out, rows, cols, cols, 1, &kernel, boundary, adjoint);
    out
}

/// Separable Gaussian blur `B` of one high-resolution frame.
pub fn blur<T: Real>(frame: &[T], geometry: &FusionGeometry) -> Result<Vec<T>> {
    geometry.check_high(frame.len())?;
    Ok(blur_frame(frame, geometry.high_rows(), geometry.high_cols(), geometry.blur_sigma(), geometry.boundary(), false))
}

/// `Bᵀ`. Zero padding with a symmetric kernel is self-adjoint; replicate is not.
pub fn blur_adjoint<T: Real>(frame: &[T], geometry: &FusionGeometry) -> Result<Vec<T>> {
    geometry.check_high(frame.len())?;
    Ok(blur_frame(frame, geometry.high_rows(), geometry.high_cols(), geometry.blur_sigma(), geometry.boundary(), true))
}
