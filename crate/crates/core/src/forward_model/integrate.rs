use crate::datacube::{IntensityImage, SpadMeasurement, TransientCube};
use crate::error::Result;
use crate::scalar::Real;

/// Per-pixel sum over bins of a bin-major stack.
pub fn integrate_time_raw<T: Real>(stack: &[T], frame_len: usize) -> Vec<T> {
    let mut out = vec![T::zero(); frame_len];
    for frame in stack.chunks_exact(frame_len) {
        for (o, &v) in out.iter_mut().zip(frame) {
            *o += v;
        }
    }
    out
}

/// `Tᵀ`: repeats an image in every bin.
pub fn integrate_time_adjoint<T: Real>(image: &[T], bins: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(image.len() * bins);
    for _ in 0..bins {
        out.extend_from_slice(image);
    }
    out
}

/// `T`: time-integrated intensity image of a cube.
pub fn integrate_time<T: Real>(cube: &TransientCube<T>) -> Result<IntensityImage<T>> {
    IntensityImage::new(cube.height(), cube.width(), integrate_time_raw(cube.as_slice(), cube.frame_len()))
}

/// Per-bin sum over the pixels of a bin-major stack.
pub fn integrate_space<T: Real>(stack: &[T], frame_len: usize) -> Vec<T> {
    stack.chunks_exact(frame_len).map(|f| f.iter().copied().sum()).collect()
}

/// Adjoint of [`integrate_space`]: broadcasts each bin value over its frame.
pub fn integrate_space_adjoint<T: Real>(hist: &[T], frame_len: usize) -> Vec<T> {
    hist.iter().flat_map(|&v| std::iter::repeat_n(v, frame_len)).collect()
}

/// `K_h`
pub fn integrate_space_high<T: Real>(cube: &TransientCube<T>) -> Vec<T> {
    integrate_space(cube.as_slice(), cube.frame_len())
}

/// `K_l`; dead pixels contribute their stored zeros.
pub fn integrate_space_low<T: Real>(meas: &SpadMeasurement<T>) -> Vec<T> {
    integrate_space(meas.as_slice(), meas.height() * meas.width())
}
