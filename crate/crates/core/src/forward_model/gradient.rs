use crate::datacube::TransientCube;
use crate::scalar::Real;

/// Per-frame forward differences of a bin-major stack.
///
/// Returns `(rows, cols)`: `rows[r][c] = x[r+1][c] - x[r][c]` and
/// `cols[r][c] = x[r][c+1] - x[r][c]`, zero on the last row / column.
pub fn gradient_2d_raw<T: Real>(stack: &[T], height: usize, width: usize) -> (Vec<T>, Vec<T>) {
    let mut d_row = vec![T::zero(); stack.len()];
    let mut d_col = vec![T::zero(); stack.len()];
    gradient_into(stack, height, width, &mut d_row, &mut d_col);
    (d_row, d_col)
}

pub(crate) fn gradient_into<T: Real>(stack: &[T], height: usize, width: usize, d_row: &mut [T], d_col: &mut [T]) {
    let n = height * width;
    for ((x, gr), gc) in stack.chunks_exact(n).zip(d_row.chunks_exact_mut(n)).zip(d_col.chunks_exact_mut(n)) {
        for r in 0..height {
            for c in 0..width {
                let i = r * width + c;
                gr[i] = if r + 1 < height { x[i + width] - x[i] } else { T::zero() };
                gc[i] = if c + 1 < width { x[i + 1] - x[i] } else { T::zero() };
            }
        }
    }
}

/// Adjoint of [`gradient_2d_raw`] (negative divergence), accumulated into `out`.
pub(crate) fn gradient_adjoint_into<T: Real>(d_row: &[T], d_col: &[T], height: usize, width: usize, out: &mut [T]) {
    let n = height * width;
    for ((o, gr), gc) in out.chunks_exact_mut(n).zip(d_row.chunks_exact(n)).zip(d_col.chunks_exact(n)) {
        for r in 0..height {
            for c in 0..width {
                let i = r * width + c;
                let mut v = T::zero();
                if r + 1 < height {
                    v -= gr[i];
                }
                if r > 0 {
                    v += gr[i - width];
                }
                if c + 1 < width {
                    v -= gc[i];
                }
                if c > 0 {
                    v += gc[i - 1];
                }
                o[i] += v;
            }
        }
    }
}

/// `∇₂D` of every frame of a cube.
pub fn gradient_2d<T: Real>(cube: &TransientCube<T>) -> (Vec<T>, Vec<T>) {
    gradient_2d_raw(cube.as_slice(), cube.height(), cube.width())
}

/// `∇₂Dᵀ` for stacks shaped like a `height × width` cube.
pub fn gradient_2d_adjoint<T: Real>(d_row: &[T], d_col: &[T], height: usize, width: usize) -> Vec<T> {
    let mut out = vec![T::zero(); d_row.len()];
    gradient_adjoint_into(d_row, d_col, height, width, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_frame_has_zero_gradient() {
        let cube = TransientCube::<f64>::new(3, 4, 2, 1.0, vec![2.5; 24]).unwrap();
        let (gr, gc) = gradient_2d(&cube);
        assert!(gr.iter().chain(&gc).all(|&v| v == 0.0));
    }

    #[test]
    fn column_step() {
        let cube = TransientCube::<f64>::new(2, 2, 1, 1.0, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let (gr, gc) = gradient_2d(&cube);
        assert_eq!(gr, vec![0.0; 4]);
        assert_eq!(gc, vec![1.0, 0.0, 1.0, 0.0]);
    }
}
