use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{norm2, Real};

/// Estimates `‖L‖` by power iteration on `LᵀL`.
///
/// `normal` evaluates `LᵀL v`. Starts from a fixed pseudo-random vector and
/// stops after `max_iters` or when the estimate changes by less than `tol`
/// (relative).
pub fn power_iteration<T: Real>(len: usize, max_iters: usize, tol: f64, mut normal: impl FnMut(&[T]) -> Vec<T>) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<T> = (0..len).map(|_| T::of(rng.random_range(-1.0..1.0))).collect();
    let n = norm2(&v);
    if n == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|x| *x /= T::of(n));
    let mut estimate = 0.0f64;
    for _ in 0..max_iters {
        let w = normal(&v);
        let lambda = norm2(&w);
        if lambda == 0.0 || !lambda.is_finite() {
            return if lambda == 0.0 { 0.0 } else { f64::NAN };
        }
        v = w.into_iter().map(|x| x / T::of(lambda)).collect();
        let next = lambda.sqrt();
        let done = (next - estimate).abs() <= tol * next;
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}
