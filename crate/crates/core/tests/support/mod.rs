//! Independent oracles shared by the integration and acceptance tests.
//!
//! Nothing here calls the library's operator implementations: the dense
//! matrices are assembled entry by entry from the operator definitions, and
//! the reference solve hands the explicit conic program to an interior-point
//! solver.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod checks;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn zeros(rows: usize, cols: usize) -> Dense {
    vec![vec![0.0; cols]; rows]
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l] == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += a[i][l] * b[l][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(w, v)| w * v).sum()).collect()
}

pub fn transpose(a: &Dense) -> Dense {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

/// Stacks `bins` copies of a per-frame matrix on the block diagonal.
pub fn block_diag(a: &Dense, bins: usize) -> Dense {
    let (r, c) = (a.len(), a[0].len());
    let mut out = zeros(r * bins, c * bins);
    for b in 0..bins {
        for i in 0..r {
            for j in 0..c {
                out[b * r + i][b * c + j] = a[i][j];
            }
        }
    }
    out
}

/// Row-echelon rank with partial pivoting.
pub fn rank(a: &Dense, tol: f64) -> usize {
    let mut m = a.clone();
    let (rows, cols) = (m.len(), m[0].len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..rows).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())) else {
            break;
        };
        if m[pivot][col].abs() <= tol {
            continue;
        }
        m.swap(rank, pivot);
        for r in rank + 1..rows {
            let f = m[r][col] / m[rank][col];
            if f != 0.0 {
                for c in col..cols {
                    m[r][c] -= f * m[rank][c];
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pad {
    Zero,
    Replicate,
}

/// Dense 2D Gaussian blur: entry `[s][p]` is the weight of input `p` in output `s`.
pub fn dense_blur(rows: usize, cols: usize, sigma: f64, pad: Pad) -> Dense {
    let n = rows * cols;
    let mut out = zeros(n, n);
    if sigma == 0.0 {
        for i in 0..n {
            out[i][i] = 1.0;
        }
        return out;
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let g = |k: i64| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp();
    let norm: f64 = (-radius..=radius).map(g).sum::<f64>();
    for sr in 0..rows as i64 {
        for sc in 0..cols as i64 {
            for dr in -radius..=radius {
                for dc in -radius..=radius {
                    let (mut pr, mut pc) = (sr + dr, sc + dc);
                    let inside = (0..rows as i64).contains(&pr) && (0..cols as i64).contains(&pc);
                    if !inside {
                        match pad {
                            Pad::Zero => continue,
                            Pad::Replicate => {
                                pr = pr.clamp(0, rows as i64 - 1);
                                pc = pc.clamp(0, cols as i64 - 1);
                            }
                        }
                    }
                    let s = (sr * cols as i64 + sc) as usize;
                    let p = (pr * cols as i64 + pc) as usize;
                    out[s][p] += g(dr) * g(dc) / (norm * norm);
                }
            }
        }
    }
    out
}

/// Dense diagonal mask: centered `a×a` window per `r×r` block; `dead` blocks zero.
pub fn dense_mask(low_rows: usize, low_cols: usize, r: usize, a: usize, dead: &[(usize, usize)]) -> Dense {
    let (rows, cols) = (low_rows * r, low_cols * r);
    let off = (r - a) / 2;
    let mut out = zeros(rows * cols, rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let (br, bc) = (row % r, col % r);
            let keep = br >= off && br < off + a && bc >= off && bc < off + a && !dead.contains(&(row / r, col / r));
            if keep {
                out[row * cols + col][row * cols + col] = 1.0;
            }
        }
    }
    out
}

/// Dense sum-pooling matrix.
pub fn dense_downsample(low_rows: usize, low_cols: usize, r: usize) -> Dense {
    let cols = low_cols * r;
    let mut out = zeros(low_rows * low_cols, low_rows * r * cols);
    for row in 0..low_rows * r {
        for col in 0..cols {
            out[(row / r) * low_cols + col / r][row * cols + col] = 1.0;
        }
    }
    out
}

pub struct DenseGeometry {
    pub low_rows: usize,
    pub low_cols: usize,
    pub r: usize,
    pub a: usize,
    pub sigma: f64,
    pub pad: Pad,
    pub dead: Vec<(usize, usize)>,
}

impl DenseGeometry {
    pub fn rows(&self) -> usize {
        self.low_rows * self.r
    }

    pub fn cols(&self) -> usize {
        self.low_cols * self.r
    }

    /// `P·S·B` as one dense matrix.
    pub fn a(&self) -> Dense {
        let b = dense_blur(self.rows(), self.cols(), self.sigma, self.pad);
        let s = dense_mask(self.low_rows, self.low_cols, self.r, self.a, &self.dead);
        let p = dense_downsample(self.low_rows, self.low_cols, self.r);
        matmul(&p, &matmul(&s, &b))
    }
}

/// Dense temporal integration over a bin-major cube.
pub fn dense_t(frame_len: usize, bins: usize) -> Dense {
    let mut out = zeros(frame_len, frame_len * bins);
    for b in 0..bins {
        for p in 0..frame_len {
            out[p][b * frame_len + p] = 1.0;
        }
    }
    out
}

/// Dense per-bin spatial integration.
pub fn dense_k(frame_len: usize, bins: usize) -> Dense {
    let mut out = zeros(bins, frame_len * bins);
    for b in 0..bins {
        for p in 0..frame_len {
            out[b][b * frame_len + p] = 1.0;
        }
    }
    out
}

/// Dense forward-difference gradient, row differences stacked over column differences.
pub fn dense_grad(rows: usize, cols: usize, bins: usize) -> Dense {
    let n = rows * cols * bins;
    let mut out = zeros(2 * n, n);
    for b in 0..bins {
        for r in 0..rows {
            for c in 0..cols {
                let i = b * rows * cols + r * cols + c;
                if r + 1 < rows {
                    out[i][i + cols] = 1.0;
                    out[i][i] = -1.0;
                }
                if c + 1 < cols {
                    out[n + i][i + 1] = 1.0;
                    out[n + i][i] = -1.0;
                }
            }
        }
    }
    out
}

/// Inputs of a dense reference problem.
pub struct DenseProblem {
    pub a_tau: Dense,
    pub t: Dense,
    pub k_h: Dense,
    pub grad: Dense,
    pub d: Vec<f64>,
    pub c: Vec<f64>,
    pub hist_target: Vec<f64>,
}

impl DenseProblem {
    pub fn new(geometry: &DenseGeometry, bins: usize, d: Vec<f64>, c: Vec<f64>) -> Self {
        let frame = geometry.rows() * geometry.cols();
        let low = geometry.low_rows * geometry.low_cols;
        let hist_target = matvec(&dense_k(low, bins), &d);
        Self {
            a_tau: block_diag(&geometry.a(), bins),
            t: dense_t(frame, bins),
            k_h: dense_k(frame, bins),
            grad: dense_grad(geometry.rows(), geometry.cols(), bins),
            d,
            c,
            hist_target,
        }
    }

    pub fn len(&self) -> usize {
        self.t[0].len()
    }

    /// Scalar-loop objective: `(data, ccd, hist, l1, tv)`, L2 terms squared when `squared`.
    pub fn terms(&self, x: &[f64], squared: bool) -> [f64; 5] {
        let l2 = |m: &Dense, target: &[f64]| {
            let mut acc = 0.0;
            for (row, &t) in m.iter().zip(target) {
                let mut v = 0.0;
                for (w, xv) in row.iter().zip(x) {
                    v += w * xv;
                }
                acc += (v - t) * (v - t);
            }
            if squared {
                acc
            } else {
                acc.sqrt()
            }
        };
        let mut l1 = 0.0;
        for v in x {
            l1 += v.abs();
        }
        let mut tv = 0.0;
        for row in &self.grad {
            let mut v = 0.0;
            for (w, xv) in row.iter().zip(x) {
                v += w * xv;
            }
            tv += v.abs();
        }
        [l2(&self.a_tau, &self.d), l2(&self.t, &self.c), l2(&self.k_h, &self.hist_target), l1, tv]
    }

    pub fn objective(&self, x: &[f64], weights: [f64; 4], squared: bool) -> f64 {
        let t = self.terms(x, squared);
        t[0] + weights[0] * t[1] + weights[1] * t[2] + weights[2] * t[3] + weights[3] * t[4]
    }

    /// Interior-point solve of the problem as a conic program. Returns the minimizer.
    ///
    /// Unsquared: variables `[x (n), s_a, s_t, s_k, u (2n)]`, each L2 term as a
    /// second-order cone on `(s, K x − b)`, the TV term through `−u ≤ ∇x ≤ u`.
    /// Squared: the L2 terms move into the quadratic objective.
    pub fn reference_solve(&self, weights: [f64; 4], squared: bool) -> Vec<f64> {
        let n = self.len();
        let [alpha, beta, gamma, delta] = weights;
        let g = self.grad.len();
        let (ia, it, ik, iu) = (n, n + 1, n + 2, n + 3);
        let nvar = n + 3 + g;

        let mut q = vec![0.0; nvar];
        for qi in q.iter_mut().take(n) {
            *qi = gamma;
        }
        for qi in q.iter_mut().skip(iu) {
            *qi = delta;
        }

        let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut push_row = |entries: &[(usize, f64)], rhs: f64, rows: &mut Vec<usize>, b: &mut Vec<f64>| {
            let r = b.len();
            for &(c, v) in entries {
                if v != 0.0 {
                    rows.push(r);
                    cols.push(c);
                    vals.push(v);
                }
            }
            b.push(rhs);
        };

        let mut p_triplets = (Vec::new(), Vec::new(), Vec::new());
        if squared {
            // P = 2 Σ w KᵀK (upper triangle), q += −2 Σ w Kᵀ b
            let mut p = zeros(n, n);
            for (m, target, w) in
                [(&self.a_tau, &self.d, 1.0), (&self.t, &self.c, alpha), (&self.k_h, &self.hist_target, beta)]
            {
                if w == 0.0 {
                    continue;
                }
                for (row, &t) in m.iter().zip(target.iter()) {
                    let nz: Vec<(usize, f64)> = row.iter().copied().enumerate().filter(|(_, v)| *v != 0.0).collect();
                    for &(i, vi) in &nz {
                        q[i] -= 2.0 * w * vi * t;
                        for &(j, vj) in &nz {
                            p[i][j] += 2.0 * w * vi * vj;
                        }
                    }
                }
            }
            for i in 0..n {
                for j in i..n {
                    if p[i][j] != 0.0 {
                        p_triplets.0.push(i);
                        p_triplets.1.push(j);
                        p_triplets.2.push(p[i][j]);
                    }
                }
            }
            // the epigraph variables are unused: pin them to zero
            for idx in [ia, it, ik] {
                push_row(&[(idx, 1.0)], 0.0, &mut rows, &mut b);
            }
            cones.push(ZeroConeT(3));
        } else {
            q[ia] = 1.0;
            q[it] = alpha;
            q[ik] = beta;
            for (m, target, idx) in
                [(&self.a_tau, &self.d, ia), (&self.t, &self.c, it), (&self.k_h, &self.hist_target, ik)]
            {
                push_row(&[(idx, -1.0)], 0.0, &mut rows, &mut b);
                for (row, &t) in m.iter().zip(target.iter()) {
                    let entries: Vec<(usize, f64)> = row.iter().enumerate().map(|(j, &v)| (j, -v)).collect();
                    push_row(&entries, -t, &mut rows, &mut b);
                }
                cones.push(SecondOrderConeT(m.len() + 1));
            }
        }

        // x ≥ 0, u − ∇x ≥ 0, u + ∇x ≥ 0
        for j in 0..n {
            push_row(&[(j, -1.0)], 0.0, &mut rows, &mut b);
        }
        for (i, row) in self.grad.iter().enumerate() {
            let mut plus: Vec<(usize, f64)> = row.iter().enumerate().map(|(j, &v)| (j, v)).collect();
            plus.push((iu + i, -1.0));
            push_row(&plus, 0.0, &mut rows, &mut b);
            let mut minus: Vec<(usize, f64)> = row.iter().enumerate().map(|(j, &v)| (j, -v)).collect();
            minus.push((iu + i, -1.0));
            push_row(&minus, 0.0, &mut rows, &mut b);
        }
        cones.push(NonnegativeConeT(n + 2 * g));

        let m = b.len();
        let a_mat = CscMatrix::new_from_triplets(m, nvar, rows, cols, vals);
        let p_mat = CscMatrix::new_from_triplets(nvar, nvar, p_triplets.0, p_triplets.1, p_triplets.2);
        let settings = DefaultSettings {
            verbose: false,
            tol_gap_abs: 1e-10,
            tol_gap_rel: 1e-10,
            tol_feas: 1e-10,
            max_iter: 500,
            ..DefaultSettings::default()
        };
        let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings).expect("valid conic program");
        solver.solve();
        assert!(
            matches!(solver.solution.status, SolverStatus::Solved | SolverStatus::AlmostSolved),
            "reference solve failed: {:?}",
            solver.solution.status
        );
        solver.solution.x[..n].iter().map(|v| v.max(0.0)).collect()
    }
}
