//! Tensor-train (TT) representation of dense multiway arrays.
//!
//! A d-mode tensor with mode sizes N_1..N_d is stored as a chain of 3-way
//! cores `G_k` of shape `(R_{k-1}, N_k, R_k)` with boundary ranks
//! `R_0 = R_d = 1`; an element is the product of the matrix slices picked by
//! the multi-index. Compression (`tt_from_full`, `tt_round`) truncates
//! singular values so the total Frobenius error stays within `eps` times the
//! tensor norm, splitting the budget evenly over the d-1 unfoldings.

use ndarray::{s, Array1, Array2, Array3, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg;

/// Largest dense tensor (#entries) the crate will materialize.
pub const MAX_DENSE_LEN: usize = 1 << 22;

#[derive(Debug, Error)]
pub enum TtError {
    #[error("tensor must have at least one mode and no zero-sized modes")]
    EmptyShape,
    #[error("mode sizes {sizes:?} imply {expected} entries, data has {got}")]
    ShapeMismatch {
        sizes: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("nonfinite value at linear index {0}")]
    Nonfinite(usize),
    #[error("index {index:?} out of bounds for mode sizes {sizes:?}")]
    IndexOutOfBounds { index: Vec<usize>, sizes: Vec<usize> },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("dense tensor would need {0} entries (limit {MAX_DENSE_LEN})")]
    TooLargeToDensify(usize),
    #[error("expected {expected} mode matrices, got {got}")]
    WrongMatrixCount { expected: usize, got: usize },
    #[error("matrix for mode {mode} is {rows}x{cols}, expected {n}x{n}")]
    WrongMatrixShape {
        mode: usize,
        rows: usize,
        cols: usize,
        n: usize,
    },
    #[error("mode sizes {a:?} and {b:?} differ")]
    ModeSizesDiffer { a: Vec<usize>, b: Vec<usize> },
    #[error("core {core}: rank chain broken ({detail})")]
    BrokenChain { core: usize, detail: String },
}

/// Dense tensor in big-endian linearization (last index varies fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct FullTensor {
    mode_sizes: Vec<usize>,
    data: Vec<f64>,
}

impl FullTensor {
    pub fn new(mode_sizes: Vec<usize>, data: Vec<f64>) -> Result<Self, TtError> {
        if mode_sizes.is_empty() || mode_sizes.iter().any(|&n| n == 0) {
            return Err(TtError::EmptyShape);
        }
        let expected = mode_sizes.iter().product::<usize>();
        if expected != data.len() {
            return Err(TtError::ShapeMismatch {
                sizes: mode_sizes,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { mode_sizes, data })
    }

    /// Builds a tensor by evaluating `f` at every multi-index in
    /// linearization order.
    pub fn from_fn(mode_sizes: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let total: usize = mode_sizes.iter().product();
        let mut idx = vec![0usize; mode_sizes.len()];
        let mut data = Vec::with_capacity(total);
        for _ in 0..total {
            data.push(f(&idx));
            advance_index(&mut idx, mode_sizes);
        }
        Self {
            mode_sizes: mode_sizes.to_vec(),
            data,
        }
    }

    pub fn mode_sizes(&self) -> &[usize] {
        &self.mode_sizes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn linear_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.mode_sizes.len());
        index
            .iter()
            .zip(&self.mode_sizes)
            .fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.linear_index(index)]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Advances a multi-index odometer-style (last mode fastest); wraps to zero.
pub(crate) fn advance_index(index: &mut [usize], sizes: &[usize]) {
    for k in (0..index.len()).rev() {
        index[k] += 1;
        if index[k] < sizes[k] {
            return;
        }
        index[k] = 0;
    }
}

/// Tensor in TT format: cores `G_k` of shape `(R_{k-1}, N_k, R_k)`.
#[derive(Debug, Clone)]
pub struct TTTensor {
    cores: Vec<Array3<f64>>,
}

impl TTTensor {
    pub fn new(cores: Vec<Array3<f64>>) -> Result<Self, TtError> {
        if cores.is_empty() {
            return Err(TtError::EmptyShape);
        }
        if cores[0].dim().0 != 1 {
            return Err(TtError::BrokenChain {
                core: 0,
                detail: format!("left boundary rank {} != 1", cores[0].dim().0),
            });
        }
        if cores.last().unwrap().dim().2 != 1 {
            return Err(TtError::BrokenChain {
                core: cores.len() - 1,
                detail: format!(
                    "right boundary rank {} != 1",
                    cores.last().unwrap().dim().2
                ),
            });
        }
        for k in 0..cores.len() {
            if cores[k].dim().1 == 0 {
                return Err(TtError::EmptyShape);
            }
            if k + 1 < cores.len() && cores[k].dim().2 != cores[k + 1].dim().0 {
                return Err(TtError::BrokenChain {
                    core: k,
                    detail: format!(
                        "right rank {} != next left rank {}",
                        cores[k].dim().2,
                        cores[k + 1].dim().0
                    ),
                });
            }
        }
        Ok(Self { cores })
    }

    pub fn cores(&self) -> &[Array3<f64>] {
        &self.cores
    }

    pub fn dims(&self) -> usize {
        self.cores.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    /// Rank chain `[R_0, .., R_d]`; boundary entries are always 1.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cores.iter().map(|c| c.dim().0).collect();
        r.push(1);
        r
    }

    /// Number of stored core entries.
    pub fn param_count(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }
}

/// Row-major copy of a 2-D view (e.g. a transpose or column slice, whose
/// memory layout is arbitrary) into a standard-layout matrix.
fn std2(v: ArrayView2<f64>) -> Array2<f64> {
    v.as_standard_layout().into_owned()
}

/// Row-major copy of a 2-D view into a 3-way core of the given shape.
fn reshape3(v: ArrayView2<f64>, shape: (usize, usize, usize)) -> Array3<f64> {
    std2(v)
        .into_shape_with_order(shape)
        .expect("element count matches core shape")
}

/// Keeps the smallest leading rank whose discarded tail satisfies
/// `sum(sigma_i^2) <= delta^2`; never below 1.
fn truncation_rank(s: &Array1<f64>, delta: f64) -> usize {
    let budget = delta * delta;
    let mut tail = 0.0;
    let mut r = s.len();
    while r > 1 {
        let v = s[r - 1] * s[r - 1];
        if tail + v <= budget {
            tail += v;
            r -= 1;
        } else {
            break;
        }
    }
    r
}

fn check_eps(eps: f64) -> Result<(), TtError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(TtError::InvalidTolerance(eps));
    }
    Ok(())
}

/// Compresses a dense tensor into TT form by successive truncated SVDs of
/// the unfoldings, with per-step budget `eps * ||t|| / sqrt(d-1)`.
pub fn tt_from_full(t: &FullTensor, eps: f64) -> Result<TTTensor, TtError> {
    check_eps(eps)?;
    if let Some(pos) = t.data.iter().position(|v| !v.is_finite()) {
        return Err(TtError::Nonfinite(pos));
    }
    let sizes = t.mode_sizes();
    let d = sizes.len();
    if d == 1 {
        let core = Array3::from_shape_vec((1, sizes[0], 1), t.data.clone()).unwrap();
        return TTTensor::new(vec![core]);
    }
    let delta = eps * t.norm() / ((d - 1) as f64).sqrt();

    let mut remaining = t.data.clone();
    let mut r_prev = 1usize;
    let mut cores = Vec::with_capacity(d);
    for &n in sizes.iter().take(d - 1) {
        let rows = r_prev * n;
        let cols = remaining.len() / rows;
        let m = Array2::from_shape_vec((rows, cols), remaining).unwrap();
        let (u, sv, vt) = linalg::svd(&m);
        let r = truncation_rank(&sv, delta);
        cores.push(reshape3(u.slice(s![.., ..r]), (r_prev, n, r)));
        let mut carry = std2(vt.slice(s![..r, ..]));
        for (i, mut row) in carry.outer_iter_mut().enumerate() {
            row *= sv[i];
        }
        remaining = carry.into_raw_vec_and_offset().0;
        r_prev = r;
    }
    let last = Array2::from_shape_vec((r_prev, sizes[d - 1]), remaining).unwrap();
    cores.push(
        last.into_shape_with_order((r_prev, sizes[d - 1], 1))
            .unwrap(),
    );
    TTTensor::new(cores)
}

/// Expands a TT tensor to dense form; refuses tensors above
/// [`MAX_DENSE_LEN`] entries.
pub fn tt_to_full(t: &TTTensor) -> Result<FullTensor, TtError> {
    let sizes = t.mode_sizes();
    let mut total = 1usize;
    for &n in &sizes {
        total = total
            .checked_mul(n)
            .ok_or(TtError::TooLargeToDensify(usize::MAX))?;
        if total > MAX_DENSE_LEN {
            return Err(TtError::TooLargeToDensify(total));
        }
    }

    let first = &t.cores[0];
    let (_, n0, r1) = first.dim();
    let mut acc = first
        .to_owned()
        .into_shape_with_order((n0, r1))
        .expect("boundary rank 1");
    for core in &t.cores[1..] {
        let (rl, n, rr) = core.dim();
        let core_mat = core
            .view()
            .into_shape_with_order((rl, n * rr))
            .expect("core is contiguous");
        let prod = acc.dot(&core_mat);
        let rows = prod.nrows() * n;
        acc = prod.into_shape_with_order((rows, rr)).unwrap();
    }
    FullTensor::new(sizes, acc.into_raw_vec_and_offset().0)
}

/// Evaluates one element by multiplying the core slices along the chain.
pub fn tt_element(t: &TTTensor, index: &[usize]) -> Result<f64, TtError> {
    let sizes = t.mode_sizes();
    if index.len() != sizes.len() || index.iter().zip(&sizes).any(|(&i, &n)| i >= n) {
        return Err(TtError::IndexOutOfBounds {
            index: index.to_vec(),
            sizes,
        });
    }
    let mut v: Array1<f64> = t.cores[0].slice(s![0, index[0], ..]).to_owned();
    for (core, &i) in t.cores[1..].iter().zip(&index[1..]) {
        v = v.dot(&core.slice(s![.., i, ..]));
    }
    Ok(v[0])
}

/// Inner product `<a, b>` computed by contracting the two chains; the mode
/// sizes must match.
pub fn tt_dot(a: &TTTensor, b: &TTTensor) -> Result<f64, TtError> {
    let (sa, sb) = (a.mode_sizes(), b.mode_sizes());
    if sa != sb {
        return Err(TtError::ModeSizesDiffer { a: sa, b: sb });
    }
    // m[p, q] accumulates the contraction of the leading modes.
    let mut m: Option<Array2<f64>> = None;
    for (ca, cb) in a.cores.iter().zip(&b.cores) {
        let (ral, n, rar) = ca.dim();
        let (rbl, _, rbr) = cb.dim();
        let next = match &m {
            None => {
                let va = ca.view().into_shape_with_order((n, rar)).unwrap();
                let vb = cb.view().into_shape_with_order((n, rbr)).unwrap();
                va.t().dot(&vb)
            }
            Some(m) => {
                // tmp[a, (n q)] = sum_b m[b, a]^T ... first contract b-side.
                let vb = cb.view().into_shape_with_order((rbl, n * rbr)).unwrap();
                let tmp = m.dot(&vb); // (ral, n*rbr)
                let tmp = tmp.into_shape_with_order((ral * n, rbr)).unwrap();
                let va = ca.view().into_shape_with_order((ral * n, rar)).unwrap();
                va.t().dot(&tmp)
            }
        };
        m = Some(next);
    }
    Ok(m.expect("at least one core")[[0, 0]])
}

/// Right-to-left orthogonalization sweep: afterwards every core but the
/// first has orthonormal rows in its right unfolding, so the tensor norm is
/// the Frobenius norm of the first core.
fn right_orthogonalize(cores: &mut Vec<Array3<f64>>) {
    for k in (1..cores.len()).rev() {
        let (rl, n, rr) = cores[k].dim();
        let m = std2(
            cores[k]
                .view()
                .into_shape_with_order((rl, n * rr))
                .unwrap()
                .t(),
        );
        let (q, r) = linalg::qr_thin(&m); // m = q r, q: (n*rr, r_new)
        let r_new = q.ncols();
        cores[k] = reshape3(q.t(), (r_new, n, rr));
        // Absorb r^T into the previous core's right rank.
        let (pl, pn, pr) = cores[k - 1].dim();
        debug_assert_eq!(pr, rl);
        let prev = cores[k - 1]
            .view()
            .into_shape_with_order((pl * pn, pr))
            .unwrap()
            .dot(&r.t());
        cores[k - 1] = prev.into_shape_with_order((pl, pn, r_new)).unwrap();
    }
}

/// Frobenius norm without densifying, via an orthogonalization sweep.
pub fn tt_norm(t: &TTTensor) -> f64 {
    let mut cores = t.cores.clone();
    right_orthogonalize(&mut cores);
    cores[0].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Re-compresses a TT tensor: right-to-left orthogonalization, then a
/// left-to-right truncated-SVD sweep with per-step budget
/// `eps * ||t|| / sqrt(d-1)`. Output ranks never exceed input ranks.
pub fn tt_round(t: &TTTensor, eps: f64) -> Result<TTTensor, TtError> {
    check_eps(eps)?;
    if t.dims() == 1 {
        return Ok(t.clone());
    }
    let mut cores = t.cores.clone();
    right_orthogonalize(&mut cores);
    let norm = cores[0].iter().map(|v| v * v).sum::<f64>().sqrt();
    let delta = eps * norm / ((cores.len() - 1) as f64).sqrt();

    for k in 0..cores.len() - 1 {
        let (rl, n, rr) = cores[k].dim();
        let m = cores[k]
            .view()
            .into_shape_with_order((rl * n, rr))
            .unwrap()
            .to_owned();
        let (u, sv, vt) = linalg::svd(&m);
        let r = truncation_rank(&sv, delta);
        cores[k] = reshape3(u.slice(s![.., ..r]), (rl, n, r));
        let mut carry = std2(vt.slice(s![..r, ..]));
        for (i, mut row) in carry.outer_iter_mut().enumerate() {
            row *= sv[i];
        }
        let (nl, nn, nr) = cores[k + 1].dim();
        debug_assert_eq!(nl, rr);
        let next = carry.dot(
            &cores[k + 1]
                .view()
                .into_shape_with_order((nl, nn * nr))
                .unwrap(),
        );
        cores[k + 1] = next.into_shape_with_order((r, nn, nr)).unwrap();
    }
    TTTensor::new(cores)
}

/// Elementwise sum; ranks add at interior bonds (d = 1 adds directly).
pub fn tt_add(a: &TTTensor, b: &TTTensor) -> Result<TTTensor, TtError> {
    let (sa, sb) = (a.mode_sizes(), b.mode_sizes());
    if sa != sb {
        return Err(TtError::ModeSizesDiffer { a: sa, b: sb });
    }
    let d = a.dims();
    if d == 1 {
        let core = &a.cores[0] + &b.cores[0];
        return TTTensor::new(vec![core]);
    }
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let (al, n, ar) = a.cores[k].dim();
        let (bl, _, br) = b.cores[k].dim();
        let core = if k == 0 {
            let mut c = Array3::zeros((1, n, ar + br));
            c.slice_mut(s![.., .., ..ar]).assign(&a.cores[k]);
            c.slice_mut(s![.., .., ar..]).assign(&b.cores[k]);
            c
        } else if k == d - 1 {
            let mut c = Array3::zeros((al + bl, n, 1));
            c.slice_mut(s![..al, .., ..]).assign(&a.cores[k]);
            c.slice_mut(s![al.., .., ..]).assign(&b.cores[k]);
            c
        } else {
            let mut c = Array3::zeros((al + bl, n, ar + br));
            c.slice_mut(s![..al, .., ..ar]).assign(&a.cores[k]);
            c.slice_mut(s![al.., .., ar..]).assign(&b.cores[k]);
            c
        };
        cores.push(core);
    }
    TTTensor::new(cores)
}

/// Multiplies a TT tensor by a scalar (folded into the first core).
pub fn tt_scale(t: &TTTensor, factor: f64) -> TTTensor {
    let mut cores = t.cores.clone();
    cores[0].mapv_inplace(|v| v * factor);
    TTTensor::new(cores).expect("scaling preserves a valid chain")
}

/// `|a - b|_F / |a|_F` computed without densification (falls back to the
/// absolute difference norm when `a` is zero).
pub fn tt_rel_diff(a: &TTTensor, b: &TTTensor) -> Result<f64, TtError> {
    let diff = tt_add(a, &tt_scale(b, -1.0))?;
    let na = tt_norm(a);
    let nd = tt_norm(&diff);
    Ok(if na == 0.0 { nd } else { nd / na })
}

/// Applies one square matrix per mode (`Z_k`, shape `N_k x N_k`) to the
/// corresponding core's node axis: `G_k[a, i, b] <- sum_j Z_k[i, j] G_k[a, j, b]`.
pub fn tt_apply_mode_matrices(t: &TTTensor, mats: &[Array2<f64>]) -> Result<TTTensor, TtError> {
    let sizes = t.mode_sizes();
    if mats.len() != sizes.len() {
        return Err(TtError::WrongMatrixCount {
            expected: sizes.len(),
            got: mats.len(),
        });
    }
    let mut cores = Vec::with_capacity(t.dims());
    for (k, (core, z)) in t.cores.iter().zip(mats).enumerate() {
        let (rl, n, rr) = core.dim();
        if z.nrows() != n || z.ncols() != n {
            return Err(TtError::WrongMatrixShape {
                mode: k,
                rows: z.nrows(),
                cols: z.ncols(),
                n,
            });
        }
        let mut out = Array3::zeros((rl, n, rr));
        for a in 0..rl {
            let slice = core.slice(s![a, .., ..]);
            out.slice_mut(s![a, .., ..]).assign(&z.dot(&slice));
        }
        cores.push(out);
    }
    TTTensor::new(cores)
}

/// Rank-one TT with factor entries drawn uniform on [0, 1) from a seeded
/// ChaCha stream; identical seeds give identical tensors on every platform.
pub fn tt_rank1_random(mode_sizes: &[usize], seed: u64) -> Result<TTTensor, TtError> {
    if mode_sizes.is_empty() || mode_sizes.iter().any(|&n| n == 0) {
        return Err(TtError::EmptyShape);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cores = mode_sizes
        .iter()
        .map(|&n| Array3::from_shape_fn((1, n, 1), |_| rng.gen::<f64>()))
        .collect();
    TTTensor::new(cores)
}

/// Effective rank: the uniform rank r whose storage cost matches the actual
/// core parameter count, i.e. the positive root of
/// `N_1 r + r^2 (N_2 + .. + N_{d-1}) + N_d r = param_count`.
pub fn tt_erank(t: &TTTensor) -> f64 {
    let sizes = t.mode_sizes();
    let d = sizes.len();
    if d == 1 {
        return 1.0;
    }
    let p = t.param_count() as f64;
    let b = (sizes[0] + sizes[d - 1]) as f64;
    let a = sizes[1..d - 1].iter().sum::<usize>() as f64;
    if a == 0.0 {
        p / b
    } else {
        (-b + (b * b + 4.0 * a * p).sqrt()) / (2.0 * a)
    }
}
