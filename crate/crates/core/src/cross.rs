//! Rank-adaptive cross approximation: reconstructs a TT tensor from a
//! black-box element oracle by sampling it on crosses of row/column index
//! sets chosen with the maxvol pivoting rule, enriching ranks with random
//! kick indices until successive sweep iterates agree.

use std::collections::{HashMap, HashSet};

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cheb::ChebGrid;
use crate::linalg;
use crate::tt::{tt_rel_diff, TTTensor, TtError};

#[derive(Debug, Error)]
pub enum CrossError {
    #[error("tolerance must be a positive finite number, got {0}")]
    BadTolerance(f64),
    #[error("kick_rank must be at least 1")]
    BadKickRank,
    #[error("maxvol delta must be nonnegative and finite, got {0}")]
    BadDelta(f64),
    #[error("matrix has fewer rows ({rows}) than columns ({cols})")]
    ShortMatrix { rows: usize, cols: usize },
    #[error("matrix is numerically rank-deficient")]
    RankDeficient,
    #[error("oracle returned a nonfinite value at index {index:?}")]
    NonfiniteValue { index: Vec<usize> },
    #[error("oracle returned {got} values for a batch of {want}")]
    WrongValueCount { got: usize, want: usize },
    #[error("guess mode sizes {guess:?} do not match grid sizes {grid:?}")]
    GridMismatch { guess: Vec<usize>, grid: Vec<usize> },
    #[error("oracle evaluation failed: {0}")]
    Oracle(#[source] Box<dyn std::error::Error + Send + Sync>),
    #[error(transparent)]
    Tt(#[from] TtError),
}

impl CrossError {
    /// Wraps an arbitrary failure raised inside a caller-supplied oracle.
    pub fn oracle(err: impl std::error::Error + Send + Sync + 'static) -> Self {
        Self::Oracle(Box::new(err))
    }
}

/// Knobs of the cross-approximation loop.
#[derive(Debug, Clone)]
pub struct CrossConfig {
    /// Relative Frobenius distance between successive sweep iterates at
    /// which the loop stops.
    pub eps_ca: f64,
    /// Hard cap on half-sweeps (one left-to-right or right-to-left pass).
    pub max_sweeps: usize,
    /// Number of random indices added to every bond per adaptation round.
    pub kick_rank: usize,
    /// Pivot dominance threshold of [`maxvol`].
    pub maxvol_delta: f64,
    /// Seed for the random bond enrichment.
    pub seed: u64,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            eps_ca: 1e-6,
            max_sweeps: 50,
            kick_rank: 2,
            maxvol_delta: 0.01,
            seed: 0,
        }
    }
}

impl CrossConfig {
    fn validate(&self) -> Result<(), CrossError> {
        if !(self.eps_ca.is_finite() && self.eps_ca > 0.0) {
            return Err(CrossError::BadTolerance(self.eps_ca));
        }
        if self.kick_rank == 0 {
            return Err(CrossError::BadKickRank);
        }
        if !(self.maxvol_delta.is_finite() && self.maxvol_delta >= 0.0) {
            return Err(CrossError::BadDelta(self.maxvol_delta));
        }
        Ok(())
    }
}

/// A batch of multi-indices handed to the element oracle, one per row.
#[derive(Debug, Clone)]
pub struct IndexBatch {
    indices: Array2<usize>,
}

impl IndexBatch {
    pub fn from_rows(rows: &[Vec<usize>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let mut indices = Array2::zeros((rows.len(), d));
        for (p, row) in rows.iter().enumerate() {
            for (k, &i) in row.iter().enumerate() {
                indices[[p, k]] = i;
            }
        }
        Self { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.nrows() == 0
    }

    pub fn dims(&self) -> usize {
        self.indices.ncols()
    }

    pub fn indices(&self) -> &Array2<usize> {
        &self.indices
    }
}

/// What a cross-approximation run produced.
#[derive(Debug, Clone)]
pub struct CrossOutcome {
    /// The last sweep iterate; interpolates the oracle exactly on all
    /// sampled crosses. Not rounded — callers round at their tolerance.
    pub tensor: TTTensor,
    /// Whether successive iterates came within `eps_ca` before the sweep
    /// cap; if false, `tensor` is the best (= last) iterate.
    pub converged: bool,
    /// Half-sweeps performed.
    pub sweeps: usize,
    /// Distinct oracle entries evaluated (cache misses).
    pub oracle_evals: usize,
}

/// Picks `r` rows of a tall full-column-rank matrix `m` (n x r) such that
/// every entry of `m * inv(m[rows, :])` has magnitude at most `1 + delta`:
/// the selected submatrix has quasi-maximal volume. Starts from a
/// partial-pivot LU seed (falling back to a pivoted orthogonalization of
/// the rows if that is singular) and repeatedly swaps in the worst
/// violating row via a rank-1 update.
pub fn maxvol(m: &Array2<f64>, delta: f64) -> Result<Vec<usize>, CrossError> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(CrossError::BadDelta(delta));
    }
    let (n, r) = m.dim();
    if n < r {
        return Err(CrossError::ShortMatrix { rows: n, cols: r });
    }
    if r == 0 || n == 0 {
        return Err(CrossError::RankDeficient);
    }

    let mut idx = match lu_seed(m) {
        Some(idx) => idx,
        None => greedy_seed(m)?,
    };
    let mut b = match interpolation_matrix(m, &idx) {
        Some(b) => b,
        None => {
            idx = greedy_seed(m)?;
            interpolation_matrix(m, &idx).ok_or(CrossError::RankDeficient)?
        }
    };

    // Each swap grows |det(m[idx,:])| by the pivot magnitude > 1+delta, so
    // the loop terminates; the cap is a safety net against stagnation in
    // borderline floating-point cases.
    for _ in 0..(2 * n + 512) {
        let (mut bi, mut bj, mut bv) = (0, 0, 0.0);
        for i in 0..n {
            for j in 0..r {
                let v = b[[i, j]].abs();
                if v > bv {
                    (bi, bj, bv) = (i, j, v);
                }
            }
        }
        if bv <= 1.0 + delta {
            break;
        }
        let piv = b[[bi, bj]];
        let col: Vec<f64> = (0..n).map(|i| b[[i, bj]]).collect();
        let mut row: Vec<f64> = (0..r).map(|j| b[[bi, j]]).collect();
        row[bj] -= 1.0;
        for i in 0..n {
            let f = col[i] / piv;
            if f != 0.0 {
                for j in 0..r {
                    b[[i, j]] -= f * row[j];
                }
            }
        }
        idx[bj] = bi;
    }
    Ok(idx)
}

/// Row permutation from Gaussian elimination with partial pivoting; `None`
/// when a pivot collapses (matrix effectively rank-deficient for LU).
fn lu_seed(m: &Array2<f64>) -> Option<Vec<usize>> {
    let (n, r) = m.dim();
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..r {
        let mut best = j;
        let mut bestv = a[[j, j]].abs();
        for i in j + 1..n {
            let v = a[[i, j]].abs();
            if v > bestv {
                best = i;
                bestv = v;
            }
        }
        if bestv <= 1e-12 * scale {
            return None;
        }
        if best != j {
            for c in 0..r {
                a.swap([j, c], [best, c]);
            }
            perm.swap(j, best);
        }
        let piv = a[[j, j]];
        for i in j + 1..n {
            let f = a[[i, j]] / piv;
            if f != 0.0 {
                for c in j..r {
                    a[[i, c]] -= f * a[[j, c]];
                }
            }
        }
    }
    Some(perm[..r].to_vec())
}

/// Column-pivoted fallback seed: greedily picks the row with the largest
/// residual norm and orthogonalizes the rest against it.
fn greedy_seed(m: &Array2<f64>) -> Result<Vec<usize>, CrossError> {
    let (n, r) = m.dim();
    let mut residual: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = residual.iter().map(|v| norm(v)).fold(0.0f64, f64::max).max(1.0);
    let mut chosen = Vec::with_capacity(r);
    for _ in 0..r {
        let (mut best, mut bestv) = (0, -1.0);
        for (i, v) in residual.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let nv = norm(v);
            if nv > bestv {
                best = i;
                bestv = nv;
            }
        }
        if bestv <= 1e-12 * scale {
            return Err(CrossError::RankDeficient);
        }
        let q: Vec<f64> = residual[best].iter().map(|v| v / bestv).collect();
        chosen.push(best);
        for v in residual.iter_mut() {
            let dot: f64 = v.iter().zip(&q).map(|(a, b)| a * b).sum();
            for (x, qx) in v.iter_mut().zip(&q) {
                *x -= dot * qx;
            }
        }
    }
    Ok(chosen)
}

/// `m * inv(m[idx, :])`, or `None` when the pivot block is singular.
fn interpolation_matrix(m: &Array2<f64>, idx: &[usize]) -> Option<Array2<f64>> {
    let r = idx.len();
    let block = Array2::from_shape_fn((r, m.ncols()), |(i, j)| m[[idx[i], j]]);
    let bt = linalg::solve(&block.t().to_owned(), &m.t().to_owned())?;
    Some(bt.t().to_owned())
}

/// Oracle adapter: batches, caches, and sanity-checks element evaluations.
struct Sampler<F> {
    evaluate: F,
    cache: HashMap<Vec<usize>, f64>,
    evals: usize,
}

impl<F> Sampler<F>
where
    F: FnMut(&IndexBatch) -> Result<Vec<f64>, CrossError>,
{
    fn new(evaluate: F) -> Self {
        Self {
            evaluate,
            cache: HashMap::new(),
            evals: 0,
        }
    }

    fn values(&mut self, indices: &[Vec<usize>]) -> Result<Vec<f64>, CrossError> {
        let mut missing: Vec<Vec<usize>> = Vec::new();
        let mut queued: HashSet<&[usize]> = HashSet::new();
        for ix in indices {
            if !self.cache.contains_key(ix) && queued.insert(ix.as_slice()) {
                missing.push(ix.clone());
            }
        }
        drop(queued);
        if !missing.is_empty() {
            let batch = IndexBatch::from_rows(&missing);
            let values = (self.evaluate)(&batch)?;
            if values.len() != missing.len() {
                return Err(CrossError::WrongValueCount {
                    got: values.len(),
                    want: missing.len(),
                });
            }
            for (ix, v) in missing.into_iter().zip(values) {
                if !v.is_finite() {
                    return Err(CrossError::NonfiniteValue { index: ix });
                }
                self.cache.insert(ix, v);
                self.evals += 1;
            }
        }
        Ok(indices.iter().map(|ix| self.cache[ix]).collect())
    }
}

/// Full multi-indices of the left-to-right sample matrix: rows run over
/// (prefix, node) pairs with the node minor, columns over suffixes.
fn lr_indices(
    prefixes: &[Vec<usize>],
    n: usize,
    suffixes: &[Vec<usize>],
) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(prefixes.len() * n * suffixes.len());
    for prefix in prefixes {
        for i in 0..n {
            for suffix in suffixes {
                let mut ix = Vec::with_capacity(prefix.len() + 1 + suffix.len());
                ix.extend_from_slice(prefix);
                ix.push(i);
                ix.extend_from_slice(suffix);
                out.push(ix);
            }
        }
    }
    out
}

/// Full multi-indices of the right-to-left sample matrix: rows run over
/// (node, suffix) pairs with the suffix minor, columns over prefixes.
fn rl_indices(
    prefixes: &[Vec<usize>],
    n: usize,
    suffixes: &[Vec<usize>],
) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(prefixes.len() * n * suffixes.len());
    for i in 0..n {
        for suffix in suffixes {
            for prefix in prefixes {
                let mut ix = Vec::with_capacity(prefix.len() + 1 + suffix.len());
                ix.extend_from_slice(prefix);
                ix.push(i);
                ix.extend_from_slice(suffix);
                out.push(ix);
            }
        }
    }
    out
}

/// `q * inv(q[idx, :])` for the orthonormal factor of a sample matrix.
fn interpolation_or_err(q: &Array2<f64>, idx: &[usize]) -> Result<Array2<f64>, CrossError> {
    interpolation_matrix(q, idx).ok_or(CrossError::RankDeficient)
}

/// Reconstructs a TT tensor from a black-box element oracle.
///
/// Alternates left-to-right and right-to-left sweeps. At each bond the
/// oracle is sampled on the cross of the current row/column index sets, the
/// orthonormal factor of the samples is pivoted with [`maxvol`], and the
/// core is replaced by the resulting interpolation matrix. Every round
/// after the first enriches all column sets with `kick_rank` random indices
/// (rank adaptation). The loop stops once the relative Frobenius distance
/// between successive round iterates drops to `eps_ca`, or at `max_sweeps`.
pub fn cross_approximate<F>(
    evaluate: F,
    guess: &TTTensor,
    cfg: &CrossConfig,
) -> Result<CrossOutcome, CrossError>
where
    F: FnMut(&IndexBatch) -> Result<Vec<f64>, CrossError>,
{
    cfg.validate()?;
    let sizes = guess.mode_sizes().to_vec();
    let d = sizes.len();
    let mut sampler = Sampler::new(evaluate);

    if d == 1 {
        let indices: Vec<Vec<usize>> = (0..sizes[0]).map(|i| vec![i]).collect();
        let values = sampler.values(&indices)?;
        let core = Array3::from_shape_vec((1, sizes[0], 1), values)
            .expect("vector reshapes into a single core");
        return Ok(CrossOutcome {
            tensor: TTTensor::new(vec![core])?,
            converged: true,
            sweeps: 1,
            oracle_evals: sampler.evals,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // suffixes[k] spans bond k: multi-indices of modes k..d. suffixes[d] is
    // the empty suffix; suffixes[0] is never used.
    let mut suffixes = init_suffixes(guess, cfg.maxvol_delta)?;

    let mut previous = guess.clone();
    let mut converged = false;
    let mut sweeps = 0;
    let rounds = (cfg.max_sweeps / 2).max(1);
    let mut tensor = guess.clone();

    'rounds: for round in 0..rounds {
        if round > 0 {
            enrich(&mut suffixes, &sizes, cfg.kick_rank, &mut rng);
        }

        // Left-to-right half-sweep: rebuild the nested prefix sets and form
        // an iterate whose last core holds raw samples.
        let mut prefixes: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new()]];
        let mut lr_cores: Vec<Array3<f64>> = Vec::with_capacity(d);
        for k in 0..d - 1 {
            let rows = prefixes[k].len() * sizes[k];
            let cols = suffixes[k + 1].len();
            let all = lr_indices(&prefixes[k], sizes[k], &suffixes[k + 1]);
            let m = Array2::from_shape_vec((rows, cols), sampler.values(&all)?)
                .expect("index count matches matrix shape");
            let (q, _) = linalg::qr_thin(&m);
            let idx = maxvol(&q, cfg.maxvol_delta)?;
            let interp = interpolation_or_err(&q, &idx)?;
            let nleft = prefixes[k].len();
            lr_cores.push(Array3::from_shape_fn(
                (nleft, sizes[k], idx.len()),
                |(a, i, b)| interp[[a * sizes[k] + i, b]],
            ));
            prefixes.push(
                idx.iter()
                    .map(|&f| {
                        let mut p = prefixes[k][f / sizes[k]].clone();
                        p.push(f % sizes[k]);
                        p
                    })
                    .collect(),
            );
        }
        let last = lr_indices(&prefixes[d - 1], sizes[d - 1], &[Vec::new()]);
        let values = sampler.values(&last)?;
        lr_cores.push(
            Array3::from_shape_vec((prefixes[d - 1].len(), sizes[d - 1], 1), values)
                .expect("index count matches core shape"),
        );
        sweeps += 1;
        tensor = TTTensor::new(lr_cores)?;
        // Successive iterates can agree spuriously before any enrichment has
        // probed for rank directions the initial crosses miss (the two
        // half-sweeps reach a pivot fixed point immediately when the guess
        // rank is too low), so convergence is only declared once at least
        // one enriched round confirms the agreement.
        if round > 0 && tt_rel_diff(&tensor, &previous)? <= cfg.eps_ca {
            converged = true;
            break 'rounds;
        }
        previous = tensor.clone();

        // Right-to-left half-sweep: rebuild the nested suffix sets and form
        // an iterate whose first core holds raw samples.
        let mut cores: Vec<Array3<f64>> = vec![Array3::zeros((0, 0, 0)); d];
        for k in (1..d).rev() {
            let rows = sizes[k] * suffixes[k + 1].len();
            let cols = prefixes[k].len();
            let all = rl_indices(&prefixes[k], sizes[k], &suffixes[k + 1]);
            let m = Array2::from_shape_vec((rows, cols), sampler.values(&all)?)
                .expect("index count matches matrix shape");
            let (q, _) = linalg::qr_thin(&m);
            let idx = maxvol(&q, cfg.maxvol_delta)?;
            let nsuf = suffixes[k + 1].len();
            suffixes[k] = idx
                .iter()
                .map(|&f| {
                    let mut s = Vec::with_capacity(d - k);
                    s.push(f / nsuf);
                    s.extend_from_slice(&suffixes[k + 1][f % nsuf]);
                    s
                })
                .collect();
            let interp = interpolation_or_err(&q, &idx)?;
            let r = idx.len();
            let mut core = Array3::zeros((r, sizes[k], nsuf));
            for a in 0..r {
                for row in 0..rows {
                    core[[a, row / nsuf, row % nsuf]] = interp[[row, a]];
                }
            }
            cores[k] = core;
        }
        let first = lr_indices(&[Vec::new()], sizes[0], &suffixes[1]);
        let values = sampler.values(&first)?;
        cores[0] = Array3::from_shape_vec((1, sizes[0], suffixes[1].len()), values)
            .expect("index count matches core shape");
        sweeps += 1;

        tensor = TTTensor::new(cores)?;
        if round > 0 && tt_rel_diff(&tensor, &previous)? <= cfg.eps_ca {
            converged = true;
            break 'rounds;
        }
        previous = tensor.clone();
    }

    Ok(CrossOutcome {
        tensor,
        converged,
        sweeps,
        oracle_evals: sampler.evals,
    })
}

/// Collapses the guess right-to-left with pivoted orthogonalization to
/// obtain an initial nested family of suffix sets (sized by the guess
/// ranks).
fn init_suffixes(
    guess: &TTTensor,
    delta: f64,
) -> Result<Vec<Vec<Vec<usize>>>, CrossError> {
    let d = guess.dims();
    let sizes = guess.mode_sizes();
    let mut suffixes: Vec<Vec<Vec<usize>>> = vec![Vec::new(); d + 1];
    suffixes[d] = vec![Vec::new()];
    let mut cores: Vec<Array3<f64>> = guess.cores().to_vec();
    for k in (1..d).rev() {
        let (rl, n, rr) = cores[k].dim();
        let m = Array2::from_shape_fn((n * rr, rl), |(row, a)| {
            cores[k][[a, row / rr, row % rr]]
        });
        let (q, _) = linalg::qr_thin(&m);
        let idx = maxvol(&q, delta)?;
        let nsuf = suffixes[k + 1].len().max(1);
        suffixes[k] = idx
            .iter()
            .map(|&f| {
                let node = f / rr;
                let tail = f % rr;
                let mut s = Vec::with_capacity(d - k);
                s.push(node.min(sizes[k] - 1));
                if rr == suffixes[k + 1].len() {
                    s.extend_from_slice(&suffixes[k + 1][tail]);
                } else {
                    // Guess rank exceeds the suffix count (non-minimal
                    // guess); reuse the first suffix.
                    s.extend_from_slice(&suffixes[k + 1][tail % nsuf]);
                }
                s
            })
            .collect();
        // Absorb the selected rows into the previous core so its right rank
        // matches the new suffix count.
        let s = Array2::from_shape_fn((idx.len(), rl), |(i, a)| m[[idx[i], a]]);
        let (pl, pn, _) = cores[k - 1].dim();
        let flat = Array2::from_shape_fn((pl * pn, rl), |(row, a)| {
            cores[k - 1][[row / pn, row % pn, a]]
        });
        let contracted = flat.dot(&s.t());
        cores[k - 1] = Array3::from_shape_fn((pl, pn, idx.len()), |(a, i, c)| {
            contracted[[a * pn + i, c]]
        });
    }
    Ok(suffixes)
}

/// Adds `kick` random suffixes to every interior bond (deduplicated; the
/// new indices need not be nested — they only widen the sampled crosses).
fn enrich(
    suffixes: &mut [Vec<Vec<usize>>],
    sizes: &[usize],
    kick: usize,
    rng: &mut ChaCha8Rng,
) {
    let d = sizes.len();
    for k in 1..d {
        let space: usize = sizes[k..].iter().product();
        let mut have: HashSet<Vec<usize>> = suffixes[k].iter().cloned().collect();
        let mut added = 0;
        let mut attempts = 0;
        while added < kick && have.len() < space && attempts < 32 * kick {
            let cand: Vec<usize> = (k..d).map(|m| rng.gen_range(0..sizes[m])).collect();
            attempts += 1;
            if have.insert(cand.clone()) {
                suffixes[k].push(cand);
                added += 1;
            }
        }
    }
}

/// Cross approximation of a function of points on a Chebyshev grid: the
/// oracle receives the physical coordinates of the requested grid nodes
/// (one point per row) and the result holds its values at the nodes.
pub fn cross_on_cheb_grid<F>(
    mut point_func: F,
    grid: &ChebGrid,
    guess: &TTTensor,
    cfg: &CrossConfig,
) -> Result<CrossOutcome, CrossError>
where
    F: FnMut(&Array2<f64>) -> Result<Vec<f64>, CrossError>,
{
    if guess.mode_sizes() != grid.sizes() {
        return Err(CrossError::GridMismatch {
            guess: guess.mode_sizes().to_vec(),
            grid: grid.sizes().to_vec(),
        });
    }
    let d = grid.dims();
    let oracle = |batch: &IndexBatch| {
        let mut points = Array2::zeros((batch.len(), d));
        for p in 0..batch.len() {
            for k in 0..d {
                points[[p, k]] = grid.nodes(k)[batch.indices()[[p, k]]];
            }
        }
        point_func(&points)
    };
    cross_approximate(oracle, guess, cfg)
}
