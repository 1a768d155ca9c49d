//! Chebyshev tensor-product grids: nodes, spectral differentiation,
//! nodal-to-coefficient transforms of TT tensors, interpolant evaluation,
//! and Clenshaw-Curtis quadrature on the same nodes.

use ndarray::{s, Array1, Array2};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::tt::{tt_round, TTTensor, TtError};

#[derive(Debug, Error)]
pub enum ChebError {
    #[error("need at least 2 nodes per mode, got {0}")]
    TooFewNodes(usize),
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("grid has {grid} modes, got {got}")]
    DimensionMismatch { grid: usize, got: usize },
    #[error("mode {mode}: grid size {grid} != tensor mode size {tensor}")]
    SizeMismatch {
        mode: usize,
        grid: usize,
        tensor: usize,
    },
    #[error("coordinate {value} of point {point} is outside mode {mode}'s interval")]
    OutOfDomain {
        point: usize,
        mode: usize,
        value: f64,
    },
    #[error(transparent)]
    Tt(#[from] TtError),
}

/// Tensor product of 1-D Chebyshev (Gauss-Lobatto) grids. Node `n` of mode
/// `k` sits at the affine image of `cos(pi*n/(N_k-1))`, so nodes run from
/// `b_k` down to `a_k`.
#[derive(Debug, Clone)]
pub struct ChebGrid {
    sizes: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    nodes: Vec<Vec<f64>>,
}

impl ChebGrid {
    pub fn new(sizes: Vec<usize>, bounds: Vec<(f64, f64)>) -> Result<Self, ChebError> {
        if sizes.len() != bounds.len() {
            return Err(ChebError::DimensionMismatch {
                grid: sizes.len(),
                got: bounds.len(),
            });
        }
        if sizes.is_empty() {
            return Err(ChebError::TooFewNodes(0));
        }
        let mut nodes = Vec::with_capacity(sizes.len());
        for (&n, &(a, b)) in sizes.iter().zip(&bounds) {
            nodes.push(cheb_nodes(n, a, b)?);
        }
        Ok(Self {
            sizes,
            bounds,
            nodes,
        })
    }

    /// Cube helper: the same size and interval in every dimension.
    pub fn uniform(dims: usize, size: usize, a: f64, b: f64) -> Result<Self, ChebError> {
        Self::new(vec![size; dims], vec![(a, b); dims])
    }

    pub fn dims(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn nodes(&self, mode: usize) -> &[f64] {
        &self.nodes[mode]
    }

    /// Physical coordinates of the grid point at a multi-index.
    pub fn point(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .enumerate()
            .map(|(k, &i)| self.nodes[k][i])
            .collect()
    }

    pub fn total_points(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Maps a physical coordinate of mode `k` to reference coordinates.
    fn to_reference(&self, mode: usize, x: f64) -> f64 {
        let (a, b) = self.bounds[mode];
        2.0 * (x - a) / (b - a) - 1.0
    }
}

fn check_interval(a: f64, b: f64) -> Result<(), ChebError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(ChebError::InvalidInterval(a, b));
    }
    Ok(())
}

/// Chebyshev (Gauss-Lobatto) nodes `cos(pi*n/(N-1))`, n = 0..N-1, mapped
/// onto [a, b]; descending, with the endpoints hit exactly.
pub fn cheb_nodes(n: usize, a: f64, b: f64) -> Result<Vec<f64>, ChebError> {
    if n < 2 {
        return Err(ChebError::TooFewNodes(n));
    }
    check_interval(a, b)?;
    let m = (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let r = if i == 0 {
                1.0
            } else if i == n - 1 {
                -1.0
            } else {
                (std::f64::consts::PI * i as f64 / m).cos()
            };
            a + (b - a) * (r + 1.0) / 2.0
        })
        .collect())
}

/// First-order Chebyshev spectral differentiation matrix on [a, b]:
/// corner entries +-(2(N-1)^2+1)/6, diagonal -x_j/(2(1-x_j^2)), off-diagonal
/// (c_i/c_j)(-1)^(i+j)/(x_i-x_j), all scaled by 2/(b-a).
pub fn cheb_diff1(n: usize, a: f64, b: f64) -> Result<Array2<f64>, ChebError> {
    if n < 2 {
        return Err(ChebError::TooFewNodes(n));
    }
    check_interval(a, b)?;
    let x = cheb_nodes(n, -1.0, 1.0)?;
    let c = |i: usize| if i == 0 || i == n - 1 { 2.0 } else { 1.0 };
    let mut d = Array2::zeros((n, n));
    let corner = (2.0 * ((n - 1) as f64).powi(2) + 1.0) / 6.0;
    for i in 0..n {
        for j in 0..n {
            d[[i, j]] = if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                (c(i) / c(j)) * sign / (x[i] - x[j])
            } else if i == 0 {
                corner
            } else if i == n - 1 {
                -corner
            } else {
                -x[i] / (2.0 * (1.0 - x[i] * x[i]))
            };
        }
    }
    Ok(d * (2.0 / (b - a)))
}

/// Second-order spectral differentiation matrix: the square of
/// [`cheb_diff1`].
pub fn cheb_diff2(n: usize, a: f64, b: f64) -> Result<Array2<f64>, ChebError> {
    let d = cheb_diff1(n, a, b)?;
    Ok(d.dot(&d))
}

/// Values `[T_0(x), .., T_nmax(x)]` by the three-term recurrence
/// `T_{k+1} = 2x T_k - T_{k-1}`; `x` is in reference coordinates.
pub fn cheb_poly_eval(n_max: usize, x: f64) -> Vec<f64> {
    let mut t = Vec::with_capacity(n_max + 1);
    t.push(1.0);
    if n_max == 0 {
        return t;
    }
    t.push(x);
    for k in 1..n_max {
        t.push(2.0 * x * t[k] - t[k - 1]);
    }
    t
}

/// Clenshaw-Curtis quadrature weights on the N Chebyshev nodes of [a, b];
/// exact for polynomials of degree <= N-1.
pub fn cc_weights(n: usize, a: f64, b: f64) -> Result<Vec<f64>, ChebError> {
    if n < 2 {
        return Err(ChebError::TooFewNodes(n));
    }
    check_interval(a, b)?;
    let m = n - 1;
    let mf = m as f64;
    let scale = (b - a) / 2.0;
    let mut w = vec![0.0; n];
    for (j, wj) in w.iter_mut().enumerate() {
        let cj = if j == 0 || j == m { 1.0 } else { 2.0 };
        let mut sum = 0.0;
        for k in 1..=m / 2 {
            let bk = if 2 * k == m { 1.0 } else { 2.0 };
            sum += bk * (2.0 * k as f64 * j as f64 * std::f64::consts::PI / mf).cos()
                / ((4 * k * k - 1) as f64);
        }
        *wj = scale * (cj / mf) * (1.0 - sum);
    }
    Ok(w)
}

/// Chebyshev interpolation coefficients of a nodal TT tensor, kept in TT
/// form on the grid they were built from.
#[derive(Debug, Clone)]
pub struct ChebCoeffs {
    tensor: TTTensor,
    grid: ChebGrid,
}

impl ChebCoeffs {
    /// Wraps an existing coefficient tensor; sizes must match the grid.
    pub fn new(tensor: TTTensor, grid: ChebGrid) -> Result<Self, ChebError> {
        check_sizes(&tensor, &grid)?;
        Ok(Self { tensor, grid })
    }

    pub fn tensor(&self) -> &TTTensor {
        &self.tensor
    }

    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }
}

fn check_sizes(t: &TTTensor, grid: &ChebGrid) -> Result<(), ChebError> {
    let sizes = t.mode_sizes();
    if sizes.len() != grid.dims() {
        return Err(ChebError::DimensionMismatch {
            grid: grid.dims(),
            got: sizes.len(),
        });
    }
    for (mode, (&ts, &gs)) in sizes.iter().zip(grid.sizes()).enumerate() {
        if ts != gs {
            return Err(ChebError::SizeMismatch {
                mode,
                grid: gs,
                tensor: ts,
            });
        }
    }
    Ok(())
}

/// Nodal-to-coefficient transform, core by core: every length-N fiber along
/// the node axis is mirror-extended to length 2N-2, passed through a real
/// FFT, cropped to its first N entries with the first and last halved, and
/// scaled by 1/(N-1). The result is rounded at `eps` and satisfies the
/// collocation identities at all grid nodes within 10*eps relative.
pub fn interp_coeffs(
    nodal: &TTTensor,
    grid: &ChebGrid,
    eps: f64,
) -> Result<ChebCoeffs, ChebError> {
    check_sizes(nodal, grid)?;
    let mut planner = FftPlanner::<f64>::new();
    let mut cores = Vec::with_capacity(nodal.dims());
    for core in nodal.cores() {
        let (rl, n, rr) = core.dim();
        let len = 2 * n - 2;
        let fft = planner.plan_fft_forward(len);
        let mut out = core.clone();
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        for a in 0..rl {
            for b in 0..rr {
                for i in 0..n {
                    buf[i] = Complex::new(core[[a, i, b]], 0.0);
                }
                for i in n..len {
                    buf[i] = Complex::new(core[[a, 2 * n - 2 - i, b]], 0.0);
                }
                fft.process(&mut buf);
                let scale = 1.0 / (n - 1) as f64;
                for i in 0..n {
                    let halve = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    out[[a, i, b]] = buf[i].re * scale * halve;
                }
            }
        }
        cores.push(out);
    }
    let tensor = tt_round(&TTTensor::new(cores)?, eps)?;
    ChebCoeffs::new(tensor, grid.clone())
}

/// Small relative slack when checking that a point sits inside the closed
/// domain box, to absorb the rounding of the affine map.
const DOMAIN_TOL: f64 = 1e-9;

/// Evaluates the Chebyshev interpolant at a batch of physical points
/// (rows of `points`). Points outside the closed domain box are rejected:
/// the interpolant does not extrapolate.
pub fn interp_eval(coeffs: &ChebCoeffs, points: &Array2<f64>) -> Result<Vec<f64>, ChebError> {
    let grid = &coeffs.grid;
    let d = grid.dims();
    if points.ncols() != d {
        return Err(ChebError::DimensionMismatch {
            grid: d,
            got: points.ncols(),
        });
    }
    let cores = coeffs.tensor.cores();
    let mut values = Vec::with_capacity(points.nrows());
    let mut tvals: Vec<Array1<f64>> = Vec::with_capacity(d);
    for (p, row) in points.outer_iter().enumerate() {
        tvals.clear();
        for k in 0..d {
            let r = grid.to_reference(k, row[k]);
            if r < -1.0 - DOMAIN_TOL || r > 1.0 + DOMAIN_TOL {
                return Err(ChebError::OutOfDomain {
                    point: p,
                    mode: k,
                    value: row[k],
                });
            }
            let r = r.clamp(-1.0, 1.0);
            tvals.push(Array1::from(cheb_poly_eval(grid.sizes[k] - 1, r)));
        }
        values.push(contract_chain(cores, &tvals));
    }
    Ok(values)
}

/// Contracts each core's node axis with a vector and multiplies the chain;
/// shared by interpolant evaluation and quadrature.
fn contract_chain(cores: &[ndarray::Array3<f64>], vecs: &[Array1<f64>]) -> f64 {
    let first = cores[0].slice(s![0, .., ..]);
    let mut v: Array1<f64> = vecs[0].dot(&first);
    for (core, w) in cores[1..].iter().zip(&vecs[1..]) {
        let (rl, _, rr) = core.dim();
        let mut m = Array2::zeros((rl, rr));
        for a in 0..rl {
            let row = w.dot(&core.slice(s![a, .., ..]));
            m.row_mut(a).assign(&row);
        }
        v = v.dot(&m);
    }
    v[0]
}

/// Tensor-product Clenshaw-Curtis integral of a nodal TT tensor over the
/// grid's box, evaluated by contracting each core with the 1-D weights.
pub fn tt_integrate(t: &TTTensor, grid: &ChebGrid) -> Result<f64, ChebError> {
    check_sizes(t, grid)?;
    let mut weights = Vec::with_capacity(grid.dims());
    for k in 0..grid.dims() {
        let (a, b) = grid.bounds[k];
        weights.push(Array1::from(cc_weights(grid.sizes[k], a, b)?));
    }
    Ok(contract_chain(t.cores(), &weights))
}
