//! Benchmark problems and their analytic references: the multivariate
//! Ornstein-Uhlenbeck process (with transitional, time-marginal, and
//! stationary densities) and the three-dimensional dumbbell model with its
//! Kramer observables.

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::cheb::{ChebError, ChebGrid};
use crate::cross::{cross_approximate, CrossConfig, CrossError, IndexBatch};
use crate::linalg;
use crate::tt::{tt_element, TTTensor, TtError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("the Lyapunov system for this drift matrix is singular")]
    SingularLyapunov,
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(transparent)]
    Cross(#[from] CrossError),
    #[error(transparent)]
    Cheb(#[from] ChebError),
    #[error(transparent)]
    Tt(#[from] TtError),
}

/// Normalized isotropic Gaussian density with variance `s` per coordinate,
/// evaluated at a batch of points (one per row).
pub fn gaussian_ic(s: f64, points: &Array2<f64>) -> Vec<f64> {
    assert!(s > 0.0, "gaussian variance must be positive");
    let d = points.ncols() as f64;
    let norm = (2.0 * std::f64::consts::PI * s).powf(-d / 2.0);
    points
        .outer_iter()
        .map(|row| norm * (-row.iter().map(|x| x * x).sum::<f64>() / (2.0 * s)).exp())
        .collect()
}

/// Multivariate Ornstein-Uhlenbeck process `dx = A(mu - x) dt + sqrt(2 D_c) dW`
/// on a cube, started from an isotropic Gaussian of variance `s`.
#[derive(Debug, Clone)]
pub struct OuParams {
    pub a: Array2<f64>,
    pub mu: Array1<f64>,
    pub d_c: f64,
    pub bounds: (f64, f64),
    pub s: f64,
}

impl OuParams {
    pub fn new(
        a: Array2<f64>,
        mu: Array1<f64>,
        d_c: f64,
        bounds: (f64, f64),
        s: f64,
    ) -> Result<Self, ModelError> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(ModelError::InvalidParameter("drift matrix must be square"));
        }
        if mu.len() != a.nrows() {
            return Err(ModelError::InvalidParameter(
                "mean vector length must match the drift matrix",
            ));
        }
        if !a.iter().chain(mu.iter()).all(|v| v.is_finite()) {
            return Err(ModelError::InvalidParameter("parameters must be finite"));
        }
        if !(d_c.is_finite() && d_c > 0.0) {
            return Err(ModelError::InvalidParameter(
                "diffusion coefficient must be positive",
            ));
        }
        if !(bounds.0.is_finite() && bounds.1.is_finite() && bounds.0 < bounds.1) {
            return Err(ModelError::InvalidParameter("invalid domain bounds"));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(ModelError::InvalidParameter(
                "initial variance must be positive",
            ));
        }
        Ok(Self {
            a,
            mu,
            d_c,
            bounds,
            s,
        })
    }

    /// 1-D benchmark: A=1, mu=0, domain [-5,5].
    pub fn benchmark_1d() -> Self {
        Self::new(
            Array2::eye(1),
            Array1::zeros(1),
            0.5,
            (-5.0, 5.0),
            1.0,
        )
        .expect("benchmark parameters are valid")
    }

    /// 3-D benchmark with a non-symmetric coupling matrix.
    pub fn benchmark_3d() -> Self {
        let a = Array2::from_shape_vec(
            (3, 3),
            vec![1.5, 1.0, 0.0, 0.0, 1.0, 0.0, 0.5, 0.3, 1.0],
        )
        .expect("literal shape is correct");
        Self::new(a, Array1::zeros(3), 0.5, (-5.0, 5.0), 1.0)
            .expect("benchmark parameters are valid")
    }

    /// 5-D benchmark with couplings in the last row.
    pub fn benchmark_5d() -> Self {
        let mut a = Array2::eye(5);
        a[[0, 0]] = 1.5;
        a[[4, 0]] = 0.5;
        a[[4, 1]] = 0.3;
        a[[4, 2]] = 0.2;
        Self::new(a, Array1::zeros(5), 0.5, (-5.0, 5.0), 1.0)
            .expect("benchmark parameters are valid")
    }

    pub fn dims(&self) -> usize {
        self.a.nrows()
    }

    /// Drift `f(x, t) = A (mu - x)`, one row per point.
    pub fn drift(&self, points: &Array2<f64>, _t: f64) -> Array2<f64> {
        let mut diff = Array2::zeros(points.raw_dim());
        for (mut row, x) in diff.outer_iter_mut().zip(points.outer_iter()) {
            for k in 0..x.len() {
                row[k] = self.mu[k] - x[k];
            }
        }
        diff.dot(&self.a.t())
    }

    /// Trace of the drift Jacobian, `sum_k df_k/dx_k = -trace(A)`, per point.
    pub fn div_terms(&self, points: &Array2<f64>, _t: f64) -> Vec<f64> {
        let tr: f64 = self.a.diag().sum();
        vec![-tr; points.nrows()]
    }

    /// Mean of the process at time `t` started from `x0`:
    /// `exp(-At) x0 + (I - exp(-At)) mu`.
    pub fn mean(&self, t: f64, x0: &Array1<f64>) -> Array1<f64> {
        let e = linalg::matrix_exponential(&(-t * &self.a));
        let shift = &self.mu - &e.dot(&self.mu);
        e.dot(x0) + shift
    }

    /// Covariance at time `t` by adaptive quadrature of
    /// `int_0^t exp(A(u-t)) (2 D_c I) exp(A^T(u-t)) du` (validation only).
    pub fn covariance_quad(&self, t: f64) -> Array2<f64> {
        let d = self.dims();
        if t == 0.0 {
            return Array2::zeros((d, d));
        }
        let integrand = |u: f64| {
            let e = linalg::matrix_exponential(&((u - t) * &self.a));
            2.0 * self.d_c * e.dot(&e.t())
        };
        let fa = integrand(0.0);
        let fm = integrand(t / 2.0);
        let fb = integrand(t);
        let whole = simpson_slab(&fa, &fm, &fb, t);
        adaptive_simpson(&integrand, 0.0, t, &fa, &fm, &fb, &whole, 1e-12, 24)
    }

    /// 1-D density at time `t` for the zero-mean benchmark: a normal with
    /// variance `Sigma(t) + s exp(-2At)`.
    pub fn analytic_1d(&self, x: f64, t: f64) -> f64 {
        let a = self.a[[0, 0]];
        let var = ou_sigma_1d(t, a, self.d_c) + self.s * (-2.0 * a * t).exp();
        (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    }

    /// Stationary density values at a batch of points, built from the
    /// Lyapunov covariance; in 1-D this reduces to `sqrt(A/pi) exp(-A x^2)`.
    pub fn stationary(&self, points: &Array2<f64>) -> Result<Vec<f64>, ModelError> {
        let w = lyapunov_solve(&self.a, self.d_c)?;
        let (w_inv, det) =
            linalg::sym_pd_inv_det(&w).ok_or(ModelError::NotPositiveDefinite)?;
        let d = self.dims() as f64;
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).powf(d) * det).sqrt();
        Ok(points
            .outer_iter()
            .map(|row| {
                let x = row.to_owned();
                let q = x.dot(&w_inv.dot(&x));
                norm * (-0.5 * q).exp()
            })
            .collect())
    }

    /// Transitional density `rho(x, t | x0)`: a normal with mean
    /// `mean(t, x0)` and covariance `covariance_quad(t)` (validation only).
    pub fn transitional(
        &self,
        x: &Array1<f64>,
        t: f64,
        x0: &Array1<f64>,
    ) -> Result<f64, ModelError> {
        let cov = self.covariance_quad(t);
        let (inv, det) =
            linalg::sym_pd_inv_det(&cov).ok_or(ModelError::NotPositiveDefinite)?;
        let d = self.dims() as f64;
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).powf(d) * det).sqrt();
        let diff = x - &self.mean(t, x0);
        Ok(norm * (-0.5 * diff.dot(&inv.dot(&diff))).exp())
    }
}

fn simpson_slab(fa: &Array2<f64>, fm: &Array2<f64>, fb: &Array2<f64>, h: f64) -> Array2<f64> {
    (fa + &(4.0 * fm) + fb) * (h / 6.0)
}

fn frob(m: &Array2<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    f: &dyn Fn(f64) -> Array2<f64>,
    a: f64,
    b: f64,
    fa: &Array2<f64>,
    fm: &Array2<f64>,
    fb: &Array2<f64>,
    whole: &Array2<f64>,
    tol: f64,
    depth: usize,
) -> Array2<f64> {
    let m = (a + b) / 2.0;
    let flm = f((a + m) / 2.0);
    let frm = f((m + b) / 2.0);
    let left = simpson_slab(fa, &flm, fm, m - a);
    let right = simpson_slab(fm, &frm, fb, b - m);
    let refined = &left + &right;
    let err = frob(&(&refined - whole));
    if depth == 0 || err <= 15.0 * tol * (1.0 + frob(&refined)) {
        return refined;
    }
    adaptive_simpson(f, a, m, fa, &flm, fm, &left, tol / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, &frm, fb, &right, tol / 2.0, depth - 1)
}

/// Variance of the scalar mean-reverting process at time `t`:
/// `(1 - exp(-2At)) * 2 D_c / (2A)`.
pub fn ou_sigma_1d(t: f64, a: f64, d_c: f64) -> f64 {
    (1.0 - (-2.0 * a * t).exp()) * 2.0 * d_c / (2.0 * a)
}

/// Solves `A W + W A^T = 2 D_c I` through the Kronecker-vectorized linear
/// system; the result is symmetrized to remove rounding asymmetry.
pub fn lyapunov_solve(a: &Array2<f64>, d_c: f64) -> Result<Array2<f64>, ModelError> {
    let d = a.nrows();
    let mut system = Array2::zeros((d * d, d * d));
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                // vec(AW): A[i,k] W[k,j]; vec(W A^T): W[i,l] A[j,l].
                system[[i + d * j, k + d * j]] += a[[i, k]];
                system[[i + d * j, i + d * k]] += a[[j, k]];
            }
        }
    }
    let mut rhs = Array2::zeros((d * d, 1));
    for i in 0..d {
        rhs[[i + d * i, 0]] = 2.0 * d_c;
    }
    let sol = linalg::solve(&system, &rhs).ok_or(ModelError::SingularLyapunov)?;
    let w = Array2::from_shape_fn((d, d), |(i, j)| sol[[i + d * j, 0]]);
    Ok((&w + &w.t()) / 2.0)
}

/// Two-bead dumbbell model: shear flow plus a spring potential with a
/// Gaussian repulsive core.
#[derive(Debug, Clone)]
pub struct DumbbellParams {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub d_c: f64,
    pub bounds: (f64, f64),
    pub horizon: f64,
}

impl Default for DumbbellParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 1.0,
            p: 0.5,
            d_c: 0.5,
            bounds: (-10.0, 10.0),
            horizon: 10.0,
        }
    }
}

impl DumbbellParams {
    fn core_weight(&self, norm_sq: f64) -> f64 {
        (-norm_sq / (2.0 * self.p * self.p)).exp()
    }

    /// Drift `f = beta (x2, 0, 0) - x/2 + alpha/(2 p^5) exp(-|x|^2/(2p^2)) x`.
    pub fn drift(&self, points: &Array2<f64>, _t: f64) -> Array2<f64> {
        assert_eq!(points.ncols(), 3, "dumbbell model is three-dimensional");
        let c = self.alpha / (2.0 * self.p.powi(5));
        let mut out = Array2::zeros(points.raw_dim());
        for (mut row, x) in out.outer_iter_mut().zip(points.outer_iter()) {
            let nsq = x.iter().map(|v| v * v).sum::<f64>();
            let g = c * self.core_weight(nsq);
            for k in 0..3 {
                row[k] = (g - 0.5) * x[k];
            }
            row[0] += self.beta * x[1];
        }
        out
    }

    /// Trace of the drift Jacobian per point:
    /// `sum_k [-1/2 + alpha/(2p^5) e(..) - alpha/(2p^7) e(..) x_k^2]`.
    pub fn div_terms(&self, points: &Array2<f64>, _t: f64) -> Vec<f64> {
        assert_eq!(points.ncols(), 3, "dumbbell model is three-dimensional");
        let c5 = self.alpha / (2.0 * self.p.powi(5));
        let c7 = self.alpha / (2.0 * self.p.powi(7));
        points
            .outer_iter()
            .map(|x| {
                let nsq = x.iter().map(|v| v * v).sum::<f64>();
                let e = self.core_weight(nsq);
                -1.5 + 3.0 * c5 * e - c7 * e * nsq
            })
            .collect()
    }

    /// `dphi/dx_k = x_k (1 - alpha/p^5 exp(-|x|^2/(2p^2)))` for the spring
    /// potential `phi = |x|^2/2 + alpha/p^3 exp(-|x|^2/(2p^2))`.
    fn potential_grad_factor(&self, norm_sq: f64) -> f64 {
        1.0 - self.alpha / self.p.powi(5) * self.core_weight(norm_sq)
    }
}

/// Kramer stress observables of a dumbbell density: integrals of
/// `rho (x1 dphi/dx1 - x2 dphi/dx2) / beta^2` (psi) and
/// `rho x1 dphi/dx2 / beta` (eta) over the grid box. The nodal integrand
/// tensors are rebuilt by cross approximation against the density tensor.
pub fn kramer_observables(
    rho: &TTTensor,
    grid: &ChebGrid,
    params: &DumbbellParams,
    cfg: &CrossConfig,
) -> Result<(f64, f64), ModelError> {
    if rho.mode_sizes() != grid.sizes() || grid.dims() != 3 {
        return Err(ModelError::InvalidParameter(
            "density must live on the three-dimensional dumbbell grid",
        ));
    }
    let weighted = |weight: &dyn Fn(&[f64]) -> f64| -> Result<TTTensor, ModelError> {
        let oracle = |batch: &IndexBatch| -> Result<Vec<f64>, CrossError> {
            (0..batch.len())
                .map(|p| {
                    let ix: Vec<usize> = batch.indices().row(p).to_vec();
                    let point = grid.point(&ix);
                    let rho_val = tt_element(rho, &ix)?;
                    Ok(rho_val * weight(&point))
                })
                .collect()
        };
        let out = cross_approximate(oracle, rho, cfg)?;
        Ok(out.tensor)
    };

    let psi_weight = |x: &[f64]| {
        let nsq = x.iter().map(|v| v * v).sum::<f64>();
        let g = params.potential_grad_factor(nsq);
        (x[0] * x[0] - x[1] * x[1]) * g / (params.beta * params.beta)
    };
    let eta_weight = |x: &[f64]| {
        let nsq = x.iter().map(|v| v * v).sum::<f64>();
        let g = params.potential_grad_factor(nsq);
        x[0] * x[1] * g / params.beta
    };

    let psi_tensor = weighted(&psi_weight)?;
    let eta_tensor = weighted(&eta_weight)?;
    let psi = crate::cheb::tt_integrate(&psi_tensor, grid)?;
    let eta = crate::cheb::tt_integrate(&eta_tensor, grid)?;
    Ok((psi, eta))
}
