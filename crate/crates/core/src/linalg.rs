//! Dense linear-algebra helpers shared by the TT and solver code.
//!
//! Tensor data lives in `ndarray`; factorizations run through `nalgebra`,
//! which keeps the crate free of system BLAS/LAPACK dependencies. Everything
//! here operates on matrices that are small by construction (mode sizes and
//! TT ranks), so the conversion cost is irrelevant.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};

pub(crate) fn to_na(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(m.nrows(), m.ncols(), m.iter().copied())
}

pub(crate) fn to_nd(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Thin SVD `m = u * diag(s) * vt` with singular values sorted descending.
pub(crate) fn svd(m: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
    let svd = to_na(m).svd(true, true);
    let u = to_nd(&svd.u.expect("svd requested u"));
    let vt = to_nd(&svd.v_t.expect("svd requested v_t"));
    let s = Array1::from_iter(svd.singular_values.iter().copied());
    (u, s, vt)
}

/// Thin QR `m = q * r` with `q` of shape (rows, min(rows, cols)).
pub(crate) fn qr_thin(m: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let qr = to_na(m).qr();
    (to_nd(&qr.q()), to_nd(&qr.r()))
}

/// Solves `a * x = b` for square `a`; `None` if `a` is singular.
pub(crate) fn solve(a: &Array2<f64>, b: &Array2<f64>) -> Option<Array2<f64>> {
    let lu = to_na(a).lu();
    lu.solve(&to_na(b)).map(|x| to_nd(&x))
}

/// Inverse and determinant of a symmetric positive-definite matrix via its
/// Cholesky factorization; `None` when the matrix is not positive definite.
pub(crate) fn sym_pd_inv_det(a: &Array2<f64>) -> Option<(Array2<f64>, f64)> {
    let chol = to_na(a).cholesky()?;
    let det = chol.determinant();
    Some((to_nd(&chol.inverse()), det))
}

/// 1-norm (maximum absolute column sum).
fn norm_1(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum())
        .fold(0.0, f64::max)
}

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE_9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm thresholds below which the Pade order (3, 5, 7, 9, 13) meets double
// precision without scaling.
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

/// Matrix exponential by scaling-and-squaring with diagonal Pade
/// approximants, order picked from the 1-norm (13/13 at the top).
pub(crate) fn matrix_exponential(a: &Array2<f64>) -> Array2<f64> {
    assert_eq!(a.nrows(), a.ncols(), "matrix exponential needs a square matrix");
    let a = to_na(a);
    let n = a.nrows();
    let norm = norm_1(&a);

    let orders: [(usize, &[f64]); 4] =
        [(3, &PADE_3), (5, &PADE_5), (7, &PADE_7), (9, &PADE_9)];
    for (idx, (order, coeffs)) in orders.iter().enumerate() {
        if norm <= THETA[idx] {
            let (u, v) = pade_low(&a, *order, coeffs);
            return to_nd(&pade_combine(u, v));
        }
    }

    // Scale so the 1-norm drops below the order-13 threshold, then square
    // back.
    let squarings = if norm > THETA[4] {
        (norm / THETA[4]).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let scaled = &a / 2f64.powi(squarings as i32);
    let (u, v) = pade_13(&scaled);
    let mut e = pade_combine(u, v);
    for _ in 0..squarings {
        e = &e * &e;
    }
    debug_assert_eq!(e.nrows(), n);
    to_nd(&e)
}

/// U and V of the order-m diagonal Pade approximant, m in {3, 5, 7, 9}.
fn pade_low(a: &DMatrix<f64>, order: usize, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let a2 = a * a;
    // Powers a2^0 .. a2^((order-1)/2).
    let mut powers = vec![DMatrix::identity(n, n)];
    for _ in 0..order / 2 {
        powers.push(powers.last().unwrap() * &a2);
    }
    let mut u_inner = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        u_inner += p * b[2 * k + 1];
        v += p * b[2 * k];
    }
    (a * u_inner, v)
}

fn pade_13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = &PADE_13;
    let id = DMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u = a * (&a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &id * b[1]);
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &id * b[0];
    (u, v)
}

/// Forms `(V - U)^-1 (V + U)`.
fn pade_combine(u: DMatrix<f64>, v: DMatrix<f64>) -> DMatrix<f64> {
    let p = &v + &u;
    let q = &v - &u;
    q.lu().solve(&p).expect("Pade denominator is nonsingular")
}
