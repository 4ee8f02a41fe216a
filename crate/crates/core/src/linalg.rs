//! Dense complex linear algebra helpers.
//!
//! Everything works on nalgebra's `DMatrix<Complex64>`. Decompositions go
//! through faer, whose complex SVD stays accurate on the structured and
//! rank-deficient inputs that come up here. Zero-sized matrices are legal
//! inputs throughout, since dilation spaces may be trivial.

use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

fn to_faer(m: &CMat) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full SVD `m = U diag(s) V*`, singular values descending.
struct Svd {
    u: CMat,
    s: Vec<f64>,
    v: CMat,
}

fn svd(m: &CMat) -> Svd {
    let f = to_faer(m).svd().expect("SVD converges");
    let s = f.S().column_vector().iter().map(|z| z.re).collect();
    Svd { u: from_faer(f.U()), s, v: from_faer(f.V()) }
}

/// Left singular vectors and values of a real matrix, values descending.
pub fn real_left_singular(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    if m.is_empty() {
        return (DMatrix::zeros(m.nrows(), 0), Vec::new());
    }
    let f = Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]).svd().expect("SVD converges");
    let u = f.U();
    let s = f.S().column_vector().iter().copied().collect();
    (DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]), s)
}

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn frob(m: &CMat) -> f64 {
    m.norm()
}

pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    svd(m).s
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * real(0.5)
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues descending.
/// Ties keep the solver's index order.
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn herm_eig(m: &CMat) -> HermEig {
    let n = m.nrows();
    if n == 0 {
        return HermEig { values: Vec::new(), vectors: CMat::zeros(0, 0) };
    }
    let eig = to_faer(&hermitian_part(m)).self_adjoint_eigen(Side::Lower).expect("eigensolver converges");
    let raw: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    let u = eig.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| raw[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| u[(r, order[k])]);
    HermEig { values, vectors }
}

pub fn min_eig(m: &CMat) -> f64 {
    herm_eig(m).values.last().copied().unwrap_or(0.0)
}

pub fn max_eig(m: &CMat) -> f64 {
    herm_eig(m).values.first().copied().unwrap_or(0.0)
}

/// Apply `f` to the spectrum of the Hermitian part of `m`.
pub fn herm_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let e = herm_eig(m);
    let n = m.nrows();
    let mut scaled = e.vectors.clone();
    for k in 0..n {
        let fk = real(f(e.values[k]));
        for r in 0..n {
            scaled[(r, k)] *= fk;
        }
    }
    scaled * e.vectors.adjoint()
}

/// PSD square root; eigenvalues below zero are clipped.
pub fn psd_sqrt(m: &CMat) -> CMat {
    herm_fn(m, |x| x.max(0.0).sqrt())
}

/// `|m| = (m* m)^½`, taken from the SVD so small singular values keep full
/// absolute accuracy instead of passing through a square root.
pub fn modulus(m: &CMat) -> CMat {
    let n = m.ncols();
    if m.is_empty() {
        return CMat::zeros(n, n);
    }
    let f = svd(m);
    let mut out = CMat::zeros(n, n);
    for (k, &s) in f.s.iter().enumerate() {
        out += f.v.column(k) * f.v.column(k).adjoint() * real(s);
    }
    hermitian_part(&out)
}

/// Orthonormal basis (as columns) of the column space of `m`, keeping singular
/// values strictly above `threshold`.
pub fn range_basis(m: &CMat, threshold: f64) -> CMat {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return CMat::zeros(rows, 0);
    }
    let f = svd(m);
    let keep = f.s.iter().take_while(|&&s| s > threshold).count();
    f.u.columns(0, keep).into_owned()
}

/// Range basis with threshold relative to the largest singular value.
pub fn range_basis_rel(m: &CMat, rel: f64) -> CMat {
    let smax = spectral_norm(m);
    if smax == 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    range_basis(m, rel * smax)
}

/// Orthonormal basis (as columns) of the null space of `m`: right singular
/// vectors with singular value at most `rel` times the largest one.
pub fn null_space(m: &CMat, rel: f64) -> CMat {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return CMat::zeros(0, 0);
    }
    if rows == 0 {
        return CMat::identity(cols, cols);
    }
    let f = svd(m);
    let smax = f.s.first().copied().unwrap_or(0.0);
    let rank = f.s.iter().take_while(|&&s| s > rel * smax).count();
    f.v.columns(rank, cols - rank).into_owned()
}

/// Moore-Penrose pseudo-inverse with a relative singular value cut.
pub fn pinv(m: &CMat, rel: f64) -> CMat {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return CMat::zeros(cols, rows);
    }
    let f = svd(m);
    let smax = f.s.first().copied().unwrap_or(0.0);
    let mut out = CMat::zeros(cols, rows);
    for (k, &s) in f.s.iter().enumerate() {
        if s > rel * smax && s > 0.0 {
            out += f.v.column(k) * f.u.column(k).adjoint() * real(1.0 / s);
        }
    }
    out
}

/// Unitary factor of the polar decomposition.
pub fn polar_unitary(m: &CMat) -> CMat {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return CMat::zeros(rows, cols);
    }
    let f = svd(m);
    let k = rows.min(cols);
    f.u.columns(0, k) * f.v.columns(0, k).adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Column-major vectorization.
pub fn vectorize(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// `‖m* m - I‖_F`, the isometry defect of `m`.
pub fn isometry_defect(m: &CMat) -> f64 {
    frob(&(m.adjoint() * m - identity(m.ncols())))
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    frob(&(m - m.adjoint()))
}

/// Orthogonal projection onto the column span of an orthonormal basis.
pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

/// Block matrix from a row-major grid of equally sized blocks.
pub fn block_matrix(blocks: &[Vec<CMat>], rows: usize, cols: usize) -> CMat {
    let br = blocks.len();
    let bc = blocks.first().map_or(0, |r| r.len());
    let mut out = CMat::zeros(br * rows, bc * cols);
    for (i, row) in blocks.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            out.view_mut((i * rows, j * cols), (rows, cols)).copy_from(b);
        }
    }
    out
}

/// Horizontal concatenation.
pub fn hstack(parts: &[CMat], rows: usize) -> CMat {
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        out.view_mut((0, at), (rows, p.ncols())).copy_from(p);
        at += p.ncols();
    }
    out
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    // Fill row-major so draws do not depend on nalgebra's storage order.
    for r in 0..rows {
        for k in 0..cols {
            m[(r, k)] = gaussian(rng);
        }
    }
    m
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    hermitian_part(&random_matrix(rng, n, n))
}

/// Haar-ish random unitary: polar factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    polar_unitary(&random_matrix(rng, n, n))
}

pub fn permutation_matrix(perm: &[usize]) -> CMat {
    let n = perm.len();
    let mut p = CMat::zeros(n, n);
    for (col, &row) in perm.iter().enumerate() {
        p[(row, col)] = ONE;
    }
    p
}
