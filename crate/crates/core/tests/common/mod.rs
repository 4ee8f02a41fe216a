//! Test-side oracles. Nothing here calls the Gram-Choi machinery, the
//! dilation code or the derivative code of the library; only the plain matrix
//! helpers and the data types.

#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::Arc;

use locp::fixtures::{self, random_flag, rng};
use locp::linalg::{self, frob, real, CMat, CVec};
use locp::{Flag, LocalAlgebra, LocalCPMap, Tolerances};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn tol() -> Tolerances {
    Tolerances::default()
}

/// Coordinates of `m` in the algebra's basis from the normal equations of the
/// basis Gram matrix, independent of the library's stored solver.
pub fn oracle_coords(alg: &LocalAlgebra, m: &CMat) -> CVec {
    let d = alg.dim();
    let inner = |a: &CMat, b: &CMat| (a.adjoint() * b).trace();
    let g = CMat::from_fn(d, d, |i, j| inner(alg.basis_element(i), alg.basis_element(j)));
    let rhs = CVec::from_fn(d, |i, _| inner(alg.basis_element(i), m));
    g.lu().solve(&rhs).expect("basis Gram is invertible")
}

/// Apply `φ` to an arbitrary matrix of the algebra through oracle coordinates.
pub fn apply(map: &LocalCPMap, m: &CMat) -> CMat {
    map.apply(&oracle_coords(map.source(), m))
}

/// Basis (as matrices) of `{a : a P_α = 0}`, the elements invisible at level `α`.
pub fn kernel_elements(alg: &LocalAlgebra, alpha: usize) -> Vec<CMat> {
    let n = alg.domain().ambient();
    let p = alg.domain().projection(alpha).unwrap();
    let cols: Vec<CMat> = (0..alg.dim())
        .map(|k| {
            let r = alg.basis_element(k) * &p;
            CMat::from_column_slice(n * n, 1, r.as_slice())
        })
        .collect();
    let stacked = linalg::hstack(&cols, n * n);
    let null = linalg::null_space(&stacked, 1e-10);
    null.column_iter()
        .map(|c| {
            let mut out = CMat::zeros(n, n);
            for k in 0..alg.dim() {
                out += alg.basis_element(k) * c[k];
            }
            out
        })
        .collect()
}

fn random_element(rng: &mut ChaCha8Rng, alg: &LocalAlgebra) -> CMat {
    let mut out = CMat::zeros(alg.domain().ambient(), alg.domain().ambient());
    for k in 0..alg.dim() {
        out += alg.basis_element(k) * linalg::gaussian(rng);
    }
    out
}

/// Brute-force amplified positivity at one target level. Each sample draws
/// `n ≤ dim A`, an element of `M_n(A)` that is positive modulo the level-`α`
/// kernel, `X = Σ_s [b_i^s* b_j^s] + λ Y` with `Y` Hermitian with entries in
/// the kernel and `λ ∈ {0, ±10³}`, and checks that `[φ(X_ij)]` compressed to
/// `H_l^n` is positive. Returns the most negative normalized eigenvalue seen.
pub fn amplified_positivity(map: &LocalCPMap, level: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let alg = map.source().clone();
    let alpha = map.witness()[level - 1];
    let kernel = kernel_elements(&alg, alpha);
    let b = map.target().basis(level).unwrap();
    let k = b.ncols();
    let n_a = alg.domain().ambient();
    let mut worst = f64::INFINITY;
    for s in 0..samples {
        let n = rng.gen_range(1..=alg.dim().clamp(1, 4));
        let mut x = vec![vec![CMat::zeros(n_a, n_a); n]; n];
        for _ in 0..rng.gen_range(1..=2) {
            let bs: Vec<CMat> = (0..n).map(|_| random_element(&mut rng, &alg)).collect();
            for i in 0..n {
                for j in 0..n {
                    x[i][j] += bs[i].adjoint() * &bs[j];
                }
            }
        }
        if !kernel.is_empty() && s % 3 != 0 {
            let lambda = if rng.gen_bool(0.5) { 1e3 } else { -1e3 };
            for i in 0..n {
                for j in i..n {
                    let mut y = CMat::zeros(n_a, n_a);
                    for kel in &kernel {
                        y += kel * linalg::gaussian(&mut rng);
                    }
                    if i == j {
                        y = linalg::hermitian_part(&y);
                        x[i][i] += y * real(lambda);
                    } else {
                        x[j][i] += y.adjoint() * real(lambda);
                        x[i][j] += y * real(lambda);
                    }
                }
            }
        }
        let mut big = CMat::zeros(n * k, n * k);
        for i in 0..n {
            for j in 0..n {
                let block = b.adjoint() * apply(map, &x[i][j]) * &b;
                big.view_mut((i * k, j * k), (k, k)).copy_from(&block);
            }
        }
        let big = linalg::hermitian_part(&big);
        let scale = linalg::spectral_norm(&big).max(1.0);
        worst = worst.min(linalg::min_eig(&big) / scale);
    }
    worst
}

/// Oracle verdict: no sample went below `-1e-9` after normalization.
pub fn oracle_says_cp(map: &LocalCPMap, level: usize, samples: usize, seed: u64) -> bool {
    amplified_positivity(map, level, samples, seed) >= -1e-9
}

/// The frame-coordinate transpose `a ↦ F (F* a F)ᵀ F*`, pushed through a
/// Kraus operator. Never CP on a level carrying a full `M_2` summand.
pub fn transpose_map(alg: Arc<LocalAlgebra>, target: &Flag, v: &CMat, tol: &Tolerances) -> LocalCPMap {
    let f = alg.domain().frame();
    let images = (0..alg.dim())
        .map(|i| {
            let t = &f * (f.adjoint() * alg.basis_element(i) * &f).transpose() * f.adjoint();
            v.adjoint() * t * v
        })
        .collect();
    LocalCPMap::new(alg, target, images, LocalCPMap::identity_witness(target.levels()), tol).unwrap()
}

/// `Σ V_r* a V_r - c W* a W`: CP only where the negative term vanishes.
pub fn signed_map(alg: Arc<LocalAlgebra>, target: &Flag, kraus: &[CMat], w: &CMat, c: f64, tol: &Tolerances) -> LocalCPMap {
    let images = (0..alg.dim())
        .map(|i| {
            let a = alg.basis_element(i);
            let pos = kraus.iter().fold(CMat::zeros(target.ambient(), target.ambient()), |acc, v| acc + v.adjoint() * a * v);
            pos - w.adjoint() * a * w * real(c)
        })
        .collect();
    LocalCPMap::new(alg, target, images, LocalCPMap::identity_witness(target.levels()), tol).unwrap()
}

/// A small random instance for oracle comparison: algebra of dimension at most
/// four on a flag with at most three levels and level dimensions at most
/// three, and one of four map families.
pub fn oracle_instance(seed: u64) -> LocalCPMap {
    let tol = tol();
    let mut r = rng(seed);
    let levels = r.gen_range(1..=3);
    let na = r.gen_range(levels..=3);
    let rotate = r.gen_bool(0.5);
    let domain = random_flag(&mut r, na, levels, rotate);
    let alg = Arc::new(fixtures::random_algebra(&mut r, &domain, 4, &tol).unwrap());
    let nt = r.gen_range(levels..=3);
    let rotate = r.gen_bool(0.5);
    let target = random_flag(&mut r, nt, levels, rotate);
    let count = r.gen_range(1..=2);
    let kraus = locp::cp_maps::random_kraus(&mut r, &domain, &target, count);
    match seed % 4 {
        0 => locp::cp_maps::kraus_map(alg, &target, &kraus),
        1 => {
            let w = locp::cp_maps::random_compatible(&mut r, &target, &domain);
            let c = r.gen_range(0.5..2.0);
            signed_map(alg, &target, &kraus, &w, c, &tol)
        }
        2 => transpose_map(alg, &target, &kraus[0], &tol),
        _ => {
            // A CP map with a witness that looks one level too low.
            let map = locp::cp_maps::kraus_map(alg.clone(), &target, &kraus);
            let witness: Vec<usize> = (1..=levels).map(|l| l.saturating_sub(1).max(1)).collect();
            let images = map.images().iter().map(|b| b.matrix().clone()).collect();
            LocalCPMap::new(alg, &target, images, witness, &tol).unwrap()
        }
    }
}

/// Schur factorization `A ∘ T = V* (A ⊗ T) V` with `V e_i = e_i ⊗ e_i`.
pub fn schur_via_factorization(a: &CMat, t: &CMat) -> CMat {
    let n = a.nrows();
    let mut v = CMat::zeros(n * n, n);
    for i in 0..n {
        v[(i * n + i, i)] = linalg::ONE;
    }
    v.adjoint() * linalg::kron(a, t) * v
}

/// `max_i ‖x_i - y_i‖_F`.
pub fn max_dist(xs: &[CMat], ys: &[CMat]) -> f64 {
    xs.iter().zip(ys).map(|(x, y)| frob(&(x - y))).fold(0.0, f64::max)
}
