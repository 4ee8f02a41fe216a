//! Radon-Nikodym derivatives of dominated local CP maps.
//!
//! If `ψ <= φ`, the minimal dilation of `φ` carries a unique positive
//! contraction `T` in the commutant of `π_φ`, block-diagonal on the dilation
//! flag, with `ψ(a) = V* T π_φ(a) V`. It is computed as `S* S` where
//! `S = Q_ψ Q_φ⁺` sends `π_φ(a)V_φ h` to `π_ψ(a)V_ψ h`.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::cp_maps::{dominates, LocalCPMap};
use crate::error::{Error, Result};
use crate::flagspace::check_block_op;
use crate::linalg::{self, c, frob, CMat};
use crate::stinespring::{dilate_minimal, StinespringRep};
use crate::Tolerances;

#[derive(Clone, Debug, Serialize)]
pub struct RnCertificate {
    #[serde(serialize_with = "crate::instance::ser_matrix")]
    pub t_matrix: CMat,
    #[serde(serialize_with = "crate::instance::ser_matrix")]
    pub s_matrix: CMat,
    pub residual_reconstruction: f64,
    pub residual_commutant: f64,
    pub spectrum_bounds: (f64, f64),
}

/// `S = Q_ψ Q_φ⁺`, a contraction when `ψ <= φ`.
pub fn intertwiner(phi_rep: &StinespringRep, psi_rep: &StinespringRep, tol: &Tolerances) -> Result<CMat> {
    phi_rep.map().check_same_shape(psi_rep.map())?;
    let s = psi_rep.q() * phi_rep.q_pinv();
    let norm = linalg::spectral_norm(&s);
    if norm > 1.0 + tol.tau_eq {
        return Err(Error::Domination(format!("intertwiner has norm {norm:.6}")));
    }
    let residual = frob(&(&s * phi_rep.q() - psi_rep.q()));
    if residual > tol.tau_rank.sqrt() * frob(psi_rep.q()).max(1.0) {
        return Err(Error::Domination(format!("kernel of G_phi is not inside kernel of G_psi ({residual:.3e})")));
    }
    Ok(s)
}

fn commutant_residual(rep: &StinespringRep, t: &CMat) -> f64 {
    rep.pi_ops().iter().map(|p| frob(&(t * p.matrix() - p.matrix() * t)) / frob(p.matrix()).max(1.0)).fold(0.0, f64::max)
}

pub fn derivative(phi_rep: &StinespringRep, psi: &LocalCPMap, tol: &Tolerances) -> Result<RnCertificate> {
    let phi = phi_rep.map();
    phi.check_same_shape(psi)?;
    let dom = dominates(phi, psi, tol)?;
    if !dom.pass {
        return Err(Error::Domination(dom.failures()));
    }
    let psi_rep = dilate_minimal(psi, tol)?;
    let s = intertwiner(phi_rep, &psi_rep, tol)?;
    let t = s.adjoint() * &s;
    let v = phi_rep.v();
    let residual_reconstruction =
        (0..phi.source().dim()).map(|i| frob(&(v.adjoint() * &t * phi_rep.pi(i) * v - psi.image(i)))).fold(0.0, f64::max);
    let residual_commutant = commutant_residual(phi_rep, &t);
    let e = linalg::herm_eig(&t);
    let spectrum_bounds = (e.values.last().copied().unwrap_or(0.0), e.values.first().copied().unwrap_or(0.0));
    Ok(RnCertificate { t_matrix: t, s_matrix: s, residual_reconstruction, residual_commutant, spectrum_bounds })
}

/// `φ_T(a) = V* T π(a) V` for a positive contraction `T` in the commutant.
pub fn map_from_derivative(rep: &StinespringRep, t: &CMat, tol: &Tolerances) -> Result<LocalCPMap> {
    let r = rep.dim();
    if t.shape() != (r, r) {
        return Err(Error::Dimension(format!("T must be {r}x{r}")));
    }
    let herm = linalg::hermitian_defect(t);
    if herm > tol.eq_bound(frob(t)) {
        return Err(Error::Validation(format!("T is not Hermitian (defect {herm:.3e})")));
    }
    let e = linalg::herm_eig(t);
    let (min, max) = (e.values.last().copied().unwrap_or(0.0), e.values.first().copied().unwrap_or(0.0));
    if min < -tol.tau_psd || max > 1.0 + tol.tau_psd {
        return Err(Error::Spectrum { min, max });
    }
    let residual = commutant_residual(rep, t);
    if residual > tol.eq_bound(1.0) {
        return Err(Error::Commutant(residual));
    }
    check_block_op(t.clone(), rep.dil_flag(), rep.dil_flag(), tol.tau_eq)?;
    let v = rep.v();
    let images = rep.pi_ops().iter().map(|p| v.adjoint() * t * p.matrix() * v).collect();
    let map = rep.map();
    Ok(LocalCPMap::trusted(map.source().clone(), map.target(), images, map.witness().to_vec()))
}

/// Orthonormal basis (real Frobenius inner product) of the Hermitian operators
/// commuting with `π(A)` and respecting the dilation flag.
pub fn commutant_basis(rep: &StinespringRep, tol: &Tolerances) -> Vec<CMat> {
    let r = rep.dim();
    if r == 0 {
        return Vec::new();
    }
    let eye = linalg::identity(r);
    let rr = r * r;
    // Column-major vec: vec(XP) = (Pᵀ ⊗ I) vec X and vec(PX) = (I ⊗ P) vec X.
    let mut normal = CMat::zeros(rr, rr);
    let mut add = |k: CMat| normal += k.adjoint() * &k;
    for p in rep.pi_ops() {
        let p = p.matrix();
        add(linalg::kron(&p.transpose(), &eye) - linalg::kron(&eye, p));
    }
    let flag = rep.dil_flag();
    for l in 1..flag.levels() {
        let proj = flag.projection(l).expect("level");
        let perp = &eye - &proj;
        add(linalg::kron(&proj.transpose(), &perp));
        add(linalg::kron(&perp.transpose(), &proj));
    }
    let e = linalg::herm_eig(&normal);
    let lmax = e.values.first().copied().unwrap_or(0.0);
    let null: Vec<usize> = (0..rr).filter(|&k| e.values[k] <= tol.tau_rank * lmax).collect();
    let m = null.len();
    if m == 0 {
        return Vec::new();
    }

    // The commutant is *-closed, so the Hermitian and anti-Hermitian parts of
    // the complex null vectors span a real space of dimension m.
    let mut real = DMatrix::<f64>::zeros(2 * rr, 2 * m);
    for (j, &k) in null.iter().enumerate() {
        let y = linalg::unvectorize(&e.vectors.column(k).into_owned(), r, r);
        let h = linalg::hermitian_part(&y);
        let a = (&y - y.adjoint()) * c(0.0, -0.5);
        for (col, part) in [(2 * j, h), (2 * j + 1, a)] {
            for (idx, z) in part.iter().enumerate() {
                real[(idx, col)] = z.re;
                real[(rr + idx, col)] = z.im;
            }
        }
    }
    let (u, _) = linalg::real_left_singular(&real);
    (0..m)
        .map(|k| {
            let x = CMat::from_fn(r, r, |i, j| c(u[(i + j * r, k)], u[(rr + i + j * r, k)]));
            linalg::hermitian_part(&x)
        })
        .collect()
}

/// `T = (X + ‖X‖ I) / (2‖X‖)` for a random real combination `X` of the basis.
pub fn sample_contraction_in_commutant(basis: &[CMat], seed: u64) -> Result<CMat> {
    let first = basis.first().ok_or(Error::EmptyCommutant)?;
    let r = first.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = CMat::zeros(r, r);
    for b in basis {
        let g: f64 = StandardNormal.sample(&mut rng);
        x += b * linalg::real(g);
    }
    let norm = linalg::spectral_norm(&x);
    if norm == 0.0 {
        return Ok(linalg::identity(r) * linalg::real(0.5));
    }
    Ok((x + linalg::identity(r) * linalg::real(norm)) * linalg::real(0.5 / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp_maps::random_local_cp;
    use crate::flagspace::Flag;
    use crate::local_algebra::block_diagonal_algebra;
    use std::sync::Arc;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn setup() -> StinespringRep {
        let flag = Flag::standard(3, vec![1, 3]).unwrap();
        let alg = Arc::new(block_diagonal_algebra(&flag, &tol()).unwrap());
        let target = Flag::standard(2, vec![1, 2]).unwrap();
        let phi = random_local_cp(11, alg, &target, 2).unwrap();
        dilate_minimal(&phi, &tol()).unwrap()
    }

    #[test]
    fn half_map_has_scalar_derivative() {
        let rep = setup();
        let cert = derivative(&rep, &rep.map().scaled(0.5), &tol()).unwrap();
        let r = rep.dim();
        assert!(frob(&(&cert.t_matrix - linalg::identity(r) * linalg::real(0.5))) < 1e-9);
        assert!((linalg::spectral_norm(&cert.s_matrix) - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn zero_and_self() {
        let rep = setup();
        let zero = rep.map().scaled(0.0);
        let cert = derivative(&rep, &zero, &tol()).unwrap();
        assert!(frob(&cert.t_matrix) < 1e-12);
        let cert = derivative(&rep, rep.map(), &tol()).unwrap();
        assert!(frob(&(&cert.t_matrix - linalg::identity(rep.dim()))) < 1e-9);
    }

    #[test]
    fn domination_failure() {
        let rep = setup();
        let bigger = rep.map().scaled(1.5);
        assert!(matches!(derivative(&rep, &bigger, &tol()), Err(Error::Domination(_))));
    }

    #[test]
    fn sampled_derivatives_round_trip() {
        let rep = setup();
        let basis = commutant_basis(&rep, &tol());
        assert!(!basis.is_empty());
        for seed in 0..5 {
            let t0 = sample_contraction_in_commutant(&basis, seed).unwrap();
            let psi = map_from_derivative(&rep, &t0, &tol()).unwrap();
            let cert = derivative(&rep, &psi, &tol()).unwrap();
            assert!(frob(&(&cert.t_matrix - &t0)) < 1e-7, "seed {seed}");
        }
        assert!(matches!(sample_contraction_in_commutant(&[], 0), Err(Error::EmptyCommutant)));
    }

    #[test]
    fn map_from_derivative_rejects_bad_t() {
        let rep = setup();
        let r = rep.dim();
        let big = linalg::identity(r) * linalg::real(2.0);
        assert!(matches!(map_from_derivative(&rep, &big, &tol()), Err(Error::Spectrum { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = linalg::random_hermitian(&mut rng, r);
        let t =
            (&x + linalg::identity(r) * linalg::real(linalg::spectral_norm(&x))) * linalg::real(0.5 / linalg::spectral_norm(&x));
        assert!(matches!(map_from_derivative(&rep, &t, &tol()), Err(Error::Commutant(_))));
    }
}
