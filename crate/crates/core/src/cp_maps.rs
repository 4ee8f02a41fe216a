//! Local CP maps from a [`LocalAlgebra`] into operators on a target flag.
//!
//! A map is stored by the images of the source basis plus a witness `κ`:
//! target level `l` only sees the source algebra through level `κ(l)`.
//! Verification reduces local complete positivity at each target level to two
//! finite checks: the images of the ideal `I_κ(l)` vanish on `H_l`, and the
//! Gram-Choi matrix `[φ(a_p* a_q)|_{H_l}]` is positive semidefinite.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flagspace::{BlockOp, Flag};
use crate::linalg::{self, frob, CMat, CVec, ZERO};
use crate::local_algebra::LocalAlgebra;
use crate::report::{CertificateReport, LevelEntry};
use crate::Tolerances;

#[derive(Clone, Debug)]
pub struct LocalCPMap {
    source: Arc<LocalAlgebra>,
    target: Flag,
    images: Vec<BlockOp>,
    witness: Vec<usize>,
}

impl LocalCPMap {
    /// `images[i]` is `φ(a_i)`; `witness[l-1]` is `κ(l)`, a 1-based source level.
    pub fn new(
        source: Arc<LocalAlgebra>,
        target: &Flag,
        images: Vec<CMat>,
        witness: Vec<usize>,
        tol: &Tolerances,
    ) -> Result<Self> {
        if images.len() != source.dim() {
            return Err(Error::Dimension(format!("{} images for a {}-dimensional algebra", images.len(), source.dim())));
        }
        check_witness(&witness, source.domain().levels(), target.levels())?;
        let images = images.into_iter().map(|m| BlockOp::square(m, target, tol.tau_eq)).collect::<Result<Vec<_>>>()?;
        Ok(LocalCPMap { source, target: target.clone(), images, witness })
    }

    pub(crate) fn trusted(source: Arc<LocalAlgebra>, target: &Flag, images: Vec<CMat>, witness: Vec<usize>) -> Self {
        let images = images.into_iter().map(|m| BlockOp::trusted(m, target, target)).collect();
        LocalCPMap { source, target: target.clone(), images, witness }
    }

    pub fn identity_witness(levels: usize) -> Vec<usize> {
        (1..=levels).collect()
    }

    pub fn source(&self) -> &Arc<LocalAlgebra> {
        &self.source
    }

    pub fn target(&self) -> &Flag {
        &self.target
    }

    pub fn images(&self) -> &[BlockOp] {
        &self.images
    }

    pub fn image(&self, i: usize) -> &CMat {
        self.images[i].matrix()
    }

    pub fn witness(&self) -> &[usize] {
        &self.witness
    }

    pub fn apply(&self, coords: &CVec) -> CMat {
        let n = self.target.ambient();
        let mut out = CMat::zeros(n, n);
        for (k, img) in self.images.iter().enumerate() {
            if coords[k] != ZERO {
                out += img.matrix() * coords[k];
            }
        }
        out
    }

    pub fn apply_matrix(&self, a: &CMat, tol: &Tolerances) -> Result<CMat> {
        Ok(self.apply(&self.source.coords_of(a, tol)?))
    }

    /// `φ^(n)` on an `n x n` matrix over the algebra, given entrywise in coordinates.
    pub fn amplify_apply(&self, entries: &[Vec<CVec>]) -> CMat {
        let n = self.target.ambient();
        let blocks: Vec<Vec<CMat>> = entries.iter().map(|row| row.iter().map(|x| self.apply(x)).collect()).collect();
        linalg::block_matrix(&blocks, n, n)
    }

    pub fn scaled(&self, s: f64) -> LocalCPMap {
        let images = self.images.iter().map(|b| b.matrix() * linalg::real(s)).collect();
        Self::trusted(self.source.clone(), &self.target, images, self.witness.clone())
    }

    /// Fail with `Mismatch` unless both maps share source, target and witness.
    pub fn check_same_shape(&self, other: &LocalCPMap) -> Result<()> {
        if !(Arc::ptr_eq(&self.source, &other.source) || self.source.same_as(&other.source)) {
            return Err(Error::Mismatch("maps have different source algebras".into()));
        }
        if !self.target.same_as(&other.target) {
            return Err(Error::Mismatch("maps have different target flags".into()));
        }
        if self.witness != other.witness {
            return Err(Error::Mismatch(format!("witnesses differ: {:?} vs {:?}", self.witness, other.witness)));
        }
        Ok(())
    }

    /// `self - other`.
    pub fn difference(&self, other: &LocalCPMap) -> Result<LocalCPMap> {
        self.check_same_shape(other)?;
        let images = self.images.iter().zip(&other.images).map(|(a, b)| a.matrix() - b.matrix()).collect();
        Ok(Self::trusted(self.source.clone(), &self.target, images, self.witness.clone()))
    }

    /// Largest image Frobenius norm, used to scale equality tolerances.
    pub fn scale(&self) -> f64 {
        self.images.iter().map(|b| frob(b.matrix())).fold(0.0, f64::max)
    }

    /// Max Frobenius distance between corresponding images.
    pub fn distance(&self, other: &LocalCPMap) -> f64 {
        self.images.iter().zip(&other.images).map(|(a, b)| frob(&(a.matrix() - b.matrix()))).fold(0.0, f64::max)
    }

    /// Block matrix `[b* φ(a_p* a_q) b]_{p,q}` for an isometry `b` into the target space.
    pub fn gram_with(&self, b: &CMat) -> CMat {
        let d = self.source.dim();
        let k = b.ncols();
        let mut g = CMat::zeros(d * k, d * k);
        for p in 0..d {
            for q in 0..d {
                let block = b.adjoint() * self.apply(&self.source.gram_coords(p, q)) * b;
                g.view_mut((p * k, q * k), (k, k)).copy_from(&block);
            }
        }
        g
    }

    /// Gram-Choi matrix at a target level, in level coordinates.
    pub fn gram_choi(&self, level: usize) -> Result<CMat> {
        Ok(self.gram_with(&self.target.basis(level)?))
    }

    /// The same map over the source algebra with its basis reordered by `perm`.
    pub fn with_permuted_basis(&self, perm: &[usize], tol: &Tolerances) -> Result<LocalCPMap> {
        let alg = Arc::new(self.source.permuted(perm, tol)?);
        let images = perm.iter().map(|&i| self.image(i).clone()).collect();
        Ok(Self::trusted(alg, &self.target, images, self.witness.clone()))
    }
}

fn check_witness(witness: &[usize], source_levels: usize, target_levels: usize) -> Result<()> {
    if witness.len() != target_levels {
        return Err(Error::Dimension(format!("witness has {} entries for {target_levels} target levels", witness.len())));
    }
    if let Some(&bad) = witness.iter().find(|&&a| a == 0 || a > source_levels) {
        return Err(Error::Level { level: bad, levels: source_levels });
    }
    Ok(())
}

/// Per-level kernel annihilation and Gram-Choi positivity.
pub fn verify_local_cp(map: &LocalCPMap, tol: &Tolerances) -> CertificateReport {
    let mut report = CertificateReport::new("local_cp");
    let alg = map.source();
    let scale = map.scale();
    for level in 1..=map.target.levels() {
        let alpha = map.witness[level - 1];
        let b = map.target.basis(level).expect("level in range");
        let kernel = alg.kernel_basis(alpha, tol).expect("witness validated");
        let kernel_residual = kernel.iter().map(|x| frob(&(b.adjoint() * map.apply(x) * &b))).fold(0.0, f64::max);
        let g = map.gram_with(&b);
        let min_eig = linalg::min_eig(&g);
        let gnorm = linalg::spectral_norm(&g);
        let herm = linalg::hermitian_defect(&g);
        let pass = kernel_residual <= tol.eq_bound(scale)
            && herm <= tol.eq_bound(frob(&g))
            && min_eig >= -tol.tau_psd * gnorm.max(scale).max(1.0);
        report.push_level(LevelEntry {
            level,
            witness: Some(alpha),
            min_eig: Some(min_eig),
            kernel_residual: Some(kernel_residual),
            pass,
            ..Default::default()
        });
    }
    report
}

/// Local contractivity `‖φ(1)|_{H_l}‖ <= 1`. Only meaningful for CP maps.
pub fn verify_local_cc(map: &LocalCPMap, tol: &Tolerances) -> Result<CertificateReport> {
    let cp = verify_local_cp(map, tol);
    if !cp.pass {
        return Err(Error::Precondition(format!("map is not locally CP ({})", cp.failures())));
    }
    Ok(cc_report(map, tol))
}

fn cc_report(map: &LocalCPMap, tol: &Tolerances) -> CertificateReport {
    let mut report = CertificateReport::new("local_cc");
    let one = BlockOp::trusted(map.apply(map.source().unit_coords()), &map.target, &map.target);
    for level in 1..=map.target.levels() {
        let cc = one.seminorm(level).expect("level in range");
        report.push_level(LevelEntry {
            level,
            witness: Some(map.witness[level - 1]),
            cc_value: Some(cc),
            pass: cc <= 1.0 + tol.tau_eq,
            ..Default::default()
        });
    }
    report
}

/// Whether `φ - ψ` is locally CP and locally contractive.
pub fn dominates(phi: &LocalCPMap, psi: &LocalCPMap, tol: &Tolerances) -> Result<CertificateReport> {
    let diff = phi.difference(psi)?;
    let mut report = CertificateReport::new("dominates");
    let cp = verify_local_cp(&diff, tol);
    let cp_pass = cp.pass;
    report.merge(cp);
    if cp_pass {
        report.merge(cc_report(&diff, tol));
    }
    Ok(report)
}

/// The Schur multiplier `T ↦ A ∘ T`, taken entrywise in the flag's frame.
pub fn schur_map(a: &CMat, flag: &Flag, alg: Arc<LocalAlgebra>, tol: &Tolerances) -> Result<LocalCPMap> {
    let n = flag.ambient();
    if a.shape() != (n, n) {
        return Err(Error::Dimension(format!("Schur symbol must be {n}x{n}")));
    }
    if !alg.domain().same_as(flag) {
        return Err(Error::Mismatch("algebra does not live on the given flag".into()));
    }
    let min = linalg::min_eig(a);
    if linalg::hermitian_defect(a) > tol.eq_bound(frob(a)) || min < -tol.tau_psd * linalg::spectral_norm(a) {
        return Err(Error::Positivity(min));
    }
    if let Some(big) = a.diagonal().iter().map(|z| z.re).find(|&x| x > 1.0 + tol.tau_eq) {
        return Err(Error::Contraction(big));
    }
    let frame = flag.frame();
    let images = (0..alg.dim())
        .map(|i| {
            let t = frame.adjoint() * alg.basis_element(i) * &frame;
            &frame * a.component_mul(&t) * frame.adjoint()
        })
        .collect();
    let witness = LocalCPMap::identity_witness(flag.levels());
    LocalCPMap::new(alg, flag, images, witness, tol)
}

/// Random operator `V` from `source` to `target` (as spaces) mapping each
/// source level into the matching target level and complements likewise.
pub fn random_compatible<R: rand::Rng + ?Sized>(rng: &mut R, source: &Flag, target: &Flag) -> CMat {
    let mut blk = CMat::zeros(target.ambient(), source.ambient());
    let (mut r0, mut c0) = (0, 0);
    for (&rk, &ck) in target.dims().iter().zip(source.dims()) {
        let block = linalg::random_matrix(rng, rk - r0, ck - c0);
        blk.view_mut((r0, c0), (rk - r0, ck - c0)).copy_from(&block);
        r0 = rk;
        c0 = ck;
    }
    target.frame() * blk * source.frame().adjoint()
}

/// Random flag-compatible `V_r` from `target` into `domain`, scaled so that
/// `‖Σ V_r* V_r‖ = 1` (unless all vanish).
pub fn random_kraus<R: rand::Rng + ?Sized>(rng: &mut R, domain: &Flag, target: &Flag, count: usize) -> Vec<CMat> {
    let mut kraus: Vec<CMat> = (0..count).map(|_| random_compatible(rng, target, domain)).collect();
    let n = target.ambient();
    let total = kraus.iter().fold(CMat::zeros(n, n), |acc, v| acc + v.adjoint() * v);
    let s = linalg::spectral_norm(&total);
    if s > 0.0 {
        let f = linalg::real(1.0 / s.sqrt());
        for v in &mut kraus {
            *v *= f;
        }
    }
    kraus
}

/// `φ(a) = Σ_r V_r* a V_r` with the identity witness. The caller is
/// responsible for the `V_r` being flag-compatible.
pub fn kraus_map(alg: Arc<LocalAlgebra>, target: &Flag, kraus: &[CMat]) -> LocalCPMap {
    let n = target.ambient();
    let images = (0..alg.dim())
        .map(|i| kraus.iter().fold(CMat::zeros(n, n), |acc, v| acc + v.adjoint() * alg.basis_element(i) * v))
        .collect();
    let witness = LocalCPMap::identity_witness(target.levels());
    LocalCPMap::trusted(alg, target, images, witness)
}

/// Random Kraus map with `kraus_count` terms and `‖φ(1)‖ = 1`; zero terms
/// give the zero map. The witness is the identity, so both flags need the
/// same number of levels.
pub fn random_local_cp(seed: u64, alg: Arc<LocalAlgebra>, target: &Flag, kraus_count: usize) -> Result<LocalCPMap> {
    if alg.domain().levels() != target.levels() {
        return Err(Error::Dimension("source and target flags need the same number of levels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kraus = random_kraus(&mut rng, alg.domain(), target, kraus_count);
    Ok(kraus_map(alg, target, &kraus))
}
