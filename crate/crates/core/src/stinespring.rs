//! Minimal Stinespring dilations `φ(a) = V* π(a) V`.
//!
//! The dilation space is built from the Gram matrix
//! `G[(p,h),(q,g)] = ⟨e_h, φ(a_p* a_q) e_g⟩` on `A ⊗ H`: with `G = Q* Q` for a
//! full-row-rank `Q`, the vector `Q(e_p ⊗ h)` plays the role of `π(a_p) V h`.
//! Coordinates on the dilation space are rotated so that the subspaces
//! `H^φ_l = span{π(a)V h : h ∈ H_l}` are spanned by leading coordinate vectors;
//! the dilation flag is then standard.

use crate::cp_maps::{verify_local_cc, verify_local_cp, LocalCPMap};
use crate::error::{Error, Result};
use crate::flagspace::{check_block_op, BlockOp, Flag};
use crate::linalg::{self, frob, CMat, CVec, ZERO};
use crate::report::{CertificateReport, LevelEntry};
use crate::Tolerances;

#[derive(Clone, Debug)]
pub struct StinespringRep {
    map: LocalCPMap,
    pi: Vec<BlockOp>,
    v: BlockOp,
    q: CMat,
    q_pinv: CMat,
    dil_flag: Flag,
    spectrum: Vec<f64>,
    defect: f64,
}

/// Nested orthonormal frame for the column spans of `blocks[0] ⊆ blocks[1] ⊆ ...`.
/// The last span is forced to have dimension `total`.
pub(crate) fn nested_frame(blocks: &[CMat], total: usize, threshold: f64) -> (CMat, Vec<usize>) {
    let rows = blocks.first().map_or(total, |b| b.nrows());
    let mut frame = CMat::zeros(rows, 0);
    let mut dims = Vec::with_capacity(blocks.len());
    for (idx, m) in blocks.iter().enumerate() {
        let residual = m - &frame * (frame.adjoint() * m);
        let new = if idx + 1 == blocks.len() {
            let b = linalg::range_basis(&residual, 0.0);
            let want = (total - frame.ncols()).min(b.ncols());
            b.columns(0, want).into_owned()
        } else {
            linalg::range_basis(&residual, threshold)
        };
        // One more projection keeps the frame unitary to machine precision.
        let new = linalg::polar_unitary(&(&new - &frame * (frame.adjoint() * &new)));
        frame = linalg::hstack(&[frame, new], rows);
        dims.push(frame.ncols());
    }
    (frame, dims)
}

pub fn dilate_minimal(map: &LocalCPMap, tol: &Tolerances) -> Result<StinespringRep> {
    let cp = verify_local_cp(map, tol);
    if !cp.pass {
        return Err(Error::Certificate(cp.failures()));
    }
    let cc = verify_local_cc(map, tol)?;
    if !cc.pass {
        return Err(Error::Certificate(cc.failures()));
    }
    let alg = map.source();
    let target = map.target();
    let (d, n) = (alg.dim(), target.ambient());

    let g = map.gram_with(&linalg::identity(n));
    let eig = linalg::herm_eig(&g);
    let lmax = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let lmin = eig.values.last().copied().unwrap_or(0.0);
    if lmin < -tol.tau_psd * lmax.max(lmin.abs()).max(1.0) {
        return Err(Error::Rank(lmin));
    }
    let cut = tol.tau_rank * lmax;
    let kept: Vec<usize> = (0..eig.values.len()).filter(|&k| eig.values[k] > 0.0 && eig.values[k] >= cut).collect();
    let r = kept.len();
    let spectrum: Vec<f64> = kept.iter().map(|&k| eig.values[k]).collect();

    let mut q0 = CMat::zeros(r, d * n);
    let mut q0_pinv = CMat::zeros(d * n, r);
    for (row, &k) in kept.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for col in 0..d * n {
            q0[(row, col)] = eig.vectors[(col, k)].conj() * s;
            q0_pinv[(col, row)] = eig.vectors[(col, k)] / s;
        }
    }

    let level_blocks: Vec<CMat> = (1..=target.levels())
        .map(|l| &q0 * linalg::kron(&linalg::identity(d), &target.basis(l).expect("level in range")))
        .collect();
    let (frame, dims) = nested_frame(&level_blocks, r, (cut.max(0.0)).sqrt());
    let q = frame.adjoint() * &q0;
    let q_pinv = q0_pinv * &frame;
    let dil_flag = Flag::nested(r, dims, None)?;

    let eye_n = linalg::identity(n);
    let mut defect: f64 = 0.0;
    let pi = alg
        .mult_tensor()
        .iter()
        .map(|l| {
            let lifted = &q * linalg::kron(l, &eye_n);
            let p = &lifted * &q_pinv;
            defect = defect.max(frob(&(&lifted - &p * &q)));
            BlockOp::trusted(p, &dil_flag, &dil_flag)
        })
        .collect();
    let unit = CMat::from_column_slice(d, 1, alg.unit_coords().as_slice());
    let v = BlockOp::trusted(&q * linalg::kron(&unit, &eye_n), target, &dil_flag);

    Ok(StinespringRep { map: map.clone(), pi, v, q, q_pinv, dil_flag, spectrum, defect })
}

impl StinespringRep {
    pub fn map(&self) -> &LocalCPMap {
        &self.map
    }

    /// Dimension `r` of the dilation space.
    pub fn dim(&self) -> usize {
        self.dil_flag.ambient()
    }

    pub fn pi(&self, i: usize) -> &CMat {
        self.pi[i].matrix()
    }

    pub fn pi_ops(&self) -> &[BlockOp] {
        &self.pi
    }

    pub fn pi_of(&self, coords: &CVec) -> CMat {
        let r = self.dim();
        let mut out = CMat::zeros(r, r);
        for (k, p) in self.pi.iter().enumerate() {
            if coords[k] != ZERO {
                out += p.matrix() * coords[k];
            }
        }
        out
    }

    pub fn v(&self) -> &CMat {
        self.v.matrix()
    }

    pub fn v_op(&self) -> &BlockOp {
        &self.v
    }

    /// `Q` with `Q(e_p ⊗ h) = π(a_p) V h`.
    pub fn q(&self) -> &CMat {
        &self.q
    }

    pub fn q_pinv(&self) -> &CMat {
        &self.q_pinv
    }

    pub fn dil_flag(&self) -> &Flag {
        &self.dil_flag
    }

    /// Retained Gram eigenvalues, descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// How far left multiplication fails to descend to the quotient by `ker G`.
    pub fn quotient_defect(&self) -> f64 {
        self.defect
    }

    /// Conjugate by a flag-compatible unitary `w` on the dilation space.
    pub fn conjugated(&self, w: &CMat, tol: &Tolerances) -> Result<StinespringRep> {
        check_block_op(w.clone(), &self.dil_flag, &self.dil_flag, tol.tau_eq)?;
        let defect = linalg::isometry_defect(w);
        if defect > tol.eq_bound((self.dim() as f64).sqrt()) {
            return Err(Error::Validation(format!("conjugating operator is not unitary ({defect:.3e})")));
        }
        let flag = &self.dil_flag;
        Ok(StinespringRep {
            map: self.map.clone(),
            pi: self.pi.iter().map(|p| BlockOp::trusted(w * p.matrix() * w.adjoint(), flag, flag)).collect(),
            v: BlockOp::trusted(w * self.v.matrix(), self.map.target(), flag),
            q: w * &self.q,
            q_pinv: &self.q_pinv * w.adjoint(),
            dil_flag: flag.clone(),
            spectrum: self.spectrum.clone(),
            defect: self.defect,
        })
    }
}

/// `V* π(x) V`.
pub fn reconstruct(rep: &StinespringRep, coords: &CVec) -> CMat {
    rep.v().adjoint() * rep.pi_of(coords) * rep.v()
}

/// Reconstruction, *-homomorphism and unit residuals together with the
/// minimality and perp-identity level checks.
pub fn verify_dilation(rep: &StinespringRep, tol: &Tolerances) -> CertificateReport {
    let mut report = CertificateReport::new("dilation");
    let alg = rep.map.source();
    let d = alg.dim();
    let recon = (0..d).map(|i| frob(&(reconstruct(rep, &alg.basis_coords(i)) - rep.map.image(i)))).fold(0.0, f64::max);
    report.push_check("reconstruction", recon, tol.eq_bound(rep.map.scale()));
    let mut hom: f64 = 0.0;
    let mut star: f64 = 0.0;
    for i in 0..d {
        let ei = alg.basis_coords(i);
        star = star.max(frob(&(rep.pi_of(&alg.adjoint_coords(&ei)) - rep.pi(i).adjoint())) / frob(rep.pi(i)).max(1.0));
        for j in 0..d {
            let prod = rep.pi_of(&alg.product_coords(&ei, &alg.basis_coords(j)));
            hom = hom.max(frob(&(rep.pi(i) * rep.pi(j) - &prod)) / frob(&prod).max(1.0));
        }
    }
    report.push_check("homomorphism", hom, tol.eq_bound(1.0));
    report.push_check("adjoint", star, tol.eq_bound(1.0));
    let r = rep.dim();
    let unit = frob(&(rep.pi_of(alg.unit_coords()) - linalg::identity(r)));
    report.push_check("unit", unit, tol.eq_bound((r as f64).sqrt()));
    let bound = tol.eq_bound((r as f64).sqrt());
    for part in [verify_minimality(rep, tol), verify_perp_identity(rep, tol)] {
        for l in &part.levels {
            report.push_check(format!("{}_level_{}", part.kind, l.level), l.residual.unwrap_or(f64::NAN), bound);
        }
    }
    report
}

fn span_threshold(rep: &StinespringRep, tol: &Tolerances) -> f64 {
    tol.tau_rank.sqrt() * linalg::spectral_norm(rep.q())
}

fn generated_projection(rep: &StinespringRep, vectors: &CMat, tol: &Tolerances) -> CMat {
    let r = rep.dim();
    let parts: Vec<CMat> = rep.pi.iter().map(|p| p.matrix() * rep.v() * vectors).collect();
    let gens = linalg::hstack(&parts, r);
    linalg::projector(&linalg::range_basis(&gens, span_threshold(rep, tol)))
}

/// `span{π(a)V h : h ∈ H_l}` is exactly the `l`-th dilation level, and the top
/// level is the whole dilation space.
pub fn verify_minimality(rep: &StinespringRep, tol: &Tolerances) -> CertificateReport {
    let mut report = CertificateReport::new("minimality");
    let target = rep.map.target();
    let bound = tol.eq_bound((rep.dim() as f64).sqrt());
    for l in 1..=target.levels() {
        let p = generated_projection(rep, &target.basis(l).expect("level"), tol);
        let residual = frob(&(p - rep.dil_flag.projection(l).expect("level")));
        report.push_level(LevelEntry { level: l, residual: Some(residual), pass: residual <= bound, ..Default::default() });
    }
    report
}

/// `span{π(a)V g : g ⊥ H_l}` is the orthogonal complement of the `l`-th
/// dilation level.
pub fn verify_perp_identity(rep: &StinespringRep, tol: &Tolerances) -> CertificateReport {
    let mut report = CertificateReport::new("perp_identity");
    let target = rep.map.target();
    let bound = tol.eq_bound((rep.dim() as f64).sqrt());
    let eye = linalg::identity(rep.dim());
    for l in 1..=target.levels() {
        let p = generated_projection(rep, &target.complement(l).expect("level"), tol);
        let residual = frob(&(p - (&eye - rep.dil_flag.projection(l).expect("level"))));
        report.push_level(LevelEntry { level: l, residual: Some(residual), pass: residual <= bound, ..Default::default() });
    }
    report
}

/// Change-of-basis matrix between the two source algebras, after checking
/// that both representations dilate the same map.
fn matching_maps(m1: &LocalCPMap, m2: &LocalCPMap, tol: &Tolerances) -> Result<CMat> {
    if !m1.target().same_as(m2.target()) {
        return Err(Error::MapMismatch("target flags differ".into()));
    }
    let c = m1.source().change_of_basis(m2.source(), tol).map_err(|e| Error::MapMismatch(e.to_string()))?;
    for p in 0..m1.source().dim() {
        let other = m2.apply(&c.column(p).into_owned());
        let diff = frob(&(m1.image(p) - other));
        if diff > tol.eq_bound(m1.scale()) {
            return Err(Error::MapMismatch(format!("images of basis element {} differ by {diff:.3e}", p + 1)));
        }
    }
    Ok(c)
}

/// The unitary `U` with `U π_1(a) V_1 h = π_2(a) V_2 h` between two minimal
/// dilations of the same map.
pub fn unitary_equivalence(rep1: &StinespringRep, rep2: &StinespringRep, tol: &Tolerances) -> Result<(CMat, CertificateReport)> {
    let c = matching_maps(&rep1.map, &rep2.map, tol)?;
    if rep1.dim() != rep2.dim() {
        return Err(Error::Dimension(format!("dilation dimensions differ: {} vs {}", rep1.dim(), rep2.dim())));
    }
    let n = rep1.map.target().ambient();
    let raw = rep2.q() * linalg::kron(&c, &linalg::identity(n)) * rep1.q_pinv();
    let u = linalg::polar_unitary(&raw);
    let r = rep1.dim();
    let scale = (r as f64).sqrt();

    let mut report = CertificateReport::new("unitary_equivalence");
    report.push_check("unitarity", linalg::isometry_defect(&u), tol.eq_bound(scale));
    report.push_check("intertwines_v", frob(&(&u * rep1.v() - rep2.v())), tol.eq_bound(frob(rep2.v())));
    let mut worst: f64 = 0.0;
    for p in 0..rep1.pi.len() {
        let pi2 = rep2.pi_of(&c.column(p).into_owned());
        let pi_scale = frob(rep1.pi(p)).max(1.0);
        worst = worst.max(frob(&(&u * rep1.pi(p) - pi2 * &u)) / pi_scale);
    }
    report.push_check("intertwines_pi", worst, tol.eq_bound(1.0));
    for l in 1..=rep1.dil_flag.levels() {
        let p1 = rep1.dil_flag.projection(l)?;
        let p2 = rep2.dil_flag.projection(l)?;
        report.push_check(format!("flag_level_{l}"), frob(&(&u * p1 * u.adjoint() - p2)), tol.eq_bound(scale));
    }
    Ok((u, report))
}

/// A non-minimal dilation of the same map: `π ⊕ id` on the dilation space
/// plus a copy of the algebra's own space, with `V ⊕ 0`.
pub fn pad_with_defining(rep: &StinespringRep) -> Result<StinespringRep> {
    let alg = rep.map.source();
    let domain = alg.domain();
    if domain.levels() != rep.dil_flag.levels() {
        return Err(Error::Dimension("padding needs matching level counts".into()));
    }
    let (r, m) = (rep.dim(), domain.ambient());
    let total = r + m;
    let dims: Vec<usize> = rep.dil_flag.dims().iter().zip(domain.dims()).map(|(a, b)| a + b).collect();
    let mut frame = CMat::zeros(total, total);
    let (mut col, mut r0, mut k0) = (0, 0, 0);
    let domain_frame = domain.frame();
    for (&rl, &kl) in rep.dil_flag.dims().iter().zip(domain.dims()) {
        for i in r0..rl {
            frame[(i, col)] = linalg::ONE;
            col += 1;
        }
        for j in k0..kl {
            frame.view_mut((r, col), (m, 1)).copy_from(&domain_frame.column(j));
            col += 1;
        }
        r0 = rl;
        k0 = kl;
    }
    let flag = Flag::nested(total, dims, Some(frame))?;
    let pad = |a: &CMat, b: &CMat| {
        let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
        out.view_mut((0, 0), a.shape()).copy_from(a);
        out.view_mut(a.shape(), b.shape()).copy_from(b);
        out
    };
    let pi =
        rep.pi.iter().enumerate().map(|(i, p)| BlockOp::trusted(pad(p.matrix(), alg.basis_element(i)), &flag, &flag)).collect();
    let v = pad(rep.v(), &CMat::zeros(m, 0));
    Ok(StinespringRep {
        map: rep.map.clone(),
        pi,
        v: BlockOp::trusted(v, rep.map.target(), &flag),
        q: pad(&rep.q, &CMat::zeros(m, 0)),
        q_pinv: pad(&rep.q_pinv, &CMat::zeros(0, m)),
        dil_flag: flag,
        spectrum: rep.spectrum.clone(),
        defect: rep.defect,
    })
}
