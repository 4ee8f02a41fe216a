//! Concrete Hilbert modules over a local algebra and their CP-inducing maps.
//!
//! A module is a finite-dimensional space of operators `x : H_A -> K` that is
//! closed under `x ↦ x a` for `a` in the algebra and whose inner products
//! `⟨x, y⟩ = x* y` land back in the algebra. A map `Φ` on the module is
//! `φ`-inducing when `Φ(x)* Φ(y) = φ(⟨x, y⟩)`. Its dilation pairs the minimal
//! Stinespring dilation of `φ` with a coisometry `W` onto
//! `K^Φ = span{Φ(x) h}` and a map `ρ` with `Φ(x) = W* ρ(x) V`.

use std::sync::Arc;

use serde::Serialize;

use crate::cp_maps::{dominates, LocalCPMap};
use crate::error::{Error, Result};
use crate::flagspace::{check_block_op, classify, BlockOp, Flag, LocalOrder};
use crate::linalg::{self, frob, CMat, CVec, ZERO};
use crate::local_algebra::{check_permutation, LocalAlgebra};
use crate::radon_nikodym::{intertwiner, map_from_derivative};
use crate::report::{CertificateReport, LevelEntry};
use crate::stinespring::{dilate_minimal, nested_frame, unitary_equivalence, StinespringRep};
use crate::Tolerances;

#[derive(Clone, Debug)]
pub struct HilbertModule {
    algebra: Arc<LocalAlgebra>,
    carrier: Flag,
    basis: Vec<BlockOp>,
    action: Vec<CMat>,
    gram: Vec<Vec<CVec>>,
    solver: CMat,
}

impl HilbertModule {
    pub fn new(algebra: Arc<LocalAlgebra>, carrier: &Flag, basis: Vec<CMat>, tol: &Tolerances) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Validation("a module needs a nonempty basis".into()));
        }
        let domain = algebra.domain().clone();
        let ops = basis.into_iter().map(|m| check_block_op(m, &domain, carrier, tol.tau_eq)).collect::<Result<Vec<_>>>()?;
        let (kn, an) = (carrier.ambient(), domain.ambient());
        let m = ops.len();
        for (i, x) in ops.iter().enumerate() {
            if frob(x.matrix()) <= tol.tau_eq {
                return Err(Error::Degeneracy(format!("basis element {} is zero", i + 1)));
            }
        }
        let columns: Vec<CMat> = ops.iter().map(|x| CMat::from_column_slice(kn * an, 1, x.matrix().as_slice())).collect();
        let stacked = linalg::hstack(&columns, kn * an);
        let sv = linalg::singular_values(&stacked);
        if sv.len() < m || sv[m - 1] <= tol.tau_rank * sv[0] {
            return Err(Error::Validation("module basis elements are linearly dependent".into()));
        }
        let mut module = HilbertModule {
            algebra: algebra.clone(),
            carrier: carrier.clone(),
            basis: ops,
            action: Vec::new(),
            gram: Vec::new(),
            solver: linalg::pinv(&stacked, tol.tau_rank),
        };

        let mut action = vec![CMat::zeros(m, m); algebra.dim()];
        for (j, act) in action.iter_mut().enumerate() {
            for i in 0..m {
                let xa = module.basis[i].matrix() * algebra.basis_element(j);
                let (coords, res) = module.try_coords(&xa);
                if res > tol.eq_bound(frob(&xa)) {
                    return Err(Error::Closure(format!("x_{} a_{} leaves the module (residual {res:.3e})", i + 1, j + 1)));
                }
                act.set_column(i, &coords);
            }
        }
        module.action = action;

        let mut gram = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                let ip = module.basis[i].matrix().adjoint() * module.basis[j].matrix();
                let coords = algebra
                    .coords_of(&ip, tol)
                    .map_err(|_| Error::InnerProduct(format!("⟨x_{}, x_{}⟩ is not in the algebra", i + 1, j + 1)))?;
                row.push(coords);
            }
            gram.push(row);
        }
        for (i, row) in gram.iter().enumerate() {
            let self_ip = algebra.element_op(&row[i]);
            for l in 1..=domain.levels() {
                let order = classify(&self_ip.restrict(l)?, tol.eq_bound(frob(self_ip.matrix())));
                if !matches!(order, LocalOrder::Positive | LocalOrder::Zero) {
                    return Err(Error::InnerProduct(format!("⟨x_{0}, x_{0}⟩ is not positive at level {l}", i + 1)));
                }
            }
        }
        module.gram = gram;
        Ok(module)
    }

    pub fn algebra(&self) -> &Arc<LocalAlgebra> {
        &self.algebra
    }

    pub fn carrier(&self) -> &Flag {
        &self.carrier
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BlockOp] {
        &self.basis
    }

    pub fn basis_element(&self, i: usize) -> &CMat {
        self.basis[i].matrix()
    }

    /// Column `i` of the `j`-th matrix holds the module coordinates of `x_i a_j`.
    pub fn action_tensor(&self) -> &[CMat] {
        &self.action
    }

    /// Algebra coordinates of `⟨x_i, x_j⟩`.
    pub fn gram_tensor(&self, i: usize, j: usize) -> &CVec {
        &self.gram[i][j]
    }

    pub fn element(&self, coords: &CVec) -> CMat {
        let mut out = CMat::zeros(self.carrier.ambient(), self.algebra.domain().ambient());
        for (k, x) in self.basis.iter().enumerate() {
            if coords[k] != ZERO {
                out += x.matrix() * coords[k];
            }
        }
        out
    }

    pub fn try_coords(&self, m: &CMat) -> (CVec, f64) {
        let x = &self.solver * linalg::vectorize(m);
        let res = frob(&(self.element(&x) - m));
        (x, res)
    }

    pub fn coords_of(&self, m: &CMat, tol: &Tolerances) -> Result<CVec> {
        if m.shape() != (self.carrier.ambient(), self.algebra.domain().ambient()) {
            return Err(Error::Dimension("matrix has the wrong shape for this module".into()));
        }
        let (x, res) = self.try_coords(m);
        if res > tol.eq_bound(frob(m)) {
            return Err(Error::Closure(format!("matrix is not in the module (residual {res:.3e})")));
        }
        Ok(x)
    }

    /// Module coordinates of `x_i a_j`.
    pub fn action_coords(&self, i: usize, j: usize) -> CVec {
        self.action[j].column(i).into_owned()
    }

    /// Algebra coordinates of `⟨x, y⟩`.
    pub fn inner(&self, x: &CVec, y: &CVec) -> CVec {
        let mut out = CVec::zeros(self.algebra.dim());
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let w = x[i].conj() * y[j];
                if w != ZERO {
                    out += &self.gram[i][j] * w;
                }
            }
        }
        out
    }

    pub fn permuted(&self, perm: &[usize], tol: &Tolerances) -> Result<HilbertModule> {
        check_permutation(perm, self.dim())?;
        let basis = perm.iter().map(|&i| self.basis_element(i).clone()).collect();
        HilbertModule::new(self.algebra.clone(), &self.carrier, basis, tol)
    }

    /// `C` with `self.x_p = Σ_q C_qp other.x_q`.
    pub fn change_of_basis(&self, other: &HilbertModule, tol: &Tolerances) -> Result<CMat> {
        if !self.carrier.same_as(&other.carrier) || self.dim() != other.dim() {
            return Err(Error::Mismatch("modules have different carriers or dimensions".into()));
        }
        let m = self.dim();
        let mut c = CMat::zeros(m, m);
        for p in 0..m {
            let x = other
                .coords_of(self.basis_element(p), tol)
                .map_err(|_| Error::Mismatch("modules span different subspaces".into()))?;
            c.set_column(p, &x);
        }
        Ok(c)
    }

    pub fn same_as(&self, other: &HilbertModule) -> bool {
        self.carrier.same_as(&other.carrier)
            && self.algebra.same_as(&other.algebra)
            && self.dim() == other.dim()
            && self
                .basis
                .iter()
                .zip(&other.basis)
                .all(|(a, b)| frob(&(a.matrix() - b.matrix())) <= 1e-12 * frob(a.matrix()).max(1.0))
    }
}

/// `Φ : E -> B(H, K)` given on the module basis, together with the map `φ`
/// it is meant to induce.
#[derive(Clone, Debug)]
pub struct CPInducingMap {
    module: Arc<HilbertModule>,
    phi: LocalCPMap,
    target: Flag,
    images: Vec<BlockOp>,
}

impl CPInducingMap {
    /// `images[i] = Φ(x_i)`, each an operator from `φ`'s target space to `target`.
    pub fn new(module: Arc<HilbertModule>, phi: LocalCPMap, target: &Flag, images: Vec<CMat>, tol: &Tolerances) -> Result<Self> {
        if !phi.source().same_as(module.algebra()) {
            return Err(Error::Mismatch("phi is not defined on the module's algebra".into()));
        }
        if images.len() != module.dim() {
            return Err(Error::Dimension(format!("{} images for a {}-dimensional module", images.len(), module.dim())));
        }
        let images =
            images.into_iter().map(|m| check_block_op(m, phi.target(), target, tol.tau_eq)).collect::<Result<Vec<_>>>()?;
        Ok(CPInducingMap { module, phi, target: target.clone(), images })
    }

    pub(crate) fn trusted(module: Arc<HilbertModule>, phi: LocalCPMap, target: &Flag, images: Vec<CMat>) -> Self {
        let images = images.into_iter().map(|m| BlockOp::trusted(m, phi.target(), target)).collect();
        CPInducingMap { module, phi, target: target.clone(), images }
    }

    pub fn module(&self) -> &Arc<HilbertModule> {
        &self.module
    }

    pub fn phi(&self) -> &LocalCPMap {
        &self.phi
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

    pub fn apply(&self, coords: &CVec) -> CMat {
        let mut out = CMat::zeros(self.target.ambient(), self.phi.target().ambient());
        for (k, img) in self.images.iter().enumerate() {
            if coords[k] != ZERO {
                out += img.matrix() * coords[k];
            }
        }
        out
    }

    pub fn scale(&self) -> f64 {
        self.images.iter().map(|b| frob(b.matrix())).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &CPInducingMap) -> f64 {
        self.images.iter().zip(&other.images).map(|(a, b)| frob(&(a.matrix() - b.matrix()))).fold(0.0, f64::max)
    }

    /// Same inducing map over the module with its basis reordered by `perm`.
    pub fn with_permuted_basis(&self, perm: &[usize], tol: &Tolerances) -> Result<CPInducingMap> {
        let module = Arc::new(self.module.permuted(perm, tol)?);
        let images = perm.iter().map(|&i| self.image(i).clone()).collect();
        Ok(Self::trusted(module, self.phi.clone(), &self.target, images))
    }

    /// `x ↦ u Φ(x)` for an operator `u` on the target space.
    pub fn left_multiplied(&self, u: &CMat, tol: &Tolerances) -> Result<CPInducingMap> {
        check_block_op(u.clone(), &self.target, &self.target, tol.tau_eq)?;
        let images = self.images.iter().map(|b| u * b.matrix()).collect();
        Ok(Self::trusted(self.module.clone(), self.phi.clone(), &self.target, images))
    }
}

/// `Φ(x_i)* Φ(x_j) = φ(⟨x_i, x_j⟩)` for all basis pairs.
pub fn verify_phi_map(map: &CPInducingMap, tol: &Tolerances) -> CertificateReport {
    let mut report = CertificateReport::new("phi_map");
    let module = map.module();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..module.dim() {
        for j in 0..module.dim() {
            let lhs = map.image(i).adjoint() * map.image(j);
            let rhs = map.phi.apply(module.gram_tensor(i, j));
            scale = scale.max(frob(&rhs));
            worst = worst.max(frob(&(lhs - rhs)));
        }
    }
    report.push_check("inner_products", worst, tol.eq_bound(scale));
    report
}

#[derive(Clone, Debug)]
pub struct ModuleDilation {
    inducing: CPInducingMap,
    stine: StinespringRep,
    rho: Vec<BlockOp>,
    w: CMat,
    k_flag: Flag,
    defect: f64,
}

pub fn module_dilate(map: &CPInducingMap, tol: &Tolerances) -> Result<ModuleDilation> {
    let cert = verify_phi_map(map, tol);
    if !cert.pass {
        return Err(Error::Certificate(cert.failures()));
    }
    let stine = dilate_minimal(map.phi(), tol)?;
    let module = map.module();
    let h = map.phi().target();
    let nk = map.target().ambient();
    let level_blocks: Vec<CMat> = (1..=h.levels())
        .map(|l| {
            let b = h.basis(l).expect("level");
            let parts: Vec<CMat> = map.images.iter().map(|x| x.matrix() * &b).collect();
            linalg::hstack(&parts, nk)
        })
        .collect();
    let top = level_blocks.last().expect("at least one level");
    let threshold = tol.tau_rank.sqrt() * linalg::spectral_norm(top);
    let k = linalg::range_basis(top, threshold).ncols();
    let (frame, dims) = nested_frame(&level_blocks, k, threshold);
    let w = frame.adjoint();
    let k_flag = Flag::nested(k, dims, None)?;

    let alg = module.algebra();
    let mut defect: f64 = 0.0;
    let rho = (0..module.dim())
        .map(|i| {
            let parts: Vec<CMat> = (0..alg.dim()).map(|j| &w * map.apply(&module.action_coords(i, j))).collect();
            let lifted = linalg::hstack(&parts, k);
            let r = &lifted * stine.q_pinv();
            defect = defect.max(frob(&(&lifted - &r * stine.q())));
            BlockOp::trusted(r, stine.dil_flag(), &k_flag)
        })
        .collect();
    Ok(ModuleDilation { inducing: map.clone(), stine, rho, w, k_flag, defect })
}

impl ModuleDilation {
    pub fn inducing(&self) -> &CPInducingMap {
        &self.inducing
    }

    pub fn stinespring(&self) -> &StinespringRep {
        &self.stine
    }

    pub fn rho(&self, i: usize) -> &CMat {
        self.rho[i].matrix()
    }

    pub fn rho_ops(&self) -> &[BlockOp] {
        &self.rho
    }

    pub fn rho_of(&self, coords: &CVec) -> CMat {
        let mut out = CMat::zeros(self.k_dim(), self.stine.dim());
        for (k, p) in self.rho.iter().enumerate() {
            if coords[k] != ZERO {
                out += p.matrix() * coords[k];
            }
        }
        out
    }

    /// Coisometry onto `K^Φ`, with `W W* = I`.
    pub fn w(&self) -> &CMat {
        &self.w
    }

    pub fn k_dim(&self) -> usize {
        self.k_flag.ambient()
    }

    pub fn k_flag(&self) -> &Flag {
        &self.k_flag
    }

    pub fn quotient_defect(&self) -> f64 {
        self.defect
    }

    /// `[ρ(x_i) V]` over the given basis order, the generators of `K^Φ`.
    fn generators(&self, order: &[usize]) -> CMat {
        let parts: Vec<CMat> = order.iter().map(|&i| self.rho(i) * self.stine.v()).collect();
        linalg::hstack(&parts, self.k_dim())
    }

    /// The unique `S` on `K^Φ` with `S ρ(x) = ρ(x) T`, built from the
    /// generators `ρ(x_i) V h` listed in `order`.
    pub fn induced_module_operator(&self, t: &CMat, order: &[usize], tol: &Tolerances) -> Result<CMat> {
        check_permutation(order, self.rho.len())?;
        let g = self.generators(order);
        let parts: Vec<CMat> = order.iter().map(|&i| self.rho(i) * t * self.stine.v()).collect();
        let gt = linalg::hstack(&parts, self.k_dim());
        Ok(linalg::hermitian_part(&(gt * linalg::pinv(&g, tol.tau_rank.sqrt()))))
    }

    /// Conjugate by unitaries `u` on the dilation space and `y` on `K^Φ`.
    pub fn conjugated(&self, u: &CMat, y: &CMat, tol: &Tolerances) -> Result<ModuleDilation> {
        let stine = self.stine.conjugated(u, tol)?;
        check_block_op(y.clone(), &self.k_flag, &self.k_flag, tol.tau_eq)?;
        if linalg::isometry_defect(y) > tol.eq_bound((self.k_dim() as f64).sqrt()) {
            return Err(Error::Validation("module conjugation is not unitary".into()));
        }
        let rho =
            self.rho.iter().map(|r| BlockOp::trusted(y * r.matrix() * u.adjoint(), stine.dil_flag(), &self.k_flag)).collect();
        Ok(ModuleDilation {
            inducing: self.inducing.clone(),
            stine,
            rho,
            w: y * &self.w,
            k_flag: self.k_flag.clone(),
            defect: self.defect,
        })
    }
}

/// Morphism, reconstruction, coisometry and level-minimality checks.
pub fn verify_module_dilation(d: &ModuleDilation, tol: &Tolerances) -> CertificateReport {
    let mut report = CertificateReport::new("module_dilation");
    let module = d.inducing.module();
    let stine = &d.stine;
    let mut morph: f64 = 0.0;
    let mut morph_scale: f64 = 0.0;
    for i in 0..module.dim() {
        for j in 0..module.dim() {
            let lhs = d.rho(i).adjoint() * d.rho(j);
            let rhs = stine.pi_of(module.gram_tensor(i, j));
            morph_scale = morph_scale.max(frob(&rhs));
            morph = morph.max(frob(&(lhs - rhs)));
        }
    }
    report.push_check("morphism", morph, tol.eq_bound(morph_scale));
    let recon =
        (0..module.dim()).map(|i| frob(&(d.w.adjoint() * d.rho(i) * stine.v() - d.inducing.image(i)))).fold(0.0, f64::max);
    report.push_check("reconstruction", recon, tol.eq_bound(d.inducing.scale()));
    let k = d.k_dim();
    report.push_check("coisometry", frob(&(&d.w * d.w.adjoint() - linalg::identity(k))), tol.eq_bound((k as f64).sqrt()));
    let h = d.inducing.phi().target();
    let threshold = tol.tau_rank.sqrt() * linalg::spectral_norm(&d.generators(&(0..module.dim()).collect::<Vec<_>>()));
    for l in 1..=h.levels() {
        let b = h.basis(l).expect("level");
        let parts: Vec<CMat> = d.rho.iter().map(|r| r.matrix() * stine.v() * &b).collect();
        let span = linalg::projector(&linalg::range_basis(&linalg::hstack(&parts, k), threshold));
        let residual = frob(&(span - d.k_flag.projection(l).expect("level")));
        report.push_level(LevelEntry {
            level: l,
            residual: Some(residual),
            pass: residual <= tol.eq_bound((k as f64).sqrt()),
            ..Default::default()
        });
    }
    report
}

fn module_change(c1: &CPInducingMap, c2: &CPInducingMap, tol: &Tolerances) -> Result<CMat> {
    if !c1.target.same_as(&c2.target) {
        return Err(Error::MapMismatch("inducing maps have different target flags".into()));
    }
    let c = c1.module.change_of_basis(&c2.module, tol).map_err(|e| Error::MapMismatch(e.to_string()))?;
    for p in 0..c1.module.dim() {
        let diff = frob(&(c1.image(p) - c2.apply(&c.column(p).into_owned())));
        if diff > tol.eq_bound(c1.scale()) {
            return Err(Error::MapMismatch(format!("images of module element {} differ by {diff:.3e}", p + 1)));
        }
    }
    Ok(c)
}

/// Unitaries `(U_φ, U_Φ)` between two dilations of the same inducing map.
pub fn module_unitary_equivalence(
    d1: &ModuleDilation,
    d2: &ModuleDilation,
    tol: &Tolerances,
) -> Result<(CMat, CMat, CertificateReport)> {
    let (u_phi, mut report) = unitary_equivalence(&d1.stine, &d2.stine, tol)?;
    let c = module_change(&d1.inducing, &d2.inducing, tol)?;
    if d1.k_dim() != d2.k_dim() {
        return Err(Error::Dimension(format!("module dilation dimensions differ: {} vs {}", d1.k_dim(), d2.k_dim())));
    }
    let m = d1.rho.len();
    let k = d1.k_dim();
    let rho2: Vec<CMat> = (0..m).map(|p| d2.rho_of(&c.column(p).into_owned())).collect();
    let g1 = d1.generators(&(0..m).collect::<Vec<_>>());
    let parts: Vec<CMat> = rho2.iter().map(|r| r * d2.stine.v()).collect();
    let g2 = linalg::hstack(&parts, k);
    let u_mod = linalg::polar_unitary(&(g2 * linalg::pinv(&g1, tol.tau_rank.sqrt())));

    let scale = (k as f64).sqrt();
    report.push_check("module_unitarity", linalg::isometry_defect(&u_mod), tol.eq_bound(scale));
    let mut worst: f64 = 0.0;
    for (p, r2) in rho2.iter().enumerate() {
        worst = worst.max(frob(&(&u_mod * d1.rho(p) - r2 * &u_phi)) / frob(r2).max(1.0));
    }
    report.push_check("module_intertwines_rho", worst, tol.eq_bound(1.0));
    report.push_check("module_intertwines_w", frob(&(&u_mod * &d1.w - &d2.w)), tol.eq_bound(scale));
    for l in 1..=d1.k_flag.levels() {
        let p1 = d1.k_flag.projection(l)?;
        let p2 = d2.k_flag.projection(l)?;
        report.push_check(format!("module_flag_level_{l}"), frob(&(&u_mod * p1 * u_mod.adjoint() - p2)), tol.eq_bound(scale));
    }
    Ok((u_phi, u_mod, report))
}

/// For two inducing maps of the same `φ`, the partial isometry `W` on `K` with
/// `W* W = P_{K^Φ1}`, `W W* = P_{K^Φ2}` and `Φ2(x) = W Φ1(x)`.
pub fn equivalence_partial_isometry(
    c1: &CPInducingMap,
    c2: &CPInducingMap,
    tol: &Tolerances,
) -> Result<(CMat, CertificateReport)> {
    if !(Arc::ptr_eq(&c1.module, &c2.module) || c1.module.same_as(&c2.module)) {
        return Err(Error::Mismatch("inducing maps live on different modules".into()));
    }
    if !c1.target.same_as(&c2.target) {
        return Err(Error::Mismatch("inducing maps have different target flags".into()));
    }
    c1.phi.check_same_shape(&c2.phi)?;
    let dist = c1.phi.distance(&c2.phi);
    if dist > tol.eq_bound(c1.phi.scale()) {
        return Err(Error::Equivalence(dist));
    }
    let d1 = module_dilate(c1, tol)?;
    let d2 = module_dilate(c2, tol)?;
    let order: Vec<usize> = (0..c1.module.dim()).collect();
    let g1 = d1.generators(&order);
    let g2 = d2.generators(&order);
    let u = linalg::polar_unitary(&(g2 * linalg::pinv(&g1, tol.tau_rank.sqrt())));
    let w = d2.w.adjoint() * u * &d1.w;

    let nk = c1.target.ambient();
    let bound = tol.eq_bound((nk as f64).sqrt());
    let mut report = CertificateReport::new("partial_isometry");
    report.push_check("initial_projection", frob(&(w.adjoint() * &w - d1.w.adjoint() * &d1.w)), bound);
    report.push_check("final_projection", frob(&(&w * w.adjoint() - d2.w.adjoint() * &d2.w)), bound);
    let worst = (0..c1.module.dim()).map(|i| frob(&(c2.image(i) - &w * c1.image(i)))).fold(0.0, f64::max);
    report.push_check("intertwines", worst, tol.eq_bound(c2.scale()));
    Ok((w, report))
}

/// `Φ_{T⊕S}(x) = W* √S ρ(x) √T V` for a commutant pair `(T, S)`. The result
/// induces `φ_{T²}`.
pub fn map_from_commutant_pair(d: &ModuleDilation, t: &CMat, s: &CMat, tol: &Tolerances) -> Result<CPInducingMap> {
    let (r, k) = (d.stine.dim(), d.k_dim());
    if t.shape() != (r, r) || s.shape() != (k, k) {
        return Err(Error::Dimension(format!("expected T {r}x{r} and S {k}x{k}")));
    }
    for m in [t, s] {
        if linalg::hermitian_defect(m) > tol.eq_bound(frob(m)) {
            return Err(Error::Validation("pair entries must be Hermitian".into()));
        }
        let e = linalg::herm_eig(m);
        let (min, max) = (e.values.last().copied().unwrap_or(0.0), e.values.first().copied().unwrap_or(0.0));
        if min < -tol.tau_psd || max > 1.0 + tol.tau_psd {
            return Err(Error::Spectrum { min, max });
        }
    }
    let pair = d.rho.iter().map(|x| frob(&(s * x.matrix() - x.matrix() * t)) / frob(x.matrix()).max(1.0)).fold(0.0, f64::max);
    if pair > tol.eq_bound(1.0) {
        return Err(Error::Commutant(pair));
    }
    check_block_op(t.clone(), d.stine.dil_flag(), d.stine.dil_flag(), tol.tau_eq)?;
    check_block_op(s.clone(), &d.k_flag, &d.k_flag, tol.tau_eq)?;
    let phi = map_from_derivative(&d.stine, &(t * t), tol)?;
    let (st, ss) = (linalg::psd_sqrt(t), linalg::psd_sqrt(s));
    let v = d.stine.v();
    let images = d.rho.iter().map(|x| d.w.adjoint() * &ss * x.matrix() * &st * v).collect();
    Ok(CPInducingMap::trusted(d.inducing.module.clone(), phi, &d.inducing.target, images))
}

#[derive(Clone, Debug, Serialize)]
pub struct ModuleRn {
    #[serde(serialize_with = "crate::instance::ser_matrix")]
    pub abs_t: CMat,
    #[serde(serialize_with = "crate::instance::ser_matrix")]
    pub abs_s: CMat,
    #[serde(skip)]
    pub phi_r: CPInducingMap,
    pub report: CertificateReport,
}

/// Radon-Nikodym data of `sub` relative to `dom`: the pair `(|T|, |S|)` with
/// `sub ∼ Φ_{|T|⊕|S|}`.
pub fn module_rn(dom: &CPInducingMap, sub: &CPInducingMap, tol: &Tolerances) -> Result<ModuleRn> {
    if !(Arc::ptr_eq(&dom.module, &sub.module) || dom.module.same_as(&sub.module)) {
        return Err(Error::Mismatch("inducing maps live on different modules".into()));
    }
    let dom_cert = dominates(&dom.phi, &sub.phi, tol)?;
    if !dom_cert.pass {
        return Err(Error::Domination(dom_cert.failures()));
    }
    let d_phi = module_dilate(dom, tol)?;
    let d_psi = module_dilate(sub, tol)?;
    let t_int = intertwiner(&d_phi.stine, &d_psi.stine, tol)?;
    let order: Vec<usize> = (0..dom.module.dim()).collect();
    let s_mod = d_psi.generators(&order) * linalg::pinv(&d_phi.generators(&order), tol.tau_rank.sqrt());
    let s_norm = linalg::spectral_norm(&s_mod);
    if s_norm > 1.0 + tol.tau_eq {
        return Err(Error::Domination(format!("module intertwiner has norm {s_norm:.6}")));
    }
    let abs_t = linalg::modulus(&t_int);
    let abs_s = linalg::modulus(&s_mod);
    let phi_r = map_from_commutant_pair(&d_phi, &abs_t, &abs_s, tol)?;

    let mut report = CertificateReport::new("module_rn");
    report.push_check("inducing_maps", sub.phi.distance(phi_r.phi()), tol.eq_bound(sub.phi.scale()));
    let pair = d_phi.rho.iter().map(|x| frob(&(&abs_s * x.matrix() - x.matrix() * &abs_t))).fold(0.0, f64::max);
    report.push_check("pair_relation", pair, tol.eq_bound(1.0));
    report.merge(verify_phi_map(&phi_r, tol));
    Ok(ModuleRn { abs_t, abs_s, phi_r, report })
}
