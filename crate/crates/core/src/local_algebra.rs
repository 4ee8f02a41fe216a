//! Finite-dimensional unital *-algebras of flag-compatible operators.
//!
//! An algebra is stored by a basis `a_1..a_d` together with its structure
//! constants: `a_i a_j = Σ_k c^k_ij a_k` and `a_i* = Σ_k s_ki a_k`. Elements are
//! handled as coordinate vectors in that basis. Restricting to level `α` of the
//! domain flag gives a seminorm `p_α(a) = ‖a|_{H_α}‖` whose kernel is the
//! ideal returned by [`LocalAlgebra::kernel_basis`].

use crate::error::{Error, Result};
use crate::flagspace::{BlockOp, Flag};
use crate::linalg::{self, frob, CMat, CVec, ZERO};
use crate::Tolerances;

#[derive(Clone, Debug)]
pub struct LocalAlgebra {
    domain: Flag,
    basis: Vec<BlockOp>,
    unit: CVec,
    left: Vec<CMat>,
    star: CMat,
    solver: CMat,
}

impl LocalAlgebra {
    /// Wrap an explicit basis. Structure constants are recomputed here and the
    /// span is checked for closure under products and adjoints.
    pub fn from_basis(domain: &Flag, basis: Vec<CMat>, tol: &Tolerances) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::Validation("an algebra needs a nonempty basis".into()));
        }
        let n = domain.ambient();
        let ops = basis.into_iter().map(|m| BlockOp::square(m, domain, tol.tau_eq)).collect::<Result<Vec<_>>>()?;
        let d = ops.len();
        let columns: Vec<CMat> = ops.iter().map(|a| CMat::from_column_slice(n * n, 1, a.matrix().as_slice())).collect();
        let stacked = linalg::hstack(&columns, n * n);
        let sv = linalg::singular_values(&stacked);
        if sv.len() < d || sv[d - 1] <= tol.tau_rank * sv[0] {
            return Err(Error::Validation("basis elements are linearly dependent".into()));
        }
        let solver = linalg::pinv(&stacked, tol.tau_rank);
        let mut alg = LocalAlgebra {
            domain: domain.clone(),
            basis: ops,
            unit: CVec::zeros(d),
            left: Vec::new(),
            star: CMat::zeros(d, d),
            solver,
        };

        let (unit, res) = alg.try_coords(&linalg::identity(n));
        if res > tol.eq_bound(n as f64) {
            return Err(Error::Validation(format!("identity is not in the span (residual {res:.3e})")));
        }
        alg.unit = unit;

        let mut left = vec![CMat::zeros(d, d); d];
        for (i, li) in left.iter_mut().enumerate() {
            for j in 0..d {
                let prod = alg.basis[i].matrix() * alg.basis[j].matrix();
                let (x, res) = alg.try_coords(&prod);
                if res > tol.eq_bound(frob(&prod)) {
                    return Err(Error::Closure(format!("a_{} a_{} leaves the span (residual {res:.3e})", i + 1, j + 1)));
                }
                li.set_column(j, &x);
            }
        }
        alg.left = left;

        for i in 0..d {
            let adj = alg.basis[i].matrix().adjoint();
            let (x, res) = alg.try_coords(&adj);
            if res > tol.eq_bound(frob(&adj)) {
                return Err(Error::Closure(format!("a_{}* leaves the span (residual {res:.3e})", i + 1)));
            }
            alg.star.set_column(i, &x);
        }
        Ok(alg)
    }

    pub fn domain(&self) -> &Flag {
        &self.domain
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

    pub fn unit_coords(&self) -> &CVec {
        &self.unit
    }

    /// Left multiplication matrices: entry `(k, j)` of the `i`-th matrix is `c^k_ij`.
    pub fn mult_tensor(&self) -> &[CMat] {
        &self.left
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> num_complex::Complex64 {
        self.left[i][(k, j)]
    }

    /// Column `i` holds the coordinates of `a_i*`.
    pub fn star_matrix(&self) -> &CMat {
        &self.star
    }

    pub fn element(&self, coords: &CVec) -> CMat {
        let n = self.domain.ambient();
        let mut out = CMat::zeros(n, n);
        for (k, a) in self.basis.iter().enumerate() {
            if coords[k] != ZERO {
                out += a.matrix() * coords[k];
            }
        }
        out
    }

    pub fn element_op(&self, coords: &CVec) -> BlockOp {
        BlockOp::trusted(self.element(coords), &self.domain, &self.domain)
    }

    /// Least-squares coordinates of `m` and the Frobenius residual.
    pub fn try_coords(&self, m: &CMat) -> (CVec, f64) {
        let v = linalg::vectorize(m);
        let x = &self.solver * v;
        let res = frob(&(self.element(&x) - m));
        (x, res)
    }

    pub fn coords_of(&self, m: &CMat, tol: &Tolerances) -> Result<CVec> {
        if m.shape() != (self.domain.ambient(), self.domain.ambient()) {
            return Err(Error::Dimension("matrix does not act on the algebra's domain".into()));
        }
        let (x, res) = self.try_coords(m);
        if res > tol.eq_bound(frob(m)) {
            return Err(Error::Closure(format!("matrix is not in the algebra (residual {res:.3e})")));
        }
        Ok(x)
    }

    pub fn basis_coords(&self, i: usize) -> CVec {
        let mut e = CVec::zeros(self.dim());
        e[i] = linalg::ONE;
        e
    }

    pub fn product_coords(&self, x: &CVec, y: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim());
        for (i, l) in self.left.iter().enumerate() {
            if x[i] != ZERO {
                out += (l * y) * x[i];
            }
        }
        out
    }

    pub fn adjoint_coords(&self, x: &CVec) -> CVec {
        &self.star * x.map(|z| z.conj())
    }

    /// Coordinates of `a_p* a_q`.
    pub fn gram_coords(&self, p: usize, q: usize) -> CVec {
        let adj = self.star.column(p).into_owned();
        self.product_coords(&adj, &self.basis_coords(q))
    }

    /// `p_level(Σ x_k a_k)`.
    pub fn seminorm(&self, coords: &CVec, level: usize) -> Result<f64> {
        self.element_op(coords).seminorm(level)
    }

    /// Coordinate basis of `I_level = {a : a|_{H_level} = 0}`.
    pub fn kernel_basis(&self, level: usize, tol: &Tolerances) -> Result<Vec<CVec>> {
        let b = self.domain.basis(level)?;
        let k = b.ncols();
        let cols: Vec<CMat> = self
            .basis
            .iter()
            .map(|a| {
                let r = b.adjoint() * a.matrix() * &b;
                CMat::from_column_slice(k * k, 1, r.as_slice())
            })
            .collect();
        let restriction = linalg::hstack(&cols, k * k);
        let null = linalg::null_space(&restriction, tol.tau_rank);
        Ok(null.column_iter().map(|c| c.into_owned()).collect())
    }

    /// Matrix `C` with `self.a_p = Σ_q C_qp other.a_q`.
    pub fn change_of_basis(&self, other: &LocalAlgebra, tol: &Tolerances) -> Result<CMat> {
        if !self.domain.same_as(&other.domain) || self.dim() != other.dim() {
            return Err(Error::Mismatch("algebras live on different flags or have different dimensions".into()));
        }
        let d = self.dim();
        let mut c = CMat::zeros(d, d);
        for p in 0..d {
            let x = other
                .coords_of(self.basis_element(p), tol)
                .map_err(|_| Error::Mismatch("algebras span different subspaces".into()))?;
            c.set_column(p, &x);
        }
        Ok(c)
    }

    /// The same algebra with its basis listed in the order `perm`.
    pub fn permuted(&self, perm: &[usize], tol: &Tolerances) -> Result<LocalAlgebra> {
        check_permutation(perm, self.dim())?;
        let basis = perm.iter().map(|&i| self.basis_element(i).clone()).collect();
        LocalAlgebra::from_basis(&self.domain, basis, tol)
    }

    /// Same basis, with matching coordinates and no recomputation.
    pub fn same_as(&self, other: &LocalAlgebra) -> bool {
        self.domain.same_as(&other.domain)
            && self.dim() == other.dim()
            && self
                .basis
                .iter()
                .zip(&other.basis)
                .all(|(a, b)| frob(&(a.matrix() - b.matrix())) <= 1e-12 * frob(a.matrix()).max(1.0))
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::Param(format!("permutation has length {}, expected {n}", perm.len())));
    }
    for &i in perm {
        if i >= n || seen[i] {
            return Err(Error::Param(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        seen[i] = true;
    }
    Ok(())
}

struct GramSchmidt {
    vectors: Vec<CVec>,
    tol: f64,
}

impl GramSchmidt {
    fn push(&mut self, v: CVec) -> bool {
        let norm0 = v.norm();
        if norm0 == 0.0 {
            return false;
        }
        let mut w = v;
        // Two passes keep the basis orthonormal to machine precision.
        for _ in 0..2 {
            for u in &self.vectors {
                let proj = u.dotc(&w);
                w -= u * proj;
            }
        }
        let norm = w.norm();
        if norm <= self.tol * norm0 {
            return false;
        }
        self.vectors.push(w / linalg::real(norm));
        true
    }
}

/// Close `generators ∪ {I}` under products and adjoints. The basis lists the
/// generators first (orthonormalized in order), then the identity, then new
/// products and adjoints in lexicographic order of discovery. The basis is
/// orthonormal for the Frobenius inner product.
pub fn build_algebra(domain: &Flag, generators: &[CMat], tol: &Tolerances) -> Result<LocalAlgebra> {
    let n = domain.ambient();
    for g in generators {
        BlockOp::square(g.clone(), domain, tol.tau_eq)?;
    }
    let mut gs = GramSchmidt { vectors: Vec::new(), tol: 100.0 * tol.tau_rank };
    for g in generators {
        gs.push(linalg::vectorize(g));
    }
    gs.push(linalg::vectorize(&linalg::identity(n)));
    let cap = n * n;
    loop {
        let before = gs.vectors.len();
        let mats: Vec<CMat> = gs.vectors.iter().map(|v| linalg::unvectorize(v, n, n)).collect();
        for m in &mats {
            gs.push(linalg::vectorize(&m.adjoint()));
        }
        for a in &mats {
            for b in &mats {
                gs.push(linalg::vectorize(&(a * b)));
            }
        }
        if gs.vectors.len() > cap {
            return Err(Error::Closure(format!("closure exceeded dimension {cap}")));
        }
        if gs.vectors.len() == before {
            break;
        }
    }
    let basis = gs.vectors.iter().map(|v| linalg::unvectorize(v, n, n)).collect();
    LocalAlgebra::from_basis(domain, basis, tol)
}

/// All block-diagonal matrices for the decomposition of the flag into
/// successive level differences.
pub fn block_diagonal_algebra(domain: &Flag, tol: &Tolerances) -> Result<LocalAlgebra> {
    let frame = domain.frame();
    let n = domain.ambient();
    let mut basis = Vec::new();
    let mut start = 0;
    for &k in domain.dims() {
        for r in start..k {
            for c in start..k {
                let mut e = CMat::zeros(n, n);
                e[(r, c)] = linalg::ONE;
                basis.push(&frame * e * frame.adjoint());
            }
        }
        start = k;
    }
    LocalAlgebra::from_basis(domain, basis, tol)
}
