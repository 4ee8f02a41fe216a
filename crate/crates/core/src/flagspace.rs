//! Flags of subspaces and the operators that respect them.
//!
//! A flag on `C^N` is a chain `H_1 ⊆ H_2 ⊆ ... ⊆ H_L = C^N`, stored as level
//! dimensions plus a unitary frame whose first `k_l` columns span `H_l`.
//! Levels are numbered from 1. Operators keep their ambient coordinates; all
//! level computations go through the frame blocks, so a flag with the identity
//! frame and one rotated by a unitary behave identically up to that rotation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, frob, CMat};

#[derive(Clone, Debug)]
pub struct Flag(Arc<FlagData>);

#[derive(Debug)]
struct FlagData {
    ambient: usize,
    dims: Vec<usize>,
    frame: Option<CMat>,
}

const FRAME_TOL: f64 = 1e-9;

impl Flag {
    /// Validated constructor: `1 <= k_1 <= ... <= k_L = ambient`, frame unitary.
    pub fn new(ambient: usize, dims: Vec<usize>, frame: Option<CMat>) -> Result<Self> {
        if ambient == 0 {
            return Err(Error::Dimension("ambient dimension must be positive".into()));
        }
        if dims.first().is_some_and(|&k| k == 0) {
            return Err(Error::Dimension("first level must be nonzero".into()));
        }
        Self::nested(ambient, dims, frame)
    }

    pub fn standard(ambient: usize, dims: Vec<usize>) -> Result<Self> {
        Self::new(ambient, dims, None)
    }

    /// The one-level flag `{C^n}`.
    pub fn trivial(n: usize) -> Self {
        Self::nested(n, vec![n], None).expect("one-level flag is valid")
    }

    /// Like [`Flag::new`] but allows zero-dimensional levels and a zero ambient
    /// space. Dilation spaces need this: a map may vanish on its lowest levels.
    pub fn nested(ambient: usize, dims: Vec<usize>, frame: Option<CMat>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("a flag needs at least one level".into()));
        }
        if dims.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Dimension(format!("level dimensions {dims:?} are not nondecreasing")));
        }
        if *dims.last().unwrap() != ambient {
            return Err(Error::Dimension(format!(
                "top level has dimension {} but the ambient space has {ambient}",
                dims.last().unwrap()
            )));
        }
        if let Some(f) = &frame {
            if f.shape() != (ambient, ambient) {
                return Err(Error::Dimension(format!("frame is {}x{}, expected {ambient}x{ambient}", f.nrows(), f.ncols())));
            }
            let defect = linalg::isometry_defect(f);
            if defect > FRAME_TOL * (ambient.max(1) as f64) {
                return Err(Error::Frame(defect));
            }
        }
        Ok(Flag(Arc::new(FlagData { ambient, dims, frame })))
    }

    pub fn ambient(&self) -> usize {
        self.0.ambient
    }

    pub fn dims(&self) -> &[usize] {
        &self.0.dims
    }

    pub fn levels(&self) -> usize {
        self.0.dims.len()
    }

    pub fn frame(&self) -> CMat {
        self.0.frame.clone().unwrap_or_else(|| linalg::identity(self.ambient()))
    }

    pub fn explicit_frame(&self) -> Option<&CMat> {
        self.0.frame.as_ref()
    }

    pub fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.levels() {
            return Err(Error::Level { level, levels: self.levels() });
        }
        Ok(())
    }

    pub fn dim(&self, level: usize) -> Result<usize> {
        self.check_level(level)?;
        Ok(self.0.dims[level - 1])
    }

    fn frame_columns(&self, start: usize, count: usize) -> CMat {
        match &self.0.frame {
            Some(f) => f.columns(start, count).into_owned(),
            None => CMat::identity(self.ambient(), self.ambient()).columns(start, count).into_owned(),
        }
    }

    /// Orthonormal basis of `H_level`, as an `N x k_level` isometry.
    pub fn basis(&self, level: usize) -> Result<CMat> {
        let k = self.dim(level)?;
        Ok(self.frame_columns(0, k))
    }

    /// Orthonormal basis of the complement of `H_level`.
    pub fn complement(&self, level: usize) -> Result<CMat> {
        let k = self.dim(level)?;
        Ok(self.frame_columns(k, self.ambient() - k))
    }

    pub fn projection(&self, level: usize) -> Result<CMat> {
        Ok(linalg::projector(&self.basis(level)?))
    }

    /// Same ambient space, same level dimensions and the same subspaces.
    pub fn same_as(&self, other: &Flag) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.ambient() != other.ambient() || self.dims() != other.dims() {
            return false;
        }
        (1..=self.levels()).all(|l| {
            let p = self.projection(l).unwrap();
            let q = other.projection(l).unwrap();
            frob(&(p - q)) <= FRAME_TOL * (self.ambient().max(1) as f64)
        })
    }
}

/// An `R x C` operator from the source flag's space to the target flag's
/// space that maps each source level into the matching target level and each
/// source complement into the matching target complement.
#[derive(Clone, Debug)]
pub struct BlockOp {
    matrix: CMat,
    source: Flag,
    target: Flag,
}

/// Per-level residuals `‖(I-Q_l) M P_l‖_F + ‖Q_l M (I-P_l)‖_F`.
pub fn compatibility_residuals(matrix: &CMat, source: &Flag, target: &Flag) -> Result<Vec<f64>> {
    if source.levels() != target.levels() {
        return Err(Error::Dimension(format!("source flag has {} levels, target flag has {}", source.levels(), target.levels())));
    }
    if matrix.shape() != (target.ambient(), source.ambient()) {
        return Err(Error::Dimension(format!(
            "matrix is {}x{}, flags require {}x{}",
            matrix.nrows(),
            matrix.ncols(),
            target.ambient(),
            source.ambient()
        )));
    }
    (1..=source.levels())
        .map(|l| {
            let down = target.complement(l)?.adjoint() * matrix * source.basis(l)?;
            let up = target.basis(l)?.adjoint() * matrix * source.complement(l)?;
            Ok(frob(&down) + frob(&up))
        })
        .collect()
}

/// Validate that `matrix` respects both flags. The tolerance is relative to
/// `max(1, ‖M‖_F)`.
pub fn check_block_op(matrix: CMat, source: &Flag, target: &Flag, tol: f64) -> Result<BlockOp> {
    let residuals = compatibility_residuals(&matrix, source, target)?;
    let bound = tol * frob(&matrix).max(1.0);
    if let Some((i, &r)) = residuals.iter().enumerate().find(|(_, &r)| r > bound) {
        return Err(Error::Compatibility { level: i + 1, residual: r });
    }
    Ok(BlockOp { matrix, source: source.clone(), target: target.clone() })
}

impl BlockOp {
    pub fn new(matrix: CMat, source: &Flag, target: &Flag, tol: f64) -> Result<Self> {
        check_block_op(matrix, source, target, tol)
    }

    pub fn square(matrix: CMat, flag: &Flag, tol: f64) -> Result<Self> {
        check_block_op(matrix, flag, flag, tol)
    }

    /// Skip validation; for results of operations that preserve compatibility.
    pub(crate) fn trusted(matrix: CMat, source: &Flag, target: &Flag) -> Self {
        debug_assert_eq!(matrix.shape(), (target.ambient(), source.ambient()));
        BlockOp { matrix, source: source.clone(), target: target.clone() }
    }

    pub fn identity(flag: &Flag) -> Self {
        Self::trusted(linalg::identity(flag.ambient()), flag, flag)
    }

    pub fn zero(source: &Flag, target: &Flag) -> Self {
        Self::trusted(CMat::zeros(target.ambient(), source.ambient()), source, target)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn source(&self) -> &Flag {
        &self.source
    }

    pub fn target(&self) -> &Flag {
        &self.target
    }

    pub fn adjoint(&self) -> BlockOp {
        Self::trusted(self.matrix.adjoint(), &self.target, &self.source)
    }

    /// `self ∘ rhs`.
    pub fn compose(&self, rhs: &BlockOp) -> Result<BlockOp> {
        if rhs.target.ambient() != self.source.ambient() || rhs.target.levels() != self.source.levels() {
            return Err(Error::Dimension("composition of incompatible operators".into()));
        }
        Ok(Self::trusted(&self.matrix * &rhs.matrix, &rhs.source, &self.target))
    }

    /// The block `Q_l M P_l` in level coordinates, a `k_l^target x k_l^source`
    /// matrix.
    pub fn restrict(&self, level: usize) -> Result<CMat> {
        Ok(self.target.basis(level)?.adjoint() * &self.matrix * self.source.basis(level)?)
    }

    pub fn seminorm(&self, level: usize) -> Result<f64> {
        Ok(linalg::spectral_norm(&self.restrict(level)?))
    }
}

pub fn seminorm(op: &BlockOp, level: usize) -> Result<f64> {
    op.seminorm(level)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LocalOrder {
    Zero,
    Positive,
    SelfAdjoint,
    None,
}

/// Classify the restriction of a square operator to `H_level`.
pub fn local_order(op: &BlockOp, level: usize, tol: f64) -> Result<LocalOrder> {
    if op.source.ambient() != op.target.ambient() {
        return Err(Error::Dimension("local order needs a square operator".into()));
    }
    let a = op.restrict(level)?;
    Ok(classify(&a, tol))
}

pub(crate) fn classify(a: &CMat, tol: f64) -> LocalOrder {
    if linalg::spectral_norm(a) <= tol {
        return LocalOrder::Zero;
    }
    if linalg::spectral_norm(&(a - a.adjoint())) > tol {
        return LocalOrder::None;
    }
    if linalg::min_eig(a) >= -tol {
        LocalOrder::Positive
    } else {
        LocalOrder::SelfAdjoint
    }
}
