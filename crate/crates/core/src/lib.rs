//! Local completely positive maps between flag-filtered operator algebras.
//!
//! The crate works in finite dimensions. A [`Flag`] filters a Hilbert space
//! into nested levels; a [`LocalAlgebra`] is a unital *-algebra of operators
//! respecting such a flag; a [`LocalCPMap`] is completely positive level by
//! level, with a witness that says which source level controls each target
//! level. On top of that the crate builds minimal Stinespring dilations,
//! Radon-Nikodym derivatives of dominated maps, and the analogous
//! constructions for Hilbert modules and their CP-inducing maps.

pub mod cli;
pub mod cp_maps;
pub mod error;
pub mod fixtures;
pub mod flagspace;
pub mod hilbert_module;
pub mod instance;
pub mod linalg;
pub mod local_algebra;
pub mod radon_nikodym;
pub mod report;
pub mod stinespring;

use serde::{Deserialize, Serialize};

pub use cp_maps::{dominates, random_local_cp, schur_map, verify_local_cc, verify_local_cp, LocalCPMap};
pub use error::{Error, Result};
pub use flagspace::{check_block_op, local_order, seminorm, BlockOp, Flag, LocalOrder};
pub use hilbert_module::{CPInducingMap, HilbertModule, ModuleDilation};
pub use linalg::{CMat, CVec};
pub use local_algebra::{build_algebra, LocalAlgebra};
pub use report::CertificateReport;
pub use stinespring::{dilate_minimal, StinespringRep};

/// Numerical tolerances shared by every check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Equality of operators, relative to `max(1, ‖reference‖_F)`.
    pub tau_eq: f64,
    /// Positivity, relative to the norm of the matrix being tested.
    pub tau_psd: f64,
    /// Numerical rank, relative to the largest eigenvalue or singular value.
    pub tau_rank: f64,
    /// Round trips through a dilation and back.
    pub tau_roundtrip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tau_eq: 1e-9, tau_psd: 1e-10, tau_rank: 1e-10, tau_roundtrip: 1e-7 }
    }
}

impl Tolerances {
    pub(crate) fn eq_bound(&self, scale: f64) -> f64 {
        self.tau_eq * scale.max(1.0)
    }
}
