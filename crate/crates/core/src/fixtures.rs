//! Seeded generators for random instances.
//!
//! Used by the `gen` command, the examples and the test suites. Every
//! generator is a pure function of its seed.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cp_maps::{kraus_map, random_kraus, LocalCPMap};
use crate::error::Result;
use crate::flagspace::Flag;
use crate::hilbert_module::{CPInducingMap, HilbertModule, ModuleDilation};
use crate::linalg::{self, CMat, CVec};
use crate::local_algebra::LocalAlgebra;
use crate::radon_nikodym::{commutant_basis, sample_contraction_in_commutant};
use crate::Tolerances;

/// Size limits for random instances.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_ambient: usize,
    pub max_levels: usize,
    pub max_dim: usize,
    pub max_kraus: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_ambient: 6, max_levels: 3, max_dim: 8, max_kraus: 2 }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly increasing level dimensions ending at `ambient`.
pub fn random_dims<R: Rng + ?Sized>(rng: &mut R, ambient: usize, levels: usize) -> Vec<usize> {
    let levels = levels.clamp(1, ambient);
    let mut cuts: Vec<usize> = sample(rng, ambient - 1, levels - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(ambient);
    cuts
}

pub fn random_flag<R: Rng + ?Sized>(rng: &mut R, ambient: usize, levels: usize, rotate: bool) -> Flag {
    let dims = random_dims(rng, ambient, levels);
    let frame = rotate.then(|| linalg::random_unitary(rng, ambient));
    Flag::new(ambient, dims, frame).expect("generated flag is valid")
}

/// Unitary that maps each level and each complement onto itself.
pub fn random_flag_unitary<R: Rng + ?Sized>(rng: &mut R, flag: &Flag) -> CMat {
    let n = flag.ambient();
    let mut blk = CMat::zeros(n, n);
    let mut start = 0;
    for &k in flag.dims() {
        if k > start {
            let u = linalg::random_unitary(rng, k - start);
            blk.view_mut((start, start), (k - start, k - start)).copy_from(&u);
        }
        start = k;
    }
    let f = flag.frame();
    &f * blk * f.adjoint()
}

/// The flag `H_l ⊗ C^m` on `H ⊗ C^m`, with coordinates `c * m + j`.
pub fn tensor_flag(flag: &Flag, m: usize) -> Flag {
    let dims = flag.dims().iter().map(|k| k * m).collect();
    let frame = flag.explicit_frame().map(|f| linalg::kron(f, &linalg::identity(m)));
    Flag::nested(flag.ambient() * m, dims, frame).expect("tensor flag is valid")
}

struct Summand {
    size: usize,
    block: usize,
    offsets: Vec<usize>,
}

/// A random *-subalgebra of the block-diagonal operators: a direct sum of
/// small matrix algebras, some repeated across blocks, conjugated by random
/// flag-compatible unitaries. Dimension at most `max_dim` (falls back to the
/// scalars on each block if the draws keep exceeding it).
pub fn random_algebra<R: Rng + ?Sized>(rng: &mut R, domain: &Flag, max_dim: usize, tol: &Tolerances) -> Result<LocalAlgebra> {
    let n = domain.ambient();
    let mut summands: Vec<Summand> = Vec::new();
    for attempt in 0..20 {
        summands.clear();
        let mut start = 0;
        for (block, &k) in domain.dims().iter().enumerate() {
            let mut off = start;
            while off < k {
                let remaining = k - off;
                let size = if attempt < 19 && remaining >= 2 && rng.gen_bool(0.5) { 2 } else { 1 };
                let tie = summands.iter().position(|s| s.size == size && (s.block != block || rng.gen_bool(0.3)));
                match tie {
                    Some(i) if rng.gen_bool(if attempt < 19 { 0.35 } else { 1.0 }) => summands[i].offsets.push(off),
                    _ => summands.push(Summand { size, block, offsets: vec![off] }),
                }
                off += size;
            }
            start = k;
        }
        let dim: usize = summands.iter().map(|s| s.size * s.size).sum();
        if dim <= max_dim {
            break;
        }
    }
    let mut basis = Vec::new();
    for s in &summands {
        for p in 0..s.size {
            for q in 0..s.size {
                let mut e = CMat::zeros(n, n);
                for &off in &s.offsets {
                    e[(off + p, off + q)] = linalg::ONE;
                }
                basis.push(e);
            }
        }
    }
    let frame = domain.frame();
    let standard = Flag::nested(n, domain.dims().to_vec(), None)?;
    let u = &frame * random_flag_unitary(rng, &standard);
    let basis = basis.into_iter().map(|e| &u * e * u.adjoint()).collect();
    LocalAlgebra::from_basis(domain, basis, tol)
}

pub struct CpFixture {
    pub algebra: Arc<LocalAlgebra>,
    pub map: LocalCPMap,
    pub kraus: Vec<CMat>,
}

/// Random algebra, random target flag with the same number of levels, and a
/// Kraus map scaled so that `‖φ(1)‖ ∈ [0.5, 1]`.
pub fn random_cp_fixture(seed: u64, limits: Limits, tol: &Tolerances) -> Result<CpFixture> {
    let mut rng = rng(seed);
    let levels = rng.gen_range(1..=limits.max_levels);
    let na = rng.gen_range(levels..=limits.max_ambient);
    let rotate = rng.gen_bool(0.5);
    let domain = random_flag(&mut rng, na, levels, rotate);
    let algebra = Arc::new(random_algebra(&mut rng, &domain, limits.max_dim, tol)?);
    let nt = rng.gen_range(levels..=limits.max_ambient);
    let rotate = rng.gen_bool(0.5);
    let target = random_flag(&mut rng, nt, levels, rotate);
    let count = rng.gen_range(1..=limits.max_kraus);
    let scale = rng.gen_range(0.5..=1.0f64).sqrt();
    let kraus: Vec<CMat> = random_kraus(&mut rng, &domain, &target, count).into_iter().map(|v| v * linalg::real(scale)).collect();
    let map = kraus_map(algebra.clone(), &target, &kraus);
    Ok(CpFixture { algebra, map, kraus })
}

/// Unit-diagonal positive semidefinite Schur symbol.
pub fn schur_symbol<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let x = linalg::random_matrix(rng, n, n);
    let g = &x * x.adjoint();
    let d = CMat::from_diagonal(&CVec::from_iterator(n, g.diagonal().iter().map(|z| linalg::real(1.0 / z.re.sqrt()))));
    linalg::hermitian_part(&(&d * g * &d))
}

pub struct ModuleFixture {
    pub algebra: Arc<LocalAlgebra>,
    pub module: Arc<HilbertModule>,
    pub phi: LocalCPMap,
    pub inducing: CPInducingMap,
}

/// Split an operator `H → H ⊗ C^p` into its `p` components.
fn components(x: &CMat, p: usize) -> Vec<CMat> {
    let n = x.nrows() / p;
    (0..p).map(|i| CMat::from_fn(n, x.ncols(), |r, c| x[(r * p + i, c)])).collect()
}

fn place(parts: &[CMat]) -> CMat {
    let p = parts.len();
    let (n, cols) = parts[0].shape();
    CMat::from_fn(n * p, cols, |r, c| parts[r % p][(r / p, c)])
}

/// A submodule of the column module `A^p` generated by one or two random
/// columns, with the inducing map `Φ([b_i]) = Y [(b_i ⊗ I_m) V]` built from a
/// Kraus decomposition `φ(a) = V* (a ⊗ I_m) V` and a random flag-compatible
/// unitary `Y`.
pub fn random_module_fixture(seed: u64, tol: &Tolerances) -> Result<ModuleFixture> {
    let mut rng = rng(seed);
    let levels = rng.gen_range(1..=2);
    let na = rng.gen_range(levels.max(2)..=4);
    let rotate = rng.gen_bool(0.5);
    let domain = random_flag(&mut rng, na, levels, rotate);
    let algebra = Arc::new(random_algebra(&mut rng, &domain, 8, tol)?);
    let nt = rng.gen_range(levels..=3);
    let target = random_flag(&mut rng, nt, levels, false);
    let m = rng.gen_range(1..=2);
    let kraus = random_kraus(&mut rng, &domain, &target, m);
    let phi = kraus_map(algebra.clone(), &target, &kraus);

    let p = rng.gen_range(1..=2);
    let carrier = tensor_flag(&domain, p);
    let d = algebra.dim();
    let gens = rng.gen_range(1..=2);
    let mut spanning = Vec::new();
    for _ in 0..gens {
        let column: Vec<CMat> = (0..p)
            .map(|_| {
                let coords = CVec::from_iterator(d, (0..d).map(|_| linalg::gaussian(&mut rng)));
                algebra.element(&coords)
            })
            .collect();
        for j in 0..d {
            let parts: Vec<CMat> = column.iter().map(|u| u * algebra.basis_element(j)).collect();
            spanning.push(linalg::vectorize(&place(&parts)));
        }
    }
    let rows = na * p * na;
    let stacked = CMat::from_fn(rows, spanning.len(), |r, c| spanning[c][r]);
    let span = linalg::range_basis_rel(&stacked, 1e-8);
    let basis: Vec<CMat> = span.column_iter().map(|c| linalg::unvectorize(&c.into_owned(), na * p, na)).collect();
    let module = Arc::new(HilbertModule::new(algebra.clone(), &carrier, basis, tol)?);

    let v = place(&kraus);
    let k_flag = tensor_flag(&tensor_flag(&domain, m), p);
    let y = random_flag_unitary(&mut rng, &k_flag);
    let eye_m = linalg::identity(m);
    let images = (0..module.dim())
        .map(|i| {
            let parts: Vec<CMat> = components(module.basis_element(i), p).iter().map(|b| linalg::kron(b, &eye_m) * &v).collect();
            &y * place(&parts)
        })
        .collect();
    let inducing = CPInducingMap::new(module.clone(), phi.clone(), &k_flag, images, tol)?;
    Ok(ModuleFixture { algebra, module, phi, inducing })
}

/// A positive contraction `T` in the commutant of `π_φ` and the induced `S`
/// with `S ρ(x) = ρ(x) T`.
pub fn commutant_pair(d: &ModuleDilation, seed: u64, tol: &Tolerances) -> Result<(CMat, CMat)> {
    let basis = commutant_basis(d.stinespring(), tol);
    let t = sample_contraction_in_commutant(&basis, seed)?;
    let order: Vec<usize> = (0..d.rho_ops().len()).collect();
    let s = d.induced_module_operator(&t, &order, tol)?;
    Ok((t, s))
}

/// Commutant contractions `T <= S`: `T = (1-δ) T'` and `S = T + δ Z` for
/// sampled `T'`, `Z` and a seeded `δ ∈ [0.1, 0.5]`.
pub fn ordered_commutant_pair(basis: &[CMat], seed: u64) -> Result<(CMat, CMat)> {
    let delta = rng(seed).gen_range(0.1..=0.5);
    let t = sample_contraction_in_commutant(basis, seed)? * linalg::real(1.0 - delta);
    let z = sample_contraction_in_commutant(basis, seed.wrapping_add(0x9e37_79b9))?;
    let s = &t + z * linalg::real(delta);
    Ok((t, s))
}
