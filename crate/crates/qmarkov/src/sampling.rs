//! Seeded random generators for channels, subspaces, states, and Hermitian
//! matrices. Every draw threads an explicit ChaCha generator, so a seed
//! pins the whole object.

use crate::channel::QuantumChannel;
use crate::error::Result;
use crate::numerics::{cholesky_upper, solve_upper_right, CMatrix, Subspace, ToleranceContext};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal via Box-Muller.
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    random_matrix(dim, dim, rng).hermitian_part()
}

/// Haar-ish random subspace of the given dimension.
pub fn random_subspace(ambient: usize, dim: usize, rng: &mut impl Rng) -> Subspace {
    let cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..ambient).map(|_| gaussian_complex(rng)).collect())
        .collect();
    Subspace::span_of_columns(ambient, &cols)
}

/// Random density matrix; optionally supported in a given subspace.
pub fn random_state(dim: usize, support: Option<&Subspace>, rng: &mut impl Rng) -> CMatrix {
    match support {
        None => normalize_gram(random_matrix(dim, dim, rng)),
        Some(v) => {
            let k = v.dim().max(1);
            let small = normalize_gram(random_matrix(k, k, rng));
            v.embed(&small)
        }
    }
}

fn normalize_gram(g: CMatrix) -> CMatrix {
    let p = g.adjoint().mul_mat(&g);
    let t = p.trace().re;
    p.scale_re(1.0 / t)
}

/// Random trace-preserving channel with the given Kraus count: Gaussian
/// matrices re-normalized through the Cholesky factor of their Kraus sum.
pub fn random_channel(
    dim: usize,
    n_kraus: usize,
    tol: ToleranceContext,
    rng: &mut impl Rng,
) -> Result<QuantumChannel> {
    let raw: Vec<CMatrix> = (0..n_kraus).map(|_| random_matrix(dim, dim, rng)).collect();
    normalize_kraus(raw, dim, tol)
}

/// Random channel leaving span{e_0, .., e_{d1-1}} invariant: the raw Kraus
/// operators are block upper triangular and the Cholesky normalization
/// preserves that shape, so the block stays an enclosure while the
/// complement picks up transient leakage.
pub fn random_channel_with_enclosure(
    d1: usize,
    d2: usize,
    n_kraus: usize,
    tol: ToleranceContext,
    rng: &mut impl Rng,
) -> Result<QuantumChannel> {
    let dim = d1 + d2;
    let raw: Vec<CMatrix> = (0..n_kraus)
        .map(|_| {
            CMatrix::from_fn(dim, dim, |i, j| {
                if i >= d1 && j < d1 {
                    crate::numerics::ZERO
                } else {
                    gaussian_complex(rng)
                }
            })
        })
        .collect();
    normalize_kraus(raw, dim, tol)
}

/// Tensor a channel with the identity on C^m: Kraus {Bᵢ ⊗ I_m}. Its fixed
/// points gain a full matrix factor, which exercises the non-abelian paths.
pub fn tensor_with_identity(
    ch: &QuantumChannel,
    m: usize,
    tol: ToleranceContext,
) -> Result<QuantumChannel> {
    let id = CMatrix::identity(m);
    let kraus: Vec<CMatrix> = ch.kraus().iter().map(|b| b.kron(&id)).collect();
    QuantumChannel::validate(kraus, ch.dim() * m, tol)
}

fn normalize_kraus(raw: Vec<CMatrix>, dim: usize, tol: ToleranceContext) -> Result<QuantumChannel> {
    let mut s = CMatrix::zeros(dim, dim);
    for g in &raw {
        s = s.add_mat(&g.adjoint().mul_mat(g));
    }
    let r = cholesky_upper(&s)?;
    let kraus: Vec<CMatrix> = raw.iter().map(|g| solve_upper_right(g, &r)).collect();
    QuantumChannel::validate(kraus, dim, tol)
}
