//! Seeded random instances.
//!
//! Every stream comes from `ChaCha8Rng::seed_from_u64(seed)` with
//! `set_stream(index)`, so sample `i` of a run draws the same numbers no
//! matter how many other samples are drawn or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, identity, ComplexMatrix, HermitianOperator, Isometry};
use crate::states::{BipartiteState, StateSet};

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard normal sample (Box-Muller).
pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| c(normal(rng), normal(rng)))
}

/// GUE-style Hermitian matrix.
pub fn hermitian<R: Rng>(rng: &mut R, d: usize) -> HermitianOperator {
    HermitianOperator::symmetrized(gaussian_matrix(rng, d, d))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with phase fix).
pub fn unitary<R: Rng>(rng: &mut R, d: usize) -> ComplexMatrix {
    let qr = gaussian_matrix(rng, d, d).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// First `k` columns of a Haar unitary.
pub fn isometry<R: Rng>(rng: &mut R, d: usize, k: usize) -> Isometry {
    Isometry::new(unitary(rng, d).columns(0, k).into_owned()).expect("columns of a unitary")
}

/// Random PSD matrix of the given rank, `G G^dagger`.
pub fn psd<R: Rng>(rng: &mut R, d: usize, rank: usize) -> HermitianOperator {
    let g = gaussian_matrix(rng, d, rank);
    HermitianOperator::symmetrized(&g * g.adjoint())
}

/// Random Hermitian operator that leaves `range(h)` invariant: independent
/// random blocks on the subspace and on its complement.
pub fn hermitian_preserving<R: Rng>(rng: &mut R, h: &Isometry) -> HermitianOperator {
    let d = h.ambient_dim();
    let q = h.matrix();
    let complement = crate::linalg::column_space(&(identity(d) - h.projector().matrix()), 1e-9);
    let inner = hermitian(rng, h.sub_dim());
    let outer = hermitian(rng, complement.sub_dim());
    let qc = complement.matrix();
    HermitianOperator::symmetrized(q * inner.matrix() * q.adjoint() + qc * outer.matrix() * qc.adjoint())
}

/// Random Hermitian operator with the given eigenvalues (repeats allowed).
pub fn hermitian_with_spectrum<R: Rng>(rng: &mut R, eigenvalues: &[f64]) -> HermitianOperator {
    let d = eigenvalues.len();
    let u = unitary(rng, d);
    let diag = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_iterator(d, eigenvalues.iter().map(|&e| c(e, 0.0))));
    HermitianOperator::symmetrized(&u * diag * u.adjoint())
}

/// Random full-rank state supported exactly on `range(q)`.
fn state_on<R: Rng>(rng: &mut R, q: &Isometry) -> HermitianOperator {
    let k = q.sub_dim();
    let inner = psd(rng, k, k);
    let m = q.matrix() * inner.matrix() * q.matrix().adjoint();
    HermitianOperator::symmetrized(m)
}

/// A full orthogonal set of product states produced by recursively splitting
/// product subspaces `H_A (x) H_B` with random local projective measurements.
/// Each leaf subspace carries one product state of full rank on it, so the
/// set is discriminable by a finite local protocol by construction.
pub fn product_refinement_set<R: Rng>(rng: &mut R, d_a: usize, d_b: usize) -> StateSet {
    let mut states = Vec::new();
    split(rng, Isometry::identity(d_a), Isometry::identity(d_b), 0, &mut states);
    StateSet::new(d_a, d_b, states).expect("refinement leaves are distinct")
}

fn split<R: Rng>(rng: &mut R, qa: Isometry, qb: Isometry, depth: usize, out: &mut Vec<BipartiteState>) {
    let (ka, kb) = (qa.sub_dim(), qb.sub_dim());
    let stop = ka * kb == 1 || (depth > 0 && rng.random::<f64>() < 0.3);
    if stop {
        let tau = state_on(rng, &qa);
        let sigma = state_on(rng, &qb);
        let label = format!("s{}", out.len());
        out.push(BipartiteState::product(label, tau, sigma).expect("random product state"));
        return;
    }
    let split_a = match (ka > 1, kb > 1) {
        (true, true) => rng.random::<bool>(),
        (a, _) => a,
    };
    let (q, k) = if split_a { (&qa, ka) } else { (&qb, kb) };
    let u = unitary(rng, k);
    // Random composition of k into at least two parts.
    let mut cuts: Vec<usize> = (1..k).filter(|_| rng.random::<bool>()).collect();
    if cuts.is_empty() {
        cuts.push(rng.random_range(1..k));
    }
    cuts.push(k);
    let mut start = 0;
    for end in cuts {
        let sub = Isometry::new(q.matrix() * u.columns(start, end - start)).expect("isometry product");
        if split_a {
            split(rng, sub, qb.clone(), depth + 1, out);
        } else {
            split(rng, qa.clone(), sub, depth + 1, out);
        }
        start = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs};
    use crate::states::validate_full_orthogonal;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = stream(1, 0);
        let u = unitary(&mut rng, 5);
        assert!(max_abs(&(u.adjoint() * &u - identity(5))) < 1e-12);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = stream(7, 3).random();
        let b: f64 = stream(7, 3).random();
        let other: f64 = stream(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn refinement_sets_are_full_orthogonal() {
        for i in 0..20 {
            let mut rng = stream(11, i);
            let set = product_refinement_set(&mut rng, 3, 2);
            let r = validate_full_orthogonal(&set);
            assert!(r.orthogonal && r.full_rank, "sample {i}: {r:?}");
            assert!(set.states.iter().all(|s| s.is_product()));
        }
    }
}
