//! Invariant subspaces: the three equivalent characterizations on random
//! instances, a separable subspace that is invariant under `a (x) b` but
//! under neither local factor, and decoupling on a product subspace.
//!
//! cargo run --example invariance

use finite_locc::linalg::{ComplexMatrix, HermitianOperator, Isometry};
use finite_locc::nondisturb::{invariance_equivalent, lemma2_decouple, separable_counterexample};
use finite_locc::random::{hermitian, isometry, stream};
use rand::Rng;

fn main() {
    let mut agree = 0;
    let mut invariant = 0;
    for i in 0..200 {
        let mut rng = stream(3, i);
        let d = rng.random_range(2..=6);
        let k = rng.random_range(1..d);
        // Half of the instances are built invariant on purpose: a block
        // operator in a random basis.
        let (m, h) = if i % 2 == 0 {
            let u = isometry(&mut rng, d, d);
            let mut block = ComplexMatrix::zeros(d, d);
            let top = hermitian(&mut rng, k);
            let bottom = hermitian(&mut rng, d - k);
            block.view_mut((0, 0), (k, k)).copy_from(top.matrix());
            block.view_mut((k, k), (d - k, d - k)).copy_from(bottom.matrix());
            let q = u.matrix();
            let m = HermitianOperator::symmetrized(q * block * q.adjoint());
            let h = Isometry::new(q.columns(0, k).into_owned()).unwrap();
            (m, h)
        } else {
            (hermitian(&mut rng, d), isometry(&mut rng, d, k))
        };
        let r = invariance_equivalent(&m, &h, 1e-8).unwrap();
        agree += r.consistent() as usize;
        invariant += r.invariant() as usize;
    }
    println!("characterizations agree on {agree}/200 instances ({invariant} invariant)");

    let (a, b, h) = separable_counterexample();
    let joint = invariance_equivalent(&a.kron(&b), &h, 1e-8).unwrap();
    let on_a = invariance_equivalent(&a.kron(&HermitianOperator::identity(3)), &h, 1e-8).unwrap();
    let on_b = invariance_equivalent(&HermitianOperator::identity(2).kron(&b), &h, 1e-8).unwrap();
    println!(
        "separable subspace: (a(x)b)-invariant {}, (a(x)I)-invariant {}, (I(x)b)-invariant {}",
        joint.invariant(),
        on_a.invariant(),
        on_b.invariant()
    );

    // For product subspaces, joint invariance does decouple.
    let mut rng = stream(4, 0);
    let ha = isometry(&mut rng, 3, 2);
    let hb = isometry(&mut rng, 2, 1);
    let pa = ha.projector();
    let pb = hb.projector();
    let a = HermitianOperator::symmetrized(pa.matrix().scale(3.0) - ComplexMatrix::identity(3, 3));
    let b = HermitianOperator::symmetrized(ComplexMatrix::identity(2, 2).scale(3.0) - pb.matrix().scale(2.5));
    let rep = lemma2_decouple(&a, &b, &ha, &hb, 1e-8).unwrap();
    println!("product subspace: {rep:?}, implication holds: {}", rep.implication_holds());
}
