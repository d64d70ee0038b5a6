//! Local non-disturbing operator spaces for two sets: the 3x3 standard basis
//! (a rich space of diagonal operators) and a domino-derived set (identity
//! only).
//!
//! cargo run --example nondisturbing_space

use finite_locc::linalg::{eig_hermitian, ket, HermitianOperator};
use finite_locc::nondisturb::{is_nondisturbing_vec, pick_nontrivial, solve_local_space, Side};
use finite_locc::states::{lemma5_set, BipartiteState, Sign, StateSet};

fn standard_basis(d: usize) -> StateSet {
    let states = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| BipartiteState::pure_product(format!("{i}{j}"), &ket(d, i), &ket(d, j)).unwrap())
        .collect();
    StateSet::new(d, d, states).unwrap()
}

fn report(name: &str, set: &StateSet) {
    println!("{name}");
    for side in [Side::A, Side::B] {
        let space = solve_local_space(set, side);
        println!("  side {side}: dim {}", space.dim);
        let Some(a) = pick_nontrivial(&space) else {
            println!("    multiples of the identity only");
            continue;
        };
        println!("    trace-free element (real parts):");
        for i in 0..a.dim() {
            let row: Vec<String> = (0..a.dim()).map(|j| format!("{:+.4}", a.matrix()[(i, j)].re)).collect();
            println!("      [{}]", row.join(" "));
        }
        // Each eigenprojector, embedded on the full space, keeps the set
        // mutually orthogonal.
        for g in eig_hermitian(&a).unwrap().groups {
            let p = HermitianOperator::symmetrized(side.embed(g.projector.matrix(), set.d_a, set.d_b));
            let ok = is_nondisturbing_vec(&p, set, 1e-8).unwrap();
            println!("    eigenvalue {:+.4} (x{}): non-disturbing = {ok}", g.eigenvalue, g.multiplicity);
        }
    }
}

fn main() {
    report("standard basis of C^3 (x) C^3", &standard_basis(3));
    report("domino-derived set, signs ++++", &lemma5_set([Sign::Plus; 4]));
}
