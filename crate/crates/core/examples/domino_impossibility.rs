//! Every domino-derived set (four domino states with chosen signs plus the
//! uniform mixture of the remaining five) admits only scalar local
//! non-disturbing operators, so synthesis gets stuck at the root.
//!
//! cargo run --example domino_impossibility

use finite_locc::nondisturb::{solve_local_space, Side};
use finite_locc::protocol::{synthesize, Outcome};
use finite_locc::states::{lemma5_set, Sign};

fn main() {
    let mut scalar = 0;
    for signs in Sign::all_choices() {
        let set = lemma5_set(signs);
        let a = solve_local_space(&set, Side::A).dim;
        let b = solve_local_space(&set, Side::B).dim;
        let (_, cert) = synthesize(&set).unwrap();
        let label: String = signs.iter().map(|s| s.to_string()).collect();
        println!(
            "{label}: dim A = {a}, dim B = {b}, synthesis {}",
            if cert.outcome == Outcome::Failure { "fails" } else { "succeeds" }
        );
        if a == 1 && b == 1 {
            scalar += 1;
        }
    }
    println!("{scalar}/16 sign choices are scalar-only on both sides");
}
