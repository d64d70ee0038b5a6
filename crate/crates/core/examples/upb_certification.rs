//! Certify that a two-qutrit UPB admits no non-trivial non-disturbing
//! product operator: all twelve orthogonality cycles on Alice's side, the
//! complementary cycle on Bob's side, and the closed-form case analysis.
//!
//! cargo run --example upb_certification [seed]

use finite_locc::random::stream;
use finite_locc::upb::{
    check_unextendible, closed_form_for_cycle, generate, reduce_phases, theorem4_verify, UpbParams,
};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let params = UpbParams::random(&mut stream(seed, 0));
    println!("{}", serde_json::to_string(&params).unwrap());

    let u = generate(&params).unwrap();
    println!("Gram defect {:.1e}, unextendible {}", u.gram_defect(), check_unextendible(&u));

    let report = theorem4_verify(&params, 1e-8).unwrap();
    let reduced = reduce_phases(&u);
    println!("cycle  verdict       dim  margin        closed form");
    for row in &report.cycles {
        let cf = closed_form_for_cycle(&reduced, row.cycle_id).unwrap();
        println!(
            "O{:<5} {:<13} {:<4} {:<13} {:?} ({:?})",
            row.cycle_id,
            format!("{:?}", row.verdict),
            row.linear_dim,
            row.margin.map_or("-".into(), |m| format!("{m:+.4e}")),
            cf.verdict,
            cf.case
        );
    }
    for b in &report.side_b {
        println!(
            "Bob, complement of O{}: O{} on beta labels (O{} in alpha labels), {:?}",
            b.paired_with, b.beta_cycle, b.as_alpha_cycle, b.verdict
        );
    }
    println!("certified: {}", report.certified);
}
