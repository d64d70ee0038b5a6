//! The overlap bookkeeping for a product candidate on a five-state set:
//! with chi = 0.22 the smallest overlap is bounded below by 1 - 4 chi = 0.12,
//! and only chi = 1/5 is compatible with a multiple of the identity.
//!
//! cargo run --example overlap_bounds

use finite_locc::linalg::HermitianOperator;
use finite_locc::nondisturb::{check_thm1_conditions, ProductCandidate};
use finite_locc::upb::{generate, UpbParams};

fn main() {
    let q = std::f64::consts::FRAC_PI_4;
    let set = generate(&UpbParams::new(q, q, 0.0, q, q, 0.0)).unwrap().state_set();
    let e = || HermitianOperator::identity(3).scale(1.0 / 5.0);
    for chi in [0.22, 0.2] {
        let cand = ProductCandidate::new(e(), HermitianOperator::identity(3), chi).unwrap();
        let r = check_thm1_conditions(&cand, &set, 1e-9).unwrap();
        println!("chi = {chi}: min bound {}, window {}, scalar compatible {}", r.min_bound, r.chi_in_window, r.scalar_compatible);
        for cond in &r.conditions {
            println!("  {:<22} pass {:<5} residual {:.2e}", cond.condition, cond.pass, cond.residual);
        }
        println!("  kernel condition: {}", r.kernel_condition);
    }
}
