//! Build a random full orthogonal product set by nested local refinements,
//! synthesize a finite protocol for it, and run the protocol on every
//! member.
//!
//! cargo run --example synthesize_protocol [seed]

use finite_locc::protocol::{audit, execute, synthesize, Outcome, ProtocolNode};
use finite_locc::random::{product_refinement_set, stream};

fn show(node: &ProtocolNode, indent: usize) {
    let pad = " ".repeat(indent);
    match node {
        ProtocolNode::Measure(m) => {
            println!("{pad}measure on {} ({} outcomes)", m.party, m.projectors.len());
            for (q, child) in m.restrictions.iter().zip(&m.children) {
                println!("{pad}  outcome of rank {}:", q.sub_dim());
                show(child, indent + 4);
            }
        }
        ProtocolNode::Verdict { verdict } => println!("{pad}-> {verdict}"),
        ProtocolNode::Fail { fail } => println!("{pad}stuck on {:?}", fail.labels),
        ProtocolNode::Unreachable { .. } => println!("{pad}(unreachable)"),
    }
}

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let set = product_refinement_set(&mut stream(seed, 0), 3, 3);
    println!("{} random product states on C^3 (x) C^3 (seed {seed})", set.len());

    let (protocol, cert) = synthesize(&set).expect("orthogonal input");
    assert_eq!(cert.outcome, Outcome::Success);
    println!("depth {}, {} leaves", protocol.depth, protocol.leaf_count());
    show(&protocol.root, 2);

    for s in &set.states {
        let d = execute(&protocol, s).unwrap();
        println!("P({0} | {0}) = {1:.12}", s.label, d.probability(&s.label));
    }
    let a = audit(&protocol, &set, 1e-8).unwrap();
    println!(
        "audit: {} measurement nodes, all non-disturbing: {}, all progressing: {}",
        a.measure_nodes,
        a.nondisturbing_nodes == a.measure_nodes,
        a.progressing_nodes == a.measure_nodes
    );
}
