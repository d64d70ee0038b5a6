//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed.

use std::time::{Duration, Instant};

use finite_locc::cli::{cmd_domino, cmd_upb, RunConfig};
use finite_locc::linalg::{HermitianOperator, Isometry};
use finite_locc::nondisturb::{
    check_thm1_conditions, invariance_equivalent, is_nondisturbing_vec, lemma2_decouple, separable_counterexample,
    solve_local_space_with, ProductCandidate, Side,
};
use finite_locc::protocol::{audit, execute, synthesize, Outcome, ProtocolNode};
use finite_locc::random::{hermitian, hermitian_preserving, isometry, product_refinement_set, stream, unitary};
use finite_locc::states::{lemma5_set, Sign, StateSet};
use finite_locc::upb::{
    case_feasibility, closed_form_case, closed_form_for_cycle, generate, reduce_phases, swap_basis, theorem4_verify,
    CaseNumber, UpbParams, Verdict,
};
use rand::Rng;

type Check = Result<String, String>;

const UPB_SEED: u64 = 7;
const UPB_SAMPLES: u64 = 100;
const SYNTH_SEED: u64 = 2024;
const SYNTH_SAMPLES: u64 = 200;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn domino_impossibility() -> Check {
    let start = Instant::now();
    for signs in Sign::all_choices() {
        let set = lemma5_set(signs);
        for side in [Side::A, Side::B] {
            let dim = solve_local_space_with(&set, side, 1e-8).dim;
            ensure(dim == 1, || format!("{signs:?} side {side}: dim {dim}"))?;
        }
        let (p, cert) = synthesize(&set).map_err(|e| e.to_string())?;
        let root_fail = matches!(p.root, ProtocolNode::Fail { .. })
            && cert.outcome == Outcome::Failure
            && cert.failure_node_stateset.as_ref().map(StateSet::len) == Some(5);
        ensure(root_fail, || format!("{signs:?}: no root-level failure certificate"))?;
    }
    within(start, Duration::from_secs(5))?;
    Ok("16/16 sign choices scalar-only on both sides, failure at root".into())
}

/// Criterion 2's corpus.
fn refinement_corpus() -> Vec<StateSet> {
    (0..SYNTH_SAMPLES)
        .map(|i| {
            let mut rng = stream(SYNTH_SEED, i);
            let d_a = rng.random_range(2..=3);
            let d_b = rng.random_range(2..=3);
            product_refinement_set(&mut rng, d_a, d_b)
        })
        .collect()
}

fn constructive_soundness() -> Check {
    let start = Instant::now();
    let mut members = 0;
    let mut worst: f64 = 1.0;
    for (i, set) in refinement_corpus().iter().enumerate() {
        let (p, cert) = synthesize(set).map_err(|e| format!("set {i}: {e}"))?;
        ensure(cert.outcome == Outcome::Success, || format!("set {i}: synthesis failed"))?;
        for s in &set.states {
            let prob = execute(&p, s).map_err(|e| e.to_string())?.probability(&s.label);
            worst = worst.min(prob);
            ensure(prob >= 1.0 - 1e-8, || format!("set {i}, {}: P = {prob}", s.label))?;
            members += 1;
        }
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{SYNTH_SAMPLES} sets, {members} members, worst P(correct) = {worst:.15}"))
}

/// Walk a synthesized tree alongside the conditioned sets and check each
/// projector with the support-vector test.
fn nondisturbance_along_trees() -> Check {
    let mut nodes = 0;
    let mut passed = 0;
    for (i, set) in refinement_corpus().iter().enumerate() {
        let (p, _) = synthesize(set).map_err(|e| format!("set {i}: {e}"))?;
        let a = audit(&p, set, 1e-8).map_err(|e| e.to_string())?;
        nodes += a.measure_nodes;
        passed += a.nondisturbing_nodes;
        ensure(a.all_pass(), || format!("set {i}: {a:?}"))?;
    }
    // Independent spot check on the root of every tree with the public
    // predicate directly.
    for (i, set) in refinement_corpus().iter().enumerate() {
        let (p, _) = synthesize(set).map_err(|e| e.to_string())?;
        if let ProtocolNode::Measure(m) = &p.root {
            for proj in &m.projectors {
                let full = HermitianOperator::symmetrized(m.party.embed(proj.matrix(), set.d_a, set.d_b));
                let ok = is_nondisturbing_vec(&full, set, 1e-8).map_err(|e| e.to_string())?;
                ensure(ok, || format!("set {i}: root projector disturbs"))?;
            }
        }
    }
    ensure(nodes > 0 && nodes == passed, || format!("{passed}/{nodes} nodes"))?;
    Ok(format!("{passed}/{nodes} measurement nodes non-disturbing (100%)"))
}

fn invariance_battery() -> Check {
    let mut invariant = 0;
    for i in 0..1000u64 {
        let mut rng = stream(41, i);
        let d = rng.random_range(2..=9);
        let k = rng.random_range(1..d);
        let (m, h, expect) = match i % 4 {
            0 => (hermitian(&mut rng, d), isometry(&mut rng, d, k), None),
            1 => {
                let h = isometry(&mut rng, d, k);
                (hermitian_preserving(&mut rng, &h), h, Some(true))
            }
            _ => {
                // Degenerate spectrum; H inside the first eigenspace, then
                // tilted out of it for every other instance.
                let mult = rng.random_range(1..d).max(k);
                let mult = mult.min(d - 1).max(1);
                let kk = k.min(mult);
                let u = unitary(&mut rng, d);
                let eig: Vec<f64> = (0..d).map(|j| if j < mult { 1.5 } else { -0.5 - (j % 2) as f64 }).collect();
                let diag = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    d,
                    eig.iter().map(|&e| finite_locc::linalg::c(e, 0.0)),
                ));
                let m = HermitianOperator::symmetrized(&u * diag * u.adjoint());
                let inner = isometry(&mut rng, mult, kk);
                let mut basis = u.columns(0, mult) * inner.matrix();
                let tilt = i % 4 == 3;
                if tilt {
                    let col = u.column(d - 1).into_owned();
                    let mut c0 = basis.column_mut(0);
                    c0 += col.scale(1e-3);
                }
                let h = finite_locc::linalg::column_space(&basis, 1e-12);
                (m, h, Some(!tilt))
            }
        };
        let r = invariance_equivalent(&m, &h, 1e-8).map_err(|e| e.to_string())?;
        ensure(r.consistent(), || format!("instance {i} (d={d}): {r:?}"))?;
        if let Some(e) = expect {
            ensure(r.invariant() == e, || format!("instance {i}: expected invariant = {e}, {r:?}"))?;
        }
        invariant += r.invariant() as usize;
    }
    Ok(format!("1000/1000 instances agree ({invariant} invariant)"))
}

fn decoupling_and_boundary() -> Check {
    for i in 0..300u64 {
        let mut rng = stream(52, i);
        let (d_a, d_b) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let (k_a, k_b) = (rng.random_range(1..d_a), rng.random_range(1..d_b));
        let ha = isometry(&mut rng, d_a, k_a);
        let hb = isometry(&mut rng, d_b, k_b);
        let (a, b) = if i % 3 == 2 {
            (hermitian(&mut rng, d_a), hermitian(&mut rng, d_b))
        } else {
            (hermitian_preserving(&mut rng, &ha), hermitian_preserving(&mut rng, &hb))
        };
        let r = lemma2_decouple(&a, &b, &ha, &hb, 1e-8).map_err(|e| e.to_string())?;
        ensure(r.implication_holds(), || format!("instance {i}: {r:?}"))?;
        if i % 3 != 2 {
            ensure(r.joint_inv && r.a_inv && r.b_inv, || format!("instance {i}: {r:?}"))?;
        }
    }
    let (a, b, h): (HermitianOperator, HermitianOperator, Isometry) = separable_counterexample();
    let joint = invariance_equivalent(&a.kron(&b), &h, 1e-8).map_err(|e| e.to_string())?;
    let on_a = invariance_equivalent(&a.kron(&HermitianOperator::identity(3)), &h, 1e-8).map_err(|e| e.to_string())?;
    let on_b = invariance_equivalent(&HermitianOperator::identity(2).kron(&b), &h, 1e-8).map_err(|e| e.to_string())?;
    ensure(joint.invariant() && !on_a.invariant() && !on_b.invariant(), || {
        format!("counterexample: joint {joint:?}, a {on_a:?}, b {on_b:?}")
    })?;
    Ok("300 product instances decouple; separable P: joint true, (a(x)I) false, (I(x)b) false".into())
}

fn upb_corpus() -> Vec<UpbParams> {
    (0..UPB_SAMPLES).map(|i| UpbParams::random(&mut stream(UPB_SEED, i))).collect()
}

fn upb_certification() -> Check {
    let start = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for (i, p) in upb_corpus().iter().enumerate() {
        let rep = theorem4_verify(p, 1e-8).map_err(|e| format!("sample {i}: {e}"))?;
        ensure(rep.certified, || format!("sample {i} not certified"))?;
        for row in &rep.cycles {
            if row.cycle_id == 1 {
                ensure(row.verdict == Verdict::ScalarOnly && row.linear_dim == 1, || {
                    format!("sample {i}: O1 {:?} dim {}", row.verdict, row.linear_dim)
                })?;
            } else {
                let m = row.margin.unwrap_or(f64::NEG_INFINITY);
                ensure(row.verdict == Verdict::Infeasible && m <= 1e-7, || {
                    format!("sample {i}: O{} {:?} margin {m}", row.cycle_id, row.verdict)
                })?;
                worst = worst.max(m);
            }
        }
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("certified {UPB_SAMPLES}/{UPB_SAMPLES}, largest infeasible margin {worst:.3e}"))
}

fn closed_form_agreement() -> Check {
    let mut comparisons = 0;
    for (i, p) in upb_corpus().iter().enumerate() {
        let u = reduce_phases(&generate(p).map_err(|e| e.to_string())?);
        for id in 1..=12 {
            let num = case_feasibility(&u, id, 1e-8).map_err(|e| e.to_string())?;
            let cf = closed_form_for_cycle(&u, id).map_err(|e| e.to_string())?;
            ensure(num.verdict == cf.verdict, || {
                format!("sample {i}, O{id}: numeric {:?} vs closed form {:?}", num.verdict, cf.verdict)
            })?;
            ensure(cf.algebra_residual < 1e-9, || format!("sample {i}, O{id}: residual {}", cf.algebra_residual))?;
            comparisons += 1;
        }
        for case in CaseNumber::ALL {
            let cf = closed_form_case(&u, case).map_err(|e| e.to_string())?;
            let num = case_feasibility(&u, case.cycle_id(), 1e-8).map_err(|e| e.to_string())?;
            for b in &num.linear_space {
                let r = cf.family_residual(b);
                ensure(r < 1e-8, || format!("sample {i}, case {case:?}: numeric space leaves family by {r}"))?;
            }
        }
        let swapped = generate(&swap_basis(&u.params).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for j in [2, 4, 8, 10] {
            let here = case_feasibility(&u, j, 1e-8).map_err(|e| e.to_string())?.verdict;
            let there = case_feasibility(&swapped, j + 1, 1e-8).map_err(|e| e.to_string())?.verdict;
            ensure(here == there, || format!("sample {i}: O{j} {here:?} vs swapped O{} {there:?}", j + 1))?;
        }
    }
    Ok(format!("{comparisons} cycle comparisons agree; swap identities hold for j = 2, 4, 8, 10"))
}

fn overlap_bound_arithmetic() -> Check {
    let q = std::f64::consts::FRAC_PI_4;
    let set = generate(&UpbParams::new(q, q, 0.0, q, q, 0.0)).map_err(|e| e.to_string())?.state_set();
    let cand = |chi| {
        ProductCandidate::new(HermitianOperator::identity(3).scale(0.2), HermitianOperator::identity(3), chi)
            .map_err(|e| e.to_string())
    };
    let r = check_thm1_conditions(&cand(0.22)?, &set, 1e-9).map_err(|e| e.to_string())?;
    ensure(r.n == 5 && r.min_bound == 0.12, || format!("min bound {}", r.min_bound))?;
    ensure(r.chi_in_window && !r.scalar_compatible && !r.all_pass(), || format!("{r:?}"))?;
    let r = check_thm1_conditions(&cand(0.2)?, &set, 1e-9).map_err(|e| e.to_string())?;
    ensure(r.scalar_compatible && !r.chi_in_window && r.all_pass(), || format!("{r:?}"))?;
    Ok("chi = 0.22 gives min bound 0.12 and rules out E ∝ I; chi = 1/5 is scalar-compatible".into())
}

fn determinism() -> Check {
    let cfg = RunConfig::new(None, UPB_SEED, 1000).map_err(|e| e.to_string())?;
    let d1 = cmd_domino(&cfg).map_err(|e| e.to_string())?.report.to_json();
    let d2 = cmd_domino(&cfg).map_err(|e| e.to_string())?.report.to_json();
    ensure(d1 == d2, || "domino reports differ".into())?;
    let u1 = cmd_upb(None, Some(UPB_SAMPLES as usize), &cfg).map_err(|e| e.to_string())?.report.to_json();
    let u2 = cmd_upb(None, Some(UPB_SAMPLES as usize), &cfg).map_err(|e| e.to_string())?.report.to_json();
    ensure(u1 == u2, || "upb reports differ".into())?;
    Ok(format!("domino ({} bytes) and upb ({} bytes) reports byte-identical", d1.len(), u1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("domino impossibility", domino_impossibility),
        ("constructive soundness", constructive_soundness),
        ("non-disturbance along synthesized trees", nondisturbance_along_trees),
        ("invariance characterizations agree", invariance_battery),
        ("decoupling and its boundary", decoupling_and_boundary),
        ("UPB certification", upb_certification),
        ("closed-form agreement", closed_form_agreement),
        ("overlap-bound arithmetic", overlap_bound_arithmetic),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let ms = start.elapsed().as_millis();
        match res {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail} ({ms} ms)", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why} ({ms} ms)", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
