//! Synthesis and execution of finite local discrimination protocols.
//!
//! At every node the conditioned state set is searched for a Hermitian `a`
//! (Alice first, then Bob) whose local embedding is non-disturbing. If one
//! exists that is not a multiple of the identity, its eigenprojectors form a
//! non-trivial local projective measurement that keeps all conditioned
//! states mutually orthogonal. Each outcome restricts the measured party to
//! the eigenspace, which strictly lowers `d_A + d_B`, and the recursion
//! continues on the restricted set. When neither party has such an operator
//! the node becomes a failure certificate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eig_hermitian, identity, kron, ComplexMatrix, HermitianOperator, Isometry};
use crate::nondisturb::{self, pick_nontrivial, solve_local_space, Side};
use crate::states::{validate_full_orthogonal, BipartiteState, StateSet};
use crate::tol;

/// Where synthesis got stuck: both local non-disturbing spaces were scalar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureInfo {
    pub labels: Vec<String>,
    /// Dimensions of the local non-disturbing spaces on (A, B).
    pub space_dims: (usize, usize),
    /// Local dimensions of the stuck node.
    pub local_dims: (usize, usize),
}

/// A local projective measurement with one subtree per outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureNode {
    pub party: Side,
    pub projectors: Vec<HermitianOperator>,
    /// Orthonormal basis of each projector's range; children live in these
    /// coordinates.
    pub restrictions: Vec<Isometry>,
    pub children: Vec<ProtocolNode>,
    /// Labels eliminated by each outcome (zero weight on that branch).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eliminated: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProtocolNode {
    Measure(MeasureNode),
    Verdict { verdict: String },
    Fail { fail: FailureInfo },
    /// Outcome that no member of the set can produce.
    Unreachable { unreachable: bool },
}

impl ProtocolNode {
    fn depth(&self) -> usize {
        match self {
            ProtocolNode::Measure(m) => 1 + m.children.iter().map(|c| c.depth()).max().unwrap_or(0),
            _ => 0,
        }
    }

    fn leaf_count(&self) -> usize {
        match self {
            ProtocolNode::Measure(m) => m.children.iter().map(|c| c.leaf_count()).sum(),
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
    pub depth: usize,
    pub root: ProtocolNode,
}

impl Protocol {
    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: Protocol = serde_json::from_str(s)?;
        if p.root.depth() != p.depth {
            return Err(Error::Parse(format!(
                "declared depth {} does not match tree depth {}",
                p.depth,
                p.root.depth()
            )));
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
}

/// Whether the input met the hypotheses under which synthesis is complete:
/// full rank and at most one member without a product annotation.
#[derive(Clone, Debug, Serialize)]
pub struct Hypothesis {
    pub full_rank: bool,
    pub non_product_states: usize,
    pub within: bool,
}

#[derive(Clone, Debug)]
pub struct SynthesisCertificate {
    pub outcome: Outcome,
    /// The conditioned set (normalized) at the first stuck node.
    pub failure_node_stateset: Option<StateSet>,
    pub space_dims: Option<(usize, usize)>,
    pub hypothesis: Hypothesis,
}

/// Unnormalized conditioned state.
#[derive(Clone, Debug)]
struct Conditioned {
    label: String,
    op: ComplexMatrix,
}

fn normalized_set(cond: &[Conditioned], d_a: usize, d_b: usize) -> Result<StateSet> {
    let states = cond
        .iter()
        .map(|s| {
            let t = linalg::trace(&s.op).re;
            BipartiteState::new(
                s.label.clone(),
                d_a,
                d_b,
                HermitianOperator::symmetrized(s.op.unscale(t)),
                None,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    StateSet::new(d_a, d_b, states)
}

/// `Q (x) I` or `I (x) Q` for the measured party.
fn embed_isometry(side: Side, q: &ComplexMatrix, d_a: usize, d_b: usize) -> ComplexMatrix {
    match side {
        Side::A => kron(q, &identity(d_b)),
        Side::B => kron(&identity(d_a), q),
        Side::Joint => q.clone(),
    }
}

fn restricted_dims(side: Side, r: usize, d_a: usize, d_b: usize) -> (usize, usize) {
    match side {
        Side::A => (r, d_b),
        _ => (d_a, r),
    }
}

/// Restrict every conditioned state to one outcome; states whose weight
/// drops to at most `ELIMINATION` times their previous weight are removed.
fn restrict(cond: &[Conditioned], r: &ComplexMatrix) -> (Vec<Conditioned>, Vec<String>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for s in cond {
        let before = linalg::trace(&s.op).re;
        let op = r.adjoint() * &s.op * r;
        let after = linalg::trace(&op).re;
        if after <= tol::ELIMINATION * before {
            dropped.push(s.label.clone());
        } else {
            kept.push(Conditioned {
                label: s.label.clone(),
                op: HermitianOperator::symmetrized(op).into_matrix(),
            });
        }
    }
    (kept, dropped)
}

struct Synth {
    first_failure: Option<(StateSet, (usize, usize))>,
}

impl Synth {
    fn node(&mut self, cond: Vec<Conditioned>, d_a: usize, d_b: usize) -> Result<ProtocolNode> {
        match cond.len() {
            0 => return Ok(ProtocolNode::Unreachable { unreachable: true }),
            1 => {
                return Ok(ProtocolNode::Verdict {
                    verdict: cond[0].label.clone(),
                })
            }
            _ => {}
        }
        let set = normalized_set(&cond, d_a, d_b)?;
        let mut dims = (0, 0);
        for side in [Side::A, Side::B] {
            let space = solve_local_space(&set, side);
            match side {
                Side::A => dims.0 = space.dim,
                _ => dims.1 = space.dim,
            }
            if let Some(a) = pick_nontrivial(&space) {
                return self.measure(&cond, side, &a, d_a, d_b);
            }
        }
        let labels = cond.iter().map(|s| s.label.clone()).collect();
        if self.first_failure.is_none() {
            self.first_failure = Some((set, dims));
        }
        Ok(ProtocolNode::Fail {
            fail: FailureInfo {
                labels,
                space_dims: dims,
                local_dims: (d_a, d_b),
            },
        })
    }

    fn measure(
        &mut self,
        cond: &[Conditioned],
        side: Side,
        a: &HermitianOperator,
        d_a: usize,
        d_b: usize,
    ) -> Result<ProtocolNode> {
        let spectrum = eig_hermitian(a)?;
        if spectrum.groups.len() < 2 {
            return Err(Error::Numerical(
                "non-scalar operator collapsed to a single eigenvalue group".into(),
            ));
        }
        let mut node = MeasureNode {
            party: side,
            projectors: Vec::new(),
            restrictions: Vec::new(),
            children: Vec::new(),
            eliminated: Vec::new(),
        };
        for group in spectrum.groups {
            let q = group.basis.matrix();
            let r = embed_isometry(side, q, d_a, d_b);
            let (kept, dropped) = restrict(cond, &r);
            let (ca, cb) = restricted_dims(side, group.multiplicity, d_a, d_b);
            node.children.push(self.node(kept, ca, cb)?);
            node.projectors.push(group.projector);
            node.restrictions.push(group.basis);
            node.eliminated.push(dropped);
        }
        if node.eliminated.iter().all(|e| e.is_empty()) {
            node.eliminated.clear();
        }
        Ok(ProtocolNode::Measure(node))
    }
}

pub fn synthesize(set: &StateSet) -> Result<(Protocol, SynthesisCertificate)> {
    let report = validate_full_orthogonal(set);
    if !report.orthogonal {
        return Err(Error::Validation(format!(
            "states are not mutually orthogonal (max overlap {:e})",
            report.max_overlap
        )));
    }
    let non_product = set.states.iter().filter(|s| !s.is_product()).count();
    let hypothesis = Hypothesis {
        full_rank: report.full_rank,
        non_product_states: non_product,
        within: report.full_rank && non_product <= 1,
    };

    let cond = set
        .states
        .iter()
        .map(|s| Conditioned {
            label: s.label.clone(),
            op: s.rho.matrix().clone(),
        })
        .collect();
    let mut synth = Synth { first_failure: None };
    let root = synth.node(cond, set.d_a, set.d_b)?;
    let protocol = Protocol {
        d_a: set.d_a,
        d_b: set.d_b,
        depth: root.depth(),
        root,
    };
    let cert = match synth.first_failure {
        None => SynthesisCertificate {
            outcome: Outcome::Success,
            failure_node_stateset: None,
            space_dims: None,
            hypothesis,
        },
        Some((stuck, dims)) => SynthesisCertificate {
            outcome: Outcome::Failure,
            failure_node_stateset: Some(stuck),
            space_dims: Some(dims),
            hypothesis,
        },
    };
    Ok((protocol, cert))
}

/// Outcome distribution of running a protocol on one state.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Distribution {
    pub verdicts: BTreeMap<String, f64>,
    pub fail: f64,
    pub unreachable: f64,
}

impl Distribution {
    pub fn probability(&self, label: &str) -> f64 {
        self.verdicts.get(label).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.verdicts.values().sum::<f64>() + self.fail + self.unreachable
    }
}

/// Born-rule evaluation of the protocol tree on `rho`.
pub fn execute(p: &Protocol, rho: &BipartiteState) -> Result<Distribution> {
    if rho.d_a != p.d_a || rho.d_b != p.d_b {
        return Err(Error::Dimension(format!(
            "protocol is for {}x{}, state lives on {}x{}",
            p.d_a, p.d_b, rho.d_a, rho.d_b
        )));
    }
    let mut dist = Distribution::default();
    walk(&p.root, rho.rho.matrix().clone(), p.d_a, p.d_b, &mut dist)?;
    Ok(dist)
}

fn walk(node: &ProtocolNode, op: ComplexMatrix, d_a: usize, d_b: usize, dist: &mut Distribution) -> Result<()> {
    let weight = linalg::trace(&op).re;
    match node {
        ProtocolNode::Verdict { verdict } => {
            *dist.verdicts.entry(verdict.clone()).or_insert(0.0) += weight;
        }
        ProtocolNode::Fail { .. } => dist.fail += weight,
        ProtocolNode::Unreachable { .. } => dist.unreachable += weight,
        ProtocolNode::Measure(m) => {
            let local = m.party.local_dim(d_a, d_b);
            for ((proj, q), child) in m.projectors.iter().zip(&m.restrictions).zip(&m.children) {
                if proj.dim() != local || q.ambient_dim() != local {
                    return Err(Error::Dimension(format!(
                        "measurement on {} expects local dimension {local}",
                        m.party
                    )));
                }
                let full = m.party.embed(proj.matrix(), d_a, d_b);
                let branch = linalg::trace(&(&full * &op)).re;
                if branch <= 0.0 {
                    continue;
                }
                let r = embed_isometry(m.party, q.matrix(), d_a, d_b);
                let child_op = r.adjoint() * &op * &r;
                let (ca, cb) = restricted_dims(m.party, q.sub_dim(), d_a, d_b);
                walk(child, child_op, ca, cb, dist)?;
            }
        }
    }
    Ok(())
}

/// Structural and non-disturbance audit of a protocol against a state set.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Audit {
    pub measure_nodes: usize,
    /// Nodes whose every projector passed the support-vector check.
    pub nondisturbing_nodes: usize,
    /// Nodes whose projectors are complete, orthogonal, idempotent and at
    /// least two in number.
    pub complete_nodes: usize,
    /// Nodes whose outcomes all strictly shrink the measured party.
    pub progressing_nodes: usize,
    pub worst_residual: f64,
}

impl Audit {
    pub fn all_pass(&self) -> bool {
        self.nondisturbing_nodes == self.measure_nodes
            && self.complete_nodes == self.measure_nodes
            && self.progressing_nodes == self.measure_nodes
    }
}

/// Walk the tree with the conditioned sets of `set`, checking every
/// measurement node.
pub fn audit(p: &Protocol, set: &StateSet, tol: f64) -> Result<Audit> {
    let cond = set
        .states
        .iter()
        .map(|s| Conditioned {
            label: s.label.clone(),
            op: s.rho.matrix().clone(),
        })
        .collect();
    let mut out = Audit::default();
    audit_node(&p.root, cond, p.d_a, p.d_b, tol, &mut out)?;
    Ok(out)
}

fn audit_node(
    node: &ProtocolNode,
    cond: Vec<Conditioned>,
    d_a: usize,
    d_b: usize,
    tol: f64,
    out: &mut Audit,
) -> Result<()> {
    let ProtocolNode::Measure(m) = node else {
        return Ok(());
    };
    out.measure_nodes += 1;
    let local = m.party.local_dim(d_a, d_b);

    let mut sum = ComplexMatrix::zeros(local, local);
    let mut complete = m.projectors.len() >= 2;
    for (i, p) in m.projectors.iter().enumerate() {
        let pm = p.matrix();
        sum += pm;
        complete &= linalg::max_abs(&(pm * pm - pm)) <= tol;
        for other in &m.projectors[i + 1..] {
            complete &= linalg::max_abs(&(pm * other.matrix())) <= tol;
        }
    }
    complete &= linalg::max_abs(&(sum - identity(local))) <= tol;
    for (p, q) in m.projectors.iter().zip(&m.restrictions) {
        complete &= linalg::max_abs(&(q.projector().matrix() - p.matrix())) <= tol;
    }
    if complete {
        out.complete_nodes += 1;
    }
    if m.restrictions.iter().all(|q| q.sub_dim() < local) {
        out.progressing_nodes += 1;
    }

    let set = normalized_set(&cond, d_a, d_b)?;
    let supports = set.supports();
    let mut ok = true;
    for p in &m.projectors {
        let full = HermitianOperator::symmetrized(m.party.embed(p.matrix(), d_a, d_b));
        let residual = nondisturb::cross_block_residual(full.matrix(), &supports);
        out.worst_residual = out.worst_residual.max(residual);
        ok &= nondisturb::is_nondisturbing_vec(&full, &set, tol)?;
    }
    if ok {
        out.nondisturbing_nodes += 1;
    }

    for (q, child) in m.restrictions.iter().zip(&m.children) {
        let r = embed_isometry(m.party, q.matrix(), d_a, d_b);
        let (kept, _) = restrict(&cond, &r);
        let (ca, cb) = restricted_dims(m.party, q.sub_dim(), d_a, d_b);
        audit_node(child, kept, ca, cb, tol, out)?;
    }
    Ok(())
}

/// Records that the one non-product member's support is the orthogonal
/// complement of the product members' supports, so invariance of the latter
/// under a Hermitian local operator carries over to it.
#[derive(Clone, Debug, Serialize)]
pub struct Corollary5Annotation {
    pub non_product_label: Option<String>,
    /// `max |P_support - (I - sum of other support projectors)|`.
    pub complement_residual: f64,
    pub verified: bool,
}

pub fn corollary5_complete(set: &StateSet) -> Result<Corollary5Annotation> {
    let non_product: Vec<&BipartiteState> = set.states.iter().filter(|s| !s.is_product()).collect();
    if non_product.len() > 1 {
        return Err(Error::Precondition(format!(
            "{} states lack a product decomposition; at most one is allowed",
            non_product.len()
        )));
    }
    let report = validate_full_orthogonal(set);
    if !(report.orthogonal && report.full_rank) {
        return Err(Error::Validation("state set is not full orthogonal".into()));
    }
    let Some(odd) = non_product.first() else {
        return Ok(Corollary5Annotation {
            non_product_label: None,
            complement_residual: 0.0,
            verified: true,
        });
    };
    let d = set.dim();
    let supports = set.supports();
    let mut complement = identity(d);
    let mut own = ComplexMatrix::zeros(d, d);
    for (s, q) in set.states.iter().zip(&supports) {
        if s.label == odd.label {
            own = q.projector().into_matrix();
        } else {
            complement -= q.projector().matrix();
        }
    }
    let residual = linalg::max_abs(&(own - complement));
    Ok(Corollary5Annotation {
        non_product_label: Some(odd.label.clone()),
        complement_residual: residual,
        verified: residual <= tol::NONDISTURB,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ket;
    use crate::states::{lemma5_set, Sign};

    fn basis_set(d_a: usize, d_b: usize) -> StateSet {
        let mut states = Vec::new();
        for i in 0..d_a {
            for j in 0..d_b {
                states.push(BipartiteState::pure_product(format!("{i}{j}"), &ket(d_a, i), &ket(d_b, j)).unwrap());
            }
        }
        StateSet::new(d_a, d_b, states).unwrap()
    }

    #[test]
    fn two_qubit_basis_takes_two_rounds() {
        let set = basis_set(2, 2);
        let (p, cert) = synthesize(&set).unwrap();
        assert_eq!(cert.outcome, Outcome::Success);
        assert!(cert.hypothesis.within);
        assert_eq!(p.depth, 2);
        assert_eq!(p.leaf_count(), 4);
        let ProtocolNode::Measure(root) = &p.root else { panic!("root must measure") };
        assert_eq!(root.party, Side::A);
        for proj in &root.projectors {
            let diag = ComplexMatrix::from_diagonal(&proj.matrix().diagonal());
            assert!(linalg::max_abs(&(proj.matrix() - diag)) < 1e-10);
        }
        let d = execute(&p, set.get("01").unwrap()).unwrap();
        assert!((d.probability("01") - 1.0).abs() < 1e-12);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_state_needs_no_measurement() {
        let s = BipartiteState::pure_product("only", &ket(2, 0), &ket(3, 2)).unwrap();
        let set = StateSet::new(2, 3, vec![s]).unwrap();
        let (p, cert) = synthesize(&set).unwrap();
        assert_eq!(cert.outcome, Outcome::Success);
        assert_eq!(p.depth, 0);
        let d = execute(&p, &set.states[0]).unwrap();
        assert_eq!(d.probability("only"), 1.0);
    }

    #[test]
    fn domino_derived_sets_fail_at_root() {
        for signs in Sign::all_choices() {
            let set = lemma5_set(signs);
            let (p, cert) = synthesize(&set).unwrap();
            assert_eq!(cert.outcome, Outcome::Failure);
            assert_eq!(cert.space_dims, Some((1, 1)));
            assert_eq!(cert.failure_node_stateset.unwrap().len(), 5);
            assert!(matches!(p.root, ProtocolNode::Fail { .. }));
        }
    }

    #[test]
    fn non_orthogonal_input_is_rejected() {
        let a = BipartiteState::pure_product("a", &ket(2, 0), &ket(2, 0)).unwrap();
        let b = BipartiteState::pure_product("b", &ket(2, 0), &linalg::real_ket(&[1.0, 1.0])).unwrap();
        let set = StateSet::new(2, 2, vec![a, b]).unwrap();
        assert!(matches!(synthesize(&set), Err(Error::Validation(_))));
    }

    #[test]
    fn execute_checks_dimensions() {
        let (p, _) = synthesize(&basis_set(2, 2)).unwrap();
        let s = BipartiteState::pure_product("x", &ket(3, 0), &ket(2, 0)).unwrap();
        assert!(matches!(execute(&p, &s), Err(Error::Dimension(_))));
    }

    #[test]
    fn protocol_json_round_trip() {
        let set = basis_set(2, 3);
        let (p, _) = synthesize(&set).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        let back = Protocol::from_json_str(&text).unwrap();
        assert_eq!(back, p);
        assert!(text.contains("\"party\":\"A\""));
        assert!(text.contains("\"verdict\":\"12\""));
    }

    #[test]
    fn corollary5_annotations() {
        let ann = corollary5_complete(&lemma5_set([Sign::Plus; 4])).unwrap();
        assert_eq!(ann.non_product_label.as_deref(), Some("rho"));
        assert!(ann.verified);

        let ann = corollary5_complete(&basis_set(2, 2)).unwrap();
        assert!(ann.non_product_label.is_none());

        let mut states = basis_set(2, 2).states;
        for s in &mut states[..2] {
            s.product_parts = None;
        }
        let set = StateSet::new(2, 2, states).unwrap();
        assert!(matches!(corollary5_complete(&set), Err(Error::Precondition(_))));
    }

    #[test]
    fn audit_passes_on_synthesized_tree() {
        let set = basis_set(3, 2);
        let (p, _) = synthesize(&set).unwrap();
        let a = audit(&p, &set, 1e-8).unwrap();
        assert!(a.measure_nodes > 0);
        assert!(a.all_pass(), "{a:?}");
    }
}
