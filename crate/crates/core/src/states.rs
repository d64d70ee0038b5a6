//! Bipartite state sets, their supports, and the domino family.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, column_space, kron, matrix_from_json, matrix_to_json, ComplexMatrix,
    HermitianOperator, Isometry,
};
use crate::tol;

/// A normalized density operator on `C^dA (x) C^dB`, optionally annotated
/// with a product decomposition `rho = tau (x) sigma`.
#[derive(Clone, Debug)]
pub struct BipartiteState {
    pub label: String,
    pub d_a: usize,
    pub d_b: usize,
    pub rho: HermitianOperator,
    pub product_parts: Option<(HermitianOperator, HermitianOperator)>,
}

impl BipartiteState {
    pub fn new(
        label: impl Into<String>,
        d_a: usize,
        d_b: usize,
        rho: HermitianOperator,
        product_parts: Option<(HermitianOperator, HermitianOperator)>,
    ) -> Result<Self> {
        let label = label.into();
        if rho.dim() != d_a * d_b {
            return Err(Error::Dimension(format!(
                "state {label:?}: rho is {0}x{0}, expected {1}",
                rho.dim(),
                d_a * d_b
            )));
        }
        if (rho.trace() - 1.0).abs() > tol::STATE {
            return Err(Error::Validation(format!(
                "state {label:?}: trace {} is not 1",
                rho.trace()
            )));
        }
        if !linalg::is_psd(&rho, tol::STATE)? {
            return Err(Error::Validation(format!("state {label:?}: rho is not PSD")));
        }
        if let Some((tau, sigma)) = &product_parts {
            if tau.dim() != d_a || sigma.dim() != d_b {
                return Err(Error::Dimension(format!(
                    "state {label:?}: product factors are {}x{} and {}x{}",
                    tau.dim(),
                    tau.dim(),
                    sigma.dim(),
                    sigma.dim()
                )));
            }
            let defect = linalg::max_abs(&(rho.matrix() - tau.kron(sigma).matrix()));
            if defect > tol::STATE {
                return Err(Error::Validation(format!(
                    "state {label:?}: rho differs from tau (x) sigma by {defect:e}"
                )));
            }
        }
        Ok(BipartiteState {
            label,
            d_a,
            d_b,
            rho,
            product_parts,
        })
    }

    /// `|alpha><alpha| (x) |beta><beta|`, normalizing both kets.
    pub fn pure_product(label: impl Into<String>, alpha: &ComplexMatrix, beta: &ComplexMatrix) -> Result<Self> {
        let tau = HermitianOperator::projector_onto(alpha);
        let sigma = HermitianOperator::projector_onto(beta);
        Self::product(label, tau, sigma)
    }

    /// `tau (x) sigma` after normalizing each factor to unit trace.
    pub fn product(label: impl Into<String>, tau: HermitianOperator, sigma: HermitianOperator) -> Result<Self> {
        let (ta, tb) = (tau.trace(), sigma.trace());
        if ta <= 0.0 || tb <= 0.0 {
            return Err(Error::Validation("product factors must have positive trace".into()));
        }
        let tau = tau.scale(1.0 / ta);
        let sigma = sigma.scale(1.0 / tb);
        let rho = tau.kron(&sigma);
        Self::new(label, tau.dim(), sigma.dim(), rho, Some((tau, sigma)))
    }

    /// Pure state `|psi><psi|` (normalized), with no product annotation.
    pub fn pure(label: impl Into<String>, d_a: usize, d_b: usize, psi: &ComplexMatrix) -> Result<Self> {
        Self::new(label, d_a, d_b, HermitianOperator::projector_onto(psi), None)
    }

    pub fn is_product(&self) -> bool {
        self.product_parts.is_some()
    }
}

/// An ordered collection of bipartite states with distinct labels.
///
/// Orthogonality is not enforced here; see [`validate_full_orthogonal`].
#[derive(Clone, Debug)]
pub struct StateSet {
    pub d_a: usize,
    pub d_b: usize,
    pub states: Vec<BipartiteState>,
}

impl StateSet {
    pub fn new(d_a: usize, d_b: usize, states: Vec<BipartiteState>) -> Result<Self> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::Dimension("local dimensions must be positive".into()));
        }
        if d_a * d_b > tol::MAX_DIM {
            return Err(Error::Dimension(format!(
                "joint dimension {} exceeds {}",
                d_a * d_b,
                tol::MAX_DIM
            )));
        }
        let mut seen = HashSet::new();
        for s in &states {
            if s.d_a != d_a || s.d_b != d_b {
                return Err(Error::Dimension(format!(
                    "state {:?} lives on {}x{}, set is {}x{}",
                    s.label, s.d_a, s.d_b, d_a, d_b
                )));
            }
            if !seen.insert(s.label.clone()) {
                return Err(Error::Validation(format!("duplicate label {:?}", s.label)));
            }
        }
        Ok(StateSet { d_a, d_b, states })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn get(&self, label: &str) -> Option<&BipartiteState> {
        self.states.iter().find(|s| s.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.states.iter().map(|s| s.label.as_str()).collect()
    }

    /// Supports of every state, in set order.
    pub fn supports(&self) -> Vec<Isometry> {
        self.states
            .iter()
            .map(|s| column_space(s.rho.matrix(), tol::RANK))
            .collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: StateSetJson = serde_json::from_str(s)?;
        raw.into_state_set()
    }

    pub fn to_json(&self) -> StateSetJson {
        StateSetJson {
            d_a: self.d_a,
            d_b: self.d_b,
            states: self
                .states
                .iter()
                .map(|s| StateJson {
                    label: s.label.clone(),
                    rho: matrix_to_json(s.rho.matrix()),
                    tau: s.product_parts.as_ref().map(|(t, _)| matrix_to_json(t.matrix())),
                    sigma: s.product_parts.as_ref().map(|(_, g)| matrix_to_json(g.matrix())),
                })
                .collect(),
        }
    }
}

/// On-disk layout of a state set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateSetJson {
    #[serde(rename = "dA")]
    pub d_a: usize,
    #[serde(rename = "dB")]
    pub d_b: usize,
    pub states: Vec<StateJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateJson {
    pub label: String,
    pub rho: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<[f64; 2]>>>,
}

/// Kets (single-column matrices) become normalized projectors; square
/// matrices are taken as density operators.
fn operator_from_json(rows: &[Vec<[f64; 2]>], dim: usize, what: &str) -> Result<HermitianOperator> {
    let m = matrix_from_json(rows)?;
    if m.ncols() == 1 && m.nrows() == dim {
        let norm = linalg::frobenius(&m);
        if norm == 0.0 {
            return Err(Error::Validation(format!("{what}: zero ket")));
        }
        return Ok(HermitianOperator::projector_onto(&m));
    }
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Dimension(format!(
            "{what}: got {}x{}, expected a {dim}-dim ket or {dim}x{dim} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    HermitianOperator::new(m)
}

impl StateSetJson {
    pub fn into_state_set(self) -> Result<StateSet> {
        let (d_a, d_b) = (self.d_a, self.d_b);
        let mut states = Vec::with_capacity(self.states.len());
        for s in self.states {
            let rho = operator_from_json(&s.rho, d_a * d_b, &format!("{}.rho", s.label))?;
            let parts = match (s.tau, s.sigma) {
                (Some(t), Some(g)) => {
                    let tau = operator_from_json(&t, d_a, &format!("{}.tau", s.label))?;
                    let sigma = operator_from_json(&g, d_b, &format!("{}.sigma", s.label))?;
                    let (ta, tb) = (tau.trace(), sigma.trace());
                    Some((tau.scale(1.0 / ta), sigma.scale(1.0 / tb)))
                }
                (None, None) => None,
                _ => {
                    return Err(Error::Parse(format!(
                        "state {:?}: tau and sigma must be given together",
                        s.label
                    )))
                }
            };
            states.push(BipartiteState::new(s.label, d_a, d_b, rho, parts)?);
        }
        StateSet::new(d_a, d_b, states)
    }
}

/// Result of [`validate_full_orthogonal`].
#[derive(Clone, Debug, Serialize)]
pub struct FullOrthogonalReport {
    pub orthogonal: bool,
    pub full_rank: bool,
    pub max_overlap: f64,
    pub rank: usize,
}

pub fn validate_full_orthogonal(set: &StateSet) -> FullOrthogonalReport {
    let mut max_overlap = 0.0_f64;
    for (i, a) in set.states.iter().enumerate() {
        for b in &set.states[i + 1..] {
            let overlap = linalg::trace(&(a.rho.matrix() * b.rho.matrix())).norm();
            max_overlap = max_overlap.max(overlap);
        }
    }
    let d = set.dim();
    let total = set
        .states
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, s| acc + s.rho.matrix());
    let rank = linalg::rank(&total);
    FullOrthogonalReport {
        orthogonal: max_overlap <= tol::STATE,
        full_rank: rank == d,
        max_overlap,
        rank,
    }
}

/// Support of one member, with per-factor supports when the state carries a
/// product annotation.
#[derive(Clone, Debug)]
pub struct SupportSpace {
    pub state_label: String,
    pub iso: Isometry,
    pub product_isos: Option<(Isometry, Isometry)>,
}

pub fn support(set: &StateSet, label: &str) -> Result<SupportSpace> {
    let state = set
        .get(label)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
    let iso = column_space(state.rho.matrix(), tol::RANK);
    let product_isos = state.product_parts.as_ref().map(|(tau, sigma)| {
        (
            column_space(tau.matrix(), tol::RANK),
            column_space(sigma.matrix(), tol::RANK),
        )
    });
    Ok(SupportSpace {
        state_label: label.to_string(),
        iso,
        product_isos,
    })
}

/// A product ket `|alpha> (x) |beta>`.
#[derive(Clone, Debug)]
pub struct ProductKet {
    pub label: String,
    pub alpha: ComplexMatrix,
    pub beta: ComplexMatrix,
}

impl ProductKet {
    pub fn ket(&self) -> ComplexMatrix {
        kron(&self.alpha, &self.beta)
    }

    pub fn state(&self, label: &str) -> Result<BipartiteState> {
        BipartiteState::pure_product(label, &self.alpha, &self.beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// The 16 sign choices for the four domino pairs; bit `i` of the index
    /// selects the sign of pair `i + 1` (0 is `+`).
    pub fn all_choices() -> Vec<[Sign; 4]> {
        (0..16u32)
            .map(|bits| {
                std::array::from_fn(|i| if bits >> i & 1 == 0 { Sign::Plus } else { Sign::Minus })
            })
            .collect()
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// `(|i> + s|j>) / sqrt 2` in `C^3`.
fn pair_ket(i: usize, j: usize, sign: Sign) -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = ComplexMatrix::zeros(3, 1);
    v[(i, 0)] = c(h, 0.0);
    v[(j, 0)] = c(sign.factor() * h, 0.0);
    v
}

/// Domino pair `i` (1..=4) with the given sign.
pub fn domino_state(i: usize, sign: Sign) -> ProductKet {
    let k = linalg::ket;
    let (alpha, beta) = match i {
        1 => (k(3, 0), pair_ket(0, 1, sign)),
        2 => (pair_ket(0, 1, sign), k(3, 2)),
        3 => (k(3, 2), pair_ket(1, 2, sign)),
        4 => (pair_ket(1, 2, sign), k(3, 0)),
        _ => panic!("domino pair index must be 1..=4, got {i}"),
    };
    ProductKet {
        label: format!("psi{i}{sign}"),
        alpha,
        beta,
    }
}

/// The nine domino product states, in the order
/// `psi0, psi1+, psi1-, psi2+, psi2-, psi3+, psi3-, psi4+, psi4-`.
pub fn domino_basis() -> Vec<ProductKet> {
    let mut out = vec![ProductKet {
        label: "psi0".into(),
        alpha: linalg::ket(3, 1),
        beta: linalg::ket(3, 1),
    }];
    for i in 1..=4 {
        out.push(domino_state(i, Sign::Plus));
        out.push(domino_state(i, Sign::Minus));
    }
    out
}

/// Four pure domino states `phi_i = psi_i^{s_i}` plus the uniform mixture of
/// the five remaining domino states.
pub fn lemma5_set(signs: [Sign; 4]) -> StateSet {
    let mut states = Vec::with_capacity(5);
    let mut rest = vec![domino_basis().remove(0).ket()];
    for (i, &s) in signs.iter().enumerate() {
        let phi = domino_state(i + 1, s);
        states.push(phi.state(&format!("phi{}", i + 1)).expect("domino states are valid"));
        rest.push(domino_state(i + 1, s.flip()).ket());
    }
    states.push(mixture_state("rho", &rest, &[1.0; 5]));
    StateSet::new(3, 3, states).expect("domino set is well formed")
}

/// The motivating variant with `rho ∝ |psi0><psi0| + 1/4 sum_i |psi_i^-><psi_i^-|`
/// next to the four `psi_i^+`.
pub fn domino_example_set() -> StateSet {
    let mut states = Vec::with_capacity(5);
    let mut rest = vec![domino_basis().remove(0).ket()];
    for i in 1..=4 {
        states.push(domino_state(i, Sign::Plus).state(&format!("phi{i}")).unwrap());
        rest.push(domino_state(i, Sign::Minus).ket());
    }
    states.push(mixture_state("rho", &rest, &[1.0, 0.25, 0.25, 0.25, 0.25]));
    StateSet::new(3, 3, states).expect("domino set is well formed")
}

fn mixture_state(label: &str, kets: &[ComplexMatrix], weights: &[f64]) -> BipartiteState {
    let d = kets[0].nrows();
    let total: f64 = weights.iter().sum();
    let rho = kets
        .iter()
        .zip(weights)
        .fold(ComplexMatrix::zeros(d, d), |acc, (k, w)| acc + linalg::outer(k).scale(w / total));
    BipartiteState::new(label, 3, 3, HermitianOperator::symmetrized(rho), None)
        .expect("mixture of unit kets is a state")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_basis(d_a: usize, d_b: usize) -> StateSet {
        let mut states = Vec::new();
        for i in 0..d_a {
            for j in 0..d_b {
                states.push(
                    BipartiteState::pure_product(format!("{i}{j}"), &linalg::ket(d_a, i), &linalg::ket(d_b, j))
                        .unwrap(),
                );
            }
        }
        StateSet::new(d_a, d_b, states).unwrap()
    }

    #[test]
    fn standard_basis_is_full_orthogonal() {
        let r = validate_full_orthogonal(&standard_basis(2, 2));
        assert!(r.orthogonal && r.full_rank);
    }

    #[test]
    fn duplicated_state_fails_both_checks() {
        let k = linalg::ket(2, 0);
        let a = BipartiteState::pure_product("a", &k, &k).unwrap();
        let b = BipartiteState::pure_product("b", &k, &k).unwrap();
        let r = validate_full_orthogonal(&StateSet::new(2, 2, vec![a, b]).unwrap());
        assert!(!r.orthogonal);
        assert!(!r.full_rank);
    }

    #[test]
    fn domino_gram_is_identity() {
        let basis = domino_basis();
        assert_eq!(basis.len(), 9);
        for (i, x) in basis.iter().enumerate() {
            for (j, y) in basis.iter().enumerate() {
                let g = (x.ket().adjoint() * y.ket())[(0, 0)];
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - c(want, 0.0)).norm() < 1e-12, "gram[{i}][{j}] = {g}");
            }
        }
    }

    #[test]
    fn psi2_plus_layout() {
        let p = domino_state(2, Sign::Plus);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(p.alpha, linalg::real_ket(&[h, h, 0.0]));
        assert_eq!(p.beta, linalg::ket(3, 2));
    }

    #[test]
    fn lemma5_sets_are_full_orthogonal() {
        for signs in Sign::all_choices() {
            let set = lemma5_set(signs);
            assert_eq!(set.len(), 5);
            let r = validate_full_orthogonal(&set);
            assert!(r.orthogonal && r.full_rank, "signs {signs:?}");
            let mixed = set.get("rho").unwrap();
            assert!(mixed.product_parts.is_none());
            assert_eq!(linalg::rank(mixed.rho.matrix()), 5);
        }
    }

    #[test]
    fn lemma5_all_minus_mixes_the_plus_states() {
        let set = lemma5_set([Sign::Minus; 4]);
        let rho = set.get("rho").unwrap().rho.matrix().clone();
        let mut want = linalg::outer(&domino_basis()[0].ket()).scale(0.2);
        for i in 1..=4 {
            want += linalg::outer(&domino_state(i, Sign::Plus).ket()).scale(0.2);
        }
        assert!(linalg::max_abs(&(rho - want)) < 1e-14);
    }

    #[test]
    fn example_set_weights() {
        let set = domino_example_set();
        let rho = set.get("rho").unwrap().rho.matrix().clone();
        let psi0 = domino_basis()[0].ket();
        let w0 = (psi0.adjoint() * &rho * &psi0)[(0, 0)].re;
        assert!((w0 - 0.5).abs() < 1e-14);
        let m1 = domino_state(1, Sign::Minus).ket();
        assert!(((m1.adjoint() * &rho * &m1)[(0, 0)].re - 0.125).abs() < 1e-14);
    }

    #[test]
    fn support_examples() {
        let set = standard_basis(2, 2);
        assert_eq!(support(&set, "00").unwrap().iso.sub_dim(), 1);
        assert!(matches!(support(&set, "zz"), Err(Error::UnknownLabel(_))));

        let lemma = lemma5_set([Sign::Plus; 4]);
        let s = support(&lemma, "rho").unwrap();
        assert_eq!(s.iso.sub_dim(), 5);
        let rho = lemma.get("rho").unwrap().rho.matrix();
        let p = s.iso.projector();
        assert!(linalg::max_abs(&(p.matrix() * rho - rho)) < 1e-9);

        let tau = HermitianOperator::diagonal(&[0.5, 0.5, 0.0]);
        let sigma = HermitianOperator::identity(3);
        let st = BipartiteState::product("t", tau, sigma).unwrap();
        let set = StateSet::new(3, 3, vec![st]).unwrap();
        let s = support(&set, "t").unwrap();
        let (qa, qb) = s.product_isos.unwrap();
        assert_eq!((qa.sub_dim(), qb.sub_dim()), (2, 3));
        assert_eq!(s.iso.sub_dim(), 6);
    }

    #[test]
    fn json_loads_kets_and_rejects_bad_dims() {
        let text = r#"{"dA":2,"dB":2,"states":[
            {"label":"00","rho":[[[1,0]],[[0,0]],[[0,0]],[[0,0]]],"tau":[[[1,0]],[[0,0]]],"sigma":[[[1,0]],[[0,0]]]},
            {"label":"x","rho":[[[0,0]],[[2,0]],[[0,0]],[[0,0]]]}]}"#;
        let set = StateSet::from_json_str(text).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.states[0].is_product());
        assert!((set.states[1].rho.trace() - 1.0).abs() < 1e-15);

        let bad = r#"{"dA":2,"dB":2,"states":[{"label":"a","rho":[[[1,0]],[[0,0]],[[0,0]]]}]}"#;
        assert!(matches!(StateSet::from_json_str(bad), Err(Error::Dimension(_))));
        assert!(matches!(StateSet::from_json_str("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn json_round_trip_preserves_states() {
        let set = lemma5_set([Sign::Plus, Sign::Minus, Sign::Plus, Sign::Minus]);
        let text = serde_json::to_string(&set.to_json()).unwrap();
        let back = StateSet::from_json_str(&text).unwrap();
        for (a, b) in set.states.iter().zip(&back.states) {
            assert_eq!(a.label, b.label);
            assert!(linalg::max_abs(&(a.rho.matrix() - b.rho.matrix())) < 1e-15);
            assert_eq!(a.is_product(), b.is_product());
        }
    }
}
