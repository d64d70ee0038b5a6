//! Non-disturbing operators for orthogonal state sets.
//!
//! An operator `E >= 0` is non-disturbing for `S` when `tr(E rho E sigma) = 0`
//! for all distinct members; for PSD `E` this is the same as every cross
//! block `Q_rho^dagger E Q_sigma` of the support isometries vanishing. The
//! block form is linear in `E`, which is what [`solve_local_space`] uses to
//! find every Hermitian `a` with `a (x) I` (or `I (x) b`) non-disturbing.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, c, eig_hermitian, frobenius, hs_inner, identity, kron, max_abs, ComplexMatrix,
    HermitianOperator, Isometry,
};
use crate::states::StateSet;
use crate::tol;

/// Which tensor factor a local operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
    #[serde(rename = "joint")]
    Joint,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
            Side::Joint => Side::Joint,
        }
    }

    /// Dimension of the operator space on this side.
    pub fn local_dim(self, d_a: usize, d_b: usize) -> usize {
        match self {
            Side::A => d_a,
            Side::B => d_b,
            Side::Joint => d_a * d_b,
        }
    }

    /// `a (x) I`, `I (x) a`, or `a` itself.
    pub fn embed(self, a: &ComplexMatrix, d_a: usize, d_b: usize) -> ComplexMatrix {
        match self {
            Side::A => kron(a, &identity(d_b)),
            Side::B => kron(&identity(d_a), a),
            Side::Joint => a.clone(),
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::A => "A",
            Side::B => "B",
            Side::Joint => "joint",
        })
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Side::A),
            "B" | "b" => Ok(Side::B),
            "joint" => Ok(Side::Joint),
            other => Err(Error::Parse(format!("unknown side {other:?}"))),
        }
    }
}

/// Real coordinates of a `d x d` Hermitian matrix: the `d` diagonal entries,
/// then `(re, im)` of each strictly upper entry in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct HermParam {
    pub dim: usize,
    pub coords: Vec<f64>,
}

impl HermParam {
    pub fn from_operator(h: &HermitianOperator) -> Self {
        let d = h.dim();
        let m = h.matrix();
        let mut coords = Vec::with_capacity(d * d);
        coords.extend((0..d).map(|i| m[(i, i)].re));
        for i in 0..d {
            for j in i + 1..d {
                coords.push(m[(i, j)].re);
                coords.push(m[(i, j)].im);
            }
        }
        HermParam { dim: d, coords }
    }

    pub fn to_operator(&self) -> HermitianOperator {
        let d = self.dim;
        let mut m = ComplexMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = c(self.coords[i], 0.0);
        }
        let mut k = d;
        for i in 0..d {
            for j in i + 1..d {
                let z = c(self.coords[k], self.coords[k + 1]);
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
                k += 2;
            }
        }
        HermitianOperator::symmetrized(m)
    }

    /// The Hermitian matrix of the `k`-th unit coordinate.
    pub fn unit(dim: usize, k: usize) -> HermitianOperator {
        let mut coords = vec![0.0; dim * dim];
        coords[k] = 1.0;
        HermParam { dim, coords }.to_operator()
    }
}

/// Largest cross block `max_{i != j} max |Q_i^dagger E Q_j|` over the given
/// supports. No positivity requirement on `E`.
pub fn cross_block_residual(e: &ComplexMatrix, supports: &[Isometry]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, qi) in supports.iter().enumerate() {
        if qi.sub_dim() == 0 {
            continue;
        }
        let left = qi.matrix().adjoint() * e;
        for qj in &supports[i + 1..] {
            if qj.sub_dim() == 0 {
                continue;
            }
            worst = worst.max(max_abs(&(&left * qj.matrix())));
        }
    }
    worst
}

fn check_dims(e: &HermitianOperator, set: &StateSet) -> Result<()> {
    if e.dim() != set.dim() {
        return Err(Error::Dimension(format!(
            "operator is {0}x{0}, state set lives on dimension {1}",
            e.dim(),
            set.dim()
        )));
    }
    Ok(())
}

/// Largest `|tr(E rho E sigma)|` over distinct pairs.
pub fn trace_residual(e: &HermitianOperator, set: &StateSet) -> Result<f64> {
    check_dims(e, set)?;
    let em = e.matrix();
    let sandwiched: Vec<ComplexMatrix> = set.states.iter().map(|s| em * s.rho.matrix()).collect();
    let mut worst = 0.0_f64;
    for i in 0..sandwiched.len() {
        for j in i + 1..sandwiched.len() {
            let t = linalg::trace(&(&sandwiched[i] * &sandwiched[j])).norm();
            worst = worst.max(t);
        }
    }
    Ok(worst)
}

/// `tr(E rho E sigma) = 0` for all distinct members, up to `tol`.
pub fn is_nondisturbing(e: &HermitianOperator, set: &StateSet, tol: f64) -> Result<bool> {
    Ok(trace_residual(e, set)? <= tol)
}

/// Support-vector form: every cross block `Q_rho^dagger E Q_sigma` vanishes.
/// Only equivalent to the trace form for PSD `E`, which is enforced.
pub fn is_nondisturbing_vec(e: &HermitianOperator, set: &StateSet, tol: f64) -> Result<bool> {
    check_dims(e, set)?;
    if !linalg::is_psd(e, tol::STATE)? {
        return Err(Error::Precondition(
            "support-vector non-disturbance requires a PSD operator".into(),
        ));
    }
    Ok(cross_block_residual(e.matrix(), &set.supports()) <= tol)
}

/// The three equivalent characterizations of `M`-invariance of `range(Q)`.
#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    /// `(I - QQ^dagger) M Q = 0`.
    pub inv_def: bool,
    /// `MQ = QX` with `X = Q^dagger M Q`.
    pub inv_factor: bool,
    /// `QQ^dagger` commutes with every eigenprojector of `M`.
    pub inv_eigbasis: bool,
    pub def_residual: f64,
    pub factor_residual: f64,
    pub eigbasis_residual: f64,
}

impl InvarianceReport {
    pub fn consistent(&self) -> bool {
        self.inv_def == self.inv_factor && self.inv_factor == self.inv_eigbasis
    }

    pub fn invariant(&self) -> bool {
        self.inv_def
    }
}

/// Residuals are measured relative to `max |M|` so `tol` is scale free.
pub fn invariance_equivalent(m: &HermitianOperator, h: &Isometry, tol: f64) -> Result<InvarianceReport> {
    if m.dim() != h.ambient_dim() {
        return Err(Error::Dimension(format!(
            "operator is {0}x{0}, subspace lives in C^{1}",
            m.dim(),
            h.ambient_dim()
        )));
    }
    let d = m.dim();
    let scale = max_abs(m.matrix()).max(f64::MIN_POSITIVE);
    let q = h.matrix();
    let p = h.projector();
    let mq = m.matrix() * q;

    let def_residual = max_abs(&((identity(d) - p.matrix()) * &mq)) / scale;

    let x = q.adjoint() * &mq;
    let factor_residual = max_abs(&(&mq - q * &x)) / scale;

    let spectrum = eig_hermitian(m)?;
    let eigbasis_residual = spectrum
        .groups
        .iter()
        .map(|g| {
            let pl = g.projector.matrix();
            max_abs(&(p.matrix() * pl - pl * p.matrix()))
        })
        .fold(0.0, f64::max);

    Ok(InvarianceReport {
        inv_def: def_residual <= tol,
        inv_factor: factor_residual <= tol,
        inv_eigbasis: eigbasis_residual <= tol,
        def_residual,
        factor_residual,
        eigbasis_residual,
    })
}

/// Invariance of a product subspace under `a (x) b` versus under its factors.
#[derive(Clone, Debug, Serialize)]
pub struct DecoupleReport {
    pub joint_inv: bool,
    pub a_inv: bool,
    pub b_inv: bool,
    pub nonzero: bool,
}

impl DecoupleReport {
    /// Joint invariance with `(a (x) b) P != 0` forces both local invariances.
    pub fn implication_holds(&self) -> bool {
        !(self.joint_inv && self.nonzero) || (self.a_inv && self.b_inv)
    }
}

pub fn lemma2_decouple(
    a: &HermitianOperator,
    b: &HermitianOperator,
    ha: &Isometry,
    hb: &Isometry,
    tol: f64,
) -> Result<DecoupleReport> {
    let ab = a.kron(b);
    let h = ha.kron(hb);
    let joint = invariance_equivalent(&ab, &h, tol)?;
    let a_rep = invariance_equivalent(a, ha, tol)?;
    let b_rep = invariance_equivalent(b, hb, tol)?;
    let scale = max_abs(ab.matrix()).max(f64::MIN_POSITIVE);
    let image = max_abs(&(ab.matrix() * h.matrix())) / scale;
    Ok(DecoupleReport {
        joint_inv: joint.inv_def,
        a_inv: a_rep.inv_def,
        b_inv: b_rep.inv_def,
        nonzero: max_abs(ab.matrix()) > 0.0 && image > tol,
    })
}

/// A separable but non-product subspace of `C^2 (x) C^3`, the range of
/// `|0><0| (x) |1><1| + |1><1| (x) |0-1><0-1| + |0-1><0-1| (x) |2><2|`, together
/// with `a = |1><1|` and `b = |0-1><0-1|`. The subspace is invariant under
/// `a (x) b` but under neither `a (x) I` nor `I (x) b`.
pub fn separable_counterexample() -> (HermitianOperator, HermitianOperator, Isometry) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let minus2 = linalg::real_ket(&[r, -r]);
    let minus3 = linalg::real_ket(&[r, -r, 0.0]);
    let vectors = [
        linalg::kron(&linalg::ket(2, 0), &linalg::ket(3, 1)),
        linalg::kron(&linalg::ket(2, 1), &minus3),
        linalg::kron(&minus2, &linalg::ket(3, 2)),
    ];
    let p = vectors.iter().fold(ComplexMatrix::zeros(6, 6), |acc, v| acc + linalg::outer(v));
    let h = linalg::column_space(&p, tol::RANK);
    let a = HermitianOperator::projector_onto(&linalg::ket(2, 1));
    let b = HermitianOperator::projector_onto(&minus3);
    (a, b, h)
}

/// Real-linear span of Hermitian operators passing every non-disturbing
/// cross-block constraint, orthonormal under the trace inner product.
/// When the identity lies in the span it is the first basis element.
#[derive(Clone, Debug, Serialize)]
pub struct NondisturbingSpace {
    pub side: Side,
    pub dim: usize,
    pub basis: Vec<HermitianOperator>,
    /// Distance from `I/sqrt(d)` to the span.
    #[serde(skip)]
    pub identity_residual: f64,
    /// Singular values of the stacked constraint matrix, descending.
    #[serde(skip)]
    pub singular_values: Vec<f64>,
    /// Relative nullspace threshold used.
    #[serde(skip)]
    pub threshold: f64,
}

impl NondisturbingSpace {
    pub fn is_scalar(&self) -> bool {
        self.dim <= 1
    }

    pub fn contains_identity(&self) -> bool {
        self.identity_residual <= tol::NONDISTURB
    }

    /// Smallest singular value that was treated as a genuine constraint, and
    /// the largest one treated as zero, both relative to the cut's scale.
    pub fn threshold_margins(&self) -> (Option<f64>, Option<f64>) {
        let scale = linalg::nullspace_scale(&self.singular_values);
        let cut = self.threshold * scale;
        let kept = self.singular_values.iter().filter(|&&s| s > cut).last().map(|s| s / scale);
        let dropped = self.singular_values.iter().find(|&&s| s <= cut).map(|s| s / scale);
        (kept, dropped)
    }
}

/// Stacked real constraint matrix: one column per HermParam coordinate,
/// rows are the real and imaginary parts of all cross-block entries.
fn constraint_matrix(set: &StateSet, side: Side, supports: &[Isometry]) -> DMatrix<f64> {
    let d = side.local_dim(set.d_a, set.d_b);
    let n = d * d;
    let embedded: Vec<ComplexMatrix> = (0..n)
        .map(|k| side.embed(HermParam::unit(d, k).matrix(), set.d_a, set.d_b))
        .collect();

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); n];
    for (i, qi) in supports.iter().enumerate() {
        for qj in &supports[i + 1..] {
            if qi.sub_dim() == 0 || qj.sub_dim() == 0 {
                continue;
            }
            for (k, ek) in embedded.iter().enumerate() {
                let block = qi.matrix().adjoint() * ek * qj.matrix();
                columns[k].extend(block.iter().flat_map(|z| [z.re, z.im]));
            }
        }
    }
    let rows = columns[0].len();
    DMatrix::from_fn(rows, n, |r, k| columns[k][r])
}

pub fn solve_local_space(set: &StateSet, side: Side) -> NondisturbingSpace {
    solve_local_space_with(set, side, tol::NULLSPACE)
}

pub fn solve_local_space_with(set: &StateSet, side: Side, threshold: f64) -> NondisturbingSpace {
    let d = side.local_dim(set.d_a, set.d_b);
    let supports = set.supports();
    let constraints = constraint_matrix(set, side, &supports);
    let (null, singular_values) = linalg::real_nullspace(&constraints, threshold);
    let candidates: Vec<ComplexMatrix> = (0..null.ncols())
        .map(|col| {
            HermParam {
                dim: d,
                coords: null.column(col).iter().copied().collect(),
            }
            .to_operator()
            .into_matrix()
        })
        .collect();
    let (basis, identity_residual) = orthonormal_with_identity(d, &candidates);
    NondisturbingSpace {
        side,
        dim: basis.len(),
        basis,
        identity_residual,
        singular_values,
        threshold,
    }
}

fn gram_schmidt(vectors: impl IntoIterator<Item = ComplexMatrix>, drop_below: f64) -> Vec<ComplexMatrix> {
    let mut out: Vec<ComplexMatrix> = Vec::new();
    for v in vectors {
        let mut w = v;
        // Two passes keep the basis orthonormal to working precision.
        for _ in 0..2 {
            for u in &out {
                let proj = hs_inner(u, &w);
                w -= u.scale(proj);
            }
        }
        let n = frobenius(&w);
        if n > drop_below {
            out.push(w.unscale(n));
        }
    }
    out
}

/// Orthonormalize `candidates`; if the identity lies in their span it is put
/// first. Returns the basis and the distance of `I/sqrt(d)` from the span.
pub(crate) fn orthonormal_with_identity(
    d: usize,
    candidates: &[ComplexMatrix],
) -> (Vec<HermitianOperator>, f64) {
    let ortho = gram_schmidt(candidates.iter().cloned(), 1e-8);
    let ortho_len = ortho.len();
    let unit_identity = identity(d).unscale((d as f64).sqrt());
    let mut residual = unit_identity.clone();
    for u in &ortho {
        residual -= u.scale(hs_inner(u, &unit_identity));
    }
    let identity_residual = frobenius(&residual);
    let basis = if identity_residual <= tol::NONDISTURB {
        let mut b = gram_schmidt(std::iter::once(unit_identity).chain(ortho), 1e-6);
        b.truncate(ortho_len);
        b
    } else {
        ortho
    };
    let basis = basis.into_iter().map(HermitianOperator::symmetrized).collect();
    (basis, identity_residual)
}

/// A trace-free, unit-norm element of the space, or `None` when the space
/// holds only multiples of the identity.
pub fn pick_nontrivial(space: &NondisturbingSpace) -> Option<HermitianOperator> {
    if space.dim <= 1 && space.contains_identity() {
        return None;
    }
    space.basis.iter().find_map(|b| {
        let d = b.dim();
        let shift = b.trace() / d as f64;
        let w = b.matrix() - identity(d).scale(shift);
        let n = frobenius(&w);
        (n > 1e-8).then(|| HermitianOperator::symmetrized(w.unscale(n)))
    })
}

/// A PSD product operator `a (x) b` offered together with a target `chi`.
#[derive(Clone, Debug)]
pub struct ProductCandidate {
    pub a: HermitianOperator,
    pub b: HermitianOperator,
    pub chi: f64,
}

impl ProductCandidate {
    pub fn new(a: HermitianOperator, b: HermitianOperator, chi: f64) -> Result<Self> {
        for (name, m) in [("a", &a), ("b", &b)] {
            if !linalg::is_psd(m, tol::STATE)? {
                return Err(Error::Validation(format!("factor {name} is not PSD")));
            }
        }
        Ok(ProductCandidate { a, b, chi })
    }

    pub fn operator(&self) -> HermitianOperator {
        self.a.kron(&self.b)
    }
}

/// One checked condition in a report.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionEntry {
    pub condition: String,
    pub residual: f64,
    pub pass: bool,
}

/// Verdicts on the three conditions a product operator must meet for a set
/// to be discriminable with vanishing error, plus the derived bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct Thm1Report {
    pub n: usize,
    pub chi: f64,
    pub overlaps: Vec<f64>,
    pub conditions: Vec<ConditionEntry>,
    pub min_overlap: f64,
    /// `1 - (n-1) chi`: lower bound on the smallest overlap implied by the
    /// sum and max conditions.
    pub min_bound: f64,
    /// `1/n < chi < 1/(n-1)`: the window where `E` can be neither a multiple
    /// of the identity nor annihilate any member.
    pub chi_in_window: bool,
    /// `chi = 1/n`, the only value a multiple of the identity can satisfy.
    pub scalar_compatible: bool,
    /// The kernel hypothesis is not verified for general sets.
    pub kernel_condition: String,
}

impl Thm1Report {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    /// When the sum and max conditions hold, the smallest overlap respects
    /// the derived lower bound.
    pub fn min_bound_respected(&self, tol: f64) -> bool {
        let sum_max_ok = self.conditions.iter().take(2).all(|c| c.pass);
        !sum_max_ok || self.min_overlap >= self.min_bound - tol
    }
}

pub fn check_thm1_conditions(e: &ProductCandidate, set: &StateSet, tol: f64) -> Result<Thm1Report> {
    let op = e.operator();
    check_dims(&op, set)?;
    let n = set.len();
    let overlaps: Vec<f64> = set
        .states
        .iter()
        .map(|s| linalg::trace(&(op.matrix() * s.rho.matrix())).re)
        .collect();
    let sum: f64 = overlaps.iter().sum();
    let max = overlaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = overlaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let nd = trace_residual(&op, set)?;
    let conditions = vec![
        ConditionEntry {
            condition: "sum_overlaps_is_one".into(),
            residual: (sum - 1.0).abs(),
            pass: (sum - 1.0).abs() <= tol,
        },
        ConditionEntry {
            condition: "max_overlap_is_chi".into(),
            residual: (max - e.chi).abs(),
            pass: (max - e.chi).abs() <= tol,
        },
        ConditionEntry {
            condition: "non_disturbing".into(),
            residual: nd,
            pass: nd <= tol,
        },
    ];
    let nf = n as f64;
    Ok(Thm1Report {
        n,
        chi: e.chi,
        overlaps,
        conditions,
        min_overlap: min,
        min_bound: 1.0 - (nf - 1.0) * e.chi,
        chi_in_window: n >= 2 && e.chi > 1.0 / nf && e.chi < 1.0 / (nf - 1.0),
        scalar_compatible: (e.chi - 1.0 / nf).abs() <= tol,
        kernel_condition: "not checked".into(),
    })
}
