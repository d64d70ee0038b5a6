//! Per-cycle feasibility of a non-trivial PSD `a` whose orthogonality graph
//! contains a given 5-cycle, decided two ways: numerically over the linear
//! solution space, and by replaying the explicit matrix forms and sign
//! arguments for the eight inequivalent cycles.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::Serialize;

use super::graph::{cycle, Cycle, Edge};
use super::{generate, reduce_phases, swap_basis, UpbInstance, UpbParams, BETA_AS_ALPHA};
use crate::error::{Error, Result};
use crate::linalg::{self, c, identity, ComplexMatrix, HermitianOperator};
use crate::nondisturb::{orthonormal_with_identity, HermParam};
use crate::tol;

/// Grid step (radians) on the parameter sphere.
const GRID_STEP: f64 = 0.05;
/// Compass refinement stops below this step.
const REFINE_STOP: f64 = 1e-10;
const MAX_SEARCH_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Only multiples of the identity satisfy the edge constraints.
    ScalarOnly,
    /// No PSD element with positive overlaps on every vertex.
    Infeasible,
    /// A PSD, non-scalar element with positive overlaps exists.
    WitnessFound,
    /// The closed-form sign argument did not close. Only produced by
    /// `closed_form_case`.
    Inconclusive,
}

impl Verdict {
    pub fn is_negative_for_discrimination(self) -> bool {
        matches!(self, Verdict::ScalarOnly | Verdict::Infeasible)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    #[serde(rename = "cycle")]
    pub cycle_id: usize,
    pub verdict: Verdict,
    /// Best value of `min(λ_min(a), min_i <v_i|a|v_i>)` at `tr a = 1`
    /// (unit Frobenius norm when the trace vanishes on the space). Absent
    /// for scalar-only or empty spaces.
    pub margin: Option<f64>,
    pub linear_dim: usize,
    #[serde(skip)]
    pub linear_space: Vec<HermitianOperator>,
    #[serde(skip)]
    pub witness: Option<HermitianOperator>,
}

/// Real constraint rows `Re, Im <v_i|B_k|v_j>` over the Hermitian unit
/// coordinates `B_k`, one pair per edge.
fn edge_constraints(vectors: &[ComplexMatrix; 5], edges: &BTreeSet<Edge>) -> DMatrix<f64> {
    let units: Vec<HermitianOperator> = (0..9).map(|k| HermParam::unit(3, k)).collect();
    let mut m = DMatrix::zeros(2 * edges.len(), 9);
    for (r, e) in edges.iter().enumerate() {
        for (k, b) in units.iter().enumerate() {
            let z = (vectors[e.0].adjoint() * b.matrix() * &vectors[e.1])[(0, 0)];
            m[(2 * r, k)] = z.re;
            m[(2 * r + 1, k)] = z.im;
        }
    }
    m
}

/// Orthonormal basis of Hermitian `a` with `<v_i|a|v_j> = 0` on every edge,
/// and whether the identity lies in it.
pub fn edge_solution_space(vectors: &[ComplexMatrix; 5], edges: &BTreeSet<Edge>) -> (Vec<HermitianOperator>, bool) {
    let (null, _) = linalg::real_nullspace(&edge_constraints(vectors, edges), tol::NULLSPACE);
    let candidates: Vec<ComplexMatrix> = null
        .column_iter()
        .map(|col| {
            HermParam {
                dim: 3,
                coords: col.iter().copied().collect(),
            }
            .to_operator()
            .into_matrix()
        })
        .collect();
    let (basis, identity_residual) = orthonormal_with_identity(3, &candidates);
    (basis, identity_residual <= tol::NONDISTURB)
}

struct Objective<'a> {
    vectors: &'a [ComplexMatrix; 5],
    basis: &'a [HermitianOperator],
    traces: Vec<f64>,
    trace_free: bool,
}

impl<'a> Objective<'a> {
    fn new(vectors: &'a [ComplexMatrix; 5], basis: &'a [HermitianOperator]) -> Self {
        let traces: Vec<f64> = basis.iter().map(|b| b.trace()).collect();
        let trace_free = traces.iter().map(|t| t * t).sum::<f64>().sqrt() < 1e-9;
        Objective {
            vectors,
            basis,
            traces,
            trace_free,
        }
    }

    fn operator(&self, x: &[f64]) -> ComplexMatrix {
        let mut a = ComplexMatrix::zeros(3, 3);
        for (xi, b) in x.iter().zip(self.basis) {
            a += b.matrix().scale(*xi);
        }
        a
    }

    /// Unnormalized `min(λ_min, min overlaps)`.
    fn raw(a: &ComplexMatrix, vectors: &[ComplexMatrix; 5]) -> f64 {
        let h = HermitianOperator::symmetrized(a.clone());
        let lmin = linalg::min_eigenvalue(&h).unwrap_or(f64::NEG_INFINITY);
        vectors
            .iter()
            .map(|v| (v.adjoint() * a * v)[(0, 0)].re)
            .fold(lmin, f64::min)
    }

    /// `x` is a unit vector of basis coefficients.
    fn value(&self, x: &[f64]) -> f64 {
        let a = self.operator(x);
        let raw = Self::raw(&a, self.vectors);
        if self.trace_free {
            return raw;
        }
        let t: f64 = x.iter().zip(&self.traces).map(|(xi, ti)| xi * ti).sum();
        if t <= 1e-9 {
            f64::NEG_INFINITY
        } else {
            raw / t
        }
    }

    fn normalized(&self, x: &[f64]) -> ComplexMatrix {
        let a = self.operator(x);
        if self.trace_free {
            a
        } else {
            let t = linalg::trace(&a).re;
            a.unscale(t)
        }
    }
}

/// Points of the unit sphere in `R^k` on a hyperspherical angle grid.
fn sphere_grid(k: usize, step: f64) -> Vec<Vec<f64>> {
    use std::f64::consts::{PI, TAU};
    match k {
        0 => vec![],
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let n = (TAU / step).ceil() as usize;
            (0..n)
                .map(|i| {
                    let t = i as f64 * TAU / n as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        _ => {
            let n = (PI / step).ceil() as usize;
            let inner = sphere_grid(k - 1, step);
            let mut out = Vec::new();
            for i in 0..=n {
                let t = i as f64 * PI / n as f64;
                let (s, co) = t.sin_cos();
                if i == 0 || i == n {
                    let mut p = vec![co];
                    p.extend(std::iter::repeat_n(0.0, k - 1));
                    out.push(p);
                    continue;
                }
                for y in &inner {
                    let mut p = vec![co];
                    p.extend(y.iter().map(|v| v * s));
                    out.push(p);
                }
            }
            out
        }
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

/// Compass search on the sphere, step halving down to `REFINE_STOP`.
fn refine(obj: &Objective, start: Vec<f64>) -> (Vec<f64>, f64) {
    let mut x = start;
    let mut fx = obj.value(&x);
    let mut h = GRID_STEP;
    let mut iterations = 0;
    while h > REFINE_STOP && iterations < 20_000 {
        iterations += 1;
        let mut improved = false;
        for i in 0..x.len() {
            for s in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += s * h;
                normalize(&mut y);
                let fy = obj.value(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (x, fx)
}

/// Maximize the objective over the space; returns the best normalized
/// operator and its value.
fn search(obj: &Objective, k: usize) -> Result<(ComplexMatrix, f64)> {
    if k > MAX_SEARCH_DIM {
        return Err(Error::Numerical(format!(
            "edge solution space has dimension {k}; the grid search handles at most {MAX_SEARCH_DIM}"
        )));
    }
    let mut scored: Vec<(f64, Vec<f64>)> = sphere_grid(k, GRID_STEP)
        .into_iter()
        .map(|x| (obj.value(&x), x))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (_, x) in scored.into_iter().take(if k == 1 { 2 } else { 4 }) {
        let (y, fy) = if k == 1 {
            let f = obj.value(&x);
            (x, f)
        } else {
            refine(obj, x)
        };
        if best.as_ref().is_none_or(|(_, fb)| fy > *fb) {
            best = Some((y, fy));
        }
    }
    let (x, f) = best.expect("non-empty grid");
    Ok((obj.normalized(&x), f))
}

/// Feasibility on arbitrary vectors and edge set.
pub fn case_feasibility_on(
    vectors: &[ComplexMatrix; 5],
    edges: &BTreeSet<Edge>,
    cycle_id: usize,
    tol: f64,
) -> Result<CaseResult> {
    let (basis, has_identity) = edge_solution_space(vectors, edges);
    let k = basis.len();
    let mut result = CaseResult {
        cycle_id,
        verdict: Verdict::Infeasible,
        margin: None,
        linear_dim: k,
        linear_space: basis.clone(),
        witness: None,
    };
    if k == 0 {
        return Ok(result);
    }
    if has_identity && k == 1 {
        result.verdict = Verdict::ScalarOnly;
        return Ok(result);
    }
    let obj = Objective::new(vectors, &basis);
    let (best, value) = if has_identity {
        // I/3 plus a small trace-free element of the space.
        let b = basis[1].matrix();
        let op_norm = linalg::frobenius(b);
        let a = identity(3).unscale(3.0) + b.scale(1.0 / (6.0 * op_norm));
        let a = a.unscale(linalg::trace(&a).re);
        let v = Objective::raw(&a, vectors);
        (a, v)
    } else {
        search(&obj, k)?
    };
    result.margin = Some(value);
    if value > tol {
        result.verdict = Verdict::WitnessFound;
        result.witness = Some(HermitianOperator::symmetrized(best));
    }
    Ok(result)
}

/// Side-A feasibility for cycle `O_cycle_id`.
pub fn case_feasibility(u: &UpbInstance, cycle_id: usize, tol: f64) -> Result<CaseResult> {
    let cyc = cycle(cycle_id).ok_or_else(|| Error::UnknownLabel(format!("cycle {cycle_id} (expected 1..12)")))?;
    case_feasibility_on(&u.alphas, &cyc.edges, cycle_id, tol)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CaseNumber {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl CaseNumber {
    pub const ALL: [CaseNumber; 8] = [
        CaseNumber::I,
        CaseNumber::II,
        CaseNumber::III,
        CaseNumber::IV,
        CaseNumber::V,
        CaseNumber::VI,
        CaseNumber::VII,
        CaseNumber::VIII,
    ];

    pub fn from_index(i: usize) -> Result<CaseNumber> {
        Self::ALL
            .get(i.wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::UnknownLabel(format!("case {i} (expected 1..8)")))
    }

    /// The cycle analysed directly.
    pub fn cycle_id(self) -> usize {
        [1, 2, 4, 6, 7, 8, 10, 12][self as usize]
    }

    /// Cycles covered: the direct one and, where present, its image under
    /// the `|0> <-> |1>` exchange.
    pub fn mapped_cycles(self) -> Vec<usize> {
        let j = self.cycle_id();
        if [2, 4, 8, 10].contains(&j) {
            vec![j, j + 1]
        } else {
            vec![j]
        }
    }

    pub fn for_cycle(cycle_id: usize) -> Result<(CaseNumber, bool)> {
        for case in Self::ALL {
            let m = case.mapped_cycles();
            if m[0] == cycle_id {
                return Ok((case, false));
            }
            if m.get(1) == Some(&cycle_id) {
                return Ok((case, true));
            }
        }
        Err(Error::UnknownLabel(format!("cycle {cycle_id} (expected 1..12)")))
    }
}

/// `a|α_0> = r[col0.0] * col0.1`, `a|α_1> = r[col1.0] * col1.1`, the
/// remaining upper entries filled by hermiticity and `a_22 = r_3`. Only the
/// listed extra edges are imposed, matching the hand derivation.
struct CaseForm {
    col0: (usize, [f64; 3]),
    col1: (usize, [f64; 3]),
    extra_edges: Vec<(usize, usize)>,
    /// Normalizer `m(r)` of the sign argument.
    m: fn(&[f64; 3]) -> f64,
    /// Two quantities that are non-negative for every PSD `a`.
    q: [fn(&ComplexMatrix) -> f64; 2],
}

fn entry(a: &ComplexMatrix, i: usize, j: usize) -> f64 {
    a[(i, j)].re
}

fn minor(a: &ComplexMatrix, i: usize, j: usize) -> f64 {
    entry(a, i, i) * entry(a, j, j) - entry(a, i, j) * entry(a, j, i)
}

fn offdiag_square(a: &ComplexMatrix) -> f64 {
    entry(a, 0, 1) * entry(a, 1, 0)
}

fn case_form(case: CaseNumber, theta: f64, gamma: f64) -> CaseForm {
    let (st, ct) = theta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    let n2 = cg * cg + sg * sg * ct * ct;
    let alpha2 = [ct, 0.0, st];
    let alpha3 = [sg * st, cg, -sg * ct];
    let alpha2_perp = [st, 0.0, -ct];
    let n_alpha4 = [0.0, sg * ct, cg];
    let n_alpha4_perp = [0.0, cg, -sg * ct];
    // Spans the complement of α_2, α_3 and of α_3, α_4 respectively.
    let perp23 = [-cg * st, sg, cg * ct];
    let perp34 = [n2, -sg * st * cg, sg * sg * st * ct];
    let e0 = [1.0, 0.0, 0.0];
    let e1 = [0.0, 1.0, 0.0];
    let r1r2 = |r: &[f64; 3]| r[0] * r[1];
    let r1sq = |r: &[f64; 3]| r[0] * r[0];
    match case {
        CaseNumber::I => CaseForm {
            col0: (0, e0),
            col1: (1, e1),
            extra_edges: vec![(2, 3), (3, 4)],
            m: r1sq,
            q: [|a| entry(a, 0, 0), |a| entry(a, 1, 1)],
        },
        CaseNumber::II => CaseForm {
            col0: (0, alpha2),
            col1: (1, e1),
            extra_edges: vec![(2, 4)],
            m: |r| r[0],
            q: [|a| entry(a, 0, 0), |a| entry(a, 2, 2)],
        },
        CaseNumber::III => CaseForm {
            col0: (0, alpha2_perp),
            col1: (1, n_alpha4),
            extra_edges: vec![(2, 4)],
            m: r1r2,
            q: [|a| minor(a, 0, 1), |a| minor(a, 0, 2)],
        },
        CaseNumber::IV => CaseForm {
            col0: (0, alpha2_perp),
            col1: (1, n_alpha4_perp),
            extra_edges: vec![(3, 4)],
            m: r1r2,
            q: [|a| minor(a, 0, 1), |a| minor(a, 1, 2)],
        },
        CaseNumber::V => CaseForm {
            col0: (0, perp23),
            col1: (1, perp34),
            extra_edges: vec![],
            m: r1r2,
            q: [offdiag_square, |a| minor(a, 0, 1)],
        },
        CaseNumber::VI => CaseForm {
            col0: (0, alpha3),
            col1: (1, perp34),
            extra_edges: vec![],
            m: r1r2,
            q: [offdiag_square, |a| minor(a, 0, 1)],
        },
        CaseNumber::VII => CaseForm {
            col0: (1, perp34),
            col1: (0, alpha3),
            extra_edges: vec![],
            m: r1sq,
            q: [|a| minor(a, 0, 1), offdiag_square],
        },
        CaseNumber::VIII => CaseForm {
            col0: (1, perp34),
            col1: (0, perp23),
            extra_edges: vec![(2, 4)],
            m: r1sq,
            q: [|a| entry(a, 1, 1) * entry(a, 2, 2), offdiag_square],
        },
    }
}

impl CaseForm {
    /// The (not yet Hermitian) matrix for multipliers `r`.
    fn matrix(&self, r: &[f64; 3]) -> ComplexMatrix {
        let (i0, v0) = self.col0;
        let (i1, v1) = self.col1;
        let mut a = DMatrix::<f64>::zeros(3, 3);
        for k in 0..3 {
            a[(k, 0)] = r[i0] * v0[k];
            a[(k, 1)] = r[i1] * v1[k];
        }
        a[(0, 2)] = a[(2, 0)];
        a[(1, 2)] = a[(2, 1)];
        a[(2, 2)] = r[2];
        a.map(|x| c(x, 0.0))
    }

    fn unit_matrices(&self) -> [ComplexMatrix; 3] {
        std::array::from_fn(|k| {
            let mut r = [0.0; 3];
            r[k] = 1.0;
            self.matrix(&r)
        })
    }

    /// Linear conditions on `r`: the hermiticity of the top-left block and the
    /// extra edges.
    fn constraints(&self, vectors: &[ComplexMatrix; 5]) -> DMatrix<f64> {
        let units = self.unit_matrices();
        let rows = 1 + self.extra_edges.len();
        let mut m = DMatrix::zeros(rows, 3);
        for (k, u) in units.iter().enumerate() {
            m[(0, k)] = (u[(0, 1)] - u[(1, 0)]).re;
            for (row, &(i, j)) in self.extra_edges.iter().enumerate() {
                m[(row + 1, k)] = (vectors[i].adjoint() * u * &vectors[j])[(0, 0)].re;
            }
        }
        m
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedFormResult {
    pub case: CaseNumber,
    pub cycle_id: usize,
    pub mapped_cycles: Vec<usize>,
    /// Basis of admissible `(r_1, r_2, r_3)`.
    pub free_params: Vec<[f64; 3]>,
    /// Largest violation, over the family basis, of hermiticity and of every
    /// edge constraint the derivation relies on.
    pub algebra_residual: f64,
    /// `q_i / m` for the two sign quantities; their product is negative
    /// exactly when the sign argument forces `m = 0`.
    pub kappas: Option<[f64; 2]>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub family: Vec<HermitianOperator>,
}

impl ClosedFormResult {
    /// Distance of `h` (Frobenius-normalized) from the span of the family.
    pub fn family_residual(&self, h: &HermitianOperator) -> f64 {
        let ops: Vec<ComplexMatrix> = self.family.iter().map(|f| f.matrix().clone()).collect();
        let (basis, _) = orthonormal_with_identity(3, &ops);
        let mut r = h.matrix().unscale(linalg::frobenius(h.matrix()));
        let start = r.clone();
        for b in &basis {
            r -= b.matrix().scale(linalg::hs_inner(b.matrix(), &start));
        }
        linalg::frobenius(&r)
    }
}

/// Replay the hand derivation for one case at the angles of `u` (side A,
/// phases already removed).
pub fn closed_form_case(u: &UpbInstance, case: CaseNumber) -> Result<ClosedFormResult> {
    if u.params.phi_a != 0.0 {
        return Err(Error::Precondition("closed_form_case needs phi_A = 0; call reduce_phases first".into()));
    }
    let form = case_form(case, u.params.theta_a, u.params.gamma_a);
    let vectors = &u.alphas;
    let (null, _) = linalg::real_nullspace(&form.constraints(vectors), tol::NULLSPACE);
    let free_params: Vec<[f64; 3]> = null.column_iter().map(|col| [col[0], col[1], col[2]]).collect();

    let cyc: Cycle = cycle(case.cycle_id()).expect("fixed table");
    let mut used: BTreeSet<Edge> = cyc
        .edges
        .iter()
        .copied()
        .filter(|e| e.0 <= 1 || e.1 <= 1)
        .collect();
    used.extend(form.extra_edges.iter().map(|&(i, j)| Edge::new(i, j)));

    let mut algebra_residual: f64 = 0.0;
    let mut family = Vec::new();
    for r in &free_params {
        let a = form.matrix(r);
        algebra_residual = algebra_residual.max(linalg::max_abs(&(&a - a.adjoint())));
        for e in &used {
            let z = (vectors[e.0].adjoint() * &a * &vectors[e.1])[(0, 0)];
            algebra_residual = algebra_residual.max(z.norm());
        }
        family.push(HermitianOperator::symmetrized(a));
    }

    let mut result = ClosedFormResult {
        case,
        cycle_id: case.cycle_id(),
        mapped_cycles: case.mapped_cycles(),
        free_params: free_params.clone(),
        algebra_residual,
        kappas: None,
        verdict: Verdict::Inconclusive,
        family,
    };
    if algebra_residual > 1e-9 {
        return Ok(result);
    }

    if case == CaseNumber::I {
        // A single direction with r_1 = r_2 = r_3 means a ∝ I.
        let scalar = free_params.len() == 1 && {
            let r = free_params[0];
            (r[0] - r[2]).abs() < 1e-9 * r[2].abs().max(1.0) && (r[1] - r[2]).abs() < 1e-9 * r[2].abs().max(1.0)
        };
        if scalar {
            result.verdict = Verdict::ScalarOnly;
        }
        return Ok(result);
    }

    // Evaluate q_i / m at several family points and require consistency.
    let mut points = free_params.clone();
    if free_params.len() >= 2 {
        let (p, q) = (free_params[0], free_params[1]);
        points.push(std::array::from_fn(|k| p[k] + 0.5 * q[k]));
        points.push(std::array::from_fn(|k| p[k] - 2.0 * q[k]));
    }
    let mut samples: Vec<[f64; 2]> = Vec::new();
    for r in &points {
        let m = (form.m)(r);
        if m.abs() < 1e-9 {
            continue;
        }
        let a = form.matrix(r);
        samples.push([(form.q[0])(&a) / m, (form.q[1])(&a) / m]);
    }
    let Some(first) = samples.first().copied() else {
        return Ok(result);
    };
    let consistent = samples
        .iter()
        .all(|s| (0..2).all(|i| (s[i] - first[i]).abs() <= 1e-8 * (1.0 + first[i].abs())));
    if consistent {
        result.kappas = Some(first);
        if first[0] * first[1] < -1e-14 {
            result.verdict = Verdict::Infeasible;
        }
    }
    Ok(result)
}

/// Closed-form verdict for any cycle: the direct case, or the swapped
/// instance for the partner cycles.
pub fn closed_form_for_cycle(u: &UpbInstance, cycle_id: usize) -> Result<ClosedFormResult> {
    let (case, swapped) = CaseNumber::for_cycle(cycle_id)?;
    if swapped {
        // The partner cycle at these angles is the direct cycle at the
        // swapped angles, with the two bases exchanged.
        let back = swap_basis(&u.params)?;
        let v = generate(&back)?;
        closed_form_case(&v, case)
    } else {
        closed_form_case(u, case)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SideBRow {
    /// Side-A cycle whose verdict was scalar-only.
    pub paired_with: usize,
    /// Complement cycle on the β labels.
    pub beta_cycle: usize,
    /// Same edge set after renaming β labels to their α-family labels.
    pub as_alpha_cycle: usize,
    pub verdict: Verdict,
    pub linear_dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem4Report {
    pub params: UpbParams,
    pub certified: bool,
    pub cycles: Vec<CaseResult>,
    pub side_b: Vec<SideBRow>,
    /// Largest margin among infeasible cycles.
    pub worst_margin: Option<f64>,
    pub chi: f64,
    pub min_overlap_bound: f64,
}

pub fn theorem4_verify(params: &UpbParams, tol: f64) -> Result<Theorem4Report> {
    let u = reduce_phases(&generate(params)?);
    let mut cycles = Vec::with_capacity(12);
    for id in 1..=12 {
        cycles.push(case_feasibility(&u, id, tol)?);
    }
    let mut side_b = Vec::new();
    for row in cycles.iter().filter(|r| r.verdict == Verdict::ScalarOnly) {
        let complement = cycle(row.cycle_id).expect("fixed table").complement_id();
        let cyc = cycle(complement).expect("fixed table");
        let res = case_feasibility_on(&u.betas, &cyc.edges, complement, tol)?;
        let as_alpha = super::cycle_id_of(&cyc.relabeled(&BETA_AS_ALPHA)).expect("relabeling keeps cycles");
        side_b.push(SideBRow {
            paired_with: row.cycle_id,
            beta_cycle: complement,
            as_alpha_cycle: as_alpha,
            verdict: res.verdict,
            linear_dim: res.linear_dim,
        });
    }
    let certified = cycles.iter().all(|r| r.verdict.is_negative_for_discrimination())
        && side_b.iter().all(|r| r.verdict == Verdict::ScalarOnly);
    let worst_margin = cycles
        .iter()
        .filter(|r| r.verdict == Verdict::Infeasible)
        .filter_map(|r| r.margin)
        .reduce(f64::max);
    let chi = 0.22;
    Ok(Theorem4Report {
        params: *params,
        certified,
        cycles,
        side_b,
        worst_margin,
        chi,
        min_overlap_bound: 1.0 - 4.0 * chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::stream;

    fn instance(seed: u64, i: u64) -> UpbInstance {
        reduce_phases(&generate(&UpbParams::random(&mut stream(seed, i))).unwrap())
    }

    #[test]
    fn sphere_grid_points_are_unit() {
        for k in 1..=3 {
            for p in sphere_grid(k, 0.3) {
                let n: f64 = p.iter().map(|v| v * v).sum();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_cycle_is_scalar_only_others_infeasible() {
        let u = instance(3, 0);
        for id in 1..=12 {
            let r = case_feasibility(&u, id, tol::NONDISTURB).unwrap();
            if id == 1 {
                assert_eq!(r.verdict, Verdict::ScalarOnly);
                assert_eq!(r.linear_dim, 1);
            } else {
                assert_eq!(r.verdict, Verdict::Infeasible, "cycle {id}");
                assert!(r.margin.unwrap() <= 1e-7);
            }
        }
    }

    #[test]
    fn identity_plus_direction_gives_witness() {
        // Two edges only: the space contains I and more.
        let u = instance(3, 1);
        let edges: BTreeSet<Edge> = [Edge(0, 1), Edge(1, 2)].into_iter().collect();
        let r = case_feasibility_on(&u.alphas, &edges, 0, tol::NONDISTURB).unwrap();
        assert_eq!(r.verdict, Verdict::WitnessFound);
        let w = r.witness.unwrap();
        assert!(linalg::is_psd(&w, 1e-12).unwrap());
    }

    #[test]
    fn closed_form_matches_hand_derivation() {
        let u = instance(4, 0);
        let ct = u.params.theta_a.cos();
        let (sg, cg) = u.params.gamma_a.sin_cos();

        let one = closed_form_case(&u, CaseNumber::I).unwrap();
        assert_eq!(one.verdict, Verdict::ScalarOnly);

        let two = closed_form_case(&u, CaseNumber::II).unwrap();
        let [k1, k2] = two.kappas.unwrap();
        assert!((k1 - ct).abs() < 1e-10 && (k2 + ct).abs() < 1e-10);

        let five = closed_form_case(&u, CaseNumber::V).unwrap();
        let [_, k2] = five.kappas.unwrap();
        assert!((k2 + sg * ct * ct).abs() < 1e-10);

        let six = closed_form_case(&u, CaseNumber::VI).unwrap();
        assert!((six.kappas.unwrap()[1] + cg).abs() < 1e-10);

        let seven = closed_form_case(&u, CaseNumber::VII).unwrap();
        assert!((seven.kappas.unwrap()[0] + 1.0).abs() < 1e-10);

        let eight = closed_form_case(&u, CaseNumber::VIII).unwrap();
        assert!((eight.kappas.unwrap()[0] + sg * sg * ct * ct).abs() < 1e-10);

        for case in CaseNumber::ALL {
            let r = closed_form_case(&u, case).unwrap();
            assert!(r.algebra_residual < 1e-12, "{case:?}");
            assert!(r.verdict.is_negative_for_discrimination(), "{case:?}");
        }
    }

    #[test]
    fn numeric_space_lies_in_closed_form_family() {
        let u = instance(4, 1);
        for case in CaseNumber::ALL {
            let cf = closed_form_case(&u, case).unwrap();
            let num = case_feasibility(&u, case.cycle_id(), tol::NONDISTURB).unwrap();
            for b in &num.linear_space {
                assert!(cf.family_residual(b) < 1e-8, "{case:?}");
            }
        }
    }

    #[test]
    fn closed_form_requires_zero_phase() {
        let u = generate(&UpbParams::new(0.5, 0.6, 0.3, 0.7, 0.8, 0.0)).unwrap();
        assert!(matches!(closed_form_case(&u, CaseNumber::II), Err(Error::Precondition(_))));
    }

    #[test]
    fn theorem4_certifies_quarter_angles() {
        let q = std::f64::consts::FRAC_PI_4;
        let rep = theorem4_verify(&UpbParams::new(q, q, 0.0, q, q, 0.0), tol::NONDISTURB).unwrap();
        assert!(rep.certified);
        assert_eq!(rep.cycles[0].verdict, Verdict::ScalarOnly);
        assert_eq!(rep.side_b.len(), 1);
        assert_eq!(rep.side_b[0].beta_cycle, 7);
        assert_eq!(rep.side_b[0].as_alpha_cycle, 1);
    }
}
