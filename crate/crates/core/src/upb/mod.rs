//! Two-qutrit unextendible product bases and the certification that no
//! non-trivial product operator `a (x) b` is non-disturbing for them.

mod cases;
mod graph;

pub use cases::{
    case_feasibility, case_feasibility_on, closed_form_case, closed_form_for_cycle, edge_solution_space,
    theorem4_verify, CaseNumber, CaseResult, ClosedFormResult, SideBRow, Theorem4Report, Verdict,
};
pub use graph::{cycle, cycle_id_of, enumerate_cycles, orth_graph, Cycle, Edge, OrthGraph, CYCLES};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, kron, ComplexMatrix};
use crate::nondisturb::Side;

/// Smallest admissible `|sin|`/`|cos|` of θ and γ for `generate`.
pub const VALIDITY_FLOOR: f64 = 1e-6;

/// Floor used when sampling random parameters.
pub const SAMPLING_FLOOR: f64 = 0.05;

/// `β_j` is the α-family vector with label `BETA_AS_ALPHA[j]`, built from
/// Bob's angles.
pub const BETA_AS_ALPHA: [usize; 5] = [1, 3, 0, 2, 4];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpbParams {
    #[serde(rename = "thetaA")]
    pub theta_a: f64,
    #[serde(rename = "gammaA")]
    pub gamma_a: f64,
    #[serde(rename = "phiA")]
    pub phi_a: f64,
    #[serde(rename = "thetaB")]
    pub theta_b: f64,
    #[serde(rename = "gammaB")]
    pub gamma_b: f64,
    #[serde(rename = "phiB")]
    pub phi_b: f64,
}

/// Angles of one party.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angles {
    pub theta: f64,
    pub gamma: f64,
    pub phi: f64,
}

impl Angles {
    pub fn norm(&self) -> f64 {
        let (sg, cg) = self.gamma.sin_cos();
        (cg * cg + sg * sg * self.theta.cos().powi(2)).sqrt()
    }

    fn check(&self, party: &str, floor: f64) -> Result<()> {
        for (name, v) in [
            ("sin theta", self.theta.sin()),
            ("cos theta", self.theta.cos()),
            ("sin gamma", self.gamma.sin()),
            ("cos gamma", self.gamma.cos()),
        ] {
            if !v.is_finite() || v.abs() < floor {
                return Err(Error::ParameterDomain(format!(
                    "{name}{party} = {v:e} is below the validity floor {floor:e}"
                )));
            }
        }
        if !self.phi.is_finite() {
            return Err(Error::ParameterDomain(format!("phi{party} is not finite")));
        }
        Ok(())
    }

    /// The five α-family vectors for these angles.
    pub fn alpha_family(&self) -> [ComplexMatrix; 5] {
        let (st, ct) = self.theta.sin_cos();
        let (sg, cg) = self.gamma.sin_cos();
        let ph = c(self.phi.cos(), self.phi.sin());
        let n = self.norm();
        let v = |x: [num_complex::Complex64; 3]| ComplexMatrix::from_column_slice(3, 1, &x);
        let zero = c(0.0, 0.0);
        [
            v([c(1.0, 0.0), zero, zero]),
            v([zero, c(1.0, 0.0), zero]),
            v([c(ct, 0.0), zero, c(st, 0.0)]),
            v([c(sg * st, 0.0), ph * cg, c(-sg * ct, 0.0)]),
            v([zero, ph * (sg * ct / n), c(cg / n, 0.0)]),
        ]
    }
}

impl UpbParams {
    pub fn new(theta_a: f64, gamma_a: f64, phi_a: f64, theta_b: f64, gamma_b: f64, phi_b: f64) -> Self {
        UpbParams {
            theta_a,
            gamma_a,
            phi_a,
            theta_b,
            gamma_b,
            phi_b,
        }
    }

    pub fn side(&self, side: Side) -> Angles {
        match side {
            Side::B => Angles {
                theta: self.theta_b,
                gamma: self.gamma_b,
                phi: self.phi_b,
            },
            _ => Angles {
                theta: self.theta_a,
                gamma: self.gamma_a,
                phi: self.phi_a,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.side(Side::A).check("_A", VALIDITY_FLOOR)?;
        self.side(Side::B).check("_B", VALIDITY_FLOOR)
    }

    pub fn with_zero_phases(&self) -> UpbParams {
        UpbParams {
            phi_a: 0.0,
            phi_b: 0.0,
            ..*self
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// θ and γ uniform over the part of `(0, π/2)` where all sines and
    /// cosines are at least `SAMPLING_FLOOR`; φ uniform on `[0, 2π)`.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let lo = SAMPLING_FLOOR.asin();
        let hi = SAMPLING_FLOOR.acos();
        let mut angle = || rng.random_range(lo..hi);
        let (ta, ga, tb, gb) = (angle(), angle(), angle(), angle());
        let pa = rng.random_range(0.0..std::f64::consts::TAU);
        let pb = rng.random_range(0.0..std::f64::consts::TAU);
        UpbParams::new(ta, ga, pa, tb, gb, pb)
    }
}

#[derive(Clone, Debug)]
pub struct UpbInstance {
    pub params: UpbParams,
    pub alphas: [ComplexMatrix; 5],
    pub betas: [ComplexMatrix; 5],
    /// `α_i (x) β_i`.
    pub psis: [ComplexMatrix; 5],
}

impl UpbInstance {
    pub fn vectors(&self, side: Side) -> &[ComplexMatrix; 5] {
        match side {
            Side::B => &self.betas,
            _ => &self.alphas,
        }
    }

    /// `max |<psi_i|psi_j> - δ_ij|`.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, p) in self.psis.iter().enumerate() {
            for (j, q) in self.psis.iter().enumerate() {
                let g = (p.adjoint() * q)[(0, 0)];
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - c(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn state_set(&self) -> crate::states::StateSet {
        let states = (0..5)
            .map(|i| {
                crate::states::BipartiteState::pure_product(format!("psi{i}"), &self.alphas[i], &self.betas[i])
                    .expect("unit product vectors")
            })
            .collect();
        crate::states::StateSet::new(3, 3, states).expect("five distinct labels")
    }
}

pub fn generate(params: &UpbParams) -> Result<UpbInstance> {
    params.validate()?;
    let alphas = params.side(Side::A).alpha_family();
    let family_b = params.side(Side::B).alpha_family();
    let betas: [ComplexMatrix; 5] = std::array::from_fn(|j| family_b[BETA_AS_ALPHA[j]].clone());
    let psis = std::array::from_fn(|i| kron(&alphas[i], &betas[i]));
    Ok(UpbInstance {
        params: *params,
        alphas,
        betas,
        psis,
    })
}

/// Smallest singular value over all 3-subsets of one side's vectors.
pub fn min_triple_singular_value(vectors: &[ComplexMatrix; 5]) -> f64 {
    let mut worst = f64::INFINITY;
    for i in 0..5 {
        for j in i + 1..5 {
            for k in j + 1..5 {
                let m = ComplexMatrix::from_columns(&[
                    vectors[i].column(0),
                    vectors[j].column(0),
                    vectors[k].column(0),
                ]);
                let sv = m.singular_values();
                worst = worst.min(sv.min());
            }
        }
    }
    worst
}

/// Every three vectors on each side span `C^3`.
pub fn check_unextendible(u: &UpbInstance) -> bool {
    min_triple_singular_value(&u.alphas) > 1e-8 && min_triple_singular_value(&u.betas) > 1e-8
}

/// Absorb `e^{iφ}` into the local `|1>` on both sides and strip the global
/// phase each vector picks up. The result equals `generate` at φ = 0.
pub fn reduce_phases(u: &UpbInstance) -> UpbInstance {
    let fix = |vs: &[ComplexMatrix; 5], phi: f64| -> [ComplexMatrix; 5] {
        let rot = c(phi.cos(), -phi.sin());
        std::array::from_fn(|k| {
            let mut v = vs[k].clone();
            v[(1, 0)] *= rot;
            let lead = v.iter().copied().find(|z| z.norm() > 1e-12).unwrap_or(c(1.0, 0.0));
            let phase = lead / lead.norm();
            v.map(|z| z / phase)
        })
    };
    let alphas = fix(&u.alphas, u.params.phi_a);
    let betas = fix(&u.betas, u.params.phi_b);
    let psis = std::array::from_fn(|i| kron(&alphas[i], &betas[i]));
    UpbInstance {
        params: u.params.with_zero_phases(),
        alphas,
        betas,
        psis,
    }
}

/// Angles of the instance seen in the local basis with `|0>` and `|1>`
/// exchanged on Alice's side (Bob's angles are kept). Under the exchange
/// the vectors relabel as 0 <-> 1, 2 <-> 4.
///
/// Recovery uses `atan2` on the transformed sines and cosines, all of which
/// are positive when θ and γ lie in `(0, π/2)`; anything else is rejected.
pub fn swap_basis(params: &UpbParams) -> Result<UpbParams> {
    let (st, ct) = params.theta_a.sin_cos();
    let (sg, cg) = params.gamma_a.sin_cos();
    let n = params.side(Side::A).norm();
    let (st2, ct2) = (cg / n, sg * ct / n);
    let (sg2, cg2) = (n, sg * st);
    if [st2, ct2, sg2, cg2].iter().any(|&x| !(x > 0.0)) {
        return Err(Error::ParameterDomain(
            "swap_basis needs theta_A and gamma_A in (0, pi/2)".into(),
        ));
    }
    Ok(UpbParams {
        theta_a: st2.atan2(ct2),
        gamma_a: sg2.atan2(cg2),
        ..*params
    })
}

/// Vertex relabeling induced by exchanging `|0>` and `|1>`.
pub const SWAP_RELABEL: [usize; 5] = [1, 0, 4, 3, 2];

/// `|0> <-> |1>` on a 3-vector.
pub fn swap01(v: &ComplexMatrix) -> ComplexMatrix {
    let mut w = v.clone();
    w.swap_rows(0, 1);
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::random::stream;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn gram_is_identity_for_random_params() {
        for i in 0..50 {
            let p = UpbParams::random(&mut stream(5, i));
            let u = generate(&p).unwrap();
            assert!(u.gram_defect() < 1e-10);
            assert!(check_unextendible(&u));
        }
    }

    #[test]
    fn vanishing_sine_is_rejected() {
        let p = UpbParams::new(0.0, 0.5, 0.0, 0.7, 0.5, 0.0);
        assert!(matches!(generate(&p), Err(Error::ParameterDomain(_))));
        let p = UpbParams::new(0.7, 0.5, 0.0, 0.7, std::f64::consts::FRAC_PI_2, 0.0);
        assert!(matches!(generate(&p), Err(Error::ParameterDomain(_))));
    }

    #[test]
    fn quarter_angles_are_real_with_known_norm() {
        let p = UpbParams::new(FRAC_PI_4, FRAC_PI_4, 0.0, FRAC_PI_4, FRAC_PI_4, 0.0);
        assert!((p.side(Side::A).norm() - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let u = generate(&p).unwrap();
        for v in u.alphas.iter().chain(&u.betas) {
            assert!(v.iter().all(|z| z.im == 0.0));
        }
    }

    #[test]
    fn dependent_triple_breaks_unextendibility() {
        let mut u = generate(&UpbParams::new(0.6, 0.8, 0.0, 0.9, 0.4, 0.0)).unwrap();
        u.alphas[2] = u.alphas[0].clone();
        assert!(!check_unextendible(&u));
    }

    #[test]
    fn phase_reduction_matches_zero_phase_generation() {
        for i in 0..20 {
            let p = UpbParams::random(&mut stream(9, i));
            let u = generate(&p).unwrap();
            let r = reduce_phases(&u);
            let z = generate(&p.with_zero_phases()).unwrap();
            for k in 0..5 {
                assert!(max_abs(&(&r.alphas[k] - &z.alphas[k])) < 1e-12);
                assert!(max_abs(&(&r.betas[k] - &z.betas[k])) < 1e-12);
                for l in 0..5 {
                    let before = (u.alphas[k].adjoint() * &u.alphas[l])[(0, 0)].norm();
                    let after = (r.alphas[k].adjoint() * &r.alphas[l])[(0, 0)].norm();
                    assert!((before - after).abs() < 1e-12);
                }
            }
            assert!(check_unextendible(&r));
        }
    }

    #[test]
    fn swap_relabels_vectors() {
        for i in 0..20 {
            let p = UpbParams::random(&mut stream(13, i)).with_zero_phases();
            let u = generate(&p).unwrap();
            let s = generate(&swap_basis(&p).unwrap()).unwrap();
            for k in 0..5 {
                let expected = swap01(&u.alphas[SWAP_RELABEL[k]]);
                assert!(max_abs(&(&s.alphas[k] - &expected)) < 1e-10, "sample {i} vector {k}");
            }
            let back = swap_basis(&swap_basis(&p).unwrap()).unwrap();
            assert!((back.theta_a - p.theta_a).abs() < 1e-10);
            assert!((back.gamma_a - p.gamma_a).abs() < 1e-10);
        }
    }

    #[test]
    fn swap_at_quarter_angles() {
        let p = UpbParams::new(FRAC_PI_4, FRAC_PI_4, 0.0, 1.0, 1.0, 0.0);
        let s = swap_basis(&p).unwrap();
        assert!((s.theta_a.sin() - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn params_json_names() {
        let p = UpbParams::from_json_str(r#"{"thetaA":0.5,"gammaA":0.6,"phiA":0,"thetaB":0.7,"gammaB":0.8,"phiB":1}"#)
            .unwrap();
        assert_eq!(p.gamma_b, 0.8);
        assert!(serde_json::to_string(&p).unwrap().contains("\"phiB\":1.0"));
    }
}
