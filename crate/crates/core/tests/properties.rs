use finite_locc::linalg::{column_space, eig_hermitian, kron, HermitianOperator};
use finite_locc::nondisturb::{is_nondisturbing, solve_local_space, HermParam, Side};
use finite_locc::random::{gaussian_matrix, hermitian, isometry, product_refinement_set, psd, stream};
use finite_locc::upb::{case_feasibility, generate, orth_graph, swap_basis, UpbParams};
use proptest::prelude::*;

fn angle() -> impl Strategy<Value = f64> {
    0.05..(std::f64::consts::FRAC_PI_2 - 0.05)
}

fn phase() -> impl Strategy<Value = f64> {
    0.0..std::f64::consts::TAU
}

fn params() -> impl Strategy<Value = UpbParams> {
    (angle(), angle(), phase(), angle(), angle(), phase())
        .prop_map(|(ta, ga, pa, tb, gb, pb)| UpbParams::new(ta, ga, pa, tb, gb, pb))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_mixed_product(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = stream(seed, 0);
        let (a, c) = (gaussian_matrix(&mut rng, da, da), gaussian_matrix(&mut rng, da, da));
        let (b, d) = (gaussian_matrix(&mut rng, db, db), gaussian_matrix(&mut rng, db, db));
        let lhs = kron(&a, &b) * kron(&c, &d);
        let rhs = kron(&(&a * &c), &(&b * &d));
        prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + a.norm() * b.norm() * c.norm() * d.norm()));
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), d in 1usize..10) {
        let m = hermitian(&mut stream(seed, 0), d);
        let spectrum = eig_hermitian(&m).unwrap();
        prop_assert_eq!(spectrum.groups.iter().map(|g| g.multiplicity).sum::<usize>(), d);
        prop_assert!((spectrum.reconstruct() - m.matrix()).norm() < 1e-9 * (1.0 + m.matrix().norm()));
    }

    #[test]
    fn column_space_is_an_orthonormal_range(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9, rank in 1usize..9) {
        let mut rng = stream(seed, 0);
        let r = rank.min(rows).min(cols);
        let m = gaussian_matrix(&mut rng, rows, r) * gaussian_matrix(&mut rng, r, cols);
        let q = column_space(&m, 1e-9);
        prop_assert_eq!(q.sub_dim(), r);
        let gram = q.matrix().adjoint() * q.matrix();
        prop_assert!((gram - nalgebra::DMatrix::identity(r, r)).norm() < 1e-10);
        prop_assert!((q.projector().matrix() * &m - &m).norm() < 1e-9 * (1.0 + m.norm()));
    }

    #[test]
    fn complement_of_a_projector_is_orthogonal(seed in any::<u64>(), d in 2usize..10, k in 1usize..9) {
        let h = isometry(&mut stream(seed, 0), d, k.min(d - 1));
        let comp = column_space(&(nalgebra::DMatrix::identity(d, d) - h.projector().matrix()), 1e-9);
        prop_assert_eq!(comp.sub_dim() + h.sub_dim(), d);
        prop_assert!((h.matrix().adjoint() * comp.matrix()).norm() < 1e-10);
    }

    #[test]
    fn herm_param_round_trip(seed in any::<u64>(), d in 1usize..6) {
        let m = hermitian(&mut stream(seed, 0), d);
        let p = HermParam::from_operator(&m);
        prop_assert_eq!(p.coords.len(), d * d);
        prop_assert!((p.to_operator().matrix() - m.matrix()).norm() < 1e-14);
    }

    #[test]
    fn identity_never_disturbs_a_refinement_set(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let set = product_refinement_set(&mut stream(seed, 0), da, db);
        prop_assert!(is_nondisturbing(&HermitianOperator::identity(da * db), &set, 1e-8).unwrap());
        for side in [Side::A, Side::B] {
            prop_assert!(solve_local_space(&set, side).contains_identity());
        }
    }

    #[test]
    fn upb_gram_matrix_is_identity(p in params()) {
        let u = generate(&p).unwrap();
        prop_assert!(u.gram_defect() < 1e-10);
    }

    #[test]
    fn full_rank_psd_has_degree_at_most_two(p in params(), seed in any::<u64>()) {
        let u = generate(&p).unwrap();
        let a = psd(&mut stream(seed, 0), 3, 3);
        prop_assert!(orth_graph(Side::A, &u.alphas, &a, 1e-10).max_degree() <= 2);
    }

    #[test]
    fn swap_is_an_involution_and_pairs_cycles(p in params()) {
        let p = p.with_zero_phases();
        let twice = swap_basis(&swap_basis(&p).unwrap()).unwrap();
        for (x, y) in [(p.theta_a, twice.theta_a), (p.gamma_a, twice.gamma_a), (p.theta_b, twice.theta_b), (p.gamma_b, twice.gamma_b)] {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let u = generate(&p).unwrap();
        let s = generate(&swap_basis(&p).unwrap()).unwrap();
        for j in [2, 4, 8, 10] {
            let here = case_feasibility(&u, j, 1e-8).unwrap().verdict;
            let there = case_feasibility(&s, j + 1, 1e-8).unwrap().verdict;
            prop_assert_eq!(here, there);
        }
    }
}
