use proptest::prelude::*;

use weightlab_core::lab::{bht_range, extrapolation_table, ExtrapolationSpec};
use weightlab_core::lattice::{average, CubeFamily, DyadicGrid, Interval, LatticeFunction, MeasurePoints};
use weightlab_core::math::conjugate;
use weightlab_core::operators::{
    bilinear_slice, empirical_norm, hilbert, maximal, vq_norm, BilinearKernel, CzProfile, EmpiricalSettings, MaximalMode,
    Operator,
};
use weightlab_core::rubio_francia::{build_majorant, verify_majorant, MajorantConfig, MajorantProblem};
use weightlab_core::spaces::{eval_norm, OrliczFamily, SolverConfig, SpaceExpr};
use weightlab_core::sparse::{certify_sparse, sparse_form, SparseCertificate, SparseCollection};
use weightlab_core::weights::{ap_constant, generate_weight, rh_constant, Weight, WeightGenerator};

fn grid(k: u32) -> DyadicGrid {
    DyadicGrid::new(k).unwrap()
}

fn positive_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, len).prop_map(|v| v.into_iter().map(f64::exp).collect())
}

fn signed_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0f64..4.0, len)
}

fn generator() -> impl Strategy<Value = WeightGenerator> {
    prop_oneof![
        (0.1f64..2.5).prop_map(|sigma| WeightGenerator::LogUniform { sigma }),
        (0.0f64..0.7).prop_map(|beta| WeightGenerator::DyadicMartingale { beta }),
        (0.1f64..10.0, 0.1f64..10.0).prop_map(|(left, right)| WeightGenerator::TwoValue { left, right }),
    ]
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn averages_are_bounded_and_consistent(v in signed_vec(16), c in -3.0f64..3.0) {
        let g = grid(4);
        for q in g.cubes(CubeFamily::Dyadic) {
            let a = average(&v, q).unwrap();
            let cells = &v[q.start..q.end];
            let lo = cells.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = cells.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= a && a <= hi + 1e-12);
            if let Some((l, r)) = q.children() {
                let mean = 0.5 * (average(&v, l).unwrap() + average(&v, r).unwrap());
                prop_assert!((a - mean).abs() <= 1e-12 * (1.0 + a.abs()));
            }
            let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
            prop_assert!((average(&scaled, q).unwrap() - c * a).abs() <= 1e-12 * (1.0 + a.abs() * c.abs()));
        }
        prop_assert_eq!(g.cubes(CubeFamily::Dyadic).len(), 31);
        prop_assert_eq!(g.cubes(CubeFamily::AllAligned).len(), 136);
    }

    #[test]
    fn weight_characteristics(gen in generator(), seed in any::<u64>(), p in 1.1f64..4.0, dq in 0.0f64..3.0, s in 1.0f64..4.0) {
        let w = generate_weight(grid(5), gen, seed).unwrap();
        let ap = ap_constant(&w, p, CubeFamily::Dyadic).unwrap().value;
        let rh = rh_constant(&w, s, CubeFamily::Dyadic).unwrap().value;
        prop_assert!(ap >= 1.0 - 1e-12 && rh >= 1.0 - 1e-12);
        prop_assert!(ap_constant(&w, p + dq, CubeFamily::Dyadic).unwrap().value <= ap);
        let sigma = w.pow(1.0 - conjugate(p)).unwrap();
        let dual = ap_constant(&sigma, conjugate(p), CubeFamily::Dyadic).unwrap().value;
        prop_assert!(rel_close(ap.powf(1.0 / p), dual.powf(1.0 / conjugate(p)), 1e-9));
        prop_assert!(ap_constant(&w, p, CubeFamily::AllAligned).unwrap().value >= ap);
        prop_assert!(rh_constant(&w, s, CubeFamily::AllAligned).unwrap().value >= rh);
    }

    #[test]
    fn closed_form_norms_are_homogeneous_and_monotone(
        xi in positive_vec(6),
        shrink in prop::collection::vec(0.0f64..1.0, 6),
        c in 0.01f64..100.0,
    ) {
        let points = MeasurePoints::new(vec![0.5, 1.0, 2.0, 1.0, 0.25, 1.5]).unwrap();
        let cfg = SolverConfig::default();
        let spaces = [
            SpaceExpr::lebesgue(1.5),
            SpaceExpr::lebesgue(f64::INFINITY),
            SpaceExpr::lorentz(2.0, 1.0),
            SpaceExpr::lorentz(3.0, 4.0),
            SpaceExpr::orlicz(OrliczFamily::PowerLog { p: 2.0, a: 1.0 }),
            SpaceExpr::lebesgue(3.0).concavify(2.0),
            SpaceExpr::lebesgue(2.0).dual(),
        ];
        let scaled: Vec<f64> = xi.iter().map(|x| c * x).collect();
        let smaller: Vec<f64> = xi.iter().zip(&shrink).map(|(x, t)| x * t).collect();
        for x in &spaces {
            let n = eval_norm(x, &points, &xi, &cfg).unwrap().value;
            let ns = eval_norm(x, &points, &scaled, &cfg).unwrap().value;
            prop_assert!(rel_close(ns, c * n, 1e-9), "{:?}: {} vs {}", x, ns, c * n);
            prop_assert!(eval_norm(x, &points, &smaller, &cfg).unwrap().value <= n * (1.0 + 1e-12));
        }
    }

    #[test]
    fn concavification_identity(xi in positive_vec(5), p in 0.3f64..3.0) {
        let points = MeasurePoints::counting(5).unwrap();
        let cfg = SolverConfig::default();
        for x in [SpaceExpr::lebesgue(2.5), SpaceExpr::lorentz(2.0, 1.0), SpaceExpr::orlicz(OrliczFamily::Power { p: 3.0 })] {
            let lhs = eval_norm(&x.clone().concavify(p), &points, &xi, &cfg).unwrap().value;
            let root: Vec<f64> = xi.iter().map(|v| v.powf(1.0 / p)).collect();
            let rhs = eval_norm(&x, &points, &root, &cfg).unwrap().value.powf(p);
            prop_assert!(rel_close(lhs, rhs, 1e-12));
        }
    }

    #[test]
    fn maximal_is_sublinear_monotone_and_family_ordered(
        f in signed_vec(16),
        g in signed_vec(16),
        c in -3.0f64..3.0,
    ) {
        let gr = grid(4);
        let lf = |v: &Vec<f64>| LatticeFunction::scalar(gr, v.clone()).unwrap();
        let m = |v: &Vec<f64>, fam| maximal(&lf(v), MaximalMode::Scalar, fam).into_values();
        let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let (mf, mg, ms) = (m(&f, CubeFamily::Dyadic), m(&g, CubeFamily::Dyadic), m(&sum, CubeFamily::Dyadic));
        let scaled: Vec<f64> = f.iter().map(|x| c * x).collect();
        let msc = m(&scaled, CubeFamily::Dyadic);
        let big: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a.abs() + b.abs()).collect();
        let mb = m(&big, CubeFamily::Dyadic);
        let all = m(&f, CubeFamily::AllAligned);
        for i in 0..16 {
            prop_assert!(ms[i] <= (mf[i] + mg[i]) * (1.0 + 1e-12) + 1e-12);
            prop_assert!((msc[i] - c.abs() * mf[i]).abs() <= 1e-12 * (1.0 + mf[i]));
            prop_assert!(mb[i] >= mf[i] * (1.0 - 1e-12));
            prop_assert!(all[i] >= mf[i]);
        }
    }

    #[test]
    fn hilbert_is_an_isometry_off_mean_and_nyquist(f in signed_vec(32)) {
        let n = f.len();
        let mean = f.iter().sum::<f64>() / n as f64;
        let nyq = f.iter().enumerate().map(|(x, v)| if x % 2 == 0 { *v } else { -v }).sum::<f64>() / n as f64;
        let f: Vec<f64> = f.iter().enumerate().map(|(x, v)| v - mean - if x % 2 == 0 { nyq } else { -nyq }).collect();
        let lf = LatticeFunction::scalar(grid(5), f.clone()).unwrap();
        let h = hilbert(&lf);
        let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(rel_close(l2(h.values()), l2(&f), 1e-10));
        let hh = hilbert(&h);
        for (a, b) in hh.values().iter().zip(&f) {
            prop_assert!((a + b).abs() <= 1e-10 * (1.0 + l2(&f)));
        }
    }

    #[test]
    fn bilinear_kernels(n_log in 1u32..7, c in -3.0f64..3.0) {
        let n = 1usize << n_log;
        for kernel in [BilinearKernel::BhtTruncated, BilinearKernel::SmoothCz { profile: CzProfile::TaperedCauchy }] {
            let k = kernel.samples(n);
            for t in 0..n {
                prop_assert_eq!(k[t], -k[(n - t) % n]);
            }
            let out = bilinear_slice(&vec![c; n], &vec![1.0; n], kernel).unwrap();
            prop_assert!(out.iter().all(|&v| v.abs() <= 1e-12 * (1.0 + c.abs())));
        }
    }

    #[test]
    fn variation_norm_decreases_in_q(m in signed_vec(10), q in 1.0f64..5.0, dq in 0.0f64..3.0) {
        prop_assert!(vq_norm(&m, q + dq).unwrap() <= vq_norm(&m, q).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn sparse_form_is_monotone(
        f in signed_vec(16),
        g in signed_vec(16),
        grow in prop::collection::vec(1.0f64..2.0, 16),
        keep in prop::collection::vec(any::<bool>(), 31),
    ) {
        let gr = grid(4);
        let cubes = gr.cubes(CubeFamily::Dyadic);
        let sub: Vec<Interval> = cubes.iter().zip(&keep).filter(|(_, k)| **k).map(|(q, _)| *q).collect();
        let small = SparseCollection::new(gr, sub, 0.5).unwrap();
        let large = SparseCollection::new(gr, cubes, 0.5).unwrap();
        let fg: Vec<f64> = f.iter().zip(&grow).map(|(a, t)| a * t).collect();
        for (pm, pp) in [(1.0, 2.0), (1.5, 1.5), (1.0, f64::INFINITY)] {
            let base = sparse_form(&small, &f, &g, pm, pp).unwrap();
            prop_assert!(sparse_form(&large, &f, &g, pm, pp).unwrap() >= base * (1.0 - 1e-12));
            prop_assert!(sparse_form(&small, &fg, &g, pm, pp).unwrap() >= base * (1.0 - 1e-12));
        }
    }

    #[test]
    fn certification_is_exact(keep in prop::collection::vec(any::<bool>(), 31), density in 0.1f64..0.9) {
        let gr = grid(4);
        let cubes: Vec<Interval> = gr.cubes(CubeFamily::Dyadic).into_iter().zip(&keep).filter(|(_, k)| **k).map(|(q, _)| q).collect();
        let s = SparseCollection::new(gr, cubes, density).unwrap();
        match certify_sparse(&s) {
            SparseCertificate::Feasible(c) => prop_assert!(c.verify_witnesses()),
            SparseCertificate::Infeasible { family, demand, capacity } => {
                prop_assert!(demand > capacity);
                let sub = SparseCollection::new(gr, family.clone(), density).unwrap();
                let total: usize = family.iter().map(|q| sub.demand(*q)).sum();
                prop_assert_eq!(total, demand);
                let mut covered = vec![false; 16];
                for q in &family {
                    for cell in q.start..q.end {
                        covered[cell] = true;
                    }
                }
                prop_assert_eq!(covered.iter().filter(|c| **c).count(), capacity);
            }
        }
    }

    #[test]
    fn bht_ranges(q1 in 1.01f64..50.0, q2 in 1.01f64..50.0) {
        match bht_range(q1, q2) {
            Ok(r) => {
                prop_assert!(1.0 / q1 + 1.0 / q2 < 1.0);
                for (lo, hi) in [(r.p1_minus, r.p1_plus), (r.p2_minus, r.p2_plus)] {
                    prop_assert!(lo < 2.0 && 2.0 < hi);
                }
                prop_assert!(1.0 / r.p1_plus + 1.0 / r.p2_plus < 0.5);
            }
            Err(_) => prop_assert!(1.0 / q1 + 1.0 / q2 >= 1.0),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn biduals_reproduce_the_space(xi in positive_vec(5)) {
        let points = MeasurePoints::counting(5).unwrap();
        let cfg = SolverConfig { closed_form_duals: false, ..SolverConfig::default() };
        for x in [SpaceExpr::lebesgue(3.0), SpaceExpr::lorentz(2.0, 1.5), SpaceExpr::orlicz(OrliczFamily::PowerLog { p: 2.0, a: 1.0 })] {
            let a = eval_norm(&x.clone().dual().dual(), &points, &xi, &cfg).unwrap().value;
            let b = eval_norm(&x, &points, &xi, &cfg).unwrap().value;
            prop_assert!(rel_close(a, b, 1e-5), "{:?}: {} vs {}", x, a, b);
        }
    }

    #[test]
    fn empirical_norm_grows_with_probes(seed in any::<u64>(), sigma in 0.2f64..1.5) {
        let g = grid(4);
        let points = MeasurePoints::counting(1).unwrap();
        let w = generate_weight(g, WeightGenerator::LogUniform { sigma }, seed).unwrap();
        let x = SpaceExpr::bochner(2.0, w.pow(2.0).unwrap().values().to_vec(), SpaceExpr::lebesgue(2.0));
        let op = Operator::Hilbert;
        let run = |n_probes, n_ascent| {
            let s = EmpiricalSettings { n_probes, n_ascent, seed, solver: SolverConfig::default() };
            empirical_norm(&op, std::slice::from_ref(&x), &x, g, &points, &s).unwrap().value
        };
        let base = run(4, 2);
        prop_assert!(run(8, 2) >= base);
        prop_assert!(run(4, 4) >= base);
        prop_assert_eq!(base, run(4, 2));
    }

    #[test]
    fn majorant_improves_with_terms(seed in any::<u64>(), beta in 0.0f64..0.5) {
        let g = grid(4);
        let points = MeasurePoints::counting(2).unwrap();
        let w = generate_weight(g, WeightGenerator::DyadicMartingale { beta }, seed).unwrap();
        let u = LatticeFunction::new(g, points, (0..32).map(|i| ((i * 7 + seed as usize) % 5) as f64).collect()).unwrap();
        let problem = MajorantProblem { r: 2.0, r_plus: 4.0, y: SpaceExpr::lebesgue(2.0), family: CubeFamily::Dyadic };
        let solver = SolverConfig::default();
        let mut last = f64::INFINITY;
        for n_terms in [1, 4, 16] {
            let cfg = MajorantConfig { k: Some(3.0), n_terms, ..MajorantConfig::default() };
            let res = build_majorant(&u, &w, &problem, &cfg).unwrap();
            prop_assert_eq!(&res, &build_majorant(&u, &w, &problem, &cfg).unwrap());
            let rep = verify_majorant(&u, &res.v, &w, &problem, res.k_used, 1e-6, &solver).unwrap();
            prop_assert!(rep.majorization.passed);
            prop_assert!(rep.slice_a1.worst_ratio <= last * (1.0 + 1e-12));
            last = rep.slice_a1.worst_ratio;
        }
    }

    #[test]
    fn extrapolation_rows_are_deterministic_and_grow_with_probes(seed in any::<u64>()) {
        let spec = ExtrapolationSpec {
            op: Operator::Hilbert,
            ranges: vec![(1.0, f64::INFINITY)],
            exponents: vec![vec![2.0]],
            generators: vec![WeightGenerator::LogUniform { sigma: 0.8 }],
            weights_per_generator: 2,
            grid: grid(4),
            points: MeasurePoints::counting(2).unwrap(),
            spaces: vec![SpaceExpr::lebesgue(3.0)],
            codomain: SpaceExpr::lebesgue(3.0),
            family: CubeFamily::Dyadic,
            n_probes: 3,
            n_ascent: 1,
            seed,
            solver: SolverConfig::default(),
        };
        let a = extrapolation_table(&spec).unwrap();
        prop_assert_eq!(&a, &extrapolation_table(&spec).unwrap());
        let more = extrapolation_table(&ExtrapolationSpec { n_probes: 6, ..spec }).unwrap();
        for r in &a {
            let m = more.iter().find(|m| m.weight_index == r.weight_index).unwrap();
            prop_assert!(m.norm >= r.norm && m.scalar_norm >= r.scalar_norm);
            prop_assert!(r.embedding_monotone(1e-9));
        }
    }
}

#[test]
fn weights_with_a_constant_generator_are_trivial() {
    let w = generate_weight(grid(3), WeightGenerator::Constant { c: 2.5 }, 9).unwrap();
    assert_eq!(w, Weight::constant(grid(3), 2.5).unwrap());
    assert!((ap_constant(&w, 2.0, CubeFamily::AllAligned).unwrap().value - 1.0).abs() < 1e-12);
}
