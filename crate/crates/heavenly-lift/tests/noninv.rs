use heavenly_lift::funcspace::{HoloFn, RealFn1};
use heavenly_lift::noninv::*;
use heavenly_lift::sampling::SampleBox;
use heavenly_lift::solutions::{psi_jet, SolutionSpec};
use heavenly_lift::{Error, Point4};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn z_pow(k: usize) -> HoloFn {
    HoloFn::monomial(C::new(1.0, 0.0), k)
}

fn sin_y() -> RealFn1 {
    RealFn1::Trig { a: 1.0, b: 0.0, omega: 1.0 }
}

fn generic() -> Vec<SolutionSpec> {
    vec![
        SolutionSpec::sol1(z_pow(2), sin_y()),
        SolutionSpec::sol2(z_pow(3), RealFn1::Exponential { a: 0.1, gamma: 1.0 }),
        SolutionSpec::sol3(z_pow(2), RealFn1::Affine { slope: 1.0, intercept: 0.0 }, RealFn1::Trig { a: 0.0, b: 1.0, omega: 1.0 }),
    ]
}

fn constant_b() -> SolutionSpec {
    SolutionSpec::sol1(HoloFn::constant(C::new(1.0, 0.0)), RealFn1::Affine { slope: 0.0, intercept: 0.3 })
}

fn unit(basis: &GeneratorBasis, j: usize) -> Vec<f64> {
    let mut t = vec![0.0; basis.dimension()];
    t[j] = 1.0;
    t
}

#[test]
fn pure_d_and_x2_columns() {
    let spec = SolutionSpec::sol1(z_pow(2), sin_y());
    let basis = GeneratorBasis::new(4);
    let labels = basis.labels();
    let col = |name: &str| labels.iter().position(|l| l == name).unwrap();
    for p in SampleBox::default().halton_points(10, 3) {
        let row = invariance_row(&spec, p, &basis).unwrap();
        // d = 1: X_d + X̄_d̄ = 2∂_ψ, so Q = −2
        assert!((row[col("Re(d0)")] - C::new(-2.0, 0.0)).norm() < 1e-15);
        // X₂: −(q − q̄) = −2i Im q, purely imaginary and nonzero off the real axis
        let c2 = row[col("C2")];
        assert!(c2.re.abs() < 1e-15 && (c2.im + 2.0 * p.q.im).abs() < 1e-15);
        assert!(p.q.im == 0.0 || c2.norm() > 0.0);
        // every other column is real for a real ψ
        for (j, v) in row.iter().enumerate() {
            if j != col("C2") {
                assert!(v.im.abs() <= 1e-12 * (1.0 + v.norm()), "{} {v}", labels[j]);
            }
        }
    }
}

#[test]
fn row_matches_the_flow_of_each_generator() {
    // d/dε [f(flow_ε) − ψ_ε] at ε = 0 is the characteristic Q
    let basis = GeneratorBasis::new(3);
    let eps = 1e-4;
    for spec in generic() {
        for p in SampleBox::default().halton_points(4, 11) {
            let row = invariance_row(&spec, p, &basis).unwrap();
            let f0 = psi_jet(&spec, p, 0).unwrap().value();
            for j in 0..basis.dimension() {
                let g = basis.generator(&unit(&basis, j)).unwrap();
                let side = |e: f64| {
                    let (p1, w1) = flow(&g, p, f0, e, 4);
                    psi_jet(&spec, p1, 0).unwrap().value() - w1
                };
                let fd = (side(eps) - side(-eps)) / (2.0 * eps);
                assert!((fd - row[j]).norm() <= 1e-6 * (1.0 + row[j].norm()), "{:?} {} {fd} {}", spec.family, basis.labels()[j], row[j]);
            }
        }
    }
}

#[test]
fn generic_families_are_noninvariant() {
    let sample = SampleBox::default();
    let sol1 = &generic()[0];
    let rep = kernel_rank(sol1, 200, &GeneratorBasis::new(6), 0, &sample).unwrap();
    assert_eq!(rep.kernel_dim, 0);
    assert_eq!(rep.verdict, Verdict::Noninvariant);
    for spec in generic() {
        let c = classify(&spec).unwrap();
        assert_eq!(c.verdict, Verdict::Noninvariant, "{:?}", spec.family);
        for r in &c.reports {
            assert_eq!(r.kernel_dim, 0);
            assert!(r.witness.is_empty());
            // structural singular values sit orders of magnitude above the threshold
            assert!(r.gap > 1e-6, "{:?} D={} gap {}", spec.family, r.degree, r.gap);
        }
        assert_eq!(c.witness_flow_defect, None);
    }
}

#[test]
fn constant_b_has_a_flow_verified_witness() {
    let c = classify(&constant_b()).unwrap();
    assert_eq!(c.verdict, Verdict::InvariantDirectionFound);
    assert!(c.reports.iter().all(|r| r.kernel_dim >= 1));
    assert!(c.witnesses_verified);
    assert!(c.witness_flow_defect.unwrap() <= FLOW_TOL);
    // z ↦ z + iε is among the witnesses' span: its own flow keeps the graph
    let basis = GeneratorBasis::new(4);
    let j = basis.labels().iter().position(|l| l == "Im(a0)").unwrap();
    let g = basis.generator(&unit(&basis, j)).unwrap();
    let pts = SampleBox::default().halton_points(10, 5);
    assert!(flow_defect(&constant_b(), &g, &pts, FLOW_EPS).unwrap() < 1e-12);
    // while for b = z² it visibly moves the graph
    assert!(flow_defect(&generic()[0], &g, &pts, FLOW_EPS).unwrap() > 1e-5);
}

#[test]
fn spurious_witness_fails_the_flow_check() {
    let basis = GeneratorBasis::new(4);
    let pts = SampleBox::default().halton_points(10, 5);
    let g = basis.generator(&unit(&basis, 0)).unwrap();
    assert!(flow_defect(&constant_b(), &g, &pts, FLOW_EPS).unwrap() > FLOW_TOL);
}

#[test]
fn doubling_points_keeps_the_kernel_dimension() {
    let sample = SampleBox::default();
    let basis = GeneratorBasis::new(6);
    let n = default_points(&basis);
    for spec in generic().into_iter().chain([constant_b()]) {
        let a = kernel_rank(&spec, n, &basis, 0, &sample).unwrap();
        let b = kernel_rank(&spec, 2 * n, &basis, 0, &sample).unwrap();
        assert_eq!(a.kernel_dim, b.kernel_dim, "{:?}", spec.family);
    }
}

#[test]
fn kernel_vectors_persist_under_embedding() {
    let sample = SampleBox::default();
    let spec = constant_b();
    for d in [4, 6] {
        let small = GeneratorBasis::for_box(d, &sample);
        let big = GeneratorBasis::for_box(d + 2, &sample);
        let rs = kernel_rank(&spec, default_points(&small), &small, 0, &sample).unwrap();
        let rb = kernel_rank(&spec, default_points(&big), &big, 0, &sample).unwrap();
        assert!(rs.kernel_dim >= 1 && rb.kernel_dim >= rs.kernel_dim);
        let pts = sample.halton_points(default_points(&big), 0);
        let m = assemble(&spec, &pts, &big).unwrap();
        for w in &rs.witness {
            let e = nalgebra::DVector::from_vec(small.embed(w, &big).unwrap());
            let res = (&m * &e).norm() / (m.norm() * e.norm());
            assert!(res < 1e-12, "D={d} residual {res:e}");
        }
    }
}

#[test]
fn insufficient_sampling_is_an_error() {
    let basis = GeneratorBasis::new(8);
    let need = 3 * basis.dimension();
    let err = kernel_rank(&generic()[0], need - 1, &basis, 0, &SampleBox::default()).unwrap_err();
    assert_eq!(err, Error::InsufficientSampling { got: need - 1, need });
}

#[test]
fn reports_are_deterministic() {
    let basis = GeneratorBasis::new(4);
    let a = kernel_rank(&constant_b(), 150, &basis, 9, &SampleBox::default()).unwrap();
    let b = kernel_rank(&constant_b(), 150, &basis, 9, &SampleBox::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn witness_points_stay_in_the_domain() {
    let g = GeneratorBasis::new(4).generator(&vec![0.3; 31]).unwrap();
    let p = Point4::new(C::new(1.0, 0.1), C::new(1.2, -0.1));
    let (p1, _) = flow(&g, p, C::new(0.0, 0.0), FLOW_EPS, 8);
    assert!((p1.z - p.z).norm() < 1e-2 && (p1.q - p.q).norm() < 1e-2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_dimension_is_scale_invariant(scale in -12.0f64..12.0, which in 0usize..4) {
        let specs: Vec<SolutionSpec> = generic().into_iter().chain([constant_b()]).collect();
        let spec = &specs[which];
        let basis = GeneratorBasis::new(4);
        let pts = SampleBox::default().halton_points(default_points(&basis), 0);
        let m = assemble(spec, &pts, &basis).unwrap();
        let (_, k0) = kernel(&m, KERNEL_TOL);
        let (_, k1) = kernel(&(&m * 10f64.powf(scale)), KERNEL_TOL);
        prop_assert_eq!(k0.len(), k1.len());
    }
}
