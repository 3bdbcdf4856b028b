use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use fracpoh::boundary_trace::{trace, TraceWindow};
use fracpoh::cli::config::RunConfig;
use fracpoh::frac_operator::{AssemblyOptions, Discretization, FracOperator};
use fracpoh::pohozaev::{pohozaev_residual, supercritical_gap, GapClass};
use fracpoh::solver::torsion;
use fracpoh::{solve_linear, Domain, DomainSpec, Nonlinearity};
use proptest::prelude::*;

fn interval() -> Arc<Domain> {
    Arc::new(Domain::new(DomainSpec::Interval { a: -1.0, b: 1.0 }).unwrap())
}

fn disk(radius: f64) -> Domain {
    Domain::new(DomainSpec::Disk {
        center: [0.0, 0.0],
        radius,
        boundary_nodes: 128,
    })
    .unwrap()
}

fn star() -> Domain {
    Domain::new(DomainSpec::PolarStar {
        center: [0.2, -0.1],
        r0: 1.0,
        cos: vec![0.0, 0.15],
        sin: vec![0.05],
        boundary_nodes: 128,
    })
    .unwrap()
}

fn op_1d() -> &'static FracOperator {
    static OP: OnceLock<FracOperator> = OnceLock::new();
    OP.get_or_init(|| {
        let disc = Arc::new(Discretization::new(interval(), 255, 1.0).unwrap());
        FracOperator::assemble(disc, 0.5, &AssemblyOptions::default()).unwrap()
    })
}

fn op_2d() -> &'static FracOperator {
    static OP: OnceLock<FracOperator> = OnceLock::new();
    OP.get_or_init(|| {
        let disc = Arc::new(Discretization::new(Arc::new(disk(1.0)), 20, 1.0).unwrap());
        FracOperator::assemble(disc, 0.5, &AssemblyOptions::default()).unwrap()
    })
}

fn field(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projection_is_idempotent(t in 0.0f64..(2.0 * PI)) {
        for d in [disk(1.3), star()] {
            let z = d.boundary_point(t);
            let p = d.distance_and_projection(z);
            prop_assert!(p.distance < 1e-10, "{}", p.distance);
            prop_assert!((p.nearest[0] - z[0]).hypot(p.nearest[1] - z[1]) < 1e-9);
        }
    }

    #[test]
    fn distance_is_even_on_symmetric_domains(x in -0.99f64..0.99, y in -0.7f64..0.7) {
        let i = interval();
        prop_assert_eq!(
            i.distance_and_projection([x, 0.0]).distance,
            i.distance_and_projection([-x, 0.0]).distance
        );
        let d = disk(1.0);
        prop_assert_eq!(
            d.distance_and_projection([x * 0.7, y]).distance,
            d.distance_and_projection([-x * 0.7, -y]).distance
        );
    }

    #[test]
    fn centred_disk_margin_is_its_radius(r in 0.1f64..5.0) {
        let m = disk(r).star_shapedness_margin([0.0, 0.0]);
        prop_assert!((m - r).abs() < 1e-12 * r, "{m} vs {r}");
    }

    #[test]
    fn energy_is_positive(u in field(255), v in field(400)) {
        let a = op_1d();
        prop_assert!(a.bilinear(&u, &u) > 0.0);
        let b = op_2d();
        let v = &v[..b.len()];
        prop_assert!(b.bilinear(v, v) > 0.0);
    }

    #[test]
    fn operator_is_symmetric(u in field(255), v in field(255)) {
        let a = op_1d();
        let uv = a.bilinear(&u, &v);
        let vu = a.bilinear(&v, &u);
        prop_assert!((uv - vu).abs() <= 1e-12 * (1.0 + uv.abs()));
    }

    #[test]
    fn power_law_is_homogeneous(p in 1.0f64..7.0, t in 0.1f64..10.0, u in -3.0f64..3.0) {
        let f = Nonlinearity::Power { p };
        let lhs = f.f(t * u);
        let rhs = t.powf(p) * f.f(u);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        let big = f.antiderivative(t * u);
        let scaled = t.powf(p + 1.0) * f.antiderivative(u);
        prop_assert!((big - scaled).abs() <= 1e-12 * (1.0 + scaled.abs()));
    }

    #[test]
    fn gap_class_follows_the_bracket(p in 1.0f64..9.0, s in 0.05f64..0.95, n in 1usize..3) {
        prop_assume!(n as f64 > 2.0 * s);
        let samples: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.5).collect();
        let rep = supercritical_gap(&Nonlinearity::Power { p }, n, s, &samples);
        let bracket = (n as f64 - 2.0 * s) / (2.0 * n as f64) - 1.0 / (p + 1.0);
        let expected = if bracket < 0.0 {
            GapClass::SubcriticalViolating
        } else if bracket == 0.0 {
            GapClass::Critical
        } else {
            GapClass::SupercriticalStrict
        };
        prop_assert_eq!(rep.classification, expected);
        let extreme = 5f64.powf(p + 1.0) * bracket;
        let got = if bracket < 0.0 { rep.min_gap } else { rep.max_gap };
        prop_assert!((got - extreme).abs() <= 1e-12 * extreme.abs());
    }

    #[test]
    fn config_round_trips(s in 0.01f64..0.99, nodes in 8usize..200, p in 1.0f64..6.0, tol in 1e-6f64..1e-1) {
        let text = format!(
            "[domain]\nkind = \"disk\"\nradius = 1.0\n\n[problem]\ns = {s}\nnonlinearity = {{ kind = \"power\", p = {p} }}\n\n[grid]\nnodes = {nodes}\n\n[verify]\npohozaev_tol = {tol}\n"
        );
        let cfg = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(cfg.problem.s, s);
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(again.to_toml(), cfg.to_toml());
        prop_assert_eq!(again.verify.pohozaev_tol, tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trace_is_linear(alpha in -2.0f64..2.0, beta in -2.0f64..2.0, c in 0.5f64..2.0) {
        let a = op_1d();
        let u = torsion(a).unwrap();
        let rhs: Vec<f64> = a.discretization().points().iter().map(|x| c + x[0]).collect();
        let v = solve_linear(a, &rhs).unwrap();
        let w = u
            .with_values(u.values().iter().zip(v.values()).map(|(x, y)| alpha * x + beta * y).collect())
            .unwrap();
        let win = TraceWindow::default();
        let (tu, tv, tw) = (trace(&u, &win).unwrap(), trace(&v, &win).unwrap(), trace(&w, &win).unwrap());
        for ((qu, qv), qw) in tu.values().iter().zip(tv.values()).zip(tw.values()) {
            let lin = alpha * qu + beta * qv;
            prop_assert!((qw - lin).abs() <= 1e-9 * (1.0 + lin.abs()), "{qw} vs {lin}");
        }
    }

    #[test]
    fn trace_survives_a_window_shift(c in 0.2f64..1.0) {
        let a = op_1d();
        let rhs: Vec<f64> = a.discretization().points().iter().map(|x| 1.0 + c * x[0]).collect();
        let u = solve_linear(a, &rhs).unwrap();
        let win = TraceWindow::default();
        let base = trace(&u, &win).unwrap();
        let moved = trace(&u, &win.shifted(1.0)).unwrap();
        for (n, m) in base.nodes.iter().zip(&moved.nodes) {
            prop_assert!((n.q - m.q).abs() <= 3.0 * n.residual.max(m.residual) + 1e-6,
                "{} vs {} (residual {})", n.q, m.q, n.residual);
        }
    }

    #[test]
    fn pohozaev_relative_residual_is_scale_invariant(t in 0.1f64..10.0) {
        let a = op_1d();
        let u = torsion(a).unwrap();
        let win = TraceWindow::default();
        let one = pohozaev_residual(&u, &Nonlinearity::Constant { value: 1.0 }, [0.0, 0.0], &win).unwrap();
        let scaled = pohozaev_residual(&u.scaled(t), &Nonlinearity::Constant { value: t }, [0.0, 0.0], &win).unwrap();
        prop_assert!((scaled.term_r - t * t * one.term_r).abs() <= 1e-10 * t * t * one.term_r.abs());
        prop_assert!((scaled.relative_residual - one.relative_residual).abs() <= 1e-9);
    }
}

#[test]
fn box_size_does_not_change_the_operator() {
    let h = 2.0 / 128.0;
    let small = Arc::new(Discretization::with_spacing(interval(), h, 1.0).unwrap());
    let large = Arc::new(Discretization::with_spacing(interval(), h, 2.0).unwrap());
    let opts = AssemblyOptions::default();
    let a = FracOperator::assemble(small, 0.4, &opts).unwrap();
    let b = FracOperator::assemble(large, 0.4, &opts).unwrap();
    assert_eq!(a.len(), b.len());
    let u: Vec<f64> = a.discretization().points().iter().map(|x| (3.0 * x[0]).sin() + 1.0).collect();
    let (au, bu) = (a.apply(&u), b.apply(&u));
    let scale = au.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (x, y) in au.iter().zip(&bu) {
        assert!((x - y).abs() <= 1e-12 * scale, "{x} vs {y}");
    }
}

#[test]
fn disk_trace_is_even() {
    let u = torsion(op_2d()).unwrap();
    let tr = trace(&u, &TraceWindow::default()).unwrap();
    let q = tr.values();
    let m = q.len();
    for i in 0..m / 2 {
        assert!((q[i] - q[i + m / 2]).abs() < 1e-9, "{} vs {}", q[i], q[i + m / 2]);
    }
}
