use extremal_core::geom2d::{
    boundary_geometry, build_domain, cap_reflect, component_diameter, inscribed_ball, DomainSpec, InradiusTarget, Line,
    Vec2,
};
use proptest::prelude::*;
use std::f64::consts::PI;

#[test]
fn mesh_area_converges() {
    let specs = [
        DomainSpec::Disk { radius: 1.0 },
        DomainSpec::Ellipse { semi_a: 2.0, semi_b: 1.0 },
        DomainSpec::Annulus { r_in: 0.5, r_out: 1.5 },
        DomainSpec::PeriodicStrip { period: 6.0, half_width_coeffs: vec![1.0, 0.1] },
    ];
    for spec in &specs {
        for (h, tol) in [(0.05, 0.02), (0.02, 0.005)] {
            let mesh = build_domain(spec, h).unwrap();
            let rel = (mesh.area() - spec.area()).abs() / spec.area();
            assert!(rel < tol, "{spec:?} h={h}: {rel}");
            mesh.check_invariants().unwrap();
        }
    }
}

#[test]
fn disk_curvature_is_inverse_radius() {
    let mesh = build_domain(&DomainSpec::Disk { radius: 2.0 }, 0.05).unwrap();
    let geo = boundary_geometry(&mesh);
    for v in &geo.vertices {
        assert!((v.curvature.unwrap() - 0.5).abs() < 0.01);
        assert!(v.tangent.dot(v.normal).abs() < 1e-12);
    }
}

fn dumbbell() -> DomainSpec {
    let v = [
        (0.0, 0.0),
        (1.0, 0.0),
        (1.0, 0.4),
        (1.4, 0.4),
        (1.4, 0.0),
        (2.4, 0.0),
        (2.4, 1.0),
        (1.4, 1.0),
        (1.4, 0.6),
        (1.0, 0.6),
        (1.0, 1.0),
        (0.0, 1.0),
    ];
    DomainSpec::Polygon { vertices: v.iter().map(|&(x, y)| Vec2(x, y)).collect() }
}

#[test]
fn dumbbell_reflection_leaves_the_domain() {
    let spec = dumbbell();
    spec.validate().unwrap();
    let mesh = build_domain(&spec, 0.05).unwrap();
    let rep = cap_reflect(&mesh, Line::vertical(1.1)).unwrap();
    assert!(rep.bounded().count() >= 1);
    assert!(rep.bounded().any(|c| !c.reflection_contained));
    // the symmetric cut reflects one square onto the other
    let rep = cap_reflect(&mesh, Line::vertical(1.2)).unwrap();
    assert!(rep.bounded().all(|c| c.reflection_contained));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn disk_caps_are_graphs_and_reflect_inside(theta in 0.0..PI, offset in -0.9f64..0.9) {
        thread_local!(static MESH: extremal_core::geom2d::Mesh = build_domain(&DomainSpec::Disk { radius: 1.0 }, 0.1).unwrap());
        // the cap side is the one away from the center
        let n = Vec2(theta.cos(), theta.sin());
        let mut line = Line::new(n * offset, Vec2(n.1, -n.0));
        if line.signed(Vec2(0.0, 0.0)) > 0.0 {
            line = Line::new(n * offset, Vec2(-n.1, n.0));
        }
        let rep = MESH.with(|m| cap_reflect(m, line));
        let rep = rep.unwrap();
        prop_assert!(rep.bounded().count() == 1);
        for c in rep.bounded() {
            prop_assert!(c.graph_over_chord && c.reflection_contained, "{c:?}");
            prop_assert!(c.height.unwrap() >= 0.0 && c.height.unwrap() <= 2.0);
        }
    }

    #[test]
    fn inscribed_ball_is_monotone(a in 0.5f64..2.0, b in 0.5f64..2.0, da in 0.0f64..0.5, db in 0.0f64..0.5) {
        let g = 0.02;
        let inner = DomainSpec::Ellipse { semi_a: a, semi_b: b };
        let outer = DomainSpec::Ellipse { semi_a: a + da, semi_b: b + db };
        let ri = inscribed_ball(InradiusTarget::Spec(&inner), g).unwrap().radius;
        let ro = inscribed_ball(InradiusTarget::Spec(&outer), g).unwrap().radius;
        prop_assert!(ri <= ro + g, "{ri} {ro}");
        prop_assert!((ri - a.min(b)).abs() <= 2.0 * g);
    }

    #[test]
    fn diameter_matches_brute_force(pts in prop::collection::vec((-50i32..50, -50i32..50), 1..60)) {
        let pts: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2(x as f64, y as f64)).collect();
        let mut brute: f64 = 0.0;
        for p in &pts {
            for q in &pts {
                brute = brute.max(p.dist(*q));
            }
        }
        prop_assert_eq!(component_diameter(&pts), brute);
    }
}
