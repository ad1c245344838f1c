use nsfde::model::{make_mesh, AffineMap, AffineSpec, CoefficientSet, PathTrajectory, Preset, Segment, TimeMesh};
use nsfde::rate::{
    action, fd_gradient_check, qp_oracle_linear, rate_for_event, rate_for_event_truncated, EventSpec, RateOptions,
};
use nsfde::sim::DEFAULT_NEUTRAL_TOL;
use nsfde::skeleton::{solve_skeleton, ControlPath};
use nsfde::Error;
use proptest::prelude::*;

fn mesh100() -> TimeMesh {
    make_mesh(1.0, 1.0, 100).unwrap()
}

fn scalar_affine(drift_head: f64, drift_delayed: f64, neutral_delayed: f64) -> AffineSpec {
    AffineSpec {
        neutral: AffineMap {
            head: None,
            delayed: Some(vec![vec![neutral_delayed]]),
            constant: None,
        },
        drift: AffineMap {
            head: Some(vec![vec![drift_head]]),
            delayed: Some(vec![vec![drift_delayed]]),
            constant: None,
        },
        diffusion: vec![vec![1.0]],
    }
}

#[test]
fn action_examples() {
    let m = mesh100();
    assert_eq!(action(&ControlPath::zeros(&m, 1)), 0.0);
    assert!((action(&ControlPath::constant(&m, &[1.0])) - 0.5).abs() < 1e-14);
    let m2 = make_mesh(1.0, 2.0, 50).unwrap();
    assert!((action(&ControlPath::constant(&m2, &[1.0, 1.0])) - 2.0).abs() < 1e-14);
}

proptest! {
    #[test]
    fn action_is_quadratic_and_convex(a in prop::collection::vec(-5.0f64..5.0, 20), b in prop::collection::vec(-5.0f64..5.0, 20), c in -4.0f64..4.0) {
        let m = make_mesh(1.0, 2.0, 10).unwrap();
        let ha = ControlPath::from_hdot(&m, 1, a).unwrap();
        let hb = ControlPath::from_hdot(&m, 1, b).unwrap();
        let scaled = action(&ha.scaled(c));
        prop_assert!((scaled - c * c * action(&ha)).abs() <= 1e-12 * (1.0 + scaled));
        let mid = action(&ha.plus(&hb).unwrap().scaled(0.5));
        prop_assert!(mid <= 0.5 * (action(&ha) + action(&hb)) + 1e-12);
    }
}

#[test]
fn schilder_endpoint_ball() {
    let m = mesh100();
    let c = Preset::PureBrownian.build(1).unwrap();
    let xi = Segment::zeros(&m, 1);
    let ev = EventSpec::EndpointBall { center: vec![1.0], radius: 1e-3 };
    let r = rate_for_event(&c, &xi, &ev, &m, &RateOptions::default()).unwrap();
    assert!(r.converged, "{r:?}");
    assert!((r.value - 0.5).abs() < 1e-2);
    assert!((r.value - 0.5 * (1.0 - 1e-3f64).powi(2)).abs() < 1e-5);
    assert!(r.minimizer.hdot().iter().all(|x| (x - (1.0 - 1e-3)).abs() < 1e-3));
    assert!(r.constraint_residual <= 1e-6);
}

#[test]
fn schilder_halfspace() {
    let m = mesh100();
    let c = Preset::PureBrownian.build(1).unwrap();
    let ev = EventSpec::EndpointHalfspace { normal: vec![1.0], level: 1.0 };
    let r = rate_for_event(&c, &Segment::zeros(&m, 1), &ev, &m, &RateOptions::default()).unwrap();
    assert!(r.converged);
    assert!((r.value - 0.5).abs() < 1e-5, "{}", r.value);
    assert_eq!(r.value, action(&r.minimizer));
}

#[test]
fn event_containing_uncontrolled_path_is_free() {
    let m = mesh100();
    let c = Preset::Ou.build(1).unwrap();
    let xi = Segment::constant(&m, &[1.0]);
    let free = solve_skeleton(&c, &xi, &ControlPath::zeros(&m, 1), DEFAULT_NEUTRAL_TOL).unwrap();
    let ev = EventSpec::EndpointBall { center: free.endpoint().to_vec(), radius: 0.1 };
    let r = rate_for_event(&c, &xi, &ev, &m, &RateOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.value < 1e-10, "{}", r.value);
    assert!(r.minimizer.hdot().iter().all(|x| x.abs() < 1e-4));
}

#[test]
fn ou_endpoint_agrees_with_oracle() {
    let m = mesh100();
    let spec = Preset::Ou.affine(1).unwrap();
    let c = spec.to_coefficients().unwrap();
    let xi = Segment::constant(&m, &[0.5]);
    let target = [1.5];
    let oracle = qp_oracle_linear(&spec, &xi, &target, &m).unwrap();
    let ev = EventSpec::EndpointBall { center: target.to_vec(), radius: 1e-5 };
    let r = rate_for_event(&c, &xi, &ev, &m, &RateOptions::default()).unwrap();
    assert!(r.converged);
    assert!((r.value - oracle.value).abs() < 1e-3, "{} vs {}", r.value, oracle.value);
}

#[test]
fn oracle_trivial_dynamics() {
    let m = mesh100();
    let spec = Preset::PureBrownian.affine(2).unwrap();
    let xi = Segment::zeros(&m, 2);
    let o = qp_oracle_linear(&spec, &xi, &[1.0, -2.0], &m).unwrap();
    assert!((o.value - 2.5).abs() < 1e-6);
    assert!(o.minimizer.hdot().chunks(2).all(|u| (u[0] - 1.0).abs() < 1e-9 && (u[1] + 2.0).abs() < 1e-9));
    let zero = qp_oracle_linear(&spec, &xi, &[0.0, 0.0], &m).unwrap();
    assert_eq!(zero.value, 0.0);
    assert!(zero.minimizer.hdot().iter().all(|x| *x == 0.0));
}

#[test]
fn oracle_minimizer_hits_target_through_skeleton() {
    let m = make_mesh(1.0, 2.0, 40).unwrap();
    let specs = [scalar_affine(-0.3, 0.6, 0.4), Preset::LinearDelay { a: -0.5 }.affine(1).unwrap()];
    for spec in specs {
        let c = spec.to_coefficients().unwrap();
        let xi = Segment::from_fn(&m, 1, |t| vec![1.0 + t]).unwrap();
        let o = qp_oracle_linear(&spec, &xi, &[2.5], &m).unwrap();
        let f = solve_skeleton(&c, &xi, &o.minimizer, DEFAULT_NEUTRAL_TOL).unwrap();
        assert!((f.endpoint()[0] - 2.5).abs() < 1e-9, "{}", f.endpoint()[0]);
    }
}

#[test]
fn delay_oracle_below_three_piece_grid() {
    let m = make_mesh(1.0, 1.0, 30).unwrap();
    let spec = Preset::LinearDelay { a: -0.8 }.affine(1).unwrap();
    let c = spec.to_coefficients().unwrap();
    let xi = Segment::constant(&m, &[1.0]);
    let target = 2.0;
    let o = qp_oracle_linear(&spec, &xi, &[target], &m).unwrap();
    let piece = |c1: f64, c2: f64, c3: f64| {
        let hdot: Vec<f64> = (0..30).map(|k| [c1, c2, c3][k / 10]).collect();
        ControlPath::from_hdot(&m, 1, hdot).unwrap()
    };
    let end = |h: &ControlPath| solve_skeleton(&c, &xi, h, DEFAULT_NEUTRAL_TOL).unwrap().endpoint()[0];
    let mut best = f64::INFINITY;
    for i in 0..=60 {
        for j in 0..=60 {
            let (c1, c2) = (i as f64 * 0.05, j as f64 * 0.05);
            // endpoint is affine in c3
            let e0 = end(&piece(c1, c2, 0.0));
            let e1 = end(&piece(c1, c2, 1.0));
            let c3 = (target - e0) / (e1 - e0);
            let h = piece(c1, c2, c3);
            assert!((end(&h) - target).abs() < 1e-9);
            best = best.min(action(&h));
        }
    }
    assert!(best >= o.value - 1e-12, "{best} < {}", o.value);
    assert!(best <= o.value * 1.02, "{best} vs {}", o.value);
}

#[test]
fn oracle_rejects_singular_sigma() {
    let m = mesh100();
    let mut spec = Preset::PureBrownian.affine(2).unwrap();
    spec.diffusion = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
    let err = qp_oracle_linear(&spec, &Segment::zeros(&m, 2), &[1.0, 1.0], &m).unwrap_err();
    assert_eq!(err, Error::SingularSigma);
}

#[test]
fn optimizer_never_beats_oracle() {
    let m = make_mesh(1.0, 1.0, 50).unwrap();
    let spec = scalar_affine(-0.5, 0.3, 0.0);
    let c = spec.to_coefficients().unwrap();
    let xi = Segment::constant(&m, &[0.2]);
    let o = qp_oracle_linear(&spec, &xi, &[-1.0], &m).unwrap();
    let ev = EventSpec::EndpointBall { center: vec![-1.0], radius: 1e-6 };
    let r = rate_for_event(&c, &xi, &ev, &m, &RateOptions::default()).unwrap();
    // a ball of radius delta can undercut the point target by at most O(delta)
    assert!(r.value >= o.value * (1.0 - 1e-5), "{} < {}", r.value, o.value);
    assert!((r.value - o.value).abs() < 1e-3);
}

#[test]
fn nested_events_are_monotone() {
    let m = make_mesh(1.0, 1.0, 50).unwrap();
    let c = Preset::BoundedTrig.build(1).unwrap();
    let xi = Segment::constant(&m, &[0.0]);
    let opts = RateOptions::default();
    let small = EventSpec::EndpointBall { center: vec![1.0], radius: 0.1 };
    let large = EventSpec::EndpointBall { center: vec![1.0], radius: 0.3 };
    let a = rate_for_event(&c, &xi, &small, &m, &opts).unwrap();
    let b = rate_for_event(&c, &xi, &large, &m, &opts).unwrap();
    assert!(a.converged && b.converged);
    assert!(a.value >= b.value - 1e-6, "{} {}", a.value, b.value);
}

#[test]
fn tube_around_straight_line() {
    let m = make_mesh(1.0, 1.0, 40).unwrap();
    let c = Preset::PureBrownian.build(1).unwrap();
    let center = PathTrajectory::from_fn(&m, 1, |t| vec![t.max(0.0)]).unwrap();
    let delta = 0.05;
    let ev = EventSpec::SupTube { center, radius: delta };
    let r = rate_for_event(&c, &Segment::zeros(&m, 1), &ev, &m, &RateOptions::default()).unwrap();
    assert!(r.converged, "{r:?}");
    assert!((r.value - 0.5 * (1.0 - delta).powi(2)).abs() < 1e-3, "{}", r.value);
}

#[test]
fn truncated_rate_on_interior_event() {
    let m = make_mesh(1.0, 1.0, 50).unwrap();
    let c = Preset::Superlinear.build(1).unwrap();
    let xi = Segment::constant(&m, &[0.2]);
    let ev = EventSpec::EndpointBall { center: vec![0.6], radius: 1e-4 };
    let opts = RateOptions::default();
    let full = rate_for_event(&c, &xi, &ev, &m, &opts).unwrap();
    let path = solve_skeleton(&c, &xi, &full.minimizer, DEFAULT_NEUTRAL_TOL).unwrap();
    let r = 2.0;
    assert!(path.sup_norm() < r);
    let m_r = Preset::Superlinear.sup_on_ball(1, r).unwrap();
    let trunc = rate_for_event_truncated(&c, r, m_r, &xi, &ev, &m, &opts).unwrap();
    assert!((trunc.value - full.value).abs() < 1e-3);
    let huge = rate_for_event_truncated(&c, 1e3, 1e12, &xi, &ev, &m, &opts).unwrap();
    assert_eq!(huge, full);
}

#[test]
fn clamped_dynamics_cannot_reach_far_event_cheaply() {
    let m = make_mesh(1.0, 1.0, 20).unwrap();
    let c = CoefficientSet::new(1)
        .with_drift(|s, o| o[0] = -3.0 * s.head()[0])
        .with_diffusion(|_, o| o[0] = 1.0)
        .with_kappa(0.0)
        .unwrap();
    let xi = Segment::zeros(&m, 1);
    let ev = EventSpec::EndpointBall { center: vec![2.0], radius: 1e-3 };
    let opts = RateOptions::default();
    let full = rate_for_event(&c, &xi, &ev, &m, &opts).unwrap();
    let trunc = rate_for_event_truncated(&c, 0.1, 0.1, &xi, &ev, &m, &opts).unwrap();
    // clamped drift and diffusion both sit at +-1.1 far from the origin
    assert!(!trunc.converged || trunc.value > 3.0, "{trunc:?}");
    assert!(full.converged);
}

#[test]
fn gradient_matches_finite_differences() {
    let m = make_mesh(1.0, 1.0, 30).unwrap();
    let opts = RateOptions::default();
    let h0 = ControlPath::from_fn(&m, 1, |t| vec![0.3 + t]).unwrap();
    let ev = EventSpec::EndpointBall { center: vec![2.0], radius: 0.01 };

    let brownian = Preset::PureBrownian.build(1).unwrap();
    let chk = fd_gradient_check(&brownian, &Segment::zeros(&m, 1), &ev, &h0, &opts).unwrap();
    assert!(chk.max_relative_error <= 1e-6, "{chk:?}");

    let delay = Preset::LinearDelay { a: -0.5 }.build(1).unwrap();
    let chk = fd_gradient_check(&delay, &Segment::constant(&m, &[0.5]), &ev, &h0, &opts).unwrap();
    assert!(chk.max_relative_error <= 1e-4, "{chk:?}");

    let sym = EventSpec::EndpointBall { center: vec![0.0], radius: 0.5 };
    let chk = fd_gradient_check(&brownian, &Segment::zeros(&m, 1), &sym, &ControlPath::zeros(&m, 1), &opts).unwrap();
    assert!(chk.gradient_norm < 1e-12, "{chk:?}");
}

#[test]
fn deterministic_across_calls() {
    let m = make_mesh(1.0, 1.0, 20).unwrap();
    let c = Preset::BoundedTrig.build(1).unwrap();
    let ev = EventSpec::EndpointHalfspace { normal: vec![1.0], level: 1.0 };
    let xi = Segment::zeros(&m, 1);
    let a = rate_for_event(&c, &xi, &ev, &m, &RateOptions::default()).unwrap();
    let b = rate_for_event(&c, &xi, &ev, &m, &RateOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_inputs() {
    let m = make_mesh(1.0, 1.0, 20).unwrap();
    let c = Preset::PureBrownian.build(1).unwrap();
    let ev = EventSpec::EndpointBall { center: vec![1.0], radius: -1.0 };
    assert!(rate_for_event(&c, &Segment::zeros(&m, 1), &ev, &m, &RateOptions::default()).is_err());
    let opts = RateOptions { starts: 0, ..RateOptions::default() };
    let ev = EventSpec::EndpointBall { center: vec![1.0], radius: 1.0 };
    assert!(rate_for_event(&c, &Segment::zeros(&m, 1), &ev, &m, &opts).is_err());
}
