use approx::assert_relative_eq;
use nsfde::model::{make_mesh, CoefficientSet, PathTrajectory, Preset, Segment, TimeMesh};
use nsfde::sim::{
    brownian_increments, frozen_segment, simulate_frozen_scheme, simulate_frozen_with, simulate_nsfde,
    simulate_nsfde_traced, simulate_nsfde_with, NoiseSeed, DEFAULT_NEUTRAL_TOL,
};
use nsfde::skeleton::{solve_skeleton, ControlPath};
use proptest::prelude::*;

const TOL: f64 = DEFAULT_NEUTRAL_TOL;

fn zeros(mesh: &TimeMesh) -> Segment {
    Segment::zeros(mesh, 1)
}

#[test]
fn increment_variance_matches_step() {
    let mesh = make_mesh(1.0, 0.01, 100).unwrap();
    let n = 100_000;
    let xs: Vec<f64> = (0..n)
        .map(|s| brownian_increments(&mesh, 1, NoiseSeed::new(s, 0)).get(0)[0])
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    // standard error of a Gaussian sample variance is sigma^2 sqrt(2/(n-1))
    let se = 0.01 * (2.0 / (n - 1) as f64).sqrt();
    assert!((var - 0.01).abs() <= 3.0 * se, "var {var}");
    assert!(mean.abs() <= 3.0 * (0.01f64 / n as f64).sqrt());
}

#[test]
fn streams_are_uncorrelated() {
    let mesh = make_mesh(1.0, 1.0, 1000).unwrap();
    let a = brownian_increments(&mesh, 1, NoiseSeed::new(5, 0));
    let b = brownian_increments(&mesh, 1, NoiseSeed::new(5, 1));
    let corr: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum::<f64>()
        / (1000.0 * mesh.step());
    assert!(corr.abs() < 4.0 / (1000f64).sqrt(), "{corr}");
}

#[test]
fn trivial_coefficients_give_zero_path() {
    let mesh = make_mesh(1.0, 2.0, 8).unwrap();
    let c = CoefficientSet::new(1);
    for eps in [0.0, 0.3, 4.0] {
        let p = simulate_nsfde(&c, &zeros(&mesh), eps, &mesh, NoiseSeed::new(1, 2), TOL).unwrap();
        assert!(p.as_slice().iter().all(|x| *x == 0.0));
    }
}

#[test]
fn constant_drift_is_exact() {
    let mesh = make_mesh(1.0, 1.0, 8).unwrap();
    let c = CoefficientSet::new(1).with_drift(|_, o| o[0] = 1.0);
    let p = simulate_nsfde(&c, &zeros(&mesh), 0.7, &mesh, NoiseSeed::new(3, 0), TOL).unwrap();
    for k in 0..=mesh.n_forward() {
        assert_eq!(p.at(k)[0], mesh.forward_time(k));
    }
}

#[test]
fn neutral_delay_keeps_constant_path() {
    let mesh = make_mesh(1.0, 1.0, 10).unwrap();
    let c = CoefficientSet::new(1)
        .with_neutral(|s, o| o[0] = 0.5 * s.delayed()[0])
        .with_kappa(0.5)
        .unwrap();
    let xi = Segment::constant(&mesh, &[1.0]);
    let p = simulate_nsfde(&c, &xi, 0.25, &mesh, NoiseSeed::new(4, 0), TOL).unwrap();
    assert!(p.as_slice().iter().all(|x| *x == 1.0));
}

#[test]
fn history_is_bit_exact() {
    let mesh = make_mesh(1.0, 1.0, 16).unwrap();
    let xi = Segment::from_fn(&mesh, 2, |t| vec![(7.0 * t).cos(), t * t]).unwrap();
    let c = Preset::BoundedTrig.build(2).unwrap();
    let p = simulate_nsfde(&c, &xi, 0.5, &mesh, NoiseSeed::new(1, 1), TOL).unwrap();
    assert_eq!(p.initial_segment(), xi);
}

#[test]
fn dimension_mismatch() {
    let mesh = make_mesh(1.0, 1.0, 4).unwrap();
    let c = CoefficientSet::new(2);
    let err = simulate_nsfde(&c, &zeros(&mesh), 0.1, &mesh, NoiseSeed::new(0, 0), TOL).unwrap_err();
    assert!(matches!(err, nsfde::Error::DimensionMismatch { .. }));
}

#[test]
fn violated_contraction_is_reported() {
    let mesh = make_mesh(1.0, 1.0, 4).unwrap();
    let c = CoefficientSet::new(1)
        .with_neutral(|s, o| o[0] = 1.5 * s.head()[0])
        .with_drift(|_, o| o[0] = 1.0);
    let err = simulate_nsfde(&c, &zeros(&mesh), 0.0, &mesh, NoiseSeed::new(0, 0), TOL).unwrap_err();
    assert!(matches!(err, nsfde::Error::NoConvergence { .. }));
}

#[test]
fn frozen_segment_examples() {
    let mesh = make_mesh(1.0, 1.0, 4).unwrap();
    let path = PathTrajectory::from_fn(&mesh, 1, |t| vec![t]).unwrap();
    // t = 0.75, n = 2 -> t_n = 0.5
    let s = frozen_segment(&path, 3, 2).unwrap();
    assert_eq!(s.as_slice(), &[-0.25, 0.0, 0.25, 0.5, 0.5]);
    // on the lattice the frozen segment is the plain one
    assert_eq!(frozen_segment(&path, 2, 2).unwrap(), path.segment_at(2).unwrap());
    let constant = PathTrajectory::from_fn(&mesh, 1, |_| vec![3.0]).unwrap();
    for k in 0..=4 {
        assert_eq!(frozen_segment(&constant, k, 2).unwrap(), constant.segment_at(k).unwrap());
    }
    assert!(matches!(
        frozen_segment(&path, 1, 3),
        Err(nsfde::Error::NonAlignedFreeze { .. })
    ));
}

#[test]
fn frozen_scheme_reads_frozen_segments() {
    // sigma reads every slot, so any mix-up in the frozen argument shows up
    let mesh = make_mesh(1.0, 1.5, 8).unwrap();
    let sigma = |s: nsfde::model::SegmentView<'_>| {
        let acc: f64 = s.slots().enumerate().map(|(j, x)| (j as f64 + 1.0) * x[0]).sum();
        0.5 + 0.2 * acc.sin()
    };
    let c = CoefficientSet::new(1)
        .with_drift(|s, o| o[0] = -s.head()[0])
        .with_diffusion(move |s, o| o[0] = sigma(s));
    let xi = Segment::from_fn(&mesh, 1, |t| vec![(3.0 * t).cos()]).unwrap();
    let (eps, n) = (0.3, 2);
    let w = brownian_increments(&mesh, 1, NoiseSeed::new(5, 2));
    let path = simulate_frozen_with(&c, &xi, eps, n, &w, TOL).unwrap();
    let dt = mesh.step();
    for k in 0..mesh.n_forward() {
        let live = path.segment_at(k as i64).unwrap();
        let frozen = frozen_segment(&path, k as i64, n).unwrap();
        let expected = path.at(k)[0] - live.head()[0] * dt + sigma(frozen.view()) * eps.sqrt() * w.get(k)[0];
        assert!((path.at(k + 1)[0] - expected).abs() < 1e-14, "k={k}");
    }
}

#[test]
fn freezing_without_diffusion_is_identity() {
    let mesh = make_mesh(1.0, 2.0, 16).unwrap();
    let c = CoefficientSet::new(1)
        .with_neutral(|s, o| o[0] = 0.3 * s.slot(5)[0].sin())
        .with_drift(|s, o| o[0] = -s.head()[0] + s.delayed()[0].cos());
    let xi = Segment::constant(&mesh, &[0.4]);
    let seed = NoiseSeed::new(12, 0);
    let a = simulate_nsfde(&c, &xi, 0.5, &mesh, seed, TOL).unwrap();
    let b = simulate_frozen_scheme(&c, &xi, 0.5, &mesh, 2, seed, TOL).unwrap();
    assert_eq!(a, b);
}

#[test]
fn finest_freeze_matches_live_scheme() {
    let mesh = make_mesh(1.0, 1.0, 16).unwrap();
    let c = Preset::BoundedTrig.build(1).unwrap();
    let xi = Segment::constant(&mesh, &[0.2]);
    let seed = NoiseSeed::new(2, 9);
    let a = simulate_nsfde(&c, &xi, 0.5, &mesh, seed, TOL).unwrap();
    let b = simulate_frozen_scheme(&c, &xi, 0.5, &mesh, 16, seed, TOL).unwrap();
    assert_eq!(a, b);
}

#[test]
fn frozen_scheme_approaches_live_scheme() {
    let mesh = make_mesh(1.0, 1.0, 256).unwrap();
    let c = CoefficientSet::new(1)
        .with_drift(|s, o| o[0] = -0.5 * s.delayed()[0])
        .with_diffusion(|s, o| o[0] = 1.0 + 0.5 * s.head()[0].sin());
    let xi = Segment::constant(&mesh, &[0.5]);
    let ns = [8, 16, 32, 64];
    let mut mean = [0.0; 4];
    let reps = 40;
    for s in 0..reps {
        let w = brownian_increments(&mesh, 1, NoiseSeed::new(77, s));
        let live = simulate_nsfde_with(&c, &xi, 1.0, &w, TOL).unwrap();
        for (m, &n) in mean.iter_mut().zip(&ns) {
            *m += simulate_frozen_with(&c, &xi, 1.0, n, &w, TOL).unwrap().sup_distance(&live) / reps as f64;
        }
    }
    assert!(mean.windows(2).all(|w| w[1] < w[0]), "{mean:?}");
}

#[test]
fn zero_noise_matches_uncontrolled_skeleton() {
    let mesh = make_mesh(1.0, 2.0, 20).unwrap();
    for preset in [Preset::NeutralLinear { kappa: 0.5 }, Preset::BoundedTrig, Preset::Superlinear] {
        let c = preset.build(2).unwrap();
        let xi = Segment::from_fn(&mesh, 2, |t| vec![0.5 + t, (2.0 * t).sin()]).unwrap();
        let sim = simulate_nsfde(&c, &xi, 0.0, &mesh, NoiseSeed::new(8, 8), TOL).unwrap();
        let skel = solve_skeleton(&c, &xi, &ControlPath::zeros(&mesh, 2), TOL).unwrap();
        assert!(sim.as_slice().iter().zip(skel.as_slice()).all(|(a, b)| a == b), "{preset}");
    }
}

#[test]
fn neutral_difference_bound() {
    // sup|Z| <= sup|Y| / (1 - kappa) for Z = X - X', Y = Z - (G(X_t) - G(X'_t))
    let mesh = make_mesh(1.0, 3.0, 10).unwrap();
    let kappa = 0.6;
    let c = CoefficientSet::new(1)
        .with_neutral(move |s, o| o[0] = kappa * (0.5 * s.head()[0] + 0.5 * s.delayed()[0]).sin())
        .with_drift(|s, o| o[0] = -s.head()[0])
        .with_diffusion(|s, o| o[0] = 1.0 + 0.3 * s.slot(4)[0].cos())
        .with_kappa(kappa)
        .unwrap();
    let xi = Segment::from_fn(&mesh, 1, |t| vec![1.0 + t]).unwrap();
    for s in 0..20 {
        let x = simulate_nsfde(&c, &xi, 0.4, &mesh, NoiseSeed::new(1, s), TOL).unwrap();
        let y = simulate_frozen_scheme(&c, &xi, 0.4, &mesh, 2, NoiseSeed::new(1, s), TOL).unwrap();
        let mut sup_z: f64 = 0.0;
        let mut sup_y: f64 = 0.0;
        for k in 0..=mesh.n_forward() {
            let z = x.at(k)[0] - y.at(k)[0];
            let gz = c.eval_neutral(x.window(k))[0] - c.eval_neutral(y.window(k))[0];
            sup_z = sup_z.max(z.abs());
            sup_y = sup_y.max((z - gz).abs());
            assert!(sup_z <= sup_y / (1.0 - kappa) + 1e-10, "step {k}");
        }
    }
}

#[test]
fn iteration_counts_respect_contraction() {
    let mesh = make_mesh(1.0, 2.0, 25).unwrap();
    let kappa = 0.5;
    let c = CoefficientSet::new(1)
        .with_neutral(move |s, o| o[0] = kappa * s.head()[0])
        .with_drift(|s, o| o[0] = -s.delayed()[0])
        .with_diffusion(|_, o| o[0] = 1.0);
    let xi = Segment::constant(&mesh, &[1.0]);
    let w = brownian_increments(&mesh, 1, NoiseSeed::new(3, 3));
    let (_, trace) = simulate_nsfde_traced(&c, &xi, 1.0, &w, TOL).unwrap();
    assert_eq!(trace.len(), mesh.n_forward());
    for t in trace {
        let bound = if t.initial_residual <= TOL {
            0
        } else {
            ((TOL / t.initial_residual).ln() / kappa.ln()).ceil() as usize + 1
        };
        assert!(t.iterations <= bound, "{t:?}");
        assert!(t.residual <= TOL);
    }
}

#[test]
fn noise_scaling_equals_diffusion_scaling() {
    let mesh = make_mesh(1.0, 1.0, 20).unwrap();
    let sigma = |c: f64| {
        CoefficientSet::new(1)
            .with_drift(|s, o| o[0] = -s.head()[0].sin())
            .with_diffusion(move |s, o| o[0] = c * (1.0 + 0.5 * s.delayed()[0].cos()))
    };
    let xi = Segment::constant(&mesh, &[0.3]);
    let seed = NoiseSeed::new(10, 4);
    let c = 1.7;
    let a = simulate_nsfde(&sigma(1.0), &xi, c * c * 0.2, &mesh, seed, TOL).unwrap();
    let b = simulate_nsfde(&sigma(c), &xi, 0.2, &mesh, seed, TOL).unwrap();
    assert!(a.sup_distance(&b) < 1e-12);
}

proptest! {
    #[test]
    fn seeded_runs_are_reproducible(seed in any::<u64>(), stream in 0u64..1000, eps in 0.0f64..2.0) {
        let mesh = make_mesh(1.0, 1.0, 8).unwrap();
        let c = Preset::NeutralLinear { kappa: 0.5 }.build(1).unwrap();
        let xi = Segment::constant(&mesh, &[0.1]);
        let a = simulate_nsfde(&c, &xi, eps, &mesh, NoiseSeed::new(seed, stream), TOL).unwrap();
        let b = simulate_nsfde(&c, &xi, eps, &mesh, NoiseSeed::new(seed, stream), TOL).unwrap();
        prop_assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn shared_history_shares_first_window(v in -5.0f64..5.0, seed in any::<u64>()) {
        let mesh = make_mesh(1.0, 1.0, 4).unwrap();
        let c = Preset::Ou.build(1).unwrap();
        let xi = Segment::constant(&mesh, &[v]);
        let a = simulate_nsfde(&c, &xi, 1.0, &mesh, NoiseSeed::new(seed, 0), TOL).unwrap();
        let b = simulate_nsfde(&c, &xi, 0.1, &mesh, NoiseSeed::new(seed, 1), TOL).unwrap();
        prop_assert_eq!(a.segment_at(0).unwrap(), b.segment_at(0).unwrap());
    }
}

#[test]
fn zero_path_norms_vanish() {
    let mesh = make_mesh(1.0, 1.0, 4).unwrap();
    let p = PathTrajectory::from_fn(&mesh, 3, |_| vec![0.0; 3]).unwrap();
    for k in 0..=4 {
        assert_relative_eq!(p.segment_at(k).unwrap().uniform_norm(), 0.0);
    }
}
