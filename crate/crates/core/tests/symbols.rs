mod common;

use brokenflow::phasespace::{ChartPoint, CompressedCovector};
use brokenflow::symbols::{
    certify_positivity, cutoffs, fine_family, measure_constants, omega_coarse, phi_coarse, q_b2_e_coarse, tangential_family, tangential_omega,
    CertifyOptions, FamilyKind, SymbolContext,
};
use brokenflow::Error;
use common::{e, lattice};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn s3() -> brokenflow::arrangement::SubspaceLattice {
    lattice(4, &[("a", &[0, 1]), ("b", &[0, 1, 2])])
}

fn ctx(tau: f64, nu: f64) -> SymbolContext {
    let l = s3();
    let center = CompressedCovector { face: l.id("a").unwrap(), omega: e(4, 0), tau, nu: e(4, 1) * nu };
    SymbolContext::new(&l, &center, 1.0).unwrap()
}

#[test]
fn cutoff_values() {
    let c = cutoffs(1.0);
    let inv_e = (-1.0f64).exp();
    assert!((c.chi0 - inv_e).abs() < 1e-16 && (c.dchi0 - inv_e).abs() < 1e-16);
    assert_eq!(cutoffs(-0.5).chi0, 0.0);
    assert_eq!(cutoffs(-0.5).dchi0, 0.0);
    let mid = cutoffs(0.5);
    assert!(mid.chi1 > 0.0 && mid.chi1 < 1.0 && mid.dchi1 > 0.0);
    // The step is symmetric about 1/2 and flat outside (0, 1).
    assert!((mid.chi1 - 0.5).abs() < 1e-12);
    assert!((cutoffs(0.2).chi1 + cutoffs(0.8).chi1 - 1.0).abs() < 1e-12);
    assert_eq!((cutoffs(0.0).chi1, cutoffs(1.0).chi1, cutoffs(1.5).dchi1), (0.0, 1.0, 0.0));
    let mut prev = 0.0;
    for i in 0..=1000 {
        let t = i as f64 / 1000.0;
        let c = cutoffs(t);
        assert!(c.chi1 >= prev);
        prev = c.chi1;
        if t > 0.0 {
            assert!((c.dchi0 * t * t - c.chi0).abs() <= 1e-12 * c.chi0.max(1e-300));
        }
    }
    // chi1' integrates to one.
    let n = 20000;
    let integral: f64 = (0..n).map(|i| cutoffs((i as f64 + 0.5) / n as f64).dchi1).sum::<f64>() / n as f64;
    assert!((integral - 1.0).abs() < 1e-9);
}

#[test]
fn coarse_family_at_the_centre() {
    let c = ctx(0.3, 0.4).with_beta(1e-3);
    let x0 = c.center_point();
    assert_eq!(omega_coarse(&x0, &c).unwrap(), 0.0);
    assert_eq!(phi_coarse(&x0, &c).unwrap(), 0.0);
    let t = q_b2_e_coarse(&x0, &c).unwrap();
    let expected = (-1.0 / (2.0 / c.a0)).exp();
    assert!((t.q - expected).abs() < 1e-15);
    assert_eq!(t.e, 0.0);
    assert!(t.b2 > 0.0);
}

#[test]
fn coarse_support_and_lower_bound_on_random_points() {
    let c = ctx(0.3, 0.4).with_beta(1e-3).with_delta(1e-3);
    let c0 = c.normal_energy();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut inside = 0;
    for _ in 0..20000 {
        let mut pt = c.center_point();
        let r = 0.2;
        pt.y = DVector::from_fn(2, |_, _| rng.gen_range(-r..r) * 0.1);
        pt.z = DVector::from_fn(1, |_, _| rng.gen_range(-r..r) * 0.01);
        pt.mu = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0));
        pt.tau += rng.gen_range(-0.01..0.01);
        let t = q_b2_e_coarse(&pt, &c).unwrap();
        let eta = pt.eta();
        let w = omega_coarse(&pt, &c).unwrap();
        if t.q > 0.0 {
            inside += 1;
            assert!(eta.abs() <= 2.0 * c.delta * (1.0 + 1e-12));
            assert!(w <= 4.0 * c.delta * c.delta / 1e-3 * (1.0 + 1e-12));
            assert!(t.b2 >= c0 * c.a0 / 16.0 * t.q * (1.0 - 1e-12));
        }
        if t.e != 0.0 {
            assert!(eta >= -2.0 * c.delta * (1.0 + 1e-12) && eta <= -c.delta * (1.0 - 1e-12));
        }
    }
    assert!(inside > 100, "only {inside} samples met supp q");
}

#[test]
fn coarse_mixed_derivatives_are_controlled_by_b2() {
    // At y = 0 the only mu-dependence of dq is through d_y q = mu d_eta q.
    let c = ctx(0.3, 0.4).with_beta(1e-3).with_delta(1e-3);
    let c0 = c.normal_energy();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let h = 1e-6;
    for _ in 0..50 {
        let mut pt = c.center_point();
        pt.mu = DVector::from_fn(2, |_, _| rng.gen_range(-0.5..0.5));
        pt.z[0] = rng.gen_range(-0.02..0.02);
        let b2 = q_b2_e_coarse(&pt, &c).unwrap().b2;
        if b2 == 0.0 {
            continue;
        }
        for i in 0..2 {
            for j in 0..2 {
                let q = |dy: f64, dm: f64| {
                    let mut p = pt.clone();
                    p.y[i] += dy;
                    p.mu[j] += dm;
                    q_b2_e_coarse(&p, &c).unwrap().q
                };
                let mixed = (q(h, h) - q(h, -h) - q(-h, h) + q(-h, -h)) / (4.0 * h * h);
                assert!(mixed.abs() <= 2.0 / c0 * b2, "d_mu d_y q = {mixed:e}, b2 = {b2:e}");
            }
        }
    }
}

#[test]
fn fine_model_curve_is_a_zero_set() {
    let c = ctx(0.3, 0.4).with_delta(1e-4);
    let x0 = c.center_point();
    let w0 = fine_family(&x0, &c).unwrap().w0;
    let normal = c.normal_energy();
    assert!((w0.eta_rate - 2.0 * normal).abs() < 1e-15);
    assert!((w0.tau_rate + 2.0 * (1.0 - 0.09)).abs() < 1e-15);
    let mu = DVector::from_vec(vec![0.6, -0.8]) * normal.sqrt();
    for k in -5..=5 {
        let eta = k as f64 * 1e-3;
        let pt = ChartPoint {
            y: &mu * (eta / mu.norm_squared()),
            z: DVector::from_vec(w0.z_rate.iter().map(|r| r / w0.eta_rate * eta).collect()),
            tau: c.tau0 + w0.tau_rate / w0.eta_rate * eta,
            mu: mu.clone(),
            nu: DVector::from_vec(c.nu0.iter().zip(&w0.nu_rate).map(|(n, r)| n + r / w0.eta_rate * eta).collect()),
        };
        let v = fine_family(&pt, &c).unwrap();
        assert!(v.omega0.abs() < 1e-28, "omega0 = {:e} at eta = {eta}", v.omega0);
    }
}

#[test]
fn fine_family_refuses_bad_centres() {
    // Sigma_t centre: the normal energy vanishes.
    let c = ctx(0.6, 0.8);
    assert!(matches!(fine_family(&c.center_point(), &c), Err(Error::RadialDegeneracy(_))));
    assert!(matches!(certify_positivity(FamilyKind::Fine, &c, &CertifyOptions::default()), Err(Error::RadialDegeneracy(_))));
    // delta above the measurement scale is refused before sampling.
    let c = ctx(0.3, 0.4).with_eps(0.9).with_delta(2e-3);
    assert!(matches!(certify_positivity(FamilyKind::Fine, &c, &CertifyOptions::default()), Err(Error::ConstraintViolation(_))));
}

#[test]
fn tangential_omega_vanishes_to_second_order_at_the_centre() {
    let c = ctx(0.6, 0.8).with_delta(2e-3);
    let x0 = c.center_point();
    assert!(tangential_omega(&x0, &c).unwrap().abs() < 1e-28);
    let h = 1e-5;
    let n = x0.to_vec().len();
    for i in 0..n {
        let mut dir = vec![0.0; n];
        dir[i] = 1.0;
        let d = ChartPoint::from_slice(2, 1, &dir);
        let f = |s: f64| tangential_omega(&x0.offset(s, &d), &c).unwrap();
        let grad = (f(h) - f(-h)) / (2.0 * h);
        assert!(grad.abs() < 1e-8, "d omega along coordinate {i}: {grad:e}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..500 {
        let d = ChartPoint::from_slice(2, 1, &(0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
        assert!(tangential_omega(&x0.offset(1e-2, &d), &c).unwrap() >= 0.0);
    }
}

#[test]
fn tangential_omega_is_constant_along_the_face_flow() {
    // RK4 for the chart field from a point with y = 0, mu = 0; the flow stays
    // on the face and omega must not change along it.
    let c = ctx(0.6, 0.8).with_delta(2e-3);
    let mut pt = c.center_point();
    pt.z[0] = 0.01;
    pt.nu[0] -= 0.005;
    pt.tau -= 0.001;
    let w_start = tangential_omega(&pt, &c).unwrap();
    assert!(w_start > 0.0);
    let h = 1e-4;
    for _ in 0..10 {
        let f = |p: &ChartPoint| c.chart.field(p);
        let k1 = f(&pt);
        let k2 = f(&pt.offset(h / 2.0, &k1));
        let k3 = f(&pt.offset(h / 2.0, &k2));
        let k4 = f(&pt.offset(h, &k3));
        pt = pt.offset(h / 6.0, &k1).offset(h / 3.0, &k2).offset(h / 3.0, &k3).offset(h / 6.0, &k4);
        assert!(pt.y.norm() < 1e-14 && pt.mu.norm() < 1e-14);
        let w = tangential_omega(&pt, &c).unwrap();
        assert!((w - w_start).abs() < 1e-7 * w_start.max(1e-6), "omega drifted from {w_start:e} to {w:e}");
    }
}

#[test]
fn tangential_family_refuses_bad_centres() {
    let sigma_n = ctx(0.3, 0.4);
    assert!(matches!(tangential_omega(&sigma_n.center_point(), &sigma_n), Err(Error::WrongStratum { .. })));
    let l = s3();
    let radial = CompressedCovector { face: l.id("a").unwrap(), omega: e(4, 0), tau: 1.0, nu: DVector::zeros(4) };
    let c = SymbolContext::new(&l, &radial, 1.0).unwrap();
    assert!(matches!(tangential_omega(&c.center_point(), &c), Err(Error::RadialDegeneracy(_))));
}

#[test]
fn context_requires_a_regular_base_point() {
    let l = s3();
    let on_origin_face = CompressedCovector { face: l.id("b").unwrap(), omega: e(4, 0), tau: 0.0, nu: e(4, 1) * 0.5 };
    assert!(matches!(SymbolContext::new(&l, &on_origin_face, 1.0), Err(Error::SingularBasePoint { .. })));
    let off = CompressedCovector { face: l.id("a").unwrap(), omega: e(4, 3), tau: 0.0, nu: DVector::zeros(4) };
    assert!(matches!(SymbolContext::new(&l, &off, 1.0), Err(Error::NotOnFace { .. })));
}

/// A chart point over `C_b` (the `y` direction inside `X_b`) and the same
/// point with normal momentum added in the direction normal to `X_b`.
fn fiber_pair(c: &SymbolContext, rng: &mut ChaCha8Rng, size: f64) -> (ChartPoint, ChartPoint) {
    let nb = c.chart.normal_basis();
    let inside = nb.transpose() * e(4, 2);
    let outside = nb.transpose() * e(4, 3);
    let mut pt = c.center_point();
    pt.y = &inside * rng.gen_range(-size..size);
    pt.z[0] = rng.gen_range(-size..size);
    pt.tau += rng.gen_range(-size..size) * 0.1;
    pt.mu = &inside * rng.gen_range(-0.5..0.5) + &outside * rng.gen_range(-0.5..0.5);
    let mut other = pt.clone();
    other.mu += &outside * rng.gen_range(-0.5..0.5);
    (pt, other)
}

#[test]
fn symbols_ignore_momentum_normal_to_a_larger_face() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let coarse = ctx(0.3, 0.4).with_beta(1e-3);
    let fine = ctx(0.3, 0.4).with_delta(1e-4);
    let tang = ctx(0.6, 0.8).with_delta(2e-3);
    for _ in 0..200 {
        let (a, b) = fiber_pair(&coarse, &mut rng, 2e-3);
        assert_eq!(omega_coarse(&a, &coarse).unwrap(), omega_coarse(&b, &coarse).unwrap());
        assert!((phi_coarse(&a, &coarse).unwrap() - phi_coarse(&b, &coarse).unwrap()).abs() < 1e-10);
        assert!((q_b2_e_coarse(&a, &coarse).unwrap().q - q_b2_e_coarse(&b, &coarse).unwrap().q).abs() < 1e-10);

        let (a, b) = fiber_pair(&fine, &mut rng, 1e-4);
        let (fa, fb) = (fine_family(&a, &fine).unwrap(), fine_family(&b, &fine).unwrap());
        assert!((fa.omega - fb.omega).abs() < 1e-10 && (fa.phi - fb.phi).abs() < 1e-10 && (fa.q - fb.q).abs() < 1e-10);

        let (a, b) = fiber_pair(&tang, &mut rng, 2e-3);
        assert_eq!(tangential_omega(&a, &tang).unwrap(), tangential_omega(&b, &tang).unwrap());
    }
    let (a, b) = fiber_pair(&tang, &mut rng, 1e-3);
    let (ta, tb) = (tangential_family(&a, &tang).unwrap(), tangential_family(&b, &tang).unwrap());
    assert!((ta.phi - tb.phi).abs() < 1e-10 && (ta.q - tb.q).abs() < 1e-10);
}

#[test]
fn certificates_are_deterministic() {
    let opts = CertifyOptions::default().with_samples(3000).with_seed(7);
    let c = ctx(0.3, 0.4);
    let m = measure_constants(FamilyKind::Coarse, &c, &opts).unwrap();
    let c = c.with_delta(0.5 * m.delta0);
    let a = certify_positivity(FamilyKind::Coarse, &c, &opts).unwrap();
    let b = certify_positivity(FamilyKind::Coarse, &c, &opts).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert!(a.pass && a.checks_pass());
    assert_eq!(a.samples, 3000);
    assert_eq!(a.pass, a.min_value >= a.threshold);
    assert!(!a.witnesses.is_empty());
    let other = certify_positivity(FamilyKind::Coarse, &c, &opts.with_seed(8)).unwrap();
    assert_ne!(a.min_value, other.min_value);
}

#[test]
fn constraint_violations_are_refused() {
    let opts = CertifyOptions::default().with_samples(1000);
    for (kind, tau, nu) in [(FamilyKind::Coarse, 0.3, 0.4), (FamilyKind::Fine, 0.3, 0.4), (FamilyKind::Tangential, 0.6, 0.8)] {
        let c = ctx(tau, nu);
        let m = measure_constants(kind, &c, &opts).unwrap();
        assert!(m.delta0 > 0.0);
        let bad = c.with_delta(m.delta0 * 1.5);
        assert!(matches!(certify_positivity(kind, &bad, &opts), Err(Error::ConstraintViolation(_))), "{kind:?}");
    }
}
