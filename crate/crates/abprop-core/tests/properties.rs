use std::f64::consts::PI;

use abprop_core::cover::{
    chi_visible, enumerate_alternating_words, reduce_and_multiply, rep_value, AlternatingWord, CoverPoint,
    ExtremePoint, GroupWord, Letter, WindingPath,
};
use abprop_core::geometry::{
    crossing_factors, polar_around, polar_to_point, sweep_angle, PlanePoint, Vortex, VortexConfig,
};
use abprop_core::kernels::{chain_s, kernel_z, vertex_v_log, ChainVariant, EvalMode, Flux};
use abprop_core::propagator::{k_closed, PropagatorRequest};
use abprop_core::quadrature::{integrate_simplex, QuadratureSpec, SimplexDomain};
use abprop_core::verify::check_sum_identity;
use abprop_core::Complex64;
use proptest::prelude::*;

fn cfg() -> VortexConfig {
    VortexConfig::canonical(1.0).unwrap()
}

fn point() -> impl Strategy<Value = PlanePoint> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y)| PlanePoint::new(x, y))
}

/// Points at least `margin` away from both cuts and vortices.
fn generic_point(margin: f64) -> impl Strategy<Value = PlanePoint> {
    point().prop_filter("near a cut or vortex", move |p| {
        let c = cfg();
        p.y.abs() > margin && p.dist(c.a()) > margin && p.dist(c.b()) > margin
    })
}

fn vortex() -> impl Strategy<Value = Vortex> {
    prop_oneof![Just(Vortex::A), Just(Vortex::B)]
}

fn group_word() -> impl Strategy<Value = GroupWord> {
    prop::collection::vec((vortex(), any::<bool>()), 0..8)
        .prop_map(|l| GroupWord::from_letters(l.into_iter().map(|(v, inv)| Letter::new(v, inv))))
}

fn winding_path(max_len: usize) -> impl Strategy<Value = WindingPath> {
    (vortex(), 0..=max_len).prop_flat_map(|(first, n)| {
        prop::collection::vec(-5i64..=5, n)
            .prop_map(move |k| WindingPath::new(AlternatingWord::starting_at(first, k.len()), k).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn polar_round_trip(p in point(), v in vortex()) {
        let c = cfg();
        prop_assume!(c.vortex_at(p).is_none());
        let q = polar_to_point(polar_around(p, v, &c).unwrap(), &c);
        let scale = p.dist(c.position(v)).max(1.0);
        prop_assert!(q.dist(p) <= 1e-14 * scale * 4.0);
    }

    #[test]
    fn crossing_symmetry_and_values(p in generic_point(1e-6), q in generic_point(1e-6), alpha in 0.0..1.0f64, beta in 0.0..1.0f64) {
        let flux = Flux::new(alpha, beta).unwrap();
        let c = cfg();
        let (Ok((fa, fb)), Ok((ga, gb))) = (crossing_factors(p, q, &flux, &c), crossing_factors(q, p, &flux, &c)) else {
            return Ok(());
        };
        for (f, g) in [(fa, ga), (fb, gb)] {
            prop_assert!((f.zeta.norm() - 1.0).abs() < 1e-15);
            prop_assert!(f.eta == 0.0 || (f.eta.abs() - 2.0 * PI).abs() == 0.0);
            prop_assert_eq!(f.eta, -g.eta);
            prop_assert!((f.zeta - g.zeta.conj()).norm() < 1e-15);
        }
        // The angle-based classification agrees with the geometric one.
        prop_assert_eq!(sweep_angle(Vortex::A, p, q, &c).unwrap().eta, fa.eta);
        prop_assert_eq!(sweep_angle(Vortex::B, p, q, &c).unwrap().eta, fb.eta);
    }

    #[test]
    fn sweep_angle_is_continuous(p in generic_point(0.05), q in generic_point(0.05), d in (-1.0..1.0f64, -1.0..1.0f64), v in vortex()) {
        let c = cfg();
        let delta = 1e-7;
        let p2 = PlanePoint::new(p.x + delta * d.0, p.y + delta * d.1);
        let (Ok(a), Ok(b)) = (sweep_angle(v, p, q, &c), sweep_angle(v, p2, q, &c)) else {
            return Ok(());
        };
        prop_assume!(a.reduced.abs() < PI - 1e-3);
        prop_assert_eq!(a.eta, b.eta);
        prop_assert!((a.reduced - b.reduced).abs() < 1e-7 / 0.05 * 2.0);
    }

    #[test]
    fn word_product_is_associative(u in group_word(), v in group_word(), w in group_word()) {
        let left = reduce_and_multiply(&reduce_and_multiply(&u, &v), &w);
        let right = reduce_and_multiply(&u, &reduce_and_multiply(&v, &w));
        prop_assert_eq!(&left, &right);
        let e = GroupWord::identity();
        prop_assert_eq!(&reduce_and_multiply(&e, &u), &u);
        prop_assert_eq!(&reduce_and_multiply(&u, &e), &u);
        prop_assert!(reduce_and_multiply(&u, &u.inverse()).is_identity());
    }

    #[test]
    fn rep_value_is_a_homomorphism(p in winding_path(4), q in winding_path(4), alpha in 0.0..1.0f64, beta in 0.0..1.0f64) {
        let flux = Flux::new(alpha, beta).unwrap();
        if let Some(pq) = p.concat(&q) {
            let lhs = rep_value(&pq, &flux);
            let rhs = rep_value(&p, &flux) * rep_value(&q, &flux);
            prop_assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn visibility_is_symmetric(p in point(), q in point(), g in group_word(), h in group_word(), vp in vortex(), vq in vortex(), kind in 0..4u8) {
        let c = cfg();
        prop_assume!(c.vortex_at(p).is_none() && c.vortex_at(q).is_none());
        let a = if kind & 1 == 0 {
            CoverPoint::Regular { point: p, sheet: g }
        } else {
            CoverPoint::Extreme(ExtremePoint::new(vp, g))
        };
        let b = if kind & 2 == 0 {
            CoverPoint::Regular { point: q, sheet: h }
        } else {
            CoverPoint::Extreme(ExtremePoint::new(vq, h))
        };
        prop_assert_eq!(chi_visible(&a, &b, &c), chi_visible(&b, &a, &c));
    }

    #[test]
    fn euclidean_z_is_positive(tau in 1e-3..10.0f64, r in 0.0..5.0f64) {
        let z = kernel_z(Complex64::new(0.0, -tau), r, true).unwrap();
        prop_assert_eq!(z.im, 0.0);
        prop_assert!(z.re > 0.0 || (r * r / tau) > 2800.0);
    }

    #[test]
    fn vertex_v_antisymmetry(theta in -3.0..3.0f64, l in -20.0..20.0f64) {
        let v = vertex_v_log(theta, Complex64::new(l, 0.0)).unwrap();
        let w = vertex_v_log(-theta, Complex64::new(l, 0.0)).unwrap();
        prop_assert!((w + v.conj()).norm() <= 1e-14 * v.norm().max(1.0));
    }

    #[test]
    fn chain_s_conjugation(n in 2usize..6, first in vortex(), theta in -3.1..3.1f64, theta0 in -3.1..3.1f64,
                           s in prop::collection::vec(-6.0..6.0f64, 6), alpha in 0.01..0.99f64, beta in 0.01..0.99f64,
                           mixed in any::<bool>()) {
        let word = AlternatingWord::starting_at(first, n);
        let flux = Flux::new(alpha, beta).unwrap();
        let s: Vec<Complex64> = s[..n].iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let variant = if mixed { ChainVariant::Mixed } else { ChainVariant::Matched };
        let a = chain_s(&word, &s, theta, theta0, &flux, variant).unwrap();
        let b = chain_s(&word, &s, -theta, -theta0, &flux, variant).unwrap();
        prop_assert!((b - a.conj()).norm() <= 1e-13 * a.norm().max(1e-300));
    }
}

/// Dirichlet integral `∫_{Δ_T} Π t_j^{a_j} = T^{n+Σa} Π a_j! / (n+Σa)!`.
fn dirichlet(total: f64, powers: &[u32]) -> f64 {
    let n = powers.len() - 1;
    let sum: u32 = powers.iter().sum();
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let num: f64 = powers.iter().map(|&a| fact(a)).product();
    total.powi((n as u32 + sum) as i32) * num / fact(n as u32 + sum)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simplex_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, total in 0.5..3.0f64) {
        let d = SimplexDomain::new(2, total).unwrap();
        let spec = QuadratureSpec::default();
        let f = |t: &[f64]| Complex64::new((t[0] - t[2]).cos(), t[1]);
        let g = |t: &[f64]| Complex64::new(t[0] * t[1], (-t[2]).exp());
        let fa = integrate_simplex(f, &d, &spec).unwrap();
        let gb = integrate_simplex(g, &d, &spec).unwrap();
        let both = integrate_simplex(|t| f(t) * a + g(t) * b, &d, &spec).unwrap();
        let tol = 4.0 * (fa.err_est + gb.err_est + both.err_est) + 1e-13;
        prop_assert!((both.value - (fa.value * a + gb.value * b)).norm() <= tol);
    }

    #[test]
    fn simplex_permutation_symmetry(c in 0.1..2.0f64, total in 0.5..2.0f64) {
        // A symmetric integrand gives the same value under any relabeling.
        let d = SimplexDomain::new(2, total).unwrap();
        let spec = QuadratureSpec::default().with_rel_tol(1e-13);
        let sym = |t: &[f64]| Complex64::new((-c * (t[0] * t[1] + t[1] * t[2] + t[0] * t[2])).exp(), 0.0);
        let a = integrate_simplex(sym, &d, &spec).unwrap().value;
        let b = integrate_simplex(|t| sym(&[t[2], t[0], t[1]]), &d, &spec).unwrap().value;
        prop_assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn simplex_refinement_is_monotone(p in prop::collection::vec(0u32..4, 3), total in 0.5..2.0f64) {
        let d = SimplexDomain::new(2, total).unwrap();
        let exact = dirichlet(total, &p);
        let f = |t: &[f64]| Complex64::new(t.iter().zip(&p).map(|(x, &k)| x.powi(k as i32)).product(), 0.0);
        let mut last = f64::INFINITY;
        for tol in [1e-4, 5e-5, 2.5e-5, 1.25e-5] {
            let v = integrate_simplex(f, &d, &QuadratureSpec::default().with_rel_tol(tol)).unwrap().value;
            let err = (v.re - exact).abs();
            prop_assert!(err <= last.max(1e-15 * exact));
            last = err;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_flux_is_free(x0 in generic_point(1e-3), x in generic_point(1e-3), tau in 0.1..5.0f64) {
        let mode = EvalMode::euclidean(tau).unwrap();
        let req = PropagatorRequest::new(x0, x, mode, Flux::zero(), cfg());
        let v = k_closed(&req).unwrap().value;
        let free = (-x.dist(x0).powi(2) / (4.0 * tau)).exp() / (4.0 * PI * tau);
        prop_assert!((v - Complex64::new(free, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn hermiticity(x0 in generic_point(0.05), x in generic_point(0.05), alpha in 0.05..0.95f64, beta in 0.05..0.95f64) {
        let mode = EvalMode::euclidean(1.0).unwrap();
        let req = PropagatorRequest::new(x0, x, mode, Flux::new(alpha, beta).unwrap(), cfg()).with_n_max(3);
        let f = k_closed(&req).unwrap();
        let b = k_closed(&req.clone().with_endpoints(x, x0)).unwrap();
        let tol = f.quad_err + b.quad_err + f.truncation_bound + b.truncation_bound + 1e-14 * f.value.norm();
        prop_assert!((f.value - b.value.conj()).norm() <= tol);
    }

    #[test]
    fn terms_decay_and_respect_bounds(x0 in generic_point(0.05), x in generic_point(0.05), alpha in 0.05..0.95f64, beta in 0.05..0.95f64, tau in 0.2..2.0f64) {
        let mode = EvalMode::euclidean(tau).unwrap();
        let req = PropagatorRequest::new(x0, x, mode, Flux::new(alpha, beta).unwrap(), cfg());
        let out = k_closed(&req).unwrap();
        for t in &out.terms[1..] {
            prop_assert!(t.value.norm() <= t.bound * (1.0 + 1e-9) + t.err_est);
        }
        // Adding two letters keeps both end vortices and lengthens the path
        // by 2ρ. Neighbouring lengths change an end vortex, so need not decay.
        let bound = |n: usize, first: Vortex| {
            out.terms
                .iter()
                .find(|t| t.word.len() == n && t.word.vortices()[0] == first)
                .map(|t| t.bound)
                .unwrap()
        };
        for first in [Vortex::A, Vortex::B] {
            for n in 1..=2 {
                prop_assert!(bound(n + 2, first) < bound(n, first));
            }
        }
        let level = |n: usize| bound(n, Vortex::A) + bound(n, Vortex::B);
        prop_assert!(out.truncation_bound < level(3) + level(4));
    }
}

#[test]
fn two_words_of_each_length() {
    let words = enumerate_alternating_words(7);
    for n in 1..=7 {
        assert_eq!(words.iter().filter(|w| w.len() == n).count(), 2);
    }
    assert_eq!(words.len(), 15);
}

#[test]
fn sum_identity_improves_with_k_max() {
    for &(alpha, theta, s) in &[(0.3, 0.5, 1.0), (0.71, -2.0, -0.4), (0.13, 2.9, 0.0), (0.5, 0.0, 3.0)] {
        let mut last = f64::INFINITY;
        for k in [100u64, 200, 400, 800, 1600] {
            let d = check_sum_identity(alpha, theta, s, k).unwrap().discrepancy;
            assert!(
                d <= last * (1.0 + 1e-9) + 1e-14,
                "{alpha} {theta} {s} {k}: {d} > {last}"
            );
            last = d;
        }
    }
}
