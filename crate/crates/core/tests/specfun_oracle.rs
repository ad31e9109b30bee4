//! Recurrence evaluation checked against independent explicit series.

use intertwine::jet::C64;
use intertwine::specfun::{eval_poly, eval_poly_deriv, PolyFamily, PolyKind};
use proptest::prelude::*;

fn gbinom(top: C64, k: usize) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for j in 0..k {
        acc = acc * (top - j as f64) / (j + 1) as f64;
    }
    acc
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Returns (value, sum of term magnitudes).
fn series(fam: &PolyFamily, z: C64) -> (C64, f64) {
    let n = fam.degree;
    let terms: Vec<C64> = match fam.kind {
        // H_n(z) = n! sum_m (-1)^m (2z)^(n-2m) / (m! (n-2m)!)
        PolyKind::Hermite => (0..=n / 2)
            .map(|m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                (z * 2.0).powu((n - 2 * m) as u32)
                    * (sign * factorial(n) / (factorial(m) * factorial(n - 2 * m)))
            })
            .collect(),
        // L_n^a(z) = sum_i (-1)^i C(n+a, n-i) z^i / i!
        PolyKind::LaguerreAssoc => (0..=n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                gbinom(fam.alpha + n as f64, n - i) * z.powu(i as u32) * (sign / factorial(i))
            })
            .collect(),
        // P_n(z) = sum_m C(n+a, n-m) C(n+a+b+m, m) ((z-1)/2)^m
        PolyKind::JacobiGeneral => (0..=n)
            .map(|m| {
                gbinom(fam.alpha + n as f64, n - m)
                    * gbinom(fam.alpha + fam.beta + (n + m) as f64, m)
                    * ((z - 1.0) * 0.5).powu(m as u32)
            })
            .collect(),
    };
    let mag = terms.iter().map(|t| t.norm()).sum();
    (terms.into_iter().sum(), mag)
}

fn family(kind: u8, n: usize, a: (f64, f64), b: (f64, f64)) -> PolyFamily {
    match kind % 3 {
        0 => PolyFamily::hermite(n),
        1 => PolyFamily::laguerre(n, a.0.abs() * 3.0),
        _ => PolyFamily::jacobi(n, C64::new(a.0, a.1), C64::new(b.0, b.1)),
    }
}

#[test]
fn spec_examples_against_series() {
    let z1 = C64::new(1.0, 0.0);
    assert!((series(&PolyFamily::hermite(2), z1).0 - C64::new(2.0, 0.0)).norm() < 1e-15);
    assert!((eval_poly(&PolyFamily::hermite(2), z1) - C64::new(2.0, 0.0)).norm() < 1e-15);
    let lag = PolyFamily::laguerre(1, 2.0);
    assert!(series(&lag, C64::new(3.0, 0.0)).0.norm() < 1e-15);
    assert!(eval_poly(&lag, C64::new(3.0, 0.0)).norm() < 1e-15);
    // H_2' (1) = 2*2*H_1(1) = 8
    assert!((eval_poly_deriv(&PolyFamily::hermite(2), z1, 1) - C64::new(8.0, 0.0)).norm() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn recurrence_matches_series(
        kind in 0u8..3,
        n in 0usize..=8,
        a in (-4.0f64..4.0, -3.0f64..3.0),
        b in (-4.0f64..4.0, -3.0f64..3.0),
        z in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let fam = family(kind, n, a, b);
        let zc = C64::new(z.0, z.1);
        let (expect, mag) = series(&fam, zc);
        let got = eval_poly(&fam, zc);
        let scale = expect.norm().max(1e-3 * mag).max(1e-300);
        prop_assert!((got - expect).norm() / scale < 1e-12,
            "{fam:?} z={zc} got={got} expect={expect}");
    }

    #[test]
    fn jacobi_reflection_symmetry(
        n in 0usize..=8,
        a in (-4.0f64..4.0, -3.0f64..3.0),
        b in (-4.0f64..4.0, -3.0f64..3.0),
        z in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let (ac, bc) = (C64::new(a.0, a.1), C64::new(b.0, b.1));
        let zc = C64::new(z.0, z.1);
        let lhs = eval_poly(&PolyFamily::jacobi(n, ac, bc), -zc);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = eval_poly(&PolyFamily::jacobi(n, bc, ac), zc) * sign;
        let (_, mag) = series(&PolyFamily::jacobi(n, bc, ac), zc);
        let scale = rhs.norm().max(1e-3 * mag).max(1e-300);
        prop_assert!((lhs - rhs).norm() / scale < 1e-12);
    }

    #[test]
    fn derivative_rule_matches_central_difference(
        kind in 0u8..3,
        n in 1usize..=8,
        order in 1usize..=2,
        a in (-2.0f64..2.0, -1.0f64..1.0),
        b in (-2.0f64..2.0, -1.0f64..1.0),
        z in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let fam = family(kind, n, a, b);
        let zc = C64::new(z.0, z.1);
        let h = 1e-5;
        let fd = (eval_poly_deriv(&fam, zc + h, order - 1) - eval_poly_deriv(&fam, zc - h, order - 1)) / (2.0 * h);
        let exact = eval_poly_deriv(&fam, zc, order);
        // scale by the neighbouring derivative magnitudes so that near-zero
        // derivatives do not produce meaningless ratios
        let scale = exact.norm()
            .max(1e-2 * eval_poly_deriv(&fam, zc, order - 1).norm())
            .max(1e-2 * eval_poly_deriv(&fam, zc, order + 1).norm())
            .max(1e-12);
        prop_assert!((fd - exact).norm() / scale < 1e-7, "{fam:?} z={zc} fd={fd} exact={exact}");
    }

    #[test]
    fn conjugate_parameters_give_real_values_up_to_phase(
        n in 0usize..=10,
        a in (-8.0f64..2.0, -4.0f64..4.0),
        y in -5.0f64..5.0,
    ) {
        let alpha = C64::new(a.0, a.1);
        let fam = PolyFamily::jacobi(n, alpha, alpha.conj());
        let p = eval_poly(&fam, C64::new(0.0, y));
        let rotated = p * C64::new(0.0, -1.0).powu(n as u32);
        prop_assume!(p.norm() > 1e-200);
        prop_assert!(rotated.im.abs() / p.norm() < 1e-10);
    }
}
