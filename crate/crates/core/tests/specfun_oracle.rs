//! Cross-checks of the production Bessel/Hankel implementations against the
//! independent brute-force oracle, plus identity-based property tests.

mod support;

use approx::assert_relative_eq;
use helmscat::specfun::{bessel_j, bessel_y, hankel1};
use proptest::prelude::*;
use support::bessel_oracle as oracle;

/// Production and oracle agree to 1e-13 relative, with a 5e-15 absolute
/// floor for points that land next to a zero of the function (purely
/// relative accuracy is unattainable at the zeros; the absolute floor is
/// well inside the 1e-14·max(1,|f|) contract).
#[test]
fn agrees_with_series_oracle_on_wide_grids() {
    let mut points = Vec::new();
    // Log-spaced sweep across nine decades.
    let (lo, hi) = (1e-6f64, 1e3f64);
    let n_log = 400;
    for i in 0..=n_log {
        let t = i as f64 / n_log as f64;
        points.push(lo * (hi / lo).powf(t));
    }
    // Dense linear sweep through the oscillatory region and all branch
    // switchovers of the implementation.
    let n_lin = 800;
    for i in 1..=n_lin {
        points.push(0.05 * i as f64); // 0.05 .. 40
    }
    for &x in &points {
        let j0 = bessel_j(0, x).unwrap();
        let j1 = bessel_j(1, x).unwrap();
        let y0 = bessel_y(0, x).unwrap();
        let y1 = bessel_y(1, x).unwrap();
        assert_relative_eq!(j0, oracle::j(0, x), max_relative = 1e-13, epsilon = 5e-15);
        assert_relative_eq!(j1, oracle::j(1, x), max_relative = 1e-13, epsilon = 5e-15);
        assert_relative_eq!(y0, oracle::y(0, x), max_relative = 1e-13, epsilon = 5e-15);
        assert_relative_eq!(y1, oracle::y(1, x), max_relative = 1e-13, epsilon = 5e-15);
    }
}

/// The oracle's own two regimes (series vs large-argument expansion) must
/// agree at the same points in the window where both are valid; this guards
/// the oracle itself.
#[test]
fn oracle_regimes_are_mutually_consistent() {
    for &x in &[28.0, 30.0, 33.0, 35.0] {
        for n in 0..=1 {
            let (js, ys) = oracle::jy_from_series(n, x);
            let (ja, ya) = oracle::jy_from_asymptotic(n, x);
            assert!(
                (js - ja).abs() < 1e-14 && (ys - ya).abs() < 1e-14,
                "oracle regime mismatch at {x}: J {js} vs {ja}, Y {ys} vs {ya}"
            );
        }
    }
}

/// Spec'd frozen reference values.
#[test]
fn oracle_reproduces_frozen_values() {
    assert_relative_eq!(oracle::j(0, 1.0), 0.7651976865579666, epsilon = 1e-15);
    assert_relative_eq!(oracle::j(1, 1.0), 0.4400505857449335, epsilon = 1e-15);
    assert_relative_eq!(oracle::y(0, 1.0), 0.0882569642156769, epsilon = 1e-14);
    assert_relative_eq!(oracle::y(1, 1.0), -0.7812128213002887, epsilon = 1e-15);
}

/// H⁽¹⁾ components are exactly the J and Y values.
#[test]
fn hankel_components_match_j_and_y() {
    for &x in &[0.3, 1.0, 4.2, 9.7, 25.0, 77.0] {
        for n in 0..=1u32 {
            let h = hankel1(n, x).unwrap();
            assert_eq!(h.re, bessel_j(n, x).unwrap());
            assert_eq!(h.im, bessel_y(n, x).unwrap());
        }
    }
}

proptest! {
    /// Wronskian identity J₁Y₀ − J₀Y₁ = 2/(πx) across nine decades.
    #[test]
    fn wronskian_identity_holds(t in 0.0f64..1.0) {
        let x = 1e-6 * (1e9f64).powf(t); // log-uniform on [1e-6, 1e3]
        let j0 = bessel_j(0, x).unwrap();
        let j1 = bessel_j(1, x).unwrap();
        let y0 = bessel_y(0, x).unwrap();
        let y1 = bessel_y(1, x).unwrap();
        let w = j1 * y0 - j0 * y1;
        let exact = 2.0 / (std::f64::consts::PI * x);
        prop_assert!(
            ((w - exact) / exact).abs() < 1e-12,
            "Wronskian off at x = {}: {} vs {}",
            x, w, exact
        );
    }

    /// J and Y stay finite and bounded by their large-argument envelope.
    #[test]
    fn values_respect_amplitude_envelope(t in 0.0f64..1.0) {
        let x = 0.5 + 999.5 * t;
        let bound = (2.0 / (std::f64::consts::PI * x)).sqrt() * 1.3 + 1.0;
        for n in 0..=1u32 {
            let j = bessel_j(n, x).unwrap();
            let y = bessel_y(n, x).unwrap();
            prop_assert!(j.is_finite() && j.abs() < bound);
            prop_assert!(y.is_finite() && y.abs() < bound);
        }
    }
}
