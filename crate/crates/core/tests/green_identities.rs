//! Independent verification of the Nyström boundary-operator matrices.
//!
//! Two kinds of oracle are used:
//! * a brute-force graded-panel Gauss–Legendre integration of the
//!   single-layer integral on a circle (plus the addition-theorem closed
//!   form), evaluated with the test-local Bessel oracle rather than the
//!   production special-function code;
//! * Green's representation identities: fields that solve the Helmholtz
//!   equation exactly (point sources) must satisfy boundary trace
//!   identities; the residual measures the full quadrature pipeline.

mod support;

use helmscat::geometry::{grid_layout, make_star_curve, CurveSpec, QuadratureGrid, Vec2};
use helmscat::kernels::{
    fundamental, potential_matrix, GreenKind, PotentialKind, Side, WaveParams,
};
use helmscat::linalg::CMat;
use num_complex::Complex64;
use support::{bessel_oracle, quad_oracle};

fn default_spec() -> CurveSpec {
    CurveSpec {
        center: Vec2::new(0.0, 0.0),
        base_radius: 0.25,
        lobe_amplitude: 0.3,
        lobe_count: 5,
        rotation: 0.0,
    }
}

fn apply(a: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.ncols(), v.len());
    let mut out = vec![Complex64::new(0.0, 0.0); a.nrows()];
    for l in 0..a.ncols() {
        for i in 0..a.nrows() {
            out[i] += a[(i, l)] * v[l];
        }
    }
    out
}

fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max residual of the interior representation identity
/// S⁻[∂u/∂n] − D⁻[u] = u/2 for u = G(·, x₀; k⁻), x₀ outside the curve.
fn interior_identity_residual(g: &QuadratureGrid, params: &WaveParams, x0: Vec2) -> f64 {
    let k = params.wavenumber(Side::Minus);
    let dummy = Vec2::new(1.0, 0.0);
    let n = g.len();
    let mut u = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for l in 0..n {
        u.push(fundamental(GreenKind::Value, g.nodes[l], dummy, x0, dummy, k).unwrap());
        q.push(fundamental(GreenKind::TargetNormal, g.nodes[l], g.normals[l], x0, dummy, k).unwrap());
    }
    let s = potential_matrix(PotentialKind::Single, Side::Minus, g, g, params, true).unwrap();
    let d = potential_matrix(PotentialKind::Double, Side::Minus, g, g, params, true).unwrap();
    let sq = apply(&s, &q);
    let du = apply(&d, &u);
    let resid: Vec<Complex64> = (0..n).map(|l| sq[l] - du[l] - 0.5 * u[l]).collect();
    max_abs(&resid)
}

/// Max residuals of the two exterior representation identities
/// D⁺[w] − S⁺[∂w/∂n] = w/2 and N⁺[w] − D*⁺[∂w/∂n] = (∂w/∂n)/2
/// for w = G(·, x₀; k⁺), x₀ inside the curve.
fn exterior_identity_residuals(g: &QuadratureGrid, params: &WaveParams, x0: Vec2) -> (f64, f64) {
    let k = params.wavenumber(Side::Plus);
    let dummy = Vec2::new(1.0, 0.0);
    let n = g.len();
    let mut w = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for l in 0..n {
        w.push(fundamental(GreenKind::Value, g.nodes[l], dummy, x0, dummy, k).unwrap());
        v.push(fundamental(GreenKind::TargetNormal, g.nodes[l], g.normals[l], x0, dummy, k).unwrap());
    }
    let s = potential_matrix(PotentialKind::Single, Side::Plus, g, g, params, true).unwrap();
    let d = potential_matrix(PotentialKind::Double, Side::Plus, g, g, params, true).unwrap();
    let dstar =
        potential_matrix(PotentialKind::AdjointDouble, Side::Plus, g, g, params, true).unwrap();
    let hyper =
        potential_matrix(PotentialKind::Hypersingular, Side::Plus, g, g, params, true).unwrap();
    let dw = apply(&d, &w);
    let sv = apply(&s, &v);
    let nw = apply(&hyper, &w);
    let dsv = apply(&dstar, &v);
    let r1: Vec<Complex64> = (0..n).map(|l| dw[l] - sv[l] - 0.5 * w[l]).collect();
    let r2: Vec<Complex64> = (0..n).map(|l| nw[l] - dsv[l] - 0.5 * v[l]).collect();
    (max_abs(&r1), max_abs(&r2))
}

#[test]
fn single_layer_on_circle_matches_brute_force_quadrature() {
    // Unit circle, k = 1, constant density 1. Every row sum of the
    // single-layer matrix must equal ∫ G(x,y) ds(y), computed here by
    // graded-panel quadrature with the independent Bessel oracle.
    let g = make_star_curve(
        CurveSpec {
            center: Vec2::new(0.0, 0.0),
            base_radius: 1.0,
            lobe_amplitude: 0.0,
            lobe_count: 0,
            rotation: 0.0,
        },
        200,
    )
    .unwrap();
    let params = WaveParams::new(1.0, 1.0, 1.0).unwrap();
    let k = 1.0;

    // |x(t) − x(s)| = 2|sin((t−s)/2)| on the unit circle; integrand is even
    // in u = t − s, log-singular at u = 0.
    let integrand = |u: f64| {
        let r = 2.0 * (0.5 * u).sin().abs();
        let z = k * r;
        Complex64::new(-0.25 * bessel_oracle::y(0, z), 0.25 * bessel_oracle::j(0, z))
    };
    let reference = quad_oracle::graded_integral(integrand, std::f64::consts::PI) * 2.0;

    // Cross-check: the addition theorem gives ∫ G ds = (iπ/2)·J₀(k)·H₀(k).
    let closed_form = Complex64::new(0.0, 0.5 * std::f64::consts::PI)
        * Complex64::new(bessel_oracle::j(0, k), bessel_oracle::y(0, k))
        * bessel_oracle::j(0, k);
    assert!(
        (reference - closed_form).norm() < 1e-12,
        "oracle internal disagreement: {reference} vs {closed_form}"
    );

    let s = potential_matrix(PotentialKind::Single, Side::Plus, &g, &g, &params, true).unwrap();
    for i in 0..g.len() {
        let mut row_sum = Complex64::new(0.0, 0.0);
        for l in 0..g.len() {
            row_sum += s[(i, l)];
        }
        assert!(
            (row_sum - reference).norm() < 1e-10,
            "row {i}: {row_sum} vs oracle {reference}"
        );
    }
}

#[test]
fn greens_identities_hold_on_every_inclusion() {
    let params = WaveParams::new(8.0, 1.0, 5.0).unwrap();
    let grids = grid_layout(16, 1.0, &default_spec(), 200).unwrap();
    for (j, g) in grids.iter().enumerate() {
        let c = g.spec.center;
        let ri = interior_identity_residual(g, &params, c + Vec2::new(0.9, 0.7));
        assert!(ri < 1e-10, "inclusion {j}: interior residual {ri:.3e}");
        // Offset from the center keeps the test asymmetric while staying
        // well separated from the boundary (min radius 0.175).
        let inside = c + Vec2::new(0.05 * 0.3f64.cos(), 0.05 * 0.3f64.sin());
        let (r1, r2) = exterior_identity_residuals(g, &params, inside);
        assert!(r1 < 1e-10, "inclusion {j}: exterior value residual {r1:.3e}");
        assert!(
            r2 < 1e-10,
            "inclusion {j}: exterior derivative residual {r2:.3e}"
        );
    }
}

#[test]
fn greens_identity_residual_drops_four_orders_from_n100_to_n200() {
    let params = WaveParams::new(8.0, 1.0, 5.0).unwrap();
    let x0 = Vec2::new(0.9, 0.7);
    let coarse = interior_identity_residual(
        &make_star_curve(default_spec(), 100).unwrap(),
        &params,
        x0,
    );
    let fine = interior_identity_residual(
        &make_star_curve(default_spec(), 200).unwrap(),
        &params,
        x0,
    );
    assert!(fine < 1e-10, "fine residual {fine:.3e}");
    assert!(
        coarse / fine >= 1e4,
        "insufficient spectral decay: {coarse:.3e} -> {fine:.3e}"
    );
}

#[test]
fn adjoint_cross_block_is_weighted_transpose_of_double_layer() {
    let params = WaveParams::new(3.0, 1.0, 4.0).unwrap();
    let grids = grid_layout(4, 1.0, &default_spec(), 64).unwrap();
    let (a, b) = (&grids[0], &grids[1]);
    let dstar_ab =
        potential_matrix(PotentialKind::AdjointDouble, Side::Plus, a, b, &params, false).unwrap();
    let d_ba = potential_matrix(PotentialKind::Double, Side::Plus, b, a, &params, false).unwrap();
    for i in 0..a.len() {
        for l in 0..b.len() {
            let lhs = dstar_ab[(i, l)] * a.weights[i];
            let rhs = d_ba[(l, i)] * b.weights[l];
            assert!(
                (lhs - rhs).norm() <= 1e-13 * rhs.norm().max(1.0),
                "mismatch at ({i},{l})"
            );
        }
    }
}

#[test]
fn cross_blocks_are_kernel_times_weight() {
    let params = WaveParams::new(2.0, 1.0, 4.0).unwrap();
    let grids = grid_layout(4, 1.0, &default_spec(), 32).unwrap();
    let (t, s) = (&grids[2], &grids[3]);
    let k = params.wavenumber(Side::Minus);
    for kind in [
        PotentialKind::Single,
        PotentialKind::Double,
        PotentialKind::AdjointDouble,
        PotentialKind::Hypersingular,
    ] {
        let green = match kind {
            PotentialKind::Single => GreenKind::Value,
            PotentialKind::Double => GreenKind::SourceNormal,
            PotentialKind::AdjointDouble => GreenKind::TargetNormal,
            PotentialKind::Hypersingular => GreenKind::BothNormals,
        };
        let m = potential_matrix(kind, Side::Minus, t, s, &params, false).unwrap();
        for &(i, l) in &[(0usize, 0usize), (3, 17), (31, 5)] {
            let expect = fundamental(green, t.nodes[i], t.normals[i], s.nodes[l], s.normals[l], k)
                .unwrap()
                * s.weights[l];
            assert!(
                (m[(i, l)] - expect).norm() <= 1e-14 * expect.norm().max(1.0),
                "{kind:?} entry ({i},{l})"
            );
        }
    }
}

#[test]
fn assembly_is_deterministic() {
    let params = WaveParams::new(5.0, 1.0, 5.0).unwrap();
    let grids = grid_layout(4, 1.0, &default_spec(), 64).unwrap();
    let once =
        potential_matrix(PotentialKind::Hypersingular, Side::Plus, &grids[0], &grids[0], &params, true)
            .unwrap();
    let twice =
        potential_matrix(PotentialKind::Hypersingular, Side::Plus, &grids[0], &grids[0], &params, true)
            .unwrap();
    assert_eq!(once.data(), twice.data(), "self block not bit-reproducible");
    let c1 =
        potential_matrix(PotentialKind::Double, Side::Minus, &grids[0], &grids[1], &params, false)
            .unwrap();
    let c2 =
        potential_matrix(PotentialKind::Double, Side::Minus, &grids[0], &grids[1], &params, false)
            .unwrap();
    assert_eq!(c1.data(), c2.data(), "cross block not bit-reproducible");
}
