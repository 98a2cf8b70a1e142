//! Brute-force reference quadrature, independent of the production
//! Nyström rules: composite Gauss–Legendre panels, geometrically graded
//! toward integrable singularities.

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on [-1, 1], computed from scratch by
/// Newton iteration on the Legendre polynomial (no tabulated constants).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_deriv(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// P_n(x) and P_n'(x) via the three-term recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// ∫_a^b f(x) dx by a single n-point Gauss–Legendre rule.
pub fn gl_panel(
    f: &mut impl FnMut(f64) -> Complex64,
    a: f64,
    b: f64,
    nodes: &[f64],
    weights: &[f64],
) -> Complex64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        sum += f(mid + half * x) * *w;
    }
    sum * half
}

/// ∫_0^b f(u) du where f may have an integrable (e.g. logarithmic)
/// singularity at u = 0: geometric panel grading toward the origin.
pub fn graded_integral(mut f: impl FnMut(f64) -> Complex64, b: f64) -> Complex64 {
    let (nodes, weights) = gauss_legendre(24);
    let mut total = Complex64::new(0.0, 0.0);
    let mut hi = b;
    for _ in 0..110 {
        let lo = 0.5 * hi;
        total += gl_panel(&mut f, lo, hi, &nodes, &weights);
        hi = lo;
    }
    // Remaining [0, hi] interval is ~1e-33·b wide; for a log singularity its
    // contribution is far below double precision.
    total
}

/// Plain adaptive-free composite rule for smooth periodic integrands:
/// ∫_0^b f with `panels` equal Gauss panels.
pub fn composite_integral(
    mut f: impl FnMut(f64) -> Complex64,
    b: f64,
    panels: usize,
) -> Complex64 {
    let (nodes, weights) = gauss_legendre(24);
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = b * p as f64 / panels as f64;
        let hi = b * (p + 1) as f64 / panels as f64;
        total += gl_panel(&mut f, lo, hi, &nodes, &weights);
    }
    total
}
