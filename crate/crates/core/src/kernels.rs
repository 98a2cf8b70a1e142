//! Helmholtz layer-potential kernels and their Nyström discretization.
//!
//! The fundamental solution used throughout is G(x,y) = (i/4)·H₀⁽¹⁾(k|x−y|),
//! whose interior/exterior traces produce the classical ±1/2 jump relations.
//! Four boundary operators are discretized:
//!
//! * `Single`        — S:  ∫ G(x,y) φ(y) ds(y)
//! * `Double`        — D:  ∫ ∂G/∂n(y) φ(y) ds(y)
//! * `AdjointDouble` — D*: ∫ ∂G/∂n(x) φ(y) ds(y)
//! * `Hypersingular` — N:  ∂/∂n(x) ∫ ∂G/∂n(y) φ(y) ds(y)
//!
//! Self-interaction blocks use the spectrally accurate periodic-log
//! quadrature: the kernel is written K₁(t,s)·ln(4 sin²((t−s)/2)) + K₂(t,s)
//! with K₁, K₂ smooth, the log factor integrated by its exact trigonometric
//! rule (`log_kernel_weights`) and the smooth part by the trapezoid rule.
//! The hypersingular self block is assembled through integration by parts:
//! N = T·S·T + k²·S_nn with T the arc-length spectral differentiation
//! matrix, which needs only weakly singular quadratures.
//! Blocks between distinct curves have smooth kernels and use plain
//! trapezoid products.

use crate::geometry::{QuadratureGrid, Vec2};
use crate::linalg::{matmul, CMat};
use crate::specfun::{self, EULER_GAMMA};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,
    #[error("wave parameters must be positive: {0}")]
    BadParams(String),
    #[error("self block requires target and source of equal size, got {0} and {1}")]
    SelfGridMismatch(usize, usize),
    #[error(transparent)]
    Special(#[from] specfun::SpecfunError),
}

/// Which side of an inclusion boundary an operator acts from: `Plus` is the
/// exterior (background) medium, `Minus` the interior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

/// Frequency and the two relative permittivities; wavenumbers are
/// k± = ω·√ε±.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WaveParams {
    pub omega: f64,
    pub eps_plus: f64,
    pub eps_minus: f64,
}

impl WaveParams {
    pub fn new(omega: f64, eps_plus: f64, eps_minus: f64) -> Result<WaveParams, KernelError> {
        for (name, v) in [
            ("omega", omega),
            ("eps_plus", eps_plus),
            ("eps_minus", eps_minus),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KernelError::BadParams(format!("{name} = {v}")));
            }
        }
        Ok(WaveParams {
            omega,
            eps_plus,
            eps_minus,
        })
    }

    pub fn permittivity(&self, side: Side) -> f64 {
        match side {
            Side::Plus => self.eps_plus,
            Side::Minus => self.eps_minus,
        }
    }

    pub fn wavenumber(&self, side: Side) -> f64 {
        self.omega * self.permittivity(side).sqrt()
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.wavenumber(Side::Plus).max(self.wavenumber(Side::Minus))
    }
}

/// Point evaluations of the fundamental solution and its normal derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenKind {
    /// G(x, y).
    Value,
    /// ∂G/∂n(y) — derivative in the source normal.
    SourceNormal,
    /// ∂G/∂n(x) — derivative in the target normal.
    TargetNormal,
    /// ∂²G/∂n(x)∂n(y).
    BothNormals,
}

/// All four kernel values at one point pair, sharing a single Hankel
/// evaluation: `[G, ∂G/∂n_y, ∂G/∂n_x, ∂²G/∂n_x∂n_y]`.
#[inline]
fn quartet(d: Vec2, r: f64, nx: Vec2, ny: Vec2, k: f64) -> [Complex64; 4] {
    let z = k * r;
    let (j0, y0, j1, y1) = crate::specfun::jy01_raw(z);
    let h0 = Complex64::new(j0, y0);
    let h1 = Complex64::new(j1, y1);
    let ik4 = I * (0.25 * k);
    let dny = d.dot(ny) / r;
    let dnx = d.dot(nx) / r;
    let g = Complex64::new(-0.25 * y0, 0.25 * j0);
    let gy = ik4 * h1 * dny;
    let gx = -(ik4 * h1 * dnx);
    let gxy = ik4 * ((h0 * k - h1 * (2.0 / r)) * (dny * dnx) + h1 * (nx.dot(ny) / r));
    [g, gy, gx, gxy]
}

/// Evaluate one fundamental-solution kernel at a pair of distinct points.
pub fn fundamental(
    kind: GreenKind,
    x: Vec2,
    nx: Vec2,
    y: Vec2,
    ny: Vec2,
    k: f64,
) -> Result<Complex64, KernelError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(KernelError::BadParams(format!("wavenumber = {k}")));
    }
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(KernelError::CoincidentPoints);
    }
    let q = quartet(d, r, nx, ny, k);
    Ok(match kind {
        GreenKind::Value => q[0],
        GreenKind::SourceNormal => q[1],
        GreenKind::TargetNormal => q[2],
        GreenKind::BothNormals => q[3],
    })
}

/// All four kernels at once (one Hankel evaluation); used by fused
/// system-matrix assembly.
pub fn kernel_quartet(
    x: Vec2,
    nx: Vec2,
    y: Vec2,
    ny: Vec2,
    k: f64,
) -> Result<[Complex64; 4], KernelError> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(KernelError::CoincidentPoints);
    }
    Ok(quartet(d, r, nx, ny, k))
}

/// The four boundary integral operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialKind {
    Single,
    Double,
    AdjointDouble,
    Hypersingular,
}

/// Quadrature weights R_j for ∫₀²π ln(4 sin²((t−s)/2)) f(s) ds on n
/// equispaced nodes: Σ_l R_{(i−l) mod n} f(t_l) is exact for trigonometric
/// polynomials of degree < n/2.
pub fn log_kernel_weights(n: usize) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "need even node count, got {n}");
    let mut r = vec![0.0; n];
    let half = n / 2;
    for (j, rj) in r.iter_mut().enumerate() {
        let mut sum = 0.0;
        for m in 1..half {
            sum += (2.0 * PI * (m * j) as f64 / n as f64).cos() / m as f64;
        }
        let alt = if j % 2 == 0 { 1.0 } else { -1.0 };
        *rj = -4.0 * PI / n as f64 * sum - 4.0 * PI / (n * n) as f64 * alt;
    }
    r
}

/// Spectral differentiation matrix for 2π-periodic functions on n equispaced
/// nodes (n even): W[i,l] = ½(−1)^(i−l) cot((t_i−t_l)/2), zero diagonal.
pub fn trig_diff_matrix(n: usize) -> CMat {
    assert!(n >= 2 && n % 2 == 0, "need even node count, got {n}");
    let h = 2.0 * PI / n as f64;
    CMat::from_fn(n, n, |i, l| {
        if i == l {
            Complex64::new(0.0, 0.0)
        } else {
            let sign = if (i + l) % 2 == 0 { 1.0 } else { -1.0 };
            let arg = 0.5 * h * (i as f64 - l as f64);
            Complex64::new(0.5 * sign * (arg.sin().recip() * arg.cos()), 0.0)
        }
    })
}

/// ln(4 sin²((t_i − t_l)/2)) for nodes of step h.
#[inline]
fn log_factor(h: f64, i: usize, l: usize) -> f64 {
    let half = 0.5 * h * (i as f64 - l as f64);
    (4.0 * half.sin().powi(2)).ln()
}

/// Single-layer self block; `normal_dot` additionally multiplies the kernel
/// by n(t)·n(s) (the variant needed by the hypersingular identity).
fn single_self(g: &QuadratureGrid, k: f64, normal_dot: bool) -> CMat {
    let n = g.len();
    let h = g.h;
    let rj = log_kernel_weights(n);
    CMat::from_fn(n, n, |i, l| {
        let fac = if normal_dot {
            g.normals[i].dot(g.normals[l])
        } else {
            1.0
        };
        if i == l {
            let sig = g.speeds[i];
            let diag = Complex64::new(
                -sig * (EULER_GAMMA + (0.5 * k * sig).ln()) / (2.0 * PI),
                0.25 * sig,
            );
            (rj[0] * (-sig / (4.0 * PI)) + h * diag) * fac
        } else {
            let d = g.nodes[i] - g.nodes[l];
            let r = d.norm();
            let (j0, y0, _, _) = crate::specfun::jy01_raw(k * r);
            let sig = g.speeds[l];
            let m1 = -j0 / (4.0 * PI) * sig;
            let full = Complex64::new(-0.25 * y0, 0.25 * j0) * sig;
            let m2 = full - m1 * log_factor(h, i, l);
            (rj[(i + n - l) % n] * m1 + h * m2) * fac
        }
    })
}

/// Double-layer (or its adjoint) self block.
fn double_self(g: &QuadratureGrid, k: f64, adjoint: bool) -> CMat {
    let n = g.len();
    let h = g.h;
    let rj = log_kernel_weights(n);
    CMat::from_fn(n, n, |i, l| {
        if i == l {
            // Smooth diagonal limit −κσ/(4π) = (x″·n)/(4πσ); identical for
            // both the operator and its adjoint.
            let lim = g.second_derivs[i].dot(g.normals[i]) / (4.0 * PI * g.speeds[i]);
            Complex64::new(h * lim, 0.0)
        } else {
            let d = g.nodes[i] - g.nodes[l];
            let r = d.norm();
            let (_, _, j1, y1) = crate::specfun::jy01_raw(k * r);
            let h1 = Complex64::new(j1, y1);
            let sig = g.speeds[l];
            let (dot, sign) = if adjoint {
                (d.dot(g.normals[i]) / r, -1.0)
            } else {
                (d.dot(g.normals[l]) / r, 1.0)
            };
            let m1 = -sign * k / (4.0 * PI) * j1 * dot * sig;
            let full = I * (sign * 0.25 * k) * h1 * dot * sig;
            let m2 = full - m1 * log_factor(h, i, l);
            rj[(i + n - l) % n] * m1 + h * m2
        }
    })
}

/// Hypersingular self block via integration by parts:
/// N = T·S·T + k²·S_nn, T = diag(1/σ)·W.
fn hyper_self(g: &QuadratureGrid, k: f64) -> CMat {
    let n = g.len();
    let s = single_self(g, k, false);
    let mut snn = single_self(g, k, true);
    let w = trig_diff_matrix(n);
    let t = CMat::from_fn(n, n, |i, l| w[(i, l)] / g.speeds[i]);
    let tst = matmul(&matmul(&t, &s), &t);
    snn.scale(Complex64::new(k * k, 0.0));
    tst.add(&snn)
}

/// Nyström matrix of one boundary operator. With `self_block` the target and
/// source must be the same grid (singular quadrature); otherwise the grids
/// must be disjoint curves and plain trapezoid products are used.
pub fn potential_matrix(
    kind: PotentialKind,
    side: Side,
    target: &QuadratureGrid,
    source: &QuadratureGrid,
    params: &WaveParams,
    self_block: bool,
) -> Result<CMat, KernelError> {
    let k = params.wavenumber(side);
    if self_block {
        if target.len() != source.len() {
            return Err(KernelError::SelfGridMismatch(target.len(), source.len()));
        }
        Ok(match kind {
            PotentialKind::Single => single_self(source, k, false),
            PotentialKind::Double => double_self(source, k, false),
            PotentialKind::AdjointDouble => double_self(source, k, true),
            PotentialKind::Hypersingular => hyper_self(source, k),
        })
    } else {
        let (nt, ns) = (target.len(), source.len());
        let mut a = CMat::zeros(nt, ns);
        for l in 0..ns {
            for i in 0..nt {
                let d = target.nodes[i] - source.nodes[l];
                let r = d.norm();
                if r == 0.0 {
                    return Err(KernelError::CoincidentPoints);
                }
                let q = quartet(d, r, target.normals[i], source.normals[l], k);
                let val = match kind {
                    PotentialKind::Single => q[0],
                    PotentialKind::Double => q[1],
                    PotentialKind::AdjointDouble => q[2],
                    PotentialKind::Hypersingular => q[3],
                };
                a[(i, l)] = val * source.weights[l];
            }
        }
        Ok(a)
    }
}
