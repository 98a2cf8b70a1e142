//! Analytic reference for a single circular transmissive inclusion under
//! plane-wave incidence: cylindrical-harmonic (Mie-type) series. Provides
//! boundary traces (u, q) that independently validate the integral-equation
//! solvers on circle geometries.

use crate::formulations::IncidentWave;
use crate::geometry::QuadratureGrid;
use crate::kernels::{Side, WaveParams};
use crate::specfun::{self, SpecfunError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("circle radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("harmonic series tail did not converge: relative tail {0:.3e}")]
    NonConvergentTail(f64),
    #[error("grid is not a circle of the expected radius (deviation {0:.3e})")]
    OffCircle(f64),
    #[error(transparent)]
    Special(#[from] SpecfunError),
}

/// Harmonic-series solution for one circular inclusion.
///
/// Coefficients are indexed by |n| (the series is even in the harmonic index
/// when the angle is measured from the incidence direction): the total
/// exterior field is amp·[Σ_n (iⁿJ_n(k⁺r) + a_|n| H_n(k⁺r)) e^{inφ}] and the
/// interior field amp·Σ_n b_|n| J_n(k⁻r) e^{inφ}, with the iⁿ of the incident
/// expansion folded into a_n and b_n.
#[derive(Debug, Clone)]
pub struct MieSolution {
    pub radius: f64,
    /// Truncation order M; coefficient vectors hold n = 0..=M.
    pub order: usize,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub params: WaveParams,
    pub wave: IncidentWave,
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Solve the per-harmonic 2×2 matching systems for a circle of radius `a`:
/// continuity of u and of (1/ε)∂u/∂r across r = a.
pub fn mie_solve(
    a: f64,
    params: &WaveParams,
    wave: &IncidentWave,
) -> Result<MieSolution, OracleError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(OracleError::BadRadius(a));
    }
    let kp = params.wavenumber(Side::Plus);
    let km = params.wavenumber(Side::Minus);
    let zp = kp * a;
    let zm = km * a;
    let order = (zp.ceil() as usize) + 20;

    let jp = bessel_j_array(zp, order)?;
    let yp = bessel_y_array(zp, order)?;
    let jm = bessel_j_array(zm, order)?;

    let beta_p = kp / params.permittivity(Side::Plus);
    let beta_m = km / params.permittivity(Side::Minus);

    let mut ca = Vec::with_capacity(order + 1);
    let mut cb = Vec::with_capacity(order + 1);
    let mut i_pow = Complex64::new(1.0, 0.0);
    for n in 0..=order {
        let jpn = jp[n];
        let jpd = deriv(&jp, n, zp);
        let h = Complex64::new(jpn, yp[n]);
        let hd = Complex64::new(jpd, deriv(&yp, n, zp));
        let jmn = jm[n];
        let jmd = deriv(&jm, n, zm);

        // [ H_n(z⁺)      −J_n(z⁻)     ] (a_n)   = −iⁿ ( J_n(z⁺)      )
        // [ β⁺H'_n(z⁺)   −β⁻J'_n(z⁻)  ] (b_n)         ( β⁺J'_n(z⁺)   )
        let m00 = h;
        let m01 = Complex64::new(-jmn, 0.0);
        let m10 = hd * beta_p;
        let m11 = Complex64::new(-beta_m * jmd, 0.0);
        let r0 = -i_pow * jpn;
        let r1 = -i_pow * beta_p * jpd;
        let det = m00 * m11 - m01 * m10;
        ca.push((r0 * m11 - m01 * r1) / det);
        cb.push((m00 * r1 - r0 * m10) / det);
        i_pow *= I;
    }

    let max_a = ca.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if max_a > 0.0 {
        let tail = ca[order].norm() / max_a;
        if tail > 1e-14 {
            return Err(OracleError::NonConvergentTail(tail));
        }
    }
    Ok(MieSolution {
        radius: a,
        order,
        a: ca,
        b: cb,
        params: *params,
        wave: wave.clone(),
    })
}

/// Interior boundary traces (u, q) of the harmonic solution at the nodes of
/// a quadrature grid lying on the circle.
pub fn mie_trace(
    sol: &MieSolution,
    grid: &QuadratureGrid,
) -> Result<(Vec<Complex64>, Vec<Complex64>), OracleError> {
    let spec = &grid.spec;
    let dev = spec.lobe_amplitude.abs() + (spec.base_radius - sol.radius).abs();
    if dev > 1e-12 * sol.radius {
        return Err(OracleError::OffCircle(dev));
    }
    let params = &sol.params;
    let km = params.wavenumber(Side::Minus);
    let zm = km * sol.radius;
    let jm = bessel_j_array(zm, sol.order)?;
    let flux = km / params.permittivity(Side::Minus);

    let kp = params.wavenumber(Side::Plus);
    let d = sol.wave.direction;
    let c = spec.center;
    let phase = Complex64::from_polar(sol.wave.amplitude, kp * (d.x * c.x + d.y * c.y));
    let dir_angle = d.y.atan2(d.x);

    let mut u = Vec::with_capacity(grid.len());
    let mut q = Vec::with_capacity(grid.len());
    for node in &grid.nodes {
        let phi = (node.y - c.y).atan2(node.x - c.x) - dir_angle;
        let mut us = sol.b[0] * jm[0];
        let mut qs = sol.b[0] * deriv(&jm, 0, zm);
        for n in 1..=sol.order {
            let cosn = 2.0 * (n as f64 * phi).cos();
            us += sol.b[n] * (jm[n] * cosn);
            qs += sol.b[n] * (deriv(&jm, n, zm) * cosn);
        }
        u.push(phase * us);
        q.push(phase * qs * flux);
    }
    Ok((u, q))
}

/// J_n(x) for n = 0..=nmax by backward (Miller) recurrence, normalized with
/// the even-order sum identity J₀ + 2ΣJ_{2k} = 1.
pub fn bessel_j_array(x: f64, nmax: usize) -> Result<Vec<f64>, OracleError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(OracleError::BadRadius(x));
    }
    let nstart = nmax.max(x as usize) + 31;
    let mut out = vec![0.0f64; nmax + 1];
    let mut f_up = 0.0f64;
    let mut f = 1e-280f64;
    let mut sum = 0.0f64;
    for n in (0..=nstart).rev() {
        if n <= nmax {
            out[n] = f;
        }
        if n % 2 == 0 {
            sum += if n == 0 { f } else { 2.0 * f };
        }
        if n > 0 {
            let f_dn = (2.0 * n as f64) / x * f - f_up;
            f_up = f;
            f = f_dn;
            if f.abs() > 1e250 {
                f *= 1e-250;
                f_up *= 1e-250;
                sum *= 1e-250;
                out.iter_mut().for_each(|v| *v *= 1e-250);
            }
        }
    }
    let scale = 1.0 / sum;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// Y_n(x) for n = 0..=nmax by forward recurrence from order-0/1 seeds
/// (forward is the stable direction for Y).
pub fn bessel_y_array(x: f64, nmax: usize) -> Result<Vec<f64>, OracleError> {
    let mut out = vec![0.0f64; nmax.max(1) + 1];
    out[0] = specfun::bessel_y(0, x)?;
    out[1] = specfun::bessel_y(1, x)?;
    for n in 1..nmax {
        out[n + 1] = (2.0 * n as f64) / x * out[n] - out[n - 1];
    }
    out.truncate(nmax + 1);
    Ok(out)
}

/// C'_n(x) from an order-indexed table: C'_0 = −C_1, C'_n = C_{n−1} − (n/x)C_n.
fn deriv(table: &[f64], n: usize, x: f64) -> f64 {
    if n == 0 {
        -table[1]
    } else {
        table[n - 1] - (n as f64) / x * table[n]
    }
}
