//! Off-boundary evaluation of the total field from solved boundary traces.
//!
//! Exterior points combine the incident wave with the exterior layer
//! potentials of every inclusion; a point inside inclusion j sees only that
//! inclusion's interior layer potentials. Plain quadrature is used, so every
//! evaluation point must keep a guard distance of three mean node spacings
//! from all boundaries.

use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::formulations::{BlockRule, IncidentWave};
use crate::geometry::{CurveSpec, QuadratureGrid, Vec2};
use crate::kernels::{kernel_quartet, KernelError, Side, WaveParams};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("point {index} at ({x:.6}, {y:.6}) is within three node spacings of boundary {incl}")]
    TooClose {
        index: usize,
        x: f64,
        y: f64,
        incl: usize,
    },
    #[error("trace shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Where an evaluation point sits relative to the inclusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Exterior,
    /// Inside inclusion j.
    Interior(usize),
}

/// Total field value at one off-boundary point.
#[derive(Debug, Clone, Copy)]
pub struct FieldSample {
    pub point: Vec2,
    pub region: Region,
    pub value: Complex64,
}

/// Per-inclusion boundary traces: field values `u` and scaled normal
/// derivatives `q`.
#[derive(Debug, Clone)]
pub struct BoundaryTraces {
    pub u: Vec<Vec<Complex64>>,
    pub q: Vec<Vec<Complex64>>,
}

impl BoundaryTraces {
    /// Split a solved unknown vector into per-inclusion traces. The
    /// transmission formulations order each inclusion's components (q; u),
    /// the combined-field family (u; q).
    pub fn from_solution(
        phi: &[Complex64],
        rule: BlockRule,
        m: usize,
        n: usize,
    ) -> Result<BoundaryTraces, FieldError> {
        if phi.len() != 2 * m * n {
            return Err(FieldError::Shape(format!(
                "solution length {} != 2·{m}·{n}",
                phi.len()
            )));
        }
        let mut u = Vec::with_capacity(m);
        let mut q = Vec::with_capacity(m);
        for j in 0..m {
            let comp0 = phi[2 * n * j..2 * n * j + n].to_vec();
            let comp1 = phi[2 * n * j + n..2 * n * (j + 1)].to_vec();
            if rule.is_bm_family() {
                u.push(comp0);
                q.push(comp1);
            } else {
                q.push(comp0);
                u.push(comp1);
            }
        }
        Ok(BoundaryTraces { u, q })
    }
}

/// Point-in-inclusion test for the star-shaped curve family.
fn inside(spec: &CurveSpec, p: Vec2) -> bool {
    let d = p - spec.center;
    let r = d.norm();
    if r == 0.0 {
        return true;
    }
    let t = d.y.atan2(d.x) - spec.rotation;
    r < spec.radius(t)
}

/// Mean node spacing of one boundary (arc length over node count).
fn mean_spacing(grid: &QuadratureGrid) -> f64 {
    grid.weights.iter().sum::<f64>() / grid.len() as f64
}

/// Evaluate the total field at off-boundary points.
///
/// Exterior: u(x) = u^I(x) + Σ_j ∫_{Γ_j} [∂G⁺/∂n(y)·u_j − ε⁺·G⁺·q_j] ds(y).
/// Inside inclusion j: u(x) = −∫_{Γ_j} [∂G⁻/∂n(y)·u_j − ε⁻·G⁻·q_j] ds(y).
pub fn evaluate_field(
    points: &[Vec2],
    traces: &BoundaryTraces,
    params: &WaveParams,
    wave: &IncidentWave,
    grids: &[QuadratureGrid],
) -> Result<Vec<FieldSample>, FieldError> {
    let m = grids.len();
    if traces.u.len() != m || traces.q.len() != m {
        return Err(FieldError::Shape(format!(
            "traces cover {}/{} boundaries, layout has {m}",
            traces.u.len(),
            traces.q.len()
        )));
    }
    for (j, g) in grids.iter().enumerate() {
        if traces.u[j].len() != g.len() || traces.q[j].len() != g.len() {
            return Err(FieldError::Shape(format!(
                "boundary {j}: trace lengths {}/{} != {} nodes",
                traces.u[j].len(),
                traces.q[j].len(),
                g.len()
            )));
        }
    }
    let spacings: Vec<f64> = grids.iter().map(mean_spacing).collect();
    let k_plus = params.wavenumber(Side::Plus);
    let k_minus = params.wavenumber(Side::Minus);
    let eps_plus = Complex64::new(params.permittivity(Side::Plus), 0.0);
    let eps_minus = Complex64::new(params.permittivity(Side::Minus), 0.0);
    let dummy_normal = Vec2::new(1.0, 0.0);

    let mut samples = Vec::with_capacity(points.len());
    for (index, &p) in points.iter().enumerate() {
        for (j, g) in grids.iter().enumerate() {
            let min_d = g
                .nodes
                .iter()
                .map(|y| (p - *y).norm())
                .fold(f64::INFINITY, f64::min);
            if min_d <= 3.0 * spacings[j] {
                return Err(FieldError::TooClose {
                    index,
                    x: p.x,
                    y: p.y,
                    incl: j,
                });
            }
        }
        let region = grids
            .iter()
            .position(|g| inside(&g.spec, p))
            .map_or(Region::Exterior, Region::Interior);

        let value = match region {
            Region::Exterior => {
                let phase = k_plus * wave.direction.dot(p);
                let mut v = Complex64::new(0.0, phase.sin()) + phase.cos();
                v *= wave.amplitude;
                for (j, g) in grids.iter().enumerate() {
                    for l in 0..g.len() {
                        let quartet =
                            kernel_quartet(p, dummy_normal, g.nodes[l], g.normals[l], k_plus)?;
                        v += g.weights[l]
                            * (quartet[1] * traces.u[j][l]
                                - eps_plus * quartet[0] * traces.q[j][l]);
                    }
                }
                v
            }
            Region::Interior(j) => {
                let g = &grids[j];
                let mut v = Complex64::new(0.0, 0.0);
                for l in 0..g.len() {
                    let quartet =
                        kernel_quartet(p, dummy_normal, g.nodes[l], g.normals[l], k_minus)?;
                    v -= g.weights[l]
                        * (quartet[1] * traces.u[j][l] - eps_minus * quartet[0] * traces.q[j][l]);
                }
                v
            }
        };
        samples.push(FieldSample {
            point: p,
            region,
            value,
        });
    }
    Ok(samples)
}

/// Dump field samples as CSV with columns `x1,x2,re_u,im_u,abs_u`.
pub fn write_field_csv<W: Write>(samples: &[FieldSample], out: &mut W) -> io::Result<()> {
    writeln!(out, "x1,x2,re_u,im_u,abs_u")?;
    for s in samples {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.point.x,
            s.point.y,
            s.value.re,
            s.value.im,
            s.value.norm()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_circle() -> CurveSpec {
        CurveSpec {
            center: Vec2::new(2.0, -1.0),
            base_radius: 1.5,
            lobe_amplitude: 0.0,
            lobe_count: 1,
            rotation: 0.0,
        }
    }

    #[test]
    fn inside_test_tracks_the_radius_profile() {
        let star = CurveSpec {
            center: Vec2::new(1.0, 1.0),
            base_radius: 1.0,
            lobe_amplitude: 0.3,
            lobe_count: 5,
            rotation: 0.3,
        };
        assert!(inside(&star, star.center));
        for i in 0..40 {
            let t = 2.0 * std::f64::consts::PI * i as f64 / 40.0;
            let on_curve = star.point(t);
            let dir = on_curve - star.center;
            assert!(inside(&star, star.center + dir * 0.95));
            assert!(!inside(&star, star.center + dir * 1.05));
        }
        assert!(inside(&unit_circle(), Vec2::new(2.0, 0.4)));
        assert!(!inside(&unit_circle(), Vec2::new(2.0, 0.6)));
    }

    #[test]
    fn trace_split_follows_component_order() {
        let m = 2;
        let n = 3;
        let phi: Vec<Complex64> = (0..2 * m * n)
            .map(|i| Complex64::new(i as f64, 0.0))
            .collect();
        let t = BoundaryTraces::from_solution(&phi, BlockRule::PmchwtOmit, m, n).unwrap();
        assert_eq!(t.q[0][0].re, 0.0);
        assert_eq!(t.u[0][0].re, 3.0);
        assert_eq!(t.q[1][0].re, 6.0);
        let t = BoundaryTraces::from_solution(&phi, BlockRule::Bm, m, n).unwrap();
        assert_eq!(t.u[0][0].re, 0.0);
        assert_eq!(t.q[0][0].re, 3.0);
        assert!(BoundaryTraces::from_solution(&phi[..5], BlockRule::Bm, m, n).is_err());
    }

    #[test]
    fn csv_has_header_and_one_row_per_sample() {
        let samples = vec![FieldSample {
            point: Vec2::new(0.25, -1.5),
            region: Region::Exterior,
            value: Complex64::new(3.0, -4.0),
        }];
        let mut buf = Vec::new();
        write_field_csv(&samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "x1,x2,re_u,im_u,abs_u");
        assert!(lines[1].starts_with("2.5000000000000000e-1,-1.5000000000000000e0,"));
        assert!(lines[1].ends_with("5.0000000000000000e0"));
    }
}
