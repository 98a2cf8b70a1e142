//! Dense reference solver: materialize the full 2mn×2mn system, factor it
//! with partial-pivoted LU, and solve. Serves as the accuracy baseline for
//! the hierarchical solver and as the production path for small problems.

use crate::formulations::{Assembler, AssemblyError, IncidentWave};
use crate::linalg::{lu_factor, CMat, LinalgError};
use num_complex::Complex64;
use serde::Serialize;
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

/// Default cap on unknown count for dense materialization (~9.8 GiB at
/// complex-double; sized for a 16 GB machine).
pub const DEFAULT_MAX_UNKNOWNS: usize = 40_000;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("system has {dim} unknowns, above the dense cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("reference vector has zero norm")]
    ZeroReference,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Outcome of a dense factor-and-solve run.
#[derive(Debug, Clone, Serialize)]
pub struct DenseSolveReport {
    #[serde(skip)]
    pub solution: Vec<Complex64>,
    pub assembly_time: f64,
    pub factor_time: f64,
    pub solve_time: f64,
    /// Relative backward residual ‖Aφ − f‖₂ / ‖f‖₂ (0 when f = 0).
    pub residual: f64,
}

/// Assemble the full system matrix (diagonal blocks by singular quadrature,
/// off-diagonal blocks by smooth quadrature), subject to the size cap.
pub fn assemble_dense(asm: &Assembler, cap: usize) -> Result<CMat, DenseError> {
    let dim = asm.dim();
    if dim > cap {
        return Err(DenseError::TooLarge { dim, cap });
    }
    let m = asm.m();
    let bs = 2 * asm.n();
    let mut a = CMat::zeros(dim, dim);
    for j in 0..m {
        for i in 0..m {
            let block = asm.assemble_block(i, j)?;
            a.set_block(bs * i, bs * j, &block);
        }
    }
    Ok(a)
}

/// Assemble, LU-factor, and solve the system for the given incident wave.
///
/// The backward residual is evaluated block-by-block (re-assembling each
/// block once) so peak memory stays at a single copy of the matrix.
pub fn dense_solve(
    asm: &Assembler,
    wave: &IncidentWave,
    cap: usize,
) -> Result<DenseSolveReport, DenseError> {
    let t0 = Instant::now();
    let a = assemble_dense(asm, cap)?;
    let assembly_time = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let lu = lu_factor(a)?;
    let factor_time = t1.elapsed().as_secs_f64();

    let f = asm.rhs(wave);
    let t2 = Instant::now();
    let mut rhs = CMat::from_col_major(f.len(), 1, f.clone());
    lu.solve_in_place(&mut rhs)?;
    let phi = rhs.data().to_vec();
    let solve_time = t2.elapsed().as_secs_f64();
    drop(lu);

    let residual = block_residual(asm, &phi, &f)?;
    Ok(DenseSolveReport {
        solution: phi,
        assembly_time,
        factor_time,
        solve_time,
        residual,
    })
}

/// ‖Aφ − f‖₂ / ‖f‖₂ computed block-by-block without holding A.
pub fn block_residual(
    asm: &Assembler,
    phi: &[Complex64],
    f: &[Complex64],
) -> Result<f64, DenseError> {
    let dim = asm.dim();
    if phi.len() != dim || f.len() != dim {
        return Err(DenseError::LengthMismatch(phi.len(), f.len()));
    }
    let f_norm = l2_norm(f);
    if f_norm == 0.0 {
        return Ok(if l2_norm(phi) == 0.0 { 0.0 } else { f64::INFINITY });
    }
    let m = asm.m();
    let bs = 2 * asm.n();
    let mut r: Vec<Complex64> = f.iter().map(|v| -v).collect();
    for j in 0..m {
        let xj = &phi[bs * j..bs * (j + 1)];
        for i in 0..m {
            let block = asm.assemble_block(i, j)?;
            let ri = &mut r[bs * i..bs * (i + 1)];
            for c in 0..bs {
                let x = xj[c];
                if x != Complex64::new(0.0, 0.0) {
                    for (row, val) in ri.iter_mut().enumerate() {
                        *val += block[(row, c)] * x;
                    }
                }
            }
        }
    }
    Ok(l2_norm(&r) / f_norm)
}

/// Relative 2-norm error ‖φ − ref‖₂ / ‖ref‖₂.
pub fn relative_error(phi: &[Complex64], reference: &[Complex64]) -> Result<f64, DenseError> {
    if phi.len() != reference.len() {
        return Err(DenseError::LengthMismatch(phi.len(), reference.len()));
    }
    let rn = l2_norm(reference);
    if rn == 0.0 {
        return Err(DenseError::ZeroReference);
    }
    let mut d = 0.0f64;
    for (a, b) in phi.iter().zip(reference) {
        d += (a - b).norm_sqr();
    }
    Ok(d.sqrt() / rn)
}

pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Write a solution vector as little-endian interleaved re/im doubles.
pub fn write_solution_binary<W: Write>(out: &mut W, phi: &[Complex64]) -> std::io::Result<()> {
    for z in phi {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}
