//! Multi-level compressed direct solver.
//!
//! The factorization sweeps the cell tree upward: leaves are compressed
//! directly from assembled diagonal blocks, and each internal cell builds its
//! diagonal block from the children's compressed diagonals plus the exact
//! sub-block coupling their skeletons, then compresses again. The sweep stops
//! at the level holding two cells, whose compressed system (diagonal blocks
//! plus skeleton off-diagonals) is factored densely. A solve then runs one
//! upward right-hand-side sweep, the small dense back-substitution, and one
//! downward recovery sweep. The factorization is immutable after
//! construction, so many right-hand sides can be solved against it.

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::formulations::{Assembler, AssemblyError, DofRef};
use crate::geometry::{Cell, CellTree};
use crate::linalg::{lu_factor, matmul, CMat, LinalgError, LuFactor};
use crate::skeleton::{
    skeleton_block, skeletonize_cell, CellContext, CellSkeleton, CompressionConfig,
    CompressionStat, SkeletonError,
};

#[derive(Debug, Error)]
pub enum FdsError {
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("rhs length {got} does not match system dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cell tree is empty")]
    EmptyTree,
    #[error("cell (level {level}, index {index}): {source}")]
    Cell {
        level: usize,
        index: usize,
        source: Box<FdsError>,
    },
}

/// Seconds spent in each solver phase.
///
/// `assembly` and `compression` are populated by the factorization and echoed
/// into every solve report; `top_solve` adds the upward sweep and the top
/// back-substitution of the solve to the stored top factorization time;
/// `recovery` is the downward sweep. Per-cell work is timed individually and
/// summed, so the totals are thread-count independent.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct FdsTimes {
    /// Building diagonal blocks: leaf assembly, child merges, the top system.
    pub assembly: f64,
    /// Sum of per-cell skeletonization times.
    pub compression: f64,
    /// Top-system LU plus upward sweep and top back-substitution.
    pub top_solve: f64,
    /// Downward recovery sweep back to the leaves.
    pub recovery: f64,
}

impl FdsTimes {
    pub fn total(&self) -> f64 {
        self.assembly + self.compression + self.top_solve + self.recovery
    }
}

/// Cell count and skeleton ranks of one compressed tree level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub cells: usize,
    pub sum_khat: usize,
    pub max_khat: usize,
}

/// Dense factorization at the top of the recursion.
#[derive(Debug)]
enum TopSystem {
    /// Degenerate single-cell tree: the full diagonal block, factored as is.
    /// There is nothing to compress, so `compressed_size` equals the full
    /// system dimension in this case.
    Single { lu: LuFactor },
    /// Two top cells: [[Ã₁, S₁₂], [S₂₁, Ã₂]] over their skeleton DOFs;
    /// `split` is the first cell's skeleton size.
    Pair { lu: LuFactor, split: usize },
}

/// Immutable multi-level factorization of the block operator.
#[derive(Debug)]
pub struct FdsFactorization {
    /// Skeletonized levels, leaves first, ending at the two-cell level.
    /// Empty for a single-cell tree.
    levels: Vec<Vec<CellSkeleton>>,
    top: TopSystem,
    dim: usize,
    nodes_per_inclusion: usize,
    compressed_size: usize,
    per_level: Vec<LevelStats>,
    config: CompressionConfig,
    threads: usize,
    assembly_seconds: f64,
    compression_seconds: f64,
    top_factor_seconds: f64,
}

impl FdsFactorization {
    /// Full system dimension (length of rhs and solution vectors).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total skeleton DOFs of the two top cells (full dimension for a
    /// single-cell tree).
    pub fn compressed_size(&self) -> usize {
        self.compressed_size
    }

    pub fn per_level(&self) -> &[LevelStats] {
        &self.per_level
    }

    /// Per-level compressed cells, leaves first.
    pub fn skeleton_levels(&self) -> &[Vec<CellSkeleton>] {
        &self.levels
    }

    /// Flattened per-cell compression records for diagnostics output.
    pub fn compression_stats(&self) -> Vec<CompressionStat> {
        self.levels
            .iter()
            .flat_map(|lv| {
                lv.iter().map(|sk| CompressionStat {
                    level: sk.level,
                    cell_id: sk.index,
                    n_active: sk.nhat(),
                    k_skeleton: sk.khat(),
                    seconds: sk.seconds,
                })
            })
            .collect()
    }
}

/// Total skeleton DOFs left at the top of the factorization.
pub fn compressed_size_of(fact: &FdsFactorization) -> usize {
    fact.compressed_size()
}

/// Solve outcome: recovered solution plus compression and timing diagnostics.
#[derive(Debug, Serialize)]
pub struct FdsReport {
    #[serde(skip)]
    pub phi: Vec<Complex64>,
    pub config: CompressionConfig,
    pub threads: usize,
    pub compressed_size: usize,
    pub times: FdsTimes,
    pub per_level: Vec<LevelStats>,
    /// Filled by callers that also ran an uncompressed reference solve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_vs_dense: Option<f64>,
}

/// Same-level cells whose interactions are sampled directly while compressing
/// cell `i`: the edge-adjacent neighbors, plus every cell whose node disc
/// reaches inside the proxy circle — a source inside the proxy cannot be
/// represented by sources on it, so such cells must be sampled exactly.
fn sampling_near(cells: &[Cell], i: usize, proxy_ratio: f64) -> Vec<usize> {
    let me = &cells[i];
    let rho = proxy_ratio * me.disc_radius;
    let mut set = me.near.clone();
    for (j, other) in cells.iter().enumerate() {
        if j != i && (other.disc_center - me.disc_center).norm() - other.disc_radius < rho {
            set.push(j);
        }
    }
    set.sort_unstable();
    set.dedup();
    set
}

/// Run one job per cell, serially without a pool and in index order
/// otherwise; results always come back in cell order.
fn run_cells<T, F>(
    pool: Option<&rayon::ThreadPool>,
    count: usize,
    job: F,
) -> Result<Vec<T>, FdsError>
where
    T: Send,
    F: Fn(usize) -> Result<T, FdsError> + Sync,
{
    match pool {
        None => (0..count).map(job).collect(),
        Some(p) => p.install(|| {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(|i| job(i)).collect()
        }),
    }
}

/// Diagonal block of an internal cell: the children's compressed diagonals on
/// the diagonal and the exact skeleton-to-skeleton couplings off it.
fn merged_diagonal(asm: &Assembler, c1: &CellSkeleton, c2: &CellSkeleton) -> CMat {
    let (k1, k2) = (c1.khat(), c2.khat());
    let mut a = CMat::zeros(k1 + k2, k1 + k2);
    a.set_block(0, 0, &c1.atilde);
    a.set_block(0, k1, &skeleton_block(asm, c1, c2));
    a.set_block(k1, 0, &skeleton_block(asm, c2, c1));
    a.set_block(k1, k1, &c2.atilde);
    a
}

/// Compress the tree bottom-up and factor the two-cell top system.
///
/// Leaves are compressed from their assembled diagonal blocks; an internal
/// cell's active unknowns are the concatenation of its children's skeletons.
/// `threads` > 1 compresses the cells of each level concurrently (results are
/// identical to the serial order; `threads` ≤ 1 is fully serial).
pub fn fds_factor(
    asm: &Assembler,
    tree: &CellTree,
    cfg: &CompressionConfig,
    threads: usize,
) -> Result<FdsFactorization, FdsError> {
    cfg.validate()?;
    if tree.levels.is_empty() || tree.levels[0].is_empty() {
        return Err(FdsError::EmptyTree);
    }
    let dim = asm.dim();
    let n = asm.n();

    if tree.n_leaves() == 1 {
        // Single-cell tree: nothing to compress, factor the block densely.
        let t0 = Instant::now();
        let a = asm.assemble_cells(&tree.levels[0][0].inclusions)?;
        let assembly_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let lu = lu_factor(a)?;
        let top_factor_seconds = t1.elapsed().as_secs_f64();
        return Ok(FdsFactorization {
            levels: Vec::new(),
            top: TopSystem::Single { lu },
            dim,
            nodes_per_inclusion: n,
            compressed_size: dim,
            per_level: Vec::new(),
            config: *cfg,
            threads,
            assembly_seconds,
            compression_seconds: 0.0,
            top_factor_seconds,
        });
    }

    let stop = tree
        .levels
        .iter()
        .position(|lv| lv.len() <= 2)
        .expect("tree levels shrink to a root");

    let pool = if threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("worker pool"),
        )
    } else {
        None
    };

    let mut levels: Vec<Vec<CellSkeleton>> = Vec::with_capacity(stop + 1);
    let mut assembly_seconds = 0.0;
    let mut compression_seconds = 0.0;

    for l in 0..=stop {
        let cells = &tree.levels[l];
        // Active unknowns: boundary DOFs at leaves, children's skeletons above.
        let active: Vec<Vec<DofRef>> = if l == 0 {
            cells
                .iter()
                .map(|c| {
                    c.inclusions
                        .iter()
                        .flat_map(|&s| asm.dofs_of(s))
                        .collect()
                })
                .collect()
        } else {
            let prev = levels.last().expect("previous level present");
            cells
                .iter()
                .map(|c| {
                    let mut d = prev[c.children[0]].skeleton_dofs();
                    d.extend(prev[c.children[1]].skeleton_dofs());
                    d
                })
                .collect()
        };
        let near_sets: Vec<Vec<usize>> = (0..cells.len())
            .map(|i| sampling_near(cells, i, cfg.proxy_ratio))
            .collect();

        let prev = levels.last();
        let done = run_cells(pool.as_ref(), cells.len(), |i| {
            (|| {
                let t0 = Instant::now();
                let a_tt = match prev {
                    None => asm.assemble_cells(&cells[i].inclusions)?,
                    Some(prev) => merged_diagonal(
                        asm,
                        &prev[cells[i].children[0]],
                        &prev[cells[i].children[1]],
                    ),
                };
                let build_seconds = t0.elapsed().as_secs_f64();
                let ctx = CellContext {
                    level: l,
                    index: i,
                    dofs: active[i].clone(),
                    near_dofs: near_sets[i].iter().map(|&j| active[j].clone()).collect(),
                    disc_center: cells[i].disc_center,
                    disc_radius: cells[i].disc_radius,
                };
                let sk = skeletonize_cell(asm, &ctx, a_tt, cfg)?;
                Ok((build_seconds, sk))
            })()
            .map_err(|source: FdsError| FdsError::Cell {
                level: l,
                index: i,
                source: Box::new(source),
            })
        })?;

        let mut sks = Vec::with_capacity(done.len());
        for (build_seconds, sk) in done {
            assembly_seconds += build_seconds;
            compression_seconds += sk.seconds;
            sks.push(sk);
        }
        levels.push(sks);
    }

    // Dense factorization of the two top cells over their skeletons.
    let top_cells = levels.last().expect("at least one level");
    debug_assert_eq!(top_cells.len(), 2, "stop level must hold two cells");
    let t0 = Instant::now();
    let top = merged_diagonal(asm, &top_cells[0], &top_cells[1]);
    assembly_seconds += t0.elapsed().as_secs_f64();
    let split = top_cells[0].khat();
    let compressed_size = split + top_cells[1].khat();
    let t1 = Instant::now();
    let lu = lu_factor(top)?;
    let top_factor_seconds = t1.elapsed().as_secs_f64();

    let per_level = levels
        .iter()
        .enumerate()
        .map(|(level, sks)| LevelStats {
            level,
            cells: sks.len(),
            sum_khat: sks.iter().map(|s| s.khat()).sum(),
            max_khat: sks.iter().map(|s| s.khat()).max().unwrap_or(0),
        })
        .collect();

    Ok(FdsFactorization {
        levels,
        top: TopSystem::Pair { lu, split },
        dim,
        nodes_per_inclusion: n,
        compressed_size,
        per_level,
        config: *cfg,
        threads,
        assembly_seconds,
        compression_seconds,
        top_factor_seconds,
    })
}

fn gather(f: &[Complex64], dofs: &[DofRef], n: usize) -> CMat {
    let data: Vec<Complex64> = dofs.iter().map(|d| f[d.global(n)]).collect();
    CMat::from_col_major(dofs.len(), 1, data)
}

fn scatter(v: &CMat, dofs: &[DofRef], n: usize, out: &mut [Complex64]) {
    for (i, d) in dofs.iter().enumerate() {
        out[d.global(n)] = v[(i, 0)];
    }
}

/// Solve the factored system for one right-hand side.
///
/// Upward, every cell maps its rhs through z = A_ττ⁻¹ f and g = Ã R z and
/// hands g to its parent; the top system yields the skeleton solution ψ;
/// downward, φ = z + A_ττ⁻¹ L (Ã ψ − g), parents splitting their recovered
/// vector into the children's ψ until leaf values scatter into the global
/// solution.
pub fn fds_solve(fact: &FdsFactorization, f: &[Complex64]) -> Result<FdsReport, FdsError> {
    if f.len() != fact.dim {
        return Err(FdsError::DimensionMismatch {
            expected: fact.dim,
            got: f.len(),
        });
    }
    let n = fact.nodes_per_inclusion;
    let mut times = FdsTimes {
        assembly: fact.assembly_seconds,
        compression: fact.compression_seconds,
        top_solve: fact.top_factor_seconds,
        recovery: 0.0,
    };

    let phi = match &fact.top {
        TopSystem::Single { lu } => {
            let t0 = Instant::now();
            let rhs = CMat::from_col_major(f.len(), 1, f.to_vec());
            let sol = lu.solve(&rhs)?;
            times.top_solve += t0.elapsed().as_secs_f64();
            sol.data().to_vec()
        }
        TopSystem::Pair { lu, split } => {
            let t0 = Instant::now();
            let n_levels = fact.levels.len();
            let mut zs: Vec<Vec<CMat>> = Vec::with_capacity(n_levels);
            let mut gs: Vec<Vec<CMat>> = Vec::with_capacity(n_levels);
            for (l, level) in fact.levels.iter().enumerate() {
                let mut z_l = Vec::with_capacity(level.len());
                let mut g_l = Vec::with_capacity(level.len());
                for (i, sk) in level.iter().enumerate() {
                    let f_cell = if l == 0 {
                        gather(f, &sk.dofs, n)
                    } else {
                        CMat::vstack(&[&gs[l - 1][2 * i], &gs[l - 1][2 * i + 1]])
                    };
                    let z = sk.lu.solve(&f_cell)?;
                    let g = matmul(&sk.atilde, &matmul(&sk.r, &z));
                    z_l.push(z);
                    g_l.push(g);
                }
                zs.push(z_l);
                gs.push(g_l);
            }
            let top = n_levels - 1;
            let rhs = CMat::vstack(&[&gs[top][0], &gs[top][1]]);
            let psi = lu.solve(&rhs)?;
            times.top_solve += t0.elapsed().as_secs_f64();

            let t1 = Instant::now();
            let k_top = psi.nrows();
            let mut psi_level = vec![
                psi.block(0, *split, 0, 1),
                psi.block(*split, k_top, 0, 1),
            ];
            let mut phi = vec![Complex64::new(0.0, 0.0); fact.dim];
            for l in (0..n_levels).rev() {
                let level = &fact.levels[l];
                let mut child_psis = Vec::with_capacity(level.len() * 2);
                for (i, sk) in level.iter().enumerate() {
                    let d = matmul(&sk.atilde, &psi_level[i]).sub(&gs[l][i]);
                    let corr = sk.lu.solve(&matmul(&sk.l, &d))?;
                    let phi_cell = zs[l][i].add(&corr);
                    if l == 0 {
                        scatter(&phi_cell, &sk.dofs, n, &mut phi);
                    } else {
                        let k1 = fact.levels[l - 1][2 * i].khat();
                        let n_hat = phi_cell.nrows();
                        child_psis.push(phi_cell.block(0, k1, 0, 1));
                        child_psis.push(phi_cell.block(k1, n_hat, 0, 1));
                    }
                }
                psi_level = child_psis;
            }
            times.recovery = t1.elapsed().as_secs_f64();
            phi
        }
    };

    Ok(FdsReport {
        phi,
        config: fact.config,
        threads: fact.threads,
        compressed_size: fact.compressed_size,
        times,
        per_level: fact.per_level.clone(),
        error_vs_dense: None,
    })
}
