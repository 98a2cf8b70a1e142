//! Proxy-accelerated interpolative compression of cell interactions.
//!
//! For a cell τ of the spatial tree, all interactions with the rest of the
//! geometry are sampled by (a) the exact blocks against edge-adjacent
//! ("near") cells and (b) value and normal-derivative observations on a
//! surrounding proxy circle, which stand in for every farther cell. A
//! column-pivoted QR of the stacked sample selects a shared skeleton subset
//! Ŝ of the cell's unknowns together with interpolation operators R
//! (columns) and L (rows), and the cell's compressed diagonal inverse
//! Ã = (R A_ττ⁻¹ L)⁻¹.

use crate::formulations::{Assembler, AssemblyError, BlockRule, DofRef};
use crate::geometry::Vec2;
use crate::kernels::{kernel_quartet, Side};
use crate::linalg::{lu_factor, matmul, pivoted_qr, CMat, LinalgError, LuFactor};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

/// Condition-estimate ceiling for the compressed projection R A_ττ⁻¹ L;
/// beyond this the projection is reported as singular. A genuinely
/// degenerate projection (zero interpolation columns) estimates at
/// infinity, far above this ceiling; healthy regularized formulations have
/// been observed a decade below it.
pub const COND_LIMIT: f64 = 1e13;

/// Relative pivot floor for the row-interpolation least-squares fit. The
/// fit keeps every numerically meaningful direction (its accuracy is
/// governed by the skeleton selection, not by re-thresholding); this floor
/// only drops exactly degenerate rows, which then surface through the
/// singular-projection check.
const FIT_PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum SkeletonError {
    #[error("invalid compression config: {0}")]
    BadConfig(String),
    #[error("proxy circle intersects cell geometry (level {level}, cell {cell})")]
    ProxyIntersectsCell { level: usize, cell: usize },
    #[error(
        "compressed projection is numerically singular (level {level}, cell {cell}, cond {cond:.3e})"
    )]
    SingularProjection { level: usize, cell: usize, cond: f64 },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Parameters of the interpolative compression.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompressionConfig {
    /// Relative pivot threshold ε: the skeleton rank is the first index at
    /// which |r_ii|/|r_11| drops to ε or below.
    pub qr_threshold: f64,
    /// Proxy circle radius as a multiple of the cell bounding radius.
    pub proxy_ratio: f64,
    /// Optional hard cap on the skeleton rank (defaults to the active size).
    pub max_rank: Option<usize>,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            qr_threshold: 1e-9,
            proxy_ratio: 1.5,
            max_rank: None,
        }
    }
}

impl CompressionConfig {
    pub fn validate(&self) -> Result<(), SkeletonError> {
        if !(self.qr_threshold > 0.0 && self.qr_threshold < 1.0) {
            return Err(SkeletonError::BadConfig(format!(
                "qr_threshold must lie in (0,1), got {}",
                self.qr_threshold
            )));
        }
        if !(self.proxy_ratio > 1.0 && self.proxy_ratio.is_finite()) {
            return Err(SkeletonError::BadConfig(format!(
                "proxy_ratio must exceed 1, got {}",
                self.proxy_ratio
            )));
        }
        Ok(())
    }

    /// Number of proxy points.
    ///
    /// Two regimes add up: an oscillatory budget of three points per
    /// wavelength on the circle (3·k_max·ρ), and a smooth/log budget that
    /// resolves the azimuthal decay of sources at the cell boundary —
    /// mode m of such a source carries weight γ^(−m) on the circle, so
    /// representing interactions down to machine precision needs about
    /// 2·ln(10¹⁶)/ln(γ) additional points. Under-resolving the smooth
    /// budget caps every proxy block at rank n_p and silently floors the
    /// reconstruction error, so it is sized for full double precision
    /// rather than for the current threshold.
    pub fn proxy_count(&self, k_max: f64, rho: f64) -> usize {
        let oscillatory = (3.0 * k_max * rho).ceil() as usize;
        let smooth = (2.0 * 16.0 * std::f64::consts::LN_10 / self.proxy_ratio.ln()).ceil() as usize;
        64usize.max(oscillatory + smooth)
    }
}

/// Discretized circle enclosing a cell, used as an equivalent surface for
/// all interactions with non-adjacent cells.
#[derive(Debug, Clone)]
pub struct ProxySurface {
    pub center: Vec2,
    pub radius: f64,
    pub points: Vec<Vec2>,
    pub normals: Vec<Vec2>,
    pub kernel_sides: Vec<Side>,
}

impl ProxySurface {
    pub fn new(center: Vec2, radius: f64, n_points: usize, sides: &[Side]) -> ProxySurface {
        let mut points = Vec::with_capacity(n_points);
        let mut normals = Vec::with_capacity(n_points);
        for j in 0..n_points {
            let t = 2.0 * std::f64::consts::PI * j as f64 / n_points as f64;
            let e = Vec2::new(t.cos(), t.sin());
            points.push(center + e * radius);
            normals.push(e);
        }
        ProxySurface {
            center,
            radius,
            points,
            normals,
            kernel_sides: sides.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Identity of a cell being compressed plus its sampling context.
#[derive(Debug, Clone)]
pub struct CellContext {
    pub level: usize,
    pub index: usize,
    /// Active unknowns of the cell (original boundary DOFs at every level).
    pub dofs: Vec<DofRef>,
    /// Active unknowns of each edge-adjacent cell at the same level.
    pub near_dofs: Vec<Vec<DofRef>>,
    pub disc_center: Vec2,
    pub disc_radius: f64,
}

/// Compressed representation of one cell.
///
/// The interpolation is block-diagonal over the two density components:
/// each component owns its skeleton subset and its interpolation rows and
/// columns, so R and L never mix components. `skeleton` lists the
/// component-0 subset (in pivot order) followed by the component-1 subset,
/// and the rows of R / columns of L follow the same ordering.
#[derive(Debug)]
pub struct CellSkeleton {
    pub level: usize,
    pub index: usize,
    pub dofs: Vec<DofRef>,
    /// Local indices (into `dofs`) of the skeleton subset: component-0
    /// pivots in pivot order, then component-1 pivots.
    pub skeleton: Vec<usize>,
    /// Column interpolation, k̂×n̂ with R(:,Ŝ) = I exactly.
    pub r: CMat,
    /// Row interpolation, n̂×k̂ with L(Ŝ,:) = I exactly.
    pub l: CMat,
    /// LU factorization of the cell diagonal block A_ττ.
    pub lu: LuFactor,
    /// Compressed diagonal Ã = (R A_ττ⁻¹ L)⁻¹, k̂×k̂.
    pub atilde: CMat,
    /// One-norm condition estimate of R A_ττ⁻¹ L̃ before the skeleton rows
    /// of the row fit are pinned to the identity.
    pub cond: f64,
    pub seconds: f64,
}

impl CellSkeleton {
    pub fn nhat(&self) -> usize {
        self.dofs.len()
    }

    pub fn khat(&self) -> usize {
        self.skeleton.len()
    }

    pub fn skeleton_dofs(&self) -> Vec<DofRef> {
        self.skeleton.iter().map(|&i| self.dofs[i]).collect()
    }
}

/// Per-cell compression record for diagnostics output.
#[derive(Debug, Clone, Serialize)]
pub struct CompressionStat {
    pub level: usize,
    pub cell_id: usize,
    pub n_active: usize,
    pub k_skeleton: usize,
    pub seconds: f64,
}

/// Quartet layout: [value, source-normal, target-normal, both-normals].
const OBS_VALUE: usize = 0;
const OBS_TARGET_DERIV: usize = 2;

/// How a column of an off-diagonal block depends on the density component:
/// which kernel supplies its value rows and the scalar in front.
fn column_recipe(rule: BlockRule, comp: usize, eps_side: f64) -> (usize, Complex64) {
    let minus_eps = Complex64::new(-eps_side, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match (rule.is_bm_family(), comp) {
        (false, 0) => (0, minus_eps), // flux density through the value kernel
        (false, _) => (1, one),       // trace density through the source-derivative kernel
        (true, 0) => (1, one),
        (true, _) => (0, minus_eps),
    }
}

/// How an equation row of an off-diagonal block observes an incoming field
/// of the given side: list of (observation kind, coefficient).
fn row_recipe(
    rule: BlockRule,
    comp: usize,
    side: Side,
    eps_side: f64,
    alpha: Complex64,
) -> Vec<(usize, Complex64)> {
    let one = Complex64::new(1.0, 0.0);
    if rule.is_bm_family() {
        match (comp, side) {
            (0, Side::Plus) => vec![(OBS_VALUE, one), (OBS_TARGET_DERIV, alpha)],
            (1, Side::Minus) if rule != BlockRule::SimplifiedBm => vec![(OBS_VALUE, one)],
            _ => Vec::new(),
        }
    } else {
        match comp {
            0 => vec![(OBS_VALUE, one)],
            _ => vec![(OBS_TARGET_DERIV, Complex64::new(1.0 / eps_side, 0.0))],
        }
    }
}

/// Sample the cell's interaction with everything beyond its near field.
///
/// Returns `(outgoing, incoming)`:
/// * `outgoing` (rows = per side, value then derivative observations at the
///   proxy points; columns = active DOFs): the response at the proxy circle
///   to the cell's densities, with the quadrature weights and per-component
///   coefficients of the true off-diagonal columns.
/// * `incoming` (rows = active DOFs; columns = per side, monopole then
///   dipole sources at the proxy points): the formulation's equation rows
///   applied to fields radiated from the proxy circle.
pub fn proxy_blocks(
    asm: &Assembler,
    dofs: &[DofRef],
    proxy: &ProxySurface,
) -> Result<(CMat, CMat), SkeletonError> {
    let n_hat = dofs.len();
    let n_p = proxy.len();
    let n_sides = proxy.kernel_sides.len();
    let params = asm.params();
    let rule = asm.rule();
    let alpha = asm.alpha();
    let grids = asm.grids();

    let mut outgoing = CMat::zeros(2 * n_p * n_sides, n_hat);
    let mut incoming = CMat::zeros(n_hat, 2 * n_p * n_sides);
    let source_weight = Complex64::new(
        2.0 * std::f64::consts::PI * proxy.radius / n_p as f64,
        0.0,
    );

    for (s_idx, &side) in proxy.kernel_sides.iter().enumerate() {
        let k = params.wavenumber(side);
        let eps = params.permittivity(side);
        let row0 = 2 * n_p * s_idx;
        let col0 = 2 * n_p * s_idx;

        for (c, dof) in dofs.iter().enumerate() {
            let g = &grids[dof.incl];
            let y = g.nodes[dof.node];
            let ny = g.normals[dof.node];
            let w = Complex64::new(g.weights[dof.node], 0.0);
            let (val_idx, coef) = column_recipe(rule, dof.comp, eps);
            let cw = coef * w;
            let terms = row_recipe(rule, dof.comp, side, eps, alpha);
            for j in 0..n_p {
                let p = proxy.points[j];
                let np = proxy.normals[j];
                // Outgoing: cell density observed at the proxy point.
                let quartet = kernel_quartet(p, np, y, ny, k).map_err(AssemblyError::from)?;
                outgoing[(row0 + j, c)] = quartet[val_idx] * cw;
                outgoing[(row0 + n_p + j, c)] = quartet[val_idx + 2] * cw;
                // Incoming: proxy source observed by the cell's equations.
                if !terms.is_empty() {
                    let q_in =
                        kernel_quartet(y, ny, p, np, k).map_err(AssemblyError::from)?;
                    let mut mono = Complex64::new(0.0, 0.0);
                    let mut dip = Complex64::new(0.0, 0.0);
                    for &(obs, tc) in &terms {
                        mono += tc * q_in[obs];
                        dip += tc * q_in[obs + 1];
                    }
                    incoming[(c, col0 + j)] = mono * source_weight;
                    incoming[(c, col0 + n_p + j)] = dip * source_weight;
                }
            }
        }
    }
    Ok((outgoing, incoming))
}

/// Compress one cell: select its skeleton, build the interpolation
/// operators, and invert the projected diagonal.
///
/// `a_tt` is the cell's diagonal block over its active DOFs (assembled for
/// leaves; built from child compressions at internal levels). It is
/// consumed by the LU factorization stored in the result.
pub fn skeletonize_cell(
    asm: &Assembler,
    ctx: &CellContext,
    a_tt: CMat,
    cfg: &CompressionConfig,
) -> Result<CellSkeleton, SkeletonError> {
    let t0 = Instant::now();
    cfg.validate()?;
    let n_hat = ctx.dofs.len();
    assert_eq!(a_tt.nrows(), n_hat, "diagonal block size mismatch");
    assert_eq!(a_tt.ncols(), n_hat, "diagonal block size mismatch");

    let params = asm.params();
    let rho = cfg.proxy_ratio * ctx.disc_radius;
    let sides = asm.rule().cross_sides();
    let n_p = cfg.proxy_count(params.max_wavenumber(), rho);
    let proxy = ProxySurface::new(ctx.disc_center, rho, n_p, sides);

    let grids = asm.grids();
    for dof in &ctx.dofs {
        let p = grids[dof.incl].nodes[dof.node];
        if (p - ctx.disc_center).norm() >= rho {
            return Err(SkeletonError::ProxyIntersectsCell {
                level: ctx.level,
                cell: ctx.index,
            });
        }
    }

    // Column/row interaction samples.
    let mut eq_blocks = Vec::with_capacity(ctx.near_dofs.len());
    let mut row_blocks = Vec::with_capacity(ctx.near_dofs.len());
    for near in &ctx.near_dofs {
        eq_blocks.push(asm.assemble_cross_dofs(near, &ctx.dofs));
        row_blocks.push(asm.assemble_cross_dofs(&ctx.dofs, near));
    }
    let (outgoing, incoming) = proxy_blocks(asm, &ctx.dofs, &proxy)?;

    // Column sample: how this cell's densities are observed from outside
    // (near-cell equations plus the outgoing proxy responses). The pivoted
    // QR of this sample picks the skeleton and yields the column
    // interpolation directly, so selection rank and interpolation are
    // consistent by construction.
    let mut col_stack: Vec<&CMat> = eq_blocks.iter().collect();
    col_stack.push(&outgoing);
    let y = CMat::vstack(&col_stack);

    // Row sample: how outside sources are observed by this cell's equations
    // (near-cell rows plus the incoming proxy traces). The row interpolation
    // is a least-squares fit of all rows by the skeleton rows of this sample.
    let mut w_parts: Vec<&CMat> = row_blocks.iter().collect();
    w_parts.push(&incoming);
    let w = CMat::hstack(&w_parts);
    let w_cols: Vec<usize> = (0..w.ncols()).collect();
    let y_rows: Vec<usize> = (0..y.nrows()).collect();

    // Per-component interpolative decomposition: each density component
    // keeps its own skeleton, column interpolation, and row fit.
    struct CompPart {
        idx: Vec<usize>,        // local DOF indices of this component
        pivots: Vec<usize>,     // full pivot order of the component QR
        k: usize,
        t: CMat,                // k×(n_c−k) interpolation onto non-pivots
        l_fit: CMat,            // n_c×k row fit (before the identity snap)
    }
    let mut parts: Vec<CompPart> = Vec::with_capacity(2);
    for comp in 0..2 {
        let idx: Vec<usize> = (0..n_hat).filter(|&i| ctx.dofs[i].comp == comp).collect();
        if idx.is_empty() {
            continue;
        }
        let n_c = idx.len();
        let y_c = y.select(&y_rows, &idx);
        let qr = pivoted_qr(y_c)?;
        let mut k = qr.rank_with_rel_tol(cfg.qr_threshold);
        if let Some(cap) = cfg.max_rank {
            k = k.min(cap);
        }
        k = k.min(n_c);
        if k == 0 {
            return Err(SkeletonError::SingularProjection {
                level: ctx.level,
                cell: ctx.index,
                cond: f64::INFINITY,
            });
        }
        let pivots = qr.pivots().to_vec();
        let t = qr.interp_coeffs(k);

        let l_fit = if k == n_c {
            // No truncation: every DOF of the component survives, so both
            // interpolations are exact permutations of the identity.
            let mut ident = CMat::zeros(n_c, n_c);
            for (j, &p) in pivots.iter().enumerate() {
                ident[(p, j)] = Complex64::new(1.0, 0.0);
            }
            ident
        } else {
            let w_c = w.select(&idx, &w_cols);
            let ws_rows: Vec<usize> = pivots[0..k].to_vec();
            let ws = w_c.select(&ws_rows, &w_cols);
            let fit_qr = pivoted_qr(ws.transpose())?;
            let fit_rank = fit_qr.rank_with_rel_tol(FIT_PIVOT_FLOOR);
            let mut fit = fit_qr.solve_basic(&w_c.transpose(), fit_rank)?.transpose();
            // Skeleton directions that carry no independent row data cannot
            // be fit; they are kept as plain identity columns when their row
            // sample is nonzero (the direction exists for the column side
            // only). A skeleton row whose sample is exactly zero stays a
            // zero column: such a projection is genuinely singular and must
            // be reported as such downstream.
            if fit_rank < k {
                for &j in &fit_qr.pivots()[fit_rank..k] {
                    let row_norm: f64 = (0..ws.ncols())
                        .map(|s| ws[(j, s)].norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    if row_norm > 0.0 {
                        fit[(ws_rows[j], j)] = Complex64::new(1.0, 0.0);
                    }
                }
            }
            fit
        };
        parts.push(CompPart { idx, pivots, k, t, l_fit });
    }

    let k_hat: usize = parts.iter().map(|p| p.k).sum();
    let mut skeleton: Vec<usize> = Vec::with_capacity(k_hat);
    for p in &parts {
        skeleton.extend(p.pivots[0..p.k].iter().map(|&j| p.idx[j]));
    }

    // Assemble the block-diagonal R (k̂×n̂) and pre-snap L (n̂×k̂).
    let mut r = CMat::zeros(k_hat, n_hat);
    let mut l_raw = CMat::zeros(n_hat, k_hat);
    let mut off = 0usize;
    for p in &parts {
        let n_c = p.idx.len();
        for j in 0..p.k {
            r[(off + j, p.idx[p.pivots[j]])] = Complex64::new(1.0, 0.0);
        }
        for c in 0..(n_c - p.k) {
            let local = p.idx[p.pivots[p.k + c]];
            for j in 0..p.k {
                r[(off + j, local)] = p.t[(j, c)];
            }
        }
        for i in 0..n_c {
            for j in 0..p.k {
                l_raw[(p.idx[i], off + j)] = p.l_fit[(i, j)];
            }
        }
        off += p.k;
    }

    let mut l = l_raw.clone();
    for (j, &row) in skeleton.iter().enumerate() {
        for c in 0..k_hat {
            l[(row, c)] = Complex64::new(if c == j { 1.0 } else { 0.0 }, 0.0);
        }
    }

    let lu = lu_factor(a_tt)?;
    let solved = lu.solve(&CMat::hstack(&[&l_raw, &l]))?;
    let m_raw = matmul(&r, &solved.block(0, n_hat, 0, k_hat));
    let m_snap = matmul(&r, &solved.block(0, n_hat, k_hat, 2 * k_hat));

    let cond = match lu_factor(m_raw) {
        Ok(f) => f.cond_one().unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    };
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(SkeletonError::SingularProjection {
            level: ctx.level,
            cell: ctx.index,
            cond,
        });
    }
    let atilde = match lu_factor(m_snap).and_then(|f| f.inverse()) {
        Ok(inv) => inv,
        Err(_) => {
            return Err(SkeletonError::SingularProjection {
                level: ctx.level,
                cell: ctx.index,
                cond: f64::INFINITY,
            })
        }
    };

    Ok(CellSkeleton {
        level: ctx.level,
        index: ctx.index,
        dofs: ctx.dofs.clone(),
        skeleton,
        r,
        l,
        lu,
        atilde,
        cond,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Off-diagonal block between two skeleton sets: original kernel and
/// quadrature entries at the surviving DOF pairs.
pub fn skeleton_block(asm: &Assembler, rows: &CellSkeleton, cols: &CellSkeleton) -> CMat {
    asm.assemble_cross_dofs(&rows.skeleton_dofs(), &cols.skeleton_dofs())
}

/// Write per-cell compression statistics as CSV.
pub fn write_compression_csv<W: Write>(
    out: &mut W,
    stats: &[CompressionStat],
) -> std::io::Result<()> {
    writeln!(out, "level,cell_id,n_active,k_skeleton,seconds")?;
    for s in stats {
        writeln!(
            out,
            "{},{},{},{},{:.16e}",
            s.level, s.cell_id, s.n_active, s.k_skeleton, s.seconds
        )?;
    }
    Ok(())
}
