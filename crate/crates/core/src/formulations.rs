//! Block-system assembly for the transmission scattering problem.
//!
//! For m inclusions with n nodes each, the linear system has m×m blocks of
//! size 2n×2n. Three solver formulations are provided, differing in which
//! boundary operators appear and in the per-inclusion unknown ordering:
//!
//! * `PmchwtAll`  — symmetric transmission formulation; off-diagonal blocks
//!   keep both exterior and interior kernels. Unknowns (q_i; u_i).
//! * `PmchwtOmit` — same diagonal blocks, but off-diagonal blocks keep only
//!   exterior-kernel terms (interior kernels cannot couple distinct
//!   inclusions physically). Unknowns (q_i; u_i).
//! * `Bm`         — combined-field (Robin-type) formulation with coupling
//!   constant α = i/k⁺ and identity shifts on the diagonal. Unknowns
//!   (u_i; q_i).
//!
//! `BlockRule::SimplifiedBm` is a deliberately defective variant of `Bm`
//! (off-diagonal interior rows dropped) kept exclusively to demonstrate how
//! rank-deficient off-diagonal structure breaks interpolative compression;
//! it must never be used as a production solver path.

use crate::geometry::{QuadratureGrid, Vec2};
use crate::kernels::{
    kernel_quartet, potential_matrix, KernelError, PotentialKind, Side, WaveParams,
};
use crate::linalg::CMat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("inclusion index {0} out of range (m = {1})")]
    BadInclusion(usize, usize),
    #[error("incident direction must be nonzero")]
    ZeroDirection,
}

/// User-facing formulation choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    PmchwtAll,
    PmchwtOmit,
    Bm,
}

/// Internal block-structure rule: the three production formulations plus the
/// defective demonstration variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockRule {
    PmchwtAll,
    PmchwtOmit,
    Bm,
    /// `Bm` with the off-diagonal interior-trace rows zeroed. Exists only to
    /// exhibit singular cell projections in compression; not a solver path.
    SimplifiedBm,
}

impl From<Formulation> for BlockRule {
    fn from(f: Formulation) -> BlockRule {
        match f {
            Formulation::PmchwtAll => BlockRule::PmchwtAll,
            Formulation::PmchwtOmit => BlockRule::PmchwtOmit,
            Formulation::Bm => BlockRule::Bm,
        }
    }
}

impl BlockRule {
    pub fn is_bm_family(self) -> bool {
        matches!(self, BlockRule::Bm | BlockRule::SimplifiedBm)
    }

    /// Sides whose kernels appear anywhere in off-diagonal blocks.
    pub fn cross_sides(self) -> &'static [Side] {
        match self {
            BlockRule::PmchwtAll | BlockRule::Bm => &[Side::Plus, Side::Minus],
            BlockRule::PmchwtOmit | BlockRule::SimplifiedBm => &[Side::Plus],
        }
    }
}

/// Incident plane wave u^I(x) = amplitude · exp(i k⁺ d·x).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct IncidentWave {
    pub direction: Vec2,
    pub amplitude: f64,
}

impl Default for IncidentWave {
    fn default() -> Self {
        IncidentWave {
            direction: Vec2::new(1.0, 0.0),
            amplitude: 1.0,
        }
    }
}

impl IncidentWave {
    pub fn new(direction: Vec2, amplitude: f64) -> Result<Self, AssemblyError> {
        let norm = direction.norm();
        if !(norm > 0.0) {
            return Err(AssemblyError::ZeroDirection);
        }
        Ok(IncidentWave {
            direction: direction * (1.0 / norm),
            amplitude,
        })
    }
}

/// Boundary traces of the incident wave on one curve: the field values u^I
/// and the scaled normal derivatives q^I = (1/ε⁺)·∂u^I/∂n.
pub fn incident_trace(
    wave: &IncidentWave,
    grid: &QuadratureGrid,
    params: &WaveParams,
) -> (Vec<Complex64>, Vec<Complex64>) {
    let k = params.wavenumber(Side::Plus);
    let d = wave.direction;
    let mut u = Vec::with_capacity(grid.len());
    let mut q = Vec::with_capacity(grid.len());
    for l in 0..grid.len() {
        let phase = k * d.dot(grid.nodes[l]);
        let ui = Complex64::new(phase.cos(), phase.sin()) * wave.amplitude;
        let qi = ui * I * (k * d.dot(grid.normals[l]) / params.eps_plus);
        u.push(ui);
        q.push(qi);
    }
    (u, q)
}

/// One scalar unknown: component `comp` (0 or 1 within the per-inclusion
/// block) at `node` of inclusion `incl`. The global index of a DOF is
/// incl·2n + comp·n + node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DofRef {
    pub incl: usize,
    pub comp: usize,
    pub node: usize,
}

impl DofRef {
    pub fn global(&self, n: usize) -> usize {
        self.incl * 2 * n + self.comp * n + self.node
    }
}

/// One additive term of a block entry: which kernel (quartet index 0..3 for
/// G, ∂G/∂n_y, ∂G/∂n_x, ∂²G), from which side, with what coefficient.
#[derive(Clone, Copy, Debug)]
struct KernelTerm {
    side: Side,
    quartet_idx: usize,
    coef: Complex64,
}

/// Assembles blocks of the boundary-integral system for a fixed geometry,
/// wave parameters, and formulation rule.
pub struct Assembler<'a> {
    grids: &'a [QuadratureGrid],
    params: WaveParams,
    rule: BlockRule,
    /// Combined-field constant α = i/k⁺ (BM family only; zero otherwise).
    alpha: Complex64,
    /// Off-diagonal entry recipe per (row component, column component).
    cross: [[Vec<KernelTerm>; 2]; 2],
}

impl<'a> Assembler<'a> {
    pub fn new(grids: &'a [QuadratureGrid], params: WaveParams, rule: BlockRule) -> Self {
        let alpha = if rule.is_bm_family() {
            I / params.wavenumber(Side::Plus)
        } else {
            ZERO
        };
        let ep = params.eps_plus;
        let em = params.eps_minus;
        let c = |re: f64| Complex64::new(re, 0.0);
        use Side::{Minus, Plus};
        let term = |side, quartet_idx, coef| KernelTerm {
            side,
            quartet_idx,
            coef,
        };
        // Quartet indices: 0 = S-kernel, 1 = D-kernel, 2 = D*-kernel, 3 = N-kernel.
        let cross: [[Vec<KernelTerm>; 2]; 2] = match rule {
            BlockRule::PmchwtAll => [
                [
                    vec![term(Plus, 0, c(-ep)), term(Minus, 0, c(-em))],
                    vec![term(Plus, 1, ONE), term(Minus, 1, ONE)],
                ],
                [
                    vec![term(Plus, 2, -ONE), term(Minus, 2, -ONE)],
                    vec![term(Plus, 3, c(1.0 / ep)), term(Minus, 3, c(1.0 / em))],
                ],
            ],
            BlockRule::PmchwtOmit => [
                [vec![term(Plus, 0, c(-ep))], vec![term(Plus, 1, ONE)]],
                [vec![term(Plus, 2, -ONE)], vec![term(Plus, 3, c(1.0 / ep))]],
            ],
            BlockRule::Bm => [
                [
                    vec![term(Plus, 1, ONE), term(Plus, 3, alpha)],
                    vec![term(Plus, 0, c(-ep)), term(Plus, 2, -alpha * ep)],
                ],
                [vec![term(Minus, 1, ONE)], vec![term(Minus, 0, c(-em))]],
            ],
            BlockRule::SimplifiedBm => [
                [
                    vec![term(Plus, 1, ONE), term(Plus, 3, alpha)],
                    vec![term(Plus, 0, c(-ep)), term(Plus, 2, -alpha * ep)],
                ],
                [Vec::new(), Vec::new()],
            ],
        };
        Assembler {
            grids,
            params,
            rule,
            alpha,
            cross,
        }
    }

    pub fn m(&self) -> usize {
        self.grids.len()
    }

    /// Nodes per inclusion.
    pub fn n(&self) -> usize {
        self.grids[0].len()
    }

    /// Total unknown count 2·m·n.
    pub fn dim(&self) -> usize {
        2 * self.m() * self.n()
    }

    pub fn params(&self) -> &WaveParams {
        &self.params
    }

    pub fn rule(&self) -> BlockRule {
        self.rule
    }

    pub fn grids(&self) -> &'a [QuadratureGrid] {
        self.grids
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    /// All DOFs of one inclusion in global order (component 0 nodes, then
    /// component 1 nodes).
    pub fn dofs_of(&self, incl: usize) -> Vec<DofRef> {
        let n = self.n();
        let mut out = Vec::with_capacity(2 * n);
        for comp in 0..2 {
            for node in 0..n {
                out.push(DofRef { incl, comp, node });
            }
        }
        out
    }

    /// The 2n×2n block coupling unknowns of inclusion `j` to equations of
    /// inclusion `i`.
    pub fn assemble_block(&self, i: usize, j: usize) -> Result<CMat, AssemblyError> {
        let m = self.m();
        if i >= m || j >= m {
            return Err(AssemblyError::BadInclusion(i.max(j), m));
        }
        if i == j {
            self.diagonal_block(i)
        } else {
            Ok(self.cross_block(i, j))
        }
    }

    fn diagonal_block(&self, j: usize) -> Result<CMat, AssemblyError> {
        let g = &self.grids[j];
        let n = g.len();
        let p = &self.params;
        let op = |kind, side| potential_matrix(kind, side, g, g, p, true);
        let mut out = CMat::zeros(2 * n, 2 * n);
        let mut add = |r: usize, c: usize, mat: &CMat, coef: Complex64| {
            for l in 0..n {
                for k in 0..n {
                    out[(r * n + k, c * n + l)] += coef * mat[(k, l)];
                }
            }
        };
        let ep = self.params.eps_plus;
        let em = self.params.eps_minus;
        match self.rule {
            BlockRule::PmchwtAll | BlockRule::PmchwtOmit => {
                use PotentialKind::{AdjointDouble, Double, Hypersingular, Single};
                use Side::{Minus, Plus};
                add(0, 0, &op(Single, Plus)?, Complex64::new(-ep, 0.0));
                add(0, 0, &op(Single, Minus)?, Complex64::new(-em, 0.0));
                add(0, 1, &op(Double, Plus)?, ONE);
                add(0, 1, &op(Double, Minus)?, ONE);
                add(1, 0, &op(AdjointDouble, Plus)?, -ONE);
                add(1, 0, &op(AdjointDouble, Minus)?, -ONE);
                add(1, 1, &op(Hypersingular, Plus)?, Complex64::new(1.0 / ep, 0.0));
                add(1, 1, &op(Hypersingular, Minus)?, Complex64::new(1.0 / em, 0.0));
            }
            BlockRule::Bm | BlockRule::SimplifiedBm => {
                use PotentialKind::{AdjointDouble, Double, Hypersingular, Single};
                use Side::{Minus, Plus};
                let alpha = self.alpha;
                add(0, 0, &op(Double, Plus)?, ONE);
                add(0, 0, &op(Hypersingular, Plus)?, alpha);
                add(0, 1, &op(Single, Plus)?, Complex64::new(-ep, 0.0));
                add(0, 1, &op(AdjointDouble, Plus)?, -alpha * ep);
                add(1, 0, &op(Double, Minus)?, ONE);
                add(1, 1, &op(Single, Minus)?, Complex64::new(-em, 0.0));
                // Identity shifts: the exterior traces of D and D* carry
                // −1/2 jumps into row 0, the interior trace of D a +1/2
                // jump into row 1.
                for l in 0..n {
                    out[(l, l)] -= Complex64::new(0.5, 0.0);
                    out[(l, n + l)] -= alpha * (0.5 * ep);
                    out[(n + l, l)] += Complex64::new(0.5, 0.0);
                }
            }
        }
        Ok(out)
    }

    fn cross_block(&self, i: usize, j: usize) -> CMat {
        let (gt, gs) = (&self.grids[i], &self.grids[j]);
        let (nt, ns) = (gt.len(), gs.len());
        let sides = self.rule.cross_sides();
        let kp = self.params.wavenumber(Side::Plus);
        let km = self.params.wavenumber(Side::Minus);
        let mut out = CMat::zeros(2 * nt, 2 * ns);
        for b in 0..ns {
            for a in 0..nt {
                let mut q = [[ZERO; 4]; 2];
                for &side in sides {
                    let k = if side == Side::Plus { kp } else { km };
                    // Grids from one layout never touch; unwrap is safe.
                    q[side_idx(side)] =
                        kernel_quartet(gt.nodes[a], gt.normals[a], gs.nodes[b], gs.normals[b], k)
                            .expect("disjoint curves");
                }
                let w = gs.weights[b];
                for (r, row) in self.cross.iter().enumerate() {
                    for (c, terms) in row.iter().enumerate() {
                        let mut v = ZERO;
                        for t in terms {
                            v += t.coef * q[side_idx(t.side)][t.quartet_idx];
                        }
                        out[(r * nt + a, c * ns + b)] = v * w;
                    }
                }
            }
        }
        out
    }

    /// Entries of the global matrix restricted to arbitrary row/column DOF
    /// lists. Rows and columns must live on disjoint inclusion sets
    /// (off-diagonal kernels only).
    pub fn assemble_cross_dofs(&self, rows: &[DofRef], cols: &[DofRef]) -> CMat {
        debug_assert!(
            rows.iter().all(|r| cols.iter().all(|c| r.incl != c.incl)),
            "cross-DOF assembly requires disjoint inclusion sets"
        );
        // Group by (incl, node) so each kernel evaluation is shared between
        // the two components referencing the same node.
        let row_nodes = group_by_node(rows);
        let col_nodes = group_by_node(cols);
        let sides = self.rule.cross_sides();
        let kp = self.params.wavenumber(Side::Plus);
        let km = self.params.wavenumber(Side::Minus);
        let mut out = CMat::zeros(rows.len(), cols.len());
        for (cincl, cnode, centries) in &col_nodes {
            let gs = &self.grids[*cincl];
            let w = gs.weights[*cnode];
            for (rincl, rnode, rentries) in &row_nodes {
                let gt = &self.grids[*rincl];
                let mut q = [[ZERO; 4]; 2];
                for &side in sides {
                    let k = if side == Side::Plus { kp } else { km };
                    q[side_idx(side)] = kernel_quartet(
                        gt.nodes[*rnode],
                        gt.normals[*rnode],
                        gs.nodes[*cnode],
                        gs.normals[*cnode],
                        k,
                    )
                    .expect("disjoint curves");
                }
                for &(ri, r) in rentries {
                    for &(ci, c) in centries {
                        let mut v = ZERO;
                        for t in &self.cross[r][c] {
                            v += t.coef * q[side_idx(t.side)][t.quartet_idx];
                        }
                        out[(ri, ci)] = v * w;
                    }
                }
            }
        }
        out
    }

    /// Full system matrix over the listed inclusions (diagonal blocks via
    /// singular quadrature, off-diagonal via smooth products), in the order
    /// given.
    pub fn assemble_cells(&self, incls: &[usize]) -> Result<CMat, AssemblyError> {
        let n = self.n();
        let dim = 2 * n * incls.len();
        let mut out = CMat::zeros(dim, dim);
        for (bj, &j) in incls.iter().enumerate() {
            for (bi, &i) in incls.iter().enumerate() {
                let block = self.assemble_block(i, j)?;
                out.set_block(2 * n * bi, 2 * n * bj, &block);
            }
        }
        Ok(out)
    }

    /// Global right-hand side for the incident wave.
    pub fn rhs(&self, wave: &IncidentWave) -> Vec<Complex64> {
        let n = self.n();
        let mut f = Vec::with_capacity(self.dim());
        for g in self.grids {
            let (u, q) = incident_trace(wave, g, &self.params);
            match self.rule {
                BlockRule::PmchwtAll | BlockRule::PmchwtOmit => {
                    // Unknowns (q; u): first n equations pair with q.
                    f.extend(u.iter().map(|v| -v));
                    f.extend(q.iter().map(|v| -v));
                }
                BlockRule::Bm | BlockRule::SimplifiedBm => {
                    let alpha = self.alpha;
                    f.extend(u.iter().zip(&q).map(|(uv, qv)| -(uv + alpha * qv)));
                    f.extend(std::iter::repeat(ZERO).take(n));
                }
            }
        }
        f
    }
}

fn side_idx(side: Side) -> usize {
    match side {
        Side::Plus => 0,
        Side::Minus => 1,
    }
}

/// Group DOFs by (inclusion, node), keeping each DOF's position in the input
/// list. Returns (incl, node, [(position, comp)]).
fn group_by_node(dofs: &[DofRef]) -> Vec<(usize, usize, Vec<(usize, usize)>)> {
    let mut out: Vec<(usize, usize, Vec<(usize, usize)>)> = Vec::new();
    let mut index: std::collections::HashMap<(usize, usize), usize> =
        std::collections::HashMap::new();
    for (pos, d) in dofs.iter().enumerate() {
        match index.entry((d.incl, d.node)) {
            std::collections::hash_map::Entry::Occupied(e) => {
                out[*e.get()].2.push((pos, d.comp));
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(out.len());
                out.push((d.incl, d.node, vec![(pos, d.comp)]));
            }
        }
    }
    out
}

/// Swap the two component halves within each per-inclusion block of a
/// solution vector: converts between the (q; u) and (u; q) orderings.
pub fn swap_component_halves(v: &[Complex64], n: usize) -> Vec<Complex64> {
    assert_eq!(v.len() % (2 * n), 0);
    let mut out = Vec::with_capacity(v.len());
    for block in v.chunks_exact(2 * n) {
        out.extend_from_slice(&block[n..]);
        out.extend_from_slice(&block[..n]);
    }
    out
}
