//! Inclusion boundary curves, grid arrangements, quadrature node generation,
//! and the Morton-ordered binary cell tree used by the fast direct solver.
//!
//! Inclusions are smooth star-shaped curves r(t) = R₀(1 + a·cos(pt)) traced
//! counter-clockwise, so the outward unit normal is (x₂′, −x₁′)/|x′|.
//! Layouts place one inclusion per site of a √m × √m grid, rotating
//! inclusion s by s·π(3−√5) (the golden angle — deterministic, no RNG, and
//! no two inclusions share an orientation).
//!
//! The cell tree is a perfect binary tree over the inclusions: leaves are
//! single inclusions ordered by the Morton (Z-order) code of their grid
//! coordinates, and each internal cell merges two children, alternating the
//! merge direction so every cell covers a near-square block of grid sites.
//! Near lists connect cells of equal level whose blocks share an edge (the
//! 4-neighborhood; diagonally touching blocks are far).

use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

/// Errors from curve validation and layout construction.
#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("base radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("lobe amplitude must satisfy |a| < 1, got {0}")]
    AmplitudeTooLarge(f64),
    #[error("node count must be even and at least 16, got {0}")]
    BadNodeCount(usize),
    #[error("inclusion count must be a power of 4, got {0}")]
    NotPowerOfFour(usize),
    #[error("spacing {spacing} overlaps inclusions of max radius {max_radius}")]
    Overlap { spacing: f64, max_radius: f64 },
}

/// A point or vector in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Vec2 {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Parameters of one star-shaped inclusion boundary.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CurveSpec {
    pub center: Vec2,
    /// R₀ > 0.
    pub base_radius: f64,
    /// |a| < 1 keeps the radius positive (Jordan curve).
    pub lobe_amplitude: f64,
    /// p ≥ 0; p = 0 is a circle.
    pub lobe_count: u32,
    /// Rigid rotation φ of the whole curve.
    pub rotation: f64,
}

impl CurveSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.base_radius > 0.0) {
            return Err(GeometryError::NonPositiveRadius(self.base_radius));
        }
        if !(self.lobe_amplitude.abs() < 1.0) {
            return Err(GeometryError::AmplitudeTooLarge(self.lobe_amplitude));
        }
        Ok(())
    }

    /// Radius profile r(t) = R₀(1 + a·cos(pt)).
    pub fn radius(&self, t: f64) -> f64 {
        self.base_radius * (1.0 + self.lobe_amplitude * (self.lobe_count as f64 * t).cos())
    }

    /// Point on the curve at parameter t: center + r(t)·(cos(t+φ), sin(t+φ)).
    pub fn point(&self, t: f64) -> Vec2 {
        let r = self.radius(t);
        let ang = t + self.rotation;
        self.center + Vec2::new(r * ang.cos(), r * ang.sin())
    }

    /// Largest distance from the center to the curve.
    pub fn max_radius(&self) -> f64 {
        self.base_radius * (1.0 + self.lobe_amplitude.abs())
    }

    /// First and second parameter derivatives of the position.
    fn derivatives(&self, t: f64) -> (Vec2, Vec2) {
        let p = self.lobe_count as f64;
        let r0 = self.base_radius;
        let a = self.lobe_amplitude;
        let rho = r0 * (1.0 + a * (p * t).cos());
        let rho_p = -r0 * a * p * (p * t).sin();
        let rho_pp = -r0 * a * p * p * (p * t).cos();
        let ang = t + self.rotation;
        let e = Vec2::new(ang.cos(), ang.sin());
        let ep = Vec2::new(-ang.sin(), ang.cos());
        // x = ρe: x' = ρ'e + ρe', x'' = ρ''e + 2ρ'e' − ρe.
        let d1 = e * rho_p + ep * rho;
        let d2 = e * (rho_pp - rho) + ep * (2.0 * rho_p);
        (d1, d2)
    }
}

/// Discretized boundary: equispaced parameter nodes with analytic normals,
/// speeds |x′(t)|, and trapezoid weights (2π/n)·|x′(t_l)|.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    pub spec: CurveSpec,
    pub nodes: Vec<Vec2>,
    /// Outward unit normals (pointing away from the enclosed region).
    pub normals: Vec<Vec2>,
    /// |x′(t_l)|.
    pub speeds: Vec<f64>,
    /// Curve-length weights w_l = (2π/n)·|x′(t_l)|.
    pub weights: Vec<f64>,
    /// Second parameter derivatives x″(t_l) (needed by singular quadrature
    /// diagonal limits).
    pub second_derivs: Vec<Vec2>,
    /// Parameter step 2π/n.
    pub h: f64,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parameter of node l.
    pub fn param(&self, l: usize) -> f64 {
        self.h * l as f64
    }
}

/// Build the Nyström grid of a star curve with n equispaced parameter nodes.
pub fn make_star_curve(spec: CurveSpec, n: usize) -> Result<QuadratureGrid, GeometryError> {
    spec.validate()?;
    if n < 16 || n % 2 != 0 {
        return Err(GeometryError::BadNodeCount(n));
    }
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut speeds = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut second_derivs = Vec::with_capacity(n);
    for l in 0..n {
        let t = h * l as f64;
        let (d1, d2) = spec.derivatives(t);
        let sigma = d1.norm();
        nodes.push(spec.point(t));
        normals.push(Vec2::new(d1.y / sigma, -d1.x / sigma));
        speeds.push(sigma);
        weights.push(h * sigma);
        second_derivs.push(d2);
    }
    Ok(QuadratureGrid {
        spec,
        nodes,
        normals,
        speeds,
        weights,
        second_derivs,
        h,
    })
}

/// Golden-angle increment for the per-inclusion rotations.
pub const ROTATION_STEP: f64 = std::f64::consts::PI * 1.2360679774997896964091736687747; // π(3−√5)

/// Arrange m inclusions (m a power of 4) on a √m × √m grid with the given
/// spacing; inclusion s sits at (s mod √m, s div √m)·spacing and is rotated
/// by s·π(3−√5) mod 2π.
pub fn grid_layout(
    m: usize,
    spacing: f64,
    base: &CurveSpec,
    n: usize,
) -> Result<Vec<QuadratureGrid>, GeometryError> {
    if !is_power_of_four(m) {
        return Err(GeometryError::NotPowerOfFour(m));
    }
    base.validate()?;
    let max_radius = base.max_radius();
    if spacing <= 2.0 * max_radius {
        return Err(GeometryError::Overlap {
            spacing,
            max_radius,
        });
    }
    let side = (m as f64).sqrt().round() as usize;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut grids = Vec::with_capacity(m);
    for s in 0..m {
        let ix = s % side;
        let iy = s / side;
        let spec = CurveSpec {
            center: Vec2::new(ix as f64 * spacing, iy as f64 * spacing),
            rotation: (s as f64 * ROTATION_STEP).rem_euclid(two_pi),
            ..*base
        };
        grids.push(make_star_curve(spec, n)?);
    }
    Ok(grids)
}

pub fn is_power_of_four(m: usize) -> bool {
    m > 0 && m.is_power_of_two() && m.trailing_zeros() % 2 == 0
}

// ---------------------------------------------------------------------------
// Morton-ordered binary cell tree.
// ---------------------------------------------------------------------------

/// Spread the low 32 bits of v into the even bit positions.
fn part1by1(v: u64) -> u64 {
    let mut v = v & 0xffff_ffff;
    v = (v | (v << 16)) & 0x0000_ffff_0000_ffff;
    v = (v | (v << 8)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v << 2)) & 0x3333_3333_3333_3333;
    v = (v | (v << 1)) & 0x5555_5555_5555_5555;
    v
}

/// Morton (Z-order) code with x in the even bits and y in the odd bits.
pub fn morton_encode(x: u32, y: u32) -> u64 {
    part1by1(x as u64) | (part1by1(y as u64) << 1)
}

/// Axis-aligned block of grid sites: x ∈ [x0, x1), y ∈ [y0, y1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridBlock {
    pub x0: u32,
    pub x1: u32,
    pub y0: u32,
    pub y1: u32,
}

impl GridBlock {
    /// Blocks share an edge of positive length (4-neighborhood; corner
    /// contact does not count).
    pub fn edge_adjacent(&self, o: &GridBlock) -> bool {
        let x_overlap = self.x0 < o.x1 && o.x0 < self.x1;
        let y_overlap = self.y0 < o.y1 && o.y0 < self.y1;
        let x_touch = self.x1 == o.x0 || o.x1 == self.x0;
        let y_touch = self.y1 == o.y0 || o.y1 == self.y0;
        (x_touch && y_overlap) || (y_touch && x_overlap)
    }
}

/// One cell of the tree.
#[derive(Clone, Debug)]
pub struct Cell {
    /// Indices of the two children in the next level down (empty for leaves).
    pub children: Vec<usize>,
    /// Inclusion indices (into the layout) covered by this cell.
    pub inclusions: Vec<usize>,
    /// Same-level indices of edge-adjacent cells.
    pub near: Vec<usize>,
    /// Grid block covered by the cell.
    pub block: GridBlock,
    /// Center of a disc containing every quadrature node of the cell.
    pub disc_center: Vec2,
    pub disc_radius: f64,
}

/// Perfect binary tree over the inclusions. `levels[0]` holds the m leaves
/// in Morton order; each higher level merges pairs; the last level is the
/// root.
#[derive(Clone, Debug)]
pub struct CellTree {
    pub levels: Vec<Vec<Cell>>,
}

impl CellTree {
    pub fn n_leaves(&self) -> usize {
        self.levels[0].len()
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Build the cell tree for a grid layout produced by [`grid_layout`].
pub fn build_tree(grids: &[QuadratureGrid]) -> Result<CellTree, GeometryError> {
    let m = grids.len();
    if !is_power_of_four(m) {
        return Err(GeometryError::NotPowerOfFour(m));
    }
    let side = (m as f64).sqrt().round() as u32;
    // Inclusion s sits at grid coordinates (s mod side, s div side); leaves
    // are sorted by the Morton code of those coordinates.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&s| morton_encode(s as u32 % side, s as u32 / side));

    let mut leaves = Vec::with_capacity(m);
    for &s in &order {
        let ix = s as u32 % side;
        let iy = s as u32 / side;
        let (center, radius) = bounding_disc(std::slice::from_ref(&grids[s]));
        leaves.push(Cell {
            children: Vec::new(),
            inclusions: vec![s],
            near: Vec::new(),
            block: GridBlock {
                x0: ix,
                x1: ix + 1,
                y0: iy,
                y1: iy + 1,
            },
            disc_center: center,
            disc_radius: radius,
        });
    }

    let mut levels = vec![leaves];
    while levels.last().unwrap().len() > 1 {
        let prev = levels.last().unwrap();
        let mut next = Vec::with_capacity(prev.len() / 2);
        for pair in 0..prev.len() / 2 {
            let (a, b) = (&prev[2 * pair], &prev[2 * pair + 1]);
            let inclusions: Vec<usize> = a
                .inclusions
                .iter()
                .chain(&b.inclusions)
                .copied()
                .collect();
            let refs: Vec<&QuadratureGrid> = inclusions.iter().map(|&s| &grids[s]).collect();
            let (center, radius) = bounding_disc_refs(&refs);
            next.push(Cell {
                children: vec![2 * pair, 2 * pair + 1],
                inclusions,
                near: Vec::new(),
                block: GridBlock {
                    x0: a.block.x0.min(b.block.x0),
                    x1: a.block.x1.max(b.block.x1),
                    y0: a.block.y0.min(b.block.y0),
                    y1: a.block.y1.max(b.block.y1),
                },
                disc_center: center,
                disc_radius: radius,
            });
        }
        levels.push(next);
    }

    // Near lists: same-level cells with edge-adjacent blocks.
    for level in &mut levels {
        let blocks: Vec<GridBlock> = level.iter().map(|c| c.block).collect();
        for (i, cell) in level.iter_mut().enumerate() {
            cell.near = blocks
                .iter()
                .enumerate()
                .filter(|&(j, b)| j != i && blocks[i].edge_adjacent(b))
                .map(|(j, _)| j)
                .collect();
        }
    }

    Ok(CellTree { levels })
}

fn bounding_disc(grids: &[QuadratureGrid]) -> (Vec2, f64) {
    let refs: Vec<&QuadratureGrid> = grids.iter().collect();
    bounding_disc_refs(&refs)
}

/// Center of the node bounding box and max node distance from it.
fn bounding_disc_refs(grids: &[&QuadratureGrid]) -> (Vec2, f64) {
    let mut min = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for g in grids {
        for p in &g.nodes {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
    }
    let center = Vec2::new(0.5 * (min.x + max.x), 0.5 * (min.y + max.y));
    let mut radius: f64 = 0.0;
    for g in grids {
        for p in &g.nodes {
            radius = radius.max((*p - center).norm());
        }
    }
    (center, radius)
}

/// Dump all quadrature nodes as CSV with columns
/// `inclusion_id,node_id,x1,x2,n1,n2,weight`.
pub fn write_geometry_csv<W: Write>(grids: &[QuadratureGrid], out: &mut W) -> io::Result<()> {
    writeln!(out, "inclusion_id,node_id,x1,x2,n1,n2,weight")?;
    for (j, g) in grids.iter().enumerate() {
        for l in 0..g.len() {
            writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                j, l, g.nodes[l].x, g.nodes[l].y, g.normals[l].x, g.normals[l].y, g.weights[l]
            )?;
        }
    }
    Ok(())
}
