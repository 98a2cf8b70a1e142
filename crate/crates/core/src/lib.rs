//! Boundary-integral solver for two-dimensional Helmholtz transmission
//! scattering by many disjoint smooth inclusions.
//!
//! An incident time-harmonic wave hits a collection of penetrable star-shaped
//! inclusions; each inclusion has its own interior wavenumber while the
//! exterior medium is homogeneous. The scattering problem is recast as a
//! system of boundary integral equations over the inclusion boundaries,
//! discretized with a spectrally accurate Nyström method, and solved either
//!
//! * **densely** — assemble the full block system and factor it with LU
//!   ([`dense`]), or
//! * **hierarchically** — compress inter-inclusion interactions with
//!   proxy-surface interpolative decompositions on a Morton-ordered binary
//!   cell tree and solve the resulting skeleton system ([`skeleton`],
//!   [`fds`]).
//!
//! Three integral formulations are supported (two PMCHWT variants and a
//! Burton–Miller variant), selected by [`formulations::Formulation`].
//!
//! Module layout:
//!
//! * [`linalg`] — dense complex matrices plus LAPACK-backed factorizations.
//! * [`specfun`] — Bessel/Hankel functions J₀, J₁, Y₀, Y₁, H⁽¹⁾.
//! * [`geometry`] — boundary curves, grid arrangements, quadrature nodes,
//!   and the binary cell tree with near-field lists.
//! * [`kernels`] — Helmholtz layer-potential kernels and their singular
//!   quadrature rules.
//! * [`formulations`] — block assembly rules, incident fields, right-hand
//!   sides.
//! * [`dense`] — reference dense assembly/solve path.
//! * [`oracle`] — analytic series solution for a single circular inclusion.
//! * [`skeleton`] — per-cell interpolative decomposition with proxy surfaces.
//! * [`fds`] — the multi-level fast direct solver built on skeletonization.
//! * [`fieldeval`] — evaluation of the scattered field away from boundaries.
//! * [`report`] — CSV/JSON result writers shared by the benchmark CLI.

pub mod dense;
pub mod fds;
pub mod fieldeval;
pub mod formulations;
pub mod geometry;
pub mod kernels;
pub mod oracle;
pub mod skeleton;
pub mod linalg;
pub mod specfun;
