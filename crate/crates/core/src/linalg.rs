//! Dense complex linear algebra on column-major matrices.
//!
//! Everything here wraps the system OpenBLAS/LAPACK: matrix products, LU
//! factorization/solves/inversion, column-pivoted QR (the rank-revealing
//! workhorse of the skeletonization module), and triangular solves. Matrices
//! are stored column-major so they can be handed to Fortran routines without
//! copies.
//!
//! All BLAS calls are forced single-threaded (see [`set_blas_threads`]);
//! parallelism in this crate lives at the level of independent matrix blocks,
//! which keeps results bitwise reproducible regardless of thread count.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};
use thiserror::Error;

/// Errors from factorizations and solves.
#[derive(Debug, Error)]
pub enum LinalgError {
    /// LU factorization hit an exactly zero pivot; the matrix is singular.
    #[error("matrix is singular: zero pivot at column {pivot}")]
    Singular { pivot: usize },
    /// A LAPACK routine rejected its arguments or failed internally.
    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    /// Operand shapes are incompatible.
    #[error("shape mismatch in {op}: ({a_rows}x{a_cols}) vs ({b_rows}x{b_cols})")]
    Shape {
        op: &'static str,
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[link(name = "openblas")]
extern "C" {
    fn openblas_set_num_threads(n: i32);
    fn zgemm_(
        transa: *const u8,
        transb: *const u8,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        alpha: *const Complex64,
        a: *const Complex64,
        lda: *const i32,
        b: *const Complex64,
        ldb: *const i32,
        beta: *const Complex64,
        c: *mut Complex64,
        ldc: *const i32,
    );
    fn ztrsm_(
        side: *const u8,
        uplo: *const u8,
        transa: *const u8,
        diag: *const u8,
        m: *const i32,
        n: *const i32,
        alpha: *const Complex64,
        a: *const Complex64,
        lda: *const i32,
        b: *mut Complex64,
        ldb: *const i32,
    );
    fn zgetrf_(
        m: *const i32,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        ipiv: *mut i32,
        info: *mut i32,
    );
    fn zgetrs_(
        trans: *const u8,
        n: *const i32,
        nrhs: *const i32,
        a: *const Complex64,
        lda: *const i32,
        ipiv: *const i32,
        b: *mut Complex64,
        ldb: *const i32,
        info: *mut i32,
    );
    fn zgetri_(
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        ipiv: *const i32,
        work: *mut Complex64,
        lwork: *const i32,
        info: *mut i32,
    );
    fn zgeqp3_(
        m: *const i32,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        jpvt: *mut i32,
        tau: *mut Complex64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );
    fn zunmqr_(
        side: *const u8,
        trans: *const u8,
        m: *const i32,
        n: *const i32,
        k: *const i32,
        a: *const Complex64,
        lda: *const i32,
        tau: *const Complex64,
        c: *mut Complex64,
        ldc: *const i32,
        work: *mut Complex64,
        lwork: *const i32,
        info: *mut i32,
    );
}

/// Pin the number of OpenBLAS threads (normally 1, set once at startup).
///
/// Single-threaded BLAS keeps every factorization bitwise deterministic;
/// higher-level code parallelizes over independent blocks instead.
pub fn set_blas_threads(n: usize) {
    unsafe { openblas_set_num_threads(n.max(1) as i32) };
}

fn dim(n: usize) -> i32 {
    i32::try_from(n).expect("matrix dimension exceeds i32")
}

/// Column-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat {
    nrows: usize,
    ncols: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for CMat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMat {}x{}", self.nrows, self.ncols)?;
        let show_r = self.nrows.min(8);
        let show_c = self.ncols.min(8);
        for i in 0..show_r {
            for j in 0..show_c {
                let v = self[(i, j)];
                write!(f, " {:>+10.3e}{:>+10.3e}i", v.re, v.im)?;
            }
            writeln!(f, "{}", if show_c < self.ncols { " ..." } else { "" })?;
        }
        if show_r < self.nrows {
            writeln!(f, " ...")?;
        }
        Ok(())
    }
}

impl CMat {
    /// Zero matrix of the given shape.
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CMat {
            nrows,
            ncols,
            data: vec![ZERO; nrows * ncols],
        }
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Build entry-by-entry from `f(row, col)`.
    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                data.push(f(i, j));
            }
        }
        CMat { nrows, ncols, data }
    }

    /// Wrap an existing column-major buffer.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "buffer length mismatch");
        CMat { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_empty(&self) -> bool {
        self.nrows == 0 || self.ncols == 0
    }

    /// Raw column-major storage.
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Column `j` as a contiguous slice.
    pub fn col(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    /// Plain (non-conjugating) transpose.
    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn conj_transpose(&self) -> CMat {
        CMat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    /// Stack matrices vertically (all must share a column count).
    pub fn vstack(parts: &[&CMat]) -> CMat {
        let ncols = parts.first().map_or(0, |p| p.ncols);
        assert!(parts.iter().all(|p| p.ncols == ncols), "vstack column mismatch");
        let nrows: usize = parts.iter().map(|p| p.nrows).sum();
        let mut out = CMat::zeros(nrows, ncols);
        for j in 0..ncols {
            let mut at = 0;
            for p in parts {
                out.col_mut(j)[at..at + p.nrows].copy_from_slice(p.col(j));
                at += p.nrows;
            }
        }
        out
    }

    /// Stack matrices horizontally (all must share a row count).
    pub fn hstack(parts: &[&CMat]) -> CMat {
        let nrows = parts.first().map_or(0, |p| p.nrows);
        assert!(parts.iter().all(|p| p.nrows == nrows), "hstack row mismatch");
        let ncols: usize = parts.iter().map(|p| p.ncols).sum();
        let mut data = Vec::with_capacity(nrows * ncols);
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        CMat { nrows, ncols, data }
    }

    /// Rectangular sub-matrix picked by explicit row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CMat {
        CMat::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    /// Contiguous block `[r0..r1) x [c0..c1)`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> CMat {
        assert!(r0 <= r1 && r1 <= self.nrows && c0 <= c1 && c1 <= self.ncols);
        let mut out = CMat::zeros(r1 - r0, c1 - c0);
        for j in c0..c1 {
            out.col_mut(j - c0)
                .copy_from_slice(&self.col(j)[r0..r1]);
        }
        out
    }

    /// Write `src` into the block whose top-left corner is `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, src: &CMat) {
        assert!(r0 + src.nrows <= self.nrows && c0 + src.ncols <= self.ncols);
        for j in 0..src.ncols {
            let col = src.col(j);
            self.col_mut(c0 + j)[r0..r0 + src.nrows].copy_from_slice(col);
        }
    }

    /// In-place scalar multiply.
    pub fn scale(&mut self, s: Complex64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// Element-wise sum `self + other`.
    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data,
        }
    }

    /// Element-wise difference `self - other`.
    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMat {
            nrows: self.nrows,
            ncols: self.ncols,
            data,
        }
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Induced 1-norm (max absolute column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.ncols)
            .map(|j| self.col(j).iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry magnitude.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

/// Operand transposition for [`gemm_into`].
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Op {
    /// Use the operand as stored.
    None,
    /// Use the plain transpose.
    Trans,
    /// Use the conjugate transpose.
    ConjTrans,
}

impl Op {
    fn flag(self) -> &'static [u8; 1] {
        match self {
            Op::None => b"N",
            Op::Trans => b"T",
            Op::ConjTrans => b"C",
        }
    }

    fn dims(self, m: &CMat) -> (usize, usize) {
        match self {
            Op::None => (m.nrows, m.ncols),
            _ => (m.ncols, m.nrows),
        }
    }
}

/// `c = alpha * op_a(a) * op_b(b) + beta * c`.
pub fn gemm_into(
    alpha: Complex64,
    a: &CMat,
    op_a: Op,
    b: &CMat,
    op_b: Op,
    beta: Complex64,
    c: &mut CMat,
) {
    let (m, ka) = op_a.dims(a);
    let (kb, n) = op_b.dims(b);
    assert_eq!(ka, kb, "gemm inner dimension mismatch");
    assert_eq!((c.nrows, c.ncols), (m, n), "gemm output shape mismatch");
    if m == 0 || n == 0 {
        return;
    }
    if ka == 0 {
        c.scale(beta);
        return;
    }
    let (mm, nn, kk) = (dim(m), dim(n), dim(ka));
    let lda = dim(a.nrows.max(1));
    let ldb = dim(b.nrows.max(1));
    let ldc = dim(c.nrows.max(1));
    unsafe {
        zgemm_(
            op_a.flag().as_ptr(),
            op_b.flag().as_ptr(),
            &mm,
            &nn,
            &kk,
            &alpha,
            a.data.as_ptr(),
            &lda,
            b.data.as_ptr(),
            &ldb,
            &beta,
            c.data.as_mut_ptr(),
            &ldc,
        );
    }
}

/// Plain product `a * b`.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let mut c = CMat::zeros(a.nrows, b.ncols);
    gemm_into(ONE, a, Op::None, b, Op::None, ZERO, &mut c);
    c
}

/// LU factorization with partial pivoting (owns the factored matrix).
#[derive(Debug)]
pub struct LuFactor {
    lu: CMat,
    ipiv: Vec<i32>,
    norm_one: f64,
}

/// Factor a square matrix; consumes it (the factorization reuses the buffer).
pub fn lu_factor(mut a: CMat) -> Result<LuFactor, LinalgError> {
    assert_eq!(a.nrows, a.ncols, "lu_factor requires a square matrix");
    let n = a.nrows;
    let norm_one = a.norm_one();
    let mut ipiv = vec![0i32; n.max(1)];
    if n > 0 {
        let nn = dim(n);
        let mut info = 0i32;
        unsafe {
            zgetrf_(&nn, &nn, a.data.as_mut_ptr(), &nn, ipiv.as_mut_ptr(), &mut info);
        }
        if info > 0 {
            return Err(LinalgError::Singular {
                pivot: info as usize - 1,
            });
        }
        if info < 0 {
            return Err(LinalgError::Lapack {
                routine: "zgetrf",
                info,
            });
        }
    }
    Ok(LuFactor {
        lu: a,
        ipiv,
        norm_one,
    })
}

impl LuFactor {
    pub fn n(&self) -> usize {
        self.lu.nrows
    }

    /// Solve `A x = b` in place; `b` holds the solution on return.
    pub fn solve_in_place(&self, b: &mut CMat) -> Result<(), LinalgError> {
        if b.nrows != self.n() {
            return Err(LinalgError::Shape {
                op: "lu solve",
                a_rows: self.n(),
                a_cols: self.n(),
                b_rows: b.nrows,
                b_cols: b.ncols,
            });
        }
        if self.n() == 0 || b.ncols == 0 {
            return Ok(());
        }
        let n = dim(self.n());
        let nrhs = dim(b.ncols);
        let ldb = dim(b.nrows);
        let mut info = 0i32;
        unsafe {
            zgetrs_(
                b"N".as_ptr(),
                &n,
                &nrhs,
                self.lu.data.as_ptr(),
                &n,
                self.ipiv.as_ptr(),
                b.data.as_mut_ptr(),
                &ldb,
                &mut info,
            );
        }
        if info != 0 {
            return Err(LinalgError::Lapack {
                routine: "zgetrs",
                info,
            });
        }
        Ok(())
    }

    /// Solve `A x = b`, returning the solution.
    pub fn solve(&self, b: &CMat) -> Result<CMat, LinalgError> {
        let mut x = b.clone();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Explicit inverse `A^{-1}`.
    pub fn inverse(&self) -> Result<CMat, LinalgError> {
        let n = self.n();
        if n == 0 {
            return Ok(CMat::zeros(0, 0));
        }
        let mut inv = self.lu.clone();
        let nn = dim(n);
        let mut info = 0i32;
        // Workspace query.
        let mut wq = [ZERO];
        let lwork_query = -1i32;
        unsafe {
            zgetri_(
                &nn,
                inv.data.as_mut_ptr(),
                &nn,
                self.ipiv.as_ptr(),
                wq.as_mut_ptr(),
                &lwork_query,
                &mut info,
            );
        }
        let lwork = wq[0].re as i32;
        let mut work = vec![ZERO; lwork.max(1) as usize];
        unsafe {
            zgetri_(
                &nn,
                inv.data.as_mut_ptr(),
                &nn,
                self.ipiv.as_ptr(),
                work.as_mut_ptr(),
                &lwork,
                &mut info,
            );
        }
        if info != 0 {
            return Err(LinalgError::Lapack {
                routine: "zgetri",
                info,
            });
        }
        Ok(inv)
    }

    /// Estimate of the 1-norm condition number, `‖A‖₁ · ‖A⁻¹‖₁`.
    pub fn cond_one(&self) -> Result<f64, LinalgError> {
        if self.n() == 0 {
            return Ok(1.0);
        }
        let inv = self.inverse()?;
        Ok(self.norm_one * inv.norm_one())
    }
}

/// Column-pivoted QR factorization `A P = Q R`.
pub struct PivotedQr {
    qr: CMat,
    tau: Vec<Complex64>,
    /// Zero-based pivot order: column `pivots[j]` of `A` became column `j` of `A P`.
    pivots: Vec<usize>,
}

/// Column-pivoted QR via LAPACK `zgeqp3`; consumes the input matrix.
pub fn pivoted_qr(mut a: CMat) -> Result<PivotedQr, LinalgError> {
    let (m, n) = (a.nrows, a.ncols);
    let k = m.min(n);
    let mut tau = vec![ZERO; k.max(1)];
    let mut jpvt = vec![0i32; n.max(1)];
    if m > 0 && n > 0 {
        let (mm, nn) = (dim(m), dim(n));
        let mut rwork = vec![0f64; 2 * n];
        let mut info = 0i32;
        let mut wq = [ZERO];
        let lwork_query = -1i32;
        unsafe {
            zgeqp3_(
                &mm,
                &nn,
                a.data.as_mut_ptr(),
                &mm,
                jpvt.as_mut_ptr(),
                tau.as_mut_ptr(),
                wq.as_mut_ptr(),
                &lwork_query,
                rwork.as_mut_ptr(),
                &mut info,
            );
        }
        let lwork = wq[0].re as i32;
        let mut work = vec![ZERO; lwork.max(1) as usize];
        unsafe {
            zgeqp3_(
                &mm,
                &nn,
                a.data.as_mut_ptr(),
                &mm,
                jpvt.as_mut_ptr(),
                tau.as_mut_ptr(),
                work.as_mut_ptr(),
                &lwork,
                rwork.as_mut_ptr(),
                &mut info,
            );
        }
        if info != 0 {
            return Err(LinalgError::Lapack {
                routine: "zgeqp3",
                info,
            });
        }
    }
    let pivots = jpvt[..n].iter().map(|&p| (p as usize).saturating_sub(1)).collect();
    Ok(PivotedQr { qr: a, tau, pivots })
}

impl PivotedQr {
    pub fn nrows(&self) -> usize {
        self.qr.nrows
    }

    pub fn ncols(&self) -> usize {
        self.qr.ncols
    }

    /// Zero-based pivot order.
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Magnitudes of the diagonal of `R` (non-increasing by construction).
    pub fn r_diag_abs(&self) -> Vec<f64> {
        (0..self.qr.nrows.min(self.qr.ncols))
            .map(|i| self.qr[(i, i)].norm())
            .collect()
    }

    /// Numerical rank: the number of leading diagonal entries of `R` that
    /// stay strictly above `tol` relative to the first one. An all-zero
    /// matrix has rank 0.
    pub fn rank_with_rel_tol(&self, tol: f64) -> usize {
        let d = self.r_diag_abs();
        if d.is_empty() || d[0] == 0.0 {
            return 0;
        }
        let cut = tol * d[0];
        d.iter().position(|&x| x <= cut).unwrap_or(d.len())
    }

    /// Interpolation coefficients `T = R₁₁⁻¹ R₁₂` of shape `k x (n-k)`, so
    /// that `(A P)(:, k..n) ≈ (A P)(:, 0..k) · T` up to the truncation error.
    pub fn interp_coeffs(&self, k: usize) -> CMat {
        let n = self.qr.ncols;
        assert!(k <= n && k <= self.qr.nrows);
        let mut t = self.qr.block(0, k, k, n);
        if k == 0 || t.ncols == 0 {
            return t;
        }
        let mm = dim(k);
        let nn = dim(t.ncols);
        let lda = dim(self.qr.nrows);
        let ldb = dim(k);
        unsafe {
            ztrsm_(
                b"L".as_ptr(),
                b"U".as_ptr(),
                b"N".as_ptr(),
                b"N".as_ptr(),
                &mm,
                &nn,
                &ONE,
                self.qr.data.as_ptr(),
                &lda,
                t.data.as_mut_ptr(),
                &ldb,
            );
        }
        t
    }

    /// Apply `Qᴴ` to `b` (from the left).
    pub fn q_conj_t_times(&self, b: &CMat) -> Result<CMat, LinalgError> {
        let m = self.qr.nrows;
        if b.nrows != m {
            return Err(LinalgError::Shape {
                op: "q_conj_t_times",
                a_rows: m,
                a_cols: self.qr.ncols,
                b_rows: b.nrows,
                b_cols: b.ncols,
            });
        }
        let mut c = b.clone();
        let k = self.qr.nrows.min(self.qr.ncols);
        if m == 0 || b.ncols == 0 || k == 0 {
            return Ok(c);
        }
        let (mm, nn, kk) = (dim(m), dim(b.ncols), dim(k));
        let lda = dim(m);
        let ldc = dim(m);
        let mut info = 0i32;
        let mut wq = [ZERO];
        let lwork_query = -1i32;
        unsafe {
            zunmqr_(
                b"L".as_ptr(),
                b"C".as_ptr(),
                &mm,
                &nn,
                &kk,
                self.qr.data.as_ptr(),
                &lda,
                self.tau.as_ptr(),
                c.data.as_mut_ptr(),
                &ldc,
                wq.as_mut_ptr(),
                &lwork_query,
                &mut info,
            );
        }
        let lwork = wq[0].re as i32;
        let mut work = vec![ZERO; lwork.max(1) as usize];
        unsafe {
            zunmqr_(
                b"L".as_ptr(),
                b"C".as_ptr(),
                &mm,
                &nn,
                &kk,
                self.qr.data.as_ptr(),
                &lda,
                self.tau.as_ptr(),
                c.data.as_mut_ptr(),
                &ldc,
                work.as_mut_ptr(),
                &lwork,
                &mut info,
            );
        }
        if info != 0 {
            return Err(LinalgError::Lapack {
                routine: "zunmqr",
                info,
            });
        }
        Ok(c)
    }

    /// Basic least-squares solution of `A x = b` truncated to the leading
    /// `rank` pivots: coefficients for the discarded pivot columns are zero.
    /// For a full-rank tall system this is the ordinary least-squares
    /// solution.
    pub fn solve_basic(&self, b: &CMat, rank: usize) -> Result<CMat, LinalgError> {
        let n = self.qr.ncols;
        let rank = rank.min(self.qr.nrows.min(n));
        let mut x = CMat::zeros(n, b.ncols);
        if rank == 0 || b.ncols == 0 {
            return Ok(x);
        }
        let qtb = self.q_conj_t_times(b)?;
        let mut z = qtb.block(0, rank, 0, qtb.ncols);
        let mm = dim(rank);
        let nn = dim(z.ncols);
        let lda = dim(self.qr.nrows);
        let ldb = dim(rank);
        unsafe {
            ztrsm_(
                b"L".as_ptr(),
                b"U".as_ptr(),
                b"N".as_ptr(),
                b"N".as_ptr(),
                &mm,
                &nn,
                &ONE,
                self.qr.data.as_ptr(),
                &lda,
                z.data.as_mut_ptr(),
                &ldb,
            );
        }
        for j in 0..b.ncols {
            for i in 0..rank {
                x[(self.pivots[i], j)] = z[(i, j)];
            }
        }
        Ok(x)
    }
}
