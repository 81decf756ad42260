//! Thin safe wrappers around the system LAPACK (provided by OpenBLAS).
//!
//! Only the three dense kernels the solver stack actually needs are exposed:
//! symmetric eigendecomposition, Cholesky factor/solve, and a 3x3 SVD for
//! rotation projections. Matrices are `ndarray` row-major; symmetry makes the
//! row/column-major mismatch harmless for `dsyevd`/`dpotrf`, and the SVD
//! wrapper accounts for the implied transpose.

use ndarray::{Array1, Array2};
use std::os::raw::c_int;
use thiserror::Error;

extern "C" {
    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        w: *mut f64,
        work: *mut f64,
        lwork: *const c_int,
        iwork: *mut c_int,
        liwork: *const c_int,
        info: *mut c_int,
    );
    fn dpotrf_(uplo: *const u8, n: *const c_int, a: *mut f64, lda: *const c_int, info: *mut c_int);
    fn dpotrs_(
        uplo: *const u8,
        n: *const c_int,
        nrhs: *const c_int,
        a: *const f64,
        lda: *const c_int,
        b: *mut f64,
        ldb: *const c_int,
        info: *mut c_int,
    );
    fn dgesvd_(
        jobu: *const u8,
        jobvt: *const u8,
        m: *const c_int,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        s: *mut f64,
        u: *mut f64,
        ldu: *const c_int,
        vt: *mut f64,
        ldvt: *const c_int,
        work: *mut f64,
        lwork: *const c_int,
        info: *mut c_int,
    );
    fn openblas_set_num_threads(n: c_int);
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("eigendecomposition failed (dsyevd info = {0})")]
    Eig(i32),
    #[error("matrix not positive definite (dpotrf info = {0})")]
    NotPositiveDefinite(i32),
    #[error("triangular solve failed (dpotrs info = {0})")]
    Solve(i32),
    #[error("svd failed (dgesvd info = {0})")]
    Svd(i32),
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
}

/// Cap the BLAS thread pool, e.g. when parallelizing at a coarser level.
pub fn set_blas_threads(n: usize) {
    unsafe { openblas_set_num_threads(n as c_int) };
}

/// Eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the *rows* of the returned matrix.
pub fn eigh(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>), LinalgError> {
    let (rows, cols) = a.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare(rows, cols));
    }
    let n = rows;
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let mut buf: Vec<f64> = a.iter().copied().collect();
    let mut w = vec![0.0; n];
    let ni = n as c_int;
    let mut info: c_int = 0;

    // Workspace query.
    let mut work_query = [0.0f64];
    let mut iwork_query = [0 as c_int];
    unsafe {
        dsyevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &(-1),
            iwork_query.as_mut_ptr(),
            &(-1),
            &mut info,
        );
    }
    let lwork = work_query[0] as c_int;
    let liwork = iwork_query[0];
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Eig(info));
    }
    // LAPACK wrote eigenvectors as columns of the column-major buffer, which
    // reads back as rows of the row-major array.
    let vecs = Array2::from_shape_vec((n, n), buf).expect("shape");
    Ok((Array1::from(w), vecs))
}

/// Cached Cholesky factor of a symmetric positive definite matrix.
pub struct CholeskyFactor {
    n: usize,
    // Factor in LAPACK layout; valid only together with uplo = 'L' as seen
    // by LAPACK through the shared buffer convention.
    buf: Vec<f64>,
}

impl CholeskyFactor {
    /// Factor `a` in place of a copy. Fails if not positive definite.
    pub fn new(a: &Array2<f64>) -> Result<Self, LinalgError> {
        let (rows, cols) = a.dim();
        if rows != cols {
            return Err(LinalgError::NotSquare(rows, cols));
        }
        let n = rows;
        let mut buf: Vec<f64> = a.iter().copied().collect();
        let ni = n as c_int;
        let mut info: c_int = 0;
        unsafe { dpotrf_(b"L".as_ptr(), &ni, buf.as_mut_ptr(), &ni, &mut info) };
        if info != 0 {
            return Err(LinalgError::NotPositiveDefinite(info));
        }
        Ok(Self { n, buf })
    }

    /// Solve `A z = rhs` in place.
    pub fn solve(&self, rhs: &mut [f64]) -> Result<(), LinalgError> {
        assert_eq!(rhs.len(), self.n, "rhs length mismatch");
        let ni = self.n as c_int;
        let one: c_int = 1;
        let mut info: c_int = 0;
        unsafe {
            dpotrs_(
                b"L".as_ptr(),
                &ni,
                &one,
                self.buf.as_ptr(),
                &ni,
                rhs.as_mut_ptr(),
                &ni,
                &mut info,
            );
        }
        if info != 0 {
            return Err(LinalgError::Solve(info));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// SVD of a 3x3 matrix (row-major). Returns `(u, s, vt)` with `a = u * diag(s) * vt`.
pub fn svd3(a: &[[f64; 3]; 3]) -> Result<([[f64; 3]; 3], [f64; 3], [[f64; 3]; 3]), LinalgError> {
    let mut buf = [0.0f64; 9];
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            buf[i * 3 + j] = *v;
        }
    }
    let n: c_int = 3;
    let mut s = [0.0f64; 3];
    let mut u_l = [0.0f64; 9];
    let mut vt_l = [0.0f64; 9];
    let mut work = [0.0f64; 64];
    let lwork: c_int = 64;
    let mut info: c_int = 0;
    unsafe {
        dgesvd_(
            b"A".as_ptr(),
            b"A".as_ptr(),
            &n,
            &n,
            buf.as_mut_ptr(),
            &n,
            s.as_mut_ptr(),
            u_l.as_mut_ptr(),
            &n,
            vt_l.as_mut_ptr(),
            &n,
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Svd(info));
    }
    // LAPACK factored the transpose (column-major view of a row-major buffer):
    // a^T = U_l S Vt_l, hence a = Vt_l^T S U_l^T. Reading the column-major
    // outputs as row-major transposes them, so `vt_l` read row-major is U of
    // `a` and `u_l` read row-major is V^T of `a`.
    let mut u = [[0.0f64; 3]; 3];
    let mut vt = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            u[i][j] = vt_l[i * 3 + j];
            vt[i][j] = u_l[i * 3 + j];
        }
    }
    Ok((u, s, vt))
}
