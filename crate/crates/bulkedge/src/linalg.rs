//! Symmetric/Hermitian eigensolvers: LAPACK divide and conquer for dense
//! matrices, and the band drivers for eigenvalues of narrow-band ones.

use lapack::{dsbev, dsyevd, zhbev, zheevd};
use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Column-major copy of a square matrix.
fn column_major<T: Copy>(a: &Array2<T>) -> Vec<T> {
    a.t().iter().copied().collect()
}

fn from_column_major<T: Copy>(n: usize, data: Vec<T>) -> Array2<T> {
    Array2::from_shape_vec((n, n).f(), data)
        .expect("square buffer")
        .as_standard_layout()
        .into_owned()
}

fn run_dsyevd(jobz: u8, n: usize, a: &mut [f64], w: &mut [f64]) -> Result<()> {
    let ni = n as i32;
    let (lwork, liwork) = if jobz == b'V' {
        (1 + 6 * n + 2 * n * n, 3 + 5 * n)
    } else {
        (2 * n + 1, 1)
    };
    let mut work = vec![0.0; lwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    let mut info = 0;
    unsafe {
        dsyevd(
            jobz,
            b'L',
            ni,
            a,
            ni.max(1),
            w,
            &mut work,
            lwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevd", info });
    }
    Ok(())
}

fn run_zheevd(jobz: u8, n: usize, a: &mut [C64], w: &mut [f64]) -> Result<()> {
    let ni = n as i32;
    let (lwork, lrwork, liwork) = if jobz == b'V' {
        (2 * n + n * n, 1 + 5 * n + 2 * n * n, 3 + 5 * n)
    } else {
        (n + 1, n.max(1), 1)
    };
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1)];
    let mut rwork = vec![0.0; lrwork.max(1)];
    let mut iwork = vec![0i32; liwork.max(1)];
    let mut info = 0;
    unsafe {
        zheevd(
            jobz,
            b'L',
            ni,
            a,
            ni.max(1),
            w,
            &mut work,
            lwork as i32,
            &mut rwork,
            lrwork as i32,
            &mut iwork,
            liwork as i32,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zheevd", info });
    }
    Ok(())
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a real
/// symmetric matrix. Only the lower triangle is read.
pub fn symmetric_eigh(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    let mut buf = column_major(a);
    let mut w = vec![0.0; n];
    if n > 0 {
        run_dsyevd(b'V', n, &mut buf, &mut w)?;
    }
    Ok((w, from_column_major(n, buf)))
}

/// Largest |i − j| over nonzero entries of the lower triangle.
pub fn lower_bandwidth<T: Copy + PartialEq + Default>(a: &Array2<T>) -> usize {
    let zero = T::default();
    let mut kd = 0;
    for ((i, j), x) in a.indexed_iter() {
        if i > j + kd && *x != zero {
            kd = i - j;
        }
    }
    kd
}

/// Band storage pays off once the band is well inside the matrix.
fn use_band(n: usize, kd: usize) -> bool {
    n >= 64 && 4 * kd < n
}

/// LAPACK lower band storage: ab[i − j, j] = a[i, j], column-major with
/// leading dimension kd + 1.
fn lower_band<T: Copy + Default>(a: &Array2<T>, kd: usize) -> Vec<T> {
    let n = a.nrows();
    let ld = kd + 1;
    let mut ab = vec![T::default(); ld * n];
    for j in 0..n {
        for i in j..n.min(j + kd + 1) {
            ab[(i - j) + j * ld] = a[[i, j]];
        }
    }
    ab
}

fn banded_symmetric_eigenvalues(a: &Array2<f64>, kd: usize) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut ab = lower_band(a, kd);
    let mut w = vec![0.0; n];
    let mut z = [0.0];
    let mut work = vec![0.0; (3 * n).max(1)];
    let mut info = 0;
    unsafe {
        dsbev(b'N', b'L', n as i32, kd as i32, &mut ab, kd as i32 + 1, &mut w, &mut z, 1, &mut work, &mut info);
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsbev", info });
    }
    Ok(w)
}

fn banded_hermitian_eigenvalues(a: &Array2<C64>, kd: usize) -> Result<Vec<f64>> {
    let n = a.nrows();
    let mut ab = lower_band(a, kd);
    let mut w = vec![0.0; n];
    let mut z = [C64::new(0.0, 0.0)];
    let mut work = vec![C64::new(0.0, 0.0); n.max(1)];
    let mut rwork = vec![0.0; (3 * n).max(1)];
    let mut info = 0;
    unsafe {
        zhbev(
            b'N',
            b'L',
            n as i32,
            kd as i32,
            &mut ab,
            kd as i32 + 1,
            &mut w,
            &mut z,
            1,
            &mut work,
            &mut rwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "zhbev", info });
    }
    Ok(w)
}

/// Eigenvalues (ascending). Narrow-band matrices go through the band
/// driver, everything else through `dsyevd`.
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let kd = lower_bandwidth(a);
    if use_band(n, kd) {
        return banded_symmetric_eigenvalues(a, kd);
    }
    let mut buf = column_major(a);
    let mut w = vec![0.0; n];
    if n > 0 {
        run_dsyevd(b'N', n, &mut buf, &mut w)?;
    }
    Ok(w)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// Hermitian matrix. Only the lower triangle is read.
pub fn hermitian_eigh(a: &Array2<C64>) -> Result<(Vec<f64>, Array2<C64>)> {
    let n = a.nrows();
    let mut buf = column_major(a);
    let mut w = vec![0.0; n];
    if n > 0 {
        run_zheevd(b'V', n, &mut buf, &mut w)?;
    }
    Ok((w, from_column_major(n, buf)))
}

pub fn hermitian_eigenvalues(a: &Array2<C64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    let kd = lower_bandwidth(a);
    if use_band(n, kd) {
        return banded_hermitian_eigenvalues(a, kd);
    }
    let mut buf = column_major(a);
    let mut w = vec![0.0; n];
    if n > 0 {
        run_zheevd(b'N', n, &mut buf, &mut w)?;
    }
    Ok(w)
}

/// max |a_ij − conj(a_ji)|
pub fn hermiticity_residual(a: &Array2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// Spectral norm of a small complex matrix.
pub fn operator_norm(a: &Array2<C64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    let gram = a.t().mapv(|z| z.conj()).dot(a);
    let w = hermitian_eigenvalues(&gram)?;
    Ok(w.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}
