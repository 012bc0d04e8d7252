//! Thin safe wrappers over the LAPACK routines used for Hermitian
//! eigenproblems. Matrices are column-major.

use lapack_sys::__BindgenComplex as RawComplex;
use num_complex::Complex64;
use std::os::raw::{c_char, c_int};

use crate::Error;

type C64 = Complex64;

fn raw(p: *mut C64) -> *mut RawComplex<f64> {
    // `Complex<f64>` is `#[repr(C)] { re, im }`, identical to the bindgen type.
    p.cast()
}

fn check(routine: &'static str, info: c_int) -> Result<(), Error> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Lapack { routine, info })
    }
}

fn dim(n: usize) -> c_int {
    c_int::try_from(n).expect("matrix dimension exceeds LAPACK integer range")
}

const LOWER: c_char = b'L' as c_char;

/// All eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
/// `a` is overwritten with the eigenvectors.
pub(crate) fn heevd(a: &mut [C64], n: usize) -> Result<Vec<f64>, Error> {
    assert_eq!(a.len(), n * n);
    let ni = dim(n);
    let jobz = b'V' as c_char;
    let mut w = vec![0.0; n];
    let mut info = 0;
    let mut work = [C64::default()];
    let mut rwork = [0.0f64];
    let mut iwork = [0 as c_int];
    unsafe {
        lapack_sys::zheevd_(
            &jobz, &LOWER, &ni, raw(a.as_mut_ptr()), &ni, w.as_mut_ptr(),
            raw(work.as_mut_ptr()), &-1, rwork.as_mut_ptr(), &-1, iwork.as_mut_ptr(), &-1,
            &mut info,
        );
    }
    check("zheevd", info)?;
    let (lwork, lrwork, liwork) = (work[0].re as c_int, rwork[0] as c_int, iwork[0]);
    let mut work = vec![C64::default(); lwork.max(1) as usize];
    let mut rwork = vec![0.0; lrwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &jobz, &LOWER, &ni, raw(a.as_mut_ptr()), &ni, w.as_mut_ptr(),
            raw(work.as_mut_ptr()), &lwork, rwork.as_mut_ptr(), &lrwork, iwork.as_mut_ptr(),
            &liwork, &mut info,
        );
    }
    check("zheevd", info)?;
    Ok(w)
}

/// Householder reduction `A = Q·T·Qᴴ` to real symmetric tridiagonal form.
pub(crate) struct Tridiagonal {
    n: usize,
    reflectors: Vec<C64>,
    tau: Vec<C64>,
    pub(crate) diag: Vec<f64>,
    pub(crate) off: Vec<f64>,
}

pub(crate) fn hetrd(mut a: Vec<C64>, n: usize) -> Result<Tridiagonal, Error> {
    assert_eq!(a.len(), n * n);
    let ni = dim(n);
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.max(1)];
    let mut tau = vec![C64::default(); n.max(1)];
    let mut info = 0;
    let mut query = [C64::default()];
    unsafe {
        lapack_sys::zhetrd_(
            &LOWER, &ni, raw(a.as_mut_ptr()), &ni, diag.as_mut_ptr(), off.as_mut_ptr(),
            raw(tau.as_mut_ptr()), raw(query.as_mut_ptr()), &-1, &mut info,
        );
    }
    check("zhetrd", info)?;
    let lwork = (query[0].re as c_int).max(1);
    let mut work = vec![C64::default(); lwork as usize];
    unsafe {
        lapack_sys::zhetrd_(
            &LOWER, &ni, raw(a.as_mut_ptr()), &ni, diag.as_mut_ptr(), off.as_mut_ptr(),
            raw(tau.as_mut_ptr()), raw(work.as_mut_ptr()), &lwork, &mut info,
        );
    }
    check("zhetrd", info)?;
    Ok(Tridiagonal { n, reflectors: a, tau, diag, off })
}

impl Tridiagonal {
    /// All eigenvalues, ascending.
    pub(crate) fn eigenvalues(&self) -> Result<Vec<f64>, Error> {
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        let mut info = 0;
        unsafe { lapack_sys::dsterf_(&dim(self.n), d.as_mut_ptr(), e.as_mut_ptr(), &mut info) };
        check("dsterf", info)?;
        Ok(d)
    }

    /// Eigenpairs with zero-based ascending indices `lo..=hi`, eigenvectors
    /// already transformed back to the original basis (`n × m`, column-major).
    pub(crate) fn eigenpairs(&self, lo: usize, hi: usize) -> Result<(Vec<f64>, Vec<C64>), Error> {
        assert!(lo <= hi && hi < self.n);
        let n = self.n;
        let ni = dim(n);
        let count = hi - lo + 1;
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        let (il, iu) = (dim(lo + 1), dim(hi + 1));
        let jobz = b'V' as c_char;
        let range = b'I' as c_char;
        let mut m: c_int = 0;
        let mut w = vec![0.0; n];
        let mut z = vec![C64::default(); n * count];
        let nzc = dim(count);
        let mut isuppz = vec![0 as c_int; 2 * count];
        let mut tryrac: c_int = 1;
        let mut info = 0;
        let mut work_q = [0.0f64];
        let mut iwork_q = [0 as c_int];
        unsafe {
            lapack_sys::zstemr_(
                &jobz, &range, &ni, d.as_mut_ptr(), e.as_mut_ptr(), &0.0, &0.0, &il, &iu, &mut m,
                w.as_mut_ptr(), raw(z.as_mut_ptr()), &ni, &nzc, isuppz.as_mut_ptr(), &mut tryrac,
                work_q.as_mut_ptr(), &-1, iwork_q.as_mut_ptr(), &-1, &mut info,
            );
        }
        check("zstemr", info)?;
        let (lwork, liwork) = (work_q[0] as c_int, iwork_q[0]);
        let mut work = vec![0.0; lwork.max(1) as usize];
        let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
        unsafe {
            lapack_sys::zstemr_(
                &jobz, &range, &ni, d.as_mut_ptr(), e.as_mut_ptr(), &0.0, &0.0, &il, &iu, &mut m,
                w.as_mut_ptr(), raw(z.as_mut_ptr()), &ni, &nzc, isuppz.as_mut_ptr(), &mut tryrac,
                work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info,
            );
        }
        check("zstemr", info)?;
        if m as usize != count {
            return Err(Error::Lapack { routine: "zstemr", info: -1000 - m });
        }
        w.truncate(count);
        self.back_transform(&mut z, count)?;
        Ok((w, z))
    }

    /// `Z ← Q·Z` for an `n × m` block.
    fn back_transform(&self, z: &mut [C64], m: usize) -> Result<(), Error> {
        let ni = dim(self.n);
        let mi = dim(m);
        let side = b'L' as c_char;
        let trans = b'N' as c_char;
        let mut info = 0;
        let mut query = [C64::default()];
        let a = self.reflectors.as_ptr() as *const RawComplex<f64>;
        let tau = self.tau.as_ptr() as *const RawComplex<f64>;
        unsafe {
            lapack_sys::zunmtr_(
                &side, &LOWER, &trans, &ni, &mi, a, &ni, tau, raw(z.as_mut_ptr()), &ni,
                raw(query.as_mut_ptr()), &-1, &mut info,
            );
        }
        check("zunmtr", info)?;
        let lwork = (query[0].re as c_int).max(1);
        let mut work = vec![C64::default(); lwork as usize];
        unsafe {
            lapack_sys::zunmtr_(
                &side, &LOWER, &trans, &ni, &mi, a, &ni, tau, raw(z.as_mut_ptr()), &ni,
                raw(work.as_mut_ptr()), &lwork, &mut info,
            );
        }
        check("zunmtr", info)
    }
}

/// Inverse of a Hermitian matrix via Bunch–Kaufman factorization. Only the
/// lower triangle of the result is meaningful; the upper one is filled by
/// conjugate symmetry on return.
pub(crate) fn inverse(a: &mut [C64], n: usize) -> Result<(), Error> {
    assert_eq!(a.len(), n * n);
    let ni = dim(n);
    let mut ipiv = vec![0 as c_int; n];
    let mut info = 0;
    let mut query = [C64::default()];
    unsafe {
        lapack_sys::zhetrf_(
            &LOWER, &ni, raw(a.as_mut_ptr()), &ni, ipiv.as_mut_ptr(), raw(query.as_mut_ptr()),
            &-1, &mut info,
        );
    }
    check("zhetrf", info)?;
    let lwork = (query[0].re as c_int).max(1);
    let mut work = vec![C64::default(); (lwork as usize).max(n)];
    unsafe {
        lapack_sys::zhetrf_(
            &LOWER, &ni, raw(a.as_mut_ptr()), &ni, ipiv.as_mut_ptr(), raw(work.as_mut_ptr()),
            &lwork, &mut info,
        );
    }
    check("zhetrf", info)?;
    unsafe {
        lapack_sys::zhetri_(
            &LOWER, &ni, raw(a.as_mut_ptr()), &ni, ipiv.as_ptr(), raw(work.as_mut_ptr()),
            &mut info,
        );
    }
    check("zhetri", info)?;
    for j in 0..n {
        for i in 0..j {
            a[i + j * n] = a[j + i * n].conj();
        }
        a[j + j * n].im = 0.0;
    }
    Ok(())
}

/// Generalized Hermitian-definite problem `A·x = λ·B·x`. Returns ascending
/// eigenvalues; `a` is overwritten with `B`-orthonormal eigenvectors.
pub(crate) fn hegv(a: &mut [C64], b: &mut [C64], n: usize) -> Result<Vec<f64>, Error> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n * n);
    let ni = dim(n);
    let jobz = b'V' as c_char;
    let mut w = vec![0.0; n];
    let mut rwork = vec![0.0; (3 * n).saturating_sub(2).max(1)];
    let mut info = 0;
    let mut query = [C64::default()];
    unsafe {
        lapack_sys::zhegv_(
            &1, &jobz, &LOWER, &ni, raw(a.as_mut_ptr()), &ni, raw(b.as_mut_ptr()), &ni,
            w.as_mut_ptr(), raw(query.as_mut_ptr()), &-1, rwork.as_mut_ptr(), &mut info,
        );
    }
    check("zhegv", info)?;
    let lwork = (query[0].re as c_int).max(1);
    let mut work = vec![C64::default(); lwork as usize];
    unsafe {
        lapack_sys::zhegv_(
            &1, &jobz, &LOWER, &ni, raw(a.as_mut_ptr()), &ni, raw(b.as_mut_ptr()), &ni,
            w.as_mut_ptr(), raw(work.as_mut_ptr()), &lwork, rwork.as_mut_ptr(), &mut info,
        );
    }
    check("zhegv", info)?;
    Ok(w)
}
