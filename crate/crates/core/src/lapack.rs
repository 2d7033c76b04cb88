//! Thin FFI onto the system LAPACK (dgeqrf/dorgqr) for QR factorization.
//! Only what Haar sampling needs; column-major layout throughout.

use std::os::raw::c_int;

extern "C" {
    fn dgeqrf_(
        m: *const c_int,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        tau: *mut f64,
        work: *mut f64,
        lwork: *const c_int,
        info: *mut c_int,
    );
    fn dorgqr_(
        m: *const c_int,
        n: *const c_int,
        k: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        tau: *mut f64,
        work: *mut f64,
        lwork: *const c_int,
        info: *mut c_int,
    );
}

/// Replace the column-major n x n matrix `a` with the Q factor of its QR
/// factorization, with each column flipped so the corresponding diagonal
/// entry of R is nonnegative. That sign convention makes the map from
/// matrices to Q factors unique, which is what downstream sampling relies on.
pub fn qr_orthonormal_inplace(a: &mut [f64], n: usize) -> crate::Result<()> {
    if n == 0 || a.len() != n * n {
        return Err(crate::Error::Dimension { expected: n * n, got: a.len() });
    }
    let ni = c_int::try_from(n)
        .map_err(|_| crate::Error::Parameter(format!("matrix side {n} too large for lapack")))?;
    let mut tau = vec![0.0f64; n];
    let mut info: c_int = 0;

    // workspace query, then factorize
    let mut wk_query = [0.0f64; 1];
    let neg_one: c_int = -1;
    unsafe {
        dgeqrf_(&ni, &ni, a.as_mut_ptr(), &ni, tau.as_mut_ptr(), wk_query.as_mut_ptr(), &neg_one, &mut info);
    }
    if info != 0 {
        return Err(crate::Error::Degenerate(format!("dgeqrf workspace query failed: info={info}")));
    }
    let lwork = wk_query[0].max(n as f64) as usize;
    let lworki = c_int::try_from(lwork)
        .map_err(|_| crate::Error::Parameter(format!("lapack workspace {lwork} too large")))?;
    let mut work = vec![0.0f64; lwork];
    unsafe {
        dgeqrf_(&ni, &ni, a.as_mut_ptr(), &ni, tau.as_mut_ptr(), work.as_mut_ptr(), &lworki, &mut info);
    }
    if info != 0 {
        return Err(crate::Error::Degenerate(format!("dgeqrf failed: info={info}")));
    }

    // R's diagonal is still in place; capture signs before Q overwrites it.
    let rdiag_neg: Vec<bool> = (0..n).map(|k| a[k * n + k] < 0.0).collect();

    unsafe {
        dorgqr_(&ni, &ni, &ni, a.as_mut_ptr(), &ni, tau.as_mut_ptr(), wk_query.as_mut_ptr(), &neg_one, &mut info);
    }
    if info != 0 {
        return Err(crate::Error::Degenerate(format!("dorgqr workspace query failed: info={info}")));
    }
    let lwork2 = wk_query[0].max(n as f64) as usize;
    if lwork2 > work.len() {
        work.resize(lwork2, 0.0);
    }
    let lwork2i = c_int::try_from(lwork2)
        .map_err(|_| crate::Error::Parameter(format!("lapack workspace {lwork2} too large")))?;
    unsafe {
        dorgqr_(&ni, &ni, &ni, a.as_mut_ptr(), &ni, tau.as_mut_ptr(), work.as_mut_ptr(), &lwork2i, &mut info);
    }
    if info != 0 {
        return Err(crate::Error::Degenerate(format!("dorgqr failed: info={info}")));
    }

    for (k, &neg) in rdiag_neg.iter().enumerate() {
        if neg {
            for x in &mut a[k * n..(k + 1) * n] {
                *x = -*x;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(xs: impl Iterator<Item = f64>) -> f64 {
        xs.fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn q_is_orthonormal_and_spans_input() {
        // deterministic full-rank input
        let n = 7usize;
        let mut a: Vec<f64> = (0..n * n)
            .map(|i| ((i * 2654435761 % 1000) as f64 / 500.0 - 1.0) + if i % (n + 1) == 0 { 3.0 } else { 0.0 })
            .collect();
        let orig = a.clone();
        qr_orthonormal_inplace(&mut a, n).unwrap();

        // Q^T Q = I
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|r| a[i * n + r] * a[j * n + r]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        assert!(worst < 1e-12, "Q^T Q deviation {worst}");

        // Q^T * orig must be upper triangular with nonnegative diagonal
        for j in 0..n {
            for i in 0..n {
                let dot: f64 = (0..n).map(|r| a[i * n + r] * orig[j * n + r]).sum();
                if i > j {
                    assert!(dot.abs() < 1e-10, "R[{i},{j}]={dot} below diagonal");
                } else if i == j {
                    assert!(dot > 0.0, "R[{i},{i}]={dot} not positive");
                }
            }
        }
        assert!(max_abs(a.iter().copied()) <= 1.0 + 1e-12);
    }

    #[test]
    fn rejects_bad_shape() {
        let mut a = vec![0.0; 5];
        assert!(qr_orthonormal_inplace(&mut a, 2).is_err());
    }
}
