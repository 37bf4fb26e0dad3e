//! Dense complex products computed as real products, which run on the blocked
//! real GEMM kernel and are several times faster than the generic complex path.

use nalgebra::DMatrix;
use num_complex::Complex64;

fn split(a: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (a.map(|z| z.re), a.map(|z| z.im))
}

fn join(re: DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<Complex64> {
    re.zip_map(im, Complex64::new)
}

/// `A B`.
pub fn mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let mut re = &ar * &br;
    re.gemm(-1.0, &ai, &bi, 1.0);
    let mut im = &ar * &bi;
    im.gemm(1.0, &ai, &br, 1.0);
    join(re, &im)
}

/// `Aᴴ B`.
pub fn ad_mul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    assert_eq!(a.nrows(), b.nrows(), "row counts differ");
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let mut re = ar.tr_mul(&br);
    re.gemm_tr(1.0, &ai, &bi, 1.0);
    let mut im = ar.tr_mul(&bi);
    im.gemm_tr(-1.0, &ai, &br, 1.0);
    join(re, &im)
}

/// `A Aᴴ`, exactly Hermitian.
pub fn mul_adjoint_self(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = split(a);
    let mut re = &ar * ar.transpose();
    re.gemm(1.0, &ai, &ai.transpose(), 1.0);
    let mut im = &ai * ar.transpose();
    im.gemm(-1.0, &ar, &ai.transpose(), 1.0);
    hermitize(join(re, &im))
}

/// `Aᴴ A`, exactly Hermitian.
pub fn gram(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    hermitize(ad_mul(a, a))
}

/// Block size of [`lower_inverse`].
const BLOCK: usize = 64;

/// Inverse of a nonsingular lower-triangular matrix, by block forward
/// substitution so that almost all work is matrix products.
pub fn lower_inverse(l: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = l.nrows();
    assert_eq!(n, l.ncols(), "square matrix required");
    let starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    let size = |b: usize| BLOCK.min(n - starts[b]);
    let diag_inv: Vec<DMatrix<Complex64>> = (0..starts.len())
        .map(|b| {
            let lb = l.view((starts[b], starts[b]), (size(b), size(b))).into_owned();
            let mut eye = DMatrix::identity(size(b), size(b));
            lb.solve_lower_triangular_mut(&mut eye);
            eye
        })
        .collect();
    let mut x = DMatrix::zeros(n, n);
    for j in 0..starts.len() {
        let (cj, wj) = (starts[j], size(j));
        x.view_mut((cj, cj), (wj, wj)).copy_from(&diag_inv[j]);
        for i in j + 1..starts.len() {
            let (ri, wi) = (starts[i], size(i));
            // X_ij = -L_ii⁻¹ Σ_{k=j}^{i-1} L_ik X_kj
            let lik = l.view((ri, cj), (wi, ri - cj)).into_owned();
            let xkj = x.view((cj, cj), (ri - cj, wj)).into_owned();
            let s = mul(&diag_inv[i], &mul(&lik, &xkj));
            x.view_mut((ri, cj), (wi, wj)).copy_from(&(-s));
        }
    }
    x
}

/// Lower Cholesky factor `L` of a Hermitian positive-definite `C = L Lᴴ`
/// (right-looking, blocked). Only the lower triangle of `c` is read.
/// `None` if `c` is not numerically positive definite.
pub fn cholesky_lower(c: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let n = c.nrows();
    assert_eq!(n, c.ncols(), "square matrix required");
    let mut a = c.clone();
    let mut k = 0;
    while k < n {
        let w = BLOCK.min(n - k);
        let mut akk = a.view((k, k), (w, w)).into_owned();
        for j in 0..w {
            for i in 0..j {
                akk[(i, j)] = akk[(j, i)].conj();
            }
        }
        // The complex square root never fails, so pivots are checked here.
        let lkk = akk.cholesky()?.l();
        if !(0..w).all(|i| positive_pivot(lkk[(i, i)])) {
            return None;
        }
        a.view_mut((k, k), (w, w)).copy_from(&lkk);
        let rest = n - k - w;
        if rest > 0 {
            // L_ik = A_ik L_kk⁻ᴴ
            let mut inv = DMatrix::identity(w, w);
            lkk.solve_lower_triangular_mut(&mut inv);
            let panel = mul(&a.view((k + w, k), (rest, w)).into_owned(), &inv.adjoint());
            a.view_mut((k + w, k), (rest, w)).copy_from(&panel);
            let update = mul_adjoint_self(&panel);
            let mut trail = a.view_mut((k + w, k + w), (rest, rest));
            trail -= update;
        }
        k += w;
    }
    for j in 0..n {
        for i in 0..j {
            a[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Some(a)
}

fn positive_pivot(z: Complex64) -> bool {
    z.re > 0.0 && z.re.is_finite() && z.im.abs() <= 1e-12 * z.re
}

/// Solves `C X = B` for Hermitian positive-definite `C`.
pub fn hermitian_solve(c: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let l = cholesky_lower(c)?;
    let z = l.solve_lower_triangular(b)?;
    l.ad_solve_lower_triangular(&z)
}

/// `diag(C⁻¹)` from the inverse Cholesky factor `L⁻¹` of `C = L Lᴴ`.
pub fn inverse_diagonal_from_factor(linv: &DMatrix<Complex64>) -> Vec<f64> {
    linv.column_iter().map(|c| c.norm_squared()).collect()
}

fn hermitize(mut g: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = g.nrows();
    for j in 0..n {
        g[(j, j)].im = 0.0;
        for i in j + 1..n {
            let v = (g[(i, j)] + g[(j, i)].conj()) * 0.5;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}
