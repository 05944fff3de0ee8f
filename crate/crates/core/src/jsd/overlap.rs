//! Partial and complex overlaps between normalized sub-densities.
//!
//! Every quadruple integral is contracted through products of the form
//! `A·B†` or `A†·B`, so the cost is O(n³) in the grid size.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::jsd::grid::JsdGrid;

type CMat = DMatrix<Complex64>;

fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn real_part(m: &CMat) -> DMatrix<f64> {
    m.map(|z| z.re)
}

fn complexify(m: DMatrix<f64>) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

/// `a · b†`
pub(crate) fn mul_adjoint(a: &CMat, b: &CMat) -> CMat {
    if is_real(a) && is_real(b) {
        complexify(real_part(a) * real_part(b).transpose())
    } else {
        a * b.adjoint()
    }
}

/// `a† · b`
pub(crate) fn adjoint_mul(a: &CMat, b: &CMat) -> CMat {
    if is_real(a) && is_real(b) {
        complexify(real_part(a).transpose() * real_part(b))
    } else {
        a.adjoint() * b
    }
}

/// Row Gram matrix `A·A†` (signal × signal).
pub(crate) fn gram_rows(a: &CMat) -> CMat {
    mul_adjoint(a, a)
}

/// Column Gram matrix `A†·A` (idler × idler).
pub(crate) fn gram_cols(a: &CMat) -> CMat {
    adjoint_mul(a, a)
}

/// `Re Σ_ij X_ij conj(Y_ij)` for Hermitian `X`, `Y`, which equals `tr(X·Y)`.
fn hermitian_inner(x: &CMat, y: &CMat) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a * b.conj()).re).sum()
}

/// Which frequency variable is exchanged between the two functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapAxis {
    /// `O_x(h, g) = ∬∬ h*(x1,y1) g*(x2,y2) h(x2,y1) g(x1,y2)`
    X,
    /// `O_y(h, g) = ∬∬ h*(x1,y1) g*(x2,y2) h(x1,y2) g(x2,y1)`
    Y,
}

/// Partial overlap of two normalized sub-densities; an absent (empty)
/// argument gives 0.
pub fn pair_overlap(a: Option<&JsdGrid>, b: Option<&JsdGrid>, axis: OverlapAxis) -> f64 {
    let (Some(a), Some(b)) = (a, b) else {
        return 0.0;
    };
    let (wa, wb) = (a.weighted(), b.weighted());
    match axis {
        OverlapAxis::X => hermitian_inner(&gram_rows(wa), &gram_rows(wb)),
        OverlapAxis::Y => hermitian_inner(&gram_cols(wa), &gram_cols(wb)),
    }
}

/// `O_c = ∬∬ F1*(x1,y1) F2*(x2,y2) F3(x1,y2) F4(x2,y1)`; zero when any
/// segment is empty.
pub fn complex_overlap(
    f1: Option<&JsdGrid>,
    f2: Option<&JsdGrid>,
    f3: Option<&JsdGrid>,
    f4: Option<&JsdGrid>,
) -> Complex64 {
    let (Some(f1), Some(f2), Some(f3), Some(f4)) = (f1, f2, f3, f4) else {
        return Complex64::new(0.0, 0.0);
    };
    // Σ_y1 F1*(x1,y1) F4(x2,y1) = conj((F1·F4†)[x1,x2])
    // Σ_y2 F3(x1,y2) F2*(x2,y2) = (F3·F2†)[x1,x2]
    let a = mul_adjoint(f1.weighted(), f4.weighted());
    let b = mul_adjoint(f3.weighted(), f2.weighted());
    a.iter().zip(b.iter()).map(|(p, q)| p.conj() * q).sum()
}
