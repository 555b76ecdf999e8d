//! Error function on the complex strip needed by the Gaussian exact solution.

use thiserror::Error;

use crate::scalar::{Scalar, C};

/// Validity envelope of the expansion: beyond this imaginary part the
/// truncation bound no longer guarantees 1e-12 relative accuracy.
pub const ERF_IM_ENVELOPE: f64 = 12.0;

#[derive(Debug, Error, PartialEq)]
pub enum SpecialError {
    #[error("erf argument outside the validity envelope: |Im z| = {0} > 12")]
    OutsideEnvelope(f64),
}

/// Real error function: Taylor series for small arguments, a continued
/// fraction for the complementary function otherwise.
pub fn erf_real<S: Scalar>(x: S) -> S {
    if x < S::zero() {
        return -erf_real(-x);
    }
    if x == S::zero() {
        return S::zero();
    }
    let two_over_sqrt_pi = S::two() / S::PI().sqrt();
    if x < S::two() {
        // erf(x) = (2/sqrt(pi)) sum (-1)^n x^{2n+1} / (n! (2n+1)).
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term = term * (-x2) / S::of_usize(n);
            let inc = term / S::of_usize(2 * n + 1);
            sum += inc;
            if inc.abs() <= S::epsilon() * sum.abs() {
                break;
            }
        }
        two_over_sqrt_pi * sum
    } else {
        // erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
        let mut tail = S::zero();
        for n in (1..=120).rev() {
            tail = (S::of_usize(n) * S::half()) / (x + tail);
        }
        let erfc = (-x * x).exp() / S::PI().sqrt() / (x + tail);
        S::one() - erfc
    }
}

/// Error function of a complex argument to 1e-12 relative accuracy on the
/// strip `|Im z| <= 12`, by the trapezoidal expansion
///
/// `erf(x+iy) = erf(x) + e^{-x^2}/(2 pi x) [(1 - cos 2xy) + i sin 2xy]
///            + (2/pi) e^{-x^2} sum_n e^{-n^2/4}/(n^2+4x^2) (f_n + i g_n)`
///
/// with `f_n = 2x - 2x cosh(ny) cos(2xy) + n sinh(ny) sin(2xy)` and
/// `g_n = 2x cosh(ny) sin(2xy) + n sinh(ny) cos(2xy)`. The hyperbolic factors
/// are evaluated with combined exponents so no intermediate overflows.
pub fn erf_complex<S: Scalar>(z: C<S>) -> Result<C<S>, SpecialError> {
    if z.im.abs() > S::of(ERF_IM_ENVELOPE) {
        return Err(SpecialError::OutsideEnvelope(
            z.im.abs().to_f64().unwrap_or(f64::NAN),
        ));
    }
    // Reduce to the first quadrant: erf(-z) = -erf(z), erf(conj z) = conj erf(z).
    if z.re < S::zero() {
        return erf_complex(-z).map(|w| -w);
    }
    if z.im < S::zero() {
        return erf_complex(z.conj()).map(|w| w.conj());
    }
    let x = z.re;
    let y = z.im;
    if y == S::zero() {
        return Ok(C::new(erf_real(x), S::zero()));
    }
    const N_TERMS: usize = 64;
    let pi = S::PI();
    let exp_mx2 = (-x * x).exp();
    if exp_mx2 == S::zero() {
        // All corrections carry exp(-x^2 + y^2) <= exp(-600) here.
        return Ok(C::new(erf_real(x), S::zero()));
    }
    let cos2xy = (S::two() * x * y).cos();
    let sin2xy = (S::two() * x * y).sin();
    let (mut re, mut im);
    if x > S::of(1e-300) {
        let pref = exp_mx2 / (S::two() * pi * x);
        // 1 - cos(2xy) = 2 sin^2(xy), avoiding cancellation at small x y.
        let sin_xy = (x * y).sin();
        re = erf_real(x) + pref * S::two() * sin_xy * sin_xy;
        im = pref * sin2xy;
    } else {
        re = S::zero();
        im = y / pi;
    }
    let mut sum_re = S::zero();
    let mut sum_im = S::zero();
    for n in 1..=N_TERMS {
        let nf = S::of_usize(n);
        let base = -x * x - nf * nf * S::of(0.25);
        let e_plus = (base + nf * y).exp();
        let e_minus = (base - nf * y).exp();
        let cosh_term = (e_plus + e_minus) * S::half();
        let sinh_term = (e_plus - e_minus) * S::half();
        let denom = nf * nf + S::of(4.0) * x * x;
        let f_n = S::two() * x * base.exp() - S::two() * x * cosh_term * cos2xy
            + nf * sinh_term * sin2xy;
        let g_n = S::two() * x * cosh_term * sin2xy + nf * sinh_term * cos2xy;
        sum_re += f_n / denom;
        sum_im += g_n / denom;
    }
    let scale = S::two() / pi;
    Ok(C::new(re + scale * sum_re, im + scale * sum_im))
}
