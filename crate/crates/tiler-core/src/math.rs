// Float helpers that `core` does not provide.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

/// `base^e` by repeated squaring, exact for powers of two.
pub(crate) fn powi(base: f64, e: i32) -> f64 {
    let mut result = 1.0;
    let mut b = if e < 0 { 1.0 / base } else { base };
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            result *= b;
        }
        b *= b;
        k >>= 1;
    }
    result
}
