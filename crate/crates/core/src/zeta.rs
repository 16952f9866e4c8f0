//! Hurwitz zeta function at s = 2 for complex arguments.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Direct summation runs until the shifted argument has real part at least this large.
const SHIFT_THRESHOLD: f64 = 20.0;

/// B_2, B_4, ..., B_10
const BERNOULLI: [f64; 5] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];

/// ζ(2, q) = Σ_{m≥0} (q + m)^{-2} for Re(q) > 0.
///
/// The first `M` terms are summed directly, with `M` the smallest shift that
/// makes `Re(q + M) >= 20`; the remainder is the Euler-Maclaurin tail
/// `1/a + 1/(2a²) + Σ_k B_2k / a^(2k+1)` with `a = q + M`, truncated after
/// five Bernoulli terms. The first omitted term is below 1e-17 in magnitude.
pub fn hurwitz_zeta2(q: Complex64) -> Result<Complex64> {
    if !(q.re.is_finite() && q.im.is_finite()) {
        return Err(Error::Domain(format!("ζ(2, q) needs a finite argument, got {q}")));
    }
    if q.re <= 0.0 {
        return Err(Error::Domain(format!("ζ(2, q) needs Re(q) > 0, got {q}")));
    }
    let shift = (SHIFT_THRESHOLD - q.re).ceil().max(0.0) as u32;
    let a = q + f64::from(shift);
    let inv = a.inv();
    let inv2 = inv * inv;
    // Horner form of Σ_k B_2k a^{-(2k+1)}
    let mut corr = Complex64::new(0.0, 0.0);
    for b in BERNOULLI.iter().rev() {
        corr = (corr + *b) * inv2;
    }
    let mut sum = inv + 0.5 * inv2 + corr * inv;
    // smallest terms first
    for m in (0..shift).rev() {
        let z = q + f64::from(m);
        let zi = z.inv();
        sum += zi * zi;
    }
    Ok(sum)
}
