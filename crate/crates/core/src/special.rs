//! Special functions needed by the closed-form order indices.

/// Dawson's integral `D(x) = e^{-x²} ∫₀ˣ e^{t²} dt`.
///
/// Uses the all-positive Maclaurin series `e^{-x²} Σ x^{2n+1}/(n!(2n+1))`
/// for `|x| ≤ 8` and the asymptotic expansion beyond.
pub fn dawson(x: f64) -> f64 {
    if x < 0.0 {
        return -dawson(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    let x2 = x * x;
    if x <= 8.0 {
        // term_n = x^{2n+1}/n!
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= x2 / n;
            let contrib = term / (2.0 * n + 1.0);
            sum += contrib;
            if contrib < sum * 1e-17 {
                break;
            }
        }
        return (-x2).exp() * sum;
    }
    // (1/2x) Σ (2n-1)!!/(2x²)^n, summed until the terms stop shrinking.
    let inv = 1.0 / (2.0 * x2);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    loop {
        n += 1.0;
        let next = term * (2.0 * n - 1.0) * inv;
        if next >= term || next < sum * 1e-17 {
            break;
        }
        term = next;
        sum += term;
    }
    sum / (2.0 * x)
}
