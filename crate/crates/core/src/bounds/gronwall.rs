use crate::error::{Error, Result};

/// Source-free moment estimate for a quadratic process with
/// `ρ(𝒜) ≤ −a` and `𝒲 ≤ w` held constant:
/// `E‖𝒳_t‖ⁿ ≤ exp(½(−n a + n(n−1)w/2) t) ‖𝒳₀‖ⁿ`.
pub fn hilbert_rhs(n: u32, a: f64, w: f64, t: f64, x0_norm: f64) -> Result<f64> {
    if n == 0 || w < 0.0 || t < 0.0 || x0_norm < 0.0 {
        return Err(Error::InvalidArgument(
            "need n >= 1, w >= 0, t >= 0 and a nonnegative initial norm".into(),
        ));
    }
    let n = n as f64;
    Ok((0.5 * (-n * a + 0.5 * n * (n - 1.0) * w) * t).exp() * x0_norm.powf(n))
}

/// Right-hand side of the sourced estimate started from `𝒳₀ = 0`, bounding
/// `E(‖𝒳_T‖ⁿ)^{2/n}` by
///
/// ```text
/// ∫₀ᵀ exp(−[∫ₛᵀ λₙ + (n−1)/2 ∫₀ˢ w]) (u_s + (n−1)/2 v_s) ds,   λₙ = a − (n−1)/2 w
/// ```
///
/// where `u`, `v` are the `n`-th moment norms of the sources. All integrals
/// use the trapezoid rule on the uniform grid of step `dt`.
pub fn gronwall_moment_rhs(
    n: u32,
    a: &dyn Fn(f64) -> f64,
    w: &dyn Fn(f64) -> f64,
    u: &dyn Fn(f64) -> f64,
    v: &dyn Fn(f64) -> f64,
    horizon: f64,
    dt: f64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and a nonnegative horizon".into()));
    }
    let steps = (horizon / dt).round() as usize;
    if steps == 0 {
        return Ok(0.0);
    }
    let h = horizon / steps as f64;
    let half = 0.5 * (n as f64 - 1.0);
    let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let lam: Vec<f64> = grid.iter().map(|&s| a(s) - half * w(s)).collect();
    let ws: Vec<f64> = grid.iter().map(|&s| w(s)).collect();

    let cumulative = |f: &[f64]| {
        let mut out = Vec::with_capacity(f.len());
        let mut acc = 0.0;
        out.push(0.0);
        for pair in f.windows(2) {
            acc += 0.5 * h * (pair[0] + pair[1]);
            out.push(acc);
        }
        out
    };
    let lam_int = cumulative(&lam);
    let w_int = cumulative(&ws);
    let total = lam_int[steps];

    let integrand: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let source = u(s) + half * v(s);
            if source == 0.0 {
                0.0
            } else {
                (-(total - lam_int[k] + half * w_int[k])).exp() * source
            }
        })
        .collect();
    Ok(*cumulative(&integrand).last().unwrap())
}
