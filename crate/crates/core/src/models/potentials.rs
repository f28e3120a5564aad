use std::f64::consts::SQRT_2;
use std::fmt::Debug;

/// One-site potential `U₁ : ℝ → ℝ` through its first two derivatives.
pub trait SitePotential: Debug + Send + Sync {
    fn grad(&self, s: f64) -> f64;
    fn hess(&self, s: f64) -> f64;
}

/// Pair potential `U₂ : ℝ² → ℝ` through its gradient and Hessian.
pub trait PairPotential: Debug + Send + Sync {
    fn grad(&self, a: f64, b: f64) -> [f64; 2];
    fn hess(&self, a: f64, b: f64) -> [[f64; 2]; 2];
}

/// `U₁(s) = u s²/2 + κ |s|³/6`: `U₁'' = u + κ|s| ≥ u`, Hessian Lipschitz constant `κ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicSite {
    pub convexity: f64,
    pub lipschitz: f64,
}

impl SitePotential for CubicSite {
    fn grad(&self, s: f64) -> f64 {
        self.convexity * s + 0.5 * self.lipschitz * s * s.abs()
    }

    fn hess(&self, s: f64) -> f64 {
        self.convexity + self.lipschitz * s.abs()
    }
}

/// `U₂(a,b) = u (a² + b²)/2 + c |a − b|³/6` with `c = κ/(2√2)`, so that
/// `∂²U₂ ≥ u I₂` and the Hessian is `κ`-Lipschitz in operator norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicPair {
    pub convexity: f64,
    pub lipschitz: f64,
}

impl CubicPair {
    fn coupling(&self) -> f64 {
        self.lipschitz / (2.0 * SQRT_2)
    }
}

impl PairPotential for CubicPair {
    fn grad(&self, a: f64, b: f64) -> [f64; 2] {
        let d = a - b;
        let g = 0.5 * self.coupling() * d * d.abs();
        [self.convexity * a + g, self.convexity * b - g]
    }

    fn hess(&self, a: f64, b: f64) -> [[f64; 2]; 2] {
        let h = self.coupling() * (a - b).abs();
        [
            [self.convexity + h, -h],
            [-h, self.convexity + h],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let site = CubicSite { convexity: 1.3, lipschitz: 0.7 };
        let pot = |s: f64| 0.5 * 1.3 * s * s + 0.7 * s.abs().powi(3) / 6.0;
        let h = 1e-5;
        for &s in &[-1.7, -0.2, 0.4, 2.5] {
            let fd = (pot(s + h) - pot(s - h)) / (2.0 * h);
            assert!((fd - site.grad(s)).abs() < 1e-8);
            let fd2 = (site.grad(s + h) - site.grad(s - h)) / (2.0 * h);
            assert!((fd2 - site.hess(s)).abs() < 1e-7);
        }
        let pair = CubicPair { convexity: 0.5, lipschitz: 0.9 };
        let (a, b) = (0.8, -0.3);
        let g = pair.grad(a, b);
        let gh = pair.grad(a + h, b);
        let gl = pair.grad(a - h, b);
        let hs = pair.hess(a, b);
        assert!(((gh[0] - gl[0]) / (2.0 * h) - hs[0][0]).abs() < 1e-7);
        assert!(((gh[1] - gl[1]) / (2.0 * h) - hs[1][0]).abs() < 1e-7);
        assert!(g.iter().all(|v| v.is_finite()));
    }
}
