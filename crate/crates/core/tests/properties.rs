use proptest::prelude::*;

use ekbf_core::bounds::{lyapunov_rate, ramp, tau_t, varpi, ProblemConstants};
use ekbf_core::harness::stats::wilson;
use ekbf_core::linalg::{max_eigenvalue, min_eigenvalue, psd_project, sym_eigen, sym_sqrt, Mat, SymMat};

fn symmetric(max_dim: usize) -> impl Strategy<Value = SymMat> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec(-5.0f64..5.0, n * n).prop_map(move |v| {
            let m = Mat::from_row_major(n, n, v).unwrap();
            SymMat::symmetrize(&m).unwrap()
        })
    })
}

fn max_abs_diff(a: &SymMat, b: &SymMat) -> f64 {
    a.as_mat().as_slice().iter().zip(b.as_mat().as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn constants(lj: f64, la: f64, tr_r1: f64, rho_s: f64, tr_p0: f64) -> ProblemConstants {
    ProblemConstants {
        lambda_jac: lj,
        kappa_jac: 0.0,
        lambda_drift: la,
        tr_r1,
        rho_s,
        tr_p0,
        rho_p0: tr_p0,
        r1: 1,
    }
}

proptest! {
    #[test]
    fn eigen_decomposition_reassembles(m in symmetric(5)) {
        let e = sym_eigen(&m).unwrap();
        let back = e.reassemble(|l| l);
        let scale = 1.0 + frobenius(&m);
        prop_assert!(max_abs_diff(&m, &back) < 1e-10 * scale);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let tr: f64 = e.values.iter().sum();
        prop_assert!((tr - m.trace()).abs() < 1e-10 * scale);
    }

    #[test]
    fn eigenvectors_are_orthonormal(m in symmetric(5)) {
        let v = sym_eigen(&m).unwrap().vectors;
        let g = v.transpose().mul_mat(&v).unwrap();
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g.get(i, j) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn psd_projection_is_psd_and_idempotent(m in symmetric(5)) {
        let p = psd_project(&m).unwrap();
        prop_assert!(min_eigenvalue(&p).unwrap() > -1e-9);
        let pp = psd_project(&p).unwrap();
        prop_assert!(max_abs_diff(&p, &pp) < 1e-9 * (1.0 + frobenius(&m)));
        // the projection never raises the top of the spectrum
        prop_assert!(max_eigenvalue(&p).unwrap() <= max_eigenvalue(&m).unwrap().max(0.0) + 1e-9);
    }

    #[test]
    fn square_root_squares_back(m in symmetric(4)) {
        let p = psd_project(&m).unwrap();
        let r = sym_sqrt(&p).unwrap();
        let sq = SymMat::symmetrize(&r.as_mat().mul_mat(r.as_mat()).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&p, &sq) < 1e-8 * (1.0 + frobenius(&p)));
    }

    #[test]
    fn varpi_increases_with_delta(a in 0.0f64..50.0, gap in 1e-6f64..50.0) {
        prop_assert!(varpi(a + gap).unwrap() > varpi(a).unwrap());
    }

    #[test]
    fn tau_decreases_to_its_floor(
        lj in 0.1f64..10.0, tr_r1 in 0.01f64..10.0, tr_p0 in 0.0f64..10.0,
        t in 0.0f64..20.0, dt in 1e-3f64..5.0,
    ) {
        let c = constants(lj, lj, tr_r1, 1.0, tr_p0);
        let (a, b) = (tau_t(&c, t).unwrap(), tau_t(&c, t + dt).unwrap());
        prop_assert!(b <= a);
        prop_assert!(b >= tr_r1 / lj);
    }

    #[test]
    fn forgetting_rate_falls_as_sensors_sharpen(
        lj in 0.5f64..10.0, tr_r1 in 0.01f64..2.0, rho in 0.01f64..1.0, bump in 1e-3f64..1.0,
    ) {
        // Λ is decreasing in ρ(S) on ρ(S) < (2/3)² λ_∂A
        let lo = rho.min(0.4 * lj);
        let hi = (lo + bump).min(4.0 / 9.0 * lj);
        prop_assume!(hi > lo);
        let a = lyapunov_rate(&constants(lj, lj, tr_r1, lo, 1.0)).unwrap();
        let b = lyapunov_rate(&constants(lj, lj, tr_r1, hi, 1.0)).unwrap();
        prop_assert!(b.rate <= a.rate + 1e-12);
        prop_assert!(b.delta_exponent < a.delta_exponent);
    }

    #[test]
    fn ramp_is_continuous_across_equal_rates(a in 0.01f64..10.0, t in 0.0f64..20.0, k in 1i32..10) {
        let gap = 10f64.powi(-k);
        let limit = ramp(a, a, t);
        let near = ramp(a, a + gap, t);
        // |∂ramp/∂b| ≤ t²/2 · e^{−at}
        prop_assert!((near - limit).abs() <= 0.5 * t * t * gap * (-a * t).exp() + 1e-14);
        prop_assert!((ramp(a, a + gap, t) - ramp(a + gap, a, t)).abs() < 1e-15);
    }

    #[test]
    fn wilson_interval_brackets_the_point(n in 1usize..5000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as usize;
        let e = wilson(k, n).unwrap();
        prop_assert!(0.0 <= e.ci_low && e.ci_low <= e.point);
        prop_assert!(e.point <= e.ci_high && e.ci_high <= 1.0);
        prop_assert!(e.ci_high - e.ci_low > 0.0);
    }
}

fn frobenius(m: &SymMat) -> f64 {
    m.as_mat().as_slice().iter().map(|x| x * x).sum::<f64>().sqrt()
}
