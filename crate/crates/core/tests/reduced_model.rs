use etpump::reduced::{solve_reduced, transfer_rate, transfer_rate_scan, ReducedModel};
use nalgebra::Matrix3;
use proptest::prelude::*;

/// Cofactor expansion along the first row.
fn det3(m: &Matrix3<f64>) -> f64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)]) - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Routh–Hurwitz test on the characteristic polynomial λ³ + a₂λ² + a₁λ + a₀.
fn hurwitz_stable(m: &Matrix3<f64>) -> bool {
    let a2 = -m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)]
        + m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)];
    let a1 = minors;
    let a0 = -det3(m);
    a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0
}

fn rk4(m: &Matrix3<f64>, y0: nalgebra::Vector3<f64>, t: f64, steps: usize) -> nalgebra::Vector3<f64> {
    let h = t / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = m * y;
        let k2 = m * (y + k1 * (h / 2.0));
        let k3 = m * (y + k2 * (h / 2.0));
        let k4 = m * (y + k3 * h);
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn determinant_matches_cofactors(v_e in 1e-4f64..0.1, gamma in 1e-4f64..0.5, g in 0.0f64..3.0) {
        let rm = ReducedModel::new(v_e, gamma, g).unwrap();
        let m = rm.m_matrix();
        let oracle = -2.0 * v_e * v_e * gamma;
        prop_assert!((det3(&m) - oracle).abs() <= 1e-12 * oracle.abs());
        prop_assert!((rm.determinant() - oracle).abs() <= 1e-12 * oracle.abs());
        prop_assert!(hurwitz_stable(&m));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spectrum_in_left_half_plane(v_e in 1e-4f64..0.1, gamma in 1e-4f64..0.5, g in 0.0f64..3.0) {
        let a = transfer_rate(&ReducedModel::new(v_e, gamma, g).unwrap());
        prop_assert!(a.eigenvalues.iter().all(|z| z.re < 0.0));
        prop_assert!(a.lambda_tilde < 0.0);
        let tr: f64 = a.eigenvalues.iter().map(|z| z.re).sum();
        prop_assert!((tr - rm_trace(v_e, gamma, g)).abs() < 1e-9 * (1.0 + tr.abs()));
    }

    #[test]
    fn trajectory_matches_rk4(v_e in 1e-3f64..0.05, ratio in 0.05f64..20.0, g in 0.2f64..2.0) {
        let gamma = ratio * v_e;
        let rm = ReducedModel::new(v_e, gamma, g).unwrap();
        let t = 3.0 / v_e;
        let traj = solve_reduced(&rm, [1.0, 0.0, 0.0], &[0.0, t]);
        let y = rk4(&rm.m_matrix(), nalgebra::Vector3::new(1.0, 0.0, 0.0), t, 4000);
        prop_assert!((traj.rho11[1] - y[0]).abs() < 1e-7);
        prop_assert!((traj.im_rho12[1] - y[1]).abs() < 1e-7);
        prop_assert!((traj.rho22[1] - y[2]).abs() < 1e-7);
        prop_assert!((traj.rho11[1] + traj.rho22[1] + traj.rho33[1] - 1.0).abs() < 1e-9);
    }
}

fn rm_trace(v_e: f64, gamma: f64, g: f64) -> f64 {
    ReducedModel::new(v_e, gamma, g).unwrap().m_matrix().trace()
}

#[test]
fn rate_is_linear_then_inverse_in_gamma() {
    // the slow mode is overdamped at both ends: |λ̃| ∝ γ for γ ≪ Vₑ and ∝ Vₑ²/γ for γ ≫ Vₑ
    let v_e: f64 = 0.006;
    let r = transfer_rate_scan(v_e, 1.0, &[1e-4 * v_e, 2e-4 * v_e, 1e4 * v_e, 2e4 * v_e]);
    assert!((r[1] / r[0] - 2.0).abs() < 1e-3);
    assert!((r[3] / r[2] - 0.5).abs() < 1e-3);
}

#[test]
fn optimum_near_two_ve() {
    let a = transfer_rate(&ReducedModel::new(0.006, 0.01, 1.0).unwrap());
    let ratio = a.optimal_gamma / 0.006;
    assert!((1.5..=2.5).contains(&ratio), "optimum γ/Vₑ = {ratio}");
}
