use etpump::hilbert::{fock_ops, DensityMatrix, Operator, SpaceSpec, StateVector};
use etpump::lindblad::{evolve, steady_state_dense, steady_state_long_time, IntegratorConfig, LindbladModel, Observable};
use etpump::models::{build_single_site_et, mode_annihilation, BathParams, EtParams};
use etpump::states::displaced_thermal;
use proptest::prelude::*;

const OMEGA0: f64 = std::f64::consts::TAU * 20.0;

fn oscillator(n_c: usize, gamma: f64, n_bar: f64) -> (LindbladModel<f64>, Operator<f64>) {
    let (a, _, num) = fock_ops::<f64>(n_c).unwrap();
    let model = LindbladModel::new(num.clone(), BathParams::new(gamma, n_bar).unwrap().channels(&a), OMEGA0).unwrap();
    (model, num)
}

fn tight() -> IntegratorConfig<f64> {
    IntegratorConfig { rtol: 1e-11, atol: 1e-13, max_step: None, sample_dt_ms: 0.05 }
}

#[test]
fn damped_fock_state_decays_exponentially() {
    let (n0, gamma) = (3usize, 0.05);
    let (model, num) = oscillator(8, gamma, 0.0);
    let rho0 = DensityMatrix::pure(&StateVector::basis(&SpaceSpec::boson(8).unwrap(), &[n0]).unwrap()).unwrap();
    let t_final = model.ms_to_model(0.5);
    let s = evolve(&model, &rho0, t_final, &tight(), &[Observable::expectation("n", &num)]).unwrap();
    let n = s.column("n").unwrap();
    for (k, &t) in s.times.iter().enumerate() {
        let oracle = n0 as f64 * (-gamma * t).exp();
        assert!((n[k] - oracle).abs() <= 1e-6 * oracle, "t={t}: {} vs {oracle}", n[k]);
    }
}

#[test]
fn thermal_bath_fixes_occupation() {
    for n_bar in [0.05, 0.1, 0.5] {
        let (model, num) = oscillator(30, 0.1, n_bar);
        let ss = steady_state_dense(&model).unwrap();
        let n = ss.expectation(&num).unwrap();
        assert!((n - n_bar).abs() < 1e-4, "n̄={n_bar}: ⟨n⟩={n}");
    }
}

#[test]
fn thermal_occupation_is_approached_dynamically() {
    let (n_bar, gamma) = (0.1, 0.2);
    let (model, num) = oscillator(12, gamma, n_bar);
    let rho0 = DensityMatrix::pure(&StateVector::basis(&SpaceSpec::boson(12).unwrap(), &[2]).unwrap()).unwrap();
    let t_final = 100.0;
    let cfg = IntegratorConfig { sample_dt_ms: model.model_to_ms(t_final), ..tight() };
    let s = evolve(&model, &rho0, t_final, &cfg, &[Observable::expectation("n", &num)]).unwrap();
    // d⟨n⟩/dt = −γ(⟨n⟩ − n̄)
    let oracle = n_bar + (2.0 - n_bar) * (-gamma * t_final).exp();
    assert!((s.last("n").unwrap() - oracle).abs() < 1e-6);
}

#[test]
fn dense_and_long_time_steady_states_agree() {
    let p = EtParams::new(1.0, 1.0, 0.01, OMEGA0).unwrap();
    let n_c = 10;
    let h = build_single_site_et(&p, n_c).unwrap();
    let space = h.space().clone();
    let a = mode_annihilation(&space, 1).unwrap();
    let model = LindbladModel::new(h, BathParams::new(0.05, 0.05).unwrap().channels(&a), OMEGA0).unwrap();
    let dense = steady_state_dense(&model).unwrap();
    let long = steady_state_long_time(&model, &DensityMatrix::maximally_mixed(&space), 1e7, &IntegratorConfig::default()).unwrap();
    let d = dense.trace_distance(&long).unwrap();
    assert!(d < 1e-6, "trace distance {d}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_keeps_a_density_matrix(
        de in 0.5f64..3.0,
        g in 0.0f64..1.5,
        v in 0.001f64..0.05,
        gamma in 0.005f64..0.2,
        n_bar in 0.0f64..0.2,
        n0 in 0.0f64..0.2,
    ) {
        let p = EtParams::new(de, g, v, OMEGA0).unwrap();
        let n_c = 8;
        let h = build_single_site_et(&p, n_c).unwrap();
        let space = h.space().clone();
        let a = mode_annihilation(&space, 1).unwrap();
        let model = LindbladModel::new(h, BathParams::new(gamma, n_bar).unwrap().channels(&a), OMEGA0).unwrap();
        let up = DensityMatrix::pure(&StateVector::basis(&SpaceSpec::qubit(), &[0]).unwrap()).unwrap();
        let rho0 = up.tensor(&displaced_thermal(n0, -p.g_tilde() / 2.0, n_c).unwrap());
        let cfg = IntegratorConfig { sample_dt_ms: 0.2, ..IntegratorConfig::default() };
        let s = evolve(&model, &rho0, 200.0, &cfg, &[]).unwrap();
        prop_assert!(s.quality.max_trace_error < 1e-7);
        prop_assert!(s.quality.min_eigenvalue >= -1e-6);
        let m = s.final_state.matrix();
        prop_assert_eq!(m.clone(), m.adjoint());
    }
}

#[test]
fn closed_system_has_no_unique_steady_state() {
    let (_, _, num) = fock_ops::<f64>(4).unwrap();
    let model = LindbladModel::new(num, vec![], OMEGA0).unwrap();
    assert!(matches!(steady_state_dense(&model), Err(etpump::Error::DegenerateSteadyState { .. })));
}
