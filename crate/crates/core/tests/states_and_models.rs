use etpump::hilbert::{partial_trace, DensityMatrix, SpaceSpec, StateVector};
use etpump::models::{displaced_fock, franck_condon, ms_coupling_matrix, MsDriveSpec, SpinNetwork};
use etpump::protocol::{apply_noise, NoiseSpec};
use etpump::states::{dicke_state, ghz_state, thermal_populations, GhzSign};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn dicke_amplitudes_are_uniform_over_the_excitation_shell() {
    for n in 1..=5 {
        for m in 0..=n {
            let psi = dicke_state::<f64>(n, m).unwrap();
            let space = psi.space().clone();
            let amp = 1.0 / binomial(n, m).sqrt();
            for (i, a) in psi.amplitudes().iter().enumerate() {
                let ups = space.levels_of(i).iter().filter(|&&l| l == 0).count();
                let want = if ups == m { amp } else { 0.0 };
                assert!((a.re - want).abs() < 1e-14 && a.im.abs() < 1e-14, "N={n} m={m} i={i}");
            }
        }
    }
}

#[test]
fn ghz_sign_and_reduced_state() {
    let plus = ghz_state::<f64>(3, GhzSign::Plus).unwrap();
    let minus = ghz_state::<f64>(3, GhzSign::Minus).unwrap();
    assert!(plus.inner(&minus).unwrap().norm() < 1e-15);
    // every single-qubit marginal of a GHZ state is maximally mixed
    let rho = DensityMatrix::pure(&plus).unwrap();
    let one = partial_trace(&rho, &[1]).unwrap();
    let want = DensityMatrix::maximally_mixed(&SpaceSpec::qubit());
    assert!(one.trace_distance(&want).unwrap() < 1e-14);
}

#[test]
fn franck_condon_is_a_poisson_amplitude() {
    for g in [0.3f64, 1.0, 1.7] {
        let vac = StateVector::basis(&SpaceSpec::boson(40).unwrap(), &[0]).unwrap();
        for n in 0..6 {
            let shifted = displaced_fock(g, n, 40).unwrap();
            let overlap = vac.inner(&shifted).unwrap().norm();
            let oracle = (-g * g / 2.0).exp() * g.powi(n as i32) / factorial(n).sqrt();
            assert!((overlap - oracle).abs() < 1e-10, "g={g} n={n}: {overlap} vs {oracle}");
            assert!((franck_condon(g, n) - oracle).abs() < 1e-14);
        }
    }
}

#[test]
fn thermal_distribution_has_the_right_mean() {
    for n_bar in [0.0f64, 0.05, 0.1, 1.0] {
        let p = thermal_populations(n_bar, 80).unwrap();
        let total: f64 = p.iter().sum();
        let mean: f64 = p.iter().enumerate().map(|(n, x)| n as f64 * x).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!((mean - n_bar).abs() < 1e-10, "n̄={n_bar}: {mean}");
    }
}

fn single_mode(omega: Vec<f64>, eta: Vec<f64>, w: f64, mu: f64) -> MsDriveSpec<f64> {
    let n = omega.len();
    MsDriveSpec { omega, eta: DMatrix::from_vec(n, 1, eta), mode_freqs: vec![w], mu, phi: vec![0.0; n], psi: vec![0.0; n] }
}

proptest! {
    #[test]
    fn ms_couplings_single_mode_closed_form(
        om in proptest::collection::vec(0.1f64..2.0, 3),
        eta in proptest::collection::vec(-0.2f64..0.2, 3),
        w in 1.0f64..5.0,
        detune in 0.05f64..0.5,
        s in 0.1f64..3.0,
    ) {
        let mu = w + detune;
        let j = ms_coupling_matrix(&single_mode(om.clone(), eta.clone(), w, mu)).unwrap();
        for a in 0..3 {
            prop_assert_eq!(j[(a, a)], 0.0);
            for b in 0..3 {
                if a != b {
                    let oracle = om[a] * om[b] * eta[a] * eta[b] * w / (mu * mu - w * w);
                    prop_assert!((j[(a, b)] - oracle).abs() <= 1e-12 * oracle.abs().max(1e-12));
                    prop_assert_eq!(j[(a, b)], j[(b, a)]);
                }
            }
        }
        // J scales as Ω_i Ω_j
        let scaled = ms_coupling_matrix(&single_mode(om.iter().map(|x| x * s).collect(), eta, w, mu)).unwrap();
        for (x, y) in scaled.iter().zip(j.iter()) {
            prop_assert!((x - s * s * y).abs() <= 1e-12 * y.abs().max(1e-12));
        }
    }

    #[test]
    fn synthetic_noise_is_reproducible(seed in 0u64..1000, delta in 0.0f64..0.2, res in 0.0f64..0.05) {
        let ideal = SpinNetwork::uniform(4, 0.025);
        let spec = NoiseSpec { delta_j: delta, j_res: res, seed, ..Default::default() };
        let a = apply_noise(&ideal, &spec).unwrap();
        let b = apply_noise(&ideal, &spec).unwrap();
        prop_assert_eq!(a.network.space_ordered_matrix(), b.network.space_ordered_matrix());
        prop_assert!(a.delta_j <= delta * 0.025 + 1e-15);
        let m = a.network.space_ordered_matrix();
        prop_assert_eq!(m.clone(), m.transpose());
    }
}
