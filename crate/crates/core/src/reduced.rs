//! Reduced three-level description of the damped ET transfer
//! `|1⟩ = |D,0⟩ → |2⟩ = |A,n⟩ → |3⟩ = |A,0⟩`.
//!
//! The state is `ρ⃗ = (ρ₁₁, Im ρ₁₂, ρ₂₂)` with `ρ₃₃ = 1 − ρ₁₁ − ρ₂₂`, and
//! `∂ₜρ⃗ = Mρ⃗` with `M = [[0, −2Vₑ, 0], [Vₑ, −g′γ, −Vₑ], [0, 2Vₑ, −γ]]`.

use nalgebra::{ComplexField, Matrix3, Schur, Vector3};

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, StateVector};
use crate::models::{check_perturbative, franck_condon, vibronic_state, BathParams, Branch, EtParams, Scheme};
use crate::scalar::{cr, Real, C};

/// `Vₑ = −V g̃ e^{−g̃²/2} ⟨e₂|H_int|e₁⟩`
pub fn effective_rabi<T: Real>(v: T, g_tilde: T, matrix_element: C<T>) -> C<T> {
    matrix_element * cr(-v * franck_condon(g_tilde, 1))
}

/// `Vₑᵐ = √((N−m)(m+1)) J g̃ e^{−g̃²/2}`, the Rabi frequency of Dicke step
/// `m → m+1` on `N` targets. Requires `m < N`.
pub fn dicke_step_rabi<T: Real>(n_targets: usize, step: usize, j: T, g_tilde: T) -> Result<T> {
    if step >= n_targets {
        return Err(Error::StepOutOfRange { step, n_targets });
    }
    let weight = T::from_usize_lossy((n_targets - step) * (step + 1)).sqrt();
    Ok(weight * j * franck_condon(g_tilde, 1))
}

/// `Vₛ = √(Σₖ V′ₖ²)` with `V′ₖ = −Jₖ g̃ e^{−g̃²/2}`.
pub fn aggregate_rabi<T: Real>(couplings: &[T], g_tilde: T) -> T {
    let fc = franck_condon(g_tilde, 1);
    couplings.iter().fold(T::zero(), |acc, &j| acc + (j * fc) * (j * fc)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedModel<T: Real> {
    pub v_e: T,
    pub gamma: T,
    pub g_tilde: T,
    /// Set when the parameters lie outside the perturbative regime; the
    /// model still solves, but its predictions are advisory.
    pub advisory: bool,
}

impl<T: Real> ReducedModel<T> {
    pub fn new(v_e: T, gamma: T, g_tilde: T) -> Result<Self> {
        if !v_e.is_finite() || !g_tilde.is_finite() || !gamma.is_finite() || gamma < T::zero() {
            return Err(Error::InvalidParameter(format!("invalid reduced model (Vₑ={v_e}, γ={gamma}, g̃={g_tilde})")));
        }
        Ok(Self { v_e, gamma, g_tilde, advisory: false })
    }

    /// Single-site model with `Vₑ = −Vg̃e^{−g̃²/2}`, flagged when the
    /// perturbative conditions fail.
    pub fn from_et(p: &EtParams<T>, gamma: T) -> Result<Self> {
        let v_e = effective_rabi(p.v(), p.g_tilde(), cr(T::one())).re;
        let mut rm = Self::new(v_e, gamma, p.g_tilde())?;
        let report = check_perturbative(p, &BathParams::new(gamma, T::zero())?, &Scheme::Extended { gaps: vec![] });
        rm.advisory = !report.all_satisfied();
        Ok(rm)
    }

    /// `g′ = (1 + g̃²)/2`
    pub fn g_prime(&self) -> T {
        (T::one() + self.g_tilde * self.g_tilde) * T::lit(0.5)
    }

    pub fn m_matrix(&self) -> Matrix3<T> {
        let (v, g) = (self.v_e, self.gamma);
        let two = T::lit(2.0);
        Matrix3::new(
            T::zero(), -two * v, T::zero(),
            v, -self.g_prime() * g, -v,
            T::zero(), two * v, -g,
        )
    }

    /// `−2Vₑ²γ`
    pub fn determinant(&self) -> T {
        -T::lit(2.0) * self.v_e * self.v_e * self.gamma
    }
}

/// Reduced-model populations and coherence at sampled times.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedTrajectory<T: Real> {
    pub times: Vec<T>,
    pub rho11: Vec<T>,
    pub im_rho12: Vec<T>,
    pub rho22: Vec<T>,
    pub rho33: Vec<T>,
    /// Some population left `[−1e−9, 1 + 1e−9]`.
    pub out_of_range: bool,
}

/// Eigenvector of a 3×3 matrix for eigenvalue `lambda` from the largest
/// cross product of two rows of `M − λI`.
fn eigenvector<T: Real>(m: &Matrix3<T>, lambda: C<T>) -> Vector3<C<T>> {
    let a = m.map(cr) - Matrix3::from_diagonal_element(lambda);
    let rows = [a.row(0).transpose(), a.row(1).transpose(), a.row(2).transpose()];
    let cross = |u: &Vector3<C<T>>, w: &Vector3<C<T>>| {
        Vector3::new(u[1] * w[2] - u[2] * w[1], u[2] * w[0] - u[0] * w[2], u[0] * w[1] - u[1] * w[0])
    };
    let mut best = Vector3::zeros();
    let mut best_norm = T::zero();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let v = cross(&rows[i], &rows[j]);
        let n = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if n > best_norm {
            best_norm = n;
            best = v / cr(n);
        }
    }
    best
}

fn eigenvalues<T: Real>(m: &Matrix3<T>) -> Option<[C<T>; 3]> {
    let schur = Schur::try_new(*m, T::default_epsilon(), 10_000)?;
    let ev = schur.complex_eigenvalues();
    Some([ev[0], ev[1], ev[2]])
}

fn solve_by_exponential<T: Real>(rm: &ReducedModel<T>, y0: Vector3<T>, times: &[T]) -> ReducedTrajectory<T> {
    let m = rm.m_matrix();
    let ys: Vec<Vector3<T>> = times.iter().map(|&t| (m * t).exp() * y0).collect();
    collect(times, ys)
}

fn collect<T: Real>(times: &[T], ys: Vec<Vector3<T>>) -> ReducedTrajectory<T> {
    let mut traj = ReducedTrajectory {
        times: times.to_vec(),
        rho11: Vec::with_capacity(times.len()),
        im_rho12: Vec::with_capacity(times.len()),
        rho22: Vec::with_capacity(times.len()),
        rho33: Vec::with_capacity(times.len()),
        out_of_range: false,
    };
    let tol = T::lit(1e-9);
    for y in ys {
        let r33 = T::one() - y[0] - y[2];
        for p in [y[0], y[2], r33] {
            if p < -tol || p > T::one() + tol {
                traj.out_of_range = true;
            }
        }
        traj.rho11.push(y[0]);
        traj.im_rho12.push(y[1]);
        traj.rho22.push(y[2]);
        traj.rho33.push(r33);
    }
    if traj.out_of_range {
        log::warn!("reduced-model populations left [0, 1]");
    }
    traj
}

/// `ρ⃗(t) = Σᵢ cᵢ e^{λᵢt} vᵢ` when the eigenbasis is well conditioned,
/// otherwise `exp(Mt)ρ⃗₀`.
pub fn solve_reduced<T: Real>(rm: &ReducedModel<T>, rho0: [T; 3], times: &[T]) -> ReducedTrajectory<T> {
    let m = rm.m_matrix();
    let y0 = Vector3::new(rho0[0], rho0[1], rho0[2]);
    let Some(lambdas) = eigenvalues(&m) else {
        return solve_by_exponential(rm, y0, times);
    };
    let vecs: Vec<Vector3<C<T>>> = lambdas.iter().map(|&l| eigenvector(&m, l)).collect();
    let basis = Matrix3::from_columns(&vecs);
    let scale = T::one() + rm.v_e.abs() + rm.gamma;
    let coeffs = if basis.determinant().norm_sqr().sqrt() > T::lit(1e-8) {
        basis.lu().solve(&y0.map(cr))
    } else {
        None
    };
    let ys = times
        .iter()
        .map(|&t| match &coeffs {
            Some(c) if (basis * c - y0.map(cr)).norm() < T::lit(1e-10) * scale => {
                let mut acc = Vector3::<C<T>>::zeros();
                for k in 0..3 {
                    acc += vecs[k] * (c[k] * <C<T> as ComplexField>::exp(lambdas[k] * cr(t)));
                }
                acc.map(|z| z.re)
            }
            _ => (m * t).exp() * y0,
        })
        .collect();
    collect(times, ys)
}

/// Spectrum of `M` and the slowest decay rate `λ̃ = max Re λᵢ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferAnalysis<T: Real> {
    pub eigenvalues: [C<T>; 3],
    pub lambda_tilde: T,
    /// `γ` maximizing `|λ̃|` at fixed `Vₑ` and `g̃`.
    pub optimal_gamma: T,
}

fn lambda_tilde<T: Real>(m: &Matrix3<T>) -> (T, [C<T>; 3]) {
    let arr = eigenvalues(m).unwrap_or_else(|| {
        log::warn!("Schur iteration did not converge for the reduced model");
        [cr(T::lit(f64::NAN)); 3]
    });
    let lt = arr.iter().fold(T::min_value().unwrap(), |acc, z| acc.max(z.re));
    (lt, arr)
}

/// `|λ̃|` for each `γ` at fixed `Vₑ`, `g̃`.
pub fn transfer_rate_scan<T: Real>(v_e: T, g_tilde: T, gammas: &[T]) -> Vec<T> {
    gammas
        .iter()
        .map(|&g| {
            let rm = ReducedModel { v_e, gamma: g, g_tilde, advisory: false };
            lambda_tilde(&rm.m_matrix()).0.abs()
        })
        .collect()
}

/// `n` points logarithmically spaced over `[lo, hi]`.
pub fn log_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::from_usize_lossy(n - 1);
    (0..n).map(|k| (a + step * T::from_usize_lossy(k)).exp()).collect()
}

fn optimal_gamma<T: Real>(v_e: T, g_tilde: T) -> T {
    let v = v_e.abs();
    if v == T::zero() {
        return T::zero();
    }
    // golden-section search on ln γ over [0.01 Vₑ, 100 Vₑ]
    let f = |x: T| transfer_rate_scan(v, g_tilde, &[x.exp()])[0];
    let (mut a, mut b) = ((v * T::lit(0.01)).ln(), (v * T::lit(100.0)).ln());
    let r = T::lit(0.618_033_988_749_894_8);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
        if (b - a).abs() < T::lit(1e-12) {
            break;
        }
    }
    ((a + b) * T::lit(0.5)).exp()
}

pub fn transfer_rate<T: Real>(rm: &ReducedModel<T>) -> TransferAnalysis<T> {
    let (lt, eigenvalues) = lambda_tilde(&rm.m_matrix());
    TransferAnalysis { eigenvalues, lambda_tilde: lt, optimal_gamma: optimal_gamma(rm.v_e, rm.g_tilde) }
}

/// `|1⟩ = |D,0⟩`, `|2⟩ = |A,n⟩` with `n = round(ΔE/ω₀)`, `|3⟩ = |A,0⟩` on
/// `[Qubit, Boson(n_c)]`.
pub fn et_levels<T: Real>(p: &EtParams<T>, n_c: usize) -> Result<[StateVector<T>; 3]> {
    let n = p.delta_e().as_f64().abs().round() as usize;
    Ok([
        vibronic_state(Branch::Donor, 0, p, n_c)?,
        vibronic_state(Branch::Acceptor, n, p, n_c)?,
        vibronic_state(Branch::Acceptor, 0, p, n_c)?,
    ])
}

/// Matrix elements of a full-model state in the reduced basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedProjection<T: Real> {
    pub rho11: T,
    pub rho22: T,
    pub rho33: T,
    pub im_rho12: T,
    pub abs_rho13: T,
    pub abs_rho23: T,
}

pub fn project_full_state<T: Real>(rho: &DensityMatrix<T>, basis: &[StateVector<T>; 3]) -> Result<ReducedProjection<T>> {
    let mut worst = T::zero();
    for i in 0..3 {
        if basis[i].space() != rho.space() {
            return Err(Error::SpaceMismatch);
        }
        for j in 0..3 {
            let ov = basis[i].inner(&basis[j])?;
            let expected = if i == j { T::one() } else { T::zero() };
            worst = worst.max((ov - cr(expected)).norm_sqr().sqrt());
        }
    }
    if worst > T::lit(1e-8) {
        return Err(Error::NonOrthonormalBasis(worst.as_f64()));
    }
    let el = |i: usize, j: usize| -> C<T> {
        let applied = rho.matrix() * basis[j].amplitudes();
        basis[i].amplitudes().dotc(&applied)
    };
    Ok(ReducedProjection {
        rho11: el(0, 0).re,
        rho22: el(1, 1).re,
        rho33: el(2, 2).re,
        im_rho12: el(0, 1).im,
        abs_rho13: el(0, 2).norm_sqr().sqrt(),
        abs_rho23: el(1, 2).norm_sqr().sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rabi_formulas() {
        let ve = effective_rabi(0.01, 1.0, cr(1.0));
        assert!((ve.re + 0.01 * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(effective_rabi(0.01, 0.0, cr(1.0)).re, 0.0);
        let v0 = dicke_step_rabi(4, 0, 0.025, 1.0).unwrap();
        assert!((v0 - 0.05 * (-0.5f64).exp()).abs() < 1e-15);
        assert!((aggregate_rabi(&[0.025; 4], 1.0) - v0).abs() < 1e-15);
        assert!(matches!(dicke_step_rabi(4, 4, 0.025, 1.0), Err(Error::StepOutOfRange { step: 4, n_targets: 4 })));
    }

    #[test]
    fn m_matrix_layout() {
        let rm = ReducedModel::<f64>::new(0.3, 0.5, 1.0).unwrap();
        let m = rm.m_matrix();
        assert_eq!(m, Matrix3::new(0.0, -0.6, 0.0, 0.3, -0.5, -0.3, 0.0, 0.6, -0.5));
        assert!((m.determinant() - rm.determinant()).abs() < 1e-15);
    }

    #[test]
    fn full_transfer_and_rabi_limit() {
        let rm = ReducedModel::new(0.006, 0.012, 1.0).unwrap();
        let tr = solve_reduced(&rm, [1.0, 0.0, 0.0], &[0.0, 100.0, 20000.0]);
        assert!(tr.rho11[2] + tr.rho22[2] < 1e-6);
        assert!(!tr.out_of_range);
        let closed = ReducedModel::new(0.01, 0.0, 1.0).unwrap();
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 5.0).collect();
        let tr = solve_reduced(&closed, [1.0, 0.0, 0.0], &times);
        for (k, &t) in times.iter().enumerate() {
            assert!((tr.rho11[k] + tr.rho22[k] - 1.0).abs() < 1e-10);
            // two-level Rabi flopping at frequency 2Vₑ
            assert!((tr.rho11[k] - (0.01 * t).cos().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn defective_fallback_agrees() {
        // force the exponential path by comparing against it directly
        let rm = ReducedModel::<f64>::new(0.02, 0.04, 1.0).unwrap();
        let tr = solve_reduced(&rm, [1.0, 0.0, 0.0], &[37.0]);
        let y = (rm.m_matrix() * 37.0).exp() * Vector3::new(1.0, 0.0, 0.0);
        assert!((tr.rho11[0] - y[0]).abs() < 1e-12 && (tr.rho22[0] - y[2]).abs() < 1e-12);
    }

    #[test]
    fn optimal_gamma_near_two_ve() {
        let a = transfer_rate(&ReducedModel::new(0.01, 0.02, 1.0).unwrap());
        assert!(a.lambda_tilde < 0.0);
        assert!(a.optimal_gamma > 0.015 && a.optimal_gamma < 0.025, "{}", a.optimal_gamma);
    }

    #[test]
    fn projection_of_simple_states() {
        let p = EtParams::<f64>::new(1.0, 1.0, 0.01, 1.0).unwrap();
        let basis = et_levels(&p, 12).unwrap();
        let rho = DensityMatrix::pure(&basis[0]).unwrap();
        let r = project_full_state(&rho, &basis).unwrap();
        assert!((r.rho11 - 1.0).abs() < 1e-12 && r.rho22.abs() < 1e-12 && r.rho33.abs() < 1e-12);
        let mixed = (rho.matrix() + DensityMatrix::pure(&basis[2]).unwrap().matrix()) * cr(0.5);
        let rho = DensityMatrix::new(p_space(&basis), mixed).unwrap();
        let r = project_full_state(&rho, &basis).unwrap();
        assert!((r.rho11 - 0.5).abs() < 1e-12 && (r.rho33 - 0.5).abs() < 1e-12 && r.im_rho12.abs() < 1e-12);
        let bad = [basis[0].clone(), basis[0].clone(), basis[2].clone()];
        assert!(matches!(project_full_state(&rho, &bad), Err(Error::NonOrthonormalBasis(_))));
    }

    fn p_space(b: &[StateVector<f64>; 3]) -> crate::hilbert::SpaceSpec {
        b[0].space().clone()
    }
}
