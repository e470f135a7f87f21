use nalgebra::{DMatrix, DVector, Dyn};

use super::integrate::propagate;
use super::{IntegratorConfig, LindbladModel, Rhs};
use crate::error::{Error, Result};
use crate::hilbert::{embed, pauli_ops, DensityMatrix, Operator};
use crate::models::{build_single_site_et, mode_annihilation, BathParams, EtParams, DEFAULT_DIM_GUARD};
use crate::scalar::{hermitize, max_abs, Mat, Real, C};

/// Residual `‖L[ρ]‖_max` accepted for a returned steady state.
pub const STEADY_RESIDUAL: f64 = 1e-8;
/// Convergence threshold of the long-time route.
pub const LONG_TIME_RESIDUAL: f64 = 1e-11;

fn residual<T: Real>(model: &LindbladModel<T>, rho: &Mat<T>) -> T {
    let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
    Rhs::new(model).eval(rho, &mut out);
    max_abs(&out)
}

fn normalized<T: Real>(mut m: Mat<T>) -> Mat<T> {
    let tr = m.trace();
    m /= tr;
    hermitize(&mut m);
    m
}

/// Null vector of the dense Liouvillian. The `ρ₀₀` row of `L vec(ρ) = 0` is
/// redundant with trace preservation, so it is replaced by `Tr ρ = 1` and the
/// system is solved by LU. Requires `d² ≤ 4096`.
pub fn steady_state_dense<T: Real>(model: &LindbladModel<T>) -> Result<DensityMatrix<T>> {
    let d = model.dim();
    if d * d > DEFAULT_DIM_GUARD {
        return Err(Error::DimensionGuard { dim: d * d, limit: DEFAULT_DIM_GUARD });
    }
    let n = d * d;
    let mut l = model.liouvillian();
    let scale = l.iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt())).max(T::one());
    l.row_mut(0).fill(C::new(T::zero(), T::zero()));
    for i in 0..d {
        l[(0, i * (d + 1))] = C::new(scale, T::zero());
    }
    let lu = l.lu();
    let u = lu.u();
    let pivots: Vec<T> = (0..n).map(|k| u[(k, k)].norm_sqr().sqrt()).collect();
    let p_max = pivots.iter().copied().fold(T::zero(), T::max);
    let tiny = pivots.iter().filter(|&&p| p <= p_max * T::lit(1e-12)).count();
    if tiny > 0 {
        return Err(Error::DegenerateSteadyState { count: tiny + 1 });
    }
    let mut b = DVector::zeros(n);
    b[0] = C::new(scale, T::zero());
    let vec = lu.solve(&b).ok_or(Error::DegenerateSteadyState { count: 2 })?;
    let rho = normalized(vec.reshape_generic(Dyn(d), Dyn(d)));
    let res = residual(model, &rho);
    if !(res < T::lit(STEADY_RESIDUAL)) {
        return Err(Error::NotConverged { t: f64::INFINITY, residual: res.as_f64() });
    }
    DensityMatrix::new_unchecked(model.space().clone(), rho)
}

/// Gershgorin bound on `λ_max − λ_min` of a Hermitian matrix.
fn spectral_spread_bound<T: Real>(h: &Mat<T>) -> T {
    let (mut lo, mut hi) = (T::max_value().unwrap(), T::min_value().unwrap());
    for i in 0..h.nrows() {
        let r = (0..h.ncols()).filter(|&j| j != i).fold(T::zero(), |a, j| a + h[(i, j)].norm_sqr().sqrt());
        lo = lo.min(h[(i, i)].re - r);
        hi = hi.max(h[(i, i)].re + r);
    }
    (hi - lo).max(T::one())
}

/// Integrates from `rho0` until `‖L[ρ]‖_max < 1e−11` or `t_max` (model time).
pub fn steady_state_long_time<T: Real>(
    model: &LindbladModel<T>,
    rho0: &DensityMatrix<T>,
    t_max: T,
    cfg: &IntegratorConfig<T>,
) -> Result<DensityMatrix<T>> {
    cfg.validate()?;
    if rho0.space() != model.space() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: rho0.dim() });
    }
    let mut rho = rho0.matrix().clone();
    let threshold = T::lit(LONG_TIME_RESIDUAL);
    // DP5 amplifies modes with |hω| ≳ 1.5 on the imaginary axis. Weakly damped fast
    // coherences would otherwise hold the step controller at that edge and the
    // residual would stall at the tolerance level.
    let cap = T::one() / spectral_spread_bound(model.h().matrix());
    let cfg = IntegratorConfig { max_step: Some(cfg.max_step.map_or(cap, |h| h.min(cap))), ..*cfg };
    let t = propagate(model, &mut rho, t_max, &cfg, T::lit(10.0), |_, f| max_abs(f) < threshold)?;
    let rho = normalized(rho);
    let res = residual(model, &rho);
    if !(res < threshold) {
        return Err(Error::NotConverged { t: t.as_f64(), residual: res.as_f64() });
    }
    DensityMatrix::new_unchecked(model.space().clone(), rho)
}

/// Dense route when `d² ≤ 4096`, otherwise long-time integration from the
/// maximally mixed state with a horizon of `10⁶/ω₀`.
pub fn steady_state<T: Real>(model: &LindbladModel<T>) -> Result<DensityMatrix<T>> {
    let d = model.dim();
    if d * d <= DEFAULT_DIM_GUARD {
        steady_state_dense(model)
    } else {
        let rho0 = DensityMatrix::maximally_mixed(model.space());
        steady_state_long_time(model, &rho0, T::lit(1e6), &IntegratorConfig::default())
    }
}

/// Steady-state donor populations over a grid of resonant splittings.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable<T: Real> {
    pub delta_e: Vec<T>,
    pub n_bars: Vec<T>,
    /// `p_donor[i][j]` at `n_bars[i]`, `delta_e[j]`.
    pub p_donor: Vec<Vec<T>>,
}

impl<T: Real> SweepTable<T> {
    /// Grid index of the smallest donor population for temperature row `i`.
    pub fn argmin(&self, i: usize) -> usize {
        let row = &self.p_donor[i];
        (0..row.len()).min_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap()).unwrap_or(0)
    }

    pub fn optimum_delta_e(&self, i: usize) -> T {
        self.delta_e[self.argmin(i)]
    }
}

/// `P_D = ⟨(1 + σᶻ)/2⟩` of the single-site ET steady state for `ΔE = nω₀`,
/// one row per bath occupation.
pub fn delta_e_sweep<T: Real>(
    template: &EtParams<T>,
    n_c: usize,
    gamma: T,
    n_bars: &[T],
    n_values: &[usize],
) -> Result<SweepTable<T>> {
    if n_values.iter().any(|&n| n == 0) {
        return Err(Error::InvalidParameter("ΔE grid points must be positive multiples of ω₀".into()));
    }
    let delta_e: Vec<T> = n_values.iter().map(|&n| T::from_usize_lossy(n)).collect();
    let mut p_donor = Vec::with_capacity(n_bars.len());
    for &n_bar in n_bars {
        let bath = BathParams::new(gamma, n_bar)?;
        let mut row = Vec::with_capacity(delta_e.len());
        for &de in &delta_e {
            let p = template.with_delta_e(de);
            let h = build_single_site_et(&p, n_c)?;
            let space = h.space().clone();
            let a = mode_annihilation(&space, 1)?;
            let model = LindbladModel::new(h, bath.channels(&a), template.omega0_rad_per_ms())?;
            let rho = steady_state(&model)?;
            let sz = embed(&pauli_ops::<T>().z, 0, &space)?;
            let proj = (Operator::identity(&space) + sz).scale(T::lit(0.5));
            row.push(rho.expectation(&proj)?);
            log::debug!("sweep n̄={n_bar} ΔE={de}: P_D={}", row.last().unwrap());
        }
        p_donor.push(row);
    }
    Ok(SweepTable { delta_e, n_bars: n_bars.to_vec(), p_donor })
}
