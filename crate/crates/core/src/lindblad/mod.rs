//! Lindblad master equation: matrix-free right-hand side, adaptive
//! integration with sampled observables, and steady-state solvers.

mod integrate;
mod observe;
mod steady;

pub use integrate::{evolve, IntegratorConfig, Quality, TimeSeries};
pub use observe::Observable;
pub use steady::{delta_e_sweep, steady_state, steady_state_dense, steady_state_long_time, SweepTable};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator, SpaceSpec};
use crate::scalar::{c, Mat, Real};
use crate::sparse::CsrMatrix;

/// `dρ/dt = −i[H,ρ] + Σ rate·(cρc† − ½{c†c,ρ})`, energies and rates in ω₀.
///
/// `omega0_rad_per_ms` fixes the physical time unit: one unit of model time
/// is `1/ω₀`, and `t[ms] = t[1/ω₀] / ω₀[rad/ms]`.
#[derive(Clone, Debug)]
pub struct LindbladModel<T: Real> {
    h: Operator<T>,
    channels: Vec<(Operator<T>, T)>,
    omega0_rad_per_ms: T,
}

impl<T: Real> LindbladModel<T> {
    pub fn new(h: Operator<T>, channels: Vec<(Operator<T>, T)>, omega0_rad_per_ms: T) -> Result<Self> {
        for (op, rate) in &channels {
            if op.space() != h.space() {
                return Err(Error::SpaceMismatch);
            }
            if !(*rate >= T::zero()) || !rate.is_finite() {
                return Err(Error::InvalidParameter(format!("channel rate must be finite and ≥ 0, got {rate}")));
            }
        }
        if !(omega0_rad_per_ms > T::zero()) || !omega0_rad_per_ms.is_finite() {
            return Err(Error::InvalidParameter(format!("ω₀ must be positive, got {omega0_rad_per_ms} rad/ms")));
        }
        Ok(Self { h, channels, omega0_rad_per_ms })
    }

    pub fn h(&self) -> &Operator<T> {
        &self.h
    }

    pub fn channels(&self) -> &[(Operator<T>, T)] {
        &self.channels
    }

    pub fn space(&self) -> &SpaceSpec {
        self.h.space()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn omega0_rad_per_ms(&self) -> T {
        self.omega0_rad_per_ms
    }

    /// Milliseconds to model time.
    pub fn ms_to_model(&self, t_ms: T) -> T {
        t_ms * self.omega0_rad_per_ms
    }

    /// Model time to milliseconds.
    pub fn model_to_ms(&self, t: T) -> T {
        t / self.omega0_rad_per_ms
    }

    /// Dense `d² × d²` Liouvillian acting on column-stacked `vec(ρ)`.
    pub fn liouvillian(&self) -> Mat<T> {
        let d = self.dim();
        let id = DMatrix::identity(d, d);
        let mi = c(T::zero(), -T::one());
        let half = c(T::lit(0.5), T::zero());
        let h = self.h.matrix();
        let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * mi;
        for (op, rate) in &self.channels {
            let cm = op.matrix();
            let cdc = cm.adjoint() * cm;
            let term = cm.conjugate().kronecker(cm) - (id.kronecker(&cdc) + cdc.transpose().kronecker(&id)) * half;
            l += term * c(*rate, T::zero());
        }
        l
    }
}

/// Precompiled right-hand side with scratch space.
pub(crate) struct Rhs<T: Real> {
    /// `−iH − ½Σ rate·c†c`
    drift: CsrMatrix<T>,
    jumps: Vec<(CsrMatrix<T>, T)>,
    scratch: Mat<T>,
    scratch2: Mat<T>,
}

impl<T: Real> Rhs<T> {
    pub(crate) fn new(model: &LindbladModel<T>) -> Self {
        let d = model.dim();
        let mut drift = model.h.matrix() * c(T::zero(), -T::one());
        let mut jumps = Vec::new();
        for (op, rate) in &model.channels {
            if *rate == T::zero() {
                continue;
            }
            let cm = op.matrix();
            drift -= (cm.adjoint() * cm) * c(T::lit(0.5) * *rate, T::zero());
            jumps.push((CsrMatrix::from_dense(cm), *rate));
        }
        Self {
            drift: CsrMatrix::from_dense(&drift),
            jumps,
            scratch: DMatrix::zeros(d, d),
            scratch2: DMatrix::zeros(d, d),
        }
    }

    /// `out = L[ρ]` for Hermitian `ρ`; the result is Hermitized.
    pub(crate) fn eval(&mut self, rho: &Mat<T>, out: &mut Mat<T>) {
        let d = rho.nrows();
        self.drift.mul_dense_into(rho, out);
        // X + X† where X = (−iH − ½Σc†c)ρ; since ρ = ρ†, X† is the right-hand product.
        for j in 0..d {
            for i in 0..j {
                let s = out[(i, j)] + out[(j, i)].conj();
                out[(i, j)] = s;
                out[(j, i)] = s.conj();
            }
            let djj = out[(j, j)];
            out[(j, j)] = c(djj.re + djj.re, T::zero());
        }
        for (cm, rate) in &self.jumps {
            cm.mul_dense_into(rho, &mut self.scratch);
            self.scratch.adjoint_to(&mut self.scratch2);
            cm.mul_dense_into(&self.scratch2, &mut self.scratch);
            let r = *rate;
            for (o, s) in out.as_mut_slice().iter_mut().zip(self.scratch.as_slice()) {
                *o += s * r;
            }
        }
        crate::scalar::hermitize(out);
    }
}

/// `L[ρ]` evaluated matrix-free.
pub fn rhs<T: Real>(model: &LindbladModel<T>, rho: &DensityMatrix<T>) -> Result<Mat<T>> {
    if rho.space() != model.space() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: rho.dim() });
    }
    let mut out = DMatrix::zeros(model.dim(), model.dim());
    Rhs::new(model).eval(rho.matrix(), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fock_ops, StateVector};
    use crate::scalar::max_abs;

    fn oscillator(n_c: usize, gamma: f64, n_bar: f64) -> LindbladModel<f64> {
        let (a, _, n) = fock_ops::<f64>(n_c).unwrap();
        let bath = crate::models::BathParams::new(gamma, n_bar).unwrap();
        LindbladModel::new(n, bath.channels(&a), 1.0).unwrap()
    }

    #[test]
    fn zero_model_gives_zero() {
        let space = SpaceSpec::boson(4).unwrap();
        let m = LindbladModel::new(Operator::zeros(&space), vec![], 1.0).unwrap();
        let rho = DensityMatrix::maximally_mixed(&space);
        assert_eq!(max_abs(&rhs(&m, &rho).unwrap()), 0.0);
    }

    #[test]
    fn one_jump_rate() {
        let m = oscillator(5, 0.3, 0.0);
        let one = StateVector::basis(m.space(), &[1]).unwrap();
        let r = rhs(&m, &DensityMatrix::pure(&one).unwrap()).unwrap();
        let (_, _, n) = fock_ops::<f64>(5).unwrap();
        let dn = (n.matrix() * &r).trace();
        assert!((dn.re + 0.3).abs() < 1e-14);
    }

    #[test]
    fn matches_dense_liouvillian() {
        let m = oscillator(4, 0.2, 0.3);
        let d = m.dim();
        let mut rho = DMatrix::from_fn(d, d, |i, j| c((i + 2 * j) as f64 * 0.01, (i as f64 - j as f64) * 0.02));
        rho = &rho * rho.adjoint();
        let tr = rho.trace();
        rho /= tr;
        let dm = DensityMatrix::new(m.space().clone(), rho.clone()).unwrap();
        let fast = rhs(&m, &dm).unwrap();
        let vec = rho.reshape_generic(nalgebra::Dyn(d * d), nalgebra::Const::<1>);
        let slow = (m.liouvillian() * vec).reshape_generic(nalgebra::Dyn(d), nalgebra::Dyn(d));
        assert!(max_abs(&(fast - slow)) < 1e-14);
    }

    #[test]
    fn rejects_bad_rates_and_spaces() {
        let (a, _, n) = fock_ops::<f64>(3).unwrap();
        assert!(LindbladModel::new(n.clone(), vec![(a, -1.0)], 1.0).is_err());
        let (b, _, _) = fock_ops::<f64>(4).unwrap();
        assert!(LindbladModel::new(n.clone(), vec![(b, 1.0)], 1.0).is_err());
        assert!(LindbladModel::new(n, vec![], 0.0).is_err());
    }
}
