use nalgebra::DMatrix;

use super::{LindbladModel, Observable, Rhs};
use crate::error::{Error, Result};
use crate::hilbert::DensityMatrix;
use crate::scalar::{hermitize, trace_re, Mat, Real};

/// Adaptive-step settings. `max_step` is in model time (1/ω₀); the sampling
/// interval is in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T: Real> {
    pub rtol: T,
    pub atol: T,
    pub max_step: Option<T>,
    pub sample_dt_ms: T,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self { rtol: T::lit(1e-8), atol: T::lit(1e-10), max_step: None, sample_dt_ms: T::lit(0.05) }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: T| x > T::zero() && x.is_finite();
        if !pos(self.rtol) || !pos(self.atol) {
            return Err(Error::InvalidParameter(format!("tolerances must be positive, got rtol={} atol={}", self.rtol, self.atol)));
        }
        if !pos(self.sample_dt_ms) {
            return Err(Error::InvalidParameter(format!("sample interval must be positive, got {} ms", self.sample_dt_ms)));
        }
        if let Some(h) = self.max_step {
            if !pos(h) {
                return Err(Error::InvalidParameter(format!("max_step must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

/// Trace and positivity diagnostics of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quality<T: Real> {
    /// Largest `|Tr ρ − 1|` over all samples.
    pub max_trace_error: T,
    /// Smallest eigenvalue of the final state.
    pub min_eigenvalue: T,
    pub steps: usize,
    pub rejected: usize,
}

impl<T: Real> Quality<T> {
    pub const TRACE_TOL: f64 = 1e-7;
    pub const POSITIVITY_TOL: f64 = 1e-6;

    pub fn passed(&self) -> bool {
        self.max_trace_error <= T::lit(Self::TRACE_TOL) && self.min_eigenvalue >= T::lit(-Self::POSITIVITY_TOL)
    }

    /// Worst-case combination of two runs.
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            max_trace_error: self.max_trace_error.max(other.max_trace_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
            steps: self.steps + other.steps,
            rejected: self.rejected + other.rejected,
        }
    }
}

/// Sampled observables. Times are kept both in model units and in ms.
#[derive(Clone, Debug)]
pub struct TimeSeries<T: Real> {
    pub times: Vec<T>,
    pub times_ms: Vec<T>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<T>>,
    pub final_state: DensityMatrix<T>,
    pub quality: Quality<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[T]> {
        self.names.iter().position(|n| n == name).map(|k| self.columns[k].as_slice())
    }

    pub fn last(&self, name: &str) -> Option<T> {
        self.column(name).and_then(|c| c.last().copied())
    }

    /// Value of `name` at the sample closest to `t_ms`.
    pub fn at_ms(&self, name: &str, t_ms: T) -> Option<T> {
        let col = self.column(name)?;
        let k = self
            .times_ms
            .iter()
            .enumerate()
            .min_by(|a, b| (*a.1 - t_ms).abs().partial_cmp(&(*b.1 - t_ms).abs()).unwrap())?
            .0;
        Some(col[k])
    }

    /// Appends a later segment with the same columns. Its first sample is
    /// dropped when it coincides with this series' last one.
    pub fn append(&mut self, mut next: TimeSeries<T>) -> Result<()> {
        if next.names != self.names {
            return Err(Error::InvalidSchedule("cannot join time series with different observables".into()));
        }
        let (dt, dt_ms) = match (self.times.last(), self.times_ms.last()) {
            (Some(&t), Some(&tm)) => (t, tm),
            _ => {
                *self = next;
                return Ok(());
            }
        };
        let skip = usize::from(next.times.first().is_some_and(|&t| t == T::zero()));
        self.times.extend(next.times.iter().skip(skip).map(|&t| t + dt));
        self.times_ms.extend(next.times_ms.iter().skip(skip).map(|&t| t + dt_ms));
        for (col, new) in self.columns.iter_mut().zip(next.columns.iter_mut()) {
            col.extend(new.iter().skip(skip).copied());
        }
        self.final_state = next.final_state;
        self.quality = self.quality.merge(&next.quality);
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau; the system is autonomous so the nodes are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// `out = y + h Σ coef_i k_i`
fn combine<T: Real>(out: &mut Mat<T>, y: &Mat<T>, h: T, terms: &[(f64, &Mat<T>)]) {
    let coefs: Vec<T> = terms.iter().map(|(a, _)| T::lit(*a) * h).collect();
    let slices: Vec<&[crate::C<T>]> = terms.iter().map(|(_, k)| k.as_slice()).collect();
    for (idx, (o, y0)) in out.as_mut_slice().iter_mut().zip(y.as_slice()).enumerate() {
        let mut acc = *y0;
        for (c, s) in coefs.iter().zip(&slices) {
            acc += s[idx] * *c;
        }
        *o = acc;
    }
}

fn all_finite<T: Real>(m: &Mat<T>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

struct Stepper<T: Real> {
    f: Rhs<T>,
    k: [Mat<T>; 7],
    y_new: Mat<T>,
    tmp: Mat<T>,
    rtol: T,
    atol: T,
    max_step: T,
    h: T,
    steps: usize,
    rejected: usize,
}

impl<T: Real> Stepper<T> {
    fn new(model: &LindbladModel<T>, cfg: &IntegratorConfig<T>) -> Self {
        let d = model.dim();
        let z = || DMatrix::zeros(d, d);
        Self {
            f: Rhs::new(model),
            k: [z(), z(), z(), z(), z(), z(), z()],
            y_new: z(),
            tmp: z(),
            rtol: cfg.rtol,
            atol: cfg.atol,
            max_step: cfg.max_step.unwrap_or(T::max_value().unwrap()),
            h: T::zero(),
            steps: 0,
            rejected: 0,
        }
    }

    fn initial_step(&mut self, y: &Mat<T>) -> T {
        let (d0, d1) = y.iter().zip(self.k[0].iter()).fold((T::zero(), T::zero()), |(a, b), (yv, fv)| {
            let sc = self.atol + self.rtol * yv.norm_sqr().sqrt();
            (a.max(yv.norm_sqr().sqrt() / sc), b.max(fv.norm_sqr().sqrt() / sc))
        });
        let h = if d0 < T::lit(1e-5) || d1 < T::lit(1e-5) { T::lit(1e-6) } else { T::lit(0.01) * d0 / d1 };
        h.min(self.max_step)
    }

    /// Integrates `y` from `t` to `t_end`; `k[0]` must hold `f(y)` on entry
    /// and holds `f(y(t_end))` on exit.
    fn advance(&mut self, y: &mut Mat<T>, t: &mut T, t_end: T) -> Result<()> {
        let safety = T::lit(0.9);
        let min_fac = T::lit(0.2);
        let max_fac = T::lit(10.0);
        let fifth = T::lit(0.2);
        let n = T::from_usize_lossy(y.len());
        while *t < t_end {
            let remaining = t_end - *t;
            let mut h = self.h.min(self.max_step);
            let clamped = h >= remaining;
            if clamped {
                h = remaining;
            }
            if h <= T::lit(1e-13) * (T::one() + t.abs()) && !clamped {
                return Err(Error::StepSizeUnderflow { t: t.as_f64() });
            }
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            combine(&mut self.tmp, y, h, &[(A21, k1)]);
            self.f.eval(&self.tmp, k2);
            combine(&mut self.tmp, y, h, &[(A31, k1), (A32, k2)]);
            self.f.eval(&self.tmp, k3);
            combine(&mut self.tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
            self.f.eval(&self.tmp, k4);
            combine(&mut self.tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
            self.f.eval(&self.tmp, k5);
            combine(&mut self.tmp, y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
            self.f.eval(&self.tmp, k6);
            combine(&mut self.y_new, y, h, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
            self.f.eval(&self.y_new, k7);

            let e = [T::lit(E1), T::lit(E3), T::lit(E4), T::lit(E5), T::lit(E6), T::lit(E7)];
            let mut sum = T::zero();
            for idx in 0..y.len() {
                let err = (k1.as_slice()[idx] * e[0]
                    + k3.as_slice()[idx] * e[1]
                    + k4.as_slice()[idx] * e[2]
                    + k5.as_slice()[idx] * e[3]
                    + k6.as_slice()[idx] * e[4]
                    + k7.as_slice()[idx] * e[5])
                    * h;
                let scale = self.atol
                    + self.rtol * y.as_slice()[idx].norm_sqr().sqrt().max(self.y_new.as_slice()[idx].norm_sqr().sqrt());
                let r = err.norm_sqr() / (scale * scale);
                sum += r;
            }
            let err = (sum / n).sqrt();
            if !err.is_finite() {
                if !all_finite(y) || !all_finite(k1) {
                    return Err(Error::NonFinite { t: t.as_f64() });
                }
                self.h = h * min_fac;
                self.rejected += 1;
                continue;
            }
            if err <= T::one() {
                *t = if clamped { t_end } else { *t + h };
                std::mem::swap(y, &mut self.y_new);
                hermitize(y);
                std::mem::swap(k1, k7);
                self.steps += 1;
                let fac = if err == T::zero() { max_fac } else { (safety * err.powf(-fifth)).min(max_fac).max(min_fac) };
                let proposal = h * fac;
                // a step shortened to hit t_end must not shrink the controller's proposal
                self.h = if clamped { proposal.max(self.h) } else { proposal };
            } else {
                self.rejected += 1;
                self.h = h * (safety * err.powf(-fifth)).max(min_fac);
            }
        }
        Ok(())
    }
}

/// Integrates the master equation from `rho0` over `t_final` (model time),
/// recording every observable at `t = 0`, every `cfg.sample_dt_ms`, and at
/// `t_final`.
pub fn evolve<T: Real>(
    model: &LindbladModel<T>,
    rho0: &DensityMatrix<T>,
    t_final: T,
    cfg: &IntegratorConfig<T>,
    observables: &[Observable<T>],
) -> Result<TimeSeries<T>> {
    cfg.validate()?;
    if rho0.space() != model.space() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: rho0.dim() });
    }
    if let Some(o) = observables.iter().find(|o| o.dim() != model.dim()) {
        return Err(Error::InvalidParameter(format!("observable `{}` does not act on the model space", o.name())));
    }
    if !(t_final >= T::zero()) || !t_final.is_finite() {
        return Err(Error::InvalidParameter(format!("final time must be finite and ≥ 0, got {t_final}")));
    }
    let mut y = rho0.matrix().clone();
    hermitize(&mut y);
    let mut st = Stepper::new(model, cfg);
    st.f.eval(&y, &mut st.k[0]);
    if !all_finite(&st.k[0]) {
        return Err(Error::NonFinite { t: 0.0 });
    }
    st.h = st.initial_step(&y);

    let dt = model.ms_to_model(cfg.sample_dt_ms);
    let mut series = TimeSeries {
        times: Vec::new(),
        times_ms: Vec::new(),
        names: observables.iter().map(|o| o.name().to_string()).collect(),
        columns: vec![Vec::new(); observables.len()],
        final_state: rho0.clone(),
        quality: Quality { max_trace_error: T::zero(), min_eigenvalue: T::zero(), steps: 0, rejected: 0 },
    };
    let record = |s: &mut TimeSeries<T>, t: T, y: &Mat<T>| {
        s.times.push(t);
        s.times_ms.push(model.model_to_ms(t));
        for (col, o) in s.columns.iter_mut().zip(observables) {
            col.push(o.evaluate(y));
        }
        s.quality.max_trace_error = s.quality.max_trace_error.max((trace_re(y) - T::one()).abs());
    };
    let mut t = T::zero();
    record(&mut series, t, &y);
    let mut k = 1usize;
    while t < t_final {
        let target = (dt * T::from_usize_lossy(k)).min(t_final);
        // merge a sliver of a final interval into the previous sample
        let target = if t_final - target < dt * T::lit(1e-9) { t_final } else { target };
        st.advance(&mut y, &mut t, target)?;
        record(&mut series, t, &y);
        k += 1;
    }
    let final_state = DensityMatrix::new_unchecked(model.space().clone(), y)?;
    series.quality.min_eigenvalue = final_state.min_eigenvalue();
    series.quality.steps = st.steps;
    series.quality.rejected = st.rejected;
    if !series.quality.passed() {
        log::warn!(
            "integration quality check failed: trace error {}, min eigenvalue {}",
            series.quality.max_trace_error,
            series.quality.min_eigenvalue
        );
    }
    series.final_state = final_state;
    Ok(series)
}

/// Integrates until `t_end` without sampling. Used by the long-time
/// steady-state solver.
pub(crate) fn propagate<T: Real>(
    model: &LindbladModel<T>,
    rho: &mut Mat<T>,
    t_end: T,
    cfg: &IntegratorConfig<T>,
    checkpoint: T,
    mut stop: impl FnMut(&Mat<T>, &Mat<T>) -> bool,
) -> Result<T> {
    let mut st = Stepper::new(model, cfg);
    st.f.eval(rho, &mut st.k[0]);
    st.h = st.initial_step(rho);
    let mut t = T::zero();
    while t < t_end {
        let target = (t + checkpoint).min(t_end);
        st.advance(rho, &mut t, target)?;
        if stop(rho, &st.k[0]) {
            break;
        }
    }
    Ok(t)
}
