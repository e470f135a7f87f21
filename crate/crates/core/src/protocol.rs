//! Multi-segment protocols: pumping, π-pulse and dissipative repumping,
//! coupling noise, and the end-to-end scenario builders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{embed, fock_ops, pauli_ops, DensityMatrix, Factor, Operator, SpaceSpec};
use crate::lindblad::{evolve, IntegratorConfig, LindbladModel, Observable, TimeSeries};
use crate::models::{
    build_boson_w, build_dicke_pump, build_ghz, build_pi_pulse, build_single_site_et, et_terms, franck_condon,
    mode_annihilation, qubit_couplings, BathParams, Branch, CouplingMatrix, EtParams, GhzParams, SpinNetwork,
};
use crate::reduced::et_levels;
use crate::scalar::Real;
use crate::states::{
    build_initial, fidelity, phase_insensitive_overlap, BosonInit, GhzSign, InitialStateSpec, TargetInit, TargetState,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Pump,
    PiPulse,
    DissipativeRepump,
    /// Plain evolution under a fixed model (single-stage scenarios).
    Evolve,
}

impl SegmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentKind::Pump => "pump",
            SegmentKind::PiPulse => "pi-pulse",
            SegmentKind::DissipativeRepump => "dissipative-repump",
            SegmentKind::Evolve => "evolve",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScheduleSegment<T: Real> {
    pub label: String,
    pub model: LindbladModel<T>,
    pub duration_ms: T,
    pub kind: SegmentKind,
}

/// Closed interval `[lo, hi]` a checkpoint value is expected to fall in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band<T: Real> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Band<T> {
    pub fn around(center: T, tol: T) -> Self {
        Self { lo: center - tol, hi: center + tol }
    }

    pub fn at_least(lo: T) -> Self {
        Self { lo, hi: T::lit(f64::INFINITY) }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Metric<T: Real> {
    /// Fidelity of the reduced state on `sites` with `target`.
    Fidelity { target: TargetState<T>, sites: Vec<usize> },
    /// Population of `|D⟩` on the control qubit (factor 0).
    DonorPopulation,
}

/// Quantity evaluated on the state at the end of segment `after_segment`.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T: Real> {
    pub label: String,
    pub after_segment: usize,
    pub metric: Metric<T>,
    pub band: Option<Band<T>>,
}

#[derive(Clone, Debug)]
pub struct ProtocolSchedule<T: Real> {
    pub segments: Vec<ScheduleSegment<T>>,
    pub checkpoints: Vec<Checkpoint<T>>,
    /// Sampled continuously over all segments.
    pub observables: Vec<Observable<T>>,
    /// Default initial state of the scenario.
    pub initial: DensityMatrix<T>,
}

impl<T: Real> ProtocolSchedule<T> {
    pub fn new(
        segments: Vec<ScheduleSegment<T>>,
        checkpoints: Vec<Checkpoint<T>>,
        observables: Vec<Observable<T>>,
        initial: DensityMatrix<T>,
    ) -> Result<Self> {
        let s = Self { segments, checkpoints, observables, initial };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.segments.first().ok_or_else(|| Error::InvalidSchedule("schedule has no segments".into()))?;
        let space = first.model.space();
        for seg in &self.segments {
            if !(seg.duration_ms > T::zero()) || !seg.duration_ms.is_finite() {
                return Err(Error::InvalidSchedule(format!("segment `{}` has non-positive duration", seg.label)));
            }
            if seg.model.space() != space {
                return Err(Error::InvalidSchedule(format!("segment `{}` acts on a different space", seg.label)));
            }
            if seg.model.omega0_rad_per_ms() != first.model.omega0_rad_per_ms() {
                return Err(Error::InvalidSchedule(format!("segment `{}` uses a different time unit", seg.label)));
            }
        }
        if let Some(c) = self.checkpoints.iter().find(|c| c.after_segment >= self.segments.len()) {
            return Err(Error::InvalidSchedule(format!("checkpoint `{}` refers to a missing segment", c.label)));
        }
        if self.initial.space() != space {
            return Err(Error::InvalidSchedule("initial state does not live on the schedule space".into()));
        }
        Ok(())
    }

    pub fn space(&self) -> &SpaceSpec {
        self.segments[0].model.space()
    }

    pub fn total_duration_ms(&self) -> T {
        self.segments.iter().fold(T::zero(), |acc, s| acc + s.duration_ms)
    }

    /// End time of every segment, in ms.
    pub fn boundaries_ms(&self) -> Vec<T> {
        let mut t = T::zero();
        self.segments
            .iter()
            .map(|s| {
                t += s.duration_ms;
                t
            })
            .collect()
    }

    pub fn set_band(&mut self, label: &str, band: Band<T>) -> Result<()> {
        let c = self
            .checkpoints
            .iter_mut()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::InvalidSchedule(format!("no checkpoint named `{label}`")))?;
        c.band = Some(band);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointResult<T: Real> {
    pub label: String,
    pub segment: usize,
    pub t_ms: T,
    pub value: T,
    /// Phase-insensitive overlap, for fidelity checkpoints.
    pub phase_insensitive: Option<T>,
    pub band: Option<Band<T>>,
}

impl<T: Real> CheckpointResult<T> {
    /// `None` when the checkpoint carries no band.
    pub fn within_band(&self) -> Option<bool> {
        self.band.map(|b| b.contains(self.value))
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolRun<T: Real> {
    pub series: TimeSeries<T>,
    pub checkpoints: Vec<CheckpointResult<T>>,
}

impl<T: Real> ProtocolRun<T> {
    pub fn checkpoint(&self, label: &str) -> Option<&CheckpointResult<T>> {
        self.checkpoints.iter().find(|c| c.label == label)
    }

    /// True when every banded checkpoint lies in its band.
    pub fn checkpoints_passed(&self) -> bool {
        self.checkpoints.iter().all(|c| c.within_band() != Some(false))
    }
}

fn evaluate_metric<T: Real>(metric: &Metric<T>, rho: &DensityMatrix<T>) -> Result<(T, Option<T>)> {
    match metric {
        Metric::Fidelity { target, sites } => {
            let reduced = crate::hilbert::partial_trace(rho, sites)?;
            let psi = target.vector()?;
            Ok((fidelity(&reduced, &psi)?, Some(phase_insensitive_overlap(&reduced, &psi)?)))
        }
        Metric::DonorPopulation => {
            let p = donor_projector(rho.space())?;
            Ok((rho.expectation(&p)?, None))
        }
    }
}

/// `|D⟩⟨D|` on factor 0.
fn donor_projector<T: Real>(space: &SpaceSpec) -> Result<Operator<T>> {
    let s = pauli_ops::<T>();
    let half = T::lit(0.5);
    Ok((embed(&s.z, 0, space)? + Operator::identity(space)).scale(half))
}

/// Evolves `rho0` through every segment in order, sampling the schedule's
/// observables and evaluating checkpoints at segment boundaries.
pub fn run<T: Real>(
    schedule: &ProtocolSchedule<T>,
    rho0: &DensityMatrix<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<ProtocolRun<T>> {
    schedule.validate()?;
    if rho0.space() != schedule.space() {
        return Err(Error::DimensionMismatch { expected: schedule.space().dim(), found: rho0.dim() });
    }
    let mut rho = rho0.clone();
    let mut series: Option<TimeSeries<T>> = None;
    let mut results = Vec::new();
    let mut t_ms = T::zero();
    for (k, seg) in schedule.segments.iter().enumerate() {
        log::info!("segment {k} `{}` ({}, {} ms)", seg.label, seg.kind.as_str(), seg.duration_ms);
        let part = evolve(&seg.model, &rho, seg.model.ms_to_model(seg.duration_ms), cfg, &schedule.observables)?;
        rho = part.final_state.clone();
        t_ms += seg.duration_ms;
        for c in schedule.checkpoints.iter().filter(|c| c.after_segment == k) {
            let (value, phase_insensitive) = evaluate_metric(&c.metric, &rho)?;
            results.push(CheckpointResult { label: c.label.clone(), segment: k, t_ms, value, phase_insensitive, band: c.band });
        }
        match series.as_mut() {
            None => series = Some(part),
            Some(s) => s.append(part)?,
        }
    }
    Ok(ProtocolRun { series: series.expect("validated schedule is nonempty"), checkpoints: results })
}

/// Synthetic or measured coupling imperfections of the pump network.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec<T: Real> {
    /// Control-row imbalance, in units of J.
    pub delta_j: T,
    /// Residual target-target coupling, in units of J.
    pub j_res: T,
    pub include_counter_rotating: bool,
    pub b_field: T,
    /// Occupation of the bath of the damped mode.
    pub n_bar: T,
    pub seed: u64,
    /// Measured coupling table; supersedes the synthetic draws.
    pub measured: Option<CouplingMatrix<T>>,
}

impl<T: Real> Default for NoiseSpec<T> {
    fn default() -> Self {
        Self {
            delta_j: T::zero(),
            j_res: T::zero(),
            include_counter_rotating: false,
            b_field: T::zero(),
            n_bar: T::zero(),
            seed: 0,
            measured: None,
        }
    }
}

impl<T: Real> NoiseSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_j >= T::zero()) || !(self.j_res >= T::zero()) || !(self.n_bar >= T::zero()) {
            return Err(Error::InvalidParameter("noise magnitudes and n_bar must be non-negative".into()));
        }
        if !self.b_field.is_finite() {
            return Err(Error::InvalidParameter("non-finite transverse field".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisyNetwork<T: Real> {
    pub network: SpinNetwork<T>,
    /// Achieved `δJ` in units of ω₀.
    pub delta_j: T,
    /// Achieved `J_res` in units of ω₀.
    pub j_res: T,
}

/// Applies `noise` to an ideal list network.
///
/// A measured matrix is taken as is. Otherwise control-row entries become
/// `J(1 + uᵢ)` with `uᵢ ~ U[−δ/2, δ/2]`, and target pairs get residual
/// couplings: `J_res·J` within a half of the register and about half that
/// across halves, the pattern of the seven-ion table.
pub fn apply_noise<T: Real>(ideal: &SpinNetwork<T>, noise: &NoiseSpec<T>) -> Result<NoisyNetwork<T>> {
    ideal.validate()?;
    noise.validate()?;
    let network = if let Some(m) = &noise.measured {
        SpinNetwork::with_matrix(ideal.n_targets, m.clone(), noise.b_field, noise.include_counter_rotating)?
    } else if noise.delta_j == T::zero() && noise.j_res == T::zero() {
        SpinNetwork { b_field: noise.b_field, include_counter_rotating: noise.include_counter_rotating, ..ideal.clone() }
    } else {
        let n = ideal.n_targets;
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let half = T::lit(0.5);
        let j_mean = ideal.j.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(n);
        let mut chain = nalgebra::DMatrix::zeros(n + 1, n + 1);
        for (i, &j) in ideal.j.iter().enumerate() {
            let u = if noise.delta_j > T::zero() {
                let w = (noise.delta_j * half).as_f64();
                T::lit(rng.random_range(-w..=w))
            } else {
                T::zero()
            };
            chain[(0, i + 1)] = j * (T::one() + u);
            chain[(i + 1, 0)] = chain[(0, i + 1)];
        }
        let res = noise.j_res * j_mean;
        let split = n.div_ceil(2);
        for a in 0..n {
            for b in (a + 1)..n {
                let same_half = (a < split) == (b < split);
                let x = if same_half { res } else { res * T::lit(rng.random_range(0.45..=0.55)) };
                chain[(a + 1, b + 1)] = x;
                chain[(b + 1, a + 1)] = x;
            }
        }
        SpinNetwork::with_matrix(n, CouplingMatrix::new(chain, 0)?, noise.b_field, noise.include_counter_rotating)?
    };
    let delta_j = network.imbalance();
    let j_res = network.residual();
    Ok(NoisyNetwork { network, delta_j, j_res })
}

fn mean<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(xs.len().max(1))
}

/// Franck–Condon factor of the resonant vibronic pair `|D,0⟩ ↔ |A,round|ΔE|⟩`.
pub fn resonant_franck_condon<T: Real>(p: &EtParams<T>) -> T {
    let n = p.delta_e().as_f64().abs().round() as usize;
    franck_condon(p.g_tilde(), n)
}

/// Dicke-state preparation by repeated pumping from a single control qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct DickeSetup<T: Real> {
    pub n_targets: usize,
    /// Number of pumping steps `M`; the target is `|W_N^M⟩`.
    pub steps: usize,
    pub et: EtParams<T>,
    pub j: T,
    pub tau1_ms: T,
    pub tau2_ms: T,
    pub n_c: usize,
    /// Overrides the per-step `γ = 2Vₑᵐ` (one value for all steps).
    pub gamma: Option<T>,
    /// Tunneling used by the dissipative repump.
    pub repump_v: T,
    /// Keep the spin-spin couplings on during dissipative repumping.
    pub repump_with_couplings: bool,
    pub noise: NoiseSpec<T>,
}

impl<T: Real> DickeSetup<T> {
    pub fn new(n_targets: usize, steps: usize, et: EtParams<T>, j: T, tau1_ms: T, tau2_ms: T) -> Self {
        Self {
            n_targets,
            steps,
            et,
            j,
            tau1_ms,
            tau2_ms,
            n_c: 12,
            gamma: None,
            repump_v: T::lit(0.05),
            repump_with_couplings: false,
            noise: NoiseSpec::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidSchedule("need at least one pumping step".into()));
        }
        if self.steps > self.n_targets {
            return Err(Error::InvalidSchedule(format!(
                "{} pumping steps exceed {} target qubits",
                self.steps, self.n_targets
            )));
        }
        if !(self.tau1_ms > T::zero()) || (self.steps > 1 && !(self.tau2_ms > T::zero())) {
            return Err(Error::InvalidSchedule("segment durations must be positive".into()));
        }
        Ok(())
    }

    /// `γ = 2Vₑᵐ = 2√((N−m)(m+1)) J̄ FC`, with `J̄` the mean control coupling.
    pub fn pump_gamma(&self, net: &SpinNetwork<T>, step: usize) -> Result<T> {
        if step >= self.n_targets {
            return Err(Error::StepOutOfRange { step, n_targets: self.n_targets });
        }
        if let Some(g) = self.gamma {
            return Ok(g);
        }
        let j = mean(&net.j.iter().map(|x| x.abs()).collect::<Vec<_>>());
        let weight = T::from_usize_lossy((self.n_targets - step) * (step + 1)).sqrt();
        Ok(T::lit(2.0) * weight * j * resonant_franck_condon(&self.et))
    }

    /// `γ = 2|Vₑ|` of the repump transfer.
    pub fn repump_gamma(&self) -> T {
        T::lit(2.0) * self.repump_v.abs() * resonant_franck_condon(&self.et)
    }
}

fn target_sites(n: usize) -> Vec<usize> {
    (2..2 + n).collect()
}

fn dicke_observables<T: Real>(setup: &DickeSetup<T>, space: &SpaceSpec) -> Result<Vec<Observable<T>>> {
    let n = setup.n_targets;
    let sites = target_sites(n);
    let mut obs = Vec::new();
    for m in 1..=setup.steps {
        let psi = TargetState::<T>::Dicke { n, m }.vector()?;
        obs.push(Observable::fidelity(format!("F_W{n}_{m}"), space, &sites, &psi)?);
    }
    obs.push(Observable::expectation("P_D", &donor_projector(space)?));
    let (_, _, num) = fock_ops::<T>(setup.n_c)?;
    obs.push(Observable::expectation("n_boson", &embed(&num, 1, space)?));
    obs.push(Observable::expectation("excitation", &excitation_number(space)?));
    Ok(obs)
}

/// Number of qubits in `|↑⟩`, summed over every qubit factor.
pub fn excitation_number<T: Real>(space: &SpaceSpec) -> Result<Operator<T>> {
    let s = pauli_ops::<T>();
    let half = T::lit(0.5);
    let mut acc = Operator::zeros(space);
    for (k, f) in space.factors().iter().enumerate() {
        if *f == Factor::Qubit {
            acc = acc + (embed(&s.z, k, space)? + Operator::identity(space)).scale(half);
        }
    }
    Ok(acc)
}

fn fidelity_checkpoint<T: Real>(n: usize, m: usize, after: usize) -> Checkpoint<T> {
    Checkpoint {
        label: format!("W{n}_{m}"),
        after_segment: after,
        metric: Metric::Fidelity { target: TargetState::Dicke { n, m }, sites: target_sites(n) },
        band: None,
    }
}

fn dicke_initial<T: Real>(setup: &DickeSetup<T>, space: &SpaceSpec) -> Result<DensityMatrix<T>> {
    let boson = if setup.noise.n_bar > T::zero() {
        BosonInit::DisplacedThermal(setup.noise.n_bar)
    } else {
        BosonInit::GroundDisplaced
    };
    build_initial(&InitialStateSpec { control: Branch::Donor, boson, targets: TargetInit::AllDown }, &setup.et, space)
}

struct PumpStage<T: Real> {
    net: SpinNetwork<T>,
    space: SpaceSpec,
    a: Operator<T>,
}

fn pump_stage<T: Real>(setup: &DickeSetup<T>) -> Result<PumpStage<T>> {
    setup.validate()?;
    let ideal = SpinNetwork::uniform(setup.n_targets, setup.j);
    let net = apply_noise(&ideal, &setup.noise)?.network;
    let h = build_dicke_pump(&setup.et, &net, setup.n_c)?;
    let space = h.space().clone();
    let a = mode_annihilation(&space, 1)?;
    Ok(PumpStage { net, space, a })
}

fn pump_segment<T: Real>(setup: &DickeSetup<T>, st: &PumpStage<T>, step: usize, p: &EtParams<T>) -> Result<(ScheduleSegment<T>, T)> {
    let gamma = setup.pump_gamma(&st.net, step)?;
    let bath = BathParams::new(gamma, setup.noise.n_bar)?;
    let h = build_dicke_pump(p, &st.net, setup.n_c)?;
    let model = LindbladModel::new(h, bath.channels(&st.a), p.omega0_rad_per_ms())?;
    let seg = ScheduleSegment { label: format!("pump{}", step + 1), model, duration_ms: setup.tau1_ms, kind: SegmentKind::Pump };
    Ok((seg, gamma))
}

/// Pump / π-pulse alternation with the sign of `g` flipped on every other
/// pump. Dissipation stays on during the pulses.
pub fn build_hybrid_dicke_schedule<T: Real>(setup: &DickeSetup<T>) -> Result<ProtocolSchedule<T>> {
    let st = pump_stage(setup)?;
    let n = setup.n_targets;
    let mut segments = Vec::new();
    let mut checkpoints = Vec::new();
    for m in 0..setup.steps {
        let p = if m % 2 == 1 { setup.et.with_reversed_g() } else { setup.et };
        let (seg, gamma) = pump_segment(setup, &st, m, &p)?;
        segments.push(seg);
        checkpoints.push(fidelity_checkpoint(n, m + 1, segments.len() - 1));
        if m + 1 < setup.steps {
            let tau = setup.et.omega0_rad_per_ms() * setup.tau2_ms;
            let omega_pi = T::lit(std::f64::consts::PI) / (T::lit(2.0) * tau);
            let h = build_pi_pulse(&st.space, 0, omega_pi)?;
            let bath = BathParams::new(gamma, setup.noise.n_bar)?;
            let model = LindbladModel::new(h, bath.channels(&st.a), setup.et.omega0_rad_per_ms())?;
            segments.push(ScheduleSegment {
                label: format!("pi{}", m + 1),
                model,
                duration_ms: setup.tau2_ms,
                kind: SegmentKind::PiPulse,
            });
        }
    }
    let observables = dicke_observables(setup, &st.space)?;
    let initial = dicke_initial(setup, &st.space)?;
    ProtocolSchedule::new(segments, checkpoints, observables, initial)
}

/// Pumps interleaved with dissipative repumping under `H_ET` at `−ΔE`.
pub fn build_dissipative_dicke_schedule<T: Real>(setup: &DickeSetup<T>) -> Result<ProtocolSchedule<T>> {
    let st = pump_stage(setup)?;
    let n = setup.n_targets;
    let mut segments = Vec::new();
    let mut checkpoints = Vec::new();
    for m in 0..setup.steps {
        let (seg, _) = pump_segment(setup, &st, m, &setup.et)?;
        segments.push(seg);
        checkpoints.push(fidelity_checkpoint(n, m + 1, segments.len() - 1));
        if m + 1 < setup.steps {
            let p = setup.et.with_delta_e(-setup.et.delta_e()).with_v(setup.repump_v);
            let mut h = et_terms(&p, &st.space, 0, 1, true)?;
            if setup.repump_with_couplings {
                let targets = target_sites(n);
                h = h + qubit_couplings(&st.net, &st.space, 0, &targets)?;
            }
            let bath = BathParams::new(setup.repump_gamma(), setup.noise.n_bar)?;
            let model = LindbladModel::new(h, bath.channels(&st.a), setup.et.omega0_rad_per_ms())?;
            segments.push(ScheduleSegment {
                label: format!("repump{}", m + 1),
                model,
                duration_ms: setup.tau2_ms,
                kind: SegmentKind::DissipativeRepump,
            });
            checkpoints.push(Checkpoint {
                label: format!("P_D_{}", m + 1),
                after_segment: segments.len() - 1,
                metric: Metric::DonorPopulation,
                band: None,
            });
        }
    }
    let observables = dicke_observables(setup, &st.space)?;
    let initial = dicke_initial(setup, &st.space)?;
    ProtocolSchedule::new(segments, checkpoints, observables, initial)
}

/// A single fixed-model evolution with an end-of-run fidelity checkpoint.
fn single_stage<T: Real>(
    label: &str,
    model: LindbladModel<T>,
    duration_ms: T,
    checkpoint: Option<(String, Metric<T>)>,
    observables: Vec<Observable<T>>,
    initial: DensityMatrix<T>,
) -> Result<ProtocolSchedule<T>> {
    let seg = ScheduleSegment { label: label.into(), model, duration_ms, kind: SegmentKind::Evolve };
    let checkpoints = checkpoint
        .into_iter()
        .map(|(label, metric)| Checkpoint { label, after_segment: 0, metric, band: None })
        .collect();
    ProtocolSchedule::new(vec![seg], checkpoints, observables, initial)
}

/// W state in `n_modes` undamped target modes.
#[derive(Clone, Debug, PartialEq)]
pub struct BosonWSetup<T: Real> {
    /// `V` is ignored; the pump runs through the mode couplings `j`.
    pub et: EtParams<T>,
    pub n_modes: usize,
    pub j: T,
    pub n_t: usize,
    pub n_c: usize,
    pub duration_ms: T,
    pub gamma: Option<T>,
}

impl<T: Real> BosonWSetup<T> {
    /// `ΔE = ω₀` without heating and `2ω₀` with it.
    pub fn delta_e_for(n_bar: T) -> T {
        if n_bar > T::zero() {
            T::lit(2.0)
        } else {
            T::one()
        }
    }

    /// `2Vₑ = 2√N J FC` at the given `ΔE`.
    pub fn gamma_for(&self, delta_e: T) -> T {
        if let Some(g) = self.gamma {
            return g;
        }
        let p = self.et.with_delta_e(delta_e);
        T::lit(2.0) * T::from_usize_lossy(self.n_modes).sqrt() * self.j * resonant_franck_condon(&p)
    }
}

pub fn boson_w_schedule<T: Real>(setup: &BosonWSetup<T>, n_bar: T) -> Result<ProtocolSchedule<T>> {
    let delta_e = BosonWSetup::delta_e_for(n_bar);
    let p = setup.et.with_delta_e(delta_e).with_v(T::zero());
    let (h, ops) = build_boson_w(&p, setup.n_modes, setup.j, setup.n_t, setup.n_c)?;
    let space = h.space().clone();
    let bath = BathParams::new(setup.gamma_for(delta_e), n_bar)?;
    let model = LindbladModel::new(h, bath.channels(&ops[0]), p.omega0_rad_per_ms())?;
    let spec = InitialStateSpec {
        control: Branch::Donor,
        boson: BosonInit::DisplacedThermal(n_bar),
        targets: TargetInit::Thermal(n_bar),
    };
    let initial = build_initial(&spec, &p, &space)?;
    let sites = target_sites(setup.n_modes);
    let target = TargetState::BosonW { n_modes: setup.n_modes, n_t: setup.n_t };
    let observables = vec![
        Observable::fidelity("F_W", &space, &sites, &target.vector()?)?,
        Observable::expectation("P_D", &donor_projector(&space)?),
    ];
    single_stage("pump", model, setup.duration_ms, Some(("W".into(), Metric::Fidelity { target, sites })), observables, initial)
}

/// One entry of a bath-occupation grid.
#[derive(Clone, Debug)]
pub struct GridPoint<T: Real> {
    pub n_bar: T,
    pub delta_e: T,
    pub gamma: T,
    pub fidelity: T,
    pub run: ProtocolRun<T>,
}

fn run_grid<T: Real>(
    n_bars: &[T],
    cfg: &IntegratorConfig<T>,
    build: impl Fn(T) -> Result<(ProtocolSchedule<T>, T, T)> + Sync,
) -> Result<Vec<GridPoint<T>>> {
    n_bars
        .par_iter()
        .map(|&n_bar| {
            let (schedule, delta_e, gamma) = build(n_bar)?;
            let run = run(&schedule, &schedule.initial, cfg)?;
            let fidelity = run.checkpoints.last().map(|c| c.value).unwrap_or(T::lit(f64::NAN));
            Ok(GridPoint { n_bar, delta_e, gamma, fidelity, run })
        })
        .collect()
}

/// Evolves the boson-W scheme for every `n̄` and reports the final fidelity.
pub fn run_boson_w<T: Real>(setup: &BosonWSetup<T>, n_bars: &[T], cfg: &IntegratorConfig<T>) -> Result<Vec<GridPoint<T>>> {
    run_grid(n_bars, cfg, |n_bar| {
        let de = BosonWSetup::delta_e_for(n_bar);
        Ok((boson_w_schedule(setup, n_bar)?, de, setup.gamma_for(de)))
    })
}

/// GHZ preparation on `2N` target qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct GhzSetup<T: Real> {
    pub et: EtParams<T>,
    pub gp: GhzParams<T>,
    pub n_c: usize,
    pub duration_ms: T,
    pub gamma: Option<T>,
}

impl<T: Real> GhzSetup<T> {
    /// `γ = 2|Vₑ|` with `Vₑ = V FC / √2`.
    pub fn default_gamma(&self) -> T {
        self.gamma.unwrap_or_else(|| {
            T::lit(2.0) * self.et.v().abs() * resonant_franck_condon(&self.et) / T::lit(2.0).sqrt()
        })
    }
}

pub fn ghz_schedule<T: Real>(setup: &GhzSetup<T>, n_bar: T) -> Result<ProtocolSchedule<T>> {
    let h = build_ghz(&setup.et, &setup.gp, setup.n_c)?;
    let space = h.space().clone();
    let a = mode_annihilation(&space, 1)?;
    let bath = BathParams::new(setup.default_gamma(), n_bar)?;
    let model = LindbladModel::new(h, bath.channels(&a), setup.et.omega0_rad_per_ms())?;
    let boson = if n_bar > T::zero() { BosonInit::DisplacedThermal(n_bar) } else { BosonInit::GroundDisplaced };
    let spec = InitialStateSpec { control: Branch::Donor, boson, targets: TargetInit::AllUp };
    let initial = build_initial(&spec, &setup.et, &space)?;
    let n = setup.gp.n_targets();
    let sites = target_sites(n);
    let target = TargetState::Ghz { n_qubits: n, sign: GhzSign::Minus };
    let observables = vec![
        Observable::fidelity("F_GHZ", &space, &sites, &target.vector()?)?,
        Observable::expectation("P_D", &donor_projector(&space)?),
    ];
    single_stage("pump", model, setup.duration_ms, Some(("GHZ".into(), Metric::Fidelity { target, sites })), observables, initial)
}

pub fn run_ghz<T: Real>(setup: &GhzSetup<T>, n_bars: &[T], cfg: &IntegratorConfig<T>) -> Result<Vec<GridPoint<T>>> {
    run_grid(n_bars, cfg, |n_bar| Ok((ghz_schedule(setup, n_bar)?, setup.et.delta_e(), setup.default_gamma())))
}

/// Bare ET pair `[Qubit, Boson(n_c)]` started in `|D,0⟩`, sampling the
/// populations and coherences of the reduced three-level basis.
pub fn single_site_schedule<T: Real>(p: &EtParams<T>, gamma: T, n_bar: T, n_c: usize, duration_ms: T) -> Result<ProtocolSchedule<T>> {
    let h = build_single_site_et(p, n_c)?;
    let space = h.space().clone();
    let a = mode_annihilation(&space, 1)?;
    let bath = BathParams::new(gamma, n_bar)?;
    let model = LindbladModel::new(h, bath.channels(&a), p.omega0_rad_per_ms())?;
    let levels = et_levels(p, n_c)?;
    let observables = vec![
        Observable::population("P1", &levels[0])?,
        Observable::population("P2", &levels[1])?,
        Observable::population("P3", &levels[2])?,
        Observable::coherence("abs_rho13", &levels[0], &levels[2])?,
        Observable::coherence("abs_rho23", &levels[1], &levels[2])?,
        Observable::expectation("P_D", &donor_projector(&space)?),
    ];
    let initial = DensityMatrix::pure(&levels[0])?;
    single_stage("transfer", model, duration_ms, None, observables, initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{parse_coupling_csv, SEVEN_ION_CONTROL, SEVEN_ION_COUPLINGS_KHZ};

    fn et() -> EtParams<f64> {
        EtParams::new(1.0, 1.0, 0.0, std::f64::consts::TAU * 20.0).unwrap()
    }

    fn setup(m: usize) -> DickeSetup<f64> {
        let mut s = DickeSetup::new(4, m, et(), 0.025, 3.0, 0.001);
        s.n_c = 4;
        s
    }

    #[test]
    fn hybrid_layout() {
        let s = build_hybrid_dicke_schedule(&setup(2)).unwrap();
        let kinds: Vec<_> = s.segments.iter().map(|x| x.kind).collect();
        assert_eq!(kinds, [SegmentKind::Pump, SegmentKind::PiPulse, SegmentKind::Pump]);
        let single = build_hybrid_dicke_schedule(&setup(1)).unwrap();
        assert_eq!(single.segments.len(), 1);
        assert!(build_hybrid_dicke_schedule(&setup(5)).is_err());
    }

    #[test]
    fn pump_gammas_follow_dicke_steps() {
        let s = setup(2);
        let net = SpinNetwork::uniform(4, 0.025);
        let fc = (-0.5f64).exp();
        assert!((s.pump_gamma(&net, 0).unwrap() - 2.0 * 2.0 * 0.025 * fc).abs() < 1e-15);
        assert!((s.pump_gamma(&net, 1).unwrap() - 2.0 * 6f64.sqrt() * 0.025 * fc).abs() < 1e-15);
        let sched = build_hybrid_dicke_schedule(&s).unwrap();
        let rate = |k: usize| sched.segments[k].model.channels()[0].1;
        assert!((rate(0) - s.pump_gamma(&net, 0).unwrap()).abs() < 1e-15);
        assert!((rate(2) - s.pump_gamma(&net, 1).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn second_pump_flips_g() {
        let s = build_hybrid_dicke_schedule(&setup(2)).unwrap();
        let h1 = s.segments[0].model.h().matrix();
        let h3 = s.segments[2].model.h().matrix();
        // only the σz(a+a†) term changes sign
        let diff = h1 - h3;
        let p = et();
        let flipped = build_dicke_pump(&p.with_reversed_g(), &SpinNetwork::uniform(4, 0.025), 4).unwrap();
        assert!(diff.iter().any(|z| z.norm() > 0.1));
        assert!((h3 - flipped.matrix()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn dissipative_duration() {
        let mut su = setup(2);
        su.tau2_ms = 3.0;
        let s = build_dissipative_dicke_schedule(&su).unwrap();
        assert_eq!(s.segments[1].kind, SegmentKind::DissipativeRepump);
        assert!((s.total_duration_ms() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn zero_noise_is_identity() {
        let ideal = SpinNetwork::uniform(4, 0.04);
        let out = apply_noise(&ideal, &NoiseSpec::default()).unwrap();
        assert_eq!(out.network, ideal);
    }

    #[test]
    fn measured_table_metrics() {
        let khz = parse_coupling_csv(SEVEN_ION_COUPLINGS_KHZ).unwrap();
        let m = CouplingMatrix::<f64>::from_khz(&khz, SEVEN_ION_CONTROL, 1.0).unwrap();
        let noise = NoiseSpec { measured: Some(m), ..NoiseSpec::default() };
        let out = apply_noise(&SpinNetwork::uniform(4, 0.4), &noise).unwrap();
        assert!((out.delta_j - 0.004).abs() < 1e-12);
        assert!((out.j_res - 2.25e-4).abs() < 1e-12);
    }

    #[test]
    fn synthetic_noise_is_bounded_and_seeded() {
        let ideal = SpinNetwork::uniform(4, 0.04);
        let noise = NoiseSpec { delta_j: 0.01, j_res: 0.001, seed: 7, ..NoiseSpec::default() };
        let a = apply_noise(&ideal, &noise).unwrap();
        let b = apply_noise(&ideal, &noise).unwrap();
        assert_eq!(a, b);
        assert!(a.delta_j <= 0.01 * 0.04 + 1e-15);
        assert!(a.j_res <= 0.001 * 0.04 + 1e-15);
        assert!(a.delta_j > 0.0);
    }
}
