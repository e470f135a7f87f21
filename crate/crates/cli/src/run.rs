//! Scenario execution: maps a config onto the core protocols and collects
//! CSV tables, named metrics and quality flags.

use std::time::Instant;

use etpump::lindblad::{delta_e_sweep, steady_state_dense, steady_state_long_time, IntegratorConfig, LindbladModel, Quality};
use etpump::models::{
    build_single_site_et, check_perturbative, mode_annihilation, parse_coupling_csv, BathParams, CouplingMatrix,
    EtParams, GhzParams, Scheme, SpinNetwork, SEVEN_ION_CONTROL, SEVEN_ION_COUPLINGS_KHZ,
};
use etpump::protocol::{
    apply_noise, build_dissipative_dicke_schedule, build_hybrid_dicke_schedule, run as run_schedule, run_boson_w,
    run_ghz, single_site_schedule, BosonWSetup, DickeSetup, GhzSetup, GridPoint, NoiseSpec, ProtocolRun,
};
use etpump::reduced::{effective_rabi, log_grid, solve_reduced, transfer_rate, transfer_rate_scan, ReducedModel};
use etpump::{DensityMatrix, C};
use serde::Serialize;

use crate::config::{ScenarioConfig, ScenarioKind, BUILTIN_SEVEN_ION};
use crate::output::{csv_table, OutputFile};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command-line overrides applied on top of a config.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n_c: Option<usize>,
    pub rtol: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ScenarioConfig) {
        if let Some(seed) = self.seed {
            if let Some(net) = cfg.network.as_mut() {
                net.seed = seed;
            }
        }
        if let Some(n) = self.n_c {
            cfg.n_c = Some(n);
        }
        if let Some(r) = self.rtol {
            cfg.integrator.rtol = r;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ms: Option<f64>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_insensitive: Option<f64>,
    pub expected: Option<Band>,
    /// True when the value lies in the expected band or no band is set.
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualityReport {
    pub max_trace_error: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub trace_ok: bool,
    pub positivity_ok: bool,
    pub converged: bool,
}

impl QualityReport {
    pub fn passed(&self) -> bool {
        self.trace_ok && self.positivity_ok && self.converged
    }

    fn from_quality(q: Option<Quality<f64>>) -> Self {
        match q {
            None => Self {
                max_trace_error: None,
                min_eigenvalue: None,
                steps: 0,
                rejected: 0,
                trace_ok: true,
                positivity_ok: true,
                converged: true,
            },
            Some(q) => Self {
                max_trace_error: Some(q.max_trace_error),
                min_eigenvalue: Some(q.min_eigenvalue),
                steps: q.steps,
                rejected: q.rejected,
                trace_ok: q.max_trace_error <= Quality::<f64>::TRACE_TOL,
                positivity_ok: q.min_eigenvalue >= -Quality::<f64>::POSITIVITY_TOL,
                converged: true,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub kind: String,
    pub version: String,
    pub seed: u64,
    pub n_c: usize,
    pub wall_time_s: f64,
    pub metrics: Vec<MetricReport>,
    pub quality: QualityReport,
    /// Violated perturbative-regime conditions.
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<&MetricReport> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn bands_passed(&self) -> bool {
        self.metrics.iter().all(|m| m.passed)
    }

    /// Exit status policy: quality always counts, bands only when strict.
    pub fn success(&self, strict: bool) -> bool {
        self.quality.passed() && (!strict || self.bands_passed())
    }
}

struct Collected {
    metrics: Vec<(String, Option<f64>, f64, Option<f64>)>,
    quality: Option<Quality<f64>>,
    warnings: Vec<String>,
}

impl Collected {
    fn new() -> Self {
        Self { metrics: Vec::new(), quality: None, warnings: Vec::new() }
    }

    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), None, value, None));
    }

    fn merge_quality(&mut self, q: &Quality<f64>) {
        self.quality = Some(match &self.quality {
            None => *q,
            Some(old) => old.merge(q),
        });
    }
}

pub fn default_n_c(kind: ScenarioKind) -> usize {
    match kind {
        ScenarioKind::RateScan => 2,
        ScenarioKind::SingleSite | ScenarioKind::BosonW => 10,
        ScenarioKind::DeltaESweep => 16,
        ScenarioKind::DickeHybrid | ScenarioKind::DickeDissipative | ScenarioKind::Ghz => 12,
    }
}

fn et_params(cfg: &ScenarioConfig) -> Result<EtParams<f64>, CliError> {
    let e = &cfg.et;
    Ok(EtParams::new(e.delta_e_omega0, e.g_omega0, e.v_omega0, std::f64::consts::TAU * e.omega0_khz)?)
}

fn integrator(cfg: &ScenarioConfig, omega0_rad_per_ms: f64) -> IntegratorConfig<f64> {
    let i = &cfg.integrator;
    IntegratorConfig {
        rtol: i.rtol,
        atol: i.atol,
        max_step: i.max_step_ms.map(|h| h * omega0_rad_per_ms),
        sample_dt_ms: i.sample_dt_ms,
    }
}

fn grid_label(n_bar: f64) -> String {
    format!("F_nbar_{n_bar}")
}

/// Runs a validated config. Each finished table is handed to `sink` as soon
/// as it exists, so a later failure leaves earlier outputs in place.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    sink: &mut dyn FnMut(&OutputFile) -> Result<(), CliError>,
) -> Result<RunReport, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let n_c = cfg.n_c.unwrap_or_else(|| default_n_c(cfg.kind));
    let mut out = Collected::new();
    let mut written = Vec::new();
    let mut emit = |f: OutputFile| -> Result<(), CliError> {
        sink(&f)?;
        written.push(f.name.clone());
        Ok(())
    };
    match cfg.kind {
        ScenarioKind::RateScan => rate_scan(cfg, &mut out, &mut emit)?,
        ScenarioKind::SingleSite => single_site(cfg, n_c, &mut out, &mut emit)?,
        ScenarioKind::DickeHybrid | ScenarioKind::DickeDissipative => dicke(cfg, n_c, &mut out, &mut emit)?,
        ScenarioKind::DeltaESweep => sweep(cfg, n_c, &mut out, &mut emit)?,
        ScenarioKind::BosonW => boson_w(cfg, n_c, &mut out, &mut emit)?,
        ScenarioKind::Ghz => ghz(cfg, n_c, &mut out, &mut emit)?,
    }
    let metrics = out
        .metrics
        .into_iter()
        .map(|(name, t_ms, value, phase_insensitive)| {
            let expected = cfg.checks.iter().find(|c| c.metric == name).map(|c| {
                let (lo, hi) = c.bounds();
                Band { lo, hi }
            });
            let passed = expected.as_ref().is_none_or(|b| value >= b.lo && value <= b.hi);
            MetricReport { name, t_ms, value, phase_insensitive, expected, passed }
        })
        .collect::<Vec<_>>();
    for c in &cfg.checks {
        if !metrics.iter().any(|m| m.name == c.metric) {
            return Err(CliError::Schema(format!("check refers to unknown metric `{}`", c.metric)));
        }
    }
    Ok(RunReport {
        scenario: cfg.id.clone(),
        kind: cfg.kind.as_str().into(),
        version: VERSION.into(),
        seed: cfg.network.as_ref().map_or(0, |n| n.seed),
        n_c,
        wall_time_s: start.elapsed().as_secs_f64(),
        metrics,
        quality: QualityReport::from_quality(out.quality),
        warnings: out.warnings,
        outputs: written,
    })
}

type Emit<'a> = dyn FnMut(OutputFile) -> Result<(), CliError> + 'a;

/// Least-squares slope of `ln y` against `ln x` over points with `x ∈ [lo, hi]`.
pub fn log_log_slope(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> =
        x.iter().zip(y).filter(|(&a, _)| a >= lo * (1.0 - 1e-12) && a <= hi * (1.0 + 1e-12)).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    num / den
}

fn rate_scan(cfg: &ScenarioConfig, out: &mut Collected, emit: &mut Emit) -> Result<(), CliError> {
    let p = et_params(cfg)?;
    let s = cfg.scan.as_ref().expect("validated");
    let v_e = effective_rabi(p.v(), p.g_tilde(), C::new(1.0, 0.0)).re.abs();
    if v_e == 0.0 {
        return Err(CliError::Schema("rate scan needs a nonzero `et.v_omega0`".into()));
    }
    let ratios = log_grid(s.gamma_ratio_min, s.gamma_ratio_max, s.points);
    let gammas: Vec<f64> = ratios.iter().map(|r| r * v_e).collect();
    let rates = transfer_rate_scan(v_e, p.g_tilde(), &gammas);
    let rows: Vec<Vec<f64>> = ratios.iter().zip(&rates).map(|(a, b)| vec![*a, *b]).collect();
    emit(csv_table(cfg, "", &["gamma_over_ve", "abs_lambda_tilde_omega0"], &rows))?;
    out.metric("v_e_omega0", v_e);
    out.metric("slope_low", log_log_slope(&ratios, &rates, 0.01, 0.1));
    out.metric("slope_high", log_log_slope(&ratios, &rates, 10.0, 100.0));
    let k = (0..rates.len()).max_by(|&a, &b| rates[a].total_cmp(&rates[b])).unwrap_or(0);
    out.metric("argmax_gamma_ratio", ratios[k]);
    let best = transfer_rate(&ReducedModel::new(v_e, ratios[k] * v_e, p.g_tilde())?);
    out.metric("optimal_gamma_ratio", best.optimal_gamma / v_e);
    Ok(())
}

fn gamma_single_site(cfg: &ScenarioConfig, p: &EtParams<f64>) -> f64 {
    cfg.bath
        .gamma_omega0
        .unwrap_or_else(|| effective_rabi(p.v(), p.g_tilde(), C::new(1.0, 0.0)).re.abs())
}

fn single_site(cfg: &ScenarioConfig, n_c: usize, out: &mut Collected, emit: &mut Emit) -> Result<(), CliError> {
    let p = et_params(cfg)?;
    let gamma = gamma_single_site(cfg, &p);
    let s = cfg.single_site.as_ref().expect("validated");
    let sched = single_site_schedule(&p, gamma, cfg.bath.n_bar, n_c, s.duration_ms)?;
    let report = check_perturbative(&p, &BathParams::new(gamma, cfg.bath.n_bar)?, &Scheme::Extended { gaps: vec![] });
    out.warnings.extend(report.violations().map(|c| c.to_string()));
    let run = run_schedule(&sched, &sched.initial, &integrator(cfg, p.omega0_rad_per_ms()))?;
    let series = &run.series;
    let rm = ReducedModel::from_et(&p, gamma)?;
    let reduced = solve_reduced(&rm, [1.0, 0.0, 0.0], &series.times);
    let mut names: Vec<String> = series.names.clone();
    names.extend(["reduced_rho11", "reduced_rho22", "reduced_rho33"].map(String::from));
    let rows: Vec<Vec<f64>> = (0..series.len())
        .map(|k| {
            let mut row = vec![series.times_ms[k], series.times[k]];
            row.extend(series.columns.iter().map(|c| c[k]));
            row.extend([reduced.rho11[k], reduced.rho22[k], reduced.rho33[k]]);
            row
        })
        .collect();
    let mut header = vec!["t_ms".to_string(), "t_omega0".to_string()];
    header.extend(names);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    emit(csv_table(cfg, "", &header, &rows))?;
    let col = |n: &str| series.column(n).expect("observable present");
    let worst = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let pop_err = worst(col("P1"), &reduced.rho11).max(worst(col("P2"), &reduced.rho22)).max(worst(col("P3"), &reduced.rho33));
    out.metric("max_population_error", pop_err);
    out.metric("max_coherence_13", col("abs_rho13").iter().copied().fold(0.0, f64::max));
    out.metric("max_coherence_23", col("abs_rho23").iter().copied().fold(0.0, f64::max));
    out.metric("final_p3", *col("P3").last().expect("nonempty"));
    out.merge_quality(&series.quality);
    Ok(())
}

fn coupling_matrix(path: &str, control: Option<usize>, omega0_khz: f64) -> Result<CouplingMatrix<f64>, CliError> {
    if path == BUILTIN_SEVEN_ION {
        let khz = parse_coupling_csv(SEVEN_ION_COUPLINGS_KHZ)?;
        return Ok(CouplingMatrix::from_khz(&khz, control.unwrap_or(SEVEN_ION_CONTROL), omega0_khz)?);
    }
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    let khz = parse_coupling_csv(&text)?;
    Ok(CouplingMatrix::from_khz(&khz, control.expect("validated"), omega0_khz)?)
}

fn dicke(cfg: &ScenarioConfig, n_c: usize, out: &mut Collected, emit: &mut Emit) -> Result<(), CliError> {
    let p = et_params(cfg)?;
    let net = cfg.network.as_ref().expect("validated");
    let s = cfg.schedule.as_ref().expect("validated");
    let mut setup = DickeSetup::new(net.n_targets, s.steps, p, net.j_omega0, s.tau1_ms, s.tau2_ms);
    setup.n_c = n_c;
    setup.gamma = cfg.bath.gamma_omega0;
    setup.repump_v = s.repump_v_omega0;
    setup.repump_with_couplings = s.repump_with_couplings;
    setup.noise = dicke_noise(cfg)?;
    let noisy = apply_noise(&SpinNetwork::uniform(net.n_targets, net.j_omega0), &setup.noise)?;
    out.metric("delta_j_omega0", noisy.delta_j);
    out.metric("j_res_omega0", noisy.j_res);
    let gamma0 = setup.pump_gamma(&noisy.network, 0)?;
    let report = check_perturbative(
        &p,
        &BathParams::new(gamma0, cfg.bath.n_bar)?,
        &Scheme::Dicke { net: noisy.network.clone(), n_cutoff: None },
    );
    out.warnings.extend(report.violations().map(|c| c.to_string()));
    let sched = if cfg.kind == ScenarioKind::DickeHybrid {
        build_hybrid_dicke_schedule(&setup)?
    } else {
        build_dissipative_dicke_schedule(&setup)?
    };
    let run = run_schedule(&sched, &sched.initial, &integrator(cfg, p.omega0_rad_per_ms()))?;
    emit(series_table(cfg, "", &run))?;
    push_checkpoints(out, &run);
    out.merge_quality(&run.series.quality);
    Ok(())
}

fn dicke_noise(cfg: &ScenarioConfig) -> Result<NoiseSpec<f64>, CliError> {
    let net = cfg.network.as_ref().expect("validated");
    let measured = match &net.couplings_csv {
        Some(path) => Some(coupling_matrix(path, net.control_row, cfg.et.omega0_khz)?),
        None => None,
    };
    Ok(NoiseSpec {
        delta_j: net.delta_j_frac,
        j_res: net.j_res_frac,
        include_counter_rotating: net.counter_rotating,
        b_field: net.b_field_omega0,
        n_bar: cfg.bath.n_bar,
        seed: net.seed,
        measured,
    })
}

fn push_checkpoints(out: &mut Collected, run: &ProtocolRun<f64>) {
    for c in &run.checkpoints {
        out.metrics.push((c.label.clone(), Some(c.t_ms), c.value, c.phase_insensitive));
    }
}

fn series_table(cfg: &ScenarioConfig, suffix: &str, run: &ProtocolRun<f64>) -> OutputFile {
    let s = &run.series;
    let mut header = vec!["t_ms".to_string(), "t_omega0".to_string()];
    header.extend(s.names.iter().cloned());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = (0..s.len())
        .map(|k| {
            let mut row = vec![s.times_ms[k], s.times[k]];
            row.extend(s.columns.iter().map(|c| c[k]));
            row
        })
        .collect();
    csv_table(cfg, suffix, &header, &rows)
}

fn sweep(cfg: &ScenarioConfig, n_c: usize, out: &mut Collected, emit: &mut Emit) -> Result<(), CliError> {
    let p = et_params(cfg)?;
    let s = cfg.sweep.as_ref().expect("validated");
    let gamma = cfg.bath.gamma_omega0.expect("validated");
    let table = delta_e_sweep(&p, n_c, gamma, &s.n_bars, &s.n_values)?;
    let mut header = vec!["delta_e_omega0".to_string()];
    header.extend(s.n_bars.iter().map(|n| format!("p_donor_nbar_{n}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = (0..table.delta_e.len())
        .map(|j| std::iter::once(table.delta_e[j]).chain(table.p_donor.iter().map(|r| r[j])).collect())
        .collect();
    emit(csv_table(cfg, "", &header, &rows))?;
    for (i, n_bar) in s.n_bars.iter().enumerate() {
        out.metric(format!("optimum_delta_e_nbar_{n_bar}"), table.optimum_delta_e(i));
        out.metric(format!("valley_shape_nbar_{n_bar}"), if valley(&table.p_donor[i]) { 1.0 } else { 0.0 });
    }
    // dense and long-time steady states at the smallest gap, which relaxes fastest
    let n_bar = s.n_bars.iter().copied().find(|&x| x > 0.0).unwrap_or(s.n_bars[0]);
    let de = s.n_values.iter().copied().min().expect("validated") as f64;
    let pe = p.with_delta_e(de);
    let h = build_single_site_et(&pe, n_c)?;
    let space = h.space().clone();
    let a = mode_annihilation(&space, 1)?;
    let model = LindbladModel::new(h, BathParams::new(gamma, n_bar)?.channels(&a), p.omega0_rad_per_ms())?;
    let dense = steady_state_dense(&model)?;
    let long = steady_state_long_time(&model, &DensityMatrix::maximally_mixed(&space), 1e7, &integrator(cfg, p.omega0_rad_per_ms()))?;
    out.metric("steady_state_trace_distance", dense.trace_distance(&long)?);
    Ok(())
}

/// Strictly decreasing down to the minimum, then strictly increasing, with
/// the minimum away from both ends.
pub fn valley(row: &[f64]) -> bool {
    let k = (0..row.len()).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap_or(0);
    k > 0 && k + 1 < row.len() && row[..=k].windows(2).all(|w| w[1] < w[0]) && row[k..].windows(2).all(|w| w[1] > w[0])
}

fn emit_grid(cfg: &ScenarioConfig, out: &mut Collected, emit: &mut Emit, points: &[GridPoint<f64>]) -> Result<(), CliError> {
    for (k, gp) in points.iter().enumerate() {
        emit(series_table(cfg, &format!("_nbar{k}"), &gp.run))?;
        out.metrics.push((grid_label(gp.n_bar), Some(gp.run.series.times_ms.last().copied().unwrap_or(0.0)), gp.fidelity, gp.run.checkpoints.last().and_then(|c| c.phase_insensitive)));
        out.merge_quality(&gp.run.series.quality);
    }
    let rows: Vec<Vec<f64>> = points.iter().map(|g| vec![g.n_bar, g.delta_e, g.gamma, g.fidelity]).collect();
    emit(csv_table(cfg, "_summary", &["n_bar", "delta_e_omega0", "gamma_omega0", "fidelity"], &rows))
}

fn boson_w(cfg: &ScenarioConfig, n_c: usize, out: &mut Collected, emit: &mut Emit) -> Result<(), CliError> {
    let p = et_params(cfg)?;
    let b = cfg.boson_w.as_ref().expect("validated");
    let setup = BosonWSetup {
        et: p,
        n_modes: b.n_modes,
        j: b.j_omega0,
        n_t: b.n_t,
        n_c,
        duration_ms: b.duration_ms,
        gamma: cfg.bath.gamma_omega0,
    };
    let points = run_boson_w(&setup, &b.n_bars, &integrator(cfg, p.omega0_rad_per_ms()))?;
    emit_grid(cfg, out, emit, &points)
}

fn ghz(cfg: &ScenarioConfig, n_c: usize, out: &mut Collected, emit: &mut Emit) -> Result<(), CliError> {
    let p = et_params(cfg)?;
    let g = cfg.ghz.as_ref().expect("validated");
    let gp = GhzParams::new(g.e0_omega0, g.k_omega0, g.n_half)?;
    let setup = GhzSetup { et: p, gp, n_c, duration_ms: g.duration_ms, gamma: cfg.bath.gamma_omega0 };
    let report = check_perturbative(&p, &BathParams::new(setup.default_gamma(), 0.0)?, &Scheme::Ghz(gp));
    out.warnings.extend(report.violations().map(|c| c.to_string()));
    let points = run_ghz(&setup, &g.n_bars, &integrator(cfg, p.omega0_rad_per_ms()))?;
    emit_grid(cfg, out, emit, &points)
}
