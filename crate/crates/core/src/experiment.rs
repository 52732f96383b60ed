//! Monte Carlo system-identification experiments and EMSE learning curves.

use std::io::Write;

use rayon::prelude::*;

use crate::combiner::{
    BranchOutputs, CombinedFilter, CombinerParams, CombinerState, SingleBranch, StandaloneFilter,
};
use crate::error::{config_err, FlafError, Result};
use crate::expansion::{ExpansionConfig, StreamingExpander};
use crate::filters::{
    LinearFilter, NlmsParams, ProportionateFlaf, ProportionateParams, ZaFlaf, ZaParams,
};
use crate::plant::{apply_plant, colored_input, random_fir, PlantSpec, SignalBundle, ZetaSchedule};

/// Linear power below which EMSE values are floored before taking dB.
pub const EMSE_FLOOR: f64 = 1e-12;

/// Runs are generated in parallel chunks of this size and reduced in run order.
const RUN_CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Block-based combination of both sparse FLAFs.
    Combined,
    /// Linear branch plus the l1 (zero-attractor) FLAF alone.
    FlafL1,
    /// Linear branch plus the proportionate FLAF alone.
    FlafProp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Combined, Algorithm::FlafL1, Algorithm::FlafProp];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Combined => "combined",
            Algorithm::FlafL1 => "flaf_l1",
            Algorithm::FlafProp => "flaf_prop",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

/// Filter and combination hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub mu_fl1: f64,
    pub mu_fl2: f64,
    /// Regularization of the l1 FLAF.
    pub delta: f64,
    /// Regularization of the proportionate FLAF.
    pub delta_pfl: f64,
    pub delta_l: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub alpha: f64,
    /// Weighting-matrix constant.
    pub xi: f64,
    /// Variable-step-size constant.
    pub xi_vss: f64,
    pub mu_l: f64,
    pub mu_c: f64,
    pub beta_r: f64,
    pub a_init: f64,
    pub r_init: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            mu_fl1: 0.1,
            mu_fl2: 0.1,
            delta: 1e-3,
            delta_pfl: 1e-3,
            delta_l: 1e-3,
            gamma: 1e-5,
            epsilon: 1e-2,
            beta: 0.99,
            alpha: 0.0,
            xi: 0.01,
            xi_vss: 0.01,
            mu_l: 0.1,
            mu_c: 0.1,
            beta_r: 0.9,
            a_init: 0.0,
            r_init: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn nlms(&self) -> NlmsParams {
        NlmsParams {
            step_size: self.mu_l,
            regularization: self.delta_l,
        }
    }

    pub fn l1(&self) -> ZaParams {
        ZaParams {
            proportionate: ProportionateParams {
                step_size: self.mu_fl1,
                regularization: self.delta,
                alpha: self.alpha,
                xi: self.xi,
            },
            gamma: self.gamma,
            epsilon: self.epsilon,
            beta: self.beta,
            xi_vss: self.xi_vss,
        }
    }

    pub fn prop(&self) -> ProportionateParams {
        ProportionateParams {
            step_size: self.mu_fl2,
            regularization: self.delta_pfl,
            alpha: self.alpha,
            xi: self.xi,
        }
    }

    pub fn combiner(&self) -> CombinerParams {
        CombinerParams {
            step_size: self.mu_c,
            smoothing: self.beta_r,
            a_init: self.a_init,
            r_init: self.r_init,
        }
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Input buffer length `M`, also the plant FIR length.
    pub memory: usize,
    /// Expansion order `P`.
    pub order: usize,
    pub l_blocks: usize,
    pub signal_length: usize,
    pub num_runs: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Block counts visited by a sweep.
    pub block_counts: Vec<usize>,
    pub zeta_schedule: ZetaSchedule,
    pub snr_db: f64,
    pub coloring_pole: f64,
    /// Reuse one FIR (drawn from `base_seed`) for every run.
    pub freeze_plant: bool,
    /// Trailing fraction of the curve averaged for steady-state EMSE.
    pub steady_window: f64,
    pub hyper: Hyperparams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            memory: 15,
            order: 20,
            l_blocks: 8,
            signal_length: 40_000,
            num_runs: 100,
            base_seed: 0,
            algorithms: Algorithm::ALL.to_vec(),
            block_counts: vec![1, 2, 4, 5, 8, 10, 20],
            zeta_schedule: ZetaSchedule::constant(0.03).expect("valid default threshold"),
            snr_db: 30.0,
            coloring_pole: crate::plant::DEFAULT_COLORING_POLE,
            freeze_plant: false,
            steady_window: 0.1,
            hyper: Hyperparams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn expansion(&self) -> Result<ExpansionConfig> {
        ExpansionConfig::new(self.memory, self.order)
    }

    /// Checks every parameter without running anything.
    pub fn validate(&self) -> Result<()> {
        let exp = self.expansion()?;
        exp.layout(self.l_blocks)?;
        for &c in &self.block_counts {
            exp.layout(c)?;
        }
        if self.signal_length == 0 {
            return Err(config_err("signal_length must be positive"));
        }
        if self.num_runs == 0 {
            return Err(config_err("num_runs must be positive"));
        }
        if self.algorithms.is_empty() {
            return Err(config_err("no algorithms selected"));
        }
        if !(self.steady_window > 0.0 && self.steady_window <= 0.5) {
            return Err(config_err(format!(
                "steady_window = {} outside (0, 0.5]",
                self.steady_window
            )));
        }
        if !(self.coloring_pole.abs() < 1.0) {
            return Err(config_err("coloring_pole must satisfy |pole| < 1"));
        }
        if self.snr_db.is_nan() {
            return Err(config_err("snr_db is NaN"));
        }
        self.hyper.nlms().validate()?;
        self.hyper.l1().validate()?;
        self.hyper.prop().validate()?;
        self.hyper.combiner().validate()?;
        Ok(())
    }

    /// Seed of run `run_index`.
    pub fn run_seed(&self, run_index: usize) -> u64 {
        self.base_seed ^ run_index as u64
    }

    /// Signals of run `run_index`.
    pub fn signals(&self, run_index: usize) -> Result<SignalBundle> {
        let seed = self.run_seed(run_index);
        let x = colored_input(self.signal_length, self.coloring_pole, seed)?;
        let fir_seed = if self.freeze_plant {
            self.base_seed
        } else {
            seed
        };
        let spec = PlantSpec {
            zeta_schedule: self.zeta_schedule.clone(),
            fir: random_fir(self.memory, fir_seed),
            snr_db: self.snr_db,
        };
        apply_plant(&x, &spec, seed)
    }

    /// Fresh zero-initialized combined scheme with `l_blocks` blocks.
    pub fn combined_filter(&self) -> Result<CombinedFilter> {
        let exp = self.expansion()?;
        let layout = exp.layout(self.l_blocks)?;
        CombinedFilter::new(
            LinearFilter::new(exp.memory(), self.hyper.nlms())?,
            ZaFlaf::new(exp.expanded_len(), self.hyper.l1())?,
            ProportionateFlaf::new(exp.expanded_len(), self.hyper.prop())?,
            CombinerState::new(layout, self.hyper.combiner())?,
        )
    }

    pub fn standalone_filter(&self, algorithm: Algorithm) -> Result<StandaloneFilter> {
        let exp = self.expansion()?;
        let linear = LinearFilter::new(exp.memory(), self.hyper.nlms())?;
        let branch = match algorithm {
            Algorithm::FlafL1 => {
                SingleBranch::L1(ZaFlaf::new(exp.expanded_len(), self.hyper.l1())?)
            }
            Algorithm::FlafProp => SingleBranch::Prop(ProportionateFlaf::new(
                exp.expanded_len(),
                self.hyper.prop(),
            )?),
            Algorithm::Combined => {
                return Err(config_err("the combined scheme is not a standalone filter"))
            }
        };
        Ok(StandaloneFilter::new(linear, branch))
    }

    /// Copy with the two-segment tracking schedule: `first` then `second`
    /// from the midpoint on.
    pub fn with_tracking_schedule(&self, first: f64, second: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.zeta_schedule = ZetaSchedule::new(vec![(0, first), (self.signal_length / 2, second)])?;
        Ok(cfg)
    }
}

#[allow(clippy::large_enum_variant)]
enum Runner {
    Combined(CombinedFilter),
    Standalone(StandaloneFilter),
}

impl Runner {
    #[inline]
    fn step(&mut self, d: f64, x: &[f64], g: &[f64]) -> BranchOutputs {
        match self {
            Runner::Combined(f) => f.step_unchecked(d, x, g),
            Runner::Standalone(f) => f.step(d, x, g),
        }
    }
}

/// Per-sample output of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTraces {
    /// `(e[n] - v[n])^2` per requested algorithm, in request order.
    pub excess: Vec<(Algorithm, Vec<f64>)>,
    /// Mixing parameters of the combined scheme, row-major `[n * L + l]`.
    pub lambdas: Option<Vec<f64>>,
}

impl TrialTraces {
    pub fn get(&self, algorithm: Algorithm) -> Option<&[f64]> {
        self.excess
            .iter()
            .find(|(a, _)| *a == algorithm)
            .map(|(_, v)| v.as_slice())
    }
}

/// Per-sample diagnostic record of the combined scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingRecord<'a> {
    pub sample: usize,
    /// Mixing parameters after this sample's update.
    pub lambdas: &'a [f64],
    pub outputs: BranchOutputs,
    /// Per-block partial outputs of the two filters (pre-update weights).
    pub partials_l1: &'a [f64],
    pub partials_prop: &'a [f64],
}

/// Runs the combined scheme over run `run_index`'s signals, handing every
/// sample's record to `observe`.
pub fn trace_combined<F>(cfg: &ExperimentConfig, run_index: usize, mut observe: F) -> Result<()>
where
    F: FnMut(&MixingRecord<'_>),
{
    cfg.validate()?;
    let sig = cfg.signals(run_index)?;
    let mut expander = StreamingExpander::new(cfg.expansion()?);
    let mut filter = cfg.combined_filter()?;
    for n in 0..sig.len() {
        expander.push(sig.x[n])?;
        let outputs = filter.step_unchecked(sig.d[n], expander.window(), expander.expanded());
        let (p1, p2) = filter.last_partials();
        observe(&MixingRecord {
            sample: n,
            lambdas: filter.mixer().lambdas(),
            outputs,
            partials_l1: p1,
            partials_prop: p2,
        });
    }
    Ok(())
}

/// Runs every requested algorithm over the same realization.
pub fn run_trial(cfg: &ExperimentConfig, run_index: usize) -> Result<TrialTraces> {
    run_trial_inner(cfg, run_index, false)
}

fn run_trial_inner(
    cfg: &ExperimentConfig,
    run_index: usize,
    record_mixing: bool,
) -> Result<TrialTraces> {
    cfg.validate()?;
    let sig = cfg.signals(run_index)?;
    let mut expander = StreamingExpander::new(cfg.expansion()?);
    let mut runners = cfg
        .algorithms
        .iter()
        .map(|&a| {
            Ok(match a {
                Algorithm::Combined => Runner::Combined(cfg.combined_filter()?),
                other => Runner::Standalone(cfg.standalone_filter(other)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let len = sig.len();
    let mut excess: Vec<Vec<f64>> = vec![Vec::with_capacity(len); runners.len()];
    let combined_idx = cfg
        .algorithms
        .iter()
        .position(|a| *a == Algorithm::Combined);
    let mut lambdas =
        (record_mixing && combined_idx.is_some()).then(|| Vec::with_capacity(len * cfg.l_blocks));

    for n in 0..len {
        expander.push(sig.x[n])?;
        let (x, g) = (expander.window(), expander.expanded());
        for (runner, trace) in runners.iter_mut().zip(excess.iter_mut()) {
            let out = runner.step(sig.d[n], x, g);
            let ex = out.e - sig.v[n];
            trace.push(ex * ex);
        }
        if let (Some(lam), Some(i)) = (lambdas.as_mut(), combined_idx) {
            if let Runner::Combined(f) = &runners[i] {
                lam.extend_from_slice(f.mixer().lambdas());
            }
        }
    }
    Ok(TrialTraces {
        excess: cfg.algorithms.iter().copied().zip(excess).collect(),
        lambdas,
    })
}

/// Ensemble-averaged EMSE learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EmseTrace {
    /// `10 log10(mean_runs (e - v)^2)` per sample.
    pub db: Vec<f64>,
    pub num_runs: usize,
    pub config_hash: u64,
}

impl EmseTrace {
    pub fn len(&self) -> usize {
        self.db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.db.is_empty()
    }
}

fn to_db(power: f64) -> f64 {
    10.0 * power.max(EMSE_FLOOR).log10()
}

/// Order-stable per-sample sum (Neumaier compensation).
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    sum: Vec<f64>,
    comp: Vec<f64>,
    count: usize,
}

impl EnsembleAccumulator {
    pub fn new(len: usize) -> Self {
        Self {
            sum: vec![0.0; len],
            comp: vec![0.0; len],
            count: 0,
        }
    }

    pub fn add(&mut self, trace: &[f64]) -> Result<()> {
        if trace.len() != self.sum.len() {
            return Err(FlafError::LengthMismatch {
                got: trace.len(),
                expected: self.sum.len(),
            });
        }
        for ((s, c), &v) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(trace) {
            let t = *s + v;
            if s.abs() >= v.abs() {
                *c += (*s - t) + v;
            } else {
                *c += (v - t) + *s;
            }
            *s = t;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Pointwise mean.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum
            .iter()
            .zip(&self.comp)
            .map(|(s, c)| (s + c) / n)
            .collect()
    }

    /// Pointwise mean converted to dB.
    pub fn emse(&self, config_hash: u64) -> Result<EmseTrace> {
        if self.count == 0 {
            return Err(FlafError::Usage("no traces to average".into()));
        }
        Ok(EmseTrace {
            db: self.mean().into_iter().map(to_db).collect(),
            num_runs: self.count,
            config_hash,
        })
    }
}

/// Averages squared-excess traces in linear power, then converts to dB.
pub fn ensemble_emse(traces: &[Vec<f64>]) -> Result<EmseTrace> {
    let first = traces
        .first()
        .ok_or_else(|| FlafError::Usage("ensemble_emse needs at least one trace".into()))?;
    let mut acc = EnsembleAccumulator::new(first.len());
    for t in traces {
        acc.add(t)?;
    }
    acc.emse(0)
}

/// Mean of the trailing `window_fraction` of the dB curve.
pub fn steady_state_emse(trace: &EmseTrace, window_fraction: f64) -> Result<f64> {
    if !(window_fraction > 0.0 && window_fraction <= 0.5) {
        return Err(config_err(format!(
            "window fraction {window_fraction} outside (0, 0.5]"
        )));
    }
    steady_state_of(&trace.db, window_fraction)
}

fn steady_state_of(db: &[f64], window_fraction: f64) -> Result<f64> {
    if db.is_empty() {
        return Err(FlafError::Usage("empty EMSE trace".into()));
    }
    let n = ((db.len() as f64 * window_fraction).ceil() as usize).clamp(1, db.len());
    let tail = &db[db.len() - n..];
    Ok(tail.iter().sum::<f64>() / n as f64)
}

/// Result of a full Monte Carlo ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub traces: Vec<(Algorithm, EmseTrace)>,
    /// Ensemble-mean mixing parameters, row-major `[n * L + l]`, when recorded.
    pub lambda_mean: Option<Vec<f64>>,
    pub l_blocks: usize,
}

impl EnsembleResult {
    pub fn get(&self, algorithm: Algorithm) -> Option<&EmseTrace> {
        self.traces
            .iter()
            .find(|(a, _)| *a == algorithm)
            .map(|(_, t)| t)
    }

    /// Ensemble-mean trajectory of 0-based block `block`.
    pub fn lambda_block(&self, block: usize) -> Option<Vec<f64>> {
        let lam = self.lambda_mean.as_ref()?;
        (block < self.l_blocks).then(|| {
            lam.iter()
                .skip(block)
                .step_by(self.l_blocks)
                .copied()
                .collect()
        })
    }
}

/// Runs `cfg.num_runs` trials and averages them.
///
/// Trials run in parallel on the current rayon pool; reduction happens in run
/// order so results do not depend on the thread count.
pub fn run_ensemble(cfg: &ExperimentConfig, record_mixing: bool) -> Result<EnsembleResult> {
    cfg.validate()?;
    let len = cfg.signal_length;
    let hash = cfg.config_hash();
    let mut accs: Vec<EnsembleAccumulator> = cfg
        .algorithms
        .iter()
        .map(|_| EnsembleAccumulator::new(len))
        .collect();
    let record = record_mixing && cfg.algorithms.contains(&Algorithm::Combined);
    let mut lambda_acc = record.then(|| EnsembleAccumulator::new(len * cfg.l_blocks));

    let runs: Vec<usize> = (0..cfg.num_runs).collect();
    for chunk in runs.chunks(RUN_CHUNK) {
        let results = chunk
            .par_iter()
            .map(|&r| run_trial_inner(cfg, r, record))
            .collect::<Result<Vec<_>>>()?;
        for trial in results {
            for (acc, (_, trace)) in accs.iter_mut().zip(&trial.excess) {
                acc.add(trace)?;
            }
            if let (Some(acc), Some(lam)) = (lambda_acc.as_mut(), trial.lambdas.as_ref()) {
                acc.add(lam)?;
            }
        }
    }
    let traces = cfg
        .algorithms
        .iter()
        .copied()
        .zip(accs.iter().map(|a| a.emse(hash)))
        .map(|(a, t)| t.map(|t| (a, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleResult {
        traces,
        lambda_mean: lambda_acc.map(|a| a.mean()),
        l_blocks: cfg.l_blocks,
    })
}

/// One row of a block-count sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub l_blocks: usize,
    pub combined_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Steady-state EMSE of the standalone filters (independent of `L`).
    pub baselines: Vec<(Algorithm, f64)>,
}

impl SweepTable {
    pub fn combined_at(&self, l_blocks: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.l_blocks == l_blocks)
            .map(|r| r.combined_db)
    }

    pub fn baseline(&self, algorithm: Algorithm) -> Option<f64> {
        self.baselines
            .iter()
            .find(|(a, _)| *a == algorithm)
            .map(|(_, v)| *v)
    }
}

/// Steady-state EMSE of the combined scheme for each block count, plus the
/// standalone baselines computed once.
pub fn run_block_sweep(cfg: &ExperimentConfig, block_counts: &[usize]) -> Result<SweepTable> {
    cfg.validate()?;
    let exp = cfg.expansion()?;
    for &c in block_counts {
        exp.layout(c)?;
    }
    let standalone: Vec<Algorithm> = cfg
        .algorithms
        .iter()
        .copied()
        .filter(|a| *a != Algorithm::Combined)
        .collect();
    let mut baselines = Vec::new();
    if !standalone.is_empty() {
        let mut base = cfg.clone();
        base.algorithms = standalone;
        let res = run_ensemble(&base, false)?;
        for (a, t) in &res.traces {
            baselines.push((*a, steady_state_emse(t, cfg.steady_window)?));
        }
    }
    let mut rows = Vec::with_capacity(block_counts.len());
    if cfg.algorithms.contains(&Algorithm::Combined) {
        for &l in block_counts {
            let mut c = cfg.clone();
            c.l_blocks = l;
            c.algorithms = vec![Algorithm::Combined];
            let res = run_ensemble(&c, false)?;
            let t = res
                .get(Algorithm::Combined)
                .expect("combined trace requested");
            rows.push(SweepRow {
                l_blocks: l,
                combined_db: steady_state_emse(t, cfg.steady_window)?,
            });
        }
    }
    Ok(SweepTable { rows, baselines })
}

/// Runs a two-segment threshold-switch experiment, recording mixing parameters.
pub fn run_tracking(cfg: &ExperimentConfig) -> Result<EnsembleResult> {
    if cfg.zeta_schedule.segments().len() != 2 {
        return Err(config_err(
            "tracking needs a zeta schedule with exactly two segments",
        ));
    }
    run_ensemble(cfg, true)
}

/// Samples until the dB curve, smoothed over `smooth` samples, first comes
/// within `tol_db` of `target` after `from`.
pub fn reconvergence_time(
    db: &[f64],
    from: usize,
    target: f64,
    tol_db: f64,
    smooth: usize,
) -> Option<usize> {
    let smooth = smooth.max(1);
    if from + smooth > db.len() {
        return None;
    }
    let mut sum: f64 = db[from..from + smooth].iter().sum();
    for start in from..=db.len() - smooth {
        if start > from {
            sum += db[start + smooth - 1] - db[start - 1];
        }
        if sum / smooth as f64 <= target + tol_db {
            return Some(start - from);
        }
    }
    None
}

fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

fn write_meta<W: Write>(out: &mut W, cfg: &ExperimentConfig, kind: &str) -> std::io::Result<()> {
    writeln!(out, "# experiment = {kind}")?;
    for line in cfg.metadata_lines() {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// CSV with columns `sample, emse_db_<algorithm>...`.
pub fn write_learning_curves<W: Write>(
    mut out: W,
    cfg: &ExperimentConfig,
    kind: &str,
    result: &EnsembleResult,
) -> std::io::Result<()> {
    write_meta(&mut out, cfg, kind)?;
    write!(out, "sample")?;
    for (a, _) in &result.traces {
        write!(out, ",emse_db_{}", a.name())?;
    }
    writeln!(out)?;
    let len = result.traces.first().map_or(0, |(_, t)| t.len());
    for n in 0..len {
        write!(out, "{n}")?;
        for (_, t) in &result.traces {
            write!(out, ",{}", fmt9(t.db[n]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// CSV with columns `L_blocks, emse_db_combined, emse_db_<baseline>...`.
pub fn write_sweep<W: Write>(
    mut out: W,
    cfg: &ExperimentConfig,
    table: &SweepTable,
) -> std::io::Result<()> {
    write_meta(&mut out, cfg, "sweep")?;
    write!(out, "L_blocks,emse_db_combined")?;
    for (a, _) in &table.baselines {
        write!(out, ",emse_db_{}", a.name())?;
    }
    writeln!(out)?;
    for row in &table.rows {
        write!(out, "{},{}", row.l_blocks, fmt9(row.combined_db))?;
        for (_, v) in &table.baselines {
            write!(out, ",{}", fmt9(*v))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// CSV with columns `sample, lambda_1..lambda_L` (ensemble means).
pub fn write_mixing<W: Write>(
    mut out: W,
    cfg: &ExperimentConfig,
    result: &EnsembleResult,
) -> std::io::Result<()> {
    write_meta(&mut out, cfg, "mixing")?;
    let l = result.l_blocks;
    write!(out, "sample")?;
    for b in 1..=l {
        write!(out, ",lambda_{b}")?;
    }
    writeln!(out)?;
    if let Some(lam) = &result.lambda_mean {
        for (n, row) in lam.chunks_exact(l).enumerate() {
            write!(out, "{n}")?;
            for v in row {
                write!(out, ",{}", fmt9(*v))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}
