//! Built-in consistency checks: the golden five-sample trace of the combined
//! scheme and the reduction identities between the update rules.

use crate::combiner::{CombinedFilter, CombinerParams, CombinerState};
use crate::error::Result;
use crate::expansion::{ExpansionConfig, StreamingExpander};
use crate::experiment::ExperimentConfig;
use crate::filters::{
    LinearFilter, NlmsParams, ProportionateFlaf, ProportionateParams, ZaFlaf, ZaParams,
};
use crate::plant::gen_colored_input;

/// One sample of the golden trace. Weights are post-update; outputs use the
/// pre-update weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRow {
    pub y_linear: f64,
    pub y_l1: f64,
    pub y_prop: f64,
    pub y_combined: f64,
    pub error: f64,
    pub vss_step: f64,
    pub lambda: f64,
    pub w_linear: [f64; 2],
    pub w_l1: [f64; 4],
    pub w_prop: [f64; 4],
}

/// Input of the golden trace.
pub const GOLDEN_X: [f64; 5] = [0.3, -0.5, 0.8, 0.1, -0.9];
/// Desired signal of the golden trace.
pub const GOLDEN_D: [f64; 5] = [0.2, -0.4, 0.7, 0.05, -0.6];

/// Reference values from `tests/oracle/golden_trace.py`.
pub const GOLDEN_TRACE: [GoldenRow; 5] = [
    GoldenRow {
        y_linear: 0.0,
        y_l1: 0.0,
        y_prop: 0.0,
        y_combined: 0.0,
        error: 0.2,
        vss_step: 3.5175395145262565,
        lambda: 0.5,
        w_linear: [0.06593406593406594, 0.0],
        w_l1: [
            0.008025962245783209,
            0.005831202899726916,
            0.0,
            0.009920634920634922,
        ],
        w_prop: [
            0.008057938190985534,
            0.0058544347837895735,
            0.0,
            0.009960159362549802,
        ],
    },
    GoldenRow {
        y_linear: -0.03296703296703297,
        y_l1: -0.0021947593460562922,
        y_prop: -0.002203503407195959,
        y_combined: -0.0021991313766261257,
        error: -0.3648338356563409,
        vss_step: 4.187885341134284,
        lambda: 0.49999988081080426,
        w_linear: [0.11942876324437987, -0.03209681838618835],
        w_l1: [
            -0.07290370611032698,
            -0.09856156292922405,
            -0.004345733969826532,
            -0.11047841840508614,
        ],
        w_prop: [
            0.029498862596635915,
            0.005854434783789573,
            -0.008196234196124199,
            -0.004211819857563224,
        ],
    },
    GoldenRow {
        y_linear: 0.11159141978859809,
        y_l1: 0.04123199008260972,
        y_prop: 0.020798893357283257,
        y_combined: 0.031015439284542125,
        error: 0.5573931409268598,
        vss_step: 3.6265341083727964,
        lambda: 0.5004726855006731,
        w_linear: [0.16947528543758839, -0.06337589475694366],
        w_l1: [
            0.036430521792021685,
            -0.05018720816467011,
            0.07516833653523602,
            -0.02456107196964115,
        ],
        w_prop: [
            0.058740768697370674,
            -0.012101268044650417,
            -0.0331197985452809,
            -0.004211819857563223,
        ],
    },
    GoldenRow {
        y_linear: -0.033753187261796096,
        y_l1: 0.02757994326628582,
        y_prop: -0.009416989340962918,
        y_combined: 0.009098964876274276,
        error: 0.07465422238552183,
        vss_step: 3.7533294491895095,
        lambda: 0.5006000762730106,
        w_linear: [0.17062204768621392, -0.054201796767939445],
        w_l1: [
            -0.054985323755361665,
            0.04421994652440427,
            -0.012821459804872287,
            0.06663800613714452,
        ],
        w_prop: [
            0.06160235391088944,
            -0.008013700125901725,
            -0.029279058049939504,
            -0.0070098049822675135,
        ],
    },
    GoldenRow {
        y_linear: -0.15898002259438648,
        y_l1: 0.03435019218660424,
        y_prop: -0.027129139750656384,
        y_combined: 0.003647418506350022,
        error: -0.4446673959119635,
        vss_step: 3.2258437164078133,
        lambda: 0.4991993632382322,
        w_linear: [0.21936756002735486, -0.059617964805844],
        w_l1: [
            0.031006793746988635,
            -0.015124128147717797,
            0.0643082478140635,
            -0.03833081367975974,
        ],
        w_prop: [
            0.07626085399937048,
            0.010036280489360692,
            -0.03863342122747391,
            -0.024552781577375768,
        ],
    },
];

/// `M = 2, P = 1`, one block, with penalties large enough that the two
/// sparse filters diverge within five samples.
pub fn golden_filter() -> Result<(StreamingExpander, CombinedFilter)> {
    let exp = ExpansionConfig::new(2, 1)?;
    let linear = LinearFilter::new(
        2,
        NlmsParams {
            step_size: 0.1,
            regularization: 1e-3,
        },
    )?;
    let l1 = ZaFlaf::new(
        4,
        ZaParams {
            proportionate: ProportionateParams {
                step_size: 0.1,
                regularization: 1e-3,
                alpha: 0.5,
                xi: 0.01,
            },
            gamma: 0.05,
            epsilon: 0.5,
            beta: 0.9,
            xi_vss: 0.01,
        },
    )?;
    let prop = ProportionateFlaf::new(
        4,
        ProportionateParams {
            step_size: 0.1,
            regularization: 1e-3,
            alpha: 0.0,
            xi: 0.01,
        },
    )?;
    let mixer = CombinerState::new(
        exp.layout(1)?,
        CombinerParams {
            step_size: 0.5,
            smoothing: 0.9,
            a_init: 0.0,
            r_init: 1.0,
        },
    )?;
    Ok((
        StreamingExpander::new(exp),
        CombinedFilter::new(linear, l1, prop, mixer)?,
    ))
}

/// Runs the library over the golden input.
pub fn run_golden_trace() -> Result<Vec<GoldenRow>> {
    let (mut expander, mut filter) = golden_filter()?;
    let mut rows = Vec::with_capacity(GOLDEN_X.len());
    for (&x, &d) in GOLDEN_X.iter().zip(&GOLDEN_D) {
        expander.push(x)?;
        let out = filter.step(d, expander.window(), expander.expanded())?;
        let mut row = GoldenRow {
            y_linear: out.y_linear,
            y_l1: out.y_l1,
            y_prop: out.y_prop,
            y_combined: out.y_nonlinear,
            error: out.e,
            vss_step: out.vss_step,
            lambda: filter.mixer().lambdas()[0],
            w_linear: [0.0; 2],
            w_l1: [0.0; 4],
            w_prop: [0.0; 4],
        };
        row.w_linear.copy_from_slice(filter.linear().weights());
        row.w_l1.copy_from_slice(filter.l1().weights());
        row.w_prop.copy_from_slice(filter.prop().weights());
        rows.push(row);
    }
    Ok(rows)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Largest `|a_k - b_k|` relative to `max_k |b_k|`.
pub fn vector_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Compares every traced quantity against [`GOLDEN_TRACE`].
pub fn check_golden_trace(tol: f64) -> Result<CheckResult> {
    let rows = run_golden_trace()?;
    let mut worst = 0.0_f64;
    let mut failures = Vec::new();
    for (n, (got, want)) in rows.iter().zip(GOLDEN_TRACE.iter()).enumerate() {
        let scalars = [
            ("y_L", got.y_linear, want.y_linear),
            ("y_FL1", got.y_l1, want.y_l1),
            ("y_FL2", got.y_prop, want.y_prop),
            ("y_FL", got.y_combined, want.y_combined),
            ("e", got.error, want.error),
            ("mu_R", got.vss_step, want.vss_step),
            ("lambda", got.lambda, want.lambda),
        ];
        let vectors: [(&str, &[f64], &[f64]); 3] = [
            ("w_L", &got.w_linear, &want.w_linear),
            ("w_FL1", &got.w_l1, &want.w_l1),
            ("w_FL2", &got.w_prop, &want.w_prop),
        ];
        let pairs =
            scalars
                .iter()
                .map(|&(name, a, b)| (name, a, b))
                .chain(vectors.iter().flat_map(|(name, a, b)| {
                    a.iter().zip(b.iter()).map(move |(x, y)| (*name, *x, *y))
                }));
        for (name, a, b) in pairs {
            if a != b {
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
            }
            if !rel_close(a, b, tol) {
                failures.push(format!("sample {n} {name}: {a} vs {b}"));
            }
        }
    }
    Ok(CheckResult {
        name: "golden_trace",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("worst relative error {worst:.2e}")
        } else {
            failures.join("; ")
        },
    })
}

fn expanded_stream(steps: usize, memory: usize, order: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let exp = ExpansionConfig::new(memory, order)?;
    let x = gen_colored_input(steps, seed)?;
    let mut s = StreamingExpander::new(exp);
    x.iter()
        .map(|&v| {
            s.push(v)?;
            Ok(s.expanded().to_vec())
        })
        .collect()
}

fn target_stream(g: &[Vec<f64>]) -> Vec<f64> {
    g.iter()
        .enumerate()
        .map(|(n, gn)| {
            gn.iter()
                .enumerate()
                .map(|(k, v)| v * ((k + n % 7) as f64 * 0.37).sin() / (1.0 + k as f64))
                .sum()
        })
        .collect()
}

/// With no penalty, the l1 update tracks the proportionate update step for step.
pub fn check_l1_reduces_to_proportionate(steps: usize, tol: f64) -> Result<CheckResult> {
    let g = expanded_stream(steps, 4, 3, 11)?;
    let d = target_stream(&g);
    let me = g[0].len();
    let hyper = crate::experiment::Hyperparams {
        gamma: 0.0,
        ..Default::default()
    };
    let mut za = ZaFlaf::new(me, hyper.l1())?;
    let mut pf = ProportionateFlaf::new(me, hyper.prop())?;
    let mut worst = 0.0_f64;
    for (gn, &dn) in g.iter().zip(&d) {
        let (ya, yb) = (za.output(gn), pf.output(gn));
        za.step(gn, dn, 0.0, ya, dn - ya);
        pf.adapt(gn, dn - yb);
        worst = worst.max(vector_rel_err(za.weights(), pf.weights()));
    }
    Ok(CheckResult {
        name: "reduction_l1_to_proportionate",
        passed: worst <= tol,
        detail: format!("worst relative deviation {worst:.2e} over {steps} steps"),
    })
}

/// With `alpha = -1` the proportionate update equals NLMS with `delta * Me`.
pub fn check_uniform_proportionate_is_nlms(steps: usize, tol: f64) -> Result<CheckResult> {
    let g = expanded_stream(steps, 4, 3, 12)?;
    let d = target_stream(&g);
    let me = g[0].len();
    let params = ProportionateParams {
        step_size: 0.1,
        regularization: 1e-3,
        alpha: -1.0,
        xi: 0.01,
    };
    let mut pf = ProportionateFlaf::new(me, params)?;
    let mut nlms = LinearFilter::new(
        me,
        NlmsParams {
            step_size: params.step_size,
            regularization: params.regularization * me as f64,
        },
    )?;
    let mut worst = 0.0_f64;
    for (gn, &dn) in g.iter().zip(&d) {
        let (ya, yb) = (pf.output(gn), nlms.output(gn));
        pf.adapt(gn, dn - ya);
        nlms.adapt(gn, dn - yb);
        worst = worst.max(vector_rel_err(pf.weights(), nlms.weights()));
    }
    Ok(CheckResult {
        name: "reduction_uniform_proportionate_to_nlms",
        passed: worst <= tol,
        detail: format!("worst relative deviation {worst:.2e} over {steps} steps"),
    })
}

/// Largest relative deviation between the frozen-mixing combined output and
/// the matching standalone filter's nonlinear output, for `a = +4` (l1 side)
/// and `a = -4` (proportionate side).
pub fn endpoint_recovery_error(cfg: &ExperimentConfig, run_index: usize) -> Result<(f64, f64)> {
    let mut cfg = cfg.clone();
    cfg.hyper.mu_c = 0.0;
    let sig = cfg.signals(run_index)?;
    let mut out = [0.0_f64; 2];
    for (slot, a) in [4.0, -4.0].into_iter().enumerate() {
        cfg.hyper.a_init = a;
        let mut comb = cfg.combined_filter()?;
        let mut single = cfg.standalone_filter(if a > 0.0 {
            crate::experiment::Algorithm::FlafL1
        } else {
            crate::experiment::Algorithm::FlafProp
        })?;
        let mut expander = StreamingExpander::new(cfg.expansion()?);
        let mut pairs = Vec::with_capacity(sig.len());
        for n in 0..sig.len() {
            expander.push(sig.x[n])?;
            let c = comb.step(sig.d[n], expander.window(), expander.expanded())?;
            let s = single.step(sig.d[n], expander.window(), expander.expanded());
            pairs.push((c.y_nonlinear, s.y_nonlinear));
        }
        // Per-sample deviation relative to max(|y[n]|, rms(y)), so isolated
        // zero crossings do not dominate.
        let rms = (pairs.iter().map(|(_, s)| s * s).sum::<f64>() / pairs.len() as f64).sqrt();
        out[slot] = pairs.iter().fold(0.0_f64, |m, (c, s)| {
            m.max((c - s).abs() / s.abs().max(rms).max(f64::MIN_POSITIVE))
        });
    }
    Ok((out[0], out[1]))
}

/// Frozen mixing at either clip boundary reproduces the component filters.
pub fn check_endpoint_recovery(tol: f64) -> Result<CheckResult> {
    let cfg = ExperimentConfig {
        memory: 4,
        order: 3,
        l_blocks: 3,
        signal_length: 2000,
        ..Default::default()
    };
    let (l1, prop) = endpoint_recovery_error(&cfg, 0)?;
    Ok(CheckResult {
        name: "endpoint_recovery",
        passed: l1 <= tol && prop <= tol,
        detail: format!("l1 side {l1:.2e}, proportionate side {prop:.2e}"),
    })
}

/// Every built-in check at its pinned tolerance.
pub fn run_all() -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_golden_trace(1e-10)?,
        check_l1_reduces_to_proportionate(1000, 1e-12)?,
        check_uniform_proportionate_is_nlms(1000, 1e-12)?,
        check_endpoint_recovery(1e-12)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all().unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn golden_check_detects_perturbation() {
        let rows = run_golden_trace().unwrap();
        assert!(!rel_close(
            rows[3].w_l1[0] * (1.0 + 1e-8),
            GOLDEN_TRACE[3].w_l1[0],
            1e-10
        ));
    }
}
