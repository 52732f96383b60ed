//! Block-based convex combination of the two sparse FLAFs.
//!
//! Each of the `L` blocks has its own mixing parameter `lambda_l`, shared by
//! block `l` of every input-sample group. `lambda_l` is the affine-sigmoid
//! image of an auxiliary parameter `a_l`, adapted by a power-normalized
//! gradient step driven by the overall error.

use crate::error::{config_err, FlafError, Result};
use crate::expansion::{dot, BlockLayout};
use crate::filters::{LinearFilter, ProportionateFlaf, ZaFlaf};

/// Magnitude at which the sigmoid map reaches exactly 0 or 1.
pub const A_LIMIT: f64 = 4.0;

/// Below this, the normalized mixing step for a block is skipped.
pub const MIN_DELTA_POWER: f64 = 1e-12;

/// `theta = 1 / (1 + e^4)`.
#[inline]
pub fn theta() -> f64 {
    1.0 / (1.0 + A_LIMIT.exp())
}

/// `eta = 1 / (1 - 2 theta)`.
#[inline]
pub fn eta() -> f64 {
    1.0 / (1.0 - 2.0 * theta())
}

/// `lambda = eta (sigmoid(a) - theta)`, clamped to `[0, 1]` against round-off
/// at the clip boundary.
#[inline]
pub fn lambda_from_a(a: f64) -> f64 {
    let sigmoid = 1.0 / (1.0 + (-a).exp());
    (eta() * (sigmoid - theta())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinerParams {
    /// Combination step size `mu_c`.
    pub step_size: f64,
    /// Smoothing factor `beta_r` of the delta-power estimates.
    pub smoothing: f64,
    pub a_init: f64,
    pub r_init: f64,
}

impl CombinerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(config_err(format!(
                "mu_c = {} must be nonnegative",
                self.step_size
            )));
        }
        if !(self.smoothing > 0.0 && self.smoothing < 1.0) {
            return Err(config_err(format!(
                "beta_r = {} outside (0, 1)",
                self.smoothing
            )));
        }
        if !(self.a_init.abs() <= A_LIMIT) {
            return Err(config_err(format!(
                "a_init = {} outside [-4, 4]",
                self.a_init
            )));
        }
        if !(self.r_init >= 0.0 && self.r_init.is_finite()) {
            return Err(config_err(format!(
                "r_init = {} must be nonnegative",
                self.r_init
            )));
        }
        Ok(())
    }
}

/// Per-block mixing state.
#[derive(Debug, Clone)]
pub struct CombinerState {
    layout: BlockLayout,
    params: CombinerParams,
    aux: Vec<f64>,
    lambda: Vec<f64>,
    delta_power: Vec<f64>,
    theta: f64,
    eta: f64,
}

impl CombinerState {
    pub fn new(layout: BlockLayout, params: CombinerParams) -> Result<Self> {
        params.validate()?;
        let l = layout.blocks();
        Ok(Self {
            layout,
            params,
            aux: vec![params.a_init; l],
            lambda: vec![lambda_from_a(params.a_init); l],
            delta_power: vec![params.r_init; l],
            theta: theta(),
            eta: eta(),
        })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn params(&self) -> &CombinerParams {
        &self.params
    }

    /// Auxiliary parameters `a_l`.
    pub fn aux(&self) -> &[f64] {
        &self.aux
    }

    /// Mixing parameters `lambda_l`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    /// Delta-power estimates `r_l`.
    pub fn delta_powers(&self) -> &[f64] {
        &self.delta_power
    }

    /// Overrides every `a_l` (and the matching `lambda_l`).
    pub fn set_aux(&mut self, aux: &[f64]) -> Result<()> {
        if aux.len() != self.aux.len() {
            return Err(FlafError::LengthMismatch {
                got: aux.len(),
                expected: self.aux.len(),
            });
        }
        for (i, &a) in aux.iter().enumerate() {
            self.aux[i] = a.clamp(-A_LIMIT, A_LIMIT);
            self.lambda[i] = lambda_from_a(self.aux[i]);
        }
        Ok(())
    }

    /// Combines per-block partial outputs: `sum_l lambda_l p1_l + (1 - lambda_l) p2_l`.
    #[inline]
    pub fn mix_partials(&self, p1: &[f64], p2: &[f64]) -> f64 {
        self.lambda
            .iter()
            .zip(p1.iter().zip(p2))
            .map(|(lam, (a, b))| lam * a + (1.0 - lam) * b)
            .sum()
    }

    /// Adapts `a_l` with `r_l[n-1]`, clips to `[-4, 4]`, refreshes `lambda_l`,
    /// then updates `r_l` with this sample's delta.
    pub fn update_mixing(&mut self, err: f64, deltas: &[f64]) -> Result<()> {
        if deltas.len() != self.aux.len() {
            return Err(FlafError::LengthMismatch {
                got: deltas.len(),
                expected: self.aux.len(),
            });
        }
        self.update_mixing_unchecked(err, deltas);
        Ok(())
    }

    #[inline]
    fn update_mixing_unchecked(&mut self, err: f64, deltas: &[f64]) {
        let (theta, eta) = (self.theta, self.eta);
        let mu = self.params.step_size;
        let beta = self.params.smoothing;
        for (((a, lam), r), &delta) in self
            .aux
            .iter_mut()
            .zip(self.lambda.iter_mut())
            .zip(self.delta_power.iter_mut())
            .zip(deltas)
        {
            if *r >= MIN_DELTA_POWER {
                let slope = (*lam + theta * eta) * (eta - theta * eta - *lam);
                *a = (*a + mu / (eta * *r) * err * delta * slope).clamp(-A_LIMIT, A_LIMIT);
                *lam = lambda_from_a(*a);
            }
            *r = beta * *r + (1.0 - beta) * delta * delta;
        }
    }
}

fn check_len(v: &[f64], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(FlafError::LengthMismatch {
            got: v.len(),
            expected,
        })
    }
}

/// Output of the block-based combination for expanded vector `g`.
pub fn combined_output(g: &[f64], w1: &[f64], w2: &[f64], state: &CombinerState) -> Result<f64> {
    let layout = state.layout();
    let me = layout.expansion().expanded_len();
    check_len(g, me)?;
    check_len(w1, me)?;
    check_len(w2, me)?;
    let mut p1 = vec![0.0; layout.blocks()];
    let mut p2 = vec![0.0; layout.blocks()];
    layout.block_dots(g, w1, &mut p1);
    layout.block_dots(g, w2, &mut p2);
    Ok(state.mix_partials(&p1, &p2))
}

/// `Delta y_l = sum_i g^(i,l) . (w1^(i,l) - w2^(i,l))` for 1-based block `l`.
pub fn block_delta(
    g: &[f64],
    w1: &[f64],
    w2: &[f64],
    l: usize,
    layout: &BlockLayout,
) -> Result<f64> {
    let me = layout.expansion().expanded_len();
    check_len(g, me)?;
    check_len(w1, me)?;
    check_len(w2, me)?;
    if l == 0 || l > layout.blocks() {
        return Err(config_err(format!(
            "block index {l} out of range 1..={}",
            layout.blocks()
        )));
    }
    let mb = layout.block_len();
    Ok((0..layout.expansion().memory())
        .map(|i| {
            let s = layout.offset(i, l - 1);
            let r = s..s + mb;
            dot(&g[r.clone()], &w1[r.clone()]) - dot(&g[r.clone()], &w2[r])
        })
        .sum())
}

/// All signals of one sample, computed with the pre-update weights.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BranchOutputs {
    pub d: f64,
    pub y_linear: f64,
    pub y_l1: f64,
    pub y_prop: f64,
    /// Output of the nonlinear branch actually used (`y_FL`).
    pub y_nonlinear: f64,
    /// Overall error `d - (y_L + y_FL)`.
    pub e: f64,
    pub e_l1: f64,
    pub e_prop: f64,
    /// Variable step size applied to the l1 filter this sample.
    pub vss_step: f64,
}

/// The full combined scheme: linear NLMS branch in parallel with the convex
/// block combination of a [`ZaFlaf`] and a [`ProportionateFlaf`].
#[derive(Debug, Clone)]
pub struct CombinedFilter {
    linear: LinearFilter,
    l1: ZaFlaf,
    prop: ProportionateFlaf,
    mixer: CombinerState,
    p1: Vec<f64>,
    p2: Vec<f64>,
    deltas: Vec<f64>,
}

impl CombinedFilter {
    pub fn new(
        linear: LinearFilter,
        l1: ZaFlaf,
        prop: ProportionateFlaf,
        mixer: CombinerState,
    ) -> Result<Self> {
        let layout = *mixer.layout();
        let cfg = layout.expansion();
        check_len(linear.weights(), cfg.memory())?;
        check_len(l1.weights(), cfg.expanded_len())?;
        check_len(prop.weights(), cfg.expanded_len())?;
        let l = layout.blocks();
        Ok(Self {
            linear,
            l1,
            prop,
            mixer,
            p1: vec![0.0; l],
            p2: vec![0.0; l],
            deltas: vec![0.0; l],
        })
    }

    pub fn linear(&self) -> &LinearFilter {
        &self.linear
    }

    pub fn l1(&self) -> &ZaFlaf {
        &self.l1
    }

    pub fn prop(&self) -> &ProportionateFlaf {
        &self.prop
    }

    pub fn mixer(&self) -> &CombinerState {
        &self.mixer
    }

    pub fn mixer_mut(&mut self) -> &mut CombinerState {
        &mut self.mixer
    }

    /// Per-block partial outputs of the two filters from the last step.
    pub fn last_partials(&self) -> (&[f64], &[f64]) {
        (&self.p1, &self.p2)
    }

    /// Processes one sample given the window `x` and its expansion `g`.
    pub fn step(&mut self, d: f64, x: &[f64], g: &[f64]) -> Result<BranchOutputs> {
        let cfg = self.mixer.layout().expansion();
        check_len(x, cfg.memory())?;
        check_len(g, cfg.expanded_len())?;
        Ok(self.step_unchecked(d, x, g))
    }

    #[inline]
    pub(crate) fn step_unchecked(&mut self, d: f64, x: &[f64], g: &[f64]) -> BranchOutputs {
        let layout = *self.mixer.layout();
        let y_linear = self.linear.output(x);
        layout.block_dots(g, self.l1.weights(), &mut self.p1);
        layout.block_dots(g, self.prop.weights(), &mut self.p2);
        let y_l1: f64 = self.p1.iter().sum();
        let y_prop: f64 = self.p2.iter().sum();
        let y_nonlinear = self.mixer.mix_partials(&self.p1, &self.p2);
        for ((dl, a), b) in self.deltas.iter_mut().zip(&self.p1).zip(&self.p2) {
            *dl = a - b;
        }
        let e = d - (y_linear + y_nonlinear);
        let e_l1 = d - (y_linear + y_l1);
        let e_prop = d - (y_linear + y_prop);

        let vss_step = self.l1.step(g, d, y_linear, y_l1, e_l1);
        self.prop.adapt(g, e_prop);
        self.linear.adapt(x, e);
        self.mixer.update_mixing_unchecked(e, &self.deltas);

        BranchOutputs {
            d,
            y_linear,
            y_l1,
            y_prop,
            y_nonlinear,
            e,
            e_l1,
            e_prop,
            vss_step,
        }
    }
}

/// Nonlinear branch of a standalone (uncombined) scheme.
#[derive(Debug, Clone)]
pub enum SingleBranch {
    L1(ZaFlaf),
    Prop(ProportionateFlaf),
}

/// Linear NLMS branch plus a single sparse FLAF; both adapt on the overall error.
#[derive(Debug, Clone)]
pub struct StandaloneFilter {
    linear: LinearFilter,
    branch: SingleBranch,
}

impl StandaloneFilter {
    pub fn new(linear: LinearFilter, branch: SingleBranch) -> Self {
        Self { linear, branch }
    }

    pub fn linear(&self) -> &LinearFilter {
        &self.linear
    }

    pub fn branch(&self) -> &SingleBranch {
        &self.branch
    }

    #[inline]
    pub fn step(&mut self, d: f64, x: &[f64], g: &[f64]) -> BranchOutputs {
        let y_linear = self.linear.output(x);
        let mut out = BranchOutputs {
            d,
            y_linear,
            ..Default::default()
        };
        match &mut self.branch {
            SingleBranch::L1(f) => {
                let y = f.output(g);
                let e = d - (y_linear + y);
                out.y_l1 = y;
                out.y_nonlinear = y;
                out.e = e;
                out.e_l1 = e;
                out.vss_step = f.step(g, d, y_linear, y, e);
            }
            SingleBranch::Prop(f) => {
                let y = f.output(g);
                let e = d - (y_linear + y);
                out.y_prop = y;
                out.y_nonlinear = y;
                out.e = e;
                out.e_prop = e;
                f.adapt(g, e);
            }
        }
        self.linear.adapt(x, out.e);
        out
    }
}
