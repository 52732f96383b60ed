//! Functional-link expansion of a tap-delay-line window.
//!
//! Each input sample `x[n-i]` of the window is mapped through the functional
//! link set into `Qf` values. The expanded vector is sample-major: positions
//! `i*Qf .. i*Qf + Qf` hold the links of `x[n-i]`, so block `l` of sample `i`
//! is a contiguous slice.

use std::f64::consts::PI;

use crate::error::{config_err, FlafError, Result};

/// A memoryless functional link set applied independently to every sample.
pub trait FunctionalLinkSet {
    /// Number of links produced per input sample.
    fn links_per_sample(&self) -> usize;

    /// Writes the links of `x` into `out`, which has `links_per_sample()` slots.
    fn expand_sample(&self, x: f64, out: &mut [f64]);
}

/// Trigonometric series: `sin(p*pi*x), cos(p*pi*x)` for `p = 1..=P`, stored at
/// link indices `2p-2` and `2p-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trigonometric {
    pub order: usize,
}

impl FunctionalLinkSet for Trigonometric {
    fn links_per_sample(&self) -> usize {
        2 * self.order
    }

    fn expand_sample(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), 2 * self.order);
        for (p, pair) in out.chunks_exact_mut(2).enumerate() {
            let (s, c) = ((p + 1) as f64 * PI * x).sin_cos();
            pair[0] = s;
            pair[1] = c;
        }
    }
}

/// Sizes of the functional-link expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionConfig {
    memory: usize,
    order: usize,
}

impl ExpansionConfig {
    /// `memory` is the input buffer length `M`, `order` the expansion order `P`.
    pub fn new(memory: usize, order: usize) -> Result<Self> {
        if memory == 0 {
            return Err(config_err("input buffer length M must be positive"));
        }
        if order == 0 {
            return Err(config_err("expansion order P must be positive"));
        }
        Ok(Self { memory, order })
    }

    /// Input buffer length `M`.
    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Expansion order `P`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Links per input sample, `Qf = 2P`.
    pub fn links_per_sample(&self) -> usize {
        2 * self.order
    }

    /// Expanded vector length, `Me = M * Qf`.
    pub fn expanded_len(&self) -> usize {
        self.memory * self.links_per_sample()
    }

    pub fn link_set(&self) -> Trigonometric {
        Trigonometric { order: self.order }
    }

    /// Block layout for `blocks` blocks per sample group.
    pub fn layout(&self, blocks: usize) -> Result<BlockLayout> {
        BlockLayout::new(*self, blocks)
    }
}

fn check_window(window: &[f64], cfg: &ExpansionConfig) -> Result<()> {
    if window.len() != cfg.memory {
        return Err(FlafError::LengthMismatch {
            got: window.len(),
            expected: cfg.memory,
        });
    }
    if let Some((index, &value)) = window.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(FlafError::Domain { index, value });
    }
    Ok(())
}

/// Expands a window `x[n], x[n-1], ..., x[n-M+1]` into `g_n`.
pub fn expand(window: &[f64], cfg: &ExpansionConfig) -> Result<Vec<f64>> {
    let mut out = vec![0.0; cfg.expanded_len()];
    expand_into(window, cfg, &mut out)?;
    Ok(out)
}

/// Like [`expand`] but writes into a caller-provided buffer of length `Me`.
pub fn expand_into(window: &[f64], cfg: &ExpansionConfig, out: &mut [f64]) -> Result<()> {
    check_window(window, cfg)?;
    if out.len() != cfg.expanded_len() {
        return Err(FlafError::LengthMismatch {
            got: out.len(),
            expected: cfg.expanded_len(),
        });
    }
    let links = cfg.link_set();
    for (x, group) in window
        .iter()
        .zip(out.chunks_exact_mut(cfg.links_per_sample()))
    {
        links.expand_sample(*x, group);
    }
    Ok(())
}

/// Partition of each sample's `Qf` links into `L` contiguous blocks of `Mb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    cfg: ExpansionConfig,
    blocks: usize,
}

impl BlockLayout {
    pub fn new(cfg: ExpansionConfig, blocks: usize) -> Result<Self> {
        let qf = cfg.links_per_sample();
        if blocks == 0 || !qf.is_multiple_of(blocks) {
            return Err(config_err(format!(
                "L_blocks = {blocks} does not divide Qf = {qf}"
            )));
        }
        Ok(Self { cfg, blocks })
    }

    pub fn expansion(&self) -> ExpansionConfig {
        self.cfg
    }

    /// Number of blocks `L`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Coefficients per block, `Mb = Qf / L`.
    pub fn block_len(&self) -> usize {
        self.cfg.links_per_sample() / self.blocks
    }

    /// Start offset of block `block` (0-based) within sample `sample`.
    #[inline]
    pub fn offset(&self, sample: usize, block: usize) -> usize {
        sample * self.cfg.links_per_sample() + block * self.block_len()
    }

    /// Contiguous slice of block `block_index` (1-based, as in `l = 1..L`) of
    /// input sample `sample_index`.
    pub fn block_slice<'a>(
        &self,
        vec: &'a [f64],
        sample_index: usize,
        block_index: usize,
    ) -> Result<&'a [f64]> {
        if vec.len() != self.cfg.expanded_len() {
            return Err(FlafError::LengthMismatch {
                got: vec.len(),
                expected: self.cfg.expanded_len(),
            });
        }
        if sample_index >= self.cfg.memory {
            return Err(config_err(format!(
                "sample index {sample_index} out of range 0..{}",
                self.cfg.memory
            )));
        }
        if block_index == 0 || block_index > self.blocks {
            return Err(config_err(format!(
                "block index {block_index} out of range 1..={}",
                self.blocks
            )));
        }
        let start = self.offset(sample_index, block_index - 1);
        Ok(&vec[start..start + self.block_len()])
    }

    /// Per-block partial inner products `sum_i g^(i,l) . w^(i,l)`, written to `out`.
    #[inline]
    pub fn block_dots(&self, g: &[f64], w: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.blocks);
        out.iter_mut().for_each(|v| *v = 0.0);
        let mb = self.block_len();
        for (gs, ws) in g
            .chunks_exact(self.cfg.links_per_sample())
            .zip(w.chunks_exact(self.cfg.links_per_sample()))
        {
            for ((acc, gb), wb) in out
                .iter_mut()
                .zip(gs.chunks_exact(mb))
                .zip(ws.chunks_exact(mb))
            {
                *acc += dot(gb, wb);
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Streaming tap-delay line holding the current window and its expansion.
///
/// Pushing a sample shifts both buffers by one group, so only the newest
/// sample is run through the link set.
#[derive(Debug, Clone)]
pub struct StreamingExpander {
    cfg: ExpansionConfig,
    window: Vec<f64>,
    expanded: Vec<f64>,
}

impl StreamingExpander {
    /// Starts from an all-zero pre-history.
    pub fn new(cfg: ExpansionConfig) -> Self {
        let window = vec![0.0; cfg.memory()];
        let expanded = expand(&window, &cfg).expect("zero window is always valid");
        Self {
            cfg,
            window,
            expanded,
        }
    }

    pub fn push(&mut self, x: f64) -> Result<()> {
        if !(x.abs() <= 1.0) {
            return Err(FlafError::Domain { index: 0, value: x });
        }
        let qf = self.cfg.links_per_sample();
        let me = self.expanded.len();
        self.window.copy_within(..self.cfg.memory() - 1, 1);
        self.window[0] = x;
        self.expanded.copy_within(..me - qf, qf);
        self.cfg
            .link_set()
            .expand_sample(x, &mut self.expanded[..qf]);
        Ok(())
    }

    /// Current window `x[n], ..., x[n-M+1]`.
    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Current expanded vector `g_n`.
    pub fn expanded(&self) -> &[f64] {
        &self.expanded
    }

    pub fn config(&self) -> ExpansionConfig {
        self.cfg
    }
}
