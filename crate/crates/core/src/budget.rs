//! Parameter and MAC accounting for declarative model graphs.
//!
//! A graph is a JSON document with an `input` block and an ordered list of
//! layers. Shapes are propagated through the list so that channel mismatches
//! are reported with the offending layer index, and `repeat` groups are
//! expanded before anything is counted.
//!
//! Counting convention: one MAC is one multiply-accumulate. Biases,
//! activations, normalization and elementwise ops cost nothing. Attention
//! along image rows costs its four `C×C` projections per pixel plus
//! `2·H·W²·C` for the score and apply products of each left/right pair.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible parameter count.
pub const PARAM_LIMIT: u64 = 1_000_000;
/// Largest admissible MAC count at the reference input.
pub const MACS_LIMIT: u64 = 400_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BudgetError {
    #[error("graph parse error: {0}")]
    Parse(String),
    #[error("layer {index} ({op}): {reason}")]
    Shape {
        index: usize,
        op: &'static str,
        reason: String,
    },
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default = "InputSpec::default_height")]
    pub height: usize,
    #[serde(default = "InputSpec::default_width")]
    pub width: usize,
    #[serde(default = "InputSpec::default_views")]
    pub views: usize,
    #[serde(default = "InputSpec::default_channels")]
    pub channels: usize,
}

impl InputSpec {
    fn default_height() -> usize {
        180
    }
    fn default_width() -> usize {
        320
    }
    fn default_views() -> usize {
        2
    }
    fn default_channels() -> usize {
        3
    }
}

impl Default for InputSpec {
    fn default() -> Self {
        Self {
            height: 180,
            width: 320,
            views: 2,
            channels: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaddingMode {
    /// `(k - 1) / 2` on each side.
    Same,
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Padding {
    Explicit(usize),
    Mode(PaddingMode),
}

impl Default for Padding {
    fn default() -> Self {
        Padding::Mode(PaddingMode::Same)
    }
}

impl Padding {
    fn pixels(self, k: usize) -> usize {
        match self {
            Padding::Explicit(p) => p,
            Padding::Mode(PaddingMode::Same) => (k - 1) / 2,
            Padding::Mode(PaddingMode::Valid) => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv2dSpec {
    pub in_ch: usize,
    pub out_ch: usize,
    /// Square kernel size; `kernel_h`/`kernel_w` override it per axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_w: Option<usize>,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub padding: Padding,
    #[serde(default = "one")]
    pub groups: usize,
    #[serde(default = "yes")]
    pub bias: bool,
}

impl Conv2dSpec {
    /// `k×k` convolution, stride 1, same padding, with bias.
    pub fn square(in_ch: usize, out_ch: usize, k: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            k: Some(k),
            kernel_h: None,
            kernel_w: None,
            stride: 1,
            padding: Padding::default(),
            groups: 1,
            bias: true,
        }
    }

    pub fn kernel(&self) -> (usize, usize) {
        let k = self.k.unwrap_or(0);
        (self.kernel_h.unwrap_or(k), self.kernel_w.unwrap_or(k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d(Conv2dSpec),
    Linear {
        in_features: usize,
        out_features: usize,
        #[serde(default = "yes")]
        bias: bool,
    },
    PixelShuffle {
        r: usize,
    },
    /// Attention along the width of each row, across a left/right pair.
    RowAttention {
        channels: usize,
        #[serde(default = "yes")]
        bias: bool,
    },
    Elementwise {
        #[serde(default)]
        kind: String,
    },
    Norm {
        channels: usize,
    },
    Repeat {
        count: usize,
        layers: Vec<LayerSpec>,
    },
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d(_) => "conv2d",
            LayerSpec::Linear { .. } => "linear",
            LayerSpec::PixelShuffle { .. } => "pixel_shuffle",
            LayerSpec::RowAttention { .. } => "row_attention",
            LayerSpec::Elementwise { .. } => "elementwise",
            LayerSpec::Norm { .. } => "norm",
            LayerSpec::Repeat { .. } => "repeat",
        }
    }

    fn describe(&self) -> String {
        match self {
            LayerSpec::Conv2d(c) => {
                let (kh, kw) = c.kernel();
                let g = if c.groups > 1 {
                    format!(" g{}", c.groups)
                } else {
                    String::new()
                };
                format!("conv2d {}->{} {}x{}{}", c.in_ch, c.out_ch, kh, kw, g)
            }
            LayerSpec::Linear {
                in_features,
                out_features,
                ..
            } => format!("linear {in_features}->{out_features}"),
            LayerSpec::PixelShuffle { r } => format!("pixel_shuffle r{r}"),
            LayerSpec::RowAttention { channels, .. } => format!("row_attention C{channels}"),
            LayerSpec::Elementwise { kind } if kind.is_empty() => "elementwise".to_string(),
            LayerSpec::Elementwise { kind } => format!("elementwise {kind}"),
            LayerSpec::Norm { channels } => format!("norm C{channels}"),
            LayerSpec::Repeat { count, .. } => format!("repeat x{count}"),
        }
    }
}

/// Per-view activation shape after a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    #[serde(default)]
    input: InputSpec,
    layers: Vec<LayerSpec>,
}

/// How row attention is charged. Only the default is used for verdicts;
/// the alternative exists for comparison with counters that skip the
/// score/apply products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttentionMacs {
    #[default]
    ProjectionsAndScores,
    ProjectionsOnly,
}

/// Validated graph with repeat groups expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDescriptor {
    input: InputSpec,
    layers: Vec<LayerSpec>,
    shapes: Vec<Shape>,
}

fn expand(layers: Vec<LayerSpec>, out: &mut Vec<LayerSpec>) -> Result<(), BudgetError> {
    for layer in layers {
        match layer {
            LayerSpec::Repeat { count, layers } => {
                if count == 0 {
                    return Err(BudgetError::Parse("repeat count must be positive".into()));
                }
                let mut body = Vec::new();
                expand(layers, &mut body)?;
                for _ in 0..count {
                    out.extend(body.iter().cloned());
                }
            }
            other => out.push(other),
        }
    }
    Ok(())
}

impl GraphDescriptor {
    /// Expands repeats and propagates shapes from `input`.
    pub fn new(input: InputSpec, layers: Vec<LayerSpec>) -> Result<Self, BudgetError> {
        if input.height == 0 || input.width == 0 || input.views == 0 || input.channels == 0 {
            return Err(BudgetError::Parse("input dimensions must be positive".into()));
        }
        let mut flat = Vec::new();
        expand(layers, &mut flat)?;
        let shapes = propagate(&flat, input)?;
        Ok(Self {
            input,
            layers: flat,
            shapes,
        })
    }

    pub fn input(&self) -> InputSpec {
        self.input
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// Output shape of every layer, per view.
    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn output_shape(&self) -> Shape {
        self.shapes.last().copied().unwrap_or(Shape {
            height: self.input.height,
            width: self.input.width,
            channels: self.input.channels,
        })
    }
}

pub fn parse_graph(text: &str) -> Result<GraphDescriptor, BudgetError> {
    let raw: RawGraph = serde_json::from_str(text).map_err(|e| BudgetError::Parse(e.to_string()))?;
    GraphDescriptor::new(raw.input, raw.layers)
}

fn propagate(layers: &[LayerSpec], input: InputSpec) -> Result<Vec<Shape>, BudgetError> {
    let mut s = Shape {
        height: input.height,
        width: input.width,
        channels: input.channels,
    };
    let mut shapes = Vec::with_capacity(layers.len());
    for (index, layer) in layers.iter().enumerate() {
        let fail = |reason: String| BudgetError::Shape {
            index,
            op: layer.name(),
            reason,
        };
        let expect_channels = |c: usize, what: &str| {
            if c == 0 {
                Err(fail(format!("{what} must be positive")))
            } else if c != s.channels {
                Err(fail(format!("expects {c} input channels, got {}", s.channels)))
            } else {
                Ok(())
            }
        };
        s = match layer {
            LayerSpec::Conv2d(c) => {
                expect_channels(c.in_ch, "in_ch")?;
                let (kh, kw) = c.kernel();
                if c.out_ch == 0 || kh == 0 || kw == 0 || c.stride == 0 || c.groups == 0 {
                    return Err(fail("out_ch, kernel, stride and groups must be positive".into()));
                }
                if c.in_ch % c.groups != 0 || c.out_ch % c.groups != 0 {
                    return Err(fail(format!(
                        "groups {} must divide in_ch {} and out_ch {}",
                        c.groups, c.in_ch, c.out_ch
                    )));
                }
                let out = |n: usize, k: usize| {
                    let padded = n + 2 * c.padding.pixels(k);
                    (padded >= k).then(|| (padded - k) / c.stride + 1)
                };
                match (out(s.height, kh), out(s.width, kw)) {
                    (Some(height), Some(width)) => Shape {
                        height,
                        width,
                        channels: c.out_ch,
                    },
                    _ => return Err(fail(format!("{kh}x{kw} kernel exceeds {}x{} input", s.height, s.width))),
                }
            }
            LayerSpec::Linear {
                in_features,
                out_features,
                ..
            } => {
                expect_channels(*in_features, "in_features")?;
                if *out_features == 0 {
                    return Err(fail("out_features must be positive".into()));
                }
                Shape {
                    channels: *out_features,
                    ..s
                }
            }
            LayerSpec::PixelShuffle { r } => {
                let r2 = r * r;
                if *r == 0 || !s.channels.is_multiple_of(r2) {
                    return Err(fail(format!("{} channels not divisible by r^2 = {}", s.channels, r2)));
                }
                Shape {
                    height: s.height * r,
                    width: s.width * r,
                    channels: s.channels / r2,
                }
            }
            LayerSpec::RowAttention { channels, .. } => {
                expect_channels(*channels, "channels")?;
                if !input.views.is_multiple_of(2) {
                    return Err(fail(format!("needs left/right pairs, got {} views", input.views)));
                }
                s
            }
            LayerSpec::Norm { channels } => {
                expect_channels(*channels, "channels")?;
                s
            }
            LayerSpec::Elementwise { .. } => s,
            LayerSpec::Repeat { .. } => unreachable!("repeats are expanded before propagation"),
        };
        shapes.push(s);
    }
    Ok(shapes)
}

fn layer_params(layer: &LayerSpec) -> u64 {
    let n = |v: usize| v as u64;
    match layer {
        LayerSpec::Conv2d(c) => {
            let (kh, kw) = c.kernel();
            n(c.out_ch) * n(c.in_ch / c.groups) * n(kh) * n(kw) + if c.bias { n(c.out_ch) } else { 0 }
        }
        LayerSpec::Linear {
            in_features,
            out_features,
            bias,
        } => n(*in_features) * n(*out_features) + if *bias { n(*out_features) } else { 0 },
        LayerSpec::RowAttention { channels, bias } => {
            let c = n(*channels);
            4 * c * c + if *bias { 4 * c } else { 0 }
        }
        LayerSpec::Norm { channels } => 2 * n(*channels),
        LayerSpec::PixelShuffle { .. } | LayerSpec::Elementwise { .. } => 0,
        LayerSpec::Repeat { .. } => unreachable!(),
    }
}

fn layer_macs(layer: &LayerSpec, input: Shape, output: Shape, views: usize, attn: AttentionMacs) -> u64 {
    let n = |v: usize| v as u64;
    let views = n(views);
    match layer {
        LayerSpec::Conv2d(c) => {
            let (kh, kw) = c.kernel();
            views * n(output.height) * n(output.width) * n(c.out_ch) * n(c.in_ch / c.groups) * n(kh) * n(kw)
        }
        LayerSpec::Linear {
            in_features,
            out_features,
            ..
        } => views * n(input.height) * n(input.width) * n(*in_features) * n(*out_features),
        LayerSpec::RowAttention { channels, .. } => {
            let (h, w, c) = (n(input.height), n(input.width), n(*channels));
            let projections = views * 4 * h * w * c * c;
            match attn {
                AttentionMacs::ProjectionsAndScores => projections + (views / 2) * 2 * h * w * w * c,
                AttentionMacs::ProjectionsOnly => projections,
            }
        }
        LayerSpec::PixelShuffle { .. } | LayerSpec::Elementwise { .. } | LayerSpec::Norm { .. } => 0,
        LayerSpec::Repeat { .. } => unreachable!(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerCost {
    pub index: usize,
    pub layer: String,
    pub params: u64,
    pub macs: u64,
    pub output: Shape,
}

fn costs(g: &GraphDescriptor, input: InputSpec, attn: AttentionMacs) -> Result<Vec<LayerCost>, BudgetError> {
    let shapes = propagate(&g.layers, input)?;
    let mut prev = Shape {
        height: input.height,
        width: input.width,
        channels: input.channels,
    };
    let mut out = Vec::with_capacity(shapes.len());
    for (index, (layer, &shape)) in g.layers.iter().zip(&shapes).enumerate() {
        out.push(LayerCost {
            index,
            layer: layer.describe(),
            params: layer_params(layer),
            macs: layer_macs(layer, prev, shape, input.views, attn),
            output: shape,
        });
        prev = shape;
    }
    Ok(out)
}

/// Learnable parameters; independent of the input size.
pub fn count_params(g: &GraphDescriptor) -> u64 {
    g.layers.iter().map(layer_params).sum()
}

/// MACs of the graph evaluated at `input`, summed over all views. Fails only
/// if the graph's shapes do not fit `input`.
pub fn count_macs(g: &GraphDescriptor, input: InputSpec) -> Result<u64, BudgetError> {
    count_macs_with(g, input, AttentionMacs::default())
}

pub fn count_macs_with(g: &GraphDescriptor, input: InputSpec, attn: AttentionMacs) -> Result<u64, BudgetError> {
    Ok(costs(g, input, attn)?.iter().map(|c| c.macs).sum())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BudgetVerdict {
    pub total_params: u64,
    pub total_macs: u64,
    pub param_limit: u64,
    pub macs_limit: u64,
    pub pass_params: bool,
    pub pass_macs: bool,
    /// Heaviest layers first.
    pub layers: Vec<LayerCost>,
}

impl BudgetVerdict {
    pub fn passed(&self) -> bool {
        self.pass_params && self.pass_macs
    }
}

/// Verdict for totals reported elsewhere, without a layer breakdown.
pub fn check_totals(total_params: u64, total_macs: u64) -> BudgetVerdict {
    BudgetVerdict {
        total_params,
        total_macs,
        param_limit: PARAM_LIMIT,
        macs_limit: MACS_LIMIT,
        pass_params: total_params <= PARAM_LIMIT,
        pass_macs: total_macs <= MACS_LIMIT,
        layers: Vec::new(),
    }
}

/// Counts the graph at its own input spec and compares with the limits.
pub fn check_budget(g: &GraphDescriptor) -> BudgetVerdict {
    let mut layers = costs(g, g.input, AttentionMacs::default()).expect("shapes were validated at construction");
    let mut v = check_totals(
        layers.iter().map(|c| c.params).sum(),
        layers.iter().map(|c| c.macs).sum(),
    );
    layers.sort_by_key(|c| core::cmp::Reverse(c.macs));
    v.layers = layers;
    v
}

/// `0.918M`
pub fn human_params(n: u64) -> String {
    format!("{:.3}M", n as f64 / 1e6)
}

/// `235.280G`
pub fn human_macs(n: u64) -> String {
    format!("{:.3}G", n as f64 / 1e9)
}

fn verdict_word(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

impl fmt::Display for BudgetVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "params: {} {} ({} of {})",
            human_params(self.total_params),
            verdict_word(self.pass_params),
            self.total_params,
            self.param_limit
        )?;
        write!(
            f,
            "MACs: {} {} ({} of {})",
            human_macs(self.total_macs),
            verdict_word(self.pass_macs),
            self.total_macs,
            self.macs_limit
        )
    }
}
