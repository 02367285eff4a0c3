//! Fixed-architecture ReLU multilayer perceptron.
//!
//! A network with `L` hidden layers computes
//! `h(x) = clamp(A_{L+1} . relu . A_L . ... . relu . A_1 (x), -F, F)` where
//! `A_j(z) = W_j z + b_j`. All parameters live in one flat vector laid out layer by layer:
//! the weights of layer `j` (row-major, shape `out x in`) followed by its biases. That flat
//! vector is the parameter vector the penalty and the optimizer operate on.
//!
//! Two evaluation paths exist. [`Network::forward`] is a plain per-sample loop; the batched
//! path used by [`Network::loss_and_gradient`] runs the same computation through `dgemm`.
//! Tests check one against the other through finite differences.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::error::{Error, Result};

/// Training loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `(y - h(x))^2`
    Square,
    /// `max(1 - y h(x), 0)` with `y` in `{-1, +1}`
    Hinge,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Square => "square",
            LossKind::Hinge => "hinge",
        }
    }

    /// Loss value and its derivative with respect to the prediction `h`.
    #[inline]
    pub fn value_and_slope(self, y: f64, h: f64) -> (f64, f64) {
        match self {
            LossKind::Square => {
                let r = y - h;
                (r * r, -2.0 * r)
            }
            LossKind::Hinge => {
                let slack = 1.0 - y * h;
                if slack > 0.0 {
                    (slack, -y)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    #[inline]
    pub fn value(self, y: f64, h: f64) -> f64 {
        self.value_and_slope(y, h).0
    }

    pub(crate) fn check_targets(self, ys: &[f64]) -> Result<()> {
        if self == LossKind::Hinge {
            if let Some(&bad) = ys.iter().find(|&&y| y != 1.0 && y != -1.0) {
                return Err(Error::InvalidLabel(bad));
            }
        }
        Ok(())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "square" | "mse" => Ok(LossKind::Square),
            "hinge" => Ok(LossKind::Hinge),
            other => Err(Error::Parse(format!("unknown loss '{other}'"))),
        }
    }
}

/// Shape of a network: input dimension, hidden widths and the output clamp `F`.
///
/// The output dimension is always 1. Hidden layers use ReLU, the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    input_dim: usize,
    hidden_widths: Vec<usize>,
    output_clamp: f64,
}

impl Architecture {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArchitecture("input dimension must be >= 1".into()));
        }
        if hidden_widths.is_empty() {
            return Err(Error::InvalidArchitecture(
                "at least one hidden layer is required".into(),
            ));
        }
        if hidden_widths.contains(&0) {
            return Err(Error::InvalidArchitecture("hidden widths must be >= 1".into()));
        }
        Ok(Self {
            input_dim,
            hidden_widths,
            output_clamp: f64::INFINITY,
        })
    }

    /// Sets the output clamp `F` (positive, possibly infinite).
    pub fn with_output_clamp(mut self, clamp: f64) -> Result<Self> {
        if clamp.is_nan() || clamp <= 0.0 {
            return Err(Error::InvalidArchitecture(format!(
                "output clamp must be > 0, got {clamp}"
            )));
        }
        self.output_clamp = clamp;
        Ok(self)
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    #[inline]
    pub fn hidden_widths(&self) -> &[usize] {
        &self.hidden_widths
    }

    #[inline]
    pub fn output_clamp(&self) -> f64 {
        self.output_clamp
    }

    /// Number of hidden layers.
    #[inline]
    pub fn depth(&self) -> usize {
        self.hidden_widths.len()
    }

    /// Largest hidden width.
    pub fn width(&self) -> usize {
        self.hidden_widths.iter().copied().max().unwrap_or(0)
    }

    /// `(p_0, p_1, ..., p_L, 1)`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_widths.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_widths);
        dims.push(1);
        dims
    }

    /// `sum_j (p_{j-1} p_j + p_j)`.
    pub fn param_count(&self) -> usize {
        self.layer_dims()
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LayerSpan {
    in_dim: usize,
    out_dim: usize,
    weights: usize,
    biases: usize,
}

impl LayerSpan {
    #[inline]
    fn end(&self) -> usize {
        self.biases + self.out_dim
    }
}

fn layer_spans(arch: &Architecture) -> Vec<LayerSpan> {
    let mut offset = 0;
    arch.layer_dims()
        .windows(2)
        .map(|w| {
            let span = LayerSpan {
                in_dim: w[0],
                out_dim: w[1],
                weights: offset,
                biases: offset + w[0] * w[1],
            };
            offset = span.end();
            span
        })
        .collect()
}

/// Multilayer perceptron with its parameters stored as one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Architecture,
    spans: Vec<LayerSpan>,
    params: Vec<f64>,
}

/// Scratch buffers for the batched forward/backward pass.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Network {
    /// Network with every parameter equal to zero.
    pub fn zeros(arch: Architecture) -> Self {
        let spans = layer_spans(&arch);
        let params = vec![0.0; arch.param_count()];
        Self {
            arch,
            spans,
            params,
        }
    }

    /// Rebuilds a network from its flat parameter vector.
    pub fn from_flat(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        let expected = arch.param_count();
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                what: "network parameters",
                expected,
                got: params.len(),
            });
        }
        let spans = layer_spans(&arch);
        Ok(Self {
            arch,
            spans,
            params,
        })
    }

    /// He-uniform initialization: weights of a layer with fan-in `k` drawn from
    /// `U(-sqrt(6/k), sqrt(6/k))`, biases zero. Draw order is layer by layer, row-major.
    pub fn he_uniform<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let mut net = Self::zeros(arch);
        for span in &net.spans {
            let limit = (6.0 / span.in_dim as f64).sqrt();
            let dist = Uniform::new(-limit, limit);
            for w in &mut net.params[span.weights..span.biases] {
                *w = dist.sample(rng);
            }
        }
        net
    }

    #[inline]
    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    #[inline]
    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// The parameter vector `theta(h)`.
    #[inline]
    pub fn flatten(&self) -> &[f64] {
        &self.params
    }

    #[inline]
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.params
    }

    /// Number of affine layers (`L + 1`).
    pub fn num_layers(&self) -> usize {
        self.spans.len()
    }

    /// Weights of affine layer `j` (0-based), row-major `out x in`.
    pub fn layer_weights(&self, j: usize) -> &[f64] {
        let s = self.spans[j];
        &self.params[s.weights..s.biases]
    }

    pub fn layer_biases(&self, j: usize) -> &[f64] {
        let s = self.spans[j];
        &self.params[s.biases..s.end()]
    }

    /// Overwrites weights and biases of affine layer `j` (0-based).
    pub fn set_layer(&mut self, j: usize, weights: &[f64], biases: &[f64]) -> Result<()> {
        let s = *self.spans.get(j).ok_or_else(|| {
            Error::InvalidArchitecture(format!("layer index {j} out of range"))
        })?;
        if weights.len() != s.in_dim * s.out_dim {
            return Err(Error::DimensionMismatch {
                layer: format!("layer {} weights", j + 1),
                expected: s.in_dim * s.out_dim,
                got: weights.len(),
            });
        }
        if biases.len() != s.out_dim {
            return Err(Error::DimensionMismatch {
                layer: format!("layer {} biases", j + 1),
                expected: s.out_dim,
                got: biases.len(),
            });
        }
        self.params[s.weights..s.biases].copy_from_slice(weights);
        self.params[s.biases..s.end()].copy_from_slice(biases);
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                layer: "layer 1 input".into(),
                expected: self.arch.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Output of the affine/ReLU composition before clamping.
    pub fn raw_output(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let last = self.spans.len() - 1;
        let mut cur = x.to_vec();
        for (k, s) in self.spans.iter().enumerate() {
            let w = &self.params[s.weights..s.biases];
            let b = &self.params[s.biases..s.end()];
            let next: Vec<f64> = (0..s.out_dim)
                .map(|o| {
                    let row = &w[o * s.in_dim..(o + 1) * s.in_dim];
                    let z = b[o] + row.iter().zip(&cur).map(|(a, c)| a * c).sum::<f64>();
                    if k < last {
                        z.max(0.0)
                    } else {
                        z
                    }
                })
                .collect();
            cur = next;
        }
        Ok(cur[0])
    }

    /// `clamp(raw(x), -F, F)`.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let raw = self.raw_output(x)?;
        Ok(clamp_output(raw, self.arch.output_clamp))
    }

    fn check_batch(&self, xs: &[f64], ys: &[f64], loss: LossKind) -> Result<()> {
        if ys.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let d = self.arch.input_dim;
        if xs.len() != ys.len() * d {
            return Err(Error::DimensionMismatch {
                layer: "layer 1 input".into(),
                expected: ys.len() * d,
                got: xs.len(),
            });
        }
        loss.check_targets(ys)
    }

    /// Batched forward pass; returns the raw (unclamped) outputs, one per row.
    fn forward_batch<'w>(&self, xs: &[f64], rows: usize, ws: &'w mut Workspace) -> &'w [f64] {
        let n_layers = self.spans.len();
        ws.acts.resize_with(n_layers, Vec::new);
        for (k, s) in self.spans.iter().enumerate() {
            let (done, rest) = ws.acts.split_at_mut(k);
            let input: &[f64] = if k == 0 { xs } else { &done[k - 1] };
            let out = &mut rest[0];
            out.clear();
            let bias = &self.params[s.biases..s.end()];
            for _ in 0..rows {
                out.extend_from_slice(bias);
            }
            // Z = A W^T + 1 b^T
            gemm(
                rows,
                s.in_dim,
                s.out_dim,
                input,
                (s.in_dim, 1),
                &self.params[s.weights..s.biases],
                (1, s.in_dim),
                1.0,
                out,
                (s.out_dim, 1),
            );
            if k + 1 < n_layers {
                for z in out.iter_mut() {
                    *z = z.max(0.0);
                }
            }
        }
        &ws.acts[n_layers - 1]
    }

    /// Raw outputs for a row-major block of inputs.
    pub fn predict_rows(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let d = self.arch.input_dim;
        if xs.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                layer: "layer 1 input".into(),
                expected: d,
                got: xs.len() % d,
            });
        }
        let mut ws = Workspace::default();
        let mut out = Vec::with_capacity(xs.len() / d);
        for chunk in xs.chunks(CHUNK_ROWS * d) {
            let raw = self.forward_batch(chunk, chunk.len() / d, &mut ws);
            out.extend(raw.iter().map(|&r| clamp_output(r, self.arch.output_clamp)));
        }
        Ok(out)
    }

    /// Mean loss over a batch (no gradient).
    pub fn mean_loss(&self, xs: &[f64], ys: &[f64], loss: LossKind) -> Result<f64> {
        self.check_batch(xs, ys, loss)?;
        let preds = self.predict_rows(xs)?;
        let total: f64 = preds
            .iter()
            .zip(ys)
            .map(|(&h, &y)| loss.value(y, h))
            .sum();
        Ok(total / ys.len() as f64)
    }

    /// Mean loss over the batch and its exact gradient with respect to [`Network::flatten`].
    ///
    /// `xs` is row-major with one input per row and `ys` holds the matching targets.
    pub fn loss_and_gradient(
        &self,
        xs: &[f64],
        ys: &[f64],
        loss: LossKind,
    ) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let mut ws = Workspace::default();
        let value = self.loss_and_gradient_into(xs, ys, loss, &mut ws, &mut grad)?;
        Ok((value, grad))
    }

    /// Allocation-reusing form of [`Network::loss_and_gradient`]; `grad` is overwritten.
    pub fn loss_and_gradient_into(
        &self,
        xs: &[f64],
        ys: &[f64],
        loss: LossKind,
        ws: &mut Workspace,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_batch(xs, ys, loss)?;
        if grad.len() != self.params.len() {
            return Err(Error::LengthMismatch {
                what: "gradient buffer",
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let rows = ys.len();
        let inv_rows = 1.0 / rows as f64;
        let clamp = self.arch.output_clamp;

        self.forward_batch(xs, rows, ws);
        let n_layers = self.spans.len();

        let mut total = 0.0;
        let mut delta = std::mem::take(&mut ws.delta);
        let mut delta_prev = std::mem::take(&mut ws.delta_prev);
        delta.clear();
        for (&raw, &y) in ws.acts[n_layers - 1].iter().zip(ys) {
            let h = clamp_output(raw, clamp);
            let (value, slope) = loss.value_and_slope(y, h);
            total += value;
            let pass = if raw > clamp || raw < -clamp { 0.0 } else { 1.0 };
            delta.push(slope * pass * inv_rows);
        }

        for k in (0..n_layers).rev() {
            let s = self.spans[k];
            let input: &[f64] = if k == 0 { xs } else { &ws.acts[k - 1] };

            // dW = delta^T A
            gemm(
                s.out_dim,
                rows,
                s.in_dim,
                &delta,
                (1, s.out_dim),
                input,
                (s.in_dim, 1),
                0.0,
                &mut grad[s.weights..s.biases],
                (s.in_dim, 1),
            );
            let gb = &mut grad[s.biases..s.end()];
            gb.fill(0.0);
            for row in delta.chunks_exact(s.out_dim) {
                for (g, d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }

            if k > 0 {
                // delta_prev = delta W, masked by the ReLU derivative (0 at the kink).
                delta_prev.clear();
                delta_prev.resize(rows * s.in_dim, 0.0);
                gemm(
                    rows,
                    s.out_dim,
                    s.in_dim,
                    &delta,
                    (s.out_dim, 1),
                    &self.params[s.weights..s.biases],
                    (s.in_dim, 1),
                    0.0,
                    &mut delta_prev,
                    (s.in_dim, 1),
                );
                for (dp, &a) in delta_prev.iter_mut().zip(&ws.acts[k - 1]) {
                    if a <= 0.0 {
                        *dp = 0.0;
                    }
                }
                std::mem::swap(&mut delta, &mut delta_prev);
            }
        }
        ws.delta = delta;
        ws.delta_prev = delta_prev;
        Ok(total * inv_rows)
    }

    /// Plain-text checkpoint; see [`Network::from_text`] for the format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let widths: Vec<String> = self
            .arch
            .hidden_widths
            .iter()
            .map(ToString::to_string)
            .collect();
        let _ = writeln!(out, "{TEXT_MAGIC}");
        let _ = writeln!(out, "input_dim {}", self.arch.input_dim);
        let _ = writeln!(out, "hidden_widths {}", widths.join(" "));
        let _ = writeln!(out, "output_clamp {}", fmt_f64(self.arch.output_clamp));
        for (k, s) in self.spans.iter().enumerate() {
            let _ = writeln!(out, "layer {} {} {}", k + 1, s.in_dim, s.out_dim);
            let w = &self.params[s.weights..s.biases];
            for row in w.chunks_exact(s.in_dim) {
                let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
            let b: Vec<String> = self.params[s.biases..s.end()]
                .iter()
                .map(|&v| fmt_f64(v))
                .collect();
            let _ = writeln!(out, "{}", b.join(" "));
        }
        out
    }

    /// Parses the checkpoint format written by [`Network::to_text`]:
    ///
    /// ```text
    /// spdnn-network 1
    /// input_dim <d>
    /// hidden_widths <p_1> ... <p_L>
    /// output_clamp <F or inf>
    /// layer <j> <in> <out>      (for j = 1..L+1)
    /// <out lines of in weights>  (row-major)
    /// <one line of out biases>
    /// ```
    ///
    /// Numbers are written with 17 significant digits, so the round trip is exact.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("network text truncated before {what}")))
        };

        if next("header")? != TEXT_MAGIC {
            return Err(Error::Parse("missing 'spdnn-network 1' header".into()));
        }
        let input_dim = keyed(next("input_dim")?, "input_dim")?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("input_dim: {e}")))?;
        let widths = keyed(next("hidden_widths")?, "hidden_widths")?
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("hidden_widths: {e}")))?;
        let clamp = parse_f64(keyed(next("output_clamp")?, "output_clamp")?)?;
        let arch = Architecture::new(input_dim, widths)?.with_output_clamp(clamp)?;

        let mut net = Network::zeros(arch);
        for k in 0..net.spans.len() {
            let s = net.spans[k];
            let header = next("layer header")?;
            let expected = format!("layer {} {} {}", k + 1, s.in_dim, s.out_dim);
            if header.split_whitespace().collect::<Vec<_>>()
                != expected.split_whitespace().collect::<Vec<_>>()
            {
                return Err(Error::Parse(format!(
                    "expected '{expected}', found '{header}'"
                )));
            }
            for o in 0..s.out_dim {
                let row = parse_row(next("weight row")?, s.in_dim)?;
                let start = s.weights + o * s.in_dim;
                net.params[start..start + s.in_dim].copy_from_slice(&row);
            }
            let b = parse_row(next("bias row")?, s.out_dim)?;
            net.params[s.biases..s.end()].copy_from_slice(&b);
        }
        if let Some(extra) = lines.next() {
            return Err(Error::Parse(format!("trailing content '{extra}'")));
        }
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

const TEXT_MAGIC: &str = "spdnn-network 1";
const CHUNK_ROWS: usize = 256;

#[inline]
fn clamp_output(raw: f64, clamp: f64) -> f64 {
    raw.clamp(-clamp, clamp)
}

/// 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|e| Error::Parse(format!("'{tok}': {e}")))
}

fn keyed<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| Error::Parse(format!("expected '{key}', found '{line}'")))
}

fn parse_row(line: &str, len: usize) -> Result<Vec<f64>> {
    let row = line
        .split_whitespace()
        .map(parse_f64)
        .collect::<Result<Vec<_>>>()?;
    if row.len() != len {
        return Err(Error::Parse(format!(
            "expected {len} values, found {}",
            row.len()
        )));
    }
    Ok(row)
}

/// `c = a . b + beta c` for row-major-addressable operands given as (row, col) strides.
#[allow(clippy::too_many_arguments)]
#[inline]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    let last = |r: usize, c: usize, rs: usize, cs: usize| (r - 1) * rs + (c - 1) * cs;
    assert!(m > 0 && k > 0 && n > 0);
    assert!(a.len() > last(m, k, rsa, csa));
    assert!(b.len() > last(k, n, rsb, csb));
    assert!(c.len() > last(m, n, rsc, csc));
    // SAFETY: the asserts above bound every index dgemm touches within the slices.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}
