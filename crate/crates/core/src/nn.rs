//! Small dense/residual network with hand-written reverse-mode gradients.
//!
//! Parameters live in one flat vector so optimizer steps, target blending
//! and finite differencing are plain element-wise loops. Activations are
//! row-major `batch x width` matrices.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Linear => z,
        }
    }

    #[inline]
    fn slope<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu if z <= T::zero() => T::zero(),
            _ => T::one(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    /// `act(W x + b)`
    Dense,
    /// `act(W2 act(W1 x + b1) + b2 + x)`
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn dense(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            kind: LayerKind::Dense,
            input,
            output,
            activation,
        }
    }

    pub fn residual(width: usize, activation: Activation) -> Self {
        Self {
            kind: LayerKind::Residual,
            input: width,
            output: width,
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            LayerKind::Dense => self.output * self.input + self.output,
            LayerKind::Residual => 2 * (self.output * self.input + self.output),
        }
    }
}

/// Dense stem, `blocks` residual blocks of `width`, linear head with
/// `outputs` units.
pub fn resdnn(input: usize, width: usize, blocks: usize, outputs: usize) -> Vec<LayerSpec> {
    let mut layers = vec![LayerSpec::dense(input, width, Activation::Relu)];
    layers.extend((0..blocks).map(|_| LayerSpec::residual(width, Activation::Relu)));
    layers.push(LayerSpec::dense(width, outputs, Activation::Linear));
    layers
}

/// [`resdnn`] with every skip connection removed: each block becomes two
/// plain ReLU layers.
pub fn fcdnn(input: usize, width: usize, blocks: usize, outputs: usize) -> Vec<LayerSpec> {
    let mut layers = vec![LayerSpec::dense(input, width, Activation::Relu)];
    layers.extend((0..2 * blocks).map(|_| LayerSpec::dense(width, width, Activation::Relu)));
    layers.push(LayerSpec::dense(width, outputs, Activation::Linear));
    layers
}

fn check_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Argument("network needs at least one layer".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.input == 0 || s.output == 0 {
            return Err(Error::Argument(format!("layer {i} has a zero width")));
        }
        if s.kind == LayerKind::Residual && s.input != s.output {
            return Err(Error::Argument(format!(
                "residual layer {i} maps {} -> {}; the skip needs equal widths",
                s.input, s.output
            )));
        }
        if i > 0 && specs[i - 1].output != s.input {
            return Err(Error::Shape {
                expected: specs[i - 1].output,
                got: s.input,
            });
        }
    }
    Ok(())
}

/// Network parameters: the layer list plus every weight and bias, layer by
/// layer, weights row-major (`output x input`) followed by biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    specs: Vec<LayerSpec>,
    values: Vec<T>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn zeros(specs: Vec<LayerSpec>) -> Result<Self> {
        check_specs(&specs)?;
        let n = specs.iter().map(LayerSpec::param_count).sum();
        Ok(Self {
            specs,
            values: vec![T::zero(); n],
        })
    }

    /// He initialization: weights `N(0, 2 / fan_in)`, biases zero.
    pub fn init<R: Rng + ?Sized>(specs: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(specs)?;
        let mut off = 0;
        for spec in p.specs.clone() {
            let std = (2.0 / spec.input as f64).sqrt();
            let blocks = if spec.kind == LayerKind::Residual { 2 } else { 1 };
            for _ in 0..blocks {
                let nw = spec.output * spec.input;
                for w in &mut p.values[off..off + nw] {
                    let z: f64 = StandardNormal.sample(rng);
                    *w = T::of(z * std);
                }
                off += nw + spec.output;
            }
        }
        Ok(p)
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn input_width(&self) -> usize {
        self.specs[0].input
    }

    pub fn output_width(&self) -> usize {
        self.specs[self.specs.len() - 1].output
    }

    /// Weight and bias slices in storage order.
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        let mut rest = &self.values[..];
        for spec in &self.specs {
            let blocks = if spec.kind == LayerKind::Residual { 2 } else { 1 };
            for _ in 0..blocks {
                let (w, r) = rest.split_at(spec.output * spec.input);
                let (b, r) = r.split_at(spec.output);
                out.push(w);
                out.push(b);
                rest = r;
            }
        }
        out
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.specs != other.specs {
            return Err(Error::Argument("parameter sets have different layer lists".into()));
        }
        Ok(())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::Training(format!(
                "parameter {i} became {}",
                self.values[i]
            ))),
        }
    }

    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        self.same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt())
    }

    /// Output for a single input vector.
    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        self.forward_batch(input, 1)
    }

    /// Outputs for `batch` inputs stored row by row.
    pub fn forward_batch(&self, inputs: &[T], batch: usize) -> Result<Vec<T>> {
        Ok(self.forward_trace(inputs, batch)?.output)
    }

    /// Forward pass that keeps what [`ParamSet::backward`] needs.
    pub fn forward_trace(&self, inputs: &[T], batch: usize) -> Result<Trace<T>> {
        let want = batch * self.input_width();
        if batch == 0 || inputs.len() != want {
            return Err(Error::Shape {
                expected: want,
                got: inputs.len(),
            });
        }
        let mut layers = Vec::with_capacity(self.specs.len());
        let mut x = inputs.to_vec();
        let mut off = 0;
        for spec in &self.specs {
            let (i, o) = (spec.input, spec.output);
            let w1 = &self.values[off..off + o * i];
            let b1 = &self.values[off + o * i..off + o * i + o];
            off += o * i + o;
            let z1 = affine(&x, w1, b1, batch, i, o);
            let lt = match spec.kind {
                LayerKind::Dense => {
                    let y = z1.iter().map(|&z| spec.activation.apply(z)).collect();
                    LayerTrace {
                        input: std::mem::replace(&mut x, y),
                        z1,
                        hidden: Vec::new(),
                        z2: Vec::new(),
                    }
                }
                LayerKind::Residual => {
                    let w2 = &self.values[off..off + o * i];
                    let b2 = &self.values[off + o * i..off + o * i + o];
                    off += o * i + o;
                    let hidden: Vec<T> = z1.iter().map(|&z| spec.activation.apply(z)).collect();
                    let mut z2 = affine(&hidden, w2, b2, batch, o, o);
                    for (z, &skip) in z2.iter_mut().zip(&x) {
                        *z += skip;
                    }
                    let y = z2.iter().map(|&z| spec.activation.apply(z)).collect();
                    LayerTrace {
                        input: std::mem::replace(&mut x, y),
                        z1,
                        hidden,
                        z2,
                    }
                }
            };
            layers.push(lt);
        }
        Ok(Trace {
            batch,
            layers,
            output: x,
        })
    }

    /// Reverse-mode gradient of a scalar loss with respect to every
    /// parameter, given the loss gradient at the outputs of `trace`.
    pub fn backward(&self, trace: &Trace<T>, grad_out: &[T]) -> Result<ParamSet<T>> {
        let batch = trace.batch;
        if trace.layers.len() != self.specs.len()
            || trace.layers[0].input.len() != batch * self.input_width()
        {
            return Err(Error::State(
                "trace was not produced by a forward pass of this network".into(),
            ));
        }
        if grad_out.len() != trace.output.len() {
            return Err(Error::Shape {
                expected: trace.output.len(),
                got: grad_out.len(),
            });
        }
        let mut grads = ParamSet {
            specs: self.specs.clone(),
            values: vec![T::zero(); self.values.len()],
        };
        let mut off = self.values.len();
        let mut dy = grad_out.to_vec();
        for (spec, lt) in self.specs.iter().zip(&trace.layers).rev() {
            let (i, o) = (spec.input, spec.output);
            let act = spec.activation;
            match spec.kind {
                LayerKind::Dense => {
                    off -= o * i + o;
                    let dz: Vec<T> = dy
                        .iter()
                        .zip(&lt.z1)
                        .map(|(&g, &z)| g * act.slope(z))
                        .collect();
                    let (gw, gb) = grads.values[off..off + o * i + o].split_at_mut(o * i);
                    accumulate(&dz, &lt.input, gw, gb, batch, i, o);
                    dy = back_input(&dz, &self.values[off..off + o * i], batch, i, o);
                }
                LayerKind::Residual => {
                    off -= 2 * (o * i + o);
                    let second = off + o * i + o;
                    let dz2: Vec<T> = dy
                        .iter()
                        .zip(&lt.z2)
                        .map(|(&g, &z)| g * act.slope(z))
                        .collect();
                    {
                        let (gw, gb) =
                            grads.values[second..second + o * o + o].split_at_mut(o * o);
                        accumulate(&dz2, &lt.hidden, gw, gb, batch, o, o);
                    }
                    let dh = back_input(&dz2, &self.values[second..second + o * o], batch, o, o);
                    let dz1: Vec<T> = dh
                        .iter()
                        .zip(&lt.z1)
                        .map(|(&g, &z)| g * act.slope(z))
                        .collect();
                    let (gw, gb) = grads.values[off..off + o * i + o].split_at_mut(o * i);
                    accumulate(&dz1, &lt.input, gw, gb, batch, i, o);
                    let mut dx = back_input(&dz1, &self.values[off..off + o * i], batch, i, o);
                    for (d, &s) in dx.iter_mut().zip(&dz2) {
                        *d += s;
                    }
                    dy = dx;
                }
            }
        }
        Ok(grads)
    }

    /// `theta <- theta - alpha * grads`
    pub fn sgd_step(&mut self, grads: &ParamSet<T>, alpha: T) -> Result<()> {
        self.same_shape(grads)?;
        if !(alpha > T::zero()) {
            return Err(Error::Argument(format!("step size must be positive, got {alpha}")));
        }
        for (p, &g) in self.values.iter_mut().zip(&grads.values) {
            *p -= alpha * g;
        }
        self.ensure_finite()
    }

    /// `self <- (1 - tau) * self + tau * pred`, applied to a target copy.
    pub fn soft_update(&mut self, pred: &ParamSet<T>, tau: T) -> Result<()> {
        self.same_shape(pred)?;
        if !(tau >= T::zero() && tau <= T::one()) {
            return Err(Error::Argument(format!("tau must lie in [0, 1], got {tau}")));
        }
        let keep = T::one() - tau;
        for (t, &p) in self.values.iter_mut().zip(&pred.values) {
            *t = keep * *t + tau * p;
        }
        Ok(())
    }

    /// Writes the text parameter record to `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.parse()
    }
}

const RECORD_MAGIC: &str = "sclar-params v1";

impl<T: Scalar> fmt::Display for ParamSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{RECORD_MAGIC}")?;
        writeln!(f, "layers {}", self.specs.len())?;
        for s in &self.specs {
            let kind = match s.kind {
                LayerKind::Dense => "dense",
                LayerKind::Residual => "residual",
            };
            writeln!(f, "{kind} {} {} {}", s.input, s.output, s.activation.name())?;
        }
        writeln!(f, "values {}", self.values.len())?;
        for v in &self.values {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl<T: Scalar> std::str::FromStr for ParamSet<T> {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Format(m);
        let mut lines = text.lines();
        if lines.next() != Some(RECORD_MAGIC) {
            return Err(bad(format!("missing `{RECORD_MAGIC}` header")));
        }
        let count = |line: Option<&str>, key: &str| -> Result<usize> {
            line.and_then(|l| l.strip_prefix(key))
                .and_then(|n| n.trim().parse().ok())
                .ok_or_else(|| bad(format!("expected `{key} <count>`")))
        };
        let n_layers = count(lines.next(), "layers ")?;
        let mut specs = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let line = lines.next().ok_or_else(|| bad("truncated layer list".into()))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let [kind, input, output, act] = f[..] else {
                return Err(bad(format!("bad layer line `{line}`")));
            };
            let kind = match kind {
                "dense" => LayerKind::Dense,
                "residual" => LayerKind::Residual,
                _ => return Err(bad(format!("unknown layer kind `{kind}`"))),
            };
            let activation = match act {
                "relu" => Activation::Relu,
                "linear" => Activation::Linear,
                _ => return Err(bad(format!("unknown activation `{act}`"))),
            };
            let width = |s: &str| s.parse().map_err(|_| bad(format!("bad width `{s}`")));
            specs.push(LayerSpec {
                kind,
                input: width(input)?,
                output: width(output)?,
                activation,
            });
        }
        let mut p = ParamSet::zeros(specs)?;
        let n_values = count(lines.next(), "values ")?;
        if n_values != p.values.len() {
            return Err(bad(format!(
                "{n_values} values for a network with {} parameters",
                p.values.len()
            )));
        }
        for v in &mut p.values {
            let line = lines.next().ok_or_else(|| bad("truncated value list".into()))?;
            *v = line
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad value `{line}`")))?;
        }
        Ok(p)
    }
}

struct LayerTrace<T> {
    input: Vec<T>,
    z1: Vec<T>,
    hidden: Vec<T>,
    z2: Vec<T>,
}

/// Activations cached by [`ParamSet::forward_trace`].
pub struct Trace<T> {
    batch: usize,
    layers: Vec<LayerTrace<T>>,
    output: Vec<T>,
}

impl<T> Trace<T> {
    /// `batch x outputs`, row-major.
    pub fn output(&self) -> &[T] {
        &self.output
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// `x W^T + b` for `x: batch x i`, `W: o x i`.
fn affine<T: Scalar>(x: &[T], w: &[T], b: &[T], batch: usize, i: usize, o: usize) -> Vec<T> {
    let mut z = Vec::with_capacity(batch * o);
    for row in x.chunks_exact(i).take(batch) {
        for (wr, &bo) in w.chunks_exact(i).zip(b) {
            z.push(dot(row, wr) + bo);
        }
    }
    z
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    // Four accumulators let the compiler vectorize without reassociating.
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (&x, &y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `gW += dz^T x`, `gb += sum_rows dz`.
fn accumulate<T: Scalar>(dz: &[T], x: &[T], gw: &mut [T], gb: &mut [T], batch: usize, i: usize, o: usize) {
    for b in 0..batch {
        let xr = &x[b * i..(b + 1) * i];
        for (r, &d) in dz[b * o..(b + 1) * o].iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            gb[r] += d;
            for (g, &xv) in gw[r * i..(r + 1) * i].iter_mut().zip(xr) {
                *g += d * xv;
            }
        }
    }
}

/// `dz W` for the gradient at the layer input.
fn back_input<T: Scalar>(dz: &[T], w: &[T], batch: usize, i: usize, o: usize) -> Vec<T> {
    let mut dx = vec![T::zero(); batch * i];
    for b in 0..batch {
        let out = &mut dx[b * i..(b + 1) * i];
        for (r, &d) in dz[b * o..(b + 1) * o].iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            for (x, &wv) in out.iter_mut().zip(&w[r * i..(r + 1) * i]) {
                *x += d * wv;
            }
        }
    }
    dx
}

/// Mean of squared differences.
pub fn mse_loss<T: Scalar>(pred: &[T], target: &[T]) -> Result<T> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Shape {
            expected: pred.len(),
            got: target.len(),
        });
    }
    let n = T::of(pred.len() as f64);
    Ok(pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<T>()
        / n)
}

/// Gradient of [`mse_loss`] with respect to `pred`.
pub fn mse_grad<T: Scalar>(pred: &[T], target: &[T]) -> Vec<T> {
    let scale = T::of(2.0 / pred.len() as f64);
    pred.iter().zip(target).map(|(&p, &t)| scale * (p - t)).collect()
}

/// Adaptive-moment optimizer state for one parameter set.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    steps: i32,
    beta1: T,
    beta2: T,
    eps: T,
}

impl<T: Scalar> Adam<T> {
    pub fn new(params: &ParamSet<T>) -> Self {
        Self {
            m: vec![T::zero(); params.len()],
            v: vec![T::zero(); params.len()],
            steps: 0,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
        }
    }

    pub fn step(&mut self, params: &mut ParamSet<T>, grads: &ParamSet<T>, alpha: T) -> Result<()> {
        params.same_shape(grads)?;
        if self.m.len() != params.len() {
            return Err(Error::Shape {
                expected: self.m.len(),
                got: params.len(),
            });
        }
        self.steps += 1;
        let c1 = T::one() - self.beta1.powi(self.steps);
        let c2 = T::one() - self.beta2.powi(self.steps);
        let one = T::one();
        for (((p, &g), m), v) in params
            .values
            .iter_mut()
            .zip(&grads.values)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            *p -= alpha * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
        params.ensure_finite()
    }
}

/// Outcome of comparing analytic and central-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub params: usize,
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor / tolerance)`.
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub tolerance: f64,
    pub passed: bool,
}

/// Absolute error below which an entry passes regardless of its scale.
pub const GRAD_ABS_FLOOR: f64 = 1e-6;

/// Step of the central differences.
pub const GRAD_STEP: f64 = 1e-5;

/// Checks `analytic` against central differences of the MSE between the
/// network outputs on `inputs` and `targets`.
pub fn compare_gradients(
    params: &ParamSet<f64>,
    inputs: &[f64],
    targets: &[f64],
    batch: usize,
    analytic: &ParamSet<f64>,
    tolerance: f64,
) -> Result<GradCheckReport> {
    params.same_shape(analytic)?;
    let loss = |p: &ParamSet<f64>| -> Result<f64> { mse_loss(&p.forward_batch(inputs, batch)?, targets) };
    let mut probe = params.clone();
    let mut worst = (0.0f64, 0usize);
    let denom_floor = GRAD_ABS_FLOOR / tolerance;
    for k in 0..params.len() {
        let orig = probe.values[k];
        probe.values[k] = orig + GRAD_STEP;
        let up = loss(&probe)?;
        probe.values[k] = orig - GRAD_STEP;
        let down = loss(&probe)?;
        probe.values[k] = orig;
        let numeric = (up - down) / (2.0 * GRAD_STEP);
        let a = analytic.values[k];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(denom_floor);
        if err > worst.0 || err.is_nan() {
            worst = (err, k);
        }
    }
    Ok(GradCheckReport {
        params: params.len(),
        max_rel_error: worst.0,
        worst_index: worst.1,
        tolerance,
        passed: worst.0 <= tolerance,
    })
}

/// Analytic gradient of the MSE on one random batch.
pub fn mse_gradient(
    params: &ParamSet<f64>,
    inputs: &[f64],
    targets: &[f64],
    batch: usize,
) -> Result<ParamSet<f64>> {
    let trace = params.forward_trace(inputs, batch)?;
    let g = mse_grad(trace.output(), targets);
    params.backward(&trace, &g)
}

/// Random network from `specs`, random inputs and targets, full gradient
/// comparison.
pub fn grad_check<R: Rng + ?Sized>(
    specs: Vec<LayerSpec>,
    rng: &mut R,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let mut params = ParamSet::<f64>::init(specs, rng)?;
    // Non-zero biases so every code path carries signal.
    for v in params.values.iter_mut().filter(|v| **v == 0.0) {
        *v = rng.random_range(-0.1..0.1);
    }
    let batch = 3;
    let inputs: Vec<f64> = (0..batch * params.input_width())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let targets: Vec<f64> = (0..batch * params.output_width())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let analytic = mse_gradient(&params, &inputs, &targets, batch)?;
    compare_gradients(&params, &inputs, &targets, batch, &analytic, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn architecture_shapes() {
        let r = resdnn(120, 64, 2, 2);
        assert_eq!(r.len(), 4);
        let f = fcdnn(120, 64, 2, 2);
        assert_eq!(f.len(), 6);
        let p = ParamSet::<f64>::zeros(r).unwrap();
        assert_eq!(p.len(), 120 * 64 + 64 + 2 * 2 * (64 * 64 + 64) + 64 * 2 + 2);
        assert_eq!(p.len(), ParamSet::<f64>::zeros(f).unwrap().len());
        assert_eq!(p.tensors().len(), 2 + 8 + 2);
    }

    #[test]
    fn spec_errors() {
        assert!(ParamSet::<f64>::zeros(vec![]).is_err());
        let bad_res = LayerSpec {
            kind: LayerKind::Residual,
            input: 3,
            output: 4,
            activation: Activation::Relu,
        };
        assert!(ParamSet::<f64>::zeros(vec![bad_res]).is_err());
        let chain = vec![
            LayerSpec::dense(3, 4, Activation::Relu),
            LayerSpec::dense(5, 2, Activation::Linear),
        ];
        assert!(matches!(ParamSet::<f64>::zeros(chain), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = ParamSet::<f64>::zeros(resdnn(5, 8, 2, 2)).unwrap();
        assert_eq!(p.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), [0.0, 0.0]);
        assert!(matches!(p.forward(&[1.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn zero_residual_is_identity_then_activation() {
        let p = ParamSet::<f64>::zeros(vec![LayerSpec::residual(3, Activation::Relu)]).unwrap();
        assert_eq!(p.forward(&[1.5, -2.0, 0.25]).unwrap(), [1.5, 0.0, 0.25]);
        let lin = ParamSet::<f64>::zeros(vec![LayerSpec::residual(2, Activation::Linear)]).unwrap();
        assert_eq!(lin.forward(&[-4.0, 7.0]).unwrap(), [-4.0, 7.0]);
    }

    #[test]
    fn linear_layer_gradient_is_closed_form() {
        let mut p = ParamSet::<f64>::zeros(vec![LayerSpec::dense(2, 1, Activation::Linear)]).unwrap();
        p.values_mut().copy_from_slice(&[0.5, -1.0, 0.25]);
        let x = [2.0, 3.0];
        let y = 1.0;
        let trace = p.forward_trace(&x, 1).unwrap();
        let out = trace.output()[0];
        assert_eq!(out, 0.5 * 2.0 - 3.0 + 0.25);
        let g = p.backward(&trace, &mse_grad(&[out], &[y])).unwrap();
        let e = 2.0 * (out - y);
        assert_eq!(g.values(), [e * 2.0, e * 3.0, e]);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradient() {
        let p = ParamSet::<f64>::init(resdnn(4, 6, 1, 2), &mut rng(1)).unwrap();
        let trace = p.forward_trace(&[0.1, 0.2, 0.3, 0.4], 1).unwrap();
        let g = p.backward(&trace, &[0.0, 0.0]).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_rejects_foreign_trace() {
        let a = ParamSet::<f64>::init(resdnn(4, 6, 1, 2), &mut rng(1)).unwrap();
        let b = ParamSet::<f64>::init(resdnn(3, 6, 1, 2), &mut rng(1)).unwrap();
        let trace = b.forward_trace(&[0.1, 0.2, 0.3], 1).unwrap();
        assert!(matches!(a.backward(&trace, &[0.0, 0.0]), Err(Error::State(_))));
        let own = a.forward_trace(&[0.1, 0.2, 0.3, 0.4], 1).unwrap();
        assert!(matches!(a.backward(&own, &[0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn mse_values() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0], &[2.0]).unwrap(), 4.0);
        assert!(mse_loss(&[0.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn sgd_values() {
        let specs = vec![LayerSpec::dense(1, 1, Activation::Linear)];
        let mut p = ParamSet::<f64>::zeros(specs.clone()).unwrap();
        p.values_mut().fill(1.0);
        let mut g = ParamSet::zeros(specs.clone()).unwrap();
        p.sgd_step(&g, 0.1).unwrap();
        assert_eq!(p.values(), [1.0, 1.0]);
        g.values_mut().fill(2.0);
        p.sgd_step(&g, 0.1).unwrap();
        assert!(p.values().iter().all(|&v| (v - 0.8).abs() < 1e-15));
        assert!(p.sgd_step(&g, 0.0).is_err());
        g.values_mut().fill(f64::INFINITY);
        assert!(matches!(p.sgd_step(&g, 0.1), Err(Error::Training(_))));
    }

    #[test]
    fn soft_update_endpoints() {
        let specs = vec![LayerSpec::dense(2, 1, Activation::Linear)];
        let mut target = ParamSet::<f64>::zeros(specs.clone()).unwrap();
        let mut pred = ParamSet::zeros(specs).unwrap();
        pred.values_mut().copy_from_slice(&[1.0, 2.0, 3.0]);
        let mut t0 = target.clone();
        t0.soft_update(&pred, 0.0).unwrap();
        assert_eq!(t0, target);
        let mut t1 = target.clone();
        t1.soft_update(&pred, 1.0).unwrap();
        assert_eq!(t1, pred);
        pred.values_mut().fill(1.0);
        for k in 1..=20 {
            target.soft_update(&pred, 0.1).unwrap();
            let want = 1.0 - 0.9f64.powi(k);
            assert!(target.values().iter().all(|&v| (v - want).abs() < 1e-14));
        }
        assert!(target.soft_update(&pred, 1.5).is_err());
    }

    #[test]
    fn grad_check_passes_on_both_families() {
        let mut r = rng(7);
        for specs in [resdnn(5, 7, 2, 2), fcdnn(5, 7, 2, 2)] {
            let rep = grad_check(specs, &mut r, 1e-4).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
    }

    #[test]
    fn grad_check_is_near_exact_for_linear_nets() {
        let specs = vec![
            LayerSpec::dense(4, 3, Activation::Linear),
            LayerSpec::residual(3, Activation::Linear),
            LayerSpec::dense(3, 2, Activation::Linear),
        ];
        let rep = grad_check(specs, &mut rng(3), 1e-4).unwrap();
        assert!(rep.max_rel_error < 1e-7, "{rep:?}");
    }

    #[test]
    fn grad_check_catches_corruption() {
        let mut r = rng(5);
        let p = ParamSet::<f64>::init(resdnn(3, 4, 1, 2), &mut r).unwrap();
        let x = [0.3, -0.7, 0.9];
        let y = [0.5, -0.5];
        let mut g = mse_gradient(&p, &x, &y, 1).unwrap();
        g.values_mut()[7] += 1.0;
        let rep = compare_gradients(&p, &x, &y, 1, &g, 1e-4).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.worst_index, 7);
    }

    #[test]
    fn record_round_trip() {
        let p = ParamSet::<f64>::init(resdnn(3, 4, 1, 2), &mut rng(2)).unwrap();
        let back: ParamSet<f64> = p.to_string().parse().unwrap();
        assert_eq!(back, p);
        let q = ParamSet::<f32>::init(fcdnn(3, 4, 1, 2), &mut rng(2)).unwrap();
        let back: ParamSet<f32> = q.to_string().parse().unwrap();
        assert_eq!(back, q);
        assert!("garbage".parse::<ParamSet<f64>>().is_err());
        let truncated: String = p.to_string().lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(truncated.parse::<ParamSet<f64>>().is_err());
    }

    #[test]
    fn adam_moves_against_gradient() {
        let specs = vec![LayerSpec::dense(1, 1, Activation::Linear)];
        let mut p = ParamSet::<f64>::zeros(specs.clone()).unwrap();
        let mut g = ParamSet::zeros(specs).unwrap();
        g.values_mut().copy_from_slice(&[3.0, -0.5]);
        let mut opt = Adam::new(&p);
        opt.step(&mut p, &g, 0.01).unwrap();
        // First bias-corrected step has magnitude alpha in every coordinate.
        assert!((p.values()[0] + 0.01).abs() < 1e-9);
        assert!((p.values()[1] - 0.01).abs() < 1e-9);
    }
}
