//! Fully connected networks with `sin(πs)` activations.
//!
//! Parameters live in one flat vector in a fixed order: layer by layer, each
//! layer's weight matrix (row-major, `out × in`) followed by its bias vector.
//! Gradients and optimizer moments use the same order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diffengine;
use crate::error::{Error, Result};

const CHECKPOINT_MAGIC: &str = "surfpinn-checkpoint 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// `σ(s) = sin(πs)`
    SinPi,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::SinPi => "sin-pi",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "sin-pi" => Some(Activation::SinPi),
            _ => None,
        }
    }

    #[inline]
    pub fn value(self, s: f64) -> f64 {
        match self {
            Activation::SinPi => (std::f64::consts::PI * s).sin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    layer_sizes: Vec<usize>,
    data: Vec<f64>,
    activation: Activation,
    seed: u64,
}

/// Layer sizes `(4, 100, 100, 100, 100, 1)` for the space-time network.
pub fn continuous_preset() -> Vec<usize> {
    vec![4, 100, 100, 100, 100, 1]
}

/// Layer sizes `(3, 200, 200, 200, 200, q + 1)` for the multi-stage network.
pub fn discrete_preset(stages: usize) -> Vec<usize> {
    vec![3, 200, 200, 200, 200, stages + 1]
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidShape(format!(
            "need at least input and output sizes, got {sizes:?}"
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidShape(format!("zero-width layer in {sizes:?}")));
    }
    Ok(())
}

impl MlpParams {
    /// Glorot-uniform weights and zero biases, reproducible from `seed`.
    pub fn init(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(layer_sizes)?;
        if layer_sizes.len() < 3 {
            return Err(Error::InvalidShape(
                "initialization requires at least one hidden layer".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(param_count(layer_sizes));
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            data.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..limit)));
            data.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(MlpParams {
            layer_sizes: layer_sizes.to_vec(),
            data,
            activation: Activation::SinPi,
            seed,
        })
    }

    /// All-zero parameters of the given shape.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        check_sizes(layer_sizes)?;
        Ok(MlpParams {
            layer_sizes: layer_sizes.to_vec(),
            data: vec![0.0; param_count(layer_sizes)],
            activation: Activation::SinPi,
            seed: 0,
        })
    }

    /// Build from a flat parameter vector in the canonical order.
    pub fn from_flat(layer_sizes: &[usize], data: Vec<f64>, seed: u64) -> Result<Self> {
        check_sizes(layer_sizes)?;
        let expected = param_count(layer_sizes);
        if data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidShape("non-finite parameter".into()));
        }
        Ok(MlpParams {
            layer_sizes: layer_sizes.to_vec(),
            data,
            activation: Activation::SinPi,
            seed,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of affine layers.
    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn param_count(&self) -> usize {
        self.data.len()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Offset of layer `l`'s weights in the flat vector.
    pub(crate) fn layer_offset(&self, l: usize) -> usize {
        param_count(&self.layer_sizes[..=l])
    }

    /// Weights (`out × in`, row-major) and bias of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let off = self.layer_offset(l);
        let (w, rest) = self.data[off..].split_at(n_in * n_out);
        (w, &rest[..n_out])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let off = self.layer_offset(l);
        let (w, rest) = self.data[off..].split_at_mut(n_in * n_out);
        (w, &mut rest[..n_out])
    }

    /// Network output at one input point.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(diffengine::forward_values(self, x))
    }

    /// Outputs for a flat batch of inputs; result is point-major
    /// (`out[i * m + k]` is head `k` at point `i`).
    pub fn forward_batch(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        let d = self.input_dim();
        if inputs.len() % d != 0 {
            return Err(Error::ShapeMismatch {
                expected: d,
                found: inputs.len() % d,
            });
        }
        Ok(diffengine::forward_values(self, inputs))
    }

    /// Plain-text checkpoint; floats use the shortest representation that
    /// parses back to the same bits.
    pub fn to_checkpoint_string(&self) -> String {
        let mut s = String::with_capacity(self.data.len() * 24 + 128);
        writeln!(s, "{CHECKPOINT_MAGIC}").unwrap();
        writeln!(s, "activation {}", self.activation.name()).unwrap();
        writeln!(s, "seed {}", self.seed).unwrap();
        let sizes: Vec<String> = self.layer_sizes.iter().map(|n| n.to_string()).collect();
        writeln!(s, "layer_sizes {}", sizes.join(" ")).unwrap();
        write_values(&mut s, "params", &self.data);
        s
    }

    pub fn from_checkpoint_str(text: &str, origin: &Path) -> Result<Self> {
        let mut reader = LineReader::new(text, origin);
        let magic = reader.next_line()?;
        if magic != CHECKPOINT_MAGIC {
            return Err(reader.error(format!("expected `{CHECKPOINT_MAGIC}`")));
        }
        let activation = reader.keyed("activation")?;
        let activation =
            Activation::parse(activation).ok_or_else(|| reader.error("unknown activation"))?;
        let seed = reader
            .keyed("seed")?
            .parse::<u64>()
            .map_err(|e| reader.error(e.to_string()))?;
        let sizes = reader
            .keyed("layer_sizes")?
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| reader.error(e.to_string()))?;
        let data = reader.values("params")?;
        let mut params = MlpParams::from_flat(&sizes, data, seed)
            .map_err(|e| reader.error(e.to_string()))?;
        params.activation = activation;
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_checkpoint_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_checkpoint_str(&text, path)
    }
}

/// Write through a temporary file so an interrupted save never leaves a
/// truncated checkpoint behind.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// `name count` header followed by one value per line.
pub(crate) fn write_values(out: &mut String, name: &str, values: &[f64]) {
    writeln!(out, "{name} {}", values.len()).unwrap();
    for v in values {
        writeln!(out, "{v:e}").unwrap();
    }
}

/// Line-oriented reader for the plain-text checkpoint formats.
pub(crate) struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
    origin: PathBuf,
}

impl<'a> LineReader<'a> {
    pub(crate) fn new(text: &'a str, origin: &Path) -> Self {
        LineReader {
            lines: text.lines().enumerate(),
            line: 0,
            origin: origin.to_path_buf(),
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str> {
        loop {
            match self.lines.next() {
                Some((i, l)) => {
                    self.line = i + 1;
                    let l = l.trim();
                    if !l.is_empty() && !l.starts_with('#') {
                        return Ok(l);
                    }
                }
                None => return Err(self.error("unexpected end of file")),
            }
        }
    }

    /// Next line must read `key rest`; returns `rest`.
    pub(crate) fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(char::is_whitespace) {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ if line == key => Ok(""),
            _ => Err(self.error(format!("expected `{key}`"))),
        }
    }

    pub(crate) fn values(&mut self, key: &str) -> Result<Vec<f64>> {
        let count: usize = self
            .keyed(key)?
            .parse()
            .map_err(|e: std::num::ParseIntError| self.error(e.to_string()))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let line = self.next_line()?;
            values.push(line.parse::<f64>().map_err(|e| self.error(e.to_string()))?);
        }
        Ok(values)
    }
}
