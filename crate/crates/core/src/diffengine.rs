//! Second-order input jets of an MLP and exact parameter gradients of losses
//! assembled from them.
//!
//! A batch of points is pushed through the network as a stack of channels:
//! the value, the `d` input-derivatives and the `d(d+1)/2` distinct
//! second derivatives. Affine layers act on every channel with the same
//! matrix product; the activation mixes channels pointwise by the chain rule.
//! The reverse pass runs back through exactly this propagation, so the
//! parameter gradient is exact up to round-off.
//!
//! Points are processed in fixed-size chunks. Chunk gradients are always
//! formed in separate buffers and summed in chunk order, so the result does
//! not depend on the number of worker threads.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::MlpParams;

/// Largest supported input dimension (x, y, z, t).
pub const MAX_DIM: usize = 4;

/// Points per chunk. Part of the reduction order; changing it changes the
/// low bits of every gradient.
const CHUNK: usize = 256;

/// Value, input gradient and input Hessian of one output head at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2 {
    pub dim: usize,
    pub value: f64,
    pub grad: [f64; MAX_DIM],
    pub hess: [[f64; MAX_DIM]; MAX_DIM],
}

impl Jet2 {
    pub fn zero(dim: usize) -> Self {
        Jet2 {
            dim,
            value: 0.0,
            grad: [0.0; MAX_DIM],
            hess: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    /// Trace of the leading `k × k` block of the Hessian.
    pub fn laplacian(&self, k: usize) -> f64 {
        (0..k).map(|i| self.hess[i][i]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.hess.iter().flatten().all(|v| v.is_finite())
    }
}

/// `∂loss/∂θ` in the flat parameter order of [`MlpParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGradient(pub Vec<f64>);

impl ParamGradient {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A scalar loss assembled pointwise from network jets.
///
/// The loss is `Σᵢ point(i, …)`. Each call receives the jets of every output
/// head at point `i` and must write the partial derivatives of its
/// contribution into `seed` (pre-zeroed, one entry per head). Hessian seeds
/// are taken with respect to the full matrix, treating `hess[k][l]` and
/// `hess[l][k]` as separate entries. `terms` accumulates optional
/// bookkeeping quantities that are summed over points but not differentiated.
pub trait JetLoss: Sync {
    fn n_terms(&self) -> usize {
        0
    }

    /// Number of leading input coordinates whose second derivatives are
    /// needed. Hessian entries outside that block are left at zero.
    fn hessian_dim(&self, input_dim: usize) -> usize {
        input_dim
    }

    fn point(&self, index: usize, jets: &[Jet2], seed: &mut [Jet2], terms: &mut [f64]) -> f64;
}

impl<F> JetLoss for F
where
    F: Fn(usize, &[Jet2], &mut [Jet2]) -> f64 + Sync,
{
    fn point(&self, index: usize, jets: &[Jet2], seed: &mut [Jet2], _terms: &mut [f64]) -> f64 {
        self(index, jets, seed)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    /// Chunk results summed in chunk order; identical for any thread count.
    #[default]
    Ordered,
    /// Tree reduction in whatever order the thread pool produces.
    Unordered,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub total: f64,
    pub terms: Vec<f64>,
    pub gradient: ParamGradient,
}

// ---------------------------------------------------------------------------
// Channel layout

#[derive(Clone, Debug)]
struct Layout {
    dim: usize,
    /// Upper-triangular index pairs `(k, l)`, `k ≤ l`.
    pairs: Vec<(usize, usize)>,
    channels: usize,
}

impl Layout {
    fn jets(dim: usize, hdim: usize) -> Self {
        let hdim = hdim.min(dim);
        let pairs: Vec<(usize, usize)> =
            (0..hdim).flat_map(|k| (k..hdim).map(move |l| (k, l))).collect();
        Layout {
            dim,
            channels: 1 + dim + pairs.len(),
            pairs,
        }
    }

    fn values() -> Self {
        Layout {
            dim: 0,
            pairs: Vec::new(),
            channels: 1,
        }
    }
}

// ---------------------------------------------------------------------------
// Dense kernels

/// `c = beta·c + a·b` with `a: m×k`, `b: k×n`, all row-major unless the
/// corresponding flag asks for the transpose of a stored row-major matrix.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_trans: bool,
    b: &[f64],
    b_trans: bool,
    beta: f64,
    c: &mut [f64],
) {
    let (rsa, csa) = if a_trans { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_trans { (1, k as isize) } else { (n as isize, 1) };
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the slices hold at least m·k, k·n and m·n elements and the
    // strides above address exactly those ranges.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Per-layer buffers kept for the reverse pass.
struct Tape {
    np: usize,
    /// Input to each affine layer, `n_in × (C·np)`.
    acts: Vec<Vec<f64>>,
    /// Pre-activations of hidden layers, `n_out × (C·np)`.
    pre: Vec<Vec<f64>>,
    /// Output layer, `m × (C·np)`.
    out: Vec<f64>,
}

fn load_inputs(layout: &Layout, inputs: &[f64], np: usize) -> Vec<f64> {
    let d = inputs.len() / np;
    let cols = layout.channels * np;
    let mut a0 = vec![0.0; d * cols];
    for k in 0..d {
        let row = &mut a0[k * cols..(k + 1) * cols];
        for p in 0..np {
            row[p] = inputs[p * d + k];
        }
        if layout.dim > 0 {
            // ∂xₖ/∂xₖ = 1 in gradient channel k.
            row[(1 + k) * np..(2 + k) * np].fill(1.0);
        }
    }
    a0
}

fn activate(layout: &Layout, z: &[f64], a: &mut [f64], rows: usize, np: usize) {
    let cols = layout.channels * np;
    let d = layout.dim;
    for r in 0..rows {
        let zr = &z[r * cols..(r + 1) * cols];
        let ar = &mut a[r * cols..(r + 1) * cols];
        for p in 0..np {
            let (s, c) = (PI * zr[p]).sin_cos();
            ar[p] = s;
            if d == 0 {
                continue;
            }
            let s1 = PI * c;
            let s2 = -PI * PI * s;
            for k in 0..d {
                ar[(1 + k) * np + p] = s1 * zr[(1 + k) * np + p];
            }
            for (i, &(k, l)) in layout.pairs.iter().enumerate() {
                let ch = (1 + d + i) * np + p;
                ar[ch] = s2 * zr[(1 + k) * np + p] * zr[(1 + l) * np + p] + s1 * zr[ch];
            }
        }
    }
}

/// Reverse of [`activate`]: overwrite `g` (gradient w.r.t. the activation
/// output) with the gradient w.r.t. the pre-activation `z`.
fn activate_backward(layout: &Layout, z: &[f64], g: &mut [f64], rows: usize, np: usize) {
    let cols = layout.channels * np;
    let d = layout.dim;
    let mut gz = [0.0; 1 + MAX_DIM + MAX_DIM * (MAX_DIM + 1) / 2];
    for r in 0..rows {
        let zr = &z[r * cols..(r + 1) * cols];
        let gr = &mut g[r * cols..(r + 1) * cols];
        for p in 0..np {
            let (s, c) = (PI * zr[p]).sin_cos();
            let s1 = PI * c;
            let s2 = -PI * PI * s;
            let s3 = -PI * PI * PI * c;
            let mut gval = s1 * gr[p];
            for k in 0..d {
                let ch = (1 + k) * np + p;
                gz[1 + k] = s1 * gr[ch];
                gval += s2 * gr[ch] * zr[ch];
            }
            for (i, &(k, l)) in layout.pairs.iter().enumerate() {
                let ch = (1 + d + i) * np + p;
                let gh = gr[ch];
                let (jk, jl) = (zr[(1 + k) * np + p], zr[(1 + l) * np + p]);
                gz[1 + d + i] = s1 * gh;
                gval += gh * (s3 * jk * jl + s2 * zr[ch]);
                gz[1 + k] += gh * s2 * jl;
                gz[1 + l] += gh * s2 * jk;
            }
            gr[p] = gval;
            for ch in 1..layout.channels {
                gr[ch * np + p] = gz[ch];
            }
        }
    }
}

fn forward_chunk(params: &MlpParams, layout: &Layout, inputs: &[f64], np: usize) -> Tape {
    let sizes = params.layer_sizes();
    let cols = layout.channels * np;
    let n_layers = params.num_layers();
    let mut acts = Vec::with_capacity(n_layers);
    let mut pre = Vec::with_capacity(n_layers.saturating_sub(1));
    acts.push(load_inputs(layout, inputs, np));
    let mut out = Vec::new();
    for l in 0..n_layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let (w, b) = params.layer(l);
        let mut z = vec![0.0; n_out * cols];
        gemm(n_out, n_in, cols, w, false, &acts[l], false, 0.0, &mut z);
        for (r, bias) in b.iter().enumerate() {
            z[r * cols..r * cols + np].iter_mut().for_each(|v| *v += bias);
        }
        if l + 1 == n_layers {
            out = z;
        } else {
            let mut a = vec![0.0; n_out * cols];
            activate(layout, &z, &mut a, n_out, np);
            pre.push(z);
            acts.push(a);
        }
    }
    Tape { np, acts, pre, out }
}

fn extract_jets(layout: &Layout, out: &[f64], heads: usize, np: usize) -> Vec<Jet2> {
    let cols = layout.channels * np;
    let d = layout.dim;
    let mut jets = Vec::with_capacity(np * heads);
    for p in 0..np {
        for h in 0..heads {
            let row = &out[h * cols..(h + 1) * cols];
            let mut j = Jet2::zero(d);
            j.value = row[p];
            for k in 0..d {
                j.grad[k] = row[(1 + k) * np + p];
            }
            for (i, &(k, l)) in layout.pairs.iter().enumerate() {
                let v = row[(1 + d + i) * np + p];
                j.hess[k][l] = v;
                j.hess[l][k] = v;
            }
            jets.push(j);
        }
    }
    jets
}

fn backward_chunk(
    params: &MlpParams,
    layout: &Layout,
    tape: &Tape,
    seeds: &[Jet2],
    grad: &mut [f64],
) {
    let sizes = params.layer_sizes();
    let heads = params.output_dim();
    let np = tape.np;
    let cols = layout.channels * np;
    let d = layout.dim;

    let mut g = vec![0.0; heads * cols];
    for p in 0..np {
        for h in 0..heads {
            let s = &seeds[p * heads + h];
            let row = &mut g[h * cols..(h + 1) * cols];
            row[p] = s.value;
            for k in 0..d {
                row[(1 + k) * np + p] = s.grad[k];
            }
            for (i, &(k, l)) in layout.pairs.iter().enumerate() {
                let v = if k == l { s.hess[k][k] } else { s.hess[k][l] + s.hess[l][k] };
                row[(1 + d + i) * np + p] = v;
            }
        }
    }

    for l in (0..params.num_layers()).rev() {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let off = params.layer_offset(l);
        let (gw, rest) = grad[off..].split_at_mut(n_in * n_out);
        gemm(n_out, cols, n_in, &g, false, &tape.acts[l], true, 1.0, gw);
        for (r, gb) in rest[..n_out].iter_mut().enumerate() {
            *gb += g[r * cols..r * cols + np].iter().sum::<f64>();
        }
        if l == 0 {
            break;
        }
        let (w, _) = params.layer(l);
        let mut ga = vec![0.0; n_in * cols];
        gemm(n_in, n_out, cols, w, true, &g, false, 0.0, &mut ga);
        activate_backward(layout, &tape.pre[l - 1], &mut ga, n_in, np);
        g = ga;
    }
}

fn check_inputs(params: &MlpParams, inputs: &[f64]) -> Result<usize> {
    let d = params.input_dim();
    if d > MAX_DIM {
        return Err(Error::InvalidShape(format!(
            "input dimension {d} exceeds {MAX_DIM}"
        )));
    }
    if inputs.len() % d != 0 {
        return Err(Error::ShapeMismatch {
            expected: d,
            found: inputs.len() % d,
        });
    }
    Ok(inputs.len() / d)
}

/// Network outputs only (no derivative channels), point-major.
pub(crate) fn forward_values(params: &MlpParams, inputs: &[f64]) -> Vec<f64> {
    let d = params.input_dim();
    let heads = params.output_dim();
    let layout = Layout::values();
    let mut out = Vec::with_capacity(inputs.len() / d * heads);
    for chunk in inputs.chunks(CHUNK * d) {
        let np = chunk.len() / d;
        let tape = forward_chunk(params, &layout, chunk, np);
        for p in 0..np {
            for h in 0..heads {
                out.push(tape.out[h * np + p]);
            }
        }
    }
    out
}

/// Jets of every head at one input point.
pub fn jet2_eval(params: &MlpParams, x: &[f64]) -> Result<Vec<Jet2>> {
    if x.len() != params.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: params.input_dim(),
            found: x.len(),
        });
    }
    jet2_batch(params, x)
}

/// Jets for a flat batch of inputs, point-major (`out[i * heads + h]`).
pub fn jet2_batch(params: &MlpParams, inputs: &[f64]) -> Result<Vec<Jet2>> {
    check_inputs(params, inputs)?;
    let d = params.input_dim();
    let layout = Layout::jets(d, d);
    let mut jets = Vec::new();
    for chunk in inputs.chunks(CHUNK * d) {
        let np = chunk.len() / d;
        let tape = forward_chunk(params, &layout, chunk, np);
        jets.extend(extract_jets(&layout, &tape.out, params.output_dim(), np));
    }
    Ok(jets)
}

struct ChunkResult {
    total: f64,
    terms: Vec<f64>,
    grad: Option<Vec<f64>>,
}

fn run_chunk<L: JetLoss + ?Sized>(
    params: &MlpParams,
    layout: &Layout,
    loss: &L,
    chunk: &[f64],
    first: usize,
    with_gradient: bool,
) -> ChunkResult {
    let d = params.input_dim();
    let heads = params.output_dim();
    let np = chunk.len() / d;
    let tape = forward_chunk(params, layout, chunk, np);
    let jets = extract_jets(layout, &tape.out, heads, np);
    let mut seeds = vec![Jet2::zero(d); np * heads];
    let mut terms = vec![0.0; loss.n_terms()];
    let mut total = 0.0;
    for p in 0..np {
        let range = p * heads..(p + 1) * heads;
        total += loss.point(first + p, &jets[range.clone()], &mut seeds[range], &mut terms);
    }
    let grad = with_gradient.then(|| {
        let mut g = vec![0.0; params.param_count()];
        backward_chunk(params, layout, &tape, &seeds, &mut g);
        g
    });
    ChunkResult { total, terms, grad }
}

fn merge(acc: &mut ChunkResult, next: ChunkResult) {
    acc.total += next.total;
    acc.terms.iter_mut().zip(&next.terms).for_each(|(a, b)| *a += b);
    if let (Some(a), Some(b)) = (acc.grad.as_mut(), next.grad.as_ref()) {
        a.iter_mut().zip(b).for_each(|(a, b)| *a += b);
    }
}

/// Evaluate a jet loss over a batch, optionally with its parameter gradient.
pub fn evaluate<L: JetLoss + ?Sized>(
    params: &MlpParams,
    inputs: &[f64],
    loss: &L,
    with_gradient: bool,
    reduction: Reduction,
) -> Result<Evaluation> {
    check_inputs(params, inputs)?;
    let d = params.input_dim();
    let layout = Layout::jets(d, loss.hessian_dim(d));
    let chunks: Vec<(usize, &[f64])> = inputs
        .chunks(CHUNK * d)
        .enumerate()
        .map(|(i, c)| (i * CHUNK, c))
        .collect();
    let empty = || ChunkResult {
        total: 0.0,
        terms: vec![0.0; loss.n_terms()],
        grad: with_gradient.then(|| vec![0.0; params.param_count()]),
    };
    let run = |&(first, c): &(usize, &[f64])| run_chunk(params, &layout, loss, c, first, with_gradient);
    let result = match reduction {
        Reduction::Ordered if rayon::current_num_threads() <= 1 => {
            let mut acc = empty();
            for c in &chunks {
                merge(&mut acc, run(c));
            }
            acc
        }
        Reduction::Ordered => {
            let parts: Vec<ChunkResult> = chunks.par_iter().map(run).collect();
            let mut acc = empty();
            for part in parts {
                merge(&mut acc, part);
            }
            acc
        }
        Reduction::Unordered => chunks.par_iter().map(run).reduce(empty, |mut a, b| {
            merge(&mut a, b);
            a
        }),
    };
    if !result.total.is_finite() {
        return Err(Error::NonFiniteLoss(result.total));
    }
    Ok(Evaluation {
        total: result.total,
        terms: result.terms,
        gradient: ParamGradient(result.grad.unwrap_or_default()),
    })
}

/// Loss value and exact parameter gradient.
pub fn loss_param_gradient<L: JetLoss + ?Sized>(
    params: &MlpParams,
    inputs: &[f64],
    loss: &L,
) -> Result<(f64, ParamGradient)> {
    let e = evaluate(params, inputs, loss, true, Reduction::Ordered)?;
    Ok((e.total, e.gradient))
}

/// Loss value without the reverse pass.
pub fn loss_value<L: JetLoss + ?Sized>(params: &MlpParams, inputs: &[f64], loss: &L) -> Result<f64> {
    Ok(evaluate(params, inputs, loss, false, Reduction::Ordered)?.total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdReport {
    /// Worst `|analytic − fd| / max(|analytic|, 1e-8)`.
    pub max_relative: f64,
    /// Parameter index where the worst discrepancy occurs.
    pub worst_index: usize,
    pub analytic: f64,
    pub finite_difference: f64,
}

/// Compare the exact gradient with central differences, parameter by
/// parameter.
pub fn fd_check<L: JetLoss + ?Sized>(
    params: &MlpParams,
    inputs: &[f64],
    loss: &L,
    step: f64,
) -> Result<FdReport> {
    if !(1e-7..=1e-3).contains(&step) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step {step:e} outside [1e-7, 1e-3]"
        )));
    }
    let (_, grad) = loss_param_gradient(params, inputs, loss)?;
    let fd: Vec<f64> = (0..params.param_count())
        .into_par_iter()
        .map(|j| {
            let mut p = params.clone();
            let theta = p.as_flat()[j];
            p.as_flat_mut()[j] = theta + step;
            let plus = loss_value(&p, inputs, loss)?;
            p.as_flat_mut()[j] = theta - step;
            let minus = loss_value(&p, inputs, loss)?;
            Ok((plus - minus) / (2.0 * step))
        })
        .collect::<Result<_>>()?;
    let mut report = FdReport {
        max_relative: 0.0,
        worst_index: 0,
        analytic: 0.0,
        finite_difference: 0.0,
    };
    for (j, (a, f)) in grad.0.iter().zip(&fd).enumerate() {
        let rel = (a - f).abs() / a.abs().max(1e-8);
        if rel > report.max_relative || j == 0 {
            report = FdReport {
                max_relative: rel,
                worst_index: j,
                analytic: *a,
                finite_difference: *f,
            };
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_net(sizes: &[usize], seed: u64) -> MlpParams {
        let mut p = MlpParams::init(sizes, seed).unwrap();
        // Non-zero biases so every code path is exercised.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 99);
        for l in 0..p.num_layers() {
            let (_, b) = p.layer_mut(l);
            b.iter_mut().for_each(|v| *v = rng.random_range(-0.3..0.3));
        }
        p
    }

    #[test]
    fn zero_network_has_zero_jet() {
        let p = MlpParams::zeros(&[3, 8, 8, 1]).unwrap();
        let j = jet2_eval(&p, &[0.2, 0.4, -0.1]).unwrap();
        assert_eq!(j[0], Jet2::zero(3));
    }

    #[test]
    fn affine_network_jet() {
        let p = MlpParams::from_flat(&[3, 1], vec![0.5, -2.0, 3.0, 0.25], 0).unwrap();
        let j = jet2_eval(&p, &[1.0, 2.0, 3.0]).unwrap()[0];
        assert_eq!(j.value, 0.5 - 4.0 + 9.0 + 0.25);
        assert_eq!(&j.grad[..3], &[0.5, -2.0, 3.0]);
        assert!(j.hess.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn single_sine_neuron() {
        // u = sin(πx₁) through one hidden neuron with unit output weight.
        let p = MlpParams::from_flat(&[1, 1, 1], vec![1.0, 0.0, 1.0, 0.0], 0).unwrap();
        let j = jet2_eval(&p, &[0.25]).unwrap()[0];
        let expect_grad = PI * (PI / 4.0).cos();
        let expect_hess = -PI * PI * (PI / 4.0).sin();
        assert!((j.grad[0] - expect_grad).abs() < 1e-14);
        assert!((j.hess[0][0] - expect_hess).abs() < 1e-13);
        assert!((j.grad[0] - 2.2214).abs() < 1e-4);
        assert!((j.hess[0][0] + 6.9789).abs() < 1e-4);
    }

    #[test]
    fn jets_match_finite_differences_of_forward() {
        let p = random_net(&[4, 12, 12, 2], 5);
        let x = [0.3, -0.7, 0.2, 0.6];
        let jets = jet2_eval(&p, &x).unwrap();
        let eps = 1e-5;
        let f = |y: &[f64]| p.forward(y).unwrap();
        for k in 0..4 {
            let (mut xp, mut xm) = (x, x);
            xp[k] += eps;
            xm[k] -= eps;
            let (fp, fm) = (f(&xp), f(&xm));
            for h in 0..2 {
                let fd = (fp[h] - fm[h]) / (2.0 * eps);
                assert!((fd - jets[h].grad[k]).abs() < 1e-8, "grad {k} head {h}");
            }
            let eps2 = 1e-4;
            for l in 0..4 {
                let g = |y: &[f64]| jet2_eval(&p, y).unwrap()[0].grad[l];
                let (mut yp, mut ym) = (x, x);
                yp[k] += eps2;
                ym[k] -= eps2;
                let fd = (g(&yp) - g(&ym)) / (2.0 * eps2);
                assert!((fd - jets[0].hess[k][l]).abs() < 1e-6, "hess {k}{l}");
            }
        }
    }

    #[test]
    fn hessian_symmetric_and_forward_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..100 {
            let p = random_net(&[4, 10, 10, 3], trial);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jets = jet2_eval(&p, &x).unwrap();
            let values = p.forward(&x).unwrap();
            for (j, v) in jets.iter().zip(&values) {
                assert!((j.value - v).abs() <= 1e-14);
                for k in 0..4 {
                    for l in 0..4 {
                        assert_eq!(j.hess[k][l], j.hess[l][k]);
                    }
                }
            }
        }
    }

    #[test]
    fn linear_loss_gradient() {
        // loss = u(x) for u = w·x + b: ∂/∂w = x, ∂/∂b = 1.
        let p = MlpParams::from_flat(&[3, 1], vec![0.1, 0.2, 0.3, 0.4], 0).unwrap();
        let loss = |_: usize, jets: &[Jet2], seed: &mut [Jet2]| {
            seed[0].value = 1.0;
            jets[0].value
        };
        let (value, grad) = loss_param_gradient(&p, &[2.0, -1.0, 0.5], &loss).unwrap();
        assert!((value - (0.2 - 0.2 + 0.15 + 0.4)).abs() < 1e-15);
        assert_eq!(grad.0, vec![2.0, -1.0, 0.5, 1.0]);
    }

    #[test]
    fn stationary_point_of_zero_network() {
        let p = MlpParams::zeros(&[3, 6, 1]).unwrap();
        let loss = |_: usize, jets: &[Jet2], seed: &mut [Jet2]| {
            seed[0].value = 2.0 * jets[0].value;
            jets[0].value * jets[0].value
        };
        let (_, grad) = loss_param_gradient(&p, &[0.1, 0.2, 0.3], &loss).unwrap();
        assert!(grad.0.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn fd_check_on_quadratic_of_linear_net() {
        let p = MlpParams::from_flat(&[3, 2], vec![0.3, -0.1, 0.2, 0.5, 0.7, -0.4, 0.1, 0.2], 0)
            .unwrap();
        let loss = |_: usize, jets: &[Jet2], seed: &mut [Jet2]| {
            let (a, b) = (jets[0].value, jets[1].value);
            seed[0].value = 2.0 * a + b;
            seed[1].value = a;
            a * a + a * b
        };
        let inputs = [0.3, 0.1, -0.5, 1.0, 0.2, 0.3];
        let r = fd_check(&p, &inputs, &loss, 1e-5).unwrap();
        assert!(r.max_relative <= 1e-9, "{r:?}");
        assert!(fd_check(&p, &inputs, &loss, 1.0).is_err());
    }

    #[test]
    fn nonfinite_loss_is_reported() {
        let p = MlpParams::zeros(&[3, 2, 1]).unwrap();
        let loss = |_: usize, _: &[Jet2], _: &mut [Jet2]| f64::NAN;
        assert!(matches!(
            loss_value(&p, &[0.0; 3], &loss),
            Err(Error::NonFiniteLoss(_))
        ));
    }

    #[test]
    fn batch_gradient_is_mean_of_point_gradients() {
        let p = random_net(&[3, 9, 9, 1], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 7;
        let inputs: Vec<f64> = (0..3 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean_loss = move |_: usize, jets: &[Jet2], seed: &mut [Jet2]| {
            let lap = jets[0].laplacian(3);
            for k in 0..3 {
                seed[0].hess[k][k] = 2.0 * lap / n as f64;
            }
            lap * lap / n as f64
        };
        let (_, batch) = loss_param_gradient(&p, &inputs, &mean_loss).unwrap();
        let point_loss = |_: usize, jets: &[Jet2], seed: &mut [Jet2]| {
            let lap = jets[0].laplacian(3);
            for k in 0..3 {
                seed[0].hess[k][k] = 2.0 * lap;
            }
            lap * lap
        };
        let mut mean = vec![0.0; p.param_count()];
        for x in inputs.chunks(3) {
            let (_, g) = loss_param_gradient(&p, x, &point_loss).unwrap();
            mean.iter_mut().zip(&g.0).for_each(|(m, g)| *m += g / n as f64);
        }
        for (a, b) in batch.0.iter().zip(&mean) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn head_independence() {
        let mut p = random_net(&[3, 8, 8, 3], 9);
        let x = [0.1, 0.5, -0.3];
        let before = jet2_eval(&p, &x).unwrap();
        let last = p.num_layers() - 1;
        let (w, b) = p.layer_mut(last);
        w[8..16].fill(0.0);
        b[1] = 0.0;
        let after = jet2_eval(&p, &x).unwrap();
        assert_eq!(after[1], Jet2::zero(3));
        assert_eq!(after[0], before[0]);
        assert_eq!(after[2], before[2]);
    }

    #[test]
    fn ordered_reduction_is_chunk_invariant() {
        // More than one chunk, so the ordered merge path is exercised.
        let p = random_net(&[3, 6, 1], 2);
        let inputs: Vec<f64> = (0..3 * (CHUNK + 17)).map(|i| (i as f64 * 0.37).sin()).collect();
        let loss = |_: usize, jets: &[Jet2], seed: &mut [Jet2]| {
            seed[0].value = 1.0;
            seed[0].grad[0] = 1.0;
            jets[0].value + jets[0].grad[0]
        };
        let a = evaluate(&p, &inputs, &loss, true, Reduction::Ordered).unwrap();
        let b = evaluate(&p, &inputs, &loss, true, Reduction::Ordered).unwrap();
        assert_eq!(a.gradient, b.gradient);
        let c = evaluate(&p, &inputs, &loss, true, Reduction::Unordered).unwrap();
        for (x, y) in a.gradient.0.iter().zip(&c.gradient.0) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}
