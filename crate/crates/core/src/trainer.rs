//! Supervised imitation of a controller by a ReLU network: dataset sampling,
//! back-propagated mean squared error and Adam/SGD updates.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{mat_to_rows, rows_to_mat};
use crate::relu::{Layer, ReluNetwork};
use crate::{Error, Parallelism, Polytope, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingScheme {
    UniformRejection,
    /// Half uniform, half rescaled to a gauge in `[0.8, 1]`.
    BoundaryEnriched,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub states: Vec<DVector<f64>>,
    pub targets: Vec<DVector<f64>>,
    pub seed: u64,
    pub scheme: SamplingScheme,
}

#[derive(Serialize, Deserialize)]
struct DatasetDoc {
    states: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    seed: u64,
    scheme: SamplingScheme,
}

impl Serialize for Dataset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = |v: &[DVector<f64>]| v.iter().map(|x| x.iter().copied().collect()).collect();
        DatasetDoc { states: rows(&self.states), targets: rows(&self.targets), seed: self.seed, scheme: self.scheme }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dataset {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = DatasetDoc::deserialize(d)?;
        if doc.states.len() != doc.targets.len() {
            return Err(serde::de::Error::custom("states and targets differ in length"));
        }
        let cols = |v: Vec<Vec<f64>>| v.into_iter().map(DVector::from_vec).collect();
        Ok(Dataset { states: cols(doc.states), targets: cols(doc.targets), seed: doc.seed, scheme: doc.scheme })
    }
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

fn uniform_in<R: Rng>(set: &Polytope, lo: &DVector<f64>, hi: &DVector<f64>, rng: &mut R) -> DVector<f64> {
    loop {
        let x = DVector::from_fn(lo.len(), |i, _| rng.random_range(lo[i]..=hi[i]));
        if set.contains(&x, 0.0) {
            return x;
        }
    }
}

/// Draws `count` states of `set` and labels them with `target`.
pub fn sample_dataset<F>(set: &Polytope, target: F, count: usize, scheme: SamplingScheme, seed: u64) -> Result<Dataset>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if count == 0 {
        return Err(Error::Invalid("a dataset needs at least one sample".into()));
    }
    let (lo, hi) = set.bounding_box()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(count);
    for k in 0..count {
        let mut x = uniform_in(set, &lo, &hi, &mut rng);
        if scheme == SamplingScheme::BoundaryEnriched && k % 2 == 1 {
            let level = rng.random_range(0.8..=1.0);
            let g = set.gauge(&x)?;
            if g > 0.0 {
                x *= level / g;
            }
        }
        states.push(x);
    }
    let targets = states
        .iter()
        .map(|x| {
            target(x).map_err(|e| Error::Invalid(format!("controller evaluation failed at {:?}: {e}", x.as_slice())))
        })
        .collect::<Result<Vec<_>>>()?;
    if targets.iter().any(|t| t.iter().any(|v| !v.is_finite())) {
        return Err(Error::Invalid("non-finite target".into()));
    }
    Ok(Dataset { states, targets, seed, scheme })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Mini-batch size; `None` is full batch.
    pub batch: Option<usize>,
    pub optimizer: Optimizer,
    /// Seeds the mini-batch shuffling.
    pub seed: u64,
    pub par: Parallelism,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 200, learning_rate: 1e-2, batch: Some(64), optimizer: Optimizer::adam(), seed: 0, par: Parallelism::Rayon }
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub network: ReluNetwork,
    /// Training-set loss before the first epoch and after every epoch.
    pub loss_history: Vec<f64>,
}

impl TrainReport {
    pub fn loss_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (k, l) in self.loss_history.iter().enumerate() {
            out.push_str(&format!("{k},{l:e}\n"));
        }
        out
    }
}

/// Per-layer `(∂W, ∂b)`.
pub type Gradient = Vec<(DMatrix<f64>, DVector<f64>)>;

fn zero_gradient(net: &ReluNetwork) -> Gradient {
    net.layers()
        .iter()
        .map(|l| (DMatrix::zeros(l.weights.nrows(), l.weights.ncols()), DVector::zeros(l.bias.len())))
        .collect()
}

/// Squared error of one sample, accumulating its gradient scaled by `scale`.
fn backprop(net: &ReluNetwork, x: &DVector<f64>, y: &DVector<f64>, scale: f64, grad: &mut Gradient) -> f64 {
    let layers = net.layers();
    let last = layers.len() - 1;
    let mut acts = vec![x.clone()];
    let mut pre = Vec::with_capacity(layers.len());
    for (j, l) in layers.iter().enumerate() {
        let z = &l.weights * &acts[j] + &l.bias;
        let a = if j < last { z.map(|v| v.max(0.0)) } else { z.clone() };
        pre.push(z);
        acts.push(a);
    }
    let r = &acts[last + 1] - y;
    let loss = r.norm_squared();
    let mut delta = r * (2.0 * scale);
    for j in (0..=last).rev() {
        grad[j].0 += &delta * acts[j].transpose();
        grad[j].1 += &delta;
        if j > 0 {
            let mut back = layers[j].weights.transpose() * &delta;
            // ReLU subgradient 0 at the kink
            for (b, &z) in back.iter_mut().zip(pre[j - 1].iter()) {
                if z <= 0.0 {
                    *b = 0.0;
                }
            }
            delta = back;
        }
    }
    loss
}

const CHUNK: usize = 64;

/// Mean squared error over the selected samples and its gradient.
pub fn loss_and_gradient(net: &ReluNetwork, data: &Dataset, idx: &[usize], par: Parallelism) -> (f64, Gradient) {
    let scale = 1.0 / (idx.len() * net.output_dim()).max(1) as f64;
    let chunks: Vec<&[usize]> = idx.chunks(CHUNK).collect();
    let parts = par.map(&chunks, |c| {
        let mut g = zero_gradient(net);
        let l: f64 = c.iter().map(|&i| backprop(net, &data.states[i], &data.targets[i], scale, &mut g)).sum();
        (l, g)
    });
    // fixed-order reduction
    let mut grad = zero_gradient(net);
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        for (acc, part) in grad.iter_mut().zip(g) {
            acc.0 += part.0;
            acc.1 += part.1;
        }
    }
    (loss * scale, grad)
}

pub fn mse(net: &ReluNetwork, data: &Dataset) -> f64 {
    let scale = 1.0 / (data.len() * net.output_dim()).max(1) as f64;
    data.states
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| (net.forward_unchecked(x) - y).norm_squared())
        .sum::<f64>()
        * scale
}

struct Moments {
    m: Gradient,
    v: Gradient,
    t: i32,
}

fn step(net: &mut ReluNetwork, grad: &Gradient, cfg: &TrainConfig, mom: &mut Moments) {
    let lr = cfg.learning_rate;
    match cfg.optimizer {
        Optimizer::Sgd => {
            for (l, g) in net.layers_mut().iter_mut().zip(grad) {
                l.weights -= &g.0 * lr;
                l.bias -= &g.1 * lr;
            }
        }
        Optimizer::Adam { beta1, beta2, eps } => {
            mom.t += 1;
            let c1 = 1.0 - beta1.powi(mom.t);
            let c2 = 1.0 - beta2.powi(mom.t);
            let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            };
            for (j, l) in net.layers_mut().iter_mut().enumerate() {
                let (mw, mb) = &mut mom.m[j];
                let (vw, vb) = &mut mom.v[j];
                for k in 0..l.weights.len() {
                    update(&mut l.weights[k], grad[j].0[k], &mut mw[k], &mut vw[k]);
                }
                for k in 0..l.bias.len() {
                    update(&mut l.bias[k], grad[j].1[k], &mut mb[k], &mut vb[k]);
                }
            }
        }
    }
}

fn finite_net(net: &ReluNetwork) -> bool {
    net.layers().iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
}

/// Fits `net0` to `data`, then shifts the output bias so that the origin maps to 0.
pub fn train(net0: &ReluNetwork, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    let (n, m) = (net0.input_dim(), net0.output_dim());
    if data.states.iter().any(|x| x.len() != n) || data.targets.iter().any(|y| y.len() != m) {
        return Err(Error::Dimension(format!("dataset does not match a {n} → {m} network")));
    }
    if data.is_empty() {
        return Err(Error::Invalid("empty dataset".into()));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Invalid("learning rate must be positive".into()));
    }
    let zero = DVector::zeros(m);
    let mut net = net0.clone();
    let mut history = vec![mse(&net, data)];
    let mut mom = Moments { m: zero_gradient(&net), v: zero_gradient(&net), t: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = cfg.batch.unwrap_or(data.len()).clamp(1, data.len());
    for epoch in 0..cfg.epochs {
        let snapshot = net.clone();
        if cfg.batch.is_some() {
            order.shuffle(&mut rng);
        }
        for idx in order.chunks(batch) {
            let (_, grad) = loss_and_gradient(&net, data, idx, cfg.par);
            step(&mut net, &grad, cfg, &mut mom);
        }
        let loss = mse(&net, data);
        if !loss.is_finite() || !finite_net(&net) {
            return Err(Error::Diverged { epoch, last: Box::new(snapshot.normalize_zero(&zero)?) });
        }
        history.push(loss);
    }
    Ok(TrainReport { network: net.normalize_zero(&zero)?, loss_history: history })
}

/// Flattened parameter vector, layer by layer (`W` row-major, then `b`).
pub fn parameters(net: &ReluNetwork) -> Vec<f64> {
    let mut out = Vec::new();
    for l in net.layers() {
        out.extend(mat_to_rows(&l.weights).into_iter().flatten());
        out.extend(l.bias.iter());
    }
    out
}

/// Inverse of [`parameters`] for the widths of `like`.
pub fn with_parameters(like: &ReluNetwork, params: &[f64]) -> Result<ReluNetwork> {
    let mut k = 0;
    let mut layers = Vec::new();
    for l in like.layers() {
        let (r, c) = l.weights.shape();
        if params.len() < k + r * c + r {
            return Err(Error::Dimension("parameter vector too short".into()));
        }
        let rows: Vec<Vec<f64>> = (0..r).map(|i| params[k + i * c..k + (i + 1) * c].to_vec()).collect();
        k += r * c;
        let bias = DVector::from_column_slice(&params[k..k + r]);
        k += r;
        layers.push(Layer { weights: rows_to_mat(&rows, c, "W")?, bias });
    }
    if k != params.len() {
        return Err(Error::Dimension("parameter vector too long".into()));
    }
    ReluNetwork::new(layers)
}

/// [`Gradient`] flattened in the order of [`parameters`].
pub fn flatten_gradient(grad: &Gradient) -> Vec<f64> {
    let mut out = Vec::new();
    for (w, b) in grad {
        out.extend(mat_to_rows(w).into_iter().flatten());
        out.extend(b.iter());
    }
    out
}
