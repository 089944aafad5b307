//! Feed-forward ReLU networks: evaluation, interval bounds, big-M encoding and
//! the exact Jacobian-norm maximisation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::norm::{direction, maximize_norm};
use crate::certify::MilpBound;
use crate::opt::{solve_milp, Cmp, LinExpr, MilpConfig, Model, Sense, Solution, Var};
use crate::{Error, Norm, Polytope, Result};

/// Affine map `x ↦ W x + b`; every layer but the last is followed by a ReLU.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork {
    layers: Vec<Layer>,
}

impl ReluNetwork {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension("a network needs at least one layer".into()));
        }
        for (j, l) in layers.iter().enumerate() {
            if l.weights.nrows() != l.bias.len() {
                return Err(Error::Dimension(format!("layer {j}: {} rows but {} biases", l.weights.nrows(), l.bias.len())));
            }
            if j > 0 && layers[j - 1].weights.nrows() != l.weights.ncols() {
                return Err(Error::Dimension(format!("layer {j} does not chain")));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("layer {j} has a non-finite entry")));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-uniform weights and zero biases for the widths `dims = [n, n_1, …, m]`.
    pub fn glorot<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Dimension("need input and output widths".into()));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Layer {
                    weights: DMatrix::from_fn(w[1], w[0], |_, _| rng.random_range(-limit..=limit)),
                    bias: DVector::zeros(w[1]),
                }
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").weights.nrows()
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    /// Widths `[n, n_1, …, n_L, m]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.weights.nrows()));
        d
    }

    /// Hidden neurons plus outputs.
    pub fn neuron_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.nrows()).sum()
    }

    pub fn forward(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!("input of size {} for a network on {}", x.len(), self.input_dim())));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = x.clone();
        let last = self.layers.len() - 1;
        for (j, l) in self.layers.iter().enumerate() {
            y = &l.weights * y + &l.bias;
            if j < last {
                y.apply(|v| *v = v.max(0.0));
            }
        }
        y
    }

    /// Hidden pre-activations per layer.
    pub fn pre_activations(&self, x: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension("input size".into()));
        }
        let mut out = Vec::with_capacity(self.hidden_layers());
        let mut y = x.clone();
        for l in &self.layers[..self.hidden_layers()] {
            let z = &l.weights * y + &l.bias;
            y = z.map(|v| v.max(0.0));
            out.push(z);
        }
        Ok(out)
    }

    /// Jacobian at `x`, with the derivative of the ReLU at 0 taken as 0.
    pub fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let pre = self.pre_activations(x)?;
        let mut j = DMatrix::identity(self.input_dim(), self.input_dim());
        for (l, z) in self.layers.iter().zip(&pre) {
            j = &l.weights * j;
            for (r, &zr) in z.iter().enumerate() {
                if zr <= 0.0 {
                    j.row_mut(r).fill(0.0);
                }
            }
        }
        Ok(&self.layers.last().expect("non-empty").weights * j)
    }

    /// Shifts the output bias so that the network maps 0 to `target0`.
    pub fn normalize_zero(&self, target0: &DVector<f64>) -> Result<Self> {
        if target0.len() != self.output_dim() {
            return Err(Error::Dimension("target at the origin".into()));
        }
        let mut y = DVector::zeros(self.input_dim());
        for l in &self.layers[..self.hidden_layers()] {
            y = &l.weights * y + &l.bias;
            y.apply(|v| *v = v.max(0.0));
        }
        let mut out = self.clone();
        let last = out.layers.last_mut().expect("non-empty");
        // bias = target − W a(0), so the forward pass computes W a(0) + (target − W a(0)),
        // which is exactly zero for a zero target
        last.bias = target0 - &last.weights * y;
        Ok(out)
    }

    /// Interval propagation of the box `[lo, hi]` through the hidden layers.
    pub fn interval_bounds(&self, lo: &DVector<f64>, hi: &DVector<f64>) -> Result<ActivationBounds> {
        if lo.len() != self.input_dim() || hi.len() != self.input_dim() {
            return Err(Error::Dimension("box size".into()));
        }
        let mut cur = (lo.clone(), hi.clone());
        let mut pre = Vec::new();
        let mut output = Vec::new();
        let last = self.layers.len() - 1;
        for (j, l) in self.layers.iter().enumerate() {
            let w_pos = l.weights.map(|v| v.max(0.0));
            let w_neg = l.weights.map(|v| v.min(0.0));
            let zlo = &w_pos * &cur.0 + &w_neg * &cur.1 + &l.bias;
            let zhi = &w_pos * &cur.1 + &w_neg * &cur.0 + &l.bias;
            let pairs: Vec<(f64, f64)> = zlo.iter().zip(zhi.iter()).map(|(&a, &b)| (a, b)).collect();
            if j < last {
                cur = (zlo.map(|v| v.max(0.0)), zhi.map(|v| v.max(0.0)));
                pre.push(pairs);
            } else {
                output = pairs;
            }
        }
        Ok(ActivationBounds { pre, output })
    }

    /// Bounds over the bounding box of `set`.
    pub fn bounds_over(&self, set: &Polytope) -> Result<ActivationBounds> {
        let (lo, hi) = set.bounding_box()?;
        self.interval_bounds(&lo, &hi)
    }
}

/// Pre-activation intervals per hidden layer and for the output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationBounds {
    pub pre: Vec<Vec<(f64, f64)>>,
    pub output: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeuronState {
    Active,
    Inactive,
    Unstable,
}

/// Output of [`mi_encode`]: hidden post-activations, activation binaries and the
/// network output as linear expressions.
#[derive(Clone, Debug)]
pub struct NetworkEncoding {
    pub states: Vec<Vec<NeuronState>>,
    /// Activation binary of each unstable neuron.
    pub binaries: Vec<Vec<Option<Var>>>,
    pub post: Vec<Vec<LinExpr>>,
    pub output: Vec<LinExpr>,
}

/// Big-M encoding with one binary per unstable neuron; stable neurons are linearised.
pub fn mi_encode(model: &mut Model, net: &ReluNetwork, x: &[LinExpr], bounds: &ActivationBounds) -> Result<NetworkEncoding> {
    mi_encode_separated(model, net, x, bounds, 0.0)
}

/// [`mi_encode`] where an unstable neuron's binary also forces its
/// pre-activation at least `margin` away from the kink, on the side it selects.
/// Jacobian encodings need this: on the kink itself every binary is feasible,
/// including patterns that no open cell of the network realizes.
pub fn mi_encode_separated(
    model: &mut Model,
    net: &ReluNetwork,
    x: &[LinExpr],
    bounds: &ActivationBounds,
    margin: f64,
) -> Result<NetworkEncoding> {
    if x.len() != net.input_dim() {
        return Err(Error::Dimension("input expressions".into()));
    }
    if bounds.pre.len() != net.hidden_layers() {
        return Err(Error::Invalid("bounds do not match the network depth".into()));
    }
    let mut enc = NetworkEncoding { states: Vec::new(), binaries: Vec::new(), post: Vec::new(), output: Vec::new() };
    let mut cur: Vec<LinExpr> = x.to_vec();
    for (j, l) in net.layers.iter().enumerate() {
        let z: Vec<LinExpr> = (0..l.weights.nrows())
            .map(|r| {
                let mut e = LinExpr::combine(l.weights.row(r).iter().cloned(), &cur);
                e.constant += l.bias[r];
                e.compact()
            })
            .collect();
        if j == net.hidden_layers() {
            enc.output = z;
            break;
        }
        let bl = &bounds.pre[j];
        if bl.len() != z.len() {
            return Err(Error::Invalid(format!("bounds of layer {j} have the wrong width")));
        }
        let mut states = Vec::new();
        let mut bins = Vec::new();
        let mut post = Vec::new();
        for (k, zk) in z.into_iter().enumerate() {
            let (lo, hi) = bl[k];
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Invalid(format!("bounds of neuron ({j}, {k}) are invalid")));
            }
            if lo >= 0.0 {
                states.push(NeuronState::Active);
                bins.push(None);
                post.push(zk);
            } else if hi <= 0.0 {
                states.push(NeuronState::Inactive);
                bins.push(None);
                post.push(LinExpr::zero());
            } else {
                let a = model.binary(format!("act[{j},{k}]"));
                let zk_sep = zk.clone();
                let y = model.continuous(format!("relu[{j},{k}]"), 0.0, hi);
                let yl = LinExpr::from(y);
                model.ge(format!("relu[{j},{k}]:lin"), yl.clone() - zk.clone(), 0.0);
                // y ≤ z − lo(1 − a),  y ≤ hi·a
                model.le(format!("relu[{j},{k}]:on"), yl.clone() - zk + LinExpr::constant(lo) - LinExpr::term(a, lo), 0.0);
                model.le(format!("relu[{j},{k}]:off"), yl.clone() - LinExpr::term(a, hi), 0.0);
                if margin > 0.0 {
                    // a = 1 ⇒ z ≥ margin,  a = 0 ⇒ z ≤ −margin
                    let up = margin - lo;
                    let down = hi + margin;
                    model.ge(format!("relu[{j},{k}]:gap_on"), zk_sep.clone() - LinExpr::term(a, up), margin - up);
                    model.le(format!("relu[{j},{k}]:gap_off"), zk_sep - LinExpr::term(a, down), -margin);
                }
                model.big_m.push(crate::opt::BigM { label: format!("relu[{j},{k}]"), value: hi.max(-lo) });
                states.push(NeuronState::Unstable);
                bins.push(Some(a));
                post.push(yl);
            }
        }
        cur = post.clone();
        enc.states.push(states);
        enc.binaries.push(bins);
        enc.post.push(post);
    }
    Ok(enc)
}

/// `J(x) s` for the activation pattern fixed by the binaries of `enc`;
/// `s` ranges over `s_bounds`.
pub fn encode_jacobian_action(
    model: &mut Model,
    net: &ReluNetwork,
    enc: &NetworkEncoding,
    s: &[LinExpr],
    name: &str,
) -> Result<Vec<LinExpr>> {
    let mut cur: Vec<LinExpr> = s.to_vec();
    for (j, l) in net.layers.iter().enumerate() {
        let z: Vec<LinExpr> = (0..l.weights.nrows())
            .map(|r| LinExpr::combine(l.weights.row(r).iter().cloned(), &cur).compact())
            .collect();
        if j == net.hidden_layers() {
            return Ok(z);
        }
        let mut next = Vec::with_capacity(z.len());
        for (k, zk) in z.into_iter().enumerate() {
            next.push(match enc.states[j][k] {
                NeuronState::Active => zk,
                NeuronState::Inactive => LinExpr::zero(),
                NeuronState::Unstable => {
                    let a = enc.binaries[j][k].expect("binary of an unstable neuron");
                    model.product(&format!("{name}[{j},{k}]"), a, zk)?.into()
                }
            });
        }
        cur = next;
    }
    unreachable!("the last layer returns")
}

/// Adds `x ∈ X` as bounded continuous variables.
pub(crate) fn state_vars(model: &mut Model, set: &Polytope) -> Result<Vec<Var>> {
    let (lo, hi) = set.bounding_box()?;
    let n = set.dim();
    let x: Vec<Var> = (0..n).map(|k| model.continuous(format!("x[{k}]"), lo[k], hi[k])).collect();
    for j in 0..set.num_facets() {
        model.constrain(format!("domain[{j}]"), LinExpr::dot(set.f().row(j).iter().cloned(), &x), Cmp::Le, set.rhs()[j]);
    }
    Ok(x)
}

pub(crate) fn witness(sol: &Solution, x: &[Var]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().map(|&v| sol.value(v)))
}

/// Slab half-width around kinks used by the Jacobian encodings.
pub fn kink_margin(bounds: &ActivationBounds) -> f64 {
    let scale = bounds.pre.iter().flatten().map(|&(lo, hi)| lo.abs().max(hi.abs())).fold(0.0, f64::max);
    1e-7 * (1.0 + scale)
}

/// Whether an unstable neuron's pre-activation is within `1e-7` of zero at `x`.
pub fn at_breakpoint(net: &ReluNetwork, bounds: &ActivationBounds, x: &DVector<f64>) -> bool {
    let Ok(pre) = net.pre_activations(x) else { return false };
    pre.iter().zip(&bounds.pre).any(|(z, b)| z.iter().zip(b).any(|(&zk, &(lo, hi))| lo < 0.0 && hi > 0.0 && zk.abs() <= 1e-7))
}

/// Exact local Lipschitz constant `max_{x∈X} ‖J(x)‖_α` by MILP.
pub fn network_lipschitz_milp(net: &ReluNetwork, set: &Polytope, alpha: Norm, cfg: &MilpConfig) -> Result<MilpBound> {
    if set.dim() != net.input_dim() {
        return Err(Error::Dimension("domain and network input".into()));
    }
    let bounds = net.bounds_over(set)?;
    let mut model = Model::new();
    let x = state_vars(&mut model, set)?;
    let xe: Vec<LinExpr> = x.iter().map(|&v| v.into()).collect();
    let enc = mi_encode_separated(&mut model, net, &xe, &bounds, kink_margin(&bounds))?;
    let s = direction(&mut model, net.input_dim(), alpha)?;
    let js = encode_jacobian_action(&mut model, net, &enc, &s, "jac")?;
    let obj = maximize_norm(&mut model, &js, alpha, true, "jac_norm")?;
    model.set_objective(Sense::Maximize, obj);
    let sol = solve_milp(&model, cfg)?;
    let mut out = MilpBound::from_solution(&model, sol, &x)?;
    out.degenerate = at_breakpoint(net, &bounds, &out.witness_vector());
    Ok(out)
}
