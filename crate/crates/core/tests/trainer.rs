use nalgebra::{DMatrix, DVector};
use polycert::instances::planar_pair;
use polycert::relu::ReluNetwork;
use polycert::trainer::{
    flatten_gradient, loss_and_gradient, mse, parameters, sample_dataset, train, with_parameters, Dataset, Optimizer,
    SamplingScheme, TrainConfig,
};
use polycert::{Error, Parallelism, Polytope};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn desk_set() -> Polytope {
    planar_pair().unwrap().1.set
}

fn linear_target(x: &DVector<f64>) -> polycert::Result<DVector<f64>> {
    Ok(DVector::from_element(1, -0.8 * x[0] + 0.3 * x[1]))
}

fn glorot(dims: &[usize], seed: u64) -> ReluNetwork {
    ReluNetwork::glorot(dims, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

/// Random weights and biases so that no hidden unit starts dead.
fn random_net(dims: &[usize], seed: u64) -> ReluNetwork {
    let net = glorot(dims, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
    let params: Vec<f64> = parameters(&net).iter().map(|p| p + rng.random_range(-0.3..0.3)).collect();
    with_parameters(&net, &params).unwrap()
}

#[test]
fn single_sample_is_reproducible() {
    let set = desk_set();
    for scheme in [SamplingScheme::UniformRejection, SamplingScheme::BoundaryEnriched] {
        let a = sample_dataset(&set, linear_target, 1, scheme, 42).unwrap();
        let b = sample_dataset(&set, linear_target, 1, scheme, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
        assert_eq!(a.targets[0], linear_target(&a.states[0]).unwrap());
    }
    assert!(sample_dataset(&set, linear_target, 0, SamplingScheme::UniformRejection, 0).is_err());
}

#[test]
fn samples_stay_in_the_set() {
    let set = desk_set();
    for scheme in [SamplingScheme::UniformRejection, SamplingScheme::BoundaryEnriched] {
        let d = sample_dataset(&set, linear_target, 5000, scheme, 3).unwrap();
        assert!(d.states.iter().all(|x| set.gauge(x).unwrap() <= 1.0 + 1e-9));
    }
}

#[test]
fn boundary_enrichment_fraction() {
    let set = desk_set();
    let count = 4000;
    let d = sample_dataset(&set, linear_target, count, SamplingScheme::BoundaryEnriched, 5).unwrap();
    let outer = d.states.iter().filter(|x| set.gauge(x).unwrap() >= 0.8).count();
    assert!(outer as f64 >= 0.45 * count as f64);
    // uniform sampling puts 36% of the area of a planar set beyond gauge 0.8
    let u = sample_dataset(&set, linear_target, count, SamplingScheme::UniformRejection, 5).unwrap();
    let outer = u.states.iter().filter(|x| set.gauge(x).unwrap() >= 0.8).count() as f64 / count as f64;
    assert!((outer - 0.36).abs() < 0.03);
}

#[test]
fn target_failures_name_the_state() {
    let set = desk_set();
    let err = sample_dataset(&set, |_| Err(Error::Invalid("boom".into())), 3, SamplingScheme::UniformRejection, 0).unwrap_err();
    assert!(err.to_string().contains("boom"));
}

fn finite_difference(net: &ReluNetwork, data: &Dataset, h: f64) -> Vec<f64> {
    let idx: Vec<usize> = (0..data.len()).collect();
    let p = parameters(net);
    (0..p.len())
        .map(|k| {
            let mut up = p.clone();
            let mut dn = p.clone();
            up[k] += h;
            dn[k] -= h;
            let lu = loss_and_gradient(&with_parameters(net, &up).unwrap(), data, &idx, Parallelism::Sequential).0;
            let ld = loss_and_gradient(&with_parameters(net, &dn).unwrap(), data, &idx, Parallelism::Sequential).0;
            (lu - ld) / (2.0 * h)
        })
        .collect()
}

#[test]
fn gradient_matches_central_differences() {
    let set = desk_set();
    for seed in 0..4 {
        let net = random_net(&[2, 5, 4, 2], seed);
        let data = sample_dataset(
            &set,
            |x| Ok(DVector::from_vec(vec![x[0].sin(), x[0] * x[1]])),
            40,
            SamplingScheme::UniformRejection,
            seed,
        )
        .unwrap();
        let idx: Vec<usize> = (0..data.len()).collect();
        let g = flatten_gradient(&loss_and_gradient(&net, &data, &idx, Parallelism::Sequential).1);
        let fd = finite_difference(&net, &data, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(b.abs()).max(1e-3), "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn gradient_does_not_depend_on_threads() {
    let set = desk_set();
    let net = random_net(&[2, 8, 8, 1], 9);
    let data = sample_dataset(&set, linear_target, 1000, SamplingScheme::UniformRejection, 1).unwrap();
    let idx: Vec<usize> = (0..data.len()).collect();
    let (ls, gs) = loss_and_gradient(&net, &data, &idx, Parallelism::Sequential);
    let (lp, gp) = loss_and_gradient(&net, &data, &idx, Parallelism::Rayon);
    assert_eq!(ls.to_bits(), lp.to_bits());
    assert_eq!(gs, gp);
}

#[test]
fn zero_epochs_only_normalizes() {
    let set = desk_set();
    let net = random_net(&[2, 4, 1], 2);
    let data = sample_dataset(&set, linear_target, 10, SamplingScheme::UniformRejection, 0).unwrap();
    let cfg = TrainConfig { epochs: 0, ..Default::default() };
    let r = train(&net, &data, &cfg).unwrap();
    assert_eq!(r.network, net.normalize_zero(&DVector::zeros(1)).unwrap());
    assert_eq!(r.loss_history, vec![mse(&net, &data)]);
}

#[test]
fn linear_law_is_learned() {
    let set = desk_set();
    let data = sample_dataset(&set, linear_target, 400, SamplingScheme::UniformRejection, 11).unwrap();
    let net = glorot(&[2, 8, 1], 4);
    let cfg = TrainConfig { epochs: 10_000, learning_rate: 3e-2, batch: None, optimizer: Optimizer::adam(), seed: 0, par: Parallelism::Sequential };
    let r = train(&net, &data, &cfg).unwrap();
    let worst = data
        .states
        .iter()
        .zip(&data.targets)
        .map(|(x, y)| (r.network.forward(x).unwrap() - y).amax())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "{worst}");
    assert_eq!(r.network.forward(&DVector::zeros(2)).unwrap()[0], 0.0);
    assert_eq!(r.network.dims(), net.dims());
    assert_eq!(r.loss_history.len(), 10_001);
}

#[test]
fn full_batch_descent_is_monotone() {
    let set = desk_set();
    let data = sample_dataset(&set, linear_target, 200, SamplingScheme::BoundaryEnriched, 2).unwrap();
    let net = random_net(&[2, 6, 1], 6);
    let cfg = TrainConfig { epochs: 200, learning_rate: 1e-2, batch: None, optimizer: Optimizer::Sgd, seed: 0, par: Parallelism::Sequential };
    let r = train(&net, &data, &cfg).unwrap();
    assert!(r.loss_history.windows(2).all(|w| w[1] <= w[0]));
    assert!(r.loss_history.last().unwrap() < &r.loss_history[0]);
}

#[test]
fn divergence_keeps_the_last_finite_network() {
    let set = desk_set();
    let data = sample_dataset(&set, linear_target, 50, SamplingScheme::UniformRejection, 0).unwrap();
    let net = random_net(&[2, 6, 6, 1], 1);
    let cfg = TrainConfig { epochs: 500, learning_rate: 1e12, batch: None, optimizer: Optimizer::Sgd, seed: 0, par: Parallelism::Sequential };
    match train(&net, &data, &cfg) {
        Err(Error::Diverged { last, .. }) => {
            assert!(parameters(&last).iter().all(|p| p.is_finite()));
            assert_eq!(last.forward(&DVector::zeros(2)).unwrap()[0], 0.0);
        }
        other => panic!("expected divergence, got {:?}", other.map(|r| r.loss_history.len())),
    }
}

#[test]
fn training_checks_its_inputs() {
    let set = desk_set();
    let data = sample_dataset(&set, linear_target, 5, SamplingScheme::UniformRejection, 0).unwrap();
    assert!(train(&glorot(&[3, 4, 1], 0), &data, &TrainConfig::default()).is_err());
    assert!(train(&glorot(&[2, 4, 2], 0), &data, &TrainConfig::default()).is_err());
    assert!(train(&glorot(&[2, 4, 1], 0), &data, &TrainConfig { learning_rate: 0.0, ..Default::default() }).is_err());
}

#[test]
fn glorot_respects_fan_limits() {
    let net = glorot(&[2, 8, 8, 1], 3);
    for l in net.layers() {
        let (r, c) = l.weights.shape();
        let limit = (6.0 / (r + c) as f64).sqrt();
        assert!(l.weights.amax() <= limit);
        assert_eq!(l.bias, DVector::zeros(r));
    }
    assert_eq!(net, glorot(&[2, 8, 8, 1], 3));
    assert_ne!(net, glorot(&[2, 8, 8, 1], 4));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn trained_networks_vanish_at_origin(seed in 0u64..1000, batch in 1usize..40) {
        let set = desk_set();
        let data = sample_dataset(&set, |x| Ok(DVector::from_element(1, x[0].abs() - 0.5 * x[1])), 60, SamplingScheme::BoundaryEnriched, seed).unwrap();
        let net = glorot(&[2, 5, 3, 1], seed);
        let cfg = TrainConfig { epochs: 5, learning_rate: 1e-2, batch: Some(batch), optimizer: Optimizer::adam(), seed, par: Parallelism::Sequential };
        let r = train(&net, &data, &cfg).unwrap();
        prop_assert_eq!(r.network.forward(&DVector::zeros(2)).unwrap()[0], 0.0);
        prop_assert_eq!(r.network.dims(), net.dims());
    }

    #[test]
    fn parameter_round_trip(seed in 0u64..1000) {
        let net = random_net(&[2, 3, 4, 2], seed);
        prop_assert_eq!(with_parameters(&net, &parameters(&net)).unwrap(), net.clone());
        let p = parameters(&net);
        prop_assert!(with_parameters(&net, &p[1..]).is_err());
        let mut longer = p.clone();
        longer.push(0.0);
        prop_assert!(with_parameters(&net, &longer).is_err());
        let _ = DMatrix::<f64>::zeros(1, 1);
    }
}
