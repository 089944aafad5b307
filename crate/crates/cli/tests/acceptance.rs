//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints exactly one PASS or FAIL line.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use polycert::certify::{certify, controller_lipschitz, encode_controller, max_error, CertifyOptions, Verdict};
use polycert::complexity::one_layer_replica;
use polycert::controllers::{MinimalSelectionLaw, PwaController, SimplexGainLaw, VertexInterpLaw};
use polycert::geometry::induced_norm;
use polycert::instances::planar_pair;
use polycert::io::{read_json, NetworkDoc};
use polycert::opt::{solve_milp, MilpConfig, Model, Sense, Status};
use polycert::par::Parallelism;
use polycert::relu::{network_lipschitz_milp, ReluNetwork};
use polycert::system::{
    simulate_batch, synthesize_vertex_controls, verify_invariance, DisturbancePolicy, InvariantSetSpec, PolytopicSystem,
};
use polycert::trainer::{sample_dataset, train, Optimizer, SamplingScheme, TrainConfig};
use polycert::{Norm, Polytope};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn desk(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems/planar_pair").join(file)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_in(set: &Polytope, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let (lo, hi) = set.bounding_box().unwrap();
    loop {
        let x = DVector::from_fn(lo.len(), |k, _| rng.random_range(lo[k]..hi[k]));
        if set.gauge(&x).unwrap() <= 1.0 {
            return x;
        }
    }
}

fn minimal_selection(sys: &PolytopicSystem, spec: &InvariantSetSpec) -> PwaController {
    let law = MinimalSelectionLaw::new(sys, spec, DMatrix::identity(1, 1), DMatrix::zeros(2, 1)).unwrap();
    PwaController::MinimalSelection(law)
}

/// Double integrator with an uncertain sampling time on a parallelogram.
fn double_integrator() -> (PolytopicSystem, InvariantSetSpec) {
    let gen = |t: f64| (DMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]), DMatrix::from_row_slice(2, 1, &[t * t / 2.0, t]));
    let (a0, b0) = gen(0.8);
    let (a1, b1) = gen(1.0);
    let sys = PolytopicSystem::new(vec![a0, a1], vec![b0, b1]).unwrap();
    let set = Polytope::from_gauge(DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 0.0, 1.0, -1.0, -1.0, 0.0, -1.0]))
        .unwrap()
        .with_vertices()
        .unwrap();
    let inputs = Polytope::centered_box(&[1.0]).unwrap();
    let controls = synthesize_vertex_controls(&sys, &set, 0.7, &inputs).unwrap().controls;
    let spec = InvariantSetSpec::new(set, 0.7, inputs, controls).unwrap();
    (sys, spec)
}

/// Trained 2-8-8-1 approximation of the desk minimal-selection law.
fn trained_network(ctrl: &PwaController) -> ReluNetwork {
    let data = sample_dataset(ctrl.set(), |x| ctrl.eval(x), 2000, SamplingScheme::BoundaryEnriched, 7).unwrap();
    let init = ReluNetwork::glorot(&[2, 8, 8, 1], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let cfg = TrainConfig {
        epochs: 400,
        learning_rate: 3e-3,
        batch: Some(64),
        optimizer: Optimizer::adam(),
        seed: 7,
        par: Parallelism::Rayon,
    };
    train(&init, &data, &cfg).unwrap().network
}

type Polygon = Vec<[f64; 2]>;

/// Part of a convex polygon where `a·x + c ≤ 0`.
fn clip(poly: &Polygon, a: [f64; 2], c: f64) -> Polygon {
    let side = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] + c;
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn area(poly: &Polygon) -> f64 {
    (0..poly.len())
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            p[0] * q[1] - p[1] * q[0]
        })
        .sum::<f64>()
        / 2.0
}

fn inside(poly: &Polygon, x: &DVector<f64>) -> bool {
    (0..poly.len()).all(|i| {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]) >= 0.0
    })
}

/// Polygon on which a planar network is affine: `y = gain·x + offset`.
struct Piece {
    poly: Polygon,
    gain: DMatrix<f64>,
    offset: DVector<f64>,
}

/// Exact linear regions of a network with two inputs over a convex polygon,
/// found by splitting along every neuron in turn.
fn linear_pieces(net: &ReluNetwork, domain: Polygon) -> Vec<Piece> {
    let layers = net.layers();
    let mut pieces = vec![Piece { poly: domain, gain: DMatrix::identity(2, 2), offset: DVector::zeros(2) }];
    for layer in &layers[..layers.len() - 1] {
        let mut next = Vec::new();
        for piece in pieces {
            let zg = &layer.weights * &piece.gain;
            let zc = &layer.weights * &piece.offset + &layer.bias;
            let mut parts = vec![(piece.poly, vec![false; zc.len()])];
            for k in 0..zc.len() {
                let row = [zg[(k, 0)], zg[(k, 1)]];
                let mut split = Vec::new();
                for (poly, mask) in parts {
                    let on = clip(&poly, [-row[0], -row[1]], -zc[k]);
                    if area(&on) > 1e-14 {
                        let mut m = mask.clone();
                        m[k] = true;
                        split.push((on, m));
                    }
                    let off = clip(&poly, row, zc[k]);
                    if area(&off) > 1e-14 {
                        split.push((off, mask));
                    }
                }
                parts = split;
            }
            for (poly, mask) in parts {
                let d = DMatrix::from_diagonal(&DVector::from_iterator(mask.len(), mask.iter().map(|&a| f64::from(u8::from(a)))));
                next.push(Piece { poly, gain: &d * &zg, offset: &d * &zc });
            }
        }
        pieces = next;
    }
    let last = layers.last().unwrap();
    for p in &mut pieces {
        p.offset = &last.weights * &p.offset + &last.bias;
        p.gain = &last.weights * &p.gain;
    }
    pieces
}

fn set_polygon(spec: &InvariantSetSpec) -> Polygon {
    let mut poly: Polygon = spec.vertices().iter().map(|v| [v[0], v[1]]).collect();
    if area(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}

fn gain_norm(g: &DMatrix<f64>, alpha: Norm) -> f64 {
    match alpha {
        Norm::One => g.row(0).amax(),
        _ => g.row(0).iter().map(|v| v.abs()).sum(),
    }
}

const TABLE: [(&str, usize, usize, [usize; 2]); 10] = [
    ("a", 14, 4, [6, 2]),
    ("f", 21, 4, [4, 4]),
    ("b", 12, 4, [6, 2]),
    ("g", 26, 4, [4, 4]),
    ("c", 48, 6, [6, 4]),
    ("h", 61, 6, [6, 4]),
    ("d", 24, 4, [4, 4]),
    ("i", 40, 6, [6, 4]),
    ("e", 38, 6, [6, 4]),
    ("j", 66, 6, [6, 4]),
];

fn table_rows() -> Outcome {
    let start = Instant::now();
    for (name, regions, want_width, widths) in TABLE {
        let w = format!("{},{}", widths[0], widths[1]);
        let out = Command::new(env!("CARGO_BIN_EXE_polycert"))
            .args(["complexity", &regions.to_string(), "2", "1", "2", "--widths", &w])
            .output()
            .map_err(|e| e.to_string())?;
        let text = String::from_utf8_lossy(&out.stdout);
        let row: Vec<&str> = text.lines().nth(1).unwrap_or("").split_whitespace().collect();
        let depth: usize = row.get(1).and_then(|s| s.parse().ok()).ok_or(format!("row ({name}): bad output {text:?}"))?;
        let width: usize = row.get(2).and_then(|s| s.parse().ok()).ok_or(format!("row ({name}): bad output {text:?}"))?;
        ensure((width, depth) == (want_width, 2), || format!("row ({name}): got ({width}, {depth})"))?;
        ensure(out.status.code() == Some(0) && row.last() == Some(&"PASS"), || format!("row ({name}): widths {w} rejected"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("took {secs:.2} s"))?;
    Ok(format!("10 rows exact, {secs:.2} s"))
}

fn fixed_state_encoding() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let instances = [("desk", planar_pair().unwrap()), ("double integrator", double_integrator())];
    for (name, (sys, spec)) in instances {
        let rep = verify_invariance(&sys, &spec).unwrap();
        ensure(rep.ok, || format!("{name}: set is not invariant"))?;
        ensure(spec.set.num_facets() <= 10 && (0.6..=0.95).contains(&spec.lambda), || format!("{name}: out of range"))?;
        let ctrl = minimal_selection(&sys, &spec);
        let regions = ctrl.partition().unwrap().regions.len();
        let facets = spec.set.num_facets();
        ensure(regions >= facets, || format!("{name}: {regions} regions < {facets} facets"))?;
        let set = spec.set.normalized();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let x = random_in(&set, &mut rng);
            let want = ctrl.eval(&x).unwrap()[0];
            for sense in [Sense::Minimize, Sense::Maximize] {
                let mut model = Model::new();
                let vars: Vec<_> = (0..2).map(|k| model.continuous(format!("x{k}"), -10.0, 10.0)).collect();
                let enc = encode_controller(&mut model, &ctrl, &vars, &set).unwrap();
                for k in 0..2 {
                    model.fix(vars[k], x[k]);
                }
                model.set_objective(sense, enc.output[0].clone());
                let sol = solve_milp(&model, &MilpConfig::default()).unwrap();
                ensure(sol.status == Status::Optimal, || format!("{name}: status {:?} at {x:?}", sol.status))?;
                let gap = (sol.objective - want).abs();
                ensure(gap <= 1e-6, || format!("{name}: {} vs {want} at {:?}", sol.objective, x.as_slice()))?;
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{checked} states on 2 systems, {secs:.1} s"))
}

fn exact_error(spec: &InvariantSetSpec, ctrl: &PwaController, net: &ReluNetwork) -> Outcome {
    let start = Instant::now();
    let set = ctrl.set().normalized();
    let bound = max_error(ctrl, net, &set, Norm::Inf, &MilpConfig::default()).map_err(|e| e.to_string())?;
    ensure(bound.is_optimal(), || format!("status {:?}", bound.status))?;
    let err = |x: &DVector<f64>| (net.forward(x).unwrap()[0] - ctrl.eval(x).unwrap()[0]).abs();
    let (lo, hi) = set.bounding_box().unwrap();
    let mut grid_max: f64 = 0.0;
    for i in 0..400 {
        for j in 0..400 {
            let x = DVector::from_vec(vec![
                lo[0] + (hi[0] - lo[0]) * i as f64 / 399.0,
                lo[1] + (hi[1] - lo[1]) * j as f64 / 399.0,
            ]);
            if set.gauge(&x).unwrap() <= 1.0 {
                grid_max = grid_max.max(err(&x));
            }
        }
    }
    // the error is affine on every intersection of a network piece with a
    // controller region, so its maximum sits at one of their vertices
    let regions = ctrl.partition().unwrap().regions;
    let mut exact: f64 = 0.0;
    for piece in linear_pieces(net, set_polygon(spec)) {
        for r in &regions {
            let mut poly = piece.poly.clone();
            for j in 0..r.f.nrows() {
                poly = clip(&poly, [r.f[(j, 0)], r.f[(j, 1)]], -r.rhs[j]);
            }
            for p in &poly {
                let x = DVector::from_vec(p.to_vec());
                let e = (&piece.gain * &x + &piece.offset - r.eval(&x))[0].abs();
                exact = exact.max(e);
            }
        }
    }
    ensure(bound.witness.len() == 2, || "no witness".into())?;
    let w = bound.witness_vector();
    let direct = err(&w);
    let summary = format!(
        "milp {:.6}, piecewise vertices {exact:.6}, witness {direct:.6}, grid {grid_max:.6}",
        bound.value
    );
    ensure((bound.value - exact).abs() <= 1e-6, || format!("{summary}: milp misses the piecewise maximum"))?;
    ensure((direct - bound.value).abs() <= 1e-5, || format!("{summary}: witness does not attain the bound"))?;
    ensure(grid_max <= bound.value + 1e-9, || format!("{summary}: grid exceeds the bound"))?;
    ensure(bound.value - grid_max <= 1e-4, || format!("{summary}: grid falls short by {:.2e}", bound.value - grid_max))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 300.0, || format!("{summary}: took {secs:.1} s"))?;
    Ok(format!("{summary}, {secs:.1} s"))
}

fn exact_lipschitz(spec: &InvariantSetSpec, ctrl: &PwaController, net: &ReluNetwork) -> Outcome {
    let set = ctrl.set().normalized();
    let cfg = MilpConfig::default();
    let pieces = linear_pieces(net, set_polygon(spec));
    let mut notes = Vec::new();
    for alpha in [Norm::One, Norm::Inf] {
        let regions = ctrl.partition().unwrap().regions;
        let want = regions.iter().map(|r| induced_norm(&r.gain, alpha)).fold(0.0, f64::max);
        let got = controller_lipschitz(ctrl, &set, alpha, &cfg).map_err(|e| e.to_string())?;
        ensure((got.value - want).abs() <= 1e-6, || format!("controller {alpha:?}: {} vs regions {want}", got.value))?;

        let bound = network_lipschitz_milp(net, &set, alpha, &cfg).map_err(|e| e.to_string())?;
        ensure(bound.is_optimal(), || format!("network {alpha:?}: status {:?}", bound.status))?;
        let exact = pieces.iter().map(|p| gain_norm(&p.gain, alpha)).fold(0.0, f64::max);
        ensure((bound.value - exact).abs() <= 1e-6, || format!("network {alpha:?}: milp {} vs regions {exact}", bound.value))?;
        // pairs are spread evenly over the linear regions, since uniform
        // draws over the set rarely land in the small ones
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut sampled: f64 = 0.0;
        for k in 0..10_000 {
            let poly = &pieces[k % pieces.len()].poly;
            let w: Vec<f64> = poly.iter().map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let total: f64 = w.iter().sum();
            let x = DVector::from_fn(2, |i, _| poly.iter().zip(&w).map(|(p, wk)| p[i] * wk).sum::<f64>() / total);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let mut r = 1e-3;
            let mut y = &x + DVector::from_vec(vec![t.cos(), t.sin()]) * r;
            while !inside(poly, &y) && r > 1e-12 {
                r /= 2.0;
                y = &x + DVector::from_vec(vec![t.cos(), t.sin()]) * r;
            }
            let q = (net.forward(&x).unwrap() - net.forward(&y).unwrap())[0].abs() / alpha.of(&(&x - &y));
            sampled = sampled.max(q);
        }
        ensure(bound.value >= sampled - 1e-9, || format!("network {alpha:?}: milp {} below sample {sampled}", bound.value))?;
        ensure(bound.value < 1.1 * sampled, || format!("network {alpha:?}: milp {} vs sampled {sampled}", bound.value))?;
        notes.push(format!("{alpha:?}: controller {:.6}, network {:.4} (sampled {sampled:.4})", got.value, bound.value));
    }
    Ok(format!("{}; {} linear regions", notes.join("; "), pieces.len()))
}

fn closed_loop() -> Outcome {
    let (sys, spec) = planar_pair().unwrap();
    let set = spec.set.normalized();
    let controllers = [
        PwaController::SimplexGain(SimplexGainLaw::new(&spec).unwrap()),
        PwaController::VertexInterp(VertexInterpLaw::new(&spec).unwrap()),
    ];
    let opts = CertifyOptions::default();
    let mut passed = Vec::new();
    for ctrl in &controllers {
        let replica = one_layer_replica(&ctrl.partition().unwrap()).unwrap();
        let mut scaled = replica.clone();
        let last = scaled.layers_mut().last_mut().unwrap();
        last.weights *= 1.02;
        last.bias *= 1.02;
        for (label, net) in [("replica", replica), ("scaled replica", scaled)] {
            let cert = certify(&sys, &spec, ctrl, &net, &opts).map_err(|e| e.to_string())?;
            if cert.overall() != Verdict::Pass {
                continue;
            }
            let b = cert.b.ok_or("passing certificate without a level")?;
            let mut rng = ChaCha8Rng::seed_from_u64(31);
            let starts: Vec<_> = (0..50).map(|_| random_in(&set, &mut rng)).collect();
            let law = |x: &DVector<f64>| net.forward(x);
            let trajs = simulate_batch(&sys, &set, &law, &starts, 200, DisturbancePolicy::GreedyWorstCase, 31, Parallelism::Rayon)
                .map_err(|e| e.to_string())?;
            for (run, t) in trajs.iter().enumerate() {
                ensure(t.escaped_at.is_none(), || format!("{} {label}: run {run} left the set", ctrl.kind()))?;
                ensure(t.gauges.len() == 201, || format!("{} {label}: run {run} stopped early", ctrl.kind()))?;
                for (k, g) in t.gauges.iter().enumerate() {
                    let cap = (opts.rho.powi(k as i32) * t.gauges[0] + 1e-9).max(b);
                    ensure(*g <= cap, || format!("{} {label}: run {run} step {k}: {g} > {cap}", ctrl.kind()))?;
                }
            }
            passed.push(format!("{} {label}", ctrl.kind()));
        }
    }
    ensure(!passed.is_empty(), || "no network passed certification".into())?;

    let simplex = &controllers[0];
    let offset = read_json::<NetworkDoc>(&desk("offset.json")).unwrap().build().unwrap();
    let cert = certify(&sys, &spec, simplex, &offset, &opts).map_err(|e| e.to_string())?;
    ensure(cert.overall() == Verdict::Fail, || format!("offset network verdict {:?}", cert.overall()))?;
    ensure(cert.max_error_audit.witness.len() == 2, || "offset failure without a witness".into())?;
    let w = cert.max_error_audit.witness_vector();
    let direct = (offset.forward(&w).unwrap() - simplex.eval(&w).unwrap()).amax();
    ensure((direct - cert.max_error).abs() <= 1e-6, || format!("witness gives {direct}, reported {}", cert.max_error))?;
    Ok(format!("{} passed and held over 50×200 steps; offset fails with witness ({:.3}, {:.3})", passed.join(", "), w[0] + 0.0, w[1] + 0.0))
}

fn trivial_zeros() -> Outcome {
    let (sys, spec) = planar_pair().unwrap();
    let opts = |alpha| CertifyOptions { alpha, ..CertifyOptions::default() };
    let zero = DVector::zeros(2);
    let desk_ctrls = [
        PwaController::SimplexGain(SimplexGainLaw::new(&spec).unwrap()),
        PwaController::VertexInterp(VertexInterpLaw::new(&spec).unwrap()),
        minimal_selection(&sys, &spec),
    ];
    for ctrl in &desk_ctrls[..2] {
        let net = one_layer_replica(&ctrl.partition().unwrap()).unwrap();
        for alpha in [Norm::One, Norm::Inf] {
            let cert = certify(&sys, &spec, ctrl, &net, &opts(alpha)).map_err(|e| e.to_string())?;
            ensure(cert.max_error.abs() <= 1e-8, || format!("{} {alpha:?}: error {}", ctrl.kind(), cert.max_error))?;
            let lip = cert.error_lipschitz.ok_or("no error Lipschitz bound")?;
            ensure(lip.abs() <= 1e-8, || format!("{} {alpha:?}: error Lipschitz {lip}", ctrl.kind()))?;
        }
    }
    let (di_sys, di_spec) = double_integrator();
    let more = [
        PwaController::SimplexGain(SimplexGainLaw::new(&di_spec).unwrap()),
        PwaController::VertexInterp(VertexInterpLaw::new(&di_spec).unwrap()),
        minimal_selection(&di_sys, &di_spec),
    ];
    for ctrl in desk_ctrls.iter().chain(&more) {
        let u = ctrl.eval(&zero).unwrap();
        ensure(u.amax() <= 1e-12, || format!("{} maps 0 to {:?}", ctrl.kind(), u.as_slice()))?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let set = spec.set.normalized();
    ensure(set.gauge(&zero).unwrap() == 0.0, || "gauge of 0".into())?;
    for v in spec.vertices() {
        let g = set.gauge(v).unwrap();
        ensure((g - 1.0).abs() <= 1e-12, || format!("vertex gauge {g}"))?;
    }
    for _ in 0..1000 {
        let x = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
        let y = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
        let t = rng.random_range(0.0..4.0);
        let b = rng.random_range(0.05..2.0);
        let (gx, gy) = (set.gauge(&x).unwrap(), set.gauge(&y).unwrap());
        ensure((set.gauge(&(&x * t)).unwrap() - t * gx).abs() <= 1e-12 * (1.0 + t * gx), || "homogeneity".into())?;
        ensure(set.gauge(&(&x + &y)).unwrap() <= gx + gy + 1e-12, || "subadditivity".into())?;
        let scaled = set.scale_sublevel(b).unwrap().gauge(&x).unwrap();
        ensure((scaled - gx / b).abs() <= 1e-12 * (1.0 + gx / b), || "sublevel scaling".into())?;
        ensure(set.contains(&x, 1e-12) == (gx <= 1.0 + 1e-12), || "membership".into())?;
    }
    Ok("replica errors vanish, six controllers fix 0, gauge identities hold".into())
}

fn deterministic_certify() -> Outcome {
    let dir = std::env::temp_dir().join(format!("polycert-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("cert{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_polycert"))
            .args(["certify", desk("job_offset.json").to_str().unwrap(), "--threads", "1", "--seed", "5", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.code() == Some(1), || format!("exit {:?}", status.status.code()))?;
        outputs.push((std::fs::read(&out).map_err(|e| e.to_string())?, status.stdout));
    }
    std::fs::remove_dir_all(&dir).ok();
    ensure(!outputs[0].0.is_empty(), || "empty certificate".into())?;
    ensure(outputs[0] == outputs[1], || "certificates differ".into())?;
    Ok(format!("{} bytes identical", outputs[0].0.len()))
}

fn main() {
    let (sys, spec) = planar_pair().unwrap();
    let ctrl = minimal_selection(&sys, &spec);
    let net = trained_network(&ctrl);

    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("region-count table", Box::new(table_rows)),
        ("fixed-state encoding", Box::new(fixed_state_encoding)),
        ("exact worst-case error", Box::new({
            let (ctrl, net) = (ctrl.clone(), net.clone());
            let spec = spec.clone();
            move || exact_error(&spec, &ctrl, &net)
        })),
        ("exact Lipschitz constants", Box::new({
            move || exact_lipschitz(&spec, &ctrl, &net)
        })),
        ("closed-loop level bound", Box::new(closed_loop)),
        ("trivial zeros", Box::new(trivial_zeros)),
        ("deterministic certificates", Box::new(deterministic_certify)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.into_iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
