use nalgebra::{DMatrix, DVector};
use polycert::linalg::combinations;
use polycert::opt::lpfile::to_lp_string;
use polycert::opt::{solve_lp, solve_milp, solve_qp, Cmp, LinExpr, MilpConfig, Model, Sense, Status, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FREE: f64 = f64::INFINITY;

#[test]
fn lp_examples() {
    let mut m = Model::new();
    let x = m.continuous("x", -FREE, FREE);
    m.ge("lo", x.into(), 3.0);
    m.set_objective(Sense::Minimize, x.into());
    let s = solve_lp(&m).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - 3.0).abs() < 1e-12);

    let mut m = Model::new();
    let x = m.continuous("x", 0.0, 1.0);
    let y = m.continuous("y", 0.0, 1.0);
    m.set_objective(Sense::Maximize, LinExpr::from(x) + LinExpr::from(y));
    let s = solve_lp(&m).unwrap();
    assert!((s.objective - 2.0).abs() < 1e-12);
    assert!((s.value(x) - 1.0).abs() < 1e-12 && (s.value(y) - 1.0).abs() < 1e-12);
}

#[test]
fn lp_statuses() {
    let mut m = Model::new();
    let x = m.continuous("x", 0.0, FREE);
    m.set_objective(Sense::Maximize, x.into());
    assert_eq!(solve_lp(&m).unwrap().status, Status::Unbounded);

    let mut m = Model::new();
    let x = m.continuous("x", 0.0, 1.0);
    m.ge("far", x.into(), 2.0);
    m.set_objective(Sense::Minimize, x.into());
    assert_eq!(solve_lp(&m).unwrap().status, Status::Infeasible);

    let mut m = Model::new();
    let a = m.binary("a");
    m.set_objective(Sense::Minimize, a.into());
    assert!(solve_lp(&m).is_err());
}

#[test]
fn objective_constant_is_reported() {
    let mut m = Model::new();
    let x = m.continuous("x", 0.0, 1.0);
    m.set_objective(Sense::Maximize, LinExpr::from(x) + LinExpr::constant(2.5));
    assert!((solve_lp(&m).unwrap().objective - 3.5).abs() < 1e-12);
    let a = m.binary("a");
    m.set_objective(Sense::Minimize, LinExpr::term(a, -1.0) + LinExpr::constant(0.25));
    let s = solve_milp(&m, &MilpConfig::default()).unwrap();
    assert!((s.objective + 0.75).abs() < 1e-12);
    assert!((s.best_bound + 0.75).abs() < 1e-9);
}

/// Random bounded LP over `[-2, 2]ⁿ` with the origin feasible.
struct RandomLp {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
}

fn random_lp(n: usize, rows: usize, seed: u64) -> RandomLp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RandomLp {
        a: DMatrix::from_fn(rows, n, |_, _| rng.random_range(-1.0..1.0)),
        b: DVector::from_fn(rows, |_, _| rng.random_range(0.1..1.0)),
        c: DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
    }
}

fn build(lp: &RandomLp, sense: Sense) -> (Model, Vec<Var>) {
    let mut m = Model::new();
    let x: Vec<Var> = (0..lp.c.len()).map(|k| m.continuous(format!("x{k}"), -2.0, 2.0)).collect();
    for r in 0..lp.a.nrows() {
        m.le(format!("r{r}"), LinExpr::dot(lp.a.row(r).iter().cloned(), &x), lp.b[r]);
    }
    m.set_objective(sense, LinExpr::dot(lp.c.iter().cloned(), &x));
    (m, x)
}

/// Best objective over all vertices of `{a x ≤ b, -2 ≤ x ≤ 2}`.
fn vertex_oracle(lp: &RandomLp, maximize: bool) -> f64 {
    let n = lp.c.len();
    let mut rows = lp.a.clone().insert_rows(lp.a.nrows(), 2 * n, 0.0);
    let rhs = lp.b.clone().insert_rows(lp.b.len(), 2 * n, 2.0);
    for k in 0..n {
        rows[(lp.a.nrows() + 2 * k, k)] = 1.0;
        rows[(lp.a.nrows() + 2 * k + 1, k)] = -1.0;
    }
    let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
    for pick in combinations(rows.nrows(), n) {
        let sub = DMatrix::from_fn(n, n, |i, j| rows[(pick[i], j)]);
        let r = DVector::from_fn(n, |i, _| rhs[pick[i]]);
        let Some(x) = sub.lu().solve(&r) else { continue };
        if (&rows * &x - &rhs).max() > 1e-9 {
            continue;
        }
        let v = lp.c.dot(&x);
        best = if maximize { best.max(v) } else { best.min(v) };
    }
    best
}

#[test]
fn random_lps_match_vertex_enumeration() {
    for seed in 0..60 {
        let n = 2 + (seed as usize % 2);
        let lp = random_lp(n, 5, seed);
        for (sense, maximize) in [(Sense::Minimize, false), (Sense::Maximize, true)] {
            let s = solve_lp(&build(&lp, sense).0).unwrap();
            assert_eq!(s.status, Status::Optimal);
            assert!((s.objective - vertex_oracle(&lp, maximize)).abs() < 1e-9, "seed {seed}");
        }
    }
}

#[test]
fn lp_dual_certificate() {
    for seed in 100..140 {
        let lp = random_lp(3, 6, seed);
        for sense in [Sense::Minimize, Sense::Maximize] {
            let (m, _) = build(&lp, sense);
            let s = solve_lp(&m).unwrap();
            let y = DVector::from_vec(s.duals.clone());
            let rc = DVector::from_vec(s.reduced_costs.clone());
            let x = DVector::from_vec(s.values.clone());
            // stationarity c = Aᵀy + r
            assert!((&lp.c - lp.a.transpose() * &y - &rc).amax() < 1e-9, "seed {seed}");
            // dual objective from row and bound terms equals the primal one
            let dual = y.dot(&lp.b) + rc.dot(&x);
            assert!((dual - s.objective).abs() < 1e-7, "seed {seed}");
            for r in 0..lp.b.len() {
                let slack = lp.b[r] - (lp.a.row(r) * &x)[0];
                assert!(y[r].abs() * slack < 1e-9);
                match sense {
                    Sense::Minimize => assert!(y[r] <= 1e-12),
                    Sense::Maximize => assert!(y[r] >= -1e-12),
                }
            }
        }
    }
}

#[test]
fn qp_examples() {
    let h = DMatrix::identity(1, 1);
    let s = solve_qp(&h, &DVector::zeros(1), &DMatrix::from_element(1, 1, -1.0), &DVector::from_element(1, -1.0)).unwrap();
    assert!((s.x[0] - 1.0).abs() < 1e-12);
    assert!((s.multipliers[0] - 1.0).abs() < 1e-12);
    assert_eq!(s.active, vec![0]);

    let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let q = DVector::from_vec(vec![1.0, -1.0]);
    let s = solve_qp(&h, &q, &DMatrix::zeros(0, 2), &DVector::zeros(0)).unwrap();
    let want = -h.clone().lu().solve(&q).unwrap();
    assert!((s.x - want).amax() < 1e-12);

    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(solve_qp(&bad, &q, &DMatrix::zeros(0, 2), &DVector::zeros(0)).is_err());
    // x ≤ -1 and x ≥ 1
    let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
    assert!(solve_qp(&h.view((0, 0), (1, 1)).into(), &DVector::zeros(1), &g, &DVector::from_vec(vec![-1.0, -1.0])).is_err());
}

struct RandomQp {
    h: DMatrix<f64>,
    q: DVector<f64>,
    g: DMatrix<f64>,
    r: DVector<f64>,
}

fn random_qp(n: usize, m: usize, seed: u64) -> RandomQp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    RandomQp {
        h: &l * l.transpose() + DMatrix::identity(n, n) * 0.5,
        q: DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)),
        g: DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0)),
        r: DVector::from_fn(m, |_, _| rng.random_range(0.0..0.5)),
    }
}

/// Minimiser by trying every active set: solve the KKT equalities, keep the
/// primal and dual feasible one.
fn active_set_oracle(p: &RandomQp) -> DVector<f64> {
    let (n, m) = (p.h.nrows(), p.g.nrows());
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 0..=m.min(n) {
        for set in combinations(m, k) {
            let mut kkt = DMatrix::zeros(n + k, n + k);
            kkt.view_mut((0, 0), (n, n)).copy_from(&p.h);
            let mut rhs = DVector::zeros(n + k);
            rhs.rows_mut(0, n).copy_from(&(-&p.q));
            for (i, &row) in set.iter().enumerate() {
                for j in 0..n {
                    kkt[(j, n + i)] = p.g[(row, j)];
                    kkt[(n + i, j)] = p.g[(row, j)];
                }
                rhs[n + i] = p.r[row];
            }
            let Some(sol) = kkt.lu().solve(&rhs) else { continue };
            let x = sol.rows(0, n).into_owned();
            if (&p.g * &x - &p.r).max() > 1e-9 || sol.rows(n, k).iter().any(|&mu| mu < -1e-9) {
                continue;
            }
            let f = 0.5 * x.dot(&(&p.h * &x)) + p.q.dot(&x);
            if best.as_ref().is_none_or(|(b, _)| f < *b) {
                best = Some((f, x));
            }
        }
    }
    best.expect("origin is feasible").1
}

#[test]
fn random_qps_match_active_set_enumeration() {
    for seed in 0..80 {
        let p = random_qp(2 + seed as usize % 3, 5, seed);
        let s = solve_qp(&p.h, &p.q, &p.g, &p.r).unwrap();
        assert!((&s.x - active_set_oracle(&p)).amax() < 1e-8, "seed {seed}");
    }
}

#[test]
fn knapsack_matches_powerset() {
    let value = [6.0, 5.0, 8.0, 9.0, 6.0, 7.0, 3.0, 4.0];
    let weight = [2.0, 3.0, 6.0, 7.0, 5.0, 9.0, 4.0, 1.5];
    let cap = 18.0;
    let mut best = 0.0f64;
    for mask in 0u32..256 {
        let w: f64 = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| weight[i]).sum();
        if w <= cap {
            best = best.max((0..8).filter(|i| mask >> i & 1 == 1).map(|i| value[i]).sum());
        }
    }
    let mut m = Model::new();
    let pick: Vec<Var> = (0..8).map(|i| m.binary(format!("p{i}"))).collect();
    m.le("cap", LinExpr::dot(weight, &pick), cap);
    m.set_objective(Sense::Maximize, LinExpr::dot(value, &pick));
    let s = solve_milp(&m, &MilpConfig::default()).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - best).abs() < 1e-9);
    assert!(s.gap <= 1e-6);
    assert!(m.max_violation(&s.values) < 1e-9);
}

#[test]
fn two_binaries_with_a_shared_budget() {
    let mut m = Model::new();
    let a = m.binary("a");
    let b = m.binary("b");
    m.le("one", LinExpr::from(a) + LinExpr::from(b), 1.0);
    m.set_objective(Sense::Maximize, LinExpr::from(a) + LinExpr::from(b));
    let s = solve_milp(&m, &MilpConfig::default()).unwrap();
    assert!((s.objective - 1.0).abs() < 1e-12);
}

#[test]
fn totally_unimodular_root_needs_no_branching() {
    // 3×3 assignment
    let cost = [[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
    let mut m = Model::new();
    let x: Vec<Vec<Var>> = (0..3).map(|i| (0..3).map(|j| m.binary(format!("x{i}{j}"))).collect()).collect();
    for i in 0..3 {
        m.eq(format!("row{i}"), LinExpr::dot([1.0; 3], &x[i]), 1.0);
        let col: Vec<Var> = (0..3).map(|r| x[r][i]).collect();
        m.eq(format!("col{i}"), LinExpr::dot([1.0; 3], &col), 1.0);
    }
    let mut obj = LinExpr::zero();
    for i in 0..3 {
        obj += LinExpr::dot(cost[i], &x[i]);
    }
    m.set_objective(Sense::Minimize, obj);
    let s = solve_milp(&m, &MilpConfig::default()).unwrap();
    assert!((s.objective - 5.0).abs() < 1e-9);
    assert_eq!(s.nodes, 1);
}

#[test]
fn milp_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut m = Model::new();
    let bins: Vec<Var> = (0..10).map(|i| m.binary(format!("b{i}"))).collect();
    let y = m.continuous("y", -3.0, 3.0);
    for r in 0..6 {
        let mut e = LinExpr::dot((0..10).map(|_| rng.random_range(-1.0..1.0)), &bins);
        e.add_term(y, rng.random_range(-1.0..1.0));
        m.le(format!("r{r}"), e, rng.random_range(0.5..2.0));
    }
    let mut obj = LinExpr::dot((0..10).map(|_| rng.random_range(-1.0..1.0)), &bins);
    obj.add_term(y, 0.7);
    m.set_objective(Sense::Maximize, obj);
    let a = solve_milp(&m, &MilpConfig::default()).unwrap();
    let b = solve_milp(&m, &MilpConfig::default()).unwrap();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.nodes, b.nodes);
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn indicator_examples() {
    for (fixed, want) in [(1.0, 0.5), (0.0, 1.0)] {
        let mut m = Model::new();
        let z = m.continuous("z", 0.0, 1.0);
        let a = m.binary("a");
        m.implies("cap", a, true, z.into(), Cmp::Le, 0.5).unwrap();
        m.fix(a, fixed);
        m.set_objective(Sense::Maximize, z.into());
        let s = solve_milp(&m, &MilpConfig::default()).unwrap();
        assert!((s.objective - want).abs() < 1e-12);
    }
    // a = 1 with z forced above the cap is infeasible
    let mut m = Model::new();
    let z = m.continuous("z", 0.8, 1.0);
    let a = m.binary("a");
    m.implies("cap", a, true, z.into(), Cmp::Le, 0.5).unwrap();
    m.fix(a, 1.0);
    m.set_objective(Sense::Maximize, z.into());
    assert_eq!(solve_milp(&m, &MilpConfig::default()).unwrap().status, Status::Infeasible);
    assert!(m.big_m.iter().any(|b| b.label == "cap" && (b.value - 0.5).abs() < 1e-12));

    let mut m = Model::new();
    let z = m.continuous("z", 0.0, FREE);
    let a = m.binary("a");
    assert!(m.implies("cap", a, true, z.into(), Cmp::Le, 0.5).is_err());
}

#[test]
fn equality_indicator_on_zero() {
    let mut m = Model::new();
    let z = m.continuous("z", -2.0, 3.0);
    let a = m.binary("a");
    m.implies("pin", a, false, z.into(), Cmp::Eq, 1.0).unwrap();
    m.fix(a, 0.0);
    for sense in [Sense::Minimize, Sense::Maximize] {
        m.set_objective(sense, z.into());
        assert!((solve_milp(&m, &MilpConfig::default()).unwrap().objective - 1.0).abs() < 1e-12);
    }
}

#[test]
fn and_truth_table() {
    for (p, q) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        let mut m = Model::new();
        let a = m.binary("a");
        let b = m.binary("b");
        let out = m.binary("out");
        m.and("both", out, &[a, b]);
        m.fix(a, p);
        m.fix(b, q);
        for sense in [Sense::Minimize, Sense::Maximize] {
            m.set_objective(sense, out.into());
            let s = solve_milp(&m, &MilpConfig::default()).unwrap();
            assert_eq!(s.objective, p * q);
        }
    }
}

#[test]
fn lp_text_export() {
    let mut m = Model::new();
    let x = m.continuous("x", 0.0, 4.0);
    let a = m.binary("a");
    m.le("c", LinExpr::from(x) - LinExpr::term(a, 4.0), 0.0);
    m.set_objective(Sense::Maximize, x.into());
    let text = to_lp_string(&m);
    for part in ["Maximize", "Subject To", "Bounds", "Binaries", "End"] {
        assert!(text.contains(part), "{part}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qp_kkt_residuals(seed in 0u64..10_000) {
        let p = random_qp(3, 6, seed);
        let s = solve_qp(&p.h, &p.q, &p.g, &p.r).unwrap();
        let stat = &p.h * &s.x + &p.q + p.g.transpose() * &s.multipliers;
        prop_assert!(stat.amax() <= 1e-7);
        prop_assert!((&p.g * &s.x - &p.r).max() <= 1e-7);
        prop_assert!(s.multipliers.min() >= 0.0);
        for r in 0..p.r.len() {
            let slack = p.r[r] - (p.g.row(r) * &s.x)[0];
            prop_assert!((s.multipliers[r] * slack).abs() <= 1e-7);
        }
    }

    #[test]
    fn milp_incumbent_within_gap(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Model::new();
        let bins: Vec<Var> = (0..6).map(|i| m.binary(format!("b{i}"))).collect();
        let y = m.continuous("y", 0.0, 2.0);
        let mut e = LinExpr::dot((0..6).map(|_| rng.random_range(0.1..1.0)), &bins);
        e.add_term(y, 1.0);
        m.le("cap", e, 2.0);
        let mut obj = LinExpr::dot((0..6).map(|_| rng.random_range(0.0..1.0)), &bins);
        obj.add_term(y, 0.3);
        m.set_objective(Sense::Maximize, obj);
        let s = solve_milp(&m, &MilpConfig::default()).unwrap();
        prop_assert_eq!(s.status, Status::Optimal);
        prop_assert!((s.best_bound - s.objective).abs() <= 1e-6 * s.objective.abs().max(1.0));
        prop_assert!(m.max_violation(&s.values) <= 1e-7);
    }
}
