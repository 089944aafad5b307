use nalgebra::{DMatrix, DVector};
use polycert::complexity::{
    check_widths, consistent_variation_check, intersection_order, min_uniform_width, region_capacity, ComplexityQuery,
    ViolationKind,
};
use polycert::controllers::{MinimalSelectionLaw, Partition, Region, SimplexGainLaw, VertexInterpLaw};
use polycert::geometry::polygon_vertices;
use polycert::instances::planar_pair;
use polycert::system::InvariantSetSpec;
use polycert::Polytope;
use proptest::prelude::*;

/// Literature examples: (label, N^r, N̄, widths).
const TABLE: [(&str, u64, usize, [usize; 2]); 10] = [
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

/// Direct search of the counting inequality with floating point powers.
fn oracle_width(nr: u64, n: usize, m: usize, k: usize) -> usize {
    let binom = |m: usize, i: usize| -> f64 {
        if i > m {
            return 0.0;
        }
        (0..i).fold(1.0, |acc, j| acc * (m - j) as f64 / (j + 1) as f64)
    };
    let sum: f64 = (0..=n).map(|i| binom(m, i)).sum();
    (n..).find(|&w| ((w / n) as f64).powi((n * k) as i32) * sum >= nr as f64).unwrap()
}

#[test]
fn literature_width_table() {
    for (label, nr, width, widths) in TABLE {
        let q = ComplexityQuery::new(nr, 2, 1).with_depth(2);
        let b = min_uniform_width(&q).unwrap();
        assert_eq!((b.width, b.depth), (width, 2), "row {label}");
        assert!(check_widths(&q, &widths).unwrap(), "row {label}");
    }
}

#[test]
fn width_checks() {
    let a = ComplexityQuery::new(14, 2, 1);
    let c = ComplexityQuery::new(48, 2, 1);
    assert!(check_widths(&a, &[6, 2]).unwrap());
    assert!(check_widths(&c, &[6, 4]).unwrap());
    assert!(!check_widths(&a, &[2, 2]).unwrap());
    assert_eq!(region_capacity(2, 1, &[6, 2]), 18);
}

fn v(x: &[f64]) -> DVector<f64> {
    DVector::from_vec(x.to_vec())
}

fn region(a: DMatrix<f64>, b: DVector<f64>, gain: &[f64], offset: f64) -> Region {
    let vertices = polygon_vertices(&a, &b);
    Region {
        sector: 0,
        active: vec![],
        gain: DMatrix::from_row_slice(1, 2, gain),
        offset: DVector::from_element(1, offset),
        f: a,
        rhs: b,
        vertices,
    }
}

fn half_box(sign: f64) -> (DMatrix<f64>, DVector<f64>) {
    let a = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0, -sign, 0.0]);
    (a, v(&[1.0, 1.0, 1.0, 1.0, 0.0]))
}

#[test]
fn linear_law_is_consistent() {
    let (a, b) = (DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]), v(&[1.0; 4]));
    let p = Partition { regions: vec![region(a, b, &[0.3, -0.7], 0.0)] };
    assert!(consistent_variation_check(&p).unwrap().holds);
    assert_eq!(intersection_order(&p, &Polytope::unit_box(2)).unwrap(), 0);
}

#[test]
fn rank_one_split_is_consistent() {
    // G′ = G + γ αᵀ across x₁ = 0 with γ = 1.5, α = e₁
    let (g, gamma) = ([0.4, -0.2], 1.5);
    let (a0, b0) = half_box(-1.0);
    let (a1, b1) = half_box(1.0);
    let p = Partition {
        regions: vec![region(a0, b0, &g, 0.0), region(a1, b1, &[g[0] + gamma, g[1]], 0.0)],
    };
    let rep = consistent_variation_check(&p).unwrap();
    assert!(rep.holds, "{rep:?}");
    assert_eq!(intersection_order(&p, &Polytope::unit_box(2)).unwrap(), 1);
}

#[test]
fn full_lines_crossing_are_consistent() {
    // |x₁| + |x₂|: two boundaries crossing the whole set
    let quad = |sx: f64, sy: f64| {
        let a = DMatrix::from_row_slice(4, 2, &[sx, 0.0, 0.0, sy, -sx, 0.0, 0.0, -sy]);
        region(a, v(&[1.0, 1.0, 0.0, 0.0]), &[sx, sy], 0.0)
    };
    let p = Partition { regions: vec![quad(1.0, 1.0), quad(-1.0, 1.0), quad(-1.0, -1.0), quad(1.0, -1.0)] };
    assert!(consistent_variation_check(&p).unwrap().holds);
    assert_eq!(intersection_order(&p, &Polytope::unit_box(2)).unwrap(), 2);
}

#[test]
fn three_ray_fan_violates() {
    // three sectors meeting at the origin; each boundary stops there
    let rays: Vec<DVector<f64>> = (0..3)
        .map(|k| {
            let t = std::f64::consts::FRAC_PI_2 + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
            v(&[t.cos(), t.sin()])
        })
        .collect();
    let mut regions = Vec::new();
    for k in 0..3 {
        let (p, q) = (&rays[k], &rays[(k + 1) % 3]);
        // cone between consecutive rays, capped by the chord
        let left = v(&[-p[1], p[0]]);
        let right = v(&[q[1], -q[0]]);
        let chord = (p + q) / 2.0;
        let a = DMatrix::from_row_slice(3, 2, &[-left[0], -left[1], -right[0], -right[1], chord[0], chord[1]]);
        let b = v(&[0.0, 0.0, chord.dot(&chord) * 2.0]);
        regions.push(region(a, b, &[0.0, 0.0], 0.0));
    }
    // continuous: each cone interpolates the values prescribed on its two rays
    let vals = [1.0, 0.2, -0.5];
    for k in 0..3 {
        let (r, s) = (&rays[k], &rays[(k + 1) % 3]);
        let m = DMatrix::from_row_slice(2, 2, &[r[0], r[1], s[0], s[1]]);
        let g = m.lu().solve(&v(&[vals[k], vals[(k + 1) % 3]])).unwrap();
        regions[k].gain = DMatrix::from_row_slice(1, 2, &[g[0], g[1]]);
    }
    let p = Partition { regions };
    let rep = consistent_variation_check(&p).unwrap();
    assert!(!rep.holds);
    assert_eq!(rep.violation.unwrap().kind, ViolationKind::Interrupted);
}

#[test]
fn desk_minimal_selection_violates() {
    let (sys, spec) = planar_pair().unwrap();
    let law = MinimalSelectionLaw::new(&sys, &spec, DMatrix::identity(1, 1), DMatrix::zeros(2, 1)).unwrap();
    let part = law.partition().unwrap();
    let rep = consistent_variation_check(&part).unwrap();
    assert!(!rep.holds, "{rep:?}");
    let q = ComplexityQuery::from_partition(&part, &spec.set, 1).unwrap();
    assert_eq!((q.regions, q.depth), (12, 2));
}

#[test]
fn desk_vertex_interpolation_is_linear() {
    // the desk vertex controls all lie on one linear map, so every piece shares its gain
    let (_, spec) = planar_pair().unwrap();
    let part = VertexInterpLaw::new(&spec).unwrap().partition().unwrap();
    let g0 = &part.regions[0].gain;
    assert!(part.regions.iter().all(|r| (&r.gain - g0).amax() < 1e-9));
    assert!(consistent_variation_check(&part).unwrap().holds);
    assert_eq!(intersection_order(&part, &spec.set).unwrap(), 0);
}

#[test]
fn odd_fan_violates() {
    // five rays meet at the origin and none continues through it
    let set = Polytope::regular_polygon(5).unwrap();
    let controls = (0..5).map(|k| v(&[0.3 + 0.1 * k as f64])).collect();
    let spec = InvariantSetSpec::new(set, 0.5, Polytope::centered_box(&[1.0]).unwrap(), controls).unwrap();
    let part = SimplexGainLaw::new(&spec).unwrap().partition().unwrap();
    let rep = consistent_variation_check(&part).unwrap();
    assert!(!rep.holds);
    assert_eq!(intersection_order(&part, &spec.set).unwrap(), 2);
}

#[test]
fn odd_symmetric_fan_is_consistent() {
    // on a centrally symmetric set with odd vertex controls the rays pair up into full lines
    let set = Polytope::regular_polygon(4).unwrap();
    let controls = vec![v(&[0.5]), v(&[-0.2]), v(&[-0.5]), v(&[0.2])];
    let spec = InvariantSetSpec::new(set, 0.5, Polytope::centered_box(&[1.0]).unwrap(), controls).unwrap();
    let part = SimplexGainLaw::new(&spec).unwrap().partition().unwrap();
    assert!(consistent_variation_check(&part).unwrap().holds);
}

proptest! {
    #[test]
    fn width_matches_oracle(nr in 1u64..5000, n in 1usize..4, m in 1usize..4, k in 1usize..4) {
        let q = ComplexityQuery::new(nr, n, m).with_depth(k);
        prop_assert_eq!(min_uniform_width(&q).unwrap().width, oracle_width(nr, n, m, k));
    }

    #[test]
    fn width_monotone(nr in 1u64..5000, extra in 0u64..500, n in 1usize..4, m in 1usize..4, k in 1usize..4) {
        let w = |nr, m| min_uniform_width(&ComplexityQuery::new(nr, n, m).with_depth(k)).unwrap().width;
        prop_assert!(w(nr, m) <= w(nr + extra, m));
        prop_assert!(w(nr, m + 1) <= w(nr, m));
        prop_assert!(w(nr, m) >= n);
    }

    #[test]
    fn uniform_check_agrees(nr in 1u64..5000, n in 1usize..4, m in 1usize..4, k in 1usize..4, width in 1usize..40) {
        let q = ComplexityQuery::new(nr, n, m).with_depth(k);
        let min = min_uniform_width(&q).unwrap().width;
        prop_assume!(width >= n);
        prop_assert_eq!(check_widths(&q, &vec![width; k]).unwrap(), width >= min);
    }
}
