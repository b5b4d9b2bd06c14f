#![allow(clippy::excessive_precision)]

use proptest::prelude::*;
use pushtasep::fredholm::{gap_probability, height_tail, height_tails, GapQuery};
use pushtasep::kernel::QuadratureSpec;
use pushtasep::oracle::{ctmc_height_dist, ctmc_path_dist, schur_process_joint_heights};
use pushtasep::profile::DiscreteRates;
use pushtasep::sim::DownRightPath;

fn joint_tail(joint: &[(Vec<usize>, f64)], ys: &[i64]) -> f64 {
    joint
        .iter()
        .filter(|(h, _)| h.iter().zip(ys).all(|(&h, &y)| h as i64 > y))
        .map(|p| p.1)
        .sum()
}

#[test]
fn multipoint_matches_chain() {
    let rates = DiscreteRates::explicit(vec![1.0, 0.5, 2.0, 1.5, 0.8]).unwrap();
    let quad = QuadratureSpec::default();
    let paths = [
        vec![(0.4, 5), (0.9, 3), (1.3, 1)],
        vec![(0.7, 5), (0.7, 2)],
        vec![(0.2, 4), (0.6, 4), (1.0, 2)],
    ];
    for pts in paths {
        let path = DownRightPath::new(pts.clone()).unwrap();
        let joint = ctmc_path_dist(&rates, &path).unwrap();
        let ns: Vec<i64> = pts.iter().map(|p| p.1 as i64).collect();
        let mut thresholds = vec![vec![-1; ns.len()]];
        thresholds.push(ns.iter().map(|n| n - 2).collect());
        thresholds.push(ns.iter().map(|n| n / 2).collect());
        thresholds.push(ns.iter().enumerate().map(|(i, n)| if i % 2 == 0 { n - 1 } else { 0 }).collect());
        for ys in thresholds {
            let q = GapQuery::new(path.clone(), ys.clone()).unwrap();
            let f = gap_probability(&q, &rates, &quad).unwrap().probability;
            let exact = joint_tail(&joint, &ys);
            assert!((f - exact).abs() < 1e-9, "{pts:?} {ys:?}: {f} vs {exact}");
        }
    }
}

#[test]
fn thirty_sites_against_high_precision_values() {
    // reference values from 250-digit evaluation of the exact finite-sum
    // form of the kernel
    let mut xi = vec![1.0; 14];
    xi.extend(vec![5.0; 16]);
    let rates = DiscreteRates::explicit(xi).unwrap();
    let quad = QuadratureSpec::default();
    let reference = [
        0.98653056797338147,
        0.87351128238704743,
        0.55579972945703642,
        0.19498554076187283,
        0.029934145243038871,
        0.0016517613573039411,
    ];
    for (y, r) in reference.iter().enumerate() {
        let f = height_tail(&rates, 10.0, 30, y as i64, &quad).unwrap();
        assert!((f - r).abs() < 1e-10, "y={y}: {f} vs {r}");
    }
}

#[test]
fn explicit_floor_gives_same_value() {
    let rates = DiscreteRates::explicit(vec![1.0, 2.0, 3.0]).unwrap();
    let quad = QuadratureSpec::default();
    let path = DownRightPath::new(vec![(0.5, 3), (1.0, 2)]).unwrap();
    let q = GapQuery::new(path, vec![1, 0]).unwrap();
    let a = gap_probability(&q, &rates, &quad).unwrap().probability;
    let b = gap_probability(&q.with_floor(-9).unwrap(), &rates, &quad).unwrap().probability;
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn three_sites_against_chain() {
    let xi = [1.0, 0.5, 2.0];
    let rates = DiscreteRates::explicit(xi.to_vec()).unwrap();
    let d = ctmc_height_dist(&xi, 0.7).unwrap();
    let f = height_tail(&rates, 0.7, 3, 1, &QuadratureSpec::default()).unwrap();
    assert!((f - d.tail_gt(1)).abs() < 1e-6);
}

#[test]
fn two_sites_closed_form() {
    let rates = DiscreteRates::explicit(vec![1.0, 1.0]).unwrap();
    let f = height_tail(&rates, 0.3, 2, 1, &QuadratureSpec::default()).unwrap();
    assert!((f - (-0.6f64).exp()).abs() < 1e-10);
}

#[test]
fn two_point_path_against_schur_process() {
    let rates = DiscreteRates::explicit(vec![1.0, 2.0]).unwrap();
    let quad = QuadratureSpec::default();
    let path = DownRightPath::new(vec![(0.2, 2), (0.2, 1)]).unwrap();
    let (joint, tail) = schur_process_joint_heights(&rates, &path, 14).unwrap();
    assert!(tail < 1e-6);
    for ys in [[0, 0], [1, 0], [0, -1], [-1, -1]] {
        let q = GapQuery::new(path.clone(), ys.to_vec()).unwrap();
        let f = gap_probability(&q, &rates, &quad).unwrap().probability;
        let exact = joint_tail(&joint, &ys);
        assert!((f - exact).abs() < 1e-5 + tail, "{ys:?}: {f} vs {exact}");
    }
}

#[test]
fn single_block_path_is_single_point() {
    let rates = DiscreteRates::explicit(vec![1.0, 3.0, 0.5, 2.0]).unwrap();
    let quad = QuadratureSpec::default();
    let q = GapQuery::new(DownRightPath::single(0.9, 4).unwrap(), vec![2]).unwrap();
    let a = gap_probability(&q, &rates, &quad).unwrap().probability;
    assert_eq!(a, height_tail(&rates, 0.9, 4, 2, &quad).unwrap());
    let q = GapQuery::new(DownRightPath::new(vec![(0.5, 4), (0.9, 2)]).unwrap(), vec![-5, -3]).unwrap();
    assert_eq!(gap_probability(&q, &rates, &quad).unwrap().probability, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tail_is_monotone_probability(
        xi in prop::collection::vec(0.3f64..4.0, 1..6),
        t in 0.05f64..2.0,
    ) {
        let n = xi.len();
        let rates = DiscreteRates::explicit(xi).unwrap();
        let tails = height_tails(&rates, t, n, &QuadratureSpec::default()).unwrap();
        for w in tails.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-8);
        }
        for p in tails {
            prop_assert!((-1e-8..=1.0 + 1e-8).contains(&p));
        }
    }
}
