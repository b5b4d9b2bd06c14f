use num_complex::Complex64;
use proptest::prelude::*;
use pushtasep::asymptotics::{
    discrete_crit, hydro_residual, legendre_height, limit_quantities, rho_left, s_l_eval, solve_frak_z,
};
use pushtasep::profile::{DiscreteRates, SpeedProfile};

fn profiles() -> Vec<(&'static str, SpeedProfile)> {
    vec![
        ("homogeneous", SpeedProfile::constant(1.0).unwrap()),
        ("up", SpeedProfile::two_piece(1.0, 3.0, 5.0).unwrap()),
        ("down", SpeedProfile::two_piece(1.0, 3.0, 0.5).unwrap()),
    ]
}

#[test]
fn homogeneous_closed_forms() {
    let p = SpeedProfile::constant(1.0).unwrap();
    for eta in [1.5, 2.0, 4.0, 9.0] {
        let q = limit_quantities(&p, 1.0, eta).unwrap();
        let s: f64 = eta.sqrt();
        assert!((q.z - (1.0 - s)).abs() < 1e-10);
        assert!((q.h - (s - 1.0).powi(2)).abs() < 1e-10);
        assert!((q.rho - (1.0 - 1.0 / s)).abs() < 1e-10);
        let d = (eta * q.z * q.z / (1.0 - q.z).powi(3)).cbrt();
        assert!((q.d.unwrap() - d).abs() < 1e-10);
    }
}

#[test]
fn legendre_dual_on_grids() {
    for (name, p) in profiles() {
        for eta in [1.5, 2.5, 4.0, 6.0, 8.0] {
            let te = p.tau_e(eta).unwrap();
            for frac in [0.2, 0.45, 0.7, 0.9] {
                let tau = frac * te;
                let a = legendre_height(&p, tau, eta).unwrap();
                let b = limit_quantities(&p, tau, eta).unwrap().h;
                assert!((a - b).abs() < 1e-8, "{name} ({tau}, {eta}): {a} vs {b}");
            }
        }
    }
}

#[test]
fn root_approaches_zero_at_the_edge() {
    for (_, p) in profiles() {
        for eta in [2.0, 5.0] {
            let te = p.tau_e(eta).unwrap();
            let z = solve_frak_z(&p, 0.999 * te, eta).unwrap();
            assert!(z < 0.0 && z > -1e-3);
            let below = limit_quantities(&p, te * (1.0 - 1e-7), eta).unwrap().h;
            assert!(below.abs() < 1e-5);
            assert_eq!(limit_quantities(&p, te, eta).unwrap().h, 0.0);
        }
    }
}

#[test]
fn hydro_residual_is_second_order() {
    let steps = [1e-2, 5e-3, 2.5e-3];
    for (name, p) in profiles() {
        for (tau, eta) in [(1.0, 2.0), (1.5, 4.5), (2.0, 6.0)] {
            if tau >= p.tau_e(eta).unwrap() - 0.05 {
                continue;
            }
            let r: Vec<f64> = steps
                .iter()
                .map(|&s| hydro_residual(&p, tau, eta, s).unwrap())
                .map(|h| {
                    assert!(h.identity < 1e-9, "{name}: identity {}", h.identity);
                    h.pde.abs()
                })
                .collect();
            for w in r.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!(order > 1.8, "{name} ({tau}, {eta}): residuals {r:?}");
            }
        }
    }
}

#[test]
fn density_jumps_at_breakpoint_with_flux_continuous() {
    let p = SpeedProfile::two_piece(1.0, 3.0, 5.0).unwrap();
    let (tau, eta) = (1.0, 3.0);
    let q = limit_quantities(&p, tau, eta).unwrap();
    let left = rho_left(&p, tau, eta).unwrap();
    assert!(left > q.rho);
    let flux = |rho: f64, xi: f64| xi * rho / (1.0 - rho);
    assert!((flux(left, 1.0) - flux(q.rho, 5.0)).abs() < 1e-12);
}

#[test]
fn discrete_homogeneous_root() {
    let rates = DiscreteRates::explicit(vec![1.0; 40]).unwrap();
    for (t, n) in [(10.0, 40), (5.0, 20), (25.0, 30)] {
        let c = discrete_crit(&rates, t, n, None).unwrap();
        let z = 1.0 - (n as f64 / t).sqrt();
        assert!((c.z - z).abs() < 1e-12);
        assert_eq!(c.d.unwrap(), -c.z * c.c.unwrap());
    }
}

/// Central difference with step `e`, extrapolated over halvings of `e`.
fn richardson(f: impl Fn(f64) -> f64) -> f64 {
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut e = 0.1;
    for i in 0..5 {
        let mut row = vec![f(e)];
        for k in 1..=i {
            let p = 4f64.powi(k as i32);
            row.push((p * row[k - 1] - table[i - 1][k - 1]) / (p - 1.0));
        }
        table.push(row);
        e /= 2.0;
    }
    table[4][4]
}

#[test]
fn double_critical_point_of_s_l() {
    let rates = SpeedProfile::two_piece(1.0, 3.0, 5.0).unwrap().discretize(10.0, 40).unwrap();
    let (t, n) = (10.0, 40);
    let c = discrete_crit(&rates, t, n, None).unwrap();
    let s = |z: f64| s_l_eval(Complex64::new(z, 0.0), t, n, c.h, &rates).unwrap().re;
    let d1 = richardson(|e| (s(c.z + e) - s(c.z - e)) / (2.0 * e));
    let d2 = richardson(|e| (s(c.z + e) - 2.0 * s(c.z) + s(c.z - e)) / (e * e));
    assert!(d1.abs() < 1e-9, "{d1}");
    assert!(d2.abs() < 1e-9, "{d2}");
    let r = c.z.abs();
    let vals: Vec<f64> = (1..100)
        .map(|k| std::f64::consts::PI * k as f64 / 100.0)
        .map(|phi| {
            let z = Complex64::from_polar(r, std::f64::consts::PI - phi);
            s_l_eval(z, t, n, c.h, &rates).unwrap().re
        })
        .collect();
    let v0 = s(c.z);
    assert!(vals[0] <= v0 + 1e-12);
    for w in vals.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}

#[test]
fn riemann_sums_converge_at_rate_one_over_l() {
    let p = SpeedProfile::two_piece(1.0, 3.0, 5.0).unwrap();
    let (tau, eta) = (1.0, 4.0);
    let h = limit_quantities(&p, tau, eta).unwrap().h;
    let err: Vec<f64> = [100usize, 200, 400]
        .iter()
        .map(|&l| {
            let n = (eta * l as f64).floor() as usize;
            let rates = p.discretize(l as f64, n).unwrap();
            let c = discrete_crit(&rates, tau * l as f64, n, Some(l as f64)).unwrap();
            (c.h / l as f64 - h).abs()
        })
        .collect();
    for w in err.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..=2.4).contains(&ratio), "{err:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn root_solves_critical_equation_and_duality_holds(
        a in 0.3f64..4.0,
        b in 0.3f64..4.0,
        brk in 0.5f64..4.0,
        eta in 0.3f64..8.0,
        frac in 0.05f64..0.95,
    ) {
        let p = SpeedProfile::two_piece(a, brk, b).unwrap();
        let tau = frac * p.tau_e(eta).unwrap();
        let q = limit_quantities(&p, tau, eta).unwrap();
        prop_assert!(q.z < 0.0);
        prop_assert!(q.rho > 0.0 && q.rho < 1.0);
        prop_assert!(q.h > 0.0 && q.h < eta);
        let leg = legendre_height(&p, tau, eta).unwrap();
        prop_assert!((leg - q.h).abs() < 1e-8);
    }

    #[test]
    fn height_decreases_in_time(eta in 0.5f64..6.0, f1 in 0.05f64..0.9, gap in 0.01f64..0.09) {
        let p = SpeedProfile::two_piece(1.0, 3.0, 5.0).unwrap();
        let te = p.tau_e(eta).unwrap();
        let h1 = limit_quantities(&p, f1 * te, eta).unwrap().h;
        let h2 = limit_quantities(&p, (f1 + gap) * te, eta).unwrap().h;
        prop_assert!(h2 < h1);
    }
}
