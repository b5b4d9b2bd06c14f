//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a failure status if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use pushtasep::airy::{airy_kernel, airy_kernel_contour, tw_cdf, tw_gue_cdf, NystromGrid, DEFAULT_NODES};
use pushtasep::asymptotics::{discrete_crit, hydro_residual, legendre_height, limit_quantities};
use pushtasep::experiment::{convergence_passes, convergence_study, representation_grid};
use pushtasep::field::sample_fields;
use pushtasep::fredholm::height_tail;
use pushtasep::kernel::{eval_k, eval_k_rewritten, residue_term, QuadratureSpec, SpaceTimePoint};
use pushtasep::oracle::{ctmc_height_dist, height_dist_truncated, weight_cap_for};
use pushtasep::profile::{DiscreteRates, SpeedProfile};
use pushtasep::sim::sample_heights;
use pushtasep::stats::chi_square_two_sample;
use pushtasep::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn two_piece_up() -> SpeedProfile {
    SpeedProfile::two_piece(1.0, 3.0, 5.0).unwrap()
}

fn criterion_1() -> Result<Outcome> {
    let p = SpeedProfile::constant(1.0)?;
    let mut worst: f64 = 0.0;
    for eta in [1.5f64, 2.0, 4.0, 9.0] {
        let q = limit_quantities(&p, 1.0, eta)?;
        let s = eta.sqrt();
        worst = worst
            .max((q.z - (1.0 - s)).abs())
            .max((q.h - (s - 1.0).powi(2)).abs())
            .max((q.rho - (1.0 - 1.0 / s)).abs());
    }
    outcome(worst <= 1e-10, format!("max error {worst:.2e}"))
}

fn criterion_2() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for p in [SpeedProfile::constant(1.0)?, two_piece_up(), SpeedProfile::two_piece(1.0, 3.0, 0.5)?] {
        for eta in [1.5, 2.5, 4.0, 6.0, 8.0] {
            let te = p.tau_e(eta)?;
            for frac in [0.2, 0.45, 0.7, 0.9] {
                let tau = frac * te;
                worst = worst.max((legendre_height(&p, tau, eta)? - limit_quantities(&p, tau, eta)?.h).abs());
            }
        }
    }
    outcome(worst <= 1e-8, format!("max |legendre - h| {worst:.2e} over 3 x 20 points"))
}

fn criterion_3() -> Result<Outcome> {
    let steps = [1e-2, 5e-3, 2.5e-3];
    let mut min_order = f64::INFINITY;
    let mut identity: f64 = 0.0;
    let cases = [
        (SpeedProfile::constant(1.0)?, 1.0, 4.0),
        (two_piece_up(), 1.0, 4.5),
        (two_piece_up(), 1.0, 2.0),
        (SpeedProfile::two_piece(1.0, 3.0, 0.5)?, 2.0, 5.0),
    ];
    for (p, tau, eta) in &cases {
        let mut r = Vec::new();
        for s in steps {
            let h = hydro_residual(p, *tau, *eta, s)?;
            identity = identity.max(h.identity);
            r.push(h.pde.abs());
        }
        for w in r.windows(2) {
            min_order = min_order.min((w[0] / w[1]).log2());
        }
    }
    outcome(
        min_order >= 1.8 && identity <= 1e-9,
        format!("min observed order {min_order:.3}, max flux identity error {identity:.2e}"),
    )
}

fn criterion_4() -> Result<Outcome> {
    let quad = QuadratureSpec::default();
    let vectors: [&[f64]; 3] = [&[1.0, 1.0, 1.0, 1.0], &[1.0, 0.5, 2.0, 1.5], &[2.0, 3.0, 0.7, 1.2]];
    let (mut e_chain, mut excess): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for xi in vectors {
        let rates = DiscreteRates::explicit(xi.to_vec())?;
        for n in 2..=4 {
            for t in [0.3, 0.7, 1.5] {
                let chain = ctmc_height_dist(&xi[..n], t)?;
                let cap = weight_cap_for(&xi[..n], t, 1e-9).min(26);
                let schur = height_dist_truncated(&rates, t, n, cap, 1e-4)?;
                for y in 0..n as i64 {
                    let g = height_tail(&rates, t, n, y, &quad)?;
                    e_chain = e_chain.max((g - chain.tail_gt(y)).abs());
                    let s: f64 = (0..n as i64 - y).map(|l| schur.prob(l)).sum();
                    excess = excess.max((g - s).abs() - 1e-5 - schur.tail_bound);
                }
            }
        }
    }
    outcome(
        e_chain <= 1e-6 && excess <= 0.0,
        format!("max |F - chain| {e_chain:.2e}; truncated-sum margin {:.2e}", -excess),
    )
}

fn criterion_5() -> Result<Outcome> {
    let rates = two_piece_up().discretize(1.0, 6)?;
    let quad = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    let grid = representation_grid();
    for (p, q) in &grid {
        worst = worst.max((eval_k(p, q, &rates, &quad)? - eval_k_rewritten(p, q, &rates, &quad)?).norm());
    }
    let mut cancel = true;
    for x in -6..0 {
        for y in -6..0 {
            let p = SpaceTimePoint::new(0.8, 6, x);
            let q = SpaceTimePoint::new(0.8, 6, y);
            cancel &= residue_term(&p, &q, rates.as_slice()) == if x == y { 1.0 } else { 0.0 };
        }
    }
    outcome(
        worst <= 1e-8 && cancel && grid.len() == 30,
        format!("max difference {worst:.2e} on {} points; equal-time cancellation {cancel}", grid.len()),
    )
}

fn criterion_6() -> Result<Outcome> {
    let rates = two_piece_up().discretize(1.0, 6)?;
    let reps = 100_000;
    let sim: Vec<i64> = sample_heights(&rates, 6, 1.0, 6, reps, 601)?.into_iter().map(|h| h as i64).collect();
    let field: Vec<i64> = sample_fields(&rates, 6, 1.0, reps, 602)?
        .iter()
        .map(|a| a.project().heights[5])
        .collect();
    let c = chi_square_two_sample(&sim, &field, 20)?;
    outcome(
        c.p_value > 1e-3,
        format!("chi-square {:.3} on {} dof, p = {:.4}", c.statistic, c.dof, c.p_value),
    )
}

fn criterion_7() -> Result<Outcome> {
    // 14 sites at rate 1 then 16 at rate 5
    let rates = two_piece_up().discretize(5.0, 30)?;
    let quad = QuadratureSpec::default();
    let reps = 100_000;
    let hs = sample_heights(&rates, 30, 10.0, 30, reps, 701)?;
    let mut worst: f64 = 0.0;
    for y in 0..5 {
        let f = height_tail(&rates, 10.0, 30, y, &quad)?;
        let hits = hs.iter().filter(|&&h| h as i64 > y).count();
        let p = hits as f64 / reps as f64;
        let se = (f * (1.0 - f) / reps as f64).sqrt();
        worst = worst.max((p - f).abs() / se);
    }
    outcome(worst <= 3.0, format!("max deviation {worst:.2} standard errors at y = 0..4"))
}

fn criterion_8() -> Result<Outcome> {
    let rows = convergence_study(&SpeedProfile::constant(1.0)?, 1.0, 4.0, &[50, 100, 200], 2000, 1)?;
    let ks: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.ks)).collect();
    let dq: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.ks_dequantized)).collect();
    outcome(
        convergence_passes(&rows, 0.1),
        format!("KS at L = 50, 100, 200: {} (dequantized {})", ks.join(", "), dq.join(", ")),
    )
}

fn criterion_9() -> Result<Outcome> {
    let mut rep: f64 = 0.0;
    for x in [-3.0, -1.5, 0.0, 1.0, 2.5] {
        for y in [-3.0, -1.5, 0.0, 1.0, 2.5] {
            rep = rep.max((airy_kernel(x, y)? - airy_kernel_contour(x, y)).abs());
        }
    }
    let mut doubling: f64 = 0.0;
    for r in [-2.0, 0.0, 2.0] {
        let a = tw_gue_cdf(&NystromGrid::new(r, DEFAULT_NODES)?)?;
        let b = tw_gue_cdf(&NystromGrid::new(r, 2 * DEFAULT_NODES)?)?;
        doubling = doubling.max((a - b).abs());
    }
    let vals = (-5..=3).map(|r| tw_cdf(r as f64)).collect::<Result<Vec<_>>>()?;
    let monotone = vals.windows(2).all(|w| w[1] > w[0]);
    let tails = tw_cdf(6.0)? > 1.0 - 1e-8 && tw_cdf(-8.0)? < 1e-6;
    outcome(
        rep <= 1e-8 && doubling <= 1e-10 && monotone && tails,
        format!("representations {rep:.2e}, grid doubling {doubling:.2e}, monotone {monotone}, tails {tails}"),
    )
}

fn criterion_10() -> Result<Outcome> {
    let p = two_piece_up();
    let (tau, eta) = (1.0, 4.0);
    let h = limit_quantities(&p, tau, eta)?.h;
    let mut err = Vec::new();
    for l in [100usize, 200, 400] {
        let lf = l as f64;
        let n = (eta * lf).floor() as usize;
        let c = discrete_crit(&p.discretize(lf, n)?, tau * lf, n, Some(lf))?;
        err.push((c.h / lf - h).abs());
    }
    let ratios: Vec<f64> = err.windows(2).map(|w| w[0] / w[1]).collect();
    outcome(
        ratios.iter().all(|r| (1.6..=2.4).contains(r)),
        format!("errors {err:.3?}, ratios {ratios:.3?}"),
    )
}

type Criterion = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(Criterion, Duration); 10] = [
        (criterion_1, Duration::from_secs(1)),
        (criterion_2, Duration::from_secs(10)),
        (criterion_3, Duration::from_secs(10)),
        (criterion_4, Duration::from_secs(120)),
        (criterion_5, Duration::from_secs(60)),
        (criterion_6, Duration::from_secs(120)),
        (criterion_7, Duration::from_secs(300)),
        (criterion_8, Duration::from_secs(1800)),
        (criterion_9, Duration::from_secs(60)),
        (criterion_10, Duration::from_secs(10)),
    ];
    let mut failed = 0;
    for (i, (run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2}: {}  [{:.2}s of {}s] {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
            detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
