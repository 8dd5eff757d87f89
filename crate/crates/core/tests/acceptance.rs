//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p dsdkit --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dsdkit::dsd::AxiomReport;
use dsdkit::oracle::he_difference_rows;
use dsdkit::{
    check_metric_hypothesis, dsd_finite, dsd_infinite, dsd_infinite_lazy, fixtures, monte_carlo_he,
    visit_expectations, z_alpha_from_z0, z_series_cesaro, z_series_truncated, DenseMatrix,
    DistanceMatrix, FundamentalData, LqOrder, StochasticMatrix,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn irreducible_mixed(rng: &mut ChaCha8Rng, n: usize) -> StochasticMatrix {
    if n >= 2 && rng.random_bool(0.5) {
        let d = rng.random_range(2..=n.min(4));
        fixtures::random_periodic(rng, n / d * d, d)
    } else {
        fixtures::random_aperiodic(rng, n)
    }
}

fn periodic(rng: &mut ChaCha8Rng, max_n: usize) -> StochasticMatrix {
    let d = rng.random_range(2..=4);
    let n = d * rng.random_range(1..=max_n / d);
    fixtures::random_periodic(rng, n, d)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

fn c1_counterexample() -> Outcome {
    let run = || {
        let p = fixtures::period_three_counterexample();
        let he = visit_expectations(&p, 2).unwrap().n;
        let d = dsd_finite(&p, 2, LqOrder::L1).unwrap();
        let report = check_metric_hypothesis(&p, 2).unwrap();
        let period = p.structure().period;
        (he, d, report, period)
    };
    let (he, d, report, period) = run();
    let expected = [1.0, 0.5, 0.5, 1.0];
    ensure(he.row(0) == expected && he.row(3) == expected, || {
        format!("He rows {:?} {:?}", he.row(0), he.row(3))
    })?;
    ensure(d.d[(0, 3)] == 0.0, || format!("DSD(1,4) = {}", d.d[(0, 3)]))?;
    ensure(!report.holds, || "hypothesis reported as holding".into())?;
    let w = report.witness.unwrap();
    ensure(w == (0, 3) || w == (3, 0), || format!("witness {w:?}"))?;
    ensure(period == Some(3), || format!("period {period:?}"))?;
    let times: Vec<Duration> = (0..21)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(run());
            t.elapsed()
        })
        .collect();
    let t = median(times);
    ensure(t < Duration::from_millis(1), || {
        format!("median runtime {t:?}")
    })?;
    Ok(format!("witness (1,4), period 3, median runtime {t:?}"))
}

fn c2_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut periodic_count = 0;
    for i in 0..200 {
        let n = rng.random_range(2..=100);
        let p = irreducible_mixed(&mut rng, n);
        if !p.structure().is_aperiodic() {
            periodic_count += 1;
        }
        let fd = FundamentalData::new(&p).map_err(|e| format!("chain {i}: {e}"))?;
        let r = fd.residuals(&p).unwrap();
        for (name, residual, bound) in r.checks(1e-9) {
            ensure(residual <= bound, || {
                format!(
                    "chain {i} (n={}): {name} residual {residual:e} > {bound:e}",
                    p.dim()
                )
            })?;
            worst = worst.max(residual / bound);
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), || format!("runtime {t:?}"))?;
    ensure(periodic_count >= 20, || {
        format!("only {periodic_count} periodic chains")
    })?;
    Ok(format!(
        "200 chains ({periodic_count} periodic), worst residual/bound {worst:.1e}, {t:.2?}"
    ))
}

fn c3_series() -> Outcome {
    const K: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_a = 0.0f64;
    for i in 0..50 {
        let n = rng.random_range(2..=30);
        let p = fixtures::random_aperiodic(&mut rng, n);
        let fd = FundamentalData::new(&p).unwrap();
        let gap = z_series_truncated(&p, &fd.w, K).value.max_abs_diff(&fd.z);
        ensure(gap <= 1e-8, || {
            format!("aperiodic chain {i} (n={n}): gap {gap:e}")
        })?;
        worst_a = worst_a.max(gap);
    }
    let mut worst_p = 0.0f64;
    for i in 0..20 {
        let p = periodic(&mut rng, 30);
        ensure(!p.structure().is_aperiodic(), || {
            format!("chain {i} is aperiodic")
        })?;
        let fd = FundamentalData::new(&p).unwrap();
        let gap = z_series_cesaro(&p, &fd.w, K).value.max_abs_diff(&fd.z);
        ensure(gap <= 1e-2, || format!("periodic chain {i}: gap {gap:e}"))?;
        worst_p = worst_p.max(gap);
    }
    Ok(format!(
        "truncated worst {worst_a:.1e} (bound 1e-8), Cesaro worst {worst_p:.1e} (bound 1e-2)"
    ))
}

fn c4_visit_differences() -> Outcome {
    const K: u64 = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = rng.random_range(2..=20);
        let p = fixtures::random_aperiodic(&mut rng, n);
        let z = FundamentalData::new(&p).unwrap().z;
        let he = visit_expectations(&p, K).unwrap().n;
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    let gap = (he[(u, w)] - he[(v, w)] - (z[(u, w)] - z[(v, w)])).abs();
                    ensure(gap <= 1e-6, || {
                        format!("chain {i}: ({u},{v},{w}) gap {gap:e}")
                    })?;
                    worst = worst.max(gap);
                }
            }
        }
        // independent propagation of the two start distributions
        let (u, v) = (0, rng.random_range(0..n));
        let rows = he_difference_rows(&p, u, v, K as usize);
        for (w, x) in rows[K as usize].iter().enumerate() {
            let gap = (x - (z[(u, w)] - z[(v, w)])).abs();
            ensure(gap <= 1e-6, || {
                format!("chain {i}: propagated ({u},{v},{w}) gap {gap:e}")
            })?;
            worst = worst.max(gap);
        }
    }
    Ok(format!(
        "20 chains, all (u,v,w), worst {worst:.1e} (bound 1e-6)"
    ))
}

fn c5_lazy_fundamental() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut periodic_count = 0;
    for i in 0..50 {
        let n = rng.random_range(2..=40);
        let p = irreducible_mixed(&mut rng, n);
        if !p.structure().is_aperiodic() {
            periodic_count += 1;
        }
        let fd = FundamentalData::new(&p).unwrap();
        for alpha in [0.1, 0.5, 0.9] {
            let closed = z_alpha_from_z0(&fd.z, &fd.w, alpha).unwrap();
            let direct = FundamentalData::direct(&p, alpha).unwrap().z;
            let gap = closed.max_abs_diff(&direct);
            ensure(gap <= 1e-9, || {
                format!("chain {i}, alpha {alpha}: gap {gap:e}")
            })?;
            worst = worst.max(gap);
        }
    }
    ensure(periodic_count > 0, || "no periodic chains drawn".into())?;
    Ok(format!(
        "50 chains ({periodic_count} periodic), worst {worst:.1e} (bound 1e-9)"
    ))
}

fn c6_lazy_distance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let orders = [LqOrder::L1, LqOrder::L2, LqOrder::Infinity];
    let mut worst_scaling = 0.0f64;
    let mut worst_cont = 0.0f64;
    for i in 0..30 {
        let n = rng.random_range(2..=30);
        let p = irreducible_mixed(&mut rng, n);
        let fd = FundamentalData::new(&p).unwrap();
        for q in orders {
            let d0 = dsd_infinite(&fd, q);
            for alpha in [0.1, 0.5, 0.9] {
                let scaled = dsd_infinite_lazy(&fd, alpha, q).unwrap();
                let direct = dsd_infinite(&FundamentalData::direct(&p, alpha).unwrap(), q);
                let gap = scaled.d.max_abs_diff(&direct.d);
                ensure(gap <= 1e-9, || {
                    format!("chain {i}, q={q}, alpha {alpha}: gap {gap:e}")
                })?;
                worst_scaling = worst_scaling.max(gap);
            }
            let mut prev = f64::INFINITY;
            for alpha in [0.1, 0.01, 0.001] {
                let direct = dsd_infinite(&FundamentalData::direct(&p, alpha).unwrap(), q);
                let err = direct.d.add_scaled(&d0.d, -1.0);
                let predicted = d0.d.scale(alpha / (1.0 - alpha));
                let gap = err.max_abs_diff(&predicted);
                ensure(gap <= 1e-9, || {
                    format!("chain {i}, q={q}, alpha {alpha}: error deviates by {gap:e}")
                })?;
                let size = err.max_abs();
                ensure(size <= prev, || {
                    format!("chain {i}, q={q}: error grew at alpha {alpha}")
                })?;
                prev = size;
                worst_cont = worst_cont.max(gap);
            }
        }
    }
    Ok(format!(
        "30 chains x q in {{1,2,inf}}, scaling worst {worst_scaling:.1e}, continuity worst {worst_cont:.1e}"
    ))
}

fn proof_identity_residual(p: &StochasticMatrix, k: u64) -> f64 {
    let nk = visit_expectations(p, k).unwrap().n;
    let mut lhs = &nk * p.matrix();
    lhs.add_assign(&DenseMatrix::identity(p.dim()));
    lhs.max_abs_diff(&(&nk + &p.power(k + 1)))
}

fn min_off_diagonal(d: &DistanceMatrix) -> f64 {
    d.axioms().min_off_diagonal
}

fn c7_metric_hypothesis() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut held, mut failed) = (0, 0);
    let mut worst = 0.0f64;
    for i in 0..500 {
        let n = rng.random_range(2..=30);
        let k = rng.random_range(0..=12);
        let p = fixtures::random_any(&mut rng, n);
        let report = check_metric_hypothesis(&p, k).unwrap();
        if report.holds {
            held += 1;
            for q in [LqOrder::L1, LqOrder::L2, LqOrder::Infinity] {
                let m = min_off_diagonal(&dsd_finite(&p, k, q).unwrap());
                ensure(m > 0.0, || {
                    format!("chain {i} (n={n}, k={k}, q={q}): min off-diagonal {m}")
                })?;
            }
        } else {
            failed += 1;
        }
        let r = proof_identity_residual(&p, k);
        ensure(r <= 1e-9, || format!("chain {i}: identity residual {r:e}"))?;
        worst = worst.max(r);
    }
    for (name, p) in [
        ("flip", fixtures::flip_chain()),
        ("uniform", fixtures::uniform_two_state()),
        ("counterexample", fixtures::period_three_counterexample()),
    ] {
        for k in 0..=12 {
            let r = proof_identity_residual(&p, k);
            ensure(r <= 1e-9, || {
                format!("{name}, k={k}: identity residual {r:e}")
            })?;
            worst = worst.max(r);
        }
    }
    ensure(held > 0 && failed > 0, || {
        format!("held {held}, failed {failed}")
    })?;
    Ok(format!(
        "500 chains: hypothesis held {held} (all with positive distances), failed {failed}; identity worst {worst:.1e}"
    ))
}

fn axiom_violation(a: &AxiomReport) -> f64 {
    a.max_asymmetry
        .max(a.max_abs_diagonal)
        .max(-a.min_entry)
        .max(a.max_triangle_excess)
        .max(0.0)
}

fn c8_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let orders = [
        LqOrder::L1,
        LqOrder::new(1.5).unwrap(),
        LqOrder::L2,
        LqOrder::new(3.0).unwrap(),
        LqOrder::Infinity,
    ];
    let mut checked = 0;
    let mut worst = 0.0f64;
    let mut check = |label: String, d: &DistanceMatrix| -> Result<(), String> {
        let v = axiom_violation(&d.axioms());
        ensure(v <= 1e-9, || format!("{label}: violation {v:e}"))?;
        worst = worst.max(v);
        checked += 1;
        Ok(())
    };
    for i in 0..60 {
        let n = rng.random_range(1..=30);
        let p = if i % 2 == 0 {
            fixtures::random_any(&mut rng, n)
        } else {
            irreducible_mixed(&mut rng, n)
        };
        let k = rng.random_range(0..=40);
        let fd = if p.is_irreducible() {
            Some(FundamentalData::new(&p).unwrap())
        } else {
            None
        };
        for q in orders {
            for kk in [0, 1, k] {
                check(
                    format!("chain {i}, k={kk}, q={q}"),
                    &dsd_finite(&p, kk, q).unwrap(),
                )?;
            }
            if let Some(fd) = &fd {
                for alpha in [0.0, 0.5, 0.9] {
                    let d = dsd_infinite_lazy(fd, alpha, q).unwrap();
                    check(format!("chain {i}, inf, alpha {alpha}, q={q}"), &d)?;
                }
            }
        }
    }
    Ok(format!(
        "{checked} distance matrices, worst violation {worst:.1e} (bound 1e-9)"
    ))
}

fn c9_monte_carlo() -> Outcome {
    const TRIALS: usize = 100_000;
    const SEED: u64 = 20_240_901;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut chains = vec![(fixtures::period_three_counterexample(), 20usize)];
    for _ in 0..5 {
        let n = rng.random_range(2..=10);
        let k = rng.random_range(1..=20);
        chains.push((irreducible_mixed(&mut rng, n), k));
    }
    let (mut cells, mut good) = (0, 0);
    let mut worst = 0.0f64;
    for (i, (p, k)) in chains.iter().enumerate() {
        let exact = visit_expectations(p, *k as u64).unwrap().n;
        let stats = monte_carlo_he(p, 0, *k, TRIALS, SEED + i as u64);
        for c in stats.compare(exact.row(0)) {
            cells += 1;
            if c.within(4.0) {
                good += 1;
            }
            worst = worst.max(c.z_score);
        }
    }
    let frac = good as f64 / cells as f64;
    ensure(frac >= 0.99, || format!("{good}/{cells} cells within 4 SE"))?;
    Ok(format!(
        "{good}/{cells} cells within 4 SE, max z-score {worst:.2}"
    ))
}

fn c10_hand_fixtures() -> Outcome {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let flip = FundamentalData::new(&fixtures::flip_chain()).unwrap();
    let z = DenseMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
    let gap = flip.z.max_abs_diff(&z);
    ensure(gap <= 1e-12, || format!("flip Z gap {gap:e}"))?;
    let d1 = dsd_infinite(&flip, LqOrder::L1).d[(0, 1)];
    let d2 = dsd_infinite(&flip, LqOrder::L2).d[(0, 1)];
    ensure(close(d1, 1.0), || format!("flip DSD_1 = {d1}"))?;
    ensure(close(d2, 1.0 / 2f64.sqrt()), || {
        format!("flip DSD_2 = {d2}")
    })?;

    let uni = FundamentalData::new(&fixtures::uniform_two_state()).unwrap();
    let gap = uni.z.max_abs_diff(&DenseMatrix::identity(2));
    ensure(gap <= 1e-12, || format!("P=W Z gap {gap:e}"))?;
    let du = dsd_infinite(&uni, LqOrder::L1).d[(0, 1)];
    ensure(close(du, 2.0), || format!("P=W DSD_1 = {du}"))?;
    Ok("flip Z, DSD_1 = 1, DSD_2 = 1/sqrt 2; P=W Z = I, DSD_1 = 2".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("counterexample regression", c1_counterexample),
        ("fundamental identities", c2_identities),
        ("series oracle", c3_series),
        (
            "visit-count differences converge to Z differences",
            c4_visit_differences,
        ),
        ("lazy fundamental matrix closed form", c5_lazy_fundamental),
        ("lazy distance scaling and continuity", c6_lazy_distance),
        (
            "metric hypothesis implies positive distances",
            c7_metric_hypothesis,
        ),
        ("metric axioms", c8_axioms),
        ("Monte Carlo visit counts", c9_monte_carlo),
        ("hand-computed fixtures", c10_hand_fixtures),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
