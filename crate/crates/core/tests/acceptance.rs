//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use hqkd::encoder::{polarization_output, qpsk_symbol, DvState, JonesState, QPSK_PHASES};
use hqkd::estimation::wrap_angle;
use hqkd::harness::{run_cv_experiment, run_dv_experiment, CvExperimentConfig, DvExperimentConfig};
use hqkd::math::RandomSource;
use hqkd::planner::{best_path, link_rate, Mode, Network, QLink};
use hqkd::rates::{holevo_lc, holevo_lc_explicit, mutual_information_lc, skr_cv_asymptotic, CvRateInput, DetectorTrust};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = o.pass && in_time;
    println!(
        "{} {id}: {} [{:.2?} / limit {:.0?}{}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed,
        limit,
        if in_time { "" } else { ", too slow" }
    );
    pass
}

fn baseline_rate() -> Outcome {
    let args = [
        "hqkd", "rate", "cv", "--v-a", "0.45", "--t", "0.72", "--xi-a", "0.012", "--eta", "0.30", "--v-el", "0.081",
        "--beta", "0.95", "--symbol-rate", "50e6",
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = hqkd::cli::run(args, &mut out, &mut err);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap_or_default();
    let skr = v["report"]["skr_per_symbol"].as_f64().unwrap_or(f64::NAN);
    let bps = v["report"]["skr_bps"].as_f64().unwrap_or(f64::NAN);
    Outcome {
        pass: code == 0 && (skr - 0.026).abs() <= 0.004 && (bps - 1.3e6).abs() <= 0.2e6,
        detail: format!("LC SKR {skr:.4} bit/symbol (0.026 +/- 0.004), {:.3} Mbit/s (1.3 +/- 0.2)", bps / 1e6),
    }
}

fn moment_oracle() -> Outcome {
    // direct arithmetic, independent of the library
    let (eta, t, v_a, v_el, xi): (f64, f64, f64, f64, f64) = (0.30, 0.72, 0.45, 0.081, 0.012);
    let xaxb = (eta * t / 2.0).sqrt() * v_a;
    let vb = 1.0 + v_el + eta * t / 2.0 * (v_a + xi);
    let out = run_cv_experiment(&CvExperimentConfig::baseline(2)).expect("cv chain");
    let e = out.report.estimation;
    Outcome {
        pass: (xaxb - 0.1479).abs() < 5e-5
            && (vb - 1.1309).abs() < 5e-5
            && (e.xaxb - xaxb).abs() <= 0.003
            && (e.vb - vb).abs() <= 0.005,
        detail: format!(
            "<X_A X_B> {:.4} vs oracle {xaxb:.4} (+/- 0.003), V_B {:.4} vs oracle {vb:.4} (+/- 0.005), 1.5e6 symbols",
            e.xaxb, e.vb
        ),
    }
}

fn closed_loop_estimation() -> Outcome {
    // Ideal receiver and V_A = 5: the most favorable setting for the
    // estimator. 20 draws from one fixed stream, every draw must pass.
    let mut rng = RandomSource::new(1);
    let mut fails = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for k in 0..20 {
        let t = 0.05 + 0.95 * rng.uniform();
        let xi = 0.1 * rng.uniform();
        let cfg = CvExperimentConfig {
            v_a: 5.0,
            t: Some(t),
            xi_a: xi,
            eta: 1.0,
            v_el: 0.0,
            seed: 1000 + k,
            ..CvExperimentConfig::baseline(0)
        };
        let e = run_cv_experiment(&cfg).expect("cv chain").report.estimation;
        let (dt, dxi) = ((e.t_hat - t).abs(), (e.xi_hat - xi).abs());
        worst = (worst.0.max(dt), worst.1.max(dxi));
        let sigma = (e.t_std.unwrap_or(f64::NAN), e.xi_std.unwrap_or(f64::NAN));
        println!(
            "      draw {k:>2}: T {t:.3} -> {:.4} (sigma {:.4})  xi {xi:.4} -> {:.4} (sigma {:.4}){}",
            e.t_hat,
            sigma.0,
            e.xi_hat,
            sigma.1,
            if dt > 0.02 || dxi > 0.01 { "  <- out of tolerance" } else { "" }
        );
        if dt > 0.02 || dxi > 0.01 {
            fails.push(k);
        }
    }
    Outcome {
        pass: fails.is_empty(),
        detail: format!(
            "{}/20 draws within T +/- 0.02 and xi +/- 0.01 (worst |dT| {:.4}, |dxi| {:.4}; failing draws {fails:?})",
            20 - fails.len(),
            worst.0,
            worst.1
        ),
    }
}

/// Centroid phases and separation-to-spread ratio of Bob's four clusters.
fn cluster_geometry(cfg: &CvExperimentConfig) -> (f64, f64) {
    let out = run_cv_experiment(cfg).expect("cv chain");
    let mut acc = [[0.0f64; 5]; 4];
    for r in &out.constellation {
        let phase = r.p_a.atan2(r.x_a);
        let k = QPSK_PHASES.iter().position(|&q| wrap_angle(q - phase).abs() < 0.1).unwrap();
        let a = &mut acc[k];
        a[0] += r.x_b;
        a[1] += r.p_b;
        a[2] += r.x_b * r.x_b;
        a[3] += r.p_b * r.p_b;
        a[4] += 1.0;
    }
    let cents: Vec<(f64, f64, f64)> = acc
        .iter()
        .map(|a| {
            let (mx, mp) = (a[0] / a[4], a[1] / a[4]);
            let var = 0.5 * (a[2] / a[4] - mx * mx + a[3] / a[4] - mp * mp);
            (mx, mp, var.sqrt())
        })
        .collect();
    let mut worst_phase = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                continue;
            }
            let target = wrap_angle(QPSK_PHASES[j] - QPSK_PHASES[i]);
            let got = wrap_angle(cents[j].1.atan2(cents[j].0) - cents[i].1.atan2(cents[i].0));
            worst_phase = worst_phase.max(wrap_angle(got - target).abs());
            if (target.abs() - FRAC_PI_2).abs() < 1e-9 {
                let d = (cents[i].0 - cents[j].0).hypot(cents[i].1 - cents[j].1);
                min_ratio = min_ratio.min(d / cents[i].2.max(cents[j].2));
            }
        }
    }
    (worst_phase, min_ratio)
}

fn constellation() -> Outcome {
    let ideal = CvExperimentConfig {
        v_a: 12.4,
        t: Some(1.0),
        xi_a: 0.0,
        eta: 1.0,
        v_el: 0.0,
        n_symbols: 200_000,
        ..CvExperimentConfig::baseline(4)
    };
    let baseline = CvExperimentConfig {
        v_a: 12.4,
        n_symbols: 200_000,
        ..CvExperimentConfig::baseline(4)
    };
    let (phase_err, ratio) = cluster_geometry(&ideal);
    let (phase_t1, ratio_t1) = cluster_geometry(&baseline);
    Outcome {
        pass: phase_err <= 0.05 && ratio >= 5.0,
        detail: format!(
            "lossless chain: max centroid phase error {phase_err:.4} rad (<= 0.05), adjacent distance / std {ratio:.3} (>= 5; bound sqrt(2 V_A) = {:.3}); baseline chain: {phase_t1:.4} rad, ratio {ratio_t1:.3}",
            (2.0f64 * 12.4).sqrt()
        ),
    }
}

fn dv_band() -> Outcome {
    let r = run_dv_experiment(&DvExperimentConfig::baseline(5)).expect("dv chain");
    let z = r.qber.qber_z.map_or(f64::NAN, |q| q.qber);
    let x = r.qber.qber_x.map_or(f64::NAN, |q| q.qber);
    let skr = r.mean_skr_bps;
    Outcome {
        pass: skr > 0.0 && (1e3..=20e3).contains(&skr) && (z - 0.006).abs() < 0.002,
        detail: format!(
            "QBER_Z {:.3}% QBER_X {:.3}%, finite-key SKR {:.2} kbit/s (band [1, 20]), {} block(s) of 2e8 pulses",
            100.0 * z,
            100.0 * x,
            skr / 1e3,
            r.blocks.len()
        ),
    }
}

fn brute_force(n: usize, links: &[(usize, usize, f64, f64)], s: usize, d: usize) -> f64 {
    fn dfs(at: usize, d: usize, links: &[(usize, usize, f64, f64)], w: &[f64], seen: &mut [bool], cur: f64, best: &mut f64) {
        if at == d {
            *best = best.max(cur);
            return;
        }
        for (k, &(u, v, _, _)) in links.iter().enumerate() {
            let next = if u == at {
                v
            } else if v == at {
                u
            } else {
                continue;
            };
            if !seen[next] {
                seen[next] = true;
                dfs(next, d, links, w, seen, cur.min(w[k]), best);
                seen[next] = false;
            }
        }
    }
    let mut best = 0.0f64;
    for mask in 0u32..(1 << links.len()) {
        let w: Vec<f64> = links
            .iter()
            .enumerate()
            .map(|(k, l)| if mask & (1 << k) != 0 { l.2 } else { l.3 })
            .collect();
        let mut seen = vec![false; n];
        seen[s] = true;
        dfs(s, d, links, &w, &mut seen, f64::INFINITY, &mut best);
    }
    best
}

fn properties() -> Outcome {
    let mut failures: Vec<String> = Vec::new();
    let mut rng = RandomSource::new(6);

    // encoder: normalization and dependence on φl − φe only
    for _ in 0..1000 {
        let (e, l, s) = (2.0 * PI * rng.uniform(), 2.0 * PI * rng.uniform(), 2.0 * PI * rng.uniform());
        let a = polarization_output(e, l);
        let b = polarization_output(e + s, l + s);
        if (a.norm_sqr() - 1.0).abs() > 1e-12 || !a.same_ray(&b) || (a.h.norm_sqr() - 0.5).abs() > 1e-12 {
            failures.push("encoder".into());
            break;
        }
    }
    let dr = JonesState::diagonal().overlap(&DvState::R.jones());
    let rl = DvState::R.jones().inner(&DvState::L.jones()).norm();
    if (dr - 0.5).abs() > 1e-12 || rl > 1e-12 {
        failures.push(format!("overlaps |<D|R>|^2 {dr}, |<R|L>| {rl}"));
    }
    for k in 0..4 {
        let s = qpsk_symbol(k, 12.4).unwrap();
        if (s.x().hypot(s.p()) - (2.0f64 * 12.4).sqrt()).abs() > 1e-9 {
            failures.push("qpsk radius".into());
        }
    }

    // χ_E ≥ 0, SKR ≤ β·I_AB, both symplectic and both Holevo routes agree
    let mut max_dual = 0.0f64;
    let mut max_holevo = 0.0f64;
    for _ in 0..10_000 {
        let inp = CvRateInput {
            v_a: 0.01 + 20.0 * rng.uniform(),
            t: 0.999 * rng.uniform(),
            xi_a: 0.2 * rng.uniform(),
            eta: 0.05 + 0.95 * rng.uniform(),
            v_el: 0.3 * rng.uniform(),
            beta: rng.uniform(),
            symbol_rate: 50e6,
            trust: if rng.bernoulli(0.5) { DetectorTrust::NoiseOnly } else { DetectorTrust::Full },
        };
        let r = skr_cv_asymptotic(&inp).unwrap();
        if r.chi_e < 0.0 || r.skr_per_symbol > inp.beta * r.i_ab + 1e-12 {
            failures.push(format!("rate bound at {inp:?}"));
            break;
        }
        let ab = inp.alice_bob_matrix().unwrap();
        let (a, b) = ab.symplectic_eigenvalues();
        let (c, d) = ab.symplectic_eigenvalues_eig();
        max_dual = max_dual.max(((a - c).abs()).max((b - d).abs()) / a);
        max_holevo = max_holevo.max((holevo_lc(&inp).unwrap() - holevo_lc_explicit(&inp).unwrap()).abs());
    }
    if max_dual > 1e-9 || max_holevo > 1e-9 {
        failures.push(format!("dual paths differ: eigenvalues {max_dual:e}, Holevo {max_holevo:e}"));
    }

    // monotonicity at the baseline point
    let t1 = CvRateInput::baseline();
    let series = |f: &dyn Fn(f64) -> CvRateInput, lo: f64, hi: f64| -> Vec<(f64, f64)> {
        (0..=100)
            .map(|k| {
                let inp = f(lo + (hi - lo) * k as f64 / 100.0);
                (skr_cv_asymptotic(&inp).unwrap().skr_per_symbol, mutual_information_lc(&inp).unwrap())
            })
            .collect()
    };
    let non_inc = |s: &[(f64, f64)], i: usize| s.windows(2).all(|w| if i == 0 { w[1].0 <= w[0].0 + 1e-15 } else { w[1].1 <= w[0].1 + 1e-15 });
    let non_dec = |s: &[(f64, f64)]| s.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-15);
    if !non_inc(&series(&|x| CvRateInput { xi_a: x, ..t1 }, 0.0, 0.1), 0) {
        failures.push("SKR vs xi".into());
    }
    if !non_inc(&series(&|x| CvRateInput { v_el: x, ..t1 }, 0.0, 0.5), 0) {
        failures.push("SKR vs V_el".into());
    }
    if !non_dec(&series(&|x| CvRateInput { t: x, ..t1 }, 0.0, 1.0)) {
        failures.push("I_AB vs T".into());
    }
    if !non_dec(&series(&|x| CvRateInput { eta: x, ..t1 }, 0.01, 1.0)) {
        failures.push("I_AB vs eta".into());
    }

    // planner against exhaustive search
    let mut trials = 0;
    while trials < 200 {
        let n = 2 + (rng.uniform() * 4.0) as usize;
        let m = 1 + (rng.uniform() * 6.0) as usize;
        let links: Vec<QLink> = (0..m)
            .map(|k| {
                let u = (rng.uniform() * n as f64) as usize;
                let v = (u + 1 + (rng.uniform() * (n - 1) as f64) as usize) % n;
                QLink::new(&format!("l{k}"), &format!("n{u}"), &format!("n{v}"), 50.0 * rng.uniform(), 0.04 * rng.uniform())
            })
            .collect();
        let net = Network {
            links: links.clone(),
            src: "n0".into(),
            dst: format!("n{}", n - 1),
        };
        let Ok(plan) = best_path(&net, &net.src, &net.dst) else { continue };
        trials += 1;
        let id = |s: &str| s[1..].parse::<usize>().unwrap();
        let rated: Vec<_> = links
            .iter()
            .map(|l| {
                (
                    id(&l.endpoints[0]),
                    id(&l.endpoints[1]),
                    link_rate(l, Mode::Cv).unwrap(),
                    link_rate(l, Mode::Dv).unwrap(),
                )
            })
            .collect();
        let got = plan.route.map_or(0.0, |r| r.bottleneck_bps);
        if got != brute_force(n, &rated, 0, n - 1) {
            failures.push("planner vs brute force".into());
            break;
        }
    }

    // byte-identical reruns
    let cv = CvExperimentConfig {
        n_symbols: 100_000,
        ..CvExperimentConfig::baseline(77)
    };
    let dv = DvExperimentConfig {
        block_size: 1_000_000,
        duration: 0.04,
        ..DvExperimentConfig::baseline(77)
    };
    let run_cv = || serde_json::to_string(&run_cv_experiment(&cv).unwrap().report).unwrap();
    let run_dv = || serde_json::to_string(&run_dv_experiment(&dv).unwrap()).unwrap();
    if run_cv() != run_cv() || run_dv() != run_dv() {
        failures.push("determinism".into());
    }

    Outcome {
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("encoder, overlaps, 1e4 rate inputs, dual paths (max {max_dual:.1e} / {max_holevo:.1e}), monotone sweeps, 200 planner graphs, determinism")
        } else {
            format!("failed: {}", failures.join("; "))
        },
    }
}

fn main() {
    let results = [
        check("criterion 1 (baseline LC rate)", Duration::from_secs(1), baseline_rate),
        check("criterion 2 (moment oracle)", Duration::from_secs(30), moment_oracle),
        check("criterion 3 (closed-loop estimation)", Duration::from_secs(180), closed_loop_estimation),
        check("criterion 4 (constellation)", Duration::from_secs(10), constellation),
        check("criterion 5 (DV finite-key band)", Duration::from_secs(120), dv_band),
        check("criterion 6 (property suites)", Duration::from_secs(120), properties),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
