//! Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. All stochastic runs use seed 2024.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tlschain::analysis::{fit_exponential, natural_time_to_microseconds};
use tlschain::model::{build_hamiltonian, draw_site_disorder};
use tlschain::propagation::{inner, integrate_reference};
use tlschain::{
    Configuration, FftieSchedule, FftieSystem, InitialState, ModeLayout, ModelParams, OffsetMode,
    QubitState, SectorBasis, StateVector, TimeAxis,
};
use tlschain_cli::reproduce::{reproduce, Figure, FigureId, SCAN_COUPLINGS};
use tlschain_cli::run::simulate;
use tlschain_cli::scan::fit_curve;
use tlschain_cli::RunConfig;

const SEED: u64 = 2024;

type Outcome = Result<String, String>;

fn quiet(_: &str) {}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn figure(id: FigureId) -> Figure {
    reproduce(id, SEED, &quiet).unwrap_or_else(|e| panic!("{id}: {e}"))
}

fn fig3f() -> &'static (Figure, Duration) {
    static CELL: OnceLock<(Figure, Duration)> = OnceLock::new();
    CELL.get_or_init(|| timed(|| figure(FigureId::Fig3f)))
}

fn tail_mean(v: &[f64], fraction: f64) -> f64 {
    let k = ((v.len() as f64) * fraction).ceil() as usize;
    v[v.len() - k..].iter().sum::<f64>() / k as f64
}

fn fig3a_run(axis: TimeAxis) -> (tlschain::EnsembleF64, Duration) {
    let config = RunConfig {
        time_axis: axis,
        master_seed: SEED,
        ..RunConfig::default()
    };
    timed(|| simulate(&config).expect("reference ensemble"))
}

fn fig3a_include() -> &'static (tlschain::EnsembleF64, Duration) {
    static CELL: OnceLock<(tlschain::EnsembleF64, Duration)> = OnceLock::new();
    CELL.get_or_init(|| fig3a_run(TimeAxis::IncludeErasure))
}

fn criterion_1() -> Outcome {
    let (e, elapsed) = fig3a_include();
    let eq = tail_mean(&e.n_q.mean, 0.2);
    check(
        within(eq, 0.125, 0.02) && elapsed.as_secs_f64() < 60.0,
        format!("tail mean n_q {eq:.4} (target 0.125 +/- 0.02), {:.1} s", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = false;
    for (name, axis) in [
        ("include_erasure", TimeAxis::IncludeErasure),
        ("exclude_erasure", TimeAxis::ExcludeErasure),
    ] {
        let (e, elapsed) = if axis == TimeAxis::IncludeErasure {
            fig3a_include().clone()
        } else {
            fig3a_run(axis)
        };
        let f = fit_curve(&e.times, &e.n_q.mean, name).map_err(|e| e.to_string())?;
        let hit = within(f.time_constant, 6131.4, 0.25 * 6131.4) && elapsed.as_secs_f64() < 60.0;
        ok |= hit;
        detail.push(format!(
            "{name}: T1 {:.1} +/- {:.1} ({:.1} s)",
            f.time_constant,
            f.sigma_time_constant,
            elapsed.as_secs_f64()
        ));
    }
    check(ok, format!("{} (target 6131.4 +/- 25%)", detail.join("; ")))
}

fn criterion_3() -> Outcome {
    let (fig, elapsed) = fig3f();
    let a1 = fig.scan("T1scan_T1").ok_or("no T1 scan")?.scaling.exponent;
    let a2 = fig.scan("T2scan_T2").ok_or("no T2 scan")?.scaling.exponent;
    check(
        within(a1, -2.0, 0.15) && within(a2, -1.97, 0.20) && elapsed.as_secs_f64() < 1800.0,
        format!(
            "alpha_T1 {a1:.4} (-2.00 +/- 0.15), alpha_T2 {a2:.4} (-1.97 +/- 0.20), {:.0} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4() -> Outcome {
    let (fig, _) = fig3f();
    let t1 = fig.scan("T1scan_T1").and_then(|s| s.at(0.01)).ok_or("no T1 at 0.01")?;
    let t2 = fig.scan("T2scan_T2").and_then(|s| s.at(0.01)).ok_or("no T2 at 0.01")?;
    let r = t2.time_constant / t1.time_constant;
    check(
        (1.9..=2.4).contains(&r),
        format!(
            "T2/T1 = {:.1}/{:.1} = {r:.3} (target [1.9, 2.4])",
            t2.time_constant, t1.time_constant
        ),
    )
}

/// Local maxima that stand out by at least `prominence` from the lower of
/// the two minima separating them from higher ground.
fn count_prominent_peaks(v: &[f64], prominence: f64) -> usize {
    let mut count = 0;
    for i in 1..v.len() - 1 {
        if !(v[i] > v[i - 1] && v[i] >= v[i + 1]) {
            continue;
        }
        let side = |range: &mut dyn Iterator<Item = usize>| {
            let mut lo = v[i];
            for k in range {
                if v[k] > v[i] {
                    break;
                }
                lo = lo.min(v[k]);
            }
            lo
        };
        let left = side(&mut (0..i).rev());
        let right = side(&mut (i + 1..v.len()));
        if v[i] - left.max(right) >= prominence {
            count += 1;
        }
    }
    count
}

fn criterion_5() -> Outcome {
    let fig = figure(FigureId::Fig3c);
    let c = fig.curve("fig3c_n_q").ok_or("no curve")?;
    let t1 = fig.fit("fig3c_T1").ok_or("no fit")?.time_constant;
    let eq = tail_mean(&c.values, 0.2);
    // settled once the mean stays within 0.05 of equilibrium
    let settle = c
        .values
        .iter()
        .rposition(|v| (v - eq).abs() > 0.05)
        .unwrap_or(0);
    let peaks = count_prominent_peaks(&c.values[..=settle.min(c.values.len() - 2)], 0.02);
    check(
        peaks >= 3 && within(t1, 81.7, 0.5 * 81.7),
        format!("{peaks} maxima before settling at t={:.0} (>= 3), T1 {t1:.1} (81.7 +/- 50%)", c.times[settle]),
    )
}

/// Revival time: the curve drops below the midpoint between its start and
/// its lowest value, climbs back above it, and peaks before dropping again.
fn revival_time(times: &[f64], v: &[f64]) -> Option<f64> {
    let lowest = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mid = 0.5 * (v[0] + lowest);
    let down = v.iter().position(|&x| x < mid)?;
    let up = down + v[down..].iter().position(|&x| x > mid)?;
    let end = up + v[up..].iter().position(|&x| x < mid).unwrap_or(v.len() - up);
    let peak = (up..end).max_by(|&a, &b| v[a].total_cmp(&v[b]))?;
    Some(times[peak])
}

fn criterion_6() -> Outcome {
    let fig = figure(FigureId::Fig2);
    let c6 = fig.curve("L6_ups0").ok_or("no L6 curve")?;
    let min6 = c6
        .times
        .iter()
        .zip(&c6.values)
        .filter(|(t, _)| **t <= 2000.0)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let c7 = fig.curve("L7_ups0").ok_or("no L7 curve")?;
    let min7 = c7.values.iter().copied().fold(f64::INFINITY, f64::min);
    let c72 = fig.curve("L7_ups2").ok_or("no L7 bath curve")?;
    let period = revival_time(&c72.times, &c72.values).ok_or("no revival")?;
    check(
        min6 > 0.9 && min7 < 0.1 && within(period, 1093.0, 109.3),
        format!("L6 min {min6:.4} (> 0.9), L7 min {min7:.2e} (< 0.1), L7 bath revival {period:.0} (1093 +/- 10%)"),
    )
}

fn criterion_7() -> Outcome {
    let fig = figure(FigureId::Fig4b);
    let curve = |th: &str| {
        let c = fig.curve(&format!("fig4b_tH{th}_n_q")).expect("curve");
        (c.times.clone(), c.values.clone(), c.std.clone().expect("ensemble std"))
    };
    // a revival is a maximum after the initial collapse that peaks above
    // eq + 0.1 and rises above that collapse by more than two standard
    // errors of the five-trajectory mean
    let revivals = |th: &str| -> (usize, f64) {
        let (_, v, sd) = curve(th);
        let eq = tail_mean(&v, 0.2);
        let n = 5f64;
        let Some(i) = (1..v.len() - 1).find(|&k| v[k] < v[k - 1] && v[k] <= v[k + 1]) else {
            return (0, eq);
        };
        let mut count = 0;
        let mut floor = i;
        for k in i + 1..v.len() - 1 {
            if v[k] < v[floor] {
                floor = k;
            }
            if v[k] > v[k - 1] && v[k] >= v[k + 1] && v[k] > eq + 0.1 {
                let se = ((sd[k].powi(2) + sd[floor].powi(2)) / n).sqrt();
                if v[k] - v[floor] > 2.0 * se {
                    count += 1;
                    floor = k;
                }
            }
        }
        (count, eq)
    };
    let crossing = |th: &str| {
        let (t, v, _) = curve(th);
        let eq = tail_mean(&v, 0.2);
        let half = 0.5 * (1.0 + eq);
        t[v.iter().position(|&x| x < half).unwrap_or(v.len() - 1)]
    };
    let (r90, _) = revivals("90");
    let (r50, _) = revivals("50");
    let (c2, c90) = (crossing("2"), crossing("90"));
    check(
        r90 >= 1 && r50 == 0 && c2 > c90,
        format!("t_H=90 revivals {r90} (>= 1), t_H=50 revivals {r50} (0), half-decay t_H=2 at {c2:.0} vs t_H=90 at {c90:.0}"),
    )
}

fn criterion_8() -> Outcome {
    let fig = figure(FigureId::Fig4a);
    let t = |j: &str| fig.fit(&format!("fig4a_J{j}_T1")).map(|f| f.time_constant).ok_or("missing fit");
    let (t02, t1, t3, t7) = (t("0.2")?, t("1")?, t("3")?, t("7")?);
    let spread = (t3 - t7).abs() / t3.max(t7);
    check(
        spread <= 0.15 && t02 < t1,
        format!("T1(3) {t3:.0}, T1(7) {t7:.0}, difference {:.1}% (<= 15%); T1(0.2) {t02:.0} < T1(1) {t1:.0}", 100.0 * spread),
    )
}

fn criterion_9() -> Outcome {
    let single = figure(FigureId::Fig4c);
    let s = single.scan("single_ups_T1").ok_or("no single-excitation scan")?;
    let (fig, _) = fig3f();
    let d = fig.scan("T1scan_T1").ok_or("no T1 scan")?;
    let mut ratios = Vec::new();
    for &j in &SCAN_COUPLINGS {
        let a = s.at(j).ok_or("missing J")?.time_constant;
        let b = d.at(j).ok_or("missing J")?.time_constant;
        ratios.push(a / b);
    }
    let alpha = s.scaling.exponent;
    let ok = within(alpha, -1.94, 0.20) && ratios.iter().all(|r| (0.35..=0.65).contains(r));
    let listed: Vec<String> = ratios.iter().map(|r| format!("{r:.3}")).collect();
    check(
        ok,
        format!("alpha {alpha:.4} (-1.94 +/- 0.20), single/double ratios [{}] (each in [0.35, 0.65])", listed.join(", ")),
    )
}

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let l = 3;
    let params = ModelParams::reference(l).with_j_q_tau(0.1);
    let sched = FftieSchedule::reference(100, 1);
    let init = InitialState::reference();
    let sys = FftieSystem::prepare(&params, &init, &sched).map_err(|e| e.to_string())?;
    let fast = sys.final_state(SEED).map_err(|e| e.to_string())?;
    let basis = SectorBasis::enumerate(ModeLayout::new(l).unwrap(), 1, 2).unwrap();
    let h = build_hamiltonian(&params, &basis).unwrap();
    let start_cfg = Configuration::from_sites(true, 0, 0b11);
    let mut psi = StateVector::basis_state(basis.len(), basis.index_of(&start_cfg).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..sched.n_cycles {
        psi = integrate_reference(&h, &psi, sched.t_h, 1e-3).unwrap();
        let u: Vec<f64> = draw_site_disorder(l, 0.0, 3.0, &mut rng).unwrap();
        for (a, c) in psi.amplitudes.iter_mut().zip(basis.configs()) {
            let e: f64 = (0..l).filter(|&i| c.upsilon_bits >> i & 1 == 1).map(|i| u[i]).sum();
            *a *= Complex::from_polar(1.0, -e * sched.t_random);
        }
    }
    let err = 1.0 - inner(&fast.amplitudes, &psi.amplitudes).norm();
    let secs = start.elapsed().as_secs_f64();
    check(err < 1e-6, format!("overlap error {err:.2e} after 100 cycles (< 1e-6), {secs:.1} s"))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut notes = Vec::new();

    // hermiticity and sector conservation under random parameters
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let l = rng.gen_range(2..=5);
        let mut r = || rng.gen::<f64>() * 4.0 - 2.0;
        let p = ModelParams {
            j_tau: r(),
            j_upsilon: r(),
            u_cross: r(),
            u_q: r(),
            j_q_tau: r(),
            u_tau_site: (0..l).map(|_| r()).collect(),
            u_upsilon_site: (0..l).map(|_| r()).collect(),
        };
        let layout = ModeLayout::new(l).unwrap();
        let nt = rng.gen_range(0..=l + 1);
        let nu = rng.gen_range(0..=l);
        let b = SectorBasis::enumerate(layout, nt, nu).unwrap();
        let h = build_hamiltonian(&p, &b).unwrap();
        worst = worst.max(h.hermiticity_defect());
        // every hop moves one excitation within its own species
        for (row, a) in b.configs().iter().enumerate() {
            for (col, c) in b.configs().iter().enumerate() {
                let v = h.get(row, col);
                if row == col || v == 0.0 {
                    continue;
                }
                let moved = (a.tau_bits ^ c.tau_bits).count_ones() + (a.upsilon_bits ^ c.upsilon_bits).count_ones();
                if moved != 2 || (a.tau_bits != c.tau_bits && a.upsilon_bits != c.upsilon_bits) {
                    return Err(format!("element ({row},{col}) leaves the hopping structure"));
                }
            }
        }
    }
    if worst > 1e-12 {
        return Err(format!("hermiticity defect {worst:e}"));
    }
    notes.push(format!("hermiticity defect {worst:.1e}"));

    // unitarity over 1e5 cycles
    let sched: FftieSchedule<f64> = FftieSchedule::reference(100_000, 100_000);
    let sys = FftieSystem::prepare(&ModelParams::reference(3).with_j_q_tau(0.1), &InitialState::reference(), &sched)
        .map_err(|e| e.to_string())?;
    let drift = (sys.run(SEED).map_err(|e| e.to_string())?.final_norm - 1.0).abs();
    if drift >= 1e-8 {
        return Err(format!("norm drift {drift:e} after 1e5 cycles"));
    }
    notes.push(format!("norm drift {drift:.1e}"));

    // thread-count independence
    let sched = FftieSchedule::reference(500, 5);
    let plus = InitialState {
        qubit: QubitState::Plus,
        ..InitialState::reference()
    };
    let sys = FftieSystem::prepare(&ModelParams::reference(4).with_j_q_tau(0.05), &plus, &sched)
        .map_err(|e| e.to_string())?;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sys.run_ensemble(6, SEED).unwrap())
    };
    if run(1) != run(3) {
        return Err("ensemble differs between 1 and 3 threads".into());
    }
    notes.push("ensembles identical on 1 and 3 threads".into());

    // noiseless fit recovery
    let mut worst_fit = 0.0f64;
    for (a, tau, c) in [(0.875, 6131.4, 0.125), (2.0, 50.0, 0.125), (0.5, 81.7, -0.1)] {
        let t: Vec<f64> = (0..2000).map(|k| k as f64 * tau * 6.0 / 1999.0).collect();
        let v: Vec<f64> = t.iter().map(|x| a * (-x / tau).exp() + c).collect();
        let f = fit_exponential(&t, &v, OffsetMode::Free).map_err(|e| e.to_string())?;
        worst_fit = worst_fit.max((f.time_constant / tau - 1.0).abs());
    }
    if worst_fit >= 1e-6 {
        return Err(format!("fit recovery error {worst_fit:e}"));
    }
    notes.push(format!("fit recovery error {worst_fit:.1e}"));
    Ok(notes.join(", "))
}

fn criterion_12() -> Outcome {
    let t1 = [6131.4, 9430.9, 17764.3, 36730.1, 154159.9];
    let us = [975.88, 1501.01, 2827.45, 5846.01, 24536.80];
    let mut worst = 0.0f64;
    for (t, e) in t1.iter().zip(us) {
        let got = natural_time_to_microseconds(*t, 1.0).map_err(|e| e.to_string())?;
        // independent: one period of a 1 MHz oscillation is 2π natural units
        let oracle = t / (2.0 * std::f64::consts::PI);
        worst = worst.max((got / e - 1.0).abs()).max((got / oracle - 1.0).abs());
    }
    check(worst < 1e-3, format!("worst relative deviation {worst:.2e} (< 1e-3)"))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 12] = [
        (1, criterion_1),
        (2, criterion_2),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (3, criterion_3),
        (4, criterion_4),
        (9, criterion_9),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut results = BTreeMap::new();
    for (n, f) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match &outcome {
            Ok(d) => println!("criterion {n:>2}: PASS  {d}"),
            Err(d) => println!("criterion {n:>2}: FAIL  {d}"),
        }
        results.insert(n, outcome.is_ok());
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|(_, ok)| !**ok)
        .map(|(n, _)| n.to_string())
        .collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
