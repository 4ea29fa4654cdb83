//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line
//! and the process exits nonzero if any fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use compton_swarm::core::detector::{synthesize_cone, DetectorConfig};
use compton_swarm::core::fusion::*;
use compton_swarm::core::geom::*;
use compton_swarm::core::sim::scenario::rng_stream;
use compton_swarm::core::sim::*;
use compton_swarm::montecarlo::{run_batch, summarize, summary_csv, RunResult, Summary};
use compton_swarm::runlog_file::runlog_to_string;
use compton_swarm::scenario_file::load_config;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn config(name: &str) -> ScenarioConfig {
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    load_config(&path).unwrap()
}

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn rng(seed: u64) -> ChaCha8Rng {
    rng_stream(seed, 0xacce)
}

fn random_vec(rng: &mut ChaCha8Rng, range: f64) -> Vec3 {
    Vec3::new(rng.random_range(-range..range), rng.random_range(-range..range), rng.random_range(-range..range))
}

fn random_unit(rng: &mut ChaCha8Rng) -> UnitVec3 {
    loop {
        let v = random_vec(rng, 1.0);
        if v.norm() > 1e-3 {
            return UnitVec3::new_normalize(v);
        }
    }
}

fn random_cone(rng: &mut ChaCha8Rng) -> ComptonCone {
    let apex = random_vec(rng, 20.0);
    let axis = random_unit(rng);
    ComptonCone::new(apex, axis, rng.random_range(0.02..PI - 0.02)).unwrap()
}

fn lateral(c: &ComptonCone, p: &Vec3) -> bool {
    let rel = p - c.apex;
    let axial = rel.dot(&c.axis);
    let radial = (rel - c.axis.into_inner() * axial).norm();
    axial * c.half_angle.cos() + radial * c.half_angle.sin() > 0.0
}

fn sampled_min_distance(c: &ComptonCone, p: &Vec3, n: usize, reach: f64, rng: &mut ChaCha8Rng) -> f64 {
    let e1 = perpendicular_to(&c.axis);
    let e2 = c.axis.cross(&e1);
    let (st, ct) = c.half_angle.sin_cos();
    let mut best = (p - c.apex).norm();
    for _ in 0..n {
        let s = rng.random::<f64>() * reach;
        let (sa, ca) = rng.random_range(0.0..2.0 * PI).sin_cos();
        let q = c.apex + (e1 * ca + e2 * sa) * (s * st) + c.axis.into_inner() * (s * ct);
        best = best.min((q - p).norm());
    }
    best
}

fn criterion_1() -> Outcome {
    const CASES: usize = 1000;
    let mut r = rng(1);
    let (mut on_surface, mut orthogonal, mut consistent, mut optimal) = (0, 0, 0, 0);
    let mut lateral_cases = 0;
    for _ in 0..CASES {
        let c = random_cone(&mut r);
        let p = random_vec(&mut r, 40.0);
        let z = project_point_onto_cone(&c, &p);

        let ok = if lateral(&c, &p) && (z - c.apex).norm() > 1e-9 {
            (angle_between(&(z - c.apex), &c.axis) - c.half_angle).abs() < 1e-9
        } else {
            z == c.apex
        };
        on_surface += ok as usize;

        if lateral(&c, &p) {
            lateral_cases += 1;
            let w = c.generator_towards(&p);
            orthogonal += ((z - p).dot(&w).abs() <= 1e-9 * (p - c.apex).norm().max(1.0)) as usize;
        }

        let d = point_cone_surface_distance(&c, &p);
        consistent += (d >= 0.0 && (d - (z - p).norm()).abs() < 1e-9) as usize;

        let reach = 2.0 * (p - c.apex).norm() + 1.0;
        optimal += ((z - p).norm() <= sampled_min_distance(&c, &p, 100_000, reach, &mut r) + 1e-3) as usize;
    }
    let pass = on_surface == CASES && orthogonal == lateral_cases && consistent == CASES && optimal == CASES && lateral_cases >= CASES / 4;
    outcome(
        pass,
        format!(
            "{CASES} cases: on-surface {on_surface}, orthogonal {orthogonal}/{lateral_cases} lateral, distance {consistent}, optimal vs 1e5 samples {optimal}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let e = 100.0 + 2900.0 * i as f64 / 99.0;
        for j in 0..100 {
            let theta = 0.01 + (PI - 0.02) * j as f64 / 99.0;
            let photon = photon_energy_after_scatter(Energy::kev(e).unwrap(), theta);
            let back = scattering_angle(Energy::kev(e - photon.value()).unwrap(), photon).unwrap();
            worst = worst.max((back - theta).abs());
        }
    }
    outcome(worst < 1e-9, format!("100x100 grid over 100..3000 keV, worst |dtheta| = {worst:.2e} rad (tol 1e-9)"))
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let cfg = FusionConfig::default();
    let (mut worst_ev, mut worst_align): (f64, f64) = (0.0, 0.0);
    let mut cases = 0;
    while cases < 1000 {
        let cone = random_cone(&mut r);
        let h = Hypothesis::new(random_vec(&mut r, 40.0), cfg.p0);
        let (z, cov, axis) = measurement_from_cone(&h, &cone, &cfg);
        let step = z - h.x;
        if step.norm() < 1e-6 {
            continue;
        }
        cases += 1;
        let eig = cov.symmetric_eigen();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let expected = [cfg.rho, cfg.rho * 1e4, cfg.rho * 1e4];
        for (k, want) in order.iter().zip(expected) {
            worst_ev = worst_ev.max(((eig.eigenvalues[*k] - want) / want).abs());
        }
        let tight = eig.eigenvectors.column(order[0]).into_owned();
        let sin_to_step = tight.cross(&step.normalize()).norm();
        let sin_to_axis = tight.cross(&axis).norm();
        worst_align = worst_align.max(sin_to_step).max(sin_to_axis);
    }
    outcome(
        worst_ev < 1e-9 && worst_align < 1e-6,
        format!("{cases} cones: worst eigenvalue rel. error {worst_ev:.1e} (tol 1e-9), tight axis vs projection sin {worst_align:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let noiseless = DetectorConfig { angular_noise_sigma: 0.0, ..Default::default() };
    let cfg = FusionConfig::default();
    let truth = Vec3::new(10.0, -5.0, 0.0);
    let mut r = rng(4);

    let start = Instant::now();
    let mut h = Hypothesis::new(Vec3::zeros(), cfg.p0);
    for k in 0..200 {
        let a = 2.0 * PI * k as f64 / 25.0;
        let pose = Pose::from_heading(Vec3::new(truth.x + 12.0 * a.cos(), truth.y + 12.0 * a.sin(), 4.0), a + PI);
        h = fuse_cone(&h, &synthesize_cone(&truth, &pose, &noiseless, &mut r), &cfg).unwrap();
    }
    let lkf_time = start.elapsed().as_secs_f64();
    let lkf_err = (h.x - truth).norm();

    let truth = Vec3::new(30.0, 40.0, 0.0);
    let cones: Vec<_> = (0..20)
        .map(|_| {
            let pose = Pose::from_heading(Vec3::new(r.random_range(0.0..100.0), r.random_range(0.0..100.0), 4.0), r.random_range(-PI..PI));
            synthesize_cone(&truth, &pose, &noiseless, &mut r)
        })
        .collect();
    let start = Instant::now();
    let bounds = Bounds::new(Vec3::zeros(), Vec3::new(100.0, 100.0, 8.0));
    let x0 = init_hypothesis_nlls(&cones, 20, &bounds, &NllsConfig::default());
    let nlls_time = start.elapsed().as_secs_f64();
    let nlls_err = x0.map(|x| (x - truth).norm()).unwrap_or(f64::INFINITY);

    outcome(
        lkf_err < 0.5 && nlls_err < 0.5 && lkf_time < 5.0 && nlls_time < 5.0,
        format!("LKF 200 cones error {lkf_err:.3} m in {lkf_time:.3} s; NLLS 20 cones error {nlls_err:.3} m in {nlls_time:.3} s (tol 0.5 m, 5 s)"),
    )
}

fn criterion_5() -> Outcome {
    let cfg = FormationConfig::default();
    let trace = run_formation(&cfg, 0);
    let v = cfg.flock.v;
    let settled = |k: usize| trace.speeds[k].iter().all(|s| (s - v).abs() <= 0.05 * v) && trace.spacing[k].iter().all(|e| *e < 0.1);
    let segments = (cfg.duration / cfg.step_period).round() as usize;
    let mut settle_times = Vec::new();
    let mut pass = cfg.n_agents == 5;
    for s in 0..segments {
        let (begin, end) = (s as f64 * cfg.step_period, (s + 1) as f64 * cfg.step_period);
        let idx: Vec<usize> = (0..trace.times.len()).filter(|&k| trace.times[k] >= begin && trace.times[k] < end).collect();
        // Earliest sample after which the swarm stays within tolerance.
        let last_bad = idx.iter().rposition(|&k| !settled(k));
        match last_bad {
            None => settle_times.push(0.0),
            Some(p) if p + 1 < idx.len() => settle_times.push(trace.times[idx[p + 1]] - begin),
            Some(_) => {
                pass = false;
                settle_times.push(f64::INFINITY);
            }
        }
    }
    let deterministic = trace == run_formation(&cfg, 0);
    let shown: Vec<String> = settle_times.iter().map(|t| format!("{t:.1}")).collect();
    outcome(
        pass && deterministic,
        format!("N=5, 10 m step every 60 s: settled after [{}] s of each segment (speed 5%, spacing 0.1 rad), deterministic {deterministic}", shown.join(", ")),
    )
}

struct Sweep {
    swarm_static: Summary,
    solo_static: Summary,
    swarm_moving: Summary,
    solo_moving: Summary,
    swarm_moving_runs: Vec<RunResult>,
    wall: f64,
    realtime_factor: f64,
}

fn sweep() -> Sweep {
    let start = Instant::now();
    let batch = |name: &str| run_batch(&config(name), SEEDS, 0, jobs(), None).unwrap();
    let swarm_static = summarize(&batch("paper_table2_swarm"));
    let solo_static = summarize(&batch("paper_table2_solo"));
    let swarm_moving_runs = batch("paper_table2_swarm_moving");
    let solo_moving = summarize(&batch("paper_table2_solo_moving"));
    let wall = start.elapsed().as_secs_f64();

    // One full-length scenario on a single thread.
    let t = Instant::now();
    let log = run_scenario(&config("paper_table2_swarm_moving"), 0).unwrap();
    let simulated = log.termination().map(|(t, _)| t).unwrap_or(0.0);
    let realtime_factor = simulated / t.elapsed().as_secs_f64();

    Sweep { swarm_static, solo_static, swarm_moving: summarize(&swarm_moving_runs), solo_moving, swarm_moving_runs, wall, realtime_factor }
}

fn ratio(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) if b > 0.0 => a / b,
        _ => f64::NAN,
    }
}

fn fmt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
}

fn criterion_6(s: &Sweep) -> Vec<(&'static str, Outcome)> {
    let ttx_static = ratio(s.swarm_static.time_to_x0_median, s.solo_static.time_to_x0_median);
    let ttx_moving = ratio(s.swarm_moving.time_to_x0_median, s.solo_moving.time_to_x0_median);
    let err = ratio(s.swarm_moving.error_median, s.solo_moving.error_median);
    let track = ratio(s.swarm_moving.tracking_time_avg, s.solo_moving.tracking_time_avg);
    let capped = s.swarm_moving.tracking_complete;
    vec![
        (
            "6a",
            outcome(
                ttx_static <= 0.5 && ttx_moving <= 0.5,
                format!(
                    "median time-to-x0 swarm/solo: static {} / {} s = {ttx_static:.2}, moving {} / {} s = {ttx_moving:.2} (need <= 0.5)",
                    fmt(s.swarm_static.time_to_x0_median),
                    fmt(s.solo_static.time_to_x0_median),
                    fmt(s.swarm_moving.time_to_x0_median),
                    fmt(s.solo_moving.time_to_x0_median)
                ),
            ),
        ),
        (
            "6b",
            outcome(
                err <= 0.5,
                format!(
                    "moving pooled error median swarm {} m vs solo {} m = {err:.2} (need <= 0.5)",
                    fmt(s.swarm_moving.error_median),
                    fmt(s.solo_moving.error_median)
                ),
            ),
        ),
        (
            "6c",
            outcome(
                track >= 2.0 && 2 * capped >= s.swarm_moving.runs,
                format!(
                    "moving mean tracking swarm {} s vs solo {} s = {track:.2} (need >= 2); {capped}/{} swarm runs reach 180 s",
                    fmt(s.swarm_moving.tracking_time_avg),
                    fmt(s.solo_moving.tracking_time_avg),
                    s.swarm_moving.runs
                ),
            ),
        ),
        (
            "6d",
            outcome(
                s.swarm_static.error_median.is_some_and(|e| e <= 5.0),
                format!("static swarm pooled error median {} m (need <= 5)", fmt(s.swarm_static.error_median)),
            ),
        ),
        (
            "6 timing",
            outcome(
                s.wall < 900.0 && s.realtime_factor >= 20.0,
                format!("2x2 sweep of {SEEDS} seeds in {:.1} s on {} threads; one scenario at {:.0}x real time", s.wall, jobs(), s.realtime_factor),
            ),
        ),
    ]
}

fn criterion_7(s: &Sweep) -> Outcome {
    let sustained = s.swarm_moving_runs.iter().filter(|r| matches!(&r.outcome, Ok(m) if m.termination_reason == Some(TerminationReason::TrackingComplete))).count();
    let mut fast = config("paper_table2_solo_moving");
    if let SourceMotion::Circular { speed, .. } = &mut fast.source.motion {
        *speed = 3.0;
    }
    let solo_fast = summarize(&run_batch(&fast, SEEDS, 0, jobs(), None).unwrap());
    let n = SEEDS as usize;
    outcome(
        2 * sustained > n && 2 * solo_fast.target_lost > n,
        format!("N=3 at 1 m/s sustains tracking in {sustained}/{n} seeds; N=1 at 3 m/s loses the source in {}/{n}", solo_fast.target_lost),
    )
}

fn criterion_8() -> Outcome {
    let cfg = config("paper_table2_swarm_moving");
    let a = runlog_to_string(&run_scenario(&cfg, 11).unwrap());
    let b = runlog_to_string(&run_scenario(&cfg, 11).unwrap());
    let single = summary_csv(&summarize(&run_batch(&cfg, 8, 30, 1, None).unwrap())).unwrap();
    let pooled = summary_csv(&summarize(&run_batch(&cfg, 8, 30, jobs().max(4), None).unwrap())).unwrap();
    outcome(
        a == b && single == pooled,
        format!("runlog {} bytes identical: {}; summary.csv with 1 vs {} workers identical: {}", a.len(), a == b, jobs().max(4), single == pooled),
    )
}

fn hypotheses(log: &RunLog) -> Vec<(f64, Option<u32>, Vec3)> {
    log.iter()
        .filter_map(|r| match r.body {
            RecordBody::Hypothesis { x, .. } => Some((r.t, r.agent_id, x)),
            _ => None,
        })
        .collect()
}

/// Detections from a world-frame run are replayed into agents with random
/// rigid frames; their estimates, mapped back, must match the original.
fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    let mut pass = true;
    for name in ["paper_table2_swarm", "paper_table2_swarm_moving"] {
        for seed in 0..3 {
            let mut cfg = config(name);
            let plain = run_scenario(&cfg, seed).unwrap();
            cfg.heterogeneous_frames = true;
            pass &= agent_frames(&cfg, seed).iter().all(|f| !f.is_identity());
            let mixed = replay_scenario(&cfg, seed, &logged_events(&plain)).unwrap();
            let (ha, hb) = (hypotheses(&plain), hypotheses(&mixed));
            pass &= ha.len() == hb.len() && !ha.is_empty();
            for (x, y) in ha.iter().zip(&hb) {
                pass &= (x.0, x.1) == (y.0, y.1);
                worst = worst.max((x.2 - y.2).norm());
            }
            compared += ha.len();
        }
    }
    outcome(pass && worst < 1e-6, format!("{compared} hypotheses over 6 replayed runs: worst world-frame difference {worst:.2e} m (tol 1e-6)"))
}

fn main() {
    let mut failed = Vec::new();
    let mut report = |id: &str, title: &str, t: Instant, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {status} {title}: {} [{:.1} s]", o.detail, t.elapsed().as_secs_f64());
        if !o.pass {
            failed.push(id.to_string());
        }
    };

    let t = Instant::now();
    report("1", "geometry oracles", t, criterion_1());
    let t = Instant::now();
    report("2", "scattering round trip", t, criterion_2());
    let t = Instant::now();
    report("3", "covariance structure", t, criterion_3());
    let t = Instant::now();
    report("4", "static convergence", t, criterion_4());
    let t = Instant::now();
    report("5", "flocking stabilization", t, criterion_5());
    let t = Instant::now();
    let s = sweep();
    for (id, o) in criterion_6(&s) {
        report(id, "swarm vs solo", t, o);
    }
    let t = Instant::now();
    report("7", "tracking speed limit", t, criterion_7(&s));
    let t = Instant::now();
    report("8", "determinism", t, criterion_8());
    let t = Instant::now();
    report("9", "frame heterogeneity", t, criterion_9());

    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
