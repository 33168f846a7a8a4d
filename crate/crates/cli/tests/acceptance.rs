//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits nonzero when any criterion fails. Pass criterion numbers as
//! arguments to run a subset: `cargo test --test acceptance -- 1 7`.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Instant;

use objbounds::design::{generate_design, truth_profile, DesignSpec};
use objbounds::effects::quantile_band;
use objbounds::io::{Embedding, Space};
use objbounds::pipeline::{analyze, RunConfig, Stage};
use objbounds::rng::{derive_seed, DOMAIN_SIMULATION};
use objbounds::{
    aitchison_embed, aitchison_inverse, build_region, check_laplacian, contaminated_profile, embedded_distance, estimate_p, interval_embed,
    interval_inverse, lp_support_oracle, quantile_embed, sphere_barycenter, sphere_embed, sphere_inverse, spd_embed,
    spd_inverse, trimmed_support, vertices_2d, BootstrapConfig, CompositionPoint, DirectionGrid, EmbeddedDataset,
    GridScheme, IntervalPoint, LaplacianPoint, ProbabilityGrid, SpdMode, SpdPoint, TrimFraction, Unit,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lattice_or_uniform(rng: &mut ChaCha8Rng, ties: bool) -> f64 {
    if ties {
        rng.random_range(-6i32..=6) as f64 / 2.0
    } else {
        rng.random_range(-5.0..5.0)
    }
}

fn lp_oracle_sharpness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut values = 0usize;
    for i in 0..1000 {
        let d = rng.random_range(1..=3usize);
        let n = rng.random_range(5..=200usize);
        let p = TrimFraction::new([0.3, 0.5, 0.9, 1.0][rng.random_range(0..4)]).unwrap();
        let ties = i % 3 == 0;
        let units = (0..n)
            .map(|j| Unit::new(format!("{j}"), true, Some((0..d).map(|_| lattice_or_uniform(&mut rng, ties)).collect())))
            .collect();
        let data = EmbeddedDataset::new(units, d).unwrap();
        let grid = DirectionGrid::new(d, GridScheme::auto(d), 60, i).unwrap();
        for u in grid.directions() {
            let a = trimmed_support(&data, u, p).unwrap();
            let b = lp_support_oracle(&data, u, p).unwrap();
            worst = worst.max((a - b).abs());
            values += 1;
        }
    }
    outcome(worst <= 1e-10, format!("1000 datasets, {values} directions, max |trimmed - LP| = {worst:.2e} (tol 1e-10)"))
}

/// Lee bounds as integrals of the empirical quantile function
/// `Q(t) = y_(ceil(n t))` over `[0, p]` and `[1 - p, 1]`.
fn direct_lee_bounds(y: &[f64], p: f64) -> (f64, f64) {
    let mut y = y.to_vec();
    y.sort_by(f64::total_cmp);
    let n = y.len() as f64;
    let integral = |a: f64, b: f64| -> f64 {
        y.iter()
            .enumerate()
            .map(|(i, v)| {
                let (lo, hi) = (i as f64 / n, (i + 1) as f64 / n);
                v * (hi.min(b) - lo.max(a)).max(0.0)
            })
            .sum()
    };
    (integral(0.0, p) / p, integral(1.0 - p, 1.0) / p)
}

fn scalar_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let config = RunConfig { space: Space::Scalar, ..RunConfig::default() };
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = rng.random_range(20..=400usize);
        let rt = rng.random_range(0.5..1.0);
        let rc = rng.random_range(0.3..1.0);
        let mut raw = generate_design(&DesignSpec::custom(n, rt, rc), i).unwrap();
        if i % 2 == 0 {
            for u in raw.units.iter_mut().filter(|u| u.selected) {
                u.values = vec![lattice_or_uniform(&mut rng, true)];
            }
        }
        let Ok(analysis) = analyze(&config, &raw, Stage::Estimate) else { continue };
        let count = |t: bool, s: bool| raw.units.iter().filter(|u| u.treated == t && (!s || u.selected)).count() as f64;
        let p = ((count(false, true) / count(false, false)) / (count(true, true) / count(true, false))).min(1.0);
        let y: Vec<f64> = raw.units.iter().filter(|u| u.treated && u.selected).map(|u| u.values[0]).collect();
        let (lo, hi) = direct_lee_bounds(&y, p);
        let (plo, phi) = analysis.region.project_interval(0).unwrap();
        worst = worst.max((lo - plo).abs()).max((hi - phi).abs());
    }
    outcome(worst <= 1e-10, format!("100 datasets, max bound discrepancy {worst:.2e} (tol 1e-10)"))
}

#[derive(Default)]
struct Tally {
    checks: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn error(&mut self, err: f64, tol: f64) {
        self.checks += 1;
        self.worst = self.worst.max(err);
        if !(err <= tol) {
            self.failures += 1;
        }
    }
    fn holds(&mut self, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
        }
    }
}

fn random_composition(rng: &mut ChaCha8Rng, k: usize, zeros: bool) -> CompositionPoint {
    loop {
        let w: Vec<f64> = (0..k)
            .map(|_| if zeros && rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.01..10.0) })
            .collect();
        if w.iter().any(|v| *v > 0.0) {
            return CompositionPoint::closure(&w).unwrap();
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_spd(rng: &mut ChaCha8Rng, m: usize) -> SpdPoint {
    let a: Vec<f64> = (0..m * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut s = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            s[i * m + j] = (0..m).map(|l| a[i * m + l] * a[j * m + l]).sum::<f64>() + if i == j { 0.1 } else { 0.0 };
        }
    }
    for i in 0..m {
        for j in 0..i {
            s[i * m + j] = s[j * m + i];
        }
    }
    SpdPoint::new(m, s).unwrap()
}

fn random_laplacian(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut w = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..i {
            let v = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) };
            w[i * m + j] = v;
            w[j * m + i] = v;
        }
    }
    LaplacianPoint::from_weights(m, &w).entries
}

fn mix(v: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    v.iter().zip(w).map(|(a, b)| (1.0 - t) * a + t * b).collect()
}

fn embedding_invariants() -> Outcome {
    const TS: [f64; 3] = [0.25, 0.5, 0.75];
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let grid = ProbabilityGrid::regular(0.10, 0.90, 0.05).unwrap();
    let (mut round_trip, mut isometry, mut membership, mut convexity) =
        (Tally::default(), Tally::default(), Tally::default(), Tally::default());
    let mut sphere_pairs = Tally::default();
    let mut sphere_radial = Tally::default();

    for _ in 0..10_000 {
        // compositions under the Aitchison metric
        let k = rng.random_range(3..=6);
        let (x, y) = (random_composition(&mut rng, k, false), random_composition(&mut rng, k, false));
        let (vx, vy) = (aitchison_embed(&x).unwrap(), aitchison_embed(&y).unwrap());
        round_trip.error(max_abs_diff(aitchison_inverse(&vx).unwrap().parts(), x.parts()), 1e-10);
        let mut lr = 0.0;
        for i in 0..k {
            for j in 0..k {
                lr += ((x.parts()[i] / x.parts()[j]).ln() - (y.parts()[i] / y.parts()[j]).ln()).powi(2);
            }
        }
        isometry.error((embedded_distance(&vx, &vy).unwrap() - (lr / (2.0 * k as f64)).sqrt()).abs(), 1e-8);
        membership.holds(vx.iter().sum::<f64>().abs() <= 1e-10);
        for t in TS {
            convexity.holds(mix(&vx, &vy, t).iter().sum::<f64>().abs() <= 1e-8);
        }

        // compositions with zeros on the sphere
        let mu = sphere_barycenter(k);
        let (x, y) = (random_composition(&mut rng, k, true), random_composition(&mut rng, k, true));
        let (vx, vy) = (sphere_embed(&x, &mu).unwrap(), sphere_embed(&y, &mu).unwrap());
        round_trip.error(max_abs_diff(sphere_inverse(&vx, &mu).unwrap().parts(), x.parts()), 1e-10);
        let geodesic = |a: &CompositionPoint, b: &CompositionPoint| {
            a.parts().iter().zip(b.parts()).map(|(p, q)| (p * q).sqrt()).sum::<f64>().clamp(-1.0, 1.0).acos()
        };
        let err = (embedded_distance(&vx, &vy).unwrap() - geodesic(&x, &y)).abs();
        isometry.error(err, 1e-8);
        sphere_pairs.error(err, 1e-8);
        let bary = CompositionPoint::new(mu.iter().map(|m| m * m).collect()).unwrap();
        sphere_radial.error((embedded_distance(&vx, &vec![0.0; k]).unwrap() - geodesic(&x, &bary)).abs(), 1e-8);
        membership.holds(dot(&mu, &vx).abs() <= 1e-10);
        for t in TS {
            convexity.holds(dot(&mu, &mix(&vx, &vy, t)).abs() <= 1e-8);
        }

        // intervals
        let (a, b): (f64, f64) = (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let (ix, iy) = (IntervalPoint::new(a.min(b), a.max(b)).unwrap(), IntervalPoint::new(a, a + rng.random_range(0.0..5.0)).unwrap());
        let (vx, vy) = (interval_embed(&ix).unwrap(), interval_embed(&iy).unwrap());
        let back = interval_inverse(&vx).unwrap();
        round_trip.error((back.lower - ix.lower).abs().max((back.upper - ix.upper).abs()), 1e-10);
        let native = ((ix.lower - iy.lower).powi(2) + (ix.upper - iy.upper).powi(2)).sqrt();
        isometry.error((embedded_distance(&vx, &vy).unwrap() - native).abs(), 1e-8);
        membership.holds(vx[0] + vx[1] >= 0.0);
        for t in TS {
            let m = mix(&vx, &vy, t);
            convexity.holds(m[0] + m[1] >= -1e-8);
        }

        // distributions through quantile curves
        let draws = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let n = rng.random_range(1..=40);
            let loc = rng.random_range(-5.0..5.0);
            (0..n).map(|_| loc + rng.random_range(-2.0..2.0)).collect()
        };
        let (qx, qy) = (quantile_embed(&draws(&mut rng), &grid).unwrap(), quantile_embed(&draws(&mut rng), &grid).unwrap());
        let back = objbounds::QuantileCurve::new(grid.clone(), qx.embed().into_inner()).unwrap();
        round_trip.error(max_abs_diff(&back.values, &qx.values), 1e-10);
        let sq: Vec<f64> = qx.values.iter().zip(&qy.values).map(|(a, b)| (a - b).powi(2)).collect();
        let trapezoid: f64 = grid.points().windows(2).zip(sq.windows(2)).map(|(q, f)| (q[1] - q[0]) * (f[0] + f[1]) / 2.0).sum();
        isometry.error((qx.distance(&qy).unwrap() - trapezoid.sqrt()).abs(), 1e-8);
        membership.holds(qx.values.windows(2).all(|w| w[0] <= w[1]));
        for t in TS {
            convexity.holds(mix(&qx.values, &qy.values, t).windows(2).all(|w| w[0] <= w[1] + 1e-8));
        }

        // symmetric positive definite matrices
        let m = rng.random_range(2..=4);
        let s = random_spd(&mut rng, m);
        for mode in [SpdMode::Log, SpdMode::Power(rng.random_range(0.25..2.0))] {
            let back = spd_inverse(&spd_embed(&s, mode).unwrap(), mode).unwrap();
            round_trip.error(max_abs_diff(&back.entries, &s.entries), 1e-10);
        }

        // graph Laplacians
        let m = rng.random_range(3..=5);
        let (lx, ly) = (random_laplacian(&mut rng, m), random_laplacian(&mut rng, m));
        membership.holds(check_laplacian(m, &lx, 1.0).is_ok() && check_laplacian(m, &ly, 1.0).is_ok());
        for t in TS {
            convexity.holds(check_laplacian(m, &mix(&lx, &ly, t), 1.0).is_ok());
        }
    }

    let line = |name: &str, t: &Tally| format!("  {name}: {} checks, {} failures, max error {:.2e}", t.checks, t.failures, t.worst);
    println!("{}", line("round-trip (tol 1e-10)", &round_trip));
    println!("{}", line("isometry (tol 1e-8)", &isometry));
    println!("{}", line("  of which sphere pairs", &sphere_pairs));
    println!("{}", line("  sphere distance to the reference point (info)", &sphere_radial));
    println!("{}", line("image membership", &membership));
    println!("{}", line("image convexity", &convexity));
    let failures = round_trip.failures + isometry.failures + membership.failures + convexity.failures;
    outcome(failures == 0, format!("10000 randomized inputs per space, {failures} failed checks"))
}

fn atus_config(seed: u64) -> RunConfig {
    RunConfig { seed, ..RunConfig::default() }
}

fn no_effect_containment() -> Outcome {
    const M: u64 = 200;
    let spec = DesignSpec::atus_like(1397, 0.90, 0.85);
    let (mut in_set, mut in_region) = (0usize, 0usize);
    for r in 0..M {
        let seed = derive_seed(404, DOMAIN_SIMULATION, r);
        let raw = generate_design(&spec, seed).unwrap();
        let a = analyze(&atus_config(seed), &raw, Stage::Infer).unwrap();
        let mu0 = a.mu0.as_ref().unwrap();
        in_set += a.region.contains(mu0, 0.0).unwrap() as usize;
        in_region += a.inference.as_ref().unwrap().region.contains(mu0, 0.0).unwrap() as usize;
    }
    let (s, r) = (in_set as f64 / M as f64, in_region as f64 / M as f64);
    outcome(
        s >= 0.90 && r >= 0.97,
        format!("{M} replications: control mean in estimated set {s:.3} (need >= 0.90), in 95% region {r:.3} (need >= 0.97)"),
    )
}

fn bootstrap_coverage() -> Outcome {
    const M: usize = 200;
    let spec = DesignSpec::atus_like(1000, 0.90, 0.85);
    let grid = DirectionGrid::new(3, GridScheme::Fibonacci, 200, 0).unwrap();
    let truth = truth_profile(&spec, &grid, 1_000_000, 505, None).unwrap();
    let config = BootstrapConfig { replications: 300, alpha: 0.05, seed: 506, joint: false, ..BootstrapConfig::default() };
    let summary = objbounds::coverage::coverage_simulation(
        |r| generate_design(&spec, derive_seed(507, DOMAIN_SIMULATION, r as u64))?.embed(&Embedding::Aitchison),
        &truth.sigma,
        &grid,
        M,
        &config,
    )
    .unwrap();
    outcome(
        (0.90..=0.99).contains(&summary.coverage),
        format!("n=1000, B=300, M={M}: coverage {:.3} (need [0.90, 0.99]), mean cv {:.3}", summary.coverage, summary.mean_critical_value),
    )
}

fn monotone_widening() -> Outcome {
    let seed = 606;
    let project = |rc: f64| {
        let raw = generate_design(&DesignSpec::atus_like(1397, 0.90, rc), seed).unwrap();
        let a = analyze(&atus_config(seed), &raw, Stage::Estimate).unwrap();
        (a.profile.p.p_hat, a.region.project_all().unwrap())
    };
    let ((p_mild, mild), (p_strong, strong)) = (project(0.85), project(0.70));
    let strict = mild.iter().zip(&strong).all(|((lo, hi), (wlo, whi))| wlo < lo && hi < whi);
    let describe = |v: &[(f64, f64)]| v.iter().map(|(a, b)| format!("[{a:.4}, {b:.4}]")).collect::<Vec<_>>().join(" ");
    println!("  p_hat {p_mild:.4}: {}", describe(&mild));
    println!("  p_hat {p_strong:.4}: {}", describe(&strong));
    outcome(strict, "clr projection intervals strictly contain the milder-attrition intervals".to_string())
}

fn retention_dataset(n: usize, treated_kept: usize, control_kept: usize) -> EmbeddedDataset {
    let mut units = Vec::new();
    for i in 0..n {
        units.push(Unit::new(format!("t{i}"), true, (i < treated_kept).then(|| vec![0.0])));
        units.push(Unit::new(format!("c{i}"), false, (i < control_kept).then(|| vec![0.0])));
    }
    EmbeddedDataset::new(units, 1).unwrap()
}

fn trimming_arithmetic() -> Outcome {
    let sleep = TrimFraction::from_retention(1.0 - 0.125, 1.0 - 0.107).unwrap().p_hat;
    let atus = TrimFraction::from_retention(0.85, 0.90).unwrap().p_hat;
    let sleep_counts = estimate_p(&retention_dataset(1000, 893, 875)).unwrap().p_hat;
    let atus_counts = estimate_p(&retention_dataset(1000, 900, 850)).unwrap().p_hat;
    let ok = (sleep - 0.97984).abs() <= 1e-5
        && (atus - 0.94444).abs() <= 1e-5
        && (sleep_counts - 0.97984).abs() <= 1e-5
        && (atus_counts - 0.94444).abs() <= 1e-5;
    outcome(ok, format!("{sleep:.6} (0.97984), {atus:.6} (0.94444); from counts {sleep_counts:.6}, {atus_counts:.6}"))
}

fn band_rate(n: usize, reps: u64, base: u64) -> (usize, usize, usize) {
    let spec = DesignSpec::sleep_like(n);
    let config = RunConfig { space: Space::Distribution, ..RunConfig::default() };
    let grid = ProbabilityGrid::new(config.eval_grid.clone()).unwrap();
    let (mut monotone, mut ordered, mut contains) = (0, 0, 0);
    for r in 0..reps {
        let seed = derive_seed(base, DOMAIN_SIMULATION, r);
        let raw = generate_design(&spec, seed).unwrap();
        let a = analyze(&RunConfig { seed, ..config.clone() }, &raw, Stage::Estimate).unwrap();
        let band = quantile_band(&a.region, &grid).unwrap();
        monotone += band.is_monotone() as usize;
        ordered += band.lower.iter().zip(&band.upper).all(|(l, u)| l <= u) as usize;
        contains += band.contains_curve(a.mu0.as_ref().unwrap(), 0.0) as usize;
    }
    (monotone, ordered, contains)
}

fn distributional_band() -> Outcome {
    const REPS: u64 = 100;
    let (monotone, ordered, contains) = band_rate(302, REPS, 808);
    let (_, _, large) = band_rate(20_000, 20, 809);
    println!("  info: n=20000 over 20 replications contains the control curve in {large}/20");
    outcome(
        monotone == REPS as usize && ordered == REPS as usize && contains as f64 >= 0.90 * REPS as f64,
        format!("n=302, k=17, {REPS} replications: monotone {monotone}, L <= U {ordered}, contains control curve {contains} (need >= 90)"),
    )
}

fn contamination_nesting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut singleton_err: f64 = 0.0;
    let mut violations = 0usize;
    for i in 0..100u64 {
        let d = rng.random_range(1..=3usize);
        let n = rng.random_range(10..=150usize);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| lattice_or_uniform(&mut rng, i % 2 == 0)).collect()).collect();
        let grid = DirectionGrid::new(d, GridScheme::auto(d), 64, i).unwrap();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let run = |lambda: f64| build_region(&contaminated_profile(&refs, &grid, lambda).unwrap()).unwrap();
        let mut mean = vec![0.0; d];
        for r in &rows {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n as f64);
        }
        let zero = run(0.0);
        for (u, o) in zero.directions().iter().zip(zero.offsets()) {
            singleton_err = singleton_err.max((o - dot(u, &mean)).abs());
        }
        if d == 2 {
            let poly = vertices_2d(&zero).unwrap();
            for v in &poly.vertices {
                singleton_err = singleton_err.max(max_abs_diff(v, &mean));
            }
        }
        let mut lambdas: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..0.6)).collect();
        lambdas.push(0.0);
        lambdas.sort_by(f64::total_cmp);
        let regions: Vec<_> = lambdas.iter().map(|l| run(*l)).collect();
        for pair in regions.windows(2) {
            if !pair[0].offsets_within(&pair[1]).unwrap() {
                violations += 1;
            }
            for _ in 0..50 {
                let probe: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
                if pair[0].contains(&probe, 0.0).unwrap() && !pair[1].contains(&probe, 0.0).unwrap() {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        singleton_err <= 1e-12 && violations == 0,
        format!("100 datasets: lambda=0 distance to sample mean {singleton_err:.2e}, nesting violations {violations}"),
    )
}

fn run_cli(args: &[&str], threads: usize) -> bool {
    Command::new(env!("CARGO_BIN_EXE_objbounds"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .stdout(Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut reports: Vec<(usize, Vec<u8>)> = Vec::new();
    for threads in [1usize, 4, 8] {
        for run in 0..2 {
            let out = dir.path().join(format!("t{threads}-{run}"));
            let data = out.join("data.csv");
            let (out_s, data_s) = (out.to_str().unwrap(), data.to_str().unwrap());
            let t = threads.to_string();
            let ok = run_cli(&["simulate", "--design", "atus-like", "--seed", "42", "--out-dir", out_s, "--threads", &t], threads)
                && run_cli(&["infer", "--data", data_s, "--seed", "42", "--out-dir", out_s, "--threads", &t], threads);
            if !ok {
                return outcome(false, format!("command failed with {threads} threads"));
            }
            reports.push((threads, std::fs::read(Path::new(&out).join("region.json")).unwrap()));
        }
    }
    let identical = reports.iter().all(|(_, r)| *r == reports[0].1);
    outcome(identical, format!("{} runs over thread counts 1, 4, 8: region.json byte-identical = {identical}", reports.len()))
}

type Criterion = (u32, &'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "support function matches the LP optimum", lp_oracle_sharpness),
    (2, "scalar pipeline reproduces Lee bounds", scalar_reduction),
    (3, "embedding round-trip, isometry and image invariants", embedding_invariants),
    (4, "no-effect containment of the control mean", no_effect_containment),
    (5, "bootstrap coverage of the identified set", bootstrap_coverage),
    (6, "stronger attrition widens projections", monotone_widening),
    (7, "trimming-fraction arithmetic", trimming_arithmetic),
    (8, "distributional band on the sleep-like design", distributional_band),
    (9, "contamination nesting", contamination_nesting),
    (10, "byte-identical reports across thread counts", determinism),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status}: {name}: {} [{:.1}s]", result.detail, start.elapsed().as_secs_f64());
        if !result.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
