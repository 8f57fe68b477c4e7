//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use droplet_core::diagnostics::wigner_unchecked;
use droplet_core::{
    evolve, full_wavefunction, mu_of_norm, norm_of_mu, shannon_entropy, stability_run, stationary_profile,
    stationary_residual, wigner, ComplexField, DropletParams, DropletState, EvolutionConfig, EvolutionRecord,
    KineticConvention, MomentumWindow, PotentialSpec, SpatialGrid,
};
use droplet_fall::presets::{preset_steps, Step};
use droplet_fall::run::entropy_of_analytic;
use droplet_fall::{run_preset, RunConfig, PRESETS};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DX: f64 = 0.0488;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, detail: String) -> Outcome {
    let s = elapsed.as_secs_f64();
    if s < limit_s {
        Ok(format!("{detail}; {s:.2} s"))
    } else {
        Err(format!("{detail}; runtime {s:.2} s exceeds {limit_s} s"))
    }
}

fn caption_droplet() -> DropletParams {
    DropletParams::from_signed_figure_set(-2.0 / 9.0, -1.0, 0.9999, KineticConvention::HalfLaplacian).unwrap()
}

fn evolve_droplet(params: DropletParams, spec: PotentialSpec, n: usize, dt: f64, steps: usize, every: usize) -> EvolutionRecord {
    let grid = Arc::new(SpatialGrid::centered(n, DX).unwrap());
    let psi0 = full_wavefunction(&DropletState::new(params, spec).unwrap(), &grid, 0.0).unwrap();
    let (g1, g2) = params.propagator_couplings();
    evolve(&psi0, &spec, &EvolutionConfig::new(dt, steps, every, g1, g2)).unwrap()
}

/// Grid wide enough that the profile falls below 1e-14 of its peak.
fn tail_grid(p: &DropletParams, dx: f64) -> SpatialGrid {
    let half = ((2.0 * p.amplitude() / p.shape_b()).ln() + 14.0 * 10f64.ln()) / p.decay_rate() + 5.0;
    let n = ((2.0 * half / dx).ceil() as usize).next_power_of_two();
    SpatialGrid::centered(n, dx).unwrap()
}

fn crit1_stationary_residual() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_251_016);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let r = rng.random_range(0.05..=0.999);
        let g1 = rng.random_range(0.5..=2.0);
        let g2 = rng.random_range(0.5..=2.0);
        let p = DropletParams::from_flat_top_ratio(r, g1, g2, KineticConvention::HalfLaplacian).unwrap();
        let grid = tail_grid(&p, 0.05);
        let u = stationary_profile(&p, &grid).map_err(|e| e.to_string())?;
        let res = stationary_residual(&u, &p, &grid).map_err(|e| e.to_string())?;
        worst = worst.max(res);
    }
    let detail = format!("max L-inf residual over 50 draws {worst:.2e} (< 1e-8)");
    if worst >= 1e-8 {
        return Err(detail);
    }
    within(start.elapsed(), 5.0, detail)
}

fn crit2_norm_conservation() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, spec) in [
        ("constant", PotentialSpec::constant(9.8)),
        ("modulated", PotentialSpec::modulated(9.8, 0.3, 0.5)),
    ] {
        let start = Instant::now();
        let rec = evolve_droplet(caption_droplet(), spec, 4096, 1e-4, 10_000, 100);
        let drift = rec.relative_norm_drift();
        let secs = start.elapsed().as_secs_f64();
        ok &= drift < 1e-8 && secs < 60.0;
        lines.push(format!("{name} drift {drift:.2e} in {secs:.1} s"));
    }
    check(ok, lines.join(", ") + " (< 1e-8, < 60 s each)")
}

fn crit3_newtonian() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut at_one = Vec::new();
    for (a, t_end, dt) in [(0.098f64, 5.0f64, 1e-3f64), (0.98, 5.0, 1e-3), (9.8, 1.0, 1e-4)] {
        let steps = (t_end / dt).round() as usize;
        let rec = evolve_droplet(caption_droplet(), PotentialSpec::constant(a), 4096, dt, steps, steps / 50);
        let worst = rec
            .times
            .iter()
            .zip(&rec.centers_of_mass)
            .map(|(t, x)| (x - 0.5 * a * t * t).abs())
            .fold(0.0, f64::max);
        ok &= worst < DX;
        let i1 = rec.times.iter().position(|&t| (t - 1.0).abs() < 1e-9).unwrap();
        at_one.push(rec.centers_of_mass[i1]);
        lines.push(format!("a={a}: {worst:.1e}"));
    }
    let ordered = at_one.windows(2).all(|w| w[0] < w[1]);
    check(
        ok && ordered,
        format!("max |x_cm - at^2/2| {} (< dx); drift at t=1 increases with a: {ordered}", lines.join(", ")),
    )
}

fn crit4_independence() -> Outcome {
    let spec = PotentialSpec::constant(0.98);
    let run = |p: DropletParams| evolve_droplet(p, spec, 4096, 1e-3, 5000, 100).centers_of_mass;
    let pairwise = |series: &[Vec<f64>]| {
        let mut worst = 0.0f64;
        for a in series {
            for b in series {
                for (x, y) in a.iter().zip(b) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        worst
    };
    let by_n: Vec<Vec<f64>> = [1.0, 3.0, 5.0]
        .iter()
        .map(|&n| run(DropletParams::from_norm(n, 1.0, 0.9999, KineticConvention::HalfLaplacian).unwrap()))
        .collect();
    let by_g2: Vec<Vec<f64>> = [0.9, 0.999, 0.9999]
        .iter()
        .map(|&g2| run(DropletParams::from_signed_figure_set(-2.0 / 9.0, -1.0, g2, KineticConvention::HalfLaplacian).unwrap()))
        .collect();
    let (wn, wg) = (pairwise(&by_n), pairwise(&by_g2));
    check(
        wn < DX && wg < DX,
        format!("a=0.98 to t=5: max pairwise gap N in {{1,3,5}} {wn:.1e}, G2 in {{0.9,0.999,0.9999}} {wg:.1e} (< dx)"),
    )
}

fn crit5_modulated_trajectory() -> Outcome {
    let (a, alpha, omega) = (0.98, 0.3, 0.5);
    let rec = evolve_droplet(caption_droplet(), PotentialSpec::modulated(a, alpha, omega), 4096, 1e-3, 5000, 100);
    let worst = rec
        .times
        .iter()
        .zip(&rec.centers_of_mass)
        .map(|(&t, x)| {
            let closed = 0.5 * a * t * t - (a * alpha / (omega * omega)) * ((omega * t).cos() - 1.0);
            (x - closed).abs()
        })
        .fold(0.0, f64::max);
    check(worst < 2.0 * DX, format!("max deviation from closed form to t=5: {worst:.2e} (< 2 dx)"))
}

fn crit6_norm_relation() -> Outcome {
    let start = Instant::now();
    let mut worst_quad = 0.0f64;
    let mut worst_trip = 0.0f64;
    for i in 1..=20 {
        let r = i as f64 / 21.0;
        let p = DropletParams::from_flat_top_ratio(r, 1.0, 1.0, KineticConvention::HalfLaplacian).unwrap();
        let grid = tail_grid(&p, 0.01);
        let u = stationary_profile(&p, &grid).map_err(|e| e.to_string())?;
        let dens: Vec<f64> = u.iter().map(|v| v * v).collect();
        // independent trapezoid rule
        let quad = grid.dx() * (dens.iter().sum::<f64>() - 0.5 * (dens[0] + dens[dens.len() - 1]));
        let closed = norm_of_mu(r).map_err(|e| e.to_string())?;
        worst_quad = worst_quad.max(((closed - quad) / quad).abs());
        let back = mu_of_norm(closed).map_err(|e| e.to_string())?;
        worst_trip = worst_trip.max((back - r).abs());
        let n_back = norm_of_mu(back).map_err(|e| e.to_string())?;
        worst_trip = worst_trip.max(((n_back - closed) / closed).abs());
    }
    let detail = format!("20 ladder points: max rel. quadrature gap {worst_quad:.1e} (< 1e-6), round trip {worst_trip:.1e} (< 1e-10)");
    if !(worst_quad < 1e-6 && worst_trip < 1e-10) {
        return Err(detail);
    }
    within(start.elapsed(), 1.0, detail)
}

fn crit7_wigner() -> Outcome {
    let mut worst_marg = 0.0f64;
    let mut worst_mass = 0.0f64;
    let mut slowest = 0.0f64;
    let grid = Arc::new(SpatialGrid::centered(4096, DX).unwrap());
    for alpha in [0.0, 0.1, 0.2, 0.3] {
        let spec = if alpha == 0.0 {
            PotentialSpec::constant(9.8)
        } else {
            PotentialSpec::modulated(9.8, alpha, 0.5)
        };
        let state = DropletState::new(caption_droplet(), spec).unwrap();
        let psi = full_wavefunction(&state, &grid, 1.0).unwrap();
        let window = MomentumWindow::centered(-spec.gamma_dot(1.0), 6.0, 256).unwrap();
        let start = Instant::now();
        let map = wigner_unchecked(&psi, &window).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let marg = map.x_marginal();
        let v = psi.values();
        for (i, &x) in map.x.iter().enumerate() {
            let j = ((x - grid.x_min()) / DX).round() as usize;
            worst_marg = worst_marg.max((marg[i] - v[j].norm_sqr()).abs());
        }
        worst_mass = worst_mass.max((map.mass() - state.norm).abs() / state.norm);
    }
    // Gaussian oracle: W = exp(-x²/σ² - p²σ²)/π
    let g = Arc::new(SpatialGrid::centered(4096, DX).unwrap());
    let sigma: f64 = 1.7;
    let a = (PI * sigma * sigma).powf(-0.25);
    let psi = ComplexField::from_fn(g, |x| Complex64::new(a * (-x * x / (2.0 * sigma * sigma)).exp(), 0.0));
    let start = Instant::now();
    let map = wigner(&psi, &MomentumWindow::new(-6.0, 6.0, 256).unwrap()).map_err(|e| e.to_string())?;
    slowest = slowest.max(start.elapsed().as_secs_f64());
    let mut worst_gauss = 0.0f64;
    for (i, &x) in map.x.iter().enumerate() {
        for (j, &p) in map.p.iter().enumerate() {
            let exact = (-x * x / (sigma * sigma) - p * p * sigma * sigma).exp() / PI;
            worst_gauss = worst_gauss.max((map.at(i, j) - exact).abs());
        }
    }
    check(
        worst_marg < 1e-6 && worst_mass < 1e-6 && worst_gauss < 1e-8 && slowest < 30.0,
        format!(
            "x-marginal {worst_marg:.1e} (< 1e-6), mass vs N {worst_mass:.1e} (< 1e-6), Gaussian {worst_gauss:.1e} (< 1e-8), slowest map {slowest:.2} s (< 30 s)"
        ),
    )
}

fn crit8_entropy() -> Outcome {
    // uniform box on `count` nodes: S = ln(count dx)
    let grid = Arc::new(SpatialGrid::centered(4096, 0.01).unwrap());
    let count = 700;
    let l = count as f64 * grid.dx();
    let mut vals = vec![Complex64::new(0.0, 0.0); grid.len()];
    for v in &mut vals[1000..1000 + count] {
        *v = Complex64::new(l.sqrt().recip(), 0.0);
    }
    let boxed = ComplexField::new(grid.clone(), vals).unwrap();
    let box_err = (shannon_entropy(&boxed).unwrap() - l.ln()).abs();

    // Gaussian density with standard deviation s: S = ½ ln(2πe s²)
    let s: f64 = 1.3;
    let gauss = ComplexField::from_fn(grid.clone(), |x| {
        Complex64::new((2.0 * PI * s * s).powf(-0.25) * (-x * x / (4.0 * s * s)).exp(), 0.0)
    });
    let gauss_err = (shannon_entropy(&gauss).unwrap() - 0.5 * (2.0 * PI * E * s * s).ln()).abs();

    let g = Arc::new(SpatialGrid::centered(4096, DX).unwrap());
    let droplet = full_wavefunction(&DropletState::new(caption_droplet(), PotentialSpec::free_space()).unwrap(), &g, 0.0).unwrap();
    let s0 = shannon_entropy(&droplet).unwrap();
    let n = droplet.values().len();
    let moved: Vec<Complex64> = (0..n)
        .map(|j| droplet.values()[(j + n - 137) % n] * Complex64::from_polar(1.0, 2.1))
        .collect();
    let inv_err = (shannon_entropy(&ComplexField::new(g, moved).unwrap()).unwrap() - s0).abs();

    // entropy series of the a-comparison panel (normalized density, natural log, x >= 20)
    let steps = preset_steps("fig9", &RunConfig::default()).map_err(|e| e.to_string())?;
    let mut plateaus = Vec::new();
    let mut saturation = Vec::new();
    for s in steps.iter().filter(|s| s.label.starts_with("a_")) {
        let series = entropy_of_analytic(&s.cfg).map_err(|e| e.to_string())?;
        plateaus.push(series.plateau());
        saturation.push(series.saturation_time(0.01));
    }
    // steps are ordered a = 9.8, 0.98, 0.098
    let plateau_ok = plateaus.iter().all(|p| (p - 3.2).abs() <= 0.15 * 3.2);
    let ordering_ok = saturation.windows(2).all(|w| w[0] < w[1]);
    check(
        box_err < 1e-6 && gauss_err < 1e-6 && inv_err < 1e-10 && plateau_ok && ordering_ok,
        format!(
            "box {box_err:.1e}, Gaussian {gauss_err:.1e} (< 1e-6), invariance {inv_err:.1e} (< 1e-10); plateau {:.3} (3.2 +/- 15%, normalized, ln, x >= 20); saturation times a=9.8/0.98/0.098: {:.2}/{:.2}/{:.2} (strictly increasing)",
            plateaus.iter().cloned().fold(f64::NAN, f64::max),
            saturation[0],
            saturation[1],
            saturation[2]
        ),
    )
}

fn crit9_stability() -> Outcome {
    let start = Instant::now();
    let steps = preset_steps("fig10", &RunConfig::default()).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut ok = true;
    for s in &steps {
        let state = s.cfg.droplet_state().unwrap();
        let grid = s.cfg.grid().unwrap();
        let ev = s.cfg.evolution_config(&state.params);
        let report = stability_run(&state, &grid, &ev, &s.cfg.noise_spec()).map_err(|e| e.to_string())?;
        ok &= report.passed;
        lines.push(format!(
            "{} {:.2}% (< {:.0}%)",
            s.label,
            100.0 * report.max_relative_deviation,
            100.0 * report.pass_threshold
        ));
    }
    let detail = format!("1% noise, 8 realizations, dt=1e-4, dx=0.0488, 10000 steps: {}", lines.join(", "));
    if !ok {
        return Err(detail);
    }
    within(start.elapsed(), 600.0, detail)
}

fn crit10_convergence() -> Outcome {
    let spec = PotentialSpec::modulated(9.8, 0.3, 0.5);
    let runs: Vec<EvolutionRecord> = [4e-4, 2e-4, 1e-4]
        .iter()
        .map(|&dt| {
            let steps = (1.0 / dt as f64).round() as usize;
            let every = (0.04 / dt as f64).round() as usize;
            evolve_droplet(caption_droplet(), spec, 4096, dt, steps, every)
        })
        .collect();
    let sup = |a: &EvolutionRecord, b: &EvolutionRecord| {
        a.centers_of_mass
            .iter()
            .zip(&b.centers_of_mass)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let l2 = |a: &EvolutionRecord, b: &EvolutionRecord| {
        let s: f64 = a
            .final_state
            .values()
            .iter()
            .zip(b.final_state.values())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        (s * DX).sqrt()
    };
    let (e1, e2) = (sup(&runs[0], &runs[1]), sup(&runs[1], &runs[2]));
    let ratio = e1 / e2;
    let l2_ratio = l2(&runs[0], &runs[1]) / l2(&runs[1], &runs[2]);
    check(
        (3.2..=4.8).contains(&ratio),
        format!("trajectory self-error {e1:.2e} -> {e2:.2e}, ratio {ratio:.3} (in [3.2, 4.8]); final-state L2 ratio {l2_ratio:.3}"),
    )
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "csv") {
            files.insert(p.file_name().unwrap().to_string_lossy().to_string(), fs::read(&p).unwrap());
        }
    }
    files
}

fn crit11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut total = 0;
    for name in PRESETS {
        let mut outputs = Vec::new();
        for pass in 0..2 {
            let mut cfg = RunConfig::default();
            cfg.seed = 1234;
            cfg.output_dir = tmp.path().join(format!("{name}_{pass}")).to_string_lossy().to_string();
            run_preset(name, &cfg).map_err(|e| format!("{name}: {e}"))?;
            outputs.push(csv_files(Path::new(&cfg.output_dir)));
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            return Err(format!("{name}: CSV outputs differ between identical runs"));
        }
        total += outputs[0].len();
    }
    // presets other than fig10 are purely analytic; make sure the DensityMap
    // step kind is exercised as well
    let kinds = preset_steps("fig2", &RunConfig::default()).map_err(|e| e.to_string())?;
    let has_map = kinds.iter().any(|s| matches!(s.step, Step::DensityMap { .. }));
    check(has_map, format!("all 10 presets re-run with seed 1234: {total} CSV files byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 stationary residual", crit1_stationary_residual),
        ("2 norm conservation", crit2_norm_conservation),
        ("3 Newtonian trajectory", crit3_newtonian),
        ("4 atom-number / G2 independence", crit4_independence),
        ("5 modulated trajectory", crit5_modulated_trajectory),
        ("6 N-mu relation", crit6_norm_relation),
        ("7 Wigner marginals", crit7_wigner),
        ("8 entropy", crit8_entropy),
        ("9 stability protocol", crit9_stability),
        ("10 splitting order", crit10_convergence),
        ("11 determinism", crit11_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
