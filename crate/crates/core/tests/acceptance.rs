//! Acceptance checks A1-A9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{ce_fixture, random_layout, random_params, taylor_quotients};
use pga::diagnostics::{bound_increment, similarity_profile, smoothed_peak, TrainTrace};
use pga::gradcheck::run_suite;
use pga::objective::{Counting, Quadratic, QuadraticDomain};
use pga::optimizer::{StepReport, StepRule};
use pga::testbeds::{run_spurious, run_spurious_with, run_zdt1, SpuriousExperiment};
use pga::vector::{dot, norm_sq};
use pga::{pga_step, Domain, DomainObjective, GradSlices, Method, Objectives, ParamLayout, ParamVector, PgaConfig, StepBatches};

const SEEDS: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn monotone(trace: &TrainTrace) -> bool {
    trace
        .records()
        .windows(2)
        .all(|w| w[1].bound_cumulative >= w[0].bound_cumulative)
}

fn a1_zdt1() -> Outcome {
    let start = Instant::now();
    let cfg = PgaConfig::default();
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..SEEDS {
        let out = run_zdt1(&cfg, Method::Pga, seed).expect("zdt1 run");
        let x1 = out.x.values()[0];
        worst = worst.max(out.convergence);
        if out.convergence < 0.1 && (0.0..=1.0).contains(&x1) {
            ok += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok >= 9 && secs < 10.0,
        format!("{ok}/{SEEDS} seeds converged, worst g-1 = {worst:.2e}, {secs:.1}s"),
    )
}

struct SpuriousRuns {
    ood: [Vec<f64>; 3],
    pga_traces: Vec<TrainTrace>,
    all_monotone: bool,
    secs: f64,
}

fn spurious_cfg() -> PgaConfig {
    PgaConfig {
        total_iters: 1000,
        ..PgaConfig::default()
    }
}

fn spurious_runs() -> SpuriousRuns {
    let start = Instant::now();
    let exp = SpuriousExperiment::default();
    let cfg = spurious_cfg();
    let mut ood: [Vec<f64>; 3] = Default::default();
    let mut pga_traces = Vec::new();
    let mut all_monotone = true;
    for (k, method) in [Method::Erm, Method::AlignOnly, Method::Pga].into_iter().enumerate() {
        for seed in 0..SEEDS {
            let out = run_spurious(&exp, &cfg, method, seed).expect("spurious run");
            ood[k].push(out.ood_acc);
            all_monotone &= monotone(&out.trace);
            if method == Method::Pga {
                pga_traces.push(out.trace);
            }
        }
    }
    SpuriousRuns {
        ood,
        pga_traces,
        all_monotone,
        secs: start.elapsed().as_secs_f64(),
    }
}

fn a2_ood_gap(runs: &SpuriousRuns) -> Outcome {
    let [erm, align, pga] = [mean(&runs.ood[0]), mean(&runs.ood[1]), mean(&runs.ood[2])];
    outcome(
        pga >= align && align >= erm && pga - erm >= 0.05 && runs.secs < 60.0,
        format!(
            "OOD mean erm={erm:.4} align_only={align:.4} pga={pga:.4}, {:.1}s",
            runs.secs
        ),
    )
}

const A3_SEEDS: u64 = 5;

fn a3_similarity(runs: &SpuriousRuns, monotone_ok: &mut bool) -> Outcome {
    let exp = SpuriousExperiment::default();
    let mut profiles_ok = true;
    let mut low_peaks = Vec::new();
    let mut high_peaks = Vec::new();
    for seed in 0..A3_SEEDS {
        let high = &runs.pga_traces[seed as usize];
        let p = similarity_profile(high).expect("profile");
        profiles_ok &= p.rise && p.fall;
        high_peaks.push(smoothed_peak(high));
        for rho_ga in [0.1, 0.0] {
            let cfg = PgaConfig {
                rho_ga,
                ..spurious_cfg()
            };
            let out = run_spurious(&exp, &cfg, Method::Pga, seed).expect("spurious run");
            *monotone_ok &= monotone(&out.trace);
            if rho_ga == 0.1 {
                let p = similarity_profile(&out.trace).expect("profile");
                profiles_ok &= p.rise && p.fall;
            } else {
                low_peaks.push(smoothed_peak(&out.trace));
            }
        }
    }
    let peaks_ok = low_peaks.iter().zip(&high_peaks).all(|(l, h)| l < h);
    outcome(
        profiles_ok && peaks_ok,
        format!(
            "rise+fall for rho_ga 0.1/0.5 on {A3_SEEDS} seeds: {profiles_ok}; mean peak rho_ga=0 {:.3} < rho_ga=0.5 {:.3}",
            mean(&low_peaks),
            mean(&high_peaks)
        ),
    )
}

fn a4_taylor() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let fx = ce_fixture(&mut rng, 298, 500);
    let mut worst_err: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..20 {
        let p = random_params(&fx.layout, &mut rng, 0.05);
        let (cos, q) = taylor_quotients(&fx.source, &fx.target, &p, &[1e-4, 5e-5]);
        let (r1, r2) = ((q[0] - cos).abs(), (q[1] - cos).abs());
        worst_err = worst_err.max(r1);
        worst_ratio = worst_ratio.max(r2 / r1);
    }
    outcome(
        worst_err <= 1e-3 && worst_ratio <= 0.6,
        format!("max |quotient - cos| = {worst_err:.2e}, max residual ratio = {worst_ratio:.3}"),
    )
}

fn a5_reduction() -> Outcome {
    let exp = SpuriousExperiment::default();
    let cfg = PgaConfig {
        rho_ga: 0.0,
        rho_gn: 0.0,
        total_iters: 500,
        ..PgaConfig::default()
    };
    let pga = run_spurious_with(&exp, &cfg, StepRule::Pga, Method::Pga, 7).expect("pga run");
    let erm = run_spurious_with(&exp, &cfg, StepRule::Erm, Method::Pga, 7).expect("erm run");
    let same_params = pga
        .params
        .values()
        .iter()
        .zip(erm.params.values())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let same_trace = pga.trace.records() == erm.trace.records();
    outcome(
        same_params && same_trace,
        format!("500 steps: params bit-identical {same_params}, traces identical {same_trace}"),
    )
}

fn a6_decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let layout = random_layout(&mut rng, 4, 12);
        let i = rng.gen_range(0..layout.num_sources());
        let mut draw = |owner: Domain| {
            let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
            let mut v = |n: usize| -> Vec<f64> { (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect() };
            let shared = v(layout.shared_dim());
            let specific = v(layout.block_dim(owner.block()).unwrap());
            GradSlices::new(owner, shared, specific)
        };
        let s = draw(Domain::Source(i));
        let t = draw(Domain::Target);
        let fs = s.embed_full(&layout).unwrap();
        let ft = t.embed_full(&layout).unwrap();
        let diff: Vec<f64> = fs.iter().zip(&ft).map(|(a, b)| a - b).collect();
        let lhs = norm_sq(&diff);
        let rhs = norm_sq(&fs) + norm_sq(&ft) - 2.0 * dot(&s.shared, &t.shared);
        worst = worst.max((lhs - rhs).abs());
    }
    outcome(worst <= 1e-10, format!("1000 draws, max |lhs - rhs| = {worst:.2e}"))
}

fn a7_gradcheck() -> Outcome {
    let start = Instant::now();
    let results = run_suite(0, 100).expect("gradcheck suite");
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<&str> = results.iter().filter(|r| !r.ok()).map(|r| r.name).collect();
    let worst = results.iter().map(|r| r.worst_rel_error).fold(0.0, f64::max);
    outcome(
        failed.is_empty() && secs < 5.0,
        format!(
            "{} objectives x 100 points, failures {failed:?}, worst rel {worst:.2e}, {secs:.2}s",
            results.len()
        ),
    )
}

fn a8_bound(monotone_ok: bool) -> Outcome {
    let report = StepReport {
        eta: 1.0,
        source_losses: vec![0.0],
        target_loss: 0.0,
        cos_sims: vec![0.0],
        shared_dots: vec![0.0],
        source_shared_norms: vec![1.0],
        source_specific_norms: vec![2.0],
        target_shared_norm: 1.0,
        target_specific_norm: 3.0,
        bound_increment: 0.0,
    };
    let inc = bound_increment(&report, 1.0).increment;
    outcome(
        inc == 30.0 && monotone_ok,
        format!("fixture increment = {inc}, cumulative monotone on every run: {monotone_ok}"),
    )
}

fn a9_budget() -> Outcome {
    let mut counts = Vec::new();
    let mut ok = true;
    for n in 1..=3usize {
        let layout = Arc::new(ParamLayout::new(2, vec![1; n], 1));
        let sources: Vec<Counting<QuadraticDomain>> = (0..n)
            .map(|i| {
                Counting::new(QuadraticDomain::new(
                    Domain::Source(i),
                    Quadratic::isotropic(vec![i as f64 + 1.0, -1.0, 0.5]),
                ))
            })
            .collect();
        let target = Counting::new(QuadraticDomain::new(
            Domain::Target,
            Quadratic::isotropic(vec![-1.0, 2.0, 0.0]),
        ));
        let refs: Vec<&dyn DomainObjective> = sources.iter().map(|s| s as &dyn DomainObjective).collect();
        let objectives = Objectives::new(refs, &target).unwrap();
        let p = ParamVector::new(layout, vec![0.3; 2 + n + 1]).unwrap();
        pga_step(&p, &objectives, &StepBatches::full(n), &PgaConfig::default(), 0).unwrap();
        let calls = target.calls() + sources.iter().map(|s| s.calls()).sum::<usize>();
        ok &= calls == 2 * (n + 1);
        counts.push(format!("N={n}: {calls}"));
    }
    outcome(ok, format!("evaluations per step {}", counts.join(", ")))
}

fn main() {
    let runs = spurious_runs();
    let mut monotone_ok = runs.all_monotone;
    let results = [
        ("A1", a1_zdt1()),
        ("A2", a2_ood_gap(&runs)),
        ("A3", a3_similarity(&runs, &mut monotone_ok)),
        ("A4", a4_taylor()),
        ("A5", a5_reduction()),
        ("A6", a6_decomposition()),
        ("A7", a7_gradcheck()),
        ("A8", a8_bound(monotone_ok)),
        ("A9", a9_budget()),
    ];
    let mut failed = 0;
    for (id, r) in &results {
        println!("{id} {} {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        failed += usize::from(!r.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
