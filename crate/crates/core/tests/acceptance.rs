// Acceptance suite: one test per criterion, each printing a single
// PASS/FAIL line. Criteria 7-10 train agents on the desk experiment in
// configs/experiments/desk.toml and take several minutes in release mode.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use hetuav::config::{RotorParams, ScenarioConfig};
use hetuav::env::{velocity_ladder, Env, PrecodingMode};
use hetuav::expert::{collect_dataset, partition_by_agent, CollectConfig, ScriptedExpert};
use hetuav::harness::{self, collect_for_seed, run_cell, run_experiment, CellSeeds, ExperimentSpec, Method, METRICS_FILE};
use hetuav::learner::{
    actor_loss, critic_loss, cql_penalty_batch, distill, gradient_check, greedy_agreement, make_agents, policy_entropy,
    policy_probs, temperature_loss, Mlp,
};
use hetuav::rsma::{rates_report, SlotLinks};
use hetuav::s2dc::{
    quad_coeffs, s2dc_solve, solve_subproblem, trace_coeffs, AffineForm, BarrierSettings, Budget, ConcavePiece,
    ConvexSubproblem, DcProblem, Herm, LogTerm,
};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, detail: String) {
    println!(
        "criterion {id} {name}: {} ({detail}; {:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn desk_spec() -> ExperimentSpec {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/experiments/desk.toml");
    let mut spec = ExperimentSpec::load(&path).unwrap();
    spec.out_dir = std::env::temp_dir().join(format!("hetuav-acceptance-{}", std::process::id()));
    spec.checkpoint_every = 0;
    spec
}

#[test]
fn criterion_01_formula_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = 1e-9;
    let mut worst: f64 = 0.0;
    for inst in 0..100 {
        let (n_uav, n_gt, n_eve) = (rng.gen_range(1..=2), rng.gen_range(1..=3), rng.gen_range(1..=2));
        let (ch, assoc, pre) = common::random_instance(1000 + inst, n_uav, n_gt, n_eve, 2);
        let links = SlotLinks::new(&ch, &assoc, noise);
        let rep = rates_report(&links, &pre);
        let oracle = common::scalar_rates(&ch, &assoc, &pre, noise);
        for i in 0..n_gt {
            match (&rep.gts[i], oracle.gt[i]) {
                (Some(g), Some((rc, rp))) => {
                    worst = worst.max(rel_err(g.common, rc)).max(rel_err(g.private, rp));
                    for e in 0..n_eve {
                        let (rce, rpe) = oracle.eve[e][i].unwrap();
                        let (ce, pe) = rep.eve_rate(e, i).map_or((0.0, 0.0), |r| (r.common, r.private));
                        worst = worst.max(rel_err(ce, rce)).max(rel_err(pe, rpe));
                    }
                }
                (None, None) => {}
                _ => worst = f64::INFINITY,
            }
        }
        worst = worst.max(rel_err(rep.f1, oracle.f1));
    }
    let elapsed = started.elapsed();
    let pass = worst <= 1e-9 && elapsed < Duration::from_secs(1);
    report(1, "formula oracles", pass, elapsed, format!("worst relative error {worst:.2e} over 100 instances"));
    assert!(pass);
}

#[test]
fn criterion_02_s2dc_monotonicity() {
    let started = Instant::now();
    let cfg = ScenarioConfig::default();
    let noise = cfg.noise_power();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_step, mut worst_gap, mut worst_power, mut worst_margin) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for inst in 0..20 {
        let (n_uav, n_gt, n_eve) = (rng.gen_range(1..=2), rng.gen_range(1..=3), rng.gen_range(1..=2));
        let (ch, assoc, _) = common::random_instance(2000 + inst, n_uav, n_gt, n_eve, 2);
        let links = SlotLinks::new(&ch, &assoc, noise);
        let out = s2dc_solve(&links, cfg.p_max, 2, &cfg.s2dc).unwrap();
        for it in &out.history {
            if it.accepted {
                worst_step = worst_step.max(it.objective_before - it.objective_value);
            }
        }
        worst_gap = worst_gap.max(out.rank_gap / out.rank_trace.max(f64::MIN_POSITIVE));
        for u in &out.precoders.uavs {
            worst_power = worst_power.max(u.power() / cfg.p_max - 1.0);
        }
        let problem = DcProblem::new(&links, cfg.p_max, 2);
        let x = problem.pack(&out.vars);
        for m in problem.common_margins(&x) {
            worst_margin = worst_margin.max(-m);
        }
    }
    let elapsed = started.elapsed();
    let pass = worst_step <= 1e-8
        && worst_gap <= 1e-4
        && worst_power <= 1e-9
        && worst_margin <= 1e-9
        && elapsed < Duration::from_secs(120);
    report(
        2,
        "s2dc monotonicity",
        pass,
        elapsed,
        format!(
            "largest decrease {worst_step:.1e}, rank gap/trace {worst_gap:.1e}, power excess {worst_power:.1e}, common-rate deficit {worst_margin:.1e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_s2dc_vs_brute_force() {
    let started = Instant::now();
    let cfg = ScenarioConfig::default();
    let mut worst = f64::INFINITY;
    for inst in 0..10 {
        let (ch, assoc, noise) = common::single_link_instance(3000 + inst);
        let links = SlotLinks::new(&ch, &assoc, noise);
        let out = s2dc_solve(&links, cfg.p_max, 2, &cfg.s2dc).unwrap();
        let grid = common::grid_oracle_f1(ch.gt[0][0].as_slice(), ch.eve[0][0].as_slice(), cfg.p_max, noise);
        worst = worst.min(out.f1 - (grid - 0.05));
    }
    let elapsed = started.elapsed();
    let pass = worst >= 0.0 && elapsed < Duration::from_secs(300);
    report(3, "s2dc vs brute force", pass, elapsed, format!("smallest margin over grid − 0.05: {worst:.4} bits/s/Hz"));
    assert!(pass);
}

#[test]
fn criterion_04_mrt_closed_form() {
    let started = Instant::now();
    let h = hetuav::channel::CVector::from_vec(vec![Complex64::new(0.6, 0.2), Complex64::new(-0.4, 0.9)]);
    let (sigma2, p_max) = (0.3, 1.5);
    let sub = ConvexSubproblem {
        m: 2,
        n_blocks: 1,
        affines: vec![AffineForm {
            coef: quad_coeffs(&h),
            constant: sigma2,
        }],
        pieces: vec![ConcavePiece {
            logs: vec![LogTerm { affine: 0, weight: 1.0 }],
            linear: vec![0.0; 4],
            constant: 0.0,
        }],
        linear: vec![0.0; 4],
        constant: 0.0,
        constraints: vec![],
        budgets: vec![Budget {
            coef: trace_coeffs(2),
            limit: p_max,
        }],
        start: None,
    };
    let sol = solve_subproblem(&sub, &BarrierSettings::default()).unwrap();
    let optimum = (sigma2 + p_max * h.norm_squared()).log2();
    let x = Herm::from_params(2, &sol.x);
    let gap = x.rank_one_gap() / x.trace();
    let elapsed = started.elapsed();
    let pass = (sol.objective - optimum).abs() <= 1e-3 && gap <= 1e-4 && elapsed < Duration::from_secs(1);
    report(
        4,
        "mrt closed form",
        pass,
        elapsed,
        format!("value error {:.2e}, rank gap/trace {gap:.1e}", (sol.objective - optimum).abs()),
    );
    assert!(pass);
}

#[test]
fn criterion_05_energy_model() {
    let started = Instant::now();
    let rotor = RotorParams::default();
    let hover_exact = rotor.propulsion_power(0.0) == rotor.p0 + rotor.p1;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let dt = 1.5;
    let speeds: Vec<Vec<f64>> = (0..4).map(|_| (0..30).map(|_| rng.gen_range(0.0..25.0)).collect()).collect();
    // double loop straight from the closed-form power expression
    let mut oracle = 0.0;
    for per_uav in &speeds {
        for &v in per_uav {
            let blade = rotor.p0 * (1.0 + 3.0 * v * v / (rotor.v_tip * rotor.v_tip));
            let r = v * v / (2.0 * rotor.v0 * rotor.v0);
            let induced = rotor.p1 * ((1.0 + r * r).sqrt() - r).max(0.0).sqrt();
            let parasite = 0.5 * rotor.d0 * rotor.rho_a * rotor.s_sol * rotor.disc_area * v.powi(3);
            oracle += (blade + induced + parasite) * dt;
        }
    }
    let additive = rel_err(rotor.fleet_energy(&speeds, dt), oracle) <= 1e-12;

    let ladder = velocity_ladder(4.0, 25.0, 5).unwrap();
    let expect = [0.0, 4.0, 7.37, 13.57, 25.0];
    let ladder_ok = ladder.len() == 5 && ladder.iter().zip(expect).all(|(a, b)| (a - b).abs() <= 0.01);
    let elapsed = started.elapsed();
    let pass = hover_exact && additive && ladder_ok;
    report(
        5,
        "energy model",
        pass,
        elapsed,
        format!("hover exact {hover_exact}, additivity {additive}, ladder {ladder:.2?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_learner_numerics() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (obs, n_act, batch) = (6, 5, 8);
    let net = Mlp::new(&[obs, 24, 16, n_act], &mut rng);
    assert!(net.n_params() <= 1000);
    let x = Array2::from_shape_fn((batch, obs), |_| rng.gen_range(-1.0..1.0));
    let actions: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..n_act)).collect();
    let y: Vec<f64> = (0..batch).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let q_min = Array2::from_shape_fn((batch, n_act), |_| rng.gen_range(-1.0..1.0));

    let critic = gradient_check(&net, &x, |q| critic_loss(q, &actions, &y));
    let cql = gradient_check(&net, &x, |q| cql_penalty_batch(q, &actions));
    let actor = gradient_check(&net, &x, |logits| actor_loss(logits, &q_min, 0.3));

    let logits = net.forward(&x);
    let probs = Array2::from_shape_fn((batch, n_act), |(i, j)| policy_probs(logits.row(i).as_slice().unwrap())[j]);
    let target = 0.6 * (n_act as f64).ln();
    let mut temperature: f64 = 0.0;
    for log_alpha in [-2.0, -0.3, 0.7] {
        let (_, analytic) = temperature_loss(log_alpha, &probs, target);
        let h = 1e-5;
        let numeric = (temperature_loss(log_alpha + h, &probs, target).0 - temperature_loss(log_alpha - h, &probs, target).0) / (2.0 * h);
        temperature = temperature.max((analytic - numeric).abs() / (analytic.abs() + 1e-8));
    }

    let uniform = (policy_entropy(&policy_probs(&[0.4; 7])) - 7f64.ln()).abs();
    let one_hot = policy_entropy(&[0.0, 1.0, 0.0]).abs();
    let elapsed = started.elapsed();
    let worst = critic.max(cql).max(actor).max(temperature);
    let pass = worst <= 1e-4 && uniform <= 1e-9 && one_hot <= 1e-9;
    report(
        6,
        "learner numerics",
        pass,
        elapsed,
        format!("gradient errors critic {critic:.1e} actor {actor:.1e} temperature {temperature:.1e} cql {cql:.1e}; entropy identities {uniform:.1e}/{one_hot:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_07_distillation_fidelity() {
    let started = Instant::now();
    let spec = desk_spec();
    let seed = 30;
    let scenario = spec.scenario_for(seed);
    assert_eq!((scenario.n_uav, scenario.n_gt, scenario.n_eve), (2, 8, 2));
    let mut expert = ScriptedExpert {
        repulsion_gain: spec.distill.repulsion_gain,
    };
    let train = collect_for_seed(&scenario, &spec.distill, seed, &mut expert).unwrap();
    let per_agent = partition_by_agent(&train, scenario.n_uav).unwrap().iter().map(Vec::len).min().unwrap();

    // held-out states: fresh fading stream and start jitter on the same layout
    let mut env = Env::new(scenario.clone(), PrecodingMode::S2dc).unwrap();
    let held_out = collect_dataset(
        &mut expert,
        &mut env,
        &CollectConfig {
            episodes: 30,
            seed: 0x6865_6c64,
            layout_seed: CellSeeds::new(seed).layout,
            start_jitter: spec.distill.start_jitter,
            ..CollectConfig::default()
        },
    )
    .unwrap();

    let mut agents = make_agents(scenario.n_uav, env.obs_dim(), env.n_actions(), &spec.learner, CellSeeds::new(seed).agents);
    distill(&train, &mut agents, 500).unwrap();
    let agreement = greedy_agreement(&held_out, &agents);
    let elapsed = started.elapsed();
    let pass = per_agent >= 2000 && agreement >= 0.7 && elapsed < Duration::from_secs(600);
    report(
        7,
        "distillation fidelity",
        pass,
        elapsed,
        format!("{per_agent} transitions per agent, held-out greedy agreement {:.1}%", 100.0 * agreement),
    );
    assert!(pass);
}

/// Seed-averaged reward curve of one method.
fn mean_curve(curves: &[Vec<f64>]) -> Vec<f64> {
    let n = curves.iter().map(Vec::len).min().unwrap();
    (0..n).map(|e| curves.iter().map(|c| c[e]).sum::<f64>() / curves.len() as f64).collect()
}

fn window_mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn curves(spec: &ExperimentSpec, method: Method) -> Vec<Vec<f64>> {
    spec.seeds
        .iter()
        .map(|&seed| {
            let cell = run_cell(spec, method, seed, None).unwrap();
            cell.rows.iter().map(|r| r.mean_reward).collect()
        })
        .collect()
}

#[test]
fn criterion_08_convergence_trend() {
    let started = Instant::now();
    let spec = desk_spec();
    let distilled = mean_curve(&curves(&spec, Method::LlmHemarlS2dc));
    let fresh = mean_curve(&curves(&spec, Method::IsacS2dc));
    let episodes = fresh.len();
    let target = window_mean(&fresh[episodes - 20..]);
    // first episode whose trailing 20-episode mean reaches the target
    let reached = (19..distilled.len()).find(|&e| window_mean(&distilled[e - 19..=e]) >= target).map(|e| e + 1);
    let head_distilled = window_mean(&distilled[..20]);
    let head_fresh = window_mean(&fresh[..20]);
    let limit = 0.7 * episodes as f64;
    let elapsed = started.elapsed();
    let pass = reached.is_some_and(|e| e as f64 <= limit) && head_distilled > head_fresh && elapsed < Duration::from_secs(7200);
    report(
        8,
        "convergence trend",
        pass,
        elapsed,
        format!(
            "fresh final-20 mean {target:.1}; distilled reaches it at episode {} (limit {limit:.0}); first-20 means distilled {head_distilled:.1} vs fresh {head_fresh:.1}",
            reached.map_or("never".to_string(), |e| e.to_string())
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_buffer_isolation() {
    let started = Instant::now();
    let spec = desk_spec();
    let cr = &spec.scenario.coverage_range;
    let ns = &spec.scenario.service_capacity;
    assert!(cr[0] != cr[1] && ns[0] != ns[1], "scenario must be heterogeneous");
    let mut wins = 0;
    let mut detail = Vec::new();
    for &seed in &spec.seeds {
        let isac = run_cell(&spec, Method::IsacS2dc, seed, None).unwrap();
        let masac = run_cell(&spec, Method::MasacS2dc, seed, None).unwrap();
        let a = harness::final_mean(&isac.rows, Method::IsacS2dc.name(), seed, 20).unwrap();
        let b = harness::final_mean(&masac.rows, Method::MasacS2dc.name(), seed, 20).unwrap();
        wins += usize::from(a >= b);
        detail.push(format!("seed {seed}: {a:.1} vs {b:.1}"));
    }
    let elapsed = started.elapsed();
    let pass = wins >= 3;
    report(
        9,
        "buffer isolation",
        pass,
        elapsed,
        format!("independent ≥ shared on {wins}/4 seeds [{}]", detail.join(", ")),
    );
    assert!(pass);
}

#[test]
fn criterion_10_determinism() {
    let started = Instant::now();
    let mut spec = desk_spec();
    spec.methods = vec![Method::LlmHemarlS2dc, Method::MasacS2dc];
    spec.seeds = vec![40];
    spec.episodes = 4;
    spec.distill.dataset_episodes = 4;
    spec.distill.updates = 20;
    let base = spec.out_dir.join("determinism");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        spec.out_dir = base.join(run);
        run_experiment(&spec).unwrap();
        outputs.push(std::fs::read(spec.out_dir.join(METRICS_FILE)).unwrap());
    }
    let _ = std::fs::remove_dir_all(&base);
    let elapsed = started.elapsed();
    let pass = !outputs[0].is_empty() && outputs[0] == outputs[1];
    report(10, "determinism", pass, elapsed, format!("{} bytes per metrics file", outputs[0].len()));
    assert!(pass);
}
