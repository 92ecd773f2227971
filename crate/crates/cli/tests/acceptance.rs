//! Acceptance suite. Every test writes one `criterion N: PASS|FAIL ...` line
//! to stderr.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use chainroll::fixtures::{three_state_escape, two_state_cycle};
use chainroll::provider::{decode_via_provider, InMemoryProvider, ProcessProvider, StateKey};
use chainroll::{
    brute_force_optimal, decode, decode_chain, generate_chain, optimal_tables, optimal_trajectory,
    Decoder, GenSpec, Policy, RolloutSpec, StateId, TransitionModel,
};
use chainroll_cli::{evaluate, run_experiment, ExperimentConfig, ExperimentOutput};

const BIN: &str = env!("CARGO_BIN_EXE_chainroll");

fn report(n: usize, ok: bool, detail: impl AsRef<str>) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!("criterion {n}: {verdict} {}\n", detail.as_ref());
    // Straight to the stream so the line shows without --nocapture.
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {}", detail.as_ref());
}

fn rollout(ell: usize) -> RolloutSpec {
    RolloutSpec::with_lookahead(ell)
}

fn lp(model: &TransitionModel, x: usize, horizon: usize, policy: Policy) -> f64 {
    decode(model, StateId(x), horizon, &policy)
        .unwrap()
        .0
        .log_prob
        .value()
}

/// Distinct paths with mathematically equal probability can differ in the
/// last bits once summed in a different order.
const TIE_TOLERANCE: f64 = 1e-9;

const STANDARD_CONFIG: &str = "\
chains = 50
states = 100
out_degree = 5
seed = 1
horizon = 100
policies = greedy, optimal, rollout_l1, rollout_l2, rollout_l3, rollout_l4, rollout_l5, rollout_l1_m10, rollout_l2_m10, rollout_l3_m10, rollout_l4_m10, rollout_l5_m10, rollout_l1_r1
recovery = true
";

/// The 50-chain, 100-state, 5% branching, N = 100 experiment, shared by
/// criteria 3, 4 and 6.
fn standard() -> &'static (ExperimentOutput, Duration) {
    static RUN: OnceLock<(ExperimentOutput, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let started = Instant::now();
        let out = evaluate(&ExperimentConfig::parse(STANDARD_CONFIG).unwrap()).unwrap();
        (out, started.elapsed())
    })
}

fn recovery(label: &str) -> f64 {
    standard().0.report.recovery(label).unwrap()
}

#[test]
fn criterion_01_oracle_equivalence() {
    let started = Instant::now();
    let (mut chains, mut checks, mut worst) = (0, 0, 0.0f64);
    for i in 0..240u64 {
        let states = 3 + (i % 4) as usize;
        let q = 2 + ((i / 4) % 2) as usize;
        let horizon = 2 + ((i / 8) % 7) as usize;
        let model = generate_chain(&GenSpec::new(states, q, 1000 + i)).unwrap();
        let table = optimal_tables(&model, horizon).unwrap();
        for x in 0..states {
            let dp = optimal_trajectory(&model, StateId(x), horizon, &table).unwrap();
            let bf = brute_force_optimal(&model, StateId(x), horizon).unwrap();
            worst = worst.max((dp.log_prob.value() - bf.log_prob.value()).abs());
            checks += 1;
        }
        chains += 1;
    }
    let elapsed = started.elapsed();
    report(
        1,
        worst <= 1e-9 && elapsed < Duration::from_secs(60),
        format!(
            "{chains} chains, {checks} start states, max |dp - brute| = {worst:e}, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_02_worked_examples() {
    let mut errors = Vec::new();
    fn check(errors: &mut Vec<String>, what: &str, got: f64, want: f64) {
        if (got - want).abs() > 1e-12 {
            errors.push(format!("{what}: {got} vs {want}"));
        }
    }
    let ts = two_state_cycle(0.6);
    let (g, _) = decode(&ts, StateId(0), 4, &Policy::Greedy).unwrap();
    let (o, _) = decode(&ts, StateId(0), 4, &Policy::Optimal).unwrap();
    let (r, _) = decode(&ts, StateId(0), 4, &Policy::Rollout(rollout(1))).unwrap();
    check(
        &mut errors,
        "TS(0.6) greedy",
        g.log_prob.prob(),
        0.6f64.powi(4),
    );
    check(
        &mut errors,
        "TS(0.6) optimal",
        o.log_prob.prob(),
        0.4f64.powi(2),
    );
    check(
        &mut errors,
        "TS(0.6) rollout l1",
        r.log_prob.prob(),
        0.4f64.powi(2),
    );
    let alternating = [1, 0, 1, 0].map(StateId).to_vec();
    if o.states != alternating || r.states != alternating {
        errors.push("TS(0.6) optimal/rollout states differ from [1,0,1,0]".into());
    }

    let ts7 = two_state_cycle(0.7);
    check(
        &mut errors,
        "TS(0.7) greedy",
        lp(&ts7, 0, 4, Policy::Greedy).exp(),
        0.7f64.powi(4),
    );
    check(
        &mut errors,
        "TS(0.7) optimal",
        lp(&ts7, 0, 4, Policy::Optimal).exp(),
        0.7f64.powi(4),
    );

    let tr = three_state_escape(0.6);
    let (g, _) = decode(&tr, StateId(0), 4, &Policy::Greedy).unwrap();
    let (r1, _) = decode(&tr, StateId(0), 4, &Policy::Rollout(rollout(1))).unwrap();
    let (r2, _) = decode(&tr, StateId(0), 4, &Policy::Rollout(rollout(2))).unwrap();
    let (o, _) = decode(&tr, StateId(0), 4, &Policy::Optimal).unwrap();
    check(
        &mut errors,
        "TR(0.6) greedy",
        g.log_prob.prob(),
        0.6f64.powi(4),
    );
    check(
        &mut errors,
        "TR(0.6) rollout l1",
        r1.log_prob.prob(),
        0.6f64.powi(4),
    );
    check(
        &mut errors,
        "TR(0.6) rollout l2",
        r2.log_prob.prob(),
        0.4f64.powi(2),
    );
    check(
        &mut errors,
        "TR(0.6) optimal",
        o.log_prob.prob(),
        0.4f64.powi(2),
    );
    if r1.states != g.states {
        errors.push("TR(0.6) rollout l1 differs from greedy".into());
    }
    let escape = [1, 2, 2, 2].map(StateId).to_vec();
    if r2.states != escape || o.states != escape {
        errors.push("TR(0.6) rollout l2/optimal states differ from [1,2,2,2]".into());
    }

    // Two-state cycle over p: greedy stays (p > 0.5); alternating wins while
    // sqrt(1 - p) > p, i.e. p below the golden-ratio threshold.
    let threshold = (5f64.sqrt() - 1.0) / 2.0;
    for i in 1..50 {
        let p = 0.5 + 0.01 * i as f64;
        let m = two_state_cycle(p);
        check(
            &mut errors,
            &format!("TS({p:.2}) greedy"),
            lp(&m, 0, 4, Policy::Greedy).exp(),
            p.powi(4),
        );
        let want = if p < threshold {
            (1.0 - p).powi(2)
        } else {
            p.powi(4)
        };
        check(
            &mut errors,
            &format!("TS({p:.2}) optimal"),
            lp(&m, 0, 4, Policy::Optimal).exp(),
            want,
        );
    }
    report(
        2,
        errors.is_empty(),
        if errors.is_empty() {
            "TS(0.6), TS(0.7), TR(0.6) and the p sweep match closed forms within 1e-12".to_string()
        } else {
            errors.join("; ")
        },
    );
}

#[test]
fn criterion_03_improvement_over_greedy() {
    let (out, elapsed) = standard();
    let rows = &out.report.per_state;
    let greedy = |chain: usize, state: usize| {
        rows.iter()
            .find(|r| r.chain == chain && r.state == state && r.policy == "greedy")
            .unwrap()
            .log_prob
            .value()
    };
    let mut detail = Vec::new();
    let mut ok = true;
    for ell in 1..=5 {
        let label = format!("rollout_l{ell}");
        let (mut pairs, mut violations) = (0, 0);
        for r in rows.iter().filter(|r| r.policy == label) {
            pairs += 1;
            if r.log_prob.value() < greedy(r.chain, r.state) {
                violations += 1;
            }
        }
        ok &= pairs == 5000 && violations == 0;
        detail.push(format!("l={ell}: {violations}/{pairs} violations"));
    }
    report(
        3,
        ok,
        format!(
            "{} (50 chains x 100 states, N=100, {elapsed:.2?})",
            detail.join(", ")
        ),
    );
}

#[test]
fn criterion_04_recovery_band() {
    let mut ok = true;
    let mut detail = Vec::new();
    for ell in 1..=5 {
        let full = recovery(&format!("rollout_l{ell}"));
        let trunc = recovery(&format!("rollout_l{ell}_m10"));
        ok &= (50.0..=100.0).contains(&full) && (50.0..=100.0).contains(&trunc);
        ok &= (full - trunc).abs() <= 10.0;
        detail.push(format!("l{ell} {full:.1}%/m10 {trunc:.1}%"));
    }
    ok &= recovery("rollout_l5") >= recovery("rollout_l1");
    report(4, ok, detail.join(", "));
}

#[test]
fn criterion_05_full_lookahead_is_optimal() {
    let mut worst = 0.0f64;
    let mut checks = 0;
    for i in 0..20u64 {
        let states = 6 + (i % 7) as usize;
        let q = 2 + (i % 2) as usize;
        let horizon = 3 + (i % 8) as usize;
        let model = generate_chain(&GenSpec::new(states, q, 500 + i)).unwrap();
        for x in 0..states {
            let full = lp(&model, x, horizon, Policy::Rollout(rollout(horizon)));
            let opt = lp(&model, x, horizon, Policy::Optimal);
            worst = worst.max((full - opt).abs());
            checks += 1;
        }
    }
    report(
        5,
        worst <= 1e-9,
        format!("20 chains, {checks} start states, max |l=N - optimal| = {worst:e}"),
    );
}

#[test]
fn criterion_06_double_rollout() {
    let rows = &standard().0.report.per_state;
    let single: Vec<_> = rows.iter().filter(|r| r.policy == "rollout_l1").collect();
    let double: Vec<_> = rows
        .iter()
        .filter(|r| r.policy == "rollout_l1_r1")
        .collect();
    let violations = single
        .iter()
        .zip(&double)
        .filter(|(s, d)| {
            assert_eq!((s.chain, s.state), (d.chain, d.state));
            d.log_prob.value() < s.log_prob.value() - TIE_TOLERANCE
        })
        .count();
    let (r0, r1) = (recovery("rollout_l1"), recovery("rollout_l1_r1"));
    report(
        6,
        r1 > r0 && violations == 0 && double.len() == 5000,
        format!(
            "level 0 {r0:.1}%, level 1 {r1:.1}%, {violations}/{} per-state decreases beyond 1e-9",
            double.len()
        ),
    );
}

#[test]
fn criterion_07_policy_iteration_converges() {
    let mut levels_needed = Vec::new();
    let mut decreases = 0;
    let mut unconverged = 0;
    let mut late_levels = Vec::new();
    for i in 0..20u64 {
        let states = 8 + (i % 8) as usize;
        let q = 2 + (i % 3) as usize;
        let horizon = 6 + (i % 15) as usize;
        let model = generate_chain(&GenSpec::new(states, q, 700 + i)).unwrap();
        let table = optimal_tables(&model, horizon).unwrap();
        let decoders: Vec<_> = (0..=5)
            .map(|r| Decoder::new(&model, horizon, &Policy::Rollout(rollout(1).level(r))).unwrap())
            .collect();
        let mut decoders = decoders;
        for x in 0..states {
            let opt = table.value(0, StateId(x)).value();
            let mut prev = f64::NEG_INFINITY;
            let mut reached = None;
            for (r, d) in decoders.iter_mut().enumerate() {
                let (t, _) = d.decode(&StateId(x)).unwrap();
                let v = model
                    .trajectory_logprob(StateId(x), &t.states)
                    .unwrap()
                    .value();
                if v < prev - TIE_TOLERANCE {
                    decreases += 1;
                }
                prev = v;
                if reached.is_none() && (v - opt).abs() <= 1e-9 {
                    reached = Some(r);
                }
            }
            match reached {
                Some(r) => levels_needed.push(r),
                None => {
                    // Policy iteration is exact by level N - 1; find where it got there.
                    let late = (6..horizon).find(|&r| {
                        (lp(&model, x, horizon, Policy::Rollout(rollout(1).level(r))) - opt).abs()
                            <= 1e-9
                    });
                    let late = late.map_or("none below N".to_string(), |r| r.to_string());
                    late_levels.push(format!(
                        "state {x} of chain {i} (N={horizon}) at level {late}"
                    ));
                    unconverged += 1;
                }
            }
        }
    }
    let max_level = levels_needed.iter().copied().max().unwrap_or(0);
    report(
        7,
        decreases == 0 && unconverged == 0,
        format!(
            "{} start states, {unconverged} not optimal by level 5, {decreases} level-to-level decreases beyond 1e-9, highest level needed {max_level}{}",
            levels_needed.len() + unconverged,
            if late_levels.is_empty() { String::new() } else { format!("; converged late: {}", late_levels.join(", ")) }
        ),
    );
}

#[test]
fn criterion_08_cost_accounting() {
    let (n, q, m, horizon) = (30, 3u64, 4u64, 20u64);
    let model = generate_chain(&GenSpec::new(n, q as usize, 8)).unwrap();
    let policy = Policy::Rollout(rollout(1).truncate(m as usize).width(q as usize));
    let (_, greedy) = decode(&model, StateId(0), horizon as usize, &Policy::Greedy).unwrap();
    let (_, cost) = decode(&model, StateId(0), horizon as usize, &policy).unwrap();

    // Per step: q candidates, each scored by a min(m, N-k-1)-step greedy tail.
    let clamped: u64 = (0..horizon)
        .map(|k| q + q * q * m.min(horizon - k - 1))
        .sum();
    let mut decoder = Decoder::new(&model, horizon as usize, &policy).unwrap();
    let mut x = StateId(0);
    let mut full_steps_ok = true;
    for k in 0..horizon {
        let step = decoder.step(&x, k as usize).unwrap();
        if k + m < horizon {
            full_steps_ok &= step.cost.comparisons == q * q * m + q;
        }
        x = step.next;
    }

    let literal = (q * q * m + q) * horizon;
    let literal_ok =
        cost.comparisons == literal && cost.comparisons == (q * m + 1) * greedy.comparisons;
    let detail = format!(
        "q={q} m={m} N={horizon}: recorded {} vs (q^2 m + q) N = {literal}; ratio to greedy {} = {:.4} vs qm+1 = {}; \
         horizon-clamped total {clamped} {}; per-step q^2 m + q for every k+m<N {}",
        cost.comparisons,
        greedy.comparisons,
        cost.comparisons as f64 / greedy.comparisons as f64,
        q * m + 1,
        if cost.comparisons == clamped { "matches" } else { "DIFFERS" },
        if full_steps_ok { "holds" } else { "FAILS" },
    );
    assert_eq!(greedy.comparisons, q * horizon, "greedy records q per step");
    assert_eq!(cost.comparisons, clamped, "clamped total");
    assert!(full_steps_ok, "per-step cost");
    report(8, literal_ok, detail);
}

#[test]
fn criterion_09_manifest_rerun_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let text = "chains = 6\nstates = 40\nout_degree = 4\nseed = 21\nhorizon = 30\npolicies = greedy, optimal, rollout_l1, rollout_l2_m5, rollout_l1_w2_r1\nrecovery = true\nthreads = 2\n";
    let first = dir.path().join("first");
    run_experiment(&ExperimentConfig::parse(text).unwrap(), &first).unwrap();
    let manifest = first.join("manifest.txt");
    let mut identical = true;
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let status = std::process::Command::new(BIN)
            .args([
                "exp",
                "--config",
                manifest.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        for csv in ["per_state.csv", "aggregate.csv"] {
            identical &= fs::read(first.join(csv)).unwrap() == fs::read(out.join(csv)).unwrap();
        }
    }
    report(
        9,
        identical,
        "CSVs rerun from the manifest with 1 and 3 threads are byte-identical to the 2-thread run",
    );
}

#[test]
fn criterion_10_provider_matches_in_memory() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/chain50_q15.chain");
    let model = decode_chain(&fs::read_to_string(&path).unwrap()).unwrap();
    let process = ProcessProvider::spawn(
        BIN,
        &["serve".into(), "--chain".into(), path.display().to_string()],
    )
    .unwrap();
    let memory = InMemoryProvider::new(model.clone());
    let horizon = 30;
    let policies = [
        Policy::Greedy,
        Policy::Rollout(rollout(1).truncate(10).width(10)),
        Policy::Rollout(rollout(2).width(10)),
    ];
    let mut mismatches = 0;
    for policy in &policies {
        for x in 0..model.state_count() {
            let key = StateKey::from(StateId(x));
            let (a, _) = decode_via_provider(&process, &key, horizon, policy).unwrap();
            let (b, _) = decode_via_provider(&memory, &key, horizon, policy).unwrap();
            let (c, _) = decode(&model, StateId(x), horizon, policy).unwrap();
            let same = a.render_states() == c.render_states()
                && a.render_states() == b.render_states()
                && a.log_prob.value().to_bits() == c.log_prob.value().to_bits();
            if !same {
                mismatches += 1;
            }
        }
    }
    let simplified = Policy::Rollout(rollout(1).truncate(10).width(10));
    let better = (0..model.state_count())
        .filter(|&x| lp(&model, x, horizon, simplified) >= lp(&model, x, horizon, Policy::Greedy))
        .count();
    let share = better as f64 / model.state_count() as f64;
    report(
        10,
        mismatches == 0 && share >= 0.9,
        format!(
            "{mismatches} provider/in-memory mismatches over {} decodes; rollout_l1_m10_w10 >= greedy on {:.0}% of states",
            policies.len() * model.state_count(),
            share * 100.0
        ),
    );
}
