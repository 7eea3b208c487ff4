//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use remoteop_core::engine::Outcomes;
use remoteop_core::gates::{GateMatrix, Permutation};
use remoteop_core::random::{
    random_density, random_hpv, random_hybrid, random_phase, random_state, random_unitary, random_wang, seeded,
    SeededRng,
};
use remoteop_core::restricted::{classify, decompose, RestrictedOp};
use remoteop_core::sim::{fidelity, phase_aligned_deviation};
use remoteop_core::verify::{appendix_trace, direct_apply, mixed_state_check};
use remoteop_core::{run_protocol, Protocol, RunResult, StateVector};

const FIDELITY_FLOOR: f64 = 1.0 - 1e-9;
const PROB_TOL: f64 = 1e-10;
const STATE_TOL: f64 = 1e-10;

struct Outcome {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

/// Runs seen so far, for the ledger and locality criteria.
#[derive(Default)]
struct Audit {
    runs: usize,
    ledger_mismatches: usize,
    locality_violations: usize,
    gate_events: usize,
}

impl Audit {
    fn record(&mut self, runs: &[RunResult]) {
        for r in runs {
            self.runs += 1;
            let (ebits, cbits) = r.protocol.predicted_cost(r.n, r.m);
            if r.ledger.ebits_consumed != ebits || r.ledger.cbits() != cbits {
                self.ledger_mismatches += 1;
            }
            self.locality_violations += r.locality_violations();
            self.gate_events += r.events.len();
        }
    }

    fn record_locality(&mut self, runs: &[RunResult]) {
        for r in runs {
            self.locality_violations += r.locality_violations();
            self.gate_events += r.events.len();
        }
    }
}

/// Worst fidelity and worst probability error over all branches.
fn score(runs: &[RunResult], expected: &StateVector, branch_prob: f64) -> (f64, f64) {
    runs.iter().fold((1.0f64, 0.0f64), |(f, p), r| {
        let fid = fidelity(&r.final_y_state, expected).expect("same dimension");
        (f.min(fid), p.max((r.probability - branch_prob).abs()))
    })
}

fn timed(id: u8, name: &'static str, limit: Option<Duration>, body: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (mut pass, mut detail) = body();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed >= limit {
            pass = false;
            detail.push_str(&format!("; over the {:.0} s budget", limit.as_secs_f64()));
        }
    }
    Outcome {
        id,
        name,
        pass,
        detail,
        elapsed,
    }
}

fn hpv_faithfulness(audit: &mut Audit) -> (bool, String) {
    let mut rng = seeded(1001);
    let (mut worst_f, mut worst_p, mut branches) = (1.0f64, 0.0f64, 0);
    for d in [0u8, 1] {
        for _ in 0..100 {
            let op = random_hpv(d, &mut rng);
            let xi = random_state(1, &mut rng);
            let runs = run_protocol(Protocol::Hpv, &op, &xi).expect("hpv run");
            let (f, p) = score(&runs, &direct_apply(&op, &xi).unwrap(), 0.25);
            worst_f = worst_f.min(f);
            worst_p = worst_p.max(p);
            branches += runs.len();
            audit.record(&runs);
        }
    }
    let pass = branches == 800 && worst_f >= FIDELITY_FLOOR && worst_p <= PROB_TOL;
    (pass, format!("{branches} branches, min fidelity {worst_f:.15}, max |p-1/4| {worst_p:.1e}"))
}

fn wang_faithfulness(audit: &mut Audit) -> (bool, String) {
    let mut rng = seeded(1002);
    let (mut worst_f, mut worst_p, mut branches, mut instances) = (1.0f64, 0.0f64, 0, 0);
    for perm in Permutation::all(2) {
        let t = (0..4).map(|_| random_phase(&mut rng)).collect();
        let op = RestrictedOp::wang(perm, t).unwrap();
        let xi = random_state(2, &mut rng);
        let runs = run_protocol(Protocol::Wang, &op, &xi).expect("wang run");
        let (f, p) = score(&runs, &direct_apply(&op, &xi).unwrap(), 1.0 / 16.0);
        worst_f = worst_f.min(f);
        worst_p = worst_p.max(p);
        branches += runs.len();
        instances += 1;
        audit.record(&runs);
    }
    let pass = instances == 24 && branches == 24 * 16 && worst_f >= FIDELITY_FLOOR && worst_p <= PROB_TOL;
    (
        pass,
        format!("{instances} permutations, {branches} branches, min fidelity {worst_f:.15}, max |p-1/16| {worst_p:.1e}"),
    )
}

fn hybrid_faithfulness(audit: &mut Audit, ops: &mut Vec<(RestrictedOp, StateVector)>) -> (bool, String) {
    let mut rng = seeded(1003);
    let (mut worst_f, mut pass, mut branches) = (1.0f64, true, 0);
    for (n, m, expected_branches) in [(1, 1, 64), (2, 1, 256)] {
        for _ in 0..50 {
            let op = random_hybrid(n, m, &mut rng);
            let xi = random_state(n + m, &mut rng);
            let runs = run_protocol(Protocol::Hybrid, &op, &xi).expect("hybrid run");
            pass &= runs.len() == expected_branches;
            let (f, _) = score(&runs, &direct_apply(&op, &xi).unwrap(), 1.0 / expected_branches as f64);
            worst_f = worst_f.min(f);
            branches += runs.len();
            audit.record(&runs);
            ops.push((op, xi));
        }
    }
    pass &= worst_f >= FIDELITY_FLOOR;
    (pass, format!("{branches} branches, min fidelity {worst_f:.15}"))
}

fn ledger_exactness(audit: &mut Audit, ops: &[(RestrictedOp, StateVector)]) -> (bool, String) {
    let mut pass = audit.ledger_mismatches == 0 && audit.runs > 0;
    let mut baselines = 0;
    // BQST at (2,1) enumerates 4096 branches on 15 qubits, so only the first
    // few of those operators get the full baseline.
    let mut wide = 0;
    for (op, xi) in ops {
        let (n, m) = op.dims();
        if n + m == 3 {
            wide += 1;
            if wide > 3 {
                continue;
            }
        }
        let runs = run_protocol(Protocol::Bqst, op, xi).expect("bqst run");
        for r in &runs {
            pass &= r.ledger.ebits_consumed == 2 * (n + m) && r.ledger.cbits() == 4 * (n + m);
            pass &= r.ledger.ebits_consumed > n + 2 * m;
        }
        audit.record_locality(&runs);
        baselines += runs.len();
    }
    (
        pass,
        format!(
            "{} runs checked, {} mismatches; {baselines} baseline branches at 2(N+M) ebits",
            audit.runs, audit.ledger_mismatches
        ),
    )
}

fn compare_branchwise(a: &[RunResult], b: &[RunResult]) -> (bool, f64) {
    let mut ok = a.len() == b.len();
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let dev = phase_aligned_deviation(&x.final_y_state, &y.final_y_state).expect("same dimension");
        worst = worst.max(dev);
        ok &= x.branch_id == y.branch_id && x.ledger.ebits_consumed == y.ledger.ebits_consumed;
        ok &= x.ledger.cbits() == y.ledger.cbits();
    }
    (ok && worst < STATE_TOL, worst)
}

fn reductions(audit: &mut Audit) -> (bool, String) {
    let mut rng = seeded(1005);
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut check = |a: Vec<RunResult>, b: Vec<RunResult>, audit: &mut Audit| {
        let (ok, dev) = compare_branchwise(&a, &b);
        pass &= ok;
        worst = worst.max(dev);
        audit.record_locality(&a);
        audit.record_locality(&b);
    };
    for i in 0..20 {
        let n = 1 + i % 2;
        let op = random_wang(n, &mut rng);
        let xi = random_state(n, &mut rng);
        check(
            run_protocol(Protocol::Hybrid, &op.to_hybrid(), &xi).unwrap(),
            run_protocol(Protocol::Wang, &op, &xi).unwrap(),
            audit,
        );

        let m = 1 + i % 2;
        let op = random_hybrid(0, m, &mut rng);
        let xi = random_state(m, &mut rng);
        check(
            run_protocol(Protocol::Hybrid, &op, &xi).unwrap(),
            run_protocol(Protocol::Bqst, &op, &xi).unwrap(),
            audit,
        );

        let op = random_hpv((i % 2) as u8, &mut rng);
        let xi = random_state(1, &mut rng);
        check(
            run_protocol(Protocol::Hybrid, &op.to_hybrid(), &xi).unwrap(),
            run_protocol(Protocol::Hpv, &op, &xi).unwrap(),
            audit,
        );
    }
    (pass, format!("60 instance pairs, max branch deviation {worst:.1e}"))
}

fn trace_checkpoints() -> (bool, String) {
    let mut rng = seeded(1006);
    let (mut passed, mut total, mut worst) = (0, 0, 0.0f64);
    for (n, m) in [(1, 0), (2, 0), (0, 1), (1, 1), (2, 1)] {
        for _ in 0..100 {
            let op = random_hybrid(n, m, &mut rng);
            let xi = random_state(n + m, &mut rng);
            let pick = rand::Rng::random_range(&mut rng, 0..Outcomes::count(n, m));
            let report = appendix_trace(&op, &xi, &Outcomes::from_branch_id(n, m, pick)).expect("trace");
            total += 1;
            passed += usize::from(report.passed() && report.checkpoints.len() == 6);
            worst = worst.max(report.max_deviation());
        }
    }
    (passed == 500 && total == 500, format!("{passed}/{total} tuples, max checkpoint deviation {worst:.1e}"))
}

fn mixed_states() -> (bool, String) {
    let mut rng: SeededRng = seeded(1007);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let op = random_hybrid(1, 1, &mut rng);
        let rho = random_density(2, 1 + i % 4, &mut rng);
        worst = worst.max(mixed_state_check(&op, &rho).expect("unitary mode"));
    }
    (worst < 1e-9, format!("20 density matrices, max entry deviation {worst:.1e}"))
}

fn decomposer() -> (bool, String) {
    let mut rng = seeded(1008);
    let mut pass = true;
    let mut instances = 0;
    for n in 0..=3usize {
        for m in 0..=(3 - n) {
            if n + m == 0 {
                continue;
            }
            for _ in 0..200 {
                let op = random_hybrid(n, m, &mut rng);
                let d = decompose(op.build().unwrap().matrix(), n, m).expect("round trip");
                pass &= d.perm == op.permutation();
                pass &= d.blocks.iter().zip(op.blocks()).all(|(g, h)| (g - h).camax() < STATE_TOL);
                pass &= d.ebit_cost == n + 2 * m;
                instances += 1;
            }
        }
    }
    let mut products = 0;
    for (n, m) in [(1, 1), (2, 1), (1, 2)] {
        for _ in 0..20 {
            let t = random_wang(n, &mut rng).build().unwrap();
            let v = GateMatrix::new(random_unitary(1 << m, &mut rng)).unwrap();
            let splits = classify(&t.kron(&v)).expect("classify");
            pass &= splits[0].n == n && splits[0].m == m && splits[0].ebit_cost == n + 2 * m;
            products += 1;
        }
    }
    (pass, format!("{instances} round trips, {products} T(x)V products classified at cost N+2M"))
}

fn main() -> ExitCode {
    let mut audit = Audit::default();
    let mut hybrid_ops = Vec::new();
    let secs = Duration::from_secs;

    let mut results = vec![
        timed(1, "HPV faithfulness", Some(secs(1)), || hpv_faithfulness(&mut audit)),
        timed(2, "Wang faithfulness", Some(secs(5)), || wang_faithfulness(&mut audit)),
        timed(3, "hybrid faithfulness", Some(secs(30)), || {
            hybrid_faithfulness(&mut audit, &mut hybrid_ops)
        }),
    ];
    results.push(timed(4, "resource ledger", None, || ledger_exactness(&mut audit, &hybrid_ops)));
    results.push(timed(5, "reductions", None, || reductions(&mut audit)));
    results.push(timed(6, "intermediate-state trace", Some(secs(60)), trace_checkpoints));
    results.push(timed(7, "mixed states", None, mixed_states));
    results.push(timed(8, "decomposer round trip", None, decomposer));
    results.push(timed(9, "locality audit", None, || {
        (
            audit.locality_violations == 0 && audit.gate_events > 0,
            format!(
                "{} violations over {} gate applications",
                audit.locality_violations, audit.gate_events
            ),
        )
    }));

    let mut failed = 0;
    for r in &results {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {:<26} {verdict}  ({:.2} s) {}",
            r.id,
            r.name,
            r.elapsed.as_secs_f64(),
            r.detail
        );
        failed += usize::from(!r.pass);
    }
    if failed == 0 {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria failed", results.len());
        ExitCode::FAILURE
    }
}
