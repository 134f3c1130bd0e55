//! Acceptance criteria 1 to 10. Runs without the libtest harness so the
//! PASS/FAIL lines always show; exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use netdual::acrcd::{run_acrcd, AcrcdConfig};
use netdual::dual::{
    block_radii, conj_g, dual_radius, lipschitz_constants, softmax_map, DualProblem, DualState, SRegularizer,
};
use netdual::harness::{fit_rate, iterations_to, reference_optimum};
use netdual::network::{GossipMatrix, Topology};
use netdual::problem::{lp_norm, neg_entropy, ProblemInstance};
use netdual::prox::{prox_lq_scalar, ProxParams};
use netdual::recovery::{consensual_point, primal_from_dual};
use netdual::stm::{run_stm, StmConfig};
use netdual::trace::SolverTrace;

const NU: f64 = 5e-5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn toy(seed: u64, p: f64) -> (ProblemInstance, GossipMatrix) {
    let inst = ProblemInstance::generate(seed, 4, 3, 5, p, 0.5, 1.0).unwrap();
    let g = GossipMatrix::laplacian(&Topology::ring(4).unwrap()).unwrap();
    (inst, g)
}

fn box_reg() -> SRegularizer {
    SRegularizer::penalty(0.0, f64::INFINITY)
}

/// Every trace produced by a dual solver during the run, for criterion 9.
#[derive(Default)]
struct Traces(Vec<(String, SolverTrace)>);

impl Traces {
    fn add(&mut self, name: impl Into<String>, t: &SolverTrace) {
        self.0.push((name.into(), t.clone()));
    }
}

/// Best of `(grid point, value)` over a uniform simplex grid with `steps`
/// divisions per coordinate, `d ∈ {2, 3}`.
fn simplex_grid_sup(t: &[f64], theta: f64, steps: usize) -> (f64, Vec<f64>) {
    let h = 1.0 / steps as f64;
    let f = |x: &[f64]| t.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - theta * neg_entropy(x);
    let mut best = (f64::NEG_INFINITY, vec![]);
    match t.len() {
        2 => {
            for i in 0..=steps {
                let x = [i as f64 * h, 1.0 - i as f64 * h];
                let v = f(&x);
                if v > best.0 {
                    best = (v, x.to_vec());
                }
            }
        }
        3 => {
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let (a, b) = (i as f64 * h, j as f64 * h);
                    let x = [a, b, (1.0 - a - b).max(0.0)];
                    let v = f(&x);
                    if v > best.0 {
                        best = (v, x.to_vec());
                    }
                }
            }
        }
        _ => unreachable!("grid oracle supports d = 2, 3"),
    }
    best
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst_val, mut worst_loc) = (0.0f64, 0.0f64);
    for k in 0..200 {
        let d = if k % 2 == 0 { 2 } else { 3 };
        let theta = rng.random_range(0.1..1.0);
        let t: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (sup, arg) = simplex_grid_sup(&t, theta, 1000);
        worst_val = worst_val.max((conj_g(&t, theta) - sup).abs());
        let x = softmax_map(&t, theta);
        let loc = x.iter().zip(&arg).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_loc = worst_loc.max(loc);
    }
    outcome(
        worst_val <= 2e-3 && worst_loc <= 1e-3,
        format!("max |conj_g - grid sup| = {worst_val:.3e} (tol 2e-3), max softmax vs grid argmax = {worst_loc:.3e} (grid step 1e-3)"),
    )
}

fn random_state(rng: &mut ChaCha8Rng, inst: &ProblemInstance, scale: f64) -> DualState {
    let z = DVector::from_fn(inst.m() * inst.d(), |_, _| rng.random_range(-scale..scale));
    let s = DVector::from_fn(inst.m() * inst.n(), |_, _| rng.random_range(-scale..scale));
    DualState::new(z, s)
}

fn criterion_2() -> Outcome {
    let (inst, g) = toy(7, 2.0);
    let dp = DualProblem::new(&inst, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let h = 1e-6;
    for _ in 0..50 {
        let q = random_state(&mut rng, &inst, 1.0);
        let grad = dp.gradient(&q);
        let mut fd = DualState::new(DVector::zeros(q.z.len()), DVector::zeros(q.s.len()));
        for k in 0..q.z.len() {
            let (mut up, mut dn) = (q.clone(), q.clone());
            up.z[k] += h;
            dn.z[k] -= h;
            fd.z[k] = (dp.smooth_value(&up) - dp.smooth_value(&dn)) / (2.0 * h);
        }
        for k in 0..q.s.len() {
            let (mut up, mut dn) = (q.clone(), q.clone());
            up.s[k] += h;
            dn.s[k] -= h;
            fd.s[k] = (dp.smooth_value(&up) - dp.smooth_value(&dn)) / (2.0 * h);
        }
        let err = DualState::combine(1.0, &fd, -1.0, &grad).norm() / grad.norm();
        worst = worst.max(err);
    }
    outcome(worst <= 1e-5, format!("max relative error = {worst:.3e} over 50 points (tol 1e-5)"))
}

fn criterion_3() -> Outcome {
    let (inst, g) = toy(7, 2.0);
    let dp = DualProblem::new(&inst, &g).unwrap();
    let c = lipschitz_constants(&inst, &g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut rh, mut rz, mut rs) = (0.0f64, 0.0f64, 0.0f64);
    let ratio = |a: &DualState, b: &DualState| {
        let (ga, gb) = (dp.gradient(a), dp.gradient(b));
        DualState::combine(1.0, &ga, -1.0, &gb).norm() / DualState::combine(1.0, a, -1.0, b).norm()
    };
    for k in 0..100 {
        // Mix of wide and tight pairs so both global and local curvature show up.
        let scale = if k % 2 == 0 { 3.0 } else { 0.05 };
        let q1 = random_state(&mut rng, &inst, 3.0);
        let step = random_state(&mut rng, &inst, scale);
        rh = rh.max(ratio(&q1, &DualState::combine(1.0, &q1, 1.0, &step)));
        let mut qz = q1.clone();
        qz.z += &step.z;
        rz = rz.max(ratio(&q1, &qz));
        let mut qs = q1.clone();
        qs.s += &step.s;
        rs = rs.max(ratio(&q1, &qs));
    }
    let pass = rh <= c.l_h + 1e-12 && rz <= c.l_z + 1e-12 && rs <= c.l_s + 1e-12;
    outcome(
        pass,
        format!(
            "max ratios: full {rh:.4} <= L_H {:.4}, z-only {rz:.4} <= L_z {:.4}, s-only {rs:.4} <= L_s {:.4}",
            c.l_h, c.l_z, c.l_s
        ),
    )
}

/// Minimizes the scalar prox objective by repeated grid refinement down to
/// spacing 1e-9.
fn grid_prox(t: f64, gamma: f64, nu: f64, q: f64) -> f64 {
    let obj = |v: f64| (t - v).powi(2) / (2.0 * gamma) + nu * v.abs().powf(q);
    let (mut lo, mut hi) = (-t.abs() - 1e-3, t.abs() + 1e-3);
    loop {
        let n = 1000;
        let h = (hi - lo) / n as f64;
        let mut best = (lo, obj(lo));
        for k in 0..=n {
            let v = lo + h * k as f64;
            let f = obj(v);
            if f < best.1 {
                best = (v, f);
            }
        }
        if h <= 1e-9 {
            return best.0;
        }
        lo = best.0 - 2.0 * h;
        hi = best.0 + 2.0 * h;
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let qs = [1.0, 1.5, 2.0, 3.0];
    let (mut worst_obj, mut worst_loc, mut worst_closed) = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for k in 0..100 {
        let t = rng.random_range(-5.0..5.0);
        let gamma = rng.random_range(0.05..3.0);
        let nu = rng.random_range(0.0..2.0);
        let q = qs[k % 4];
        let obj = |v: f64| (t - v).powi(2) / (2.0 * gamma) + nu * v.abs().powf(q);
        let s = prox_lq_scalar(t, &ProxParams::new(gamma, nu, q)).unwrap();
        let g = grid_prox(t, gamma, nu, q);
        worst_obj = worst_obj.max(obj(s) - obj(g));
        worst_loc = worst_loc.max((s - g).abs());
        if q == 2.0 {
            worst_closed = worst_closed.max((s - t / (1.0 + 2.0 * gamma * nu)).abs());
        }
    }
    outcome(
        worst_obj <= 1e-8 && worst_closed <= 1e-12,
        format!(
            "max objective excess over refined grid = {worst_obj:.3e} (tol 1e-8), max |prox - grid argmin| = {worst_loc:.3e}, \
             q=2 closed form max diff = {worst_closed:.3e} (tol 1e-12)"
        ),
    )
}

fn criterion_5(traces: &mut Traces) -> Outcome {
    let start = Instant::now();
    let (inst, g) = toy(7, 2.0);
    let dp = DualProblem::new(&inst, &g).unwrap();
    let c = lipschitz_constants(&inst, &g).unwrap();
    let reg = SRegularizer::constrained(NU, 2.0);
    let budget = 7000;
    let reference = reference_optimum(&dp, reg, 50 * budget).unwrap();
    let q_star_sq = reference.q.norm_squared();
    let mut cfg = StmConfig::new(budget, reg);
    cfg.stall_window = u64::MAX;
    let run = run_stm(&dp, &cfg).unwrap();
    traces.add("stm p=2 toy", &run.trace);
    let rate = fit_rate(&run.trace, "dual_obj", reference.f_star, (10, 500)).unwrap();
    let mut pass = (-2.6..=-1.6).contains(&rate.slope) && rate.r_squared >= 0.9 && rate.window == (10, 500);
    let mut detail = format!(
        "slope {:.4} over {}..{}, r2 {:.4}; ",
        rate.slope, rate.window.0, rate.window.1, rate.r_squared
    );
    for eps in [1e-2, 1e-3, 1e-4] {
        let bound = 8.0 * (c.l_h * q_star_sq / (inst.m() as f64 * eps)).sqrt();
        let hit = iterations_to(&run.trace, "dual_obj", reference.f_star, eps).unwrap();
        match hit {
            Some(k) if (k as f64) <= bound => detail.push_str(&format!("eps {eps:e}: {k} <= {bound:.0}; ")),
            other => {
                pass = false;
                detail.push_str(&format!("eps {eps:e}: {other:?} vs bound {bound:.0}; "));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    detail.push_str(&format!("|q*|^2 {q_star_sq:.4}, runtime {secs:.1}s"));
    outcome(pass, detail)
}

fn criterion_6(traces: &mut Traces) -> Outcome {
    let (inst, g) = toy(7, 1.0);
    let dp = DualProblem::new(&inst, &g).unwrap();
    let c = lipschitz_constants(&inst, &g).unwrap();
    let mut cfg = StmConfig::new(200_000, box_reg());
    cfg.record_every = 1000;
    cfg.stall_window = u64::MAX;
    let stm = run_stm(&dp, &cfg).unwrap();
    traces.add("stm p=1 toy", &stm.trace);
    let mut best = f64::INFINITY;
    for seed in 0..10 {
        let mut ac = AcrcdConfig::from_constants(&c, 20_000, seed).unwrap();
        ac.record_every = 10;
        let run = run_acrcd(&dp, &ac).unwrap();
        traces.add(format!("acrcd p=1 toy seed {seed}"), &run.trace);
        best = best.min(run.best_objective);
    }
    // Box mode carries no ν term, so the ν·R_s² allowance is zero.
    let tol = 1e-4;
    let diff = (best - stm.best_objective).abs();
    outcome(
        diff <= tol,
        format!("F_ACRCD {best:.10}, F_STM {:.10}, |diff| {diff:.3e} (tol {tol:e})", stm.best_objective),
    )
}

fn criterion_7(traces: &mut Traces) -> Outcome {
    let (inst, g) = toy(7, 1.0);
    let dp = DualProblem::new(&inst, &g).unwrap();
    let c = lipschitz_constants(&inst, &g).unwrap();
    let n = 10_000u64;
    let mut ac = AcrcdConfig::from_constants(&c, n, 77).unwrap();
    ac.record_every = 100;
    let run = run_acrcd(&dp, &ac).unwrap();
    traces.add("acrcd counter split", &run.trace);
    let (comm, comp) = (run.final_state.n_comm as f64, run.final_state.n_comp as f64);
    let mean = c.eta * n as f64;
    let sd = (n as f64 * c.eta * (1.0 - c.eta)).sqrt();
    let ratio = comm / comp;
    let target = g.lambda_max() / c.data.sigma_max;
    let pass = (comm - mean).abs() <= 3.0 * sd && (ratio / target - 1.0).abs() <= 0.25;
    outcome(
        pass,
        format!(
            "n_comm {comm} vs eta*N {mean:.1} (3 sd = {:.1}); comm/comp {ratio:.4} vs lambda_max/sigma_max {target:.4}",
            3.0 * sd
        ),
    )
}

/// `λ_min⁺` of `(W² ⊗ I_d) + blockdiag(A_iᵀ A_i)`, i.e. of `B Bᵀ`.
fn lambda_min_plus_bbt(inst: &ProblemInstance, g: &GossipMatrix) -> f64 {
    let (m, d) = (inst.m(), inst.d());
    let w2 = g.matrix() * g.matrix();
    let mut mat = DMatrix::<f64>::zeros(m * d, m * d);
    for i in 0..m {
        for j in 0..m {
            for k in 0..d {
                mat[(i * d + k, j * d + k)] += w2[(i, j)];
            }
        }
        let ata = inst.a()[i].transpose() * &inst.a()[i];
        let mut blk = mat.view_mut((i * d, i * d), (d, d));
        blk += &ata;
    }
    let mut eig: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let top = *eig.last().unwrap();
    eig.into_iter().find(|&l| l > 1e-9 * top).unwrap()
}

fn criterion_8(traces: &mut Traces) -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for seed in 1..=5 {
        let (inst, g) = toy(seed, 1.0);
        let dp = DualProblem::new(&inst, &g).unwrap();
        let mut cfg = StmConfig::new(200_000, box_reg());
        cfg.record_every = 1000;
        cfg.stall_window = u64::MAX;
        let run = run_stm(&dp, &cfg).unwrap();
        traces.add(format!("stm p=1 seed {seed}"), &run.trace);
        let q = &run.q;
        let x_star = consensual_point(&primal_from_dual(q, &dp));
        let interior = x_star.iter().all(|&v| v > 0.0);
        let s_inf = lp_norm(q.s.as_slice(), f64::INFINITY);
        let r_dual = dual_radius(&inst, &g, &x_star).unwrap();
        let (rz2, rs2) = block_radii(&inst, &g, &x_star, inst.q()).unwrap();
        let c = lipschitz_constants(&inst, &g).unwrap();
        let claimed = c.data.sigma_min_plus.powi(2).min(g.lambda_min_plus().powi(2));
        let actual = lambda_min_plus_bbt(&inst, &g);
        let caveat = actual < claimed * (1.0 - 1e-9);
        let q_sq = q.norm_squared();
        let within = q_sq <= r_dual;
        pass &= interior && s_inf <= 1.0 + 1e-6;
        if !caveat {
            pass &= within;
        }
        lines.push(format!(
            "seed {seed}: |s*|_inf {s_inf:.6}, |q*|^2 {q_sq:.3} vs R_dual^2 {r_dual:.3} ({}), |z*|^2 {:.3} vs R_z^2 {rz2:.3}, |s*|^2 {:.3} vs R_s^2 {rs2:.0}, caveat {}",
            if within { "ok" } else { "VIOLATION" },
            q.z.norm_squared(),
            q.s.norm_squared(),
            if caveat {
                format!("triggered (lambda_min+(BB^T) {actual:.4} < {claimed:.4})")
            } else {
                "not triggered".to_string()
            }
        ));
    }
    outcome(pass, lines.join("\n      "))
}

fn criterion_9(traces: &Traces) -> Outcome {
    let mut rows = 0usize;
    let mut violations = Vec::new();
    for (name, t) in &traces.0 {
        for r in t.rows() {
            rows += 1;
            // gap = primal - Φ; Φ ≤ primal + 1e-8 means gap ≥ -1e-8.
            if r.gap < -1e-8 || r.gap.is_nan() {
                violations.push(format!("{name} iter {} gap {:e}", r.iter, r.gap));
            }
        }
    }
    outcome(
        violations.is_empty(),
        format!(
            "{} traces, {rows} recorded iterates, {} violations{}",
            traces.0.len(),
            violations.len(),
            violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

fn criterion_10() -> Outcome {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/toy.cfg");
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, extra) in [("stm", vec![]), ("acrcd", vec!["--p", "1", "--solver", "acrcd", "--seed", "5"])] {
        let mut csv = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{label}{k}"));
            let status = Command::new(env!("CARGO_BIN_EXE_netdual"))
                .arg("solve")
                .arg("--config")
                .arg(&cfg)
                .args(&extra)
                .arg("--output")
                .arg(&out)
                .output()
                .unwrap();
            pass &= status.status.success();
            csv.push(std::fs::read(out.join("trace.csv")).unwrap_or_default());
        }
        let same = !csv[0].is_empty() && csv[0] == csv[1];
        pass &= same;
        detail.push(format!("{label}: {} bytes, identical {same}", csv[0].len()));
    }
    outcome(pass, detail.join("; "))
}

fn main() {
    let mut traces = Traces::default();
    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "conjugate oracle", criterion_1()),
        (2, "gradient vs finite differences", criterion_2()),
        (3, "Lipschitz bounds", criterion_3()),
        (4, "prox oracle", criterion_4()),
        (5, "STM rate", criterion_5(&mut traces)),
        (6, "cross-solver agreement", criterion_6(&mut traces)),
        (7, "ACRCD counter split", criterion_7(&mut traces)),
        (8, "dual radius diagnostics", criterion_8(&mut traces)),
        (9, "weak duality", criterion_9(&traces)),
        (10, "determinism", criterion_10()),
    ];
    let mut failed = 0;
    for (k, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {k:>2} {tag}: {name}: {}", o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
