//! Acceptance checks, one line per criterion.
//!
//! Runs sequentially (no libtest harness) so the timed criteria are not
//! disturbed by other tests competing for cores.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gsp_core::dyadic::{d3, dyadic_block, max_block};
use gsp_core::exact::AlgebraicInput;
use gsp_core::field::{dot4, make_field};
use gsp_core::limit::{q_eps, q_limit, LimitStencil, Operators};
use gsp_core::linear::{apply4, horizontal_average, ModeKind};
use gsp_core::resonance::{
    check_condition_p, enumerate_resonances_exact, enumerate_resonances_float, fujiwara_bound, resonance_poly_coeffs, PVerdict, TAU_RES,
};
use gsp_core::solvers::*;
use gsp_core::{build_mode_basis, potential_vorticity, ExactCarriers, FreqLattice, LinearTables, TorusSpec};
use nalgebra::{DMatrix, Schur};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn eigen_system() -> Outcome {
    let spec = TorusSpec::new([1.0, 1.3, 0.7], 2.0, 1.0, 2.0).unwrap();
    let lat = Arc::new(FreqLattice::new(&spec, 12));
    let start = Instant::now();
    let basis = build_mode_basis(&spec, &lat);
    let elapsed = start.elapsed();
    let tables = LinearTables::new(&spec, &lat);
    let mut residual: f64 = 0.0;
    let mut ortho: f64 = 0.0;
    for i in 0..lat.len() {
        if basis.kind[i] == ModeKind::Zero {
            continue;
        }
        for a in 0..3 {
            let e = basis.vector(i, a);
            let lhs = apply4(&tables.pa[i], e);
            let lam = Complex64::new(0.0, basis.freq(i, a));
            residual = residual.max((0..4).map(|j| (lhs[j] - lam * e[j]).norm_sqr()).sum::<f64>().sqrt());
            for b in 0..3 {
                let expect = if a == b { 1.0 } else { 0.0 };
                ortho = ortho.max((dot4(e, basis.vector(i, b)) - expect).norm());
            }
        }
    }
    outcome(
        residual <= 1e-12 && ortho <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("residual {residual:.2e}, orthonormality {ortho:.2e}, build {elapsed:.2?} at N=12"),
    )
}

fn propagator_isometry() -> Outcome {
    let ops = Operators::new(&TorusSpec::new([1.0, 1.3, 0.7], 2.0, 1.0, 1.0).unwrap(), 4);
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let f = make_initial_data(InitialKind::RandomDivFree, seed, 1.0, 0.0, &ops);
        for tau in [1e-3, 1.0, 1e3] {
            let g = ops.basis.apply_propagator(&f, tau).unwrap();
            worst = worst.max((g.l2_norm() - f.l2_norm()).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max | |L(tau)f| - |f| | = {worst:.2e} over 100 fields"))
}

fn bernstein() -> Outcome {
    let spec = TorusSpec::new([1.0, 1.0, 0.25], 2.0, 1.0, 1.0).unwrap();
    let lat = Arc::new(FreqLattice::new(&spec, 12));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut f = make_field(&lat, |_| [Complex64::new(0.0, 0.0); 4]);
    for c in f.coeffs.iter_mut() {
        *c = std::array::from_fn(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    }
    let mut ok = true;
    let mut worst = (f64::INFINITY, 0.0f64);
    for q in 0..=max_block(&f) {
        let b = dyadic_block(&f, q);
        if b.l2_norm() == 0.0 {
            continue;
        }
        let r = d3(&b).l2_norm() / b.l2_norm() / 2f64.powi(q);
        worst = (worst.0.min(r), worst.1.max(r));
        ok &= (0.75..=8.0 / 3.0).contains(&r);
    }
    outcome(ok, format!("|d3 f|/(2^q |f|) within [{:.4}, {:.4}]", worst.0, worst.1))
}

fn resonance_equivalence() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut sizes = Vec::new();
    for (num, den) in [(2, 1), (4, 1), (9, 4)] {
        let spec = TorusSpec::unit_rational(num, den);
        for n in [3, 6] {
            let exact = enumerate_resonances_exact(&spec, n).unwrap();
            let float = enumerate_resonances_float(&spec, n, TAU_RES).unwrap();
            ok &= exact.same_triples(&float);
            sizes.push(format!("F2={num}/{den},N={n}:{}", exact.len()));
        }
    }
    let one = TorusSpec::unit_rational(1, 1);
    let empty = enumerate_resonances_exact(&one, 8).unwrap().is_empty() && enumerate_resonances_float(&one, 8, TAU_RES).unwrap().is_empty();
    let elapsed = start.elapsed();
    outcome(
        ok && empty && elapsed < Duration::from_secs(120),
        format!("exact == float [{}], F=1 empty at N=8: {empty}, {elapsed:.1?}", sizes.join(" ")),
    )
}

/// Moduli of the roots of Σ c_k x^k (constant first), via companion eigenvalues.
fn root_moduli(c: &[f64], scale: f64) -> Option<Vec<f64>> {
    // roots at zero never violate a bound
    let low = c.iter().take_while(|&&x| x == 0.0).count();
    let mut c = c[low..].to_vec();
    // even polynomials stall the QR iteration on their ± root pairs; solve in y = x² instead
    let mut halvings = 0;
    while c.len() > 2 && c.iter().skip(1).step_by(2).all(|&x| x == 0.0) {
        c = c.iter().step_by(2).copied().collect();
        halvings += 1;
    }
    let d = c.len() - 1;
    if d == 0 {
        return Some(vec![]);
    }
    // x = s·y keeps the roots near the unit circle
    let s = scale.max(1e-300).powi(1 << halvings);
    let scaled: Vec<f64> = c.iter().enumerate().map(|(k, x)| x * s.powi(k as i32)).collect();
    let companion = DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            -scaled[d - 1 - j] / scaled[d]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let schur = Schur::try_new(companion, f64::EPSILON, 10_000)?;
    let root = |y: f64| (y * s).powf(1.0 / f64::from(1u32 << halvings));
    Some(schur.complex_eigenvalues().iter().map(|z| root(z.norm())).collect())
}

fn fujiwara() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut instances = 0;
    let mut degenerate = 0;
    let mut unsolved = 0;
    let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    while instances < 10_000 {
        let kh2 = q(rng.gen_range(1..200), rng.gen_range(1..20));
        let mh2 = q(rng.gen_range(1..200), rng.gen_range(1..20));
        let n3 = rng.gen_range(-12..=12);
        let f2 = q(rng.gen_range(1..50), rng.gen_range(1..20));
        let mut c: Vec<f64> = resonance_poly_coeffs(&kh2, &mh2, n3, &f2).iter().map(|x| x.to_f64().unwrap()).collect();
        while c.last() == Some(&0.0) {
            c.pop();
        }
        if c.len() < 2 {
            degenerate += 1;
            continue;
        }
        instances += 1;
        let bound = fujiwara_bound(&c).unwrap();
        match root_moduli(&c, bound) {
            Some(moduli) => violations += moduli.iter().filter(|&&r| r > bound * (1.0 + 1e-9)).count(),
            None => unsolved += 1,
        }
    }
    outcome(
        violations == 0 && unsolved == 0,
        format!("{instances} instances ({degenerate} constant skipped), {violations} violations, {unsolved} unsolved"),
    )
}

fn cancellations() -> Outcome {
    let ops = Operators::new(&TorusSpec::unit(2.0), 8);
    let stencil = LimitStencil::build(&ops);
    let f = ops.spec.froude;
    let (mut e1, mut e2, mut e3) = (0.0f64, 0.0f64, 0.0f64);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..20 {
        let w = make_initial_data(InitialKind::RandomDivFree, 100 + seed, 1.0, 1.0, &ops);
        let n = w.l2_norm();
        let theta = rng.gen_range(0.0..100.0);
        e1 = e1.max(q_eps(&w, &w, theta, &ops).unwrap().inner(&w).norm() / n.powi(3));
        let wq = ops.basis.qg_projection(&w);
        e2 = e2.max(ops.basis.osc_projection(&q_limit(&wq, &wq, &stencil, &ops).unwrap()).l2_norm() / (n * n));
        let omega = potential_vorticity(&w, f);
        let vq = ops.tables.qg_from_pv(&omega);
        let u1: Vec<_> = vq.coeffs.iter().map(|c| c[0]).collect();
        let u2: Vec<_> = vq.coeffs.iter().map(|c| c[1]).collect();
        let direct = ops.grid.scalar_transport_h(&u1, &u2, &omega);
        let via = potential_vorticity(&q_limit(&w, &w, &stencil, &ops).unwrap(), f);
        e3 = e3.max(via.sub(&direct).l2_norm() / direct.l2_norm());
    }
    outcome(
        e1 <= 1e-10 && e2 <= 1e-12 && e3 <= 1e-10,
        format!("(Q^eps(U,U)|U)/|U|^3 {e1:.2e}, osc part of Q(QG,QG) {e2:.2e}, two-path {e3:.2e}"),
    )
}

fn energy() -> Outcome {
    let ops = Operators::new(&TorusSpec::unit(2.0).with_viscosity(1.0, 2.0), 8);
    let stencil = LimitStencil::build(&ops);
    let v0 = make_initial_data(InitialKind::RandomDivFree, 1, 1.0, 2.0, &ops);
    let cfg = SolverConfig { dt: 1e-3, t_final: 1.0, ..Default::default() };
    let (mut total, mut pv) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut first = None;
    let state = integrate_limit(&v0, &cfg, 1e-3, &stencil, &ops, |s| {
        let (e0, p0) = *first.get_or_insert((s.energy(), s.pv_energy(&ops)));
        total = total.max((s.energy() + s.dissipated) / e0 - 1.0);
        pv = pv.max((s.pv_energy(&ops) + s.dissipated_pv) / p0 - 1.0);
    });
    let ok = state.is_ok() && total <= 1e-8 && pv <= 1e-8;
    outcome(ok, format!("max relative excess: total {total:.2e}, potential vorticity {pv:.2e}"))
}

fn part2_torus() -> TorusSpec {
    let quintic: AlgebraicInput = "algebraic:x^5+x^4-1:[0.85,0.86]".parse().unwrap();
    let a2 = quintic.to_f64().sqrt();
    let exact = ExactCarriers {
        a_sq: [Some(AlgebraicInput::rational(1, 2)), Some(quintic), Some(AlgebraicInput::rational(1, 1))],
        froude_sq: Some(AlgebraicInput::rational(1, 2)),
    };
    TorusSpec::new([0.5f64.sqrt(), a2, 1.0], 0.5f64.sqrt(), 1.0, 2.0).unwrap().with_exact(exact).unwrap()
}

fn horizontal_average_conservation() -> Outcome {
    let spec = part2_torus();
    let verdict = check_condition_p(&spec, 6).unwrap();
    let ops = Operators::new(&spec, 6);
    let stencil = LimitStencil::build(&ops);
    let v0 = make_initial_data(InitialKind::RandomDivFree, 2, 1.0, 2.0, &ops);
    let cfg = SolverConfig { t_final: 1.0, ..Default::default() };
    let mut drift: f64 = 0.0;
    let run = integrate_limit(&v0, &cfg, 0.01, &stencil, &ops, |s| {
        drift = drift.max(horizontal_average(&s.field(&ops)).norm(0.0));
    });
    let skipped = "resonant counterexample (F^2 = 16) skipped";
    outcome(verdict == PVerdict::HoldsByPart2 && run.is_ok() && drift <= 1e-8, format!("{verdict}, drift {drift:.2e} over T=1; {skipped}"))
}

fn convergence() -> Outcome {
    let start = Instant::now();
    let ops = Operators::new(&TorusSpec::unit(2.0), 8);
    let stencil = LimitStencil::build(&ops);
    let v0 = make_initial_data(InitialKind::RandomDivFree, 1, 1.0, 2.0, &ops);
    let cfg = SolverConfig { dt: 1e-3, t_final: 1.0, ..Default::default() };
    let setup = ConvergenceSetup { sigma: 1.0, sample_dt: 0.01 };
    let eps = [1e-1, 3e-2, 1e-2, 3e-3];
    let rows = run_convergence_experiment(&v0, &eps, &setup, &cfg, &stencil, &ops).unwrap();
    let table = gsp_core::diagnostics::ConvergenceTable::new(rows, setup.sigma).unwrap();
    let ratio = table.gap_ratio(1e-1, 1e-2).unwrap();
    let fine = SolverConfig { dt: 5e-4, ..cfg.clone() };
    let limit = limit_samples(&v0, &fine, setup.sample_dt, &stencil, &ops).unwrap();
    let refined = filtered_gap(&v0, 1e-2, &setup, &fine, &limit, &ops).unwrap();
    let coarse = table.rows.iter().find(|r| r.eps == 1e-2).unwrap().sup_gap;
    let change = (refined.sup_gap - coarse).abs() / coarse;
    let elapsed = start.elapsed();
    let gaps: Vec<String> = table.rows.iter().map(|r| format!("{:.3e}", r.sup_gap)).collect();
    outcome(
        table.monotone && ratio <= 0.5 && change < 0.05 && elapsed < Duration::from_secs(600),
        format!(
            "g = [{}], monotone {}, g(1e-2)/g(1e-1) = {ratio:.3}, dt-halving change {:.2}%, {elapsed:.0?}",
            gaps.join(", "),
            table.monotone,
            100.0 * change
        ),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        "torus.a1 = 1.0\ntorus.a2 = 1.3\ntorus.a3 = 0.8\ntorus.F = 2.0\nlattice.N = 6\nsolver.T = 0.05\ninitial.seed = 42\nexperiment.kind = \"pe\"\n",
    )
    .unwrap();
    let run = |system: &str, dir: &Path| {
        Command::new(env!("CARGO_BIN_EXE_gsp"))
            .args(["--jobs", "1", "simulate", system, "--config", cfg.to_str().unwrap()])
            .env("GSP_OUT", dir)
            .output()
            .unwrap()
            .status
            .success()
    };
    let mut ok = true;
    for system in ["pe", "limit"] {
        let (a, b) = (tmp.path().join(format!("{system}-a")), tmp.path().join(format!("{system}-b")));
        ok &= run(system, &a) && run(system, &b);
        let read = |d: &Path| std::fs::read(d.join("timeseries.csv")).unwrap_or_default();
        ok &= !read(&a).is_empty() && read(&a) == read(&b);
    }
    outcome(ok, "pe and limit time series byte-identical across two single-job runs".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("eigen-system", eigen_system),
        ("propagator isometry", propagator_isometry),
        ("Bernstein constants", bernstein),
        ("resonance oracle equivalence", resonance_equivalence),
        ("Fujiwara soundness", fujiwara),
        ("cancellation lemmas", cancellations),
        ("energy estimates", energy),
        ("horizontal-average conservation", horizontal_average_conservation),
        ("convergence", convergence),
        ("determinism", determinism),
    ];
    // `cargo test --test acceptance -- 5 9` runs a subset
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let o = check();
        println!("criterion {:>2} {:<32} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
