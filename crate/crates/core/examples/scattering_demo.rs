//! End-to-end smoke drive of the library surface: solve a transmission
//! scattering problem densely, check it against the analytic circle
//! reference, run the multi-level compressed direct solver on a
//! multi-inclusion layout, and evaluate the field off the boundaries.
//!
//! Run with: cargo run -p helmscat --example scattering_demo

use helmscat::dense::{dense_solve, relative_error};
use helmscat::fds::{fds_factor, fds_solve};
use helmscat::fieldeval::{evaluate_field, BoundaryTraces};
use helmscat::formulations::{Assembler, BlockRule, IncidentWave};
use helmscat::geometry::{build_tree, grid_layout, make_star_curve, CurveSpec, Vec2};
use helmscat::kernels::{Side, WaveParams};
use helmscat::linalg::set_blas_threads;
use helmscat::oracle::{mie_solve, mie_trace};
use helmscat::skeleton::CompressionConfig;
use num_complex::Complex64;

fn main() {
    set_blas_threads(1);
    let mut failures = 0usize;

    // --- Part 1: single circular inclusion vs analytic series ---------------
    let params = WaveParams::new(3.0, 1.0, 4.0).expect("params");
    let wave = IncidentWave::default();
    let radius = 1.0;
    let circle = CurveSpec {
        center: Vec2::new(0.0, 0.0),
        base_radius: radius,
        lobe_amplitude: 0.0,
        lobe_count: 1,
        rotation: 0.0,
    };
    let grids = vec![make_star_curve(circle, 200).expect("grid")];
    let sol = mie_solve(radius, &params, &wave).expect("analytic solve");
    let (u, q) = mie_trace(&sol, &grids[0]).expect("analytic trace");
    let mut reference_qu = q.clone();
    reference_qu.extend(u.iter().copied());
    let mut reference_uq = u;
    reference_uq.extend(q);

    for (rule, reference) in [
        (BlockRule::PmchwtOmit, &reference_qu),
        (BlockRule::Bm, &reference_uq),
    ] {
        let asm = Assembler::new(&grids, params, rule);
        let report = dense_solve(&asm, &wave, 40_000).expect("dense solve");
        let err = relative_error(&report.solution, reference).expect("error");
        let ok = err <= 1e-9;
        if !ok {
            failures += 1;
        }
        println!(
            "dense {rule:?}: m=1 circle, n=200, rel error vs analytic = {err:.3e}  [{}]",
            if ok { "ok" } else { "FAIL" }
        );
    }

    // --- Part 2: multi-level compressed solve across a 4x4 star layout ------
    let star = CurveSpec {
        center: Vec2::new(0.0, 0.0),
        base_radius: 2.0,
        lobe_amplitude: 0.3,
        lobe_count: 5,
        rotation: 0.0,
    };
    let n = 100;
    let params = WaveParams::new(5.0, 1.0, 5.0).expect("params");
    let wave = IncidentWave::default();
    let grids = grid_layout(16, 6.5, &star, n).expect("layout");
    let tree = build_tree(&grids).expect("tree");
    let cfg = CompressionConfig {
        qr_threshold: 1e-9,
        proxy_ratio: 1.8,
        max_rank: None,
    };

    let asm = Assembler::new(&grids, params, BlockRule::PmchwtOmit);
    let dense = dense_solve(&asm, &wave, 100_000).expect("dense reference");
    let fact = fds_factor(&asm, &tree, &cfg, 1).expect("compressed factorization");
    let f = asm.rhs(&wave);
    let rep = fds_solve(&fact, &f).expect("compressed solve");
    let err = relative_error(&rep.phi, &dense.solution).expect("comparable");
    let compressed = fact.compressed_size();
    let ok = err <= 1e-6 && compressed * 10 < asm.dim() * 9;
    if !ok {
        failures += 1;
    }
    println!(
        "fds PmchwtOmit: m=16 stars, n={n}, N={} -> top size {compressed}, rel error vs dense = {err:.3e}  [{}]",
        asm.dim(),
        if ok { "ok" } else { "FAIL" }
    );

    // --- Part 3: off-boundary field in a matched medium ----------------------
    let params = WaveParams::new(3.0, 3.0, 3.0).expect("params");
    let small = CurveSpec {
        center: Vec2::new(0.0, 0.0),
        base_radius: 0.25,
        lobe_amplitude: 0.3,
        lobe_count: 5,
        rotation: 0.0,
    };
    let grids = vec![make_star_curve(small, 150).expect("grid")];
    let asm = Assembler::new(&grids, params, BlockRule::PmchwtAll);
    let rep = dense_solve(&asm, &wave, 100_000).expect("dense solve");
    let traces = BoundaryTraces::from_solution(&rep.solution, BlockRule::PmchwtAll, 1, 150)
        .expect("trace split");
    let points = [Vec2::new(0.9, 0.4), Vec2::new(0.03, 0.05)];
    let samples = evaluate_field(&points, &traces, &params, &wave, &grids).expect("field");
    let kp = params.wavenumber(Side::Plus);
    let mut worst = 0.0f64;
    for s in &samples {
        let phase = kp * wave.direction.dot(s.point);
        let exact = wave.amplitude * Complex64::new(phase.cos(), phase.sin());
        worst = worst.max((s.value - exact).norm() / exact.norm());
    }
    let ok = worst <= 1e-8;
    if !ok {
        failures += 1;
    }
    println!(
        "field matched-media: max rel deviation from the incident wave = {worst:.3e}  [{}]",
        if ok { "ok" } else { "FAIL" }
    );

    if failures > 0 {
        println!("{failures} check(s) failed");
        std::process::exit(1);
    }
    println!("all checks passed");
}
