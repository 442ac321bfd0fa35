//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on failure.

use std::f64::consts::{LN_2, PI};
use std::process::ExitCode;
use std::time::Instant;

use perronpoly::bilinear2d::{bilinear_basis, quadrant_masses};
use perronpoly::lyapunov::{lyapunov_estimate_default, lyapunov_reference};
use perronpoly::study::{default_cells, final_segment_slope, least_squares_slope, run_study, StudyConfig};
use perronpoly::{
    build_basis, build_basis_via_measure, build_transfer_matrix, compute_invariant_density, l1_distance,
    project_density, registry, MapModel, MapName, Precision, Target,
};

fn d1(x: f64) -> f64 {
    4.0 / (PI * (1.0 + x * x))
}

/// `∫ log|g₂'| dμ₂`, 50-digit tanh-sinh quadrature: 0.69314718055994530942...
const G2_SIGMA_ORACLE: f64 = 0.6931471805599453;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_basis() -> Outcome {
    let table: [&[&[f64]]; 4] = [
        &[&[0.5]],
        &[&[0.5, -1.0], &[0.5, 1.0]],
        &[
            &[-1.0 / 16.0, -18.0 / 16.0, 27.0 / 16.0],
            &[13.0 / 8.0, 0.0, -27.0 / 8.0],
            &[-1.0 / 16.0, 18.0 / 16.0, 27.0 / 16.0],
        ],
        &[
            &[-1.0 / 6.0, 2.0 / 6.0, 12.0 / 6.0, -16.0 / 6.0],
            &[7.0 / 6.0, -30.0 / 6.0, -12.0 / 6.0, 48.0 / 6.0],
            &[7.0 / 6.0, 30.0 / 6.0, -12.0 / 6.0, -48.0 / 6.0],
            &[-1.0 / 6.0, -2.0 / 6.0, 12.0 / 6.0, 16.0 / 6.0],
        ],
    ];
    let mut table_dev = 0.0f64;
    for (n, polys) in table.iter().enumerate() {
        let b = build_basis::<f64>(n).unwrap();
        for (k, want) in polys.iter().enumerate() {
            for (got, w) in b.poly(k).coeffs().iter().zip(want.iter()) {
                table_dev = table_dev.max((got - w).abs());
            }
        }
    }
    let mut gap = 0.0f64;
    for n in 0..=8 {
        let a = build_basis::<f64>(n).unwrap();
        let b = build_basis_via_measure::<f64>(n).unwrap();
        for k in 0..=n {
            gap = gap.max(a.poly(k).max_coeff_diff(b.poly(k)));
        }
    }
    outcome(
        table_dev < 1e-12 && gap < 1e-10,
        format!("max deviation from table {table_dev:.1e} (tol 1e-12), construction gap n<=8 {gap:.1e} (tol 1e-10)"),
    )
}

fn c2_stochastic() -> Outcome {
    let mut worst = 0.0f64;
    for name in MapName::ALL {
        let map = name.model::<f64>();
        for n in 0..=3usize {
            let grid = if 16 % (n + 1) == 0 { [16, 64] } else { [18, 72] };
            for cells in grid {
                worst = worst.max(build_transfer_matrix(&map, cells, n).unwrap().stochasticity_defect());
            }
        }
    }
    outcome(worst < 1e-10, format!("max |column sum - 1| = {worst:.1e} (tol 1e-10)"))
}

/// `|g⁻¹(I_i) ∩ I_j| / h`, preimages by bisection on the forward map.
fn ulam_oracle(map: &MapModel<f64>, cells: usize) -> Vec<Vec<f64>> {
    let h = 1.0 / cells as f64;
    let mut a = vec![vec![0.0; cells]; cells];
    for b in map.branches() {
        let (lo, hi) = b.domain();
        let increasing = b.eval(hi) > b.eval(lo);
        let preimage = |y: f64| {
            if y <= 0.0 || y >= 1.0 {
                return if (y >= 1.0) == increasing { hi } else { lo };
            }
            let (mut l, mut r) = (lo, hi);
            for _ in 0..80 {
                let mid = 0.5 * (l + r);
                if (b.eval(mid) < y) == increasing {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            0.5 * (l + r)
        };
        for (i, row) in a.iter_mut().enumerate() {
            let (p, q) = (preimage(i as f64 * h), preimage((i + 1) as f64 * h));
            let (p, q) = (p.min(q), p.max(q));
            for (j, entry) in row.iter_mut().enumerate() {
                let overlap = (q.min((j + 1) as f64 * h) - p.max(j as f64 * h)).max(0.0);
                *entry += overlap / h;
            }
        }
    }
    a
}

fn c3_ulam() -> Outcome {
    let g1 = registry::<f64>("g1").unwrap();
    let a = build_transfer_matrix(&g1, 64, 0).unwrap();
    let oracle = ulam_oracle(&g1, 64);
    let mut worst = 0.0f64;
    for (i, row) in oracle.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            worst = worst.max((a.entries()[(i, j)] - v).abs());
        }
    }
    outcome(worst < 1e-12, format!("g1 N=64: max entry difference {worst:.1e} (tol 1e-12)"))
}

fn c4_reported_errors() -> Outcome {
    let g1 = registry::<f64>("g1").unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (cells, n, want) in [(16, 0, 1.168727e-2), (16, 3, 8.776219e-6), (128, 0, 1.307149e-3)] {
        let start = Instant::now();
        let pd = compute_invariant_density(&g1, cells, n).unwrap();
        let err = l1_distance(&pd, d1).unwrap();
        let rel = (err / want - 1.0).abs();
        pass &= rel < 0.02;
        parts.push(format!(
            "N={cells} n={n}: {err:.6e} vs {want:.6e} ({:.2}s)",
            start.elapsed().as_secs_f64()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn study(map: MapName, n: usize, cells: Vec<usize>, target: Target, precision: Precision) -> Vec<(usize, f64)> {
    let out = run_study(&StudyConfig {
        map,
        degrees: vec![n],
        cells: Some(cells),
        target,
        precision,
        quad_points: None,
    });
    if let Some(e) = out.error {
        panic!("{map} n={n} {target} study failed: {e}");
    }
    out.rows
        .iter()
        .filter_map(|r| r.error(target).map(|e| (r.cells, e)))
        .collect()
}

fn slope_check(
    map: MapName,
    target: Target,
    cases: &[(usize, Vec<usize>, Precision, f64, f64)],
) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, cells, precision, want, tol) in cases {
        let pts = study(map, *n, cells.clone(), target, *precision);
        let slope = final_segment_slope(&pts).unwrap_or(f64::NAN);
        pass &= (slope - want).abs() <= *tol;
        let tag = if *precision == Precision::DoubleDouble { " dd" } else { "" };
        parts.push(format!("n={n}{tag}: {slope:.3} ({want} ± {tol})"));
    }
    outcome(pass, parts.join(", "))
}

fn c5_density_slopes() -> Outcome {
    let cases: Vec<_> = [(0, -1.035), (1, -2.049), (2, -3.049), (3, -3.917)]
        .into_iter()
        .map(|(n, s)| (n, default_cells(n), Precision::Double, s, 0.2))
        .collect();
    slope_check(MapName::G1, Target::Density, &cases)
}

fn c6_exact_quadratic() -> Outcome {
    let g3 = registry::<f64>("g3").unwrap();
    let mut worst = 0.0f64;
    for cells in [12, 24] {
        let pd = compute_invariant_density(&g3, cells, 2).unwrap();
        worst = worst.max(l1_distance(&pd, |x| 12.0 * (x - 0.5) * (x - 0.5)).unwrap());
    }
    outcome(worst < 1e-9, format!("g3 n=2 N in {{12, 24}}: max L1 error {worst:.1e} (tol 1e-9)"))
}

fn c7_lyapunov() -> Outcome {
    let reference = lyapunov_reference(&registry::<f64>("g1").unwrap()).unwrap();
    let ref_err = (reference - LN_2).abs();
    // In double precision the n=3 errors reach roundoff by N=256, so that
    // line is measured in double-double on a grid extended to 512.
    let cases = vec![
        (0, default_cells(0), Precision::Double, -2.031, 0.3),
        (1, default_cells(1), Precision::Double, -3.105, 0.4),
        (2, default_cells(2), Precision::Double, -4.001, 0.3),
        (3, vec![16, 32, 64, 128, 256, 512], Precision::DoubleDouble, -5.091, 0.4),
    ];
    let slopes = slope_check(MapName::G1, Target::Lyapunov, &cases);
    outcome(
        ref_err < 1e-10 && slopes.pass,
        format!("|reference - log 2| = {ref_err:.1e}; slopes {}", slopes.detail),
    )
}

fn c8_tent() -> Outcome {
    let tent = registry::<f64>("tent").unwrap();
    let mut coeff_dev = 0.0f64;
    let mut sigma_dev = 0.0f64;
    for n in 0..=3 {
        let pd = compute_invariant_density(&tent, 16 * (n + 1), n).unwrap();
        for p in pd.group_polys() {
            for (j, c) in p.coeffs().iter().enumerate() {
                let want = if j == 0 { 1.0 } else { 0.0 };
                coeff_dev = coeff_dev.max((c - want).abs());
            }
        }
        let sigma = lyapunov_estimate_default(&tent, &pd).unwrap().sigma;
        sigma_dev = sigma_dev.max((sigma - LN_2).abs());
    }
    outcome(
        coeff_dev < 1e-12 && sigma_dev < 1e-13,
        format!("max density coefficient deviation {coeff_dev:.1e}, |sigma - log 2| {sigma_dev:.1e} (tol 1e-13)"),
    )
}

fn c9_g2() -> Outcome {
    let cases: Vec<_> = (0..=2)
        .map(|n| (n, default_cells(n), Precision::Double, -(n as f64 + 1.0), 0.25))
        .collect();
    let slopes = slope_check(MapName::G2, Target::Density, &cases);
    let g2 = registry::<f64>("g2").unwrap();
    let a = lyapunov_reference(&g2).unwrap();
    let b = lyapunov_reference(&g2).unwrap();
    let drift = (a - G2_SIGMA_ORACLE).abs();
    outcome(
        slopes.pass && drift < 1e-9 && a == b,
        format!("slopes {}; lyapunov baseline {a:.15} (oracle drift {drift:.1e}, tol 1e-9)", slopes.detail),
    )
}

fn c10_projection() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 0..=3usize {
        let pts: Vec<(usize, f64)> = default_cells(n)[..4]
            .iter()
            .map(|&c| (c, l1_distance(&project_density(d1, c, n).unwrap(), d1).unwrap()))
            .collect();
        let slope = least_squares_slope(&pts).unwrap_or(f64::NAN);
        let want = -(n as f64 + 1.0);
        pass &= (slope - want).abs() <= 0.15;
        parts.push(format!("n={n}: {slope:.3} ({want} ± 0.15)"));
    }
    outcome(pass, parts.join(", "))
}

fn c11_bilinear() -> Outcome {
    let basis = bilinear_basis();
    let mut worst = 0.0f64;
    for k in 0..2 {
        for l in 0..2 {
            let m = quadrant_masses(&basis[k][l]);
            for kk in 0..2 {
                for ll in 0..2 {
                    let want = if (k, l) == (kk, ll) { 1.0 } else { 0.0 };
                    worst = worst.max((m[kk][ll] - want).abs());
                }
            }
        }
    }
    let marginal = basis[0][0].marginal_t();
    let linear = build_basis::<f64>(1).unwrap();
    let consistent = marginal.as_slice() == linear.poly(0).coeffs();
    outcome(
        worst < 1e-14 && consistent,
        format!("quadrant matrix deviation {worst:.1e} (tol 1e-14), marginal {marginal:?} vs l_1,0 {:?}", linear.poly(0).coeffs()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("basis exactness", c1_basis),
        ("transfer-matrix stochasticity", c2_stochastic),
        ("Ulam equivalence", c3_ulam),
        ("g1 reported L1 errors (±2%)", c4_reported_errors),
        ("g1 density convergence slopes", c5_density_slopes),
        ("g3 exact quadratic density", c6_exact_quadratic),
        ("g1 Lyapunov reference and slopes", c7_lyapunov),
        ("tent map", c8_tent),
        ("g2 regression", c9_g2),
        ("projection order", c10_projection),
        ("bilinear basis", c11_bilinear),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = check();
        if !r.pass {
            failures += 1;
        }
        println!(
            "[{}] {:>2} {name}: {} [{:.2}s]",
            if r.pass { "PASS" } else { "FAIL" },
            i + 1,
            r.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failures,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
