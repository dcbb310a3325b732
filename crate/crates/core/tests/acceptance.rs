//! Acceptance suite: one pass/fail line per criterion, then a single assertion.
//!
//! Run with `cargo test -p igamg-core --test acceptance -- --nocapture` to see the report.

use std::sync::Arc;
use std::time::Instant;

use igamg::bspline::{h1d_gram, mass_stiffness, refinement_matrix};
use igamg::functions::{ExpSin3, Fn2d, SinPi};
use igamg::multigrid::MultigridHierarchy;
use igamg::projectors::{
    error_norms, error_norms_1d, eval_tensor_spline, project_1d, project_2d_tensor, seminorms_1d,
    solve_stiffness, study_tensor_projection,
};
use igamg::quadrature::gauss_rule;
use igamg::smoothers::{AdditiveSmoother, BoostedSmoother, THEORETICAL_SIGMA_SCALE};
use igamg::{
    assemble_rhs, scenario_l_shape, scenario_unit_square, CycleKind, Discretization, Error, Function1d, Function2d,
    GeometryMap, MultigridConfig, Point, SinSin, SolveMode, TensorSpace, UnivariateSplineSpace,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

const DEGREES: [usize; 7] = [2, 3, 4, 5, 6, 7, 8];

// Reference iteration counts, rows ℓ = 4..=8, columns p = 2..=8.
const SQUARE_MG: [[usize; 7]; 5] = [
    [39, 32, 22, 24, 21, 20, 21],
    [56, 40, 32, 28, 28, 32, 33],
    [60, 44, 37, 31, 31, 34, 37],
    [61, 45, 37, 32, 31, 35, 37],
    [63, 45, 38, 32, 31, 35, 37],
];
const SQUARE_PCG: [[usize; 7]; 5] = [
    [14, 12, 11, 11, 10, 11, 10],
    [16, 15, 14, 14, 13, 13, 12],
    [18, 16, 15, 15, 14, 14, 14],
    [18, 16, 16, 15, 14, 14, 14],
    [19, 16, 16, 15, 15, 15, 14],
];
const SQUARE_BOOSTED: [[usize; 7]; 5] = [
    [29, 11, 8, 7, 6, 5, 5],
    [48, 13, 10, 8, 7, 7, 6],
    [55, 14, 12, 9, 8, 7, 7],
    [56, 14, 12, 9, 8, 8, 7],
    [59, 15, 13, 9, 8, 8, 7],
];
const LSHAPE_MG: [[usize; 7]; 5] = [
    [37, 33, 22, 24, 18, 21, 19],
    [56, 39, 32, 28, 26, 31, 31],
    [60, 44, 37, 31, 29, 34, 35],
    [61, 45, 37, 32, 31, 35, 37],
    [63, 45, 38, 32, 31, 35, 35],
];
const LSHAPE_PCG: [[usize; 7]; 5] = [
    [13, 12, 11, 11, 10, 11, 10],
    [16, 15, 14, 14, 13, 13, 12],
    [18, 16, 15, 15, 14, 14, 13],
    [18, 16, 16, 15, 15, 14, 14],
    [18, 16, 16, 15, 15, 15, 14],
];

fn reference(table: &[[usize; 7]; 5], level: usize, p: usize) -> usize {
    table[level - 4][p - 2]
}

/// Allowed deviation: 20 %, and at most 3 for reference counts up to 25.
fn allowed(r: usize) -> f64 {
    let rel = 0.2 * r as f64;
    if r <= 25 {
        rel.min(3.0)
    } else {
        rel
    }
}

fn within(count: usize, r: usize) -> bool {
    (count as f64 - r as f64).abs() <= allowed(r) + 1e-12
}

struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String, seconds: f64) {
        println!("[{}] {name}: {detail} ({seconds:.1} s)", if pass { "PASS" } else { "FAIL" });
        self.lines.push((name.to_string(), pass));
    }
}

/// Outcome of one solve; `None` means divergence or the cap was hit.
fn count(patches: &Arc<Vec<GeometryMap>>, p: usize, level: usize, cfg: MultigridConfig, mode: SolveMode) -> Option<usize> {
    let h = MultigridHierarchy::new(patches.clone(), p, level, cfg).expect("hierarchy");
    let sys = assemble_rhs(&h.finest().disc, &igamg::functions::sinsin_source, &|x| SinSin.value(x)).expect("rhs");
    match igamg::solve(&h, &sys.rhs, mode) {
        Ok(r) => Some(r.iterations),
        Err(Error::Divergence { .. }) => None,
        Err(e) => panic!("solver error: {e}"),
    }
}

fn show(c: Option<usize>, cap: usize) -> String {
    c.map_or(format!(">{cap}"), |c| c.to_string())
}

/// Cap beyond which a cell cannot pass; saves time on diverging cells.
fn cap_for(r: usize) -> usize {
    (r as f64 + allowed(r)).floor() as usize + 1
}

struct TableCheck {
    pass: bool,
    failures: Vec<String>,
    counts: Vec<Vec<Option<usize>>>,
}

fn check_table(
    patches: &Arc<Vec<GeometryMap>>,
    table: &[[usize; 7]; 5],
    cells: &[(usize, usize)],
    base: MultigridConfig,
    mode: SolveMode,
    label: &str,
    full_counts: bool,
) -> TableCheck {
    let mut failures = Vec::new();
    let mut counts = vec![vec![None; 7]; 5];
    for &(level, p) in cells {
        let r = reference(table, level, p);
        let cap = if full_counts { base.max_iter } else { cap_for(r) };
        let c = count(patches, p, level, MultigridConfig { max_iter: cap, ..base }, mode);
        counts[level - 4][p - 2] = c;
        let ok = c.is_some_and(|c| within(c, r));
        println!("    {label} ℓ={level} p={p}: {} (reference {r}) {}", show(c, cap), if ok { "ok" } else { "off" });
        if !ok {
            failures.push(format!("(ℓ={level},p={p}) {} vs {r}", show(c, cap)));
        }
    }
    TableCheck { pass: failures.is_empty(), failures, counts }
}

fn grid(levels: std::ops::RangeInclusive<usize>) -> Vec<(usize, usize)> {
    levels.flat_map(|l| DEGREES.iter().map(move |&p| (l, p))).collect()
}

fn summary(t: &TableCheck, cells: usize) -> String {
    if t.pass {
        format!("all {cells} cells within tolerance")
    } else {
        format!("{}/{cells} cells off: {}", t.failures.len(), t.failures.join(", "))
    }
}

fn criterion_1(rep: &mut Report) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for p in 1..=8 {
        for m in [4, 8, 16] {
            let s = UnivariateSplineSpace::new(p, m).unwrap();
            let (mass, stiff) = mass_stiffness(&s);
            let h = s.h();
            let (pf, mut e) = (p as f64, 0.0f64);
            let mref = h / (2.0 * pf + 1.0);
            let kref = pf * pf / (h * (2.0 * pf - 1.0));
            e = e.max((mass.get(0, 0) - mref).abs() / mref);
            e = e.max((stiff.get(0, 0) - kref).abs() / kref);
            worst = worst.max(e);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    rep.record("criterion 1 (closed-form M[1][1], K[1][1])", worst <= 1e-12 && secs < 1.0, format!("max rel err {worst:.2e}"), secs);
}

fn criterion_2(rep: &mut Report) {
    let t = Instant::now();
    let (mut r1, mut r2): (f64, f64) = (0.0, 0.0);
    let mut ok = true;
    for u in [&SinPi as &dyn Function1d, &ExpSin3] {
        let (h1, h2) = seminorms_1d(u);
        for p in 1..=6 {
            for l in 2..=8 {
                let s = UnivariateSplineSpace::new(p, 1 << l).unwrap();
                let c = project_1d(&s, u).unwrap();
                let e = error_norms_1d(&s, &c, u, p + 6);
                let b1 = 2f64.sqrt() * s.h() * h2;
                let b2 = 2f64.sqrt() * s.h() * h1;
                ok &= e.h1 <= b1 + 1e-8 && e.l2 <= b2 + 1e-8;
                r1 = r1.max(e.h1 / b1);
                r2 = r2.max(e.l2 / b2);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    rep.record(
        "criterion 2 (univariate projector bounds)",
        ok && secs < 10.0,
        format!("max |u-Πu|_H1/(√2h|u|_H2) = {r1:.3}, max ‖u-Πu‖_L2/(√2h|u|_H1) = {r2:.3}"),
        secs,
    );
}

/// `u`, `∂_t u`, `∂_s u`, `∂_st u` at `(s, t)`.
type Partials<'a> = &'a dyn Fn(f64, f64) -> [f64; 4];

/// Applies the univariate projector in `t` first, then in `s`; returns `C[k][j]`
/// with `k` the `s`-index and `j` the `t`-index.
fn nested_projection(space: &UnivariateSplineSpace, u: Partials) -> Vec<Vec<f64>> {
    let n = space.dim();
    let chol = h1d_gram(space).cholesky().unwrap();
    let rule = gauss_rule(space.degree() + 8);
    let pts: Vec<(f64, f64)> = (0..space.intervals())
        .flat_map(|e| {
            let a = e as f64 * space.h();
            rule.nodes.iter().zip(&rule.weights).map(move |(x, w)| (a + x * space.h(), w * space.h())).collect::<Vec<_>>()
        })
        .collect();
    let ders: Vec<_> = pts.iter().map(|&(x, _)| space.eval_basis(x, 1).unwrap()).collect();
    // Inner projection of t ↦ (value index `vi`, derivative index `di`) at fixed s.
    let inner = |s: f64, vi: usize, di: usize| {
        let mut load = vec![0.0; n];
        for ((t, w), d) in pts.iter().zip(&ders) {
            let f = u(s, *t);
            for (a, b) in d.values.iter().enumerate() {
                load[d.first + a] += w * f[di] * b;
            }
        }
        load[0] += u(s, 0.0)[vi];
        chol.solve_in_place(&mut load);
        load
    };
    let c0 = inner(0.0, 0, 1);
    let dc: Vec<Vec<f64>> = pts.iter().map(|&(s, _)| inner(s, 2, 3)).collect();
    let mut out = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut load = vec![0.0; n];
        for ((_, w), (d, dcq)) in pts.iter().zip(ders.iter().zip(&dc)) {
            for (a, b) in d.values.iter().enumerate() {
                load[d.first + a] += w * dcq[j] * b;
            }
        }
        load[0] += c0[j];
        chol.solve_in_place(&mut load);
        for k in 0..n {
            out[k][j] = load[k];
        }
    }
    out
}

fn exp_cos() -> impl Function2d {
    Fn2d {
        f: |p: Point| (p[0] + 0.3).exp() * (2.0 * p[1]).cos(),
        grad: |p: Point| {
            let e = (p[0] + 0.3).exp();
            [e * (2.0 * p[1]).cos(), -2.0 * e * (2.0 * p[1]).sin()]
        },
        hess: |p: Point| {
            let e = (p[0] + 0.3).exp();
            let xy = -2.0 * e * (2.0 * p[1]).sin();
            [[e * (2.0 * p[1]).cos(), xy], [xy, -4.0 * e * (2.0 * p[1]).cos()]]
        },
    }
}

fn criterion_3(rep: &mut Report) {
    let t = Instant::now();
    let mut bound_ratio: f64 = 0.0;
    let mut bound_ok = true;
    for p in 1..=6 {
        for l in 2..=8 {
            let ts = TensorSpace::with_degree(p, 1 << l).unwrap();
            let r = study_tensor_projection(&ts, &SinSin).unwrap();
            bound_ok &= r.h1_error <= r.bound + 1e-8;
            bound_ratio = bound_ratio.max(r.h1_error / r.bound);
        }
    }
    let ec = exp_cos();
    let funcs: [&dyn Function2d; 2] = [&SinSin, &ec];
    let (mut trace_res, mut comm_res): (f64, f64) = (0.0, 0.0);
    for u in funcs {
        for p in 1..=6 {
            for l in 2..=6 {
                let ts = TensorSpace::with_degree(p, 1 << l).unwrap();
                let uni = ts.univariate();
                let n = ts.n();
                let c = project_2d_tensor(&ts, u).unwrap();
                for corner in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] {
                    trace_res = trace_res.max((eval_tensor_spline(&ts, &c, corner).unwrap() - u.value(corner)).abs());
                }
                for (fixed, along_x) in [(0.0, false), (1.0, false), (0.0, true), (1.0, true)] {
                    let pt = |t: f64| if along_x { [t, fixed] } else { [fixed, t] };
                    let d = if along_x { 0 } else { 1 };
                    let trace = igamg::functions::Fn1d {
                        f: |t: f64| u.value(pt(t)),
                        df: |t: f64| u.grad(pt(t))[d],
                        d2f: |t: f64| u.hessian(pt(t))[d][d],
                    };
                    let c1 = project_1d(uni, &trace).unwrap();
                    let edge = if fixed == 0.0 { 0 } else { n - 1 };
                    for (t, ct) in c1.iter().enumerate() {
                        let idx = if along_x { t + n * edge } else { edge + n * t };
                        trace_res = trace_res.max((c[idx] - ct).abs());
                    }
                }
                let y_first = nested_projection(uni, &|s, t| {
                    let (g, hs) = (u.grad([s, t]), u.hessian([s, t]));
                    [u.value([s, t]), g[1], g[0], hs[0][1]]
                });
                let x_first = nested_projection(uni, &|s, t| {
                    let (g, hs) = (u.grad([t, s]), u.hessian([t, s]));
                    [u.value([t, s]), g[0], g[1], hs[0][1]]
                });
                for i in 0..n {
                    for j in 0..n {
                        let d1 = (y_first[i][j] - x_first[j][i]).abs();
                        let d2 = (y_first[i][j] - c[i + n * j]).abs();
                        comm_res = comm_res.max(d1).max(d2);
                    }
                }
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = bound_ok && trace_res <= 1e-10 && comm_res <= 1e-10 && secs < 30.0;
    rep.record(
        "criterion 3 (tensor projector bound, traces, commutation)",
        pass,
        format!("max ratio to 2h|u|_H2 = {bound_ratio:.3}, trace residual {trace_res:.1e}, commutation residual {comm_res:.1e}"),
        secs,
    );
}

fn criterion_4(rep: &mut Report) {
    let t = Instant::now();
    let patches = scenario_unit_square().patches;
    let cells = grid(4..=7);
    let tc = check_table(&patches, &SQUARE_MG, &cells, MultigridConfig::default(), SolveMode::Iterative, "square W", true);
    let mut bounded = true;
    for p in DEGREES {
        let (a, b) = (tc.counts[2][p - 2], tc.counts[3][p - 2]);
        let ok = match (a, b) {
            (Some(a), Some(b)) => (a as f64 - b as f64).abs() <= 2f64.max(0.1 * a as f64),
            _ => false,
        };
        if !ok {
            println!("    unbounded in ℓ at p={p}: ℓ=6 {a:?}, ℓ=7 {b:?}");
        }
        bounded &= ok;
    }
    rep.record(
        "criterion 4 (unit square, W-cycle, additive smoother)",
        tc.pass && bounded,
        format!("{}; bounded in ℓ: {bounded}", summary(&tc, cells.len())),
        t.elapsed().as_secs_f64(),
    );
}

fn criterion_5(rep: &mut Report) {
    let t = Instant::now();
    let patches = scenario_unit_square().patches;
    let cells = grid(4..=7);
    let tc = check_table(&patches, &SQUARE_PCG, &cells, MultigridConfig::default(), SolveMode::Pcg, "square PCG", true);
    rep.record("criterion 5 (unit square, PCG)", tc.pass, summary(&tc, cells.len()), t.elapsed().as_secs_f64());
}

fn criterion_6(rep: &mut Report) {
    let t = Instant::now();
    let patches = scenario_l_shape().patches;
    let mut cells = grid(4..=7);
    cells.push((8, 2));
    let it = check_table(&patches, &LSHAPE_MG, &cells, MultigridConfig::default(), SolveMode::Iterative, "L-shape W", false);
    let pc = check_table(&patches, &LSHAPE_PCG, &cells, MultigridConfig::default(), SolveMode::Pcg, "L-shape PCG", false);
    rep.record(
        "criterion 6 (L-shape, iterative and PCG)",
        it.pass && pc.pass,
        format!("iterative: {}; PCG: {}", summary(&it, cells.len()), summary(&pc, cells.len())),
        t.elapsed().as_secs_f64(),
    );
}

fn criterion_7(rep: &mut Report) {
    let t = Instant::now();
    let patches = scenario_unit_square().patches;
    let cells: Vec<(usize, usize)> = (3..=8).map(|p| (8, p)).collect();
    let tc = check_table(&patches, &SQUARE_BOOSTED, &cells, MultigridConfig::boosted(), SolveMode::Iterative, "boosted", false);
    let row: Vec<Option<usize>> = (3..=8).map(|p| tc.counts[4][p - 2]).collect();
    // The reference row itself repeats a value (8, 8), so the trend is read as
    // non-increasing with an overall decrease.
    let trend = row.iter().all(Option::is_some)
        && row.windows(2).all(|w| w[1] <= w[0])
        && row[row.len() - 1] < row[0];
    rep.record(
        "criterion 7 (boosted smoother, ℓ=8)",
        tc.pass && trend,
        format!("{}; decreasing trend in p: {trend}", summary(&tc, cells.len())),
        t.elapsed().as_secs_f64(),
    );
}

fn dense_inverse(n: usize, apply: impl Fn(&[f64], &mut [f64])) -> DMatrix<f64> {
    let mut inv = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut z = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        apply(&e, &mut z);
        inv.set_column(j, &DVector::from_column_slice(&z));
    }
    (&inv + inv.transpose()) * 0.5
}

/// Eigenvalues of the pencil `(B, C)` given `C⁻¹`.
fn pencil_eigs(b: &DMatrix<f64>, c_inv: &DMatrix<f64>) -> Vec<f64> {
    let s = c_inv.clone().cholesky().expect("inverse is SPD").l();
    let t = s.transpose() * b * &s;
    let mut ev: Vec<f64> = SymmetricEigen::new((&t + t.transpose()) * 0.5).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn criterion_8(rep: &mut Report) {
    let t = Instant::now();
    let layouts: [(&str, Vec<GeometryMap>); 2] = [
        ("1x1", vec![GeometryMap::rectangle(0.0, 0.0, 1.0, 1.0)]),
        ("2x1", vec![GeometryMap::rectangle(0.0, 0.0, 1.0, 1.0), GeometryMap::rectangle(1.0, 0.0, 1.0, 1.0)]),
    ];
    let sigma = THEORETICAL_SIGMA_SCALE;
    let (mut a_max, mut b_max, mut c_min, mut d_max): (f64, f64, f64, f64) = (0.0, 0.0, f64::INFINITY, 0.0);
    let mut a_default: f64 = 0.0;
    let mut lt_over_l: f64 = 0.0;
    let mut robust = true;
    for (name, patches) in &layouts {
        let patches = Arc::new(patches.clone());
        for p in 2..=4 {
            let mut per_m = Vec::new();
            for m in [8, 16] {
                let disc = Discretization::new(patches.clone(), TensorSpace::with_degree(p, m).unwrap()).unwrap();
                let n = disc.num_dofs();
                let a = disc.stiffness.to_dense();
                let shifted = &a + disc.mass.to_dense() / (disc.h() * disc.h());
                let add = AdditiveSmoother::new(&disc, sigma).unwrap();
                let l_inv = dense_inverse(n, |r, z| add.apply(r, z));
                let boosted = BoostedSmoother::new(&disc, sigma, 0.95).unwrap();
                let lt_inv = dense_inverse(n, |r, z| boosted.apply(r, z));
                let ea = pencil_eigs(&a, &l_inv);
                let la = ea[n - 1];
                // λ_max(L, A + h⁻²M) = 1 / λ_min(A + h⁻²M, L).
                let lb = 1.0 / pencil_eigs(&shifted, &l_inv)[0] / p as f64;
                // λ(L̃, L) = 1 / λ(L̃⁻¹ relative to L⁻¹).
                let mu = pencil_eigs(&lt_inv, &l_inv.clone().try_inverse().unwrap());
                let lc = 1.0 / mu[n - 1];
                lt_over_l = lt_over_l.max(1.0 / mu[0]);
                let ed = pencil_eigs(&shifted, &lt_inv);
                let cond = ed[n - 1] / ed[0];
                let add5 = AdditiveSmoother::new(&disc, 5.0).unwrap();
                a_default = a_default.max(pencil_eigs(&a, &dense_inverse(n, |r, z| add5.apply(r, z)))[n - 1]);
                println!("    {name} p={p} m={m}: λmax(A,L)={la:.4} λmax(L,A+h⁻²M)/p={lb:.3} λmin(L̃,L)={lc:.6} κ(L̃,A+h⁻²M)={cond:.3}");
                a_max = a_max.max(la);
                b_max = b_max.max(lb);
                c_min = c_min.min(lc);
                d_max = d_max.max(cond);
                per_m.push((lb, cond));
            }
            // Bounded across the sweep: no growth beyond 25 % when h is halved.
            robust &= per_m[1].0 <= 1.25 * per_m[0].0 && per_m[1].1 <= 1.25 * per_m[0].1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = a_max <= 1.0 / 0.95 + 1e-6 && c_min >= 1.0 - 1e-8 && robust && secs < 120.0;
    rep.record(
        "criterion 8 (spectral certificates, σ-scale 12)",
        pass,
        format!(
            "(a) max λmax(A,L)={a_max:.4} [at σ-scale 5: {a_default:.4}] (b) max={b_max:.3} (c) min={c_min:.6} [max λ(L̃,L)={lt_over_l:.6}] (d) max κ={d_max:.3}; h-robust: {robust}"
        ),
        secs,
    );
}

fn criterion_9(rep: &mut Report) {
    let t = Instant::now();
    let mut pass = true;
    let mut notes = Vec::new();
    // Partition of unity.
    let mut pu: f64 = 0.0;
    for p in 1..=8 {
        let s = UnivariateSplineSpace::new(p, 7).unwrap();
        for k in 0..=100 {
            pu = pu.max((s.eval_basis(k as f64 / 100.0, 0).unwrap().values.iter().sum::<f64>() - 1.0).abs());
        }
    }
    pass &= pu < 1e-13;
    notes.push(format!("partition of unity {pu:.1e}"));
    // Galerkin identity.
    let mut gal: f64 = 0.0;
    for (patches, p) in [(scenario_unit_square().patches, 3), (scenario_l_shape().patches, 2)] {
        let h = MultigridHierarchy::new(patches, p, 5, MultigridConfig::default()).unwrap();
        for w in h.levels().windows(2) {
            let pm = w[1].prolongation.as_ref().unwrap().to_dense();
            let g = pm.transpose() * w[1].disc.stiffness.to_dense() * &pm;
            let d = w[0].disc.stiffness.to_dense();
            gal = gal.max((g - &d).abs().max() / d.abs().max());
        }
    }
    pass &= gal <= 1e-10;
    notes.push(format!("Galerkin {gal:.1e}"));
    // Projector idempotency on a spline.
    let s = UnivariateSplineSpace::new(3, 8).unwrap();
    let c: Vec<f64> = (0..s.dim()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
    let spline = igamg::functions::Fn1d {
        f: |x: f64| s.eval_spline(&c, x, 0),
        df: |x: f64| s.eval_spline(&c, x, 1),
        d2f: |x: f64| s.eval_spline(&c, x, 2),
    };
    let back = project_1d(&s, &spline).unwrap();
    let idem = back.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    pass &= idem < 1e-10;
    notes.push(format!("idempotency {idem:.1e}"));
    // DOF partition and permutation invariance.
    let disc = Discretization::new(scenario_l_shape().patches, TensorSpace::with_degree(3, 8).unwrap()).unwrap();
    let mut hits = vec![0usize; disc.num_dofs()];
    disc.dofs.pieces().iter().flat_map(|p| &p.dofs).for_each(|&g| hits[g] += 1);
    let exact = hits.iter().all(|&h| h == 1);
    pass &= exact;
    notes.push(format!("DOF partition exact: {exact}"));
    let add = AdditiveSmoother::new(&disc, 5.0).unwrap();
    let r: Vec<f64> = (0..disc.num_dofs()).map(|i| ((i * 7919) % 101) as f64 / 101.0).collect();
    let mut z1 = vec![0.0; r.len()];
    let mut z2 = vec![0.0; r.len()];
    add.apply(&r, &mut z1);
    let order: Vec<usize> = (0..add.num_pieces()).rev().collect();
    add.apply_ordered(&r, &mut z2, &order);
    let perm = z1.iter().zip(&z2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    pass &= perm < 1e-13;
    notes.push(format!("permutation {perm:.1e}"));
    // Refinement nests the spaces.
    let e = refinement_matrix(&UnivariateSplineSpace::new(3, 4).unwrap(), &UnivariateSplineSpace::new(3, 8).unwrap()).unwrap();
    let rows_sum_one = (0..e.nrows()).all(|i| (e.row(i).1.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    pass &= rows_sum_one;
    let secs = t.elapsed().as_secs_f64();
    rep.record("criterion 9 (structural invariants)", pass && secs < 60.0, notes.join(", "), secs);
}

fn criterion_10(rep: &mut Report) {
    let t = Instant::now();
    let sc = scenario_unit_square();
    let mut pass = true;
    let mut notes = Vec::new();
    for p in 1..=3 {
        let mut errs = Vec::new();
        for l in 2..=5 {
            let disc = Discretization::new(sc.patches.clone(), TensorSpace::with_degree(p, 1 << l).unwrap()).unwrap();
            let sys = assemble_rhs(&disc, &igamg::functions::sinsin_source, &|x| SinSin.value(x)).unwrap();
            let u = solve_stiffness(&disc, &sys.rhs, 1e-13).unwrap();
            let coeffs = disc.patch_coefficients(&u, &sys.boundary);
            let e = error_norms(&disc.space, &sc.patches, &coeffs, &SinSin);
            errs.push((e.l2 * e.l2 + e.h1 * e.h1).sqrt());
        }
        let order = (errs[errs.len() - 2] / errs[errs.len() - 1]).log2();
        let target = (p as f64).min(1.9);
        pass &= order >= target;
        notes.push(format!("p={p}: order {order:.2} (≥ {target})"));
    }
    rep.record("criterion 10 (discretization order)", pass, notes.join(", "), t.elapsed().as_secs_f64());
}

fn scaling(rep: &mut Report) {
    let t = Instant::now();
    let sc = scenario_unit_square();
    let mut times = Vec::new();
    for level in 5..=7 {
        let h = MultigridHierarchy::new(sc.patches.clone(), 3, level, MultigridConfig::default()).unwrap();
        let sys = assemble_rhs(&h.finest().disc, &igamg::functions::sinsin_source, &|x| SinSin.value(x)).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let mut u = vec![0.0; sys.rhs.len()];
            let start = Instant::now();
            for _ in 0..3 {
                h.cycle(level, &mut u, &sys.rhs, CycleKind::W).unwrap();
            }
            best = best.min(start.elapsed().as_secs_f64() / 3.0);
        }
        times.push(best);
    }
    let ratios: Vec<f64> = times.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = ratios.iter().all(|&r| r <= 4.6);
    rep.record(
        "scaling (W-cycle time per level, p=3)",
        pass,
        format!(
            "per-cycle {:.4}/{:.4}/{:.4} s, growth {:.2}, {:.2}",
            times[0], times[1], times[2], ratios[0], ratios[1]
        ),
        t.elapsed().as_secs_f64(),
    );
}

#[test]
fn acceptance() {
    let mut rep = Report { lines: Vec::new() };
    criterion_1(&mut rep);
    criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_8(&mut rep);
    criterion_9(&mut rep);
    criterion_10(&mut rep);
    scaling(&mut rep);
    criterion_4(&mut rep);
    criterion_5(&mut rep);
    criterion_6(&mut rep);
    criterion_7(&mut rep);
    println!("\nsummary:");
    for (name, pass) in &rep.lines {
        println!("  {} {name}", if *pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<&str> = rep.lines.iter().filter(|(_, p)| !p).map(|(n, _)| n.as_str()).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
