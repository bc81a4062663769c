//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness so the lines are never
//! captured.

use nalgebra::{SymmetricEigen, Vector3};
use nematic::defect::{self, DefectKind, DefectSet, DEFAULT_THRESHOLD};
use nematic::defect::topology::LoopClass;
use nematic::field::{QField, Region};
use nematic::potential::{self, bulk_f, bulk_grad};
use nematic::qtensor::{self, QTensor};
use nematic::scenario;
use nematic::solver::{self, InitStrategy, SolveConfig, SolveReport};
use nematic::verify;
use nematic::MaterialParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn run(n: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("criterion {n} {name}: {verdict} [{:.1} s] {}", t.elapsed().as_secs_f64(), o.detail);
    o.pass
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let l = v.norm();
        if l > 0.1 && l <= 1.0 {
            return v / l;
        }
    }
}

fn random_q(rng: &mut ChaCha8Rng, scale: f64) -> QTensor {
    QTensor::new(std::array::from_fn(|_| rng.gen_range(-scale..scale)))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Central difference of a tensor-valued curve.
fn dq(c: &impl Fn(f64) -> QTensor, t: f64, h: f64) -> QTensor {
    (c(t + h) - c(t - h)) * (0.5 / h)
}

fn d1(c: &impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (c(t + h) - c(t - h)) * (0.5 / h)
}

fn algebra(p: &MaterialParams) -> Outcome {
    let s = p.s_star;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut notes = String::new();
    let mut ok = true;

    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let sv = rng.gen_range(0.01..10.0);
        let r = rng.gen_range(0.0..0.999);
        let n = random_unit(&mut rng);
        let m = (random_unit(&mut rng).cross(&n)).normalize();
        let (s2, r2) = qtensor::s_r_of(&qtensor::from_representation(sv, r, &n, &m)).unwrap();
        worst = worst.max((s2 - sv).abs() / sv.max(1.0)).max((r2 - r).abs());
    }
    ok &= worst <= 1e-10;
    let _ = write!(notes, "round-trip {worst:.1e}; ");

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = random_q(&mut rng, 3.0);
        let ours = qtensor::eigen(&q);
        let mut oracle = SymmetricEigen::new(q.to_matrix()).eigenvalues.as_slice().to_vec();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for i in 0..3 {
            worst = worst.max((ours.values[i] - oracle[i]).abs());
        }
    }
    ok &= worst <= 1e-9;
    let _ = write!(notes, "eigen {worst:.1e}; ");

    let dirs: Vec<QTensor> = (0..10_000)
        .map(|i| qtensor::lift(&potential::fibonacci_sphere(i, 10_000), s).unwrap())
        .collect();
    let mut nearest_ok = true;
    for _ in 0..100 {
        let q = random_q(&mut rng, 3.0);
        let rho = qtensor::retract(&q, s).unwrap();
        let d0 = (q - rho).norm();
        for pp in &dirs {
            let d = (q - *pp).norm();
            if d < d0 - 1e-12 || ((*pp - rho).norm() > 1e-3 && d <= d0) {
                nearest_ok = false;
            }
        }
    }
    ok &= nearest_ok;
    let _ = write!(notes, "nearest point {}; ", if nearest_ok { "ok" } else { "VIOLATED" });

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let q = random_q(&mut rng, 3.0);
        let (sv, r) = qtensor::s_r_of(&q).unwrap();
        let ph = qtensor::phi(&q, s);
        for t in [0.5, 2.0, 7.0] {
            let (st, rt) = qtensor::s_r_of(&(q * t)).unwrap();
            worst = worst
                .max(rel(st, t * sv))
                .max((rt - r).abs() / r.abs().max(1.0))
                .max(rel(qtensor::phi(&(q * t), s), t * ph));
        }
    }
    ok &= worst <= 1e-12;
    let _ = write!(notes, "homogeneity {worst:.1e}; ");

    let (lo, hi) = (2f64.sqrt() / s - 1e-3, 2.0 / s + 1e-3);
    let mut range = (f64::INFINITY, 0.0f64);
    let mut tested = 0;
    while tested < 500 {
        let q = random_q(&mut rng, 3.0);
        let l = qtensor::eigen(&q).values;
        if l[0] - l[1] < 1e-2 || l[1] - l[2] < 1e-2 {
            continue;
        }
        tested += 1;
        let h = 1e-6;
        let g2: f64 = (0..5)
            .map(|k| {
                let mut e = [0.0; 5];
                e[k] = h;
                let e = QTensor::new(e);
                ((qtensor::phi(&(q + e), s) - qtensor::phi(&(q - e), s)) / (2.0 * h)).powi(2)
            })
            .sum();
        range = (range.0.min(g2.sqrt()), range.1.max(g2.sqrt()));
    }
    ok &= range.0 >= lo && range.1 <= hi;
    let _ = write!(notes, "|Dphi| in [{:.4}, {:.4}] (bounds [{lo:.4}, {hi:.4}]); ", range.0, range.1);

    // smooth curves off the cone: rotating biaxial frames with varying
    // order, and random quadratic paths
    let mut curves: Vec<Box<dyn Fn(f64) -> QTensor>> = Vec::new();
    for _ in 0..20 {
        let w = random_unit(&mut rng) * rng.gen_range(0.2..2.0);
        let (s0, s1) = (rng.gen_range(0.5..2.0), rng.gen_range(0.0..0.4));
        let (r0, r1) = (rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.4));
        curves.push(Box::new(move |t: f64| {
            let rot = nalgebra::Rotation3::new(w * t);
            let sv = s0 + s1 * (2.0 * t).sin();
            let r = r0 + r1 * (3.0 * t).cos().powi(2);
            qtensor::from_representation(sv, r, &(rot * Vector3::x()), &(rot * Vector3::y()))
        }));
        let (a, b, c) = (random_q(&mut rng, 2.0), random_q(&mut rng, 2.0), random_q(&mut rng, 1.0));
        curves.push(Box::new(move |t: f64| a + b * t + c * (t * t)));
    }
    let (mut split_gap, mut tau_low, mut tau_up) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut worst_tau_ratio = 0.0f64;
    let h = 1e-5;
    for c in &curves {
        for k in 0..200 {
            let t = -1.0 + 2.0 * k as f64 / 199.0;
            let l = qtensor::eigen(&c(t)).values;
            if (l[0] - l[1]) / s < 0.05 || l[1] - l[2] < 1e-3 {
                continue;
            }
            let q1 = dq(c, t, h).norm_squared();
            let phi_c = |u: f64| qtensor::phi(&c(u), s);
            let rho_c = |u: f64| qtensor::retract(&c(u), s).unwrap();
            let tau_c = |u: f64| qtensor::tau(&c(u), s);
            let ph = phi_c(t);
            let middle = s * s / 3.0 * d1(&phi_c, t, h).powi(2) + ph * ph * dq(&rho_c, t, h).norm_squared();
            let quarter_tau = 0.25 * dq(&tau_c, t, h).norm_squared();
            split_gap = split_gap.min(q1 - middle);
            tau_up = tau_up.min(q1 + 1e-6 - middle);
            tau_low = tau_low.min(middle + 1e-6 - quarter_tau);
            if middle > 1e-9 {
                worst_tau_ratio = worst_tau_ratio.max(quarter_tau / middle);
            }
        }
    }
    let split_ok = split_gap >= -1e-6;
    ok &= split_ok && tau_up >= 0.0 && tau_low >= 0.0;
    let _ = write!(
        notes,
        "splitting min gap {split_gap:.2e}; tau upper min gap {tau_up:.2e}; tau lower min gap {tau_low:.2e} (max ratio {worst_tau_ratio:.4}); "
    );

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let w = random_unit(&mut rng);
        let n0 = random_unit(&mut rng);
        let n = move |t: f64| nalgebra::Rotation3::new(w * t) * n0;
        let psi = |t: f64| qtensor::lift(&n(t), s).unwrap();
        for k in 0..20 {
            let t = k as f64 * 0.3;
            let dn = (n(t + h) - n(t - h)) / (2.0 * h);
            worst = worst.max(rel(dq(&psi, t, h).norm_squared(), 2.0 * s * s * dn.norm_squared()));
        }
    }
    ok &= worst <= 1e-6;
    let _ = write!(notes, "covering gradient {worst:.1e}; ");

    let nodes = 10_000;
    let quad: f64 = (0..nodes)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / nodes as f64;
            0.5 * qtensor::geodesic_p0_derivative(th, s).norm_squared()
        })
        .sum::<f64>()
        * std::f64::consts::TAU
        / nodes as f64;
    let k_err = rel(quad, p.kappa_star);
    ok &= k_err <= 1e-6;
    let _ = write!(notes, "geodesic energy rel err {k_err:.1e}");
    outcome(ok, notes)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn potential_suite() -> Outcome {
    let mut ok = true;
    let mut notes = String::new();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (a, b, c) in [(1.0, 1.0, 1.0), (0.3, 2.0, 0.7), (2.5, 0.4, 1.3)] {
        let p = MaterialParams::new(a, b, c).unwrap();
        let mut worst_vac = 0.0f64;
        for _ in 0..1000 {
            worst_vac = worst_vac.max(bulk_f(&p, &qtensor::lift(&random_unit(&mut rng), p.s_star).unwrap()).abs());
        }
        let shape = |sv: f64| -a * sv * sv / 3.0 - 2.0 * b * sv.powi(3) / 27.0 + c * sv.powi(4) / 9.0;
        let (s_min, v_min) = golden_min(shape, 0.0, 10.0);
        let k_err = (p.k + v_min).abs();
        let mut worst_grad = 0.0f64;
        for _ in 0..500 {
            let q = random_q(&mut rng, 2.0);
            let g = bulk_grad(&p, &q);
            let h = 1e-5;
            let fd = QTensor::new(std::array::from_fn(|k| {
                let mut e = [0.0; 5];
                e[k] = h;
                let e = QTensor::new(e);
                (bulk_f(&p, &(q + e)) - bulk_f(&p, &(q - e))) / (2.0 * h)
            }));
            worst_grad = worst_grad.max((fd - g).norm() / g.norm().max(1e-3));
        }
        let mut min_f = f64::INFINITY;
        for _ in 0..100_000 {
            let q = random_q(&mut rng, 10.0 / 5f64.sqrt());
            min_f = min_f.min(bulk_f(&p, &q));
        }
        let props = potential::check_f_properties(&p, 10_000, 3);
        let this_ok = worst_vac <= 1e-12
            && k_err <= 1e-10
            && (s_min - p.s_star).abs() <= 1e-6
            && worst_grad <= 1e-6
            && min_f >= -1e-12
            && props.is_ok();
        ok &= this_ok;
        let _ = write!(
            notes,
            "(a,b,c)=({a},{b},{c}): f on vacuum {worst_vac:.1e}, k vs minimization {k_err:.1e}, grad rel {worst_grad:.1e}, min f {min_f:.2e}, "
        );
        match props {
            Ok(r) => {
                let _ = write!(
                    notes,
                    "gamma F0 {:.3e} F1 {:.3e} F2 {:.3e} F3' {:.3e}; ",
                    r.gamma_f0, r.gamma_f1, r.gamma_f2, r.gamma_prime_f3
                );
            }
            Err(e) => {
                let _ = write!(notes, "properties violated: {e}; ");
            }
        }
    }
    outcome(ok, notes)
}

fn kappa_scaling(p: &MaterialParams) -> Outcome {
    let eps = [0.1, 0.05, 0.025];
    let res = |e: f64| (4.0 / e).round() as usize;
    let cfg = SolveConfig::default();
    let defect = verify::kappa_sweep(|e| scenario::disk(0.5, e, res(e), p), &eps, p, &cfg, true).unwrap();
    let trivial = verify::kappa_sweep(|e| scenario::disk_trivial(e, res(e), p), &eps, p, &cfg, false).unwrap();
    let slope = defect.value("slope").unwrap();
    let flat = trivial.value("slope").unwrap();
    let pass = rel(slope, p.kappa_star) <= 0.10 && flat.abs() <= 0.35;
    outcome(
        pass,
        format!(
            "slope {slope:.4} vs kappa* {:.4} (rel {:.3}); trivial slope {flat:.2e}",
            p.kappa_star,
            rel(slope, p.kappa_star)
        ),
    )
}

fn relax(sc: &scenario::Scenario, p: &MaterialParams, cfg: &SolveConfig) -> (QField, SolveReport) {
    let init = solver::initialize(sc.domain.clone(), &sc.init, sc.epsilon).unwrap();
    if sc.domain.is_axisymmetric() {
        solver::relax_axisym(&init, p, cfg).unwrap()
    } else {
        solver::relax(&init, p, cfg).unwrap()
    }
}

fn identities(p: &MaterialParams, field: &QField, report: &SolveReport) -> Outcome {
    let cfg = SolveConfig::default();
    let c = Vector3::zeros();
    let bx = Region::Box {
        min: Vector3::repeat(-0.5),
        max: Vector3::repeat(0.5),
    };
    let el = verify::check_el_residual(field, p, cfg.grad_tol);
    let po = verify::check_pohozaev(field, p, &c, 0.5).unwrap();
    let mono = verify::check_monotonicity(field, p, &c, &[0.2, 0.3, 0.4, 0.5]).unwrap();
    let star_box = verify::check_star_bound(field, p, &bx).unwrap();
    let star_ball = verify::check_star_bound(field, p, &Region::Ball { center: c, radius: 0.5 }).unwrap();
    let se = verify::check_stress_energy(field, p, &bx, 7).unwrap();

    // one refinement, started from the coarse minimizer
    let s = p.s_star;
    let coarse = Arc::new(field.clone());
    let fine_sc = scenario::hedgehog(0.1, 128, p).unwrap();
    let prolong: solver::ProfileFn = Arc::new(move |x: &Vector3<f64>| {
        defect::sample(&coarse, x).unwrap_or_else(|| qtensor::lift(&x.normalize(), s).unwrap())
    });
    let fine_init = solver::initialize(fine_sc.domain.clone(), &InitStrategy::Profile(prolong), 0.1).unwrap();
    let (fine, fine_rep) = solver::relax(&fine_init, p, &cfg).unwrap();
    let se_fine = verify::check_stress_energy(&fine, p, &bx, 7).unwrap();
    let r0 = se.residuals[0].value;
    let r1 = se_fine.residuals[0].value;

    let pass = report.converged
        && fine_rep.converged
        && el.pass
        && po.pass
        && mono.pass
        && star_box.pass
        && star_ball.pass
        && se.pass
        && se_fine.pass;
    outcome(
        pass,
        format!(
            "converged {} in {} it (E {:.4}); EL {:.2e}/{:.2e}; Pohozaev gap {:.2e}; monotonicity drop {:.2e}; star ratio box {:.3} ball {:.3}; \
             stress-energy {:.2e} (h {:.4}) -> {:.2e} (h {:.4}, {} it), both within 1.0*h",
            report.converged,
            report.iterations,
            report.energy.total,
            el.residuals[0].value,
            el.residuals[0].tolerance,
            po.residuals[0].value,
            mono.residuals[0].value,
            star_box.residuals[0].value,
            star_ball.residuals[0].value,
            r0,
            field.h(),
            r1,
            fine.h(),
            fine_rep.iterations,
        ),
    )
}

fn describe(set: &DefectSet) -> String {
    set.components
        .iter()
        .map(|c| {
            format!(
                "{}@({:.2},{:.2},{:.2}) diam {:.2} class {:?} deg {:?}",
                c.kind.as_str(),
                c.centroid.x,
                c.centroid.y,
                c.centroid.z,
                c.diameter,
                c.loop_class,
                c.degree
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn hedgehog_topology(p: &MaterialParams, field: &QField) -> Outcome {
    let eps = field.epsilon();
    let set = defect::extract_defects(field, DEFAULT_THRESHOLD, p).unwrap();
    let points: Vec<_> = set.of_kind(DefectKind::Point).collect();
    let central = points.len() == 1 && points[0].centroid.norm() <= 2.0 * eps;
    let boundary_degree = defect::sphere_degree(field, &Vector3::zeros(), 0.9, p.s_star).unwrap();
    let pass = set.components.len() == 1 && central && boundary_degree.map(i32::abs) == Some(1);
    outcome(
        pass,
        format!(
            "{} component(s), {} point(s) [{}]; degree on r=0.9 sphere {:?}",
            set.components.len(),
            points.len(),
            describe(&set),
            boundary_degree
        ),
    )
}

fn cylinder(p: &MaterialParams) -> Outcome {
    let eps = 0.05;
    let height = 1.1;
    let sc = scenario::cylinder(0.5, eps, 80, height, p).unwrap();
    let (field, rep) = relax(&sc, p, &SolveConfig::default());
    let set = defect::extract_defects(&field, DEFAULT_THRESHOLD, p).unwrap();
    let lines: Vec<_> = set.of_kind(DefectKind::Line).collect();
    let mut notes = format!("converged {} in {} it; {}; ", rep.converged, rep.iterations, describe(&set));
    let mut pass = rep.converged && set.components.len() == 1 && lines.len() == 1;
    if let Some(l) = lines.first() {
        let off_axis = l.skeleton.nodes.iter().map(|x| x.xy().norm()).fold(0.0, f64::max);
        let len_err = (l.length - height).abs() / height;
        pass &= off_axis <= 2.0 * eps && len_err <= 0.10;
        let _ = write!(notes, "max skeleton distance to axis {off_axis:.3} (2eps {:.3}); length {:.3} (rel {len_err:.3}); ", 2.0 * eps, l.length);
    }
    let lp = defect::encircling_loop(&field, &Vector3::zeros(), &Vector3::z(), 4.0 * eps, 128).unwrap();
    let once = defect::field_loop_class(&field, &lp, p.s_star).unwrap();
    let twice = defect::field_loop_class(&field, &lp.doubled(), p.s_star).unwrap();
    pass &= once == LoopClass::NonTrivial && twice == LoopClass::Trivial;
    let dens = verify::check_line_density(&field, p, &Vector3::zeros(), 10.0 * eps).unwrap();
    pass &= dens.pass;
    let _ = write!(
        notes,
        "loop {once:?}, doubled {twice:?}; density at r=10eps {:.4} = {:.3} kappa* (need within 0.15)",
        dens.value("density").unwrap(),
        dens.value("density").unwrap() / p.kappa_star
    );
    outcome(pass, notes)
}

fn torus(p: &MaterialParams) -> Outcome {
    let mut notes = String::new();
    let mut dists = Vec::new();
    let mut last = (0.0, 0.0, 0.0);
    let mut pass = true;
    for eps in [0.1, 0.05, 0.025] {
        let sc = scenario::torus_section(eps, (4.0 / eps).round() as usize, p).unwrap();
        let (field, rep) = relax(&sc, p, &SolveConfig::default());
        let set = defect::extract_defects(&field, DEFAULT_THRESHOLD, p).unwrap();
        pass &= rep.converged;
        let Some(core) = set.components.iter().max_by_key(|c| c.cells.len()) else {
            pass = false;
            let _ = write!(notes, "eps {eps}: no defect; ");
            continue;
        };
        let d = (core.centroid - Vector3::new(1.0, 0.0, 0.0)).norm();
        dists.push(d);
        let normalized = rep.energy.total / (std::f64::consts::TAU * eps.ln().abs());
        last = (normalized, core.centroid.x, eps);
        let _ = write!(
            notes,
            "eps {eps}: core at rho {:.4} z {:.4} (dist {d:.4}, class {:?}), F {:.3}, F/(2pi|log eps|) {normalized:.3}; ",
            core.centroid.x, core.centroid.y, core.loop_class, rep.energy.total
        );
    }
    let decreasing = dists.len() == 3 && dists.windows(2).all(|w| w[1] < w[0]);
    let (normalized, rho0, _) = last;
    let (lo, hi) = (0.8 * p.kappa_star * rho0, 1.2 * p.kappa_star);
    let window = normalized >= lo && normalized <= hi;
    let _ = write!(notes, "distance decreasing {decreasing}; energy window [{lo:.3}, {hi:.3}] holds {window}");
    outcome(pass && decreasing && window, notes)
}

fn dumbbell(p: &MaterialParams) -> Outcome {
    let (half, neck, eps) = (6.0, 0.3, 0.08);
    let sc = scenario::dumbbell(half, neck, eps, 50, p).unwrap();
    let (field, rep) = relax(&sc, p, &SolveConfig::default());
    let set = defect::extract_defects(&field, DEFAULT_THRESHOLD, p).unwrap();
    let grid_x = |c: &defect::Component| {
        c.cells
            .iter()
            .map(|&i| field.domain().center(i).x)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    };
    let lines_right = set.of_kind(DefectKind::Line).all(|c| grid_x(c).0 >= 0.0);
    let left_point = set
        .of_kind(DefectKind::Point)
        .any(|c| grid_x(c).1 <= -half / 2.0 && c.degree.map(i32::abs) == Some(1));
    let mut notes = format!(
        "L {half}, r {neck}, eps {eps}, h {}, init {:?}; converged {} in {} it; {}; ",
        field.h(),
        sc.init,
        rep.converged,
        rep.iterations,
        describe(&set)
    );
    let left_center = Vector3::new(-(half + 1.0), 0.0, 0.0);
    let enclosing = defect::sphere_degree(&field, &left_center, 0.8, p.s_star);
    let _ = write!(
        notes,
        "lines in x>=0 {lines_right}; point with |degree| 1 in x<=-L/2 {left_point}; degree on sphere r=0.8 about the left centre {enclosing:?}"
    );
    outcome(rep.converged && lines_right && left_point, notes)
}

fn determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let tmp = tempfile::tempdir().unwrap();
    let mut notes = String::new();
    let mut pass = true;
    for name in ["hedgehog", "torus_section"] {
        let cfg = configs.join(format!("{name}.toml"));
        let dirs: Vec<_> = (0..2).map(|k| tmp.path().join(format!("{name}_{k}"))).collect();
        for d in &dirs {
            let status = Command::new(env!("CARGO_BIN_EXE_nematic"))
                .args(["--threads", "1", "--out"])
                .arg(d)
                .arg("run")
                .arg(&cfg)
                .output()
                .unwrap()
                .status;
            let _ = write!(notes, "{name} exit {:?}; ", status.code());
        }
        for f in ["trace.csv", "defects.csv", "verify.csv"] {
            let a = std::fs::read(dirs[0].join(f)).unwrap();
            let b = std::fs::read(dirs[1].join(f)).unwrap();
            if a != b || a.is_empty() {
                pass = false;
                let _ = write!(notes, "{name}/{f} differs; ");
            }
        }
    }
    let _ = write!(notes, "CSVs byte-identical {pass}");
    outcome(pass, notes)
}

fn main() {
    let p = MaterialParams::default();
    let mut all = true;
    all &= run(1, "algebra", || {
        let t = Instant::now();
        let mut o = algebra(&p);
        let secs = t.elapsed().as_secs_f64();
        o.pass &= secs < 10.0;
        o
    });
    all &= run(2, "potential", || {
        let t = Instant::now();
        let mut o = potential_suite();
        o.pass &= t.elapsed().as_secs_f64() < 30.0;
        o
    });
    all &= run(3, "kappa scaling", || {
        let t = Instant::now();
        let mut o = kappa_scaling(&p);
        o.pass &= t.elapsed().as_secs_f64() < 600.0;
        o
    });

    let hedgehog = catch_unwind(|| {
        let sc = scenario::hedgehog(0.1, 64, &p).unwrap();
        relax(&sc, &p, &SolveConfig::default())
    });
    match &hedgehog {
        Ok((field, report)) => {
            all &= run(4, "identities", || {
                let t = Instant::now();
                let mut o = identities(&p, field, report);
                o.pass &= t.elapsed().as_secs_f64() < 1200.0;
                o
            });
            all &= run(5, "hedgehog topology", || hedgehog_topology(&p, field));
        }
        Err(_) => {
            all = false;
            println!("criterion 4 identities: FAIL hedgehog relaxation panicked");
            println!("criterion 5 hedgehog topology: FAIL hedgehog relaxation panicked");
        }
    }
    all &= run(6, "disclination cylinder", || cylinder(&p));
    all &= run(7, "torus", || {
        let t = Instant::now();
        let mut o = torus(&p);
        o.pass &= t.elapsed().as_secs_f64() < 900.0;
        o
    });
    all &= run(8, "dumbbell", || {
        let t = Instant::now();
        let mut o = dumbbell(&p);
        o.pass &= t.elapsed().as_secs_f64() < 2700.0;
        o
    });
    all &= run(9, "determinism", determinism);
    if !all {
        std::process::exit(1);
    }
}
