use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pwbddc::adaptive::{bound_violation, face_pencil, theta_default, Scaling};
use pwbddc::bddc::{pcg, solve_full};
use pwbddc::bench::{pnum_cell, run_experiment, Example, Experiment, ExperimentConfig, Report};
use pwbddc::linalg::{ct, eigh, hermitian_defect, identity, max_abs, norm2, CMat, CVec, Cholesky, C64};
use pwbddc::mesh::{build_mesh, Rect};
use pwbddc::pwls::{assemble_global, assemble_local};

struct Line {
    ok: bool,
    detail: String,
}

fn line(ok: bool, detail: String) -> Line {
    Line { ok, detail }
}

fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_shape_fn(n, |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn dense_of(n_in: usize, n_out: usize, f: impl Fn(&CVec) -> CVec) -> CMat {
    let mut out = CMat::zeros((n_out, n_in));
    for j in 0..n_in {
        let mut e = CVec::zeros(n_in);
        e[j] = C64::new(1.0, 0.0);
        out.column_mut(j).assign(&f(&e));
    }
    out
}

fn table2(scaling: Scaling) -> Report {
    run_experiment(&ExperimentConfig {
        example: Example::Constant,
        omega_over_pi: 20.0,
        p: 13,
        nd: 4,
        n_side: 8,
        scaling,
        ..Default::default()
    })
    .unwrap()
}

fn criterion_1(r: &Report) -> Line {
    let e = r.rel_l2_error.unwrap_or(f64::INFINITY);
    line(e <= 2.5e-4, format!("relative L2 error {e:.4e} (limit 2.5e-4)"))
}

fn criterion_2(r: &Report) -> Line {
    let ok = r.converged
        && r.iter <= 10
        && (0.999..=1.05).contains(&r.lambda_min)
        && r.lambda_max <= 3.0
        && (r.pnum as f64 - 2019.0).abs() <= 0.15 * 2019.0
        && (r.avg_per_interface - 84.13).abs() <= 0.15 * 84.13;
    line(
        ok,
        format!(
            "iter {}, lambda [{:.4}, {:.4}], pnum {}, coarse dim {}",
            r.iter, r.lambda_min, r.lambda_max, pnum_cell(r.pnum, r.avg_per_interface), r.coarse_dim
        ),
    )
}

fn criterion_3(mult: &Report, deluxe: &Report) -> Line {
    let ratio = deluxe.pnum as f64 / mult.pnum as f64;
    line(
        deluxe.converged && ratio <= 0.45 && deluxe.iter <= 12,
        format!("deluxe pnum {} vs {} (ratio {ratio:.3}), deluxe iter {}", deluxe.pnum, mult.pnum, deluxe.iter),
    )
}

fn criterion_4() -> Line {
    let want = [(6, "2.95"), (12, "3.56"), (18, "3.94"), (24, "4.22")];
    let mut ok = true;
    let mut got = Vec::new();
    for (n, w) in want {
        let (_, part) = build_mesh(Rect::new(0.0, 0.0, 2.0, 1.0), 4, 4, n).unwrap();
        let s = format!("{:.2}", theta_default(&part));
        ok &= s == w;
        got.push(s);
    }
    line(ok, format!("theta {}", got.join(", ")))
}

fn criterion_5() -> Line {
    let mut ok = true;
    let mut avgs = Vec::new();
    let mut parts = Vec::new();
    for nd in [3, 4, 5] {
        let r = run_experiment(&ExperimentConfig {
            p: 10,
            nd,
            n_side: 8,
            ..Default::default()
        })
        .unwrap();
        ok &= r.converged && (5..=12).contains(&r.iter);
        avgs.push(r.avg_per_interface);
        parts.push(format!("{nd}^2: iter {} pnum {}", r.iter, pnum_cell(r.pnum, r.avg_per_interface)));
    }
    let lo = avgs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = avgs.iter().cloned().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    ok &= spread <= 0.25;
    line(ok, format!("{}; spread {:.1}%", parts.join(", "), 100.0 * spread))
}

/// Toys with at most 7x7 elements and p <= 6.
fn toys() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for scaling in [Scaling::Multiplicity, Scaling::Deluxe] {
        out.push(ExperimentConfig {
            example: Example::Constant,
            omega_over_pi: 13.0,
            p: 5,
            nd: 2,
            n_side: 2,
            scaling,
            ..Default::default()
        });
        out.push(ExperimentConfig {
            example: Example::Random,
            omega_over_pi: 3.0,
            p: 6,
            nd: 2,
            n_side: 3,
            scaling,
            seed: 7,
            ..Default::default()
        });
        out.push(ExperimentConfig {
            example: Example::Layered,
            omega_over_pi: 4.0,
            p: 6,
            nd: 2,
            n_side: 3,
            scaling,
            ..Default::default()
        });
    }
    out
}

fn criterion_6() -> Line {
    let mut worst = [0.0f64; 8];
    let mut ok = true;
    let mut min_lambda = f64::INFINITY;
    let mut cond_margin = f64::INFINITY;
    for cfg in toys() {
        let exp = match Experiment::setup(&cfg) {
            Ok(e) => e,
            Err(e) => return line(false, format!("toy setup failed: {e}")),
        };
        assert!(exp.mesh.n_elements() <= 49 && cfg.p <= 6);
        let out = exp.solve().unwrap();
        let bddc = &out.bddc;
        let pa = &bddc.pa;
        let mut rng = ChaCha8Rng::seed_from_u64(11);

        // (a)
        let a = assemble_global(&exp.mesh, &exp.space).unwrap().to_dense();
        let mut sum = CMat::zeros(a.raw_dim());
        for r in 0..exp.part.n_subdomains() {
            let loc = assemble_local(&exp.mesh, &exp.part, &exp.space, r);
            worst[0] = worst[0].max(hermitian_defect(&loc.matrix.view()));
            loc.expand_into(&mut sum, cfg.p);
        }
        worst[0] = worst[0].max(hermitian_defect(&a.view()));
        worst[1] = worst[1].max(max_abs(&(&sum - &a).view()) / max_abs(&a.view()));

        // (b)
        for k in 0..exp.sub.n_faces() {
            let sc = &bddc.cs.scalings[k];
            let n = sc.d_r.nrows();
            worst[2] = worst[2].max(max_abs(&(&sc.d_r + &sc.d_j - identity(n)).view()));
            let ft = &bddc.cs.transforms[k];
            let ta = ct(&ft.t.view()).dot(&ft.a_d).dot(&ft.t);
            let tb = ct(&ft.t.view()).dot(&ft.b).dot(&ft.t);
            let (na, nb) = (max_abs(&ft.a_d.view()).max(1e-300), max_abs(&ft.b.view()).max(1e-300));
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        worst[3] = worst[3].max(tb[[i, j]].norm() / nb);
                        if i < ft.n_delta && j < ft.n_delta {
                            worst[3] = worst[3].max(ta[[i, j]].norm() / na);
                        }
                    }
                }
            }
            for i in 0..ft.n_delta {
                let d = (ta[[i, i]].re - ft.lambda[i] * tb[[i, i]].re).abs();
                worst[3] = worst[3].max(d / ta[[i, i]].re.abs().max(1e-12 * na));
            }
            let fp = face_pencil(&exp.sub, &bddc.op, k, cfg.scaling).unwrap();
            worst[4] = worst[4].max(bound_violation(ft, exp.theta, [&fp.s_bar[0], &fp.s_bar[1]], 100, 5));
        }

        // (c)
        let minv = dense_of(pa.n_gamma, pa.n_gamma, |g| pa.apply_preconditioner(g).unwrap());
        let l = Cholesky::new(&minv.view()).unwrap();
        let s = bddc.op.to_dense();
        let (w, _) = eigh(&ct(&l.lower().view()).dot(&s).dot(l.lower()).view()).unwrap();
        let cf = exp.sub.max_faces() as f64;
        let bound = 2.0 * cf * cf * exp.theta;
        min_lambda = min_lambda.min(w[0]);
        cond_margin = cond_margin.min(bound / (w[w.len() - 1] / w[0]));

        // (d)
        let u = random_vec(pa.n_gamma, &mut rng);
        worst[5] = worst[5].max(norm2(&(&pa.averaging(&pa.embed(&u)) - &u).view()) / norm2(&u.view()));
        for _ in 0..1000 {
            let v = random_vec(pa.n_tilde(), &mut rng);
            worst[6] = worst[6].max(pa.jump_ratio(&v) / bound);
            let pv = pa.jump(&v);
            worst[7] = worst[7].max(norm2(&(&pa.jump(&pv) - &pv).view()) / norm2(&pv.view()).max(1e-300));
        }

        // (e)
        let known = random_vec(exp.space.dim(), &mut rng);
        let b = a.dot(&known);
        let direct = Cholesky::new(&a.view()).unwrap().solve_vec(&b.view());
        let (x, stats) = solve_full(&exp.sub, bddc, &b, 1e-12, 200).unwrap();
        let rel = norm2(&(&x - &direct).view()) / norm2(&direct.view());
        ok &= stats.converged && rel <= 1e-8;
        if !(stats.converged && rel <= 1e-8) {
            return line(false, format!("(e) PCG vs direct {rel:.2e} on {:?}", cfg.example));
        }
        // the interface iteration alone also matches
        let g = bddc.op.condense_rhs(&exp.sub.dofs, &b);
        let (_, st) = pcg(|v| Ok(bddc.op.apply(v)), |v| pa.apply_preconditioner(v), &g, 1e-10, 200).unwrap();
        ok &= st.converged;
    }
    ok &= worst[0] <= 1e-12 && worst[1] <= 1e-12;
    ok &= worst[2] <= 1e-12 && worst[3] <= 1e-8 && worst[4] <= 1.0;
    ok &= min_lambda >= 1.0 - 1e-6 && cond_margin >= 1.0;
    ok &= worst[5] <= 1e-12 && worst[6] <= 1.0 && worst[7] <= 1e-10;
    line(
        ok,
        format!(
            "(a) herm {:.1e} sum {:.1e}; (b) pou {:.1e} diag {:.1e} bound {:.3}; (c) lmin {:.6} kappa/bound {:.3}; (d) avg {:.1e} jump {:.3} idem {:.1e}; (e) ok",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            worst[4],
            min_lambda,
            1.0 / cond_margin,
            worst[5],
            worst[6],
            worst[7]
        ),
    )
}

fn criterion_7() -> Line {
    let base = ExperimentConfig {
        p: 10,
        nd: 4,
        n_side: 8,
        inner_tol: 1e-2,
        ..Default::default()
    };
    let two = run_experiment(&base).unwrap();
    let three = run_experiment(&ExperimentConfig { levels: 3, ..base }).unwrap();
    let coarsest = three.coarsest_dofs.unwrap_or(usize::MAX);
    line(
        three.converged && three.iter <= two.iter + 3 && coarsest < two.coarse_dim,
        format!(
            "iter L=3 {} vs L=2 {}, coarsest {} vs level-1 {} (face pnum {})",
            three.iter, two.iter, coarsest, two.coarse_dim, two.pnum
        ),
    )
}

#[test]
fn acceptance() {
    let mult = table2(Scaling::Multiplicity);
    let deluxe = table2(Scaling::Deluxe);
    let lines = [
        criterion_1(&mult),
        criterion_2(&mult),
        criterion_3(&mult, &deluxe),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
    ];
    for (i, l) in lines.iter().enumerate() {
        println!("criterion {}: {} ({})", i + 1, if l.ok { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed: Vec<usize> = lines.iter().enumerate().filter(|(_, l)| !l.ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
