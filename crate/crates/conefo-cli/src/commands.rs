use std::path::Path;
use std::time::Instant;

use conefo::continuation::{outer_csv, run, OuterRow};
use conefo::linops::{read_matrix, write_matrix_binary, write_matrix_csv, DenseMatrix};
use conefo::linops::{Element, OpCounts, Shape};
use conefo::models::{default_mu, Model, ModelSpec};
use conefo::smoothing::{duality_gap, relative_error};
use conefo::solvers::{fmt_f64, solve, solve_at_cached, SolverOptions, StopReason, Trace, Variant};
use conefo::testgen::{
    gaussian_matrix, gen_basis_pursuit_exact, gen_dantzig_exact, gen_lasso_exact, gen_sparse_signal,
    with_retries, Budget, ExactInstance,
};
use serde_json::{json, Value};

use crate::config::{Metric, RunConfig, TestgenKind};
use crate::{compute_psnr, experiments, write_out, CliError};

/// A model ready to solve plus the optional reference solution.
pub struct Problem {
    pub spec: ModelSpec,
    pub reference: Option<Vec<f64>>,
}

/// Reads the problem file of `cfg`, which may be a model description or an
/// instance bundle. A bundle supplies its certified solution as reference.
pub fn load_problem(cfg: &RunConfig) -> Result<Problem, CliError> {
    cfg.check_files()?;
    let path = cfg
        .problem
        .as_ref()
        .ok_or_else(|| CliError::Config("no problem file given".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::missing(path, e))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (mut spec, mut reference) = if value.get("x_star").is_some() {
        let inst = ExactInstance::from_json(&text)?;
        let mu = match cfg.mu {
            Some(mu) => mu,
            None => default_mu(&inst.model_spec(1.0))?,
        };
        (inst.model_spec(mu), Some(inst.x_star))
    } else {
        (ModelSpec::from_file(path)?, None)
    };
    if let Some(mu) = cfg.mu {
        spec.mu = mu;
    }
    if let Some(p) = spec.missing_files().into_iter().next() {
        return Err(CliError::MissingFile {
            path: p,
            reason: "matrix file referenced by the problem does not exist".into(),
        });
    }
    if let Some(r) = &cfg.reference {
        reference = Some(read_matrix(r).map_err(|e| CliError::Config(e.to_string()))?.data);
    }
    Ok(Problem { spec, reference })
}

/// Everything a solve produces, with or without continuation.
pub struct Outcome {
    pub x: Element,
    pub z: Element,
    pub inner: Vec<Trace>,
    pub outer: Option<Vec<OuterRow>>,
    pub iterations: usize,
    pub stop: Option<StopReason>,
    pub lipschitz: Option<f64>,
    pub counts: OpCounts,
}

pub fn run_model(model: &Model, cfg: &RunConfig, mut opts: SolverOptions, reference: Option<&[f64]>) -> Result<Outcome, CliError> {
    opts.reference = reference.map(<[f64]>::to_vec);
    if let Some(c) = &cfg.continuation {
        let mut co = c.options(cfg.solver.cached);
        co.reference = opts.reference.clone();
        let out = run(model, &opts, &co)?;
        let counts = out
            .outer
            .last()
            .map(|r| OpCounts {
                forward: r.fwd,
                adjoint: r.adj,
            })
            .unwrap_or_default();
        return Ok(Outcome {
            iterations: out.outer.iter().map(|r| r.inner_iters).sum(),
            x: out.x,
            z: out.z,
            inner: out.inner,
            outer: Some(out.outer),
            stop: None,
            lipschitz: None,
            counts,
        });
    }
    let cd = model.build()?;
    let sol = if cfg.solver.cached && opts.variant == Variant::At {
        solve_at_cached(&cd, &opts, None)?
    } else {
        solve(&cd, &opts, None)?
    };
    Ok(Outcome {
        x: sol.x,
        z: sol.z,
        inner: vec![sol.trace],
        outer: None,
        iterations: sol.iterations,
        stop: Some(sol.stop),
        lipschitz: Some(sol.lipschitz),
        counts: cd.operator().counts(),
    })
}

/// Storage of `x` as a row-major matrix: matrices keep their shape, complex
/// vectors become `n x 2` and everything else a column.
pub fn as_dense(x: &Element) -> DenseMatrix {
    match x.shape {
        Shape::Matrix { rows, cols } => {
            let mut data = vec![0.0; rows * cols];
            for j in 0..cols {
                for i in 0..rows {
                    data[i * cols + j] = x.data[i + j * rows];
                }
            }
            DenseMatrix { rows, cols, data }
        }
        Shape::Complex { n } => DenseMatrix {
            rows: n,
            cols: 2,
            data: x.data.clone(),
        },
        _ => DenseMatrix {
            rows: x.len(),
            cols: 1,
            data: x.data.clone(),
        },
    }
}

fn write_matrix_files(dir: &Path, x: &Element) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Output {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let m = as_dense(x);
    let out = |name: &str, e: conefo::linops::LinOpError| CliError::Output {
        path: dir.join(name),
        reason: e.to_string(),
    };
    write_matrix_binary(&dir.join("x.bin"), &m).map_err(|e| out("x.bin", e))?;
    write_matrix_csv(&dir.join("x.csv"), &m).map_err(|e| out("x.csv", e))?;
    Ok(())
}

fn num(v: f64) -> Value {
    // JSON has no infinities; spell them out.
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt_f64(v))
    }
}

/// Solves the configured problem and writes the solution, traces and a
/// summary into `cfg.out`. Returns the summary.
pub fn cmd_solve(cfg: &RunConfig) -> Result<Value, CliError> {
    let start = Instant::now();
    let problem = load_problem(cfg)?;
    let model = Model::new(&problem.spec)?;
    let opts = cfg.solver.options()?;
    let out = run_model(&model, cfg, opts, problem.reference.as_deref())?;

    let dir = &cfg.out;
    write_matrix_files(dir, &out.x)?;
    let traces: Vec<Value> = out.inner.iter().map(Trace::to_json).collect();
    match &out.outer {
        None => {
            write_out(dir, "trace.csv", &out.inner[0].to_csv())?;
            write_out(dir, "trace.json", &serde_json::to_string_pretty(&traces[0]).expect("json"))?;
        }
        Some(rows) => {
            for (j, t) in out.inner.iter().enumerate() {
                write_out(dir, &format!("inner_{:03}.csv", j + 1), &t.to_csv())?;
            }
            write_out(dir, "outer.csv", &outer_csv(rows))?;
            let all = json!({ "schema": conefo::models::SCHEMA, "inner": traces, "outer": rows });
            write_out(dir, "trace.json", &serde_json::to_string_pretty(&all).expect("json"))?;
        }
    }

    let last = out.inner.last().and_then(|t| t.last()).cloned();
    let mut metrics = serde_json::Map::new();
    if cfg.metrics.contains(&Metric::Gap) {
        let g = duality_gap(&model.conic, &out.x, &out.z).map_err(|e| CliError::Solve(e.to_string()))?;
        metrics.insert(
            "gap".into(),
            json!({
                "primal_value": num(g.primal_value),
                "dual_value": num(g.dual_value),
                "gap": num(g.gap),
                "primal_infeasibility": num(g.primal_infeasibility),
                "dual_infeasibility": num(g.dual_infeasibility),
            }),
        );
    }
    if let Some(r) = &problem.reference {
        if cfg.metrics.contains(&Metric::RelErr) {
            metrics.insert("rel_err".into(), num(relative_error(&out.x.data, r)));
        }
        if cfg.metrics.contains(&Metric::Psnr) {
            if let Some(p) = compute_psnr(&out.x.data, r) {
                metrics.insert("psnr".into(), num(p));
            }
        }
    }
    let summary = json!({
        "schema": conefo::models::SCHEMA,
        "command": "solve",
        "kind": problem.spec.kind,
        "variant": cfg.solver.variant,
        "mu": problem.spec.mu,
        "iterations": out.iterations,
        "outer_steps": out.outer.as_ref().map(Vec::len),
        "stop": out.stop,
        "lipschitz": out.lipschitz,
        "objective": num(model.conic.objective_value(&out.x.data)),
        "final_phi": last.as_ref().map(|r| num(r.phi)),
        "final_err": last.as_ref().and_then(|r| r.err).map(num),
        "counts": {
            "forward": out.counts.forward,
            "adjoint": out.counts.adjoint,
            "primal_prox": out.inner.iter().filter_map(|t| t.last()).map(|r| r.primal_prox).sum::<u64>(),
        },
        "metrics": metrics,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    write_out(dir, "summary.json", &serde_json::to_string_pretty(&summary).expect("json"))?;
    Ok(summary)
}

pub const COMPARISON_HEADER: &str = "variant,iter,ops,phi,err";

/// Runs each configured variant on the same problem and writes one trace
/// per variant plus a long-format comparison table keyed by operator count.
pub fn cmd_bench(cfg: &RunConfig) -> Result<Value, CliError> {
    let problem = load_problem(cfg)?;
    let model = Model::new(&problem.spec)?;
    let variants = if cfg.variants.is_empty() {
        Variant::ALL.to_vec()
    } else {
        cfg.variants.clone()
    };
    let single = RunConfig {
        continuation: None,
        ..cfg.clone()
    };
    let mut table = String::from(COMPARISON_HEADER);
    table.push('\n');
    let mut runs = Vec::new();
    for v in variants {
        let opts = cfg.solver.options()?.with_variant(v);
        let out = run_model(&model, &single, opts, problem.reference.as_deref())?;
        let trace = &out.inner[0];
        write_out(&cfg.out, &format!("trace_{}.csv", v.name()), &trace.to_csv())?;
        for r in &trace.rows {
            table.push_str(&format!(
                "{},{},{},{},{}\n",
                v.name(),
                r.iter,
                r.fwd + r.adj,
                fmt_f64(r.phi),
                r.err.map(fmt_f64).unwrap_or_default()
            ));
        }
        let last = trace.last().expect("trace has the start row");
        runs.push(json!({
            "variant": v,
            "iterations": out.iterations,
            "ops": last.fwd + last.adj,
            "final_phi": num(last.phi),
            "final_err": last.err.map(num),
        }));
    }
    write_out(&cfg.out, "comparison.csv", &table)?;
    let summary = json!({ "schema": conefo::models::SCHEMA, "command": "bench", "runs": runs });
    write_out(&cfg.out, "summary.json", &serde_json::to_string_pretty(&summary).expect("json"))?;
    Ok(summary)
}

/// Generates a certified instance from `cfg.testgen` and `cfg.seed`.
pub fn generate_instance(cfg: &RunConfig) -> Result<ExactInstance, CliError> {
    let t = &cfg.testgen;
    if t.s > t.m {
        return Err(CliError::Config("sparsity must not exceed the number of rows".into()));
    }
    let inst = with_retries(cfg.seed, t.attempts.max(1), |seed| {
        let a = gaussian_matrix(t.m, t.n, seed);
        let x = gen_sparse_signal(t.n, t.s, t.dynamic_range_db, seed ^ 0x5eed)?;
        let budget = Budget::default();
        match t.kind {
            TestgenKind::BasisPursuit => gen_basis_pursuit_exact(t.m, t.n, &a, &x, &budget),
            TestgenKind::Lasso => gen_lasso_exact(t.m, t.n, &a, &x, t.epsilon, &budget),
            TestgenKind::Dantzig => gen_dantzig_exact(t.m, t.n, &a, &x, t.delta, t.mu, &budget),
        }
    })?;
    Ok(inst)
}

/// Writes `instance.json` (data plus certificate) into `cfg.out`.
pub fn cmd_testgen(cfg: &RunConfig) -> Result<Value, CliError> {
    let inst = generate_instance(cfg)?;
    let path = write_out(&cfg.out, "instance.json", &inst.to_json())?;
    Ok(json!({
        "schema": conefo::models::SCHEMA,
        "command": "testgen",
        "path": path.display().to_string(),
        "problem": inst.problem,
        "rows": inst.rows,
        "cols": inst.cols,
        "report": inst.report,
        "max_residual": inst.report.max_residual(),
    }))
}

/// Regenerates the data behind one experiment into `out`.
pub fn cmd_reproduce(id: &str, out: &Path, seed: u64) -> Result<Value, CliError> {
    let files = experiments::reproduce(id, seed)?;
    let mut written = Vec::new();
    for (name, contents) in files {
        written.push(write_out(out, &name, &contents)?.display().to_string());
    }
    Ok(json!({
        "schema": conefo::models::SCHEMA,
        "command": "reproduce",
        "figure": id,
        "files": written,
    }))
}
