use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::PathBuf;

use kernelscope::data::{gen_appendix_g_dataset, gen_dlog_dataset, DatasetMeta, DlogTask, EngineeredDataset, Split};
use kernelscope::engineer::{binarize, engineer_against_suite};
use kernelscope::geometry::{
    effective_dimension, model_complexity, screen, PairSweep, DEFAULT_LAMBDA_GRID,
};
use kernelscope::kernels::{
    classical_cross, classical_gram, delta_cross, delta_gram, dlog_quadratic_cross, dlog_quadratic_gram,
    fidelity_cross, fidelity_gram, normalize_trace, projected_gamma_grid, projected_gaussian_1rdm_gram,
    projected_gaussian_cross, projected_linear_cross, GramMatrix, KernelId, PROJECTED_GAMMA_SCALES,
};
use kernelscope::learn::{
    evaluate, fit, fit_perceptron, grid_search, lambda_grid_from_c, predict, predict_raw, predict_train_raw, Task,
    C_GRID,
};
use kernelscope::rng::stream;
use kernelscope::statevec::{embed_basis, MAX_QUBITS};
use kernelscope::{EngineeredLabels, GeometryReport, ScreenConfig, Verdict};
use rand::Rng as _;
use serde::Serialize;

use crate::args::{AppendixGArgs, DlogArgs, EmbedArgs, EngineerArgs, GeometryArgs, GramArgs, LearnArgs, ScreenArgs};
use crate::input::{self, default_train, seeds, slug, Embedded, DEFAULT_QUANTUM};
use crate::report::{emit, ensure_dir, num, usage, write_file, CliResult, RunConfig, Table};
use crate::svg;

fn kernel_names(given: &Option<Vec<String>>, default: &[&str]) -> Vec<String> {
    given
        .clone()
        .unwrap_or_else(|| default.iter().map(|s| s.to_string()).collect())
}

fn lambda_grid(given: &Option<Vec<f64>>, default: &[f64]) -> Vec<f64> {
    given.clone().unwrap_or_else(|| default.to_vec())
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EmbedResult {
    register_size: usize,
    spec: kernelscope::EmbeddingSpec,
    qnn_labels: bool,
    dataset_hash: Option<String>,
    mean_bloch_length: f64,
    files: Vec<String>,
}

pub fn embed(args: EmbedArgs) -> CliResult<()> {
    let c = &args.common;
    let n = input::resolve_n(c)?;
    let n_points = c.n_points.unwrap_or(100);
    let config = RunConfig::new("embed", c, n, n_points, vec![], vec![]);
    config.validate()?;
    let spec = input::embedding_spec(c, n)?;
    let inputs = input::load(c, &spec, n_points, c.n_points.is_some(), false)?;
    let emb = input::embed(&spec, &inputs.ds.x)?;

    let mut features = Table::new(
        &(0..spec.register_size())
            .flat_map(|q| [format!("px_{q}"), format!("py_{q}"), format!("pz_{q}")])
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>(),
    );
    let mut table = Table::new(&["index", "y", "bloch_length"]);
    let mut total = 0.0;
    for (i, f) in emb.features.iter().enumerate() {
        features.push(f.iter().flat_map(|p| p.iter().map(|v| num(*v))).collect());
        let len = f.iter().map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).sum::<f64>() / f.len() as f64;
        total += len;
        table.push(vec![i.to_string(), num(inputs.ds.y[i]), num(len)]);
    }
    let out = &c.out;
    ensure_dir(out)?;
    let mut feature_csv = features.header.join(",") + "\n";
    for r in &features.rows {
        feature_csv += &(r.join(",") + "\n");
    }
    write_file(&out.join("features.csv"), feature_csv)?;
    inputs.ds.write(&out.join("dataset.csv"))?;
    let result = EmbedResult {
        register_size: spec.register_size(),
        spec,
        qnn_labels: inputs.qnn_labels,
        dataset_hash: inputs.dataset_hash,
        mean_bloch_length: total / emb.features.len() as f64,
        files: vec!["features.csv".into(), "dataset.csv".into()],
    };
    emit(&config, &seeds(c.seed), &result, &table)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GramEntry {
    label: String,
    kernel: KernelId,
    params: BTreeMap<String, f64>,
    d_eff: f64,
    file: String,
}

pub fn gram(args: GramArgs) -> CliResult<()> {
    let c = &args.common;
    let n = input::resolve_n(c)?;
    let n_points = c.n_points.unwrap_or(100);
    let names = kernel_names(&c.kernels, &["fidelity", "projected_gaussian", "linear", "rbf"]);
    let config = RunConfig::new("gram", c, n, n_points, names.clone(), vec![])
        .option("csv", args.csv)
        .option("shadows", args.shadow.shadows)
        .option("shadow_gamma", args.shadow.shadow_gamma);
    config.validate()?;
    let (q_ids, c_ids) = input::parse_kernels(&names)?;
    let spec = input::embedding_spec(c, n)?;
    let inputs = input::load(c, &spec, n_points, c.n_points.is_some(), false)?;
    let emb = input::embed(&spec, &inputs.ds.x)?;
    let s = seeds(c.seed);
    let mut grams = q_ids
        .iter()
        .map(|&id| input::quantum_gram(id, &emb, &args.shadow, c.seed))
        .collect::<CliResult<Vec<_>>>()?;
    if !c_ids.is_empty() {
        grams.extend(input::classical_grams(&c_ids, &inputs.ds.x, c.gamma_grid.as_deref())?);
    }
    let dir = c.out.join("grams");
    ensure_dir(&dir)?;
    let mut entries = Vec::new();
    let mut table = Table::new(&["label", "kernel", "d_eff", "file"]);
    for g in grams {
        let g = g.with_provenance(input::provenance(&inputs.dataset_hash, &s));
        let file = format!("grams/{}.gram", slug(&g.label()));
        g.write_binary(&c.out.join(&file))?;
        if args.csv {
            g.write_csv(&c.out.join(format!("grams/{}.csv", slug(&g.label()))))?;
        }
        let d = effective_dimension(&g)?;
        table.push(vec![g.label(), g.kernel.to_string(), num(d), file.clone()]);
        entries.push(GramEntry {
            label: g.label(),
            kernel: g.kernel,
            params: g.params.clone(),
            d_eff: d,
            file,
        });
    }
    emit(&config, &s, &entries, &table)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct KernelSummary {
    label: String,
    d_eff: f64,
    /// `s` at λ = 0 for quantum kernels.
    s: f64,
}

#[derive(Serialize)]
struct PairRow {
    source: String,
    learner: String,
    lambda: f64,
    g_gen: f64,
    g_tra: f64,
    s_learner: f64,
}

#[derive(Serialize)]
struct GeometryResult {
    n: usize,
    #[serde(rename = "N")]
    n_points: usize,
    quantum: Vec<KernelSummary>,
    classical: Vec<KernelSummary>,
    pairs: Vec<PairRow>,
}

fn build_quantum(ids: &[KernelId], emb: &Embedded, shadow: &crate::args::ShadowArgs, seed: u64) -> CliResult<Vec<GramMatrix>> {
    ids.iter().map(|&id| input::quantum_gram(id, emb, shadow, seed)).collect()
}

pub fn geometry(args: GeometryArgs) -> CliResult<()> {
    let c = &args.common;
    let n = input::resolve_n(c)?;
    let n_points = c.n_points.unwrap_or(100);
    let names = kernel_names(&c.kernels, &DEFAULT_QUANTUM);
    let grid = lambda_grid(&c.lambda_grid, &DEFAULT_LAMBDA_GRID);
    let config = RunConfig::new("geometry", c, n, n_points, names.clone(), grid.clone());
    config.validate()?;
    let (q_ids, c_ids) = input::parse_kernels(&names)?;
    let spec = input::embedding_spec(c, n)?;
    let inputs = input::load(c, &spec, n_points, c.n_points.is_some(), false)?;
    let y = &inputs.ds.y;
    let emb = input::embed(&spec, &inputs.ds.x)?;
    let quantum = build_quantum(&q_ids, &emb, &args.shadow, c.seed)?;
    let classical = input::classical_grams(&c_ids, &inputs.ds.x, c.gamma_grid.as_deref())?;

    let mut pairs = Vec::new();
    let mut table = Table::new(&["source", "learner", "lambda", "g_gen", "g_tra", "s_learner"]);
    for q in &quantum {
        for k in &classical {
            let sweep = PairSweep::new(q, k)?;
            for &l in &grid {
                let g = sweep.at(l);
                let row = PairRow {
                    source: q.label(),
                    learner: k.label(),
                    lambda: l,
                    g_gen: g.g_gen,
                    g_tra: g.g_tra,
                    s_learner: model_complexity(k, y, l)?,
                };
                table.push(vec![
                    row.source.clone(),
                    row.learner.clone(),
                    num(l),
                    num(row.g_gen),
                    num(row.g_tra),
                    num(row.s_learner),
                ]);
                pairs.push(row);
            }
        }
    }
    let summarize = |k: &GramMatrix, s: f64| -> CliResult<KernelSummary> {
        Ok(KernelSummary {
            label: k.label(),
            d_eff: effective_dimension(k)?,
            s,
        })
    };
    let result = GeometryResult {
        n,
        n_points: inputs.ds.len(),
        quantum: quantum
            .iter()
            .map(|k| summarize(k, model_complexity(k, y, 0.0)?))
            .collect::<CliResult<_>>()?,
        classical: classical
            .iter()
            .map(|k| summarize(k, model_complexity(k, y, 0.0)?))
            .collect::<CliResult<_>>()?,
        pairs,
    };
    emit(&config, &seeds(c.seed), &result, &table)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ScreenRun {
    n: usize,
    #[serde(flatten)]
    report: GeometryReport,
}

#[derive(Serialize)]
struct ScreenResult {
    runs: Vec<ScreenRun>,
    verdict: Verdict,
}

pub fn screen_cmd(args: ScreenArgs) -> CliResult<()> {
    let c = &args.common;
    let sweep: Vec<usize> = match &args.n_sweep {
        Some(v) if !v.is_empty() => v.clone(),
        _ => vec![input::resolve_n(c)?],
    };
    let n_points = c.n_points.unwrap_or(100);
    let names = kernel_names(&c.kernels, &DEFAULT_QUANTUM);
    let grid = lambda_grid(&c.lambda_grid, &DEFAULT_LAMBDA_GRID);
    let config = RunConfig::new("screen", c, sweep[0], n_points, names.clone(), grid.clone())
        .option("n_sweep", &sweep)
        .option("g_tra_cap", args.g_tra_cap)
        .option("threshold", args.threshold)
        .option("observable_frobenius", args.observable_frobenius)
        .option("relabel", args.relabel)
        .option("plots", !args.no_plots);
    config.validate()?;
    if !(args.g_tra_cap >= 0.0) || !(args.threshold > 0.0) {
        return Err(usage("--g-tra-cap must be non-negative and --threshold positive"));
    }
    let (q_ids, c_ids) = input::parse_kernels(&names)?;
    if q_ids.is_empty() {
        return Err(usage("screen needs at least one quantum kernel in --kernels"));
    }
    let mut runs = Vec::new();
    for &n in &sweep {
        if n == 0 {
            return Err(usage("--n-sweep values must be positive"));
        }
        let spec = input::embedding_spec(c, n)?;
        let inputs = input::load(c, &spec, n_points, c.n_points.is_some(), args.relabel)?;
        let emb = input::embed(&spec, &inputs.ds.x)?;
        let quantum = build_quantum(&q_ids, &emb, &args.shadow, c.seed)?;
        let classical = input::classical_grams(&c_ids, &inputs.ds.x, c.gamma_grid.as_deref())?;
        let observable = args
            .observable_frobenius
            .or(inputs.qnn_labels.then(|| (1u64 << spec.register_size()) as f64));
        let cfg = ScreenConfig {
            lambda_grid: grid.clone(),
            g_tra_cap: args.g_tra_cap,
            threshold: args.threshold,
            observable_frobenius: observable,
        };
        let report = screen(&quantum, &classical, &cfg, Some(&inputs.ds.y))?;
        runs.push(ScreenRun { n, report });
    }

    let mut table = Table::new(&[
        "n", "source", "learner", "lambda", "g_gen", "g_tra", "admissible", "source_verdict",
    ]);
    for run in &runs {
        for l in &run.report.learners {
            let verdict = run
                .report
                .quantum
                .iter()
                .find(|q| q.label == l.source)
                .map_or(String::new(), |q| q.verdict.to_string());
            table.push(vec![
                run.n.to_string(),
                l.source.clone(),
                l.label.clone(),
                num(l.lambda),
                num(l.g_gen),
                num(l.g_tra),
                l.admissible.to_string(),
                verdict,
            ]);
        }
    }
    if !args.no_plots {
        write_screen_plots(c.out.join("plots"), &runs)?;
    }
    let verdict = overall(runs.iter().map(|r| r.report.verdict));
    emit(&config, &seeds(c.seed), &ScreenResult { runs, verdict }, &table)
}

fn overall(vs: impl Iterator<Item = Verdict>) -> Verdict {
    let vs: Vec<Verdict> = vs.collect();
    if vs.contains(&Verdict::PotentialAdvantage) {
        Verdict::PotentialAdvantage
    } else if vs.contains(&Verdict::LabelDependent) {
        Verdict::LabelDependent
    } else {
        Verdict::ClassicalCompetitive
    }
}

fn write_screen_plots(dir: PathBuf, runs: &[ScreenRun]) -> CliResult<()> {
    let mut d_series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    let mut g_series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for run in runs {
        for q in &run.report.quantum {
            let key = q.kernel.to_string();
            d_series.entry(key.clone()).or_default().push((run.n as f64, q.d_eff));
            g_series
                .entry(key)
                .or_default()
                .push((run.n as f64, q.min_g.unwrap_or(f64::NAN)));
        }
    }
    let d: Vec<(String, Vec<(f64, f64)>)> = d_series.into_iter().collect();
    let g: Vec<(String, Vec<(f64, f64)>)> = g_series.into_iter().collect();
    write_file(&dir.join("d_eff.svg"), svg::line_chart("Effective dimension", "n", "d_eff", &d))?;
    write_file(&dir.join("g.svg"), svg::line_chart("Geometric difference g(C||Q)", "n", "min g", &g))
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EngineerResult {
    reference: String,
    learner: String,
    lambda_used: f64,
    g_gen: f64,
    s_tra: f64,
    cap_satisfied: bool,
    s_reference: f64,
    s_learner: f64,
    separation_possible: bool,
    note: Option<String>,
    positives: usize,
    dataset_hash: String,
    file: String,
}

pub fn engineer(args: EngineerArgs) -> CliResult<()> {
    let c = &args.common;
    let n = input::resolve_n(c)?;
    let n_points = c.n_points.unwrap_or(200);
    let grid = lambda_grid(&c.lambda_grid, &DEFAULT_LAMBDA_GRID);
    let names = kernel_names(&c.kernels, &["linear", "rbf"]);
    let config = RunConfig::new("engineer", c, n, n_points, names.clone(), grid.clone())
        .option("reference", &args.reference)
        .option("mode", args.mode)
        .option("noise_p", args.noise_p)
        .option("s_tra_cap", args.s_tra_cap)
        .option("train", args.train);
    config.validate()?;
    if !(0.0..=1.0).contains(&args.noise_p) {
        return Err(usage("--noise-p must lie in [0, 1]"));
    }
    let (_, c_ids) = input::parse_kernels(&names)?;
    let spec = input::embedding_spec(c, n)?;
    let inputs = input::load(c, &spec, n_points, c.n_points.is_some(), false)?;
    let x = &inputs.ds.x;
    let reference_id: KernelId = args.reference.parse()?;
    let k_q = if reference_id.is_quantum() {
        let emb = input::embed(&spec, x)?;
        input::quantum_gram(reference_id, &emb, &crate::args::ShadowArgs { shadows: 500, shadow_gamma: 1.0 }, c.seed)?
    } else {
        let gamma = input::rbf_gammas(x, c.gamma_grid.as_deref())?[0];
        normalize_trace(&classical_gram(x, input::classical_kernel(reference_id, gamma))?)?
    };
    let suite = input::classical_grams(&c_ids, x, c.gamma_grid.as_deref())?;
    if suite.is_empty() {
        return Err(usage("no classical kernels selected"));
    }
    let (idx, e) = engineer_against_suite(&k_q, &suite, &grid, args.s_tra_cap)?;
    let s = seeds(c.seed);
    let y_class = binarize(&e.y_real, args.mode, args.noise_p, &mut stream(s["noise"], "binarize", 0))?;
    let s_reference = model_complexity(&k_q, &e.y_real, 0.0)?;
    let s_learner = model_complexity(&suite[idx], &e.y_real, e.lambda_used)?;

    let n_train = args.train.unwrap_or_else(|| default_train(inputs.ds.len()));
    let (train, _) = inputs.ds.train_test_split(n_train, s["split"])?;
    let mut meta = DatasetMeta {
        source: format!("engineered/{}", inputs.ds.meta.source),
        embedding: Some(spec.clone()),
        seeds: s.clone(),
        split: train.meta.split.clone().or(Some(Split::default())),
        ..DatasetMeta::default()
    };
    meta.params.insert("reference".into(), k_q.label().into());
    meta.params.insert("learner".into(), suite[idx].label().into());
    if let Some(h) = &inputs.dataset_hash {
        meta.params.insert("parent_hash".into(), h.clone().into());
    }
    let labels = EngineeredLabels {
        engineered: e.clone(),
        y_class: y_class.clone(),
        mode: args.mode,
        noise_p: args.noise_p,
        noise_seed: s["noise"],
    };
    let export = EngineeredDataset::new(x.clone(), &labels, meta)?;
    ensure_dir(&c.out)?;
    let file = c.out.join("engineered.csv");
    export.write(&file)?;

    let separation_possible = e.g_gen_achieved > 1.0 + 1e-6;
    let result = EngineerResult {
        reference: k_q.label(),
        learner: suite[idx].label(),
        lambda_used: e.lambda_used,
        g_gen: e.g_gen_achieved,
        s_tra: e.s_tra,
        cap_satisfied: e.cap_satisfied,
        s_reference,
        s_learner,
        separation_possible,
        note: (!separation_possible).then(|| "no separation possible: g is 1".to_string()),
        positives: y_class.iter().filter(|&&v| v > 0.0).count(),
        dataset_hash: kernelscope::data::content_hash(export.to_csv_string().as_bytes()),
        file: "engineered.csv".into(),
    };
    let mut table = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("g_gen", num(result.g_gen)),
        ("lambda_used", num(result.lambda_used)),
        ("s_tra", num(result.s_tra)),
        ("s_reference", num(result.s_reference)),
        ("s_learner", num(result.s_learner)),
        ("cap_satisfied", result.cap_satisfied.to_string()),
        ("separation_possible", separation_possible.to_string()),
    ] {
        table.push(vec![k.to_string(), v]);
    }
    emit(&config, &s, &result, &table)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LearnEntry {
    family: KernelId,
    best: String,
    lambda: f64,
    cv_loss: f64,
    train_metric: kernelscope::Metric,
    test_metric: kernelscope::Metric,
    model: String,
}

#[derive(Serialize)]
struct LearnResult {
    task: Task,
    n_train: usize,
    n_test: usize,
    folds: usize,
    kernels: Vec<LearnEntry>,
}

/// Gram matrices over a family's parameter grid plus the cross-kernel
/// builder for its chosen member.
fn family_grams(
    id: KernelId,
    train_x: &[Vec<f64>],
    train: &Embedded,
    gammas: Option<&[f64]>,
) -> CliResult<Vec<GramMatrix>> {
    Ok(match id {
        KernelId::Fidelity => vec![fidelity_gram(&train.states)?],
        KernelId::ProjectedLinear => vec![kernelscope::kernels::projected_linear_gram(&train.features)?],
        KernelId::ProjectedGaussian => projected_gamma_grid(&train.features, &PROJECTED_GAMMA_SCALES)?
            .into_iter()
            .map(|g| projected_gaussian_1rdm_gram(&train.features, g))
            .collect::<kernelscope::Result<_>>()?,
        KernelId::Linear => vec![classical_gram(train_x, kernelscope::ClassicalKernel::Linear)?],
        KernelId::Rbf => input::rbf_gammas(train_x, gammas)?
            .into_iter()
            .map(|g| classical_gram(train_x, kernelscope::ClassicalKernel::Rbf { gamma: g }))
            .collect::<kernelscope::Result<_>>()?,
        other => return Err(usage(format!("learn does not support the '{other}' kernel"))),
    }
    .into_iter()
    .map(|k| normalize_trace(&k))
    .collect::<kernelscope::Result<_>>()?)
}

fn family_cross(
    k: &GramMatrix,
    train_x: &[Vec<f64>],
    test_x: &[Vec<f64>],
    train: &Embedded,
    test: &Embedded,
) -> CliResult<Vec<Vec<f64>>> {
    let gamma = k.param("gamma").unwrap_or(0.0);
    Ok(match k.kernel {
        KernelId::Fidelity => fidelity_cross(&train.states, &test.states)?,
        KernelId::ProjectedLinear => projected_linear_cross(&train.features, &test.features),
        KernelId::ProjectedGaussian => projected_gaussian_cross(&train.features, &test.features, gamma),
        KernelId::Linear | KernelId::Rbf => classical_cross(train_x, test_x, input::classical_kernel(k.kernel, gamma)),
        other => return Err(usage(format!("learn does not support the '{other}' kernel"))),
    })
}

pub fn learn(args: LearnArgs) -> CliResult<()> {
    let c = &args.common;
    let n = input::resolve_n(c)?;
    let n_points = c.n_points.unwrap_or(800);
    let names = kernel_names(&c.kernels, &["fidelity", "projected_gaussian", "linear", "rbf"]);
    let grid = lambda_grid(&c.lambda_grid, &lambda_grid_from_c(&C_GRID));
    let config = RunConfig::new("learn", c, n, n_points, names.clone(), grid.clone())
        .option("train", args.train)
        .option("folds", args.folds)
        .option("task", &args.task)
        .option("relabel", args.relabel);
    config.validate()?;
    let ids: Vec<KernelId> = names.iter().map(|s| s.trim().parse()).collect::<kernelscope::Result<_>>()?;
    let spec = input::embedding_spec(c, n)?;
    let inputs = input::load(c, &spec, n_points, c.n_points.is_some(), args.relabel)?;
    let ds = &inputs.ds;
    let task = match args.task.as_deref() {
        Some("regression") => Task::Regression,
        Some("classification") => Task::Classification,
        Some(other) => return Err(usage(format!("unknown task '{other}'"))),
        None if ds.y.iter().all(|&v| v == 1.0 || v == -1.0) => Task::Classification,
        None => Task::Regression,
    };
    let s = seeds(c.seed);
    let n_train = args.train.unwrap_or_else(|| default_train(ds.len()));
    let (train, test) = ds.train_test_split(n_train, s["split"])?;
    if test.is_empty() {
        return Err(usage("no rows left for testing; lower --train"));
    }
    let needs_states = ids.iter().any(|k| k.is_quantum());
    let (emb_train, emb_test) = if needs_states {
        (input::embed(&spec, &train.x)?, input::embed(&spec, &test.x)?)
    } else {
        let empty = || Embedded {
            states: vec![],
            features: vec![],
        };
        (empty(), empty())
    };

    ensure_dir(&c.out.join("models"))?;
    let mut entries = Vec::new();
    let mut table = Table::new(&["family", "best", "lambda", "cv_loss", "train_metric", "test_metric"]);
    for id in ids {
        let grams = family_grams(id, &train.x, &emb_train, c.gamma_grid.as_deref())?;
        let gs = grid_search(&grams, &train.y, &grid, args.folds, s["cv"], task)?;
        let k = &grams[gs.best.gram_index];
        let model = fit(k, &train.y, gs.best.lambda)?;
        let train_pred: Vec<f64> = predict_train_raw(&model, k)?.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let cross = family_cross(k, &train.x, &test.x, &emb_train, &emb_test)?;
        let test_pred = predict(&model, &cross)?;
        let model_file = format!("models/{}.json", id);
        model.write_json(&c.out.join(&model_file))?;
        let entry = LearnEntry {
            family: id,
            best: k.label(),
            lambda: gs.best.lambda,
            cv_loss: gs.best.cv_loss,
            train_metric: evaluate(&train_pred, &train.y, task)?,
            test_metric: evaluate(&test_pred, &test.y, task)?,
            model: model_file,
        };
        table.push(vec![
            id.to_string(),
            entry.best.clone(),
            num(entry.lambda),
            num(entry.cv_loss),
            num(entry.train_metric.value()),
            num(entry.test_metric.value()),
        ]);
        entries.push(entry);
    }
    let bars: Vec<(String, f64)> = entries.iter().map(|e| (e.family.to_string(), e.test_metric.value())).collect();
    let y_label = match task {
        Task::Classification => "test accuracy",
        Task::Regression => "test MAE",
    };
    write_file(&c.out.join("plots/accuracy.svg"), svg::bar_chart("Held-out performance", y_label, &bars))?;
    let result = LearnResult {
        task,
        n_train: train.len(),
        n_test: test.len(),
        folds: args.folds,
        kernels: entries,
    };
    emit(&config, &s, &result, &table)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DlogRep {
    s: u64,
    unseen: usize,
    quadratic_accuracy: f64,
    delta_accuracy: f64,
    delta_all_zero: bool,
    perceptron_epochs: usize,
    perceptron_converged: bool,
}

#[derive(Serialize)]
struct DlogResult {
    p: u64,
    g: u64,
    order: u64,
    #[serde(rename = "N")]
    n_train: usize,
    quadratic_accuracy: f64,
    delta_accuracy: f64,
    reps: Vec<DlogRep>,
}

pub fn dlog_demo(args: DlogArgs) -> CliResult<()> {
    let c = &args.common;
    let n_train = c.n_points.unwrap_or(50);
    let config = RunConfig::new("dlog-demo", c, 1, n_train.max(2), vec!["dlog_quadratic".into(), "delta".into()], vec![])
        .option("p", args.p)
        .option("g", args.g)
        .option("s", args.s)
        .option("reps", args.reps)
        .option("max_epochs", args.max_epochs);
    config.validate()?;
    if args.reps == 0 {
        return Err(usage("--reps must be positive"));
    }
    // validates p and g before any sampling
    DlogTask::new(args.p, args.g, 0)?;
    let mut reps = Vec::new();
    let mut table = Table::new(&["rep", "s", "unseen", "quadratic_accuracy", "delta_accuracy", "epochs"]);
    for r in 0..args.reps {
        let s = args
            .s
            .unwrap_or_else(|| stream(c.seed, "dlog-offset", r).random_range(0..args.p - 1));
        let task = DlogTask::new(args.p, args.g, s)?;
        let d = gen_dlog_dataset(args.p, args.g, s, n_train, kernelscope::rng::derive_seed(c.seed, "dlog", r))?;
        let seen: BTreeSet<u64> = d.elements.iter().copied().collect();
        let unseen: Vec<u64> = task.elements().filter(|x| !seen.contains(x)).collect();
        if unseen.is_empty() {
            return Err(usage("training draws cover all of Z_p^*; lower --N"));
        }
        let y_test: Vec<f64> = unseen.iter().map(|&x| task.label(x)).collect();
        let z_test: Vec<f64> = unseen.iter().map(|&x| task.z(x)).collect();
        let quad = fit_perceptron(&dlog_quadratic_gram(&d.z)?, &d.dataset.y, args.max_epochs)?;
        let q_pred = predict_raw(&quad, &dlog_quadratic_cross(&d.z, &z_test))?;
        let delta = fit(&delta_gram(&d.elements)?, &d.dataset.y, 0.0)?;
        let d_pred = predict_raw(&delta, &delta_cross(&d.elements, &unseen))?;
        let rep = DlogRep {
            s,
            unseen: unseen.len(),
            quadratic_accuracy: evaluate(&q_pred, &y_test, Task::Classification)?.value(),
            delta_accuracy: evaluate(&d_pred, &y_test, Task::Classification)?.value(),
            delta_all_zero: d_pred.iter().all(|&v| v == 0.0),
            perceptron_epochs: quad.epochs,
            perceptron_converged: quad.converged,
        };
        table.push(vec![
            r.to_string(),
            s.to_string(),
            rep.unseen.to_string(),
            num(rep.quadratic_accuracy),
            num(rep.delta_accuracy),
            rep.perceptron_epochs.to_string(),
        ]);
        reps.push(rep);
    }
    let mean = |f: fn(&DlogRep) -> f64| reps.iter().map(f).sum::<f64>() / reps.len() as f64;
    let result = DlogResult {
        p: args.p,
        g: args.g,
        order: DlogTask::order(args.p, args.g),
        n_train,
        quadratic_accuracy: mean(|r| r.quadratic_accuracy),
        delta_accuracy: mean(|r| r.delta_accuracy),
        reps,
    };
    let bars = vec![
        ("dlog_quadratic".to_string(), result.quadratic_accuracy),
        ("delta".to_string(), result.delta_accuracy),
    ];
    write_file(&c.out.join("plots/accuracy.svg"), svg::bar_chart("Unseen-element accuracy", "accuracy", &bars))?;
    emit(&config, &seeds(c.seed), &result, &table)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct AppendixGResult {
    n: usize,
    #[serde(rename = "N")]
    n_train: usize,
    distinct_train: usize,
    test_points: usize,
    exhaustive: bool,
    fidelity_mae: f64,
    mae_lower_bound: f64,
    zero_prediction_fraction: f64,
    linear_accuracy: f64,
}

pub fn appendix_g_demo(args: AppendixGArgs) -> CliResult<()> {
    let c = &args.common;
    let n = c.n.unwrap_or(10);
    let n_train = c.n_points.unwrap_or(100);
    let config = RunConfig::new("appendix-g-demo", c, n, n_train, vec!["fidelity".into(), "linear".into()], vec![0.0])
        .option("test", args.test);
    config.validate()?;
    if n > MAX_QUBITS {
        return Err(kernelscope::Error::CapacityExceeded {
            what: "qubits",
            got: n,
            limit: MAX_QUBITS,
        }
        .into());
    }
    let train = gen_appendix_g_dataset(n, n_train, seeds(c.seed)["inputs"])?;
    let exhaustive = n <= 16;
    let test_x: Vec<Vec<f64>> = if exhaustive {
        (0..1usize << n)
            .map(|b| (0..n).map(|j| if b >> j & 1 == 1 { PI } else { 0.0 }).collect())
            .collect()
    } else {
        if args.test == 0 {
            return Err(usage("--test must be positive"));
        }
        gen_appendix_g_dataset(n, args.test, kernelscope::rng::derive_seed(c.seed, "appendix-g-test", 0))?.x
    };
    let test_y: Vec<f64> = test_x.iter().map(|x| if x[n - 1] == 0.0 { 1.0 } else { -1.0 }).collect();
    let train_states = train.x.iter().map(|x| embed_basis(x)).collect::<kernelscope::Result<Vec<_>>>()?;
    let test_states = test_x.iter().map(|x| embed_basis(x)).collect::<kernelscope::Result<Vec<_>>>()?;
    let model = fit(&fidelity_gram(&train_states)?, &train.y, 0.0)?;
    let pred = predict(&model, &fidelity_cross(&train_states, &test_states)?)?;
    let fidelity_mae = evaluate(&pred, &test_y, Task::Regression)?.value();

    let with_bias = |x: &Vec<f64>| x.iter().copied().chain([1.0]).collect::<Vec<f64>>();
    let xb: Vec<Vec<f64>> = train.x.iter().map(with_bias).collect();
    let tb: Vec<Vec<f64>> = test_x.iter().map(with_bias).collect();
    let lin = fit(&classical_gram(&xb, kernelscope::ClassicalKernel::Linear)?, &train.y, 0.0)?;
    let lin_pred = predict(&lin, &classical_cross(&xb, &tb, kernelscope::ClassicalKernel::Linear))?;

    let distinct: BTreeSet<Vec<u64>> = train.x.iter().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
    let result = AppendixGResult {
        n,
        n_train,
        distinct_train: distinct.len(),
        test_points: test_x.len(),
        exhaustive,
        fidelity_mae,
        mae_lower_bound: 1.0 - n_train as f64 / 2f64.powi(n as i32),
        zero_prediction_fraction: pred.iter().filter(|&&v| v.abs() < 1e-12).count() as f64 / pred.len() as f64,
        linear_accuracy: evaluate(&lin_pred, &test_y, Task::Classification)?.value(),
    };
    let mut table = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("fidelity_mae", result.fidelity_mae),
        ("mae_lower_bound", result.mae_lower_bound),
        ("zero_prediction_fraction", result.zero_prediction_fraction),
        ("linear_accuracy", result.linear_accuracy),
    ] {
        table.push(vec![k.to_string(), num(v)]);
    }
    emit(&config, &seeds(c.seed), &result, &table)
}
