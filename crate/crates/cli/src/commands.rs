use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hopscatter::evalx::{
    ablation_run, baseline_predict, baseline_train, evaluate_tracking, report_emit, track_dataset,
    BaselineSpec, EvalResults, MethodEval, PooledEval, ScenarioData, TrackMode, RAW_RESULTS_FILE,
};
use hopscatter::io::{fmt_sig6, read_json, write_atomic, write_json};
use hopscatter::locate::initial_position;
use hopscatter::recovery::{
    ablation_configs, build_model, gradient_suite, train, ConformerConfig, RecoveryModel,
    TrainParams, TrainingSet,
};
use hopscatter::rfsim::{gen_dataset, Dataset, GestureParams, ScenarioPreset};
use hopscatter::rng::{derive_seed, seeded_rng};
use hopscatter::SystemConfig;

use crate::args::*;
use crate::smoke::{pipeline_smoke, SmokeOptions};
use crate::{CliError, Stage};

type CliResult<T = ()> = Result<T, CliError>;

pub(crate) fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train_cmd(a),
        Command::Track(a) => track_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::Gradcheck(a) => gradcheck(a),
        Command::Report(a) => report(a),
        Command::Smoke(a) => smoke(a),
    }
}

pub(crate) fn load_system(path: Option<&Path>) -> CliResult<SystemConfig> {
    match path {
        Some(p) => SystemConfig::load(p).stage("load config"),
        None => Ok(SystemConfig::default()),
    }
}

fn load_preset(spec: &str) -> CliResult<ScenarioPreset> {
    if spec.ends_with(".json") {
        let p: ScenarioPreset = read_json(Path::new(spec)).stage("load preset")?;
        p.validate().stage("load preset")?;
        Ok(p)
    } else {
        ScenarioPreset::by_name(spec).stage("load preset")
    }
}

fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect::<String>()
        .split('_')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

/// `default`, an ablation row (exact or as a slug like `no_cnn`), or a JSON file.
pub(crate) fn load_arch(spec: &str) -> CliResult<(String, ConformerConfig)> {
    if spec == "default" {
        return Ok(("Ours".into(), ConformerConfig::default()));
    }
    if let Some(row) = ablation_configs()
        .into_iter()
        .find(|(name, _)| name == spec || slug(name) == slug(spec))
    {
        return Ok(row);
    }
    let path = Path::new(spec);
    if path.extension().is_some_and(|e| e == "json") {
        let c: ConformerConfig = read_json(path).stage("load architecture")?;
        c.validate().stage("load architecture")?;
        return Ok((spec.to_string(), c));
    }
    Err(CliError::data(
        "load architecture",
        format!("`{spec}` is neither `default`, an ablation row name, nor a .json file"),
    ))
}

fn read_dataset(dir: &Path) -> CliResult<Dataset> {
    Dataset::read(dir).stage("read dataset")
}

fn gen(a: GenArgs) -> CliResult {
    let cfg = load_system(a.config.as_deref())?;
    let preset = load_preset(&a.preset)?;
    let ds = Dataset::generate(
        &preset,
        a.n,
        &cfg,
        a.seed,
        &GestureParams::default(),
        a.window_len,
    )
    .stage("gen")?;
    ds.write(&a.out).stage("write dataset")?;
    println!(
        "wrote {} windows from {} trajectories ({}) to {}",
        ds.windows.len(),
        a.n,
        preset.name,
        a.out.display()
    );
    Ok(())
}

fn train_params(a: &TrainArgs) -> CliResult<TrainParams> {
    let mut hp = match (&a.hparams, a.desk_scale) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::from_core("load hparams", hopscatter::Error::io(p, e)))?;
            TrainParams::from_json_str(&text)
                .map_err(|e| CliError::data("load hparams", format!("{}: {e}", p.display())))?
        }
        (None, true) => TrainParams::desk_scale(),
        (None, false) => TrainParams::default(),
    };
    if let Some(e) = a.epochs {
        hp.max_epochs = e;
    }
    if let Some(s) = a.seed {
        hp.seed = s;
    }
    hp.validate().stage("load hparams")?;
    Ok(hp)
}

fn train_cmd(a: TrainArgs) -> CliResult {
    let (arch_name, arch) = load_arch(&a.config)?;
    let hp = train_params(&a)?;
    let ds = read_dataset(&a.input)?;
    let set =
        TrainingSet::from_windows(&ds.windows, ds.n_antennas(), ds.n_channels()).stage("train")?;
    let mut model =
        build_model(&arch, &ds.manifest.config, &mut seeded_rng(hp.seed, "init")).stage("train")?;
    let report = train(&mut model, &set, &hp).stage("train")?;
    model.save(&a.out.join("model.ckpt")).stage("write model")?;
    write_json(&a.out.join("train_report.json"), &report).stage("write train report")?;
    write_atomic(
        &a.out.join("loss_curve.csv"),
        report.loss_curve_csv().as_bytes(),
    )
    .stage("write loss curve")?;
    println!(
        "trained `{arch_name}` for {} epochs ({:?}): loss {} → {} ({:.1}x), {} parameters",
        report.final_epoch,
        report.stop_reason,
        fmt_sig6(report.initial.total),
        fmt_sig6(report.final_train.total),
        report.loss_reduction(),
        model.params.scalar_count()
    );
    Ok(())
}

fn load_model(path: &Path, cfg: &SystemConfig) -> CliResult<RecoveryModel> {
    // an incompatible checkpoint is bad input, not a runtime failure
    RecoveryModel::load_for(path, cfg).map_err(|e| match e {
        hopscatter::Error::Shape(m) => {
            CliError::data("load model", format!("{}: {m}", path.display()))
        }
        e => CliError::from_core("load model", e),
    })
}

fn track_cmd(a: TrackArgs) -> CliResult {
    let ds = read_dataset(&a.input)?;
    let cfg = &ds.manifest.config;
    let mode: TrackMode = a.mode.into();
    let model = match (&a.model, mode) {
        (Some(p), _) => Some(load_model(p, cfg)?),
        (None, TrackMode::Recovered) => {
            return Err(CliError::usage(
                "track",
                "--model is required for --mode recovered",
            ));
        }
        (None, _) => None,
    };
    let tracked = track_dataset(&ds, mode, model.as_ref()).stage("track")?;

    let mut csv = String::from("trajectory_id,t,x,y\n");
    for t in &tracked {
        for s in t.result.trajectory.samples() {
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                t.trajectory_id,
                fmt_sig6(s.t),
                fmt_sig6(s.p.x),
                fmt_sig6(s.p.y)
            );
        }
    }
    let single_file = a.out.extension().is_some_and(|e| e == "csv");
    let csv_path = if single_file {
        a.out.clone()
    } else {
        a.out.join("trajectories.csv")
    };
    write_atomic(&csv_path, csv.as_bytes()).stage("write trajectories")?;
    if a.confidence && single_file {
        return Err(CliError::usage(
            "track",
            "--confidence needs a directory --out",
        ));
    }

    let pairs: Vec<_> = tracked
        .iter()
        .map(|t| (t.result.trajectory.clone(), t.truth.clone()))
        .collect();
    let pooled = PooledEval::from_trajectories(&pairs).stage("evaluate")?;
    if !single_file {
        let warnings: Vec<String> = tracked
            .iter()
            .flat_map(|t| {
                t.result
                    .warnings
                    .iter()
                    .map(move |w| format!("trajectory {}: {w}", t.trajectory_id))
            })
            .collect();
        let summary = serde_json::json!({
            "mode": TrackMode::NAMES[mode as usize],
            "trajectories": tracked.len(),
            "mae_mm": fmt_sig6(pooled.metrics.mae).parse::<f64>().ok(),
            "rmse_mm": fmt_sig6(pooled.metrics.rmse).parse::<f64>().ok(),
            "r2": fmt_sig6(pooled.metrics.r2).parse::<f64>().ok(),
            "median_r_mm": fmt_sig6(pooled.median_r * 1e3).parse::<f64>().ok(),
            "warnings": warnings,
        });
        write_json(&a.out.join("track_summary.json"), &summary).stage("write track summary")?;
        if a.confidence {
            let window = 2.0 * cfg.slot_duration;
            for t in &tracked {
                let t0 = t.frames[0].t;
                let n = t
                    .frames
                    .iter()
                    .take_while(|f| f.t < t0 + window - 1e-9)
                    .count();
                let (_, map) = initial_position(&t.frames[..n], cfg).stage("confidence map")?;
                let path = a.out.join(format!("confidence_{}.csv", t.trajectory_id));
                write_atomic(&path, map.to_csv().as_bytes()).stage("write confidence map")?;
            }
        }
    }
    println!(
        "tracked {} trajectories ({}): median error {:.2} mm, MAE {:.2} mm",
        tracked.len(),
        TrackMode::NAMES[mode as usize],
        pooled.median_r * 1e3,
        pooled.metrics.mae
    );
    Ok(())
}

fn method(name: &str, dataset: &str, e: PooledEval) -> MethodEval {
    MethodEval {
        method: name.into(),
        dataset: dataset.into(),
        metrics: e.metrics,
        median_r_mm: e.median_r * 1e3,
        errors: e.errors,
    }
}

pub(crate) fn evaluate_methods(
    model: &RecoveryModel,
    test: &Dataset,
    train_set: Option<&Dataset>,
    seed: u64,
) -> CliResult<Vec<MethodEval>> {
    let ds_name = test.manifest.preset.name.clone();
    let mut methods = vec![
        method(
            "Ours",
            &ds_name,
            evaluate_tracking(test, TrackMode::Recovered, Some(model)).stage("eval recovered")?,
        ),
        method(
            "analytic",
            &ds_name,
            evaluate_tracking(test, TrackMode::Analytic, None).stage("eval analytic")?,
        ),
        method(
            "eavesdropper",
            &ds_name,
            evaluate_tracking(test, TrackMode::Eavesdropper, None).stage("eval eavesdropper")?,
        ),
    ];
    if let Some(tr) = train_set {
        let cfg = &tr.manifest.config;
        for name in BaselineSpec::NAMES {
            let spec = BaselineSpec::by_name(name).stage("baseline")?;
            let m = baseline_train(
                &spec,
                &tr.windows,
                cfg.n_antennas(),
                cfg.channel_plan.count,
                cfg.workspace.center(),
                derive_seed(seed, "baseline", 0),
            )
            .stage("train baseline")?;
            let pairs = baseline_predict(&m, &test.windows).stage("eval baseline")?;
            methods.push(method(
                name,
                &ds_name,
                PooledEval::from_trajectories(&pairs).stage("eval baseline")?,
            ));
        }
    }
    Ok(methods)
}

fn eval(a: EvalArgs) -> CliResult {
    let test = read_dataset(&a.input)?;
    let model = load_model(&a.model, &test.manifest.config)?;
    let train_ds = a.train.as_deref().map(read_dataset).transpose()?;
    let methods = evaluate_methods(&model, &test, train_ds.as_ref(), a.seed)?;
    for m in &methods {
        println!(
            "{:<14} MAE {:>8.2} mm  RMSE {:>8.2} mm  R2 {:>6.3}  median {:>8.2} mm",
            m.method, m.metrics.mae, m.metrics.rmse, m.metrics.r2, m.median_r_mm
        );
    }
    report_emit(
        &EvalResults {
            ablation: None,
            methods,
        },
        &a.out,
    )
    .stage("write report")?;
    Ok(())
}

fn windows_per_trajectory(window_len: usize) -> usize {
    let g = GestureParams::default();
    ((g.duration * g.rate).round() as usize / window_len).max(1)
}

pub(crate) fn ablation_scenarios(
    cfg: &SystemConfig,
    seed: u64,
    windows: usize,
    test_trajectories: usize,
) -> CliResult<Vec<ScenarioData>> {
    let n_train = windows.div_ceil(windows_per_trajectory(
        hopscatter::rfsim::DEFAULT_WINDOW_LEN,
    ));
    [ScenarioPreset::dataset1(), ScenarioPreset::dataset2()]
        .into_iter()
        .enumerate()
        .map(|(i, preset)| {
            Ok(ScenarioData {
                name: preset.name.clone(),
                train: gen_dataset(
                    &preset,
                    n_train,
                    cfg,
                    derive_seed(seed, "ablate-train", i as u64),
                )
                .stage("gen")?,
                test: gen_dataset(
                    &preset,
                    test_trajectories,
                    cfg,
                    derive_seed(seed, "ablate-test", i as u64),
                )
                .stage("gen")?,
            })
        })
        .collect()
}

fn ablate(a: AblateArgs) -> CliResult {
    let cfg = load_system(a.config.as_deref())?;
    let mut configs = ablation_configs();
    if let Some(list) = &a.models {
        let wanted: Vec<String> = list.split(',').map(slug).collect();
        if let Some(bad) = wanted
            .iter()
            .find(|w| !configs.iter().any(|(n, _)| &slug(n) == *w))
        {
            return Err(CliError::data(
                "ablate",
                format!("unknown ablation row `{bad}`"),
            ));
        }
        configs.retain(|(n, _)| wanted.contains(&slug(n)));
    }
    let scenarios = ablation_scenarios(&cfg, a.seed, a.windows, a.test_trajectories)?;
    let hp = TrainParams {
        max_epochs: a.epochs,
        ..TrainParams::desk_scale()
    };
    let started = std::time::Instant::now();
    let table = ablation_run(&scenarios, &configs, &hp, a.seed).stage("ablate")?;
    eprintln!(
        "ablation grid finished in {:.1} s",
        started.elapsed().as_secs_f64()
    );
    print!("{}", hopscatter::evalx::table_csv(&table));
    report_emit(
        &EvalResults {
            ablation: Some(table),
            methods: Vec::new(),
        },
        &a.out,
    )
    .stage("write report")?;
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> CliResult {
    let (name, arch) = load_arch(&a.config)?;
    let entries =
        gradient_suite(&arch, &SystemConfig::default(), a.seed, a.per_param).stage("gradcheck")?;
    let mut worst: f64 = 0.0;
    for e in &entries {
        worst = worst.max(e.report.max_rel_error);
        println!(
            "{:<16} {:>7} coords  max rel error {:.3e}  (tol {:.0e})  {}",
            e.name,
            e.report.checked,
            e.report.max_rel_error,
            e.report.tolerance,
            if e.passed() { "PASS" } else { "FAIL" }
        );
    }
    println!("max relative error ({name}): {worst:.3e}");
    if let Some(out) = &a.out {
        write_json(&out.join("gradcheck.json"), &entries).stage("write gradcheck")?;
    }
    match entries.iter().find(|e| !e.passed()) {
        None => Ok(()),
        Some(e) => Err(CliError::new(
            "gradcheck",
            crate::EXIT_RUNTIME,
            format!("{} failed: {:?}", e.name, e.report.worst),
        )),
    }
}

fn report(a: ReportArgs) -> CliResult {
    let raw: PathBuf = a.input.join(RAW_RESULTS_FILE);
    let results: EvalResults = read_json(&raw).stage("read results")?;
    let files = report_emit(&results, &a.out).stage("write report")?;
    println!("wrote {} files to {}", files.len(), a.out.display());
    Ok(())
}

fn smoke(a: SmokeArgs) -> CliResult {
    let opts = if a.tiny {
        SmokeOptions::tiny()
    } else {
        SmokeOptions::default()
    };
    let summary = pipeline_smoke(a.seed, &opts)?;
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::new("smoke", crate::EXIT_RUNTIME, e.to_string()))?;
    println!("{text}");
    if let Some(out) = &a.out {
        write_json(&out.join("summary.json"), &summary).stage("write summary")?;
    }
    Ok(())
}
