use std::path::{Path, PathBuf};
use std::time::Instant;

use gkdr::data::{generate, split_indices, Dataset, SplitSize, SynthKind};
use gkdr::evaluation::{
    classification_error, run_replication, subspace_error, BenchmarkConfig, BenchmarkResult, Selection,
};
use gkdr::gkdr::default_schedule;
use gkdr::model_selection::{
    knn_classify, knn_regress, log_spaced, mean_squared_error, output_bandwidth, CvConfig, Task,
};
use gkdr::rng::seeded;
use gkdr::{cross_validate, fit, median_heuristic, GkdrConfig, KernelSpec, LowRankOptions, Matrix, Method};
use rayon::prelude::*;

use crate::args::{BenchArgs, CvArgs, DataArgs, EvalArgs, FitArgs, GridArgs, ModelArgs, OutputArgs, VariantArgs};
use crate::error::{config, CliError, CliResult};
use crate::io::{encode_response, load_csv, read_matrix, read_table, write_matrix};
use crate::report::{ConfigEcho, DataEcho, LowRankEcho, RunReport};

/// Sample size above which the incomplete-Cholesky path is switched on.
pub const AUTO_LOW_RANK_N: usize = 2000;

fn task_name(task: Task) -> &'static str {
    match task {
        Task::Regression => "regression",
        Task::Classification => "classification",
    }
}

fn report_path(output: &OutputArgs) -> PathBuf {
    output
        .report
        .clone()
        .unwrap_or_else(|| output.out_dir.join("report.json"))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

struct LoadedData {
    ds: Dataset,
    task: Task,
    echo: DataEcho,
}

fn load_data(args: &DataArgs, seed: u64) -> CliResult<LoadedData> {
    match (&args.input, args.synth) {
        (Some(path), None) => {
            let task: Task = args.task.into();
            let standardize = args.standardize.unwrap_or(true);
            let (ds, _) = load_csv(path, &args.label, task, standardize)?;
            let echo = DataEcho {
                source: "csv".into(),
                path: Some(path.display().to_string()),
                label_column: Some(args.label.clone()),
                task: Some(task_name(task).into()),
                n: ds.n(),
                m: ds.m(),
                standardize,
                classes: ds.labels.clone(),
                ..DataEcho::default()
            };
            Ok(LoadedData { ds, task, echo })
        }
        (None, Some(kind)) => {
            let kind: SynthKind = kind.into();
            let standardize = args.standardize.unwrap_or(false);
            let mut ds = generate(kind, args.n, &mut seeded(seed))?;
            if standardize {
                ds.x = gkdr::data::standardize_columns(&ds.x);
                // The true projection no longer applies after rescaling.
                ds.b0 = None;
            }
            let echo = DataEcho {
                source: "synthetic".into(),
                synth: Some(kind.as_str().into()),
                task: Some("regression".into()),
                n: ds.n(),
                m: ds.m(),
                standardize,
                ..DataEcho::default()
            };
            Ok(LoadedData {
                ds,
                task: Task::Regression,
                echo,
            })
        }
        _ => Err(config("give exactly one of --input or --synth")),
    }
}

fn variant_config(d: usize, n: usize, variant: &VariantArgs, spec: KernelSpec) -> (GkdrConfig, LowRankEcho) {
    let mut cfg = GkdrConfig::new(d, spec);
    let enabled = variant.low_rank || n > AUTO_LOW_RANK_N;
    if enabled {
        cfg.low_rank = Some(LowRankOptions {
            tol: variant.ichol_tol,
            max_rank: variant.max_rank,
        });
    }
    cfg.i_schedule = variant.schedule.clone();
    cfg.v_partition = variant.block_size;
    let echo = LowRankEcho {
        enabled,
        tol: variant.ichol_tol,
        max_rank: variant.max_rank,
    };
    (cfg, echo)
}

fn check_variant(variant: &VariantArgs) -> CliResult<()> {
    if !(variant.ichol_tol >= 0.0 && variant.ichol_tol.is_finite()) {
        return Err(config("--ichol-tol must be finite and non-negative"));
    }
    if variant.max_rank == Some(0) {
        return Err(config("--max-rank must be at least 1"));
    }
    if variant.block_size == Some(0) {
        return Err(config("--block-size must be at least 1"));
    }
    Ok(())
}

fn cv_config(grid: &GridArgs, task: Task, seed: u64) -> CliResult<CvConfig> {
    let cv = CvConfig {
        k_neighbors: grid.knn_k,
        folds: grid.folds,
        multipliers: grid.multipliers.clone().unwrap_or_else(|| log_spaced(0.5, 10.0, 8)),
        epsilons: grid.epsilons.clone(),
        task,
        seed,
    };
    cv.validate().map_err(|e| config(e.to_string()))?;
    Ok(cv)
}

fn echo_variant(echo: &mut ConfigEcho, cfg: &GkdrConfig, method: Method, m: usize, low_rank: LowRankEcho) {
    echo.method = Some(method.as_str().into());
    echo.d = Some(cfg.d);
    echo.low_rank = Some(low_rank);
    if method == Method::GkdrI {
        echo.schedule = Some(cfg.i_schedule.clone().unwrap_or_else(|| default_schedule(m, cfg.d, 5)));
    }
    if method == Method::GkdrV {
        echo.block_size = cfg.v_partition;
    }
}

fn echo_grid(echo: &mut ConfigEcho, cv: &CvConfig) {
    echo.folds = Some(cv.folds);
    echo.knn_k = Some(cv.k_neighbors);
    echo.multipliers = Some(cv.multipliers.clone());
    echo.epsilons = Some(cv.epsilons.clone());
}

pub fn cmd_fit(args: &FitArgs, argv: Vec<String>) -> CliResult<RunReport> {
    let start = Instant::now();
    let seed = args.output.seed;
    let model = &args.model;
    check_variant(&model.variant)?;
    let method: Method = model.method.into();
    let loaded = load_data(&args.data, seed)?;
    let (x, y) = (&loaded.ds.x, &loaded.ds.y);
    let load_time = start.elapsed().as_secs_f64();

    let placeholder = KernelSpec::new(1.0, 1.0, model.epsilon).map_err(|e| config(e.to_string()))?;
    let (mut cfg, low_rank) = variant_config(model.d, x.rows(), &model.variant, placeholder);
    let mut echo = ConfigEcho {
        argv,
        data: Some(loaded.echo.clone()),
        ..ConfigEcho::default()
    };
    echo_variant(&mut echo, &cfg, method, x.cols(), low_rank);

    let cv_start = Instant::now();
    let mut cv_report = None;
    let spec = if args.cv {
        let cv = cv_config(&args.grid, loaded.task, seed)?;
        echo_grid(&mut echo, &cv);
        let report = cross_validate(x, y, &cfg, &cv, method)?;
        let spec = report.selected_spec();
        echo.multiplier = Some(report.selected.0);
        cv_report = Some(report);
        spec
    } else {
        explicit_spec(model, x, y)?
    };
    let cv_time = cv_start.elapsed().as_secs_f64();
    echo.sigma_x = Some(spec.sigma_x);
    echo.sigma_y = Some(spec.sigma_y);
    echo.epsilon = Some(spec.epsilon);
    if !args.cv && model.sigma_x.is_none() {
        echo.multiplier = Some(model.multiplier);
    }
    cfg.spec = spec;

    let fit_start = Instant::now();
    let projection = fit(x, y, &cfg, method)?;
    let fit_time = fit_start.elapsed().as_secs_f64();

    ensure_dir(&args.output.out_dir)?;
    let projection_path = args
        .projection
        .clone()
        .unwrap_or_else(|| args.output.out_dir.join("projection.csv"));
    write_matrix(&projection_path, &projection.b)?;

    let mut report = RunReport::new("fit", seed, echo);
    report.cv = cv_report;
    report.metric("eigenvalues", &projection.eigenvalues)?;
    report.metric("projection_path", projection_path.display().to_string())?;
    if let Some(b0) = &loaded.ds.b0 {
        report.metric("subspace_error", subspace_error(b0, &projection.b)?)?;
    }
    report.timings.insert("load".into(), load_time);
    if args.cv {
        report.timings.insert("cv".into(), cv_time);
    }
    report.timings.insert("fit".into(), fit_time);
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    report.write(&report_path(&args.output))?;
    Ok(report)
}

fn explicit_spec(model: &ModelArgs, x: &Matrix, y: &Matrix) -> CliResult<KernelSpec> {
    let sigma_x = match model.sigma_x {
        Some(s) => s,
        None => {
            if !(model.multiplier > 0.0 && model.multiplier.is_finite()) {
                return Err(config("--multiplier must be positive"));
            }
            model.multiplier * median_heuristic(x)?
        }
    };
    let sigma_y = match model.sigma_y {
        Some(s) => s,
        None => output_bandwidth(y)?,
    };
    KernelSpec::new(sigma_x, sigma_y, model.epsilon).map_err(|e| config(e.to_string()))
}

pub fn cmd_cv(args: &CvArgs, argv: Vec<String>) -> CliResult<RunReport> {
    let start = Instant::now();
    let seed = args.output.seed;
    check_variant(&args.variant)?;
    let method: Method = args.method.into();
    let loaded = load_data(&args.data, seed)?;
    let (x, y) = (&loaded.ds.x, &loaded.ds.y);
    let cv = cv_config(&args.grid, loaded.task, seed)?;
    let placeholder = KernelSpec::new(1.0, 1.0, 1e-7)?;
    let (cfg, low_rank) = variant_config(args.d, x.rows(), &args.variant, placeholder);

    let mut echo = ConfigEcho {
        argv,
        data: Some(loaded.echo.clone()),
        ..ConfigEcho::default()
    };
    echo_variant(&mut echo, &cfg, method, x.cols(), low_rank);
    echo_grid(&mut echo, &cv);

    let cv_start = Instant::now();
    let result = cross_validate(x, y, &cfg, &cv, method)?;
    let cv_time = cv_start.elapsed().as_secs_f64();

    let best = result
        .table
        .iter()
        .find(|r| (r.multiplier, r.epsilon) == result.selected)
        .and_then(|r| r.mean_error)
        .expect("selected row has an error");
    let spec = result.selected_spec();
    echo.sigma_x = Some(spec.sigma_x);
    echo.sigma_y = Some(spec.sigma_y);
    echo.epsilon = Some(spec.epsilon);
    echo.multiplier = Some(result.selected.0);

    let mut report = RunReport::new("cv", seed, echo);
    report.metric("selected_multiplier", result.selected.0)?;
    report.metric("selected_epsilon", result.selected.1)?;
    report.metric("selected_cv_error", best)?;
    report.cv = Some(result);
    report.timings.insert("cv".into(), cv_time);
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    ensure_dir(&args.output.out_dir)?;
    report.write(&report_path(&args.output))?;
    Ok(report)
}

/// Runs every replication, in parallel on `threads` workers (all cores when
/// `None`), and aggregates by replication index.
pub fn run_benchmark(config: &BenchmarkConfig, threads: Option<usize>) -> CliResult<BenchmarkResult> {
    if config.replications == 0 {
        return Err(crate::error::config("replications must be at least 1"));
    }
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| crate::error::config(e.to_string()))?;
    let outcomes: Vec<(usize, gkdr::Result<f64>)> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|i| (i, run_replication(config, i).map(|o| o.error)))
            .collect()
    });
    let mut result = BenchmarkResult::aggregate(config, outcomes)?;
    result.wall_time_seconds = Some(start.elapsed().as_secs_f64());
    Ok(result)
}

pub fn cmd_bench(args: &BenchArgs, argv: Vec<String>) -> CliResult<RunReport> {
    let seed = args.output.seed;
    check_variant(&args.variant)?;
    if args.threads == Some(0) {
        return Err(config("--threads must be at least 1"));
    }
    let method: Method = args.method.into();
    let dataset: SynthKind = args.dataset.into();
    let mut bench = BenchmarkConfig::new(dataset, args.n, method, args.reps, seed);
    let (template, low_rank) = variant_config(dataset.true_dim(), args.n, &args.variant, bench.template.spec);
    bench.template = template;

    let mut echo = ConfigEcho {
        argv,
        replications: Some(args.reps),
        threads: args.threads,
        data: Some(DataEcho {
            source: "synthetic".into(),
            synth: Some(dataset.as_str().into()),
            task: Some("regression".into()),
            n: args.n,
            m: gkdr::data::SYNTH_DIM,
            ..DataEcho::default()
        }),
        ..ConfigEcho::default()
    };
    echo_variant(&mut echo, &bench.template, method, gkdr::data::SYNTH_DIM, low_rank);
    let grid_eps = args.grid.epsilons.first().copied().unwrap_or(1e-7);
    bench.selection = match args.fixed_multiplier {
        Some(c) => {
            if !(c > 0.0 && c.is_finite()) {
                return Err(config("--fixed-multiplier must be positive"));
            }
            echo.multiplier = Some(c);
            echo.epsilon = Some(grid_eps);
            Selection::Fixed {
                multiplier: c,
                epsilon: grid_eps,
            }
        }
        None => {
            let cv = cv_config(&args.grid, Task::Regression, seed)?;
            echo_grid(&mut echo, &cv);
            Selection::CrossValidate(cv)
        }
    };

    let result = run_benchmark(&bench, args.threads)?;
    println!("{}", result.table_row());
    let mut report = RunReport::new("bench", seed, echo);
    report.metric("mean_error", result.mean_error)?;
    report.metric("std_error", result.std_error)?;
    report.metric("sem", result.sem)?;
    report.metric("failures", result.failures.len())?;
    report
        .timings
        .insert("total".into(), result.wall_time_seconds.unwrap_or(0.0));
    report.benchmark = Some(result);
    ensure_dir(&args.output.out_dir)?;
    report.write(&report_path(&args.output))?;
    Ok(report)
}

pub fn cmd_eval(args: &EvalArgs, argv: Vec<String>) -> CliResult<RunReport> {
    let start = Instant::now();
    let seed = args.output.seed;
    let task: Task = args.task.into();
    let b = read_matrix(&args.projection)?;

    let train_table = read_table(&args.train, &args.label)?;
    let (train_x, train_resp, test_x, test_resp) = match &args.test {
        Some(path) => {
            let test_table = read_table(path, &args.label)?;
            if test_table.feature_names != train_table.feature_names {
                return Err(config("train and test files have different feature columns"));
            }
            (train_table.x, train_table.response, test_table.x, test_table.response)
        }
        None => {
            let n = train_table.x.rows();
            let mut classes = Vec::new();
            let y = encode_response(&args.train, &args.label, &train_table.response, task, &mut classes)?;
            let whole = Dataset {
                x: train_table.x.clone(),
                y,
                labels: None,
                b0: None,
            };
            let frac = 1.0 - args.test_fraction;
            let (train, test) = split_indices(&whole, SplitSize::Fraction(frac), seed, task == Task::Classification)
                .map_err(|e| config(format!("cannot split {n} rows: {e}")))?;
            let pick = |idx: &[usize]| idx.iter().map(|&i| train_table.response[i].clone()).collect::<Vec<_>>();
            (
                train_table.x.select_rows(&train),
                pick(&train),
                train_table.x.select_rows(&test),
                pick(&test),
            )
        }
    };

    if b.rows() != train_x.cols() {
        return Err(config(format!(
            "projection has {} rows but the data has {} feature columns",
            b.rows(),
            train_x.cols()
        )));
    }
    let (train_x, test_x) = if args.standardize {
        let s = gkdr::data::Standardization::fit(&train_x);
        (s.apply(&train_x), s.apply(&test_x))
    } else {
        (train_x, test_x)
    };

    let mut classes = Vec::new();
    let train_path = args.train.clone();
    let test_path = args.test.clone().unwrap_or_else(|| args.train.clone());
    let train_y = encode_response(&train_path, &args.label, &train_resp, task, &mut classes)?;
    let n_train_classes = classes.len();
    let test_y = encode_response(&test_path, &args.label, &test_resp, task, &mut classes)?;

    let k = args.knn_k.unwrap_or(match task {
        Task::Classification if n_train_classes == 2 => 7,
        _ => 5,
    });
    if k == 0 || k > train_x.rows() {
        return Err(config(format!("--knn-k {k} must lie in 1..={}", train_x.rows())));
    }

    let z_train = train_x.matmul(&b);
    let z_test = test_x.matmul(&b);
    let mut report = RunReport::new(
        "eval",
        seed,
        ConfigEcho {
            argv,
            d: Some(b.cols()),
            knn_k: Some(k),
            data: Some(DataEcho {
                source: "csv".into(),
                path: Some(args.train.display().to_string()),
                label_column: Some(args.label.clone()),
                task: Some(task_name(task).into()),
                n: train_x.rows() + test_x.rows(),
                m: train_x.cols(),
                standardize: args.standardize,
                classes: (task == Task::Classification).then(|| classes.clone()),
                ..DataEcho::default()
            }),
            ..ConfigEcho::default()
        },
    );
    match task {
        Task::Classification => {
            let train_labels = gkdr::data::class_indices(&train_y);
            let truth = gkdr::data::class_indices(&test_y);
            let pred = knn_classify(&z_train, &train_labels, &z_test, k)?;
            report.metric("classification_error", classification_error(&pred, &truth)?)?;
        }
        Task::Regression => {
            let pred = knn_regress(&z_train, &train_y, &z_test, k)?;
            report.metric("mean_squared_error", mean_squared_error(&pred, &test_y))?;
        }
    }
    report.metric("n_train", train_x.rows())?;
    report.metric("n_test", test_x.rows())?;

    ensure_dir(&args.output.out_dir)?;
    let projected_path = args
        .projected_out
        .clone()
        .unwrap_or_else(|| args.output.out_dir.join("projected.csv"));
    write_matrix(&projected_path, &z_test)?;
    report.metric("projected_path", projected_path.display().to_string())?;
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    report.write(&report_path(&args.output))?;
    Ok(report)
}
