use std::fmt;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use serde_json::{json, Map, Value};
use svlet_core::harness::{
    rmt_law_checks, run_sweep_with, sensitivity_sweep, timing_report, RmtCheckConfig, RunOptions,
};
use svlet_core::io::{read_matrix, write_matrix};
use svlet_core::rmt::{asymptotic_denoise, AsymptoticVariant, SVHT_CALIBRATED_THRESHOLD};
use svlet_core::spectral::{reconstruct, svd, truncate_factors};
use svlet_core::sure::{solve_svlet_spectrum, sure_spectrum, tune_grid_spectrum};
use svlet_core::{
    AspectRatio, DMatrix, DenoiseProblem, Error, GridSpec, ShrinkageRule, SureSettings, TuneFamily,
};

use crate::config::CliConfig;
use crate::{BenchArgs, DenoiseArgs, DenoiseMethod, RmtArgs, TuneArgs, TuneTarget};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Library(Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Library(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => f.write_str(msg),
            Failure::Library(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn load(path: &Path) -> Result<DMatrix<f64>, Failure> {
    read_matrix(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn rule_params(rule: &ShrinkageRule) -> Value {
    let mut map = Map::new();
    for (name, value) in rule.params() {
        map.insert(name.to_string(), json!(value));
    }
    if let ShrinkageRule::Svlet(basis) = rule {
        map.insert("a".into(), json!(basis.coefficients()));
    }
    Value::Object(map)
}

fn all_or_none(values: &[Option<f64>], names: &str) -> Result<Option<Vec<f64>>, Failure> {
    match values.iter().filter(|v| v.is_some()).count() {
        0 => Ok(None),
        n if n == values.len() => Ok(Some(values.iter().map(|v| v.unwrap()).collect())),
        _ => Err(Failure::Usage(format!("give all of {names} or none"))),
    }
}

pub fn denoise(args: DenoiseArgs) -> Outcome {
    let y = load(&args.input)?;
    let problem = DenoiseProblem::new(y, args.sigma)?;
    let settings = SureSettings::default();
    let start = Instant::now();
    let factors = svd(problem.observed())?;
    let spectrum = factors.spectrum();
    let (shape, sigma) = (problem.shape(), problem.sigma());

    let tuned = |family| -> Result<ShrinkageRule, Failure> {
        let grid = GridSpec::default_for(family, spectrum);
        Ok(tune_grid_spectrum(spectrum, shape, sigma, &grid, &settings)?.rule)
    };
    let rule = match args.method {
        DenoiseMethod::Svlet => {
            Some(solve_svlet_spectrum(spectrum, shape, sigma, args.k, args.c, &settings)?.rule)
        }
        DenoiseMethod::Svst => Some(match args.lambda {
            Some(lambda) => ShrinkageRule::svst(lambda)?,
            None => tuned(TuneFamily::Svst)?,
        }),
        DenoiseMethod::Atn => Some(
            match all_or_none(&[args.tau, args.gamma], "--tau/--gamma")? {
                Some(p) => ShrinkageRule::atn(p[0], p[1])?,
                None => tuned(TuneFamily::Atn)?,
            },
        ),
        DenoiseMethod::Svlt => Some(
            match all_or_none(&[args.p1, args.p2, args.p3], "--p1/--p2/--p3")? {
                Some(p) => ShrinkageRule::svlt(p[0], p[1], p[2])?,
                None => tuned(TuneFamily::Svlt)?,
            },
        ),
        DenoiseMethod::Svht => Some(ShrinkageRule::svht(
            args.mu
                .unwrap_or(SVHT_CALIBRATED_THRESHOLD * (shape.n() as f64).sqrt() * sigma),
        )?),
        DenoiseMethod::OptShrink | DenoiseMethod::Eym => None,
    };

    let (estimate, params, sure) = match (&rule, args.method) {
        (Some(rule), _) => {
            let report = sure_spectrum(spectrum, shape, sigma, rule, &settings)?;
            let estimate = reconstruct(&factors, &rule.apply(spectrum)?)?;
            (estimate, rule_params(rule), Some(report.sure))
        }
        (None, DenoiseMethod::OptShrink) => (
            asymptotic_denoise(&problem, &factors, AsymptoticVariant::OptimalShrink)?,
            json!({ "beta": AspectRatio::of(shape).beta() }),
            None,
        ),
        (None, _) => {
            let rank = args
                .rank
                .ok_or_else(|| Failure::Usage("--method eym needs --rank".into()))?;
            if rank > shape.len() {
                return Err(Error::range("rank", rank as f64, "0 <= rank <= min(n, m)").into());
            }
            (
                truncate_factors(&factors, rank),
                json!({ "rank": rank }),
                None,
            )
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    write_matrix(&args.output, &estimate)?;
    let name = args
        .method
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    println!(
        "{}",
        json!({ "method": name, "params": params, "sure": sure, "seconds": seconds })
    );
    Ok(())
}

pub fn tune(args: TuneArgs) -> Outcome {
    let y = load(&args.input)?;
    let problem = DenoiseProblem::new(y, args.sigma)?;
    let settings = SureSettings::default();
    let factors = svd(problem.observed())?;
    let spectrum = factors.spectrum();
    let (shape, sigma) = (problem.shape(), problem.sigma());
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());

    let family = match args.family {
        TuneTarget::Svst => TuneFamily::Svst,
        TuneTarget::Atn => TuneFamily::Atn,
        TuneTarget::Svlt => TuneFamily::Svlt,
        TuneTarget::Svlet => {
            let solve = solve_svlet_spectrum(spectrum, shape, sigma, args.k, args.c, &settings)?;
            writeln!(out, "k,a")?;
            for (k, a) in solve.coefficients().iter().enumerate() {
                writeln!(out, "{},{a}", k + 1)?;
            }
            let summary = json!({
                "family": "svlet",
                "params": { "C": args.c, "K": args.k },
                "a": solve.coefficients(),
                "condition_estimate": solve.system.condition_estimate,
                "ridge_used": solve.system.ridge_used,
                "relative_residual": solve.system.relative_residual(),
                "sure": solve.report.sure,
            });
            writeln!(out, "# {summary}")?;
            out.flush()?;
            return Ok(());
        }
    };
    let grid = GridSpec::default_for(family, spectrum);
    let report = tune_grid_spectrum(spectrum, shape, sigma, &grid, &settings)?;
    writeln!(out, "{},sure", report.trace_columns.join(","))?;
    for point in &report.trace {
        let params: Vec<String> = point.params.iter().map(f64::to_string).collect();
        writeln!(out, "{},{}", params.join(","), point.sure)?;
    }
    let summary = json!({
        "family": family.name(),
        "params": rule_params(&report.rule),
        "sure": report.sure,
        "grid_points": report.trace.len(),
    });
    writeln!(out, "# {summary}")?;
    out.flush()?;
    Ok(())
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
) -> Outcome {
    let file =
        fs::File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    body(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn bench(args: BenchArgs) -> Outcome {
    let base = match args.preset.as_deref() {
        Some("paper") => CliConfig::paper(),
        _ => CliConfig::default(),
    };
    let cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            CliConfig::parse_over(base, &text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => base,
    };
    if let Some(seed) = cfg.seed {
        if seed != args.seed {
            return Err(Failure::Usage(format!(
                "config seed {seed} disagrees with --seed {}",
                args.seed
            )));
        }
    }
    let dir = args
        .output
        .or(cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let options = RunOptions {
        threads: args.threads.or(cfg.threads),
        record_times: cfg.record_times,
        settings: cfg.settings.clone(),
    };
    let grid = cfg.grid(args.seed);
    let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let start = Instant::now();
    let mut files = Vec::new();

    let table = run_sweep_with(&grid, &options)?;
    let nmse_path = dir.join("nmse.csv");
    write_file(&nmse_path, |w| table.write_csv(w, Some(&stamp)))?;
    files.push(nmse_path);
    let mut error_rows = table.rows.iter().filter(|r| !r.is_ok()).count();

    let mut best = Value::Null;
    if cfg.sensitivity {
        let report = sensitivity_sweep(&grid, &cfg.c_values, &cfg.k_values, &options)?;
        error_rows += report.table.rows.iter().filter(|r| !r.is_ok()).count();
        let table_path = dir.join("sensitivity.csv");
        write_file(&table_path, |w| report.table.write_csv(w, Some(&stamp)))?;
        let summary_path = dir.join("sensitivity_summary.csv");
        write_file(&summary_path, |w| report.write_summary_csv(w))?;
        files.extend([table_path, summary_path]);
        if let Some(cell) = &report.best {
            best = json!({ "C": cell.c, "K": cell.k, "mean_nmse": cell.mean_nmse });
        }
    }
    if cfg.timing {
        let timing_grid = svlet_core::harness::ExperimentGrid {
            trials: cfg.timing_trials,
            ..grid.clone()
        };
        let timing = timing_report(&timing_grid, &cfg.settings)?;
        let path = dir.join("timing.csv");
        write_file(&path, |w| timing.write_csv(w))?;
        files.push(path);
    }

    let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    println!(
        "{}",
        json!({
            "seed": args.seed,
            "rows": table.rows.len(),
            "error_rows": error_rows,
            "best_sensitivity": best,
            "files": files,
            "seconds": start.elapsed().as_secs_f64(),
        })
    );
    Ok(())
}

pub fn rmt_check(args: RmtArgs) -> Outcome {
    let cfg = RmtCheckConfig::new(args.n, args.beta, args.trials, args.seed);
    let checks = rmt_law_checks(&cfg)?;
    let passed = checks.iter().filter(|c| c.passed).count();
    for c in &checks {
        println!(
            "{} {}: observed={:.6} expected={:.6} deviation={:.6} tolerance={}",
            if c.passed { "PASS" } else { "FAIL" },
            c.law,
            c.observed,
            c.expected,
            c.deviation,
            c.tolerance
        );
    }
    println!("{passed}/{} laws passed", checks.len());
    Ok(())
}
