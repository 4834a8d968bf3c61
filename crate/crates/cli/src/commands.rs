use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use segstat_core::ci::SdDivisor;
use segstat_core::coverage::CoverageResult;
use segstat_core::planner::fmt2;
use segstat_core::{
    bootstrap_ci, evaluate_subject, gaussian_table, parametric_ci_with, plan_sample_size, read_nifti, run_coverage,
    run_sweep, BootstrapConfig, CoverageConfig, MetricSeries, SubjectMetrics, SweepConfig, SyntheticDistribution,
    TableSpec,
};
use serde::Serialize;

use crate::error::CliError;
use crate::metrics_csv::MetricsCsv;
use crate::output::{self, cell, round};
use crate::{
    CiArgs, CiMethod, CoverageArgs, Divisor, MetricsArgs, Outcome, PlanArgs, PlanFormat, ReportFormat, SubsampleArgs,
    TableArgs, TableFormat,
};

const NIFTI_SUFFIXES: [&str; 2] = [".nii.gz", ".nii"];

fn subject_id(file_name: &str) -> Option<&str> {
    NIFTI_SUFFIXES.iter().find_map(|s| file_name.strip_suffix(s)).filter(|id| !id.is_empty())
}

fn list_volumes(dir: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if !entry.file_type()?.is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = subject_id(&name) {
            found.push((id.to_string(), name));
        }
    }
    found.sort();
    Ok(found)
}

fn evaluate_pair(gt: &Path, pred: &Path, id: &str, labels: &[u32]) -> Result<Vec<SubjectMetrics>, String> {
    if !pred.is_file() {
        return Err(format!("missing prediction {}", pred.display()));
    }
    let gt = read_nifti(gt).map_err(|e| format!("ground truth: {e}"))?;
    let pred = read_nifti(pred).map_err(|e| format!("prediction: {e}"))?;
    labels
        .iter()
        .map(|&l| evaluate_subject(id, &gt, &pred, l).map_err(|e| e.to_string()))
        .collect()
}

pub fn metrics(args: &MetricsArgs) -> Result<Outcome, CliError> {
    let subjects = list_volumes(&args.gt_dir)?;
    if subjects.is_empty() {
        return Err(CliError::NoSubjects(args.gt_dir.display().to_string()));
    }
    let results: Vec<Result<Vec<SubjectMetrics>, String>> = subjects
        .par_iter()
        .map(|(id, name)| evaluate_pair(&args.gt_dir.join(name), &args.pred_dir.join(name), id, &args.labels))
        .collect();

    let mut columns = Vec::new();
    for l in &args.labels {
        columns.push(format!("dice_L{l}"));
        columns.push(format!("hd95_L{l}"));
    }
    let mut table = MetricsCsv::new(columns)?;
    let mut long = csv::Writer::from_writer(Vec::new());
    long.write_record(["subject_id", "label", "dice", "hd95", "flags"])?;
    let mut failed = Vec::new();
    for ((id, _), result) in subjects.iter().zip(results) {
        match result {
            Ok(per_label) => {
                let mut row = Vec::new();
                for m in &per_label {
                    row.push(Some(m.dice));
                    row.push(m.hd95.value());
                    long.write_record([
                        id.clone(),
                        m.label.to_string(),
                        m.dice.to_string(),
                        m.hd95.value().map(|v| v.to_string()).unwrap_or_default(),
                        m.flags.render(),
                    ])?;
                }
                table.push_row(id, row)?;
            }
            Err(reason) => {
                log::error!("subject {id}: {reason}");
                failed.push(id.clone());
            }
        }
    }
    table.write(output::sink(args.out.as_deref())?)?;
    if let Some(p) = &args.long_out {
        let bytes = long.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        fs::write(p, bytes)?;
    }
    eprintln!(
        "metrics: {} subjects, {} written, {} failed",
        subjects.len(),
        subjects.len() - failed.len(),
        failed.len()
    );
    if failed.is_empty() {
        Ok(Outcome::Success)
    } else {
        eprintln!("failed subjects: {}", failed.join(", "));
        Ok(Outcome::Partial)
    }
}

fn load_column(input: &Path, column: &str) -> Result<(MetricSeries, usize), CliError> {
    let table = MetricsCsv::read(File::open(input)?)?;
    let col = table.column(column)?;
    if col.skipped > 0 {
        log::warn!("{column}: skipped {} undefined cells", col.skipped);
    }
    Ok((MetricSeries::new(column, col.values, "")?, col.skipped))
}

#[derive(Serialize)]
struct CiConfigJson {
    column: String,
    method: &'static str,
    m: usize,
    level: f64,
    seed: u64,
    sd_divisor: &'static str,
}

#[derive(Serialize)]
struct ParametricJson {
    mu: f64,
    sigma: f64,
    sem: f64,
    ci: [f64; 2],
    width: f64,
    nu: Option<f64>,
    z: f64,
    z_rounded: f64,
    ci_rounded: [f64; 2],
    nu_rounded: Option<f64>,
}

#[derive(Serialize)]
struct BootstrapJson {
    m: u64,
    seed: Option<u64>,
    mu_star: f64,
    sem_star: f64,
    ci: [f64; 2],
    bounds: [f64; 2],
    width: f64,
    nu_star: Option<f64>,
}

#[derive(Serialize)]
struct CiJson {
    metric: String,
    n: usize,
    level: f64,
    skipped_undefined: usize,
    config: CiConfigJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    parametric: Option<ParametricJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapJson>,
}

pub fn ci(args: &CiArgs) -> Result<Outcome, CliError> {
    let (series, skipped) = load_column(&args.input, &args.column)?;
    let (divisor, divisor_name) = match args.sd_divisor {
        Divisor::Population => (SdDivisor::Population, "population"),
        Divisor::Sample => (SdDivisor::Sample, "sample"),
    };
    let parametric = match args.method {
        CiMethod::Bootstrap => None,
        _ => {
            let r = parametric_ci_with(&series, args.level, divisor)?;
            Some(ParametricJson {
                mu: r.mu,
                sigma: r.sigma,
                sem: r.sem,
                ci: [r.ci.0, r.ci.1],
                width: r.width,
                nu: r.nu,
                z: r.z,
                z_rounded: r.z_rounded,
                ci_rounded: [r.ci_rounded.0, r.ci_rounded.1],
                nu_rounded: r.nu_rounded,
            })
        }
    };
    let bootstrap = match args.method {
        CiMethod::Parametric => None,
        _ => {
            let config = BootstrapConfig {
                m: args.m,
                level: args.level,
                seed: args.seed,
                keep_means: args.means_out.is_some(),
            };
            let r = bootstrap_ci(&series, &config)?;
            if let (Some(p), Some(means)) = (&args.means_out, &r.resample_means) {
                let mut w = output::sink(Some(p))?;
                writeln!(w, "i,mean")?;
                for (i, m) in means.iter().enumerate() {
                    writeln!(w, "{i},{m}")?;
                }
                w.flush()?;
            }
            Some(BootstrapJson {
                m: r.m,
                seed: r.seed,
                mu_star: r.mu_star,
                sem_star: r.sem_star,
                ci: [r.ci_star.0, r.ci_star.1],
                bounds: [r.bounds.0, r.bounds.1],
                width: r.width,
                nu_star: r.nu_star,
            })
        }
    };
    let report = CiJson {
        metric: args.column.clone(),
        n: series.len(),
        level: args.level.value(),
        skipped_undefined: skipped,
        config: CiConfigJson {
            column: args.column.clone(),
            method: match args.method {
                CiMethod::Parametric => "parametric",
                CiMethod::Bootstrap => "bootstrap",
                CiMethod::Both => "both",
            },
            m: args.m,
            level: args.level.value(),
            seed: args.seed,
            sd_divisor: divisor_name,
        },
        parametric,
        bootstrap,
    };
    output::emit(args.out.as_deref(), &output::to_json(&report)?)?;
    Ok(Outcome::Success)
}

pub fn subsample(args: &SubsampleArgs) -> Result<Outcome, CliError> {
    let (series, skipped) = load_column(&args.input, &args.column)?;
    let config = SweepConfig {
        sizes: args.sizes.clone().unwrap_or_else(|| SweepConfig::default_sizes(series.len())),
        repeats: args.repeats,
        m: args.m,
        level: args.level,
        seed: args.seed,
        with_replacement: args.with_replacement,
    };
    log::info!("subsample config: {config:?}");
    let result = run_sweep(&series, &config)?;

    let mut w = csv::Writer::from_writer(output::sink(args.out.as_deref())?);
    w.write_record([
        "k", "mu_k", "sigma_k", "sem_k", "ci_k_lo", "ci_k_hi", "nu_k", "mu*_k", "sem*_k", "ci*_k_lo", "ci*_k_hi", "nu*_k",
    ])?;
    for r in &result.rows {
        w.write_record([
            r.k.to_string(),
            cell(Some(r.mu)),
            cell(Some(r.sigma)),
            cell(Some(r.sem)),
            cell(Some(r.ci.0)),
            cell(Some(r.ci.1)),
            cell(r.nu),
            cell(Some(r.mu_star)),
            cell(Some(r.sem_star)),
            cell(Some(r.ci_star.0)),
            cell(Some(r.ci_star.1)),
            cell(r.nu_star),
        ])?;
    }
    w.flush()?;

    if let Some(p) = &args.draws_out {
        let z = config.level.z();
        let mut w = csv::Writer::from_path(p)?;
        w.write_record([
            "k", "j", "mu", "sigma", "sem", "ci_lo", "ci_hi", "nu", "mu_star", "sem_star", "a_star", "b_star", "ci_star_lo",
            "ci_star_hi",
        ])?;
        for d in &result.draws {
            w.write_record([
                d.k.to_string(),
                d.j.to_string(),
                cell(Some(d.mu)),
                cell(Some(d.sigma)),
                cell(Some(d.sem)),
                cell(Some(-z * d.sem)),
                cell(Some(z * d.sem)),
                cell(d.nu),
                cell(Some(d.mu_star)),
                cell(Some(d.sem_star)),
                cell(Some(d.a_star)),
                cell(Some(d.b_star)),
                cell(Some(d.a_star - d.mu_star)),
                cell(Some(d.b_star - d.mu_star)),
            ])?;
        }
        w.flush()?;
    }

    if let Some(p) = &args.json_out {
        #[derive(Serialize)]
        struct SweepJson<'a> {
            metric: &'a str,
            n: usize,
            skipped_undefined: usize,
            config: &'a SweepConfig,
            rows: &'a [segstat_core::subsample::SweepRow],
        }
        let report = SweepJson {
            metric: &args.column,
            n: result.n,
            skipped_undefined: skipped,
            config: &config,
            rows: &result.rows,
        };
        output::emit(Some(p), &output::to_json(&report)?)?;
    }
    Ok(Outcome::Success)
}

pub fn table(args: &TableArgs) -> Result<Outcome, CliError> {
    let spec = TableSpec {
        sigmas: args.sigmas.clone(),
        sizes: args.sizes.clone(),
    };
    let t = gaussian_table(&spec)?;
    let text = match args.format {
        TableFormat::Md => t.to_markdown(),
        TableFormat::Json => output::to_json(&t)?,
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["sigma", "k", "sem", "ci_lo", "ci_hi"])?;
            for row in &t.rows {
                for c in &row.cells {
                    w.write_record([
                        row.sigma.to_string(),
                        c.k.to_string(),
                        fmt2(c.sem),
                        fmt2(-c.half_width),
                        fmt2(c.half_width),
                    ])?;
                }
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?).expect("csv output is utf-8")
        }
    };
    output::emit(args.out.as_deref(), &text)?;
    Ok(Outcome::Success)
}

pub fn plan(args: &PlanArgs) -> Result<Outcome, CliError> {
    let p = plan_sample_size(args.sigma, args.width, args.level)?;
    let text = match args.format {
        PlanFormat::Json => output::to_json(&p)?,
        PlanFormat::Text => format!(
            "sigma={}\nwidth={}\nlevel={}\nz={}\nn_min={}\nachieved_width={}\n",
            p.sigma,
            p.target_width,
            p.level,
            round(p.z),
            p.n_min,
            round(p.achieved_width)
        ),
    };
    output::emit(args.out.as_deref(), &text)?;
    Ok(Outcome::Success)
}

fn coverage_row(dist: &str, r: &CoverageResult) -> Vec<String> {
    let method = match r.method {
        segstat_core::coverage::Method::Parametric => "parametric",
        segstat_core::coverage::Method::Bootstrap => "bootstrap",
    };
    vec![
        dist.to_string(),
        method.to_string(),
        r.n.to_string(),
        r.trials.to_string(),
        cell(Some(r.empirical_coverage)),
        cell(Some(r.coverage_se)),
        cell(Some(r.mean_width)),
        cell(Some(r.median_width)),
        cell(r.width_ratio_parametric_over_bootstrap),
    ]
}

pub fn coverage(args: &CoverageArgs) -> Result<Outcome, CliError> {
    let dist: SyntheticDistribution = args.dist.parse()?;
    let config = CoverageConfig {
        n: args.n,
        trials: args.trials,
        level: args.level,
        seed: args.seed,
        bootstrap_m: (args.m > 0).then_some(args.m),
    };
    let report = run_coverage(&dist, &config)?;
    let text = match args.format {
        ReportFormat::Json => output::to_json(&report)?,
        ReportFormat::Csv => {
            let name = dist.to_string();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "distribution",
                "method",
                "n",
                "trials",
                "empirical_coverage",
                "coverage_se",
                "mean_width",
                "median_width",
                "width_ratio_parametric_over_bootstrap",
            ])?;
            w.write_record(coverage_row(&name, &report.parametric))?;
            if let Some(b) = &report.bootstrap {
                w.write_record(coverage_row(&name, b))?;
            }
            String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?).expect("csv output is utf-8")
        }
    };
    output::emit(args.out.as_deref(), &text)?;
    Ok(Outcome::Success)
}
