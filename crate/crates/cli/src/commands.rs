use std::path::Path;

use homcluster::clustering::{self, align_labels, read_labels, write_centers, write_labels, Algorithm, Method};
use homcluster::dataset::{self, clip_upper_quantile, load_csv, standardize, LoadOptions, MixedDataset};
use homcluster::embedding::{self, read_embedded_csv, write_embedded_csv, EmbedOptions, EmbeddingSidecar};
use homcluster::homals::{self, write_object_scores, HomalsConfig, SolutionFile};
use homcluster::indicator::build_indicator;
use homcluster::synthgen::{self, OutlierInjection, SynthConfig};
use homcluster::validation::{self, sweep_k, ValidationReport};
use log::info;
use serde::Serialize;

use crate::manifest::{write_json, write_text, Recorder};
use crate::{ClusterArgs, CliError, CliResult, DataArgs, EmbedArgs, FitArgs, ProfileArgs, SweepArgs, SynthArgs};

pub const SOLUTION_FILE: &str = "solution.json";
pub const OBJECT_SCORES_FILE: &str = "object_scores.csv";

/// Loads the dataset, clips the target's upper tail and standardizes the
/// continuous attributes.
pub fn prepare(args: &DataArgs) -> CliResult<MixedDataset> {
    let d = load_csv(
        &args.input,
        &args.schema,
        LoadOptions {
            missing_as_level: args.missing_as_level,
        },
    )?;
    let clip = args.target.as_deref().filter(|_| args.clip_quantile < 1.0);
    let d = match clip {
        None => standardize(&d)?,
        Some(t) if args.clip_after_standardize => clip_upper_quantile(&standardize(&d)?, t, args.clip_quantile)?,
        Some(t) => standardize(&clip_upper_quantile(&d, t, args.clip_quantile)?)?,
    };
    info!("prepared {} rows", d.n_rows());
    Ok(d)
}

fn record_data_inputs(rec: &mut Recorder, data: &DataArgs) {
    rec.input("input", &data.input);
    rec.input("schema", &data.schema);
}

/// Labels aligned to `row_ids`.
pub fn load_aligned_labels(path: &Path, row_ids: &[u64]) -> CliResult<Vec<usize>> {
    Ok(align_labels(&read_labels(path)?, row_ids)?)
}

pub fn synth(a: &SynthArgs) -> CliResult<()> {
    let mut rec = Recorder::new("synth", &a.out.output_dir, a, Some(a.seed), a.out.timing)?;
    let cfg = SynthConfig {
        outlier: a.inject_outlier.then_some(OutlierInjection {
            fraction: a.outlier_fraction,
            shift: a.outlier_shift,
        }),
        ..SynthConfig::with_geometry(a.n, a.side, a.dominant, a.seed)
    };
    let (d, truth) = synthgen::generate(&cfg)?;
    dataset::write_csv(&d, rec.output("data.csv")?)?;
    d.schema_file().write(rec.output("schema.json")?)?;
    write_labels(rec.output("truth.csv")?, d.row_ids(), &truth)?;
    rec.finish()
}

/// Fits quantifications on `d` and writes the solution JSON and object scores into `dir`.
pub fn fit_into(
    rec: &mut Recorder,
    dir: &Path,
    d: &MixedDataset,
    cfg: &HomalsConfig,
) -> CliResult<homals::HomalsSolution> {
    let g = build_indicator(d)?;
    let sol = homals::fit(&g, cfg)?;
    info!(
        "homals: {} iterations, loss {:.6}, converged {}",
        sol.iterations(),
        sol.final_loss(),
        sol.converged
    );
    write_object_scores(rec.output(dir.join(OBJECT_SCORES_FILE))?, sol.object_scores.view(), d.row_ids())?;
    SolutionFile::from_solution(&sol, OBJECT_SCORES_FILE).write(rec.output(dir.join(SOLUTION_FILE))?)?;
    Ok(sol)
}

pub fn fit(a: &FitArgs) -> CliResult<()> {
    let mut rec = Recorder::new("fit", &a.out.output_dir, a, Some(a.seed), a.out.timing)?;
    record_data_inputs(&mut rec, &a.data);
    let d = prepare(&a.data)?;
    let cfg = HomalsConfig {
        r: a.r,
        max_iter: a.max_iter,
        rel_tol: a.rel_tol,
        seed: a.seed,
    };
    fit_into(&mut rec, Path::new(""), &d, &cfg)?;
    rec.finish()
}

pub fn embed(a: &EmbedArgs) -> CliResult<()> {
    let mut rec = Recorder::new("embed", &a.out.output_dir, a, None, a.out.timing)?;
    record_data_inputs(&mut rec, &a.data);
    rec.input("solution", &a.solution);
    let d = prepare(&a.data)?;
    let sol = SolutionFile::read(&a.solution)?;
    let q = sol.to_quantifications()?;
    let opts = EmbedOptions {
        restandardize_quantified: a.restandardize_quantified,
    };
    let e = embedding::embed(&d, &q, opts)?;
    write_embedded_csv(&e, rec.output("embedded.csv")?)?;
    let sidecar = EmbeddingSidecar {
        solution_fingerprint: sol.fingerprint.clone(),
        schema_fingerprint: sol.schema_fingerprint.clone(),
        column_names: e.column_names.clone(),
        n_rows: e.n_rows(),
        restandardized_quantified: opts.restandardize_quantified,
    };
    write_json(&rec.output("embedded.json")?, &sidecar)?;
    rec.finish()
}

#[derive(Debug, Serialize)]
pub struct RunMetadata {
    pub method: Method,
    pub k: usize,
    pub seed: u64,
    pub objective: f64,
    pub sizes: Vec<usize>,
    /// Row ids of the medoids, for CLARA.
    pub medoid_row_ids: Option<Vec<u64>>,
}

pub fn cluster(a: &ClusterArgs) -> CliResult<()> {
    let mut rec = Recorder::new("cluster", &a.out.output_dir, a, Some(a.seed), a.out.timing)?;
    rec.input("input", &a.input);
    let e = read_embedded_csv(&a.input)?;
    let method = a.method.tuning.method(a.method.algorithm);
    let res = clustering::cluster(e.matrix.view(), &method, a.k, a.seed)?;
    info!("{} k={} objective {:.6}", res.algorithm, res.k, res.objective);
    write_labels(rec.output("labels.csv")?, &e.row_index, &res.labels)?;
    write_centers(rec.output("centers.csv")?, res.centers.view(), &e.column_names)?;
    let mut sizes = vec![0; res.k];
    for &l in &res.labels {
        sizes[l] += 1;
    }
    let meta = RunMetadata {
        method,
        k: res.k,
        seed: res.seed,
        objective: res.objective,
        sizes,
        medoid_row_ids: res
            .medoids
            .as_ref()
            .map(|m| m.iter().map(|&i| e.row_index[i]).collect()),
    };
    write_json(&rec.output("run.json")?, &meta)?;
    rec.finish()
}

pub fn sweep(a: &SweepArgs) -> CliResult<()> {
    let mut rec = Recorder::new("sweep", &a.out.output_dir, a, Some(a.seed), a.out.timing)?;
    rec.input("input", &a.input);
    let e = read_embedded_csv(&a.input)?;
    let truth = match &a.truth {
        Some(p) => {
            rec.input("truth", p);
            Some(load_aligned_labels(p, &e.row_index)?)
        }
        None => None,
    };
    let mut algorithms: Vec<Algorithm> = a.algorithm.clone();
    algorithms.sort();
    algorithms.dedup();
    let mut report = ValidationReport::default();
    for alg in algorithms {
        let method = a.tuning.method(alg);
        report.merge(sweep_k(
            e.matrix.view(),
            &method,
            &a.k_range.values(),
            a.index,
            truth.as_deref(),
            a.seed,
        )?);
    }
    write_text(&rec.output("report.txt")?, &report.render_table())?;
    write_json(&rec.output("report.json")?, &report)?;
    rec.finish()
}

pub fn require_target(data: &DataArgs) -> CliResult<&str> {
    data.target
        .as_deref()
        .ok_or_else(|| CliError::Usage("--target is required".into()))
}

pub fn profile(a: &ProfileArgs) -> CliResult<()> {
    let target = require_target(&a.data)?;
    let mut rec = Recorder::new("profile", &a.out.output_dir, a, None, a.out.timing)?;
    record_data_inputs(&mut rec, &a.data);
    rec.input("labels", &a.labels);
    let d = prepare(&a.data)?;
    let labels = load_aligned_labels(&a.labels, d.row_ids())?;
    let p = validation::profile(&d, &labels, target)?;
    write_text(&rec.output("profile.txt")?, &p.render_table())?;
    write_json(&rec.output("profile.json")?, &p)?;
    rec.finish()
}
