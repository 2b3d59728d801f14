//! Recursive partition analysis: every cluster of a previous run is refitted,
//! re-embedded, re-clustered and profiled on its own, in `cluster_<id>/`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use homcluster::clustering::{self, write_labels, Algorithm, Method};
use homcluster::dataset::MixedDataset;
use homcluster::embedding::{self, EmbedOptions};
use homcluster::homals::HomalsConfig;
use homcluster::validation::{self, sweep_k, IndexKind};
use homcluster::Error;
use log::{info, warn};
use serde::Serialize;

use crate::commands::{fit_into, load_aligned_labels, prepare, require_target};
use crate::manifest::{write_json, write_text, Recorder};
use crate::{CliError, CliResult, DrilldownArgs};

/// Written as `node.json` in every partition directory.
#[derive(Debug, Serialize)]
pub struct NodeSummary {
    pub cluster: usize,
    pub level: usize,
    pub rows: usize,
    pub reclustered: bool,
    /// Why the partition was only profiled.
    pub reason: Option<String>,
    pub algorithm: Algorithm,
    pub k: Option<usize>,
}

struct Ctx<'a> {
    args: &'a DrilldownArgs,
    target: &'a str,
    method: Method,
}

pub fn drilldown(a: &DrilldownArgs) -> CliResult<()> {
    let target = require_target(&a.data)?;
    if a.depth == 0 {
        return Err(CliError::Usage("--depth must be at least 1".into()));
    }
    let mut rec = Recorder::new("drilldown", &a.out.output_dir, a, Some(a.seed), a.out.timing)?;
    rec.input("input", &a.data.input);
    rec.input("schema", &a.data.schema);
    rec.input("labels", &a.labels);
    let d = prepare(&a.data)?;
    let labels = load_aligned_labels(&a.labels, d.row_ids())?;
    write_profile(&mut rec, Path::new(""), &d, &labels, target)?;
    let ctx = Ctx {
        args: a,
        target,
        method: a.method.tuning.method(a.method.algorithm),
    };
    descend(&ctx, &mut rec, PathBuf::new(), &d, &labels, 1)?;
    rec.finish()
}

fn write_profile(rec: &mut Recorder, dir: &Path, d: &MixedDataset, labels: &[usize], target: &str) -> CliResult<()> {
    let p = validation::profile(d, labels, target)?;
    write_text(&rec.output(dir.join("profile.txt"))?, &p.render_table())?;
    write_json(&rec.output(dir.join("profile.json"))?, &p)
}

fn descend(ctx: &Ctx, rec: &mut Recorder, dir: PathBuf, d: &MixedDataset, labels: &[usize], level: usize) -> CliResult<()> {
    if level >= ctx.args.depth {
        return Ok(());
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    for (c, rows) in groups {
        let sub = d.select_rows(&rows);
        let sub_dir = dir.join(format!("cluster_{c}"));
        let mut node = NodeSummary {
            cluster: c,
            level: level + 1,
            rows: rows.len(),
            reclustered: false,
            reason: None,
            algorithm: ctx.method.algorithm(),
            k: None,
        };
        if rows.len() < ctx.args.min_rows {
            node.reason = Some(format!("fewer than {} rows", ctx.args.min_rows));
        } else {
            match recluster(ctx, rec, &sub_dir, &sub)? {
                Ok((k, sub_labels)) => {
                    node.reclustered = true;
                    node.k = Some(k);
                    write_json(&rec.output(sub_dir.join("node.json"))?, &node)?;
                    descend(ctx, rec, sub_dir, &sub, &sub_labels, level + 1)?;
                    continue;
                }
                Err(reason) => node.reason = Some(reason),
            }
        }
        info!("{}: profiled only ({})", sub_dir.display(), node.reason.as_deref().unwrap_or(""));
        write_profile(rec, &sub_dir, &sub, &vec![c; rows.len()], ctx.target)?;
        write_json(&rec.output(sub_dir.join("node.json"))?, &node)?;
    }
    Ok(())
}

fn skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateData
            | Error::InvalidConfig(_)
            | Error::KLessThanTwo
            | Error::EmptyCluster(_)
            | Error::SampleTooSmall { .. }
            | Error::KTooLarge { .. }
    )
}

/// `Ok(Err(reason))` when the partition cannot support another clustering.
fn recluster(ctx: &Ctx, rec: &mut Recorder, dir: &Path, d: &MixedDataset) -> CliResult<Result<(usize, Vec<usize>), String>> {
    match recluster_inner(ctx, rec, dir, d) {
        Ok(v) => Ok(Ok(v)),
        Err(CliError::Core(e)) if skippable(&e) => {
            warn!("{}: {e}", dir.display());
            Ok(Err(format!("{}: {e}", e.class())))
        }
        Err(e) => Err(e),
    }
}

fn recluster_inner(ctx: &Ctx, rec: &mut Recorder, dir: &Path, d: &MixedDataset) -> CliResult<(usize, Vec<usize>)> {
    let a = ctx.args;
    let cfg = HomalsConfig {
        r: a.r,
        seed: a.seed,
        ..HomalsConfig::default()
    };
    let sol = fit_into(rec, dir, d, &cfg)?;
    let e = embedding::embed(d, &sol.quantifications, EmbedOptions::default())?;
    let k = match a.k {
        Some(k) => k,
        None => {
            let ks: Vec<usize> = a.k_range.values().into_iter().filter(|&k| k < d.n_rows()).collect();
            let report = sweep_k(e.matrix.view(), &ctx.method, &ks, IndexKind::Chi, None, a.seed)?;
            write_text(&rec.output(dir.join("report.txt"))?, &report.render_table())?;
            write_json(&rec.output(dir.join("report.json"))?, &report)?;
            report
                .best(ctx.method.algorithm(), IndexKind::Chi)
                .expect("non-empty sweep has a best k")
        }
    };
    let res = clustering::cluster(e.matrix.view(), &ctx.method, k, a.seed.wrapping_add(k as u64))?;
    write_labels(rec.output(dir.join("labels.csv"))?, d.row_ids(), &res.labels)?;
    write_profile(rec, dir, d, &res.labels, ctx.target)?;
    info!("{}: k = {k}", dir.display());
    Ok((k, res.labels))
}
