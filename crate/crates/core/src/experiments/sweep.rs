use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domains::{generate, DomainSpec, Family};
use super::patterns::rhs_batch;
use crate::divsolve::{condition_report, GlobalSolver, Method, SolverOptions, WhitneySolver};
use crate::error::{Error, Result};
use crate::grid::{distance_transform, Ball, DistanceField, GridDomain};
use crate::john::{component_diameter_test, content_thickness, default_samples, john_constant, JohnOptions};
use crate::poincare::{hardy_constant, poincare_constant, validate_triple, EstimateOptions, Mode};
use crate::whitney::{build_tree, whitney_decompose};

pub const SCHEMA_VERSION: u32 = 1;

fn default_batch() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum MetricSpec {
    John,
    Poincare { p: f64, q: f64 },
    Hardy { p: f64 },
    DivRatios {
        p: f64,
        #[serde(default = "default_batch")]
        batch: usize,
    },
    Components { w: [f64; 2], d: f64, b0: Ball },
    Thickness { lambda: f64, w: [f64; 2], r: f64 },
}

impl MetricSpec {
    pub fn label(&self) -> String {
        match self {
            MetricSpec::John => "john".into(),
            MetricSpec::Poincare { p, q } => format!("poincare(p={p},q={q})"),
            MetricSpec::Hardy { p } => format!("hardy(p={p})"),
            MetricSpec::DivRatios { p, .. } => format!("div_ratios(p={p})"),
            MetricSpec::Components { w, d, .. } => format!("components(w={},{},d={d})", w[0], w[1]),
            MetricSpec::Thickness { lambda, w, r } => format!("thickness(lambda={lambda},w={},{},r={r})", w[0], w[1]),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub domains: Vec<Family>,
    #[serde(default)]
    pub resolutions: Vec<f64>,
    #[serde(default)]
    pub metrics: Vec<MetricSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub family: String,
    pub params: String,
    pub h: f64,
    pub metric: String,
    pub value: Option<f64>,
    pub kind: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub rows: Vec<Row>,
}

impl SweepResult {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn value(&self, family: &str, params: &str, h: f64, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.family == family && r.params == params && r.h == h && r.metric == metric)
            .and_then(|r| r.value)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["family", "params", "h", "metric", "value", "kind", "seed"])?;
        for r in &self.rows {
            let value = r.value.map(|v| v.to_string()).unwrap_or_default();
            out.write_record([&r.family, &r.params, &r.h.to_string(), &r.metric, &value, &r.kind, &r.seed.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// One journal line: the rows of a finished (domain, resolution, metric) cell.
#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    cell: [usize; 3],
    rows: Vec<Row>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    config: SweepConfig,
}

const JOURNAL: &str = "journal.jsonl";

/// Runs every (domain, resolution, metric) cell. With `out_dir`, each finished
/// cell is appended to `journal.jsonl` before the next starts, cells already
/// in the journal are skipped, and `results.csv` / `results.json` are written
/// at the end. Cell failures become error rows.
pub fn run_sweep(config: &SweepConfig, out_dir: Option<&Path>) -> Result<SweepResult> {
    let mut done: BTreeMap<[usize; 3], Vec<Row>> = BTreeMap::new();
    let journal = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let (file, entries) = open_journal(&dir.join(JOURNAL), config)?;
            done.extend(entries.into_iter().map(|e| (e.cell, e.rows)));
            Some(Mutex::new(file))
        }
        None => None,
    };

    let mut groups = Vec::new();
    for (i, family) in config.domains.iter().enumerate() {
        for (j, &h) in config.resolutions.iter().enumerate() {
            let pending: Vec<usize> = (0..config.metrics.len()).filter(|&k| !done.contains_key(&[i, j, k])).collect();
            if !pending.is_empty() {
                groups.push((i, j, DomainSpec::new(family.clone(), h), pending));
            }
        }
    }

    let fresh: Vec<Result<Vec<Entry>>> = groups
        .par_iter()
        .map(|(i, j, spec, pending)| {
            let ctx = generate(spec).map(|dom| {
                let rho = distance_transform(&dom);
                (dom, rho)
            });
            let mut entries = Vec::new();
            for &k in pending {
                let metric = &config.metrics[k];
                let rows = match &ctx {
                    Ok((dom, rho)) => evaluate(dom, rho, spec, metric, config.seed)
                        .unwrap_or_else(|e| vec![error_row(spec, metric, config.seed, &e)]),
                    Err(e) => vec![error_row(spec, metric, config.seed, e)],
                };
                let entry = Entry { cell: [*i, *j, k], rows };
                if let Some(file) = &journal {
                    let mut line = serde_json::to_string(&entry)?;
                    line.push('\n');
                    let mut f = file.lock().unwrap_or_else(|p| p.into_inner());
                    f.write_all(line.as_bytes())?;
                    f.sync_data()?;
                }
                entries.push(entry);
            }
            Ok(entries)
        })
        .collect();
    for entries in fresh {
        done.extend(entries?.into_iter().map(|e| (e.cell, e.rows)));
    }

    let result = SweepResult { schema_version: SCHEMA_VERSION, rows: done.into_values().flatten().collect() };
    if let Some(dir) = out_dir {
        write_atomically(&dir.join("results.csv"), |w| result.write_csv(w))?;
        write_atomically(&dir.join("results.json"), |w| Ok(serde_json::to_writer_pretty(w, &result)?))?;
    }
    Ok(result)
}

/// Opens the journal for appending. A torn last line (a crash mid-write) is cut
/// off; a journal written for another config is refused.
fn open_journal(path: &Path, config: &SweepConfig) -> Result<(File, Vec<Entry>)> {
    let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
    let mut entries = Vec::new();
    let mut good = 0u64;
    let mut header_seen = false;
    {
        let mut reader = BufReader::new(&file);
        let mut line = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 || !line.ends_with('\n') {
                break;
            }
            if !header_seen {
                let header: Header = serde_json::from_str(&line)?;
                if header.config != *config || header.schema_version != SCHEMA_VERSION {
                    return Err(Error::InvalidParameter(format!(
                        "{} was written for a different sweep configuration",
                        path.display()
                    )));
                }
                header_seen = true;
            } else {
                match serde_json::from_str::<Entry>(&line) {
                    Ok(e) => entries.push(e),
                    Err(_) => break,
                }
            }
            good += line.len() as u64;
        }
    }
    file.set_len(good)?;
    file.seek(SeekFrom::End(0))?;
    if !header_seen {
        let mut line = serde_json::to_string(&Header { schema_version: SCHEMA_VERSION, config: config.clone() })?;
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
    }
    Ok((file, entries))
}

fn write_atomically(path: &Path, body: impl FnOnce(&mut File) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp)?;
    body(&mut f)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn error_row(spec: &DomainSpec, metric: &MetricSpec, seed: u64, e: &Error) -> Row {
    Row {
        family: spec.family.name().into(),
        params: spec.family.params_label(),
        h: spec.h,
        metric: metric.label(),
        value: None,
        kind: "error".into(),
        seed,
        error: Some(e.to_string()),
    }
}

fn evaluate(
    dom: &GridDomain,
    rho: &DistanceField,
    spec: &DomainSpec,
    metric: &MetricSpec,
    seed: u64,
) -> Result<Vec<Row>> {
    let label = metric.label();
    let row = |name: &str, value: f64, kind: &str| Row {
        family: spec.family.name().into(),
        params: spec.family.params_label(),
        h: spec.h,
        metric: if name.is_empty() { label.clone() } else { format!("{label}.{name}") },
        value: Some(value),
        kind: kind.into(),
        seed,
        error: None,
    };
    let estimate_opts = EstimateOptions { seed, ..Default::default() };
    let kind_of = |e: &crate::poincare::ConstantEstimate| {
        let k = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        if e.converged { k } else { format!("{k}_unconverged") }
    };
    Ok(match metric {
        MetricSpec::John => {
            let opts = JohnOptions::default();
            let samples = default_samples(dom, rho, &opts);
            let a = john_constant(dom, rho, dom.center(rho.argmax()), &samples, &opts)?;
            vec![row("c_hat", a.c_hat, "estimate")]
        }
        MetricSpec::Poincare { p, q } => {
            let triple = validate_triple(*p, *q, 2)?;
            let e = poincare_constant(dom, rho, triple.into(), &Mode::MeanZero, &estimate_opts)?;
            vec![row("", e.value, &kind_of(&e))]
        }
        MetricSpec::Hardy { p } => {
            let e = hardy_constant(dom, rho, *p, &estimate_opts)?;
            vec![row("", e.value, &kind_of(&e))]
        }
        MetricSpec::DivRatios { p, batch } => {
            let fs = rhs_batch(dom, rho, *batch, seed);
            let dec = whitney_decompose(dom, rho)?;
            let tree = build_tree(dec, dom.center(rho.argmax()))?;
            let ws = WhitneySolver::new(dom, tree, SolverOptions::default())?;
            let gs = GlobalSolver::new(dom, SolverOptions::default())?;
            let rep = condition_report(dom, rho, &fs, *p, Some(&ws), Some(&gs))?;
            let kind = if *p == 2.0 { "estimate" } else { "estimate_p2_minimizer" };
            let mut rows = Vec::new();
            for (m, name) in [(Method::WhitneyConstructive, "whitney"), (Method::GlobalBaseline, "global")] {
                rows.push(row(&format!("{name}.w1p"), rep.max_w1p(m), kind));
                rows.push(row(&format!("{name}.weighted"), rep.max_weighted(m), kind));
                rows.push(row(&format!("{name}.v_over_rho"), rep.max_v_over_rho(m), kind));
            }
            rows.push(row("max_residual", rep.max_residual(), "exact"));
            rows
        }
        MetricSpec::Components { w, d, b0 } => {
            let comps = component_diameter_test(dom, b0, *w, *d)?;
            let max = comps.iter().map(|c| c.ratio).fold(0.0, f64::max);
            vec![row("max_ratio", max, "exact"), row("count", comps.len() as f64, "exact")]
        }
        MetricSpec::Thickness { lambda, w, r } => {
            let t = content_thickness(dom, *lambda, *w, *r)?;
            vec![row("ratio", t.ratio, "dyadic"), row("certified_ratio", t.certified_ratio, "lower_bound_certified")]
        }
    })
}
