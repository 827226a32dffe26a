//! File formats: data CSV, group maps, GMT gene sets, benchmark configs and reports.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::glm::Misclassification;
use crate::model::GroupStructure;
use crate::simbench::SimReport;

/// Full round-trip precision (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A numeric table split into a design and a response column.
#[derive(Debug, Clone)]
pub struct DataTable {
    pub names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub response: String,
}

/// Reads a headed CSV of numbers; `response` names the column used as `y`.
pub fn read_data_csv(path: &Path, response: &str) -> Result<DataTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut seen = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        if h.is_empty() {
            return input(format!("{}: column {} has an empty name", path.display(), i + 1));
        }
        if seen.insert(h.as_str(), i).is_some() {
            return input(format!("{}: duplicate column '{h}'", path.display()));
        }
    }
    let yi = *seen
        .get(response)
        .ok_or_else(|| Error::Input(format!("{}: response column '{response}' not found", path.display())))?;

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::Input(format!("{}: column '{}' row {}: '{field}' is not a number", path.display(), header[c], r + 1))
            })?;
            if c == yi {
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
        rows += 1;
    }
    let p = header.len() - 1;
    let x = Array2::from_shape_vec((rows, p), xs).map_err(|e| Error::Dimension(e.to_string()))?;
    let names = header.iter().enumerate().filter(|(i, _)| *i != yi).map(|(_, h)| h.clone()).collect();
    Ok(DataTable { names, x, y: Array1::from(ys), response: response.to_string() })
}

fn name_index(names: &[String]) -> HashMap<&str, usize> {
    names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
}

/// Group map from a two-column CSV (`variable,group`) or, for `.json` files, a
/// list of lists of variable names or 0-based column indices.
pub fn read_group_map(path: &Path, names: &[String]) -> Result<GroupStructure> {
    let is_json = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let v: Vec<Vec<serde_json::Value>> = serde_json::from_str(&fs::read_to_string(path)?)?;
        return group_map_from_json(&v, names);
    }
    let index = name_index(names);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut order: Vec<String> = Vec::new();
    let mut members: HashMap<String, Vec<usize>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != 2 {
            return input(format!("{}: expected 2 columns (variable, group), got {}", path.display(), rec.len()));
        }
        let var = &rec[0];
        let j = *index
            .get(var)
            .ok_or_else(|| Error::Input(format!("{}: unknown variable '{var}'", path.display())))?;
        let gid = rec[1].to_string();
        if !members.contains_key(&gid) {
            order.push(gid.clone());
        }
        members.entry(gid).or_default().push(j);
    }
    let groups = order.iter().map(|g| members[g].clone()).collect();
    with_named_errors(GroupStructure::with_labels(groups, order, names.len()), names)
}

pub fn group_map_from_json(lists: &[Vec<serde_json::Value>], names: &[String]) -> Result<GroupStructure> {
    let index = name_index(names);
    let mut groups = Vec::with_capacity(lists.len());
    for (k, list) in lists.iter().enumerate() {
        let mut g = Vec::with_capacity(list.len());
        for v in list {
            let j = match v {
                serde_json::Value::String(s) => *index
                    .get(s.as_str())
                    .ok_or_else(|| Error::Input(format!("group {}: unknown variable '{s}'", k + 1)))?,
                serde_json::Value::Number(n) => n
                    .as_u64()
                    .map(|u| u as usize)
                    .ok_or_else(|| Error::Input(format!("group {}: '{n}' is not a column index", k + 1)))?,
                other => return input(format!("group {}: unexpected entry {other}", k + 1)),
            };
            g.push(j);
        }
        groups.push(g);
    }
    let labels = (1..=groups.len()).map(|k| k.to_string()).collect();
    with_named_errors(GroupStructure::with_labels(groups, labels, names.len()), names)
}

fn with_named_errors(r: Result<GroupStructure>, names: &[String]) -> Result<GroupStructure> {
    r.map_err(|e| match e {
        Error::UnassignedVariable(j) if j < names.len() => {
            Error::Input(format!("variable '{}' is not assigned to any group", names[j]))
        }
        other => other,
    })
}

/// One gene set: name, description, members.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneSet {
    pub name: String,
    pub description: String,
    pub members: Vec<String>,
}

pub fn parse_gmt(text: &str) -> Result<Vec<GeneSet>> {
    let mut sets = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return input(format!("gmt line {}: need name, description and at least one member", i + 1));
        }
        sets.push(GeneSet {
            name: fields[0].trim().to_string(),
            description: fields[1].trim().to_string(),
            members: fields[2..].iter().map(|m| m.trim().to_string()).filter(|m| !m.is_empty()).collect(),
        });
    }
    Ok(sets)
}

/// Overlapping groups from a GMT file. Members absent from `names` are skipped,
/// and sets left empty are dropped.
pub fn read_gmt(path: &Path, names: &[String]) -> Result<GroupStructure> {
    gmt_groups(&parse_gmt(&fs::read_to_string(path)?)?, names)
}

pub fn gmt_groups(sets: &[GeneSet], names: &[String]) -> Result<GroupStructure> {
    let index = name_index(names);
    let mut groups = Vec::new();
    let mut labels = Vec::new();
    for s in sets {
        let mut g: Vec<usize> = s.members.iter().filter_map(|m| index.get(m.as_str()).copied()).collect();
        g.sort_unstable();
        g.dedup();
        if !g.is_empty() {
            groups.push(g);
            labels.push(s.name.clone());
        }
    }
    with_named_errors(GroupStructure::with_labels(groups, labels, names.len()), names)
}

/// Flat `key = value` file; blank lines and `#` comments ignored.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("config line {}: expected key = value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Per-replication rows of a simulation report.
pub fn write_sim_csv<W: Write>(report: &SimReport, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["rep", "lambda", "validation_error", "mse", "zero_var_pct", "nonzero_var_pct", "selected"])?;
    for r in &report.per_rep {
        let bitmap: String = r.selected.iter().map(|s| if *s { '1' } else { '0' }).collect();
        wtr.write_record([
            r.rep.to_string(),
            r.lambda.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.validation_error),
            fmt_f64(r.mse),
            fmt_f64(r.zero_var_pct),
            fmt_f64(r.nonzero_var_pct),
            bitmap,
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SimSummary<'a, C: Serialize> {
    pub config: &'a C,
    pub case: u32,
    pub method: &'static str,
    pub reps: usize,
    pub completed: usize,
    pub failed: usize,
    pub sigma: f64,
    pub mse: f64,
    pub mse_se: f64,
    pub zero_var_pct: f64,
    pub zero_var_pct_se: f64,
    pub nonzero_var_pct: f64,
    pub nonzero_var_pct_se: f64,
    pub failures: &'a [(usize, String)],
}

pub fn sim_summary<'a, C: Serialize>(report: &'a SimReport, config: &'a C) -> SimSummary<'a, C> {
    SimSummary {
        config,
        case: report.case.number(),
        method: report.method.label(),
        reps: report.reps,
        completed: report.per_rep.len(),
        failed: report.failures.len(),
        sigma: report.sigma,
        mse: report.mse.mean,
        mse_se: report.mse.se,
        zero_var_pct: report.zero_var_pct.mean,
        zero_var_pct_se: report.zero_var_pct.se,
        nonzero_var_pct: report.nonzero_var_pct.mean,
        nonzero_var_pct_se: report.nonzero_var_pct.se,
        failures: &report.failures,
    }
}

pub fn write_misclassification_csv<W: Write>(m: &Misclassification, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["row", "y", "probability", "predicted", "correct"])?;
    for r in &m.rows {
        wtr.write_record([
            r.row.to_string(),
            r.y.to_string(),
            fmt_f64(r.probability),
            r.predicted.to_string(),
            (r.predicted == r.y).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
