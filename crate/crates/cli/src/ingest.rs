//! CSV ingestion for one or two samples.

use std::path::Path;

use tbp_core::Sample;

use crate::error::{CliError, CliResult};

/// Normal-consistency constant for the MAD.
pub const MAD_CONSTANT: f64 = 1.4826;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnSpec {
    Index(usize),
    Name(String),
}

impl ColumnSpec {
    pub fn parse(s: &str) -> Self {
        match s.trim().parse::<usize>() {
            Ok(i) => ColumnSpec::Index(i),
            Err(_) => ColumnSpec::Name(s.trim().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub x: Sample<f64>,
    pub y: Option<Sample<f64>>,
    /// Blank or NaN rows skipped.
    pub dropped: usize,
    pub labels: Option<(String, String)>,
}

fn is_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na")
}

fn resolve(spec: &ColumnSpec, header: Option<&csv::StringRecord>) -> CliResult<usize> {
    match spec {
        ColumnSpec::Index(i) => Ok(*i),
        ColumnSpec::Name(name) => header
            .and_then(|h| h.iter().position(|c| c.trim() == name))
            .ok_or_else(|| CliError::Data(format!("column '{name}' not found in header"))),
    }
}

struct Rows {
    records: Vec<(usize, csv::StringRecord)>,
    header: Option<csv::StringRecord>,
}

fn read_rows(text: &str, value_col: &ColumnSpec) -> CliResult<Rows> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (i, r) in rdr.records().enumerate() {
        let r = r.map_err(|e| CliError::Data(format!("csv row {}: {e}", i + 1)))?;
        let line = r.position().map_or(i + 1, |p| p.line() as usize);
        records.push((line, r));
    }
    let mut header = None;
    if let Some((_, first)) = records.first() {
        let probe = match value_col {
            ColumnSpec::Name(_) => true,
            ColumnSpec::Index(i) => first
                .get(*i)
                .is_some_and(|c| !is_missing(c) && c.parse::<f64>().is_err()),
        };
        if probe {
            header = Some(records.remove(0).1);
        }
    }
    Ok(Rows { records, header })
}

fn parse_value(line: usize, cell: Option<&str>) -> CliResult<Option<f64>> {
    let Some(c) = cell else {
        return Ok(None);
    };
    if is_missing(c) {
        return Ok(None);
    }
    c.parse::<f64>()
        .map(Some)
        .map_err(|_| CliError::Data(format!("line {line}: cannot parse '{c}' as a number")))
}

fn sample(values: Vec<f64>, what: &str) -> CliResult<Sample<f64>> {
    if values.is_empty() {
        return Err(CliError::Data(format!("{what} is empty")));
    }
    if values.iter().any(|v| v.is_infinite()) {
        return Err(CliError::Data(format!("{what} contains infinite values")));
    }
    Sample::new(values).map_err(|e| CliError::Data(e.to_string()))
}

/// Values of one column; missing cells are dropped and counted.
pub fn parse_column(text: &str, col: &ColumnSpec) -> CliResult<(Vec<f64>, usize)> {
    let rows = read_rows(text, col)?;
    let idx = resolve(col, rows.header.as_ref())?;
    let mut out = Vec::new();
    let mut dropped = 0;
    for (line, r) in &rows.records {
        match parse_value(*line, r.get(idx))? {
            Some(v) => out.push(v),
            None => dropped += 1,
        }
    }
    Ok((out, dropped))
}

/// First group, second group, dropped rows, group labels.
pub type Grouped = (Vec<f64>, Vec<f64>, usize, (String, String));

/// Splits a value column by a two-level group column; groups in order
/// of first appearance unless `order` names them.
pub fn parse_grouped(
    text: &str,
    value: &ColumnSpec,
    group: &ColumnSpec,
    order: Option<(&str, &str)>,
) -> CliResult<Grouped> {
    let rows = read_rows(text, value)?;
    let vi = resolve(value, rows.header.as_ref())?;
    let gi = resolve(group, rows.header.as_ref())?;
    let mut labels: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    for (line, r) in &rows.records {
        let Some(v) = parse_value(*line, r.get(vi))? else {
            dropped += 1;
            continue;
        };
        let g = r
            .get(gi)
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| CliError::Data(format!("line {line}: missing group label")))?;
        match labels.iter().position(|l| *l == g) {
            Some(k) => groups[k].push(v),
            None => {
                labels.push(g);
                groups.push(vec![v]);
            }
        }
    }
    if labels.len() != 2 {
        return Err(CliError::Data(format!(
            "expected exactly two groups, found {}",
            labels.len()
        )));
    }
    let (a, b) = match order {
        Some((gx, gy)) => {
            let find = |name: &str| {
                labels
                    .iter()
                    .position(|l| l == name)
                    .ok_or_else(|| CliError::Data(format!("group '{name}' not present")))
            };
            (find(gx)?, find(gy)?)
        }
        None => (0, 1),
    };
    Ok((
        groups[a].clone(),
        groups[b].clone(),
        dropped,
        (labels[a].clone(), labels[b].clone()),
    ))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// 1.4826 · median |x − med|.
pub fn mad_scale(v: &[f64]) -> f64 {
    let m = median(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - m).abs()).collect();
    MAD_CONSTANT * median(&dev)
}

/// Divides by the MAD scale; the location is kept.
pub fn mad_normalize(v: &mut [f64]) -> CliResult<()> {
    let s = mad_scale(v);
    if !(s > 0.0) {
        return Err(CliError::Data("MAD is zero; cannot normalize".into()));
    }
    for x in v.iter_mut() {
        *x /= s;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct IngestOptions {
    pub column: Option<String>,
    pub group_col: Option<String>,
    pub group_order: Option<(String, String)>,
    pub mad_normalize: bool,
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

pub fn ingest(input: &Path, input2: Option<&Path>, opts: &IngestOptions) -> CliResult<Ingested> {
    let col = ColumnSpec::parse(opts.column.as_deref().unwrap_or("0"));
    let text = read(input)?;
    let (mut x, mut y, dropped, labels) = if let Some(g) = &opts.group_col {
        if input2.is_some() {
            return Err(CliError::Config(
                "use either a group column or a second input".into(),
            ));
        }
        let order = opts
            .group_order
            .as_ref()
            .map(|(a, b)| (a.as_str(), b.as_str()));
        let (x, y, d, l) = parse_grouped(&text, &col, &ColumnSpec::parse(g), order)?;
        (x, Some(y), d, Some(l))
    } else {
        let (x, d1) = parse_column(&text, &col)?;
        match input2 {
            Some(p) => {
                let (y, d2) = parse_column(&read(p)?, &col)?;
                (x, Some(y), d1 + d2, None)
            }
            None => (x, None, d1, None),
        }
    };
    if opts.mad_normalize {
        mad_normalize(&mut x)?;
        if let Some(y) = y.as_mut() {
            mad_normalize(y)?;
        }
    }
    Ok(Ingested {
        x: sample(x, "first sample")?,
        y: y.map(|v| sample(v, "second sample")).transpose()?,
        dropped,
        labels,
    })
}
