//! Whitespace-separated columns for plotting tools such as gnuplot.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

struct Csv<'a> {
    header: Vec<&'a str>,
    rows: Vec<Vec<&'a str>>,
}

impl<'a> Csv<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<&str> = match lines.next() {
            Some(h) => h.split(',').map(str::trim).collect(),
            None => Vec::new(),
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<&str> = line.split(',').map(str::trim).collect();
            if row.len() != header.len() {
                return Err(Error::Csv {
                    path: "input".into(),
                    reason: format!("row {} has {} fields, header has {}", i + 2, row.len(), header.len()),
                });
            }
            rows.push(row);
        }
        Ok(Csv { header, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header.iter().position(|h| *h == name).ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn has(&self, name: &str) -> bool {
        self.header.contains(&name)
    }
}

fn number(field: &str) -> Result<f64> {
    field.parse().map_err(|_| Error::Csv { path: "input".into(), reason: format!("`{field}` is not a number") })
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.12e}")
    }
}

/// Converts an analysis CSV into plot columns with a one-line `#` header.
///
/// * `form_factor.csv` gives `t_end F_1 F_2 …`, one line per loop index
///   (the `t_end` of the first site that has that loop; `NaN` for sites
///   with fewer loops).
/// * `monogamy.csv` gives `t M2 estimated`.
/// * Any other long-format file (`t,measure,value,estimated`) gives `t`
///   followed by one column per measure, in order of first appearance.
/// * `trajectory.csv` and `moment_check.csv` pass their numeric columns
///   through unchanged.
pub fn emit_plot_data(csv: &str) -> Result<String> {
    let table = Csv::parse(csv)?;
    if table.has("form_factor") || table.has("loop_index") {
        return form_factor(&table);
    }
    if table.has("measure") {
        let t = table.column("t")?;
        let m = table.column("measure")?;
        let is_monogamy = table.rows.iter().any(|r| r[m] == "M2") || table.rows.is_empty() && false;
        if is_monogamy {
            return monogamy(&table);
        }
        let v = table.column("value")?;
        return long_format(&table, t, m, v);
    }
    if table.header.is_empty() {
        return Err(Error::MissingColumn("t".into()));
    }
    table.column("t")?;
    passthrough(&table)
}

fn form_factor(table: &Csv) -> Result<String> {
    let site = table.column("site")?;
    let index = table.column("loop_index")?;
    let t_end = table.column("t_end")?;
    let value = table.column("form_factor")?;
    let mut sites: Vec<usize> = Vec::new();
    // loop index -> (t_end, site -> F)
    let mut grid: BTreeMap<usize, (f64, BTreeMap<usize, f64>)> = BTreeMap::new();
    for row in &table.rows {
        let s: usize = row[site]
            .parse()
            .map_err(|_| Error::Csv { path: "input".into(), reason: format!("bad site `{}`", row[site]) })?;
        let i: usize = row[index]
            .parse()
            .map_err(|_| Error::Csv { path: "input".into(), reason: format!("bad loop index `{}`", row[index]) })?;
        if !sites.contains(&s) {
            sites.push(s);
        }
        let entry = grid.entry(i).or_insert((number(row[t_end])?, BTreeMap::new()));
        entry.1.insert(s, number(row[value])?);
    }
    sites.sort_unstable();
    if sites.is_empty() {
        sites = vec![1, 2, 3];
    }
    let mut out = String::from("# t_end");
    for s in &sites {
        let _ = write!(out, " F_{s}");
    }
    out.push('\n');
    for (t, values) in grid.values() {
        out.push_str(&fmt(*t));
        for s in &sites {
            out.push(' ');
            out.push_str(&fmt(values.get(s).copied().unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    Ok(out)
}

fn monogamy(table: &Csv) -> Result<String> {
    let t = table.column("t")?;
    let m = table.column("measure")?;
    let v = table.column("value")?;
    let e = table.column("estimated")?;
    let mut out = String::from("# t M2 estimated\n");
    for row in table.rows.iter().filter(|r| r[m] == "M2") {
        let _ = writeln!(out, "{} {} {}", fmt(number(row[t])?), fmt(number(row[v])?), row[e]);
    }
    Ok(out)
}

fn long_format(table: &Csv, t: usize, m: usize, v: usize) -> Result<String> {
    let mut measures: Vec<&str> = Vec::new();
    let mut times: Vec<&str> = Vec::new();
    let mut values: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for row in &table.rows {
        if !measures.contains(&row[m]) {
            measures.push(row[m]);
        }
        if times.last() != Some(&row[t]) && !times.contains(&row[t]) {
            times.push(row[t]);
        }
        values.insert((row[t], row[m]), number(row[v])?);
    }
    let mut out = String::from("# t");
    for name in &measures {
        let _ = write!(out, " {name}");
    }
    out.push('\n');
    for time in &times {
        out.push_str(&fmt(number(time)?));
        for name in &measures {
            out.push(' ');
            out.push_str(&fmt(values.get(&(*time, *name)).copied().unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    Ok(out)
}

fn passthrough(table: &Csv) -> Result<String> {
    let mut out = format!("# {}\n", table.header.join(" "));
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(|f| number(f).map(fmt)).collect::<Result<_>>()?;
        let _ = writeln!(out, "{}", fields.join(" "));
    }
    Ok(out)
}
