//! Deterministic CSV and aligned-text rendering of results.
//!
//! Scores print with 5 decimals, targets with 2.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::analysis::{DominanceReport, ProductivityClass, ProductivityReport};
use crate::dataset::Dataset;
use crate::kam::KamResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Table,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing to report")]
    Empty,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Header plus string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Table => self.to_pretty(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        // Writing to memory cannot fail.
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_pretty(&self) -> String {
        let cols = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            let parts: Vec<String> = cells
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_owned()
        };
        let mut out = line(&self.header);
        out.push('\n');
        let rule: Vec<String> = (0..cols).map(|i| "-".repeat(widths[i])).collect();
        out.push_str(&rule.join("  "));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Fixed-point formatting without a `-0.00` artefact.
pub fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_owned()
    } else {
        s
    }
}

pub fn score(v: f64) -> String {
    fixed(v, 5)
}

pub fn target(v: f64) -> String {
    fixed(v, 2)
}

fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

fn ensure_nonempty<T>(items: &[T]) -> Result<(), ReportError> {
    if items.is_empty() {
        Err(ReportError::Empty)
    } else {
        Ok(())
    }
}

/// `dmu,score,t_star,s_in_1..m,s_out_1..p,target_1..m+p`.
pub fn results_table(ds: &Dataset, results: &[KamResult]) -> Result<Table, ReportError> {
    ensure_nonempty(results)?;
    let (m, p) = (ds.num_inputs(), ds.num_outputs());
    let mut header = vec!["dmu".to_owned(), "score".into(), "t_star".into()];
    header.extend((1..=m).map(|j| format!("s_in_{j}")));
    header.extend((1..=p).map(|k| format!("s_out_{k}")));
    header.extend((1..=m + p).map(|q| format!("target_{q}")));
    let mut t = Table::new(header);
    for r in results {
        let mut row = vec![ds.firms()[r.firm].clone(), score(r.score), sci(r.t_star)];
        row.extend(r.slack_in.iter().chain(&r.slack_out).map(|&v| fixed(v, 6)));
        row.extend(r.target_in.iter().chain(&r.target_out).map(|&v| target(v)));
        t.rows.push(row);
    }
    Ok(t)
}

/// `dmu,<factor names>` with 2-decimal targets.
pub fn targets_table(ds: &Dataset, results: &[KamResult]) -> Result<Table, ReportError> {
    ensure_nonempty(results)?;
    let mut header = vec!["dmu".to_owned()];
    header.extend(ds.factors().map(|f| f.name.clone()));
    let mut t = Table::new(header);
    for r in results {
        let mut row = vec![ds.firms()[r.firm].clone()];
        row.extend(r.target_in.iter().chain(&r.target_out).map(|&v| target(v)));
        t.rows.push(row);
    }
    Ok(t)
}

/// `dmu,tau,w_in_1..m,w_out_1..p`.
pub fn dual_table(ds: &Dataset, results: &[KamResult]) -> Result<Table, ReportError> {
    ensure_nonempty(results)?;
    let mut header = vec!["dmu".to_owned(), "tau".into()];
    header.extend((1..=ds.num_inputs()).map(|j| format!("w_in_{j}")));
    header.extend((1..=ds.num_outputs()).map(|k| format!("w_out_{k}")));
    let mut t = Table::new(header);
    for r in results {
        let mut row = vec![ds.firms()[r.firm].clone(), score(r.dual.tau)];
        row.extend(r.dual.w_in.iter().chain(&r.dual.w_out).map(|&v| sci(v)));
        t.rows.push(row);
    }
    Ok(t)
}

/// One row per epsilon, one column per firm.
pub fn score_grid(ds: &Dataset, grid: &[(f64, Vec<f64>)]) -> Result<Table, ReportError> {
    ensure_nonempty(grid)?;
    let mut header = vec!["epsilon".to_owned()];
    header.extend(ds.firms().iter().cloned());
    let mut t = Table::new(header);
    for (eps, scores) in grid {
        let mut row = vec![eps.to_string()];
        row.extend(scores.iter().map(|&s| score(s)));
        t.rows.push(row);
    }
    Ok(t)
}

pub fn ranking_table(
    ds: &Dataset,
    results: &[KamResult],
    order: &[usize],
) -> Result<Table, ReportError> {
    ensure_nonempty(order)?;
    let mut t = Table::new(vec!["rank".into(), "dmu".into(), "score".into()]);
    for (pos, &firm) in order.iter().enumerate() {
        let s = results
            .iter()
            .find(|r| r.firm == firm)
            .map_or(f64::NAN, |r| r.score);
        t.rows.push(vec![
            (pos + 1).to_string(),
            ds.firms()[firm].clone(),
            score(s),
        ]);
    }
    Ok(t)
}

pub fn dominance_table(ds: &Dataset, rep: &DominanceReport) -> Result<Table, ReportError> {
    ensure_nonempty(&rep.ordering)?;
    let mut t = Table::new(vec![
        "rank".into(),
        "dmu".into(),
        "ratio".into(),
        "tie_group".into(),
    ]);
    let mut pos = 0;
    for (g, group) in rep.ties.iter().enumerate() {
        for &i in group {
            pos += 1;
            t.rows.push(vec![
                pos.to_string(),
                ds.firms()[i].clone(),
                format!("{:.9e}", rep.firm_ratios[i]),
                (g + 1).to_string(),
            ]);
        }
    }
    Ok(t)
}

fn class_name(c: ProductivityClass) -> &'static str {
    match c {
        ProductivityClass::Productive => "productive",
        ProductivityClass::NonProductive => "non-productive",
    }
}

pub fn productivity_table(ds: &Dataset, rep: &ProductivityReport) -> Result<Table, ReportError> {
    ensure_nonempty(&rep.classes)?;
    let mut t = Table::new(vec![
        "dmu".into(),
        "rel_efficiency".into(),
        "rel_effectiveness".into(),
        "effective".into(),
        "class".into(),
    ]);
    for i in 0..rep.classes.len() {
        t.rows.push(vec![
            ds.firms()[i].clone(),
            score(rep.rel_efficiency[i]),
            score(rep.rel_effectiveness[i]),
            rep.effective[i].to_string(),
            class_name(rep.classes[i]).into(),
        ]);
    }
    Ok(t)
}

/// Scatter data for external plotting.
pub fn productivity_scatter(rep: &ProductivityReport) -> Result<Table, ReportError> {
    ensure_nonempty(&rep.classes)?;
    let mut t = Table::new(vec![
        "rel_efficiency".into(),
        "rel_effectiveness".into(),
        "class".into(),
    ]);
    for i in 0..rep.classes.len() {
        t.rows.push(vec![
            score(rep.rel_efficiency[i]),
            score(rep.rel_effectiveness[i]),
            class_name(rep.classes[i]).into(),
        ]);
    }
    Ok(t)
}

/// Write to `path`, or stdout when `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), ReportError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
