use std::fs;
use std::io::Write;
use std::path::PathBuf;

use cancellab::io::fmt_f64;

use crate::commands::{Summary, MANIFEST, SUMMARY};

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub dir: PathBuf,
    /// `ok`, `missing_manifest` or `missing_summary`.
    pub status: &'static str,
    pub summary: Option<Summary>,
}

/// One row per directory; unreadable runs are flagged, never fatal.
pub fn collect(dirs: &[PathBuf]) -> Vec<Row> {
    let mut rows: Vec<Row> = dirs
        .iter()
        .map(|dir| {
            if !dir.join(MANIFEST).is_file() {
                return Row {
                    dir: dir.clone(),
                    status: "missing_manifest",
                    summary: None,
                };
            }
            let summary = fs::read_to_string(dir.join(SUMMARY))
                .ok()
                .and_then(|t| serde_json::from_str::<Summary>(&t).ok());
            Row {
                dir: dir.clone(),
                status: if summary.is_some() { "ok" } else { "missing_summary" },
                summary,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let key = |r: &Row| {
            let s = r.summary.as_ref();
            (
                s.map_or(String::new(), |s| s.command.clone()),
                s.and_then(|s| s.epsilon).unwrap_or(f64::INFINITY),
            )
        };
        let (ca, ea) = key(a);
        let (cb, eb) = key(b);
        // flagged rows go last
        (a.summary.is_none(), ca)
            .cmp(&(b.summary.is_none(), cb))
            .then(ea.total_cmp(&eb))
            .then(a.dir.cmp(&b.dir))
    });
    rows
}

pub fn write_csv<W: Write>(w: W, rows: &[Row]) -> cancellab::Result<()> {
    let mut c = csv::Writer::from_writer(w);
    let err = |e: csv::Error| cancellab::Error::Parse(e.to_string());
    c.write_record(["dir", "command", "family", "criterion", "key", "value", "epsilon", "details", "status"])
        .map_err(err)?;
    for r in rows {
        let dir = r.dir.display().to_string();
        let rec = match &r.summary {
            Some(s) => {
                let details = s
                    .extra
                    .iter()
                    .map(|(k, v)| format!("{k}={}", fmt_f64(*v)))
                    .collect::<Vec<_>>()
                    .join(";");
                [
                    dir,
                    s.command.clone(),
                    s.family.clone(),
                    s.criterion.clone(),
                    s.key.clone(),
                    fmt_f64(s.value),
                    s.epsilon.map(fmt_f64).unwrap_or_default(),
                    details,
                    r.status.to_string(),
                ]
            }
            None => [
                dir,
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                r.status.to_string(),
            ],
        };
        c.write_record(rec).map_err(err)?;
    }
    c.flush()?;
    Ok(())
}
