//! Report model and renderers.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    Table {
        columns: Vec<String>,
        rows: Vec<Vec<Value>>,
    },
    KeyValue {
        entries: Vec<(String, Value)>,
    },
    Text {
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub title: String,
    #[serde(flatten)]
    pub body: Body,
}

impl Section {
    pub fn table<C: Into<String>>(title: &str, columns: impl IntoIterator<Item = C>, rows: Vec<Vec<Value>>) -> Self {
        Self {
            title: title.to_owned(),
            body: Body::Table {
                columns: columns.into_iter().map(Into::into).collect(),
                rows,
            },
        }
    }

    pub fn key_value(title: &str, entries: Vec<(&str, Value)>) -> Self {
        Self {
            title: title.to_owned(),
            body: Body::KeyValue {
                entries: entries.into_iter().map(|(k, v)| (k.to_owned(), v)).collect(),
            },
        }
    }

    pub fn text(title: &str, text: impl Into<String>) -> Self {
        Self {
            title: title.to_owned(),
            body: Body::Text { text: text.into() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputHash {
    pub role: String,
    pub source: String,
    pub sha256: String,
}

impl InputHash {
    pub fn of_bytes(role: &str, source: &str, bytes: &[u8]) -> Self {
        Self {
            role: role.to_owned(),
            source: source.to_owned(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }

    pub fn of_path(role: &str, path: &Path, bytes: &[u8]) -> Self {
        Self::of_bytes(role, &path.display().to_string(), bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub inputs: Vec<InputHash>,
    pub seed: u64,
    /// "exact" when every subset was enumerated, "sampled" otherwise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
}

impl Provenance {
    pub fn new(seed: u64) -> Self {
        Self {
            tool: "lbaudit",
            version: env!("CARGO_PKG_VERSION"),
            inputs: Vec::new(),
            seed,
            mode: None,
            generated_unix: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub sections: Vec<Section>,
    /// Full machine-readable results for the command.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(command: &str, provenance: Provenance) -> Self {
        Self {
            command: command.to_owned(),
            sections: Vec::new(),
            data: Value::Null,
            provenance,
        }
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for section in &self.sections {
            render_section(&mut out, section);
        }
        let p = &self.provenance;
        let mut entries = vec![
            ("tool".to_owned(), format!("{} {}", p.tool, p.version)),
            ("seed".to_owned(), p.seed.to_string()),
        ];
        if let Some(mode) = p.mode {
            entries.push(("mode".into(), mode.into()));
        }
        for h in &p.inputs {
            entries.push((format!("{} ({})", h.role, h.source), h.sha256.clone()));
        }
        if let Some(t) = p.generated_unix {
            entries.push(("generated (unix)".into(), t.to_string()));
        }
        let _ = writeln!(out, "Provenance\n----------");
        render_pairs(&mut out, &entries);
        out
    }
}

pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format_float(f),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// At most six decimal places for display (scientific below 1e-4); JSON
/// keeps full precision.
pub fn format_float(f: f64) -> String {
    if f != 0.0 && f.abs() < 1e-4 {
        return format!("{f:.3e}");
    }
    let s = format!("{f:.6}");
    let s = s.trim_end_matches('0');
    let s = s.strip_suffix('.').map(|t| format!("{t}.0")).unwrap_or_else(|| s.to_owned());
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

fn render_pairs(out: &mut String, entries: &[(String, String)]) {
    let width = entries.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in entries {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out.push('\n');
}

fn render_section(out: &mut String, section: &Section) {
    let _ = writeln!(out, "{}\n{}", section.title, "-".repeat(section.title.chars().count()));
    match &section.body {
        Body::Text { text } => {
            out.push_str(text);
            if !text.ends_with('\n') {
                out.push('\n');
            }
            out.push('\n');
        }
        Body::KeyValue { entries } => {
            let pairs: Vec<(String, String)> = entries.iter().map(|(k, v)| (k.clone(), cell(v))).collect();
            render_pairs(out, &pairs);
        }
        Body::Table { columns, rows } => {
            let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(cell).collect()).collect();
            let widths: Vec<usize> = columns
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    cells
                        .iter()
                        .filter_map(|r| r.get(i))
                        .map(|s| s.chars().count())
                        .chain([c.len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |vals: &[String]| {
                vals.iter()
                    .zip(&widths)
                    .map(|(v, w)| format!("{v:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_owned()
            };
            let _ = writeln!(out, "{}", line(columns));
            let _ = writeln!(out, "{}", line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>()));
            for r in &cells {
                let _ = writeln!(out, "{}", line(r));
            }
            out.push('\n');
        }
    }
}
