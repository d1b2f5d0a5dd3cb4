//! Two-group data files: CSV with header `group,value`, group 1 or 2.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
struct Row {
    group: String,
    value: String,
}

/// Samples for groups 1 and 2, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub group1: Vec<f64>,
    pub group2: Vec<f64>,
}

impl DataFile {
    pub fn read(path: &Path) -> Result<Self> {
        let file =
            std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Self::parse(file).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(input: impl std::io::Read) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader
            .headers()
            .context("line 1: cannot read header")?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["group", "value"] {
            bail!(
                "line 1: expected header `group,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            );
        }
        let mut data = DataFile {
            group1: Vec::new(),
            group2: Vec::new(),
        };
        for record in reader.deserialize::<Row>() {
            let row = match record {
                Ok(row) => row,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    bail!("line {line}: {}", e.kind_message());
                }
            };
            // Header is line 1, so the n-th record lives on line n + 1.
            let line = data.group1.len() + data.group2.len() + 2;
            let value: f64 = row
                .value
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .with_context(|| {
                    format!("line {line}: value `{}` is not a finite number", row.value)
                })?;
            match row.group.as_str() {
                "1" => data.group1.push(value),
                "2" => data.group2.push(value),
                other => bail!("line {line}: group must be 1 or 2, found `{other}`"),
            }
        }
        for (g, v) in [(1, &data.group1), (2, &data.group2)] {
            if v.len() < 2 {
                bail!("group {g} has {} rows, at least 2 are needed", v.len());
            }
        }
        Ok(data)
    }
}

trait KindMessage {
    fn kind_message(&self) -> String;
}

impl KindMessage for csv::Error {
    fn kind_message(&self) -> String {
        match self.kind() {
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => {
                format!("expected {expected_len} fields, found {len}")
            }
            csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".into(),
            _ => self.to_string(),
        }
    }
}
