//! Self-describing CSV and JSONL documents, and atomic file replacement.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Provenance written at the top of every output: tool, version, command
/// and the fully resolved settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Header {
    pub command: String,
    pub settings: Vec<(String, String)>,
}

impl Header {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("tool".to_string(), env!("CARGO_PKG_NAME").to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("command".to_string(), self.command.clone()),
        ];
        out.extend(self.settings.iter().cloned());
        out
    }

    /// `# key=value` lines.
    pub fn comment_lines(&self) -> String {
        self.pairs().iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }
}

/// Header comments, a column row, then one row per record. The column row
/// is written even when there are no records.
pub fn csv_document<R: Serialize>(header: &Header, columns: &[&str], rows: &[R]) -> Result<String> {
    let mut buf = header.comment_lines().into_bytes();
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        w.write_record(columns)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// A header object on the first line, then one record per line.
pub fn jsonl_document<R: Serialize>(header: &Header, rows: &[R]) -> Result<String> {
    let config: serde_json::Map<String, serde_json::Value> =
        header.pairs().into_iter().map(|(k, v)| (k, serde_json::Value::String(v))).collect();
    let mut out = serde_json::to_string(&serde_json::json!({ "header": config }))?;
    out.push('\n');
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Where a document goes: `-` is standard output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    pub fn parse(s: &str) -> Sink {
        if s == "-" {
            Sink::Stdout
        } else {
            Sink::File(PathBuf::from(s))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub sink: Sink,
    pub contents: String,
}

/// Replaces `path` with `contents` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("staging in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes every artifact. Called only after all of them were produced.
pub fn commit(artifacts: &[Artifact]) -> Result<()> {
    for a in artifacts {
        match &a.sink {
            Sink::Stdout => std::io::stdout().lock().write_all(a.contents.as_bytes())?,
            Sink::File(p) => write_atomic(p, a.contents.as_bytes())?,
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        name: &'static str,
        value: f64,
    }

    fn header() -> Header {
        Header { command: "demo".into(), settings: vec![("seed".into(), "3".into())] }
    }

    #[test]
    fn csv_carries_header_and_columns() {
        let doc = csv_document(&header(), &["name", "value"], &[Row { name: "a", value: 0.5 }]).unwrap();
        let lines: Vec<&str> = doc.lines().collect();
        assert_eq!(lines[0], "# tool=karel-cli");
        assert!(lines.contains(&"# seed=3"));
        assert_eq!(&lines[lines.len() - 2..], &["name,value", "a,0.5"]);
        let empty = csv_document::<Row>(&header(), &["name", "value"], &[]).unwrap();
        assert!(empty.ends_with("name,value\n"));
    }

    #[test]
    fn jsonl_starts_with_header_object() {
        let doc = jsonl_document(&header(), &[Row { name: "a", value: 1.0 }]).unwrap();
        let first: serde_json::Value = serde_json::from_str(doc.lines().next().unwrap()).unwrap();
        assert_eq!(first["header"]["command"], "demo");
        assert_eq!(first["header"]["seed"], "3");
        assert_eq!(doc.lines().nth(1).unwrap(), r#"{"name":"a","value":1.0}"#);
    }

    #[test]
    fn atomic_write_replaces_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
