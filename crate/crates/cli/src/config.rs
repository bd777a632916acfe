//! Layered settings: command-line flags over a `key = value` file over
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use karel_core::tasks::Task;

/// Parsed `key = value` file. Blank lines and `#` comments are skipped.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KvFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if let Some((first, _)) = entries.insert(key.clone(), (i + 1, v.trim().to_string())) {
                bail!("line {}: duplicate key {key:?} (first set on line {first})", i + 1);
            }
        }
        Ok(KvFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }
}

/// Resolves settings one key at a time and remembers every resolved value,
/// so the full configuration can be written into output headers.
#[derive(Debug)]
pub struct Settings {
    file: KvFile,
    resolved: Vec<(String, String)>,
}

impl Settings {
    pub fn new(file: KvFile) -> Self {
        Settings { file, resolved: Vec::new() }
    }

    /// The flag if given, else the file entry, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<&str>, default: T) -> Result<T>
    where
        T: FromStr + fmt::Display,
        T::Err: fmt::Display,
    {
        let value = match (flag, self.file.entries.remove(key)) {
            (Some(raw), _) => parse_value(key, raw, "flag")?,
            (None, Some((line, raw))) => parse_value(key, &raw, &format!("config line {line}"))?,
            (None, None) => default,
        };
        self.resolved.push((key.to_string(), value.to_string()));
        Ok(value)
    }

    /// Fails on file keys that no setting consumed, then returns the
    /// resolved `(key, value)` pairs in resolution order.
    pub fn finish(self) -> Result<Vec<(String, String)>> {
        if let Some((key, (line, _))) = self.file.entries.into_iter().next() {
            bail!("config line {line}: unknown key {key:?} for this command");
        }
        Ok(self.resolved)
    }
}

fn parse_value<T>(key: &str, raw: &str, origin: &str) -> Result<T>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    raw.trim().parse().map_err(|e| anyhow!("{origin}: bad value {raw:?} for {key}: {e}"))
}

/// Integers given as comma-separated items, each a number or an inclusive
/// range `a-b`; for example `1-4,8`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntList(pub Vec<u64>);

impl FromStr for IntList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim) {
            let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
            match item.split_once('-') {
                Some((a, b)) => {
                    let (a, b) = (num(a)?, num(b)?);
                    if a > b {
                        return Err(format!("empty range {item:?}"));
                    }
                    out.extend(a..=b);
                }
                None => out.push(num(item)?),
            }
        }
        Ok(IntList(out))
    }
}

impl fmt::Display for IntList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(u64::to_string).collect();
        f.write_str(&items.join(","))
    }
}

/// Comma-separated task ids, or `all`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskList(pub Vec<Task>);

impl FromStr for TaskList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "all" {
            return Ok(TaskList(Task::ALL.to_vec()));
        }
        s.split(',').map(|t| t.trim().parse::<Task>().map_err(|e| e.to_string())).collect::<Result<_, _>>().map(TaskList)
    }
}

impl fmt::Display for TaskList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.0.iter().map(|t| t.id()).collect();
        f.write_str(&ids.join(","))
    }
}

/// An optional return threshold; `none` disables it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopAt(pub Option<f64>);

impl FromStr for StopAt {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "none" => Ok(StopAt(None)),
            t => t.parse::<f64>().map(|x| StopAt(Some(x))).map_err(|e| e.to_string()),
        }
    }
}

impl fmt::Display for StopAt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(x) => write!(f, "{x}"),
            None => f.write_str("none"),
        }
    }
}

/// Worker threads: `KAREL_WORKERS` if set, else every available core.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => bail!("{WORKERS_ENV} must be a positive integer, got {v:?}"),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub const WORKERS_ENV: &str = "KAREL_WORKERS";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beats_default() {
        let file = KvFile::parse("# comment\nk = 10\n\nbudget=500\n").unwrap();
        let mut s = Settings::new(file);
        assert_eq!(s.get("k", Some("3"), 250usize).unwrap(), 3);
        assert_eq!(s.get("budget", None, 100u64).unwrap(), 500);
        assert_eq!(s.get("seed", None, 7u64).unwrap(), 7);
        let resolved = s.finish().unwrap();
        assert_eq!(resolved[0], ("k".to_string(), "3".to_string()));
        assert_eq!(resolved.len(), 3);
    }

    #[test]
    fn file_errors_name_the_line() {
        let err = KvFile::parse("k = 1\nnonsense\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = KvFile::parse("k = 1\nk = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let mut s = Settings::new(KvFile::parse("k = ten").unwrap());
        let err = s.get("k", None, 1usize).unwrap_err();
        assert!(err.to_string().contains("config line 1"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let s = Settings::new(KvFile::parse("colour = blue").unwrap());
        assert!(s.finish().unwrap_err().to_string().contains("colour"));
    }

    #[test]
    fn dashed_keys_match_underscored_settings() {
        let mut s = Settings::new(KvFile::parse("num-states = 4").unwrap());
        assert_eq!(s.get("num_states", None, 16usize).unwrap(), 4);
    }

    #[test]
    fn list_syntax() {
        assert_eq!("1-3,7".parse::<IntList>().unwrap().0, vec![1, 2, 3, 7]);
        assert_eq!("1-3,7".parse::<IntList>().unwrap().to_string(), "1,2,3,7");
        assert!("3-1".parse::<IntList>().is_err());
        assert_eq!("maze, harvester".parse::<TaskList>().unwrap().0, vec![Task::Maze, Task::Harvester]);
        assert_eq!("all".parse::<TaskList>().unwrap().0.len(), 10);
        assert_eq!("none".parse::<StopAt>().unwrap(), StopAt(None));
        assert_eq!("1".parse::<StopAt>().unwrap().to_string(), "1");
    }
}
