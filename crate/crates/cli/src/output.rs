//! Run manifests, staged output and the error classes behind exit codes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nvrelax_core::Error;

/// A failed command. Validation failures never leave files behind.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    /// Prefixes the message with the file it concerns.
    pub fn in_file(self, path: &Path) -> Failure {
        let p = path.display();
        match self {
            Failure::Validation(m) => Failure::Validation(format!("{p}: {m}")),
            Failure::Runtime(m) => Failure::Runtime(format!("{p}: {m}")),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "invalid input: {m}"),
            Failure::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. }
            | Error::Parse { .. }
            | Error::Sequence(_)
            | Error::Domain(_)
            | Error::Shape(_)
            | Error::Structure(_)
            | Error::InsufficientData(_)
            | Error::Io(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

pub type CmdResult<T> = Result<T, Failure>;

/// How a command ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some per-temperature evaluations failed.
    Partial,
    /// Every per-temperature evaluation failed; outputs are still written.
    Failed,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Partial => 3,
            Status::Failed => 2,
        }
    }
}

pub fn read_input(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))
}

/// Provenance written at the top of every output file.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: &'static str,
    pub config: String,
    pub inputs: Vec<String>,
    pub seed: Option<u64>,
    pub timestamp: Option<u64>,
}

impl Manifest {
    pub fn new(command: &'static str, config: Option<&Path>, timestamp: bool) -> Self {
        Self {
            command,
            config: config.map_or_else(|| "builtin".to_string(), |p| p.display().to_string()),
            inputs: Vec::new(),
            seed: None,
            timestamp: timestamp.then(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            }),
        }
    }

    /// Header lines (without the comment marker) for the file at `output`,
    /// given relative to the output root.
    pub fn lines(&self, output: &Path) -> Vec<String> {
        let mut v = vec![
            format!("tool = nvrelax {}", env!("CARGO_PKG_VERSION")),
            format!("command = {}", self.command),
            format!("config = {}", self.config),
        ];
        if !self.inputs.is_empty() {
            v.push(format!("inputs = {}", self.inputs.join(", ")));
        }
        v.push(format!("output = {}", output.display()));
        v.push(match self.seed {
            Some(s) => format!("seed = {s}"),
            None => "seed = none (deterministic)".to_string(),
        });
        if let Some(t) = self.timestamp {
            v.push(format!("timestamp_unix_s = {t}"));
        }
        v
    }

    pub fn header(&self, output: &Path) -> String {
        self.lines(output).iter().map(|l| format!("# {l}\n")).collect()
    }
}

/// Files held in memory until the whole command has succeeded.
#[derive(Debug, Default)]
pub struct Staged {
    files: Vec<(PathBuf, String)>,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a file whose body gets the manifest header prepended.
    pub fn add(&mut self, manifest: &Manifest, rel: impl Into<PathBuf>, body: &str) {
        let rel = rel.into();
        let text = format!("{}{body}", manifest.header(&rel));
        self.files.push((rel, text));
    }

    /// Adds a file that already carries its header.
    pub fn add_raw(&mut self, rel: impl Into<PathBuf>, text: String) {
        self.files.push((rel.into(), text));
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn check_unique(&self) -> CmdResult<()> {
        let mut names: Vec<&PathBuf> = self.files.iter().map(|f| &f.0).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Failure::Validation(format!(
                "two outputs map to the same file {}; inputs are too close together",
                w[0].display()
            )));
        }
        Ok(())
    }

    pub fn commit(self, root: &Path) -> CmdResult<()> {
        self.check_unique()?;
        if root.exists() && !root.is_dir() {
            return Err(Failure::Validation(format!("{} exists and is not a directory", root.display())));
        }
        for (rel, text) in self.files {
            let path = root.join(&rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)
                    .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", parent.display())))?;
            }
            fs::write(&path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// Writes one file, or stdout when no path is given.
pub fn emit(path: Option<&Path>, manifest: &Manifest, body: &str) -> CmdResult<()> {
    match path {
        Some(p) => {
            let name = p.file_name().map(PathBuf::from).unwrap_or_else(|| p.to_path_buf());
            let text = format!("{}{body}", manifest.header(&name));
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", parent.display())))?;
            }
            fs::write(p, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            print!("{}{body}", manifest.header(Path::new("stdout")));
            Ok(())
        }
    }
}

pub fn to_toml<T: serde::Serialize>(value: &T) -> CmdResult<String> {
    toml::to_string(value).map_err(|e| Failure::Runtime(format!("cannot serialize report: {e}")))
}

/// `294.00K`-style tag used in file names.
pub fn temperature_tag(t: f64) -> String {
    format!("T{t:.2}K")
}

pub fn power_tag(p: f64) -> String {
    format!("P{p:.3e}W")
}
