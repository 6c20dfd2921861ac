//! Dataset layout `root/<id>/{vis,ir}.(png|pgm)` and its line-oriented manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::io::load_grayscale;
use super::pair::ImagePair;
use crate::error::{Error, Result};

const EXTENSIONS: [&str; 2] = ["png", "pgm"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Split {
    #[default]
    Train,
    Eval,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Eval => "eval",
        })
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "eval" => Ok(Split::Eval),
            _ => Err(Error::Dataset(format!("unknown split tag {s:?}"))),
        }
    }
}

/// One pair; paths are relative to the manifest root and use `/` separators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub visible: String,
    pub infrared: String,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
    /// Skipped directories and ambiguities found while scanning.
    pub warnings: Vec<String>,
}

fn find_half(dir: &Path, stem: &str, warnings: &mut Vec<String>, id: &str) -> Option<String> {
    let found: Vec<&str> = EXTENSIONS
        .iter()
        .copied()
        .filter(|ext| dir.join(format!("{stem}.{ext}")).is_file())
        .collect();
    if found.len() > 1 {
        warnings.push(format!("{id}: both {stem}.png and {stem}.pgm present, using {stem}.png"));
    }
    found.first().map(|ext| format!("{id}/{stem}.{ext}"))
}

/// Scan `root` for pair directories. Entries are sorted by id and all tagged `train`.
pub fn build_manifest(root: impl AsRef<Path>) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let listing = std::fs::read_dir(root)
        .map_err(|e| Error::Dataset(format!("cannot read {}: {e}", root.display())))?;
    let mut dirs = Vec::new();
    for entry in listing {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            match entry.file_name().into_string() {
                Ok(name) => dirs.push(name),
                Err(name) => {
                    return Err(Error::Dataset(format!("non UTF-8 directory name {name:?}")));
                }
            }
        }
    }
    dirs.sort();

    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for id in dirs {
        if id.contains(['\t', '\n']) {
            warnings.push(format!("{id:?}: id contains a tab or newline, skipped"));
            continue;
        }
        let dir = root.join(&id);
        let vis = find_half(&dir, "vis", &mut warnings, &id);
        let ir = find_half(&dir, "ir", &mut warnings, &id);
        match (vis, ir) {
            (Some(visible), Some(infrared)) => entries.push(ManifestEntry {
                id,
                visible,
                infrared,
                split: Split::Train,
            }),
            (Some(_), None) => warnings.push(format!("{id}: missing infrared image, skipped")),
            (None, Some(_)) => warnings.push(format!("{id}: missing visible image, skipped")),
            (None, None) => {}
        }
    }
    if entries.is_empty() {
        return Err(Error::Dataset(format!(
            "no complete vis/ir pairs under {}",
            root.display()
        )));
    }
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        entries,
        warnings,
    })
}

impl DatasetManifest {
    /// Tag the last `round(n * fraction)` entries as `eval`, keeping at least one `train` entry.
    pub fn assign_splits(&mut self, eval_fraction: f64) -> Result<()> {
        if !(0.0..1.0).contains(&eval_fraction) {
            return Err(Error::Config(format!(
                "eval fraction must be in [0, 1), got {eval_fraction}"
            )));
        }
        let n = self.entries.len();
        let n_eval = ((n as f64 * eval_fraction).round() as usize).min(n.saturating_sub(1));
        for (k, e) in self.entries.iter_mut().enumerate() {
            e.split = if k >= n - n_eval { Split::Eval } else { Split::Train };
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn load_pair(&self, entry: &ManifestEntry) -> Result<ImagePair> {
        let v = load_grayscale(self.root.join(&entry.visible))?;
        let i = load_grayscale(self.root.join(&entry.infrared))?;
        ImagePair::new(entry.id.clone(), v, i)
    }

    pub fn load_split(&self, split: Split) -> Result<Vec<ImagePair>> {
        self.split(split).map(|e| self.load_pair(e)).collect()
    }

    /// `id<TAB>vis<TAB>ir<TAB>split`, one line per entry.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\t{}\n", e.id, e.visible, e.infrared, e.split))
            .collect()
    }

    /// Parse manifest text; every referenced file must exist under `root`.
    pub fn parse(root: impl AsRef<Path>, text: &str) -> Result<Self> {
        let root = root.as_ref();
        let mut entries: Vec<ManifestEntry> = Vec::new();
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, visible, infrared, split] = fields[..] else {
                return Err(Error::Dataset(format!(
                    "manifest line {}: expected 4 tab-separated fields",
                    n + 1
                )));
            };
            if entries.iter().any(|e| e.id == id) {
                return Err(Error::Dataset(format!("manifest line {}: duplicate id {id}", n + 1)));
            }
            for p in [visible, infrared] {
                if !root.join(p).is_file() {
                    return Err(Error::Dataset(format!(
                        "manifest line {}: {} does not exist",
                        n + 1,
                        root.join(p).display()
                    )));
                }
            }
            entries.push(ManifestEntry {
                id: id.to_owned(),
                visible: visible.to_owned(),
                infrared: infrared.to_owned(),
                split: split.parse()?,
            });
        }
        if entries.is_empty() {
            return Err(Error::Dataset("manifest has no entries".into()));
        }
        Ok(Self {
            root: root.to_path_buf(),
            entries,
            warnings: Vec::new(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(root: impl AsRef<Path>, path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(root, &std::fs::read_to_string(path)?)
    }
}
