use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{ClinicalProfile, CorpusError, DrugCatalog, DrugRecord, EmbeddingSource, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DrugRow {
    pub drug_id: String,
    pub smiles: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub drug_id: String,
    pub source: EmbeddingSource,
    pub vector: Vec<f64>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub drug_id: String,
    pub profile: ClinicalProfile,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaffoldRow {
    pub drug_id: String,
    /// `None` when the scaffold column is empty (acyclic or unparseable molecule).
    pub scaffold: Option<String>,
    pub line: usize,
}

/// One row of a pairs file before labeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPair {
    pub drug_a: String,
    pub drug_b: String,
    pub documented: bool,
    pub line: usize,
}

/// Paths that make up a catalog on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogSources {
    pub drugs: PathBuf,
    pub embeddings: Vec<PathBuf>,
    pub profiles: PathBuf,
    pub scaffolds: Option<PathBuf>,
}

fn malformed(origin: &str, line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Malformed {
        origin: origin.to_string(),
        line,
        message: message.into(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn normalize_token(origin: &str, line: usize, field: &str, token: &str) -> Result<String> {
    let token = token.trim();
    if token.is_empty() {
        return Err(malformed(origin, line, format!("empty token in {field}")));
    }
    Ok(token.to_uppercase())
}

fn normalize_id(origin: &str, line: usize, field: &str, id: &str) -> Result<String> {
    let id = id.trim();
    if id.is_empty() {
        return Err(malformed(origin, line, format!("empty {field}")));
    }
    Ok(id.to_string())
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn csv_error(origin: &str, err: csv::Error) -> CorpusError {
    let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
    malformed(origin, line, err.to_string())
}

fn check_header<R: Read>(
    rdr: &mut csv::Reader<R>,
    origin: &str,
    required: &[&str],
    optional: &[&str],
) -> Result<usize> {
    let header = rdr.headers().map_err(|e| csv_error(origin, e))?.clone();
    let names: Vec<&str> = header.iter().collect();
    let ok = names.len() >= required.len()
        && names.len() <= required.len() + optional.len()
        && names.iter().zip(required.iter().chain(optional)).all(|(a, b)| a == b);
    if !ok {
        let expected: Vec<&str> = required.iter().chain(optional).copied().collect();
        return Err(malformed(
            origin,
            1,
            format!("expected header {:?}, found {:?}", expected.join(","), names.join(",")),
        ));
    }
    Ok(names.len())
}

/// Parses a drug CSV with header `drug_id,smiles` (the smiles column may be
/// absent or empty).
pub fn parse_drugs<R: Read>(reader: R, origin: &str) -> Result<Vec<DrugRow>> {
    let mut rdr = csv_reader(reader);
    let columns = check_header(&mut rdr, origin, &["drug_id"], &["smiles"])?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(origin, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let drug_id = normalize_id(origin, line, "drug_id", &record[0])?;
        let smiles = if columns > 1 && !record[1].is_empty() {
            Some(record[1].to_string())
        } else {
            None
        };
        rows.push(DrugRow {
            drug_id,
            smiles,
            line,
        });
    }
    Ok(rows)
}

/// Iterates non-blank lines of a JSON Lines stream with 1-based line numbers.
fn json_lines<'a, R: BufRead + 'a>(
    reader: R,
    origin: &'a str,
) -> impl Iterator<Item = Result<(usize, String)>> + 'a {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(idx, line)| match line {
            Ok(text) if text.trim().is_empty() => None,
            Ok(text) => Some(Ok((idx + 1, text))),
            Err(e) => Some(Err(malformed(origin, idx + 1, e.to_string()))),
        })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingLine {
    drug_id: String,
    source: EmbeddingSource,
    vector: Vec<f64>,
}

/// Parses an embedding JSON Lines stream. Vectors must be non-empty, finite
/// and share one dimension per source tag within the stream.
pub fn parse_embeddings<R: BufRead>(reader: R, origin: &str) -> Result<Vec<EmbeddingRow>> {
    let mut dims: BTreeMap<EmbeddingSource, usize> = BTreeMap::new();
    let mut rows = Vec::new();
    for item in json_lines(reader, origin) {
        let (line, text) = item?;
        let parsed: EmbeddingLine =
            serde_json::from_str(&text).map_err(|e| malformed(origin, line, e.to_string()))?;
        let drug_id = normalize_id(origin, line, "drug_id", &parsed.drug_id)?;
        if parsed.vector.is_empty() {
            return Err(malformed(origin, line, "empty vector"));
        }
        if parsed.vector.iter().any(|v| !v.is_finite()) {
            return Err(malformed(origin, line, "non-finite vector element"));
        }
        let expected = *dims.entry(parsed.source).or_insert(parsed.vector.len());
        if expected != parsed.vector.len() {
            return Err(CorpusError::DimensionMismatch {
                origin: origin.to_string(),
                line,
                source_tag: parsed.source,
                expected,
                found: parsed.vector.len(),
            });
        }
        rows.push(EmbeddingRow {
            drug_id,
            source: parsed.source,
            vector: parsed.vector,
            line,
        });
    }
    Ok(rows)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileLine {
    drug_id: String,
    #[serde(default)]
    enzymes: Vec<String>,
    #[serde(default)]
    targets: Vec<String>,
    #[serde(default)]
    atc: Vec<String>,
    #[serde(default)]
    groups: Vec<String>,
    #[serde(default)]
    side_effects: Vec<String>,
    #[serde(default)]
    strong_pk_modulator: bool,
    #[serde(default)]
    scaffold: Option<String>,
}

fn token_set(origin: &str, line: usize, field: &str, tokens: &[String]) -> Result<BTreeSet<String>> {
    tokens
        .iter()
        .map(|t| normalize_token(origin, line, field, t))
        .collect()
}

/// Parses a clinical profile JSON Lines stream.
pub fn parse_profiles<R: BufRead>(reader: R, origin: &str) -> Result<Vec<ProfileRow>> {
    let mut rows = Vec::new();
    for item in json_lines(reader, origin) {
        let (line, text) = item?;
        let parsed: ProfileLine =
            serde_json::from_str(&text).map_err(|e| malformed(origin, line, e.to_string()))?;
        let drug_id = normalize_id(origin, line, "drug_id", &parsed.drug_id)?;
        let scaffold_id = parsed
            .scaffold
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty());
        let profile = ClinicalProfile {
            enzymes: token_set(origin, line, "enzymes", &parsed.enzymes)?,
            targets: token_set(origin, line, "targets", &parsed.targets)?,
            atc_codes: token_set(origin, line, "atc", &parsed.atc)?,
            therapeutic_groups: token_set(origin, line, "groups", &parsed.groups)?,
            side_effects: token_set(origin, line, "side_effects", &parsed.side_effects)?,
            strong_pk_modulator: parsed.strong_pk_modulator,
            scaffold_id,
        };
        rows.push(ProfileRow {
            drug_id,
            profile,
            line,
        });
    }
    Ok(rows)
}

/// Parses a `drug_id,scaffold` CSV as emitted by the scaffold extraction tool.
pub fn parse_scaffolds<R: Read>(reader: R, origin: &str) -> Result<Vec<ScaffoldRow>> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, origin, &["drug_id", "scaffold"], &[])?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(origin, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let drug_id = normalize_id(origin, line, "drug_id", &record[0])?;
        let scaffold = Some(record[1].to_string()).filter(|s| !s.is_empty());
        rows.push(ScaffoldRow {
            drug_id,
            scaffold,
            line,
        });
    }
    Ok(rows)
}

/// Parses a pairs CSV with header `drug_a,drug_b,documented`, `documented` in {0, 1}.
pub fn parse_pairs<R: Read>(reader: R, origin: &str) -> Result<Vec<RawPair>> {
    let mut rdr = csv_reader(reader);
    check_header(&mut rdr, origin, &["drug_a", "drug_b", "documented"], &[])?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(origin, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let drug_a = normalize_id(origin, line, "drug_a", &record[0])?;
        let drug_b = normalize_id(origin, line, "drug_b", &record[1])?;
        let documented = match &record[2] {
            "1" => true,
            "0" => false,
            other => {
                return Err(malformed(
                    origin,
                    line,
                    format!("documented must be 0 or 1, got {other:?}"),
                ))
            }
        };
        rows.push(RawPair {
            drug_a,
            drug_b,
            documented,
            line,
        });
    }
    Ok(rows)
}

pub fn read_pairs(path: &Path) -> Result<Vec<RawPair>> {
    parse_pairs(open(path)?, &path.display().to_string())
}

/// Loads and cross-validates a catalog from its files.
pub fn load_catalog(sources: &CatalogSources) -> Result<DrugCatalog> {
    let drugs_origin = sources.drugs.display().to_string();
    let drug_rows = parse_drugs(open(&sources.drugs)?, &drugs_origin)?;

    let mut records: BTreeMap<String, DrugRecord> = BTreeMap::new();
    for row in drug_rows {
        match records.entry(row.drug_id) {
            Entry::Occupied(e) => {
                return Err(CorpusError::DuplicateDrug {
                    origin: drugs_origin,
                    line: row.line,
                    drug_id: e.key().clone(),
                })
            }
            Entry::Vacant(e) => {
                let drug_id = e.key().clone();
                e.insert(DrugRecord {
                    drug_id,
                    smiles: row.smiles,
                    embeddings: BTreeMap::new(),
                    profile: ClinicalProfile::default(),
                });
            }
        }
    }

    let mut dims: BTreeMap<EmbeddingSource, usize> = BTreeMap::new();
    for path in &sources.embeddings {
        let origin = path.display().to_string();
        for row in parse_embeddings(open(path)?, &origin)? {
            let expected = *dims.entry(row.source).or_insert(row.vector.len());
            if expected != row.vector.len() {
                return Err(CorpusError::DimensionMismatch {
                    origin,
                    line: row.line,
                    source_tag: row.source,
                    expected,
                    found: row.vector.len(),
                });
            }
            let record = records
                .get_mut(&row.drug_id)
                .ok_or_else(|| CorpusError::UnknownDrug {
                    origin: origin.clone(),
                    line: row.line,
                    drug_id: row.drug_id.clone(),
                })?;
            if record.embeddings.insert(row.source, row.vector).is_some() {
                return Err(malformed(
                    &origin,
                    row.line,
                    format!("duplicate {} embedding for {:?}", row.source, row.drug_id),
                ));
            }
        }
    }

    let origin = sources.profiles.display().to_string();
    let mut profiled = BTreeSet::new();
    for row in parse_profiles(open(&sources.profiles)?, &origin)? {
        let record = records
            .get_mut(&row.drug_id)
            .ok_or_else(|| CorpusError::UnknownDrug {
                origin: origin.clone(),
                line: row.line,
                drug_id: row.drug_id.clone(),
            })?;
        if !profiled.insert(row.drug_id.clone()) {
            return Err(CorpusError::DuplicateDrug {
                origin,
                line: row.line,
                drug_id: row.drug_id,
            });
        }
        record.profile = row.profile;
    }
    if let Some(missing) = records.keys().find(|id| !profiled.contains(*id)) {
        return Err(CorpusError::MissingProfile {
            drug_id: missing.clone(),
        });
    }

    if let Some(path) = &sources.scaffolds {
        let origin = path.display().to_string();
        for row in parse_scaffolds(open(path)?, &origin)? {
            let record = records
                .get_mut(&row.drug_id)
                .ok_or_else(|| CorpusError::UnknownDrug {
                    origin: origin.clone(),
                    line: row.line,
                    drug_id: row.drug_id.clone(),
                })?;
            match row.scaffold {
                Some(scaffold) => record.profile.scaffold_id = Some(scaffold),
                None => log::warn!("{origin}:{}: empty scaffold for {:?}", row.line, row.drug_id),
            }
        }
    }

    let catalog = DrugCatalog {
        drugs: records,
        dims,
    };
    catalog.check_complete()?;
    Ok(catalog)
}
