//! Staged pipeline over artifact directories.
//!
//! Each stage reads the previous stage's directory, verifies its manifest,
//! and writes its own outputs plus a manifest of content digests. Tampered
//! or mismatched artifacts fail the next stage instead of silently flowing
//! through. Large corpora are ingested once; the unit table feeds any
//! number of analyze runs.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    female_mentor_cem, grouped_cem, mentor_gain_comparison, quintile_cem, AnalysisError,
    ComparisonResult, ExperimentPlan, GroupSummary, Grouping, IndependentVariable,
};
use crate::cem::CoarseningSpec;
use crate::corpus::{Corpus, CorpusConfig, CorpusError, PublicationRecord};
use crate::dyads::{extract_dyads, Dyad, DyadParams};
use crate::metrics::{assemble_units, MentorGainRecord, ProtegeUnit};
use crate::report::{
    render_delta_chart, write_comparisons_csv, write_gains_csv, write_group_summaries_csv,
    write_units_csv, ReportError,
};
use crate::scholars::{
    apply_gender_filter, build_profiles, DisciplineTaxonomy, Gender, ProfileSet, ScholarProfile,
};
use crate::stats::relative_delta;
use crate::synth::{ground_truth_report, GroundTruth, SynthConfig, SynthError};

pub const TOOL_NAME: &str = "mentorlens";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} is not a stage directory (missing manifest)")]
    MissingManifest(String),
    #[error("manifest mismatch in {dir}: {detail}")]
    ManifestMismatch { dir: String, detail: String },
    #[error("stage version mismatch in {dir}: manifest written by {found}, this tool is {expected}")]
    VersionMismatch {
        dir: String,
        found: String,
        expected: String,
    },
    #[error("bad artifact {path}: {detail}")]
    BadArtifact { path: String, detail: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Profiles(#[from] crate::scholars::ProfileError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Stage manifest: what produced this directory and the digests of every
/// file in it. No timestamps; identical inputs give identical manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub config_digest: String,
    /// Digests of upstream manifests and loose input files, keyed by role.
    pub inputs: BTreeMap<String, String>,
    /// Digests of the files this stage wrote, keyed by file name.
    pub outputs: BTreeMap<String, String>,
    /// Digest identifying the corpus this chain descends from; carried
    /// through every stage so end artifacts can be traced to their source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_fingerprint: Option<String>,
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(digest_bytes(&bytes))
}

fn digest_config<T: Serialize>(config: &T) -> String {
    digest_bytes(serde_json::to_string(config).expect("config serializes").as_bytes())
}

/// Write the manifest for a freshly produced stage directory, digesting
/// every listed output file.
fn write_manifest(
    dir: &Path,
    stage: &str,
    config_digest: String,
    inputs: BTreeMap<String, String>,
    output_files: &[&str],
    corpus_fingerprint: Option<String>,
) -> Result<Manifest, PipelineError> {
    let mut outputs = BTreeMap::new();
    for name in output_files {
        outputs.insert(name.to_string(), digest_file(&dir.join(name))?);
    }
    let manifest = Manifest {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        stage: stage.to_string(),
        config_digest,
        inputs,
        outputs,
        corpus_fingerprint,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| PipelineError::Json {
        path: path.display().to_string(),
        source,
    })?;
    std::fs::write(&path, json).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, PipelineError> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(PipelineError::MissingManifest(dir.display().to_string()));
    }
    let bytes = std::fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&bytes).map_err(|source| PipelineError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Verify a stage directory against its manifest and return it. Every stage
/// calls this on each upstream directory before trusting its contents.
pub fn verify_stage_dir(dir: &Path) -> Result<Manifest, PipelineError> {
    let manifest = read_manifest(dir)?;
    if manifest.version != TOOL_VERSION {
        return Err(PipelineError::VersionMismatch {
            dir: dir.display().to_string(),
            found: manifest.version,
            expected: TOOL_VERSION.to_string(),
        });
    }
    for (name, expected) in &manifest.outputs {
        let actual = digest_file(&dir.join(name))?;
        if &actual != expected {
            return Err(PipelineError::ManifestMismatch {
                dir: dir.display().to_string(),
                detail: format!("{name} digest {actual} != manifest {expected}"),
            });
        }
    }
    Ok(manifest)
}

fn manifest_digest(dir: &Path) -> Result<String, PipelineError> {
    digest_file(&dir.join(MANIFEST_FILE))
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

// ---------------------------------------------------------------------
// synth

pub fn stage_synth(config: &SynthConfig, out: &Path) -> Result<(), PipelineError> {
    ensure_dir(out)?;
    let generated = crate::synth::generate_corpus(config)?;
    generated.write_to_dir(out)?;
    let fingerprint = corpus_fingerprint_of(
        &digest_file(&out.join("publications.jsonl"))?,
        &digest_file(&out.join("citations.tsv"))?,
    );
    write_manifest(
        out,
        "synth",
        digest_config(config),
        BTreeMap::new(),
        &[
            "publications.jsonl",
            "citations.tsv",
            "gender.csv",
            "ranks.csv",
            "taxonomy.csv",
            "ground_truth.json",
        ],
        Some(fingerprint),
    )?;
    Ok(())
}

fn corpus_fingerprint_of(pub_digest: &str, cite_digest: &str) -> String {
    digest_bytes(format!("{pub_digest}:{cite_digest}").as_bytes())
}

// ---------------------------------------------------------------------
// ingest

pub fn stage_ingest(
    publications: &Path,
    citations: &Path,
    config: CorpusConfig,
    out: &Path,
) -> Result<Corpus, PipelineError> {
    ensure_dir(out)?;
    let mut inputs = BTreeMap::new();
    inputs.insert("publications".to_string(), digest_file(publications)?);
    inputs.insert("citations".to_string(), digest_file(citations)?);
    let corpus = crate::corpus::load_corpus(publications, citations, config.clone())?;
    write_corpus_files(&corpus, out)?;
    let config_path = out.join("corpus_config.json");
    std::fs::write(
        &config_path,
        serde_json::to_string_pretty(&config).expect("config serializes"),
    )
    .map_err(io_err(&config_path))?;
    let report_path = out.join("load_report.json");
    std::fs::write(
        &report_path,
        serde_json::to_string_pretty(corpus.report()).expect("report serializes"),
    )
    .map_err(io_err(&report_path))?;
    let fingerprint = corpus_fingerprint_of(
        &digest_file(&out.join("publications.jsonl"))?,
        &digest_file(&out.join("citations.tsv"))?,
    );
    write_manifest(
        out,
        "ingest",
        digest_config(&config),
        inputs,
        &[
            "publications.jsonl",
            "citations.tsv",
            "corpus_config.json",
            "load_report.json",
        ],
        Some(fingerprint),
    )?;
    Ok(corpus)
}

/// Canonicalized corpus files: publications sorted by id, edges sorted and
/// deduplicated.
fn write_corpus_files(corpus: &Corpus, out: &Path) -> Result<(), PipelineError> {
    let pub_path = out.join("publications.jsonl");
    let mut pubs = BufWriter::new(std::fs::File::create(&pub_path).map_err(io_err(&pub_path))?);
    for paper in corpus.papers() {
        let record = PublicationRecord {
            paper_id: paper.id.clone(),
            year: paper.year,
            venue: paper.venue.clone(),
            authors: paper
                .authors
                .iter()
                .map(|&(s, affil)| crate::corpus::AuthorRecord {
                    scholar_id: corpus.scholar_id(s).to_string(),
                    affiliation_id: affil.map(|a| corpus.affiliation_id(a).to_string()),
                })
                .collect(),
            keywords: paper.keywords.clone(),
        };
        serde_json::to_writer(&mut pubs, &record).map_err(|e| PipelineError::Io {
            path: pub_path.display().to_string(),
            source: std::io::Error::other(e),
        })?;
        pubs.write_all(b"\n").map_err(io_err(&pub_path))?;
    }
    pubs.flush().map_err(io_err(&pub_path))?;

    let cite_path = out.join("citations.tsv");
    let mut cites = BufWriter::new(std::fs::File::create(&cite_path).map_err(io_err(&cite_path))?);
    for &(citing, cited) in corpus.edges() {
        writeln!(cites, "{}\t{}", corpus.paper(citing).id, corpus.paper(cited).id)
            .map_err(io_err(&cite_path))?;
    }
    cites.flush().map_err(io_err(&cite_path))?;
    Ok(())
}

/// Load the corpus back from an ingest directory.
pub fn load_corpus_dir(dir: &Path) -> Result<(Corpus, Manifest), PipelineError> {
    let manifest = verify_stage_dir(dir)?;
    let config_path = dir.join("corpus_config.json");
    let config: CorpusConfig = serde_json::from_slice(
        &std::fs::read(&config_path).map_err(io_err(&config_path))?,
    )
    .map_err(|source| PipelineError::Json {
        path: config_path.display().to_string(),
        source,
    })?;
    let corpus = crate::corpus::load_corpus(
        &dir.join("publications.jsonl"),
        &dir.join("citations.tsv"),
        config,
    )?;
    Ok((corpus, manifest))
}

// ---------------------------------------------------------------------
// profiles

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileStageConfig {
    pub gender_confidence_threshold: f64,
}

impl Default for ProfileStageConfig {
    fn default() -> Self {
        ProfileStageConfig {
            gender_confidence_threshold: 0.95,
        }
    }
}

pub fn stage_profiles(
    corpus_dir: &Path,
    gender_path: &Path,
    ranks_path: &Path,
    taxonomy_path: &Path,
    config: ProfileStageConfig,
    out: &Path,
) -> Result<(), PipelineError> {
    ensure_dir(out)?;
    let (corpus, corpus_manifest) = load_corpus_dir(corpus_dir)?;
    let taxonomy = DisciplineTaxonomy::load(taxonomy_path, None)?;
    let gender = crate::scholars::load_gender_source(gender_path)?;
    let ranks = crate::scholars::load_rank_source(ranks_path)?;
    let mut profiles = build_profiles(&corpus, taxonomy, &gender, &ranks);
    let excluded = apply_gender_filter(&mut profiles, config.gender_confidence_threshold)?;

    write_profiles_csv(&out.join("profiles.csv"), &profiles)?;
    let mut exclusions =
        BufWriter::new(std::fs::File::create(out.join("gender_exclusions.csv")).map_err(io_err(out))?);
    writeln!(exclusions, "scholar_id,confidence").map_err(io_err(out))?;
    for e in &excluded {
        writeln!(exclusions, "{},{}", e.scholar_id, e.confidence).map_err(io_err(out))?;
    }
    exclusions.flush().map_err(io_err(out))?;
    std::fs::copy(taxonomy_path, out.join("taxonomy.csv")).map_err(io_err(taxonomy_path))?;

    let mut inputs = BTreeMap::new();
    inputs.insert("corpus_manifest".to_string(), manifest_digest(corpus_dir)?);
    inputs.insert("gender".to_string(), digest_file(gender_path)?);
    inputs.insert("ranks".to_string(), digest_file(ranks_path)?);
    inputs.insert("taxonomy".to_string(), digest_file(taxonomy_path)?);
    write_manifest(
        out,
        "profiles",
        digest_config(&config),
        inputs,
        &["profiles.csv", "gender_exclusions.csv", "taxonomy.csv"],
        corpus_manifest.corpus_fingerprint,
    )?;
    Ok(())
}

fn write_profiles_csv(path: &Path, profiles: &ProfileSet) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "scholar_id",
        "first_pub_year",
        "last_active_year",
        "discipline",
        "gender",
        "gender_confidence",
        "rank",
        "max_publication_gap",
    ])?;
    for p in profiles.iter() {
        writer.write_record([
            p.scholar_id.clone(),
            p.first_pub_year.to_string(),
            p.last_active_year.to_string(),
            p.discipline.clone().unwrap_or_default(),
            p.gender.as_str().to_string(),
            p.gender_confidence.to_string(),
            p.rank_at_first_pub.map(|r| r.to_string()).unwrap_or_default(),
            p.max_publication_gap.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Load profiles back, index-aligned with the corpus.
pub fn load_profiles_dir(
    dir: &Path,
    corpus: &Corpus,
) -> Result<(ProfileSet, Manifest), PipelineError> {
    let manifest = verify_stage_dir(dir)?;
    let taxonomy = DisciplineTaxonomy::load(&dir.join("taxonomy.csv"), None)?;
    let path = dir.join("profiles.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(ReportError::from)?;
    let mut by_id: std::collections::HashMap<String, ScholarProfile> =
        std::collections::HashMap::new();
    for row in reader.records() {
        let row = row.map_err(ReportError::from)?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        let profile = ScholarProfile {
            scholar_id: get(0),
            first_pub_year: parse_field(&path, &get(1))?,
            last_active_year: parse_field(&path, &get(2))?,
            discipline: (!get(3).is_empty()).then(|| get(3)),
            gender: Gender::parse(&get(4)).ok_or_else(|| PipelineError::BadArtifact {
                path: path.display().to_string(),
                detail: format!("bad gender `{}`", get(4)),
            })?,
            gender_confidence: parse_field(&path, &get(5))?,
            rank_at_first_pub: if get(6).is_empty() {
                None
            } else {
                Some(parse_field(&path, &get(6))?)
            },
            max_publication_gap: parse_field(&path, &get(7))?,
        };
        by_id.insert(profile.scholar_id.clone(), profile);
    }
    let mut profiles = Vec::with_capacity(corpus.n_scholars());
    for idx in 0..corpus.n_scholars() as u32 {
        let id = corpus.scholar_id(idx);
        let profile = by_id.remove(id).ok_or_else(|| PipelineError::BadArtifact {
            path: path.display().to_string(),
            detail: format!("missing profile for scholar `{id}`"),
        })?;
        profiles.push(profile);
    }
    Ok((ProfileSet::from_parts(profiles, taxonomy), manifest))
}

fn parse_field<T: std::str::FromStr>(path: &Path, field: &str) -> Result<T, PipelineError> {
    field.parse().map_err(|_| PipelineError::BadArtifact {
        path: path.display().to_string(),
        detail: format!("unparseable field `{field}`"),
    })
}

// ---------------------------------------------------------------------
// dyads

pub fn stage_dyads(
    corpus_dir: &Path,
    profiles_dir: &Path,
    params: DyadParams,
    out: &Path,
) -> Result<(), PipelineError> {
    ensure_dir(out)?;
    let (corpus, corpus_manifest) = load_corpus_dir(corpus_dir)?;
    let (profiles, _) = load_profiles_dir(profiles_dir, &corpus)?;
    let extraction = extract_dyads(&corpus, &profiles, &params);

    let dyads_path = out.join("dyads.csv");
    let mut writer = csv::Writer::from_path(&dyads_path).map_err(ReportError::from)?;
    writer
        .write_record(["protege_id", "mentor_id", "first_joint_year", "joint_papers_in_window"])
        .map_err(ReportError::from)?;
    for dyad in &extraction.dyads {
        let papers: Vec<&str> = dyad
            .joint_papers_in_window
            .iter()
            .map(|&p| corpus.paper(p).id.as_str())
            .collect();
        writer
            .write_record([
                corpus.scholar_id(dyad.protege),
                corpus.scholar_id(dyad.mentor),
                &dyad.first_joint_year.to_string(),
                &papers.join(";"),
            ])
            .map_err(ReportError::from)?;
    }
    writer.flush().map_err(io_err(&dyads_path))?;

    let excl_path = out.join("exclusions.csv");
    let mut writer = csv::Writer::from_path(&excl_path).map_err(ReportError::from)?;
    writer
        .write_record(["protege_id", "failed_conditions"])
        .map_err(ReportError::from)?;
    for exclusion in &extraction.exclusions {
        let reasons: Vec<&str> = exclusion.reasons.iter().map(|r| r.as_str()).collect();
        writer
            .write_record([corpus.scholar_id(exclusion.protege), &reasons.join(";")])
            .map_err(ReportError::from)?;
    }
    writer.flush().map_err(io_err(&excl_path))?;

    let params_path = out.join("dyad_params.json");
    std::fs::write(
        &params_path,
        serde_json::to_string_pretty(&params).expect("params serialize"),
    )
    .map_err(io_err(&params_path))?;

    // Author-count screening table with per-discipline dyad counts.
    let mut dyad_counts: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    for dyad in &extraction.dyads {
        if let Some(d) = &profiles.get(dyad.protege).discipline {
            *dyad_counts.entry(d.clone()).or_insert(0) += 1;
        }
    }
    let stats = crate::corpus::discipline_stats(&corpus, profiles.taxonomy(), Some(&dyad_counts), 50.0);
    let stats_path = out.join("discipline_stats.csv");
    let mut writer = csv::Writer::from_path(&stats_path).map_err(ReportError::from)?;
    writer
        .write_record(["discipline", "papers", "mean_authors", "q95_authors", "dyad_count", "flagged"])
        .map_err(ReportError::from)?;
    for row in &stats {
        writer
            .write_record([
                row.discipline.clone(),
                row.papers.to_string(),
                row.mean_authors.to_string(),
                row.q95_authors.to_string(),
                row.dyad_count.to_string(),
                row.flagged.to_string(),
            ])
            .map_err(ReportError::from)?;
    }
    writer.flush().map_err(io_err(&stats_path))?;

    let mut inputs = BTreeMap::new();
    inputs.insert("corpus_manifest".to_string(), manifest_digest(corpus_dir)?);
    inputs.insert("profiles_manifest".to_string(), manifest_digest(profiles_dir)?);
    write_manifest(
        out,
        "dyads",
        digest_config(&params),
        inputs,
        &["dyads.csv", "exclusions.csv", "dyad_params.json", "discipline_stats.csv"],
        corpus_manifest.corpus_fingerprint,
    )?;
    Ok(())
}

pub fn load_dyads_dir(
    dir: &Path,
    corpus: &Corpus,
) -> Result<(Vec<Dyad>, DyadParams, Manifest), PipelineError> {
    let manifest = verify_stage_dir(dir)?;
    let params_path = dir.join("dyad_params.json");
    let params: DyadParams =
        serde_json::from_slice(&std::fs::read(&params_path).map_err(io_err(&params_path))?)
            .map_err(|source| PipelineError::Json {
                path: params_path.display().to_string(),
                source,
            })?;
    let path = dir.join("dyads.csv");
    let mut reader = csv::Reader::from_path(&path).map_err(ReportError::from)?;
    let mut dyads = Vec::new();
    for row in reader.records() {
        let row = row.map_err(ReportError::from)?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let joint: Result<Vec<_>, _> = get(3)
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|id| corpus.paper_idx(id))
            .collect();
        dyads.push(Dyad {
            protege: corpus.scholar_idx(get(0))?,
            mentor: corpus.scholar_idx(get(1))?,
            first_joint_year: parse_field(&path, get(2))?,
            joint_papers_in_window: joint?,
        });
    }
    dyads.sort_by_key(|d| (d.protege, d.mentor));
    Ok((dyads, params, manifest))
}

// ---------------------------------------------------------------------
// metrics

pub fn stage_metrics(
    corpus_dir: &Path,
    profiles_dir: &Path,
    dyads_dir: &Path,
    out: &Path,
) -> Result<(), PipelineError> {
    ensure_dir(out)?;
    let (corpus, corpus_manifest) = load_corpus_dir(corpus_dir)?;
    let (profiles, _) = load_profiles_dir(profiles_dir, &corpus)?;
    let (dyads, params, _) = load_dyads_dir(dyads_dir, &corpus)?;
    let assembled = assemble_units(&corpus, &profiles, &dyads, &params);

    write_units_csv(&out.join("units.csv"), &assembled.units)?;
    write_gains_csv(&out.join("gains.csv"), &assembled.gains)?;
    let drops_path = out.join("unit_drops.csv");
    let mut writer = csv::Writer::from_path(&drops_path).map_err(ReportError::from)?;
    writer
        .write_record(["protege_id", "reason"])
        .map_err(ReportError::from)?;
    for drop in &assembled.drops {
        writer
            .write_record([
                drop.protege_id.as_str(),
                &serde_json::to_string(&drop.reason)
                    .expect("reason serializes")
                    .trim_matches('"'),
            ])
            .map_err(ReportError::from)?;
    }
    writer.flush().map_err(io_err(&drops_path))?;

    let mut inputs = BTreeMap::new();
    inputs.insert("corpus_manifest".to_string(), manifest_digest(corpus_dir)?);
    inputs.insert("profiles_manifest".to_string(), manifest_digest(profiles_dir)?);
    inputs.insert("dyads_manifest".to_string(), manifest_digest(dyads_dir)?);
    write_manifest(
        out,
        "metrics",
        digest_config(&params),
        inputs,
        &["units.csv", "gains.csv", "unit_drops.csv"],
        corpus_manifest.corpus_fingerprint,
    )?;
    Ok(())
}

pub fn load_units_csv(path: &Path) -> Result<Vec<ProtegeUnit>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(ReportError::from)?;
    let mut units = Vec::new();
    for row in reader.records() {
        let row = row.map_err(ReportError::from)?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        units.push(ProtegeUnit {
            protege_id: get(0),
            mentors: get(1).split(';').map(|s| s.to_string()).collect(),
            big_shot: parse_field(path, &get(2))?,
            hub: parse_field(path, &get(3))?,
            outcome: parse_field(path, &get(4))?,
            num_mentors: parse_field(path, &get(5))?,
            first_pub_year: parse_field(path, &get(6))?,
            discipline: get(7),
            gender: Gender::parse(&get(8)).ok_or_else(|| PipelineError::BadArtifact {
                path: path.display().to_string(),
                detail: format!("bad gender `{}`", get(8)),
            })?,
            rank_bin: get(9),
            years_post_mentorship: parse_field(path, &get(10))?,
            avg_mentor_age: parse_field(path, &get(11))?,
            female_mentor_count: if get(12).is_empty() {
                None
            } else {
                Some(parse_field(path, &get(12))?)
            },
        });
    }
    Ok(units)
}

pub fn load_gains_csv(path: &Path) -> Result<Vec<MentorGainRecord>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(ReportError::from)?;
    let mut gains = Vec::new();
    for row in reader.records() {
        let row = row.map_err(ReportError::from)?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        let gender = |s: &str| {
            Gender::parse(s).ok_or_else(|| PipelineError::BadArtifact {
                path: path.display().to_string(),
                detail: format!("bad gender `{s}`"),
            })
        };
        gains.push(MentorGainRecord {
            mentor_id: get(0),
            protege_id: get(1),
            mentor_gender: gender(&get(2))?,
            protege_gender: gender(&get(3))?,
            gain: parse_field(path, &get(4))?,
            discipline: get(5),
            rank_bin: get(6),
            num_mentors: parse_field(path, &get(7))?,
            first_pub_year: parse_field(path, &get(8))?,
        });
    }
    Ok(gains)
}

// ---------------------------------------------------------------------
// analyze

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum AnalysisKind {
    Quintiles,
    FemaleMentors,
    MentorGain,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub kind: AnalysisKind,
    pub iv: IndependentVariable,
    pub grouping: Grouping,
    pub weighted: bool,
    pub min_group: usize,
    /// Path to a spec override file (JSON `CoarseningSpec`).
    pub spec_path: Option<PathBuf>,
    /// Worker threads; `None` uses the available parallelism.
    pub jobs: Option<usize>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            kind: AnalysisKind::Quintiles,
            iv: IndependentVariable::BigShot,
            grouping: Grouping::None,
            weighted: false,
            min_group: 20,
            spec_path: None,
            jobs: None,
        }
    }
}

#[derive(Debug)]
pub struct AnalyzeOutput {
    pub comparisons: Vec<ComparisonResult>,
    pub summaries: Vec<GroupSummary>,
}

pub fn stage_analyze(
    units_dir: &Path,
    options: &AnalyzeOptions,
    out: &Path,
) -> Result<AnalyzeOutput, PipelineError> {
    ensure_dir(out)?;
    let units_manifest = verify_stage_dir(units_dir)?;
    let units = load_units_csv(&units_dir.join("units.csv"))?;
    let gains = load_gains_csv(&units_dir.join("gains.csv"))?;

    let spec_override = match &options.spec_path {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(io_err(path))?;
            let spec: CoarseningSpec =
                serde_json::from_slice(&bytes).map_err(|source| PipelineError::Json {
                    path: path.display().to_string(),
                    source,
                })?;
            Some(spec)
        }
        None => None,
    };

    let mut plan = ExperimentPlan::new(options.iv);
    plan.grouping = options.grouping;
    plan.weighted = options.weighted;
    plan.min_group = options.min_group;
    plan.spec_override = spec_override.clone();

    let run = |plan: &ExperimentPlan| -> Result<AnalyzeOutput, PipelineError> {
        match options.kind {
            AnalysisKind::Quintiles => match plan.grouping {
                Grouping::None => Ok(AnalyzeOutput {
                    comparisons: quintile_cem(&units, plan)?,
                    summaries: Vec::new(),
                }),
                _ => {
                    let (comparisons, summaries) = grouped_cem(&units, plan)?;
                    Ok(AnalyzeOutput {
                        comparisons,
                        summaries,
                    })
                }
            },
            AnalysisKind::FemaleMentors => {
                let mut comparisons = Vec::new();
                for gender in [Gender::Female, Gender::Male] {
                    comparisons.extend(female_mentor_cem(&units, gender, options.min_group)?);
                }
                Ok(AnalyzeOutput {
                    comparisons,
                    summaries: Vec::new(),
                })
            }
            AnalysisKind::MentorGain => Ok(AnalyzeOutput {
                comparisons: mentor_gain_comparison(&gains, options.min_group)?,
                summaries: Vec::new(),
            }),
        }
    };

    // Worker count must never change the result, only the wall time.
    let output = match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .expect("thread pool")
            .install(|| run(&plan)),
        None => run(&plan),
    }?;

    write_comparisons_csv(&out.join("comparisons.csv"), &output.comparisons)?;
    write_group_summaries_csv(&out.join("group_summaries.csv"), &output.summaries)?;

    let mut inputs = BTreeMap::new();
    inputs.insert("units_manifest".to_string(), manifest_digest(units_dir)?);
    if let (Some(path), Some(_)) = (&options.spec_path, &spec_override) {
        inputs.insert("spec_override".to_string(), digest_file(path)?);
    }
    let run_config = serde_json::json!({
        "options": options,
        "spec": spec_override,
        "n_units": units.len(),
        "n_gain_records": gains.len(),
    });
    let run_path = out.join("run_manifest.json");
    std::fs::write(
        &run_path,
        serde_json::to_string_pretty(&run_config).expect("serializes"),
    )
    .map_err(io_err(&run_path))?;
    write_manifest(
        out,
        "analyze",
        digest_config(options),
        inputs,
        &["comparisons.csv", "group_summaries.csv", "run_manifest.json"],
        units_manifest.corpus_fingerprint,
    )?;
    Ok(output)
}

// ---------------------------------------------------------------------
// match (single pair, exposed for inspection)

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchOptions {
    pub iv: IndependentVariable,
    /// Which adjacent pair to match: 1 compares the lowest two quantile
    /// groups.
    pub pair: usize,
    pub weighted: bool,
    pub spec_path: Option<PathBuf>,
}

pub fn stage_match(
    units_dir: &Path,
    options: &MatchOptions,
    out: &Path,
) -> Result<ComparisonResult, PipelineError> {
    ensure_dir(out)?;
    let units_manifest = verify_stage_dir(units_dir)?;
    let units = load_units_csv(&units_dir.join("units.csv"))?;
    let pair = options.pair.clamp(1, 4);
    let mut plan = ExperimentPlan::new(options.iv);
    plan.weighted = options.weighted;
    if let Some(path) = &options.spec_path {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        plan.spec_override = Some(serde_json::from_slice(&bytes).map_err(|source| {
            PipelineError::Json {
                path: path.display().to_string(),
                source,
            }
        })?);
    }
    let rows = quintile_cem(&units, &plan)?;
    let row = rows
        .into_iter()
        .nth(pair - 1)
        .expect("four comparisons exist");
    write_comparisons_csv(&out.join("comparisons.csv"), std::slice::from_ref(&row))?;
    let mut inputs = BTreeMap::new();
    inputs.insert("units_manifest".to_string(), manifest_digest(units_dir)?);
    write_manifest(
        out,
        "match",
        digest_config(options),
        inputs,
        &["comparisons.csv"],
        units_manifest.corpus_fingerprint,
    )?;
    Ok(row)
}

// ---------------------------------------------------------------------
// report

pub fn stage_report(
    analysis_dir: &Path,
    ground_truth_dir: Option<&Path>,
    out: &Path,
) -> Result<(), PipelineError> {
    ensure_dir(out)?;
    let analysis_manifest = verify_stage_dir(analysis_dir)?;
    let comparisons = read_comparisons_csv(&analysis_dir.join("comparisons.csv"))?;

    std::fs::copy(
        analysis_dir.join("comparisons.csv"),
        out.join("table_comparisons.csv"),
    )
    .map_err(io_err(analysis_dir))?;
    let summaries_src = analysis_dir.join("group_summaries.csv");
    std::fs::copy(&summaries_src, out.join("table_group_summaries.csv"))
        .map_err(io_err(&summaries_src))?;

    let chart = render_delta_chart("Relative change in post-mentorship impact", &comparisons);
    let chart_path = out.join("chart_deltas.svg");
    std::fs::write(&chart_path, chart).map_err(io_err(&chart_path))?;

    let mut output_files = vec![
        "table_comparisons.csv",
        "table_group_summaries.csv",
        "chart_deltas.svg",
    ];
    let mut inputs = BTreeMap::new();
    inputs.insert("analysis_manifest".to_string(), manifest_digest(analysis_dir)?);

    if let Some(truth_dir) = ground_truth_dir {
        let truth_manifest = verify_stage_dir(truth_dir)?;
        // The ground truth must describe the same corpus this analysis
        // descends from.
        if truth_manifest.corpus_fingerprint != analysis_manifest.corpus_fingerprint {
            return Err(PipelineError::ManifestMismatch {
                dir: truth_dir.display().to_string(),
                detail: "ground truth corpus fingerprint differs from analysis chain".to_string(),
            });
        }
        let truth_path = truth_dir.join("ground_truth.json");
        let truth: GroundTruth =
            serde_json::from_slice(&std::fs::read(&truth_path).map_err(io_err(&truth_path))?)
                .map_err(|source| PipelineError::Json {
                    path: truth_path.display().to_string(),
                    source,
                })?;
        let rows = ground_truth_report(&truth, &comparisons, truth.seed)?;
        let gt_path = out.join("ground_truth_report.csv");
        let mut writer = csv::Writer::from_path(&gt_path).map_err(ReportError::from)?;
        writer
            .write_record(["label", "estimated_delta", "planted_delta", "abs_error", "rel_error"])
            .map_err(ReportError::from)?;
        for row in &rows {
            writer
                .write_record([
                    row.label.clone(),
                    row.estimated_delta.map(|v| v.to_string()).unwrap_or_default(),
                    row.planted_delta.to_string(),
                    row.abs_error.map(|v| v.to_string()).unwrap_or_default(),
                    row.rel_error.map(|v| v.to_string()).unwrap_or_default(),
                ])
                .map_err(ReportError::from)?;
        }
        writer.flush().map_err(io_err(&gt_path))?;
        inputs.insert("ground_truth_manifest".to_string(), manifest_digest(truth_dir)?);
        output_files.push("ground_truth_report.csv");
    }

    write_manifest(
        out,
        "report",
        digest_config(&()),
        inputs,
        &output_files,
        analysis_manifest.corpus_fingerprint,
    )?;
    Ok(())
}

/// Read back a comparisons CSV written by `write_comparisons_csv`.
pub fn read_comparisons_csv(path: &Path) -> Result<Vec<ComparisonResult>, PipelineError> {
    let mut reader = csv::Reader::from_path(path).map_err(ReportError::from)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(ReportError::from)?;
        let get = |i: usize| record.get(i).unwrap_or("").to_string();
        let opt_f = |i: usize| -> Result<Option<f64>, PipelineError> {
            let s = get(i);
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(parse_field(path, &s)?))
            }
        };
        rows.push(ComparisonResult {
            group: (!get(0).is_empty()).then(|| get(0)),
            label: get(1),
            n_treated: parse_field(path, &get(2))?,
            n_control: parse_field(path, &get(3))?,
            n_matched_treated: parse_field(path, &get(4))?,
            n_matched_control: parse_field(path, &get(5))?,
            l1: opt_f(6)?,
            l1_before: None,
            imp_control: opt_f(7)?,
            imp_treatment: opt_f(8)?,
            delta_pct: opt_f(9)?,
            p_t: opt_f(10)?,
            p_ks: opt_f(11)?,
            flagged_small: false,
            diagnostic: (!get(13).is_empty()).then(|| get(13)),
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------
// convenience: full in-process pipeline over a directory tree

/// Run ingest through analyze under `root`, returning the analyze output.
/// Stage directories are created as `root/{corpus,profiles,dyads,units,
/// analysis}`.
#[allow(clippy::too_many_arguments)]
pub fn run_full_pipeline(
    publications: &Path,
    citations: &Path,
    gender: &Path,
    ranks: &Path,
    taxonomy: &Path,
    corpus_config: CorpusConfig,
    dyad_params: DyadParams,
    options: &AnalyzeOptions,
    root: &Path,
) -> Result<AnalyzeOutput, PipelineError> {
    let corpus_dir = root.join("corpus");
    let profiles_dir = root.join("profiles");
    let dyads_dir = root.join("dyads");
    let units_dir = root.join("units");
    let analysis_dir = root.join("analysis");
    stage_ingest(publications, citations, corpus_config, &corpus_dir)?;
    stage_profiles(
        &corpus_dir,
        gender,
        ranks,
        taxonomy,
        ProfileStageConfig::default(),
        &profiles_dir,
    )?;
    stage_dyads(&corpus_dir, &profiles_dir, dyad_params, &dyads_dir)?;
    stage_metrics(&corpus_dir, &profiles_dir, &dyads_dir, &units_dir)?;
    stage_analyze(&units_dir, options, &analysis_dir)
}

/// Descriptive statistics row: deltas recomputed from the stored means must
/// reproduce the stored delta. Used by report validation and tests.
pub fn delta_consistent(row: &ComparisonResult, tolerance: f64) -> bool {
    match (row.imp_control, row.imp_treatment, row.delta_pct) {
        (Some(c), Some(t), Some(d)) => relative_delta(c, t)
            .map(|redo| (redo - d).abs() <= tolerance)
            .unwrap_or(false),
        _ => true,
    }
}
