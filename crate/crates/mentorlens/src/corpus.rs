//! Publication corpus: loading, validation, and immutable temporal indices.
//!
//! A [`Corpus`] owns the publication records plus the derived indices needed
//! by every downstream stage: per-paper in-citations grouped by citing year,
//! per-scholar annual citation counts, and the time-resolved collaboration
//! degree. All queries are read-only once the corpus is built.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub type PaperIdx = u32;
pub type ScholarIdx = u32;
pub type AffilIdx = u32;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {malformed} of {total} lines malformed (limit {limit:.4})")]
    TooManyMalformed {
        path: String,
        malformed: usize,
        total: usize,
        limit: f64,
    },
    #[error("unknown paper id `{0}`")]
    UnknownPaper(String),
    #[error("unknown scholar id `{0}`")]
    UnknownScholar(String),
    #[error("corpus has no publications")]
    Empty,
}

/// One author slot on a publication. The affiliation is whatever the record
/// carries for that author on that paper; it may be absent.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct AuthorRecord {
    pub scholar_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation_id: Option<String>,
}

/// Raw publication record as it appears on disk (one JSON object per line).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct PublicationRecord {
    pub paper_id: String,
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
    pub authors: Vec<AuthorRecord>,
    #[serde(default)]
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub min_year: i32,
    /// Last year with data; citation windows that extend past it are treated
    /// as unobserved.
    pub horizon_year: i32,
    /// Hard-failure threshold for the fraction of malformed input lines.
    pub max_malformed_fraction: f64,
    /// Drop citation edges whose citing and cited papers share an author.
    pub exclude_author_self_citations: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_year: 1900,
            horizon_year: 2015,
            max_malformed_fraction: 0.01,
            exclude_author_self_citations: false,
        }
    }
}

/// Counters accumulated while loading; all drops are data, not errors.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub publications_total_lines: usize,
    pub publications_malformed: usize,
    pub publications_loaded: usize,
    pub citation_total_lines: usize,
    pub citation_malformed: usize,
    pub edges_loaded: u64,
    pub dangling_edges_dropped: u64,
    pub self_citation_edges_dropped: u64,
    pub duplicate_edges_dropped: u64,
    pub author_self_citation_edges_dropped: u64,
}

/// Internal, index-interned publication.
#[derive(Debug, Clone)]
pub struct Paper {
    pub id: String,
    pub year: i32,
    pub venue: Option<String>,
    /// (scholar, affiliation) in author order.
    pub authors: Vec<(ScholarIdx, Option<AffilIdx>)>,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone)]
struct ScholarIndex {
    /// Papers sorted by (year, paper index).
    papers: Vec<PaperIdx>,
    /// (year, citations received in that year), sorted by year.
    annual_citations: Vec<(i32, u32)>,
    /// (year, citations received in all years <= year), sorted by year.
    cumulative_citations: Vec<(i32, u64)>,
    /// (year, distinct coauthors over all papers with year <= year).
    degree_timeline: Vec<(i32, u32)>,
}

/// Immutable publication corpus with temporal indices.
///
/// Construction is single-writer; afterwards every query is `&self` and safe
/// to issue from any number of threads.
pub struct Corpus {
    config: CorpusConfig,
    papers: Vec<Paper>,
    paper_ids: HashMap<String, PaperIdx>,
    scholar_names: Vec<String>,
    scholar_ids: HashMap<String, ScholarIdx>,
    affiliation_names: Vec<String>,
    /// Per paper: (citing year, number of citing papers in that year), sorted.
    in_citations: Vec<Vec<(i32, u32)>>,
    scholars: Vec<ScholarIndex>,
    edges: Vec<(PaperIdx, PaperIdx)>,
    report: LoadReport,
}

impl fmt::Debug for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Corpus")
            .field("papers", &self.papers.len())
            .field("scholars", &self.scholar_names.len())
            .field("edges", &self.edges.len())
            .field("horizon_year", &self.config.horizon_year)
            .finish()
    }
}

/// Parse one publications line; `None` marks the line malformed.
fn parse_publication_line(line: &str, config: &CorpusConfig) -> Option<PublicationRecord> {
    let record: PublicationRecord = serde_json::from_str(line).ok()?;
    if record.year < config.min_year || record.year > config.horizon_year {
        return None;
    }
    if record.authors.is_empty() {
        return None;
    }
    let mut seen = HashSet::with_capacity(record.authors.len());
    for author in &record.authors {
        if author.scholar_id.is_empty() || !seen.insert(author.scholar_id.as_str()) {
            return None;
        }
    }
    Some(record)
}

pub fn load_corpus(
    publications_path: &Path,
    citations_path: &Path,
    config: CorpusConfig,
) -> Result<Corpus, CorpusError> {
    let pub_file = File::open(publications_path).map_err(|source| CorpusError::Io {
        path: publications_path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    let mut report = LoadReport::default();
    for line in BufReader::new(pub_file).lines() {
        let line = line.map_err(|source| CorpusError::Io {
            path: publications_path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.publications_total_lines += 1;
        match parse_publication_line(&line, &config) {
            Some(record) => records.push(record),
            None => report.publications_malformed += 1,
        }
    }
    check_malformed(
        publications_path,
        report.publications_malformed,
        report.publications_total_lines,
        config.max_malformed_fraction,
    )?;

    let cite_file = File::open(citations_path).map_err(|source| CorpusError::Io {
        path: citations_path.display().to_string(),
        source,
    })?;
    let mut edge_records = Vec::new();
    for line in BufReader::new(cite_file).lines() {
        let line = line.map_err(|source| CorpusError::Io {
            path: citations_path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        report.citation_total_lines += 1;
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(citing), Some(cited), None) if !citing.is_empty() && !cited.is_empty() => {
                edge_records.push((citing.to_string(), cited.to_string()));
            }
            _ => report.citation_malformed += 1,
        }
    }
    check_malformed(
        citations_path,
        report.citation_malformed,
        report.citation_total_lines,
        config.max_malformed_fraction,
    )?;

    build_corpus(records, edge_records, config, report)
}

fn check_malformed(
    path: &Path,
    malformed: usize,
    total: usize,
    limit: f64,
) -> Result<(), CorpusError> {
    if total > 0 && (malformed as f64) / (total as f64) > limit {
        return Err(CorpusError::TooManyMalformed {
            path: path.display().to_string(),
            malformed,
            total,
            limit,
        });
    }
    Ok(())
}

/// Build a corpus from already-parsed records. The loader funnels into this;
/// generators can call it directly to skip the file round-trip.
pub fn build_from_records(
    records: Vec<PublicationRecord>,
    edges: Vec<(String, String)>,
    config: CorpusConfig,
) -> Result<Corpus, CorpusError> {
    let mut report = LoadReport::default();
    report.publications_total_lines = records.len();
    report.citation_total_lines = edges.len();
    let mut kept = Vec::with_capacity(records.len());
    for record in records {
        // Re-validate so generated and loaded corpora obey the same rules.
        match parse_validated(record, &config) {
            Some(r) => kept.push(r),
            None => report.publications_malformed += 1,
        }
    }
    build_corpus(kept, edges, config, report)
}

fn parse_validated(record: PublicationRecord, config: &CorpusConfig) -> Option<PublicationRecord> {
    if record.year < config.min_year || record.year > config.horizon_year {
        return None;
    }
    if record.authors.is_empty() {
        return None;
    }
    let mut seen = HashSet::with_capacity(record.authors.len());
    for author in &record.authors {
        if author.scholar_id.is_empty() || !seen.insert(author.scholar_id.as_str()) {
            return None;
        }
    }
    Some(record)
}

fn build_corpus(
    mut records: Vec<PublicationRecord>,
    edge_records: Vec<(String, String)>,
    config: CorpusConfig,
    mut report: LoadReport,
) -> Result<Corpus, CorpusError> {
    // Canonical paper order: sorted by id. Duplicated ids count as malformed
    // (first occurrence wins).
    records.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));
    records.dedup_by(|dup, kept| {
        let same = dup.paper_id == kept.paper_id;
        if same {
            report.publications_malformed += 1;
        }
        same
    });
    if records.is_empty() {
        return Err(CorpusError::Empty);
    }
    report.publications_loaded = records.len();

    let mut scholar_names: Vec<String> = records
        .iter()
        .flat_map(|r| r.authors.iter().map(|a| a.scholar_id.clone()))
        .collect();
    scholar_names.sort();
    scholar_names.dedup();
    let scholar_ids: HashMap<String, ScholarIdx> = scholar_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i as ScholarIdx))
        .collect();

    let mut affiliation_names: Vec<String> = records
        .iter()
        .flat_map(|r| r.authors.iter().filter_map(|a| a.affiliation_id.clone()))
        .collect();
    affiliation_names.sort();
    affiliation_names.dedup();
    let affil_ids: HashMap<&str, AffilIdx> = affiliation_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as AffilIdx))
        .collect();

    let mut papers = Vec::with_capacity(records.len());
    let mut paper_ids = HashMap::with_capacity(records.len());
    for (idx, record) in records.into_iter().enumerate() {
        let authors = record
            .authors
            .iter()
            .map(|a| {
                (
                    scholar_ids[&a.scholar_id],
                    a.affiliation_id.as_deref().map(|af| affil_ids[af]),
                )
            })
            .collect();
        paper_ids.insert(record.paper_id.clone(), idx as PaperIdx);
        papers.push(Paper {
            id: record.paper_id,
            year: record.year,
            venue: record.venue,
            authors,
            keywords: record.keywords,
        });
    }

    // Resolve, filter, and canonicalize edges.
    let mut edges: Vec<(PaperIdx, PaperIdx)> = Vec::with_capacity(edge_records.len());
    for (citing, cited) in edge_records {
        let (Some(&citing_idx), Some(&cited_idx)) =
            (paper_ids.get(&citing), paper_ids.get(&cited))
        else {
            report.dangling_edges_dropped += 1;
            continue;
        };
        if citing_idx == cited_idx {
            report.self_citation_edges_dropped += 1;
            continue;
        }
        edges.push((citing_idx, cited_idx));
    }
    edges.sort_unstable();
    let before = edges.len();
    edges.dedup();
    report.duplicate_edges_dropped += (before - edges.len()) as u64;

    if config.exclude_author_self_citations {
        let shares_author = |a: PaperIdx, b: PaperIdx| {
            papers[a as usize]
                .authors
                .iter()
                .any(|(s, _)| papers[b as usize].authors.iter().any(|(t, _)| t == s))
        };
        let before = edges.len();
        edges.retain(|&(citing, cited)| !shares_author(citing, cited));
        report.author_self_citation_edges_dropped += (before - edges.len()) as u64;
    }
    report.edges_loaded = edges.len() as u64;

    // Per-paper in-citations grouped by citing year.
    let mut in_citation_years: Vec<Vec<i32>> = vec![Vec::new(); papers.len()];
    for &(citing, cited) in &edges {
        in_citation_years[cited as usize].push(papers[citing as usize].year);
    }
    let in_citations: Vec<Vec<(i32, u32)>> = in_citation_years
        .into_iter()
        .map(|mut years| {
            years.sort_unstable();
            let mut grouped: Vec<(i32, u32)> = Vec::new();
            for year in years {
                match grouped.last_mut() {
                    Some((y, n)) if *y == year => *n += 1,
                    _ => grouped.push((year, 1)),
                }
            }
            grouped
        })
        .collect();

    // Per-scholar paper lists, citation tallies, and degree timelines.
    let mut papers_by_scholar: Vec<Vec<PaperIdx>> = vec![Vec::new(); scholar_names.len()];
    for (idx, paper) in papers.iter().enumerate() {
        for &(scholar, _) in &paper.authors {
            papers_by_scholar[scholar as usize].push(idx as PaperIdx);
        }
    }
    for list in &mut papers_by_scholar {
        list.sort_by_key(|&p| (papers[p as usize].year, p));
    }

    let mut annual: Vec<HashMap<i32, u32>> = vec![HashMap::new(); scholar_names.len()];
    for &(citing, cited) in &edges {
        let year = papers[citing as usize].year;
        for &(scholar, _) in &papers[cited as usize].authors {
            *annual[scholar as usize].entry(year).or_insert(0) += 1;
        }
    }

    let scholars = papers_by_scholar
        .into_iter()
        .zip(annual)
        .map(|(paper_list, annual_map)| {
            let mut annual_citations: Vec<(i32, u32)> = annual_map.into_iter().collect();
            annual_citations.sort_unstable();
            let mut cumulative = 0u64;
            let cumulative_citations = annual_citations
                .iter()
                .map(|&(year, n)| {
                    cumulative += n as u64;
                    (year, cumulative)
                })
                .collect();

            // The scholar is an author of every own paper, so the set always
            // contains them once any paper was seen; subtract one.
            let mut coauthors: HashSet<ScholarIdx> = HashSet::new();
            let mut degree_timeline: Vec<(i32, u32)> = Vec::new();
            let mut i = 0;
            while i < paper_list.len() {
                let year = papers[paper_list[i] as usize].year;
                while i < paper_list.len() && papers[paper_list[i] as usize].year == year {
                    for &(other, _) in &papers[paper_list[i] as usize].authors {
                        coauthors.insert(other);
                    }
                    i += 1;
                }
                degree_timeline.push((year, coauthors.len().saturating_sub(1) as u32));
            }
            ScholarIndex {
                papers: paper_list,
                annual_citations,
                cumulative_citations,
                degree_timeline,
            }
        })
        .collect();

    Ok(Corpus {
        config,
        papers,
        paper_ids,
        scholar_names,
        scholar_ids,
        affiliation_names,
        in_citations,
        scholars,
        edges,
        report,
    })
}

impl Corpus {
    pub fn config(&self) -> &CorpusConfig {
        &self.config
    }

    pub fn horizon_year(&self) -> i32 {
        self.config.horizon_year
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn n_papers(&self) -> usize {
        self.papers.len()
    }

    pub fn n_scholars(&self) -> usize {
        self.scholar_names.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn papers(&self) -> &[Paper] {
        &self.papers
    }

    pub fn edges(&self) -> &[(PaperIdx, PaperIdx)] {
        &self.edges
    }

    pub fn paper(&self, idx: PaperIdx) -> &Paper {
        &self.papers[idx as usize]
    }

    pub fn paper_idx(&self, paper_id: &str) -> Result<PaperIdx, CorpusError> {
        self.paper_ids
            .get(paper_id)
            .copied()
            .ok_or_else(|| CorpusError::UnknownPaper(paper_id.to_string()))
    }

    pub fn scholar_idx(&self, scholar_id: &str) -> Result<ScholarIdx, CorpusError> {
        self.scholar_ids
            .get(scholar_id)
            .copied()
            .ok_or_else(|| CorpusError::UnknownScholar(scholar_id.to_string()))
    }

    pub fn scholar_id(&self, idx: ScholarIdx) -> &str {
        &self.scholar_names[idx as usize]
    }

    pub fn affiliation_id(&self, idx: AffilIdx) -> &str {
        &self.affiliation_names[idx as usize]
    }

    pub fn affiliation_idx(&self, affiliation_id: &str) -> Option<AffilIdx> {
        self.affiliation_names
            .binary_search_by(|a| a.as_str().cmp(affiliation_id))
            .ok()
            .map(|i| i as AffilIdx)
    }

    /// Papers of a scholar sorted by (year, paper index).
    pub fn papers_of(&self, scholar: ScholarIdx) -> &[PaperIdx] {
        &self.scholars[scholar as usize].papers
    }

    /// Last publication year for which a full five-year citation window is
    /// observed.
    pub fn last_c5_year(&self) -> i32 {
        self.config.horizon_year - 5
    }

    /// Citations accumulated within five years of publication (inclusive of
    /// the publication year). `None` when the window extends past the
    /// horizon and the count would be censored.
    pub fn c5(&self, paper_id: &str) -> Result<Option<u32>, CorpusError> {
        Ok(self.c5_by_idx(self.paper_idx(paper_id)?))
    }

    pub fn c5_by_idx(&self, paper: PaperIdx) -> Option<u32> {
        let year = self.papers[paper as usize].year;
        if year > self.last_c5_year() {
            return None;
        }
        let window_end = year + 5;
        let counts = &self.in_citations[paper as usize];
        let sum = counts
            .iter()
            .filter(|&&(y, _)| y >= year && y <= window_end)
            .map(|&(_, n)| n)
            .sum();
        Some(sum)
    }

    /// Number of citation edges received by the scholar's papers from citing
    /// papers published in `year`.
    pub fn annual_citations(&self, scholar_id: &str, year: i32) -> Result<u32, CorpusError> {
        let idx = self.scholar_idx(scholar_id)?;
        Ok(self.annual_citations_by_idx(idx, year))
    }

    pub fn annual_citations_by_idx(&self, scholar: ScholarIdx, year: i32) -> u32 {
        let annual = &self.scholars[scholar as usize].annual_citations;
        match annual.binary_search_by_key(&year, |&(y, _)| y) {
            Ok(i) => annual[i].1,
            Err(_) => 0,
        }
    }

    /// Total citations received by the scholar's papers from citing papers
    /// published in any year `<= year`.
    pub fn citations_through(&self, scholar: ScholarIdx, year: i32) -> u64 {
        let cumulative = &self.scholars[scholar as usize].cumulative_citations;
        match cumulative.binary_search_by_key(&year, |&(y, _)| y) {
            Ok(i) => cumulative[i].1,
            Err(0) => 0,
            Err(i) => cumulative[i - 1].1,
        }
    }

    /// Distinct coauthors over all the scholar's papers with publication
    /// year `<= year`. The collaboration network only grows, so this is
    /// non-decreasing in `year`.
    pub fn collaboration_degree(&self, scholar_id: &str, year: i32) -> Result<u32, CorpusError> {
        let idx = self.scholar_idx(scholar_id)?;
        Ok(self.collaboration_degree_by_idx(idx, year))
    }

    pub fn collaboration_degree_by_idx(&self, scholar: ScholarIdx, year: i32) -> u32 {
        let timeline = &self.scholars[scholar as usize].degree_timeline;
        match timeline.binary_search_by_key(&year, |&(y, _)| y) {
            Ok(i) => timeline[i].1,
            Err(0) => 0,
            Err(i) => timeline[i - 1].1,
        }
    }

    pub fn first_pub_year(&self, scholar: ScholarIdx) -> Option<i32> {
        self.scholars[scholar as usize]
            .papers
            .first()
            .map(|&p| self.papers[p as usize].year)
    }

    pub fn last_pub_year(&self, scholar: ScholarIdx) -> Option<i32> {
        self.scholars[scholar as usize]
            .papers
            .last()
            .map(|&p| self.papers[p as usize].year)
    }
}

/// Per-discipline author-count screening row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisciplineStatsRow {
    pub discipline: String,
    pub papers: usize,
    pub mean_authors: f64,
    pub q95_authors: f64,
    pub dyad_count: usize,
    pub flagged: bool,
}

/// Author-count statistics per discipline, used to screen out disciplines
/// whose collaboration size makes coauthorship a meaningless mentorship
/// signal. Papers are classified by plurality vote of their keywords.
pub fn discipline_stats(
    corpus: &Corpus,
    taxonomy: &crate::scholars::DisciplineTaxonomy,
    dyad_counts: Option<&HashMap<String, usize>>,
    mean_author_threshold: f64,
) -> Vec<DisciplineStatsRow> {
    let mut per_discipline: HashMap<&str, Vec<u32>> = HashMap::new();
    for paper in &corpus.papers {
        let mut votes: HashMap<&str, u32> = HashMap::new();
        for keyword in &paper.keywords {
            if let Some(d) = taxonomy.discipline_of(keyword) {
                *votes.entry(d).or_insert(0) += 1;
            }
        }
        let Some(discipline) = plurality(&votes) else {
            continue;
        };
        per_discipline
            .entry(discipline)
            .or_default()
            .push(paper.authors.len() as u32);
    }
    let mut rows: Vec<DisciplineStatsRow> = per_discipline
        .into_iter()
        .map(|(discipline, mut counts)| {
            counts.sort_unstable();
            let total: u64 = counts.iter().map(|&c| c as u64).sum();
            let mean = total as f64 / counts.len() as f64;
            // Nearest-rank 95th percentile.
            let rank = ((counts.len() as f64) * 0.95).ceil() as usize;
            let q95 = counts[rank.clamp(1, counts.len()) - 1] as f64;
            DisciplineStatsRow {
                discipline: discipline.to_string(),
                papers: counts.len(),
                mean_authors: mean,
                q95_authors: q95,
                dyad_count: dyad_counts
                    .and_then(|m| m.get(discipline).copied())
                    .unwrap_or(0),
                flagged: mean > mean_author_threshold,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.discipline.cmp(&b.discipline));
    rows
}

fn plurality<'a>(votes: &HashMap<&'a str, u32>) -> Option<&'a str> {
    votes
        .iter()
        .max_by(|(name_a, n_a), (name_b, n_b)| n_a.cmp(n_b).then(name_b.cmp(name_a)))
        .map(|(&name, _)| name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn paper(id: &str, year: i32, authors: &[(&str, Option<&str>)]) -> PublicationRecord {
        PublicationRecord {
            paper_id: id.to_string(),
            year,
            venue: None,
            authors: authors
                .iter()
                .map(|(s, a)| AuthorRecord {
                    scholar_id: s.to_string(),
                    affiliation_id: a.map(|x| x.to_string()),
                })
                .collect(),
            keywords: vec![],
        }
    }

    fn edge(citing: &str, cited: &str) -> (String, String) {
        (citing.to_string(), cited.to_string())
    }

    #[test]
    fn load_counts_and_dangling_edges() {
        let records = vec![
            paper("a", 2000, &[("s1", None)]),
            paper("b", 2001, &[("s1", None), ("s2", None)]),
            paper("c", 2002, &[("s3", None)]),
        ];
        let edges = vec![edge("b", "a"), edge("c", "a"), edge("zz", "a")];
        let corpus = build_from_records(records, edges, CorpusConfig::default()).unwrap();
        assert_eq!(corpus.n_papers(), 3);
        assert_eq!(corpus.n_edges(), 2);
        assert_eq!(corpus.report().dangling_edges_dropped, 1);
    }

    #[test]
    fn malformed_records_are_rejected_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let pubs = dir.path().join("pubs.jsonl");
        let cites = dir.path().join("cites.tsv");
        let mut f = std::fs::File::create(&pubs).unwrap();
        writeln!(f, r#"{{"paper_id":"a","year":2000,"authors":[{{"scholar_id":"s1"}}]}}"#).unwrap();
        writeln!(f, r#"{{"paper_id":"b","authors":[{{"scholar_id":"s1"}}]}}"#).unwrap();
        writeln!(f, r#"{{"paper_id":"c","year":2001,"authors":[{{"scholar_id":"s2"}}]}}"#).unwrap();
        std::fs::write(&cites, "").unwrap();
        let config = CorpusConfig {
            max_malformed_fraction: 0.5,
            ..CorpusConfig::default()
        };
        let corpus = load_corpus(&pubs, &cites, config).unwrap();
        assert_eq!(corpus.n_papers(), 2);
        assert_eq!(corpus.report().publications_malformed, 1);
    }

    #[test]
    fn malformed_fraction_over_limit_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let pubs = dir.path().join("pubs.jsonl");
        let cites = dir.path().join("cites.tsv");
        std::fs::write(&pubs, "not json\nnot json either\n").unwrap();
        std::fs::write(&cites, "").unwrap();
        let err = load_corpus(&pubs, &cites, CorpusConfig::default()).unwrap_err();
        assert!(matches!(err, CorpusError::TooManyMalformed { .. }));
    }

    #[test]
    fn c5_window_and_horizon() {
        let records = vec![
            paper("p", 2010, &[("s1", None)]),
            paper("q", 2012, &[("s2", None)]),
            paper("c1", 2011, &[("x", None)]),
            paper("c2", 2012, &[("x", None)]),
            paper("c3", 2016, &[("x", None)]) , // outside [2010, 2015]? year 2016 > horizon -> rejected
        ];
        // horizon 2016 so the 2016 citer loads but falls outside p's window
        // intersected with... use horizon 2015 with citer at 2015 instead.
        let records = {
            let mut r = records;
            r.pop();
            r.push(paper("c3", 2015, &[("x", None)]));
            r
        };
        let edges = vec![edge("c1", "p"), edge("c2", "p"), edge("c3", "q")];
        let corpus = build_from_records(records, edges, CorpusConfig::default()).unwrap();
        // 2010 paper: window [2010,2015] fully observed under horizon 2015.
        assert_eq!(corpus.c5("p").unwrap(), Some(2));
        // 2012 paper: window reaches 2017 > horizon, censored.
        assert_eq!(corpus.c5("q").unwrap(), None);
        assert!(matches!(
            corpus.c5("nope"),
            Err(CorpusError::UnknownPaper(_))
        ));
    }

    #[test]
    fn c5_zero_for_uncited_paper() {
        let records = vec![paper("p", 2000, &[("s1", None)])];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        assert_eq!(corpus.c5("p").unwrap(), Some(0));
    }

    #[test]
    fn annual_citations_counts_edges_per_year() {
        let records = vec![
            paper("p1", 2000, &[("s", None)]),
            paper("p2", 2001, &[("s", None)]),
            paper("c1", 2005, &[("x", None)]),
            paper("c2", 2005, &[("y", None)]),
            paper("c3", 2007, &[("x", None)]),
            paper("c4", 2007, &[("y", None)]),
        ];
        let edges = vec![
            edge("c1", "p1"),
            edge("c2", "p1"),
            edge("c3", "p1"),
            edge("c4", "p2"),
        ];
        let corpus = build_from_records(records, edges, CorpusConfig::default()).unwrap();
        assert_eq!(corpus.annual_citations("s", 2005).unwrap(), 2);
        // one citation to each of two papers in 2007
        assert_eq!(corpus.annual_citations("s", 2007).unwrap(), 2);
        assert_eq!(corpus.annual_citations("s", 1999).unwrap(), 0);
        assert!(corpus.annual_citations("ghost", 2005).is_err());
    }

    #[test]
    fn collaboration_degree_grows_with_the_network() {
        let records = vec![
            paper("j1", 2000, &[("a", None), ("b", None), ("c", None)]),
            paper("j2", 2003, &[("a", None), ("d", None)]),
        ];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        assert_eq!(corpus.collaboration_degree("a", 2001).unwrap(), 2);
        assert_eq!(corpus.collaboration_degree("a", 2003).unwrap(), 3);
        assert_eq!(corpus.collaboration_degree("a", 1999).unwrap(), 0);
    }

    #[test]
    fn solo_author_has_degree_zero() {
        let records = vec![
            paper("p1", 2000, &[("solo", None)]),
            paper("p2", 2005, &[("solo", None)]),
        ];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        for year in [2000, 2003, 2010] {
            assert_eq!(corpus.collaboration_degree("solo", year).unwrap(), 0);
        }
    }

    #[test]
    fn self_citation_edges_are_rejected_at_load() {
        let records = vec![paper("p", 2000, &[("s", None)]), paper("q", 2001, &[("s", None)])];
        let edges = vec![edge("p", "p"), edge("q", "p")];
        let corpus = build_from_records(records, edges, CorpusConfig::default()).unwrap();
        assert_eq!(corpus.n_edges(), 1);
        assert_eq!(corpus.report().self_citation_edges_dropped, 1);
    }

    #[test]
    fn author_self_citations_can_be_excluded() {
        let records = vec![
            paper("p", 2000, &[("s", None)]),
            paper("q", 2002, &[("s", None), ("t", None)]),
            paper("r", 2002, &[("u", None)]),
        ];
        let edges = vec![edge("q", "p"), edge("r", "p")];
        let config = CorpusConfig {
            exclude_author_self_citations: true,
            ..CorpusConfig::default()
        };
        let corpus = build_from_records(records, edges, config).unwrap();
        assert_eq!(corpus.c5("p").unwrap(), Some(1));
        assert_eq!(corpus.report().author_self_citation_edges_dropped, 1);
    }

    #[test]
    fn discipline_stats_screen_author_counts() {
        let mut map = HashMap::new();
        map.insert("kbio".to_string(), "Biology".to_string());
        map.insert("kphys".to_string(), "Physics".to_string());
        let taxonomy = crate::scholars::DisciplineTaxonomy::new(
            map,
            crate::scholars::DEFAULT_DISCIPLINES
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
        .unwrap();
        let with_kw = |id: &str, n_authors: usize, kw: &str| {
            let authors: Vec<(String, Option<String>)> = (0..n_authors)
                .map(|i| (format!("{id}_a{i}"), None))
                .collect();
            PublicationRecord {
                paper_id: id.to_string(),
                year: 2000,
                venue: None,
                authors: authors
                    .into_iter()
                    .map(|(s, a)| AuthorRecord {
                        scholar_id: s,
                        affiliation_id: a,
                    })
                    .collect(),
                keywords: vec![kw.to_string()],
            }
        };
        let records = vec![
            with_kw("b1", 2, "kbio"),
            with_kw("b2", 2, "kbio"),
            with_kw("b3", 10, "kbio"),
            with_kw("f1", 300, "kphys"),
            with_kw("f2", 172, "kphys"),
            with_kw("n1", 3, "unmapped"), // no classified keyword: absent row
        ];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let mut dyad_counts = HashMap::new();
        dyad_counts.insert("Biology".to_string(), 7usize);
        let rows = discipline_stats(&corpus, &taxonomy, Some(&dyad_counts), 50.0);
        assert_eq!(rows.len(), 2);
        let biology = rows.iter().find(|r| r.discipline == "Biology").unwrap();
        assert!((biology.mean_authors - 14.0 / 3.0).abs() < 1e-12);
        assert_eq!(biology.q95_authors, 10.0);
        assert_eq!(biology.dyad_count, 7);
        assert!(!biology.flagged);
        let physics = rows.iter().find(|r| r.discipline == "Physics").unwrap();
        assert_eq!(physics.mean_authors, 236.0);
        assert!(physics.flagged);
        // the published outlier value trips the same threshold
        assert!(235.91 > 50.0);
    }

    #[test]
    fn discipline_stats_uniform_author_count() {
        let mut map = HashMap::new();
        map.insert("kbio".to_string(), "Biology".to_string());
        let taxonomy = crate::scholars::DisciplineTaxonomy::new(
            map,
            crate::scholars::DEFAULT_DISCIPLINES
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
        .unwrap();
        let records: Vec<PublicationRecord> = (0..5)
            .map(|i| PublicationRecord {
                paper_id: format!("p{i}"),
                year: 2000,
                venue: None,
                authors: (0..3)
                    .map(|j| AuthorRecord {
                        scholar_id: format!("s{i}_{j}"),
                        affiliation_id: None,
                    })
                    .collect(),
                keywords: vec!["kbio".to_string()],
            })
            .collect();
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let rows = discipline_stats(&corpus, &taxonomy, None, 50.0);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_authors, 3.0);
        assert_eq!(rows[0].q95_authors, 3.0);
        assert_eq!(rows[0].dyad_count, 0);
    }

    #[test]
    fn deterministic_rebuild() {
        let records = vec![
            paper("b", 2001, &[("s2", None), ("s1", None)]),
            paper("a", 2000, &[("s1", None)]),
            paper("c", 2003, &[("s2", None)]),
        ];
        let edges = vec![edge("c", "a"), edge("b", "a")];
        let c1 = build_from_records(records.clone(), edges.clone(), CorpusConfig::default()).unwrap();
        let mut shuffled = records;
        shuffled.reverse();
        let mut redges = edges;
        redges.reverse();
        let c2 = build_from_records(shuffled, redges, CorpusConfig::default()).unwrap();
        assert_eq!(c1.c5("a").unwrap(), c2.c5("a").unwrap());
        assert_eq!(
            c1.annual_citations("s1", 2001).unwrap(),
            c2.annual_citations("s1", 2001).unwrap()
        );
        assert_eq!(
            c1.collaboration_degree("s1", 2005).unwrap(),
            c2.collaboration_degree("s1", 2005).unwrap()
        );
    }
}
