//! Per-scientist career profiles: first publication year, discipline via
//! keyword classification, gender attribute filtering, affiliation rank, and
//! publication-gap detection.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusError, ScholarIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
            Gender::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Gender> {
        match s {
            "female" | "f" => Some(Gender::Female),
            "male" | "m" => Some(Gender::Male),
            "unknown" | "" => Some(Gender::Unknown),
            _ => None,
        }
    }
}

/// Keyword-to-discipline mapping plus the set of disciplines admitted into
/// downstream analyses. A keyword may map to a non-admitted discipline; such
/// scholars are classified but excluded later.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisciplineTaxonomy {
    keyword_to_discipline: HashMap<String, String>,
    admitted: BTreeSet<String>,
}

/// The nine disciplines admitted by default.
pub const DEFAULT_DISCIPLINES: [&str; 9] = [
    "Biology",
    "Chemistry",
    "Computer Science",
    "Economics",
    "Engineering",
    "Geology",
    "Mathematics",
    "Medicine",
    "Psychology",
];

impl DisciplineTaxonomy {
    pub fn new(
        keyword_to_discipline: HashMap<String, String>,
        admitted: BTreeSet<String>,
    ) -> Result<Self, ProfileError> {
        if admitted.is_empty() {
            return Err(ProfileError::EmptyTaxonomy);
        }
        Ok(DisciplineTaxonomy {
            keyword_to_discipline,
            admitted,
        })
    }

    /// Load `keyword,discipline` lines; admitted set defaults to the nine
    /// standard disciplines unless `admitted` is given.
    pub fn load(path: &Path, admitted: Option<BTreeSet<String>>) -> Result<Self, ProfileError> {
        let file = File::open(path).map_err(|e| ProfileError::Io(path.display().to_string(), e))?;
        let mut map = HashMap::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| ProfileError::Io(path.display().to_string(), e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((keyword, discipline)) = line.split_once(',') else {
                return Err(ProfileError::BadLine(path.display().to_string(), line.into()));
            };
            map.insert(keyword.trim().to_string(), discipline.trim().to_string());
        }
        let admitted = admitted
            .unwrap_or_else(|| DEFAULT_DISCIPLINES.iter().map(|s| s.to_string()).collect());
        DisciplineTaxonomy::new(map, admitted)
    }

    pub fn discipline_of(&self, keyword: &str) -> Option<&str> {
        self.keyword_to_discipline.get(keyword).map(|s| s.as_str())
    }

    pub fn is_admitted(&self, discipline: &str) -> bool {
        self.admitted.contains(discipline)
    }

    pub fn admitted(&self) -> &BTreeSet<String> {
        &self.admitted
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProfileError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: unparseable line `{1}`")]
    BadLine(String, String),
    #[error("taxonomy admits no disciplines")]
    EmptyTaxonomy,
    #[error("gender threshold {0} outside (0.5, 1]")]
    BadThreshold(f64),
    #[error("year {year} precedes first publication year {first}")]
    BeforeFirstPublication { year: i32, first: i32 },
    #[error("rank must be positive, got {0}")]
    NonPositiveRank(i64),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScholarProfile {
    pub scholar_id: String,
    pub first_pub_year: i32,
    pub last_active_year: i32,
    /// `None` = unclassified (no keyword mapped to any discipline).
    pub discipline: Option<String>,
    pub gender: Gender,
    pub gender_confidence: f64,
    /// `None` = unranked affiliation (or none recorded) on the first paper.
    pub rank_at_first_pub: Option<u32>,
    /// Largest difference between consecutive publication years.
    pub max_publication_gap: i32,
}

/// Profiles for every scholar with at least one publication, index-aligned
/// with the corpus scholar table.
pub struct ProfileSet {
    profiles: Vec<ScholarProfile>,
    taxonomy: DisciplineTaxonomy,
}

impl ProfileSet {
    /// Reassemble a profile set from stored rows; `profiles` must be
    /// index-aligned with the corpus scholar table.
    pub fn from_parts(profiles: Vec<ScholarProfile>, taxonomy: DisciplineTaxonomy) -> Self {
        ProfileSet { profiles, taxonomy }
    }

    pub fn get(&self, idx: ScholarIdx) -> &ScholarProfile {
        &self.profiles[idx as usize]
    }

    pub fn by_id(&self, corpus: &Corpus, scholar_id: &str) -> Result<&ScholarProfile, CorpusError> {
        Ok(self.get(corpus.scholar_idx(scholar_id)?))
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScholarProfile> {
        self.profiles.iter()
    }

    pub fn taxonomy(&self) -> &DisciplineTaxonomy {
        &self.taxonomy
    }
}

/// Gender attributes come from an external source keyed by scholar id.
pub type GenderSource = HashMap<String, (Gender, f64)>;
/// Affiliation ranks; `None` = listed but unranked.
pub type RankSource = HashMap<String, Option<u32>>;

pub fn load_gender_source(path: &Path) -> Result<GenderSource, ProfileError> {
    let file = File::open(path).map_err(|e| ProfileError::Io(path.display().to_string(), e))?;
    let mut out = HashMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| ProfileError::Io(path.display().to_string(), e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let (id, gender, confidence) = match parts.as_slice() {
            [id, g, c] => (id, Gender::parse(g.trim()), c.trim().parse::<f64>().ok()),
            _ => (&"", None, None),
        };
        match (gender, confidence) {
            (Some(g), Some(c)) if !id.is_empty() && (0.0..=1.0).contains(&c) => {
                out.insert(id.trim().to_string(), (g, c));
            }
            _ => return Err(ProfileError::BadLine(path.display().to_string(), line.into())),
        }
    }
    Ok(out)
}

pub fn load_rank_source(path: &Path) -> Result<RankSource, ProfileError> {
    let file = File::open(path).map_err(|e| ProfileError::Io(path.display().to_string(), e))?;
    let mut out = HashMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| ProfileError::Io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((id, rank)) = line.split_once(',') else {
            return Err(ProfileError::BadLine(path.display().to_string(), line));
        };
        let rank = rank.trim();
        let parsed = if rank.is_empty() {
            None
        } else {
            match rank.parse::<u32>() {
                Ok(r) if r > 0 => Some(r),
                _ => return Err(ProfileError::BadLine(path.display().to_string(), line)),
            }
        };
        out.insert(id.trim().to_string(), parsed);
    }
    Ok(out)
}

/// Build one profile per scholar with at least one publication.
///
/// Discipline is the plurality discipline over keyword votes across all the
/// scholar's papers, ties broken by lexicographically smallest discipline
/// name so the result is order-independent. Missing gender or rank degrade
/// to unknown/unranked rather than erroring.
pub fn build_profiles(
    corpus: &Corpus,
    taxonomy: DisciplineTaxonomy,
    gender_source: &GenderSource,
    rank_source: &RankSource,
) -> ProfileSet {
    let profiles = (0..corpus.n_scholars() as ScholarIdx)
        .map(|idx| {
            let papers = corpus.papers_of(idx);
            let first_pub_year = corpus.paper(papers[0]).year;
            let last_active_year = corpus.paper(papers[papers.len() - 1]).year;

            let mut votes: HashMap<&str, u32> = HashMap::new();
            for &p in papers {
                for keyword in &corpus.paper(p).keywords {
                    if let Some(d) = taxonomy.discipline_of(keyword) {
                        *votes.entry(d).or_insert(0) += 1;
                    }
                }
            }
            let discipline = votes
                .iter()
                .max_by(|(name_a, n_a), (name_b, n_b)| n_a.cmp(n_b).then(name_b.cmp(name_a)))
                .map(|(&name, _)| name.to_string());

            let scholar_id = corpus.scholar_id(idx).to_string();
            let (gender, gender_confidence) = gender_source
                .get(&scholar_id)
                .copied()
                .unwrap_or((Gender::Unknown, 0.0));

            // Rank of the affiliation recorded for this scholar on their
            // first paper (papers are sorted by year then paper index, so
            // the pick is deterministic).
            let rank_at_first_pub = corpus
                .paper(papers[0])
                .authors
                .iter()
                .find(|(s, _)| *s == idx)
                .and_then(|(_, affil)| *affil)
                .and_then(|affil| {
                    rank_source
                        .get(corpus.affiliation_id(affil))
                        .copied()
                        .flatten()
                });

            let mut years: Vec<i32> = papers.iter().map(|&p| corpus.paper(p).year).collect();
            years.dedup();
            let max_publication_gap = years.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);

            ScholarProfile {
                scholar_id,
                first_pub_year,
                last_active_year,
                discipline,
                gender,
                gender_confidence,
                rank_at_first_pub,
                max_publication_gap,
            }
        })
        .collect();
    ProfileSet { profiles, taxonomy }
}

/// Years since first publication. Errors when queried before the career
/// started.
pub fn academic_age(profile: &ScholarProfile, year: i32) -> Result<i32, ProfileError> {
    if year < profile.first_pub_year {
        return Err(ProfileError::BeforeFirstPublication {
            year,
            first: profile.first_pub_year,
        });
    }
    Ok(year - profile.first_pub_year)
}

/// Scholars whose gender attribution fell below the threshold.
#[derive(Debug, Clone, Serialize)]
pub struct GenderExclusion {
    pub scholar_id: String,
    pub confidence: f64,
}

/// Mark any gender attribution below `threshold` as unknown. Downstream
/// gendered analyses then skip those scholars. Threshold is inclusive:
/// confidence exactly at the threshold is retained.
pub fn apply_gender_filter(
    profiles: &mut ProfileSet,
    threshold: f64,
) -> Result<Vec<GenderExclusion>, ProfileError> {
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(ProfileError::BadThreshold(threshold));
    }
    let mut excluded = Vec::new();
    for profile in &mut profiles.profiles {
        if profile.gender != Gender::Unknown && profile.gender_confidence < threshold {
            excluded.push(GenderExclusion {
                scholar_id: profile.scholar_id.clone(),
                confidence: profile.gender_confidence,
            });
            profile.gender = Gender::Unknown;
        }
    }
    Ok(excluded)
}

/// University-rank bin label: singletons through 100, then the published
/// ranges. Unranked affiliations fall into the open-ended tail.
pub fn rank_bin(rank: Option<u32>) -> Result<String, ProfileError> {
    let Some(rank) = rank else {
        return Ok(">500".to_string());
    };
    if rank == 0 {
        return Err(ProfileError::NonPositiveRank(0));
    }
    Ok(match rank {
        1..=100 => rank.to_string(),
        101..=150 => "101-150".to_string(),
        151..=200 => "151-200".to_string(),
        201..=300 => "201-300".to_string(),
        301..=400 => "301-400".to_string(),
        401..=500 => "401-500".to_string(),
        _ => ">500".to_string(),
    })
}

/// Every admissible rank-bin label, in ascending rank order.
pub fn rank_bin_labels() -> Vec<String> {
    let mut labels: Vec<String> = (1..=100).map(|r| r.to_string()).collect();
    for range in ["101-150", "151-200", "201-300", "301-400", "401-500", ">500"] {
        labels.push(range.to_string());
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_from_records, AuthorRecord, CorpusConfig, PublicationRecord};

    fn paper(id: &str, year: i32, authors: &[&str], keywords: &[&str]) -> PublicationRecord {
        PublicationRecord {
            paper_id: id.to_string(),
            year,
            venue: None,
            authors: authors
                .iter()
                .map(|s| AuthorRecord {
                    scholar_id: s.to_string(),
                    affiliation_id: Some(format!("affil-{s}")),
                })
                .collect(),
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
        }
    }

    fn taxonomy() -> DisciplineTaxonomy {
        let mut map = HashMap::new();
        map.insert("genomes".into(), "Biology".into());
        map.insert("cells".into(), "Biology".into());
        map.insert("reagents".into(), "Chemistry".into());
        DisciplineTaxonomy::new(map, DEFAULT_DISCIPLINES.iter().map(|s| s.to_string()).collect())
            .unwrap()
    }

    #[test]
    fn plurality_discipline_wins() {
        let records = vec![
            paper("a", 1990, &["s"], &["genomes", "cells"]),
            paper("b", 1992, &["s"], &["genomes"]),
            paper("c", 1994, &["s"], &["reagents"]),
        ];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let profiles = build_profiles(&corpus, taxonomy(), &HashMap::new(), &HashMap::new());
        let p = profiles.by_id(&corpus, "s").unwrap();
        assert_eq!(p.discipline.as_deref(), Some("Biology"));
    }

    #[test]
    fn discipline_tie_breaks_lexicographically() {
        let records = vec![
            paper("a", 1990, &["s"], &["genomes"]),
            paper("b", 1992, &["s"], &["reagents"]),
        ];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let profiles = build_profiles(&corpus, taxonomy(), &HashMap::new(), &HashMap::new());
        assert_eq!(
            profiles.by_id(&corpus, "s").unwrap().discipline.as_deref(),
            Some("Biology")
        );
    }

    #[test]
    fn missing_gender_degrades_to_unknown() {
        let records = vec![paper("a", 1990, &["s"], &[])];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let profiles = build_profiles(&corpus, taxonomy(), &HashMap::new(), &HashMap::new());
        let p = profiles.by_id(&corpus, "s").unwrap();
        assert_eq!(p.gender, Gender::Unknown);
        assert_eq!(p.gender_confidence, 0.0);
        assert_eq!(p.discipline, None);
    }

    #[test]
    fn publication_gap_is_max_consecutive_difference() {
        let records = vec![
            paper("a", 1990, &["s"], &[]),
            paper("b", 1998, &["s"], &[]),
        ];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let profiles = build_profiles(&corpus, taxonomy(), &HashMap::new(), &HashMap::new());
        assert_eq!(profiles.by_id(&corpus, "s").unwrap().max_publication_gap, 8);
    }

    #[test]
    fn academic_age_formula_and_precondition() {
        let profile = ScholarProfile {
            scholar_id: "s".into(),
            first_pub_year: 2000,
            last_active_year: 2015,
            discipline: None,
            gender: Gender::Unknown,
            gender_confidence: 0.0,
            rank_at_first_pub: None,
            max_publication_gap: 0,
        };
        assert_eq!(academic_age(&profile, 2000).unwrap(), 0);
        assert_eq!(academic_age(&profile, 2015).unwrap(), 15);
        assert!(academic_age(&profile, 1999).is_err());
    }

    #[test]
    fn gender_filter_threshold_is_inclusive() {
        let records = vec![
            paper("a", 1990, &["hi"], &[]),
            paper("b", 1990, &["edge"], &[]),
            paper("c", 1990, &["lo"], &[]),
        ];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let mut source = HashMap::new();
        source.insert("hi".to_string(), (Gender::Female, 0.97));
        source.insert("edge".to_string(), (Gender::Male, 0.95));
        source.insert("lo".to_string(), (Gender::Female, 0.60));
        let mut profiles = build_profiles(&corpus, taxonomy(), &source, &HashMap::new());
        let excluded = apply_gender_filter(&mut profiles, 0.95).unwrap();
        assert_eq!(excluded.len(), 1);
        assert_eq!(excluded[0].scholar_id, "lo");
        assert_eq!(profiles.by_id(&corpus, "hi").unwrap().gender, Gender::Female);
        assert_eq!(profiles.by_id(&corpus, "edge").unwrap().gender, Gender::Male);
        assert_eq!(profiles.by_id(&corpus, "lo").unwrap().gender, Gender::Unknown);
        assert!(apply_gender_filter(&mut profiles, 0.4).is_err());
    }

    #[test]
    fn rank_bins_match_published_layout() {
        assert_eq!(rank_bin(Some(37)).unwrap(), "37");
        assert_eq!(rank_bin(Some(100)).unwrap(), "100");
        assert_eq!(rank_bin(Some(101)).unwrap(), "101-150");
        assert_eq!(rank_bin(Some(260)).unwrap(), "201-300");
        assert_eq!(rank_bin(Some(999)).unwrap(), ">500");
        assert_eq!(rank_bin(None).unwrap(), ">500");
        assert!(rank_bin(Some(0)).is_err());
        assert_eq!(rank_bin_labels().len(), 106);
    }

    #[test]
    fn rank_comes_from_first_paper_affiliation() {
        let records = vec![PublicationRecord {
            paper_id: "a".into(),
            year: 1990,
            venue: None,
            authors: vec![AuthorRecord {
                scholar_id: "s".into(),
                affiliation_id: Some("u1".into()),
            }],
            keywords: vec![],
        }];
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let mut ranks = HashMap::new();
        ranks.insert("u1".to_string(), Some(42));
        let profiles = build_profiles(&corpus, taxonomy(), &HashMap::new(), &ranks);
        assert_eq!(profiles.by_id(&corpus, "s").unwrap().rank_at_first_pub, Some(42));
    }
}
