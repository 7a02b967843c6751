//! Mentor-protege dyad extraction.
//!
//! A junior scientist who coauthors with a senior scientist during the
//! junior's early career forms a candidate dyad. Candidates survive only if
//! the pair shares a discipline and an affiliation, and the protege's record
//! passes the career-level checks (a mentor-free late-career paper, no long
//! publication gap, affiliations inside the configured region).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PaperIdx, ScholarIdx};
use crate::scholars::ProfileSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DyadParams {
    /// A scientist is junior while their academic age is at most this.
    pub junior_max: i32,
    /// Proteges with a publication gap of this many years or more are
    /// excluded.
    pub gap_years: i32,
    /// When set, every affiliation the protege records during mentorship
    /// years must belong to this set. Papers without an affiliation carry no
    /// evidence and do not violate the rule.
    pub region_allow: Option<BTreeSet<String>>,
    /// Disciplines admitted into the analysis; `None` defers to the
    /// taxonomy's admitted set.
    pub admitted_disciplines: Option<BTreeSet<String>>,
}

impl Default for DyadParams {
    fn default() -> Self {
        DyadParams {
            junior_max: 7,
            gap_years: 5,
            region_allow: None,
            admitted_disciplines: None,
        }
    }
}

/// A retained mentor-protege pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dyad {
    pub protege: ScholarIdx,
    pub mentor: ScholarIdx,
    /// Year of the pair's first joint publication.
    pub first_joint_year: i32,
    /// Joint papers published during the protege's mentorship window,
    /// sorted by (year, paper index).
    pub joint_papers_in_window: Vec<PaperIdx>,
}

/// The protege's early-career span. `end` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentorshipWindow {
    pub start: i32,
    pub end: i32,
    pub post_start: i32,
}

pub fn mentorship_window(first_pub_year: i32, params: &DyadParams) -> MentorshipWindow {
    let end = first_pub_year + params.junior_max;
    MentorshipWindow {
        start: first_pub_year,
        end,
        post_start: end + 1,
    }
}

/// Number of observable years after the mentorship window. Five-year
/// citation windows censor the last four data years on top of the five-year
/// accumulation itself, so with a 2015 horizon a protege starting in year x
/// has 2011 - x - 7 usable post-mentorship years. Non-positive means the
/// protege's post period is unmeasurable.
pub fn years_post_mentorship(first_pub_year: i32, horizon_year: i32, junior_max: i32) -> i32 {
    (horizon_year - 4) - first_pub_year - junior_max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    /// No late-career publication free of every mentor.
    NoPostMentorshipMentorFreePaper,
    /// An affiliation recorded during mentorship years lies outside the
    /// allowed region.
    AffiliationOutsideRegion,
    /// Every candidate mentor works in a different discipline.
    DisciplineMismatch,
    /// No candidate mentor shares an affiliation on any joint paper.
    NoSharedAffiliation,
    /// A gap of `gap_years` or more between consecutive publications.
    PublicationGap,
    /// The protege's discipline is excluded from the analysis.
    DisciplineNotAdmitted,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::NoPostMentorshipMentorFreePaper => "no_post_mentorship_mentor_free_paper",
            ExclusionReason::AffiliationOutsideRegion => "affiliation_outside_region",
            ExclusionReason::DisciplineMismatch => "discipline_mismatch",
            ExclusionReason::NoSharedAffiliation => "no_shared_affiliation",
            ExclusionReason::PublicationGap => "publication_gap",
            ExclusionReason::DisciplineNotAdmitted => "discipline_not_admitted",
        }
    }
}

/// Every failed condition for a protege that ended up with no dyads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProtegeExclusion {
    pub protege: ScholarIdx,
    pub reasons: Vec<ExclusionReason>,
}

#[derive(Debug, Default)]
pub struct ExtractionResult {
    /// Sorted by (protege, mentor).
    pub dyads: Vec<Dyad>,
    /// Sorted by protege; one entry per protege that had candidate mentors
    /// but was excluded.
    pub exclusions: Vec<ProtegeExclusion>,
}

struct Candidate {
    mentor: ScholarIdx,
    first_joint_year: i32,
    joint_in_window: Vec<PaperIdx>,
    joint_all: Vec<PaperIdx>,
}

/// Extract all dyads under the eligibility rules. Scholars without any
/// senior coauthor during their junior years are not protege candidates and
/// appear in neither output.
pub fn extract_dyads(
    corpus: &Corpus,
    profiles: &ProfileSet,
    params: &DyadParams,
) -> ExtractionResult {
    let mut result = ExtractionResult::default();
    for protege in 0..corpus.n_scholars() as ScholarIdx {
        evaluate_protege(corpus, profiles, params, protege, &mut result);
    }
    result.dyads.sort_by_key(|d| (d.protege, d.mentor));
    result.exclusions.sort_by_key(|e| e.protege);
    result
}

fn evaluate_protege(
    corpus: &Corpus,
    profiles: &ProfileSet,
    params: &DyadParams,
    protege: ScholarIdx,
    result: &mut ExtractionResult,
) {
    let profile = profiles.get(protege);
    let window = mentorship_window(profile.first_pub_year, params);

    // Joint papers per coauthor within the window, in (year, paper) order.
    let mut joint: std::collections::HashMap<ScholarIdx, Vec<PaperIdx>> =
        std::collections::HashMap::new();
    for &p in corpus.papers_of(protege) {
        let paper = corpus.paper(p);
        if paper.year > window.end {
            break;
        }
        for &(other, _) in &paper.authors {
            if other != protege {
                joint.entry(other).or_default().push(p);
            }
        }
    }

    // A candidate mentor must be senior at the pair's first joint paper
    // (the protege is junior there by construction).
    let mut candidates: Vec<Candidate> = Vec::new();
    for (&mentor, papers_in_window) in &joint {
        let mentor_first = profiles.get(mentor).first_pub_year;
        let first_joint_year = corpus.paper(papers_in_window[0]).year;
        if first_joint_year - mentor_first <= params.junior_max {
            continue;
        }
        let joint_all: Vec<PaperIdx> = corpus
            .papers_of(protege)
            .iter()
            .copied()
            .filter(|&p| {
                corpus
                    .paper(p)
                    .authors
                    .iter()
                    .any(|&(other, _)| other == mentor)
            })
            .collect();
        candidates.push(Candidate {
            mentor,
            first_joint_year,
            joint_in_window: papers_in_window.clone(),
            joint_all,
        });
    }
    if candidates.is_empty() {
        return;
    }
    candidates.sort_by_key(|c| c.mentor);

    let mut reasons: BTreeSet<ExclusionReason> = BTreeSet::new();

    let admitted = match (&params.admitted_disciplines, profile.discipline.as_deref()) {
        (_, None) => false,
        (Some(set), Some(d)) => set.contains(d),
        (None, Some(d)) => profiles.taxonomy().is_admitted(d),
    };
    if !admitted {
        reasons.insert(ExclusionReason::DisciplineNotAdmitted);
    }

    // Same-discipline and shared-affiliation checks decide the mentor set.
    let mut discipline_failures = false;
    let mut affiliation_failures = false;
    let mentors: Vec<&Candidate> = candidates
        .iter()
        .filter(|c| {
            let same_discipline = profile.discipline.is_some()
                && profiles.get(c.mentor).discipline == profile.discipline;
            let shared = c
                .joint_all
                .iter()
                .any(|&p| shares_affiliation(corpus, p, protege, c.mentor));
            discipline_failures |= !same_discipline;
            affiliation_failures |= !shared;
            same_discipline && shared
        })
        .collect();
    if mentors.is_empty() {
        if discipline_failures {
            reasons.insert(ExclusionReason::DisciplineMismatch);
        }
        if affiliation_failures {
            reasons.insert(ExclusionReason::NoSharedAffiliation);
        }
    }

    if profile.max_publication_gap >= params.gap_years {
        reasons.insert(ExclusionReason::PublicationGap);
    }

    if let Some(allow) = &params.region_allow {
        let violates = corpus
            .papers_of(protege)
            .iter()
            .filter(|&&p| {
                let y = corpus.paper(p).year;
                y >= window.start && y <= window.end
            })
            .any(|&p| {
                corpus
                    .paper(p)
                    .authors
                    .iter()
                    .filter(|&&(s, _)| s == protege)
                    .any(|&(_, affil)| {
                        affil.is_some_and(|a| !allow.contains(corpus.affiliation_id(a)))
                    })
            });
        if violates {
            reasons.insert(ExclusionReason::AffiliationOutsideRegion);
        }
    }

    // The mentor-free requirement is evaluated against the full mentor set:
    // one late-career paper free of all mentors.
    if !mentors.is_empty() {
        let mentor_set: BTreeSet<ScholarIdx> = mentors.iter().map(|c| c.mentor).collect();
        let has_free_post_paper = corpus
            .papers_of(protege)
            .iter()
            .filter(|&&p| corpus.paper(p).year >= window.post_start)
            .any(|&p| {
                !corpus
                    .paper(p)
                    .authors
                    .iter()
                    .any(|(s, _)| mentor_set.contains(s))
            });
        if !has_free_post_paper {
            reasons.insert(ExclusionReason::NoPostMentorshipMentorFreePaper);
        }
    }

    if reasons.is_empty() && !mentors.is_empty() {
        for c in mentors {
            result.dyads.push(Dyad {
                protege,
                mentor: c.mentor,
                first_joint_year: c.first_joint_year,
                joint_papers_in_window: c.joint_in_window.clone(),
            });
        }
    } else {
        result.exclusions.push(ProtegeExclusion {
            protege,
            reasons: reasons.into_iter().collect(),
        });
    }
}

fn shares_affiliation(corpus: &Corpus, paper: PaperIdx, a: ScholarIdx, b: ScholarIdx) -> bool {
    let authors = &corpus.paper(paper).authors;
    let affil_of = |who: ScholarIdx| {
        authors
            .iter()
            .find(|&&(s, _)| s == who)
            .and_then(|&(_, affil)| affil)
    };
    match (affil_of(a), affil_of(b)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_from_records, AuthorRecord, CorpusConfig, PublicationRecord};
    use crate::scholars::{build_profiles, DisciplineTaxonomy, DEFAULT_DISCIPLINES};
    use std::collections::HashMap;

    fn paper(id: &str, year: i32, authors: &[(&str, &str)], kw: &str) -> PublicationRecord {
        PublicationRecord {
            paper_id: id.to_string(),
            year,
            venue: None,
            authors: authors
                .iter()
                .map(|(s, a)| AuthorRecord {
                    scholar_id: s.to_string(),
                    affiliation_id: Some(a.to_string()),
                })
                .collect(),
            keywords: vec![kw.to_string()],
        }
    }

    fn taxonomy() -> DisciplineTaxonomy {
        let mut map = HashMap::new();
        map.insert("kbio".into(), "Biology".into());
        map.insert("kchem".into(), "Chemistry".into());
        DisciplineTaxonomy::new(map, DEFAULT_DISCIPLINES.iter().map(|s| s.to_string()).collect())
            .unwrap()
    }

    fn setup(records: Vec<PublicationRecord>) -> (crate::corpus::Corpus, ProfileSet) {
        let corpus = build_from_records(records, vec![], CorpusConfig::default()).unwrap();
        let profiles = build_profiles(&corpus, taxonomy(), &HashMap::new(), &HashMap::new());
        (corpus, profiles)
    }

    #[test]
    fn basic_dyad_is_extracted() {
        let records = vec![
            paper("m1", 1990, &[("mentor", "u1")], "kbio"),
            paper("j1", 2000, &[("junior", "u1")], "kbio"),
            paper("j2", 2003, &[("junior", "u1"), ("mentor", "u1")], "kbio"),
            paper("j3", 2006, &[("junior", "u1")], "kbio"),
            paper("j4", 2009, &[("junior", "u1")], "kbio"),
        ];
        let (corpus, profiles) = setup(records);
        let result = extract_dyads(&corpus, &profiles, &DyadParams::default());
        assert_eq!(result.dyads.len(), 1);
        let dyad = &result.dyads[0];
        assert_eq!(corpus.scholar_id(dyad.protege), "junior");
        assert_eq!(corpus.scholar_id(dyad.mentor), "mentor");
        assert_eq!(dyad.first_joint_year, 2003);
        assert!(result.exclusions.is_empty());
    }

    #[test]
    fn post_papers_with_mentor_do_not_count() {
        let records = vec![
            paper("m1", 1990, &[("mentor", "u1")], "kbio"),
            paper("j1", 2000, &[("junior", "u1")], "kbio"),
            paper("j2", 2003, &[("junior", "u1"), ("mentor", "u1")], "kbio"),
            paper("j3", 2006, &[("junior", "u1")], "kbio"),
            paper("j4", 2009, &[("junior", "u1"), ("mentor", "u1")], "kbio"),
        ];
        let (corpus, profiles) = setup(records);
        let result = extract_dyads(&corpus, &profiles, &DyadParams::default());
        assert!(result.dyads.is_empty());
        assert_eq!(result.exclusions.len(), 1);
        assert_eq!(
            result.exclusions[0].reasons,
            vec![ExclusionReason::NoPostMentorshipMentorFreePaper]
        );
    }

    #[test]
    fn never_sharing_affiliation_is_excluded() {
        let records = vec![
            paper("m1", 1990, &[("mentor", "u2")], "kbio"),
            paper("j1", 2000, &[("junior", "u1")], "kbio"),
            paper("j2", 2003, &[("junior", "u1"), ("mentor", "u2")], "kbio"),
            paper("j3", 2006, &[("junior", "u1")], "kbio"),
            paper("j4", 2009, &[("junior", "u1")], "kbio"),
        ];
        let (corpus, profiles) = setup(records);
        let result = extract_dyads(&corpus, &profiles, &DyadParams::default());
        assert!(result.dyads.is_empty());
        assert_eq!(
            result.exclusions[0].reasons,
            vec![ExclusionReason::NoSharedAffiliation]
        );
    }

    #[test]
    fn one_failing_candidate_does_not_block_another() {
        let records = vec![
            paper("m1", 1990, &[("ma", "u1")], "kbio"),
            paper("m2", 1990, &[("mb", "u9")], "kbio"),
            paper("j1", 2000, &[("junior", "u1")], "kbio"),
            paper("j2", 2002, &[("junior", "u1"), ("ma", "u1")], "kbio"),
            paper("j3", 2004, &[("junior", "u1"), ("mb", "u9")], "kbio"),
            paper("j4", 2007, &[("junior", "u1")], "kbio"),
            paper("j5", 2009, &[("junior", "u1")], "kbio"),
        ];
        let (corpus, profiles) = setup(records);
        let result = extract_dyads(&corpus, &profiles, &DyadParams::default());
        assert_eq!(result.dyads.len(), 1);
        assert_eq!(corpus.scholar_id(result.dyads[0].mentor), "ma");
        assert!(result.exclusions.is_empty());
    }

    #[test]
    fn junior_pair_is_not_a_candidate() {
        let records = vec![
            paper("j1", 2000, &[("a", "u1")], "kbio"),
            paper("j2", 2001, &[("a", "u1"), ("b", "u1")], "kbio"),
        ];
        let (corpus, profiles) = setup(records);
        let result = extract_dyads(&corpus, &profiles, &DyadParams::default());
        assert!(result.dyads.is_empty());
        assert!(result.exclusions.is_empty());
    }

    #[test]
    fn window_arithmetic() {
        let params = DyadParams::default();
        let w = mentorship_window(2000, &params);
        assert_eq!((w.start, w.end, w.post_start), (2000, 2007, 2008));
        let w = mentorship_window(1995, &params);
        assert_eq!(w.post_start, 2003);
        let short = DyadParams {
            junior_max: 5,
            ..DyadParams::default()
        };
        let w = mentorship_window(2000, &short);
        assert_eq!((w.start, w.end), (2000, 2005));
    }

    #[test]
    fn years_post_mentorship_formula() {
        assert_eq!(years_post_mentorship(2000, 2015, 7), 4);
        assert_eq!(years_post_mentorship(2003, 2015, 7), 1);
        assert_eq!(years_post_mentorship(2004, 2015, 7), 0);
    }

    #[test]
    fn shrinking_region_never_adds_dyads() {
        let records = vec![
            paper("m1", 1990, &[("mentor", "u1")], "kbio"),
            paper("j1", 2000, &[("junior", "u1")], "kbio"),
            paper("j2", 2003, &[("junior", "u1"), ("mentor", "u1")], "kbio"),
            paper("j3", 2006, &[("junior", "u2")], "kbio"),
            paper("j4", 2009, &[("junior", "u1")], "kbio"),
        ];
        let (corpus, profiles) = setup(records);
        let wide = DyadParams {
            region_allow: Some(["u1".to_string(), "u2".to_string()].into_iter().collect()),
            ..DyadParams::default()
        };
        let narrow = DyadParams {
            region_allow: Some(["u1".to_string()].into_iter().collect()),
            ..DyadParams::default()
        };
        let wide_result = extract_dyads(&corpus, &profiles, &wide);
        let narrow_result = extract_dyads(&corpus, &profiles, &narrow);
        assert_eq!(wide_result.dyads.len(), 1);
        assert!(narrow_result.dyads.is_empty());
        assert_eq!(
            narrow_result.exclusions[0].reasons,
            vec![ExclusionReason::AffiliationOutsideRegion]
        );
    }
}
