//! Shared test oracles: hand-built fixture corpora and independent
//! brute-force recomputations that deliberately avoid the library's indices
//! and hash maps.
#![allow(dead_code)] // each test target uses a different slice of this

use std::collections::BTreeSet;

use mentorlens::cem::Signature;
use mentorlens::corpus::{AuthorRecord, PublicationRecord};
use mentorlens::dyads::ExclusionReason;

pub fn paper(
    id: &str,
    year: i32,
    authors: &[(&str, Option<&str>)],
    keywords: &[&str],
) -> PublicationRecord {
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
        keywords: keywords.iter().map(|k| k.to_string()).collect(),
    }
}

/// Hand-built 43-paper corpus. One protege scenario per eligibility
/// condition, each failing exactly one rule, plus two eligible proteges
/// (one with two mentors) and an all-mentored-post-papers case.
///
/// Region allow-set: {A1, A2}; AX is foreign. Admitted disciplines are the
/// defaults, so Physics is classified but not admitted.
pub struct GoldenCorpus {
    pub publications: Vec<PublicationRecord>,
    pub citations: Vec<(String, String)>,
    pub taxonomy: Vec<(String, String)>,
    pub region_allow: BTreeSet<String>,
    /// (protege, mentor, first joint year, joint papers in window)
    pub expected_dyads: Vec<(&'static str, &'static str, i32, Vec<&'static str>)>,
    /// (protege, every failed condition)
    pub expected_exclusions: Vec<(&'static str, Vec<ExclusionReason>)>,
}

pub fn golden_corpus() -> GoldenCorpus {
    let a1 = Some("A1");
    let a2 = Some("A2");
    let ax = Some("AX");
    let publications = vec![
        // mentors
        paper("m1a", 1985, &[("M1", a1)], &["kbio"]),
        paper("m2a", 1984, &[("M2", a2)], &["kbio"]),
        paper("m3a", 1986, &[("M3", a1)], &["kchem"]),
        paper("m3b", 1990, &[("M3", a1)], &["kchem"]),
        paper("m5a", 1987, &[("M5", a1)], &["kbio"]),
        paper("m6a", 1985, &[("M6", a1)], &["kphys"]),
        // P1: eligible, single mentor M1
        paper("p1a", 1995, &[("P1", a1)], &["kbio"]),
        paper("p1b", 1997, &[("P1", a1), ("M1", a1)], &["kbio"]),
        paper("p1c", 2000, &[("P1", a1)], &["kbio"]),
        paper("p1d", 2004, &[("P1", a1)], &["kbio"]),
        // P2: every post paper includes the mentor
        paper("p2a", 1995, &[("P2", a1)], &["kbio"]),
        paper("p2b", 1996, &[("P2", a1), ("M1", a1)], &["kbio"]),
        paper("p2c", 2000, &[("P2", a1)], &["kbio"]),
        paper("p2d", 2003, &[("P2", a1), ("M1", a1)], &["kbio"]),
        // P3: foreign affiliation during the window
        paper("p3a", 1995, &[("P3", a2)], &["kbio"]),
        paper("p3b", 1997, &[("P3", a2), ("M2", a2)], &["kbio"]),
        paper("p3c", 2001, &[("P3", ax)], &["kbio"]),
        paper("p3d", 2004, &[("P3", a2)], &["kbio"]),
        // P4: only senior collaborator works in another discipline
        paper("p4a", 1995, &[("P4", a1)], &["kbio"]),
        paper("p4b", 1998, &[("P4", a1), ("M3", a1)], &["kbio"]),
        paper("p4c", 2001, &[("P4", a1)], &["kbio"]),
        paper("p4d", 2004, &[("P4", a1)], &["kbio"]),
        // P5: never shares an affiliation with its senior collaborator
        paper("p5a", 1995, &[("P5", a1)], &["kbio"]),
        paper("p5b", 1997, &[("P5", a1), ("M2", a2)], &["kbio"]),
        paper("p5c", 2000, &[("P5", a1)], &["kbio"]),
        paper("p5d", 2004, &[("P5", a1)], &["kbio"]),
        // P6: five-year publication gap (1996 -> 2001)
        paper("p6a", 1995, &[("P6", a1)], &["kbio"]),
        paper("p6b", 1996, &[("P6", a1), ("M1", a1)], &["kbio"]),
        paper("p6c", 2001, &[("P6", a1)], &["kbio"]),
        paper("p6d", 2004, &[("P6", a1)], &["kbio"]),
        // P7: Physics pair, excluded by discipline admission only
        paper("p7a", 1995, &[("P7", a1)], &["kphys"]),
        paper("p7b", 1997, &[("P7", a1), ("M6", a1)], &["kphys"]),
        paper("p7c", 2000, &[("P7", a1)], &["kphys"]),
        paper("p7d", 2004, &[("P7", a1)], &["kphys"]),
        // P8: eligible with two mentors; the mentor-free paper is p8d
        paper("p8a", 1996, &[("P8", a1)], &["kbio"]),
        paper("p8b", 1998, &[("P8", a1), ("M1", a1)], &["kbio"]),
        paper("p8c", 2001, &[("P8", a1), ("M5", a1)], &["kbio"]),
        paper("p8d", 2005, &[("P8", a1)], &["kbio"]),
        // P9: two mentors, every post paper includes one of them
        paper("p9a", 1995, &[("P9", a1)], &["kbio"]),
        paper("p9b", 1996, &[("P9", a1), ("M1", a1)], &["kbio"]),
        paper("p9c", 1999, &[("P9", a1), ("M5", a1)], &["kbio"]),
        paper("p9d", 2003, &[("P9", a1), ("M1", a1)], &["kbio"]),
        paper("p9e", 2006, &[("P9", a1), ("M5", a1)], &["kbio"]),
    ];
    let citations = [
        ("p1c", "p1b"),
        ("p1d", "p1b"),
        ("p2c", "m1a"),
        ("p8d", "p8c"),
        ("p9e", "m5a"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    let taxonomy = vec![
        ("kbio".to_string(), "Biology".to_string()),
        ("kchem".to_string(), "Chemistry".to_string()),
        ("kphys".to_string(), "Physics".to_string()),
    ];
    GoldenCorpus {
        publications,
        citations,
        taxonomy,
        region_allow: ["A1".to_string(), "A2".to_string()].into_iter().collect(),
        expected_dyads: vec![
            ("P1", "M1", 1997, vec!["p1b"]),
            ("P8", "M1", 1998, vec!["p8b"]),
            ("P8", "M5", 2001, vec!["p8c"]),
        ],
        expected_exclusions: vec![
            ("P2", vec![ExclusionReason::NoPostMentorshipMentorFreePaper]),
            ("P3", vec![ExclusionReason::AffiliationOutsideRegion]),
            ("P4", vec![ExclusionReason::DisciplineMismatch]),
            ("P5", vec![ExclusionReason::NoSharedAffiliation]),
            ("P6", vec![ExclusionReason::PublicationGap]),
            ("P7", vec![ExclusionReason::DisciplineNotAdmitted]),
            ("P9", vec![ExclusionReason::NoPostMentorshipMentorFreePaper]),
        ],
    }
}

/// Brute-force stratifier: linear-scan cells, no hashing. Mirrors the
/// production arithmetic exactly (same expression order) so results must be
/// bit-identical, not just close.
pub struct BfMatch {
    pub matched_treated: Vec<usize>,
    pub matched_control: Vec<usize>,
    pub control_weights: Vec<(usize, f64)>,
    pub l1_before: f64,
    pub l1_after: Option<f64>,
}

pub fn bf_match_groups(treated: &[Signature], control: &[Signature]) -> BfMatch {
    let mut cells: Vec<(Signature, Vec<usize>, Vec<usize>)> = Vec::new();
    for (i, sig) in treated.iter().enumerate() {
        match cells.iter_mut().find(|(s, _, _)| s == sig) {
            Some((_, t, _)) => t.push(i),
            None => cells.push((sig.clone(), vec![i], Vec::new())),
        }
    }
    for (i, sig) in control.iter().enumerate() {
        match cells.iter_mut().find(|(s, _, _)| s == sig) {
            Some((_, _, c)) => c.push(i),
            None => cells.push((sig.clone(), Vec::new(), vec![i])),
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0));

    let mut l1_before = 0.0;
    for (_, t, c) in &cells {
        l1_before +=
            (t.len() as f64 / treated.len() as f64 - c.len() as f64 / control.len() as f64).abs();
    }
    l1_before = (l1_before / 2.0).clamp(0.0, 1.0);

    let matched: Vec<&(Signature, Vec<usize>, Vec<usize>)> = cells
        .iter()
        .filter(|(_, t, c)| !t.is_empty() && !c.is_empty())
        .collect();
    let matched_treated: Vec<usize> = matched.iter().flat_map(|(_, t, _)| t.iter().copied()).collect();
    let matched_control: Vec<usize> = matched.iter().flat_map(|(_, _, c)| c.iter().copied()).collect();

    let mut control_weights = Vec::new();
    let l1_after = if matched.is_empty() {
        None
    } else {
        let ratio = matched_control.len() as f64 / matched_treated.len() as f64;
        for (_, t, c) in &matched {
            let w = (t.len() as f64 / c.len() as f64) * ratio;
            for &unit in c {
                control_weights.push((unit, w));
            }
        }
        let mut l1 = 0.0;
        for (_, t, c) in &matched {
            l1 += (t.len() as f64 / matched_treated.len() as f64
                - c.len() as f64 / matched_control.len() as f64)
                .abs();
        }
        Some((l1 / 2.0).clamp(0.0, 1.0))
    };

    BfMatch {
        matched_treated,
        matched_control,
        control_weights,
        l1_before,
        l1_after,
    }
}

/// Metric recomputation over raw records, independent of the production
/// indices: citations, degrees, and career spans all come from plain scans
/// of the record and edge lists. Only paper-id lookup is precomputed.
pub struct BfCorpus {
    pub records: Vec<PublicationRecord>,
    pub edges: Vec<(String, String)>,
    pub horizon: i32,
    by_id: std::collections::BTreeMap<String, usize>,
}

impl BfCorpus {
    pub fn new(records: Vec<PublicationRecord>, mut edges: Vec<(String, String)>, horizon: i32) -> Self {
        edges.sort();
        edges.dedup();
        let known: BTreeSet<&str> = records.iter().map(|r| r.paper_id.as_str()).collect();
        edges.retain(|(a, b)| a != b && known.contains(a.as_str()) && known.contains(b.as_str()));
        let by_id = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.paper_id.clone(), i))
            .collect();
        BfCorpus {
            records,
            edges,
            horizon,
            by_id,
        }
    }

    fn record(&self, paper_id: &str) -> &PublicationRecord {
        &self.records[*self.by_id.get(paper_id).expect("paper exists")]
    }

    fn has_author(&self, paper_id: &str, scholar: &str) -> bool {
        self.record(paper_id)
            .authors
            .iter()
            .any(|a| a.scholar_id == scholar)
    }

    pub fn first_year(&self, scholar: &str) -> i32 {
        self.records
            .iter()
            .filter(|r| r.authors.iter().any(|a| a.scholar_id == scholar))
            .map(|r| r.year)
            .min()
            .expect("scholar has papers")
    }

    pub fn c5(&self, paper_id: &str) -> Option<u64> {
        let year = self.record(paper_id).year;
        if year > self.horizon - 5 {
            return None;
        }
        let count = self
            .edges
            .iter()
            .filter(|(citing, cited)| {
                cited == paper_id && {
                    let cy = self.record(citing).year;
                    cy >= year && cy <= year + 5
                }
            })
            .count() as u64;
        Some(count)
    }

    /// Citations received by all of the scholar's papers from citing papers
    /// published at or before `year`.
    pub fn citations_through(&self, scholar: &str, year: i32) -> u64 {
        self.edges
            .iter()
            .filter(|(citing, cited)| {
                self.has_author(cited, scholar) && self.record(citing).year <= year
            })
            .count() as u64
    }

    pub fn degree_at(&self, scholar: &str, year: i32) -> u64 {
        let mut coauthors: BTreeSet<&str> = BTreeSet::new();
        for record in &self.records {
            if record.year <= year && record.authors.iter().any(|a| a.scholar_id == scholar) {
                for author in &record.authors {
                    coauthors.insert(&author.scholar_id);
                }
            }
        }
        coauthors.remove(scholar);
        coauthors.len() as u64
    }

    /// Mean mentor citation rate; `mentors` must be (mentor id, first joint
    /// year) in ascending mentor-id order, matching the production
    /// summation order.
    pub fn big_shot(&self, mentors: &[(String, i32)]) -> f64 {
        let sum: f64 = mentors
            .iter()
            .map(|(mentor, y0)| {
                let citations = self.citations_through(mentor, *y0) as f64;
                let years = (y0 - self.first_year(mentor) + 1) as f64;
                citations / years
            })
            .sum();
        sum / mentors.len() as f64
    }

    pub fn hub(&self, mentors: &[(String, i32)]) -> f64 {
        let sum: f64 = mentors
            .iter()
            .map(|(mentor, y0)| self.degree_at(mentor, *y0) as f64)
            .sum();
        sum / mentors.len() as f64
    }

    pub fn outcome(&self, protege: &str, mentors: &[String], junior_max: i32) -> Option<f64> {
        let x = self.first_year(protege);
        let post_start = x + junior_max + 1;
        let mut sum = 0u64;
        let mut count = 0u64;
        for record in &self.records {
            if record.year < post_start || record.year > self.horizon - 5 {
                continue;
            }
            if !record.authors.iter().any(|a| a.scholar_id == protege) {
                continue;
            }
            if record
                .authors
                .iter()
                .any(|a| mentors.iter().any(|m| *m == a.scholar_id))
            {
                continue;
            }
            sum += self.c5(&record.paper_id).expect("year checked against horizon");
            count += 1;
        }
        (count > 0).then(|| sum as f64 / count as f64)
    }

    pub fn mentor_gain(&self, protege: &str, mentor: &str, junior_max: i32) -> Option<f64> {
        let x = self.first_year(protege);
        let mut sum = 0u64;
        let mut count = 0u64;
        for record in &self.records {
            if record.year < x || record.year > x + junior_max {
                continue;
            }
            if !self.has_author(&record.paper_id, protege) || !self.has_author(&record.paper_id, mentor)
            {
                continue;
            }
            if let Some(c5) = self.c5(&record.paper_id) {
                sum += c5;
                count += 1;
            }
        }
        (count > 0).then(|| sum as f64 / count as f64)
    }

    /// Re-check the five extraction conditions for one claimed dyad.
    pub fn validate_dyad(
        &self,
        protege: &str,
        mentor: &str,
        y0: i32,
        all_mentors: &[String],
        junior_max: i32,
        gap_years: i32,
        region_allow: Option<&BTreeSet<String>>,
        discipline_of: &dyn Fn(&str) -> Option<String>,
        admitted: &dyn Fn(&str) -> bool,
    ) -> Result<(), String> {
        let x = self.first_year(protege);
        // junior/senior at the first joint paper
        let first_joint = self
            .records
            .iter()
            .filter(|r| {
                r.authors.iter().any(|a| a.scholar_id == protege)
                    && r.authors.iter().any(|a| a.scholar_id == mentor)
            })
            .map(|r| r.year)
            .min()
            .ok_or("no joint paper")?;
        if first_joint != y0 {
            return Err(format!("first joint year {first_joint} != claimed {y0}"));
        }
        if y0 - x > junior_max {
            return Err("protege not junior at first joint paper".into());
        }
        if y0 - self.first_year(mentor) <= junior_max {
            return Err("mentor not senior at first joint paper".into());
        }
        // (i) a post-window paper free of all mentors
        let post_free = self.records.iter().any(|r| {
            r.year > x + junior_max
                && r.authors.iter().any(|a| a.scholar_id == protege)
                && !r
                    .authors
                    .iter()
                    .any(|a| all_mentors.iter().any(|m| *m == a.scholar_id))
        });
        if !post_free {
            return Err("no mentor-free post paper".into());
        }
        // (ii) window affiliations inside the region
        if let Some(allow) = region_allow {
            for record in &self.records {
                if record.year < x || record.year > x + junior_max {
                    continue;
                }
                for author in &record.authors {
                    if author.scholar_id == protege {
                        if let Some(affil) = &author.affiliation_id {
                            if !allow.contains(affil) {
                                return Err(format!("foreign affiliation {affil}"));
                            }
                        }
                    }
                }
            }
        }
        // (iii) same discipline, and the discipline is admitted
        let pd = discipline_of(protege).ok_or("protege unclassified")?;
        let md = discipline_of(mentor).ok_or("mentor unclassified")?;
        if pd != md {
            return Err(format!("discipline mismatch {pd} vs {md}"));
        }
        if !admitted(&pd) {
            return Err(format!("discipline {pd} not admitted"));
        }
        // (iv) a shared affiliation on some joint paper
        let shared = self.records.iter().any(|r| {
            let affil = |who: &str| {
                r.authors
                    .iter()
                    .find(|a| a.scholar_id == who)
                    .and_then(|a| a.affiliation_id.clone())
            };
            match (affil(protege), affil(mentor)) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            }
        });
        if !shared {
            return Err("no shared affiliation".into());
        }
        // (v) no long publication gap
        let mut years: Vec<i32> = self
            .records
            .iter()
            .filter(|r| r.authors.iter().any(|a| a.scholar_id == protege))
            .map(|r| r.year)
            .collect();
        years.sort_unstable();
        years.dedup();
        if years.windows(2).any(|w| w[1] - w[0] >= gap_years) {
            return Err("publication gap".into());
        }
        Ok(())
    }
}
