//! Per-protege mentorship metrics and matching-unit assembly.
//!
//! Mentor averages (rates, degrees, ages) always iterate mentors in
//! ascending mentor-index order so recomputation from raw records, in the
//! same order, reproduces results bit for bit.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, ScholarIdx};
use crate::dyads::{mentorship_window, years_post_mentorship, Dyad, DyadParams};
use crate::scholars::{rank_bin, Gender, ProfileSet};

/// One protege with its mentor set, experience measures, outcome, and
/// confounders. This is the unit that enters matching.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtegeUnit {
    pub protege_id: String,
    pub mentors: Vec<String>,
    /// Mean over mentors of their average annual citation rate up to the
    /// first joint publication.
    pub big_shot: f64,
    /// Mean over mentors of their collaboration-network degree in the year
    /// of the first joint publication.
    pub hub: f64,
    /// Mean c5 of the protege's late-career papers written without any
    /// mentor.
    pub outcome: f64,
    pub num_mentors: u32,
    pub first_pub_year: i32,
    pub discipline: String,
    pub gender: Gender,
    pub rank_bin: String,
    pub years_post_mentorship: i32,
    pub avg_mentor_age: f64,
    /// `None` when any mentor's gender is unknown, which makes the count
    /// ill-defined.
    pub female_mentor_count: Option<u32>,
}

/// One mentor-protege pair with the mentor's citation gain from the
/// mentorship: mean c5 of their joint papers inside the window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MentorGainRecord {
    pub mentor_id: String,
    pub protege_id: String,
    pub mentor_gender: Gender,
    pub protege_gender: Gender,
    pub gain: f64,
    pub discipline: String,
    pub rank_bin: String,
    pub num_mentors: u32,
    pub first_pub_year: i32,
}

/// Why an extracted protege produced no matching unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitDropReason {
    UndefinedOutcome,
    UnknownGender,
    NoMeasurablePostYears,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitDrop {
    pub protege_id: String,
    pub reason: UnitDropReason,
}

#[derive(Debug, Default)]
pub struct AssembledUnits {
    pub units: Vec<ProtegeUnit>,
    pub gains: Vec<MentorGainRecord>,
    pub drops: Vec<UnitDrop>,
}

/// Mentor's average annual citations up to the first joint year, inclusive:
/// citations received in years `<= y0` over `y0 - first + 1` years.
fn mentor_rate(corpus: &Corpus, profiles: &ProfileSet, dyad: &Dyad) -> f64 {
    let first = profiles.get(dyad.mentor).first_pub_year;
    let years = (dyad.first_joint_year - first + 1) as f64;
    let citations = corpus.citations_through(dyad.mentor, dyad.first_joint_year) as f64;
    citations / years
}

/// Mean over the protege's mentors of their pre-mentorship citation rate.
pub fn big_shot_experience(corpus: &Corpus, profiles: &ProfileSet, dyads: &[Dyad]) -> f64 {
    debug_assert!(!dyads.is_empty());
    let sum: f64 = dyads.iter().map(|d| mentor_rate(corpus, profiles, d)).sum();
    sum / dyads.len() as f64
}

/// Mean over the protege's mentors of their collaboration degree in the
/// first joint year. The degree counts all papers published up to and
/// including that year, the joint paper itself among them.
pub fn hub_experience(corpus: &Corpus, dyads: &[Dyad]) -> f64 {
    debug_assert!(!dyads.is_empty());
    let sum: f64 = dyads
        .iter()
        .map(|d| corpus.collaboration_degree_by_idx(d.mentor, d.first_joint_year) as f64)
        .sum();
    sum / dyads.len() as f64
}

/// Mean over mentors of their academic age at the first joint publication.
pub fn avg_mentor_age(profiles: &ProfileSet, dyads: &[Dyad]) -> f64 {
    debug_assert!(!dyads.is_empty());
    let sum: f64 = dyads
        .iter()
        .map(|d| (d.first_joint_year - profiles.get(d.mentor).first_pub_year) as f64)
        .sum();
    sum / dyads.len() as f64
}

/// Mean c5 of the protege's post-window papers with no mentor among the
/// authors. Only papers old enough for a full five-year window count.
/// `None` when no such paper exists.
pub fn protege_outcome(
    corpus: &Corpus,
    protege: ScholarIdx,
    dyads: &[Dyad],
    params: &DyadParams,
    first_pub_year: i32,
) -> Option<f64> {
    let window = mentorship_window(first_pub_year, params);
    let mentor_set: BTreeSet<ScholarIdx> = dyads.iter().map(|d| d.mentor).collect();
    let mut sum = 0u64;
    let mut count = 0u32;
    for &p in corpus.papers_of(protege) {
        let paper = corpus.paper(p);
        if paper.year < window.post_start || paper.year > corpus.last_c5_year() {
            continue;
        }
        if paper.authors.iter().any(|(s, _)| mentor_set.contains(s)) {
            continue;
        }
        let c5 = corpus
            .c5_by_idx(p)
            .expect("papers at or before the c5 horizon have a defined count");
        sum += c5 as u64;
        count += 1;
    }
    (count > 0).then(|| sum as f64 / count as f64)
}

/// Mean c5 of the dyad's joint papers inside the mentorship window. `None`
/// when no joint paper has a defined c5.
pub fn mentor_gain(corpus: &Corpus, dyad: &Dyad) -> Option<f64> {
    let mut sum = 0u64;
    let mut count = 0u32;
    for &p in &dyad.joint_papers_in_window {
        if let Some(c5) = corpus.c5_by_idx(p) {
            sum += c5 as u64;
            count += 1;
        }
    }
    (count > 0).then(|| sum as f64 / count as f64)
}

/// Assemble one matching unit per eligible protege plus gain records for
/// every dyad whose gain is defined and whose mentor gender is known.
///
/// A protege yields a unit only with a defined outcome, a known gender, and
/// a positive number of measurable post-mentorship years; everything else
/// lands in the drop list. Dyads must arrive sorted by (protege, mentor),
/// which extraction guarantees.
pub fn assemble_units(
    corpus: &Corpus,
    profiles: &ProfileSet,
    dyads: &[Dyad],
    params: &DyadParams,
) -> AssembledUnits {
    let mut result = AssembledUnits::default();
    let mut start = 0;
    while start < dyads.len() {
        let protege = dyads[start].protege;
        let mut end = start;
        while end < dyads.len() && dyads[end].protege == protege {
            end += 1;
        }
        assemble_one(corpus, profiles, &dyads[start..end], params, &mut result);
        start = end;
    }
    result
}

fn assemble_one(
    corpus: &Corpus,
    profiles: &ProfileSet,
    dyads: &[Dyad],
    params: &DyadParams,
    out: &mut AssembledUnits,
) {
    let protege = dyads[0].protege;
    let profile = profiles.get(protege);
    let protege_id = profile.scholar_id.clone();

    let post_years = years_post_mentorship(
        profile.first_pub_year,
        corpus.horizon_year(),
        params.junior_max,
    );
    if post_years <= 0 {
        out.drops.push(UnitDrop {
            protege_id,
            reason: UnitDropReason::NoMeasurablePostYears,
        });
        return;
    }
    if profile.gender == Gender::Unknown {
        out.drops.push(UnitDrop {
            protege_id,
            reason: UnitDropReason::UnknownGender,
        });
        return;
    }
    let Some(outcome) = protege_outcome(corpus, protege, dyads, params, profile.first_pub_year)
    else {
        out.drops.push(UnitDrop {
            protege_id,
            reason: UnitDropReason::UndefinedOutcome,
        });
        return;
    };

    let mentor_genders: Vec<Gender> = dyads
        .iter()
        .map(|d| profiles.get(d.mentor).gender)
        .collect();
    let female_mentor_count = if mentor_genders.iter().any(|&g| g == Gender::Unknown) {
        None
    } else {
        Some(mentor_genders.iter().filter(|&&g| g == Gender::Female).count() as u32)
    };

    let discipline = profile
        .discipline
        .clone()
        .expect("extracted dyads imply a classified protege");
    let unit = ProtegeUnit {
        protege_id: protege_id.clone(),
        mentors: dyads
            .iter()
            .map(|d| profiles.get(d.mentor).scholar_id.clone())
            .collect(),
        big_shot: big_shot_experience(corpus, profiles, dyads),
        hub: hub_experience(corpus, dyads),
        outcome,
        num_mentors: dyads.len() as u32,
        first_pub_year: profile.first_pub_year,
        discipline: discipline.clone(),
        gender: profile.gender,
        rank_bin: rank_bin(profile.rank_at_first_pub).expect("ranks are validated at load"),
        years_post_mentorship: post_years,
        avg_mentor_age: avg_mentor_age(profiles, dyads),
        female_mentor_count,
    };

    for (dyad, &mentor_gender) in dyads.iter().zip(&mentor_genders) {
        if mentor_gender == Gender::Unknown {
            continue;
        }
        if let Some(gain) = mentor_gain(corpus, dyad) {
            out.gains.push(MentorGainRecord {
                mentor_id: profiles.get(dyad.mentor).scholar_id.clone(),
                protege_id: protege_id.clone(),
                mentor_gender,
                protege_gender: profile.gender,
                gain,
                discipline: discipline.clone(),
                rank_bin: unit.rank_bin.clone(),
                num_mentors: unit.num_mentors,
                first_pub_year: unit.first_pub_year,
            });
        }
    }
    out.units.push(unit);
}
