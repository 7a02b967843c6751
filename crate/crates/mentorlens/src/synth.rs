//! Seeded synthetic-corpus generator with plantable causal structure.
//!
//! The generator lays out mentor and protege careers explicitly, then draws
//! per-paper citation counts from an overdispersed gamma-Poisson model and
//! attaches every citation to a concrete citing paper of the right year, so
//! the output is an ordinary corpus the whole pipeline can ingest. Planted
//! effects act multiplicatively on the expected citation counts of protege
//! outcome papers, which makes relative impact differences the natural
//! recoverable quantity. A ground-truth sidecar records what was planted so
//! estimates can be scored against it.
//!
//! Outcome papers receive their citations only after every mentor's
//! citation history is final, and the generator measures each protege's
//! big-shot experience from those same records before assigning quintile
//! multipliers. The quintiles the pipeline later computes therefore agree
//! with the planted ones exactly.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::analysis::ComparisonResult;
use crate::corpus::{AuthorRecord, CorpusConfig, PublicationRecord};
use crate::dyads::DyadParams;
use crate::scholars::Gender;
use crate::stats::quantile_groups;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible config: {0}")]
    Infeasible(String),
    #[error("ground truth was generated from seed {truth}, got results for seed {got}")]
    SeedMismatch { truth: u64, got: u64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Multiplicative effects planted on protege outcomes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlantedEffects {
    /// Outcome multiplier per quintile of the protege's measured big-shot
    /// experience (five entries, lowest quintile first).
    pub bigshot_quintile_multipliers: Vec<f64>,
    /// Restrict the quintile multipliers to proteges of these disciplines;
    /// `None` plants them everywhere.
    #[serde(default)]
    pub bigshot_effect_disciplines: Option<std::collections::BTreeSet<String>>,
    /// Outcome multiplier by number of female mentors; the last entry
    /// applies to all larger counts.
    pub female_mentor_outcome_multipliers: Vec<f64>,
    /// Multiplier on joint-paper citations when a female mentor works with
    /// a female protege.
    pub female_mentor_female_protege_gain_multiplier: f64,
}

impl Default for PlantedEffects {
    fn default() -> Self {
        PlantedEffects {
            bigshot_quintile_multipliers: vec![1.0; 5],
            bigshot_effect_disciplines: None,
            female_mentor_outcome_multipliers: vec![1.0],
            female_mentor_female_protege_gain_multiplier: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DisciplineSpec {
    pub name: String,
    pub weight: f64,
    /// Multiplier on expected outcome impact for proteges of this
    /// discipline.
    pub outcome_multiplier: f64,
    /// Multiplier on the median mentor quality in this discipline. Together
    /// with `outcome_multiplier` this plants a genuine confounder for the
    /// matching to remove.
    pub mentor_quality_multiplier: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_scholars: u32,
    pub senior_fraction: f64,
    pub min_year: i32,
    pub horizon_year: i32,
    pub disciplines: Vec<DisciplineSpec>,
    pub n_affiliations: u32,
    /// Extra affiliations outside the allowed region, used to inject region
    /// violations.
    pub n_foreign_affiliations: u32,
    pub unranked_affiliation_fraction: f64,
    pub gender_female_fraction: f64,
    /// Fraction of scholars whose gender attribution clears the 0.95
    /// confidence threshold.
    pub gender_known_fraction: f64,
    /// Fraction of juniors that receive mentors.
    pub mentored_fraction: f64,
    /// Relative weights for mentor counts 1, 2, 3, ...
    pub mentor_count_weights: Vec<f64>,
    pub junior_first_year_range: (i32, i32),
    pub senior_first_year_range: (i32, i32),
    /// Chance per year that a senior publishes another own paper.
    pub senior_paper_rate: f64,
    pub senior_coauthors_range: (u32, u32),
    pub protege_post_papers_range: (u32, u32),
    /// Probability that a protege's record is given a publication gap long
    /// enough to disqualify it.
    pub gap_injection_prob: f64,
    /// Probability that a protege records a foreign affiliation during the
    /// mentorship window.
    pub foreign_affiliation_prob: f64,
    /// Probability that all of a protege's late papers include a mentor.
    pub mentored_post_papers_prob: f64,
    /// Expected five-year citations of a baseline paper.
    pub base_citation_mean: f64,
    /// Expected c5 of a baseline outcome paper.
    pub base_outcome_mean: f64,
    /// Gamma-Poisson dispersion; smaller is heavier-tailed.
    pub citation_dispersion: f64,
    /// Log-scale sigma of mentor quality.
    pub mentor_quality_sigma: f64,
    pub planted: PlantedEffects,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            n_scholars: 20_000,
            senior_fraction: 0.35,
            min_year: 1965,
            horizon_year: 2015,
            disciplines: vec![
                DisciplineSpec {
                    name: "Biology".into(),
                    weight: 0.45,
                    outcome_multiplier: 1.15,
                    mentor_quality_multiplier: 1.3,
                },
                DisciplineSpec {
                    name: "Chemistry".into(),
                    weight: 0.35,
                    outcome_multiplier: 1.0,
                    mentor_quality_multiplier: 1.0,
                },
                DisciplineSpec {
                    name: "Computer Science".into(),
                    weight: 0.20,
                    outcome_multiplier: 0.88,
                    mentor_quality_multiplier: 0.75,
                },
            ],
            n_affiliations: 30,
            n_foreign_affiliations: 2,
            unranked_affiliation_fraction: 0.25,
            gender_female_fraction: 0.45,
            gender_known_fraction: 0.95,
            mentored_fraction: 0.6,
            mentor_count_weights: vec![0.62, 0.22, 0.10, 0.04, 0.02],
            junior_first_year_range: (1988, 2002),
            senior_first_year_range: (1966, 1990),
            senior_paper_rate: 0.08,
            senior_coauthors_range: (1, 2),
            protege_post_papers_range: (3, 4),
            gap_injection_prob: 0.0,
            foreign_affiliation_prob: 0.0,
            mentored_post_papers_prob: 0.0,
            base_citation_mean: 5.0,
            base_outcome_mean: 8.0,
            citation_dispersion: 2.0,
            mentor_quality_sigma: 0.8,
            planted: PlantedEffects::default(),
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        let n_seniors = (self.n_scholars as f64 * self.senior_fraction) as u32;
        if n_seniors == 0 {
            return Err(SynthError::Infeasible("no seniors".into()));
        }
        if n_seniors >= self.n_scholars {
            return Err(SynthError::Infeasible("no juniors".into()));
        }
        if self.disciplines.is_empty() {
            return Err(SynthError::Infeasible("no disciplines".into()));
        }
        if self.planted.bigshot_quintile_multipliers.len() != 5 {
            return Err(SynthError::Infeasible(
                "bigshot_quintile_multipliers must have 5 entries".into(),
            ));
        }
        if self.planted.female_mentor_outcome_multipliers.is_empty()
            || self
                .planted
                .bigshot_quintile_multipliers
                .iter()
                .chain(&self.planted.female_mentor_outcome_multipliers)
                .any(|&m| m <= 0.0)
        {
            return Err(SynthError::Infeasible("multipliers must be positive".into()));
        }
        if self.junior_first_year_range.0 > self.junior_first_year_range.1
            || self.senior_first_year_range.0 > self.senior_first_year_range.1
        {
            return Err(SynthError::Infeasible("bad year range".into()));
        }
        if self.base_citation_mean < 0.0 || self.base_outcome_mean < 0.0 {
            return Err(SynthError::Infeasible("negative citation mean".into()));
        }
        if self.citation_dispersion <= 0.0 {
            return Err(SynthError::Infeasible("dispersion must be positive".into()));
        }
        Ok(())
    }
}

/// Per-protege ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtegeTruth {
    pub scholar_id: String,
    /// Whether the generator expects this protege to survive extraction and
    /// unit assembly.
    pub eligible: bool,
    /// The big-shot experience the pipeline will measure.
    pub big_shot: f64,
    /// Quintile (0-based) among eligible proteges; `None` for ineligible.
    pub bigshot_quintile: Option<u8>,
    pub female_mentor_count: u32,
    pub outcome_multiplier: f64,
    pub expected_outcome: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub planted: PlantedEffects,
    pub corpus_config: CorpusConfig,
    pub domestic_affiliations: Vec<String>,
    pub eligible_fraction: f64,
    pub proteges: Vec<ProtegeTruth>,
}

impl GroundTruth {
    /// Relative impact change planted between adjacent big-shot quintiles
    /// (comparison 0 contrasts quintiles 1 and 2).
    pub fn planted_delta(&self, comparison: usize) -> f64 {
        let m = &self.planted.bigshot_quintile_multipliers;
        100.0 * (m[comparison + 1] / m[comparison] - 1.0)
    }
}

/// Everything the generator produces; the emitted files are a straight
/// serialization of these records.
pub struct SynthCorpus {
    pub publications: Vec<PublicationRecord>,
    pub citations: Vec<(String, String)>,
    pub gender_rows: Vec<(String, Gender, f64)>,
    pub rank_rows: Vec<(String, Option<u32>)>,
    pub taxonomy_rows: Vec<(String, String)>,
    pub ground_truth: GroundTruth,
}

impl SynthCorpus {
    pub fn corpus_config(&self) -> CorpusConfig {
        self.ground_truth.corpus_config.clone()
    }

    pub fn dyad_params(&self) -> DyadParams {
        DyadParams {
            region_allow: Some(
                self.ground_truth
                    .domestic_affiliations
                    .iter()
                    .cloned()
                    .collect(),
            ),
            ..DyadParams::default()
        }
    }

    pub fn taxonomy(&self) -> crate::scholars::DisciplineTaxonomy {
        let map: HashMap<String, String> = self.taxonomy_rows.iter().cloned().collect();
        let admitted = crate::scholars::DEFAULT_DISCIPLINES
            .iter()
            .map(|s| s.to_string())
            .collect();
        crate::scholars::DisciplineTaxonomy::new(map, admitted).expect("non-empty admitted set")
    }

    pub fn gender_source(&self) -> crate::scholars::GenderSource {
        self.gender_rows
            .iter()
            .map(|(id, g, c)| (id.clone(), (*g, *c)))
            .collect()
    }

    pub fn rank_source(&self) -> crate::scholars::RankSource {
        self.rank_rows.iter().cloned().collect()
    }

    /// Build the in-memory corpus the same way the loader would.
    pub fn build(&self) -> crate::corpus::Corpus {
        crate::corpus::build_from_records(
            self.publications.clone(),
            self.citations.clone(),
            self.corpus_config(),
        )
        .expect("generated corpora are valid")
    }

    pub fn write_to_dir(&self, dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(dir)?;
        let mut pubs =
            std::io::BufWriter::new(std::fs::File::create(dir.join("publications.jsonl"))?);
        for record in &self.publications {
            serde_json::to_writer(&mut pubs, record).map_err(std::io::Error::other)?;
            pubs.write_all(b"\n")?;
        }
        pubs.flush()?;

        let mut cites = std::io::BufWriter::new(std::fs::File::create(dir.join("citations.tsv"))?);
        for (citing, cited) in &self.citations {
            writeln!(cites, "{citing}\t{cited}")?;
        }
        cites.flush()?;

        let mut gender = std::io::BufWriter::new(std::fs::File::create(dir.join("gender.csv"))?);
        for (id, g, c) in &self.gender_rows {
            writeln!(gender, "{id},{},{c}", g.as_str())?;
        }
        gender.flush()?;

        let mut ranks = std::io::BufWriter::new(std::fs::File::create(dir.join("ranks.csv"))?);
        for (id, rank) in &self.rank_rows {
            match rank {
                Some(r) => writeln!(ranks, "{id},{r}")?,
                None => writeln!(ranks, "{id},")?,
            }
        }
        ranks.flush()?;

        let mut tax = std::io::BufWriter::new(std::fs::File::create(dir.join("taxonomy.csv"))?);
        for (keyword, discipline) in &self.taxonomy_rows {
            writeln!(tax, "{keyword},{discipline}")?;
        }
        tax.flush()?;

        let truth =
            serde_json::to_string_pretty(&self.ground_truth).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("ground_truth.json"), truth)?;
        Ok(())
    }
}

struct Scholar {
    id: String,
    discipline: usize,
    affiliation: u32,
    gender: Gender,
    confidence: f64,
    first_year: i32,
    quality: f64,
}

struct PlannedPaper {
    year: i32,
    authors: Vec<(usize, Option<u32>)>,
    keyword: String,
    mean_citations: f64,
    is_outcome: bool,
}

struct ProtegePlan {
    scholar: usize,
    mentors: Vec<usize>,
    /// First joint year per mentor, parallel to `mentors`.
    joint_years: Vec<i32>,
    outcome_papers: Vec<usize>,
    gap_injected: bool,
    foreign_injected: bool,
    mentored_post: bool,
}

const CITING_YEAR_WEIGHTS: [f64; 6] = [0.08, 0.22, 0.26, 0.20, 0.14, 0.10];
const JUNIOR_MAX: i32 = 7;

pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    // Affiliations: domestic first, then foreign. Ranks concentrate in a few
    // published range bins so strata stay populated.
    let n_affils = config.n_affiliations + config.n_foreign_affiliations;
    let rank_choices = [110u32, 160, 250, 999];
    let mut rank_rows: Vec<(String, Option<u32>)> = Vec::new();
    for a in 0..n_affils {
        let rank = if rng.random::<f64>() < config.unranked_affiliation_fraction {
            None
        } else {
            Some(rank_choices[rng.random_range(0..rank_choices.len())])
        };
        rank_rows.push((affil_id(a), rank));
    }
    let domestic: Vec<String> = (0..config.n_affiliations).map(affil_id).collect();

    let taxonomy_rows: Vec<(String, String)> = config
        .disciplines
        .iter()
        .enumerate()
        .flat_map(|(d, spec)| (0..3).map(move |k| (format!("kw_{d}_{k}"), spec.name.clone())))
        .collect();

    // Scholars, seniors first.
    let n_seniors = (config.n_scholars as f64 * config.senior_fraction) as usize;
    let discipline_weights: Vec<f64> = config.disciplines.iter().map(|d| d.weight).collect();
    let mut scholars: Vec<Scholar> = Vec::with_capacity(config.n_scholars as usize);
    for i in 0..config.n_scholars as usize {
        let is_senior = i < n_seniors;
        let discipline = weighted_choice(&mut rng, &discipline_weights);
        let affiliation = rng.random_range(0..config.n_affiliations);
        let gender = if rng.random::<f64>() < config.gender_female_fraction {
            Gender::Female
        } else {
            Gender::Male
        };
        // Keep a margin below the 0.95 threshold so rounding the written
        // value never flips a scholar across it.
        let confidence = if rng.random::<f64>() < config.gender_known_fraction {
            rng.random_range(0.95..=1.0)
        } else {
            rng.random_range(0.5..0.94)
        };
        let (lo, hi) = if is_senior {
            config.senior_first_year_range
        } else {
            config.junior_first_year_range
        };
        let quality_scale = config.disciplines[discipline].mentor_quality_multiplier;
        let quality = LogNormal::new(quality_scale.ln(), config.mentor_quality_sigma)
            .expect("finite sigma")
            .sample(&mut rng);
        scholars.push(Scholar {
            id: scholar_id(i),
            discipline,
            affiliation,
            gender,
            confidence,
            first_year: rng.random_range(lo..=hi),
            quality,
        });
    }

    // Senior pools per (discipline, affiliation), sorted by first year.
    let mut pools: HashMap<(usize, u32), Vec<usize>> = HashMap::new();
    for (i, s) in scholars.iter().take(n_seniors).enumerate() {
        pools.entry((s.discipline, s.affiliation)).or_default().push(i);
    }
    for pool in pools.values_mut() {
        pool.sort_by_key(|&i| (scholars[i].first_year, i));
    }

    let mut papers: Vec<PlannedPaper> = Vec::new();
    let mut papers_of: Vec<Vec<usize>> = vec![Vec::new(); scholars.len()];

    // Senior careers: first paper plus a thin stream, coauthored with other
    // seniors already past their own junior span, so no senior is ever
    // junior on a generated paper and every dyad is one the plan intended.
    let last_senior_year = config.horizon_year - 3;
    for owner in 0..n_seniors {
        let first = scholars[owner].first_year;
        let mut years = vec![first];
        for year in (first + 1)..=last_senior_year {
            if rng.random::<f64>() < config.senior_paper_rate {
                years.push(year);
            }
        }
        for year in years {
            let n_coauthors = rng
                .random_range(config.senior_coauthors_range.0..=config.senior_coauthors_range.1);
            let mut authors = vec![owner];
            let owner_is_senior = year - scholars[owner].first_year >= 8;
            for _ in 0..n_coauthors {
                let affil = if owner_is_senior && rng.random::<f64>() < 0.5 {
                    scholars[owner].affiliation
                } else {
                    // While the owner is still junior, a same-affiliation
                    // senior coauthor would mint a mentor the plan never
                    // intended; draw from elsewhere.
                    let mut a = rng.random_range(0..config.n_affiliations);
                    if !owner_is_senior && a == scholars[owner].affiliation && config.n_affiliations > 1 {
                        a = (a + 1) % config.n_affiliations;
                    }
                    a
                };
                let candidate = sample_senior(
                    &mut rng,
                    &pools,
                    (scholars[owner].discipline, affil),
                    year - 8,
                    &scholars,
                    0.0,
                );
                if let Some(c) = candidate {
                    if !authors.contains(&c) {
                        authors.push(c);
                    }
                }
            }
            let mean = config.base_citation_mean * scholars[owner].quality;
            let keyword = keyword_for(&mut rng, scholars[owner].discipline);
            push_paper(
                &mut papers,
                &mut papers_of,
                PlannedPaper {
                    year,
                    authors: authors
                        .into_iter()
                        .map(|s| (s, Some(scholars[s].affiliation)))
                        .collect(),
                    keyword,
                    mean_citations: mean,
                    is_outcome: false,
                },
            );
        }
    }

    // Protege careers.
    let mut plans: Vec<ProtegePlan> = Vec::new();
    for junior in n_seniors..scholars.len() {
        let x = scholars[junior].first_year;
        let disc = scholars[junior].discipline;
        let affil = scholars[junior].affiliation;

        if rng.random::<f64>() >= config.mentored_fraction {
            // Background population with a small solo record.
            for offset in [0, rng.random_range(1..=3)] {
                let keyword = keyword_for(&mut rng, disc);
                push_paper(
                    &mut papers,
                    &mut papers_of,
                    PlannedPaper {
                        year: (x + offset).min(config.horizon_year),
                        authors: vec![(junior, Some(affil))],
                        keyword,
                        mean_citations: config.base_citation_mean * 0.5,
                        is_outcome: false,
                    },
                );
            }
            continue;
        }

        let gap_injected = rng.random::<f64>() < config.gap_injection_prob;
        let foreign_injected = config.n_foreign_affiliations > 0
            && rng.random::<f64>() < config.foreign_affiliation_prob;
        let mentored_post = rng.random::<f64>() < config.mentored_post_papers_prob;

        let want = weighted_choice(&mut rng, &config.mentor_count_weights) + 1;
        let mut mentors: Vec<usize> = Vec::new();
        for _ in 0..want * 3 {
            if mentors.len() == want {
                break;
            }
            if let Some(m) =
                sample_senior(&mut rng, &pools, (disc, affil), x - 8, &scholars, 0.65)
            {
                if !mentors.contains(&m) {
                    mentors.push(m);
                }
            }
        }
        if mentors.is_empty() {
            // No compatible senior at this affiliation; stays unmentored.
            let keyword = keyword_for(&mut rng, disc);
            push_paper(
                &mut papers,
                &mut papers_of,
                PlannedPaper {
                    year: x,
                    authors: vec![(junior, Some(affil))],
                    keyword,
                    mean_citations: config.base_citation_mean * 0.5,
                    is_outcome: false,
                },
            );
            continue;
        }
        mentors.sort_unstable();

        // The career's first paper anchors the window.
        let keyword = keyword_for(&mut rng, disc);
        push_paper(
            &mut papers,
            &mut papers_of,
            PlannedPaper {
                year: x,
                authors: vec![(junior, Some(affil))],
                keyword,
                mean_citations: config.base_citation_mean * 0.5,
                is_outcome: false,
            },
        );

        // One joint paper per mentor inside the window. With an injected gap
        // all window activity is squeezed early so the hole to the post
        // period disqualifies the record.
        let mut joint_years = Vec::with_capacity(mentors.len());
        let mut window_years = vec![x];
        for (k, &mentor) in mentors.iter().enumerate() {
            let offset = if gap_injected || k == 0 {
                rng.random_range(0..=2)
            } else {
                rng.random_range(1..=6)
            };
            let year = x + offset;
            joint_years.push(year);
            window_years.push(year);
            let gain_mult = if scholars[mentor].gender == Gender::Female
                && scholars[junior].gender == Gender::Female
            {
                config.planted.female_mentor_female_protege_gain_multiplier
            } else {
                1.0
            };
            let keyword = keyword_for(&mut rng, disc);
            push_paper(
                &mut papers,
                &mut papers_of,
                PlannedPaper {
                    year,
                    authors: vec![(junior, Some(affil)), (mentor, Some(affil))],
                    keyword,
                    mean_citations: config.base_citation_mean * gain_mult,
                    is_outcome: false,
                },
            );
        }

        // Post papers. Solo outcome papers, unless the mentored-post failure
        // is being injected, in which case they never enter outcomes and get
        // baseline citations right away.
        let n_post = rng
            .random_range(config.protege_post_papers_range.0..=config.protege_post_papers_range.1);
        let last_outcome_year = config.horizon_year - 5;
        let mut post_years = Vec::new();
        let mut year = x + JUNIOR_MAX + 1 + rng.random_range(0..=1);
        for _ in 0..n_post {
            if year > last_outcome_year {
                break;
            }
            post_years.push(year);
            year += rng.random_range(1..=3);
        }

        // Fillers keep every non-injected record free of long gaps, inside
        // the window and across the window boundary.
        if !gap_injected {
            window_years.sort_unstable();
            window_years.dedup();
            let boundary = post_years.first().copied().unwrap_or(x + JUNIOR_MAX + 1);
            let mut covered = window_years.clone();
            covered.push(boundary);
            covered.sort_unstable();
            let mut fillers = Vec::new();
            for w in covered.windows(2) {
                let mut at = w[0];
                while w[1] - at >= 5 {
                    at += 3;
                    fillers.push(at.min(x + JUNIOR_MAX));
                }
            }
            fillers.retain(|&y| y <= x + JUNIOR_MAX && !window_years.contains(&y));
            fillers.sort_unstable();
            fillers.dedup();
            for y in fillers {
                let keyword = keyword_for(&mut rng, disc);
                push_paper(
                    &mut papers,
                    &mut papers_of,
                    PlannedPaper {
                        year: y,
                        authors: vec![(junior, Some(affil))],
                        keyword,
                        mean_citations: config.base_citation_mean * 0.5,
                        is_outcome: false,
                    },
                );
            }
        }

        if foreign_injected {
            let foreign =
                config.n_affiliations + rng.random_range(0..config.n_foreign_affiliations);
            let keyword = keyword_for(&mut rng, disc);
            push_paper(
                &mut papers,
                &mut papers_of,
                PlannedPaper {
                    year: x + rng.random_range(1..=JUNIOR_MAX),
                    authors: vec![(junior, Some(foreign))],
                    keyword,
                    mean_citations: config.base_citation_mean * 0.5,
                    is_outcome: false,
                },
            );
        }

        let mut outcome_papers = Vec::new();
        for &y in &post_years {
            let authors = if mentored_post {
                vec![
                    (junior, Some(affil)),
                    (mentors[0], Some(scholars[mentors[0]].affiliation)),
                ]
            } else {
                vec![(junior, Some(affil))]
            };
            let keyword = keyword_for(&mut rng, disc);
            let idx = papers.len();
            push_paper(
                &mut papers,
                &mut papers_of,
                PlannedPaper {
                    year: y,
                    authors,
                    keyword,
                    mean_citations: if mentored_post {
                        config.base_citation_mean
                    } else {
                        0.0
                    },
                    is_outcome: !mentored_post,
                },
            );
            if !mentored_post {
                outcome_papers.push(idx);
            }
        }

        plans.push(ProtegePlan {
            scholar: junior,
            mentors,
            joint_years,
            outcome_papers,
            gap_injected,
            foreign_injected,
            mentored_post,
        });
    }

    // Citing-paper pools by year.
    let mut pools_by_year: HashMap<i32, Vec<usize>> = HashMap::new();
    for (idx, paper) in papers.iter().enumerate() {
        pools_by_year.entry(paper.year).or_default().push(idx);
    }

    // First citation pass: everything except outcome papers, so mentor
    // citation histories are final before effects are planted.
    let mut realized: Vec<Vec<(i32, u32)>> = vec![Vec::new(); papers.len()];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for cited in 0..papers.len() {
        if papers[cited].is_outcome {
            continue;
        }
        let mean = papers[cited].mean_citations;
        attach_citations(
            &mut rng,
            cited,
            mean,
            config.citation_dispersion,
            config.horizon_year,
            &papers,
            &pools_by_year,
            &mut realized,
            &mut edges,
        );
    }

    // Measure each protege's big-shot experience exactly as the pipeline
    // will, decide eligibility, and assign quintiles among the eligible.
    let last_outcome_year = config.horizon_year - 5;
    let mut truths: Vec<ProtegeTruth> = Vec::with_capacity(plans.len());
    let mut eligible_idx: Vec<usize> = Vec::new();
    for (p, plan) in plans.iter().enumerate() {
        let mut rate_sum = 0.0;
        for (&mentor, &y0) in plan.mentors.iter().zip(&plan.joint_years) {
            let mut citations = 0u64;
            for &paper in &papers_of[mentor] {
                for &(year, count) in &realized[paper] {
                    if year <= y0 {
                        citations += count as u64;
                    }
                }
            }
            let years = (y0 - scholars[mentor].first_year + 1) as f64;
            rate_sum += citations as f64 / years;
        }
        let big_shot = rate_sum / plan.mentors.len() as f64;

        let x = scholars[plan.scholar].first_year;
        let gender_known = scholars[plan.scholar].confidence >= 0.95;
        let post_ok = (config.horizon_year - 4) - x - JUNIOR_MAX > 0;
        let has_outcome = plan
            .outcome_papers
            .iter()
            .any(|&i| papers[i].year <= last_outcome_year);
        let eligible = gender_known
            && post_ok
            && !plan.gap_injected
            && !plan.foreign_injected
            && !plan.mentored_post
            && has_outcome;
        let female_mentors = plan
            .mentors
            .iter()
            .filter(|&&m| scholars[m].gender == Gender::Female)
            .count() as u32;
        truths.push(ProtegeTruth {
            scholar_id: scholars[plan.scholar].id.clone(),
            eligible,
            big_shot,
            bigshot_quintile: None,
            female_mentor_count: female_mentors,
            outcome_multiplier: 1.0,
            expected_outcome: 0.0,
        });
        if eligible {
            eligible_idx.push(p);
        }
    }

    if eligible_idx.len() >= 5 {
        let values: Vec<f64> = eligible_idx.iter().map(|&p| truths[p].big_shot).collect();
        let groups = quantile_groups(&values, 5).expect("eligible count checked");
        for (q, group) in groups.iter().enumerate() {
            for &local in group {
                truths[eligible_idx[local]].bigshot_quintile = Some(q as u8);
            }
        }
    }

    // Second citation pass: outcome papers with planted multipliers.
    for (p, plan) in plans.iter().enumerate() {
        let discipline = &config.disciplines[scholars[plan.scholar].discipline];
        let disc_mult = discipline.outcome_multiplier;
        let effect_applies = config
            .planted
            .bigshot_effect_disciplines
            .as_ref()
            .map(|set| set.contains(&discipline.name))
            .unwrap_or(true);
        let q_mult = truths[p]
            .bigshot_quintile
            .filter(|_| effect_applies)
            .map(|q| config.planted.bigshot_quintile_multipliers[q as usize])
            .unwrap_or(1.0);
        let fm = &config.planted.female_mentor_outcome_multipliers;
        let f_mult = fm[(truths[p].female_mentor_count as usize).min(fm.len() - 1)];
        let multiplier = q_mult * f_mult;
        let mean = config.base_outcome_mean * disc_mult * multiplier;
        truths[p].outcome_multiplier = multiplier;
        truths[p].expected_outcome = mean;
        for &paper in &plan.outcome_papers {
            attach_citations(
                &mut rng,
                paper,
                mean,
                config.citation_dispersion,
                config.horizon_year,
                &papers,
                &pools_by_year,
                &mut realized,
                &mut edges,
            );
        }
    }

    let publications: Vec<PublicationRecord> = papers
        .iter()
        .enumerate()
        .map(|(idx, paper)| PublicationRecord {
            paper_id: paper_id(idx),
            year: paper.year,
            venue: None,
            authors: paper
                .authors
                .iter()
                .map(|&(s, affil)| AuthorRecord {
                    scholar_id: scholars[s].id.clone(),
                    affiliation_id: affil.map(affil_id),
                })
                .collect(),
            keywords: vec![paper.keyword.clone()],
        })
        .collect();
    let mut citation_rows: Vec<(String, String)> = edges
        .into_iter()
        .map(|(citing, cited)| (paper_id(citing), paper_id(cited)))
        .collect();
    citation_rows.sort();

    let gender_rows = scholars
        .iter()
        .map(|s| {
            (
                s.id.clone(),
                s.gender,
                (s.confidence * 1000.0).round() / 1000.0,
            )
        })
        .collect();

    let eligible_fraction = if plans.is_empty() {
        0.0
    } else {
        eligible_idx.len() as f64 / plans.len() as f64
    };

    Ok(SynthCorpus {
        publications,
        citations: citation_rows,
        gender_rows,
        rank_rows,
        taxonomy_rows,
        ground_truth: GroundTruth {
            seed: config.seed,
            planted: config.planted.clone(),
            corpus_config: CorpusConfig {
                min_year: config.min_year,
                horizon_year: config.horizon_year,
                max_malformed_fraction: 0.01,
                exclude_author_self_citations: false,
            },
            domestic_affiliations: domestic,
            eligible_fraction,
            proteges: truths,
        },
    })
}

fn push_paper(papers: &mut Vec<PlannedPaper>, papers_of: &mut [Vec<usize>], paper: PlannedPaper) {
    let idx = papers.len();
    for &(s, _) in &paper.authors {
        papers_of[s].push(idx);
    }
    papers.push(paper);
}

/// Draw a citation count, spread it over the five-year window, and attach
/// each citation to a distinct citing paper of the right year.
#[allow(clippy::too_many_arguments)]
fn attach_citations(
    rng: &mut ChaCha8Rng,
    cited: usize,
    mean: f64,
    dispersion: f64,
    horizon_year: i32,
    papers: &[PlannedPaper],
    pools_by_year: &HashMap<i32, Vec<usize>>,
    realized: &mut [Vec<(i32, u32)>],
    edges: &mut Vec<(usize, usize)>,
) {
    if mean <= 0.0 {
        return;
    }
    let lambda = Gamma::new(dispersion, mean / dispersion)
        .expect("positive parameters")
        .sample(rng);
    let total = if lambda > 1e-9 {
        (Poisson::new(lambda).expect("positive lambda").sample(rng) as u64).min(300)
    } else {
        0
    };
    if total == 0 {
        return;
    }
    let mut per_year = [0u32; 6];
    for _ in 0..total {
        per_year[weighted_choice(rng, &CITING_YEAR_WEIGHTS)] += 1;
    }
    let base_year = papers[cited].year;
    for (offset, &count) in per_year.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let year = base_year + offset as i32;
        if year > horizon_year {
            continue;
        }
        let Some(pool) = pools_by_year.get(&year) else {
            continue;
        };
        if pool.len() <= 1 {
            continue;
        }
        let want = (count as usize).min(pool.len() - 1);
        // One extra draw covers the cited paper appearing in its own pool.
        let draw = (want + 1).min(pool.len());
        let mut attached = 0u32;
        for idx in rand::seq::index::sample(rng, pool.len(), draw) {
            if attached as usize == want {
                break;
            }
            let citing = pool[idx];
            if citing == cited {
                continue;
            }
            attached += 1;
            edges.push((citing, cited));
        }
        if attached > 0 {
            realized[cited].push((year, attached));
        }
    }
}

/// Pick a senior from the pool whose first year is at most `latest_first`.
/// `youth_bias` in [0, 1) skews the pick toward later starters; 0 is
/// uniform.
fn sample_senior(
    rng: &mut ChaCha8Rng,
    pools: &HashMap<(usize, u32), Vec<usize>>,
    key: (usize, u32),
    latest_first: i32,
    scholars: &[Scholar],
    youth_bias: f64,
) -> Option<usize> {
    let pool = pools.get(&key)?;
    let eligible = pool.partition_point(|&i| scholars[i].first_year <= latest_first);
    if eligible == 0 {
        return None;
    }
    let u: f64 = rng.random();
    let shaped = if youth_bias > 0.0 {
        1.0 - (1.0 - u).powf(1.0 / (1.0 - youth_bias))
    } else {
        u
    };
    let idx = ((shaped * eligible as f64) as usize).min(eligible - 1);
    Some(pool[idx])
}

fn weighted_choice(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut draw = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        draw -= w;
        if draw <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

fn keyword_for(rng: &mut ChaCha8Rng, discipline: usize) -> String {
    format!("kw_{discipline}_{}", rng.random_range(0..3))
}

fn scholar_id(i: usize) -> String {
    format!("s{i:07}")
}

fn paper_id(i: usize) -> String {
    format!("p{i:07}")
}

fn affil_id(i: u32) -> String {
    format!("u{i:03}")
}

/// One row of the estimate-versus-truth summary.
#[derive(Debug, Clone, Serialize)]
pub struct GroundTruthRow {
    pub label: String,
    pub estimated_delta: Option<f64>,
    pub planted_delta: f64,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
}

/// Score estimated quintile deltas against the planted ones. `seed` is the
/// seed the scored pipeline ran on; it must match the sidecar.
pub fn ground_truth_report(
    truth: &GroundTruth,
    comparisons: &[ComparisonResult],
    seed: u64,
) -> Result<Vec<GroundTruthRow>, SynthError> {
    if truth.seed != seed {
        return Err(SynthError::SeedMismatch {
            truth: truth.seed,
            got: seed,
        });
    }
    Ok(comparisons
        .iter()
        .take(4)
        .enumerate()
        .map(|(i, row)| {
            let planted = truth.planted_delta(i);
            let abs_error = row.delta_pct.map(|d| (d - planted).abs());
            GroundTruthRow {
                label: row.label.clone(),
                estimated_delta: row.delta_pct,
                planted_delta: planted,
                abs_error,
                rel_error: abs_error.map(|e| {
                    if planted.abs() > 1e-12 {
                        e / planted.abs()
                    } else {
                        e
                    }
                }),
            }
        })
        .collect())
}
