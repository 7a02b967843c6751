//! Experiment orchestration: adjacent-quantile matchings for each
//! experience measure, grouped variants, female-mentor comparisons, and
//! mentor-gain comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning;
use crate::cem::{coarsen, l1_imbalance, match_groups, CemError, CoarseningSpec, CovariateValue, Signature};
use crate::metrics::{MentorGainRecord, ProtegeUnit};
use crate::scholars::Gender;
use crate::stats::{ks_two_sample, quantile_groups, relative_delta, welch_t_test};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("not enough units: {got} for {needed} quantile groups")]
    NotEnoughUnits { got: usize, needed: usize },
    #[error("independent variable `{0}` must not appear in the matching spec")]
    IvInSpec(&'static str),
    #[error(transparent)]
    Cem(#[from] CemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndependentVariable {
    BigShot,
    Hub,
}

impl IndependentVariable {
    pub fn name(self) -> &'static str {
        match self {
            IndependentVariable::BigShot => binning::BIG_SHOT,
            IndependentVariable::Hub => binning::HUB,
        }
    }

    pub fn value(self, unit: &ProtegeUnit) -> f64 {
        match self {
            IndependentVariable::BigShot => unit.big_shot,
            IndependentVariable::Hub => unit.hub,
        }
    }

    /// The opposite experience measure, held similar during matching.
    pub fn cross(self) -> IndependentVariable {
        match self {
            IndependentVariable::BigShot => IndependentVariable::Hub,
            IndependentVariable::Hub => IndependentVariable::BigShot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    None,
    YearBin,
    MentorAgeBin,
    MentorCountBin,
    RankBin,
    Gender,
    Discipline,
}

impl Grouping {
    /// Covariate name this grouping holds fixed (and therefore removes from
    /// the matching spec).
    pub fn held_covariate(self) -> Option<&'static str> {
        match self {
            Grouping::None => None,
            Grouping::YearBin => Some(binning::FIRST_PUB_YEAR),
            Grouping::MentorAgeBin => Some(binning::AVG_MENTOR_AGE),
            Grouping::MentorCountBin => Some(binning::NUM_MENTORS),
            Grouping::RankBin => Some(binning::RANK),
            Grouping::Gender => Some(binning::GENDER),
            Grouping::Discipline => Some(binning::DISCIPLINE),
        }
    }

    /// Group label for a unit. Grouping bins are coarser than the matching
    /// bins: wide year spans, wide mentor-age spans, the published rank
    /// ranges pooled into six groups.
    pub fn label(self, unit: &ProtegeUnit) -> String {
        match self {
            Grouping::None => "all".to_string(),
            Grouping::YearBin => {
                let y = unit.first_pub_year;
                if y < 1990 {
                    "<1990".into()
                } else if y < 1995 {
                    "1990-1994".into()
                } else if y < 2000 {
                    "1995-1999".into()
                } else if y < 2005 {
                    "2000-2004".into()
                } else if y < 2010 {
                    "2005-2009".into()
                } else {
                    ">=2010".into()
                }
            }
            Grouping::MentorAgeBin => {
                let a = unit.avg_mentor_age;
                if a < 11.0 {
                    "8-10".into()
                } else if a < 15.0 {
                    "11-14".into()
                } else if a < 20.0 {
                    "15-19".into()
                } else if a < 25.0 {
                    "20-24".into()
                } else if a < 30.0 {
                    "25-29".into()
                } else {
                    ">=30".into()
                }
            }
            Grouping::MentorCountBin => match unit.num_mentors {
                1 => "1".into(),
                2 => "2".into(),
                3 => "3".into(),
                4 | 5 => "4-5".into(),
                _ => ">5".into(),
            },
            Grouping::RankBin => match unit.rank_bin.parse::<u32>() {
                Ok(r) if r <= 20 => "1-20".into(),
                Ok(r) if r <= 50 => "21-50".into(),
                Ok(_) => "51-100".into(),
                Err(_) => match unit.rank_bin.as_str() {
                    "101-150" | "151-200" => "101-200".into(),
                    "201-300" | "301-400" | "401-500" => "201-500".into(),
                    _ => ">500".into(),
                },
            },
            Grouping::Gender => unit.gender.as_str().to_string(),
            Grouping::Discipline => unit.discipline.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub iv: IndependentVariable,
    pub grouping: Grouping,
    /// Replaces the default matching spec; the IV's own rule and the held
    /// grouping covariate are still stripped.
    pub spec_override: Option<CoarseningSpec>,
    /// Apply matching weights to the control-group mean.
    pub weighted: bool,
    /// Matched sides smaller than this are flagged.
    pub min_group: usize,
}

impl ExperimentPlan {
    pub fn new(iv: IndependentVariable) -> Self {
        ExperimentPlan {
            iv,
            grouping: Grouping::None,
            spec_override: None,
            weighted: false,
            min_group: 20,
        }
    }
}

/// One comparison row: a matched contrast between a control and a treatment
/// group of units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub label: String,
    pub group: Option<String>,
    pub n_treated: usize,
    pub n_control: usize,
    pub n_matched_treated: usize,
    pub n_matched_control: usize,
    /// Post-match imbalance on the matching spec; `None` when nothing
    /// matched.
    pub l1: Option<f64>,
    pub l1_before: Option<f64>,
    pub imp_control: Option<f64>,
    pub imp_treatment: Option<f64>,
    pub delta_pct: Option<f64>,
    pub p_t: Option<f64>,
    pub p_ks: Option<f64>,
    /// Matched groups below the minimum size; results are reported but not
    /// trustworthy.
    pub flagged_small: bool,
    pub diagnostic: Option<String>,
}

/// Default matching spec for an IV: every confounder plus the opposite
/// experience measure; the IV itself must never be matched on.
pub fn matching_spec_for(iv: IndependentVariable) -> CoarseningSpec {
    let cross = match iv.cross() {
        IndependentVariable::BigShot => binning::big_shot_rule(),
        IndependentVariable::Hub => binning::hub_rule(),
    };
    CoarseningSpec::new(vec![
        binning::num_mentors_rule(),
        binning::first_pub_year_rule(),
        binning::gender_rule(),
        binning::rank_rule(),
        binning::avg_mentor_age_rule(),
        binning::years_post_mentorship_rule(),
        binning::discipline_rule(),
        cross,
    ])
    .expect("default rules are valid")
}

fn covariate_value(unit: &ProtegeUnit, name: &str) -> CovariateValue {
    match name {
        binning::BIG_SHOT => CovariateValue::Num(unit.big_shot),
        binning::HUB => CovariateValue::Num(unit.hub),
        binning::NUM_MENTORS => CovariateValue::Num(unit.num_mentors as f64),
        binning::FIRST_PUB_YEAR => CovariateValue::Num(unit.first_pub_year as f64),
        binning::GENDER => CovariateValue::Cat(unit.gender.as_str().to_string()),
        binning::RANK => CovariateValue::Cat(unit.rank_bin.clone()),
        binning::AVG_MENTOR_AGE => CovariateValue::Num(unit.avg_mentor_age),
        binning::YEARS_POST_MENTORSHIP => CovariateValue::Num(unit.years_post_mentorship as f64),
        binning::DISCIPLINE => CovariateValue::Cat(unit.discipline.clone()),
        other => panic!("unknown covariate `{other}`"),
    }
}

fn signatures_for(units: &[&ProtegeUnit], spec: &CoarseningSpec) -> Result<Vec<Signature>, CemError> {
    units
        .iter()
        .map(|unit| {
            let values: Vec<CovariateValue> = spec
                .rules
                .iter()
                .map(|rule| covariate_value(unit, rule.name()))
                .collect();
            coarsen(&values, spec)
        })
        .collect()
}

/// Match `treated` against `control` on `spec` and summarize outcomes.
fn compare_matched(
    label: String,
    group: Option<String>,
    control: &[&ProtegeUnit],
    treated: &[&ProtegeUnit],
    spec: &CoarseningSpec,
    outcome: impl Fn(&ProtegeUnit) -> f64,
    weighted: bool,
    min_group: usize,
) -> Result<ComparisonResult, AnalysisError> {
    let treated_sigs = signatures_for(treated, spec)?;
    let control_sigs = signatures_for(control, spec)?;
    let matched = match_groups(&treated_sigs, &control_sigs)?;

    let treated_outcomes: Vec<f64> = matched
        .matched_treated
        .iter()
        .map(|&i| outcome(treated[i]))
        .collect();
    let control_outcomes: Vec<f64> = matched
        .matched_control
        .iter()
        .map(|&i| outcome(control[i]))
        .collect();

    let imp_treatment = mean(&treated_outcomes);
    let imp_control = if weighted {
        let values: Vec<f64> = matched
            .control_weights
            .iter()
            .map(|&(i, _)| outcome(control[i]))
            .collect();
        let weights: Vec<f64> = matched.control_weights.iter().map(|&(_, w)| w).collect();
        crate::cem::weighted_mean(&values, &weights)
    } else {
        mean(&control_outcomes)
    };

    let delta_pct = match (imp_control, imp_treatment) {
        (Some(c), Some(t)) => relative_delta(c, t),
        _ => None,
    };
    let p_t = (treated_outcomes.len() >= 2 && control_outcomes.len() >= 2)
        .then(|| welch_t_test(&treated_outcomes, &control_outcomes).ok())
        .flatten()
        .map(|r| r.p_value);
    let p_ks = (!treated_outcomes.is_empty() && !control_outcomes.is_empty())
        .then(|| ks_two_sample(&treated_outcomes, &control_outcomes).ok())
        .flatten()
        .map(|r| r.p_value);

    let flagged_small = matched.n_matched_treated() < min_group || matched.n_matched_control() < min_group;
    let diagnostic = if matched.n_matched_treated() == 0 {
        Some("all strata pruned".to_string())
    } else if flagged_small {
        Some(format!(
            "matched groups below minimum size {min_group}"
        ))
    } else {
        None
    };

    Ok(ComparisonResult {
        label,
        group,
        n_treated: treated.len(),
        n_control: control.len(),
        n_matched_treated: matched.n_matched_treated(),
        n_matched_control: matched.n_matched_control(),
        l1: matched.l1_after,
        l1_before: Some(matched.l1_before),
        imp_control,
        imp_treatment,
        delta_pct,
        p_t,
        p_ks,
        flagged_small,
        diagnostic,
    })
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn plan_spec(plan: &ExperimentPlan) -> Result<CoarseningSpec, AnalysisError> {
    let mut spec = plan
        .spec_override
        .clone()
        .unwrap_or_else(|| matching_spec_for(plan.iv));
    if let Some(held) = plan.grouping.held_covariate() {
        spec = spec.without(held);
    }
    // The treatment indicator must never double as a matching covariate.
    if spec.rule(plan.iv.name()).is_some() {
        return Err(AnalysisError::IvInSpec(plan.iv.name()));
    }
    Ok(spec)
}

/// Split units into quintiles of the plan's IV and match each adjacent pair:
/// the lower quintile is the control group, the upper the treatment group.
pub fn quintile_cem(
    units: &[ProtegeUnit],
    plan: &ExperimentPlan,
) -> Result<Vec<ComparisonResult>, AnalysisError> {
    let refs: Vec<&ProtegeUnit> = units.iter().collect();
    quintile_cem_refs(&refs, plan, None)
}

fn quintile_cem_refs(
    units: &[&ProtegeUnit],
    plan: &ExperimentPlan,
    group: Option<String>,
) -> Result<Vec<ComparisonResult>, AnalysisError> {
    if units.len() < 5 {
        return Err(AnalysisError::NotEnoughUnits {
            got: units.len(),
            needed: 5,
        });
    }
    let spec = plan_spec(plan)?;
    let values: Vec<f64> = units.iter().map(|u| plan.iv.value(u)).collect();
    let groups = quantile_groups(&values, 5).map_err(|_| AnalysisError::NotEnoughUnits {
        got: units.len(),
        needed: 5,
    })?;
    let quintiles: Vec<Vec<&ProtegeUnit>> = groups
        .into_iter()
        .map(|g| g.into_iter().map(|i| units[i]).collect())
        .collect();

    let comparisons: Vec<Result<ComparisonResult, AnalysisError>> = (0..4)
        .into_par_iter()
        .map(|i| {
            let label = format!("Q{} vs Q{}", i + 1, i + 2);
            let control = &quintiles[i];
            let treated = &quintiles[i + 1];
            if control.is_empty() || treated.is_empty() {
                return Ok(ComparisonResult {
                    label,
                    group: group.clone(),
                    n_treated: treated.len(),
                    n_control: control.len(),
                    n_matched_treated: 0,
                    n_matched_control: 0,
                    l1: None,
                    l1_before: None,
                    imp_control: None,
                    imp_treatment: None,
                    delta_pct: None,
                    p_t: None,
                    p_ks: None,
                    flagged_small: true,
                    diagnostic: Some("empty quantile group (tied values)".to_string()),
                });
            }
            compare_matched(
                label,
                group.clone(),
                control,
                treated,
                &spec,
                |u| u.outcome,
                plan.weighted,
                plan.min_group,
            )
        })
        .collect();
    comparisons.into_iter().collect()
}

/// Per-group summary: the mean of the four adjacent-quintile deltas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub n_units: usize,
    pub mean_delta_pct: Option<f64>,
}

/// Recompute quintiles within each group of the held covariate and run the
/// four adjacent-quintile matchings per group. Groups too small for stable
/// results are skipped with a diagnostic row.
pub fn grouped_cem(
    units: &[ProtegeUnit],
    plan: &ExperimentPlan,
) -> Result<(Vec<ComparisonResult>, Vec<GroupSummary>), AnalysisError> {
    let mut by_group: std::collections::BTreeMap<String, Vec<&ProtegeUnit>> =
        std::collections::BTreeMap::new();
    for unit in units {
        by_group.entry(plan.grouping.label(unit)).or_default().push(unit);
    }
    let min_units = 5 * plan.min_group;
    let groups: Vec<(String, Vec<&ProtegeUnit>)> = by_group.into_iter().collect();
    let per_group: Vec<(String, usize, Option<Vec<ComparisonResult>>)> = groups
        .par_iter()
        .map(|(name, members)| {
            if members.len() < min_units {
                return (name.clone(), members.len(), None);
            }
            let rows = quintile_cem_refs(members, plan, Some(name.clone())).ok();
            (name.clone(), members.len(), rows)
        })
        .collect();

    let mut all_rows = Vec::new();
    let mut summaries = Vec::new();
    for (name, n_units, rows) in per_group {
        match rows {
            Some(rows) => {
                let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta_pct).collect();
                summaries.push(GroupSummary {
                    group: name,
                    n_units,
                    mean_delta_pct: mean(&deltas),
                });
                all_rows.extend(rows);
            }
            None => {
                summaries.push(GroupSummary {
                    group: name.clone(),
                    n_units,
                    mean_delta_pct: None,
                });
                all_rows.push(ComparisonResult {
                    label: "skipped".to_string(),
                    group: Some(name),
                    n_treated: 0,
                    n_control: 0,
                    n_matched_treated: 0,
                    n_matched_control: 0,
                    l1: None,
                    l1_before: None,
                    imp_control: None,
                    imp_treatment: None,
                    delta_pct: None,
                    p_t: None,
                    p_ks: None,
                    flagged_small: true,
                    diagnostic: Some(format!("group below {min_units} units")),
                });
            }
        }
    }
    all_rows.sort_by(|a, b| (a.group.clone(), a.label.clone()).cmp(&(b.group.clone(), b.label.clone())));
    Ok((all_rows, summaries))
}

/// Covariates for the female-mentor comparisons: big-shot bins stand in for
/// overall mentor quality; the mentor-composition covariates stay out.
fn female_mentor_spec() -> CoarseningSpec {
    CoarseningSpec::new(vec![
        binning::big_shot_rule(),
        binning::num_mentors_rule(),
        binning::gender_rule(),
        binning::discipline_rule(),
        binning::rank_rule(),
        binning::first_pub_year_rule(),
    ])
    .expect("default rules are valid")
}

/// Compare proteges with no female mentors against those with exactly `i`
/// female mentors, for each i = 1..=5 with enough units. Only units whose
/// entire mentor set has known gender enter; the protege gender is fixed by
/// the caller.
pub fn female_mentor_cem(
    units: &[ProtegeUnit],
    protege_gender: Gender,
    min_group: usize,
) -> Result<Vec<ComparisonResult>, AnalysisError> {
    let spec = female_mentor_spec();
    let eligible: Vec<&ProtegeUnit> = units
        .iter()
        .filter(|u| u.gender == protege_gender && u.female_mentor_count.is_some())
        .collect();
    let baseline: Vec<&ProtegeUnit> = eligible
        .iter()
        .copied()
        .filter(|u| u.female_mentor_count == Some(0))
        .collect();
    let mut rows = Vec::new();
    for i in 1..=5u32 {
        let label = format!("F0 vs F{i}");
        let treated: Vec<&ProtegeUnit> = eligible
            .iter()
            .copied()
            .filter(|u| u.female_mentor_count == Some(i))
            .collect();
        if treated.len() < min_group || baseline.len() < min_group {
            rows.push(ComparisonResult {
                label,
                group: Some(protege_gender.as_str().to_string()),
                n_treated: treated.len(),
                n_control: baseline.len(),
                n_matched_treated: 0,
                n_matched_control: 0,
                l1: None,
                l1_before: None,
                imp_control: None,
                imp_treatment: None,
                delta_pct: None,
                p_t: None,
                p_ks: None,
                flagged_small: true,
                diagnostic: Some("insufficient units".to_string()),
            });
            continue;
        }
        rows.push(compare_matched(
            label,
            Some(protege_gender.as_str().to_string()),
            &baseline,
            &treated,
            &spec,
            |u| u.outcome,
            false,
            min_group,
        )?);
    }
    Ok(rows)
}

fn gain_spec() -> CoarseningSpec {
    CoarseningSpec::new(vec![
        binning::discipline_rule(),
        binning::rank_rule(),
        binning::num_mentors_rule(),
        binning::first_pub_year_rule(),
    ])
    .expect("default rules are valid")
}

fn gain_value(record: &MentorGainRecord, name: &str) -> CovariateValue {
    match name {
        binning::DISCIPLINE => CovariateValue::Cat(record.discipline.clone()),
        binning::RANK => CovariateValue::Cat(record.rank_bin.clone()),
        binning::NUM_MENTORS => CovariateValue::Num(record.num_mentors as f64),
        binning::FIRST_PUB_YEAR => CovariateValue::Num(record.first_pub_year as f64),
        other => panic!("unknown gain covariate `{other}`"),
    }
}

/// Within each mentor gender, compare the mentor's citation gain from
/// female proteges (treatment) against male proteges (control), matching
/// protege records on discipline, rank, mentor count, and first year.
pub fn mentor_gain_comparison(
    records: &[MentorGainRecord],
    min_group: usize,
) -> Result<Vec<ComparisonResult>, AnalysisError> {
    let spec = gain_spec();
    let mut rows = Vec::new();
    for mentor_gender in [Gender::Female, Gender::Male] {
        let label = format!("female vs male proteges of {} mentors", mentor_gender.as_str());
        let of_gender: Vec<&MentorGainRecord> = records
            .iter()
            .filter(|r| r.mentor_gender == mentor_gender)
            .collect();
        let treated: Vec<&MentorGainRecord> = of_gender
            .iter()
            .copied()
            .filter(|r| r.protege_gender == Gender::Female)
            .collect();
        let control: Vec<&MentorGainRecord> = of_gender
            .iter()
            .copied()
            .filter(|r| r.protege_gender == Gender::Male)
            .collect();
        if treated.is_empty() || control.is_empty() {
            rows.push(ComparisonResult {
                label,
                group: Some(mentor_gender.as_str().to_string()),
                n_treated: treated.len(),
                n_control: control.len(),
                n_matched_treated: 0,
                n_matched_control: 0,
                l1: None,
                l1_before: None,
                imp_control: None,
                imp_treatment: None,
                delta_pct: None,
                p_t: None,
                p_ks: None,
                flagged_small: true,
                diagnostic: Some("no records for one side".to_string()),
            });
            continue;
        }
        let treated_sigs: Vec<Signature> = treated
            .iter()
            .map(|r| {
                let values: Vec<CovariateValue> =
                    spec.rules.iter().map(|rule| gain_value(r, rule.name())).collect();
                coarsen(&values, &spec)
            })
            .collect::<Result<_, _>>()?;
        let control_sigs: Vec<Signature> = control
            .iter()
            .map(|r| {
                let values: Vec<CovariateValue> =
                    spec.rules.iter().map(|rule| gain_value(r, rule.name())).collect();
                coarsen(&values, &spec)
            })
            .collect::<Result<_, _>>()?;
        let matched = match_groups(&treated_sigs, &control_sigs)?;
        let treated_gains: Vec<f64> = matched.matched_treated.iter().map(|&i| treated[i].gain).collect();
        let control_gains: Vec<f64> = matched.matched_control.iter().map(|&i| control[i].gain).collect();
        let imp_treatment = mean(&treated_gains);
        let imp_control = mean(&control_gains);
        let delta_pct = match (imp_control, imp_treatment) {
            (Some(c), Some(t)) => relative_delta(c, t),
            _ => None,
        };
        let p_t = (treated_gains.len() >= 2 && control_gains.len() >= 2)
            .then(|| welch_t_test(&treated_gains, &control_gains).ok())
            .flatten()
            .map(|r| r.p_value);
        let p_ks = (!treated_gains.is_empty() && !control_gains.is_empty())
            .then(|| ks_two_sample(&treated_gains, &control_gains).ok())
            .flatten()
            .map(|r| r.p_value);
        let flagged_small =
            matched.n_matched_treated() < min_group || matched.n_matched_control() < min_group;
        rows.push(ComparisonResult {
            label,
            group: Some(mentor_gender.as_str().to_string()),
            n_treated: treated.len(),
            n_control: control.len(),
            n_matched_treated: matched.n_matched_treated(),
            n_matched_control: matched.n_matched_control(),
            l1: matched.l1_after,
            l1_before: Some(matched.l1_before),
            imp_control,
            imp_treatment,
            delta_pct,
            p_t,
            p_ks,
            flagged_small,
            diagnostic: if matched.n_matched_treated() == 0 {
                Some("all strata pruned".to_string())
            } else {
                None
            },
        });
    }
    Ok(rows)
}

/// Pre-match imbalance between two unit groups on a spec, exposed for
/// balance diagnostics.
pub fn imbalance(
    group_a: &[&ProtegeUnit],
    group_b: &[&ProtegeUnit],
    spec: &CoarseningSpec,
) -> Result<f64, AnalysisError> {
    let a = signatures_for(group_a, spec)?;
    let b = signatures_for(group_b, spec)?;
    Ok(l1_imbalance(&a, &b)?)
}
