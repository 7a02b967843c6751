//! Default coarsening rules for the nine matching covariates, with the bin
//! edges the toolkit ships out of the box. Every rule can be overridden by a
//! user-supplied spec file.

use crate::cem::{CoarseningRule, CoarseningSpec};
use crate::scholars::{rank_bin_labels, DEFAULT_DISCIPLINES};

pub const BIG_SHOT: &str = "big_shot";
pub const HUB: &str = "hub";
pub const NUM_MENTORS: &str = "num_mentors";
pub const FIRST_PUB_YEAR: &str = "first_pub_year";
pub const GENDER: &str = "gender";
pub const RANK: &str = "rank";
pub const AVG_MENTOR_AGE: &str = "avg_mentor_age";
pub const YEARS_POST_MENTORSHIP: &str = "years_post_mentorship";
pub const DISCIPLINE: &str = "discipline";

/// Mean pre-mentorship citation rate, ten bins.
pub fn big_shot_rule() -> CoarseningRule {
    CoarseningRule::Numeric {
        name: BIG_SHOT.to_string(),
        edges: vec![4.0, 7.2, 10.6, 14.3, 18.5, 23.4, 29.6, 38.3, 54.3],
        labels: Some(
            [
                "<4.0", "4.0-7.1", "7.2-10.5", "10.6-14.2", "14.3-18.4", "18.5-23.3",
                "23.4-29.5", "29.6-38.2", "38.3-54.2", ">54.2",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ),
    }
}

/// Mean pre-mentorship collaboration degree, ten bins.
pub fn hub_rule() -> CoarseningRule {
    CoarseningRule::Numeric {
        name: HUB.to_string(),
        edges: vec![18.0, 36.0, 58.0, 88.0, 132.0, 199.0, 311.0, 526.0, 1110.0],
        labels: Some(
            [
                "<18", "18-35", "36-57", "58-87", "88-131", "132-198", "199-310",
                "311-525", "526-1109", ">1109",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ),
    }
}

pub fn num_mentors_rule() -> CoarseningRule {
    CoarseningRule::Numeric {
        name: NUM_MENTORS.to_string(),
        edges: vec![2.0, 3.0, 4.0, 6.0],
        labels: Some(
            ["1", "2", "3", "4-5", ">5"].iter().map(|s| s.to_string()).collect(),
        ),
    }
}

pub fn first_pub_year_rule() -> CoarseningRule {
    CoarseningRule::Numeric {
        name: FIRST_PUB_YEAR.to_string(),
        edges: vec![
            1987.0, 1993.0, 1997.0, 1999.0, 2002.0, 2004.0, 2006.0, 2008.0, 2010.0,
        ],
        labels: Some(
            [
                "<1987", "1987-1992", "1993-1996", "1997-1998", "1999-2001",
                "2002-2003", "2004-2005", "2006-2007", "2008-2009", ">=2010",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ),
    }
}

pub fn gender_rule() -> CoarseningRule {
    CoarseningRule::Categorical {
        name: GENDER.to_string(),
        labels: vec!["female".to_string(), "male".to_string()],
    }
}

/// Rank enters matching as the precomputed rank-bin label: singletons 1..100
/// and the six published ranges.
pub fn rank_rule() -> CoarseningRule {
    CoarseningRule::Categorical {
        name: RANK.to_string(),
        labels: rank_bin_labels(),
    }
}

pub fn avg_mentor_age_rule() -> CoarseningRule {
    CoarseningRule::Numeric {
        name: AVG_MENTOR_AGE.to_string(),
        edges: vec![11.0, 13.4, 15.5, 17.3, 19.1, 21.1, 23.6, 26.8, 32.1],
        labels: Some(
            [
                "8-10.9", "11.0-13.3", "13.4-15.4", "15.5-17.2", "17.3-19.0",
                "19.1-21.0", "21.1-23.5", "23.6-26.7", "26.8-32.0", ">=32.1",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        ),
    }
}

pub fn years_post_mentorship_rule() -> CoarseningRule {
    CoarseningRule::Numeric {
        name: YEARS_POST_MENTORSHIP.to_string(),
        edges: vec![2.0, 3.0, 4.0, 5.0, 7.0, 9.0, 12.0, 15.0, 20.0],
        labels: Some(
            ["1", "2", "3", "4", "5-6", "7-8", "9-11", "12-14", "15-19", ">=20"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        ),
    }
}

pub fn discipline_rule() -> CoarseningRule {
    CoarseningRule::Categorical {
        name: DISCIPLINE.to_string(),
        labels: DEFAULT_DISCIPLINES.iter().map(|s| s.to_string()).collect(),
    }
}

/// The full default spec over all nine covariates, in canonical order.
pub fn default_spec() -> CoarseningSpec {
    CoarseningSpec::new(vec![
        big_shot_rule(),
        hub_rule(),
        num_mentors_rule(),
        first_pub_year_rule(),
        gender_rule(),
        rank_rule(),
        avg_mentor_age_rule(),
        years_post_mentorship_rule(),
        discipline_rule(),
    ])
    .expect("default bin edges are ascending")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cem::{coarsen, CovariateValue};

    #[test]
    fn default_spec_has_nine_rules() {
        let spec = default_spec();
        assert_eq!(spec.arity(), 9);
        for rule in &spec.rules {
            match rule {
                CoarseningRule::Numeric { edges, labels, .. } => {
                    assert!(edges.windows(2).all(|w| w[0] < w[1]));
                    assert_eq!(labels.as_ref().unwrap().len(), edges.len() + 1);
                }
                CoarseningRule::Categorical { labels, .. } => assert!(!labels.is_empty()),
            }
        }
    }

    #[test]
    fn big_shot_bins_land_on_published_labels() {
        let spec = CoarseningSpec::new(vec![big_shot_rule()]).unwrap();
        let label = |v: f64| {
            let sig = coarsen(&[CovariateValue::Num(v)], &spec).unwrap();
            spec.rules[0].bin_label(sig.0[0])
        };
        assert_eq!(label(4.0), "4.0-7.1");
        assert_eq!(label(3.9), "<4.0");
        assert_eq!(label(54.2), "38.3-54.2");
        assert_eq!(label(54.3), ">54.2");
    }

    #[test]
    fn mentor_count_four_lands_in_four_to_five() {
        let spec = CoarseningSpec::new(vec![num_mentors_rule()]).unwrap();
        let sig = coarsen(&[CovariateValue::Num(4.0)], &spec).unwrap();
        assert_eq!(spec.rules[0].bin_label(sig.0[0]), "4-5");
    }
}
