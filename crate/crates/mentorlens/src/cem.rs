//! Coarsened exact matching: coarsening rules, stratification, pruning,
//! matching weights, and the L1 multivariate imbalance statistic.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CemError {
    #[error("covariate vector has {got} values, spec has {expected} rules")]
    ArityMismatch { got: usize, expected: usize },
    #[error("covariate `{covariate}`: label `{label}` not admitted")]
    UnknownLabel { covariate: String, label: String },
    #[error("covariate `{covariate}` expects a {expected} value")]
    TypeMismatch {
        covariate: String,
        expected: &'static str,
    },
    #[error("numeric edges for `{0}` must be strictly ascending")]
    EdgesNotAscending(String),
    #[error("need at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("not enough values ({n}) for {k} quantile bins")]
    NotEnoughValues { n: usize, k: usize },
    #[error("group `{0}` is empty")]
    EmptyGroup(&'static str),
}

/// One coarsened covariate value.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateValue {
    Num(f64),
    Cat(String),
}

/// Binning rule for one covariate.
///
/// Numeric bins are lower-inclusive and upper-exclusive with open-ended
/// extremes: `edges = [e0, e1]` produces `(-inf, e0)`, `[e0, e1)`,
/// `[e1, +inf)`. Labels, when present, name the bins in order and must have
/// `edges.len() + 1` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoarseningRule {
    Numeric {
        name: String,
        edges: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    Categorical {
        name: String,
        labels: Vec<String>,
    },
}

impl CoarseningRule {
    pub fn name(&self) -> &str {
        match self {
            CoarseningRule::Numeric { name, .. } => name,
            CoarseningRule::Categorical { name, .. } => name,
        }
    }

    fn validate(&self) -> Result<(), CemError> {
        match self {
            CoarseningRule::Numeric { name, edges, labels } => {
                if edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(CemError::EdgesNotAscending(name.clone()));
                }
                if let Some(labels) = labels {
                    if labels.len() != edges.len() + 1 {
                        return Err(CemError::ArityMismatch {
                            got: labels.len(),
                            expected: edges.len() + 1,
                        });
                    }
                }
                Ok(())
            }
            CoarseningRule::Categorical { .. } => Ok(()),
        }
    }

    /// Bin index for one value.
    pub fn bin(&self, value: &CovariateValue) -> Result<u16, CemError> {
        match (self, value) {
            (CoarseningRule::Numeric { edges, .. }, CovariateValue::Num(v)) => {
                Ok(edges.partition_point(|e| e <= v) as u16)
            }
            (CoarseningRule::Categorical { name, labels }, CovariateValue::Cat(label)) => labels
                .iter()
                .position(|l| l == label)
                .map(|i| i as u16)
                .ok_or_else(|| CemError::UnknownLabel {
                    covariate: name.clone(),
                    label: label.clone(),
                }),
            (CoarseningRule::Numeric { name, .. }, CovariateValue::Cat(_)) => {
                Err(CemError::TypeMismatch {
                    covariate: name.clone(),
                    expected: "numeric",
                })
            }
            (CoarseningRule::Categorical { name, .. }, CovariateValue::Num(_)) => {
                Err(CemError::TypeMismatch {
                    covariate: name.clone(),
                    expected: "categorical",
                })
            }
        }
    }

    /// Human-readable label of a bin index.
    pub fn bin_label(&self, bin: u16) -> String {
        match self {
            CoarseningRule::Numeric { edges, labels, .. } => {
                if let Some(labels) = labels {
                    return labels[bin as usize].clone();
                }
                let b = bin as usize;
                if b == 0 {
                    format!("<{}", edges[0])
                } else if b == edges.len() {
                    format!(">={}", edges[b - 1])
                } else {
                    format!("[{},{})", edges[b - 1], edges[b])
                }
            }
            CoarseningRule::Categorical { labels, .. } => labels[bin as usize].clone(),
        }
    }
}

/// Ordered list of covariate rules. Matching is exact on the tuple of bin
/// indices this spec assigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseningSpec {
    pub rules: Vec<CoarseningRule>,
}

impl CoarseningSpec {
    pub fn new(rules: Vec<CoarseningRule>) -> Result<Self, CemError> {
        for rule in &rules {
            rule.validate()?;
        }
        Ok(CoarseningSpec { rules })
    }

    pub fn arity(&self) -> usize {
        self.rules.len()
    }

    pub fn rule(&self, name: &str) -> Option<&CoarseningRule> {
        self.rules.iter().find(|r| r.name() == name)
    }

    /// Spec with one covariate removed (used when a covariate is held fixed
    /// by grouping instead of matched on).
    pub fn without(&self, name: &str) -> CoarseningSpec {
        CoarseningSpec {
            rules: self
                .rules
                .iter()
                .filter(|r| r.name() != name)
                .cloned()
                .collect(),
        }
    }
}

/// Tuple of bin indices, one per covariate rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature(pub Vec<u16>);

pub fn coarsen(values: &[CovariateValue], spec: &CoarseningSpec) -> Result<Signature, CemError> {
    if values.len() != spec.rules.len() {
        return Err(CemError::ArityMismatch {
            got: values.len(),
            expected: spec.rules.len(),
        });
    }
    let mut bins = Vec::with_capacity(values.len());
    for (value, rule) in values.iter().zip(&spec.rules) {
        bins.push(rule.bin(value)?);
    }
    Ok(Signature(bins))
}

/// Nearest-rank quantile cutoffs for `k` equal-mass bins; duplicate cutoffs
/// collapse, yielding fewer effective bins on tie-heavy data.
pub fn percentile_edges(values: &[f64], k: usize) -> Result<Vec<f64>, CemError> {
    if k < 2 {
        return Err(CemError::TooFewBins(k));
    }
    if values.len() < k {
        return Err(CemError::NotEnoughValues {
            n: values.len(),
            k,
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN covariate"));
    let n = sorted.len();
    let mut edges = Vec::with_capacity(k - 1);
    for j in 1..k {
        let rank = ((j * n) as f64 / k as f64).ceil() as usize;
        let cut = sorted[rank.clamp(1, n) - 1];
        if edges.last() != Some(&cut) {
            edges.push(cut);
        }
    }
    Ok(edges)
}

/// One matched cell: all members share the signature.
#[derive(Debug, Clone)]
pub struct Stratum {
    pub signature: Signature,
    pub treated: Vec<usize>,
    pub control: Vec<usize>,
}

/// Output of one coarsened exact matching.
///
/// Indices refer to positions in the treated/control input slices. Treated
/// units carry weight 1; a control unit in stratum `s` carries
/// `(t_s / c_s) * (|C'| / |T'|)`, which normalizes control weights to sum
/// to `|C'|`.
#[derive(Debug, Clone)]
pub struct MatchResult {
    pub strata: Vec<Stratum>,
    pub matched_treated: Vec<usize>,
    pub matched_control: Vec<usize>,
    pub control_weights: Vec<(usize, f64)>,
    pub n_treated: usize,
    pub n_control: usize,
    pub l1_before: f64,
    pub l1_after: Option<f64>,
}

impl MatchResult {
    pub fn n_matched_treated(&self) -> usize {
        self.matched_treated.len()
    }

    pub fn n_matched_control(&self) -> usize {
        self.matched_control.len()
    }
}

/// Stratify, prune unmatched strata, and weight the survivors.
///
/// `treated` and `control` are coarsened signatures, one per unit. Strata
/// are processed in signature order so the output is independent of input
/// ordering up to the positions the caller chose.
pub fn match_groups(treated: &[Signature], control: &[Signature]) -> Result<MatchResult, CemError> {
    if treated.is_empty() {
        return Err(CemError::EmptyGroup("treated"));
    }
    if control.is_empty() {
        return Err(CemError::EmptyGroup("control"));
    }
    let mut cells: BTreeMap<&Signature, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for (i, sig) in treated.iter().enumerate() {
        cells.entry(sig).or_default().0.push(i);
    }
    for (i, sig) in control.iter().enumerate() {
        cells.entry(sig).or_default().1.push(i);
    }

    let l1_before = l1_from_cells(
        cells.iter().map(|(_, (t, c))| (t.len(), c.len())),
        treated.len(),
        control.len(),
    );

    let strata: Vec<Stratum> = cells
        .into_iter()
        .filter(|(_, (t, c))| !t.is_empty() && !c.is_empty())
        .map(|(sig, (t, c))| Stratum {
            signature: sig.clone(),
            treated: t,
            control: c,
        })
        .collect();

    let matched_treated: Vec<usize> = strata.iter().flat_map(|s| s.treated.iter().copied()).collect();
    let matched_control: Vec<usize> = strata.iter().flat_map(|s| s.control.iter().copied()).collect();

    let mut control_weights = Vec::with_capacity(matched_control.len());
    let l1_after = if strata.is_empty() {
        None
    } else {
        let ratio = matched_control.len() as f64 / matched_treated.len() as f64;
        for stratum in &strata {
            let w = (stratum.treated.len() as f64 / stratum.control.len() as f64) * ratio;
            for &unit in &stratum.control {
                control_weights.push((unit, w));
            }
        }
        Some(l1_from_cells(
            strata.iter().map(|s| (s.treated.len(), s.control.len())),
            matched_treated.len(),
            matched_control.len(),
        ))
    };

    Ok(MatchResult {
        strata,
        matched_treated,
        matched_control,
        control_weights,
        n_treated: treated.len(),
        n_control: control.len(),
        l1_before,
        l1_after,
    })
}

fn l1_from_cells(cells: impl Iterator<Item = (usize, usize)>, n_a: usize, n_b: usize) -> f64 {
    let mut sum = 0.0;
    for (a, b) in cells {
        sum += (a as f64 / n_a as f64 - b as f64 / n_b as f64).abs();
    }
    // accumulated rounding can push fully disjoint groups an ulp past 1
    (sum / 2.0).clamp(0.0, 1.0)
}

/// Half the total variation distance between the two groups' distributions
/// over the multivariate coarsened cross-tabulation. 0 = identical cell
/// frequencies, 1 = disjoint occupancy.
pub fn l1_imbalance(group_a: &[Signature], group_b: &[Signature]) -> Result<f64, CemError> {
    if group_a.is_empty() {
        return Err(CemError::EmptyGroup("a"));
    }
    if group_b.is_empty() {
        return Err(CemError::EmptyGroup("b"));
    }
    let mut cells: BTreeMap<&Signature, (usize, usize)> = BTreeMap::new();
    for sig in group_a {
        cells.entry(sig).or_default().0 += 1;
    }
    for sig in group_b {
        cells.entry(sig).or_default().1 += 1;
    }
    Ok(l1_from_cells(
        cells.into_values(),
        group_a.len(),
        group_b.len(),
    ))
}

/// Weighted mean helper used by the weighted reporting mode.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Option<f64> {
    debug_assert_eq!(values.len(), weights.len());
    let total_weight: f64 = weights.iter().sum();
    if total_weight <= 0.0 {
        return None;
    }
    let sum: f64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
    Some(sum / total_weight)
}
