//! Early-warning model: pooled logistic scoring of percentile-scaled
//! indicators with an exact per-group decomposition of the linear score.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::cube::DataCube;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::TimePoint;

pub const DEFAULT_GROUP_NAMES: [&str; 3] = [
    "domestic macroeconomic",
    "credit and asset imbalances",
    "global imbalances",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorGroup {
    pub name: String,
    pub indicators: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EwmDocument<F>", bound = "F: Scalar")]
pub struct EwmModel<F> {
    groups: Vec<IndicatorGroup>,
    weights: BTreeMap<String, F>,
    bias: F,
}

#[derive(Deserialize)]
#[serde(bound = "F: Scalar")]
struct EwmDocument<F> {
    groups: Vec<IndicatorGroup>,
    weights: BTreeMap<String, F>,
    bias: F,
}

impl<F: Scalar> TryFrom<EwmDocument<F>> for EwmModel<F> {
    type Error = Error;

    fn try_from(d: EwmDocument<F>) -> Result<Self> {
        EwmModel::new(d.groups, d.weights, d.bias)
    }
}

impl<F: Scalar> EwmModel<F> {
    pub fn new(
        groups: Vec<IndicatorGroup>,
        weights: BTreeMap<String, F>,
        bias: F,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for g in &groups {
            for k in &g.indicators {
                if !seen.insert(k.as_str()) {
                    return Err(Error::InvalidModel(format!(
                        "indicator {k:?} belongs to more than one group"
                    )));
                }
                if !weights.contains_key(k) {
                    return Err(Error::InvalidModel(format!("no weight for indicator {k:?}")));
                }
            }
        }
        if let Some(k) = weights.keys().find(|k| !seen.contains(k.as_str())) {
            return Err(Error::InvalidModel(format!("indicator {k:?} is in no group")));
        }
        if !bias.is_finite() || weights.values().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("model weights".into()));
        }
        Ok(EwmModel {
            groups,
            weights,
            bias,
        })
    }

    pub fn zeros(groups: Vec<IndicatorGroup>) -> Result<Self> {
        let weights = groups
            .iter()
            .flat_map(|g| g.indicators.iter().map(|k| (k.clone(), F::zero())))
            .collect();
        EwmModel::new(groups, weights, F::zero())
    }

    pub fn groups(&self) -> &[IndicatorGroup] {
        &self.groups
    }

    pub fn weights(&self) -> &BTreeMap<String, F> {
        &self.weights
    }

    pub fn bias(&self) -> F {
        self.bias
    }

    /// Indicators in group order.
    pub fn indicators(&self) -> Vec<&str> {
        self.groups
            .iter()
            .flat_map(|g| g.indicators.iter().map(String::as_str))
            .collect()
    }
}

pub fn logistic<F: Scalar>(score: F) -> F {
    F::one() / (F::one() + (-score).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RiskRow<F> {
    pub entity: String,
    pub time: TimePoint,
    pub score: F,
    pub probability: F,
    /// Aligned with `RiskSeries::groups`.
    pub contributions: Vec<F>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub entity: String,
    pub time: TimePoint,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct RiskSeries<F> {
    pub groups: Vec<String>,
    pub bias: F,
    pub rows: Vec<RiskRow<F>>,
    pub skipped: Vec<SkippedRow>,
}

impl<F: Scalar> RiskSeries<F> {
    pub fn for_entity<'a>(&'a self, entity: &'a str) -> impl Iterator<Item = &'a RiskRow<F>> + 'a {
        self.rows.iter().filter(move |r| r.entity == entity)
    }
}

fn model_columns<F: Scalar>(model: &EwmModel<F>, cube: &DataCube<F>) -> Result<Vec<Vec<(usize, F)>>> {
    model
        .groups
        .iter()
        .map(|g| {
            g.indicators
                .iter()
                .map(|k| Ok((cube.indicator_index(k)?, model.weights[k])))
                .collect()
        })
        .collect()
}

/// Scores every (entity, time) of a percentile-scaled cube. Rows missing
/// any model indicator are listed in `skipped`.
///
/// `contribution(g) = Σ_{k∈g} w_k · x_k/100` and the score is
/// `bias + contribution(g₁) + contribution(g₂) + …` summed in that order.
pub fn score<F: Scalar>(model: &EwmModel<F>, cube: &DataCube<F>) -> Result<RiskSeries<F>> {
    let columns = model_columns(model, cube)?;
    let hundred = F::lit(100.0);
    let (ne, nt, _) = cube.shape();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for e in 0..ne {
        for t in 0..nt {
            let missing: Vec<String> = columns
                .iter()
                .flatten()
                .filter(|(k, _)| cube.value(e, t, *k).is_none())
                .map(|(k, _)| cube.indicators()[*k].clone())
                .collect();
            if !missing.is_empty() {
                skipped.push(SkippedRow {
                    entity: cube.entities()[e].clone(),
                    time: cube.times()[t].clone(),
                    missing,
                });
                continue;
            }
            let contributions: Vec<F> = columns
                .iter()
                .map(|group| {
                    group.iter().fold(F::zero(), |acc, &(k, w)| {
                        acc + w * (cube.value(e, t, k).expect("checked above") / hundred)
                    })
                })
                .collect();
            let score = contributions.iter().fold(model.bias, |acc, &c| acc + c);
            rows.push(RiskRow {
                entity: cube.entities()[e].clone(),
                time: cube.times()[t].clone(),
                score,
                probability: logistic(score),
                contributions,
            });
        }
    }
    Ok(RiskSeries {
        groups: model.groups.iter().map(|g| g.name.clone()).collect(),
        bias: model.bias,
        rows,
        skipped,
    })
}

/// A class label attached to an (entity, time) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub entity: String,
    pub time: TimePoint,
    pub label: String,
}

impl LabelRecord {
    pub fn as_binary(&self) -> Result<bool> {
        match self.label.to_ascii_lowercase().as_str() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(Error::InvalidConfig(format!(
                "label {other:?} for ({},{}) is not binary",
                self.entity, self.time
            ))),
        }
    }
}

/// Reads `entity,time,label` rows.
pub fn read_labels<R: Read>(reader: R) -> Result<Vec<LabelRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::row(1, format!("missing column {name:?}")))
    };
    let (ec, tc, lc) = (col("entity")?, col("time")?, col("label")?);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line());
        let raw = rec.get(tc).unwrap_or("");
        out.push(LabelRecord {
            entity: rec.get(ec).unwrap_or("").to_string(),
            time: TimePoint::parse(raw)
                .map_err(|_| Error::row(row, format!("unparseable time {raw:?}")))?,
            label: rec.get(lc).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "F: Scalar")]
pub struct FitConfig<F> {
    /// Initial step of each iteration; halved until the objective does not
    /// decrease.
    pub learning_rate: F,
    pub iterations: usize,
    pub l2: F,
    /// Stop once the gradient norm falls to this value.
    pub tolerance: F,
}

impl<F: Scalar> Default for FitConfig<F> {
    fn default() -> Self {
        FitConfig {
            learning_rate: F::one(),
            iterations: 20_000,
            l2: F::lit(1e-3),
            tolerance: F::lit(1e-8),
        }
    }
}

/// Mean penalized log-likelihood of a logistic model; parameters are
/// `[bias, w₁, …, wₙ]` and the bias is not penalized.
#[derive(Debug, Clone)]
pub struct LogisticObjective<F> {
    pub features: Vec<Vec<F>>,
    pub labels: Vec<F>,
    pub l2: F,
}

fn softplus<F: Scalar>(s: F) -> F {
    s.max(F::zero()) + (-s.abs()).exp().ln_1p()
}

impl<F: Scalar> LogisticObjective<F> {
    fn linear(&self, params: &[F], x: &[F]) -> F {
        x.iter()
            .zip(&params[1..])
            .fold(params[0], |acc, (xi, wi)| acc + *wi * *xi)
    }

    pub fn value(&self, params: &[F]) -> F {
        let n = F::from_count(self.labels.len());
        let ll = self
            .features
            .iter()
            .zip(&self.labels)
            .map(|(x, &y)| {
                let s = self.linear(params, x);
                y * s - softplus(s)
            })
            .sum::<F>()
            / n;
        let penalty: F = params[1..].iter().map(|w| *w * *w).sum();
        ll - self.l2 * penalty / F::lit(2.0)
    }

    pub fn gradient(&self, params: &[F]) -> Vec<F> {
        let n = F::from_count(self.labels.len());
        let mut g = vec![F::zero(); params.len()];
        for (x, &y) in self.features.iter().zip(&self.labels) {
            let r = y - logistic(self.linear(params, x));
            g[0] = g[0] + r;
            for (gk, xk) in g[1..].iter_mut().zip(x) {
                *gk = *gk + r * *xk;
            }
        }
        for v in &mut g {
            *v = *v / n;
        }
        for (gk, wk) in g[1..].iter_mut().zip(&params[1..]) {
            *gk = *gk - self.l2 * *wk;
        }
        g
    }
}

fn norm<F: Scalar>(v: &[F]) -> F {
    v.iter().map(|x| *x * *x).sum::<F>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct FitOutcome<F> {
    pub model: EwmModel<F>,
    pub iterations: usize,
    pub gradient_norm: F,
    pub converged: bool,
    pub warning: Option<String>,
}

/// Assembles the design matrix from a percentile-scaled cube: one row per
/// labeled (entity, time) with every model indicator observed, features
/// scaled to [0, 1].
pub fn design<F: Scalar>(
    cube: &DataCube<F>,
    labels: &[LabelRecord],
    groups: &[IndicatorGroup],
    l2: F,
) -> Result<LogisticObjective<F>> {
    let cols: Vec<usize> = groups
        .iter()
        .flat_map(|g| g.indicators.iter())
        .map(|k| cube.indicator_index(k))
        .collect::<Result<_>>()?;
    let time_index: HashMap<&TimePoint, usize> =
        cube.times().iter().enumerate().map(|(i, t)| (t, i)).collect();
    let hundred = F::lit(100.0);
    let mut features = Vec::new();
    let mut ys = Vec::new();
    for l in labels {
        let y = l.as_binary()?;
        let e = cube.entity_index(&l.entity)?;
        let t = *time_index
            .get(&l.time)
            .ok_or_else(|| Error::UnknownTime(l.time.to_string()))?;
        let x: Option<Vec<F>> = cols
            .iter()
            .map(|&k| cube.value(e, t, k).map(|v| v / hundred))
            .collect();
        if let Some(x) = x {
            features.push(x);
            ys.push(if y { F::one() } else { F::zero() });
        }
    }
    Ok(LogisticObjective {
        features,
        labels: ys,
        l2,
    })
}

/// Penalized maximum-likelihood fit by full-batch gradient ascent from
/// zero. Halts at the iteration cap with a warning when it does not
/// converge (typically separable data without a penalty).
pub fn fit<F: Scalar>(
    cube: &DataCube<F>,
    labels: &[LabelRecord],
    groups: Vec<IndicatorGroup>,
    config: FitConfig<F>,
) -> Result<FitOutcome<F>> {
    if !(config.learning_rate > F::zero()) || config.l2 < F::zero() || config.iterations == 0 {
        return Err(Error::InvalidConfig(
            "learning_rate and iterations must be positive, l2 non-negative".into(),
        ));
    }
    let objective = design(cube, labels, &groups, config.l2)?;
    let positives = objective.labels.iter().filter(|&&y| y == F::one()).count();
    if positives == 0 || positives == objective.labels.len() {
        return Err(Error::OneClassLabels);
    }
    let dim = objective.features[0].len() + 1;
    let mut params = vec![F::zero(); dim];
    let mut value = objective.value(&params);
    let mut grad = objective.gradient(&params);
    let mut iterations = 0;
    let mut converged = false;
    let mut warning = None;
    while iterations < config.iterations {
        if norm(&grad) <= config.tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let mut step = config.learning_rate;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<F> = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| *p + step * *g)
                .collect();
            let v = objective.value(&trial);
            if v.is_finite() && v >= value {
                params = trial;
                value = v;
                accepted = true;
                break;
            }
            step = step / F::lit(2.0);
        }
        if !accepted || params.iter().any(|p| !p.is_finite()) {
            warning = Some(format!("line search stalled at iteration {iterations}"));
            break;
        }
        grad = objective.gradient(&params);
    }
    if !converged && norm(&grad) <= config.tolerance {
        converged = true;
    }
    if !converged && warning.is_none() {
        warning = Some(format!(
            "no convergence within {} iterations (gradient norm {}); labels may be separable",
            config.iterations,
            norm(&grad)
        ));
    }
    let names: Vec<String> = groups
        .iter()
        .flat_map(|g| g.indicators.iter().cloned())
        .collect();
    let weights = names.into_iter().zip(params[1..].iter().copied()).collect();
    Ok(FitOutcome {
        model: EwmModel::new(groups, weights, params[0])?,
        iterations,
        gradient_norm: norm(&grad),
        converged,
        warning,
    })
}
