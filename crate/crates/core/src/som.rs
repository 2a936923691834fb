//! Batch Self-Organizing Map.
//!
//! Units sit on a `width × height` lattice, indexed row-major
//! (`i = row * width + col`). Distances in data space are Euclidean over the
//! observed components of the input, rescaled by `√(n / observed)` so that
//! partially observed rows stay comparable with complete ones.
//!
//! Training is deterministic: PCA initialization followed by `iterations`
//! batch epochs whose Gaussian radius shrinks linearly from half the grid
//! diagonal to `sigma_final`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::Sample;
use crate::error::{Error, Result};
use crate::pca;
use crate::scalar::Scalar;

pub const DEFAULT_WIDTH: usize = 13;
pub const DEFAULT_HEIGHT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct TrainConfig<F> {
    pub iterations: usize,
    pub sigma_final: F,
    /// Reserved for randomized variants; the default pipeline does not draw
    /// random numbers.
    pub seed: u64,
    /// Replace the Gaussian kernel by `h = 1 iff i = b(j)`, which turns each
    /// epoch into a Lloyd k-means step.
    #[serde(default)]
    pub hard_assignment: bool,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        TrainConfig {
            iterations: 40,
            sigma_final: F::one(),
            seed: 0,
            hard_assignment: false,
        }
    }
}

impl<F: Scalar> TrainConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.sigma_final > F::zero()) || !self.sigma_final.is_finite() {
            return Err(Error::InvalidConfig("sigma_final must be positive".into()));
        }
        Ok(())
    }
}

/// Neighborhood kernel over squared grid distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Neighborhood<F> {
    Gaussian { sigma: F },
    Hard,
}

impl<F: Scalar> Neighborhood<F> {
    pub fn weight_sq(&self, grid_dist_sq: F) -> F {
        match *self {
            Neighborhood::Gaussian { sigma } => {
                (-grid_dist_sq / (F::lit(2.0) * sigma * sigma)).exp()
            }
            Neighborhood::Hard => {
                if grid_dist_sq == F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
        }
    }
}

/// Gaussian neighborhood `exp(−d² / 2σ²)` at grid distance `d`.
pub fn neighborhood<F: Scalar>(grid_distance: F, sigma: F) -> F {
    Neighborhood::Gaussian { sigma }.weight_sq(grid_distance * grid_distance)
}

/// Radius at iteration `t ∈ 1..=iterations`, linear from `√(X²+Y²)/2` to
/// `sigma_final`.
pub fn radius_schedule<F: Scalar>(
    t: usize,
    iterations: usize,
    width: usize,
    height: usize,
    sigma_final: F,
) -> F {
    let (x, y) = (F::from_count(width), F::from_count(height));
    let sigma0 = (x * x + y * y).sqrt() / F::lit(2.0);
    if t >= iterations {
        return sigma_final;
    }
    let frac = F::from_count(t.saturating_sub(1)) / F::from_count((iterations - 1).max(1));
    sigma0 + (sigma_final - sigma0) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCoord {
    pub col: usize,
    pub row: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bmu<F> {
    pub unit: usize,
    pub distance: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SomDocument<F>", bound = "F: Scalar")]
pub struct SomModel<F> {
    width: usize,
    height: usize,
    dim_names: Vec<String>,
    refs: Vec<Vec<F>>,
    config: TrainConfig<F>,
}

#[derive(Deserialize)]
#[serde(bound = "F: Scalar")]
struct SomDocument<F> {
    width: usize,
    height: usize,
    dim_names: Vec<String>,
    refs: Vec<Vec<F>>,
    config: TrainConfig<F>,
}

impl<F: Scalar> TryFrom<SomDocument<F>> for SomModel<F> {
    type Error = Error;

    fn try_from(d: SomDocument<F>) -> Result<Self> {
        SomModel::from_refs(d.width, d.height, d.dim_names, d.refs, d.config)
    }
}

/// Squared masked distance, already rescaled by `n / observed`.
fn masked_sq<F: Scalar>(x: &Sample<F>, reference: &[F]) -> Option<F> {
    let mut sum = F::zero();
    let mut obs = 0usize;
    for ((v, &o), m) in x.values.iter().zip(&x.observed).zip(reference) {
        if o {
            let d = *v - *m;
            sum = sum + d * d;
            obs += 1;
        }
    }
    (obs > 0).then(|| sum * (F::from_count(x.dim()) / F::from_count(obs)))
}

/// Euclidean distance over the observed components of `x`, scaled by
/// `√(n / #observed)`. `None` when nothing is observed.
pub fn masked_distance<F: Scalar>(x: &Sample<F>, reference: &[F]) -> Option<F> {
    masked_sq(x, reference).map(F::sqrt)
}

/// Best-matching reference among `refs`; ties go to the lowest index.
pub fn best_match<F: Scalar>(refs: &[Vec<F>], x: &Sample<F>) -> Result<Bmu<F>> {
    let mut best: Option<(usize, F)> = None;
    for (i, m) in refs.iter().enumerate() {
        let d = masked_sq(x, m).ok_or(Error::AllMissing)?;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    let (unit, d2) = best.ok_or_else(|| Error::InvalidModel("no reference vectors".into()))?;
    Ok(Bmu {
        unit,
        distance: d2.sqrt(),
    })
}

impl<F: Scalar> SomModel<F> {
    pub fn from_refs(
        width: usize,
        height: usize,
        dim_names: Vec<String>,
        refs: Vec<Vec<F>>,
        config: TrainConfig<F>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidModel("grid must be at least 1×1".into()));
        }
        if refs.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: refs.len(),
            });
        }
        let n = dim_names.len();
        for r in &refs {
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("reference vector".into()));
            }
        }
        Ok(SomModel {
            width,
            height,
            dim_names,
            refs,
            config,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn units(&self) -> usize {
        self.refs.len()
    }

    pub fn dim(&self) -> usize {
        self.dim_names.len()
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    pub fn refs(&self) -> &[Vec<F>] {
        &self.refs
    }

    pub fn config(&self) -> &TrainConfig<F> {
        &self.config
    }

    pub fn coord(&self, unit: usize) -> GridCoord {
        GridCoord {
            col: unit % self.width,
            row: unit / self.width,
        }
    }

    pub fn grid_distance_sq(&self, a: usize, b: usize) -> F {
        let (ca, cb) = (self.coord(a), self.coord(b));
        let dx = F::from_count(ca.col.abs_diff(cb.col));
        let dy = F::from_count(ca.row.abs_diff(cb.row));
        dx * dx + dy * dy
    }

    pub fn find_bmu(&self, x: &Sample<F>) -> Result<Bmu<F>> {
        self.check_dim(x)?;
        best_match(&self.refs, x)
    }

    fn check_dim(&self, x: &Sample<F>) -> Result<()> {
        if x.dim() != self.dim() || x.observed.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.dim(),
            });
        }
        Ok(())
    }

    /// Per-unit value of indicator `k`.
    pub fn component_plane(&self, k: usize) -> Result<Vec<F>> {
        if k >= self.dim() {
            return Err(Error::UnknownIndicator(k.to_string()));
        }
        Ok(self.refs.iter().map(|r| r[k]).collect())
    }

    /// Grid coordinates of the BMU of each row, in order.
    pub fn project_trajectory(&self, rows: &[Sample<F>]) -> Result<Vec<GridCoord>> {
        rows.iter()
            .map(|x| self.find_bmu(x).map(|b| self.coord(b.unit)))
            .collect()
    }

    /// Mean masked distance from each row to its BMU; zero for no rows.
    pub fn quantization_error(&self, data: &[Sample<F>]) -> Result<F> {
        if data.is_empty() {
            return Ok(F::zero());
        }
        let dists = data
            .par_iter()
            .map(|x| self.find_bmu(x).map(|b| b.distance))
            .collect::<Result<Vec<F>>>()?;
        Ok(dists.into_iter().sum::<F>() / F::from_count(data.len()))
    }

    /// One batch update. BMUs are found against the current model, then each
    /// component of each unit becomes the kernel-weighted mean of the rows
    /// that observe that component; units with zero weight keep their value.
    ///
    /// Sums run over rows in input order, so the result does not depend on
    /// how the work is split across threads.
    pub fn batch_epoch(&self, data: &[Sample<F>], kernel: Neighborhood<F>) -> Result<Self> {
        if data.is_empty() {
            return Ok(self.clone());
        }
        let bmus = data
            .par_iter()
            .map(|x| self.find_bmu(x).map(|b| b.unit))
            .collect::<Result<Vec<usize>>>()?;
        let m = self.units();
        let weights: Vec<F> = (0..m * m)
            .map(|ib| kernel.weight_sq(self.grid_distance_sq(ib / m, ib % m)))
            .collect();
        let dim = self.dim();
        let refs = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut num = vec![F::zero(); dim];
                let mut den = vec![F::zero(); dim];
                for (x, &b) in data.iter().zip(&bmus) {
                    let h = weights[i * m + b];
                    if h == F::zero() {
                        continue;
                    }
                    for k in 0..dim {
                        if x.observed[k] {
                            num[k] = num[k] + h * x.values[k];
                            den[k] = den[k] + h;
                        }
                    }
                }
                (0..dim)
                    .map(|k| {
                        if den[k] > F::zero() {
                            num[k] / den[k]
                        } else {
                            self.refs[i][k]
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(SomModel {
            refs,
            ..self.clone()
        })
    }

    /// Per-unit class distribution of labeled rows. Units that receive no row
    /// inherit from the nearest non-empty unit on the grid.
    pub fn state_layer<S: AsRef<str>>(&self, labeled: &[(Sample<F>, S)]) -> Result<StateLayer<F>> {
        if labeled.is_empty() {
            return Err(Error::InvalidConfig("state layer needs labeled rows".into()));
        }
        let mut classes: Vec<String> = labeled.iter().map(|(_, c)| c.as_ref().to_string()).collect();
        classes.sort();
        classes.dedup();
        let m = self.units();
        let mut counts = vec![vec![0usize; classes.len()]; m];
        for (x, c) in labeled {
            let b = self.find_bmu(x)?.unit;
            let ci = classes
                .binary_search_by(|k| k.as_str().cmp(c.as_ref()))
                .expect("class collected above");
            counts[b][ci] += 1;
        }
        let hits: Vec<usize> = counts.iter().map(|c| c.iter().sum()).collect();
        let units = (0..m)
            .map(|i| {
                let (source, inherited) = if hits[i] > 0 {
                    (i, false)
                } else {
                    let nearest = (0..m)
                        .filter(|&j| hits[j] > 0)
                        .min_by(|&a, &b| {
                            self.grid_distance_sq(i, a)
                                .partial_cmp(&self.grid_distance_sq(i, b))
                                .expect("finite grid distance")
                                .then(a.cmp(&b))
                        })
                        .expect("at least one labeled row");
                    (nearest, true)
                };
                let total = F::from_count(hits[source]);
                let probabilities: Vec<F> = counts[source]
                    .iter()
                    .map(|&c| F::from_count(c) / total)
                    .collect();
                let mut partition = 0;
                for (ci, p) in probabilities.iter().enumerate() {
                    if *p > probabilities[partition] {
                        partition = ci;
                    }
                }
                UnitState {
                    probabilities,
                    partition,
                    hits: hits[i],
                    inherited,
                }
            })
            .collect();
        Ok(StateLayer { classes, units })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct UnitState<F> {
    pub probabilities: Vec<F>,
    pub partition: usize,
    pub hits: usize,
    pub inherited: bool,
}

/// Class-membership layer over the map units. `classes` are sorted; class
/// indices refer to that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct StateLayer<F> {
    pub classes: Vec<String>,
    pub units: Vec<UnitState<F>>,
}

impl<F: Scalar> StateLayer<F> {
    pub fn probability_plane(&self, class: &str) -> Option<Vec<F>> {
        let ci = self.classes.iter().position(|c| c == class)?;
        Some(self.units.iter().map(|u| u.probabilities[ci]).collect())
    }

    pub fn partitions(&self) -> Vec<usize> {
        self.units.iter().map(|u| u.partition).collect()
    }
}

fn complete_rows<F: Scalar>(data: &[Sample<F>]) -> Vec<&[F]> {
    data.iter()
        .filter(|s| s.is_complete())
        .map(|s| s.values.as_slice())
        .collect()
}

/// Principal directions of the complete rows, failing on too few rows or a
/// constant indicator.
pub(crate) fn checked_principal<F: Scalar>(
    data: &[Sample<F>],
    dim_names: &[String],
) -> Result<pca::Principal> {
    if let Some(x) = data.iter().find(|s| s.dim() != dim_names.len()) {
        return Err(Error::DimensionMismatch {
            expected: dim_names.len(),
            found: x.dim(),
        });
    }
    let rows = complete_rows(data);
    if rows.len() < 2 {
        return Err(Error::TooFewCompleteRows {
            needed: 2,
            found: rows.len(),
        });
    }
    if let Some(k) = pca::zero_variance_indicator(&rows) {
        return Err(Error::DegenerateCovariance(dim_names[k].clone()));
    }
    pca::principal_components(&rows)
}

/// Linear offset in standard deviations for position `i` of `n`, spanning
/// −2..=2.
pub(crate) fn span_offset(i: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        -2.0 + 4.0 * i as f64 / (n - 1) as f64
    }
}

/// Lays the grid out on the plane of the two leading principal components
/// of the complete rows, ±2 standard deviations around the mean. The longer
/// grid side follows the first component.
pub fn pca_init<F: Scalar>(
    data: &[Sample<F>],
    width: usize,
    height: usize,
    dim_names: Vec<String>,
    config: TrainConfig<F>,
) -> Result<SomModel<F>> {
    if dim_names.len() < 2 {
        return Err(Error::InvalidConfig(
            "map initialization needs at least two indicators".into(),
        ));
    }
    let p = checked_principal(data, &dim_names)?;
    let sd: Vec<f64> = p.variances.iter().map(|v| v.sqrt()).collect();
    let col_pc = if width >= height { 0 } else { 1 };
    let row_pc = 1 - col_pc;
    let mut refs = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let a = span_offset(col, width) * sd[col_pc];
            let b = span_offset(row, height) * sd[row_pc];
            let v: Vec<F> = (0..dim_names.len())
                .map(|k| {
                    F::lit(p.mean[k] + a * p.components[col_pc][k] + b * p.components[row_pc][k])
                })
                .collect();
            refs.push(v);
        }
    }
    SomModel::from_refs(width, height, dim_names, refs, config)
}

/// PCA initialization followed by `config.iterations` batch epochs.
pub fn train<F: Scalar>(
    data: &[Sample<F>],
    width: usize,
    height: usize,
    dim_names: Vec<String>,
    config: TrainConfig<F>,
) -> Result<SomModel<F>> {
    config.validate()?;
    let mut model = pca_init(data, width, height, dim_names, config)?;
    for t in 1..=config.iterations {
        let kernel = if config.hard_assignment {
            Neighborhood::Hard
        } else {
            Neighborhood::Gaussian {
                sigma: radius_schedule(t, config.iterations, width, height, config.sigma_final),
            }
        };
        model = model.batch_epoch(data, kernel)?;
    }
    Ok(model)
}
