//! Self-Organizing Time Map: a chain of one-dimensional batch SOMs, one per
//! time slice. The first slice starts on the first principal component of
//! its data; every later slice starts from the previous slice's trained
//! reference vectors, which keeps unit orientation comparable over time.
//! The neighborhood radius is constant across slices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cube::{DataCube, Sample};
use crate::error::{Error, Result};
use crate::pca;
use crate::scalar::Scalar;
use crate::som::{self, best_match, Neighborhood, SomModel, TrainConfig};
use crate::time::TimePoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SotmConfig<F> {
    pub units: usize,
    pub sigma: F,
    pub epochs_per_slice: usize,
}

impl<F: Scalar> Default for SotmConfig<F> {
    fn default() -> Self {
        SotmConfig {
            units: 5,
            sigma: F::one(),
            epochs_per_slice: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SotmModel<F> {
    times: Vec<TimePoint>,
    dim_names: Vec<String>,
    config: SotmConfig<F>,
    /// `slices[t][i]` is reference vector `i` at time `t`.
    slices: Vec<Vec<Vec<F>>>,
}

impl<F: Scalar> SotmModel<F> {
    pub fn times(&self) -> &[TimePoint] {
        &self.times
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    pub fn units(&self) -> usize {
        self.config.units
    }

    pub fn sigma(&self) -> F {
        self.config.sigma
    }

    pub fn config(&self) -> &SotmConfig<F> {
        &self.config
    }

    pub fn slices(&self) -> &[Vec<Vec<F>>] {
        &self.slices
    }

    /// `A(t)[i][k]` for every slice and unit.
    pub fn component_plane_t(&self, k: usize) -> Result<Vec<Vec<F>>> {
        if k >= self.dim_names.len() {
            return Err(Error::UnknownIndicator(k.to_string()));
        }
        Ok(self
            .slices
            .iter()
            .map(|s| s.iter().map(|r| r[k]).collect())
            .collect())
    }

    /// Projection of every reference vector on the first principal component
    /// of all reference vectors pooled, rescaled to [0, 1]. A constant
    /// projection maps to 0.5.
    pub fn profile_coloring(&self) -> Vec<Vec<F>> {
        let pooled: Vec<&[F]> = self.slices.iter().flatten().map(Vec::as_slice).collect();
        let half = || {
            self.slices
                .iter()
                .map(|s| vec![F::lit(0.5); s.len()])
                .collect()
        };
        let Ok(p) = pca::principal_components(&pooled) else {
            return half();
        };
        let pc = &p.components[0];
        let project = |r: &[F]| -> f64 {
            r.iter()
                .zip(pc)
                .zip(&p.mean)
                .map(|((v, c), m)| (v.as_f64() - m) * c)
                .sum()
        };
        let proj: Vec<Vec<f64>> = self
            .slices
            .iter()
            .map(|s| s.iter().map(|r| project(r)).collect())
            .collect();
        let (lo, hi) = proj
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        let range = hi - lo;
        // relative to the data scale, anything this flat is numerical noise
        let scale = pooled
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
        if !(range > 1e-12 * scale.max(1e-300)) {
            return half();
        }
        proj.into_iter()
            .map(|s| s.into_iter().map(|x| F::lit((x - lo) / range)).collect())
            .collect()
    }

    /// Cumulative data-space distance along each slice's unit chain,
    /// normalized by the longest chain over all slices.
    pub fn structural_positions(&self) -> Vec<Vec<F>> {
        let chains: Vec<Vec<F>> = self
            .slices
            .iter()
            .map(|s| {
                let mut acc = F::zero();
                let mut ys = Vec::with_capacity(s.len());
                for (i, r) in s.iter().enumerate() {
                    if i > 0 {
                        let d: F = r
                            .iter()
                            .zip(&s[i - 1])
                            .map(|(a, b)| (*a - *b) * (*a - *b))
                            .sum();
                        acc = acc + d.sqrt();
                    }
                    ys.push(acc);
                }
                ys
            })
            .collect();
        let longest = chains
            .iter()
            .filter_map(|c| c.last().copied())
            .fold(F::zero(), F::max);
        if longest == F::zero() {
            return chains;
        }
        chains
            .into_iter()
            .map(|c| c.into_iter().map(|y| y / longest).collect())
            .collect()
    }

    /// BMU of every entity observed at each slice of `cube`. The cube must
    /// carry every time point of the model.
    pub fn assign_entities(&self, cube: &DataCube<F>) -> Result<Assignments> {
        if cube.indicators() != self.dim_names.as_slice() {
            return Err(Error::InvalidModel(
                "cube indicators differ from the model's".into(),
            ));
        }
        let per_time = self
            .times
            .iter()
            .zip(&self.slices)
            .map(|(t, refs)| {
                let ti = cube.time_index(t.label())?;
                cube.cross_section_rows(ti)
                    .into_iter()
                    .map(|(e, x)| {
                        best_match(refs, &x).map(|b| (cube.entities()[e].clone(), b.unit))
                    })
                    .collect::<Result<BTreeMap<_, _>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Assignments {
            times: self.times.clone(),
            units: self.units(),
            per_time,
        })
    }
}

/// Entity → unit at each time point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignments {
    pub times: Vec<TimePoint>,
    pub units: usize,
    pub per_time: Vec<BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub from: usize,
    pub to: usize,
    pub count: usize,
    pub entities: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from_time: TimePoint,
    pub to_time: TimePoint,
    pub flows: Vec<Flow>,
}

/// Alluvial diagram data: cluster sizes per slice and entity transitions
/// between consecutive slices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlluvialFlows {
    pub times: Vec<TimePoint>,
    pub node_sizes: Vec<Vec<usize>>,
    pub transitions: Vec<Transition>,
}

impl AlluvialFlows {
    pub fn from_assignments(a: &Assignments) -> Self {
        let node_sizes = a
            .per_time
            .iter()
            .map(|m| {
                let mut sizes = vec![0; a.units];
                for &u in m.values() {
                    sizes[u] += 1;
                }
                sizes
            })
            .collect();
        let transitions = a
            .per_time
            .windows(2)
            .zip(a.times.windows(2))
            .map(|(pair, ts)| {
                let mut flows: BTreeMap<(usize, usize), Vec<String>> = BTreeMap::new();
                for (entity, &from) in &pair[0] {
                    if let Some(&to) = pair[1].get(entity) {
                        flows.entry((from, to)).or_default().push(entity.clone());
                    }
                }
                Transition {
                    from_time: ts[0].clone(),
                    to_time: ts[1].clone(),
                    flows: flows
                        .into_iter()
                        .map(|((from, to), entities)| Flow {
                            from,
                            to,
                            count: entities.len(),
                            entities,
                        })
                        .collect(),
                }
            })
            .collect();
        AlluvialFlows {
            times: a.times.clone(),
            node_sizes,
            transitions,
        }
    }
}

/// Reference vectors of the first slice: `mean + offset · sd · pc₁` for `M`
/// evenly spaced offsets in −2..=2.
pub fn initial_slice<F: Scalar>(
    data: &[Sample<F>],
    units: usize,
    dim_names: &[String],
) -> Result<Vec<Vec<F>>> {
    let p = som::checked_principal(data, dim_names)?;
    let sd = p.variances[0].sqrt();
    Ok((0..units)
        .map(|i| {
            let a = som::span_offset(i, units) * sd;
            p.mean
                .iter()
                .zip(&p.components[0])
                .map(|(m, c)| F::lit(m + a * c))
                .collect()
        })
        .collect())
}

/// Trains one 1-D map per time slice of `cube` with init chaining.
pub fn train_sotm<F: Scalar>(cube: &DataCube<F>, config: SotmConfig<F>) -> Result<SotmModel<F>> {
    if config.units == 0 {
        return Err(Error::InvalidConfig("units must be at least 1".into()));
    }
    if !(config.sigma > F::zero()) || !config.sigma.is_finite() {
        return Err(Error::InvalidConfig("sigma must be positive".into()));
    }
    let dim_names = cube.indicators().to_vec();
    let kernel = Neighborhood::Gaussian {
        sigma: config.sigma,
    };
    let mut slices = Vec::with_capacity(cube.times().len());
    let mut previous: Option<Vec<Vec<F>>> = None;
    for (t, time) in cube.times().iter().enumerate() {
        let data: Vec<Sample<F>> = cube
            .cross_section_rows(t)
            .into_iter()
            .map(|(_, s)| s)
            .collect();
        if data.is_empty() {
            return Err(Error::EmptySlice(time.to_string()));
        }
        let init = match previous.take() {
            Some(refs) => refs,
            None => initial_slice(&data, config.units, &dim_names)?,
        };
        let mut map = SomModel::from_refs(
            config.units,
            1,
            dim_names.clone(),
            init,
            TrainConfig {
                iterations: config.epochs_per_slice.max(1),
                sigma_final: config.sigma,
                seed: 0,
                hard_assignment: false,
            },
        )?;
        for _ in 0..config.epochs_per_slice {
            map = map.batch_epoch(&data, kernel)?;
        }
        let refs = map.refs().to_vec();
        slices.push(refs.clone());
        previous = Some(refs);
    }
    Ok(SotmModel {
        times: cube.times().to_vec(),
        dim_names,
        config,
        slices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::ingest_observations;

    fn cube_from(rows: &[(&str, &str, [f64; 2])]) -> DataCube<f64> {
        let mut csv = String::from("entity,time,indicator,value\n");
        for (e, t, v) in rows {
            csv += &format!("{e},{t},a,{}\n{e},{t},b,{}\n", v[0], v[1]);
        }
        ingest_observations(csv.as_bytes()).unwrap()
    }

    #[test]
    fn single_unit_converges_to_slice_mean() {
        let c = cube_from(&[
            ("A", "2000Q1", [0.0, 0.0]),
            ("B", "2000Q1", [2.0, 4.0]),
            ("A", "2000Q2", [10.0, 1.0]),
            ("B", "2000Q2", [12.0, 3.0]),
        ]);
        let m = train_sotm(&c, SotmConfig {
            units: 1,
            sigma: 1.0,
            epochs_per_slice: 3,
        })
        .unwrap();
        assert_eq!(m.slices()[0], vec![vec![1.0, 2.0]]);
        assert_eq!(m.slices()[1], vec![vec![11.0, 2.0]]);
    }

    #[test]
    fn empty_slice_names_time() {
        let c: DataCube<f64> = ingest_observations(
            "entity,time,indicator,value\nA,2000Q1,a,1\nB,2000Q1,a,2\nA,2000Q1,b,1\nB,2000Q1,b,3\nA,2000Q2,a,\n"
                .as_bytes(),
        )
        .unwrap();
        let err = train_sotm(&c, SotmConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "empty time slice 2000Q2");
    }

    #[test]
    fn alluvial_hand_example() {
        let t = |s: &str| TimePoint::parse(s).unwrap();
        let map = |pairs: &[(&str, usize)]| {
            pairs
                .iter()
                .map(|(e, u)| (e.to_string(), *u))
                .collect::<BTreeMap<_, _>>()
        };
        let a = Assignments {
            times: vec![t("2000Q1"), t("2000Q2")],
            units: 2,
            per_time: vec![
                map(&[("e1", 0), ("e2", 0), ("e3", 1), ("e4", 1)]),
                map(&[("e1", 0), ("e2", 1), ("e3", 1)]),
            ],
        };
        let f = AlluvialFlows::from_assignments(&a);
        assert_eq!(f.node_sizes, vec![vec![2, 2], vec![1, 2]]);
        let flows: Vec<_> = f.transitions[0]
            .flows
            .iter()
            .map(|fl| (fl.from, fl.to, fl.count, fl.entities.clone()))
            .collect();
        assert_eq!(flows, vec![
            (0, 0, 1, vec!["e1".to_string()]),
            (0, 1, 1, vec!["e2".to_string()]),
            (1, 1, 1, vec!["e3".to_string()]),
        ]);
    }

    fn model(slices: Vec<Vec<Vec<f64>>>) -> SotmModel<f64> {
        let times = (0..slices.len())
            .map(|i| TimePoint::parse(&format!("{}Q1", 2000 + i)).unwrap())
            .collect();
        SotmModel {
            times,
            dim_names: vec!["a".into(), "b".into()],
            config: SotmConfig {
                units: slices[0].len(),
                sigma: 1.0,
                epochs_per_slice: 1,
            },
            slices,
        }
    }

    #[test]
    fn coloring_degenerate_is_half() {
        let m = model(vec![vec![vec![1.0, 1.0]; 3]; 2]);
        assert!(m.profile_coloring().iter().flatten().all(|&c| c == 0.5));
    }

    #[test]
    fn coloring_two_regimes() {
        let near = |c: f64, j: f64| vec![c + 0.01 * j, c - 0.01 * j];
        let m = model(vec![
            vec![near(0.0, 0.0), near(0.0, 1.0)],
            vec![near(0.0, 2.0), near(0.0, -1.0)],
            vec![near(10.0, 0.0), near(10.0, 1.0)],
        ]);
        let c = m.profile_coloring();
        let (before, after): (Vec<f64>, Vec<f64>) = (
            c[..2].iter().flatten().copied().collect(),
            c[2].clone(),
        );
        let low_side = before[0] < 0.5;
        for x in &before {
            assert_eq!(*x < 0.1, low_side);
            assert!(*x < 0.1 || *x > 0.9);
        }
        for x in &after {
            assert_eq!(*x < 0.1, !low_side);
        }
    }

    #[test]
    fn structural_positions_scale_with_chain_length() {
        let m = model(vec![
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
            vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![4.0, 0.0]],
        ]);
        let y = m.structural_positions();
        assert_eq!(y[0], vec![0.0, 0.25, 0.5]);
        assert_eq!(y[1], vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn structural_positions_collapse_for_identical_units() {
        let m = model(vec![vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![3.0, 4.0]]]);
        assert_eq!(m.structural_positions()[0], vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn component_plane_t_slices_tensor() {
        let m = model(vec![
            vec![vec![1.0, 7.0], vec![2.0, 7.0]],
            vec![vec![3.0, 7.0], vec![4.0, 7.0]],
        ]);
        assert_eq!(m.component_plane_t(0).unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(m.component_plane_t(1).unwrap(), vec![vec![7.0; 2]; 2]);
        assert!(m.component_plane_t(2).is_err());
    }
}
