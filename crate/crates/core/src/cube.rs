//! The macroprudential data cube: entities × time × indicators, plus a
//! directed link matrix per time point.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::TimePoint;

/// A vector with a per-component observation mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<F> {
    pub values: Vec<F>,
    pub observed: Vec<bool>,
}

impl<F: Scalar> Sample<F> {
    pub fn complete(values: Vec<F>) -> Self {
        let observed = vec![true; values.len()];
        Sample { values, observed }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn is_complete(&self) -> bool {
        self.observed.iter().all(|&o| o)
    }

    pub fn get(&self, k: usize) -> Option<F> {
        self.observed[k].then(|| self.values[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Entity,
    Time,
    Indicator,
}

/// A two-dimensional view of the cube with its mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeSlice<F> {
    pub row_axis: Axis,
    pub col_axis: Axis,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    values: Vec<F>,
    observed: Vec<bool>,
}

impl<F: Scalar> CubeSlice<F> {
    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Option<F> {
        let i = r * self.cols() + c;
        self.observed[i].then(|| self.values[i])
    }

    pub fn is_observed(&self, r: usize, c: usize) -> bool {
        self.observed[r * self.cols() + c]
    }

    /// Rows as `Option` vectors, `None` where unobserved.
    pub fn to_rows(&self) -> Vec<Vec<Option<F>>> {
        (0..self.rows())
            .map(|r| (0..self.cols()).map(|c| self.get(r, c)).collect())
            .collect()
    }
}

/// A crisis episode or other annotated event for one entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub entity: String,
    pub start: TimePoint,
    pub end: Option<TimePoint>,
    pub label: String,
}

/// One pooled (entity, time) observation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow<F> {
    pub entity: String,
    pub time: TimePoint,
    pub sample: Sample<F>,
}

/// Dense panel tensor with observation mask and optional per-time link
/// matrices. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "CubeDocument<F>",
    into = "CubeDocument<F>",
    bound = "F: Scalar"
)]
pub struct DataCube<F> {
    entities: Vec<String>,
    times: Vec<TimePoint>,
    indicators: Vec<String>,
    // index ((e * T) + t) * K + k
    values: Vec<F>,
    observed: Vec<bool>,
    // time index -> row-major E×E
    links: BTreeMap<usize, Vec<F>>,
}

fn check_unique<'a>(what: &str, labels: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(Error::InvalidCube(format!("duplicate {what} {l:?}")));
        }
    }
    Ok(())
}

impl<F: Scalar> DataCube<F> {
    /// Builds a cube from dense buffers laid out entity-major, then time,
    /// then indicator.
    pub fn new(
        entities: Vec<String>,
        times: Vec<TimePoint>,
        indicators: Vec<String>,
        values: Vec<F>,
        observed: Vec<bool>,
    ) -> Result<Self> {
        check_unique("entity", entities.iter().map(String::as_str))?;
        check_unique("indicator", indicators.iter().map(String::as_str))?;
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidCube("times must be strictly increasing".into()));
        }
        let len = entities.len() * times.len() * indicators.len();
        if values.len() != len || observed.len() != len {
            return Err(Error::InvalidCube(format!(
                "expected {len} cells, got {} values and {} mask entries",
                values.len(),
                observed.len()
            )));
        }
        if values
            .iter()
            .zip(&observed)
            .any(|(v, &o)| o && !v.is_finite())
        {
            return Err(Error::InvalidCube("observed value is not finite".into()));
        }
        Ok(DataCube {
            entities,
            times,
            indicators,
            values,
            observed,
            links: BTreeMap::new(),
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn times(&self) -> &[TimePoint] {
        &self.times
    }

    pub fn indicators(&self) -> &[String] {
        &self.indicators
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.entities.len(), self.times.len(), self.indicators.len())
    }

    fn idx(&self, e: usize, t: usize, k: usize) -> usize {
        (e * self.times.len() + t) * self.indicators.len() + k
    }

    pub fn value(&self, e: usize, t: usize, k: usize) -> Option<F> {
        let i = self.idx(e, t, k);
        self.observed[i].then(|| self.values[i])
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    pub fn entity_index(&self, entity: &str) -> Result<usize> {
        self.entities
            .iter()
            .position(|e| e == entity)
            .ok_or_else(|| Error::UnknownEntity(entity.to_string()))
    }

    pub fn indicator_index(&self, indicator: &str) -> Result<usize> {
        self.indicators
            .iter()
            .position(|k| k == indicator)
            .ok_or_else(|| Error::UnknownIndicator(indicator.to_string()))
    }

    pub fn time_index(&self, time: &str) -> Result<usize> {
        let unknown = || Error::UnknownTime(time.to_string());
        let tp = TimePoint::parse(time).map_err(|_| unknown())?;
        self.times.binary_search(&tp).map_err(|_| unknown())
    }

    /// The masked indicator vector of entity `e` at time index `t`.
    pub fn sample(&self, e: usize, t: usize) -> Sample<F> {
        let start = self.idx(e, t, 0);
        let end = start + self.indicators.len();
        Sample {
            values: self.values[start..end].to_vec(),
            observed: self.observed[start..end].to_vec(),
        }
    }

    /// Entities × indicators at one time point.
    pub fn slice_cross_section(&self, time: &str) -> Result<CubeSlice<F>> {
        let t = self.time_index(time)?;
        let (ne, _, nk) = self.shape();
        let mut values = Vec::with_capacity(ne * nk);
        let mut observed = Vec::with_capacity(ne * nk);
        for e in 0..ne {
            let s = self.idx(e, t, 0);
            values.extend_from_slice(&self.values[s..s + nk]);
            observed.extend_from_slice(&self.observed[s..s + nk]);
        }
        Ok(CubeSlice {
            row_axis: Axis::Entity,
            col_axis: Axis::Indicator,
            row_labels: self.entities.clone(),
            col_labels: self.indicators.clone(),
            values,
            observed,
        })
    }

    /// Entities × time for one indicator.
    pub fn slice_indicator_panel(&self, indicator: &str) -> Result<CubeSlice<F>> {
        let k = self.indicator_index(indicator)?;
        let (ne, nt, _) = self.shape();
        let mut values = Vec::with_capacity(ne * nt);
        let mut observed = Vec::with_capacity(ne * nt);
        for e in 0..ne {
            for t in 0..nt {
                let i = self.idx(e, t, k);
                values.push(self.values[i]);
                observed.push(self.observed[i]);
            }
        }
        Ok(CubeSlice {
            row_axis: Axis::Entity,
            col_axis: Axis::Time,
            row_labels: self.entities.clone(),
            col_labels: self.time_labels(),
            values,
            observed,
        })
    }

    /// Time × indicators for one entity.
    pub fn slice_entity_series(&self, entity: &str) -> Result<CubeSlice<F>> {
        let e = self.entity_index(entity)?;
        let s = self.idx(e, 0, 0);
        let n = self.times.len() * self.indicators.len();
        Ok(CubeSlice {
            row_axis: Axis::Time,
            col_axis: Axis::Indicator,
            row_labels: self.time_labels(),
            col_labels: self.indicators.clone(),
            values: self.values[s..s + n].to_vec(),
            observed: self.observed[s..s + n].to_vec(),
        })
    }

    /// The directed link matrix at `time`; all zeros when no links were
    /// ingested for that time.
    pub fn slice_links(&self, time: &str) -> Result<Vec<Vec<F>>> {
        let t = self.time_index(time)?;
        let n = self.entities.len();
        Ok(match self.links.get(&t) {
            Some(m) => m.chunks(n.max(1)).map(<[F]>::to_vec).collect(),
            None => vec![vec![F::zero(); n]; n],
        })
    }

    pub fn has_links(&self) -> bool {
        !self.links.is_empty()
    }

    fn time_labels(&self) -> Vec<String> {
        self.times.iter().map(|t| t.label().to_string()).collect()
    }

    /// Replaces observed values by their rank percentile within each
    /// entity's own history of each indicator: `100·(rank−1)/(n−1)` with
    /// mean ranks for ties and 50 for single observations.
    pub fn percentile_transform(&self) -> DataCube<F> {
        let mut out = self.clone();
        let (ne, nt, nk) = self.shape();
        let hundred = F::lit(100.0);
        let mut series: Vec<(usize, F)> = Vec::with_capacity(nt);
        for e in 0..ne {
            for k in 0..nk {
                series.clear();
                series.extend((0..nt).filter_map(|t| self.value(e, t, k).map(|v| (t, v))));
                let n = series.len();
                if n == 0 {
                    continue;
                }
                if n == 1 {
                    let i = self.idx(e, series[0].0, k);
                    out.values[i] = F::lit(50.0);
                    continue;
                }
                series.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite values"));
                let denom = F::from_count(n - 1);
                let mut lo = 0;
                while lo < n {
                    let mut hi = lo;
                    while hi + 1 < n && series[hi + 1].1 == series[lo].1 {
                        hi += 1;
                    }
                    // zero-based ranks lo..=hi share their mean
                    let mean_rank0 = F::from_count(lo + hi) / F::lit(2.0);
                    let pct = hundred * mean_rank0 / denom;
                    for &(t, _) in &series[lo..=hi] {
                        let i = self.idx(e, t, k);
                        out.values[i] = pct;
                    }
                    lo = hi + 1;
                }
            }
        }
        out
    }

    /// One row per (entity, time) with at least one observed indicator,
    /// entity-major then chronological.
    pub fn pool_panel(&self) -> Vec<PanelRow<F>> {
        let (ne, nt, _) = self.shape();
        let mut rows = Vec::new();
        for e in 0..ne {
            for t in 0..nt {
                let sample = self.sample(e, t);
                if sample.observed_count() > 0 {
                    rows.push(PanelRow {
                        entity: self.entities[e].clone(),
                        time: self.times[t].clone(),
                        sample,
                    });
                }
            }
        }
        rows
    }

    /// Rows of one time slice that carry at least one observation, in
    /// entity order.
    pub fn cross_section_rows(&self, t: usize) -> Vec<(usize, Sample<F>)> {
        (0..self.entities.len())
            .map(|e| (e, self.sample(e, t)))
            .filter(|(_, s)| s.observed_count() > 0)
            .collect()
    }

    /// Reads `source,target,time,weight` rows into a copy of this cube.
    pub fn ingest_links<R: Read>(&self, reader: R) -> Result<DataCube<F>> {
        let mut out = self.clone();
        out.links.clear();
        let n = self.entities.len();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let cols = header_columns(&mut rdr, &["source", "target", "time", "weight"])?;
        let mut seen = HashMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = record_line(&rec);
            let field = |c: usize| rec.get(cols[c]).unwrap_or("");
            let s = self
                .entity_index(field(0))
                .map_err(|_| Error::row(row, format!("unknown entity {:?}", field(0))))?;
            let d = self
                .entity_index(field(1))
                .map_err(|_| Error::row(row, format!("unknown entity {:?}", field(1))))?;
            let t = TimePoint::parse(field(2))
                .map_err(|_| Error::row(row, format!("unparseable time {:?}", field(2))))?;
            let t = self
                .times
                .binary_search(&t)
                .map_err(|_| Error::row(row, format!("unknown time {:?}", field(2))))?;
            let w: f64 = field(3)
                .parse()
                .map_err(|_| Error::row(row, format!("unparseable weight {:?}", field(3))))?;
            if !w.is_finite() || w < 0.0 {
                return Err(Error::row(row, format!("negative or non-finite weight {w}")));
            }
            if seen.insert((s, d, t), row).is_some() {
                return Err(Error::row(
                    row,
                    format!("duplicate link ({},{},{})", field(0), field(1), field(2)),
                ));
            }
            out.links.entry(t).or_insert_with(|| vec![F::zero(); n * n])[s * n + d] =
                F::lit(w);
        }
        Ok(out)
    }

    /// Checks that every event names an entity of this cube.
    pub fn check_events(&self, events: &[EventRecord]) -> Result<()> {
        for ev in events {
            self.entity_index(&ev.entity)?;
        }
        Ok(())
    }
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn header_columns<R: Read>(rdr: &mut csv::Reader<R>, names: &[&str]) -> Result<Vec<usize>> {
    let headers = rdr.headers()?.clone();
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::row(1, format!("missing column {name:?}")))
        })
        .collect()
}

/// Reads `entity,time,indicator,value` rows. Axes are the union of what
/// appears; entities and indicators are sorted lexicographically and times
/// chronologically. An empty `value` marks the cell as missing.
pub fn ingest_observations<F: Scalar, R: Read>(reader: R) -> Result<DataCube<F>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    if rdr.headers().map(|h| h.is_empty()).unwrap_or(true) {
        return Err(Error::NoObservations);
    }
    let cols = header_columns(&mut rdr, &["entity", "time", "indicator", "value"])?;

    let mut cells: HashMap<(String, TimePoint, String), Option<f64>> = HashMap::new();
    let mut entities = BTreeSet::new();
    let mut times = BTreeSet::new();
    let mut indicators = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = record_line(&rec);
        let field = |c: usize| rec.get(cols[c]).unwrap_or("");
        let (entity, indicator) = (field(0), field(2));
        if entity.is_empty() || indicator.is_empty() {
            return Err(Error::row(row, "empty entity or indicator"));
        }
        let time = TimePoint::parse(field(1))
            .map_err(|_| Error::row(row, format!("unparseable time {:?}", field(1))))?;
        let value = match field(3) {
            "" => None,
            v => {
                let x: f64 = v
                    .parse()
                    .map_err(|_| Error::row(row, format!("unparseable value {v:?}")))?;
                if !x.is_finite() {
                    return Err(Error::row(row, format!("non-finite value {v:?}")));
                }
                Some(x)
            }
        };
        let key = (entity.to_string(), time.clone(), indicator.to_string());
        if cells.contains_key(&key) {
            return Err(Error::DuplicateObservation {
                entity: key.0,
                time: key.1.to_string(),
                indicator: key.2,
            });
        }
        entities.insert(key.0.clone());
        times.insert(time);
        indicators.insert(key.2.clone());
        cells.insert(key, value);
    }
    if cells.is_empty() {
        return Err(Error::NoObservations);
    }

    let entities: Vec<String> = entities.into_iter().collect();
    let times: Vec<TimePoint> = times.into_iter().collect();
    let indicators: Vec<String> = indicators.into_iter().collect();
    let len = entities.len() * times.len() * indicators.len();
    let mut values = vec![F::zero(); len];
    let mut observed = vec![false; len];
    let e_idx: HashMap<&str, usize> =
        entities.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let t_idx: HashMap<&TimePoint, usize> = times.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let k_idx: HashMap<&str, usize> =
        indicators.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    for ((e, t, k), v) in &cells {
        if let Some(v) = v {
            let i = (e_idx[e.as_str()] * times.len() + t_idx[t]) * indicators.len()
                + k_idx[k.as_str()];
            values[i] = F::lit(*v);
            observed[i] = true;
        }
    }
    DataCube::new(entities, times, indicators, values, observed)
}

/// Reads `entity,start,end,label` rows; `end` may be empty. Output is
/// sorted by (entity, start).
pub fn ingest_events<R: Read>(reader: R) -> Result<Vec<EventRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let cols = header_columns(&mut rdr, &["entity", "start", "end", "label"])?;
    let mut events = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = record_line(&rec);
        let field = |c: usize| rec.get(cols[c]).unwrap_or("");
        let parse = |s: &str| {
            TimePoint::parse(s).map_err(|_| Error::row(row, format!("unparseable time {s:?}")))
        };
        let start = parse(field(1))?;
        let end = match field(2) {
            "" => None,
            s => Some(parse(s)?),
        };
        if let Some(end) = &end {
            if *end < start {
                return Err(Error::EventOrder {
                    entity: field(0).to_string(),
                    start: start.to_string(),
                    end: end.to_string(),
                });
            }
        }
        events.push(EventRecord {
            entity: field(0).to_string(),
            start,
            end,
            label: field(3).to_string(),
        });
    }
    events.sort_by(|a, b| (&a.entity, &a.start).cmp(&(&b.entity, &b.start)));
    Ok(events)
}

/// Serialized form: values as nested `entity → time → indicator` arrays with
/// `null` for missing cells, links keyed by time label.
#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
struct CubeDocument<F> {
    entities: Vec<String>,
    times: Vec<TimePoint>,
    indicators: Vec<String>,
    values: Vec<Vec<Vec<Option<F>>>>,
    links: BTreeMap<TimePoint, Vec<Vec<F>>>,
}

impl<F: Scalar> From<DataCube<F>> for CubeDocument<F> {
    fn from(c: DataCube<F>) -> Self {
        let (ne, nt, nk) = c.shape();
        let values = (0..ne)
            .map(|e| {
                (0..nt)
                    .map(|t| (0..nk).map(|k| c.value(e, t, k)).collect())
                    .collect()
            })
            .collect();
        let n = ne.max(1);
        let links = c
            .links
            .iter()
            .map(|(&t, m)| (c.times[t].clone(), m.chunks(n).map(<[F]>::to_vec).collect()))
            .collect();
        CubeDocument {
            entities: c.entities,
            times: c.times,
            indicators: c.indicators,
            values,
            links,
        }
    }
}

impl<F: Scalar> TryFrom<CubeDocument<F>> for DataCube<F> {
    type Error = Error;

    fn try_from(doc: CubeDocument<F>) -> Result<Self> {
        let (ne, nt, nk) = (doc.entities.len(), doc.times.len(), doc.indicators.len());
        let shape_err = || Error::InvalidCube("values do not match axis lengths".into());
        if doc.values.len() != ne {
            return Err(shape_err());
        }
        let mut values = Vec::with_capacity(ne * nt * nk);
        let mut observed = Vec::with_capacity(ne * nt * nk);
        for per_entity in &doc.values {
            if per_entity.len() != nt {
                return Err(shape_err());
            }
            for per_time in per_entity {
                if per_time.len() != nk {
                    return Err(shape_err());
                }
                for v in per_time {
                    values.push(v.unwrap_or_else(F::zero));
                    observed.push(v.is_some());
                }
            }
        }
        let mut cube = DataCube::new(doc.entities, doc.times, doc.indicators, values, observed)?;
        for (t, m) in doc.links {
            let ti = cube
                .times
                .binary_search(&t)
                .map_err(|_| Error::UnknownTime(t.to_string()))?;
            if m.len() != ne || m.iter().any(|r| r.len() != ne) {
                return Err(Error::InvalidCube(format!("link matrix at {t} is not {ne}×{ne}")));
            }
            let flat: Vec<F> = m.into_iter().flatten().collect();
            if flat.iter().any(|w| !w.is_finite() || *w < F::zero()) {
                return Err(Error::InvalidCube(format!("negative link weight at {t}")));
            }
            cube.links.insert(ti, flat);
        }
        Ok(cube)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(csv: &str) -> DataCube<f64> {
        ingest_observations(csv.as_bytes()).unwrap()
    }

    fn full_2x2x2() -> DataCube<f64> {
        cube(
            "entity,time,indicator,value\n\
             A,2000Q1,x,1\nA,2000Q1,y,2\nA,2000Q2,x,3\nA,2000Q2,y,4\n\
             B,2000Q1,x,5\nB,2000Q1,y,6\nB,2000Q2,x,7\nB,2000Q2,y,8\n",
        )
    }

    #[test]
    fn ingest_two_quarters() {
        let c = cube("entity,time,indicator,value\nA,2000Q1,x,1.0\nA,2000Q2,x,2.0\n");
        assert_eq!(c.shape(), (1, 2, 1));
        assert_eq!(c.observed_count(), 2);
    }

    #[test]
    fn ingest_union_grid_with_missing() {
        let c = cube("entity,time,indicator,value\nA,2000Q1,x,1.0\nB,2000Q1,y,\n");
        assert_eq!(c.shape(), (2, 1, 2));
        assert_eq!(c.observed_count(), 1);
        assert_eq!(c.value(0, 0, 0), Some(1.0));
        assert_eq!(c.value(1, 0, 1), None);
    }

    #[test]
    fn ingest_rejects_duplicates() {
        let err = ingest_observations::<f64, _>(
            "entity,time,indicator,value\nA,2000Q1,x,1\nA,2000Q1,x,2\n".as_bytes(),
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "duplicate observation (A,2000Q1,x)");
    }

    #[test]
    fn ingest_reports_bad_time_row() {
        let err = ingest_observations::<f64, _>(
            "entity,time,indicator,value\nA,2000Q1,x,1\nA,someday,x,2\n".as_bytes(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Row { row: 3, .. }), "{err}");
    }

    #[test]
    fn ingest_empty_is_no_observations() {
        for input in ["", "entity,time,indicator,value\n"] {
            let err = ingest_observations::<f64, _>(input.as_bytes()).unwrap_err();
            assert_eq!(err.to_string(), "no observations");
        }
    }

    #[test]
    fn times_sorted_chronologically() {
        let c = cube("entity,time,indicator,value\nA,2001Q1,x,1\nA,1999Q4,x,2\nA,2000Q3,x,3\n");
        let labels: Vec<_> = c.times().iter().map(|t| t.label()).collect();
        assert_eq!(labels, ["1999Q4", "2000Q3", "2001Q1"]);
    }

    #[test]
    fn links_single_entry_and_asymmetric() {
        let c = cube("entity,time,indicator,value\nA,2000Q1,x,1\nB,2000Q1,x,2\n");
        let l = c
            .ingest_links("source,target,time,weight\nA,B,2000Q1,5\n".as_bytes())
            .unwrap();
        assert_eq!(l.slice_links("2000Q1").unwrap(), vec![vec![0.0, 5.0], vec![0.0, 0.0]]);
        let l = c
            .ingest_links("source,target,time,weight\nA,B,2000Q1,1\nB,A,2000Q1,2\n".as_bytes())
            .unwrap();
        assert_eq!(l.slice_links("2000Q1").unwrap(), vec![vec![0.0, 1.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn empty_links_file() {
        let c = cube("entity,time,indicator,value\nA,2000Q1,x,1\n");
        let l = c.ingest_links("source,target,time,weight\n".as_bytes()).unwrap();
        assert!(!l.has_links());
        assert_eq!(l.slice_links("2000Q1").unwrap(), vec![vec![0.0]]);
    }

    #[test]
    fn links_errors() {
        let c = cube("entity,time,indicator,value\nA,2000Q1,x,1\nB,2000Q1,x,2\n");
        let err = c
            .ingest_links("source,target,time,weight\nA,B,2000Q1,1\nA,Z,2000Q1,1\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, Error::Row { row: 3, .. }), "{err}");
        let err = c
            .ingest_links("source,target,time,weight\nA,B,2000Q1,-1\n".as_bytes())
            .unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    #[test]
    fn cross_section_and_mask() {
        let c = cube(
            "entity,time,indicator,value\nA,2000Q1,x,1\nA,2000Q1,y,2\nB,2000Q1,x,3\nB,2000Q1,y,\n\
             A,2000Q2,x,9\n",
        );
        let s = c.slice_cross_section("2000Q1").unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 2));
        assert_eq!(s.get(0, 1), Some(2.0));
        assert!(!s.is_observed(1, 1));
        assert!(matches!(c.slice_cross_section("1899Q1"), Err(Error::UnknownTime(_))));
    }

    #[test]
    fn entity_series_of_single_entity() {
        let c = cube("entity,time,indicator,value\nA,2000Q1,x,1\nA,2000Q1,y,2\nA,2000Q2,x,3\n");
        let s = c.slice_entity_series("A").unwrap();
        assert_eq!(s.row_axis, Axis::Time);
        assert_eq!(s.to_rows(), vec![vec![Some(1.0), Some(2.0)], vec![Some(3.0), None]]);
    }

    #[test]
    fn projections_commute() {
        let c = full_2x2x2();
        for (ki, k) in c.indicators().iter().enumerate() {
            let panel = c.slice_indicator_panel(k).unwrap();
            for (ei, e) in c.entities().iter().enumerate() {
                let series = c.slice_entity_series(e).unwrap();
                for t in 0..c.times().len() {
                    assert_eq!(panel.get(ei, t), series.get(t, ki));
                }
            }
        }
    }

    #[test]
    fn missing_links_time_is_zero_matrix() {
        let c = full_2x2x2()
            .ingest_links("source,target,time,weight\nA,B,2000Q1,5\n".as_bytes())
            .unwrap();
        assert_eq!(c.slice_links("2000Q2").unwrap(), vec![vec![0.0; 2]; 2]);
    }

    fn percentiles(series: &[f64]) -> Vec<f64> {
        let mut csv = String::from("entity,time,indicator,value\n");
        for (i, v) in series.iter().enumerate() {
            csv += &format!("A,{}Q1,x,{v}\n", 2000 + i);
        }
        let p = cube(&csv).percentile_transform();
        (0..series.len()).map(|t| p.value(0, t, 0).unwrap()).collect()
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentiles(&[1., 2., 3., 4., 5.]), [0., 25., 50., 75., 100.]);
        assert_eq!(percentiles(&[7., 7.]), [50., 50.]);
        assert_eq!(percentiles(&[42.]), [50.]);
        assert_eq!(percentiles(&[3., 1., 3., 2.]), [
            100.0 * 2.5 / 3.0,
            0.0,
            100.0 * 2.5 / 3.0,
            100.0 / 3.0
        ]);
    }

    #[test]
    fn percentile_keeps_mask() {
        let c = cube("entity,time,indicator,value\nA,2000Q1,x,1\nA,2000Q2,x,\nA,2000Q3,x,3\n");
        let p = c.percentile_transform();
        assert_eq!(p.value(0, 0, 0), Some(0.0));
        assert_eq!(p.value(0, 1, 0), None);
        assert_eq!(p.value(0, 2, 0), Some(100.0));
    }

    #[test]
    fn pool_panel_drops_empty_slabs() {
        assert_eq!(full_2x2x2().pool_panel().len(), 4);
        let c = cube(
            "entity,time,indicator,value\n\
             A,2000Q1,x,1\nA,2000Q1,y,2\nA,2000Q2,x,3\nA,2000Q2,y,4\n\
             B,2000Q1,x,5\nB,2000Q1,y,6\nB,2000Q2,x,\nB,2000Q2,y,\n",
        );
        let rows = c.pool_panel();
        assert_eq!(rows.len(), 3);
        let keys: Vec<_> = rows.iter().map(|r| (r.entity.as_str(), r.time.label())).collect();
        assert_eq!(keys, [("A", "2000Q1"), ("A", "2000Q2"), ("B", "2000Q1")]);
    }

    #[test]
    fn events_parse_sort_and_validate() {
        let ev = ingest_events(
            "entity,start,end,label\nUS,2007Q3,2009Q2,crisis\nDE,2008Q1,,open\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!(ev[0].entity, "DE");
        assert!(ev[0].end.is_none());
        let err =
            ingest_events("entity,start,end,label\nUS,2009Q2,2007Q3,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::EventOrder { .. }));
    }

    #[test]
    fn json_roundtrip() {
        let c = cube("entity,time,indicator,value\nA,2000Q1,x,1.5\nB,2000Q2,y,\n")
            .ingest_links("source,target,time,weight\nA,B,2000Q2,3\n".as_bytes())
            .unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: DataCube<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn constructor_checks_invariants() {
        let t = |s: &str| TimePoint::parse(s).unwrap();
        assert!(DataCube::<f64>::new(
            vec!["A".into(), "A".into()],
            vec![t("2000Q1")],
            vec!["x".into()],
            vec![0.0; 2],
            vec![true; 2]
        )
        .is_err());
        assert!(DataCube::<f64>::new(
            vec!["A".into()],
            vec![t("2000Q2"), t("2000Q1")],
            vec!["x".into()],
            vec![0.0; 2],
            vec![true; 2]
        )
        .is_err());
        assert!(DataCube::<f64>::new(
            vec!["A".into()],
            vec![t("2000Q1")],
            vec!["x".into()],
            vec![f64::NAN],
            vec![true]
        )
        .is_err());
    }
}
