//! Entity co-occurrence networks and Fruchterman–Reingold layout.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::{TimePoint, TimeWindow};

/// One document (post) with the entities it mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccurrenceRecord {
    pub doc_id: String,
    pub time: TimePoint,
    pub mentions: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Reads `doc_id,time,entity[,text]` rows, one per mention. Rows sharing a
/// `doc_id` form one record; the first non-empty `text` wins.
pub fn read_occurrences<R: Read>(reader: R) -> Result<Vec<OccurrenceRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::Fields)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let missing = |name: &str| Error::row(1, format!("missing column {name:?}"));
    let doc_c = col("doc_id").ok_or_else(|| missing("doc_id"))?;
    let time_c = col("time").ok_or_else(|| missing("time"))?;
    let ent_c = col("entity").ok_or_else(|| missing("entity"))?;
    let text_c = col("text");

    let mut records: Vec<OccurrenceRecord> = Vec::new();
    let mut by_doc: HashMap<String, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map_or(0, |p| p.line());
        let doc = rec.get(doc_c).unwrap_or("");
        let entity = rec.get(ent_c).unwrap_or("");
        if doc.is_empty() || entity.is_empty() {
            return Err(Error::row(row, "empty doc_id or entity"));
        }
        let raw_time = rec.get(time_c).unwrap_or("");
        let time = TimePoint::parse(raw_time)
            .map_err(|_| Error::row(row, format!("unparseable time {raw_time:?}")))?;
        let text = text_c
            .and_then(|c| rec.get(c))
            .filter(|t| !t.is_empty())
            .map(str::to_string);
        match by_doc.get(doc) {
            Some(&i) => {
                let r = &mut records[i];
                if r.time != time {
                    return Err(Error::row(
                        row,
                        format!("document {doc:?} has conflicting times"),
                    ));
                }
                r.mentions.insert(entity.to_string());
                if r.text.is_none() {
                    r.text = text;
                }
            }
            None => {
                by_doc.insert(doc.to_string(), records.len());
                records.push(OccurrenceRecord {
                    doc_id: doc.to_string(),
                    time,
                    mentions: BTreeSet::from([entity.to_string()]),
                    text,
                });
            }
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub count: usize,
}

/// Occurrence counts per entity and co-occurrence counts per unordered pair
/// (`a < b`), over the records inside `window`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CooccurrenceNetwork {
    pub nodes: BTreeMap<String, usize>,
    pub edges: Vec<Edge>,
    pub window: TimeWindow,
}

pub fn build_cooccurrence(records: &[OccurrenceRecord], window: &TimeWindow) -> CooccurrenceNetwork {
    let mut nodes: BTreeMap<String, usize> = BTreeMap::new();
    let mut pairs: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for r in records.iter().filter(|r| window.contains(&r.time)) {
        let mentions: Vec<&str> = r.mentions.iter().map(String::as_str).collect();
        for (i, a) in mentions.iter().enumerate() {
            *nodes.entry(a.to_string()).or_default() += 1;
            for b in &mentions[i + 1..] {
                *pairs.entry((a, b)).or_default() += 1;
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|((a, b), count)| Edge {
            a: a.to_string(),
            b: b.to_string(),
            count,
        })
        .collect();
    CooccurrenceNetwork {
        nodes,
        edges,
        window: window.clone(),
    }
}

impl CooccurrenceNetwork {
    pub fn node_ids(&self) -> Vec<String> {
        self.nodes.keys().cloned().collect()
    }

    fn edge_indices(&self, order: &[String]) -> Result<Vec<(usize, usize)>> {
        let index: HashMap<&str, usize> =
            order.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        self.edges
            .iter()
            .map(|e| {
                let find = |n: &str| {
                    index
                        .get(n)
                        .copied()
                        .ok_or_else(|| Error::UnknownEntity(n.to_string()))
                };
                Ok((find(&e.a)?, find(&e.b)?))
            })
            .collect()
    }
}

/// Edge darkness `ln(1 + w) / ln(1 + w_max)`, aligned with `network.edges`.
pub fn edge_styling<F: Scalar>(network: &CooccurrenceNetwork) -> Vec<F> {
    let max = network.edges.iter().map(|e| e.count).max().unwrap_or(0);
    let denom = F::from_count(max).ln_1p();
    network
        .edges
        .iter()
        .map(|e| F::from_count(e.count).ln_1p() / denom)
        .collect()
}

/// Case-insensitive whole-word term matcher.
#[derive(Debug, Clone)]
pub struct DistressLexicon {
    pattern: Option<Regex>,
}

impl DistressLexicon {
    pub fn new<S: AsRef<str>>(terms: &[S]) -> Result<Self> {
        let alternatives: Vec<String> = terms
            .iter()
            .map(|t| t.as_ref().trim())
            .filter(|t| !t.is_empty())
            .map(regex::escape)
            .collect();
        if alternatives.is_empty() {
            return Ok(DistressLexicon { pattern: None });
        }
        let pattern = RegexBuilder::new(&format!(r"\b(?:{})\b", alternatives.join("|")))
            .case_insensitive(true)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("distress lexicon: {e}")))?;
        Ok(DistressLexicon {
            pattern: Some(pattern),
        })
    }

    pub fn matches(&self, text: &str) -> bool {
        self.pattern.as_ref().is_some_and(|p| p.is_match(text))
    }

    /// Fraction of the records mentioning `entity` whose text contains a
    /// term; zero when the entity never occurs.
    pub fn share<F: Scalar>(&self, records: &[OccurrenceRecord], entity: &str) -> F {
        let (mut hits, mut total) = (0usize, 0usize);
        for r in records.iter().filter(|r| r.mentions.contains(entity)) {
            total += 1;
            if r.text.as_deref().is_some_and(|t| self.matches(t)) {
                hits += 1;
            }
        }
        if total == 0 {
            F::zero()
        } else {
            F::from_count(hits) / F::from_count(total)
        }
    }
}

pub fn distress_share<F: Scalar, S: AsRef<str>>(
    records: &[OccurrenceRecord],
    entity: &str,
    terms: &[S],
) -> Result<F> {
    Ok(DistressLexicon::new(terms)?.share(records, entity))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Frame<F> {
    pub width: F,
    pub height: F,
}

impl<F: Scalar> Frame<F> {
    pub fn new(width: F, height: F) -> Result<Self> {
        if !(width > F::zero() && height > F::zero() && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidConfig("frame must have positive size".into()));
        }
        Ok(Frame { width, height })
    }

    fn clamp(&self, p: [F; 2]) -> [F; 2] {
        [
            p[0].max(F::zero()).min(self.width),
            p[1].max(F::zero()).min(self.height),
        ]
    }

    pub fn contains(&self, p: [F; 2]) -> bool {
        p[0] >= F::zero() && p[0] <= self.width && p[1] >= F::zero() && p[1] <= self.height
    }
}

/// Node positions in a `width × height` frame, in `nodes` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct LayoutState<F> {
    pub nodes: Vec<String>,
    pub positions: Vec<[F; 2]>,
    pub temperature: F,
    pub k: F,
    pub seed: u64,
    pub frame: Frame<F>,
}

impl<F: Scalar> LayoutState<F> {
    pub fn position(&self, node: &str) -> Option<[F; 2]> {
        self.nodes
            .iter()
            .position(|n| n == node)
            .map(|i| self.positions[i])
    }
}

fn ideal_length<F: Scalar>(frame: &Frame<F>, n: usize) -> F {
    (frame.width * frame.height / F::from_count(n.max(1))).sqrt()
}

/// Linear cooling from `start` to `end` over `iterations` steps.
fn cooling<F: Scalar>(start: F, end: F, iterations: usize) -> impl Iterator<Item = F> {
    (0..iterations).map(move |i| {
        if iterations <= 1 {
            start
        } else {
            start + (end - start) * F::from_count(i) / F::from_count(iterations - 1)
        }
    })
}

struct Relaxation<'a, F> {
    edges: &'a [(usize, usize)],
    fixed: &'a [bool],
    k: F,
    frame: Frame<F>,
}

impl<F: Scalar> Relaxation<'_, F> {
    /// One Fruchterman–Reingold step: pairwise repulsion `k²/d`, attraction
    /// `d²/k` along edges, displacement capped at `temperature`.
    fn step(&self, pos: &mut [[F; 2]], temperature: F, rng: &mut ChaCha8Rng) {
        let n = pos.len();
        let k2 = self.k * self.k;
        let tiny = self.k * F::lit(1e-9);
        let mut disp = vec![[F::zero(); 2]; n];
        for v in 0..n {
            for u in v + 1..n {
                let mut delta = [pos[v][0] - pos[u][0], pos[v][1] - pos[u][1]];
                let mut d = delta[0].hypot(delta[1]);
                if d < tiny {
                    let angle = F::lit(rng.random_range(0.0..std::f64::consts::TAU));
                    let r = self.k * F::lit(1e-3);
                    delta = [r * angle.cos(), r * angle.sin()];
                    d = r;
                }
                let f = k2 / d;
                let (fx, fy) = (delta[0] / d * f, delta[1] / d * f);
                disp[v][0] = disp[v][0] + fx;
                disp[v][1] = disp[v][1] + fy;
                disp[u][0] = disp[u][0] - fx;
                disp[u][1] = disp[u][1] - fy;
            }
        }
        for &(a, b) in self.edges {
            let delta = [pos[a][0] - pos[b][0], pos[a][1] - pos[b][1]];
            let d = delta[0].hypot(delta[1]);
            if d < tiny {
                continue;
            }
            let f = d * d / self.k;
            let (fx, fy) = (delta[0] / d * f, delta[1] / d * f);
            disp[a][0] = disp[a][0] - fx;
            disp[a][1] = disp[a][1] - fy;
            disp[b][0] = disp[b][0] + fx;
            disp[b][1] = disp[b][1] + fy;
        }
        for v in 0..n {
            if self.fixed[v] {
                continue;
            }
            let len = disp[v][0].hypot(disp[v][1]);
            if len > F::zero() && len.is_finite() {
                let s = len.min(temperature) / len;
                pos[v] = self
                    .frame
                    .clamp([pos[v][0] + disp[v][0] * s, pos[v][1] + disp[v][1] * s]);
            }
        }
    }
}

/// Force-directed layout from uniform random positions drawn from `seed`.
/// Temperature cools linearly from `W/10` to `W/(10·iterations)`.
pub fn fr_layout<F: Scalar>(
    network: &CooccurrenceNetwork,
    frame: Frame<F>,
    iterations: usize,
    seed: u64,
) -> Result<LayoutState<F>> {
    let nodes = network.node_ids();
    if nodes.is_empty() {
        return Err(Error::InvalidConfig("layout needs at least one node".into()));
    }
    let edges = network.edge_indices(&nodes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<[F; 2]> = (0..nodes.len())
        .map(|_| {
            [
                frame.width * F::lit(rng.random::<f64>()),
                frame.height * F::lit(rng.random::<f64>()),
            ]
        })
        .collect();
    let k = ideal_length(&frame, nodes.len());
    let fixed = vec![false; nodes.len()];
    let relax = Relaxation {
        edges: &edges,
        fixed: &fixed,
        k,
        frame,
    };
    let start = frame.width / F::lit(10.0);
    let end = frame.width / (F::lit(10.0) * F::from_count(iterations.max(1)));
    let mut temperature = start;
    for t in cooling(start, end, iterations) {
        relax.step(&mut positions, t, &mut rng);
        temperature = t;
    }
    Ok(LayoutState {
        nodes,
        positions,
        temperature,
        k,
        seed,
        frame,
    })
}

/// Holds `pinned` nodes at the given positions and relaxes the rest from
/// their current positions, starting from a reheated temperature of `W/40`.
pub fn pin_and_relax<F: Scalar>(
    network: &CooccurrenceNetwork,
    layout: &LayoutState<F>,
    pinned: &BTreeMap<String, [F; 2]>,
    iterations: usize,
) -> Result<LayoutState<F>> {
    if layout.nodes != network.node_ids() {
        return Err(Error::InvalidConfig(
            "layout nodes do not match the network".into(),
        ));
    }
    let edges = network.edge_indices(&layout.nodes)?;
    let frame = layout.frame;
    let mut positions = layout.positions.clone();
    let mut fixed = vec![false; positions.len()];
    for (name, p) in pinned {
        let i = layout
            .nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownEntity(name.clone()))?;
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::NonFinite(format!("pinned position of {name}")));
        }
        positions[i] = frame.clamp(*p);
        fixed[i] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(layout.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let relax = Relaxation {
        edges: &edges,
        fixed: &fixed,
        k: layout.k,
        frame,
    };
    let start = frame.width / F::lit(40.0);
    let end = (frame.width / (F::lit(10.0) * F::from_count(iterations.max(1)))).min(start);
    let mut temperature = layout.temperature;
    for t in cooling(start, end, iterations) {
        relax.step(&mut positions, t, &mut rng);
        temperature = t;
    }
    Ok(LayoutState {
        positions,
        temperature,
        ..layout.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct NodeView<F> {
    pub id: String,
    pub count: usize,
    pub x: F,
    pub y: F,
    pub distress_share: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct EdgeView<F> {
    pub a: String,
    pub b: String,
    pub count: usize,
    pub darkness: F,
}

/// Wire form of a laid-out network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct NetworkView<F> {
    pub nodes: Vec<NodeView<F>>,
    pub edges: Vec<EdgeView<F>>,
    pub window: TimeWindow,
    pub frame: Frame<F>,
    pub k: F,
    pub temperature: F,
    pub seed: u64,
}

impl<F: Scalar> NetworkView<F> {
    /// Assembles the export; distress shares are computed over the records
    /// inside the network's window.
    pub fn new(
        network: &CooccurrenceNetwork,
        layout: &LayoutState<F>,
        records: &[OccurrenceRecord],
        lexicon: &DistressLexicon,
    ) -> Self {
        let in_window: Vec<OccurrenceRecord> = records
            .iter()
            .filter(|r| network.window.contains(&r.time))
            .cloned()
            .collect();
        let nodes = layout
            .nodes
            .iter()
            .zip(&layout.positions)
            .map(|(id, p)| NodeView {
                id: id.clone(),
                count: network.nodes.get(id).copied().unwrap_or(0),
                x: p[0],
                y: p[1],
                distress_share: lexicon.share(&in_window, id),
            })
            .collect();
        let edges = network
            .edges
            .iter()
            .zip(edge_styling::<F>(network))
            .map(|(e, darkness)| EdgeView {
                a: e.a.clone(),
                b: e.b.clone(),
                count: e.count,
                darkness,
            })
            .collect();
        NetworkView {
            nodes,
            edges,
            window: network.window.clone(),
            frame: layout.frame,
            k: layout.k,
            temperature: layout.temperature,
            seed: layout.seed,
        }
    }

    pub fn layout(&self) -> LayoutState<F> {
        LayoutState {
            nodes: self.nodes.iter().map(|n| n.id.clone()).collect(),
            positions: self.nodes.iter().map(|n| [n.x, n.y]).collect(),
            temperature: self.temperature,
            k: self.k,
            seed: self.seed,
            frame: self.frame,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn rec(doc: &str, time: &str, mentions: &[&str], text: Option<&str>) -> OccurrenceRecord {
        OccurrenceRecord {
            doc_id: doc.into(),
            time: TimePoint::parse(time).unwrap(),
            mentions: mentions.iter().map(|s| s.to_string()).collect(),
            text: text.map(str::to_string),
        }
    }

    #[test]
    fn cooccurrence_hand_example() {
        let records = vec![
            rec("1", "2010Q1", &["A", "B"], None),
            rec("2", "2010Q1", &["A", "B", "C"], None),
            rec("3", "2010Q1", &["A"], None),
        ];
        let net = build_cooccurrence(&records, &TimeWindow::default());
        assert_eq!(net.nodes, BTreeMap::from([
            ("A".to_string(), 3),
            ("B".to_string(), 2),
            ("C".to_string(), 1)
        ]));
        let edges: Vec<_> = net
            .edges
            .iter()
            .map(|e| (e.a.as_str(), e.b.as_str(), e.count))
            .collect();
        assert_eq!(edges, [("A", "B", 2), ("A", "C", 1), ("B", "C", 1)]);
    }

    #[test]
    fn empty_corpus_and_window_filter() {
        assert_eq!(build_cooccurrence(&[], &TimeWindow::default()).nodes.len(), 0);
        let records = vec![
            rec("1", "2010Q1", &["A", "B"], None),
            rec("2", "2012Q1", &["C"], None),
        ];
        let w = TimeWindow::new(None, Some(TimePoint::parse("2011Q1").unwrap())).unwrap();
        let net = build_cooccurrence(&records, &w);
        assert_eq!(net.node_ids(), ["A", "B"]);
    }

    #[test]
    fn csv_dedups_mentions_per_doc() {
        let csv = "doc_id,time,entity,text\n\
                   p1,2010Q1,A,bank A at risk of default\n\
                   p1,2010Q1,A,\n\
                   p1,2010Q1,B,\n\
                   p2,2010Q2,A,all fine\n";
        let records = read_occurrences(csv.as_bytes()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].mentions.len(), 2);
        assert_eq!(records[0].text.as_deref(), Some("bank A at risk of default"));
        let net = build_cooccurrence(&records, &TimeWindow::default());
        assert_eq!(net.nodes["A"], 2);
    }

    #[test]
    fn csv_rejects_conflicting_doc_times() {
        let csv = "doc_id,time,entity\np1,2010Q1,A\np1,2010Q2,B\n";
        assert!(matches!(
            read_occurrences(csv.as_bytes()),
            Err(Error::Row { row: 3, .. })
        ));
    }

    #[test]
    fn edge_styling_log_scale() {
        let net = CooccurrenceNetwork {
            nodes: BTreeMap::new(),
            edges: vec![
                Edge {
                    a: "A".into(),
                    b: "B".into(),
                    count: 3,
                },
                Edge {
                    a: "A".into(),
                    b: "C".into(),
                    count: 7,
                },
            ],
            window: TimeWindow::default(),
        };
        let d: Vec<f64> = edge_styling(&net);
        assert_relative_eq!(d[0], 4f64.ln() / 8f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(d[0], 0.6667, epsilon = 1e-4);
        assert_eq!(d[1], 1.0);
    }

    #[test]
    fn distress_share_examples() {
        let records = vec![
            rec("1", "2010Q1", &["A"], Some("Systemic RISK rising")),
            rec("2", "2010Q1", &["A"], Some("riskless arbitrage")),
            rec("3", "2010Q1", &["A", "B"], Some("quarterly results")),
            rec("4", "2010Q1", &["A"], None),
        ];
        let share: f64 = distress_share(&records, "A", &["risk"]).unwrap();
        assert_eq!(share, 0.25);
        let none: f64 = distress_share(&records, "Z", &["risk"]).unwrap();
        assert_eq!(none, 0.0);
        let all: f64 = distress_share(&records[..1], "A", &["risk"]).unwrap();
        assert_eq!(all, 1.0);
    }

    fn pair() -> CooccurrenceNetwork {
        build_cooccurrence(&[rec("1", "2010Q1", &["A", "B"], None)], &TimeWindow::default())
    }

    fn dist(l: &LayoutState<f64>, a: usize, b: usize) -> f64 {
        let (p, q) = (l.positions[a], l.positions[b]);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    #[test]
    fn two_nodes_settle_at_ideal_length() {
        let frame = Frame::new(1000.0, 1000.0).unwrap();
        for seed in 0..5 {
            let l = fr_layout(&pair(), frame, 300, seed).unwrap();
            let d = dist(&l, 0, 1);
            assert!((d - l.k).abs() / l.k <= 0.05, "seed {seed}: d = {d}, k = {}", l.k);
        }
    }

    #[test]
    fn single_node_does_not_move() {
        let net = build_cooccurrence(&[rec("1", "2010Q1", &["A"], None)], &TimeWindow::default());
        let frame = Frame::new(100.0, 50.0).unwrap();
        let l = fr_layout(&net, frame, 50, 3).unwrap();
        let l0 = fr_layout(&net, frame, 0, 3).unwrap();
        assert_eq!(l.positions, l0.positions);
    }

    #[test]
    fn layout_is_seed_deterministic_and_in_frame() {
        let records: Vec<_> = (0..20)
            .map(|i| {
                let a = format!("N{}", i % 7);
                let b = format!("N{}", (i * 3 + 1) % 7);
                rec(&i.to_string(), "2010Q1", &[&a, &b], None)
            })
            .collect();
        let net = build_cooccurrence(&records, &TimeWindow::default());
        let frame = Frame::new(300.0, 200.0).unwrap();
        let a = fr_layout(&net, frame, 100, 42).unwrap();
        let b = fr_layout(&net, frame, 100, 42).unwrap();
        let c = fr_layout(&net, frame, 100, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.positions, c.positions);
        assert!(a.positions.iter().all(|p| frame.contains(*p)));
    }

    #[test]
    fn coincident_nodes_separate() {
        let net = pair();
        let frame = Frame::new(100.0, 100.0).unwrap();
        let mut l = fr_layout(&net, frame, 0, 1).unwrap();
        l.positions = vec![[50.0, 50.0], [50.0, 50.0]];
        let r = pin_and_relax(&net, &l, &BTreeMap::new(), 200).unwrap();
        assert!(dist(&r, 0, 1) > 1.0);
    }

    #[test]
    fn pin_all_is_noop() {
        let net = pair();
        let frame = Frame::new(1000.0, 1000.0).unwrap();
        let l = fr_layout(&net, frame, 50, 9).unwrap();
        let pinned: BTreeMap<_, _> = l.nodes.iter().cloned().zip(l.positions.clone()).collect();
        let r = pin_and_relax(&net, &l, &pinned, 50).unwrap();
        assert_eq!(r.positions, l.positions);
    }

    #[test]
    fn pin_one_relaxes_other_to_ideal_length() {
        let net = pair();
        let frame = Frame::new(1000.0, 1000.0).unwrap();
        let mut l = fr_layout(&net, frame, 0, 9).unwrap();
        l.positions = vec![[500.0, 500.0], [520.0, 480.0]];
        let pinned = BTreeMap::from([("A".to_string(), [500.0, 500.0])]);
        let r = pin_and_relax(&net, &l, &pinned, 400).unwrap();
        assert_eq!(r.positions[0], [500.0, 500.0]);
        let d = dist(&r, 0, 1);
        assert!((d - r.k).abs() / r.k <= 0.05, "d = {d}, k = {}", r.k);
        assert!(frame.contains(r.positions[1]));
    }

    #[test]
    fn pin_unknown_node_errors() {
        let net = pair();
        let l = fr_layout(&net, Frame::new(10.0, 10.0).unwrap(), 1, 0).unwrap();
        let pinned = BTreeMap::from([("Z".to_string(), [0.0, 0.0])]);
        assert!(matches!(
            pin_and_relax(&net, &l, &pinned, 5),
            Err(Error::UnknownEntity(_))
        ));
    }
}
