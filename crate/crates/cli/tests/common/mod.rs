//! Synthetic macro-financial inputs at full scale: 28
//! economies, quarterly 1990Q1-2011Q4, 14 indicators.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const BIN: &str = env!("CARGO_BIN_EXE_visrisk");

pub struct Shape {
    pub entities: usize,
    pub quarters: usize,
    pub indicators: usize,
    pub banks: usize,
    pub posts: usize,
}

pub const FULL: Shape = Shape {
    entities: 28,
    quarters: 88,
    indicators: 14,
    banks: 30,
    posts: 3000,
};

pub const SMALL: Shape = Shape {
    entities: 8,
    quarters: 16,
    indicators: 5,
    banks: 8,
    posts: 120,
};

pub fn quarter(i: usize) -> String {
    format!("{}Q{}", 1990 + i / 4, i % 4 + 1)
}

fn phase(t: usize, crisis: Option<usize>) -> &'static str {
    match crisis {
        Some(c) if t + 12 >= c && t < c => "pre-crisis",
        Some(c) if t >= c && t < c + 6 => "crisis",
        Some(c) if t >= c + 6 && t < c + 14 => "post-crisis",
        _ => "tranquil",
    }
}

/// Writes observation, event, label, state and occurrence CSVs plus a
/// config into `dir`; returns the config path.
pub fn write_inputs(dir: &Path, shape: &Shape, seed: u64) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obs = String::from("entity,time,indicator,value\n");
    let mut events = String::from("entity,start,end,label\n");
    let mut labels = String::from("entity,time,label\n");
    let mut states = String::from("entity,time,label\n");
    for e in 0..shape.entities {
        let name = format!("E{e:02}");
        let crisis = (e % 3 != 2).then(|| rng.random_range(shape.quarters / 3..shape.quarters - 4));
        if let Some(c) = crisis {
            let end = (c + 5).min(shape.quarters - 1);
            writeln!(events, "{name},{},{},systemic crisis", quarter(c), quarter(end)).unwrap();
        }
        let level: Vec<f64> = (0..shape.indicators).map(|_| rng.random_range(-2.0..2.0)).collect();
        let mut ar = vec![0.0f64; shape.indicators];
        for t in 0..shape.quarters {
            let ph = phase(t, crisis);
            let boom = match ph {
                "pre-crisis" => 2.5,
                "crisis" => -1.5,
                "post-crisis" => -0.5,
                _ => 0.0,
            };
            for k in 0..shape.indicators {
                let z: f64 = rng.sample(StandardNormal);
                ar[k] = 0.8 * ar[k] + 0.3 * z;
                let v = level[k] + ar[k] + boom * (1.0 + k as f64 / shape.indicators as f64);
                if rng.random_bool(0.02) {
                    writeln!(obs, "{name},{},ind{k:02},", quarter(t)).unwrap();
                } else {
                    writeln!(obs, "{name},{},ind{k:02},{v:.6}", quarter(t)).unwrap();
                }
            }
            writeln!(labels, "{name},{},{}", quarter(t), u8::from(ph == "pre-crisis")).unwrap();
            writeln!(states, "{name},{},{ph}", quarter(t)).unwrap();
        }
    }
    let mut occ = String::from("doc_id,time,entity,text\n");
    let first_post_quarter = shape.quarters.saturating_sub(36);
    for d in 0..shape.posts {
        let t = rng.random_range(first_post_quarter..shape.quarters);
        let n = rng.random_range(1..=3);
        let text = if rng.random_bool(0.2) { "worries about bank risk and losses" } else { "results in line" };
        for _ in 0..n {
            // skewed bank popularity
            let b = (rng.random::<f64>().powi(2) * shape.banks as f64) as usize;
            writeln!(occ, "post{d},{},Bank{b:02},{text}", quarter(t)).unwrap();
        }
    }
    fs::write(dir.join("observations.csv"), obs).unwrap();
    fs::write(dir.join("events.csv"), events).unwrap();
    fs::write(dir.join("labels.csv"), labels).unwrap();
    fs::write(dir.join("states.csv"), states).unwrap();
    fs::write(dir.join("occurrences.csv"), occ).unwrap();
    let weights: serde_json::Map<String, serde_json::Value> = (0..shape.indicators)
        .map(|k| (format!("ind{k:02}"), serde_json::json!(0.4 + 0.1 * k as f64)))
        .collect();
    let config = serde_json::json!({
        "observations": "observations.csv",
        "events": "events.csv",
        "labels": "labels.csv",
        "states": "states.csv",
        "occurrences": "occurrences.csv",
        "som": { "width": 13, "height": 10, "iterations": 40, "transform": "percentile" },
        "sotm": { "units": 5, "sigma": 1.0, "epochs_per_slice": 10, "transform": "percentile" },
        "network": { "width": 1000.0, "height": 800.0, "iterations": 300, "seed": 1 },
        "ewm": { "weights": weights, "bias": -3.0 },
        "distress_terms": ["risk", "losses", "default"]
    });
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

pub fn visrisk(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run visrisk")
}
