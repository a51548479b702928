//! Seeded synthetic dataset in the on-disk formats the CLI reads.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const OBJECTS: [&str; 8] = [
    "parking", "street", "racket", "bus", "bottle", "laptop", "train", "pizza",
];
pub const SHORT: [&str; 4] = ["a", "of", "to", "no"];
pub const DIM: usize = 16;

#[derive(Debug, Clone)]
pub struct Image {
    pub id: String,
    pub gold: String,
    pub object: String,
    pub confidence: f64,
    /// Sorted by score, highest first.
    pub hyps: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<Image>,
    pub test: Vec<Image>,
    pub vocab: Vec<String>,
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub counts: BTreeMap<String, u64>,
    pub dict: Vec<String>,
}

pub struct Paths {
    pub train_hyps: PathBuf,
    pub train_ctx: PathBuf,
    pub test_hyps: PathBuf,
    pub test_ctx: PathBuf,
    pub counts_a: PathBuf,
    pub counts_b: PathBuf,
    pub general: PathBuf,
    pub dict: PathBuf,
}

fn related(o: usize, j: usize) -> String {
    format!(
        "{}{}",
        &OBJECTS[o][..3],
        ["pay", "exit", "sale", "stop", "open", "one"][j]
    )
}

fn misspell(rng: &mut ChaCha8Rng, w: &str) -> String {
    let mut chars: Vec<char> = w.chars().collect();
    let i = rng.gen_range(0..chars.len());
    chars[i] = (b'a' + rng.gen_range(0..26u8)) as char;
    let s: String = chars.into_iter().collect();
    if s == w {
        format!("{w}x")
    } else {
        s
    }
}

impl Dataset {
    pub fn generate(seed: u64, n_train: usize, n_test: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vocab: Vec<String> = Vec::new();
        let mut vectors = BTreeMap::new();
        let gauss = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        for (o, obj) in OBJECTS.iter().enumerate() {
            let base = gauss(&mut rng);
            vectors.insert(obj.to_string(), base.clone());
            for j in 0..6 {
                let w = related(o, j);
                let v: Vec<f64> = base.iter().map(|x| x + rng.gen_range(-0.4..0.4)).collect();
                vectors.insert(w.clone(), v);
                vocab.push(w);
            }
        }
        for s in SHORT {
            vectors.insert(s.to_string(), gauss(&mut rng));
            vocab.push(s.to_string());
        }
        let counts: BTreeMap<String, u64> = vocab
            .iter()
            .map(|w| (w.clone(), rng.gen_range(1..500)))
            .collect();
        let mut dict: Vec<String> = vocab
            .iter()
            .filter(|_| rng.gen_bool(0.7))
            .cloned()
            .collect();
        dict.push("unusedword".into());

        let make = |prefix: &str, n: usize, rng: &mut ChaCha8Rng| -> Vec<Image> {
            (0..n)
                .map(|i| {
                    let o = rng.gen_range(0..OBJECTS.len());
                    let gold = if rng.gen_bool(0.8) {
                        related(o, rng.gen_range(0..6))
                    } else if rng.gen_bool(0.5) {
                        SHORT[rng.gen_range(0..SHORT.len())].to_string()
                    } else {
                        format!("rare{}", rng.gen_range(0..1000))
                    };
                    let mut words: Vec<String> = Vec::new();
                    if rng.gen_bool(0.85) {
                        words.push(gold.clone());
                    }
                    while words.len() < 9 {
                        let cand = match rng.gen_range(0..3) {
                            0 => misspell(rng, &gold),
                            1 => vocab.choose(rng).unwrap().clone(),
                            _ => related(rng.gen_range(0..OBJECTS.len()), rng.gen_range(0..6)),
                        };
                        if !words.contains(&cand) {
                            words.push(cand);
                        }
                    }
                    words.shuffle(rng);
                    let mut scores: Vec<f64> = (0..9).map(|_| rng.gen_range(0.001..1.0)).collect();
                    let total: f64 = scores.iter().sum();
                    scores.iter_mut().for_each(|s| *s /= total);
                    scores.sort_by(|a, b| b.partial_cmp(a).unwrap());
                    Image {
                        id: format!("{prefix}{i}"),
                        gold,
                        object: OBJECTS[o].to_string(),
                        confidence: rng.gen_range(0.05..0.99),
                        hyps: words.into_iter().zip(scores).collect(),
                    }
                })
                .collect()
        };
        let train = make("tr", n_train, &mut rng);
        let test = make("te", n_test, &mut rng);
        Dataset {
            train,
            test,
            vocab,
            vectors,
            counts,
            dict,
        }
    }

    pub fn write(&self, dir: &Path) -> Paths {
        let p = Paths {
            train_hyps: dir.join("train_hyps.jsonl"),
            train_ctx: dir.join("train_ctx.jsonl"),
            test_hyps: dir.join("test_hyps.jsonl"),
            test_ctx: dir.join("test_ctx.jsonl"),
            counts_a: dir.join("counts_a.tsv"),
            counts_b: dir.join("counts_b.tsv"),
            general: dir.join("general.vec"),
            dict: dir.join("dict.txt"),
        };
        std::fs::write(&p.train_hyps, hyps_jsonl(&self.train)).unwrap();
        std::fs::write(&p.test_hyps, hyps_jsonl(&self.test)).unwrap();
        std::fs::write(&p.train_ctx, ctx_jsonl(&self.train)).unwrap();
        std::fs::write(&p.test_ctx, ctx_jsonl(&self.test)).unwrap();
        // Split each count across two corpora.
        let (mut a, mut b) = (String::new(), String::new());
        for (w, n) in &self.counts {
            writeln!(a, "{w}\t{}", n / 2 + 1).unwrap();
            writeln!(b, "{w}\t{}", n - n / 2).unwrap();
        }
        std::fs::write(&p.counts_a, a).unwrap();
        std::fs::write(&p.counts_b, b).unwrap();
        let mut vec = format!("{} {DIM}\n", self.vectors.len());
        for (w, v) in &self.vectors {
            vec.push_str(w);
            for x in v {
                write!(vec, " {x}").unwrap();
            }
            vec.push('\n');
        }
        std::fs::write(&p.general, vec).unwrap();
        std::fs::write(&p.dict, self.dict.join("\n")).unwrap();
        p
    }
}

fn json_str(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn hyps_jsonl(images: &[Image]) -> String {
    let mut s = String::new();
    for im in images {
        let hyps: Vec<String> = im
            .hyps
            .iter()
            .map(|(w, sc)| format!("{{\"word\":{},\"score\":{sc}}}", json_str(w)))
            .collect();
        writeln!(
            s,
            "{{\"image_id\":{},\"gold\":{},\"hypotheses\":[{}]}}",
            json_str(&im.id),
            json_str(&im.gold),
            hyps.join(",")
        )
        .unwrap();
    }
    s
}

pub fn ctx_jsonl(images: &[Image]) -> String {
    let mut s = String::new();
    for im in images {
        let runner_up = OBJECTS.iter().find(|o| **o != im.object).unwrap();
        writeln!(
            s,
            "{{\"image_id\":{},\"objects\":[{{\"label\":{},\"confidence\":{}}},{{\"label\":{},\"confidence\":{}}}]}}",
            json_str(&im.id),
            json_str(&im.object),
            im.confidence,
            json_str(runner_up),
            im.confidence * (1.0 - im.confidence) / 2.0
        )
        .unwrap();
    }
    s
}

/// Runs the CLI in-process and returns its exit status.
pub fn visrank(args: &[&str]) -> i32 {
    let mut argv = vec!["visrank"];
    argv.extend_from_slice(args);
    visrank_cli::run(argv)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
