//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

// `!(x <= tol)` is deliberate: NaN must fail a check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use visrank_core::semantic::build_cooccurrence;
use visrank_core::{
    build_ulm, evaluate, io as vio, rerank, sgns_gradient, sgns_loss, swe_prob, tdp_prob,
    train_twe, twe_prob, EmbeddingSpace, Hypothesis, HypothesisList, MatchMode, Models,
    RerankConfig, Scheme, TrainConfig, TrainCorpus, VisualContext,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// High-precision reference evaluations, computed without touching the
/// library's arithmetic.
mod oracle {
    use astro_float::{BigFloat, Consts, Radix, RoundingMode};

    const P: usize = 192;
    const RM: RoundingMode = RoundingMode::ToEven;

    pub struct Oracle {
        cc: Consts,
    }

    impl Oracle {
        pub fn new() -> Self {
            Oracle {
                cc: Consts::new().expect("constants cache"),
            }
        }

        fn big(x: f64) -> BigFloat {
            BigFloat::from_f64(x, P)
        }

        pub fn approx(&mut self, x: &BigFloat) -> f64 {
            let s = x.format(Radix::Dec, RM, &mut self.cc).expect("format");
            s.parse()
                .unwrap_or_else(|_| panic!("unparseable oracle output {s}"))
        }

        /// `p_w ^ (((1 - s) / (1 + s)) ^ (1 - p_c))`
        pub fn swe(&mut self, sim: f64, p_w: f64, p_c: f64) -> BigFloat {
            let one = Self::big(1.0);
            let s = Self::big(sim);
            let ratio = one.sub(&s, P, RM).div(&one.add(&s, P, RM), P, RM);
            let expo = one.sub(&Self::big(p_c), P, RM);
            let alpha = ratio
                .ln(P, RM, &mut self.cc)
                .mul(&expo, P, RM)
                .exp(P, RM, &mut self.cc);
            Self::big(p_w)
                .ln(P, RM, &mut self.cc)
                .mul(&alpha, P, RM)
                .exp(P, RM, &mut self.cc)
        }

        /// `(tanh(s) + 1) / (2 p_c)`
        pub fn twe(&mut self, sim: f64, p_c: f64) -> BigFloat {
            let t = Self::big(sim).tanh(P, RM, &mut self.cc);
            t.add(&Self::big(1.0), P, RM)
                .div(&Self::big(2.0 * p_c), P, RM)
        }

        pub fn cosine(&mut self, u: &[f64], v: &[f64]) -> BigFloat {
            let dot = |a: &[f64], b: &[f64]| {
                a.iter().zip(b).fold(Self::big(0.0), |acc, (x, y)| {
                    acc.add(&Self::big(*x).mul(&Self::big(*y), P, RM), P, RM)
                })
            };
            let den = dot(u, u).mul(&dot(v, v), P, RM).sqrt(P, RM);
            dot(u, v).div(&den, P, RM)
        }

        /// Baseline score times unigram probability times the SWE factor.
        pub fn swe_final(&mut self, base: f64, p_w: f64, sim: &BigFloat, p_c: f64) -> BigFloat {
            let one = Self::big(1.0);
            let ratio = one.sub(sim, P, RM).div(&one.add(sim, P, RM), P, RM);
            let expo = one.sub(&Self::big(p_c), P, RM);
            let alpha = ratio
                .ln(P, RM, &mut self.cc)
                .mul(&expo, P, RM)
                .exp(P, RM, &mut self.cc);
            let pw = Self::big(p_w);
            let swe = pw
                .ln(P, RM, &mut self.cc)
                .mul(&alpha, P, RM)
                .exp(P, RM, &mut self.cc);
            Self::big(base).mul(&pw, P, RM).mul(&swe, P, RM)
        }

        pub fn rel_err(&mut self, got: f64, want: &BigFloat) -> f64 {
            let diff = Self::big(got).sub(want, P, RM);
            let rel = diff.div(want, P, RM).abs();
            self.approx(&rel)
        }

        /// Relative gap `(a - b) / a`.
        pub fn gap(&mut self, a: &BigFloat, b: &BigFloat) -> f64 {
            let d = a.sub(b, P, RM).div(a, P, RM);
            self.approx(&d)
        }
    }
}

const SIMS: [f64; 7] = [-0.9, -0.5, 0.0, 0.25, 0.5, 0.75, 0.9];
const P_WS: [f64; 4] = [1e-6, 1e-3, 0.1, 0.5];
const P_CS: [f64; 3] = [0.1, 0.5, 0.9];

fn swe_grid() -> Outcome {
    let mut o = oracle::Oracle::new();
    let mut worst = 0.0f64;
    for &s in &SIMS {
        for &pw in &P_WS {
            for &pc in &P_CS {
                let got = swe_prob(s, pw, pc).map_err(|e| e.to_string())?;
                let want = o.swe(s, pw, pc);
                let rel = o.rel_err(got, &want);
                ensure!(
                    rel <= 1e-12,
                    "sim={s} p_w={pw} p_c={pc}: got {got}, rel err {rel:e}"
                );
                worst = worst.max(rel);
            }
        }
    }
    Ok(format!(
        "{} points, max rel err {worst:.1e}",
        SIMS.len() * P_WS.len() * P_CS.len()
    ))
}

fn twe_grid() -> Outcome {
    let mut o = oracle::Oracle::new();
    let sims = [-0.99, -0.9, -0.5, 0.0, 0.25, 0.5, 0.75, 0.9, 0.99];
    let pcs = [0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0];
    let mut worst = 0.0f64;
    for &s in &sims {
        for &pc in &pcs {
            let got = twe_prob(s, pc).map_err(|e| e.to_string())?;
            let want = o.twe(s, pc);
            let rel = o.rel_err(got, &want);
            ensure!(rel <= 1e-12, "sim={s} p_c={pc}: got {got}, rel err {rel:e}");
            worst = worst.max(rel);
        }
    }
    Ok(format!(
        "{} points, max rel err {worst:.1e}",
        sims.len() * pcs.len()
    ))
}

fn tdp_recount() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let objects: Vec<String> = (0..20).map(|i| format!("obj{i}")).collect();
    let words: Vec<String> = (0..50).map(|i| format!("word{i}")).collect();
    let mut records = Vec::new();
    for i in 0..500 {
        let gold = words.choose(&mut rng).unwrap().clone();
        let n = rng.gen_range(0..4);
        let picked: Vec<&String> = objects.choose_multiple(&mut rng, n).collect();
        // Distinct confidences so the top object is unambiguous.
        let mut confs: Vec<f64> = (0..n)
            .map(|j| (j as f64 + rng.gen::<f64>()) / 4.0)
            .collect();
        confs.shuffle(&mut rng);
        let objs: Vec<(&str, f64)> = picked.iter().map(|s| s.as_str()).zip(confs).collect();
        records.push((gold, VisualContext::new(format!("im{i}"), objs)));
    }

    // Naive recount straight from the raw records.
    let mut pair: HashMap<(String, String), u64> = HashMap::new();
    let mut ctx: HashMap<String, u64> = HashMap::new();
    let mut skipped = 0;
    for (gold, c) in &records {
        let mut best: Option<(&str, f64)> = None;
        for obj in &c.objects {
            if best.is_none_or(|(_, b)| obj.confidence > b) {
                best = Some((&obj.label, obj.confidence));
            }
        }
        match best {
            Some((label, _)) => {
                *pair.entry((gold.clone(), label.to_string())).or_default() += 1;
                *ctx.entry(label.to_string()).or_default() += 1;
            }
            None => skipped += 1,
        }
    }

    let (table, got_skipped) = build_cooccurrence(records.iter().map(|(g, c)| (g.as_str(), c)));
    ensure!(
        got_skipped == skipped,
        "skipped {got_skipped}, expected {skipped}"
    );
    ensure!(
        table.pair_counts().len() == pair.len(),
        "pair key count differs"
    );
    for ((w, c), n) in &pair {
        ensure!(
            table.pair_count(w, c) == *n,
            "count({w},{c}) = {}, expected {n}",
            table.pair_count(w, c)
        );
    }
    ensure!(
        table.ctx_counts().len() == ctx.len(),
        "object key count differs"
    );
    for (c, n) in &ctx {
        ensure!(
            table.ctx_count(c) == *n,
            "count({c}) = {}, expected {n}",
            table.ctx_count(c)
        );
    }

    let eps = table.smoothing_epsilon();
    let mut observed = 0;
    for _ in 0..100 {
        let w = words.choose(&mut rng).unwrap();
        let c = objects.choose(&mut rng).unwrap();
        let num = pair.get(&(w.clone(), c.clone())).copied().unwrap_or(0);
        let den = ctx.get(c).copied().unwrap_or(0);
        let want = if num == 0 || den == 0 {
            eps
        } else {
            num as f64 / den as f64
        };
        observed += usize::from(num > 0);
        let got = tdp_prob(&table, w, c);
        ensure!(got == want, "tdp({w}|{c}) = {got}, expected {want}");
    }
    Ok(format!(
        "{} pairs, {} objects, {skipped} skipped, 100 probes ({observed} observed)",
        pair.len(),
        ctx.len()
    ))
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let rand_vec =
        |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    for inst in 0..100 {
        let center = rand_vec(&mut rng);
        let context = rand_vec(&mut rng);
        let k = rng.gen_range(0..6);
        let negs: Vec<Vec<f64>> = (0..k).map(|_| rand_vec(&mut rng)).collect();
        let loss = |c: &[f64], x: &[f64], n: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = n.iter().map(Vec::as_slice).collect();
            sgns_loss(c, x, &refs).unwrap()
        };
        let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        let g = sgns_gradient(&center, &context, &refs).map_err(|e| e.to_string())?;

        // slot 0 = center, 1 = context, 2.. = negatives
        for slot in 0..2 + k {
            for i in 0..10 {
                let mut plus = (center.clone(), context.clone(), negs.clone());
                let mut minus = (center.clone(), context.clone(), negs.clone());
                let (p, m) = match slot {
                    0 => (&mut plus.0[i], &mut minus.0[i]),
                    1 => (&mut plus.1[i], &mut minus.1[i]),
                    n => (&mut plus.2[n - 2][i], &mut minus.2[n - 2][i]),
                };
                *p += h;
                *m -= h;
                let fd = (loss(&plus.0, &plus.1, &plus.2) - loss(&minus.0, &minus.1, &minus.2))
                    / (2.0 * h);
                let an = match slot {
                    0 => g.center[i],
                    1 => g.context[i],
                    n => g.negatives[n - 2][i],
                };
                let err = (fd - an).abs();
                ensure!(
                    err <= 1e-6,
                    "instance {inst} slot {slot} component {i}: analytic {an}, numeric {fd}"
                );
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("100 instances, max abs err {worst:.1e}"))
}

fn trainer_behavior() -> Outcome {
    let mut pairs = vec![("pay", "parking"); 200];
    pairs.extend(vec![("exit", "street"); 200]);
    let corpus = TrainCorpus::new(pairs).map_err(|e| e.to_string())?;
    let config = TrainConfig::default();
    let run = || -> Result<Vec<u8>, String> {
        let e = train_twe(&corpus, &config).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        vio::save_embeddings(&e, &mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let first = run()?;
    let second = run()?;
    ensure!(first == second, "two runs with seed {} differ", config.seed);

    let e = vio::load_embeddings(&first[..])
        .map_err(|e| e.to_string())?
        .value;
    let sim = |a: &str, b: &str| e.similarity(a, b).unwrap();
    let probes = [
        ("pay", "parking", "street"),
        ("exit", "street", "parking"),
        ("parking", "pay", "exit"),
        ("street", "exit", "pay"),
    ];
    let mut margins = Vec::new();
    for (a, within, across) in probes {
        let (w, x) = (sim(a, within), sim(a, across));
        ensure!(
            w > x,
            "cos({a},{within}) = {w} not above cos({a},{across}) = {x}"
        );
        margins.push(format!("{:.2}>{:.2}", w, x));
    }
    Ok(format!(
        "dim {} epochs {}, probes {}, {} bytes identical",
        config.dimension,
        config.epochs,
        margins.join(" "),
        first.len()
    ))
}

struct RandomWorld {
    ulm: visrank_core::UnigramModel,
    swe: EmbeddingSpace,
    twe: EmbeddingSpace,
    tdp: visrank_core::CooccurrenceTable,
    words: Vec<String>,
    objects: Vec<String>,
}

fn random_world(rng: &mut ChaCha8Rng) -> RandomWorld {
    let words: Vec<String> = (0..60).map(|i| format!("w{i}")).collect();
    let objects: Vec<String> = (0..8).map(|i| format!("o{i}")).collect();
    let vec10 =
        |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let mut swe = EmbeddingSpace::new(10).unwrap();
    let mut twe = EmbeddingSpace::new(10).unwrap();
    // Leave some words and one object out of each space.
    for w in words.iter().chain(&objects[1..]) {
        if rng.gen_bool(0.8) {
            swe.insert(w.clone(), &vec10(rng)).unwrap();
        }
        if rng.gen_bool(0.8) {
            twe.insert(w.clone(), &vec10(rng)).unwrap();
        }
    }
    let mut counts = BTreeMap::new();
    for w in &words {
        if rng.gen_bool(0.7) {
            counts.insert(w.clone(), rng.gen_range(1..1000u64));
        }
    }
    let ulm = build_ulm(counts, 1e-9).unwrap();
    let annotations: Vec<(String, VisualContext)> = (0..300)
        .map(|i| {
            let c = objects.choose(rng).unwrap();
            (
                words.choose(rng).unwrap().clone(),
                VisualContext::new(format!("t{i}"), vec![(c.as_str(), 0.9)]),
            )
        })
        .collect();
    let (tdp, _) = build_cooccurrence(annotations.iter().map(|(w, c)| (w.as_str(), c)));
    RandomWorld {
        ulm,
        swe,
        twe,
        tdp,
        words,
        objects,
    }
}

fn ranking_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let world = random_world(&mut rng);
    let models = Models {
        ulm: Some(&world.ulm),
        swe: Some(&world.swe),
        twe: Some(&world.twe),
        tdp: Some(&world.tdp),
    };
    let mut fallbacks = 0;
    for n in 0..1000 {
        let k = rng.gen_range(1..=10);
        let picked: Vec<&String> = world.words.choose_multiple(&mut rng, k).collect();
        let hyps = HypothesisList {
            image_id: format!("r{n}"),
            gold: None,
            hypotheses: picked
                .iter()
                .map(|w| Hypothesis::new(w.as_str(), rng.gen_range(1e-4..1.0)))
                .collect(),
        };
        let lambda: f64 = rng.gen_range(1e-3..1.0);
        let scaled = HypothesisList {
            hypotheses: hyps
                .hypotheses
                .iter()
                .map(|h| Hypothesis::new(h.word.as_str(), h.score * lambda))
                .collect(),
            ..hyps.clone()
        };
        let ctx = rng.gen_bool(0.9).then(|| {
            let obj = world.objects.choose(&mut rng).unwrap();
            VisualContext::new(
                format!("r{n}"),
                vec![(obj.as_str(), rng.gen_range(0.01..1.0))],
            )
        });
        for scheme in Scheme::ALL {
            let cfg = RerankConfig::new(scheme);
            let a = rerank(&hyps, ctx.as_ref(), &models, &cfg)
                .map_err(|e| format!("list {n} {scheme}: {e}"))?;
            let b = rerank(&scaled, ctx.as_ref(), &models, &cfg)
                .map_err(|e| format!("list {n} {scheme}: {e}"))?;
            let order = |o: &visrank_core::RankedOutput| {
                o.ranked.iter().map(|e| e.word.clone()).collect::<Vec<_>>()
            };
            ensure!(
                order(&a) == order(&b),
                "list {n} {scheme}: order changed under scaling by {lambda}"
            );
            fallbacks += usize::from(a.fallback.is_some());
            for e in a.ranked.iter().chain(&b.ranked) {
                ensure!(
                    e.score > 0.0,
                    "list {n} {scheme}: {} scored {}",
                    e.word,
                    e.score
                );
                let product: f64 = e.factors.values().product();
                ensure!(
                    (product - e.score).abs() <= 1e-9 * e.score,
                    "list {n} {scheme}: factors give {product}, score {}",
                    e.score
                );
            }
        }
    }
    Ok(format!(
        "1000 lists x {} schemes, {fallbacks} fallbacks",
        Scheme::ALL.len()
    ))
}

fn direction_of_effect() -> Outcome {
    const N: usize = 200;
    const DIM: usize = 12;
    const N_OBJ: usize = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let unit = |i: usize| -> Vec<f64> { (0..DIM).map(|j| f64::from(u8::from(i == j))).collect() };
    let jitter = |rng: &mut ChaCha8Rng, base: Vec<f64>, amount: f64| -> Vec<f64> {
        base.into_iter()
            .map(|x| x + rng.gen_range(-amount..amount))
            .collect()
    };

    let mut space = EmbeddingSpace::new(DIM).unwrap();
    let object_vecs: Vec<Vec<f64>> = (0..N_OBJ).map(unit).collect();
    for (i, v) in object_vecs.iter().enumerate() {
        space.insert(format!("object{i}"), v).unwrap();
    }
    let mut lists = Vec::new();
    let mut contexts = HashMap::new();
    let mut gold = HashMap::new();
    let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
    for i in 0..N {
        let o = i % N_OBJ;
        let id = format!("img{i}");
        let g = format!("gold{i}");
        let d = format!("other{i}");
        let gv = jitter(&mut rng, unit(o), 0.2);
        let dv = jitter(&mut rng, unit((o + 1 + i % (N_OBJ - 1)) % N_OBJ), 0.2);
        let flip = i % 5 < 2;
        let (hi, lo): (f64, f64) = (rng.gen_range(0.37..0.45), rng.gen_range(0.30..0.36));
        let mut hyps = if flip {
            vec![(d.clone(), hi), (g.clone(), lo)]
        } else {
            vec![(g.clone(), hi), (d.clone(), lo)]
        };
        vectors.insert(g.clone(), gv);
        vectors.insert(d.clone(), dv);
        for j in 0..3 {
            let f = format!("filler{i}_{j}");
            vectors.insert(
                f.clone(),
                (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            );
            hyps.push((f, rng.gen_range(0.01..0.1)));
        }
        for (w, _) in &hyps {
            space.insert(w.clone(), &vectors[w]).unwrap();
        }
        let conf = rng.gen_range(0.5..0.95);
        contexts.insert(id.clone(), (format!("object{o}"), conf));
        gold.insert(id.clone(), g);
        lists.push((id, hyps));
    }

    // Uniform unigram model over every word in the fixture.
    let counts: BTreeMap<String, u64> = space.words().iter().map(|w| (w.clone(), 10)).collect();
    let vocab = counts.len();
    let p_w = 10.0 / (10 * vocab) as f64;

    // Oracle: direct evaluation of both rankings at high precision.
    let mut or = oracle::Oracle::new();
    let (mut bl_correct, mut swe_correct, mut min_gap) = (0usize, 0usize, f64::INFINITY);
    for (id, hyps) in &lists {
        let (obj, conf) = &contexts[id];
        let ov = &object_vecs[obj.trim_start_matches("object").parse::<usize>().unwrap()];
        let g = &gold[id];
        // gold is nearer its own object than any other object
        let own = or.cosine(&vectors[g], ov);
        let own = or.approx(&own);
        for other in &object_vecs {
            if other != ov {
                let c = or.cosine(&vectors[g], other);
                let c = or.approx(&c);
                ensure!(own > c, "{id}: gold closer to another object");
            }
        }
        let bl_top = hyps.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        bl_correct += usize::from(&bl_top.0 == g);
        let mut finals: Vec<(String, astro_float::BigFloat)> = hyps
            .iter()
            .map(|(w, b)| {
                let sim = or.cosine(&vectors[w], ov);
                (w.clone(), or.swe_final(*b, p_w, &sim, *conf))
            })
            .collect();
        finals.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        min_gap = min_gap.min(or.gap(&finals[0].1, &finals[1].1));
        swe_correct += usize::from(&finals[0].0 == g);
    }
    ensure!(min_gap > 1e-6, "oracle margin {min_gap:e} too thin for f64");
    let pct = |c: usize| 100.0 * c as f64 / N as f64;
    let oracle_delta = pct(swe_correct) - pct(bl_correct);

    let ulm = build_ulm(counts, 1e-9).map_err(|e| e.to_string())?;
    let models = Models {
        ulm: Some(&ulm),
        swe: Some(&space),
        ..Models::default()
    };
    let mut acc = HashMap::new();
    for scheme in [Scheme::Baseline, Scheme::Swe] {
        let cfg = RerankConfig::new(scheme);
        let mut outputs = Vec::new();
        for (id, hyps) in &lists {
            let list = HypothesisList {
                image_id: id.clone(),
                gold: None,
                hypotheses: hyps
                    .iter()
                    .map(|(w, s)| Hypothesis::new(w.as_str(), *s))
                    .collect(),
            };
            let (obj, conf) = &contexts[id];
            let ctx = VisualContext::new(id.clone(), vec![(obj.as_str(), *conf)]);
            outputs.push(rerank(&list, Some(&ctx), &models, &cfg).map_err(|e| e.to_string())?);
        }
        let report =
            evaluate(&outputs, &gold, None, 5, MatchMode::default()).map_err(|e| e.to_string())?;
        acc.insert(scheme, report.acc_full().unwrap());
    }
    let delta = acc[&Scheme::Swe] - acc[&Scheme::Baseline];
    ensure!(
        delta == oracle_delta,
        "SWE - BL = {delta}, oracle says {oracle_delta} (BL {}, SWE {})",
        acc[&Scheme::Baseline],
        acc[&Scheme::Swe]
    );
    ensure!(
        bl_correct == 120 && swe_correct == 200,
        "fixture did not flip as designed: BL {bl_correct}, SWE {swe_correct}"
    );
    Ok(format!(
        "BL {:.1} -> SWE {:.1}, delta {delta:+.1} matches oracle, min margin {min_gap:.2e}",
        acc[&Scheme::Baseline],
        acc[&Scheme::Swe]
    ))
}

fn pipeline_report() -> Outcome {
    use common::{s, visrank};
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let data = common::Dataset::generate(29, 300, 120);
    let p = data.write(dir);
    let (ulm, tdp, twe) = (
        dir.join("ulm.tsv"),
        dir.join("tdp.tsv"),
        dir.join("twe.vec"),
    );
    let (txt, tsv) = (dir.join("report.txt"), dir.join("report.tsv"));
    let steps: Vec<Vec<&str>> = vec![
        vec![
            "build-ulm",
            s(&p.counts_a),
            s(&p.counts_b),
            "--out",
            s(&ulm),
        ],
        vec![
            "build-tdp",
            "--hyps",
            s(&p.train_hyps),
            "--ctx",
            s(&p.train_ctx),
            "--out",
            s(&tdp),
        ],
        vec![
            "train-twe",
            "--hyps",
            s(&p.train_hyps),
            "--ctx",
            s(&p.train_ctx),
            "--init",
            s(&p.general),
            "--dim",
            "16",
            "--out",
            s(&twe),
        ],
        vec![
            "pipeline",
            "--hyps",
            s(&p.test_hyps),
            "--ctx",
            s(&p.test_ctx),
            "--ulm",
            s(&ulm),
            "--swe",
            s(&p.general),
            "--twe",
            s(&twe),
            "--tdp",
            s(&tdp),
            "--dict",
            s(&p.dict),
            "--out",
            s(&txt),
            "--tsv",
            s(&tsv),
        ],
    ];
    for args in &steps {
        let code = visrank(args);
        ensure!(code == 0, "`visrank {}` exited {code}", args[0]);
    }

    let tsv_text = std::fs::read_to_string(&tsv).map_err(|e| e.to_string())?;
    let cells: HashMap<(String, String), String> = tsv_text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            ((f[0].to_string(), f[1].to_string()), f[2].to_string())
        })
        .collect();
    let labels = [
        "Baseline",
        "ULM",
        "SWE",
        "SWE+TDP",
        "TDP+TWE",
        "SWE+TDP+TWE",
    ];
    for label in labels {
        for k in [5, 9] {
            for metric in ["full", "dict", "list"] {
                let key = (label.to_string(), format!("k={k}/{metric}"));
                let v = cells
                    .get(&key)
                    .ok_or_else(|| format!("missing {label} k={k} {metric}"))?;
                ensure!(
                    v.parse::<f64>().is_ok_and(|x| (0.0..=100.0).contains(&x)),
                    "{label} k={k} {metric} = {v}"
                );
            }
        }
    }
    let report = std::fs::read_to_string(&txt).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = report.lines().collect();
    ensure!(
        lines.iter().any(|l| l.contains("k=5") && l.contains("k=9")),
        "report header lacks k=5/k=9 groups"
    );
    ensure!(
        lines
            .iter()
            .any(|l| l.contains("full") && l.contains("dict") && l.contains("list")),
        "no metric header"
    );
    let got_rows: BTreeSet<&str> = lines
        .iter()
        .filter(|l| l.split('|').count() == 3)
        .map(|l| l.split('|').next().unwrap().trim())
        .collect();
    for label in labels {
        ensure!(got_rows.contains(label), "report has no row for {label}");
    }
    let bl = &cells[&("Baseline".to_string(), "k=9/full".to_string())];
    let best = &cells[&("TDP+TWE".to_string(), "k=9/full".to_string())];
    Ok(format!(
        "6 schemes x k in {{5, 9}} x 3 metrics; k=9 full: Baseline {bl}, TDP+TWE {best}"
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (
            "1 SWE closed form vs high-precision oracle",
            Duration::from_secs(1),
            swe_grid,
        ),
        (
            "2 TWE closed form vs high-precision oracle",
            Duration::from_secs(1),
            twe_grid,
        ),
        (
            "3 co-occurrence table vs naive recount",
            Duration::from_secs(1),
            tdp_recount,
        ),
        (
            "4 SGNS gradient vs central differences",
            Duration::from_secs(5),
            gradient_check,
        ),
        (
            "5 trainer separation and determinism",
            Duration::from_secs(30),
            trainer_behavior,
        ),
        (
            "6 ranking properties on random lists",
            Duration::from_secs(5),
            ranking_properties,
        ),
        (
            "7 SWE direction of effect vs oracle",
            Duration::from_secs(5),
            direction_of_effect,
        ),
        (
            "8 pipeline reports every scheme at k=5 and k=9",
            Duration::from_secs(60),
            pipeline_report,
        ),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; over budget")),
            other => other,
        };
        let timing = format!("{:.2}s / {}s", elapsed.as_secs_f64(), budget.as_secs());
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail} ({timing})"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why} ({timing})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
