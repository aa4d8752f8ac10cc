//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero when any fails.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::{Duration, Instant};

use conceptlens::concept::{
    embed_seed, rank_topics, select_by_relative_drop, select_top_n, CutoffResult, RankedTopic, RankedTopicList,
    SeedAggregation, SeedConcept,
};
use conceptlens::config::{CutoffKind, PipelineConfig};
use conceptlens::corpus::{tokenize, PreprocessOptions};
use conceptlens::embed::{EmbeddingVector, HashEmbedder};
use conceptlens::matrix::Matrix;
use conceptlens::metacluster::{cluster_topics, kmeans_with_traces, silhouette, MetaClusterParams};
use conceptlens::pipeline::{read_cluster_artifact, read_selection, Pipeline, CLUSTER_TABLE, MANIFEST, TOPICS};
use conceptlens::report::{read_topics_jsonl, topics_from_records};
use conceptlens::topicmodel::{ctfidf_weights, Topic};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<f64, String> {
    let secs = started.elapsed().as_secs_f64();
    ensure(started.elapsed() < limit, || format!("took {secs:.2} s, limit {} s", limit.as_secs()))?;
    Ok(secs)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// 1 -------------------------------------------------------------------------

/// Scans every admissible cut position and keeps the first maximal drop.
fn brute_force_cut(scores: &[f64], min_include: usize) -> (usize, f64) {
    let mut best: Option<(usize, f64)> = None;
    for i in min_include..scores.len() {
        let (s, next) = (scores[i - 1], scores[i]);
        let d = if s > 0.0 { (s - next) / s } else { s - next };
        if best.is_none_or(|(_, b)| d > b) {
            best = Some((i, d));
        }
    }
    best.unwrap()
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let len = rng.random_range(11..=200);
        let quantized = case % 4 == 0;
        let entries: Vec<RankedTopic> = (0..len)
            .map(|i| {
                let mut score: f64 = rng.random_range(-1.0..1.0);
                if quantized {
                    score = (score * 20.0).round() / 20.0;
                }
                RankedTopic { topic_id: i as u32, score }
            })
            .collect();
        let ranking = RankedTopicList::from_entries(entries);
        let scores = ranking.scores();
        ensure(scores.windows(2).all(|w| w[0] >= w[1]), || format!("case {case}: ranking not sorted"))?;
        let got = select_by_relative_drop(&ranking, 10).map_err(|e| format!("case {case}: {e}"))?;
        let (cut, drop) = brute_force_cut(&scores, 10);
        ensure(got.cut_index == cut, || format!("case {case}: cut {} vs oracle {cut}", got.cut_index))?;
        ensure(got.drop_ratio == Some(drop), || format!("case {case}: drop {:?} vs {drop}", got.drop_ratio))?;
        ensure(got.cut_index >= 10, || format!("case {case}: cut {} below 10", got.cut_index))?;
        ensure(got.selected_topic_ids == ranking.topic_ids()[..cut], || format!("case {case}: selection"))?;
    }
    let secs = within(Duration::from_secs(5), started)?;
    Ok(format!("1000 score vectors match the brute-force scan, all cuts >= 10 ({secs:.2} s)"))
}

// 2 -------------------------------------------------------------------------

fn oracle_silhouette(points: &[Vec<f64>], labels: &[usize]) -> Vec<f64> {
    let n = points.len();
    let dist = |i: usize, j: usize| -> f64 {
        points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    };
    let k = labels.iter().max().unwrap() + 1;
    (0..n)
        .map(|i| {
            let own: Vec<usize> = (0..n).filter(|&j| labels[j] == labels[i] && j != i).collect();
            if own.is_empty() {
                return 0.0;
            }
            let a = own.iter().map(|&j| dist(i, j)).sum::<f64>() / own.len() as f64;
            let b = (0..k)
                .filter(|&c| c != labels[i])
                .map(|c| {
                    let members: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
                    members.iter().map(|&j| dist(i, j)).sum::<f64>() / members.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            if a.max(b) == 0.0 {
                0.0
            } else {
                (b - a) / a.max(b)
            }
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut singletons = 0;
    for case in 0..200 {
        let n = rng.random_range(3..=60);
        let k = rng.random_range(2..=n.min(8));
        let d = rng.random_range(1..=5);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        // every label used at least once; every fifth case forces a singleton
        let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        if case % 5 == 0 {
            for l in labels.iter_mut().skip(k) {
                if *l == 0 {
                    *l = 1;
                }
            }
        }
        let (mean, per) = silhouette(&Matrix::from_rows(&points), &labels).map_err(|e| format!("case {case}: {e}"))?;
        let expected = oracle_silhouette(&points, &labels);
        for (i, (got, want)) in per.iter().zip(&expected).enumerate() {
            ensure((got - want).abs() <= 1e-12, || format!("case {case} point {i}: {got} vs {want}"))?;
            ensure((-1.0..=1.0).contains(got), || format!("case {case} point {i}: {got} out of range"))?;
        }
        let want_mean = expected.iter().sum::<f64>() / n as f64;
        ensure((mean - want_mean).abs() <= 1e-12, || format!("case {case}: mean {mean} vs {want_mean}"))?;
        let mut sizes = vec![0; k];
        labels.iter().for_each(|&l| sizes[l] += 1);
        for (i, &l) in labels.iter().enumerate() {
            if sizes[l] == 1 {
                singletons += 1;
                ensure(per[i] == 0.0, || format!("case {case}: singleton point {i} scored {}", per[i]))?;
            }
        }
    }
    ensure(singletons >= 40, || format!("only {singletons} singleton points exercised"))?;
    let secs = within(Duration::from_secs(10), started)?;
    Ok(format!("200 instances agree to 1e-12, {singletons} singleton points score 0 ({secs:.2} s)"))
}

// 3 -------------------------------------------------------------------------

/// Plain Lloyd from a k-means++ start, written independently of the library.
fn oracle_lloyd(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> f64 {
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let n = points.len();
    let mut centres = vec![points[rng.random_range(0..n)].clone()];
    while centres.len() < k {
        let weights: Vec<f64> = points
            .iter()
            .map(|p| centres.iter().map(|c| sq(p, c)).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, w) in weights.iter().enumerate() {
            if target < *w {
                pick = i;
                break;
            }
            target -= w;
        }
        centres.push(points[pick].clone());
    }
    let mut labels = vec![usize::MAX; n];
    loop {
        let next: Vec<usize> = points
            .iter()
            .map(|p| {
                (0..k)
                    .min_by(|&a, &b| sq(p, &centres[a]).total_cmp(&sq(p, &centres[b])))
                    .unwrap()
            })
            .collect();
        if next == labels {
            break;
        }
        labels = next;
        for (c, centre) in centres.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            if members.is_empty() {
                continue;
            }
            for (j, v) in centre.iter_mut().enumerate() {
                *v = members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64;
            }
        }
    }
    points.iter().zip(&labels).map(|(p, &l)| sq(p, &centres[l])).sum()
}

fn planted(rng: &mut ChaCha8Rng, k: usize, d: usize, per: std::ops::RangeInclusive<usize>, spread: f64, noise: f64) -> Vec<Vec<f64>> {
    let mut centres: Vec<Vec<f64>> = Vec::new();
    while centres.len() < k {
        let c: Vec<f64> = (0..d).map(|_| rng.random_range(-spread..spread)).collect();
        let far = centres
            .iter()
            .all(|o| o.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() > spread * 0.6);
        if far {
            centres.push(c);
        }
    }
    let mut points = Vec::new();
    for c in &centres {
        for _ in 0..rng.random_range(per.clone()) {
            points.push(c.iter().map(|x| x + noise * gaussian(rng)).collect());
        }
    }
    points
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut matched = 0;
    let mut traces_checked = 0;
    for case in 0..100u64 {
        let k = rng.random_range(3..=6);
        let d = rng.random_range(2..=5);
        let points = planted(&mut rng, k, d, 15..=30, 10.0, 1.0);
        let (best, traces) =
            kmeans_with_traces(&Matrix::from_rows(&points), k, case, 10).map_err(|e| format!("case {case}: {e}"))?;
        for (r, trace) in traces.iter().enumerate() {
            for w in trace.windows(2) {
                ensure(w[1] <= w[0] * (1.0 + 1e-12), || format!("case {case} restart {r}: WCSS rose {trace:?}"))?;
            }
            traces_checked += 1;
        }
        let mut oracle_rng = ChaCha8Rng::seed_from_u64(10_000 + case);
        let oracle = (0..100)
            .map(|_| oracle_lloyd(&points, k, &mut oracle_rng))
            .fold(f64::INFINITY, f64::min);
        if (best.wcss - oracle).abs() <= 1e-9 {
            matched += 1;
        }
    }
    ensure(matched >= 95, || format!("best-of-10 matched the oracle in only {matched}/100 cases"))?;
    let secs = within(Duration::from_secs(60), started)?;
    Ok(format!(
        "best-of-10 within 1e-9 of the 100-restart oracle in {matched}/100 cases, {traces_checked} runs monotone ({secs:.2} s)"
    ))
}

// 4 -------------------------------------------------------------------------

fn check_table(name: &str, docs: &[&str], labels: &[usize], classes: usize, table: &[(usize, &str, f64)]) -> Result<(), String> {
    let tokens: Vec<_> = docs.iter().map(|d| tokenize(d, &PreprocessOptions::default())).collect();
    let weights = ctfidf_weights(&tokens, labels, classes).map_err(|e| format!("{name}: {e}"))?;
    let mut expected: Vec<HashMap<String, f64>> = vec![HashMap::new(); classes];
    for &(c, term, w) in table {
        expected[c].insert(term.to_string(), w);
    }
    for c in 0..classes {
        let mut got: Vec<_> = weights[c].keys().collect();
        let mut want: Vec<_> = expected[c].keys().collect();
        got.sort();
        want.sort();
        ensure(got == want, || format!("{name} class {c}: terms {got:?} vs {want:?}"))?;
        for (term, w) in &expected[c] {
            let g = weights[c][term];
            ensure((g - w).abs() <= 1e-12, || format!("{name} class {c} {term}: {g} vs {w}"))?;
        }
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    let ln = f64::ln;
    // class sizes 5 and 5 tokens: A = 10 / 2 = 5
    // f: apple 2, banana 2, cherry 3, date 2, egg 1
    check_table(
        "fruit corpus",
        &["apple banana apple", "banana cherry", "cherry cherry date", "date egg"],
        &[0, 0, 1, 1],
        2,
        &[
            (0, "apple", 2.0 * ln(1.0 + 5.0 / 2.0)),
            (0, "banana", 2.0 * ln(1.0 + 5.0 / 2.0)),
            (0, "cherry", 1.0 * ln(1.0 + 5.0 / 3.0)),
            (1, "cherry", 2.0 * ln(1.0 + 5.0 / 3.0)),
            (1, "date", 2.0 * ln(1.0 + 5.0 / 2.0)),
            (1, "egg", 1.0 * ln(1.0 + 5.0 / 1.0)),
        ],
    )?;
    // class sizes 5, 2 and 5 tokens: A = 12 / 3 = 4
    // f: governance 4, policy 1, audit 1, privacy 3, consent 2, risk 1
    check_table(
        "governance corpus",
        &[
            "governance policy",
            "privacy governance",
            "governance audit governance",
            "privacy privacy consent",
            "consent risk",
        ],
        &[0, 1, 0, 2, 2],
        3,
        &[
            (0, "governance", 3.0 * ln(1.0 + 4.0 / 4.0)),
            (0, "policy", 1.0 * ln(1.0 + 4.0 / 1.0)),
            (0, "audit", 1.0 * ln(1.0 + 4.0 / 1.0)),
            (1, "privacy", 1.0 * ln(1.0 + 4.0 / 3.0)),
            (1, "governance", 1.0 * ln(1.0 + 4.0 / 4.0)),
            (2, "privacy", 2.0 * ln(1.0 + 4.0 / 3.0)),
            (2, "consent", 2.0 * ln(1.0 + 4.0 / 2.0)),
            (2, "risk", 1.0 * ln(1.0 + 4.0 / 1.0)),
        ],
    )?;
    Ok("both hand-computed tables reproduced to 1e-12".into())
}

// 5 -------------------------------------------------------------------------

fn cutoffs(ranking: &RankedTopicList) -> Result<(CutoffResult, CutoffResult), String> {
    let drop = select_by_relative_drop(ranking, 10).map_err(|e| e.to_string())?;
    Ok((drop, select_top_n(ranking, 50)))
}

fn same_cutoff(a: &CutoffResult, b: &CutoffResult) -> bool {
    let ratio_close = match (a.drop_ratio, b.drop_ratio) {
        (Some(x), Some(y)) => (x - y).abs() <= 1e-12 * x.abs().max(1.0),
        (None, None) => true,
        _ => false,
    };
    a.method == b.method
        && a.cut_index == b.cut_index
        && a.drop_rule == b.drop_rule
        && a.selected_topic_ids == b.selected_topic_ids
        && ratio_close
}

fn scaled_topics(topics: &[Topic], c: f64) -> Vec<Topic> {
    topics
        .iter()
        .map(|t| Topic {
            embedding: t.embedding.as_ref().map(|e| e.scaled(c)),
            ..t.clone()
        })
        .collect()
}

fn check_scaling(label: &str, topics: &[Topic], seed: &EmbeddingVector, factors: &[f64]) -> Result<usize, String> {
    let base = rank_topics(topics, seed).map_err(|e| e.to_string())?;
    let (base_drop, base_top) = cutoffs(&base)?;
    for &c in factors {
        let ranking = rank_topics(&scaled_topics(topics, c), &seed.scaled(c)).map_err(|e| e.to_string())?;
        ensure(ranking.topic_ids() == base.topic_ids(), || format!("{label}: order changed at factor {c}"))?;
        let (drop, top) = cutoffs(&ranking)?;
        ensure(same_cutoff(&drop, &base_drop), || format!("{label}: drop cutoff changed at factor {c}"))?;
        ensure(same_cutoff(&top, &base_top), || format!("{label}: top-n cutoff changed at factor {c}"))?;
    }
    Ok(factors.len())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut factors = vec![1e-6, 1e-3, 0.37, 1.0, 2.5, 1e3, 1e6, 7.3e8];
    factors.extend((0..40).map(|_| 10f64.powf(rng.random_range(-6.0..6.0))));

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    Pipeline::new(common::fixture_config(dir.path()))
        .and_then(|p| p.run_stages(&[conceptlens::pipeline::Stage::Ingest, conceptlens::pipeline::Stage::Embed, conceptlens::pipeline::Stage::Topics]))
        .map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(dir.path().join(TOPICS)).map_err(|e| e.to_string())?;
    let topics = topics_from_records(read_topics_jsonl(&text).map_err(|e| e.to_string())?, &[]).map_err(|e| e.to_string())?;
    let embedder = HashEmbedder::new(64, PreprocessOptions::default()).map_err(|e| e.to_string())?;
    let mut checks = 0;
    for concept in SeedConcept::presets() {
        for aggregation in [SeedAggregation::PerTerm, SeedAggregation::Joined] {
            let seed = embed_seed(&concept, &embedder, aggregation).map_err(|e| e.to_string())?;
            checks += check_scaling(concept.name(), &topics, &seed, &factors)?;
        }
    }

    for trial in 0..100 {
        let t = rng.random_range(11..150);
        let topics: Vec<Topic> = (0..t)
            .map(|i| Topic {
                topic_id: i as u32,
                doc_ids: vec![],
                keywords: vec![],
                embedding: Some(EmbeddingVector::new((0..64).map(|_| gaussian(&mut rng)).collect()).unwrap()),
            })
            .collect();
        let seed = EmbeddingVector::new((0..64).map(|_| gaussian(&mut rng)).collect()).unwrap();
        checks += check_scaling(&format!("random trial {trial}"), &topics, &seed, &factors[..12])?;
    }
    Ok(format!("topic order and both cutoffs unchanged over {checks} rescalings"))
}

// 6 -------------------------------------------------------------------------

/// Splits the cluster table into per-seed sections keyed by heading.
fn table_sections(table: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for chunk in table.split("\n## ").skip(1) {
        let (title, body) = chunk.split_once('\n').unwrap_or((chunk, ""));
        out.insert(title.trim().to_string(), body.to_string());
    }
    out
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = common::fixture_config(dir.path());
    config.clustering.force_k = Some(7);
    let pipeline = Pipeline::new(config).map_err(|e| e.to_string())?;
    pipeline.run().map_err(|e| e.to_string())?;
    ensure(pipeline.concepts().len() == 2, || "both presets should run by default".into())?;
    let table = std::fs::read_to_string(dir.path().join(CLUSTER_TABLE)).map_err(|e| e.to_string())?;
    let sections = table_sections(&table);
    let mut summary = Vec::new();
    for concept in pipeline.concepts() {
        let artifact = read_cluster_artifact(dir.path(), concept).map_err(|e| e.to_string())?;
        let sol = &artifact.clustering.solution;
        let used: std::collections::BTreeSet<_> = sol.assignments.iter().collect();
        ensure(sol.k == 7 && used.len() == 7, || format!("{}: k = {}, {} clusters used", concept.name(), sol.k, used.len()))?;
        let selection = read_selection(dir.path(), concept).map_err(|e| e.to_string())?;
        let body = sections.get(concept.name()).ok_or(format!("no table section for {}", concept.name()))?;
        let clusters = body.lines().filter(|l| l.starts_with("### Cluster C")).count();
        ensure(clusters == 7, || format!("{}: {clusters} cluster blocks", concept.name()))?;
        let lines: Vec<&str> = body.lines().filter(|l| l.starts_with("- C")).collect();
        ensure(lines.len() == selection.selected_topic_ids.len(), || {
            format!("{}: {} table rows for {} selected topics", concept.name(), lines.len(), selection.selected_topic_ids.len())
        })?;
        for line in &lines {
            let keywords = line.split_once("]: ").map(|(_, k)| k.split(", ").count()).unwrap_or(0);
            ensure(keywords == 10, || format!("{}: {keywords} keywords in {line:?}", concept.name()))?;
        }
        summary.push(format!("{} {} topics", concept.name(), lines.len()));
    }

    let topn_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut config = common::fixture_config(topn_dir.path());
    config.clustering.force_k = Some(7);
    config.selection.cutoff = CutoffKind::Topn;
    config.selection.top_n = 50;
    let pipeline = Pipeline::new(config).map_err(|e| e.to_string())?;
    pipeline.run().map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(topn_dir.path().join(TOPICS)).map_err(|e| e.to_string())?;
    let total = text.lines().count();
    for concept in pipeline.concepts() {
        let selection = read_selection(topn_dir.path(), concept).map_err(|e| e.to_string())?;
        ensure(selection.selected_topic_ids.len() == total.min(50), || {
            format!("{}: top-n selected {} of {total}", concept.name(), selection.selected_topic_ids.len())
        })?;
    }
    Ok(format!(
        "k = 7 for both seeds, 10 keywords per row ({}); top-n 50 selects min(50, {total})",
        summary.join(", ")
    ))
}

// 7 -------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    let mut hits = 0;
    let mut misses = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + seed);
        let points = planted(&mut rng, 3, 64, 8..=12, 1.0, 0.15);
        let topics: Vec<Topic> = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| Topic {
                topic_id: i as u32,
                doc_ids: vec![],
                keywords: vec![],
                embedding: Some(EmbeddingVector::new(p).unwrap()),
            })
            .collect();
        let params = MetaClusterParams {
            k_min: 2,
            k_max: 6,
            ..Default::default()
        };
        let (report, _) = cluster_topics(&topics, &params, seed).map_err(|e| e.to_string())?;
        if report.chosen_k == 3 {
            hits += 1;
        } else {
            misses.push((seed, report.chosen_k));
        }
    }
    ensure(hits >= 95, || format!("k = 3 in only {hits}/100 seeds; misses {misses:?}"))?;
    Ok(format!("k = 3 recovered in {hits}/100 seeds"))
}

// 8 -------------------------------------------------------------------------

fn run_into(dir: &Path, seed: u64) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut config: PipelineConfig = common::fixture_config(dir);
    config.seed = seed;
    Pipeline::new(config).and_then(|p| p.run()).map_err(|e| e.to_string())?;
    Ok(common::snapshot(dir))
}

fn criterion_8() -> Outcome {
    let (a, b, c) = (
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    );
    let first = run_into(a.path(), 42)?;
    let second = run_into(b.path(), 42)?;
    ensure(first.contains_key(MANIFEST), || "no manifest written".into())?;
    ensure(first.keys().eq(second.keys()), || "artifact sets differ".into())?;
    for (name, bytes) in &first {
        ensure(bytes == &second[name], || format!("{name} differs between identical runs"))?;
    }
    let other = run_into(c.path(), 43)?;
    ensure(other[TOPICS] != first[TOPICS], || "changing the seed left topics.jsonl unchanged".into())?;
    let hash = |m: &[u8]| -> Result<String, String> {
        let v: serde_json::Value = serde_json::from_slice(m).map_err(|e| e.to_string())?;
        Ok(v["artifacts"][TOPICS].as_str().unwrap_or_default().to_string())
    };
    ensure(hash(&first[MANIFEST])? != hash(&other[MANIFEST])?, || "manifest topics hash unchanged".into())?;
    Ok(format!("{} artifacts and manifest identical across runs; seed change alters the topics hash", first.len() - 1))
}

// 9 -------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = common::fixture_config(dir.path());
    let (docs, dim, topics) = (2000, config.embedding.dim, config.topics.doc_topics);
    ensure(dim == 64 && topics == 100, || "defaults changed".into())?;
    let started = Instant::now();
    let pipeline = Pipeline::new(config).map_err(|e| e.to_string())?;
    let summary = pipeline.run().map_err(|e| e.to_string())?;
    let secs = within(Duration::from_secs(60), started)?;
    ensure(summary.manifest.is_some(), || "no manifest".into())?;
    ensure(pipeline.concepts().len() == 2, || "expected both presets".into())?;
    Ok(format!("{docs} documents, dim {dim}, {topics} topics, both presets in {secs:.2} s"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("drop-off selector vs brute-force oracle", criterion_1),
        ("silhouette exactness", criterion_2),
        ("k-means quality and monotonicity", criterion_3),
        ("c-TF-IDF hand tables", criterion_4),
        ("ranking scale invariance", criterion_5),
        ("forced k = 7 structure and top-n 50", criterion_6),
        ("planted k = 3 recovery", criterion_7),
        ("determinism", criterion_8),
        ("end-to-end runtime", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
