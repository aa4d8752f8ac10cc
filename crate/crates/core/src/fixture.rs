//! Seeded synthetic review corpus with planted themes.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{InputFormat, ReviewRecord};

const THEMES: &[&[&str]] = &[
    &["privacy", "data", "gdpr", "compliance", "personal", "consent", "protection", "sensitive", "regulations", "retention", "anonymized", "storage"],
    &["security", "access", "permissions", "roles", "admin", "encryption", "authentication", "breach", "vulnerability", "sso", "passwords", "logins"],
    &["transparency", "explainability", "explain", "decisions", "understand", "reasoning", "interpretability", "clarity", "sources", "citations", "visible", "traceable"],
    &["fairness", "bias", "biased", "discrimination", "fair", "equitable", "candidates", "hiring", "screening", "diversity", "applicants", "inclusive"],
    &["accountability", "responsibility", "oversight", "governance", "policy", "approval", "human", "control", "audit", "review", "agency", "supervision"],
    &["ethics", "ethical", "trust", "trustworthiness", "trustworthy", "honest", "values", "responsible", "integrity", "principles", "misuse", "harm"],
    &["robustness", "safety", "errors", "stable", "crashes", "bugs", "hallucinations", "accuracy", "failure", "outages", "downtime", "reliability"],
    &["societal", "environmental", "wellbeing", "energy", "sustainability", "impact", "community", "jobs", "society", "carbon", "welfare", "footprint"],
    &["dashboards", "reports", "analytics", "metrics", "visualization", "charts", "insights", "kpis", "trends", "reporting", "widgets", "filters"],
    &["sql", "database", "queries", "tables", "connectors", "etl", "warehouse", "pipelines", "schema", "mysql", "joins", "snowflake"],
    &["project", "tasks", "kanban", "gantt", "deadlines", "assign", "progress", "workflow", "boards", "milestones", "sprints", "backlog"],
    &["kubernetes", "docker", "deployment", "cloud", "infrastructure", "orchestration", "containers", "scaling", "aws", "azure", "clusters", "registry"],
    &["sales", "marketing", "leads", "campaigns", "crm", "prospects", "outreach", "emails", "conversions", "funnel", "hubspot", "salesforce"],
    &["support", "customer", "tickets", "chatbot", "agents", "responses", "helpdesk", "faqs", "resolution", "escalation", "zendesk", "inquiries"],
    &["content", "writing", "articles", "blog", "seo", "copy", "grammar", "tone", "drafts", "headlines", "paraphrasing", "plagiarism"],
    &["code", "copilot", "coding", "developer", "autocomplete", "suggestions", "programming", "github", "functions", "debugging", "refactoring", "snippets"],
    &["pricing", "expensive", "price", "cost", "subscription", "plans", "licensing", "budget", "cheap", "tiers", "billing", "invoices"],
    &["interface", "intuitive", "easy", "learning", "curve", "navigation", "design", "simple", "layout", "clean", "menus", "clicks"],
    &["employees", "hr", "payroll", "recruiting", "benefits", "staff", "workforce", "training", "managers", "leave", "onboarding", "timesheets"],
    &["social", "media", "twitter", "facebook", "posts", "scheduling", "accounts", "engagement", "followers", "instagram", "hashtags", "hootsuite"],
    &["voice", "speech", "transcription", "audio", "meetings", "calls", "recording", "accents", "notes", "summaries", "zoom", "dictation"],
];

const FILLER: &[&str] = &[
    "the", "tool", "really", "great", "we", "use", "it", "for", "our", "team", "very", "helpful",
    "and", "with", "is", "has", "love", "would", "recommend", "good", "works", "well", "some",
    "but", "also", "product", "overall", "platform", "features", "time",
];

/// Every review holds at least this many distinct words, so even a
/// single-review topic has a full keyword list.
pub const MIN_DISTINCT_WORDS: usize = 10;

/// Number of themes planted in generated corpora.
pub fn theme_count() -> usize {
    THEMES.len()
}

/// Generates `records` reviews spread as evenly as possible over `products`
/// products. Each product favours a few themes; each review mixes a primary
/// theme, sometimes a secondary one, and generic filler words.
pub fn generate(records: usize, products: usize, seed: u64) -> Vec<ReviewRecord> {
    assert!(products >= 1, "need at least one product");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let favoured: Vec<Vec<usize>> = (0..products)
        .map(|_| (0..3).map(|_| rng.random_range(0..THEMES.len())).collect())
        .collect();

    let mut out = Vec::with_capacity(records);
    for i in 0..records {
        let product = i % products;
        let primary = if rng.random_bool(0.75) {
            favoured[product][rng.random_range(0..favoured[product].len())]
        } else {
            rng.random_range(0..THEMES.len())
        };
        let secondary = rng.random_bool(0.35).then(|| rng.random_range(0..THEMES.len()));
        let len = rng.random_range(10..=18);
        let mut words: Vec<&str> = Vec::with_capacity(len);
        let mut distinct = std::collections::BTreeSet::new();
        while words.len() < len || distinct.len() < MIN_DISTINCT_WORDS {
            let roll: f64 = rng.random();
            let pool: &[&str] = match secondary {
                Some(s) if roll < 0.2 => THEMES[s],
                _ if roll < 0.75 => THEMES[primary],
                _ => FILLER,
            };
            let w = pool[rng.random_range(0..pool.len())];
            distinct.insert(w);
            words.push(w);
        }
        let mut text = words.join(" ");
        if let Some(first) = text.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        text.push('.');
        out.push(ReviewRecord {
            review_id: String::new(),
            product_id: format!("p{:03}", product + 1),
            text,
        });
    }
    out.shuffle(&mut rng);
    for (i, r) in out.iter_mut().enumerate() {
        r.review_id = format!("r{:06}", i + 1);
    }
    out
}

pub fn write_fixture(path: &Path, records: &[ReviewRecord], format: InputFormat) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        InputFormat::Csv => {
            let mut w = csv::Writer::from_writer(file);
            w.write_record(["review_id", "product_id", "text"])?;
            for r in records {
                w.write_record([&r.review_id, &r.product_id, &r.text])?;
            }
            w.flush()?;
        }
        InputFormat::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut file, r)?;
                file.write_all(b"\n")?;
            }
            file.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn even_product_split_and_unique_ids() {
        let recs = generate(2000, 40, 1);
        assert_eq!(recs.len(), 2000);
        let mut counts = BTreeMap::new();
        for r in &recs {
            *counts.entry(r.product_id.as_str()).or_insert(0) += 1;
        }
        assert_eq!(counts.len(), 40);
        assert!(counts.values().all(|&c| c == 50));
        let ids: std::collections::HashSet<_> = recs.iter().map(|r| &r.review_id).collect();
        assert_eq!(ids.len(), 2000);
    }

    #[test]
    fn same_seed_same_corpus() {
        assert_eq!(generate(50, 5, 9), generate(50, 5, 9));
        assert_ne!(generate(50, 5, 9), generate(50, 5, 10));
    }

    #[test]
    fn reviews_have_enough_distinct_words() {
        for r in generate(300, 10, 3) {
            let words: std::collections::HashSet<&str> =
                r.text.trim_end_matches('.').split(' ').map(|w| w.trim()).collect();
            assert!(words.len() >= MIN_DISTINCT_WORDS, "{}", r.text);
        }
    }
}
