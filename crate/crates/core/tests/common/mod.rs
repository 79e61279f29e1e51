#![allow(dead_code)] // each test target uses its own slice of these fixtures

//! Shared test fixtures: a seeded synthetic discussion corpus with planted
//! concession patterns, and randomized small SVM datasets.

use std::collections::BTreeMap;

use rand::prelude::IndexedRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use concede_core::corpus::{
    extract_marker_instances, Comment, InstanceRecord, Label, Marker, Split,
};
use concede_core::features::FeatureVector;

const TOPICS: [&str; 16] = [
    "taxes", "education", "travel", "housing", "diet", "energy", "privacy", "transit", "health",
    "climate", "wages", "voting", "parks", "music", "sports", "coffee",
];

const REASONS: [&str; 8] = [
    "lower costs",
    "better access",
    "cleaner data",
    "faster results",
    "wider coverage",
    "fewer delays",
    "stronger schools",
    "safer streets",
];

const COUNTERS: [&str; 12] = [
    "the costs run far too high",
    "the plan still fails in practice",
    "the evidence points elsewhere",
    "the rollout keeps stalling",
    "the budget cannot absorb it",
    "the tradeoffs get ignored",
    "the numbers tell another story",
    "the incentives pull backwards",
    "the savings never materialize",
    "the harms outweigh the gains",
    "the timeline looks unrealistic",
    "the funding model collapses",
];

// agreement vocabulary for arg_c instances that carry no curated pattern;
// the classifier has to learn these from n-grams
const AGREEMENT_OPENERS: [&str; 12] = [
    "I concur with the stance on",
    "Granted, the case for",
    "Admittedly, the argument on",
    "That reasoning on",
    "The case made for",
    "I respect the position on",
    "I acknowledge the argument on",
    "The stance taken on",
    "I appreciate the reasoning on",
    "Your framing of",
    "The analysis of",
    "I welcome the argument on",
];

const AGREEMENT_TAILS: [&str; 6] = [
    "is sensible",
    "seems compelling",
    "sounds reasonable",
    "feels persuasive",
    "reads thoughtful",
    "holds up well",
];

// curated-pattern realizations; each must strict-match a line of
// data/curated_patterns.txt after tokenization
const PATTERN_OPENERS: [&str; 8] = [
    "I agree with you about",
    "I fully agree that the plan for",
    "You are right about",
    "I see your point on",
    "You make a good point about",
    "Fair point about",
    "I would agree with you on",
    "You're right about",
];

const OBJECTS: [&str; 10] = [
    "the train", "the weather", "the printer", "the garden", "the meeting", "the recipe",
    "the report", "the road", "the engine", "the ferry",
];

const STATES: [&str; 10] = [
    "ran late", "stayed cold", "kept jamming", "needed water", "ran long", "turned out bland",
    "came in early", "stayed closed", "kept stalling", "left on time",
];

const NOISE: [&str; 14] = [
    "frankly", "honestly", "overall", "in short", "to be clear", "for what it's worth",
    "at this stage", "in the end", "by most accounts", "on balance", "as noted", "in context",
    "at present", "all told",
];

pub struct SynthParams {
    pub n_threads: usize,
    pub replies_per_thread: usize,
    /// Fraction of replies that are argumentative concessions.
    pub argc_rate: f64,
    /// Fraction of arg_c replies realized with a curated pattern phrase.
    pub pattern_rate: f64,
    /// Fraction of `other` replies that are negated near-misses
    /// ("I do not agree ...").
    pub hard_negative_rate: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_threads: 250,
            replies_per_thread: 8,
            argc_rate: 0.3,
            pattern_rate: 0.55,
            hard_negative_rate: 0.07,
            seed: 4242,
        }
    }
}

pub struct SynthCorpus {
    /// Comments per split; every thread (original post + replies) lands in
    /// exactly one split.
    pub comments: BTreeMap<Split, Vec<Comment>>,
    /// Labeled instance records per split (gold on train/dev/test, crowd
    /// votes on dev/test, nothing on unlabeled).
    pub records: BTreeMap<Split, Vec<InstanceRecord>>,
}

fn split_for_thread(t: usize, n_threads: usize) -> Split {
    let frac = t as f64 / n_threads as f64;
    if frac < 0.04 {
        Split::Train
    } else if frac < 0.21 {
        Split::Dev
    } else if frac < 0.38 {
        Split::Test
    } else {
        Split::Unlabeled
    }
}

fn maybe_noise(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.3) {
        format!("{}, ", NOISE.choose(rng).unwrap())
    } else {
        String::new()
    }
}

/// Build one reply text plus its gold label. Every reply contains exactly
/// one target-marker token.
fn reply_text(rng: &mut ChaCha8Rng, topic: &str, is_argc: bool, params: &SynthParams) -> (String, Label) {
    let counter = COUNTERS.choose(rng).unwrap();
    let text = if is_argc {
        let with_pattern = rng.random_bool(params.pattern_rate);
        let opener = if with_pattern {
            format!("{} {topic}", PATTERN_OPENERS.choose(rng).unwrap())
        } else {
            format!(
                "{} {topic} {}",
                AGREEMENT_OPENERS.choose(rng).unwrap(),
                AGREEMENT_TAILS.choose(rng).unwrap()
            )
        };
        match rng.random_range(0..10) {
            // sentence-initial marker, conceding move in the previous sentence
            0 | 1 => format!("{opener}. However, {counter}."),
            2 => format!("{opener}. But {counter}."),
            // "while" with the conceding move in its scope
            3 => format!("While {}, {counter}.", lowercase_first(&opener)),
            4 => format!("{}{opener}, though {counter}.", maybe_noise(rng)),
            _ => format!("{}{opener}, but {counter}.", maybe_noise(rng)),
        }
    } else if rng.random_bool(params.hard_negative_rate) {
        // negated near-miss: agreement words under explicit negation
        match rng.random_range(0..3) {
            0 => format!("I do not agree at all with the stance on {topic}, but {counter}."),
            1 => format!("I don't think the case for {topic} holds up, but {counter}."),
            _ => format!("You are not right about {topic}, and never will be, but {counter}."),
        }
    } else {
        let o1 = OBJECTS.choose(rng).unwrap();
        let s1 = STATES.choose(rng).unwrap();
        let o2 = OBJECTS.choose(rng).unwrap();
        let s2 = STATES.choose(rng).unwrap();
        match rng.random_range(0..10) {
            0 | 1 => format!("While {o1} {s1}, {o2} {s2}."),
            2 => format!("{} {o1} {s1}. However, {o2} {s2}.", capitalize_first(NOISE.choose(rng).unwrap())),
            3 => format!("{} {o1} {s1}, though {o2} {s2}.", "Sure,"),
            4 => format!("Of course {o1} {s1}, but {o2} {s2}."),
            _ => format!("{}{} {s1}, but {o2} {s2}.", maybe_noise(rng), capitalize_first(o1)),
        }
    };
    let label = if is_argc { Label::ArgC } else { Label::Other };
    let trailing = if rng.random_bool(0.35) {
        format!(" That tradeoff matters for {topic}.")
    } else {
        String::new()
    };
    (format!("{text}{trailing}"), label)
}

fn lowercase_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn crowd_votes(rng: &mut ChaCha8Rng, gold: Label) -> Vec<Label> {
    let dissent = if rng.random_bool(0.3) { 1 } else { 0 };
    let flip = |l: Label| match l {
        Label::ArgC => Label::Other,
        Label::Other => Label::ArgC,
    };
    let mut votes = vec![gold; 5 - dissent];
    votes.extend(std::iter::repeat_n(flip(gold), dissent));
    votes
}

pub fn generate(params: &SynthParams) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut comments: BTreeMap<Split, Vec<Comment>> = BTreeMap::new();
    let mut gold_by_comment: BTreeMap<String, Label> = BTreeMap::new();

    for t in 0..params.n_threads {
        let split = split_for_thread(t, params.n_threads);
        let thread_id = format!("t{t:04}");
        let topic = TOPICS.choose(&mut rng).unwrap();
        let topic2 = TOPICS.choose(&mut rng).unwrap();
        let reason = REASONS.choose(&mut rng).unwrap();
        let op = Comment {
            id: format!("{thread_id}-op"),
            thread_id: thread_id.clone(),
            parent_id: None,
            author_id: format!("author{:03}", rng.random_range(0..500)),
            text: format!(
                "The policy on {topic} helps everyone. It rests on {reason}. Many residents also value {topic2}."
            ),
            is_original_post: true,
            delta_awarded: false,
        };
        comments.entry(split).or_default().push(op);

        for r in 0..params.replies_per_thread {
            let is_argc = rng.random_bool(params.argc_rate);
            let (text, label) = reply_text(&mut rng, topic, is_argc, params);
            let id = format!("{thread_id}-r{r}");
            gold_by_comment.insert(id.clone(), label);
            comments.entry(split).or_default().push(Comment {
                id,
                thread_id: thread_id.clone(),
                parent_id: Some(format!("{thread_id}-op")),
                author_id: format!("author{:03}", rng.random_range(0..500)),
                text,
                is_original_post: false,
                delta_awarded: rng.random_bool(0.5),
            });
        }
    }

    let mut records: BTreeMap<Split, Vec<InstanceRecord>> = BTreeMap::new();
    for (&split, split_comments) in &comments {
        let instances = extract_marker_instances(split_comments, &Marker::ALL, split);
        let recs: Vec<InstanceRecord> = instances
            .into_iter()
            .map(|instance| {
                let gold = gold_by_comment.get(&instance.comment_id).copied();
                let (gold_label, crowd_labels) = match split {
                    Split::Unlabeled => (None, None),
                    Split::Train => (gold, None),
                    Split::Dev | Split::Test => {
                        let votes = gold.map(|g| crowd_votes(&mut rng, g));
                        (gold, votes)
                    }
                };
                InstanceRecord {
                    instance,
                    gold_label,
                    crowd_labels,
                }
            })
            .collect();
        records.insert(split, recs);
    }

    SynthCorpus { comments, records }
}

/// Every reply must contribute exactly one marker instance; the geometry of
/// the corpus depends on it.
pub fn assert_one_instance_per_reply(corpus: &SynthCorpus) {
    for (split, records) in &corpus.records {
        let replies = corpus.comments[split]
            .iter()
            .filter(|c| !c.is_original_post)
            .count();
        assert_eq!(
            records.len(),
            replies,
            "{split}: each synthetic reply must yield exactly one instance"
        );
    }
}

// ----- randomized small SVM datasets for the solver oracle -----

pub struct TinyDataset {
    pub points: Vec<(FeatureVector, Label)>,
    pub c: f64,
    pub gamma: f64,
    pub inverse_frequency: bool,
}

pub fn random_tiny_dataset(rng: &mut ChaCha8Rng) -> TinyDataset {
    let c = *[0.5, 1.0, 10.0].choose(rng).unwrap();
    let gamma = *[0.1, 1.0].choose(rng).unwrap();
    let inverse_frequency = rng.random_bool(0.5);
    let dims = rng.random_range(2..=8usize);

    loop {
        let n = rng.random_range(2..=6usize);
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let mut entries = BTreeMap::new();
            for d in 0..dims {
                if rng.random_bool(0.7) {
                    let v: f64 = rng.random_range(-2.0..2.0);
                    entries.insert(d as u32, v);
                }
            }
            let label = if i < n / 2 { Label::Other } else { Label::ArgC };
            points.push((FeatureVector::new(entries, "oracle-v"), label));
        }
        // both classes, and no near-duplicate points (degenerate duals)
        let has_both = points.iter().any(|(_, l)| *l == Label::ArgC)
            && points.iter().any(|(_, l)| *l == Label::Other);
        let mut min_dist = f64::INFINITY;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                min_dist = min_dist.min(points[i].0.squared_distance(&points[j].0));
            }
        }
        if has_both && min_dist > 0.15 {
            return TinyDataset {
                points,
                c,
                gamma,
                inverse_frequency,
            };
        }
    }
}
