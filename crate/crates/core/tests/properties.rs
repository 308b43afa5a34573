//! Property tests over the analysis stages: invariants that must hold
//! for any input, checked on generated data.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Days, NaiveDate, TimeZone, Utc, Weekday};
use citetrend_core::arxiv_id::normalize_arxiv_id;
use citetrend_core::correlation::{kendall_tau, spearman_rho};
use citetrend_core::model::{
    AuthorRef, CitationSnapshot, CitationSource, Corpus, DateWindow, PaperRecord, SnapshotSet,
};
use citetrend_core::store::{load_corpus, save_corpus};
use citetrend_core::trends::{builtin_topics, matches_topic, savitzky_golay};
use citetrend_core::zscore::{
    stable_zscores, zscores_for_split, SplitSpec, StdConvention,
};
use proptest::prelude::*;

fn window_2023() -> DateWindow {
    DateWindow::new(
        NaiveDate::from_ymd_opt(2023, 1, 1).unwrap(),
        NaiveDate::from_ymd_opt(2023, 12, 31).unwrap(),
    )
    .unwrap()
}

fn record(index: usize, day_offset: u16, title: &str) -> PaperRecord {
    let date = NaiveDate::from_ymd_opt(2023, 1, 1)
        .unwrap()
        .checked_add_days(Days::new(day_offset as u64))
        .unwrap();
    PaperRecord {
        base_id: format!("2301.{:05}", index + 1),
        title: title.to_owned(),
        authors: vec![AuthorRef::new("Author")],
        abstract_text: "text".to_owned(),
        comment: None,
        primary_category: "cs.CL".to_owned(),
        categories: vec!["cs.CL".to_owned()],
        first_submitted: Utc.from_utc_datetime(&date.and_hms_opt(12, 0, 0).unwrap()),
    }
}

/// Corpus plus snapshot set from (day offset, citation count) pairs.
fn build(papers: &[(u16, u64)]) -> (Corpus, SnapshotSet) {
    let retrieved = Utc.with_ymd_and_hms(2024, 1, 15, 0, 0, 0).unwrap();
    let mut corpus = Corpus::new(
        window_2023(),
        BTreeSet::from(["cs.CL".to_owned()]),
        retrieved,
    )
    .unwrap();
    let mut snapshots = SnapshotSet::new(CitationSource::SemanticScholar, retrieved);
    for (index, (offset, count)) in papers.iter().enumerate() {
        let paper = record(index, *offset, "Paper");
        snapshots
            .insert(CitationSnapshot {
                base_id: paper.base_id.clone(),
                count: *count,
                source: CitationSource::SemanticScholar,
                retrieved_at: retrieved,
                not_found: false,
            })
            .unwrap();
        corpus.insert(paper).unwrap();
    }
    (corpus, snapshots)
}

proptest! {
    #[test]
    fn normalization_strips_decorations_and_is_idempotent(
        number in 1u32..99999,
        month in 1u32..=12,
        year in 20u32..=35,
        version in proptest::option::of(1u32..20),
        prefixed in any::<bool>(),
    ) {
        let base = format!("{year:02}{month:02}.{number:05}");
        let mut raw = base.clone();
        if let Some(v) = version {
            raw.push_str(&format!("v{v}"));
        }
        if prefixed {
            raw = format!("arXiv:{raw}");
        }
        let once = normalize_arxiv_id(&raw).unwrap();
        prop_assert_eq!(&once, &base);
        prop_assert_eq!(normalize_arxiv_id(&once).unwrap(), base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Weeks with spread must have z mean 0 and std 1; z never reorders
    /// citation counts within a week; stable z is exactly mean minus
    /// std of the per-grid scores; scaling and shifting all counts
    /// leaves every z-score unchanged.
    #[test]
    fn zscore_invariants_hold_on_generated_corpora(
        papers in prop::collection::vec((0u16..364, 0u64..5_000), 1..60),
        scale in 1u64..4,
        shift in 0u64..50,
    ) {
        let (corpus, snapshots) = build(&papers);
        let split = SplitSpec::new(Weekday::Mon, corpus.window.start);
        let z = zscores_for_split(&corpus, &snapshots, split, StdConvention::Population).unwrap();

        let mut weeks: BTreeMap<i64, Vec<(u64, f64)>> = BTreeMap::new();
        for record in corpus.records() {
            let week = split.assign_week(record.first_submitted.date_naive());
            let count = snapshots.get(&record.base_id).unwrap().count;
            weeks.entry(week).or_default().push((count, z[&record.base_id]));
        }
        for members in weeks.values() {
            let spread = members.iter().any(|(c, _)| *c != members[0].0);
            if spread {
                let zs: Vec<f64> = members.iter().map(|(_, z)| *z).collect();
                let mean = zs.iter().sum::<f64>() / zs.len() as f64;
                let var = zs.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / zs.len() as f64;
                prop_assert!(mean.abs() < 1e-9, "week z mean {mean}");
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-9, "week z std {}", var.sqrt());
            } else {
                prop_assert!(members.iter().all(|(_, z)| *z == 0.0));
            }
            for (ca, za) in members {
                for (cb, zb) in members {
                    if ca < cb {
                        prop_assert!(za <= zb, "z reordered counts {ca}->{za} vs {cb}->{zb}");
                    }
                }
            }
        }

        let scaled: Vec<(u16, u64)> = papers
            .iter()
            .map(|(d, c)| (*d, scale * c + shift))
            .collect();
        let (corpus_s, snapshots_s) = build(&scaled);
        let z_s = zscores_for_split(&corpus_s, &snapshots_s, split, StdConvention::Population).unwrap();
        for (id, value) in &z {
            prop_assert!((value - z_s[id]).abs() < 1e-9, "affine change moved z of {id}");
        }

        for record in stable_zscores(&corpus, &snapshots, StdConvention::Population).unwrap() {
            prop_assert!((record.stable_z - (record.mean_z - record.std_z)).abs() < 1e-12);
        }
    }
}

fn non_constant_pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0u8..6u8, 0u8..6u8), 3..40)
        .prop_map(|pairs| {
            pairs
                .into_iter()
                .map(|(a, b)| (a as f64, b as f64))
                .collect::<Vec<_>>()
        })
        .prop_filter("needs spread in both vectors", |pairs| {
            pairs.iter().any(|(a, _)| *a != pairs[0].0)
                && pairs.iter().any(|(_, b)| *b != pairs[0].1)
        })
}

proptest! {
    /// Rank correlations only see order, so any strictly increasing
    /// transform of either vector must leave them untouched, and both
    /// are symmetric in their arguments.
    #[test]
    fn rank_correlations_are_order_statistics(pairs in non_constant_pairs()) {
        let x: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
        let y: Vec<f64> = pairs.iter().map(|(_, b)| *b).collect();
        let stretched: Vec<f64> = x.iter().map(|v| v * v * v + 2.0 * v - 7.0).collect();

        let tau = kendall_tau(&x, &y).unwrap();
        prop_assert!((tau - kendall_tau(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!((tau - kendall_tau(&stretched, &y).unwrap()).abs() < 1e-12);
        prop_assert!(tau.abs() <= 1.0 + 1e-12);

        let rho = spearman_rho(&x, &y).unwrap();
        prop_assert!((rho - spearman_rho(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!((rho - spearman_rho(&stretched, &y).unwrap()).abs() < 1e-12);
        prop_assert!(rho.abs() <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The filter is a linear operator: smoothing a*x + b*y equals
    /// a*smooth(x) + b*smooth(y), and adding a constant shifts the
    /// output by that constant.
    #[test]
    fn smoothing_is_linear(
        pairs in prop::collection::vec((-100i32..100, -100i32..100), 8..40),
        a in -3i32..=3,
        b in -3i32..=3,
        c in -50i32..=50,
        window in 2usize..=8,
        order_pick in 0usize..3,
    ) {
        let order = order_pick.min(window - 1);
        let x: Vec<f64> = pairs.iter().map(|(v, _)| *v as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|(_, v)| *v as f64).collect();
        let combined: Vec<f64> = x
            .iter()
            .zip(&y)
            .map(|(xv, yv)| a as f64 * xv + b as f64 * yv)
            .collect();

        let sx = savitzky_golay(&x, window, order).unwrap();
        let sy = savitzky_golay(&y, window, order).unwrap();
        let sc = savitzky_golay(&combined, window, order).unwrap();
        for i in 0..x.len() {
            let expected = a as f64 * sx[i] + b as f64 * sy[i];
            prop_assert!((sc[i] - expected).abs() < 1e-7, "index {i}: {} vs {expected}", sc[i]);
        }

        let shifted: Vec<f64> = x.iter().map(|v| v + c as f64).collect();
        let ss = savitzky_golay(&shifted, window, order).unwrap();
        for i in 0..x.len() {
            prop_assert!((ss[i] - (sx[i] + c as f64)).abs() < 1e-7);
        }
    }
}

proptest! {
    /// Matching ignores case wherever the pattern appears in the title
    /// or abstract, including inside larger words.
    #[test]
    fn topic_matching_is_case_insensitive(
        topic_index in 0usize..5,
        pattern_pick in any::<prop::sample::Index>(),
        flips in prop::collection::vec(any::<bool>(), 24),
        prefix in "[a-z ]{0,8}",
        suffix in "[a-z ]{0,8}",
        field_pick in 0usize..2,
    ) {
        let topics = builtin_topics();
        let rule = &topics[topic_index];
        let pattern = pattern_pick.get(&rule.patterns);
        let mangled: String = pattern
            .chars()
            .zip(flips.iter().cycle())
            .map(|(ch, flip)| if *flip { ch.to_ascii_uppercase() } else { ch })
            .collect();
        let text = format!("{prefix}{mangled}{suffix}");

        let mut paper = record(0, 10, "unrelated words");
        if field_pick == 0 {
            paper.title = text;
        } else {
            paper.abstract_text = text;
        }
        prop_assert!(matches_topic(&paper, rule));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Saving and loading a corpus loses nothing, and saving the loaded
    /// copy reproduces the file byte for byte.
    #[test]
    fn corpus_persistence_round_trips(
        papers in prop::collection::vec(
            (0u16..364, "[ -~]{0,30}", proptest::option::of("[ -~]{1,20}")),
            1..25,
        ),
    ) {
        let mut corpus = Corpus::new(
            window_2023(),
            BTreeSet::from(["cs.CL".to_owned()]),
            Utc.with_ymd_and_hms(2024, 1, 15, 0, 0, 0).unwrap(),
        )
        .unwrap();
        for (index, (offset, title_tail, comment)) in papers.iter().enumerate() {
            let mut paper = record(index, *offset, &format!("T{title_tail}"));
            paper.comment = comment.clone();
            corpus.insert(paper).unwrap();
        }

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        save_corpus(&corpus, &path).unwrap();
        let first_bytes = std::fs::read(&path).unwrap();

        let loaded = load_corpus(&path).unwrap();
        prop_assert_eq!(loaded.len(), corpus.len());
        for original in corpus.records() {
            prop_assert_eq!(loaded.get(&original.base_id).unwrap(), original);
        }

        save_corpus(&loaded, &path).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), first_bytes);
    }
}
