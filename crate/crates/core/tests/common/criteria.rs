//! The ten acceptance checks, one function per criterion. Each panics with
//! a diagnostic on failure. Area-focused test files call individual
//! functions; the acceptance suite runs all ten and reports a line per
//! criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use evibench::corpus::{
    apply_splits, assign_patient_splits, build_instances, ingest_cases, CaseRecord, ClaimState,
    Split, DEFAULT_SPLIT_RATIOS,
};
use evibench::evaluation::bootstrap::{
    bootstrap_evaluate, paired_bootstrap_diff, replicate_indices, ALL_METRICS,
};
use evibench::evaluation::policy::{
    apply_decision_policy, CalibrationTable, DecisionAction, DecisionPolicy, PolicyCandidate,
    PolicyKind, PolicyOutcome,
};
use evibench::evaluation::{
    brier, confusion_at, pr_auc, roc_auc, select_threshold_youden, threshold_candidates,
    thresholded_metrics,
};
use evibench::evidence::{assign_pools, build_evidence_units};
use evibench::fixture::{
    worked_example_instance, worked_example_policy, worked_example_pools,
};
use evibench::interventions::{apply_intervention, make_swap_plan, InterventionSpec};
use evibench::pipeline::run_pipeline;
use evibench::registry::ConceptRegistry;
use evibench::scoring::{mask_channels, S1, S3};
use evibench::supervision::{
    compute_diagnostics, construct_supervision, expected_row_count, Category, SamplingPolicy,
};
use evibench::synth::{generate_synthetic_corpus, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

const TOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

/// Criterion 1: the worked-example fixture constructs exactly four rows,
/// one per category, with the stated claim polarity and labels, in under a
/// second.
pub fn criterion_01_worked_example() {
    let start = Instant::now();
    let registry = ConceptRegistry::bundled();
    let instance = worked_example_instance(&registry).unwrap();
    let pools = worked_example_pools(&registry).unwrap();
    let policy = worked_example_policy();
    let (rows, log) =
        construct_supervision(&[instance], &pools, &policy, &registry).unwrap();

    assert_eq!(rows.len(), 4, "worked example must yield exactly four rows");
    assert!(log.skips.is_empty(), "worked example must not skip any draw");

    let mut shape: Vec<(Category, ClaimState, u8)> =
        rows.iter().map(|r| (r.category, r.claim.state, r.label)).collect();
    shape.sort();
    let mut expected = vec![
        (Category::C, ClaimState::Absent, 1),
        (Category::D, ClaimState::Present, 0),
        (Category::A, ClaimState::Present, 0),
        (Category::B, ClaimState::Absent, 0),
    ];
    expected.sort();
    assert_eq!(shape, expected, "category, claim polarity, label triples");

    for row in &rows {
        assert_eq!(row.evidence_ids.len(), 1, "fixture rows carry one unit each");
    }
    assert!(start.elapsed().as_secs() < 1, "worked example must finish inside 1 second");
}

/// Criterion 2: on 100 seeded corpora, the positive fraction is exactly
/// |C|/N, the wrong-state share of negatives is exactly |D|/(|A|+|B|+|D|),
/// paired negatives balance, and every case-concept pair's row count
/// decomposes into its category draws.
pub fn criterion_02_construction_identities() {
    let registry = ConceptRegistry::bundled();
    for seed in 0..100u64 {
        let synth = generate_synthetic_corpus(
            &SynthConfig { seed, n_cases: 30, ..SynthConfig::default() },
            &registry,
        )
        .unwrap();
        let (cases, _) = ingest_cases(&synth.cases).unwrap();
        let (units, _) = build_evidence_units(&synth.articles).unwrap();
        let assignments = assign_pools(&units, &registry, seed);
        let partition = build_instances(&cases, &registry).unwrap();
        let policy = SamplingPolicy { seed, ..SamplingPolicy::default() };
        let (rows, _) =
            construct_supervision(&partition.benchmark, &assignments, &policy, &registry).unwrap();
        assert!(!rows.is_empty(), "seed {seed}: no rows constructed");

        let count = |cat: Category| rows.iter().filter(|r| r.category == cat).count();
        let (n_a, n_b, n_c, n_d) =
            (count(Category::A), count(Category::B), count(Category::C), count(Category::D));
        let total = rows.len();
        assert_eq!(n_a + n_b + n_c + n_d, total, "seed {seed}: categories must partition");
        assert_eq!(n_a, n_b, "seed {seed}: paired negatives must balance");

        for row in &rows {
            assert_eq!(
                row.label,
                u8::from(row.category == Category::C),
                "seed {seed}: label for {:?}",
                row.category
            );
        }

        let diag = compute_diagnostics(&rows).unwrap();
        assert_eq!(diag.positive_fraction, n_c as f64 / total as f64, "seed {seed}");
        assert_eq!(
            diag.wrong_state_fraction,
            n_d as f64 / (n_a + n_b + n_d) as f64,
            "seed {seed}"
        );

        let mut per_pair: BTreeMap<(&str, &str), BTreeMap<Category, usize>> = BTreeMap::new();
        for row in &rows {
            *per_pair
                .entry((row.report_id.as_str(), row.concept_id.as_str()))
                .or_default()
                .entry(row.category)
                .or_insert(0) += 1;
        }
        for ((report, concept), cats) in &per_pair {
            let g = |c: Category| cats.get(&c).copied().unwrap_or(0);
            assert_eq!(g(Category::A), g(Category::B), "seed {seed}: {report}/{concept}");
            let pair_total: usize = cats.values().sum();
            assert_eq!(
                pair_total,
                expected_row_count(g(Category::C), g(Category::D), g(Category::A)),
                "seed {seed}: row count for {report}/{concept}"
            );
        }
    }
}

/// Random scored instance with n in [2, 50], both classes present, roughly
/// half the scores on an 11-point grid so ties are common.
pub fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>) {
    let n = rng.random_range(2..=50usize);
    loop {
        let mut scores = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let s = if rng.random::<f64>() < 0.5 {
                f64::from(rng.random_range(0..=10u8)) / 10.0
            } else {
                rng.random::<f64>()
            };
            scores.push(s);
            labels.push(u8::from(rng.random::<f64>() < 0.4));
        }
        let pos = labels.iter().filter(|&&l| l == 1).count();
        if pos > 0 && pos < n {
            return (scores, labels);
        }
    }
}

/// Loop-based confusion oracle: predict positive iff score >= tau.
pub fn oracle_confusion(
    scores: &[f64],
    labels: &[u8],
    tau: f64,
) -> (usize, usize, usize, usize) {
    let (mut tp, mut tn, mut fp, mut fno) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= tau, l == 1) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fno += 1,
        }
    }
    (tp, tn, fp, fno)
}

/// Pair-counting ROC oracle: 1 per correctly ordered positive-negative
/// pair, 1/2 per tie.
pub fn oracle_roc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0f64;
    let mut pairs = 0.0f64;
    for (i, (&si, &li)) in scores.iter().zip(labels).enumerate() {
        if li != 1 {
            continue;
        }
        for (j, (&sj, &lj)) in scores.iter().zip(labels).enumerate() {
            if i == j || lj == 1 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Average-precision oracle: sweep distinct scores descending, accumulate
/// precision times recall increment.
pub fn oracle_ap(scores: &[f64], labels: &[u8]) -> f64 {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| b.partial_cmp(a).unwrap());
    distinct.dedup();
    let total_pos = labels.iter().filter(|&&l| l == 1).count();
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for &tau in &distinct {
        let (tp, _, fp, _) = oracle_confusion(scores, labels, tau);
        let recall = tp as f64 / total_pos as f64;
        if tp + fp > 0 {
            let precision = tp as f64 / (tp + fp) as f64;
            ap += (recall - prev_recall) * precision;
        }
        prev_recall = recall;
    }
    ap
}

pub fn oracle_brier(scores: &[f64], labels: &[u8]) -> f64 {
    let sum: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &l)| {
            let d = s - f64::from(l);
            d * d
        })
        .sum();
    sum / scores.len() as f64
}

/// Percent-scale threshold-metric oracle mirroring the degenerate rule: a
/// ratio with an empty denominator reports zero and is listed by name.
pub struct OracleThresholded {
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub f1: f64,
    pub degenerate: Vec<String>,
}

pub fn oracle_thresholded(scores: &[f64], labels: &[u8], tau: f64) -> OracleThresholded {
    let (tp, tn, fp, fno) = oracle_confusion(scores, labels, tau);
    let mut degenerate = Vec::new();
    let mut ratio = |num: f64, den: f64, name: &str| {
        if den == 0.0 {
            degenerate.push(name.to_string());
            0.0
        } else {
            num / den
        }
    };
    let pos = tp + fno;
    let neg = tn + fp;
    let n = pos + neg;
    let precision = ratio(tp as f64, (tp + fp) as f64, "precision");
    let sensitivity = ratio(tp as f64, pos as f64, "sensitivity");
    let specificity = ratio(tn as f64, neg as f64, "specificity");
    let accuracy = (tp + tn) as f64 / n as f64;
    let balanced_accuracy = (sensitivity + specificity) / 2.0;
    let f1 = ratio(2.0 * precision * sensitivity, precision + sensitivity, "f1");
    OracleThresholded {
        precision: precision * 100.0,
        sensitivity: sensitivity * 100.0,
        specificity: specificity * 100.0,
        accuracy: accuracy * 100.0,
        balanced_accuracy: balanced_accuracy * 100.0,
        f1: f1 * 100.0,
        degenerate,
    }
}

/// Exhaustive threshold-selection oracle: rebuild candidates, evaluate J
/// everywhere, keep the smallest maximizer.
pub fn oracle_youden(scores: &[f64], labels: &[u8]) -> (f64, f64) {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let mut candidates = vec![distinct[0] - 0.5];
    for pair in distinct.windows(2) {
        candidates.push((pair[0] + pair[1]) / 2.0);
    }
    candidates.push(distinct[distinct.len() - 1] + 0.5);

    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    let mut best_tau = f64::NAN;
    let mut best_j = f64::NEG_INFINITY;
    for &tau in &candidates {
        let (tp, tn, _, _) = oracle_confusion(scores, labels, tau);
        let j = tp as f64 / pos as f64 + tn as f64 / neg as f64 - 1.0;
        if j > best_j {
            best_j = j;
            best_tau = tau;
        }
    }
    (best_tau, best_j)
}

/// Criterion 3: every metric agrees with its brute-force oracle to within
/// 1e-12 on 500 tie-heavy random instances, inside 30 seconds.
pub fn criterion_03_metric_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_822);
    for case in 0..500 {
        let (scores, labels) = random_instance(&mut rng);

        let auc = roc_auc(&scores, &labels).unwrap();
        assert!(close(auc, oracle_roc(&scores, &labels)), "case {case}: roc");
        let ap = pr_auc(&scores, &labels).unwrap();
        assert!(close(ap, oracle_ap(&scores, &labels)), "case {case}: pr");
        let bs = brier(&scores, &labels).unwrap();
        assert!(close(bs, oracle_brier(&scores, &labels)), "case {case}: brier");

        let probe = scores[case % scores.len()];
        let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
        let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
        for tau in [rng.random::<f64>(), probe, lo, hi] {
            let c = confusion_at(&scores, &labels, tau).unwrap();
            let (tp, tn, fp, fno) = oracle_confusion(&scores, &labels, tau);
            assert_eq!(
                (c.true_pos, c.true_neg, c.false_pos, c.false_neg),
                (tp, tn, fp, fno),
                "case {case}: confusion at {tau}"
            );
            let m = thresholded_metrics(&scores, &labels, tau).unwrap();
            let o = oracle_thresholded(&scores, &labels, tau);
            for (got, want, name) in [
                (m.precision, o.precision, "precision"),
                (m.sensitivity, o.sensitivity, "sensitivity"),
                (m.specificity, o.specificity, "specificity"),
                (m.accuracy, o.accuracy, "accuracy"),
                (m.balanced_accuracy, o.balanced_accuracy, "balanced accuracy"),
                (m.f1, o.f1, "f1"),
            ] {
                assert!(close(got, want), "case {case}: {name} at {tau}: {got} vs {want}");
            }
            assert_eq!(m.degenerate, o.degenerate, "case {case}: degenerate set at {tau}");
        }

        let picked = select_threshold_youden(&scores, &labels).unwrap();
        let (tau_oracle, j_oracle) = oracle_youden(&scores, &labels);
        assert_eq!(picked.tau_star, tau_oracle, "case {case}: selected threshold");
        assert!(close(picked.j_value, j_oracle), "case {case}: J value");

        let pos = labels.iter().filter(|&&l| l == 1).count();
        let neg = labels.len() - pos;
        let mut grid: Vec<f64> =
            (0..=400).map(|k| lo + (hi - lo) * f64::from(k) / 400.0).collect();
        grid.extend(threshold_candidates(&scores));
        for tau in grid {
            let (tp, tn, _, _) = oracle_confusion(&scores, &labels, tau);
            let j = tp as f64 / pos as f64 + tn as f64 / neg as f64 - 1.0;
            assert!(
                j <= picked.j_value + TOL,
                "case {case}: threshold {tau} attains J {j} above selected {}",
                picked.j_value
            );
        }
    }
    assert!(start.elapsed().as_secs() < 30, "oracle sweep must finish inside 30 seconds");
}

/// Criterion 4: anchor values are exact: Brier 0 on perfect scores and
/// 0.25 on constant one-half, AUROC 1 on separation and 1/2 on all-tied,
/// F1 exactly 50 percent when TP = FP = FN.
pub fn criterion_04_anchor_values() {
    let labels = [1u8, 0, 1, 0, 1];
    let perfect: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    assert_eq!(brier(&perfect, &labels).unwrap(), 0.0);
    let half = vec![0.5; labels.len()];
    assert_eq!(brier(&half, &labels).unwrap(), 0.25);

    let separated = [0.9, 0.8, 0.7, 0.2, 0.1];
    let sep_labels = [1u8, 1, 1, 0, 0];
    assert_eq!(roc_auc(&separated, &sep_labels).unwrap(), 1.0);
    let tied = vec![0.4; 6];
    let tied_labels = [1u8, 0, 1, 0, 1, 0];
    assert_eq!(roc_auc(&tied, &tied_labels).unwrap(), 0.5);

    let scores = [0.9, 0.9, 0.9, 0.9, 0.1, 0.1, 0.1];
    let labels = [1u8, 1, 0, 0, 1, 1, 0];
    let m = thresholded_metrics(&scores, &labels, 0.5).unwrap();
    assert_eq!(
        (m.confusion.true_pos, m.confusion.false_pos, m.confusion.false_neg),
        (2, 2, 2)
    );
    assert_eq!(m.f1, 50.0);
}

/// Criterion 5: swap plans are derangements for every n in [2, 1000] over
/// 50 seeds, swap conserves the evidence-package multiset, top-p
/// selections nest, emptied rows format exactly like case-only masking,
/// and held-out substitution cites only held-out articles.
pub fn criterion_05_intervention_guarantees() {
    for seed in 0..50u64 {
        for n in 2..=1000usize {
            let plan = make_swap_plan(n, seed).unwrap();
            let mut seen = vec![false; n];
            for (i, &p) in plan.permutation.iter().enumerate() {
                assert_ne!(i, p, "fixed point at {i} for n={n} seed={seed}");
                assert!(!seen[p], "duplicate target {p} for n={n} seed={seed}");
                seen[p] = true;
            }
        }
    }

    let world = super::build_world(60, 9);
    let run = |spec: &InterventionSpec| {
        apply_intervention(&world.rows, spec, &world.assignments, &world.universe, &world.evidence_split)
            .unwrap()
    };

    // Swap conserves packages and touches nothing else.
    let (swapped, swap_manifest) = run(&InterventionSpec::swap(3));
    assert_eq!(swapped.len(), world.rows.len());
    assert!(swap_manifest.dropped.is_empty());
    let packages = |rows: &[evibench::supervision::VerifierRow]| {
        let mut m: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        for r in rows {
            *m.entry(r.evidence_ids.clone()).or_insert(0) += 1;
        }
        m
    };
    assert_eq!(packages(&world.rows), packages(&swapped), "swap must conserve packages");
    for (before, after) in world.rows.iter().zip(&swapped) {
        assert_eq!(before.row_id, after.row_id);
        assert_eq!(before.claim, after.claim);
        assert_eq!(before.label, after.label);
        assert_eq!(before.category, after.category);
    }

    // Top-p selections nest as p grows.
    let mut previous: Option<BTreeMap<String, Vec<String>>> = None;
    for p in 1..=4usize {
        let (rows, _) = run(&InterventionSpec::top_p(p));
        let by_id: BTreeMap<String, Vec<String>> =
            rows.iter().map(|r| (r.row_id.clone(), r.evidence_ids.clone())).collect();
        for r in &rows {
            assert!(r.evidence_ids.len() <= p);
        }
        if let Some(prev) = &previous {
            for (row_id, ids) in prev {
                let wider = &by_id[row_id];
                assert!(
                    wider.len() >= ids.len() && &wider[..ids.len()] == ids.as_slice(),
                    "row {row_id}: top-{} not a prefix of top-{p}",
                    p - 1
                );
            }
        }
        previous = Some(by_id);
    }

    // Emptied rows format exactly like case-only masking.
    let (emptied, empty_manifest) = run(&InterventionSpec::empty());
    assert_eq!(empty_manifest.output_rows, empty_manifest.input_rows);
    let ctx = world.ctx();
    for (original, stripped) in world.rows.iter().zip(&emptied) {
        assert!(stripped.evidence_ids.is_empty());
        let via_empty = mask_channels(stripped, S3, &ctx).unwrap();
        let via_mask = mask_channels(original, S1, &ctx).unwrap();
        assert_eq!(via_empty.text, via_mask.text, "row {}", original.row_id);
    }

    // Held-out substitution cites only held-out articles and logs drops.
    let (held, held_manifest) = run(&InterventionSpec::heldout(5));
    assert_eq!(
        held_manifest.output_rows + held_manifest.dropped.len(),
        held_manifest.input_rows
    );
    assert!(!held.is_empty());
    for row in &held {
        for evidence_id in &row.evidence_ids {
            let article = world
                .universe
                .article(evidence_id)
                .unwrap_or_else(|| panic!("unknown evidence id {evidence_id}"));
            assert!(
                world.evidence_split.heldout_article_ids.contains(article),
                "row {} cites non-held-out article {article}",
                row.row_id
            );
        }
    }
}

fn patient_cases(start: usize, n_patients: usize) -> Vec<CaseRecord> {
    let mut cases = Vec::with_capacity(n_patients * 2);
    for i in start..start + n_patients {
        let patient_id = format!("p{i:06}");
        for visit in 0..2 {
            cases.push(CaseRecord {
                patient_id: patient_id.clone(),
                report_id: format!("r{i:06}-{visit}"),
                findings_text: "lungs are clear".to_string(),
                impression_text: "no acute disease".to_string(),
                split: None,
            });
        }
    }
    cases
}

/// Criterion 6: across 10,000 patients, no patient straddles splits,
/// observed fractions stay within 0.02 of 75/10/15, and appending new
/// patients never moves existing ones.
pub fn criterion_06_patient_splits() {
    let mut cases = patient_cases(0, 10_000);
    let assignment = assign_patient_splits(&cases, 17, DEFAULT_SPLIT_RATIOS).unwrap();
    assert_eq!(assignment.len(), 10_000);

    apply_splits(&mut cases, &assignment).unwrap();
    let mut seen: BTreeMap<&str, Split> = BTreeMap::new();
    for case in &cases {
        let split = case.split.expect("split applied");
        match seen.get(case.patient_id.as_str()) {
            None => {
                seen.insert(&case.patient_id, split);
            }
            Some(&prev) => assert_eq!(prev, split, "patient {} straddles", case.patient_id),
        }
    }

    let mut counts: BTreeMap<Split, usize> = BTreeMap::new();
    for &split in assignment.values() {
        *counts.entry(split).or_insert(0) += 1;
    }
    for (split, ratio) in [
        (Split::Train, DEFAULT_SPLIT_RATIOS.0),
        (Split::Validation, DEFAULT_SPLIT_RATIOS.1),
        (Split::Test, DEFAULT_SPLIT_RATIOS.2),
    ] {
        let got = *counts.get(&split).unwrap_or(&0) as f64 / 10_000.0;
        assert!((got - ratio).abs() <= 0.02, "{split:?} fraction {got} vs {ratio}");
    }

    let mut grown = patient_cases(0, 10_000);
    grown.extend(patient_cases(10_000, 2_000));
    let after = assign_patient_splits(&grown, 17, DEFAULT_SPLIT_RATIOS).unwrap();
    assert_eq!(after.len(), 12_000);
    for (patient, split) in &assignment {
        assert_eq!(after.get(patient), Some(split), "patient {patient} moved");
    }
}

/// Recursively collects root-relative paths to file bytes.
pub fn collect_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).expect("readable output dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, fs::read(&path).expect("readable artifact"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Drops the run manifest, whose start and finish stamps are wall-clock
/// values by design; everything else must reproduce exactly.
pub fn deterministic_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = collect_files(root);
    files.remove(&PathBuf::from("manifest.json"));
    files
}

pub fn report_value(root: &Path, rel: &str) -> serde_json::Value {
    let raw = fs::read_to_string(root.join(rel))
        .unwrap_or_else(|e| panic!("missing artifact {rel}: {e}"));
    serde_json::from_str(&raw).unwrap_or_else(|e| panic!("bad JSON in {rel}: {e}"))
}

/// Criterion 7: two from-scratch runs of one config on a 200-case corpus
/// produce byte-identical rows, conditions, scores, and reports, inside 10
/// seconds.
pub fn criterion_07_reproducibility() {
    let dir = TempDir::new().unwrap();
    let config = super::pipeline_config_in(dir.path(), 200, 0);
    let out = config.output_root.clone();

    let start = Instant::now();
    run_pipeline(&config).unwrap();
    let first = deterministic_files(&out);
    assert!(!first.is_empty());

    fs::remove_dir_all(&out).unwrap();
    run_pipeline(&config).unwrap();
    let elapsed = start.elapsed();
    let second = deterministic_files(&out);

    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>(),
        "the two runs emitted different artifact sets"
    );
    for (path, bytes) in &first {
        assert_eq!(bytes, &second[path], "artifact {} differs", path.display());
    }
    assert!(elapsed.as_secs() < 10, "two full runs took {elapsed:?}, budget 10 seconds");
}

/// Criterion 8: corrupting evidence costs ranking power (intact AUROC
/// strictly above swapped and emptied), and the mean score gap on
/// supported-claim rows is strictly positive for both corruptions.
pub fn criterion_08_evidence_sensitivity() {
    let dir = TempDir::new().unwrap();
    let config = super::pipeline_config_in(dir.path(), 200, 0);
    let out = config.output_root.clone();
    run_pipeline(&config).unwrap();

    let auroc = |composite: &str| {
        report_value(&out, &format!("reports/metrics__{composite}.json"))["auroc"]
            .as_f64()
            .unwrap_or_else(|| panic!("no auroc in {composite}"))
    };
    let intact = auroc("none__S3");
    let swapped = auroc("swap-0__S3");
    let emptied = auroc("empty__S3");
    assert!(intact > swapped, "intact {intact} vs swapped {swapped}");
    assert!(intact > emptied, "intact {intact} vs emptied {emptied}");

    let comparison = report_value(&out, "reports/comparison.json");
    let mut checked = 0;
    for entry in comparison["comparisons"].as_array().expect("comparison list") {
        let condition = entry["condition_key"].as_str().unwrap_or_default();
        if condition == "empty__S3" || condition.starts_with("swap") {
            let c_gap = entry["gap"]["per_category_mean"]["C"]
                .as_f64()
                .unwrap_or_else(|| panic!("no category C gap for {condition}"));
            assert!(c_gap > 0.0, "supported-row gap under {condition} is {c_gap}");
            checked += 1;
        }
    }
    assert_eq!(checked, 2, "expected gap checks for both empty and swap");
}

const POINT_SCORES: [f64; 4] = [0.95, 0.7, 0.6, 0.2];
const POINT_LABELS: [u8; 4] = [1, 0, 1, 0];
const POINT_TAU: f64 = 0.5;

/// Finds a seed whose first replicate resamples [0, 1, .., n-1] in order.
pub fn identity_seed(n: usize) -> u64 {
    (0..200_000u64)
        .find(|&s| replicate_indices(s, 0, n) == (0..n).collect::<Vec<_>>())
        .expect("no identity resample seed found in search range")
}

/// Criterion 9: a single identity replicate reproduces every point metric
/// exactly, fixed seeds reproduce whole summaries, and comparing a
/// condition against itself differences to exactly zero.
pub fn criterion_09_bootstrap_guarantees() {
    let seed = identity_seed(POINT_SCORES.len());
    let summary = bootstrap_evaluate(&POINT_SCORES, &POINT_LABELS, POINT_TAU, 1, seed).unwrap();
    assert_eq!(summary.skipped_ranking, 0);
    assert_eq!(summary.metrics.len(), ALL_METRICS.len());
    for metric in ALL_METRICS {
        let point = metric.compute(&POINT_SCORES, &POINT_LABELS, POINT_TAU).unwrap();
        let s = &summary.metrics[metric.key()];
        assert_eq!(s.mean, point, "{}: mean", metric.key());
        assert_eq!(s.sd, 0.0, "{}: sd", metric.key());
        assert_eq!(s.ci_lo, point, "{}: lower", metric.key());
        assert_eq!(s.ci_hi, point, "{}: upper", metric.key());
    }

    let a = bootstrap_evaluate(&POINT_SCORES, &POINT_LABELS, POINT_TAU, 200, 77).unwrap();
    let b = bootstrap_evaluate(&POINT_SCORES, &POINT_LABELS, POINT_TAU, 200, 77).unwrap();
    assert_eq!(a, b, "fixed seed must reproduce the summary");

    let scores: Vec<f64> = vec![0.9, 0.8, 0.7, 0.65, 0.55, 0.45, 0.4, 0.3, 0.2, 0.1];
    let labels: Vec<u8> = vec![1, 1, 0, 1, 0, 1, 0, 0, 1, 0];
    for metric in ALL_METRICS {
        let d = paired_bootstrap_diff(
            &scores, &scores, &labels, POINT_TAU, POINT_TAU, 150, 5, metric,
        )
        .unwrap();
        assert_eq!(d.point_diff, 0.0, "{}", metric.key());
        assert!(d.diffs.iter().all(|&x| x == 0.0), "{}", metric.key());
        assert_eq!((d.mean, d.sd, d.ci_lo, d.ci_hi), (0.0, 0.0, 0.0, 0.0), "{}", metric.key());
    }
}

/// Criterion 10: accept and three-way boundaries are inclusive upward on a
/// grid spanning both thresholds, and the rerank winner is invariant under
/// strictly increasing recalibration.
pub fn criterion_10_decision_policies() {
    let act = |policy: &DecisionPolicy, score: f64| {
        let candidate = PolicyCandidate {
            claim_text: "claim".to_string(),
            evidence_ids: Vec::new(),
            score,
        };
        match apply_decision_policy(policy, &[candidate]).unwrap() {
            PolicyOutcome::Single { record } => record.action,
            PolicyOutcome::Reranked { .. } => panic!("single policy reranked"),
        }
    };

    let accept = DecisionPolicy { kind: PolicyKind::Accept { tau_acc: 0.6 }, calibration: None };
    for (score, expected) in [
        (0.0, DecisionAction::Escalate),
        (0.3, DecisionAction::Escalate),
        (0.5999999, DecisionAction::Escalate),
        (0.6, DecisionAction::Accept),
        (0.8, DecisionAction::Accept),
        (1.0, DecisionAction::Accept),
    ] {
        assert_eq!(act(&accept, score), expected, "accept at {score}");
    }

    let three_way = DecisionPolicy {
        kind: PolicyKind::ThreeWay { tau_low: 0.3, tau_high: 0.7 },
        calibration: None,
    };
    for (score, expected) in [
        (0.0, DecisionAction::Escalate),
        (0.15, DecisionAction::Escalate),
        (0.3, DecisionAction::Revise),
        (0.5, DecisionAction::Revise),
        (0.7, DecisionAction::Accept),
        (0.85, DecisionAction::Accept),
        (1.0, DecisionAction::Accept),
    ] {
        assert_eq!(act(&three_way, score), expected, "three-way at {score}");
    }

    let plain = DecisionPolicy { kind: PolicyKind::Rerank, calibration: None };
    let curved = DecisionPolicy {
        kind: PolicyKind::Rerank,
        calibration: Some(CalibrationTable {
            knots: vec![(0.0, 0.0), (0.4, 0.1), (0.8, 0.6), (1.0, 1.0)],
        }),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..50 {
        let k = rng.random_range(1..=6usize);
        let candidates: Vec<PolicyCandidate> = (0..k)
            .map(|i| PolicyCandidate {
                claim_text: format!("candidate {i}"),
                evidence_ids: vec![format!("e{i}")],
                score: f64::from(rng.random_range(0..=10u8)) / 10.0,
            })
            .collect();
        let pick = |policy: &DecisionPolicy| match apply_decision_policy(policy, &candidates) {
            Ok(PolicyOutcome::Reranked { selected_index, .. }) => selected_index,
            other => panic!("trial {trial}: unexpected outcome {other:?}"),
        };
        assert_eq!(pick(&plain), pick(&curved), "trial {trial}: winner changed");
    }
}
