//! Acceptance suite: one test per release criterion, each printing a single
//! PASS line on success (run with `--nocapture` to see them). The criteria
//! cover pipeline cardinality, statistical calibration and power, oracle
//! agreement, formula exactness, validator fixtures, interval and report
//! formatting, PCA properties, and determinism under interruption.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tutorbench::config::Config;
use tutorbench::pipeline::RunContext;
use tutorbench::report::{format_cell, format_proportion};
use tutorbench_core::analysis::fit_pca;
use tutorbench_core::quality::{check_format, parse_response};
use tutorbench_core::stats::{
    bootstrap_null, cohens_d, cosine_similarity, divergence, mean, randomization_test,
    sample_sd, wilson_interval, EmbeddingMatrix,
};

fn pass(criterion: u32, detail: &str) {
    println!("acceptance criterion {criterion}: PASS - {detail}");
}

fn assets_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn shipped_config() -> Config {
    let assets = assets_dir();
    let mut config = Config::load(&assets.join("config_mock.toml")).unwrap();
    config.corpus = assets.join("synthetic_corpus.json");
    config.template = assets.join("template_default.txt");
    config
}

fn matrix(rows: Vec<Vec<f64>>, label: &str) -> EmbeddingMatrix {
    let index: Vec<String> = (0..rows.len()).map(|i| format!("r{i}")).collect();
    EmbeddingMatrix::new(rows, index, label.to_string()).unwrap()
}

fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: &[f64], sigma: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|j| {
                    // Box-Muller
                    let u1: f64 = rng.random::<f64>().max(1e-12);
                    let u2: f64 = rng.random();
                    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                    sigma * z + shift.get(j).copied().unwrap_or(0.0)
                })
                .collect()
        })
        .collect()
}

#[test]
fn criterion_01_pipeline_cardinality_and_runtime() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = shipped_config();
    let models: Vec<String> = config.models.iter().map(|m| m.name.clone()).collect();
    let ctx = RunContext::prepare(config, dir.path().join("run")).unwrap();
    ctx.run_all().unwrap();

    let mut generations = 0;
    let mut embeddings = 0;
    for model in &models {
        generations += fs::read_to_string(ctx.generations_path(model))
            .unwrap()
            .lines()
            .count();
        embeddings += fs::read_to_string(ctx.embeddings_path(model))
            .unwrap()
            .lines()
            .count();
    }
    let report = ctx.build_report().unwrap();
    let elapsed = start.elapsed();

    assert_eq!(generations, 1350, "generation records");
    assert_eq!(embeddings, 1350, "embedding records");
    assert_eq!(report.adaptivity.cells.len(), 15, "adaptivity grid cells");
    assert_eq!(report.quality.models.len(), 3);
    for model in &report.quality.models {
        assert_eq!(model.rows.len(), 5, "quality metrics for {}", model.model_name);
    }
    assert!(
        elapsed.as_secs() < 120,
        "offline run took {elapsed:?}, expected under 2 minutes"
    );
    pass(
        1,
        &format!("1350 generations, 1350 embeddings, 15-cell grid, 5-metric table in {elapsed:?}"),
    );
}

#[test]
fn criterion_02_null_calibration_of_randomization_test() {
    let start = Instant::now();
    let runs = 200;
    let mut p_values = Vec::with_capacity(runs);
    for i in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0000 + i as u64);
        let a = matrix(gaussian_rows(&mut rng, 75, 64, &[], 1.0), "a");
        let b = matrix(gaussian_rows(&mut rng, 75, 64, &[], 1.0), "b");
        let result = randomization_test(&a, &b, 1000, 0x0BB0 + i as u64).unwrap();
        p_values.push(result.p_value);
    }
    let frac_significant =
        p_values.iter().filter(|&&p| p < 0.05).count() as f64 / runs as f64;
    assert!(
        (0.01..=0.10).contains(&frac_significant),
        "fraction of p < 0.05 was {frac_significant}, expected within [0.01, 0.10]"
    );
    let mut deciles = [0usize; 10];
    for p in &p_values {
        let bin = ((p * 10.0).floor() as usize).min(9);
        deciles[bin] += 1;
    }
    for (i, count) in deciles.iter().enumerate() {
        let frac = *count as f64 / runs as f64;
        assert!(
            (0.03..=0.17).contains(&frac),
            "decile {i} holds {frac} of p-values, expected 0.10 ± 0.07"
        );
    }
    pass(
        2,
        &format!(
            "false-positive rate {frac_significant:.3}, deciles within 10% ± 7% ({:?} elapsed)",
            start.elapsed()
        ),
    );
}

#[test]
fn criterion_03_power_and_direction_under_true_shift() {
    // two tight clusters around orthogonal means: the observed paired
    // divergence sits far above the mixed null
    let mut shift_a = vec![0.0; 64];
    shift_a[0] = 1.0;
    let mut shift_b = vec![0.0; 64];
    shift_b[1] = 1.0;
    let runs = 100;
    let mut detected = 0;
    let mut margin_checked = false;
    for i in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(0xF0DD + i as u64);
        let a = matrix(gaussian_rows(&mut rng, 75, 64, &shift_a, 0.05), "a");
        let b = matrix(gaussian_rows(&mut rng, 75, 64, &shift_b, 0.05), "b");
        let result = randomization_test(&a, &b, 1000, 0xD1CE + i as u64).unwrap();
        if !margin_checked {
            // confirm the premise: observed exceeds the null mean by >= 3 null-sd
            let null_mean = mean(&result.bootstrap);
            let null_sd = sample_sd(&result.bootstrap);
            assert!(
                result.statistic - null_mean >= 3.0 * null_sd,
                "shift too small: statistic {} vs null {} ± {}",
                result.statistic,
                null_mean,
                null_sd
            );
            margin_checked = true;
        }
        if result.p_value < 0.05 && result.effect_size_d.map_or(false, |d| d > 0.0) {
            detected += 1;
        }
    }
    assert!(
        detected >= 95,
        "only {detected}/{runs} shifted runs gave p < 0.05 with positive d"
    );
    pass(3, &format!("{detected}/{runs} shifted runs detected with positive effect size"));
}

/// Every ordering of 6 items, by Heap's algorithm.
fn permutations6() -> Vec<[usize; 6]> {
    let mut out = Vec::with_capacity(720);
    let mut items = [0usize, 1, 2, 3, 4, 5];
    fn heap(k: usize, items: &mut [usize; 6], out: &mut Vec<[usize; 6]>) {
        if k == 1 {
            out.push(*items);
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    heap(6, &mut items, &mut out);
    out
}

#[test]
fn criterion_04_bootstrap_matches_exhaustive_ordering_oracle() {
    let a_rows = vec![
        vec![1.0, 0.2, -0.3, 0.5],
        vec![-0.4, 1.1, 0.0, 0.9],
        vec![0.3, -0.7, 0.8, 0.1],
    ];
    let b_rows = vec![
        vec![0.9, -0.1, 0.4, -0.6],
        vec![0.2, 0.5, -1.0, 0.3],
        vec![-0.8, 0.6, 0.7, 1.2],
    ];
    let pool: Vec<&[f64]> = a_rows.iter().chain(b_rows.iter()).map(|r| r.as_slice()).collect();

    let mut oracle = Vec::with_capacity(720);
    for perm in permutations6() {
        let mut total = 0.0;
        for j in 0..3 {
            total += divergence(pool[perm[j]], pool[perm[j + 3]]).unwrap();
        }
        oracle.push(total / 3.0);
    }
    let oracle_mean = mean(&oracle);
    let oracle_sd = sample_sd(&oracle);

    let a = matrix(a_rows.clone(), "a");
    let b = matrix(b_rows.clone(), "b");
    let boot = bootstrap_null(&a, &b, 5000, 12345).unwrap();
    let boot_mean = mean(&boot);
    let boot_sd = sample_sd(&boot);

    let mean_err = (boot_mean - oracle_mean).abs() / oracle_mean;
    let sd_err = (boot_sd - oracle_sd).abs() / oracle_sd;
    assert!(mean_err < 0.05, "mean relative error {mean_err}");
    assert!(sd_err < 0.05, "sd relative error {sd_err}");
    pass(
        4,
        &format!("bootstrap mean/sd within {:.2}%/{:.2}% of the 720-ordering oracle", mean_err * 100.0, sd_err * 100.0),
    );
}

#[test]
fn criterion_05_cosine_and_divergence_exactness() {
    let cos = cosine_similarity(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((cos - 0.974632).abs() < 1e-6, "cos = {cos}");
    let div = divergence(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((div - 0.025368).abs() < 1e-6, "divergence = {div}");

    let v = [0.3, -1.2, 4.5, 0.0, 2.2];
    let identity = cosine_similarity(&v, &v).unwrap();
    assert!((identity - 1.0).abs() < 1e-12);
    let orthogonal = cosine_similarity(&[1.0, 0.0], &[0.0, 5.0]).unwrap();
    assert!(orthogonal.abs() < 1e-12);
    pass(5, "hand values to 1e-6, identity/orthogonality to 1e-12");
}

#[test]
fn criterion_06_effect_size_formula_exactness() {
    let boot = vec![0.0, 2.0];
    let statistic = 3.0;
    let d = cohens_d(statistic, &boot).unwrap();
    // direct evaluation: (statistic - null mean) / null sample sd
    let direct = (statistic - mean(&boot)) / sample_sd(&boot);
    assert!((d - direct).abs() < 1e-12);
    assert!((d - 1.414214).abs() < 1e-6, "d = {d}");

    let at_mean = cohens_d(1.0, &boot).unwrap();
    assert_eq!(at_mean, 0.0, "statistic at the null mean must give exactly 0");
    pass(6, "matches direct formula to 1e-12; zero at the null mean");
}

#[test]
fn criterion_07_format_validators_on_reference_fixtures() {
    let example_2 = "[Ask to self-explain] Tell me what you're thinking about this problem. What do you think we should do to solve for x?";
    let checks_2 = check_format(&parse_response(example_2));
    assert!(checks_2.intention_pass, "example 2 intention");
    assert!(!checks_2.delimiter_pass, "example 2 delimiter");
    assert!(!checks_2.count_pass, "example 2 count");

    let example_3 = "I appreciate your effort so far! Tell me what you think you should do next with the equation 3x-1=8. # Talk about it some more # Great job on simplifying the left side of the equation! #";
    let checks_3 = check_format(&parse_response(example_3));
    assert!(!checks_3.intention_pass, "example 3 intention");
    assert!(checks_3.delimiter_pass, "example 3 delimiter");
    assert!(checks_3.count_pass, "example 3 count");

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let alphabet: Vec<char> = "ab[]# .!XY".chars().collect();
    for _ in 0..10_000 {
        let len = rng.random_range(0..80);
        let text: String = (0..len)
            .map(|_| alphabet[rng.random_range(0..alphabet.len())])
            .collect();
        let checks = check_format(&parse_response(&text));
        assert!(
            !checks.count_pass || checks.delimiter_pass,
            "count passed without delimiter on {text:?}"
        );
    }
    pass(7, "both fixtures classified as expected; contingency held on 10,000 fuzzed inputs");
}

#[test]
fn criterion_08_wilson_interval_values_and_boundaries() {
    let estimate = wilson_interval(50, 100, 0.95).unwrap();
    assert!((estimate.midpoint - 0.5).abs() < 1e-4, "midpoint {}", estimate.midpoint);
    assert!((estimate.margin - 0.0962).abs() < 5e-4, "margin {}", estimate.margin);

    let none = wilson_interval(0, 40, 0.95).unwrap();
    assert!(none.lower().abs() < 1e-12, "zero-success interval touches 0");
    let all = wilson_interval(40, 40, 0.95).unwrap();
    assert!((all.upper() - 1.0).abs() < 1e-12, "all-success interval touches 1");
    pass(8, "50/100 midpoint 0.5000, margin 0.0962; boundaries touch 0 and 1");
}

/// Full eigendecomposition of a small symmetric matrix by power iteration
/// with deflation: an oracle independent of the shipped eigensolver.
fn power_iteration_eigen(mut m: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
    let size = m.len();
    let mut out = Vec::with_capacity(size);
    let mut seed = 1u64;
    for _ in 0..size {
        let mut v: Vec<f64> = (0..size)
            .map(|_| {
                seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                ((seed >> 33) as f64 / (1u64 << 31) as f64) - 0.5
            })
            .collect();
        for _ in 0..10_000 {
            let mut next = vec![0.0; size];
            for i in 0..size {
                for j in 0..size {
                    next[i] += m[i][j] * v[j];
                }
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                break;
            }
            for x in &mut next {
                *x /= norm;
            }
            v = next;
        }
        let mut lambda = 0.0;
        for i in 0..size {
            for j in 0..size {
                lambda += v[i] * m[i][j] * v[j];
            }
        }
        for i in 0..size {
            for j in 0..size {
                m[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    out
}

#[test]
fn criterion_09_pca_ratios_reconstruction_and_signs() {
    // rank-1 data explains everything on the first component
    let rank1: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
    let model = fit_pca(&rank1, 2).unwrap();
    assert!((model.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
    assert!(model.explained_variance_ratio[1].abs() < 1e-9);

    // 10x6 matrices: top-2 reconstruction error must equal the discarded
    // variance from an independent eigendecomposition
    for trial in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + trial);
        let x: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..6).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
            .collect();
        let fitted = fit_pca(&x, 2).unwrap();

        let n = x.len();
        let mut colmean = vec![0.0; 6];
        for row in &x {
            for (m, v) in colmean.iter_mut().zip(row) {
                *m += v / n as f64;
            }
        }
        let centered: Vec<Vec<f64>> = x
            .iter()
            .map(|row| row.iter().zip(&colmean).map(|(v, m)| v - m).collect())
            .collect();
        let mut cov = vec![vec![0.0; 6]; 6];
        for row in &centered {
            for i in 0..6 {
                for j in 0..6 {
                    cov[i][j] += row[i] * row[j] / (n as f64 - 1.0);
                }
            }
        }
        let oracle = power_iteration_eigen(cov);
        let discarded: f64 = oracle[2..].iter().map(|(l, _)| l.max(0.0)).sum();

        // residual variance after projecting onto the fitted top-2 basis
        let mut residual = 0.0;
        for row in &centered {
            let mut rec = vec![0.0; 6];
            for component in &fitted.components {
                let coord: f64 = row.iter().zip(component).map(|(a, b)| a * b).sum();
                for (r, c) in rec.iter_mut().zip(component) {
                    *r += coord * c;
                }
            }
            residual += row
                .iter()
                .zip(&rec)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        residual /= n as f64 - 1.0;
        assert!(
            (residual - discarded).abs() < 1e-8,
            "trial {trial}: residual {residual} vs discarded {discarded}"
        );

        // deterministic sign convention, stable across refits
        let refit = fit_pca(&x, 2).unwrap();
        assert_eq!(fitted.components, refit.components);
        for component in &fitted.components {
            let largest = component
                .iter()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { *v } else { acc });
            assert!(largest > 0.0, "largest-magnitude coordinate must be positive");
        }
    }
    pass(9, "rank-1 ratios [1, 0]; reconstruction matches oracle to 1e-8; signs deterministic");
}

#[test]
fn criterion_10_report_cell_and_interval_formatting() {
    assert_eq!(format_cell(Some(2.36), 0.035, 0.05), "2.36, .035*");
    assert_eq!(format_cell(Some(-1.86), 0.997, 0.05), "-1.86, .997");
    let estimate = tutorbench_core::stats::ProportionEstimate {
        successes: 0,
        n: 0,
        confidence: 0.95,
        midpoint: 0.9249,
        margin: 0.0542,
    };
    assert_eq!(format_proportion(&estimate), "92.49% ± 5.42%");
    pass(10, "reference grid cells and interval strings reproduced exactly");
}

#[test]
fn criterion_11_determinism_and_resume_identity() {
    let config = shipped_config();
    let models: Vec<String> = config.models.iter().map(|m| m.name.clone()).collect();

    let dir_a = tempfile::tempdir().unwrap();
    let run_a = RunContext::prepare(config.clone(), dir_a.path().join("run")).unwrap();
    run_a.run_all().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let run_b = RunContext::prepare(config.clone(), dir_b.path().join("run")).unwrap();
    run_b.run_all().unwrap();
    assert_eq!(
        fs::read(run_a.report_md_path()).unwrap(),
        fs::read(run_b.report_md_path()).unwrap(),
        "markdown reports differ between identical runs"
    );
    assert_eq!(
        fs::read(run_a.report_json_path()).unwrap(),
        fs::read(run_b.report_json_path()).unwrap(),
        "json reports differ between identical runs"
    );

    // kill mid-generate: truncate one model's output to a torn prefix, drop
    // the marker and everything downstream, then resume
    let dir_c = tempfile::tempdir().unwrap();
    let run_c = RunContext::prepare(config, dir_c.path().join("run")).unwrap();
    for stage in ["validate", "ablate", "generate"] {
        run_c.run_stage(stage).unwrap();
    }
    let gen_path = run_c.generations_path(&models[1]);
    let full = fs::read_to_string(&gen_path).unwrap();
    let kept: Vec<&str> = full.lines().take(100).collect();
    fs::write(&gen_path, format!("{}\n{{\"torn", kept.join("\n"))).unwrap();
    fs::remove_file(dir_c.path().join("run").join(".stage_generate.done")).unwrap();
    run_c.run_all().unwrap();

    for model in &models {
        let lines: Vec<String> = fs::read_to_string(run_c.generations_path(model))
            .unwrap()
            .lines()
            .map(|l| {
                let record: serde_json::Value = serde_json::from_str(l).unwrap();
                format!("{}|{}", record["scenario_id"], record["variant_key"])
            })
            .collect();
        assert_eq!(lines.len(), 450);
        let mut unique = lines.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), 450, "duplicate records after resume for {model}");
    }
    assert_eq!(
        fs::read(run_a.report_md_path()).unwrap(),
        fs::read(run_c.report_md_path()).unwrap(),
        "resumed run report differs from uninterrupted run"
    );
    pass(11, "two runs byte-identical; interrupted run resumed to the identical report with no duplicates");
}
