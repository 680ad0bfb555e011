//! Checks the shuffle-split bootstrap against an exhaustive oracle that
//! enumerates every ordering of the concatenated rows.

use tutorbench_core::stats::{bootstrap_null, divergence, mean, EmbeddingMatrix};

fn fixture() -> (EmbeddingMatrix, EmbeddingMatrix) {
    let a = vec![
        vec![0.9, 0.1, -0.3, 0.2],
        vec![-0.5, 0.8, 0.1, 0.4],
        vec![0.2, -0.7, 0.6, -0.1],
    ];
    let b = vec![
        vec![0.3, 0.3, 0.9, -0.2],
        vec![0.1, -0.4, -0.8, 0.5],
        vec![-0.6, 0.2, 0.4, 0.7],
    ];
    let index: Vec<String> = vec!["s0".into(), "s1".into(), "s2".into()];
    (
        EmbeddingMatrix::new(a, index.clone(), "full".into()).unwrap(),
        EmbeddingMatrix::new(b, index, "ablated".into()).unwrap(),
    )
}

/// Mean paired divergence of one ordering: first half pairs positionally with
/// the second half.
fn ordering_statistic(rows: &[&[f64]], order: &[usize]) -> f64 {
    let n = order.len() / 2;
    let total: f64 = (0..n)
        .map(|j| divergence(rows[order[j]], rows[order[n + j]]).unwrap())
        .sum();
    total / n as f64
}

/// All orderings of `0..m` via Heap's algorithm.
fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..m).collect();
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            out.push(items.clone());
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
    heap(m, &mut items, &mut out);
    out
}

#[test]
fn bootstrap_matches_exhaustive_permutation_oracle() {
    let (a, b) = fixture();
    let rows: Vec<&[f64]> = (0..3).map(|j| a.row(j)).chain((0..3).map(|j| b.row(j))).collect();

    let orderings = permutations(6);
    assert_eq!(orderings.len(), 720);
    let exact: Vec<f64> = orderings
        .iter()
        .map(|order| ordering_statistic(&rows, order))
        .collect();
    let exact_mean = mean(&exact);
    let exact_sd = {
        let ss: f64 = exact.iter().map(|v| (v - exact_mean).powi(2)).sum();
        (ss / exact.len() as f64).sqrt()
    };

    let sampled = bootstrap_null(&a, &b, 5000, 12345).unwrap();
    let sampled_mean = mean(&sampled);
    let sampled_sd = tutorbench_core::stats::sample_sd(&sampled);

    let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
    assert!(
        rel(sampled_mean, exact_mean) < 0.05,
        "mean {sampled_mean} vs exact {exact_mean}"
    );
    assert!(
        rel(sampled_sd, exact_sd) < 0.05,
        "sd {sampled_sd} vs exact {exact_sd}"
    );
}

#[test]
fn bootstrap_swap_invariant_in_distribution() {
    let (a, b) = fixture();
    let ab = bootstrap_null(&a, &b, 4000, 7).unwrap();
    let ba = bootstrap_null(&b, &a, 4000, 8).unwrap();
    let rel = (mean(&ab) - mean(&ba)).abs() / mean(&ab);
    assert!(rel < 0.05, "swap changed the null mean by {rel}");
}
