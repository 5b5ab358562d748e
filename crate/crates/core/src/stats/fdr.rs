/// Benjamini–Hochberg step-up procedure. Returns one flag per input p-value
/// (in input order): the hypotheses with ranks up to the largest k such that
/// p_(k) ≤ k·q/m. NaN p-values are never flagged and sort last.
pub fn bh_fdr(pvals: &[f64], q: f64) -> Vec<bool> {
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (pvals[a], pvals[b]);
        match (pa.is_nan(), pb.is_nan()) {
            (false, false) => pa.total_cmp(&pb),
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            (true, true) => std::cmp::Ordering::Equal,
        }
    });

    let cutoff = order
        .iter()
        .enumerate()
        .filter(|(rank0, &idx)| pvals[idx] <= (rank0 + 1) as f64 * q / m as f64)
        .map(|(rank0, _)| rank0 + 1)
        .max()
        .unwrap_or(0);

    let mut flags = vec![false; m];
    for &idx in &order[..cutoff] {
        flags[idx] = true;
    }
    flags
}
