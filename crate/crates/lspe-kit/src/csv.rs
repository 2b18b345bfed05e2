//! Result rows and their deterministic CSV rendering.
//!
//! The column set and order are fixed, the header is mandatory, every real
//! is printed with 17 significant digits (`{:.16e}`, enough to reproduce any
//! f64 exactly), rows are sorted by (estimator, δ, N), and lines end in `\n`
//! — so equal results are equal bytes, and the files work as golden files.

use std::fmt::Write as _;

/// One experiment point: an estimator run on one (N, M) system.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub estimator: String,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub nmse_mean: f64,
    pub smse_analytic: f64,
    pub smse_empirical: f64,
    pub eer_empirical: f64,
    pub eer_bound: f64,
    pub trials: usize,
    pub seed: u64,
}

/// The mandatory first line of every results file.
pub const CSV_HEADER: &str =
    "estimator,n,m,delta,nmse_mean,smse_analytic,smse_empirical,eer_empirical,eer_bound,trials,seed";

/// Sort rows into their canonical emission order: estimator label, then δ,
/// then N. Total for finite values; runs never produce NaN deltas.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.estimator
            .cmp(&b.estimator)
            .then(a.delta.total_cmp(&b.delta))
            .then(a.n.cmp(&b.n))
    });
}

/// Render `rows` (sorted in place) as the full CSV text.
pub fn render_csv(rows: &mut [ResultRow]) -> String {
    sort_rows(rows);
    let mut out = String::with_capacity(64 + rows.len() * 160);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows.iter() {
        let _ = writeln!(
            out,
            "{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            r.estimator,
            r.n,
            r.m,
            r.delta,
            r.nmse_mean,
            r.smse_analytic,
            r.smse_empirical,
            r.eer_empirical,
            r.eer_bound,
            r.trials,
            r.seed
        );
    }
    out
}
