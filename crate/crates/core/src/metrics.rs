//! Multiclass evaluation: confusion matrix, macro-averaged precision / recall /
//! F1 / one-vs-rest AUC, Cohen's kappa and multiclass MCC.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {expected} true labels but {got} values")]
    LengthMismatch { expected: usize, got: usize },
    #[error("label {label} at position {index} is outside 0..{k}")]
    LabelOutOfRange { index: usize, label: usize, k: usize },
    #[error("no records to evaluate")]
    Empty,
    #[error("score row {row} has {got} columns, expected {expected}")]
    ScoreShape { row: usize, expected: usize, got: usize },
    #[error("score row {row} sums to {sum}, expected 1")]
    ScoreRowSum { row: usize, sum: f64 },
    #[error("confusion matrix does not match the labels")]
    ConfusionMismatch,
    #[error("AUC undefined: no category has both positive and negative records")]
    DegenerateAuc,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

/// Kappa at or above this level reads as high reliability.
pub const KAPPA_RELIABLE: f64 = 0.70;

const ROW_SUM_TOLERANCE: f64 = 1e-6;

/// K x K counts, rows = true category, columns = predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(rows: &[Vec<u64>]) -> Option<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return None;
        }
        Some(Self { k, counts: rows.concat() })
    }

    pub fn n_categories(&self) -> usize {
        self.k
    }

    pub fn get(&self, t: usize, p: usize) -> u64 {
        self.counts[t * self.k + p]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    /// Row sums (true-label histogram).
    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.k).map(|i| (0..self.k).map(|j| self.get(i, j)).sum()).collect()
    }

    /// Column sums (predicted-label histogram).
    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.k).map(|j| (0..self.k).map(|i| self.get(i, j)).sum()).collect()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k.max(1)).map(|c| c.to_vec()).collect()
    }

    /// Writes the matrix with a header row of predicted category names and a
    /// leading column of true category names.
    pub fn write_csv<W: Write>(&self, names: &[String], writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.names_or_ids(names));
        w.write_record(&header)?;
        for (i, name) in self.names_or_ids(names).into_iter().enumerate() {
            let mut rec = vec![name];
            rec.extend((0..self.k).map(|j| self.get(i, j).to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    fn names_or_ids(&self, names: &[String]) -> Vec<String> {
        if names.len() == self.k {
            names.to_vec()
        } else {
            (0..self.k).map(|i| i.to_string()).collect()
        }
    }
}

fn check_labels(labels: &[usize], k: usize) -> Result<()> {
    match labels.iter().position(|&l| l >= k) {
        Some(index) => Err(MetricsError::LabelOutOfRange { index, label: labels[index], k }),
        None => Ok(()),
    }
}

pub fn confusion_matrix(true_labels: &[usize], predicted: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch { expected: true_labels.len(), got: predicted.len() });
    }
    check_labels(true_labels, k)?;
    check_labels(predicted, k)?;
    let mut counts = vec![0u64; k * k];
    for (&t, &p) in true_labels.iter().zip(predicted) {
        counts[t * k + p] += 1;
    }
    Ok(ConfusionMatrix { k, counts })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub auc_macro: f64,
    pub recall_macro: f64,
    pub precision_macro: f64,
    pub f1_macro: f64,
    pub kappa: f64,
    pub mcc: f64,
    pub train_time_s: f64,
    /// Categories whose precision or recall was 0/0 (counted as 0).
    pub zero_division: Vec<usize>,
    /// Categories left out of the macro AUC (no positives or no negatives).
    pub auc_skipped: Vec<usize>,
}

pub const REPORT_COLUMNS: [&str; 8] = ["Accuracy", "AUC", "Recall", "Precision", "F1", "Kappa", "MCC", "TT"];

impl EvalReport {
    pub fn is_reliable(&self) -> bool {
        self.kappa >= KAPPA_RELIABLE
    }

    pub fn values(&self) -> [f64; 8] {
        [
            self.accuracy,
            self.auc_macro,
            self.recall_macro,
            self.precision_macro,
            self.f1_macro,
            self.kappa,
            self.mcc,
            self.train_time_s,
        ]
    }

    /// Header plus one row in the column order Accuracy..TT.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(REPORT_COLUMNS)?;
        w.write_record(self.values().iter().map(|v| format!("{v:.6}")))?;
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in REPORT_COLUMNS.iter().zip(self.values()) {
            writeln!(f, "{name:>9}: {v:.4}")?;
        }
        let note = if self.is_reliable() { "high reliability (kappa >= 0.70)" } else { "below the 0.70 reliability bar" };
        write!(f, "    kappa: {note}")?;
        if !self.zero_division.is_empty() {
            write!(f, "\n     note: 0/0 precision or recall counted as 0 for categories {:?}", self.zero_division)?;
        }
        if !self.auc_skipped.is_empty() {
            write!(f, "\n     note: categories {:?} skipped in macro AUC", self.auc_skipped)?;
        }
        Ok(())
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// One-vs-rest AUC for a single score column via the rank-sum statistic with
/// midranks for ties. `None` when positives or negatives are missing.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share their mean
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&o| positive[o]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Macro one-vs-rest AUC and the list of skipped categories.
pub fn macro_auc(scores: &[Vec<f64>], true_labels: &[usize], k: usize) -> Result<(f64, Vec<usize>)> {
    let mut total = 0.0;
    let mut used = 0usize;
    let mut skipped = Vec::new();
    for c in 0..k {
        let column: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        let positive: Vec<bool> = true_labels.iter().map(|&l| l == c).collect();
        match binary_auc(&column, &positive) {
            Some(a) => {
                total += a;
                used += 1;
            }
            None => skipped.push(c),
        }
    }
    if used == 0 {
        return Err(MetricsError::DegenerateAuc);
    }
    Ok((total / used as f64, skipped))
}

/// Full report. Macro averages run over the categories that occur in either
/// the true or the predicted labels.
pub fn summary(
    confusion: &ConfusionMatrix,
    scores: &[Vec<f64>],
    true_labels: &[usize],
    train_time_s: f64,
) -> Result<EvalReport> {
    let k = confusion.n_categories();
    let n = confusion.total();
    if n == 0 {
        return Err(MetricsError::Empty);
    }
    if true_labels.len() as u64 != n {
        return Err(MetricsError::LengthMismatch { expected: true_labels.len(), got: n as usize });
    }
    if scores.len() != true_labels.len() {
        return Err(MetricsError::LengthMismatch { expected: true_labels.len(), got: scores.len() });
    }
    check_labels(true_labels, k)?;
    for (row, s) in scores.iter().enumerate() {
        if s.len() != k {
            return Err(MetricsError::ScoreShape { row, expected: k, got: s.len() });
        }
        let sum: f64 = s.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(MetricsError::ScoreRowSum { row, sum });
        }
    }
    let t = confusion.row_sums();
    let mut hist = vec![0u64; k];
    true_labels.iter().for_each(|&l| hist[l] += 1);
    if hist != t {
        return Err(MetricsError::ConfusionMismatch);
    }
    let p = confusion.col_sums();

    let present: Vec<usize> = (0..k).filter(|&c| t[c] + p[c] > 0).collect();
    let mut zero_division = Vec::new();
    let (mut prec_sum, mut rec_sum, mut f1_sum) = (0.0, 0.0, 0.0);
    for &c in &present {
        let tp = confusion.get(c, c);
        let prec = ratio(tp, p[c]);
        let rec = ratio(tp, t[c]);
        if prec.is_none() || rec.is_none() {
            zero_division.push(c);
        }
        let (prec, rec) = (prec.unwrap_or(0.0), rec.unwrap_or(0.0));
        prec_sum += prec;
        rec_sum += rec;
        f1_sum += if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
    }
    let m = present.len() as f64;

    let nf = n as f64;
    let trace = confusion.trace() as f64;
    let pt: f64 = (0..k).map(|c| p[c] as f64 * t[c] as f64).sum();
    let po = trace / nf;
    let pe = pt / (nf * nf);
    let kappa = if pe == 1.0 { 0.0 } else { (po - pe) / (1.0 - pe) };

    let pp: f64 = p.iter().map(|&v| (v as f64).powi(2)).sum();
    let tt: f64 = t.iter().map(|&v| (v as f64).powi(2)).sum();
    let den = ((nf * nf - pp) * (nf * nf - tt)).sqrt();
    let mcc = if den == 0.0 { 0.0 } else { (trace * nf - pt) / den };

    let (auc_macro, auc_skipped) = macro_auc(scores, true_labels, k)?;
    Ok(EvalReport {
        confusion: confusion.clone(),
        accuracy: po,
        auc_macro,
        recall_macro: rec_sum / m,
        precision_macro: prec_sum / m,
        f1_macro: f1_sum / m,
        kappa,
        mcc,
        train_time_s,
        zero_division,
        auc_skipped,
    })
}

/// Confusion matrix and report from labels, predictions and probabilities.
pub fn evaluate(
    true_labels: &[usize],
    predicted: &[usize],
    scores: &[Vec<f64>],
    k: usize,
    train_time_s: f64,
) -> Result<EvalReport> {
    let cm = confusion_matrix(true_labels, predicted, k)?;
    summary(&cm, scores, true_labels, train_time_s)
}
