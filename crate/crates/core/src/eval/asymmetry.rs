use serde::{Deserialize, Serialize};

use super::ConfusionMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub class: String,
    /// Share of the true class' documents predicted as `class`.
    pub rate: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassConfusions {
    pub true_class: String,
    /// Nonzero off-diagonal entries of the row, most confused first.
    pub confused_with: Vec<Confusion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricPair {
    pub class: String,
    pub confused_with: String,
    pub rate: f64,
    pub reverse_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AsymmetryReport {
    pub top_k: usize,
    pub classes: Vec<ClassConfusions>,
    pub flags: Vec<AsymmetricPair>,
}

impl AsymmetryReport {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.flags.is_empty()
    }
}

/// Rank each row's off-diagonal mass and flag pairs (X, Y) where Y is among
/// X's `top_k` confusions, X is not among Y's, and more of X goes to Y than
/// of Y to X. Rows without any confusion are omitted.
pub fn asymmetry_report(m: &ConfusionMatrix, top_k: usize) -> AsymmetryReport {
    let n = m.len();
    let ranked: Vec<Vec<(usize, f64, u64)>> = (0..n)
        .map(|i| {
            let sum = m.row_sum(i);
            let mut row: Vec<(usize, f64, u64)> = (0..n)
                .filter(|&j| j != i && m.counts[i][j] > 0)
                .map(|j| (j, m.counts[i][j] as f64 / sum as f64, m.counts[i][j]))
                .collect();
            row.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
            row
        })
        .collect();
    let in_top = |x: usize, y: usize| ranked[x].iter().take(top_k).any(|e| e.0 == y);

    let mut report = AsymmetryReport {
        top_k,
        ..Default::default()
    };
    for (i, row) in ranked.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        report.classes.push(ClassConfusions {
            true_class: m.classes[i].clone(),
            confused_with: row
                .iter()
                .map(|&(j, rate, count)| Confusion {
                    class: m.classes[j].clone(),
                    rate,
                    count,
                })
                .collect(),
        });
        for &(j, rate, count) in row.iter().take(top_k) {
            if !in_top(j, i) && count > m.counts[j][i] {
                let reverse_sum = m.row_sum(j);
                report.flags.push(AsymmetricPair {
                    class: m.classes[i].clone(),
                    confused_with: m.classes[j].clone(),
                    rate,
                    reverse_rate: if reverse_sum == 0 {
                        0.0
                    } else {
                        m.counts[j][i] as f64 / reverse_sum as f64
                    },
                });
            }
        }
    }
    report
}
