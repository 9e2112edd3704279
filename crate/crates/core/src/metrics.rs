//! Confusion counts and the precision/recall-style measures built on them.
//!
//! Rates with a zero denominator are `None` rather than 0.

/// `TL`: Alice accepted, `FA`: Alice rejected, `FL`: Eve accepted,
/// `TA`: Eve rejected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tl: u64,
    pub fa: u64,
    pub fl: u64,
    pub ta: u64,
}

impl ConfusionMatrix {
    pub fn new(tl: u64, fa: u64, fl: u64, ta: u64) -> Self {
        Self { tl, fa, fl, ta }
    }

    pub fn alice_total(&self) -> u64 {
        self.tl + self.fa
    }

    pub fn eve_total(&self) -> u64 {
        self.fl + self.ta
    }

    pub fn total(&self) -> u64 {
        self.alice_total() + self.eve_total()
    }

    /// Adds one outcome: `legitimate` is the decision, `is_alice` the truth.
    pub fn record(&mut self, legitimate: bool, is_alice: bool) {
        match (legitimate, is_alice) {
            (true, true) => self.tl += 1,
            (false, true) => self.fa += 1,
            (true, false) => self.fl += 1,
            (false, false) => self.ta += 1,
        }
    }
}

/// Counts `(decision_is_legitimate, ground_truth_is_alice)` pairs.
pub fn confusion(outcomes: impl IntoIterator<Item = (bool, bool)>) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for (legit, alice) in outcomes {
        cm.record(legit, alice);
    }
    cm
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Correct authentication rate `TL / (TL + FL)`.
pub fn p_ca(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tl, cm.tl + cm.fl)
}

/// Non-omission authentication rate `TL / (TL + FA)`.
pub fn p_noa(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tl, cm.tl + cm.fa)
}

/// `(β² + 1)·P_ca·P_noa / (β²·P_ca + P_noa)`.
///
/// `None` when either rate is undefined, both are zero, or `β` is not a
/// positive finite number.
pub fn f_beta(cm: &ConfusionMatrix, beta: f64) -> Option<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return None;
    }
    let (pca, pnoa) = (p_ca(cm)?, p_noa(cm)?);
    let b2 = beta * beta;
    let den = b2 * pca + pnoa;
    (den > 0.0).then(|| (b2 + 1.0) * pca * pnoa / den)
}

pub fn f1(cm: &ConfusionMatrix) -> Option<f64> {
    f_beta(cm, 1.0)
}
