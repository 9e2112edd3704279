//! Scenario-level experiments behind the acceptance suite.
//!
//! Every model kind is trained with the same settings (see [`settings`]).
//! The two auto-encoder baselines differ only in their decision rule, so the
//! auto-encoder is trained once per dataset and evaluated twice.

use cirauth::channel::{gen_mobile_dataset, gen_static_dataset, Dataset, ScenarioParams};
use cirauth::model::ModelKind;
use cirauth::protocol::{evaluate, fit, AuthReport, ProtocolConfig};
use cirauth::training::LossBreakdown;
use cirauth::Result;

/// Records generated per node; the protocol uses 30 for training and 10 for testing.
pub const SAMPLES_PER_NODE: u32 = 40;
pub const EPOCHS: usize = 100;
pub const LEARNING_RATE: f64 = 0.005;
pub const BATCH_SIZE: usize = 16;
pub const KL_WEIGHT: f64 = 1e-4;

/// Protocol settings shared by every scenario run.
pub fn settings(kind: ModelKind, seed: u64) -> ProtocolConfig {
    let mut c = ProtocolConfig {
        kind,
        ..ProtocolConfig::default()
    };
    let t = &mut c.models.hvae.train;
    t.epochs = EPOCHS;
    t.learning_rate = LEARNING_RATE;
    t.batch_size = BATCH_SIZE;
    t.seed = seed;
    c.models.hvae.kl2_weight = KL_WEIGHT;
    c.models.hvae.kl3_weight = KL_WEIGHT;
    c.models.vae_kl_weight = KL_WEIGHT;
    c
}

pub fn static_dataset(seed: u64) -> Result<Dataset> {
    gen_static_dataset(&ScenarioParams::static_default(), seed, SAMPLES_PER_NODE)
}

pub fn mobile_dataset(seed: u64, eve_interval: u32) -> Result<Dataset> {
    gen_mobile_dataset(
        &ScenarioParams::mobile_default(),
        seed,
        SAMPLES_PER_NODE,
        eve_interval,
    )
}

/// Reports for the requested kinds on one dataset, in the order given.
pub fn run_kinds(dataset: &Dataset, kinds: &[ModelKind], seed: u64) -> Result<Vec<AuthReport>> {
    let mut ae: Option<(cirauth::checkpoint::Checkpoint, Vec<LossBreakdown>)> = None;
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let cfg = settings(kind, seed);
        let (checkpoint, history) = match kind {
            ModelKind::TfAe | ModelKind::TbAe => {
                if ae.is_none() {
                    ae = Some(fit(dataset, &settings(ModelKind::TfAe, seed))?);
                }
                ae.clone().expect("trained above")
            }
            _ => fit(dataset, &cfg)?,
        };
        out.push(evaluate(dataset, &checkpoint, &cfg, history)?);
    }
    Ok(out)
}

/// `values[i] ≥ values[i + 1]` throughout (strictly when `strict`).
pub fn ordered(values: &[f64], strict: bool) -> bool {
    values
        .windows(2)
        .all(|w| if strict { w[0] > w[1] } else { w[0] >= w[1] })
}

/// First index `i` with `seq[i] < seq[j]` for some `j < i − band`, i.e. a
/// drop that is not explained by swapping with one of the `band` preceding
/// entries.
pub fn nondecreasing_violation(seq: &[f64], band: usize) -> Option<usize> {
    let mut best = f64::NEG_INFINITY;
    for i in 0..seq.len() {
        if i > band {
            best = best.max(seq[i - band - 1]);
        }
        if seq[i] < best {
            return Some(i);
        }
    }
    None
}

/// Lowest total loss over the run divided by the first-epoch total.
pub fn convergence_ratio(history: &[LossBreakdown]) -> Option<f64> {
    let first = history.first()?.total;
    let min = history
        .iter()
        .map(|l| l.total)
        .fold(f64::INFINITY, f64::min);
    Some(min / first)
}

/// Per-spoofer `(distance, mean F1)` over several reports of the same
/// layout, sorted by distance and then node id. Undefined F1 counts as 0.
pub fn f1_by_distance(reports: &[&AuthReport]) -> Vec<(u32, f64, f64)> {
    let Some(first) = reports.first() else {
        return Vec::new();
    };
    let mut rows: Vec<(u32, f64, f64)> = first
        .pairs
        .iter()
        .map(|p| {
            let total: f64 = reports
                .iter()
                .filter_map(|r| r.pairs.iter().find(|q| q.spoofer_node == p.spoofer_node))
                .map(|q| q.f1().unwrap_or(0.0))
                .sum();
            (p.spoofer_node, p.distance, total / reports.len() as f64)
        })
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering() {
        assert!(ordered(&[0.9, 0.9, 0.8], false));
        assert!(!ordered(&[0.9, 0.9, 0.8], true));
        assert!(ordered(&[0.9, 0.8, 0.7], true));
        assert!(ordered(&[], true));
    }

    #[test]
    fn tolerance_band() {
        assert_eq!(nondecreasing_violation(&[0.1, 0.2, 0.3], 0), None);
        assert_eq!(nondecreasing_violation(&[0.2, 0.1, 0.3], 0), Some(1));
        assert_eq!(nondecreasing_violation(&[0.2, 0.1, 0.3], 1), None);
        assert_eq!(nondecreasing_violation(&[0.3, 0.2, 0.1], 1), Some(2));
        assert_eq!(nondecreasing_violation(&[0.5, 0.6, 0.4, 0.7], 1), Some(2));
    }

    #[test]
    fn ratio() {
        let h: Vec<LossBreakdown> = [10.0, 2.0, 0.05, 0.08]
            .iter()
            .map(|&t| LossBreakdown::new(t, 0.0, 0.0))
            .collect();
        assert_eq!(convergence_ratio(&h), Some(0.005));
        assert_eq!(convergence_ratio(&[]), None);
    }
}
