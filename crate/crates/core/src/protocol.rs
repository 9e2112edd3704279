//! End-to-end authentication runs: split, train, score, decide, report.
//!
//! Every `(node, role)` group of a dataset is split in file order into a
//! training part and a test part. Evaluation is organised in pairs, one per
//! spoofing node:
//!
//! * a fixed legitimate site (one node carries Alice's records): every other
//!   node is paired with Alice, the batch is Alice's test records plus that
//!   node's test records, and the reference is Alice's first record. The
//!   model trains on the training part of every node.
//! * a moving legitimate transmitter (Alice's records span several nodes):
//!   Alice at site `k` is paired with the spoofer at site `k − eve_interval`,
//!   and the reference is Alice's first record at site `k`. The model trains
//!   on Alice's training records only.
//!
//! Each batch is shuffled with a generator seeded by the dataset seed, so
//! tied scores are not resolved in favour of whichever party comes first in
//! the file.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::auth::{
    best_threshold, sweep, threshold_decide, threshold_free, threshold_grid, AuthConfig, AuthMode,
    AuthVerdict, Scorer,
};
use crate::channel::{Dataset, Point};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::features::{normalize, FeatureMode};
use crate::metrics::{confusion, f1, p_ca, p_noa, ConfusionMatrix};
use crate::model::{ModelKind, ModelSettings};
use crate::tensor::Matrix;
use crate::training::LossBreakdown;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ModelKind,
    pub models: ModelSettings,
    pub auth: AuthConfig,
    /// Overrides which node is legitimate on single-site datasets; `None`
    /// keeps the dataset's own labels.
    pub alice_node: Option<u32>,
    pub train_per_node: usize,
    pub test_per_node: usize,
    pub features: FeatureMode,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::TfHvae,
            models: ModelSettings::default(),
            auth: AuthConfig::default(),
            alice_node: None,
            train_per_node: 30,
            test_per_node: 10,
            features: FeatureMode::Magnitude,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self, input_dim: usize) -> Result<()> {
        if self.train_per_node == 0 || self.test_per_node == 0 {
            return Err(Error::Config(
                "train and test counts per node must be positive".into(),
            ));
        }
        self.auth.validate()?;
        self.models.validate(input_dim)
    }

    fn uses_threshold(&self) -> bool {
        self.kind.uses_threshold() || self.auth.mode == AuthMode::ThresholdSweep
    }
}

/// Record indices for one Alice/spoofer comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPlan {
    pub alice_node: u32,
    pub spoofer_node: u32,
    pub reference: usize,
    /// Training-split records of both parties, used to pick thresholds.
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolPlan {
    pub train: Vec<usize>,
    pub pairs: Vec<PairPlan>,
    /// Ground truth per dataset record.
    pub truth: Vec<bool>,
}

struct Group {
    node: u32,
    alice: bool,
    train: Vec<usize>,
    test: Vec<usize>,
}

/// Splits `dataset` and lays out the evaluation pairs.
pub fn plan(dataset: &Dataset, cfg: &ProtocolConfig) -> Result<ProtocolPlan> {
    let truth: Vec<bool> = match cfg.alice_node {
        Some(a) => {
            dataset.geometry.position(a)?;
            let mut sites = dataset
                .records
                .iter()
                .filter(|r| r.is_alice)
                .map(|r| r.node_id);
            let first = sites.next();
            if sites.any(|n| Some(n) != first) {
                return Err(Error::Config(
                    "alice_node cannot be overridden when the legitimate transmitter moves".into(),
                ));
            }
            dataset.records.iter().map(|r| r.node_id == a).collect()
        }
        None => dataset.records.iter().map(|r| r.is_alice).collect(),
    };

    let mut groups: Vec<Group> = Vec::new();
    for range in dataset.groups() {
        let first = range.start;
        let node = dataset.records[first].node_id;
        let alice = truth[first];
        let idx: Vec<usize> = range.collect();
        let cut = cfg.train_per_node.min(idx.len());
        let end = (cut + cfg.test_per_node).min(idx.len());
        groups.push(Group {
            node,
            alice,
            train: idx[..cut].to_vec(),
            test: idx[cut..end].to_vec(),
        });
    }

    let alice: Vec<&Group> = groups.iter().filter(|g| g.alice).collect();
    if alice.is_empty() {
        return Err(Error::Protocol("dataset has no legitimate records".into()));
    }
    let mut alice_nodes: Vec<u32> = alice.iter().map(|g| g.node).collect();
    alice_nodes.dedup();
    let fixed_site = alice_nodes.len() == 1;

    let mut pairs = Vec::new();
    let mut train = Vec::new();
    if fixed_site {
        let a_train: Vec<usize> = alice.iter().flat_map(|g| g.train.iter().copied()).collect();
        let a_test: Vec<usize> = alice.iter().flat_map(|g| g.test.iter().copied()).collect();
        if a_test.is_empty() {
            return Err(Error::Protocol("legitimate test split is empty".into()));
        }
        let reference = *a_train.first().unwrap_or(&a_test[0]);
        for g in groups.iter().filter(|g| !g.alice) {
            if g.test.is_empty() {
                return Err(Error::Protocol(format!(
                    "node {} has an empty test split",
                    g.node
                )));
            }
            pairs.push(PairPlan {
                alice_node: alice_nodes[0],
                spoofer_node: g.node,
                reference,
                validation: a_train.iter().chain(&g.train).copied().collect(),
                test: a_test.iter().chain(&g.test).copied().collect(),
            });
        }
        train.extend(groups.iter().flat_map(|g| g.train.iter().copied()));
    } else {
        let lag = dataset.eve_interval;
        for a in &alice {
            train.extend(&a.train);
            let Some(eve) = a
                .node
                .checked_sub(lag)
                .and_then(|site| groups.iter().find(|g| !g.alice && g.node == site))
            else {
                continue;
            };
            if a.test.is_empty() || eve.test.is_empty() {
                return Err(Error::Protocol(format!(
                    "site {} has an empty test split",
                    a.node
                )));
            }
            pairs.push(PairPlan {
                alice_node: a.node,
                spoofer_node: eve.node,
                reference: *a.train.first().unwrap_or(&a.test[0]),
                validation: a.train.iter().chain(&eve.train).copied().collect(),
                test: a.test.iter().chain(&eve.test).copied().collect(),
            });
        }
    }
    if pairs.is_empty() {
        return Err(Error::Protocol(
            "dataset has no spoofing records to authenticate".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(dataset.seed);
    for p in &mut pairs {
        p.validation.shuffle(&mut rng);
        p.test.shuffle(&mut rng);
    }
    if train.is_empty() {
        return Err(Error::Protocol("training split is empty".into()));
    }
    Ok(ProtocolPlan {
        train,
        pairs,
        truth,
    })
}

/// Normalizes the training split and trains a fresh model of `cfg.kind`.
pub fn fit(dataset: &Dataset, cfg: &ProtocolConfig) -> Result<(Checkpoint, Vec<LossBreakdown>)> {
    dataset.validate()?;
    let plan = plan(dataset, cfg)?;
    let dim = cfg.features.dim(dataset.cir_dim());
    cfg.validate(dim)?;
    let (x, stats) = normalize(
        plan.train.iter().map(|&i| &dataset.records[i]),
        cfg.features,
    )?;
    let mut model = cfg.models.build(cfg.kind, dim)?;
    let history = model.train(&x)?;
    Ok((
        Checkpoint {
            model,
            stats: Some(stats),
        },
        history,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairResult {
    pub alice_node: u32,
    pub spoofer_node: u32,
    /// Distance between the two transmitters, in metres.
    pub distance: f64,
    /// Verdicts in batch order; `index` is the dataset record index.
    pub verdicts: Vec<AuthVerdict>,
    pub confusion: ConfusionMatrix,
}

impl PairResult {
    pub fn f1(&self) -> Option<f64> {
        f1(&self.confusion)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuthReport {
    pub kind: ModelKind,
    pub alpha: f64,
    /// Threshold applied to every pair, for threshold-based rules.
    pub threshold: Option<f64>,
    /// `(ξ, mean validation F1)` over the candidate grid.
    pub threshold_curve: Vec<(f64, f64)>,
    pub pairs: Vec<PairResult>,
    pub history: Vec<LossBreakdown>,
    pub train_count: usize,
}

impl AuthReport {
    /// Mean per-pair F1 with undefined values counted as 0.
    pub fn average_f1(&self) -> f64 {
        if self.pairs.is_empty() {
            return 0.0;
        }
        self.pairs
            .iter()
            .map(|p| p.f1().unwrap_or(0.0))
            .sum::<f64>()
            / self.pairs.len() as f64
    }

    pub fn total_confusion(&self) -> ConfusionMatrix {
        self.pairs.iter().fold(ConfusionMatrix::default(), |a, p| {
            ConfusionMatrix::new(
                a.tl + p.confusion.tl,
                a.fa + p.confusion.fa,
                a.fl + p.confusion.fl,
                a.ta + p.confusion.ta,
            )
        })
    }

    /// `pair_alice,pair_spoofer,record,node_id,time_index,score,decision,ground_truth`
    pub fn write_verdicts<W: Write>(&self, dataset: &Dataset, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "pair_alice",
            "pair_spoofer",
            "record",
            "node_id",
            "time_index",
            "score",
            "decision",
            "ground_truth",
        ])?;
        for p in &self.pairs {
            for v in &p.verdicts {
                let r = dataset.records.get(v.index).ok_or_else(|| {
                    Error::Protocol(format!("verdict for unknown record {}", v.index))
                })?;
                w.write_record([
                    p.alice_node.to_string(),
                    p.spoofer_node.to_string(),
                    v.index.to_string(),
                    r.node_id.to_string(),
                    r.time_index.to_string(),
                    format!("{:e}", v.score),
                    if v.legitimate { "legitimate" } else { "attack" }.to_string(),
                    if v.ground_truth { "alice" } else { "eve" }.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// One row per spoofing node; undefined rates are left empty.
    pub fn write_pairs<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "alice_node",
            "spoofer_node",
            "distance_m",
            "tl",
            "fa",
            "fl",
            "ta",
            "p_ca",
            "p_noa",
            "f1",
        ])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for p in &self.pairs {
            let c = &p.confusion;
            w.write_record([
                p.alice_node.to_string(),
                p.spoofer_node.to_string(),
                p.distance.to_string(),
                c.tl.to_string(),
                c.fa.to_string(),
                c.fl.to_string(),
                c.ta.to_string(),
                opt(p_ca(c)),
                opt(p_noa(c)),
                opt(p.f1()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `epoch,l1,l2,l3,total`, epochs counted from 1.
    pub fn write_history<W: Write>(&self, out: W) -> Result<()> {
        write_history(&self.history, out)
    }

    /// `threshold,mean_f1`
    pub fn write_threshold_curve<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["threshold", "mean_f1"])?;
        for (xi, f) in &self.threshold_curve {
            w.write_record([xi.to_string(), f.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `key,value` summary lines.
    pub fn write_summary<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let c = self.total_confusion();
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let rows = [
            ("model", self.kind.name().to_string()),
            ("alpha", self.alpha.to_string()),
            ("threshold", opt(self.threshold)),
            ("training_records", self.train_count.to_string()),
            ("pairs", self.pairs.len().to_string()),
            ("average_f1", self.average_f1().to_string()),
            ("tl", c.tl.to_string()),
            ("fa", c.fa.to_string()),
            ("fl", c.fl.to_string()),
            ("ta", c.ta.to_string()),
            ("final_loss", opt(self.history.last().map(|l| l.total))),
        ];
        w.write_record(["key", "value"])?;
        for (k, v) in rows {
            w.write_record([k, v.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_history<W: Write>(history: &[LossBreakdown], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "l1", "l2", "l3", "total"])?;
    for (i, l) in history.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            l.l1.to_string(),
            l.l2.to_string(),
            l.l3.to_string(),
            l.total.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn pair_scores(emb: &Matrix, reference: usize, records: &[usize]) -> Vec<f64> {
    records
        .iter()
        .map(|&i| {
            (0..emb.rows())
                .map(|r| (emb.get(r, i) - emb.get(r, reference)).powi(2))
                .sum()
        })
        .collect()
}

/// Authenticates every pair of `dataset` with a trained checkpoint.
pub fn evaluate(
    dataset: &Dataset,
    checkpoint: &Checkpoint,
    cfg: &ProtocolConfig,
    history: Vec<LossBreakdown>,
) -> Result<AuthReport> {
    dataset.validate()?;
    cfg.auth.validate()?;
    let plan = plan(dataset, cfg)?;
    let stats = checkpoint
        .stats
        .as_ref()
        .ok_or_else(|| Error::Protocol("checkpoint has no normalization statistics".into()))?;
    if stats.mode != cfg.features {
        return Err(Error::Config(format!(
            "checkpoint uses {} features, run asks for {}",
            stats.mode.name(),
            cfg.features.name()
        )));
    }
    let emb = checkpoint.model.embed(&stats.apply(&dataset.records)?)?;
    if !emb.is_finite() {
        return Err(Error::Domain("non-finite embedding".into()));
    }
    let truth_of = |idx: &[usize]| idx.iter().map(|&i| plan.truth[i]).collect::<Vec<bool>>();
    let distance = |a: u32, b: u32| -> Result<f64> {
        let (pa, pb): (Point, Point) =
            (dataset.geometry.position(a)?, dataset.geometry.position(b)?);
        Ok(pa.distance(pb))
    };

    let (threshold, threshold_curve) = if cfg.uses_threshold() {
        let batches: Vec<(Vec<f64>, Vec<bool>)> = plan
            .pairs
            .iter()
            .map(|p| {
                (
                    pair_scores(&emb, p.reference, &p.validation),
                    truth_of(&p.validation),
                )
            })
            .collect();
        let grid = if cfg.auth.threshold_grid.is_empty() {
            let all: Vec<f64> = batches.iter().flat_map(|b| b.0.iter().copied()).collect();
            threshold_grid(&all, cfg.auth.threshold_points)
        } else {
            cfg.auth.threshold_grid.clone()
        };
        let curve = sweep(&batches, &grid)?;
        let best = best_threshold(&curve)
            .ok_or_else(|| Error::Protocol("no threshold candidates".into()))?;
        (Some(best.0), curve)
    } else {
        (None, Vec::new())
    };

    let mut pairs = Vec::with_capacity(plan.pairs.len());
    for p in &plan.pairs {
        let s = pair_scores(&emb, p.reference, &p.test);
        let t = truth_of(&p.test);
        let mut verdicts = match threshold {
            Some(xi) => threshold_decide(&s, &t, xi)?,
            None => threshold_free(&s, &t, cfg.auth.alpha)?,
        };
        for v in &mut verdicts {
            v.index = p.test[v.index];
        }
        verdicts.sort_by_key(|v| v.index);
        let confusion = confusion(verdicts.iter().map(|v| (v.legitimate, v.ground_truth)));
        pairs.push(PairResult {
            alice_node: p.alice_node,
            spoofer_node: p.spoofer_node,
            distance: distance(p.alice_node, p.spoofer_node)?,
            verdicts,
            confusion,
        });
    }
    Ok(AuthReport {
        kind: cfg.kind,
        alpha: cfg.auth.alpha,
        threshold,
        threshold_curve,
        pairs,
        history,
        train_count: plan.train.len(),
    })
}

/// Trains on `dataset` and authenticates its test split.
pub fn run_protocol(dataset: &Dataset, cfg: &ProtocolConfig) -> Result<(AuthReport, Checkpoint)> {
    let (checkpoint, history) = fit(dataset, cfg)?;
    let report = evaluate(dataset, &checkpoint, cfg, history)?;
    Ok((report, checkpoint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_mobile_dataset, gen_static_dataset, ScenarioParams};

    fn small_static() -> Dataset {
        let mut s = ScenarioParams::static_default();
        s.cir_dim = 48;
        s.num_taps = 8;
        gen_static_dataset(&s, 3, 6).unwrap()
    }

    fn quick(kind: ModelKind) -> ProtocolConfig {
        let mut c = ProtocolConfig {
            kind,
            train_per_node: 4,
            test_per_node: 2,
            ..ProtocolConfig::default()
        };
        c.models.hvae = crate::hvae::HvaeConfig::new(48, 8, 4);
        c.models.ae_h = 8;
        c.models.vae_h = 8;
        c.models.vae_z = 4;
        c.models.hvae.train.epochs = 3;
        c
    }

    #[test]
    fn static_plan_layout() {
        let ds = small_static();
        let p = plan(&ds, &quick(ModelKind::TfHvae)).unwrap();
        assert_eq!(p.train.len(), 45 * 4);
        assert_eq!(p.pairs.len(), 44);
        assert!(p
            .pairs
            .iter()
            .all(|q| q.test.len() == 4 && q.alice_node == 23));
        assert_eq!(ds.records[p.pairs[0].reference].node_id, 23);

        let mut c = quick(ModelKind::TfHvae);
        c.alice_node = Some(1);
        let p = plan(&ds, &c).unwrap();
        assert!(p
            .pairs
            .iter()
            .all(|q| q.alice_node == 1 && q.spoofer_node != 1));
        c.alice_node = Some(99);
        assert!(plan(&ds, &c).is_err());
    }

    #[test]
    fn batches_are_not_in_file_order() {
        let ds = small_static();
        let p = plan(&ds, &quick(ModelKind::TfHvae)).unwrap();
        let alice_first = p
            .pairs
            .iter()
            .filter(|q| q.test[..2].iter().all(|&i| p.truth[i]))
            .count();
        assert!(alice_first < p.pairs.len() / 2, "{alice_first}");
        assert_eq!(plan(&ds, &quick(ModelKind::TfHvae)).unwrap(), p);
    }

    #[test]
    fn mobile_plan_layout() {
        let mut s = ScenarioParams::mobile_default();
        s.cir_dim = 48;
        s.num_taps = 8;
        let ds = gen_mobile_dataset(&s, 1, 6, 3).unwrap();
        let c = quick(ModelKind::TfHvae);
        let p = plan(&ds, &c).unwrap();
        assert_eq!(p.pairs.len(), 32 - 3);
        assert!(p.pairs.iter().all(|q| q.alice_node == q.spoofer_node + 3));
        assert_eq!(p.train.len(), 32 * 4);
        assert!(p.train.iter().all(|&i| ds.records[i].is_alice));
        let mut c = c;
        c.alice_node = Some(2);
        assert!(plan(&ds, &c).is_err());
    }

    #[test]
    fn every_kind_runs() {
        let ds = small_static();
        for kind in ModelKind::ALL {
            let (r, ck) = run_protocol(&ds, &quick(kind)).unwrap();
            assert_eq!(r.pairs.len(), 44);
            assert_eq!(r.history.len(), 3);
            assert_eq!(r.threshold.is_some(), kind == ModelKind::TbAe);
            assert!(ck.model.is_trained());
            let f = r.average_f1();
            assert!((0.0..=1.0).contains(&f));
            for p in &r.pairs {
                let legit = p.verdicts.iter().filter(|v| v.legitimate).count();
                if kind != ModelKind::TbAe {
                    assert_eq!(legit, 2);
                }
            }
            let mut buf = Vec::new();
            r.write_verdicts(&ds, &mut buf).unwrap();
            assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 44 * 4);
        }
    }

    #[test]
    fn no_alice_is_an_error() {
        let mut ds = small_static();
        for r in &mut ds.records {
            r.is_alice = false;
        }
        assert!(matches!(
            plan(&ds, &quick(ModelKind::TfAe)),
            Err(Error::Protocol(_))
        ));
    }
}
