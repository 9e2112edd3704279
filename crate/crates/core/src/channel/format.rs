//! Binary dataset files and CSV import.
//!
//! Layout (little-endian):
//!
//! ```text
//! "CIR1" | version u16 | seed u64 | eve_interval u32
//! kind u8 | 12 × f64 scenario fields | num_taps u32 | cir_dim u32
//! node count u32 | (x, y) f64 per node | bob (x, y) f64 | alice u32
//! record count u64 | per record: node_id u32, time_index u32, is_alice u8, D × (re, im) f64
//! CRC32 u32 of every preceding byte
//! ```

use std::fs;
use std::io::Read;
use std::path::Path;

use num_complex::Complex64;

use super::{CirRecord, Dataset, NodeGeometry, Point, ScenarioKind, ScenarioParams};
use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};

pub const DATASET_MAGIC: [u8; 4] = *b"CIR1";
pub const DATASET_VERSION: u16 = 1;
const MAX_IMPORT_NODE: u32 = 1 << 16;

fn scenario_floats(s: &ScenarioParams) -> [f64; 12] {
    [
        s.carrier_frequency,
        s.sample_rate,
        s.k_factor_db,
        s.path_loss_exponent,
        s.rms_delay_spread,
        s.mean_delay,
        s.temporal_correlation,
        s.dynamic_fraction,
        s.spatial_correlation_length,
        s.noise_floor,
        s.tx_gain_dbi,
        s.rx_gain_dbi,
    ]
}

pub fn encode_dataset(d: &Dataset) -> Vec<u8> {
    let mut w = Writer::new(&DATASET_MAGIC, DATASET_VERSION);
    w.u64(d.seed);
    w.u32(d.eve_interval);

    let s = &d.scenario;
    w.u8(s.kind.code());
    w.f64s(&scenario_floats(s));
    w.u32(s.num_taps);
    w.u32(s.cir_dim);

    let g = &d.geometry;
    w.u32(g.node_positions.len() as u32);
    for p in &g.node_positions {
        w.f64(p.x);
        w.f64(p.y);
    }
    w.f64(g.bob_position.x);
    w.f64(g.bob_position.y);
    w.u32(g.alice_node);

    w.u64(d.records.len() as u64);
    for r in &d.records {
        w.u32(r.node_id);
        w.u32(r.time_index);
        w.u8(r.is_alice as u8);
        for c in &r.cir {
            w.f64(c.re);
            w.f64(c.im);
        }
    }
    w.finish()
}

/// Parses a dataset, checking in order: magic, version, length, checksum,
/// then the semantic invariants of the contents.
pub fn decode_dataset(bytes: &[u8]) -> Result<Dataset> {
    let mut r = Reader::open(bytes, &DATASET_MAGIC, DATASET_VERSION)?;
    let seed = r.u64()?;
    let eve_interval = r.u32()?;

    let kind_code = r.u8()?;
    let f = r.f64s(12)?;
    let num_taps = r.u32()?;
    let cir_dim = r.u32()?;

    let nodes = r.u32()?;
    let n = r.ensure(u64::from(nodes), 16)?;
    let node_positions = (0..n)
        .map(|_| Ok(Point::new(r.f64()?, r.f64()?)))
        .collect::<Result<Vec<_>>>()?;
    let bob_position = Point::new(r.f64()?, r.f64()?);
    let alice_node = r.u32()?;

    let record_size = (cir_dim as usize)
        .checked_mul(16)
        .and_then(|b| b.checked_add(9))
        .ok_or_else(|| Error::Malformed("cir_dim too large".into()))?;
    let count = r.u64()?;
    let count = r.ensure(count, record_size)?;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let node_id = r.u32()?;
        let time_index = r.u32()?;
        let flag = r.u8()?;
        let mut cir = Vec::with_capacity(cir_dim as usize);
        for _ in 0..cir_dim {
            cir.push(Complex64::new(r.f64()?, r.f64()?));
        }
        records.push(CirRecord {
            node_id,
            time_index,
            cir,
            is_alice: flag != 0,
        });
    }
    r.finish()?;

    let kind = ScenarioKind::from_code(kind_code)
        .ok_or_else(|| Error::Malformed(format!("unknown scenario kind {kind_code}")))?;
    let scenario = ScenarioParams {
        kind,
        carrier_frequency: f[0],
        sample_rate: f[1],
        k_factor_db: f[2],
        path_loss_exponent: f[3],
        rms_delay_spread: f[4],
        mean_delay: f[5],
        temporal_correlation: f[6],
        dynamic_fraction: f[7],
        spatial_correlation_length: f[8],
        noise_floor: f[9],
        tx_gain_dbi: f[10],
        rx_gain_dbi: f[11],
        num_taps,
        cir_dim,
    };
    let d = Dataset {
        scenario,
        geometry: NodeGeometry {
            node_positions,
            bob_position,
            alice_node,
        },
        seed,
        eve_interval,
        records,
    };
    d.validate().map_err(|e| match e {
        Error::Config(m) => Error::Malformed(m),
        other => other,
    })?;
    Ok(d)
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_dataset(d))?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    decode_dataset(&fs::read(path)?)
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" | "TRUE" | "True" => Some(true),
        "0" | "false" | "FALSE" | "False" => Some(false),
        _ => None,
    }
}

/// Reads externally measured CIRs from CSV with header
/// `node_id,time_index,is_alice,re_0,im_0,…,re_{D−1},im_{D−1}`.
///
/// Imported data carries no geometry; sites are placed one metre apart on a
/// line and the legitimate node is taken from the first `is_alice` row.
pub fn import_csv_from_reader<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 5
        || cols.len().is_multiple_of(2)
        || cols[..3] != ["node_id", "time_index", "is_alice"]
    {
        return Err(Error::Malformed(
            "header must be node_id,time_index,is_alice,re_0,im_0,...".into(),
        ));
    }
    let dim = (cols.len() - 3) / 2;
    for i in 0..dim {
        if cols[3 + 2 * i] != format!("re_{i}") || cols[4 + 2 * i] != format!("im_{i}") {
            return Err(Error::Malformed(format!(
                "unexpected column names at tap {i}"
            )));
        }
    }

    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |what: &str| Error::Malformed(format!("row {}: bad {what}", line + 1));
        if row.len() != cols.len() {
            return Err(bad("field count"));
        }
        let node_id: u32 = row[0].parse().map_err(|_| bad("node_id"))?;
        if node_id == 0 {
            return Err(bad("node_id (must be ≥ 1)"));
        }
        let time_index: u32 = row[1].parse().map_err(|_| bad("time_index"))?;
        let is_alice = parse_flag(&row[2]).ok_or_else(|| bad("is_alice"))?;
        let mut cir = Vec::with_capacity(dim);
        for i in 0..dim {
            let re: f64 = row[3 + 2 * i].parse().map_err(|_| bad("tap value"))?;
            let im: f64 = row[4 + 2 * i].parse().map_err(|_| bad("tap value"))?;
            if !re.is_finite() || !im.is_finite() {
                return Err(bad("tap value (non-finite)"));
            }
            cir.push(Complex64::new(re, im));
        }
        records.push(CirRecord {
            node_id,
            time_index,
            cir,
            is_alice,
        });
    }
    if records.is_empty() {
        return Err(Error::Malformed("no records".into()));
    }

    let max_node = records.iter().map(|r| r.node_id).max().unwrap_or(1);
    if max_node > MAX_IMPORT_NODE {
        return Err(Error::Malformed(format!(
            "node_id {max_node} exceeds {MAX_IMPORT_NODE}"
        )));
    }
    let alice_node = records.iter().find(|r| r.is_alice).map_or(1, |r| r.node_id);
    let geometry = NodeGeometry {
        node_positions: (1..=max_node).map(|i| Point::new(i as f64, 0.0)).collect(),
        bob_position: Point::new(0.0, 1.0),
        alice_node,
    };
    Ok(Dataset {
        scenario: ScenarioParams::external(dim as u32),
        geometry,
        seed: 0,
        eve_interval: 0,
        records,
    })
}

pub fn import_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    import_csv_from_reader(fs::File::open(path)?)
}
