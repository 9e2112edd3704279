use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum separation `c / (2f)` for independent fading.
pub fn half_wavelength(carrier_frequency: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * carrier_frequency)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Transmitter sites and the receiver position.
///
/// Node ids are 1-based: `node_positions[i]` is node `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGeometry {
    pub node_positions: Vec<Point>,
    pub bob_position: Point,
    /// 1-based id of the legitimate transmitter.
    pub alice_node: u32,
}

impl NodeGeometry {
    pub fn node_count(&self) -> usize {
        self.node_positions.len()
    }

    pub fn position(&self, node: u32) -> Result<Point> {
        let count = self.node_count();
        if node == 0 || node as usize > count {
            return Err(Error::InvalidNode { node, count });
        }
        Ok(self.node_positions[node as usize - 1])
    }

    /// Smallest distance between any two nodes or between a node and the receiver.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, &p) in self.node_positions.iter().enumerate() {
            best = best.min(p.distance(self.bob_position));
            for &q in &self.node_positions[i + 1..] {
                best = best.min(p.distance(q));
            }
        }
        best
    }

    /// Checks that the legitimate node exists and every pair of sites is
    /// more than half a wavelength apart.
    pub fn validate(&self, carrier_frequency: f64) -> Result<()> {
        self.position(self.alice_node)?;
        let limit = half_wavelength(carrier_frequency);
        let sep = self.min_separation();
        if sep <= limit {
            return Err(Error::Config(format!(
                "sites {sep:.4} m apart, below half a wavelength ({limit:.4} m)"
            )));
        }
        Ok(())
    }
}

/// Row offsets (m) from the legitimate node along the receiver axis.
const STATIC_ROW_OFFSETS: [f64; 9] = [-4.5, -2.5, -1.5, -0.5, 0.0, 0.5, 1.5, 2.5, 4.5];
/// Column offsets (m) across the receiver axis.
const STATIC_COL_OFFSETS: [f64; 5] = [-1.5, -0.5, 0.0, 0.5, 1.5];
const STATIC_ALICE: Point = Point::new(0.0, 11.5);

/// 45-site grid around the legitimate node at (0, 11.5), receiver at the
/// origin. Neighbouring sites are 0.5 m, 1 m or 2 m apart; node 23 is the
/// centre of the grid.
pub fn static_geometry() -> NodeGeometry {
    let mut node_positions = Vec::with_capacity(45);
    for dy in STATIC_ROW_OFFSETS {
        for dx in STATIC_COL_OFFSETS {
            node_positions.push(Point::new(STATIC_ALICE.x + dx, STATIC_ALICE.y + dy));
        }
    }
    NodeGeometry {
        node_positions,
        bob_position: Point::new(0.0, 0.0),
        alice_node: 23,
    }
}

pub const MOBILE_NODES: usize = 32;
const MOBILE_START: Point = Point::new(272.8874, 150.876);
const MOBILE_BOB: Point = Point::new(274.17, 151.64);
const MOBILE_STEP: f64 = 1.5;

/// 32 sites spaced 1.5 m apart along a closed loop that starts and ends
/// next to the receiver.
pub fn mobile_geometry() -> NodeGeometry {
    let n = MOBILE_NODES as f64;
    let radius = MOBILE_STEP / (2.0 * (std::f64::consts::PI / n).sin());
    // Centre sits on the far side of the start point from the receiver.
    let (ux, uy) = {
        let (dx, dy) = (MOBILE_START.x - MOBILE_BOB.x, MOBILE_START.y - MOBILE_BOB.y);
        let len = dx.hypot(dy);
        (dx / len, dy / len)
    };
    let centre = Point::new(MOBILE_START.x + radius * ux, MOBILE_START.y + radius * uy);
    let phase0 = (MOBILE_START.y - centre.y).atan2(MOBILE_START.x - centre.x);
    let node_positions = (0..MOBILE_NODES)
        .map(|k| {
            let a = phase0 + TAU * k as f64 / n;
            Point::new(centre.x + radius * a.cos(), centre.y + radius * a.sin())
        })
        .collect();
    NodeGeometry {
        node_positions,
        bob_position: MOBILE_BOB,
        alice_node: 1,
    }
}
