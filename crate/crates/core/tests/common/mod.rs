#![allow(dead_code)]

use mimo_aging::chanmodel::{
    self, ArrayGeometry, ChannelTrace, ScenarioConfig, TerminalTrajectory,
};

/// Eight terminals in parallel lanes below a 4×25 array, all driving along
/// the azimuth axis at `speed` m/s; each crosses broadside during the trace.
pub fn street_config(speed: f64, snapshots: usize) -> ScenarioConfig {
    let lanes = [12.0, 16.0, 20.0, 24.0, 28.0, 32.0, 36.0, 40.0];
    let starts = [-16.0, -10.0, -20.0, -6.0, -14.0, -24.0, -4.0, -18.0];
    let terminals = lanes
        .iter()
        .zip(starts)
        .enumerate()
        .map(|(i, (&y, x))| {
            TerminalTrajectory::new([x, y, -4.0 + 0.5 * i as f64], [speed, 0.0, 0.0])
        })
        .collect();
    ScenarioConfig::los(ArrayGeometry::new(4, 25), terminals, snapshots)
}

pub fn street_trace(speed: f64, snapshots: usize) -> ChannelTrace {
    chanmodel::normalize(&chanmodel::generate_los(&street_config(speed, snapshots)).unwrap())
        .unwrap()
}

/// Same terminals, standing still.
pub fn static_trace(snapshots: usize) -> ChannelTrace {
    street_trace(0.0, snapshots)
}
