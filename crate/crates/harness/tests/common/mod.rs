#![allow(dead_code)]

use viinit::synth::{NoiseDensities, SynthConfig, TrajectoryKind};
use viinit_harness::config::{DataSource, RunConfig};

pub fn synth(duration: f64, trajectory: TrajectoryKind, noisy: bool) -> SynthConfig {
    SynthConfig {
        duration,
        trajectory,
        noise: noisy.then(NoiseDensities::euroc),
        ..Default::default()
    }
}

pub fn run_config(synth: SynthConfig) -> RunConfig {
    RunConfig::new(DataSource::Synth(synth))
}
