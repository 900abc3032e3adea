//! Shared fixtures for the criterion benchmarks in `benches/`.

use absf_core::harness::Scenario;
use absf_core::sim::{OptimizerSetup, RunSpec, SimConfig};
use absf_core::{GroupPlacement, NetworkEnv, Rect};
use std::path::Path;

/// The default seven-station scenario with a smaller population and a short
/// clock, so one simulated run finishes in benchmark-friendly time.
pub fn bench_scenario() -> Scenario {
    let mut sc = Scenario::default();
    sc.groups.total_users = Some(60);
    sc.sim.duration_s = 2.0;
    sc.sim.t_interval_ms = 500;
    sc.sim.batches = 4;
    sc
}

pub struct Fixture {
    pub scenario: Scenario,
    pub env: NetworkEnv,
    pub world: Rect,
    pub groups: Vec<GroupPlacement>,
}

impl Fixture {
    pub fn new() -> Fixture {
        let scenario = bench_scenario();
        let env = scenario.build_env(Path::new(".")).expect("environment");
        let world = scenario.world_rect().expect("world");
        let groups = scenario.build_groups(7).expect("groups");
        Fixture {
            scenario,
            env,
            world,
            groups,
        }
    }

    pub fn run_spec(&self) -> RunSpec<'_> {
        RunSpec {
            env: &self.env,
            world: self.world,
            groups: self.groups.clone(),
            mobile: false,
            config: SimConfig {
                duration_s: self.scenario.sim.duration_s,
                t_interval_ms: self.scenario.sim.t_interval_ms,
                batches: self.scenario.sim.batches,
                seed: 7,
                ..SimConfig::default()
            },
            optimizer: OptimizerSetup::new(
                self.scenario.states(self.env.n_stations()).expect("states"),
            ),
        }
    }
}

impl Default for Fixture {
    fn default() -> Self {
        Fixture::new()
    }
}
