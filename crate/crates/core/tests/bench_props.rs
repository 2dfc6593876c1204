mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use mapf_lab::bench::{
    aggregate, read_records_csv, run_experiment, write_records_csv, ExperimentConfig, ExperimentRecord, MapSpec,
};
use mapf_lab::high_level::{Outcome, Strategy};
use mapf_lab::instance::ProblemInstance;
use mapf_lab::plan_file::PlanFile;
use mapf_lab::roadmap::build_roadmap;
use mapf_lab::validate_plan;
use proptest::prelude::*;
use proptest::strategy::Strategy as _;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn desk_config(maps: &[&str], seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        maps: maps.iter().map(|m| MapSpec::new(common::data_dir().join(m))).collect(),
        resolutions: vec![1, 2],
        scenarios_per_map: 2,
        agent_base: 2,
        agent_increment: 3,
        time_limit: Duration::from_secs(30),
        node_limit: Some(100),
        max_agents: Some(14),
        seed,
        workers: 2,
        ..ExperimentConfig::default()
    }
}

#[test]
fn protocol_escalates_reproducibly_and_plans_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let config = desk_config(&["empty-8-8.map", "random-32-32-10.map"], 3);
    let out = tmp.path().join("run");
    let records = run_experiment(&config, Some(&out), &|_| {}).unwrap();

    let mut runs: BTreeMap<_, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in &records {
        runs.entry((r.map.clone(), r.resolution, r.scenario, r.strategy))
            .or_default()
            .push(r);
    }
    assert_eq!(runs.len(), 2 * 2 * 2 * 2);
    for recs in runs.values() {
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.agents, 2 + 3 * i);
            assert!(r.agents <= 14);
            if i + 1 < recs.len() {
                assert_eq!(r.outcome, Outcome::Solved);
            }
        }
    }

    let again = run_experiment(&config, None, &|_| {}).unwrap();
    let strip = |rs: &[ExperimentRecord]| -> Vec<ExperimentRecord> {
        rs.iter()
            .map(|r| ExperimentRecord {
                time_ms: 0.0,
                ..r.clone()
            })
            .collect()
    };
    assert_eq!(strip(&records), strip(&again));

    let mut plans = 0;
    for r in records.iter().filter(|r| r.outcome == Outcome::Solved) {
        let stem = r.map.trim_end_matches(".map");
        let path = out.join("plans").join(stem).join(format!(
            "r{}_s{}_n{}_{}.json",
            r.resolution, r.scenario, r.agents, r.strategy
        ));
        let file = PlanFile::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let (map, _) = common::load_map(&r.map);
        let rm = Arc::new(build_roadmap(map, file.resolution, file.robot_width).unwrap());
        let instance = ProblemInstance::new(Arc::clone(&rm), file.tasks()).unwrap();
        let plan = file.plan();
        assert!(validate_plan(&plan, &rm, &instance).unwrap().is_empty());
        assert_eq!(Some(plan.cost()), r.cost);
        plans += 1;
    }
    assert!(plans > 0);
}

#[test]
fn aggregates_are_pure_functions_of_the_records_file() {
    let tmp = tempfile::tempdir().unwrap();
    let config = desk_config(&["empty-8-8.map"], 9);
    let records = run_experiment(&config, None, &|_| {}).unwrap();
    let path = tmp.path().join("records.csv");
    write_records_csv(&records, &path).unwrap();
    let back = read_records_csv(&path).unwrap();
    assert_eq!(back, records);
    assert_eq!(aggregate(&back).unwrap(), aggregate(&records).unwrap());
}

fn record(
    map: usize,
    scenario: usize,
    agents: usize,
    strategy: Strategy,
    solved: bool,
    cost: u64,
    time: u32,
) -> ExperimentRecord {
    ExperimentRecord {
        map: format!("m{map}.map"),
        group: if map.is_multiple_of(2) { "even" } else { "odd" }.into(),
        resolution: 1 + (map as u32 % 2),
        scenario,
        agents,
        strategy,
        outcome: if solved { Outcome::Solved } else { Outcome::Timeout },
        time_ms: time as f64 / 8.0,
        cost: solved.then_some(cost),
        nodes_expanded: time as usize,
    }
}

fn arb_records() -> impl proptest::strategy::Strategy<Value = Vec<ExperimentRecord>> {
    proptest::collection::btree_map(
        (
            0..4usize,
            0..3usize,
            1..6usize,
            prop_oneof![Just(Strategy::MotionCbs), Just(Strategy::PriorityCbswp)],
        ),
        (any::<bool>(), 1..200u64, 0..10_000u32),
        0..60,
    )
    .prop_map(|m| {
        m.into_iter()
            .map(|((map, scenario, agents, strategy), (solved, cost, time))| {
                record(map, scenario, agents * 4, strategy, solved, cost, time)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn aggregation_ignores_record_order(records in arb_records(), seed in any::<u64>()) {
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(aggregate(&records).unwrap(), aggregate(&shuffled).unwrap());
    }

    #[test]
    fn aggregates_are_consistent_with_records(records in arb_records()) {
        let m = aggregate(&records).unwrap();
        for s in &m.success_rate {
            prop_assert!(s.solved <= s.scenarios);
            prop_assert!((s.rate - s.solved as f64 / s.scenarios as f64).abs() < 1e-12);
        }
        let solved = records.iter().filter(|r| r.outcome == Outcome::Solved).count();
        prop_assert_eq!(m.runtime_instances.iter().map(|s| s.times_ms.len()).sum::<usize>(), solved);
        for s in &m.runtime_instances {
            prop_assert!(s.times_ms.windows(2).all(|w| w[0] <= w[1]));
        }
        for c in &m.cost_ratios {
            prop_assert!((c.ratio - c.cbswp_cost as f64 / c.cbs_cost as f64).abs() < 1e-12);
        }
    }
}
