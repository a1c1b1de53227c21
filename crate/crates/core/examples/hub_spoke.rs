//! The same clients trained around the ring and under hub-spoke
//! averaging.

use qfl_ring::datagen::generate;
use qfl_ring::fedring::{partition, run_hubspoke, run_ring, ClientState, Model, RingSchedule};
use qfl_ring::seeds::{derive_rng, STREAM_CHANNEL, STREAM_MODEL_INIT};
use qfl_ring::trainkit::ClassicalMlp;

fn main() -> qfl_ring::Result<()> {
    let seed = 42;
    let (dataset, _) = generate(1200, 0.1, 0.5, 0.8, seed)?;
    let initial = Model::Classical(ClassicalMlp::random(&mut derive_rng(seed, STREAM_MODEL_INIT)));
    let schedule = RingSchedule { num_rounds: 20, ..Default::default() };
    let fresh = || -> qfl_ring::Result<Vec<ClientState>> {
        Ok(ClientState::from_shards(partition(&dataset.train, schedule.num_clients, seed)?, &initial, seed))
    };

    let ring = run_ring(&schedule, &mut fresh()?, &dataset.test, &mut derive_rng(seed, STREAM_CHANNEL))?;
    let hub = run_hubspoke(&schedule, &mut fresh()?, &dataset.test)?;
    println!("round  ring acc  hub acc");
    for (r, h) in ring.metrics.iter().zip(&hub.metrics).step_by(2) {
        println!("{:>5}  {:>8.4}  {:>7.4}", r.round, r.test_accuracy, h.test_accuracy);
    }
    Ok(())
}
