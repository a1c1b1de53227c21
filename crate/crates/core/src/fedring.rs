//! Federated orchestration.
//!
//! In the ring, clients train one after another on their own shard and
//! hand their parameters to the next client; one round is one full loop
//! over all clients in id order. After every round the parameters held
//! by the last client are evaluated on the test set.
//!
//! The hub-spoke baseline broadcasts a global model, lets every client
//! train from it, and replaces it with the element-wise mean.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::Sample;
use crate::error::{Error, Result};
use crate::qweights::QuantumWeightStore;
use crate::seeds::{client_rng, derive_rng, STREAM_PARTITION};
use crate::teleport::teleport_weights;
use crate::trainkit::{evaluate, train_local, Classifier, ClassicalMlp, LocalTraining, LossTally, RoundMetrics, Trainable};
use crate::vqc::VqcModel;

pub const DEFAULT_CLIENTS: usize = 3;
pub const DEFAULT_ROUNDS: usize = 100;
pub const DEFAULT_LOCAL_EPOCHS: usize = 5;

/// How parameters move from one ring client to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transport {
    #[default]
    Copy,
    /// Weight-by-weight teleportation; quantum-weight models only.
    Teleport,
}

/// The three model variants.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Classical(ClassicalMlp),
    Vqc(VqcModel),
    QuantumWeights(QuantumWeightStore),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Classical(_) => "cfl",
            Model::Vqc(_) => "qfl-classical",
            Model::QuantumWeights(_) => "qfl-quantum",
        }
    }

    fn same_variant(&self, other: &Model) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other) && self.params().len() == other.params().len()
    }

    fn as_trainable_mut(&mut self) -> &mut dyn Trainable {
        match self {
            Model::Classical(m) => m,
            Model::Vqc(m) => m,
            Model::QuantumWeights(m) => m,
        }
    }

    fn as_trainable(&self) -> &dyn Trainable {
        match self {
            Model::Classical(m) => m,
            Model::Vqc(m) => m,
            Model::QuantumWeights(m) => m,
        }
    }

    pub fn params(&self) -> &[f64] {
        self.as_trainable().params()
    }

    /// Overwrites the parameters with `values` (same length).
    pub fn load_params(&mut self, values: &[f64]) -> Result<()> {
        let params = self.as_trainable_mut().params_mut();
        if params.len() != values.len() {
            return Err(Error::LengthMismatch {
                what: "incoming parameters",
                expected: params.len(),
                actual: values.len(),
            });
        }
        params.copy_from_slice(values);
        Ok(())
    }

    pub fn train<R: Rng + ?Sized>(&mut self, data: &[Sample], epochs: usize, hp: &LocalTraining, rng: &mut R) -> Result<LossTally> {
        train_local(self.as_trainable_mut(), data, epochs, hp, rng)
    }
}

impl Classifier for Model {
    fn logits(&self, features: &[f64; 2]) -> Result<[f64; 2]> {
        self.as_trainable().logits(features)
    }
}

/// One ring member.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub client_id: usize,
    pub shard: Vec<Sample>,
    pub model: Model,
    pub rng: ChaCha8Rng,
}

impl ClientState {
    /// Clients `0..K` with one shard each, a copy of `initial`, and their
    /// own training rng derived from `seed`.
    pub fn from_shards(shards: Vec<Vec<Sample>>, initial: &Model, seed: u64) -> Vec<ClientState> {
        shards
            .into_iter()
            .enumerate()
            .map(|(client_id, shard)| ClientState {
                client_id,
                shard,
                model: initial.clone(),
                rng: client_rng(seed, client_id),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingSchedule {
    pub num_clients: usize,
    pub num_rounds: usize,
    pub local_epochs: usize,
    pub transport: Transport,
    pub training: LocalTraining,
    /// Record real elapsed time in the metrics; otherwise `wall_ms` is 0
    /// and metrics are fully reproducible.
    pub record_wall_time: bool,
}

impl Default for RingSchedule {
    fn default() -> Self {
        RingSchedule {
            num_clients: DEFAULT_CLIENTS,
            num_rounds: DEFAULT_ROUNDS,
            local_epochs: DEFAULT_LOCAL_EPOCHS,
            transport: Transport::Copy,
            training: LocalTraining::default(),
            record_wall_time: false,
        }
    }
}

impl RingSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.num_clients == 0 || self.num_rounds == 0 || self.local_epochs == 0 {
            return Err(Error::Config(format!(
                "clients, rounds and local epochs must all be at least 1 (got {}, {}, {})",
                self.num_clients, self.num_rounds, self.local_epochs
            )));
        }
        if self.training.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub model: Model,
    pub metrics: Vec<RoundMetrics>,
}

/// Seeded shuffle of sample indices, cut into `k` contiguous pieces whose
/// sizes differ by at most one. Each shard keeps the dataset's order.
pub fn partition(data: &[Sample], k: usize, seed: u64) -> Result<Vec<Vec<Sample>>> {
    if k == 0 || k > data.len() {
        return Err(Error::Config(format!("cannot split {} samples across {k} clients", data.len())));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut derive_rng(seed, STREAM_PARTITION));
    let base = data.len() / k;
    let extra = data.len() % k;
    let mut shards = Vec::with_capacity(k);
    let mut start = 0;
    for shard_id in 0..k {
        let len = base + usize::from(shard_id < extra);
        let mut indices = order[start..start + len].to_vec();
        indices.sort_unstable();
        shards.push(indices.into_iter().map(|i| data[i]).collect());
        start += len;
    }
    Ok(shards)
}

fn check_clients(schedule: &RingSchedule, clients: &[ClientState]) -> Result<()> {
    schedule.validate()?;
    if clients.len() != schedule.num_clients {
        return Err(Error::Config(format!(
            "schedule expects {} clients, got {}",
            schedule.num_clients,
            clients.len()
        )));
    }
    let first = &clients[0].model;
    if clients.iter().any(|c| !c.model.same_variant(first)) {
        return Err(Error::Config("all clients must hold the same model variant".into()));
    }
    if let Some(c) = clients.iter().find(|c| c.shard.is_empty()) {
        return Err(Error::Config(format!("client {} has an empty shard", c.client_id)));
    }
    Ok(())
}

/// Moves `model`'s parameters into `next` over the scheduled transport.
fn hand_off(model: &Model, next: &mut Model, transport: Transport, channel: &mut ChaCha8Rng) -> Result<()> {
    match (transport, model) {
        (Transport::Copy, _) => next.load_params(model.params()),
        (Transport::Teleport, Model::QuantumWeights(store)) => {
            let received = teleport_weights(store, channel)?;
            *next = Model::QuantumWeights(received.store);
            Ok(())
        }
        (Transport::Teleport, other) => Err(Error::Config(format!(
            "teleport transport needs quantum weights, not {}",
            other.kind()
        ))),
    }
}

/// Sequential ring training. `channel` drives the Bell measurements when
/// the transport is teleportation and is otherwise unused.
pub fn run_ring(schedule: &RingSchedule, clients: &mut [ClientState], test: &[Sample], channel: &mut ChaCha8Rng) -> Result<RunOutput> {
    check_clients(schedule, clients)?;
    if schedule.transport == Transport::Teleport && !matches!(clients[0].model, Model::QuantumWeights(_)) {
        return Err(Error::Config("teleport transport is only valid for quantum-weight models".into()));
    }
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let k = clients.len();
    let mut metrics = Vec::with_capacity(schedule.num_rounds);
    let start = Instant::now();
    log::info!(
        "ring: {} rounds x {} clients = {} client visits, {} local epochs each",
        schedule.num_rounds,
        k,
        schedule.num_rounds * k,
        schedule.local_epochs
    );
    for round in 1..=schedule.num_rounds {
        let mut tally = LossTally::default();
        for id in 0..k {
            let client = &mut clients[id];
            let visit = client
                .model
                .train(&client.shard, schedule.local_epochs, &schedule.training, &mut client.rng)?;
            tally.add(visit);
            let last_visit = round == schedule.num_rounds && id == k - 1;
            if !last_visit {
                let next = (id + 1) % k;
                let outgoing = clients[id].model.clone();
                hand_off(&outgoing, &mut clients[next].model, schedule.transport, channel).map_err(|source| {
                    Error::HandOff {
                        round,
                        client: id,
                        source: Box::new(source),
                    }
                })?;
            }
        }
        let holder = &clients[k - 1];
        let test_accuracy = evaluate(&holder.model, test)?;
        metrics.push(RoundMetrics {
            round,
            client_id: holder.client_id,
            mean_train_loss: tally.mean(),
            test_accuracy,
            wall_ms: if schedule.record_wall_time {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        });
        log::debug!("round {round}: loss {:.4} acc {:.4}", tally.mean(), test_accuracy);
    }
    Ok(RunOutput {
        model: clients[k - 1].model.clone(),
        metrics,
    })
}

/// Single-client training for `epochs` epochs, the reference a one-client
/// ring must reproduce.
pub fn train_centralized<R: Rng + ?Sized>(model: &mut Model, data: &[Sample], epochs: usize, hp: &LocalTraining, rng: &mut R) -> Result<LossTally> {
    model.train(data, epochs, hp, rng)
}

/// Element-wise mean of client parameter vectors, reduced in ascending
/// client-id order so the result does not depend on how the list is
/// ordered.
pub fn average_params(updates: &[(usize, &[f64])]) -> Result<Vec<f64>> {
    let Some(&(_, first)) = updates.first() else {
        return Err(Error::Empty("client updates"));
    };
    if let Some(&(_, bad)) = updates.iter().find(|(_, p)| p.len() != first.len()) {
        return Err(Error::LengthMismatch {
            what: "client update",
            expected: first.len(),
            actual: bad.len(),
        });
    }
    let mut ordered: Vec<&(usize, &[f64])> = updates.iter().collect();
    ordered.sort_by_key(|(id, _)| *id);
    let mut sum = vec![0.0; first.len()];
    for (_, params) in ordered {
        for (acc, v) in sum.iter_mut().zip(params.iter()) {
            *acc += v;
        }
    }
    let k = updates.len() as f64;
    Ok(sum.into_iter().map(|s| s / k).collect())
}

/// Hub-spoke federated averaging over the same clients. Metrics use the
/// global model; their `client_id` is the hub, numbered after the clients.
pub fn run_hubspoke(schedule: &RingSchedule, clients: &mut [ClientState], test: &[Sample]) -> Result<RunOutput> {
    check_clients(schedule, clients)?;
    if schedule.transport != Transport::Copy {
        return Err(Error::Config("hub-spoke averaging uses classical transport only".into()));
    }
    if let Model::QuantumWeights(_) = clients[0].model {
        return Err(Error::Config("averaging quantum-weight angles is not supported".into()));
    }
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let hub_id = clients.len();
    let mut global = clients[0].model.clone();
    let mut metrics = Vec::with_capacity(schedule.num_rounds);
    let start = Instant::now();
    for round in 1..=schedule.num_rounds {
        let mut tally = LossTally::default();
        for client in clients.iter_mut() {
            client.model.load_params(global.params())?;
            tally.add(client.model.train(&client.shard, schedule.local_epochs, &schedule.training, &mut client.rng)?);
        }
        let updates: Vec<(usize, &[f64])> = clients.iter().map(|c| (c.client_id, c.model.params())).collect();
        let mean = average_params(&updates)?;
        global.load_params(&mean)?;
        metrics.push(RoundMetrics {
            round,
            client_id: hub_id,
            mean_train_loss: tally.mean(),
            test_accuracy: evaluate(&global, test)?,
            wall_ms: if schedule.record_wall_time {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        });
    }
    Ok(RunOutput { model: global, metrics })
}
