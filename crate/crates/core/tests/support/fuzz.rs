//! Random transaction scripts. The generator peeks at the reference model so
//! that a good share of actions target live tokens, UAVs and tasks; the rest
//! are wrong-sender, unknown-id or malformed on purpose.

use rand::seq::SliceRandom;
use rand::Rng;

use flightnft_core::crypto::Digest;
use flightnft_core::fleet::{Task, UavRegistration, UavStatus};
use flightnft_core::ledger::{Action, LedgerState, Principal, Receipt};
use flightnft_core::registry::{LicenseConditions, NftMetadata, UsageClass};

use super::model::{Expect, Model};

pub struct Step {
    pub sender: Principal,
    pub time: u64,
    pub action: Action,
}

pub fn principals(n: usize) -> Vec<Principal> {
    (0..n)
        .map(|i| Principal::derive(b"fuzz", &format!("p{i}")))
        .collect()
}

fn digest<R: Rng>(rng: &mut R) -> Digest {
    Digest(rng.gen())
}

fn grid_position<R: Rng>(rng: &mut R) -> [f64; 3] {
    // Integer grid so distance ties actually occur.
    [
        rng.gen_range(-20..=20) as f64,
        rng.gen_range(-20..=20) as f64,
        rng.gen_range(0..=3) as f64,
    ]
}

fn pick_token<R: Rng>(rng: &mut R, model: &Model) -> u64 {
    if model.owners.is_empty() || rng.gen_bool(0.08) {
        rng.gen_range(1..=model.owners.len() as u64 + 3)
    } else {
        rng.gen_range(1..=model.owners.len() as u64)
    }
}

fn pick_sender<R: Rng>(rng: &mut R, ps: &[Principal], likely: Option<Principal>) -> Principal {
    match likely {
        Some(p) if rng.gen_bool(0.6) => p,
        _ => *ps.choose(rng).unwrap(),
    }
}

pub fn conditions<R: Rng>(rng: &mut R) -> LicenseConditions {
    LicenseConditions {
        fee_paid: rng.gen_bool(0.8),
        region_ok: rng.gen_bool(0.8),
        usage_class: *[
            UsageClass::View,
            UsageClass::Derive,
            UsageClass::Redistribute,
        ]
        .choose(rng)
        .unwrap(),
    }
}

pub fn random_task<R: Rng>(rng: &mut R, task_id: u64) -> Task {
    Task {
        task_id,
        location: grid_position(rng),
        required_payload: rng.gen_range(1..=8) as f64 * 0.5,
        urgency: rng.gen_range(0..=3),
        max_radius: if rng.gen_bool(0.5) {
            Some(rng.gen_range(0..=30) as f64)
        } else {
            None
        },
    }
}

pub fn next_step<R: Rng>(rng: &mut R, ps: &[Principal], model: &Model, time: &mut u64) -> Step {
    if rng.gen_bool(0.3) {
        *time += rng.gen_range(1..=5);
    }
    let t = *time;
    let roll = rng.gen_range(0..100);
    let (sender, action) = match roll {
        0..=14 => {
            let start = rng.gen_range(0..100);
            let metadata = NftMetadata {
                mission_id: format!("m{}", rng.gen_range(0..1000)),
                uav_id: format!("u{}", rng.gen_range(0..10)),
                start_time: start,
                end_time: if rng.gen_bool(0.9) {
                    start + rng.gen_range(0..50)
                } else {
                    start.saturating_sub(1)
                },
                block_count: if rng.gen_bool(0.95) {
                    rng.gen_range(1..64)
                } else {
                    0
                },
                declared_region: "r".into(),
            };
            (
                *ps.choose(rng).unwrap(),
                Action::MintToken {
                    data_root: digest(rng),
                    metadata,
                },
            )
        }
        15..=34 => {
            let token_id = pick_token(rng, model);
            let owner = model.owner(token_id);
            let sender = pick_sender(rng, ps, owner);
            let from = if rng.gen_bool(0.85) {
                owner.unwrap_or(sender)
            } else {
                *ps.choose(rng).unwrap()
            };
            (
                sender,
                Action::TransferToken {
                    from,
                    to: *ps.choose(rng).unwrap(),
                    token_id,
                },
            )
        }
        35..=52 => {
            let token_id = pick_token(rng, model);
            let sender = pick_sender(rng, ps, model.owner(token_id));
            let expiration = if rng.gen_bool(0.9) {
                t + rng.gen_range(1..30)
            } else {
                t.saturating_sub(rng.gen_range(0..3))
            };
            (
                sender,
                Action::GrantAccess {
                    grantee: *ps.choose(rng).unwrap(),
                    token_id,
                    expiration,
                    conditions: conditions(rng),
                },
            )
        }
        53..=59 => {
            let token_id = pick_token(rng, model);
            let sender = pick_sender(rng, ps, model.owner(token_id));
            (
                sender,
                Action::RevokeAccess {
                    grantee: *ps.choose(rng).unwrap(),
                    token_id,
                },
            )
        }
        60..=69 => {
            let status = if rng.gen_bool(0.85) {
                UavStatus::Available
            } else if rng.gen_bool(0.7) {
                UavStatus::Maintenance
            } else {
                UavStatus::InMission
            };
            let capacity = if rng.gen_bool(0.95) {
                rng.gen_range(1..=8) as f64 * 0.5
            } else {
                0.0
            };
            (
                *ps.choose(rng).unwrap(),
                Action::RegisterUav(UavRegistration {
                    location: grid_position(rng),
                    payload_capacity: capacity,
                    status,
                }),
            )
        }
        70..=81 => {
            let task_id = if !model.tasks.is_empty() && rng.gen_bool(0.05) {
                *model.tasks.keys().next().unwrap()
            } else {
                rng.gen_range(1..1_000_000)
            };
            (
                *ps.choose(rng).unwrap(),
                Action::AssignTask(random_task(rng, task_id)),
            )
        }
        82..=89 => {
            let active: Vec<(u64, u64)> = model
                .tasks
                .iter()
                .filter(|(_, (_, a))| *a)
                .map(|(k, (u, _))| (*k, *u))
                .collect();
            match active.choose(rng) {
                Some(&(task_id, uav_id)) => {
                    let owner = model.uavs[uav_id as usize - 1].owner;
                    (
                        pick_sender(rng, ps, Some(owner)),
                        Action::CompleteTask { task_id },
                    )
                }
                None => (
                    *ps.choose(rng).unwrap(),
                    Action::CompleteTask {
                        task_id: rng.gen_range(1..10),
                    },
                ),
            }
        }
        90..=95 => {
            let uav_id = rng.gen_range(1..=model.uavs.len() as u64 + 1);
            let owner = model.uavs.get(uav_id as usize - 1).map(|u| u.owner);
            (
                pick_sender(rng, ps, owner),
                Action::TransferUav {
                    uav_id,
                    new_owner: *ps.choose(rng).unwrap(),
                },
            )
        }
        _ => {
            let token_id = pick_token(rng, model);
            (
                pick_sender(rng, ps, model.owner(token_id)),
                Action::AnchorProof {
                    token_id,
                    proof_digest: digest(rng),
                },
            )
        }
    };
    Step {
        sender,
        time: t,
        action,
    }
}

/// A script run live against both the ledger and the model.
pub struct Run {
    pub state: LedgerState,
    pub model: Model,
    pub steps: Vec<Step>,
    pub receipts: Vec<Receipt>,
    pub expectations: Vec<Expect>,
}

/// Runs `len` generated steps; `after_each` sees the state after every step.
pub fn run_script<R: Rng>(
    rng: &mut R,
    ps: &[Principal],
    len: usize,
    mut after_each: impl FnMut(&LedgerState, &Model),
) -> Run {
    let mut state = LedgerState::genesis();
    let mut model = Model::default();
    let mut time = 0;
    let mut run = Run {
        state: LedgerState::genesis(),
        model: Model::default(),
        steps: Vec::new(),
        receipts: Vec::new(),
        expectations: Vec::new(),
    };
    for _ in 0..len {
        let step = next_step(rng, ps, &model, &mut time);
        let expect = model.apply(step.sender, step.time, &step.action);
        let receipt = state
            .execute(step.sender, step.time, step.action.clone())
            .expect("generated scripts are well sequenced");
        after_each(&state, &model);
        run.steps.push(step);
        run.receipts.push(receipt);
        run.expectations.push(expect);
    }
    run.state = state;
    run.model = model;
    run
}
