//! UAV fleet operations on the ledger: registering aircraft as NFTs,
//! nearest-feasible task assignment, task completion and ownership transfer.

use crate::crypto::{hash_value, Decode, DecodeError, Decoder, Encode, Encoder};
use crate::ledger::{Effect, LedgerState, Principal, Revert, TxContext};
use crate::registry::NftMetadata;

pub const REVERT_INVALID_UAV: &str = "invalid UAV fields";
pub const REVERT_INVALID_TASK: &str = "invalid task";
pub const REVERT_DUPLICATE_TASK: &str = "duplicate task id";
pub const REVERT_NOT_OPERATOR: &str = "not the operator";
pub const REVERT_TASK_NOT_ACTIVE: &str = "task not active";
pub const FAILURE_UNKNOWN_UAV: &str = "unknown UAV";
pub const FAILURE_NOT_OWNER: &str = "not current owner";
pub const FAILURE_IN_MISSION: &str = "UAV in mission";

/// Local east/north/up coordinates in meters.
pub type Position = [f64; 3];

pub fn distance(a: &Position, b: &Position) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UavStatus {
    Available,
    InMission,
    Maintenance,
}

impl UavStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            UavStatus::Available => "available",
            UavStatus::InMission => "in_mission",
            UavStatus::Maintenance => "maintenance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "available" => Some(UavStatus::Available),
            "in_mission" => Some(UavStatus::InMission),
            "maintenance" => Some(UavStatus::Maintenance),
            _ => None,
        }
    }
}

impl Encode for UavStatus {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(*self as u8);
    }
}

impl Decode for UavStatus {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        match dec.u8()? {
            0 => Ok(UavStatus::Available),
            1 => Ok(UavStatus::InMission),
            2 => Ok(UavStatus::Maintenance),
            tag => Err(DecodeError::InvalidTag {
                what: "uav status",
                tag,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UavAsset {
    pub uav_id: u64,
    pub location: Position,
    pub payload_capacity: f64,
    pub status: UavStatus,
    pub owner: Principal,
    pub token_id: u64,
}

impl Encode for UavAsset {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.uav_id);
        for c in self.location {
            enc.f64(c);
        }
        enc.f64(self.payload_capacity)
            .value(&self.status)
            .value(&self.owner)
            .u64(self.token_id);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub task_id: u64,
    pub location: Position,
    pub required_payload: f64,
    /// Carried for reporting; selection ignores it.
    pub urgency: u8,
    /// `None` means unbounded.
    pub max_radius: Option<f64>,
}

impl Task {
    pub fn is_valid(&self) -> bool {
        self.location.iter().all(|c| c.is_finite())
            && self.required_payload.is_finite()
            && self.required_payload > 0.0
            && self.max_radius.is_none_or(|r| r.is_finite() && r >= 0.0)
    }
}

impl Encode for Task {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.task_id);
        for c in self.location {
            enc.f64(c);
        }
        enc.f64(self.required_payload)
            .u8(self.urgency)
            .value(&self.max_radius);
    }
}

impl Decode for Task {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Task {
            task_id: dec.u64()?,
            location: [dec.f64()?, dec.f64()?, dec.f64()?],
            required_payload: dec.f64()?,
            urgency: dec.u8()?,
            max_radius: dec.value()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub task: Task,
    pub uav_id: u64,
    pub active: bool,
}

impl Encode for TaskRecord {
    fn encode(&self, enc: &mut Encoder) {
        enc.value(&self.task).u64(self.uav_id).bool(self.active);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentResult {
    pub task_id: u64,
    pub selected: Option<u64>,
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransferStatus {
    Success,
    Failure(String),
}

/// Fields supplied when registering a UAV.
#[derive(Debug, Clone, PartialEq)]
pub struct UavRegistration {
    pub location: Position,
    pub payload_capacity: f64,
    /// `Available` or `Maintenance`.
    pub status: UavStatus,
}

impl UavRegistration {
    pub fn is_valid(&self) -> bool {
        self.location.iter().all(|c| c.is_finite())
            && self.payload_capacity.is_finite()
            && self.payload_capacity > 0.0
            && self.status != UavStatus::InMission
    }
}

impl Encode for UavRegistration {
    fn encode(&self, enc: &mut Encoder) {
        for c in self.location {
            enc.f64(c);
        }
        enc.f64(self.payload_capacity).value(&self.status);
    }
}

impl Decode for UavRegistration {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(UavRegistration {
            location: [dec.f64()?, dec.f64()?, dec.f64()?],
            payload_capacity: dec.f64()?,
            status: dec.value()?,
        })
    }
}

/// Nearest feasible UAV for `task`, scanning in ascending `uav_id` order and
/// keeping the first strict minimum. Returns `(uav_id, distance)`.
pub fn select_uav<'a, I>(fleet: I, task: &Task) -> Option<(u64, f64)>
where
    I: IntoIterator<Item = &'a UavAsset>,
{
    let mut best: Option<(u64, f64)> = None;
    for uav in fleet {
        if uav.status != UavStatus::Available || uav.payload_capacity < task.required_payload {
            continue;
        }
        let d = distance(&uav.location, &task.location);
        if task.max_radius.is_some_and(|r| d > r) {
            continue;
        }
        match best {
            Some((id, bd)) if d > bd || (d == bd && id < uav.uav_id) => {}
            _ => best = Some((uav.uav_id, d)),
        }
    }
    best
}

pub(crate) fn register_uav(
    state: &mut LedgerState,
    ctx: &TxContext,
    reg: &UavRegistration,
) -> Result<Effect, Revert> {
    if !reg.is_valid() {
        return Err(Revert::new(REVERT_INVALID_UAV));
    }
    let uav_id = state.next_uav_id();
    let data_root =
        hash_value(&(uav_id, reg.clone())).map_err(|_| Revert::new(REVERT_INVALID_UAV))?;
    let metadata = NftMetadata {
        mission_id: "uav-asset".to_string(),
        uav_id: uav_id.to_string(),
        start_time: ctx.logical_time,
        end_time: ctx.logical_time,
        block_count: 1,
        declared_region: String::new(),
    };
    let token_id = state.insert_token(ctx.sender, data_root, metadata);
    state.insert_uav(UavAsset {
        uav_id,
        location: reg.location,
        payload_capacity: reg.payload_capacity,
        status: reg.status,
        owner: ctx.sender,
        token_id,
    });
    Ok(Effect::UavRegistered { uav_id, token_id })
}

pub(crate) fn assign_task(state: &mut LedgerState, task: &Task) -> Result<Effect, Revert> {
    if !task.is_valid() {
        return Err(Revert::new(REVERT_INVALID_TASK));
    }
    if state.tasks.contains_key(&task.task_id) {
        return Err(Revert::new(REVERT_DUPLICATE_TASK));
    }
    let Some((uav_id, d)) = select_uav(state.uavs.values(), task) else {
        return Ok(Effect::Assignment(AssignmentResult {
            task_id: task.task_id,
            selected: None,
            distance: None,
        }));
    };
    state
        .uavs
        .get_mut(&uav_id)
        .expect("selected from fleet")
        .status = UavStatus::InMission;
    state.tasks.insert(
        task.task_id,
        TaskRecord {
            task: task.clone(),
            uav_id,
            active: true,
        },
    );
    Ok(Effect::Assignment(AssignmentResult {
        task_id: task.task_id,
        selected: Some(uav_id),
        distance: Some(d),
    }))
}

pub(crate) fn complete_task(
    state: &mut LedgerState,
    ctx: &TxContext,
    task_id: u64,
) -> Result<Effect, Revert> {
    let record = match state.tasks.get(&task_id) {
        Some(r) if r.active => r,
        _ => return Err(Revert::new(REVERT_TASK_NOT_ACTIVE)),
    };
    let uav_id = record.uav_id;
    if state.uavs[&uav_id].owner != ctx.sender {
        return Err(Revert::new(REVERT_NOT_OPERATOR));
    }
    state.tasks.get_mut(&task_id).expect("checked above").active = false;
    state
        .uavs
        .get_mut(&uav_id)
        .expect("task references a UAV")
        .status = UavStatus::Available;
    Ok(Effect::TaskCompleted { task_id, uav_id })
}

/// The validity rule for a UAV transfer: sender owns it and it is not flying
/// a mission.
pub fn transfer_validity(state: &LedgerState, sender: &Principal, uav_id: u64) -> TransferStatus {
    match state.uavs.get(&uav_id) {
        None => TransferStatus::Failure(FAILURE_UNKNOWN_UAV.to_string()),
        Some(u) if u.owner != *sender => TransferStatus::Failure(FAILURE_NOT_OWNER.to_string()),
        Some(u) if u.status == UavStatus::InMission => {
            TransferStatus::Failure(FAILURE_IN_MISSION.to_string())
        }
        Some(_) => TransferStatus::Success,
    }
}

pub(crate) fn transfer_uav(
    state: &mut LedgerState,
    ctx: &TxContext,
    uav_id: u64,
    new_owner: Principal,
) -> Result<Effect, Revert> {
    if let TransferStatus::Failure(reason) = transfer_validity(state, &ctx.sender, uav_id) {
        return Err(Revert::new(reason));
    }
    let uav = state
        .uavs
        .get_mut(&uav_id)
        .expect("validity checked existence");
    uav.owner = new_owner;
    let token_id = uav.token_id;
    state.owners.insert(token_id, new_owner);
    Ok(Effect::UavTransferred {
        uav_id,
        token_id,
        new_owner,
    })
}
