use std::path::Path;

use flightnft_core::ledger::{Effect, LedgerState, Outcome};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{read_text, Result};
use crate::runner::{parse_steps, FileKind, Session, StepResult};

fn effect_fields(effect: &Effect) -> Value {
    match effect {
        Effect::UavRegistered { uav_id, token_id } => {
            json!({ "uav_id": uav_id, "token_id": token_id })
        }
        Effect::Assignment(r) => json!({
            "task_id": r.task_id,
            "selected": r.selected,
            "distance": r.distance,
        }),
        Effect::TaskCompleted { task_id, uav_id } => {
            json!({ "task_id": task_id, "uav_id": uav_id })
        }
        Effect::UavTransferred {
            uav_id,
            token_id,
            new_owner,
        } => json!({ "uav_id": uav_id, "token_id": token_id, "new_owner": new_owner.to_string() }),
        other => json!({ "effect": format!("{other:?}") }),
    }
}

fn summary(state: &LedgerState) -> Value {
    let uavs: Vec<Value> = state
        .uavs
        .values()
        .map(|u| {
            json!({
                "uav_id": u.uav_id,
                "token_id": u.token_id,
                "owner": u.owner.to_string(),
                "status": u.status.as_str(),
                "location": u.location,
                "payload_capacity": u.payload_capacity,
            })
        })
        .collect();
    let tasks: Vec<Value> = state
        .tasks
        .iter()
        .map(|(id, t)| {
            json!({
                "task_id": id,
                "uav_id": t.uav_id,
                "active": t.active,
                "urgency": t.task.urgency,
            })
        })
        .collect();
    json!({
        "summary": {
            "transactions": state.log().len(),
            "head": state.head_digest.to_hex(),
            "uavs": uavs,
            "tasks": tasks,
        }
    })
}

/// Runs a fleet scenario from genesis and returns the JSONL trace: one line
/// per record, then a final-state summary. Reverts are outcomes here, not
/// errors.
pub fn fleet_run(config: &RunConfig, scenario: &Path) -> Result<String> {
    let text = read_text(scenario)?;
    let steps = parse_steps(
        &text,
        scenario,
        FileKind::Scenario,
        crate::config::ClockMode::Scripted,
    )?;
    let base = scenario.parent().unwrap_or(Path::new("."));
    let mut session = Session::new(config, base, base);
    let mut out = String::new();
    for step in &steps {
        let StepResult::Transaction {
            ledger_seq,
            receipt,
        } = session.run(&step.op, step.time)?
        else {
            unreachable!("scenarios hold fleet transactions only");
        };
        let mut line = json!({
            "record": step.seq,
            "at": step.time,
            "op": step.op.name(),
        });
        let obj = line.as_object_mut().expect("object");
        match &receipt.outcome {
            Outcome::Applied(e) | Outcome::Unchanged(e) => {
                let applied = matches!(receipt.outcome, Outcome::Applied(_));
                obj.insert(
                    "outcome".into(),
                    json!(if applied { "applied" } else { "unchanged" }),
                );
                obj.insert(
                    "ledger_seq".into(),
                    if applied {
                        json!(ledger_seq)
                    } else {
                        Value::Null
                    },
                );
                if let Value::Object(fields) = effect_fields(e) {
                    obj.extend(fields);
                }
            }
            Outcome::Reverted(reason) => {
                obj.insert("outcome".into(), json!("reverted"));
                obj.insert("reason".into(), json!(reason));
            }
        }
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out.push_str(&summary(&session.state).to_string());
    out.push('\n');
    Ok(out)
}
