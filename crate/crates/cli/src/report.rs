use std::fmt::Write;

use flightnft_core::fleet::Position;
use flightnft_core::ledger::{Action, LedgerState};
use flightnft_core::registry::check_access;

fn pos(p: &Position) -> String {
    format!("[{:?}, {:?}, {:?}]", p[0], p[1], p[2])
}

/// Plain-text summary of a ledger state. Depends on nothing but the state,
/// so replaying a log reproduces it exactly. Access verdicts are evaluated
/// at the last logged logical time.
pub fn render(state: &LedgerState) -> String {
    let mut out = String::new();
    let now = state.last_time();
    let w = &mut out;
    writeln!(w, "flightnft report").unwrap();
    writeln!(w, "head {}", state.head_digest.to_hex()).unwrap();
    writeln!(w, "transactions {}", state.log().len()).unwrap();
    writeln!(w, "logical_time {now}").unwrap();

    for (id, token) in &state.tokens {
        writeln!(w).unwrap();
        writeln!(w, "token {id}").unwrap();
        match state.uav_for_token(*id) {
            Some(uav) => writeln!(w, "  kind uav {uav}").unwrap(),
            None => writeln!(w, "  kind dataset").unwrap(),
        }
        if let Some(owner) = state.owners.get(id) {
            writeln!(w, "  owner {owner}").unwrap();
        }
        let m = &token.metadata;
        writeln!(w, "  data_root {}", token.data_root.to_hex()).unwrap();
        writeln!(w, "  mission {}", m.mission_id).unwrap();
        writeln!(w, "  uav_label {}", m.uav_id).unwrap();
        writeln!(w, "  window {}..{}", m.start_time, m.end_time).unwrap();
        writeln!(w, "  blocks {}", m.block_count).unwrap();
        writeln!(w, "  region {}", m.declared_region).unwrap();
        let history = state.history(*id).unwrap_or_default();
        let seqs: Vec<String> = history.iter().map(|tx| tx.seq.to_string()).collect();
        writeln!(w, "  history {}", seqs.join(" ")).unwrap();
        for tx in history {
            if let Action::AnchorProof { proof_digest, .. } = &tx.action {
                writeln!(
                    w,
                    "  proof {} seq {} by {}",
                    proof_digest.to_hex(),
                    tx.seq,
                    tx.sender
                )
                .unwrap();
            }
        }
    }

    for ((grantee, token_id), g) in &state.grants {
        writeln!(w).unwrap();
        writeln!(w, "grant token {token_id} grantee {grantee}").unwrap();
        writeln!(w, "  expiration {}", g.expiration).unwrap();
        writeln!(w, "  fee_paid {}", g.conditions.fee_paid).unwrap();
        writeln!(w, "  region_ok {}", g.conditions.region_ok).unwrap();
        writeln!(w, "  usage {}", g.conditions.usage_class.as_str()).unwrap();
        writeln!(w, "  revoked {}", g.revoked).unwrap();
        writeln!(
            w,
            "  access_at {now} {}",
            check_access(state, grantee, *token_id, now)
        )
        .unwrap();
    }

    for (id, u) in &state.uavs {
        writeln!(w).unwrap();
        writeln!(w, "uav {id}").unwrap();
        writeln!(w, "  token {}", u.token_id).unwrap();
        writeln!(w, "  owner {}", u.owner).unwrap();
        writeln!(w, "  status {}", u.status.as_str()).unwrap();
        writeln!(w, "  location {}", pos(&u.location)).unwrap();
        writeln!(w, "  payload_capacity {:?}", u.payload_capacity).unwrap();
    }

    for (id, t) in &state.tasks {
        writeln!(w).unwrap();
        writeln!(w, "task {id}").unwrap();
        writeln!(w, "  uav {}", t.uav_id).unwrap();
        writeln!(w, "  active {}", t.active).unwrap();
        writeln!(w, "  location {}", pos(&t.task.location)).unwrap();
        writeln!(w, "  required_payload {:?}", t.task.required_payload).unwrap();
        writeln!(w, "  urgency {}", t.task.urgency).unwrap();
        match t.task.max_radius {
            Some(r) => writeln!(w, "  max_radius {r:?}").unwrap(),
            None => writeln!(w, "  max_radius none").unwrap(),
        }
    }
    out
}
