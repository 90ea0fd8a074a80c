use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use flightnft_core::crypto::hash;
use flightnft_core::fleet::{Task, UavRegistration, UavStatus};
use flightnft_core::ledger::{Action, Effect, LedgerState, Outcome, Principal, Receipt};
use flightnft_core::proof::{self, PossessionProof, ProofParams, ProofStatement};
use flightnft_core::registry::{check_access, LicenseConditions, NftMetadata, UsageClass};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::config::{BackendName, ClockMode, RunConfig};
use crate::dataset::{Dataset, FlightFile};
use crate::error::{read_text, write_file, CliError, Result};
use crate::export::{encrypt_export, export, ExportRequest};

fn default_chunk_size() -> usize {
    4
}

/// One command of a script or fleet scenario, tagged by `op`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Op {
    Ingest {
        name: String,
        path: PathBuf,
        #[serde(default = "default_chunk_size")]
        chunk_size: usize,
    },
    Mint {
        sender: String,
        dataset: String,
        mission: String,
        uav: String,
        region: String,
    },
    Transfer {
        sender: String,
        #[serde(default)]
        from: Option<String>,
        to: String,
        token: u64,
    },
    Grant {
        sender: String,
        grantee: String,
        token: u64,
        expires: u64,
        fee_paid: bool,
        region_ok: bool,
        usage: String,
    },
    Revoke {
        sender: String,
        grantee: String,
        token: u64,
    },
    Check {
        grantee: String,
        token: u64,
        #[serde(default)]
        expect: Option<bool>,
    },
    Prove {
        name: String,
        dataset: String,
        token: u64,
        #[serde(default)]
        backend: Option<BackendName>,
        seed: u64,
    },
    Verify {
        proof: String,
        token: u64,
        #[serde(default)]
        expect: Option<bool>,
    },
    Anchor {
        sender: String,
        proof: String,
        token: u64,
    },
    Export {
        dataset: String,
        fields: Vec<String>,
        #[serde(default)]
        epsilon: Option<f64>,
        #[serde(default)]
        delta: Option<f64>,
        seed: u64,
        #[serde(default)]
        clamp: BTreeMap<String, [f64; 2]>,
        out: PathBuf,
        #[serde(default)]
        encrypt_seed: Option<String>,
    },
    RegisterUav {
        sender: String,
        location: [f64; 3],
        payload_capacity: f64,
        status: String,
    },
    SubmitTask {
        sender: String,
        task_id: u64,
        location: [f64; 3],
        required_payload: f64,
        urgency: u8,
        #[serde(default)]
        max_radius: Option<f64>,
    },
    CompleteTask {
        sender: String,
        task_id: u64,
    },
    TransferUav {
        sender: String,
        uav: u64,
        to: String,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Ingest { .. } => "ingest",
            Op::Mint { .. } => "mint",
            Op::Transfer { .. } => "transfer",
            Op::Grant { .. } => "grant",
            Op::Revoke { .. } => "revoke",
            Op::Check { .. } => "check",
            Op::Prove { .. } => "prove",
            Op::Verify { .. } => "verify",
            Op::Anchor { .. } => "anchor",
            Op::Export { .. } => "export",
            Op::RegisterUav { .. } => "register_uav",
            Op::SubmitTask { .. } => "submit_task",
            Op::CompleteTask { .. } => "complete_task",
            Op::TransferUav { .. } => "transfer_uav",
        }
    }

    pub fn is_fleet(&self) -> bool {
        matches!(
            self,
            Op::RegisterUav { .. }
                | Op::SubmitTask { .. }
                | Op::CompleteTask { .. }
                | Op::TransferUav { .. }
        )
    }

    pub fn is_transaction(&self) -> bool {
        self.is_fleet()
            || matches!(
                self,
                Op::Mint { .. }
                    | Op::Transfer { .. }
                    | Op::Grant { .. }
                    | Op::Revoke { .. }
                    | Op::Anchor { .. }
            )
    }
}

/// A parsed line. `seq` is the script's own step number.
#[derive(Debug, Clone)]
pub struct Step {
    pub line: usize,
    pub seq: u64,
    pub time: u64,
    pub op: Op,
    pub expect_revert: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    /// Numbered steps (`seq` 1, 2, ...) with any op.
    Script,
    /// Fleet ops only, each with an `at` timestamp.
    Scenario,
}

fn take_u64(obj: &mut Map<String, Value>, key: &str) -> std::result::Result<Option<u64>, String> {
    match obj.remove(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or(format!("{key} must be an unsigned integer")),
    }
}

/// Blank lines and lines starting with `#` are skipped.
pub fn parse_steps(text: &str, path: &Path, kind: FileKind, clock: ClockMode) -> Result<Vec<Step>> {
    let mut steps: Vec<Step> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |reason: String| CliError::parse(path, line, reason);
        let mut obj: Map<String, Value> =
            serde_json::from_str(trimmed).map_err(|e| err(e.to_string()))?;
        let seq = take_u64(&mut obj, "seq").map_err(err)?;
        let at = take_u64(&mut obj, "at").map_err(err)?;
        let expect_revert = match obj.remove("expect_revert") {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(err("expect_revert must be a string".into())),
        };
        let op: Op = serde_json::from_value(Value::Object(obj)).map_err(|e| err(e.to_string()))?;

        let expected_seq = steps.len() as u64 + 1;
        let seq = match (kind, seq) {
            (FileKind::Script, Some(s)) if s == expected_seq => s,
            (FileKind::Script, Some(s)) => {
                return Err(err(format!(
                    "seq {s} out of order, expected {expected_seq}"
                )))
            }
            (FileKind::Script, None) => return Err(err("missing seq".into())),
            (FileKind::Scenario, None) => expected_seq,
            (FileKind::Scenario, Some(_)) => {
                return Err(err("scenario records do not take seq".into()))
            }
        };
        if kind == FileKind::Scenario && !op.is_fleet() {
            return Err(err(format!("{} is not a fleet scenario record", op.name())));
        }
        if expect_revert.is_some() && !op.is_transaction() {
            return Err(err(format!("{} cannot revert", op.name())));
        }
        let time = match (clock, at) {
            (ClockMode::Scripted, Some(t)) => t,
            (ClockMode::Scripted, None) => return Err(err("missing at".into())),
            (ClockMode::Stepped, None) => seq,
            (ClockMode::Stepped, Some(_)) => {
                return Err(err("at is not allowed with the stepped clock".into()))
            }
        };
        if let Some(prev) = steps.last() {
            if time < prev.time {
                return Err(err(format!(
                    "at {time} is earlier than the previous {}",
                    prev.time
                )));
            }
        }
        steps.push(Step {
            line,
            seq,
            time,
            op,
            expect_revert,
        });
    }
    Ok(steps)
}

/// What a step did.
#[derive(Debug, Clone)]
pub enum StepResult {
    Transaction { ledger_seq: u64, receipt: Receipt },
    Info(String),
}

/// Ledger plus the named datasets and proofs a run has produced.
pub struct Session<'c> {
    pub config: &'c RunConfig,
    pub state: LedgerState,
    /// Inputs resolve against this directory.
    pub base_dir: PathBuf,
    /// Exports are written here.
    pub out_dir: PathBuf,
    datasets: BTreeMap<String, (FlightFile, Dataset)>,
    proofs: BTreeMap<String, (PossessionProof, ProofParams)>,
    params: BTreeMap<BackendName, ProofParams>,
}

pub fn describe_effect(effect: &Effect) -> String {
    match effect {
        Effect::Minted { token_id } => format!("minted token {token_id}"),
        Effect::Transferred { token_id, to } => format!("token {token_id} now owned by {to}"),
        Effect::Granted { token_id, grantee } => format!("granted {grantee} on token {token_id}"),
        Effect::Revoked { token_id, grantee } => format!("revoked {grantee} on token {token_id}"),
        Effect::UavRegistered { uav_id, token_id } => {
            format!("registered uav {uav_id} as token {token_id}")
        }
        Effect::Assignment(r) => match (r.selected, r.distance) {
            (Some(uav), Some(d)) => {
                format!("task {} assigned to uav {uav} at distance {d:?}", r.task_id)
            }
            _ => format!("task {} has no feasible uav", r.task_id),
        },
        Effect::TaskCompleted { task_id, uav_id } => {
            format!("task {task_id} completed, uav {uav_id} available")
        }
        Effect::UavTransferred {
            uav_id,
            token_id,
            new_owner,
        } => format!("uav {uav_id} (token {token_id}) now owned by {new_owner}"),
        Effect::ProofAnchored {
            token_id,
            proof_digest,
        } => {
            format!(
                "anchored proof {} on token {token_id}",
                proof_digest.to_hex()
            )
        }
    }
}

impl<'c> Session<'c> {
    pub fn new(config: &'c RunConfig, base_dir: &Path, out_dir: &Path) -> Self {
        Session {
            config,
            state: LedgerState::genesis(),
            base_dir: base_dir.to_path_buf(),
            out_dir: out_dir.to_path_buf(),
            datasets: BTreeMap::new(),
            proofs: BTreeMap::new(),
            params: BTreeMap::new(),
        }
    }

    fn principal(&self, name: &str) -> Result<Principal> {
        self.config.principal(name)
    }

    fn dataset(&self, name: &str) -> Result<&(FlightFile, Dataset)> {
        self.datasets
            .get(name)
            .ok_or_else(|| CliError::other(format!("unknown dataset {name}")))
    }

    fn proof(&self, name: &str) -> Result<&(PossessionProof, ProofParams)> {
        self.proofs
            .get(name)
            .ok_or_else(|| CliError::other(format!("unknown proof {name}")))
    }

    pub fn params(&mut self, backend: BackendName) -> Result<ProofParams> {
        if let Some(p) = self.params.get(&backend) {
            return Ok(p.clone());
        }
        let p = proof::setup(&self.config.proof.security_config(backend))
            .map_err(|e| CliError::other(e.to_string()))?;
        self.params.insert(backend, p.clone());
        Ok(p)
    }

    fn statement(&self, token: u64) -> Result<ProofStatement> {
        ProofStatement::for_token(&self.state, token)
            .ok_or_else(|| CliError::other(format!("token {token} has no dataset on the ledger")))
    }

    /// The sender and action of a transaction op.
    fn action(&self, op: &Op) -> Result<(Principal, Action)> {
        Ok(match op {
            Op::Mint {
                sender,
                dataset,
                mission,
                uav,
                region,
            } => {
                let (_, ds) = self.dataset(dataset)?;
                let metadata = NftMetadata {
                    mission_id: mission.clone(),
                    uav_id: uav.clone(),
                    start_time: ds.start_time,
                    end_time: ds.end_time,
                    block_count: ds.block_count(),
                    declared_region: region.clone(),
                };
                (
                    self.principal(sender)?,
                    Action::MintToken {
                        data_root: ds.root(),
                        metadata,
                    },
                )
            }
            Op::Transfer {
                sender,
                from,
                to,
                token,
            } => {
                let sender = self.principal(sender)?;
                let from = match from {
                    Some(f) => self.principal(f)?,
                    None => sender,
                };
                (
                    sender,
                    Action::TransferToken {
                        from,
                        to: self.principal(to)?,
                        token_id: *token,
                    },
                )
            }
            Op::Grant {
                sender,
                grantee,
                token,
                expires,
                fee_paid,
                region_ok,
                usage,
            } => {
                let usage_class = UsageClass::parse(usage)
                    .ok_or_else(|| CliError::other(format!("unknown usage class {usage}")))?;
                let conditions = LicenseConditions {
                    fee_paid: *fee_paid,
                    region_ok: *region_ok,
                    usage_class,
                };
                let action = Action::GrantAccess {
                    grantee: self.principal(grantee)?,
                    token_id: *token,
                    expiration: *expires,
                    conditions,
                };
                (self.principal(sender)?, action)
            }
            Op::Revoke {
                sender,
                grantee,
                token,
            } => (
                self.principal(sender)?,
                Action::RevokeAccess {
                    grantee: self.principal(grantee)?,
                    token_id: *token,
                },
            ),
            Op::Anchor {
                sender,
                proof,
                token,
            } => {
                let (p, _) = self.proof(proof)?;
                (
                    self.principal(sender)?,
                    Action::AnchorProof {
                        token_id: *token,
                        proof_digest: p.digest(),
                    },
                )
            }
            Op::RegisterUav {
                sender,
                location,
                payload_capacity,
                status,
            } => {
                let status = UavStatus::parse(status)
                    .ok_or_else(|| CliError::other(format!("unknown uav status {status}")))?;
                let reg = UavRegistration {
                    location: *location,
                    payload_capacity: *payload_capacity,
                    status,
                };
                (self.principal(sender)?, Action::RegisterUav(reg))
            }
            Op::SubmitTask {
                sender,
                task_id,
                location,
                required_payload,
                urgency,
                max_radius,
            } => {
                let task = Task {
                    task_id: *task_id,
                    location: *location,
                    required_payload: *required_payload,
                    urgency: *urgency,
                    max_radius: *max_radius,
                };
                (self.principal(sender)?, Action::AssignTask(task))
            }
            Op::CompleteTask { sender, task_id } => (
                self.principal(sender)?,
                Action::CompleteTask { task_id: *task_id },
            ),
            Op::TransferUav { sender, uav, to } => (
                self.principal(sender)?,
                Action::TransferUav {
                    uav_id: *uav,
                    new_owner: self.principal(to)?,
                },
            ),
            other => {
                return Err(CliError::other(format!(
                    "{} is not a transaction",
                    other.name()
                )))
            }
        })
    }

    pub fn run(&mut self, op: &Op, time: u64) -> Result<StepResult> {
        if op.is_transaction() {
            let (sender, action) = self.action(op)?;
            let ledger_seq = self.state.next_seq();
            let receipt = self
                .state
                .execute(sender, time, action)
                .map_err(|e| CliError::other(e.to_string()))?;
            return Ok(StepResult::Transaction {
                ledger_seq,
                receipt,
            });
        }
        let info = match op {
            Op::Ingest {
                name,
                path,
                chunk_size,
            } => {
                let path = self.base_dir.join(path);
                let file = FlightFile::load(&path)?;
                let ds = Dataset::from_records(&file.records, *chunk_size)?;
                let info = format!(
                    "dataset {name}: {} records in {} blocks, root {}",
                    ds.record_count,
                    ds.block_count(),
                    ds.root().to_hex()
                );
                self.datasets.insert(name.clone(), (file, ds));
                info
            }
            Op::Check {
                grantee,
                token,
                expect,
            } => {
                let verdict = check_access(&self.state, &self.principal(grantee)?, *token, time);
                if let Some(e) = expect.filter(|e| *e != verdict) {
                    return Err(CliError::other(format!(
                        "check of {grantee} on token {token} returned {verdict}, expected {e}"
                    )));
                }
                format!("access {grantee} token {token} at {time}: {verdict}")
            }
            Op::Prove {
                name,
                dataset,
                token,
                backend,
                seed,
            } => {
                let backend = backend.unwrap_or(self.config.proof.backend);
                let params = self.params(backend)?;
                let statement = self.statement(*token)?;
                let (_, ds) = self.dataset(dataset)?;
                let p = proof::prove(&ds.blocks, &statement, &params, *seed)
                    .map_err(|e| CliError::other(format!("prove {name}: {e}")))?;
                let info = format!(
                    "proof {name} ({}) for token {token}: {} bytes, digest {}",
                    p.backend().as_str(),
                    p.to_bytes().len(),
                    p.digest().to_hex()
                );
                self.proofs.insert(name.clone(), (p, params));
                info
            }
            Op::Verify {
                proof,
                token,
                expect,
            } => {
                let statement = self.statement(*token)?;
                let (p, params) = self.proof(proof)?;
                let ok = proof::verify(p, &statement, params);
                if let Some(e) = expect.filter(|e| *e != ok) {
                    return Err(CliError::other(format!(
                        "verify {proof} against token {token} returned {ok}, expected {e}"
                    )));
                }
                format!("verify {proof} against token {token}: {ok}")
            }
            Op::Export {
                dataset,
                fields,
                epsilon,
                delta,
                seed,
                clamp,
                out,
                encrypt_seed,
            } => {
                let (file, _) = self.dataset(dataset)?;
                let req = ExportRequest {
                    fields: fields.clone(),
                    epsilon: epsilon.unwrap_or(self.config.privacy.epsilon),
                    delta: delta.unwrap_or(self.config.privacy.delta),
                    seed: *seed,
                    clamps: clamp
                        .iter()
                        .map(|(k, v)| (k.clone(), (v[0], v[1])))
                        .collect(),
                };
                let ex = export(file, &req)?;
                let bytes = match encrypt_seed {
                    Some(s) => encrypt_export(ex.jsonl.as_bytes(), s)?,
                    None => ex.jsonl.into_bytes(),
                };
                write_file(&self.out_dir.join(out), &bytes)?;
                let parts: Vec<String> = ex
                    .fields
                    .iter()
                    .map(|f| {
                        let bounds = if f.observed_bounds { " observed" } else { "" };
                        format!(
                            "{} clamp [{:?}, {:?}]{bounds} sigma {:?}",
                            f.field, f.clamp_lo, f.clamp_hi, f.sigma
                        )
                    })
                    .collect();
                format!(
                    "export {dataset} -> {} ({} bytes, sha256 {}): {}",
                    out.display(),
                    bytes.len(),
                    hash(&bytes).to_hex(),
                    parts.join("; ")
                )
            }
            _ => unreachable!("transactions handled above"),
        };
        Ok(StepResult::Info(info))
    }
}

/// Artifacts of a script run.
#[derive(Debug, Clone)]
pub struct ScriptOutput {
    pub log: String,
    pub trace: String,
    pub report: String,
}

fn check_expectation(
    step: &Step,
    ledger_seq: u64,
    receipt: &Receipt,
) -> std::result::Result<String, CliError> {
    let seq = step.seq;
    match (&receipt.outcome, &step.expect_revert) {
        (Outcome::Reverted(reason), Some(expected)) if reason == expected => {
            Ok(format!("reverted as expected: {reason}"))
        }
        (Outcome::Reverted(reason), Some(expected)) => Err(CliError::UnexpectedRevert {
            seq,
            reason: format!("{reason} (expected \"{expected}\")"),
        }),
        (Outcome::Reverted(reason), None) => Err(CliError::UnexpectedRevert {
            seq,
            reason: reason.clone(),
        }),
        (_, Some(expected)) => Err(CliError::MissingRevert {
            seq,
            expected: expected.clone(),
        }),
        (Outcome::Applied(effect), None) => Ok(format!(
            "ledger seq {ledger_seq}: {}",
            describe_effect(effect)
        )),
        (Outcome::Unchanged(effect), None) => {
            Ok(format!("not logged: {}", describe_effect(effect)))
        }
    }
}

/// Runs a script from genesis. On failure the artifacts up to the failing
/// step are still returned alongside the error.
pub fn run_script(
    config: &RunConfig,
    steps: &[Step],
    base_dir: &Path,
    out_dir: &Path,
) -> (ScriptOutput, Option<CliError>) {
    let mut session = Session::new(config, base_dir, out_dir);
    let mut trace = String::new();
    let mut failure = None;
    for step in steps {
        let head = format!("seq {} t={} {}", step.seq, step.time, step.op.name());
        let line = session.run(&step.op, step.time).and_then(|r| match r {
            StepResult::Info(s) => Ok(s),
            StepResult::Transaction {
                ledger_seq,
                receipt,
            } => check_expectation(step, ledger_seq, &receipt),
        });
        match line {
            Ok(s) => trace.push_str(&format!("{head}: {s}\n")),
            Err(e) => {
                trace.push_str(&format!("{head}: error: {e}\n"));
                failure = Some(e);
                break;
            }
        }
    }
    let out = ScriptOutput {
        log: flightnft_core::ledger::logfile::render(&session.state),
        trace,
        report: crate::report::render(&session.state),
    };
    (out, failure)
}

pub const LOG_FILE: &str = "ledger.log";
pub const TRACE_FILE: &str = "trace.txt";
pub const REPORT_FILE: &str = "report.txt";

/// Parses and runs `script`, writing the log, trace and report into
/// `out_dir`. Paths inside the script resolve against its directory.
pub fn script_run(config: &RunConfig, script: &Path, out_dir: &Path) -> Result<ScriptOutput> {
    let text = read_text(script)?;
    let steps = parse_steps(&text, script, FileKind::Script, config.clock_mode)?;
    let base = script.parent().unwrap_or(Path::new("."));
    let (out, failure) = run_script(config, &steps, base, out_dir);
    write_file(&out_dir.join(LOG_FILE), &out.log)?;
    write_file(&out_dir.join(TRACE_FILE), &out.trace)?;
    write_file(&out_dir.join(REPORT_FILE), &out.report)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
