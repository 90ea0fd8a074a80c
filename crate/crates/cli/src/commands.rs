use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use flightnft_core::crypto::hash;
use flightnft_core::ledger::logfile::{render, replay_text, verify_chain, LogFileError};
use flightnft_core::ledger::{Action, LedgerState, Outcome, Principal};
use flightnft_core::proof::{self, PossessionProof, ProofParams, ProofStatement};
use flightnft_core::registry::{check_access, LicenseConditions, NftMetadata, UsageClass};

use crate::config::{BackendName, ClockMode, GroupName, RunConfig, CONFIG_ENV};
use crate::dataset::{Dataset, FlightFile};
use crate::error::{read_bytes, read_text, write_file, CliError, Result};
use crate::export::{encrypt_export, export, ExportRequest};
use crate::runner::{describe_effect, script_run};
use crate::scenario::fleet_run;

#[derive(Debug, Parser)]
#[command(
    name = "flightnft",
    version,
    about = "Flight-data NFT ledger, proofs, privacy exports and fleet scenarios"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, env = CONFIG_ENV, global = true)]
    pub config: Option<PathBuf>,
    /// Ledger log file; overrides `ledger_path` from the config.
    #[arg(long, global = true)]
    pub ledger: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chunk a flight record file and print its Merkle root.
    Ingest {
        file: PathBuf,
        #[arg(long, default_value_t = 4)]
        chunk_size: usize,
    },
    #[command(subcommand)]
    Ledger(LedgerCmd),
    #[command(subcommand)]
    Registry(RegistryCmd),
    #[command(subcommand)]
    Proof(ProofCmd),
    #[command(subcommand)]
    Privacy(PrivacyCmd),
    #[command(subcommand)]
    Fleet(FleetCmd),
    #[command(subcommand)]
    Script(ScriptCmd),
}

#[derive(Debug, Subcommand)]
pub enum LedgerCmd {
    /// Replay a log and print the state report.
    Replay { file: PathBuf },
    /// Recompute the hash chain and compare it with the recorded head.
    VerifyChain { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct Clock {
    /// Logical time of the transaction.
    #[arg(long)]
    pub at: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum RegistryCmd {
    Mint {
        #[arg(long)]
        owner: String,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        mission: String,
        #[arg(long, default_value = "unspecified")]
        uav: String,
        #[arg(long, default_value = "unspecified")]
        region: String,
        #[arg(long, default_value_t = 4)]
        chunk_size: usize,
        #[command(flatten)]
        clock: Clock,
    },
    Transfer {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long)]
        token: u64,
        /// Defaults to `--from`.
        #[arg(long)]
        sender: Option<String>,
        #[command(flatten)]
        clock: Clock,
    },
    Grant {
        #[arg(long)]
        owner: String,
        #[arg(long)]
        grantee: String,
        #[arg(long)]
        token: u64,
        #[arg(long)]
        expires: u64,
        #[arg(long)]
        fee_paid: bool,
        /// Record that the use falls outside the declared region.
        #[arg(long)]
        region_denied: bool,
        #[arg(long, default_value = "view")]
        usage: String,
        #[command(flatten)]
        clock: Clock,
    },
    Revoke {
        #[arg(long)]
        owner: String,
        #[arg(long)]
        grantee: String,
        #[arg(long)]
        token: u64,
        #[command(flatten)]
        clock: Clock,
    },
    Check {
        #[arg(long)]
        grantee: String,
        #[arg(long)]
        token: u64,
        #[arg(long)]
        now: u64,
    },
    History {
        #[arg(long)]
        token: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    Sigma,
    Merkle,
}

impl From<BackendArg> for BackendName {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Sigma => BackendName::Sigma,
            BackendArg::Merkle => BackendName::Merkle,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GroupArg {
    Standard,
    Test,
}

#[derive(Debug, Subcommand)]
pub enum ProofCmd {
    /// Write public proof parameters.
    Setup {
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long, value_enum)]
        group: Option<GroupArg>,
        #[arg(long)]
        challenges: Option<u64>,
        /// Domain label for generator derivation and challenges.
        #[arg(long)]
        seed: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prove possession of a dataset against a token's on-ledger root.
    Prove {
        #[arg(long, value_enum, conflicts_with = "params")]
        backend: Option<BackendArg>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 4)]
        chunk_size: usize,
        #[arg(long)]
        token: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    Verify {
        #[arg(long)]
        proof: PathBuf,
        #[arg(long)]
        token: u64,
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Verify a proof, then record its digest on the ledger.
    Anchor {
        #[arg(long)]
        proof: PathBuf,
        #[arg(long)]
        token: u64,
        #[arg(long)]
        sender: String,
        #[arg(long)]
        params: Option<PathBuf>,
        #[command(flatten)]
        clock: Clock,
    },
}

#[derive(Debug, Subcommand)]
pub enum PrivacyCmd {
    /// Copy a flight record file with the named fields clamped and noised.
    Export {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long = "field", required = true)]
        fields: Vec<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        seed: u64,
        /// `FIELD=LO:HI`; fields without one use their observed range.
        #[arg(long = "clamp")]
        clamps: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Encrypt the output under a key derived from this seed.
        #[arg(long, requires = "out")]
        encrypt_seed: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FleetCmd {
    /// Run a fleet scenario and write its JSONL assignment trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScriptCmd {
    /// Run a script from genesis, writing the log, trace and report.
    Run {
        script: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

/// Output of a command: text for stdout and text for stderr.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn text(s: impl Into<String>) -> Self {
        Output {
            stdout: s.into(),
            stderr: String::new(),
        }
    }
}

struct Context {
    config: RunConfig,
    ledger_path: PathBuf,
}

impl Context {
    fn load_ledger(&self) -> Result<LedgerState> {
        if !self.ledger_path.exists() {
            return Ok(LedgerState::genesis());
        }
        load_log(&self.ledger_path)
    }

    fn time(&self, state: &LedgerState, clock: &Clock) -> Result<u64> {
        match (self.config.clock_mode, clock.at) {
            (ClockMode::Scripted, Some(t)) => Ok(t),
            (ClockMode::Scripted, None) => Ok(state.last_time()),
            (ClockMode::Stepped, None) => Ok(state.last_time() + 1),
            (ClockMode::Stepped, Some(_)) => Err(CliError::other(
                "--at is not allowed with the stepped clock",
            )),
        }
    }

    /// Executes one transaction against the persisted ledger and saves it.
    fn submit(&self, sender: Principal, clock: &Clock, action: Action) -> Result<Output> {
        let mut state = self.load_ledger()?;
        let time = self.time(&state, clock)?;
        let seq = state.next_seq();
        let receipt = state
            .execute(sender, time, action)
            .map_err(|e| CliError::other(e.to_string()))?;
        match receipt.outcome {
            Outcome::Reverted(reason) => Err(CliError::UnexpectedRevert { seq, reason }),
            Outcome::Applied(effect) => {
                write_file(&self.ledger_path, render(&state))?;
                Ok(Output::text(format!(
                    "seq {seq}: {}\n",
                    describe_effect(&effect)
                )))
            }
            Outcome::Unchanged(effect) => Ok(Output::text(format!(
                "not logged: {}\n",
                describe_effect(&effect)
            ))),
        }
    }

    fn principal(&self, name: &str) -> Result<Principal> {
        self.config.principal(name)
    }

    fn params(&self, path: Option<&Path>, backend: BackendName) -> Result<ProofParams> {
        match path {
            Some(p) => ProofParams::from_bytes(&read_bytes(p)?)
                .map_err(|e| CliError::other(format!("{}: {e}", p.display()))),
            None => proof::setup(&self.config.proof.security_config(backend))
                .map_err(|e| CliError::other(e.to_string())),
        }
    }

    fn statement(&self, token: u64) -> Result<ProofStatement> {
        let state = self.load_ledger()?;
        ProofStatement::for_token(&state, token)
            .ok_or_else(|| CliError::other(format!("token {token} has no dataset on the ledger")))
    }

    /// Loads a proof and checks it against the token's on-ledger statement.
    fn verify(
        &self,
        proof_path: &Path,
        token: u64,
        params: Option<&Path>,
    ) -> Result<(PossessionProof, bool)> {
        let p = PossessionProof::from_bytes(&read_bytes(proof_path)?)
            .map_err(|e| CliError::other(format!("{}: {e}", proof_path.display())))?;
        let backend = match p.backend() {
            proof::Backend::SigmaCommit => BackendName::Sigma,
            proof::Backend::MerkleChallenge => BackendName::Merkle,
        };
        let params = self.params(params, backend)?;
        let ok = proof::verify(&p, &self.statement(token)?, &params);
        Ok((p, ok))
    }
}

fn load_log(path: &Path) -> Result<LedgerState> {
    replay_text(&read_text(path)?).map_err(|e| log_error(path, e))
}

fn log_error(path: &Path, e: LogFileError) -> CliError {
    match e {
        LogFileError::Parse { line, reason } => CliError::parse(path, line, reason),
        other => CliError::other(format!("{}: {other}", path.display())),
    }
}

fn parse_clamp(s: &str) -> Result<(String, (f64, f64))> {
    let bad = || CliError::other(format!("invalid --clamp {s}, expected FIELD=LO:HI"));
    let (field, range) = s.split_once('=').ok_or_else(bad)?;
    let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    Ok((field.to_string(), (lo, hi)))
}

pub fn run(cli: Cli) -> Result<Output> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let ledger_path = cli
        .ledger
        .clone()
        .unwrap_or_else(|| config.ledger_path.clone());
    let ctx = Context {
        config,
        ledger_path,
    };
    match cli.command {
        Command::Ingest { file, chunk_size } => {
            let ds = Dataset::load(&file, chunk_size)?;
            Ok(Output::text(format!(
                "root {}\nblocks {}\nrecords {}\n",
                ds.root().to_hex(),
                ds.block_count(),
                ds.record_count
            )))
        }
        Command::Ledger(LedgerCmd::Replay { file }) => {
            Ok(Output::text(crate::report::render(&load_log(&file)?)))
        }
        Command::Ledger(LedgerCmd::VerifyChain { file }) => {
            let log = verify_chain(&read_text(&file)?).map_err(|e| log_error(&file, e))?;
            Ok(Output::text(format!(
                "ok {} transactions, head {}\n",
                log.transactions.len(),
                log.recorded_head.to_hex()
            )))
        }
        Command::Registry(cmd) => registry(&ctx, cmd),
        Command::Proof(cmd) => proof_cmd(&ctx, cmd),
        Command::Privacy(PrivacyCmd::Export {
            dataset,
            fields,
            epsilon,
            delta,
            seed,
            clamps,
            out,
            encrypt_seed,
        }) => {
            let file = FlightFile::load(&dataset)?;
            let clamps = clamps
                .iter()
                .map(|c| parse_clamp(c))
                .collect::<Result<BTreeMap<_, _>>>()?;
            let req = ExportRequest {
                fields,
                epsilon: epsilon.unwrap_or(ctx.config.privacy.epsilon),
                delta: delta.unwrap_or(ctx.config.privacy.delta),
                seed,
                clamps,
            };
            let ex = export(&file, &req)?;
            let mut stderr = String::new();
            for f in &ex.fields {
                if f.observed_bounds {
                    writeln!(
                        stderr,
                        "warning: {} clamped to its observed range [{:?}, {:?}]; pass --clamp to use public bounds",
                        f.field, f.clamp_lo, f.clamp_hi
                    )
                    .unwrap();
                }
            }
            let stdout = match (out, encrypt_seed) {
                (Some(path), Some(s)) => {
                    let bytes = encrypt_export(ex.jsonl.as_bytes(), &s)?;
                    write_file(&path, &bytes)?;
                    format!(
                        "wrote {} encrypted bytes to {}\n",
                        bytes.len(),
                        path.display()
                    )
                }
                (Some(path), None) => {
                    write_file(&path, &ex.jsonl)?;
                    format!(
                        "wrote {} records to {}\n",
                        file.records.len(),
                        path.display()
                    )
                }
                (None, _) => ex.jsonl,
            };
            Ok(Output { stdout, stderr })
        }
        Command::Fleet(FleetCmd::Run { scenario, out }) => {
            let trace = fleet_run(&ctx.config, &scenario)?;
            write_file(&out, &trace)?;
            Ok(Output::text(format!(
                "wrote {} trace lines to {}\n",
                trace.lines().count(),
                out.display()
            )))
        }
        Command::Script(ScriptCmd::Run { script, out_dir }) => {
            let out = script_run(&ctx.config, &script, &out_dir)?;
            Ok(Output::text(out.report))
        }
    }
}

fn registry(ctx: &Context, cmd: RegistryCmd) -> Result<Output> {
    match cmd {
        RegistryCmd::Mint {
            owner,
            dataset,
            mission,
            uav,
            region,
            chunk_size,
            clock,
        } => {
            let ds = Dataset::load(&dataset, chunk_size)?;
            let metadata = NftMetadata {
                mission_id: mission,
                uav_id: uav,
                start_time: ds.start_time,
                end_time: ds.end_time,
                block_count: ds.block_count(),
                declared_region: region,
            };
            ctx.submit(
                ctx.principal(&owner)?,
                &clock,
                Action::MintToken {
                    data_root: ds.root(),
                    metadata,
                },
            )
        }
        RegistryCmd::Transfer {
            from,
            to,
            token,
            sender,
            clock,
        } => {
            let from_p = ctx.principal(&from)?;
            let sender = match sender {
                Some(s) => ctx.principal(&s)?,
                None => from_p,
            };
            let action = Action::TransferToken {
                from: from_p,
                to: ctx.principal(&to)?,
                token_id: token,
            };
            ctx.submit(sender, &clock, action)
        }
        RegistryCmd::Grant {
            owner,
            grantee,
            token,
            expires,
            fee_paid,
            region_denied,
            usage,
            clock,
        } => {
            let usage_class = UsageClass::parse(&usage)
                .ok_or_else(|| CliError::other(format!("unknown usage class {usage}")))?;
            let conditions = LicenseConditions {
                fee_paid,
                region_ok: !region_denied,
                usage_class,
            };
            let action = Action::GrantAccess {
                grantee: ctx.principal(&grantee)?,
                token_id: token,
                expiration: expires,
                conditions,
            };
            ctx.submit(ctx.principal(&owner)?, &clock, action)
        }
        RegistryCmd::Revoke {
            owner,
            grantee,
            token,
            clock,
        } => {
            let action = Action::RevokeAccess {
                grantee: ctx.principal(&grantee)?,
                token_id: token,
            };
            ctx.submit(ctx.principal(&owner)?, &clock, action)
        }
        RegistryCmd::Check {
            grantee,
            token,
            now,
        } => {
            let state = ctx.load_ledger()?;
            let ok = check_access(&state, &ctx.principal(&grantee)?, token, now);
            Ok(Output::text(format!("{ok}\n")))
        }
        RegistryCmd::History { token } => {
            let state = ctx.load_ledger()?;
            let history = state
                .history(token)
                .map_err(|e| CliError::other(e.to_string()))?;
            let mut out = String::new();
            for tx in history {
                writeln!(
                    out,
                    "seq {} t={} {} by {}",
                    tx.seq,
                    tx.logical_time,
                    tx.action.name(),
                    tx.sender
                )
                .unwrap();
            }
            Ok(Output::text(out))
        }
    }
}

fn proof_cmd(ctx: &Context, cmd: ProofCmd) -> Result<Output> {
    match cmd {
        ProofCmd::Setup {
            backend,
            group,
            challenges,
            seed,
            out,
        } => {
            let mut defaults = ctx.config.proof.clone();
            if let Some(g) = group {
                defaults.group = match g {
                    GroupArg::Standard => GroupName::Standard,
                    GroupArg::Test => GroupName::Test,
                };
            }
            if let Some(c) = challenges {
                defaults.challenge_count = c;
            }
            if let Some(s) = seed {
                defaults.label = s;
            }
            let backend = backend.map(BackendName::from).unwrap_or(defaults.backend);
            let params = proof::setup(&defaults.security_config(backend))
                .map_err(|e| CliError::other(e.to_string()))?;
            let bytes = params.to_bytes();
            write_file(&out, &bytes)?;
            Ok(Output::text(format!(
                "{} params written to {}, digest {}\n",
                params.backend.as_str(),
                out.display(),
                hash(&bytes).to_hex()
            )))
        }
        ProofCmd::Prove {
            backend,
            params,
            dataset,
            chunk_size,
            token,
            seed,
            out,
        } => {
            let backend = backend
                .map(BackendName::from)
                .unwrap_or(ctx.config.proof.backend);
            let params = ctx.params(params.as_deref(), backend)?;
            let ds = Dataset::load(&dataset, chunk_size)?;
            let p = proof::prove(&ds.blocks, &ctx.statement(token)?, &params, seed)
                .map_err(|e| CliError::other(e.to_string()))?;
            let bytes = p.to_bytes();
            write_file(&out, &bytes)?;
            Ok(Output::text(format!(
                "{} proof for token {token}: {} bytes, digest {}\n",
                p.backend().as_str(),
                bytes.len(),
                p.digest().to_hex()
            )))
        }
        ProofCmd::Verify {
            proof,
            token,
            params,
        } => {
            let (_, ok) = ctx.verify(&proof, token, params.as_deref())?;
            if !ok {
                return Err(CliError::other(format!(
                    "proof does not verify against token {token}"
                )));
            }
            Ok(Output::text("valid\n"))
        }
        ProofCmd::Anchor {
            proof,
            token,
            sender,
            params,
            clock,
        } => {
            let (p, ok) = ctx.verify(&proof, token, params.as_deref())?;
            if !ok {
                return Err(CliError::other(format!(
                    "proof does not verify against token {token}"
                )));
            }
            let action = Action::AnchorProof {
                token_id: token,
                proof_digest: p.digest(),
            };
            ctx.submit(ctx.principal(&sender)?, &clock, action)
        }
    }
}
