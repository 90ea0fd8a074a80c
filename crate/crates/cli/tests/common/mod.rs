#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn flightnft(args: &[&str], cwd: &Path) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_flightnft"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FLIGHTNFT_CONFIG")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Compares `actual` with the committed golden file, or rewrites the golden
/// file when `FLIGHTNFT_BLESS` is set.
fn compare(name: &str, actual: &[u8]) -> Result<(), String> {
    let file = golden_dir().join(name);
    if std::env::var_os("FLIGHTNFT_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&file, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read(&file).map_err(|e| format!("{}: {e}", file.display()))?;
    if expected != actual {
        return Err(format!("{name} differs from the golden copy"));
    }
    Ok(())
}

fn ok(run: &Run, what: &str) -> Result<(), String> {
    if run.code != 0 {
        return Err(format!("{what} exited {}: {}", run.code, run.stderr.trim()));
    }
    Ok(())
}

/// Ingest, then a script that mints, licenses, proves, verifies, exports
/// and dispatches, then replay and a standalone fleet scenario. Every
/// artifact must match its golden copy byte for byte.
pub fn golden_e2e() -> Result<String, String> {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = tmp.path();
    let fx = fixtures();
    let config = fx.join("config.toml");
    let config = path(&config);

    let ingest = flightnft(
        &[
            "ingest",
            path(&fx.join("flight.jsonl")),
            "--chunk-size",
            "4",
        ],
        out,
    );
    ok(&ingest, "ingest")?;
    compare("ingest.txt", ingest.stdout.as_bytes())?;

    let script = flightnft(
        &[
            "--config",
            config,
            "script",
            "run",
            path(&fx.join("script.jsonl")),
            "--out-dir",
            path(out),
        ],
        out,
    );
    ok(&script, "script run")?;
    for name in ["ledger.log", "trace.txt", "report.txt", "export.jsonl"] {
        let bytes = std::fs::read(out.join(name)).map_err(|e| format!("{name}: {e}"))?;
        compare(name, &bytes)?;
    }

    let replay = flightnft(&["ledger", "replay", path(&out.join("ledger.log"))], out);
    ok(&replay, "ledger replay")?;
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    if replay.stdout != report {
        return Err("replayed report differs from the script report".into());
    }

    let fleet_out = out.join("fleet_trace.jsonl");
    let fleet = flightnft(
        &[
            "--config",
            config,
            "fleet",
            "run",
            "--scenario",
            path(&fx.join("fleet.jsonl")),
            "--out",
            path(&fleet_out),
        ],
        out,
    );
    ok(&fleet, "fleet run")?;
    compare("fleet_trace.jsonl", &std::fs::read(&fleet_out).unwrap())?;

    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "6 artifacts match golden copies, replay reproduces report, {:.2}s",
        elapsed.as_secs_f64()
    ))
}
