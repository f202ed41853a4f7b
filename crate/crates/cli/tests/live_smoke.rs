//! Live endpoint smoke test. Ignored by default; run with
//! `ROBOPLAN_BACKEND_CONFIG=path/to/backend.toml cargo test -p roboplan-cli --test live_smoke -- --ignored`.

use std::path::PathBuf;
use std::process::Command;

#[test]
#[ignore = "needs a live chat endpoint and credential"]
fn live_planner_answers_one_elemental_task() {
    let config = std::env::var("ROBOPLAN_BACKEND_CONFIG").expect("ROBOPLAN_BACKEND_CONFIG is set");
    let task = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmark/tasks/elemental_01_desk_lamp.json");
    let out = Command::new(env!("CARGO_BIN_EXE_roboplan"))
        .args(["plan", "--planner", "llm", "--backend-config", &config, "--task"])
        .arg(task)
        .output()
        .unwrap();
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    if code == Some(0) {
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("plan {"));
    }
}
