//! Criterion 1 of the acceptance gate: the example-reproduction command
//! recomputes the published radius bounds to four decimals, quickly.

use std::process::Command;
use std::time::Instant;

fn report(number: u32, label: &str, pass: bool) {
    println!(
        "acceptance {number} ({label}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn acceptance_1_example_reproduction() {
    let clock = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_aniso-bvp"))
        .arg("reproduce-example")
        .env_remove("ANISO_BVP_SEED")
        .output()
        .expect("binary runs");
    let elapsed = clock.elapsed();

    let json: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("stdout is one JSON report");
    let bounds = &json["payload"]["bounds"];
    let inner = bounds["inner"]["computed"].as_f64().unwrap();
    let outer = bounds["outer"]["computed"].as_f64().unwrap();

    let pass = output.status.success()
        && (inner - 0.5296).abs() <= 5e-5
        && (outer - 2.2430).abs() <= 5e-5
        && json["payload"]["all_pass"] == serde_json::Value::Bool(true)
        && elapsed.as_secs_f64() < 1.0;
    report(1, "example reproduction", pass);
    assert!(
        pass,
        "status {:?}, inner {inner}, outer {outer}, elapsed {elapsed:?}",
        output.status
    );
}
