use std::process::ExitCode;
use std::time::Instant;

use cmera::acceptance::{ run_criterion, AcceptanceConfig, CRITERIA };

/// Wall-clock budgets in seconds, where one is stated for a criterion.
fn budget(id: u8) -> Option<f64> {
    match id {
        1 => Some(5.0),
        3 => Some(10.0),
        10 => Some(30.0),
        _ => None,
    }
}

fn main() -> ExitCode {
    let cfg = AcceptanceConfig::default();
    let mut failures = Vec::new();
    let total = Instant::now();
    for &(id, _) in &CRITERIA {
        let start = Instant::now();
        let mut r = run_criterion(id, &cfg);
        let secs = start.elapsed().as_secs_f64();
        if let Some(limit) = budget(id) {
            if secs > limit {
                r.pass = false;
                r.notes.push(format!("runtime {secs:.2}s exceeds {limit}s"));
            }
        }
        println!("{} ({secs:.2}s)", r.line());
        if !r.pass {
            failures.push(id);
        }
    }
    println!("total {:.2}s", total.elapsed().as_secs_f64());
    if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing criteria: {failures:?}");
        ExitCode::FAILURE
    }
}
