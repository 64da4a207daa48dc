//! The JSON run report every command prints: command echo, input digest,
//! results payload, and timings. Everything except `timings` is
//! deterministic for a given command line.

use std::time::Instant;

use fgscan_core::Dataset;
use serde_json::{json, Map, Value};

pub struct PhaseClock {
    start: Instant,
    last: Instant,
    phases: Map<String, Value>,
}

impl PhaseClock {
    pub fn start() -> Self {
        let now = Instant::now();
        PhaseClock {
            start: now,
            last: now,
            phases: Map::new(),
        }
    }

    /// Close the current phase under `name`.
    pub fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.phases.insert(
            format!("{name}_s"),
            json!(now.duration_since(self.last).as_secs_f64()),
        );
        self.last = now;
    }

    pub fn finish(mut self) -> Value {
        self.phases.insert(
            "total_s".to_string(),
            json!(self.start.elapsed().as_secs_f64()),
        );
        Value::Object(self.phases)
    }
}

pub fn input_digest(path: &str, ds: &Dataset) -> Value {
    let counts = ds.status_counts();
    json!({
        "path": path,
        "rows": ds.n(),
        "p": ds.p(),
        "status_counts": {
            "censored": counts[0],
            "cause1": counts[1],
            "cause2": counts[2],
        },
    })
}

/// Assemble and print the report to stdout.
pub fn emit(
    command: &str,
    jobs: usize,
    seeds: Value,
    input: Value,
    results: Value,
    timings: Value,
) {
    let report = json!({
        "tool": "fgscan",
        "version": env!("CARGO_PKG_VERSION"),
        "algorithm_notes_sha256": crate::notes_hash(),
        "command": command,
        "argv": std::env::args().collect::<Vec<String>>(),
        "jobs": jobs,
        "seeds": seeds,
        "input": input,
        "results": results,
        "timings": timings,
    });
    // ignore write errors so a closed pipe (e.g. | head) is not a crash
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = serde_json::to_writer_pretty(&mut out, &report);
    let _ = out.write_all(b"\n");
}
