//! Identity rows, parallel task execution and the JSON report.

use std::collections::BTreeMap;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use bvkit::error::Result;
use rayon::prelude::*;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Identity {
    pub name: String,
    pub reference: String,
    pub status: Status,
    pub witness: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Identity {
    pub fn new(name: impl Into<String>, reference: &str, pass: bool, witness: Option<String>) -> Identity {
        Identity {
            name: name.into(),
            reference: reference.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            witness,
        }
    }

    pub fn pass(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Independent unit of work yielding one or more identities.
pub struct Task {
    pub label: String,
    pub run: Box<dyn FnOnce() -> Result<Vec<Identity>> + Send>,
}

impl Task {
    pub fn new(label: impl Into<String>, run: impl FnOnce() -> Result<Vec<Identity>> + Send + 'static) -> Task {
        Task {
            label: label.into(),
            run: Box::new(run),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Nondeterministic fields, kept apart from the identities.
#[derive(Debug, Serialize)]
pub struct Timing {
    pub started_unix: u64,
    pub total_seconds: f64,
    pub per_task: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub identities: Vec<Identity>,
    pub summary: Summary,
    pub timing: Timing,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.summary.failed == 0 && self.summary.total > 0
    }
}

/// Runs the tasks in parallel and assembles the identities sorted by name.
pub fn run_tasks(command: &str, config: serde_json::Value, tasks: Vec<Task>) -> Result<Report> {
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let start = Instant::now();
    let results: Vec<(String, f64, Result<Vec<Identity>>)> = tasks
        .into_par_iter()
        .map(|t| {
            let s = Instant::now();
            let r = (t.run)();
            (t.label, s.elapsed().as_secs_f64(), r)
        })
        .collect();
    let mut identities = Vec::new();
    let mut per_task = BTreeMap::new();
    for (label, secs, r) in results {
        identities.extend(r?);
        per_task.insert(label, secs);
    }
    identities.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = identities.iter().filter(|i| i.pass()).count();
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        command: command.into(),
        config,
        summary: Summary {
            total: identities.len(),
            passed,
            failed: identities.len() - passed,
        },
        identities,
        timing: Timing {
            started_unix,
            total_seconds: start.elapsed().as_secs_f64(),
            per_task,
        },
    })
}

/// Human-readable summary lines.
pub fn print_summary(r: &Report) {
    for i in &r.identities {
        match (&i.status, &i.witness) {
            (Status::Pass, _) => println!("PASS  {}", i.name),
            (Status::Fail, Some(w)) => println!("FAIL  {}  [{}]", i.name, w),
            (Status::Fail, None) => println!("FAIL  {}", i.name),
        }
    }
    println!("{}: {}/{} identities passed", r.command, r.summary.passed, r.summary.total);
}
