//! Verdict reports: a verdict line, a `[verdict]` key-value block and a
//! `[stats]` block.
//!
//! ```text
//! stable
//! [verdict]
//! command = check-stability
//! verdict = stable
//! ...
//! [stats]
//! boxes = 1830
//! wall_time_ms = 12
//! ```

use std::fmt::{self, Write as _};

use dstab_core::formula::Alternation;
use dstab_core::solver::SolverStats;
use dstab_core::IntervalBox;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub verdict: String,
    /// Progress lines printed before the verdict line (deepening runs).
    pub steps: Vec<String>,
    /// Every numeric setting that influenced the verdict, in a fixed order.
    pub params: Vec<(String, String)>,
    pub class: Option<Alternation>,
    pub witness: Option<IntervalBox>,
    pub stats: SolverStats,
    pub workers: usize,
    pub wall_time_ms: u128,
}

impl RunReport {
    pub fn new(command: &str, verdict: impl Into<String>) -> RunReport {
        RunReport {
            command: command.to_string(),
            verdict: verdict.into(),
            steps: Vec::new(),
            params: Vec::new(),
            class: None,
            witness: None,
            stats: SolverStats::default(),
            workers: 1,
            wall_time_ms: 0,
        }
    }

    pub fn param(&mut self, key: &str, value: impl fmt::Display) {
        self.params.push((key.to_string(), value.to_string()));
    }

    /// The `[verdict]` block alone. It depends only on the inputs and the
    /// tool version.
    pub fn verdict_block(&self) -> String {
        let mut s = String::from("[verdict]\n");
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{} = {}", k, v);
        };
        kv("command", &self.command);
        kv("verdict", &self.verdict);
        for (k, v) in &self.params {
            kv(k, v);
        }
        if let Some(c) = &self.class {
            kv("class", c);
        }
        match &self.witness {
            Some(w) => kv("witness", w),
            None => kv("witness", &"none"),
        }
        kv("version", &VERSION);
        s
    }

    /// Everything except `wall_time_ms`.
    pub fn without_wall_time(&self) -> String {
        self.to_string()
            .lines()
            .filter(|l| !l.starts_with("wall_time_ms"))
            .map(|l| format!("{}\n", l))
            .collect()
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.steps {
            writeln!(f, "{}", l)?;
        }
        writeln!(f, "{}", self.verdict)?;
        f.write_str(&self.verdict_block())?;
        writeln!(f, "[stats]")?;
        writeln!(f, "boxes = {}", self.stats.boxes)?;
        writeln!(f, "max_depth = {}", self.stats.max_depth)?;
        writeln!(f, "integrations = {}", self.stats.integrations)?;
        writeln!(f, "workers = {}", self.workers)?;
        writeln!(f, "wall_time_ms = {}", self.wall_time_ms)
    }
}

/// Reads one value back out of a rendered report.
pub fn field<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| {
        let (k, v) = l.split_once(" = ")?;
        (k == key).then_some(v)
    })
}
