//! Pass/fail bookkeeping for the acceptance run.

use std::time::{Duration, Instant};

/// One evaluated criterion.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<34} {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Collects verdicts and prints each as soon as it is known.
#[derive(Default)]
pub struct Report {
    verdicts: Vec<Verdict>,
}

impl Report {
    /// Runs `f`, which returns `(passed, detail)`. A criterion with a
    /// runtime budget fails when it overruns, whatever `f` said.
    pub fn run<F>(&mut self, id: usize, name: &'static str, budget: Option<Duration>, f: F)
    where
        F: FnOnce() -> Result<(bool, String), String>,
    {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let (mut passed, mut detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
        if let Some(b) = budget {
            if elapsed > b {
                passed = false;
                detail.push_str(&format!("; over the {} s budget", b.as_secs()));
            }
        }
        let v = Verdict {
            id,
            name,
            passed,
            detail,
            elapsed,
        };
        println!("{}", v.line());
        self.verdicts.push(v);
    }

    pub fn verdicts(&self) -> &[Verdict] {
        &self.verdicts
    }

    pub fn failures(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.passed).count()
    }
}
