//! Bookkeeping for the acceptance run: one result line per check, plus the
//! few summary statistics the checks share.

use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        })
    }
}

/// Collects check results and prints each as it arrives.
#[derive(Debug, Default)]
pub struct Report {
    results: Vec<(String, Status)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `check`, timing it, and prints `STATUS label: detail [seconds]`
    /// followed by any informational notes the check left. An `Err` from the
    /// check is a failure.
    pub fn run<F>(&mut self, label: &str, check: F)
    where
        F: FnOnce(&mut Vec<String>) -> Result<(Status, String), String>,
    {
        let start = Instant::now();
        let mut notes = Vec::new();
        let (status, detail) = check(&mut notes).unwrap_or_else(|e| (Status::Fail, format!("error: {e}")));
        println!("{status} {label}: {detail} [{:.0} s]", start.elapsed().as_secs_f64());
        for n in notes {
            println!("     {n}");
        }
        self.results.push((label.to_string(), status));
    }

    pub fn count(&self, status: Status) -> usize {
        self.results.iter().filter(|(_, s)| *s == status).count()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} passed, {} failed, {} skipped",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Skip)
        )
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample mean and standard deviation (n − 1 denominator).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}
