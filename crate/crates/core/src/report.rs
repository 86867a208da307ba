use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        })
    }
}

/// One named metric. A metric with a tolerance carries a PASS/FAIL verdict,
/// one without is informational.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
}

impl Metric {
    pub fn bounded(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        // NaN fails.
        let verdict = if value <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            name: name.into(),
            value,
            tolerance: Some(tolerance),
            verdict,
        }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: None,
            verdict: Verdict::Info,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub check: String,
    pub metrics: Vec<Metric>,
}

impl Report {
    pub fn new(check: impl Into<String>) -> Self {
        Self {
            check: check.into(),
            metrics: Vec::new(),
        }
    }

    pub fn bounded(&mut self, name: impl Into<String>, value: f64, tolerance: f64) -> &mut Self {
        self.metrics.push(Metric::bounded(name, value, tolerance));
        self
    }

    pub fn info(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.metrics.push(Metric::info(name, value));
        self
    }

    pub fn extend(&mut self, other: Report) -> &mut Self {
        let prefix = other.check;
        self.metrics.extend(other.metrics.into_iter().map(|mut m| {
            m.name = format!("{prefix}.{}", m.name);
            m
        }));
        self
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.metric(name).map(|m| m.value)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Metric> {
        self.metrics.iter().filter(|m| m.verdict == Verdict::Fail)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn verdict(&self) -> Verdict {
        if self.passed() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.check, self.verdict())?;
        for m in &self.metrics {
            match m.tolerance {
                Some(tol) => writeln!(
                    f,
                    "  [{}] {} = {:.6e} (tol {:.1e})",
                    m.verdict, m.name, m.value, tol
                )?,
                None => writeln!(f, "  [{}] {} = {:.12e}", m.verdict, m.name, m.value)?,
            }
        }
        Ok(())
    }
}
