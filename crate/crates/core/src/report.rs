//! Certificates returned by the verification routines.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LevelEntry {
    pub level: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_eig: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cc_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub pass: bool,
}

/// A named scalar compared against a bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub kind: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<LevelEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl CertificateReport {
    pub fn new(kind: impl Into<String>) -> Self {
        CertificateReport { kind: kind.into(), pass: true, levels: Vec::new(), checks: Vec::new() }
    }

    pub fn push_level(&mut self, entry: LevelEntry) {
        self.pass &= entry.pass;
        self.levels.push(entry);
    }

    /// Record `value <= bound`. NaN fails.
    pub fn push_check(&mut self, name: impl Into<String>, value: f64, bound: f64) -> bool {
        let pass = value <= bound;
        self.pass &= pass;
        self.checks.push(Check { name: name.into(), value, bound, pass });
        pass
    }

    pub fn merge(&mut self, other: CertificateReport) {
        self.pass &= other.pass;
        self.levels.extend(other.levels);
        self.checks.extend(other.checks);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Largest value among checks whose name starts with `prefix`.
    pub fn worst(&self, prefix: &str) -> f64 {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).map(|c| c.value).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> String {
        let mut parts: Vec<String> = self.levels.iter().filter(|l| !l.pass).map(|l| format!("level {}", l.level)).collect();
        parts.extend(self.checks.iter().filter(|c| !c.pass).map(|c| format!("{} = {:.3e} > {:.3e}", c.name, c.value, c.bound)));
        format!("{}: {}", self.kind, parts.join(", "))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"))
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.kind, if self.pass { "PASS" } else { "FAIL" })?;
        for l in &self.levels {
            writeln!(
                f,
                "  level {} witness {} min_eig {} kernel {} cc {} residual {} {}",
                l.level,
                l.witness.map_or_else(|| "-".to_string(), |w| w.to_string()),
                opt(l.min_eig),
                opt(l.kernel_residual),
                opt(l.cc_value),
                opt(l.residual),
                if l.pass { "ok" } else { "FAIL" }
            )?;
        }
        for c in &self.checks {
            writeln!(f, "  {} = {:.3e} (bound {:.3e}) {}", c.name, c.value, c.bound, if c.pass { "ok" } else { "FAIL" })?;
        }
        Ok(())
    }
}
