use crate::config::RunConfig;
use crlab_core::deformation_ops::SpectrumCertificate;
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// How the expected value is known: closed form, round trip, gap policy, ...
    pub oracle: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumAttachment {
    pub name: String,
    pub certificate: Option<SpectrumCertificate>,
    pub inconclusive_spectrum: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub command: String,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub spectra: Vec<SpectrumAttachment>,
    pub notes: Vec<String>,
    /// Extra files (name, contents) written next to the report.
    #[serde(skip)]
    pub artifacts: Vec<(String, String)>,
    /// Wall-clock seconds per stage; kept out of the report so it stays reproducible.
    #[serde(skip)]
    pub timing: Vec<(String, f64)>,
}

impl ReportDocument {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self { command: command.into(), config: config.clone(), checks: Vec::new(), spectra: Vec::new(), notes: Vec::new(), artifacts: Vec::new(), timing: Vec::new() }
    }

    /// |value - expected| <= tolerance.
    pub fn near(&mut self, name: &str, oracle: &str, value: f64, expected: f64, tolerance: f64) {
        let pass = (value - expected).abs() <= tolerance;
        self.checks.push(CheckRecord { name: name.into(), oracle: oracle.into(), value, expected, tolerance, pass });
    }

    /// value <= tolerance (expected 0).
    pub fn below(&mut self, name: &str, oracle: &str, value: f64, tolerance: f64) {
        let pass = value <= tolerance;
        self.checks.push(CheckRecord { name: name.into(), oracle: oracle.into(), value, expected: 0.0, tolerance, pass });
    }

    pub fn flag(&mut self, name: &str, oracle: &str, ok: bool) {
        let v = if ok { 1.0 } else { 0.0 };
        self.checks.push(CheckRecord { name: name.into(), oracle: oracle.into(), value: v, expected: 1.0, tolerance: 0.0, pass: ok });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn inconclusive(&self) -> bool {
        self.spectra.iter().any(|s| s.certificate.is_none())
    }

    pub fn merge(&mut self, other: ReportDocument) {
        let prefix = other.command.clone();
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.checks.push(c);
        }
        self.spectra.extend(other.spectra);
        self.notes.extend(other.notes);
        self.artifacts.extend(other.artifacts);
        self.timing.extend(other.timing.into_iter().map(|(k, t)| (format!("{prefix}.{k}"), t)));
    }

    pub fn exit_code(&self) -> i32 {
        if self.inconclusive() {
            3
        } else if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn timing_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> = self.timing.iter().map(|(k, t)| (k.clone(), serde_json::json!(t))).collect();
        serde_json::to_string_pretty(&map).expect("timing serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.json", self.command)), self.to_json() + "\n")?;
        std::fs::write(dir.join(format!("{}.timing.json", self.command)), self.timing_json() + "\n")?;
        for (name, text) in &self.artifacts {
            std::fs::write(dir.join(name), text)?;
        }
        for s in &self.spectra {
            if let Some(c) = &s.certificate {
                std::fs::write(dir.join(format!("spectrum_{}.csv", s.name)), c.to_csv())?;
            } else if let Some(v) = &s.inconclusive_spectrum {
                let mut t = String::from("index,singular_value\n");
                for (i, x) in v.iter().enumerate() {
                    t.push_str(&format!("{i},{x:.12e}\n"));
                }
                std::fs::write(dir.join(format!("spectrum_{}.csv", s.name)), t)?;
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!("{} {:<40} value {:.3e} expected {:.3e} tol {:.1e}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.expected, c.tolerance));
        }
        for sp in &self.spectra {
            match &sp.certificate {
                Some(c) => s.push_str(&format!("spectrum {:<12} dim {} gap {:.3e}\n", sp.name, c.count_below, c.gap_ratio)),
                None => s.push_str(&format!("spectrum {:<12} inconclusive\n", sp.name)),
            }
        }
        s
    }
}
