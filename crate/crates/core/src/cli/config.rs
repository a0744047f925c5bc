use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::functional::CRITICAL_LAMBDA;
use crate::geometry::{Domain, DomainKind, Point};
use crate::report::config_hash;
use crate::suite::{suite_domains, Tolerances};

/// Domain-spec document.
///
/// ```toml
/// kind = "rectangle"
/// params = [3.9269908169872414, 0.8]
/// center = [0.0, 0.0]
/// rotation = 0.0
/// ```
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub name: Option<String>,
    pub kind: String,
    pub params: Vec<f64>,
    #[serde(default)]
    pub center: Option<[f64; 2]>,
    #[serde(default)]
    pub rotation: Option<f64>,
}

impl DomainSpec {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn build(&self) -> Result<Domain> {
        let kind = DomainKind::from_params(&self.kind, &self.params)?;
        let c = self.center.unwrap_or([0.0, 0.0]);
        Domain::new(kind, Point::new(c[0], c[1]), self.rotation.unwrap_or(0.0))
    }
}

#[derive(Clone, Debug)]
pub struct NamedDomain {
    pub name: String,
    pub domain: Domain,
}

pub fn load_spec(path: &Path) -> Result<NamedDomain> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read domain spec {}: {e}", path.display())))?;
    let spec = DomainSpec::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let name = spec
        .name
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(|| "domain".to_string(), |s| s.to_string_lossy().into_owned()));
    Ok(NamedDomain { name, domain: spec.build()? })
}

pub fn builtin(name: &str) -> Result<NamedDomain> {
    suite_domains()?
        .into_iter()
        .find(|m| m.name == name)
        .map(|m| NamedDomain { name: m.name.to_string(), domain: m.domain })
        .ok_or_else(|| Error::Parse(format!("unknown built-in domain '{name}'")))
}

/// Comma-separated numbers; a trailing `pi` multiplies by pi (`7.9pi`).
pub fn parse_csv(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (num, factor) = match s.strip_suffix("pi") {
                Some(n) => (n.trim(), PI),
                None => (s, 1.0),
            };
            let v: f64 = if num.is_empty() {
                1.0
            } else {
                num.parse().map_err(|_| Error::Parse(format!("not a number: '{s}'")))?
            };
            Ok(v * factor)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Robin,
    Energy,
    #[value(name = "verify-theorem1")]
    VerifyTheorem1,
    StripCheck,
    TestfnBound,
    BlowupTrace,
    Suite,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Robin => "robin",
            Command::Energy => "energy",
            Command::VerifyTheorem1 => "verify-theorem1",
            Command::StripCheck => "strip-check",
            Command::TestfnBound => "testfn-bound",
            Command::BlowupTrace => "blowup-trace",
            Command::Suite => "suite",
        }
    }

    /// Commands that default to the six suite domains when no domain is given.
    fn defaults_to_suite(&self) -> bool {
        matches!(self, Command::VerifyTheorem1 | Command::Suite)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    pub domains: Vec<NamedDomain>,
    pub h: f64,
    pub schedule: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub shapes: Vec<f64>,
    pub out: PathBuf,
    pub seed: u64,
    pub tol_scale: f64,
}

impl ExperimentConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances::default().scaled(self.tol_scale)
    }

    pub fn validate(&self) -> Result<()> {
        if self.domains.is_empty() && !self.command.defaults_to_suite() {
            return Err(Error::InvalidParameters(format!("{} needs --spec or --builtin", self.command.name())));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidParameters(format!("--h must be positive, got {}", self.h)));
        }
        if self.schedule.is_empty() || self.schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameters("--schedule must be strictly increasing".into()));
        }
        if let Some(l) = self.schedule.iter().find(|&&l| !(l > 0.0 && l < CRITICAL_LAMBDA)) {
            return Err(Error::InvalidParameters(format!("schedule value {l} must lie in (0, 8 pi)")));
        }
        if self.epsilons.iter().chain(&self.shapes).any(|&v| !(v > 0.0 && v.is_finite()))
            || self.epsilons.is_empty()
            || self.shapes.is_empty()
        {
            return Err(Error::InvalidParameters("--epsilons and --shapes need positive values".into()));
        }
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return Err(Error::InvalidParameters(format!("--tol-scale must be positive, got {}", self.tol_scale)));
        }
        Ok(())
    }

    /// Everything that determines the report bodies, in a fixed textual form.
    pub fn canonical(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut s = format!("command={}\n", self.command.name());
        for d in &self.domains {
            let c = d.domain.center();
            let _ = writeln!(
                s,
                "domain={}|{}|{}|{:?},{:?}|{:?}",
                d.name,
                d.domain.kind().name(),
                list(&d.domain.kind().params()),
                c.x,
                c.y,
                d.domain.rotation()
            );
        }
        let _ = write!(
            s,
            "h={:?}\nschedule={}\nepsilons={}\nshapes={}\nseed={}\ntol_scale={:?}\n",
            self.h,
            list(&self.schedule),
            list(&self.epsilons),
            list(&self.shapes),
            self.seed,
            self.tol_scale
        );
        s
    }

    pub fn hash(&self) -> String {
        config_hash(&self.canonical())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip() {
        let s = DomainSpec::parse("kind = \"ellipse\"\nparams = [2.0, 0.5]\ncenter = [1.0, -1.0]\nrotation = 0.3\n")
            .unwrap();
        let d = s.build().unwrap();
        assert_eq!(d.kind(), &DomainKind::Ellipse { a: 2.0, b: 0.5 });
        assert_eq!(d.center(), Point::new(1.0, -1.0));
        assert_eq!(d.rotation(), 0.3);
        assert!(DomainSpec::parse("kind = \"disk\"\nparams = [1.0]\nbogus = 1\n").is_err());
        assert!(DomainSpec::parse("kind = \"blob\"\nparams = [1.0]\n").unwrap().build().is_err());
    }

    #[test]
    fn csv_with_pi_suffix() {
        let v = parse_csv("4pi, 7.9pi,1.5").unwrap();
        assert_eq!(v, vec![4.0 * PI, 7.9 * PI, 1.5]);
        assert!(parse_csv("x").is_err());
    }

    #[test]
    fn builtins_resolve() {
        assert_eq!(builtin("ellipse-4:1").unwrap().domain.kind(), &DomainKind::Ellipse { a: 2.0, b: 0.5 });
        assert!(builtin("blob").is_err());
    }
}
