//! Flat key-value problem configuration.
//!
//! The format is a plain text file, one `key = value` per line, `#` comments,
//! no sections or includes. Field specs (`y0`, `z_d`) are either a named
//! preset (`mode1`, `bump`, `zero`) or an explicit whitespace/comma separated
//! coefficient list, expanded against `num_modes`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::{build_domain, Field, SpectralDomain, TimeGrid};

/// How an initial or target state is specified in the config file.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    /// First sine mode with unit coefficient.
    Mode1,
    /// Tent profile peaking at x = 1/2: coefficients 4*sqrt(2)*sin(k pi/2)/(pi^2 k^2).
    Bump,
    Zero,
    Coeffs(Vec<f64>),
}

impl FieldSpec {
    pub fn expand(&self, num_modes: usize) -> Result<Field> {
        match self {
            FieldSpec::Mode1 => {
                let mut c = vec![0.0; num_modes];
                c[0] = 1.0;
                Ok(Field(c))
            }
            FieldSpec::Bump => {
                let c = (1..=num_modes)
                    .map(|k| {
                        let k = k as f64;
                        4.0 * 2.0_f64.sqrt() * (k * PI / 2.0).sin() / (PI * PI * k * k)
                    })
                    .collect();
                Ok(Field(c))
            }
            FieldSpec::Zero => Ok(Field::zeros(num_modes)),
            FieldSpec::Coeffs(c) => {
                if c.len() != num_modes {
                    return Err(Error::Config(format!(
                        "explicit coefficient list has {} entries but num_modes = {num_modes}",
                        c.len()
                    )));
                }
                Ok(Field(c.clone()))
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Mode1 => write!(f, "mode1"),
            FieldSpec::Bump => write!(f, "bump"),
            FieldSpec::Zero => write!(f, "zero"),
            FieldSpec::Coeffs(c) => {
                let parts: Vec<String> = c.iter().map(|v| format!("{v:.17e}")).collect();
                write!(f, "{}", parts.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub omega: (f64, f64),
    pub num_modes: usize,
    pub t_end: f64,
    pub n_steps: usize,
    pub y0: FieldSpec,
    pub z_d: FieldSpec,
    pub r: Option<f64>,
    pub m: Option<f64>,
    pub tau: f64,
    pub m0: Option<f64>,
    pub tol_bvp: f64,
    pub tol_m: f64,
    pub tol_tau: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            omega: (0.2, 0.8),
            num_modes: 16,
            t_end: 1.0,
            n_steps: 200,
            y0: FieldSpec::Mode1,
            z_d: FieldSpec::Zero,
            r: None,
            m: None,
            tau: 0.0,
            m0: None,
            tol_bvp: 1e-10,
            tol_m: 1e-8,
            tol_tau: 1e-4,
            max_iter: 200_000,
            seed: 0,
        }
    }
}

fn parse_field_spec(value: &str) -> Result<FieldSpec> {
    match value {
        "mode1" => Ok(FieldSpec::Mode1),
        "bump" => Ok(FieldSpec::Bump),
        "zero" => Ok(FieldSpec::Zero),
        other => {
            let coeffs: Vec<f64> = other
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<f64>().map_err(|_| {
                        Error::Config(format!(
                            "field spec must be a preset (mode1, bump, zero) or a number list; got {s:?}"
                        ))
                    })
                })
                .collect::<Result<_>>()?;
            if coeffs.is_empty() {
                return Err(Error::Config("empty field spec".into()));
            }
            Ok(FieldSpec::Coeffs(coeffs))
        }
    }
}

impl ProblemConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))
            })?;
            let key = key.trim().to_ascii_lowercase();
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("duplicate key {key:?}")));
            }
        }
        Self::from_entries(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn from_entries(mut entries: BTreeMap<String, String>) -> Result<Self> {
        fn take_parsed<T: std::str::FromStr>(
            entries: &mut BTreeMap<String, String>,
            key: &str,
        ) -> Result<Option<T>> {
            match entries.remove(key) {
                None => Ok(None),
                Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                    Error::Config(format!("key {key:?}: cannot parse value {v:?}"))
                }),
            }
        }

        let defaults = ProblemConfig::default();
        let mut cfg = ProblemConfig {
            omega: (
                take_parsed(&mut entries, "omega_a")?.unwrap_or(defaults.omega.0),
                take_parsed(&mut entries, "omega_b")?.unwrap_or(defaults.omega.1),
            ),
            num_modes: take_parsed(&mut entries, "num_modes")?.unwrap_or(defaults.num_modes),
            t_end: take_parsed(&mut entries, "t_end")?.unwrap_or(defaults.t_end),
            n_steps: take_parsed(&mut entries, "n_steps")?.unwrap_or(defaults.n_steps),
            y0: defaults.y0.clone(),
            z_d: defaults.z_d.clone(),
            r: take_parsed(&mut entries, "r")?,
            m: take_parsed(&mut entries, "m")?,
            tau: take_parsed(&mut entries, "tau")?.unwrap_or(defaults.tau),
            m0: take_parsed(&mut entries, "m0")?,
            tol_bvp: take_parsed(&mut entries, "tol_bvp")?.unwrap_or(defaults.tol_bvp),
            tol_m: take_parsed(&mut entries, "tol_m")?.unwrap_or(defaults.tol_m),
            tol_tau: take_parsed(&mut entries, "tol_tau")?.unwrap_or(defaults.tol_tau),
            max_iter: take_parsed(&mut entries, "max_iter")?.unwrap_or(defaults.max_iter),
            seed: take_parsed(&mut entries, "seed")?.unwrap_or(defaults.seed),
        };
        if let Some(v) = entries.remove("y0") {
            cfg.y0 = parse_field_spec(&v)?;
        }
        if let Some(v) = entries.remove("z_d") {
            cfg.z_d = parse_field_spec(&v)?;
        }
        if let Some(key) = entries.keys().next() {
            return Err(Error::Config(format!("unknown key {key:?}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    // `!(x > 0.0)` rather than `x <= 0.0`: it also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if !(0.0..self.t_end).contains(&self.tau) {
            return Err(Error::Config(format!(
                "tau = {} must lie in [0, t_end = {})",
                self.tau, self.t_end
            )));
        }
        for (name, tol) in [
            ("tol_bvp", self.tol_bvp),
            ("tol_m", self.tol_m),
            ("tol_tau", self.tol_tau),
        ] {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {tol}")));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<SpectralDomain> {
        build_domain(self.omega, self.num_modes).map_err(|e| Error::Config(e.to_string()))
    }

    /// Time grid, with `dt` halved `refine` times (node count doubled).
    pub fn grid(&self, refine: u32) -> Result<TimeGrid> {
        Ok(TimeGrid::new(0.0, self.t_end, self.n_steps)?.refined(refine))
    }

    pub fn y0_field(&self) -> Result<Field> {
        self.y0.expand(self.num_modes)
    }

    pub fn z_d_field(&self) -> Result<Field> {
        self.z_d.expand(self.num_modes)
    }

    pub fn require_r(&self) -> Result<f64> {
        self.r
            .ok_or_else(|| Error::Config("missing key \"r\" (target ball radius)".into()))
    }

    pub fn require_m(&self) -> Result<f64> {
        self.m
            .ok_or_else(|| Error::Config("missing key \"m\" (control norm bound)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
# reference instance
omega_a = 0.2
omega_b = 0.8
num_modes = 4
t_end = 1.0
n_steps = 50
y0 = mode1
z_d = 0.1, -0.2, 0.0, 0.3
r = 0.05
m = 1.5
tau = 0.25
tol_bvp = 1e-10
tol_m = 1e-8
tol_tau = 1e-4
seed = 7
";
        let cfg = ProblemConfig::parse(text).unwrap();
        assert_eq!(cfg.num_modes, 4);
        assert_eq!(cfg.y0, FieldSpec::Mode1);
        assert_eq!(cfg.z_d, FieldSpec::Coeffs(vec![0.1, -0.2, 0.0, 0.3]));
        assert_eq!(cfg.r, Some(0.05));
        assert_eq!(cfg.m, Some(1.5));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.z_d_field().unwrap().0, vec![0.1, -0.2, 0.0, 0.3]);
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = ProblemConfig::parse("num_modes = 8\n").unwrap();
        assert_eq!(cfg.omega, (0.2, 0.8));
        assert_eq!(cfg.n_steps, 200);
        assert_eq!(cfg.tau, 0.0);
        assert!(cfg.r.is_none());
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(
            ProblemConfig::parse("bogus = 1\n").unwrap_err(),
            Error::Config(_)
        ));
        assert!(matches!(
            ProblemConfig::parse("tau = 0.1\ntau = 0.2\n").unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn rejects_out_of_range_tau() {
        let err = ProblemConfig::parse("tau = 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn bump_preset_matches_tent_series() {
        let f = FieldSpec::Bump.expand(4).unwrap();
        let c1 = 4.0 * 2.0_f64.sqrt() / (PI * PI);
        assert!((f.0[0] - c1).abs() < 1e-15);
        assert!(f.0[1].abs() < 1e-15); // even modes vanish for the symmetric tent
        assert!((f.0[2] + c1 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn coeff_length_mismatch_is_config_error() {
        let cfg = ProblemConfig::parse("num_modes = 3\ny0 = 1.0 2.0\n").unwrap();
        assert!(matches!(cfg.y0_field().unwrap_err(), Error::Config(_)));
    }
}
