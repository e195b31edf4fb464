//! Run configuration: defaults, flat `key=value` files and overrides.

use std::fmt;
use std::path::PathBuf;

use euler_spectra::matrixop::MAX_DENSE;
use euler_spectra::{Complex64, OperatorKind, WaveVector};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub cf_tol: f64,
    pub root_tol: f64,
    pub eig_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sizes {
    pub n_matrix: usize,
    pub n_window: i64,
    pub k_cutoff: f64,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    pub steps: usize,
    pub every: usize,
    pub seed: u64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub p: WaveVector,
    pub gamma: Complex64,
    pub khat: Option<WaveVector>,
    pub operator: OperatorKind,
    pub tolerances: Tolerances,
    pub sizes: Sizes,
    pub sim: SimParams,
    pub output: Option<PathBuf>,
    pub format: Format,
}

pub const MAX_WINDOW: i64 = 100_000;
pub const MAX_CUTOFF: f64 = 30.0;
pub const MAX_GRID: usize = 256;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: WaveVector::new(1, 1),
            gamma: Complex64::new(1.0, 0.0),
            khat: None,
            operator: OperatorKind::A,
            tolerances: Tolerances {
                cf_tol: 1e-14,
                root_tol: 1e-11,
                eig_residual: 1e-8,
            },
            sizes: Sizes {
                n_matrix: 400,
                n_window: 20,
                k_cutoff: 5.0,
                grid: 16,
            },
            sim: SimParams {
                dt: 1e-3,
                steps: 1000,
                every: 10,
                seed: 1,
                amplitude: 1.0,
            },
            output: None,
            format: Format::Json,
        }
    }
}

/// Parses `a,b`, `(a,b)` or `a b`.
pub fn parse_wave_vector(s: &str) -> Result<WaveVector, ConfigError> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<&str> = t.split([',', ' ']).filter(|x| !x.is_empty()).collect();
    match parts.as_slice() {
        [a, b] => match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) => Ok(WaveVector::new(a, b)),
            _ => err(format!("invalid wave vector '{s}'")),
        },
        _ => err(format!("wave vector needs two integers, got '{s}'")),
    }
}

/// Parses `re`, `re,im` or `(re,im)`.
pub fn parse_complex(s: &str) -> Result<Complex64, ConfigError> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<&str> = t.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| ConfigError(format!("invalid complex number '{s}'")));
    let z = match parts.as_slice() {
        [re] => Complex64::new(num(re)?, 0.0),
        [re, im] => Complex64::new(num(re)?, num(im)?),
        _ => return err(format!("invalid complex number '{s}'")),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return err(format!("complex number '{s}' is not finite"));
    }
    Ok(z)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| ConfigError(format!("invalid value '{v}' for {key}")))
}

impl RunConfig {
    /// Applies one dotted key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "p" => self.p = parse_wave_vector(v)?,
            "Gamma" | "gamma" => self.gamma = parse_complex(v)?,
            "khat" => self.khat = if v.is_empty() { None } else { Some(parse_wave_vector(v)?) },
            "operator" => {
                self.operator = match v {
                    "A" | "a" => OperatorKind::A,
                    "B" | "b" => OperatorKind::B,
                    "C" | "c" => OperatorKind::C,
                    _ => return err(format!("operator must be A, B or C, got '{v}'")),
                }
            }
            "tolerances.cf_tol" => self.tolerances.cf_tol = parse_num(key, v)?,
            "tolerances.root_tol" => self.tolerances.root_tol = parse_num(key, v)?,
            "tolerances.eig_residual" => self.tolerances.eig_residual = parse_num(key, v)?,
            "sizes.N_matrix" => self.sizes.n_matrix = parse_num(key, v)?,
            "sizes.n_window" => self.sizes.n_window = parse_num(key, v)?,
            "sizes.K_cutoff" => self.sizes.k_cutoff = parse_num(key, v)?,
            "sizes.grid" => self.sizes.grid = parse_num(key, v)?,
            "sim.dt" => self.sim.dt = parse_num(key, v)?,
            "sim.steps" => self.sim.steps = parse_num(key, v)?,
            "sim.every" => self.sim.every = parse_num(key, v)?,
            "sim.seed" => self.sim.seed = parse_num(key, v)?,
            "sim.amplitude" => self.sim.amplitude = parse_num(key, v)?,
            "output.path" => self.output = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "output.format" => {
                self.format = match v {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    _ => return err(format!("output.format must be json or csv, got '{v}'")),
                }
            }
            other => return err(format!("unknown config key '{other}'")),
        }
        Ok(())
    }

    /// Applies a config file: one `key = value` per line, `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("line {}: expected key=value", i + 1));
            };
            self.set(k, v).map_err(|e| ConfigError(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.p.is_zero() {
            return err("p must be nonzero");
        }
        if self.khat.is_some_and(|k| k.is_zero()) {
            return err("khat must be nonzero");
        }
        let t = &self.tolerances;
        for (name, x) in [
            ("tolerances.cf_tol", t.cf_tol),
            ("tolerances.root_tol", t.root_tol),
            ("tolerances.eig_residual", t.eig_residual),
            ("sim.dt", self.sim.dt),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                return err(format!("{name} must be positive, got {x}"));
            }
        }
        if !(self.sim.amplitude >= 0.0 && self.sim.amplitude.is_finite()) {
            return err("sim.amplitude must be non-negative");
        }
        let s = &self.sizes;
        if !(5..=MAX_DENSE).contains(&s.n_matrix) {
            return err(format!("sizes.N_matrix must lie in [5, {MAX_DENSE}]"));
        }
        if !(1..=MAX_WINDOW).contains(&s.n_window) {
            return err(format!("sizes.n_window must lie in [1, {MAX_WINDOW}]"));
        }
        if !(s.k_cutoff >= 1.0 && s.k_cutoff <= MAX_CUTOFF) {
            return err(format!("sizes.K_cutoff must lie in [1, {MAX_CUTOFF}]"));
        }
        if !(1..=MAX_GRID).contains(&s.grid) {
            return err(format!("sizes.grid must lie in [1, {MAX_GRID}]"));
        }
        if self.sim.steps == 0 {
            return err("sim.steps must be at least 1");
        }
        Ok(())
    }

    pub fn require_khat(&self) -> Result<WaveVector, ConfigError> {
        self.khat.ok_or_else(|| ConfigError("this command needs khat (e.g. --khat 1,0)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_vectors_and_complex() {
        assert_eq!(parse_wave_vector("(1,-2)").unwrap(), WaveVector::new(1, -2));
        assert_eq!(parse_wave_vector("3 0").unwrap(), WaveVector::new(3, 0));
        assert!(parse_wave_vector("1").is_err());
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("(0.5,-1)").unwrap(), Complex64::new(0.5, -1.0));
        assert!(parse_complex("nan").is_err());
    }

    #[test]
    fn file_then_override() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\np = 2,1\nsizes.N_matrix=200  # trailing\nGamma=1,0.5\n").unwrap();
        assert_eq!(c.p, WaveVector::new(2, 1));
        assert_eq!(c.sizes.n_matrix, 200);
        c.set("sizes.N_matrix", "300").unwrap();
        assert_eq!(c.sizes.n_matrix, 300);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::default();
        assert!(c.apply_text("nokey\n").is_err());
        assert!(c.set("sizes.bogus", "1").is_err());
        c.set("tolerances.cf_tol", "-1").unwrap();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.set("sizes.N_matrix", "5000").unwrap();
        assert!(c.validate().is_err());
    }
}
