//! Resolved run configuration: defaults, then a flat `key = value` file,
//! then command-line flags.

use std::path::PathBuf;

use rmfground::grid::{DEFAULT_NODES, DEFAULT_R_MAX};
use rmfground::Error;
use serde::Serialize;

pub const OUT_ENV: &str = "RMFGROUND_OUT";
const DEFAULT_OUT: &str = "rmfground-out";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub r_max: f64,
    pub n: usize,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub nu: f64,
    pub init: String,
    pub seed: u64,
    pub starts: usize,
    pub max_iters: usize,
    pub tol_residual: f64,
    /// Tail tolerance for shooting.
    pub tol: f64,
    pub tol_a: f64,
    pub a_from: Option<f64>,
    pub a_to: Option<f64>,
    pub steps: Option<usize>,
    pub n_list: Vec<u32>,
    pub profile: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub json: bool,
    pub csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            r_max: DEFAULT_R_MAX,
            n: DEFAULT_NODES,
            a: None,
            b: None,
            nu: 1.0,
            init: "cosbump".into(),
            seed: 0,
            starts: 1,
            max_iters: 20_000,
            tol_residual: 1e-7,
            tol: 1e-5,
            tol_a: 0.05,
            a_from: None,
            a_to: None,
            steps: None,
            n_list: vec![4, 8, 16],
            profile: None,
            out_dir: PathBuf::from(DEFAULT_OUT),
            json: true,
            csv: true,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, Error>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| Error::Parse(format!("config key `{key}`: {e}")))
}

fn flag(key: &str, v: &str) -> Result<bool, Error> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse(format!(
            "config key `{key}`: expected a boolean, got `{v}`"
        ))),
    }
}

pub fn parse_n_list(v: &str) -> Result<Vec<u32>, Error> {
    v.split(',').map(|s| num::<u32>("n_list", s.trim())).collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), Error> {
        match key {
            "r_max" => self.r_max = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "a" => self.a = Some(num(key, v)?),
            "b" => self.b = Some(num(key, v)?),
            "nu" => self.nu = num(key, v)?,
            "init" => self.init = v.to_string(),
            "seed" => self.seed = num(key, v)?,
            "starts" => self.starts = num(key, v)?,
            "max_iters" => self.max_iters = num(key, v)?,
            "tol_residual" => self.tol_residual = num(key, v)?,
            "tol" => self.tol = num(key, v)?,
            "tol_a" => self.tol_a = num(key, v)?,
            "a_from" => self.a_from = Some(num(key, v)?),
            "a_to" => self.a_to = Some(num(key, v)?),
            "steps" => self.steps = Some(num(key, v)?),
            "n_list" => self.n_list = parse_n_list(v)?,
            "profile" => self.profile = Some(PathBuf::from(v)),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "json" => self.json = flag(key, v)?,
            "csv" => self.csv = flag(key, v)?,
            _ => return Err(Error::Parse(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` file. `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), Error> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("config line {}: expected `key = value`", k + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_ENV) {
            if !dir.is_empty() {
                self.out_dir = PathBuf::from(dir);
            }
        }
    }
}
