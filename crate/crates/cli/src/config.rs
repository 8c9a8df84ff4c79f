//! Flat `key = value` configuration for `svlet bench`.
//!
//! Lists are comma separated; integer lists also accept inclusive ranges
//! written `a..b`. Lines starting with `#` are comments. Unknown or
//! repeated keys are errors.

use std::collections::HashSet;
use std::path::PathBuf;

use svlet_core::harness::{
    default_c_values, default_k_values, ExperimentGrid, Method, DEFAULT_C, DEFAULT_K,
    DEFAULT_TRIALS,
};
use svlet_core::{Error, Result, SureSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub n: usize,
    pub m: usize,
    pub ranks: Vec<usize>,
    pub snrs: Vec<f64>,
    pub trials: usize,
    pub seed: Option<u64>,
    pub methods: Vec<Method>,
    pub c: f64,
    pub k: usize,
    pub sensitivity: bool,
    pub c_values: Vec<f64>,
    pub k_values: Vec<usize>,
    pub timing: bool,
    pub timing_trials: usize,
    pub record_times: bool,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub settings: SureSettings,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            n: 50,
            m: 50,
            ranks: (1..=50).collect(),
            snrs: vec![0.5, 1.0, 2.0, 4.0],
            trials: DEFAULT_TRIALS,
            seed: None,
            methods: Method::all(),
            c: DEFAULT_C,
            k: DEFAULT_K,
            sensitivity: false,
            c_values: default_c_values(),
            k_values: default_k_values(),
            timing: false,
            timing_trials: DEFAULT_TRIALS,
            record_times: false,
            threads: None,
            output_dir: None,
            settings: SureSettings::default(),
        }
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn scalar<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| bad(line, format!("{key}: cannot parse {value:?}")))
}

fn items(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn int_list(line: usize, key: &str, value: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in items(value) {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (scalar(line, key, a)?, scalar(line, key, b)?);
                if a > b {
                    return Err(bad(line, format!("{key}: empty range {item}")));
                }
                out.extend(a..=b);
            }
            None => out.push(scalar(line, key, item)?),
        }
    }
    Ok(out)
}

fn float_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    items(value).map(|v| scalar(line, key, v)).collect()
}

fn flag(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(
            line,
            format!("{key}: expected true or false, got {value:?}"),
        )),
    }
}

impl CliConfig {
    /// Figs. 2-4 and Table II at 50x50: every method, ranks 1..=50,
    /// SNR {0.5, 1, 2, 4}, C/K sensitivity and timing.
    pub fn paper() -> Self {
        Self {
            sensitivity: true,
            timing: true,
            ..Self::default()
        }
    }

    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_over(Self::default(), text)
    }

    /// Applies the keys in `text` on top of `base`.
    pub fn parse_over(base: Self, text: &str) -> Result<Self> {
        let mut cfg = base;
        let mut seen = HashSet::new();
        let mut method_names: Option<(usize, String)> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected `key = value`, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(line, format!("duplicate key {key}")));
            }
            match key {
                "n" => cfg.n = scalar(line, key, value)?,
                "m" => cfg.m = scalar(line, key, value)?,
                "ranks" => cfg.ranks = int_list(line, key, value)?,
                "snrs" => cfg.snrs = float_list(line, key, value)?,
                "trials" => cfg.trials = scalar(line, key, value)?,
                "seed" => cfg.seed = Some(scalar(line, key, value)?),
                "methods" => method_names = Some((line, value.to_string())),
                "c" => cfg.c = scalar(line, key, value)?,
                "k" => cfg.k = scalar(line, key, value)?,
                "sensitivity" => cfg.sensitivity = flag(line, key, value)?,
                "c_values" => cfg.c_values = float_list(line, key, value)?,
                "k_values" => cfg.k_values = int_list(line, key, value)?,
                "timing" => cfg.timing = flag(line, key, value)?,
                "timing_trials" => cfg.timing_trials = scalar(line, key, value)?,
                "record_times" => cfg.record_times = flag(line, key, value)?,
                "threads" => cfg.threads = Some(scalar(line, key, value)?),
                "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
                "gap_rel" => cfg.settings.gap_rel = scalar(line, key, value)?,
                "jitter_ties" => cfg.settings.jitter_ties = flag(line, key, value)?,
                "ridge_condition" => cfg.settings.ridge_condition = scalar(line, key, value)?,
                "ridge_scale" => cfg.settings.ridge_scale = scalar(line, key, value)?,
                "solve_residual_tol" => cfg.settings.solve_residual_tol = scalar(line, key, value)?,
                other => return Err(bad(line, format!("unknown key {other:?}"))),
            }
        }
        if let Some((line, names)) = method_names {
            cfg.methods = items(&names)
                .map(|name| match name {
                    "svlet" => Ok(Method::Svlet { c: cfg.c, k: cfg.k }),
                    other => other.parse::<Method>(),
                })
                .collect::<Result<_>>()
                .map_err(|e| bad(line, e.to_string()))?;
        } else {
            for method in &mut cfg.methods {
                if let Method::Svlet { c, k } = method {
                    (*c, *k) = (cfg.c, cfg.k);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::range("c", self.c, "c > 0"));
        }
        if self.k == 0 || self.k_values.contains(&0) {
            return Err(Error::range("k", 0.0, "k >= 1"));
        }
        if let Some(&c) = self.c_values.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::range("c_values", c, "c > 0"));
        }
        if self.threads == Some(0) {
            return Err(Error::range("threads", 0.0, "threads >= 1"));
        }
        if self.timing_trials == 0 {
            return Err(Error::range("timing_trials", 0.0, "timing_trials >= 1"));
        }
        self.grid(0).validate()
    }

    pub fn grid(&self, seed: u64) -> ExperimentGrid {
        ExperimentGrid {
            n: self.n,
            m: self.m,
            ranks: self.ranks.clone(),
            snrs: self.snrs.clone(),
            trials: self.trials,
            seed,
            methods: self.methods.clone(),
        }
    }
}
