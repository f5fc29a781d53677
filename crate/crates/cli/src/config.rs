//! Flat `key = value` run configuration.
//!
//! Keys are the [`RunConfig`] field names. Values are numbers, `true`/`false`,
//! bare or double-quoted words, or bracketed comma-separated lists. `#` starts
//! a comment. Missing keys keep their defaults, unknown keys are rejected.

use std::fmt::Write as _;

use tlschain::{FftieSchedule, InitialState, ModelParamsF64, QubitState, ScheduleF64, TimeAxis};

use crate::error::{CliError, Result};

/// `T1` at the reference coupling, used to size horizons when no estimate is
/// given. Scaled as `J⁻²` for other couplings.
pub const REFERENCE_T1: f64 = 6131.4;
pub const REFERENCE_J: f64 = 0.01;
/// Horizon in units of the expected decay time.
pub const HORIZON_FACTOR: f64 = 5.0;
/// Coherence decays roughly half as fast as occupation.
pub const T2_OVER_T1: f64 = 2.0;
pub const MIN_ROWS: usize = 2000;
pub const TARGET_ROWS: usize = 5000;

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub L: usize,
    pub J_tau: f64,
    pub J_upsilon: f64,
    /// Empty means all zero.
    pub U_tau_site: Vec<f64>,
    /// Empty means all zero.
    pub U_upsilon_site: Vec<f64>,
    pub U_cross: f64,
    pub U_q: f64,
    pub J_q_tau: f64,
    pub qubit_state: QubitState,
    /// Occupied τ sites of the initial state.
    pub tau_sites: Vec<usize>,
    /// Occupied υ sites of the initial state.
    pub upsilon_sites: Vec<usize>,
    pub t_H: f64,
    pub t_random: f64,
    pub disorder_lo: f64,
    pub disorder_hi: f64,
    /// `None` sizes the run from the expected decay time.
    pub n_cycles: Option<usize>,
    /// `None` targets a few thousand rows per file.
    pub record_stride: Option<usize>,
    pub time_axis: TimeAxis,
    pub coherent_only: bool,
    pub n_trajectories: usize,
    pub master_seed: u64,
    /// Overrides the `J⁻²` estimate used for the horizon.
    pub expected_T1: Option<f64>,
    pub output_dir: String,
    pub run_name: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            L: 7,
            J_tau: 1.0,
            J_upsilon: 1.0,
            U_tau_site: Vec::new(),
            U_upsilon_site: Vec::new(),
            U_cross: -0.2,
            U_q: 0.0,
            J_q_tau: 0.01,
            qubit_state: QubitState::One,
            tau_sites: Vec::new(),
            upsilon_sites: vec![0, 1],
            t_H: 2.0,
            t_random: 0.5,
            disorder_lo: 0.0,
            disorder_hi: 3.0,
            n_cycles: None,
            record_stride: None,
            time_axis: TimeAxis::IncludeErasure,
            coherent_only: false,
            n_trajectories: 10,
            master_seed: 2024,
            expected_T1: None,
            output_dir: "out".into(),
            run_name: "run".into(),
        }
    }
}

const KEYS: &[&str] = &[
    "L",
    "J_tau",
    "J_upsilon",
    "U_tau_site",
    "U_upsilon_site",
    "U_cross",
    "U_q",
    "J_q_tau",
    "qubit_state",
    "tau_sites",
    "upsilon_sites",
    "t_H",
    "t_random",
    "disorder_lo",
    "disorder_hi",
    "n_cycles",
    "record_stride",
    "time_axis",
    "coherent_only",
    "n_trajectories",
    "master_seed",
    "expected_T1",
    "output_dir",
    "run_name",
];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<(String, usize)>),
}

struct Located<'a> {
    key: &'a str,
    value: Value,
    line: usize,
    column: usize,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> CliError {
    CliError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Strips a trailing comment, honouring double quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(s: &str, line: usize, column: usize) -> Result<String> {
    if let Some(rest) = s.strip_prefix('"') {
        return match rest.strip_suffix('"') {
            Some(inner) if !inner.contains('"') => Ok(inner.to_string()),
            _ => Err(parse_error(line, column, "unterminated string")),
        };
    }
    if s.contains(char::is_whitespace) || s.contains('"') {
        return Err(parse_error(line, column, format!("unexpected text in `{s}`")));
    }
    Ok(s.to_string())
}

fn parse_value(raw: &str, line: usize, column: usize) -> Result<Value> {
    let lead = raw.len() - raw.trim_start().len();
    let text = raw.trim();
    let column = column + lead;
    if text.is_empty() {
        return Err(parse_error(line, column, "missing value"));
    }
    if let Some(rest) = text.strip_prefix('[') {
        let Some(inner) = rest.strip_suffix(']') else {
            return Err(parse_error(line, column, "list is missing its closing `]`"));
        };
        if inner.trim().is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        let mut items = Vec::new();
        let mut offset = column + 1;
        for part in inner.split(',') {
            let lead = part.len() - part.trim_start().len();
            let item = part.trim();
            if item.is_empty() {
                return Err(parse_error(line, offset + lead, "empty list element"));
            }
            items.push((unquote(item, line, offset + lead)?, offset + lead));
            offset += part.len() + 1;
        }
        return Ok(Value::List(items));
    }
    Ok(Value::Scalar(unquote(text, line, column)?))
}

fn tokenize(text: &str) -> Result<Vec<Located<'_>>> {
    let mut out: Vec<Located> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw);
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            let col = body.len() - body.trim_start().len() + 1;
            return Err(parse_error(line, col, "expected `key = value`"));
        };
        let key_raw = &body[..eq];
        let key = key_raw.trim();
        let key_col = key_raw.len() - key_raw.trim_start().len() + 1;
        if key.is_empty() {
            return Err(parse_error(line, key_col, "missing key"));
        }
        if !KEYS.contains(&key) {
            return Err(parse_error(line, key_col, format!("unknown key `{key}`")));
        }
        if out.iter().any(|l| l.key == key) {
            return Err(parse_error(line, key_col, format!("duplicate key `{key}`")));
        }
        let value = parse_value(&body[eq + 1..], line, eq + 2)?;
        out.push(Located {
            key,
            value,
            line,
            column: eq + 2 + (body[eq + 1..].len() - body[eq + 1..].trim_start().len()),
        });
    }
    Ok(out)
}

fn scalar<'a>(l: &'a Located) -> Result<&'a str> {
    match &l.value {
        Value::Scalar(s) => Ok(s),
        Value::List(_) => Err(parse_error(
            l.line,
            l.column,
            format!("`{}` takes a single value, not a list", l.key),
        )),
    }
}

fn list<'a>(l: &'a Located) -> Result<&'a [(String, usize)]> {
    match &l.value {
        Value::List(v) => Ok(v),
        Value::Scalar(_) => Err(parse_error(
            l.line,
            l.column,
            format!("`{}` takes a bracketed list", l.key),
        )),
    }
}

fn number<T: std::str::FromStr>(s: &str, what: &str, line: usize, column: usize) -> Result<T> {
    s.parse()
        .map_err(|_| parse_error(line, column, format!("expected {what}, found `{s}`")))
}

fn optional_count(l: &Located) -> Result<Option<usize>> {
    let s = scalar(l)?;
    if s == "auto" {
        return Ok(None);
    }
    number(s, "a non-negative integer or `auto`", l.line, l.column).map(Some)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    for l in tokenize(text)? {
        let (line, col) = (l.line, l.column);
        let real = |l: &Located| -> Result<f64> { number(scalar(l)?, "a number", line, col) };
        let reals = |l: &Located| -> Result<Vec<f64>> {
            list(l)?
                .iter()
                .map(|(s, col)| number(s, "a number", line, *col))
                .collect()
        };
        let sites = |l: &Located| -> Result<Vec<usize>> {
            list(l)?
                .iter()
                .map(|(s, col)| number(s, "a site index", line, *col))
                .collect()
        };
        match l.key {
            "L" => c.L = number(scalar(&l)?, "a non-negative integer", line, col)?,
            "J_tau" => c.J_tau = real(&l)?,
            "J_upsilon" => c.J_upsilon = real(&l)?,
            "U_tau_site" => c.U_tau_site = reals(&l)?,
            "U_upsilon_site" => c.U_upsilon_site = reals(&l)?,
            "U_cross" => c.U_cross = real(&l)?,
            "U_q" => c.U_q = real(&l)?,
            "J_q_tau" => c.J_q_tau = real(&l)?,
            "qubit_state" => {
                c.qubit_state = match scalar(&l)? {
                    "zero" | "0" => QubitState::Zero,
                    "one" | "1" => QubitState::One,
                    "plus" | "+" => QubitState::Plus,
                    s => {
                        return Err(parse_error(
                            line,
                            col,
                            format!("expected zero, one or plus, found `{s}`"),
                        ))
                    }
                }
            }
            "tau_sites" => c.tau_sites = sites(&l)?,
            "upsilon_sites" => c.upsilon_sites = sites(&l)?,
            "t_H" => c.t_H = real(&l)?,
            "t_random" => c.t_random = real(&l)?,
            "disorder_lo" => c.disorder_lo = real(&l)?,
            "disorder_hi" => c.disorder_hi = real(&l)?,
            "n_cycles" => c.n_cycles = optional_count(&l)?,
            "record_stride" => c.record_stride = optional_count(&l)?,
            "time_axis" => {
                c.time_axis = match scalar(&l)? {
                    "include_erasure" => TimeAxis::IncludeErasure,
                    "exclude_erasure" => TimeAxis::ExcludeErasure,
                    s => {
                        return Err(parse_error(
                            line,
                            col,
                            format!("expected include_erasure or exclude_erasure, found `{s}`"),
                        ))
                    }
                }
            }
            "coherent_only" => c.coherent_only = number(scalar(&l)?, "true or false", line, col)?,
            "n_trajectories" => {
                c.n_trajectories = number(scalar(&l)?, "a non-negative integer", line, col)?
            }
            "master_seed" => c.master_seed = number(scalar(&l)?, "an unsigned integer", line, col)?,
            "expected_T1" => {
                let s = scalar(&l)?;
                c.expected_T1 = if s == "auto" {
                    None
                } else {
                    Some(number(s, "a number or `auto`", line, col)?)
                };
            }
            "output_dir" => c.output_dir = scalar(&l)?.to_string(),
            "run_name" => c.run_name = scalar(&l)?.to_string(),
            _ => unreachable!("key list and match arms disagree"),
        }
    }
    c.validate()?;
    Ok(c)
}

fn site_mask(key: &str, sites: &[usize], l: usize) -> Result<u32> {
    let mut mask = 0u32;
    for &s in sites {
        if s >= l {
            return Err(CliError::invalid(key, format!("site {s} outside chain of length {l}")));
        }
        if mask >> s & 1 == 1 {
            return Err(CliError::invalid(key, format!("site {s} listed twice")));
        }
        mask |= 1 << s;
    }
    Ok(mask)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.L == 0 || self.L > tlschain::basis::MAX_CHAIN_LENGTH {
            return Err(CliError::invalid(
                "L",
                format!("must be between 1 and {}", tlschain::basis::MAX_CHAIN_LENGTH),
            ));
        }
        for (key, v) in [("U_tau_site", &self.U_tau_site), ("U_upsilon_site", &self.U_upsilon_site)] {
            if !v.is_empty() && v.len() != self.L {
                return Err(CliError::invalid(
                    key,
                    format!("has {} entries for a chain of length {}", v.len(), self.L),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::invalid(key, "entries must be finite"));
            }
        }
        for (key, v) in [
            ("J_tau", self.J_tau),
            ("J_upsilon", self.J_upsilon),
            ("U_cross", self.U_cross),
            ("U_q", self.U_q),
            ("J_q_tau", self.J_q_tau),
        ] {
            if !v.is_finite() {
                return Err(CliError::invalid(key, "must be finite"));
            }
        }
        for (key, v) in [("t_H", self.t_H), ("t_random", self.t_random)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(CliError::invalid(key, "must be finite and non-negative"));
            }
        }
        if self.t_H == 0.0 {
            return Err(CliError::invalid("t_H", "must be positive"));
        }
        if !(self.disorder_lo <= self.disorder_hi) || !self.disorder_hi.is_finite() || !self.disorder_lo.is_finite() {
            return Err(CliError::invalid("disorder_hi", "need finite disorder_lo <= disorder_hi"));
        }
        site_mask("tau_sites", &self.tau_sites, self.L)?;
        site_mask("upsilon_sites", &self.upsilon_sites, self.L)?;
        if self.n_cycles == Some(0) {
            return Err(CliError::invalid("n_cycles", "must be at least 1"));
        }
        if self.record_stride == Some(0) {
            return Err(CliError::invalid("record_stride", "must be at least 1"));
        }
        if self.n_trajectories == 0 {
            return Err(CliError::invalid("n_trajectories", "must be at least 1"));
        }
        if let Some(t) = self.expected_T1 {
            if !(t > 0.0) || !t.is_finite() {
                return Err(CliError::invalid("expected_T1", "must be finite and positive"));
            }
        }
        if self.n_cycles.is_none() && self.expected_T1.is_none() && self.J_q_tau == 0.0 {
            return Err(CliError::invalid(
                "n_cycles",
                "cannot size the run from J_q_tau = 0; set n_cycles or expected_T1",
            ));
        }
        if self.run_name.is_empty() || self.run_name.contains(['/', '\\']) {
            return Err(CliError::invalid("run_name", "must be a plain file-name prefix"));
        }
        Ok(())
    }

    pub fn model_params(&self) -> ModelParamsF64 {
        let fill = |v: &Vec<f64>| if v.is_empty() { vec![0.0; self.L] } else { v.clone() };
        ModelParamsF64 {
            j_tau: self.J_tau,
            j_upsilon: self.J_upsilon,
            u_tau_site: fill(&self.U_tau_site),
            u_upsilon_site: fill(&self.U_upsilon_site),
            u_cross: self.U_cross,
            u_q: self.U_q,
            j_q_tau: self.J_q_tau,
        }
    }

    pub fn initial_state(&self) -> Result<InitialState> {
        Ok(InitialState {
            qubit: self.qubit_state,
            tau_sites: site_mask("tau_sites", &self.tau_sites, self.L)?,
            upsilon_sites: site_mask("upsilon_sites", &self.upsilon_sites, self.L)?,
        })
    }

    /// The override if given, else the reference time scaled as `J⁻²`.
    pub fn expected_t1(&self) -> f64 {
        self.expected_T1
            .unwrap_or(REFERENCE_T1 * (REFERENCE_J / self.J_q_tau).powi(2))
    }

    /// Length of the simulated window on the recorded clock.
    pub fn horizon(&self) -> f64 {
        let slowest = match self.qubit_state {
            QubitState::Plus => T2_OVER_T1 * self.expected_t1(),
            _ => self.expected_t1(),
        };
        HORIZON_FACTOR * slowest
    }

    /// Schedule with `n_cycles` and `record_stride` resolved.
    pub fn schedule(&self) -> Result<ScheduleF64> {
        let mut s = FftieSchedule {
            t_h: self.t_H,
            t_random: self.t_random,
            disorder_lo: self.disorder_lo,
            disorder_hi: self.disorder_hi,
            n_cycles: 1,
            record_stride: 1,
            time_axis: self.time_axis,
            coherent_only: self.coherent_only,
        };
        let n = match self.n_cycles {
            Some(n) => n,
            None => {
                let h = self.horizon();
                if !h.is_finite() {
                    return Err(CliError::invalid("expected_T1", "horizon is not finite"));
                }
                s.cycles_for_horizon(h).max(MIN_ROWS)
            }
        };
        let stride = self.record_stride.unwrap_or((n / TARGET_ROWS).max(1));
        if stride > n {
            return Err(CliError::invalid(
                "record_stride",
                format!("{stride} exceeds n_cycles {n}"),
            ));
        }
        s.n_cycles = n;
        s.record_stride = stride;
        Ok(s)
    }

    /// Serialises every field; `parse_config` reads it back unchanged.
    pub fn to_text(&self) -> String {
        fn list<T: std::fmt::Display>(v: &[T]) -> String {
            let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            format!("[{}]", items.join(", "))
        }
        let auto = |v: Option<usize>| v.map_or("auto".to_string(), |n| n.to_string());
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("L", self.L.to_string());
        kv("J_tau", self.J_tau.to_string());
        kv("J_upsilon", self.J_upsilon.to_string());
        kv("U_tau_site", list(&self.U_tau_site));
        kv("U_upsilon_site", list(&self.U_upsilon_site));
        kv("U_cross", self.U_cross.to_string());
        kv("U_q", self.U_q.to_string());
        kv("J_q_tau", self.J_q_tau.to_string());
        kv(
            "qubit_state",
            match self.qubit_state {
                QubitState::Zero => "zero",
                QubitState::One => "one",
                QubitState::Plus => "plus",
            }
            .into(),
        );
        kv("tau_sites", list(&self.tau_sites));
        kv("upsilon_sites", list(&self.upsilon_sites));
        kv("t_H", self.t_H.to_string());
        kv("t_random", self.t_random.to_string());
        kv("disorder_lo", self.disorder_lo.to_string());
        kv("disorder_hi", self.disorder_hi.to_string());
        kv("n_cycles", auto(self.n_cycles));
        kv("record_stride", auto(self.record_stride));
        kv(
            "time_axis",
            match self.time_axis {
                TimeAxis::IncludeErasure => "include_erasure",
                TimeAxis::ExcludeErasure => "exclude_erasure",
            }
            .into(),
        );
        kv("coherent_only", self.coherent_only.to_string());
        kv("n_trajectories", self.n_trajectories.to_string());
        kv("master_seed", self.master_seed.to_string());
        kv("expected_T1", self.expected_T1.map_or("auto".into(), |t| t.to_string()));
        kv("output_dir", format!("\"{}\"", self.output_dir));
        kv("run_name", format!("\"{}\"", self.run_name));
        s
    }
}
