//! Scenario and experiment files.
//!
//! The native format is flat `key = value` lines. `#` starts a comment,
//! values are JSON where they parse as JSON and bare strings otherwise, and
//! dotted keys address nested fields:
//!
//! ```text
//! # Fig. 1
//! source = [0, 0, 0]
//! ris = { "x": 27, "y": 25, "z": 25 }
//! direct_law.k0_db = -33.1
//! direct_law.exponent = 3.5
//! ```
//!
//! A document whose first non-blank character is `{` is read as JSON with
//! the same field names.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::Value;

use crate::channel::{PathLossLaw, Position3, ScenarioConfig};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// A parsed key–value document with the source line of every key.
#[derive(Debug, Clone, Default)]
pub struct Document {
    entries: BTreeMap<String, (Value, Option<usize>)>,
    used: std::cell::RefCell<BTreeSet<String>>,
}

fn parse_error(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        key: key.map(str::to_string),
        message: message.into(),
    }
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::parse_json(text)
        } else {
            Self::parse_kv(text)
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn parse_kv(text: &str) -> Result<Self> {
        let mut doc = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(parse_error(Some(line_no), None, "expected `key = value`"));
            };
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
                return Err(parse_error(Some(line_no), Some(key), "invalid key"));
            }
            let value = value.trim();
            let parsed = serde_json::from_str::<Value>(value).unwrap_or_else(|_| Value::String(value.to_string()));
            doc.insert(key.to_string(), parsed, Some(line_no))?;
        }
        Ok(doc)
    }

    fn parse_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| parse_error(Some(e.line()), None, format!("invalid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(parse_error(None, None, "top-level JSON value must be an object"));
        };
        let mut doc = Self::default();
        for (k, v) in map {
            doc.insert(k, v, None)?;
        }
        Ok(doc)
    }

    fn insert(&mut self, key: String, value: Value, line: Option<usize>) -> Result<()> {
        if let Some((_, prev)) = self.entries.get(&key) {
            let at = prev.map(|l| format!(" (first set on line {l})")).unwrap_or_default();
            return Err(parse_error(line, Some(&key), format!("duplicate key{at}")));
        }
        self.entries.insert(key, (value, line));
        Ok(())
    }

    /// Value at a dotted path, assembling dotted sub-keys into an object
    /// when the path itself is not set.
    fn lookup(&self, key: &str) -> Option<(Value, Option<usize>)> {
        if let Some((v, l)) = self.entries.get(key) {
            self.used.borrow_mut().insert(key.to_string());
            return Some((v.clone(), *l));
        }
        let prefix = format!("{key}.");
        let mut obj = serde_json::Map::new();
        let mut line = None;
        for (k, (v, l)) in self.entries.range(prefix.clone()..) {
            let Some(rest) = k.strip_prefix(&prefix) else { break };
            obj.insert(rest.to_string(), v.clone());
            line = line.or(*l);
            self.used.borrow_mut().insert(k.clone());
        }
        if obj.is_empty() {
            // Nested object inside a JSON document.
            let (head, tail) = key.split_once('.')?;
            let (v, l) = self.entries.get(head)?;
            let inner = v.get(tail)?.clone();
            self.used.borrow_mut().insert(head.to_string());
            return Some((inner, *l));
        }
        Some((Value::Object(obj), line))
    }

    /// True when `key` (or a dotted sub-key) is set to something other than
    /// `null`.
    pub fn contains(&self, key: &str) -> bool {
        let prefix = format!("{key}.");
        let set = |v: &Value| !v.is_null();
        self.entries.get(key).is_some_and(|(v, _)| set(v))
            || self.entries.iter().any(|(k, (v, _))| k.starts_with(&prefix) && set(v))
    }

    fn required(&self, key: &str) -> Result<(Value, Option<usize>)> {
        self.lookup(key)
            .ok_or_else(|| parse_error(None, Some(key), "missing required key"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let (v, line) = self.required(key)?;
        as_f64(&v).ok_or_else(|| parse_error(line, Some(key), format!("expected a number, found {v}")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.contains(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let (v, line) = self.required(key)?;
        v.as_u64()
            .map(|n| n as usize)
            .ok_or_else(|| parse_error(line, Some(key), format!("expected a non-negative integer, found {v}")))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let (v, line) = self.required(key)?;
        v.as_u64()
            .ok_or_else(|| parse_error(line, Some(key), format!("expected a non-negative integer, found {v}")))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        let (v, line) = self.required(key)?;
        v.as_bool()
            .ok_or_else(|| parse_error(line, Some(key), format!("expected true or false, found {v}")))
    }

    pub fn string(&self, key: &str) -> Result<String> {
        let (v, line) = self.required(key)?;
        match v {
            Value::String(s) => Ok(s),
            other => Err(parse_error(line, Some(key), format!("expected a string, found {other}"))),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let (v, line) = self.required(key)?;
        let err = || parse_error(line, Some(key), format!("expected a list of numbers, found {v}"));
        v.as_array()
            .ok_or_else(err)?
            .iter()
            .map(|x| as_f64(x).ok_or_else(err))
            .collect()
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let (v, line) = self.required(key)?;
        let err = || parse_error(line, Some(key), format!("expected a list of integers, found {v}"));
        v.as_array()
            .ok_or_else(err)?
            .iter()
            .map(|x| x.as_u64().map(|n| n as usize).ok_or_else(err))
            .collect()
    }

    pub fn string_list(&self, key: &str) -> Result<Vec<String>> {
        let (v, line) = self.required(key)?;
        let err = || parse_error(line, Some(key), format!("expected a list of strings, found {v}"));
        v.as_array()
            .ok_or_else(err)?
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(err))
            .collect()
    }

    /// `[x, y, z]` or `{x, y, z}`.
    pub fn position(&self, key: &str) -> Result<Position3> {
        let (v, line) = self.required(key)?;
        position_from(&v).ok_or_else(|| parse_error(line, Some(key), format!("expected [x, y, z] or {{x, y, z}}, found {v}")))
    }

    pub fn law(&self, key: &str) -> Result<PathLossLaw> {
        let (v, line) = self.required(key)?;
        let get = |name: &str| v.get(name).and_then(as_f64);
        match (get("k0_db"), get("exponent")) {
            (Some(k0_db), Some(exponent)) => Ok(PathLossLaw { k0_db, exponent }),
            _ => Err(parse_error(line, Some(key), "expected `k0_db` and `exponent`")),
        }
    }

    /// `[azimuth, elevation]` or `{azimuth, elevation}`, radians.
    pub fn angles(&self, key: &str) -> Result<Option<(f64, f64)>> {
        if !self.contains(key) {
            return Ok(None);
        }
        let (v, line) = self.required(key)?;
        let pair = match &v {
            Value::Array(a) if a.len() == 2 => as_f64(&a[0]).zip(as_f64(&a[1])),
            Value::Object(_) => v.get("azimuth").and_then(as_f64).zip(v.get("elevation").and_then(as_f64)),
            _ => None,
        };
        pair.map(Some)
            .ok_or_else(|| parse_error(line, Some(key), format!("expected [azimuth, elevation], found {v}")))
    }

    /// Keys never read, with their lines; `null` entries count as unset.
    pub fn unused_keys(&self) -> Vec<(String, Option<usize>)> {
        let used = self.used.borrow();
        self.entries
            .iter()
            .filter(|(k, (v, _))| !used.contains(*k) && !v.is_null())
            .map(|(k, (_, l))| (k.clone(), *l))
            .collect()
    }

    /// Fails on the first key that was never read.
    pub fn deny_unused(&self) -> Result<()> {
        match self.unused_keys().into_iter().next() {
            Some((key, line)) => Err(parse_error(line, Some(&key), "unknown key")),
            None => Ok(()),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    // `#` inside a quoted string is kept.
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            '\\' if in_str => escaped = !escaped,
            '"' if !escaped => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => escaped = false,
        }
        if c != '\\' {
            escaped = false;
        }
    }
    line
}

fn as_f64(v: &Value) -> Option<f64> {
    v.as_f64()
}

fn position_from(v: &Value) -> Option<Position3> {
    match v {
        Value::Array(a) if a.len() == 3 => Some(Position3::new(as_f64(&a[0])?, as_f64(&a[1])?, as_f64(&a[2])?)),
        Value::Object(_) => Some(Position3::new(
            v.get("x").and_then(as_f64)?,
            v.get("y").and_then(as_f64)?,
            v.get("z").and_then(as_f64)?,
        )),
        _ => None,
    }
}

/// Keys a scenario document may carry.
pub const SCENARIO_KEYS: [&str; 16] = [
    "source",
    "destination",
    "ris",
    "m_elements",
    "n_h",
    "wavelength",
    "element_spacing",
    "tx_power_dbm",
    "noise_power_dbm",
    "direct_law",
    "indirect_law_sr",
    "indirect_law_rd",
    "rician_intercept",
    "rician_slope",
    "angles_sr",
    "angles_rd",
];

/// Reads the scenario fields of `doc`; other keys are left for the caller.
pub fn scenario_from_document(doc: &Document) -> Result<ScenarioConfig> {
    let element_spacing = if doc.contains("element_spacing") {
        Some(doc.f64("element_spacing")?)
    } else {
        None
    };
    let cfg = ScenarioConfig {
        source: doc.position("source")?,
        destination: doc.position("destination")?,
        ris: doc.position("ris")?,
        m_elements: doc.usize("m_elements")?,
        n_h: doc.usize("n_h")?,
        wavelength: doc.f64("wavelength")?,
        element_spacing,
        tx_power_dbm: doc.f64("tx_power_dbm")?,
        noise_power_dbm: doc.f64("noise_power_dbm")?,
        direct_law: doc.law("direct_law")?,
        indirect_law_sr: doc.law("indirect_law_sr")?,
        indirect_law_rd: doc.law("indirect_law_rd")?,
        rician_intercept: doc.f64_or("rician_intercept", 1.3)?,
        rician_slope: doc.f64_or("rician_slope", 0.003)?,
        angles_sr: doc.angles("angles_sr")?,
        angles_rd: doc.angles("angles_rd")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses and validates a scenario; unknown keys are rejected.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let doc = Document::parse(text)?;
    let cfg = scenario_from_document(&doc)?;
    doc.deny_unused()?;
    Ok(cfg)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

/// Renders a scenario in the flat key–value format.
pub fn scenario_to_string(cfg: &ScenarioConfig) -> String {
    let pos = |p: &Position3| format!("[{}, {}, {}]", p.x, p.y, p.z);
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(&v);
        s.push('\n');
    };
    put("source", pos(&cfg.source));
    put("ris", pos(&cfg.ris));
    put("destination", pos(&cfg.destination));
    put("m_elements", cfg.m_elements.to_string());
    put("n_h", cfg.n_h.to_string());
    put("wavelength", cfg.wavelength.to_string());
    if let Some(sp) = cfg.element_spacing {
        put("element_spacing", sp.to_string());
    }
    put("tx_power_dbm", cfg.tx_power_dbm.to_string());
    put("noise_power_dbm", cfg.noise_power_dbm.to_string());
    for (name, law) in [
        ("direct_law", &cfg.direct_law),
        ("indirect_law_sr", &cfg.indirect_law_sr),
        ("indirect_law_rd", &cfg.indirect_law_rd),
    ] {
        put(&format!("{name}.k0_db"), law.k0_db.to_string());
        put(&format!("{name}.exponent"), law.exponent.to_string());
    }
    put("rician_intercept", cfg.rician_intercept.to_string());
    put("rician_slope", cfg.rician_slope.to_string());
    if let Some((a, e)) = cfg.angles_sr {
        put("angles_sr", format!("[{a}, {e}]"));
    }
    if let Some((a, e)) = cfg.angles_rd {
        put("angles_rd", format!("[{a}, {e}]"));
    }
    s
}

/// Axis-aligned region destinations are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DestinationBox {
    pub min: Position3,
    pub max: Position3,
}

/// Stratified sample of `per_axis²` points over the x–y extent of the box.
///
/// The x–y rectangle is cut into a `per_axis × per_axis` grid and one point
/// is drawn uniformly inside each cell; `z` is uniform over its range (fixed
/// when the range is empty). Points come out in row-major cell order.
pub fn stratified_destinations(region: &DestinationBox, per_axis: usize, seed: u64) -> Vec<Position3> {
    let mut stream = RandomStream::new(seed);
    let n = per_axis as f64;
    let (lo, hi) = (region.min, region.max);
    let mut out = Vec::with_capacity(per_axis * per_axis);
    for i in 0..per_axis {
        for j in 0..per_axis {
            let x = lo.x + (hi.x - lo.x) * (i as f64 + stream.uniform()) / n;
            let y = lo.y + (hi.y - lo.y) * (j as f64 + stream.uniform()) / n;
            let z = if hi.z > lo.z { stream.uniform_in(lo.z, hi.z) } else { lo.z };
            out.push(Position3::new(x, y, z));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"
# reference link
source = [0, 0, 0]
ris = {"x": 27, "y": 25, "z": 25}
destination = [180, 100, 25]
m_elements = 64
n_h = 8
wavelength = 0.16655
tx_power_dbm = 20
noise_power_dbm = -94   # -174 dBm/Hz + 73 dB + 10 dB
direct_law.k0_db = -33.1
direct_law.exponent = 3.5
indirect_law_sr = {"k0_db": -25.5, "exponent": 2.4}
indirect_law_rd.k0_db = -25.5
indirect_law_rd.exponent = 2.4
"#;

    #[test]
    fn parses_flat_format() {
        let cfg = parse_scenario(FIG1).unwrap();
        assert_eq!(cfg.ris, Position3::new(27.0, 25.0, 25.0));
        assert_eq!(cfg.direct_law, PathLossLaw::new(-33.1, 3.5));
        assert_eq!(cfg.rician_intercept, 1.3);
        assert_eq!(cfg.angles_sr, None);
    }

    #[test]
    fn round_trip() {
        let cfg = parse_scenario(FIG1).unwrap();
        assert_eq!(parse_scenario(&scenario_to_string(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn json_format() {
        let cfg = parse_scenario(FIG1).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_scenario(&json).unwrap(), cfg);
    }

    #[test]
    fn missing_key_is_named() {
        let text = FIG1.replace("m_elements = 64\n", "");
        match parse_scenario(&text) {
            Err(Error::Parse { key: Some(k), .. }) => assert_eq!(k, "m_elements"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn errors_carry_line() {
        let text = FIG1.replace("n_h = 8", "n_h = eight");
        match parse_scenario(&text) {
            Err(Error::Parse { line: Some(l), key: Some(k), .. }) => {
                assert_eq!(k, "n_h");
                assert_eq!(l, 7);
            }
            other => panic!("{other:?}"),
        }
        let text = format!("{FIG1}\nbogus line\n");
        assert!(matches!(parse_scenario(&text), Err(Error::Parse { line: Some(_), .. })));
        let text = format!("{FIG1}\nextra = 1\n");
        assert!(matches!(parse_scenario(&text), Err(Error::Parse { key: Some(_), .. })));
        let text = format!("{FIG1}\nn_h = 4\n");
        assert!(matches!(parse_scenario(&text), Err(Error::Parse { line: Some(_), .. })));
    }

    #[test]
    fn divisibility_checked() {
        let text = FIG1.replace("m_elements = 64", "m_elements = 10").replace("n_h = 8", "n_h = 4");
        assert!(matches!(parse_scenario(&text), Err(Error::Config(_))));
    }

    #[test]
    fn stratified_sample_covers_cells() {
        let region = DestinationBox {
            min: Position3::new(100.0, 50.0, 15.0),
            max: Position3::new(180.0, 100.0, 15.0),
        };
        let pts = stratified_destinations(&region, 16, 3);
        assert_eq!(pts.len(), 256);
        assert!(pts.iter().all(|p| p.z == 15.0 && (100.0..180.0).contains(&p.x) && (50.0..100.0).contains(&p.y)));
        assert_eq!(pts, stratified_destinations(&region, 16, 3));
        // one point per 5 m × 3.125 m cell
        for (idx, p) in pts.iter().enumerate() {
            let (i, j) = (idx / 16, idx % 16);
            assert_eq!(((p.x - 100.0) / 5.0).floor() as usize, i);
            assert_eq!(((p.y - 50.0) / 3.125).floor() as usize, j);
        }
    }
}
