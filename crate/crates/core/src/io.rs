//! Line-oriented file formats: value streams, CDF artifacts, key-value
//! configs, and JSON-lines step records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::ecdf::EmpiricalCdf;
use crate::engine::StepRecord;
use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads one decimal per line; blank lines and `#` comments are skipped.
pub fn read_values(reader: impl BufRead, source_name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            source_name: source_name.to_string(),
            line: idx + 1,
            message: format!("expected a decimal number, found {text:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                line: idx + 1,
                message: format!("value {text:?} is not finite"),
            });
        }
        out.push(value);
    }
    Ok(out)
}

pub fn write_values(mut writer: impl Write, values: &[f64]) -> Result<()> {
    for &v in values {
        writeln!(writer, "{}", fmt_f64(v))?;
    }
    Ok(())
}

const ARTIFACT_HEADER: &str = "# entmatch-cdf n=";

pub fn write_artifact(mut writer: impl Write, cdf: &EmpiricalCdf) -> Result<()> {
    writeln!(writer, "{ARTIFACT_HEADER}{}", cdf.len())?;
    write_values(writer, cdf.knots())
}

pub fn read_artifact(mut reader: impl BufRead, source_name: &str) -> Result<EmpiricalCdf> {
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let parse_err = |message: String| Error::Parse {
        source_name: source_name.to_string(),
        line: 1,
        message,
    };
    let n: usize = header
        .trim()
        .strip_prefix(ARTIFACT_HEADER)
        .ok_or_else(|| {
            parse_err(format!(
                "missing artifact header, found {:?}",
                header.trim()
            ))
        })?
        .parse()
        .map_err(|_| parse_err(format!("bad sample count in header {:?}", header.trim())))?;
    let knots = read_values(reader, source_name)?;
    if knots.len() != n {
        return Err(Error::Calibration(format!(
            "{source_name}: header records n={n} but {} knots follow",
            knots.len()
        )));
    }
    if knots.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Calibration(format!(
            "{source_name}: knots are not sorted"
        )));
    }
    EmpiricalCdf::new(knots)
}

/// `key = value` pairs, one per line, `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                source_name: source_name.to_string(),
                line: idx + 1,
                message: format!("expected key = value, found {line:?}"),
            })?;
            let value = value.trim().trim_matches('"');
            entries.insert(key.trim().to_string(), value.to_string());
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.entries
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad value {v:?} for key {key:?}")))
            })
            .transpose()
    }

    /// Fails on the first key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::Config(format!("unknown config key {k:?}"))),
            None => Ok(()),
        }
    }
}

fn push_opt(out: &mut String, key: &str, value: Option<f64>) {
    match value {
        Some(v) => write!(out, ",\"{key}\":{}", fmt_f64(v)),
        None => write!(out, ",\"{key}\":null"),
    }
    .expect("writing to a String cannot fail");
}

/// One JSON object with keys in declaration order.
pub fn step_record_json(r: &StepRecord) -> String {
    let mut out = String::with_capacity(320);
    write!(
        out,
        "{{\"step\":{},\"z\":{},\"u\":{},\"b\":{},\"log_wealth\":{},\"epsilon\":{},\"u_tilde\":{},\"z_tilde\":{},\"alarm\":{}",
        r.step,
        fmt_f64(r.z),
        fmt_f64(r.u),
        fmt_f64(r.b),
        fmt_f64(r.log_wealth),
        fmt_f64(r.epsilon),
        fmt_f64(r.u_tilde),
        fmt_f64(r.z_tilde),
        r.alarm
    )
    .expect("writing to a String cannot fail");
    push_opt(&mut out, "omega", r.omega);
    push_opt(&mut out, "loss", r.loss);
    out.push('}');
    out
}

pub fn write_records(mut writer: impl Write, records: &[StepRecord]) -> Result<()> {
    for r in records {
        writeln!(writer, "{}", step_record_json(r))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn values_skip_blank_lines() {
        let v = read_values("0.5\n\n0.25\n   \n".as_bytes(), "src").unwrap();
        assert_eq!(v, vec![0.5, 0.25]);
    }

    #[test]
    fn values_report_line_numbers() {
        let err = read_values("0.1\n0.2\nabc\n".as_bytes(), "src.txt").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("src.txt:3:"), "{msg}");
        assert!(read_values("inf\n".as_bytes(), "s").is_err());
    }

    #[test]
    fn artifact_round_trip() {
        let cdf = EmpiricalCdf::new([0.3, 0.1, 0.2, 0.1]).unwrap();
        let mut buf = Vec::new();
        write_artifact(&mut buf, &cdf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# entmatch-cdf n=4\n"));
        assert_eq!(read_artifact(buf.as_slice(), "a").unwrap(), cdf);
    }

    #[test]
    fn artifact_count_mismatch() {
        let text = "# entmatch-cdf n=3\n0.1\n0.2\n";
        assert!(read_artifact(text.as_bytes(), "a").is_err());
        assert!(read_artifact("0.1\n0.2\n".as_bytes(), "a").is_err());
        assert!(read_artifact("# entmatch-cdf n=2\n0.3\n0.2\n".as_bytes(), "a").is_err());
    }

    #[test]
    fn key_values() {
        let kv = KeyValues::parse("D = 1.8 # clip\n\nmode = \"monitor-only\"\n", "cfg").unwrap();
        assert_eq!(kv.get::<f64>("D").unwrap(), Some(1.8));
        assert_eq!(kv.get_str("mode"), Some("monitor-only"));
        assert_eq!(kv.get::<f64>("eta").unwrap(), None);
        assert!(kv.get::<u64>("D").is_err());
        assert!(kv.check_keys(&["D"]).is_err());
        assert!(kv.check_keys(&["D", "mode"]).is_ok());
        assert!(KeyValues::parse("novalue\n", "cfg").is_err());
    }

    #[test]
    fn record_json_shape() {
        let r = StepRecord {
            step: 3,
            z: 0.25,
            u: 0.5,
            b: 1.0,
            log_wealth: -0.0,
            epsilon: 0.1,
            u_tilde: 0.49,
            z_tilde: 0.24,
            alarm: false,
            omega: None,
            loss: Some(1e-300),
        };
        let line = step_record_json(&r);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in [
            "step",
            "z",
            "u",
            "b",
            "log_wealth",
            "epsilon",
            "u_tilde",
            "z_tilde",
            "alarm",
            "omega",
            "loss",
        ] {
            assert!(keys.contains(&k), "{k}");
        }
        assert!(v["omega"].is_null());
        assert_eq!(v["epsilon"].as_f64(), Some(0.1));
        assert!(line.contains("\"z\":2.5000000000000000e-1"));
    }

    proptest! {
        #[test]
        fn float_format_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = fmt_f64(v);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
