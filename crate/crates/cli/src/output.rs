use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Default, Serialize)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub methods: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub wall_time: f64,
}

#[derive(Debug, Serialize)]
pub struct Envelope {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub parameters: BTreeMap<String, Value>,
    pub results: Value,
    pub provenance: Provenance,
}

impl Envelope {
    pub fn new(command: &'static str) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            command,
            parameters: BTreeMap::new(),
            results: Value::Null,
            provenance: Provenance::default(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn finish(&mut self, started: Instant) {
        self.provenance.wall_time = started.elapsed().as_secs_f64();
    }
}

/// `%.17g`: 17 significant digits, trailing zeros dropped.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rows of a `quantity,key,value` table.
#[derive(Debug, Default)]
pub struct LongTable {
    rows: Vec<(String, String, String)>,
}

impl LongTable {
    pub fn text(&mut self, quantity: &str, key: impl ToString, value: impl ToString) {
        self.rows
            .push((quantity.into(), key.to_string(), value.to_string()));
    }

    pub fn num(&mut self, quantity: &str, key: impl ToString, value: f64) {
        self.text(quantity, key, fmt_g17(value));
    }

    pub fn write(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "quantity,key,value")?;
        for (q, k, v) in &self.rows {
            writeln!(out, "{q},{k},{v}")?;
        }
        Ok(())
    }
}

pub fn write_json(out: &mut impl Write, envelope: &Envelope) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, envelope)?;
    writeln!(out)
}

/// Provenance for CSV output goes to stderr so stdout stays a pure table.
pub fn write_provenance(envelope: &Envelope) -> io::Result<()> {
    let line = serde_json::json!({
        "command": envelope.command,
        "parameters": envelope.parameters,
        "provenance": envelope.provenance,
    });
    writeln!(io::stderr().lock(), "provenance: {line}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(fmt_g17(1.0), "1");
        assert_eq!(fmt_g17(2.5), "2.5");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(1.3327473824328992), "1.3327473824328993");
        assert_eq!(fmt_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(fmt_g17(123456.0), "123456");
        assert_eq!(fmt_g17(1e20), "1e+20");
        assert_eq!(fmt_g17(-0.00001), "-1.0000000000000001e-05");
        assert_eq!(fmt_g17(0.0001), "0.0001");
    }

    #[test]
    fn g17_round_trips() {
        for &x in &[
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02214076e23,
            2.2250738585072014e-308,
            0.36787944117144233,
        ] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }
}
