use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::config::{RunConfig, FORMAT_VERSION};

/// Pretty JSON with every float written as `{:.16e}`, so equal values always
/// produce equal bytes.
pub struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Default for FixedFloat<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::new())
    }
}

impl Formatter for FixedFloat<'_> {
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(translike_core::fmt17(v).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat::default());
    value.serialize(&mut ser).expect("report values serialise");
    buf.push(b'\n');
    String::from_utf8(buf).expect("json is utf-8")
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: Value,
}

impl Check {
    pub fn new(name: &'static str, pass: bool, detail: impl Serialize) -> Self {
        Self {
            name,
            pass,
            detail: serde_json::to_value(detail).expect("check detail serialises"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Error => 1,
            Status::Fail => 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format_version: u32,
    pub config: RunConfig,
    pub status: Status,
    pub exit_code: i32,
    pub reasons: Vec<String>,
    pub checks: Vec<Check>,
    pub results: Value,
    pub artifacts: Vec<String>,
}

impl Report {
    pub fn new(config: &RunConfig, status: Status, reasons: Vec<String>, checks: Vec<Check>, results: Value) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config: config.clone(),
            status,
            exit_code: status.exit_code(),
            reasons,
            checks,
            results,
            artifacts: Vec::new(),
        }
    }
}
