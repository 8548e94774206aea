use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::supervisor::Mode;

/// One control tick of the closed loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub t: f64,
    pub y_r: f64,
    pub v_r: f64,
    pub y_p: f64,
    pub v_p: f64,
    /// Spring deflection `y_p - y_r`.
    pub dy: f64,
    /// True spring force.
    pub f_sp: f64,
    pub f_raw: f64,
    pub f_filt: f64,
    /// Unsaturated planarizer velocity command.
    pub v_motor_cmd: f64,
    pub mode: Mode,
    /// Position reference of the active controller, if it has one.
    pub y_des: Option<f64>,
    pub v_des: Option<f64>,
    /// `;`-separated event tags, empty when nothing happened.
    pub event: String,
}

impl TelemetryRecord {
    pub fn has_event(&self, prefix: &str) -> bool {
        self.event.split(';').any(|e| e.starts_with(prefix))
    }
}

/// Telemetry rows plus `key = value` header metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Telemetry {
    pub meta: Vec<(String, String)>,
    pub records: Vec<TelemetryRecord>,
}

impl Telemetry {
    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub const COLUMNS: [&str; 14] = [
    "t",
    "y_r",
    "v_r",
    "y_p",
    "v_p",
    "dy",
    "F_sp",
    "F_raw",
    "F_filt",
    "v_motor_cmd",
    "mode",
    "y_des",
    "v_des",
    "event",
];

const UNITS: &str = "# units: t [s], y_r [m], v_r [m/s], y_p [m], v_p [m/s], dy [m], F_sp [N], \
F_raw [N], F_filt [N], v_motor_cmd [m/s], mode [-], y_des [m], v_des [m/s], event [-]";

/// Formats with 9 significant digits, trailing zeros removed.
pub fn format_sig9(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..9).contains(&exp) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.to_string()
        }
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig9).unwrap_or_default()
}

pub fn write_csv_to<W: Write>(telemetry: &Telemetry, out: W) -> io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{UNITS}")?;
    for (k, v) in &telemetry.meta {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{}", COLUMNS.join(","))?;
    for r in &telemetry.records {
        let nums = [r.t, r.y_r, r.v_r, r.y_p, r.v_p, r.dy, r.f_sp, r.f_raw, r.f_filt, r.v_motor_cmd];
        let mut line = nums.iter().map(|x| format_sig9(*x)).collect::<Vec<_>>();
        line.push(r.mode.as_str().to_string());
        line.push(opt(r.y_des));
        line.push(opt(r.v_des));
        line.push(r.event.clone());
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

pub fn write_csv(telemetry: &Telemetry, path: impl AsRef<Path>) -> io::Result<()> {
    write_csv_to(telemetry, File::create(path)?)
}

fn bad(line: usize, msg: impl std::fmt::Display) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"))
}

pub fn read_csv(path: impl AsRef<Path>) -> io::Result<Telemetry> {
    let reader = BufReader::new(File::open(path)?);
    let mut telemetry = Telemetry::default();
    let mut header_seen = false;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let n = idx + 1;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                if !comment.trim_start().starts_with("units:") {
                    telemetry
                        .meta
                        .push((k.trim().to_string(), v.trim().to_string()));
                }
            }
            continue;
        }
        if !header_seen {
            if line.split(',').ne(COLUMNS.iter().copied()) {
                return Err(bad(n, "unexpected header row"));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.splitn(COLUMNS.len(), ',').collect();
        if fields.len() != COLUMNS.len() {
            return Err(bad(n, format!("expected {} fields", COLUMNS.len())));
        }
        let num = |i: usize| -> io::Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| bad(n, format!("column {} not a number: '{}'", COLUMNS[i], fields[i])))
        };
        let opt_num = |i: usize| -> io::Result<Option<f64>> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        telemetry.records.push(TelemetryRecord {
            t: num(0)?,
            y_r: num(1)?,
            v_r: num(2)?,
            y_p: num(3)?,
            v_p: num(4)?,
            dy: num(5)?,
            f_sp: num(6)?,
            f_raw: num(7)?,
            f_filt: num(8)?,
            v_motor_cmd: num(9)?,
            mode: fields[10].parse().map_err(|e| bad(n, e))?,
            y_des: opt_num(11)?,
            v_des: opt_num(12)?,
            event: fields[13].to_string(),
        });
    }
    if !header_seen {
        return Err(bad(0, "missing header row"));
    }
    Ok(telemetry)
}
