//! Trace CSV files.
//!
//! Trace layout: `k,x_0..x_{n-1},u_0..u_{m-1},e_norm,threshold,is_event,V`.
//! Floats carry 17 significant digits so values round-trip exactly; `V` is
//! empty when it was not recorded.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::sim::{SimTrace, TraceRow};

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn state_header(trace: &SimTrace) -> (Vec<String>, Vec<String>) {
    (
        (0..trace.state_dim()).map(|i| format!("x_{i}")).collect(),
        (0..trace.input_dim()).map(|i| format!("u_{i}")).collect(),
    )
}

pub fn write_trace_csv<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let (xs, us) = state_header(trace);
    let mut header = vec!["k".to_string()];
    header.extend(xs);
    header.extend(us);
    header.extend(["e_norm", "threshold", "is_event", "V"].map(String::from));
    w.write_record(&header)?;
    for r in &trace.rows {
        let mut rec = vec![r.k.to_string()];
        rec.extend(r.x.iter().map(|&v| fmt_f64(v)));
        rec.extend(r.u.iter().map(|&v| fmt_f64(v)));
        rec.push(fmt_f64(r.e_norm));
        rec.push(fmt_f64(r.threshold));
        rec.push(u8::from(r.is_event).to_string());
        rec.push(r.v.map(fmt_f64).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<trace writer>", e))?;
    Ok(())
}

pub fn write_trace_file(trace: &SimTrace, path: &Path) -> Result<()> {
    let file = create(path)?;
    write_trace_csv(trace, BufWriter::new(file))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map_err(|e| Error::io(path, e))
}

fn parse<T: std::str::FromStr>(field: &str, col: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse `{field}` in column {col}")))
}

/// Reads a trace written by [`write_trace_csv`]; event times are rebuilt from `is_event`.
pub fn read_trace_csv<R: Read>(input: R) -> Result<SimTrace> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let n = header.iter().filter(|h| h.starts_with("x_")).count();
    let m = header.iter().filter(|h| h.starts_with("u_")).count();
    if header.len() != n + m + 5 || header.get(0) != Some("k") {
        return Err(Error::invalid("unexpected trace header"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let x = (1..=n).map(|i| parse(get(i), "x")).collect::<Result<Vec<f64>>>()?;
        let u = (n + 1..=n + m).map(|i| parse(get(i), "u")).collect::<Result<Vec<f64>>>()?;
        let base = n + m + 1;
        let v = get(base + 3);
        rows.push(TraceRow {
            k: parse(get(0), "k")?,
            x: DVector::from_vec(x),
            u: DVector::from_vec(u),
            e_norm: parse(get(base), "e_norm")?,
            threshold: parse(get(base + 1), "threshold")?,
            is_event: get(base + 2) == "1",
            v: if v.is_empty() { None } else { Some(parse(v, "V")?) },
        });
    }
    let event_times = rows.iter().filter(|r| r.is_event).map(|r| r.k).collect();
    Ok(SimTrace { rows, event_times })
}

pub fn read_trace_file(path: &Path) -> Result<SimTrace> {
    read_trace_csv(File::open(path).map_err(|e| Error::io(path, e))?)
}

/// Plot data: `k,e_norm,threshold,is_event,x_*,u_*`.
pub fn write_plot_csv<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    if trace.rows.is_empty() {
        return Err(Error::invalid("cannot emit plot data for an empty trace"));
    }
    let mut w = csv::Writer::from_writer(out);
    let (xs, us) = state_header(trace);
    let mut header: Vec<String> = ["k", "e_norm", "threshold", "is_event"].map(String::from).to_vec();
    header.extend(xs);
    header.extend(us);
    w.write_record(&header)?;
    for r in &trace.rows {
        let mut rec = vec![
            r.k.to_string(),
            fmt_f64(r.e_norm),
            fmt_f64(r.threshold),
            u8::from(r.is_event).to_string(),
        ];
        rec.extend(r.x.iter().map(|&v| fmt_f64(v)));
        rec.extend(r.u.iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<plot writer>", e))?;
    Ok(())
}

pub fn emit_plot_data(trace: &SimTrace, out: &Path) -> Result<()> {
    let file = create(out)?;
    write_plot_csv(trace, BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(k: usize, x: f64, v: Option<f64>) -> TraceRow {
        TraceRow {
            k,
            x: DVector::from_vec(vec![x, -x]),
            u: DVector::from_vec(vec![0.5 * x]),
            e_norm: x.abs() / 3.0,
            threshold: 1.0 / 7.0,
            is_event: k.is_multiple_of(3),
            v,
        }
    }

    #[test]
    fn header_layout() {
        let t = SimTrace { rows: vec![row(0, 1.0, None)], event_times: vec![0] };
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "k,x_0,x_1,u_0,e_norm,threshold,is_event,V");
        assert!(lines.next().unwrap().ends_with(",1,"));
    }

    #[test]
    fn plot_data_rejects_empty_trace() {
        let t = SimTrace { rows: vec![], event_times: vec![] };
        assert!(write_plot_csv(&t, Vec::new()).is_err());
    }

    proptest! {
        #[test]
        fn trace_round_trips_exactly(xs in prop::collection::vec(-1e300f64..1e300, 1..20), with_v in any::<bool>()) {
            let rows: Vec<TraceRow> = xs.iter().enumerate()
                .map(|(k, &x)| row(k, x, with_v.then_some(x / 11.0)))
                .collect();
            let event_times = rows.iter().filter(|r| r.is_event).map(|r| r.k).collect();
            let t = SimTrace { rows, event_times };
            let mut buf = Vec::new();
            write_trace_csv(&t, &mut buf).unwrap();
            prop_assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), t);
        }
    }
}
