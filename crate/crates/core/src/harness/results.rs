//! Result rows and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] =
    ["sweep_var", "sweep_value", "trial", "nmse_db", "crlb", "iterations", "objective_final", "wall_ms", "seed"];

const SIG_DIGITS: usize = 9;

/// One (sweep point, trial) outcome. NaN metrics mark a failed trial.
#[derive(Clone, Debug)]
pub struct ResultRow {
    pub sweep_var: String,
    pub sweep_value: String,
    pub trial: usize,
    pub nmse_db: f64,
    pub crlb: f64,
    pub iterations: usize,
    pub objective_final: f64,
    pub wall_ms: f64,
    pub seed: u64,
}

fn same_number(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

impl PartialEq for ResultRow {
    fn eq(&self, o: &Self) -> bool {
        self.sweep_var == o.sweep_var
            && self.sweep_value == o.sweep_value
            && self.trial == o.trial
            && same_number(self.nmse_db, o.nmse_db)
            && same_number(self.crlb, o.crlb)
            && self.iterations == o.iterations
            && same_number(self.objective_final, o.objective_final)
            && same_number(self.wall_ms, o.wall_ms)
            && self.seed == o.seed
    }
}

/// Formats with 9 significant digits, `%g` style: plain notation for
/// exponents in `[-5, 9)`, scientific otherwise, trailing zeros dropped.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        // re-round from the mantissa so both branches agree on the digits
        let value: f64 = sci.parse().expect("valid float");
        trim_zeros(&format!("{value:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Rounds to the value that [`format_number`] prints.
pub fn round_sig(x: f64) -> f64 {
    format_number(x).parse().unwrap_or(f64::NAN)
}

pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.sweep_var.clone(),
            r.sweep_value.clone(),
            r.trial.to_string(),
            format_number(r.nmse_db),
            format_number(r.crlb),
            r.iterations.to_string(),
            format_number(r.objective_final),
            format_number(r.wall_ms),
            r.seed.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn create_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

/// Writes the CSV file, creating parent directories.
pub fn emit_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_results(rows, create_file(path)?)
}

pub const TRACE_HEADER: [&str; 6] = ["sweep_var", "sweep_value", "trial", "subcarrier", "iteration", "objective"];

/// Long-format convergence traces: one line per (row, subcarrier, outer
/// iteration). `traces[i]` belongs to `rows[i]`; iteration 0 is the value
/// at initialization and subcarriers are 1-based.
pub fn write_traces<W: Write>(rows: &[ResultRow], traces: &[Vec<Vec<f64>>], out: W) -> Result<()> {
    if rows.len() != traces.len() {
        return Err(crate::error::invalid(format!("{} rows but {} trace sets", rows.len(), traces.len())));
    }
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for (r, per_sc) in rows.iter().zip(traces) {
        for (m, trace) in per_sc.iter().enumerate() {
            for (t, v) in trace.iter().enumerate() {
                w.write_record([
                    r.sweep_var.clone(),
                    r.sweep_value.clone(),
                    r.trial.to_string(),
                    (m + 1).to_string(),
                    t.to_string(),
                    format_number(*v),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn parse_results(text: &str) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |k: usize| rec.get(k).ok_or_else(|| Error::Parse(format!("row {i}: missing column {}", CSV_HEADER[k])));
        let num = |k: usize| -> Result<f64> {
            field(k)?.parse().map_err(|_| Error::Parse(format!("row {i}: bad number in {}", CSV_HEADER[k])))
        };
        let int = |k: usize| -> Result<u64> {
            field(k)?.parse().map_err(|_| Error::Parse(format!("row {i}: bad integer in {}", CSV_HEADER[k])))
        };
        rows.push(ResultRow {
            sweep_var: field(0)?.to_string(),
            sweep_value: field(1)?.to_string(),
            trial: int(2)? as usize,
            nmse_db: num(3)?,
            crlb: num(4)?,
            iterations: int(5)? as usize,
            objective_final: num(6)?,
            wall_ms: num(7)?,
            seed: int(8)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(137.142857142857), "137.142857");
        assert_eq!(format_number(-31.25), "-31.25");
        assert_eq!(format_number(2e9), "2e9");
        assert_eq!(format_number(123456789.0), "123456789");
        assert_eq!(format_number(1.5e-7), "1.5e-7");
        assert_eq!(format_number(0.000123456789123), "0.000123456789");
        assert_eq!(format_number(f64::NAN), "NaN");
        assert_eq!(format_number(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_number(9.9999999999), "10");
        for x in [1.0 / 3.0, -2.0e-12, 6.02214076e23, 42.0] {
            assert_eq!(format_number(round_sig(x)), format_number(x));
        }
    }
}
