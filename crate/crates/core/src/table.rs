//! Plain CSV tables: one header row, comma separated, LF line endings.
//!
//! Floats are written with a fixed number of significant digits in the
//! style of C's `%g`, so outputs are byte-stable across runs.

use std::fmt::Write;

/// Significant digits used for every float in a table.
pub const SIG_DIGITS: usize = 12;
/// Significant digits of the rounded "human diffing" copies.
pub const ROUNDED_DIGITS: usize = 6;

/// Formats `x` with `digits` significant digits, `%g` style: fixed notation
/// for moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // Round first, then read the decimal exponent off the rounded value.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Default float formatting for table cells.
pub fn num(x: f64) -> String {
    fmt_sig(x, SIG_DIGITS)
}

/// Incrementally built CSV document.
#[derive(Debug, Clone)]
pub struct Table {
    columns: usize,
    buf: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Table {
            columns: header.len(),
            buf,
        }
    }

    /// Appends a row. Panics if the cell count does not match the header.
    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut count = 0;
        for (i, cell) in cells.into_iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            let _ = write!(self.buf, "{}", cell.as_ref());
            count += 1;
        }
        assert_eq!(count, self.columns, "row width does not match header");
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}
