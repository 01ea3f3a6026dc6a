use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use randkol::{Checkpoint, DensityTrace};

pub const TRACE_HEADER: &str = "position,count_lo,count_hi,density_lo";

/// Plain decimal with 12 significant digits, e.g. `0.466666666667`.
/// Zero prints as `0`.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    // Round in scientific form first so the exponent reflects any carry.
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

pub fn trace_row(c: &Checkpoint) -> String {
    format!(
        "{},{},{},{}",
        c.position,
        c.count_lo,
        c.count_hi,
        sig12(c.density_lo)
    )
}

/// Writes a density trace as CSV: header then one row per checkpoint.
pub fn emit_csv(trace: &DensityTrace, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_trace(trace, &mut w)?;
    w.flush()
}

pub fn write_trace<W: Write>(trace: &DensityTrace, w: &mut W) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for c in &trace.checkpoints {
        writeln!(w, "{}", trace_row(c))?;
    }
    Ok(())
}

/// Terminal checkpoint of every Monte Carlo trial.
pub fn emit_trials_csv(rows: &[(u64, Checkpoint)], path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "trial,{TRACE_HEADER}")?;
    for (trial, c) in rows {
        writeln!(w, "{trial},{}", trace_row(c))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(7.0 / 15.0), "0.466666666667");
        assert_eq!(sig12(0.5), "0.500000000000");
        assert_eq!(sig12(1.0), "1.00000000000");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(0.00123), "0.00123000000000");
        assert_eq!(sig12(0.9999999999999), "1.00000000000");
        assert_eq!(sig12(-0.25), "-0.250000000000");
        assert_eq!(sig12(1234.5), "1234.50000000");
    }

    #[test]
    fn empty_trace_is_header_only() {
        let mut buf = Vec::new();
        write_trace(&DensityTrace::default(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{TRACE_HEADER}\n"));
    }

    #[test]
    fn classic_row() {
        let c = Checkpoint::new(15, 7);
        assert_eq!(trace_row(&c), "15,7,8,0.466666666667");
    }
}
