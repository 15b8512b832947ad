//! SER result CSV: fixed header, one row per (trial, Eb/N0, method), numbers
//! printed with 12 significant digits so files are byte-stable.

use rc_eq::ofdm::{Method, SerResult};

use crate::CliError;

pub const HEADER: &str = "method,ebn0_db,seed,n_symbols,n_errors,ser";

/// Formats `x` with at most 12 significant digits, trailing zeros removed.
///
/// Plain decimal notation is used for exponents in `[-5, 12)`, scientific
/// otherwise; non-finite values print as `inf`, `-inf` and `nan`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
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

pub fn format_row(r: &SerResult) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.method.label(),
        format_number(r.ebn0_db),
        r.seed,
        r.n_symbols,
        r.n_errors,
        format_number(r.ser)
    )
}

pub fn to_csv(rows: &[SerResult]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format_row(r));
        out.push('\n');
    }
    out
}

/// Parses a result CSV, checking the header and every field.
pub fn parse_csv(text: &str, source_name: &str) -> Result<Vec<SerResult>, CliError> {
    let schema = |message: String| CliError::Schema { source_name: source_name.to_string(), message };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        Some((_, h)) => return Err(schema(format!("header `{h}` differs from `{HEADER}`"))),
        None => return Err(schema("file is empty".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 6 {
            return Err(schema(format!("line {line_no}: expected 6 fields, found {}", fields.len())));
        }
        let bad = |name: &str| schema(format!("line {line_no}: invalid {name} `{line}`"));
        let method = Method::from_label(fields[0]).ok_or_else(|| bad("method"))?;
        let ebn0_db: f64 = fields[1].parse().map_err(|_| bad("ebn0_db"))?;
        let seed: u64 = fields[2].parse().map_err(|_| bad("seed"))?;
        let n_symbols: usize = fields[3].parse().map_err(|_| bad("n_symbols"))?;
        let n_errors: usize = fields[4].parse().map_err(|_| bad("n_errors"))?;
        let ser: f64 = fields[5].parse().map_err(|_| bad("ser"))?;
        if ebn0_db.is_nan() || n_errors > n_symbols || !(0.0..=1.0).contains(&ser) {
            return Err(bad("row values"));
        }
        rows.push(SerResult { method, ebn0_db, seed, n_symbols, n_errors, ser });
    }
    if rows.is_empty() {
        return Err(schema("no data rows".into()));
    }
    Ok(rows)
}

/// Pooled SER per (method, Eb/N0): total errors over total symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePoint {
    pub method: Method,
    pub ebn0_db: f64,
    pub n_symbols: usize,
    pub n_errors: usize,
    pub ser: f64,
}

/// Aggregates rows, ordered by method then Eb/N0.
pub fn aggregate(rows: &[SerResult]) -> Vec<AggregatePoint> {
    let mut points: Vec<AggregatePoint> = Vec::new();
    for r in rows {
        match points.iter_mut().find(|p| p.method == r.method && p.ebn0_db == r.ebn0_db) {
            Some(p) => {
                p.n_symbols += r.n_symbols;
                p.n_errors += r.n_errors;
            }
            None => points.push(AggregatePoint {
                method: r.method,
                ebn0_db: r.ebn0_db,
                n_symbols: r.n_symbols,
                n_errors: r.n_errors,
                ser: 0.0,
            }),
        }
    }
    for p in &mut points {
        p.ser = if p.n_symbols == 0 { 0.0 } else { p.n_errors as f64 / p.n_symbols as f64 };
    }
    points.sort_by(|a, b| a.method.cmp(&b.method).then(a.ebn0_db.total_cmp(&b.ebn0_db)));
    points
}

/// Pooled SER of `method` at `ebn0_db`, if present.
pub fn pooled_ser(points: &[AggregatePoint], method: Method, ebn0_db: f64) -> Option<f64> {
    points.iter().find(|p| p.method == method && p.ebn0_db == ebn0_db).map(|p| p.ser)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        let cases = [
            (0.0, "0"),
            (12.5, "12.5"),
            (25.0, "25"),
            (-3.0, "-3"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0 / 3.0, "0.666666666667"),
            (0.0123, "0.0123"),
            (1.5e-7, "1.5e-7"),
            (123456789012.0, "123456789012"),
            (123456789012345.0, "1.23456789012e14"),
            (1e20, "1e20"),
            (9.9999999999999, "10"),
            (f64::INFINITY, "inf"),
            (f64::NEG_INFINITY, "-inf"),
        ];
        for (x, want) in cases {
            assert_eq!(format_number(x), want, "{x}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            SerResult { method: Method::EsnOptimum, ebn0_db: 12.5, seed: 7, n_symbols: 3328, n_errors: 5, ser: 5.0 / 3328.0 },
            SerResult { method: Method::ZfPerfect, ebn0_db: f64::INFINITY, seed: 7, n_symbols: 3328, n_errors: 0, ser: 0.0 },
        ];
        let text = to_csv(&rows);
        assert!(text.starts_with("method,ebn0_db,seed,n_symbols,n_errors,ser\nesn-optimum,12.5,7,3328,5,0.00150240384615\n"));
        let parsed = parse_csv(&text, "mem").unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].method, Method::EsnOptimum);
        assert!(parsed[1].ebn0_db.is_infinite());
        assert_eq!(to_csv(&parsed), text);
    }

    #[test]
    fn schema_errors() {
        for text in [
            "",
            "method,ebn0,seed\n",
            "method,ebn0_db,seed,n_symbols,n_errors,ser\n",
            "method,ebn0_db,seed,n_symbols,n_errors,ser\nbogus,1,1,10,1,0.1\n",
            "method,ebn0_db,seed,n_symbols,n_errors,ser\nzf-perfect,1,1,10,11,1.1\n",
            "method,ebn0_db,seed,n_symbols,n_errors,ser\nzf-perfect,1,1,10\n",
        ] {
            assert!(matches!(parse_csv(text, "t"), Err(CliError::Schema { .. })), "{text:?}");
        }
    }

    #[test]
    fn aggregation_pools_trials() {
        let row = |method, seed, n_errors| SerResult { method, ebn0_db: 10.0, seed, n_symbols: 100, n_errors, ser: n_errors as f64 / 100.0 };
        let rows = vec![row(Method::LsMmse, 1, 2), row(Method::EsnRandom, 1, 9), row(Method::LsMmse, 2, 4)];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].method, Method::EsnRandom);
        assert_eq!(pooled_ser(&agg, Method::LsMmse, 10.0), Some(0.03));
        assert_eq!(pooled_ser(&agg, Method::LsMmse, 5.0), None);
    }
}
