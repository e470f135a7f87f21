//! CSV and JSON rendering.

use crate::config::ScenarioConfig;
use crate::run::{default_n_c, VERSION};

/// A rendered output file, named relative to the output directory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// `%.12g`: 12 significant digits, exponent form outside `[1e-5, 1e12)`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Comment block heading every CSV file.
pub fn header_comment(cfg: &ScenarioConfig) -> String {
    let mut s = format!("# scenario: {} ({})\n# etpump {VERSION}\n", cfg.id, cfg.kind.as_str());
    if let Some(d) = &cfg.description {
        s.push_str(&format!("# {d}\n"));
    }
    for line in cfg.echo() {
        s.push_str(&format!("# {line}\n"));
    }
    s.push_str(&format!("# n_c = {}\n", cfg.n_c.unwrap_or_else(|| default_n_c(cfg.kind))));
    if let Some(net) = &cfg.network {
        s.push_str(&format!("# seed = {}\n", net.seed));
    }
    s
}

pub fn csv_table(cfg: &ScenarioConfig, suffix: &str, columns: &[&str], rows: &[Vec<f64>]) -> OutputFile {
    let mut s = header_comment(cfg);
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_sig(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    OutputFile { name: format!("{}{suffix}.csv", cfg.output_stem()), contents: s }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.1234567890123456), "0.123456789012");
        assert_eq!(fmt_sig(-2.5e-7), "-2.5e-07");
        assert_eq!(fmt_sig(123456.0), "123456");
        assert_eq!(fmt_sig(6.02214076e23), "6.02214076e+23");
        assert_eq!(fmt_sig(0.998), "0.998");
    }
}
