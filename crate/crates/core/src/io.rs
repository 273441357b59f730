//! CSV output with fixed column order and 12 significant digits.

use crate::dynamics::TimeSeries;
use crate::spectrum::SweepRow;
use std::fmt::Write;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// `%.12g`-style formatting: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros removed.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const SERIES_HEADER: &str = "t,value,observable,p0,delta";

/// Rows of `t,value,observable,p0,delta`; `time_scale` and `value_scale`
/// convert from natural units.
pub fn series_csv(series: &[TimeSeries], p0: f64, delta: f64, time_scale: f64, value_scale: impl Fn(&TimeSeries) -> f64) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for s in series {
        let scale = value_scale(s);
        for (t, v) in s.times.iter().zip(&s.values) {
            writeln!(
                out,
                "{},{},{},{},{}",
                format_sig(t * time_scale),
                format_sig(v * scale),
                s.observable.tag(),
                format_sig(p0),
                format_sig(delta)
            )
            .expect("write to string");
        }
    }
    out
}

/// Columns for re-plotting one of the three velocity-sweep figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Free ZB blue shift.
    Fig1,
    /// Spin channel: ω₂ᶻᵇ, ω_L, ω^sb.
    Fig2,
    /// Longitudinal channel: ω₁ᶻᵇ, ω₃ᶻᵇ, ω₁ᵒᵇ.
    Fig3,
}

impl std::str::FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fig1" => Ok(Figure::Fig1),
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            other => Err(format!("unknown figure '{other}' (expected fig1, fig2 or fig3)")),
        }
    }
}

pub fn sweep_csv(rows: &[SweepRow], figure: Option<Figure>, frequency_scale: f64) -> String {
    let header = match figure {
        Some(Figure::Fig1) => "v,omega_zb",
        Some(Figure::Fig2) => "v,omega_zb2,omega_L,omega_sb",
        Some(Figure::Fig3) => "v,omega_zb1,omega_zb3,omega_ob1",
        None => "v,p,delta,omega_zb,omega_L,omega_zb1,omega_zb2,omega_zb3,omega_sb,omega_ob1,omega_ob2,omega_forbidden",
    };
    let mut out = format!("{header}\n");
    for row in rows {
        let f = row.freqs.scaled(frequency_scale);
        let free = row.free_zb * frequency_scale;
        let cols: Vec<f64> = match figure {
            Some(Figure::Fig1) => vec![row.v, free],
            Some(Figure::Fig2) => vec![row.v, f.omega_zb2, f.omega_l, f.omega_sb],
            Some(Figure::Fig3) => vec![row.v, f.omega_zb1, f.omega_zb3, f.omega_ob1],
            None => vec![
                row.v,
                row.p,
                f.delta,
                free,
                f.omega_l,
                f.omega_zb1,
                f.omega_zb2,
                f.omega_zb3,
                f.omega_sb,
                f.omega_ob1,
                f.omega_ob2,
                f.omega_forbidden,
            ],
        };
        let line: Vec<String> = cols.into_iter().map(format_sig).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
