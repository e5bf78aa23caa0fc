//! Sweep specification, CSV table and SVG chart.

use std::io::Write;

use gaussmeter::capacity::{log_spaced, SweepRow};
use gaussmeter::LogBase;
use serde::Deserialize;

pub const CSV_HEADER: [&str; 5] = ["N", "E", "C_ea", "C", "G"];
const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct EnergyRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "N")]
    pub n: Vec<f64>,
    #[serde(rename = "E")]
    pub e: EnergyRange,
    #[serde(default)]
    pub base: LogBase,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let spec: SweepSpec = serde_json::from_str(text)
            .map_err(|e| format!("invalid sweep spec at line {} column {}: {e}", e.line(), e.column()))?;
        if spec.n.is_empty() {
            return Err("\"N\" must list at least one value".into());
        }
        if let Some(bad) = spec.n.iter().find(|n| !(**n >= 0.0) || !n.is_finite()) {
            return Err(format!("noise value {bad} must be nonnegative"));
        }
        if spec.e.count == 0 {
            return Err("energy count must be at least 1".into());
        }
        if !(spec.e.min > 0.0) || !(spec.e.max >= spec.e.min) || !spec.e.max.is_finite() {
            return Err(format!(
                "energy range [{}, {}] must satisfy 0 < min <= max",
                spec.e.min, spec.e.max
            ));
        }
        Ok(spec)
    }

    pub fn energies(&self) -> Vec<f64> {
        let r = &self.e;
        match r.scale {
            Scale::Log => log_spaced(r.min, r.max, r.count).expect("validated range"),
            Scale::Linear if r.count == 1 => vec![r.min],
            Scale::Linear => (0..r.count)
                .map(|k| r.min + (r.max - r.min) * k as f64 / (r.count - 1) as f64)
                .collect(),
        }
    }
}

/// Formats with 12 significant digits, like C's `%.12g`.
pub fn format_significant(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if negative { "-" } else { "" };
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        let frac = digits[1..].trim_end_matches('0');
        let dot = if frac.is_empty() { "" } else { "." };
        return format!("{sign}{}{dot}{frac}e{exp}", &digits[..1]);
    }
    let body = if exp >= 0 {
        let split = exp as usize + 1;
        let frac = digits[split..].trim_end_matches('0');
        if frac.is_empty() {
            digits[..split].to_string()
        } else {
            format!("{}.{frac}", &digits[..split])
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{}", digits.trim_end_matches('0'))
    };
    format!("{sign}{body}")
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([r.n, r.e, r.cea, r.c, r.gain].map(format_significant))?;
    }
    w.flush()?;
    Ok(())
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    lx: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn px(&self, e: f64) -> f64 {
        let t = (e.log10() - self.lx.0) / (self.lx.1 - self.lx.0).max(1e-12);
        self.x0 + t * self.w
    }

    fn py(&self, v: f64) -> f64 {
        let t = (v - self.y.0) / (self.y.1 - self.y.0).max(1e-12);
        self.y0 + self.h - t * self.h
    }

    fn axes(&self, out: &mut String, title: &str, ylabel: &str) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        out.push_str(&format!(
            "<rect x=\"{x0}\" y=\"{y0}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"black\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
            x0 + w / 2.0,
            y0 - 10.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">E (log scale)</text>\n",
            x0 + w / 2.0,
            y0 + h + 36.0
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 {} {})\">{ylabel}</text>\n",
            x0 - 44.0,
            y0 + h / 2.0,
            x0 - 44.0,
            y0 + h / 2.0
        ));
        for dec in (self.lx.0.ceil() as i32)..=(self.lx.1.floor() as i32) {
            let x = self.px(10f64.powi(dec));
            out.push_str(&format!(
                "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>\n<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">1e{dec}</text>\n",
                y0 + h,
                y0 + h + 5.0,
                y0 + h + 18.0
            ));
        }
        for k in 0..=4 {
            let v = self.y.0 + (self.y.1 - self.y.0) * k as f64 / 4.0;
            let y = self.py(v);
            out.push_str(&format!(
                "<line x1=\"{}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/>\n<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                format_tick(v)
            ));
        }
    }

    fn curve(&self, out: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let path: Vec<String> = pts
            .iter()
            .map(|&(e, v)| format!("{:.2},{:.2}", self.px(e), self.py(v)))
            .collect();
        let dash = if dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>\n",
            path.join(" ")
        ));
    }
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Two panels over log E: capacities (C_ea solid, C dashed) and the gain.
pub fn render_svg(rows: &[SweepRow], base: LogBase) -> String {
    let mut ns: Vec<f64> = Vec::new();
    for r in rows {
        if !ns.contains(&r.n) {
            ns.push(r.n);
        }
    }
    let (emin, emax) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.e), b.max(r.e)));
    let lx = if emax > emin {
        (emin.log10(), emax.log10())
    } else {
        (emin.log10() - 0.5, emin.log10() + 0.5)
    };
    let cap_max = rows.iter().map(|r| r.cea.max(r.c)).fold(0.0, f64::max) * 1.05;
    let gain_max = rows.iter().map(|r| r.gain).fold(1.0, f64::max) * 1.05;
    let cap = Panel {
        x0: 70.0,
        y0: 40.0,
        w: 380.0,
        h: 300.0,
        lx,
        y: (0.0, cap_max.max(1e-12)),
    };
    let gain = Panel {
        x0: 560.0,
        y0: 40.0,
        w: 380.0,
        h: 300.0,
        lx,
        y: (0.0, gain_max),
    };
    let mut out = String::new();
    out.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"980\" height=\"420\" font-family=\"sans-serif\">\n");
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    cap.axes(&mut out, "C_ea (solid) and C (dashed)", &format!("capacity ({})", base.name()));
    gain.axes(&mut out, "Gain G = C_ea / C", "G");
    for (k, &n) in ns.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.n == n).collect();
        cap.curve(&mut out, &sel.iter().map(|r| (r.e, r.cea)).collect::<Vec<_>>(), color, false);
        cap.curve(&mut out, &sel.iter().map(|r| (r.e, r.c)).collect::<Vec<_>>(), color, true);
        gain.curve(&mut out, &sel.iter().map(|r| (r.e, r.gain)).collect::<Vec<_>>(), color, false);
        let ly = 60.0 + 16.0 * k as f64;
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{ly}\" font-size=\"12\" fill=\"{color}\" text-anchor=\"end\">N = {}</text>\n",
            gain.x0 + gain.w - 8.0,
            format_significant(n)
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_significant(0.0), "0");
        assert_eq!(format_significant(2.0), "2");
        assert_eq!(format_significant(0.918295834054490), "0.918295834054");
        assert_eq!(format_significant(-1.5), "-1.5");
        assert_eq!(format_significant(1e-5), "1e-5");
        assert_eq!(format_significant(0.0001234), "0.0001234");
        assert_eq!(format_significant(123456.789), "123456.789");
        assert_eq!(format_significant(1e12), "1e12");
        assert_eq!(format_significant(999999999999.9), "1e12");
        assert_eq!(format_significant(std::f64::consts::PI * 1e-7), "3.14159265359e-7");
    }

    #[test]
    fn formatting_is_a_fixed_point() {
        for x in [1.0 / 3.0, 2.0_f64.sqrt() * 1e7, 1e-9 / 7.0, 0.1, 123.456e-3] {
            let s = format_significant(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(format_significant(back), s);
            assert!((back - x).abs() <= 1e-11 * x.abs());
        }
    }

    #[test]
    fn spec_validation() {
        let s = SweepSpec::parse(r#"{"N":[0,1],"E":{"min":0.01,"max":100,"count":5}}"#).unwrap();
        assert_eq!(s.energies().len(), 5);
        assert_eq!(s.base, LogBase::Bits);
        let s = SweepSpec::parse(r#"{"N":[1],"E":{"min":1,"max":3,"count":3,"scale":"linear"},"base":"nats"}"#).unwrap();
        assert_eq!(s.energies(), vec![1.0, 2.0, 3.0]);
        assert!(SweepSpec::parse(r#"{"N":[],"E":{"min":1,"max":3,"count":3}}"#).is_err());
        assert!(SweepSpec::parse(r#"{"N":[1],"E":{"min":0,"max":3,"count":3}}"#).is_err());
        assert!(SweepSpec::parse(r#"{"N":[1],"E":{"min":1,"max":3,"count":0}}"#).is_err());
    }
}
