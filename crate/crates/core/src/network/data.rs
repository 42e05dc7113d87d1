use crate::linalg::CMat;
use crate::spectrum::format_sig;
use crate::{Error, Result, C64};

use super::{MatrixKind, PortMatrixFunction};

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Read `omega_rad_s, re_Z11.., im_Z11..` rows (row-major port pairs) as a
/// sampled impedance. Rows are sorted by frequency.
pub fn read_sampled_csv(text: &str, z0: f64) -> Result<PortMatrixFunction> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(io)?.clone();
    let cols = headers.len();
    if cols < 3 || (cols - 1) % 2 != 0 {
        return Err(Error::Malformed { line: 1, msg: format!("{cols} columns do not form re/im blocks") });
    }
    let n2 = (cols - 1) / 2;
    let n = (n2 as f64).sqrt().round() as usize;
    if n * n != n2 {
        return Err(Error::Malformed { line: 1, msg: format!("{n2} entries per block is not a square") });
    }
    let mut rows: Vec<(f64, CMat)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io)?;
        let line = i + 2;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::Malformed { line, msg: format!("not a number: `{s}`") }))
            .collect::<Result<_>>()?;
        if vals.len() != cols {
            return Err(Error::Malformed { line, msg: format!("expected {cols} fields") });
        }
        let m = CMat::from_fn(n, n, |a, b| C64::new(vals[1 + a * n + b], vals[1 + n2 + a * n + b]));
        rows.push((vals[0], m));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (om, mats) = rows.into_iter().unzip();
    PortMatrixFunction::sampled(MatrixKind::Z, z0, om, mats)
}

pub fn sampled_csv_header(n: usize) -> String {
    let mut h = vec!["omega_rad_s".to_string()];
    for part in ["re", "im"] {
        for a in 1..=n {
            for b in 1..=n {
                h.push(format!("{part}_Z{a}{b}_ohm"));
            }
        }
    }
    h.join(",")
}

/// Tabulate the impedance of `f` at the given angular frequencies.
pub fn write_sampled_csv(f: &PortMatrixFunction, omegas: &[f64]) -> Result<String> {
    let n = f.ports;
    let mut out = sampled_csv_header(n);
    out.push('\n');
    for &w in omegas {
        let s = C64::new(0.0, w);
        let z = super::convert_matrix(&f.eval(s)?, f.kind, MatrixKind::Z, f.z0, s)?;
        let mut fields = vec![format_sig(w)];
        fields.extend((0..n * n).map(|i| format_sig(z[(i / n, i % n)].re)));
        fields.extend((0..n * n).map(|i| format_sig(z[(i / n, i % n)].im)));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_two_ports() {
        let f = PortMatrixFunction::closed(MatrixKind::Z, 2, 50.0, |s| {
            Ok(CMat::from_row_slice(2, 2, &[s * 2.0, C64::new(1.0, 0.5), C64::new(1.0, 0.5), s + 3.0]))
        });
        let om: Vec<f64> = (1..=6).map(|i| i as f64).collect();
        let text = write_sampled_csv(&f, &om).unwrap();
        assert!(text.starts_with("omega_rad_s,re_Z11_ohm,re_Z12_ohm"));
        let g = read_sampled_csv(&text, 50.0).unwrap();
        let z = g.eval_omega(3.0).unwrap();
        assert!((z[(0, 0)] - C64::new(0.0, 6.0)).norm() < 1e-9);
        assert!((z[(1, 0)] - C64::new(1.0, 0.5)).norm() < 1e-9);
    }

    #[test]
    fn bad_columns() {
        assert!(read_sampled_csv("omega_rad_s,a,b,c,d,e\n1,2,3,4,5,6\n", 50.0).is_err());
        assert!(read_sampled_csv("omega_rad_s,re,im\n1,2,x\n", 50.0).is_err());
    }
}
