//! CSV trajectories and number formatting shared by the CLI and the C
//! interface.

use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::trajectory::{Dim, Point, Trajectory};

/// Relative tolerance on the spacing of CSV time stamps.
pub const GRID_TOLERANCE: f64 = 1e-9;

/// C `%.12g`.
pub fn fmt_g(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-4..P).contains(&exp) {
        let fixed = format!("{:.*}", (P - 1 - exp) as usize, x);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Read `t,x,y[,z]` rows. The time stamps must start at 0 and be uniform.
pub fn read_trajectory_csv(reader: impl Read) -> Result<Trajectory> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv { line: 1, message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let dim = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t", "x", "y"] => Dim::Two,
        ["t", "x", "y", "z"] => Dim::Three,
        _ => return Err(Error::Csv { line: 1, message: format!("header must be t,x,y[,z], got {}", header.join(",")) }),
    };
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Csv { line, message: e.to_string() })?;
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Csv { line, message: format!("'{f}': {e}") }))
            .collect::<Result<Vec<f64>>>()?;
        times.push(vals[0]);
        points.push(Point::new(vals[1], vals[2], if dim == Dim::Three { vals[3] } else { 0.0 }));
    }
    if times.len() < 2 {
        return Err(Error::Csv { line: times.len() + 1, message: "at least two rows required".into() });
    }
    if times[0] != 0.0 {
        return Err(Error::Csv { line: 2, message: format!("first time stamp must be 0, got {}", times[0]) });
    }
    let n = times.len() - 1;
    let dt = times[n] / n as f64;
    for (k, t) in times.iter().enumerate() {
        let deviation = (t - k as f64 * dt).abs();
        if deviation > GRID_TOLERANCE * dt {
            return Err(Error::NonUniformGrid { index: k, deviation });
        }
    }
    Trajectory::new(dim, dt, points)
}

pub fn write_trajectory_csv(traj: &Trajectory, mut out: impl Write) -> Result<()> {
    let three = traj.dim() == Dim::Three;
    writeln!(out, "{}", if three { "t,x,y,z" } else { "t,x,y" })?;
    for (k, p) in traj.points().iter().enumerate() {
        write!(out, "{},{},{}", fmt_g(traj.time(k)), fmt_g(p.x), fmt_g(p.y))?;
        if three {
            write!(out, ",{}", fmt_g(p.z))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Columns of equal length under a header, formatted with [`fmt_g`].
pub fn write_columns_csv(header: &[&str], columns: &[&[f64]], mut out: impl Write) -> Result<()> {
    writeln!(out, "{}", header.join(","))?;
    let n = columns.first().map_or(0, |c| c.len());
    for k in 0..n {
        let row: Vec<String> = columns.iter().map(|c| fmt_g(c[k])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_c() {
        let cases = [
            (0.1, "0.1"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (0.30000000000000004, "0.3"),
            (1e-5, "1e-05"),
            (1.5e-4, "0.00015"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (std::f64::consts::PI, "3.14159265359"),
            (-1.0 / 3.0, "-0.333333333333"),
            (9.9999999999999e-5, "0.0001"),
            (6.02214076e23, "6.02214076e+23"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g(x), s, "{x}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let traj = Trajectory::sample(Dim::Three, 0.1, 10, |t| Point::new(t, t * t, -t)).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let back = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(back.dim(), Dim::Three);
        assert!(back.max_deviation(&traj) < 1e-12);
        let mut again = Vec::new();
        write_trajectory_csv(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let text = "t,x,y\n0,0,0\n0.1,1,0\n0.2,2,0\n0.31,3,0\n0.4,4,0\n";
        assert!(matches!(read_trajectory_csv(text.as_bytes()), Err(Error::NonUniformGrid { index: 3, .. })));
    }

    #[test]
    fn bad_header_and_number() {
        assert!(matches!(read_trajectory_csv("a,b\n1,2\n".as_bytes()), Err(Error::Csv { line: 1, .. })));
        assert!(matches!(read_trajectory_csv("t,x,y\n0,0,0\n0.1,zz,0\n".as_bytes()), Err(Error::Csv { line: 3, .. })));
    }
}
