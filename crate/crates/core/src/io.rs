//! CSV formats for paths, replications, summaries and kernel samples.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{ReplicationRow, SummaryRow};
use crate::kernels::TruncationKernel;
use crate::sim::SamplePath;

fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.17e}")
    }
}

/// Writes `t,x` rows with 17 significant digits, so values round-trip exactly.
pub fn write_path<W: Write>(path: &SamplePath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x"])?;
    for (t, x) in path.times().iter().zip(path.values()) {
        w.write_record([num(*t), num(*x)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path<R: Read>(input: R) -> Result<SamplePath> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::InvalidGrid(format!("path CSV lacks a {name:?} column")))
    };
    let (ti, xi) = (col("t")?, col("x")?);
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    Error::InvalidGrid(format!("unparsable value on data row {}", line + 1))
                })
        };
        times.push(parse(ti)?);
        values.push(parse(xi)?);
    }
    SamplePath::new(times, values)
}

pub fn write_path_file(path: &SamplePath, file: &Path) -> Result<()> {
    write_path(path, std::fs::File::create(file)?)
}

pub fn read_path_file(file: &Path) -> Result<SamplePath> {
    read_path(std::fs::File::open(file)?)
}

pub fn write_reps<W: Write>(rows: &[ReplicationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rep",
        "seed",
        "theta1_hat",
        "theta2_hat",
        "contrast",
        "kept_fraction",
        "converged",
        "theta2_euler",
        "error",
    ])?;
    for r in rows {
        w.write_record([
            r.rep.to_string(),
            r.seed.to_string(),
            num(r.theta1_hat),
            num(r.theta2_hat),
            num(r.contrast),
            num(r.kept_fraction),
            r.converged.to_string(),
            r.theta2_euler.map(num).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "label",
        "mean1",
        "std1",
        "mean2",
        "std2",
        "reps",
        "runtime_s",
        "failed",
        "std_undefined",
    ])?;
    for s in rows {
        w.write_record([
            s.label.clone(),
            num(s.mean[0]),
            num(s.std[0]),
            num(s.mean[1]),
            num(s.std[1]),
            s.reps.to_string(),
            format!("{:.3}", s.runtime_s),
            s.failed.to_string(),
            s.std_undefined.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `x,phi` samples of the kernel on `points` equally spaced nodes of
/// `[-support_bound, support_bound]`.
pub fn write_kernel_samples<W: Write>(
    kernel: &TruncationKernel,
    points: usize,
    out: W,
) -> Result<()> {
    if points < 2 {
        return Err(Error::InvalidParameter(
            "need at least two sample points".into(),
        ));
    }
    let bound = match kernel.support_bound() {
        b if b.is_finite() => b,
        _ => 2.0,
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "phi"])?;
    for i in 0..points {
        let x = -bound + 2.0 * bound * i as f64 / (points - 1) as f64;
        w.write_record([num(x), num(kernel.eval(x))])?;
    }
    w.flush()?;
    Ok(())
}
