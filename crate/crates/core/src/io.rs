//! File formats: the binary sequence dump with its JSON sidecar, and the CSV
//! tables emitted by each module.
//!
//! Floats are written with 17 significant digits so a CSV round-trip is
//! exact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::autocorr::AutocorrProfile;
use crate::processes::{CancellationRun, MeanCurve};
use crate::seqgen::{ComplexSeq, GeneratorDescriptor};
use crate::spectral::SpectrumScan;
use crate::symbolic::EmpiricalMeasure;
use crate::{Error, Result};

pub const BINARY_FORMAT: &str = "f64le-interleaved";

/// `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Describes a binary dump: `len` pairs `(re, im)` of little-endian `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub format: String,
    pub len: usize,
    pub descriptor: GeneratorDescriptor,
}

pub fn encode_f64le(values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 16);
    for z in values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode_f64le(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() % 16 != 0 {
        return Err(Error::Parse(format!(
            "binary dump length {} is not a multiple of 16 bytes",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect())
}

pub fn parse_sidecar(text: &str) -> Result<Sidecar> {
    let s: Sidecar = serde_json::from_str(text)?;
    if s.format != BINARY_FORMAT {
        return Err(Error::Parse(format!("unsupported binary format `{}`", s.format)));
    }
    if s.len != s.descriptor.len() {
        return Err(Error::Parse(format!(
            "sidecar len {} disagrees with descriptor length {}",
            s.len,
            s.descriptor.len()
        )));
    }
    Ok(s)
}

/// Sidecar path of a dump: same stem, `.json` extension.
pub fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `path` (binary) and its sidecar.
pub fn write_seq(path: &Path, seq: &ComplexSeq) -> Result<()> {
    fs::write(path, encode_f64le(seq.values()))?;
    let sidecar = Sidecar {
        format: BINARY_FORMAT.to_string(),
        len: seq.len(),
        descriptor: seq.meta().clone(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(())
}

/// Reads a dump given either the binary or the sidecar path.
pub fn read_seq(path: &Path) -> Result<ComplexSeq> {
    let (bin, side) = if path.extension().is_some_and(|e| e == "json") {
        (path.with_extension("bin"), path.to_path_buf())
    } else {
        (path.to_path_buf(), sidecar_path(path))
    };
    let sidecar = parse_sidecar(&fs::read_to_string(&side)?)?;
    let values = decode_f64le(&fs::read(&bin)?)?;
    if values.len() != sidecar.len {
        return Err(Error::Parse(format!(
            "{} holds {} values, sidecar declares {}",
            bin.display(),
            values.len(),
            sidecar.len
        )));
    }
    ComplexSeq::from_parts(values, sidecar.descriptor)
}

fn csv_writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_err)?;
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// `n,re,im` with `n` starting at 1.
pub fn write_seq_csv<W: Write>(w: W, seq: &ComplexSeq) -> Result<()> {
    let mut out = csv_writer(w, &["n", "re", "im"])?;
    for (i, z) in seq.values().iter().enumerate() {
        out.write_record([(i + 1).to_string(), fmt_f64(z.re), fmt_f64(z.im)])
            .map_err(csv_err)?;
    }
    finish(out)
}

/// Parses a CSV with the given header into numeric rows.
pub fn parse_numeric_csv(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let got = r.headers().map_err(csv_err)?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            got.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: `{f}` is not a number", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("row {} has {} fields", line + 1, row.len())));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Inverse of [`write_seq_csv`]; `n` must run `1, 2, …`.
pub fn parse_seq_csv(text: &str) -> Result<Vec<Complex64>> {
    let rows = parse_numeric_csv(text, &["n", "re", "im"])?;
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            if r[0] != (i + 1) as f64 {
                return Err(Error::Parse(format!("row {}: expected n = {}, found {}", i + 1, i + 1, r[0])));
            }
            Ok(Complex64::new(r[1], r[2]))
        })
        .collect()
}

/// `N,tau,re,im,abs`.
pub fn write_profile_csv<W: Write>(w: W, profile: &AutocorrProfile) -> Result<()> {
    let mut out = csv_writer(w, &["N", "tau", "re", "im", "abs"])?;
    for (n, row) in profile.ns.iter().zip(&profile.values) {
        for (tau, z) in row.iter().enumerate() {
            out.write_record([
                n.to_string(),
                tau.to_string(),
                fmt_f64(z.re),
                fmt_f64(z.im),
                fmt_f64(z.norm()),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(out)
}

/// `angle,T,magnitude`.
pub fn write_scan_csv<W: Write>(w: W, scan: &SpectrumScan) -> Result<()> {
    let mut out = csv_writer(w, &["angle", "T", "magnitude"])?;
    for (t, row) in scan.ts.iter().zip(&scan.magnitudes) {
        for (angle, m) in scan.grid.iter().zip(row) {
            out.write_record([fmt_f64(*angle), t.to_string(), fmt_f64(*m)])
                .map_err(csv_err)?;
        }
    }
    finish(out)
}

/// `seed,T,absA`.
pub fn write_cancel_csv<W: Write>(w: W, run: &CancellationRun) -> Result<()> {
    let mut out = csv_writer(w, &["seed", "T", "absA"])?;
    for (seed, row) in run.seeds.iter().zip(&run.per_path) {
        for (t, a) in run.ts.iter().zip(row) {
            out.write_record([seed.to_string(), t.to_string(), fmt_f64(*a)])
                .map_err(csv_err)?;
        }
    }
    finish(out)
}

/// `T,rms,std_err`.
pub fn write_mean_csv<W: Write>(w: W, curve: &MeanCurve) -> Result<()> {
    let mut out = csv_writer(w, &["T", "rms", "std_err"])?;
    for ((t, r), e) in curve.ts.iter().zip(&curve.rms).zip(&curve.std_err) {
        out.write_record([t.to_string(), fmt_f64(*r), fmt_f64(*e)])
            .map_err(csv_err)?;
    }
    finish(out)
}

/// `cyl,count,freq`, cylinders in lexicographic order.
pub fn write_measure_csv<W: Write>(w: W, m: &EmpiricalMeasure) -> Result<()> {
    let mut out = csv_writer(w, &["cyl", "count", "freq"])?;
    for (cyl, count) in &m.counts {
        out.write_record([cyl.clone(), count.to_string(), fmt_f64(m.freq(cyl))])
            .map_err(csv_err)?;
    }
    finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqgen::{gen_iid, gen_rotation, IidDist};
    use crate::spectral::fb_scan;

    #[test]
    fn binary_roundtrip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let seq = gen_iid(IidDist::ComplexGaussian, 9, 100).unwrap();
        let path = dir.path().join("x.bin");
        write_seq(&path, &seq).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 1600);
        assert_eq!(read_seq(&path).unwrap(), seq);
        assert_eq!(read_seq(&dir.path().join("x.json")).unwrap(), seq);
        fs::write(&path, &encode_f64le(seq.values())[..1584]).unwrap();
        assert!(read_seq(&path).is_err());
    }

    #[test]
    fn little_endian_layout() {
        let bytes = encode_f64le(&[Complex64::new(1.0, -2.0)]);
        assert_eq!(&bytes[..8], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[8..], &(-2.0f64).to_le_bytes());
        assert!(decode_f64le(&bytes[..15]).is_err());
    }

    #[test]
    fn sidecar_rejects_mismatch() {
        let ok = r#"{"format":"f64le-interleaved","len":3,"descriptor":{"family":"sqrt_rotation","alpha":0.5,"len":3}}"#;
        assert!(parse_sidecar(ok).is_ok());
        assert!(parse_sidecar(&ok.replace("\"len\":3,\"desc", "\"len\":4,\"desc")).is_err());
        assert!(parse_sidecar(&ok.replace("f64le", "f32le")).is_err());
    }

    #[test]
    fn seq_csv_is_exact() {
        let seq = gen_iid(IidDist::UniformDisk, 3, 50).unwrap();
        let mut buf = Vec::new();
        write_seq_csv(&mut buf, &seq).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,re,im\n1,"));
        assert_eq!(parse_seq_csv(&text).unwrap(), seq.values());
        assert!(parse_seq_csv("n,re,im\n2,0,0\n").is_err());
        assert!(parse_seq_csv("n,re\n1,0\n").is_err());
    }

    #[test]
    fn scan_csv_shape() {
        let seq = gen_rotation(0.25, Complex64::new(1.0, 0.0), 64).unwrap();
        let scan = fb_scan(&seq, 8, &[32, 64]).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&mut buf, &scan).unwrap();
        let rows = parse_numeric_csv(std::str::from_utf8(&buf).unwrap(), &["angle", "T", "magnitude"]).unwrap();
        assert_eq!(rows.len(), 16);
        // x_n = e^{2πin/4} resonates with z = e^{−2πi/4}, grid angle 3/4
        assert!((rows[6][2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seventeen_digits() {
        let v = 0.1f64 + 0.2;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }
}
