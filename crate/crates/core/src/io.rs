//! Field serialization: CSV rows and flat little-endian `f64` arrays with a
//! JSON sidecar.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::scalar::Real;

/// Sidecar describing a `.bin` array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub dims: Vec<usize>,
    pub axes: Vec<String>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub ordering: String,
    pub dtype: String,
}

/// Writes `x[,x2],y,value` rows, lateral coordinates first.
pub fn write_csv<T: Real>(field: &Field<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let lateral = field.dims.len() - 1;
    if lateral == 1 {
        writeln!(out, "x,y,value")?;
    } else {
        writeln!(out, "x1,x2,y,value")?;
    }
    for (k, v) in field.values.iter().enumerate() {
        let c = field.coords(k);
        // c is ordered [y, (x2,) x1]
        if lateral == 1 {
            writeln!(out, "{},{},{}", c[1].to_f64_lossy(), c[0].to_f64_lossy(), v.to_f64_lossy())?;
        } else {
            writeln!(
                out,
                "{},{},{},{}",
                c[2].to_f64_lossy(),
                c[1].to_f64_lossy(),
                c[0].to_f64_lossy(),
                v.to_f64_lossy()
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

fn sidecar_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `<stem>.bin` (little-endian f64, row-major) and `<stem>.json`.
pub fn write_binary<T: Real>(field: &Field<T>, bin_path: impl AsRef<Path>) -> Result<()> {
    let bin_path = bin_path.as_ref();
    let mut bytes = Vec::with_capacity(field.values.len() * 8);
    for v in &field.values {
        bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    fs::write(bin_path, bytes)?;
    let sidecar = FieldSidecar {
        dims: field.dims.clone(),
        axes: field.axes.clone(),
        origin: field.origin.iter().map(|v| v.to_f64_lossy()).collect(),
        spacing: field.spacing.iter().map(|v| v.to_f64_lossy()).collect(),
        ordering: "row-major".into(),
        dtype: "f64-le".into(),
    };
    fs::write(sidecar_path(bin_path), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn read_binary(bin_path: impl AsRef<Path>) -> Result<Field<f64>> {
    let bin_path = bin_path.as_ref();
    let sidecar: FieldSidecar = serde_json::from_slice(&fs::read(sidecar_path(bin_path))?)?;
    let bytes = fs::read(bin_path)?;
    let count: usize = sidecar.dims.iter().product();
    if bytes.len() != count * 8 {
        return Err(Error::InvalidArgument(format!(
            "binary field has {} bytes, sidecar expects {}",
            bytes.len(),
            count * 8
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Field {
        dims: sidecar.dims,
        axes: sidecar.axes,
        origin: sidecar.origin,
        spacing: sidecar.spacing,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StripGrid;

    fn scratch(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("cohesive-io-{}-{name}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn binary_round_trip() {
        let g = StripGrid::new(2, 1.0, 0.5, 5, 3).unwrap();
        let mut f = g.empty_field();
        for (k, v) in f.values.iter_mut().enumerate() {
            *v = (k as f64).sin();
        }
        let dir = scratch("bin");
        let p = dir.join("u.bin");
        write_binary(&f, &p).unwrap();
        let back = read_binary(&p).unwrap();
        assert_eq!(back, f);
        let side: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("u.json")).unwrap()).unwrap();
        assert_eq!(side["ordering"], "row-major");
    }

    #[test]
    fn csv_layout() {
        let g = StripGrid::new(1, 1.0, 1.0, 3, 3).unwrap();
        let mut f = g.empty_field();
        f.values[4] = 2.5;
        let p = scratch("csv").join("u.csv");
        write_csv(&f, &p).unwrap();
        let text = fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,value");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[5], "0,0.5,2.5");
    }
}
