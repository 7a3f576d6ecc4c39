//! Artifact emission: CSV with round-trip-exact floats, JSON manifests with
//! no wall-clock content, and a little-endian binary state dump.  Identical
//! runs must produce byte-identical files, so nothing here consults the
//! clock, the hostname, or iteration order beyond the deterministic flat
//! order of the box.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::lattice::{FourierState, TruncationBox};

/// 17 significant digits: enough to reconstruct any f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column-typed CSV cell.
#[derive(Clone, Debug)]
pub enum Cell {
    F(f64),
    U(u64),
    I(i64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_float(*v),
            Cell::U(v) => v.to_string(),
            Cell::I(v) => v.to_string(),
            Cell::S(v) => {
                debug_assert!(!v.contains(',') && !v.contains('\n'), "cell needs quoting: {v}");
                v.clone()
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> CsvTable {
        CsvTable { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width mismatch");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }
}

/// Run manifest: full config echo plus provenance, deliberately without any
/// timestamp so artifacts diff clean across reruns.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub subcommand: String,
    pub root_seed: u64,
    pub threads: Option<usize>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(subcommand: &str, config: &RunConfig, threads: Option<usize>) -> Manifest {
        Manifest {
            tool: "qpnls",
            version: env!("CARGO_PKG_VERSION"),
            schema_version: 1,
            subcommand: subcommand.to_string(),
            root_seed: config.sampling.root_seed,
            threads,
            config: config.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("manifest serialization failed: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("report serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

const STATE_MAGIC: &[u8; 8] = b"QPNLSST\0";

/// Binary state dump, all little-endian: 8-byte magic, u64 ν, u64 box radius,
/// f64 time, f64 ε, then (re, im) f64 pairs in lexicographic index order.
pub fn write_state_binary(path: &Path, state: &FourierState) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(STATE_MAGIC)?;
    f.write_all(&(state.bx.nu() as u64).to_le_bytes())?;
    f.write_all(&(state.bx.radius() as u64).to_le_bytes())?;
    f.write_all(&state.time.to_le_bytes())?;
    f.write_all(&state.epsilon.to_le_bytes())?;
    let mut buf = Vec::with_capacity(state.amps.len() * 16);
    for a in &state.amps {
        buf.extend_from_slice(&a.re.to_le_bytes());
        buf.extend_from_slice(&a.im.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_state_binary(path: &Path) -> Result<FourierState> {
    let mut f = std::fs::File::open(path)?;
    let mut magic = [0u8; 8];
    f.read_exact(&mut magic)?;
    if &magic != STATE_MAGIC {
        return Err(Error::Config(format!("{} is not a state dump", path.display())));
    }
    let mut w = [0u8; 8];
    f.read_exact(&mut w)?;
    let nu = u64::from_le_bytes(w) as usize;
    f.read_exact(&mut w)?;
    let radius = u64::from_le_bytes(w) as i64;
    f.read_exact(&mut w)?;
    let time = f64::from_le_bytes(w);
    f.read_exact(&mut w)?;
    let epsilon = f64::from_le_bytes(w);
    let bx = TruncationBox::new(nu, radius)?;
    let mut amps = Vec::with_capacity(bx.cardinality());
    for _ in 0..bx.cardinality() {
        f.read_exact(&mut w)?;
        let re = f64::from_le_bytes(w);
        f.read_exact(&mut w)?;
        let im = f64::from_le_bytes(w);
        amps.push(Complex64::new(re, im));
    }
    FourierState::new(bx, amps, time, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_the_csv_format() {
        for v in [
            std::f64::consts::PI,
            1.0346861239267544,
            -4.5399929762484854e-5,
            f64::MIN_POSITIVE,
            1.0 / 3.0,
        ] {
            let s = fmt_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s} -> {back}");
        }
        assert!(fmt_float(f64::NAN).contains("NaN"));
    }

    #[test]
    fn csv_renders_deterministically() {
        let mut t = CsvTable::new(&["a", "b", "c"]);
        t.push(vec![Cell::F(0.5), Cell::U(3), Cell::S("direct".into())]);
        let text = t.render();
        assert_eq!(text, "a,b,c\n5.0000000000000000e-1,3,direct\n");
    }

    #[test]
    fn state_dump_round_trips() {
        let bx = TruncationBox::new(2, 1).unwrap();
        let amps: Vec<Complex64> =
            (0..9).map(|i| Complex64::new(i as f64 * 0.25, -(i as f64) * 0.5)).collect();
        let state = FourierState::new(bx, amps, 0.75, 0.125).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bin");
        write_state_binary(&path, &state).unwrap();
        let back = read_state_binary(&path).unwrap();
        assert_eq!(back.bx, state.bx);
        assert_eq!(back.time.to_bits(), state.time.to_bits());
        assert_eq!(back.epsilon.to_bits(), state.epsilon.to_bits());
        for (a, b) in state.amps.iter().zip(&back.amps) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        // Header layout is fixed: magic + 2 u64 + 2 f64 + payload.
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), 8 + 8 + 8 + 8 + 8 + 9 * 16);
    }
}
