//! Latitude anchors for overcapacity factor and storage ratio.
//!
//! Storage is kept as days of mean daily output so that an anchor computed on
//! one series transfers to a cell with a different annual yield:
//! `S/G = storage_days * E_p / 365`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, ModelError, Result};

/// Anchors regenerated from the default synthetic climate and PV inputs.
pub const BUNDLED_ANCHORS_CSV: &str = include_str!("../../../../data/anchors.csv");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub lat: f64,
    pub ocf: f64,
    /// Storage per kWp in days of mean daily yield.
    pub storage_days: f64,
}

impl Anchor {
    pub fn storage_ratio(&self, yield_ep: f64) -> f64 {
        self.storage_days * yield_ep / 365.0
    }
}

/// Piecewise-linear interpolant over anchors sorted by latitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorTable {
    anchors: Vec<Anchor>,
}

impl AnchorTable {
    pub fn new(mut anchors: Vec<Anchor>) -> Result<Self> {
        if anchors.len() < 2 {
            return Err(ModelError::Data("need at least two anchors".into()));
        }
        if let Some(a) = anchors
            .iter()
            .find(|a| !(a.lat.is_finite() && a.ocf.is_finite() && a.storage_days.is_finite()))
        {
            return Err(ModelError::Data(format!("non-finite anchor at lat {}", a.lat)));
        }
        anchors.sort_by(|a, b| a.lat.total_cmp(&b.lat));
        if let Some(p) = anchors.windows(2).find(|p| p[0].lat == p[1].lat) {
            return Err(ModelError::Data(format!("duplicate anchor latitude {}", p[0].lat)));
        }
        Ok(Self { anchors })
    }

    pub fn bundled() -> Self {
        Self::read_csv(BUNDLED_ANCHORS_CSV.as_bytes()).expect("bundled anchors are valid")
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    /// `(ocf, storage_days)` at `lat`, clamped to the end anchors.
    pub fn interpolate(&self, lat: f64) -> (f64, f64) {
        let a = &self.anchors;
        let first = a[0];
        let last = a[a.len() - 1];
        if lat <= first.lat {
            return (first.ocf, first.storage_days);
        }
        if lat >= last.lat {
            return (last.ocf, last.storage_days);
        }
        let i = a.partition_point(|x| x.lat <= lat);
        let (lo, hi) = (a[i - 1], a[i]);
        if lo.lat == lat {
            return (lo.ocf, lo.storage_days);
        }
        let t = (lat - lo.lat) / (hi.lat - lo.lat);
        (
            lo.ocf + t * (hi.ocf - lo.ocf),
            lo.storage_days + t * (hi.storage_days - lo.storage_days),
        )
    }

    /// `(ocf, S/G)` for a cell at `lat` with annual yield `yield_ep`.
    pub fn site_params_at(&self, lat: f64, yield_ep: f64) -> (f64, f64) {
        let (ocf, days) = self.interpolate(lat);
        (ocf, days * yield_ep / 365.0)
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let anchors = rdr
            .deserialize::<Anchor>()
            .enumerate()
            .map(|(i, r)| r.map_err(|e| ModelError::Data(format!("anchor row {}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(anchors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
        Self::read_csv(file)
    }

    /// Writes `lat,ocf,storage_days` with full round-trip precision.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for a in &self.anchors {
            w.serialize(a).map_err(|e| ModelError::Data(e.to_string()))?;
        }
        w.flush().map_err(|e| ModelError::Data(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        self.write_csv(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> AnchorTable {
        AnchorTable::new(vec![
            Anchor { lat: 10.0, ocf: 1.2, storage_days: 3.0 },
            Anchor { lat: 0.0, ocf: 1.1, storage_days: 2.0 },
            Anchor { lat: 20.0, ocf: 1.6, storage_days: 2.5 },
        ])
        .unwrap()
    }

    #[test]
    fn exact_at_anchors_and_linear_between() {
        let t = table();
        assert_eq!(t.interpolate(10.0), (1.2, 3.0));
        let (o, s) = t.interpolate(5.0);
        assert!((o - 1.15).abs() < 1e-15 && (s - 2.5).abs() < 1e-15);
        assert_eq!(t.interpolate(-5.0), (1.1, 2.0));
        assert_eq!(t.interpolate(99.0), (1.6, 2.5));
    }

    #[test]
    fn rejects_duplicates_and_short_tables() {
        let dup = vec![
            Anchor { lat: 1.0, ocf: 1.0, storage_days: 1.0 },
            Anchor { lat: 1.0, ocf: 1.1, storage_days: 1.0 },
        ];
        assert!(AnchorTable::new(dup).is_err());
        assert!(AnchorTable::new(vec![Anchor { lat: 1.0, ocf: 1.0, storage_days: 1.0 }]).is_err());
    }

    #[test]
    fn bundled_table_is_symmetric() {
        let t = AnchorTable::bundled();
        assert_eq!(t.anchors().len(), 61);
        for lat in [3.0, 17.5, 44.0] {
            assert_eq!(t.interpolate(lat), t.interpolate(-lat));
        }
    }

    #[test]
    fn csv_round_trip() {
        let t = table();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(AnchorTable::read_csv(buf.as_slice()).unwrap(), t);
    }
}
