//! Modulation-and-coding (MCS) lookup tables.
//!
//! A table maps contiguous SINR intervals `[t_min, t_max)` to a spectral
//! efficiency in bits per symbol. SINR bounds are stored in linear scale;
//! decibels appear only in the CSV representation.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::{db_to_linear, linear_to_db};

/// One MCS level: SINR interval `[t_min, t_max)` in linear scale and the
/// spectral efficiency achieved inside it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct McsEntry {
    pub t_min: f64,
    pub t_max: f64,
    pub bits_per_symbol: f64,
}

/// Validated MCS table: entries are contiguous, cover `[t_min_first, +inf)`,
/// and have strictly increasing spectral efficiency.
///
/// SINR below the first threshold yields zero bits (no feasible MCS).
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

/// Relative slack accepted between one entry's upper bound and the next
/// entry's lower bound before the table is rejected as non-contiguous.
const CONTIGUITY_REL_TOL: f64 = 1e-9;

const DEFAULT_TABLE_CSV: &str = include_str!("../data/mcs_default.csv");

impl McsTable {
    /// Build a table from entries ordered by increasing SINR.
    ///
    /// Requirements: at least one entry, `t_min >= 0` for the first entry,
    /// `t_max = +inf` for the last, adjacent bounds contiguous, and
    /// `bits_per_symbol` positive and strictly increasing.
    pub fn new(entries: Vec<McsEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::domain("MCS table must contain at least one entry"));
        }
        if !(entries[0].t_min >= 0.0) {
            return Err(Error::domain(format!(
                "first MCS threshold must be >= 0, got {}",
                entries[0].t_min
            )));
        }
        if entries.last().unwrap().t_max != f64::INFINITY {
            return Err(Error::domain(
                "last MCS entry must extend to infinite SINR (t_max = inf)",
            ));
        }
        let mut canonical = entries;
        for k in 0..canonical.len() {
            let e = canonical[k];
            if !(e.t_max > e.t_min) {
                return Err(Error::domain(format!(
                    "MCS entry {k} has empty interval [{}, {})",
                    e.t_min, e.t_max
                )));
            }
            if !(e.bits_per_symbol > 0.0) || !e.bits_per_symbol.is_finite() {
                return Err(Error::domain(format!(
                    "MCS entry {k} must have positive finite bits/symbol"
                )));
            }
            if k > 0 {
                let prev = canonical[k - 1];
                let gap = (e.t_min - prev.t_max).abs();
                if gap > CONTIGUITY_REL_TOL * prev.t_max.max(1.0) {
                    return Err(Error::domain(format!(
                        "MCS entries {k_prev} and {k} are not contiguous: {} vs {}",
                        prev.t_max,
                        e.t_min,
                        k_prev = k - 1
                    )));
                }
                if !(e.bits_per_symbol > prev.bits_per_symbol) {
                    return Err(Error::domain(format!(
                        "bits/symbol must be strictly increasing (entry {k})"
                    )));
                }
                // Snap shared bounds so interval arithmetic is exact.
                canonical[k].t_min = prev.t_max;
            }
        }
        Ok(McsTable { entries: canonical })
    }

    /// Convenience single-level table `[t_min, inf) -> bits`.
    pub fn single(t_min: f64, bits_per_symbol: f64) -> Result<Self> {
        McsTable::new(vec![McsEntry {
            t_min,
            t_max: f64::INFINITY,
            bits_per_symbol,
        }])
    }

    /// Built-in 15-level table modeled on the standard LTE CQI reporting
    /// range for a 20 MHz carrier.
    pub fn default_table() -> &'static McsTable {
        static TABLE: OnceLock<McsTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            McsTable::from_csv_str(DEFAULT_TABLE_CSV, "<built-in>")
                .expect("built-in MCS table is valid")
        })
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated tables are never empty
    }

    /// Highest spectral efficiency the table can deliver.
    pub fn max_bits_per_symbol(&self) -> f64 {
        self.entries.last().unwrap().bits_per_symbol
    }

    /// Spectral efficiency for an instantaneous SINR; 0 below the first
    /// threshold.
    pub fn bits_for(&self, sinr: f64) -> f64 {
        // partition_point returns the number of entries with t_min <= sinr.
        let idx = self.entries.partition_point(|e| e.t_min <= sinr);
        if idx == 0 {
            0.0
        } else {
            self.entries[idx - 1].bits_per_symbol
        }
    }

    /// Interval boundaries `t_min_0, t_min_1, ..., t_min_last, +inf`
    /// (length `len() + 1`), useful for integrating a CDF over the table.
    pub fn boundaries(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries
            .iter()
            .map(|e| e.t_min)
            .chain(std::iter::once(f64::INFINITY))
    }

    /// Parse the CSV representation: header `t_min_db,t_max_db,bits_per_symbol`,
    /// one row per level, thresholds in dB, `inf` allowed for the last upper
    /// bound.
    pub fn from_csv_str(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, "empty MCS table"))?;
        let expect = "t_min_db,t_max_db,bits_per_symbol";
        if normalize_header(header) != expect {
            return Err(Error::parse(
                origin,
                format!("expected header `{expect}`, got `{header}`"),
            ));
        }
        let mut entries = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    origin,
                    format!("line {}: expected 3 fields, got {}", lineno + 1, fields.len()),
                ));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| {
                    Error::parse(origin, format!("line {}: bad {what} `{s}`", lineno + 1))
                })
            };
            let t_min_db = parse(fields[0], "t_min_db")?;
            let t_max_db = parse(fields[1], "t_max_db")?;
            let bits = parse(fields[2], "bits_per_symbol")?;
            entries.push(McsEntry {
                t_min: db_to_linear(t_min_db),
                t_max: db_to_linear(t_max_db),
                bits_per_symbol: bits,
            });
        }
        McsTable::new(entries)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        McsTable::from_csv_str(&text, &path.display().to_string())
    }

    /// Serialize back to the CSV representation (thresholds in dB).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t_min_db,t_max_db,bits_per_symbol\n");
        for e in &self.entries {
            let t_max = if e.t_max.is_infinite() {
                "inf".to_string()
            } else {
                format!("{}", linear_to_db(e.t_max))
            };
            writeln!(
                out,
                "{},{},{}",
                linear_to_db(e.t_min),
                t_max,
                e.bits_per_symbol
            )
            .unwrap();
        }
        out
    }
}

fn normalize_header(h: &str) -> String {
    h.split(',')
        .map(str::trim)
        .collect::<Vec<_>>()
        .join(",")
        .to_ascii_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn entry(t_min: f64, t_max: f64, bits: f64) -> McsEntry {
        McsEntry {
            t_min,
            t_max,
            bits_per_symbol: bits,
        }
    }

    #[test]
    fn default_table_has_fifteen_increasing_levels() {
        let t = McsTable::default_table();
        assert_eq!(t.len(), 15);
        assert_relative_eq!(t.max_bits_per_symbol(), 5.5547);
        // thresholds were given in dB; spot-check the first one
        assert_relative_eq!(t.entries()[0].t_min, db_to_linear(-6.7));
    }

    #[test]
    fn rejects_non_contiguous_entries() {
        let err = McsTable::new(vec![
            entry(1.0, 3.0, 2.0),
            entry(3.5, f64::INFINITY, 4.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
    }

    #[test]
    fn rejects_non_increasing_bits() {
        let err = McsTable::new(vec![
            entry(1.0, 3.0, 4.0),
            entry(3.0, f64::INFINITY, 4.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn rejects_finite_last_upper_bound_and_negative_first_threshold() {
        assert!(McsTable::new(vec![entry(0.0, 5.0, 2.0)]).is_err());
        assert!(McsTable::new(vec![entry(-0.1, f64::INFINITY, 2.0)]).is_err());
    }

    #[test]
    fn bits_lookup_covers_below_first_threshold_and_interval_ends() {
        let t = McsTable::new(vec![
            entry(1.0, 3.0, 2.0),
            entry(3.0, f64::INFINITY, 4.0),
        ])
        .unwrap();
        assert_eq!(t.bits_for(0.5), 0.0);
        assert_eq!(t.bits_for(1.0), 2.0);
        assert_eq!(t.bits_for(2.999), 2.0);
        assert_eq!(t.bits_for(3.0), 4.0);
        assert_eq!(t.bits_for(f64::INFINITY), 4.0);
    }

    #[test]
    fn csv_round_trip_preserves_table() {
        let t = McsTable::default_table();
        let csv = t.to_csv_string();
        let back = McsTable::from_csv_str(&csv, "<round-trip>").unwrap();
        for (a, b) in t.entries().iter().zip(back.entries()) {
            assert_relative_eq!(a.t_min, b.t_min, max_relative = 1e-12);
            assert_eq!(a.t_max.is_infinite(), b.t_max.is_infinite());
            assert_relative_eq!(a.bits_per_symbol, b.bits_per_symbol);
        }
    }

    #[test]
    fn csv_rejects_bad_header_and_bad_fields() {
        assert!(McsTable::from_csv_str("a,b,c\n1,2,3\n", "t").is_err());
        assert!(
            McsTable::from_csv_str("t_min_db,t_max_db,bits_per_symbol\n1,x,3\n", "t").is_err()
        );
    }

    #[test]
    fn boundaries_append_infinity() {
        let t = McsTable::new(vec![
            entry(1.0, 3.0, 2.0),
            entry(3.0, f64::INFINITY, 4.0),
        ])
        .unwrap();
        let b: Vec<f64> = t.boundaries().collect();
        assert_eq!(b.len(), 3);
        assert_eq!(b[0], 1.0);
        assert_eq!(b[1], 3.0);
        assert!(b[2].is_infinite());
    }
}
