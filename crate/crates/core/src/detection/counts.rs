use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::{Matrix4, Vector4};

use crate::detection::model::noise_matrix_inverse;
use crate::error::{invalid, Result};
use crate::pnd::Mode;

/// Which detectors a record covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// One mode, two detectors: outcomes `(XX, XO, OX, OO)`.
    Single,
    /// Both modes, four detectors: 16 statuses `D1 D2 D3 D4`, row-major.
    Bipartite,
}

impl Layout {
    pub fn cells(self) -> usize {
        match self {
            Layout::Single => 4,
            Layout::Bipartite => 16,
        }
    }
}

/// Observed outcome counts for one measurement setting.
///
/// Counts are real so that noise-corrected records share the type.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    layout: Layout,
    counts: Vec<f64>,
    n_m: f64,
    setting: usize,
}

impl CountRecord {
    pub fn new(layout: Layout, counts: Vec<f64>, n_m: f64, setting: usize) -> Result<Self> {
        if counts.len() != layout.cells() {
            return Err(invalid(format!(
                "expected {} outcome counts, got {}",
                layout.cells(),
                counts.len()
            )));
        }
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(invalid("counts must be finite and nonnegative"));
        }
        let total: f64 = counts.iter().sum();
        if (total - n_m).abs() > 1e-9 * n_m.max(1.0) {
            return Err(invalid(format!("counts sum to {total} but n_m = {n_m}")));
        }
        Ok(Self { layout, counts, n_m, setting })
    }

    pub fn from_integers(layout: Layout, counts: &[u64], setting: usize) -> Result<Self> {
        let n_m = counts.iter().sum::<u64>() as f64;
        Self::new(layout, counts.iter().map(|c| *c as f64).collect(), n_m, setting)
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn n_m(&self) -> f64 {
        self.n_m
    }

    pub fn setting(&self) -> usize {
        self.setting
    }

    /// `f / n_m`.
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|c| c / self.n_m).collect()
    }

    /// Outcome counts of one mode's two detectors.
    pub fn mode_counts(&self, mode: Mode) -> [f64; 4] {
        match self.layout {
            Layout::Single => [self.counts[0], self.counts[1], self.counts[2], self.counts[3]],
            Layout::Bipartite => {
                let mut out = [0.0; 4];
                for (k, c) in self.counts.iter().enumerate() {
                    let idx = match mode {
                        Mode::Signal => k / 4,
                        Mode::Idler => k % 4,
                    };
                    out[idx] += c;
                }
                out
            }
        }
    }

    /// Adds the counts of another record taken with the same setting.
    pub fn merge(&mut self, other: &CountRecord) -> Result<()> {
        if other.layout != self.layout || other.setting != self.setting {
            return Err(invalid("can only merge records of the same layout and setting"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n_m += other.n_m;
        Ok(())
    }
}

/// A record with the noise contribution removed.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedRecord {
    pub record: CountRecord,
    /// Negative corrected counts were clamped to 0 and the remaining
    /// counts rescaled to the original `n_m`.
    pub renormalized: bool,
}

/// Removes noise clicks by applying the inverse noise matrices.
///
/// `d` holds the noise probabilities `(d_t, d_r)` for a single-mode record
/// or `(d1, d2, d3, d4)` for a bipartite one.
pub fn noise_correct(rec: &CountRecord, d: &[f64]) -> Result<CorrectedRecord> {
    let raw: Vec<f64> = match (rec.layout, d) {
        (Layout::Single, [dt, dr]) => {
            let f = Vector4::from_column_slice(&rec.counts);
            (noise_matrix_inverse(*dt, *dr)? * f).iter().copied().collect()
        }
        (Layout::Bipartite, [d1, d2, d3, d4]) => {
            let f = Matrix4::from_row_slice(&rec.counts);
            let g = noise_matrix_inverse(*d1, *d2)? * f * noise_matrix_inverse(*d3, *d4)?.transpose();
            (0..16).map(|k| g[(k / 4, k % 4)]).collect()
        }
        _ => return Err(invalid("number of noise probabilities does not match the record layout")),
    };
    let clamped = raw.iter().any(|v| *v < 0.0);
    let mut counts: Vec<f64> = raw.into_iter().map(|v| v.max(0.0)).collect();
    if clamped {
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(invalid("noise correction removed every count"));
        }
        let scale = rec.n_m / total;
        counts.iter_mut().for_each(|c| *c *= scale);
    }
    // the inverse maps preserve the total exactly up to rounding
    let total: f64 = counts.iter().sum();
    let record = CountRecord { layout: rec.layout, counts, n_m: total, setting: rec.setting };
    Ok(CorrectedRecord { record, renormalized: clamped })
}

/// Column names of the outcome counts for a layout.
pub fn count_columns(layout: Layout) -> Vec<String> {
    match layout {
        Layout::Single => (1..=4).map(|k| format!("f{k}")).collect(),
        Layout::Bipartite => (1..=4).flat_map(|a| (1..=4).map(move |b| format!("f{a}{b}"))).collect(),
    }
}

/// What the loader did with the rows it read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadSummary {
    pub rows: usize,
    pub settings: usize,
    /// More than one row contributed to at least one setting.
    pub summed_rows: bool,
}

/// Reads a count log, `nu,n_m,f11,...,f44` (or `nu,n_m,f1,...,f4` for one
/// mode). Rows sharing a `nu` are summed, so per-second logs load directly.
pub fn read_count_log<R: Read>(reader: R) -> Result<(Vec<CountRecord>, LoadSummary)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| invalid(format!("malformed count log: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let layout = [Layout::Bipartite, Layout::Single]
        .into_iter()
        .find(|l| {
            let mut want = vec!["nu".to_string(), "n_m".to_string()];
            want.extend(count_columns(*l));
            header == want
        })
        .ok_or_else(|| invalid(format!("unexpected count log header: {}", header.join(","))))?;

    let mut by_setting: BTreeMap<usize, CountRecord> = BTreeMap::new();
    let mut rows = 0;
    let mut summed = false;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| invalid(format!("malformed count log: {e}")))?;
        let field = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| invalid(format!("row {}: cannot parse '{}' in column {}", line + 1, &rec[i], header[i])))
        };
        let nu = rec[0]
            .parse::<usize>()
            .map_err(|_| invalid(format!("row {}: setting id '{}' is not a nonnegative integer", line + 1, &rec[0])))?;
        let n_m = field(1)?;
        let counts = (2..rec.len()).map(field).collect::<Result<Vec<_>>>()?;
        let r = CountRecord::new(layout, counts, n_m, nu).map_err(|e| invalid(format!("row {}: {e}", line + 1)))?;
        rows += 1;
        match by_setting.get_mut(&nu) {
            Some(acc) => {
                acc.merge(&r)?;
                summed = true;
            }
            None => {
                by_setting.insert(nu, r);
            }
        }
    }
    if rows == 0 {
        return Err(invalid("count log has no rows"));
    }
    let records: Vec<CountRecord> = by_setting.into_values().collect();
    let summary = LoadSummary { rows, settings: records.len(), summed_rows: summed };
    Ok((records, summary))
}

pub fn write_count_log<W: Write>(records: &[CountRecord], writer: W) -> Result<()> {
    let Some(first) = records.first() else {
        return Err(invalid("no records to write"));
    };
    let layout = first.layout;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["nu".to_string(), "n_m".to_string()];
    header.extend(count_columns(layout));
    w.write_record(&header).map_err(|e| invalid(e.to_string()))?;
    for r in records {
        if r.layout != layout {
            return Err(invalid("records in one log must share a layout"));
        }
        let mut row = vec![r.setting.to_string(), r.n_m.to_string()];
        row.extend(r.counts.iter().map(|c| c.to_string()));
        w.write_record(&row).map_err(|e| invalid(e.to_string()))?;
    }
    w.flush().map_err(|e| invalid(e.to_string()))
}
