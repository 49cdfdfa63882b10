//! Datasets: synthetic generation, CSV input/output, min-max scaling and
//! outlier contamination.

pub mod noise;
pub mod synthetic;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::{check_points, Point};

pub use noise::{golden_section_max, NoiseDensity, NoiseFamily};
pub use synthetic::{
    generate, sinc, uniform_grid, LinearScale, NoiseCase, ReferenceFunctions, ReferenceKind, SyntheticSpec,
    ToyModel, Truth,
};

/// How a dataset was produced, when it is synthetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub spec: SyntheticSpec,
    pub seed: u64,
}

/// `n >= 1` observations with finite inputs of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<Point>,
    y: Vec<f64>,
    feature_names: Vec<String>,
    target_name: String,
    pub provenance: Option<Provenance>,
}

impl Dataset {
    /// Builds a dataset with columns named `x1..xd` and target `y`.
    pub fn new(x: Vec<Point>, y: Vec<f64>) -> Result<Self> {
        let d = check_points(&x, "inputs")?;
        let names = (1..=d).map(|j| format!("x{j}")).collect();
        Self::with_names(x, y, names, "y".to_string())
    }

    pub fn with_names(x: Vec<Point>, y: Vec<f64>, feature_names: Vec<String>, target_name: String) -> Result<Self> {
        let d = check_points(&x, "inputs")?;
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: feature_names.len(),
            });
        }
        Ok(Self {
            x,
            y,
            feature_names,
            target_name,
            provenance: None,
        })
    }

    pub fn x(&self) -> &[Point] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    /// Rows at `idx`, in order. Provenance is dropped.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        let x = idx.iter().map(|&i| self.x[i].clone()).collect();
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Self::with_names(x, y, self.feature_names.clone(), self.target_name.clone())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.feature_names.clone();
        header.push(self.target_name.clone());
        w.write_record(&header)?;
        for (p, y) in self.x.iter().zip(&self.y) {
            let mut row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            row.push(y.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a CSV with a header row; `target` names the response column and
    /// every other column becomes a feature. Rows and columns in parse errors
    /// are 1-based, counting data rows after the header.
    pub fn read_csv<R: Read>(reader: R, target: &str) -> Result<Dataset> {
        let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let t = header
            .iter()
            .position(|h| h == target)
            .ok_or_else(|| Error::invalid("target", format!("column `{target}` not found in header")))?;
        let features: Vec<String> = header
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != t)
            .map(|(_, h)| h.clone())
            .collect();
        if features.is_empty() {
            return Err(Error::invalid("target", "no feature columns besides the target"));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, record) in r.records().enumerate() {
            let record = record?;
            let row = i + 1;
            if record.len() != header.len() {
                return Err(Error::Parse {
                    row,
                    column: record.len().min(header.len()) + 1,
                    message: format!("expected {} fields, found {}", header.len(), record.len()),
                });
            }
            let mut p = Vec::with_capacity(features.len());
            let mut y = 0.0;
            for (j, cell) in record.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    row,
                    column: j + 1,
                    message: format!("expected a number, found `{cell}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        row,
                        column: j + 1,
                        message: "non-finite value".to_string(),
                    });
                }
                if j == t {
                    y = v;
                } else {
                    p.push(v);
                }
            }
            xs.push(p);
            ys.push(y);
        }
        if xs.is_empty() {
            return Err(Error::EmptyInput("csv rows"));
        }
        Self::with_names(xs, ys, features, target.to_string())
    }
}

pub fn load_csv(path: impl AsRef<Path>, target: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    Dataset::read_csv(std::io::BufReader::new(file), target)
}

/// Per-feature min and max used to map features to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingRecord {
    pub fn fit(ds: &Dataset) -> Self {
        let d = ds.dim();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for p in ds.x() {
            for j in 0..d {
                min[j] = min[j].min(p[j]);
                max[j] = max[j].max(p[j]);
            }
        }
        Self {
            columns: ds.feature_names().to_vec(),
            min,
            max,
        }
    }

    pub fn transform_point(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect()
    }

    /// Applies the recorded transform; the response is left untouched.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.dim() != self.min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                found: ds.dim(),
            });
        }
        let x = ds.x().iter().map(|p| self.transform_point(p)).collect();
        Dataset::with_names(x, ds.y().to_vec(), ds.feature_names().to_vec(), ds.target_name().to_string())
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Min-max scales every feature column to `[0, 1]`; constant columns map to 0.
pub fn scale_unit(ds: &Dataset) -> Result<(Dataset, ScalingRecord)> {
    let record = ScalingRecord::fit(ds);
    Ok((record.apply(ds)?, record))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Each outlier gets its own input, uniform on the bounding box.
    RandomX,
    /// All outliers share a single input drawn uniformly on the bounding box.
    FixedX,
}

/// Appends `m` outliers with response `+magnitude` to a copy of `ds`.
pub fn contaminate(ds: &Dataset, m: usize, magnitude: f64, placement: Placement, seed: u64) -> Result<Dataset> {
    if !magnitude.is_finite() {
        return Err(Error::invalid("magnitude", "must be finite"));
    }
    let mut out = ds.clone();
    out.provenance = None;
    if m == 0 {
        return Ok(out);
    }
    let d = ds.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in ds.x() {
        for j in 0..d {
            lo[j] = lo[j].min(p[j]);
            hi[j] = hi[j].max(p[j]);
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha20Rng| -> Point {
        (0..d).map(|j| lo[j] + (hi[j] - lo[j]) * rng.random::<f64>()).collect()
    };
    let shared = draw(&mut rng);
    for k in 0..m {
        let p = match placement {
            Placement::FixedX => shared.clone(),
            Placement::RandomX if k == 0 => shared.clone(),
            Placement::RandomX => draw(&mut rng),
        };
        out.x.push(p);
        out.y.push(magnitude);
    }
    Ok(out)
}

/// Derives the seed of repetition `index` from a base seed (SplitMix64).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Dataset {
        Dataset::new(values.iter().map(|v| vec![*v]).collect(), vec![0.0; values.len()]).unwrap()
    }

    #[test]
    fn dataset_invariants() {
        assert!(matches!(Dataset::new(vec![], vec![]), Err(Error::EmptyInput(_))));
        assert!(Dataset::new(vec![vec![1.0]], vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![f64::NAN]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn min_max_examples() {
        let (s, _) = scale_unit(&column(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(s.x(), &[vec![0.0], vec![0.5], vec![1.0]]);
        let (s, _) = scale_unit(&column(&[5.0, 5.0])).unwrap();
        assert_eq!(s.x(), &[vec![0.0], vec![0.0]]);
    }

    #[test]
    fn scaling_record_round_trip() {
        let ds = column(&[-3.0, 0.25, 7.5, 1.0]);
        let (scaled, record) = scale_unit(&ds).unwrap();
        assert_eq!(record.apply(&ds).unwrap(), scaled);
        let json = serde_json::to_string(&record).unwrap();
        let back: ScalingRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn csv_round_trip() {
        let ds = Dataset::new(vec![vec![0.1, -2.0], vec![1.0 / 3.0, 5e-17]], vec![1.5, -0.0]).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2,y\n"));
        let back = Dataset::read_csv(buf.as_slice(), "y").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn csv_target_can_be_any_column() {
        let text = "price,size,rooms\n10,1.5,2\n12,2.0,3\n";
        let ds = Dataset::read_csv(text.as_bytes(), "price").unwrap();
        assert_eq!(ds.feature_names(), &["size".to_string(), "rooms".to_string()]);
        assert_eq!(ds.y(), &[10.0, 12.0]);
        assert_eq!(ds.x()[1], vec![2.0, 3.0]);
    }

    #[test]
    fn csv_errors_carry_location() {
        let err = Dataset::read_csv("x1,y\n1,2\n3,abc\n".as_bytes(), "y").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, column: 2, .. }), "{err}");
        let err = Dataset::read_csv("x1,y\n1,2,3\n".as_bytes(), "y").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
        assert!(Dataset::read_csv("x1,y\n1,2\n".as_bytes(), "z").is_err());
        assert!(matches!(
            Dataset::read_csv("x1,y\n".as_bytes(), "y"),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn contamination_examples() {
        let ds = column(&[0.0, 1.0, 2.0]);
        assert_eq!(contaminate(&ds, 0, 1e6, Placement::RandomX, 1).unwrap(), ds);
        let c = contaminate(&ds, 5, 1e6, Placement::RandomX, 1).unwrap();
        assert_eq!(c.n(), 8);
        assert!(c.y()[3..].iter().all(|y| y.abs() == 1e6));
        assert!(c.x()[3..].iter().all(|p| (0.0..=2.0).contains(&p[0])));
        assert_eq!(c, contaminate(&ds, 5, 1e6, Placement::RandomX, 1).unwrap());
        let f = contaminate(&ds, 4, 1e6, Placement::FixedX, 2).unwrap();
        assert!(f.x()[3..].iter().all(|p| *p == f.x()[3]));
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_eq!(derive_seed(42, 3), seeds[3]);
    }
}
