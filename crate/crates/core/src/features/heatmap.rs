//! Heat-map container and per-row standardization.

use crate::pcg_io::{Label, Quality};

/// Row-major coefficient matrix. Row 0 is coefficient k = 1; renderers draw
/// row 0 at the bottom (inverted vertical axis).
#[derive(Debug, Clone, PartialEq)]
pub struct MfccHeatMap {
    pub values: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub source_id: String,
    pub start_sample: usize,
    pub label: Label,
    pub quality: Quality,
}

impl MfccHeatMap {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// Per-coefficient-row mean and standard deviation over a training set.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-6;

/// Standardizes maps row-wise: (x − mean) / max(std, 1e-6).
///
/// With `stats: None` the statistics are fit over every entry of every map
/// (population std) and returned; otherwise the supplied statistics are
/// applied unchanged.
pub fn standardize(
    maps: &[MfccHeatMap],
    stats: Option<&NormalizationStats>,
) -> (Vec<MfccHeatMap>, NormalizationStats) {
    let stats = match stats {
        Some(s) => s.clone(),
        None => fit_stats(maps),
    };
    let out = maps
        .iter()
        .map(|m| {
            let mut sm = m.clone();
            for r in 0..m.rows {
                let mean = stats.mean[r];
                let std = stats.std[r].max(STD_FLOOR);
                for c in 0..m.cols {
                    sm.values[r * m.cols + c] = (m.at(r, c) - mean) / std;
                }
            }
            sm
        })
        .collect();
    (out, stats)
}

fn fit_stats(maps: &[MfccHeatMap]) -> NormalizationStats {
    assert!(!maps.is_empty(), "fitting normalization needs at least one map");
    let rows = maps[0].rows;
    let mut mean = vec![0.0f64; rows];
    let mut count = vec![0u64; rows];
    for m in maps {
        for r in 0..m.rows {
            for c in 0..m.cols {
                mean[r] += m.at(r, c);
                count[r] += 1;
            }
        }
    }
    for r in 0..rows {
        mean[r] /= count[r] as f64;
    }
    let mut var = vec![0.0f64; rows];
    for m in maps {
        for r in 0..m.rows {
            for c in 0..m.cols {
                let d = m.at(r, c) - mean[r];
                var[r] += d * d;
            }
        }
    }
    let std = var
        .iter()
        .zip(&count)
        .map(|(&v, &n)| (v / n as f64).sqrt().max(STD_FLOOR))
        .collect();
    NormalizationStats { mean, std }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: Vec<f64>, rows: usize, cols: usize) -> MfccHeatMap {
        MfccHeatMap {
            values,
            rows,
            cols,
            source_id: "m".into(),
            start_sample: 0,
            label: Label::Unknown,
            quality: Quality::Unknown,
        }
    }

    #[test]
    fn two_point_rows_standardize_to_unit_values() {
        let m = map(vec![0.0, 2.0, 0.0, 2.0], 1, 4);
        let (out, stats) = standardize(&[m], None);
        assert_eq!(stats.mean[0], 1.0);
        assert_eq!(stats.std[0], 1.0);
        assert_eq!(out[0].values, vec![-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn constant_rows_map_to_zero() {
        let m = map(vec![5.0; 6], 2, 3);
        let (out, stats) = standardize(&[m], None);
        assert_eq!(stats.std, vec![STD_FLOOR, STD_FLOOR]);
        assert!(out[0].values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fit_then_apply_centers_every_row() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let maps: Vec<MfccHeatMap> = (0..4)
            .map(|_| {
                map(
                    (0..12).map(|_| rng.random_range(-3.0..3.0)).collect(),
                    3,
                    4,
                )
            })
            .collect();
        let (_, stats) = standardize(&maps, None);
        let (out, _) = standardize(&maps, Some(&stats));
        for r in 0..3 {
            let mut sum = 0.0;
            let mut n = 0.0;
            for m in &out {
                for c in 0..m.cols {
                    sum += m.at(r, c);
                    n += 1.0;
                }
            }
            assert!((sum / n).abs() < 1e-9, "row {r} mean {}", sum / n);
        }
    }

    #[test]
    fn apply_mode_does_not_refit() {
        let stats = NormalizationStats {
            mean: vec![10.0],
            std: vec![2.0],
        };
        let m = map(vec![14.0, 6.0], 1, 2);
        let (out, returned) = standardize(&[m], Some(&stats));
        assert_eq!(out[0].values, vec![2.0, -2.0]);
        assert_eq!(returned, stats);
    }
}
