use std::fmt;
use std::str::FromStr;

use crate::cell::{run_cycle, CellConfig, WritePattern};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::readout;

/// Measured device resistances (Ω) per logic digit, keyed by the sub-cell
/// resistor value they were obtained with.
pub const REFERENCE_LEVELS: [(f64, [f64; 3]); 3] = [
    (20.0, [232.068, 918.906, 1537996.116]),
    (60.0, [232.132, 749.831, 498863.843]),
    (180.0, [233.760, 463.077, 26853.357]),
];

/// Reference memristance for a digit written into a sub-cell with resistor
/// value `r_sub`, if one was measured.
pub fn reference_memristance(r_sub: f64, digit: u8) -> Option<f64> {
    REFERENCE_LEVELS
        .iter()
        .find(|(r, _)| *r == r_sub)
        .and_then(|(_, col)| col.get(digit as usize).copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevelMode {
    /// Closed-form readout over the reference memristances.
    ClosedForm,
    /// One simulated reset/write/read cycle per pattern.
    Transient,
}

impl LevelMode {
    /// Relative tolerance under which two levels count as one.
    pub fn default_epsilon(self) -> f64 {
        match self {
            LevelMode::ClosedForm => 1e-9,
            LevelMode::Transient => 5e-3,
        }
    }
}

impl fmt::Display for LevelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LevelMode::ClosedForm => "closed-form",
            LevelMode::Transient => "transient",
        })
    }
}

impl FromStr for LevelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "closed-form" => Ok(LevelMode::ClosedForm),
            "transient" => Ok(LevelMode::Transient),
            other => Err(format!(
                "unknown mode `{other}` (expected closed-form or transient)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub pattern: WritePattern,
    pub v_out: f64,
    pub source: LevelMode,
}

/// One output level per write pattern, in lexicographic pattern order.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    pub rows: Vec<LevelRow>,
    /// Read voltage used, for the absolute tolerance around zero.
    pub v_read: f64,
}

impl LevelTable {
    pub fn by_pattern(&self) -> &[LevelRow] {
        &self.rows
    }

    /// Rows sorted by descending output, ties broken by pattern.
    pub fn sorted_desc(&self) -> Vec<&LevelRow> {
        let mut v: Vec<&LevelRow> = self.rows.iter().collect();
        v.sort_by(|a, b| b.v_out.total_cmp(&a.v_out).then(a.pattern.cmp(&b.pattern)));
        v
    }

    pub fn get(&self, pattern: &str) -> Option<&LevelRow> {
        self.rows.iter().find(|r| r.pattern.to_string() == pattern)
    }
}

pub fn enumerate_levels(config: &CellConfig, mode: LevelMode, exec: Exec) -> Result<LevelTable> {
    config.validate()?;
    let patterns = WritePattern::all(config.n, config.m);
    let values = match mode {
        LevelMode::ClosedForm => exec.try_map(&patterns, |p| closed_form_level(config, p))?,
        LevelMode::Transient => exec.try_map(&patterns, |p| Ok(run_cycle(config, p)?.v_out))?,
    };
    Ok(LevelTable {
        rows: patterns
            .into_iter()
            .zip(values)
            .map(|(pattern, v_out)| LevelRow {
                pattern,
                v_out,
                source: mode,
            })
            .collect(),
        v_read: config.v_read,
    })
}

fn closed_form_level(config: &CellConfig, pattern: &WritePattern) -> Result<f64> {
    let m = pattern
        .digits
        .iter()
        .zip(&config.r_sub)
        .enumerate()
        .map(|(i, (&d, &r))| {
            reference_memristance(r, d).ok_or(Error::Data {
                subcell: i + 1,
                r_sub: r,
                digit: d,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    readout::generalized_vout(&m, &config.r_sub, config.r_load, config.v_read)
}

/// Whether two sorted-adjacent levels `hi >= lo` are the same level.
fn same_level(hi: f64, lo: f64, epsilon_rel: f64, v_read: f64) -> bool {
    if hi == 0.0 {
        (hi - lo).abs() <= epsilon_rel * v_read
    } else {
        (hi - lo) / hi <= epsilon_rel
    }
}

/// Groups of rows forming one level each, highest level first.
fn level_groups(table: &LevelTable, epsilon_rel: f64) -> Vec<Vec<&LevelRow>> {
    let mut groups: Vec<Vec<&LevelRow>> = Vec::new();
    for row in table.sorted_desc() {
        match groups.last_mut() {
            Some(g)
                if same_level(
                    g.last().unwrap().v_out,
                    row.v_out,
                    epsilon_rel,
                    table.v_read,
                ) =>
            {
                g.push(row)
            }
            _ => groups.push(vec![row]),
        }
    }
    groups
}

pub fn count_distinct(table: &LevelTable, epsilon_rel: f64) -> usize {
    level_groups(table, epsilon_rel).len()
}

/// Relative step between two adjacent levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub hi: WritePattern,
    pub lo: WritePattern,
    pub rel_diff_percent: f64,
}

fn gap(hi: &LevelRow, lo: &LevelRow) -> Gap {
    Gap {
        hi: hi.pattern.clone(),
        lo: lo.pattern.clone(),
        rel_diff_percent: if hi.v_out == 0.0 {
            0.0
        } else {
            100.0 * (hi.v_out - lo.v_out) / hi.v_out
        },
    }
}

/// Gaps between every pair of neighbours in descending order: `m^n − 1`
/// entries, zero between coinciding levels.
pub fn adjacent_gaps(table: &LevelTable) -> Vec<Gap> {
    table
        .sorted_desc()
        .windows(2)
        .map(|w| gap(w[0], w[1]))
        .collect()
}

/// Gaps between distinct levels only. Each level is represented by its
/// lexicographically smallest pattern.
pub fn level_gaps(table: &LevelTable, epsilon_rel: f64) -> Vec<Gap> {
    let reps: Vec<&LevelRow> = level_groups(table, epsilon_rel)
        .into_iter()
        .map(|g| {
            g.into_iter()
                .min_by(|a, b| a.pattern.cmp(&b.pattern))
                .unwrap()
        })
        .collect();
    reps.windows(2).map(|w| gap(w[0], w[1])).collect()
}

/// The `top_k` smallest gaps between distinct levels, ascending.
pub fn closest_pairs(table: &LevelTable, top_k: usize, epsilon_rel: f64) -> Vec<Gap> {
    let mut g = level_gaps(table, epsilon_rel);
    g.sort_by(|a, b| a.rel_diff_percent.total_cmp(&b.rel_diff_percent));
    g.truncate(top_k);
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub lo: f64,
    /// `None` for the open-ended last bin.
    pub hi: Option<f64>,
    pub count: usize,
}

/// Counts values into `[k w, (k+1) w)` bins up to the bin holding the
/// largest value, which is left open-ended.
pub fn histogram(values: &[f64], bin_width: f64) -> Vec<Bin> {
    assert!(bin_width > 0.0, "bin width must be positive");
    let Some(max) = values.iter().copied().reduce(f64::max) else {
        return Vec::new();
    };
    let last = (max.max(0.0) / bin_width).floor() as usize;
    let mut bins: Vec<Bin> = (0..=last)
        .map(|k| Bin {
            lo: k as f64 * bin_width,
            hi: (k < last).then_some((k + 1) as f64 * bin_width),
            count: 0,
        })
        .collect();
    for &v in values {
        let k = ((v.max(0.0) / bin_width).floor() as usize).min(last);
        bins[k].count += 1;
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(values: &[(&str, f64)]) -> LevelTable {
        LevelTable {
            rows: values
                .iter()
                .map(|&(p, v)| LevelRow {
                    pattern: p.parse().unwrap(),
                    v_out: v,
                    source: LevelMode::ClosedForm,
                })
                .collect(),
            v_read: 0.1,
        }
    }

    #[test]
    fn distinct_counting() {
        let t = table(&[("00", 1.0), ("01", 1.0), ("10", 0.5), ("11", 0.0)]);
        assert_eq!(count_distinct(&t, 1e-9), 3);
        assert_eq!(count_distinct(&t, 1.0), 1);
        assert_eq!(count_distinct(&t, 0.5), 2);
        let z = table(&[("0", 0.0), ("1", 0.0)]);
        assert_eq!(count_distinct(&z, 1e-9), 1);
    }

    #[test]
    fn gaps_and_guards() {
        let t = table(&[("00", 1.0), ("01", 1.0), ("10", 0.5), ("11", 0.0)]);
        let g = adjacent_gaps(&t);
        assert_eq!(g.len(), 3);
        assert_eq!(g[0].rel_diff_percent, 0.0);
        assert_eq!(g[1].rel_diff_percent, 50.0);
        assert_eq!(g[2].rel_diff_percent, 100.0);
        let lg = level_gaps(&t, 1e-9);
        assert_eq!(lg.len(), 2);
        assert_eq!(lg[0].hi.to_string(), "00");
        let z = table(&[("0", 0.0), ("1", 0.0)]);
        assert_eq!(adjacent_gaps(&z)[0].rel_diff_percent, 0.0);
    }

    #[test]
    fn closest_pairs_ordering() {
        let t = table(&[("0", 1.0), ("1", 0.9), ("2", 0.3), ("3", 0.29)]);
        let c = closest_pairs(&t, 2, 1e-9);
        assert_eq!(c.len(), 2);
        assert_eq!(
            (c[0].hi.to_string(), c[0].lo.to_string()),
            ("2".into(), "3".into())
        );
        assert_eq!(closest_pairs(&t, 10, 1e-9).len(), 3);
    }

    #[test]
    fn histogram_bins() {
        assert!(histogram(&[], 20.0).is_empty());
        let h = histogram(&[0.0, 19.9, 20.0, 45.0, 99.0], 20.0);
        assert_eq!(h.len(), 5);
        assert_eq!(
            h.iter().map(|b| b.count).collect::<Vec<_>>(),
            vec![2, 1, 1, 0, 1]
        );
        assert_eq!(h[4].hi, None);
        assert_eq!(h[0].hi, Some(20.0));
    }

    #[test]
    fn reference_lookup() {
        assert_eq!(reference_memristance(60.0, 2), Some(498863.843));
        assert_eq!(reference_memristance(61.0, 0), None);
        assert_eq!(reference_memristance(20.0, 3), None);
        let c = CellConfig {
            r_sub: vec![20.0, 61.0, 180.0],
            ..Default::default()
        };
        assert!(matches!(
            enumerate_levels(&c, LevelMode::ClosedForm, Exec::Sequential),
            Err(Error::Data { subcell: 2, .. })
        ));
    }
}
