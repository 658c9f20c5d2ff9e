//! CSV writers for analysis results. Numbers use 12 significant digits and
//! a `.` decimal separator regardless of locale.

use std::io::{self, Write};

use super::levels::{Bin, Gap, LevelTable};
use super::sensitivity::SensitivityReport;
use crate::fmt::sig12;

/// `pattern,v_out_V,source` in lexicographic pattern order.
pub fn write_levels_csv<W: Write>(mut w: W, table: &LevelTable) -> io::Result<()> {
    writeln!(w, "pattern,v_out_V,source")?;
    for r in &table.rows {
        writeln!(w, "{},{},{}", r.pattern, sig12(r.v_out), r.source)?;
    }
    Ok(())
}

/// `pattern_hi,pattern_lo,rel_diff_percent` from the highest level down.
pub fn write_gaps_csv<W: Write>(mut w: W, gaps: &[Gap]) -> io::Result<()> {
    writeln!(w, "pattern_hi,pattern_lo,rel_diff_percent")?;
    for g in gaps {
        writeln!(w, "{},{},{}", g.hi, g.lo, sig12(g.rel_diff_percent))?;
    }
    Ok(())
}

/// `bin_lo_pct,bin_hi_pct,count`; the open last bin has an empty upper edge.
pub fn write_histogram_csv<W: Write>(mut w: W, bins: &[Bin]) -> io::Result<()> {
    writeln!(w, "bin_lo_pct,bin_hi_pct,count")?;
    for b in bins {
        let hi = b.hi.map(sig12).unwrap_or_default();
        writeln!(w, "{},{},{}", sig12(b.lo), hi, b.count)?;
    }
    Ok(())
}

/// `pattern,mean_rel_err_pct,std_rel_err_pct,samples` plus a final
/// `AVERAGE` row. Flagged rows carry empty mean and deviation fields.
pub fn write_sensitivity_csv<W: Write>(mut w: W, report: &SensitivityReport) -> io::Result<()> {
    writeln!(w, "pattern,mean_rel_err_pct,std_rel_err_pct,samples")?;
    for r in &report.rows {
        if r.flagged {
            writeln!(w, "{},,,{}", r.pattern, r.samples)?;
        } else {
            writeln!(
                w,
                "{},{},{},{}",
                r.pattern,
                sig12(r.mean),
                sig12(r.std),
                r.samples
            )?;
        }
    }
    writeln!(
        w,
        "AVERAGE,{},{},{}",
        sig12(report.average_mean),
        sig12(report.average_std),
        report.average_samples
    )
}
