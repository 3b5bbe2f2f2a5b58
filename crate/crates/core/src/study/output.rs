use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::RunReport;
use crate::Result;

/// Schema tag written as the first line of the per-step CSV.
pub const CSV_VERSION: &str = "pdge-steps-v1";

pub const CSV_COLUMNS: [&str; 19] = [
    "n", "t_n", "tau_n", "theta", "data", "coarsen", "nonconf", "nonconf_ell", "eta", "eta_plus", "op_for", "op_back",
    "op_mesh", "kappa", "parest", "ellest", "total", "error", "ei",
];

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row per (level, step); levels are separated by `# level` comment lines.
pub fn write_csv<W: Write>(report: &RunReport, mut w: W) -> io::Result<()> {
    writeln!(w, "# {CSV_VERSION}")?;
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    for level in &report.levels {
        writeln!(w, "# level {} n={} h={} tau={}", level.level, level.subdivisions, num(level.h), num(level.tau))?;
        for r in &level.records {
            let s = &r.indicators;
            let t = &r.totals;
            let fields = [
                s.n.to_string(),
                num(s.t_n),
                num(s.tau_n),
                num(s.theta),
                num(s.data),
                num(s.coarsen),
                num(s.nonconf),
                num(s.nonconf_ell),
                num(s.eta),
                num(s.eta_plus),
                num(s.op_for),
                num(s.op_back),
                num(s.op_mesh),
                num(s.kappa),
                num(t.parest),
                num(t.ellest),
                num(t.total),
                opt(r.error),
                opt(r.ei),
            ];
            writeln!(w, "{}", fields.join(","))?;
        }
    }
    w.flush()
}

pub fn write_convergence_csv<W: Write>(report: &RunReport, mut w: W) -> io::Result<()> {
    writeln!(
        w,
        "level,n,h,tau,steps,dofs,error,parest,ellest,nonconf_acc,total,inverse_ei,eoc_error,eoc_parest,eoc_ellest,eoc_total"
    )?;
    for r in &report.table.rows {
        let fields = [
            r.level.to_string(),
            r.subdivisions.to_string(),
            num(r.h),
            num(r.tau),
            r.steps.to_string(),
            r.dofs.to_string(),
            opt(r.error),
            num(r.parest),
            num(r.ellest),
            num(r.nonconf_acc),
            num(r.total),
            opt(r.inverse_ei),
            opt(r.eoc_error),
            opt(r.eoc_parest),
            opt(r.eoc_ellest),
            opt(r.eoc_total),
        ];
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()
}

/// Writes floats with 17 significant digits.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

/// Any serialisable value (a [`RunReport`], a single level) as JSON.
pub fn write_json<T: Serialize, W: Write>(value: &T, w: W) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(w, FixedDigits);
    value.serialize(&mut ser)?;
    ser.into_inner().flush()?;
    Ok(())
}

pub fn emit_csv(report: &RunReport, path: &Path) -> Result<()> {
    write_csv(report, BufWriter::new(File::create(path)?))?;
    Ok(())
}

pub fn emit_convergence_csv(report: &RunReport, path: &Path) -> Result<()> {
    write_convergence_csv(report, BufWriter::new(File::create(path)?))?;
    Ok(())
}

pub fn emit_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_json(value, BufWriter::new(File::create(path)?))
}

pub fn load_json(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
