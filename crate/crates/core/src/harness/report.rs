//! CSV emission of convergence reports.

use std::io::Write;

use super::{ConvergenceReport, HarnessError, Order};

/// 17 significant digits, enough to round-trip an `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes reports as CSV: `scheme, k`, one error column per component, one
/// pairwise order column per component. Each scheme ends with a row whose
/// `k` field reads `order` and whose error columns hold the fitted orders.
pub fn write_report_csv<W: Write>(reports: &[ConvergenceReport], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let dim = reports.iter().map(|r| r.orders.len()).max().unwrap_or(0);
    let mut header = vec!["scheme".to_string(), "k".to_string()];
    header.extend((1..=dim).map(|c| format!("error_{c}")));
    header.extend((1..=dim).map(|c| format!("order_{c}")));
    w.write_record(&header)?;
    for report in reports {
        for row in &report.rows {
            let mut rec = vec![report.scheme.clone(), format_float(row.k)];
            match &row.errors {
                Ok(errors) => rec.extend(errors.iter().map(|&e| format_float(e))),
                Err(msg) => rec.extend((0..dim).map(|_| format!("failed: {msg}"))),
            }
            rec.extend(
                row.pairwise
                    .iter()
                    .map(|p| p.map(format_float).unwrap_or_default()),
            );
            rec.resize(2 + 2 * dim, String::new());
            w.write_record(&rec)?;
        }
        let mut rec = vec![report.scheme.clone(), "order".to_string()];
        rec.extend(report.orders.iter().map(|o| match o {
            Order::Fitted(q) => format_float(*q),
            Order::Exact => "exact".to_string(),
            Order::Insufficient => String::new(),
        }));
        rec.resize(2 + 2 * dim, String::new());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
