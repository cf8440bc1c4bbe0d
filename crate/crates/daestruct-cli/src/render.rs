//! Plain-text rendering of an analysis report: the signature matrix with the
//! classic margin layout (equation offsets c down the right edge, variable
//! offsets d along the bottom) plus the derived quantities.

use daestruct::analysis::AnalysisReport;
use daestruct::SignatureMatrix;

pub struct Names {
    pub equations: Vec<String>,
    pub variables: Vec<String>,
}

impl Names {
    /// Synthetic 0-based names for inputs that carry none.
    pub fn synthetic(n: usize) -> Self {
        Names {
            equations: (0..n).map(|i| format!("f{i}")).collect(),
            variables: (0..n).map(|j| format!("x{j}")).collect(),
        }
    }
}

pub fn render_report(
    sigma: &SignatureMatrix,
    report: &AnalysisReport,
    names: &Names,
    styled: bool,
) -> String {
    let n = sigma.n();
    let bold = |s: &str| {
        if styled {
            format!("\x1b[1m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    };

    let on_hvt: Vec<(usize, usize)> = report.hvt.clone();
    let cell = |i: usize, j: usize| -> String {
        match sigma.get(i, j) {
            None => ".".to_string(),
            Some(s) => {
                if on_hvt.contains(&(i, j)) {
                    format!("{s}*")
                } else {
                    s.to_string()
                }
            }
        }
    };

    let label_width = names
        .equations
        .iter()
        .map(|s| s.len())
        .chain(std::iter::once(1))
        .max()
        .unwrap();
    let col_widths: Vec<usize> = (0..n)
        .map(|j| {
            let mut w = names.variables[j].len();
            for i in 0..n {
                w = w.max(cell(i, j).len());
            }
            w.max(report.offsets.d()[j].to_string().len())
        })
        .collect();
    let c_width = report
        .offsets
        .c()
        .iter()
        .map(|v| v.to_string().len())
        .chain(std::iter::once(1))
        .max()
        .unwrap();

    let mut out = String::new();

    let mut header = format!("{:label_width$}", "");
    for (name, &w) in names.variables.iter().zip(&col_widths) {
        header.push_str(&format!("  {name:>w$}"));
    }
    header.push_str(&format!(" | {:>c_width$}", "c"));
    let width = header.len();
    out.push_str(&bold(&header));
    out.push('\n');

    for i in 0..n {
        out.push_str(&format!("{:<label_width$}", names.equations[i]));
        for (j, &w) in col_widths.iter().enumerate() {
            out.push_str(&format!("  {:>w$}", cell(i, j)));
        }
        out.push_str(&format!(" | {:>c_width$}", report.offsets.c()[i]));
        out.push('\n');
    }

    out.push_str(&"-".repeat(width));
    out.push('\n');
    out.push_str(&format!("{:<label_width$}", "d"));
    for (d, &w) in report.offsets.d().iter().zip(&col_widths) {
        out.push_str(&format!("  {d:>w$}"));
    }
    out.push('\n');
    out.push('\n');

    out.push_str(&format!("n:                {}\n", report.n));
    out.push_str(&format!("method:           {}\n", report.method));
    out.push_str(&format!("structural index: {}\n", report.structural_index));
    out.push_str(&format!("hvt value:        {}\n", report.hvt_value));
    if let Some(bs) = &report.block_structure {
        out.push_str(&format!("block sizes:      {:?}\n", bs.block_sizes()));
    }

    let pattern: Vec<String> = report
        .jacobian_pattern
        .iter()
        .map(|c| {
            format!(
                "({},{})^{}",
                names.equations[c.row], names.variables[c.col], c.order
            )
        })
        .collect();
    out.push_str(&format!(
        "jacobian pattern: {} cells: {}\n",
        pattern.len(),
        pattern.join(" ")
    ));

    let phi: u64 = report.stats.iter().map(|s| s.stats.phi_applications).sum();
    let mops: u64 = report.stats.iter().map(|s| s.stats.matching_ops).sum();
    out.push_str(&format!("phi applications: {phi}\n"));
    out.push_str(&format!("matching ops:     {mops}\n"));
    out.push_str("numeric jacobian: not checked (structural analysis only)\n");
    out
}
