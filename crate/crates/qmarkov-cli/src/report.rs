//! Deterministic plain-text report rendering. Everything a report states is
//! reproducible from (spec file, seed, tolerances); no timestamps, so equal
//! inputs give byte-identical output.

use qmarkov::absorption::AbsorptionOperator;
use qmarkov::analysis::ChannelAnalysis;
use qmarkov::channel::QuantumChannel;
use qmarkov::numerics::{CMatrix, Subspace};
use std::fmt::Write as _;

/// 17 significant digits: reload-exact within double precision.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn write_matrix(out: &mut String, indent: &str, m: &CMatrix) {
    for i in 0..m.rows() {
        let mut line = String::from(indent);
        for j in 0..m.cols() {
            let z = m[(i, j)];
            let _ = write!(line, "({}, {}) ", fmt_f(z.re), fmt_f(z.im));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

pub fn write_subspace(out: &mut String, name: &str, s: &Subspace) {
    let _ = writeln!(out, "{name}: dim {}", s.dim());
    if s.dim() > 0 {
        write_matrix(out, "  ", s.frame());
    }
}

fn write_absorption(out: &mut String, label: &str, a: &AbsorptionOperator) {
    let _ = writeln!(
        out,
        "{label}: method {:?}, fixed-point residual {}, blocks residual {}",
        a.method,
        fmt_f(a.residuals.fixed_point),
        fmt_f(a.residuals.blocks)
    );
    write_matrix(out, "  ", &a.matrix);
}

/// Render the full analysis report.
pub fn render_analysis(
    label: Option<&str>,
    channel: &QuantumChannel,
    analysis: &ChannelAnalysis,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# qmarkov analysis report");
    if let Some(l) = label {
        let _ = writeln!(out, "label: {l}");
    }
    let _ = writeln!(out, "dim: {}", channel.dim());
    let _ = writeln!(out, "kraus operators: {}", channel.kraus().len());
    let _ = writeln!(out, "fingerprint: {:016x}", channel.fingerprint());
    let _ = writeln!(out, "seed: {}", analysis.seed);
    let _ = writeln!(
        out,
        "tolerances: rank_cut {} eq_tol {}",
        fmt_f(channel.tol().rank_cut),
        fmt_f(channel.tol().eq_tol)
    );

    let _ = writeln!(out, "\n[recurrence]");
    let deco = &analysis.decomposition;
    write_subspace(&mut out, "R+", &deco.r_plus);
    write_subspace(&mut out, "R0", &deco.r_zero);
    write_subspace(&mut out, "T", &deco.transient);
    let _ = writeln!(out, "R+ enclosure slack: {}", fmt_f(deco.r_plus_cert.slack));
    let _ = writeln!(
        out,
        "invariant state residual: {}",
        fmt_f(deco.report.invariance_residual)
    );
    let _ = writeln!(out, "max invariant state:");
    write_matrix(&mut out, "  ", &deco.max_invariant_state);

    let _ = writeln!(out, "\n[fixed points]");
    let _ = writeln!(out, "dim F: {}", analysis.fixed_points.dim);
    let _ = writeln!(
        out,
        "max fixed residual: {}",
        fmt_f(analysis.fixed_points.max_fixed_residual)
    );
    for (k, b) in analysis.fixed_points.basis.iter().enumerate() {
        let _ = writeln!(out, "basis[{k}]:");
        write_matrix(&mut out, "  ", b);
    }

    let _ = writeln!(out, "\n[dome]");
    let _ = writeln!(out, "parts: {}", analysis.dome.parts.len());
    for (k, p) in analysis.dome.parts.iter().enumerate() {
        write_subspace(&mut out, &format!("part[{k}]"), p);
    }

    let _ = writeln!(out, "\n[absorption]");
    let _ = writeln!(
        out,
        "A(R) deviation from identity: {}",
        fmt_f(analysis.absorbing.deviation)
    );
    for (k, a) in analysis.part_absorptions.iter().enumerate() {
        write_absorption(&mut out, &format!("A(part[{k}])"), a);
        if let Some(lin) = &analysis.part_absorptions_linear[k] {
            let gap = lin.matrix.sub_mat(&a.matrix).norm_op();
            let _ = writeln!(out, "  method agreement ‖iter − linear‖: {}", fmt_f(gap));
        }
    }

    let _ = writeln!(out, "\n[algebra]");
    let _ = writeln!(out, "closure check: {}", analysis.closure.is_algebra);
    let _ = writeln!(
        out,
        "closure worst product distance: {}",
        fmt_f(analysis.closure.worst_distance)
    );
    let _ = writeln!(
        out,
        "criterion (absorption products): {}",
        analysis.criterion.is_algebra
    );
    let _ = writeln!(
        out,
        "worst pair norm: {}",
        fmt_f(analysis.criterion.worst_norm)
    );
    let _ = writeln!(out, "pairs checked: {}", analysis.criterion.pairs_checked);
    if let Some((v, w)) = &analysis.criterion.worst_pair {
        write_subspace(&mut out, "worst pair V", v);
        write_subspace(&mut out, "worst pair W", w);
    }

    let _ = writeln!(out, "\n[fixed points via absorption]");
    let _ = writeln!(out, "span dim: {}", analysis.span.span_dim);
    let _ = writeln!(out, "dim F: {}", analysis.span.fixed_dim);
    let _ = writeln!(
        out,
        "fixed-to-span distance: {}",
        fmt_f(analysis.span.fixed_to_span)
    );
    let _ = writeln!(
        out,
        "span-to-fixed distance: {}",
        fmt_f(analysis.span.span_to_fixed)
    );
    let _ = writeln!(
        out,
        "block residual: {}",
        fmt_f(analysis.span.block_residual)
    );
    out
}
