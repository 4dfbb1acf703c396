//! Command-line front end: file ingestion, command dispatch, and report
//! emission for the channel analyses.

mod files;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use files::{CliError, CliResult};
use num_complex::Complex64;
use qmarkov::absorption::{
    absorption_iterative, absorption_linear, absorption_stop, classical_absorption,
    embed_classical_chain,
};
use qmarkov::analysis::analyze_channel;
use qmarkov::dihedral;
use qmarkov::numerics::{CMatrix, ToleranceContext, ONE};
use qmarkov::structure::recurrence_decomposition;
use report::fmt_f;
use std::fmt::Write as _;
use std::process::ExitCode;

/// Structure analysis for semigroups of quantum channels: recurrence
/// decomposition, enclosures, fixed points, absorption operators, and the
/// truncated dihedral walk.
///
/// Exit codes: 0 on success, 1 on precondition failure, 2 on parse failure.
#[derive(Parser)]
#[command(name = "qmarkov", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: recurrence decomposition, fixed points, minimal
    /// enclosures, absorption operators, algebra verdict.
    Analyze(AnalyzeArgs),
    /// Absorption operator of one enclosure, by iteration and/or the
    /// compressed linear system.
    Absorption(AbsorptionArgs),
    /// Classical absorption probabilities into a closed set.
    Classical(ClassicalArgs),
    /// Write the diagonal-embedding channel spec of a classical chain.
    Embed(EmbedArgs),
    /// Truncated dihedral walk: potential series, spectral partitions, and
    /// the shift-equivalence check.
    Dihedral(DihedralArgs),
    /// Fixed-point space of a channel.
    FixedPoints(FixedPointsArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Channel spec file (JSON: dim, kraus as rows of [re, im] pairs).
    spec: String,
    /// Seed for the random draws; identical seeds give identical reports.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MethodChoice {
    Iter,
    Linear,
    Both,
}

#[derive(Args)]
struct AbsorptionArgs {
    /// Channel spec file.
    spec: String,
    /// Frame file of the enclosure (JSON: ambient, orthonormal columns).
    #[arg(long)]
    enclosure: String,
    #[arg(long, value_enum, default_value_t = MethodChoice::Both)]
    method: MethodChoice,
}

#[derive(Args)]
struct ClassicalArgs {
    /// Chain file: first line n, then n rows of n probabilities.
    chain: String,
    /// Closed target set, comma-separated state indices (e.g. "4" or "0,4").
    #[arg(long, value_delimiter = ',')]
    closed: Vec<usize>,
}

#[derive(Args)]
struct EmbedArgs {
    /// Chain file to embed.
    chain: String,
    /// Write the channel spec here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct DihedralArgs {
    /// Truncation radius (reduced words of length <= N).
    #[arg(long = "N")]
    n: usize,
    /// Emit the potential series as CSV with columns n,S_n,term,leak.
    #[arg(long)]
    series: bool,
    /// Number of exact terms for --series (must stay below N).
    #[arg(long)]
    n_max: Option<usize>,
    /// Emit spectral partition ranks at this level as CSV with columns
    /// copy,level,j,rank.
    #[arg(long)]
    partition: Option<usize>,
    /// Boundary tie tolerance for the dyadic cells.
    #[arg(long, default_value_t = 1e-12)]
    tie_tol: f64,
    /// Run the shift-equivalence permutation check.
    #[arg(long)]
    shift_check: bool,
    /// Directory for CSV artifacts (stdout when omitted).
    #[arg(long)]
    out_dir: Option<String>,
}

#[derive(Args)]
struct FixedPointsArgs {
    /// Channel spec file.
    spec: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Absorption(args) => cmd_absorption(args),
        Command::Classical(args) => cmd_classical(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Dihedral(args) => cmd_dihedral(args),
        Command::FixedPoints(args) => cmd_fixed_points(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Parse(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&str>, content: &str) -> CliResult<()> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Run(format!("cannot write {path}: {e}"))),
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", args.spec)))?;
    let spec = files::ChannelSpecFile::parse(&text)?;
    let channel = spec.to_channel()?;
    let analysis =
        analyze_channel(&channel, args.seed).map_err(|e| files::run_err("analysis", e))?;
    let rendered = report::render_analysis(spec.label.as_deref(), &channel, &analysis);
    emit(args.out.as_deref(), &rendered)
}

fn cmd_absorption(args: AbsorptionArgs) -> CliResult<()> {
    let channel = files::load_channel(&args.spec)?;
    let v = files::load_frame(&args.enclosure, channel.tol())?;
    let deco = recurrence_decomposition(&channel).map_err(|e| files::run_err("structure", e))?;
    let mut out = String::new();
    let mut iter_matrix: Option<CMatrix> = None;
    if matches!(args.method, MethodChoice::Iter | MethodChoice::Both) {
        let a = absorption_iterative(&channel, &v, &deco, &absorption_stop())
            .map_err(|e| files::run_err("absorption", e))?;
        let _ = writeln!(
            out,
            "iterative: fixed-point residual {}, blocks residual {}, terms {}",
            fmt_f(a.residuals.fixed_point),
            fmt_f(a.residuals.blocks),
            a.report.terms
        );
        report::write_matrix(&mut out, "  ", &a.matrix);
        iter_matrix = Some(a.matrix);
    }
    if matches!(args.method, MethodChoice::Linear | MethodChoice::Both) {
        let a =
            absorption_linear(&channel, &v, &deco).map_err(|e| files::run_err("absorption", e))?;
        let _ = writeln!(
            out,
            "linear system: fixed-point residual {}, blocks residual {}",
            fmt_f(a.residuals.fixed_point),
            fmt_f(a.residuals.blocks)
        );
        report::write_matrix(&mut out, "  ", &a.matrix);
        if let Some(it) = &iter_matrix {
            let _ = writeln!(
                out,
                "method agreement ‖iter − linear‖: {}",
                fmt_f(a.matrix.sub_mat(it).norm_op())
            );
        }
    }
    emit(None, &out)
}

fn cmd_classical(args: ClassicalArgs) -> CliResult<()> {
    let chain = files::load_chain(&args.chain, ToleranceContext::default())?;
    let a =
        classical_absorption(&chain, &args.closed).map_err(|e| files::run_err("absorption", e))?;
    let mut out = String::new();
    for (x, value) in a.iter().enumerate() {
        let _ = writeln!(out, "{x} {}", fmt_f(*value));
    }
    emit(None, &out)
}

fn cmd_embed(args: EmbedArgs) -> CliResult<()> {
    let chain = files::load_chain(&args.chain, ToleranceContext::default())?;
    let channel = embed_classical_chain(&chain).map_err(|e| files::run_err("absorption", e))?;
    let label = format!("diagonal embedding of {}", args.chain);
    let spec = files::ChannelSpecFile::from_channel(Some(label), &channel);
    let json = serde_json::to_string_pretty(&spec)
        .map_err(|e| CliError::Run(format!("serialization: {e}")))?;
    emit(args.out.as_deref(), &format!("{json}\n"))
}

fn cmd_dihedral(args: DihedralArgs) -> CliResult<()> {
    let tol = ToleranceContext::default();
    if !(args.series || args.partition.is_some() || args.shift_check) {
        return Err(CliError::Run(
            "dihedral: choose at least one of --series, --partition, --shift-check".into(),
        ));
    }
    let write_csv = |name: &str, content: &str| -> CliResult<()> {
        match &args.out_dir {
            None => {
                print!("{content}");
                Ok(())
            }
            Some(dir) => {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::Run(format!("cannot create {dir}: {e}")))?;
                let path = format!("{dir}/{name}");
                std::fs::write(&path, content)
                    .map_err(|e| CliError::Run(format!("cannot write {path}: {e}")))
            }
        }
    };

    if args.series {
        let n_max = args.n_max.unwrap_or(args.n.saturating_sub(1));
        let basis =
            dihedral::TruncatedBasis::new(args.n).map_err(|e| files::run_err("dihedral", e))?;
        let m = basis.size();
        let center = basis.index(0).expect("origin is inside the window");
        let mut x = CMatrix::zeros(m, m);
        x[(center, center)] = ONE;
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        v[center] = ONE;
        let series = dihedral::potential_series(args.n, &x, &v, n_max, &tol)
            .map_err(|e| files::run_err("dihedral", e))?;
        let mut csv = String::from("n,S_n,term,leak\n");
        for (k, s) in series.partial_sums.iter().enumerate() {
            let leak = if k == 0 { 0.0 } else { series.leaks[k - 1] };
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                k + 1,
                fmt_f(*s),
                fmt_f(series.terms[k]),
                fmt_f(leak)
            );
        }
        write_csv("series.csv", &csv)?;
        let mut summary = String::new();
        if let Some(r) = series.growth.ratio_4m_over_2m {
            let _ = writeln!(
                summary,
                "growth ratio S_4m/S_2m at m = {}: {}",
                n_max / 4,
                fmt_f(r)
            );
        }
        let _ = writeln!(
            summary,
            "sqrt fit coefficient: {}",
            fmt_f(series.growth.sqrt_fit_coefficient)
        );
        print!("{summary}");
    }

    if let Some(level) = args.partition {
        let parts = dihedral::partition_projections(args.n, level, args.tie_tol)
            .map_err(|e| files::run_err("dihedral", e))?;
        let mut csv = String::from("copy,level,j,rank\n");
        for (c, copy) in parts.copies.iter().enumerate() {
            for (j, rank) in copy.ranks.iter().enumerate() {
                let _ = writeln!(csv, "{c},{level},{j},{rank}");
            }
        }
        write_csv("partition.csv", &csv)?;
        for lr in &parts.atomlessness {
            println!(
                "level {} max child/parent rank ratio: {}",
                lr.level,
                fmt_f(lr.max_child_parent_ratio)
            );
        }
    }

    if args.shift_check {
        let check =
            dihedral::shift_equivalence_check(args.n).map_err(|e| files::run_err("dihedral", e))?;
        println!(
            "shift equivalence: interior residual {}, positions checked {}, copies of sizes {} and {}",
            fmt_f(check.residual),
            check.interior_checked,
            check.orbits[0].len(),
            check.orbits[1].len()
        );
    }
    Ok(())
}

fn cmd_fixed_points(args: FixedPointsArgs) -> CliResult<()> {
    let channel = files::load_channel(&args.spec)?;
    let fps = qmarkov::structure::fixed_point_space(&channel)
        .map_err(|e| files::run_err("structure", e))?;
    let mut out = String::new();
    let _ = writeln!(out, "dim F: {}", fps.dim);
    let _ = writeln!(out, "max fixed residual: {}", fmt_f(fps.max_fixed_residual));
    for (k, b) in fps.basis.iter().enumerate() {
        let _ = writeln!(out, "basis[{k}]:");
        report::write_matrix(&mut out, "  ", b);
    }
    emit(None, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_parser_round_trip() {
        let text = "3\n1 0 0\n0.5 0 0.5\n0 0 1\n";
        let chain = files::parse_chain(text, ToleranceContext::default()).unwrap();
        assert_eq!(chain.n(), 3);
        assert!((chain.prob(1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn chain_parser_rejects_short_files() {
        assert!(files::parse_chain("2\n1 0\n", ToleranceContext::default()).is_err());
    }

    #[test]
    fn spec_parser_reports_row_count() {
        let text = r#"{"dim": 2, "kraus": [[[[1,0],[0,0]],[[0,0],[1,0]],[[0,0],[0,0]]]]}"#;
        let spec = files::ChannelSpecFile::parse(text).unwrap();
        match spec.to_channel() {
            Err(CliError::Parse(msg)) => {
                assert_eq!(msg, "kraus[0]: expected 2 rows, found 3");
            }
            other => panic!("expected parse failure, got {other:?}"),
        }
    }

    #[test]
    fn spec_parser_reports_normalization() {
        // single Kraus I/√2: residual 1/2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let text = format!(r#"{{"dim": 2, "kraus": [[[[{s},0],[0,0]],[[0,0],[{s},0]]]]}}"#);
        let spec = files::ChannelSpecFile::parse(&text).unwrap();
        match spec.to_channel() {
            Err(CliError::Parse(msg)) => {
                assert!(msg.contains("normalization failure"), "{msg}");
                assert!(msg.contains("5.0000"), "{msg}");
            }
            other => panic!("expected parse failure, got {other:?}"),
        }
    }
}
