//! Input file formats: channel specs (JSON), chain files (plain text), and
//! enclosure frame files (JSON).

use num_complex::Complex64;
use qmarkov::channel::QuantumChannel;
use qmarkov::numerics::{CMatrix, Subspace, ToleranceContext};
use serde::{Deserialize, Serialize};

/// Errors split by exit code: parse problems exit 2, analysis preconditions
/// exit 1.
#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Run(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "{m}"),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn run_err(module: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Run(format!("{module}: {e}"))
}

/// On-disk channel description: dimension, Kraus matrices as rows of
/// [re, im] pairs, optional tolerance overrides and label.
#[derive(Debug, Serialize, Deserialize)]
pub struct ChannelSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub dim: usize,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_cut: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq_tol: Option<f64>,
}

impl ChannelSpecFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("channel spec: {e}")))
    }

    pub fn tolerance_context(&self) -> CliResult<ToleranceContext> {
        let defaults = ToleranceContext::default();
        let rank_cut = self
            .tolerances
            .as_ref()
            .and_then(|t| t.rank_cut)
            .unwrap_or(defaults.rank_cut);
        let eq_tol = self
            .tolerances
            .as_ref()
            .and_then(|t| t.eq_tol)
            .unwrap_or(defaults.eq_tol);
        ToleranceContext::new(rank_cut, eq_tol)
            .map_err(|e| CliError::Parse(format!("channel spec tolerances: {e}")))
    }

    /// Validate shapes field by field, then hand the matrices to the channel
    /// validator. Shape problems name the offending field.
    pub fn to_channel(&self) -> CliResult<QuantumChannel> {
        if self.dim == 0 {
            return Err(CliError::Parse("dim: must be positive".into()));
        }
        if self.kraus.is_empty() {
            return Err(CliError::Parse("kraus: list must be nonempty".into()));
        }
        let mut matrices = Vec::with_capacity(self.kraus.len());
        for (i, rows) in self.kraus.iter().enumerate() {
            if rows.len() != self.dim {
                return Err(CliError::Parse(format!(
                    "kraus[{i}]: expected {} rows, found {}",
                    self.dim,
                    rows.len()
                )));
            }
            let mut m = CMatrix::zeros(self.dim, self.dim);
            for (r, row) in rows.iter().enumerate() {
                if row.len() != self.dim {
                    return Err(CliError::Parse(format!(
                        "kraus[{i}][{r}]: expected {} entries, found {}",
                        self.dim,
                        row.len()
                    )));
                }
                for (c, &[re, im]) in row.iter().enumerate() {
                    m[(r, c)] = Complex64::new(re, im);
                }
            }
            matrices.push(m);
        }
        let tol = self.tolerance_context()?;
        QuantumChannel::validate_with_diagnostic(matrices, self.dim, tol).map_err(|diag| {
            CliError::Parse(format!(
                "kraus: normalization failure, ‖ΣB†B − I‖ = {:.9e} exceeds eq_tol {:.1e}",
                diag.residual, tol.eq_tol
            ))
        })
    }

    /// Build a spec document from Kraus matrices (used by `embed`).
    pub fn from_channel(label: Option<String>, channel: &QuantumChannel) -> Self {
        let kraus = channel
            .kraus()
            .iter()
            .map(|b| {
                (0..b.rows())
                    .map(|r| {
                        (0..b.cols())
                            .map(|c| [b[(r, c)].re, b[(r, c)].im])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ChannelSpecFile {
            label,
            dim: channel.dim(),
            kraus,
            tolerances: Some(ToleranceOverrides {
                rank_cut: Some(channel.tol().rank_cut),
                eq_tol: Some(channel.tol().eq_tol),
            }),
        }
    }
}

pub fn load_channel(path: &str) -> CliResult<QuantumChannel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {path}: {e}")))?;
    ChannelSpecFile::parse(&text)?.to_channel()
}

/// Chain file: first line n, then n whitespace-separated rows of n
/// probabilities.
pub fn load_chain(
    path: &str,
    tol: ToleranceContext,
) -> CliResult<qmarkov::absorption::ClassicalChain> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {path}: {e}")))?;
    parse_chain(&text, tol)
}

pub fn parse_chain(
    text: &str,
    tol: ToleranceContext,
) -> CliResult<qmarkov::absorption::ClassicalChain> {
    let mut tokens = text.split_whitespace();
    let n: usize = tokens
        .next()
        .ok_or_else(|| CliError::Parse("chain file: empty file".into()))?
        .parse()
        .map_err(|e| CliError::Parse(format!("chain file: bad state count: {e}")))?;
    let mut p = Vec::with_capacity(n * n);
    for (idx, tok) in tokens.by_ref().take(n * n).enumerate() {
        let x: f64 = tok.parse().map_err(|e| {
            CliError::Parse(format!(
                "chain file: row {}, entry {}: {e}",
                idx / n,
                idx % n
            ))
        })?;
        p.push(x);
    }
    if p.len() != n * n {
        return Err(CliError::Parse(format!(
            "chain file: expected {} probabilities, found {}",
            n * n,
            p.len()
        )));
    }
    if tokens.next().is_some() {
        return Err(CliError::Parse("chain file: trailing tokens".into()));
    }
    qmarkov::absorption::ClassicalChain::new(n, p, tol)
        .map_err(|e| CliError::Parse(format!("chain file: {e}")))
}

/// Enclosure frame file: ambient dimension plus orthonormal columns of
/// [re, im] pairs.
#[derive(Debug, Serialize, Deserialize)]
pub struct FrameFile {
    pub ambient: usize,
    pub columns: Vec<Vec<[f64; 2]>>,
}

pub fn load_frame(path: &str, tol: &ToleranceContext) -> CliResult<Subspace> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {path}: {e}")))?;
    let raw: FrameFile =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("frame file: {e}")))?;
    let mut frame = CMatrix::zeros(raw.ambient, raw.columns.len());
    for (j, col) in raw.columns.iter().enumerate() {
        if col.len() != raw.ambient {
            return Err(CliError::Parse(format!(
                "frame file: columns[{j}]: expected {} entries, found {}",
                raw.ambient,
                col.len()
            )));
        }
        for (i, &[re, im]) in col.iter().enumerate() {
            frame[(i, j)] = Complex64::new(re, im);
        }
    }
    Subspace::from_orthonormal_frame(frame, tol)
        .map_err(|e| CliError::Parse(format!("frame file: {e}")))
}
