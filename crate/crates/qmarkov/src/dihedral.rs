//! Truncated model of the symmetric walk on the infinite dihedral group.
//!
//! The group generated by a, b with a² = b² = e has its reduced words in
//! bijection with the integers: …aba ↦ −3, ba ↦ −2, a ↦ −1, e ↦ 0, b ↦ 1,
//! ab ↦ 2, bab ↦ 3… Left translations act as the pair swaps
//! λ(a): 2k−1 ↔ 2k and λ(b): 2k ↔ 2k+1, so the channel
//! Φ(x) = ½λ(a)xλ(a) + ½λ(b)xλ(b) restricts on diagonals to the symmetric
//! random walk on ℤ. Right translation by (ab)⁻¹ shifts every label by −2,
//! which splits the basis into two orbits (even and odd labels) on which
//! ρ(ab) is the right shift.
//!
//! The truncation keeps reduced words of length ≤ N (labels in [−N, N]) with
//! an absorbing boundary: moves leaving the window are dropped and the lost
//! trace is tracked. For fewer than N steps nothing reaches the boundary, so
//! all reported quantities in that window are exact.

use crate::channel::QuantumChannel;
use crate::error::{Error, Result};
use crate::numerics::{tridiagonal_eigenvalues, CMatrix, ToleranceContext, ONE};
use num_complex::Complex64;

/// Reduced words of length ≤ N relabeled as integers in [−N, N].
#[derive(Debug, Clone, Copy)]
pub struct TruncatedBasis {
    radius: usize,
}

impl TruncatedBasis {
    pub fn new(radius: usize) -> Result<Self> {
        if radius < 2 {
            return Err(Error::Precondition(
                "truncation radius must be at least 2".into(),
            ));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// M = 2N + 1.
    pub fn size(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn index(&self, label: i64) -> Option<usize> {
        let n = self.radius as i64;
        if label < -n || label > n {
            None
        } else {
            Some((label + n) as usize)
        }
    }

    pub fn label(&self, index: usize) -> i64 {
        index as i64 - self.radius as i64
    }

    /// The reduced word a label stands for.
    pub fn word(label: i64) -> String {
        if label == 0 {
            return "e".to_string();
        }
        let len = label.unsigned_abs() as usize;
        let mut w = String::with_capacity(len);
        // positive words end in b, negative in a; letters alternate
        let last = if label > 0 { 'b' } else { 'a' };
        for k in 0..len {
            let c = if (len - 1 - k) % 2 == 0 {
                last
            } else {
                flip(last)
            };
            w.push(c);
        }
        w
    }

    /// Indices of the two ρ(ab)-orbits, each ordered so that ρ(ab) moves a
    /// basis vector one step forward (label ℓ ↦ ℓ − 2): even labels first,
    /// then odd labels.
    pub fn orbits(&self) -> [Vec<usize>; 2] {
        let n = self.radius as i64;
        let mut even = Vec::new();
        let mut label = if n % 2 == 0 { n } else { n - 1 };
        while label >= -n {
            even.push(self.index(label).unwrap());
            label -= 2;
        }
        let mut odd = Vec::new();
        let mut label = if n % 2 == 0 { n - 1 } else { n };
        while label >= -n {
            odd.push(self.index(label).unwrap());
            label -= 2;
        }
        [even, odd]
    }
}

fn flip(c: char) -> char {
    if c == 'a' {
        'b'
    } else {
        'a'
    }
}

/// A partial permutation of the basis (absorbing boundary: images outside
/// the window are dropped).
#[derive(Debug, Clone)]
pub struct PartialPermutation {
    map: Vec<Option<usize>>,
}

impl PartialPermutation {
    fn from_label_map(basis: &TruncatedBasis, f: impl Fn(i64) -> i64) -> Self {
        let map = (0..basis.size())
            .map(|idx| basis.index(f(basis.label(idx))))
            .collect();
        Self { map }
    }

    pub fn image(&self, index: usize) -> Option<usize> {
        self.map[index]
    }

    /// Dense matrix with a 1 at (image, source) for every defined image.
    pub fn matrix(&self) -> CMatrix {
        let m = self.map.len();
        let mut out = CMatrix::zeros(m, m);
        for (src, img) in self.map.iter().enumerate() {
            if let Some(dst) = img {
                out[(*dst, src)] = ONE;
            }
        }
        out
    }
}

/// The truncated left and right translation operators.
#[derive(Debug, Clone)]
pub struct WalkOperators {
    basis: TruncatedBasis,
    pub lam_a: PartialPermutation,
    pub lam_b: PartialPermutation,
    pub rho_ab: PartialPermutation,
    pub rho_ba: PartialPermutation,
}

impl WalkOperators {
    pub fn new(basis: TruncatedBasis) -> Self {
        let lam_a =
            PartialPermutation::from_label_map(&basis, |l| if l % 2 == 0 { l - 1 } else { l + 1 });
        let lam_b =
            PartialPermutation::from_label_map(&basis, |l| if l % 2 == 0 { l + 1 } else { l - 1 });
        let rho_ab = PartialPermutation::from_label_map(&basis, |l| l - 2);
        let rho_ba = PartialPermutation::from_label_map(&basis, |l| l + 2);
        Self {
            basis,
            lam_a,
            lam_b,
            rho_ab,
            rho_ba,
        }
    }

    pub fn basis(&self) -> &TruncatedBasis {
        &self.basis
    }

    /// The truncated walk channel with Kraus {λ(a)/√2, λ(b)/√2}. Trace
    /// non-increasing because of the absorbing boundary.
    pub fn channel(&self, tol: ToleranceContext) -> Result<QuantumChannel> {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let kraus = vec![self.lam_a.matrix().scale(s), self.lam_b.matrix().scale(s)];
        QuantumChannel::new_subnormalized(kraus, self.basis.size(), tol)
    }
}

/// Basis, operators, and channel for truncation radius N.
pub fn build_walk(
    n: usize,
    tol: ToleranceContext,
) -> Result<(TruncatedBasis, WalkOperators, QuantumChannel)> {
    let basis = TruncatedBasis::new(n)?;
    let ops = WalkOperators::new(basis);
    let channel = ops.channel(tol)?;
    Ok((basis, ops, channel))
}

/// Growth data extracted from the potential partial sums.
#[derive(Debug, Clone, Copy)]
pub struct GrowthDiagnostic {
    /// S_{4m} / S_{2m} at m = n_max/4; approaches √2 when S_n ~ c√n.
    pub ratio_4m_over_2m: Option<f64>,
    /// Least-squares coefficient of S_n ≈ c·√n over the tail n ≥ n_max/2.
    pub sqrt_fit_coefficient: f64,
}

/// Exact partial sums S_n = Σ_{k<n} tr(Φ_*ᵏ(ρ₀) x) of a form potential,
/// together with the per-step trace leak and a growth diagnostic. Terms stay
/// exact as long as n ≤ n_max < N: the walk front moves one site per step,
/// so nothing reaches the absorbing boundary inside the window.
#[derive(Debug, Clone)]
pub struct PotentialSeries {
    /// partial_sums[n-1] = S_n for n = 1..=n_max.
    pub partial_sums: Vec<f64>,
    /// terms[k] = tr(Φ_*ᵏ(ρ₀) x).
    pub terms: Vec<f64>,
    /// Trace lost to the boundary after each step (all zero in the window).
    pub leaks: Vec<f64>,
    pub growth: GrowthDiagnostic,
}

/// Compute the form-potential partial sums for a positive diagonal
/// observable x and a start vector v (ρ₀ = |v⟩⟨v|).
///
/// Requires n_max < N so the truncation cannot corrupt the sums. The
/// diagonal of the evolving state obeys the classical symmetric walk, so the
/// evolution runs on the M diagonal entries only.
pub fn potential_series(
    n: usize,
    x: &CMatrix,
    start: &[Complex64],
    n_max: usize,
    tol: &ToleranceContext,
) -> Result<PotentialSeries> {
    let basis = TruncatedBasis::new(n)?;
    let m = basis.size();
    if n_max >= n {
        return Err(Error::Precondition(format!(
            "n_max = {n_max} must stay below the truncation radius {n}"
        )));
    }
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be positive".into()));
    }
    if x.rows() != m || x.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "observable is {}x{}, window size is {m}",
            x.rows(),
            x.cols()
        )));
    }
    if start.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "start vector length {} vs window size {m}",
            start.len()
        )));
    }
    if !x.is_diagonal(tol.eq_tol) {
        return Err(Error::Precondition(
            "only diagonal observables are supported (the diagonal algebra carries the walk)"
                .into(),
        ));
    }
    let x_diag = x.diagonal_re();
    if x_diag.iter().any(|&d| d < -tol.eq_tol) {
        return Err(Error::NotPositive {
            min_eig: x_diag.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }

    let norm: f64 = start.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > tol.eq_tol {
        return Err(Error::Precondition(format!(
            "start vector norm² = {norm}, expected 1"
        )));
    }

    let ops = WalkOperators::new(basis);
    // diagonal of |v><v|
    let mut p: Vec<f64> = start.iter().map(|z| z.norm_sqr()).collect();
    let mut terms = Vec::with_capacity(n_max);
    let mut partial_sums = Vec::with_capacity(n_max);
    let mut leaks = Vec::with_capacity(n_max);
    let mut acc = 0.0;
    for k in 0..n_max {
        let term: f64 = p.iter().zip(&x_diag).map(|(pi, xi)| pi * xi).sum();
        terms.push(term);
        acc += term;
        partial_sums.push(acc);
        if k + 1 < n_max {
            let (next, leak) = classical_step(&ops, &p);
            p = next;
            leaks.push(leak);
        }
    }

    let growth = growth_diagnostic(&partial_sums);
    Ok(PotentialSeries {
        partial_sums,
        terms,
        leaks,
        growth,
    })
}

/// One predual step of the diagonal: each site splits its mass between its
/// λ(a) and λ(b) partners; mass sent outside the window is the leak.
fn classical_step(ops: &WalkOperators, p: &[f64]) -> (Vec<f64>, f64) {
    let m = p.len();
    let mut next = vec![0.0; m];
    let mut leak = 0.0;
    for (src, &mass) in p.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for perm in [&ops.lam_a, &ops.lam_b] {
            match perm.image(src) {
                Some(dst) => next[dst] += 0.5 * mass,
                None => leak += 0.5 * mass,
            }
        }
    }
    (next, leak)
}

fn growth_diagnostic(partial_sums: &[f64]) -> GrowthDiagnostic {
    let n_max = partial_sums.len();
    let m = n_max / 4;
    let ratio_4m_over_2m = if m >= 1 {
        let s2m = partial_sums[2 * m - 1];
        let s4m = partial_sums[4 * m - 1];
        if s2m > 0.0 {
            Some(s4m / s2m)
        } else {
            None
        }
    } else {
        None
    };
    // least squares for S_n ≈ c √n over the tail
    let from = (n_max / 2).max(1);
    let mut num = 0.0;
    let mut den = 0.0;
    for n in from..=n_max {
        let root = (n as f64).sqrt();
        num += partial_sums[n - 1] * root;
        den += n as f64;
    }
    GrowthDiagnostic {
        ratio_4m_over_2m,
        sqrt_fit_coefficient: if den > 0.0 { num / den } else { 0.0 },
    }
}

/// Cesàro averages of the return weight tr(Φ_*ᵏ(ρ₀) p_e): the sequence
/// (1/n) Σ_{k<n} pᵏ₀₀ for n = 1..=n_max. Its decay is the truncation
/// diagnostic standing in for the absence of an invariant state.
pub fn center_mass_cesaro(n: usize, n_max: usize, tol: &ToleranceContext) -> Result<Vec<f64>> {
    let basis = TruncatedBasis::new(n)?;
    let m = basis.size();
    let center = basis.index(0).unwrap();
    let mut x = CMatrix::zeros(m, m);
    x[(center, center)] = ONE;
    let mut start = vec![Complex64::new(0.0, 0.0); m];
    start[center] = ONE;
    let series = potential_series(n, &x, &start, n_max, tol)?;
    Ok(series
        .partial_sums
        .iter()
        .enumerate()
        .map(|(i, s)| s / (i as f64 + 1.0))
        .collect())
}

/// Result of checking that ρ(ab) is the right shift on each relabeled orbit.
#[derive(Debug, Clone)]
pub struct ShiftEquivalence {
    /// Basis indices of the two orbits, in shift order.
    pub orbits: [Vec<usize>; 2],
    /// Number of interior positions checked.
    pub interior_checked: usize,
    /// Exact mismatch count as a residual (0.0 when the permutation agrees).
    pub residual: f64,
}

/// Verify that relabeling the basis into the two ρ(ab)-orbits conjugates
/// ρ(ab) into the right shift on each copy: ρ(ab) must map orbit position j
/// to position j + 1 for every interior index. Pure permutation comparison,
/// so the residual is exactly zero on success.
pub fn shift_equivalence_check(n: usize) -> Result<ShiftEquivalence> {
    let basis = TruncatedBasis::new(n)?;
    let ops = WalkOperators::new(basis);
    let orbits = basis.orbits();
    let mut interior_checked = 0usize;
    let mut mismatches = 0usize;
    for orbit in &orbits {
        for w in orbit.windows(2) {
            interior_checked += 1;
            if ops.rho_ab.image(w[0]) != Some(w[1]) {
                mismatches += 1;
            }
        }
        // boundary: the last orbit element must be absorbed, not wrapped
        if let Some(&last) = orbit.last() {
            if ops.rho_ab.image(last).is_some() {
                mismatches += 1;
            }
        }
    }
    Ok(ShiftEquivalence {
        orbits,
        interior_checked,
        residual: mismatches as f64,
    })
}

/// Spectral partition of one orbit copy into dyadic cells.
#[derive(Debug, Clone)]
pub struct CopyPartition {
    pub size: usize,
    /// Ascending eigenvalues of the truncated (ρ(ab)+ρ(ba))/2 on this copy.
    pub eigenvalues: Vec<f64>,
    /// Cell index of each eigenvalue at the requested level.
    pub assignment: Vec<usize>,
    /// rank(q_{j,n}) for j = 0..2^{n+1}−1 at the requested level.
    pub ranks: Vec<usize>,
}

impl CopyPartition {
    /// Materialize the spectral projection q_{j,n} for cell j on this copy.
    /// Dense eigendecomposition of the tridiagonal copy operator; meant for
    /// small copies.
    pub fn projector(&self, j: usize) -> Result<CMatrix> {
        let m = self.size;
        let dense = CMatrix::from_fn(m, m, |r, c| {
            if r.abs_diff(c) == 1 {
                Complex64::new(0.5, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let eig = crate::numerics::eig_hermitian(&dense)?;
        let mut q = CMatrix::zeros(m, m);
        for (k, &cell) in self.assignment.iter().enumerate() {
            if cell != j {
                continue;
            }
            let v = eig.eigenvectors.column(k);
            for r in 0..m {
                for c in 0..m {
                    q[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        Ok(q)
    }
}

/// Ratio data for the atomlessness indicator.
#[derive(Debug, Clone, Copy)]
pub struct LevelRatio {
    pub level: usize,
    /// max over cells of rank(q_{j,n}) / rank(q_{⌊j/2⌋,n−1}).
    pub max_child_parent_ratio: f64,
}

/// Dyadic spectral partitions of the two orbit copies at a given level, with
/// the exactly verified completeness/orthogonality/refinement properties and
/// the rank-ratio report across levels.
#[derive(Debug, Clone)]
pub struct PartitionProjections {
    pub level: usize,
    pub tie_tol: f64,
    pub copies: Vec<CopyPartition>,
    pub atomlessness: Vec<LevelRatio>,
}

/// Assign an eigenvalue to its half-open dyadic cell
/// [−1 + j·2⁻ⁿ, −1 + (j+1)·2⁻ⁿ) at level n, the last cell closed at 1.
/// Values within tie_tol of a boundary go to the right cell, which keeps the
/// assignment consistent across levels (boundaries nest).
fn dyadic_cell(lambda: f64, level: usize, tie_tol: f64) -> usize {
    let cells = 1usize << (level + 1);
    let scaled = (lambda + 1.0) * (cells as f64) / 2.0;
    let mut j = scaled.floor() as i64;
    if j < 0 {
        j = 0;
    }
    let width = 2.0 / cells as f64;
    let right_boundary = -1.0 + (j as f64 + 1.0) * width;
    if right_boundary - lambda <= tie_tol {
        j += 1;
    }
    (j.max(0) as usize).min(cells - 1)
}

/// Build the partition projections for truncation radius N at the given
/// level. Eigenvalues come from the symmetric tridiagonal copy operators;
/// properties 1–3 (completeness, orthogonality, refinement) are verified
/// exactly on the index assignments.
pub fn partition_projections(n: usize, level: usize, tie_tol: f64) -> Result<PartitionProjections> {
    let basis = TruncatedBasis::new(n)?;
    let orbits = basis.orbits();
    let min_copy = orbits.iter().map(|o| o.len()).min().unwrap_or(0);
    if (1usize << (level + 1)) > min_copy {
        return Err(Error::Precondition(format!(
            "level {level} needs {} cells but the smallest copy has {min_copy} eigenvalues",
            1usize << (level + 1)
        )));
    }

    let mut copies = Vec::new();
    let mut per_level_ratios = vec![0.0_f64; level + 1];
    for orbit in &orbits {
        let m = orbit.len();
        let diag = vec![0.0; m];
        let off = vec![0.5; m - 1];
        let eigenvalues = tridiagonal_eigenvalues(&diag, &off)?;

        // assignments per level, checked for exact refinement
        let mut assignments: Vec<Vec<usize>> = Vec::with_capacity(level + 1);
        for lv in 0..=level {
            let assign: Vec<usize> = eigenvalues
                .iter()
                .map(|&l| dyadic_cell(l, lv, tie_tol))
                .collect();
            if lv > 0 {
                let parent = &assignments[lv - 1];
                for (k, &cell) in assign.iter().enumerate() {
                    if cell / 2 != parent[k] {
                        return Err(Error::Precondition(format!(
                            "refinement violated at level {lv}, eigenvalue {k}"
                        )));
                    }
                }
            }
            assignments.push(assign);
        }

        // ranks per level; completeness is Σ ranks = M by construction and
        // checked anyway
        let mut ranks_per_level: Vec<Vec<usize>> = Vec::with_capacity(level + 1);
        for (lv, assign) in assignments.iter().enumerate() {
            let cells = 1usize << (lv + 1);
            let mut ranks = vec![0usize; cells];
            for &cell in assign {
                ranks[cell] += 1;
            }
            if ranks.iter().sum::<usize>() != m {
                return Err(Error::Precondition("completeness violated".into()));
            }
            ranks_per_level.push(ranks);
        }
        for lv in 1..=level {
            let parents = &ranks_per_level[lv - 1];
            let children = &ranks_per_level[lv];
            for (j, &rank) in children.iter().enumerate() {
                let parent_rank = parents[j / 2];
                if rank > 0 && parent_rank > 0 {
                    let ratio = rank as f64 / parent_rank as f64;
                    if ratio > per_level_ratios[lv] {
                        per_level_ratios[lv] = ratio;
                    }
                }
            }
        }

        copies.push(CopyPartition {
            size: m,
            eigenvalues,
            assignment: assignments[level].clone(),
            ranks: ranks_per_level[level].clone(),
        });
    }

    let atomlessness = (1..=level)
        .map(|lv| LevelRatio {
            level: lv,
            max_child_parent_ratio: per_level_ratios[lv],
        })
        .collect();
    Ok(PartitionProjections {
        level,
        tie_tol,
        copies,
        atomlessness,
    })
}
