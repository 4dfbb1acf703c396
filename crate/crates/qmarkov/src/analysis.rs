//! Full analysis pipeline: everything the `analyze` command reports about a
//! channel, computed in one pass and reproducible from (channel, seed,
//! tolerances).

use crate::absorption::{
    absorption_iterative, absorption_linear, absorption_stop, algebra_criterion,
    fixed_points_via_absorption, is_absorbing_recurrent, AbsorbingRecurrent, AbsorptionOperator,
    AlgebraCriterion, FixedPointComparison,
};
use crate::channel::QuantumChannel;
use crate::error::Result;
use crate::structure::{
    algebra_closure_check, fixed_point_space, minimal_enclosures, recurrence_decomposition,
    AlgebraCheck, Dome, FixedPointSpace, RecurrenceDecomposition,
};

/// Everything the full pipeline derives from a channel.
#[derive(Debug)]
pub struct ChannelAnalysis {
    pub seed: u64,
    pub decomposition: RecurrenceDecomposition,
    pub fixed_points: FixedPointSpace,
    pub closure: AlgebraCheck,
    pub dome: Dome,
    pub absorbing: AbsorbingRecurrent,
    /// Absorption operator per DOME part, iterative method.
    pub part_absorptions: Vec<AbsorptionOperator>,
    /// Linear-system counterparts where the solvability guard admits them.
    pub part_absorptions_linear: Vec<Option<AbsorptionOperator>>,
    pub criterion: AlgebraCriterion,
    pub span: FixedPointComparison,
}

/// Run the whole pipeline: recurrence decomposition, fixed points, DOME,
/// absorption operators for every minimal part (both methods), the algebra
/// criterion, and the absorption span of the fixed-point space.
pub fn analyze_channel(channel: &QuantumChannel, seed: u64) -> Result<ChannelAnalysis> {
    let decomposition = recurrence_decomposition(channel)?;
    let fixed_points = fixed_point_space(channel)?;
    let closure = algebra_closure_check(&fixed_points, channel.tol());
    let dome = minimal_enclosures(channel, &decomposition, seed)?;
    let absorbing = is_absorbing_recurrent(channel, &decomposition)?;

    let stop = absorption_stop();
    let mut part_absorptions = Vec::new();
    let mut part_absorptions_linear = Vec::new();
    for part in &dome.parts {
        part_absorptions.push(absorption_iterative(channel, part, &decomposition, &stop)?);
        part_absorptions_linear.push(absorption_linear(channel, part, &decomposition).ok());
    }
    let criterion = algebra_criterion(channel, &decomposition, &dome, seed)?;
    let span = fixed_points_via_absorption(channel, &decomposition, &dome, seed)?;

    Ok(ChannelAnalysis {
        seed,
        decomposition,
        fixed_points,
        closure,
        dome,
        absorbing,
        part_absorptions,
        part_absorptions_linear,
        criterion,
        span,
    })
}
