use crate::model::{FactorGraph, MappingMask, ModelError};

/// Masks produced by [`make_dcma_masks`] with the resulting occupancy summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DcmaMasks {
    pub masks: Vec<MappingMask>,
    /// Resources per user, N′.
    pub per_user: usize,
    /// Users per resource.
    pub row_weights: Vec<usize>,
    /// `Some(d_f)` when every resource carries the same number of users.
    pub overlap: Option<usize>,
}

/// Widens each user's support in `graph` to `round(density·K)` resources.
///
/// Extra resources are taken cyclically after the user's last resource, so
/// the SCMA support is kept and `N′ = N` returns the SCMA masks unchanged.
pub fn make_dcma_masks(graph: &FactorGraph, density: f64) -> Result<DcmaMasks, ModelError> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(ModelError::Config(format!("mask density {density} outside (0, 1]")));
    }
    let k = graph.resources();
    let target = ((density * k as f64).round() as usize).clamp(0, k);
    if target == 0 {
        return Err(ModelError::Config(format!("density {density} leaves users with no resource")));
    }
    let mut supports = Vec::with_capacity(graph.users());
    for j in 0..graph.users() {
        let mut support = graph.resources_of(j);
        if support.len() > target {
            return Err(ModelError::Config(format!(
                "user {j} already occupies {} resources, more than the requested {target}",
                support.len()
            )));
        }
        let mut next = support.last().map_or(j % k, |&r| (r + 1) % k);
        while support.len() < target {
            if !support.contains(&next) {
                support.push(next);
            }
            next = (next + 1) % k;
        }
        support.sort_unstable();
        supports.push(support);
    }
    let dense = FactorGraph::from_supports(k, &supports)?;
    let masks = supports
        .iter()
        .map(|s| MappingMask::from_resources(k, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DcmaMasks {
        masks,
        per_user: target,
        row_weights: dense.row_weights(),
        overlap: dense.regular_overlap(),
    })
}
