//! Per-element salience export for external visualization.

use std::io::{self, Write};

use iso3d_nn::ModelInput;

use crate::critical::{CriticalElement, CriticalSet};

/// One comma-separated record per input element: index, coordinates (point
/// position, or integer voxel coordinates), saliency, membership flag.
/// `scores` must cover every element, as produced by `saliency_scores`.
pub fn write_salience_csv<W: Write>(
    mut w: W,
    input: &ModelInput,
    scores: &[CriticalElement],
    cs: &CriticalSet,
) -> io::Result<()> {
    writeln!(w, "index,x,y,z,saliency,is_member")?;
    for e in scores {
        match input {
            ModelInput::Points(cloud) => {
                let [x, y, z] = cloud.points()[e.index];
                writeln!(w, "{},{},{},{},{},{}", e.index, x, y, z, e.saliency, cs.contains(e.index))?;
            }
            ModelInput::Voxels(grid) => {
                let (x, y, z) = grid.coords(e.index);
                writeln!(w, "{},{},{},{},{},{}", e.index, x, y, z, e.saliency, cs.contains(e.index))?;
            }
        }
    }
    Ok(())
}
