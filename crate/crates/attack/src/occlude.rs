//! Mask bookkeeping over an input's removable elements.

use iso3d_nn::ModelInput;

/// The original input plus an aliveness mask over its elements. Rebuilds a
/// concrete `ModelInput` on demand; ids are stable (original point index or
/// flat voxel index) no matter how many elements are gone.
#[derive(Debug, Clone)]
pub(crate) struct Occluded {
    original: ModelInput,
    /// Element ids of the original input, ascending.
    universe: Vec<usize>,
    alive: Vec<bool>,
    alive_count: usize,
}

impl Occluded {
    pub fn new(original: ModelInput) -> Self {
        let universe = original.element_ids();
        let n = universe.len();
        Occluded { original, universe, alive: vec![true; n], alive_count: n }
    }

    pub fn universe_len(&self) -> usize {
        self.universe.len()
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    /// Position in the universe of an element id as reported against the
    /// *current* input: clouds renumber their points after removals, grids
    /// do not.
    pub fn universe_pos_of_current(&self, current_id: usize) -> usize {
        match &self.original {
            ModelInput::Points(_) => {
                // current row k is the k-th alive universe position
                self.alive
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a)
                    .nth(current_id)
                    .expect("current id within alive count")
                    .0
            }
            ModelInput::Voxels(_) => self
                .universe
                .binary_search(&current_id)
                .expect("flat id belongs to the original grid"),
        }
    }

    pub fn id_at(&self, universe_pos: usize) -> usize {
        self.universe[universe_pos]
    }

    pub fn is_alive(&self, universe_pos: usize) -> bool {
        self.alive[universe_pos]
    }

    pub fn remove(&mut self, universe_pos: usize) {
        assert!(self.alive[universe_pos], "double removal");
        self.alive[universe_pos] = false;
        self.alive_count -= 1;
    }

    pub fn restore(&mut self, universe_pos: usize) {
        assert!(!self.alive[universe_pos], "restoring an alive element");
        self.alive[universe_pos] = true;
        self.alive_count += 1;
    }

    pub fn restore_all(&mut self) {
        self.alive.fill(true);
        self.alive_count = self.alive.len();
    }

    /// Ids of removed elements, ascending.
    pub fn removed_ids(&self) -> Vec<usize> {
        self.universe
            .iter()
            .zip(&self.alive)
            .filter(|(_, &a)| !a)
            .map(|(&id, _)| id)
            .collect()
    }

    /// The input with the current mask applied.
    pub fn current(&self) -> ModelInput {
        self.build(None)
    }

    /// The current input with one more element hidden; the mask itself is
    /// untouched, so rejected candidates cost nothing to undo.
    pub fn current_without(&self, universe_pos: usize) -> ModelInput {
        debug_assert!(self.alive[universe_pos]);
        self.build(Some(universe_pos))
    }

    fn build(&self, hide: Option<usize>) -> ModelInput {
        match &self.original {
            ModelInput::Points(cloud) => {
                let mut mask = self.alive.clone();
                if let Some(pos) = hide {
                    mask[pos] = false;
                }
                ModelInput::Points(cloud.filter(&mask))
            }
            ModelInput::Voxels(grid) => {
                let mut g = grid.clone();
                for (pos, alive) in self.alive.iter().enumerate() {
                    if !alive || hide == Some(pos) {
                        g = g.cleared(self.universe[pos]);
                    }
                }
                ModelInput::Voxels(g)
            }
        }
    }
}
