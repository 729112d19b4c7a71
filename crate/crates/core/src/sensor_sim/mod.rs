//! Ground-truth scene synthesis and measurement simulation.

mod noise;
mod scene;

pub use noise::{emulate_flim_input, sample_dead_pixels, simulate_pair, NoiseSpec};
pub use scene::{render_scene, LifetimeRegion, SceneContent, SceneSpec, Surface};
