//! Model files, mesh export and statistics reports.

pub mod export;
pub mod model;
pub mod stats;

pub use export::{tessellate_shell, tessellate_tiles, to_obj, to_vtk, Mesh};
pub use model::{parse_model, read_model, serialize_model, write_model, ModelFile};
pub use stats::{StatsReport, StatsRow};
