//! Model files, the Black Hole generator, and the benchmark runner.

pub mod black_hole;
pub mod model_file;
pub mod runner;

pub use black_hole::{
    adjacency_selection, build_black_hole_csp, generate_black_hole, generate_variant,
    is_valid_play, BlackHoleInstance, Deal, InstanceError, Lcg64,
};
pub use model_file::{load_model, model_to_string, parse_model, save_model, ModelError};
pub use runner::{
    format_summary, run_benchmark, run_benchmark_to_path, run_cell, summarize, BenchError,
    BenchInstance, BenchOptions, BenchRow, CellResult, ModeSummary, CSV_HEADER,
};
