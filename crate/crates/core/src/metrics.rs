//! Cost distances, explosion diagnostics, components, core graphs and the
//! greedy-path constructions on boxing systems.

mod boxing;
mod components;
mod core;
mod saw;
mod search;

pub use self::boxing::{
    build_greedy_path, check_f2, delta_good_scan, good_weight_interval, greedy_cost_bound, greedy_successful,
    successful, GreedyBound, GreedyFailure, GreedyPath,
};
pub use self::components::{components, largest_component, Components};
pub use self::core::{core_graph, core_weight_interval, CoreGraph, CoreParams};
pub use self::saw::{saw_path_count, truncate_by_cost, CostTruncatedGraph, SAW_MAX_STEPS};
pub use self::search::{
    cost_search, cost_search_with, distance, exterior_set, n1t, shortest_path, sigma, truncated_ball, CostSearchResult,
    Exterior, SearchOptions, TruncatedBall,
};
