//! CAT(k) comparison geometry for k < 0: the model plane, geodesic spaces
//! to test, and the sampling harness.

mod harness;
mod model;
mod space;
mod tree;

pub use harness::{
    cat_test, counterexample_search, CatReport, GeodesicTriangle, SideSample, Verdict, Witness, DEFAULT_CAT_TOL,
    DEFAULT_SAMPLES_PER_SIDE,
};
pub use model::{comparison_distance, comparison_triangle, model_distance, model_geodesic_point, ModelPoint};
pub use space::{
    lp_space, GeodesicSpace, LpSpace, NumericWarpedSpace, SpaceDescriptor, WarpedHyperbolicSpace, DEFAULT_SAMPLE_BOX,
};
pub use tree::{tree_metric, Adjacency, TreePoint, TreeSpace};
