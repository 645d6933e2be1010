//! Derivative-free global optimization by change of measure: ensembles of
//! particles are pushed by a gain-weighted innovation so that the innovation
//! becomes a zero-mean martingale, with scrambling and selection for global
//! search. Also ships DE and PSO baselines and a seeded benchmark suite.
//!
//! ```
//! use combeo::{make_instance, run_greedy_scramble, BenchmarkId, OptimizerConfig};
//!
//! let sphere = make_instance(BenchmarkId::B1, 4, 4, 0).unwrap();
//! let config = OptimizerConfig {
//!     population: 20,
//!     max_iter: 1000,
//!     beta_hat: 3.0,
//!     rho: 1e-8,
//!     rho_c: 1e-8,
//!     target_error: 1e-3,
//!     ..Default::default()
//! };
//! let record = run_greedy_scramble(&sphere, &config).unwrap();
//! assert!(record.final_row().mean_error < 1e-2);
//! ```

pub mod baselines;
pub mod benchmarks;
pub mod ensemble;
pub mod error;
pub mod gain;
pub mod innovation;
pub mod optimizers;
pub mod perturbation;
pub mod record;

pub use baselines::{run_de, run_pso, DeConfig, PsoConfig};
pub use benchmarks::{
    default_group_size, eval_basic, eval_composite, gen_rotation, known_optimum, make_instance, make_instance_with, AckleyForm,
    BenchmarkId, BenchmarkInstance, GroupLayout, InstanceDocument, InstanceOptions,
};
pub use ensemble::{
    Bounds, DesignVector, Ensemble, Evaluator, FnObjective, KnownOptimum, Objective, OptimizationSense, RngStream,
    TauGrid,
};
pub use error::{Error, Result};
pub use gain::{DriftForm, GainMatrix, NoiseIntensity};
pub use innovation::{BestMemory, InnovationKind, InnovationMatrix, ResidualMode};
pub use optimizers::{
    run_best_memory, run_elementwise_scramble, run_greedy_scramble, run_split_greedy, ForwardModel, OptimizerConfig,
    SplitProblem,
};
pub use perturbation::{ScrambleMode, SelectionPolicy};
pub use record::{RunRecord, Termination, TraceRow};
