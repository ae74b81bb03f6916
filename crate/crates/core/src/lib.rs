//! Structural causal models with serializable structural equations.
//!
//! * [`expr`]: the equation language (parse, print, evaluate).
//! * [`distributions`] and [`rng`]: exogenous noise and seeded streams.
//! * [`scm`]: models, do-interventions and ancestral sampling.
//! * [`graph`] and [`generate`]: random causal graphs and random models.
//! * [`env`]: step/reset interaction with a model.
//! * [`metrics`] and [`usecase`]: structure-recovery evaluation.
//! * [`io`]: canonical JSON and CSV formats.
//!
//! ```
//! use scmkit::{Distribution, Expr, Intervention, RngState, ScmModel};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let mut model = ScmModel::new();
//! model.add_exogenous("U", Distribution::uniform_int(3.0, 8.0)?)?;
//! model.add_endogenous("A", Expr::parse("U + 5")?)?;
//! model.add_endogenous("Effect", Expr::parse("2 * A")?)?;
//!
//! let mut rng = RngState::new(42);
//! let before = model.clone();
//! model.do_interventions(&[Intervention::parse("Effect", "A + 1")?])?;
//! for s in model.sample_n(100, &mut rng)? {
//!     assert_eq!(s.get("Effect").unwrap() - s.get("A").unwrap(), 1.0);
//! }
//! model.undo_interventions();
//! assert_eq!(model, before);
//! # Ok(())
//! # }
//! ```

pub mod distributions;
pub mod env;
pub mod expr;
pub mod generate;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod scm;
pub mod usecase;

pub use distributions::Distribution;
pub use env::{Action, EnvConfig, EnvHooks, ScmEnvironment, StepResult};
pub use expr::Expr;
pub use generate::{FunctionClass, ScmGenConfig};
pub use graph::{CausalGraph, GraphGenConfig};
pub use metrics::{AdjacencyMatrix, StructureMetrics};
pub use rng::RngState;
pub use scm::{Intervention, Sample, ScmError, ScmModel};
