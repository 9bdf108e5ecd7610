//! Numerical toolkit for weak approachability.
//!
//! The crate computes values of the averaging differential game attached to a
//! vector-payoff repeated game, turns value grids into delayed piecewise-constant
//! strategies and then into repeated-game strategies, simulates the repeated
//! game, and carries the same pipeline over to games whose outcomes are
//! probability measures compared with the quadratic Wasserstein distance
//! (the partial monitoring reduction).
//!
//! Module map:
//!
//! * [`game`]: bilinear vector payoffs and target sets.
//! * [`lp`]: dense simplex solver and matrix-game values.
//! * [`hjb`]: semi-Lagrangian backward scheme for the value function.
//! * [`synth`]: feedback actions, delayed strategies and their repeated-game form.
//! * [`sim`]: n-stage repeated-game simulation and horizon scans.
//! * [`transport`]: exact discrete optimal transport and Kantorovich potentials.
//! * [`pm`]: signal fibers and the measure polytope of compatible informations.
//! * [`wgame`]: the lifted game on measures, its Hamiltonian and a greedy strategy.

pub mod error;
pub mod game;
pub(crate) mod linalg;
pub mod lp;
pub mod par;
pub mod simplex_grid;
pub mod hjb;
pub mod synth;
pub mod sim;
pub mod transport;
pub mod pm;
pub mod wgame;

pub use error::{Error, Result};
pub use game::{MixedAction, Polytope, TargetSet, VectorGame};
pub use hjb::{Order, SchemeConfig, ValueGrid, Verdict};
pub use lp::{matrix_game_value, solve_lp, GameSolution, LpOutcome, LpProblem};
pub use transport::{DiscreteMeasure, TransportResult};
