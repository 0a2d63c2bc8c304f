//! Model checking of probabilistic timed automata against deterministic
//! timed automata with Rabin acceptance.

pub mod bench;
pub mod io;
pub mod mdp;
pub mod model;
pub mod product;
pub mod region;
pub mod semantics;
