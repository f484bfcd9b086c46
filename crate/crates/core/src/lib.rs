//! Online bipartite matching under known i.i.d. arrivals, with LP-guided
//! sampling policies aimed at fairness among the offline side.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`] holds the bipartite market model and synthetic generators.
//! * [`lp`] builds and solves the benchmark LPs with lazy subset cuts.
//! * [`policy`] implements the online policies behind one stepping interface.
//! * [`attenuation`] plans the muting factors used by the attenuated sampler.
//! * [`bounds`] evaluates the analytical ratio bounds, adversarial instances
//!   and a brute-force clairvoyant oracle for tiny instances.
//! * [`ingest`] reads trip CSVs, edge lists and the instance JSON format.
//! * [`harness`] runs experiments and sweeps and produces reports.

pub mod attenuation;
pub mod bounds;
pub mod error;
pub mod harness;
pub mod ingest;
pub mod instance;
pub mod lp;
pub mod objective;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
pub use instance::{ArrivalSequence, Instance, InstanceParts};
pub use objective::Objective;
