//! Sequences directed by arbitrary directing sequences.
//!
//! Given a directing sequence `T = t_1 t_2 ...`, the directed sequence
//! `O_T = x_1 x_2 ...` is the unique word whose i-th block has length `x_i`
//! and is filled with `t_i`. For `T = (12)^ω` this is the Kolakoski word
//! `122112122122112...`.
//!
//! * [`directed`] builds `O_T` for finite words and streams it for infinite
//!   sources, and provides the run-length operator.
//! * [`sources`] generates directing sequences: periodic, alternating,
//!   i.i.d., Markov and the self-referential construction.
//! * [`exact`] holds closed-form letter probabilities and the brute-force
//!   enumeration oracles that validate them.
//! * [`stats`] estimates letter densities along one realization or by
//!   seeded Monte Carlo.
//!
//! Positions are 0-indexed internally and 1-indexed in every user-facing
//! output.
//!
//! ```
//! use randkol::{p_xn_closed, p_xn_enum, parse_spec, stream_new, Alphabet, Letter, Probability, Seed, Word};
//!
//! let spec = parse_spec("classic:1,2")?;
//! let prefix: Word = stream_new(&spec, Seed(0)).take(15).collect();
//! assert_eq!(prefix.to_string(), "122112122122112");
//!
//! let p = Probability::new(0.3)?;
//! let closed = p_xn_closed(p, 10, Alphabet::ONE_TWO)?;
//! let oracle = p_xn_enum(p, 10, Alphabet::ONE_TWO, Letter::ONE)?;
//! assert!((closed.get() - oracle.get()).abs() < 1e-12);
//! # Ok::<(), randkol::Error>(())
//! ```

pub mod directed;
pub mod error;
pub mod exact;
pub mod fifo;
pub mod sources;
pub mod stats;
pub mod sum;
pub mod verify;
pub mod word;

pub use directed::{
    delta, direct_finite, rle, DirectedStream, LetterSource, Run, RunEncoding, WordSource,
};
pub use error::{Error, ErrorKind, Result};
pub use exact::{
    center, conditional_by_snk, corr_closed, corr_enum, joint_enum, joint_table, markov_two_step,
    markov_xn_enum, p_xn_closed, p_xn_enum, snk_index, snk_listing, snk_partition, CenteredLetter,
    Probability, SnkTable,
};
pub use sources::{parse_spec, selfref_build, Seed, SelfRefState, SourceSpec, SourceState};
pub use stats::{
    default_checkpoints, density_counts, density_trace, mc_density, mc_pointwise, merge,
    selfref_densities, selfref_density_trace, selfref_trace, Checkpoint, DensityTrace, MCResult,
    SelfRefCounts, SelfRefDensities,
};
pub use word::{Alphabet, Letter, Word};

/// Streams `O_T` for a parsed source descriptor.
pub fn stream_new(spec: &SourceSpec, seed: Seed) -> DirectedStream<SourceState> {
    DirectedStream::new(spec.start(seed))
}
