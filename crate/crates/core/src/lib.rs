//! Walsh noise spectroscopy: digital-basis dephasing filters, classical and
//! conditional-spin noise models, and reconstruction of the noise
//! autocorrelation and spectrum from decay exponents.
//!
//! Everything numeric is generic over [`scalar::Real`] (or [`scalar::Field`]
//! for the exact Walsh algebra, which also runs on rationals). The aliases
//! below fix the common `f64` choices.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod decoherence;
pub mod error;
pub mod noise;
pub mod quadrature;
pub mod quantum_bath;
pub mod reconstruction;
pub mod scalar;
pub mod sequences;
pub mod stats;
pub mod uncertainty;
pub mod walsh;

pub use decoherence::{decay_set, ChiMethod, ChiRequest, DecaySet};
pub use error::{Error, Result};
pub use noise::{MixtureModel, NoiseCorrelation, OuModel};
pub use quantum_bath::{NuclearSpin, QcBathModel};
pub use reconstruction::{cpmg_reconstruct, walsh_reconstruct, Autocorr, Spectrum};
pub use scalar::{Field, Real};
pub use sequences::{ModulationSequence, Scheme, SequenceSet};
pub use walsh::{ShufflingMatrix, WalshBasis};

/// Exact rational scalar for the Walsh algebra.
pub type Rational = num_rational::Ratio<i64>;

pub type OuModel64 = OuModel<f64>;
pub type MixtureModel64 = MixtureModel<f64>;
pub type NuclearSpin64 = NuclearSpin<f64>;
pub type QcBathModel64 = QcBathModel<f64>;
pub type DecaySet64 = DecaySet<f64>;
pub type SequenceSet64 = SequenceSet<f64>;
pub type ModulationSequence64 = ModulationSequence<f64>;
pub type Autocorr64 = Autocorr<f64>;
pub type Spectrum64 = Spectrum<f64>;

pub type OuModel32 = OuModel<f32>;
pub type DecaySet32 = DecaySet<f32>;
