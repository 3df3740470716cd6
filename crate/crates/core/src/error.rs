//! Crate-wide error type.
//!
//! Every fallible operation in the crate returns [`Result`]. The variants
//! distinguish between caller errors (bad parameters, objects outside the
//! supported range), structural failures detected by the algorithms
//! (degenerate forms, hypothesis violations), and the one genuinely dynamic
//! condition of exact local-field arithmetic: running out of tracked digits
//! before a comparison can be decided.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The residue characteristic 2 is excluded by the tameness assumptions.
    #[error("residue characteristic must be odd, got {0}")]
    EvenResidueChar(u64),

    /// A constructor was handed a parameter outside its supported range.
    #[error("bad parameter: {0}")]
    BadParameter(String),

    /// Requested working precision is too small to be usable.
    #[error("precision must be at least {min} digits, got {got}")]
    BadPrecision { min: i64, got: i64 },

    /// A requested extension is wildly ramified (ramification index divisible
    /// by the residue characteristic).
    #[error("ramification index {e} is divisible by the residue characteristic {p}")]
    WildRamification { e: u64, p: u64 },

    /// A root required by a construction does not exist in the field.
    #[error("no root available: {0}")]
    NoSuchRoots(String),

    /// An exact comparison could not be decided with the digits remaining.
    #[error("precision exhausted: comparison needs more than {remaining} tracked digits")]
    PrecisionExhausted { remaining: i64 },

    /// A quaternion-algebra constructor was handed parameters that do not
    /// describe a quaternion division algebra.
    #[error("not a quaternion algebra: {0}")]
    NotQuaternion(String),

    /// A pairing or form was degenerate where nondegeneracy is required.
    #[error("degenerate form: {0}")]
    Degenerate(String),

    /// A matrix that must be invertible is singular.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// Membership test failed where containment is required.
    #[error("element not contained in lattice: {0}")]
    NotContained(String),

    /// A lattice function expected to be self-dual fails the duality check.
    #[error("lattice function is not self-dual: {0}")]
    NotSelfDual(String),

    /// The hyperbolic-splitting routine could not split off a plane it
    /// believes must exist; indicates an internal bug, not bad input.
    #[error("failed to split a hyperbolic plane compatibly with the chains: {0}")]
    SplitFailure(String),

    /// Witt indices or anisotropic kernels of two forms do not match.
    #[error("forms have incompatible invariants: {0}")]
    IncompatibleSignature(String),

    /// A requested self-dual profile is unrealizable (duality forces the
    /// jump pattern to be symmetric).
    #[error("requested profile is not symmetric under duality: {0}")]
    AsymmetricProfile(String),

    /// No equivariant functional exists for the requested descent data.
    #[error("no equivariant functional for the requested automorphism: {0}")]
    NoEquivariantLambda(String),

    /// The solve step for a descended pairing hit a singular system.
    #[error("descended pairing is singular: {0}")]
    SingularPairing(String),

    /// A lattice is not stable under the module structure it must carry.
    #[error("lattice is not a module over the required order: {0}")]
    NotAModule(String),

    /// An object required to be fixed by a map is not fixed.
    #[error("object is not fixed by the required map: {0}")]
    NotFixed(String),

    /// A lattice function is not invariant under the adjoint involution.
    #[error("not invariant under the involution: {0}")]
    NotSigmaInvariant(String),

    /// Input falls in a different structural case than the routine handles.
    #[error("wrong structural case: {0}")]
    WrongCase(String),

    /// A theorem hypothesis fails for the given instance.
    #[error("hypothesis fails: {0}")]
    HypothesisFailure(String),

    /// Two lattice functions do not have the same type, so no witness exists.
    #[error("lattice functions are not of the same type: {0}")]
    NotSameType(String),

    /// A tensor product expected to split (or stay division) does the other.
    #[error("unexpected splitting behaviour: {0}")]
    NotSplit(String),

    /// The sufficient conditions of the conjugation theorem fail.
    #[error("conjugation conditions fail: {0}")]
    ConditionsFail(String),

    /// Two hermitian forms are not isometric.
    #[error("forms are not isometric: {0}")]
    NotIsomorphicForms(String),

    /// The extension property fails for the given field datum.
    #[error("extension property fails: {0}")]
    ExtensionPropertyFails(String),

    /// An object is not invariant under a map that must preserve it.
    #[error("not invariant: {0}")]
    NotInvariant(String),

    /// The CLI was asked for a verification suite that is not registered.
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),

    /// A jump profile is internally inconsistent (wrong length, bad range).
    #[error("inconsistent profile: {0}")]
    InconsistentProfile(String),

    /// Internal invariant violated; always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}
