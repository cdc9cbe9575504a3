use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::tiling::StallDiagnostic;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Bad edge list or weight vector.
    MalformedGraph(String),
    /// A vertex function value is NaN or infinite.
    NonFinite {
        vertex: usize,
    },
    /// The operation needs all vertices in one component.
    CrossComponent {
        a: usize,
        b: usize,
    },
    /// A class that should induce a connected subgraph does not.
    DisconnectedClass {
        class: usize,
    },
    EmptySet,
    /// Sets or cells that must be disjoint share this vertex.
    NotDisjoint {
        vertex: usize,
    },
    TargetOutOfRange {
        target: f64,
        low: f64,
        high: f64,
    },
    MalformedFlow(String),
    /// A class of the flow-definer relation cannot absorb its supply.
    InsufficientCapacity {
        class: usize,
        supply: f64,
        capacity: f64,
    },
    /// The flow has a pair crossing the boundary of `U × V`.
    NotClosed {
        from: usize,
        to: usize,
    },
    /// Cell `cell` of prepartition `later` splits a class of `earlier`.
    NotCoherent {
        earlier: usize,
        later: usize,
        cell: Vec<usize>,
    },
    BadMagnification {
        alpha: f64,
    },
    InvariantBreach(String),
    /// The block already fills its component.
    NoNextBlock {
        component: usize,
    },
    TooLargeForExact {
        component_size: usize,
        limit: usize,
    },
    BadModel(String),
    BadDenominator {
        vertex: usize,
        value: f64,
    },
    IterationCap {
        rounds: usize,
    },
    Stalled(Box<StallDiagnostic>),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MalformedGraph(why) => write!(f, "malformed graph: {why}"),
            Error::NonFinite { vertex } => write!(f, "non-finite value at vertex {vertex}"),
            Error::CrossComponent { a, b } => {
                write!(f, "vertices {a} and {b} lie in different components")
            }
            Error::DisconnectedClass { class } => write!(f, "class {class} is not connected"),
            Error::EmptySet => write!(f, "empty vertex set"),
            Error::NotDisjoint { vertex } => write!(f, "sets overlap at vertex {vertex}"),
            Error::TargetOutOfRange { target, low, high } => {
                write!(f, "target {target} outside [{low}, {high}]")
            }
            Error::MalformedFlow(why) => write!(f, "malformed flow: {why}"),
            Error::InsufficientCapacity {
                class,
                supply,
                capacity,
            } => write!(f, "class {class}: supply {supply} exceeds capacity {capacity}"),
            Error::NotClosed { from, to } => {
                write!(f, "flow pair ({from}, {to}) leaves the closed rectangle")
            }
            Error::NotCoherent { earlier, later, cell } => write!(
                f,
                "cell {cell:?} of prepartition {later} is not invariant under prepartition {earlier}"
            ),
            Error::BadMagnification { alpha } => write!(f, "magnification {alpha} is below 1"),
            Error::InvariantBreach(why) => write!(f, "invariant breach: {why}"),
            Error::NoNextBlock { component } => {
                write!(f, "block fills component {component}, no next block")
            }
            Error::TooLargeForExact { component_size, limit } => {
                write!(f, "component of {component_size} vertices exceeds exact limit {limit}")
            }
            Error::BadModel(why) => write!(f, "bad model: {why}"),
            Error::BadDenominator { vertex, value } => {
                write!(f, "denominator {value} at vertex {vertex} is not positive")
            }
            Error::IterationCap { rounds } => write!(f, "no fixpoint after {rounds} rounds"),
            Error::Stalled(diag) => write!(
                f,
                "tiling stalled at stage {} with {} uncovered components",
                diag.stage,
                diag.components.len()
            ),
        }
    }
}

impl core::error::Error for Error {}
