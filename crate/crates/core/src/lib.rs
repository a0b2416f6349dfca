//! Matching engine for vertical reservations combined with hierarchical
//! horizontal reservations under one-to-all counting.
//!
//! The library models individuals, institutions and contracts; runs the
//! hierarchical choice rule within each vertical category and the aggregate
//! rules composing them (with and without the OBC-to-open transfer); executes
//! the cumulative offer mechanism over full instances; and ships independent
//! brute-force oracles that certify the engine's fairness, stability,
//! justified-envy and strategy-proofness properties on demand.
//!
//! ```
//! use hiermatch_core::{run_cop, CopOptions, RuleVariant};
//! use hiermatch_core::monitor::monitor_offer_process;
//! use hiermatch_core::oracles::{check_justified_envy, check_stability};
//!
//! // one open seat and one OBC seat; the stronger OBC candidate is
//! // displaced from the open seat and held through the reservation
//! let instance = hiermatch_core::fixtures::reserved_conflict_instance(
//!     hiermatch_core::fixtures::ConflictPrefs::OpenFirst,
//! );
//! let outcome = run_cop(&instance, &CopOptions::new(RuleVariant::Plain).with_log(true)).unwrap();
//! assert_eq!(outcome.matching.len(), 2);
//!
//! assert!(check_stability(&instance, &outcome.matching, RuleVariant::Plain, true)
//!     .unwrap()
//!     .passed());
//! assert!(check_justified_envy(&instance, &outcome.matching).passed());
//! let log = outcome.log.as_ref().unwrap();
//! assert!(monitor_offer_process(&instance, log).unwrap().is_empty());
//! ```

pub mod aggregate;
pub mod category;
pub mod choice;
pub mod contract;
pub mod cop;
pub mod exec;
pub mod fixtures;
pub mod hierarchy;
pub mod ids;
pub mod instance;
pub mod io;
pub mod monitor;
pub mod oracles;
pub mod sampler;

pub use aggregate::{choose_aggregate, AggregateOutcome, AuditLevel, RuleVariant};
pub use category::{Membership, SeatPool, VerticalCategory};
pub use choice::{choose_hierarchical, Applicant, ChoiceTrace};
pub use contract::{Contract, Matching};
pub use cop::{run_cop, CopOptions, MechanismOutcome, OfferProcessLog, ProposalOrder};
pub use hierarchy::HierarchyForest;
pub use ids::{HorizontalType, IndividualId, InstitutionId};
pub use instance::{Instance, RawInstance, ValidateOptions, Validated};
pub use monitor::{monitor_offer_process, ConditionViolation};
