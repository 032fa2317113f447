//! Finite quotients of free and surface groups through PSL(2,p): defining
//! subgroups, the induced permutation actions of automorphisms, residual
//! finiteness witnesses and replayable certificates.

pub mod cert;
pub mod defsub;
pub mod error;
pub mod freegrp;
pub mod permgrp;
pub mod psl2;
pub mod rfwitness;
pub mod surface;

pub use cert::{verify, Certificate, CertificateBody, VerificationReport};
pub use defsub::{ClassTable, DefiningContext, EnumerationConfig, Strategy};
pub use error::{Error, Result};
pub use freegrp::{FreeAutomorphism, FreeWord, GroupTuple};
pub use permgrp::{GroupKind, PermGroup, Permutation, Recognition, RecognitionConfig};
pub use psl2::{ElementIndex, Prime, ProjectiveMatrix, Psl2Group};
pub use rfwitness::RfCertificate;
pub use surface::{HandlebodyEpi, PipelineConfig, SurfaceAutomorphism, SurfaceGroup};
