//! The document printed by every command.
//!
//! JSON field names are stable: top-level `tool`, `version`, `command`,
//! `seed`, `settings`, `wall_clock_ms`, `exit_code` and `body`, where `body`
//! is tagged by `kind`.

use potkit::certificates::{CertificateOutcome, Condition, Witness};
use potkit::generators::GenSpec;
use potkit::principles::{BridgeReport, PrincipleVerdict};
use potkit::{ClassificationReport, Matrix, Settings};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub settings: Settings,
    pub wall_clock_ms: f64,
    pub exit_code: i32,
    pub body: Body,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Body {
    Classification(ClassificationReport),
    Certificate(CertificateOutcome),
    Falsify {
        condition: Condition,
        budget: u64,
        witness: Option<Witness>,
    },
    Principle(PrincipleVerdict),
    Bridge(BridgeReport),
    Scale {
        mode: String,
        matrix: Matrix,
        /// Diagonal of `D`, present for `due`.
        d: Option<Vec<f64>>,
        /// Diagonal of `E`.
        e: Vec<f64>,
    },
    Generate {
        specs: Vec<GenSpec>,
        /// Output files, empty when the matrices went to stdout.
        files: Vec<String>,
        matrices: Vec<Matrix>,
    },
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers")
    }
}
