//! Document formats and machine-readable report records.
//!
//! All documents are JSON. Complex matrices are encoded as row-major lists of
//! [re, im] pairs. Every floating-point number emitted into a report is
//! rounded to 12 significant digits through its decimal representation, which
//! keeps records byte-identical across runs and re-parseable without loss.

use crate::bell::settings::SettingsDescription;
use crate::bell::NonlocalityReport;
use crate::error::{Error, Result};
use crate::numeric::density::DensityMatrix;
use crate::numeric::matrix::{Complex64, ComplexMatrix};
use crate::numeric::rng::Seed;
use crate::polytope::LocalityVerdict;
use crate::private::{fixtures, PrivateStateSpec};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Round through the shortest 12-significant-digit decimal form.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.11e}", x).parse().expect("formatted float reparses")
}

fn json_num(x: f64) -> Value {
    json!(round_sig12(x))
}

fn json_complex(z: Complex64) -> Value {
    json!([round_sig12(z.re), round_sig12(z.im)])
}

/// FNV-1a over a byte string, hex-encoded. Used for config and spec digests.
pub fn digest_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

// ---------------------------------------------------------------------------
// Private-state recipe documents
// ---------------------------------------------------------------------------

fn encode_matrix(m: &ComplexMatrix) -> Vec<[f64; 2]> {
    m.data().iter().map(|z| [z.re, z.im]).collect()
}

fn decode_matrix(rows: usize, cols: usize, data: &[[f64; 2]]) -> Result<ComplexMatrix> {
    if data.len() != rows * cols {
        return Err(Error::Parse(format!(
            "matrix needs {} entries, document has {}",
            rows * cols,
            data.len()
        )));
    }
    ComplexMatrix::new(
        rows,
        cols,
        data.iter().map(|&[re, im]| Complex64::new(re, im)).collect(),
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RandomSpecParams {
    pub seed: u64,
    pub shield_dim_per_party: usize,
}

/// On-disk form of a private-state recipe: either explicit matrices or a
/// seeded random construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub d: usize,
    pub n_parties: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shield_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitaries: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shield_state: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpecParams>,
}

impl SpecDocument {
    pub fn from_spec(spec: &PrivateStateSpec) -> Self {
        Self {
            d: spec.key_dim(),
            n_parties: spec.n_parties(),
            shield_dims: Some(spec.shield_dims().to_vec()),
            unitaries: Some(spec.twist_unitaries().iter().map(encode_matrix).collect()),
            shield_state: Some(encode_matrix(spec.shield_state().matrix())),
            random: None,
        }
    }

    pub fn into_spec(self) -> Result<PrivateStateSpec> {
        if let Some(random) = self.random {
            if self.shield_dims.is_some() || self.unitaries.is_some() || self.shield_state.is_some()
            {
                return Err(Error::Parse(
                    "spec document mixes `random` with explicit fields".into(),
                ));
            }
            return fixtures::random(
                self.d,
                self.n_parties,
                random.shield_dim_per_party,
                Seed(random.seed),
            );
        }
        let shield_dims = self
            .shield_dims
            .ok_or_else(|| Error::Parse("spec document missing `shield_dims`".into()))?;
        let unitaries_doc = self
            .unitaries
            .ok_or_else(|| Error::Parse("spec document missing `unitaries`".into()))?;
        let shield_state_doc = self
            .shield_state
            .ok_or_else(|| Error::Parse("spec document missing `shield_state`".into()))?;
        let side: usize = shield_dims.iter().product();
        let unitaries = unitaries_doc
            .iter()
            .map(|m| decode_matrix(side, side, m))
            .collect::<Result<Vec<_>>>()?;
        let shield_matrix = decode_matrix(side, side, &shield_state_doc)?;
        let shield_state = DensityMatrix::new(shield_matrix, shield_dims.clone())?;
        PrivateStateSpec::new(self.d, self.n_parties, shield_dims, unitaries, shield_state)
    }
}

pub fn parse_spec_document(text: &str) -> Result<PrivateStateSpec> {
    let doc: SpecDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    doc.into_spec()
}

pub fn write_spec_document(spec: &PrivateStateSpec) -> String {
    serde_json::to_string(&SpecDocument::from_spec(spec)).expect("spec document serializes")
}

/// Digest of the canonical (explicit) document of a recipe. Random recipes
/// digest their resolved matrices, so equal seeds give equal digests.
pub fn spec_digest(spec: &PrivateStateSpec) -> String {
    digest_hex(write_spec_document(spec).as_bytes())
}

// ---------------------------------------------------------------------------
// Correlation-table documents
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDocument {
    pub parties: usize,
    pub settings: usize,
    pub outcomes: usize,
    pub probabilities: Vec<f64>,
}

pub fn parse_table_document(text: &str) -> Result<crate::bell::CorrelationTable> {
    let doc: TableDocument =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let shape = crate::bell::TableShape {
        parties: doc.parties,
        settings: doc.settings,
        outcomes: doc.outcomes,
    };
    crate::bell::CorrelationTable::new(shape, doc.probabilities)
}

pub fn write_table_document(table: &crate::bell::CorrelationTable) -> String {
    let shape = table.shape();
    let doc = TableDocument {
        parties: shape.parties,
        settings: shape.settings,
        outcomes: shape.outcomes,
        probabilities: table.probabilities().iter().map(|&p| round_sig12(p)).collect(),
    };
    serde_json::to_string(&doc).expect("table document serializes")
}

// ---------------------------------------------------------------------------
// Report records (one JSON object per line in a run report)
// ---------------------------------------------------------------------------

fn settings_json(s: &SettingsDescription) -> Value {
    let axes = |a: &[[f64; 3]; 2]| -> Value {
        json!([
            [json_num(a[0][0]), json_num(a[0][1]), json_num(a[0][2])],
            [json_num(a[1][0]), json_num(a[1][1]), json_num(a[1][2])],
        ])
    };
    json!({
        "alice_bloch_axes": axes(&s.alice_axes),
        "bob_bloch_axes": axes(&s.bob_axes),
        "embedded_pair": s.embedded_pair.map(|(k, l)| json!([k, l])).unwrap_or(Value::Null),
    })
}

pub fn verdict_json(verdict: &LocalityVerdict) -> Value {
    match verdict {
        LocalityVerdict::Member { weights } => json!({
            "member": true,
            "weights": weights.iter().map(|&w| json_num(w)).collect::<Vec<_>>(),
        }),
        LocalityVerdict::NonMember {
            functional,
            local_bound,
            observed,
        } => json!({
            "member": false,
            "functional": functional.iter().map(|&f| json_num(f)).collect::<Vec<_>>(),
            "local_bound": json_num(*local_bound),
            "observed": json_num(*observed),
        }),
    }
}

/// Per-trial record of a nonlocality-pipeline run.
pub fn nonlocality_json(
    report: &NonlocalityReport,
    label: Option<&str>,
    trial: Option<u64>,
    include_timings: bool,
) -> Value {
    let mut record = json!({
        "record": "nonlocality",
        "spec_digest": report.spec_digest,
        "d": report.key_dim,
        "n_parties": report.n_parties,
        "pair": [report.pair.0, report.pair.1],
        "witness": json_complex(report.witness_value),
        "alpha": json_complex(report.alpha),
        "alpha_abs": json_num(report.alpha.norm()),
        "projection_probability": json_num(report.projection_probability),
        "settings": settings_json(&report.settings),
        "ch_value": json_num(report.ch_value),
        "chsh_value": json_num(report.chsh_value),
        "violated": report.violated,
        "lp": verdict_json(&report.lp_verdict),
        "lp_agrees": report.lp_agrees,
        "key_statistic_ok": report.key_statistic_ok,
        "pt_min_eigenvalue": json_num(report.pt_min_eigenvalue),
    });
    let obj = record.as_object_mut().expect("record is an object");
    if let Some(label) = label {
        obj.insert("label".into(), json!(label));
    }
    if let Some(trial) = trial {
        obj.insert("trial".into(), json!(trial));
    }
    if include_timings {
        obj.insert(
            "elapsed_ms".into(),
            json_num(report.elapsed.as_secs_f64() * 1e3),
        );
    }
    record
}
