//! JSON model documents.
//!
//! ```json
//! {
//!   "sites": 3,
//!   "local_dim": 2,
//!   "params": {"omega": 1.2, "gamma": 1.2},
//!   "hamiltonian_terms": [
//!     {"coeff": {"param": "omega", "scale": 0.5}, "ops": "Z", "sites": [1], "translate": true}
//!   ],
//!   "jump_terms": [
//!     {"coeff": {"param": "gamma", "pow": 0.5}, "ops": "+-", "sites": [1, 2], "translate": true}
//!   ]
//! }
//! ```
//!
//! `ops` is a Pauli string over `I X Y Z + -` (one letter per entry of
//! `sites`, 1-based, periodic). `coeff` is a number or `{param, scale, pow}`
//! meaning `scale · params[param]^pow`. With `translate` a Hamiltonian term is
//! summed over all N translates and a jump term yields N jump operators.
//! Unknown keys are rejected everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMat};
use crate::models::{JumpNormalization, XxzSpec};
use crate::operator::{embed_product, pauli, HilbertSpace, LindbladModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub sites: usize,
    pub local_dim: usize,
    pub hamiltonian_terms: Vec<Term>,
    pub jump_terms: Vec<Term>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: Coeff,
    pub ops: String,
    pub sites: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub translate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Value(f64),
    Param(ParamRef),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRef {
    pub param: String,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub pow: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

impl Coeff {
    fn resolve(&self, params: &BTreeMap<String, f64>) -> Result<f64> {
        match self {
            Coeff::Value(v) => Ok(*v),
            Coeff::Param(p) => {
                let v = params
                    .get(&p.param)
                    .ok_or_else(|| Error::Invalid(format!("unknown parameter '{}'", p.param)))?;
                let x = p.scale * v.powf(p.pow);
                if !x.is_finite() {
                    return Err(Error::Invalid(format!("coefficient from '{}' is not finite", p.param)));
                }
                Ok(x)
            }
        }
    }

    fn param(name: &str, scale: f64, pow: f64) -> Self {
        Coeff::Param(ParamRef { param: name.into(), scale, pow })
    }
}

impl ModelDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(Error::Invalid("sites must be positive".into()));
        }
        if self.local_dim != 2 {
            return Err(Error::Invalid("Pauli-string terms need local_dim = 2".into()));
        }
        for t in self.hamiltonian_terms.iter().chain(&self.jump_terms) {
            if t.ops.chars().count() != t.sites.len() || t.sites.is_empty() {
                return Err(Error::Invalid(format!("term '{}' needs one site per operator", t.ops)));
            }
            if let Some(c) = t.ops.chars().find(|&c| pauli::by_name(c).is_none()) {
                return Err(Error::Invalid(format!("unknown operator '{c}' (use I X Y Z + -)")));
            }
            if t.sites.contains(&0) {
                return Err(Error::Invalid("sites are 1-based".into()));
            }
            t.coeff.resolve(&self.params)?;
        }
        Ok(())
    }

    fn term_ops(&self, t: &Term, space: &HilbertSpace) -> Result<Vec<CMat>> {
        let c = cr(t.coeff.resolve(&self.params)?);
        let shifts = if t.translate { self.sites } else { 1 };
        (0..shifts)
            .map(|s| {
                let ops: Vec<(CMat, usize)> = t
                    .ops
                    .chars()
                    .zip(&t.sites)
                    .map(|(ch, &site)| (pauli::by_name(ch).expect("validated"), site + s))
                    .collect();
                Ok(linalg::scale(&embed_product(&ops, space)?, c))
            })
            .collect()
    }

    pub fn build(&self) -> Result<LindbladModel> {
        self.validate()?;
        let space = HilbertSpace::qubits(self.sites)?;
        let mut h = linalg::zeros(space.dim, space.dim);
        for t in &self.hamiltonian_terms {
            for op in self.term_ops(t, &space)? {
                h += op;
            }
        }
        let mut jumps = vec![];
        for t in &self.jump_terms {
            jumps.extend(self.term_ops(t, &space)?);
        }
        LindbladModel::new(space, h, jumps)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::cli::to_sorted_json(&serde_json::to_value(self)?)
    }

    /// The XXZ chain written as a document.
    pub fn xxz(spec: &XxzSpec) -> Self {
        let term = |coeff, ops: &str, sites: Vec<usize>| Term { coeff, ops: ops.into(), sites, translate: true };
        let pow = match spec.normalization {
            JumpNormalization::SqrtRate => 0.5,
            JumpNormalization::Amplitude => 1.0,
        };
        ModelDoc {
            sites: spec.n,
            local_dim: 2,
            hamiltonian_terms: vec![
                term(Coeff::param("omega", 0.5, 1.0), "Z", vec![1]),
                term(Coeff::param("A_xy", 0.5, 1.0), "XX", vec![1, 2]),
                term(Coeff::param("A_xy", 0.5, 1.0), "YY", vec![1, 2]),
                term(Coeff::param("A_z", 1.0, 1.0), "ZZ", vec![1, 2]),
            ],
            jump_terms: vec![term(Coeff::param("gamma", 1.0, pow), "+-", vec![1, 2])],
            params: [("omega", spec.omega), ("A_xy", spec.a_xy), ("A_z", spec.a_z), ("gamma", spec.gamma)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }
}
