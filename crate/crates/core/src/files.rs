//! Text formats for data and queries (TOML).
//!
//! A datum file holds one or more blocks; a single block is a datum for
//! `GL_n`, several blocks describe a parabolic induction.
//!
//! ```toml
//! name = "n2e2j1p3"
//!
//! [[block]]
//! p = 3
//! n = 2
//! e = 2
//! j = 1
//! scale = -1
//! beta = [[0, 1], [3, 0]]
//! ```
//!
//! A query file describes `S(m, T, c)`:
//!
//! ```toml
//! name = "m4p3"
//! n = 2
//! m = 4
//! bound = 8
//! p = 3
//! congruence = 2
//!
//! [torus]
//! kind = "generated"
//! generators = []
//! ```

use serde::{Deserialize, Serialize};

use crate::counting::{LatticeQuery, TorusSpec};
use crate::error::{Error, Result};
use crate::orders::{HereditaryOrder, InductionDatum};
use crate::padic::{MatrixApprox, PrecisionCtx};
use crate::samples::working_precision;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub p: u64,
    pub n: usize,
    pub e: usize,
    pub j: i64,
    /// beta is `p^scale` times the integer matrix.
    pub scale: i64,
    pub beta: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumFile {
    pub name: String,
    /// Asserts that the blocks are pairwise inequivalent up to unramified twist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequivalent: Option<bool>,
    #[serde(rename = "block")]
    pub blocks: Vec<BlockSpec>,
}

fn parse_error(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

impl BlockSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.e == 0 {
            return Err(Error::Parse("n and e must be positive".into()));
        }
        if self.n % self.e != 0 {
            return Err(Error::Parse(format!(
                "e must divide n (n = {}, e = {})",
                self.n, self.e
            )));
        }
        if self.beta.len() != self.n || self.beta.iter().any(|r| r.len() != self.n) {
            return Err(Error::Parse(format!(
                "beta must be a {0}x{0} matrix",
                self.n
            )));
        }
        Ok(())
    }

    fn parts(&self, margin: u32) -> Result<(HereditaryOrder, MatrixApprox, i64)> {
        let ctx = PrecisionCtx::new(self.p, working_precision(self.e, self.j, margin))?;
        let order = HereditaryOrder::new(self.n, self.e)?;
        let beta = MatrixApprox::from_integers(ctx, self.n, self.scale, &self.beta.concat())?;
        Ok((order, beta, self.j))
    }

    /// A certified datum.
    pub fn datum(&self, margin: u32) -> Result<InductionDatum> {
        let (order, beta, j) = self.parts(margin)?;
        InductionDatum::new(order, beta, j)
    }

    /// Only dimensions and `v_A(beta) = -j` are checked.
    pub fn uncertified(&self, margin: u32) -> Result<InductionDatum> {
        let (order, beta, j) = self.parts(margin)?;
        InductionDatum::new_uncertified(order, beta, j)
    }
}

impl DatumFile {
    pub fn parse(text: &str) -> Result<Self> {
        let f: DatumFile = toml::from_str(text).map_err(parse_error)?;
        if f.blocks.is_empty() {
            return Err(Error::Parse("at least one [[block]] is required".into()));
        }
        for b in &f.blocks {
            b.validate()?;
        }
        Ok(f)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("datum files serialise")
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Certified data for every block. Blocks sharing `(e, j)` must be
    /// asserted inequivalent in the file.
    pub fn data(&self, margin: u32) -> Result<Vec<InductionDatum>> {
        if self.blocks.len() > 1 && !self.inequivalence_settled() {
            return Err(Error::DatumInvalid(
                "blocks with equal (e, j) need `inequivalent = true` in the file".into(),
            ));
        }
        self.blocks.iter().map(|b| b.datum(margin)).collect()
    }

    /// Distinct `(e, j)` across blocks, or the file's own assertion.
    pub fn inequivalence_settled(&self) -> bool {
        let mut keys: Vec<(usize, i64)> = self.blocks.iter().map(|b| (b.e, b.j)).collect();
        keys.sort_unstable();
        let distinct = keys.windows(2).all(|w| w[0] != w[1]);
        distinct || self.inequivalent == Some(true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TorusFile {
    /// Generated by integer matrices, reduced mod `p^c`.
    Generated {
        generators: Vec<Vec<Vec<i64>>>,
    },
    Diagonal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFile {
    pub name: String,
    pub n: usize,
    pub m: i64,
    pub bound: i64,
    pub p: u64,
    pub congruence: u32,
    pub torus: TorusFile,
}

impl QueryFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(parse_error)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("query files serialise")
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn query(&self) -> Result<LatticeQuery> {
        let torus = match &self.torus {
            TorusFile::Diagonal => TorusSpec::Diagonal,
            TorusFile::Generated { generators } => {
                let modulus = self
                    .p
                    .checked_pow(self.congruence)
                    .ok_or_else(|| Error::Parse("p^c overflows".into()))?
                    as i64;
                let mut gens = Vec::new();
                for g in generators {
                    if g.len() != self.n || g.iter().any(|r| r.len() != self.n) {
                        return Err(Error::Parse(format!(
                            "torus generators must be {0}x{0}",
                            self.n
                        )));
                    }
                    gens.push(
                        g.iter()
                            .flatten()
                            .map(|&v| v.rem_euclid(modulus) as u32)
                            .collect(),
                    );
                }
                TorusSpec::Generated(gens)
            }
        };
        let q = LatticeQuery {
            n: self.n,
            det: self.m,
            bound: self.bound,
            p: self.p,
            congruence: self.congruence,
            torus,
        };
        q.validate()?;
        Ok(q)
    }
}
