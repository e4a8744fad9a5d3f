//! JSON instance files.
//!
//! ```json
//! {"v": 1, "dim": 2, "vectors": [[1, 0], [0, 1]],
//!  "matroid": {"kind": "uniform", "ground": 2, "rank": 2}}
//! ```
//!
//! An `"app"` object replaces the explicit vectors: `{"nsw": {"valuations": ...}}`
//! derives both vectors and matroid; `{"network": {"vertices": p, "edges": ...}}`
//! derives the vectors and takes the matroid over edges from `"matroid"`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::apps::{network_instance, nsw_instance, Graph};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linalg::{vector, Vector};
use crate::matroid::Matroid;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub v: u32,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matroid: Option<MatroidJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub app: Option<AppJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MatroidJson {
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ground: Option<usize>,
        rank: usize,
    },
    Partition {
        parts: Vec<usize>,
        capacities: Vec<usize>,
    },
    Graphic {
        vertices: Vec<String>,
        edges: Vec<[String; 2]>,
    },
    Linear {
        vectors: Vec<Vec<f64>>,
    },
    Restriction {
        inner: Box<MatroidJson>,
        support: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum AppJson {
    Nsw {
        valuations: Vec<Vec<f64>>,
    },
    Network {
        vertices: usize,
        edges: Vec<[usize; 2]>,
    },
}

fn schema(msg: impl Into<String>) -> Error {
    Error::InvalidInstance(msg.into())
}

fn to_vectors(rows: &[Vec<f64>], dim: usize) -> Result<Vec<Vector>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != dim {
                return Err(schema(format!(
                    "vector {i} has length {} but dim is {dim}",
                    row.len()
                )));
            }
            Ok(vector(row))
        })
        .collect()
}

impl MatroidJson {
    /// Builds the matroid; `default_ground` sizes a uniform matroid without `ground`.
    pub fn to_matroid(&self, default_ground: usize) -> Result<Matroid> {
        let m = match self {
            MatroidJson::Uniform { ground, rank } => {
                Matroid::uniform(ground.unwrap_or(default_ground), *rank)
            }
            MatroidJson::Partition { parts, capacities } => {
                Matroid::partition(parts.clone(), capacities.clone())?
            }
            MatroidJson::Graphic { vertices, edges } => {
                let index: HashMap<&str, usize> = vertices
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v.as_str(), i))
                    .collect();
                if index.len() != vertices.len() {
                    return Err(schema("duplicate vertex name"));
                }
                let lookup = |name: &String| {
                    index.get(name.as_str()).copied().ok_or_else(|| {
                        schema(format!("edge references undeclared vertex {name:?}"))
                    })
                };
                let edges = edges
                    .iter()
                    .map(|[a, b]| Ok((lookup(a)?, lookup(b)?)))
                    .collect::<Result<Vec<_>>>()?;
                Matroid::graphic(vertices.clone(), edges)?
            }
            MatroidJson::Linear { vectors } => {
                let dim = vectors.first().map_or(0, |v| v.len());
                Matroid::Linear {
                    vectors: to_vectors(vectors, dim)?,
                }
            }
            MatroidJson::Restriction { inner, support } => inner
                .to_matroid(default_ground)?
                .restrict(support.iter().copied().collect())?,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_matroid(m: &Matroid) -> Self {
        match m {
            Matroid::Uniform { ground, rank } => MatroidJson::Uniform {
                ground: Some(*ground),
                rank: *rank,
            },
            Matroid::Partition { parts, capacities } => MatroidJson::Partition {
                parts: parts.clone(),
                capacities: capacities.clone(),
            },
            Matroid::Graphic { vertices, edges } => MatroidJson::Graphic {
                vertices: vertices.clone(),
                edges: edges
                    .iter()
                    .map(|&(a, b)| [vertices[a].clone(), vertices[b].clone()])
                    .collect(),
            },
            Matroid::Linear { vectors } => MatroidJson::Linear {
                vectors: vectors
                    .iter()
                    .map(|v| v.iter().copied().collect())
                    .collect(),
            },
            Matroid::Restriction { inner, support } => MatroidJson::Restriction {
                inner: Box::new(Self::from_matroid(inner)),
                support: support.clone().into(),
            },
        }
    }
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| schema(format!("malformed instance: {e}")))?;
        if file.v != SCHEMA_VERSION {
            return Err(schema(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                file.v
            )));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance files serialize")
    }

    pub fn from_instance(instance: &Instance) -> Self {
        Self {
            v: SCHEMA_VERSION,
            dim: instance.dim(),
            vectors: Some(
                instance
                    .vectors()
                    .iter()
                    .map(|v| v.iter().copied().collect())
                    .collect(),
            ),
            matroid: Some(MatroidJson::from_matroid(instance.matroid())),
            app: None,
        }
    }

    pub fn to_instance(&self) -> Result<Instance> {
        if self.dim == 0 {
            return Err(schema("dim must be positive"));
        }
        let inst = match &self.app {
            Some(AppJson::Nsw { valuations }) => {
                if self.vectors.is_some() || self.matroid.is_some() {
                    return Err(schema(
                        "an nsw instance derives its own vectors and matroid",
                    ));
                }
                nsw_instance(valuations)?
            }
            Some(AppJson::Network { vertices, edges }) => {
                if self.vectors.is_some() {
                    return Err(schema("a network instance derives its own vectors"));
                }
                let matroid = self
                    .matroid
                    .as_ref()
                    .ok_or_else(|| schema("a network instance needs a matroid over its edges"))?;
                let graph = Graph::new(*vertices, edges.iter().map(|[a, b]| (*a, *b)).collect())?;
                network_instance(&graph, matroid.to_matroid(edges.len())?)?
            }
            None => {
                let rows = self
                    .vectors
                    .as_ref()
                    .ok_or_else(|| schema("missing \"vectors\""))?;
                let matroid = self
                    .matroid
                    .as_ref()
                    .ok_or_else(|| schema("missing \"matroid\""))?;
                Instance::new(to_vectors(rows, self.dim)?, matroid.to_matroid(rows.len())?)?
            }
        };
        if inst.dim() != self.dim {
            return Err(schema(format!(
                "dim is {} but the instance lives in dimension {}",
                self.dim,
                inst.dim()
            )));
        }
        Ok(inst)
    }
}

/// Parses an instance file straight into an [`Instance`].
pub fn parse_instance(text: &str) -> Result<Instance> {
    InstanceFile::parse(text)?.to_instance()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_partition_file() {
        let text = r#"{"v":1,"dim":2,"vectors":[[1,0],[0,1],[0,10]],
            "matroid":{"kind":"partition","parts":[0,1,1],"capacities":[1,1]}}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!((inst.n(), inst.dim(), inst.rank()), (3, 2, 2));
    }

    #[test]
    fn graphic_uses_vertex_names() {
        let text = r#"{"v":1,"dim":1,"vectors":[[1],[2],[3]],
            "matroid":{"kind":"graphic","vertices":["a","b","c"],
                       "edges":[["a","b"],["b","c"],["c","a"]]}}"#;
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.rank(), 2);
        let bad = text.replace(r#"["c","a"]"#, r#"["c","z"]"#);
        assert!(parse_instance(&bad).is_err());
    }

    #[test]
    fn schema_errors() {
        for text in [
            r#"{"v":2,"dim":1,"vectors":[[1]],"matroid":{"kind":"uniform","rank":1}}"#,
            r#"{"v":1,"dim":2,"vectors":[[1]],"matroid":{"kind":"uniform","rank":1}}"#,
            r#"{"v":1,"dim":1,"vectors":[[1]],"matroid":{"kind":"uniform","ground":2,"rank":1}}"#,
            r#"{"v":1,"dim":1,"vectors":[[1]]}"#,
            r#"{"v":1,"dim":1,"vectors":[[1]],"matroid":{"kind":"cubic"}}"#,
            r#"{"v":1,"dim":1,"vectors":[[1]],"matroid":{"kind":"uniform","rank":1},"extra":0}"#,
            r#"not json"#,
        ] {
            assert!(
                matches!(
                    parse_instance(text),
                    Err(Error::InvalidInstance(_) | Error::InvalidMatroid(_))
                ),
                "{text}"
            );
        }
    }

    #[test]
    fn apps_derive_vectors() {
        let nsw = r#"{"v":1,"dim":2,"app":{"nsw":{"valuations":[[1,2],[3,4]]}}}"#;
        assert_eq!(parse_instance(nsw).unwrap().n(), 4);
        let net = r#"{"v":1,"dim":2,"app":{"network":{"vertices":3,"edges":[[0,1],[1,2],[0,2]]}},
            "matroid":{"kind":"uniform","rank":2}}"#;
        let inst = parse_instance(net).unwrap();
        assert_eq!((inst.n(), inst.rank()), (3, 2));
        let wrong_dim = nsw.replace(r#""dim":2"#, r#""dim":3"#);
        assert!(parse_instance(&wrong_dim).is_err());
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let text = r#"{"v":1,"dim":2,"vectors":[[0.1,-2.5],[3.0,4.25],[1e-7,2.0]],"matroid":{"kind":"restriction","inner":{"kind":"uniform","ground":3,"rank":2},"support":[0,2]}}"#;
        let file = InstanceFile::parse(text).unwrap();
        let once = file.to_json();
        let twice = InstanceFile::parse(&once).unwrap().to_json();
        assert_eq!(once, twice);
        let inst = file.to_instance().unwrap();
        let rebuilt = InstanceFile::from_instance(&inst).to_instance().unwrap();
        assert_eq!(inst, rebuilt);
    }
}
