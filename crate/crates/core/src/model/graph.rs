use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;

const CANONICAL_GRAPH: &str = include_str!("../../data/factor_graph_6x4.txt");

/// Resource-occupancy structure: entry `(k, j)` is set when user `j` transmits on resource `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorGraph {
    resources: usize,
    users: usize,
    /// Row-major K×J occupancy.
    occupancy: Vec<bool>,
}

impl FactorGraph {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, ModelError> {
        let resources = rows.len();
        if resources == 0 {
            return Err(ModelError::Graph("empty matrix".into()));
        }
        let users = rows[0].len();
        if users == 0 {
            return Err(ModelError::Graph("matrix has no columns".into()));
        }
        let mut occupancy = Vec::with_capacity(resources * users);
        for (k, row) in rows.iter().enumerate() {
            if row.len() != users {
                return Err(ModelError::Graph(format!(
                    "row {k} has {} entries, expected {users}",
                    row.len()
                )));
            }
            for &v in row {
                match v {
                    0 => occupancy.push(false),
                    1 => occupancy.push(true),
                    other => return Err(ModelError::Graph(format!("entry {other} is not 0/1"))),
                }
            }
        }
        let graph = Self {
            resources,
            users,
            occupancy,
        };
        for j in 0..users {
            if graph.resources_of(j).is_empty() {
                return Err(ModelError::Graph(format!("user {j} occupies no resource")));
            }
        }
        Ok(graph)
    }

    /// Builds the graph from per-user lists of occupied resources.
    pub fn from_supports(resources: usize, supports: &[Vec<usize>]) -> Result<Self, ModelError> {
        let mut rows = vec![vec![0u8; supports.len()]; resources];
        for (j, support) in supports.iter().enumerate() {
            for &k in support {
                if k >= resources {
                    return Err(ModelError::Graph(format!("user {j} references resource {k} >= K={resources}")));
                }
                rows[k][j] = 1;
            }
        }
        Self::from_rows(&rows)
    }

    /// The shipped regular 4×6 design: every pair of resources is used by exactly one user.
    pub fn canonical() -> Self {
        parse_graph(CANONICAL_GRAPH).expect("bundled factor graph is valid")
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn is_set(&self, resource: usize, user: usize) -> bool {
        self.occupancy[resource * self.users + user]
    }

    /// Users colliding on `resource`, ascending.
    pub fn users_on(&self, resource: usize) -> Vec<usize> {
        (0..self.users).filter(|&j| self.is_set(resource, j)).collect()
    }

    /// Resources occupied by `user`, ascending.
    pub fn resources_of(&self, user: usize) -> Vec<usize> {
        (0..self.resources).filter(|&k| self.is_set(k, user)).collect()
    }

    pub fn column_weights(&self) -> Vec<usize> {
        (0..self.users).map(|j| self.resources_of(j).len()).collect()
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.resources).map(|k| self.users_on(k).len()).collect()
    }

    /// `Some(d_f)` when every resource carries the same number of users.
    pub fn regular_overlap(&self) -> Option<usize> {
        let rows = self.row_weights();
        rows.iter().all(|&r| r == rows[0]).then_some(rows[0])
    }

    /// Number of edges (user-resource connections).
    pub fn edges(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in 0..self.resources {
            let row: Vec<&str> = (0..self.users)
                .map(|j| if self.is_set(k, j) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

fn parse_graph(text: &str) -> Result<FactorGraph, ModelError> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u8>()
                    .map_err(|_| ModelError::Graph(format!("line {}: bad entry {t:?}", line_no + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    FactorGraph::from_rows(&rows)
}

/// Reads a K×J 0/1 matrix, one resource per line, entries separated by whitespace or commas.
pub fn load_factor_graph(path: impl AsRef<Path>) -> crate::Result<FactorGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(parse_graph(&text)?)
}

/// Binary vector of length 2K selecting the interleaved (re, im) slots a user may drive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingMask(Vec<u8>);

impl MappingMask {
    pub fn from_resources(resources: usize, occupied: &[usize]) -> Result<Self, ModelError> {
        let mut bits = vec![0u8; 2 * resources];
        for &k in occupied {
            if k >= resources {
                return Err(ModelError::Graph(format!("resource {k} >= K={resources}")));
            }
            bits[2 * k] = 1;
            bits[2 * k + 1] = 1;
        }
        Ok(Self(bits))
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self, ModelError> {
        if bits.len() % 2 != 0 || bits.is_empty() {
            return Err(ModelError::Graph(format!("mask length {} is not a positive even number", bits.len())));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(ModelError::Graph("mask entries must be 0 or 1".into()));
        }
        if bits.chunks(2).any(|p| p[0] != p[1]) {
            return Err(ModelError::Graph("real and imaginary slots of a resource must agree".into()));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Collapses the (re, im) pairs back to the occupied resource indices.
    pub fn resources(&self) -> Vec<usize> {
        self.0
            .chunks(2)
            .enumerate()
            .filter(|(_, pair)| pair[0] == 1)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn ones(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }
}

/// One mask per user, ones exactly at the real/imaginary slots of occupied resources.
pub fn derive_masks(graph: &FactorGraph) -> Vec<MappingMask> {
    (0..graph.users())
        .map(|j| {
            MappingMask::from_resources(graph.resources(), &graph.resources_of(j))
                .expect("graph resources are in range")
        })
        .collect()
}
