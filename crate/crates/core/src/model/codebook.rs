use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ChannelGain, FactorGraph, ModelError, SystemConfig};

const REFERENCE_CODEBOOK: &str = include_str!("../../data/codebook_6x4x4.json");
const SMALL_CODEBOOK: &str = include_str!("../../data/codebook_3x2x2.json");

/// One user's mapping from symbol index to K-dimensional codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct UserCodebook {
    support: Vec<usize>,
    codewords: Vec<Vec<Complex64>>,
}

impl UserCodebook {
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn codewords(&self) -> &[Vec<Complex64>] {
        &self.codewords
    }

    pub fn codeword(&self, symbol: usize) -> &[Complex64] {
        &self.codewords[symbol]
    }
}

/// Per-user codebooks of a J-user system over K resources.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    resources: usize,
    codebook_size: usize,
    users: Vec<UserCodebook>,
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    #[serde(rename = "J")]
    users: usize,
    #[serde(rename = "K")]
    resources: usize,
    #[serde(rename = "M")]
    codebook_size: usize,
    #[serde(rename = "users")]
    entries: Vec<UserEntry>,
}

#[derive(Serialize, Deserialize)]
struct UserEntry {
    support: Vec<usize>,
    codewords: Vec<Vec<[f64; 2]>>,
}

impl Codebook {
    /// Validates support consistency: every codeword is exactly zero off its user's support.
    pub fn new(resources: usize, users: Vec<(Vec<usize>, Vec<Vec<Complex64>>)>) -> Result<Self, ModelError> {
        if users.is_empty() {
            return Err(ModelError::SizeMismatch("codebook has no users".into()));
        }
        let codebook_size = users[0].1.len();
        if codebook_size < 2 || !codebook_size.is_power_of_two() {
            return Err(ModelError::SizeMismatch(format!(
                "user 0 has {codebook_size} codewords; M must be a power of two >= 2"
            )));
        }
        let mut out = Vec::with_capacity(users.len());
        for (j, (mut support, codewords)) in users.into_iter().enumerate() {
            if codewords.len() != codebook_size {
                return Err(ModelError::SizeMismatch(format!(
                    "user {j} has {} codewords, expected M={codebook_size}",
                    codewords.len()
                )));
            }
            support.sort_unstable();
            support.dedup();
            if support.is_empty() {
                return Err(ModelError::SizeMismatch(format!("user {j} has an empty support")));
            }
            if let Some(&k) = support.iter().find(|&&k| k >= resources) {
                return Err(ModelError::SizeMismatch(format!("user {j}: support index {k} >= K={resources}")));
            }
            for (c, cw) in codewords.iter().enumerate() {
                if cw.len() != resources {
                    return Err(ModelError::SizeMismatch(format!(
                        "user {j} codeword {c} has {} entries, expected K={resources}",
                        cw.len()
                    )));
                }
                for (k, v) in cw.iter().enumerate() {
                    if !v.re.is_finite() || !v.im.is_finite() {
                        return Err(ModelError::Parse(format!("user {j} codeword {c}: non-finite entry")));
                    }
                    if support.binary_search(&k).is_err() && (v.re != 0.0 || v.im != 0.0) {
                        return Err(ModelError::SupportViolation {
                            user: j,
                            codeword: c,
                            resource: k,
                        });
                    }
                }
            }
            out.push(UserCodebook { support, codewords });
        }
        Ok(Self {
            resources,
            codebook_size,
            users: out,
        })
    }

    /// The bundled published 6-user, 4-resource, 4-point codebook.
    pub fn reference() -> Self {
        Self::from_json(REFERENCE_CODEBOOK).expect("bundled codebook is valid")
    }

    /// A 3-user, 2-resource antipodal codebook where every user occupies both
    /// resources, so the factor graph is dense and full of short cycles.
    pub fn small() -> Self {
        Self::from_json(SMALL_CODEBOOK).expect("bundled codebook is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: CodebookFile = serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        if file.entries.len() != file.users {
            return Err(ModelError::SizeMismatch(format!(
                "header declares J={} but {} users are listed",
                file.users,
                file.entries.len()
            )));
        }
        for (j, entry) in file.entries.iter().enumerate() {
            if entry.codewords.len() != file.codebook_size {
                return Err(ModelError::SizeMismatch(format!(
                    "user {j} lists {} codewords, header declares M={}",
                    entry.codewords.len(),
                    file.codebook_size
                )));
            }
        }
        let users = file
            .entries
            .into_iter()
            .map(|e| {
                let cws = e
                    .codewords
                    .into_iter()
                    .map(|cw| cw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                    .collect();
                (e.support, cws)
            })
            .collect();
        Self::new(file.resources, users)
    }

    pub fn to_json(&self) -> String {
        let file = CodebookFile {
            users: self.users.len(),
            resources: self.resources,
            codebook_size: self.codebook_size,
            entries: self
                .users
                .iter()
                .map(|u| UserEntry {
                    support: u.support.clone(),
                    codewords: u
                        .codewords
                        .iter()
                        .map(|cw| cw.iter().map(|v| [v.re, v.im]).collect())
                        .collect(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("codebook serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> crate::Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| crate::Error::io(path, e))
    }

    pub fn users(&self) -> usize {
        self.users.len()
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.codebook_size.trailing_zeros() as usize
    }

    pub fn user(&self, j: usize) -> &UserCodebook {
        &self.users[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &UserCodebook> {
        self.users.iter()
    }

    pub fn factor_graph(&self) -> FactorGraph {
        let supports: Vec<Vec<usize>> = self.users.iter().map(|u| u.support.clone()).collect();
        FactorGraph::from_supports(self.resources, &supports).expect("validated supports")
    }

    /// Checks that the supports agree with the columns of `graph`.
    pub fn check_graph(&self, graph: &FactorGraph) -> Result<(), ModelError> {
        if graph.users() != self.users() || graph.resources() != self.resources {
            return Err(ModelError::SizeMismatch(format!(
                "graph is {}x{}, codebook has K={} J={}",
                graph.resources(),
                graph.users(),
                self.resources,
                self.users()
            )));
        }
        for (j, u) in self.users.iter().enumerate() {
            if graph.resources_of(j) != u.support {
                return Err(ModelError::Graph(format!(
                    "user {j}: codebook support {:?} disagrees with graph column {:?}",
                    u.support,
                    graph.resources_of(j)
                )));
            }
        }
        Ok(())
    }

    /// Checks that J, K, M and the per-user support size agree with `cfg`.
    pub fn check_config(&self, cfg: &SystemConfig) -> Result<(), ModelError> {
        if cfg.users != self.users() || cfg.resources != self.resources || cfg.codebook_size != self.codebook_size {
            return Err(ModelError::SizeMismatch(format!(
                "codebook is J={} K={} M={}, config is J={} K={} M={}",
                self.users(),
                self.resources,
                self.codebook_size,
                cfg.users,
                cfg.resources,
                cfg.codebook_size
            )));
        }
        if let Some((j, u)) = self
            .users
            .iter()
            .enumerate()
            .find(|(_, u)| u.support.len() != cfg.nonzero_per_codeword)
        {
            return Err(ModelError::SizeMismatch(format!(
                "user {j} occupies {} resources, config declares N={}",
                u.support.len(),
                cfg.nonzero_per_codeword
            )));
        }
        Ok(())
    }

    /// A [`SystemConfig`] describing this codebook (N taken as the widest support).
    pub fn system_config(&self) -> Result<SystemConfig, ModelError> {
        let n = self.users.iter().map(|u| u.support.len()).max().unwrap_or(1);
        SystemConfig::new(self.users(), self.resources, self.codebook_size, n)
    }

    /// Every user's codewords with gains applied, serialized to interleaved reals.
    pub fn signal_table(&self, gains: &ChannelGain) -> SignalTable {
        let width = 2 * self.resources;
        let mut data = Vec::with_capacity(self.users() * self.codebook_size * width);
        for u in &self.users {
            for cw in &u.codewords {
                for (k, v) in cw.iter().enumerate() {
                    data.push(gains.get(2 * k) * v.re);
                    data.push(gains.get(2 * k + 1) * v.im);
                }
            }
        }
        SignalTable {
            width,
            codebook_size: self.codebook_size,
            users: self.users(),
            data,
        }
    }
}

/// Precomputed gain-weighted codewords as interleaved real vectors, for fast frame synthesis.
#[derive(Debug, Clone)]
pub struct SignalTable {
    width: usize,
    codebook_size: usize,
    users: usize,
    data: Vec<f64>,
}

impl SignalTable {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn point(&self, user: usize, symbol: usize) -> &[f64] {
        let start = (user * self.codebook_size + symbol) * self.width;
        &self.data[start..start + self.width]
    }

    /// Writes the clean superposition of `symbols` (one per user) into `out`.
    pub fn superpose_into(&self, symbols: &[usize], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &s) in symbols.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(self.point(j, s)) {
                *o += p;
            }
        }
    }
}

/// Parses and validates a codebook file (see [`Codebook::from_json`] for the schema).
pub fn load_codebook(path: impl AsRef<Path>) -> crate::Result<Codebook> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| crate::Error::io(path, e))?;
    Ok(Codebook::from_json(&text)?)
}

/// Maps an m-bit group (big-endian) to its codeword.
pub fn encode_user<'a>(bits: &[u8], user: &'a UserCodebook) -> &'a [Complex64] {
    debug_assert_eq!(1usize << bits.len(), user.codewords.len());
    user.codeword(super::bits_to_index(bits))
}

/// Gain-weighted sum of one codeword per user, serialized as (re, im) per resource.
///
/// Gains act component-wise on the interleaved layout: slot `2k` scales the real
/// part on resource `k` and slot `2k+1` the imaginary part.
pub fn superpose(codewords: &[&[Complex64]], gains: &ChannelGain) -> Vec<f64> {
    let resources = gains.len() / 2;
    let mut out = vec![0.0; 2 * resources];
    for cw in codewords {
        debug_assert_eq!(cw.len(), resources);
        for (k, v) in cw.iter().enumerate() {
            out[2 * k] += gains.get(2 * k) * v.re;
            out[2 * k + 1] += gains.get(2 * k + 1) * v.im;
        }
    }
    out
}
