use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessMode {
    /// `N < K`: each codeword occupies a strict subset of the resources.
    Sparse,
    /// `N = K`: every user spreads over every resource.
    Dense,
}

/// SCMA dimensioning constants.
///
/// `users` (J) share `resources` (K) sub-carriers; every user owns a codebook of
/// `codebook_size` (M) codewords carrying `bits_per_symbol` (m = log2 M) bits,
/// each codeword having `nonzero_per_codeword` (N) non-zero entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub users: usize,
    pub resources: usize,
    pub codebook_size: usize,
    pub bits_per_symbol: usize,
    pub nonzero_per_codeword: usize,
}

impl SystemConfig {
    /// Validates the structural invariants that every detector relies on.
    ///
    /// Overloading (`K < J`) is not enforced here so that small orthogonal
    /// geometries remain expressible; see [`SystemConfig::validate_overloaded`].
    pub fn new(
        users: usize,
        resources: usize,
        codebook_size: usize,
        nonzero_per_codeword: usize,
    ) -> Result<Self, ModelError> {
        if users == 0 || resources == 0 || nonzero_per_codeword == 0 {
            return Err(ModelError::Config("J, K and N must be positive".into()));
        }
        if codebook_size < 2 || !codebook_size.is_power_of_two() {
            return Err(ModelError::Config(format!(
                "codebook size M={codebook_size} must be a power of two >= 2"
            )));
        }
        if nonzero_per_codeword > resources {
            return Err(ModelError::Config(format!(
                "N={nonzero_per_codeword} exceeds K={resources}"
            )));
        }
        Ok(Self {
            users,
            resources,
            codebook_size,
            bits_per_symbol: codebook_size.trailing_zeros() as usize,
            nonzero_per_codeword,
        })
    }

    /// The 6-user, 4-resource, M=4, N=2 system used throughout the evaluation.
    pub fn canonical() -> Self {
        Self::new(6, 4, 4, 2).expect("canonical configuration is valid")
    }

    /// Checks `K < J` and, in sparse mode, `N < K`.
    pub fn validate_overloaded(&self) -> Result<(), ModelError> {
        if self.resources >= self.users {
            return Err(ModelError::Config(format!(
                "K={} must be smaller than J={} for an overloaded system",
                self.resources, self.users
            )));
        }
        Ok(())
    }

    pub fn mode(&self) -> AccessMode {
        if self.nonzero_per_codeword < self.resources {
            AccessMode::Sparse
        } else {
            AccessMode::Dense
        }
    }

    /// Overlap degree `d_f = J·N/K`, or `None` when it is not an integer.
    pub fn overlap_degree(&self) -> Option<usize> {
        let num = self.users * self.nonzero_per_codeword;
        (num % self.resources == 0).then_some(num / self.resources)
    }

    /// Overloading ratio `λ = J/K`.
    pub fn overload_ratio(&self) -> f64 {
        self.users as f64 / self.resources as f64
    }

    /// Information bits carried by one frame (`m·J`).
    pub fn frame_bits(&self) -> usize {
        self.bits_per_symbol * self.users
    }

    /// Real width of a received frame (`2K`).
    pub fn signal_width(&self) -> usize {
        2 * self.resources
    }

    /// Number of joint symbol hypotheses `M^J`, saturating on overflow.
    pub fn joint_hypotheses(&self) -> usize {
        (0..self.users).fold(1usize, |acc, _| acc.saturating_mul(self.codebook_size))
    }

    pub fn with_nonzero(mut self, nonzero: usize) -> Result<Self, ModelError> {
        if nonzero == 0 || nonzero > self.resources {
            return Err(ModelError::Config(format!("N={nonzero} out of range 1..={}", self.resources)));
        }
        self.nonzero_per_codeword = nonzero;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_derived_quantities() {
        let cfg = SystemConfig::canonical();
        assert_eq!(cfg.bits_per_symbol, 2);
        assert_eq!(cfg.overlap_degree(), Some(3));
        assert!((cfg.overload_ratio() - 1.5).abs() < 1e-15);
        assert_eq!(cfg.joint_hypotheses(), 4096);
        assert_eq!(cfg.frame_bits(), 12);
        assert_eq!(cfg.mode(), AccessMode::Sparse);
        cfg.validate_overloaded().unwrap();
    }

    #[test]
    fn rejects_non_power_of_two_codebooks() {
        assert!(SystemConfig::new(6, 4, 3, 2).is_err());
        assert!(SystemConfig::new(6, 4, 4, 5).is_err());
        assert!(SystemConfig::new(0, 4, 4, 2).is_err());
    }

    #[test]
    fn dense_mode_and_non_integer_overlap() {
        let dense = SystemConfig::new(6, 4, 4, 4).unwrap();
        assert_eq!(dense.mode(), AccessMode::Dense);
        assert_eq!(dense.overlap_degree(), Some(6));
        let odd = SystemConfig::new(3, 2, 2, 1).unwrap();
        assert_eq!(odd.overlap_degree(), None);
        assert!(SystemConfig::new(2, 2, 2, 1).unwrap().validate_overloaded().is_err());
    }
}
