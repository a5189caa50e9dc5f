// SPDX-License-Identifier: MIT
//! Enumeration caps shared by the analyses.

/// Environment variable that overrides the enumeration caps in the CLI.
pub const MAX_ENUM_ENV: &str = "CAUSAL_ACCOUNT_MAX_ENUM";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of paths collected by a single path enumeration.
    pub max_paths: usize,
    /// Maximum size of the exogenous/latent space, in binary-equivalent variables.
    pub max_enum_bits: u32,
    /// Maximum size of the candidate pool for adjustment-set enumeration.
    pub max_adjustment_pool: usize,
    /// Largest front-door candidate set tried.
    pub max_frontdoor_size: usize,
    /// Maximum number of complete role bindings examined by the pattern matcher.
    pub max_bindings: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_paths: 100_000,
            max_enum_bits: 20,
            max_adjustment_pool: 16,
            max_frontdoor_size: 4,
            max_bindings: 10_000,
        }
    }
}

impl Limits {
    /// Defaults, with the exogenous-enumeration and adjustment-pool caps taken
    /// from [`MAX_ENUM_ENV`] when it holds a positive integer.
    pub fn from_env() -> Self {
        let mut limits = Self::default();
        if let Some(cap) =
            std::env::var(MAX_ENUM_ENV).ok().and_then(|v| v.trim().parse::<u32>().ok()).filter(|&v| v > 0)
        {
            limits.max_enum_bits = cap;
            limits.max_adjustment_pool = cap as usize;
        }
        limits
    }
}
