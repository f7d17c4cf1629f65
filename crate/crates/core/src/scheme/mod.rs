//! Atomic-physics realization of the disentangler.

pub mod assumptions;
pub mod five_level;
pub mod lasers;
pub mod mapping;
pub mod oracle;
pub mod reduction;
pub mod sampling;
pub mod toy;
