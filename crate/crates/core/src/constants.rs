//! Physical constants (SI).

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant, J s (CODATA 2018).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Unified atomic mass unit, kg (CODATA 2018).
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
