//! Shared fixtures for the kernel benchmarks.

use num_complex::Complex64;

use juliatherm_core::MapSpec;

pub fn chebyshev() -> MapSpec {
    MapSpec::quadratic(Complex64::new(-2.0, 0.0))
}

pub fn misiurewicz() -> MapSpec {
    MapSpec::quadratic(Complex64::new(0.0, 1.0))
}

pub fn hyperbolic() -> MapSpec {
    MapSpec::quadratic(Complex64::new(0.1, 0.0))
}
