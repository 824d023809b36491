//! Thresholds for the empirical trend checks. These come from pilot runs at
//! desk scale, not from asymptotic statements, and are the single place the
//! experiment harness and the acceptance suite read them from.

/// Largest least-squares slope of the median distance per doubling of `n`
/// still called non-growing.
pub const FLAT_SLOPE_PER_DOUBLING: f64 = 0.1;

/// Fraction of sweep repetitions whose medians must increase strictly.
pub const GROWTH_REPEAT_FRACTION: f64 = 0.8;

/// Cells whose flatness exponent is within this relative distance of the
/// critical value carry no assertion.
pub const NEAR_CRITICAL_REL: f64 = 0.1;

/// Minimum share of the requested pairs that must yield distances before a
/// cell reports a median.
pub const MIN_PAIR_SHARE: f64 = 0.5;

/// Decades of weight holding fewer vertices are not used for ratios.
pub const RELIABLE_DECADE_MIN: usize = 30;

/// Largest spread of degree/weight ratios across reliable decades.
pub const DEGREE_RATIO_SPREAD: f64 = 10.0;

/// Minimum number of exceedances for a tail estimate.
pub const MIN_EXCEEDANCES: usize = 100;

/// Pairs per bin needed for the kernel comparison.
pub const KERNEL_MIN_BIN_PAIRS: usize = 500;

/// Largest absolute gap between observed and predicted connection frequency.
pub const KERNEL_MAX_DEVIATION: f64 = 0.05;

/// Growth per doubling of the side required of the outward counts.
pub const ASYMMETRY_OUTWARD_GROWTH: f64 = 1.5;

/// Fraction of repetition batches that must show the asymmetry.
pub const ASYMMETRY_BATCH_FRACTION: f64 = 0.9;

/// Required decay factor per step of the self-avoiding path counts.
pub const SAW_DECAY_FACTOR: f64 = 1.5;

/// Fraction of runs in which every annulus must be half good.
pub const BOXING_F1_FRACTION: f64 = 0.9;

/// Giant component: minimum fraction at the smaller size, minimum retained
/// share at the larger size, maximum second-largest fraction.
pub const GIANT_MIN_FRACTION: f64 = 0.1;
pub const GIANT_RETAINED_SHARE: f64 = 0.5;
pub const GIANT_MAX_SECOND: f64 = 0.05;

/// Tolerances of tail-exponent estimates.
pub const DEGREE_TAIL_TOLERANCE: f64 = 0.3;
pub const HRG_TAIL_TOLERANCE: f64 = 0.2;
