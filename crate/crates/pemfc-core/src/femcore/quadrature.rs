//! Fixed quadrature rules.
//!
//! Triangle rules are given in barycentric coordinates with weights that sum
//! to one; multiply by the element area. Edge rules are given on [0,1] with
//! weights that sum to one; multiply by the edge length.

/// (barycentric coordinates, weight)
pub type TriPoint = ([f64; 3], f64);
/// (parameter in [0,1], weight)
pub type EdgePoint = (f64, f64);

/// Midpoint rule, exact for degree 2. The workhorse for P1 mass/stiffness
/// terms and L2 norms of P1 fields.
pub const TRI_MIDPOINT: [TriPoint; 3] = [
    ([0.5, 0.5, 0.0], 1.0 / 3.0),
    ([0.0, 0.5, 0.5], 1.0 / 3.0),
    ([0.5, 0.0, 0.5], 1.0 / 3.0),
];

const W4A: f64 = 0.223_381_589_678_011;
const A4A: f64 = 0.445_948_490_915_965;
const W4B: f64 = 0.109_951_743_655_322;
const A4B: f64 = 0.091_576_213_509_771;

/// Six-point rule, exact for degree 4. Used for L4 norms of P1 fields.
pub const TRI_DEG4: [TriPoint; 6] = [
    ([A4A, A4A, 1.0 - 2.0 * A4A], W4A),
    ([A4A, 1.0 - 2.0 * A4A, A4A], W4A),
    ([1.0 - 2.0 * A4A, A4A, A4A], W4A),
    ([A4B, A4B, 1.0 - 2.0 * A4B], W4B),
    ([A4B, 1.0 - 2.0 * A4B, A4B], W4B),
    ([1.0 - 2.0 * A4B, A4B, A4B], W4B),
];

const W5A: f64 = 0.132_394_152_788_506;
const A5A: f64 = 0.470_142_064_105_115;
const W5B: f64 = 0.125_939_180_544_827;
const A5B: f64 = 0.101_286_507_323_456;

/// Seven-point rule, exact for degree 5. Used for manufactured-solution
/// loads, where the integrand is not polynomial.
pub const TRI_DEG5: [TriPoint; 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([A5A, A5A, 1.0 - 2.0 * A5A], W5A),
    ([A5A, 1.0 - 2.0 * A5A, A5A], W5A),
    ([1.0 - 2.0 * A5A, A5A, A5A], W5A),
    ([A5B, A5B, 1.0 - 2.0 * A5B], W5B),
    ([A5B, 1.0 - 2.0 * A5B, A5B], W5B),
    ([1.0 - 2.0 * A5B, A5B, A5B], W5B),
];

const G2: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Two-point Gauss rule on [0,1], exact for degree 3. Used for all boundary
/// and interface terms of P1 traces.
pub const EDGE_GAUSS2: [EdgePoint; 2] = [(0.5 * (1.0 - G2), 0.5), (0.5 * (1.0 + G2), 0.5)];

const G4A: f64 = 0.339_981_043_584_856_3;
const G4B: f64 = 0.861_136_311_594_052_6;
const W4GA: f64 = 0.652_145_154_862_546_1;
const W4GB: f64 = 0.347_854_845_137_453_9;

/// Four-point Gauss rule on [0,1], exact for degree 7. Used for
/// manufactured edge loads.
pub const EDGE_GAUSS4: [EdgePoint; 4] = [
    (0.5 * (1.0 - G4B), 0.5 * W4GB),
    (0.5 * (1.0 - G4A), 0.5 * W4GA),
    (0.5 * (1.0 + G4A), 0.5 * W4GA),
    (0.5 * (1.0 + G4B), 0.5 * W4GB),
];
