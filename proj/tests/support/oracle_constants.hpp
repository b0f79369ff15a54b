#pragma once

// Frozen reference eigenvalues for the 1D interval operators, generated once
// by scripts/gen_oracles.py (50-digit shooting + bisection with mpmath,
// cross-checked against an independent finite-difference discretization to
// ~1e-9).  Regenerate with the script only if a convention changes; tests
// compare against these literals, not against the script.
//
// Conventions (must match robinspec::EndCondition):
//   Robin(beta): outward derivative = beta * u, beta > 0 attractive.
//   rnL_m:      -u'' on (0, L), Robin(1) left, Neumann right, m-th eigenvalue.
//   rr_aA_m:    -u'' on (0, 1), Robin(A) at both ends, m-th eigenvalue.
//   rd_a12_d08: -u'' on (0, 0.8), Robin(12) left, Dirichlet right.
//   dd_pi_m:    -u'' on (0, pi), Dirichlet both ends (exact: m^2).

namespace oracle {

// Robin(1)/Neumann, length 10
inline constexpr double rn10_1 = -1.000000008244613844;
inline constexpr double rn10_2 = 0.030394494815047577207;
inline constexpr double rn10_3 = 0.26948730185838003667;

// Robin(1)/Neumann, length 15
inline constexpr double rn15_1 = -1.0000000000003743049;
inline constexpr double rn15_2 = 0.012581298829569767781;
inline constexpr double rn15_3 = 0.11273106044750567224;
inline constexpr double rn15_4 = 0.31081132185765363802;

// Robin(1)/Neumann, length 20
inline constexpr double rn20_1 = -1.000000000000000017;
inline constexpr double rn20_2 = 0.0068332743089349552374;

// Robin(1)/Neumann, length 30
inline constexpr double rn30_1 = -1.0;
inline constexpr double rn30_2 = 0.0029336920291001536671;

// Robin(10)/Robin(10), length 1: the two negative eigenvalues are an
// exponentially split pair around -100.
inline constexpr double rr_a10_1 = -100.0181451503979327;
inline constexpr double rr_a10_2 = -99.981825168932774415;
inline constexpr double rr_a10_3 = 15.071598364718663936;
inline constexpr double rr_a10_4 = 57.463142707637912209;

// Robin(20)/Robin(20), length 1
inline constexpr double rr_a20_1 = -400.0000032978455376;
inline constexpr double rr_a20_2 = -399.9999967021539458;
inline constexpr double rr_a20_3 = 12.157797926019030883;
inline constexpr double rr_a20_4 = 48.334205782999253585;

// Robin(40)/Robin(40), length 1: the pair split is ~5e-14 (below double
// resolution of each root separately, but the solver must still return two
// correctly indexed values).
inline constexpr double rr_a40_1 = -1600.0000000000000272;
inline constexpr double rr_a40_2 = -1599.9999999999999728;
inline constexpr double rr_a40_3 = 10.93323889429592838;
inline constexpr double rr_a40_4 = 43.702179233201403545;

// Robin(12)/Dirichlet, length 0.8
inline constexpr double rd_a12_d08_1 = -143.99999735778287275;
inline constexpr double rd_a12_d08_2 = 19.034769787232854142;

// Dirichlet/Dirichlet, length pi
inline constexpr double dd_pi_1 = 1.0;
inline constexpr double dd_pi_2 = 4.0;
inline constexpr double dd_pi_3 = 9.0;

}  // namespace oracle
