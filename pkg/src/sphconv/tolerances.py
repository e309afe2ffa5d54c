"""Fixed tolerances and slope windows for the rate studies.

Slope windows sit roughly 0.15-0.3 around the theoretical exponent; at desk
scale (tens of seeds, a few thousand grid points) the fitted slopes fluctuate by
about that much from Monte-Carlo noise.
"""

# relative l-infinity reconvolution error accepted from factorize_filter
FACTOR_REL_TOL = 1e-6

# |h^(J)_{kd} - B_J - <y_k, x>|
FEATURE_TOL = 1e-8

# network output vs. its closed-form spline target
CLOSED_FORM_TOL = 1e-8

# L_t reproduces linear functions; the ReLU form of L_t matches the hat form
LINEAR_REPRO_TOL = 1e-10
SPLINE_IDENTITY_TOL = 1e-10

# Toeplitz product route vs. convolved-filter route, entrywise
TOEPLITZ_CHAIN_TOL = 1e-10

# sup |f - L_n f| ~ n^{-r} or faster for the calibrated decay family
NEAR_BEST_SLOPE_SLACK = 0.3

# sup |L_hat - L_n| ~ m^{-1/2}
DISCRETIZATION_SLOPE_WINDOW = (-0.65, -0.35)
DISCRETIZATION_RATIO_WINDOW = (0.6, 0.85)

# additive ridge |u - c|: sup error ~ N^{-1}
RIDGE_SLOPE_WINDOW = (-1.2, -0.8)

# seed-averaged error at depth J may exceed the best earlier value by this factor
TREND_FACTOR = 1.5

# relative slack when comparing a measured error against an analytic bound
BOUND_RTOL = 1e-9
