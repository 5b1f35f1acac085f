"""
Population parameters along a sequence of curves
================================================

As ``alpha_n`` grows the stage-n curve approaches a step, the population
stump converges to ``(theta0, 0, 1)`` and the biases shrink like
``1 / alpha_n``.
"""

from cpmisspec import ModelSpec, asymptotic_constants, builtin_logistic, solve_population

for alpha in (10.0, 100.0, 1000.0, 10000.0):
    spec = ModelSpec(builtin_logistic(1.0), theta0=0.3, sigma=1.0, alpha=alpha)
    sol = solve_population(spec)
    print(f"alpha {alpha:>7g}: theta^n - theta0 = {sol.theta_n - 0.3:+.2e}, "
          f"alpha beta_l^n = {alpha * sol.beta_l_n:.4f}, "
          f"alpha (beta_u^n - 1) = {alpha * (sol.beta_u_n - 1):.4f}")

const = asymptotic_constants(ModelSpec(builtin_logistic(1.0), 0.3, 1.0, alpha=1.0))
print("limits:", {k: round(v, 4) for k, v in const.level_bias_limits().items()})
print(f"Chernoff constants a = {const.a:.3f}, b = {const.b:.3f} "
      f"(known levels: b = {const.b_one_param:.3f})")
