# Setup check: the numerical stack imports and one policy solves
import sys

sys.path.insert(0, "data/code")

import numpy as np
import pandas as pd
import scipy

from model_params import AssetParams, CostSpec, UtilityFamily, UtilitySpec
from policy_engine import critical_lambda, optimize_policy

print("All libraries imported successfully!")
print(f"  numpy {np.__version__}, scipy {scipy.__version__}, pandas {pd.__version__}\n")

asset = AssetParams(mu=0.09, sigma=0.30)
costs = CostSpec.with_preset(0.01, 0.01, "sale")
u = UtilitySpec(UtilityFamily.SCALED_TK, alpha_g=0.5, alpha_l=0.5, lam=2.5, beta=0.3, delta=0.05)

policy = optimize_policy(u, asset, costs)
print("Optimal policy test:")
print(f"  regime {policy.regime.value}, theta {policy.theta:.3f}, Theta {policy.theta_big:.3f}")
print(f"  lambda* {critical_lambda(u, asset, costs).lambda_star:.3f}")

print("\nSetup complete!")
