import pytest

from model_params import AssetParams, CostSpec, UtilityFamily, UtilitySpec


@pytest.fixture
def table_asset():
    return AssetParams(mu=0.09, sigma=0.30)


@pytest.fixture
def table_costs():
    return CostSpec(0.01, 0.01)


@pytest.fixture
def sale_costs():
    return CostSpec.with_preset(0.01, 0.01, "sale")


@pytest.fixture
def baseline_utility():
    return UtilitySpec(UtilityFamily.SCALED_TK, alpha_g=0.5, alpha_l=0.5, lam=2.5, beta=0.3, delta=0.05)


@pytest.fixture
def modified_utility():
    """Modified-TK block with alpha_L = 8, the row used by the mixture checks."""
    return UtilitySpec(UtilityFamily.MODIFIED_TK, alpha_g=0.5, alpha_l=8.0, lam=2.0, beta=0.0, delta=0.05)


@pytest.fixture
def fit_thresholds():
    return 0.772, 1.277
