"""Mixed p-spin glasses at high temperature: critical temperatures, cluster census and CLT checks."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .census import ClusterStructure, closed_form_count, count_clusters, u_constant, v_constant
from .critical import MultiSpeciesSpec, beta_c, multi_species_beta_c, phi_inverse_beta_c, sweep, talagrand_lower_bound
from .errors import BudgetError, DomainError, GlasslabError, SpecError, UnsupportedTemplateError
from .model import ExternalField, MixtureSpec
from .partition import DisorderSample, EnsembleConfig, exact_partition, run_ensemble, truncated_zhat
from .regimes import alpha_critical, classify, variance_exponent
from .stein import SteinConfig, conditional_variance_diagnostic, linearity_by_profile, linearity_check, third_moment_diagnostic

__all__ = [
    "BudgetError", "ClusterStructure", "DisorderSample", "DomainError", "EnsembleConfig", "ExternalField",
    "GlasslabError", "MixtureSpec", "MultiSpeciesSpec", "SpecError", "SteinConfig", "UnsupportedTemplateError",
    "alpha_critical", "beta_c", "classify", "closed_form_count", "conditional_variance_diagnostic",
    "count_clusters", "exact_partition", "linearity_by_profile", "linearity_check", "multi_species_beta_c", "phi_inverse_beta_c",
    "run_ensemble", "sweep", "talagrand_lower_bound", "third_moment_diagnostic", "truncated_zhat",
    "u_constant", "v_constant", "variance_exponent",
]
